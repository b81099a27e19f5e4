use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hilo_fusion::dataset::{
    file_sha256, json_sha256, read_json, read_jsonl, write_json, write_jsonl, DatasetRecord, EstimateRecord,
};
use hilo_fusion::parity::{check_parity, ParityFixture, DEFAULT_PARITY_TOLERANCE};
use hilo_fusion::report::{
    cross_domain_matrix, evaluate, matrix_csv, matrix_summary, Artifact, EvalReport, MatrixSource, MatrixTarget,
    Provenance,
};
use hilo_fusion::run::{fuse_dataset, Fuser};
use hilo_fusion::sim::{combine, generate_dataset, read_dataset, DomainPreset, SimConfig};
use hilo_fusion::tune::{tune, SearchSpace};
use hilo_fusion::weights_io::{load_weights, random_weights, save_weights};
use hilo_fusion_core::akf::{Method, PipelineConfig};
use hilo_fusion_core::eval::DEFAULT_IOU_THRESHOLD;
use hilo_fusion_core::hilo::{HiloHyperParams, HiloModel};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hilo-fusion", version, about = "Multi-sensor object fusion experiments")]
struct Cli {
    /// Worker threads; the HILO_JOBS environment variable overrides this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Highway,
    Urban,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Akf,
    Akfa,
    Hilo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Akf => Method::Akf,
            MethodArg::Akfa => Method::Akfa,
            MethodArg::Hilo => Method::Hilo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: train/val/test JSON Lines plus manifest.
    Simulate {
        /// Domain preset; replaces the preset inside --config when both are given.
        #[arg(long, value_enum, required_unless_present = "config")]
        preset: Option<Preset>,
        /// Full simulator config (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge two datasets, keeping every second sample of each.
    Combine {
        #[arg(long, num_args = 2, required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse every sample of a dataset split and write the estimates.
    Fuse {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Pipeline config (JSON) for akf and akfa; defaults if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Weight file for hilo.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score estimates against annotations, or run a cross-domain matrix.
    Eval {
        #[arg(long, required_unless_present = "matrix")]
        estimates: Option<PathBuf>,
        #[arg(long, required_unless_present = "matrix")]
        data: Option<PathBuf>,
        /// Matrix spec (JSON); writes matrix.csv, matrix.md and cells.json.
        #[arg(long, conflicts_with_all = ["estimates", "data"])]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        /// Report file, or output directory with --matrix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random search over pipeline parameters on a validation split.
    Tune {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting config for the fields the search leaves alone.
        #[arg(long)]
        base: Option<PathBuf>,
        /// Search ranges (JSON).
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the header and tensor table of a weight file.
    InspectWeights { path: PathBuf },
    /// Write untrained weights.
    InitWeights {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hyperparameters (JSON); defaults if omitted.
        #[arg(long)]
        hyper: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a parity fixture against a weight file.
    Parity {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PARITY_TOLERANCE)]
        tolerance: f64,
    },
}

fn jobs(cli_jobs: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("HILO_JOBS") {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("HILO_JOBS={v:?} is not a count"))?,
        )),
        Err(_) => Ok(cli_jobs),
    }
}

fn snapshot_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn load_pipeline(path: Option<&Path>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => read_json(p)?,
        None => PipelineConfig::default(),
    };
    Ok(cfg)
}

fn load_model(path: &Path) -> Result<HiloModel> {
    let wf = load_weights(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(HiloModel::new(wf.hyper_params, &wf.weights)?)
}

fn build_fuser(method: Method, config: Option<&Path>, weights: Option<&Path>) -> Result<(Fuser, serde_json::Value)> {
    match method {
        Method::Hilo => {
            let Some(w) = weights else {
                bail!("--method hilo needs --weights")
            };
            let model = load_model(w)?;
            let resolved = json!({
                "weights": w.display().to_string(),
                "weights_sha256": file_sha256(w)?,
                "hyper_params": model.hyper_params(),
                "param_count": model.param_count(),
            });
            Ok((Fuser::hilo(model), resolved))
        }
        _ => {
            let cfg = load_pipeline(config)?;
            let resolved = serde_json::to_value(&cfg)?;
            Ok((Fuser::pipeline(method, cfg)?, resolved))
        }
    }
}

fn cmd_simulate(preset: Option<Preset>, config: Option<&Path>, samples: usize, seed: u64, out: &Path) -> Result<()> {
    let mut cfg: SimConfig = match config {
        Some(p) => read_json(p)?,
        None => SimConfig::default(),
    };
    if let Some(p) = preset {
        cfg.preset = match p {
            Preset::Highway => DomainPreset::highway(),
            Preset::Urban => DomainPreset::urban(),
        };
    }
    let data = generate_dataset(&cfg, samples, seed)?;
    data.write(out)?;
    write_json(
        &out.join("run.json"),
        &json!({"command": "simulate", "version": env!("CARGO_PKG_VERSION"), "seed": seed, "samples": samples, "config": cfg}),
    )?;
    println!(
        "wrote {} ({} train / {} val / {} test samples)",
        out.display(),
        data.splits[0].len(),
        data.splits[1].len(),
        data.splits[2].len()
    );
    Ok(())
}

fn cmd_combine(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let a = read_dataset(&inputs[0])?;
    let b = read_dataset(&inputs[1])?;
    let c = combine(&a, &b);
    c.write(out)?;
    write_json(
        &out.join("run.json"),
        &json!({"command": "combine", "version": env!("CARGO_PKG_VERSION"),
                "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()}),
    )?;
    println!("wrote {} ({} samples)", out.display(), c.manifest.samples);
    Ok(())
}

fn cmd_fuse(method: Method, config: Option<&Path>, weights: Option<&Path>, data: &Path, out: &Path) -> Result<()> {
    let (fuser, resolved) = build_fuser(method, config, weights)?;
    let records: Vec<DatasetRecord> = read_jsonl(data)?;
    let fused = fuse_dataset(&fuser, &records)?;
    ensure_parent(out)?;
    write_jsonl(out, &fused.estimates)?;
    let mut timing_path = out.as_os_str().to_owned();
    timing_path.push(".timing.json");
    write_json(Path::new(&timing_path), &fused.timing)?;
    write_json(
        &snapshot_path(out),
        &json!({"command": "fuse", "version": env!("CARGO_PKG_VERSION"), "method": method.name(),
                "data": data.display().to_string(), "data_sha256": file_sha256(data)?, "config": resolved}),
    )?;
    let t = fused.timing;
    println!(
        "{} samples, latency ms: mean {:.3} median {:.3} p99 {:.3} max {:.3}",
        t.samples, t.mean_ms, t.median_ms, t.p99_ms, t.max_ms
    );
    Ok(())
}

fn cmd_eval(estimates: &Path, data: &Path, iou: f64, out: Option<&Path>) -> Result<()> {
    let est: Vec<EstimateRecord> = read_jsonl(estimates)?;
    let records: Vec<DatasetRecord> = read_jsonl(data)?;
    let (counts, metrics) = evaluate(&est, &records, iou)?;
    let manifest = data.with_file_name("manifest.json");
    let mut config = estimates.as_os_str().to_owned();
    config.push(".run.json");
    let config = PathBuf::from(config);
    let report = EvalReport {
        metrics,
        counts,
        iou_threshold: iou,
        samples: records.len(),
        provenance: Provenance {
            estimates_sha256: Some(file_sha256(estimates)?),
            dataset_sha256: Some(file_sha256(data)?),
            config_sha256: config.exists().then(|| file_sha256(&config)).transpose()?,
            manifest_sha256: manifest.exists().then(|| file_sha256(&manifest)).transpose()?,
        },
    };
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => {
            ensure_parent(p)?;
            write_json(p, &report)?;
            write_json(
                &snapshot_path(p),
                &json!({"command": "eval", "version": env!("CARGO_PKG_VERSION"), "iou_threshold": iou,
                        "estimates": estimates.display().to_string(), "data": data.display().to_string()}),
            )?;
        }
        None => println!("{text}"),
    }
    if report.metrics.flags.any() {
        eprintln!("note: some metrics had empty denominators: {:?}", report.metrics.flags);
    }
    Ok(())
}

/// Cross-domain matrix description. Paths are relative to the spec file.
#[derive(Serialize, Deserialize)]
struct MatrixSpec {
    #[serde(default = "default_iou")]
    iou_threshold: f64,
    /// Target name to test split.
    targets: std::collections::BTreeMap<String, PathBuf>,
    sources: Vec<MatrixSourceSpec>,
}

fn default_iou() -> f64 {
    DEFAULT_IOU_THRESHOLD
}

#[derive(Serialize, Deserialize)]
struct MatrixSourceSpec {
    name: String,
    akf: Option<PathBuf>,
    akfa: Option<PathBuf>,
    hilo: Option<PathBuf>,
}

fn cmd_matrix(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: MatrixSpec = read_json(spec_path)?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    let mut sources = Vec::new();
    for s in &spec.sources {
        let mut artifacts = Vec::new();
        for (method, path) in [(Method::Akf, &s.akf), (Method::Akfa, &s.akfa), (Method::Hilo, &s.hilo)] {
            // methods a source does not name are left out; named but absent
            // files become missing cells
            let Some(p) = path.as_deref().map(resolve) else {
                continue;
            };
            let artifact = if p.exists() {
                let sha256 = file_sha256(&p)?;
                let fuser = match method {
                    Method::Hilo => Fuser::hilo(load_model(&p)?),
                    _ => Fuser::pipeline(method, read_json(&p)?)?,
                };
                Some(Artifact { fuser, sha256 })
            } else {
                None
            };
            artifacts.push((method, artifact));
        }
        sources.push(MatrixSource {
            name: s.name.clone(),
            artifacts,
        });
    }
    let mut loaded = Vec::new();
    for (name, path) in &spec.targets {
        let p = resolve(path);
        loaded.push((name.clone(), read_jsonl::<DatasetRecord>(&p)?, file_sha256(&p)?));
    }
    let targets: Vec<MatrixTarget> = loaded
        .iter()
        .map(|(name, records, sha256)| MatrixTarget {
            name: name.clone(),
            records,
            sha256: sha256.clone(),
        })
        .collect();
    let cells = cross_domain_matrix(&sources, &targets, spec.iou_threshold)?;
    ensure_dir(out)?;
    std::fs::write(out.join("matrix.csv"), matrix_csv(&cells))?;
    let summary = matrix_summary(&cells);
    std::fs::write(out.join("matrix.md"), &summary)?;
    write_json(&out.join("cells.json"), &cells)?;
    write_json(
        &out.join("run.json"),
        &json!({"command": "eval --matrix", "version": env!("CARGO_PKG_VERSION"),
                "spec": spec, "spec_sha256": file_sha256(spec_path)?}),
    )?;
    print!("{summary}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    method: Method,
    data: &Path,
    budget: usize,
    seed: u64,
    base: Option<&Path>,
    space: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let base_cfg = load_pipeline(base)?;
    let space_cfg: SearchSpace = match space {
        Some(p) => read_json(p)?,
        None => SearchSpace::default(),
    };
    let records: Vec<DatasetRecord> = read_jsonl(data)?;
    let result = tune(method, &base_cfg, &space_cfg, &records, budget, seed)?;
    ensure_dir(out)?;
    write_json(&out.join("best.json"), &result.best)?;
    write_jsonl(&out.join("trials.jsonl"), &result.trials)?;
    write_json(
        &out.join("run.json"),
        &json!({"command": "tune", "version": env!("CARGO_PKG_VERSION"), "method": method.name(), "seed": seed,
                "budget": budget, "data": data.display().to_string(), "data_sha256": file_sha256(data)?,
                "base": base_cfg, "space": space_cfg, "space_sha256": json_sha256(&space_cfg)}),
    )?;
    println!(
        "best trial {} of {}: objective {:.4}",
        result.best_trial,
        result.trials.len(),
        result.best_objective
    );
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let wf = load_weights(path)?;
    println!("{}", serde_json::to_string_pretty(&wf.hyper_params)?);
    println!("parameters: {}", wf.param_count);
    for t in &wf.weights.tensors {
        println!("{:<44} {:?}", t.name, t.shape);
    }
    Ok(())
}

fn cmd_init(seed: u64, hyper: Option<&Path>, out: &Path) -> Result<()> {
    let hp: HiloHyperParams = match hyper {
        Some(p) => read_json(p)?,
        None => HiloHyperParams::default(),
    };
    hp.validate()?;
    ensure_parent(out)?;
    save_weights(out, &hp, &random_weights(&hp, seed))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_parity(weights: &Path, fixture: &Path, tolerance: f64) -> Result<()> {
    let model = load_model(weights)?;
    let fx: ParityFixture = read_json(fixture)?;
    let report = check_parity(&model, &fx, tolerance)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.passed {
        bail!("max abs error {} exceeds {}", report.max_abs_error, tolerance);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = jobs(cli.jobs)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Simulate {
            preset,
            config,
            samples,
            seed,
            out,
        } => cmd_simulate(preset, config.as_deref(), samples, seed, &out),
        Command::Combine { inputs, out } => cmd_combine(&inputs, &out),
        Command::Fuse {
            method,
            config,
            weights,
            data,
            out,
        } => cmd_fuse(method.into(), config.as_deref(), weights.as_deref(), &data, &out),
        Command::Eval {
            estimates,
            data,
            matrix,
            iou,
            out,
        } => match matrix {
            Some(spec) => cmd_matrix(&spec, out.as_deref().unwrap_or(Path::new("matrix"))),
            None => cmd_eval(
                estimates.as_deref().expect("required by clap"),
                data.as_deref().expect("required by clap"),
                iou,
                out.as_deref(),
            ),
        },
        Command::Tune {
            method,
            data,
            budget,
            seed,
            base,
            space,
            out,
        } => cmd_tune(
            method.into(),
            &data,
            budget,
            seed,
            base.as_deref(),
            space.as_deref(),
            &out,
        ),
        Command::InspectWeights { path } => cmd_inspect(&path),
        Command::InitWeights { seed, hyper, out } => cmd_init(seed, hyper.as_deref(), &out),
        Command::Parity {
            weights,
            fixture,
            tolerance,
        } => cmd_parity(&weights, &fixture, tolerance),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
