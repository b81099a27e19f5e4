//! Metric reports and the cross-domain result matrix.

use std::fmt::Write as _;

use hilo_fusion_core::akf::Method;
use hilo_fusion_core::eval::{compute_metrics, match_sample, EvalAccumulator, LabeledBox, MetricReport, SampleMatch};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_alignment, DatasetError, DatasetRecord, EstimateRecord};
use crate::run::{fuse_dataset, Fuser, RunError};

/// Matches every sample and accumulates counts in record order.
pub fn evaluate(
    estimates: &[EstimateRecord],
    records: &[DatasetRecord],
    iou_threshold: f64,
) -> Result<(EvalAccumulator, MetricReport), DatasetError> {
    check_alignment(estimates, records)?;
    let matches: Vec<SampleMatch> = estimates
        .par_iter()
        .zip(records.par_iter())
        .map(|(e, r)| {
            let est: Vec<LabeledBox> = e.objects.iter().map(LabeledBox::from).collect();
            let ann: Vec<LabeledBox> = r.annotations.iter().map(LabeledBox::from).collect();
            match_sample(&est, &ann, iou_threshold)
        })
        .collect();
    // sequential accumulation keeps the float sum order fixed
    let mut acc = EvalAccumulator::default();
    for m in &matches {
        acc.add(m);
    }
    Ok((acc, compute_metrics(&acc)))
}

/// Hashes tying a report to its inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub estimates_sha256: Option<String>,
    pub dataset_sha256: Option<String>,
    pub config_sha256: Option<String>,
    pub manifest_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: MetricReport,
    pub counts: EvalAccumulator,
    pub iou_threshold: f64,
    pub samples: usize,
    pub provenance: Provenance,
}

/// A tuned configuration or trained weights for one method and source.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub fuser: Fuser,
    /// Hash of the config or weight file the fuser came from.
    pub sha256: String,
}

#[derive(Clone, Debug)]
pub struct MatrixSource {
    pub name: String,
    /// One entry per method; `None` marks a missing artifact.
    pub artifacts: Vec<(Method, Option<Artifact>)>,
}

#[derive(Clone, Debug)]
pub struct MatrixTarget<'a> {
    pub name: String,
    pub records: &'a [DatasetRecord],
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub method: Method,
    pub source: String,
    pub target: String,
    /// `None` when the artifact was missing.
    pub report: Option<MetricReport>,
    pub artifact_sha256: Option<String>,
    pub dataset_sha256: String,
}

/// Evaluates every (method, source) artifact on every target test set.
/// Missing artifacts yield empty cells, not errors.
pub fn cross_domain_matrix(
    sources: &[MatrixSource],
    targets: &[MatrixTarget<'_>],
    iou_threshold: f64,
) -> Result<Vec<MatrixCell>, RunError> {
    let mut methods: Vec<Method> = Vec::new();
    for s in sources {
        for (m, _) in &s.artifacts {
            if !methods.contains(m) {
                methods.push(*m);
            }
        }
    }
    let mut cells = Vec::new();
    for &method in &methods {
        for source in sources {
            let artifact = source
                .artifacts
                .iter()
                .find(|(m, _)| *m == method)
                .and_then(|(_, a)| a.as_ref());
            for target in targets {
                let report = match artifact {
                    Some(a) => {
                        let fused = fuse_dataset(&a.fuser, target.records)?;
                        let (_, report) = evaluate(&fused.estimates, target.records, iou_threshold)
                            .expect("estimates come from the same records");
                        Some(report)
                    }
                    None => None,
                };
                cells.push(MatrixCell {
                    method,
                    source: source.name.clone(),
                    target: target.name.clone(),
                    report,
                    artifact_sha256: artifact.map(|a| a.sha256.clone()),
                    dataset_sha256: target.sha256.clone(),
                });
            }
        }
    }
    Ok(cells)
}

pub const CSV_HEADER: &str =
    "method,source,target,status,f1,precision,recall,class_precision,miou,artifact_sha256,dataset_sha256";

/// One row per cell; missing cells have empty metric fields.
pub fn matrix_csv(cells: &[MatrixCell]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        let (status, values) = match &c.report {
            Some(r) => ("ok", r.values().map(|v| format!("{v:.6}")).join(",")),
            None => ("missing", ",,,,".to_string()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{status},{values},{},{}",
            c.method.name(),
            c.source,
            c.target,
            c.artifact_sha256.as_deref().unwrap_or(""),
            c.dataset_sha256
        );
    }
    out
}

/// Human-readable table. Per target and metric, the best value is wrapped
/// in `**` and the second best in `_`.
pub fn matrix_summary(cells: &[MatrixCell]) -> String {
    let mut targets: Vec<&str> = Vec::new();
    for c in cells {
        if !targets.contains(&c.target.as_str()) {
            targets.push(&c.target);
        }
    }
    let mut out = String::new();
    for target in targets {
        let rows: Vec<&MatrixCell> = cells.iter().filter(|c| c.target == target).collect();
        let _ = writeln!(out, "target: {target}");
        let _ = writeln!(out, "| method | source | {} |", MetricReport::NAMES.join(" | "));
        let _ = writeln!(out, "|---|---|{}", "---|".repeat(MetricReport::NAMES.len()));
        // rank per metric column
        let ranks: Vec<Vec<usize>> = (0..MetricReport::NAMES.len())
            .map(|k| {
                let mut vals: Vec<f64> = rows.iter().filter_map(|c| c.report.map(|r| r.values()[k])).collect();
                vals.sort_by(|a, b| b.total_cmp(a));
                vals.dedup();
                rows.iter()
                    .map(|c| {
                        c.report
                            .map(|r| vals.iter().position(|v| *v == r.values()[k]).unwrap_or(usize::MAX))
                            .unwrap_or(usize::MAX)
                    })
                    .collect()
            })
            .collect();
        for (i, c) in rows.iter().enumerate() {
            let fields: Vec<String> = match &c.report {
                Some(r) => r
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let s = format!("{:.2}", v * 100.0);
                        match ranks[k][i] {
                            0 => format!("**{s}**"),
                            1 => format!("_{s}_"),
                            _ => s,
                        }
                    })
                    .collect(),
                None => vec!["n/a".to_string(); MetricReport::NAMES.len()],
            };
            let _ = writeln!(out, "| {} | {} | {} |", c.method.name(), c.source, fields.join(" | "));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hilo_fusion_core::eval::MetricFlags;
    use hilo_fusion_core::{EgoMotion, ObjectState};

    fn report(f1: f64) -> MetricReport {
        MetricReport {
            f1,
            precision: f1,
            recall: f1,
            class_precision: 1.0,
            miou: 0.7,
            flags: MetricFlags::default(),
        }
    }

    fn cell(method: Method, source: &str, f1: Option<f64>) -> MatrixCell {
        MatrixCell {
            method,
            source: source.into(),
            target: "hw".into(),
            report: f1.map(report),
            artifact_sha256: f1.map(|_| "ab".into()),
            dataset_sha256: "cd".into(),
        }
    }

    #[test]
    fn csv_rows_and_missing_cells() {
        let cells = vec![cell(Method::Akf, "hw", Some(0.5)), cell(Method::Hilo, "hw", None)];
        let csv = matrix_csv(&cells);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("akf,hw,hw,ok,0.500000,"));
        assert_eq!(lines[2], "hilo,hw,hw,missing,,,,,,,cd");
        assert_eq!(lines[2].split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn summary_marks_best_and_second() {
        let cells = vec![
            cell(Method::Akf, "hw", Some(0.5)),
            cell(Method::Akfa, "hw", Some(0.7)),
            cell(Method::Akfa, "urb", Some(0.6)),
        ];
        let s = matrix_summary(&cells);
        assert!(s.contains("| akfa | hw | **70.00**"));
        assert!(s.contains("| akfa | urb | _60.00_"));
        assert!(s.contains("| akf | hw | 50.00"));
    }

    #[test]
    fn perfect_estimates_score_one() {
        let rec = DatasetRecord {
            sample_id: "a".into(),
            session: "s".into(),
            t_a: 0.0,
            ego: EgoMotion::default(),
            frames: vec![],
            annotations: vec![ObjectState::at(10.0, 0.0), ObjectState::at(30.0, 5.0)],
        };
        let est = EstimateRecord {
            sample_id: "a".into(),
            objects: rec.annotations.clone(),
        };
        let (acc, r) = evaluate(&[est], std::slice::from_ref(&rec), 0.5).unwrap();
        assert_eq!(acc.tp, 2);
        assert_eq!(r.f1, 1.0);

        let empty = EstimateRecord {
            sample_id: "a".into(),
            objects: vec![],
        };
        let (_, r) = evaluate(&[empty], &[rec], 0.5).unwrap();
        assert_eq!(r.f1, 0.0);
        assert!(r.flags.no_true_positives);
    }
}
