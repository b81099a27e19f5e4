//! Seeded random search over the Kalman fusion parameters.
//!
//! The objective is `F1 + mIoU` on a validation split. An AKFA search first
//! runs exactly the AKF search with the same seed, then spends a second
//! `budget` of trials on the extra measurement covariance with the best base
//! parameters held fixed. Zero extra covariance stays a candidate, so AKFA
//! never scores below AKF on the split it was tuned on.

use hilo_fusion_core::akf::{Method, PipelineConfig};
use hilo_fusion_core::eval::{EvalAccumulator, MetricReport};
use hilo_fusion_core::frame::PerKind;
use hilo_fusion_core::{DiagCovariance, SensorKind, StateDim};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetRecord;
use crate::report::evaluate;
use crate::run::{fuse_dataset, Fuser, RunError};

/// Closed sampling ranges. Ranges marked log are sampled log-uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Gate significance level (log).
    pub alpha: [f64; 2],
    /// Process noise of x and y (log).
    pub q_position: [f64; 2],
    /// Process noise of vx and vy (log).
    pub q_velocity: [f64; 2],
    pub kappa: [f64; 2],
    /// Existence threshold per sensor type.
    pub existence_threshold: [f64; 2],
    pub output_conf_threshold: [f64; 2],
    /// AKFA extra variance on x and on y per sensor type (log), drawn
    /// independently.
    pub extra_position: [f64; 2],
    /// AKFA extra variance on vx and vy per sensor type (log).
    pub extra_velocity: [f64; 2],
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            alpha: [1e-3, 0.3],
            q_position: [0.01, 5.0],
            q_velocity: [0.1, 20.0],
            kappa: [0.5, 3.0],
            existence_threshold: [0.0, 0.6],
            output_conf_threshold: [0.0, 0.9],
            extra_position: [1e-3, 10.0],
            extra_velocity: [1e-3, 10.0],
        }
    }
}

fn lin<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] >= r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

fn log<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    lin(rng, [r[0].ln(), r[1].ln()]).exp()
}

impl SearchSpace {
    fn sample_base<R: Rng>(&self, base: &PipelineConfig, rng: &mut R) -> PipelineConfig {
        let mut cfg = base.clone();
        cfg.alpha = log(rng, self.alpha);
        let qp = log(rng, self.q_position);
        let qv = log(rng, self.q_velocity);
        cfg.q_diag[StateDim::X.index()] = qp;
        cfg.q_diag[StateDim::Y.index()] = qp;
        cfg.q_diag[StateDim::Vx.index()] = qv;
        cfg.q_diag[StateDim::Vy.index()] = qv;
        cfg.kappa = lin(rng, self.kappa);
        let camera = lin(rng, self.existence_threshold);
        let radar = lin(rng, self.existence_threshold);
        cfg.existence_thresholds.camera = camera;
        cfg.existence_thresholds.radar_fl = radar;
        cfg.existence_thresholds.radar_fr = radar;
        cfg.existence_thresholds.radar_rl = radar;
        cfg.existence_thresholds.radar_rr = radar;
        cfg.output_conf_threshold = lin(rng, self.output_conf_threshold);
        cfg
    }

    fn sample_extra<R: Rng>(&self, rng: &mut R) -> PerKind<DiagCovariance> {
        let mut out = PerKind::splat(DiagCovariance::zeros());
        for kind in SensorKind::ALL {
            let px = log(rng, self.extra_position);
            let py = log(rng, self.extra_position);
            let v = log(rng, self.extra_velocity);
            let d = out.get_mut(kind);
            d.0[StateDim::X.index()] = px;
            d.0[StateDim::Y.index()] = py;
            d.0[StateDim::Vx.index()] = v;
            d.0[StateDim::Vy.index()] = v;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub config: PipelineConfig,
    pub metrics: MetricReport,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub method: Method,
    pub seed: u64,
    pub best_trial: usize,
    pub best: PipelineConfig,
    pub best_objective: f64,
    pub trials: Vec<Trial>,
}

/// F1 + mIoU, the tuning target.
pub fn objective(m: &MetricReport) -> f64 {
    m.f1 + m.miou
}

/// Metrics of one configuration on a record set.
pub fn score(
    method: Method,
    cfg: &PipelineConfig,
    records: &[DatasetRecord],
) -> Result<(EvalAccumulator, MetricReport), RunError> {
    let fuser = Fuser::pipeline(method, cfg.clone())?;
    let out = fuse_dataset(&fuser, records)?;
    Ok(
        evaluate(&out.estimates, records, hilo_fusion_core::eval::DEFAULT_IOU_THRESHOLD)
            .expect("estimates come from the same records"),
    )
}

fn evaluate_trial(
    method: Method,
    trial: usize,
    cfg: PipelineConfig,
    records: &[DatasetRecord],
) -> Result<Trial, RunError> {
    let (_, metrics) = score(method, &cfg, records)?;
    Ok(Trial {
        trial,
        objective: objective(&metrics),
        config: cfg,
        metrics,
    })
}

fn best_of(trials: &[Trial]) -> &Trial {
    trials
        .iter()
        .fold(&trials[0], |b, t| if t.objective > b.objective { t } else { b })
}

/// Random search. AKF runs `budget` trials; AKFA runs those same trials and
/// then `budget` more over the extra covariance. Ties keep the earlier trial.
pub fn tune(
    method: Method,
    base: &PipelineConfig,
    space: &SearchSpace,
    records: &[DatasetRecord],
    budget: usize,
    seed: u64,
) -> Result<TuneResult, RunError> {
    if method == Method::Hilo {
        return Err(RunError::MissingArtifact("hilo", "training, not tuning"));
    }
    let budget = budget.max(1);
    let mut base_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials: Vec<Trial> = Vec::with_capacity(2 * budget);
    for trial in 0..budget {
        let mut cfg = space.sample_base(base, &mut base_rng);
        cfg.extra_meas_cov = PerKind::splat(DiagCovariance::zeros());
        trials.push(evaluate_trial(method, trial, cfg, records)?);
    }
    if method == Method::Akfa {
        let mut extra_rng = ChaCha8Rng::seed_from_u64(seed);
        extra_rng.set_stream(1);
        let anchor = best_of(&trials).config.clone();
        for trial in budget..2 * budget {
            let cfg = PipelineConfig {
                extra_meas_cov: space.sample_extra(&mut extra_rng),
                ..anchor.clone()
            };
            trials.push(evaluate_trial(method, trial, cfg, records)?);
        }
    }
    let best = best_of(&trials);
    Ok(TuneResult {
        method,
        seed,
        best_trial: best.trial,
        best: best.config.clone(),
        best_objective: best.objective,
        trials,
    })
}
