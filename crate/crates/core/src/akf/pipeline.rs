use alloc::vec::Vec;

use super::association::{associate_with_gate, gate_for};
use super::{akf_update, cv_predict, ego_compensate, AkfError, PipelineConfig};
use crate::assignment::Target;
use crate::frame::{SampleBuffer, SensorFrame, SensorId};
use crate::object::{StateDim, StateEstimate};

/// One Kalman update, reported by [`AkfFuser::fuse_sample_traced`].
#[derive(Clone, Copy, Debug)]
pub struct UpdateTrace<'a> {
    pub sensor: SensorId,
    pub prior: &'a StateEstimate,
    pub measurement: &'a StateEstimate,
    pub posterior: &'a StateEstimate,
}

/// A validated configuration with its gate threshold resolved.
///
/// The fuser holds no per-sample state; every call to
/// [`AkfFuser::fuse_sample`] starts from an empty global object set.
#[derive(Clone, Debug)]
pub struct AkfFuser {
    cfg: PipelineConfig,
    dims: Vec<StateDim>,
    gate: f64,
}

impl AkfFuser {
    pub fn new(cfg: PipelineConfig) -> Result<Self, AkfError> {
        cfg.validate()?;
        let gate = gate_for(&cfg)?;
        let dims = cfg.dims();
        Ok(Self { cfg, dims, gate })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Chi-squared birth gate in use.
    pub fn gate(&self) -> f64 {
        self.gate
    }

    fn admitted(&self, frame: &SensorFrame) -> Vec<StateEstimate> {
        let threshold = *self.cfg.existence_thresholds.get(frame.sensor);
        frame
            .objects
            .iter()
            .filter(|o| o.state.s_e >= threshold)
            .copied()
            .collect()
    }

    fn advance(&self, globals: &mut [StateEstimate], buf: &SampleBuffer, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        for g in globals.iter_mut() {
            let moved = if self.cfg.ego_compensation {
                ego_compensate(g, buf.ego, dt)
            } else {
                *g
            };
            *g = cv_predict(&moved, dt, &self.cfg.q_diag);
        }
    }

    /// Fuses all frames of one sample into a global object set predicted to
    /// the annotation time.
    pub fn fuse_sample(&self, buf: &SampleBuffer) -> Result<Vec<StateEstimate>, AkfError> {
        self.fuse_sample_traced(buf, |_| {})
    }

    /// [`AkfFuser::fuse_sample`] calling `on_update` after every update.
    pub fn fuse_sample_traced(
        &self,
        buf: &SampleBuffer,
        mut on_update: impl FnMut(&UpdateTrace<'_>),
    ) -> Result<Vec<StateEstimate>, AkfError> {
        let frames = buf.sorted_frames();
        let Some((first, rest)) = frames.split_first() else {
            return Ok(Vec::new());
        };

        let mut globals = self.admitted(first);
        let mut now = first.arrival_time;
        for frame in rest {
            self.advance(&mut globals, buf, frame.arrival_time - now);
            now = now.max(frame.arrival_time);

            let detections = self.admitted(frame);
            if detections.is_empty() {
                continue;
            }
            let assignment = associate_with_gate(&detections, &globals, &self.cfg, &self.dims, self.gate)?;
            let extra = self.cfg.extra_meas_cov.get(frame.sensor.kind());
            let mut births = Vec::new();
            for (k, det) in detections.iter().enumerate() {
                match assignment.target(k) {
                    Target::Existing(n) => {
                        let posterior = akf_update(&globals[n], det, extra)?;
                        on_update(&UpdateTrace {
                            sensor: frame.sensor,
                            prior: &globals[n],
                            measurement: det,
                            posterior: &posterior,
                        });
                        globals[n] = posterior;
                    }
                    Target::Birth => births.push(*det),
                }
            }
            globals.extend(births);
        }
        self.advance(&mut globals, buf, buf.t_a - now);

        globals.retain(|g| g.state.s_e >= self.cfg.output_conf_threshold);
        Ok(globals)
    }
}

/// One-shot convenience wrapper around [`AkfFuser`].
pub fn fuse_sample(buf: &SampleBuffer, cfg: &PipelineConfig) -> Result<Vec<StateEstimate>, AkfError> {
    AkfFuser::new(cfg.clone())?.fuse_sample(buf)
}
