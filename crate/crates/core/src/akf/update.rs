use super::AkfError;
use crate::geometry::wrap;
use crate::object::{DiagCovariance, StateDim, StateEstimate};

/// Kalman update of a global object with a matched measurement.
///
/// Every component is an independent scalar filter:
/// `S = P_g + P_m + extra`, `K = P_g / S`, `x += K (z - x)`, `P = (1 - K) P_g`.
/// With `extra = 0` this is plain AKF; a positive `extra` (AKFA) discounts
/// measurements of sensors that report too small a covariance.
///
/// Class, classification score and existence score are fused separately:
/// the class of the more confident participant wins (ties keep the global
/// class), `s_c` takes the max and `s_e` combines as a noisy-OR.
pub fn akf_update(
    global: &StateEstimate,
    meas: &StateEstimate,
    extra: &DiagCovariance,
) -> Result<StateEstimate, AkfError> {
    let mut state = global.state.kinematics();
    let z = meas.state.kinematics();
    let mut cov = global.cov;
    for dim in StateDim::ALL {
        let i = dim.index();
        let prior = global.cov.0[i];
        let s = prior + meas.cov.0[i] + extra.0[i];
        if !(s > 0.0) {
            return Err(AkfError::ZeroVariance(dim));
        }
        let gain = prior / s;
        let mut innovation = z[i] - state[i];
        if dim.is_angle() {
            innovation = wrap(innovation);
        }
        state[i] += gain * innovation;
        cov.0[i] = (1.0 - gain) * prior;
    }

    let mut out = global.state;
    out.set_kinematics(state);
    if meas.state.s_c > global.state.s_c {
        out.cls = meas.state.cls;
    }
    out.s_c = global.state.s_c.max(meas.state.s_c);
    out.s_e = 1.0 - (1.0 - global.state.s_e) * (1.0 - meas.state.s_e);
    Ok(StateEstimate::new(out, cov))
}
