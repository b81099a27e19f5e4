use crate::frame::EgoMotion;
use crate::geometry::wrap;
use crate::math;
use crate::object::{StateDim, StateEstimate};

/// Re-expresses an object in the ego frame `dt` seconds later.
///
/// The ego is assumed to keep its speed and yaw rate over `dt`: positions
/// and velocities are rotated by `-yaw_rate * dt` about the origin, then the
/// position is shifted back by `speed * dt` along the new x-axis. Variances
/// follow the diagonal of `R P R^T`.
pub fn ego_compensate(obj: &StateEstimate, ego: EgoMotion, dt: f64) -> StateEstimate {
    if dt <= 0.0 || (ego.speed == 0.0 && ego.yaw_rate == 0.0) {
        return *obj;
    }
    let theta = ego.yaw_rate * dt;
    let (s, c) = (math::sin(-theta), math::cos(-theta));
    let mut out = *obj;
    let st = &mut out.state;
    let (x, y) = (obj.state.x, obj.state.y);
    st.x = c * x - s * y - ego.speed * dt;
    st.y = s * x + c * y;
    let (vx, vy) = (obj.state.vx, obj.state.vy);
    st.vx = c * vx - s * vy;
    st.vy = s * vx + c * vy;
    st.psi = wrap(obj.state.psi - theta);

    let p = &obj.cov.0;
    let q = &mut out.cov.0;
    let (c2, s2) = (c * c, s * s);
    q[StateDim::X.index()] = c2 * p[StateDim::X.index()] + s2 * p[StateDim::Y.index()];
    q[StateDim::Y.index()] = s2 * p[StateDim::X.index()] + c2 * p[StateDim::Y.index()];
    q[StateDim::Vx.index()] = c2 * p[StateDim::Vx.index()] + s2 * p[StateDim::Vy.index()];
    q[StateDim::Vy.index()] = s2 * p[StateDim::Vx.index()] + c2 * p[StateDim::Vy.index()];
    out
}

/// Constant-velocity prediction over `dt` seconds.
///
/// The covariance keeps only the diagonal of `F P F^T + Q dt`; position
/// variance picks up `dt^2` times the velocity variance.
pub fn cv_predict(obj: &StateEstimate, dt: f64, q_diag: &[f64; StateDim::COUNT]) -> StateEstimate {
    if dt <= 0.0 {
        return *obj;
    }
    let mut out = *obj;
    out.state.x += obj.state.vx * dt;
    out.state.y += obj.state.vy * dt;
    let p = &obj.cov.0;
    let dt2 = dt * dt;
    for (i, v) in out.cov.0.iter_mut().enumerate() {
        *v = p[i] + q_diag[i] * dt;
    }
    out.cov.0[StateDim::X.index()] += dt2 * p[StateDim::Vx.index()];
    out.cov.0[StateDim::Y.index()] += dt2 * p[StateDim::Vy.index()];
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use crate::object::{DiagCovariance, ObjectState};

    fn est(x: f64, y: f64) -> StateEstimate {
        StateEstimate::new(
            ObjectState::at(x, y),
            DiagCovariance([1.0, 2.0, 0.1, 0.1, 3.0, 4.0, 0.01]),
        )
    }

    #[test]
    fn ego_zero_dt_is_identity() {
        let o = est(5.0, 1.0);
        let ego = EgoMotion {
            speed: 12.0,
            yaw_rate: 0.3,
        };
        assert_eq!(ego_compensate(&o, ego, 0.0), o);
    }

    #[test]
    fn ego_pure_translation() {
        let o = est(20.0, 3.0);
        let r = ego_compensate(
            &o,
            EgoMotion {
                speed: 10.0,
                yaw_rate: 0.0,
            },
            0.1,
        );
        assert!((r.state.x - 19.0).abs() < 1e-12);
        assert_eq!(r.state.y, 3.0);
        assert_eq!(r.cov, o.cov);
    }

    #[test]
    fn ego_pure_rotation() {
        let mut o = est(0.0, 2.0);
        o.state.psi = 0.25;
        let r = ego_compensate(
            &o,
            EgoMotion {
                speed: 0.0,
                yaw_rate: PI,
            },
            0.5,
        );
        assert!((r.state.x - 2.0).abs() < 1e-12);
        assert!(r.state.y.abs() < 1e-12);
        assert!((r.state.psi - (0.25 - PI / 2.0)).abs() < 1e-12);
        // x and y variances swap under a quarter turn
        assert!((r.cov.0[0] - 2.0).abs() < 1e-12 && (r.cov.0[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_examples() {
        let q0 = [0.0; 7];
        let o = est(10.0, 0.0);
        assert_eq!(cv_predict(&o, 0.0, &q0), o);

        let mut m = est(10.0, 0.0);
        m.state.vx = 2.0;
        assert!((cv_predict(&m, 0.5, &q0).state.x - 11.0).abs() < 1e-12);

        let mut v = est(0.0, 0.0);
        v.cov = DiagCovariance([1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0]);
        let q = [0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((cv_predict(&v, 0.5, &q).cov.0[0] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn cv_leaves_static_components() {
        let mut o = est(1.0, 2.0);
        o.state.vx = 3.0;
        o.state.vy = -1.0;
        o.state.psi = 0.7;
        let p = cv_predict(&o, 0.25, &[0.0; 7]);
        assert_eq!(
            (p.state.l, p.state.w, p.state.vx, p.state.vy, p.state.psi),
            (4.5, 1.8, 3.0, -1.0, 0.7)
        );
        assert!((p.state.y - 1.75).abs() < 1e-12);
    }
}
