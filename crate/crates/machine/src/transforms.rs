use crate::vec2::{DqVec, V2};

/// Stationary → rotating frame: rotate by `-theta_k`.
pub fn park(v_ab: V2, theta_k: f64) -> DqVec {
    v_ab.rotate(-theta_k)
}

/// Rotating → stationary frame: rotate by `+theta_k`.
pub fn inv_park(v_dq: DqVec, theta_k: f64) -> V2 {
    v_dq.rotate(theta_k)
}
