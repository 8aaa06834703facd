//! Constant-velocity Kalman filter over box centre and size.
//!
//! State is `(cx, cy, w, h, vcx, vcy, vw, vh)` in pixels and pixels per
//! frame; the measurement is `(cx, cy, w, h)`. Noise standard deviations
//! scale with the box height: position terms use 1/20 of it, velocity terms
//! 1/160.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;
type Observation = SMatrix<f64, 4, 8>;

pub const STD_WEIGHT_POSITION: f64 = 1.0 / 20.0;
pub const STD_WEIGHT_VELOCITY: f64 = 1.0 / 160.0;

/// Smallest width/height kept in the mean.
pub const MIN_SIZE: f64 = 1e-3;

/// Noise is never scaled below a one-pixel-high box.
fn noise_scale(h: f64) -> f64 {
    h.max(1.0)
}

fn observation() -> Observation {
    Observation::from_fn(|r, c| if r == c { 1.0 } else { 0.0 })
}

fn transition() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn diagonal(stds: [f64; 8]) -> StateCovariance {
    StateCovariance::from_diagonal(&StateVector::from_iterator(stds.iter().map(|s| s * s)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

/// Fresh state at `bbox` with zero velocity.
pub fn kf_init(bbox: &BBox) -> Result<KalmanState> {
    bbox.validate()?;
    let (cx, cy) = bbox.center();
    let mean = StateVector::from([cx, cy, bbox.w, bbox.h, 0.0, 0.0, 0.0, 0.0]);
    let s = noise_scale(bbox.h);
    let p = 2.0 * STD_WEIGHT_POSITION * s;
    let v = 10.0 * STD_WEIGHT_VELOCITY * s;
    Ok(KalmanState {
        mean,
        covariance: diagonal([p, p, p, p, v, v, v, v]),
    })
}

/// One constant-velocity step.
pub fn kf_predict(state: &KalmanState) -> KalmanState {
    let s = noise_scale(state.mean[3]);
    let p = STD_WEIGHT_POSITION * s;
    let v = STD_WEIGHT_VELOCITY * s;
    let f = transition();
    let mut mean = f * state.mean;
    clamp_size(&mut mean);
    let covariance = f * state.covariance * f.transpose() + diagonal([p, p, p, p, v, v, v, v]);
    KalmanState {
        mean,
        covariance: symmetrize(covariance),
    }
}

/// Measurement update with a box observation. The covariance update uses
/// the Joseph form.
pub fn kf_update(state: &KalmanState, bbox: &BBox) -> Result<KalmanState> {
    bbox.validate()?;
    let (cx, cy) = bbox.center();
    let z = Measurement::from([cx, cy, bbox.w, bbox.h]);
    let r_std = STD_WEIGHT_POSITION * noise_scale(state.mean[3]);
    let r = SMatrix::<f64, 4, 4>::from_diagonal_element(r_std * r_std);

    let h = observation();
    let p = &state.covariance;
    let s = h * p * h.transpose() + r;
    let chol = s
        .cholesky()
        .ok_or(Error::NumericalFailure("innovation covariance is not positive definite"))?;
    // K = P H^T S^-1 = (S^-1 H P)^T because P and S are symmetric.
    let gain = chol.solve(&(h * p)).transpose();

    let innovation = z - h * state.mean;
    let mut mean = state.mean + gain * innovation;
    clamp_size(&mut mean);

    let i_kh = StateCovariance::identity() - gain * h;
    let covariance = i_kh * p * i_kh.transpose() + gain * r * gain.transpose();
    Ok(KalmanState {
        mean,
        covariance: symmetrize(covariance),
    })
}

fn symmetrize(m: StateCovariance) -> StateCovariance {
    (m + m.transpose()) * 0.5
}

fn clamp_size(mean: &mut StateVector) {
    mean[2] = mean[2].max(MIN_SIZE);
    mean[3] = mean[3].max(MIN_SIZE);
}

impl KalmanState {
    /// Current box estimate, top-left convention.
    pub fn bbox(&self) -> BBox {
        BBox::from_center(self.mean[0], self.mean[1], self.mean[2], self.mean[3])
    }

    pub fn velocity(&self) -> [f64; 4] {
        [self.mean[4], self.mean[5], self.mean[6], self.mean[7]]
    }

    /// Symmetric within 1e-9 and Cholesky-factorisable.
    pub fn is_spd(&self) -> bool {
        let c = &self.covariance;
        (c - c.transpose()).amax() <= 1e-9 && c.cholesky().is_some()
    }

    /// Moves the centre by whole turns of `width`, for tracks crossing the
    /// azimuth seam.
    pub fn shift_x(&mut self, dx: f64) {
        self.mean[0] += dx;
    }
}
