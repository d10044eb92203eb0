//! Numerical tolerances.
//!
//! Every comparison that has a natural scale (largest singular value,
//! largest eigenvalue) is made relative to it; the rest are absolute and
//! assume unit-norm states.

use serde::{Deserialize, Serialize};

pub const EPS_NORM: f64 = 1e-10;
pub const EPS_ORTH: f64 = 1e-8;
pub const EPS_HERM: f64 = 1e-10;
pub const EPS_PSD: f64 = 1e-9;
pub const EPS_RANK: f64 = 1e-9;
pub const EPS_DIAG: f64 = 1e-8;
/// Inputs whose norm is within this distance of one are renormalized.
pub const RENORM_WINDOW: f64 = 1e-6;
/// Reconstruction residual accepted by the decomposability check.
pub const EPS_RECONSTRUCT: f64 = 1e-8;
/// Agreement of Schmidt coefficient lists and reduced spectra.
pub const EPS_SPECTRA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub norm: f64,
    pub orth: f64,
    pub herm: f64,
    pub psd: f64,
    pub rank: f64,
    pub diag: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: EPS_NORM,
            orth: EPS_ORTH,
            herm: EPS_HERM,
            psd: EPS_PSD,
            rank: EPS_RANK,
            diag: EPS_DIAG,
        }
    }
}
