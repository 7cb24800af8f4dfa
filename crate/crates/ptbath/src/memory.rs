//! Long-time memory of an initial state.
//!
//! The memory functional is the time average of the survival probability
//! `|<psi0|psi(t)>|^2` over a late window `[tau, tau + T]`. Values near 1 mean
//! the excitation keeps returning to (or never leaves) the initial state;
//! values near 0 mean it has been handed to the environment for good.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{overlap, Propagator, SpectralDecomposition, StateVector};
use crate::error::{Error, Result};
use crate::model::{Frame, SystemParams};

/// Accepted deviation of `|psi0|^2` from 1.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Sample counts below this draw a warning; the estimate is still computed.
pub const RECOMMENDED_MIN_SAMPLES: usize = 64;

/// Averaging window for the memory functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryWindow {
    /// Window start; should sit well past the initial transient.
    pub tau: f64,
    /// Window length `T`.
    pub duration: f64,
    /// Number of midpoint quadrature samples.
    pub n_samples: usize,
}

impl MemoryWindow {
    pub fn new(tau: f64, duration: f64, n_samples: usize) -> Result<Self> {
        let w = Self {
            tau,
            duration,
            n_samples,
        };
        w.validate()?;
        Ok(w)
    }

    /// Window recommended for a given comb: `tau = 5 T_R`, `T = 20 T_R`,
    /// 4096 samples.
    pub fn defaults(params: &SystemParams) -> Self {
        let t_r = params.revival_time();
        Self {
            tau: 5.0 * t_r,
            duration: 20.0 * t_r,
            n_samples: 4096,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::InvalidWindow(format!(
                "tau must be finite and non-negative, got {}",
                self.tau
            )));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(Error::InvalidWindow(format!(
                "duration must be finite and positive, got {}",
                self.duration
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidWindow(format!(
                "n_samples must be at least 2, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }
}

/// Result of a memory evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryEstimate {
    /// The memory value, in `[0, 1]` up to quadrature error.
    #[serde(rename = "M")]
    pub m: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub n_samples: usize,
    /// `|M(n) - M(n/2)|` with the half-resolution estimate computed on its
    /// own midpoint grid; a cheap self-consistency handle.
    pub convergence_delta: f64,
}

/// Compensated sequential mean. The samples arrive in index order whatever
/// the thread count, so the result is bit-reproducible.
fn kahan_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / values.len() as f64
}

fn survival_mean(prop: &Propagator<'_>, psi0: &StateVector, window: &MemoryWindow, n: usize) -> f64 {
    let h = window.duration / n as f64;
    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = window.tau + (k as f64 + 0.5) * h;
            let state = prop.state_at(t);
            overlap(psi0, &state)
                .expect("propagated state keeps the dimension of psi0")
                .norm_sqr()
        })
        .collect();
    kahan_mean(&samples)
}

/// Memory of `psi0` under an already-diagonalized Hamiltonian.
///
/// `psi0` must be normalized to [`NORMALIZATION_TOL`]; the window average
/// uses the midpoint rule with `n_samples` points, and the reported
/// `convergence_delta` compares against a half-resolution pass.
pub fn memory_from_decomposition(
    decomp: &SpectralDecomposition,
    psi0: &StateVector,
    window: &MemoryWindow,
) -> Result<MemoryEstimate> {
    window.validate()?;
    let deviation = (psi0.norm_sqr() - 1.0).abs();
    if deviation > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            deviation,
            tolerance: NORMALIZATION_TOL,
        });
    }
    if window.n_samples < RECOMMENDED_MIN_SAMPLES {
        log::warn!(
            "memory window uses {} samples; fewer than {} is unreliable",
            window.n_samples,
            RECOMMENDED_MIN_SAMPLES
        );
    }
    let prop = Propagator::new(decomp, psi0)?;
    let m = survival_mean(&prop, psi0, window, window.n_samples);
    let m_half = survival_mean(&prop, psi0, window, (window.n_samples / 2).max(1));
    Ok(MemoryEstimate {
        m,
        tau: window.tau,
        duration: window.duration,
        n_samples: window.n_samples,
        convergence_delta: (m - m_half).abs(),
    })
}

/// Memory of `psi0` for a parameter set, diagonalizing internally.
pub fn memory(
    params: &SystemParams,
    frame: Frame,
    psi0: &StateVector,
    window: &MemoryWindow,
) -> Result<MemoryEstimate> {
    window.validate()?;
    let t_r = params.revival_time();
    if window.tau < 5.0 * t_r || window.duration < 5.0 * t_r {
        log::warn!(
            "memory window (tau = {:.3e}, T = {:.3e}) is short against the revival time {:.3e}; \
             the average may not have settled",
            window.tau,
            window.duration,
            t_r
        );
    }
    let decomp = crate::dynamics::diagonalize(&params.build_hamiltonian(frame)?)?;
    memory_from_decomposition(&decomp, psi0, window)
}
