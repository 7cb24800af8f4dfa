//! System definition: two coupled resonators, one of which leaks into a
//! finite comb of equally spaced environment modes.
//!
//! The single-excitation Hamiltonian acts on amplitudes ordered as
//! `[a1, a2, b_1, ..., b_N]`: resonator 1 first, then resonator 2, then the
//! environment modes in ascending index order. Resonator 1 couples only to
//! resonator 2; resonator 2 additionally couples to every environment mode
//! with a single uniform strength.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the environment size; larger requests are refused rather than
/// attempted.
pub const MAX_MODES: usize = 1_000_000;

/// Placement of the environment comb relative to the resonator frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexConvention {
    /// Mode j sits at `omega0 + delta_omega * (j - N/2)` for j = 1..N.
    /// The comb mean is offset from `omega0` by `delta_omega / 2`.
    AsWritten,
    /// Mode j sits at `omega0 + delta_omega * (j - (N+1)/2)`, centering the
    /// comb exactly on `omega0`.
    Symmetric,
}

/// Reference frame for the Hamiltonian and equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Lab frame: diagonal carries the absolute frequencies.
    Absolute,
    /// Frame co-rotating at `omega0`: the common offset is removed from the
    /// diagonal, which improves integrator accuracy without changing any
    /// populations or overlap magnitudes.
    Rotating,
}

/// Physical parameters of the two-resonator + comb system.
///
/// All frequencies are angular and expressed in units of `omega0` unless the
/// caller chooses otherwise; the library never assumes a unit system beyond
/// `delta_omega > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Common resonator frequency.
    pub omega0: f64,
    /// Environment mode spacing.
    pub delta_omega: f64,
    /// Resonator-2 to environment coupling (uniform over modes).
    pub g: f64,
    /// Inter-resonator coupling.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Number of environment modes.
    pub n_modes: usize,
    /// Comb placement convention.
    pub index_convention: IndexConvention,
}

impl SystemParams {
    pub fn new(
        omega0: f64,
        delta_omega: f64,
        g: f64,
        omega: f64,
        n_modes: usize,
        index_convention: IndexConvention,
    ) -> Result<Self> {
        let params = Self {
            omega0,
            delta_omega,
            g,
            omega,
            n_modes,
            index_convention,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega0", self.omega0),
            ("delta_omega", self.delta_omega),
            ("g", self.g),
            ("Omega", self.omega),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {value}")));
            }
        }
        if self.omega0 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega0 must be positive, got {}",
                self.omega0
            )));
        }
        if self.delta_omega <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "delta_omega must be positive, got {}",
                self.delta_omega
            )));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be non-negative, got {}", self.g)));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidParams(format!(
                "Omega must be non-negative, got {}",
                self.omega
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidParams("n_modes must be at least 1".into()));
        }
        Ok(())
    }

    /// Total Hilbert-space dimension in the single-excitation sector.
    pub fn dim(&self) -> usize {
        self.n_modes + 2
    }

    /// Effective decay rate of resonator 2 into the comb: `pi g^2 / delta_omega`.
    pub fn effective_gamma(&self) -> f64 {
        std::f64::consts::PI * self.g * self.g / self.delta_omega
    }

    /// Finite-environment recurrence time `2 pi / delta_omega`.
    pub fn revival_time(&self) -> f64 {
        std::f64::consts::TAU / self.delta_omega
    }

    /// Detunings of the environment modes from `omega0`, in comb order.
    ///
    /// Both the Hamiltonian builder and the integrator right-hand side draw
    /// from this single iterator, so the two frames agree bitwise up to the
    /// common `omega0` shift.
    pub(crate) fn environment_offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let shift = match self.index_convention {
            IndexConvention::AsWritten => self.n_modes as f64 / 2.0,
            IndexConvention::Symmetric => (self.n_modes as f64 + 1.0) / 2.0,
        };
        (1..=self.n_modes).map(move |j| self.delta_omega * (j as f64 - shift))
    }

    /// Absolute environment mode frequencies in comb order.
    pub fn environment_frequencies(&self) -> Vec<f64> {
        self.environment_offsets().map(|off| self.omega0 + off).collect()
    }

    /// Dense single-excitation Hamiltonian in the requested frame.
    ///
    /// The matrix is exactly symmetric: paired entries are written from the
    /// same value, never recomputed.
    pub fn build_hamiltonian(&self, frame: Frame) -> Result<HamiltonianMatrix> {
        self.validate()?;
        if self.n_modes > MAX_MODES {
            return Err(Error::TooManyModes {
                n_modes: self.n_modes,
                limit: MAX_MODES,
            });
        }
        let dim = self.dim();
        let base = match frame {
            Frame::Absolute => self.omega0,
            Frame::Rotating => 0.0,
        };
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        m[(0, 0)] = base;
        m[(1, 1)] = base;
        m[(0, 1)] = self.omega;
        m[(1, 0)] = self.omega;
        for (j, off) in self.environment_offsets().enumerate() {
            let row = 2 + j;
            m[(row, row)] = base + off;
            m[(1, row)] = self.g;
            m[(row, 1)] = self.g;
        }
        Ok(HamiltonianMatrix { matrix: m, frame })
    }
}

/// A realized Hamiltonian: dense, real, symmetric, tagged with its frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    matrix: DMatrix<f64>,
    frame: Frame,
}

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }
}
