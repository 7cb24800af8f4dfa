//! Markovian reduction: once the comb is traded for a flat continuum, the
//! resonator pair closes on a non-Hermitian 2x2 generator whose spectrum
//! carries the parity-time structure of the full problem.
//!
//! The generator is
//!
//! ```text
//! d/dt (a1, a2) = M (a1, a2),   M = [ -i w0        -i Omega    ]
//!                                   [ -i Omega     -i w0 - gamma ]
//! ```
//!
//! with `gamma = pi g^2 / delta_omega` inherited from the comb. Its
//! eigenvalues collide at `Omega = gamma / 2`, the exceptional point
//! separating the broken phase (unequal decay rates) from the symmetric
//! phase (equal decay rates, split frequencies).

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Equality window on `Omega - gamma/2` inside which the spectrum is reported
/// as exactly at the exceptional point.
pub const EP_PHASE_TOL: f64 = 1e-12;
/// Relative scale below which the propagator switches to the degenerate
/// (Jordan) form: `|gamma^2 - 4 Omega^2| < (EP_PROPAGATOR_REL * gamma)^2`.
pub const EP_PROPAGATOR_REL: f64 = 1e-6;

/// Spectral phase of the two-mode non-Hermitian generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PtPhase {
    /// `Omega > gamma/2`: both modes decay at `gamma/2`, frequencies split.
    Symmetric,
    /// `Omega = gamma/2` within [`EP_PHASE_TOL`]: eigenvalues and
    /// eigenvectors coalesce.
    ExceptionalPoint,
    /// `Omega < gamma/2`: common frequency, one slow and one fast decay.
    Broken,
}

impl std::fmt::Display for PtPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PtPhase::Symmetric => "symmetric",
            PtPhase::ExceptionalPoint => "exceptional-point",
            PtPhase::Broken => "broken",
        };
        f.write_str(s)
    }
}

/// Exceptional-point coupling `gamma / 2`.
pub fn exceptional_point(gamma: f64) -> f64 {
    0.5 * gamma
}

/// The reduced two-mode model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovianModel {
    /// Effective decay rate of resonator 2.
    pub gamma: f64,
    /// Inter-resonator coupling.
    pub omega: f64,
    /// Common resonator frequency.
    pub omega0: f64,
}

impl MarkovianModel {
    pub fn new(gamma: f64, omega: f64, omega0: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("Omega", omega), ("omega0", omega0)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be non-negative, got {gamma}")));
        }
        if omega < 0.0 {
            return Err(Error::InvalidParams(format!("Omega must be non-negative, got {omega}")));
        }
        Ok(Self { gamma, omega, omega0 })
    }

    /// Reduction of a full comb system, `gamma = pi g^2 / delta_omega`.
    pub fn from_system(params: &SystemParams) -> Self {
        Self {
            gamma: params.effective_gamma(),
            omega: params.omega,
            omega0: params.omega0,
        }
    }

    /// The generator matrix itself.
    pub fn matrix(&self) -> Matrix2<Complex64> {
        let i = Complex64::i();
        Matrix2::new(
            -i * self.omega0,
            -i * self.omega,
            -i * self.omega,
            -i * self.omega0 - self.gamma,
        )
    }

    fn discriminant(&self) -> f64 {
        self.gamma * self.gamma - 4.0 * self.omega * self.omega
    }

    /// Principal square root of `gamma^2 - 4 Omega^2`.
    fn sqrt_discriminant(&self) -> Complex64 {
        let d = self.discriminant();
        if d >= 0.0 {
            Complex64::new(d.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-d).sqrt())
        }
    }

    /// Eigenvalue pair `(lambda_plus, lambda_minus)` with
    /// `lambda_pm = -gamma/2 - i w0 +- sqrt(gamma^2 - 4 Omega^2)/2`.
    ///
    /// In the symmetric phase the discriminant root is purely imaginary, and
    /// the real part of both eigenvalues is stored as exactly `-gamma/2`
    /// rather than recovered through arithmetic that could smear it.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let half = 0.5 * self.sqrt_discriminant();
        let base = Complex64::new(-0.5 * self.gamma, -self.omega0);
        (base + half, base - half)
    }

    /// Unnormalized eigenvectors `(e_plus, e_minus)` paired with
    /// [`eigenvalues`](Self::eigenvalues): `e_pm = (x_pm, 1)` with
    /// `x_pm = i (gamma +- sqrt(gamma^2 - 4 Omega^2)) / (2 Omega)`.
    ///
    /// For `Omega = 0` the modes decouple and the basis vectors are returned.
    pub fn eigenvectors(&self) -> (Vector2<Complex64>, Vector2<Complex64>) {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        if self.omega == 0.0 {
            return (Vector2::new(one, zero), Vector2::new(zero, one));
        }
        let s = self.sqrt_discriminant();
        let i = Complex64::i();
        let x_plus = i * (self.gamma + s) / (2.0 * self.omega);
        let x_minus = i * (self.gamma - s) / (2.0 * self.omega);
        (Vector2::new(x_plus, one), Vector2::new(x_minus, one))
    }

    /// Eigenvectors scaled to unit Euclidean norm.
    pub fn eigenvectors_normalized(&self) -> (Vector2<Complex64>, Vector2<Complex64>) {
        let (p, m) = self.eigenvectors();
        (p.clone() / Complex64::from(p.norm()), m.clone() / Complex64::from(m.norm()))
    }

    /// Decay rates `(-Re lambda_plus, -Re lambda_minus)`. Below the
    /// exceptional point the plus branch is the long-lived one.
    pub fn decay_rates(&self) -> (f64, f64) {
        let (lp, lm) = self.eigenvalues();
        (-lp.re, -lm.re)
    }

    /// Coupling at which the eigenvalues coalesce.
    pub fn exceptional_point(&self) -> f64 {
        exceptional_point(self.gamma)
    }

    /// Classifies the spectrum relative to the exceptional point.
    pub fn pt_phase(&self) -> PtPhase {
        let distance = self.omega - self.exceptional_point();
        if distance.abs() <= EP_PHASE_TOL {
            PtPhase::ExceptionalPoint
        } else if distance > 0.0 {
            PtPhase::Symmetric
        } else {
            PtPhase::Broken
        }
    }

    /// Evolves `(a1, a2)` for time `t` under the generator.
    ///
    /// Three regimes: decoupled (`Omega = 0`) in closed form, a degenerate
    /// Jordan form within [`EP_PROPAGATOR_REL`] of the exceptional point
    /// where the eigenbasis expansion would cancel catastrophically, and the
    /// eigenbasis expansion everywhere else.
    pub fn propagate(&self, a0: &Vector2<Complex64>, t: f64) -> Vector2<Complex64> {
        if self.omega == 0.0 {
            let phase = Complex64::new(0.0, -self.omega0 * t).exp();
            let decay = Complex64::new(-self.gamma * t, 0.0).exp();
            return Vector2::new(a0[0] * phase, a0[1] * phase * decay);
        }
        let disc = self.discriminant();
        let ep_window = (EP_PROPAGATOR_REL * self.gamma).powi(2);
        if disc.abs() < ep_window {
            // exp(M t) = exp(lam t) (I + t (M - lam I)) plus O((disc t)^2)
            // corrections that vanish inside the window.
            let lam = Complex64::new(-0.5 * self.gamma, -self.omega0);
            let nilpotent = self.matrix() - Matrix2::identity() * lam;
            let linear = a0 + nilpotent * a0 * Complex64::from(t);
            return linear * (lam * t).exp();
        }
        let (lp, lm) = self.eigenvalues();
        let (ep, em) = self.eigenvectors();
        let (x_plus, x_minus) = (ep[0], em[0]);
        let det = x_plus - x_minus;
        let c_plus = (a0[0] - x_minus * a0[1]) / det;
        let c_minus = (x_plus * a0[1] - a0[0]) / det;
        ep * (c_plus * (lp * t).exp()) + em * (c_minus * (lm * t).exp())
    }
}

/// Weak-coupling approximation to the slow decay rate, `2 Omega^2 / gamma`.
/// Valid deep in the broken phase; meaningful only for `gamma > 0`.
pub fn weak_coupling_rate(gamma: f64, omega: f64) -> f64 {
    2.0 * omega * omega / gamma
}
