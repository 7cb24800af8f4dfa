//! Loss-protection phase structure.
//!
//! A state is called protected when its long-time memory stays above a
//! threshold, i.e. fewer than one comb mode is appreciably excited by its
//! decay. Two classifications coexist on purpose: an analytic one from the
//! reduced-model decay rates measured against the mode spacing, and a
//! numeric one from memory functionals of the full finite comb. Their
//! agreement over a parameter grid is the central consistency statement of
//! the library.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::markovian::MarkovianModel;
use crate::memory::{memory_from_decomposition, MemoryWindow};
use crate::model::{Frame, IndexConvention, SystemParams};

/// Number of comb modes excited by a decay at `rate`: `rate / delta_omega`.
/// Protection means this stays below 1.
pub fn n_excited(rate: f64, delta_omega: f64) -> f64 {
    rate / delta_omega
}

/// Exceptional-point coupling as a function of the comb parameters:
/// `Omega_EP = gamma / 2 = pi g^2 / (2 delta_omega)`.
pub fn markovian_ep_coupling(g: f64, delta_omega: f64) -> f64 {
    0.5 * std::f64::consts::PI * g * g / delta_omega
}

fn dimensionless(g: f64, omega: f64, delta_omega: f64) -> (f64, f64) {
    let a = 0.5 * std::f64::consts::PI * g * g / (delta_omega * delta_omega);
    let b = omega / delta_omega;
    (a, b)
}

/// Slow-branch excitation count `A - sqrt(A^2 - B^2)` with
/// `A = gamma / (2 delta_omega)`, `B = Omega / delta_omega`.
///
/// Below the exceptional point this is the number of modes excited by the
/// long-lived state's decay; at and above it the square root is clamped to
/// zero and the expression continues into the common rate `A`, which is the
/// quantity the protection rules compare against 1 there.
pub fn lhs_state1(g: f64, omega: f64, delta_omega: f64) -> f64 {
    let (a, b) = dimensionless(g, omega, delta_omega);
    a - (a * a - b * b).max(0.0).sqrt()
}

/// Fast-branch excitation count `A + sqrt(A^2 - B^2)`, clamped like
/// [`lhs_state1`].
pub fn lhs_state2(g: f64, omega: f64, delta_omega: f64) -> f64 {
    let (a, b) = dimensionless(g, omega, delta_omega);
    a + (a * a - b * b).max(0.0).sqrt()
}

/// Protection of the state prepared in resonator 1 (the resonator with no
/// direct environment coupling).
pub fn state1_protected(g: f64, omega: f64, delta_omega: f64) -> bool {
    lhs_state1(g, omega, delta_omega) < 1.0
}

/// Protection of the state prepared in resonator 2.
pub fn state2_protected(g: f64, omega: f64, delta_omega: f64) -> bool {
    lhs_state2(g, omega, delta_omega) < 1.0
}

/// Above the exceptional point with `g` below [`g_both_protected_limit`]:
/// both initial states keep their excitation.
pub fn both_protected_above_ep(g: f64, omega: f64, delta_omega: f64) -> bool {
    omega > markovian_ep_coupling(g, delta_omega) && g < g_both_protected_limit(delta_omega)
}

/// Above the exceptional point with `g` beyond [`g_both_protected_limit`]:
/// neither initial state survives.
pub fn none_protected_above_ep(g: f64, omega: f64, delta_omega: f64) -> bool {
    omega > markovian_ep_coupling(g, delta_omega) && g > g_both_protected_limit(delta_omega)
}

/// Coupling at which `gamma = delta_omega`: `g = delta_omega / sqrt(pi)`.
/// Vertical guide line of the phase diagram.
pub fn g_gamma_equals_spacing(delta_omega: f64) -> f64 {
    delta_omega / std::f64::consts::PI.sqrt()
}

/// Coupling at which `gamma / 2 = delta_omega`: `g = sqrt(2/pi) delta_omega`.
/// Above the exceptional point this separates two-protected from
/// zero-protected.
pub fn g_both_protected_limit(delta_omega: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * delta_omega
}

/// Inclined guide line `Omega = sqrt(pi/2) g`, where the weak-coupling slow
/// rate `2 Omega^2 / gamma` reaches one mode spacing.
pub fn omega_weak_rate_line(g: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * g
}

/// How many of the two probe states stay protected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    TwoProtected,
    OneProtected,
    ZeroProtected,
}

impl Verdict {
    pub fn from_flags(state1: bool, state2: bool) -> Self {
        match (state1, state2) {
            (true, true) => Verdict::TwoProtected,
            (false, false) => Verdict::ZeroProtected,
            _ => Verdict::OneProtected,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Verdict::TwoProtected => 2,
            Verdict::OneProtected => 1,
            Verdict::ZeroProtected => 0,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::TwoProtected => "two-protected",
            Verdict::OneProtected => "one-protected",
            Verdict::ZeroProtected => "zero-protected",
        };
        f.write_str(s)
    }
}

/// Classification from the reduced-model rates alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticClassification {
    pub verdict: Verdict,
    pub state1_protected: bool,
    pub state2_protected: bool,
    /// Whether `(g, Omega)` sits above the exceptional-point line.
    pub above_ep: bool,
}

/// Applies the protection rules on each side of the exceptional-point line.
/// The two sides join continuously: on the line both branch expressions
/// collapse to the common rate.
pub fn analytic_classification(g: f64, omega: f64, delta_omega: f64) -> AnalyticClassification {
    let above_ep = omega > markovian_ep_coupling(g, delta_omega);
    let s1 = state1_protected(g, omega, delta_omega);
    let s2 = state2_protected(g, omega, delta_omega);
    AnalyticClassification {
        verdict: Verdict::from_flags(s1, s2),
        state1_protected: s1,
        state2_protected: s2,
        above_ep,
    }
}

/// Classification from full-comb memory functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseClassification {
    pub m_state1: f64,
    pub m_state2: f64,
    pub state1_protected: bool,
    pub state2_protected: bool,
    pub verdict: Verdict,
    pub threshold: f64,
}

fn validate_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && 0.0 < threshold && threshold < 1.0) {
        return Err(Error::InvalidParams(format!(
            "memory threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    Ok(())
}

/// Memory-based verdict for one parameter point. A single diagonalization
/// serves both probe states.
pub fn numeric_classification(
    params: &SystemParams,
    frame: Frame,
    window: &MemoryWindow,
    threshold: f64,
) -> Result<PhaseClassification> {
    validate_threshold(threshold)?;
    let decomp = crate::dynamics::diagonalize(&params.build_hamiltonian(frame)?)?;
    let m1 = memory_from_decomposition(
        &decomp,
        &crate::dynamics::StateVector::resonator1(params.n_modes),
        window,
    )?
    .m;
    let m2 = memory_from_decomposition(
        &decomp,
        &crate::dynamics::StateVector::resonator2(params.n_modes),
        window,
    )?
    .m;
    let s1 = m1 >= threshold;
    let s2 = m2 >= threshold;
    Ok(PhaseClassification {
        m_state1: m1,
        m_state2: m2,
        state1_protected: s1,
        state2_protected: s2,
        verdict: Verdict::from_flags(s1, s2),
        threshold,
    })
}

/// Evenly spaced grid axis including both endpoints. `steps = 1` collapses
/// to the lower endpoint.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidGrid("axis needs at least one point".into()));
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        return Err(Error::InvalidGrid(format!(
            "axis bounds must be finite with min <= max, got [{min}, {max}]"
        )));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    if min == max {
        return Err(Error::InvalidGrid(format!(
            "axis with {steps} points needs min < max, got [{min}, {max}]"
        )));
    }
    let d = (max - min) / (steps - 1) as f64;
    let mut axis: Vec<f64> = (0..steps).map(|i| min + i as f64 * d).collect();
    *axis.last_mut().unwrap() = max;
    Ok(axis)
}

/// Grid specification for a phase-diagram sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub omega0: f64,
    pub delta_omega: f64,
    pub n_modes: usize,
    pub index_convention: IndexConvention,
    pub frame: Frame,
    /// Ascending environment-coupling axis.
    pub g_values: Vec<f64>,
    /// Ascending inter-resonator-coupling axis.
    pub omega_values: Vec<f64>,
    pub threshold: f64,
    /// Defaults to [`MemoryWindow::defaults`] for the sweep's spacing.
    pub window: Option<MemoryWindow>,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        validate_threshold(self.threshold)?;
        for (name, axis) in [("g", &self.g_values), ("Omega", &self.omega_values)] {
            if axis.is_empty() {
                return Err(Error::InvalidGrid(format!("{name} axis is empty")));
            }
            if axis.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} axis entries must be finite and non-negative"
                )));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGrid(format!("{name} axis must be strictly ascending")));
            }
        }
        if let Some(w) = &self.window {
            w.validate()?;
        }
        Ok(())
    }

    fn resolved_window(&self) -> MemoryWindow {
        self.window.unwrap_or_else(|| {
            // The default window depends only on the spacing, identical for
            // every cell of the sweep.
            let t_r = std::f64::consts::TAU / self.delta_omega;
            MemoryWindow {
                tau: 5.0 * t_r,
                duration: 20.0 * t_r,
                n_samples: 4096,
            }
        })
    }

    fn cell_params(&self, g: f64, omega: f64) -> Result<SystemParams> {
        SystemParams::new(
            self.omega0,
            self.delta_omega,
            g,
            omega,
            self.n_modes,
            self.index_convention,
        )
    }
}

/// One grid cell: the analytic verdict always exists, the numeric one may
/// have failed.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub g: f64,
    pub omega: f64,
    pub analytic: AnalyticClassification,
    pub numeric: std::result::Result<PhaseClassification, String>,
}

/// Completed sweep over a `(g, Omega)` grid, row-major with `g` outermost.
#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub omega0: f64,
    pub delta_omega: f64,
    pub n_modes: usize,
    pub index_convention: IndexConvention,
    pub frame: Frame,
    pub threshold: f64,
    pub window: MemoryWindow,
    pub g_values: Vec<f64>,
    pub omega_values: Vec<f64>,
    cells: Vec<SweepCell>,
}

/// Runs the grid. Cells evaluate in parallel; a failing cell poisons only
/// itself and is reported in the diagram rather than aborting the sweep.
pub fn sweep(config: &SweepConfig) -> Result<PhaseDiagram> {
    config.validate()?;
    let window = config.resolved_window();
    let n_omega = config.omega_values.len();
    let total = config.g_values.len() * n_omega;
    let cells: Vec<SweepCell> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let g = config.g_values[idx / n_omega];
            let omega = config.omega_values[idx % n_omega];
            let numeric = config.cell_params(g, omega).and_then(|params| {
                numeric_classification(&params, config.frame, &window, config.threshold)
            });
            SweepCell {
                g,
                omega,
                analytic: analytic_classification(g, omega, config.delta_omega),
                numeric: numeric.map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(PhaseDiagram {
        omega0: config.omega0,
        delta_omega: config.delta_omega,
        n_modes: config.n_modes,
        index_convention: config.index_convention,
        frame: config.frame,
        threshold: config.threshold,
        window,
        g_values: config.g_values.clone(),
        omega_values: config.omega_values.clone(),
        cells,
    })
}

/// Which memory surface to export as a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemorySurface {
    State1,
    State2,
}

impl PhaseDiagram {
    pub fn cells(&self) -> &[SweepCell] {
        &self.cells
    }

    pub fn cell(&self, ig: usize, iomega: usize) -> &SweepCell {
        &self.cells[ig * self.omega_values.len() + iomega]
    }

    /// Fraction of cells whose numeric classification failed.
    pub fn invalid_fraction(&self) -> f64 {
        let bad = self.cells.iter().filter(|c| c.numeric.is_err()).count();
        bad as f64 / self.cells.len() as f64
    }

    /// Fraction of valid cells whose numeric verdict disagrees with the
    /// analytic one.
    pub fn disagreement_fraction(&self) -> f64 {
        let valid: Vec<_> = self.cells.iter().filter(|c| c.numeric.is_ok()).collect();
        if valid.is_empty() {
            return 0.0;
        }
        let off = valid
            .iter()
            .filter(|c| c.numeric.as_ref().unwrap().verdict != c.analytic.verdict)
            .count();
        off as f64 / valid.len() as f64
    }

    /// CSV of every cell, row-major, floats at full precision. Failed cells
    /// carry `nan` memories and the verdict `invalid`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "g,Omega,M_state1,M_state2,verdict,analytic_verdict")?;
        for cell in &self.cells {
            match &cell.numeric {
                Ok(num) => writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                    cell.g, cell.omega, num.m_state1, num.m_state2, num.verdict, cell.analytic.verdict
                )?,
                Err(_) => writeln!(
                    w,
                    "{:.16e},{:.16e},nan,nan,invalid,{}",
                    cell.g, cell.omega, cell.analytic.verdict
                )?,
            }
        }
        Ok(())
    }

    /// Machine-readable sweep description and summary.
    pub fn write_metadata<W: Write>(&self, w: W) -> Result<()> {
        let errors: Vec<serde_json::Value> = self
            .cells
            .iter()
            .filter_map(|c| {
                c.numeric.as_ref().err().map(|e| {
                    serde_json::json!({ "g": c.g, "Omega": c.omega, "error": e })
                })
            })
            .collect();
        let meta = serde_json::json!({
            "omega0": self.omega0,
            "delta_omega": self.delta_omega,
            "n_modes": self.n_modes,
            "index_convention": self.index_convention,
            "frame": self.frame,
            "threshold": self.threshold,
            "window": self.window,
            "g_values": self.g_values,
            "omega_values": self.omega_values,
            "n_cells": self.cells.len(),
            "invalid_fraction": self.invalid_fraction(),
            "disagreement_fraction": self.disagreement_fraction(),
            "cell_errors": errors,
            "reference_lines": {
                "g_gamma_equals_spacing": g_gamma_equals_spacing(self.delta_omega),
                "g_both_protected_limit": g_both_protected_limit(self.delta_omega),
                "omega_weak_rate_slope": (std::f64::consts::PI / 2.0).sqrt(),
            },
        });
        serde_json::to_writer_pretty(w, &meta).map_err(std::io::Error::from)?;
        Ok(())
    }

    /// Memory surface in gnuplot `nonuniform matrix` layout: first row the
    /// `g` axis, then one row per `Omega` value. Failed cells emit `nan`.
    pub fn write_matrix<W: Write>(&self, mut w: W, surface: MemorySurface) -> std::io::Result<()> {
        write!(w, "{}", self.g_values.len())?;
        for g in &self.g_values {
            write!(w, " {g:.16e}")?;
        }
        writeln!(w)?;
        for (io, omega) in self.omega_values.iter().enumerate() {
            write!(w, "{omega:.16e}")?;
            for ig in 0..self.g_values.len() {
                let value = match &self.cell(ig, io).numeric {
                    Ok(num) => match surface {
                        MemorySurface::State1 => num.m_state1,
                        MemorySurface::State2 => num.m_state2,
                    },
                    Err(_) => f64::NAN,
                };
                write!(w, " {value:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Analytic-only diagram over the same kind of grid; cheap at any size.
pub fn analytic_sweep(
    g_values: &[f64],
    omega_values: &[f64],
    delta_omega: f64,
) -> Result<Vec<(f64, f64, AnalyticClassification)>> {
    if g_values.is_empty() || omega_values.is_empty() {
        return Err(Error::InvalidGrid("axes must be non-empty".into()));
    }
    if delta_omega <= 0.0 || !delta_omega.is_finite() {
        return Err(Error::InvalidParams(format!(
            "delta_omega must be positive, got {delta_omega}"
        )));
    }
    let mut out = Vec::with_capacity(g_values.len() * omega_values.len());
    for &g in g_values {
        for &omega in omega_values {
            out.push((g, omega, analytic_classification(g, omega, delta_omega)));
        }
    }
    Ok(out)
}

/// Reduced-model rate check used by callers that want the raw numbers rather
/// than a verdict: `(N_slow, N_fast)` excitation counts at a point.
pub fn excitation_counts(params: &SystemParams) -> (f64, f64) {
    let model = MarkovianModel::from_system(params);
    let (slow, fast) = model.decay_rates();
    (
        n_excited(slow, params.delta_omega),
        n_excited(fast, params.delta_omega),
    )
}
