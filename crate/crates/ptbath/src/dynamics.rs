//! Exact single-excitation dynamics.
//!
//! Two independent routes to the same state are kept deliberately separate:
//! spectral propagation (diagonalize once, then evaluate the exact phase
//! evolution at any time) and direct Runge-Kutta integration of the coupled
//! amplitude equations. The second exists to cross-check the first, so it is
//! built from the equations of motion term by term and never touches the
//! assembled Hamiltonian matrix.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Frame, HamiltonianMatrix, SystemParams};

/// Max absolute deviation of `V^T V` from the identity accepted by
/// [`diagonalize`].
pub const ORTHONORMALITY_TOL: f64 = 1e-12;
/// Max absolute reconstruction residual `|V L V^T - H|` accepted by
/// [`diagonalize`].
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Norm-conservation budget for the RK4 integrator; exceeding it aborts.
pub const RK4_NORM_DRIFT_LIMIT: f64 = 1e-4;

/// Complex amplitude vector ordered as `[a1, a2, b_1, ..., b_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes. At least the two resonator slots must be present.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidState(format!(
                "state needs at least 2 amplitudes, got {}",
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    /// Unit excitation in resonator 1, vacuum elsewhere.
    pub fn resonator1(n_modes: usize) -> Self {
        let mut amps = DVector::zeros(n_modes + 2);
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    /// Unit excitation in resonator 2, vacuum elsewhere.
    pub fn resonator2(n_modes: usize) -> Self {
        let mut amps = DVector::zeros(n_modes + 2);
        amps[1] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub(crate) fn from_dvector(amps: DVector<Complex64>) -> Self {
        debug_assert!(amps.len() >= 2);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Resonator-1 amplitude.
    pub fn a1(&self) -> Complex64 {
        self.amps[0]
    }

    /// Resonator-2 amplitude.
    pub fn a2(&self) -> Complex64 {
        self.amps[1]
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amps[i]
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// Total environment population, summed over every comb mode.
    pub fn env_population(&self) -> f64 {
        self.amps.iter().skip(2).map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm; errors on the zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize state with norm {n}")));
        }
        self.amps /= Complex64::from(n);
        Ok(self)
    }

    /// Largest elementwise amplitude distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Inner product `<bra|ket>` with the bra conjugated.
pub fn overlap(bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
    if bra.dim() != ket.dim() {
        return Err(Error::DimensionMismatch {
            expected: bra.dim(),
            actual: ket.dim(),
        });
    }
    Ok(bra.amps.dotc(&ket.amps))
}

/// Eigenfrequencies and orthonormal real eigenmodes of a Hamiltonian, sorted
/// ascending by frequency.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    frequencies: DVector<f64>,
    modes: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &DVector<f64> {
        &self.frequencies
    }

    /// Eigenmodes as matrix columns, ordered like [`frequencies`](Self::frequencies).
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// The k-th eigenmode as a (real) state.
    pub fn mode(&self, k: usize) -> StateVector {
        StateVector::from_dvector(self.modes.column(k).map(|x| Complex64::new(x, 0.0)))
    }
}

/// Full eigendecomposition of a real-symmetric Hamiltonian.
///
/// The result is validated before it is returned: the eigenvector matrix must
/// be orthonormal to [`ORTHONORMALITY_TOL`] and reproduce the input matrix to
/// [`RECONSTRUCTION_TOL`]. A decomposition that fails either check is a hard
/// error, not a warning, because every downstream quantity silently inherits
/// its defects.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    let dim = h.dim();
    let max_abs = h.matrix().amax();
    let fail = |detail: String| Error::Eigensolver { dim, max_abs, detail };

    let eig = nalgebra::SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 0)
        .ok_or_else(|| fail("iteration did not converge".into()))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let frequencies = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
    let modes = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).clone_owned())
            .collect::<Vec<_>>(),
    );

    let mut gram = modes.tr_mul(&modes);
    for i in 0..dim {
        gram[(i, i)] -= 1.0;
    }
    let ortho_residual = gram.amax();
    if ortho_residual > ORTHONORMALITY_TOL {
        return Err(fail(format!(
            "eigenvector orthonormality residual {ortho_residual:.3e} exceeds {ORTHONORMALITY_TOL:.1e}"
        )));
    }

    let mut scaled = modes.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= frequencies[k];
    }
    let recon_residual = (scaled * modes.transpose() - h.matrix()).amax();
    if recon_residual > RECONSTRUCTION_TOL {
        return Err(fail(format!(
            "reconstruction residual {recon_residual:.3e} exceeds {RECONSTRUCTION_TOL:.1e}"
        )));
    }

    Ok(SpectralDecomposition { frequencies, modes })
}

/// Reusable exact propagator for one initial state.
///
/// Projecting the initial state onto the eigenbasis happens once here; every
/// subsequent [`state_at`](Self::state_at) costs two real matrix-vector
/// products regardless of `t`. Evolution is exact up to roundoff at any time,
/// positive or negative.
pub struct Propagator<'a> {
    decomp: &'a SpectralDecomposition,
    coeff_re: DVector<f64>,
    coeff_im: DVector<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(decomp: &'a SpectralDecomposition, psi0: &StateVector) -> Result<Self> {
        if psi0.dim() != decomp.dim() {
            return Err(Error::DimensionMismatch {
                expected: decomp.dim(),
                actual: psi0.dim(),
            });
        }
        let re = psi0.amps.map(|a| a.re);
        let im = psi0.amps.map(|a| a.im);
        Ok(Self {
            decomp,
            coeff_re: decomp.modes().tr_mul(&re),
            coeff_im: decomp.modes().tr_mul(&im),
        })
    }

    /// State at time `t` (the eigenmodes are real, so the complex rotation
    /// factors through two real products).
    pub fn state_at(&self, t: f64) -> StateVector {
        let n = self.decomp.dim();
        let mut w_re = DVector::<f64>::zeros(n);
        let mut w_im = DVector::<f64>::zeros(n);
        for k in 0..n {
            let (s, c) = (self.decomp.frequencies()[k] * t).sin_cos();
            // exp(-i w t) * (cr + i ci)
            w_re[k] = c * self.coeff_re[k] + s * self.coeff_im[k];
            w_im[k] = c * self.coeff_im[k] - s * self.coeff_re[k];
        }
        let out_re = self.decomp.modes() * w_re;
        let out_im = self.decomp.modes() * w_im;
        StateVector::from_dvector(DVector::from_iterator(
            n,
            out_re
                .iter()
                .zip(out_im.iter())
                .map(|(&re, &im)| Complex64::new(re, im)),
        ))
    }
}

/// One-shot exact propagation to time `t`.
pub fn propagate(decomp: &SpectralDecomposition, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::InvalidGrid(format!("time must be finite, got {t}")));
    }
    Ok(Propagator::new(decomp, psi0)?.state_at(t))
}

/// Exact propagation sampled on a caller-supplied strictly ascending grid.
pub fn propagate_series(
    decomp: &SpectralDecomposition,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Trajectory> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("time grid contains a non-finite entry".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedTimes);
    }
    let prop = Propagator::new(decomp, psi0)?;
    Trajectory::from_samples(times.iter().map(|&t| (t, prop.state_at(t))).collect())
}

/// A time-ordered sequence of states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, StateVector)>,
}

impl Trajectory {
    /// Builds from `(time, state)` pairs; times must be strictly increasing
    /// and all states must share one dimension.
    pub fn from_samples(samples: Vec<(f64, StateVector)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidGrid("trajectory needs at least one sample".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::UnsortedTimes);
        }
        let dim = samples[0].1.dim();
        if let Some((t, s)) = samples.iter().find(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidState(format!(
                "sample at t = {t} has dimension {}, expected {dim}",
                s.dim()
            )));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(f64, StateVector)] {
        &self.samples
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }

    pub fn states(&self) -> impl Iterator<Item = &StateVector> {
        self.samples.iter().map(|(_, s)| s)
    }

    /// Writes the resonator amplitudes and total environment population as
    /// CSV. Floats carry 17 significant digits so a read-back is exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,re_a1,im_a1,abs2_a1,re_a2,im_a2,abs2_a2,abs2_env_total")?;
        for (t, state) in &self.samples {
            let a1 = state.a1();
            let a2 = state.a2();
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                a1.re,
                a1.im,
                a1.norm_sqr(),
                a2.re,
                a2.im,
                a2.norm_sqr(),
                state.env_population()
            )?;
        }
        Ok(())
    }
}

/// Right-hand side of the coupled amplitude equations, assembled from the
/// written-out equations of motion rather than the Hamiltonian matrix.
struct AmplitudeRhs {
    resonator_freq: f64,
    coupling: f64,
    g: f64,
    env_freqs: Vec<f64>,
}

impl AmplitudeRhs {
    fn new(params: &SystemParams, frame: Frame) -> Self {
        let base = match frame {
            Frame::Absolute => params.omega0,
            Frame::Rotating => 0.0,
        };
        Self {
            resonator_freq: base,
            coupling: params.omega,
            g: params.g,
            env_freqs: params.environment_offsets().map(|off| base + off).collect(),
        }
    }

    fn eval(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let minus_i = Complex64::new(0.0, -1.0);
        let b_sum: Complex64 = psi[2..].iter().sum();
        out[0] = minus_i * (self.resonator_freq * psi[0] + self.coupling * psi[1]);
        out[1] = minus_i * (self.resonator_freq * psi[1] + self.coupling * psi[0] + self.g * b_sum);
        for (j, &wj) in self.env_freqs.iter().enumerate() {
            out[2 + j] = minus_i * (wj * psi[2 + j] + self.g * psi[1]);
        }
    }
}

/// Fixed-step RK4 integration streaming each step into `on_step`.
///
/// `on_step` receives `(t, amplitudes)` for the initial state and after every
/// step; the final call is at exactly `t_end` even when `dt` does not divide
/// it. The squared norm is monitored against the initial value after every
/// step and drift beyond [`RK4_NORM_DRIFT_LIMIT`] aborts the run.
pub fn rk4_scan<F>(
    params: &SystemParams,
    frame: Frame,
    psi0: &StateVector,
    t_end: f64,
    dt: f64,
    mut on_step: F,
) -> Result<()>
where
    F: FnMut(f64, &[Complex64]),
{
    params.validate()?;
    let dim = params.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: psi0.dim(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::InvalidGrid(format!("t_end must be non-negative, got {t_end}")));
    }

    let rhs = AmplitudeRhs::new(params, frame);
    let mut y: Vec<Complex64> = psi0.amplitudes().iter().copied().collect();
    let mut k1 = vec![Complex64::default(); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    let norm0: f64 = y.iter().map(|a| a.norm_sqr()).sum();

    on_step(0.0, &y);

    let mut n_full = (t_end / dt).floor() as u64;
    // Keep the final partial step strictly positive so the last sample lands
    // exactly on t_end.
    while n_full > 0 && n_full as f64 * dt >= t_end {
        n_full -= 1;
    }
    let rem = t_end - n_full as f64 * dt;

    let step = |h: f64,
                y: &mut Vec<Complex64>,
                    k1: &mut Vec<Complex64>,
                    k2: &mut Vec<Complex64>,
                    k3: &mut Vec<Complex64>,
                    k4: &mut Vec<Complex64>,
                    stage: &mut Vec<Complex64>| {
        rhs.eval(y, k1);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs.eval(stage, k2);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs.eval(stage, k3);
        for i in 0..dim {
            stage[i] = y[i] + h * k3[i];
        }
        rhs.eval(stage, k4);
        let w = h / 6.0;
        for i in 0..dim {
            y[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    };

    let check_norm = |t: f64, y: &[Complex64]| -> Result<()> {
        let norm: f64 = y.iter().map(|a| a.norm_sqr()).sum();
        let drift = (norm - norm0).abs();
        if drift > RK4_NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift {
                t,
                drift,
                limit: RK4_NORM_DRIFT_LIMIT,
            });
        }
        Ok(())
    };

    for k in 1..=n_full {
        step(dt, &mut y, &mut k1, &mut k2, &mut k3, &mut k4, &mut stage);
        let t = k as f64 * dt;
        check_norm(t, &y)?;
        on_step(t, &y);
    }
    if rem > 0.0 {
        step(rem, &mut y, &mut k1, &mut k2, &mut k3, &mut k4, &mut stage);
        check_norm(t_end, &y)?;
        on_step(t_end, &y);
    }
    Ok(())
}

/// Fixed-step RK4 integration of the amplitude equations, sampled at every
/// step. Prefer [`rk4_scan`] when the full trajectory would be large.
pub fn rk4_integrate(
    params: &SystemParams,
    frame: Frame,
    psi0: &StateVector,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let mut samples = Vec::new();
    rk4_scan(params, frame, psi0, t_end, dt, |t, amps| {
        samples.push((t, StateVector::from_dvector(DVector::from_row_slice(amps))));
    })?;
    Trajectory::from_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IndexConvention;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn small_params() -> SystemParams {
        SystemParams::new(1.0, 1e-3, 3e-3, 6e-3, 1, IndexConvention::Symmetric).unwrap()
    }

    fn fig2_like(n_modes: usize) -> SystemParams {
        SystemParams::new(1.0, 2e-3, 7.5e-4, 5e-4, n_modes, IndexConvention::AsWritten).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        StateVector::new(
            (0..dim)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn state_constructors() {
        let s = StateVector::resonator1(3);
        assert_eq!(s.dim(), 5);
        assert_eq!(s.a1(), Complex64::new(1.0, 0.0));
        assert_eq!(s.norm_sqr(), 1.0);
        assert_eq!(s.env_population(), 0.0);

        let s = StateVector::resonator2(3);
        assert_eq!(s.a2(), Complex64::new(1.0, 0.0));
        assert_eq!(s.a1(), Complex64::default());

        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(StateVector::new(vec![Complex64::new(f64::NAN, 0.0); 3]).is_err());
    }

    #[test]
    fn overlap_conjugates_the_bra() {
        let a = StateVector::new(vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]).unwrap();
        let b = StateVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(overlap(&a, &b).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(overlap(&b, &a).unwrap(), Complex64::new(0.0, 1.0));
        assert!(overlap(&a, &StateVector::resonator1(4)).is_err());
    }

    #[test]
    fn diagonalize_single_mode_has_closed_form() {
        // Rotating, symmetric single mode: eigenfrequencies 0, +-sqrt(O^2+g^2).
        let p = small_params();
        let h = p.build_hamiltonian(Frame::Rotating).unwrap();
        let d = diagonalize(&h).unwrap();
        let r = (p.omega * p.omega + p.g * p.g).sqrt();
        assert_relative_eq!(d.frequencies()[0], -r, max_relative = 1e-12);
        assert_abs_diff_eq!(d.frequencies()[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.frequencies()[2], r, max_relative = 1e-12);
    }

    #[test]
    fn diagonalize_sorts_and_validates() {
        let p = fig2_like(40);
        let h = p.build_hamiltonian(Frame::Absolute).unwrap();
        let d = diagonalize(&h).unwrap();
        assert!(d.frequencies().iter().zip(d.frequencies().iter().skip(1)).all(|(a, b)| a <= b));
        for k in 0..d.dim() {
            assert_relative_eq!(d.mode(k).norm_sqr(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn propagation_at_zero_is_identity() {
        let p = fig2_like(10);
        let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let psi0 = random_state(p.dim(), 7);
        let back = propagate(&d, &psi0, 0.0).unwrap();
        assert!(back.max_abs_diff(&psi0).unwrap() < 1e-13);
    }

    #[test]
    fn propagation_is_reversible() {
        let p = fig2_like(10);
        let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let psi0 = random_state(p.dim(), 11);
        let fwd = propagate(&d, &psi0, 137.5).unwrap();
        let back = propagate(&d, &fwd, -137.5).unwrap();
        assert!(back.max_abs_diff(&psi0).unwrap() < 1e-12);
    }

    #[test]
    fn decoupled_resonators_undergo_exact_rabi_oscillation() {
        // g = 0: the resonator pair closes on itself, a1(t) = cos(Omega t) in
        // the rotating frame.
        let p = SystemParams::new(1.0, 1e-3, 0.0, 4e-3, 5, IndexConvention::Symmetric).unwrap();
        let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let psi0 = StateVector::resonator1(5);
        let prop = Propagator::new(&d, &psi0).unwrap();
        for &t in &[0.0, 13.7, 100.0, 392.7, 1000.0] {
            let s = prop.state_at(t);
            let (sin, cos) = (p.omega * t).sin_cos();
            assert_abs_diff_eq!(s.a1().re, cos, epsilon = 1e-10);
            assert_abs_diff_eq!(s.a1().im, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s.a2().re, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s.a2().im, -sin, epsilon = 1e-10);
            assert_abs_diff_eq!(s.env_population(), 0.0, epsilon = 1e-20);
        }
    }

    #[test]
    fn frames_agree_on_populations() {
        let p = fig2_like(20);
        let d_rot = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let d_abs = diagonalize(&p.build_hamiltonian(Frame::Absolute).unwrap()).unwrap();
        let psi0 = StateVector::resonator1(20);
        for &t in &[50.0, 500.0, 1500.0] {
            let s_rot = propagate(&d_rot, &psi0, t).unwrap();
            let s_abs = propagate(&d_abs, &psi0, t).unwrap();
            assert_abs_diff_eq!(s_rot.a1().norm(), s_abs.a1().norm(), epsilon = 1e-11);
            assert_abs_diff_eq!(s_rot.a2().norm(), s_abs.a2().norm(), epsilon = 1e-11);
            assert_abs_diff_eq!(s_rot.env_population(), s_abs.env_population(), epsilon = 1e-11);
            // The frames differ by a global phase exp(i omega0 t) on every
            // amplitude.
            let phase = Complex64::new(0.0, -p.omega0 * t).exp();
            assert!((s_abs.a1() - phase * s_rot.a1()).norm() < 1e-10);
            assert!((s_abs.a2() - phase * s_rot.a2()).norm() < 1e-10);
        }
    }

    #[test]
    fn propagate_series_validates_the_grid() {
        let p = fig2_like(5);
        let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let psi0 = StateVector::resonator1(5);
        assert!(matches!(
            propagate_series(&d, &psi0, &[]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            propagate_series(&d, &psi0, &[0.0, 1.0, 1.0]),
            Err(Error::UnsortedTimes)
        ));
        assert!(matches!(
            propagate_series(&d, &psi0, &[0.0, 2.0, 1.0]),
            Err(Error::UnsortedTimes)
        ));
        let traj = propagate_series(&d, &psi0, &[-5.0, 0.0, 5.0]).unwrap();
        assert_eq!(traj.len(), 3);
    }

    #[test]
    fn trajectory_csv_shape_and_precision() {
        let s = StateVector::new(vec![
            Complex64::new(0.5, -0.25),
            Complex64::new(0.0, 0.75),
            Complex64::new(0.25, 0.0),
        ])
        .unwrap();
        let traj = Trajectory::from_samples(vec![(0.0, s.clone()), (0.5, s)]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_a1,im_a1,abs2_a1,re_a2,im_a2,abs2_a2,abs2_env_total"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.3125);
        assert_eq!(row[7].parse::<f64>().unwrap(), 0.0625);
    }

    #[test]
    fn rk4_handles_partial_final_step() {
        let p = small_params();
        let psi0 = StateVector::resonator1(1);
        // 0.35 / 0.1 leaves a 0.05 remainder.
        let traj = rk4_integrate(&p, Frame::Rotating, &psi0, 0.35, 0.1).unwrap();
        let times: Vec<f64> = traj.times().collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 0.35);
        assert!(times.windows(2).all(|w| w[1] > w[0]));

        // Exact division must not produce a duplicated endpoint.
        let traj = rk4_integrate(&p, Frame::Rotating, &psi0, 0.4, 0.1).unwrap();
        let times: Vec<f64> = traj.times().collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 0.4);
    }

    #[test]
    fn rk4_rejects_bad_grids() {
        let p = small_params();
        let psi0 = StateVector::resonator1(1);
        assert!(rk4_integrate(&p, Frame::Rotating, &psi0, 1.0, 0.0).is_err());
        assert!(rk4_integrate(&p, Frame::Rotating, &psi0, 1.0, -0.1).is_err());
        assert!(rk4_integrate(&p, Frame::Rotating, &psi0, -1.0, 0.1).is_err());
        assert!(rk4_integrate(&p, Frame::Rotating, &StateVector::resonator1(4), 1.0, 0.1).is_err());
    }

    #[test]
    fn rk4_aborts_on_norm_drift() {
        // A step far too large for the absolute-frame frequencies blows up the
        // norm; the integrator must refuse to continue silently.
        let p = SystemParams::new(1.0, 1e-3, 1e-2, 1e-2, 3, IndexConvention::AsWritten).unwrap();
        let psi0 = StateVector::resonator1(3);
        match rk4_integrate(&p, Frame::Absolute, &psi0, 5000.0, 3.0) {
            Err(Error::NormDrift { drift, .. }) => assert!(drift > RK4_NORM_DRIFT_LIMIT),
            other => panic!("expected NormDrift, got {other:?}"),
        }
    }

    #[test]
    fn rk4_tracks_spectral_propagation() {
        let p = fig2_like(8);
        let psi0 = random_state(p.dim(), 3);
        let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
        let prop = Propagator::new(&d, &psi0).unwrap();
        let mut worst = 0.0f64;
        rk4_scan(&p, Frame::Rotating, &psi0, 200.0, 0.05, |t, amps| {
            let exact = prop.state_at(t);
            let diff = amps
                .iter()
                .zip(exact.amplitudes().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(diff);
        })
        .unwrap();
        assert!(worst < 1e-9, "worst deviation {worst:.3e}");
    }

    proptest! {
        #[test]
        fn spectral_propagation_is_unitary(
            seed in 0u64..5000,
            t in -2000.0f64..2000.0,
            n in 1usize..25,
        ) {
            let p = SystemParams::new(
                1.0, 2e-3, 1.5e-3, 1e-3, n, IndexConvention::AsWritten,
            ).unwrap();
            let d = diagonalize(&p.build_hamiltonian(Frame::Rotating).unwrap()).unwrap();
            let psi0 = random_state(p.dim(), seed);
            let psi = propagate(&d, &psi0, t).unwrap();
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
