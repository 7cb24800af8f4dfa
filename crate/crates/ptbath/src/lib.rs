//! Exact single-excitation dynamics of two coupled resonators embedded in a
//! finite comb of environment modes, together with the reduced two-mode
//! picture that emerges when the comb acts as a Markovian loss channel.
//!
//! The crate covers five connected capabilities:
//!
//! * [`model`]: system parameters and the real-symmetric Hamiltonian of the
//!   resonator pair plus `N` equally spaced environment modes.
//! * [`dynamics`]: exact propagation, either spectrally (diagonalize once,
//!   evaluate at any time) or by a streaming fourth-order integrator built
//!   from the amplitude equations.
//! * [`markovian`]: the non-Hermitian 2x2 reduction, its eigenvalues,
//!   eigenvectors, exceptional point, and symmetry phase.
//! * [`memory`]: the long-time memory of an initial state, a windowed
//!   average of the survival probability.
//! * [`phase`]: analytic protection regions, numeric memory sweeps over the
//!   coupling plane, and the boundary curves between them.
//!
//! The reduced picture in three lines:
//!
//! ```
//! use ptbath::markovian::{MarkovianModel, PtPhase};
//!
//! // Inter-resonator coupling above gamma/2 keeps both modes decaying at
//! // the same rate; below it the rates split.
//! let model = MarkovianModel::new(1e-2, 2e-2, 1.0).unwrap();
//! assert_eq!(model.pt_phase(), PtPhase::Symmetric);
//! let (fast, slow) = (model.decay_rates().0, model.decay_rates().1);
//! assert!((fast - slow).abs() < 1e-15);
//! ```

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod markovian;
pub mod memory;
pub mod model;
pub mod phase;

pub use dynamics::{
    diagonalize, overlap, propagate, propagate_series, rk4_integrate, rk4_scan, Propagator,
    SpectralDecomposition, StateVector, Trajectory,
};
pub use error::{Error, Result};
pub use markovian::{MarkovianModel, PtPhase};
pub use memory::{memory, MemoryEstimate, MemoryWindow};
pub use model::{Frame, HamiltonianMatrix, IndexConvention, SystemParams, MAX_MODES};
pub use phase::{analytic_classification, numeric_classification, sweep, PhaseDiagram, SweepConfig};
