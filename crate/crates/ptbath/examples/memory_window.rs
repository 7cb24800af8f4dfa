//! How the memory estimate settles as the averaging window and the sample
//! count grow. The quadrature reports its own half-grid delta, so the last
//! column shows when the estimate can be trusted.
//!
//! Run with `cargo run --release --example memory_window`.

use ptbath::dynamics::{diagonalize, StateVector};
use ptbath::memory::{memory_from_decomposition, MemoryWindow};
use ptbath::model::{Frame, IndexConvention, SystemParams};

fn main() -> ptbath::Result<()> {
    let params = SystemParams::new(1.0, 2e-3, 7.5e-4, 5e-4, 60, IndexConvention::AsWritten)?;
    let t_r = params.revival_time();
    let decomp = diagonalize(&params.build_hamiltonian(Frame::Rotating)?)?;
    let psi0 = StateVector::resonator1(params.n_modes);

    println!("window start tau = 5 T_R, growing length, n = 4096:");
    println!("      T/T_R          M     half-grid delta");
    for t_over in [2.0, 5.0, 10.0, 20.0, 40.0] {
        let window = MemoryWindow::new(5.0 * t_r, t_over * t_r, 4096)?;
        let est = memory_from_decomposition(&decomp, &psi0, &window)?;
        println!(
            "      {t_over:5.1}    {:.6}        {:.2e}",
            est.m, est.convergence_delta
        );
    }

    println!("\nfixed window (T = 20 T_R), growing sample count:");
    println!("          n          M     half-grid delta");
    for n in [64, 256, 1024, 4096, 16384] {
        let window = MemoryWindow::new(5.0 * t_r, 20.0 * t_r, n)?;
        let est = memory_from_decomposition(&decomp, &psi0, &window)?;
        println!(
            "      {n:5}    {:.6}        {:.2e}",
            est.m, est.convergence_delta
        );
    }
    Ok(())
}
