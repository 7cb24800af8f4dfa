//! The closed-form protection regions, no diagonalization involved. Prints
//! the guide constants and a region map from the mode-count rules alone.
//!
//! Run with `cargo run --example analytic_boundaries`.

use ptbath::phase::{
    analytic_classification, g_both_protected_limit, g_gamma_equals_spacing, linspace,
    omega_weak_rate_line, Verdict,
};

fn main() -> ptbath::Result<()> {
    let dw = 2e-3;
    println!("mode spacing {dw:.1e}");
    println!(
        "gamma = spacing at        g = {:.6e}  ({:.4} spacing)",
        g_gamma_equals_spacing(dw),
        g_gamma_equals_spacing(dw) / dw
    );
    println!(
        "above-EP protection ends: g = {:.6e}  ({:.4} spacing)",
        g_both_protected_limit(dw),
        g_both_protected_limit(dw) / dw
    );
    println!(
        "slow-rate line:       Omega = {:.6e} at g = 1e-3  (slope sqrt(pi/2))",
        omega_weak_rate_line(1e-3)
    );

    let gs = linspace(0.05 * dw, 3.0 * dw, 60)?;
    let oms = linspace(0.05 * dw, 3.0 * dw, 24)?;
    println!("\nanalytic regions (columns: g, rows: Omega, top row largest Omega)");
    println!("  2 = two protected, 1 = one protected, . = none\n");
    for io in (0..oms.len()).rev() {
        let mut row = String::from("    ");
        for g in &gs {
            let c = analytic_classification(*g, oms[io], dw);
            row.push(match c.verdict {
                Verdict::TwoProtected => '2',
                Verdict::OneProtected => '1',
                Verdict::ZeroProtected => '.',
            });
        }
        println!("{row}");
    }
    println!("\nLeft of g = {:.2} spacing everything is protected; the wedge between",
        g_gamma_equals_spacing(dw) / dw);
    println!("the vertical line and the sloped rate line keeps one protected state.");
    Ok(())
}
