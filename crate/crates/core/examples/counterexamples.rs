//! A tour of the counterexample gallery.
//!
//! Four small constructions that mark the boundaries of the reconstruction
//! theorem:
//!
//! * no Wold decomposition for semigroups of isometries in general
//!   (range projections that never converge),
//! * an isometry semigroup that is not strongly continuous,
//! * the finite shadow of the non-adjointable example (complement mass 1/m),
//! * the Weyl commutation relations on the grid.

use cstar_shift::gallery::{
    nonadex_shadow, nondecex_check, nondecex_pointwise_decay, nonsc_check, nonsc_uniform_probe,
    weyl_check,
};
use cstar_shift::grid::GridTime;

fn main() -> cstar_shift::Result<()> {
    // --- no decomposition ---------------------------------------------------
    let k = 12;
    println!("[non-decomposition] sequence space over C^{k}, f(k) = e_k");
    for (n, m) in [(0, 1), (1, 2), (3, 9)] {
        let d = nondecex_check(k, n, m)?;
        println!("  ||(r_{n} - r_{m}) f|| = {d}   (always 1: the r_n never settle)");
    }
    let decay = nondecex_pointwise_decay(k)?;
    println!("  yet pointwise ||s̆†^n f||: {:?} — each coordinate is pure", decay);

    // --- no strong continuity ----------------------------------------------
    let (trunc, slots) = (8, 80);
    println!("\n[broken strong continuity] thin indicators 1_[1/(k+1),1/k), k ≤ {trunc}");
    for t in [1, 4, 10] {
        let jump = nonsc_check(trunc, slots, GridTime::new(t))?;
        println!("  ||s_t g - g|| at t = {t}/{slots}: {jump:.4}  (√2 ≈ 1.4142 once an indicator clears itself)");
    }
    let smooth = nonsc_uniform_probe(slots, GridTime::new(1))?;
    println!("  same shift on a smooth profile: {smooth:.4} — continuity only fails on the witness");

    // --- non-adjointability shadow ------------------------------------------
    println!("\n[non-adjointability shadow] ideal-restricted bilateral shift, one marked point");
    for p in nonadex_shadow(&[4, 8, 16, 32], GridTime::new(1), 4, 2)? {
        println!(
            "  m = {:>2}: complement fraction {:.4} = 1/m, complement norm {}",
            p.m, p.complement_fraction, p.complement_norm
        );
    }
    println!("  the fraction vanishes as m → ∞ while the norm stays 1: in the limit the");
    println!("  complement is zero although the semigroup is not unitary");

    // --- Weyl relations ------------------------------------------------------
    let w = weyl_check(8, GridTime::new(3), 2.5, 6, 1)?;
    println!(
        "\n[Weyl] ŝ_s m_t ŝ_s⁻¹ m_t⁻¹ = {:.4}{:+.4}i · id, deviation {:.3e}",
        w.expected_phase.re, w.expected_phase.im, w.max_residual
    );
    println!("  shift and phase multiplication commute only up to this scalar");
    Ok(())
}
