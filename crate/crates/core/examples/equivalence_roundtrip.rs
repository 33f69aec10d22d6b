//! Multiplicity extraction and the unitary equivalence, at vector level.
//!
//! `extract_multiplicity` finds the fiber F = q_{0,1}E of a semigroup; the
//! equivalence map M then identifies the semigroup with the standard shift
//! on L²-vectors over F.  This example pushes a concrete vector through M
//! and back and shows the shift intertwining on it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cstar_shift::algebra::AlgebraSignature;
use cstar_shift::cooper::{build_equivalence, disguised_shift_semigroup, extract_multiplicity};
use cstar_shift::grid::{FiberSpec, GridSpec, GridTime, GridVector};

fn main() -> cstar_shift::Result<()> {
    let spec = GridSpec::unilateral(8, FiberSpec::free(AlgebraSignature::scalar(), 1))?;
    let (sg, _) = disguised_shift_semigroup(&spec, 3, 314)?;

    let f = extract_multiplicity(&sg, 1e-8)?;
    println!(
        "extracted fiber: frame size {}, per-block dims {:?}",
        f.frame.len(),
        f.summary().per_block_dims
    );

    let horizon = 3u64; // ≥ disguise window, so the probes stay reachable
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (m, checks) = build_equivalence(&sg, &f, horizon, 1e-10, 1e-8, &mut rng)?;
    for c in &checks.checks {
        println!(
            "  {} {:<28} {:.3e}",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.residual
        );
    }

    // a random source vector g over F, supported on the horizon
    let slots: Vec<i64> = (0..(horizon * 8) as i64).collect();
    let g = GridVector::random(&m.source_spec, &slots, &mut rng)?;

    let x = m.forward(&g)?;
    let back = m.backward(&x)?;
    println!("\nround trip: ||M⁻¹ M g − g|| = {:.3e}", back.sub(&g).norm());
    println!("isometry:   | ||M g|| − ||g|| | = {:.3e}", (x.norm() - g.norm()).abs());

    // intertwining on this vector: M shift = semigroup M (stay in horizon)
    let t = GridTime::new(8);
    let mut truncated = GridVector::zero(&m.source_spec);
    for (j, v) in g.support() {
        if (j as u64) < (horizon - 1) * 8 {
            truncated.set(j, v.clone())?;
        }
    }
    let lhs = m.forward(&cstar_shift::grid::standard_shift(&m.source_spec, t)?.apply(&truncated))?;
    let rhs = sg.at(t).apply(&m.forward(&truncated)?);
    println!("intertwine: ||M s_t g − s'_t M g|| = {:.3e}", lhs.sub(&rhs).norm());
    Ok(())
}
