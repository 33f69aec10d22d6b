//! Interleaving: promote a single isometry to a whole semigroup.
//!
//! Given one isometry s̆ on a module, distribute it across the N slots of a
//! unit interval so that fractional times rotate through the slots and every
//! whole unit applies s̆ once to each.  The semigroup law then holds exactly,
//! and interleaving the one-step *shift* reproduces the standard right shift.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cstar_shift::algebra::AlgebraSignature;
use cstar_shift::cooper::random_probes;
use cstar_shift::gallery::{interleave, interleave_is_shift, verify_interleave_law};
use cstar_shift::grid::{FiberSpec, GridSpec, GridTime};
use cstar_shift::wold::StructuredIsometry;

fn main() -> cstar_shift::Result<()> {
    let n = 6usize;
    let fiber = FiberSpec::free(AlgebraSignature::new(vec![2])?, 1);

    // base s̆: the one-step shift on a one-slot-per-unit grid
    let base_spec = GridSpec::unilateral(1, fiber.clone())?;
    let base = StructuredIsometry::pure_shift(&base_spec)?;
    let sg = interleave(&base, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let probes = random_probes(sg.spec(), 3 * n as u64, 5, &mut rng)?;

    println!("interleaving s̆ across {n} slots per unit:");
    let report = verify_interleave_law(&sg, &probes, 1e-12);
    for c in &report.checks {
        println!(
            "  {} {:<36} {:.3e}",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.residual
        );
    }

    // a single fractional step moves a slot-0 vector to slot 1
    let x = probes[0].clone();
    let moved = sg.at(GridTime::new(1)).apply(&x);
    println!(
        "  one fractional step: support {:?} → {:?}",
        x.support_slots(),
        moved.support_slots()
    );

    let res = interleave_is_shift(&fiber, n, 3, 7)?;
    println!("\ninterleaved one-step shift vs standard right shift: max residual {res:.3e}");
    Ok(())
}
