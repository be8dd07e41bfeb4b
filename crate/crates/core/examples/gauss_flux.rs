//! Flux of |∇u|^{m-2} ∇u out of random quadrilaterals clear of the contact
//! set, against the flux bound, for the limit ground state of the square.
//!
//!     cargo run --release --example gauss_flux -- [1/h] [seed]

use infground::analysis::{gauss_check, random_quads};
use infground::geometry::Polygon;
use infground::pipeline::{contact_stage, solve};

fn main() -> infground::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(32.0);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let solved = solve(
        &Polygon::unit_square(),
        1.0 / n,
        &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
    )?;
    let contact = contact_stage(&solved, 0.05).contact;
    for (i, q) in random_quads(&solved.polygon, &contact, &solved.ridge, 8, seed)
        .iter()
        .enumerate()
    {
        let mut line = format!("quad {i}:");
        for m in [2.0, 4.0, 8.0] {
            let r = gauss_check(&solved.limit.u, q, m, &contact, &solved.ridge)?;
            line.push_str(&format!("  m={m}: {:+.2e} / {:.2e}", r.value, r.tol));
        }
        println!("{line}");
    }
    Ok(())
}
