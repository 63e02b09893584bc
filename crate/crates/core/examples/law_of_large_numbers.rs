//! Checks that regime-conditional averages of the equilibrium error settle
//! at the common mean of -2 on a long nonlinear-design path.
//!
//! Run with `cargo run --example law_of_large_numbers`.

use cksvar_core::montecarlo::verify_lln;
use cksvar_core::DesignKind;

fn main() -> cksvar_core::Result<()> {
    for n in [2_000, 20_000, 200_000] {
        println!("{}\n", verify_lln(DesignKind::Nonlinear, n, 1)?.describe());
    }
    Ok(())
}
