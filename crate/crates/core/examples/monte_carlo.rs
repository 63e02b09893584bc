//! A small version of the rejection-rate study: critical values from short
//! limit simulations, then 200 replications per cell.
//!
//! Run with `cargo run --release --example monte_carlo`.

use cksvar_core::limitdist::{make_table, CritValTable, LimitSimConfig};
use cksvar_core::montecarlo::{format_table, run_table, McConfig};
use cksvar_core::Variant;

fn table(variant: Variant, tau: f64) -> cksvar_core::Result<CritValTable> {
    let mut t = CritValTable::default();
    for q0 in 1..=2 {
        t.merge(&make_table(&LimitSimConfig {
            grid: 1000,
            reps: 10_000,
            taus: vec![tau],
            ..LimitSimConfig::new(variant, q0)
        })?);
    }
    Ok(t)
}

fn main() -> cksvar_core::Result<()> {
    let cfg = McConfig {
        reps: 200,
        sample_sizes: vec![200, 1000],
        threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..McConfig::new(table(Variant::Mb, 0.15)?, table(Variant::Sb, 0.0)?)
    };
    print!("{}", format_table(&run_table(&cfg)?));
    Ok(())
}
