//! Tabulates unconditional and occupation-conditional critical values of
//! the MB limit for one common trend.
//!
//! Run with `cargo run --release --example critical_values`.

use cksvar_core::limitdist::{make_table, LimitSimConfig};
use cksvar_core::Variant;

fn main() -> cksvar_core::Result<()> {
    let cfg = LimitSimConfig {
        grid: 1000,
        reps: 20_000,
        taus: vec![0.0, 0.15],
        alphas: vec![0.01, 0.05, 0.1],
        ..LimitSimConfig::new(Variant::Mb, 1)
    };
    let table = make_table(&cfg)?;
    print!("{}", table.to_csv_string());
    Ok(())
}
