//! Estimates the regime long-run standard deviations of a series and the
//! standardized initial value used to pick MB critical values.
//!
//! Run with `cargo run --example initial_value`.

use cksvar_core::lrv::{estimate_w0, lrv_estimate, Kernel, LagRule};
use cksvar_core::RngState;

fn main() -> cksvar_core::Result<()> {
    let mut rng = RngState::new(3);
    let n = 2000;
    let mut y = vec![4.0];
    for _ in 0..n {
        let last = *y.last().unwrap();
        // Steps are twice as volatile below zero.
        let sd = if last >= 0.0 { 1.0 } else { 2.0 };
        y.push(last + sd * rng.next_normal());
    }
    let est = lrv_estimate(&y, LagRule::Auto, Kernel::Bartlett)?;
    println!(
        "omega+ = {:?}, omega- = {:?}, {} lags{}",
        est.omega_plus,
        est.omega_minus,
        est.lags_used,
        if est.clamped { " (clamped)" } else { "" }
    );
    let w0 = estimate_w0(y[0], n, &est)?;
    println!("W0 estimate {:.4} from the {} regime", w0.value, if w0.regime_used > 0 { "+" } else { "-" });
    Ok(())
}
