//! Generalized eigenvalues of a symmetric-definite pencil, the kernel of
//! both rank statistics.
//!
//! Run with `cargo run --example pencil`.

use cksvar_core::pencil::{gen_eig_pencil, sym_eig};
use cksvar_core::Mat;

fn main() -> cksvar_core::Result<()> {
    let a = Mat::from_rows(&[[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]]);
    let b = Mat::from_rows(&[[2.0, 0.3, 0.1], [0.3, 1.0, 0.0], [0.1, 0.0, 0.5]]);
    let pencil = gen_eig_pencil(&a, &b)?;
    println!("det(lambda B - A) = 0 at {:?}", pencil.eigenvalues);
    println!("ill-conditioned B: {}", pencil.condition_flag);
    println!("eigenvalues of A alone: {:?}", sym_eig(&a)?.values);
    Ok(())
}
