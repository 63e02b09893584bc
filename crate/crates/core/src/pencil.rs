//! Dense kernels for the symmetric-definite generalized eigenvalue problem.
//!
//! The pencil `det(λB − A) = 0` with `A` positive semi-definite and `B`
//! positive definite is reduced to a standard symmetric problem through
//! `B = LLᵀ`: the eigenvalues are those of `L⁻¹AL⁻ᵀ`. The symmetric step
//! uses cyclic Jacobi rotations, which is slow for large matrices but
//! accurate and unconditionally convergent for the tiny dimensions here.
//!
//! The module also hosts the handful of rank-revealing helpers the model
//! checks need (one-sided Jacobi SVD, orthogonal complements, least
//! squares projections).

pub use crate::mat::Mat;
use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues down to `-NEG_CLAMP` (scaled by `max(1, λmax)`) are set to zero.
pub const NEG_CLAMP: f64 = 1e-10;
/// Smallest/largest Cholesky pivot ratio below which the factor is flagged.
pub const ILL_CONDITIONED: f64 = 1e-12;
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PencilResult {
    /// Ascending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Set when the definite factor has smallest/largest pivot ratio below
    /// [`ILL_CONDITIONED`].
    pub condition_flag: bool,
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat,
}

#[derive(Debug, Clone)]
pub struct Svd {
    /// `m × k` with orthonormal columns, `k = min(m, n)`.
    pub u: Mat,
    /// Descending singular values, length `k`.
    pub sigma: Vec<f64>,
    /// `n × k` with orthonormal columns.
    pub v: Mat,
}

fn check_symmetric(m: &Mat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::DimensionMismatch("matrix has non-finite entries".into()));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric);
    }
    Ok(())
}

/// Cholesky factor plus the smallest/largest pivot ratio.
fn cholesky_with_ratio(m: &Mat) -> Result<(Mat, f64)> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut l = Mat::zeros(n, n);
    let mut pmin = f64::INFINITY;
    let mut pmax = 0.0f64;
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        pmin = pmin.min(d);
        pmax = pmax.max(d);
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let ratio = if n == 0 { 1.0 } else { pmin / pmax };
    Ok((l, ratio))
}

/// Lower-triangular `L` with `L·Lᵀ = m`.
pub fn cholesky(m: &Mat) -> Result<Mat> {
    cholesky_with_ratio(m).map(|(l, _)| l)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(m: &Mat) -> Result<SymEig> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut a = m.symmetrize();
    let mut v = Mat::identity(n);
    let total: f64 = a.frobenius_norm();
    let mut converged = n <= 1 || total == 0.0;
    let mut sweep = 0;
    while !converged && sweep < MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Rutishauser's rotation: t = tan θ chosen with |θ| ≤ π/4.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweep += 1;
    }
    if !converged {
        // One last look: the final sweep may have finished the job.
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() > 1e-12 * total {
            return Err(Error::NoConvergence { sweeps: sweep });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok(SymEig { values, vectors })
}

/// Solves `L·X = M` for lower-triangular `L`.
fn forward_subst(l: &Mat, m: &Mat) -> Mat {
    let n = l.rows();
    let mut x = m.clone();
    for c in 0..m.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Generalized eigenvalues of the pencil `(a, b)`, i.e. all `λ` with
/// `a·v = λ·b·v`, in ascending order.
pub fn gen_eig_pencil(a: &Mat, b: &Mat) -> Result<PencilResult> {
    check_symmetric(a)?;
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices are {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (l, ratio) = cholesky_with_ratio(b)?;
    // C = L⁻¹ a L⁻ᵀ, formed as L⁻¹ (L⁻¹ a)ᵀ since a is symmetric.
    let half = forward_subst(&l, a);
    let c = forward_subst(&l, &half.transpose()).symmetrize();
    let eig = sym_eig(&c)?;
    let top = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
    let mut eigenvalues = Vec::with_capacity(eig.values.len());
    for v in eig.values {
        if v < -NEG_CLAMP * top {
            return Err(Error::NegativeEigenvalue(v));
        }
        eigenvalues.push(v.max(0.0));
    }
    Ok(PencilResult {
        eigenvalues,
        condition_flag: ratio < ILL_CONDITIONED,
    })
}

/// Thin SVD by one-sided Jacobi (Hestenes) rotations.
pub fn svd(m: &Mat) -> Result<Svd> {
    if m.rows() < m.cols() {
        let t = svd(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = Mat::identity(n);
    let mut sweep = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    alpha += a[(i, p)] * a[(i, p)];
                    beta += a[(i, q)] * a[(i, q)];
                    gamma += a[(i, p)] * a[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        sweep += 1;
        if !rotated {
            break;
        }
        if sweep >= MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: sweep });
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = Mat::zeros(rows, n);
    let mut vs = Mat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        let s = norms[old];
        sigma.push(s);
        for i in 0..rows {
            u[(i, new)] = if s > 0.0 { a[(i, old)] / s } else { 0.0 };
        }
        for i in 0..n {
            vs[(i, new)] = v[(i, old)];
        }
    }
    Ok(Svd { u, sigma, v: vs })
}

/// Numerical rank with relative threshold [`RANK_TOL`].
pub fn rank(m: &Mat) -> Result<usize> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0);
    }
    let s = svd(m)?;
    Ok(rank_from_sigma(&s.sigma))
}

fn rank_from_sigma(sigma: &[f64]) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    Ok(svd(m)?.sigma[0])
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("spectral radius of non-square matrix".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(m[(0, 0)].abs());
    }
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
    let eig = dm.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Orthonormal basis (as columns) of the orthogonal complement of the column
/// space of `m`.
pub fn orthogonal_complement(m: &Mat) -> Result<Mat> {
    let p = m.rows();
    if m.cols() == 0 {
        return Ok(Mat::identity(p));
    }
    let r = rank(m)?;
    let gram = (m * &m.transpose()).symmetrize();
    let eig = sym_eig(&gram)?;
    Ok(eig.vectors.block(0, 0, p, p - r))
}

/// Least-squares solution of `m·x = b` (minimum norm), with rank decided by
/// [`RANK_TOL`].
pub fn least_squares(m: &Mat, b: &Mat) -> Result<Mat> {
    if m.rows() != b.rows() {
        return Err(Error::DimensionMismatch("least squares: row counts differ".into()));
    }
    if m.cols() == 0 {
        return Ok(Mat::zeros(0, b.cols()));
    }
    let s = svd(m)?;
    let r = rank_from_sigma(&s.sigma);
    let mut x = Mat::zeros(m.cols(), b.cols());
    for k in 0..r {
        for c in 0..b.cols() {
            let coef: f64 = (0..m.rows()).map(|i| s.u[(i, k)] * b[(i, c)]).sum::<f64>() / s.sigma[k];
            for j in 0..m.cols() {
                x[(j, c)] += s.v[(j, k)] * coef;
            }
        }
    }
    Ok(x)
}

/// Residual `b − m·x̂` of the least-squares fit.
pub fn ls_residual(m: &Mat, b: &Mat) -> Result<Mat> {
    let x = least_squares(m, b)?;
    if m.cols() == 0 {
        return Ok(b.clone());
    }
    Ok(b - &(m * &x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    fn random_mat(rng: &mut RngState, r: usize, c: usize) -> Mat {
        Mat::from_vec(r, c, (0..r * c).map(|_| rng.next_normal()).collect()).unwrap()
    }

    fn random_spd(rng: &mut RngState, n: usize) -> Mat {
        let x = random_mat(rng, n, n + 2);
        (&(&x * &x.transpose()) + &Mat::identity(n).scale(0.1)).symmetrize()
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky(&Mat::identity(3)).unwrap(), Mat::identity(3));
        let l = cholesky(&Mat::from_rows(&[[4.0, 2.0], [2.0, 5.0]])).unwrap();
        assert_eq!(l, Mat::from_rows(&[[2.0, 0.0], [1.0, 2.0]]));
        let err = cholesky(&Mat::from_rows(&[[1.0, 2.0], [2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
        assert_eq!(
            cholesky(&Mat::from_rows(&[[1.0, 2.0], [0.0, 1.0]])).unwrap_err(),
            Error::NotSymmetric
        );
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = RngState::new(11);
        for n in 1..7 {
            let m = random_spd(&mut rng, n);
            let l = cholesky(&m).unwrap();
            let err = (&(&l * &l.transpose()) - &m).max_abs();
            assert!(err <= 1e-10 * m.max_abs(), "n={n} err={err}");
        }
    }

    #[test]
    fn sym_eig_examples() {
        let e = sym_eig(&Mat::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        let e = sym_eig(&Mat::identity(4)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sym_eig_reconstruction_and_orthonormality() {
        let mut rng = RngState::new(5);
        for n in 1..9 {
            let x = random_mat(&mut rng, n, n);
            let m = (&x + &x.transpose()).symmetrize();
            let e = sym_eig(&m).unwrap();
            let lam = Mat::diag(&e.values);
            let recon = &(&e.vectors * &lam) * &e.vectors.transpose();
            assert!((&recon - &m).frobenius_norm() <= 1e-9 * m.frobenius_norm());
            let vtv = &e.vectors.transpose() * &e.vectors;
            assert!((&vtv - &Mat::identity(n)).max_abs() <= 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pencil_examples() {
        let r = gen_eig_pencil(&Mat::diag(&[2.0, 8.0]), &Mat::diag(&[1.0, 2.0])).unwrap();
        assert!((r.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 4.0).abs() < 1e-14);
        assert!(!r.condition_flag);
        let mut rng = RngState::new(3);
        let b = random_spd(&mut rng, 4);
        let r = gen_eig_pencil(&b, &b).unwrap();
        for v in r.eigenvalues {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pencil_propagates_indefinite_b() {
        let err = gen_eig_pencil(&Mat::identity(2), &Mat::from_rows(&[[1.0, 2.0], [2.0, 1.0]]));
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn pencil_condition_flag() {
        let b = Mat::diag(&[1.0, 1e-13]);
        let r = gen_eig_pencil(&Mat::identity(2), &b).unwrap();
        assert!(r.condition_flag);
    }

    #[test]
    fn pencil_trace_identity() {
        let mut rng = RngState::new(99);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 6) as usize;
            let a = random_spd(&mut rng, n);
            let b = random_spd(&mut rng, n);
            let r = gen_eig_pencil(&a, &b).unwrap();
            let tr = b.solve(&a).unwrap().trace();
            let s: f64 = r.eigenvalues.iter().sum();
            assert!((s - tr).abs() <= 1e-8 * tr.abs());
        }
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = RngState::new(17);
        for &(r, c) in &[(3, 2), (2, 3), (5, 5), (4, 1)] {
            let m = random_mat(&mut rng, r, c);
            let s = svd(&m).unwrap();
            let recon = &(&s.u * &Mat::diag(&s.sigma)) * &s.v.transpose();
            assert!((&recon - &m).max_abs() < 1e-12);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_and_complement() {
        let a = Mat::col_vector(&[0.5, 0.1]);
        let m = &a * &Mat::row_vector(&[-1.0, 1.0]);
        assert_eq!(rank(&m).unwrap(), 1);
        assert_eq!(rank(&Mat::zeros(2, 2)).unwrap(), 0);
        let perp = orthogonal_complement(&a).unwrap();
        assert_eq!(perp.shape(), (2, 1));
        assert!((&perp.transpose() * &a).max_abs() < 1e-14);
    }

    #[test]
    fn least_squares_residual() {
        let a = Mat::col_vector(&[0.5, 0.1]);
        assert!(ls_residual(&a, &a.scale(2.0)).unwrap().max_abs() < 1e-14);
        let res = ls_residual(&a, &Mat::col_vector(&[0.1, -0.5])).unwrap();
        assert!((res.frobenius_norm() - (0.26f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_matches_known() {
        let m = Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
        let m = Mat::from_rows(&[[0.0, 0.9], [0.0, 0.0]]);
        assert!(spectral_radius(&m).unwrap() < 1e-12);
        assert!((spectral_norm(&m).unwrap() - 0.9).abs() < 1e-14);
    }
}
