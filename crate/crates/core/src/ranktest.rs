//! Variance-ratio rank statistics: the modified Breitung statistic (MB),
//! built on `(y⁺, y⁻, x)`, and the standard Breitung statistic (SB), built
//! on `(y, x)`.
//!
//! Both are sums of the smallest generalized eigenvalues of the pencil
//! `det(λB − A) = 0` with `A = n⁻¹Σ mₜmₜᵀ` and `B = n⁻³Σ sₜsₜᵀ`, where `mₜ`
//! is the demeaned data and `sₜ` its partial sum. The scaling makes the
//! eigenvalues equal to `n²` times those of the unscaled pencil.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::limitdist::CritValTable;
use crate::pencil::{gen_eig_pencil, Mat};
use crate::series::{format_g17, SeriesMatrix};
use crate::simulate::{occupation, OccupationStats};

/// MB uses the conditional `τ = 0.15` row unless told otherwise.
pub const DEFAULT_MB_TAU: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Mb,
    Sb,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Mb => "MB",
            Variant::Sb => "SB",
        }
    }

    /// Number of eigenvalues summed for hypothesis `q0`.
    pub fn summed(self, q0: usize) -> usize {
        match self {
            Variant::Mb => q0 + 1,
            Variant::Sb => q0,
        }
    }

    /// `τ` row actually used: SB is always unconditional.
    pub fn effective_tau(self, tau: Option<f64>) -> f64 {
        match self {
            Variant::Mb => tau.unwrap_or(DEFAULT_MB_TAU),
            Variant::Sb => 0.0,
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mb" => Ok(Variant::Mb),
            "sb" => Ok(Variant::Sb),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(y, x) ↦ (y⁺, y⁻, x)` row by row.
pub fn build_zstar(z: &SeriesMatrix) -> SeriesMatrix {
    let d = z.d();
    let mut roles = vec!["y_plus".to_string(), "y_minus".to_string()];
    roles.extend(z.roles()[1..].iter().cloned());
    z.map_rows(d + 1, roles, |src, dst| {
        let y = src[0];
        dst[0] = if y >= 0.0 { y } else { 0.0 };
        dst[1] = if y < 0.0 { y } else { 0.0 };
        dst[2..].copy_from_slice(&src[1..]);
    })
    .expect("finite input gives finite output")
}

/// Subtracts each column's sample mean.
pub fn demean(m: &SeriesMatrix) -> SeriesMatrix {
    let means = column_means(m.values(), m.d());
    m.map_rows(m.d(), m.roles().to_vec(), |src, dst| {
        for ((o, v), mu) in dst.iter_mut().zip(src).zip(&means) {
            *o = v - mu;
        }
    })
    .expect("finite input gives finite output")
}

fn column_means(values: &[f64], d: usize) -> Vec<f64> {
    let n = values.len() / d;
    let mut sums = vec![0.0; d];
    let mut comp = vec![0.0; d];
    for row in values.chunks_exact(d) {
        for j in 0..d {
            kahan_add(&mut sums[j], &mut comp[j], row[j]);
        }
    }
    sums.iter().map(|s| s / n as f64).collect()
}

#[inline]
fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Pre-scaled moment matrices `A = n⁻¹Σmmᵀ`, `B = n⁻³Σssᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair {
    pub a: Mat,
    pub b: Mat,
}

/// Moments of already-demeaned rows.
pub fn build_moments(m: &SeriesMatrix) -> Result<MomentPair> {
    let pair = moments_of_rows(m.values(), m.d());
    check_definite(&pair.b)?;
    Ok(pair)
}

/// Moments of a flat time-major array, with no definiteness check.
pub(crate) fn moments_of_rows(values: &[f64], d: usize) -> MomentPair {
    let n = (values.len() / d) as f64;
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d * d];
    let mut s = vec![0.0; d];
    let mut comp = vec![0.0; d];
    for row in values.chunks_exact(d) {
        for j in 0..d {
            kahan_add(&mut s[j], &mut comp[j], row[j]);
        }
        for i in 0..d {
            for j in 0..=i {
                a[i * d + j] += row[i] * row[j];
                b[i * d + j] += s[i] * s[j];
            }
        }
    }
    let finish = |raw: Vec<f64>, scale: f64| {
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = raw[i * d + j] * scale;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    MomentPair {
        a: finish(a, 1.0 / n),
        b: finish(b, 1.0 / (n * n * n)),
    }
}

fn check_definite(b: &Mat) -> Result<()> {
    crate::pencil::cholesky(b)
        .map(|_| ())
        .map_err(|e| Error::DegenerateData(format!("partial-sum moment matrix: {e}")))
}

/// Row-major `Q` with orthonormal columns spanning those of `values`
/// (Gram-Schmidt, each column projected twice).
fn orthonormal_columns(values: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = values.len() / d;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v: Vec<f64> = values.iter().skip(j).step_by(d).copied().collect();
        let original = norm(&v);
        for _ in 0..2 {
            for q in &cols {
                let r: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= r * qi);
            }
        }
        let len = norm(&v);
        if len.is_nan() || len <= 1e-12 * original {
            return Err(Error::DegenerateData(format!("column {j} is constant or collinear with earlier columns")));
        }
        v.iter_mut().for_each(|x| *x /= len);
        cols.push(v);
    }
    let mut out = vec![0.0; n * d];
    for (j, c) in cols.iter().enumerate() {
        for (t, x) in c.iter().enumerate() {
            out[t * d + j] = *x;
        }
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sum of the `count` smallest pencil eigenvalues of demeaned rows, plus all
/// eigenvalues ascending.
pub(crate) fn pencil_sum(values: &[f64], d: usize, count: usize) -> Result<(f64, Vec<f64>)> {
    // The pencil is congruence invariant, so orthonormal columns give the same
    // eigenvalues without squaring the conditioning of cointegrated levels.
    let q = orthonormal_columns(values, d)?;
    let pair = moments_of_rows(&q, d);
    check_definite(&pair.b)?;
    let eig = gen_eig_pencil(&pair.a, &pair.b).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::DegenerateData(e.to_string()),
        other => other,
    })?;
    let total = eig.eigenvalues[..count].iter().sum();
    Ok((total, eig.eigenvalues))
}

/// Sum of the `count` smallest pencil eigenvalues of `m` after demeaning,
/// for columns already in their final form (for example `M·z*`).
pub fn pencil_stat(m: &SeriesMatrix, count: usize) -> Result<f64> {
    if count == 0 || count > m.d() {
        return Err(Error::InvalidConfig(format!("cannot sum {count} of {} eigenvalues", m.d())));
    }
    let centered = demean(m);
    pencil_sum(centered.values(), m.d(), count).map(|(s, _)| s)
}

/// The statistic without a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub variant: Variant,
    pub q0: usize,
    pub lambda: f64,
    /// All pencil eigenvalues, ascending, already multiplied by `n²`.
    pub eigenvalues: Vec<f64>,
    pub occupation: OccupationStats,
}

/// `Λ_{n,q0}` for data with `y` in the first column.
pub fn lambda_stat(z: &SeriesMatrix, q0: usize, variant: Variant) -> Result<Statistic> {
    let p = z.d();
    if q0 == 0 || q0 > p {
        return Err(Error::InvalidConfig(format!("q0 = {q0} must lie in 1..={p}")));
    }
    if z.n() < 2 {
        return Err(Error::TooFewObservations("need at least 2 observations".into()));
    }
    let y = z.y();
    let data = match variant {
        Variant::Mb => build_zstar(z),
        Variant::Sb => z.clone(),
    };
    let d = data.d();
    if z.n() <= d {
        return Err(Error::DegenerateData(format!(
            "{} observations cannot identify {d} dimensions",
            z.n()
        )));
    }
    let centered = demean(&data);
    let (lambda, eigenvalues) = pencil_sum(centered.values(), d, variant.summed(q0))?;
    Ok(Statistic {
        variant,
        q0,
        lambda,
        eigenvalues,
        occupation: occupation(&y),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub variant: Variant,
    pub q0: usize,
    pub lambda_stat: f64,
    pub eigenvalues: Vec<f64>,
    pub crit_value: f64,
    pub alpha: f64,
    pub tau: f64,
    /// Standardized initial value used for the table lookup.
    pub w0: f64,
    pub reject: bool,
    pub occupation: OccupationStats,
}

impl TestOutcome {
    pub const CSV_HEADER: &'static str = "variant,q0,lambda,crit,alpha,tau,frac_plus,reject";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.variant,
            self.q0,
            format_g17(self.lambda_stat),
            format_g17(self.crit_value),
            format_g17(self.alpha),
            format_g17(self.tau),
            format_g17(self.occupation.frac_plus),
            self.reject
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

impl fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} test of H0: q = {}", self.variant, self.q0)?;
        writeln!(f, "  statistic        {:.6}", self.lambda_stat)?;
        writeln!(
            f,
            "  critical value   {:.6}  (alpha = {}, tau = {}, W0 = {})",
            self.crit_value, self.alpha, self.tau, self.w0
        )?;
        let eig: Vec<String> = self.eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(f, "  eigenvalues      {}", eig.join(" "))?;
        writeln!(
            f,
            "  occupation       +: {:.4}  -: {:.4}",
            self.occupation.frac_plus, self.occupation.frac_minus
        )?;
        write!(
            f,
            "  decision         {}",
            if self.reject { "reject" } else { "fail to reject" }
        )
    }
}

/// Computes the statistic and compares it with the tabulated critical value
/// for `W₀ = 0`. `tau` is ignored for SB.
pub fn run_test(
    z: &SeriesMatrix,
    q0: usize,
    variant: Variant,
    table: &CritValTable,
    alpha: f64,
    tau: Option<f64>,
) -> Result<TestOutcome> {
    run_test_w0(z, q0, variant, table, alpha, tau, 0.0)
}

/// As [`run_test`] with a given standardized initial value; MB critical
/// values are interpolated linearly in `W₀`, SB ignores it.
pub fn run_test_w0(
    z: &SeriesMatrix,
    q0: usize,
    variant: Variant,
    table: &CritValTable,
    alpha: f64,
    tau: Option<f64>,
    w0: f64,
) -> Result<TestOutcome> {
    let tau = variant.effective_tau(tau);
    let w0 = if variant == Variant::Sb { 0.0 } else { w0 };
    let crit_value = table.lookup(variant, q0, tau, alpha, w0)?;
    let stat = lambda_stat(z, q0, variant)?;
    Ok(decide(stat, crit_value, alpha, tau, w0))
}

/// Attaches a decision to a computed statistic.
pub fn decide(stat: Statistic, crit_value: f64, alpha: f64, tau: f64, w0: f64) -> TestOutcome {
    TestOutcome {
        variant: stat.variant,
        q0: stat.q0,
        reject: stat.lambda > crit_value,
        lambda_stat: stat.lambda,
        eigenvalues: stat.eigenvalues,
        crit_value,
        alpha,
        tau,
        w0,
        occupation: stat.occupation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn zstar_examples() {
        let z = SeriesMatrix::from_rows(&[[3.0, 5.0], [-2.0, 5.0], [0.0, 1.0]]).unwrap();
        let s = build_zstar(&z);
        assert_eq!(s.row(0), &[3.0, 0.0, 5.0]);
        assert_eq!(s.row(1), &[0.0, -2.0, 5.0]);
        assert_eq!(s.row(2), &[0.0, 0.0, 1.0]);
        for t in 0..3 {
            assert_eq!(s.get(t, 0) + s.get(t, 1), z.get(t, 0));
        }
        assert_eq!(s.roles(), &["y_plus", "y_minus", "x1"]);
    }

    #[test]
    fn demean_examples() {
        let m = SeriesMatrix::from_rows(&[[5.0, 1.0], [5.0, 3.0]]).unwrap();
        let d = demean(&m);
        assert_eq!(d.column(0), vec![0.0, 0.0]);
        assert_eq!(d.column(1), vec![-1.0, 1.0]);
        assert_eq!(demean(&d), d);
    }

    #[test]
    fn two_point_moments() {
        let a = 1.5;
        let m = SeriesMatrix::from_rows(&[[a], [-a]]).unwrap();
        let pair = build_moments(&m).unwrap();
        assert_eq!(pair.a[(0, 0)], a * a);
        assert_eq!(pair.b[(0, 0)], a * a / 8.0);
    }

    #[test]
    fn degenerate_moments() {
        let zero = SeriesMatrix::from_values(vec![0.0; 20], 2).unwrap();
        assert!(matches!(build_moments(&zero), Err(Error::DegenerateData(_))));
        let rows: Vec<[f64; 2]> = (0..10).map(|t| [t as f64 - 4.5, 0.0]).collect();
        let one = SeriesMatrix::from_rows(&rows).unwrap();
        assert!(matches!(build_moments(&one), Err(Error::DegenerateData(_))));
    }

    fn random_walk(seed: u64, n: usize, p: usize) -> SeriesMatrix {
        let mut rng = RngState::new(seed);
        let mut level = vec![0.0; p];
        let mut values = Vec::with_capacity(n * p);
        for _ in 0..n {
            for v in level.iter_mut() {
                *v += rng.next_normal();
            }
            values.extend_from_slice(&level);
        }
        SeriesMatrix::from_values(values, p).unwrap()
    }

    #[test]
    fn monotone_in_q0() {
        let z = random_walk(3, 300, 3);
        for variant in [Variant::Mb, Variant::Sb] {
            let stats: Vec<f64> = (1..=3)
                .map(|q| lambda_stat(&z, q, variant).unwrap().lambda)
                .collect();
            assert!(stats.windows(2).all(|w| w[0] <= w[1]), "{stats:?}");
            assert!(stats[0] >= 0.0);
        }
    }

    #[test]
    fn shift_invariance() {
        let z = random_walk(4, 200, 2);
        let shifted = z
            .map_rows(2, z.roles().to_vec(), |s, d| {
                d[0] = s[0];
                d[1] = s[1] + 17.0;
            })
            .unwrap();
        let a = lambda_stat(&z, 1, Variant::Sb).unwrap().lambda;
        let b = lambda_stat(&shifted, 1, Variant::Sb).unwrap().lambda;
        assert!((a - b).abs() <= 1e-8 * a.abs());
    }

    #[test]
    fn rejects_bad_q0() {
        let z = random_walk(5, 50, 2);
        assert!(lambda_stat(&z, 0, Variant::Mb).is_err());
        assert!(lambda_stat(&z, 3, Variant::Mb).is_err());
    }

    #[test]
    fn univariate_mb() {
        let z = random_walk(6, 100, 1);
        let s = lambda_stat(&z, 1, Variant::Mb).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
    }

    #[test]
    fn csv_row_format() {
        let z = random_walk(7, 100, 2);
        let out = decide(lambda_stat(&z, 1, Variant::Mb).unwrap(), 1e9, 0.1, 0.15, 0.0);
        assert!(!out.reject);
        let csv = out.to_csv();
        assert!(csv.starts_with("variant,q0,lambda,crit,alpha,tau,frac_plus,reject\nMB,1,"));
        assert!(csv.trim_end().ends_with(",false"));
        let zero = decide(
            Statistic {
                lambda: 0.0,
                ..lambda_stat(&z, 1, Variant::Mb).unwrap()
            },
            0.5,
            0.1,
            0.15,
            0.0,
        );
        assert!(!zero.reject);
    }
}
