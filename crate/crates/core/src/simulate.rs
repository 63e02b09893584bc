//! Sample paths of a CKSVAR.
//!
//! Each period the structural equation `Φ₀⁺y⁺ₜ + Φ₀⁻y⁻ₜ + Φ₀ˣxₜ = rhsₜ` is
//! solved piecewise: try the `y ≥ 0` branch, otherwise the `y < 0` branch.
//! Under coherency exactly one branch is consistent, because both branches
//! give `y` as the same Cramer numerator over determinants of equal sign.

use crate::cksvar::{canonical_selector, check_case_ii, CksvarParams, CointCaseTwoSpec};
use crate::error::{Error, Result};
use crate::pencil::Mat;
use crate::rng::RngState;
pub use crate::series::{default_roles, SeriesMatrix};

/// Tolerance on the sign test of the accepted branch.
pub const BRANCH_TOL: f64 = 1e-10;

/// Which Monte Carlo design to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    /// `β_y⁻ = β_y⁺ = −1`.
    Linear,
    /// `β_y⁺ = −1`, `β_y⁻ = −0.5`.
    Nonlinear,
}

impl DesignKind {
    pub fn id(self) -> u64 {
        match self {
            DesignKind::Linear => 0,
            DesignKind::Nonlinear => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Linear => "linear",
            DesignKind::Nonlinear => "nonlinear",
        }
    }

    pub fn beta_y_minus(self) -> f64 {
        match self {
            DesignKind::Linear => -1.0,
            DesignKind::Nonlinear => -0.5,
        }
    }
}

impl std::str::FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(DesignKind::Linear),
            "nonlinear" | "non-linear" => Ok(DesignKind::Nonlinear),
            other => Err(Error::InvalidConfig(format!("unknown design `{other}`"))),
        }
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The bivariate VECM `Δzₜ = c + αβ*ᵀz*ₜ₋₁ + uₜ` with `α = (0.5, 0.1)ᵀ`,
/// `β* = (−1, β_y⁻, 1)ᵀ`, `c = 2α`, `Σ_u = I₂`, written in levels as a
/// canonical CKSVAR(1): `Φ₀ = I*₂`, `Φ₁ = I*₂ + αβ*ᵀ`.
pub fn mc_design(kind: DesignKind) -> (CksvarParams, CointCaseTwoSpec) {
    let alpha = Mat::col_vector(&[0.5, 0.1]);
    let bstar = Mat::row_vector(&[-1.0, kind.beta_y_minus(), 1.0]);
    let phi1 = &canonical_selector(2) + &(&alpha * &bstar);
    let params = CksvarParams::from_coefs(
        vec![canonical_selector(2), phi1],
        alpha.scale(2.0),
        Mat::identity(2),
        0.0,
    )
    .expect("design dimensions are consistent");
    let spec = CointCaseTwoSpec {
        stability: check_case_ii(&params, 1).expect("design satisfies case (ii)").stability,
        ..CointCaseTwoSpec::from_factors(
            alpha,
            Mat::row_vector(&[-1.0]),
            Mat::row_vector(&[kind.beta_y_minus()]),
            Mat::row_vector(&[1.0]),
            vec![],
        )
        .expect("design dimensions are consistent")
    };
    (params, spec)
}

/// Pre-factored contemporaneous system for repeated [`solve_step`] calls.
#[derive(Debug, Clone)]
pub struct StructuralSolver {
    inv_plus: Mat,
    inv_minus: Mat,
}

impl StructuralSolver {
    pub fn new(params: &CksvarParams) -> Result<Self> {
        let inv = |sign| {
            params.phi_regime(0, sign).inverse().map_err(|_| {
                Error::CoherencyViolated("contemporaneous matrix is singular".into())
            })
        };
        Ok(StructuralSolver {
            inv_plus: inv(1)?,
            inv_minus: inv(-1)?,
        })
    }

    /// Writes the unique `z` with `Φ₀⁺z = rhs, y ≥ 0` or `Φ₀⁻z = rhs, y < 0`.
    pub fn solve_into(&self, rhs: &[f64], z: &mut [f64]) -> Result<()> {
        let p = rhs.len();
        let first = |inv: &Mat| -> f64 { (0..p).map(|j| inv[(0, j)] * rhs[j]).sum() };
        let y_plus = first(&self.inv_plus);
        let y_minus = first(&self.inv_minus);
        let plus_ok = y_plus >= 0.0;
        let minus_ok = y_minus < 0.0;
        let inv = match (plus_ok, minus_ok) {
            (true, false) => &self.inv_plus,
            (false, true) => &self.inv_minus,
            (true, true) if y_plus.abs() <= BRANCH_TOL && y_minus.abs() <= BRANCH_TOL => {
                &self.inv_plus
            }
            _ => {
                return Err(Error::CoherencyParadox(format!(
                    "positive branch gives y = {y_plus:e}, negative branch gives y = {y_minus:e}"
                )))
            }
        };
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (0..p).map(|j| inv[(i, j)] * rhs[j]).sum();
        }
        if std::ptr::eq(inv, &self.inv_plus) {
            // Keep the y ≥ 0 convention exact under roundoff.
            z[0] = y_plus.max(0.0);
        } else {
            z[0] = y_minus;
        }
        Ok(())
    }
}

/// Solves the structural equation for one period given the assembled
/// right-hand side `c + Σᵢ Φᵢz*ₜ₋ᵢ + uₜ`.
pub fn solve_step(params: &CksvarParams, rhs: &Mat) -> Result<Mat> {
    let p = params.p();
    if rhs.shape() != (p, 1) {
        return Err(Error::DimensionMismatch(format!("rhs must be {p}x1")));
    }
    let solver = StructuralSolver::new(params)?;
    let mut z = vec![0.0; p];
    solver.solve_into(rhs.as_slice(), &mut z)?;
    Ok(Mat::col_vector(&z))
}

/// Settings for [`simulate_path`].
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Initial values `z_{−k+1}, ..., z_0` (oldest first); zero when `None`.
    pub init: Option<Vec<Vec<f64>>>,
    /// Periods simulated and discarded before the reported sample.
    pub burn_in: usize,
}

#[derive(Debug, Clone)]
pub struct SimulatedPath {
    /// `zₜ`, `t = 1..n`.
    pub series: SeriesMatrix,
    /// `uₜ`, `t = 1..n`.
    pub innovations: SeriesMatrix,
}

/// Simulates `n` periods with Gaussian innovations `uₜ = Lεₜ`, `LLᵀ = Σ_u`,
/// where `εₜ` takes `p` consecutive normals from `rng`.
pub fn simulate_path(
    params: &CksvarParams,
    n: usize,
    opts: &SimOptions,
    rng: &mut RngState,
) -> Result<SimulatedPath> {
    if n == 0 {
        return Err(Error::TooFewObservations("n must be at least 1".into()));
    }
    let p = params.p();
    let factor = params.innovation_factor()?;
    let total = n + opts.burn_in;
    let mut eps = vec![0.0; p];
    let mut innovations = Vec::with_capacity(total * p);
    for _ in 0..total {
        rng.fill_normal(&mut eps);
        innovations.extend(factor.mul_vec(&eps));
    }
    let (series, innov) = run_recursion(params, &innovations, opts)?;
    Ok(SimulatedPath {
        series,
        innovations: innov,
    })
}

/// Runs the recursion on given innovations (`(n + burn_in) × p`, time-major).
pub fn simulate_with_innovations(
    params: &CksvarParams,
    innovations: &[f64],
    opts: &SimOptions,
) -> Result<SimulatedPath> {
    let (series, innovations) = run_recursion(params, innovations, opts)?;
    Ok(SimulatedPath { series, innovations })
}

fn run_recursion(
    params: &CksvarParams,
    innovations: &[f64],
    opts: &SimOptions,
) -> Result<(SeriesMatrix, SeriesMatrix)> {
    let p = params.p();
    let k = params.k();
    if !innovations.len().is_multiple_of(p) || innovations.len() / p <= opts.burn_in {
        return Err(Error::DimensionMismatch(
            "innovations must cover the burn-in plus at least one period".into(),
        ));
    }
    let total = innovations.len() / p;
    let solver = StructuralSolver::new(params)?;

    // z* history, oldest first, k lags deep.
    let mut history: Vec<Vec<f64>> = match &opts.init {
        Some(init) => {
            if init.len() != k || init.iter().any(|z| z.len() != p) {
                return Err(Error::DimensionMismatch(format!(
                    "need {k} initial values of length {p}"
                )));
            }
            init.iter().map(|z| stack_star(z)).collect()
        }
        None => vec![vec![0.0; p + 1]; k],
    };

    let c = params.c().as_slice();
    let coefs = params.coefs();
    let mut out = Vec::with_capacity((total - opts.burn_in) * p);
    let mut rhs = vec![0.0; p];
    let mut z = vec![0.0; p];
    for t in 0..total {
        let u = &innovations[t * p..(t + 1) * p];
        rhs.copy_from_slice(c);
        for (lag, coef) in coefs.iter().enumerate().skip(1) {
            let zs = &history[history.len() - lag];
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += coef.row(i).iter().zip(zs).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        for (r, ui) in rhs.iter_mut().zip(u) {
            *r += ui;
        }
        solver.solve_into(&rhs, &mut z)?;
        if k > 0 {
            history.remove(0);
            history.push(stack_star(&z));
        }
        if t >= opts.burn_in {
            out.extend_from_slice(&z);
        }
    }
    let series = SeriesMatrix::from_values(out, p)?;
    let roles: Vec<String> = (0..p).map(|j| format!("u{}", j + 1)).collect();
    let innov = SeriesMatrix::new(innovations[opts.burn_in * p..].to_vec(), p, roles)?;
    Ok((series, innov))
}

/// `z* = (y⁺, y⁻, x)`.
pub fn stack_star(z: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(z.len() + 1);
    s.push(if z[0] >= 0.0 { z[0] } else { 0.0 });
    s.push(if z[0] < 0.0 { z[0] } else { 0.0 });
    s.extend_from_slice(&z[1..]);
    s
}

/// Regime occupation counts; `y = 0` counts as the `+` regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationStats {
    pub count_plus: usize,
    pub count_minus: usize,
    pub frac_plus: f64,
    pub frac_minus: f64,
}

impl OccupationStats {
    pub fn n(&self) -> usize {
        self.count_plus + self.count_minus
    }
}

pub fn occupation(y: &[f64]) -> OccupationStats {
    let count_plus = y.iter().filter(|&&v| v >= 0.0).count();
    let count_minus = y.len() - count_plus;
    let n = y.len().max(1) as f64;
    OccupationStats {
        count_plus,
        count_minus,
        frac_plus: count_plus as f64 / n,
        frac_minus: count_minus as f64 / n,
    }
}

/// True iff both regimes hold at least `ceil(threshold · n)` observations.
pub fn retained(stats: &OccupationStats, threshold: f64) -> bool {
    let need = ceil_count(threshold * stats.n() as f64);
    stats.count_plus.min(stats.count_minus) >= need
}

/// `ceil(x)` for a nonnegative count, forgiving roundoff like `0.15·200`.
pub(crate) fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cksvar::LagBlocks;

    fn scalar(phi_plus: f64, phi_minus: f64) -> CksvarParams {
        CksvarParams::new(
            LagBlocks {
                phi_plus: Mat::col_vector(&[phi_plus]),
                phi_minus: Mat::col_vector(&[phi_minus]),
                phi_x: Mat::zeros(1, 0),
            },
            vec![],
            Mat::zeros(1, 1),
            Mat::identity(1),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn solve_step_examples() {
        let (design, _) = mc_design(DesignKind::Linear);
        let z = solve_step(&design, &Mat::col_vector(&[0.7, -0.2])).unwrap();
        assert_eq!(z, Mat::col_vector(&[0.7, -0.2]));

        let params = scalar(2.0, 1.0);
        assert_eq!(solve_step(&params, &Mat::col_vector(&[4.0])).unwrap()[(0, 0)], 2.0);
        assert_eq!(solve_step(&params, &Mat::col_vector(&[-3.0])).unwrap()[(0, 0)], -3.0);
        assert_eq!(solve_step(&params, &Mat::col_vector(&[0.0])).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn solve_step_paradox_for_incoherent() {
        let params = scalar(2.0, -1.0);
        // Positive branch gives 1.5, negative gives −3: both consistent.
        assert!(matches!(
            solve_step(&params, &Mat::col_vector(&[3.0])),
            Err(Error::CoherencyParadox(_))
        ));
        // Neither consistent.
        assert!(matches!(
            solve_step(&params, &Mat::col_vector(&[-3.0])),
            Err(Error::CoherencyParadox(_))
        ));
    }

    #[test]
    fn zero_dynamics() {
        let (design, _) = mc_design(DesignKind::Nonlinear);
        let params = CksvarParams::from_coefs(
            design.coefs().to_vec(),
            Mat::zeros(2, 1),
            Mat::zeros(2, 2),
            0.0,
        )
        .unwrap();
        let path = simulate_path(&params, 50, &SimOptions::default(), &mut RngState::new(1)).unwrap();
        assert!(path.series.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let (design, _) = mc_design(DesignKind::Nonlinear);
        let a = simulate_path(&design, 300, &SimOptions::default(), &mut RngState::new(9)).unwrap();
        let b = simulate_path(&design, 300, &SimOptions::default(), &mut RngState::new(9)).unwrap();
        assert_eq!(a.series, b.series);
        let c = simulate_path(&design, 300, &SimOptions::default(), &mut RngState::new(10)).unwrap();
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn burn_in_drops_prefix() {
        let (design, _) = mc_design(DesignKind::Linear);
        let full = simulate_path(&design, 30, &SimOptions::default(), &mut RngState::new(4)).unwrap();
        let opts = SimOptions {
            burn_in: 10,
            ..Default::default()
        };
        let burned = simulate_path(&design, 20, &opts, &mut RngState::new(4)).unwrap();
        assert_eq!(burned.series.values(), &full.series.values()[20..]);
    }

    #[test]
    fn linear_design_equilibrium_mean() {
        let (design, spec) = mc_design(DesignKind::Linear);
        let path =
            simulate_path(&design, 20_000, &SimOptions::default(), &mut RngState::new(77)).unwrap();
        let bstar = spec.beta_star();
        let mean: f64 = path
            .series
            .rows()
            .map(|z| {
                let s = stack_star(z);
                (0..3).map(|i| bstar[(i, 0)] * s[i]).sum::<f64>()
            })
            .sum::<f64>()
            / 20_000.0;
        assert!((mean + 2.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn design_matches_case_ii() {
        for kind in [DesignKind::Linear, DesignKind::Nonlinear] {
            let (params, spec) = mc_design(kind);
            let checked = check_case_ii(&params, 1).unwrap();
            assert!((&checked.pi_plus - &spec.pi_plus).max_abs() < 1e-12);
            assert!((&checked.pi_minus - &spec.pi_minus).max_abs() < 1e-12);
            assert_eq!(spec.beta(1), Mat::col_vector(&[-1.0, 1.0]));
            assert_eq!(spec.beta(-1), Mat::col_vector(&[kind.beta_y_minus(), 1.0]));
        }
    }

    #[test]
    fn occupation_examples() {
        let s = occupation(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!((s.frac_plus, s.frac_minus), (0.5, 0.5));
        assert_eq!(occupation(&[1.0, 2.0]).frac_plus, 1.0);
        assert_eq!(occupation(&[0.0, -1.0]).frac_plus, 0.5);
    }

    #[test]
    fn retention_boundary() {
        let mk = |plus: usize, minus: usize| OccupationStats {
            count_plus: plus,
            count_minus: minus,
            frac_plus: plus as f64 / (plus + minus) as f64,
            frac_minus: minus as f64 / (plus + minus) as f64,
        };
        assert!(retained(&mk(30, 170), 0.15));
        assert!(!retained(&mk(29, 171), 0.15));
        assert!(retained(&mk(0, 200), 0.0));
    }
}
