//! Censored-and-kinked SVAR parameterization and validity checks.
//!
//! The structural equation is
//!
//! ```text
//! φ₀⁺y⁺ₜ + φ₀⁻y⁻ₜ + Φ₀ˣxₜ = c + Σᵢ [φᵢ⁺y⁺ₜ₋ᵢ + φᵢ⁻y⁻ₜ₋ᵢ + Φᵢˣxₜ₋ᵢ] + uₜ
//! ```
//!
//! with `y⁺ = max(y, 0)`, `y⁻ = min(y, 0)`. Each lag is stored as the
//! `p × (p+1)` block `[φᵢ⁺, φᵢ⁻, Φᵢˣ]`, which multiplies the stacked vector
//! `z*ₜ = (y⁺ₜ, y⁻ₜ, xₜ)`.
//!
//! Only the long-run matrices `Π± = αβ±ᵀ` are identified; the `(α, β)`
//! factorization returned by [`check_case_ii`] is one normalization of it,
//! so specs should be compared through `Π±`.

use crate::error::{Error, Result};
use crate::pencil::{
    self, cholesky, least_squares, ls_residual, orthogonal_complement, rank, spectral_norm,
    spectral_radius, svd, Mat, RANK_TOL,
};

/// Default product length for [`jsr_bracket`] inside [`check_case_ii`].
pub const JSR_DEFAULT_DEPTH: usize = 8;
/// Default cap on the number of enumerated products.
pub const JSR_DEFAULT_BUDGET: u128 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CksvarParams {
    p: usize,
    k: usize,
    /// `coefs[0] = Φ₀`, `coefs[i] = [φᵢ⁺, φᵢ⁻, Φᵢˣ]`, each `p × (p+1)`.
    coefs: Vec<Mat>,
    c: Mat,
    sigma_u: Mat,
    /// Threshold that was folded into `y` and `c`; the model variable is
    /// `y_original − threshold_offset`.
    threshold_offset: f64,
}

/// The `[φ⁺, φ⁻, Φˣ]` blocks of one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct LagBlocks {
    pub phi_plus: Mat,
    pub phi_minus: Mat,
    pub phi_x: Mat,
}

impl LagBlocks {
    pub fn zeros(p: usize) -> Self {
        LagBlocks {
            phi_plus: Mat::zeros(p, 1),
            phi_minus: Mat::zeros(p, 1),
            phi_x: Mat::zeros(p, p - 1),
        }
    }

    fn stacked(&self, p: usize) -> Result<Mat> {
        if self.phi_plus.shape() != (p, 1)
            || self.phi_minus.shape() != (p, 1)
            || self.phi_x.shape() != (p, p - 1)
        {
            return Err(Error::DimensionMismatch(format!(
                "lag blocks must be {p}x1, {p}x1 and {p}x{}",
                p - 1
            )));
        }
        Mat::hstack(&[&self.phi_plus, &self.phi_minus, &self.phi_x])
    }
}

/// The canonical selector `I*_p = [[1, 1, 0], [0, 0, I_{p−1}]]`.
pub fn canonical_selector(p: usize) -> Mat {
    let mut m = Mat::zeros(p, p + 1);
    m[(0, 0)] = 1.0;
    m[(0, 1)] = 1.0;
    for i in 1..p {
        m[(i, i + 1)] = 1.0;
    }
    m
}

/// `S_p(y)`: the `(p+1) × p` map with `z* = S_p(y) z`.
pub fn sign_selector(p: usize, y: f64) -> Mat {
    let mut s = Mat::zeros(p + 1, p);
    if y >= 0.0 {
        s[(0, 0)] = 1.0;
    } else {
        s[(1, 0)] = 1.0;
    }
    for i in 1..p {
        s[(i + 1, i)] = 1.0;
    }
    s
}

impl CksvarParams {
    /// Builds and dimension-checks a parameter set. A nonzero threshold `b`
    /// is folded into the intercept so the stored model has threshold zero.
    pub fn new(
        contemporaneous: LagBlocks,
        lags: Vec<LagBlocks>,
        c: Mat,
        sigma_u: Mat,
        b_threshold: f64,
    ) -> Result<Self> {
        let p = contemporaneous.phi_plus.rows();
        if p == 0 {
            return Err(Error::DimensionMismatch("p must be at least 1".into()));
        }
        let mut coefs = vec![contemporaneous.stacked(p)?];
        for lag in &lags {
            coefs.push(lag.stacked(p)?);
        }
        Self::from_coefs(coefs, c, sigma_u, b_threshold)
    }

    /// Builds from stacked `p × (p+1)` coefficient blocks, `coefs[0] = Φ₀`.
    pub fn from_coefs(coefs: Vec<Mat>, c: Mat, sigma_u: Mat, b_threshold: f64) -> Result<Self> {
        let p = coefs.first().map_or(0, |m| m.rows());
        if p == 0 {
            return Err(Error::DimensionMismatch("need at least Φ₀ with p ≥ 1".into()));
        }
        for (i, m) in coefs.iter().enumerate() {
            if m.shape() != (p, p + 1) {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient block {i} is {}x{}, expected {p}x{}",
                    m.rows(),
                    m.cols(),
                    p + 1
                )));
            }
            if !m.is_finite() {
                return Err(Error::DimensionMismatch(format!("coefficient block {i} not finite")));
            }
        }
        if c.shape() != (p, 1) || !c.is_finite() {
            return Err(Error::DimensionMismatch(format!("c must be a finite {p}x1 vector")));
        }
        if sigma_u.shape() != (p, p) || !sigma_u.is_finite() {
            return Err(Error::DimensionMismatch(format!("Sigma_u must be {p}x{p}")));
        }
        if !sigma_u.is_symmetric(pencil::SYMMETRY_TOL) {
            return Err(Error::NotSymmetric);
        }
        if !b_threshold.is_finite() {
            return Err(Error::DimensionMismatch("threshold must be finite".into()));
        }
        let k = coefs.len() - 1;
        let mut params = CksvarParams {
            p,
            k,
            coefs,
            c,
            sigma_u: sigma_u.symmetrize(),
            threshold_offset: 0.0,
        };
        if b_threshold != 0.0 {
            // y⁺ = b + [y − b]₊ and y⁻ = b + [y − b]₋, so the constant
            // b·(φ⁺(1) + φ⁻(1)) moves to the right-hand side.
            let (plus1, minus1) = (params.phi_one(0), params.phi_one(1));
            for i in 0..p {
                params.c[(i, 0)] -= b_threshold * (plus1[i] + minus1[i]);
            }
            params.threshold_offset = b_threshold;
        }
        Ok(params)
    }

    /// Column `col` (0 = φ⁺, 1 = φ⁻) of the polynomial evaluated at one:
    /// `φ(1) = φ₀ − Σᵢ φᵢ`.
    fn phi_one(&self, col: usize) -> Vec<f64> {
        (0..self.p)
            .map(|r| {
                self.coefs[0][(r, col)] - self.coefs[1..].iter().map(|m| m[(r, col)]).sum::<f64>()
            })
            .collect()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `[φᵢ⁺, φᵢ⁻, Φᵢˣ]` for `i = 0..=k`.
    pub fn coef(&self, i: usize) -> &Mat {
        &self.coefs[i]
    }

    pub fn coefs(&self) -> &[Mat] {
        &self.coefs
    }

    pub fn phi_plus(&self, i: usize) -> Mat {
        self.coefs[i].block(0, 0, self.p, 1)
    }

    pub fn phi_minus(&self, i: usize) -> Mat {
        self.coefs[i].block(0, 1, self.p, 1)
    }

    pub fn phi_x(&self, i: usize) -> Mat {
        self.coefs[i].block(0, 2, self.p, self.p - 1)
    }

    /// `Φᵢ± = [φᵢ±, Φᵢˣ]` (`p × p`), `sign` is `+1` or `−1`.
    pub fn phi_regime(&self, i: usize, sign: i8) -> Mat {
        let col = if sign >= 0 { self.phi_plus(i) } else { self.phi_minus(i) };
        Mat::hstack(&[&col, &self.phi_x(i)]).expect("consistent blocks")
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn sigma_u(&self) -> &Mat {
        &self.sigma_u
    }

    pub fn threshold_offset(&self) -> f64 {
        self.threshold_offset
    }

    /// Lower factor `L` with `LLᵀ = Σ_u`; the zero matrix maps to zero.
    pub fn innovation_factor(&self) -> Result<Mat> {
        if self.sigma_u.max_abs() == 0.0 {
            return Ok(Mat::zeros(self.p, self.p));
        }
        cholesky(&self.sigma_u)
    }

    /// Returns a copy with a different innovation covariance.
    pub fn with_sigma_u(&self, sigma_u: Mat) -> Result<Self> {
        Self::from_coefs(self.coefs.clone(), self.c.clone(), sigma_u, 0.0).map(|mut p| {
            p.threshold_offset = self.threshold_offset;
            p
        })
    }

    /// Full validation: dimensions, positive-definite `Σ_u`, and coherency.
    pub fn validate(&self) -> Result<CoherencyReport> {
        cholesky(&self.sigma_u)?;
        let report = check_coherency(self)?;
        if !report.coherent {
            return Err(Error::CoherencyViolated(report.describe()));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyReport {
    pub coherent: bool,
    pub det_plus: f64,
    pub det_minus: f64,
    pub det_xx: f64,
    pub schur_plus: f64,
    pub schur_minus: f64,
}

impl CoherencyReport {
    pub fn describe(&self) -> String {
        format!(
            "det Φ₀⁺ = {:.6e}, det Φ₀⁻ = {:.6e}, det Φ₀,xx = {:.6e}, Schur⁺ = {:.6e}, Schur⁻ = {:.6e}",
            self.det_plus, self.det_minus, self.det_xx, self.schur_plus, self.schur_minus
        )
    }
}

/// Blocks of `Φ₀` used by the coherency check and the canonical map.
struct Phi0Blocks {
    yy_plus: f64,
    yy_minus: f64,
    /// `φ₀,yxᵀ`, `1 × (p−1)`.
    yx: Mat,
    xy_plus: Mat,
    xy_minus: Mat,
    xx: Mat,
}

fn phi0_blocks(params: &CksvarParams) -> Phi0Blocks {
    let p = params.p;
    let phi0 = &params.coefs[0];
    Phi0Blocks {
        yy_plus: phi0[(0, 0)],
        yy_minus: phi0[(0, 1)],
        yx: phi0.block(0, 2, 1, p - 1),
        xy_plus: phi0.block(1, 0, p - 1, 1),
        xy_minus: phi0.block(1, 1, p - 1, 1),
        xx: phi0.block(1, 2, p - 1, p - 1),
    }
}

/// Checks that the piecewise-linear structural equation has a unique
/// solution for every right-hand side: `sgn det Φ₀⁺ = sgn det Φ₀⁻ ≠ 0`,
/// `Φ₀,xx` invertible, and both Schur complements strictly positive.
pub fn check_coherency(params: &CksvarParams) -> Result<CoherencyReport> {
    let det_plus = params.phi_regime(0, 1).det()?;
    let det_minus = params.phi_regime(0, -1).det()?;
    let b = phi0_blocks(params);
    let det_xx = b.xx.det()?;
    let (schur_plus, schur_minus) = if det_xx == 0.0 {
        (f64::NAN, f64::NAN)
    } else {
        schur_complements(&b)?
    };
    let same_sign = det_plus != 0.0 && det_minus != 0.0 && det_plus.signum() == det_minus.signum();
    let coherent = same_sign && det_xx != 0.0 && schur_plus > 0.0 && schur_minus > 0.0;
    Ok(CoherencyReport {
        coherent,
        det_plus,
        det_minus,
        det_xx,
        schur_plus,
        schur_minus,
    })
}

fn schur_complements(b: &Phi0Blocks) -> Result<(f64, f64)> {
    if b.xx.rows() == 0 {
        return Ok((b.yy_plus, b.yy_minus));
    }
    let sp = b.yy_plus - (&b.yx * &b.xx.solve(&b.xy_plus)?)[(0, 0)];
    let sm = b.yy_minus - (&b.yx * &b.xx.solve(&b.xy_minus)?)[(0, 0)];
    Ok((sp, sm))
}

/// Canonical form of a coherent CKSVAR.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    /// `(p+1) × (p+1)` map `z̃* = P⁻¹z*`.
    pub p_inv: Mat,
    /// `p × p` left transformation of the lag polynomials.
    pub q: Mat,
    /// Parameters of the canonical system, with `Φ̃₀ = I*_p`.
    pub params_tilde: CksvarParams,
}

impl CanonicalForm {
    /// Maps a structural observation `z = (y, x)` to the canonical `z̃`.
    pub fn transform_observation(&self, z: &[f64]) -> Vec<f64> {
        let p = z.len();
        let mut zstar = Vec::with_capacity(p + 1);
        zstar.push(z[0].max(0.0));
        zstar.push(z[0].min(0.0));
        zstar.extend_from_slice(&z[1..]);
        let t = self.p_inv.mul_vec(&zstar);
        let mut out = Vec::with_capacity(p);
        out.push(t[0] + t[1]);
        out.extend_from_slice(&t[2..]);
        out
    }
}

/// Transforms a coherent CKSVAR to canonical form `Φ̃₀ = I*_p`.
pub fn to_canonical(params: &CksvarParams) -> Result<CanonicalForm> {
    let report = check_coherency(params)?;
    if !report.coherent {
        return Err(Error::CoherencyViolated(report.describe()));
    }
    let p = params.p;
    let b = phi0_blocks(params);
    let (bar_plus, bar_minus) = schur_complements(&b)?;

    let mut p_inv = Mat::zeros(p + 1, p + 1);
    p_inv[(0, 0)] = bar_plus;
    p_inv[(1, 1)] = bar_minus;
    p_inv.set_block(2, 0, &b.xy_plus);
    p_inv.set_block(2, 1, &b.xy_minus);
    p_inv.set_block(2, 2, &b.xx);
    let p_mat = p_inv.inverse()?;

    let mut q = Mat::identity(p);
    if p > 1 {
        // −φ₀,yxᵀ Φ₀,xx⁻¹ = −(Φ₀,xx⁻ᵀ φ₀,yx)ᵀ
        let w = b.xx.transpose().solve(&b.yx.transpose())?;
        q.set_block(0, 1, &w.transpose().scale(-1.0));
    }

    let mut coefs: Vec<Mat> = params.coefs.iter().map(|m| &(&q * m) * &p_mat).collect();
    let target = canonical_selector(p);
    let err = (&coefs[0] - &target).max_abs();
    if err > 1e-10 * params.coefs[0].max_abs().max(1.0) {
        return Err(Error::CoherencyViolated(format!(
            "canonical transform left Φ̃₀ off I*_p by {err:.3e}"
        )));
    }
    coefs[0] = target;
    let c = &q * &params.c;
    let sigma = (&(&q * &params.sigma_u) * &q.transpose()).symmetrize();
    let mut params_tilde = CksvarParams::from_coefs(coefs, c, sigma, 0.0)?;
    params_tilde.threshold_offset = params.threshold_offset;
    Ok(CanonicalForm {
        p_inv,
        q,
        params_tilde,
    })
}

/// Case-(ii) cointegration structure `Π± = αβ±ᵀ`, with `β± = (β_y±, β_x)`.
/// All blocks are expressed in canonical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CointCaseTwoSpec {
    pub p: usize,
    pub k: usize,
    pub r: usize,
    pub q: usize,
    pub alpha: Mat,
    /// `1 × r`.
    pub beta_y_plus: Mat,
    /// `1 × r`.
    pub beta_y_minus: Mat,
    /// `(p−1) × r`.
    pub beta_x: Mat,
    /// `(p−1) × 1`, `Πˣθ± = π±`.
    pub theta_plus: Mat,
    pub theta_minus: Mat,
    pub pi_plus: Mat,
    pub pi_minus: Mat,
    pub pi_x: Mat,
    /// `Γᵢ = [γᵢ⁺, γᵢ⁻, Γᵢˣ] = −Σ_{j>i} Φⱼ`, `i = 1..k−1`, each `p × (p+1)`.
    pub gamma: Vec<Mat>,
    /// `Γ±(1) = Φ₀± − Σᵢ Γᵢ±` (`p × p`), `None` when built from factors alone.
    pub gamma_one: Option<(Mat, Mat)>,
    pub stability: Option<Stability>,
}

/// Outcome of the joint-spectral-radius stability check.
#[derive(Debug, Clone, PartialEq)]
pub struct Stability {
    pub bracket: JsrBracket,
    pub status: StabilityStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityStatus {
    /// Upper bound below one.
    Verified,
    /// Lower bound at or above one.
    Violated,
    /// Bracket straddles one at the maximum depth.
    Unverified,
}

impl CointCaseTwoSpec {
    /// Assembles a spec directly from `(α, β_y±, β_x, Γᵢ)`. `θ±` is
    /// recovered by least squares from `Πˣθ = π±`.
    pub fn from_factors(
        alpha: Mat,
        beta_y_plus: Mat,
        beta_y_minus: Mat,
        beta_x: Mat,
        gamma: Vec<Mat>,
    ) -> Result<Self> {
        let p = alpha.rows();
        let r = alpha.cols();
        if beta_y_plus.shape() != (1, r)
            || beta_y_minus.shape() != (1, r)
            || beta_x.shape() != (p.saturating_sub(1), r)
        {
            return Err(Error::DimensionMismatch("inconsistent α/β shapes".into()));
        }
        if gamma.iter().any(|g| g.shape() != (p, p + 1)) {
            return Err(Error::DimensionMismatch("Γᵢ must be p x (p+1)".into()));
        }
        let pi_x = &alpha * &beta_x.transpose();
        let pi_plus_col = &alpha * &beta_y_plus.transpose();
        let pi_minus_col = &alpha * &beta_y_minus.transpose();
        let pi_plus = Mat::hstack(&[&pi_plus_col, &pi_x])?;
        let pi_minus = Mat::hstack(&[&pi_minus_col, &pi_x])?;
        let theta_plus = least_squares(&pi_x, &pi_plus_col)?;
        let theta_minus = least_squares(&pi_x, &pi_minus_col)?;
        Ok(CointCaseTwoSpec {
            p,
            k: gamma.len() + 1,
            r,
            q: p - r,
            alpha,
            beta_y_plus,
            beta_y_minus,
            beta_x,
            theta_plus,
            theta_minus,
            pi_plus,
            pi_minus,
            pi_x,
            gamma,
            gamma_one: None,
            stability: None,
        })
    }

    /// `β± = [β_y±; β_x]`, `p × r`.
    pub fn beta(&self, sign: i8) -> Mat {
        let by = if sign >= 0 { &self.beta_y_plus } else { &self.beta_y_minus };
        Mat::vstack(&[by, &self.beta_x]).expect("consistent blocks")
    }

    /// `β* = [β_y⁺; β_y⁻; β_x]`, `(p+1) × r`; `β*ᵀz*ₜ = β(yₜ)ᵀzₜ`.
    pub fn beta_star(&self) -> Mat {
        Mat::vstack(&[&self.beta_y_plus, &self.beta_y_minus, &self.beta_x]).expect("consistent blocks")
    }

    /// `θ(y)`.
    pub fn theta(&self, sign: i8) -> &Mat {
        if sign >= 0 {
            &self.theta_plus
        } else {
            &self.theta_minus
        }
    }

    /// `β⊥(y) = [[1, 0], [−θ(y), β_{x,⊥}]]`, `p × q`.
    pub fn beta_perp(&self, sign: i8) -> Result<Mat> {
        let p = self.p;
        let bxp = orthogonal_complement(&self.beta_x)?;
        let mut m = Mat::zeros(p, self.q);
        m[(0, 0)] = 1.0;
        let th = self.theta(sign);
        for i in 0..p - 1 {
            m[(i + 1, 0)] = -th[(i, 0)];
            for j in 0..bxp.cols() {
                m[(i + 1, j + 1)] = bxp[(i, j)];
            }
        }
        Ok(m)
    }

    pub fn alpha_perp(&self) -> Result<Mat> {
        orthogonal_complement(&self.alpha)
    }

    /// Dimension of the companion matrices, `r + (k−1)(p+1)`.
    pub fn companion_dim(&self) -> usize {
        self.r + (self.k - 1) * (self.p + 1)
    }
}

/// Companion matrices `(I + 𝛃(+1)ᵀ𝛂, I + 𝛃(−1)ᵀ𝛂)` of the regime-switching
/// equilibrium-error recursion.
pub fn build_companion(spec: &CointCaseTwoSpec) -> Result<(Mat, Mat)> {
    if spec.k < 1 {
        return Err(Error::DimensionMismatch("k must be at least 1".into()));
    }
    let alpha_zero = spec.alpha.max_abs() == 0.0;
    if !alpha_zero && rank(&spec.alpha)? < spec.r {
        return Err(Error::RankDeficient("α is not of full column rank".into()));
    }
    for sign in [1i8, -1] {
        if spec.r > 0 && rank(&spec.beta(sign))? < spec.r {
            return Err(Error::RankDeficient(format!(
                "β{} is not of full column rank",
                if sign > 0 { "⁺" } else { "⁻" }
            )));
        }
    }
    let big_alpha = stacked_alpha(spec);
    let plus = companion_for(spec, &big_alpha, 1)?;
    let minus = companion_for(spec, &big_alpha, -1)?;
    Ok((plus, minus))
}

/// `𝛂`, `[k(p+1)−1] × [r+(k−1)(p+1)]`.
fn stacked_alpha(spec: &CointCaseTwoSpec) -> Mat {
    let (p, k, r) = (spec.p, spec.k, spec.r);
    let rows = p + (k - 1) * (p + 1);
    let cols = spec.companion_dim();
    let mut a = Mat::zeros(rows, cols);
    a.set_block(0, 0, &spec.alpha);
    for (i, g) in spec.gamma.iter().enumerate() {
        a.set_block(0, r + i * (p + 1), g);
        a.set_block(p + i * (p + 1), r + i * (p + 1), &Mat::identity(p + 1));
    }
    a
}

fn companion_for(spec: &CointCaseTwoSpec, big_alpha: &Mat, sign: i8) -> Result<Mat> {
    let (p, k, r) = (spec.p, spec.k, spec.r);
    let dim = spec.companion_dim();
    let width = p + (k - 1) * (p + 1);
    let mut bt = Mat::zeros(dim, width);
    bt.set_block(0, 0, &spec.beta(sign).transpose());
    let ident = Mat::identity(p + 1);
    let neg_ident = ident.scale(-1.0);
    for j in 1..k {
        let row = r + (j - 1) * (p + 1);
        if j == 1 {
            bt.set_block(row, 0, &sign_selector(p, f64::from(sign)));
        } else {
            bt.set_block(row, p + (j - 2) * (p + 1), &ident);
        }
        bt.set_block(row, p + (j - 1) * (p + 1), &neg_ident);
    }
    let prod = bt.matmul(big_alpha)?;
    Ok(&Mat::identity(dim) + &prod)
}

/// Bounds on the joint spectral radius of a finite matrix set.
#[derive(Debug, Clone, PartialEq)]
pub struct JsrBracket {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
}

/// Brackets the joint spectral radius by enumerating all products of length
/// up to `max_depth`:
///
/// * `lower = max_P ρ(P)^{1/len(P)}`
/// * `upper = min_m max_{len(P)=m} ‖P‖₂^{1/m}`
///
/// Fails with [`Error::Overflow`] if the number of products exceeds `budget`.
pub fn jsr_bracket(mats: &[Mat], max_depth: usize, budget: u128) -> Result<JsrBracket> {
    if mats.is_empty() || max_depth == 0 {
        return Err(Error::InvalidConfig("need at least one matrix and depth ≥ 1".into()));
    }
    let dim = mats[0].rows();
    if mats.iter().any(|m| m.shape() != (dim, dim)) {
        return Err(Error::DimensionMismatch("JSR matrices must be square and equal-sized".into()));
    }
    let count: u128 = (1..=max_depth as u32)
        .map(|m| (mats.len() as u128).saturating_pow(m))
        .fold(0u128, |a, b| a.saturating_add(b));
    if count > budget {
        return Err(Error::Overflow { count, budget });
    }
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut level: Vec<Mat> = vec![Mat::identity(dim)];
    for len in 1..=max_depth {
        let mut next = Vec::with_capacity(level.len() * mats.len());
        let mut max_norm = 0.0f64;
        for prefix in &level {
            for m in mats {
                let prod = m * prefix;
                let inv_len = 1.0 / len as f64;
                lower = lower.max(spectral_radius(&prod)?.powf(inv_len));
                max_norm = max_norm.max(spectral_norm(&prod)?.powf(inv_len));
                next.push(prod);
            }
        }
        upper = upper.min(max_norm);
        level = next;
    }
    // Roundoff can put ρ a hair above ‖·‖ for normal matrices.
    if lower > upper {
        lower = upper;
    }
    Ok(JsrBracket {
        lower,
        upper,
        depth: max_depth,
    })
}

/// Verifies the case-(ii) configuration for cointegrating rank `r` and
/// returns the decomposition in canonical coordinates.
///
/// Rank and sign failures are errors. The JSR stability condition is
/// reported through [`CointCaseTwoSpec::stability`] rather than failing,
/// since an inconclusive bracket says nothing definite.
pub fn check_case_ii(params: &CksvarParams, r: usize) -> Result<CointCaseTwoSpec> {
    let canon = to_canonical(params)?;
    let cp = &canon.params_tilde;
    let (p, k) = (cp.p, cp.k);
    if r >= p {
        return Err(Error::RankMismatch {
            expected: r,
            found: p,
        });
    }

    // Π± = −Φ±(1) in stacked form: −(Φ₀ − Σ Φᵢ), p × (p+1).
    let mut pi_stacked = cp.coefs[0].scale(-1.0);
    for m in &cp.coefs[1..] {
        pi_stacked = &pi_stacked + m;
    }
    let pi_plus_col = pi_stacked.block(0, 0, p, 1);
    let pi_minus_col = pi_stacked.block(0, 1, p, 1);
    let pi_x = pi_stacked.block(0, 2, p, p - 1);

    let found = rank(&pi_x)?;
    if found != r {
        return Err(Error::RankMismatch { expected: r, found });
    }
    for col in [&pi_plus_col, &pi_minus_col] {
        let full = Mat::hstack(&[col, &pi_x])?;
        let rk = rank(&full)?;
        if rk != r {
            return Err(Error::RankMismatch {
                expected: r,
                found: rk,
            });
        }
    }

    let (alpha, beta_x) = factor_pi_x(&pi_x, r)?;
    let theta_plus = least_squares(&pi_x, &pi_plus_col)?;
    let theta_minus = least_squares(&pi_x, &pi_minus_col)?;
    let beta_y_plus = &theta_plus.transpose() * &beta_x;
    let beta_y_minus = &theta_minus.transpose() * &beta_x;

    let gamma: Vec<Mat> = (1..k)
        .map(|i| {
            let mut g = Mat::zeros(p, p + 1);
            for m in &cp.coefs[i + 1..] {
                g = &g - m;
            }
            g
        })
        .collect();

    let gamma_one = |sign: i8| -> Mat {
        let mut g = cp.phi_regime(0, sign);
        let col = if sign >= 0 { 0 } else { 1 };
        for gi in &gamma {
            let gi_regime = Mat::hstack(&[&gi.block(0, col, p, 1), &gi.block(0, 2, p, p - 1)])
                .expect("consistent blocks");
            g = &g - &gi_regime;
        }
        g
    };

    let mut spec = CointCaseTwoSpec {
        p,
        k,
        r,
        q: p - r,
        alpha,
        beta_y_plus,
        beta_y_minus,
        beta_x,
        theta_plus,
        theta_minus,
        pi_plus: Mat::hstack(&[&pi_plus_col, &pi_x])?,
        pi_minus: Mat::hstack(&[&pi_minus_col, &pi_x])?,
        pi_x,
        gamma: gamma.clone(),
        gamma_one: Some((gamma_one(1), gamma_one(-1))),
        stability: None,
    };

    let alpha_perp = spec.alpha_perp()?;
    let mut dets = [0.0f64; 2];
    for (slot, sign) in [1i8, -1].into_iter().enumerate() {
        let g1 = if sign > 0 {
            &spec.gamma_one.as_ref().unwrap().0
        } else {
            &spec.gamma_one.as_ref().unwrap().1
        };
        let m = &(&alpha_perp.transpose() * g1) * &spec.beta_perp(sign)?;
        dets[slot] = m.det()?;
    }
    let scale = dets[0].abs().max(dets[1].abs());
    let degenerate = |d: f64| d == 0.0 || d.abs() <= 1e-12 * scale.max(1.0);
    if degenerate(dets[0]) || degenerate(dets[1]) || dets[0].signum() != dets[1].signum() {
        return Err(Error::SignCondition(format!(
            "det α⊥ᵀΓ(1;+1)β⊥(+1) = {:.6e}, det α⊥ᵀΓ(1;−1)β⊥(−1) = {:.6e}",
            dets[0], dets[1]
        )));
    }

    spec.stability = Some(stability_of(&spec)?);
    Ok(spec)
}

fn stability_of(spec: &CointCaseTwoSpec) -> Result<Stability> {
    if spec.companion_dim() == 0 {
        return Ok(Stability {
            bracket: JsrBracket {
                lower: 0.0,
                upper: 0.0,
                depth: 0,
            },
            status: StabilityStatus::Verified,
        });
    }
    let (plus, minus) = build_companion(spec)?;
    let bracket = jsr_bracket(&[plus, minus], JSR_DEFAULT_DEPTH, JSR_DEFAULT_BUDGET)?;
    let status = if bracket.upper < 1.0 {
        StabilityStatus::Verified
    } else if bracket.lower >= 1.0 {
        StabilityStatus::Violated
    } else {
        StabilityStatus::Unverified
    };
    Ok(Stability { bracket, status })
}

/// Rank-`r` factorization `Πˣ = αβ_xᵀ`. `β_x` gets an identity leading
/// `r × r` block when that block is well conditioned, otherwise it is left
/// orthonormal.
fn factor_pi_x(pi_x: &Mat, r: usize) -> Result<(Mat, Mat)> {
    let (p, m) = pi_x.shape();
    if r == 0 {
        return Ok((Mat::zeros(p, 0), Mat::zeros(m, 0)));
    }
    let s = svd(pi_x)?;
    let mut alpha = Mat::zeros(p, r);
    for j in 0..r {
        for i in 0..p {
            alpha[(i, j)] = s.u[(i, j)] * s.sigma[j];
        }
    }
    let beta_x = s.v.block(0, 0, m, r);
    let lead = beta_x.block(0, 0, r, r);
    let lead_sv = svd(&lead)?;
    let smallest = lead_sv.sigma.last().copied().unwrap_or(0.0);
    if smallest > RANK_TOL.sqrt() {
        let lead_inv = lead.inverse()?;
        let beta_x = &beta_x * &lead_inv;
        let alpha = &alpha * &lead.transpose();
        return Ok((alpha, beta_x));
    }
    Ok((alpha, beta_x))
}

/// Checks `c ∈ sp Π⁺ ∩ sp Π⁻` by least-squares residuals. `c` must be in
/// the same (canonical) coordinates as `spec`.
pub fn check_det_restriction(spec: &CointCaseTwoSpec, c: &Mat) -> Result<bool> {
    let norm = c.frobenius_norm();
    if norm == 0.0 {
        return Ok(true);
    }
    for pi in [&spec.pi_plus, &spec.pi_minus] {
        if ls_residual(pi, c)?.frobenius_norm() > 1e-8 * norm {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(phi_plus: f64, phi_minus: f64) -> CksvarParams {
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

    /// Canonical CKSVAR(1) in the Monte Carlo layout with β* = (by_plus, by_minus, 1).
    fn vecm_params(by_minus: f64) -> CksvarParams {
        let alpha = Mat::col_vector(&[0.5, 0.1]);
        let bstar = Mat::row_vector(&[-1.0, by_minus, 1.0]);
        let phi1 = &canonical_selector(2) + &(&alpha * &bstar);
        CksvarParams::from_coefs(
            vec![canonical_selector(2), phi1],
            alpha.scale(2.0),
            Mat::identity(2),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn coherency_examples() {
        let canonical = CksvarParams::from_coefs(
            vec![canonical_selector(3)],
            Mat::zeros(3, 1),
            Mat::identity(3),
            0.0,
        )
        .unwrap();
        assert!(check_coherency(&canonical).unwrap().coherent);
        assert!(check_coherency(&scalar_params(2.0, 1.0)).unwrap().coherent);
        let bad = check_coherency(&scalar_params(2.0, -1.0)).unwrap();
        assert!(!bad.coherent);
        assert_eq!(bad.det_plus, 2.0);
        assert_eq!(bad.det_minus, -1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = CksvarParams::from_coefs(
            vec![Mat::zeros(2, 2)],
            Mat::zeros(2, 1),
            Mat::identity(2),
            0.0,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn canonical_of_canonical_is_identity() {
        let params = vecm_params(-0.5);
        let canon = to_canonical(&params).unwrap();
        assert_eq!(canon.p_inv, Mat::identity(3));
        assert_eq!(canon.q, Mat::identity(2));
        assert_eq!(canon.params_tilde, params);
    }

    #[test]
    fn canonical_two_by_two() {
        // Φ₀,xx = 2, φ₀,yx = 1.
        let phi0 = Mat::from_rows(&[[1.5, 3.0, 1.0], [0.5, -0.4, 2.0]]);
        let phi1 = Mat::from_rows(&[[0.3, 0.1, 0.2], [0.0, 0.4, 0.5]]);
        let params =
            CksvarParams::from_coefs(vec![phi0.clone(), phi1], Mat::zeros(2, 1), Mat::identity(2), 0.0)
                .unwrap();
        let canon = to_canonical(&params).unwrap();
        // Independent recomputation of Q Φ₀ P.
        let q = Mat::from_rows(&[[1.0, -0.5], [0.0, 1.0]]);
        let bar_plus = 1.5 - 0.5 * 0.5;
        let bar_minus = 3.0 - 0.5 * -0.4;
        let p_inv = Mat::from_rows(&[[bar_plus, 0.0, 0.0], [0.0, bar_minus, 0.0], [0.5, -0.4, 2.0]]);
        assert!((&canon.p_inv - &p_inv).max_abs() < 1e-15);
        assert!((&canon.q - &q).max_abs() < 1e-15);
        let direct = &(&q * &phi0) * &p_inv.inverse().unwrap();
        assert!((&direct - &canonical_selector(2)).max_abs() < 1e-10);
        assert_eq!(canon.params_tilde.coef(0), &canonical_selector(2));
    }

    #[test]
    fn canonical_idempotent() {
        let phi0 = Mat::from_rows(&[[1.2, 0.7, -0.3], [0.2, 0.9, 1.4]]);
        let params =
            CksvarParams::from_coefs(vec![phi0], Mat::col_vector(&[0.1, 0.2]), Mat::identity(2), 0.0)
                .unwrap();
        let once = to_canonical(&params).unwrap().params_tilde;
        let twice = to_canonical(&once).unwrap();
        assert!((&twice.p_inv - &Mat::identity(3)).max_abs() < 1e-10);
        for (a, b) in once.coefs().iter().zip(twice.params_tilde.coefs()) {
            assert!((a - b).max_abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_rejects_incoherent() {
        assert!(matches!(
            to_canonical(&scalar_params(2.0, -1.0)),
            Err(Error::CoherencyViolated(_))
        ));
    }

    #[test]
    fn threshold_folded_into_intercept() {
        let base = scalar_params(2.0, 1.0);
        let shifted = CksvarParams::from_coefs(
            base.coefs().to_vec(),
            Mat::zeros(1, 1),
            Mat::identity(1),
            0.5,
        )
        .unwrap();
        // c' = c − b(φ⁺(1) + φ⁻(1)) = −0.5·3
        assert_eq!(shifted.c()[(0, 0)], -1.5);
        assert_eq!(shifted.threshold_offset(), 0.5);
    }

    #[test]
    fn companion_scalar_examples() {
        let alpha = Mat::col_vector(&[0.5, 0.1]);
        let spec = CointCaseTwoSpec::from_factors(
            alpha,
            Mat::row_vector(&[-1.0]),
            Mat::row_vector(&[-0.5]),
            Mat::row_vector(&[1.0]),
            vec![],
        )
        .unwrap();
        let (plus, minus) = build_companion(&spec).unwrap();
        assert!((plus[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((minus[(0, 0)] - 0.85).abs() < 1e-15);

        let zero = CointCaseTwoSpec::from_factors(
            Mat::zeros(2, 1),
            Mat::row_vector(&[-1.0]),
            Mat::row_vector(&[-0.5]),
            Mat::row_vector(&[1.0]),
            vec![],
        )
        .unwrap();
        let (plus, minus) = build_companion(&zero).unwrap();
        assert_eq!(plus, Mat::identity(1));
        assert_eq!(minus, Mat::identity(1));
    }

    #[test]
    fn companion_rank_deficient_beta() {
        let spec = CointCaseTwoSpec::from_factors(
            Mat::col_vector(&[0.5, 0.1]),
            Mat::row_vector(&[0.0]),
            Mat::row_vector(&[-0.5]),
            Mat::row_vector(&[0.0]),
            vec![],
        )
        .unwrap();
        assert!(matches!(build_companion(&spec), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn companion_k2_dimensions_and_blocks() {
        let g1 = Mat::from_rows(&[[0.1, 0.2, 0.3], [0.0, -0.1, 0.05]]);
        let spec = CointCaseTwoSpec::from_factors(
            Mat::col_vector(&[0.5, 0.1]),
            Mat::row_vector(&[-1.0]),
            Mat::row_vector(&[-0.5]),
            Mat::row_vector(&[1.0]),
            vec![g1.clone()],
        )
        .unwrap();
        let (plus, minus) = build_companion(&spec).unwrap();
        assert_eq!(plus.shape(), (4, 4));
        // First row: 1 + βᵀα, then βᵀΓ₁.
        let beta = spec.beta(1);
        let bg = &beta.transpose() * &g1;
        assert!((plus[(0, 0)] - 0.6).abs() < 1e-15);
        for j in 0..3 {
            assert!((plus[(0, 1 + j)] - bg[(0, j)]).abs() < 1e-15);
        }
        // Rows 1..4: I + [S_p(+1)α, S_p(+1)Γ₁ − I] = [S_p α, S_p Γ₁].
        let s = sign_selector(2, 1.0);
        let sa = &s * &spec.alpha;
        let sg = &s * &g1;
        for i in 0..3 {
            assert!((plus[(1 + i, 0)] - sa[(i, 0)]).abs() < 1e-15);
            for j in 0..3 {
                assert!((plus[(1 + i, 1 + j)] - sg[(i, j)]).abs() < 1e-15);
            }
        }
        let sm = &sign_selector(2, -1.0) * &spec.alpha;
        assert!((minus[(2, 0)] - sm[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn jsr_examples() {
        let b = jsr_bracket(&[Mat::identity(2)], 4, JSR_DEFAULT_BUDGET).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);

        let s = [Mat::from_rows(&[[0.6]]), Mat::from_rows(&[[0.85]])];
        let b = jsr_bracket(&s, 5, JSR_DEFAULT_BUDGET).unwrap();
        assert!((b.lower - 0.85).abs() < 1e-12 && (b.upper - 0.85).abs() < 1e-12);

        let pair = [
            Mat::diag(&[0.9, 0.0]),
            Mat::from_rows(&[[0.0, 0.9], [0.0, 0.0]]),
        ];
        for depth in 2..=4 {
            let b = jsr_bracket(&pair, depth, JSR_DEFAULT_BUDGET).unwrap();
            assert!(b.upper < 1.0);
            assert!(b.lower <= b.upper);
        }
    }

    #[test]
    fn jsr_budget_overflow() {
        let s = [Mat::identity(1), Mat::identity(1)];
        assert!(matches!(jsr_bracket(&s, 17, 1 << 16), Err(Error::Overflow { .. })));
    }

    #[test]
    fn case_ii_recovers_design() {
        for by_minus in [-1.0, -0.5] {
            let spec = check_case_ii(&vecm_params(by_minus), 1).unwrap();
            let alpha = Mat::col_vector(&[0.5, 0.1]);
            let expect_plus = &alpha * &Mat::row_vector(&[-1.0, 1.0]);
            let expect_minus = &alpha * &Mat::row_vector(&[by_minus, 1.0]);
            assert!((&spec.pi_plus - &expect_plus).max_abs() < 1e-12);
            assert!((&spec.pi_minus - &expect_minus).max_abs() < 1e-12);
            assert!((&(&spec.alpha * &spec.beta(1).transpose()) - &expect_plus).max_abs() < 1e-12);
            assert!((spec.theta_plus[(0, 0)] + 1.0).abs() < 1e-12);
            assert!((spec.theta_minus[(0, 0)] - by_minus).abs() < 1e-12);
            let stab = spec.stability.unwrap();
            assert_eq!(stab.status, StabilityStatus::Verified);
            let expected = if by_minus == -1.0 { 0.6 } else { 0.85 };
            assert!((stab.bracket.upper - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn case_ii_rank_mismatch_for_random_walks() {
        let params = CksvarParams::from_coefs(
            vec![canonical_selector(2), canonical_selector(2)],
            Mat::zeros(2, 1),
            Mat::identity(2),
            0.0,
        )
        .unwrap();
        assert_eq!(
            check_case_ii(&params, 1).unwrap_err(),
            Error::RankMismatch {
                expected: 1,
                found: 0
            }
        );
    }

    #[test]
    fn case_ii_sign_condition() {
        // β⁻ = (1, 1): α⊥ᵀβ⊥(−1) has the opposite sign of α⊥ᵀβ⊥(+1).
        let params = vecm_params(1.0);
        assert!(matches!(check_case_ii(&params, 1), Err(Error::SignCondition(_))));
    }

    #[test]
    fn det_restriction_examples() {
        let spec = check_case_ii(&vecm_params(-0.5), 1).unwrap();
        let alpha = Mat::col_vector(&[0.5, 0.1]);
        assert!(check_det_restriction(&spec, &alpha.scale(2.0)).unwrap());
        assert!(check_det_restriction(&spec, &Mat::zeros(2, 1)).unwrap());
        assert!(!check_det_restriction(&spec, &Mat::col_vector(&[0.1, -0.5])).unwrap());
    }
}
