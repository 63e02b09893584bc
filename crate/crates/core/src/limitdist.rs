//! Limiting null distributions of the rank statistics, simulated on a grid.
//!
//! A `q`-dimensional Brownian motion `W₀(λ) = 𝒲₀e₁ + W(λ)` is sampled at
//! `λᵢ = i/G`. The MB functional splits the first coordinate into its
//! positive and negative parts, `W₀* = ([W₀,₁]₊, [W₀,₁]₋, W₀,₋₁)`, demeans
//! over `i = 1..G`, cumulates (left Riemann sums) and returns
//! `tr(S̄_W S̄_V⁻¹)`, the sum of all eigenvalues of the pencil `(S̄_W, S̄_V)`.
//! On the grid this is the finite-sample statistic with `n = G`. The SB
//! functional is the same trace on the unsplit `q0`-dimensional path.
//!
//! Critical values are order statistics: the `⌈(1−α)m⌉`-th smallest of the
//! `m` accepted draws, where a draw is accepted when its occupation minimum
//! `𝓜` is at least `τ`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ranktest::{pencil_sum, Variant};
use crate::rng::RngState;
use crate::series::format_g17;
use crate::simulate::ceil_count;

/// Default grid size.
pub const DEFAULT_GRID: usize = 2000;
/// Fewest accepted draws a table entry may rest on.
pub const MIN_ACCEPTED: usize = 1000;
/// Comment line written at the top of table files.
pub const QUANTILE_NOTE: &str = "# quantile=order-statistic ceil((1-alpha)*m)";

const MATCH_TOL: f64 = 1e-9;

/// Values of a `dim`-dimensional path at `λᵢ = i/G`, `i = 0..G`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub dim: usize,
    pub grid: usize,
    pub values: Vec<f64>,
}

impl GridPath {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Points `1..=G`.
    fn interior(&self) -> &[f64] {
        &self.values[self.dim..]
    }

    /// Keeps every `step`-th point, giving the same path on the grid `G/step`.
    pub fn subsample(&self, step: usize) -> Result<GridPath> {
        if step == 0 || !self.grid.is_multiple_of(step) {
            return Err(Error::InvalidConfig(format!(
                "step {step} does not divide grid {}",
                self.grid
            )));
        }
        let values = (0..=self.grid / step)
            .flat_map(|i| self.point(i * step).iter().copied())
            .collect();
        Ok(GridPath {
            dim: self.dim,
            grid: self.grid / step,
            values,
        })
    }
}

/// Builds a path from `𝒲₀` and `G × q` time-major increments.
pub fn path_from_increments(q: usize, w0_init: f64, increments: &[f64]) -> Result<GridPath> {
    if q == 0 || !increments.len().is_multiple_of(q) {
        return Err(Error::DimensionMismatch("increments must fill rows of width q".into()));
    }
    let grid = increments.len() / q;
    let mut values = Vec::with_capacity((grid + 1) * q);
    let mut level = vec![0.0; q];
    level[0] = w0_init;
    values.extend_from_slice(&level);
    for step in increments.chunks_exact(q) {
        for (l, d) in level.iter_mut().zip(step) {
            *l += d;
        }
        values.extend_from_slice(&level);
    }
    Ok(GridPath {
        dim: q,
        grid,
        values,
    })
}

/// Brownian motion started at `𝒲₀e₁` with `N(0, 1/G)` increments, drawn
/// point by point with coordinates in order.
pub fn draw_w0_path(q: usize, grid: usize, w0_init: f64, rng: &mut RngState) -> GridPath {
    assert!(q >= 1 && grid >= 1);
    let sd = (1.0 / grid as f64).sqrt();
    let mut inc = vec![0.0; grid * q];
    for v in inc.iter_mut() {
        *v = sd * rng.next_normal();
    }
    path_from_increments(q, w0_init, &inc).expect("shape is consistent")
}

/// `W₀* = ([W₀,₁]₊, [W₀,₁]₋, W₀,₋₁)` at every grid point.
pub fn build_w0star(path: &GridPath) -> GridPath {
    let q = path.dim;
    let mut values = Vec::with_capacity((path.grid + 1) * (q + 1));
    for i in 0..=path.grid {
        let w = path.point(i);
        values.push(if w[0] >= 0.0 { w[0] } else { 0.0 });
        values.push(if w[0] < 0.0 { w[0] } else { 0.0 });
        values.extend_from_slice(&w[1..]);
    }
    GridPath {
        dim: q + 1,
        grid: path.grid,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDraw {
    pub lambda_value: f64,
    /// `𝓜 = min(m⁺, m⁻)` of the first Brownian coordinate on `i = 1..G`.
    pub occupation_min: f64,
    pub w0_init: f64,
}

fn occupation_min(first: impl Iterator<Item = f64>, grid: usize) -> f64 {
    let plus = first.filter(|&v| v >= 0.0).count();
    plus.min(grid - plus) as f64 / grid as f64
}

/// MB limit functional of a split path from [`build_w0star`].
pub fn lambda_limit_draw(star: &GridPath, w0_init: f64) -> Result<LimitDraw> {
    let d = star.dim;
    let (lambda_value, _) = trace_functional(star.interior(), d)?;
    let first = star.interior().chunks_exact(d).map(|r| r[0] + r[1]);
    Ok(LimitDraw {
        lambda_value,
        occupation_min: occupation_min(first, star.grid),
        w0_init,
    })
}

/// SB limit functional of an unsplit path.
pub fn sb_limit_functional(path: &GridPath) -> Result<LimitDraw> {
    let d = path.dim;
    let (lambda_value, _) = trace_functional(path.interior(), d)?;
    let first = path.interior().chunks_exact(d).map(|r| r[0]);
    Ok(LimitDraw {
        lambda_value,
        occupation_min: occupation_min(first, path.grid),
        w0_init: path.point(0)[0],
    })
}

/// SB limit draw: the trace functional of a demeaned `q0`-dimensional
/// standard Brownian motion.
pub fn sb_limit_draw(q0: usize, grid: usize, rng: &mut RngState) -> Result<LimitDraw> {
    sb_limit_functional(&draw_w0_path(q0, grid, 0.0, rng))
}

/// MB limit draw for hypothesis `q0`.
pub fn mb_limit_draw(q0: usize, grid: usize, w0_init: f64, rng: &mut RngState) -> Result<LimitDraw> {
    lambda_limit_draw(&build_w0star(&draw_w0_path(q0, grid, w0_init, rng)), w0_init)
}

fn trace_functional(rows: &[f64], d: usize) -> Result<(f64, Vec<f64>)> {
    let centered = center(rows, d);
    pencil_sum(&centered, d, d).map_err(|e| Error::SingularLimit(e.to_string()))
}

fn center(rows: &[f64], d: usize) -> Vec<f64> {
    let g = (rows.len() / d) as f64;
    let mut mean = vec![0.0; d];
    for r in rows.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= g;
    }
    rows.chunks_exact(d)
        .flat_map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect::<Vec<_>>())
        .collect()
}

/// One draw of the limit for `variant` under stream `rng`.
pub fn limit_draw(
    variant: Variant,
    q0: usize,
    grid: usize,
    w0_init: f64,
    rng: &mut RngState,
) -> Result<LimitDraw> {
    match variant {
        Variant::Mb => mb_limit_draw(q0, grid, w0_init, rng),
        Variant::Sb => sb_limit_draw(q0, grid, rng),
    }
}

/// Stream for draw `index` of a table with base `seed`.
pub fn draw_rng(seed: u64, index: usize) -> RngState {
    RngState::derived(seed, &[index as u64])
}

/// Non-singular draws in index order plus the count of singular ones.
#[derive(Debug, Clone)]
pub struct LimitSample {
    pub draws: Vec<LimitDraw>,
    pub singular: usize,
    pub total: usize,
}

impl LimitSample {
    /// Lambda values of draws with `𝓜 ≥ τ`, sorted ascending.
    pub fn accepted(&self, tau: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .draws
            .iter()
            .filter(|d| d.occupation_min >= tau - 1e-12)
            .map(|d| d.lambda_value)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Simulates `reps` draws in parallel on the current rayon pool. Draw `i`
/// uses [`draw_rng`]`(seed, i)`, so the result does not depend on the pool.
pub fn simulate_limit(
    variant: Variant,
    q0: usize,
    grid: usize,
    reps: usize,
    seed: u64,
    w0_init: f64,
) -> Result<LimitSample> {
    let results: Vec<Result<LimitDraw>> = (0..reps)
        .into_par_iter()
        .map(|i| limit_draw(variant, q0, grid, w0_init, &mut draw_rng(seed, i)))
        .collect();
    let mut draws = Vec::with_capacity(reps);
    let mut singular = 0;
    for r in results {
        match r {
            Ok(d) => draws.push(d),
            Err(Error::SingularLimit(_)) => singular += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(LimitSample {
        draws,
        singular,
        total: reps,
    })
}

/// The `⌈(1−α)m⌉`-th smallest of `sorted`.
pub fn order_statistic(sorted: &[f64], alpha: f64) -> f64 {
    let m = sorted.len();
    let k = ceil_count((1.0 - alpha) * m as f64).clamp(1, m);
    sorted[k - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSimConfig {
    pub variant: Variant,
    pub q0: usize,
    pub grid: usize,
    pub reps: usize,
    pub seed: u64,
    pub taus: Vec<f64>,
    pub alphas: Vec<f64>,
    pub w0_values: Vec<f64>,
}

impl LimitSimConfig {
    pub fn new(variant: Variant, q0: usize) -> Self {
        LimitSimConfig {
            variant,
            q0,
            grid: DEFAULT_GRID,
            reps: 100_000,
            seed: 42,
            taus: vec![0.0],
            alphas: vec![0.1],
            w0_values: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.q0 == 0 {
            return bad("q0 must be at least 1".into());
        }
        if self.grid < 100 {
            return bad(format!("grid {} is below 100", self.grid));
        }
        if self.reps < 1000 {
            return bad(format!("reps {} is below 1000", self.reps));
        }
        if self.taus.is_empty() || self.alphas.is_empty() || self.w0_values.is_empty() {
            return bad("taus, alphas and w0 values must be non-empty".into());
        }
        if let Some(t) = self.taus.iter().find(|t| !(0.0..0.5).contains(*t)) {
            return bad(format!("tau {t} outside [0, 0.5)"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return bad(format!("alpha {a} outside (0, 1]"));
        }
        if let Some(w) = self.w0_values.iter().find(|w| !w.is_finite()) {
            return bad(format!("w0 {w} is not finite"));
        }
        if self.variant == Variant::Sb && self.w0_values.iter().any(|&w| w != 0.0) {
            return bad("SB limit does not depend on W0; use w0 = 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CritValRow {
    pub variant: Variant,
    pub q0: usize,
    pub tau: f64,
    pub alpha: f64,
    pub w0_init: f64,
    pub crit: f64,
    pub accepted: usize,
    pub total: usize,
    pub grid: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CritValTable {
    rows: Vec<CritValRow>,
}

pub const TABLE_HEADER: [&str; 10] = [
    "variant", "q0", "tau", "alpha", "w0_init", "crit", "accepted", "total", "grid", "seed",
];

impl CritValTable {
    pub fn from_rows(mut rows: Vec<CritValRow>) -> Self {
        sort_rows(&mut rows);
        CritValTable { rows }
    }

    pub fn rows(&self) -> &[CritValRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds rows of `other`, which take precedence on identical keys.
    pub fn merge(&mut self, other: &CritValTable) {
        for row in &other.rows {
            self.rows.retain(|r| !same_key(r, row));
            self.rows.push(row.clone());
        }
        sort_rows(&mut self.rows);
    }

    /// Critical value for `(variant, q0, τ, α)` at `𝒲₀ = w0`, interpolated
    /// linearly between the bracketing tabulated `𝒲₀` values.
    pub fn lookup(&self, variant: Variant, q0: usize, tau: f64, alpha: f64, w0: f64) -> Result<f64> {
        let missing = || {
            Error::MissingCriticalValue(format!(
                "variant {variant}, q0 {q0}, tau {tau}, alpha {alpha}, w0 {w0}"
            ))
        };
        let group: Vec<&CritValRow> = self
            .rows
            .iter()
            .filter(|r| {
                r.variant == variant
                    && r.q0 == q0
                    && (r.tau - tau).abs() <= MATCH_TOL
                    && (r.alpha - alpha).abs() <= MATCH_TOL
            })
            .collect();
        if let Some(r) = group.iter().find(|r| (r.w0_init - w0).abs() <= MATCH_TOL) {
            return Ok(r.crit);
        }
        // Rows are sorted by w0 within the group.
        let upper = group.iter().position(|r| r.w0_init > w0).ok_or_else(missing)?;
        if upper == 0 {
            return Err(missing());
        }
        let (lo, hi) = (group[upper - 1], group[upper]);
        let t = (w0 - lo.w0_init) / (hi.w0_init - lo.w0_init);
        Ok(lo.crit + t * (hi.crit - lo.crit))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{QUANTILE_NOTE}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.variant.name().to_string(),
                r.q0.to_string(),
                format_g17(r.tau),
                format_g17(r.alpha),
                format_g17(r.w0_init),
                format_g17(r.crit),
                r.accepted.to_string(),
                r.total.to_string(),
                r.grid.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().ne(TABLE_HEADER.iter().copied()) {
            return Err(Error::Parse(format!(
                "table header must be `{}`",
                TABLE_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| rec.get(j).unwrap_or("");
            let num = |j: usize| -> Result<f64> {
                field(j)
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("table row {}: {}: {e}", i + 1, TABLE_HEADER[j])))
            };
            let int = |j: usize| -> Result<u64> {
                field(j)
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("table row {}: {}: {e}", i + 1, TABLE_HEADER[j])))
            };
            rows.push(CritValRow {
                variant: field(0)
                    .parse()
                    .map_err(|_| Error::Parse(format!("table row {}: variant", i + 1)))?,
                q0: int(1)? as usize,
                tau: num(2)?,
                alpha: num(3)?,
                w0_init: num(4)?,
                crit: num(5)?,
                accepted: int(6)? as usize,
                total: int(7)? as usize,
                grid: int(8)? as usize,
                seed: int(9)?,
            });
        }
        Ok(CritValTable::from_rows(rows))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

fn same_key(a: &CritValRow, b: &CritValRow) -> bool {
    a.variant == b.variant
        && a.q0 == b.q0
        && a.tau == b.tau
        && a.alpha == b.alpha
        && a.w0_init == b.w0_init
}

fn sort_rows(rows: &mut [CritValRow]) {
    rows.sort_by(|a, b| {
        a.variant
            .cmp(&b.variant)
            .then(a.q0.cmp(&b.q0))
            .then(a.tau.total_cmp(&b.tau))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.w0_init.total_cmp(&b.w0_init))
    });
}

/// Tabulates critical values for every `(τ, α, 𝒲₀)` in `cfg`. The same
/// draw streams are reused across `𝒲₀` values.
pub fn make_table(cfg: &LimitSimConfig) -> Result<CritValTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &w0 in &cfg.w0_values {
        let sample = simulate_limit(cfg.variant, cfg.q0, cfg.grid, cfg.reps, cfg.seed, w0)?;
        rows.extend(table_rows(cfg, &sample, w0)?);
    }
    Ok(CritValTable::from_rows(rows))
}

/// Rows for one simulated sample.
pub fn table_rows(cfg: &LimitSimConfig, sample: &LimitSample, w0: f64) -> Result<Vec<CritValRow>> {
    let mut rows = Vec::new();
    for &tau in &cfg.taus {
        let accepted = sample.accepted(tau);
        if accepted.len() < MIN_ACCEPTED {
            return Err(Error::InsufficientAcceptedDraws {
                tau,
                accepted: accepted.len(),
                required: MIN_ACCEPTED,
            });
        }
        for &alpha in &cfg.alphas {
            rows.push(CritValRow {
                variant: cfg.variant,
                q0: cfg.q0,
                tau,
                alpha,
                w0_init: w0,
                crit: order_statistic(&accepted, alpha),
                accepted: accepted.len(),
                total: sample.total,
                grid: cfg.grid,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}
