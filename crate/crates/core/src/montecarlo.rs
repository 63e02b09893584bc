//! Rejection-rate study on the bivariate designs of [`mc_design`] and the
//! numerical law-of-large-numbers check.
//!
//! Replication `j` of design `d` at sample size `n` draws attempt `a` from
//! the stream `derive_seed(base_seed, [d, n, j, a])`. Attempts that spend
//! fewer than `⌈0.15n⌉` periods in either regime are discarded and redrawn.
//! Every retained dataset is tested at `q0 ∈ {1, 2}` with both statistics,
//! so all four cells of a `(design, n)` pair share the same data.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limitdist::CritValTable;
use crate::pencil::{sym_eig, Mat};
use crate::ranktest::{lambda_stat, Variant};
use crate::rng::{derive_seed, RngState};
use crate::series::format_g17;
use crate::simulate::{
    mc_design, occupation, retained, simulate_path, stack_star, DesignKind, SimOptions,
};

pub const DEFAULT_SIZES: [usize; 4] = [200, 500, 1000, 1500];
pub const DEFAULT_REPS: usize = 10_000;
pub const DEFAULT_MAX_REDRAWS: usize = 10_000;
/// Hypotheses tested on every retained dataset.
pub const HYPOTHESES: [usize; 2] = [1, 2];
pub const VARIANTS: [Variant; 2] = [Variant::Sb, Variant::Mb];

#[derive(Debug, Clone)]
pub struct McConfig {
    pub designs: Vec<DesignKind>,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub base_seed: u64,
    pub retention_threshold: f64,
    pub alpha: f64,
    /// Conditioning threshold for MB; SB always uses `τ = 0`.
    pub tau: f64,
    pub mb_table: CritValTable,
    pub sb_table: CritValTable,
    pub max_redraws_per_rep: usize,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
}

impl McConfig {
    pub fn new(mb_table: CritValTable, sb_table: CritValTable) -> Self {
        McConfig {
            designs: vec![DesignKind::Linear, DesignKind::Nonlinear],
            sample_sizes: DEFAULT_SIZES.to_vec(),
            reps: DEFAULT_REPS,
            base_seed: 1,
            retention_threshold: 0.15,
            alpha: 0.10,
            tau: 0.15,
            mb_table,
            sb_table,
            max_redraws_per_rep: DEFAULT_MAX_REDRAWS,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if !(0.0..0.5).contains(&self.retention_threshold) {
            return bad("retention threshold must lie in [0, 0.5)");
        }
        if self.designs.is_empty() || self.sample_sizes.is_empty() {
            return bad("designs and sample sizes must be non-empty");
        }
        if self.sample_sizes.iter().any(|&n| n < 10) {
            return bad("sample sizes must be at least 10");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if self.max_redraws_per_rep == 0 {
            return bad("max redraws must be at least 1");
        }
        Ok(())
    }

    fn crit(&self, variant: Variant, q0: usize) -> Result<f64> {
        match variant {
            Variant::Mb => self.mb_table.lookup(Variant::Mb, q0, self.tau, self.alpha, 0.0),
            Variant::Sb => self.sb_table.lookup(Variant::Sb, q0, 0.0, self.alpha, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McCell {
    pub design: DesignKind,
    pub n: usize,
    pub q0: usize,
    pub variant: Variant,
    pub rejection_rate: f64,
    pub reps_used: usize,
    pub mean_discards_per_rep: f64,
}

/// Outcome of one retained replication.
#[derive(Debug, Clone, Copy)]
struct RepResult {
    /// Indexed by `[hypothesis][variant]` in the order of the constants.
    reject: [[bool; 2]; 2],
    discards: usize,
}

fn run_rep(
    cfg: &McConfig,
    params: &crate::cksvar::CksvarParams,
    design: DesignKind,
    n: usize,
    rep: usize,
    crit: &[[f64; 2]; 2],
) -> Result<RepResult> {
    for attempt in 0..cfg.max_redraws_per_rep {
        let seed = derive_seed(
            cfg.base_seed,
            &[design.id(), n as u64, rep as u64, attempt as u64],
        );
        let path = simulate_path(params, n, &SimOptions::default(), &mut RngState::new(seed))?;
        if !retained(&occupation(&path.series.y()), cfg.retention_threshold) {
            continue;
        }
        let mut reject = [[false; 2]; 2];
        for (h, &q0) in HYPOTHESES.iter().enumerate() {
            for (v, &variant) in VARIANTS.iter().enumerate() {
                reject[h][v] = lambda_stat(&path.series, q0, variant)?.lambda > crit[h][v];
            }
        }
        return Ok(RepResult {
            reject,
            discards: attempt,
        });
    }
    Err(Error::RetentionExhausted {
        rep,
        attempts: cfg.max_redraws_per_rep,
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// All four cells for one `(design, n)`.
fn run_design_size(cfg: &McConfig, design: DesignKind, n: usize) -> Result<Vec<McCell>> {
    let (params, _) = mc_design(design);
    let mut crit = [[0.0; 2]; 2];
    for (h, &q0) in HYPOTHESES.iter().enumerate() {
        for (v, &variant) in VARIANTS.iter().enumerate() {
            crit[h][v] = cfg.crit(variant, q0)?;
        }
    }
    let results: Vec<RepResult> = pool(cfg.threads)?.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, &params, design, n, rep, &crit))
            .collect::<Result<_>>()
    })?;
    let discards: usize = results.iter().map(|r| r.discards).sum();
    let mean_discards = discards as f64 / cfg.reps as f64;
    log::info!("{design} n={n}: {discards} discarded draws over {} reps", cfg.reps);
    let mut cells = Vec::with_capacity(4);
    for (h, &q0) in HYPOTHESES.iter().enumerate() {
        for (v, &variant) in VARIANTS.iter().enumerate() {
            let rejections = results.iter().filter(|r| r.reject[h][v]).count();
            cells.push(McCell {
                design,
                n,
                q0,
                variant,
                rejection_rate: rejections as f64 / cfg.reps as f64,
                reps_used: cfg.reps,
                mean_discards_per_rep: mean_discards,
            });
        }
    }
    Ok(cells)
}

/// One cell of the table.
pub fn run_cell(cfg: &McConfig, design: DesignKind, n: usize, q0: usize, variant: Variant) -> Result<McCell> {
    cfg.validate()?;
    if !HYPOTHESES.contains(&q0) {
        return Err(Error::InvalidConfig(format!("q0 = {q0} must be 1 or 2")));
    }
    let cells = run_design_size(cfg, design, n)?;
    Ok(cells
        .into_iter()
        .find(|c| c.q0 == q0 && c.variant == variant)
        .expect("every hypothesis and variant is computed"))
}

/// The full grid of designs × sizes × hypotheses × variants.
pub fn run_table(cfg: &McConfig) -> Result<Vec<McCell>> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &design in &cfg.designs {
        for &n in &cfg.sample_sizes {
            cells.extend(run_design_size(cfg, design, n)?);
        }
    }
    Ok(cells)
}

pub const TABLE_HEADER: &str = "design,n,q0,variant,rejection_rate,reps,mean_discards";

pub fn format_table(cells: &[McCell]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TABLE_HEADER}");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.design,
            c.n,
            c.q0,
            c.variant,
            format_g17(c.rejection_rate),
            c.reps_used,
            format_g17(c.mean_discards_per_rep)
        );
    }
    out
}

/// Equilibrium error `ξ = β*ᵀz*` of the designs.
pub const MU_XI: f64 = -2.0;

#[derive(Debug, Clone)]
pub struct LlnReport {
    pub design: DesignKind,
    pub n: usize,
    pub mean_xi: f64,
    pub mean_xi_plus: f64,
    pub mean_xi_minus: f64,
    pub count_plus: usize,
    pub count_minus: usize,
    /// Regime-conditional second moments of `(ξₜ, Δyₜ, Δxₜ)`.
    pub second_moment_plus: Mat,
    pub second_moment_minus: Mat,
    pub min_eig_plus: f64,
    pub min_eig_minus: f64,
    pub mu_xi: f64,
}

impl LlnReport {
    pub fn describe(&self) -> String {
        format!(
            "{} design, n = {}\n  mean xi            {:.4}  (target {})\n  mean xi | y >= 0   {:.4}  ({} obs)\n  mean xi | y < 0    {:.4}  ({} obs)\n  min eig E[ww'|+]   {:.4}\n  min eig E[ww'|-]   {:.4}",
            self.design,
            self.n,
            self.mean_xi,
            self.mu_xi,
            self.mean_xi_plus,
            self.count_plus,
            self.mean_xi_minus,
            self.count_minus,
            self.min_eig_plus,
            self.min_eig_minus
        )
    }
}

/// Simulates one long path and reports full-sample and regime-conditional
/// averages of the equilibrium error, with the regime taken from `yₜ`.
pub fn verify_lln(design: DesignKind, n: usize, seed: u64) -> Result<LlnReport> {
    if n < 10 {
        return Err(Error::TooFewObservations("n must be at least 10".into()));
    }
    let (params, spec) = mc_design(design);
    let path = simulate_path(&params, n, &SimOptions::default(), &mut RngState::new(seed))?;
    let bstar = spec.beta_star();
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    let mut moments = [Mat::zeros(3, 3), Mat::zeros(3, 3)];
    let mut prev = [0.0; 2];
    let mut total = 0.0;
    for z in path.series.rows() {
        let s = stack_star(z);
        let xi: f64 = (0..3).map(|i| bstar[(i, 0)] * s[i]).sum();
        let w = [xi, z[0] - prev[0], z[1] - prev[1]];
        let r = usize::from(z[0] < 0.0);
        sums[r] += xi;
        counts[r] += 1;
        total += xi;
        for i in 0..3 {
            for j in 0..3 {
                moments[r][(i, j)] += w[i] * w[j];
            }
        }
        prev = [z[0], z[1]];
    }
    let regime_mean = |r: usize| {
        if counts[r] == 0 {
            f64::NAN
        } else {
            sums[r] / counts[r] as f64
        }
    };
    let [mp, mm] = moments;
    let mp = mp.scale(1.0 / counts[0].max(1) as f64);
    let mm = mm.scale(1.0 / counts[1].max(1) as f64);
    let min_eig = |m: &Mat| sym_eig(m).map(|e| e.values[0]);
    Ok(LlnReport {
        design,
        n,
        mean_xi: total / n as f64,
        mean_xi_plus: regime_mean(0),
        mean_xi_minus: regime_mean(1),
        count_plus: counts[0],
        count_minus: counts[1],
        min_eig_plus: min_eig(&mp)?,
        min_eig_minus: min_eig(&mm)?,
        second_moment_plus: mp,
        second_moment_minus: mm,
        mu_xi: MU_XI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limitdist::CritValRow;

    fn fake_table(variant: Variant, tau: f64, crit: f64) -> CritValTable {
        CritValTable::from_rows(
            HYPOTHESES
                .iter()
                .map(|&q0| CritValRow {
                    variant,
                    q0,
                    tau,
                    alpha: 0.1,
                    w0_init: 0.0,
                    crit,
                    accepted: 1000,
                    total: 1000,
                    grid: 100,
                    seed: 0,
                })
                .collect(),
        )
    }

    fn small_config() -> McConfig {
        McConfig {
            sample_sizes: vec![200],
            reps: 20,
            threads: 2,
            ..McConfig::new(fake_table(Variant::Mb, 0.15, 0.5), fake_table(Variant::Sb, 0.0, 0.5))
        }
    }

    #[test]
    fn smoke_single_rep() {
        let cfg = McConfig {
            reps: 1,
            ..small_config()
        };
        let cells = run_table(&cfg).unwrap();
        assert_eq!(cells.len(), 8);
        for c in &cells {
            assert!(c.rejection_rate == 0.0 || c.rejection_rate == 1.0);
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let one = run_table(&McConfig {
            threads: 1,
            ..small_config()
        })
        .unwrap();
        let three = run_table(&McConfig {
            threads: 3,
            ..small_config()
        })
        .unwrap();
        assert_eq!(format_table(&one), format_table(&three));
    }

    #[test]
    fn missing_table_row() {
        let cfg = McConfig {
            tau: 0.2,
            ..small_config()
        };
        assert!(matches!(run_table(&cfg), Err(Error::MissingCriticalValue(_))));
    }

    #[test]
    fn exhausted_retention() {
        let cfg = McConfig {
            retention_threshold: 0.49,
            max_redraws_per_rep: 2,
            reps: 5,
            ..small_config()
        };
        assert!(matches!(run_table(&cfg), Err(Error::RetentionExhausted { .. })));
    }

    #[test]
    fn cell_matches_table() {
        let cfg = small_config();
        let table = run_table(&cfg).unwrap();
        let cell = run_cell(&cfg, DesignKind::Nonlinear, 200, 2, Variant::Mb).unwrap();
        assert!(table.contains(&cell));
    }

    #[test]
    fn lln_linear_design() {
        let report = verify_lln(DesignKind::Linear, 20_000, 3).unwrap();
        assert!((report.mean_xi - MU_XI).abs() < 0.1);
        assert_eq!(report.count_plus + report.count_minus, 20_000);
        assert!(report.min_eig_plus > 0.0 && report.min_eig_minus > 0.0);
    }
}
