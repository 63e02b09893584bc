//! Regime-restricted kernel long-run variances and the standardized
//! initial value `𝒲̂₀`.
//!
//! Input series are `y₀, y₁, ..., yₙ`; differences run over `t = 1..n`.
//! The lag-`ℓ` autocovariance of regime `±` is
//! `γ̂ℓ± = (Σₜ 𝟙±(yₜ))⁻¹ Σₜ Δyₜ Δyₜ₋ℓ 𝟙±(yₜ)`, the indicator applied at `t`
//! only, and `ω̂± = (Σ_{|ℓ|≤L} K(ℓ/L) γ̂|ℓ|±)^{1/2}`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Bartlett,
}

impl Kernel {
    pub fn weight(self, x: f64) -> f64 {
        match self {
            Kernel::Bartlett => (1.0 - x.abs()).max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Bartlett => "bartlett",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bartlett" => Ok(Kernel::Bartlett),
            other => Err(Error::InvalidConfig(format!("unknown kernel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagRule {
    /// `max(1, floor(4(n/100)^{2/9}))`.
    #[default]
    Auto,
    Fixed(usize),
}

impl LagRule {
    pub fn lags(self, n: usize) -> usize {
        match self {
            LagRule::Auto => ((4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize).max(1),
            LagRule::Fixed(l) => l.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrvEstimate {
    /// `None` when the regime is empty.
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
    pub lags_used: usize,
    pub kernel: Kernel,
    /// Set when a negative kernel sum was clamped to zero.
    pub clamped: bool,
}

impl LrvEstimate {
    pub fn omega(&self, sign: i8) -> Option<f64> {
        if sign >= 0 {
            self.omega_plus
        } else {
            self.omega_minus
        }
    }
}

/// Estimates `ω̂±` from `y₀..yₙ`. Fails with `EmptyRegime` only when both
/// regimes are empty, which cannot happen for `n ≥ 1`; a single empty regime
/// is reported as `None`.
pub fn lrv_estimate(y: &[f64], lag_rule: LagRule, kernel: Kernel) -> Result<LrvEstimate> {
    let n = y.len().saturating_sub(1);
    let lags = lag_rule.lags(n);
    if n < 2 * lags + 2 {
        return Err(Error::TooFewObservations(format!(
            "n = {n} differences, need at least {} for {lags} lags",
            2 * lags + 2
        )));
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut clamped = false;
    let mut omega = |plus: bool| -> Option<f64> {
        // dy[t-1] is Δyₜ; the regime of period t is decided by yₜ = y[t].
        let in_regime = |t: usize| (y[t] >= 0.0) == plus;
        let count = (1..=n).filter(|&t| in_regime(t)).count();
        if count == 0 {
            return None;
        }
        let gamma = |l: usize| -> f64 {
            (l + 1..=n)
                .filter(|&t| in_regime(t))
                .map(|t| dy[t - 1] * dy[t - 1 - l])
                .sum::<f64>()
                / count as f64
        };
        let mut total = gamma(0);
        for l in 1..=lags {
            let w = kernel.weight(l as f64 / lags as f64);
            if w != 0.0 {
                total += 2.0 * w * gamma(l);
            }
        }
        if total < 0.0 {
            clamped = true;
            total = 0.0;
        }
        Some(total.sqrt())
    };
    let omega_plus = omega(true);
    let omega_minus = omega(false);
    if omega_plus.is_none() && omega_minus.is_none() {
        return Err(Error::EmptyRegime("+/-"));
    }
    Ok(LrvEstimate {
        omega_plus,
        omega_minus,
        lags_used: lags,
        kernel,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W0Estimate {
    pub value: f64,
    /// `1` or `−1`; `0` when `y₀ = 0`.
    pub regime_used: i8,
}

/// `𝒲̂₀ = n^{−1/2} y₀ / ω̂±`, with the sign of `y₀` choosing the regime.
pub fn estimate_w0(y0: f64, n: usize, est: &LrvEstimate) -> Result<W0Estimate> {
    if y0 == 0.0 {
        return Ok(W0Estimate {
            value: 0.0,
            regime_used: 0,
        });
    }
    let (sign, name) = if y0 > 0.0 { (1, "+") } else { (-1, "-") };
    let omega = est.omega(sign).ok_or(Error::EmptyRegime(name))?;
    if omega == 0.0 {
        return Err(Error::ZeroLrv(name));
    }
    Ok(W0Estimate {
        value: y0 / (n as f64).sqrt() / omega,
        regime_used: sign,
    })
}

/// Estimates `𝒲̂₀` from a series `y₀..yₙ`.
pub fn estimate_w0_from_series(y: &[f64], lag_rule: LagRule, kernel: Kernel) -> Result<W0Estimate> {
    let y0 = *y
        .first()
        .ok_or_else(|| Error::TooFewObservations("empty series".into()))?;
    if y0 == 0.0 {
        return estimate_w0(0.0, y.len().saturating_sub(1), &LrvEstimate {
            omega_plus: None,
            omega_minus: None,
            lags_used: lag_rule.lags(y.len().saturating_sub(1)),
            kernel,
            clamped: false,
        });
    }
    let est = lrv_estimate(y, lag_rule, kernel)?;
    estimate_w0(y0, y.len() - 1, &est)
}
