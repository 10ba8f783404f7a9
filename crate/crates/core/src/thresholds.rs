//! Closed-form sample-size thresholds and derived ratios.
//!
//! All logarithms are natural and all entropy values are in nats. The
//! formulas, by kind (`H` is the binary entropy function):
//!
//! | kind                      | value                                              |
//! |---------------------------|----------------------------------------------------|
//! | `n_star_sublinear`        | `2 s ln(p/s) / (ln(ds/p) + ln(δ/(2σ²)))`           |
//! | `n_star_linear`           | `2 H(α) p / (ln d + ln(δα/(2σ²)))`                 |
//! | `n_inf_sp_sublinear`      | `2 s ln(p/s) / ln(ds/p)`                           |
//! | `n_inf_sp_linear`         | `2 H(α) p / ln d`                                  |
//! | `n_inf_dense`             | `2 s ln(p/s) / ln s`                               |
//! | `n_alg_dense`             | `2 s ln(p − s)`                                    |
//! | `n_star_sparsified`       | `2 H(α) p / ln(1 + δψ²/((1−ψ)(2−δ(1−ψ))))`         |
//! | `n_inf_sparsified_strong` | `2 (2−δ) H(α) p / (δψ²)`                           |
//!
//! Thresholds are returned as reals; callers round up. Violated asymptotic
//! premises (these are finite-size evaluations of asymptotic statements)
//! are reported as advisory validity flags, never as errors; a non-positive
//! denominator is an infeasible-parameters error naming the offending term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible parameters: {term} <= 0")]
    Infeasible { term: String },
    #[error("missing parameter: {0}")]
    Missing(String),
}

/// Scaling regime a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sublinear,
    Linear,
    Sparsified,
}

/// Shared parameter tuple for thresholds and bounds: dimension, sparsity
/// (absolute `s` or rate `α`), measurement density (absolute `d` or rate
/// `ψ`), noise level, and error tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub p: u64,
    pub s: Option<u64>,
    pub alpha: Option<f64>,
    pub d: Option<u64>,
    pub psi: Option<f64>,
    pub sigma: f64,
    pub delta: f64,
    pub regime: Regime,
}

impl RegimeParams {
    pub fn sublinear(p: u64, s: u64, d: u64, sigma: f64, delta: f64) -> Self {
        Self { p, s: Some(s), alpha: None, d: Some(d), psi: None, sigma, delta, regime: Regime::Sublinear }
    }

    pub fn linear(p: u64, alpha: f64, d: u64, sigma: f64, delta: f64) -> Self {
        Self { p, s: None, alpha: Some(alpha), d: Some(d), psi: None, sigma, delta, regime: Regime::Linear }
    }

    pub fn sparsified(p: u64, alpha: f64, psi: f64, sigma: f64, delta: f64) -> Self {
        Self { p, s: None, alpha: Some(alpha), d: None, psi: Some(psi), sigma, delta, regime: Regime::Sparsified }
    }

    fn s(&self) -> Result<f64, ThresholdError> {
        self.s
            .map(|s| s as f64)
            .or(self.alpha.map(|a| a * self.p as f64))
            .ok_or_else(|| ThresholdError::Missing("s (or alpha)".to_string()))
    }

    fn alpha(&self) -> Result<f64, ThresholdError> {
        self.alpha
            .or(self.s.map(|s| s as f64 / self.p as f64))
            .ok_or_else(|| ThresholdError::Missing("alpha (or s)".to_string()))
    }

    fn d(&self) -> Result<f64, ThresholdError> {
        self.d
            .map(|d| d as f64)
            .or(self.psi.map(|psi| psi * self.p as f64))
            .ok_or_else(|| ThresholdError::Missing("d (or psi)".to_string()))
    }

    fn psi(&self) -> Result<f64, ThresholdError> {
        self.psi
            .or(self.d.map(|d| d as f64 / self.p as f64))
            .ok_or_else(|| ThresholdError::Missing("psi (or d)".to_string()))
    }
}

/// Threshold selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    NStarSublinear,
    NStarLinear,
    NInfSpSublinear,
    NInfSpLinear,
    NInfDense,
    NAlgDense,
    NStarSparsified,
    NInfSparsifiedStrong,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 8] = [
        ThresholdKind::NStarSublinear,
        ThresholdKind::NStarLinear,
        ThresholdKind::NInfSpSublinear,
        ThresholdKind::NInfSpLinear,
        ThresholdKind::NInfDense,
        ThresholdKind::NAlgDense,
        ThresholdKind::NStarSparsified,
        ThresholdKind::NInfSparsifiedStrong,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ThresholdKind::NStarSublinear => "n_star_sublinear",
            ThresholdKind::NStarLinear => "n_star_linear",
            ThresholdKind::NInfSpSublinear => "n_inf_sp_sublinear",
            ThresholdKind::NInfSpLinear => "n_inf_sp_linear",
            ThresholdKind::NInfDense => "n_inf_dense",
            ThresholdKind::NAlgDense => "n_alg_dense",
            ThresholdKind::NStarSparsified => "n_star_sparsified",
            ThresholdKind::NInfSparsifiedStrong => "n_inf_sparsified_strong",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A computed threshold: the value, which formula produced it, the inputs,
/// and any violated asymptotic premises (advisory only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    pub value: f64,
    pub inputs: RegimeParams,
    pub validity: Vec<String>,
}

/// Binary entropy in nats: `H(α) = −α ln α − (1−α) ln(1−α)`.
pub fn entropy(alpha: f64) -> Result<f64, ThresholdError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ThresholdError::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(-alpha * alpha.ln() - (1.0 - alpha) * (1.0 - alpha).ln())
}

/// `ln C(p, s)` via log-gamma, exact to well below 1e-10 relative.
pub fn log_binomial(p: u64, s: u64) -> Result<f64, ThresholdError> {
    if s > p {
        return Err(ThresholdError::Domain(format!("s={s} exceeds p={p}")));
    }
    let lg = |x: f64| libm::lgamma(x);
    Ok(lg(p as f64 + 1.0) - lg(s as f64 + 1.0) - lg((p - s) as f64 + 1.0))
}

fn check_delta_sigma(params: &RegimeParams) -> Result<(), ThresholdError> {
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(ThresholdError::Domain(format!(
            "delta must lie in (0,1), got {}",
            params.delta
        )));
    }
    if !(params.sigma > 0.0) {
        return Err(ThresholdError::Domain(format!("sigma must be > 0, got {}", params.sigma)));
    }
    Ok(())
}

fn positive_denominator(value: f64, term: &str) -> Result<f64, ThresholdError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ThresholdError::Infeasible { term: term.to_string() })
    }
}

/// Evaluates the selected threshold formula at finite parameters.
pub fn threshold(kind: ThresholdKind, params: &RegimeParams) -> Result<ThresholdReport, ThresholdError> {
    let p = params.p as f64;
    if params.p == 0 {
        return Err(ThresholdError::Domain("p must be >= 1".to_string()));
    }
    let mut validity = Vec::new();
    let mut flag = |ok: bool, premise: &str| {
        if !ok {
            validity.push(premise.to_string());
        }
    };

    let value = match kind {
        ThresholdKind::NStarSublinear => {
            check_delta_sigma(params)?;
            let (s, d) = (params.s()?, params.d()?);
            if !(s > 0.0 && s < p) {
                return Err(ThresholdError::Domain(format!("need 0 < s < p, got s={s}, p={p}")));
            }
            let dsp = d * s / p;
            if dsp <= 0.0 {
                return Err(ThresholdError::Domain(format!("need ds/p > 0, got {dsp}")));
            }
            let den = positive_denominator(
                dsp.ln() + (params.delta / (2.0 * params.sigma * params.sigma)).ln(),
                "log(ds/p) + log(delta/(2*sigma^2))",
            )?;
            flag(s / p <= 0.1, "s = o(p): s/p <= 0.1");
            flag(d / p <= 0.1, "d = o(p): d/p <= 0.1");
            flag(dsp >= 10.0, "ds/p -> inf: ds/p >= 10");
            2.0 * s * (p / s).ln() / den
        }
        ThresholdKind::NStarLinear => {
            check_delta_sigma(params)?;
            let (alpha, d) = (params.alpha()?, params.d()?);
            let h = entropy(alpha)?;
            if d <= 0.0 {
                return Err(ThresholdError::Domain(format!("need d > 0, got {d}")));
            }
            let den = positive_denominator(
                d.ln() + (params.delta * alpha / (2.0 * params.sigma * params.sigma)).ln(),
                "log(d) + log(delta*alpha/(2*sigma^2))",
            )?;
            flag(d / p <= 0.1, "d = o(p): d/p <= 0.1");
            flag(d * alpha >= 10.0, "ds/p -> inf: d*alpha >= 10");
            2.0 * h * p / den
        }
        ThresholdKind::NInfSpSublinear => {
            let (s, d) = (params.s()?, params.d()?);
            if !(s > 0.0 && s < p) {
                return Err(ThresholdError::Domain(format!("need 0 < s < p, got s={s}, p={p}")));
            }
            let dsp = d * s / p;
            if dsp <= 0.0 {
                return Err(ThresholdError::Domain(format!("need ds/p > 0, got {dsp}")));
            }
            let den = positive_denominator(dsp.ln(), "log(ds/p)")?;
            flag(s / p <= 0.1, "s = o(p): s/p <= 0.1");
            flag(d / p <= 0.1, "d = o(p): d/p <= 0.1");
            flag(dsp >= 10.0, "ds/p -> inf: ds/p >= 10");
            2.0 * s * (p / s).ln() / den
        }
        ThresholdKind::NInfSpLinear => {
            let (alpha, d) = (params.alpha()?, params.d()?);
            let h = entropy(alpha)?;
            if d <= 0.0 {
                return Err(ThresholdError::Domain(format!("need d > 0, got {d}")));
            }
            let den = positive_denominator(d.ln(), "log(d)")?;
            flag(d / p <= 0.1, "d = o(p): d/p <= 0.1");
            flag(d * alpha >= 10.0, "ds/p -> inf: d*alpha >= 10");
            2.0 * h * p / den
        }
        ThresholdKind::NInfDense => {
            let s = params.s()?;
            if !(s > 0.0 && s < p) {
                return Err(ThresholdError::Domain(format!("need 0 < s < p, got s={s}, p={p}")));
            }
            let den = positive_denominator(s.ln(), "log(s)")?;
            flag(s / p <= 0.1, "s = o(p): s/p <= 0.1");
            2.0 * s * (p / s).ln() / den
        }
        ThresholdKind::NAlgDense => {
            let s = params.s()?;
            if !(s > 0.0 && s < p) {
                return Err(ThresholdError::Domain(format!("need 0 < s < p, got s={s}, p={p}")));
            }
            positive_denominator((p - s).ln(), "log(p - s)")?;
            flag(s / p <= 0.1, "s = o(p): s/p <= 0.1");
            2.0 * s * (p - s).ln()
        }
        ThresholdKind::NStarSparsified => {
            let (alpha, psi) = (params.alpha()?, params.psi()?);
            if !(params.delta > 0.0 && params.delta < 1.0) {
                return Err(ThresholdError::Domain(format!(
                    "delta must lie in (0,1), got {}",
                    params.delta
                )));
            }
            if !(psi > 0.0 && psi < 1.0) {
                return Err(ThresholdError::Domain(format!("psi must lie in (0,1), got {psi}")));
            }
            let h = entropy(alpha)?;
            let delta = params.delta;
            let inner = delta * psi * psi / ((1.0 - psi) * (2.0 - delta * (1.0 - psi)));
            let den = positive_denominator(
                (1.0 + inner).ln(),
                "log(1 + delta*psi^2/((1-psi)(2-delta(1-psi))))",
            )?;
            2.0 * h * p / den
        }
        ThresholdKind::NInfSparsifiedStrong => {
            let (alpha, psi) = (params.alpha()?, params.psi()?);
            if !(params.delta > 0.0 && params.delta < 1.0) {
                return Err(ThresholdError::Domain(format!(
                    "delta must lie in (0,1), got {}",
                    params.delta
                )));
            }
            if !(psi > 0.0 && psi < 1.0) {
                return Err(ThresholdError::Domain(format!("psi must lie in (0,1), got {psi}")));
            }
            let h = entropy(alpha)?;
            flag(psi <= 0.1, "psi -> 0: psi <= 0.1");
            2.0 * (2.0 - params.delta) * h * p / (params.delta * psi * psi)
        }
    };

    Ok(ThresholdReport { kind, value, inputs: params.clone(), validity })
}

/// Price of sparsity `Γ = ln s / ln(ds/p)`; `> 1` whenever `d < p`.
pub fn price_of_sparsity(p: u64, s: u64, d: u64) -> Result<f64, ThresholdError> {
    if s <= 1 {
        return Err(ThresholdError::Domain(format!("need s > 1, got {s}")));
    }
    let dsp = d as f64 * s as f64 / p as f64;
    if dsp <= 1.0 {
        return Err(ThresholdError::Domain(format!("need ds/p > 1, got {dsp}")));
    }
    Ok((s as f64).ln() / dsp.ln())
}

/// Price of sparsity in the power-law regime `s = p^a`, `d = p^b`:
/// `Γ = a / (a + b − 1)`.
pub fn power_law_gamma(a: f64, b: f64) -> Result<f64, ThresholdError> {
    if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
        return Err(ThresholdError::Domain(format!(
            "exponents must lie in (0,1), got a={a}, b={b}"
        )));
    }
    if a + b <= 1.0 {
        return Err(ThresholdError::Domain(format!("need a + b > 1, got a+b = {}", a + b)));
    }
    Ok(a / (a + b - 1.0))
}

/// Extra samples demanded by sparsifying a dense design: the ratio of the
/// strong-sparsification threshold to the dense threshold evaluated at
/// `s = α p`.
pub fn price_of_sparsification(
    p: u64,
    alpha: f64,
    psi: f64,
    delta: f64,
) -> Result<f64, ThresholdError> {
    let strong = threshold(
        ThresholdKind::NInfSparsifiedStrong,
        &RegimeParams::sparsified(p, alpha, psi, 1.0, delta),
    )?
    .value;
    let s = alpha * p as f64;
    if !(s > 1.0) {
        return Err(ThresholdError::Domain(format!("need alpha*p > 1, got {s}")));
    }
    let dense = 2.0 * s * (p as f64 / s).ln() / s.ln();
    Ok(strong / dense)
}

/// Densest admissible sparsification rate for a given sample size:
/// `ψ = sqrt(2 (2−δ) H(α) p / (δ n))`, the exact inversion of the
/// strong-sparsification threshold. Requires `n >= p`.
pub fn sparsification_budget(p: u64, n: f64, alpha: f64, delta: f64) -> Result<f64, ThresholdError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ThresholdError::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    if n < p as f64 {
        return Err(ThresholdError::Domain(format!(
            "sparsification budget requires n >= p, got n={n}, p={p}"
        )));
    }
    let h = entropy(alpha)?;
    Ok((2.0 * (2.0 - delta) * h * p as f64 / (delta * n)).sqrt())
}

/// The quoted necessary sample size for reliable recovery with sparse
/// ensembles: `(ln C(p,s) − 1) / (½ ln(1 + s λ²))` with `λ² = (d/p)/σ²`.
pub fn wang_necessary(p: u64, s: u64, d: u64, sigma: f64) -> Result<f64, ThresholdError> {
    if !(sigma > 0.0) {
        return Err(ThresholdError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let lambda2 = (d as f64 / p as f64) / (sigma * sigma);
    let s_lambda2 = s as f64 * lambda2;
    if s_lambda2 <= 0.0 {
        return Err(ThresholdError::Domain(format!("need s*lambda^2 > 0, got {s_lambda2}")));
    }
    let num = log_binomial(p, s)? - 1.0;
    if num <= 0.0 {
        return Err(ThresholdError::Domain(format!("need log C(p,s) > 1, got {}", num + 1.0)));
    }
    Ok(num / (0.5 * (1.0 + s_lambda2).ln()))
}

/// Sample-size vs. multiplication-cost comparison between a dense design and
/// a sparse design with `d` non-zeros per row, at linear sparsity `s = αp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub n_dense: f64,
    pub n_sparse: f64,
    pub mult_cost_dense: f64,
    pub mult_cost_sparse: f64,
}

/// Evaluates the trade-off: sparse designs need more samples
/// (`n_sparse > n_dense`) but multiply cheaper per sample (`d` vs `p`).
pub fn tradeoff_report(p: u64, d: u64, alpha: f64) -> Result<TradeoffReport, ThresholdError> {
    if d < 2 {
        return Err(ThresholdError::Infeasible { term: "log(d)".to_string() });
    }
    let s = alpha * p as f64;
    if !(s > 1.0 && s < p as f64) {
        return Err(ThresholdError::Domain(format!("need 1 < alpha*p < p, got {s}")));
    }
    let n_dense = 2.0 * s * (p as f64 / s).ln() / s.ln();
    let n_sparse = threshold(
        ThresholdKind::NInfSpLinear,
        &RegimeParams::linear(p, alpha, d, 1.0, 0.5),
    )?
    .value;
    Ok(TradeoffReport {
        n_dense,
        n_sparse,
        mult_cost_dense: n_dense * p as f64,
        mult_cost_sparse: n_sparse * d as f64,
    })
}
