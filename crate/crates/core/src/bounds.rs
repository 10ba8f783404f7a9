//! Numerical evaluation of the large-deviation machinery behind the
//! thresholds: the product-of-Gaussians MGF, the per-sample Chernoff kernel
//! of the sparsified analysis, the exact binomial Chernoff base of the
//! sparse-measurement analysis, the normalized binomial (CLT) statistic, and
//! the `C*(η)` limit objects. Monte Carlo oracles for each closed form live
//! in [`oracles`].
//!
//! Special values travel as tagged values, never as errors: a diverging MGF
//! is `f64::INFINITY` and a degenerate correlation is `None`, so tables
//! built from these evaluators stay rectangular.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod oracles;

pub use oracles::McEstimate;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Estimator(#[from] crate::estimator::EstimatorError),
}

/// `E[e^{N₁N₂}]` for centered jointly Gaussian `(N₁, N₂)` with standard
/// deviations `sigma1`, `sigma2` and correlation `rho`:
///
/// `1 / (σ₁σ₂ sqrt((1/(σ₁σ₂) − ρ)² − 1))` when `1/(σ₁σ₂) − ρ > 1`,
/// `+∞` otherwise.
pub fn gaussian_product_mgf(sigma1: f64, sigma2: f64, rho: f64) -> Result<f64, BoundsError> {
    if !(sigma1 > 0.0) || !(sigma2 > 0.0) {
        return Err(BoundsError::Domain(format!(
            "standard deviations must be > 0, got {sigma1}, {sigma2}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(BoundsError::Domain(format!("correlation must lie in [-1,1], got {rho}")));
    }
    let prod = sigma1 * sigma2;
    let cond = 1.0 / prod - rho;
    if cond > 1.0 {
        Ok(1.0 / (prod * (cond * cond - 1.0).sqrt()))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Bernoulli mask totals over the three index blocks of a candidate support
/// `S` against the truth `S⋆`: `A = S⋆∖S`, `B = S∖S⋆`, `C = S⋆∩S`, with
/// `|A| = |B| = m` and `|C| = s − m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub sum_a: u64,
    pub sum_b: u64,
    pub sum_c: u64,
    pub m: u64,
    pub s: u64,
}

impl BlockCounts {
    pub fn new(sum_a: u64, sum_b: u64, sum_c: u64, m: u64, s: u64) -> Result<Self, BoundsError> {
        if m > s {
            return Err(BoundsError::Domain(format!("m={m} exceeds s={s}")));
        }
        if sum_a > m || sum_b > m {
            return Err(BoundsError::Domain(format!(
                "block sums {sum_a}, {sum_b} exceed block size m={m}"
            )));
        }
        if sum_c > s - m {
            return Err(BoundsError::Domain(format!(
                "block sum {sum_c} exceeds block size s-m={}",
                s - m
            )));
        }
        Ok(Self { sum_a, sum_b, sum_c, m, s })
    }
}

/// The per-sample Chernoff kernel of the sparsified analysis: conditional on
/// the mask totals, the loss-difference MGF factor is `E[e^{UV}]` for
/// jointly Gaussian `(U, V)` with these moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffKernel {
    pub sigma2_u: f64,
    pub sigma2_v: f64,
    pub cov_uv: f64,
    /// `None` when a variance vanishes and the correlation is undefined.
    pub rho: Option<f64>,
    /// `E[e^{UV}]`; `+∞` when the MGF diverges; exactly 1 in the degenerate
    /// case (the exponent is then almost surely 0).
    pub f_value: f64,
}

/// Evaluates the kernel at inverse-temperature `theta` for mask totals
/// `counts`, ambient dimension `p`, density `d`, and noise level `sigma`:
///
/// - `γ(θ) = 2 d² θ σ² / p²`
/// - `σ_U² = θ² (Σ_A B + Σ_B B)`
/// - `σ_V² = 4d²s/p² + ((1+γ)² − 4(d/p)(1+γ)) Σ_A B + (1−γ)² Σ_B B + 4(1 − 2d/p) Σ_C B`
/// - `Cov = θ ((1 + γ − 2d/p) Σ_A B − (1−γ) Σ_B B)`
/// - `f = E[e^{UV}]` via [`gaussian_product_mgf`]
pub fn chernoff_kernel(
    theta: f64,
    counts: &BlockCounts,
    p: u64,
    d: u64,
    sigma: f64,
) -> Result<ChernoffKernel, BoundsError> {
    if !(theta > 0.0) {
        return Err(BoundsError::Domain(format!("theta must be > 0, got {theta}")));
    }
    if !(sigma > 0.0) {
        return Err(BoundsError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    if p == 0 || d > p {
        return Err(BoundsError::Domain(format!("need 1 <= d <= p, got d={d}, p={p}")));
    }
    let pf = p as f64;
    let df = d as f64;
    let q = df / pf;
    let gamma = 2.0 * df * df * theta * sigma * sigma / (pf * pf);
    let (sa, sb, sc) = (counts.sum_a as f64, counts.sum_b as f64, counts.sum_c as f64);

    let sigma2_u = theta * theta * (sa + sb);
    let sigma2_v = (4.0 * df * df * counts.s as f64 / (pf * pf)
        + ((1.0 + gamma) * (1.0 + gamma) - 4.0 * q * (1.0 + gamma)) * sa
        + (1.0 - gamma) * (1.0 - gamma) * sb
        + 4.0 * (1.0 - 2.0 * q) * sc)
        .max(0.0);
    let cov_uv = theta * ((1.0 + gamma - 2.0 * q) * sa - (1.0 - gamma) * sb);

    if sigma2_u == 0.0 || sigma2_v == 0.0 {
        // U or V is almost surely 0, so E[e^{UV}] = E[e^0] = 1.
        return Ok(ChernoffKernel { sigma2_u, sigma2_v, cov_uv, rho: None, f_value: 1.0 });
    }
    let rho = (cov_uv / (sigma2_u.sqrt() * sigma2_v.sqrt())).clamp(-1.0, 1.0);
    let f_value = gaussian_product_mgf(sigma2_u.sqrt(), sigma2_v.sqrt(), rho)?;
    Ok(ChernoffKernel { sigma2_u, sigma2_v, cov_uv, rho: Some(rho), f_value })
}

/// Exact binomial expectation of the χ²(1)-MGF factor:
/// `Σ_k C(m,k) q^k (1−q)^{m−k} · 2σ/sqrt(4σ² + k)`.
///
/// This is the pre-asymptotic Chernoff base for the sparse-measurement
/// analysis: 1 at `q = 0`, strictly decreasing in both `m` and `q`.
pub fn chernoff_base_exact(m: u64, q: f64, sigma: f64) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(BoundsError::Domain(format!("q must lie in [0,1], got {q}")));
    }
    if !(sigma > 0.0) {
        return Err(BoundsError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let four_s2 = 4.0 * sigma * sigma;
    let two_s = 2.0 * sigma;
    if m == 0 || q == 0.0 {
        return Ok(1.0);
    }
    if q == 1.0 {
        return Ok(two_s / (four_s2 + m as f64).sqrt());
    }
    // Log-space binomial pmf keeps the sum stable for large m.
    let (lq, l1q) = (q.ln(), (1.0 - q).ln());
    let lg = |x: f64| libm::lgamma(x);
    let lgm = lg(m as f64 + 1.0);
    let mut acc = 0.0;
    for k in 0..=m {
        let kf = k as f64;
        let ln_pmf =
            lgm - lg(kf + 1.0) - lg((m - k) as f64 + 1.0) + kf * lq + (m - k) as f64 * l1q;
        acc += ln_pmf.exp() * two_s / (four_s2 + kf).sqrt();
    }
    Ok(acc)
}

/// Bound flavor for [`proposition1_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop1Mode {
    /// `(2σ²p/(δds))^{n/2}`, the asymptotic base with the `e^{o(n)}`
    /// factor dropped.
    Asymptotic,
    /// `chernoff_base_exact(2⌈δs⌉, d/p, σ)^n`, valid at any finite size.
    ExactBase,
}

/// Upper bound on `P(Δ ≤ 0)` for a candidate support at symmetric
/// difference `2⌈δs⌉` from the truth. Values above 1 are returned as-is
/// (the bound is then vacuous).
pub fn proposition1_bound(
    n: u64,
    p: u64,
    s: u64,
    d: u64,
    delta: f64,
    sigma: f64,
    mode: Prop1Mode,
) -> Result<f64, BoundsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BoundsError::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(sigma > 0.0) {
        return Err(BoundsError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    if p == 0 || s == 0 || d == 0 || d > p || s > p {
        return Err(BoundsError::Domain(format!(
            "need 1 <= s, d <= p, got p={p}, s={s}, d={d}"
        )));
    }
    match mode {
        Prop1Mode::Asymptotic => {
            let base = 2.0 * sigma * sigma * p as f64 / (delta * d as f64 * s as f64);
            Ok(base.powf(n as f64 / 2.0))
        }
        Prop1Mode::ExactBase => {
            let m = 2 * (delta * s as f64).ceil() as u64;
            let base = chernoff_base_exact(m, d as f64 / p as f64, sigma)?;
            Ok(base.powi(n as i32))
        }
    }
}

/// Normalized binomial statistic `(count − mq) / sqrt(mq)` for
/// `count ~ Bin(m, q)`; asymptotically standard normal as `mq → ∞, q → 0`.
pub fn clt_statistic(count: u64, m: u64, q: f64) -> Result<f64, BoundsError> {
    let mq = m as f64 * q;
    if !(mq > 0.0) {
        return Err(BoundsError::Domain(format!("need m*q > 0, got m={m}, q={q}")));
    }
    Ok((count as f64 - mq) / mq.sqrt())
}

/// `C*(η) = ψ / ((1−ψ)(2 − η(1−ψ)))`, the sparsified-analysis constant.
pub fn c_star(eta: f64, psi: f64) -> Result<f64, BoundsError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(BoundsError::Domain(format!("eta must lie in (0,1], got {eta}")));
    }
    if !(psi > 0.0 && psi < 1.0) {
        return Err(BoundsError::Domain(format!("psi must lie in (0,1), got {psi}")));
    }
    Ok(psi / ((1.0 - psi) * (2.0 - eta * (1.0 - psi))))
}

/// The inverse-temperature schedule `ξ(p) = C*(η) / (2αψp)` at which the
/// kernel expectation is taken in the sparsified analysis.
pub fn xi(p: u64, eta: f64, alpha: f64, psi: f64) -> Result<f64, BoundsError> {
    if p == 0 {
        return Err(BoundsError::Domain("p must be >= 1".to_string()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundsError::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(c_star(eta, psi)? / (2.0 * alpha * psi * p as f64))
}

/// Limit of `H_p = f(ξ(p), B)` as `p → ∞`: `sqrt(1 / (1 + ηψC*(η)))`.
pub fn h_limit(eta: f64, psi: f64) -> Result<f64, BoundsError> {
    Ok((1.0 / (1.0 + eta * psi * c_star(eta, psi)?)).sqrt())
}

/// Finite-`p` plug-in for the limit: the kernel at `θ = ξ(p)` with every
/// block sum replaced by its expectation (`ηαψp`, `ηαψp`, `(1−η)αψp`,
/// rounded to nearest integer). Noise enters only through `γ(θ) = O(1/p)`;
/// it is pinned to `σ = 1`. May be `+∞` at small `p` — the MGF condition
/// only holds for `p` large enough.
pub fn h_p_plugin(p: u64, eta: f64, alpha: f64, psi: f64) -> Result<f64, BoundsError> {
    let s = (alpha * p as f64).round() as u64;
    let d = (psi * p as f64).round() as u64;
    let m = (eta * alpha * p as f64).ceil() as u64;
    if m > s {
        return Err(BoundsError::Domain(format!("ceil(eta*alpha*p) = {m} exceeds s = {s}")));
    }
    let ea = (eta * alpha * psi * p as f64).round() as u64;
    let ec = ((1.0 - eta) * alpha * psi * p as f64).round() as u64;
    let counts = BlockCounts::new(ea.min(m), ea.min(m), ec.min(s - m), m, s)?;
    let theta = xi(p, eta, alpha, psi)?;
    Ok(chernoff_kernel(theta, &counts, p, d, 1.0)?.f_value)
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the standard normal.
pub fn ks_distance_std_normal(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = std_normal_cdf(x);
        d = d.max((cdf - i as f64 / n).abs());
        d = d.max((cdf - (i as f64 + 1.0) / n).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    #[test]
    fn product_mgf_closed_form_values() {
        let inv_rt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!(rel_close(
            gaussian_product_mgf(inv_rt2, inv_rt2, 0.0).unwrap(),
            1.1547005383792515,
            1e-12
        ));
        assert_eq!(gaussian_product_mgf(1.0, 1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(rel_close(
            gaussian_product_mgf(inv_rt2, inv_rt2, -0.5).unwrap(),
            0.8728715609439696,
            1e-12
        ));
        assert!(gaussian_product_mgf(1.0, 1.0, 1.5).is_err());
        assert!(gaussian_product_mgf(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn product_mgf_symmetric_and_monotone_in_rho() {
        let mut prev = 0.0;
        for i in 0..10 {
            let rho = -0.9 + 0.15 * i as f64;
            let v = gaussian_product_mgf(0.4, 0.6, rho).unwrap();
            let w = gaussian_product_mgf(0.6, 0.4, rho).unwrap();
            assert_eq!(v, w);
            assert!(v > prev, "not increasing at rho={rho}");
            prev = v;
        }
        // Divergence as the condition boundary is approached.
        let near = gaussian_product_mgf(1.0, 1.0, -1e-9).unwrap();
        assert!(near > 1e4);
    }

    #[test]
    fn kernel_degenerate_counts_give_unit_mgf() {
        let counts = BlockCounts::new(0, 0, 0, 5, 40).unwrap();
        let k = chernoff_kernel(1e-3, &counts, 200, 20, 0.5).unwrap();
        assert_eq!(k.sigma2_u, 0.0);
        let expect = 4.0 * 20.0f64 * 20.0 * 40.0 / (200.0 * 200.0);
        assert_eq!(k.sigma2_v, expect);
        assert_eq!(k.cov_uv, 0.0);
        assert_eq!(k.rho, None);
        assert_eq!(k.f_value, 1.0);
    }

    #[test]
    fn kernel_composes_with_product_mgf() {
        let counts = BlockCounts::new(2, 2, 2, 20, 40).unwrap();
        let k = chernoff_kernel(1e-3, &counts, 200, 20, 0.5).unwrap();
        let f = gaussian_product_mgf(k.sigma2_u.sqrt(), k.sigma2_v.sqrt(), k.rho.unwrap()).unwrap();
        assert_eq!(k.f_value, f);
    }

    #[test]
    fn kernel_satisfies_cauchy_schwarz_on_random_counts() {
        let mut rng = crate::rng::stream(424242, &[], "kernel-cs");
        for _ in 0..10_000 {
            let s = rng.gen_range(2u64..60);
            let m = rng.gen_range(1u64..=s);
            let sum_a = rng.gen_range(0..=m);
            let sum_b = rng.gen_range(0..=m);
            let sum_c = rng.gen_range(0..=(s - m));
            let p = rng.gen_range(50u64..500);
            let d = rng.gen_range(1..=p);
            let theta = 10f64.powf(rng.gen_range(-6.0..1.0));
            let sigma = rng.gen_range(0.1..2.0);
            let counts = BlockCounts::new(sum_a, sum_b, sum_c, m, s).unwrap();
            let k = chernoff_kernel(theta, &counts, p, d, sigma).unwrap();
            assert!(
                k.cov_uv * k.cov_uv <= k.sigma2_u * k.sigma2_v * (1.0 + 1e-12),
                "Cauchy-Schwarz violated: {k:?}"
            );
            if let Some(rho) = k.rho {
                assert!((-1.0..=1.0).contains(&rho));
            }
        }
    }

    #[test]
    fn block_counts_validate_bounds() {
        assert!(BlockCounts::new(3, 0, 0, 2, 10).is_err());
        assert!(BlockCounts::new(0, 0, 9, 2, 10).is_err());
        assert!(BlockCounts::new(0, 0, 0, 11, 10).is_err());
    }

    #[test]
    fn chernoff_base_exact_values() {
        assert_eq!(chernoff_base_exact(0, 0.5, 0.5).unwrap(), 1.0);
        assert_eq!(chernoff_base_exact(10, 0.0, 0.5).unwrap(), 1.0);
        assert!(rel_close(
            chernoff_base_exact(2, 0.5, 0.5).unwrap(),
            0.7478909578906802,
            1e-12
        ));
        assert!(rel_close(
            chernoff_base_exact(6, 0.5, 0.5).unwrap(),
            0.5224773886446163,
            1e-12
        ));
    }

    #[test]
    fn chernoff_base_exact_is_strictly_decreasing() {
        for qi in 1..10 {
            let q = qi as f64 / 10.0;
            let mut prev = 1.0;
            for m in 1..=50 {
                let v = chernoff_base_exact(m, q, 0.5).unwrap();
                assert!(v < prev, "not decreasing in m at q={q}, m={m}");
                prev = v;
            }
        }
        for m in [1u64, 5, 20, 50] {
            let mut prev = 1.0;
            for qi in 1..10 {
                let v = chernoff_base_exact(m, qi as f64 / 10.0, 0.5).unwrap();
                assert!(v < prev, "not decreasing in q at m={m}");
                prev = v;
            }
        }
    }

    #[test]
    fn proposition1_bound_edges() {
        let b = proposition1_bound(0, 60, 6, 30, 0.5, 0.5, Prop1Mode::ExactBase).unwrap();
        assert_eq!(b, 1.0);
        // 2 sigma^2 p = delta d s -> base exactly 1 for all n.
        // p=60, d=30, s=6, delta=0.5 -> delta*d*s = 90; 2 sigma^2 p = 90
        // at sigma^2 = 0.75.
        let sigma = 0.75f64.sqrt();
        for n in [1, 5, 17] {
            let b = proposition1_bound(n, 60, 6, 30, 0.5, sigma, Prop1Mode::Asymptotic).unwrap();
            assert!(rel_close(b, 1.0, 1e-12));
        }
        // Vacuous bounds above one are returned as-is.
        let b = proposition1_bound(2, 1000, 2, 2, 0.1, 1.0, Prop1Mode::Asymptotic).unwrap();
        assert!(b > 1.0);
    }

    #[test]
    fn clt_statistic_centering_and_domain() {
        assert_eq!(clt_statistic(100, 2000, 0.05).unwrap(), 0.0);
        assert!(clt_statistic(0, 0, 0.5).is_err());
        assert!(clt_statistic(0, 10, 0.0).is_err());
        assert!(rel_close(clt_statistic(110, 2000, 0.05).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn c_star_and_limit_values() {
        assert!(rel_close(c_star(1.0, 0.5).unwrap(), 2.0 / 3.0, 1e-14));
        assert!(rel_close(c_star(0.5, 0.5).unwrap(), 0.5714285714285714, 1e-14));
        assert!(rel_close(h_limit(0.5, 0.5).unwrap(), 0.9354143466934853, 1e-13));
        // eta -> 0+: the limit tends to 1.
        assert!((h_limit(1e-9, 0.5).unwrap() - 1.0).abs() < 1e-9);
        assert!(c_star(0.0, 0.5).is_err());
        assert!(c_star(0.5, 1.0).is_err());
    }

    #[test]
    fn h_p_plugin_approaches_limit() {
        let limit = h_limit(0.5, 0.5).unwrap();
        let mut prev_err = f64::INFINITY;
        for k in 3..=6 {
            let p = 10u64.pow(k);
            let v = h_p_plugin(p, 0.5, 0.2, 0.5).unwrap();
            let err = (v - limit).abs() / limit;
            assert!(err < prev_err, "error not decreasing at p={p}");
            prev_err = err;
        }
        assert!(prev_err < 0.01);
    }

    #[test]
    fn ks_distance_sanity() {
        // Exact standard-normal quantiles at midpoints give a small KS
        // distance; a shifted sample gives a large one.
        let n = 1000;
        let good: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                // Inverse CDF by bisection; fine for a test.
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if std_normal_cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        assert!(ks_distance_std_normal(&good) < 0.01);
        let shifted: Vec<f64> = good.iter().map(|x| x + 1.0).collect();
        assert!(ks_distance_std_normal(&shifted) > 0.3);
    }
}
