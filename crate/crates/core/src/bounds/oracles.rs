//! Monte Carlo oracles for the closed forms in [`bounds`](crate::bounds).
//!
//! Every oracle derives one random stream per fixed-size chunk of trials and
//! combines chunk sums in index order, so estimates are bit-identical for
//! any worker count. Diverging draws (`+∞`) are excluded from the running
//! mean and reported as a fraction; an estimate with more than 1% infinite
//! draws is flagged unreliable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chernoff_kernel, BlockCounts, BoundsError};
use crate::estimator::delta_statistic;
use crate::model::{observe, sample_design, EnsembleKind, SupportSet};
use crate::rng;

const CHUNK: u64 = 1024;

/// A Monte Carlo mean with its standard error and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Fraction of draws that evaluated to `+∞` and were excluded.
    pub infinite_fraction: f64,
    pub trials: u64,
    /// Set when the infinite fraction exceeds 1%.
    pub unreliable: bool,
}

#[derive(Default, Clone, Copy)]
struct ChunkSums {
    finite: u64,
    infinite: u64,
    sum: f64,
    sumsq: f64,
}

impl ChunkSums {
    fn push(&mut self, x: f64) {
        if x.is_finite() {
            self.finite += 1;
            self.sum += x;
            self.sumsq += x * x;
        } else {
            self.infinite += 1;
        }
    }

    fn combine(self, other: ChunkSums) -> ChunkSums {
        ChunkSums {
            finite: self.finite + other.finite,
            infinite: self.infinite + other.infinite,
            sum: self.sum + other.sum,
            sumsq: self.sumsq + other.sumsq,
        }
    }

    fn estimate(self, trials: u64) -> McEstimate {
        let n = self.finite as f64;
        let mean = if self.finite > 0 { self.sum / n } else { f64::NAN };
        let var = (self.sumsq / n - mean * mean).max(0.0);
        let infinite_fraction = self.infinite as f64 / trials as f64;
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
            infinite_fraction,
            trials,
            unreliable: infinite_fraction > 0.01,
        }
    }
}

/// Runs `trials` independent draws split over fixed chunks; deterministic
/// for any worker count.
fn chunked_mc<F>(trials: u64, seed: u64, tag: &str, per_trial: F) -> ChunkSums
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng::stream(seed, &[c], tag);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut acc = ChunkSums::default();
            for _ in 0..count {
                acc.push(per_trial(&mut stream));
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ChunkSums::default(), ChunkSums::combine)
}

/// Monte Carlo mean of `e^{N₁N₂}` over correlated Gaussian draws; the
/// sampled counterpart of [`gaussian_product_mgf`](super::gaussian_product_mgf).
pub fn mc_gaussian_product_mgf(
    sigma1: f64,
    sigma2: f64,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, BoundsError> {
    if !(sigma1 > 0.0) || !(sigma2 > 0.0) {
        return Err(BoundsError::Domain(format!(
            "standard deviations must be > 0, got {sigma1}, {sigma2}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(BoundsError::Domain(format!("correlation must lie in [-1,1], got {rho}")));
    }
    let tail = (1.0 - rho * rho).sqrt();
    let sums = chunked_mc(trials, seed, "mc-product-mgf", |rng| {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let n1 = sigma1 * g1;
        let n2 = sigma2 * (rho * g1 + tail * g2);
        (n1 * n2).exp()
    });
    Ok(sums.estimate(trials))
}

/// Monte Carlo estimate of the conditional MGF `E_X[e^{UV} | B]` for fixed
/// block totals, built directly from the `U, V` linear forms rather than
/// the closed-form kernel; the independent oracle for
/// [`chernoff_kernel`](super::chernoff_kernel).
pub fn mc_conditional_mgf(
    theta: f64,
    counts: &BlockCounts,
    p: u64,
    d: u64,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, BoundsError> {
    if !(theta > 0.0) || !(sigma > 0.0) || p == 0 || d > p {
        return Err(BoundsError::Domain(format!(
            "need theta > 0, sigma > 0, 1 <= d <= p; got theta={theta}, sigma={sigma}, d={d}, p={p}"
        )));
    }
    let q = d as f64 / p as f64;
    let gamma = 2.0 * (d as f64) * (d as f64) * theta * sigma * sigma / (p as f64 * p as f64);
    let a_kept = 1.0 + gamma - 2.0 * q;
    let b_kept = 1.0 - gamma;
    let c_kept = 2.0 * (1.0 - q);
    let unkept = -2.0 * q;
    let (sa, sb, sc) = (counts.sum_a, counts.sum_b, counts.sum_c);
    let (ua, uc) = (counts.m - sa, counts.s - counts.m - sc);
    let ub_coef = theta;

    let sums = chunked_mc(trials, seed, "mc-conditional-mgf", |rng| {
        let mut u = 0.0;
        let mut v = 0.0;
        for _ in 0..sa {
            let x: f64 = rng.sample(StandardNormal);
            u += ub_coef * x;
            v += a_kept * x;
        }
        for _ in 0..ua {
            let x: f64 = rng.sample(StandardNormal);
            v += unkept * x;
        }
        for _ in 0..sb {
            let x: f64 = rng.sample(StandardNormal);
            u -= ub_coef * x;
            v += b_kept * x;
        }
        for _ in 0..sc {
            let x: f64 = rng.sample(StandardNormal);
            v += c_kept * x;
        }
        for _ in 0..uc {
            let x: f64 = rng.sample(StandardNormal);
            v += unkept * x;
        }
        (u * v).exp()
    });
    Ok(sums.estimate(trials))
}

/// Direct Monte Carlo of `E[e^{−θΔᵢ}]` for the sparsified model: samples the
/// masks, the Gaussian entries of one measurement row, and the noise, and
/// evaluates the per-sample loss difference for a candidate support at block
/// distance `m` from the truth.
pub fn mc_mgf_minus_delta_direct(
    theta: f64,
    p: u64,
    s: u64,
    d: u64,
    m: u64,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, BoundsError> {
    if m > s || s > p || d > p || p == 0 {
        return Err(BoundsError::Domain(format!(
            "need m <= s <= p and d <= p; got m={m}, s={s}, d={d}, p={p}"
        )));
    }
    if !(theta > 0.0) || !(sigma > 0.0) {
        return Err(BoundsError::Domain(format!(
            "need theta > 0 and sigma > 0; got theta={theta}, sigma={sigma}"
        )));
    }
    let q = d as f64 / p as f64;
    let mask = rand::distributions::Bernoulli::new(q)
        .map_err(|_| BoundsError::Domain(format!("invalid mask probability {q}")))?;
    let c_len = s - m;

    let sums = chunked_mc(trials, seed, "mc-mgf-delta-direct", |rng| {
        let mut masked_star = 0.0; // Σ_{j∈S⋆} X̃_ij over A ∪ C
        let mut masked_cand = 0.0; // Σ_{j∈S} X̃_ij over B ∪ C
        let mut raw_star = 0.0; // Σ_{j∈S⋆} X_ij
        for _ in 0..m {
            let keep = rng.sample(mask);
            let x: f64 = rng.sample(StandardNormal);
            raw_star += x;
            if keep {
                masked_star += x;
            }
        }
        for _ in 0..m {
            let keep = rng.sample(mask);
            let x: f64 = rng.sample(StandardNormal);
            if keep {
                masked_cand += x;
            }
        }
        for _ in 0..c_len {
            let keep = rng.sample(mask);
            let x: f64 = rng.sample(StandardNormal);
            raw_star += x;
            if keep {
                masked_star += x;
                masked_cand += x;
            }
        }
        let z: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
        let delta = masked_cand * masked_cand - masked_star * masked_star
            + 2.0 * q * (raw_star + z) * (masked_star - masked_cand);
        (-theta * delta).exp()
    });
    Ok(sums.estimate(trials))
}

/// Monte Carlo of `M_{−Δᵢ}(θ) = E_B[f(θ, B)]`: samples the block totals
/// binomially and averages the closed-form kernel, excluding `+∞` draws
/// (reported as a fraction; the expectation is only finite for suitable θ).
pub fn mgf_minus_delta_mc(
    theta: f64,
    p: u64,
    s: u64,
    d: u64,
    m: u64,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, BoundsError> {
    if trials < 10_000 {
        return Err(BoundsError::Domain(format!("need trials >= 10^4, got {trials}")));
    }
    if m > s || s > p || d > p || p == 0 {
        return Err(BoundsError::Domain(format!(
            "need m <= s <= p and d <= p; got m={m}, s={s}, d={d}, p={p}"
        )));
    }
    if !(theta > 0.0) || !(sigma > 0.0) {
        return Err(BoundsError::Domain(format!(
            "need theta > 0 and sigma > 0; got theta={theta}, sigma={sigma}"
        )));
    }
    let q = d as f64 / p as f64;
    let bin_m = Binomial::new(m, q)
        .map_err(|e| BoundsError::Domain(format!("invalid binomial parameters: {e}")))?;
    let bin_c = Binomial::new(s - m, q)
        .map_err(|e| BoundsError::Domain(format!("invalid binomial parameters: {e}")))?;

    let sums = chunked_mc(trials, seed, "mgf-minus-delta", |rng| {
        let sum_a = rng.sample(bin_m);
        let sum_b = rng.sample(bin_m);
        let sum_c = rng.sample(bin_c);
        let counts = BlockCounts { sum_a, sum_b, sum_c, m, s };
        chernoff_kernel(theta, &counts, p, d, sigma)
            .expect("parameters validated")
            .f_value
    });
    Ok(sums.estimate(trials))
}

/// One tail-expectation estimate from [`ui_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiProbeRow {
    pub p: u64,
    pub t: f64,
    /// Estimate of `E[H_p 1{H_p > t}]` over the finite draws.
    pub estimate: f64,
    pub stderr: f64,
    pub infinite_fraction: f64,
    pub trials: u64,
}

/// Tail-expectation probe for the uniform-integrability of `H_p = f(ξ(p), B)`:
/// estimates `E[H_p 1{H_p > T}]` over a grid of dimensions and truncation
/// levels. Purely exploratory — evidence, not a pass/fail gate.
pub fn ui_probe(
    p_grid: &[u64],
    t_grid: &[f64],
    eta: f64,
    alpha: f64,
    psi: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<UiProbeRow>, BoundsError> {
    if trials < 1000 {
        return Err(BoundsError::Domain(format!("need trials >= 10^3, got {trials}")));
    }
    if !(eta > 0.0 && eta <= 1.0) || !(alpha > 0.0 && alpha < 1.0) || !(psi > 0.0 && psi < 1.0) {
        return Err(BoundsError::Domain(format!(
            "need eta in (0,1], alpha and psi in (0,1); got {eta}, {alpha}, {psi}"
        )));
    }
    let mut rows = Vec::with_capacity(p_grid.len() * t_grid.len());
    for &p in p_grid {
        let s = (alpha * p as f64).round() as u64;
        let d = (psi * p as f64).round() as u64;
        let m = (eta * alpha * p as f64).ceil() as u64;
        if m > s || s == 0 {
            return Err(BoundsError::Domain(format!(
                "degenerate blocks at p={p}: m={m}, s={s}"
            )));
        }
        let theta = super::xi(p, eta, alpha, psi)?;
        let bin_m = Binomial::new(m, psi)
            .map_err(|e| BoundsError::Domain(format!("invalid binomial parameters: {e}")))?;
        let bin_c = Binomial::new(s - m, psi)
            .map_err(|e| BoundsError::Domain(format!("invalid binomial parameters: {e}")))?;

        let chunks = trials.div_ceil(CHUNK);
        let parts: Vec<(u64, u64, Vec<(f64, f64)>)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut stream = rng::stream(seed, &[p, c], "ui-probe");
                let count = CHUNK.min(trials - c * CHUNK);
                let mut finite = 0u64;
                let mut infinite = 0u64;
                let mut per_t = vec![(0.0f64, 0.0f64); t_grid.len()];
                for _ in 0..count {
                    let counts = BlockCounts {
                        sum_a: stream.sample(bin_m),
                        sum_b: stream.sample(bin_m),
                        sum_c: stream.sample(bin_c),
                        m,
                        s,
                    };
                    let h = chernoff_kernel(theta, &counts, p, d, 1.0)
                        .expect("parameters validated")
                        .f_value;
                    if h.is_finite() {
                        finite += 1;
                        for (ti, &t) in t_grid.iter().enumerate() {
                            if h > t {
                                per_t[ti].0 += h;
                                per_t[ti].1 += h * h;
                            }
                        }
                    } else {
                        infinite += 1;
                    }
                }
                (finite, infinite, per_t)
            })
            .collect();

        let mut finite = 0u64;
        let mut infinite = 0u64;
        let mut per_t = vec![(0.0f64, 0.0f64); t_grid.len()];
        for (f, i, pt) in parts {
            finite += f;
            infinite += i;
            for (slot, v) in per_t.iter_mut().zip(pt) {
                slot.0 += v.0;
                slot.1 += v.1;
            }
        }
        for (ti, &t) in t_grid.iter().enumerate() {
            let n = finite as f64;
            let mean = per_t[ti].0 / n;
            let var = (per_t[ti].1 / n - mean * mean).max(0.0);
            rows.push(UiProbeRow {
                p,
                t,
                estimate: mean,
                stderr: (var / n).sqrt(),
                infinite_fraction: infinite as f64 / trials as f64,
                trials,
            });
        }
    }
    Ok(rows)
}

/// Empirical `P(Δ ≤ 0)` for the sparse-measurement model via the full
/// pipeline: draws a sparse design and noisy observations, then evaluates
/// the loss-difference statistic for a candidate support at symmetric
/// difference `2⌈δs⌉` from the planted one.
#[allow(clippy::too_many_arguments)]
pub fn mc_delta_nonpositive_rate(
    p: usize,
    s: usize,
    d: usize,
    delta: f64,
    sigma: f64,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, BoundsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BoundsError::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let m = (delta * s as f64).ceil() as usize;
    if s + m > p {
        return Err(BoundsError::Domain(format!(
            "need s + ceil(delta s) <= p to place the candidate, got {} > {p}",
            s + m
        )));
    }
    let s_star = SupportSet::new(p, (0..s as u32).collect())?;
    let s_cand = SupportSet::new(p, (m as u32..(s + m) as u32).collect())?;

    let sums = chunked_mc(trials, seed, "delta-nonpositive", |rng| {
        let design_seed: u64 = rng.gen();
        let noise_seed: u64 = rng.gen();
        let design = sample_design(n, p, EnsembleKind::Sparse, d, design_seed)
            .expect("parameters validated");
        let y = observe(&design, &s_star, sigma, noise_seed).expect("dimensions validated");
        let dv = delta_statistic(&design, &y, &s_cand, &s_star).expect("dimensions validated");
        (dv <= 0.0) as u64 as f64
    });
    Ok(sums.estimate(trials))
}
