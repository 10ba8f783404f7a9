//! Squared-error loss over candidate supports and the support-constrained
//! maximum-likelihood estimator.
//!
//! The MLE minimizes `L(S) = ‖y − X 1_S‖²` over all size-`s` supports. Two
//! routes are provided: exact enumeration of all `C(p, s)` candidates, and a
//! steepest-descent single-swap local search for instances where enumeration
//! is infeasible.
//!
//! Determinism contract: every candidate loss is evaluated canonically
//! (row sums accumulated in increasing column order, squared residuals
//! pairwise-summed over rows), ties are broken toward the lexicographically
//! smallest index sequence, and the enumeration space is partitioned into
//! fixed-size blocks so the result is bit-identical for any worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DesignMatrix, ModelError, SupportSet};
use crate::rng;
use crate::util::{binomial, pairwise_sum};

/// Default cap on `C(p, s)` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

/// Candidates per enumeration block. Blocks are fixed by rank, not by
/// worker, so partitioning never changes the result.
const BLOCK: u64 = 4096;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "enumeration budget exceeded: C({p}, {s}) = {candidates} > {budget}; use local search"
    )]
    BudgetExceeded { p: usize, s: usize, candidates: u128, budget: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    LocalSearch,
}

/// Outcome of an estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub support: SupportSet,
    /// `loss(support)` recomputed independently of the search path.
    pub loss: f64,
    pub method: Method,
    pub candidates_evaluated: u64,
    /// Number of evaluated candidates that tied the optimal loss, beyond
    /// the returned one (for local search: tying restart finals).
    pub ties_broken: u64,
}

/// `L(S) = Σ_i (y_i − Σ_{j∈S} X_{ij})²` with pairwise summation over rows.
pub fn loss(design: &DesignMatrix, y: &[f64], support: &SupportSet) -> Result<f64, EstimatorError> {
    check_dims(design, y)?;
    if support.p() != design.p() {
        return Err(EstimatorError::DimensionMismatch(format!(
            "support dimension {} != design dimension {}",
            support.p(),
            design.p()
        )));
    }
    let sq: Vec<f64> = (0..design.n())
        .map(|i| {
            let e = y[i] - design.row_support_sum(i, support);
            e * e
        })
        .collect();
    Ok(pairwise_sum(&sq))
}

/// `Δ = L(S) − L(S⋆)`; antisymmetric under swapping the arguments.
pub fn delta_statistic(
    design: &DesignMatrix,
    y: &[f64],
    s_cand: &SupportSet,
    s_star: &SupportSet,
) -> Result<f64, EstimatorError> {
    if s_cand.len() != s_star.len() {
        return Err(EstimatorError::Parameter(format!(
            "supports must have equal cardinality, got {} and {}",
            s_cand.len(),
            s_star.len()
        )));
    }
    Ok(loss(design, y, s_cand)? - loss(design, y, s_star)?)
}

fn check_dims(design: &DesignMatrix, y: &[f64]) -> Result<(), EstimatorError> {
    if y.len() != design.n() {
        return Err(EstimatorError::DimensionMismatch(format!(
            "observation length {} != row count {}",
            y.len(),
            design.n()
        )));
    }
    Ok(())
}

/// Exhaustive MLE with the default enumeration budget.
pub fn mle_exhaustive(
    design: &DesignMatrix,
    y: &[f64],
    s: usize,
) -> Result<EstimateResult, EstimatorError> {
    mle_exhaustive_with_budget(design, y, s, DEFAULT_ENUMERATION_BUDGET)
}

/// Exhaustive MLE: scans all `C(p, s)` supports in colexicographic order and
/// returns the minimizer, ties broken toward the lexicographically smallest
/// index sequence.
pub fn mle_exhaustive_with_budget(
    design: &DesignMatrix,
    y: &[f64],
    s: usize,
    budget: u64,
) -> Result<EstimateResult, EstimatorError> {
    check_dims(design, y)?;
    let p = design.p();
    if s > p {
        return Err(EstimatorError::Parameter(format!("sparsity s={s} exceeds dimension p={p}")));
    }
    let total = binomial(p as u64, s as u64).ok_or_else(|| {
        EstimatorError::Parameter(format!("C({p}, {s}) overflows the candidate counter"))
    })?;
    if total > budget as u128 {
        return Err(EstimatorError::BudgetExceeded { p, s, candidates: total, budget });
    }

    let xd = design.to_dense_rows();
    let n = design.n();
    let blocks = total.div_ceil(BLOCK as u128) as u64;

    let best = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b as u128 * BLOCK as u128;
            let count = BLOCK.min((total - start) as u64);
            scan_block(&xd, y, n, p, s, start, count)
        })
        .reduce_with(merge_best)
        .expect("at least one block");

    let support = SupportSet::new(p, best.combo)?;
    let final_loss = loss(design, y, &support)?;
    Ok(EstimateResult {
        support,
        loss: final_loss,
        method: Method::Exhaustive,
        candidates_evaluated: total as u64,
        ties_broken: best.ties - 1,
    })
}

struct BlockBest {
    loss: f64,
    combo: Vec<u32>,
    /// Candidates in this partial scan whose loss equals `loss`.
    ties: u64,
}

fn merge_best(a: BlockBest, b: BlockBest) -> BlockBest {
    if a.loss < b.loss {
        a
    } else if b.loss < a.loss {
        b
    } else {
        let ties = a.ties + b.ties;
        let combo = if a.combo <= b.combo { a.combo } else { b.combo };
        BlockBest { loss: a.loss, combo, ties }
    }
}

fn scan_block(
    xd: &[f64],
    y: &[f64],
    n: usize,
    p: usize,
    s: usize,
    start_rank: u128,
    count: u64,
) -> BlockBest {
    let mut combo = unrank_colex(start_rank, p, s);
    let mut sq = vec![0.0; n];
    let mut best = BlockBest { loss: f64::INFINITY, combo: combo.clone(), ties: 0 };
    for k in 0..count {
        let l = candidate_loss(xd, y, n, p, &combo, &mut sq);
        if l < best.loss {
            best.loss = l;
            best.combo.clear();
            best.combo.extend_from_slice(&combo);
            best.ties = 1;
        } else if l == best.loss {
            best.ties += 1;
            if combo < best.combo {
                best.combo.clear();
                best.combo.extend_from_slice(&combo);
            }
        }
        if k + 1 < count {
            next_colex(&mut combo, p as u32);
        }
    }
    best
}

/// Canonical candidate loss: left-to-right row sums in increasing column
/// order, pairwise sum of squared residuals. Bit-identical to [`loss`].
fn candidate_loss(xd: &[f64], y: &[f64], n: usize, p: usize, combo: &[u32], sq: &mut [f64]) -> f64 {
    for i in 0..n {
        let base = i * p;
        let mut r = 0.0;
        for &j in combo {
            r += xd[base + j as usize];
        }
        let e = y[i] - r;
        sq[i] = e * e;
    }
    pairwise_sum(sq)
}

/// Advances an ascending combination to its colexicographic successor.
/// Returns false when exhausted.
fn next_colex(c: &mut [u32], p: u32) -> bool {
    let s = c.len();
    if s == 0 {
        return false;
    }
    let mut i = 0;
    while i + 1 < s && c[i] + 1 == c[i + 1] {
        i += 1;
    }
    if i + 1 == s && c[i] + 1 >= p {
        return false;
    }
    c[i] += 1;
    for (k, slot) in c.iter_mut().enumerate().take(i) {
        *slot = k as u32;
    }
    true
}

/// Combination of colexicographic rank `rank` among size-`s` subsets of
/// `[0, p)`, ascending. Rank of ascending `c` is `Σ_k C(c[k], k+1)`.
fn unrank_colex(rank: u128, p: usize, s: usize) -> Vec<u32> {
    let mut out = vec![0u32; s];
    let mut r = rank;
    let mut hi = p as u64;
    for k in (1..=s as u64).rev() {
        // Largest c < hi with C(c, k) <= r.
        let mut c = hi - 1;
        while binomial(c, k).expect("fits in u128") > r {
            c -= 1;
        }
        r -= binomial(c, k).expect("fits in u128");
        out[(k - 1) as usize] = c as u32;
        hi = c;
    }
    out
}

/// Best support found by steepest-descent single-swap local search from
/// `restarts` random starts. The loss is non-increasing along each
/// trajectory and the result is deterministic given the seed.
pub fn mle_local_search(
    design: &DesignMatrix,
    y: &[f64],
    s: usize,
    restarts: usize,
    max_sweeps: usize,
    seed: u64,
) -> Result<EstimateResult, EstimatorError> {
    check_dims(design, y)?;
    let p = design.p();
    if s > p {
        return Err(EstimatorError::Parameter(format!("sparsity s={s} exceeds dimension p={p}")));
    }
    if restarts == 0 {
        return Err(EstimatorError::Parameter("restarts must be >= 1".to_string()));
    }

    let xd = design.to_dense_rows();
    let n = design.n();
    let mut evaluated = 0u64;
    let mut finals: Vec<(f64, Vec<u32>)> = Vec::with_capacity(restarts);

    for restart in 0..restarts {
        let mut stream = rng::stream(seed, &[restart as u64], "local-search");
        let mut pool: Vec<u32> = (0..p as u32).collect();
        for k in 0..s {
            let t = stream.gen_range(k..p);
            pool.swap(k, t);
        }
        let mut support: Vec<u32> = pool[..s].to_vec();
        support.sort_unstable();
        let mut complement: Vec<u32> = pool[s..].to_vec();
        complement.sort_unstable();

        let mut row_sums: Vec<f64> = (0..n)
            .map(|i| {
                let base = i * p;
                support.iter().fold(0.0, |acc, &j| acc + xd[base + j as usize])
            })
            .collect();
        let mut sq = vec![0.0; n];
        for i in 0..n {
            let e = y[i] - row_sums[i];
            sq[i] = e * e;
        }
        let mut cur_loss = pairwise_sum(&sq);
        evaluated += 1;

        for _ in 0..max_sweeps {
            let mut best_move: Option<(f64, u32, u32)> = None;
            for &j_out in &support {
                for &j_in in &complement {
                    for i in 0..n {
                        let base = i * p;
                        let e = y[i] - row_sums[i] + xd[base + j_out as usize]
                            - xd[base + j_in as usize];
                        sq[i] = e * e;
                    }
                    let l = pairwise_sum(&sq);
                    evaluated += 1;
                    if l < cur_loss && best_move.as_ref().map_or(true, |&(bl, _, _)| l < bl) {
                        best_move = Some((l, j_out, j_in));
                    }
                }
            }
            let Some((l, j_out, j_in)) = best_move else { break };
            for i in 0..n {
                let base = i * p;
                row_sums[i] += xd[base + j_in as usize] - xd[base + j_out as usize];
            }
            let out_pos = support.binary_search(&j_out).expect("j_out in support");
            support.remove(out_pos);
            let in_pos = support.binary_search(&j_in).unwrap_err();
            support.insert(in_pos, j_in);
            let cpos = complement.binary_search(&j_in).expect("j_in in complement");
            complement.remove(cpos);
            let cins = complement.binary_search(&j_out).unwrap_err();
            complement.insert(cins, j_out);
            cur_loss = l;
        }

        let set = SupportSet::new(p, support)?;
        let canonical = loss(design, y, &set)?;
        finals.push((canonical, set.indices().to_vec()));
    }

    let (best_loss, best_combo) = finals
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite losses").then(a.1.cmp(&b.1)))
        .expect("restarts >= 1")
        .clone();
    let ties = finals.iter().filter(|(l, _)| *l == best_loss).count() as u64;

    Ok(EstimateResult {
        support: SupportSet::new(p, best_combo)?,
        loss: best_loss,
        method: Method::LocalSearch,
        candidates_evaluated: evaluated,
        ties_broken: ties - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{observe, sample_design, sample_signal, EnsembleKind};

    /// Fixed small dense design from integer entries; exact in f64.
    fn fixed_design(p: usize, entries: &[&[f64]]) -> DesignMatrix {
        let rows = entries
            .iter()
            .map(|row| row.iter().enumerate().map(|(j, &v)| (j as u32, v)).collect())
            .collect();
        DesignMatrix::from_rows(p, rows, crate::model::Ensemble::Dense, 0).unwrap()
    }

    #[test]
    fn loss_hand_example() {
        // [[1,0,2],[0,1,1]], y=[1,1], S={0} -> (1-1)^2 + (1-0)^2 = 1.
        let m = fixed_design(3, &[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]]);
        let s = SupportSet::new(3, vec![0]).unwrap();
        assert_eq!(loss(&m, &[1.0, 1.0], &s).unwrap(), 1.0);
    }

    #[test]
    fn loss_zero_cases() {
        let m = fixed_design(3, &[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]]);
        let empty = SupportSet::new(3, vec![]).unwrap();
        assert_eq!(loss(&m, &[0.0, 0.0], &empty).unwrap(), 0.0);

        let design = sample_design(8, 10, EnsembleKind::Sparse, 6, 40).unwrap();
        let star = sample_signal(10, 3, 41).unwrap();
        let y = observe(&design, &star, 0.0, 42).unwrap();
        let l = loss(&design, &y, &star).unwrap();
        assert!(l.abs() <= 1e-12, "noiseless loss at the true support: {l}");
    }

    #[test]
    fn exhaustive_unique_candidate_when_p_equals_s() {
        let m = sample_design(4, 3, EnsembleKind::Dense, 0, 1).unwrap();
        let y = vec![0.5; 4];
        let r = mle_exhaustive(&m, &y, 3).unwrap();
        assert_eq!(r.support.indices(), &[0, 1, 2]);
        assert_eq!(r.candidates_evaluated, 1);
        assert_eq!(r.ties_broken, 0);
    }

    #[test]
    fn exhaustive_recovers_planted_support_noiselessly() {
        let design = sample_design(24, 12, EnsembleKind::Dense, 0, 5).unwrap();
        let star = sample_signal(12, 3, 6).unwrap();
        let y = observe(&design, &star, 0.0, 7).unwrap();
        let r = mle_exhaustive(&design, &y, 3).unwrap();
        assert_eq!(r.support, star);
        assert_eq!(r.candidates_evaluated, 220);
    }

    #[test]
    fn duplicate_columns_break_ties_lexicographically() {
        // Columns 1 and 3 identical (integer-valued, so ties are exact);
        // supports {0,1} and {0,3} both fit y perfectly.
        let m = fixed_design(
            4,
            &[&[1.0, 2.0, 5.0, 2.0], &[2.0, -1.0, 7.0, -1.0], &[0.0, 3.0, 11.0, 3.0]],
        );
        let y = vec![3.0, 1.0, 3.0];
        let r = mle_exhaustive(&m, &y, 2).unwrap();
        assert_eq!(r.support.indices(), &[0, 1]);
        assert_eq!(r.loss, 0.0);
        assert_eq!(r.ties_broken, 1);
    }

    #[test]
    fn budget_refusal_mentions_local_search() {
        let m = sample_design(4, 20, EnsembleKind::Dense, 0, 1).unwrap();
        let y = vec![0.0; 4];
        let err = mle_exhaustive_with_budget(&m, &y, 10, 1000).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("use local search"), "message was: {msg}");
    }

    #[test]
    fn argmin_is_scale_invariant() {
        let design = sample_design(15, 10, EnsembleKind::Sparse, 5, 9).unwrap();
        let star = sample_signal(10, 3, 10).unwrap();
        let y = observe(&design, &star, 0.5, 11).unwrap();
        let base = mle_exhaustive(&design, &y, 3).unwrap();
        for c in [0.5, 3.0] {
            let scaled = DesignMatrix::from_rows(
                10,
                design
                    .rows()
                    .iter()
                    .map(|row| row.iter().map(|&(j, v)| (j, c * v)).collect())
                    .collect(),
                design.ensemble(),
                design.gen_seed(),
            )
            .unwrap();
            let ys: Vec<f64> = y.iter().map(|&v| c * v).collect();
            let r = mle_exhaustive(&scaled, &ys, 3).unwrap();
            assert_eq!(r.support, base.support, "scale c = {c}");
        }
    }

    /// Independent oracle: iterate all combinations in reverse colex order
    /// with naive sequential sums, same (loss, lex) total order.
    fn naive_best(design: &DesignMatrix, y: &[f64], s: usize) -> (f64, Vec<u32>) {
        let p = design.p();
        let total = binomial(p as u64, s as u64).unwrap();
        let mut combos: Vec<Vec<u32>> = Vec::new();
        let mut c = unrank_colex(0, p, s);
        for k in 0..total {
            combos.push(c.clone());
            if k + 1 < total {
                next_colex(&mut c, p as u32);
            }
        }
        combos.reverse();
        let mut best: Option<(f64, Vec<u32>)> = None;
        for combo in combos {
            let set = SupportSet::new(p, combo.clone()).unwrap();
            let mut l = 0.0;
            for i in 0..design.n() {
                let e = y[i] - design.row_support_sum(i, &set);
                l += e * e;
            }
            let better = match &best {
                None => true,
                Some((bl, bc)) => l < *bl || (l == *bl && combo < *bc),
            };
            if better {
                best = Some((l, combo));
            }
        }
        best.unwrap()
    }

    #[test]
    fn exhaustive_matches_reverse_order_oracle() {
        for seed in 0..8 {
            let design = sample_design(10, 9, EnsembleKind::Sparse, 5, 100 + seed).unwrap();
            let star = sample_signal(9, 3, 200 + seed).unwrap();
            let y = observe(&design, &star, 0.7, 300 + seed).unwrap();
            let r = mle_exhaustive(&design, &y, 3).unwrap();
            let (_, combo) = naive_best(&design, &y, 3);
            assert_eq!(r.support.indices(), combo.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn exhaustive_ties_stable_under_permuted_enumeration() {
        let m = fixed_design(
            5,
            &[&[1.0, 4.0, 1.0, 4.0, 2.0], &[3.0, 1.0, 3.0, 1.0, 5.0]],
        );
        let y = vec![5.0, 4.0];
        let r = mle_exhaustive(&m, &y, 2).unwrap();
        let (_, combo) = naive_best(&m, &y, 2);
        assert_eq!(r.support.indices(), combo.as_slice());
        assert_eq!(r.support.indices(), &[0, 1]);
    }

    #[test]
    fn local_search_trivial_and_deterministic() {
        let design = sample_design(12, 8, EnsembleKind::Dense, 0, 50).unwrap();
        let star = sample_signal(8, 8, 51).unwrap();
        let y = observe(&design, &star, 0.3, 52).unwrap();
        let r = mle_local_search(&design, &y, 8, 3, 20, 77).unwrap();
        assert_eq!(r.support.indices(), star.indices());

        let a = mle_local_search(&design, &y, 3, 5, 30, 99).unwrap();
        let b = mle_local_search(&design, &y, 3, 5, 30, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn local_search_never_beats_exhaustive_and_is_locally_optimal() {
        for seed in 0..10 {
            let design = sample_design(14, 10, EnsembleKind::Sparse, 6, 400 + seed).unwrap();
            let star = sample_signal(10, 3, 500 + seed).unwrap();
            let y = observe(&design, &star, 0.5, 600 + seed).unwrap();
            let ex = mle_exhaustive(&design, &y, 3).unwrap();
            let ls = mle_local_search(&design, &y, 3, 5, 50, 700 + seed).unwrap();
            assert!(ls.loss >= ex.loss, "seed {seed}: {} < {}", ls.loss, ex.loss);

            // 1-swap local optimality of the returned support.
            let cur = ls.loss;
            let sup = ls.support.indices().to_vec();
            for &j_out in &sup {
                for j_in in 0..10u32 {
                    if sup.contains(&j_in) {
                        continue;
                    }
                    let mut cand = sup.clone();
                    cand.retain(|&j| j != j_out);
                    cand.push(j_in);
                    cand.sort_unstable();
                    let set = SupportSet::new(10, cand).unwrap();
                    assert!(loss(&design, &y, &set).unwrap() >= cur);
                }
            }
        }
    }

    #[test]
    fn delta_statistic_basic_properties() {
        let design = sample_design(10, 8, EnsembleKind::Sparse, 4, 800).unwrap();
        let star = sample_signal(8, 3, 801).unwrap();
        let y = observe(&design, &star, 0.0, 802).unwrap();
        assert_eq!(delta_statistic(&design, &y, &star, &star).unwrap(), 0.0);

        // Noiseless: the true support attains zero loss, so delta >= 0 for
        // every candidate, and delta is antisymmetric.
        let mut combo = unrank_colex(0, 8, 3);
        loop {
            let s = SupportSet::new(8, combo.clone()).unwrap();
            let d = delta_statistic(&design, &y, &s, &star).unwrap();
            assert!(d >= 0.0);
            assert_eq!(delta_statistic(&design, &y, &star, &s).unwrap(), -d);
            if !next_colex(&mut combo, 8) {
                break;
            }
        }

        let short = SupportSet::new(8, vec![1]).unwrap();
        assert!(matches!(
            delta_statistic(&design, &y, &short, &star),
            Err(EstimatorError::Parameter(_))
        ));
    }

    #[test]
    fn colex_iteration_covers_all_combinations_in_rank_order() {
        let mut c = unrank_colex(0, 6, 3);
        let mut seen = vec![c.clone()];
        while next_colex(&mut c, 6) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 20);
        for (rank, combo) in seen.iter().enumerate() {
            assert_eq!(unrank_colex(rank as u128, 6, 3), *combo);
            let colex_rank: u128 = combo
                .iter()
                .enumerate()
                .map(|(k, &cj)| binomial(cj as u64, k as u64 + 1).unwrap())
                .sum();
            assert_eq!(colex_rank, rank as u128);
        }
    }
}
