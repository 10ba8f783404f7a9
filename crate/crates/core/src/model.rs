//! Measurement ensembles, signals, observations, and sparsification.
//!
//! The observation model is `y = X 1_S + σ z` where `1_S` is the indicator
//! of an s-element support `S ⊂ [p]`, `z` is i.i.d. standard normal, and
//! `X` is one of three row ensembles:
//!
//! - `dense`: every entry i.i.d. `N(0, 1)`;
//! - `sparse(d)`: every entry is an independent `Bernoulli(d/p)` mask times
//!   an independent `N(0, 1)` value, so rows carry `d` non-zeros on average;
//! - `sparsified(d)`: a dense matrix whose entries were masked after the
//!   fact, paired with observations rescaled by `d/p` (see
//!   [`sparsify_and_rescale`]).
//!
//! Matrices are stored row-compressed as `(index, value)` pairs — dense rows
//! simply store all `p` entries — because every consumer here only ever
//! needs row inner products with indicator vectors. Columns are never
//! materialized. All generation is a pure function of `(params, seed)`, and
//! all values are immutable after construction, so instances can be shared
//! freely across trial workers.

use rand::distributions::Bernoulli;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub mod snapshot;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("usage error: {0}")]
    Usage(String),
}

/// Which row ensemble a [`DesignMatrix`] was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    Dense,
    Sparse { d: usize },
    Sparsified { d: usize },
}

/// Ensemble selector for [`sample_design`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Dense,
    Sparse,
}

/// A strictly increasing set of indices in `[0, p)`, identifying a binary
/// signal with its support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    p: usize,
    indices: Vec<u32>,
}

impl SupportSet {
    /// Builds a support from indices that must be strictly increasing and
    /// within `[0, p)`.
    pub fn new(p: usize, indices: Vec<u32>) -> Result<Self, ModelError> {
        for window in indices.windows(2) {
            if window[0] >= window[1] {
                return Err(ModelError::Parameter(format!(
                    "support indices must be strictly increasing, got {} then {}",
                    window[0], window[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last as usize >= p {
                return Err(ModelError::Parameter(format!(
                    "support index {last} out of range for dimension p={p}"
                )));
            }
        }
        Ok(Self { p, indices })
    }

    /// The full support `{0, .., p-1}`.
    pub fn full(p: usize) -> Self {
        Self { p, indices: (0..p as u32).collect() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn contains(&self, j: u32) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// A row-compressed random measurement matrix together with its generation
/// parameters. Rebuilding from `(gen_seed, params)` is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    ensemble: Ensemble,
    gen_seed: u64,
    /// Per-row `(column index, value)` pairs, indices strictly increasing,
    /// no explicit zeros.
    rows: Vec<Vec<(u32, f64)>>,
}

impl DesignMatrix {
    /// Builds a matrix from explicit row-compressed data, validating the
    /// storage invariants. Intended for fixed worked examples and oracles;
    /// randomized matrices come from [`sample_design`].
    pub fn from_rows(
        p: usize,
        rows: Vec<Vec<(u32, f64)>>,
        ensemble: Ensemble,
        gen_seed: u64,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() || p == 0 {
            return Err(ModelError::Parameter("n and p must be >= 1".to_string()));
        }
        for row in &rows {
            if ensemble == Ensemble::Dense && row.len() != p {
                return Err(ModelError::Parameter(format!(
                    "dense rows must store exactly p={p} entries, got {}",
                    row.len()
                )));
            }
            for window in row.windows(2) {
                if window[0].0 >= window[1].0 {
                    return Err(ModelError::Parameter(
                        "row indices must be strictly increasing".to_string(),
                    ));
                }
            }
            for &(j, v) in row {
                if j as usize >= p {
                    return Err(ModelError::Parameter(format!(
                        "row index {j} out of range for p={p}"
                    )));
                }
                if v == 0.0 && ensemble != Ensemble::Dense {
                    return Err(ModelError::Parameter(
                        "explicit zero values must not be stored".to_string(),
                    ));
                }
            }
        }
        let n = rows.len();
        Ok(Self { n, p, ensemble, gen_seed, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn gen_seed(&self) -> u64 {
        self.gen_seed
    }

    pub fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `Σ_{j ∈ support} X_{ij}`, accumulated left to right in increasing
    /// column order. This is the canonical row sum shared by observation
    /// generation and loss evaluation, so a zero-noise residual at the true
    /// support cancels exactly.
    pub fn row_support_sum(&self, i: usize, support: &SupportSet) -> f64 {
        let row = &self.rows[i];
        let idx = support.indices();
        let mut acc = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < row.len() && b < idx.len() {
            match row[a].0.cmp(&idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += row[a].1;
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Expands the matrix to a dense row-major buffer (`n * p` doubles).
    /// Scratch space for enumeration-heavy consumers; the matrix itself
    /// stays row-compressed.
    pub fn to_dense_rows(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.p];
        for (i, row) in self.rows.iter().enumerate() {
            let base = i * self.p;
            for &(j, v) in row {
                out[base + j as usize] = v;
            }
        }
        out
    }
}

/// Draws an `n × p` design from the requested ensemble.
///
/// The sparse ensemble draws a `Bernoulli(d/p)` mask and an independent
/// standard normal per entry in row-major order; only surviving entries are
/// stored. `d = p` keeps every entry and `d = 0` keeps none.
pub fn sample_design(
    n: usize,
    p: usize,
    kind: EnsembleKind,
    d: usize,
    seed: u64,
) -> Result<DesignMatrix, ModelError> {
    if n == 0 || p == 0 {
        return Err(ModelError::Parameter(format!("n and p must be >= 1, got n={n}, p={p}")));
    }
    if kind == EnsembleKind::Sparse && d > p {
        return Err(ModelError::Parameter(format!("row density d={d} exceeds dimension p={p}")));
    }
    let mut rng = rng::stream(seed, &[n as u64, p as u64, d as u64], "design");
    let rows = match kind {
        EnsembleKind::Dense => (0..n)
            .map(|_| (0..p as u32).map(|j| (j, rng.sample::<f64, _>(StandardNormal))).collect())
            .collect(),
        EnsembleKind::Sparse => {
            let mask = Bernoulli::new(d as f64 / p as f64)
                .map_err(|_| ModelError::Parameter(format!("invalid mask probability d/p = {d}/{p}")))?;
            (0..n)
                .map(|_| {
                    (0..p as u32)
                        .filter_map(|j| {
                            if rng.sample(mask) {
                                let v: f64 = rng.sample(StandardNormal);
                                (v != 0.0).then_some((j, v))
                            } else {
                                None
                            }
                        })
                        .collect()
                })
                .collect()
        }
    };
    let ensemble = match kind {
        EnsembleKind::Dense => Ensemble::Dense,
        EnsembleKind::Sparse => Ensemble::Sparse { d },
    };
    Ok(DesignMatrix { n, p, ensemble, gen_seed: seed, rows })
}

/// Draws a uniformly random size-`s` subset of `[0, p)` (Floyd's algorithm).
pub fn sample_signal(p: usize, s: usize, seed: u64) -> Result<SupportSet, ModelError> {
    if s > p {
        return Err(ModelError::Parameter(format!("sparsity s={s} exceeds dimension p={p}")));
    }
    let mut rng = rng::stream(seed, &[p as u64, s as u64], "signal");
    let mut chosen: Vec<u32> = Vec::with_capacity(s);
    for j in (p - s)..p {
        let t = rng.gen_range(0..=j as u32);
        if chosen.contains(&t) {
            chosen.push(j as u32);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    SupportSet::new(p, chosen)
}

/// Observes `y_i = Σ_{j ∈ support} X_{ij} + σ z_i` with fresh i.i.d. noise.
pub fn observe(
    design: &DesignMatrix,
    support: &SupportSet,
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    if support.p() != design.p() {
        return Err(ModelError::DimensionMismatch(format!(
            "support dimension {} != design dimension {}",
            support.p(),
            design.p()
        )));
    }
    if !(sigma >= 0.0) {
        return Err(ModelError::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = rng::stream(seed, &[design.n() as u64], "noise");
    Ok((0..design.n())
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            design.row_support_sum(i, support) + sigma * z
        })
        .collect())
}

/// `|a Δ b| = |a ∪ b| - |a ∩ b|`, the number of misplaced support indices.
pub fn sym_diff_size(a: &SupportSet, b: &SupportSet) -> Result<usize, ModelError> {
    if a.p() != b.p() {
        return Err(ModelError::DimensionMismatch(format!(
            "ambient dimensions differ: {} vs {}",
            a.p(),
            b.p()
        )));
    }
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    let (xs, ys) = (a.indices(), b.indices());
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(xs.len() + ys.len() - 2 * inter)
}

/// Sparsified view of a dense instance: the surviving mask per row, the
/// masked matrix `X̃`, and the rescaled observations `ỹ = (d/p) y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparsified {
    pub mask_rows: Vec<Vec<u32>>,
    pub x_tilde: DesignMatrix,
    pub y_tilde: Vec<f64>,
}

/// One generated problem instance. The sparsified fields are only present
/// after [`sparsify_and_rescale`].
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub design: DesignMatrix,
    pub beta_support: SupportSet,
    pub sigma: f64,
    pub y: Vec<f64>,
    pub sparsified: Option<Sparsified>,
}

impl Instance {
    pub fn new(
        design: DesignMatrix,
        beta_support: SupportSet,
        sigma: f64,
        y: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if beta_support.p() != design.p() {
            return Err(ModelError::DimensionMismatch(format!(
                "support dimension {} != design dimension {}",
                beta_support.p(),
                design.p()
            )));
        }
        if y.len() != design.n() {
            return Err(ModelError::DimensionMismatch(format!(
                "observation length {} != row count {}",
                y.len(),
                design.n()
            )));
        }
        Ok(Self { design, beta_support, sigma, y, sparsified: None })
    }
}

/// Masks a dense design entrywise with i.i.d. `Bernoulli(d/p)` and rescales
/// the observations: `X̃_ij = B_ij X_ij`, `ỹ = (d/p) y`. The original `y` is
/// retained; the rescale is a single multiplication per entry.
pub fn sparsify_and_rescale(
    mut instance: Instance,
    d: usize,
    seed: u64,
) -> Result<Instance, ModelError> {
    if instance.design.ensemble() != Ensemble::Dense {
        return Err(ModelError::Usage(
            "sparsify_and_rescale requires a dense design".to_string(),
        ));
    }
    let (n, p) = (instance.design.n(), instance.design.p());
    if d > p {
        return Err(ModelError::Parameter(format!("row density d={d} exceeds dimension p={p}")));
    }
    let q = d as f64 / p as f64;
    let mask = Bernoulli::new(q)
        .map_err(|_| ModelError::Parameter(format!("invalid mask probability d/p = {d}/{p}")))?;
    let mut rng = rng::stream(seed, &[n as u64, p as u64, d as u64], "sparsify-mask");

    let mut mask_rows = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for row in instance.design.rows() {
        let mut kept = Vec::new();
        let mut out = Vec::new();
        for &(j, v) in row {
            if rng.sample(mask) {
                kept.push(j);
                if v != 0.0 {
                    out.push((j, v));
                }
            }
        }
        mask_rows.push(kept);
        rows.push(out);
    }
    let x_tilde = DesignMatrix {
        n,
        p,
        ensemble: Ensemble::Sparsified { d },
        gen_seed: seed,
        rows,
    };
    let y_tilde = instance.y.iter().map(|&v| q * v).collect();
    instance.sparsified = Some(Sparsified { mask_rows, x_tilde, y_tilde });
    Ok(instance)
}

/// Membership test for the real-valued signal class with exactly `s`
/// non-zeros, all of magnitude at least one. Only the check is exposed;
/// generation stays binary.
pub fn in_signal_class(beta: &[f64], s: usize) -> bool {
    let support: Vec<f64> = beta.iter().copied().filter(|&v| v != 0.0).collect();
    support.len() == s && support.iter().all(|v| v.abs() >= 1.0)
}
