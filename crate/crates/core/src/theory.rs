//! Stylized matrix generators and executable checks of the structural results
//! behind Item-Weighted PCA.
//!
//! Each `*_verdict` function runs one check over a list of seeds and returns a
//! [`Verdict`] suitable for JSON output. The lower-level `check_*` functions
//! expose the raw numbers.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algorithms::{
    column_normalized_pca, fantope_linmax, item_weighted_pca, vanilla_pca, weights_inverse_count,
    weights_proper, ItemPartition, WeightScheme, WeightVector,
};
use crate::error::{Error, Result};
use crate::matrix::{
    gram, reconstruction_error, singular_values, sym_eig, DenseMatrix, Projection,
};

/// Largest item count the brute-force oracle will enumerate.
pub const ORACLE_MAX_DIM: usize = 20;

/// Growth limit `d <= ceil(c * sqrt(n))` enforced on popular-subspace convergence schedules.
pub const THEOREM1_GROWTH: f64 = 3.0;

const SPECTRUM_TIE_RTOL: f64 = 1e-9;

/// Pass/fail summary of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub seeds: Vec<u64>,
    pub statistics: BTreeMap<String, Value>,
}

impl Verdict {
    fn new(name: &str, seeds: &[u64]) -> Self {
        Verdict {
            name: name.to_string(),
            pass: true,
            seeds: seeds.to_vec(),
            statistics: BTreeMap::new(),
        }
    }

    fn stat(&mut self, key: &str, value: Value) {
        self.statistics.insert(key.to_string(), value);
    }
}

/// Popular/unpopular matrix: `m` Bernoulli columns followed by `d - m`
/// columns with exactly `k` ones each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StylizedSpec {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub bernoulli_range: [f64; 2],
    pub k: usize,
    pub seed: u64,
}

impl StylizedSpec {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bernoulli_range;
        let problem = if self.m > self.d {
            Some(format!("M = {} exceeds d = {}", self.m, self.d))
        } else if self.d >= self.n {
            Some(format!("d = {} must be below n = {}", self.d, self.n))
        } else if self.k == 0 || self.k > self.n {
            Some(format!("K = {} must lie in 1..={}", self.k, self.n))
        } else if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            Some(format!(
                "Bernoulli range [{lo}, {hi}] must satisfy 0 < lo <= hi <= 1"
            ))
        } else {
            None
        };
        problem.map_or(Ok(()), |p| Err(Error::InvalidArgument(p)))
    }
}

pub fn gen_popular_unpopular(spec: &StylizedSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d) = (spec.n, spec.d);
    let [lo, hi] = spec.bernoulli_range;
    let mut data = vec![0.0; n * d];
    for j in 0..spec.m {
        let p = rng.random_range(lo..=hi);
        for i in 0..n {
            if rng.random_bool(p) {
                data[i * d + j] = 1.0;
            }
        }
    }
    for j in spec.m..d {
        for i in sample(&mut rng, n, spec.k) {
            data[i * d + j] = 1.0;
        }
    }
    DenseMatrix::new(n, d, data)
}

/// `I_{n,M}`: identity on the first `m` coordinates of `d`.
pub fn leading_identity(d: usize, m: usize) -> DenseMatrix {
    let diag: Vec<f64> = (0..d).map(|j| if j < m { 1.0 } else { 0.0 }).collect();
    DenseMatrix::from_diagonal(&diag).expect("nonempty diagonal")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Point {
    pub n: usize,
    pub distance: f64,
}

/// `||P_n - I_{n,M}||_F` for rank-`M` vanilla PCA along a schedule of
/// increasing `n`.
pub fn check_theorem1(schedule: &[StylizedSpec]) -> Result<Vec<Theorem1Point>> {
    if schedule.windows(2).any(|w| w[0].n >= w[1].n) {
        return Err(Error::InvalidArgument(
            "schedule must be strictly increasing in n".into(),
        ));
    }
    schedule
        .iter()
        .map(|spec| {
            let limit = (THEOREM1_GROWTH * (spec.n as f64).sqrt()).ceil() as usize;
            if spec.d > limit {
                return Err(Error::HypothesisViolated(format!(
                    "d = {} exceeds {THEOREM1_GROWTH} sqrt(n) = {limit} at n = {}",
                    spec.d, spec.n
                )));
            }
            if spec.m == 0 {
                return Err(Error::InvalidArgument("M must be positive".into()));
            }
            let x = gen_popular_unpopular(spec)?;
            let p = vanilla_pca(&x, spec.m)?;
            let distance = p
                .matrix()
                .sub(&leading_identity(spec.d, spec.m))?
                .frobenius_norm();
            Ok(Theorem1Point {
                n: spec.n,
                distance,
            })
        })
        .collect()
}

/// Median with the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    assert!(n > 0, "median of empty slice");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentile `q` in `[0, 1]` by linear interpolation between order statistics.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    assert!(!v.is_empty(), "percentile of empty slice");
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Coefficient of determination of the least-squares line `y = a + b x`.
pub fn linear_fit_r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    1.0 - ss_res / syy
}

/// Popular-subspace convergence schedule with `d = ceil(2 sqrt(n))` and `p ~ U[0.1, 1]`.
pub fn theorem1_schedule(ns: &[usize], m: usize, k: usize, seed: u64) -> Vec<StylizedSpec> {
    ns.iter()
        .map(|&n| StylizedSpec {
            n,
            d: (2.0 * (n as f64).sqrt()).ceil() as usize,
            m,
            bernoulli_range: [0.1, 1.0],
            k,
            seed,
        })
        .collect()
}

pub fn theorem1_verdict(seeds: &[u64], ns: &[usize]) -> Result<Verdict> {
    let mut verdict = Verdict::new("theorem1_popular_subspace", seeds);
    let mut per_n: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    for &seed in seeds {
        for (k, point) in check_theorem1(&theorem1_schedule(ns, 5, 3, seed))?
            .into_iter()
            .enumerate()
        {
            per_n[k].push(point.distance);
        }
    }
    let medians: Vec<f64> = per_n.iter().map(|v| median(v)).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let dropped = medians.last() < medians.first().map(|m| 0.5 * m).as_ref();
    verdict.pass = decreasing && (medians.len() < 2 || dropped);
    verdict.stat("n", json!(ns));
    verdict.stat("median_distance", json!(medians));
    verdict.stat("strictly_decreasing", json!(decreasing));
    Ok(verdict)
}

/// Block-exclusive binary matrix: popular items are liked only by users from
/// the popular pool, unpopular items only by the unpopular pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub n_p: usize,
    pub n_u: usize,
    pub d_p: usize,
    pub d_u: usize,
    pub seed: u64,
    /// Popular user pool size; `2 n_p` when absent.
    #[serde(default)]
    pub pool_p: Option<usize>,
    /// Unpopular user pool size; `2 n_u` when absent.
    #[serde(default)]
    pub pool_u: Option<usize>,
}

impl BlockSpec {
    pub fn new(n_p: usize, n_u: usize, d_p: usize, d_u: usize, seed: u64) -> Self {
        BlockSpec {
            n_p,
            n_u,
            d_p,
            d_u,
            seed,
            pool_p: None,
            pool_u: None,
        }
    }

    /// Random small instance with `d_p + d_u <= max_d`, for sweeps over seeds.
    pub fn random(seed: u64, max_d: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_B10C);
        let d_p = rng.random_range(2..=max_d / 2 - 1);
        let d_u = rng.random_range(2..=max_d - d_p);
        let n_u = rng.random_range(2..=6);
        let n_p = rng.random_range(n_u + 4..=40);
        BlockSpec::new(n_p, n_u, d_p, d_u, seed)
    }

    pub fn pools(&self) -> (usize, usize) {
        (
            self.pool_p.unwrap_or(2 * self.n_p),
            self.pool_u.unwrap_or(2 * self.n_u),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 || self.n_p < self.n_u {
            return Err(Error::InvalidArgument(format!(
                "need n_p >= n_u >= 1, got n_p = {}, n_u = {}",
                self.n_p, self.n_u
            )));
        }
        if self.d_p == 0 || self.d_u == 0 {
            return Err(Error::InvalidArgument(
                "both item blocks must be nonempty".into(),
            ));
        }
        let (pool_p, pool_u) = self.pools();
        if pool_p < self.n_p {
            return Err(Error::PoolTooSmall {
                pool: pool_p,
                needed: self.n_p,
            });
        }
        if pool_u < self.n_u {
            return Err(Error::PoolTooSmall {
                pool: pool_u,
                needed: self.n_u,
            });
        }
        Ok(())
    }

    pub fn partition(&self) -> ItemPartition {
        ItemPartition::leading(self.d_p, self.d_p + self.d_u).expect("blocks are nonempty")
    }
}

/// Rows `0..pool_p` are popular users, the rest unpopular users. Items
/// `0..d_p` are popular.
pub fn gen_block_exclusive(spec: &BlockSpec) -> Result<(DenseMatrix, ItemPartition)> {
    spec.validate()?;
    let (pool_p, pool_u) = spec.pools();
    let n = pool_p + pool_u;
    let d = spec.d_p + spec.d_u;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = vec![0.0; n * d];
    for j in 0..d {
        let (offset, pool, count) = if j < spec.d_p {
            (0, pool_p, spec.n_p)
        } else {
            (pool_p, pool_u, spec.n_u)
        };
        for i in sample(&mut rng, pool, count) {
            data[(offset + i) * d + j] = 1.0;
        }
    }
    Ok((DenseMatrix::new(n, d, data)?, spec.partition()))
}

fn masked(x: &DenseMatrix, keep: &[usize]) -> Result<DenseMatrix> {
    let mut mask = vec![0.0; x.cols()];
    for &j in keep {
        mask[j] = 1.0;
    }
    x.scale_columns(&mask)
}

/// Popularity-normalized loss
/// `||X_p - X_p P||^2 / ||X_p||^2 + ||X_u - X_u P||^2 / ||X_u||^2`, where
/// `X_p` (`X_u`) is `X` with the other block's columns zeroed.
pub fn popnorm_loss(x: &DenseMatrix, part: &ItemPartition, p: &Projection) -> Result<f64> {
    let mut total = 0.0;
    for (block, name) in [(part.popular(), "popular"), (part.unpopular(), "unpopular")] {
        let xb = masked(x, block)?;
        let norm = xb.frobenius_norm_sq();
        if norm == 0.0 {
            return Err(Error::EmptyBlock { block: name });
        }
        total += reconstruction_error(&xb, p)? / norm;
    }
    Ok(total)
}

fn submatrix(g: &DenseMatrix, idx: &[usize]) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&a| idx.iter().map(|&b| g.get(a, b)).collect())
        .collect();
    DenseMatrix::from_rows(&rows).expect("nonempty block")
}

/// Minimum popularity-normalized loss over all rank-`r` projections spanned by
/// eigenvectors of the block-diagonal `X^T X`, by exhaustive enumeration.
pub fn oracle_min_popnorm_loss(
    x: &DenseMatrix,
    part: &ItemPartition,
    r: usize,
) -> Result<(f64, Projection)> {
    let d = x.cols();
    if d > ORACLE_MAX_DIM {
        return Err(Error::TooLarge {
            d,
            limit: ORACLE_MAX_DIM,
        });
    }
    if part.dim() != d {
        return Err(Error::DimensionMismatch {
            what: "partition size",
            expected: d,
            found: part.dim(),
        });
    }
    if r > d {
        return Err(Error::RankOutOfRange { rank: r, max: d });
    }
    let g = gram(x);
    for &a in part.popular() {
        for &b in part.unpopular() {
            if g.get(a, b) != 0.0 {
                return Err(Error::NotBlockExclusive { row: a, col: b });
            }
        }
    }

    // Eigenvectors of each diagonal block, embedded in R^d, with their loss
    // reduction lambda / ||X_block||^2.
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut gains: Vec<f64> = Vec::with_capacity(d);
    for (block, name) in [(part.popular(), "popular"), (part.unpopular(), "unpopular")] {
        let gb = submatrix(&g, block);
        let norm = gb.trace();
        if norm == 0.0 {
            return Err(Error::EmptyBlock { block: name });
        }
        let eig = sym_eig(&gb)?;
        for k in 0..block.len() {
            let mut v = vec![0.0; d];
            for (pos, &j) in block.iter().enumerate() {
                v[j] = eig.eigenvectors.get(pos, k);
            }
            vectors.push(v);
            gains.push(eig.eigenvalues[k] / norm);
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..r).collect();
    loop {
        let loss = 2.0 - subset.iter().map(|&k| gains[k]).sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, subset.clone()));
        }
        if !next_combination(&mut subset, d) {
            break;
        }
    }
    let (_, chosen) = best.expect("at least one subset");
    let mut basis = vec![0.0; d * r];
    for (c, &k) in chosen.iter().enumerate() {
        for i in 0..d {
            basis[i * r + c] = vectors[k][i];
        }
    }
    let p = if r == 0 {
        Projection::zero(d)
    } else {
        Projection::from_basis_unchecked(d, r, basis)
    };
    Ok((popnorm_loss(x, part, &p)?, p))
}

/// Advances `c` to the next `c.len()`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    let Some(i) = (0..r).rev().find(|&i| c[i] < n - r + i) else {
        return false;
    };
    c[i] += 1;
    for k in i + 1..r {
        c[k] = c[k - 1] + 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub seed: u64,
    pub r: usize,
    pub item_weighted_loss: f64,
    pub oracle_loss: f64,
    pub vanilla_loss: f64,
    pub column_normalized_loss: f64,
    pub pass: bool,
}

pub fn check_theorem3(spec: &BlockSpec, r: usize) -> Result<Theorem3Report> {
    let (x, part) = gen_block_exclusive(spec)?;
    let w = weights_proper(&x, &part)?;
    let (p, _) = item_weighted_pca(&x, &w, r)?;
    let item_weighted_loss = popnorm_loss(&x, &part, &p)?;
    let (oracle_loss, _) = oracle_min_popnorm_loss(&x, &part, r)?;
    let vanilla_loss = popnorm_loss(&x, &part, &vanilla_pca(&x, r)?)?;
    let column_normalized_loss = popnorm_loss(&x, &part, &column_normalized_pca(&x, r, false)?)?;
    let tol = 1e-8;
    let pass = item_weighted_loss <= oracle_loss + tol
        && item_weighted_loss <= vanilla_loss + tol
        && item_weighted_loss <= column_normalized_loss + tol;
    Ok(Theorem3Report {
        seed: spec.seed,
        r,
        item_weighted_loss,
        oracle_loss,
        vanilla_loss,
        column_normalized_loss,
        pass,
    })
}

pub fn theorem3_verdict(seeds: &[u64]) -> Result<Verdict> {
    let mut verdict = Verdict::new("theorem3_proper_weights_optimal", seeds);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let r = 2 + i % 3;
        let report = check_theorem3(&BlockSpec::random(seed, 12), r)?;
        worst_gap = worst_gap.max(report.item_weighted_loss - report.oracle_loss);
        if !report.pass {
            failures.push(seed);
        }
    }
    verdict.pass = failures.is_empty();
    verdict.stat("max_loss_minus_oracle", json!(worst_gap));
    verdict.stat("failed_seeds", json!(failures));
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposition4Report {
    pub requested_seed: u64,
    /// Seed actually used after skipping instances without a spectral gap.
    pub seed: u64,
    pub uniform_vs_vanilla: f64,
    pub inverse_count_vs_column_normalized: f64,
    pub pass: bool,
}

const PROPOSITION4_GAP: f64 = 1e-8;
const PROPOSITION4_ATTEMPTS: u64 = 100;

fn gap_at_cut(values: &[f64], r: usize) -> f64 {
    let next = values.get(r).copied().unwrap_or(0.0);
    (values[r - 1] - next).min(values[r - 1])
}

/// Uniform-weight Item-Weighted PCA against vanilla PCA and `1/n`-weight
/// Item-Weighted PCA against column-normalized PCA, compared as projection
/// matrices.
pub fn check_proposition4(spec: &BlockSpec, r: usize) -> Result<Proposition4Report> {
    for attempt in 0..PROPOSITION4_ATTEMPTS {
        let trial = BlockSpec {
            seed: spec.seed.wrapping_add(attempt),
            ..spec.clone()
        };
        let (x, part) = gen_block_exclusive(&trial)?;
        let d = x.cols();
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, max: d });
        }
        let w_count = weights_inverse_count(&part, spec.n_p as f64, spec.n_u as f64)?;
        let g = gram(&x);
        let scaled = g.scale_columns(w_count.weights())?.symmetrized()?;
        let gap_g = gap_at_cut(&sym_eig(&g)?.eigenvalues, r);
        let gap_s = gap_at_cut(&sym_eig(&scaled)?.eigenvalues, r);
        if gap_g <= PROPOSITION4_GAP * g.max_abs().max(1.0)
            || gap_s <= PROPOSITION4_GAP * scaled.max_abs().max(1.0)
        {
            continue;
        }
        let (p_uniform, _) = item_weighted_pca(&x, &WeightVector::uniform(d), r)?;
        let (p_count, _) = item_weighted_pca(&x, &w_count, r)?;
        let uniform_vs_vanilla = p_uniform.distance(&vanilla_pca(&x, r)?)?;
        let inverse_count_vs_column_normalized =
            p_count.distance(&column_normalized_pca(&x, r, false)?)?;
        return Ok(Proposition4Report {
            requested_seed: spec.seed,
            seed: trial.seed,
            uniform_vs_vanilla,
            inverse_count_vs_column_normalized,
            pass: uniform_vs_vanilla <= 1e-7 && inverse_count_vs_column_normalized <= 1e-7,
        });
    }
    Err(Error::HypothesisViolated(format!(
        "no instance with a spectral gap at rank {r} within {PROPOSITION4_ATTEMPTS} seeds"
    )))
}

pub fn proposition4_verdict(seeds: &[u64]) -> Result<Verdict> {
    let mut verdict = Verdict::new("proposition4_baseline_instantiations", seeds);
    let mut max_uniform = 0.0f64;
    let mut max_count = 0.0f64;
    let mut used = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let spec = BlockSpec::random(seed, 12);
        let r = 1 + i % (spec.d_p + spec.d_u - 1).min(4);
        let report = check_proposition4(&spec, r)?;
        max_uniform = max_uniform.max(report.uniform_vs_vanilla);
        max_count = max_count.max(report.inverse_count_vs_column_normalized);
        verdict.pass &= report.pass;
        used.push(report.seed);
    }
    verdict.stat("max_distance_uniform_vs_vanilla", json!(max_uniform));
    verdict.stat(
        "max_distance_inverse_count_vs_column_normalized",
        json!(max_count),
    );
    verdict.stat("seeds_used", json!(used));
    Ok(verdict)
}

/// Number of the top `r` rescaled eigenvalues that come from each block.
/// Values within a relative `1e-9` tie; a tie goes to the block with fewer
/// components so far, the popular block when both have equally many, so tied
/// pairs alternate p, u, p, u.
pub fn select_components_from_spectra(
    spectra_p: &[f64],
    spectra_u: &[f64],
    w_p: f64,
    w_u: f64,
    r: usize,
) -> (usize, usize) {
    let (mut i, mut j) = (0, 0);
    while i + j < r && (i < spectra_p.len() || j < spectra_u.len()) {
        let take_p = match (spectra_p.get(i), spectra_u.get(j)) {
            (Some(&a), Some(&b)) => {
                let (a, b) = (w_p * a, w_u * b);
                if (a - b).abs() <= SPECTRUM_TIE_RTOL * a.abs().max(b.abs()) {
                    i <= j
                } else {
                    a > b
                }
            }
            (Some(_), None) => true,
            _ => false,
        };
        if take_p {
            i += 1;
        } else {
            j += 1;
        }
    }
    (i, j)
}

/// Exponentially decaying block spectra `lambda_i = beta^{-(i-1)} lambda_1`,
/// `i = 1..=r`, in each block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub r: usize,
    pub beta: f64,
    pub lambda1_p: f64,
    pub lambda1_u: f64,
}

impl SpectrumSpec {
    /// Leading eigenvalues fixed by the trace identity
    /// `sum_i lambda_i = tr(X_b^T X_b) = n_b d_b` of a binary block.
    pub fn from_block_counts(
        r: usize,
        beta: f64,
        n_p: f64,
        n_u: f64,
        d_p: usize,
        d_u: usize,
    ) -> Self {
        let decay_sum: f64 = (0..r).map(|i| beta.powi(-(i as i32))).sum();
        SpectrumSpec {
            r,
            beta,
            lambda1_p: n_p * d_p as f64 / decay_sum,
            lambda1_u: n_u * d_u as f64 / decay_sum,
        }
    }

    pub fn spectrum(&self, lambda1: f64) -> Vec<f64> {
        (0..self.r)
            .map(|i| lambda1 * self.beta.powi(-(i as i32)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0) {
            return Err(Error::HypothesisViolated(format!(
                "decay beta = {} must exceed 1",
                self.beta
            )));
        }
        if !(self.lambda1_p > 0.0 && self.lambda1_u > 0.0) {
            return Err(Error::HypothesisViolated(
                "leading eigenvalues must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `k` orthonormal vectors in `R^d` from Gram-Schmidt on Gaussian draws.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for q in &out {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            out.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub scheme: WeightScheme,
    pub observed: (usize, usize),
    pub from_spectra: (usize, usize),
    pub expected: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Report {
    pub seed: u64,
    pub splits: Vec<SplitOutcome>,
    pub pass: bool,
}

/// Builds `G = blockdiag(G_p, G_u)` with the prescribed spectra on random
/// eigenbases and counts, for uniform, `1/n` and `1/sqrt(n)` weights, how many
/// of the `r` selected components lie in each block.
pub fn check_theorem5_gram(
    spec: &SpectrumSpec,
    d_p: usize,
    d_u: usize,
    n_p: f64,
    n_u: f64,
    seed: u64,
) -> Result<Theorem5Report> {
    spec.validate()?;
    let r = spec.r;
    if r == 0 || r % 2 == 1 {
        return Err(Error::HypothesisViolated(format!(
            "rank r = {r} must be even and positive"
        )));
    }
    if r > d_p || r > d_u {
        return Err(Error::HypothesisViolated(format!(
            "block rank {r} exceeds a block size (d_p = {d_p}, d_u = {d_u})"
        )));
    }
    let ratio_bound = spec.beta.powi(-2 * (r as i32 - 1));
    if !(n_u / n_p < ratio_bound) {
        return Err(Error::HypothesisViolated(format!(
            "n_u / n_p = {} is not below beta^(-2(r-1)) = {ratio_bound}",
            n_u / n_p
        )));
    }
    let target_d_u = (n_p / n_u).sqrt() * d_p as f64;
    if (d_u as f64 - target_d_u).abs() > 1e-9 * target_d_u {
        return Err(Error::HypothesisViolated(format!(
            "d_u = {d_u} differs from sqrt(n_p / n_u) d_p = {target_d_u}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = d_p + d_u;
    let spec_p = spec.spectrum(spec.lambda1_p);
    let spec_u = spec.spectrum(spec.lambda1_u);
    let mut g = vec![0.0; d * d];
    for (offset, dim, values) in [(0, d_p, &spec_p), (d_p, d_u, &spec_u)] {
        let basis = random_orthonormal(&mut rng, dim, r);
        for (q, &lambda) in basis.iter().zip(values.iter()) {
            for a in 0..dim {
                for b in 0..dim {
                    g[(offset + a) * d + offset + b] += lambda * q[a] * q[b];
                }
            }
        }
    }
    let g = DenseMatrix::new(d, d, g)?.symmetrized()?;
    let part = ItemPartition::leading(d_p, d)?;

    let schemes = [
        (WeightScheme::Uniform, 1.0, 1.0, (r, 0)),
        (WeightScheme::InverseCount, 1.0 / n_p, 1.0 / n_u, (0, r)),
        (
            WeightScheme::Interpolate,
            n_p.sqrt().recip(),
            n_u.sqrt().recip(),
            (r / 2, r / 2),
        ),
    ];
    let mut splits = Vec::with_capacity(schemes.len());
    for (scheme, w_p, w_u, expected) in schemes {
        let w = part.block_weights(w_p, w_u, scheme)?;
        let a = g.scale_columns(w.weights())?.symmetrized()?;
        let (p, _) = fantope_linmax(&a, r)?;
        let diag = p.diagonal();
        let in_p: f64 = diag[..d_p].iter().sum();
        let in_u: f64 = diag[d_p..].iter().sum();
        let observed = (in_p.round() as usize, in_u.round() as usize);
        let from_spectra = select_components_from_spectra(&spec_p, &spec_u, w_p, w_u, r);
        splits.push(SplitOutcome {
            scheme,
            observed,
            from_spectra,
            expected,
        });
    }
    let pass = splits
        .iter()
        .all(|s| s.observed == s.expected && s.from_spectra == s.expected);
    Ok(Theorem5Report { seed, splits, pass })
}

pub fn theorem5_verdict(seeds: &[u64]) -> Result<Verdict> {
    let (d_p, d_u, n_u, r, beta) = (4, 64, 4.0, 4, 2.0);
    let n_p = 256.0 * n_u;
    let spec = SpectrumSpec::from_block_counts(r, beta, n_p, n_u, d_p, d_u);
    let mut verdict = Verdict::new("theorem5_interpolating_split", seeds);
    let mut observed = BTreeMap::new();
    for &seed in seeds {
        let report = check_theorem5_gram(&spec, d_p, d_u, n_p, n_u, seed)?;
        verdict.pass &= report.pass;
        for s in report.splits {
            observed
                .entry(s.scheme.as_str().to_string())
                .or_insert_with(Vec::new)
                .push(json!([s.observed.0, s.observed.1]));
        }
    }
    verdict.stat("d_p", json!(d_p));
    verdict.stat("d_u", json!(d_u));
    verdict.stat("n_p_over_n_u", json!(n_p / n_u));
    verdict.stat("r", json!(r));
    verdict.stat("splits", json!(observed));
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiminishingReturnsReport {
    /// `err(r - 1) - err(r)` for `r = 1..=min(n, d)`.
    pub decrements: Vec<f64>,
    pub squared_singular_values: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Each added principal component lowers the reconstruction error by the
/// square of the corresponding singular value.
pub fn check_diminishing_returns(x: &DenseMatrix) -> Result<DiminishingReturnsReport> {
    let steps = x.rows().min(x.cols());
    let sv = singular_values(x);
    let mut previous = x.frobenius_norm_sq();
    let mut decrements = Vec::with_capacity(steps);
    let mut squared = Vec::with_capacity(steps);
    let mut max_deviation = 0.0f64;
    for r in 1..=steps {
        let err = reconstruction_error(x, &vanilla_pca(x, r)?)?;
        let s2 = sv.get(r - 1).map_or(0.0, |s| s * s);
        max_deviation = max_deviation.max((previous - err - s2).abs());
        decrements.push(previous - err);
        squared.push(s2);
        previous = err;
    }
    let tolerance = 1e-7 * x.frobenius_norm_sq().max(1.0);
    Ok(DiminishingReturnsReport {
        decrements,
        squared_singular_values: squared,
        max_deviation,
        tolerance,
        pass: max_deviation <= tolerance,
    })
}

pub fn diminishing_returns_verdict(seeds: &[u64], n: usize, d: usize) -> Result<Verdict> {
    let mut verdict = Verdict::new("diminishing_returns", seeds);
    let mut worst = 0.0f64;
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let report = check_diminishing_returns(&DenseMatrix::new(n, d, data)?)?;
        worst = worst.max(report.max_deviation / report.tolerance);
        verdict.pass &= report.pass;
    }
    verdict.stat("shape", json!([n, d]));
    verdict.stat("max_deviation_over_tolerance", json!(worst));
    Ok(verdict)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub mean_smallest_sq: f64,
    pub p1: f64,
    pub p99: f64,
}

/// Smallest squared singular value of `n x m` Bernoulli matrices with
/// column probabilities `p_j ~ U[0.1, 1]` drawn once.
pub fn bernoulli_scaling(
    m: usize,
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "M and trials must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..=1.0)).collect();
    ns.iter()
        .map(|&n| {
            if n < m {
                return Err(Error::InvalidArgument(format!("n = {n} is below M = {m}")));
            }
            let samples: Vec<f64> = (0..trials)
                .map(|_| {
                    let data = (0..n * m)
                        .map(|k| {
                            if rng.random_bool(probs[k % m]) {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let x = DenseMatrix::new(n, m, data)?;
                    let smallest = sym_eig(&gram(&x))?.eigenvalues[m - 1];
                    Ok(smallest.max(0.0))
                })
                .collect::<Result<_>>()?;
            Ok(ScalingRow {
                n,
                mean_smallest_sq: samples.iter().sum::<f64>() / trials as f64,
                p1: percentile(&samples, 0.01),
                p99: percentile(&samples, 0.99),
            })
        })
        .collect()
}

pub fn bernoulli_verdict(seed: u64, ns: &[usize], trials: usize) -> Result<Verdict> {
    let rows = bernoulli_scaling(20, ns, trials, seed)?;
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_smallest_sq).collect();
    let r2 = linear_fit_r_squared(&x, &y);
    let mut verdict = Verdict::new("bernoulli_singular_value_scaling", &[seed]);
    verdict.pass = r2 >= 0.95;
    verdict.stat("m", json!(20));
    verdict.stat("trials", json!(trials));
    verdict.stat("rows", serde_json::to_value(&rows)?);
    verdict.stat("r_squared", json!(r2));
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stylized_generator_counts() {
        let spec = StylizedSpec {
            n: 100,
            d: 12,
            m: 3,
            bernoulli_range: [0.1, 1.0],
            k: 4,
            seed: 9,
        };
        let x = gen_popular_unpopular(&spec).unwrap();
        for (j, s) in x.column_sums().into_iter().enumerate().skip(3) {
            assert_eq!(s, 4.0, "column {j}");
        }
        assert!(gen_popular_unpopular(&StylizedSpec {
            k: 0,
            ..spec.clone()
        })
        .is_err());
        assert!(gen_popular_unpopular(&StylizedSpec { m: 13, ..spec }).is_err());
    }

    #[test]
    fn popular_block_singular_value_grows_linearly() {
        let mut means = Vec::new();
        for n in [400, 1600, 6400] {
            let total: f64 = (0..50)
                .map(|seed| {
                    let spec = StylizedSpec {
                        n,
                        d: 5,
                        m: 5,
                        bernoulli_range: [0.1, 1.0],
                        k: 1,
                        seed,
                    };
                    let s = singular_values(&gen_popular_unpopular(&spec).unwrap());
                    s[4] * s[4]
                })
                .sum();
            means.push(total / 50.0);
        }
        for w in means.windows(2) {
            let ratio = w[1] / w[0];
            assert!((3.2..=5.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn theorem1_popular_only_is_exact() {
        let spec = StylizedSpec {
            n: 200,
            d: 5,
            m: 5,
            bernoulli_range: [0.1, 1.0],
            k: 3,
            seed: 1,
        };
        let out = check_theorem1(std::slice::from_ref(&spec)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].distance < 1e-8);
        let unsorted = [
            StylizedSpec {
                n: 300,
                d: 10,
                ..spec.clone()
            },
            StylizedSpec {
                d: 10,
                ..spec.clone()
            },
        ];
        assert!(check_theorem1(&unsorted).is_err());
        let too_wide = StylizedSpec { d: 100, ..spec };
        assert!(matches!(
            check_theorem1(&[too_wide]),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn block_generator_is_exact() {
        let spec = BlockSpec::new(12, 3, 3, 5, 4);
        let (x, part) = gen_block_exclusive(&spec).unwrap();
        let g = gram(&x);
        for &a in part.popular() {
            for &b in part.unpopular() {
                assert_eq!(g.get(a, b), 0.0);
            }
        }
        let sums = x.column_sums();
        assert!(sums[..3].iter().all(|&s| s == 12.0));
        assert!(sums[3..].iter().all(|&s| s == 3.0));
        let (np, _) = crate::algorithms::block_norms_sq(&x, &part).unwrap();
        assert_eq!(np, 36.0);
        let small = BlockSpec {
            pool_p: Some(5),
            ..spec
        };
        assert!(matches!(
            gen_block_exclusive(&small),
            Err(Error::PoolTooSmall {
                pool: 5,
                needed: 12
            })
        ));
    }

    #[test]
    fn popnorm_loss_examples() {
        let (x, part) = gen_block_exclusive(&BlockSpec::new(10, 2, 3, 4, 5)).unwrap();
        assert!(
            popnorm_loss(&x, &part, &Projection::identity(7))
                .unwrap()
                .abs()
                < 1e-12
        );
        assert_eq!(popnorm_loss(&x, &part, &Projection::zero(7)).unwrap(), 2.0);
    }

    #[test]
    fn oracle_limits() {
        let (x, part) = gen_block_exclusive(&BlockSpec::new(10, 2, 3, 4, 6)).unwrap();
        assert!(oracle_min_popnorm_loss(&x, &part, 7).unwrap().0.abs() < 1e-10);
        assert_eq!(oracle_min_popnorm_loss(&x, &part, 0).unwrap().0, 2.0);
        let mut last = 2.0;
        for r in 1..=7 {
            let (loss, _) = oracle_min_popnorm_loss(&x, &part, r).unwrap();
            assert!(loss <= last + 1e-12);
            last = loss;
        }
        let wide = DenseMatrix::zeros(3, 21);
        let part21 = ItemPartition::leading(1, 21).unwrap();
        assert!(matches!(
            oracle_min_popnorm_loss(&wide, &part21, 2),
            Err(Error::TooLarge { d: 21, .. })
        ));
        let mixed = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            oracle_min_popnorm_loss(&mixed, &ItemPartition::leading(1, 2).unwrap(), 1),
            Err(Error::NotBlockExclusive { .. })
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn proposition4_examples() {
        let report = check_proposition4(&BlockSpec::new(40, 5, 4, 8, 3), 3).unwrap();
        assert!(report.pass, "{report:?}");
        let report = check_proposition4(&BlockSpec::new(6, 6, 3, 3, 3), 2).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn spectra_selection_examples() {
        let spec = SpectrumSpec::from_block_counts(4, 2.0, 1024.0, 4.0, 4, 64);
        assert!((spec.lambda1_p / spec.lambda1_u - 16.0).abs() < 1e-12);
        let sp = spec.spectrum(spec.lambda1_p);
        let su = spec.spectrum(spec.lambda1_u);
        assert_eq!(
            select_components_from_spectra(&sp, &su, 1.0, 1.0, 4),
            (4, 0)
        );
        assert_eq!(
            select_components_from_spectra(&sp, &su, 1.0 / 1024.0, 0.25, 4),
            (0, 4)
        );
        assert_eq!(
            select_components_from_spectra(&sp, &su, 1.0 / 32.0, 0.5, 4),
            (2, 2)
        );
        assert_eq!(
            select_components_from_spectra(&sp, &su, 1.0, 1.0, 0),
            (0, 0)
        );
        let same = [3.0, 2.0, 1.0];
        assert_eq!(
            select_components_from_spectra(&same, &same, 1.0, 1.0, 3),
            (2, 1)
        );
    }

    #[test]
    fn theorem5_rejects_bad_hypotheses() {
        let spec = SpectrumSpec::from_block_counts(4, 2.0, 1024.0, 4.0, 4, 64);
        let odd = SpectrumSpec {
            r: 3,
            ..spec.clone()
        };
        assert!(matches!(
            check_theorem5_gram(&odd, 4, 64, 1024.0, 4.0, 1),
            Err(Error::HypothesisViolated(_))
        ));
        let flat = SpectrumSpec {
            beta: 1.0,
            ..spec.clone()
        };
        assert!(check_theorem5_gram(&flat, 4, 64, 1024.0, 4.0, 1).is_err());
        assert!(check_theorem5_gram(&spec, 4, 60, 1024.0, 4.0, 1).is_err());
        let report = check_theorem5_gram(&spec, 4, 64, 1024.0, 4.0, 1).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn diminishing_returns_examples() {
        let report = check_diminishing_returns(&DenseMatrix::identity(4)).unwrap();
        assert!(report.decrements.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let report = check_diminishing_returns(&x).unwrap();
        assert!((report.decrements[0] - 70.0).abs() < 1e-9);
        assert!(report.decrements[1].abs() < 1e-9);
        assert!(report.pass);
    }

    #[test]
    fn bernoulli_single_trial_percentiles() {
        let rows = bernoulli_scaling(3, &[30], 1, 5).unwrap();
        assert_eq!(rows[0].p1, rows[0].mean_smallest_sq);
        assert_eq!(rows[0].p99, rows[0].mean_smallest_sq);
    }

    #[test]
    fn statistics_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(percentile(&[0.0, 10.0], 0.25), 2.5);
        assert!((linear_fit_r_squared(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
    }
}
