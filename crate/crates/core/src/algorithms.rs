//! Projection-finding algorithms: vanilla PCA, column-normalized PCA and
//! Item-Weighted PCA.
//!
//! Item-Weighted PCA maximizes `sum_j w_j <S_.j, (XP)_.j>` where `S` is the
//! sign matrix of `X`. The objective is linear in `P`: it equals `Tr(A P)`
//! with `A = (D S^T X + X^T S D) / 2` and `D = diag(w)`. Maximizing a linear
//! function over the fantope `{0 <= P <= I, tr(P) <= r}` attains its optimum
//! at an extreme point, and those are exactly the projections of rank at most
//! `r`. The extreme point is read off the eigendecomposition of `A`: take the
//! eigenvectors of the `min(r, #positive)` largest eigenvalues.
//!
//! The optional reconstruction-error constraint
//! `tr(X^T X) - tr(X^T X P) <= (1 + slack) E_r` is handled by bisection on its
//! Lagrange multiplier, each step being another fantope maximization of
//! `A + lambda X^T X`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{sign_of, SignMatrix};
use crate::matrix::{gram, sym_eig, DenseMatrix, Projection, SymEigResult};

/// Iteration budget (doubling plus bisection) of the constrained solver.
pub const BISECTION_MAX_ITER: usize = 100;

/// Stop bisecting once the error constraint is this close to tight,
/// relative to its bound.
pub const CONSTRAINT_RESIDUAL_TOL: f64 = 1e-6;

/// Threshold below which an eigenvalue of the objective matrix counts as
/// nonpositive: `1e-10 * max(1, ||A||_max)`.
pub fn positive_eigenvalue_threshold(a: &DenseMatrix) -> f64 {
    1e-10 * a.max_abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    InverseSignNorm,
    Proper,
    Interpolate,
    InterpolateText,
    InverseCount,
    Custom,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::InverseSignNorm => "inverse_sign_norm",
            WeightScheme::Proper => "proper",
            WeightScheme::Interpolate => "interpolate",
            WeightScheme::InterpolateText => "interpolate_text",
            WeightScheme::InverseCount => "inverse_count",
            WeightScheme::Custom => "custom",
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => WeightScheme::Uniform,
            "inverse_sign_norm" => WeightScheme::InverseSignNorm,
            "proper" => WeightScheme::Proper,
            "interpolate" => WeightScheme::Interpolate,
            "interpolate_text" => WeightScheme::InterpolateText,
            "inverse_count" => WeightScheme::InverseCount,
            "custom" => WeightScheme::Custom,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown weight scheme {other:?}"
                )))
            }
        })
    }
}

/// Nonnegative per-item weights, at least one of them positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    scheme: WeightScheme,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>, scheme: WeightScheme) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight {w} is not a finite nonnegative number"
            )));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidArgument("all weights are zero".into()));
        }
        Ok(WeightVector { weights, scheme })
    }

    pub fn uniform(d: usize) -> Self {
        WeightVector {
            weights: vec![1.0; d],
            scheme: WeightScheme::Uniform,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Same weights multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        WeightVector::new(self.weights.iter().map(|w| w * c).collect(), self.scheme)
    }
}

/// Split of the items into a popular and an unpopular block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemPartition {
    popular: Vec<usize>,
    unpopular: Vec<usize>,
}

impl ItemPartition {
    pub fn new(mut popular: Vec<usize>, mut unpopular: Vec<usize>) -> Result<Self> {
        popular.sort_unstable();
        unpopular.sort_unstable();
        if popular.is_empty() || unpopular.is_empty() {
            return Err(Error::InvalidArgument(
                "both item blocks must be nonempty".into(),
            ));
        }
        let d = popular.len() + unpopular.len();
        let mut seen = vec![false; d];
        for &j in popular.iter().chain(&unpopular) {
            if j >= d || seen[j] {
                return Err(Error::InvalidArgument(format!(
                    "item blocks must partition 0..{d}; offending index {j}"
                )));
            }
            seen[j] = true;
        }
        Ok(ItemPartition { popular, unpopular })
    }

    /// Items `0..d_p` popular, `d_p..d` unpopular.
    pub fn leading(d_p: usize, d: usize) -> Result<Self> {
        ItemPartition::new((0..d_p).collect(), (d_p..d).collect())
    }

    /// The `k` items with the largest popularity are popular (ties to the
    /// smaller index).
    pub fn top_k(popularity: &[f64], k: usize) -> Result<Self> {
        let mut order: Vec<usize> = (0..popularity.len()).collect();
        order.sort_by(|&a, &b| popularity[b].total_cmp(&popularity[a]).then(a.cmp(&b)));
        let (p, u) = order.split_at(k.min(order.len()));
        ItemPartition::new(p.to_vec(), u.to_vec())
    }

    pub fn popular(&self) -> &[usize] {
        &self.popular
    }

    pub fn unpopular(&self) -> &[usize] {
        &self.unpopular
    }

    pub fn dim(&self) -> usize {
        self.popular.len() + self.unpopular.len()
    }

    /// `true` at popular item indices.
    pub fn popular_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim()];
        for &j in &self.popular {
            mask[j] = true;
        }
        mask
    }

    /// Weight vector that is `w_p` on the popular block and `w_u` elsewhere.
    pub fn block_weights(&self, w_p: f64, w_u: f64, scheme: WeightScheme) -> Result<WeightVector> {
        let weights = self
            .popular_mask()
            .into_iter()
            .map(|p| if p { w_p } else { w_u })
            .collect();
        WeightVector::new(weights, scheme)
    }
}

/// Diagnostics from a fantope maximization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Value of the linear objective at the returned projection.
    pub objective_value: f64,
    pub achieved_rank: usize,
    /// Lagrange multiplier of the reconstruction-error constraint; 0 when
    /// unconstrained.
    pub multiplier: f64,
    /// Doubling and bisection steps of the constrained solver.
    pub iterations: usize,
    /// The eigenvalue at the cut ties with the next one, so the maximizer is
    /// not unique.
    pub degenerate_cut: bool,
}

fn check_rank(r: usize, d: usize) -> Result<()> {
    if r == 0 || r > d {
        return Err(Error::RankOutOfRange { rank: r, max: d });
    }
    Ok(())
}

/// Eigendecomposition of an objective matrix, kept so that projections for
/// many ranks can be read off one factorization.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    eig: SymEigResult,
    /// `Some(threshold)`: keep only eigenvalues above it (fantope rule).
    /// `None`: keep exactly `r` leading eigenvectors (PCA rule).
    positive_threshold: Option<f64>,
}

impl SpectralModel {
    /// PCA on `X`: leading eigenvectors of `X^T X`.
    pub fn pca(x: &DenseMatrix) -> Result<Self> {
        Ok(SpectralModel {
            eig: sym_eig(&gram(x))?,
            positive_threshold: None,
        })
    }

    /// Linear maximization of `Tr(A P)` over the rank-`r` fantope.
    pub fn fantope(a: &DenseMatrix) -> Result<Self> {
        let eig = sym_eig(a)?;
        Ok(SpectralModel {
            eig,
            positive_threshold: Some(positive_eigenvalue_threshold(a)),
        })
    }

    pub fn eigen(&self) -> &SymEigResult {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    /// Number of leading eigenvectors used for budget `r`.
    pub fn selected_rank(&self, r: usize) -> usize {
        match self.positive_threshold {
            None => r,
            Some(eps) => self.eig.eigenvalues[..r]
                .iter()
                .take_while(|&&l| l > eps)
                .count(),
        }
    }

    pub fn projection(&self, r: usize) -> Result<(Projection, SolveReport)> {
        let d = self.dim();
        check_rank(r, d)?;
        let k = self.selected_rank(r);
        let values = &self.eig.eigenvalues;
        let eps = self
            .positive_threshold
            .unwrap_or_else(|| 1e-10 * values.first().map_or(1.0, |v| v.abs().max(1.0)));
        let degenerate_cut =
            k >= 1 && k < d && values[k] > eps && (values[k - 1] - values[k]).abs() <= eps;
        let report = SolveReport {
            objective_value: values[..k].iter().sum(),
            achieved_rank: k,
            multiplier: 0.0,
            iterations: 0,
            degenerate_cut,
        };
        let projection = if k == d {
            Projection::identity(d)
        } else {
            self.eig.leading_projection(k)
        };
        Ok((projection, report))
    }
}

/// Leading-`r` principal subspace of `X`.
pub fn vanilla_pca(x: &DenseMatrix, r: usize) -> Result<Projection> {
    check_rank(r, x.cols())?;
    Ok(SpectralModel::pca(x)?.projection(r)?.0)
}

/// Column scale factors `1 / ||X_.j||`; zero columns get factor 1 when
/// `keep_zero_cols` is set and are an error otherwise.
pub fn column_unit_scales(x: &DenseMatrix, keep_zero_cols: bool) -> Result<Vec<f64>> {
    x.column_norms_sq()
        .into_iter()
        .enumerate()
        .map(|(j, n2)| {
            if n2 > 0.0 {
                Ok(1.0 / n2.sqrt())
            } else if keep_zero_cols {
                Ok(1.0)
            } else {
                Err(Error::ZeroColumn { column: j })
            }
        })
        .collect()
}

/// Vanilla PCA on `X` with unit-norm columns. The projection acts on the
/// original item coordinates.
pub fn column_normalized_pca(
    x: &DenseMatrix,
    r: usize,
    keep_zero_cols: bool,
) -> Result<Projection> {
    check_rank(r, x.cols())?;
    let scaled = x.scale_columns(&column_unit_scales(x, keep_zero_cols)?)?;
    vanilla_pca(&scaled, r)
}

/// `w_j = 1 / ||S_.j||_2`, zero for all-zero columns.
pub fn weights_inverse_sign_norm(s: &SignMatrix) -> WeightVector {
    let weights = s
        .matrix()
        .column_norms_sq()
        .into_iter()
        .map(|n2| if n2 > 0.0 { 1.0 / n2.sqrt() } else { 0.0 })
        .collect();
    // Built directly so that an all-zero matrix still yields a (zero) vector.
    WeightVector {
        weights,
        scheme: WeightScheme::InverseSignNorm,
    }
}

/// Squared Frobenius norms of the popular and unpopular column blocks.
pub fn block_norms_sq(x: &DenseMatrix, part: &ItemPartition) -> Result<(f64, f64)> {
    if part.dim() != x.cols() {
        return Err(Error::DimensionMismatch {
            what: "partition size",
            expected: x.cols(),
            found: part.dim(),
        });
    }
    let norms = x.column_norms_sq();
    let p: f64 = part.popular().iter().map(|&j| norms[j]).sum();
    let u: f64 = part.unpopular().iter().map(|&j| norms[j]).sum();
    Ok((p, u))
}

/// `w_j = ||X_p||_F^-2` on popular items, `||X_u||_F^-2` on unpopular ones.
pub fn weights_proper(x: &DenseMatrix, part: &ItemPartition) -> Result<WeightVector> {
    let (p, u) = block_norms_sq(x, part)?;
    if p == 0.0 {
        return Err(Error::EmptyBlock { block: "popular" });
    }
    if u == 0.0 {
        return Err(Error::EmptyBlock { block: "unpopular" });
    }
    part.block_weights(1.0 / p, 1.0 / u, WeightScheme::Proper)
}

fn check_counts(n_p: f64, n_u: f64) -> Result<()> {
    if !(n_p > 0.0 && n_u > 0.0 && n_p.is_finite() && n_u.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "users-per-item counts must be positive, got n_p = {n_p}, n_u = {n_u}"
        )));
    }
    Ok(())
}

/// `w_j = n_p^{-1/2}` on popular items, `n_u^{-1/2}` on unpopular ones: the
/// geometric mean of the vanilla (`1`) and column-normalized (`1/n`) weights.
pub fn weights_interpolate(part: &ItemPartition, n_p: f64, n_u: f64) -> Result<WeightVector> {
    check_counts(n_p, n_u)?;
    part.block_weights(
        1.0 / n_p.sqrt(),
        1.0 / n_u.sqrt(),
        WeightScheme::Interpolate,
    )
}

/// `w_j = sqrt(n_p)` / `sqrt(n_u)`, the alternative reading of the
/// interpolating weights, kept for comparison.
pub fn weights_interpolate_text(part: &ItemPartition, n_p: f64, n_u: f64) -> Result<WeightVector> {
    check_counts(n_p, n_u)?;
    part.block_weights(n_p.sqrt(), n_u.sqrt(), WeightScheme::InterpolateText)
}

/// `w_j = 1/n_p` / `1/n_u`.
pub fn weights_inverse_count(part: &ItemPartition, n_p: f64, n_u: f64) -> Result<WeightVector> {
    check_counts(n_p, n_u)?;
    part.block_weights(1.0 / n_p, 1.0 / n_u, WeightScheme::InverseCount)
}

/// Maximizes `Tr(A P)` over `{0 <= P <= I, tr(P) <= r}` and returns the
/// extreme-point maximizer.
pub fn fantope_linmax(a: &DenseMatrix, r: usize) -> Result<(Projection, SolveReport)> {
    if a.is_square() {
        check_rank(r, a.rows())?;
    }
    SpectralModel::fantope(a)?.projection(r)
}

/// `A = (D S^T X + X^T S D) / 2`, so that `Tr(A P)` is the item-weighted
/// objective for every symmetric `P`.
pub fn objective_matrix(x: &DenseMatrix, w: &WeightVector) -> Result<DenseMatrix> {
    let d = x.cols();
    if w.len() != d {
        return Err(Error::DimensionMismatch {
            what: "weight vector length",
            expected: d,
            found: w.len(),
        });
    }
    let s = sign_of(x);
    let s = s.matrix();
    // M = S^T X
    let mut m = vec![0.0; d * d];
    for i in 0..x.rows() {
        let xi = x.row(i);
        for (a, &sa) in s.row(i).iter().enumerate() {
            if sa == 0.0 {
                continue;
            }
            for (mab, &xb) in m[a * d..(a + 1) * d].iter_mut().zip(xi) {
                *mab += sa * xb;
            }
        }
    }
    let wv = w.weights();
    let mut out = vec![0.0; d * d];
    for a in 0..d {
        for b in a..d {
            let v = 0.5 * (wv[a] * m[a * d + b] + wv[b] * m[b * d + a]);
            out[a * d + b] = v;
            out[b * d + a] = v;
        }
    }
    DenseMatrix::new(d, d, out)
}

/// `sum_j w_j <S_.j, (X P)_.j>` evaluated directly.
pub fn item_weighted_objective(x: &DenseMatrix, w: &WeightVector, p: &Projection) -> Result<f64> {
    let xhat = crate::matrix::apply_projection(x, p)?;
    let s = sign_of(x);
    let s = s.matrix();
    let mut total = 0.0;
    for (j, &wj) in w.weights().iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        let dot: f64 = (0..x.rows()).map(|i| s.get(i, j) * xhat.get(i, j)).sum();
        total += wj * dot;
    }
    Ok(total)
}

pub fn item_weighted_pca(
    x: &DenseMatrix,
    w: &WeightVector,
    r: usize,
) -> Result<(Projection, SolveReport)> {
    check_rank(r, x.cols())?;
    let a = objective_matrix(x, w)?;
    fantope_linmax(&a, r)
}

/// Item-Weighted PCA subject to
/// `tr(X^T X) - tr(X^T X P) <= (1 + slack) E_r`, where `E_r` is the rank-`r`
/// vanilla PCA error. An infinite `slack` disables the constraint.
///
/// Returns the feasible extreme point with the smallest multiplier found.
pub fn item_weighted_pca_constrained(
    x: &DenseMatrix,
    w: &WeightVector,
    r: usize,
    slack: f64,
) -> Result<(Projection, SolveReport)> {
    check_rank(r, x.cols())?;
    if slack.is_nan() || slack < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "error slack must be >= 0, got {slack}"
        )));
    }
    if slack.is_infinite() {
        return item_weighted_pca(x, w, r);
    }
    let a = objective_matrix(x, w)?;
    let g = gram(x);
    let trace_g = g.trace();
    let gram_eig = sym_eig(&g)?;
    let e_r = (trace_g - gram_eig.eigenvalues[..r].iter().sum::<f64>()).max(0.0);
    let bound = (1.0 + slack) * e_r;
    let feasibility_tol = 1e-9 * trace_g.max(1.0);

    let linearized_error = |p: &Projection| trace_g - trace_product(&g, p);
    let solve = |lambda: f64| -> Result<(Projection, SolveReport, f64)> {
        let shifted = if lambda == 0.0 {
            a.clone()
        } else {
            let data = a
                .as_slice()
                .iter()
                .zip(g.as_slice())
                .map(|(ai, gi)| ai + lambda * gi)
                .collect();
            DenseMatrix::new(a.rows(), a.cols(), data)?
        };
        let (p, mut report) = fantope_linmax(&shifted, r)?;
        report.objective_value = trace_product(&a, &p);
        report.multiplier = lambda;
        let err = linearized_error(&p);
        Ok((p, report, err))
    };

    let (p0, report0, err0) = solve(0.0)?;
    if err0 <= bound + feasibility_tol {
        return Ok((p0, report0));
    }

    let mut iterations = 0;
    let mut lo = 0.0;
    let mut hi = (a.max_abs() / g.max_abs().max(f64::MIN_POSITIVE)).max(1.0);
    let mut best = loop {
        iterations += 1;
        let (p, report, err) = solve(hi)?;
        if err <= bound + feasibility_tol {
            break (p, report, err);
        }
        if iterations >= BISECTION_MAX_ITER {
            return Err(Error::BisectionStall {
                iterations,
                violation: err - bound,
            });
        }
        lo = hi;
        hi *= 2.0;
    };
    while iterations < BISECTION_MAX_ITER
        && bound - best.2 > CONSTRAINT_RESIDUAL_TOL * bound.max(1.0)
        && hi - lo > f64::EPSILON * hi
    {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let candidate = solve(mid)?;
        if candidate.2 <= bound + feasibility_tol {
            hi = mid;
            best = candidate;
        } else {
            lo = mid;
        }
    }
    let (p, mut report, _) = best;
    report.iterations = iterations;
    Ok((p, report))
}

/// `Tr(M P) = sum_k u_k^T M u_k` over the basis of `P`.
pub fn trace_product(m: &DenseMatrix, p: &Projection) -> f64 {
    let (d, r) = (p.dim(), p.rank());
    let u = p.basis();
    let mut total = 0.0;
    for k in 0..r {
        for i in 0..d {
            let ui = u[i * r + k];
            if ui == 0.0 {
                continue;
            }
            let mu: f64 = (0..d).map(|j| m.get(i, j) * u[j * r + k]).sum();
            total += ui * mu;
        }
    }
    total
}

/// Which projection-finding algorithm to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    Vanilla,
    ColumnNormalized { keep_zero_cols: bool },
    ItemWeighted { weights: WeightRule },
}

/// How Item-Weighted PCA obtains its weights from the matrix it is fitted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    Uniform,
    InverseSignNorm,
    Fixed(WeightVector),
}

impl WeightRule {
    pub fn resolve(&self, x: &DenseMatrix) -> Result<WeightVector> {
        match self {
            WeightRule::Uniform => Ok(WeightVector::uniform(x.cols())),
            WeightRule::InverseSignNorm => Ok(weights_inverse_sign_norm(&sign_of(x))),
            WeightRule::Fixed(w) => {
                if w.len() != x.cols() {
                    return Err(Error::DimensionMismatch {
                        what: "weight vector length",
                        expected: x.cols(),
                        found: w.len(),
                    });
                }
                Ok(w.clone())
            }
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        match self {
            WeightRule::Uniform => WeightScheme::Uniform,
            WeightRule::InverseSignNorm => WeightScheme::InverseSignNorm,
            WeightRule::Fixed(w) => w.scheme(),
        }
    }
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Vanilla => "vanilla",
            Algorithm::ColumnNormalized { .. } => "colnorm",
            Algorithm::ItemWeighted { .. } => "iwpca",
        }
    }

    /// Weight scheme tag, `None` for the PCA baselines.
    pub fn weight_scheme(&self) -> Option<WeightScheme> {
        match self {
            Algorithm::ItemWeighted { weights } => Some(weights.scheme()),
            _ => None,
        }
    }

    /// Factorizes the algorithm's objective on `x` once; every rank is then a
    /// prefix of the same eigenbasis.
    pub fn model(&self, x: &DenseMatrix) -> Result<SpectralModel> {
        match self {
            Algorithm::Vanilla => SpectralModel::pca(x),
            Algorithm::ColumnNormalized { keep_zero_cols } => {
                SpectralModel::pca(&x.scale_columns(&column_unit_scales(x, *keep_zero_cols)?)?)
            }
            Algorithm::ItemWeighted { weights } => {
                SpectralModel::fantope(&objective_matrix(x, &weights.resolve(x)?)?)
            }
        }
    }

    pub fn fit(&self, x: &DenseMatrix, r: usize) -> Result<(Projection, SolveReport)> {
        check_rank(r, x.cols())?;
        self.model(x)?.projection(r)
    }
}
