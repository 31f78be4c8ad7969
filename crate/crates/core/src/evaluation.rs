//! Item-level AUC evaluation and unfairness diagnostics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, SolveReport, WeightScheme};
use crate::error::{Error, Result};
use crate::ingest::{popularity, remove_entries};
use crate::matrix::{apply_projection, gram, sym_eig, DenseMatrix, Projection, SymEigResult};

/// Mann-Whitney AUC with midranks for tied scores.
///
/// Returns `None` when either class is empty.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end share their mean.
        let midrank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count();
        positive_rank_sum += midrank * positives as f64;
        start = end;
    }
    let u = positive_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// `X P'` where `P'` is `P` with its diagonal set to zero, so the score of
/// item `j` never sees column `j` of `X`.
pub fn zero_diagonal_scores(x: &DenseMatrix, p: &Projection) -> Result<DenseMatrix> {
    let d = p.dim();
    if x.cols() != d {
        return Err(Error::DimensionMismatch {
            what: "projection dimension",
            expected: x.cols(),
            found: d,
        });
    }
    let pm = p.matrix().as_slice();
    let mut out = vec![0.0; x.rows() * d];
    for i in 0..x.rows() {
        let target = &mut out[i * d..(i + 1) * d];
        for (l, &xil) in x.row(i).iter().enumerate() {
            if xil == 0.0 {
                continue;
            }
            for (j, (t, &plj)) in target.iter_mut().zip(&pm[l * d..(l + 1) * d]).enumerate() {
                if j != l {
                    *t += xil * plj;
                }
            }
        }
    }
    DenseMatrix::new(x.rows(), d, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoPositives,
    NoNegatives,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedItem {
    pub item: usize,
    pub reason: ExclusionReason,
}

/// Popularity-grouped summaries attached to an evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub groups: usize,
    pub diagonal_by_popularity: Vec<f64>,
    /// Mean AUC of the scored items in each popularity group.
    pub auc_by_popularity: Vec<Option<f64>>,
    /// Per item; `None` for all-zero columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components_to_half_error: Option<Vec<Option<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub algorithm: String,
    pub weight_scheme: Option<WeightScheme>,
    pub rank: usize,
    /// Items that have both classes, ascending.
    pub scored_items: Vec<usize>,
    /// AUC of each entry of `scored_items`.
    pub per_item_auc: Vec<f64>,
    pub mean_auc: f64,
    pub excluded_items: Vec<ExcludedItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_report: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl EvalReport {
    pub fn with_tags(
        mut self,
        dataset: &str,
        algorithm: &str,
        scheme: Option<WeightScheme>,
    ) -> Self {
        self.dataset = dataset.to_string();
        self.algorithm = algorithm.to_string();
        self.weight_scheme = scheme;
        self
    }

    pub fn auc_of(&self, item: usize) -> Option<f64> {
        self.scored_items
            .binary_search(&item)
            .ok()
            .map(|k| self.per_item_auc[k])
    }

    /// Tidy rows: one `mean_auc` row, plus one `auc` row per scored item when
    /// `per_item` is set. `item_ids` replaces column indices in the output.
    pub fn tidy_rows(
        &self,
        alpha: Option<f64>,
        per_item: bool,
        item_ids: Option<&[String]>,
    ) -> Vec<TidyRow> {
        let base = TidyRow {
            dataset: self.dataset.clone(),
            algorithm: self.algorithm.clone(),
            weight_scheme: self.weight_scheme,
            r: self.rank,
            alpha,
            item_id: None,
            metric: "mean_auc".into(),
            value: self.mean_auc,
        };
        let mut rows = vec![base.clone()];
        if per_item {
            for (&j, &a) in self.scored_items.iter().zip(&self.per_item_auc) {
                let id = item_ids.map_or_else(|| j.to_string(), |ids| ids[j].clone());
                rows.push(TidyRow {
                    item_id: Some(id),
                    metric: "auc".into(),
                    value: a,
                    ..base.clone()
                });
            }
        }
        rows
    }
}

/// Item AUC-ROC of `P` on `X`: labels `X_.j > 0`, scores column `j` of `X P'`.
pub fn item_auc(x: &DenseMatrix, p: &Projection) -> Result<EvalReport> {
    item_auc_with_labels(x, x, p)
}

/// Like [`item_auc`] with scores computed from `scores_from` and labels taken
/// from `labels_from`.
pub fn item_auc_with_labels(
    scores_from: &DenseMatrix,
    labels_from: &DenseMatrix,
    p: &Projection,
) -> Result<EvalReport> {
    if scores_from.shape() != labels_from.shape() {
        return Err(Error::DimensionMismatch {
            what: "label matrix columns",
            expected: scores_from.cols(),
            found: labels_from.cols(),
        });
    }
    let scores = zero_diagonal_scores(scores_from, p)?;
    let mut scored_items = Vec::new();
    let mut per_item_auc = Vec::new();
    let mut excluded_items = Vec::new();
    for j in 0..p.dim() {
        let labels: Vec<bool> = labels_from.column(j).into_iter().map(|v| v > 0.0).collect();
        match auc(&scores.column(j), &labels) {
            Some(a) => {
                scored_items.push(j);
                per_item_auc.push(a);
            }
            None => {
                let reason = if labels.iter().any(|&l| l) {
                    ExclusionReason::NoNegatives
                } else {
                    ExclusionReason::NoPositives
                };
                excluded_items.push(ExcludedItem { item: j, reason });
            }
        }
    }
    if per_item_auc.is_empty() {
        return Err(Error::NoScorableItems);
    }
    let mean_auc = per_item_auc.iter().sum::<f64>() / per_item_auc.len() as f64;
    Ok(EvalReport {
        dataset: String::new(),
        algorithm: String::new(),
        weight_scheme: None,
        rank: p.rank(),
        scored_items,
        per_item_auc,
        mean_auc,
        excluded_items,
        solve_report: None,
        diagnostics: None,
    })
}

/// `||X_.j - (X P)_.j||^2 / ||X_.j||^2`.
pub fn normalized_item_error(x: &DenseMatrix, p: &Projection, j: usize) -> Result<f64> {
    if j >= x.cols() {
        return Err(Error::DimensionMismatch {
            what: "item index bound",
            expected: x.cols(),
            found: j,
        });
    }
    let w = x.column_norms_sq()[j];
    if w == 0.0 {
        return Err(Error::ZeroColumn { column: j });
    }
    let xp = apply_projection(x, p)?;
    let err: f64 = (0..x.rows())
        .map(|i| (x.get(i, j) - xp.get(i, j)).powi(2))
        .sum();
    Ok(err / w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub item: usize,
    pub ranks: Vec<usize>,
    pub normalized_errors: Vec<f64>,
}

/// Per-item reconstruction errors along the nested vanilla-PCA sequence,
/// all read from one eigendecomposition of `X^T X`.
#[derive(Clone, Debug)]
pub struct VanillaErrorProfile {
    eig: SymEigResult,
    column_norms_sq: Vec<f64>,
    frobenius_sq: f64,
}

impl VanillaErrorProfile {
    pub fn new(x: &DenseMatrix) -> Result<Self> {
        Ok(VanillaErrorProfile {
            eig: sym_eig(&gram(x))?,
            column_norms_sq: x.column_norms_sq(),
            frobenius_sq: x.frobenius_norm_sq(),
        })
    }

    pub fn dim(&self) -> usize {
        self.column_norms_sq.len()
    }

    fn check_item(&self, j: usize) -> Result<f64> {
        let w = *self
            .column_norms_sq
            .get(j)
            .ok_or(Error::DimensionMismatch {
                what: "item index bound",
                expected: self.dim(),
                found: j,
            })?;
        if w == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        Ok(w)
    }

    /// Normalized error of item `j` for every rank `0..=d`.
    pub fn item_errors(&self, j: usize) -> Result<Vec<f64>> {
        let w = self.check_item(j)?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d + 1);
        let mut captured = 0.0;
        out.push(1.0);
        for k in 0..d {
            let v = self.eig.eigenvectors.get(j, k);
            captured += self.eig.eigenvalues[k].max(0.0) * v * v;
            out.push(((w - captured) / w).max(0.0));
        }
        Ok(out)
    }

    pub fn error_curve(&self, j: usize, ranks: &[usize]) -> Result<ErrorCurve> {
        let all = self.item_errors(j)?;
        let normalized_errors = ranks
            .iter()
            .map(|&r| {
                all.get(r).copied().ok_or(Error::RankOutOfRange {
                    rank: r,
                    max: self.dim(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(ErrorCurve {
            item: j,
            ranks: ranks.to_vec(),
            normalized_errors,
        })
    }

    /// Smallest rank whose normalized error for item `j` is at most 1/2.
    pub fn components_to_half_error(&self, j: usize) -> Result<usize> {
        let errors = self.item_errors(j)?;
        Ok(errors
            .iter()
            .position(|&e| e <= 0.5)
            .expect("full rank reconstructs every column"))
    }

    /// `||X - X P_r||_F^2` for `r = 0..=d`.
    pub fn total_errors(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim() + 1);
        let mut remaining = self.frobenius_sq;
        out.push(remaining);
        for &l in &self.eig.eigenvalues {
            remaining -= l.max(0.0);
            out.push(remaining.max(0.0));
        }
        out
    }
}

pub fn components_to_half_error(x: &DenseMatrix, j: usize) -> Result<usize> {
    VanillaErrorProfile::new(x)?.components_to_half_error(j)
}

/// [`components_to_half_error`] for every item; `None` marks zero columns.
pub fn components_to_half_error_all(x: &DenseMatrix) -> Result<Vec<Option<usize>>> {
    let profile = VanillaErrorProfile::new(x)?;
    Ok((0..x.cols())
        .map(|j| profile.components_to_half_error(j).ok())
        .collect())
}

/// Item indices sorted by descending popularity and cut into `groups`
/// contiguous bins. Bin sizes differ by at most one and the larger bins are
/// the less popular ones.
pub fn popularity_groups(popularity: &[f64], groups: usize) -> Result<Vec<Vec<usize>>> {
    let d = popularity.len();
    if groups < 2 || groups > d {
        return Err(Error::InvalidArgument(format!(
            "cannot split {d} items into {groups} popularity groups"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| popularity[b].total_cmp(&popularity[a]));
    let base = d / groups;
    let extra = d % groups;
    let mut bins = Vec::with_capacity(groups);
    let mut start = 0;
    for g in 0..groups {
        let size = base + usize::from(g >= groups - extra);
        bins.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(bins)
}

/// Mean diagonal entry of `P` in each popularity group, most popular first.
pub fn diagonal_by_popularity(
    p: &Projection,
    popularity: &[f64],
    groups: usize,
) -> Result<Vec<f64>> {
    if popularity.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            what: "popularity vector length",
            expected: p.dim(),
            found: popularity.len(),
        });
    }
    let diag = p.diagonal();
    Ok(popularity_groups(popularity, groups)?
        .iter()
        .map(|bin| bin.iter().map(|&j| diag[j]).sum::<f64>() / bin.len() as f64)
        .collect())
}

/// Mean AUC over the scored items of each popularity group.
pub fn auc_by_popularity(
    report: &EvalReport,
    popularity: &[f64],
    groups: usize,
) -> Result<Vec<Option<f64>>> {
    Ok(popularity_groups(popularity, groups)?
        .iter()
        .map(|bin| {
            let values: Vec<f64> = bin.iter().filter_map(|&j| report.auc_of(j)).collect();
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        })
        .collect())
}

/// Fills in popularity diagnostics for a report produced from `x` and `p`.
pub fn attach_diagnostics(
    report: &mut EvalReport,
    x: &DenseMatrix,
    p: &Projection,
    groups: usize,
    half_error: bool,
) -> Result<()> {
    let pop = popularity(x);
    report.diagnostics = Some(Diagnostics {
        groups,
        diagonal_by_popularity: diagonal_by_popularity(p, &pop, groups)?,
        auc_by_popularity: auc_by_popularity(report, &pop, groups)?,
        components_to_half_error: if half_error {
            Some(components_to_half_error_all(x)?)
        } else {
            None
        },
    });
    Ok(())
}

/// Evaluates every algorithm at every rank. Output is algorithm-major in the
/// given order, then by rank in the given order.
pub fn rank_sweep(
    x: &DenseMatrix,
    algorithms: &[Algorithm],
    ranks: &[usize],
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::with_capacity(algorithms.len() * ranks.len());
    for alg in algorithms {
        let model = alg.model(x)?;
        for &r in ranks {
            let (p, solve) = model.projection(r)?;
            let mut report = item_auc(x, &p)?.with_tags("", alg.name(), alg.weight_scheme());
            report.rank = r;
            report.solve_report = Some(solve);
            out.push(report);
        }
    }
    Ok(out)
}

pub const DEFAULT_ROBUSTNESS_RANK: usize = 106;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub alpha: f64,
    pub mean_auc: f64,
    pub report: EvalReport,
}

/// Seed of the corruption for one `alpha`; independent of evaluation order.
pub fn cell_seed(seed: u64, alpha: f64) -> u64 {
    let mut z = seed ^ alpha.to_bits().rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// For each `alpha`, zeroes that fraction of the nonzero entries, fits on the
/// corrupted matrix and scores it against labels from the intact `x`.
pub fn robustness_sweep(
    x: &DenseMatrix,
    algorithm: &Algorithm,
    r: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<Vec<RobustnessPoint>> {
    alphas
        .iter()
        .map(|&alpha| {
            let corrupted = remove_entries(x, alpha, cell_seed(seed, alpha))?;
            let (p, solve) = algorithm.fit(&corrupted, r)?;
            let mut report = item_auc_with_labels(&corrupted, x, &p)?.with_tags(
                "",
                algorithm.name(),
                algorithm.weight_scheme(),
            );
            report.rank = r;
            report.solve_report = Some(solve);
            Ok(RobustnessPoint {
                alpha,
                mean_auc: report.mean_auc,
                report,
            })
        })
        .collect()
}

/// One row of plot-ready long-format output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub dataset: String,
    pub algorithm: String,
    pub weight_scheme: Option<WeightScheme>,
    pub r: usize,
    pub alpha: Option<f64>,
    pub item_id: Option<String>,
    pub metric: String,
    pub value: f64,
}

pub fn write_tidy_csv<W: Write>(writer: W, rows: &[TidyRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset",
        "algorithm",
        "weight_scheme",
        "r",
        "alpha",
        "item_id",
        "metric",
        "value",
    ])?;
    for row in rows {
        w.write_record([
            row.dataset.clone(),
            row.algorithm.clone(),
            row.weight_scheme
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
            row.r.to_string(),
            row.alpha.map(crate::io::format_f64).unwrap_or_default(),
            row.item_id.clone().unwrap_or_default(),
            row.metric.clone(),
            crate::io::format_f64(row.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}
