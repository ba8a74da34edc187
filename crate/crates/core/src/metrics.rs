//! Evaluation of multi-label protein predictions against closed truth
//! annotations: protein-centric Fmax, information-weighted Smin, micro
//! pair-level AUPR, information-weighted Fmax/AUPR, and precision-recall
//! curve emission.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::ontology::IcWeights;

/// Evaluation grid default: 100 thresholds 0.01, 0.02, …, 1.00.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(|i| f64::from(i) / 100.0).collect()
}

/// Aligned prediction/truth matrices with the term vocabulary, optional
/// information-content weights, and the threshold grid to sweep.
///
/// Rows of `predictions` and `truth` describe the same proteins in the same
/// order; columns follow `terms`. Truth must already be closed under
/// ancestor propagation.
pub struct EvalInput<'a> {
    predictions: &'a DenseMatrix,
    truth: &'a DenseMatrix,
    terms: &'a [String],
    ic: Option<&'a IcWeights>,
    grid: Vec<f64>,
}

impl<'a> EvalInput<'a> {
    /// Bundle inputs with the default 100-point grid.
    pub fn new(
        predictions: &'a DenseMatrix,
        truth: &'a DenseMatrix,
        terms: &'a [String],
        ic: Option<&'a IcWeights>,
    ) -> Result<Self> {
        Self::with_grid(predictions, truth, terms, ic, default_grid())
    }

    /// Bundle inputs with a caller-supplied threshold grid.
    pub fn with_grid(
        predictions: &'a DenseMatrix,
        truth: &'a DenseMatrix,
        terms: &'a [String],
        ic: Option<&'a IcWeights>,
        grid: Vec<f64>,
    ) -> Result<Self> {
        if predictions.shape() != truth.shape() {
            return Err(Error::shape(format!(
                "predictions are {:?} but truth is {:?}",
                predictions.shape(),
                truth.shape()
            )));
        }
        if terms.len() != predictions.cols() {
            return Err(Error::shape(format!(
                "{} terms for {} prediction columns",
                terms.len(),
                predictions.cols()
            )));
        }
        if predictions
            .values()
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::Config(
                "predictions must lie in [0, 1]".into(),
            ));
        }
        if truth.values().iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::Config(
                "truth entries must be exactly 0 or 1".into(),
            ));
        }
        if grid.is_empty() {
            return Err(Error::Config("threshold grid is empty".into()));
        }
        if grid
            .iter()
            .any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0)
        {
            return Err(Error::Config(
                "thresholds must lie in [0, 1]".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "thresholds must be strictly increasing".into(),
            ));
        }
        Ok(EvalInput { predictions, truth, terms, ic, grid })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn n_proteins(&self) -> usize {
        self.predictions.rows()
    }

    fn n_terms(&self) -> usize {
        self.predictions.cols()
    }

    /// Per-column information content, required by the weighted metrics.
    fn column_ic(&self) -> Result<Vec<f64>> {
        let ic = self.ic.ok_or_else(|| {
            Error::Config("this metric requires information-content weights".into())
        })?;
        self.terms
            .iter()
            .map(|t| {
                ic.get(t).ok_or_else(|| {
                    Error::Config(format!("no information content for scored term {t}"))
                })
            })
            .collect()
    }
}

/// One precision/recall point of the protein-centric sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Protein-centric precision/recall at every grid threshold, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// CSV rendering with a `tau,precision,recall` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,precision,recall\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6}\n",
                p.tau, p.precision, p.recall
            ));
        }
        out
    }
}

/// Precision/recall at one threshold plus how many proteins were covered
/// (made at least one weighted prediction) there.
struct SweepPoint {
    tau: f64,
    precision: f64,
    recall: f64,
    covered: usize,
}

/// Protein-centric sweep shared by the Fmax family and the curve emission.
///
/// At each threshold, precision is averaged over proteins whose predicted
/// set carries positive weight there, and recall over proteins whose true
/// set carries positive weight (a threshold-independent population). With
/// unit weights this is the classic protein-centric convention; with
/// information weights every set membership is weighted by the term's IC.
fn protein_sweep(eval: &EvalInput, weights: &[f64]) -> Vec<SweepPoint> {
    let n = eval.n_proteins();
    let c = eval.n_terms();
    eval.grid
        .par_iter()
        .map(|&tau| {
            let mut covered = 0usize;
            let mut precision_sum = 0.0;
            let mut recall_population = 0usize;
            let mut recall_sum = 0.0;
            for r in 0..n {
                let pred = eval.predictions.row(r);
                let truth = eval.truth.row(r);
                let mut w_hit = 0.0;
                let mut w_pred = 0.0;
                let mut w_true = 0.0;
                for col in 0..c {
                    let is_pred = pred[col] >= tau;
                    let is_true = truth[col] == 1.0;
                    if is_pred {
                        w_pred += weights[col];
                    }
                    if is_true {
                        w_true += weights[col];
                    }
                    if is_pred && is_true {
                        w_hit += weights[col];
                    }
                }
                if w_pred > 0.0 {
                    covered += 1;
                    precision_sum += w_hit / w_pred;
                }
                if w_true > 0.0 {
                    recall_population += 1;
                    recall_sum += w_hit / w_true;
                }
            }
            let precision = if covered > 0 {
                precision_sum / covered as f64
            } else {
                0.0
            };
            let recall = if recall_population > 0 {
                recall_sum / recall_population as f64
            } else {
                0.0
            };
            SweepPoint { tau, precision, recall, covered }
        })
        .collect()
}

/// Require at least one annotated protein (positive truth weight) or the
/// protein-centric metrics are undefined.
fn require_annotated(eval: &EvalInput, weights: &[f64]) -> Result<()> {
    let any = (0..eval.n_proteins()).any(|r| {
        let truth = eval.truth.row(r);
        (0..eval.n_terms()).any(|c| truth[c] == 1.0 && weights[c] > 0.0)
    });
    if any {
        Ok(())
    } else {
        Err(Error::Config(
            "evaluation truth has no annotated protein".into(),
        ))
    }
}

fn best_f(points: &[SweepPoint]) -> (f64, f64) {
    let mut best = (0.0, points[0].tau);
    for p in points {
        let f = if p.covered > 0 && p.precision + p.recall > 0.0 {
            2.0 * p.precision * p.recall / (p.precision + p.recall)
        } else {
            0.0
        };
        if f > best.0 {
            best = (f, p.tau);
        }
    }
    best
}

/// Protein-centric maximum F-measure over the threshold grid.
///
/// Returns `(score, tau)`; threshold ties resolve to the lowest threshold.
pub fn fmax(eval: &EvalInput) -> Result<(f64, f64)> {
    let weights = vec![1.0; eval.n_terms()];
    require_annotated(eval, &weights)?;
    Ok(best_f(&protein_sweep(eval, &weights)))
}

/// Fmax with every (protein, term) membership weighted by the term's
/// information content.
pub fn weighted_fmax(eval: &EvalInput) -> Result<(f64, f64)> {
    let weights = eval.column_ic()?;
    require_annotated(eval, &weights)?;
    Ok(best_f(&protein_sweep(eval, &weights)))
}

/// Minimum semantic distance over the threshold grid.
///
/// At each threshold, remaining uncertainty is the mean (over every
/// evaluated protein) of the summed IC of true-but-unpredicted terms, and
/// misinformation the mean summed IC of predicted-but-false terms; the
/// distance is their Euclidean norm. Returns `(score, tau)`; ties resolve
/// to the lowest threshold.
pub fn smin(eval: &EvalInput) -> Result<(f64, f64)> {
    let weights = eval.column_ic()?;
    let n = eval.n_proteins();
    let c = eval.n_terms();
    if n == 0 {
        return Err(Error::Config("no proteins to evaluate".into()));
    }
    let scored: Vec<(f64, f64)> = eval
        .grid
        .par_iter()
        .map(|&tau| {
            let mut ru_total = 0.0;
            let mut mi_total = 0.0;
            for r in 0..n {
                let pred = eval.predictions.row(r);
                let truth = eval.truth.row(r);
                for col in 0..c {
                    let is_pred = pred[col] >= tau;
                    let is_true = truth[col] == 1.0;
                    if is_true && !is_pred {
                        ru_total += weights[col];
                    }
                    if is_pred && !is_true {
                        mi_total += weights[col];
                    }
                }
            }
            let ru = ru_total / n as f64;
            let mi = mi_total / n as f64;
            (tau, (ru * ru + mi * mi).sqrt())
        })
        .collect();
    let mut best = (f64::INFINITY, scored[0].0);
    for (tau, s) in scored {
        if s < best.0 {
            best = (s, tau);
        }
    }
    Ok((best.0, best.1))
}

/// Micro-averaged area under the precision-recall curve over all
/// (protein, term) pairs, with rectangular integration and equal scores
/// grouped so the result is invariant under strictly increasing rescoring.
pub fn aupr(eval: &EvalInput) -> Result<f64> {
    pair_aupr(eval, &vec![1.0; eval.n_terms()])
}

/// Micro AUPR with each (protein, term) pair weighted by the term's
/// information content.
pub fn weighted_aupr(eval: &EvalInput) -> Result<f64> {
    let weights = eval.column_ic()?;
    pair_aupr(eval, &weights)
}

fn pair_aupr(eval: &EvalInput, weights: &[f64]) -> Result<f64> {
    let n = eval.n_proteins();
    let c = eval.n_terms();
    let mut pairs: Vec<(f64, f64, bool)> = Vec::with_capacity(n * c);
    let mut positive_weight = 0.0;
    for r in 0..n {
        let pred = eval.predictions.row(r);
        let truth = eval.truth.row(r);
        for col in 0..c {
            let is_true = truth[col] == 1.0;
            pairs.push((pred[col], weights[col], is_true));
            if is_true {
                positive_weight += weights[col];
            }
        }
    }
    if positive_weight <= 0.0 {
        return Err(Error::Config(
            "area under the precision-recall curve needs at least one positive pair".into(),
        ));
    }
    pairs.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).expect("scores are finite"));

    let mut area = 0.0;
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let score = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == score {
            let (_, w, is_true) = pairs[i];
            if is_true {
                tp += w;
            } else {
                fp += w;
            }
            i += 1;
        }
        if tp + fp > 0.0 {
            let recall = tp / positive_weight;
            let precision = tp / (tp + fp);
            area += precision * (recall - prev_recall);
            prev_recall = recall;
        }
    }
    Ok(area)
}

/// Protein-centric precision/recall at every grid threshold. Thresholds
/// where no protein predicts anything report precision 0.
pub fn pr_curve(eval: &EvalInput) -> Result<PrCurve> {
    let weights = vec![1.0; eval.n_terms()];
    require_annotated(eval, &weights)?;
    let points = protein_sweep(eval, &weights)
        .into_iter()
        .map(|p| PrPoint { tau: p.tau, precision: p.precision, recall: p.recall })
        .collect();
    Ok(PrCurve { points })
}
