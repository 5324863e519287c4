//! Weighted ROC/PR curves and the benchmark runners.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::anm::{infer_direction, CausalVerdict, InferenceConfig};
use crate::data::{add_awgn, Problem};
use crate::seed::Context;
use crate::{Direction, Error, PairedSample, Result};

pub const SCHEMA: &str = "causapair-curves-v1";

/// Default sample-size sweep.
pub const DEFAULT_NMAX_SWEEP: [usize; 5] = [50, 100, 200, 500, 2000];
/// Default SNR sweep in dB.
pub const DEFAULT_SNR_SWEEP: [f64; 9] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
pub const DEFAULT_REPETITIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDecision {
    pub problem_id: String,
    /// Larger means "forward".
    pub score: f64,
    /// Truth is forward.
    pub label: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// `None` for the initial point above every score.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
    /// Undefined while nothing is predicted positive.
    pub precision: Option<f64>,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub points: Vec<CurvePoint>,
    pub auc_roc: f64,
    pub auc_pr: f64,
}

/// Sweep thresholds over the distinct scores, highest first; a decision is
/// predicted positive when `score ≥ threshold`. Tied scores share one
/// point. ROC area is trapezoidal, PR area uses the right-constant step rule.
pub fn weighted_curves(decisions: &[ScoredDecision]) -> Result<CurveResult> {
    for d in decisions {
        if !d.score.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "score of {} is not finite",
                d.problem_id
            )));
        }
        if !(d.weight > 0.0 && d.weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight of {} must be positive",
                d.problem_id
            )));
        }
    }
    let positives = decisions.iter().filter(|d| d.label).count();
    let negatives = decisions.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    let pos_mass: f64 = decisions.iter().filter(|d| d.label).map(|d| d.weight).sum();
    let neg_mass: f64 = decisions
        .iter()
        .filter(|d| !d.label)
        .map(|d| d.weight)
        .sum();

    let mut order: Vec<&ScoredDecision> = decisions.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = vec![CurvePoint {
        threshold: None,
        fpr: 0.0,
        tpr: 0.0,
        precision: None,
        recall: 0.0,
    }];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let t = order[i].score;
        while i < order.len() && order[i].score == t {
            if order[i].label {
                tp += order[i].weight;
            } else {
                fp += order[i].weight;
            }
            i += 1;
        }
        let tpr = tp / pos_mass;
        points.push(CurvePoint {
            threshold: Some(t),
            fpr: fp / neg_mass,
            tpr,
            precision: Some(tp / (tp + fp)),
            recall: tpr,
        });
    }

    let mut auc_roc = 0.0;
    let mut auc_pr = 0.0;
    for w in points.windows(2) {
        auc_roc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
        if let Some(p) = w[1].precision {
            auc_pr += (w[1].recall - w[0].recall) * p;
        }
    }
    Ok(CurveResult {
        points,
        auc_roc,
        auc_pr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Residual HSIC difference.
    #[serde(rename = "C")]
    Hsic,
    /// Aggregate HSIC sensitivity difference.
    #[serde(rename = "Cs")]
    Sensitivity,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Hsic, Method::Sensitivity];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hsic => "C",
            Method::Sensitivity => "Cs",
        }
    }

    pub fn score(self, verdict: &CausalVerdict) -> f64 {
        match self {
            Method::Hsic => verdict.score_c,
            Method::Sensitivity => verdict.score_cs,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which variables receive noise in [`noise_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    #[default]
    Both,
    Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Benchmark,
    NoiseSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub method: Method,
    pub n_max: Option<usize>,
    pub snr_db: Option<f64>,
    pub repetition: usize,
    pub evaluated: usize,
    pub excluded: usize,
    pub curve: CurveResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub method: Method,
    pub n_max: Option<usize>,
    pub snr_db: Option<f64>,
    pub mean_auc_roc: f64,
    pub mean_auc_pr: f64,
    pub repetitions: usize,
    /// Failed inferences summed over repetitions.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub n_max: Option<usize>,
    pub snr_db: Option<f64>,
    pub repetition: usize,
    pub problem_id: String,
    pub message: String,
}

/// Output of [`run_benchmark`] and [`noise_sweep`]. Curves are ordered by
/// (method, sweep value, repetition); summaries by (method, sweep value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub kind: SweepKind,
    pub seed: u64,
    pub curves: Vec<CurveRecord>,
    pub summary: Vec<SummaryRecord>,
    pub failures: Vec<Failure>,
}

impl SweepReport {
    pub fn summary_for(&self, method: Method) -> impl Iterator<Item = &SummaryRecord> {
        self.summary.iter().filter(move |s| s.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per curve point.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv output failed: {e}"));
        w.write_record([
            "method",
            "n_max",
            "snr_db",
            "repetition",
            "threshold",
            "fpr",
            "tpr",
            "precision",
            "recall",
        ])
        .map_err(io)?;
        for rec in &self.curves {
            for p in &rec.curve.points {
                w.write_record([
                    rec.method.name().to_string(),
                    opt(rec.n_max),
                    opt(rec.snr_db),
                    rec.repetition.to_string(),
                    p.threshold
                        .map_or_else(|| "inf".to_string(), |t| t.to_string()),
                    p.fpr.to_string(),
                    p.tpr.to_string(),
                    opt(p.precision),
                    p.recall.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))
    }

    /// One row per summary cell.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv output failed: {e}"));
        w.write_record([
            "method",
            "n_max",
            "snr_db",
            "mean_auc_roc",
            "mean_auc_pr",
            "repetitions",
            "excluded",
        ])
        .map_err(io)?;
        for s in &self.summary {
            w.write_record([
                s.method.name().to_string(),
                opt(s.n_max),
                opt(s.snr_db),
                s.mean_auc_roc.to_string(),
                s.mean_auc_pr.to_string(),
                s.repetitions.to_string(),
                s.excluded.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn check_corpus(problems: &[Problem]) -> Result<()> {
    let positives = problems
        .iter()
        .filter(|p| p.truth == Direction::Forward)
        .count();
    let negatives = problems.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    Ok(())
}

/// Scores of one (sweep value, repetition) cell.
struct Cell {
    n_max: Option<usize>,
    snr_db: Option<f64>,
    repetition: usize,
    decisions: Vec<(usize, CausalVerdict)>,
}

fn build_report(
    kind: SweepKind,
    seed: u64,
    problems: &[Problem],
    cells: Vec<Cell>,
    failures: Vec<Failure>,
) -> Result<SweepReport> {
    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for method in Method::ALL {
        let mut group: Vec<&CurveRecord> = Vec::new();
        let mut records = Vec::with_capacity(cells.len());
        for cell in &cells {
            let decisions: Vec<ScoredDecision> = cell
                .decisions
                .iter()
                .map(|(k, v)| ScoredDecision {
                    problem_id: problems[*k].id.clone(),
                    score: method.score(v),
                    label: problems[*k].truth == Direction::Forward,
                    weight: problems[*k].weight,
                })
                .collect();
            records.push(CurveRecord {
                method,
                n_max: cell.n_max,
                snr_db: cell.snr_db,
                repetition: cell.repetition,
                evaluated: decisions.len(),
                excluded: problems.len() - decisions.len(),
                curve: weighted_curves(&decisions)?,
            });
        }
        // cells arrive grouped by sweep value, repetitions contiguous
        for rec in &records {
            let same = group
                .first()
                .is_some_and(|g| g.n_max == rec.n_max && g.snr_db == rec.snr_db);
            if !same && !group.is_empty() {
                summary.push(summarize(&group));
                group.clear();
            }
            group.push(rec);
        }
        if !group.is_empty() {
            summary.push(summarize(&group));
        }
        curves.extend(records);
    }
    Ok(SweepReport {
        schema: SCHEMA.to_string(),
        kind,
        seed,
        curves,
        summary,
        failures,
    })
}

fn summarize(group: &[&CurveRecord]) -> SummaryRecord {
    let reps = group.len() as f64;
    SummaryRecord {
        method: group[0].method,
        n_max: group[0].n_max,
        snr_db: group[0].snr_db,
        mean_auc_roc: group.iter().map(|r| r.curve.auc_roc).sum::<f64>() / reps,
        mean_auc_pr: group.iter().map(|r| r.curve.auc_pr).sum::<f64>() / reps,
        repetitions: group.len(),
        excluded: group.iter().map(|r| r.excluded).sum(),
    }
}

/// Runs inference over a cell; returns the verdicts and records failures.
fn run_cell<F>(
    problems: &[Problem],
    cell_key: (Option<usize>, Option<f64>, usize),
    failures: &mut Vec<Failure>,
    mut infer: F,
) -> Result<Cell>
where
    F: FnMut(usize, &Problem) -> Result<CausalVerdict>,
{
    let (n_max, snr_db, repetition) = cell_key;
    let mut decisions = Vec::with_capacity(problems.len());
    for (k, p) in problems.iter().enumerate() {
        match infer(k, p) {
            Ok(v) => decisions.push((k, v)),
            Err(e) => failures.push(Failure {
                n_max,
                snr_db,
                repetition,
                problem_id: p.id.clone(),
                message: e.to_string(),
            }),
        }
    }
    if decisions.is_empty() {
        return Err(Error::AllFailed(problems.len()));
    }
    Ok(Cell {
        n_max,
        snr_db,
        repetition,
        decisions,
    })
}

/// Sample-size sweep. Each (n_max, repetition, problem) cell is seeded as
/// `cfg.seed ⊕ hash("bench", n_max, repetition, problem_id)`.
pub fn run_benchmark(
    problems: &[Problem],
    cfg: &InferenceConfig,
    sweep: &[usize],
    repetitions: usize,
) -> Result<SweepReport> {
    check_corpus(problems)?;
    if sweep.is_empty() || repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need at least one n_max and one repetition".into(),
        ));
    }
    // Without subsampling a problem's verdict does not depend on the seed.
    let mut full_sample: HashMap<usize, std::result::Result<CausalVerdict, String>> =
        HashMap::new();
    let mut failures = Vec::new();
    let mut cells = Vec::new();
    for &n_max in sweep {
        for rep in 0..repetitions {
            let cell = run_cell(problems, (Some(n_max), None, rep), &mut failures, |k, p| {
                let cell_cfg = InferenceConfig {
                    n_max: Some(n_max),
                    seed: Context::new("bench")
                        .with_u64(n_max as u64)
                        .with_u64(rep as u64)
                        .with_str(&p.id)
                        .derive(cfg.seed),
                    ..cfg.clone()
                };
                if p.pair.len() <= n_max {
                    cell_cfg.validate()?;
                    let cached = full_sample.entry(k).or_insert_with(|| {
                        infer_direction(&p.pair, &cell_cfg).map_err(|e| e.to_string())
                    });
                    return cached.clone().map_err(Error::InvalidParameter);
                }
                infer_direction(&p.pair, &cell_cfg)
            })?;
            cells.push(cell);
        }
    }
    build_report(SweepKind::Benchmark, cfg.seed, problems, cells, failures)
}

/// SNR sweep: white Gaussian noise at each level is added before inference.
/// The noise draw for a (repetition, problem, variable) is shared across SNR
/// levels, so levels differ only in noise amplitude.
pub fn noise_sweep(
    problems: &[Problem],
    cfg: &InferenceConfig,
    snr_list: &[f64],
    repetitions: usize,
    target: NoiseTarget,
) -> Result<SweepReport> {
    check_corpus(problems)?;
    if snr_list.is_empty() || repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need at least one SNR and one repetition".into(),
        ));
    }
    let mut failures = Vec::new();
    let mut cells = Vec::new();
    for &snr in snr_list {
        for rep in 0..repetitions {
            let cell = run_cell(
                problems,
                (cfg.n_max, Some(snr), rep),
                &mut failures,
                |_, p| {
                    let noise_seed = |var: &str| {
                        Context::new("awgn")
                            .with_u64(rep as u64)
                            .with_str(&p.id)
                            .with_str(var)
                            .derive(cfg.seed)
                    };
                    let noisy_x = target == NoiseTarget::Both || p.truth == Direction::Backward;
                    let noisy_y = target == NoiseTarget::Both || p.truth == Direction::Forward;
                    let x = if noisy_x {
                        add_awgn(&p.pair.x, snr, noise_seed("x"))?
                    } else {
                        p.pair.x.clone()
                    };
                    let y = if noisy_y {
                        add_awgn(&p.pair.y, snr, noise_seed("y"))?
                    } else {
                        p.pair.y.clone()
                    };
                    let cell_cfg = InferenceConfig {
                        seed: Context::new("sweep")
                            .with_f64(snr)
                            .with_u64(rep as u64)
                            .with_str(&p.id)
                            .derive(cfg.seed),
                        ..cfg.clone()
                    };
                    infer_direction(&PairedSample::new(x, y)?, &cell_cfg)
                },
            )?;
            cells.push(cell);
        }
    }
    build_report(SweepKind::NoiseSweep, cfg.seed, problems, cells, failures)
}
