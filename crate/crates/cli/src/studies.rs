//! Monte Carlo studies over simulated designs.

use log::info;
use matfactor::estimators::{
    common_components, estimate_factors, estimate_loadings, recursive_path, Method, RecursiveMode,
};
use matfactor::evaluation::{
    common_component_mse, mean_sd, normality_comparison, ols_slope, rate_slope_check, space_distance,
    NormalityComparison, NormalityReport, RatePoint, Side,
};
use matfactor::io::{format_float, Table};
use matfactor::replicate::run_replications;
use matfactor::selection::{select_factor_numbers, vectorized_er, Demean};
use matfactor::simulate::{generate_dataset, SimulationSpec};
use matfactor::Result;

use crate::config::ExperimentConfig;

/// Mean and standard deviation over successful replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let (mean, sd) = mean_sd(values);
        Summary { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDistances {
    pub method: Method,
    pub row: Summary,
    pub col: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseEntry {
    pub method: Method,
    pub k: usize,
    pub mse: Summary,
}

/// One grid point of a simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCell {
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub n: usize,
    pub failed: usize,
    pub distances: Vec<MethodDistances>,
    pub mse: Vec<MseEntry>,
}

impl StudyCell {
    pub fn distances_for(&self, method: Method) -> Option<&MethodDistances> {
        self.distances.iter().find(|d| d.method == method)
    }

    pub fn mse_for(&self, method: Method, k: usize) -> Option<Summary> {
        self.mse.iter().find(|m| m.method == method && m.k == k).map(|m| m.mse)
    }
}

struct CellReplication {
    distances: Vec<(f64, f64)>,
    /// `mse[k_index][method_index]`.
    mse: Vec<Vec<f64>>,
}

fn factor_numbers(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut ks = vec![cfg.study.k1];
    ks.extend(cfg.study.misspecified.iter().copied().filter(|k| *k != cfg.study.k1));
    ks
}

fn study_cell(cfg: &ExperimentConfig, spec: &SimulationSpec, with_mse: bool) -> Result<StudyCell> {
    let methods = &cfg.methods;
    let ks = if with_mse { factor_numbers(cfg) } else { Vec::new() };
    let reps = run_replications(cfg.replications, cfg.seed, |seed| {
        let data = generate_dataset::<f64>(&spec.clone().with_seed(seed))?;
        let x = &data.observations;
        let mut distances = Vec::with_capacity(methods.len());
        for m in methods {
            let fit = estimate_loadings(x, spec.k1, spec.k2, *m)?;
            distances.push((
                space_distance(fit.r.view(), data.true_r.view())?,
                space_distance(fit.c.view(), data.true_c.view())?,
            ));
        }
        let mut mse = Vec::with_capacity(ks.len());
        for &k in &ks {
            let (k1, k2) = if k == cfg.study.k1 { (spec.k1, spec.k2) } else { (k, k) };
            let mut row = Vec::with_capacity(methods.len());
            for m in methods {
                let fit = estimate_loadings(x, k1, k2, *m)?;
                let factors = estimate_factors(x, &fit)?;
                let common = common_components(&fit, &factors)?;
                row.push(common_component_mse(common.view(), data.true_common.view())?);
            }
            mse.push(row);
        }
        Ok(CellReplication { distances, mse })
    })?;
    let results: Vec<&CellReplication> = reps.values().collect();
    let distances = methods
        .iter()
        .enumerate()
        .map(|(mi, m)| MethodDistances {
            method: *m,
            row: Summary::of(&results.iter().map(|r| r.distances[mi].0).collect::<Vec<_>>()),
            col: Summary::of(&results.iter().map(|r| r.distances[mi].1).collect::<Vec<_>>()),
        })
        .collect();
    let mut mse = Vec::new();
    for (ki, k) in ks.iter().enumerate() {
        for (mi, m) in methods.iter().enumerate() {
            mse.push(MseEntry {
                method: *m,
                k: *k,
                mse: Summary::of(&results.iter().map(|r| r.mse[ki][mi]).collect::<Vec<_>>()),
            });
        }
    }
    Ok(StudyCell { t: spec.t, p1: spec.p1, p2: spec.p2, n: results.len(), failed: reps.failed.len(), distances, mse })
}

fn run_grid(cfg: &ExperimentConfig, with_mse: bool) -> Result<Vec<StudyCell>> {
    cfg.study
        .grid
        .iter()
        .map(|&n| {
            let spec = cfg.study.spec_at(n);
            info!("simulating T={} p1={} p2={} ({} replications)", spec.t, spec.p1, spec.p2, cfg.replications);
            study_cell(cfg, &spec, with_mse)
        })
        .collect()
}

fn dims(t: usize, p1: usize, p2: usize) -> Vec<String> {
    vec![t.to_string(), p1.to_string(), p2.to_string()]
}

/// Loading-space distances and common-component errors on the study grid.
pub fn simulation_study(cfg: &ExperimentConfig) -> Result<Vec<StudyCell>> {
    run_grid(cfg, true)
}

/// `distances.csv` and `common_mse.csv`.
pub fn simulation_tables(cells: &[StudyCell]) -> (Table, Table) {
    let mut dist = Table::new(&["T", "p1", "p2", "method", "side", "mean", "sd", "n", "failed"]);
    let mut mse = Table::new(&["T", "p1", "p2", "method", "k", "mean", "sd", "n", "failed"]);
    for c in cells {
        for d in &c.distances {
            for (side, s) in [("row", d.row), ("col", d.col)] {
                let mut row = dims(c.t, c.p1, c.p2);
                row.extend([
                    d.method.to_string(),
                    side.to_string(),
                    format_float(s.mean),
                    format_float(s.sd),
                    c.n.to_string(),
                    c.failed.to_string(),
                ]);
                dist.push(row);
            }
        }
        for m in &c.mse {
            let mut row = dims(c.t, c.p1, c.p2);
            row.extend([
                m.method.to_string(),
                m.k.to_string(),
                format_float(m.mse.mean),
                format_float(m.mse.sd),
                c.n.to_string(),
                c.failed.to_string(),
            ]);
            mse.push(row);
        }
    }
    (dist, mse)
}

/// Fitted log-log slope of one method and side.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSlope {
    pub method: Method,
    pub side: Side,
    pub slope: f64,
    /// Slope through the last two grid points only.
    pub last_two_slope: f64,
}

fn log_root(p: &RatePoint, side: Side) -> f64 {
    let other = match side {
        Side::Row => p.p2,
        Side::Column => p.p1,
    };
    ((p.t * other) as f64).sqrt().ln()
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Row => "row",
        Side::Column => "col",
    }
}

/// Mean distances on the grid with fitted convergence slopes.
pub fn rate_study(cfg: &ExperimentConfig) -> Result<(Vec<StudyCell>, Vec<RateSlope>)> {
    let cells = run_grid(cfg, false)?;
    let mut slopes = Vec::new();
    for m in &cfg.methods {
        for side in [Side::Row, Side::Column] {
            let points: Vec<RatePoint> = cells
                .iter()
                .map(|c| {
                    let d = c.distances_for(*m).expect("every method is evaluated");
                    RatePoint {
                        t: c.t,
                        p1: c.p1,
                        p2: c.p2,
                        mean_distance: if side == Side::Row { d.row.mean } else { d.col.mean },
                    }
                })
                .collect();
            let slope = rate_slope_check(&points, side)?;
            let tail = &points[points.len() - 2..];
            let last_two_slope = ols_slope(
                &tail.iter().map(|p| log_root(p, side)).collect::<Vec<_>>(),
                &tail.iter().map(|p| p.mean_distance.ln()).collect::<Vec<_>>(),
            )?;
            slopes.push(RateSlope { method: *m, side, slope, last_two_slope });
        }
    }
    Ok((cells, slopes))
}

/// `rate_plot.csv` and `rate_slope.csv`.
pub fn rate_tables(cells: &[StudyCell], slopes: &[RateSlope]) -> (Table, Table) {
    let mut plot = Table::new(&["method", "side", "T", "p1", "p2", "log_root_n", "mean_distance", "log_mean_distance"]);
    for s in slopes {
        for c in cells {
            let d = c.distances_for(s.method).expect("every method is evaluated");
            let mean = if s.side == Side::Row { d.row.mean } else { d.col.mean };
            let p = RatePoint { t: c.t, p1: c.p1, p2: c.p2, mean_distance: mean };
            let mut row = vec![s.method.to_string(), side_name(s.side).to_string()];
            row.extend(dims(c.t, c.p1, c.p2));
            row.extend([format_float(log_root(&p, s.side)), format_float(mean), format_float(mean.ln())]);
            plot.push(row);
        }
    }
    let mut fit = Table::new(&["method", "side", "slope", "last_two_slope"]);
    for s in slopes {
        fit.push(vec![
            s.method.to_string(),
            side_name(s.side).to_string(),
            format_float(s.slope),
            format_float(s.last_two_slope),
        ]);
    }
    (plot, fit)
}

/// Selection outcome frequencies of one selector on one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionCell {
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    /// `iter_er` or `ver`.
    pub selector: &'static str,
    pub demean: Demean,
    pub n: usize,
    pub exact: f64,
    /// Share of replications with no side above and some side below the truth.
    pub under: f64,
    pub over: f64,
    pub mean_iterations: f64,
}

#[derive(Clone, Copy)]
enum Outcome {
    Exact,
    Under,
    Over,
}

fn classify(hat: (usize, usize), truth: (usize, usize)) -> Outcome {
    if hat == truth {
        Outcome::Exact
    } else if hat.0 <= truth.0 && hat.1 <= truth.1 {
        Outcome::Under
    } else {
        Outcome::Over
    }
}

fn frequencies(outcomes: &[Outcome]) -> (f64, f64, f64) {
    let n = outcomes.len().max(1) as f64;
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
    (
        count(|o| matches!(o, Outcome::Exact)),
        count(|o| matches!(o, Outcome::Under)),
        count(|o| matches!(o, Outcome::Over)),
    )
}

/// Iterative eigenvalue-ratio and vectorized eigenvalue-ratio selection
/// frequencies on the study grid.
pub fn selection_study(cfg: &ExperimentConfig) -> Result<Vec<SelectionCell>> {
    let demeans = if cfg.study.demeans.is_empty() { vec![cfg.selection.demean] } else { cfg.study.demeans.clone() };
    let mut cells = Vec::new();
    for &n in &cfg.study.grid {
        let spec = cfg.study.spec_at(n);
        let truth = (spec.k1, spec.k2);
        info!("selecting factor numbers at T={} p1={} p2={}", spec.t, spec.p1, spec.p2);
        let reps = run_replications(cfg.replications, cfg.seed, |seed| {
            let data = generate_dataset::<f64>(&spec.clone().with_seed(seed))?;
            let x = &data.observations;
            let mut out = Vec::with_capacity(2 * demeans.len());
            for &d in &demeans {
                let mut sel = cfg.selection;
                sel.demean = d;
                let r = select_factor_numbers(x, &sel)?;
                out.push((classify((r.k1_hat, r.k2_hat), truth), r.iterations));
                let total = vectorized_er(x, cfg.study.ver_k_max, d)?;
                let ver = match total.cmp(&(truth.0 * truth.1)) {
                    std::cmp::Ordering::Equal => Outcome::Exact,
                    std::cmp::Ordering::Less => Outcome::Under,
                    std::cmp::Ordering::Greater => Outcome::Over,
                };
                out.push((ver, 0));
            }
            Ok(out)
        })?;
        let results: Vec<&Vec<(Outcome, usize)>> = reps.values().collect();
        for (di, &d) in demeans.iter().enumerate() {
            for (offset, selector) in [(0, "iter_er"), (1, "ver")] {
                let idx = 2 * di + offset;
                let outcomes: Vec<Outcome> = results.iter().map(|r| r[idx].0).collect();
                let (exact, under, over) = frequencies(&outcomes);
                let iters: Vec<f64> = results.iter().map(|r| r[idx].1 as f64).collect();
                cells.push(SelectionCell {
                    t: spec.t,
                    p1: spec.p1,
                    p2: spec.p2,
                    selector,
                    demean: d,
                    n: outcomes.len(),
                    exact,
                    under,
                    over,
                    mean_iterations: mean_sd(&iters).0,
                });
            }
        }
    }
    Ok(cells)
}

/// `selection.csv`.
pub fn selection_table(cells: &[SelectionCell], c: f64) -> Table {
    let mut t =
        Table::new(&["T", "p1", "p2", "selector", "demean", "c", "n", "exact", "under", "over", "mean_iterations"]);
    for s in cells {
        let mut row = dims(s.t, s.p1, s.p2);
        row.extend([
            s.selector.to_string(),
            s.demean.to_string(),
            if s.selector == "ver" { format_float(0.0) } else { format_float(c) },
            s.n.to_string(),
            format_float(s.exact),
            format_float(s.under),
            format_float(s.over),
            format_float(s.mean_iterations),
        ]);
        t.push(row);
    }
    t
}

/// Standardized row-loading errors of both estimators.
pub fn normality_study(cfg: &ExperimentConfig) -> Result<NormalityComparison> {
    let spec = cfg.normality.spec(cfg.seed);
    info!("normality diagnostic at T={} p1={} p2={} ({} replications)", spec.t, spec.p1, spec.p2, cfg.replications);
    normality_comparison(&spec, cfg.normality.row, cfg.replications, cfg.normality.alignment)
}

/// `normality_samples.csv` and `normality_summary.csv`.
pub fn normality_tables(cmp: &NormalityComparison, base_seed: u64) -> (Table, Table) {
    let reports: [(&str, &NormalityReport); 2] = [("initial", &cmp.initial), ("projected", &cmp.projected)];
    let k = cmp.projected.standardized_samples.first().map_or(0, |s| s.standardized.len());
    let mut header = vec!["estimator".to_string(), "replication".to_string(), "seed".to_string()];
    header.extend((1..=k).map(|j| format!("z{j}")));
    let mut samples = Table::new(&header);
    let mut summary = Table::new(&[
        "estimator",
        "alignment",
        "n",
        "ks_statistic",
        "ks_critical",
        "passes",
        "mean",
        "sd",
        "skewness",
        "excess_kurtosis",
        "failed",
    ]);
    for (name, rep) in reports {
        for s in &rep.standardized_samples {
            let mut row = vec![name.to_string(), s.seed.wrapping_sub(base_seed).to_string(), s.seed.to_string()];
            row.extend(s.standardized.iter().map(|v| format_float(*v)));
            samples.push(row);
        }
        let (mean, sd) = mean_sd(&rep.pooled);
        summary.push(vec![
            name.to_string(),
            format!("{:?}", rep.alignment).to_ascii_lowercase(),
            rep.pooled.len().to_string(),
            format_float(rep.ks_statistic),
            format_float(rep.ks_critical),
            rep.passes_ks().to_string(),
            format_float(mean),
            format_float(sd),
            format_float(rep.skewness),
            format_float(rep.excess_kurtosis),
            rep.failed.to_string(),
        ]);
    }
    (samples, summary)
}

/// Mean distance to the truth at each step of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub row: Summary,
    pub col: Summary,
}

/// Step 1 is the initial estimator; step `s + 1` projects with step `s`.
pub fn recursion_study(cfg: &ExperimentConfig) -> Result<Vec<TraceStep>> {
    let n = *cfg.study.grid.last().expect("validated non-empty grid");
    let spec = cfg.study.spec_at(n);
    let steps = cfg.study.steps;
    info!("recursion trace at T={} p1={} p2={}", spec.t, spec.p1, spec.p2);
    let reps = run_replications(cfg.replications, cfg.seed, |seed| {
        let data = generate_dataset::<f64>(&spec.clone().with_seed(seed))?;
        let path = recursive_path(&data.observations, spec.k1, spec.k2, steps, RecursiveMode::Simultaneous)?;
        path.iter()
            .map(|p| {
                Ok((space_distance(p.r.view(), data.true_r.view())?, space_distance(p.c.view(), data.true_c.view())?))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let results: Vec<&Vec<(f64, f64)>> = reps.values().collect();
    Ok((0..steps)
        .map(|s| TraceStep {
            step: s + 1,
            row: Summary::of(&results.iter().map(|r| r[s].0).collect::<Vec<_>>()),
            col: Summary::of(&results.iter().map(|r| r[s].1).collect::<Vec<_>>()),
        })
        .collect())
}

/// `recursive_trace.csv`.
pub fn recursion_table(trace: &[TraceStep]) -> Table {
    let mut t = Table::new(&["step", "mean_distance_r", "sd_distance_r", "mean_distance_c", "sd_distance_c"]);
    for s in trace {
        t.push(vec![
            s.step.to_string(),
            format_float(s.row.mean),
            format_float(s.row.sd),
            format_float(s.col.mean),
            format_float(s.col.sd),
        ]);
    }
    t
}
