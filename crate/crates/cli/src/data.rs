//! Commands that work on a panel file.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use matfactor::estimators::{estimate_factors, estimate_loadings, LoadingPair, Method};
use matfactor::evaluation::{
    faar_predict, rolling_validate, space_distance, FaarModelSpec, FaarPrediction, RollingReport,
};
use matfactor::io::{
    factors_table, format_float, load_panel, loadings_table, read_loadings, save_panel, IdMaps, Panel, Table,
};
use matfactor::linalg::varimax;
use matfactor::selection::{select_factor_numbers, SelectionResult};
use matfactor::series::{FactorSeries, MatrixSeries};
use matfactor::simulate::{generate_dataset, planted_target, SimulatedDataset};
use matfactor::{Error, Result};
use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Mixed into the run seed for the target noise stream.
const TARGET_STREAM: u64 = 0x7461_7267_6574;

/// Method used by single-method commands: `projected` when listed,
/// otherwise the first listed method.
pub fn primary_method(cfg: &ExperimentConfig) -> Method {
    if cfg.methods.contains(&Method::Projected) {
        Method::Projected
    } else {
        cfg.methods[0]
    }
}

pub fn load_configured_panel(cfg: &ExperimentConfig) -> Result<Panel> {
    let path = cfg
        .panel
        .path
        .as_ref()
        .ok_or_else(|| Error::Config("no panel file given (use --input or [panel] path)".into()))?;
    info!("loading {} panel {}", cfg.panel.format, path.display());
    load_panel(path, cfg.panel.format)
}

/// Planted loadings to compare an estimate against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    /// Row loading CSV, relative to the truth file.
    pub r: PathBuf,
    pub c: PathBuf,
    pub tolerance: f64,
}

impl TruthFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut t: TruthFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        t.r = base.join(&t.r);
        t.c = base.join(&t.c);
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub row_distance: f64,
    pub col_distance: f64,
    pub tolerance: f64,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.row_distance <= self.tolerance && self.col_distance <= self.tolerance
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["side", "distance", "tolerance", "passed"]);
        for (side, d) in [("row", self.row_distance), ("col", self.col_distance)] {
            t.push(vec![
                side.to_string(),
                format_float(d),
                format_float(self.tolerance),
                (d <= self.tolerance).to_string(),
            ]);
        }
        t
    }
}

pub struct EstimateOutput {
    pub loadings: LoadingPair<f64>,
    pub factors: FactorSeries<f64>,
    pub selection: Option<SelectionResult>,
    pub verification: Option<Verification>,
    /// File name and contents of every table to write.
    pub tables: Vec<(String, Table)>,
}

/// Fits loadings and factors on the configured panel.
pub fn estimate(cfg: &ExperimentConfig, truth: Option<&Path>) -> Result<EstimateOutput> {
    let panel = load_configured_panel(cfg)?;
    let x = &panel.series;
    let (selection, k1, k2) = match (cfg.estimate.k1, cfg.estimate.k2) {
        (Some(k1), Some(k2)) => (None, k1, k2),
        (None, None) => {
            let sel = select_factor_numbers(x, &cfg.selection)?;
            info!("selected factor numbers ({}, {})", sel.k1_hat, sel.k2_hat);
            let (k1, k2) = (sel.k1_hat, sel.k2_hat);
            (Some(sel), k1, k2)
        }
        _ => return Err(Error::Config("set both estimate.k1 and estimate.k2 or neither".into())),
    };
    let method = primary_method(cfg);
    let loadings = estimate_loadings(x, k1, k2, method)?;
    let factors = estimate_factors(x, &loadings)?;

    let mut tables = vec![
        ("loadings_R.csv".to_string(), loadings_table(loadings.r.matrix(), &panel.ids.rows)?),
        ("loadings_C.csv".to_string(), loadings_table(loadings.c.matrix(), &panel.ids.cols)?),
        ("factors.csv".to_string(), factors_table(&factors, &panel.ids.periods)),
    ];
    let mut eig = Table::new(&["side", "index", "eigenvalue"]);
    for (side, vals) in [("row", &loadings.eigvals_row), ("col", &loadings.eigvals_col)] {
        for (i, v) in vals.iter().enumerate() {
            eig.push(vec![side.to_string(), (i + 1).to_string(), format_float(*v)]);
        }
    }
    tables.push(("eigenvalues.csv".to_string(), eig));
    if let Some(sel) = &selection {
        let mut t = Table::new(&["k1", "k2", "iterations", "converged"]);
        t.push(vec![
            sel.k1_hat.to_string(),
            sel.k2_hat.to_string(),
            sel.iterations.to_string(),
            sel.converged.to_string(),
        ]);
        tables.push(("selection.csv".to_string(), t));
    }
    if cfg.estimate.varimax {
        let (iters, tol) = (cfg.estimate.varimax_max_iter, cfg.estimate.varimax_tol);
        let r = varimax(loadings.r.view(), iters, tol)?;
        let c = varimax(loadings.c.view(), iters, tol)?;
        tables.push(("loadings_R_varimax.csv".to_string(), loadings_table(&r, &panel.ids.rows)?));
        tables.push(("loadings_C_varimax.csv".to_string(), loadings_table(&c, &panel.ids.cols)?));
    }
    let verification = match truth {
        Some(path) => {
            let truth = TruthFile::load(path)?;
            let (_, r) = read_loadings(&truth.r)?;
            let (_, c) = read_loadings(&truth.c)?;
            let v = Verification {
                row_distance: space_distance(loadings.r.view(), r.view())?,
                col_distance: space_distance(loadings.c.view(), c.view())?,
                tolerance: truth.tolerance,
            };
            tables.push(("verify.csv".to_string(), v.table()));
            Some(v)
        }
        None => None,
    };
    Ok(EstimateOutput { loadings, factors, selection, verification, tables })
}

/// Rolling validation of the primary method on the configured panel.
pub fn rolling(cfg: &ExperimentConfig) -> Result<(Method, RollingReport)> {
    let panel = load_configured_panel(cfg)?;
    let r = &cfg.rolling;
    let method = primary_method(cfg);
    let report = rolling_validate(&panel.series, r.period_length, r.bandwidth, r.k1, r.k2, method)?;
    Ok((method, report))
}

/// `rolling_summary.csv`.
pub fn rolling_summary_table(cfg: &ExperimentConfig, method: Method, report: &RollingReport) -> Table {
    let r = &cfg.rolling;
    let mut t = Table::new(&[
        "method",
        "period_length",
        "bandwidth",
        "k1",
        "k2",
        "n_periods",
        "mean_mse",
        "mean_rho",
        "mean_v",
    ]);
    t.push(vec![
        method.to_string(),
        r.period_length.to_string(),
        r.bandwidth.to_string(),
        r.k1.to_string(),
        r.k2.to_string(),
        report.periods.len().to_string(),
        format_float(report.mean_mse),
        format_float(report.mean_rho),
        format_float(report.mean_v),
    ]);
    t
}

fn id_index(ids: &[String], id: &str, axis: &str) -> Result<usize> {
    ids.iter().position(|s| s == id).ok_or_else(|| Error::InvalidInput(format!("{axis} id {id:?} not in the panel")))
}

/// The target series, the panel its factors come from, and the own row.
pub fn faar_inputs(cfg: &ExperimentConfig, panel: &Panel) -> Result<(Array1<f64>, MatrixSeries<f64>, usize)> {
    let f = &cfg.faar;
    if let Some(path) = &f.target_path {
        let table = Table::read(path)?;
        let t_col =
            table.column("t").ok_or_else(|| Error::InvalidInput(format!("{}: missing column t", path.display())))?;
        let values = table.floats("value")?;
        let mut y = Array1::from_elem(panel.series.len(), f64::NAN);
        for (row, v) in table.rows.iter().zip(values) {
            y[id_index(&panel.ids.periods, row[t_col].trim(), "period")?] = v;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Incomplete {
                count: y.iter().filter(|v| !v.is_finite()).count(),
                first: "target periods missing or non-finite".into(),
            });
        }
        let own = match &f.own_row {
            Some(id) => id_index(&panel.ids.rows, id, "row")?,
            None => 0,
        };
        return Ok((y, panel.series.clone(), own));
    }
    let (row_id, col_id) = match (&f.target_row, &f.target_col) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::Config("faar needs target_row and target_col, or target_path".into())),
    };
    let r = id_index(&panel.ids.rows, row_id, "row")?;
    let c = id_index(&panel.ids.cols, col_id, "column")?;
    let data = panel.series.view();
    let y = data.index_axis(Axis(2), c).index_axis(Axis(1), r).to_owned();
    let keep: Vec<usize> = (0..panel.series.cols()).filter(|j| *j != c).collect();
    if keep.is_empty() {
        return Err(Error::Dimension("panel has no columns besides the target".into()));
    }
    let rest = MatrixSeries::new(data.select(Axis(2), &keep))?;
    Ok((y, rest, r))
}

/// Models 1–3 plus model 4 for every configured method.
pub fn faar_models(cfg: &ExperimentConfig) -> Vec<FaarModelSpec> {
    let (k1, k2) = (cfg.faar.k1, cfg.faar.k2);
    let mut models = vec![FaarModelSpec::model1(), FaarModelSpec::model2(k2), FaarModelSpec::model3(k1 * k2)];
    models.extend(cfg.methods.iter().map(|m| FaarModelSpec::model4(k1, k2, *m)));
    models
}

pub fn faar(cfg: &ExperimentConfig) -> Result<(Panel, Vec<(FaarModelSpec, FaarPrediction)>)> {
    let panel = load_configured_panel(cfg)?;
    let (y, factors_panel, own) = faar_inputs(cfg, &panel)?;
    let mut out = Vec::new();
    for spec in faar_models(cfg) {
        info!("forecasting with {}", spec.label());
        let pred = faar_predict(y.view(), &factors_panel, own, &spec, cfg.faar.window)?;
        out.push((spec, pred));
    }
    Ok((panel, out))
}

/// `faar.csv` and `faar_predictions.csv`.
pub fn faar_tables(
    cfg: &ExperimentConfig,
    periods: &[String],
    results: &[(FaarModelSpec, FaarPrediction)],
) -> (Table, Table) {
    let mut summary = Table::new(&["model", "label", "k1", "k2", "window", "n_predictions", "mae"]);
    let mut preds = Table::new(&["label", "origin", "prediction", "actual"]);
    for (spec, p) in results {
        summary.push(vec![
            spec.model_id.to_string(),
            spec.label(),
            spec.k1.to_string(),
            spec.k2.to_string(),
            cfg.faar.window.to_string(),
            p.predictions.len().to_string(),
            format_float(p.mean_abs_error),
        ]);
        for ((o, pv), a) in p.origins.iter().zip(&p.predictions).zip(&p.actual) {
            preds.push(vec![spec.label(), periods[*o].clone(), format_float(*pv), format_float(*a)]);
        }
    }
    (summary, preds)
}

pub struct Generated {
    pub dataset: SimulatedDataset<f64>,
    pub target: Option<Array1<f64>>,
}

/// Draws a synthetic panel and writes it with its planted truth into `dir`:
/// `panel.csv`, `truth_R.csv`, `truth_C.csv`, `truth_factors.csv`,
/// `truth.toml` and, if configured, `target.csv`.
pub fn generate(cfg: &ExperimentConfig, dir: &Path) -> Result<Generated> {
    let spec = cfg.generate.spec.clone().unwrap_or_else(|| cfg.study.spec_at(cfg.study.grid[0])).with_seed(cfg.seed);
    let data = generate_dataset::<f64>(&spec)?;
    let ids = IdMaps::positional(spec.t, spec.p1, spec.p2);
    save_panel(&dir.join("panel.csv"), &data.observations, Some(&ids), cfg.panel.format)?;
    loadings_table(&data.true_r, &ids.rows)?.write(&dir.join("truth_R.csv"))?;
    loadings_table(&data.true_c, &ids.cols)?.write(&dir.join("truth_C.csv"))?;
    factors_table(&data.true_factors, &ids.periods).write(&dir.join("truth_factors.csv"))?;
    let truth = TruthFile { r: "truth_R.csv".into(), c: "truth_C.csv".into(), tolerance: cfg.generate.tolerance };
    let truth_path = dir.join("truth.toml");
    fs::write(&truth_path, toml::to_string(&truth).expect("truth file serializes"))
        .map_err(|e| Error::io(&truth_path, e))?;
    let target = match &cfg.generate.target {
        Some(t) => {
            let y = planted_target(&data.true_factors, t, cfg.seed ^ TARGET_STREAM)?;
            let mut table = Table::new(&["t", "value"]);
            for (id, v) in ids.periods.iter().zip(y.iter()) {
                table.push(vec![id.clone(), format_float(*v)]);
            }
            table.write(&dir.join("target.csv"))?;
            Some(y)
        }
        None => None,
    };
    Ok(Generated { dataset: data, target })
}
