//! Single cases and epsilon sweeps.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::SweepConfig;
use super::rates::{fit_rate, predicted_exponent, RateFit};
use crate::diagnostics::{
    coercivity_suite, extract_interface, interface_distance, mean_radius, CoercivityReport, DiagnosticParams,
    EntropyReport, Polyline,
};
use crate::fields::Grid;
use crate::geometry::InterfaceState;
use crate::nsac::{well_prepared_data, EnergyLog, FieldState, Integrator, NsacParams};
use crate::potential::PotentialSpec;
use crate::reference::{SharpKind, SharpSolution};
use crate::snapshot::write_snapshot;
use crate::{Error, Result, Vec2};

/// Diagnostics of one case at one report time.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub t: f64,
    /// Length-weighted mean radius of the zero level line (circles only).
    pub radius_extracted: Option<f64>,
    /// Radius of the modified sharp interface (circles only).
    pub radius_sharp: Option<f64>,
    pub distance_modified: f64,
    pub distance_limit: f64,
    /// Against the flow with mobility `m`.
    pub modified: EntropyReport,
    /// Against the `m = 0` limit flow.
    pub limit: EntropyReport,
    pub coercivity: CoercivityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub epsilon: f64,
    pub mobility: f64,
    pub nodes: usize,
    pub rows: Vec<CaseRow>,
    pub energy: EnergyLog,
    pub snapshots: Vec<PathBuf>,
    pub dir: PathBuf,
}

/// Error columns aggregated over time and fitted across epsilon.
pub const SUMMARY_COLUMNS: [&str; 6] = [
    "vel_psi_modified",
    "entropy_modified",
    "distance_modified",
    "vel_psi_limit",
    "entropy_limit",
    "distance_limit",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub epsilon: f64,
    pub mobility: f64,
    /// `None` when the case failed.
    pub errors: Option<[f64; 6]>,
    pub message: String,
}

impl CaseSummary {
    /// Sup in time of each of [`SUMMARY_COLUMNS`].
    pub fn from_case(case: &CaseResult) -> Self {
        let mut sup = [0.0_f64; 6];
        for r in &case.rows {
            let vals = [
                r.modified.velocity_l2 + r.modified.psi_l1,
                (r.modified.e_total + r.modified.e_bulk).max(0.0).sqrt(),
                r.distance_modified,
                r.limit.velocity_l2 + r.limit.psi_l1,
                (r.limit.e_total + r.limit.e_bulk).max(0.0).sqrt(),
                r.distance_limit,
            ];
            for (s, v) in sup.iter_mut().zip(vals) {
                *s = s.max(v);
            }
        }
        Self {
            epsilon: case.epsilon,
            mobility: case.mobility,
            errors: Some(sup),
            message: String::from("ok"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFit {
    pub column: String,
    pub fit: Option<RateFit>,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub beta: f64,
    pub cases: Vec<CaseSummary>,
    pub fits: Vec<ColumnFit>,
}

impl SweepSummary {
    pub fn from_cases(beta: f64, cases: Vec<CaseSummary>) -> Self {
        let fits = SUMMARY_COLUMNS
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let pairs: Vec<(f64, f64)> = cases
                    .iter()
                    .filter_map(|s| s.errors.map(|e| (s.epsilon, e[c])))
                    .collect();
                let fit = match fit_rate(&pairs) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        warn!("no rate for {name}: {e}");
                        None
                    }
                };
                ColumnFit {
                    column: name.to_string(),
                    fit,
                    predicted: predicted_exponent(beta),
                }
            })
            .collect();
        Self { beta, cases, fits }
    }

    pub fn fit(&self, column: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.column == column).and_then(|f| f.fit.as_ref())
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| c.errors.is_none()).count()
    }

    /// Plain-text table of the cases and fitted exponents.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:>10} {:>10}", "eps", "m"));
        for c in SUMMARY_COLUMNS {
            out.push_str(&format!(" {c:>18}"));
        }
        out.push('\n');
        for case in &self.cases {
            out.push_str(&format!("{:>10.4e} {:>10.4e}", case.epsilon, case.mobility));
            match case.errors {
                Some(e) => e.iter().for_each(|v| out.push_str(&format!(" {v:>18.6e}"))),
                None => out.push_str(&format!(" failed: {}", case.message)),
            }
            out.push('\n');
        }
        out.push_str(&format!("\npredicted exponent min(1 - beta/2, beta) = {:.4}\n", predicted_exponent(self.beta)));
        for f in &self.fits {
            match &f.fit {
                Some(fit) => out.push_str(&format!(
                    "{:>18}: exponent {:>8.4}  residual {:.2e}  ({} points)\n",
                    f.column,
                    fit.exponent,
                    fit.residual,
                    fit.pairs.len()
                )),
                None => out.push_str(&format!("{:>18}: no fit\n", f.column)),
            }
        }
        out
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e)
}

/// Periodic images of the contour vertices nearest to the interface.
fn localise(lines: &[Polyline], iface: &InterfaceState, grid: &Grid) -> Vec<Polyline> {
    lines
        .iter()
        .map(|l| Polyline {
            points: l.points.iter().map(|x| iface.local_position(grid, x)).collect(),
            closed: l.closed,
        })
        .collect()
}

fn case_dir(root: &Path, epsilon: f64) -> PathBuf {
    root.join(format!("eps_{epsilon:.6e}"))
}

fn row_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "radius_extracted", "radius_sharp", "distance_modified", "distance_limit"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for prefix in ["mod", "lim"] {
        for c in &EntropyReport::COLUMNS[1..] {
            h.push(format!("{prefix}_{c}"));
        }
    }
    h.push("unit_coercivity".into());
    h
}

fn row_record(r: &CaseRow) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(String::new, fmt);
    let mut rec = vec![
        fmt(r.t),
        opt(r.radius_extracted),
        opt(r.radius_sharp),
        fmt(r.distance_modified),
        fmt(r.distance_limit),
    ];
    for rep in [&r.modified, &r.limit] {
        rec.extend(rep.values()[1..].iter().map(|v| fmt(*v)));
    }
    rec.push(if r.coercivity.unit_items_passed() { "pass" } else { "fail" }.into());
    rec
}

/// Diagnostics of `state` against the modified flow `sol`.
pub fn evaluate(state: &FieldState, sol: &SharpSolution, params: &DiagnosticParams) -> Result<CaseRow> {
    let grid = *state.grid();
    let limit = sol.limit();
    let iface_m = sol.as_interface_state(state.t)?;
    let iface_l = limit.as_interface_state(state.t)?;
    let lines = extract_interface(&state.phi, 0.0)?;
    let distance = |iface: &InterfaceState| -> f64 {
        interface_distance(&localise(&lines, iface, &grid), iface).unwrap_or(f64::INFINITY)
    };
    let (radius_extracted, radius_sharp) = match iface_m {
        InterfaceState::Circle { center, radius } => {
            (mean_radius(&localise(&lines, &iface_m, &grid), &center).ok(), Some(radius))
        }
        _ => (None, None),
    };
    Ok(CaseRow {
        t: state.t,
        radius_extracted,
        radius_sharp,
        distance_modified: distance(&iface_m),
        distance_limit: distance(&iface_l),
        modified: crate::diagnostics::relative_entropy(state, sol, params)?,
        limit: crate::diagnostics::relative_entropy(state, &limit, params)?,
        coercivity: coercivity_suite(state, sol, params)?,
    })
}

/// Integrates one case with `m = m0 eps^beta` from well-prepared data and
/// evaluates the diagnostics at every report time. Rows are written to
/// `<dir>/report.csv` as they are produced, so a failing case keeps its
/// partial output.
pub fn run_case(config: &SweepConfig, epsilon: f64, out_root: &Path) -> Result<CaseResult> {
    let potential = PotentialSpec::default();
    let mobility = config.mobility(epsilon);
    let grid = config.grid(epsilon)?;
    let dt = NsacParams::default_dt(&grid, epsilon, mobility, &potential);
    let params = NsacParams::new(epsilon, mobility, dt, config.sweep.t_end, potential, grid)?;
    let delta = config.sweep.delta;
    let sol = SharpSolution::new(config.sharp_kind(), mobility, &potential, delta)?;
    sol.check_window(config.sweep.t_end)?;
    let diag = DiagnosticParams::new(epsilon, delta, potential)?;

    let iface = sol.as_interface_state(0.0)?;
    let background = sol.sharp_velocity(&Vec2::zeros(), 0.0)?;
    let initial = well_prepared_data(&iface, &params, &|_| background, 2.0 * delta)?;

    let dir = case_dir(out_root, epsilon);
    fs::create_dir_all(&dir)?;
    let mut writer = csv::Writer::from_path(dir.join("report.csv")).map_err(csv_err)?;
    writer.write_record(row_header()).map_err(csv_err)?;
    writer.flush()?;

    info!(
        "case eps = {epsilon}, m = {mobility:.4e}, grid {}x{}, dt = {dt:.3e}",
        grid.nx(),
        grid.ny()
    );
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let every = config.sweep.snapshot_every;
    let times = config.report_times();
    let integrator = Integrator::new(params);
    let outcome = integrator.run(&initial, &times, |state| {
        let row = evaluate(state, &sol, &diag)?;
        writer.write_record(row_record(&row)).map_err(csv_err)?;
        writer.flush()?;
        if every > 0 && rows.len() % every == 0 {
            let path = dir.join(format!("snap_{:04}.snap", rows.len()));
            write_snapshot(&path, state)?;
            snapshots.push(path);
        }
        rows.push(row);
        Ok(())
    });
    drop(writer);
    let (_, energy) = outcome?;
    write_energy_csv(&dir.join("energy.csv"), &energy)?;
    Ok(CaseResult {
        epsilon,
        mobility,
        nodes: grid.nx(),
        rows,
        energy,
        snapshots,
        dir,
    })
}

pub fn write_energy_csv(path: &Path, log: &EnergyLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "dt", "energy", "increase", "tolerance"]).map_err(csv_err)?;
    for r in &log.records {
        w.write_record([fmt(r.t), fmt(r.dt), fmt(r.energy), fmt(r.increase), fmt(r.tolerance)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every epsilon of the configuration on `config.sweep.workers` threads
/// and writes `summary.csv`, `rates.csv`, `summary.txt` and the effective
/// configuration to `out_root`. Failed cases are reported in the summary.
pub fn run_sweep(config: &SweepConfig, out_root: &Path) -> Result<(SweepSummary, Vec<Result<CaseResult>>)> {
    fs::create_dir_all(out_root)?;
    fs::write(out_root.join("config.toml"), config.to_toml())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.sweep.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.sweep.workers)))?;
    let results: Vec<Result<CaseResult>> = pool.install(|| {
        config
            .sweep
            .epsilon_list
            .par_iter()
            .map(|&eps| run_case(config, eps, out_root))
            .collect()
    });
    let cases = config
        .sweep
        .epsilon_list
        .iter()
        .zip(&results)
        .map(|(&eps, r)| match r {
            Ok(case) => CaseSummary::from_case(case),
            Err(e) => {
                warn!("case eps = {eps} failed: {e}");
                CaseSummary {
                    epsilon: eps,
                    mobility: config.mobility(eps),
                    errors: None,
                    message: e.to_string(),
                }
            }
        })
        .collect();
    let summary = SweepSummary::from_cases(config.sweep.beta, cases);
    write_summary(out_root, &summary)?;
    Ok((summary, results))
}

/// Writes `summary.csv`, `rates.csv` and `summary.txt`.
pub fn write_summary(out_root: &Path, summary: &SweepSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(out_root.join("summary.csv")).map_err(csv_err)?;
    let mut header = vec!["epsilon".to_string(), "mobility".to_string()];
    header.extend(SUMMARY_COLUMNS.iter().map(|s| s.to_string()));
    header.push("status".into());
    w.write_record(&header).map_err(csv_err)?;
    for c in &summary.cases {
        let mut rec = vec![fmt(c.epsilon), fmt(c.mobility)];
        match c.errors {
            Some(e) => rec.extend(e.iter().map(|v| fmt(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), SUMMARY_COLUMNS.len())),
        }
        rec.push(c.message.replace('\n', " "));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    write_rates(&out_root.join("rates.csv"), summary)?;
    let mut f = File::create(out_root.join("summary.txt"))?;
    f.write_all(summary.table().as_bytes())?;
    Ok(())
}

fn write_rates(path: &Path, summary: &SweepSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["column", "exponent", "intercept", "residual", "points", "predicted"])
        .map_err(csv_err)?;
    for f in &summary.fits {
        let rec = match &f.fit {
            Some(fit) => vec![
                f.column.clone(),
                fmt(fit.exponent),
                fmt(fit.intercept),
                fmt(fit.residual),
                fit.pairs.len().to_string(),
                fmt(f.predicted),
            ],
            None => vec![f.column.clone(), String::new(), String::new(), String::new(), "0".into(), fmt(f.predicted)],
        };
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `summary.csv` written by [`write_summary`] and refits the rates.
pub fn refit_summary(path: &Path, beta: f64) -> Result<SweepSummary> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
    };
    let eps_col = col("epsilon")?;
    let m_col = col("mobility")?;
    let cols: Vec<usize> = SUMMARY_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Config(format!("{}: bad number {s:?}: {e}", path.display())))
    };
    let mut cases = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let errors = if cols.iter().all(|&c| !rec[c].is_empty()) {
            let mut e = [0.0; 6];
            for (slot, &c) in e.iter_mut().zip(&cols) {
                *slot = parse(&rec[c])?;
            }
            Some(e)
        } else {
            None
        };
        cases.push(CaseSummary {
            epsilon: parse(&rec[eps_col])?,
            mobility: parse(&rec[m_col])?,
            errors,
            message: rec.get(headers.len() - 1).unwrap_or("").to_string(),
        });
    }
    Ok(SweepSummary::from_cases(beta, cases))
}

/// Plumbing self-test: errors `A_c eps^p_c` with seeded amplitudes `A_c`
/// replace the solver.
pub fn synthetic_sweep(epsilons: &[f64], beta: f64, exponents: &[f64; 6], seed: u64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitudes: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.1..10.0));
    let cases = epsilons
        .iter()
        .map(|&eps| CaseSummary {
            epsilon: eps,
            mobility: eps.powf(beta),
            errors: Some(std::array::from_fn(|c| amplitudes[c] * eps.powf(exponents[c]))),
            message: "synthetic".into(),
        })
        .collect();
    SweepSummary::from_cases(beta, cases)
}

/// Sharp-interface solution used by a configuration at `epsilon`.
pub fn reference_for(config: &SweepConfig, epsilon: f64) -> Result<SharpSolution> {
    SharpSolution::new(
        config.sharp_kind(),
        config.mobility(epsilon),
        &PotentialSpec::default(),
        config.sweep.delta,
    )
}

/// True when `kind` describes a circle.
pub fn is_circle(kind: &SharpKind) -> bool {
    matches!(kind, SharpKind::ShrinkingCircle { .. } | SharpKind::TranslatingCircle { .. })
}
