//! The four experiments. Each sweep cell runs one sequential trajectory;
//! cells are spread over the rayon pool and their rows sorted afterwards.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use cdforge::spectral::{aux_image, snapshot};
use cdforge::{
    critical_time, enumerate_basis, initial_ground_state, resource_count, propagate, residual_from_image,
    solve, uniform_grid, build_system_from_image, AnsatzSpec, Driving, Model, OperatorBasis, Protocol, Solution,
    State, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use tracing::{info, warn};

use crate::config::{AnsatzConfig, ExperimentConfig, ExperimentKind, NumericsConfig, BARE_LABEL};
use crate::error::Result;
use crate::table::{Cell, ResultTable};

/// One failed sweep cell, recorded instead of aborting the experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub cell: String,
    pub kind: String,
    pub message: String,
}

impl CellFailure {
    fn new(cell: String, e: &cdforge::Error) -> Self {
        Self {
            cell,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// Tables plus everything needed for the metadata header.
#[derive(Debug, Clone)]
pub struct Report {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub tables: Vec<ResultTable>,
    pub failures: Vec<CellFailure>,
    pub cells: usize,
}

impl Report {
    /// 0 when every cell succeeded, 3 when none did, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.failures.len() {
            0 => 0,
            f if f >= self.cells => 3,
            _ => 4,
        }
    }

    /// Header shared by every table. Run-dependent values sit under `timestamp`.
    pub fn metadata(&self, started: SystemTime, wall: Duration) -> Value {
        let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        json!({
            "experiment": self.kind.to_string(),
            "code_version": concat!("cdforge ", env!("CARGO_PKG_VERSION")),
            "config": self.config,
            "failures": self.failures,
            "timestamp": {"unix_seconds": unix, "wall_seconds": wall.as_secs_f64()},
        })
    }

    pub fn write(&self, dir: &Path, started: SystemTime, wall: Duration) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| crate::HarnessError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let meta = self.metadata(started, wall);
        let mut paths = Vec::with_capacity(self.tables.len());
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            t.write_file(&p, &meta)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

pub fn run(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Report> {
    match kind {
        ExperimentKind::KzSweep => run_kz_sweep(config),
        ExperimentKind::StatePrep => run_state_prep(config),
        ExperimentKind::SolveAux => solve_aux_once(config),
        ExperimentKind::Resources => resources(config),
    }
}

/// Bare driving or one configured operator set.
#[derive(Debug, Clone, Copy)]
pub enum Variant<'a> {
    Bare,
    Ansatz(&'a AnsatzConfig),
}

impl Variant<'_> {
    pub fn label(&self) -> &str {
        match self {
            Variant::Bare => BARE_LABEL,
            Variant::Ansatz(a) => a.label(),
        }
    }

    pub fn driving(&self, n_sites: usize) -> Result<Driving> {
        Ok(match self {
            Variant::Bare => Driving::Bare,
            Variant::Ansatz(a) => Driving::Ansatz(a.spec(n_sites)?),
        })
    }
}

fn variants(config: &ExperimentConfig) -> Vec<Variant<'_>> {
    std::iter::once(Variant::Bare)
        .chain(config.ansatz_list().iter().map(Variant::Ansatz))
        .collect()
}

/// Uniform grid on `[0, duration]` with `extra` times merged in.
pub fn time_grid(duration: f64, points: usize, extra: &[f64]) -> Vec<f64> {
    let mut grid = uniform_grid(0.0, duration, points);
    let tol = 1e-12 * duration.max(1.0);
    for &t in extra {
        if t > 0.0 && t < duration && grid.iter().all(|g| (g - t).abs() > tol) {
            grid.push(t);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid
}

/// Index of the grid time that `time_grid` used for `t`.
pub fn grid_index(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-12 * times.last().copied().unwrap_or(1.0).max(1.0);
    times.iter().position(|&x| (x - t).abs() <= tol)
}

/// Trajectory of one quench from the ground state of `H0(B0)`.
pub fn run_trajectory(
    model: &Model,
    protocol: &Protocol,
    duration: f64,
    driving: &Driving,
    numerics: &NumericsConfig,
    extra_times: &[f64],
) -> cdforge::Result<Trajectory> {
    let psi0 = initial_ground_state(model, protocol)?;
    let grid = time_grid(duration, numerics.grid_points, extra_times);
    propagate(model, protocol, driving, &psi0, &numerics.propagation(duration), &grid)
}

/// One `(N, v, variant)` cell of the Kibble-Zurek sweep.
#[derive(Debug, Clone)]
pub struct KzCell {
    pub n_sites: usize,
    pub rate: f64,
    pub label: String,
    pub critical_time: f64,
    pub outcome: cdforge::Result<Trajectory>,
}

impl KzCell {
    pub fn defect_density(&self) -> f64 {
        self.outcome.as_ref().map(|t| t.final_defect_density()).unwrap_or(f64::NAN)
    }

    /// Instantaneous solver residual at `t_c`.
    pub fn residual_at_critical_time(&self) -> Option<f64> {
        let t = self.outcome.as_ref().ok()?;
        let k = grid_index(&t.times, self.critical_time)?;
        Some(t.residual[k])
    }
}

pub fn kz_cell(config: &ExperimentConfig, n_sites: usize, rate: f64, variant: Variant<'_>) -> Result<KzCell> {
    let p = &config.protocol;
    let model = Model::new(n_sites, config.model.coupling)?;
    let protocol = Protocol::linear(p.b0, rate)?;
    let driving = variant.driving(n_sites)?;
    let t_c = critical_time(&protocol, config.model.coupling)?;
    let outcome = protocol
        .duration_to(p.bf)
        .and_then(|duration| run_trajectory(&model, &protocol, duration, &driving, &config.numerics, &[t_c]));
    Ok(KzCell {
        n_sites,
        rate,
        label: variant.label().to_string(),
        critical_time: t_c,
        outcome,
    })
}

/// Every cell of the sweep, sorted by `(N, v, label)`.
pub fn kz_sweep_cells(config: &ExperimentConfig) -> Result<Vec<KzCell>> {
    let rates = config.rates.as_ref().map(|r| r.values()).unwrap_or_default();
    let vars = variants(config);
    let (rates, vars) = (&rates, &vars);
    let jobs: Vec<(usize, f64, Variant<'_>)> = config
        .sizes()
        .iter()
        .flat_map(|&n| rates.iter().flat_map(move |&v| vars.iter().map(move |var| (n, v, *var))))
        .collect();
    let mut cells = jobs
        .into_par_iter()
        .map(|(n, v, var)| {
            let cell = kz_cell(config, n, v, var)?;
            match &cell.outcome {
                Ok(t) => info!(n, v, label = %cell.label, n_ex = t.final_defect_density(), "kz cell done"),
                Err(e) => warn!(n, v, label = %cell.label, error = %e, "kz cell failed"),
            }
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    cells.sort_by(|a, b| {
        a.n_sites
            .cmp(&b.n_sites)
            .then(a.rate.total_cmp(&b.rate))
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(cells)
}

pub const KZ_COLUMNS: [&str; 7] = ["N", "v", "ansatz_label", "n_ex", "t_c", "max_residual", "error_flag"];

pub fn run_kz_sweep(config: &ExperimentConfig) -> Result<Report> {
    let cells = kz_sweep_cells(config)?;
    let mut table = ResultTable::new("kz_sweep", &KZ_COLUMNS);
    let mut failures = Vec::new();
    for c in &cells {
        let (n_ex, max_res, flag) = match &c.outcome {
            Ok(t) => (t.final_defect_density(), t.max_residual, String::new()),
            Err(e) => {
                failures.push(CellFailure::new(format!("N={} v={} {}", c.n_sites, c.rate, c.label), e));
                (f64::NAN, f64::NAN, e.kind().to_string())
            }
        };
        table.push(vec![
            c.n_sites.into(),
            c.rate.into(),
            c.label.as_str().into(),
            n_ex.into(),
            c.critical_time.into(),
            max_res.into(),
            flag.into(),
        ]);
    }
    Ok(Report {
        kind: ExperimentKind::KzSweep,
        config: config.clone(),
        tables: vec![table],
        failures,
        cells: cells.len(),
    })
}

/// One cubic state-preparation run.
#[derive(Debug, Clone)]
pub struct PrepRun {
    pub n_sites: usize,
    pub label: String,
    pub critical_time: Option<f64>,
    pub outcome: cdforge::Result<Trajectory>,
}

impl PrepRun {
    pub fn final_infidelity(&self) -> f64 {
        self.outcome.as_ref().map(|t| t.final_defect_density()).unwrap_or(f64::NAN)
    }
}

pub fn prep_run(config: &ExperimentConfig, n_sites: usize, variant: Variant<'_>) -> Result<PrepRun> {
    let p = &config.protocol;
    let tau = p.tau.expect("resolved config has tau");
    let model = Model::new(n_sites, config.model.coupling)?;
    let protocol = Protocol::cubic(p.b0, p.bf, tau)?;
    let driving = variant.driving(n_sites)?;
    let t_c = critical_time(&protocol, config.model.coupling).ok();
    let extra: Vec<f64> = t_c.into_iter().collect();
    let outcome = run_trajectory(&model, &protocol, tau, &driving, &config.numerics, &extra);
    Ok(PrepRun {
        n_sites,
        label: variant.label().to_string(),
        critical_time: t_c,
        outcome,
    })
}

/// Every `(N, variant)` run, sorted by `(N, label)`.
pub fn state_prep_runs(config: &ExperimentConfig) -> Result<Vec<PrepRun>> {
    let vars = variants(config);
    let jobs: Vec<(usize, Variant<'_>)> = config
        .sizes()
        .iter()
        .flat_map(|&n| vars.iter().map(move |v| (n, *v)))
        .collect();
    let mut runs = jobs
        .into_par_iter()
        .map(|(n, var)| {
            let r = prep_run(config, n, var)?;
            match &r.outcome {
                Ok(_) => info!(n, label = %r.label, infidelity = r.final_infidelity(), "state-prep run done"),
                Err(e) => warn!(n, label = %r.label, error = %e, "state-prep run failed"),
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.n_sites.cmp(&b.n_sites).then_with(|| a.label.cmp(&b.label)));
    Ok(runs)
}

pub const PREP_COLUMNS: [&str; 5] = ["t", "B", "infidelity", "residual", "ansatz_label"];
pub const FLOW_COLUMNS: [&str; 5] = ["t", "i1", "i2", "component_pair", "h_value"];

/// Amplitudes of the two-site strings at every recorded time.
pub fn amplitude_flow(name: String, basis: &OperatorBasis, trajectory: &Trajectory) -> Option<ResultTable> {
    let amps = trajectory.amplitudes.as_ref()?;
    let mut table = ResultTable::new(name, &FLOW_COLUMNS);
    let pairs: Vec<(usize, usize, usize, String)> = basis
        .strings()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.support_size() == 2)
        .map(|(k, s)| {
            let t = s.terms();
            let comp: String = t.iter().map(|(_, p)| p.symbol()).collect();
            (k, t[0].0, t[1].0, comp)
        })
        .collect();
    for (t, h) in trajectory.times.iter().zip(amps) {
        for (k, i1, i2, comp) in &pairs {
            table.push(vec![(*t).into(), (*i1).into(), (*i2).into(), comp.as_str().into(), h[*k].into()]);
        }
    }
    table
        .extra
        .insert("omitted_strings".into(), json!(basis.len() - pairs.len()));
    Some(table)
}

pub fn run_state_prep(config: &ExperimentConfig) -> Result<Report> {
    let runs = state_prep_runs(config)?;
    let mut tables = Vec::new();
    let mut failures = Vec::new();
    for &n in config.sizes() {
        let mut table = ResultTable::new(format!("state_prep_N{n}"), &PREP_COLUMNS);
        for r in runs.iter().filter(|r| r.n_sites == n) {
            match &r.outcome {
                Ok(t) => {
                    for k in 0..t.times.len() {
                        table.push(vec![
                            t.times[k].into(),
                            t.fields[k].into(),
                            t.defect_density[k].into(),
                            t.residual[k].into(),
                            r.label.as_str().into(),
                        ]);
                    }
                }
                Err(e) => failures.push(CellFailure::new(format!("N={n} {}", r.label), e)),
            }
        }
        table.extra.insert(
            "critical_time".into(),
            json!(runs.iter().find(|r| r.n_sites == n).and_then(|r| r.critical_time)),
        );
        tables.push(table);
        if config.output.amplitude_flow {
            for r in runs.iter().filter(|r| r.n_sites == n) {
                if let Ok(t) = &r.outcome {
                    if let Some(flow) = t
                        .basis
                        .as_ref()
                        .and_then(|b| amplitude_flow(format!("amplitude_flow_N{n}_{}", r.label), b, t))
                    {
                        tables.push(flow);
                    }
                }
            }
        }
    }
    Ok(Report {
        kind: ExperimentKind::StatePrep,
        config: config.clone(),
        tables,
        failures,
        cells: runs.len(),
    })
}

/// Variational fit at a single `(B, rate)` point.
#[derive(Debug, Clone)]
pub struct PointSolve {
    pub basis: OperatorBasis,
    pub solution: Solution,
    /// Residual recomputed from the amplitudes by direct operator application.
    pub replayed_residual: f64,
}

pub fn solve_point(
    n_sites: usize,
    coupling: f64,
    field: f64,
    rate: f64,
    level: usize,
    spec: &AnsatzSpec,
    numerics: &NumericsConfig,
) -> cdforge::Result<PointSolve> {
    let model = Model::new(n_sites, coupling)?;
    let snap = snapshot(&model, field)?;
    let tol = numerics.gap_tol.unwrap_or_else(|| snap.default_gap_tol());
    let psi = State::new(snap.eigenvector(level), n_sites)?;
    let image = aux_image(&snap, &model.field_derivative()?, rate, level, Some(tol))?;
    let basis = enumerate_basis(spec, n_sites)?;
    let system = build_system_from_image(&basis, &psi, image.clone())?;
    let solution = solve(&system, numerics.cutoff)?;
    let replayed_residual = residual_from_image(&basis, &solution.amplitudes, &psi, &image)?;
    Ok(PointSolve {
        basis,
        solution,
        replayed_residual,
    })
}

pub fn solve_aux_once(config: &ExperimentConfig) -> Result<Report> {
    let pt = config.point.clone().expect("resolved config has a point");
    let jobs: Vec<(usize, &AnsatzConfig)> = config
        .sizes()
        .iter()
        .flat_map(|&n| config.ansatz_list().iter().map(move |a| (n, a)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(n, a)| {
            let spec = a.spec(n)?;
            Ok((n, a.label(), solve_point(n, config.model.coupling, pt.field, pt.rate, pt.level, &spec, &config.numerics)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = ResultTable::new(
        "solve_aux_summary",
        &["N", "ansatz_label", "B", "rate", "level", "n_strings", "rank", "residual", "aux_norm_sq", "error_flag"],
    );
    let mut amps = ResultTable::new("solve_aux_amplitudes", &["N", "ansatz_label", "index", "string", "h_value"]);
    let mut gram = ResultTable::new("solve_aux_gram_spectrum", &["N", "ansatz_label", "index", "eigenvalue"]);
    let mut failures = Vec::new();
    for (n, label, res) in &results {
        let head = |cells: Vec<Cell>| -> Vec<Cell> { [vec![(*n).into(), (*label).into()], cells].concat() };
        match res {
            Ok(s) => {
                summary.push(head(vec![
                    pt.field.into(),
                    pt.rate.into(),
                    pt.level.into(),
                    s.basis.len().into(),
                    s.solution.rank.into(),
                    s.solution.residual.into(),
                    s.solution.aux_norm_sq.into(),
                    "".into(),
                ]));
                for (k, (p, h)) in s.basis.strings().iter().zip(s.solution.amplitudes.iter()).enumerate() {
                    amps.push(head(vec![k.into(), p.to_string().into(), (*h).into()]));
                }
                for (k, lam) in s.solution.spectrum.iter().enumerate() {
                    gram.push(head(vec![k.into(), (*lam).into()]));
                }
            }
            Err(e) => {
                failures.push(CellFailure::new(format!("N={n} {label}"), e));
                summary.push(head(vec![
                    pt.field.into(),
                    pt.rate.into(),
                    pt.level.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    e.kind().into(),
                ]));
            }
        }
    }
    Ok(Report {
        kind: ExperimentKind::SolveAux,
        config: config.clone(),
        tables: vec![summary, amps, gram],
        failures,
        cells: results.len(),
    })
}

pub fn resources(config: &ExperimentConfig) -> Result<Report> {
    let r = config.resources.as_ref().expect("resolved config has resources");
    let mut table = ResultTable::new("resources", &["N", "K", "count", "error_flag"]);
    let mut failures = Vec::new();
    let mut cells = 0;
    for &n in &r.sizes {
        for &k in r.bodies.iter().filter(|&&k| k <= n) {
            cells += 1;
            match resource_count(n, k) {
                Ok(c) => table.push(vec![n.into(), k.into(), Cell::Text(c.to_string()), "".into()]),
                Err(e) => {
                    failures.push(CellFailure::new(format!("N={n} K={k}"), &e));
                    table.push(vec![n.into(), k.into(), "".into(), e.kind().into()]);
                }
            }
        }
    }
    if cells == 0 {
        return Err(crate::HarnessError::Config("no (N, K) pair with 1 <= K <= N".into()));
    }
    Ok(Report {
        kind: ExperimentKind::Resources,
        config: config.clone(),
        tables: vec![table],
        failures,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_merges_extra_times() {
        let g = time_grid(5.0, 101, &[2.5 + 4e-16]);
        assert_eq!(g.len(), 101);
        assert_eq!(grid_index(&g, 2.5 + 4e-16), Some(50));
        let g = time_grid(1.0, 3, &[0.25, 0.5, 1.0, 2.0]);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 1.0]);
    }
}
