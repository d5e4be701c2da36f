use cdforge::{AnsatzSpec, Pauli};
use cdforge_harness::config::{AnsatzConfig, NumericsConfig, RateGrid};
use cdforge_harness::experiments::{kz_sweep_cells, solve_point, state_prep_runs};
use cdforge_harness::{run, ExperimentConfig, ExperimentKind};
use serde_json::json;

fn config(kind: ExperimentKind, body: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_value(body).unwrap().resolve(kind).unwrap()
}

#[test]
fn slow_bare_quench_is_adiabatic() {
    let cfg = config(
        ExperimentKind::KzSweep,
        json!({"model": {"sizes": [4]}, "rates": {"values": [0.01]}, "ansatz": [], "numerics": {"grid_points": 5}}),
    );
    let cells = kz_sweep_cells(&cfg).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].label, "none");
    assert!(cells[0].defect_density() < 1e-3, "{}", cells[0].defect_density());
}

#[test]
fn complete_operator_set_removes_defects_at_any_rate() {
    let mut cfg = config(ExperimentKind::KzSweep, json!({"model": {"sizes": [3]}, "numerics": {"grid_points": 11}}));
    cfg.rates = Some(RateGrid::list(vec![0.3, 2.0, 8.0]));
    cfg.ansatz = Some(vec![AnsatzConfig::canonical(3)]);
    let cfg = cfg.resolve(ExperimentKind::KzSweep).unwrap();
    for cell in kz_sweep_cells(&cfg).unwrap().iter().filter(|c| c.label != "none") {
        assert!(cell.defect_density() < 1e-6, "v={}: {}", cell.rate, cell.defect_density());
    }
}

#[test]
fn state_prep_starts_in_the_ground_state_and_exact_driving_stays_there() {
    let cfg = config(
        ExperimentKind::StatePrep,
        json!({"model": {"sizes": [3]}, "ansatz": [{"kind": "canonical", "max_body": 3}], "numerics": {"grid_points": 41}}),
    );
    let runs = state_prep_runs(&cfg).unwrap();
    assert_eq!(runs.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), ["k3_full", "none"]);
    for r in &runs {
        let t = r.outcome.as_ref().unwrap();
        assert!(t.defect_density[0] < 1e-10);
    }
    let exact = runs[0].outcome.as_ref().unwrap();
    let worst = exact.defect_density.iter().fold(0.0f64, |m, x| m.max(*x));
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn zero_rate_gives_zero_amplitudes() {
    let spec = AnsatzSpec::two_body_yz(3);
    let p = solve_point(4, 1.0, 1.0, 0.0, 0, &spec, &NumericsConfig::default()).unwrap();
    assert!(p.solution.amplitudes.iter().all(|h| *h == 0.0));
    assert_eq!(p.solution.residual, 0.0);
}

#[test]
fn nearest_neighbour_amplitudes_dominate_at_the_critical_field() {
    let spec = AnsatzSpec::two_body_yz(3);
    let p = solve_point(4, 1.0, 1.0, 1.0, 0, &spec, &NumericsConfig::default()).unwrap();
    let (mut near, mut far) = (0.0, 0.0);
    for (s, h) in p.basis.strings().iter().zip(p.solution.amplitudes.iter()) {
        let sites: Vec<usize> = s.sites().collect();
        match sites[1] - sites[0] {
            1 => near += h.abs(),
            d if d >= 3 => far += h.abs(),
            _ => {}
        }
    }
    assert!(near > far, "{near} vs {far}");
}

#[test]
fn amplitudes_replay_to_the_reported_residual() {
    for (spec, b) in [(AnsatzSpec::two_body_yz(3), 1.0), (AnsatzSpec::canonical(3, 2), 0.7)] {
        let p = solve_point(4, 1.0, b, 1.3, 0, &spec, &NumericsConfig::default()).unwrap();
        assert!((p.replayed_residual - p.solution.residual).abs() <= 1e-12, "{spec:?}");
    }
}

#[test]
fn even_y_strings_carry_no_weight() {
    let p = solve_point(4, 1.0, 1.2, 1.0, 0, &AnsatzSpec::canonical(4, 3), &NumericsConfig::default()).unwrap();
    for (s, h) in p.basis.strings().iter().zip(p.solution.amplitudes.iter()) {
        if s.count(Pauli::Y) % 2 == 0 {
            assert!(h.abs() < 1e-8, "{s}: {h}");
        }
    }
}

#[test]
fn reports_count_cells_and_failures() {
    let cfg = config(
        ExperimentKind::KzSweep,
        json!({"model": {"sizes": [2]}, "rates": {"values": [1.0, 4.0]}, "numerics": {"grid_points": 5}}),
    );
    let report = run(ExperimentKind::KzSweep, &cfg).unwrap();
    assert_eq!(report.cells, 4);
    assert!(report.failures.is_empty());
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.tables[0].len(), 4);
}
