use nsac::diagnostics::{extract_interface, interface_distance, relative_entropy, DiagnosticParams};
use nsac::fields::{divergence, Boundary, Grid, SOLVER_TOLERANCE};
use nsac::geometry::InterfaceState;
use nsac::harness::{run_case, SweepConfig};
use nsac::nsac::{energy, well_prepared_data, Integrator, NsacParams};
use nsac::potential::PotentialSpec;
use nsac::reference::{SharpKind, SharpSolution};
use nsac::snapshot::{load_snapshot, write_snapshot};
use nsac::Vec2;

#[test]
fn translating_droplet_follows_the_flow() {
    let pot = PotentialSpec::default();
    let eps = 0.06;
    let grid = Grid::unit_square(100, Boundary::Periodic).unwrap();
    let m = 0.01;
    let u = Vec2::new(1.0, 0.5);
    let dt = NsacParams::default_dt(&grid, eps, m, &pot);
    let params = NsacParams::new(eps, m, dt, 0.05, pot, grid).unwrap();
    let sol = SharpSolution::new(
        SharpKind::TranslatingCircle {
            center0: Vec2::new(0.5, 0.5),
            r0: 0.25,
            velocity: u,
        },
        m,
        &pot,
        0.1,
    )
    .unwrap();
    let init = well_prepared_data(&sol.as_interface_state(0.0).unwrap(), &params, &|_| u, 0.2).unwrap();
    let integ = Integrator::new(params);
    let (end, log) = integ.run(&init, &[0.05], |_| Ok(())).unwrap();
    assert_eq!(log.violations(), 0);
    assert!(divergence(&end.vel).max_abs() < 1e-9);
    // The droplet crosses the periodic seam; distances use the nearest image.
    let iface = sol.as_interface_state(0.05).unwrap();
    let lines: Vec<_> = extract_interface(&end.phi, 0.0)
        .unwrap()
        .into_iter()
        .map(|mut l| {
            l.points.iter_mut().for_each(|p| *p = iface.local_position(&grid, p));
            l
        })
        .collect();
    let dist = interface_distance(&lines, &iface).unwrap();
    assert!(dist < grid.h(), "{dist}");
    let diag = DiagnosticParams::new(eps, 0.1, pot).unwrap();
    let r = relative_entropy(&end, &sol, &diag).unwrap();
    assert!(r.velocity_l2 < 1e-3, "{}", r.velocity_l2);
}

#[test]
fn dirichlet_circle_case_runs_and_snapshots_reload() {
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig::parse(
        "[sweep]\nepsilon_list = [0.16, 0.12, 0.1]\nbeta = 1.0\nt_end = 0.002\nreports = 2\n\n[geometry]\nkind = \"shrinking_circle\"\n\n[domain]\nboundary = \"dirichlet\"\n",
    )
    .unwrap();
    let case = run_case(&config, 0.1, dir.path()).unwrap();
    assert_eq!(case.energy.violations(), 0);
    for row in &case.rows {
        assert!(row.coercivity.unit_items_passed());
        assert!(row.distance_modified < 0.01, "{}", row.distance_modified);
        let r = row.radius_extracted.unwrap();
        assert!((r / row.radius_sharp.unwrap() - 1.0).abs() < 0.01, "{r}");
    }
    let last = load_snapshot(case.snapshots.last().unwrap()).unwrap();
    assert_eq!(last.grid().boundary(), Boundary::Dirichlet);
    assert!((last.t - 0.002).abs() < 1e-15);
    let again = dir.path().join("again.snap");
    write_snapshot(&again, &last).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(case.snapshots.last().unwrap()).unwrap());
}

#[test]
fn rest_state_is_a_fixed_point() {
    let pot = PotentialSpec::default();
    let grid = Grid::unit_square(32, Boundary::Dirichlet).unwrap();
    let params = NsacParams::new(0.2, 0.1, 1e-4, 1.0, pot, grid).unwrap();
    let iface = InterfaceState::line(5.0, Vec2::new(1.0, 0.0)).unwrap();
    let s = well_prepared_data(&iface, &params, &|_| Vec2::zeros(), 0.1).unwrap();
    let next = Integrator::new(params).step(&s).unwrap();
    let drift = next.phi.values().iter().zip(s.phi.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 10.0 * SOLVER_TOLERANCE, "{drift}");
    assert!(next.vel.max_norm() < 10.0 * SOLVER_TOLERANCE, "{}", next.vel.max_norm());
    assert!(energy(&next, &params) < 1e-12, "{}", energy(&next, &params));
}
