use topoflock_web::{knn_cost, label_relaxation, Simulation};

#[test]
fn simulation_steps_and_reports() {
    let mut sim = Simulation::new(100, 0.05, 0.5, 0.5, 7).unwrap();
    assert_eq!(sim.len(), 100);
    assert_eq!(sim.positions().len(), 200);
    sim.step(20).unwrap();
    assert!((sim.time() - 0.2).abs() < 1e-12);
    assert!(sim
        .positions()
        .iter()
        .chain(&sim.velocities())
        .all(|x| x.is_finite()));
    let leaders = sim.labels().iter().filter(|&&l| l == 1).count();
    assert!((sim.leader_fraction() - leaders as f64 / 100.0).abs() < 1e-15);
    assert!(sim.clusters(1e6) == 1);
}

#[test]
fn simulation_is_seeded() {
    let mut a = Simulation::new(60, 0.05, 1.0, 1.0, 3).unwrap();
    let mut b = Simulation::new(60, 0.05, 1.0, 1.0, 3).unwrap();
    a.step(10).unwrap();
    b.step(10).unwrap();
    assert_eq!(a.positions(), b.positions());
    assert_eq!(a.labels(), b.labels());
}

#[test]
fn simulation_rejects_bad_parameters() {
    assert!(Simulation::new(10, 1.0, 0.1, 0.1, 1).is_err());
    assert!(Simulation::new(100, 0.05, -1.0, 0.1, 1).is_err());
}

#[test]
fn tree_search_is_cheaper() {
    let c = knn_cost(2000, 0.01, 2.0, 1).unwrap();
    assert_eq!(c[0], 2000.0 * 2000.0);
    assert!(c[1] < c[0] / 100.0);
    assert_eq!((c[2], c[3]), (1.0, 40.0));
    assert!(knn_cost(1, 0.01, 2.0, 1).is_err());
}

#[test]
fn relaxation_approaches_stationary_fraction() {
    let rows = label_relaxation(20_000, 0.02, 0.08, 1.0, 100, 5).unwrap();
    assert_eq!(rows.len(), 3 * 101);
    assert_eq!(rows[1], 0.0);
    let last = &rows[rows.len() - 3..];
    assert!((last[2] - 0.2).abs() < 1e-4);
    assert!((last[1] - 0.2).abs() < 0.02, "{last:?}");
    assert!(label_relaxation(10, 2.0, 0.1, 1.0, 5, 1).is_err());
}
