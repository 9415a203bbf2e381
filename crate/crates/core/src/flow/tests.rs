use super::*;
use crate::classes::{PnProblem, XmnProblem};

fn pn(n: u32, k: u32, a: f64, b: f64) -> FlowProblem {
    FlowProblem::new(PnProblem::new(n, k, a, b).unwrap(), FluxFunction::NegIdentity).unwrap()
}

fn analytic_state(fp: &FlowProblem, points: usize) -> FlowState {
    let grid = fp.grid(points).unwrap();
    let s = fp.analytic().unwrap();
    let f = grid.nodes().iter().map(|&x| s.value(x).unwrap()).collect();
    initial_state(fp, &grid, &Initial::Custom(f)).unwrap()
}

#[test]
fn grid_rejects_small_or_empty() {
    assert!(Grid::new(1.0, 2.0, 15).is_err());
    assert!(Grid::new(2.0, 2.0, 20).is_err());
    let g = Grid::new(1.0, 2.0, 16).unwrap();
    assert_eq!(g.nodes()[15], 2.0);
    assert_eq!(g.nodes()[0], 1.0);
}

#[test]
fn analytic_rhs_converges_at_second_order() {
    for fp in [pn(2, 1, 3.0, 2.0), pn(3, 2, 2.0, 1.5), pn(4, 3, 1.5, 2.0)] {
        let coarse = residual(&fp, &analytic_state(&fp, 101)).unwrap();
        let fine = residual(&fp, &analytic_state(&fp, 201)).unwrap();
        assert!(coarse < 1e-3, "{coarse}");
        let rate = (coarse / fine).log2();
        assert!(rate > 1.8, "rate {rate}");
    }
    let fp = FlowProblem::new(XmnProblem::new(0, 1, 1, 1.0, 1.0).unwrap(), FluxFunction::NegIdentity).unwrap();
    // f = x is exact for the discretization as well
    assert!(residual(&fp, &analytic_state(&fp, 101)).unwrap() < 1e-12);
    let fp = FlowProblem::new(XmnProblem::new(1, 2, 2, 0.8, 1.5).unwrap(), FluxFunction::NegIdentity).unwrap();
    let coarse = residual(&fp, &analytic_state(&fp, 101)).unwrap();
    let fine = residual(&fp, &analytic_state(&fp, 201)).unwrap();
    assert!((coarse / fine).log2() > 1.8, "{coarse} {fine}");
}

#[test]
fn k1_general_form_is_jflow() {
    let fp = pn(3, 1, 1.4, 2.0);
    let st = initial_state(&fp, &fp.grid(50).unwrap(), &Initial::Chord).unwrap();
    assert_eq!(rhs_jflow(&fp, &st).unwrap(), rhs_general_k(&fp, &st).unwrap());
}

#[test]
fn chord_rhs_sign_in_convex_case() {
    // the chord lies above the convex limit, so f decreases
    let fp = pn(2, 1, 1.5, 2.0);
    let st = initial_state(&fp, &fp.grid(100).unwrap(), &Initial::Chord).unwrap();
    let r = rhs_jflow(&fp, &st).unwrap();
    assert!(r.iter().all(|&v| v <= 0.0));
    // the concave case has the chord below the limit
    let fp = pn(2, 1, 3.0, 2.0);
    let st = initial_state(&fp, &fp.grid(100).unwrap(), &Initial::Chord).unwrap();
    let r = rhs_jflow(&fp, &st).unwrap();
    assert!(r.iter().all(|&v| v >= 0.0));
}

#[test]
fn flat_nodes_do_not_move() {
    let fp = pn(2, 1, 1.2, 2.0);
    let grid = fp.grid(40).unwrap();
    let mut f: Vec<f64> = grid.nodes().iter().map(|&x| 1.0 + 0.2 * (x - 1.0)).collect();
    for v in f.iter_mut().take(10) {
        *v = 1.0;
    }
    let st = initial_state(&fp, &grid, &Initial::Custom(f)).unwrap();
    let r = rhs_jflow(&fp, &st).unwrap();
    assert!(r[..10].iter().all(|&v| v == 0.0));
}

#[test]
fn integrity_errors() {
    let fp = pn(2, 1, 1.2, 2.0);
    let mut st = initial_state(&fp, &fp.grid(20).unwrap(), &Initial::Chord).unwrap();
    st.u[5] = st.u[7];
    assert!(matches!(rhs_jflow(&fp, &st), Err(Error::Integrity(_))));

    let fp = pn(3, 2, 1.2, 2.0);
    let mut st = initial_state(&fp, &fp.grid(20).unwrap(), &Initial::Chord).unwrap();
    st.u[3] = -0.1;
    assert!(matches!(rhs_general_k(&fp, &st), Err(Error::Integrity(_))));

    let fp = FlowProblem::new(XmnProblem::new(0, 1, 1, 0.1, 2.0).unwrap(), FluxFunction::NegIdentity).unwrap();
    let mut st = initial_state(&fp, &fp.grid(20).unwrap(), &Initial::Chord).unwrap();
    st.u[3] = -1e-9;
    assert!(matches!(rhs_xmn(&fp, &st), Err(Error::Integrity(_))));
}

#[test]
fn equal_classes_need_no_steps() {
    let fp = pn(2, 1, 2.0, 2.0);
    let run = evolve(&fp, &fp.grid(64).unwrap(), &SchemeConfig::default(), &Initial::Chord).unwrap();
    assert_eq!(run.steps, 0);
    assert_eq!(run.status, RunStatus::Converged);
    assert!(run.records[0].sup_error < 1e-14);
}

#[test]
fn custom_initial_data_is_checked() {
    let fp = pn(2, 1, 1.5, 2.0);
    let grid = fp.grid(20).unwrap();
    let mut f: Vec<f64> = grid.nodes().to_vec();
    assert!(initial_state(&fp, &grid, &Initial::Custom(f.clone())).is_err());
    f = grid.nodes().iter().map(|&x| 1.0 + 0.5 * (x - 1.0)).collect();
    f.swap(4, 5);
    assert!(initial_state(&fp, &grid, &Initial::Custom(f)).is_err());
    assert!(initial_state(&fp, &grid, &Initial::Custom(vec![1.0; 3])).is_err());
}

#[test]
fn sigma_profile_is_constant_on_analytic_state() {
    let fp = pn(3, 2, 2.0, 1.5);
    let st = analytic_state(&fp, 1601);
    let s = sigma_profile(&fp, &st);
    let c = crate::stationary::stationary_constant(&fp.problem).unwrap();
    let dev = s.iter().fold(0.0f64, |m, v| m.max((v - c).abs()));
    assert!(dev < 1e-6, "{c} {dev}");
}

#[test]
fn short_explicit_run_keeps_invariants() {
    let fp = pn(2, 1, 1.2, 2.0);
    let scheme = SchemeConfig { max_time: Some(0.5), record_every: 50, ..Default::default() };
    let run = evolve(&fp, &fp.grid(60).unwrap(), &scheme, &Initial::Chord).unwrap();
    assert_eq!(run.status, RunStatus::Indeterminate);
    assert_eq!(run.state.u[0], 1.0);
    assert_eq!(run.state.u[59], 1.2);
    assert!(run.records.iter().all(|r| r.min_fx >= -1e-8));
}

#[test]
fn theta_scheme_reaches_explicit_limit() {
    let fp = pn(2, 1, 1.2, 2.0);
    let grid = fp.grid(81).unwrap();
    let explicit = evolve(&fp, &grid, &SchemeConfig { steady_tol: 1e-10, ..Default::default() }, &Initial::Chord).unwrap();
    let implicit = evolve(
        &fp,
        &grid,
        &SchemeConfig { steady_tol: 1e-10, theta: 1.0, dt_max: 0.5, ..Default::default() },
        &Initial::Chord,
    )
    .unwrap();
    assert_eq!(explicit.status, RunStatus::Converged);
    assert_eq!(implicit.status, RunStatus::Converged);
    assert!(implicit.steps < explicit.steps / 10, "{} vs {}", implicit.steps, explicit.steps);
    let gap = explicit.state.u.iter().zip(&implicit.state.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn g_form_matches_f_form() {
    let fp = FlowProblem::new(XmnProblem::new(1, 2, 2, 0.6, 1.5).unwrap(), FluxFunction::NegIdentity).unwrap();
    let coarse = g_form_consistency(&fp, &initial_state(&fp, &fp.grid(101).unwrap(), &Initial::Chord).unwrap()).unwrap();
    let fine = g_form_consistency(&fp, &initial_state(&fp, &fp.grid(201).unwrap(), &Initial::Chord).unwrap()).unwrap();
    assert!(fine < coarse / 3.0 && fine < 1e-3, "{coarse} {fine}");
}

#[test]
fn summary_json_has_schema_version() {
    let fp = pn(2, 1, 2.0, 2.0);
    let run = evolve(&fp, &fp.grid(32).unwrap(), &SchemeConfig::default(), &Initial::Chord).unwrap();
    let s = output::RunSummary::new(&fp, &run, Some(1.0)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["case"], "Smooth");
}
