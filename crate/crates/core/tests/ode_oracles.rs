use triadic_core::ode::{integrate, mean_field_euler};
use triadic_core::ModelParams;

#[test]
fn linear_case_matches_exponential_relaxation() {
    let params = ModelParams::new(30, 0.3, 0.7, 0.0).unwrap();
    let run = integrate(&params, 0.9, 5.0, 0.01).unwrap();
    for (t, y) in run.trace.iter() {
        let exact = 0.3 + (0.9 - 0.3) * (-t).exp();
        assert!((y - exact).abs() < 1e-10, "t {t}");
    }
    assert!(run.step_halving_error < 1e-10);
}

#[test]
fn fixed_points_and_stability() {
    let params = ModelParams::bistable(30).unwrap();
    let (p1, p2, p3) = params.solve_cubic().unwrap().bistable().unwrap();
    let h = 1e-6;
    let slope = |p: f64| (params.drift(p + h) - params.drift(p - h)) / (2.0 * h);
    for p in [p1, p2, p3] {
        assert!(params.drift(p).abs() < 1e-12);
    }
    assert!(slope(p1) < 0.0);
    assert!(slope(p2) > 0.0);
    assert!(slope(p3) < 0.0);
}

#[test]
fn basins_split_at_the_unstable_root() {
    let params = ModelParams::bistable(30).unwrap();
    let (p1, p2, p3) = params.solve_cubic().unwrap().bistable().unwrap();
    for y0 in [0.0, 0.1, p2 - 0.01] {
        let y = integrate(&params, y0, 500.0, 0.05).unwrap().terminal();
        assert!((y - p1).abs() < 1e-6, "y0 {y0}: {y}");
    }
    for y0 in [p2 + 0.01, 0.6, 1.0] {
        let y = integrate(&params, y0, 500.0, 0.05).unwrap().terminal();
        assert!((y - p3).abs() < 1e-6, "y0 {y0}: {y}");
    }
}

#[test]
fn monostable_flow_reaches_root() {
    let params = ModelParams::monostable(30).unwrap();
    let root = params.solve_cubic().unwrap().monostable().unwrap();
    // The root is 0.7544, usually quoted as 0.75.
    assert!((root - 0.75).abs() < 5e-3);
    for y0 in [0.0, 0.2, 0.5, 1.0] {
        let y = integrate(&params, y0, 100.0, 0.05).unwrap().terminal();
        assert!((y - root).abs() <= 1e-3, "y0 {y0}: {y}");
    }
}

#[test]
fn mean_field_map_converges_to_the_same_roots() {
    let bi = ModelParams::bistable(30).unwrap();
    let (p1, _, p3) = bi.solve_cubic().unwrap().bistable().unwrap();
    let low = mean_field_euler(&bi, 0.1, 2000).unwrap();
    let high = mean_field_euler(&bi, 0.6, 2000).unwrap();
    assert_eq!(low.first_excursion, None);
    assert!((low.values.last().unwrap() - p1).abs() < 1e-9);
    assert!((high.values.last().unwrap() - p3).abs() < 1e-9);

    let mono = ModelParams::monostable(30).unwrap();
    let root = mono.solve_cubic().unwrap().monostable().unwrap();
    let run = mean_field_euler(&mono, 0.2, 2000).unwrap();
    assert_eq!(run.first_excursion, None);
    assert!((run.values.last().unwrap() - root).abs() < 1e-9);
}
