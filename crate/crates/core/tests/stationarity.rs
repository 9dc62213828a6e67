use weakprobe::variational::{
    analytic_optimal_probe, find_stationary, gauge_fix, stationarity_check, Branch,
};
use weakprobe::{
    Complex64, Error, GaugeFixedFunctional, MomentumGrid, OptimizerConfig, PostselectionKernel,
    ProbeWaveFunction,
};

fn kernel(re: f64, im: f64) -> PostselectionKernel {
    PostselectionKernel::from_weak_value(Complex64::new(re, im))
}

fn functional(k: PostselectionKernel) -> GaugeFixedFunctional {
    GaugeFixedFunctional::new(k, Complex64::new(0.0, 0.0)).unwrap()
}

#[test]
fn analytic_optimum_is_stationary() {
    let grid = MomentumGrid::default();
    for (re, im) in [(1.0, 1.0), (2.0, -1.0), (0.5, 0.5), (1.0, -3.0)] {
        let k = kernel(re, im);
        let p = gauge_fix(&analytic_optimal_probe(&k, 0.0, &grid).unwrap()).unwrap();
        let rep = stationarity_check(&p, &functional(k), 8, 42).unwrap();
        assert!(rep.grad_norm <= 1e-6, "A={re}+{im}i: {}", rep.grad_norm);
        assert!(
            (rep.scaling_exponent - 2.0).abs() <= 0.1,
            "A={re}+{im}i: exponent {} {:?}",
            rep.scaling_exponent,
            rep.deltas
        );
    }
}

#[test]
fn gaussian_is_not_stationary() {
    let grid = MomentumGrid::default();
    let k = kernel(1.0, 1.0);
    let p = ProbeWaveFunction::from_fn(&grid, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let p = gauge_fix(&p.normalized().unwrap()).unwrap();
    let rep = stationarity_check(&p, &functional(k), 8, 42).unwrap();
    assert!(rep.grad_norm > 1e-3, "{}", rep.grad_norm);
    assert!((rep.scaling_exponent - 1.0).abs() <= 0.15, "{} {:?}", rep.scaling_exponent, rep.deltas);
}

#[test]
fn flat_kernel_perturbations_do_not_move_the_shift() {
    let grid = MomentumGrid::default();
    let k = kernel(1.0, 0.0);
    let p = ProbeWaveFunction::from_fn(&grid, |x| Complex64::new((-x * x).exp(), 0.3 * x)).unwrap();
    let p = gauge_fix(&p.normalized().unwrap()).unwrap();
    let rep = stationarity_check(&p, &functional(k), 4, 1).unwrap();
    for (_, d) in rep.deltas {
        assert!(d <= 1e-10, "{d}");
    }
}

#[test]
fn optimizer_from_analytic_start_reports_its_shift() {
    let grid = MomentumGrid::default();
    let k = kernel(1.0, 1.0);
    let init = analytic_optimal_probe(&k, 2.0, &grid).unwrap();
    let r = find_stationary(&functional(k), &init, &OptimizerConfig::default()).unwrap();
    assert!((r.shift - 1.5).abs() <= 1e-6, "{}", r.shift);
    assert!(r.grad_norm <= 1e-6);
    assert_eq!(r.branch, Branch::Normalizable);
}

#[test]
fn optimizer_gives_up_with_the_best_iterate() {
    let grid = MomentumGrid::symmetric(256).unwrap();
    let k = kernel(1.0, 1.0);
    let init = ProbeWaveFunction::from_fn(&grid, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let cfg = OptimizerConfig { max_iter: 5, ..OptimizerConfig::default() };
    let f = functional(k);
    let start = f.value(&gauge_fix(&init.normalized().unwrap()).unwrap()).unwrap();
    match find_stationary(&f, &init, &cfg) {
        Err(Error::NotConverged(best)) => {
            assert!(best.iterations <= 5);
            assert!(f.value(&best.probe).unwrap() >= start);
            assert!(best.probe.expectation_x().unwrap().abs() < 1e-10);
            assert!((best.probe.norm_squared() - 1.0).abs() < 1e-12);
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn constant_probe_is_not_stationary_for_a_complex_weak_value() {
    let grid = MomentumGrid::default();
    let p = weakprobe::grid::position_eigenstate(&grid, 0.0);
    let rep = stationarity_check(&p, &functional(kernel(1.0, 1.0)), 8, 42).unwrap();
    assert!((0.9..=1.1).contains(&rep.scaling_exponent), "{} {:?}", rep.scaling_exponent, rep.deltas);
}

#[test]
fn analytic_start_converges_in_few_iterations() {
    let grid = MomentumGrid::default();
    let k = kernel(1.0, 1.0);
    let init = analytic_optimal_probe(&k, 2.0, &grid).unwrap();
    let r = find_stationary(&functional(k), &init, &OptimizerConfig::default()).unwrap();
    assert!(r.iterations <= 5);
}

#[test]
fn shift_functional_is_flat_along_gauge_translations() {
    let grid = MomentumGrid::default();
    let f = functional(kernel(2.0, -1.0));
    let p = ProbeWaveFunction::from_fn(&grid, |x| Complex64::new((-x * x).exp(), 0.4 * x)).unwrap();
    let base = f.value(&p).unwrap() - p.expectation_x().unwrap();
    for t in [-3.0, -0.5, 1.0, 6.0] {
        let q = p.gauge_translate(t);
        let shift = f.value(&q).unwrap() - q.expectation_x().unwrap();
        assert!((shift - base).abs() <= 1e-9, "t={t}: {shift} vs {base}");
    }
}

#[test]
fn smooth_projection_is_admissible() {
    use weakprobe::variational::{project_constraints, project_constraints_smooth, random_smooth_direction};
    let grid = MomentumGrid::symmetric(1024).unwrap();
    let p = ProbeWaveFunction::from_fn(&grid, |x| Complex64::new((-x * x).exp(), 0.4 * x)).unwrap();
    let p = gauge_fix(&p.normalized().unwrap()).unwrap();
    for stream in 0..4 {
        let d = project_constraints_smooth(&random_smooth_direction(&grid, 9, stream), &p).unwrap();
        // orthogonal to both constraint gradients: the orthogonal projection leaves it alone
        let again = project_constraints(&d, &p).unwrap();
        let diff: f64 = d.0.iter().zip(&again.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12 * d.norm(), "{diff}");
    }
}
