//! Self-check suite: the invariants of every module, evaluated on seeded
//! random and hand-built probes. Used by the `verify` command.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::families::{evaluate, fit_scaling, make_family, sweep, FamilySpec};
use crate::grid::{position_eigenstate, MomentumGrid, ProbeWaveFunction};
use crate::postselection::PostselectionKernel;
use crate::spectrum::{kronecker_check, position_amplitude_continuum, to_position_coefficients};
use crate::variational::{
    analytic_optimal_probe, gauge_fix, inverse_kernel_probe, normalizability_check, stationarity_check,
    GaugeFixedFunctional, Normalizability, BRANCH_REFINEMENTS,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A smooth, generally non-periodic probe: a few random plane waves on a
/// constant background, from stream `stream` of ChaCha8 seeded with `seed`.
pub fn random_probe(grid: &MomentumGrid, seed: u64, stream: u64) -> Result<ProbeWaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let modes: Vec<Complex64> = (0..7)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ProbeWaveFunction::from_fn(grid, |k| {
        modes
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::cis(-(j as f64 - 3.0) * k))
            .sum::<Complex64>()
            + 1.5
    })
}

/// A smooth probe of period `pi`, so its lattice expansion converges fast.
pub fn periodic_probe(grid: &MomentumGrid) -> Result<ProbeWaveFunction> {
    ProbeWaveFunction::from_fn(grid, |k| {
        Complex64::new((2.0 * k).cos().exp(), 0.0) * (1.0 + 0.3 * Complex64::cis(-2.0 * k))
    })?
    .normalized()
}

fn kernel(re: f64, im: f64) -> PostselectionKernel {
    PostselectionKernel::from_weak_value(Complex64::new(re, im))
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

type Check = fn(u64) -> Result<(bool, String)>;

fn gauge_norm_preservation(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    for s in 0..20 {
        let p = random_probe(&g, seed, s)?;
        for x0 in [-10.0, -3.3, 0.7, 10.0] {
            let d = (p.gauge_translate(x0).norm_squared() - p.norm_squared()).abs() / p.norm_squared();
            worst = worst.max(d);
        }
    }
    Ok((worst <= 1e-13, format!("max relative change {worst:e}")))
}

fn translation_covariance(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for s in 0..20 {
        let p = random_probe(&g, seed, s)?;
        let (x, v) = (p.expectation_x()?, p.variance_x()?);
        for x0 in [-10.0, -3.3, 0.7, 10.0] {
            let q = p.gauge_translate(x0);
            worst = worst.max((q.expectation_x()? - (x - x0)).abs());
            worst_var = worst_var.max((q.variance_x()? - v).abs() / v.max(1e-300));
        }
    }
    Ok((
        worst <= 1e-9 && worst_var <= 1e-9,
        format!("mean error {worst:e}, variance relative error {worst_var:e}"),
    ))
}

fn eigenstate_identities(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    for n in -8..=8 {
        let p = position_eigenstate(&g, 2.0 * n as f64);
        worst = worst
            .max((p.expectation_x()? - 2.0 * n as f64).abs())
            .max(p.variance_x()?);
    }
    Ok((worst <= 1e-10, format!("max error {worst:e}")))
}

fn shift_gauge_invariance(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for s in 0..50 {
        let p = random_probe(&g, seed, 1000 + s)?;
        let k = kernel(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let x0 = rng.gen_range(-10.0..10.0);
        worst = worst.max((k.shift(&p.gauge_translate(x0))? - k.shift(&p)?).abs());
    }
    Ok((worst <= 1e-9, format!("max shift change {worst:e}")))
}

fn overlap_irrelevance(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        let p = random_probe(&g, seed, 2000 + s)?;
        let base = PostselectionKernel::from_weak_value(Complex64::new(1.0, 1.0));
        let with = {
            use crate::postselection::{InvolutiveObservable, QubitState};
            let pre = QubitState::normalized(Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.2))?;
            let post = QubitState::normalized(Complex64::new(0.2, 0.0), Complex64::new(-1.0, 0.1))?;
            PostselectionKernel::from_states(&pre, &post, &InvolutiveObservable::sigma_z())?
        };
        for k in [base, with] {
            let a = k.with_overlap(false).final_probe(&p)?;
            let b = k.with_overlap(true).final_probe(&p)?;
            let phase = b.values()[0] / a.values()[0];
            let d = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(u, v)| (u * phase - v).norm())
                .fold(0.0, f64::max);
            let ds = (k.with_overlap(false).shift(&p)? - k.with_overlap(true).shift(&p)?).abs();
            worst = worst.max(d).max(ds);
        }
    }
    Ok((worst <= 1e-13, format!("max difference {worst:e} (up to global phase)")))
}

fn kernel_norm_bounds(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut ok = true;
    for s in 0..10 {
        let p = random_probe(&g, seed, 3000 + s)?;
        for k in [kernel(1.0, 1.0), kernel(0.2, -3.0), kernel(5.0, 0.0)] {
            let (lo, hi) = k.modulus_sq_range(&g);
            let (_, n_f) = k.apply(&p)?;
            let n_i = p.norm_squared();
            ok &= n_f <= hi * n_i * (1.0 + 1e-12) && n_f >= lo * n_i * (1.0 - 1e-12);
        }
    }
    Ok((ok, "min|B|^2 N_i <= N_f <= max|B|^2 N_i".into()))
}

fn spectrum_orthonormality(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    for m in -8..=8 {
        worst = worst.max(kronecker_check(&position_eigenstate(&g, 2.0 * m as f64), m, 64)?);
    }
    Ok((worst <= 1e-10, format!("max |c_n - delta| {worst:e}")))
}

fn parseval_convergence(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let p = periodic_probe(&g)?;
    let amps = to_position_coefficients(&p, -256, 256)?;
    let deficits: Vec<f64> = [4, 8, 16, 32, 64, 128, 256]
        .iter()
        .map(|&n| Ok(1.0 - amps.truncated(n)?.captured_weight()))
        .collect::<Result<_>>()?;
    // monotone until round-off
    let monotone = deficits.windows(2).all(|w| w[1] <= w[0] || w[1].abs() <= 1e-13);
    let last = deficits[deficits.len() - 1];
    let listed: Vec<String> = deficits.iter().map(|d| format!("{d:.3e}")).collect();
    Ok((monotone && last.abs() <= 1e-6, format!("deficits {}", listed.join(" "))))
}

fn moment_consistency(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let p = periodic_probe(&g)?;
    let m = to_position_coefficients(&p, -512, 512)?.moments()?;
    let dm = (m.mean - p.expectation_x()?).abs();
    let dv = (m.variance - p.variance_x()?).abs();
    Ok((dm <= 1e-7 && dv <= 1e-7, format!("mean diff {dm:e}, variance diff {dv:e}")))
}

fn continuum_lattice(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let p = random_probe(&g, seed, 4000)?;
    let amps = to_position_coefficients(&p, -20, 20)?;
    let mut worst: f64 = 0.0;
    for (n, c) in amps.iter() {
        worst = worst.max((position_amplitude_continuum(&p, 2.0 * n as f64)? - c).norm());
    }
    Ok((worst <= 1e-12, format!("max difference {worst:e}")))
}

fn functional_matches_shift(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    let mut flat: f64 = 0.0;
    for s in 0..10 {
        let p = gauge_fix(&random_probe(&g, seed, 5000 + s)?.normalized()?)?;
        let k = kernel(1.0, 1.0);
        let f = GaugeFixedFunctional::new(k, zero())?;
        worst = worst.max((f.value(&p)? - k.shift(&p)?).abs());
        // the shift part is flat along translations
        for x0 in [-5.0, 3.0] {
            let q = p.gauge_translate(x0);
            flat = flat.max(((f.value(&q)? - q.expectation_x()?) - f.value(&p)?).abs());
        }
    }
    Ok((
        worst <= 1e-10 && flat <= 1e-9,
        format!("F - shift {worst:e}, translation change {flat:e}"),
    ))
}

fn gradient_finite_differences(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::symmetric(64)?;
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    for s in 0..4 {
        let p = random_probe(&g, seed, 6000 + s)?;
        for mu in [zero(), Complex64::new(0.3, 0.0)] {
            let f = GaugeFixedFunctional::new(kernel(1.0, 1.0), mu)?;
            let an = f.gradient(&p)?;
            let scale = an.0.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for j in 0..g.n_points() {
                for (dir, part) in [(Complex64::new(1.0, 0.0), an.0[j].re), (Complex64::i(), an.0[j].im)] {
                    let mut plus = p.values().to_vec();
                    let mut minus = p.values().to_vec();
                    plus[j] += dir * step;
                    minus[j] -= dir * step;
                    let fp = f.value(&ProbeWaveFunction::new(g.clone(), plus)?)?;
                    let fm = f.value(&ProbeWaveFunction::new(g.clone(), minus)?)?;
                    worst = worst.max(((fp - fm) / (2.0 * step) - part).abs() / scale);
                }
            }
        }
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:e}")))
}

fn optimum_stationarity(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst_grad: f64 = 0.0;
    let mut exps = Vec::new();
    for (re, im) in [(1.0, 1.0), (2.0, -1.0), (0.5, 0.5)] {
        let k = kernel(re, im);
        let f = GaugeFixedFunctional::new(k, zero())?;
        for x0 in [0.0, 2.0, 4.0] {
            let p = gauge_fix(&analytic_optimal_probe(&k, x0, &g)?)?;
            let rep = stationarity_check(&p, &f, 4, seed)?;
            worst_grad = worst_grad.max(rep.grad_norm);
            exps.push(rep.scaling_exponent);
        }
    }
    let ok = worst_grad <= 1e-6 && exps.iter().all(|e| (1.8..=2.2).contains(e));
    Ok((ok, format!("max grad {worst_grad:e}, exponents {exps:.3?}")))
}

fn eigenstate_characterization(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst: f64 = 0.0;
    for (re, im) in [(1.0, 1.0), (2.0, -1.0), (0.5, 0.5)] {
        let k = kernel(re, im);
        for x0 in [0.0, 2.0, 3.0] {
            let fin = k.final_probe(&analytic_optimal_probe(&k, x0, &g)?)?;
            for (kk, v) in g.nodes().zip(fin.values()) {
                worst = worst.max((v - Complex64::cis(-x0 * kk) / PI.sqrt()).norm());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max pointwise error {worst:e}")))
}

fn multiplier_recovers_constraint(seed: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let mut worst_fixed: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for s in 0..10 {
        let p = random_probe(&g, seed, 7000 + s)?.gauge_translate(3.0);
        let d = GaugeFixedFunctional::multiplier_derivative(&p);
        let want = p.norm_squared() * p.expectation_x()?;
        worst_rel = worst_rel.max((d - want).abs() / want.abs().max(1.0));
        worst_fixed = worst_fixed.max(GaugeFixedFunctional::multiplier_derivative(&gauge_fix(&p)?).abs());
    }
    Ok((
        worst_rel <= 1e-12 && worst_fixed <= 1e-10,
        format!("dF/dmu vs N<x> {worst_rel:e}, after gauge fix {worst_fixed:e}"),
    ))
}

fn branch_classification(_: u64) -> Result<(bool, String)> {
    let (lo, hi) = (-PI / 2.0, PI / 2.0);
    let good = normalizability_check(|g| inverse_kernel_probe(&kernel(1.0, 1.0), 0.0, g), lo, hi, &BRANCH_REFINEMENTS)?;
    let bad = normalizability_check(|g| inverse_kernel_probe(&kernel(0.0, 1.0), 0.0, g), lo, hi, &BRANCH_REFINEMENTS)?;
    Ok((
        good == Normalizability::Converging && bad == Normalizability::Diverging,
        format!("A=1+i: {good:?}, A=i: {bad:?}"),
    ))
}

fn eigenstate_pair_closed_form(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let k = kernel(1.0, 1.0);
    let mut worst: f64 = 0.0;
    for p in [0.2, 0.5, 0.9] {
        let fam = make_family(FamilySpec::EigenstatePair { weight: p }, &g)?;
        for a in [2.0, 5.0, 9.0] {
            let row = evaluate(&fam, a, &k, 256)?;
            let far = 2.0 * f64::floor(a);
            worst = worst
                .max((row.shift - (1.0 - p) * far).abs())
                .max((row.variance_f - p * (1.0 - p) * far * far).abs() / (far * far));
        }
    }
    Ok((worst <= 1e-8, format!("max error {worst:e}")))
}

fn tradeoff_law(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let fam = make_family(FamilySpec::EigenstatePair { weight: 0.5 }, &g)?;
    let t = sweep(&fam, &[4.0, 8.0, 16.0, 32.0], &kernel(1.0, 1.0), 256)?;
    let fit = fit_scaling(&t.rows)?;
    let gap = fit.variance_exponent - 2.0 * fit.shift_exponent;
    Ok((gap.abs() <= 0.05 && t.failures.is_empty(), format!("variance - 2 shift exponent = {gap:e}")))
}

fn kronecker_snr_dominates(_: u64) -> Result<(bool, String)> {
    let g = MomentumGrid::default();
    let k = kernel(1.0, 1.0);
    let kron = make_family(FamilySpec::Kronecker, &g)?;
    let pair = make_family(FamilySpec::EigenstatePair { weight: 0.5 }, &g)?;
    let mut ok = true;
    for a in [4.0, 8.0, 16.0] {
        // equal shifts: pair at alpha puts half its weight at 2 alpha
        let opt = evaluate(&kron, a, &k, 256)?;
        let tri = evaluate(&pair, a, &k, 256)?;
        ok &= (opt.shift - tri.shift).abs() < 1e-8 && opt.snr > tri.snr;
    }
    Ok((ok, "SNR(Kronecker) > SNR(pair) at equal shift; variance floored at 1e-12".into()))
}

const CHECKS: [(&str, Check); 19] = [
    ("grid.gauge_norm_preservation", gauge_norm_preservation),
    ("grid.translation_covariance", translation_covariance),
    ("grid.eigenstate_identities", eigenstate_identities),
    ("kernel.shift_gauge_invariance", shift_gauge_invariance),
    ("kernel.overlap_irrelevance", overlap_irrelevance),
    ("kernel.norm_bounds", kernel_norm_bounds),
    ("spectrum.orthonormality", spectrum_orthonormality),
    ("spectrum.parseval_convergence", parseval_convergence),
    ("spectrum.moment_consistency", moment_consistency),
    ("spectrum.continuum_lattice", continuum_lattice),
    ("variational.functional_matches_shift", functional_matches_shift),
    ("variational.gradient_finite_differences", gradient_finite_differences),
    ("variational.optimum_stationarity", optimum_stationarity),
    ("variational.eigenstate_characterization", eigenstate_characterization),
    ("variational.multiplier_recovers_constraint", multiplier_recovers_constraint),
    ("variational.branch_classification", branch_classification),
    ("families.eigenstate_pair_closed_form", eigenstate_pair_closed_form),
    ("families.tradeoff_law", tradeoff_law),
    ("families.kronecker_snr_dominates", kronecker_snr_dominates),
];

/// Runs every property; a property that errors counts as failed.
pub fn run_suite(seed: u64) -> Vec<PropertyOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| match check(seed) {
            Ok((passed, detail)) => PropertyOutcome { name, passed, detail },
            Err(e) => PropertyOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

pub fn property_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}
