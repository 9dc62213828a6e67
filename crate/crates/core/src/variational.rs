//! The gauge-fixed shift functional and its stationary points.
//!
//! ```text
//! F(xi) = -Im{ int [B xi]* [B xi]' dk / N_f  -  mu~ int xi* xi' dk }
//! ```
//!
//! The first term is `<x>_f`. Translating `xi -> exp(i x0 k) xi` moves `<x>_i`
//! and `<x>_f` together, so the shift is flat along that direction; the
//! condition `<x>_i = 0` fixes the gauge, and its multiplier combines with
//! `1/N_i` into the free parameter `mu~`.
//!
//! Admissible variations keep `||xi|| = 1`, `<x>_i = 0` to first order and
//! vanish on the boundary-closure strip of the derivative stencil (the
//! discrete form of fixed-endpoint variations; without it the boundary term
//! of the integration by parts never vanishes).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, ProbeWaveFunction, NORM_FLOOR};
use crate::postselection::PostselectionKernel;
use crate::stencil::DerivativeStencil;

/// A direction in probe space. Component `j` packs the partial derivatives
/// with respect to `Re xi_j` and `Im xi_j` into its real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction(pub Vec<Complex64>);

impl Direction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Real inner product over all `2n` components.
    pub fn dot(&self, other: &Direction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    fn axpy(&mut self, a: f64, x: &Direction) {
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += v * a;
        }
    }

    /// Interleaved `[d/dRe xi_0, d/dIm xi_0, d/dRe xi_1, ...]`.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().flat_map(|v| [v.re, v.im]).collect()
    }
}

/// `2 W xi`: gradient of the squared norm.
fn norm_gradient(grid: &MomentumGrid, xi: &[Complex64]) -> Vec<Complex64> {
    xi.iter()
        .enumerate()
        .map(|(j, v)| v * (2.0 * grid.weight(j)))
        .collect()
}

fn weighted(grid: &MomentumGrid, xi: &[Complex64]) -> Vec<Complex64> {
    xi.iter().enumerate().map(|(j, v)| v * grid.weight(j)).collect()
}

/// Gradient of `P(xi) = -Im(xi^H W D xi)`, which is `i (W D xi - D^T W xi)`.
fn position_form_gradient(grid: &MomentumGrid, xi: &[Complex64]) -> Vec<Complex64> {
    let st = grid.stencil();
    let wd = weighted(grid, &st.apply(xi));
    let dtw = st.apply_transpose(&weighted(grid, xi));
    wd.iter()
        .zip(&dtw)
        .map(|(a, b)| Complex64::i() * (a - b))
        .collect()
}

/// Gradient of `Re(xi^H W D xi)`, which is `W D xi + D^T W xi`.
fn boundary_form_gradient(grid: &MomentumGrid, xi: &[Complex64]) -> Vec<Complex64> {
    let st = grid.stencil();
    let wd = weighted(grid, &st.apply(xi));
    let dtw = st.apply_transpose(&weighted(grid, xi));
    wd.iter().zip(&dtw).map(|(a, b)| a + b).collect()
}

/// Gradient of `<x>` at `probe`.
fn expectation_gradient(probe: &ProbeWaveFunction) -> Result<Vec<Complex64>> {
    let n = probe.norm_squared();
    if n <= NORM_FLOOR {
        return Err(Error::ZeroNorm(n));
    }
    let x = probe.expectation_x()?;
    let grid = probe.grid();
    let p = position_form_gradient(grid, probe.values());
    let w = norm_gradient(grid, probe.values());
    Ok(p.iter().zip(&w).map(|(a, b)| (a - b * x) / n).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeFixedFunctional {
    kernel: PostselectionKernel,
    mu_tilde: Complex64,
}

impl GaugeFixedFunctional {
    pub fn new(kernel: PostselectionKernel, mu_tilde: Complex64) -> Result<Self> {
        if !(mu_tilde.re.is_finite() && mu_tilde.im.is_finite()) {
            return Err(Error::BadParams(format!("mu_tilde must be finite, got {mu_tilde}")));
        }
        Ok(Self { kernel, mu_tilde })
    }

    pub fn kernel(&self) -> &PostselectionKernel {
        &self.kernel
    }

    pub fn mu_tilde(&self) -> Complex64 {
        self.mu_tilde
    }

    pub fn value(&self, probe: &ProbeWaveFunction) -> Result<f64> {
        let (raw, _) = self.kernel.apply(probe)?;
        let first = raw.expectation_x()?;
        let t2 = probe.overlap_with_derivative();
        // -Im{-mu~ T2} = Im(mu~ T2)
        Ok(first + (self.mu_tilde * t2).im)
    }

    /// Analytic gradient of [`value`](Self::value) with respect to the real and
    /// imaginary parts of every sample.
    pub fn gradient(&self, probe: &ProbeWaveFunction) -> Result<Direction> {
        let grid = probe.grid();
        let (raw, n_f) = self.kernel.apply(probe)?;
        let x_f = raw.expectation_x()?;
        let p = position_form_gradient(grid, raw.values());
        let w = norm_gradient(grid, raw.values());
        let mut out: Vec<Complex64> = grid
            .nodes()
            .zip(p.iter().zip(&w))
            .map(|(k, (a, b))| self.kernel.eval(k).conj() * (a - b * x_f) / n_f)
            .collect();
        let mu = self.mu_tilde;
        if mu.re != 0.0 {
            let q = position_form_gradient(grid, probe.values());
            for (o, v) in out.iter_mut().zip(&q) {
                *o -= v * mu.re;
            }
        }
        if mu.im != 0.0 {
            let s = boundary_form_gradient(grid, probe.values());
            for (o, v) in out.iter_mut().zip(&s) {
                *o += v * mu.im;
            }
        }
        Ok(Direction(out))
    }

    /// Derivative of the multiplier term `-Im[mu int xi* xi']` with respect
    /// to a real `mu`: `-Im int xi* xi' = N_i <x>_i`. Zero exactly when the
    /// gauge condition holds.
    pub fn multiplier_derivative(probe: &ProbeWaveFunction) -> f64 {
        -probe.overlap_with_derivative().im
    }
}

/// Translates `probe` so that `<x>_i = 0`.
///
/// For smooth probes the discrete expectation moves one-for-one with the
/// translation and the first step lands within round-off. Rough probes see
/// stencil error in that slope, so the remaining steps use secant updates on
/// the measured expectation.
pub fn gauge_fix(probe: &ProbeWaveFunction) -> Result<ProbeWaveFunction> {
    const TOL: f64 = 1e-13;
    let x0 = probe.expectation_x()?;
    if x0 == 0.0 {
        return Ok(probe.clone());
    }
    let (mut t_prev, mut x_prev) = (0.0, x0);
    let mut t = x0;
    let mut out = probe.gauge_translate(t);
    for _ in 0..40 {
        let x = out.expectation_x()?;
        if x.abs() <= TOL {
            break;
        }
        let slope = (x - x_prev) / (t - t_prev);
        let step = if slope.is_finite() && slope < -1e-3 { -x / slope } else { x };
        t_prev = t;
        x_prev = x;
        t += step;
        out = probe.gauge_translate(t);
    }
    Ok(out)
}

/// Normalize, then gauge-fix.
pub fn retract(probe: &ProbeWaveFunction) -> Result<ProbeWaveFunction> {
    gauge_fix(&probe.normalized()?)
}

fn add_direction(probe: &ProbeWaveFunction, eps: f64, d: &Direction) -> Result<ProbeWaveFunction> {
    let values = probe
        .values()
        .iter()
        .zip(&d.0)
        .map(|(v, dv)| v + dv * eps)
        .collect();
    ProbeWaveFunction::new(probe.grid().clone(), values)
}

/// Zeroes the components on the boundary-closure strips.
fn mask_boundary(d: &mut [Complex64]) {
    let n = d.len();
    let w = DerivativeStencil::closure_width().min(n.div_ceil(2));
    let zero = Complex64::new(0.0, 0.0);
    d[..w].fill(zero);
    d[n - w..].fill(zero);
}

/// Projects `direction` onto the admissible variations at `probe`: the
/// boundary strip is cleared and the components along the gradients of
/// `||xi||^2` and `<x>_i` are removed.
pub fn project_constraints(direction: &Direction, probe: &ProbeWaveFunction) -> Result<Direction> {
    let grid = probe.grid();
    if direction.len() != grid.n_points() {
        return Err(Error::BadParams(format!(
            "direction has {} components for {} nodes",
            direction.len(),
            grid.n_points()
        )));
    }
    let mut basis: Vec<Direction> = Vec::with_capacity(2);
    for g in [norm_gradient(grid, probe.values()), expectation_gradient(probe)?] {
        let full = Direction(g.clone());
        let mut v = Direction(g);
        mask_boundary(&mut v.0);
        let masked_norm = v.norm();
        // a constraint whose gradient lives only on the strip is inactive
        if masked_norm <= 1e-13 * full.norm().max(f64::MIN_POSITIVE) || masked_norm == 0.0 {
            continue;
        }
        for e in &basis {
            let c = v.dot(e);
            v.axpy(-c, e);
        }
        let r = v.norm();
        if r <= 1e-12 * masked_norm {
            return Err(Error::DegenerateConstraints);
        }
        basis.push(v.scaled(1.0 / r));
    }
    let mut out = direction.clone();
    mask_boundary(&mut out.0);
    // twice for round-off
    for _ in 0..2 {
        for e in &basis {
            let c = out.dot(e);
            out.axpy(-c, e);
        }
    }
    Ok(out)
}

/// Initial probe `C exp(-i x0 k) / B(k)`, normalized. Its postselected probe
/// is the position eigenstate `exp(-i x0 k)/sqrt(pi)`, so `<x>_f = x0`; the
/// gauge-invariant shift of the whole family is fixed by the weak value.
pub fn analytic_optimal_probe(
    kernel: &PostselectionKernel,
    x0: f64,
    grid: &MomentumGrid,
) -> Result<ProbeWaveFunction> {
    kernel.check_nonvanishing(grid)?;
    inverse_kernel_probe(kernel, x0, grid)?.normalized()
}

/// Unnormalized `exp(-i x0 k) / B(k)` without the kernel-zero check.
pub fn inverse_kernel_probe(
    kernel: &PostselectionKernel,
    x0: f64,
    grid: &MomentumGrid,
) -> Result<ProbeWaveFunction> {
    ProbeWaveFunction::from_fn(grid, |k| Complex64::cis(-x0 * k) / kernel.eval(k))
}

/// Stationary solution of the augmented functional for a fixed
/// `c = mu~ N_f` (real `mu~`) and final mean `x_f`:
///
/// ```text
/// |xi|^2 = 1 / | |B|^2 - c |,   (arg xi)' = -(x_f |B|^2 + Im(B* B')) / (|B|^2 - c)
/// ```
///
/// For `c = 0` this is `exp(-i x_f k) / B`. When `c` lies inside the range of
/// `|B|^2` the modulus has a `1/|k - k0|` singularity and the norm diverges
/// logarithmically. Returned unnormalized; the phase starts at 0 on `k_min`.
pub fn stationary_branch_probe(
    kernel: &PostselectionKernel,
    x_f: f64,
    c: f64,
    grid: &MomentumGrid,
) -> Result<ProbeWaveFunction> {
    let a = kernel.weak_value();
    let pref = if kernel.include_overlap() {
        kernel.overlap()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut phase_rate = Vec::with_capacity(grid.n_points());
    let mut modulus = Vec::with_capacity(grid.n_points());
    for k in grid.nodes() {
        let b = kernel.eval(k);
        let db = pref * (Complex64::new(-k.sin(), 0.0) - Complex64::i() * a * k.cos());
        let b2 = b.norm_sqr();
        let gap = b2 - c;
        modulus.push(1.0 / gap.abs().sqrt());
        phase_rate.push(-(x_f * b2 + (b.conj() * db).im) / gap);
    }
    let h = grid.spacing();
    let mut phase = 0.0;
    let mut values = Vec::with_capacity(grid.n_points());
    for j in 0..grid.n_points() {
        if j > 0 {
            phase += 0.5 * h * (phase_rate[j - 1] + phase_rate[j]);
        }
        values.push(Complex64::from_polar(modulus[j], phase));
    }
    ProbeWaveFunction::new(grid.clone(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalizability {
    Converging,
    Diverging,
    Indeterminate,
}

/// Tracks the squared norm of `builder`'s probe across grid refinements.
///
/// `Converging`: every successive relative change is at most `1e-4` and the
/// changes do not grow. `Diverging`: the norm grows at least 1.5x from the
/// coarsest to the finest grid (or stops being finite). Otherwise `Indeterminate`.
pub fn normalizability_check<F>(
    builder: F,
    k_min: f64,
    k_max: f64,
    refinements: &[usize],
) -> Result<Normalizability>
where
    F: Fn(&MomentumGrid) -> Result<ProbeWaveFunction>,
{
    if refinements.len() < 3 || refinements.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParams(
            "refinements must be strictly increasing with at least 3 entries".into(),
        ));
    }
    let mut norms = Vec::with_capacity(refinements.len());
    for &n in refinements {
        let grid = MomentumGrid::new(k_min, k_max, n)?;
        match builder(&grid) {
            Ok(p) => norms.push(p.norm_squared()),
            // a sample landing on the singularity
            Err(Error::InvalidProbe(_)) => return Ok(Normalizability::Diverging),
            Err(e) => return Err(e),
        }
    }
    Ok(classify_norms(&norms))
}

fn classify_norms(norms: &[f64]) -> Normalizability {
    if norms.iter().any(|n| !n.is_finite()) {
        return Normalizability::Diverging;
    }
    let changes: Vec<f64> = norms
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(f64::MIN_POSITIVE))
        .collect();
    let small = changes.iter().all(|&c| c <= 1e-4);
    let settling = changes.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if small && settling {
        return Normalizability::Converging;
    }
    let first = norms[0];
    let last = norms[norms.len() - 1];
    if first > 0.0 && last >= 1.5 * first {
        Normalizability::Diverging
    } else {
        Normalizability::Indeterminate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Normalizable,
    UnNormalizable,
    Indeterminate,
}

impl From<Normalizability> for Branch {
    fn from(n: Normalizability) -> Self {
        match n {
            Normalizability::Converging => Branch::Normalizable,
            Normalizability::Diverging => Branch::UnNormalizable,
            Normalizability::Indeterminate => Branch::Indeterminate,
        }
    }
}

/// Grids used to classify a stationary point's branch.
pub const BRANCH_REFINEMENTS: [usize; 3] = [512, 2048, 8192];

/// Branch of the stationary family through a converged point: the
/// [`stationary_branch_probe`] with the point's shift and `c = mu~ N_f`,
/// checked for normalizability across [`BRANCH_REFINEMENTS`].
pub fn classify_branch(functional: &GaugeFixedFunctional, probe: &ProbeWaveFunction) -> Result<Branch> {
    let mu = functional.mu_tilde();
    if mu.im != 0.0 {
        // the closed form assumes a real multiplier
        return Ok(Branch::Indeterminate);
    }
    let kernel = functional.kernel();
    let (raw, n_f) = kernel.apply(probe)?;
    let x_f = raw.expectation_x()? - probe.expectation_x()?;
    let c = mu.re * n_f / probe.norm_squared();
    if c == 0.0 {
        if let Err(Error::KernelZero { .. }) = kernel.check_nonvanishing(probe.grid()) {
            return Ok(Branch::UnNormalizable);
        }
    }
    let grid = probe.grid();
    normalizability_check(
        |g| stationary_branch_probe(kernel, x_f, c, g),
        grid.k_min(),
        grid.k_max(),
        &BRANCH_REFINEMENTS,
    )
    .map(Branch::from)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            tol: 1e-6,
            max_iter: 500,
            rng_seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::BadParams(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol.is_finite() && self.tol >= 1e-12) {
            return Err(Error::BadParams(format!("tol must be >= 1e-12, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryResult {
    /// Normalized and gauge-fixed.
    pub probe: ProbeWaveFunction,
    pub shift: f64,
    pub grad_norm: f64,
    pub mu_tilde: Complex64,
    pub branch: Branch,
    pub iterations: usize,
}

/// Projected-gradient ascent on `functional`, restoring the norm and the
/// gauge after every step. Stops once the projected gradient norm is at most
/// `cfg.tol`; otherwise returns `NotConverged` with the best iterate.
pub fn find_stationary(
    functional: &GaugeFixedFunctional,
    init: &ProbeWaveFunction,
    cfg: &OptimizerConfig,
) -> Result<StationaryResult> {
    cfg.validate()?;
    let mut probe = retract(init)?;
    let mut value = functional.value(&probe)?;
    let h = probe.grid().spacing();
    let mut step = cfg.step;
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let g = project_constraints(&functional.gradient(&probe)?, &probe)?;
        grad_norm = g.norm();
        if grad_norm <= cfg.tol {
            let branch = classify_branch(functional, &probe)?;
            let shift = functional.kernel().shift(&probe)?;
            return Ok(StationaryResult {
                probe,
                shift,
                grad_norm,
                mu_tilde: functional.mu_tilde(),
                branch,
                iterations,
            });
        }
        if iterations >= cfg.max_iter {
            break;
        }
        // node gradients carry the quadrature weight; undo it for the step
        let dir = g.scaled(1.0 / h);
        let mut accepted = false;
        while step > 1e-14 {
            let cand = retract(&add_direction(&probe, step, &dir)?)?;
            let v = functional.value(&cand)?;
            if v > value {
                probe = cand;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    let shift = functional.kernel().shift(&probe)?;
    Err(Error::NotConverged(Box::new(StationaryResult {
        probe,
        shift,
        grad_norm,
        mu_tilde: functional.mu_tilde(),
        branch: Branch::Indeterminate,
        iterations,
    })))
}

/// `sin^4` bump on the nodes between the two boundary-closure strips, zero on the strips.
fn interior_window(grid: &MomentumGrid) -> Vec<f64> {
    let strip = DerivativeStencil::closure_width() as f64 * grid.spacing();
    let (lo, hi) = (grid.k_min() + strip, grid.k_max() - strip);
    grid.nodes()
        .map(|k| {
            if k <= lo || k >= hi {
                0.0
            } else {
                (std::f64::consts::PI * (k - lo) / (hi - lo)).sin().powi(4)
            }
        })
        .collect()
}

/// Removes the constraint components of a smooth `direction` along windowed
/// copies of the constraint gradients, so the result is admissible and
/// stays smooth (the orthogonal projection subtracts masked gradients, which
/// jump at the strip edge).
pub fn project_constraints_smooth(direction: &Direction, probe: &ProbeWaveFunction) -> Result<Direction> {
    let grid = probe.grid();
    if direction.len() != grid.n_points() {
        return Err(Error::BadParams(format!(
            "direction has {} components for {} nodes",
            direction.len(),
            grid.n_points()
        )));
    }
    let window = interior_window(grid);
    let mut out = direction.clone();
    mask_boundary(&mut out.0);
    let grads = [
        Direction(norm_gradient(grid, probe.values())),
        Direction(expectation_gradient(probe)?),
    ];
    let smooth: Vec<Direction> = grads
        .iter()
        .map(|g| Direction(g.0.iter().zip(&window).map(|(v, w)| v * *w).collect()))
        .collect();
    // G[j][i] = g_j . u_i ; solve G a = (g_j . d)
    let m = [
        [grads[0].dot(&smooth[0]), grads[0].dot(&smooth[1])],
        [grads[1].dot(&smooth[0]), grads[1].dot(&smooth[1])],
    ];
    let r = [grads[0].dot(&out), grads[1].dot(&out)];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
    if det.abs() > 1e-12 * scale && scale > 0.0 {
        let a0 = (r[0] * m[1][1] - r[1] * m[0][1]) / det;
        let a1 = (m[0][0] * r[1] - m[1][0] * r[0]) / det;
        out.axpy(-a0, &smooth[0]);
        out.axpy(-a1, &smooth[1]);
        Ok(out)
    } else if m[0][0] > 0.0 && m[1][1].abs() <= 1e-12 * m[0][0] {
        // <x> constraint inactive away from the strips
        out.axpy(-r[0] / m[0][0], &smooth[0]);
        Ok(out)
    } else {
        project_constraints(direction, probe)
    }
}

/// A smooth random direction on `grid`: a band-limited trigonometric
/// polynomial under a `sin^4` window that is zero on the boundary-closure
/// strips, from stream `stream` of a ChaCha8 generator seeded with `seed`.
pub fn random_smooth_direction(grid: &MomentumGrid, seed: u64, stream: u64) -> Direction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let modes: Vec<(f64, Complex64)> = (-4..=4)
        .map(|q| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (q as f64, c)
        })
        .collect();
    let window = interior_window(grid);
    let len = grid.k_max() - grid.k_min();
    Direction(
        grid.nodes()
            .zip(&window)
            .map(|(k, w)| {
                let t = 2.0 * std::f64::consts::PI * (k - grid.k_min()) / len;
                modes.iter().map(|(q, c)| c * Complex64::cis(q * t)).sum::<Complex64>() * *w
            })
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationarityReport {
    pub grad_norm: f64,
    /// Log-log slope of the trial-averaged `|F(xi_eps) - F(xi)|` against `eps`.
    pub scaling_exponent: f64,
    /// `(eps, mean |dF|)`.
    pub deltas: Vec<(f64, f64)>,
}

pub const PERTURBATION_SCALES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// First-order stationarity test at a feasible `probe`: the projected
/// gradient norm, and how `|dF|` scales along random admissible directions
/// (about 2 at a stationary point, about 1 elsewhere). Perturbed probes are
/// normalized and gauge-fixed before evaluation.
pub fn stationarity_check(
    probe: &ProbeWaveFunction,
    functional: &GaugeFixedFunctional,
    trials: usize,
    seed: u64,
) -> Result<StationarityReport> {
    if trials == 0 {
        return Err(Error::BadParams("need at least one trial".into()));
    }
    let grad = project_constraints(&functional.gradient(probe)?, probe)?;
    let base = functional.value(probe)?;
    let grid = probe.grid();
    let weights = grid.weights();
    let mut sums = vec![0.0; PERTURBATION_SCALES.len()];
    for t in 0..trials {
        let raw = random_smooth_direction(grid, seed, t as u64);
        let d = project_constraints_smooth(&raw, probe)?;
        let len = d
            .0
            .iter()
            .zip(&weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt();
        if len == 0.0 {
            continue;
        }
        let d = d.scaled(1.0 / len);
        for (s, &eps) in sums.iter_mut().zip(&PERTURBATION_SCALES) {
            let moved = retract(&add_direction(probe, eps, &d)?)?;
            *s += (functional.value(&moved)? - base).abs();
        }
    }
    let deltas: Vec<(f64, f64)> = PERTURBATION_SCALES
        .iter()
        .zip(&sums)
        .map(|(&e, &s)| (e, s / trials as f64))
        .collect();
    Ok(StationarityReport {
        grad_norm: grad.norm(),
        scaling_exponent: loglog_slope(&deltas),
        deltas,
    })
}

/// Least-squares slope of `ln y` against `ln x`; NaN if any `y` is zero.
pub(crate) fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
