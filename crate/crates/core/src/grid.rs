//! Momentum grids and sampled probe wave functions.
//!
//! Integrals use the composite trapezoid rule and derivatives the stencils of
//! [`crate::stencil`]. With `x = i d/dk` the position moments are
//! `<x> = -Im(int conj(xi) xi') / N` and `<x^2> = int |xi'|^2 / N`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stencil::DerivativeStencil;

/// Probes with a squared norm at or below this are treated as zero.
pub const NORM_FLOOR: f64 = 1e-300;

/// Relative tolerance of the `|xi(k_min)|^2 == |xi(k_max)|^2` test.
pub const PERIODIC_TOL: f64 = 1e-9;

pub const DEFAULT_POINTS: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    k_min: f64,
    k_max: f64,
    n_points: usize,
    spacing: f64,
    stencil: DerivativeStencil,
}

impl MomentumGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(k_min: f64, k_max: f64, n_points: usize) -> Result<Self> {
        if !(k_min.is_finite() && k_max.is_finite()) || k_min >= k_max {
            return Err(Error::InvalidGrid(format!(
                "need finite k_min < k_max, got [{k_min}, {k_max}]"
            )));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points must be at least {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        let spacing = (k_max - k_min) / (n_points - 1) as f64;
        Ok(Self {
            k_min,
            k_max,
            n_points,
            spacing,
            stencil: DerivativeStencil::new(n_points, spacing),
        })
    }

    /// Uniform grid on `[-pi/2, pi/2]`.
    pub fn symmetric(n_points: usize) -> Result<Self> {
        Self::new(-FRAC_PI_2, FRAC_PI_2, n_points)
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_default_domain(&self) -> bool {
        (self.k_min + FRAC_PI_2).abs() <= 1e-12 && (self.k_max - FRAC_PI_2).abs() <= 1e-12
    }

    pub(crate) fn require_default_domain(&self) -> Result<()> {
        if self.is_default_domain() {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                k_min: self.k_min,
                k_max: self.k_max,
            })
        }
    }

    pub fn node(&self, j: usize) -> f64 {
        // endpoints exactly, interior by k_min + j h
        if j + 1 == self.n_points {
            self.k_max
        } else {
            self.k_min + j as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.node(j))
    }

    /// Trapezoid weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n_points {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.weight(j)).collect()
    }

    pub fn integrate(&self, f: &[Complex64]) -> Complex64 {
        assert_eq!(f.len(), self.n_points);
        f.iter().enumerate().map(|(j, v)| v * self.weight(j)).sum()
    }

    pub fn integrate_real(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.n_points);
        f.iter().enumerate().map(|(j, v)| v * self.weight(j)).sum()
    }

    pub fn stencil(&self) -> &DerivativeStencil {
        &self.stencil
    }

    /// Same domain with a different resolution.
    pub fn with_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.k_min, self.k_max, n_points)
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self::symmetric(DEFAULT_POINTS).expect("default grid is valid")
    }
}

/// A complex probe sampled on a [`MomentumGrid`], with its squared norm cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeWaveFunction {
    grid: MomentumGrid,
    values: Vec<Complex64>,
    norm_sq: f64,
}

impl ProbeWaveFunction {
    pub fn new(grid: MomentumGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidProbe(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(j) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidProbe(format!("non-finite sample at node {j}")));
        }
        let norm_sq = grid.integrate_real(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>());
        if !norm_sq.is_finite() {
            return Err(Error::InvalidProbe("squared norm overflows".into()));
        }
        Ok(Self {
            grid,
            values,
            norm_sq,
        })
    }

    pub fn from_fn(grid: &MomentumGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Trapezoid quadrature of `|xi|^2`.
    pub fn norm_squared(&self) -> f64 {
        self.norm_sq
    }

    fn checked_norm(&self) -> Result<f64> {
        if self.norm_sq <= NORM_FLOOR {
            Err(Error::ZeroNorm(self.norm_sq))
        } else {
            Ok(self.norm_sq)
        }
    }

    /// `|xi(k_min)|^2` and `|xi(k_max)|^2` agree relative to `max |xi|^2`,
    /// i.e. the probe obeys the periodic boundary condition up to a phase.
    pub fn is_periodic_compatible(&self) -> bool {
        let peak = self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let first = self.values[0].norm_sqr();
        let last = self.values[self.values.len() - 1].norm_sqr();
        (first - last).abs() <= PERIODIC_TOL * peak
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.checked_norm()?;
        Ok(self.scaled(1.0 / n.sqrt()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let values: Vec<Complex64> = self.values.iter().map(|v| v * c).collect();
        Self {
            grid: self.grid.clone(),
            values,
            norm_sq: self.norm_sq * c * c,
        }
    }

    /// Pointwise product with a function of `k`.
    pub fn multiplied(&self, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = self
            .grid
            .nodes()
            .zip(&self.values)
            .map(|(k, v)| f(k) * v)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn derivative(&self) -> Vec<Complex64> {
        self.grid.stencil().apply(&self.values)
    }

    /// `int conj(xi) xi' dk`.
    pub fn overlap_with_derivative(&self) -> Complex64 {
        let d = self.derivative();
        let prod: Vec<Complex64> = self.values.iter().zip(&d).map(|(a, b)| a.conj() * b).collect();
        self.grid.integrate(&prod)
    }

    pub fn expectation_x(&self) -> Result<f64> {
        let n = self.checked_norm()?;
        Ok(-self.overlap_with_derivative().im / n)
    }

    /// `<x^2> - <x>^2` with `<x^2> = int |xi'|^2 / N`; round-off negatives
    /// down to `-1e-10` are clamped to zero.
    pub fn variance_x(&self) -> Result<f64> {
        let n = self.checked_norm()?;
        let d = self.derivative();
        let second = self.grid.integrate_real(&d.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()) / n;
        let mean = -self
            .grid
            .integrate(&self.values.iter().zip(&d).map(|(a, b)| a.conj() * b).collect::<Vec<_>>())
            .im
            / n;
        let var = second - mean * mean;
        if var < 0.0 && var >= -1e-10 * second.max(1.0) {
            Ok(0.0)
        } else {
            Ok(var)
        }
    }

    /// `xi(k) -> exp(i x0 k) xi(k)`. The norm is unchanged and `<x>` drops by `x0`.
    pub fn gauge_translate(&self, x0: f64) -> Self {
        let values = self
            .grid
            .nodes()
            .zip(&self.values)
            .map(|(k, v)| Complex64::cis(x0 * k) * v)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            norm_sq: self.norm_sq,
        }
    }
}

/// Normalized position eigenfunction `exp(-i x0 k) / sqrt(L)` on `grid`,
/// where `L` is the domain length (`pi` on the default domain).
pub fn position_eigenstate(grid: &MomentumGrid, x0: f64) -> ProbeWaveFunction {
    let amp = 1.0 / (grid.k_max() - grid.k_min()).sqrt();
    ProbeWaveFunction::from_fn(grid, |k| Complex64::cis(-x0 * k) * amp)
        .expect("eigenstate samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> MomentumGrid {
        MomentumGrid::default()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(MomentumGrid::new(1.0, 1.0, 64).is_err());
        assert!(MomentumGrid::new(1.0, -1.0, 64).is_err());
        assert!(MomentumGrid::new(-1.0, 1.0, 15).is_err());
        assert!(MomentumGrid::new(f64::NAN, 1.0, 64).is_err());
        assert!(MomentumGrid::new(-1.0, 1.0, 16).is_ok());
    }

    #[test]
    fn norm_of_constant_and_scaled_probe() {
        let g = grid();
        let xi = ProbeWaveFunction::from_fn(&g, |_| Complex64::new(1.0 / PI.sqrt(), 0.0)).unwrap();
        assert!((xi.norm_squared() - 1.0).abs() < 1e-13);
        assert!((xi.scaled(2.0).norm_squared() - 4.0).abs() < 4e-13);
    }

    #[test]
    fn gaussian_norm_matches_fine_quadrature() {
        // oracle: adaptive quadrature of exp(-2k^2) on [-pi/2, pi/2]
        let oracle = 1.251_208_173_095_769;
        let xi = ProbeWaveFunction::from_fn(&grid(), |k| Complex64::new((-k * k).exp(), 0.0)).unwrap();
        assert!((xi.norm_squared() - oracle).abs() < 1e-7, "{}", xi.norm_squared());
        let fine = MomentumGrid::symmetric(8 * 2048).unwrap();
        let xf = ProbeWaveFunction::from_fn(&fine, |k| Complex64::new((-k * k).exp(), 0.0)).unwrap();
        assert!((xf.norm_squared() - oracle).abs() < 1e-9);
    }

    #[test]
    fn expectation_examples() {
        let g = grid();
        let c = position_eigenstate(&g, 0.0);
        assert!(c.expectation_x().unwrap().abs() < 1e-14);
        let e = position_eigenstate(&g, 4.0);
        assert!((e.expectation_x().unwrap() - 4.0).abs() < 1e-11);
    }

    #[test]
    fn zero_norm_is_an_error() {
        let z = ProbeWaveFunction::from_fn(&grid(), |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(z.expectation_x(), Err(Error::ZeroNorm(_))));
        assert!(matches!(z.variance_x(), Err(Error::ZeroNorm(_))));
        assert!(z.normalized().is_err());
    }

    #[test]
    fn variance_examples() {
        let g = grid();
        assert!(position_eigenstate(&g, 2.0).variance_x().unwrap() <= 1e-10);
        let two = ProbeWaveFunction::from_fn(&g, |k| {
            (Complex64::new(1.0, 0.0) + Complex64::cis(-2.0 * k)) / (2.0 * PI).sqrt()
        })
        .unwrap();
        assert!((two.variance_x().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_variance_matches_closed_integral() {
        // oracle: int 4k^2 e^{-2k^2} / int e^{-2k^2} by adaptive quadrature
        let xi = ProbeWaveFunction::from_fn(&grid(), |k| Complex64::new((-k * k).exp(), 0.0)).unwrap();
        let v = xi.variance_x().unwrap();
        assert!((v - 0.981_942_279_149_091_3).abs() < 1e-6, "{v}");
    }

    #[test]
    fn gauge_translate_examples() {
        let g = grid();
        let c = position_eigenstate(&g, 0.0);
        assert_eq!(c.gauge_translate(0.0), c);
        let t = c.gauge_translate(-2.0);
        let e = position_eigenstate(&g, 2.0);
        for (a, b) in t.values().iter().zip(e.values()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!((t.expectation_x().unwrap() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn derivative_examples() {
        let g = grid();
        let e = position_eigenstate(&g, 2.0);
        let d = e.derivative();
        let max_err = d
            .iter()
            .zip(e.values())
            .map(|(a, b)| (a - Complex64::new(0.0, -2.0) * b).norm())
            .fold(0.0, f64::max);
        assert!(max_err <= g.spacing().powi(4));
        let c = ProbeWaveFunction::from_fn(&g, |_| Complex64::new(0.7, -0.2)).unwrap();
        assert!(c.derivative().iter().all(|v| v.norm() <= 1e-12));
        let sq = ProbeWaveFunction::from_fn(&g, |k| Complex64::new(k * k, 0.0)).unwrap();
        for (k, v) in g.nodes().zip(sq.derivative()) {
            assert!((v - Complex64::new(2.0 * k, 0.0)).norm() <= 1e-8);
        }
    }

    #[test]
    fn periodic_compatibility_flag() {
        let g = grid();
        assert!(position_eigenstate(&g, 3.3).is_periodic_compatible());
        let lopsided = ProbeWaveFunction::from_fn(&g, |k| Complex64::new(1.0 + k, 0.0)).unwrap();
        assert!(!lopsided.is_periodic_compatible());
    }

    #[test]
    fn eigenstate_identities_up_to_eight() {
        let g = grid();
        for n in -8..=8 {
            let e = position_eigenstate(&g, 2.0 * n as f64);
            assert!((e.expectation_x().unwrap() - 2.0 * n as f64).abs() <= 1e-10, "n={n}");
            assert!(e.variance_x().unwrap() <= 1e-10, "n={n}");
        }
    }
}
