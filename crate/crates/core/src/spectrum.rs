//! Discrete position spectrum of probes on `[-pi/2, pi/2]`.
//!
//! With the periodic boundary condition the position eigenvalues are
//! `x = 2n` and the expansion coefficients are
//! `c_n = (1/sqrt(pi)) int exp(i 2n k) xi(k) dk`, so the eigenstate
//! `exp(-i 2m k) / sqrt(pi)` has `c_n = delta_mn`.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, ProbeWaveFunction, NORM_FLOOR};
use crate::stencil::EDGE_ORDERS;

#[derive(Clone, Debug, PartialEq)]
pub struct PositionAmplitudes {
    n_min: i64,
    coeffs: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteMoments {
    pub mean: f64,
    pub variance: f64,
    /// `sum |c_n|^2` over the retained range; moments are renormalized by it.
    pub captured_weight: f64,
}

impl PositionAmplitudes {
    pub fn new(n_min: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::BadParams("empty coefficient range".into()));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BadParams("non-finite coefficient".into()));
        }
        Ok(Self { n_min, coeffs })
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        let idx = n.checked_sub(self.n_min)?;
        usize::try_from(idx).ok().and_then(|i| self.coeffs.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.n_min + i as i64, *c))
    }

    /// Restriction to `|n| <= cutoff`.
    pub fn truncated(&self, cutoff: i64) -> Result<Self> {
        let lo = self.n_min.max(-cutoff);
        let hi = self.n_max().min(cutoff);
        if lo > hi {
            return Err(Error::EmptySpectrum(0.0));
        }
        let coeffs = (lo..=hi).map(|n| self.get(n).unwrap()).collect();
        Ok(Self { n_min: lo, coeffs })
    }

    pub fn captured_weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Mean and variance of the renormalized distribution `|c_n|^2 / W` on `x = 2n`.
    pub fn moments(&self) -> Result<DiscreteMoments> {
        let w = self.captured_weight();
        if w <= NORM_FLOOR {
            return Err(Error::EmptySpectrum(w));
        }
        let mean = self.iter().map(|(n, c)| 2.0 * n as f64 * c.norm_sqr()).sum::<f64>() / w;
        let variance = self
            .iter()
            .map(|(n, c)| (2.0 * n as f64 - mean).powi(2) * c.norm_sqr())
            .sum::<f64>()
            / w;
        Ok(DiscreteMoments {
            mean,
            variance,
            captured_weight: w,
        })
    }
}

/// `(1/sqrt(pi)) int exp(i x k) xi(k) dk`: trapezoid sum plus the
/// `h^2/12` and `h^4/720` Euler-Maclaurin end corrections. The corrections
/// vanish when the integrand is periodic (lattice points `x = 2n` of a
/// periodic-compatible probe), leaving the plain trapezoid rule there.
fn transform_at(probe: &ProbeWaveFunction, x: f64) -> Complex64 {
    let grid = probe.grid();
    let h = grid.spacing();
    let trapezoid: Complex64 = probe
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| Complex64::cis(x * grid.node(j)) * v * grid.weight(j))
        .sum();
    let (left, right) = grid.stencil().edge_derivatives(probe.values());
    let iw = Complex64::new(0.0, x);
    // d^p/dk^p [exp(i x k) xi(k)] / exp(i x k), by Leibniz
    let leibniz = |d: &[Complex64; EDGE_ORDERS], p: usize| -> Complex64 {
        (0..=p)
            .map(|j| iw.powi((p - j) as i32) * d[j] * BINOMIAL[p][j])
            .sum()
    };
    let phase_a = Complex64::cis(x * grid.k_min());
    let phase_b = Complex64::cis(x * grid.k_max());
    let jump = |p: usize| phase_b * leibniz(&right, p) - phase_a * leibniz(&left, p);
    let corrected = trapezoid - jump(1) * (h * h / 12.0) + jump(3) * (h.powi(4) / 720.0);
    corrected / PI.sqrt()
}

const BINOMIAL: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

/// Coefficients `c_n` for `n_min <= n <= n_max` by trapezoid quadrature.
pub fn to_position_coefficients(
    probe: &ProbeWaveFunction,
    n_min: i64,
    n_max: i64,
) -> Result<PositionAmplitudes> {
    probe.grid().require_default_domain()?;
    if n_min > n_max {
        return Err(Error::BadParams(format!("n_min {n_min} > n_max {n_max}")));
    }
    let coeffs = (n_min..=n_max)
        .map(|n| transform_at(probe, 2.0 * n as f64))
        .collect();
    PositionAmplitudes::new(n_min, coeffs)
}

/// `a(x) = (1/sqrt(pi)) int exp(i k x) xi(k) dk` off the lattice.
pub fn position_amplitude_continuum(probe: &ProbeWaveFunction, x: f64) -> Result<Complex64> {
    probe.grid().require_default_domain()?;
    Ok(transform_at(probe, x))
}

/// Continuum amplitude of the eigenstate `exp(-i 2m k)/sqrt(pi)`:
/// `(2/pi) sin[(pi/2)(x - 2m)] / (x - 2m)`, equal to 1 at `x = 2m`.
pub fn eigenstate_amplitude(m: i64, x: f64) -> f64 {
    let u = x - 2.0 * m as f64;
    let t = 0.5 * PI * u;
    if u.abs() < 1e-6 {
        // sin(t)/t series
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        FRAC_2_PI * t.sin() / u
    }
}

/// `max_{|n| <= n_range} |c_n - delta_mn|`.
pub fn kronecker_check(probe: &ProbeWaveFunction, m: i64, n_range: i64) -> Result<f64> {
    let n_range = n_range.abs();
    let amps = to_position_coefficients(probe, -n_range, n_range)?;
    Ok(amps
        .iter()
        .map(|(n, c)| {
            let delta = if n == m { 1.0 } else { 0.0 };
            (c - delta).norm()
        })
        .fold(0.0, f64::max))
}

/// Discrete variance at each truncation `|n| <= cutoff`.
pub fn variance_divergence_scan(
    probe: &ProbeWaveFunction,
    cutoffs: &[i64],
) -> Result<Vec<(i64, f64)>> {
    let widest = cutoffs.iter().map(|c| c.abs()).max().unwrap_or(0);
    let amps = to_position_coefficients(probe, -widest, widest)?;
    cutoffs
        .iter()
        .map(|&c| Ok((c, amps.truncated(c.abs())?.moments()?.variance)))
        .collect()
}

/// Synthesis `xi(k) = (1/sqrt(pi)) sum_n c_n exp(-i 2n k)`.
pub fn from_position_coefficients(
    amps: &PositionAmplitudes,
    grid: &MomentumGrid,
) -> Result<ProbeWaveFunction> {
    grid.require_default_domain()?;
    let scale = 1.0 / PI.sqrt();
    ProbeWaveFunction::from_fn(grid, |k| {
        amps.iter()
            .map(|(n, c)| c * Complex64::cis(-2.0 * n as f64 * k))
            .sum::<Complex64>()
            * scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::position_eigenstate;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenstates_map_to_kronecker_deltas() {
        let g = MomentumGrid::default();
        for m in -8..=8 {
            let xi = position_eigenstate(&g, 2.0 * m as f64);
            assert!(kronecker_check(&xi, m, 64).unwrap() <= 1e-10, "m={m}");
        }
    }

    #[test]
    fn two_mode_expansion() {
        let g = MomentumGrid::default();
        let xi = ProbeWaveFunction::from_fn(&g, |k| (c(1.0, 0.0) + Complex64::cis(-2.0 * k)) / (2.0 * PI).sqrt()).unwrap();
        let a = to_position_coefficients(&xi, -3, 3).unwrap();
        assert!((a.get(0).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((a.get(1).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!(a.get(2).unwrap().norm() < 1e-14);
        assert!(a.get(4).is_none());
    }

    #[test]
    fn domain_mismatch() {
        let g = MomentumGrid::new(-1.0, 1.0, 64).unwrap();
        let xi = ProbeWaveFunction::from_fn(&g, |_| c(1.0, 0.0)).unwrap();
        assert!(matches!(to_position_coefficients(&xi, 0, 1), Err(Error::DomainMismatch { .. })));
        assert!(matches!(kronecker_check(&xi, 0, 1), Err(Error::DomainMismatch { .. })));
        assert!(position_amplitude_continuum(&xi, 0.3).is_err());
    }

    #[test]
    fn continuum_amplitude_examples() {
        let g = MomentumGrid::default();
        let xi = position_eigenstate(&g, 0.0);
        assert!((position_amplitude_continuum(&xi, 0.0).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(position_amplitude_continuum(&xi, 2.0).unwrap().norm() < 1e-14);
        let a1 = position_amplitude_continuum(&xi, 1.0).unwrap();
        assert!((a1 - c(FRAC_2_PI, 0.0)).norm() < 1e-12, "{a1}");
        for x in [0.37, 3.0, 7.5, -11.2] {
            let a = position_amplitude_continuum(&xi, x).unwrap();
            assert!((a - c(eigenstate_amplitude(0, x), 0.0)).norm() < 1e-11, "x={x}");
        }
        assert!((eigenstate_amplitude(0, 1.0) - 0.636_619_772_367_581_3).abs() < 1e-15);
    }

    #[test]
    fn sinc_series_is_continuous_at_the_peak() {
        for m in [-3, 0, 5] {
            let x0 = 2.0 * m as f64;
            assert_eq!(eigenstate_amplitude(m, x0), 1.0);
            let below = eigenstate_amplitude(m, x0 + 0.999e-6);
            let above = eigenstate_amplitude(m, x0 + 1.001e-6);
            assert!((below - above).abs() < 1e-12);
            assert!(eigenstate_amplitude(m, x0 + 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moments_examples() {
        let delta = PositionAmplitudes::new(1, vec![c(1.0, 0.0)]).unwrap();
        let m = delta.moments().unwrap();
        assert_eq!((m.mean, m.variance), (2.0, 0.0));
        let mut co = vec![c(0.0, 0.0); 6];
        co[0] = c(FRAC_1_SQRT_2, 0.0);
        co[5] = c(FRAC_1_SQRT_2, 0.0);
        let m = PositionAmplitudes::new(0, co).unwrap().moments().unwrap();
        assert!((m.mean - 5.0).abs() < 1e-14);
        assert!((m.variance - 25.0).abs() < 1e-12);
        let empty = PositionAmplitudes::new(0, vec![c(0.0, 0.0)]).unwrap();
        assert!(matches!(empty.moments(), Err(Error::EmptySpectrum(_))));
    }

    #[test]
    fn odd_shift_variance_follows_series() {
        // oracle: |c_n|^2 = 4 / (pi^2 (2n-1)^2) summed directly
        let g = MomentumGrid::default();
        let xi = position_eigenstate(&g, 1.0);
        let scan = variance_divergence_scan(&xi, &[50, 100, 200]).unwrap();
        for (cut, v) in scan {
            let p = |n: i64| 4.0 / (PI * PI * ((2 * n - 1) as f64).powi(2));
            let w: f64 = (-cut..=cut).map(p).sum();
            let mean: f64 = (-cut..=cut).map(|n| 2.0 * n as f64 * p(n)).sum::<f64>() / w;
            let var: f64 = (-cut..=cut).map(|n| (2.0 * n as f64 - mean).powi(2) * p(n)).sum::<f64>() / w;
            assert!((v - var).abs() < 1e-4 * var, "cutoff {cut}: {v} vs {var}");
        }
    }

    #[test]
    fn synthesis_examples() {
        let g = MomentumGrid::default();
        let a = PositionAmplitudes::new(0, vec![c(1.0, 0.0)]).unwrap();
        let xi = from_position_coefficients(&a, &g).unwrap();
        assert!(xi.values().iter().all(|v| (v - c(1.0 / PI.sqrt(), 0.0)).norm() < 1e-15));
        let b = PositionAmplitudes::new(0, vec![c(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        let xi = from_position_coefficients(&b, &g).unwrap();
        for (k, v) in g.nodes().zip(xi.values()) {
            let want = (c(1.0, 0.0) + Complex64::cis(-2.0 * k)) / (2.0 * PI).sqrt();
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn truncation_bounds() {
        let a = PositionAmplitudes::new(-2, vec![c(1.0, 0.0); 5]).unwrap();
        let t = a.truncated(1).unwrap();
        assert_eq!((t.n_min(), t.n_max()), (-1, 1));
        let far = PositionAmplitudes::new(10, vec![c(1.0, 0.0)]).unwrap();
        assert!(far.truncated(3).is_err());
    }
}
