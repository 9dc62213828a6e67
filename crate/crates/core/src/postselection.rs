//! Qubit pre/postselection, weak values and the postselection kernel.
//!
//! For an observable with `A^2 = 1` the unitary `exp(-i k A)` equals
//! `cos k - i A sin k`, so projecting onto `<f|` leaves the probe multiplied by
//! `B(k) = <f|i> (cos k - i A_w sin k)` with `A_w = <f|A|i> / <f|i>`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, ProbeWaveFunction, NORM_FLOOR};

const UNIT_TOL: f64 = 1e-12;
/// Smallest `|<f|i>|` for which the weak value is defined.
pub const OVERLAP_FLOOR: f64 = 1e-12;
/// `|B|` at or below this on a grid node counts as a kernel zero.
pub const KERNEL_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    amp0: Complex64,
    amp1: Complex64,
}

impl QubitState {
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = amp0.norm_sqr() + amp1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidState(format!(
                "|amp0|^2 + |amp1|^2 = {norm}, expected 1"
            )));
        }
        Ok(Self { amp0, amp1 })
    }

    /// Rescales arbitrary nonzero amplitudes to a unit vector.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        Ok(Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    pub fn zero() -> Self {
        Self {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn one() -> Self {
        Self {
            amp0: Complex64::new(0.0, 0.0),
            amp1: Complex64::new(1.0, 0.0),
        }
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }
}

/// Hermitian `A = n . sigma` with unit Bloch vector `n`, so that `A^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutiveObservable {
    bloch: [f64; 3],
}

impl InvolutiveObservable {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let len = bloch.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !len.is_finite() || (len - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidObservable(format!(
                "Bloch vector length {len}, expected 1"
            )));
        }
        Ok(Self { bloch })
    }

    pub fn sigma_z() -> Self {
        Self { bloch: [0.0, 0.0, 1.0] }
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// `A |psi>`.
    pub fn apply(&self, psi: &QubitState) -> QubitState {
        let [x, y, z] = self.bloch;
        let off = Complex64::new(x, -y); // <0|A|1>
        QubitState {
            amp0: psi.amp0 * z + off * psi.amp1,
            amp1: off.conj() * psi.amp0 - psi.amp1 * z,
        }
    }
}

/// `<f|A|i> / <f|i>`.
pub fn weak_value(
    pre: &QubitState,
    post: &QubitState,
    observable: &InvolutiveObservable,
) -> Result<Complex64> {
    let overlap = post.inner(pre);
    if overlap.norm() <= OVERLAP_FLOOR {
        return Err(Error::OrthogonalSelection(overlap.norm()));
    }
    Ok(post.inner(&observable.apply(pre)) / overlap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostselectionKernel {
    weak_value: Complex64,
    include_overlap: bool,
    overlap: Complex64,
}

impl PostselectionKernel {
    pub fn from_weak_value(weak_value: Complex64) -> Self {
        Self {
            weak_value,
            include_overlap: false,
            overlap: Complex64::new(1.0, 0.0),
        }
    }

    pub fn from_states(
        pre: &QubitState,
        post: &QubitState,
        observable: &InvolutiveObservable,
    ) -> Result<Self> {
        let weak_value = weak_value(pre, post, observable)?;
        Ok(Self {
            weak_value,
            include_overlap: false,
            overlap: post.inner(pre),
        })
    }

    /// Toggles the `<f|i>` prefactor. It cancels in every normalized quantity
    /// and only matters for absolute postselection probabilities.
    pub fn with_overlap(mut self, include: bool) -> Self {
        self.include_overlap = include;
        self
    }

    pub fn weak_value(&self) -> Complex64 {
        self.weak_value
    }

    pub fn include_overlap(&self) -> bool {
        self.include_overlap
    }

    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        let b = Complex64::new(k.cos(), 0.0) - Complex64::i() * self.weak_value * k.sin();
        if self.include_overlap {
            b * self.overlap
        } else {
            b
        }
    }

    /// A zero of `B` on `[k_min, k_max]`, if any.
    ///
    /// For `cos k != 0`, `B = 0` means `tan k = -i / A_w`, which has real
    /// solutions only when `Re A_w = 0`; they sit at `atan(-1 / Im A_w) + j pi`.
    /// At `cos k = 0`, `B = -i A_w sin k` vanishes only for `A_w = 0`.
    pub fn root_in(&self, k_min: f64, k_max: f64) -> Option<f64> {
        let a = self.weak_value;
        let scale = a.norm().max(1.0);
        if self.include_overlap && self.overlap.norm() <= OVERLAP_FLOOR {
            return Some(0.5 * (k_min + k_max));
        }
        let mut candidates = Vec::new();
        if a.norm() <= UNIT_TOL {
            // B = cos k
            candidates.push(FRAC_PI_2);
        } else if a.re.abs() <= UNIT_TOL * scale {
            candidates.push((-1.0 / a.im).atan());
        }
        let period = std::f64::consts::PI;
        for base in candidates {
            let lo = ((k_min - base) / period).ceil() as i64;
            let hi = ((k_max - base) / period).floor() as i64;
            if lo <= hi {
                // the root closest to the domain center
                let mid = 0.5 * (k_min + k_max);
                let j = (((mid - base) / period).round() as i64).clamp(lo, hi);
                return Some(base + j as f64 * period);
            }
        }
        None
    }

    /// Fails with `KernelZero` if `B` vanishes on the grid's domain or
    /// `|B| <= 1e-9` at a node.
    pub fn check_nonvanishing(&self, grid: &MomentumGrid) -> Result<()> {
        if let Some(k) = self.root_in(grid.k_min(), grid.k_max()) {
            return Err(Error::KernelZero { k });
        }
        let (k, m) = grid
            .nodes()
            .map(|k| (k, self.eval(k).norm()))
            .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        if m <= KERNEL_FLOOR {
            return Err(Error::KernelZero { k });
        }
        Ok(())
    }

    /// `B xi` and its squared norm `N_f`.
    pub fn apply(&self, probe: &ProbeWaveFunction) -> Result<(ProbeWaveFunction, f64)> {
        let n_i = probe.norm_squared();
        if n_i <= NORM_FLOOR {
            return Err(Error::ZeroNorm(n_i));
        }
        let raw = probe.multiplied(|k| self.eval(k))?;
        let n_f = raw.norm_squared();
        if n_f <= NORM_FLOOR {
            return Err(Error::PostselectionAnnihilated(n_f));
        }
        Ok((raw, n_f))
    }

    /// Normalized postselected probe.
    pub fn final_probe(&self, probe: &ProbeWaveFunction) -> Result<ProbeWaveFunction> {
        let (raw, _) = self.apply(probe)?;
        raw.normalized()
    }

    /// Pointer shift `<x>_f - <x>_i`; invariant under gauge translations of `probe`.
    pub fn shift(&self, probe: &ProbeWaveFunction) -> Result<f64> {
        let (raw, _) = self.apply(probe)?;
        Ok(raw.expectation_x()? - probe.expectation_x()?)
    }

    /// `min |B|^2` and `max |B|^2` over the grid nodes.
    pub fn modulus_sq_range(&self, grid: &MomentumGrid) -> (f64, f64) {
        grid.nodes()
            .map(|k| self.eval(k).norm_sqr())
            .fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::position_eigenstate;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> QubitState {
        QubitState::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap()
    }

    fn plus_i() -> QubitState {
        QubitState::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)).unwrap()
    }

    #[test]
    fn state_and_observable_validation() {
        assert!(QubitState::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(QubitState::normalized(c(0.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(InvolutiveObservable::new([0.0, 0.0, 0.5]).is_err());
        assert!(InvolutiveObservable::new([0.6, 0.0, 0.8]).is_ok());
    }

    #[test]
    fn observable_squares_to_identity() {
        let a = InvolutiveObservable::new([0.48, -0.6, 0.64]).unwrap();
        let psi = QubitState::normalized(c(0.3, -0.1), c(0.2, 0.9)).unwrap();
        let back = a.apply(&a.apply(&psi));
        assert!((back.amp0() - psi.amp0()).norm() < 1e-15);
        assert!((back.amp1() - psi.amp1()).norm() < 1e-15);
    }

    #[test]
    fn weak_value_examples() {
        let z = InvolutiveObservable::sigma_z();
        let zero = QubitState::zero();
        assert!((weak_value(&zero, &zero, &z).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((weak_value(&plus(), &zero, &z).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        // 2x2 algebra: <f|sz|i> = (1+i)/2, <f|i> = (1-i)/2
        assert!((weak_value(&plus(), &plus_i(), &z).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_selection_is_an_error() {
        let z = InvolutiveObservable::sigma_z();
        let err = weak_value(&QubitState::zero(), &QubitState::one(), &z).unwrap_err();
        assert!(matches!(err, Error::OrthogonalSelection(_)));
    }

    #[test]
    fn kernel_examples() {
        for a in [c(0.3, -2.0), c(1.0, 1.0), c(-4.0, 0.5)] {
            assert!((PostselectionKernel::from_weak_value(a).eval(0.0) - c(1.0, 0.0)).norm() < 1e-15);
        }
        let unit = PostselectionKernel::from_weak_value(c(1.0, 0.0));
        for k in [-1.5, -0.3, 0.0, 0.9, 1.5] {
            assert!((unit.eval(k) - Complex64::cis(-k)).norm() < 1e-15);
        }
        let imag = PostselectionKernel::from_weak_value(c(0.0, 1.0));
        for k in [-1.2, 0.1, 1.4] {
            assert!((imag.eval(k) - c(k.cos() + k.sin(), 0.0)).norm() < 1e-15);
        }
        let root = imag.root_in(-PI / 2.0, PI / 2.0).unwrap();
        assert!((root + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_roots_agree_with_dense_scan() {
        // oracle: golden-section minimum of |B| on a dense bracket
        for a in [c(0.0, 1.0), c(0.0, -0.3), c(0.0, 4.0), c(0.2, 1.0), c(1.0, 1.0)] {
            let kern = PostselectionKernel::from_weak_value(a);
            let (mut lo, mut hi) = (-PI / 2.0, PI / 2.0);
            let f = |k: f64| kern.eval(k).norm();
            let (mut best_k, mut best) = (0.0, f64::INFINITY);
            for j in 0..=20000 {
                let k = lo + (hi - lo) * j as f64 / 20000.0;
                if f(k) < best {
                    best = f(k);
                    best_k = k;
                }
            }
            lo = best_k - 1e-4;
            hi = best_k + 1e-4;
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let x1 = hi - g * (hi - lo);
                let x2 = lo + g * (hi - lo);
                if f(x1) < f(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            let kmin = 0.5 * (lo + hi);
            match kern.root_in(-PI / 2.0, PI / 2.0) {
                Some(r) => {
                    assert!(f(kmin) < 1e-8, "{a}");
                    assert!((r - kmin).abs() < 1e-6, "{a}: {r} vs {kmin}");
                }
                None => assert!(f(kmin) > 1e-3, "{a}"),
            }
        }
    }

    #[test]
    fn zero_weak_value_vanishes_at_the_edges() {
        let k = PostselectionKernel::from_weak_value(c(0.0, 0.0));
        assert!(k.root_in(-PI / 2.0, PI / 2.0).is_some());
        assert!(matches!(
            k.check_nonvanishing(&MomentumGrid::default()),
            Err(Error::KernelZero { .. })
        ));
    }

    #[test]
    fn apply_kernel_examples() {
        let g = MomentumGrid::default();
        let xi = position_eigenstate(&g, 0.0);
        let (raw, nf) = PostselectionKernel::from_weak_value(c(1.0, 0.0)).apply(&xi).unwrap();
        assert!((nf - 1.0).abs() < 1e-13);
        let target = position_eigenstate(&g, 1.0);
        for (a, b) in raw.values().iter().zip(target.values()) {
            assert!((a - b).norm() < 1e-15);
        }
        let (_, nf0) = PostselectionKernel::from_weak_value(c(0.0, 0.0)).apply(&xi).unwrap();
        assert!((nf0 - 0.5).abs() < 1e-13);
        // oracle: (1/pi) int (1 + sin 2k + sin^2 k) dk = 3/2, exact for trig polynomials
        let (_, nf1) = PostselectionKernel::from_weak_value(c(1.0, 1.0)).apply(&xi).unwrap();
        assert!((nf1 - 1.5).abs() < 1e-13);
    }

    #[test]
    fn annihilated_and_zero_norm() {
        let g = MomentumGrid::default();
        let z = ProbeWaveFunction::from_fn(&g, |_| c(0.0, 0.0)).unwrap();
        let k = PostselectionKernel::from_weak_value(c(1.0, 1.0));
        assert!(matches!(k.apply(&z), Err(Error::ZeroNorm(_))));
        let post = QubitState::one();
        let kern = PostselectionKernel {
            weak_value: c(1.0, 0.0),
            include_overlap: true,
            overlap: c(0.0, 0.0),
        };
        let _ = post;
        assert!(matches!(
            kern.apply(&position_eigenstate(&g, 0.0)),
            Err(Error::PostselectionAnnihilated(_))
        ));
    }

    #[test]
    fn shift_examples() {
        let g = MomentumGrid::default();
        let unit = PostselectionKernel::from_weak_value(c(1.0, 0.0));
        let wiggly = ProbeWaveFunction::from_fn(&g, |k| {
            c((1.0 + 0.3 * (2.0 * k).cos()) * (-k * k).exp(), 0.4 * (4.0 * k).sin())
        })
        .unwrap();
        assert!((unit.shift(&wiggly).unwrap() - 1.0).abs() < 1e-12);
        let even = ProbeWaveFunction::from_fn(&g, |k| c((-k * k).exp(), 0.0)).unwrap();
        assert!(PostselectionKernel::from_weak_value(c(0.0, 0.0)).shift(&even).unwrap().abs() < 1e-13);
        // oracle: Im(B' conj B) = -Re A_w, so <x>_f = Re A_w pi / int |B|^2 = 2/3
        let k = PostselectionKernel::from_weak_value(c(1.0, 1.0));
        let s = k.shift(&position_eigenstate(&g, 0.0)).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn overlap_prefactor_cancels() {
        let z = InvolutiveObservable::new([0.6, 0.0, 0.8]).unwrap();
        let pre = QubitState::normalized(c(1.0, 0.2), c(-0.3, 0.5)).unwrap();
        let post = QubitState::normalized(c(0.4, -0.1), c(0.7, 0.3)).unwrap();
        let kern = PostselectionKernel::from_states(&pre, &post, &z).unwrap();
        let g = MomentumGrid::symmetric(512).unwrap();
        let xi = ProbeWaveFunction::from_fn(&g, |k| c((-k * k).exp(), 0.3 * k)).unwrap();
        let a = kern.final_probe(&xi).unwrap();
        let b = kern.with_overlap(true).final_probe(&xi).unwrap();
        let phase = kern.overlap() / kern.overlap().norm();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u * phase - v).norm() < 1e-13);
        }
        let d = kern.shift(&xi).unwrap() - kern.with_overlap(true).shift(&xi).unwrap();
        assert!(d.abs() < 1e-13);
    }
}
