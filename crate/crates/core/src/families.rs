//! Trial-probe families indexed by a real parameter `alpha`, and sweeps of
//! shift and final-probe variance over `alpha`.
//!
//! Families come in two frames. Final-specified families (`EigenstatePair`,
//! `Kronecker`) fix the postselected pointer state `Phi_alpha` on the
//! position lattice and obtain the initial probe as `Phi_alpha / B`; their
//! reported shift is `<x>` of `Phi_alpha`. Initial-specified families
//! (`TruncatedGaussian`, `Custom`) fix the initial probe, gauge-fix it, and
//! report `<x>_f - <x>_i`. Every row also carries the gauge-invariant
//! difference as `delta_x`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, ProbeWaveFunction};
use crate::postselection::PostselectionKernel;
use crate::spectrum::{from_position_coefficients, to_position_coefficients, PositionAmplitudes};
use crate::variational::gauge_fix;

/// Floor under the variance in the SNR denominator.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    EigenstatePair,
    TruncatedGaussian,
    Kronecker,
    Custom,
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyId::EigenstatePair => "eigenstate_pair",
            FamilyId::TruncatedGaussian => "truncated_gaussian",
            FamilyId::Kronecker => "kronecker",
            FamilyId::Custom => "custom",
        })
    }
}

/// Built-in families and their parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Final state `sqrt(p)|x=0> + sqrt(1-p)|x=2 floor(alpha)>`.
    EigenstatePair { weight: f64 },
    /// Initial probe `exp(-k^2 / (2 sigma^2 alpha^2))`.
    TruncatedGaussian { sigma: f64 },
    /// Final state `|x = 2 floor(alpha/2)>`.
    Kronecker,
}

impl FamilySpec {
    pub fn id(&self) -> FamilyId {
        match self {
            FamilySpec::EigenstatePair { .. } => FamilyId::EigenstatePair,
            FamilySpec::TruncatedGaussian { .. } => FamilyId::TruncatedGaussian,
            FamilySpec::Kronecker => FamilyId::Kronecker,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Frame {
    Final,
    Initial,
}

type Generator = dyn Fn(f64, &PostselectionKernel, &MomentumGrid) -> Result<ProbeWaveFunction> + Send + Sync;

#[derive(Clone)]
pub struct TrialFamily {
    id: FamilyId,
    params: BTreeMap<String, f64>,
    frame: Frame,
    grid: MomentumGrid,
    generator: Arc<Generator>,
}

impl fmt::Debug for TrialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrialFamily")
            .field("id", &self.id)
            .field("params", &self.params)
            .field("frame", &self.frame)
            .field("n_points", &self.grid.n_points())
            .finish()
    }
}

fn final_state_probe(
    phi: &PositionAmplitudes,
    kernel: &PostselectionKernel,
    grid: &MomentumGrid,
) -> Result<ProbeWaveFunction> {
    kernel.check_nonvanishing(grid)?;
    let phi = from_position_coefficients(phi, grid)?;
    let values = grid
        .nodes()
        .zip(phi.values())
        .map(|(k, v)| v / kernel.eval(k))
        .collect();
    ProbeWaveFunction::new(grid.clone(), values)?.normalized()
}

fn require_alpha(alpha: f64, min: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < min {
        return Err(Error::BadParams(format!("alpha must be finite and >= {min}, got {alpha}")));
    }
    Ok(())
}

/// Builds the family for `spec` on `grid` (which must be the default domain).
pub fn make_family(spec: FamilySpec, grid: &MomentumGrid) -> Result<TrialFamily> {
    grid.require_default_domain()?;
    let mut params = BTreeMap::new();
    let (frame, generator): (Frame, Arc<Generator>) = match spec {
        FamilySpec::EigenstatePair { weight } => {
            if !(weight > 0.0 && weight < 1.0) {
                return Err(Error::BadParams(format!("weight must lie in (0, 1), got {weight}")));
            }
            params.insert("weight".to_string(), weight);
            let g = move |alpha: f64, k: &PostselectionKernel, grid: &MomentumGrid| {
                require_alpha(alpha, 1.0)?;
                let far = alpha.floor() as i64;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); far as usize + 1];
                coeffs[0] = Complex64::new(weight.sqrt(), 0.0);
                coeffs[far as usize] = Complex64::new((1.0 - weight).sqrt(), 0.0);
                final_state_probe(&PositionAmplitudes::new(0, coeffs)?, k, grid)
            };
            (Frame::Final, Arc::new(g))
        }
        FamilySpec::Kronecker => {
            let g = |alpha: f64, k: &PostselectionKernel, grid: &MomentumGrid| {
                require_alpha(alpha, f64::MIN)?;
                let m = (alpha / 2.0).floor() as i64;
                final_state_probe(&PositionAmplitudes::new(m, vec![Complex64::new(1.0, 0.0)])?, k, grid)
            };
            (Frame::Final, Arc::new(g))
        }
        FamilySpec::TruncatedGaussian { sigma } => {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::BadParams(format!("sigma must be positive, got {sigma}")));
            }
            params.insert("sigma".to_string(), sigma);
            let g = move |alpha: f64, _: &PostselectionKernel, grid: &MomentumGrid| {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(Error::BadParams(format!("alpha must be positive, got {alpha}")));
                }
                let s2 = 2.0 * (sigma * alpha).powi(2);
                let p = ProbeWaveFunction::from_fn(grid, |k| Complex64::new((-k * k / s2).exp(), 0.0))?;
                gauge_fix(&p.normalized()?)
            };
            (Frame::Initial, Arc::new(g))
        }
    };
    Ok(TrialFamily {
        id: spec.id(),
        params,
        frame,
        grid: grid.clone(),
        generator,
    })
}

impl TrialFamily {
    /// An initial-specified family from a user generator. Generated probes are
    /// normalized and gauge-fixed before use.
    pub fn custom<F>(grid: &MomentumGrid, params: BTreeMap<String, f64>, generator: F) -> Result<Self>
    where
        F: Fn(f64, &MomentumGrid) -> Result<ProbeWaveFunction> + Send + Sync + 'static,
    {
        grid.require_default_domain()?;
        let g = move |alpha: f64, _: &PostselectionKernel, grid: &MomentumGrid| {
            gauge_fix(&generator(alpha, grid)?.normalized()?)
        };
        Ok(Self {
            id: FamilyId::Custom,
            params,
            frame: Frame::Initial,
            grid: grid.clone(),
            generator: Arc::new(g),
        })
    }

    pub fn id(&self) -> FamilyId {
        self.id
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    /// Whether the family is specified by its final pointer state.
    pub fn is_final_specified(&self) -> bool {
        self.frame == Frame::Final
    }

    /// The normalized initial probe at `alpha`.
    pub fn initial_probe(&self, alpha: f64, kernel: &PostselectionKernel) -> Result<ProbeWaveFunction> {
        (self.generator)(alpha, kernel, &self.grid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub shift: f64,
    pub variance_f: f64,
    pub snr: f64,
    pub captured_weight: f64,
    /// Gauge-invariant `<x>_f - <x>_i`.
    pub delta_x: f64,
}

/// One sweep point: shift, discrete variance of the normalized final probe
/// over `|n| <= cutoff`, SNR and captured weight.
pub fn evaluate(
    family: &TrialFamily,
    alpha: f64,
    kernel: &PostselectionKernel,
    cutoff: i64,
) -> Result<SweepRow> {
    if cutoff < 0 {
        return Err(Error::BadParams(format!("cutoff must be non-negative, got {cutoff}")));
    }
    let initial = family.initial_probe(alpha, kernel)?;
    let fin = kernel.final_probe(&initial)?;
    let x_f = fin.expectation_x()?;
    let delta_x = x_f - initial.expectation_x()?;
    let shift = if family.is_final_specified() { x_f } else { delta_x };
    let moments = to_position_coefficients(&fin, -cutoff, cutoff)?.moments()?;
    let snr = shift.abs() / moments.variance.max(VARIANCE_FLOOR).sqrt();
    Ok(SweepRow {
        alpha,
        shift,
        variance_f: moments.variance,
        snr,
        captured_weight: moments.captured_weight,
        delta_x,
    })
}

#[derive(Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Points whose evaluation failed, by `alpha`.
    pub failures: Vec<(f64, Error)>,
}

/// Evaluates every `alpha` (in parallel); rows keep the input order and a
/// failing point does not stop the others.
pub fn sweep(
    family: &TrialFamily,
    alphas: &[f64],
    kernel: &PostselectionKernel,
    cutoff: i64,
) -> Result<SweepTable> {
    if alphas.len() < 4 {
        return Err(Error::BadParams(format!("need at least 4 alphas, got {}", alphas.len())));
    }
    if alphas.iter().any(|a| !a.is_finite()) || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParams("alphas must be finite and strictly increasing".into()));
    }
    let results: Vec<(f64, Result<SweepRow>)> = alphas
        .par_iter()
        .map(|&a| (a, evaluate(family, a, kernel, cutoff)))
        .collect();
    let mut table = SweepTable {
        rows: Vec::with_capacity(alphas.len()),
        failures: Vec::new(),
    };
    for (a, r) in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(e) => table.failures.push((a, e)),
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub shift_exponent: f64,
    pub variance_exponent: f64,
    pub r2_shift: f64,
    pub r2_var: f64,
}

/// Least-squares line through `(x, y)`: slope and coefficient of determination.
/// A perfectly flat response has `r^2 = 1`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, r2)
}

/// Power-law exponents of `|shift|` and `variance_f` against `alpha`.
pub fn fit_scaling(rows: &[SweepRow]) -> Result<ScalingFit> {
    if rows.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 rows, got {}", rows.len())));
    }
    for r in rows {
        if !(r.alpha > 0.0 && r.shift.abs() > 0.0 && r.variance_f > 0.0) {
            return Err(Error::DegenerateFit(format!(
                "non-positive value at alpha = {}: shift {}, variance {}",
                r.alpha, r.shift, r.variance_f
            )));
        }
    }
    let la: Vec<f64> = rows.iter().map(|r| r.alpha.ln()).collect();
    if la.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateFit("all alphas equal".into()));
    }
    let ls: Vec<f64> = rows.iter().map(|r| r.shift.abs().ln()).collect();
    let lv: Vec<f64> = rows.iter().map(|r| r.variance_f.ln()).collect();
    let (shift_exponent, r2_shift) = linear_fit(&la, &ls);
    let (variance_exponent, r2_var) = linear_fit(&la, &lv);
    Ok(ScalingFit {
        shift_exponent,
        variance_exponent,
        r2_shift,
        r2_var,
    })
}
