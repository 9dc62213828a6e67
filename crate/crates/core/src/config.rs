//! `a+bi` complex literals, kernel specifications and run configurations.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::grid::DEFAULT_POINTS;
use crate::postselection::{InvolutiveObservable, PostselectionKernel, QubitState};

fn parse_real(s: &str, whole: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad complex literal {whole:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite component in {whole:?}")));
    }
    Ok(v)
}

fn parse_imag(s: &str, whole: &str) -> Result<f64> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(s, whole),
    }
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (`i` alone means unit coefficient),
/// e.g. `1+1i`, `0.5-2e-3i`, `-i`, `3`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(s, text)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    match split {
        Some(j) => Ok(Complex64::new(
            parse_real(&body[..j], text)?,
            parse_imag(&body[j..], text)?,
        )),
        None => Ok(Complex64::new(0.0, parse_imag(body, text)?)),
    }
}

/// Formats `z` in the literal form accepted by [`parse_complex`].
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakValueSpec {
    pub weak_value: [f64; 2],
}

/// `pre`/`post` are `[re0, im0, re1, im1]` or real `[a0, a1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesSpec {
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub observable_bloch: [f64; 3],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub include_overlap: bool,
}

/// How the postselection kernel is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    WeakValue(WeakValueSpec),
    States(StatesSpec),
}

fn qubit(v: &[f64], what: &str) -> Result<QubitState> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match v {
        [a0, a1] => QubitState::new(c(*a0, 0.0), c(*a1, 0.0)),
        [r0, i0, r1, i1] => QubitState::new(c(*r0, *i0), c(*r1, *i1)),
        _ => Err(Error::InvalidState(format!(
            "{what} must have 2 or 4 components, got {}",
            v.len()
        ))),
    }
}

impl KernelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("kernel spec: {e}")))
    }

    pub fn kernel(&self) -> Result<PostselectionKernel> {
        match self {
            KernelSpec::WeakValue(WeakValueSpec { weak_value: [re, im] }) => {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(Error::BadParams("weak value must be finite".into()));
                }
                Ok(PostselectionKernel::from_weak_value(Complex64::new(*re, *im)))
            }
            KernelSpec::States(StatesSpec {
                pre,
                post,
                observable_bloch,
                include_overlap,
            }) => {
                let pre = qubit(pre, "pre")?;
                let post = qubit(post, "post")?;
                let obs = InvolutiveObservable::new(*observable_bloch)?;
                Ok(PostselectionKernel::from_states(&pre, &post, &obs)?.with_overlap(*include_overlap))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    OptimalProbe,
    Verify,
    Sweep,
    Optimize,
    Transform,
}

/// A run described as JSON. Every field is optional; command-line flags
/// override what the file sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub kernel: Option<KernelSpec>,
    /// Default 2048.
    pub grid_points: Option<usize>,
    /// Only `[-pi/2, pi/2]` is supported by the spectral pathways.
    pub domain: Option<[f64; 2]>,
    pub x0: Option<f64>,
    pub m: Option<i64>,
    /// `[re, im]`; default 0.
    pub mu_tilde: Option<[f64; 2]>,
    pub family: Option<FamilySpec>,
    pub alphas: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<i64>>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
    /// Default 42.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.grid_points {
            if n < 16 {
                return Err(Error::BadParams(format!("grid_points must be >= 16, got {n}")));
            }
        }
        if let Some([lo, hi]) = self.domain {
            let h = std::f64::consts::FRAC_PI_2;
            if (lo + h).abs() > 1e-12 || (hi - h).abs() > 1e-12 {
                return Err(Error::DomainMismatch { k_min: lo, k_max: hi });
            }
        }
        for (name, v) in [("x0", self.x0)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(Error::BadParams(format!("{name} must be finite")));
            }
        }
        if let Some([re, im]) = self.mu_tilde {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::BadParams("mu_tilde must be finite".into()));
            }
        }
        if let Some(a) = &self.alphas {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadParams("alphas must be finite".into()));
            }
        }
        if let Some(c) = &self.cutoffs {
            if c.iter().any(|v| *v < 0) {
                return Err(Error::BadParams("cutoffs must be non-negative".into()));
            }
        }
        if let Some(k) = &self.kernel {
            k.kernel()?;
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points.unwrap_or(DEFAULT_POINTS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn mu_tilde(&self) -> Complex64 {
        let [re, im] = self.mu_tilde.unwrap_or([0.0, 0.0]);
        Complex64::new(re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_literals() {
        let cases = [
            ("1+1i", c(1.0, 1.0)),
            ("0+1i", c(0.0, 1.0)),
            ("2-i", c(2.0, -1.0)),
            (" 0.5+0.5i ", c(0.5, 0.5)),
            ("-3", c(-3.0, 0.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("+2.5i", c(0.0, 2.5)),
            ("1e-3-2E+2i", c(1e-3, -200.0)),
            ("-1.5e-2+4i", c(-0.015, 4.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for bad in ["", "1+", "1+1", "1+1j", "i1", "nan", "inf+1i", "1++1i", "1+1ii", "--1"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn complex_round_trip() {
        for z in [c(1.0, 1.0), c(-0.1, -2e-300), c(0.0, -0.0), c(1e20, 3.5)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn kernel_specs() {
        let k = KernelSpec::from_json(r#"{"weak_value":[1,1]}"#).unwrap().kernel().unwrap();
        assert_eq!(k.weak_value(), c(1.0, 1.0));
        let s = KernelSpec::from_json(
            r#"{"pre":[0.7071067811865476,0.7071067811865476],"post":[0.7071067811865476,-0.7071067811865476],"observable_bloch":[0,0,1]}"#,
        )
        .unwrap();
        // orthogonal pre/post
        assert!(matches!(s.kernel(), Err(Error::OrthogonalSelection(_))));
        let s = KernelSpec::from_json(r#"{"pre":[1,0,0,0],"post":[0.6,0,0.8,0],"observable_bloch":[0,0,1]}"#).unwrap();
        assert!((s.kernel().unwrap().weak_value() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(KernelSpec::from_json(r#"{"weak_value":[1,1],"extra":0}"#).is_err());
        assert!(KernelSpec::from_json(r#"{"pre":[1,0,0],"post":[1,0],"observable_bloch":[0,0,1]}"#)
            .unwrap()
            .kernel()
            .is_err());
    }

    #[test]
    fn run_config_parsing() {
        let cfg = RunConfig::from_json(
            r#"{"command":"sweep","kernel":{"weak_value":[1,0]},"family":{"id":"eigenstate_pair","weight":0.5},
                "alphas":[4,8,16,32],"cutoffs":[256],"seed":7}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Some(Command::Sweep));
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.grid_points(), 2048);
        assert!(RunConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid_points":4}"#).is_err());
        assert!(matches!(
            RunConfig::from_json(r#"{"domain":[0,1]}"#),
            Err(Error::DomainMismatch { .. })
        ));
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }
}
