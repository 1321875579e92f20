//! Null and alternative distributions: samplers, densities and the shorthand
//! spec strings used by the CLI and config files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GofError, Result};
use crate::sample::Sample;
use crate::special::{ln_bessel_i, ln_kummer_m, sphere_area};

/// Default perturbation amplitude constant: θ = 2.7·P^{-d/2}.
pub const PERTURBATION_SCALE: f64 = 2.7;

#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    /// Uniform on [0, 1]^d.
    UniformCube { dim: usize },
    /// Uniform on [0, 1]^d with P^d signed smooth bumps; `perturbations = 0` is uniform.
    /// `amplitude` overrides the default θ.
    PerturbedUniform { dim: usize, perturbations: usize, amplitude: Option<f64> },
    /// N(shift·e₁, scale·I).
    Gaussian { dim: usize, shift: f64, scale: f64 },
    /// Uniform on S^{d-1}.
    SphereUniform { dim: usize },
    /// von Mises-Fisher on S^{d-1} with mean direction e₁.
    Vmf { dim: usize, kappa: f64 },
    /// Equal-weight mixture of two Watson laws with axes (1,…,1)/√d and (-1,1,…,1)/√d.
    WatsonMixture { dim: usize, kappa: f64 },
}

/// Dipole bump on (0, 1): positive on (0, ½), negative mirror on (½, 1); ∫G = 0, sup|G| = e^{-1}.
pub fn dipole_bump(t: f64) -> f64 {
    let bump = |u: f64| {
        let q = 1.0 - u * u;
        if q > 0.0 {
            (-1.0 / q).exp()
        } else {
            0.0
        }
    };
    if t > 0.0 && t < 0.5 {
        bump(4.0 * t - 1.0)
    } else if t > 0.5 && t < 1.0 {
        -bump(4.0 * t - 3.0)
    } else {
        0.0
    }
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DistributionSpec::UniformCube { dim }
            | DistributionSpec::PerturbedUniform { dim, .. }
            | DistributionSpec::Gaussian { dim, .. }
            | DistributionSpec::SphereUniform { dim }
            | DistributionSpec::Vmf { dim, .. }
            | DistributionSpec::WatsonMixture { dim, .. } => dim,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::UniformCube { .. } => "uniform",
            DistributionSpec::PerturbedUniform { .. } => "perturbed",
            DistributionSpec::Gaussian { .. } => "gaussian",
            DistributionSpec::SphereUniform { .. } => "sphere",
            DistributionSpec::Vmf { .. } => "vmf",
            DistributionSpec::WatsonMixture { .. } => "watson",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GofError::Config(format!("{self}: {msg}")));
        let dim = self.dim();
        if dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        match *self {
            DistributionSpec::SphereUniform { .. } | DistributionSpec::Vmf { .. } | DistributionSpec::WatsonMixture { .. }
                if dim < 2 =>
            {
                bad("spherical families need d >= 2".into())
            }
            DistributionSpec::Gaussian { shift, scale, .. } if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) => {
                bad(format!("need finite shift and positive scale, got shift={shift}, scale={scale}"))
            }
            DistributionSpec::Vmf { kappa, .. } | DistributionSpec::WatsonMixture { kappa, .. }
                if !(kappa >= 0.0 && kappa.is_finite()) =>
            {
                bad(format!("concentration must be finite and >= 0, got {kappa}"))
            }
            DistributionSpec::PerturbedUniform { amplitude: Some(a), .. } if !(a >= 0.0 && a < self.max_amplitude()) => {
                bad(format!("amplitude must lie in [0, {:.6}) to keep the density positive", self.max_amplitude()))
            }
            _ => Ok(()),
        }
    }

    fn max_amplitude(&self) -> f64 {
        (self.dim() as f64).exp()
    }

    /// Effective perturbation amplitude θ (0 when there is no perturbation).
    pub fn amplitude(&self) -> f64 {
        match *self {
            DistributionSpec::PerturbedUniform { perturbations: 0, .. } => 0.0,
            DistributionSpec::PerturbedUniform { amplitude: Some(a), .. } => a,
            DistributionSpec::PerturbedUniform { dim, perturbations, amplitude: None } => {
                let theta = PERTURBATION_SCALE * (perturbations as f64).powf(-(dim as f64) / 2.0);
                theta.min(0.99 * self.max_amplitude())
            }
            _ => 0.0,
        }
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(GofError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let d = self.dim() as f64;
        let in_cube = x.iter().all(|v| (0.0..=1.0).contains(v));
        Ok(match *self {
            DistributionSpec::UniformCube { .. } => f64::from(u8::from(in_cube)),
            DistributionSpec::PerturbedUniform { perturbations, .. } => {
                if !in_cube {
                    0.0
                } else if perturbations == 0 {
                    1.0
                } else {
                    // only the cell containing x has a nonzero bump
                    let p = perturbations as f64;
                    1.0 + self.amplitude() * x.iter().map(|&v| dipole_bump(p * v - (p * v).floor())).product::<f64>()
                }
            }
            DistributionSpec::Gaussian { shift, scale, .. } => {
                let r2: f64 = x.iter().enumerate().map(|(i, &v)| if i == 0 { (v - shift).powi(2) } else { v * v }).sum();
                (-r2 / (2.0 * scale)).exp() / (2.0 * PI * scale).powf(d / 2.0)
            }
            DistributionSpec::SphereUniform { .. } => 1.0 / sphere_area(self.dim()),
            DistributionSpec::Vmf { kappa, .. } => {
                if kappa == 0.0 {
                    1.0 / sphere_area(self.dim())
                } else {
                    let nu = d / 2.0 - 1.0;
                    (nu * kappa.ln() - (d / 2.0) * (2.0 * PI).ln() - ln_bessel_i(nu, kappa) + kappa * x[0]).exp()
                }
            }
            DistributionSpec::WatsonMixture { kappa, .. } => {
                let (mu1, mu2) = watson_axes(self.dim());
                let ln_c = statrs::function::gamma::ln_gamma(d / 2.0)
                    - (2.0 * PI.powf(d / 2.0)).ln()
                    - ln_kummer_m(0.5, d / 2.0, kappa);
                let dot = |mu: &[f64]| mu.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                0.5 * ((ln_c + kappa * dot(&mu1).powi(2)).exp() + (ln_c + kappa * dot(&mu2).powi(2)).exp())
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Sample> {
        self.validate()?;
        let dim = self.dim();
        let mut data = Vec::with_capacity(count * dim);
        let mut point = vec![0.0; dim];
        for _ in 0..count {
            self.draw(rng, &mut point);
            data.extend_from_slice(&point);
        }
        Sample::new(dim, data)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let dim = out.len();
        match *self {
            DistributionSpec::UniformCube { .. } => out.iter_mut().for_each(|v| *v = rng.random()),
            DistributionSpec::PerturbedUniform { perturbations, .. } => {
                let theta = self.amplitude();
                let envelope = 1.0 + theta * (-(dim as f64)).exp();
                loop {
                    out.iter_mut().for_each(|v| *v = rng.random());
                    if perturbations == 0 {
                        return;
                    }
                    let p = self.density(out).expect("dimension checked");
                    if rng.random::<f64>() * envelope < p {
                        return;
                    }
                }
            }
            DistributionSpec::Gaussian { shift, scale, .. } => {
                let sd = scale.sqrt();
                for (i, v) in out.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = sd * z + if i == 0 { shift } else { 0.0 };
                }
            }
            DistributionSpec::SphereUniform { .. } => uniform_sphere(rng, out),
            DistributionSpec::Vmf { kappa, .. } => {
                if kappa == 0.0 {
                    uniform_sphere(rng, out);
                } else {
                    vmf_e1(rng, kappa, out);
                }
            }
            DistributionSpec::WatsonMixture { kappa, .. } => {
                let (mu1, mu2) = watson_axes(dim);
                let mu = if rng.random::<bool>() { mu1 } else { mu2 };
                // uniform proposal, acceptance exp(k((μᵀx)² - 1)) ≤ 1
                loop {
                    uniform_sphere(rng, out);
                    let t: f64 = mu.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                    if rng.random::<f64>() < (kappa * (t * t - 1.0)).exp() {
                        return;
                    }
                }
            }
        }
    }
}

fn watson_axes(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let c = 1.0 / (dim as f64).sqrt();
    let mu1 = vec![c; dim];
    let mut mu2 = mu1.clone();
    mu2[0] = -c;
    (mu1, mu2)
}

fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Wood's rejection sampler for the vMF law with mean direction e₁.
fn vmf_e1<R: Rng + ?Sized>(rng: &mut R, kappa: f64, out: &mut [f64]) {
    let dim = out.len();
    let dm1 = (dim - 1) as f64;
    // b = (d-1)/(2k + √(4k² + (d-1)²)), written to avoid cancellation for large k
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("positive shape");
    let w = loop {
        let z = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    out[0] = w;
    let r = (1.0 - w * w).max(0.0).sqrt();
    if dim == 2 {
        out[1] = if rng.random::<bool>() { r } else { -r };
    } else {
        uniform_sphere(rng, &mut out[1..]);
        out[1..].iter_mut().for_each(|v| *v *= r);
    }
}

/// E[μᵀX] for the vMF law: I_{d/2}(k)/I_{d/2-1}(k).
pub fn vmf_mean_resultant(dim: usize, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let nu = dim as f64 / 2.0;
    (ln_bessel_i(nu, kappa) - ln_bessel_i(nu - 1.0, kappa)).exp()
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::UniformCube { dim } => write!(f, "uniform:d={dim}"),
            DistributionSpec::PerturbedUniform { dim, perturbations, amplitude } => {
                write!(f, "perturbed:d={dim},p={perturbations}")?;
                if let Some(a) = amplitude {
                    write!(f, ",amp={a}")?;
                }
                Ok(())
            }
            DistributionSpec::Gaussian { dim, shift, scale } => write!(f, "gaussian:d={dim},shift={shift},scale={scale}"),
            DistributionSpec::SphereUniform { dim } => write!(f, "sphere:d={dim}"),
            DistributionSpec::Vmf { dim, kappa } => write!(f, "vmf:d={dim},k={kappa}"),
            DistributionSpec::WatsonMixture { dim, kappa } => write!(f, "watson:d={dim},k={kappa}"),
        }
    }
}

fn parse_params(family: &str, body: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| GofError::Config(format!("{family}: expected key=value, got '{item}'")))?;
        let value: f64 =
            v.trim().parse().map_err(|_| GofError::Config(format!("{family}: '{}' is not a number", v.trim())))?;
        out.insert(k.trim().to_ascii_lowercase(), value);
    }
    Ok(out)
}

fn build(family: &str, mut params: BTreeMap<String, f64>) -> Result<DistributionSpec> {
    let mut take = |keys: &[&str], default: Option<f64>| -> Result<f64> {
        for k in keys {
            if let Some(v) = params.remove(*k) {
                return Ok(v);
            }
        }
        default.ok_or_else(|| GofError::Config(format!("{family}: missing parameter '{}'", keys[0])))
    };
    let as_count = |v: f64, what: &str| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
            Ok(v as usize)
        } else {
            Err(GofError::Config(format!("{family}: {what} must be a non-negative integer, got {v}")))
        }
    };
    let dim = as_count(take(&["d", "dim", "dimension"], Some(1.0))?, "dimension")?;
    let spec = match family {
        "uniform" | "uniform_cube" => DistributionSpec::UniformCube { dim },
        "perturbed" | "perturbed_uniform" => {
            let perturbations = as_count(take(&["p", "perturbations"], None)?, "perturbation count")?;
            let amplitude = take(&["amp", "amplitude"], Some(f64::NAN))?;
            DistributionSpec::PerturbedUniform { dim, perturbations, amplitude: (!amplitude.is_nan()).then_some(amplitude) }
        }
        "gaussian" | "normal" => DistributionSpec::Gaussian {
            dim,
            shift: take(&["shift", "mean"], Some(0.0))?,
            scale: take(&["scale", "var"], Some(1.0))?,
        },
        "sphere" | "sphere_uniform" => DistributionSpec::SphereUniform { dim },
        "vmf" => DistributionSpec::Vmf { dim, kappa: take(&["k", "kappa"], None)? },
        "watson" | "watson_mixture" => DistributionSpec::WatsonMixture { dim, kappa: take(&["k", "kappa"], None)? },
        other => return Err(GofError::Config(format!("unknown distribution family '{other}'"))),
    };
    if let Some(k) = params.keys().next() {
        return Err(GofError::Config(format!("{family}: unknown parameter '{k}'")));
    }
    spec.validate()?;
    Ok(spec)
}

impl DistributionSpec {
    /// Copy with one shorthand parameter replaced, e.g. `("p", 3.0)` or `("shift", 0.5)`.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let text = self.to_string();
        let (family, body) = text.split_once(':').unwrap_or((&text, ""));
        let mut params = parse_params(family, body)?;
        let key = key.trim().to_ascii_lowercase();
        let canonical = match (family, key.as_str()) {
            (_, "dim" | "dimension") => "d".to_string(),
            ("perturbed", "perturbations") => "p".to_string(),
            ("perturbed", "amplitude") => "amp".to_string(),
            ("vmf" | "watson", "kappa") => "k".to_string(),
            _ => key,
        };
        params.insert(canonical, value);
        build(family, params)
    }
}

impl FromStr for DistributionSpec {
    type Err = GofError;

    /// Parses shorthand such as `gaussian:d=2,shift=0.5` or `vmf:d=3,k=2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, body) = s.split_once(':').unwrap_or((s, ""));
        let family = family.trim().to_ascii_lowercase();
        build(&family, parse_params(&family, body)?)
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Short(String),
    Table {
        family: String,
        #[serde(flatten)]
        params: BTreeMap<String, f64>,
    },
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match SpecRepr::deserialize(deserializer)? {
            SpecRepr::Short(s) => s.parse(),
            SpecRepr::Table { family, params } => {
                let params = params.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect();
                build(&family.to_ascii_lowercase(), params)
            }
        }
        .map_err(serde::de::Error::custom)
    }
}
