use crate::error::{Error, Result};
use crate::estimators::OracleMeans;
use crate::learners::FeatureTable;
use crate::math::PopulationParams;
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Counterfactual data-generating process with quadratic conditional means
/// `μ_w(x) = a_w·S² + b_w·S + c_w`, `S = Σ x_j`, `x ~ U[−1,1]^d`, and
/// Gaussian noise of standard deviation `noise_sd` in each arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub d: usize,
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    LinearConstant,
    LinearHeterogeneous,
    NonlinearConstant,
    NonlinearHeterogeneous,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::LinearConstant,
        ScenarioName::LinearHeterogeneous,
        ScenarioName::NonlinearConstant,
        ScenarioName::NonlinearHeterogeneous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::LinearConstant => "linear-constant",
            ScenarioName::LinearHeterogeneous => "linear-heterogeneous",
            ScenarioName::NonlinearConstant => "nonlinear-constant",
            ScenarioName::NonlinearHeterogeneous => "nonlinear-heterogeneous",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "linearconstant" => Ok(ScenarioName::LinearConstant),
            "linearheterogeneous" => Ok(ScenarioName::LinearHeterogeneous),
            "nonlinearconstant" => Ok(ScenarioName::NonlinearConstant),
            "nonlinearheterogeneous" => Ok(ScenarioName::NonlinearHeterogeneous),
            _ => Err(Error::invalid(format!(
                "unknown scenario '{s}'; expected linear-constant, linear-heterogeneous, nonlinear-constant or nonlinear-heterogeneous"
            ))),
        }
    }
}

/// The four benchmark scenarios (`d = 10`, unit noise).
pub fn benchmark_scenario(name: ScenarioName) -> ScenarioSpec {
    let (a0, b0, c0, a1, b1, c1) = match name {
        ScenarioName::LinearConstant => (0.0, 1.0, 0.0, 0.0, 1.0, 0.5),
        ScenarioName::LinearHeterogeneous => (0.0, 1.0, 0.0, 0.0, 0.0, 0.5),
        ScenarioName::NonlinearConstant => (1.0, 1.0, 0.0, 1.0, 1.0, 1.0),
        ScenarioName::NonlinearHeterogeneous => (1.0, 1.0, 0.0, 1.0, 0.0, 1.0),
    };
    ScenarioSpec { d: 10, a0, b0, c0, a1, b1, c1, noise_sd: 1.0 }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("scenario dimension d must be at least 1"));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid(format!("noise_sd must be positive, got {}", self.noise_sd)));
        }
        let coefs = [self.a0, self.b0, self.c0, self.a1, self.b1, self.c1];
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("scenario coefficients must be finite"));
        }
        Ok(())
    }

    fn coefs(&self, arm: u8) -> (f64, f64, f64) {
        if arm == 1 {
            (self.a1, self.b1, self.c1)
        } else {
            (self.a0, self.b0, self.c0)
        }
    }

    /// `μ_w` as a function of `S = Σ x_j`.
    pub fn mean_at_sum(&self, arm: u8, s: f64) -> f64 {
        let (a, b, c) = self.coefs(arm);
        a * s * s + b * s + c
    }

    pub fn conditional_mean(&self, arm: u8, x: &[f64]) -> f64 {
        self.mean_at_sum(arm, x.iter().sum())
    }

    /// `E[μ_w(X)] = a_w·d/3 + c_w`, since `E[S] = 0` and `E[S²] = d/3`.
    pub fn marginal_mean(&self, arm: u8) -> f64 {
        let (a, _, c) = self.coefs(arm);
        a * self.d as f64 / 3.0 + c
    }

    /// Average treatment effect `E[Y1 − Y0]`.
    pub fn average_effect(&self) -> f64 {
        self.marginal_mean(1) - self.marginal_mean(0)
    }

    /// The same scenario with `c0` shifted so the average effect is zero.
    pub fn null_calibrated(&self) -> ScenarioSpec {
        let mut s = *self;
        s.c0 = self.c1 + (self.a1 - self.a0) * self.d as f64 / 3.0;
        s
    }
}

impl OracleMeans for ScenarioSpec {
    fn conditional_mean(&self, arm: u8, x: &[f64]) -> f64 {
        ScenarioSpec::conditional_mean(self, arm, x)
    }
}

/// Rows of `(x, y0, y1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualSample {
    pub x: FeatureTable,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

impl CounterfactualSample {
    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }
}

pub fn sample_counterfactual(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<CounterfactualSample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let mut r = rng::seeded(seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let d = spec.d;
    let mut data = Vec::with_capacity(n * d);
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = 0.0;
        for _ in 0..d {
            let v: f64 = r.random_range(-1.0..=1.0);
            s += v;
            data.push(v);
        }
        y0.push(spec.mean_at_sum(0, s) + noise.sample(&mut r));
        y1.push(spec.mean_at_sum(1, s) + noise.sample(&mut r));
    }
    Ok(CounterfactualSample { x: FeatureTable::new(n, d, data)?, y0, y1 })
}

/// Population parameters of a scenario and its average effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub params: PopulationParams,
    pub tau: f64,
}

/// `κ_w = noise_sd`; `σ_w² = Var(μ_w(X)) + noise_sd²` and
/// `γ = Corr(μ0(X), μ1(X))` by Monte Carlo over `mc_reps` fresh draws of `X`.
/// Arm means use the closed form. A constant conditional mean gives `γ = 0`.
pub fn true_params(spec: &ScenarioSpec, pi1: f64, mc_reps: usize, seed: u64) -> Result<TrueParams> {
    spec.validate()?;
    if mc_reps < 2 {
        return Err(Error::invalid("true_params needs at least 2 Monte-Carlo draws"));
    }
    let mut r = rng::seeded(seed);
    let n = mc_reps as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    let mut sums = Vec::with_capacity(mc_reps);
    for _ in 0..mc_reps {
        let s: f64 = (0..spec.d).map(|_| r.random_range(-1.0..=1.0)).sum::<f64>();
        let (u0, u1) = (spec.mean_at_sum(0, s), spec.mean_at_sum(1, s));
        m0 += u0;
        m1 += u1;
        sums.push(s);
    }
    m0 /= n;
    m1 /= n;
    let (mut v0, mut v1, mut c01) = (0.0, 0.0, 0.0);
    for &s in &sums {
        let e0 = spec.mean_at_sum(0, s) - m0;
        let e1 = spec.mean_at_sum(1, s) - m1;
        v0 += e0 * e0;
        v1 += e1 * e1;
        c01 += e0 * e1;
    }
    v0 /= n - 1.0;
    v1 /= n - 1.0;
    c01 /= n - 1.0;
    let scale = 1.0 + m0.abs().max(m1.abs()).powi(2);
    let gamma = if v0 <= 1e-12 * scale || v1 <= 1e-12 * scale {
        0.0
    } else {
        (c01 / (v0 * v1).sqrt()).clamp(-1.0, 1.0)
    };
    let k2 = spec.noise_sd * spec.noise_sd;
    let params = PopulationParams {
        sigma0: (v0 + k2).sqrt(),
        sigma1: (v1 + k2).sqrt(),
        kappa0: spec.noise_sd,
        kappa1: spec.noise_sd,
        gamma,
        pi0: 1.0 - pi1,
        pi1,
        mu0: spec.marginal_mean(0),
        mu1: spec.marginal_mean(1),
    };
    params.validate()?;
    Ok(TrueParams { params, tau: spec.average_effect() })
}
