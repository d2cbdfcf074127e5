use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{hoeffding_sample_size, DEFAULT_CONFIDENCE};

use super::Problem;

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

/// Experiment parameters as read from JSON. `T = 1/(C′√(η ln d))` and
/// `σ = η^{−κ}` are derived; `Cprime` and `m` may be left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub eta: f64,
    pub kappa: u32,
    #[serde(rename = "Cprime", default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

/// A validated configuration with every derived quantity filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub d: usize,
    pub eta: f64,
    pub kappa: u32,
    pub c_prime: f64,
    pub period: f64,
    pub sigma: f64,
    pub m: usize,
    pub seed: u64,
    pub confidence: f64,
    /// `ln d ≤ η ≤ d`, a loose stand-in for the hardness regime; reported only.
    pub in_hard_regime: bool,
}

impl ExperimentConfig {
    /// Choose `η` and `C′` so that the derived period and noise hit the
    /// requested values: `η = σ^{−1/κ}`, `C′ = 1/(T√(η ln d))`.
    pub fn for_targets(d: usize, period: f64, sigma: f64, kappa: u32, m: Option<usize>, seed: u64) -> Result<Self> {
        if d < 2 || !(period > 0.0) || !(sigma > 0.0 && sigma < 1.0) || kappa == 0 {
            return Err(Error::invalid("targets need d >= 2, T > 0, 0 < sigma < 1, kappa >= 1"));
        }
        let eta = sigma.powf(-1.0 / f64::from(kappa));
        let c_prime = 1.0 / (period * (eta * (d as f64).ln()).sqrt());
        Ok(ExperimentConfig {
            d,
            eta,
            kappa,
            c_prime: Some(c_prime),
            m,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        })
    }

    pub fn resolve(&self, problem: Problem) -> Result<Resolved> {
        if self.d < 2 {
            return Err(Error::invalid("d must be at least 2 so that ln d > 0"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta {} must be positive", self.eta)));
        }
        if self.kappa == 0 {
            return Err(Error::invalid("kappa must be a positive integer"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid(format!("confidence {} must lie in (0, 1)", self.confidence)));
        }
        let scale = (self.eta * (self.d as f64).ln()).sqrt();
        let limit = std::f64::consts::FRAC_1_PI;
        let c_prime = match self.c_prime {
            Some(c) if c > 0.0 && c.is_finite() => c,
            Some(c) => return Err(Error::invalid(format!("Cprime {c} must be positive"))),
            None => std::f64::consts::PI / scale,
        };
        let mut period = 1.0 / (c_prime * scale);
        if period > limit {
            // Absorb the rounding of the default choice; reject anything larger.
            if period <= limit * (1.0 + 1e-12) {
                period = limit;
            } else {
                return Err(Error::invalid(format!("derived T = {period} exceeds 1/pi")));
            }
        }
        let sigma = self.eta.powi(-(self.kappa as i32));
        let m = match self.m {
            Some(0) => return Err(Error::invalid("m must be positive")),
            Some(m) => m,
            None => hoeffding_sample_size(problem.bound(period, sigma)? / 6.0, self.confidence)?,
        };
        let ln_d = (self.d as f64).ln();
        Ok(Resolved {
            d: self.d,
            eta: self.eta,
            kappa: self.kappa,
            c_prime,
            period,
            sigma,
            m,
            seed: self.seed,
            confidence: self.confidence,
            in_hard_regime: ln_d <= self.eta && self.eta <= self.d as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_round_trip() {
        let c = ExperimentConfig::for_targets(100, 0.1, 0.005, 1, Some(10), 3).unwrap();
        let r = c.resolve(Problem::Reliable).unwrap();
        assert!((r.period - 0.1).abs() < 1e-15);
        assert!((r.sigma - 0.005).abs() < 1e-15);
        assert_eq!(r.m, 10);
        assert!(!r.in_hard_regime);
        let c = ExperimentConfig::for_targets(100, 0.1, 0.005, 2, None, 3).unwrap();
        let r = c.resolve(Problem::Reliable).unwrap();
        assert!((r.sigma - 0.005).abs() < 1e-15);
        assert!(r.in_hard_regime);
    }

    #[test]
    fn default_cprime_puts_period_at_limit() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"d": 50, "eta": 50.0, "kappa": 1}"#).unwrap();
        let r = c.resolve(Problem::Fairness).unwrap();
        assert_eq!(r.period, std::f64::consts::FRAC_1_PI);
        assert_eq!(r.confidence, 0.95);
        // m from a sixth of the fairness bound.
        let b = crate::closedform::bands_advantage_bound(0, r.period, r.sigma).unwrap();
        assert_eq!(r.m, hoeffding_sample_size(b / 6.0, 0.95).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let parse = |s: &str| serde_json::from_str::<ExperimentConfig>(s);
        let c = parse(r#"{"d": 100, "eta": 200, "kappa": 1, "Cprime": 0.1}"#).unwrap();
        assert!(c.resolve(Problem::Reliable).is_err());
        let c = parse(r#"{"d": 1, "eta": 200, "kappa": 1}"#).unwrap();
        assert!(c.resolve(Problem::Reliable).is_err());
        assert!(parse(r#"{"d": 10, "eta": 2, "kappa": 1, "extra": 1}"#).is_err());
    }
}
