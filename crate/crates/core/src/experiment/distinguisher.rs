use rayon::prelude::*;

use crate::closedform::bands_advantage_bound;
use crate::error::{Error, Result};
use crate::format::HypothesisKind;
use crate::metrics::{EstimateWithCI, Tally};
use crate::reduction::label_of;
use crate::rng;
use crate::sampler::{continuous_chunk, draw_secret, ContinuousLweParams, Hypothesis, Secret};

use super::config::{ExperimentConfig, Resolved};

/// Which learning objective the distinguisher thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Agnostic,
    Reliable,
    Fairness,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Agnostic, Problem::Reliable, Problem::Fairness];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Agnostic => "agnostic",
            Problem::Reliable => "reliable",
            Problem::Fairness => "fairness",
        }
    }

    pub fn parse(s: &str) -> Result<Problem> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown problem {s:?}")))
    }

    /// Name of the metric the problem is decided on.
    pub fn metric(self) -> &'static str {
        match self {
            Problem::Agnostic => "agreement",
            Problem::Reliable => "reliable",
            Problem::Fairness => "unfairness",
        }
    }

    /// Value of the metric when labels carry no information.
    pub fn baseline(self) -> f64 {
        match self {
            Problem::Agnostic | Problem::Reliable => 0.5,
            Problem::Fairness => 0.0,
        }
    }

    /// Planted advantage over the baseline at `u = s`: the band bound at
    /// `k = 0`, doubled for the two objectives that count both label classes
    /// (agreement) or condition on a half-space of mass ½ (reliability).
    pub fn bound(self, period: f64, sigma: f64) -> Result<f64> {
        let b = bands_advantage_bound(0, period, sigma)?;
        Ok(match self {
            Problem::Agnostic | Problem::Reliable => 2.0 * b,
            Problem::Fairness => b,
        })
    }

    pub fn estimate(self, tally: &Tally, confidence: f64) -> Result<EstimateWithCI> {
        match self {
            Problem::Agnostic => tally.agreement(confidence),
            Problem::Reliable => tally.positive_reliable(confidence),
            Problem::Fairness => tally.unfairness(confidence),
        }
    }
}

pub fn parse_hypothesis(s: &str) -> Result<HypothesisKind> {
    match s {
        "alternative" => Ok(HypothesisKind::Alternative),
        "null" => Ok(HypothesisKind::Null),
        _ => Err(Error::invalid(format!("unknown hypothesis {s:?}"))),
    }
}

pub fn hypothesis_name(h: HypothesisKind) -> &'static str {
    match h {
        HypothesisKind::Alternative => "alternative",
        HypothesisKind::Null => "null",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguisherResult {
    pub hypothesis: HypothesisKind,
    pub problem: Problem,
    pub estimate: EstimateWithCI,
    pub theoretical_bound: f64,
    pub decision: HypothesisKind,
    pub decision_threshold: f64,
}

/// One pass of the pipeline: the tally at the evaluated direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub tally: Tally,
    /// The planted secret (alternative) or `e₁` (null).
    pub direction: Vec<f64>,
}

/// Sample, binarize and tally at `u = s` (alternative) or `u = e₁` (null),
/// without materializing the sample set. `band_threshold` is fed to the tally.
pub fn simulate(r: &Resolved, hypothesis: HypothesisKind, band_threshold: f64) -> Result<Simulation> {
    let params = ContinuousLweParams {
        d: r.d,
        m: r.m,
        sigma: r.sigma,
        period: r.period,
    };
    params.validate()?;
    let (hyp, direction) = match hypothesis {
        HypothesisKind::Alternative => {
            let s = draw_secret(r.d, r.seed)?;
            (Hypothesis::Alternative(Secret::Sphere(s.clone())), s)
        }
        HypothesisKind::Null => {
            let mut e1 = vec![0.0; r.d];
            e1[0] = 1.0;
            (Hypothesis::Null, e1)
        }
    };
    let chunks: Vec<_> = rng::chunk_ranges(r.m).collect();
    let parts: Vec<Result<Tally>> = chunks
        .into_par_iter()
        .map(|(c, range)| {
            let mut t = Tally::default();
            let mut bad = None;
            continuous_chunk(&params, &hyp, r.seed, c, range.len(), |x, y| {
                let proj: f64 = x.iter().zip(&direction).map(|(a, b)| a * b).sum();
                match label_of(y, params.period) {
                    Some(label) => t.push(proj, label, band_threshold),
                    None => bad = Some(y),
                }
            })?;
            match bad {
                Some(y) => Err(Error::invalid(format!("sampler produced y' = {y} out of range"))),
                None => Ok(t),
            }
        })
        .collect();
    let mut tally = Tally::default();
    for p in parts {
        tally.merge(&p?);
    }
    Ok(Simulation { tally, direction })
}

/// Threshold the estimate at `baseline + bound/3`, demanding an extra
/// `margin_scale · halfWidth` above it before deciding "alternative".
pub fn decide(
    problem: Problem,
    hypothesis: HypothesisKind,
    estimate: EstimateWithCI,
    bound: f64,
    margin_scale: f64,
) -> DistinguisherResult {
    let threshold = problem.baseline() + bound / 3.0;
    let decision = if estimate.value - threshold > margin_scale * estimate.half_width {
        HypothesisKind::Alternative
    } else {
        HypothesisKind::Null
    };
    DistinguisherResult {
        hypothesis,
        problem,
        estimate,
        theoretical_bound: bound,
        decision,
        decision_threshold: threshold,
    }
}

/// Decide every problem from one simulation.
pub fn evaluate(r: &Resolved, sim: &Simulation, hypothesis: HypothesisKind, margin_scale: f64) -> Result<Vec<DistinguisherResult>> {
    Problem::ALL
        .into_iter()
        .map(|p| {
            let est = p.estimate(&sim.tally, r.confidence)?;
            Ok(decide(p, hypothesis, est, p.bound(r.period, r.sigma)?, margin_scale))
        })
        .collect()
}

pub fn run_resolved(r: &Resolved, problem: Problem, hypothesis: HypothesisKind) -> Result<DistinguisherResult> {
    let sim = simulate(r, hypothesis, 0.0)?;
    let est = problem.estimate(&sim.tally, r.confidence)?;
    Ok(decide(problem, hypothesis, est, problem.bound(r.period, r.sigma)?, 0.0))
}

/// Full pipeline for one problem and hypothesis.
pub fn run_distinguisher(
    config: &ExperimentConfig,
    problem: Problem,
    hypothesis: HypothesisKind,
) -> Result<DistinguisherResult> {
    run_resolved(&config.resolve(problem)?, problem, hypothesis)
}
