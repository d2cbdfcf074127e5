//! Certified checks of every closed form against the oracle.
//!
//! An inequality `oracle ≥ bound` passes when `oracle − bound` exceeds the
//! combined error budget. An identity `oracle ≈ closed form` passes when
//! `tolerance − |oracle − closed form|` exceeds it.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::closedform::{
    bands_advantage_bound, centering_rhs, damped_square_wave_series, intermediate_conv_bound,
    inverse_subgaussian_bound, partial_convolution_bound, partial_gaussian_ft_bound,
    subgaussian_sine_transform, subgaussian_tail_bound, FourierTruncation,
};
use crate::error::{Error, Result};
use crate::oracle::{
    band_sum_probability, normal_tail, normal_tail_error, quad_exp_square, quad_gaussian_kernel_sine,
    quad_gaussian_kernel_tail, quad_gaussian_sine_expectation, quad_partial_convolution, quad_sine_gaussian,
    wrapped_band_probability, Certified, QuadratureSpec,
};

/// Agreement required of the identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
/// Slack allowed between the damped series and the wrapped-normal oracle on
/// top of the series' own truncation bound.
pub const SERIES_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    AccuracyFailure,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::AccuracyFailure => "accuracy-failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    AtLeast,
    Within(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub label: &'static str,
    pub parameters: Vec<(&'static str, f64)>,
    pub relation: Relation,
    pub oracle_value: f64,
    pub bound_value: f64,
    pub error_budget: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

impl BoundReport {
    fn new(
        label: &'static str,
        parameters: Vec<(&'static str, f64)>,
        relation: Relation,
        oracle: Certified<f64>,
        bound: Certified<f64>,
    ) -> Self {
        let error_budget = oracle.error_bound + bound.error_bound;
        let margin = match relation {
            Relation::AtLeast => oracle.value - bound.value,
            Relation::Within(tol) => tol - (oracle.value - bound.value).abs(),
        };
        let verdict = if margin > error_budget { Verdict::Pass } else { Verdict::Fail };
        BoundReport {
            label,
            parameters,
            relation,
            oracle_value: oracle.value,
            bound_value: bound.value,
            error_budget,
            margin,
            verdict,
        }
    }

    /// Report for a point whose evaluation raised an error.
    fn failed(label: &'static str, parameters: Vec<(&'static str, f64)>, relation: Relation, err: Error) -> Self {
        let (verdict, oracle_value, error_budget) = match err {
            Error::AccuracyFailure { estimate, error_bound } => (Verdict::AccuracyFailure, estimate, error_bound),
            _ => (Verdict::Fail, f64::NAN, f64::NAN),
        };
        BoundReport {
            label,
            parameters,
            relation,
            oracle_value,
            bound_value: f64::NAN,
            error_budget,
            margin: f64::NAN,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Evaluates `(oracle, bound)`, plus any slack the closed form itself certifies
/// (added to an identity's tolerance).
type Check = Box<dyn Fn() -> Result<(Certified<f64>, Certified<f64>, f64)> + Send + Sync>;

struct Point {
    label: &'static str,
    parameters: Vec<(&'static str, f64)>,
    relation: Relation,
    check: Check,
}

impl Point {
    fn run(&self) -> BoundReport {
        match (self.check)() {
            Ok((oracle, bound, slack)) => {
                let relation = match self.relation {
                    Relation::Within(tol) => Relation::Within(tol + slack),
                    r => r,
                };
                BoundReport::new(self.label, self.parameters.clone(), relation, oracle, bound)
            }
            Err(e) => BoundReport::failed(self.label, self.parameters.clone(), self.relation, e),
        }
    }
}

/// `spec` with its absolute tolerance shrunk to the bound's own scale, so
/// that deep-tail points are certified relative to their size.
fn scaled(spec: &QuadratureSpec<f64>, scale: f64) -> QuadratureSpec<f64> {
    QuadratureSpec {
        abs_tolerance: spec.abs_tolerance * scale.abs().clamp(1e-250, 1.0),
        ..*spec
    }
}

fn phase_grid() -> Vec<(f64, u32, f64)> {
    let mut g = Vec::new();
    for omega in [2.0, 4.0, 8.0] {
        for k in 0..4u32 {
            g.push((omega, k, 2.0 * f64::from(k) * PI / omega));
        }
    }
    g
}

fn sine_transform_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut out = Vec::new();
    for mu in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        for sigma in [0.01, 0.1, 0.5, 1.0, 2.0] {
            for omega in [0.5, 1.0, 2.0, 5.0, 10.0] {
                out.push(Point {
                    label: "subgaussian_sine_transform",
                    parameters: vec![("mu", mu), ("sigma", sigma), ("omega", omega)],
                    relation: Relation::Within(IDENTITY_TOLERANCE),
                    check: Box::new(move || {
                        let oracle = quad_gaussian_sine_expectation(mu, sigma, omega, &spec)?;
                        let closed = subgaussian_sine_transform(mu, sigma, omega)?;
                        Ok((oracle, Certified::new(closed, 4.0 * f64::EPSILON), 0.0))
                    }),
                });
            }
        }
    }
    out
}

fn partial_ft_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    phase_grid()
        .into_iter()
        .map(|(omega, k, alpha)| Point {
            label: "partial_gaussian_ft",
            parameters: vec![("omega", omega), ("k", f64::from(k)), ("alpha", alpha)],
            relation: Relation::AtLeast,
            check: Box::new(move || {
                let bound = partial_gaussian_ft_bound(alpha, omega)?;
                let oracle = quad_sine_gaussian(alpha, omega, &scaled(&spec, bound))?;
                Ok((oracle, Certified::new(bound, bound * 4.0 * f64::EPSILON), 0.0))
            }),
        })
        .collect()
}

fn partial_convolution_points(spec: QuadratureSpec<f64>, truncation: FourierTruncation) -> Vec<Point> {
    let mut out = Vec::new();
    for (omega, k, alpha) in phase_grid() {
        for sigma in [0.0, 0.01, 0.05] {
            out.push(Point {
                label: "partial_convolution",
                parameters: vec![("omega", omega), ("k", f64::from(k)), ("alpha", alpha), ("sigma", sigma)],
                relation: Relation::AtLeast,
                check: Box::new(move || {
                    let bound = partial_convolution_bound(alpha, omega, sigma)?;
                    let scaled_trunc = FourierTruncation {
                        tolerance: truncation.tolerance * bound.min(1.0),
                        ..truncation
                    };
                    let oracle = quad_partial_convolution(alpha, omega, sigma, &scaled(&spec, bound), &scaled_trunc)?;
                    Ok((oracle, Certified::new(bound, bound * 4.0 * f64::EPSILON), 0.0))
                }),
            });
        }
    }
    out
}

fn bands_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut out = Vec::new();
    for period in [0.05, 0.1, 1.0 / PI] {
        for sigma in [0.0, period / 10.0, period / 4.0] {
            for k in 0..3u32 {
                out.push(Point {
                    label: "bands_advantage",
                    parameters: vec![("T", period), ("sigma", sigma), ("k", f64::from(k))],
                    relation: Relation::AtLeast,
                    check: Box::new(move || {
                        let kt = f64::from(k) * period;
                        let joint = band_sum_probability(k, period, sigma, &spec)?;
                        let half_tail = Certified::new(0.5 * normal_tail(kt), 0.5 * normal_tail_error(kt));
                        let bound = bands_advantage_bound(k, period, sigma)?;
                        Ok((joint.minus(half_tail), Certified::new(bound, bound * 4.0 * f64::EPSILON), 0.0))
                    }),
                });
            }
        }
    }
    out
}

fn centering_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut out = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        for alpha in [0.0, 1.0, 2.0] {
            for omega in [1.0, 2.0, 4.0] {
                out.push(Point {
                    label: "centering",
                    parameters: vec![("a", a), ("alpha", alpha), ("omega", omega)],
                    relation: Relation::Within(IDENTITY_TOLERANCE),
                    check: Box::new(move || {
                        let lhs = quad_gaussian_kernel_sine(a, alpha, omega, &spec)?;
                        let rhs = centering_rhs(a, alpha, omega, &spec)?;
                        Ok((lhs, rhs, 0.0))
                    }),
                });
            }
        }
    }
    out
}

/// The bound needs `α > 0`; at `α = 0` it fails for some `(a, ω)`, so the
/// grid starts at the first positive phase multiple. The two `α = 0` points
/// kept here are ones where it does hold.
fn intermediate_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut grid = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        for omega in [1.0, 2.0, 4.0, 8.0] {
            for k in 1..4u32 {
                grid.push((a, omega, f64::from(k)));
            }
        }
    }
    // Past 2aα² ≈ 650 both sides sink into subnormals and nothing is certifiable.
    grid.retain(|&(a, omega, k)| 2.0 * a * (2.0 * k * PI / omega).powi(2) <= 650.0);
    grid.push((0.5, 2.0, 0.0));
    grid.push((0.5, 0.1, 0.0));
    grid.into_iter()
        .map(|(a, omega, k)| {
            let alpha = 2.0 * k * PI / omega;
            Point {
                label: "intermediate_conv",
                parameters: vec![("a", a), ("omega", omega), ("k", k), ("alpha", alpha)],
                relation: Relation::AtLeast,
                check: Box::new(move || {
                    let bound = intermediate_conv_bound(a, alpha, omega, &spec)?;
                    let local = scaled(&spec, bound.value);
                    let bound = intermediate_conv_bound(a, alpha, omega, &local)?;
                    let lhs = quad_gaussian_kernel_sine(a, alpha, omega, &local)?;
                    Ok((lhs, bound, 0.0))
                }),
            }
        })
        .collect()
}

fn tail_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut out = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        for alpha in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            out.push(Point {
                label: "subgaussian_tail",
                parameters: vec![("a", a), ("alpha", alpha)],
                relation: Relation::AtLeast,
                check: Box::new(move || {
                    let bound = subgaussian_tail_bound(a, alpha)?;
                    let lhs = quad_gaussian_kernel_tail(a, alpha, &scaled(&spec, bound))?;
                    Ok((lhs, Certified::new(bound, bound * 4.0 * f64::EPSILON), 0.0))
                }),
            });
        }
    }
    out
}

fn inverse_tail_points(spec: QuadratureSpec<f64>) -> Vec<Point> {
    let mut out = Vec::new();
    for a in [0.25, 1.0, 4.0] {
        for c in [1.0, 1.5, 2.0, 3.0] {
            let beta = c / f64::sqrt(a);
            out.push(Point {
                label: "inverse_subgaussian",
                parameters: vec![("a", a), ("beta", beta)],
                relation: Relation::AtLeast,
                check: Box::new(move || {
                    let bound = inverse_subgaussian_bound(a, beta)?;
                    let lhs = quad_exp_square(a, beta, &spec)?;
                    Ok((lhs, Certified::new(bound, bound * 4.0 * f64::EPSILON), 0.0))
                }),
            });
        }
    }
    out
}

/// Damped series against `2·P[mod_{2π}(ω(t+z)) < π] − 1` from wrapped-normal
/// band masses.
fn series_points(spec: QuadratureSpec<f64>, truncation: FourierTruncation) -> Vec<Point> {
    let mut out = Vec::new();
    for omega in [2.0, 8.0, 2.0 * PI / 0.1] {
        for sigma in [0.005, 0.05, 0.2] {
            for t in [0.0, 0.3, 1.1] {
                out.push(Point {
                    label: "series_consistency",
                    parameters: vec![("omega", omega), ("sigma", sigma), ("t", t)],
                    relation: Relation::Within(SERIES_TOLERANCE),
                    check: Box::new(move || {
                        let series = damped_square_wave_series(t, omega, sigma, &truncation)?;
                        let p = wrapped_band_probability(omega * t, 2.0 * PI, omega * sigma, spec.truncation_radius)?;
                        let oracle =
                            Certified::new(2.0 * p.value - 1.0, 2.0 * p.error_bound + 4.0 * f64::EPSILON);
                        Ok((oracle, Certified::exact(series.value), series.error_bound))
                    }),
                });
            }
        }
    }
    out
}

fn all_points(spec: &QuadratureSpec<f64>, truncation: &FourierTruncation) -> Vec<Point> {
    let s = *spec;
    let t = *truncation;
    let mut pts = sine_transform_points(s);
    pts.extend(partial_ft_points(s));
    pts.extend(partial_convolution_points(s, t));
    pts.extend(bands_points(s));
    pts.extend(centering_points(s));
    pts.extend(intermediate_points(s));
    pts.extend(tail_points(s));
    pts.extend(inverse_tail_points(s));
    pts.extend(series_points(s, t));
    pts
}

/// Run every grid. Points are evaluated in parallel; the report order is the
/// grid order.
pub fn verify_lemma_suite(spec: &QuadratureSpec<f64>) -> Vec<BoundReport> {
    verify_lemma_suite_with(spec, &FourierTruncation::default())
}

pub fn verify_lemma_suite_with(spec: &QuadratureSpec<f64>, truncation: &FourierTruncation) -> Vec<BoundReport> {
    all_points(spec, truncation).par_iter().map(Point::run).collect()
}

/// Run only the grids whose label is in `labels`.
pub fn verify_labels(spec: &QuadratureSpec<f64>, labels: &[&str]) -> Vec<BoundReport> {
    all_points(spec, &FourierTruncation::default())
        .into_par_iter()
        .filter(|p| labels.contains(&p.label))
        .map(|p| p.run())
        .collect()
}

pub const LABELS: [&str; 9] = [
    "subgaussian_sine_transform",
    "partial_gaussian_ft",
    "partial_convolution",
    "bands_advantage",
    "centering",
    "intermediate_conv",
    "subgaussian_tail",
    "inverse_subgaussian",
    "series_consistency",
];
