//! Reference computations that certify the closed forms and the estimators.
//!
//! Every value carries an explicit error bound: adaptive-quadrature estimate
//! plus the Gaussian mass cut off by truncation. Nothing here calls into
//! `closedform` for the quantity it is checking.

pub mod quadrature;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::closedform::FourierTruncation;
use crate::error::{Error, Result};
use crate::metrics::{hoeffding_half_width, EstimateWithCI};
use crate::reduction::band_indicator;
use crate::rng::{self, Domain};
use crate::sampler::mod_reduce;
use crate::scalar::Real;

use quadrature::{integrate_with_breakpoints, Tolerance};


/// A computed value with an explicit bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified<T> {
    pub value: T,
    pub error_bound: T,
}

impl<T: Real> Certified<T> {
    pub fn new(value: T, error_bound: T) -> Self {
        Certified { value, error_bound }
    }

    pub fn exact(value: T) -> Self {
        Certified::new(value, T::zero())
    }

    /// Add `extra` to the error budget.
    pub fn widen(self, extra: T) -> Self {
        Certified::new(self.value, self.error_bound + extra.abs())
    }

    pub fn scale(self, c: T) -> Self {
        Certified::new(self.value * c, self.error_bound * c.abs())
    }

    pub fn plus(self, other: Self) -> Self {
        Certified::new(self.value + other.value, self.error_bound + other.error_bound)
    }

    pub fn minus(self, other: Self) -> Self {
        Certified::new(self.value - other.value, self.error_bound + other.error_bound)
    }
}

/// Accuracy controls for the oracle integrals.
///
/// `truncation_radius` is measured in standard deviations of whichever
/// Gaussian weight the integral carries; the mass beyond it is added to the
/// reported error.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec<T> {
    pub abs_tolerance: T,
    pub rel_tolerance: T,
    pub truncation_radius: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        QuadratureSpec {
            abs_tolerance: T::lit(1e-12),
            rel_tolerance: T::lit(1e-12),
            truncation_radius: T::lit(10.0),
            max_subdivisions: 200_000,
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    fn tolerance(&self) -> Tolerance<T> {
        Tolerance {
            abs: self.abs_tolerance,
            rel: self.rel_tolerance,
            max_subdivisions: self.max_subdivisions,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.abs_tolerance > T::zero()
            && self.rel_tolerance >= T::zero()
            && self.truncation_radius > T::zero()
            && self.max_subdivisions > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "quadrature spec needs positive tolerance, radius and subdivision limit",
            ))
        }
    }
}

/// Upper tail `P[g ≥ t]` of the standard normal.
///
/// Evaluated as `erfc(t/√2)/2` with the fdlibm `erfc` (rational minimax
/// approximations on [0, 0.84), [0.84, 1.25), [1.25, 1/0.35), [1/0.35, 28),
/// with `exp(-x²)` split into exactly representable parts). Relative
/// accuracy is better than 1e-14 on |t| ≤ 8.
pub fn normal_tail<T: Real>(t: T) -> T {
    if t.is_nan() {
        return t;
    }
    if t == T::infinity() {
        return T::zero();
    }
    if t == T::neg_infinity() {
        return T::one();
    }
    T::lit(0.5) * (t * T::FRAC_1_SQRT_2()).erfc()
}

/// Error budget for one [`normal_tail`] evaluation.
///
/// A rounding `δ` in `t/√2` moves `erfc` by a relative `≈ t²δ`; on top of
/// that comes a few ulps from `erfc` itself.
pub fn normal_tail_error<T: Real>(t: T) -> T {
    let eps = T::epsilon();
    normal_tail(t) * eps * (T::lit(4.0) + T::lit(2.0) * t * t)
}

/// Standard normal density.
pub fn std_normal_pdf<T: Real>(t: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (-(t * t) * T::lit(0.5)).exp()
}

/// `P[a ≤ g ≤ b]` for a standard normal `g`, computed from whichever tail is
/// smaller so that far-tail intervals keep their relative accuracy.
pub fn normal_interval<T: Real>(a: T, b: T) -> Certified<T> {
    let (value, err) = if a >= T::zero() {
        (normal_tail(a) - normal_tail(b), normal_tail_error(a) + normal_tail_error(b))
    } else if b <= T::zero() {
        (normal_tail(-b) - normal_tail(-a), normal_tail_error(-b) + normal_tail_error(-a))
    } else {
        (
            T::one() - normal_tail(-a) - normal_tail(b),
            normal_tail_error(-a) + normal_tail_error(b) + T::epsilon(),
        )
    };
    Certified::new(value, err + value.abs() * T::epsilon())
}

/// Break `[lo, hi]` at the given spacing (last piece may be shorter).
fn spaced_points<T: Real>(lo: T, hi: T, spacing: T) -> Vec<T> {
    let n = ((hi - lo) / spacing).ceil().to_usize().unwrap_or(1).max(1);
    let mut pts: Vec<T> = (0..n).map(|i| lo + spacing * T::from_count(i)).collect();
    pts.push(hi);
    pts
}

/// `∫_α^∞ sin(ωz) φ(z) dz` over `[α, α + R]` plus the tail bound `P[g ≥ α+R]`.
///
/// The interval is pre-split at every zero of `sin(ωz)` measured from α (and
/// at most unit spacing), so each panel sees at most half an oscillation.
pub fn quad_sine_gaussian<T: Real>(alpha: T, omega: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    spec.validate()?;
    if !(alpha >= T::zero()) || !alpha.is_finite() || !omega.is_finite() {
        return Err(Error::invalid("quad_sine_gaussian needs finite alpha >= 0 and finite omega"));
    }
    if omega == T::zero() {
        return Ok(Certified::exact(T::zero()));
    }
    let hi = alpha + spec.truncation_radius;
    let spacing = (T::PI() / omega.abs()).min(T::one());
    let pts = spaced_points(alpha, hi, spacing);
    let body = integrate_with_breakpoints(|z: T| (omega * z).sin() * std_normal_pdf(z), &pts, spec.tolerance())?;
    Ok(body.widen(normal_tail(hi)))
}

/// `E_{z~N(μ,σ²)}[sin(ωz)]` by quadrature in standardized coordinates over
/// `[-R, R]`, plus the cut-off mass `2·P[g ≥ R]`.
pub fn quad_gaussian_sine_expectation<T: Real>(
    mu: T,
    sigma: T,
    omega: T,
    spec: &QuadratureSpec<T>,
) -> Result<Certified<T>> {
    spec.validate()?;
    if !(sigma >= T::zero()) {
        return Err(Error::invalid("sigma must be nonnegative"));
    }
    if sigma == T::zero() {
        return Ok(Certified::new((mu * omega).sin(), T::epsilon()));
    }
    let r = spec.truncation_radius;
    let freq = (sigma * omega).abs();
    let spacing = if freq > T::zero() {
        (T::PI() / freq).min(T::one())
    } else {
        T::one()
    };
    let pts = spaced_points(-r, r, spacing);
    let body = integrate_with_breakpoints(
        |u: T| (omega * (mu + sigma * u)).sin() * std_normal_pdf(u),
        &pts,
        spec.tolerance(),
    )?;
    Ok(body.widen(T::lit(2.0) * normal_tail(r)))
}

/// `∫_α^∞ e^{-a t²} sin(ωt) dt` by quadrature, truncated `R` standard
/// deviations (`1/√(2a)`) past α, with the cut-off mass in the error.
pub fn quad_gaussian_kernel_sine<T: Real>(a: T, alpha: T, omega: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    spec.validate()?;
    if !(a > T::zero()) {
        return Err(Error::invalid("a must be positive"));
    }
    let sd = (T::lit(2.0) * a).sqrt().recip();
    let hi = alpha + spec.truncation_radius * sd;
    let spacing = if omega != T::zero() {
        (T::PI() / omega.abs()).min(sd)
    } else {
        sd
    };
    let pts = spaced_points(alpha, hi, spacing);
    let body = integrate_with_breakpoints(|t: T| (-a * t * t).exp() * (omega * t).sin(), &pts, spec.tolerance())?;
    Ok(body.widen(gaussian_kernel_tail_mass(a, hi)))
}

/// `∫_α^∞ e^{-a t²} dt` by quadrature, truncated as in
/// [`quad_gaussian_kernel_sine`].
pub fn quad_gaussian_kernel_tail<T: Real>(a: T, alpha: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    spec.validate()?;
    if !(a > T::zero()) {
        return Err(Error::invalid("a must be positive"));
    }
    let sd = (T::lit(2.0) * a).sqrt().recip();
    let hi = alpha + spec.truncation_radius * sd;
    // Finer panels near α where the integrand carries its mass.
    let spacing = sd.min(T::one() / (T::lit(2.0) * a * alpha.abs() + T::one()));
    let pts = spaced_points(alpha, hi, spacing);
    let body = integrate_with_breakpoints(|t: T| (-a * t * t).exp(), &pts, spec.tolerance())?;
    Ok(body.widen(gaussian_kernel_tail_mass(a, hi)))
}

/// `∫_b^∞ e^{-a t²} dt = √(π/a)·P[g ≥ b√(2a)]` (used only as a truncation bound).
fn gaussian_kernel_tail_mass<T: Real>(a: T, b: T) -> T {
    (T::PI() / a).sqrt() * normal_tail(b * (T::lit(2.0) * a).sqrt())
}

/// `∫_0^β e^{a t²} cos(c t) dt` on a bounded interval.
pub fn quad_exp_square_cos<T: Real>(a: T, c: T, beta: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    spec.validate()?;
    if !beta.is_finite() || !(beta >= T::zero()) {
        return Err(Error::invalid("upper limit must be finite and nonnegative"));
    }
    if beta == T::zero() {
        return Ok(Certified::exact(T::zero()));
    }
    let spacing = if c != T::zero() {
        (T::PI() / c.abs()).min(T::one())
    } else {
        T::one()
    };
    let pts = spaced_points(T::zero(), beta, spacing.min(beta));
    integrate_with_breakpoints(|t: T| (a * t * t).exp() * (c * t).cos(), &pts, spec.tolerance())
}

/// `∫_0^β e^{a t²} dt` on a bounded interval.
pub fn quad_exp_square<T: Real>(a: T, beta: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    quad_exp_square_cos(a, T::zero(), beta, spec)
}

/// `∫_α^∞ E_z[f(ω(z+t))] φ(t) dt` with `f(u) = sgn(sin u)` and `z ~ N(0, σ²)`.
///
/// For σ > 0 the inner expectation is expanded in the damped square-wave
/// series and integrated term by term with [`quad_sine_gaussian`]; the series
/// tail is bounded by `P[g ≥ α]·Σ_{skipped} 4e^{-σ²ω²m²/2}/(πm)`. For σ = 0
/// the integrand is a sign pattern and the integral is a signed sum of
/// Gaussian band masses.
pub fn quad_partial_convolution<T: Real>(
    alpha: T,
    omega: T,
    sigma: T,
    spec: &QuadratureSpec<T>,
    truncation: &FourierTruncation,
) -> Result<Certified<T>> {
    spec.validate()?;
    if !(sigma >= T::zero()) || !(alpha >= T::zero()) || !(omega > T::zero()) {
        return Err(Error::invalid("need sigma >= 0, alpha >= 0, omega > 0"));
    }
    if sigma == T::zero() {
        return signed_band_integral(alpha, omega, spec);
    }
    let four_over_pi = T::lit(4.0) * T::FRAC_1_PI();
    let damping = sigma * sigma * omega * omega * T::lit(0.5);
    let coeff = |m: T| four_over_pi / m * (-damping * m * m).exp();
    let tol = T::lit(truncation.tolerance);

    // Number of terms kept, so the absolute tolerance can be split between
    // them in inverse proportion to their coefficients.
    let kept = (1..=truncation.max_terms)
        .find(|&j| coeff(T::from_count(2 * j - 1)) < tol)
        .map_or(truncation.max_terms, |j| j - 1)
        .max(1);
    let share = spec.abs_tolerance / T::from_count(kept);

    let mut acc = Certified::exact(T::zero());
    let mut j = 1usize;
    loop {
        let m = T::from_count(2 * j - 1);
        let c = coeff(m);
        if c < tol || j > truncation.max_terms {
            // Geometric bound on the skipped coefficients.
            let ratio = (-damping * T::lit(4.0) * (m + T::one())).exp();
            let skipped = if ratio < T::one() { c / (T::one() - ratio) } else { T::infinity() };
            return Ok(acc.widen(normal_tail(alpha) * skipped));
        }
        let term_spec = QuadratureSpec {
            abs_tolerance: share / c,
            ..*spec
        };
        let term = quad_sine_gaussian(alpha, m * omega, &term_spec)?;
        acc = acc.plus(term.scale(c));
        j += 1;
    }
}

/// `∫_α^∞ sgn(sin ωt) φ(t) dt` as a signed sum of band masses between the
/// zeros of `sin ωt`.
fn signed_band_integral<T: Real>(alpha: T, omega: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    let half_period = T::PI() / omega;
    let period = half_period * T::lit(2.0);
    let hi = alpha + spec.truncation_radius;
    let first = ((alpha / half_period).floor() + T::one()) * half_period;
    let mut edges = vec![alpha];
    let mut e = first;
    while e < hi {
        edges.push(e);
        e += half_period;
    }
    edges.push(hi);
    let mut acc = Certified::exact(T::zero());
    for w in edges.windows(2) {
        let mid = T::lit(0.5) * (w[0] + w[1]);
        let sign = T::lit(f64::from(band_indicator(mid, period)?));
        acc = acc.plus(normal_interval(w[0], w[1]).scale(sign));
    }
    Ok(acc.widen(normal_tail(hi)))
}

/// `P_z[mod_T(t + z) ≤ T/2]` for `z ~ N(0, σ²)`, by summing normal band masses
/// over the lattice shifts within `R·σ` of `t`. The returned bound covers the
/// mass beyond `±R·σ`.
pub fn wrapped_band_probability<T: Real>(t: T, period: T, sigma: T, radius: T) -> Result<Certified<T>> {
    if !(period > T::zero()) || !(sigma >= T::zero()) {
        return Err(Error::invalid("need period > 0 and sigma >= 0"));
    }
    let half = period * T::lit(0.5);
    if sigma == T::zero() {
        let r = mod_reduce(t, period)?;
        return Ok(Certified::exact(if r <= half { T::one() } else { T::zero() }));
    }
    let reach = radius * sigma;
    let n_lo = ((t - reach - half) / period).floor().to_i64().unwrap_or(0);
    let n_hi = ((t + reach) / period).ceil().to_i64().unwrap_or(0);
    let mut p = Certified::exact(T::zero());
    for n in n_lo..=n_hi {
        let left = T::lit(n as f64) * period;
        p = p.plus(normal_interval((left - t) / sigma, (left + half - t) / sigma));
    }
    Ok(p.widen(T::lit(2.0) * normal_tail(radius)))
}

/// `P[⟨u,x⟩ + z ∈ S_T ∩ ⟨u,x⟩ ≥ kT]` where `S_T = ∪ [iT, iT + T/2]`.
///
/// For σ = 0 this is the exact band series
/// `Σ_{j≥k} P[jT ≤ g ≤ jT + T/2]`; for σ > 0 it is the nested integral
/// computed by [`band_sum_probability_nested`].
pub fn band_sum_probability<T: Real>(k: u32, period: T, sigma: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    spec.validate()?;
    if !(period > T::zero()) || !(sigma >= T::zero()) {
        return Err(Error::invalid("need T > 0 and sigma >= 0"));
    }
    if sigma > T::zero() {
        return band_sum_probability_nested(k, period, sigma, spec);
    }
    let start = T::lit(f64::from(k)) * period;
    let hi = start + spec.truncation_radius;
    let half = period * T::lit(0.5);
    let mut total = Certified::exact(T::zero());
    let mut j = 0usize;
    loop {
        let left = start + period * T::from_count(j);
        if left >= hi {
            return Ok(total.widen(normal_tail(left)));
        }
        total = total.plus(normal_interval(left, left + half));
        j += 1;
    }
}

/// Nested-quadrature form of [`band_sum_probability`]:
/// `∫_{kT}^{kT+R} P_z[mod_T(t+z) ≤ T/2] φ(t) dt`, outer panels split at every
/// multiple of `T/2`. Valid for σ = 0 too, where the inner probability is an
/// indicator and every panel is integrated exactly.
pub fn band_sum_probability_nested<T: Real>(
    k: u32,
    period: T,
    sigma: T,
    spec: &QuadratureSpec<T>,
) -> Result<Certified<T>> {
    spec.validate()?;
    if !(period > T::zero()) || !(sigma >= T::zero()) {
        return Err(Error::invalid("need T > 0 and sigma >= 0"));
    }
    let start = T::lit(f64::from(k)) * period;
    let hi = start + spec.truncation_radius;
    let pts = spaced_points(start, hi, period * T::lit(0.5));
    let radius = spec.truncation_radius;
    // Largest inner error seen at any node; the inner error is smooth in t,
    // so its sup over the nodes stands in for its sup over the line.
    let inner_err = std::cell::Cell::new(T::zero());
    let inner = |t: T| -> T {
        match wrapped_band_probability(t, period, sigma, radius) {
            Ok(c) => {
                inner_err.set(inner_err.get().max(c.error_bound));
                c.value
            }
            Err(_) => T::nan(),
        }
    };
    let body = integrate_with_breakpoints(|t: T| inner(t) * std_normal_pdf(t), &pts, spec.tolerance())?;
    Ok(body.widen(normal_tail(hi) + inner_err.get() * normal_tail(start)))
}

/// One independent coordinate of a Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McVariable {
    Normal { mean: f64, std_dev: f64 },
    Uniform { low: f64, high: f64 },
}

impl McVariable {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            McVariable::Normal { mean, std_dev } => {
                let g: f64 = StandardNormal.sample(rng);
                mean + std_dev * g
            }
            McVariable::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// Seeded Monte Carlo mean of `f` over independent `variables`, with the
/// Hoeffding half-width for the declared range `[low, high]` of `f`.
///
/// Chunks of draws come from per-chunk streams and are summed in chunk order,
/// so the estimate is identical for any rayon pool size.
pub fn mc_expectation<F>(
    variables: &[McVariable],
    f: F,
    range: (f64, f64),
    n: usize,
    seed: u64,
    confidence: f64,
) -> Result<EstimateWithCI>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (low, high) = range;
    if !(low.is_finite() && high.is_finite()) || high < low {
        return Err(Error::invalid(
            "Monte Carlo needs a bounded declared range for Hoeffding's inequality",
        ));
    }
    if n == 0 {
        return Err(Error::invalid("Monte Carlo needs n >= 1"));
    }
    for v in variables {
        let ok = match *v {
            McVariable::Normal { mean, std_dev } => mean.is_finite() && std_dev >= 0.0,
            McVariable::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
        };
        if !ok {
            return Err(Error::invalid(format!("bad Monte Carlo variable {v:?}")));
        }
    }
    let half_width = hoeffding_half_width(n, confidence)?;
    let ranges: Vec<_> = rng::chunk_ranges(n).collect();
    let partials: Vec<Result<f64>> = ranges
        .into_par_iter()
        .map(|(chunk, range_idx)| {
            let mut r = rng::stream(seed, Domain::MonteCarlo, chunk);
            let mut point = vec![0.0; variables.len()];
            let mut sum = 0.0;
            for _ in range_idx {
                for (slot, v) in point.iter_mut().zip(variables) {
                    *slot = v.draw(&mut r);
                }
                let y = f(&point);
                if !(y >= low && y <= high) {
                    return Err(Error::invalid(format!("value {y} outside declared range [{low}, {high}]")));
                }
                sum += y;
            }
            Ok(sum)
        })
        .collect();
    let mut total = 0.0;
    for p in partials {
        total += p?;
    }
    Ok(EstimateWithCI {
        value: total / n as f64,
        half_width: (high - low) * half_width,
        n: n as u64,
        confidence,
    })
}
