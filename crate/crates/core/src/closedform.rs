//! Closed-form values of the Fourier and tail bounds behind the planted
//! advantage. Bounds are returned as plain numbers; whether they hold is
//! decided in `experiment::suite` against the oracle.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::oracle::{quad_exp_square, quad_exp_square_cos, Certified, QuadratureSpec};
use crate::reduction::band_indicator;
use crate::scalar::Real;

/// Absolute tolerance on the distance of `αω` from the nearest multiple of `2π`.
pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Stopping rule for the damped square-wave series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTruncation {
    pub tolerance: f64,
    pub max_terms: usize,
}

impl Default for FourierTruncation {
    fn default() -> Self {
        FourierTruncation {
            tolerance: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl FourierTruncation {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance > 0.0 && self.tolerance.is_finite() && self.max_terms > 0 {
            Ok(())
        } else {
            Err(Error::invalid("truncation needs tolerance > 0 and max_terms > 0"))
        }
    }
}

/// `(4/π) Σ_{k=1..K} sin((2k−1)t)/(2k−1)`.
pub fn square_wave_partial_sum<T: Real>(t: T, terms: usize) -> Result<T> {
    if terms == 0 {
        return Err(Error::invalid("square wave partial sum needs K >= 1"));
    }
    let mut s = T::zero();
    for k in 1..=terms {
        let m = T::from_count(2 * k - 1);
        s += (m * t).sin() / m;
    }
    Ok(s * T::lit(4.0) * T::FRAC_1_PI())
}

/// `E[e^{iωz}]` for `z ~ N(μ, σ²)`.
pub fn gaussian_characteristic<T: Real>(mu: T, sigma: T, omega: T) -> Result<Complex<T>> {
    check_sigma(sigma)?;
    let damping = (-(sigma * sigma * omega * omega) * T::lit(0.5)).exp();
    Ok(Complex::from_polar(damping, mu * omega))
}

/// `E[sin ωz] = sin(μω)·e^{−σ²ω²/2}` for `z ~ N(μ, σ²)`.
pub fn subgaussian_sine_transform<T: Real>(mu: T, sigma: T, omega: T) -> Result<T> {
    check_sigma(sigma)?;
    Ok((mu * omega).sin() * (-(sigma * sigma * omega * omega) * T::lit(0.5)).exp())
}

/// `e^{−α²}/(4ω)`, valid for `α ≥ 0`, `ω ≥ 2` and `αω ∈ 2πℤ`.
pub fn partial_gaussian_ft_bound<T: Real>(alpha: T, omega: T) -> Result<T> {
    check_phase_domain(alpha, omega)?;
    Ok((-(alpha * alpha)).exp() / (T::lit(4.0) * omega))
}

/// `e^{−α² − σ²ω²/2}/(πω)` under the same phase conditions.
pub fn partial_convolution_bound<T: Real>(alpha: T, omega: T, sigma: T) -> Result<T> {
    check_sigma(sigma)?;
    check_phase_domain(alpha, omega)?;
    let exponent = -(alpha * alpha) - sigma * sigma * omega * omega * T::lit(0.5);
    Ok(exponent.exp() / (T::PI() * omega))
}

/// `T·e^{−k²T² − 2π²σ²/T²}/(4π²)` for `T ∈ (0, 1/π]`.
pub fn bands_advantage_bound<T: Real>(k: u32, period: T, sigma: T) -> Result<T> {
    check_sigma(sigma)?;
    if !(period > T::zero() && period <= T::FRAC_1_PI()) {
        return Err(Error::invalid(format!("period {period} outside (0, 1/pi]")));
    }
    let pi2 = T::PI() * T::PI();
    let kt = T::lit(f64::from(k)) * period;
    let exponent = -(kt * kt) - T::lit(2.0) * pi2 * sigma * sigma / (period * period);
    Ok(period * exponent.exp() / (T::lit(4.0) * pi2))
}

/// `(e^{−aα² − ω²/4a}/√a)·∫₀^{ω/2√a} e^{t²} cos(2α√a t) dt`.
pub fn centering_rhs<T: Real>(a: T, alpha: T, omega: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    check_a(a)?;
    let ra = a.sqrt();
    let upper = omega / (T::lit(2.0) * ra);
    // The integrand is even, so a negative upper limit only flips the sign.
    let inner = quad_exp_square_cos(T::one(), T::lit(2.0) * alpha * ra, upper.abs(), spec)?;
    let inner = if upper < T::zero() { inner.scale(-T::one()) } else { inner };
    let prefactor = (-a * alpha * alpha - omega * omega / (T::lit(4.0) * a)).exp() / ra;
    Ok(inner.scale(prefactor))
}

/// `e^{−2aα² − ω²/8a}/√(2a)·∫₀^{ω/2√(2a)} e^{t²} dt`, for `αω ∈ 2πℤ`.
pub fn intermediate_conv_bound<T: Real>(a: T, alpha: T, omega: T, spec: &QuadratureSpec<T>) -> Result<Certified<T>> {
    check_a(a)?;
    check_phase(alpha, omega)?;
    let r2a = (T::lit(2.0) * a).sqrt();
    let upper = omega / (T::lit(2.0) * r2a);
    let inner = quad_exp_square(T::one(), upper.abs(), spec)?;
    let inner = if upper < T::zero() { inner.scale(-T::one()) } else { inner };
    let prefactor = (-T::lit(2.0) * a * alpha * alpha - omega * omega / (T::lit(8.0) * a)).exp() / r2a;
    Ok(inner.scale(prefactor))
}

/// `e^{−aα²}/(2aα + √(2a))`.
pub fn subgaussian_tail_bound<T: Real>(a: T, alpha: T) -> Result<T> {
    check_a(a)?;
    if !(alpha >= T::zero()) {
        return Err(Error::invalid("alpha must be nonnegative"));
    }
    let two_a = T::lit(2.0) * a;
    Ok((-a * alpha * alpha).exp() / (two_a * alpha + two_a.sqrt()))
}

/// `e^{aβ²}/(3aβ)` for `β ≥ √(1/a)`.
pub fn inverse_subgaussian_bound<T: Real>(a: T, beta: T) -> Result<T> {
    check_a(a)?;
    let threshold = a.recip().sqrt();
    // Relative slack of a few ulps so that β = √(1/a) computed either way passes.
    if !(beta >= threshold * (T::one() - T::lit(4.0) * T::epsilon())) {
        return Err(Error::PreconditionViolation {
            what: format!("beta {beta} below sqrt(1/a) = {threshold}"),
            residual: (threshold - beta).to_f64_lossy(),
        });
    }
    Ok((a * beta * beta).exp() / (T::lit(3.0) * a * beta))
}

/// `E_{z~N(0,σ²)}[f(ω(t+z))]` with `f(u) = sgn(sin u)` (tie at zero resolved
/// as the half-open bands), by the damped series
/// `(4/π) Σ sin(mωt)e^{−σ²ω²m²/2}/m` over odd `m`.
///
/// The returned bound covers the skipped terms. For σ = 0 the series does not
/// converge absolutely and the exact sign is returned instead.
pub fn damped_square_wave_series<T: Real>(
    t: T,
    omega: T,
    sigma: T,
    truncation: &FourierTruncation,
) -> Result<Certified<T>> {
    check_sigma(sigma)?;
    truncation.validate()?;
    if sigma == T::zero() || omega == T::zero() {
        let s = band_indicator(omega * t, T::TAU())?;
        return Ok(Certified::exact(T::lit(f64::from(s))));
    }
    let four_over_pi = T::lit(4.0) * T::FRAC_1_PI();
    let damping = sigma * sigma * omega * omega * T::lit(0.5);
    let tol = T::lit(truncation.tolerance);
    let mut sum = T::zero();
    let mut k = 1usize;
    loop {
        let m = T::from_count(2 * k - 1);
        let c = four_over_pi / m * (-damping * m * m).exp();
        if c < tol || k > truncation.max_terms {
            // Successive odd-index coefficients shrink at least by this ratio.
            let ratio = (-damping * T::lit(4.0) * (m + T::one())).exp();
            let rest = if ratio < T::one() { c / (T::one() - ratio) } else { T::infinity() };
            let rounding = T::from_count(k - 1) * T::epsilon() * four_over_pi;
            return Ok(Certified::new(sum, rest + rounding));
        }
        sum += c * (m * omega * t).sin();
        k += 1;
    }
}

/// Distance of `αω` from the nearest multiple of `2π`.
pub fn phase_residual<T: Real>(alpha: T, omega: T) -> T {
    let tau = T::TAU();
    let r = (alpha * omega) % tau;
    let r = if r < T::zero() { r + tau } else { r };
    r.min(tau - r)
}

fn check_phase<T: Real>(alpha: T, omega: T) -> Result<()> {
    if !alpha.is_finite() || !omega.is_finite() {
        return Err(Error::invalid("alpha and omega must be finite"));
    }
    let residual = phase_residual(alpha, omega);
    // Never tighter than the rounding of the product itself.
    let tol = T::lit(PHASE_TOLERANCE).max(T::lit(8.0) * T::epsilon() * (alpha * omega).abs().max(T::one()));
    if residual > tol {
        return Err(Error::PreconditionViolation {
            what: format!("alpha*omega = {} is not a multiple of 2*pi", alpha * omega),
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_phase_domain<T: Real>(alpha: T, omega: T) -> Result<()> {
    if !(alpha >= T::zero()) {
        return Err(Error::invalid(format!("alpha {alpha} must be nonnegative")));
    }
    if !(omega >= T::lit(2.0)) {
        return Err(Error::invalid(format!("omega {omega} must be at least 2")));
    }
    check_phase(alpha, omega)
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if sigma >= T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma {sigma} must be finite and nonnegative")))
    }
}

fn check_a<T: Real>(a: T) -> Result<()> {
    if a > T::zero() && a.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("a = {a} must be positive")))
    }
}
