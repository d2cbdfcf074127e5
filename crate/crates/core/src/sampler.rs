//! Continuous and discrete LWE sample generation.
//!
//! Samples are produced in chunks of [`rng::CHUNK_LEN`]; chunk `c` always
//! reads from stream `(seed, domain, c)`, so a sample set is the same no
//! matter how many workers build it. Within a sample the draw order is the
//! `d` coordinates of `x`, then the noise (alternative) or the uniform label
//! (null).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::scalar::Real;

/// Slack below `period` under which a reduced value is snapped back to 0.
pub const MOD_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousLweParams {
    pub d: usize,
    pub m: usize,
    pub sigma: f64,
    pub period: f64,
}

impl ContinuousLweParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 {
            return Err(Error::invalid("d and m must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma {} must be finite and >= 0", self.sigma)));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::invalid(format!("period {} must be positive", self.period)));
        }
        Ok(())
    }

    /// Whether the period is small enough for the alternating-bands bound.
    pub fn period_admits_band_bound(&self) -> bool {
        self.period <= std::f64::consts::FRAC_1_PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteLweParams {
    pub d: usize,
    pub m: usize,
    pub q: u64,
    pub sigma: f64,
}

impl DiscreteLweParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 {
            return Err(Error::invalid("d and m must be positive"));
        }
        if self.q < 2 || self.q > 1 << 52 {
            return Err(Error::invalid(format!("modulus q = {} must lie in [2, 2^52]", self.q)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma {} must be finite and >= 0", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Secret {
    /// Unit vector for continuous LWE.
    Sphere(Vec<f64>),
    /// Residue vector in `Z_q^d` for discrete LWE.
    Residues(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Null,
    Alternative(Secret),
}

impl Hypothesis {
    pub fn is_alternative(&self) -> bool {
        matches!(self, Hypothesis::Alternative(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub x: Vec<f64>,
    pub y_prime: f64,
}

/// The representative of `t` modulo `period` in `[0, period)`.
pub fn mod_reduce<T: Real>(t: T, period: T) -> Result<T> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("cannot reduce non-finite value {t}")));
    }
    if !(period > T::zero() && period.is_finite()) {
        return Err(Error::invalid(format!("period {period} must be positive and finite")));
    }
    let r = t - period * (t / period).floor();
    if r < T::zero() || r >= period - T::lit(MOD_CLAMP) {
        Ok(T::zero())
    } else {
        Ok(r)
    }
}

/// Uniform point on the unit sphere in `R^d`.
pub fn draw_secret(d: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut r = rng::stream(seed, Domain::Secret, 0);
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(v.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// Uniform residue vector in `Z_q^d`.
pub fn draw_discrete_secret(d: usize, q: u64, seed: u64) -> Result<Vec<u64>> {
    if d == 0 || q < 2 {
        return Err(Error::invalid("need d >= 1 and q >= 2"));
    }
    let mut r = rng::stream(seed, Domain::DiscreteSecret, 0);
    Ok((0..d).map(|_| r.random_range(0..q)).collect())
}

fn check_sphere_secret(s: &[f64], d: usize) -> Result<()> {
    if s.len() != d {
        return Err(Error::invalid(format!("secret has dimension {}, samples have {d}", s.len())));
    }
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= 1e-12) {
        return Err(Error::invalid(format!("secret norm {norm} is not 1")));
    }
    Ok(())
}

/// Generate chunk `chunk` (of `len` samples) and hand each `(x, y′)` to `sink`
/// in generation order. The `x` buffer is reused between calls.
pub fn continuous_chunk<F: FnMut(&[f64], f64)>(
    params: &ContinuousLweParams,
    hyp: &Hypothesis,
    seed: u64,
    chunk: u64,
    len: usize,
    mut sink: F,
) -> Result<()> {
    let secret = match hyp {
        Hypothesis::Null => None,
        Hypothesis::Alternative(Secret::Sphere(s)) => Some(s.as_slice()),
        Hypothesis::Alternative(Secret::Residues(_)) => {
            return Err(Error::invalid("continuous sampler given a residue secret"))
        }
    };
    let mut r = rng::stream(seed, Domain::ContinuousSamples, chunk);
    let mut x = vec![0.0; params.d];
    let period = params.period;
    for _ in 0..len {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(&mut r);
        }
        let y = match secret {
            Some(s) => {
                let z: f64 = StandardNormal.sample(&mut r);
                let dot: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum();
                mod_reduce(dot + params.sigma * z, period)?
            }
            None => mod_reduce(r.random::<f64>() * period, period)?,
        };
        sink(&x, y);
    }
    Ok(())
}

/// Continuous LWE samples under `hyp`.
pub fn sample_continuous(params: &ContinuousLweParams, hyp: &Hypothesis, seed: u64) -> Result<Vec<RawSample>> {
    params.validate()?;
    if let Hypothesis::Alternative(Secret::Sphere(s)) = hyp {
        check_sphere_secret(s, params.d)?;
    }
    let chunks: Vec<_> = rng::chunk_ranges(params.m).collect();
    let parts: Vec<Result<Vec<RawSample>>> = chunks
        .into_par_iter()
        .map(|(c, range)| {
            let mut out = Vec::with_capacity(range.len());
            continuous_chunk(params, hyp, seed, c, range.len(), |x, y| {
                out.push(RawSample {
                    x: x.to_vec(),
                    y_prime: y,
                })
            })?;
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(params.m);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Discrete counterpart of [`continuous_chunk`].
pub fn discrete_chunk<F: FnMut(&[f64], f64)>(
    params: &DiscreteLweParams,
    hyp: &Hypothesis,
    seed: u64,
    chunk: u64,
    len: usize,
    mut sink: F,
) -> Result<()> {
    let secret = match hyp {
        Hypothesis::Null => None,
        Hypothesis::Alternative(Secret::Residues(s)) => Some(s.as_slice()),
        Hypothesis::Alternative(Secret::Sphere(_)) => {
            return Err(Error::invalid("discrete sampler given a sphere secret"))
        }
    };
    let q = params.q;
    let qf = q as f64;
    let mut r = rng::stream(seed, Domain::DiscreteSamples, chunk);
    let mut xi = vec![0u64; params.d];
    let mut x = vec![0.0; params.d];
    for _ in 0..len {
        for (a, f) in xi.iter_mut().zip(x.iter_mut()) {
            *a = r.random_range(0..q);
            *f = *a as f64;
        }
        let y = match secret {
            Some(s) => {
                let dot = xi
                    .iter()
                    .zip(s)
                    .fold(0u128, |acc, (&a, &b)| (acc + u128::from(a) * u128::from(b)) % u128::from(q));
                let z: f64 = StandardNormal.sample(&mut r);
                mod_reduce(dot as f64 + params.sigma * z, qf)?
            }
            None => mod_reduce(r.random::<f64>() * qf, qf)?,
        };
        sink(&x, y);
    }
    Ok(())
}

/// Discrete LWE samples; `x` is stored as exact residues in `f64`.
pub fn sample_discrete(params: &DiscreteLweParams, hyp: &Hypothesis, seed: u64) -> Result<Vec<RawSample>> {
    params.validate()?;
    if let Hypothesis::Alternative(Secret::Residues(s)) = hyp {
        if s.len() != params.d {
            return Err(Error::invalid(format!(
                "secret has dimension {}, samples have {}",
                s.len(),
                params.d
            )));
        }
        if let Some(bad) = s.iter().position(|&v| v >= params.q) {
            return Err(Error::invalid(format!("secret coordinate {bad} not below q")));
        }
    }
    let chunks: Vec<_> = rng::chunk_ranges(params.m).collect();
    let parts: Vec<Result<Vec<RawSample>>> = chunks
        .into_par_iter()
        .map(|(c, range)| {
            let mut out = Vec::with_capacity(range.len());
            discrete_chunk(params, hyp, seed, c, range.len(), |x, y| {
                out.push(RawSample {
                    x: x.to_vec(),
                    y_prime: y,
                })
            })?;
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(params.m);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}
