//! Label binarization: an LWE label `y′ ∈ [0, T)` becomes `+1` on the lower
//! half-period and `−1` on the upper one.
//!
//! Two boundary conventions coexist. [`binarize`] puts `y′ = T/2` on the
//! positive side; [`band_indicator`] uses the half-open bands `[iT, iT + T/2)`
//! and puts it on the negative side.

use crate::error::{Error, Result};
use crate::sampler::{mod_reduce, RawSample};
use crate::scalar::Real;

/// Default block length of [`BinarizeBlocks`].
pub const DEFAULT_BLOCK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Label> {
        match v {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryExample {
    pub x: Vec<f64>,
    pub y: Label,
}

/// `+1` iff `y′ ≤ period/2`, after checking `y′ ∈ [0, period)`.
pub fn label_of(y_prime: f64, period: f64) -> Option<Label> {
    if !(0.0..period).contains(&y_prime) {
        return None;
    }
    Some(if y_prime <= period / 2.0 {
        Label::Positive
    } else {
        Label::Negative
    })
}

fn check_period(period: f64) -> Result<()> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("period {period} must be positive")))
    }
}

fn out_of_range(index: usize, y_prime: f64, period: f64) -> Error {
    Error::invalid(format!("sample {index}: y' = {y_prime} outside [0, {period})"))
}

/// Binarize a whole sample list, preserving order.
pub fn binarize(samples: &[RawSample], period: f64) -> Result<Vec<BinaryExample>> {
    check_period(period)?;
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let y = label_of(s.y_prime, period).ok_or_else(|| out_of_range(i, s.y_prime, period))?;
            Ok(BinaryExample { x: s.x.clone(), y })
        })
        .collect()
}

/// `+1` iff `mod_T(t) < T/2`.
pub fn band_indicator<T: Real>(t: T, period: T) -> Result<i8> {
    let r = mod_reduce(t, period)?;
    Ok(if r < period * T::lit(0.5) { 1 } else { -1 })
}

/// Streaming binarization in fixed-size blocks; errors carry the global index.
pub struct BinarizeBlocks<I> {
    inner: I,
    period: f64,
    block: usize,
    seen: usize,
    failed: bool,
}

impl<I: Iterator<Item = Result<RawSample>>> BinarizeBlocks<I> {
    pub fn new(inner: I, period: f64, block: usize) -> Result<Self> {
        check_period(period)?;
        if block == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        Ok(BinarizeBlocks {
            inner,
            period,
            block,
            seen: 0,
            failed: false,
        })
    }
}

impl<I: Iterator<Item = Result<RawSample>>> Iterator for BinarizeBlocks<I> {
    type Item = Result<Vec<BinaryExample>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let mut out = Vec::with_capacity(self.block.min(1 << 20));
        while out.len() < self.block {
            let Some(item) = self.inner.next() else { break };
            let step = item.and_then(|s| {
                let y = label_of(s.y_prime, self.period).ok_or_else(|| out_of_range(self.seen, s.y_prime, self.period))?;
                Ok(BinaryExample { x: s.x, y })
            });
            match step {
                Ok(e) => out.push(e),
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
            self.seen += 1;
        }
        if out.is_empty() {
            None
        } else {
            Some(Ok(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(y: f64) -> RawSample {
        RawSample { x: vec![0.5, -1.0], y_prime: y }
    }

    #[test]
    fn binarize_examples() {
        let p = 0.1;
        let out = binarize(&[raw(p / 2.0), raw(0.0), raw(0.75 * p)], p).unwrap();
        let ys: Vec<_> = out.iter().map(|e| e.y).collect();
        assert_eq!(ys, [Label::Positive, Label::Positive, Label::Negative]);
        assert_eq!(out[0].x, vec![0.5, -1.0]);
    }

    #[test]
    fn binarize_names_offending_index() {
        let err = binarize(&[raw(0.01), raw(0.02), raw(0.1)], 0.1).unwrap_err();
        assert!(err.to_string().contains("sample 2"), "{err}");
        assert!(binarize(&[raw(-0.01)], 0.1).is_err());
    }

    #[test]
    fn band_indicator_examples() {
        let p = 0.1;
        assert_eq!(band_indicator(p / 4.0, p).unwrap(), 1);
        assert_eq!(band_indicator(p / 2.0, p).unwrap(), -1);
        assert_eq!(band_indicator(-p / 4.0, p).unwrap(), -1);
    }

    #[test]
    fn band_indicator_periodic_and_antisymmetric() {
        let p = 0.3;
        for i in 0..10_000 {
            // Offset keeps the grid off multiples of p/2.
            let t = -5.0 + (i as f64 + 0.37) * 1e-3;
            let b = band_indicator(t, p).unwrap();
            assert_eq!(band_indicator(t + p, p).unwrap(), b, "t={t}");
            assert_eq!(band_indicator(-t, p).unwrap(), -b, "t={t}");
        }
    }

    #[test]
    fn conventions_differ_only_at_half_period() {
        let p = 1.0;
        for i in 0..1000 {
            let y = i as f64 / 1000.0;
            let a = label_of(y, p).unwrap().as_i8();
            let b = band_indicator(y, p).unwrap();
            if y == 0.5 {
                assert_eq!((a, b), (1, -1));
            } else {
                assert_eq!(a, b, "y={y}");
            }
        }
    }

    #[test]
    fn blocks_match_whole_list() {
        let samples: Vec<_> = (0..1000).map(|i| raw((i as f64 * 0.0137) % 0.1)).collect();
        let whole = binarize(&samples, 0.1).unwrap();
        let blocks: Vec<_> = BinarizeBlocks::new(samples.iter().cloned().map(Ok), 0.1, 64)
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap();
        assert_eq!(blocks.len(), 16);
        assert_eq!(blocks.concat(), whole);
    }

    #[test]
    fn blocks_report_global_index() {
        let mut samples: Vec<_> = (0..100).map(|_| raw(0.01)).collect();
        samples[70].y_prime = 0.5;
        let mut it = BinarizeBlocks::new(samples.into_iter().map(Ok), 0.1, 32).unwrap();
        assert!(it.next().unwrap().is_ok());
        assert!(it.next().unwrap().is_ok());
        let err = it.next().unwrap().unwrap_err();
        assert!(err.to_string().contains("sample 70"));
        assert!(it.next().is_none());
    }
}
