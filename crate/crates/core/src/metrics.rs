//! Empirical estimators for the learning objectives, with Hoeffding widths.
//!
//! Everything is read off a [`Tally`] of integer counts over the projections
//! `p = ⟨u, x⟩`, so partial tallies from any partition merge exactly.
//! Agreement and reliability use the closed side `p ≥ 0` (sign(0) = +1);
//! unfairness uses the strict side `p > 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduction::{BinaryExample, Label};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub half_width: f64,
    pub n: u64,
    pub confidence: f64,
}

impl EstimateWithCI {
    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }
}

fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("confidence {confidence} must lie in (0, 1)")))
    }
}

/// `√(ln(2/(1−confidence))/(2n))`.
pub fn hoeffding_half_width(n: usize, confidence: f64) -> Result<f64> {
    check_confidence(confidence)?;
    if n == 0 {
        return Err(Error::invalid("half-width needs n >= 1"));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt())
}

/// Smallest `n` whose Hoeffding half-width is at most `target`.
pub fn hoeffding_sample_size(target: f64, confidence: f64) -> Result<usize> {
    check_confidence(confidence)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(format!("target half-width {target} must lie in (0, 1)")));
    }
    let guess = ((2.0 / (1.0 - confidence)).ln() / (2.0 * target * target)).ceil();
    if !(guess < 1e18) {
        return Err(Error::invalid("target half-width too small"));
    }
    let mut n = (guess as usize).max(1);
    // The float solve can be off by one either way.
    while hoeffding_half_width(n, confidence)? > target {
        n += 1;
    }
    while n > 1 && hoeffding_half_width(n - 1, confidence)? <= target {
        n -= 1;
    }
    Ok(n)
}

/// Counts of the events every estimator needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub n: u64,
    pub proj_ge0: u64,
    pub proj_gt0: u64,
    pub pos: u64,
    pub pos_ge0: u64,
    pub neg_lt0: u64,
    pub pos_gt0: u64,
    /// `y = +1` and `p ≥ band_threshold`.
    pub pos_band: u64,
}

impl Tally {
    pub fn push(&mut self, proj: f64, y: Label, band_threshold: f64) {
        let pos = y.is_positive();
        self.n += 1;
        self.proj_ge0 += u64::from(proj >= 0.0);
        self.proj_gt0 += u64::from(proj > 0.0);
        self.pos += u64::from(pos);
        self.pos_ge0 += u64::from(pos && proj >= 0.0);
        self.neg_lt0 += u64::from(!pos && proj < 0.0);
        self.pos_gt0 += u64::from(pos && proj > 0.0);
        self.pos_band += u64::from(pos && proj >= band_threshold);
    }

    pub fn merge(&mut self, o: &Tally) {
        self.n += o.n;
        self.proj_ge0 += o.proj_ge0;
        self.proj_gt0 += o.proj_gt0;
        self.pos += o.pos;
        self.pos_ge0 += o.pos_ge0;
        self.neg_lt0 += o.neg_lt0;
        self.pos_gt0 += o.pos_gt0;
        self.pos_band += o.pos_band;
    }

    fn unconditional(&self, count: u64, confidence: f64) -> Result<EstimateWithCI> {
        if self.n == 0 {
            return Err(Error::invalid("no examples"));
        }
        Ok(EstimateWithCI {
            value: count as f64 / self.n as f64,
            half_width: hoeffding_half_width(self.n as usize, confidence)?,
            n: self.n,
            confidence,
        })
    }

    /// `P̂[y = sign(p)]`.
    pub fn agreement(&self, confidence: f64) -> Result<EstimateWithCI> {
        self.unconditional(self.pos_ge0 + self.neg_lt0, confidence)
    }

    /// `P̂[y = +1 | p ≥ 0]`, with the conditioning count as `n`.
    pub fn positive_reliable(&self, confidence: f64) -> Result<EstimateWithCI> {
        if self.proj_ge0 == 0 {
            return Err(Error::DegenerateCondition("no example with <u,x> >= 0".into()));
        }
        Ok(EstimateWithCI {
            value: self.pos_ge0 as f64 / self.proj_ge0 as f64,
            half_width: hoeffding_half_width(self.proj_ge0 as usize, confidence)?,
            n: self.proj_ge0,
            confidence,
        })
    }

    /// `|P̂[p > 0]·P̂[y = 1] − P̂[y = 1 ∩ p > 0]|`; the width is the sum of the
    /// three marginal widths.
    pub fn unfairness(&self, confidence: f64) -> Result<EstimateWithCI> {
        let base = self.unconditional(0, confidence)?;
        let n = self.n as f64;
        let a = self.proj_gt0 as f64 / n;
        let b = self.pos as f64 / n;
        let c = self.pos_gt0 as f64 / n;
        Ok(EstimateWithCI {
            value: (a * b - c).abs(),
            half_width: 3.0 * base.half_width,
            ..base
        })
    }

    /// `P̂[y = +1 ∩ p ≥ threshold]` for the threshold the tally was built with.
    pub fn band_joint(&self, confidence: f64) -> Result<EstimateWithCI> {
        self.unconditional(self.pos_band, confidence)
    }

    /// `P̂[y = +1 ∩ p ≥ 0]`.
    pub fn positive_closed_side(&self, confidence: f64) -> Result<EstimateWithCI> {
        self.unconditional(self.pos_ge0, confidence)
    }

    /// `P̂[y = −1 ∩ p < 0]`.
    pub fn negative_open_side(&self, confidence: f64) -> Result<EstimateWithCI> {
        self.unconditional(self.neg_lt0, confidence)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tally `examples` against direction `u`.
pub fn tally(examples: &[BinaryExample], u: &[f64], band_threshold: f64) -> Result<Tally> {
    if examples.is_empty() {
        return Err(Error::invalid("no examples"));
    }
    if let Some(i) = examples.iter().position(|e| e.x.len() != u.len()) {
        return Err(Error::invalid(format!(
            "example {i} has dimension {}, u has {}",
            examples[i].x.len(),
            u.len()
        )));
    }
    Ok(examples
        .par_chunks(1 << 14)
        .map(|chunk| {
            let mut t = Tally::default();
            for e in chunk {
                t.push(dot(&e.x, u), e.y, band_threshold);
            }
            t
        })
        .reduce(Tally::default, |mut a, b| {
            a.merge(&b);
            a
        }))
}

pub fn empirical_agreement(examples: &[BinaryExample], u: &[f64], confidence: f64) -> Result<EstimateWithCI> {
    tally(examples, u, 0.0)?.agreement(confidence)
}

pub fn empirical_positive_reliable(examples: &[BinaryExample], u: &[f64], confidence: f64) -> Result<EstimateWithCI> {
    tally(examples, u, 0.0)?.positive_reliable(confidence)
}

pub fn empirical_unfairness(examples: &[BinaryExample], u: &[f64], confidence: f64) -> Result<EstimateWithCI> {
    tally(examples, u, 0.0)?.unfairness(confidence)
}

pub fn empirical_band_joint(
    examples: &[BinaryExample],
    u: &[f64],
    k: u32,
    period: f64,
    confidence: f64,
) -> Result<EstimateWithCI> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid(format!("period {period} must be positive")));
    }
    tally(examples, u, f64::from(k) * period)?.band_joint(confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{band_sum_probability, QuadratureSpec};
    use crate::reduction::binarize;
    use crate::sampler::{draw_secret, sample_continuous, ContinuousLweParams, Hypothesis, Secret};
    use proptest::prelude::*;

    fn ex(x: Vec<f64>, y: i8) -> BinaryExample {
        BinaryExample {
            x,
            y: Label::from_i8(y).unwrap(),
        }
    }

    #[test]
    fn sample_size_examples() {
        assert_eq!(hoeffding_sample_size(0.01, 0.95).unwrap(), 18445);
        assert_eq!(hoeffding_sample_size(0.5, 0.95).unwrap(), 8);
        assert!(hoeffding_sample_size(1.0, 0.95).is_err());
        assert!(hoeffding_sample_size(0.1, 1.0).is_err());
        assert!(hoeffding_sample_size(0.0, 0.5).is_err());
    }

    #[test]
    fn half_width_formula() {
        let h = hoeffding_half_width(1000, 0.95).unwrap();
        assert_eq!(h, ((2.0 / (1.0 - 0.95f64)).ln() / 2000.0).sqrt());
        assert!(hoeffding_half_width(0, 0.95).is_err());
    }

    #[test]
    fn perfect_agreement_and_reliability() {
        let u = [1.0, 0.0];
        let data = vec![
            ex(vec![0.5, 3.0], 1),
            ex(vec![0.0, -1.0], 1),
            ex(vec![-0.2, 0.0], -1),
            ex(vec![2.0, 1.0], 1),
        ];
        assert_eq!(empirical_agreement(&data, &u, 0.95).unwrap().value, 1.0);
        let r = empirical_positive_reliable(&data, &u, 0.95).unwrap();
        assert_eq!((r.value, r.n), (1.0, 3));
    }

    #[test]
    fn degenerate_and_empty_inputs() {
        let u = [1.0];
        let data = vec![ex(vec![-1.0], 1)];
        assert!(matches!(
            empirical_positive_reliable(&data, &u, 0.95),
            Err(Error::DegenerateCondition(_))
        ));
        assert!(empirical_agreement(&[], &u, 0.95).is_err());
        assert!(empirical_unfairness(&[], &u, 0.95).is_err());
        assert!(empirical_agreement(&data, &[1.0, 0.0], 0.95).is_err());
    }

    #[test]
    fn constant_labels_have_zero_unfairness() {
        let u = [0.3, 0.4];
        let data: Vec<_> = (0..101).map(|i| ex(vec![i as f64 - 50.0, 1.0], 1)).collect();
        let v = empirical_unfairness(&data, &u, 0.95).unwrap();
        assert!(v.value.abs() < 1e-15);
        assert_eq!(v.half_width, 3.0 * hoeffding_half_width(101, 0.95).unwrap());
    }

    #[test]
    fn zero_projection_counts_as_positive_side() {
        let u = [1.0];
        let data = vec![ex(vec![0.0], 1), ex(vec![0.0], -1)];
        let t = tally(&data, &u, 0.0).unwrap();
        assert_eq!((t.proj_ge0, t.proj_gt0, t.pos_ge0, t.pos_gt0), (2, 0, 1, 0));
        assert_eq!(t.agreement(0.95).unwrap().value, 0.5);
    }

    fn null_data(m: usize, seed: u64) -> Vec<BinaryExample> {
        let p = ContinuousLweParams {
            d: 3,
            m,
            sigma: 0.0,
            period: 0.1,
        };
        binarize(&sample_continuous(&p, &Hypothesis::Null, seed).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn null_estimators_sit_at_baseline() {
        let data = null_data(1_000_000, 31);
        let u = [0.0, 0.6, 0.8];
        let a = empirical_agreement(&data, &u, 0.95).unwrap();
        assert!((a.value - 0.5).abs() <= 3.0 * a.half_width);
        let r = empirical_positive_reliable(&data, &u, 0.95).unwrap();
        assert!((r.value - 0.5).abs() <= 3.0 * r.half_width);
        let f = empirical_unfairness(&data, &u, 0.95).unwrap();
        assert!(f.value <= 3.0 * f.half_width);
        let b = empirical_band_joint(&data, &u, 0, 0.1, 0.95).unwrap();
        assert!((b.value - 0.25).abs() <= 3.0 * b.half_width);
    }

    #[test]
    fn band_joint_matches_exact_band_series() {
        let p = ContinuousLweParams {
            d: 2,
            m: 1_000_000,
            sigma: 0.0,
            period: 0.1,
        };
        let s = draw_secret(2, 77).unwrap();
        let hyp = Hypothesis::Alternative(Secret::Sphere(s.clone()));
        let data = binarize(&sample_continuous(&p, &hyp, 78).unwrap(), 0.1).unwrap();
        let est = empirical_band_joint(&data, &s, 2, 0.1, 0.95).unwrap();
        let exact = band_sum_probability(2, 0.1, 0.0, &QuadratureSpec::default()).unwrap();
        assert!((est.value - exact.value).abs() <= 3.0 * est.half_width);
    }

    proptest! {
        #[test]
        fn tally_is_partition_invariant(
            rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 1..300),
            cut in 0usize..300,
        ) {
            let data: Vec<_> = rows.iter().map(|&(a, b, y)| ex(vec![a, b], if y { 1 } else { -1 })).collect();
            let u = [0.8, -0.6];
            let whole = tally(&data, &u, 0.2).unwrap();
            let cut = cut.min(data.len());
            let mut parts = Tally::default();
            for piece in [&data[..cut], &data[cut..]] {
                if !piece.is_empty() {
                    parts.merge(&tally(piece, &u, 0.2).unwrap());
                }
            }
            prop_assert_eq!(whole, parts);
            // Agreement splits exactly into its two joint events.
            prop_assert_eq!(whole.pos_ge0 + whole.neg_lt0,
                data.iter().filter(|e| (dot(&e.x, &u) >= 0.0) == e.y.is_positive()).count() as u64);
            for est in [whole.agreement(0.9).unwrap(), whole.unfairness(0.9).unwrap(), whole.band_joint(0.9).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&est.value));
            }
        }
    }
}
