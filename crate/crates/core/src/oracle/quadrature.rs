//! Globally adaptive Gauss-Kronrod (7/15) quadrature on bounded intervals.
//!
//! The driver keeps every subinterval with its local error estimate and always
//! bisects the one with the largest estimate (ties broken by creation order, so
//! results are reproducible bit for bit). Local estimates follow the QUADPACK
//! `qk15` rescaling, including the round-off floor `50·eps·∫|f|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::Certified;

// Kronrod abscissae on [0, 1]; the Gauss points are the odd-indexed ones.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

/// One 15-point Kronrod evaluation with its embedded 7-point Gauss estimate.
/// Returns `(kronrod, error_estimate, integral_of_abs)`.
pub fn gauss_kronrod_15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T, T) {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let half_len = half * (b - a);
    let abs_half = half_len.abs();

    let fc = f(centre);
    let mut res_k = T::lit(WGK[7]) * fc;
    let mut res_g = T::lit(WG[3]) * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k += w * (f1 + f2);
        res_abs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc += T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half_len;
    res_abs *= abs_half;
    res_asc *= abs_half;

    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc > T::zero() && err > T::zero() {
        let scaled = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * scaled.min(T::one());
    }
    let eps = T::epsilon();
    if res_abs > T::min_positive_value() / (T::lit(50.0) * eps) {
        err = err.max(T::lit(50.0) * eps * res_abs);
    }
    (result, err, res_abs)
}

/// Integrate `f` over the partition given by `breakpoints` (sorted, at least
/// two entries). The returned error bound is the sum of the local estimates.
pub fn integrate_with_breakpoints<T: Real, F: Fn(T) -> T>(
    f: F,
    breakpoints: &[T],
    tol: Tolerance<T>,
) -> Result<Certified<T>> {
    if breakpoints.len() < 2 {
        return Err(Error::invalid("quadrature needs at least one interval"));
    }
    if breakpoints.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("quadrature limits must be finite"));
    }
    let mut pieces: Vec<Piece<T>> = Vec::with_capacity(breakpoints.len() * 2);
    let mut heap = BinaryHeap::with_capacity(breakpoints.len() * 2);
    for (order, w) in breakpoints.windows(2).enumerate() {
        let (value, error, _) = gauss_kronrod_15(&f, w[0], w[1]);
        heap.push(Worst::new(error, order, order));
        pieces.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut next_order = pieces.len();
    let limit = tol.max_subdivisions.max(pieces.len());
    let (mut total, mut err) = totals(&pieces);

    loop {
        if err <= tol.abs.max(tol.rel * total.abs()) {
            // The running sums drift; confirm with an ordered recomputation.
            (total, err) = totals(&pieces);
            if err <= tol.abs.max(tol.rel * total.abs()) {
                return Ok(Certified::new(total, err));
            }
        }
        if pieces.len() >= limit {
            let (total, err) = totals(&pieces);
            return Err(Error::AccuracyFailure {
                estimate: total.to_f64_lossy(),
                error_bound: err.to_f64_lossy(),
            });
        }
        let worst = heap.pop().expect("non-empty partition").slot;
        let Piece {
            a, b, value, error, ..
        } = pieces[worst];
        let mid = T::lit(0.5) * (a + b);
        if !(mid > a && mid < b) {
            // Interval cannot be split further in this precision.
            let (total, err) = totals(&pieces);
            return Err(Error::AccuracyFailure {
                estimate: total.to_f64_lossy(),
                error_bound: err.to_f64_lossy(),
            });
        }
        let (v1, e1, _) = gauss_kronrod_15(&f, a, mid);
        let (v2, e2, _) = gauss_kronrod_15(&f, mid, b);
        total += v1 + v2 - value;
        err += e1 + e2 - error;
        pieces[worst] = Piece {
            a,
            b: mid,
            value: v1,
            error: e1,
        };
        heap.push(Worst::new(e1, next_order, worst));
        heap.push(Worst::new(e2, next_order + 1, pieces.len()));
        pieces.push(Piece {
            a: mid,
            b,
            value: v2,
            error: e2,
        });
        next_order += 2;
    }
}

/// Heap entry: largest error first, older pieces first among equals.
struct Worst {
    error: f64,
    order: usize,
    slot: usize,
}

impl Worst {
    fn new<T: Real>(error: T, order: usize, slot: usize) -> Self {
        Worst {
            error: error.to_f64_lossy(),
            order,
            slot,
        }
    }
}

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.order.cmp(&self.order))
    }
}

/// Integrate `f` over `[a, b]`, split into `initial_pieces` equal parts first.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    initial_pieces: usize,
    tol: Tolerance<T>,
) -> Result<Certified<T>> {
    if a == b {
        return Ok(Certified::exact(T::zero()));
    }
    let n = initial_pieces.max(1);
    let step = (b - a) / T::from_count(n);
    let mut points: Vec<T> = (0..n).map(|i| a + step * T::from_count(i)).collect();
    points.push(b);
    integrate_with_breakpoints(f, &points, tol)
}

fn totals<T: Real>(pieces: &[Piece<T>]) -> (T, T) {
    // Sum left to right so the result does not depend on refinement history.
    let mut sorted: Vec<&Piece<T>> = pieces.iter().collect();
    sorted.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal));
    let mut total = T::zero();
    let mut err = T::zero();
    for p in sorted {
        total += p.value;
        err += p.error;
    }
    (total, err)
}
