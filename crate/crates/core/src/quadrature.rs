//! Adaptive Gauss–Kronrod quadrature and compensated summation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Neumaier-compensated sum, evaluated in iteration order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[lo, hi]` by globally adaptive 21-point Gauss–Kronrod.
///
/// Subintervals are bisected largest-error first until the summed error
/// estimate drops below `max(abs, rel·|value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInterval(format!(
            "limits must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo > hi {
        return Err(Error::InvalidInterval(format!(
            "lower limit {lo} exceeds upper limit {hi}"
        )));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (value, error) = gk21(&mut f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { lo, hi, value, error });
    let mut subdivisions = 0;
    loop {
        let total = neumaier_sum(heap.iter().map(|s| s.value));
        let err: f64 = heap.iter().map(|s| s.error).sum();
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if subdivisions >= tol.max_subdivisions || !(worst.lo < mid && mid < worst.hi) || !err.is_finite() {
            heap.push(worst);
            return Err(Error::QuadratureNonConvergence {
                lo,
                hi,
                estimate: neumaier_sum(heap.iter().map(|s| s.value)),
                error: err,
                subdivisions,
            });
        }
        let (v1, e1) = gk21(&mut f, worst.lo, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.hi);
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
}

/// Nodes and weights of the 8-point Gauss–Legendre rule mapped to `[lo, hi]`.
pub fn gauss_legendre8_points(lo: f64, hi: f64) -> [(f64, f64); 8] {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut out = [(0.0, 0.0); 8];
    for (i, (x, w)) in GL8_X.iter().zip(GL8_W).enumerate() {
        out[2 * i] = (c - h * x, w * h);
        out[2 * i + 1] = (c + h * x, w * h);
    }
    out
}

/// Fixed 8-point Gauss–Legendre rule on `[lo, hi]`.
pub fn gauss_legendre8<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    gauss_legendre8_points(lo, hi).iter().map(|&(x, w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, 8.0, max_relative = 1e-15);
        assert_eq!(r.subdivisions, 0);
        assert_relative_eq!(
            gauss_legendre8(|x| x.powi(15), 0.0, 1.0),
            1.0 / 16.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn peaked_integrand_converges() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, 2.0 * 100.0 * (100.0f64).atan(), max_relative = 1e-10);
        assert!(r.subdivisions > 0);
    }

    #[test]
    fn reversed_limits_are_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, Tolerance::default()),
            Err(Error::InvalidInterval(_))
        ));
    }

    #[test]
    fn subdivision_cap_reports_non_convergence() {
        let tol = Tolerance {
            max_subdivisions: 3,
            ..Tolerance::default()
        };
        let err = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { subdivisions: 3, .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
