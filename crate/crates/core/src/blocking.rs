//! Boolean model of square reflectors and the independent-blocking
//! visibility probability of a candidate reflection point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, TestLink};

/// `n` equally spaced support points on `[lo, hi]`, each with mass `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteUniform {
    lo: f64,
    hi: f64,
    n: usize,
}

impl DiscreteUniform {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain("discrete uniform endpoints must be finite"));
        }
        if n == 0 {
            return Err(Error::domain("discrete uniform needs at least one support point"));
        }
        if lo > hi {
            return Err(Error::domain(format!(
                "discrete uniform needs lo <= hi, got {lo} > {hi}"
            )));
        }
        if (n == 1) != (lo == hi) {
            return Err(Error::domain(format!(
                "discrete uniform has n = 1 exactly when lo = hi (lo={lo}, hi={hi}, n={n})"
            )));
        }
        Ok(DiscreteUniform { lo, hi, n })
    }

    /// A point mass.
    pub fn constant(v: f64) -> Result<Self> {
        Self::new(v, v, 1)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn support(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.value(i))
    }

    pub fn mean(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn second_moment(&self) -> f64 {
        self.support().map(|v| v * v).sum::<f64>() / self.n as f64
    }
}

/// Poisson field of square reflectors with i.i.d. widths and orientations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BooleanModelParams {
    lambda: f64,
    widths: DiscreteUniform,
    orientations: DiscreteUniform,
    #[serde(skip)]
    trig: Vec<(f64, f64)>,
    #[serde(skip)]
    width_second_moment: f64,
}

impl BooleanModelParams {
    /// `lambda` in reflectors per square meter, orientations in radians.
    pub fn new(lambda: f64, widths: DiscreteUniform, orientations: DiscreteUniform) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("density must be finite and > 0, got {lambda}")));
        }
        if widths.lo() <= 0.0 {
            return Err(Error::domain(format!("widths must be > 0, got min {}", widths.lo())));
        }
        if !(orientations.lo() > 0.0 && orientations.hi() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain(format!(
                "orientations must lie in (0, π/2), got [{}, {}]",
                orientations.lo(),
                orientations.hi()
            )));
        }
        Ok(BooleanModelParams {
            lambda,
            trig: orientations.support().map(f64::sin_cos).collect(),
            width_second_moment: widths.second_moment(),
            widths,
            orientations,
        })
    }

    /// Same as [`new`](Self::new) with the density given per square kilometer.
    pub fn per_km2(lambda_km2: f64, widths: DiscreteUniform, orientations: DiscreteUniform) -> Result<Self> {
        Self::new(lambda_km2 * 1e-6, widths, orientations)
    }

    /// Orientations given in degrees.
    pub fn from_degrees(
        lambda_km2: f64,
        widths: (f64, f64, usize),
        orientations_deg: (f64, f64, usize),
    ) -> Result<Self> {
        let w = DiscreteUniform::new(widths.0, widths.1, widths.2)?;
        let t = DiscreteUniform::new(
            orientations_deg.0.to_radians(),
            orientations_deg.1.to_radians(),
            orientations_deg.2,
        )?;
        Self::per_km2(lambda_km2, w, t)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_per_km2(&self) -> f64 {
        self.lambda * 1e6
    }

    pub fn widths(&self) -> &DiscreteUniform {
        &self.widths
    }

    pub fn orientations(&self) -> &DiscreteUniform {
        &self.orientations
    }

    pub fn mean_width(&self) -> f64 {
        self.widths.mean()
    }

    /// `(sin θ_j, cos θ_j)` of the j-th orientation support point.
    pub(crate) fn orientation_trig(&self, j: usize) -> (f64, f64) {
        self.trig[j]
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.widths.clone(), self.orientations.clone())
    }

    /// `E_{W,Θ}[μ₂(L_[p,q] ⊕ R_{W,Θ,0})]`.
    ///
    /// Width and orientation are independent, so the double sum factors into
    /// `E[W²] + E[W]·|q−p|·mean_j f(θ_j − η)`. The width factor
    /// `f(δ) = |sin δ| + |cos δ|` times the length is evaluated from the
    /// segment components directly, which needs no trigonometry per call.
    pub fn expected_dilated_measure(&self, p: Point2, q: Point2) -> f64 {
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        if dx == 0.0 && dy == 0.0 {
            return self.width_second_moment;
        }
        let spread: f64 = self
            .trig
            .iter()
            .map(|&(s, c)| (s * dx - c * dy).abs() + (c * dx + s * dy).abs())
            .sum();
        self.width_second_moment + self.widths.mean() * spread / self.trig.len() as f64
    }
}

/// Probability that no reflector of the field meets `[b, r]` or `[r, m]`,
/// treating the two segments' blockers as independent of the reflector at `r`.
pub fn visibility_probability(r: Point2, model: &BooleanModelParams, link: &TestLink) -> f64 {
    let total =
        model.expected_dilated_measure(link.base_station(), r) + model.expected_dilated_measure(r, link.mobile());
    (-model.lambda() * total).exp()
}
