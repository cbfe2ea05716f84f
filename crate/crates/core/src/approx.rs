//! Closed-form surrogates for the bias distribution and their
//! Kullback–Leibler scores.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::analytic::{bias_from_toa, default_grid, toa_quantile, toa_with_blocking, DistributionCurve, ToaModel};
use crate::blocking::BooleanModelParams;
use crate::error::{Error, Result};
use crate::geometry::TestLink;
use crate::quadrature::{gauss_legendre8_points, integrate, neumaier_sum, Tolerance};

/// Rate `2λE[W]` of the exponential bias surrogate, per meter.
pub fn exponential_bias_rate(model: &BooleanModelParams) -> f64 {
    2.0 * model.lambda() * model.mean_width()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasMoments {
    pub m1: f64,
    pub m2: f64,
    /// Upper bounds on the error of `m1` and `m2` from mass beyond the grid.
    pub truncation: (f64, f64),
}

impl BiasMoments {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 0.0 && m1.is_finite()) {
            return Err(Error::domain(format!("first moment must be > 0, got {m1}")));
        }
        if !(m2 - m1 * m1 > 0.0) {
            return Err(Error::NonPositiveVariance(m2 - m1 * m1));
        }
        Ok(BiasMoments {
            m1,
            m2,
            truncation: (0.0, 0.0),
        })
    }

    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

/// First two moments of a bias curve by trapezoidal quadrature.
pub fn bias_moments(curve: &DistributionCurve) -> Result<BiasMoments> {
    curve.require_coverage(1.0 - 1e-6)?;
    let pieces = curve.grid.windows(2).zip(curve.pdf.windows(2));
    let m1 = neumaier_sum(
        pieces
            .clone()
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (x[0] * f[0] + x[1] * f[1])),
    );
    let m2 = neumaier_sum(pieces.map(|(x, f)| 0.5 * (x[1] - x[0]) * (x[0] * x[0] * f[0] + x[1] * x[1] * f[1])));
    let tail = 1.0 - curve.cdf.last().copied().unwrap_or(0.0);
    let end = curve.grid.last().copied().unwrap_or(0.0);
    let mut out = BiasMoments::new(m1, m2)?;
    out.truncation = (tail * end, tail * end * end);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Exponential,
    Gamma,
    HalfNormal,
    Rayleigh,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Gamma, Family::Exponential, Family::HalfNormal, Family::Rayleigh];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::HalfNormal => "half_normal",
            Family::Rayleigh => "rayleigh",
        }
    }
}

/// Which moment a one-parameter family is matched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matching {
    FirstMoment,
    SecondMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedFamily {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    HalfNormal { sigma: f64 },
    Rayleigh { sigma: f64 },
}

impl FittedFamily {
    pub fn family(&self) -> Family {
        match self {
            FittedFamily::Exponential { .. } => Family::Exponential,
            FittedFamily::Gamma { .. } => Family::Gamma,
            FittedFamily::HalfNormal { .. } => Family::HalfNormal,
            FittedFamily::Rayleigh { .. } => Family::Rayleigh,
        }
    }

    /// Log-density on `(0, ∞)`; `−∞` for negative arguments.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            FittedFamily::Exponential { rate } => rate.ln() - rate * x,
            FittedFamily::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            FittedFamily::HalfNormal { sigma } => 0.5 * (2.0 / PI).ln() - sigma.ln() - x * x / (2.0 * sigma * sigma),
            FittedFamily::Rayleigh { sigma } => x.ln() - 2.0 * sigma.ln() - x * x / (2.0 * sigma * sigma),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FittedFamily::Exponential { rate } => 1.0 / rate,
            FittedFamily::Gamma { shape, rate } => shape / rate,
            FittedFamily::HalfNormal { sigma } => sigma * FRAC_2_PI.sqrt(),
            FittedFamily::Rayleigh { sigma } => sigma * FRAC_PI_2.sqrt(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            FittedFamily::Exponential { rate } => 2.0 / (rate * rate),
            FittedFamily::Gamma { shape, rate } => shape * (shape + 1.0) / (rate * rate),
            FittedFamily::HalfNormal { sigma } => sigma * sigma,
            FittedFamily::Rayleigh { sigma } => 2.0 * sigma * sigma,
        }
    }

    /// Closed-form CDF where one exists without special functions.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        let x = x.max(0.0);
        match *self {
            FittedFamily::Exponential { rate } => Some(-(-rate * x).exp_m1()),
            FittedFamily::Rayleigh { sigma } => Some(-(-x * x / (2.0 * sigma * sigma)).exp_m1()),
            FittedFamily::Gamma { shape: 1.0, rate } => Some(-(-rate * x).exp_m1()),
            _ => None,
        }
    }
}

/// Moment-matched fit; one-parameter families use the first moment.
pub fn fit_family(family: Family, moments: &BiasMoments) -> Result<FittedFamily> {
    fit_family_with(family, moments, Matching::FirstMoment)
}

pub fn fit_family_with(family: Family, moments: &BiasMoments, matching: Matching) -> Result<FittedFamily> {
    let m1 = moments.m1;
    let m2 = moments.m2;
    let var = m2 - m1 * m1;
    if !(var > 0.0) {
        return Err(Error::NonPositiveVariance(var));
    }
    Ok(match (family, matching) {
        (Family::Gamma, _) => FittedFamily::Gamma {
            shape: m1 * m1 / var,
            rate: m1 / var,
        },
        (Family::Exponential, Matching::FirstMoment) => FittedFamily::Exponential { rate: 1.0 / m1 },
        (Family::Exponential, Matching::SecondMoment) => FittedFamily::Exponential {
            rate: (2.0 / m2).sqrt(),
        },
        (Family::HalfNormal, Matching::FirstMoment) => FittedFamily::HalfNormal {
            sigma: m1 * FRAC_PI_2.sqrt(),
        },
        (Family::HalfNormal, Matching::SecondMoment) => FittedFamily::HalfNormal { sigma: m2.sqrt() },
        (Family::Rayleigh, Matching::FirstMoment) => FittedFamily::Rayleigh {
            sigma: m1 * FRAC_2_PI.sqrt(),
        },
        (Family::Rayleigh, Matching::SecondMoment) => FittedFamily::Rayleigh {
            sigma: (m2 / 2.0).sqrt(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlResult {
    /// `∫ f_X ln(f_X / f_B)` in nats.
    pub value: f64,
    /// Candidate mass not covered by the bias grid.
    pub truncation_estimate: f64,
    /// Quadrature nodes skipped because the bias density fell below the floor.
    pub floor_hits: usize,
}

const DENSITY_FLOOR: f64 = 1e-300;

/// `D(X ‖ B)` between a fitted candidate `X` and a tabulated bias density.
///
/// Integrates interval by interval over the bias grid, reading the tabulated
/// density log-linearly between grid points. The first interval is mapped by `x = x1·u^k`
/// so that gamma shapes below one stay integrable.
pub fn kl_divergence(candidate: &FittedFamily, bias: &DistributionCurve) -> Result<KlResult> {
    if bias.len() < 2 {
        return Err(Error::InsufficientCoverage(
            "bias curve needs at least two points".into(),
        ));
    }
    if bias.grid[0] != 0.0 {
        return Err(Error::domain(format!(
            "bias curve must start at 0, starts at {}",
            bias.grid[0]
        )));
    }
    let mut floor_hits = 0usize;
    let mut mass_terms = Vec::with_capacity(bias.len());
    let mut kl_terms = Vec::with_capacity(bias.len());

    for (i, (x, f)) in bias.grid.windows(2).zip(bias.pdf.windows(2)).enumerate() {
        let (a, b) = (x[0], x[1]);
        if b <= a {
            continue;
        }
        // first interval: t = b·u^k, u ∈ [0, 1]
        let k = match candidate {
            FittedFamily::Gamma { shape, .. } if i == 0 && *shape < 1.0 => 2.0 / shape,
            _ => 1.0,
        };
        let panels = if i == 0 { 16 } else { 1 };
        let (lo, hi) = if i == 0 { (0.0, 1.0) } else { (a, b) };
        let width = (hi - lo) / panels as f64;
        let (mut kl, mut mass) = (0.0, 0.0);
        for p in 0..panels {
            let p_lo = lo + p as f64 * width;
            for (u, w) in gauss_legendre8_points(p_lo, p_lo + width) {
                let (t, jac) = if i == 0 {
                    (b * u.powf(k), b * k * u.powf(k - 1.0))
                } else {
                    (u, 1.0)
                };
                let lx = candidate.ln_pdf(t);
                let px = lx.exp();
                if px == 0.0 {
                    continue;
                }
                mass += w * jac * px;
                let pb = interpolate_density(f[0], f[1], (t - a) / (b - a));
                if pb > DENSITY_FLOOR {
                    kl += w * jac * px * (lx - pb.ln());
                } else {
                    floor_hits += 1;
                }
            }
        }
        kl_terms.push(kl);
        mass_terms.push(mass);
    }
    let mass = neumaier_sum(mass_terms);
    Ok(KlResult {
        value: neumaier_sum(kl_terms),
        truncation_estimate: (1.0 - mass).abs(),
        floor_hits,
    })
}

/// CDF level the bias grid of a fit must reach.
pub const FIT_COVERAGE: f64 = 1.0 - 1e-8;

/// How the exponential surrogate gets its rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Every family matched on the bias moments.
    #[default]
    Moments,
    /// Exponential rate fixed at `2λE[W]`; the other families still moment-matched.
    AnalyticExp,
}

impl std::str::FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moments" => Ok(FitMethod::Moments),
            "analytic-exp" => Ok(FitMethod::AnalyticExp),
            other => Err(Error::config(
                "fit.method",
                format!("unknown method `{other}` (moments | analytic-exp)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub fitted: FittedFamily,
    pub kl: KlResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: FitMethod,
    pub moments: BiasMoments,
    /// In the order of [`Family::ALL`].
    pub entries: Vec<FitEntry>,
    pub best: Family,
}

impl FitReport {
    pub fn kl(&self, family: Family) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.fitted.family() == family)
            .map(|e| e.kl.value)
    }
}

/// Bias curve with blocking on a grid reaching [`FIT_COVERAGE`].
pub fn bias_for_fit(model: &BooleanModelParams, link: &TestLink, points: usize) -> Result<DistributionCurve> {
    let upper = toa_quantile(FIT_COVERAGE, ToaModel::WithBlocking, model, link)?;
    let grid = default_grid(link, upper, points)?;
    Ok(bias_from_toa(&toa_with_blocking(model, link, &grid)?, link))
}

/// Fits all four families to `bias` and scores each by `D(X ‖ B)`.
pub fn fit_all(bias: &DistributionCurve, model: &BooleanModelParams, method: FitMethod) -> Result<FitReport> {
    let moments = bias_moments(bias)?;
    let entries = Family::ALL
        .iter()
        .map(|&f| {
            let fitted = match (f, method) {
                (Family::Exponential, FitMethod::AnalyticExp) => FittedFamily::Exponential {
                    rate: exponential_bias_rate(model),
                },
                _ => fit_family(f, &moments)?,
            };
            Ok(FitEntry {
                fitted,
                kl: kl_divergence(&fitted, bias)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = entries
        .iter()
        .min_by(|a, b| a.kl.value.total_cmp(&b.kl.value))
        .map(|e| e.fitted.family())
        .unwrap_or(Family::Gamma);
    Ok(FitReport {
        method,
        moments,
        entries,
        best,
    })
}

/// Log-linear between positive values, linear otherwise.
fn interpolate_density(f0: f64, f1: f64, t: f64) -> f64 {
    if f0 > 0.0 && f1 > 0.0 {
        f0 * (f1 / f0).powf(t)
    } else {
        f0 + (f1 - f0) * t
    }
}

/// Exact first two moments of a fitted family by quadrature, used to check fits.
pub fn numeric_moments(candidate: &FittedFamily, upper: f64) -> Result<(f64, f64)> {
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-12,
        max_subdivisions: 2000,
    };
    let m1 = integrate(|x| x * candidate.pdf(x), 0.0, upper, tol)?.value;
    let m2 = integrate(|x| x * x * candidate.pdf(x), 0.0, upper, tol)?.value;
    Ok((m1, m2))
}

/// `ln Γ(x)` for `x > 0` by the Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{CurveKind, CurveMeta};
    use approx::assert_relative_eq;

    fn exp_curve(rate: f64, n: usize) -> DistributionCurve {
        let upper = -(1e-9f64).ln() / rate;
        let grid: Vec<f64> = (0..n).map(|i| upper * i as f64 / (n - 1) as f64).collect();
        DistributionCurve {
            pdf: grid.iter().map(|x| rate * (-rate * x).exp()).collect(),
            cdf: grid.iter().map(|x| -(-rate * x).exp_m1()).collect(),
            grid,
            kind: CurveKind::Continuous,
            meta: CurveMeta {
                source: "test".into(),
                params: serde_json::Value::Null,
            },
        }
    }

    #[test]
    fn rate_is_linear_in_density() {
        let m = BooleanModelParams::from_degrees(30.0, (10.0, 40.0, 4), (10.0, 80.0, 8)).unwrap();
        assert_relative_eq!(exponential_bias_rate(&m), 1.5e-3, max_relative = 1e-12);
        let m2 = m.with_lambda(2.0 * m.lambda()).unwrap();
        assert_relative_eq!(exponential_bias_rate(&m2), 3e-3, max_relative = 1e-12);
    }

    #[test]
    fn moments_of_an_exponential_curve() {
        let rate = 2e-3;
        let mom = bias_moments(&exp_curve(rate, 20001)).unwrap();
        assert_relative_eq!(mom.m1, 1.0 / rate, max_relative = 1e-4);
        assert!(mom.m2 > mom.m1 * mom.m1);
    }

    #[test]
    fn gamma_fit_of_exponential_moments_is_exponential() {
        let mom = BiasMoments::new(500.0, 2.0 * 500.0 * 500.0).unwrap();
        match fit_family(Family::Gamma, &mom).unwrap() {
            FittedFamily::Gamma { shape, rate } => {
                assert_relative_eq!(shape, 1.0, max_relative = 1e-14);
                assert_relative_eq!(rate, 1.0 / 500.0, max_relative = 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fits_reproduce_matched_moments() {
        let mom = BiasMoments::new(250.0, 150_000.0).unwrap();
        for fam in Family::ALL {
            let fit = fit_family(fam, &mom).unwrap();
            assert_relative_eq!(fit.mean(), 250.0, max_relative = 1e-14);
            let (m1, _) = numeric_moments(&fit, 60.0 * 250.0).unwrap();
            assert_relative_eq!(m1, 250.0, max_relative = 1e-8);
        }
        let g = fit_family(Family::Gamma, &mom).unwrap();
        assert_relative_eq!(g.second_moment(), 150_000.0, max_relative = 1e-14);
    }

    #[test]
    fn variance_must_be_positive() {
        assert!(matches!(BiasMoments::new(2.0, 4.0), Err(Error::NonPositiveVariance(_))));
    }

    #[test]
    fn kl_of_own_family_vanishes() {
        let rate = 1e-3;
        let curve = exp_curve(rate, 4001);
        let r = kl_divergence(&FittedFamily::Exponential { rate }, &curve).unwrap();
        assert!(r.value.abs() < 1e-6, "{r:?}");
        assert!(r.truncation_estimate < 1e-8);
        let other = kl_divergence(&FittedFamily::Rayleigh { sigma: 800.0 }, &curve).unwrap();
        assert!(other.value > 0.1);
    }

    #[test]
    fn ln_gamma_reference_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(10.0), 362_880f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(1.5), (PI.sqrt() / 2.0).ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(0.25), 3.625_609_908_221_908f64.ln(), max_relative = 1e-13);
    }
}
