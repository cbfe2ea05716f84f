//! Intensity of visible reflectors and the resulting first-arrival
//! distributions of the path length `S` and the NLOS bias `B = S − d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocking::{visibility_probability, BooleanModelParams};
use crate::error::{Error, Result};
use crate::geometry::{boundary_prps, rotate_cw, Point2, Quadrant, TestLink};
use crate::quadrature::{integrate, neumaier_sum, Tolerance};

/// Remainder target for the truncated improper integrals.
pub const TAIL_TARGET: f64 = 1e-9;

/// Upper quantile used to size default grids and simulation windows.
pub const COVERAGE: f64 = 1.0 - 1e-4;

/// Whether reflection points are thinned by blocking or all counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    /// Independent-blocking visibility probability.
    Blocked,
    /// Every reflection point visible.
    Unblocked,
}

impl Visibility {
    fn rho(self, r: Point2, model: &BooleanModelParams, link: &TestLink) -> f64 {
        match self {
            Visibility::Blocked => visibility_probability(r, model, link),
            Visibility::Unblocked => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityTerm {
    pub orientation: f64,
    pub quadrant: Quadrant,
    /// Rotated-frame integral, in meters.
    pub integral: f64,
    /// Contribution to the mean count.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityResult {
    pub value: f64,
    pub terms: Vec<IntensityTerm>,
    pub tail_error_bound: f64,
}

/// Quadrature settings for the intensity integrals.
fn intensity_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-11,
        max_subdivisions: 4000,
    }
}

fn check_pair(s1: f64, s2: f64, link: &TestLink) -> Result<()> {
    let d = link.d();
    if s1.is_nan() || s2.is_nan() {
        return Err(Error::InvalidInterval("path lengths must not be NaN".into()));
    }
    if s1 < d {
        return Err(Error::InvalidInterval(format!(
            "lower path length {s1} is below d = {d}"
        )));
    }
    if s1 > s2 {
        return Err(Error::InvalidInterval(format!(
            "path lengths out of order: {s1} > {s2}"
        )));
    }
    if s1.is_infinite() {
        return Err(Error::InvalidInterval("lower path length must be finite".into()));
    }
    Ok(())
}

/// Rotated-frame coordinate of the quadrant-`q` boundary point at length `s`.
fn rotated_limit(q: Quadrant, s: f64, theta: f64, link: &TestLink) -> Result<f64> {
    let h = boundary_prps(s, theta, link)?;
    Ok(match q {
        Quadrant::I => rotate_cw(h[0], theta).x,
        _ => rotate_cw(h[1], theta).y,
    })
}

/// Rotated-frame coordinate at `s = d`.
fn rotated_origin(q: Quadrant, theta: f64, link: &TestLink) -> f64 {
    match q {
        Quadrant::I => 0.5 * link.d() * theta.cos(),
        _ => 0.5 * link.d() * theta.sin(),
    }
}

/// `λ̂(s1, s2)`: mean number of reflectors whose visible reflection path has
/// length in `[s1, s2]`.
pub fn intensity(s1: f64, s2: f64, model: &BooleanModelParams, link: &TestLink) -> Result<IntensityResult> {
    intensity_with(s1, s2, model, link, Visibility::Blocked)
}

/// [`intensity`] with a choice of visibility.
pub fn intensity_with(
    s1: f64,
    s2: f64,
    model: &BooleanModelParams,
    link: &TestLink,
    visibility: Visibility,
) -> Result<IntensityResult> {
    check_pair(s1, s2, link)?;
    if s2.is_infinite() && visibility == Visibility::Unblocked {
        return Err(Error::domain("the unblocked intensity diverges as s2 → ∞"));
    }
    let rate = 2.0 * model.lambda() * model.mean_width();
    let n_theta = model.orientations().len() as f64;
    let prefactor = rate / n_theta;
    let tol = intensity_tolerance();

    let mut terms = Vec::with_capacity(2 * model.orientations().len());
    let mut tail = 0.0;
    let d = link.d();
    for theta in model.orientations().support() {
        let (sn, cs) = theta.sin_cos();
        let k = d * d * (2.0 * theta).sin() / 8.0;
        for q in [Quadrant::I, Quadrant::II] {
            let lo = rotated_limit(q, s1, theta, link)?;
            let (hi, tail_q) = if s2.is_finite() {
                (rotated_limit(q, s2, theta, link)?.max(lo), 0.0)
            } else {
                let x0 = rotated_origin(q, theta, link);
                let star = x0 + (1.0 / (TAIL_TARGET * rate)).ln() / rate;
                let hi = star.max(lo);
                (hi, (-rate * (hi - x0)).exp() / rate)
            };
            tail += tail_q;
            // same point as snap_to_hyperbola followed by rotate_ccw, with the trig hoisted
            let integrand = |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                let p = match q {
                    Quadrant::I => Point2::new(x, -k / x),
                    _ => Point2::new(-k / x, x),
                };
                visibility.rho(Point2::new(cs * p.x - sn * p.y, sn * p.x + cs * p.y), model, link)
            };
            let integral = if visibility == Visibility::Unblocked {
                hi - lo
            } else {
                integrate(integrand, lo, hi, tol)?.value
            };
            terms.push(IntensityTerm {
                orientation: theta,
                quadrant: q,
                integral,
                contribution: prefactor * integral,
            });
        }
    }
    Ok(IntensityResult {
        value: neumaier_sum(terms.iter().map(|t| t.contribution)),
        terms,
        tail_error_bound: prefactor * tail,
    })
}

/// `λ̂(d, s)` at every point of an ascending grid, accumulated interval by interval.
pub fn cumulative_intensity(
    grid: &[f64],
    model: &BooleanModelParams,
    link: &TestLink,
    visibility: Visibility,
) -> Result<Vec<f64>> {
    check_grid(grid, link)?;
    let mut edges = Vec::with_capacity(grid.len() + 1);
    edges.push(link.d());
    edges.extend_from_slice(grid);
    let pieces: Vec<f64> = edges
        .par_windows(2)
        .map(|w| intensity_with(w[0], w[1], model, link, visibility).map(|r| r.value))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(pieces.len());
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in pieces {
        let t = sum + v;
        c += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
        out.push(sum + c);
    }
    Ok(out)
}

fn check_grid(grid: &[f64], link: &TestLink) -> Result<()> {
    if let Some(&first) = grid.first() {
        if !(first >= link.d()) {
            return Err(Error::domain(format!(
                "grid starts at {first}, below the link separation d = {}",
                link.d()
            )));
        }
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("grid points must be finite"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("grid must be ascending"));
    }
    Ok(())
}

/// `P[V = 0] = exp(−λ̂(d, ∞))`.
pub fn no_visible_reflection_probability(model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    Ok((-intensity(link.d(), f64::INFINITY, model, link)?.value).exp())
}

/// Derivative `dλ̂(d, s)/ds`.
pub fn intensity_rate(s: f64, model: &BooleanModelParams, link: &TestLink, visibility: Visibility) -> Result<f64> {
    let d = link.d();
    let n_theta = model.orientations().len() as f64;
    let mut terms = Vec::with_capacity(model.orientations().len());
    for theta in model.orientations().support() {
        let h = boundary_prps(s, theta, link)?;
        let (sin_t, cos_t) = theta.sin_cos();
        let r1 = visibility.rho(h[0], model, link);
        let r2 = visibility.rho(h[1], model, link);
        terms.push(r1 / (s * s - d * d * sin_t * sin_t).sqrt() + r2 / (s * s - d * d * cos_t * cos_t).sqrt());
    }
    Ok(model.lambda() * model.mean_width() * s / n_theta * neumaier_sum(terms))
}

/// Closed-form unblocked exponent `λ̂_{ρ≡1}(d, s)`.
pub fn unblocked_exponent(s: f64, model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    let d = link.d();
    if !(s >= d) {
        return Err(Error::domain(format!("path length {s} is below d = {d}")));
    }
    if s == d {
        return Ok(0.0);
    }
    let n_theta = model.orientations().len() as f64;
    let terms = model.orientations().support().map(|theta| {
        let (sin_t, cos_t) = theta.sin_cos();
        (s * s - d * d * sin_t * sin_t).sqrt() - d * (sin_t + cos_t) + (s * s - d * d * cos_t * cos_t).sqrt()
    });
    Ok(model.lambda() * model.mean_width() / n_theta * neumaier_sum(terms).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub source: String,
    pub params: serde_json::Value,
}

/// How values between grid points are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CurveKind {
    /// Linear interpolation.
    #[default]
    Continuous,
    /// Right-continuous steps at the grid points (empirical distributions).
    Step,
}

/// Tabulated distribution on an ascending grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    #[serde(default)]
    pub kind: CurveKind,
    pub meta: CurveMeta,
}

impl DistributionCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CDF at `x`, clamped to the end values.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.kind {
            CurveKind::Continuous => interpolate(&self.grid, &self.cdf, x),
            CurveKind::Step => match self.grid.partition_point(|&g| g <= x) {
                0 => 0.0,
                i => self.cdf[i - 1],
            },
        }
    }

    /// Left limit `F(x−)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self.kind {
            CurveKind::Continuous => interpolate(&self.grid, &self.cdf, x),
            CurveKind::Step => match self.grid.partition_point(|&g| g < x) {
                0 => 0.0,
                i => self.cdf[i - 1],
            },
        }
    }

    pub fn pdf_at(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.pdf, x)
    }

    /// Trapezoidal integral of the PDF over the grid.
    pub fn pdf_mass(&self) -> f64 {
        neumaier_sum(
            self.grid
                .windows(2)
                .zip(self.pdf.windows(2))
                .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])),
        )
    }

    /// Trapezoidal mean `∫ x f(x) dx`.
    pub fn mean(&self) -> f64 {
        neumaier_sum(
            self.grid
                .windows(2)
                .zip(self.pdf.windows(2))
                .map(|(x, f)| 0.5 * (x[1] - x[0]) * (x[0] * f[0] + x[1] * f[1])),
        )
    }

    /// Checks the structural invariants of a curve.
    pub fn validate(&self) -> Result<()> {
        if self.pdf.len() != self.grid.len() || self.cdf.len() != self.grid.len() {
            return Err(Error::domain("curve arrays have different lengths"));
        }
        if self.grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("curve grid is not ascending"));
        }
        if self.pdf.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("curve has a negative or NaN density"));
        }
        if self.cdf.iter().any(|c| !(0.0..=1.0).contains(c)) || self.cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("curve CDF is not a nondecreasing probability"));
        }
        Ok(())
    }

    /// Largest grid coverage check: last CDF value must reach `level`.
    pub fn require_coverage(&self, level: f64) -> Result<()> {
        match self.cdf.last() {
            Some(&c) if c >= level => Ok(()),
            Some(&c) => Err(Error::InsufficientCoverage(format!(
                "grid ends at CDF {c}, needs at least {level}"
            ))),
            None => Err(Error::InsufficientCoverage("empty curve".into())),
        }
    }
}

pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&g| g <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    if x1 == x0 {
        return ys[i];
    }
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

fn params_json(model: &BooleanModelParams, link: &TestLink) -> serde_json::Value {
    serde_json::json!({
        "d_m": link.d(),
        "lambda_per_km2": model.lambda_per_km2(),
        "widths_m": [model.widths().lo(), model.widths().hi(), model.widths().len()],
        "orientations_deg": [
            model.orientations().lo().to_degrees(),
            model.orientations().hi().to_degrees(),
            model.orientations().len()
        ],
    })
}

/// Path-length distribution of the first visible reflection, conditioned on
/// at least one reflection being visible.
pub fn toa_with_blocking(model: &BooleanModelParams, link: &TestLink, grid: &[f64]) -> Result<DistributionCurve> {
    check_grid(grid, link)?;
    let total = intensity(link.d(), f64::INFINITY, model, link)?.value;
    let norm = -(-total).exp_m1();
    let cum = cumulative_intensity(grid, model, link, Visibility::Blocked)?;
    let pdf = grid
        .par_iter()
        .zip(cum.par_iter())
        .map(|(&s, &l)| Ok(intensity_rate(s, model, link, Visibility::Blocked)? * (-l).exp() / norm))
        .collect::<Result<Vec<_>>>()?;
    let cdf = cum.iter().map(|&l| (-(-l).exp_m1() / norm).clamp(0.0, 1.0)).collect();
    let mut params = params_json(model, link);
    params["lambda_hat_inf"] = total.into();
    Ok(DistributionCurve {
        grid: grid.to_vec(),
        pdf,
        cdf,
        kind: CurveKind::Continuous,
        meta: CurveMeta {
            source: "toa_with_blocking".into(),
            params,
        },
    })
}

/// Path-length distribution of the first reflection when nothing blocks.
pub fn toa_without_blocking(link: &TestLink, model: &BooleanModelParams, grid: &[f64]) -> Result<DistributionCurve> {
    check_grid(grid, link)?;
    let mut pdf = Vec::with_capacity(grid.len());
    let mut cdf = Vec::with_capacity(grid.len());
    for &s in grid {
        let g = unblocked_exponent(s, model, link)?;
        pdf.push(intensity_rate(s, model, link, Visibility::Unblocked)? * (-g).exp());
        cdf.push(-(-g).exp_m1());
    }
    Ok(DistributionCurve {
        grid: grid.to_vec(),
        pdf,
        cdf,
        kind: CurveKind::Continuous,
        meta: CurveMeta {
            source: "toa_without_blocking".into(),
            params: params_json(model, link),
        },
    })
}

/// Shifts a path-length curve by `−d` to obtain the bias distribution.
pub fn bias_from_toa(curve: &DistributionCurve, link: &TestLink) -> DistributionCurve {
    let mut out = curve.clone();
    for x in &mut out.grid {
        *x = (*x - link.d()).max(0.0);
    }
    out.meta.source = format!("bias_from_{}", curve.meta.source);
    out
}

/// Whether the TOA distribution accounts for blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToaModel {
    WithBlocking,
    WithoutBlocking,
}

/// Analytic path-length CDF at a single point.
pub fn toa_cdf(s: f64, kind: ToaModel, model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    let total = match kind {
        ToaModel::WithBlocking => intensity(link.d(), f64::INFINITY, model, link)?.value,
        ToaModel::WithoutBlocking => f64::INFINITY,
    };
    cdf_given_total(s, kind, total, model, link)
}

fn cdf_given_total(s: f64, kind: ToaModel, total: f64, model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    match kind {
        ToaModel::WithoutBlocking => Ok(-(-unblocked_exponent(s, model, link)?).exp_m1()),
        ToaModel::WithBlocking => {
            let part = intensity(link.d(), s, model, link)?.value;
            Ok((-(-part).exp_m1() / -(-total).exp_m1()).clamp(0.0, 1.0))
        }
    }
}

/// Smallest `s` with `CDF(s) ≥ level`, by bracketing and bisection.
pub fn toa_quantile(level: f64, kind: ToaModel, model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0, 1), got {level}")));
    }
    let total = match kind {
        ToaModel::WithBlocking => intensity(link.d(), f64::INFINITY, model, link)?.value,
        ToaModel::WithoutBlocking => f64::INFINITY,
    };
    let cdf = |s: f64| cdf_given_total(s, kind, total, model, link);
    let d = link.d();
    let scale = 1.0 / (2.0 * model.lambda() * model.mean_width());
    let mut lo = d;
    let mut hi = d + scale;
    let mut iterations = 0;
    while cdf(hi)? < level {
        lo = hi;
        hi = d + 2.0 * (hi - d);
        iterations += 1;
        if iterations > 200 {
            return Err(Error::domain("quantile bracket did not close"));
        }
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Grid from `d` to `upper`: half geometric in the offset from `d`, half uniform.
pub fn default_grid(link: &TestLink, upper: f64, points: usize) -> Result<Vec<f64>> {
    let d = link.d();
    if !(upper > d && upper.is_finite()) {
        return Err(Error::domain(format!("grid upper end {upper} must exceed d = {d}")));
    }
    if points < 4 {
        return Err(Error::domain(format!("grid needs at least 4 points, got {points}")));
    }
    let span = upper - d;
    let n_geo = points / 2;
    let n_uni = points - n_geo;
    let min_offset = span * 1e-6;
    let mut grid: Vec<f64> = Vec::with_capacity(points + 1);
    grid.push(d);
    for i in 0..n_geo {
        let t = i as f64 / (n_geo - 1) as f64;
        grid.push(d + min_offset * (span / min_offset).powf(t));
    }
    for i in 1..n_uni {
        grid.push(d + span * i as f64 / (n_uni - 1) as f64);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * upper);
    if let Some(last) = grid.last_mut() {
        *last = upper;
    }
    Ok(grid)
}

/// Default grid reaching the `COVERAGE` quantile of the chosen distribution.
pub fn default_toa_grid(
    kind: ToaModel,
    model: &BooleanModelParams,
    link: &TestLink,
    points: usize,
) -> Result<Vec<f64>> {
    let upper = toa_quantile(COVERAGE, kind, model, link)?;
    default_grid(link, upper, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(lambda_km2: f64) -> (BooleanModelParams, TestLink) {
        (
            BooleanModelParams::from_degrees(lambda_km2, (10.0, 40.0, 4), (10.0, 80.0, 8)).unwrap(),
            TestLink::new(350.0).unwrap(),
        )
    }

    #[test]
    fn empty_interval_has_zero_intensity() {
        let (m, l) = setup(60.0);
        assert_eq!(intensity(500.0, 500.0, &m, &l).unwrap().value, 0.0);
    }

    #[test]
    fn unblocked_intensity_matches_closed_form() {
        let (m, l) = setup(60.0);
        for s in [350.0, 351.0, 420.0, 1500.0] {
            let numeric = intensity_with(l.d(), s, &m, &l, Visibility::Unblocked).unwrap().value;
            let closed = unblocked_exponent(s, &m, &l).unwrap();
            assert!(
                (numeric - closed).abs() <= 1e-8 * closed.max(1e-300) + 1e-14,
                "{s}: {numeric} vs {closed}"
            );
        }
    }

    #[test]
    fn total_intensity_is_below_two() {
        for lam in [1.0, 20.0, 60.0, 100.0, 1000.0] {
            let (m, l) = setup(lam);
            let r = intensity(l.d(), f64::INFINITY, &m, &l).unwrap();
            assert!(r.value > 0.0 && r.value < 2.0, "{lam}: {}", r.value);
            assert!(r.tail_error_bound < 1e-8);
            let cap = 1.0 / (2.0 * m.lambda() * m.mean_width());
            assert!(r.terms.iter().all(|t| t.integral < cap));
        }
    }

    #[test]
    fn intensity_is_additive() {
        let (m, l) = setup(60.0);
        let a = intensity(400.0, 700.0, &m, &l).unwrap().value;
        let b = intensity(700.0, f64::INFINITY, &m, &l).unwrap().value;
        let c = intensity(400.0, f64::INFINITY, &m, &l).unwrap().value;
        assert!((a + b - c).abs() < 1e-8);
    }

    #[test]
    fn rejects_reversed_or_short_intervals() {
        let (m, l) = setup(60.0);
        assert!(matches!(
            intensity(500.0, 400.0, &m, &l),
            Err(Error::InvalidInterval(_))
        ));
        assert!(matches!(
            intensity(300.0, 400.0, &m, &l),
            Err(Error::InvalidInterval(_))
        ));
    }

    #[test]
    fn blocked_pdf_matches_cdf_difference() {
        let (m, l) = setup(60.0);
        let grid: Vec<f64> = (0..30).map(|i| 360.0 + 25.0 * i as f64).collect();
        let curve = toa_with_blocking(&m, &l, &grid).unwrap();
        for (i, &s) in grid.iter().enumerate().skip(1) {
            let h = 1e-3 * s;
            let fd = (toa_cdf(s + h, ToaModel::WithBlocking, &m, &l).unwrap()
                - toa_cdf(s - h, ToaModel::WithBlocking, &m, &l).unwrap())
                / (2.0 * h);
            assert_relative_eq!(curve.pdf[i], fd, max_relative = 1e-4);
        }
    }

    #[test]
    fn curves_start_at_zero_and_integrate_to_one() {
        let (m, l) = setup(20.0);
        for kind in [ToaModel::WithBlocking, ToaModel::WithoutBlocking] {
            let grid = default_toa_grid(kind, &m, &l, 400).unwrap();
            let curve = match kind {
                ToaModel::WithBlocking => toa_with_blocking(&m, &l, &grid).unwrap(),
                ToaModel::WithoutBlocking => toa_without_blocking(&l, &m, &grid).unwrap(),
            };
            curve.validate().unwrap();
            assert_eq!(curve.cdf[0], 0.0);
            curve.require_coverage(COVERAGE - 1e-9).unwrap();
            assert!((curve.pdf_mass() - 1.0).abs() < 1e-3, "{kind:?}: {}", curve.pdf_mass());
        }
    }

    #[test]
    fn bias_is_a_shift() {
        let (m, l) = setup(60.0);
        let grid = default_toa_grid(ToaModel::WithoutBlocking, &m, &l, 200).unwrap();
        let toa = toa_without_blocking(&l, &m, &grid).unwrap();
        let bias = bias_from_toa(&toa, &l);
        assert_eq!(bias.grid[0], 0.0);
        assert_eq!(bias.cdf_at(100.0), toa.cdf_at(450.0));
        assert_relative_eq!(bias.mean(), toa.mean() - 350.0 * toa.pdf_mass(), max_relative = 1e-9);
    }

    #[test]
    fn grid_below_d_is_rejected() {
        let (m, l) = setup(60.0);
        assert!(toa_with_blocking(&m, &l, &[300.0, 400.0]).is_err());
        assert!(toa_without_blocking(&l, &m, &[349.0]).is_err());
    }
}
