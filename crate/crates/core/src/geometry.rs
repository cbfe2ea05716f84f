//! Planar geometry of the test link.
//!
//! The base station sits at `b = [-d/2, 0]` and the mobile at `m = [d/2, 0]`.
//! A square reflector of orientation `θ ∈ (0, π/2)` can establish a
//! single-bounce specular reflection at `r` only if `r` lies on the
//! reflection hyperbola `H_θ`; this module holds that hyperbola, the
//! s-ellipses of constant path length, their four intersection points, the
//! rotated-frame parametrisation used by the intensity integrals, the area of
//! a segment dilated by a square, and the s-meter AOA functions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for length-like predicates (multiplied by `d`).
pub const LENGTH_TOL: f64 = 1e-9;

/// Slack applied at the closed endpoints of the inverse AOA domains.
const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Unit vector at angle `phi` (counter-clockwise from +x).
    pub fn unit(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Point2 { x: c, y: s }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.x, self.y)
    }
}

/// `R_θ p`: rotates `p` clockwise by `theta`.
pub fn rotate_cw(p: Point2, theta: f64) -> Point2 {
    let (s, c) = theta.sin_cos();
    Point2::new(c * p.x + s * p.y, -s * p.x + c * p.y)
}

/// `R_θ⁻¹ p`: rotates `p` counter-clockwise by `theta`.
pub fn rotate_ccw(p: Point2, theta: f64) -> Point2 {
    let (s, c) = theta.sin_cos();
    Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Base station / mobile pair separated by `d` meters along the x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestLink {
    d: f64,
}

impl TestLink {
    pub fn new(d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::domain(format!(
                "link separation must be finite and > 0, got {d}"
            )));
        }
        Ok(TestLink { d })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn base_station(&self) -> Point2 {
        Point2::new(-self.d / 2.0, 0.0)
    }

    pub fn mobile(&self) -> Point2 {
        Point2::new(self.d / 2.0, 0.0)
    }

    /// Total length of the path `b → r → m`.
    pub fn path_length(&self, r: Point2) -> f64 {
        r.distance(self.base_station()) + r.distance(self.mobile())
    }

    /// Angle of arrival at the mobile of a path reflected at `r`, in `[0, 2π)`.
    pub fn arrival_angle(&self, r: Point2) -> f64 {
        let v = r - self.mobile();
        let a = v.y.atan2(v.x);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV];

    /// Quadrant containing `p`; points on an axis go to the lower-numbered side.
    pub fn of_point(p: Point2) -> Quadrant {
        match (p.x >= 0.0, p.y >= 0.0) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Quadrant reached by the point reflection `p ↦ -p`.
    pub fn opposite(self) -> Quadrant {
        match self {
            Quadrant::I => Quadrant::III,
            Quadrant::II => Quadrant::IV,
            Quadrant::III => Quadrant::I,
            Quadrant::IV => Quadrant::II,
        }
    }

    /// Angle offset of the internal vector `k_q` relative to the orientation.
    ///
    /// `k_III` points along the orientation itself; a reflection in quadrant
    /// `q` happens on the edge whose outward normal is `k_q`.
    pub fn normal_offset(self) -> f64 {
        match self {
            Quadrant::I => PI,
            Quadrant::II => 3.0 * FRAC_PI_2,
            Quadrant::III => 0.0,
            Quadrant::IV => FRAC_PI_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Quadrant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" => Ok(Quadrant::I),
            "II" => Ok(Quadrant::II),
            "III" => Ok(Quadrant::III),
            "IV" => Ok(Quadrant::IV),
            other => Err(Error::Parse(format!("unknown quadrant `{other}`"))),
        }
    }
}

/// Square obstacle of edge `width`, `orientation` in `(0, π/2)` and `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflector {
    pub width: f64,
    pub orientation: f64,
    pub center: Point2,
}

impl Reflector {
    pub fn new(width: f64, orientation: f64, center: Point2) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::domain(format!("reflector width must be > 0, got {width}")));
        }
        check_orientation(orientation)?;
        if !center.is_finite() {
            return Err(Error::domain("reflector center must be finite"));
        }
        Ok(Reflector {
            width,
            orientation,
            center,
        })
    }

    /// Internal vector `k_q`: from the center to the midpoint of edge `q`.
    pub fn internal_vector(&self, q: Quadrant) -> Point2 {
        Point2::unit(self.orientation + q.normal_offset()) * (self.width / 2.0)
    }

    /// Midpoint of the edge whose outward normal is `k_q`.
    pub fn edge_center(&self, q: Quadrant) -> Point2 {
        self.center + self.internal_vector(q)
    }

    pub fn corners(&self) -> [Point2; 4] {
        let h = self.width / 2.0;
        let u = Point2::unit(self.orientation) * h;
        let v = Point2::unit(self.orientation + FRAC_PI_2) * h;
        let c = self.center;
        [c + u + v, c - u + v, c - u - v, c + u - v]
    }

    /// Half of the diagonal: no point of the square is farther from the center.
    pub fn circumradius(&self) -> f64 {
        self.width * SQRT_2 / 2.0
    }
}

pub(crate) fn check_orientation(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "orientation must lie in the open interval (0, π/2), got {theta}"
        )));
    }
    Ok(())
}

/// Which member of the s-meter AOA family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AoaFunctionMode {
    Value,
    Derivative,
    Inverse,
    InverseDerivative,
}

/// Residual of the reflection hyperbola, scaled by `sin 2θ`.
///
/// `sin(2θ)·(y² − x² + d²/4) + 2cos(2θ)·x·y`; zero exactly on `H_θ`.
pub fn hyperbola_residual(p: Point2, theta: f64, link: &TestLink) -> f64 {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let d = link.d();
    s2 * (p.y * p.y - p.x * p.x + d * d / 4.0) + 2.0 * c2 * p.x * p.y
}

/// The four points where `H_θ` meets the boundary of the s-ellipse.
///
/// Returned in quadrant order `[h_I, h_II, h_III, h_IV]`; `h_III = -h_I` and
/// `h_IV = -h_II`. At `s = d` they collapse onto the mobile and base station.
pub fn boundary_prps(s: f64, theta: f64, link: &TestLink) -> Result<[Point2; 4]> {
    check_orientation(theta)?;
    let d = link.d();
    if !(s.is_finite() && s >= d) {
        return Err(Error::domain(format!(
            "path length must satisfy d <= s < inf, got s={s}, d={d}"
        )));
    }
    if s == d {
        let (b, m) = (link.base_station(), link.mobile());
        return Ok([m, b, b, m]);
    }
    let (sin_t, cos_t) = theta.sin_cos();
    let s2 = s * s;
    let s4 = s2 * s2;
    let u2 = s2 / 4.0;
    let v_over_u = ((s2 - d * d) / s2).sqrt();

    let cot = cos_t / sin_t;
    let tan = sin_t / cos_t;
    let z13 = s4 * cot * cot / (4.0 * (s2 / (sin_t * sin_t) - d * d));
    let z24 = s4 * tan * tan / (4.0 * (s2 / (cos_t * cos_t) - d * d));

    let h1 = Point2::new(z13.sqrt(), v_over_u * (u2 - z13).max(0.0).sqrt());
    let h2 = Point2::new(-z24.sqrt(), v_over_u * (u2 - z24).max(0.0).sqrt());
    Ok([h1, h2, -h1, -h2])
}

/// Semi-axes `(u, v)` of the s-ellipse.
pub fn s_ellipse_axes(s: f64, link: &TestLink) -> Result<(f64, f64)> {
    let d = link.d();
    if !(s >= d) || s.is_nan() {
        return Err(Error::domain(format!("s-ellipse needs s >= d, got s={s}, d={d}")));
    }
    Ok((s / 2.0, ((s * s - d * d).max(0.0)).sqrt() / 2.0))
}

/// Whether `p` lies in the closed s-ellipse (all paths through `p` have length ≤ s).
pub fn s_ellipse_contains(p: Point2, s: f64, link: &TestLink) -> Result<bool> {
    let (u, v) = s_ellipse_axes(s, link)?;
    let d = link.d();
    if s.is_infinite() {
        return Ok(p.is_finite());
    }
    if s == d {
        // degenerate ellipse: the segment [b, m]
        return Ok(p.y.abs() <= LENGTH_TOL * d && p.x.abs() <= d / 2.0 + LENGTH_TOL * d);
    }
    let q = (p.x / u).powi(2) + (p.y / v).powi(2);
    Ok(q <= 1.0 + LENGTH_TOL)
}

/// Rotated-frame point of `H_θ` with the given free coordinate.
///
/// Quadrant I uses the rotated x coordinate (`g*_I(x) = [x, −d² sin2θ / 8x]`),
/// quadrant II the rotated y coordinate (`g*_II(y) = [−d² sin2θ / 8y, y]`).
/// Rotate the result back with [`rotate_ccw`].
pub fn snap_to_hyperbola(q: Quadrant, coord: f64, theta: f64, link: &TestLink) -> Result<Point2> {
    check_orientation(theta)?;
    let d = link.d();
    let k = d * d * (2.0 * theta).sin() / 8.0;
    let (lower, which) = match q {
        Quadrant::I => (0.5 * d * theta.cos(), "rotated x"),
        Quadrant::II => (0.5 * d * theta.sin(), "rotated y"),
        _ => {
            return Err(Error::domain(format!(
                "snapping functions exist for quadrants I and II only, got {q}"
            )))
        }
    };
    if coord == 0.0 || !coord.is_finite() {
        return Err(Error::domain(format!("{which} coordinate must be finite and non-zero")));
    }
    if coord < lower * (1.0 - LENGTH_TOL) {
        return Err(Error::domain(format!(
            "{which} coordinate {coord} lies below the quadrant-{q} lower limit {lower}"
        )));
    }
    Ok(match q {
        Quadrant::I => Point2::new(coord, -k / coord),
        _ => Point2::new(-k / coord, coord),
    })
}

/// Slope angle of the segment `[p, q]` as a principal arctangent in
/// `(−π/2, π/2]`, or `None` for a degenerate segment.
pub fn segment_slope_angle(p: Point2, q: Point2) -> Option<f64> {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    if dx == 0.0 && dy == 0.0 {
        None
    } else if dx == 0.0 {
        Some(FRAC_PI_2)
    } else {
        Some((dy / dx).atan())
    }
}

/// Width factor of the two-branch dilated-segment formula, `δ = θ − η`.
pub(crate) fn dilation_factor(delta: f64) -> f64 {
    if (0.0..=FRAC_PI_2).contains(&delta) {
        SQRT_2 * (FRAC_PI_4 + delta).sin()
    } else {
        SQRT_2 * (delta - FRAC_PI_4).sin().abs()
    }
}

/// Area of `L_[p,q] ⊕ R_{w,θ,0}`: a segment swept by a square of edge `w`.
pub fn dilated_segment_measure(p: Point2, q: Point2, w: f64, theta: f64) -> f64 {
    match segment_slope_angle(p, q) {
        None => w * w,
        Some(eta) => w * p.distance(q) * dilation_factor(theta - eta) + w * w,
    }
}

/// Evaluates the s-meter AOA function of quadrant `q` in the requested mode.
///
/// `Value`/`Derivative` take a path length `s ∈ [d, ∞)` and return an angle
/// (or its rate); `Inverse`/`InverseDerivative` take an angle in the
/// quadrant's range and return a path length (or its rate).
pub fn aoa_function(q: Quadrant, mode: AoaFunctionMode, arg: f64, theta: f64, link: &TestLink) -> Result<f64> {
    check_orientation(theta)?;
    let d = link.d();
    let (sin_t, cos_t) = theta.sin_cos();
    match mode {
        AoaFunctionMode::Value | AoaFunctionMode::Derivative => {
            if !(arg.is_finite() && arg >= d) {
                return Err(Error::domain(format!(
                    "quadrant-{q} AOA function needs d <= s < inf (d={d}), got s={arg}"
                )));
            }
            let s = arg;
            // trig factor: sin θ for I/III, cos θ for II/IV
            let t = match q {
                Quadrant::I | Quadrant::III => sin_t,
                Quadrant::II | Quadrant::IV => cos_t,
            };
            let ratio = (d * t / s).min(1.0);
            if mode == AoaFunctionMode::Value {
                Ok(match q {
                    Quadrant::I => (-ratio).acos() + theta - FRAC_PI_2,
                    Quadrant::II => (-ratio).acos() + theta,
                    Quadrant::III => ratio.acos() + theta + FRAC_PI_2,
                    Quadrant::IV => ratio.acos() + theta + PI,
                })
            } else {
                let mag = d * t / (s * (s * s - d * d * t * t).sqrt());
                Ok(match q {
                    Quadrant::I | Quadrant::II => -mag,
                    Quadrant::III | Quadrant::IV => mag,
                })
            }
        }
        AoaFunctionMode::Inverse | AoaFunctionMode::InverseDerivative => {
            let alpha = arg;
            check_inverse_domain(q, alpha, theta)?;
            let phase = alpha - theta;
            let inv = match q {
                Quadrant::I | Quadrant::III => d * sin_t / phase.sin(),
                Quadrant::II | Quadrant::IV => -d * cos_t / phase.cos(),
            };
            if mode == AoaFunctionMode::Inverse {
                Ok(inv)
            } else {
                Ok(match q {
                    Quadrant::I | Quadrant::III => -inv * phase.cos() / phase.sin(),
                    Quadrant::II | Quadrant::IV => inv * phase.tan(),
                })
            }
        }
    }
}

/// Range of `ψ_{q,θ}` as `(lo, hi, lo_closed, hi_closed)`.
pub fn aoa_range(q: Quadrant, theta: f64) -> (f64, f64, bool, bool) {
    match q {
        Quadrant::I => (theta, 2.0 * theta, false, true),
        Quadrant::II => (FRAC_PI_2 + theta, PI, false, true),
        Quadrant::III => (PI, PI + theta, true, false),
        Quadrant::IV => (PI + 2.0 * theta, 1.5 * PI + theta, true, false),
    }
}

fn check_inverse_domain(q: Quadrant, alpha: f64, theta: f64) -> Result<()> {
    let (lo, hi, lo_closed, hi_closed) = aoa_range(q, theta);
    let above = if lo_closed {
        alpha >= lo - ANGLE_SLACK
    } else {
        alpha > lo
    };
    let below = if hi_closed {
        alpha <= hi + ANGLE_SLACK
    } else {
        alpha < hi
    };
    if alpha.is_finite() && above && below {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "inverse quadrant-{q} AOA function needs alpha in {}{lo}, {hi}{}, got {alpha}",
            if lo_closed { "[" } else { "(" },
            if hi_closed { "]" } else { ")" },
        )))
    }
}
