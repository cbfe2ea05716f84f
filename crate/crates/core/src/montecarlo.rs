//! Brute-force simulation of the Boolean model: every reflector's
//! reflection point is found exactly, paths are checked for blockers and the
//! shortest visible one is recorded.
//!
//! Each realization is generated lazily on a square cell grid. A cell's
//! reflectors are drawn from its own position in a ChaCha8 stream
//! (stream = realization index, word offset = cell index), so the content of
//! a cell never depends on which other cells were generated or in what order.
//! The generated region grows outward in path length until a visible
//! reflection is settled or the window is exhausted.

use std::f64::consts::SQRT_2;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{toa_cdf, toa_quantile, CurveKind, CurveMeta, DistributionCurve, ToaModel, COVERAGE};
use crate::blocking::BooleanModelParams;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Quadrant, Reflector, TestLink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NoBlocking,
    IndependentBlocking,
    CorrelatedBlocking,
    CorrelatedLosBlocked,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NoBlocking => "no-blocking",
            Mode::IndependentBlocking => "independent-blocking",
            Mode::CorrelatedBlocking => "correlated-blocking",
            Mode::CorrelatedLosBlocked => "correlated-los-blocked",
        }
    }

    /// Analytic TOA law the mode is compared against.
    pub fn reference(self) -> ToaModel {
        match self {
            Mode::NoBlocking => ToaModel::WithoutBlocking,
            _ => ToaModel::WithBlocking,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "no-blocking" | "none" => Ok(Mode::NoBlocking),
            "independent-blocking" | "independent" => Ok(Mode::IndependentBlocking),
            "correlated-blocking" | "correlated" => Ok(Mode::CorrelatedBlocking),
            "correlated-los-blocked" | "los-blocked" => Ok(Mode::CorrelatedLosBlocked),
            other => Err(Error::Parse(format!(
                "unknown mode `{other}` (expected no-blocking, independent-blocking, correlated-blocking or correlated-los-blocked)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub model: BooleanModelParams,
    pub link: TestLink,
    pub mode: Mode,
    /// Largest path length considered, meters.
    pub s_window: f64,
    /// Number of kept realizations to collect.
    pub realizations: usize,
    pub seed: u64,
    /// Cap on attempted realizations.
    pub max_attempts: u64,
}

impl SimulationConfig {
    /// Config whose window is the `COVERAGE` quantile of the mode's analytic law.
    pub fn new(model: BooleanModelParams, link: TestLink, mode: Mode, realizations: usize, seed: u64) -> Result<Self> {
        if realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        let s_window = toa_quantile(COVERAGE, mode.reference(), &model, &link)?;
        Ok(SimulationConfig {
            model,
            link,
            mode,
            s_window,
            realizations,
            seed,
            max_attempts: default_max_attempts(realizations),
        })
    }

    /// Replaces the window after checking it covers the `COVERAGE` quantile.
    pub fn with_s_window(mut self, s_window: f64) -> Result<Self> {
        if !(s_window > self.link.d() && s_window.is_finite()) {
            return Err(Error::config(
                "s_window_m",
                format!("must be finite and exceed d = {}", self.link.d()),
            ));
        }
        let mass = toa_cdf(s_window, self.mode.reference(), &self.model, &self.link)?;
        if mass < COVERAGE - 1e-9 {
            return Err(Error::config(
                "s_window_m",
                format!("analytic CDF at {s_window} m is {mass:.6}, leaving more than 1e-4 of the mass outside"),
            ));
        }
        self.s_window = s_window;
        Ok(self)
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Result<Self> {
        if max_attempts == 0 {
            return Err(Error::config("max_attempts", "must be at least 1"));
        }
        self.max_attempts = max_attempts;
        Ok(self)
    }
}

pub fn default_max_attempts(realizations: usize) -> u64 {
    (realizations as u64).saturating_mul(50).max(10_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstArrivalSample {
    pub s: f64,
    pub alpha: f64,
    pub quadrant: Quadrant,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub attempted: u64,
    pub kept: u64,
    /// Realizations without a visible reflection inside the window.
    pub zero_visible: u64,
    /// Realizations discarded because the direct path was clear.
    pub los_unblocked: u64,
    /// Reflectors with two accepted edges (kept the shorter).
    pub multi_candidate: u64,
    /// First arrivals tied in length with the next candidate.
    pub ties: u64,
}

impl Diagnostics {
    fn absorb(&mut self, other: &Diagnostics) {
        self.attempted += other.attempted;
        self.kept += other.kept;
        self.zero_visible += other.zero_visible;
        self.los_unblocked += other.los_unblocked;
        self.multi_candidate += other.multi_candidate;
        self.ties += other.ties;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub samples: Vec<FirstArrivalSample>,
    pub diagnostics: Diagnostics,
}

impl SimulationOutput {
    pub fn path_lengths(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.s).collect()
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }
}

/// Bounding box of the s-ellipse dilated by `margin`.
pub fn window_region(link: &TestLink, s: f64, margin: f64) -> Region {
    let hx = s / 2.0 + margin;
    let hy = (s * s - link.d() * link.d()).max(0.0).sqrt() / 2.0 + margin;
    Region {
        x0: -hx,
        x1: hx,
        y0: -hy,
        y1: hy,
    }
}

fn draw_reflector<R: Rng + ?Sized>(model: &BooleanModelParams, center: Point2, rng: &mut R) -> (Reflector, usize) {
    let w = model.widths().value(rng.random_range(0..model.widths().len()));
    let j = rng.random_range(0..model.orientations().len());
    let r = Reflector {
        width: w,
        orientation: model.orientations().value(j),
        center,
    };
    (r, j)
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as usize,
        Err(_) => 0,
    }
}

/// One realization of the field restricted to `region`.
pub fn sample_realization<R: Rng + ?Sized>(model: &BooleanModelParams, region: &Region, rng: &mut R) -> Vec<Reflector> {
    let n = poisson_count(model.lambda() * region.area(), rng);
    (0..n)
        .map(|_| {
            let x = region.x0 + (region.x1 - region.x0) * rng.random::<f64>();
            let y = region.y0 + (region.y1 - region.y0) * rng.random::<f64>();
            draw_reflector(model, Point2::new(x, y), rng).0
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionHit {
    pub point: Point2,
    pub quadrant: Quadrant,
    pub path_length: f64,
}

/// Rotation by one orientation with the link terminals already rotated.
#[derive(Debug, Clone, Copy)]
struct Frame {
    sin: f64,
    cos: f64,
    k: f64,
    b: Point2,
    m: Point2,
}

impl Frame {
    fn new(sin: f64, cos: f64, theta: f64, link: &TestLink) -> Self {
        let d = link.d();
        let cw = |p: Point2| Point2::new(cos * p.x + sin * p.y, -sin * p.x + cos * p.y);
        Frame {
            sin,
            cos,
            k: d * d * (2.0 * theta).sin() / 8.0,
            b: cw(link.base_station()),
            m: cw(link.mobile()),
        }
    }

    fn of(theta: f64, link: &TestLink) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(s, c, theta, link)
    }

    fn to_local(self, p: Point2) -> Point2 {
        Point2::new(self.cos * p.x + self.sin * p.y, -self.sin * p.x + self.cos * p.y)
    }

    fn to_world(self, p: Point2) -> Point2 {
        Point2::new(self.cos * p.x - self.sin * p.y, self.sin * p.x + self.cos * p.y)
    }
}

/// Accepted reflection points of a reflector, at most one per edge.
fn reflection_candidates(r: &Reflector, f: &Frame, link: &TestLink) -> ([Option<ReflectionHit>; 4], usize) {
    let k = f.k;
    let c = f.to_local(r.center);
    let (b, m) = (f.b, f.m);
    let h = r.width / 2.0;
    let mut out = [None; 4];
    let mut count = 0;
    // outward normals in the rotated frame: +x', −x', +y', −y'
    let edges = [
        (Point2::new(1.0, 0.0), c.x + h),
        (Point2::new(-1.0, 0.0), c.x - h),
        (Point2::new(0.0, 1.0), c.y + h),
        (Point2::new(0.0, -1.0), c.y - h),
    ];
    for (slot, (n, pos)) in edges.into_iter().enumerate() {
        if pos == 0.0 {
            continue;
        }
        let p = if n.x != 0.0 {
            let y = -k / pos;
            if (y - c.y).abs() > h {
                continue;
            }
            Point2::new(pos, y)
        } else {
            let x = -k / pos;
            if (x - c.x).abs() > h {
                continue;
            }
            Point2::new(x, pos)
        };
        if n.dot(b - p) > 0.0 && n.dot(m - p) > 0.0 {
            let world = f.to_world(p);
            out[slot] = Some(ReflectionHit {
                point: world,
                quadrant: Quadrant::of_point(world),
                path_length: link.path_length(world),
            });
            count += 1;
        }
    }
    (out, count)
}

fn best_candidate(r: &Reflector, f: &Frame, link: &TestLink) -> (Option<ReflectionHit>, bool) {
    let (cands, count) = reflection_candidates(r, f, link);
    let best = cands
        .into_iter()
        .flatten()
        .min_by(|a, b| a.path_length.total_cmp(&b.path_length));
    (best, count > 1)
}

/// The specular reflection point of `r` for the test link, if an edge
/// facing both terminals crosses the reflection hyperbola.
pub fn reflection_point(r: &Reflector, link: &TestLink) -> Option<ReflectionHit> {
    best_candidate(r, &Frame::of(r.orientation, link), link).0
}

/// Whether the open segment `(a, b)` meets the interior of the square.
pub fn segment_hits_square(a: Point2, b: Point2, sq: &Reflector) -> bool {
    let (s, c) = sq.orientation.sin_cos();
    hits_rotated_square(a, b, sq, s, c)
}

fn hits_rotated_square(a: Point2, b: Point2, sq: &Reflector, sin: f64, cos: f64) -> bool {
    let h = sq.width / 2.0;
    let cw = |p: Point2| Point2::new(cos * p.x + sin * p.y, -sin * p.x + cos * p.y);
    let pa = cw(a - sq.center);
    let pb = cw(b - sq.center);
    let dir = pb - pa;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (p, d) in [(pa.x, dir.x), (pa.y, dir.y)] {
        if d == 0.0 {
            if p.abs() >= h {
                return false;
            }
        } else {
            let t0 = (-h - p) / d;
            let t1 = (h - p) / d;
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    lo < hi
}

/// Whether any non-excluded reflector blocks the open segment `(a, b)`.
pub fn segment_blocked(a: Point2, b: Point2, blockers: &[Reflector], exclude: Option<usize>) -> bool {
    blockers
        .iter()
        .enumerate()
        .any(|(i, sq)| Some(i) != exclude && segment_hits_square(a, b, sq))
}

/// Number of reflection points with path length at most `s0` in one
/// realization restricted to the window of `s0`.
pub fn count_reflections<R: Rng + ?Sized>(model: &BooleanModelParams, link: &TestLink, s0: f64, rng: &mut R) -> usize {
    let region = window_region(link, s0, model.widths().hi());
    sample_realization(model, &region, rng)
        .iter()
        .filter_map(|r| reflection_point(r, link))
        .filter(|h| h.path_length <= s0)
        .count()
}

const CELL_BITS: u32 = 24;

fn zigzag(v: i32) -> u64 {
    ((v << 1) ^ (v >> 31)) as u32 as u64
}

/// Lazily generated realization on a cell grid.
struct LazyField<'a> {
    model: &'a BooleanModelParams,
    link: &'a TestLink,
    base: ChaCha8Rng,
    cell: f64,
    poisson: Option<Poisson<f64>>,
    frames: Vec<Frame>,
    reflectors: Vec<Reflector>,
    orientation_index: Vec<usize>,
    generated: Vec<(i32, i32, u32, u32)>,
    index: CellIndex,
    hits: Vec<(f64, usize, ReflectionHit)>,
    multi: u64,
}

/// Dense `[i0, i1] × [j0, j1]` table of reflector ranges per cell.
#[derive(Default)]
struct CellIndex {
    bounds: Option<(i32, i32, i32, i32)>,
    ranges: Vec<(u32, u32)>,
}

impl CellIndex {
    fn rebuild(&mut self, bounds: (i32, i32, i32, i32), cells: &[(i32, i32, u32, u32)]) {
        let (i0, i1, j0, j1) = bounds;
        let (ni, nj) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        self.ranges.clear();
        self.ranges.resize(ni * nj, (0, 0));
        for &(i, j, s, e) in cells {
            self.ranges[(i - i0) as usize * nj + (j - j0) as usize] = (s, e);
        }
        self.bounds = Some(bounds);
    }

    fn get(&self, i: i32, j: i32) -> (u32, u32) {
        match self.bounds {
            Some((i0, i1, j0, j1)) if i >= i0 && i <= i1 && j >= j0 && j <= j1 => {
                let nj = (j1 - j0 + 1) as usize;
                self.ranges[(i - i0) as usize * nj + (j - j0) as usize]
            }
            _ => (0, 0),
        }
    }
}

impl<'a> LazyField<'a> {
    fn new(cfg: &'a SimulationConfig, realization: u64) -> Self {
        let model = &cfg.model;
        let cell = model.widths().hi().max((2.0 / model.lambda()).sqrt());
        let mut base = ChaCha8Rng::seed_from_u64(cfg.seed);
        base.set_stream(realization);
        let frames = model
            .orientations()
            .support()
            .enumerate()
            .map(|(j, theta)| {
                let (s, c) = model.orientation_trig(j);
                Frame::new(s, c, theta, &cfg.link)
            })
            .collect();
        LazyField {
            model,
            link: &cfg.link,
            base,
            cell,
            poisson: Poisson::new(model.lambda() * cell * cell).ok(),
            frames,
            reflectors: Vec::new(),
            orientation_index: Vec::new(),
            generated: Vec::new(),
            index: CellIndex::default(),
            hits: Vec::new(),
            multi: 0,
        }
    }

    fn generate_cell(&mut self, i: i32, j: i32) -> Result<()> {
        let (zi, zj) = (zigzag(i), zigzag(j));
        if zi >= 1 << CELL_BITS || zj >= 1 << CELL_BITS {
            return Err(Error::domain("simulation window exceeds the cell index range"));
        }
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from((zi << CELL_BITS) | zj) << 16);
        let n = match &self.poisson {
            Some(p) => p.sample(&mut rng) as usize,
            None => 0,
        };
        let start = self.reflectors.len() as u32;
        for _ in 0..n {
            let x = (f64::from(i) + rng.random::<f64>()) * self.cell;
            let y = (f64::from(j) + rng.random::<f64>()) * self.cell;
            let (r, o) = draw_reflector(self.model, Point2::new(x, y), &mut rng);
            let idx = self.reflectors.len();
            self.reflectors.push(r);
            self.orientation_index.push(o);
            let (hit, multi) = best_candidate(&r, &self.frames[o], self.link);
            if multi {
                self.multi += 1;
            }
            if let Some(h) = hit {
                self.hits.push((h.path_length, idx, h));
            }
        }
        self.generated.push((i, j, start, self.reflectors.len() as u32));
        Ok(())
    }

    /// Generates every cell meeting `[−hx, hx] × [−hy, hy]`.
    fn ensure_box(&mut self, hx: f64, hy: f64) -> Result<()> {
        let c = self.cell;
        let want = (
            (-hx / c).floor() as i32,
            (hx / c).floor() as i32,
            (-hy / c).floor() as i32,
            (hy / c).floor() as i32,
        );
        let have = self.index.bounds;
        if let Some(h) = have {
            if want.0 >= h.0 && want.1 <= h.1 && want.2 >= h.2 && want.3 <= h.3 {
                return Ok(());
            }
        }
        let new = match have {
            Some(h) => (want.0.min(h.0), want.1.max(h.1), want.2.min(h.2), want.3.max(h.3)),
            None => want,
        };
        for i in new.0..=new.1 {
            for j in new.2..=new.3 {
                let inside_old = have.is_some_and(|h| i >= h.0 && i <= h.1 && j >= h.2 && j <= h.3);
                if !inside_old {
                    self.generate_cell(i, j)?;
                }
            }
        }
        self.index.rebuild(new, &self.generated);
        Ok(())
    }

    /// Blocking test against this realization using the cell grid as index.
    fn segment_blocked(&self, a: Point2, b: Point2, exclude: Option<usize>) -> bool {
        let reach = self.model.widths().hi() / SQRT_2;
        let c = self.cell;
        let (ylo, yhi) = (a.y.min(b.y) - reach, a.y.max(b.y) + reach);
        let (j0, j1) = ((ylo / c).floor() as i32, (yhi / c).floor() as i32);
        for j in j0..=j1 {
            // x-extent of the segment inside the dilated row band
            let band_lo = f64::from(j) * c - reach;
            let band_hi = f64::from(j + 1) * c + reach;
            let (t0, t1) = if a.y == b.y {
                if a.y < band_lo || a.y > band_hi {
                    continue;
                }
                (0.0, 1.0)
            } else {
                let ta = (band_lo - a.y) / (b.y - a.y);
                let tb = (band_hi - a.y) / (b.y - a.y);
                (ta.min(tb).max(0.0), ta.max(tb).min(1.0))
            };
            if t0 > t1 {
                continue;
            }
            let xa = a.x + t0 * (b.x - a.x);
            let xb = a.x + t1 * (b.x - a.x);
            let i0 = ((xa.min(xb) - reach) / c).floor() as i32;
            let i1 = ((xa.max(xb) + reach) / c).floor() as i32;
            for i in i0..=i1 {
                let (s, e) = self.index.get(i, j);
                for idx in s as usize..e as usize {
                    let f = &self.frames[self.orientation_index[idx]];
                    if Some(idx) != exclude && hits_rotated_square(a, b, &self.reflectors[idx], f.sin, f.cos) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Fresh independent field around the segment `[a, b]`, tested for a hit.
fn independently_blocked<R: Rng + ?Sized>(a: Point2, b: Point2, model: &BooleanModelParams, rng: &mut R) -> bool {
    let len = a.distance(b);
    if len == 0.0 {
        return false;
    }
    let reach = model.widths().hi() / SQRT_2;
    let u = (b - a) * (1.0 / len);
    let v = Point2::new(-u.y, u.x);
    let local = Region {
        x0: -reach,
        x1: len + reach,
        y0: -reach,
        y1: reach,
    };
    sample_realization(model, &local, rng).into_iter().any(|mut sq| {
        let p = sq.center;
        sq.center = a + u * p.x + v * p.y;
        segment_hits_square(a, b, &sq)
    })
}

enum Outcome {
    Kept(FirstArrivalSample),
    ZeroVisible,
    LosUnblocked,
}

fn run_realization(cfg: &SimulationConfig, index: u64) -> Result<(Outcome, Diagnostics)> {
    let link = &cfg.link;
    let model = &cfg.model;
    let d = link.d();
    let w_max = model.widths().hi();
    let e0 = 1.0 / (2.0 * model.lambda() * model.mean_width());
    let mut field = LazyField::new(cfg, index);
    let mut aux = ChaCha8Rng::seed_from_u64(cfg.seed);
    aux.set_stream(index | 1 << 63);
    let mut diag = Diagnostics {
        attempted: 1,
        ..Diagnostics::default()
    };
    let (b, m) = (link.base_station(), link.mobile());

    let mut examined: Vec<bool> = Vec::new();
    let mut level = 0i32;
    let outcome = loop {
        let s_level = (d + e0 * 2f64.powi(level)).min(cfg.s_window);
        field.ensure_box(s_level / 2.0 + w_max, (s_level * s_level - d * d).sqrt() / 2.0 + w_max)?;
        if level == 0 && cfg.mode == Mode::CorrelatedLosBlocked && !field.segment_blocked(b, m, None) {
            break Outcome::LosUnblocked;
        }
        examined.resize(field.hits.len(), false);
        let mut pending: Vec<usize> = (0..field.hits.len())
            .filter(|&k| !examined[k] && field.hits[k].0 <= s_level)
            .collect();
        pending.sort_by(|&x, &y| field.hits[x].0.total_cmp(&field.hits[y].0));
        let mut found = None;
        for (pos, &k) in pending.iter().enumerate() {
            examined[k] = true;
            let (s, idx, hit) = field.hits[k];
            let r = hit.point;
            let visible = match cfg.mode {
                Mode::NoBlocking => true,
                Mode::IndependentBlocking => {
                    !independently_blocked(b, r, model, &mut aux) && !independently_blocked(r, m, model, &mut aux)
                }
                Mode::CorrelatedBlocking | Mode::CorrelatedLosBlocked => {
                    !field.segment_blocked(b, r, Some(idx)) && !field.segment_blocked(r, m, Some(idx))
                }
            };
            if visible {
                if pending.get(pos + 1).is_some_and(|&n| field.hits[n].0 == s) {
                    diag.ties += 1;
                }
                let theta = field.reflectors[idx].orientation;
                found = Some(FirstArrivalSample {
                    s,
                    alpha: link.arrival_angle(r),
                    quadrant: hit.quadrant,
                    theta,
                });
                break;
            }
        }
        if let Some(sample) = found {
            break Outcome::Kept(sample);
        }
        if s_level >= cfg.s_window {
            break Outcome::ZeroVisible;
        }
        level += 1;
    };
    diag.multi_candidate = field.multi;
    match outcome {
        Outcome::Kept(_) => diag.kept = 1,
        Outcome::ZeroVisible => diag.zero_visible = 1,
        Outcome::LosUnblocked => diag.los_unblocked = 1,
    }
    Ok((outcome, diag))
}

const BATCH: u64 = 2048;

/// Runs realizations in index order until `cfg.realizations` are kept or
/// `cfg.max_attempts` are spent. Output is independent of thread scheduling.
pub fn simulate_first_arrival(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    let mut samples = Vec::with_capacity(cfg.realizations);
    let mut diag = Diagnostics::default();
    let mut next = 0u64;
    'outer: while next < cfg.max_attempts {
        let end = (next + BATCH).min(cfg.max_attempts);
        let batch: Vec<(Outcome, Diagnostics)> = (next..end)
            .into_par_iter()
            .map(|i| run_realization(cfg, i))
            .collect::<Result<_>>()?;
        next = end;
        for (outcome, d) in batch {
            diag.absorb(&d);
            if let Outcome::Kept(s) = outcome {
                samples.push(s);
                if samples.len() == cfg.realizations {
                    break 'outer;
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::NoRetainedRealizations {
            attempts: diag.attempted,
        });
    }
    Ok(SimulationOutput {
        samples,
        diagnostics: diag,
    })
}

/// Right-continuous empirical CDF of the samples.
pub fn empirical_cdf(samples: &[f64]) -> Result<DistributionCurve> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut grid = Vec::new();
    let mut cdf = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if grid.last() == Some(&x) {
            *cdf.last_mut().expect("pushed with grid") = (i + 1) as f64 / n;
        } else {
            grid.push(x);
            cdf.push((i + 1) as f64 / n);
        }
    }
    Ok(DistributionCurve {
        pdf: vec![0.0; grid.len()],
        grid,
        cdf,
        kind: CurveKind::Step,
        meta: CurveMeta {
            source: "empirical".into(),
            params: serde_json::json!({ "samples": samples.len() }),
        },
    })
}

/// `sup |F_a − F_b|`, checked at both grids including left limits.
pub fn ks_distance(a: &DistributionCurve, b: &DistributionCurve) -> f64 {
    a.grid
        .iter()
        .chain(b.grid.iter())
        .map(|&x| {
            let right = (a.cdf_at(x) - b.cdf_at(x)).abs();
            let left = (a.cdf_left(x) - b.cdf_left(x)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
}
