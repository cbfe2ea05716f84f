//! Angle of arrival of the first-arriving reflection: the conditional atoms
//! given its path length and the marginal density.

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::analytic::{cumulative_intensity, intensity, intensity_rate, Visibility};
use crate::blocking::{visibility_probability, BooleanModelParams};
use crate::error::{Error, Result};
use crate::geometry::{aoa_function, aoa_range, boundary_prps, AoaFunctionMode, Quadrant, TestLink};
use crate::quadrature::{gauss_legendre8_points, neumaier_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoaAtom {
    pub angle: f64,
    pub weight: f64,
    pub quadrant: Quadrant,
    pub orientation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl AngleInterval {
    pub fn contains(&self, a: f64) -> bool {
        let above = if self.lo_closed { a >= self.lo } else { a > self.lo };
        let below = if self.hi_closed { a <= self.hi } else { a < self.hi };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Disjoint, sorted union of angle intervals within `(0, 2π)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleIntervalSet {
    intervals: Vec<AngleInterval>,
}

impl AngleIntervalSet {
    pub fn from_intervals(mut raw: Vec<AngleInterval>) -> Self {
        raw.retain(|i| i.hi > i.lo || (i.hi == i.lo && i.lo_closed && i.hi_closed));
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<AngleInterval> = Vec::with_capacity(raw.len());
        for iv in raw {
            if let Some(last) = out.last_mut() {
                let touches = iv.lo < last.hi || (iv.lo == last.hi && (last.hi_closed || iv.lo_closed));
                if touches {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    if iv.lo == last.lo {
                        last.lo_closed |= iv.lo_closed;
                    }
                    continue;
                }
            }
            out.push(iv);
        }
        AngleIntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[AngleInterval] {
        &self.intervals
    }

    pub fn contains(&self, a: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(a))
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(AngleInterval::length).sum()
    }
}

/// Union over orientations of the three arrival lobes.
pub fn aoa_support(model: &BooleanModelParams) -> AngleIntervalSet {
    let mut raw = Vec::new();
    for theta in model.orientations().support() {
        for q in Quadrant::ALL {
            let (lo, hi, lo_closed, hi_closed) = aoa_range(q, theta);
            raw.push(AngleInterval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            });
        }
    }
    AngleIntervalSet::from_intervals(raw)
}

fn trig_for(q: Quadrant, theta: f64) -> f64 {
    match q {
        Quadrant::I | Quadrant::III => theta.sin(),
        Quadrant::II | Quadrant::IV => theta.cos(),
    }
}

/// Unnormalized weight `ω_{q,θ}(s)` of one atom.
fn omega(q: Quadrant, theta: f64, s: f64, rho: f64, link: &TestLink) -> Result<f64> {
    let d = link.d();
    let t = trig_for(q, theta);
    let alpha = aoa_function(q, AoaFunctionMode::Value, s, theta, link)?;
    let prime = aoa_function(q, AoaFunctionMode::Derivative, s, theta, link)?;
    // for very large s the angle can round onto an open end of the range
    let inv_prime = aoa_function(q, AoaFunctionMode::InverseDerivative, alpha, theta, link).unwrap_or(1.0 / prime);
    Ok(rho * s * inv_prime / (2.0 * (s * s - d * d * t * t).sqrt()) * prime)
}

/// Unnormalized atoms at path length `s`, one per (orientation, quadrant).
fn raw_atoms(s: f64, model: &BooleanModelParams, link: &TestLink) -> Result<Vec<AoaAtom>> {
    let mut atoms = Vec::with_capacity(4 * model.orientations().len());
    for theta in model.orientations().support() {
        let h = boundary_prps(s, theta, link)?;
        for q in Quadrant::ALL {
            let rho = visibility_probability(h[q.index()], model, link);
            atoms.push(AoaAtom {
                angle: aoa_function(q, AoaFunctionMode::Value, s, theta, link)?,
                weight: omega(q, theta, s, rho, link)?,
                quadrant: q,
                orientation: theta,
            });
        }
    }
    Ok(atoms)
}

/// Distribution of the arrival angle given that the first visible reflection
/// has path length `s`: a finite mixture of point masses.
pub fn conditional_aoa_atoms(s: f64, model: &BooleanModelParams, link: &TestLink) -> Result<Vec<AoaAtom>> {
    if !(s > link.d() && s.is_finite()) {
        return Err(Error::domain(format!(
            "conditional AOA atoms need d < s < inf (d={}), got {s}",
            link.d()
        )));
    }
    let mut atoms = raw_atoms(s, model, link)?;
    let total = neumaier_sum(atoms.iter().map(|a| a.weight));
    for a in &mut atoms {
        a.weight /= total;
    }
    Ok(atoms)
}

/// Unnormalized weights `ω_{q,θ}(s)` in the same order as the atoms.
pub fn atom_weights(s: f64, model: &BooleanModelParams, link: &TestLink) -> Result<Vec<f64>> {
    Ok(raw_atoms(s, model, link)?.into_iter().map(|a| a.weight).collect())
}

/// Signed indicator of the lobe of quadrant `q`: −1 for I and II, +1 for III and IV.
fn beta(q: Quadrant, theta: f64, alpha: f64) -> f64 {
    let (lo, hi, lo_closed, hi_closed) = aoa_range(q, theta);
    let inside = AngleInterval {
        lo,
        hi,
        lo_closed,
        hi_closed,
    }
    .contains(alpha);
    match (inside, q) {
        (false, _) => 0.0,
        (true, Quadrant::I | Quadrant::II) => -1.0,
        (true, _) => 1.0,
    }
}

/// One active term of the marginal sum at an angle.
struct Branch {
    q: Quadrant,
    theta: f64,
    s: f64,
    inv_prime: f64,
    beta: f64,
}

fn branches(alpha: f64, model: &BooleanModelParams, link: &TestLink) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    for theta in model.orientations().support() {
        for q in Quadrant::ALL {
            let b = beta(q, theta, alpha);
            if b == 0.0 {
                continue;
            }
            let s = aoa_function(q, AoaFunctionMode::Inverse, alpha, theta, link)?.max(link.d());
            // an open range end that rounding let through
            if !s.is_finite() {
                continue;
            }
            let inv_prime = aoa_function(q, AoaFunctionMode::InverseDerivative, alpha, theta, link)?;
            out.push(Branch {
                q,
                theta,
                s,
                inv_prime,
                beta: b,
            });
        }
    }
    Ok(out)
}

/// Evaluates the marginal sum given `λ̂(d, s)` for every branch path length.
fn marginal_from_branches(
    branches: &[Branch],
    lambda_hat: impl Fn(f64) -> f64,
    lambda_hat_inf: f64,
    model: &BooleanModelParams,
    link: &TestLink,
) -> Result<f64> {
    let norm = -(-lambda_hat_inf).exp_m1();
    let mut terms = Vec::with_capacity(branches.len());
    for br in branches {
        let f_s = intensity_rate(br.s, model, link, Visibility::Blocked)? * (-lambda_hat(br.s)).exp() / norm;
        // far out every visibility has underflowed; the term is zero with f_S
        if f_s == 0.0 {
            continue;
        }
        let h = boundary_prps(br.s, br.theta, link)?;
        let w = omega(
            br.q,
            br.theta,
            br.s,
            visibility_probability(h[br.q.index()], model, link),
            link,
        )?;
        let total_w = neumaier_sum(atom_weights(br.s, model, link)?);
        terms.push(br.inv_prime * w * f_s / total_w * br.beta);
    }
    Ok(neumaier_sum(terms))
}

/// Density of the arrival angle of the first visible reflection, per radian.
pub fn marginal_aoa_pdf(alpha: f64, model: &BooleanModelParams, link: &TestLink) -> Result<f64> {
    if !(alpha > 0.0 && alpha < TAU) {
        return Ok(0.0);
    }
    let br = branches(alpha, model, link)?;
    if br.is_empty() {
        return Ok(0.0);
    }
    let total = intensity(link.d(), f64::INFINITY, model, link)?.value;
    let mut cache = HashMap::new();
    for b in &br {
        let v = intensity(link.d(), b.s, model, link)?.value;
        cache.insert(b.s.to_bits(), v);
    }
    marginal_from_branches(&br, |s| cache[&s.to_bits()], total, model, link)
}

/// Marginal density at many angles, sharing one cumulative-intensity pass.
pub fn marginal_aoa_pdf_many(alphas: &[f64], model: &BooleanModelParams, link: &TestLink) -> Result<Vec<f64>> {
    let per_alpha: Vec<Vec<Branch>> = alphas
        .iter()
        .map(|&a| {
            if a > 0.0 && a < TAU {
                branches(a, model, link)
            } else {
                Ok(Vec::new())
            }
        })
        .collect::<Result<_>>()?;
    let mut lengths: Vec<f64> = per_alpha.iter().flatten().map(|b| b.s).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    let cum = cumulative_intensity(&lengths, model, link, Visibility::Blocked)?;
    let lookup = |s: f64| {
        let i = lengths.partition_point(|&x| x < s);
        cum[i]
    };
    let total = intensity(link.d(), f64::INFINITY, model, link)?.value;
    per_alpha
        .iter()
        .map(|br| marginal_from_branches(br, lookup, total, model, link))
        .collect()
}

/// Probability mass of each bin `[edges[i], edges[i+1]]`, by 8-point
/// Gauss–Legendre inside every bin.
pub fn marginal_aoa_bin_masses(edges: &[f64], model: &BooleanModelParams, link: &TestLink) -> Result<Vec<f64>> {
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("bin edges must be strictly ascending"));
    }
    let mut nodes = Vec::with_capacity(8 * edges.len());
    let mut weights = Vec::with_capacity(8 * edges.len());
    for w in edges.windows(2) {
        for (x, wt) in gauss_legendre8_points(w[0], w[1]) {
            nodes.push(x);
            weights.push(wt);
        }
    }
    let pdf = marginal_aoa_pdf_many(&nodes, model, link)?;
    Ok(pdf
        .chunks(8)
        .zip(weights.chunks(8))
        .map(|(p, w)| p.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect())
}

/// Bin edges of `width_deg` degrees covering `(0, 2π)`, in radians.
pub fn degree_bins(width_deg: f64) -> Vec<f64> {
    let n = (360.0 / width_deg).round() as usize;
    (0..=n)
        .map(|i| (i as f64 * width_deg).min(360.0).to_radians())
        .collect()
}

/// Fraction of `angles` falling in each bin `[edges[i], edges[i+1])`.
pub fn empirical_bin_masses(angles: &[f64], edges: &[f64]) -> Result<Vec<f64>> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("bin edges must be strictly ascending"));
    }
    if angles.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts = vec![0u64; edges.len() - 1];
    for &a in angles {
        let i = edges.partition_point(|&e| e <= a);
        if i >= 1 && i < edges.len() {
            counts[i - 1] += 1;
        }
    }
    let n = angles.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * neumaier_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn single(theta_deg: f64) -> (BooleanModelParams, TestLink) {
        (
            BooleanModelParams::from_degrees(30.0, (10.0, 40.0, 4), (theta_deg, theta_deg, 1)).unwrap(),
            TestLink::new(350.0).unwrap(),
        )
    }

    #[test]
    fn single_orientation_support_has_three_lobes() {
        let (m, _) = single(60.0);
        let set = aoa_support(&m);
        let iv = set.intervals();
        assert_eq!(iv.len(), 3);
        let deg = |x: f64| x.to_degrees();
        assert_relative_eq!(deg(iv[0].lo), 60.0, epsilon = 1e-9);
        assert_relative_eq!(deg(iv[0].hi), 120.0, epsilon = 1e-9);
        assert!(!iv[0].lo_closed && iv[0].hi_closed);
        assert_relative_eq!(deg(iv[1].lo), 150.0, epsilon = 1e-9);
        assert_relative_eq!(deg(iv[1].hi), 240.0, epsilon = 1e-9);
        assert!(!iv[1].lo_closed && !iv[1].hi_closed);
        assert_relative_eq!(deg(iv[2].lo), 300.0, epsilon = 1e-9);
        assert_relative_eq!(deg(iv[2].hi), 330.0, epsilon = 1e-9);
        assert!(iv[2].lo_closed && !iv[2].hi_closed);
    }

    #[test]
    fn atoms_pair_up_for_one_orientation() {
        let (m, l) = single(60.0);
        let atoms = conditional_aoa_atoms(500.0, &m, &l).unwrap();
        assert_eq!(atoms.len(), 4);
        let theta = 60f64.to_radians();
        assert_relative_eq!(atoms[0].angle + atoms[2].angle, 2.0 * theta + PI, max_relative = 1e-13);
        assert_relative_eq!(atoms[0].weight, atoms[2].weight, max_relative = 1e-12);
        assert_relative_eq!(atoms[1].weight, atoms[3].weight, max_relative = 1e-12);
        assert_relative_eq!(atoms.iter().map(|a| a.weight).sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn atoms_reject_s_at_d() {
        let (m, l) = single(60.0);
        assert!(conditional_aoa_atoms(350.0, &m, &l).is_err());
    }

    #[test]
    fn pdf_vanishes_off_support() {
        let (m, l) = single(60.0);
        for deg in [10.0, 59.0, 130.0, 260.0, 299.0, 340.0] {
            assert_eq!(marginal_aoa_pdf(f64::to_radians(deg), &m, &l).unwrap(), 0.0);
        }
        assert!(marginal_aoa_pdf(f64::to_radians(100.0), &m, &l).unwrap() > 0.0);
    }

    #[test]
    fn bin_masses_sum_to_one_and_lobes_pair() {
        let (m, l) = single(60.0);
        let masses = marginal_aoa_bin_masses(&degree_bins(1.0), &m, &l).unwrap();
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        let lobe = |a: usize, b: usize| masses[a..b].iter().sum::<f64>();
        assert_relative_eq!(lobe(60, 120), lobe(180, 240), max_relative = 1e-6);
        assert_relative_eq!(lobe(150, 180), lobe(300, 330), max_relative = 1e-6);
    }

    #[test]
    fn single_and_batched_evaluation_agree() {
        let (m, l) = single(35.0);
        let alphas = [0.7, 1.1, 2.5, 3.3, 4.9];
        let many = marginal_aoa_pdf_many(&alphas, &m, &l).unwrap();
        for (a, v) in alphas.iter().zip(many) {
            assert_relative_eq!(marginal_aoa_pdf(*a, &m, &l).unwrap(), v, max_relative = 1e-8);
        }
    }

    #[test]
    fn merging_keeps_touching_closed_ends() {
        let set = AngleIntervalSet::from_intervals(vec![
            AngleInterval {
                lo: 1.0,
                hi: 2.0,
                lo_closed: false,
                hi_closed: true,
            },
            AngleInterval {
                lo: 2.0,
                hi: 3.0,
                lo_closed: false,
                hi_closed: false,
            },
            AngleInterval {
                lo: 4.0,
                hi: 5.0,
                lo_closed: false,
                hi_closed: false,
            },
            AngleInterval {
                lo: 5.0,
                hi: 6.0,
                lo_closed: false,
                hi_closed: false,
            },
        ]);
        assert_eq!(set.intervals().len(), 3);
        assert!(set.contains(2.0));
        assert!(!set.contains(5.0));
    }
}
