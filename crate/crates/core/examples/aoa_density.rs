//! Marginal arrival-angle density and its support for one and three orientations.

use firstpath::aoa::{aoa_support, degree_bins, marginal_aoa_bin_masses, marginal_aoa_pdf};
use firstpath::blocking::BooleanModelParams;
use firstpath::geometry::TestLink;

fn main() -> firstpath::error::Result<()> {
    let link = TestLink::new(350.0)?;
    for orientations in [(60.0, 60.0, 1), (20.0, 60.0, 3)] {
        let model = BooleanModelParams::from_degrees(30.0, (10.0, 40.0, 4), orientations)?;
        let support: Vec<String> = aoa_support(&model)
            .intervals()
            .iter()
            .map(|iv| {
                format!(
                    "{}{:.0}°, {:.0}°{}",
                    if iv.lo_closed { '[' } else { '(' },
                    iv.lo.to_degrees(),
                    iv.hi.to_degrees(),
                    if iv.hi_closed { ']' } else { ')' }
                )
            })
            .collect();
        let masses = marginal_aoa_bin_masses(&degree_bins(1.0), &model, &link)?;
        let (peak, _) = masses
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
        println!("orientations {orientations:?}: support {}", support.join(" ∪ "));
        println!(
            "  total mass {:.6}, densest 1° bin at {peak}°, pdf there {:.4} /rad",
            masses.iter().sum::<f64>(),
            marginal_aoa_pdf((peak as f64 + 0.5).to_radians(), &model, &link)?
        );
    }
    Ok(())
}
