//! Fits gamma, exponential, half-normal and Rayleigh laws to the NLOS bias and
//! ranks them by KL divergence.

use firstpath::approx::{bias_for_fit, fit_all, FitMethod};
use firstpath::blocking::BooleanModelParams;
use firstpath::geometry::TestLink;

fn main() -> firstpath::error::Result<()> {
    let link = TestLink::new(200.0)?;
    for lambda in [10.0, 40.0, 70.0] {
        let model = BooleanModelParams::from_degrees(lambda, (20.0, 100.0, 5), (10.0, 80.0, 8))?;
        let bias = bias_for_fit(&model, &link, 2000)?;
        let report = fit_all(&bias, &model, FitMethod::Moments)?;
        print!("λ = {lambda:>3}/km², mean bias {:6.1} m:", report.moments.m1);
        for e in &report.entries {
            print!("  {} {:.4}", e.fitted.family().name(), e.kl.value);
        }
        println!("  -> best {}", report.best.name());
    }
    Ok(())
}
