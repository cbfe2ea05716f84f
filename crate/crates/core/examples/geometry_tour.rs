//! Reflection hyperbola, s-ellipse and the s-meter AOA functions for one link.

use firstpath::geometry::{
    aoa_function, aoa_range, boundary_prps, s_ellipse_axes, AoaFunctionMode, Point2, Quadrant, Reflector, TestLink,
};
use firstpath::montecarlo::reflection_point;

fn main() -> firstpath::error::Result<()> {
    let link = TestLink::new(350.0)?;
    let theta = 30f64.to_radians();
    let s = 500.0;

    let (a, b) = s_ellipse_axes(s, &link)?;
    println!("s-ellipse for s = {s} m: semi-axes {a:.2} m, {b:.2} m");

    let prps = boundary_prps(s, theta, &link)?;
    for (q, p) in Quadrant::ALL.into_iter().zip(prps) {
        let alpha = aoa_function(q, AoaFunctionMode::Value, s, theta, &link)?;
        let slope = aoa_function(q, AoaFunctionMode::Derivative, s, theta, &link)?;
        let (lo, hi, _, _) = aoa_range(q, theta);
        println!(
            "{q}: boundary point {p}, AOA {:.2}° (range {:.0}°..{:.0}°), dα/ds {slope:.3e} rad/m",
            alpha.to_degrees(),
            lo.to_degrees(),
            hi.to_degrees(),
        );
    }

    // a 20 m square just inside the quadrant-I boundary point reflects with a shorter path
    let sq = Reflector::new(
        20.0,
        theta,
        prps[0] + Point2::unit(theta + 3.0 * std::f64::consts::FRAC_PI_2) * 10.0,
    )?;
    match reflection_point(&sq, &link) {
        Some(hit) => println!(
            "square at {} reflects at {} ({}), path {:.2} m",
            sq.center, hit.point, hit.quadrant, hit.path_length
        ),
        None => println!("square at {} gives no reflection", sq.center),
    }
    Ok(())
}
