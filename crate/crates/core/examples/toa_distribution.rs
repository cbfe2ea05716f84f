//! First-arrival path-length law with and without blocking, plus a few quantiles.

use firstpath::analytic::{
    default_toa_grid, no_visible_reflection_probability, toa_quantile, toa_with_blocking, toa_without_blocking,
    ToaModel,
};
use firstpath::blocking::BooleanModelParams;
use firstpath::geometry::TestLink;

fn main() -> firstpath::error::Result<()> {
    let link = TestLink::new(350.0)?;
    let model = BooleanModelParams::from_degrees(60.0, (10.0, 40.0, 4), (10.0, 80.0, 8))?;

    let p0 = no_visible_reflection_probability(&model, &link)?;
    println!("P(no visible reflection) = {p0:.4}");

    let grid = default_toa_grid(ToaModel::WithBlocking, &model, &link, 400)?;
    let blocked = toa_with_blocking(&model, &link, &grid)?;
    let open = toa_without_blocking(&link, &model, &grid)?;
    println!(
        "mean path length: blocked {:.1} m, unblocked {:.1} m",
        blocked.mean(),
        open.mean()
    );

    for level in [0.1, 0.5, 0.9, 0.99] {
        let b = toa_quantile(level, ToaModel::WithBlocking, &model, &link)?;
        let u = toa_quantile(level, ToaModel::WithoutBlocking, &model, &link)?;
        println!(
            "{:>4.0}% quantile: blocked {b:8.1} m, unblocked {u:8.1} m",
            100.0 * level
        );
    }
    Ok(())
}
