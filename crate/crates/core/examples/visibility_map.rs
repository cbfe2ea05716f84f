//! Independent-blocking visibility probability on a coarse grid around the link.

use firstpath::blocking::{visibility_probability, BooleanModelParams};
use firstpath::geometry::{Point2, TestLink};

fn main() -> firstpath::error::Result<()> {
    let link = TestLink::new(350.0)?;
    let model = BooleanModelParams::from_degrees(60.0, (10.0, 40.0, 4), (10.0, 80.0, 8))?;
    let xs: Vec<f64> = (-6..=6).map(|i| 100.0 * i as f64).collect();

    print!("{:>7}", "y \\ x");
    for x in &xs {
        print!("{x:>6.0}");
    }
    println!();
    for j in (-4..=4).rev() {
        let y = 100.0 * j as f64;
        print!("{y:>7.0}");
        for &x in &xs {
            print!("{:>6.2}", visibility_probability(Point2::new(x, y), &model, &link));
        }
        println!();
    }
    Ok(())
}
