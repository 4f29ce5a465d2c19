//! Ratio of the trilinear integral to both anisotropic bounds over random
//! band-limited triples at two resolutions.

use std::f64::consts::PI;

use hydrostat::diagnostics::anisotropic_ratio;
use hydrostat::spectral::{Grid3, PhysicalField3D, SpectralField3D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: Grid3, rng: &mut ChaCha8Rng) -> SpectralField3D {
    let terms: Vec<[f64; 6]> = (0..12)
        .map(|_| {
            [
                rng.gen_range(-3..=3) as f64,
                rng.gen_range(-3..=3) as f64,
                rng.gen_range(0..=3) as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            ]
        })
        .collect();
    PhysicalField3D::from_fn(grid, |x, y, z| {
        terms
            .iter()
            .map(|[p, q, m, a, ph, pz]| {
                a * (2.0 * PI * (p * x + q * y) + ph).cos() * (m * PI * z + pz).cos()
            })
            .sum()
    })
    .forward()
}

fn main() -> hydrostat::Result<()> {
    let constant = SpectralField3D::from_fn(
        Grid3::cube(8, 1.0)?,
        hydrostat::spectral::Parity::None,
        |_, _, _| 1.0,
    );
    let r = anisotropic_ratio(&constant, &constant, &constant);
    println!(
        "constants: lhs {:.4}, ratio {:.6} (sqrt(2h) = {:.6})",
        r.lhs,
        r.ratio1,
        2f64.sqrt()
    );

    for n in [16, 32] {
        let grid = Grid3::cube(n, 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = [0.0f64; 2];
        for _ in 0..100 {
            let (f, g, h) = (
                random_field(grid, &mut rng),
                random_field(grid, &mut rng),
                random_field(grid, &mut rng),
            );
            let r = anisotropic_ratio(&f, &g, &h);
            worst = [worst[0].max(r.ratio1), worst[1].max(r.ratio2)];
        }
        println!(
            "{n}^3: max ratio form 1 {:.4}, form 2 {:.4}",
            worst[0], worst[1]
        );
    }
    Ok(())
}
