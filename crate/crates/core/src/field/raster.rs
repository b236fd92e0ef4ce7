use std::io::Write;

use crate::error::{Error, Result};
use crate::field::Realization;

/// Row-major 8-bit image, first row at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Bitmap {
    pub fn count_nonzero(&self) -> usize {
        self.pixels.iter().filter(|p| **p != 0).count()
    }
}

fn raster_with(rz: &Realization, resolution: usize, pixel: impl Fn(usize) -> u8) -> Result<Bitmap> {
    if rz.nu() != 2 {
        return Err(Error::Unsupported(format!("rasterization needs nu = 2, got {}", rz.nu())));
    }
    if resolution == 0 {
        return Err(Error::Config("raster resolution must be positive".into()));
    }
    let e = rz.window().half_extents();
    let mut pixels = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        let y = e[1] - (row as f64 + 0.5) * 2.0 * e[1] / resolution as f64;
        for col in 0..resolution {
            let x = -e[0] + (col as f64 + 0.5) * 2.0 * e[0] / resolution as f64;
            pixels.push(pixel(rz.coverage_count(&[x, y])));
        }
    }
    Ok(Bitmap { width: resolution, height: resolution, pixels })
}

/// `255 · 1(X >= k)` over the bounding box of the window.
pub fn raster_field(rz: &Realization, resolution: usize, k: usize) -> Result<Bitmap> {
    if k == 0 {
        return Err(Error::Config("excursion level must be at least 1".into()));
    }
    raster_with(rz, resolution, |x| if x >= k { 255 } else { 0 })
}

/// Coverage shading `255 · min(X, k_max) / k_max`.
pub fn raster_coverage(rz: &Realization, resolution: usize, k_max: usize) -> Result<Bitmap> {
    if k_max == 0 {
        return Err(Error::Config("shading level must be at least 1".into()));
    }
    raster_with(rz, resolution, |x| (255 * x.min(k_max) / k_max) as u8)
}

/// Binary portable graymap (P5).
pub fn write_pgm<W: Write>(bitmap: &Bitmap, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", bitmap.width, bitmap.height)?;
    out.write_all(&bitmap.pixels)?;
    Ok(())
}
