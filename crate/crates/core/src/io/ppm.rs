use crate::analysis::Grid2d;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }
}

/// Colour ramp from cold to hot: dark blue, light blue, green, yellow, orange, red.
pub const COLOR_STOPS: [(f64, Rgb); 6] = [
    (0.0, Rgb::new(0, 0, 139)),
    (0.2, Rgb::new(0, 128, 255)),
    (0.4, Rgb::new(0, 200, 0)),
    (0.6, Rgb::new(255, 255, 0)),
    (0.8, Rgb::new(255, 140, 0)),
    (1.0, Rgb::new(255, 0, 0)),
];

/// Piecewise-linear lookup in [`COLOR_STOPS`]; input is clamped to `[0, 1]`, channels are
/// truncated toward zero.
pub fn colormap_lookup(t_norm: f64) -> Result<Rgb> {
    if t_norm.is_nan() {
        return Err(Error::invalid("colormap input is NaN"));
    }
    let t = t_norm.clamp(0.0, 1.0);
    let seg = COLOR_STOPS
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(COLOR_STOPS.len() - 2);
    let (t0, c0) = COLOR_STOPS[seg];
    let (t1, c1) = COLOR_STOPS[seg + 1];
    let f = (t - t0) / (t1 - t0);
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).clamp(0.0, 255.0) as u8;
    Ok(Rgb::new(lerp(c0.r, c1.r), lerp(c0.g, c1.g), lerp(c0.b, c1.b)))
}

/// Binary PPM (P6), one pixel per cell. Row 0 is the top of the die.
pub fn render_ppm(grid: &Grid2d, t_min: f64, t_max: f64) -> Result<Vec<u8>> {
    if grid.values.is_empty() || grid.nx == 0 || grid.ny == 0 {
        return Err(Error::EmptyField);
    }
    if !(t_max > t_min) {
        return Err(Error::invalid(format!("t_max ({t_max}) must exceed t_min ({t_min})")));
    }
    let header = format!("P6\n{} {}\n255\n", grid.nx, grid.ny);
    let mut out = Vec::with_capacity(header.len() + 3 * grid.values.len());
    out.extend_from_slice(header.as_bytes());
    for iy in (0..grid.ny).rev() {
        for ix in 0..grid.nx {
            let t = grid.get(ix, iy);
            let c = colormap_lookup(((t - t_min) / (t_max - t_min)).clamp(0.0, 1.0))?;
            out.extend_from_slice(&[c.r, c.g, c.b]);
        }
    }
    Ok(out)
}

/// [`render_ppm`] normalised to the grid's own range; a uniform grid renders as the coldest
/// colour.
pub fn render_ppm_auto(grid: &Grid2d) -> Result<Vec<u8>> {
    let (lo, hi) = grid.range().ok_or(Error::EmptyField)?;
    render_ppm(grid, lo, if hi > lo { hi } else { lo + 1.0 })
}
