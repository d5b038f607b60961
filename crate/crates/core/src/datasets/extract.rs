//! Hand-computable image statistics: per-cell HSV moments and per-cell
//! sharpness.

use super::raster::RasterImage;
use crate::error::{F2sError, Result};
use crate::numerics::Tensor1;

/// Hexcone RGB → HSV with every component in [0, 1]. Gray pixels get hue 0.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [h, s, v]
}

/// Which of H, S, V to report. Output order is always H, S, V.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelSet {
    pub h: bool,
    pub s: bool,
    pub v: bool,
}

impl ChannelSet {
    pub const ALL: ChannelSet = ChannelSet { h: true, s: true, v: true };

    pub fn count(&self) -> usize {
        usize::from(self.h) + usize::from(self.s) + usize::from(self.v)
    }

    fn indices(&self) -> Vec<usize> {
        [self.h, self.s, self.v]
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
            .collect()
    }
}

impl std::str::FromStr for ChannelSet {
    type Err = F2sError;

    /// Letters from `HSV` in any case and order, e.g. `"hs"` or `"V"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = ChannelSet { h: false, s: false, v: false };
        for c in s.chars().filter(|c| !matches!(c, ',' | ' ')) {
            match c.to_ascii_uppercase() {
                'H' => set.h = true,
                'S' => set.s = true,
                'V' => set.v = true,
                other => return Err(F2sError::config(format!("unknown channel {other:?}"))),
            }
        }
        if set.count() == 0 {
            return Err(F2sError::config("no channels selected"));
        }
        Ok(set)
    }
}

/// Start/end of each of `g` cells along an axis of length `len`. The last
/// cell absorbs the remainder.
fn cell_bounds(len: usize, g: usize) -> Vec<(usize, usize)> {
    let step = len / g;
    (0..g)
        .map(|i| {
            let start = i * step;
            let end = if i + 1 == g { len } else { start + step };
            (start, end)
        })
        .collect()
}

/// Population mean and variance; an empty slice yields (0, 0).
fn moments(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn check_grid(g: usize) -> Result<()> {
    if g == 0 {
        return Err(F2sError::config("grid size must be at least 1"));
    }
    Ok(())
}

/// Per cell (row-major), per selected channel: mean then variance.
/// Length `g * g * channels * 2`.
pub fn hsv_grid_stats(img: &RasterImage, g: usize, channels: ChannelSet) -> Result<Tensor1> {
    check_grid(g)?;
    let hsv: Vec<[f64; 3]> = img.pixels().iter().map(|&p| rgb_to_hsv(p)).collect();
    let rows = cell_bounds(img.height(), g);
    let cols = cell_bounds(img.width(), g);
    let idx = channels.indices();
    let mut out = Vec::with_capacity(g * g * idx.len() * 2);
    let mut buf = Vec::new();
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            for &c in &idx {
                buf.clear();
                for y in y0..y1 {
                    buf.extend((x0..x1).map(|x| hsv[y * img.width() + x][c]));
                }
                let (m, v) = moments(&buf);
                out.push(m);
                out.push(v);
            }
        }
    }
    Ok(Tensor1::new(out))
}

fn luma(p: [u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// 4-neighbour Laplacian of luma. Out-of-range neighbours take the value of
/// the nearest edge pixel, so flat regions (including at the border) give 0.
pub fn laplacian(img: &RasterImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let l: Vec<f64> = img.pixels().iter().map(|&p| luma(p)).collect();
    let at = |x: usize, y: usize| l[y * w + x];
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let c = at(x, y);
            let left = at(x.saturating_sub(1), y);
            let right = at((x + 1).min(w - 1), y);
            let up = at(x, y.saturating_sub(1));
            let down = at(x, (y + 1).min(h - 1));
            out[y * w + x] = 4.0 * c - left - right - up - down;
        }
    }
    out
}

/// Per cell (row-major): variance of the luma Laplacian. Length `g * g`.
pub fn sharpness_grid_stats(img: &RasterImage, g: usize) -> Result<Tensor1> {
    check_grid(g)?;
    let lap = laplacian(img);
    let rows = cell_bounds(img.height(), g);
    let cols = cell_bounds(img.width(), g);
    let mut out = Vec::with_capacity(g * g);
    let mut buf = Vec::new();
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            buf.clear();
            for y in y0..y1 {
                buf.extend_from_slice(&lap[y * img.width() + x0..y * img.width() + x1]);
            }
            out.push(moments(&buf).1);
        }
    }
    Ok(Tensor1::new(out))
}
