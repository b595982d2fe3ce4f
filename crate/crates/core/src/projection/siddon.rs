//! Exact intersection lengths of a straight ray with a square pixel grid.

/// Square `size × size` grid of pixels with edge `pitch`, centred on the
/// origin. Row 0 is the top row (largest y); column 0 the leftmost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrid {
    pub size: usize,
    pub pitch: f64,
}

impl PixelGrid {
    pub fn half_width(&self) -> f64 {
        0.5 * self.size as f64 * self.pitch
    }

    /// Centre `(x, y)` of the pixel at `(row, col)`.
    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        let h = self.half_width();
        (
            -h + (col as f64 + 0.5) * self.pitch,
            h - (row as f64 + 0.5) * self.pitch,
        )
    }
}

/// Traces the line `{origin + α·dir}` (with `dir` a unit vector) through the
/// grid and returns `(pixel index, length)` for every pixel it crosses with
/// positive length. Pixel index is `row * size + col`.
pub fn trace(grid: &PixelGrid, origin: (f64, f64), dir: (f64, f64)) -> Vec<(usize, f64)> {
    let h = grid.half_width();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d == 0.0 {
            if p < -h || p > h {
                return Vec::new();
            }
        } else {
            let a = (-h - p) / d;
            let b = (h - p) / d;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    let tiny = 1e-12 * grid.pitch;
    if !(hi - lo > tiny) {
        return Vec::new();
    }

    let mut alphas = vec![lo, hi];
    for (p, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d == 0.0 {
            continue;
        }
        for k in 1..grid.size {
            let plane = -h + k as f64 * grid.pitch;
            let a = (plane - p) / d;
            if a > lo && a < hi {
                alphas.push(a);
            }
        }
    }
    alphas.sort_by(f64::total_cmp);

    let last = grid.size as isize - 1;
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(alphas.len());
    for w in alphas.windows(2) {
        let len = w[1] - w[0];
        if len <= tiny {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let x = origin.0 + mid * dir.0;
        let y = origin.1 + mid * dir.1;
        let col = (((x + h) / grid.pitch).floor() as isize).clamp(0, last) as usize;
        let row = (((h - y) / grid.pitch).floor() as isize).clamp(0, last) as usize;
        let idx = row * grid.size + col;
        match out.last_mut() {
            Some((j, l)) if *j == idx => *l += len,
            _ => out.push((idx, len)),
        }
    }
    out
}
