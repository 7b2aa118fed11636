//! Direct sampling indicator `I(z) = |sum_j u^inf(xh_j) e^{ik xh_j . z}|` and
//! a heuristic that turns its bright ridges into flat initial cracks.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::FarFieldSet;
use crate::geometry::{ChebCrack, Point2};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Axis-aligned sampling rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub const fn square(half: f64) -> Self {
        Bounds { x_min: -half, x_max: half, y_min: -half, y_max: half }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::square(4.0)
    }
}

/// Indicator values on a regular grid, row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorGrid {
    pub bounds: Bounds,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub k: f64,
    pub d: Point2,
}

impl IndicatorGrid {
    pub fn point(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(self.bounds.x_min + ix as f64 * self.spacing, self.bounds.y_min + iy as f64 * self.spacing)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// Location and value of the largest entry (first one on ties).
    pub fn argmax(&self) -> (Point2, f64) {
        let (idx, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        (self.point(idx % self.nx, idx / self.nx), v)
    }

    pub fn max(&self) -> f64 {
        self.argmax().1
    }
}

fn axis_count(lo: f64, hi: f64, h: f64) -> usize {
    ((hi - lo) / h + 1e-9).floor() as usize + 1
}

/// Evaluate the indicator of `data` on the grid `bounds` with step `spacing`.
pub fn dsm_indicator(data: &FarFieldSet, bounds: Bounds, spacing: f64) -> Result<IndicatorGrid> {
    if data.values.is_empty() || data.values.len() != data.directions.len() {
        return Err(Error::Shape("indicator needs at least one far-field sample"));
    }
    if !(spacing > 0.0) || !(bounds.x_max >= bounds.x_min) || !(bounds.y_max >= bounds.y_min) {
        return Err(Error::Domain("grid spacing must be positive and bounds ordered"));
    }
    let nx = axis_count(bounds.x_min, bounds.x_max, spacing);
    let ny = axis_count(bounds.y_min, bounds.y_max, spacing);
    let k = data.k;
    // e^{ik xh.z} = e^{ik xh_x x} e^{ik xh_y y}
    let phase_x: Vec<Vec<Complex64>> = (0..nx)
        .map(|i| {
            let x = bounds.x_min + i as f64 * spacing;
            data.directions.iter().zip(&data.values).map(|(xh, u)| u * Complex64::from_polar(1.0, k * xh.x * x)).collect()
        })
        .collect();
    let phase_y: Vec<Vec<Complex64>> = (0..ny)
        .map(|j| {
            let y = bounds.y_min + j as f64 * spacing;
            data.directions.iter().map(|xh| Complex64::from_polar(1.0, k * xh.y * y)).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(nx * ny);
    for py in &phase_y {
        for px in &phase_x {
            values.push(px.iter().zip(py).map(|(a, b)| a * b).sum::<Complex64>().norm());
        }
    }
    Ok(IndicatorGrid { bounds, spacing, nx, ny, values, k, d: data.d })
}

/// Segments found by [`extract_initial_cracks`].
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub cracks: Vec<ChebCrack>,
    /// Fewer bright components than requested cracks.
    pub shortage: bool,
}

/// Flat segments through the `n_cracks` largest bright regions of the indicator.
///
/// Regions are the components of `{I >= 0.7 max I}`, merged when each one's
/// centroid height lies within the other's vertical range (the two tip lobes
/// of one crack). If that leaves fewer than `n_cracks` regions the threshold
/// drops in steps of 0.05 down to 0.5 before a shortage is reported.
pub fn extract_initial_cracks(grid: &IndicatorGrid, n_cracks: usize) -> Result<Extraction> {
    if n_cracks == 0 {
        return Err(Error::Domain("need at least one crack"));
    }
    for step in 0..=4 {
        let ex = extract_with_threshold(grid, n_cracks, 0.7 - 0.05 * step as f64)?;
        if !ex.shortage {
            return Ok(ex);
        }
    }
    extract_with_threshold(grid, n_cracks, 0.7)
}

/// One pass of [`extract_initial_cracks`] at a fixed fraction of the maximum.
pub fn extract_with_threshold(grid: &IndicatorGrid, n_cracks: usize, fraction: f64) -> Result<Extraction> {
    if n_cracks == 0 {
        return Err(Error::Domain("need at least one crack"));
    }
    let level = fraction * grid.max();
    let mut regions = merge_same_height(grid, components_above(grid, level));
    regions.sort_by(|a, b| b.len().cmp(&a.len()));
    let shortage = regions.len() < n_cracks;
    let cracks = regions.iter().take(n_cracks).map(|c| fit_segment(grid, c)).collect();
    Ok(Extraction { cracks, shortage })
}

/// Weighted centroid height and vertical extent of a component.
fn height_profile(grid: &IndicatorGrid, cells: &[usize]) -> (f64, f64, f64) {
    let (mut w, mut wy, mut lo, mut hi) = (0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY);
    for &c in cells {
        let y = grid.point(c % grid.nx, c / grid.nx).y;
        let v = grid.values[c];
        w += v;
        wy += v * y;
        lo = lo.min(y);
        hi = hi.max(y);
    }
    (wy / w, lo, hi)
}

fn merge_same_height(grid: &IndicatorGrid, comps: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let profiles: Vec<(f64, f64, f64)> = comps.iter().map(|c| height_profile(grid, c)).collect();
    let mut root: Vec<usize> = (0..comps.len()).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for i in 0..comps.len() {
        for j in i + 1..comps.len() {
            let (yi, lo_i, hi_i) = profiles[i];
            let (yj, lo_j, hi_j) = profiles[j];
            if (lo_j..=hi_j).contains(&yi) && (lo_i..=hi_i).contains(&yj) {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = alloc::vec![usize::MAX; comps.len()];
    for (i, cells) in comps.into_iter().enumerate() {
        let r = find(&mut root, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].extend(cells);
    }
    out
}

/// 4-connected components of cells with value `>= level`, in scan order.
fn components_above(grid: &IndicatorGrid, level: f64) -> Vec<Vec<usize>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut label = alloc::vec![usize::MAX; nx * ny];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..nx * ny {
        if label[start] != usize::MAX || !(grid.values[start] >= level) {
            continue;
        }
        let id = out.len();
        let mut cells = Vec::new();
        let mut stack = alloc::vec![start];
        label[start] = id;
        while let Some(c) = stack.pop() {
            cells.push(c);
            let (ix, iy) = (c % nx, c / nx);
            let mut visit = |n: usize| {
                if label[n] == usize::MAX && grid.values[n] >= level {
                    label[n] = id;
                    stack.push(n);
                }
            };
            if ix > 0 {
                visit(c - 1);
            }
            if ix + 1 < nx {
                visit(c + 1);
            }
            if iy > 0 {
                visit(c - nx);
            }
            if iy + 1 < ny {
                visit(c + nx);
            }
        }
        cells.sort_unstable();
        out.push(cells);
    }
    out
}

/// Indicator-weighted centroid and principal axis; the segment's `x`-extent
/// along that axis, clipped to the component, gives the half-length.
fn fit_segment(grid: &IndicatorGrid, cells: &[usize]) -> ChebCrack {
    let pts: Vec<(Point2, f64)> = cells.iter().map(|&c| (grid.point(c % grid.nx, c / grid.nx), grid.values[c])).collect();
    let w: f64 = pts.iter().map(|p| p.1).sum();
    let cx = pts.iter().map(|(p, v)| p.x * v).sum::<f64>() / w;
    let cy = pts.iter().map(|(p, v)| p.y * v).sum::<f64>() / w;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (p, v) in &pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += v * dx * dx;
        sxy += v * dx * dy;
        syy += v * dy * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let axis = Point2::new(angle.cos(), angle.sin());
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, _)| {
        let t = (p.x - cx) * axis.x + (p.y - cy) * axis.y;
        (lo.min(t), hi.max(t))
    });
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (p, _)| (a.min(p.x), b.max(p.x)));
    let x_lo = (cx + lo * axis.x.abs()).max(xmin);
    let x_hi = (cx + hi * axis.x.abs()).min(xmax);
    let half = (0.5 * (x_hi - x_lo)).max(0.5 * grid.spacing);
    ChebCrack::segment(0.5 * (x_lo + x_hi), half, cy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::observation_directions;
    use alloc::vec;

    fn set(values: Vec<Complex64>) -> FarFieldSet {
        FarFieldSet {
            k: 3.0,
            d: Point2::new(1.0, 0.0),
            directions: observation_directions(values.len()),
            values,
            delta: 0.0,
            seed: None,
        }
    }

    fn synthetic_point_source(z0: Point2) -> FarFieldSet {
        let dirs = observation_directions(32);
        let values = dirs.iter().map(|xh| Complex64::from_polar(1.0, -3.0 * xh.dot(z0))).collect();
        set(values)
    }

    #[test]
    fn zero_data_gives_zero_indicator() {
        let g = dsm_indicator(&set(vec![Complex64::new(0.0, 0.0); 32]), Bounds::square(1.0), 0.25).unwrap();
        assert_eq!((g.nx, g.ny), (9, 9));
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn point_source_peaks_at_its_location() {
        let z0 = Point2::new(0.5, -1.0);
        let g = dsm_indicator(&synthetic_point_source(z0), Bounds::square(2.0), 0.05).unwrap();
        let (p, v) = g.argmax();
        assert!(p.dist(z0) < 1e-9);
        assert!((v - 32.0).abs() < 1e-9);
    }

    #[test]
    fn modulation_translates_the_indicator() {
        let base = synthetic_point_source(Point2::new(0.2, 0.1));
        let shift = Point2::new(0.5, -0.25);
        let mut moved = base.clone();
        for (v, xh) in moved.values.iter_mut().zip(&moved.directions) {
            *v *= Complex64::from_polar(1.0, -3.0 * xh.dot(shift));
        }
        let a = dsm_indicator(&base, Bounds::square(1.0), 0.25).unwrap();
        let b = dsm_indicator(&moved, Bounds { x_min: -0.5, x_max: 1.5, y_min: -1.25, y_max: 0.75 }, 0.25).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn phase_invariance_and_triangle_inequality() {
        let a = synthetic_point_source(Point2::new(0.5, 0.0));
        let b = synthetic_point_source(Point2::new(-1.0, 1.0));
        let mut rotated = a.clone();
        rotated.values.iter_mut().for_each(|v| *v *= Complex64::from_polar(1.0, 0.7));
        let mut sum = a.clone();
        for (v, w) in sum.values.iter_mut().zip(&b.values) {
            *v += w;
        }
        let bounds = Bounds::square(2.0);
        let ia = dsm_indicator(&a, bounds, 0.1).unwrap();
        let ib = dsm_indicator(&b, bounds, 0.1).unwrap();
        let ir = dsm_indicator(&rotated, bounds, 0.1).unwrap();
        let is = dsm_indicator(&sum, bounds, 0.1).unwrap();
        for i in 0..ia.values.len() {
            assert!((ia.values[i] - ir.values[i]).abs() < 1e-12);
            assert!(is.values[i] <= ia.values[i] + ib.values[i] + 1e-12);
        }
    }

    #[test]
    fn single_peak_gives_segment_through_centroid() {
        let z0 = Point2::new(-0.5, 0.75);
        let g = dsm_indicator(&synthetic_point_source(z0), Bounds::square(2.0), 0.05).unwrap();
        let ex = extract_initial_cracks(&g, 1).unwrap();
        assert!(!ex.shortage);
        let c = &ex.cracks[0];
        assert!((c.d0 - z0.x).abs() < 0.05 && (c.c[0] - z0.y).abs() < 0.05);
        assert!(c.d1 > 0.0);
    }

    #[test]
    fn threshold_at_max_reports_shortage() {
        let g = dsm_indicator(&synthetic_point_source(Point2::new(0.0, 0.0)), Bounds::square(1.0), 0.1).unwrap();
        let ex = extract_with_threshold(&g, 3, 1.0).unwrap();
        assert!(ex.shortage);
        assert_eq!(ex.cracks.len(), 1);
        assert!(extract_initial_cracks(&g, 0).is_err());
    }

    #[test]
    fn tip_lobes_at_one_height_merge() {
        let dirs = observation_directions(32);
        let (a, b) = (Point2::new(-1.0, 0.5), Point2::new(1.0, 0.5));
        let values = dirs.iter().map(|xh| Complex64::from_polar(1.0, -3.0 * xh.dot(a)) + Complex64::from_polar(1.0, -3.0 * xh.dot(b))).collect();
        let g = dsm_indicator(&set(values), Bounds::square(2.0), 0.05).unwrap();
        let ex = extract_with_threshold(&g, 1, 0.7).unwrap();
        let c = &ex.cracks[0];
        assert!(c.d0.abs() < 0.05 && (c.c[0] - 0.5).abs() < 0.05 && c.d1 > 0.9, "{c:?}");
    }
}
