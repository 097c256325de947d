//! Uniform grids, known/unknown masks and the difference stencils shared by
//! the spectral and variational imputation back-ends.
//!
//! Values are stored in row-major multi-index order: the last axis varies
//! fastest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N^d` equally spaced points on the half-open box `origin + [0, edge)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    dim: usize,
    points_per_axis: usize,
    box_origin: Vec<f64>,
    box_edge: f64,
}

impl UniformGrid {
    pub fn new(dim: usize, points_per_axis: usize, box_origin: Vec<f64>, box_edge: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points per axis, got {points_per_axis}"
            )));
        }
        if box_origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} components for a {dim}-dimensional grid",
                box_origin.len()
            )));
        }
        if !(box_edge.is_finite() && box_edge > 0.0) {
            return Err(Error::InvalidGrid(format!("box edge must be positive, got {box_edge}")));
        }
        if box_origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        points_per_axis
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        Ok(Self { dim, points_per_axis, box_origin, box_edge })
    }

    /// The grid on `[0, 2π)^d`.
    pub fn periodic(dim: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, points_per_axis, vec![0.0; dim], 2.0 * PI)
    }

    /// Rejects per-axis sizes that differ; only `N^d` grids are supported.
    pub fn from_axis_sizes(sizes: &[usize], box_origin: Vec<f64>, box_edge: f64) -> Result<Self> {
        let first = *sizes
            .first()
            .ok_or_else(|| Error::InvalidGrid("no axes given".into()))?;
        if sizes.iter().any(|&s| s != first) {
            return Err(Error::InvalidGrid(format!("anisotropic grid {sizes:?} is not supported")));
        }
        Self::new(sizes.len(), first, box_origin, box_edge)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_origin(&self) -> &[f64] {
        &self.box_origin
    }

    pub fn box_edge(&self) -> f64 {
        self.box_edge
    }

    pub fn mesh_size(&self) -> f64 {
        self.box_edge / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat offset of `index` along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dim);
        index.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.points_per_axis);
            acc * self.points_per_axis + i
        })
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim];
        for slot in index.iter_mut().rev() {
            *slot = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        index
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.mesh_size();
        self.multi_index(flat)
            .into_iter()
            .zip(&self.box_origin)
            .map(|(i, o)| o + h * i as f64)
            .collect()
    }

    /// Flat index of `index + offset` along `axis`, wrapping periodically.
    pub fn wrapped_neighbor(&self, index: &[usize], axis: usize, offset: isize) -> usize {
        let n = self.points_per_axis as isize;
        let mut shifted = index.to_vec();
        shifted[axis] = (index[axis] as isize + offset).rem_euclid(n) as usize;
        self.flat_index(&shifted)
    }
}

/// Which grid points carry prescribed values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMask {
    known: Vec<bool>,
}

impl GridMask {
    pub fn new(known: Vec<bool>) -> Self {
        Self { known }
    }

    pub fn all_known(len: usize) -> Self {
        Self { known: vec![true; len] }
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    pub fn is_known(&self, flat: usize) -> bool {
        self.known[flat]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.known
    }

    pub fn known_indices(&self) -> Vec<usize> {
        (0..self.known.len()).filter(|&i| self.known[i]).collect()
    }

    pub fn unknown_indices(&self) -> Vec<usize> {
        (0..self.known.len()).filter(|&i| !self.known[i]).collect()
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn unknown_count(&self) -> usize {
        self.known.len() - self.known_count()
    }
}

/// Values on a grid together with the mask of which ones are prescribed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
    mask: GridMask,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<f64>, mask: GridMask) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values and mask entries, got {} and {}",
                grid.len(),
                values.len(),
                mask.len()
            )));
        }
        if let Some(i) = (0..values.len()).find(|&i| mask.is_known(i) && !values[i].is_finite()) {
            return Err(Error::InvalidGrid(format!("known value at flat index {i} is not finite")));
        }
        Ok(Self { grid, values, mask })
    }

    /// Samples `f` at every grid point; the result is fully known.
    pub fn from_fn(grid: UniformGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        let mask = GridMask::all_known(grid.len());
        Self { grid, values, mask }
    }

    /// NaN entries become unknown.
    pub fn from_values_with_nan(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        let known: Vec<bool> = values.iter().map(|v| !v.is_nan()).collect();
        let values = values.into_iter().map(|v| if v.is_nan() { 0.0 } else { v }).collect();
        Self::new(grid, values, GridMask::new(known))
    }

    /// Copy with the points selected by `unknown` marked missing.
    pub fn with_unknown(&self, unknown: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        for i in 0..out.values.len() {
            if unknown(i) {
                out.mask.known[i] = false;
                out.values[i] = 0.0;
            }
        }
        out
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn mask(&self) -> &GridMask {
        &self.mask
    }

    pub fn get(&self, flat: usize) -> Result<f64> {
        if self.mask.is_known(flat) {
            Ok(self.values[flat])
        } else {
            Err(Error::UnknownValue(flat))
        }
    }

    pub fn get_at(&self, index: &[usize]) -> Result<f64> {
        self.get(self.grid.flat_index(index))
    }

    /// Raw storage; entries under unknown mask positions are placeholders.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// All values with unknown entries reported as NaN.
    pub fn values_with_nan(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.mask.as_slice())
            .map(|(&v, &k)| if k { v } else { f64::NAN })
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.unknown_count() == 0
    }

    /// Fills `indices` with `values` and marks them known.
    pub fn with_imputed(&self, indices: &[usize], values: &[f64]) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidGrid("imputed index/value length mismatch".into()));
        }
        let mut out = self.clone();
        for (&i, &v) in indices.iter().zip(values) {
            if !v.is_finite() {
                return Err(Error::Numerical(format!("imputed value at flat index {i} is not finite")));
            }
            out.values[i] = v;
            out.mask.known[i] = true;
        }
        Ok(out)
    }

    /// Every value, failing on the first unknown one.
    pub fn complete_values(&self) -> Result<&[f64]> {
        match self.mask.as_slice().iter().position(|&k| !k) {
            Some(i) => Err(Error::UnknownValue(i)),
            None => Ok(&self.values),
        }
    }
}

/// The order-`2k` central difference: coefficients `(-1)^j C(2k, j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceStencil {
    half_width: usize,
    coefficients: Vec<i64>,
}

impl DifferenceStencil {
    pub fn central(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::OutOfRange("stencil half-order k must be at least 1".into()));
        }
        Ok(Self { half_width: k, coefficients: alternating_binomial_row(2 * k) })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn order(&self) -> usize {
        2 * self.half_width
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coefficients.iter().map(|&c| c as f64).collect()
    }
}

/// `(-1)^j C(m, j)` for `j = 0..=m`.
pub fn alternating_binomial_row(m: usize) -> Vec<i64> {
    let mut row = Vec::with_capacity(m + 1);
    let mut c: i64 = 1;
    for j in 0..=m {
        row.push(if j % 2 == 0 { c } else { -c });
        c = c * (m - j) as i64 / (j as i64 + 1);
    }
    row
}

/// Undivided order-`2k` central difference of `values` at `position`.
pub fn apply_central_difference(values: &[f64], k: usize, position: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::OutOfRange("stencil half-order k must be at least 1".into()));
    }
    if position < k || position + k >= values.len() {
        return Err(Error::StencilSupport { k, position, len: values.len() });
    }
    let coefficients = alternating_binomial_row(2 * k);
    Ok(coefficients
        .iter()
        .zip(&values[position - k..=position + k])
        .map(|(&c, &v)| c as f64 * v)
        .sum())
}

/// Undivided forward difference of order `m` starting at `position`.
pub fn apply_forward_difference(values: &[f64], m: usize, position: usize) -> Result<f64> {
    if position + m >= values.len() {
        return Err(Error::StencilSupport { k: m, position, len: values.len() });
    }
    // Δ^m f(i) = Σ_j (-1)^(m-j) C(m,j) f(i+j)
    let row = alternating_binomial_row(m);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(row
        .iter()
        .zip(&values[position..=position + m])
        .map(|(&c, &v)| sign * c as f64 * v)
        .sum())
}

/// `(Δ_1^m ⋯ Δ_d^m f)(point) / h^{dm}` with forward differences that wrap
/// periodically. Every touched value must be known.
pub fn mixed_divided_difference(gf: &GridFunction, m: usize, point: &[usize]) -> Result<f64> {
    let grid = gf.grid();
    let d = grid.dim();
    if point.len() != d || point.iter().any(|&i| i >= grid.points_per_axis()) {
        return Err(Error::OutOfRange(format!("point {point:?} is not a grid multi-index")));
    }
    let row = alternating_binomial_row(m);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let weights: Vec<f64> = row.iter().map(|&c| sign * c as f64).collect();
    let n = grid.points_per_axis();
    let mut offsets = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut index = Vec::with_capacity(d);
        for axis in 0..d {
            weight *= weights[offsets[axis]];
            index.push((point[axis] + offsets[axis]) % n);
        }
        total += weight * gf.get_at(&index)?;
        // odometer over {0..=m}^d
        let mut axis = d;
        loop {
            if axis == 0 {
                let h = grid.mesh_size();
                return Ok(total / h.powi((d * m) as i32));
            }
            axis -= 1;
            offsets[axis] += 1;
            if offsets[axis] <= m {
                break;
            }
            offsets[axis] = 0;
        }
    }
}

/// Inclusive axis-aligned box of multi-indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRect {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl IndexRect {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.hi[axis] - self.lo[axis] + 1
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        index
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&i, (&l, &h))| l <= i && i <= h)
    }

    /// The box shrunk by `k` on every face (may be empty).
    pub fn inset(&self, k: usize) -> Option<IndexRect> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let l = self.lo[a] + k;
            let h = self.hi[a].checked_sub(k)?;
            if l > h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(IndexRect { lo, hi })
    }

    /// All multi-indices in row-major order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.len());
        if self.is_empty() {
            return out;
        }
        let mut cur = self.lo.clone();
        loop {
            out.push(cur.clone());
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < self.hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = self.lo[axis];
            }
        }
    }

    /// Distance in grid steps from `index` to the nearest face, per axis minimum.
    pub fn face_distance(&self, index: &[usize]) -> usize {
        (0..self.dim())
            .map(|a| (index[a] - self.lo[a]).min(self.hi[a] - index[a]))
            .min()
            .unwrap_or(0)
    }
}

/// Minimal box containing every unknown point with more than `k` grid steps
/// of clearance to each face, so that all order-`2k` stencils centred in
/// its `k`-inset are supported inside it.
pub fn bounding_patch(grid: &UniformGrid, mask: &GridMask, k: usize) -> Result<IndexRect> {
    if mask.len() != grid.len() {
        return Err(Error::InvalidGrid("mask length does not match grid".into()));
    }
    let unknown = mask.unknown_indices();
    if unknown.is_empty() {
        return Err(Error::EmptyHole);
    }
    let d = grid.dim();
    let mut min = vec![usize::MAX; d];
    let mut max = vec![0usize; d];
    for &flat in &unknown {
        for (axis, i) in grid.multi_index(flat).into_iter().enumerate() {
            min[axis] = min[axis].min(i);
            max[axis] = max[axis].max(i);
        }
    }
    let margin = k + 1;
    let last = grid.points_per_axis() - 1;
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for axis in 0..d {
        let available = min[axis].min(last - max[axis]);
        if available < margin {
            return Err(Error::MarginViolation { axis, needed: margin, available });
        }
        lo.push(min[axis] - margin);
        hi.push(max[axis] + margin);
    }
    Ok(IndexRect { lo, hi })
}
