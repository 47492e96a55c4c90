//! Periodic grids on the unit torus `[0,1)^{2n}` and real scalar fields
//! sampled on them.
//!
//! The torus has complex dimension `n` (1 or 2), so `2n` real axes with `N`
//! uniform samples each, `N` a power of two. Coordinates follow the
//! convention `z_j = x_j + i y_j` with axis order `(x_1, y_1[, x_2, y_2])`,
//! stored row-major with the last axis contiguous. The quadrature weight is
//! the normalized Lebesgue measure: integrating a field is taking the mean of
//! its samples, which is spectrally exact for band-limited integrands.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fastmath::{compensated_dot, compensated_sum};
use crate::spectral::Plans;

/// A periodic sampling lattice on the unit torus.
///
/// Cheap to clone (the FFT plans behind it are shared). Two grids compare
/// equal when they have the same complex dimension and resolution.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

pub(crate) struct GridInner {
    n: usize,
    res: usize,
    pub(crate) plans: Plans,
}

impl Grid {
    /// Build a grid of complex dimension `n` (1 or 2) with `res` samples per
    /// real axis. `res` must be a power of two, at least 8.
    pub fn new(n: usize, res: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if res < 8 || !res.is_power_of_two() {
            return Err(Error::InvalidResolution(res));
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                res,
                plans: Plans::new(res),
            }),
        })
    }

    /// Complex dimension (1 or 2).
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Samples per real axis.
    pub fn res(&self) -> usize {
        self.inner.res
    }

    /// Number of real axes, `2n`.
    pub fn axes(&self) -> usize {
        2 * self.inner.n
    }

    /// Total number of samples, `N^{2n}`.
    pub fn samples(&self) -> usize {
        self.inner.res.pow(self.axes() as u32)
    }

    pub(crate) fn plans(&self) -> &Plans {
        &self.inner.plans
    }

    /// Decompose a flat sample index into per-axis lattice indices
    /// (axis 0 slowest, last axis contiguous).
    pub fn lattice_index(&self, mut idx: usize, out: &mut [usize]) {
        let d = self.axes();
        debug_assert_eq!(out.len(), d);
        let res = self.res();
        for a in (0..d).rev() {
            out[a] = idx % res;
            idx /= res;
        }
    }

    /// Coordinates in `[0,1)^{2n}` of a flat sample index.
    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let d = self.axes();
        let mut lattice = [0usize; 4];
        self.lattice_index(idx, &mut lattice[..d]);
        for a in 0..d {
            out[a] = lattice[a] as f64 / self.res() as f64;
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(
                self.n(),
                self.res(),
                other.n(),
                other.res(),
            ));
        }
        Ok(())
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.res == other.inner.res
    }
}
impl Eq for Grid {}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid(n={}, N={})", self.n(), self.res())
    }
}

/// One cosine mode of a synthesized field: `amplitude * cos(2π k·x + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    /// Integer frequency vector, one entry per real axis.
    pub k: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

impl Wave {
    pub fn new(k: Vec<i64>, amplitude: f64, phase: f64) -> Self {
        Wave { k, amplitude, phase }
    }
}

/// A real scalar field sampled on a [`Grid`]. Construction rejects
/// non-finite samples; all in-crate mutations preserve finiteness or are
/// followed by validity checks in the consuming code.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.samples() {
            return Err(Error::InvalidConfig(format!(
                "field length {} does not match grid sample count {}",
                values.len(),
                grid.samples()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let m = grid.samples();
        ScalarField {
            grid,
            values: vec![0.0; m],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFiniteField);
        }
        let m = grid.samples();
        Ok(ScalarField {
            grid,
            values: vec![c; m],
        })
    }

    /// Sample a sum of cosine waves on the grid. Frequencies must be strictly
    /// below the Nyquist limit `N/2` in every axis.
    pub fn synth(grid: Grid, waves: &[Wave]) -> Result<Self> {
        let d = grid.axes();
        let limit = grid.res() as i64 / 2;
        for w in waves {
            if w.k.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "wave frequency vector has {} entries, grid has {} axes",
                    w.k.len(),
                    d
                )));
            }
            if w.k.iter().any(|&ki| ki.abs() >= limit) {
                return Err(Error::AliasedFrequency {
                    k: w.k.clone(),
                    limit,
                });
            }
            if !w.amplitude.is_finite() || !w.phase.is_finite() {
                return Err(Error::NonFiniteField);
            }
        }
        let res = grid.res();
        let m = grid.samples();
        let mut values = vec![0.0f64; m];
        let mut lattice = [0usize; 4];
        for (idx, v) in values.iter_mut().enumerate() {
            let mut rem = idx;
            for a in (0..d).rev() {
                lattice[a] = rem % res;
                rem /= res;
            }
            let mut acc = 0.0;
            for w in waves {
                let mut dot = 0.0f64;
                for a in 0..d {
                    dot += w.k[a] as f64 * lattice[a] as f64;
                }
                // k·x with x = lattice/N
                let angle = 2.0 * std::f64::consts::PI * dot / res as f64 + w.phase;
                acc += w.amplitude * angle.cos();
            }
            *v = acc;
        }
        ScalarField::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Integral against the normalized Lebesgue measure: the compensated mean
    /// of the samples.
    pub fn integrate(&self) -> f64 {
        compensated_sum(&self.values) / self.values.len() as f64
    }

    /// Integral of the pointwise product `self * other`.
    pub fn integrate_product(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(compensated_dot(&self.values, &other.values) / self.values.len() as f64)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute value over the grid.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        let values = self.values.iter().map(|v| v * s).collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        let values = self.values.iter().map(|v| v + c).collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub(crate) fn axpy(&mut self, s: f64, other: &ScalarField) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }
}

/// A boolean exclusion mask over a grid. `excluded[i] = true` means sample
/// `i` is dropped from masked sups/norms (the degeneracy neighbourhood).
#[derive(Debug, Clone)]
pub struct Mask {
    grid: Grid,
    excluded: Vec<bool>,
}

impl Mask {
    /// Mask excluding nothing.
    pub fn none(grid: Grid) -> Self {
        let m = grid.samples();
        Mask {
            grid,
            excluded: vec![false; m],
        }
    }

    pub fn from_excluded(grid: Grid, excluded: Vec<bool>) -> Result<Self> {
        if excluded.len() != grid.samples() {
            return Err(Error::InvalidConfig(
                "mask length does not match grid".into(),
            ));
        }
        Ok(Mask { grid, excluded })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn is_excluded(&self, idx: usize) -> bool {
        self.excluded[idx]
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    pub fn unmasked_fraction(&self) -> f64 {
        1.0 - self.excluded_count() as f64 / self.excluded.len() as f64
    }

    /// Dilate the excluded set by `cells` grid cells in the Chebyshev
    /// (per-axis, periodic) metric. Implemented as one max-filter sweep per
    /// axis, which is exact for the L-infinity ball.
    pub fn dilate_chebyshev(&self, cells: usize) -> Mask {
        if cells == 0 {
            return self.clone();
        }
        let res = self.grid.res();
        let d = self.grid.axes();
        let m = self.grid.samples();
        let mut cur = self.excluded.clone();
        let mut next = vec![false; m];
        for axis in 0..d {
            let stride = res.pow((d - 1 - axis) as u32);
            for (idx, slot) in next.iter_mut().enumerate() {
                let base = idx - ((idx / stride) % res) * stride;
                let pos = (idx / stride) % res;
                let mut hit = false;
                for off in 0..=2 * cells {
                    let j = (pos + res + off - cells) % res;
                    if cur[base + j * stride] {
                        hit = true;
                        break;
                    }
                }
                *slot = hit;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Mask {
            grid: self.grid.clone(),
            excluded: cur,
        }
    }
}
