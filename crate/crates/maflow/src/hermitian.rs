//! Constant Hermitian matrices (cohomology representatives) and per-sample
//! Hermitian matrix fields (coefficients of (1,1)-forms).
//!
//! Storage is dimension-specialized: for n = 1 a single real entry, for
//! n = 2 the two real diagonal entries plus the complex off-diagonal.
//! Hermitian symmetry therefore holds exactly by layout.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fastmath::compensated_sum;
use crate::grid::{Grid, ScalarField};

/// A constant Hermitian n-by-n matrix, n = 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HermitianMatrix {
    Dim1(f64),
    Dim2 { a11: f64, a22: f64, a12: Complex64 },
}

impl HermitianMatrix {
    pub fn scalar(a: f64) -> Self {
        HermitianMatrix::Dim1(a)
    }

    pub fn two_by_two(a11: f64, a22: f64, a12: Complex64) -> Self {
        HermitianMatrix::Dim2 { a11, a22, a12 }
    }

    pub fn identity(n: usize) -> Result<Self> {
        match n {
            1 => Ok(HermitianMatrix::Dim1(1.0)),
            2 => Ok(HermitianMatrix::two_by_two(1.0, 1.0, Complex64::new(0.0, 0.0))),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn zero(n: usize) -> Result<Self> {
        match n {
            1 => Ok(HermitianMatrix::Dim1(0.0)),
            2 => Ok(HermitianMatrix::two_by_two(0.0, 0.0, Complex64::new(0.0, 0.0))),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            HermitianMatrix::Dim1(_) => 1,
            HermitianMatrix::Dim2 { .. } => 2,
        }
    }

    pub fn det(&self) -> f64 {
        match self {
            HermitianMatrix::Dim1(a) => *a,
            HermitianMatrix::Dim2 { a11, a22, a12 } => a11 * a22 - a12.norm_sqr(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            HermitianMatrix::Dim1(a) => *a,
            HermitianMatrix::Dim2 { a11, a22, a12 } => {
                let mid = 0.5 * (a11 + a22);
                let rad = (0.25 * (a11 - a22) * (a11 - a22) + a12.norm_sqr()).sqrt();
                mid - rad
            }
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        match (self, other) {
            (HermitianMatrix::Dim1(a), HermitianMatrix::Dim1(b)) => {
                Ok(HermitianMatrix::Dim1(a + b))
            }
            (
                HermitianMatrix::Dim2 { a11, a22, a12 },
                HermitianMatrix::Dim2 {
                    a11: b11,
                    a22: b22,
                    a12: b12,
                },
            ) => Ok(HermitianMatrix::two_by_two(a11 + b11, a22 + b22, a12 + b12)),
            _ => Err(Error::DimensionMismatch(self.n(), other.n())),
        }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> HermitianMatrix {
        match self {
            HermitianMatrix::Dim1(a) => HermitianMatrix::Dim1(a * s),
            HermitianMatrix::Dim2 { a11, a22, a12 } => {
                HermitianMatrix::two_by_two(a11 * s, a22 * s, a12 * s)
            }
        }
    }
}

/// A Hermitian matrix field sampled on a grid.
///
/// Component layout: n = 1 stores `[h11]`; n = 2 stores
/// `[h11, h22, Re h12, Im h12]`, each a plain sample array.
#[derive(Debug, Clone)]
pub struct HermitianField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl HermitianField {
    pub(crate) fn new_zero(grid: Grid) -> Self {
        let m = grid.samples();
        let ncomp = component_count(grid.n());
        HermitianField {
            grid,
            comps: vec![vec![0.0; m]; ncomp],
        }
    }

    pub(crate) fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), component_count(grid.n()));
        debug_assert!(comps.iter().all(|c| c.len() == grid.samples()));
        HermitianField { grid, comps }
    }

    /// A spatially constant field.
    pub fn constant(grid: Grid, matrix: &HermitianMatrix) -> Result<Self> {
        if matrix.n() != grid.n() {
            return Err(Error::DimensionMismatch(matrix.n(), grid.n()));
        }
        let m = grid.samples();
        let comps = match matrix {
            HermitianMatrix::Dim1(a) => vec![vec![*a; m]],
            HermitianMatrix::Dim2 { a11, a22, a12 } => vec![
                vec![*a11; m],
                vec![*a22; m],
                vec![a12.re; m],
                vec![a12.im; m],
            ],
        };
        Ok(HermitianField { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Component sample arrays in the storage order documented on the type.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    /// The matrix at one sample.
    pub fn at(&self, idx: usize) -> HermitianMatrix {
        match self.grid.n() {
            1 => HermitianMatrix::Dim1(self.comps[0][idx]),
            _ => HermitianMatrix::two_by_two(
                self.comps[0][idx],
                self.comps[1][idx],
                Complex64::new(self.comps[2][idx], self.comps[3][idx]),
            ),
        }
    }

    /// Pointwise determinant: the Monge-Ampère density of the form under the
    /// pinned volume normalization. Negative values are allowed here;
    /// positivity is the caller's concern.
    pub fn det_field(&self) -> ScalarField {
        let m = self.grid.samples();
        let mut out = vec![0.0f64; m];
        self.det_into(&mut out);
        ScalarField::from_values(self.grid.clone(), out).expect("determinant of finite field")
    }

    pub(crate) fn det_into(&self, out: &mut [f64]) {
        match self.grid.n() {
            1 => out.copy_from_slice(&self.comps[0]),
            _ => {
                let (h11, h22, re, im) =
                    (&self.comps[0], &self.comps[1], &self.comps[2], &self.comps[3]);
                for i in 0..out.len() {
                    out[i] = h11[i] * h22[i] - (re[i] * re[i] + im[i] * im[i]);
                }
            }
        }
    }

    /// Pointwise smallest eigenvalue (closed form for the 2x2 case).
    pub fn min_eigenvalue_field(&self) -> ScalarField {
        let m = self.grid.samples();
        let mut out = vec![0.0f64; m];
        match self.grid.n() {
            1 => out.copy_from_slice(&self.comps[0]),
            _ => {
                let (h11, h22, re, im) =
                    (&self.comps[0], &self.comps[1], &self.comps[2], &self.comps[3]);
                for i in 0..m {
                    let mid = 0.5 * (h11[i] + h22[i]);
                    let rad = (0.25 * (h11[i] - h22[i]) * (h11[i] - h22[i])
                        + re[i] * re[i]
                        + im[i] * im[i])
                        .sqrt();
                    out[i] = mid - rad;
                }
            }
        }
        ScalarField::from_values(self.grid.clone(), out).expect("eigenvalues of finite field")
    }

    /// Global minimum of the smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        match self.grid.n() {
            1 => self.comps[0].iter().copied().fold(f64::INFINITY, f64::min),
            _ => {
                let (h11, h22, re, im) =
                    (&self.comps[0], &self.comps[1], &self.comps[2], &self.comps[3]);
                let mut mn = f64::INFINITY;
                for i in 0..h11.len() {
                    let mid = 0.5 * (h11[i] + h22[i]);
                    let rad = (0.25 * (h11[i] - h22[i]) * (h11[i] - h22[i])
                        + re[i] * re[i]
                        + im[i] * im[i])
                        .sqrt();
                    mn = mn.min(mid - rad);
                }
                mn
            }
        }
    }

    /// Mean of each component, as a constant Hermitian matrix. For a field of
    /// the form `A + complex_hessian(potential)` this recovers `A` up to
    /// rounding (the Hessian has exactly zero mean mode by mode).
    pub fn mean_matrix(&self) -> HermitianMatrix {
        let m = self.grid.samples() as f64;
        let mean = |c: &[f64]| compensated_sum(c) / m;
        match self.grid.n() {
            1 => HermitianMatrix::Dim1(mean(&self.comps[0])),
            _ => HermitianMatrix::two_by_two(
                mean(&self.comps[0]),
                mean(&self.comps[1]),
                Complex64::new(mean(&self.comps[2]), mean(&self.comps[3])),
            ),
        }
    }

    pub fn add(&self, other: &HermitianField) -> Result<HermitianField> {
        self.grid.check_same(&other.grid)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(HermitianField {
            grid: self.grid.clone(),
            comps,
        })
    }

    pub(crate) fn axpy(&mut self, s: f64, other: &HermitianField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn add_constant(&self, matrix: &HermitianMatrix) -> Result<HermitianField> {
        if matrix.n() != self.grid.n() {
            return Err(Error::DimensionMismatch(matrix.n(), self.grid.n()));
        }
        let mut out = self.clone();
        match matrix {
            HermitianMatrix::Dim1(a) => {
                for v in out.comps[0].iter_mut() {
                    *v += a;
                }
            }
            HermitianMatrix::Dim2 { a11, a22, a12 } => {
                for v in out.comps[0].iter_mut() {
                    *v += a11;
                }
                for v in out.comps[1].iter_mut() {
                    *v += a22;
                }
                for v in out.comps[2].iter_mut() {
                    *v += a12.re;
                }
                for v in out.comps[3].iter_mut() {
                    *v += a12.im;
                }
            }
        }
        Ok(out)
    }

    /// Trace of `adj(G) · H` at each sample, where `G` is this field and `H`
    /// is another Hermitian field. For n = 1 the adjugate is 1 and this is
    /// just `h11`; for n = 2 it is
    /// `g22 h11 + g11 h22 - 2 Re(conj(g12) h12)`. This is the directional
    /// derivative of `det` at `G` in direction `H`.
    pub fn adjugate_trace(&self, other: &HermitianField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let m = self.grid.samples();
        let mut out = vec![0.0f64; m];
        match self.grid.n() {
            1 => out.copy_from_slice(&other.comps[0]),
            _ => {
                let (g11, g22, gre, gim) =
                    (&self.comps[0], &self.comps[1], &self.comps[2], &self.comps[3]);
                let (h11, h22, hre, him) = (
                    &other.comps[0],
                    &other.comps[1],
                    &other.comps[2],
                    &other.comps[3],
                );
                for i in 0..m {
                    out[i] = g22[i] * h11[i] + g11[i] * h22[i]
                        - 2.0 * (gre[i] * hre[i] + gim[i] * him[i]);
                }
            }
        }
        ScalarField::from_values(self.grid.clone(), out)
    }
}

pub(crate) fn component_count(n: usize) -> usize {
    match n {
        1 => 1,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_eigenvalues() {
        let d = HermitianMatrix::two_by_two(2.0, 3.0, Complex64::new(0.0, 0.0));
        assert_eq!(d.det(), 6.0);
        assert_eq!(d.min_eigenvalue(), 2.0);

        // [[2, i], [-i, 2]] has det 3 and eigenvalues 2 +- 1
        let h = HermitianMatrix::two_by_two(2.0, 2.0, Complex64::new(0.0, 1.0));
        assert!((h.det() - 3.0).abs() < 1e-15);
        assert!((h.min_eigenvalue() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_matches_matrix() {
        let g = Grid::new(2, 8).unwrap();
        let a = HermitianMatrix::two_by_two(2.0, 3.0, Complex64::new(0.5, -0.25));
        let f = HermitianField::constant(g, &a).unwrap();
        assert_eq!(f.at(17), a);
        assert!((f.det_field().values()[3] - a.det()).abs() < 1e-15);
    }

    #[test]
    fn adjugate_trace_matches_det_derivative() {
        // d/ds det(G + sH) at s=0 equals tr(adj(G) H)
        let g = Grid::new(2, 8).unwrap();
        let ga = HermitianMatrix::two_by_two(2.0, 3.0, Complex64::new(0.4, -0.1));
        let ha = HermitianMatrix::two_by_two(0.3, -0.7, Complex64::new(-0.2, 0.6));
        let gf = HermitianField::constant(g.clone(), &ga).unwrap();
        let hf = HermitianField::constant(g, &ha).unwrap();
        let tr = gf.adjugate_trace(&hf).unwrap().values()[0];
        let s = 1e-6;
        let num = (ga.add(&ha.scaled(s)).unwrap().det() - ga.det()) / s;
        assert!((tr - num).abs() < 1e-5, "tr = {tr}, numeric = {num}");
    }
}
