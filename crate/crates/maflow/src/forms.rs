//! Closed (1,1)-forms on the torus and the reference pencil.
//!
//! Every form is stored as a constant Hermitian matrix (its cohomology
//! representative) plus the complex Hessian of a fixed mean-zero shape
//! potential. On the torus this makes cohomology bookkeeping exact: the class
//! volume of a background is literally the determinant of its matrix, no
//! quadrature involved, and adding `i d dbar` of any potential cannot change
//! it.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::hermitian::{HermitianField, HermitianMatrix};
use crate::spectral;

/// A closed real (1,1)-form: constant part `A` plus `i d dbar` of a shape
/// potential. The potential must have zero mean (tolerance 1e-13) so that
/// the matrix part is exactly the cohomology representative.
#[derive(Debug, Clone)]
pub struct Background {
    matrix: HermitianMatrix,
    potential: ScalarField,
    /// cached complex Hessian of the potential
    hessian: HermitianField,
}

impl Background {
    pub fn new(matrix: HermitianMatrix, potential: ScalarField) -> Result<Self> {
        if matrix.n() != potential.grid().n() {
            return Err(Error::DimensionMismatch(matrix.n(), potential.grid().n()));
        }
        let mean = potential.integrate();
        if mean.abs() > 1e-13 {
            return Err(Error::NonZeroMean(mean));
        }
        let hessian = spectral::complex_hessian(&potential)?;
        Ok(Background {
            matrix,
            potential,
            hessian,
        })
    }

    /// A form with constant coefficients (zero shape potential).
    pub fn constant(grid: Grid, matrix: HermitianMatrix) -> Result<Self> {
        Background::new(matrix, ScalarField::zeros(grid))
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub(crate) fn potential_hessian(&self) -> &HermitianField {
        &self.hessian
    }

    /// Coefficient field of the form itself: `A + complex_hessian(potential)`.
    pub fn coefficient_field(&self) -> HermitianField {
        self.hessian
            .add_constant(&self.matrix)
            .expect("dimensions checked at construction")
    }

    /// Class volume `[omega]^n = det A`, exact by construction.
    pub fn class_volume(&self) -> f64 {
        self.matrix.det()
    }

    /// Pointwise linear combination `self + s * other` (same grid).
    pub fn combine(&self, s: f64, other: &Background) -> Result<Background> {
        self.grid().check_same(other.grid())?;
        let matrix = self.matrix.add(&other.matrix.scaled(s))?;
        let mut potential = self.potential.clone();
        potential.axpy(s, &other.potential);
        let mut hessian = self.hessian.clone();
        hessian.axpy(s, &other.hessian);
        Ok(Background {
            matrix,
            potential,
            hessian,
        })
    }
}

/// The reference data of a run: the initial Kähler form, the limit form,
/// their difference, and the target density with unit mass.
#[derive(Debug, Clone)]
pub struct Pencil {
    omega0: Background,
    omega_inf: Background,
    chi: Background,
    density: ScalarField,
}

impl Pencil {
    /// Validates: densities on one grid, `mean(density) = 1` within 1e-12,
    /// `omega0 > 0` pointwise. When `require_unit_limit_class` is set, also
    /// checks `det(A_inf) = 1` within 1e-12 (the normalized-limit-volume
    /// convention).
    pub fn new(
        omega0: Background,
        omega_inf: Background,
        density: ScalarField,
        require_unit_limit_class: bool,
    ) -> Result<Self> {
        omega0.grid().check_same(omega_inf.grid())?;
        omega0.grid().check_same(density.grid())?;
        let mean = density.integrate();
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "volume density must have mean 1, got {mean:.15}"
            )));
        }
        if density.min() <= 0.0 {
            return Err(Error::InvalidConfig(
                "volume density must be strictly positive".into(),
            ));
        }
        if require_unit_limit_class && (omega_inf.class_volume() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "limit class volume must be 1, got {:.15}",
                omega_inf.class_volume()
            )));
        }
        let min0 = omega0.coefficient_field().min_eigenvalue();
        if min0 <= 0.0 {
            return Err(Error::Positivity {
                min_eig: min0,
                floor: 0.0,
            });
        }
        let chi = omega0.combine(-1.0, &omega_inf)?;
        Ok(Pencil {
            omega0,
            omega_inf,
            chi,
            density,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.omega0.grid()
    }

    pub fn omega0(&self) -> &Background {
        &self.omega0
    }

    pub fn omega_inf(&self) -> &Background {
        &self.omega_inf
    }

    pub fn chi(&self) -> &Background {
        &self.chi
    }

    /// The volume density (mean exactly renormalized to 1 at construction).
    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    /// The interpolating reference form at time `t >= 0`:
    /// `omega_t = omega_inf + e^{-t} chi`.
    pub fn reference_form_at(&self, t: f64) -> Result<Background> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        self.omega_inf.combine((-t).exp(), &self.chi)
    }

    /// Class matrix of the reference form at time `t`.
    pub fn class_matrix_at(&self, t: f64) -> Result<HermitianMatrix> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        self.omega_inf
            .matrix()
            .add(&self.chi.matrix().scaled((-t).exp()))
    }

    /// Class volume `V_t = det(A_inf + e^{-t} A_chi)`, exact.
    pub fn class_volume_at(&self, t: f64) -> Result<f64> {
        Ok(self.class_matrix_at(t)?.det())
    }
}

/// Metric coefficient field of a background perturbed by a potential:
/// `A + complex_hessian(psi0 + phi)`.
pub fn metric_field(bg: &Background, phi: &ScalarField) -> Result<HermitianField> {
    bg.grid().check_same(phi.grid())?;
    let h_phi = spectral::complex_hessian(phi)?;
    let mut total = bg.potential_hessian().clone();
    total.axpy(1.0, &h_phi);
    total.add_constant(bg.matrix())
}

/// Pointwise Monge-Ampère density of a metric coefficient field (its
/// determinant under the pinned volume normalization).
pub fn ma_density(g: &HermitianField) -> ScalarField {
    g.det_field()
}

/// Mixed pairing of two constant representatives against the pinned volume
/// normalization. For n = 1 this is just the scalar `A`; for n = 2 it is the
/// mixed determinant `A11 B22 + A22 B11 - A12 B21 - A21 B12`, equal to
/// `det(A+B) - det(A) - det(B)`.
pub fn mixed_class_pairing(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    Ok(match (a, b) {
        (HermitianMatrix::Dim1(x), HermitianMatrix::Dim1(_)) => *x,
        (
            HermitianMatrix::Dim2 { a11, a22, a12 },
            HermitianMatrix::Dim2 {
                a11: b11,
                a22: b22,
                a12: b12,
            },
        ) => a11 * b22 + a22 * b11 - 2.0 * (a12.re * b12.re + a12.im * b12.im),
        _ => unreachable!("dimension equality checked above"),
    })
}

/// Ricci coefficient field of a positive density: `-i d dbar log F`.
/// Used as the flat-limit diagnostic (a Calabi-Yau density has zero Ricci
/// form).
pub fn ricci_form(density: &ScalarField) -> Result<HermitianField> {
    if density.min() <= 0.0 {
        return Err(Error::SingularMetric(density.min()));
    }
    let logf = ScalarField::from_values(
        density.grid().clone(),
        density.values().iter().map(|v| v.ln()).collect(),
    )?;
    let mut h = spectral::complex_hessian(&logf)?;
    for comp in h.components_mut() {
        for v in comp.iter_mut() {
            *v = -*v;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Wave;
    use rustfft::num_complex::Complex64;

    const PI: f64 = std::f64::consts::PI;

    fn flat_pencil_n1(grid: &Grid, a0: f64, a_inf: f64) -> Pencil {
        let omega0 = Background::constant(grid.clone(), HermitianMatrix::Dim1(a0)).unwrap();
        let omega_inf = Background::constant(grid.clone(), HermitianMatrix::Dim1(a_inf)).unwrap();
        let density = ScalarField::constant(grid.clone(), 1.0).unwrap();
        Pencil::new(omega0, omega_inf, density, false).unwrap()
    }

    #[test]
    fn reference_form_interpolates() {
        let grid = Grid::new(1, 16).unwrap();
        let pencil = flat_pencil_n1(&grid, 2.0, 1.0);

        let at0 = pencil.reference_form_at(0.0).unwrap();
        assert!((at0.matrix().det() - 2.0).abs() < 1e-15);

        let far = pencil.reference_form_at(80.0).unwrap();
        assert!((far.matrix().det() - 1.0).abs() < 1e-15);

        let mid = pencil.reference_form_at(2.0f64.ln()).unwrap();
        assert!((mid.matrix().det() - 1.5).abs() < 1e-15);

        assert!(pencil.reference_form_at(-0.1).is_err());
    }

    #[test]
    fn metric_field_examples() {
        let grid = Grid::new(1, 64).unwrap();
        let bg = Background::constant(grid.clone(), HermitianMatrix::Dim1(1.0)).unwrap();

        // phi = 0 gives the constant field
        let g = metric_field(&bg, &ScalarField::zeros(grid.clone())).unwrap();
        for v in &g.components()[0] {
            assert!((v - 1.0).abs() < 1e-13);
        }

        // phi = eps cos(2 pi x) gives 1 - eps pi^2 cos(2 pi x)
        let eps = 0.01;
        let phi = ScalarField::synth(grid.clone(), &[Wave::new(vec![1, 0], eps, 0.0)]).unwrap();
        let g = metric_field(&bg, &phi).unwrap();
        let cosx = ScalarField::synth(grid.clone(), &[Wave::new(vec![1, 0], 1.0, 0.0)]).unwrap();
        for (v, c) in g.components()[0].iter().zip(cosx.values()) {
            assert!((v - (1.0 - eps * PI * PI * c)).abs() < 1e-12);
        }

        // additivity in the potential
        let phi2 = ScalarField::synth(grid.clone(), &[Wave::new(vec![0, 2], 0.3, 1.0)]).unwrap();
        let both = metric_field(&bg, &phi.add(&phi2).unwrap()).unwrap();
        let h2 = spectral::complex_hessian(&phi2).unwrap();
        let sum = g.add(&h2).unwrap();
        for (a, b) in both.components()[0].iter().zip(&sum.components()[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ma_density_examples() {
        let grid = Grid::new(2, 8).unwrap();
        let diag =
            HermitianField::constant(grid.clone(), &HermitianMatrix::two_by_two(2.0, 3.0, Complex64::new(0.0, 0.0)))
                .unwrap();
        assert!((ma_density(&diag).values()[0] - 6.0).abs() < 1e-15);

        let h = HermitianField::constant(
            grid,
            &HermitianMatrix::two_by_two(2.0, 2.0, Complex64::new(0.0, 1.0)),
        )
        .unwrap();
        assert!((ma_density(&h).values()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_field_attains_zero() {
        // 1 + cos(2 pi x): minimum 0, attained at x = 1/2 (a lattice point)
        let grid = Grid::new(1, 64).unwrap();
        let psi0 = ScalarField::synth(
            grid.clone(),
            &[Wave::new(vec![1, 0], -1.0 / (PI * PI), 0.0)],
        )
        .unwrap();
        let bg = Background::new(HermitianMatrix::Dim1(1.0), psi0).unwrap();
        let field = bg.coefficient_field();
        let min = field.min_eigenvalue();
        assert!(min.abs() < 1e-12, "min = {min}");
    }

    #[test]
    fn class_volume_is_potential_invariant() {
        let grid = Grid::new(1, 64).unwrap();
        let psi0 = ScalarField::synth(
            grid.clone(),
            &[Wave::new(vec![2, 1], 0.003, 0.4)],
        )
        .unwrap();
        let bg = Background::new(HermitianMatrix::Dim1(1.0), psi0).unwrap();
        assert_eq!(bg.class_volume(), 1.0);

        // quadrature of det(metric_field) agrees with det(A) for any phi
        let phi = ScalarField::synth(
            grid,
            &[
                Wave::new(vec![1, 0], 0.02, 0.0),
                Wave::new(vec![3, 2], 0.004, 1.2),
            ],
        )
        .unwrap();
        let g = metric_field(&bg, &phi).unwrap();
        let integral = ma_density(&g).integrate();
        assert!(
            (integral - bg.class_volume()).abs() < 1e-10,
            "integral = {integral:.15}"
        );
    }

    #[test]
    fn class_volume_invariance_n2() {
        let grid = Grid::new(2, 16).unwrap();
        let psi0 = ScalarField::synth(
            grid.clone(),
            &[Wave::new(vec![1, 0, 0, 0], 0.01, 0.0)],
        )
        .unwrap();
        let a = HermitianMatrix::two_by_two(2.0, 1.0, Complex64::new(0.1, 0.05));
        let bg = Background::new(a, psi0).unwrap();
        let phi = ScalarField::synth(
            grid,
            &[
                Wave::new(vec![0, 1, 1, 0], 0.02, 0.3),
                Wave::new(vec![1, 1, 0, 2], 0.008, 2.0),
            ],
        )
        .unwrap();
        let g = metric_field(&bg, &phi).unwrap();
        let integral = ma_density(&g).integrate();
        assert!(
            (integral - bg.class_volume()).abs() < 1e-10,
            "integral = {integral:.15}, class = {:.15}",
            bg.class_volume()
        );
    }

    #[test]
    fn mixed_pairing_examples() {
        let id = HermitianMatrix::identity(2).unwrap();
        assert!((mixed_class_pairing(&id, &id).unwrap() - 2.0).abs() < 1e-15);

        let e1 = HermitianMatrix::two_by_two(1.0, 0.0, Complex64::new(0.0, 0.0));
        let e2 = HermitianMatrix::two_by_two(0.0, 1.0, Complex64::new(0.0, 0.0));
        assert!((mixed_class_pairing(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);

        let s = HermitianMatrix::Dim1(0.5);
        assert_eq!(mixed_class_pairing(&s, &s).unwrap(), 0.5);

        assert!(mixed_class_pairing(&s, &id).is_err());
    }

    #[test]
    fn mixed_pairing_is_det_polarization() {
        // det(A+B) - det A - det B for a handful of matrices
        let cases = [
            (
                HermitianMatrix::two_by_two(2.0, 1.0, Complex64::new(0.3, -0.2)),
                HermitianMatrix::two_by_two(0.5, 1.5, Complex64::new(-0.1, 0.7)),
            ),
            (
                HermitianMatrix::two_by_two(1.0, 1.0, Complex64::new(0.0, 0.9)),
                HermitianMatrix::two_by_two(3.0, 0.2, Complex64::new(0.4, 0.0)),
            ),
        ];
        for (a, b) in cases {
            let want = a.add(&b).unwrap().det() - a.det() - b.det();
            let got = mixed_class_pairing(&a, &b).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pencil_validation() {
        let grid = Grid::new(1, 16).unwrap();
        // density mean != 1 rejected
        let omega0 = Background::constant(grid.clone(), HermitianMatrix::Dim1(1.0)).unwrap();
        let omega_inf = Background::constant(grid.clone(), HermitianMatrix::Dim1(1.0)).unwrap();
        let bad = ScalarField::constant(grid.clone(), 1.5).unwrap();
        assert!(Pencil::new(omega0.clone(), omega_inf.clone(), bad, false).is_err());

        // non-positive omega0 rejected
        let neg = Background::constant(grid.clone(), HermitianMatrix::Dim1(-0.5)).unwrap();
        let density = ScalarField::constant(grid, 1.0).unwrap();
        assert!(Pencil::new(neg, omega_inf, density, false).is_err());
    }

    #[test]
    fn ricci_form_of_constant_density_is_zero() {
        let grid = Grid::new(1, 16).unwrap();
        let density = ScalarField::constant(grid, 1.0).unwrap();
        let ric = ricci_form(&density).unwrap();
        for comp in ric.components() {
            for v in comp {
                assert!(v.abs() < 1e-13);
            }
        }
    }
}
