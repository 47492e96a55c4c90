//! Scalar diagnostics along a flow: the energy functional, its dissipation,
//! grid extremes of the velocity, class volumes, and exponential-rate fits.
//!
//! Conventions pinned here:
//!
//! * The gradient norm is `|grad f|^2_g = 2 g^{j kbar} d_j f d_kbar f`, the
//!   real Riemannian gradient norm of the associated metric. The energy
//!   inequality of the slope check is stated in the unscaled Kähler Dirichlet
//!   form `g^{j kbar} d_j f d_kbar f`, so the check divides the recorded
//!   dissipation by two; the convention factor rescales constants, never the
//!   sign of the inequality.
//! * `nu` is always the velocity form `∫ phidot (omega_t + i d dbar phi)^n`.
//!   For the plain flow this equals the log-density form; for the damped flow
//!   the two differ and both are recorded (`nu_logform` keeps the
//!   log-density value so the discrepancy stays auditable).

use crate::error::{Error, Result};
use crate::fastmath::fast_ln;
use crate::flow::{FlowKind, FlowState};
use crate::forms::{mixed_class_pairing, Pencil};
use crate::grid::{Mask, ScalarField};

/// One row of the flow trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// Energy in the velocity form `∫ phidot (omega_t + i d dbar phi)^n`.
    pub nu: f64,
    /// Energy in the log-density form `∫ log(det/Omega) det`.
    pub nu_logform: f64,
    /// `∫ |grad phidot|^2 det`, with the factor-2 gradient convention.
    pub dissipation: f64,
    pub min_phidot: f64,
    pub max_phidot: f64,
    /// `c(t) = ∫ phidot (omega_t + i d dbar phi)^n`.
    pub c_t: f64,
    /// Exact class volume `det(A_inf + e^{-t} A_chi)`.
    pub v_t: f64,
    /// `V_t log V_t`, the Jensen lower bound for the log-form energy.
    pub jensen_floor: f64,
    pub dt_used: f64,
}

impl EnergyRecord {
    /// Invariant violations of a single record, as human-readable strings.
    /// Empty means the record is consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dissipation < 0.0 {
            out.push(format!("dissipation negative: {:.3e}", self.dissipation));
        }
        let tol = 1e-9 * (1.0 + self.c_t.abs());
        if self.c_t < self.min_phidot * self.v_t - tol
            || self.c_t > self.max_phidot * self.v_t + tol
        {
            out.push(format!(
                "mean-value bracket broken: {:.6e} not in [{:.6e}, {:.6e}]",
                self.c_t,
                self.min_phidot * self.v_t,
                self.max_phidot * self.v_t
            ));
        }
        if self.nu_logform < self.jensen_floor - 1e-8 {
            out.push(format!(
                "Jensen floor broken: nu_logform {:.9e} < {:.9e}",
                self.nu_logform, self.jensen_floor
            ));
        }
        let nu_bound = self.min_phidot.abs().max(self.max_phidot.abs()) * self.v_t + 1e-12;
        if self.nu.abs() > nu_bound {
            out.push(format!(
                "velocity-form energy exceeds sup|phidot| V_t: {:.6e} > {:.6e}",
                self.nu.abs(),
                nu_bound
            ));
        }
        out
    }
}

/// Normalize a potential against a unit-mass density: `u = phi - ∫ phi Omega`,
/// so that `∫ u Omega = 0`.
pub fn normalize_u(phi: &ScalarField, density: &ScalarField) -> Result<ScalarField> {
    let mean = density.integrate();
    if (mean - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "normalization density must have mean 1, got {mean:.15}"
        )));
    }
    let weighted = phi.integrate_product(density)?;
    Ok(phi.shifted(-weighted))
}

/// Energy in the velocity form: `∫ phidot det(g)`.
pub fn energy_nu(state: &FlowState) -> f64 {
    let det = state.metric().det_field();
    state
        .phi_dot()
        .integrate_product(&det)
        .expect("state fields share a grid")
}

/// Energy in the log-density form: `∫ log(det(g)/Omega) det(g)`.
/// Coincides with [`energy_nu`] along the plain flow.
pub fn energy_nu_logform(state: &FlowState, pencil: &Pencil) -> f64 {
    let det = state.metric().det_field();
    let omega = pencil.density();
    let logratio: Vec<f64> = det
        .values()
        .iter()
        .zip(omega.values())
        .map(|(&d, &o)| fast_ln(d / o))
        .collect();
    let lr = ScalarField::from_values(det.grid().clone(), logratio)
        .expect("finite log ratio for positive metric");
    lr.integrate_product(&det).expect("same grid")
}

/// `c(t) = ∫ phidot (omega_t + i d dbar phi)^n`; identical to the velocity
/// form of the energy by construction.
pub fn c_of_t(state: &FlowState) -> f64 {
    energy_nu(state)
}

/// Dissipation `∫ |grad phidot|^2_{g} det(g)` with the factor-2 convention.
/// Errors with `SingularMetric` if any sample determinant is at or below
/// `eig_floor`.
pub fn dissipation(state: &FlowState, eig_floor: f64) -> Result<f64> {
    let grad = state.phi_dot().gradient_z();
    let normsq = grad.norm_squared(state.metric(), eig_floor)?;
    let det = state.metric().det_field();
    normsq.integrate_product(&det)
}

/// Sup over unmasked samples of the pointwise gradient quadratic form
/// `|grad phidot|^2_{g}`.
pub fn sobolev_gradient_sup(state: &FlowState, mask: &Mask, eig_floor: f64) -> Result<f64> {
    let grad = state.phi_dot().gradient_z();
    let normsq = grad.norm_squared(state.metric(), eig_floor)?;
    let mut sup = 0.0f64;
    for (i, &v) in normsq.values().iter().enumerate() {
        if !mask.is_excluded(i) {
            sup = sup.max(v);
        }
    }
    Ok(sup)
}

/// Assemble the record for a state.
pub fn make_record(state: &FlowState, pencil: &Pencil, dt_used: f64) -> Result<EnergyRecord> {
    let nu = energy_nu(state);
    let nu_logform = energy_nu_logform(state, pencil);
    let dissipation = dissipation(state, 0.0)?;
    let v_t = pencil.class_volume_at(state.t())?;
    Ok(EnergyRecord {
        t: state.t(),
        nu,
        nu_logform,
        dissipation,
        min_phidot: state.phi_dot().min(),
        max_phidot: state.phi_dot().max(),
        c_t: nu,
        v_t,
        jensen_floor: v_t * v_t.ln(),
        dt_used,
    })
}

/// Result of the per-interval energy-inequality check.
#[derive(Debug, Clone)]
pub struct SlopeReport {
    /// The assembled constant in front of `e^{-t}`.
    pub c_star: f64,
    /// Largest positive violation over all intervals (0 when none).
    pub max_violation: f64,
    /// Time at which the worst violation starts.
    pub worst_t: f64,
    pub intervals: usize,
}

/// Check the energy dissipation inequality on consecutive records.
///
/// Plain flow: `(nu_{k+1} - nu_k)/dt <= -D_k + C* e^{-t_k} + tol`, where
/// `D_k` is the dissipation in the unscaled Dirichlet-form convention
/// (recorded value divided by two).
///
/// Damped flow: the time derivative of the velocity-form energy picks up an
/// exact extra `-nu` from the damping term, so the checked inequality is
/// `(nu_{k+1} - nu_k)/dt + nu_k <= -D_k + C* e^{-t_k} + tol`.
///
/// `C*` is assembled from observed data: with `n` the complex dimension,
/// `C* = n max_k |pair(A_chi, A_{t_k})| + n sup_k |phidot| max_k pair(A_0 + A_inf, A_{t_k})`.
pub fn energy_slope_check(
    records: &[EnergyRecord],
    pencil: &Pencil,
    kind: FlowKind,
    tol: f64,
) -> Result<SlopeReport> {
    if records.len() < 2 {
        return Err(Error::InsufficientWindow {
            needed: 2,
            found: records.len(),
        });
    }
    let n = pencil.grid().n() as f64;
    let a_chi = *pencil.chi().matrix();
    let a_sum = pencil.omega0().matrix().add(pencil.omega_inf().matrix())?;
    let mut chi_pair_max = 0.0f64;
    let mut sum_pair_max = 0.0f64;
    let mut sup_phidot = 0.0f64;
    for r in records {
        let a_t = pencil.class_matrix_at(r.t)?;
        chi_pair_max = chi_pair_max.max(mixed_class_pairing(&a_chi, &a_t)?.abs());
        sum_pair_max = sum_pair_max.max(mixed_class_pairing(&a_sum, &a_t)?);
        sup_phidot = sup_phidot.max(r.min_phidot.abs()).max(r.max_phidot.abs());
    }
    let c_star = n * chi_pair_max + n * sup_phidot * sum_pair_max;

    let mut max_violation = 0.0f64;
    let mut worst_t = records[0].t;
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            return Err(Error::InvalidConfig(
                "records are not strictly increasing in t".into(),
            ));
        }
        let slope = (b.nu - a.nu) / dt;
        let lhs = match kind {
            FlowKind::Plain => slope,
            FlowKind::Damped => slope + a.nu,
        };
        let rhs = -0.5 * a.dissipation + c_star * (-a.t).exp() + tol;
        let violation = lhs - rhs;
        if violation > max_violation {
            max_violation = violation;
            worst_t = a.t;
        }
    }
    Ok(SlopeReport {
        c_star,
        max_violation,
        worst_t,
        intervals: records.len() - 1,
    })
}

/// Exponential-rate fit `y ≈ C e^{-alpha t}` by least squares on `(t, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub alpha: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

/// Fit the points of `series` with `window.0 <= t <= window.1`. Requires at
/// least 4 points in the window, all strictly positive.
pub fn exp_rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .copied()
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientWindow {
            needed: 4,
            found: pts.len(),
        });
    }
    for &(_, y) in &pts {
        if y <= 0.0 {
            return Err(Error::NonPositiveSeries(y));
        }
    }
    let m = pts.len() as f64;
    let mut st = 0.0;
    let mut sy = 0.0;
    for &(t, y) in &pts {
        st += t;
        sy += y.ln();
    }
    let (tbar, ybar) = (st / m, sy / m);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(t, y) in &pts {
        sxx += (t - tbar) * (t - tbar);
        sxy += (t - tbar) * (y.ln() - ybar);
    }
    let slope = sxy / sxx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(t, y) in &pts {
        let pred = ybar + slope * (t - tbar);
        ss_res += (y.ln() - pred) * (y.ln() - pred);
        ss_tot += (y.ln() - ybar) * (y.ln() - ybar);
    }
    let r2 = if ss_tot <= f64::EPSILON * m {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        alpha: -slope,
        r2,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Wave};

    #[test]
    fn normalize_u_examples() {
        let grid = Grid::new(1, 64).unwrap();
        let one = ScalarField::constant(grid.clone(), 1.0).unwrap();

        // constant phi maps to zero
        let phi = ScalarField::constant(grid.clone(), 2.7).unwrap();
        let u = normalize_u(&phi, &one).unwrap();
        assert!(u.sup_abs() < 1e-14);

        // already mean-zero phi is unchanged
        let cosx = ScalarField::synth(grid.clone(), &[Wave::new(vec![1, 0], 1.0, 0.0)]).unwrap();
        let u = normalize_u(&cosx, &one).unwrap();
        assert!(u.sub(&cosx).unwrap().sup_abs() < 1e-14);

        // phi = cos 2pix against Omega = 1 + (1/2) cos 2pix: ∫ phi Omega = 1/4
        let density = cosx.scaled(0.5).shifted(1.0);
        let weighted = cosx.integrate_product(&density).unwrap();
        assert!((weighted - 0.25).abs() < 1e-13);
        let u = normalize_u(&cosx, &density).unwrap();
        let expect = cosx.shifted(-0.25);
        assert!(u.sub(&expect).unwrap().sup_abs() < 1e-13);
        assert!(u.integrate_product(&density).unwrap().abs() < 1e-13);
    }

    #[test]
    fn exp_rate_fit_exact_series() {
        let series: Vec<(f64, f64)> = (2..=10)
            .map(|i| {
                let t = i as f64;
                (t, 3.0 * (-0.7 * t).exp())
            })
            .collect();
        let fit = exp_rate_fit(&series, (2.0, 10.0)).unwrap();
        assert!((fit.alpha - 0.7).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_rate_fit_constant_series() {
        let series: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 4.2)).collect();
        let fit = exp_rate_fit(&series, (0.0, 5.0)).unwrap();
        assert!(fit.alpha.abs() < 1e-14);
    }

    #[test]
    fn exp_rate_fit_errors() {
        let mut series: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(
            exp_rate_fit(&series, (0.0, 2.0)),
            Err(Error::InsufficientWindow { .. })
        ));
        series[3].1 = -1.0;
        assert!(matches!(
            exp_rate_fit(&series, (0.0, 5.0)),
            Err(Error::NonPositiveSeries(_))
        ));
    }

    #[test]
    fn record_invariants_catch_tampering() {
        let good = EnergyRecord {
            t: 1.0,
            nu: 0.5,
            nu_logform: 0.5,
            dissipation: 0.1,
            min_phidot: 0.2,
            max_phidot: 0.9,
            c_t: 0.5,
            v_t: 1.0,
            jensen_floor: 0.0,
            dt_used: 1e-3,
        };
        assert!(good.violations().is_empty());

        let mut bad = good.clone();
        bad.dissipation = -1e-3;
        assert!(!bad.violations().is_empty());

        let mut bad = good.clone();
        bad.c_t = 1.5; // above max_phidot * v_t
        assert!(!bad.violations().is_empty());

        let mut bad = good.clone();
        bad.nu_logform = -1.0; // below the Jensen floor of 0
        assert!(!bad.violations().is_empty());
    }
}
