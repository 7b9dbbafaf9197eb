//! Curvature of a [`MetricState`]: scalar curvature, Ricci, pinching and a
//! curvature-magnitude proxy for blow-up detection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Dof, MetricState};

/// How the Ricci tensor is represented for each family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RicciRepr {
    /// `Ric = lambda · g`.
    Einstein { lambda: f64 },
    /// `Ric = (R/2) g`, the only possibility in dimension two.
    Conformal2D,
    /// Milnor-frame diagonal. `diag` are the coordinate components
    /// `(r_a, r_b, r_c)`, `relative` the eigenvalues relative to g
    /// (`r_a / a`, ...).
    Milnor { diag: [f64; 3], relative: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// Scalar curvature per vertex, or a single value for homogeneous families.
    pub scalar: Vec<f64>,
    pub ricci: RicciRepr,
    pub ric_norm_sq: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    /// min over points of (smallest Ricci eigenvalue)/R; only when `r_min > 0`.
    pub pinch: Option<f64>,
    pub riem_mag: f64,
}

impl CurvatureReport {
    /// Smallest eigenvalue of Ric relative to g at each point.
    pub fn min_ricci_eigen(&self) -> Vec<f64> {
        match &self.ricci {
            RicciRepr::Einstein { lambda } => vec![*lambda],
            RicciRepr::Conformal2D => self.scalar.iter().map(|r| 0.5 * r).collect(),
            RicciRepr::Milnor { relative, .. } => vec![relative.iter().copied().fold(f64::INFINITY, f64::min)],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.scalar.iter().all(|r| r.is_finite()) && self.riem_mag.is_finite()
    }
}

/// Milnor-frame Ricci components for the left-invariant SU(2) metric
/// `a θ₁² + b θ₂² + c θ₃²`, normalized so that (1,1,1) is the unit round S³.
pub fn milnor_ricci(a: f64, b: f64, c: f64) -> [f64; 3] {
    [
        2.0 * (a * a - (b - c) * (b - c)) / (b * c),
        2.0 * (b * b - (c - a) * (c - a)) / (c * a),
        2.0 * (c * c - (a - b) * (a - b)) / (a * b),
    ]
}

/// Sectional curvatures of the three Milnor coordinate planes
/// `(K_bc, K_ca, K_ab)`; in dimension three these are also the curvature
/// operator eigenvalues.
pub fn milnor_sectional(a: f64, b: f64, c: f64) -> [f64; 3] {
    let r = milnor_ricci(a, b, c);
    let rel = [r[0] / a, r[1] / b, r[2] / c];
    [
        0.5 * (rel[1] + rel[2] - rel[0]),
        0.5 * (rel[2] + rel[0] - rel[1]),
        0.5 * (rel[0] + rel[1] - rel[2]),
    ]
}

fn extremes(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn pinch_of(scalar: &[f64], min_ric: &[f64], r_min: f64) -> Option<f64> {
    if r_min > 0.0 {
        Some(
            scalar
                .iter()
                .zip(min_ric)
                .map(|(r, m)| m / r)
                .fold(f64::INFINITY, f64::min),
        )
    } else {
        None
    }
}

pub fn curvature_report(state: &MetricState) -> Result<CurvatureReport> {
    state.validate().map_err(|e| match e {
        Error::InvalidState(m) => Error::InvalidState(format!("curvature: {m}")),
        other => other,
    })?;
    let n = state.dim() as f64;
    let report = match &state.dof {
        Dof::Scale(s) => {
            let r = n * (n - 1.0) / s;
            let lambda = (n - 1.0) / s;
            CurvatureReport {
                scalar: vec![r],
                ricci: RicciRepr::Einstein { lambda },
                ric_norm_sq: vec![n * lambda * lambda],
                r_min: r,
                r_max: r,
                pinch: pinch_of(&[r], &[lambda], r),
                riem_mag: r.abs(),
            }
        }
        Dof::Conformal { u, base } => {
            let su = base.stiffness.apply_zero_row_sum(u);
            let scalar: Vec<f64> = (0..u.len())
                .map(|i| (-2.0 * u[i]).exp() * (base.r0[i] + 2.0 * su[i] / base.mass[i]))
                .collect();
            let ric_norm_sq = scalar.iter().map(|r| 0.5 * r * r).collect();
            let (r_min, r_max) = extremes(&scalar);
            let half: Vec<f64> = scalar.iter().map(|r| 0.5 * r).collect();
            CurvatureReport {
                pinch: pinch_of(&scalar, &half, r_min),
                riem_mag: r_min.abs().max(r_max.abs()),
                scalar,
                ricci: RicciRepr::Conformal2D,
                ric_norm_sq,
                r_min,
                r_max,
            }
        }
        Dof::Triple([a, b, c]) => {
            let diag = milnor_ricci(*a, *b, *c);
            let relative = [diag[0] / a, diag[1] / b, diag[2] / c];
            let r: f64 = relative.iter().sum();
            let norm_sq = relative.iter().map(|x| x * x).sum();
            let min_rel = relative.iter().copied().fold(f64::INFINITY, f64::min);
            let riem_mag = milnor_sectional(*a, *b, *c).iter().fold(0.0f64, |m, k| m.max(k.abs()));
            CurvatureReport {
                scalar: vec![r],
                ricci: RicciRepr::Milnor { diag, relative },
                ric_norm_sq: vec![norm_sq],
                r_min: r,
                r_max: r,
                pinch: pinch_of(&[r], &[min_rel], r),
                riem_mag,
            }
        }
    };
    Ok(report)
}

/// Minimum over points and frame directions of
/// `ric_eigen − ((1 + (2−n)ρ)/2)·R + a`; nonnegative exactly when
/// `R_ij − ((1+(2−n)ρ)/2) R g_ij ≥ −a g_ij` holds.
pub fn einstein_pinching_deficit(report: &CurvatureReport, rho: f64, a: f64, n: usize) -> f64 {
    let coef = (1.0 + (2.0 - n as f64) * rho) / 2.0;
    report
        .min_ricci_eigen()
        .iter()
        .zip(&report.scalar)
        .map(|(ric, r)| ric - coef * r + a)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{init_state, ConformalPreset, FamilySpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn report(spec: FamilySpec) -> CurvatureReport {
        curvature_report(&init_state(&spec).unwrap()).unwrap()
    }

    #[test]
    fn einstein_s3() {
        let r = report(FamilySpec::einstein_sphere(3, 1.0));
        assert_eq!(r.scalar, vec![6.0]);
        assert!((r.ric_norm_sq[0] - 12.0).abs() < 1e-12);
        assert!((r.pinch.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn flat_torus_constant_u_is_flat() {
        let r = report(FamilySpec::conformal_torus(16, ConformalPreset::Constant(0.3)));
        assert!(r.scalar.iter().all(|&v| v == 0.0));
        assert_eq!(r.pinch, None);
    }

    #[test]
    fn torus_cos_x_matches_analytic_curvature() {
        let amp = 0.1;
        let state = init_state(&FamilySpec::conformal_torus(64, ConformalPreset::CosX(amp))).unwrap();
        let r = curvature_report(&state).unwrap();
        let k2 = (2.0 * PI).powi(2);
        let base = state.base().unwrap();
        for (p, got) in base.positions.iter().zip(&r.scalar) {
            let c = (2.0 * PI * p[0]).cos();
            // R = −2 e^{−2u} Δu with u = A cos 2πx
            let exact = 2.0 * amp * k2 * (-2.0 * amp * c).exp() * c;
            assert!((got - exact).abs() < 0.01 * 6.5, "{got} vs {exact}");
        }
        let exact_max = 0.2 * k2 * (-0.2f64).exp();
        assert!((exact_max - 6.464).abs() < 1e-3);
        assert!((r.r_max - exact_max).abs() < 0.01 * exact_max);
    }

    #[test]
    fn su2_round_matches_einstein() {
        let r = report(FamilySpec::su2(1.0, 1.0, 1.0));
        assert_eq!(r.scalar, vec![6.0]);
        let e = report(FamilySpec::einstein_sphere(3, 1.0));
        assert!((r.ric_norm_sq[0] - e.ric_norm_sq[0]).abs() < 1e-12);
    }

    #[test]
    fn su2_berger_values() {
        let r = report(FamilySpec::su2(1.0, 1.0, 0.8));
        assert!((r.scalar[0] - 6.4).abs() < 1e-12);
        assert!((r.pinch.unwrap() - 0.25).abs() < 1e-12);
        let k = milnor_sectional(1.0, 1.0, 0.8);
        assert!((k[0] - 0.8).abs() < 1e-12 && (k[2] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn deficit_examples() {
        let torus = report(FamilySpec::conformal_torus(16, ConformalPreset::CosX(0.2)));
        for rho in [-1.0, 0.0, 0.3] {
            assert_eq!(einstein_pinching_deficit(&torus, rho, 0.0, 2), 0.0);
        }
        let s3 = report(FamilySpec::einstein_sphere(3, 1.0));
        assert!((einstein_pinching_deficit(&s3, 0.0, 0.0, 3) + 1.0).abs() < 1e-12);
        assert!(einstein_pinching_deficit(&s3, 0.0, 1.0, 3).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        let state = init_state(&FamilySpec::su2(1.0, 1.0, 1.0)).unwrap();
        let bad = crate::families::MetricState { dof: Dof::Triple([1.0, -1.0, 1.0]), ..state };
        assert!(curvature_report(&bad).is_err());
    }

    #[test]
    fn gauss_bonnet_on_conformal_states() {
        // ∫ R dυ = 4πχ (R is twice the Gauss curvature)
        let torus = init_state(&FamilySpec::conformal_torus(32, ConformalPreset::RandomBand(0.2)).with_seed(3)).unwrap();
        let r = curvature_report(&torus).unwrap();
        assert!(torus.integrate_scalar(&r.scalar).unwrap().abs() < 1e-8);
        let sphere = init_state(&FamilySpec::conformal_sphere(3, ConformalPreset::CosXY(0.2))).unwrap();
        let r = curvature_report(&sphere).unwrap();
        let total = sphere.integrate_scalar(&r.scalar).unwrap();
        assert!((total - 8.0 * PI).abs() < 0.01 * 8.0 * PI);
    }

    proptest! {
        #[test]
        fn su2_round_agrees_with_einstein(s in 0.05f64..20.0) {
            let su2 = report(FamilySpec::su2(s, s, s));
            let e = report(FamilySpec::einstein_sphere(3, s));
            prop_assert!((su2.scalar[0] - e.scalar[0]).abs() <= 1e-12 * e.scalar[0]);
            prop_assert!((su2.ric_norm_sq[0] - e.ric_norm_sq[0]).abs() <= 1e-12 * e.ric_norm_sq[0]);
            prop_assert!((su2.pinch.unwrap() - 1.0 / 3.0).abs() <= 1e-12);
        }

        #[test]
        fn su2_pinch_at_most_one_third(a in 0.2f64..3.0, b in 0.2f64..3.0, c in 0.2f64..3.0) {
            let r = report(FamilySpec::su2(a, b, c));
            if let Some(p) = r.pinch {
                prop_assert!(p <= 1.0 / 3.0 + 1e-12);
            }
        }
    }
}
