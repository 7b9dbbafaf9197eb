//! Spectra of −Δ and −Δ + cR on a metric state.
//!
//! On the 2-D conformal families the Dirichlet energy is conformally
//! invariant, so the stiffness is the base stiffness; only the lumped mass
//! `m₀ e^{2u}` and the potential `c R m_g` depend on the metric. Einstein
//! spheres use their closed-form spectrum `k(k+n−1)/s`.

pub mod eigensolver;

use std::sync::Arc;

use serde::Serialize;

use crate::curvature::curvature_report;
use crate::error::{Error, Result};
use crate::families::{Dof, FamilyKind, MetricState};
use crate::sparse::{wdot, CsrMatrix};

pub use eigensolver::{EigenPairs, GeneralizedProblem, SolverOptions};

#[derive(Debug, Clone)]
pub enum DiscreteOperators {
    Mesh {
        stiffness: Arc<CsrMatrix>,
        mass: Vec<f64>,
        /// Diagonal entries c·R·m_g.
        potential: Vec<f64>,
        c: f64,
    },
    /// Round Einstein sphere of dimension n and scale s.
    ClosedForm { n: usize, s: f64, c: f64 },
}

impl DiscreteOperators {
    pub fn coupling(&self) -> f64 {
        match self {
            DiscreteOperators::Mesh { c, .. } | DiscreteOperators::ClosedForm { c, .. } => *c,
        }
    }

    fn problem(&self, deflate_constants: bool) -> Option<GeneralizedProblem<'_>> {
        match self {
            DiscreteOperators::Mesh { stiffness, mass, potential, .. } => Some(GeneralizedProblem {
                stiffness,
                potential,
                mass,
                deflate_constants,
            }),
            DiscreteOperators::ClosedForm { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Lowest,
    FirstNonzeroMeanZero,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Nodal eigenfunction; a single constant value on closed-form constant
    /// eigenfunctions, empty for closed-form non-constant ones.
    pub f: Vec<f64>,
    pub residual: f64,
    pub constraint: Constraint,
    pub normalized: bool,
    pub iterations: usize,
}

impl SpectralResult {
    pub fn is_closed_form(&self) -> bool {
        self.iterations == 0
    }
}

pub fn build_operators(state: &MetricState, c: f64) -> Result<DiscreteOperators> {
    state.validate()?;
    match &state.dof {
        Dof::Scale(s) => Ok(DiscreteOperators::ClosedForm { n: state.dim(), s: *s, c }),
        Dof::Conformal { base, .. } => {
            let mass = state.mass_weights();
            let potential = if c == 0.0 {
                vec![0.0; mass.len()]
            } else {
                let r = curvature_report(state)?.scalar;
                r.iter().zip(&mass).map(|(r, m)| c * r * m).collect()
            };
            Ok(DiscreteOperators::Mesh { stiffness: Arc::new(base.stiffness.clone()), mass, potential, c })
        }
        Dof::Triple(_) => Err(Error::UnsupportedFamily(FamilyKind::SU2Homogeneous.name())),
    }
}

/// Positive M-mean, or first clearly nonzero entry positive when the mean vanishes.
fn fix_sign(f: &mut [f64], mass: &[f64]) {
    let mean = wdot(mass, f, &vec![1.0; f.len()]);
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total: f64 = mass.iter().sum();
    let flip = if mean.abs() > 1e-8 * scale * total {
        mean < 0.0
    } else {
        f.iter().find(|v| v.abs() > 1e-6 * scale).is_some_and(|v| *v < 0.0)
    };
    if flip {
        f.iter_mut().for_each(|v| *v = -*v);
    }
}

fn closed_form_volume(n: usize, s: f64) -> f64 {
    crate::families::unit_sphere_volume(n) * s.powf(n as f64 / 2.0)
}

pub fn lowest_eigenpair(ops: &DiscreteOperators, opts: &SolverOptions) -> Result<SpectralResult> {
    match ops {
        DiscreteOperators::ClosedForm { n, s, c } => {
            let r = (*n as f64) * (*n as f64 - 1.0) / s;
            Ok(SpectralResult {
                lambda: c * r,
                f: vec![1.0 / closed_form_volume(*n, *s).sqrt()],
                residual: 0.0,
                constraint: Constraint::Lowest,
                normalized: true,
                iterations: 0,
            })
        }
        DiscreteOperators::Mesh { mass, .. } => {
            let problem = ops.problem(false).expect("mesh operators");
            let pairs = eigensolver::smallest_eigenpairs(&problem, 1, opts)?;
            let mut f = pairs.vectors.into_iter().next().expect("one pair requested");
            fix_sign(&mut f, mass);
            Ok(SpectralResult {
                lambda: pairs.values[0],
                f,
                residual: pairs.residuals[0],
                constraint: Constraint::Lowest,
                normalized: true,
                iterations: pairs.iterations,
            })
        }
    }
}

/// The `count` smallest eigenpairs of −Δ among M-mean-zero functions.
pub fn first_nonzero_eigenpairs(state: &MetricState, count: usize, opts: &SolverOptions) -> Result<Vec<SpectralResult>> {
    let ops = build_operators(state, 0.0)?;
    match &ops {
        DiscreteOperators::ClosedForm { n, s, .. } => {
            // degree-1 harmonics: λ = n/s with multiplicity n+1
            let lambda = *n as f64 / s;
            Ok((0..count)
                .map(|k| SpectralResult {
                    lambda: if k <= *n { lambda } else { f64::NAN },
                    f: Vec::new(),
                    residual: 0.0,
                    constraint: Constraint::FirstNonzeroMeanZero,
                    normalized: true,
                    iterations: 0,
                })
                .filter(|r| r.lambda.is_finite())
                .collect())
        }
        DiscreteOperators::Mesh { mass, .. } => {
            let problem = ops.problem(true).expect("mesh operators");
            let pairs = eigensolver::smallest_eigenpairs(&problem, count, opts)?;
            Ok(pairs
                .vectors
                .into_iter()
                .zip(pairs.values)
                .zip(pairs.residuals)
                .map(|((mut f, lambda), residual)| {
                    fix_sign(&mut f, mass);
                    SpectralResult {
                        lambda,
                        f,
                        residual,
                        constraint: Constraint::FirstNonzeroMeanZero,
                        normalized: true,
                        iterations: pairs.iterations,
                    }
                })
                .collect())
        }
    }
}

pub fn first_nonzero_eigenpair(state: &MetricState, opts: &SolverOptions) -> Result<SpectralResult> {
    first_nonzero_eigenpairs(state, 1, opts)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Numeric("no eigenpair returned".into()))
}

/// (fᵀSf + fᵀPf) / (fᵀMf). On closed-form operators `f` is a single
/// constant value.
pub fn rayleigh_quotient(ops: &DiscreteOperators, f: &[f64]) -> Result<f64> {
    if f.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("Rayleigh quotient of the zero vector".into()));
    }
    match ops {
        DiscreteOperators::ClosedForm { n, s, c } => {
            if f.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: f.len() });
            }
            Ok(c * (*n as f64) * (*n as f64 - 1.0) / s)
        }
        DiscreteOperators::Mesh { stiffness, mass, potential, .. } => {
            if f.len() != mass.len() {
                return Err(Error::DimensionMismatch { expected: mass.len(), got: f.len() });
            }
            let energy = stiffness.bilinear(f, f) + f.iter().zip(potential).map(|(x, p)| p * x * x).sum::<f64>();
            Ok(energy / wdot(mass, f, f))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityAudit {
    pub eps: f64,
    /// Metric comparison (1+ε)⁻¹g₁ ≤ g₂ ≤ (1+ε)g₁ satisfied.
    pub hypothesis_met: bool,
    pub lambda1_ratio: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub lambda1_within: Option<bool>,
    /// Observed λ₀(g₂) − λ₀(g₁).
    pub lambda0_difference: Option<f64>,
    /// The λ₀ upper bound with the implicit δ terms set to zero.
    pub lambda0_bound_without_delta: Option<f64>,
    /// Curvature comparison R(g₁) − ε ≤ R(g₂) ≤ R(g₁) + ε satisfied.
    pub curvature_hypothesis_met: bool,
    /// The observed difference exceeds the evaluable terms, so the δ slack is
    /// being used. Informational, not a failure.
    pub needs_delta_slack: Option<bool>,
}

/// Two-sided λ₁ ratio bound and the λ₀ continuity estimate for two metrics
/// that are (1+ε)-close.
pub fn continuity_ratio_check(
    state1: &MetricState,
    state2: &MetricState,
    eps: f64,
    c: f64,
    opts: &SolverOptions,
) -> Result<ContinuityAudit> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    let n = state1.dim();
    let slack = 1e-12;
    let hypothesis_met = match (&state1.dof, &state2.dof) {
        (Dof::Scale(s1), Dof::Scale(s2)) if state1.dim() == state2.dim() => {
            (s2 / s1).max(s1 / s2) <= (1.0 + eps) * (1.0 + slack)
        }
        (Dof::Conformal { u: u1, base: b1 }, Dof::Conformal { u: u2, base: b2 }) => {
            if !(Arc::ptr_eq(b1, b2) || **b1 == **b2) {
                return Err(Error::Domain("states do not share a discretization".into()));
            }
            let gap = u1.iter().zip(u2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            gap <= 0.5 * (1.0 + eps).ln() + slack
        }
        (Dof::Triple(_), _) | (_, Dof::Triple(_)) => {
            return Err(Error::UnsupportedFamily(FamilyKind::SU2Homogeneous.name()))
        }
        _ => return Err(Error::Domain("states belong to different families".into())),
    };
    let power = (n + 1) as i32;
    let lower = (1.0 + eps).powi(-power);
    let upper = (1.0 + eps).powi(power);
    let mut audit = ContinuityAudit {
        eps,
        hypothesis_met,
        lambda1_ratio: None,
        lower,
        upper,
        lambda1_within: None,
        lambda0_difference: None,
        lambda0_bound_without_delta: None,
        curvature_hypothesis_met: false,
        needs_delta_slack: None,
    };
    if !hypothesis_met {
        return Ok(audit);
    }

    let l1a = first_nonzero_eigenpair(state1, opts)?.lambda;
    let l1b = first_nonzero_eigenpair(state2, opts)?.lambda;
    let ratio = l1a / l1b;
    audit.lambda1_ratio = Some(ratio);
    audit.lambda1_within = Some(ratio >= lower * (1.0 - 1e-12) && ratio <= upper * (1.0 + 1e-12));

    let r1 = curvature_report(state1)?;
    let r2 = curvature_report(state2)?;
    let max_dr = if r1.scalar.len() == r2.scalar.len() {
        r1.scalar.iter().zip(&r2.scalar).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    } else {
        (r1.r_max - r2.r_max).abs()
    };
    audit.curvature_hypothesis_met = max_dr <= eps;
    let l0a = lowest_eigenpair(&build_operators(state1, c)?, opts)?.lambda;
    let l0b = lowest_eigenpair(&build_operators(state2, c)?, opts)?.lambda;
    let half = n as f64 / 2.0;
    let q = 1.0 + eps;
    let bound = (q.powf(half + 1.0) - q.powf(-half)) * q.powf(half) * (l0a - c.abs() * r1.r_min)
        + c.abs() * max_dr * q.powf(half);
    audit.lambda0_difference = Some(l0b - l0a);
    audit.lambda0_bound_without_delta = Some(bound);
    audit.needs_delta_slack = Some(l0b - l0a > bound);
    Ok(audit)
}
