//! Quantities evaluated along a trajectory: hypothesis checks, the rescaled
//! λ₀ quantity, eigenvalue-derivative formulas, finite-difference
//! derivatives, and the pass/fail audits built from them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::curvature::{curvature_report, einstein_pinching_deficit, milnor_sectional, CurvatureReport};
use crate::error::{Error, Result};
use crate::families::{Discretization, Dof, FamilyKind, MetricState};
use crate::flow::{sigma_bound, sigma_horizon, FlowParams, StopReason, Trajectory};
use crate::spectral::{
    build_operators, first_nonzero_eigenpair, lowest_eigenpair, Constraint, SolverOptions, SpectralResult,
};

/// Eigenpairs with a larger relative residual are rejected by the formula evaluators.
pub const CONVERGED_RESIDUAL: f64 = 1e-6;
/// Successive samples must increase by more than this times (1 + |value|).
pub const STRICTNESS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaleParams {
    /// ε = max R(0).
    pub eps_max_r0: f64,
    pub t_prime: f64,
    pub alpha: f64,
}

pub fn rescale_params(rho: f64, c: f64, n: usize, r0_max: f64) -> Result<RescaleParams> {
    if !(rho < 1.0) {
        return Err(Error::Domain(format!("rescaling needs rho < 1, got {rho}")));
    }
    if !(r0_max > 0.0) {
        return Err(Error::Domain(format!("rescaling needs max R(0) > 0, got {r0_max}")));
    }
    let n = n as f64;
    let alpha = (2.0 * c * (1.0 - 2.0 * (n - 1.0) * rho) + n * rho - 1.0) / (2.0 * (1.0 - rho));
    Ok(RescaleParams { eps_max_r0: r0_max, t_prime: sigma_horizon(r0_max, rho), alpha })
}

/// Q = (T′−t)^{−α} λ₀.
pub fn rescaled_quantity(lambda0: f64, t: f64, rp: &RescaleParams) -> Result<f64> {
    if !(t >= 0.0 && t < rp.t_prime) {
        return Err(Error::Domain(format!("t = {t} outside [0, T') with T' = {}", rp.t_prime)));
    }
    Ok((rp.t_prime - t).powf(-rp.alpha) * lambda0)
}

/// Weighted integrals of an eigenfunction f against curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenIntegrals {
    /// ∫ R f²
    pub r_f2: f64,
    /// ∫ R² f²
    pub r2_f2: f64,
    /// ∫ |Ric|² f²
    pub ric2_f2: f64,
    /// ∫ R |∇f|²
    pub r_grad2: f64,
    /// ∫ Ric(∇f, ∇f)
    pub ric_grad: f64,
}

fn check_converged(spec: &SpectralResult) -> Result<()> {
    if spec.residual.is_finite() && spec.residual <= CONVERGED_RESIDUAL && spec.lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NotConverged { iterations: spec.iterations, residual: spec.residual })
    }
}

pub fn eigen_integrals(state: &MetricState, report: &CurvatureReport, spec: &SpectralResult) -> Result<EigenIntegrals> {
    check_converged(spec)?;
    match &state.dof {
        Dof::Scale(_) => {
            let n = state.dim() as f64;
            let r = report.scalar[0];
            let ric2 = report.ric_norm_sq[0];
            match spec.constraint {
                Constraint::Lowest => {
                    let f2 = spec.f.first().map_or(0.0, |f| f * f) * state.volume();
                    Ok(EigenIntegrals { r_f2: r * f2, r2_f2: r * r * f2, ric2_f2: ric2 * f2, r_grad2: 0.0, ric_grad: 0.0 })
                }
                // degree-one harmonic, ∫f² = 1 and ∫|∇f|² = λ₁
                Constraint::FirstNonzeroMeanZero => Ok(EigenIntegrals {
                    r_f2: r,
                    r2_f2: r * r,
                    ric2_f2: ric2,
                    r_grad2: r * spec.lambda,
                    ric_grad: r / n * spec.lambda,
                }),
            }
        }
        Dof::Conformal { u, base } => {
            let f = &spec.f;
            if f.len() != u.len() {
                return Err(Error::DimensionMismatch { expected: u.len(), got: f.len() });
            }
            let r = &report.scalar;
            let mut r_f2 = 0.0;
            let mut r2_f2 = 0.0;
            for i in 0..u.len() {
                let w = base.mass[i] * (2.0 * u[i]).exp() * f[i] * f[i];
                r_f2 += w * r[i];
                r2_f2 += w * r[i] * r[i];
            }
            // |∇f|² dυ is conformally invariant in dimension two
            let r_grad2: f64 = base
                .edges
                .iter()
                .map(|&(i, j, w)| w * (f[i] - f[j]).powi(2) * 0.5 * (r[i] + r[j]))
                .sum();
            Ok(EigenIntegrals { r_f2, r2_f2, ric2_f2: 0.5 * r2_f2, r_grad2, ric_grad: 0.5 * r_grad2 })
        }
        Dof::Triple(_) => Err(Error::UnsupportedFamily(FamilyKind::SU2Homogeneous.name())),
    }
}

/// A = −1 + nρ + 2c[1 − 2(n−1)ρ].
pub fn lemma31_coefficient(rho: f64, c: f64, n: usize) -> f64 {
    let n = n as f64;
    -1.0 + n * rho + 2.0 * c * (1.0 - 2.0 * (n - 1.0) * rho)
}

/// (K, k) of the completed-square form.
pub fn lemma32_coefficients(rho: f64, n: usize) -> (f64, f64) {
    let m = rho * (n as f64 - 1.0);
    ((1.0 - m).powi(2) / (2.0 - 4.0 * m), (1.0 - 2.0 * m) / (1.0 - m))
}

fn require_lowest(spec: &SpectralResult) -> Result<()> {
    if spec.constraint == Constraint::Lowest {
        Ok(())
    } else {
        Err(Error::Domain("expected a lowest eigenpair of -Δ + cR".into()))
    }
}

/// Right-hand side of the λ₀ derivative formula.
pub fn lemma31_rhs(state: &MetricState, spec: &SpectralResult, params: &FlowParams) -> Result<f64> {
    require_lowest(spec)?;
    let report = curvature_report(state)?;
    let e = eigen_integrals(state, &report, spec)?;
    let (rho, c) = (params.rho, params.c);
    let a = lemma31_coefficient(rho, c, state.dim());
    Ok((a - 2.0 * rho) * c * e.r2_f2 + (a - 2.0 * rho) * e.r_grad2 - a * spec.lambda * e.r_f2
        + 2.0 * e.ric_grad
        + 2.0 * c * e.ric2_f2)
}

/// ∫ |Ric − 2k ∇²log f|² f², on Einstein spheres (f constant) and the periodic grid.
fn completed_square(state: &MetricState, report: &CurvatureReport, spec: &SpectralResult, k: f64) -> Result<f64> {
    match &state.dof {
        Dof::Scale(_) => {
            let f2 = spec.f.first().map_or(0.0, |f| f * f) * state.volume();
            Ok(report.ric_norm_sq[0] * f2)
        }
        Dof::Conformal { u, base } => {
            let Discretization::PeriodicGrid { n, h } = base.discretization else {
                return Err(Error::UnsupportedFamily(state.kind().name()));
            };
            let f = &spec.f;
            if f.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain("log f needs a positive eigenfunction".into()));
            }
            let phi: Vec<f64> = f.iter().map(|v| v.ln()).collect();
            let idx = |ix: usize, iy: usize| crate::families::grid::node(n, ix % n, iy % n);
            let mut total = 0.0;
            for iy in 0..n {
                for ix in 0..n {
                    let (xp, xm, yp, ym) = (ix + 1, ix + n - 1, iy + 1, iy + n - 1);
                    let i = idx(ix, iy);
                    let d = |g: &[f64]| {
                        let gx = (g[idx(xp, iy)] - g[idx(xm, iy)]) / (2.0 * h);
                        let gy = (g[idx(ix, yp)] - g[idx(ix, ym)]) / (2.0 * h);
                        let gxx = (g[idx(xp, iy)] - 2.0 * g[i] + g[idx(xm, iy)]) / (h * h);
                        let gyy = (g[idx(ix, yp)] - 2.0 * g[i] + g[idx(ix, ym)]) / (h * h);
                        let gxy = (g[idx(xp, yp)] - g[idx(xp, ym)] - g[idx(xm, yp)] + g[idx(xm, ym)]) / (4.0 * h * h);
                        (gx, gy, gxx, gyy, gxy)
                    };
                    let (px, py, pxx, pyy, pxy) = d(&phi);
                    let (ux, uy, ..) = d(u);
                    let cross = ux * px + uy * py;
                    let hxx = pxx - 2.0 * ux * px + cross;
                    let hyy = pyy - 2.0 * uy * py + cross;
                    let hxy = pxy - (ux * py + uy * px);
                    let e2u = (2.0 * u[i]).exp();
                    let ric = 0.5 * report.scalar[i] * e2u;
                    let txx = ric - 2.0 * k * hxx;
                    let tyy = ric - 2.0 * k * hyy;
                    let txy = -2.0 * k * hxy;
                    let norm2 = (txx * txx + tyy * tyy + 2.0 * txy * txy) / (e2u * e2u);
                    total += base.mass[i] * e2u * f[i] * f[i] * norm2;
                }
            }
            Ok(total)
        }
        Dof::Triple(_) => Err(Error::UnsupportedFamily(FamilyKind::SU2Homogeneous.name())),
    }
}

/// The completed-square rearrangement of [`lemma31_rhs`].
pub fn lemma32_rhs(state: &MetricState, spec: &SpectralResult, params: &FlowParams) -> Result<f64> {
    require_lowest(spec)?;
    if state.kind() == FamilyKind::ConformalSphere2D {
        return Err(Error::UnsupportedFamily(state.kind().name()));
    }
    let report = curvature_report(state)?;
    let e = eigen_integrals(state, &report, spec)?;
    let (rho, c) = (params.rho, params.c);
    let (big_k, k) = lemma32_coefficients(rho, state.dim());
    let square = completed_square(state, &report, spec, k)?;
    Ok(big_k * square + (2.0 * c - big_k) * e.ric2_f2
        - rho * spec.lambda * e.r_f2
        - rho * c * e.r2_f2
        - rho * e.r_grad2)
}

/// Right-hand side of the λ₁ derivative formula.
pub fn lemma41_rhs(state: &MetricState, spec: &SpectralResult, params: &FlowParams) -> Result<f64> {
    if spec.constraint != Constraint::FirstNonzeroMeanZero {
        return Err(Error::Domain("expected a first nonzero eigenpair of -Δ".into()));
    }
    let report = curvature_report(state)?;
    let e = eigen_integrals(state, &report, spec)?;
    let n = state.dim() as f64;
    let rho = params.rho;
    Ok(2.0 * e.ric_grad + (1.0 - n * rho) * spec.lambda * e.r_f2 - ((2.0 - n) * rho + 1.0) * e.r_grad2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Eigenvalue {
    /// Lowest eigenvalue of −Δ + cR.
    Lambda0 { c: f64 },
    Lambda1,
}

pub fn eigenvalue_at(state: &MetricState, which: Eigenvalue, opts: &SolverOptions) -> Result<f64> {
    match which {
        Eigenvalue::Lambda0 { c } => Ok(lowest_eigenpair(&build_operators(state, c)?, opts)?.lambda),
        Eigenvalue::Lambda1 => Ok(first_nonzero_eigenpair(state, opts)?.lambda),
    }
}

/// Default difference step min(1e−4, (t_stop − t)/10).
pub fn default_fd_step(traj: &Trajectory, t: f64) -> f64 {
    1e-4f64.min((traj.t_stop - t) / 10.0)
}

/// dλ/dt at `t` by a central difference, or a one-sided second-order
/// difference when `t < h`.
pub fn fd_eigen_derivative(
    traj: &Trajectory,
    which: Eigenvalue,
    t: f64,
    h: Option<f64>,
    opts: &SolverOptions,
) -> Result<f64> {
    let h = h.unwrap_or_else(|| default_fd_step(traj, t));
    if !(h > 0.0) {
        return Err(Error::Domain(format!("difference step must be positive, got {h}")));
    }
    let lam = |s: f64| -> Result<f64> { eigenvalue_at(&traj.state_at(s)?, which, opts) };
    if t < h {
        if t + 2.0 * h > traj.t_stop {
            return Err(Error::Domain(format!("step {h} too large: t + 2h beyond t_stop = {}", traj.t_stop)));
        }
        Ok((-3.0 * lam(t)? + 4.0 * lam(t + h)? - lam(t + 2.0 * h)?) / (2.0 * h))
    } else {
        if t + h > traj.t_stop {
            return Err(Error::Domain(format!("step {h} too large: t + h beyond t_stop = {}", traj.t_stop)));
        }
        Ok((lam(t + h)? - lam(t - h)?) / (2.0 * h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCheck {
    pub holds: bool,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchingCheck {
    pub holds: bool,
    pub a: f64,
    /// Minimum of the pinching deficit at t = 0.
    pub deficit: f64,
    /// R(0) ≥ 2a/(1−nρ).
    pub scalar_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub thm12_case1: ThresholdCheck,
    pub thm12_case2: ThresholdCheck,
    pub thm13: PinchingCheck,
    pub thm14: bool,
    pub prop_admissibility: bool,
    pub nonneg_curvature_operator: bool,
    pub notes: Vec<String>,
}

fn at_least(value: f64, threshold: f64) -> bool {
    value >= threshold - 1e-12 * threshold.abs().max(1.0)
}

pub fn case1_threshold(rho: f64, n: usize) -> f64 {
    let m = rho * (n as f64 - 1.0);
    (1.0 - m).powi(2) / (4.0 - 8.0 * m)
}

/// Infinite when 1 − 2(n−1)ρ ≤ 0.
pub fn case2_threshold(rho: f64, n: usize) -> f64 {
    let n = n as f64;
    let denom = 2.0 * (1.0 - 2.0 * (n - 1.0) * rho);
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 - (n - 2.0) * rho) / denom
    }
}

/// Nonnegative curvature operator, certified from family structure.
fn certify_nonneg_operator(state: &MetricState, report: &CurvatureReport, notes: &mut Vec<String>) -> bool {
    match &state.dof {
        Dof::Scale(_) => true,
        // in dimension two the curvature operator is R/2
        Dof::Conformal { .. } => report.r_min >= 0.0,
        Dof::Triple([a, b, c]) => {
            if milnor_sectional(*a, *b, *c).iter().all(|&k| k >= 0.0) {
                true
            } else if report.min_ricci_eigen()[0] >= 0.0 {
                notes.push("nonnegative Ricci in dimension three accepted in place of the curvature operator".into());
                true
            } else {
                false
            }
        }
    }
}

/// Evaluates every hypothesis at t = 0. Never fails on unmet hypotheses.
pub fn hypothesis_check(params: &FlowParams, state0: &MetricState, a: f64) -> Result<HypothesisReport> {
    let report = curvature_report(state0)?;
    let n = state0.dim();
    let nf = n as f64;
    let (rho, c) = (params.rho, params.c);
    let mut notes = Vec::new();
    let bound = FlowParams::admissibility_bound(n);
    let prop_admissibility = rho < bound;
    if !prop_admissibility {
        notes.push(format!("rho = {rho} is not below 1/(2(n-1)) = {bound}"));
    }

    let t1 = case1_threshold(rho, n);
    let case1 = rho <= 0.0 && at_least(c, t1) && report.r_min >= 0.0;

    let nonneg_operator = certify_nonneg_operator(state0, &report, &mut notes);
    let t2 = case2_threshold(rho, n);
    let case2 = rho > 0.0 && rho <= bound && at_least(c, t2) && nonneg_operator;

    let deficit = einstein_pinching_deficit(&report, rho, a, n);
    let scalar_lower_bound = if 1.0 - nf * rho > 0.0 {
        report.r_min >= 2.0 * a / (1.0 - nf * rho)
    } else {
        notes.push("1 - n rho <= 0: scalar lower bound undefined".into());
        false
    };
    if a < 0.0 {
        notes.push("negative a makes the pinching hypothesis vacuous".into());
    }
    let thm13 = PinchingCheck {
        holds: a >= 0.0 && deficit >= -1e-12 && scalar_lower_bound && prop_admissibility,
        a,
        deficit,
        scalar_lower_bound,
    };
    let thm14 = n == 3 && report.min_ricci_eigen().iter().all(|&r| r > 0.0) && rho <= bound;

    Ok(HypothesisReport {
        thm12_case1: ThresholdCheck { holds: case1, threshold: t1 },
        thm12_case2: ThresholdCheck { holds: case2, threshold: t2 },
        thm13,
        thm14,
        prop_admissibility,
        nonneg_curvature_operator: nonneg_operator,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub q: Option<f64>,
    pub rhs31: Option<f64>,
    pub rhs32: Option<f64>,
    pub rhs41: Option<f64>,
    pub fd0: Option<f64>,
    pub fd1: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub sigma: Option<f64>,
    pub pinch: Option<f64>,
    pub flags: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorOptions {
    pub c: f64,
    pub a: f64,
    pub solver: SolverOptions,
    /// Evaluate every k-th trajectory sample; the final sample is always included.
    pub sample_stride: usize,
    pub lambda0: bool,
    pub lambda1: bool,
    pub derivatives: bool,
}

impl MonitorOptions {
    pub fn new(c: f64) -> Self {
        Self { c, a: 0.0, solver: SolverOptions::default(), sample_stride: 1, lambda0: true, lambda1: true, derivatives: false }
    }
}

fn supports_spectra(state: &MetricState) -> bool {
    !matches!(state.dof, Dof::Triple(_))
}

/// Evaluates the monitored quantities at the sampled points of `traj`.
pub fn monitor_trajectory(traj: &Trajectory, opts: &MonitorOptions) -> Result<Vec<MonitorRecord>> {
    if opts.sample_stride == 0 {
        return Err(Error::Config("sample stride must be >= 1".into()));
    }
    let mut params = traj.params.clone();
    params.c = opts.c;
    let first = traj.first();
    let rescale = rescale_params(params.rho, opts.c, params.n, first.curvature.r_max).ok();
    let eps = first.curvature.r_max;
    let spectra = supports_spectra(&first.state);
    let rho = params.rho;
    let last = traj.samples.len() - 1;
    let indices: Vec<usize> = (0..=last).filter(|i| i % opts.sample_stride == 0 || *i == last).collect();

    let mut records = Vec::with_capacity(indices.len());
    for idx in indices {
        let sample = &traj.samples[idx];
        let (state, curv) = (&sample.state, &sample.curvature);
        let t = sample.t();
        let mut rec = MonitorRecord {
            t,
            lambda0: None,
            lambda1: None,
            q: None,
            rhs31: None,
            rhs32: None,
            rhs41: None,
            fd0: None,
            fd1: None,
            r_min: curv.r_min,
            r_max: curv.r_max,
            sigma: None,
            pinch: curv.pinch,
            flags: BTreeMap::new(),
        };
        if eps > 0.0 {
            if let Ok(s) = sigma_bound(eps, rho, t) {
                rec.sigma = Some(s);
                rec.flags.insert("sigma_ok".into(), curv.r_max <= s * (1.0 + 1e-6));
            }
        }
        let deficit = einstein_pinching_deficit(curv, rho, opts.a, state.dim());
        rec.flags.insert("pinching_deficit_ok".into(), deficit >= -1e-12);

        let fd_ok = opts.derivatives && t < traj.t_stop && default_fd_step(traj, t) > 0.0;
        if spectra && opts.lambda0 {
            let spec = lowest_eigenpair(&build_operators(state, opts.c)?, &opts.solver)?;
            rec.lambda0 = Some(spec.lambda);
            if let Some(rp) = &rescale {
                rec.q = rescaled_quantity(spec.lambda, t, rp).ok();
            }
            if opts.derivatives {
                rec.rhs31 = Some(lemma31_rhs(state, &spec, &params)?);
                rec.rhs32 = match lemma32_rhs(state, &spec, &params) {
                    Ok(v) => Some(v),
                    Err(Error::UnsupportedFamily(_)) | Err(Error::Domain(_)) => None,
                    Err(e) => return Err(e),
                };
            }
            if fd_ok {
                rec.fd0 = Some(fd_eigen_derivative(traj, Eigenvalue::Lambda0 { c: opts.c }, t, None, &opts.solver)?);
            }
        }
        if spectra && opts.lambda1 {
            let spec = first_nonzero_eigenpair(state, &opts.solver)?;
            rec.lambda1 = Some(spec.lambda);
            if opts.derivatives {
                rec.rhs41 = Some(lemma41_rhs(state, &spec, &params)?);
            }
            if fd_ok {
                rec.fd1 = Some(fd_eigen_derivative(traj, Eigenvalue::Lambda1, t, None, &opts.solver)?);
            }
        }
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { detail: String },
    Static,
    HypothesisNotMet,
    HypothesisLost { t: f64 },
    Skipped { reason: String },
}

impl Verdict {
    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail { .. } => "fail",
            Verdict::Static => "static",
            Verdict::HypothesisNotMet => "hypothesis-not-met",
            Verdict::HypothesisLost { .. } => "hypothesis-lost",
            Verdict::Skipped { .. } => "skipped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    /// (i) λ₀ strictly increasing under the first threshold.
    Lambda0Monotone,
    /// (ii) Q strictly increasing under the second threshold.
    QMonotone,
    /// (iii) λ₁ strictly increasing under the pinching hypothesis.
    Lambda1Monotone,
    /// (iv) λ₁ ≥ (3/2)·pinch·R_min and divergence at blow-up.
    Divergence,
    /// (v) max R(t) > min R(0).
    MaxRStrict,
    RMinNondecreasing,
    SigmaBound,
    BlowupTimeBound,
    PinchPreserved,
    HorizonBeforeStop,
    LemmaIdentity,
    DerivativeMatch,
}

impl Audit {
    pub const ALL: [Audit; 12] = [
        Audit::Lambda0Monotone,
        Audit::QMonotone,
        Audit::Lambda1Monotone,
        Audit::Divergence,
        Audit::MaxRStrict,
        Audit::RMinNondecreasing,
        Audit::SigmaBound,
        Audit::BlowupTimeBound,
        Audit::PinchPreserved,
        Audit::HorizonBeforeStop,
        Audit::LemmaIdentity,
        Audit::DerivativeMatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Audit::Lambda0Monotone => "lambda0_monotone",
            Audit::QMonotone => "q_monotone",
            Audit::Lambda1Monotone => "lambda1_monotone",
            Audit::Divergence => "divergence",
            Audit::MaxRStrict => "max_r_strict",
            Audit::RMinNondecreasing => "r_min_nondecreasing",
            Audit::SigmaBound => "sigma_bound",
            Audit::BlowupTimeBound => "blowup_time_bound",
            Audit::PinchPreserved => "pinch_preserved",
            Audit::HorizonBeforeStop => "horizon_before_stop",
            Audit::LemmaIdentity => "lemma_identity",
            Audit::DerivativeMatch => "derivative_match",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub audit: Audit,
    pub verdict: Verdict,
}

/// Run-level facts the audits need beyond the records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditContext {
    pub n: usize,
    pub rho: f64,
    pub static_run: bool,
    pub stop_reason: StopReason,
    pub t_stop: f64,
    /// λ₁ must exceed this before t_stop on runs that blew up.
    pub divergence_bound: f64,
    /// Relative tolerance of the derivative-match audit.
    pub derivative_tol: f64,
}

impl AuditContext {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let conformal = traj.first().state.kind().is_conformal();
        Self {
            n: traj.params.n,
            rho: traj.params.rho,
            static_run: traj.is_static(),
            stop_reason: traj.stop_reason,
            t_stop: traj.t_stop,
            divergence_bound: 1e3,
            derivative_tol: if conformal { 5e-2 } else { 1e-2 },
        }
    }
}

fn strictly_increasing(series: &[(f64, f64)]) -> std::result::Result<(), String> {
    for w in series.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        if !(v1 - v0 > STRICTNESS * (1.0 + v0.abs())) {
            return Err(format!("value {v1:.12e} at t = {t1} does not exceed {v0:.12e} at t = {t0}"));
        }
    }
    Ok(())
}

fn monotone_verdict(series: Vec<(f64, f64)>, holds: bool, ctx: &AuditContext, what: &str) -> Verdict {
    if !holds {
        return Verdict::HypothesisNotMet;
    }
    if ctx.static_run {
        return Verdict::Static;
    }
    if series.len() < 2 {
        return Verdict::Skipped { reason: format!("{what} not recorded") };
    }
    match strictly_increasing(&series) {
        Ok(()) => Verdict::Pass,
        Err(detail) => Verdict::Fail { detail: format!("{what}: {detail}") },
    }
}

fn series(records: &[MonitorRecord], get: impl Fn(&MonitorRecord) -> Option<f64>) -> Vec<(f64, f64)> {
    records.iter().filter_map(|r| get(r).map(|v| (r.t, v))).collect()
}

/// Verdicts for the eigenvalue, divergence and scalar-curvature audits.
pub fn monotonicity_audit(
    records: &[MonitorRecord],
    hyp: &HypothesisReport,
    ctx: &AuditContext,
) -> Result<Vec<AuditEntry>> {
    if records.len() < 3 {
        return Err(Error::Domain(format!("audits need at least 3 records, got {}", records.len())));
    }
    let mut out = Vec::new();
    let mut push = |audit, verdict| out.push(AuditEntry { audit, verdict });

    push(
        Audit::Lambda0Monotone,
        monotone_verdict(series(records, |r| r.lambda0), hyp.thm12_case1.holds, ctx, "lambda0"),
    );
    push(Audit::QMonotone, monotone_verdict(series(records, |r| r.q), hyp.thm12_case2.holds, ctx, "Q"));

    // the pinching condition must hold along the flow; stop at the first loss
    let lost_at = records.iter().find(|r| r.flags.get("pinching_deficit_ok") == Some(&false)).map(|r| r.t);
    let kept: Vec<MonitorRecord> = records.iter().filter(|r| lost_at.is_none_or(|t| r.t < t)).cloned().collect();
    let v = monotone_verdict(series(&kept, |r| r.lambda1), hyp.thm13.holds, ctx, "lambda1");
    let v = match (lost_at, v) {
        (Some(t), Verdict::Pass | Verdict::Skipped { .. }) => Verdict::HypothesisLost { t },
        (_, v) => v,
    };
    push(Audit::Lambda1Monotone, v);

    push(Audit::Divergence, divergence_verdict(records, hyp, ctx));

    let v = if ctx.static_run {
        Verdict::Static
    } else {
        let floor = records[0].r_min;
        match records.iter().skip(1).find(|r| !(r.r_max > floor)) {
            Some(r) => Verdict::Fail { detail: format!("max R = {:.12e} at t = {} not above {floor:.12e}", r.r_max, r.t) },
            None => Verdict::Pass,
        }
    };
    push(Audit::MaxRStrict, v);
    Ok(out)
}

fn divergence_verdict(records: &[MonitorRecord], hyp: &HypothesisReport, ctx: &AuditContext) -> Verdict {
    if !hyp.thm14 {
        return Verdict::HypothesisNotMet;
    }
    let Some(pinch0) = records[0].pinch else {
        return Verdict::HypothesisNotMet;
    };
    let floor = pinch0.min(1.0 / 3.0);
    let mut seen = false;
    for r in records {
        let Some(l1) = r.lambda1 else { continue };
        seen = true;
        let bound = 1.5 * floor * r.r_min;
        if l1 < bound * (1.0 - 1e-9) {
            return Verdict::Fail { detail: format!("lambda1 = {l1:.12e} below {bound:.12e} at t = {}", r.t) };
        }
    }
    if !seen {
        return Verdict::Skipped { reason: "lambda1 not recorded".into() };
    }
    if ctx.stop_reason == StopReason::Blowup {
        let peak = records.iter().filter_map(|r| r.lambda1).fold(f64::NEG_INFINITY, f64::max);
        if !(peak > ctx.divergence_bound) {
            return Verdict::Fail {
                detail: format!("lambda1 peaks at {peak:.6e}, below {:.1e} before blow-up", ctx.divergence_bound),
            };
        }
    }
    Verdict::Pass
}

/// Curvature audits on the full trajectory and consistency audits on the records.
pub fn flow_audits(traj: &Trajectory, records: &[MonitorRecord], hyp: &HypothesisReport, ctx: &AuditContext) -> Vec<AuditEntry> {
    let mut out = Vec::new();
    let s0 = &traj.first().curvature;
    let rho = ctx.rho;
    let nf = ctx.n as f64;
    let nonneg = s0.r_min >= 0.0 && s0.r_max > 0.0;

    let mut v = Verdict::Pass;
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0].curvature.r_min, w[1].curvature.r_min);
        if b < a - 1e-8 * (1.0 + a.abs()) {
            v = Verdict::Fail { detail: format!("R_min drops from {a:.12e} to {b:.12e} at t = {}", w[1].t()) };
            break;
        }
    }
    out.push(AuditEntry { audit: Audit::RMinNondecreasing, verdict: v });

    let v = if !nonneg {
        Verdict::HypothesisNotMet
    } else {
        let eps = s0.r_max;
        let mut v = Verdict::Pass;
        for s in &traj.samples {
            if let Ok(sigma) = sigma_bound(eps, rho, s.t()) {
                if s.curvature.r_max > sigma * (1.0 + 1e-6) {
                    v = Verdict::Fail {
                        detail: format!("R_max = {:.12e} exceeds sigma = {sigma:.12e} at t = {}", s.curvature.r_max, s.t()),
                    };
                    break;
                }
            }
        }
        v
    };
    out.push(AuditEntry { audit: Audit::SigmaBound, verdict: v });

    let v = if s0.r_min > 0.0 && 1.0 - nf * rho > 0.0 {
        let bound = nf / (2.0 * (1.0 - nf * rho) * s0.r_min);
        if ctx.t_stop <= bound * (1.0 + 1e-3) {
            Verdict::Pass
        } else {
            Verdict::Fail { detail: format!("solution survives to {} beyond the bound {bound}", ctx.t_stop) }
        }
    } else {
        Verdict::HypothesisNotMet
    };
    out.push(AuditEntry { audit: Audit::BlowupTimeBound, verdict: v });

    let v = match s0.pinch {
        Some(p0) if s0.min_ricci_eigen().iter().all(|&r| r >= 0.0) => {
            match traj.samples.iter().find(|s| s.curvature.pinch.is_none_or(|p| p < p0 - 1e-8)) {
                Some(s) => Verdict::Fail { detail: format!("pinching {:?} below {p0} at t = {}", s.curvature.pinch, s.t()) },
                None => Verdict::Pass,
            }
        }
        _ => Verdict::HypothesisNotMet,
    };
    out.push(AuditEntry { audit: Audit::PinchPreserved, verdict: v });

    let v = if !(nonneg && hyp.nonneg_curvature_operator) || rho >= 1.0 {
        Verdict::HypothesisNotMet
    } else if ctx.stop_reason != StopReason::Blowup {
        Verdict::Skipped { reason: format!("run ended by {}", ctx.stop_reason.name()) }
    } else {
        let t_prime = sigma_horizon(s0.r_max, rho);
        if t_prime <= ctx.t_stop * (1.0 + 1e-3) {
            Verdict::Pass
        } else {
            Verdict::Fail { detail: format!("T' = {t_prime} exceeds t_stop = {}", ctx.t_stop) }
        }
    };
    out.push(AuditEntry { audit: Audit::HorizonBeforeStop, verdict: v });

    let pairs: Vec<(f64, f64, f64)> =
        records.iter().filter_map(|r| Some((r.t, r.rhs31?, r.rhs32?))).collect();
    let v = if pairs.is_empty() {
        Verdict::Skipped { reason: "no paired derivative formulas".into() }
    } else if traj.first().state.kind() != FamilyKind::EinsteinSphere {
        // on grids the two forms agree only up to discretization error
        Verdict::Skipped { reason: "identity is exact only on Einstein states".into() }
    } else {
        match pairs.iter().find(|(_, a, b)| (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1e-300)) {
            Some((t, a, b)) => Verdict::Fail { detail: format!("{a:.15e} vs {b:.15e} at t = {t}") },
            None => Verdict::Pass,
        }
    };
    out.push(AuditEntry { audit: Audit::LemmaIdentity, verdict: v });

    let mut checked = 0;
    let mut v = Verdict::Pass;
    for r in records {
        for (label, fd, rhs) in [("lambda0", r.fd0, r.rhs31), ("lambda1", r.fd1, r.rhs41)] {
            let (Some(fd), Some(rhs)) = (fd, rhs) else { continue };
            checked += 1;
            let tol = (ctx.derivative_tol * rhs.abs()).max(1e-8);
            if (fd - rhs).abs() > tol && !v.is_failure() {
                v = Verdict::Fail { detail: format!("{label}: fd {fd:.10e} vs formula {rhs:.10e} at t = {}", r.t) };
            }
        }
    }
    if checked == 0 {
        v = Verdict::Skipped { reason: "no derivative pairs recorded".into() };
    }
    out.push(AuditEntry { audit: Audit::DerivativeMatch, verdict: v });
    out
}

/// All audits for a monitored trajectory, in [`Audit::ALL`] order.
pub fn run_audits(traj: &Trajectory, records: &[MonitorRecord], hyp: &HypothesisReport) -> Result<Vec<AuditEntry>> {
    let ctx = AuditContext::from_trajectory(traj);
    let mut all = monotonicity_audit(records, hyp, &ctx)?;
    all.extend(flow_audits(traj, records, hyp, &ctx));
    all.sort_by_key(|e| e.audit);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{init_state, ConformalPreset, FamilySpec};
    use crate::flow::{integrate, DtPolicy};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn spectra(state: &MetricState, c: f64) -> (SpectralResult, SpectralResult) {
        let opts = SolverOptions::default();
        (
            lowest_eigenpair(&build_operators(state, c).unwrap(), &opts).unwrap(),
            first_nonzero_eigenpair(state, &opts).unwrap(),
        )
    }

    #[test]
    fn rescale_examples() {
        let rp = rescale_params(0.1, 0.75, 3, 6.0).unwrap();
        assert!(close(rp.alpha, 1.0 / 9.0, 1e-12));
        assert!(close(rp.t_prime, 1.0 / 10.8, 1e-12));
        assert_eq!(rescale_params(0.0, 0.5, 3, 6.0).unwrap().alpha, 0.0);
        assert!(close(rescale_params(0.0, 0.5, 3, 6.0).unwrap().t_prime, 1.0 / 12.0, 1e-15));
        assert!(rescale_params(1.0, 0.5, 3, 6.0).is_err());
        assert!(rescale_params(0.0, 0.5, 3, 0.0).is_err());
    }

    #[test]
    fn rescaled_quantity_examples() {
        let rp = rescale_params(0.1, 0.75, 3, 6.0).unwrap();
        let q = rescaled_quantity(4.5, 0.0, &rp).unwrap();
        assert!(close(q, 10.8f64.powf(1.0 / 9.0) * 4.5, 1e-12));
        assert!(close(q, 5.8652, 1e-3));
        assert_eq!(rescaled_quantity(0.0, 0.01, &rp).unwrap(), 0.0);
        assert!(rescaled_quantity(1.0, rp.t_prime, &rp).is_err());
        let flat = RescaleParams { eps_max_r0: 1.0, t_prime: 2.0, alpha: 0.0 };
        assert_eq!(rescaled_quantity(3.5, 1.5, &flat).unwrap(), 3.5);
    }

    #[test]
    fn coefficient_specializations() {
        for c in [0.0, 0.3, 1.0] {
            assert!((lemma31_coefficient(0.0, c, 3) - (2.0 * c - 1.0)).abs() < 1e-15);
        }
        assert_eq!(lemma32_coefficients(0.0, 3).1, 1.0);
        assert_eq!(lemma32_coefficients(0.0, 3).0, 0.5);
    }

    #[test]
    fn lemma_values_on_einstein_spheres() {
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let params = FlowParams::new(0.1, 0.75, 3);
        let (l0, l1) = spectra(&s3, 0.75);
        let a = lemma31_rhs(&s3, &l0, &params).unwrap();
        let b = lemma32_rhs(&s3, &l0, &params).unwrap();
        assert!(close(a, 12.6, 1e-12), "{a}");
        assert!(close(a, b, 1e-10), "{a} {b}");
        assert!(lemma31_rhs(&s3, &l1, &params).is_err());

        let s2 = init_state(&FamilySpec::einstein_sphere(2, 1.0)).unwrap();
        let params = FlowParams::new(0.0, 0.5, 2);
        let (l0, l1) = spectra(&s2, 0.5);
        assert!(close(lemma31_rhs(&s2, &l0, &params).unwrap(), 2.0, 1e-12));
        assert!(close(lemma32_rhs(&s2, &l0, &params).unwrap(), 2.0, 1e-12));
        assert!(close(lemma41_rhs(&s2, &l1, &params).unwrap(), 4.0, 1e-12));

        let params = FlowParams::new(0.0, 0.0, 3);
        let (_, l1) = spectra(&s3, 0.0);
        assert!(close(lemma41_rhs(&s3, &l1, &params).unwrap(), 12.0, 1e-12));
    }

    #[test]
    fn static_torus_formulas_vanish() {
        let torus = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Zero)).unwrap();
        let params = FlowParams::new(0.0, 0.7, 2);
        let (l0, l1) = spectra(&torus, 0.7);
        assert_eq!(lemma31_rhs(&torus, &l0, &params).unwrap(), 0.0);
        assert!(lemma32_rhs(&torus, &l0, &params).unwrap().abs() < 1e-12);
        assert_eq!(lemma41_rhs(&torus, &l1, &params).unwrap(), 0.0);
    }

    #[test]
    fn non_converged_spec_is_rejected() {
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let (mut l0, _) = spectra(&s3, 0.75);
        l0.residual = 1.0;
        let params = FlowParams::new(0.1, 0.75, 3);
        assert!(matches!(lemma31_rhs(&s3, &l0, &params), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn sphere_mesh_rejects_hessian_form() {
        let s = init_state(&FamilySpec::conformal_sphere(2, ConformalPreset::Zero)).unwrap();
        let (l0, _) = spectra(&s, 0.5);
        let params = FlowParams::new(0.0, 0.5, 2);
        assert!(matches!(lemma32_rhs(&s, &l0, &params), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn fd_derivatives_on_closed_forms() {
        let opts = SolverOptions::default();
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let params = FlowParams::new(0.1, 0.75, 3).with_dt(1e-4, DtPolicy::Fixed).with_t_max(0.01);
        let traj = integrate(&s3, &params).unwrap();
        let d = fd_eigen_derivative(&traj, Eigenvalue::Lambda0 { c: 0.75 }, 0.0, Some(1e-4), &opts).unwrap();
        assert!(close(d, 12.6, 1e-2), "{d}");

        let s2 = init_state(&FamilySpec::einstein_sphere(2, 1.0)).unwrap();
        let params = FlowParams::new(0.0, 0.0, 2).with_dt(1e-4, DtPolicy::Fixed).with_t_max(0.01);
        let traj = integrate(&s2, &params).unwrap();
        let d = fd_eigen_derivative(&traj, Eigenvalue::Lambda1, 0.005, Some(1e-4), &opts).unwrap();
        let s = 1.0 - 2.0 * 0.005;
        assert!(close(d, 4.0 / (s * s), 1e-2), "{d}");
        assert!(fd_eigen_derivative(&traj, Eigenvalue::Lambda1, 0.0095, Some(1e-3), &opts).is_err());

        let torus = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Zero)).unwrap();
        let params = FlowParams::new(0.0, 0.0, 2).with_dt(1e-4, DtPolicy::Fixed).with_t_max(0.002);
        let traj = integrate(&torus, &params).unwrap();
        let d = fd_eigen_derivative(&traj, Eigenvalue::Lambda1, 0.001, None, &opts).unwrap();
        assert!(d.abs() < 1e-8, "{d}");
    }

    #[test]
    fn hypothesis_examples() {
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let h = hypothesis_check(&FlowParams::new(0.3, 0.5, 3), &s3, 0.0).unwrap();
        assert!(!h.prop_admissibility);

        let h = hypothesis_check(&FlowParams::new(-0.5, 0.6, 3), &s3, 0.0).unwrap();
        assert!((h.thm12_case1.threshold - 1.0 / 3.0).abs() < 1e-15);
        assert!(h.thm12_case1.holds);
        assert!(!h.thm12_case2.holds);

        let h = hypothesis_check(&FlowParams::new(0.1, 0.75, 3), &s3, 0.0).unwrap();
        assert!((h.thm12_case2.threshold - 0.75).abs() < 1e-12);
        assert!(h.thm12_case2.holds);
        assert!(h.thm14);

        assert_eq!(case2_threshold(0.25, 3), f64::INFINITY);
    }

    #[test]
    fn hypothesis_on_surfaces_and_su2() {
        let sphere = init_state(&FamilySpec::conformal_sphere(2, ConformalPreset::CosX(0.1))).unwrap();
        let h = hypothesis_check(&FlowParams::new(0.1, 0.0, 2), &sphere, 0.0).unwrap();
        assert!(h.thm13.holds);
        assert_eq!(h.thm13.deficit, 0.0);
        assert!(h.nonneg_curvature_operator);

        let torus = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::CosX(0.1))).unwrap();
        let h = hypothesis_check(&FlowParams::new(0.0, 0.6, 2), &torus, 0.0).unwrap();
        assert!(!h.thm12_case1.holds);
        assert!(!h.nonneg_curvature_operator);

        let berger = init_state(&FamilySpec::su2(1.0, 1.0, 0.8)).unwrap();
        let h = hypothesis_check(&FlowParams::new(0.1, 0.8, 3), &berger, 0.0).unwrap();
        assert!(h.nonneg_curvature_operator);
        assert!(h.thm14);
    }

    fn record(t: f64, l0: f64) -> MonitorRecord {
        MonitorRecord {
            t,
            lambda0: Some(l0),
            lambda1: Some(l0),
            q: None,
            rhs31: None,
            rhs32: None,
            rhs41: None,
            fd0: None,
            fd1: None,
            r_min: 1.0,
            r_max: 2.0,
            sigma: None,
            pinch: None,
            flags: BTreeMap::new(),
        }
    }

    fn context(static_run: bool) -> AuditContext {
        AuditContext {
            n: 2,
            rho: 0.0,
            static_run,
            stop_reason: StopReason::Horizon,
            t_stop: 1.0,
            divergence_bound: 1e3,
            derivative_tol: 1e-2,
        }
    }

    #[test]
    fn strictness_tolerance() {
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let hyp = hypothesis_check(&FlowParams::new(-0.5, 0.6, 3), &s3, 0.0).unwrap();
        let good = vec![record(0.0, 1.0), record(0.1, 1.1), record(0.2, 1.2)];
        let v = monotonicity_audit(&good, &hyp, &context(false)).unwrap();
        assert_eq!(v[0].verdict, Verdict::Pass);
        let flat = vec![record(0.0, 1.0), record(0.1, 1.0 + 1e-12), record(0.2, 1.2)];
        assert!(monotonicity_audit(&flat, &hyp, &context(false)).unwrap()[0].verdict.is_failure());
        assert_eq!(monotonicity_audit(&flat, &hyp, &context(true)).unwrap()[0].verdict, Verdict::Static);
        assert!(monotonicity_audit(&good[..2], &hyp, &context(false)).is_err());
    }

    #[test]
    fn pinching_loss_downgrades() {
        let sphere = init_state(&FamilySpec::conformal_sphere(2, ConformalPreset::CosX(0.1))).unwrap();
        let hyp = hypothesis_check(&FlowParams::new(0.1, 0.0, 2), &sphere, 0.0).unwrap();
        let mut recs = vec![record(0.0, 1.0), record(0.1, 1.1), record(0.2, 1.0)];
        recs[2].flags.insert("pinching_deficit_ok".into(), false);
        let v = monotonicity_audit(&recs, &hyp, &context(false)).unwrap();
        assert_eq!(v[2].verdict, Verdict::HypothesisLost { t: 0.2 });
    }

    #[test]
    fn s3_rescaled_run_passes() {
        let s3 = init_state(&FamilySpec::einstein_sphere(3, 1.0)).unwrap();
        let params = FlowParams::new(0.1, 0.75, 3).with_dt(1e-3, DtPolicy::Fixed).with_t_max(0.08).with_record_stride(10);
        let traj = integrate(&s3, &params).unwrap();
        let mut opts = MonitorOptions::new(0.75);
        opts.derivatives = true;
        let recs = monitor_trajectory(&traj, &opts).unwrap();
        let hyp = hypothesis_check(&params, &s3, 0.0).unwrap();
        let audits = run_audits(&traj, &recs, &hyp).unwrap();
        assert_eq!(audits.len(), Audit::ALL.len());
        let get = |a| audits.iter().find(|e| e.audit == a).unwrap().verdict.clone();
        assert_eq!(get(Audit::QMonotone), Verdict::Pass);
        assert_eq!(get(Audit::LemmaIdentity), Verdict::Pass);
        assert_eq!(get(Audit::DerivativeMatch), Verdict::Pass);
        assert!(audits.iter().all(|e| !e.verdict.is_failure()), "{audits:?}");
    }

    #[test]
    fn static_torus_run_is_static() {
        let torus = init_state(&FamilySpec::conformal_torus(8, ConformalPreset::Zero)).unwrap();
        let params = FlowParams::new(0.0, 0.5, 2).with_dt(1e-3, DtPolicy::Fixed).with_t_max(0.003);
        let traj = integrate(&torus, &params).unwrap();
        let recs = monitor_trajectory(&traj, &MonitorOptions::new(0.5)).unwrap();
        let hyp = hypothesis_check(&params, &torus, 0.0).unwrap();
        let audits = run_audits(&traj, &recs, &hyp).unwrap();
        let get = |a| audits.iter().find(|e| e.audit == a).unwrap().verdict.clone();
        assert_eq!(get(Audit::MaxRStrict), Verdict::Static);
        assert_eq!(get(Audit::RMinNondecreasing), Verdict::Pass);
    }
}
