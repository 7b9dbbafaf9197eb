//! Time integration of ∂g/∂t = −2(Ric − ρRg) on each model family.
//!
//! Every family reduces to an ODE on its degrees of freedom:
//!
//! * Einstein sphere: `ds/dt = −2(n−1)(1−nρ)`,
//! * 2-D conformal: `∂u/∂t = −(1−2ρ) R / 2` pointwise,
//! * SU(2) Milnor frame: `da/dt = −2 r_a + 2ρ R a` and cyclic.
//!
//! Classical RK4 advances the dof vector. A step that would leave the space
//! of valid metrics is retried with half the step; the run stops at the
//! horizon, when the curvature proxy crosses the blow-up threshold, or when
//! the step underflows.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_report, CurvatureReport, RicciRepr};
use crate::error::{Error, Result};
use crate::families::{Dof, FamilySpec, MetricState};

pub const CFL_SAFETY: f64 = 0.5;
pub const DT_MIN: f64 = 1e-12;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;
pub const ODE_RELATIVE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtPolicy {
    Fixed,
    CflAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub rho: f64,
    /// Spectral coupling of −Δ + cR, carried for the monitors.
    pub c: f64,
    pub n: usize,
    pub dt_init: f64,
    pub dt_policy: DtPolicy,
    pub t_max: f64,
    pub blowup_threshold: f64,
    /// Keep every k-th accepted step in the trajectory.
    pub record_stride: usize,
}

impl FlowParams {
    pub fn new(rho: f64, c: f64, n: usize) -> Self {
        Self {
            rho,
            c,
            n,
            dt_init: 1e-3,
            dt_policy: DtPolicy::Fixed,
            t_max: 1.0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            record_stride: 1,
        }
    }

    pub fn with_dt(mut self, dt: f64, policy: DtPolicy) -> Self {
        self.dt_init = dt;
        self.dt_policy = policy;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// 1/(2(n−1)), the short-time existence bound on ρ.
    pub fn admissibility_bound(n: usize) -> f64 {
        1.0 / (2.0 * (n as f64 - 1.0))
    }

    pub fn validate_for(&self, family: &FamilySpec) -> Result<()> {
        let mut errors = Vec::new();
        if self.n != family.n {
            errors.push(format!("flow dimension {} does not match family dimension {}", self.n, family.n));
        }
        let bound = Self::admissibility_bound(family.n);
        if !self.rho.is_finite() {
            errors.push("rho must be finite".into());
        } else if family.kind.is_conformal() {
            if self.rho >= bound {
                errors.push(format!("rho must be < 1/(2(n-1)) = {bound} for PDE families, got {}", self.rho));
            }
        } else if self.rho > bound {
            errors.push(format!("rho must be <= 1/(2(n-1)) = {bound}, got {}", self.rho));
        }
        for (name, v) in [("dt", self.dt_init), ("t_max", self.t_max), ("blowup_threshold", self.blowup_threshold)] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.c.is_finite() {
            errors.push("c must be finite".into());
        }
        if self.record_stride == 0 {
            errors.push("record stride must be >= 1".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }
}

/// Right-hand side of the flow on the dof vector.
pub fn rb_rhs(state: &MetricState, rho: f64) -> Result<Vec<f64>> {
    rhs_with_curvature(state, rho, &curvature_report(state)?)
}

fn rhs_with_curvature(state: &MetricState, rho: f64, curv: &CurvatureReport) -> Result<Vec<f64>> {
    let n = state.dim() as f64;
    match (&state.dof, &curv.ricci) {
        (Dof::Scale(_), _) => Ok(vec![-2.0 * (n - 1.0) * (1.0 - n * rho)]),
        (Dof::Conformal { .. }, _) => {
            let k = -0.5 * (1.0 - 2.0 * rho);
            Ok(curv.scalar.iter().map(|r| k * r).collect())
        }
        (Dof::Triple(coef), RicciRepr::Milnor { diag, .. }) => {
            let r = curv.scalar[0];
            Ok((0..3).map(|i| -2.0 * diag[i] + 2.0 * rho * r * coef[i]).collect())
        }
        _ => Err(Error::InvalidState("curvature report does not match state".into())),
    }
}

/// Largest stable step for a conformal state:
/// `safety · min(m_g / S_ii) / (1 − 2ρ)`, which on the uniform grid is
/// `safety · h² · min e^{2u} / (4(1 − 2ρ))`.
pub fn cfl_limit(state: &MetricState, rho: f64) -> Option<f64> {
    let (u, base) = match &state.dof {
        Dof::Conformal { u, base } => (u, base),
        _ => return None,
    };
    let diag = base.stiffness.diagonal();
    let ratio = (0..u.len())
        .map(|i| base.mass[i] * (2.0 * u[i]).exp() / diag[i])
        .fold(f64::INFINITY, f64::min);
    Some(CFL_SAFETY * ratio / (1.0 - 2.0 * rho).abs().max(1e-12))
}

/// Step limit for the homogeneous families: each coefficient may change by
/// at most `ODE_RELATIVE_STEP` of itself, so steps shrink geometrically
/// towards a blow-up.
pub fn relative_step_limit(state: &MetricState, rho: f64) -> Result<Option<f64>> {
    if matches!(state.dof, Dof::Conformal { .. }) {
        return Ok(None);
    }
    let y = state.dof_vector();
    let dy = rb_rhs(state, rho)?;
    let limit = y
        .iter()
        .zip(&dy)
        .filter(|(_, d)| **d != 0.0)
        .map(|(y, d)| ODE_RELATIVE_STEP * (y / d).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(limit.is_finite().then_some(limit))
}

/// One classical RK4 step of size `dt`; fails if any stage leaves the space
/// of valid metrics.
pub fn rk4_step(state: &MetricState, rho: f64, dt: f64) -> Result<MetricState> {
    let y0 = state.dof_vector();
    let t0 = state.t;
    let shifted = |k: &[f64], h: f64| -> Vec<f64> { y0.iter().zip(k).map(|(y, k)| y + h * k).collect() };
    let k1 = rb_rhs(state, rho)?;
    let s2 = state.with_dof(shifted(&k1, 0.5 * dt), t0 + 0.5 * dt)?;
    let k2 = rb_rhs(&s2, rho)?;
    let s3 = state.with_dof(shifted(&k2, 0.5 * dt), t0 + 0.5 * dt)?;
    let k3 = rb_rhs(&s3, rho)?;
    let s4 = state.with_dof(shifted(&k3, dt), t0 + dt)?;
    let k4 = rb_rhs(&s4, rho)?;
    let y1: Vec<f64> = (0..y0.len())
        .map(|i| y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let next = state.with_dof(y1, t0 + dt)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Horizon,
    Blowup,
    StepUnderflow,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Horizon => "horizon",
            StopReason::Blowup => "blowup",
            StopReason::StepUnderflow => "step_underflow",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub state: MetricState,
    pub curvature: CurvatureReport,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stop_reason: StopReason,
    pub t_stop: f64,
    pub params: FlowParams,
    /// Accepted RK4 steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::t).collect()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    /// True when the metric never moved.
    pub fn is_static(&self) -> bool {
        let y0 = self.first().state.dof_vector();
        self.samples.iter().all(|s| s.state.dof_vector() == y0)
    }

    /// State at time `t`, advanced from the latest sample at or before `t`
    /// with RK4 sub-steps no larger than the run's step.
    pub fn state_at(&self, t: f64) -> Result<MetricState> {
        if !(t >= 0.0 && t <= self.t_stop) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.t_stop)));
        }
        let idx = self.samples.partition_point(|s| s.t() <= t).max(1) - 1;
        let start = &self.samples[idx].state;
        let gap = t - start.t;
        if gap == 0.0 {
            return Ok(start.clone());
        }
        let mut dt_ref = self.params.dt_init;
        if let Some(limit) = cfl_limit(start, self.params.rho) {
            dt_ref = dt_ref.min(limit);
        }
        let steps = (gap / dt_ref).ceil().max(1.0) as usize;
        let h = gap / steps as f64;
        let mut state = start.clone();
        for _ in 0..steps {
            state = rk4_step(&state, self.params.rho, h)?;
        }
        state.t = t;
        Ok(state)
    }
}

/// Integrates the flow from `state0` until the horizon, blow-up, or step underflow.
pub fn integrate(state0: &MetricState, params: &FlowParams) -> Result<Trajectory> {
    state0.validate()?;
    params.validate_for(&state0.family)?;
    let rho = params.rho;
    let curv0 = curvature_report(state0)?;
    let mut samples = vec![Sample { state: state0.clone(), curvature: curv0 }];
    let blown = |c: &CurvatureReport, threshold: f64| !c.is_finite() || c.riem_mag > threshold;

    if blown(&samples[0].curvature, params.blowup_threshold) {
        return Ok(Trajectory { samples, stop_reason: StopReason::Blowup, t_stop: 0.0, params: params.clone(), steps: 0 });
    }

    let mut current = state0.clone();
    let mut dt = params.dt_init;
    let mut steps = 0usize;
    let mut last_recorded = 0usize;
    let stop_reason = loop {
        let remaining = params.t_max - current.t;
        if remaining <= 1e-14 * params.t_max.max(1.0) {
            break StopReason::Horizon;
        }
        let mut h = dt.min(remaining);
        if params.dt_policy == DtPolicy::CflAdaptive {
            if let Some(limit) = cfl_limit(&current, rho) {
                h = h.min(limit);
            }
            if let Some(limit) = relative_step_limit(&current, rho)? {
                h = h.min(limit);
            }
        }
        if h < DT_MIN {
            break StopReason::StepUnderflow;
        }
        let landing = h == remaining;
        let next = match rk4_step(&current, rho, h) {
            Ok(mut s) => {
                if landing {
                    s.t = params.t_max;
                }
                s
            }
            Err(Error::InvalidState(_)) | Err(Error::Numeric(_)) => {
                dt = 0.5 * h;
                continue;
            }
            Err(e) => return Err(e),
        };
        let curv = match curvature_report(&next) {
            Ok(c) => c,
            Err(Error::InvalidState(_)) => {
                dt = 0.5 * h;
                continue;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        let blowup = blown(&curv, params.blowup_threshold);
        current = next.clone();
        if blowup || steps.is_multiple_of(params.record_stride) {
            samples.push(Sample { state: next, curvature: curv });
            last_recorded = steps;
            if blowup {
                break StopReason::Blowup;
            }
        } else if current.t >= params.t_max {
            samples.push(Sample { state: next, curvature: curv });
            last_recorded = steps;
        }
    };
    if last_recorded != steps {
        let curvature = curvature_report(&current)?;
        samples.push(Sample { state: current.clone(), curvature });
    }
    let t_stop = samples.last().map(Sample::t).unwrap_or(0.0);
    Ok(Trajectory { samples, stop_reason, t_stop, params: params.clone(), steps })
}

/// Pole of the comparison solution, T′ = 1/(2(1−ρ)ε).
pub fn sigma_horizon(eps: f64, rho: f64) -> f64 {
    1.0 / (2.0 * (1.0 - rho) * eps)
}

/// Solution of ∂σ/∂t = 2(1−ρ)σ², σ(0) = ε: σ(t) = (1/ε − 2(1−ρ)t)⁻¹.
pub fn sigma_bound(eps: f64, rho: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("sigma_bound needs eps > 0, got {eps}")));
    }
    if !(rho < 1.0) {
        return Err(Error::Domain(format!("sigma_bound needs rho < 1, got {rho}")));
    }
    let horizon = sigma_horizon(eps, rho);
    if !(t >= 0.0 && t < horizon) {
        return Err(Error::Domain(format!("t = {t} outside [0, T') with T' = {horizon}")));
    }
    Ok(1.0 / (1.0 / eps - 2.0 * (1.0 - rho) * t))
}

/// Second-order derivative at the middle of three (possibly uneven) samples.
pub(crate) fn central_derivative(t: [f64; 3], y: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    (h1 * h1 * (y[2] - y[1]) + h2 * h2 * (y[1] - y[0])) / (h1 * h2 * (h1 + h2))
}

/// Residuals of the scalar-curvature and volume-form evolution identities at
/// an interior sample, from central differences along the trajectory.
pub fn evolution_identity_residuals(traj: &Trajectory, index: usize) -> Result<(f64, f64)> {
    if index == 0 || index + 1 >= traj.samples.len() {
        return Err(Error::Domain(format!(
            "sample {index} has no neighbors on both sides (trajectory has {} samples)",
            traj.samples.len()
        )));
    }
    let rho = traj.params.rho;
    let [prev, mid, next] = [&traj.samples[index - 1], &traj.samples[index], &traj.samples[index + 1]];
    let times = [prev.t(), mid.t(), next.t()];
    let n = mid.state.dim() as f64;
    let r = &mid.curvature.scalar;

    let lap_r: Vec<f64> = match &mid.state.dof {
        Dof::Conformal { u, base } => {
            let sr = base.stiffness.apply_zero_row_sum(r);
            (0..r.len()).map(|i| -(-2.0 * u[i]).exp() * sr[i] / base.mass[i]).collect()
        }
        _ => vec![0.0; r.len()],
    };
    let diffusion = 1.0 - 2.0 * (n - 1.0) * rho;
    let mut r_scalar = 0.0f64;
    for i in 0..r.len() {
        let dr = central_derivative(times, [prev.curvature.scalar[i], r[i], next.curvature.scalar[i]]);
        let rhs = diffusion * lap_r[i] + 2.0 * mid.curvature.ric_norm_sq[i] - 2.0 * rho * r[i] * r[i];
        r_scalar = r_scalar.max((dr - rhs).abs());
    }

    let dv = central_derivative(times, [prev.state.volume(), mid.state.volume(), next.state.volume()]);
    let total_r = mid.state.integrate_scalar(r)?;
    let r_volume = (dv - (n * rho - 1.0) * total_r).abs();
    Ok((r_scalar, r_volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{init_state, ConformalPreset, FamilySpec};

    fn s3(s0: f64) -> MetricState {
        init_state(&FamilySpec::einstein_sphere(3, s0)).unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rb_rhs(&s3(1.0), 0.0).unwrap(), vec![-4.0]);
        let s2 = init_state(&FamilySpec::einstein_sphere(2, 1.0)).unwrap();
        assert_eq!(rb_rhs(&s2, 0.5).unwrap(), vec![0.0]);
        let su2 = init_state(&FamilySpec::su2(1.0, 1.0, 1.0)).unwrap();
        let v = rb_rhs(&su2, 0.0).unwrap();
        assert!(v.iter().all(|x| (x + 4.0).abs() < 1e-12));
        let torus = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Constant(0.4))).unwrap();
        assert!(rb_rhs(&torus, 0.1).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn su2_rhs_preserves_round_family_at_any_rho() {
        let su2 = init_state(&FamilySpec::su2(2.0, 2.0, 2.0)).unwrap();
        let e = init_state(&FamilySpec::einstein_sphere(3, 2.0)).unwrap();
        for rho in [-0.5, 0.1, 0.25] {
            let a = rb_rhs(&su2, rho).unwrap();
            let b = rb_rhs(&e, rho).unwrap()[0];
            assert!(a.iter().all(|x| (x - b).abs() < 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn rk4_exact_on_einstein_scale(n in 2usize..7, s0 in 0.5f64..3.0, frac in -2.0f64..1.0, dt in 1e-4f64..1e-2) {
            let rho = frac * FlowParams::admissibility_bound(n);
            let state = init_state(&FamilySpec::einstein_sphere(n, s0)).unwrap();
            let next = rk4_step(&state, rho, dt).unwrap();
            let nf = n as f64;
            let want = s0 - 2.0 * (nf - 1.0) * (1.0 - nf * rho) * dt;
            proptest::prop_assert!((next.dof_vector()[0] - want).abs() <= 1e-12 * s0);
        }

        #[test]
        fn su2_round_triple_stays_round(a in 0.5f64..2.0, rho in -1.0f64..0.25, dt in 1e-4f64..1e-2) {
            let state = init_state(&FamilySpec::su2(a, a, a)).unwrap();
            let y = rk4_step(&state, rho, dt).unwrap().dof_vector();
            proptest::prop_assert!((y[0] - y[1]).abs() <= 1e-14 * y[0] && (y[1] - y[2]).abs() <= 1e-14 * y[0]);
        }
    }

    #[test]
    fn einstein_blowup_time() {
        let traj = integrate(&s3(1.0), &FlowParams::new(0.0, 0.0, 3)).unwrap();
        assert_eq!(traj.stop_reason, StopReason::Blowup);
        assert!((traj.t_stop - 0.25).abs() < 1e-3, "{}", traj.t_stop);
        let traj = integrate(&s3(1.0), &FlowParams::new(0.25, 0.0, 3).with_t_max(2.0)).unwrap();
        assert_eq!(traj.stop_reason, StopReason::Blowup);
        assert!((traj.t_stop - 1.0).abs() < 1e-3);
    }

    #[test]
    fn immediate_blowup() {
        let mut p = FlowParams::new(0.0, 0.0, 3);
        p.blowup_threshold = 1.0;
        let traj = integrate(&s3(1.0), &p).unwrap();
        assert_eq!(traj.stop_reason, StopReason::Blowup);
        assert_eq!(traj.t_stop, 0.0);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn sample_times_increase_and_end_at_t_stop() {
        let traj = integrate(&s3(1.0), &FlowParams::new(0.0, 0.0, 3).with_record_stride(7)).unwrap();
        let t = traj.times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*t.last().unwrap(), traj.t_stop);
    }

    #[test]
    fn rk4_is_fourth_order_on_su2() {
        // no closed form away from the round metric: compare against a fine reference
        let state = init_state(&FamilySpec::su2(1.0, 1.2, 0.7)).unwrap();
        let run = |dt: f64| {
            let mut s = state.clone();
            let steps = (0.05 / dt).round() as usize;
            for _ in 0..steps {
                s = rk4_step(&s, 0.1, dt).unwrap();
            }
            s.dof_vector()
        };
        let reference = run(1e-5);
        let err = |dt| {
            run(dt).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.01), err(0.005));
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn torus_diffuses() {
        let state = init_state(&FamilySpec::conformal_torus(32, ConformalPreset::CosX(0.1))).unwrap();
        let p = FlowParams::new(0.0, 0.0, 2).with_dt(1.0, DtPolicy::CflAdaptive).with_t_max(0.5).with_record_stride(50);
        let traj = integrate(&state, &p).unwrap();
        assert_eq!(traj.stop_reason, StopReason::Horizon);
        assert_eq!(traj.t_stop, 0.5);
        let osc: Vec<f64> = traj
            .samples
            .iter()
            .map(|s| {
                let u = s.state.conformal_factor().unwrap();
                let mean = u.iter().sum::<f64>() / u.len() as f64;
                u.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()))
            })
            .collect();
        assert!(osc.windows(2).all(|w| w[1] < w[0]), "{osc:?}");
    }

    #[test]
    fn cfl_step_matches_grid_formula() {
        let state = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Constant(-0.2))).unwrap();
        let h = 1.0 / 16.0;
        let expected = 0.5 * h * h * (-0.4f64).exp() / (4.0 * (1.0 - 0.2));
        assert!((cfl_limit(&state, 0.1).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn relative_limit_on_ode_families() {
        let s3 = s3(1.0);
        assert!((relative_step_limit(&s3, 0.0).unwrap().unwrap() - 0.0025).abs() < 1e-15);
        let torus = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Zero)).unwrap();
        assert_eq!(relative_step_limit(&torus, 0.0).unwrap(), None);
        let params = FlowParams::new(0.0, 0.0, 3).with_dt(1e-2, DtPolicy::CflAdaptive).with_t_max(1.0);
        let traj = integrate(&s3, &params).unwrap();
        assert_eq!(traj.stop_reason, StopReason::Blowup);
        assert!((traj.t_stop - 0.25).abs() < 1e-4, "{}", traj.t_stop);
    }

    #[test]
    fn admissibility() {
        let torus = FamilySpec::conformal_torus(16, ConformalPreset::Zero);
        assert!(FlowParams::new(0.5, 0.0, 2).validate_for(&torus).is_err());
        assert!(FlowParams::new(0.49, 0.0, 2).validate_for(&torus).is_ok());
        let e = FamilySpec::einstein_sphere(3, 1.0);
        assert!(FlowParams::new(0.25, 0.0, 3).validate_for(&e).is_ok());
        assert!(FlowParams::new(0.3, 0.0, 3).validate_for(&e).is_err());
        assert!(FlowParams::new(0.0, 0.0, 2).validate_for(&e).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_bound(6.0, 0.0, 0.0).unwrap(), 6.0);
        assert!((sigma_bound(6.0, 0.0, 1.0 / 24.0).unwrap() - 12.0).abs() < 1e-12);
        assert!((sigma_horizon(6.0, 0.0) - 1.0 / 12.0).abs() < 1e-15);
        assert!(sigma_bound(6.0, 0.0, 1.0 / 12.0).is_err());
        assert!(sigma_bound(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn central_derivative_exact_for_quadratics() {
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let t = [0.1, 0.13, 0.2];
        let d = central_derivative(t, [f(t[0]), f(t[1]), f(t[2])]);
        assert!((d - (6.0 * 0.13 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn residuals_on_einstein_run() {
        let p = FlowParams::new(0.0, 0.0, 3).with_dt(1e-4, DtPolicy::Fixed).with_t_max(0.05);
        let traj = integrate(&s3(1.0), &p).unwrap();
        let idx = traj.samples.len() / 2;
        let (rs, rv) = evolution_identity_residuals(&traj, idx).unwrap();
        let r = traj.samples[idx].curvature.scalar[0];
        let v = traj.samples[idx].state.volume();
        assert!(rs <= 1e-6 * r * r, "{rs}");
        assert!(rv <= 1e-6 * v, "{rv}");
        assert!(evolution_identity_residuals(&traj, 0).is_err());
        assert!(evolution_identity_residuals(&traj, traj.samples.len() - 1).is_err());
    }

    #[test]
    fn residuals_vanish_on_static_torus() {
        let state = init_state(&FamilySpec::conformal_torus(16, ConformalPreset::Zero)).unwrap();
        let p = FlowParams::new(0.0, 0.0, 2).with_dt(1e-3, DtPolicy::Fixed).with_t_max(0.01);
        let traj = integrate(&state, &p).unwrap();
        assert!(traj.is_static());
        for i in 1..traj.samples.len() - 1 {
            assert_eq!(evolution_identity_residuals(&traj, i).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn state_at_interpolates_by_integration() {
        let p = FlowParams::new(0.0, 0.0, 3).with_record_stride(10);
        let traj = integrate(&s3(1.0), &p).unwrap();
        let s = traj.state_at(0.1234).unwrap();
        match s.dof {
            Dof::Scale(v) => assert!((v - (1.0 - 4.0 * 0.1234)).abs() < 1e-12),
            _ => unreachable!(),
        }
        assert!(traj.state_at(0.3).is_err());
    }
}
