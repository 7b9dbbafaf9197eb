//! Catalog of closed model manifolds and their metric degrees of freedom.
//!
//! Four families are supported:
//!
//! * round Einstein spheres Sⁿ with metric `s·g_round` (one scalar dof),
//! * the flat unit torus with a conformal factor `g = e^{2u} g₀` sampled on a
//!   periodic grid,
//! * the unit round 2-sphere with a conformal factor sampled on an icosphere,
//! * left-invariant metrics on SU(2) diagonal in a Milnor frame, `(a, b, c)`.
//!
//! The PDE families carry a [`BaseGeometry`] (stiffness, lumped mass and base
//! curvature) shared between all states of a run.

pub mod grid;
pub mod icosphere;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    EinsteinSphere,
    ConformalTorus2D,
    ConformalSphere2D,
    SU2Homogeneous,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::EinsteinSphere => "einstein_sphere",
            FamilyKind::ConformalTorus2D => "conformal_torus",
            FamilyKind::ConformalSphere2D => "conformal_sphere",
            FamilyKind::SU2Homogeneous => "su2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "einstein_sphere" => Some(FamilyKind::EinsteinSphere),
            "conformal_torus" => Some(FamilyKind::ConformalTorus2D),
            "conformal_sphere" => Some(FamilyKind::ConformalSphere2D),
            "su2" => Some(FamilyKind::SU2Homogeneous),
            _ => None,
        }
    }

    /// Families discretized by a mesh or grid (the PDE families).
    pub fn is_conformal(self) -> bool {
        matches!(self, FamilyKind::ConformalTorus2D | FamilyKind::ConformalSphere2D)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Initial conformal factor presets.
///
/// On the torus `cos_x` is `A cos 2πx` and `cos_xy` is `A cos 2πx cos 2πy`.
/// On the sphere they are the restrictions `A x` and `A x y` of ambient
/// coordinate polynomials (a degree-1 and a degree-2 spherical harmonic).
/// `random_band` is a seeded combination of low modes rescaled to
/// `max |u| = A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConformalPreset {
    Zero,
    Constant(f64),
    CosX(f64),
    CosXY(f64),
    RandomBand(f64),
}

impl ConformalPreset {
    pub fn name(&self) -> &'static str {
        match self {
            ConformalPreset::Zero => "zero",
            ConformalPreset::Constant(_) => "constant",
            ConformalPreset::CosX(_) => "cos_x",
            ConformalPreset::CosXY(_) => "cos_xy",
            ConformalPreset::RandomBand(_) => "random_band",
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            ConformalPreset::Zero => 0.0,
            ConformalPreset::Constant(a)
            | ConformalPreset::CosX(a)
            | ConformalPreset::CosXY(a)
            | ConformalPreset::RandomBand(a) => a,
        }
    }

    pub fn from_name(name: &str, amplitude: f64) -> Option<Self> {
        match name {
            "zero" => Some(ConformalPreset::Zero),
            "constant" => Some(ConformalPreset::Constant(amplitude)),
            "cos_x" => Some(ConformalPreset::CosX(amplitude)),
            "cos_xy" => Some(ConformalPreset::CosXY(amplitude)),
            "random_band" => Some(ConformalPreset::RandomBand(amplitude)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialData {
    /// Scale s₀ of an Einstein sphere.
    Scale(f64),
    Conformal(ConformalPreset),
    /// Milnor-frame coefficients (a, b, c).
    Triple([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub n: usize,
    /// Grid size N for the torus, subdivision level for the sphere; unused otherwise.
    pub resolution: usize,
    pub initial: InitialData,
    pub seed: u64,
}

pub const MIN_GRID: usize = 8;
pub const MIN_SUBDIVISION: usize = 2;
pub const MAX_SUBDIVISION: usize = 7;

impl FamilySpec {
    pub fn einstein_sphere(n: usize, s0: f64) -> Self {
        Self { kind: FamilyKind::EinsteinSphere, n, resolution: 0, initial: InitialData::Scale(s0), seed: 0 }
    }

    pub fn conformal_torus(grid: usize, preset: ConformalPreset) -> Self {
        Self {
            kind: FamilyKind::ConformalTorus2D,
            n: 2,
            resolution: grid,
            initial: InitialData::Conformal(preset),
            seed: 0,
        }
    }

    pub fn conformal_sphere(subdivisions: usize, preset: ConformalPreset) -> Self {
        Self {
            kind: FamilyKind::ConformalSphere2D,
            n: 2,
            resolution: subdivisions,
            initial: InitialData::Conformal(preset),
            seed: 0,
        }
    }

    pub fn su2(a: f64, b: f64, c: f64) -> Self {
        Self { kind: FamilyKind::SU2Homogeneous, n: 3, resolution: 0, initial: InitialData::Triple([a, b, c]), seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.kind {
            FamilyKind::EinsteinSphere => {
                if self.n < 2 {
                    return bad(format!("einstein_sphere needs n >= 2, got {}", self.n));
                }
                match self.initial {
                    InitialData::Scale(s) if s > 0.0 && s.is_finite() => Ok(()),
                    InitialData::Scale(s) => bad(format!("s0 must be positive, got {s}")),
                    _ => bad("einstein_sphere takes a scale s0".into()),
                }
            }
            FamilyKind::SU2Homogeneous => {
                if self.n != 3 {
                    return bad(format!("su2 forces n = 3, got {}", self.n));
                }
                match self.initial {
                    InitialData::Triple(t) if t.iter().all(|&x| x > 0.0 && x.is_finite()) => Ok(()),
                    InitialData::Triple(t) => bad(format!("su2 coefficients must be positive, got {t:?}")),
                    _ => bad("su2 takes a triple (a, b, c)".into()),
                }
            }
            FamilyKind::ConformalTorus2D | FamilyKind::ConformalSphere2D => {
                if self.n != 2 {
                    return bad(format!("{} forces n = 2, got {}", self.kind, self.n));
                }
                if self.kind == FamilyKind::ConformalTorus2D && self.resolution < MIN_GRID {
                    return bad(format!("grid resolution must be >= {MIN_GRID}, got {}", self.resolution));
                }
                if self.kind == FamilyKind::ConformalSphere2D
                    && !(MIN_SUBDIVISION..=MAX_SUBDIVISION).contains(&self.resolution)
                {
                    return bad(format!(
                        "subdivision level must be in {MIN_SUBDIVISION}..={MAX_SUBDIVISION}, got {}",
                        self.resolution
                    ));
                }
                match self.initial {
                    InitialData::Conformal(p) if p.amplitude().is_finite() => Ok(()),
                    InitialData::Conformal(_) => bad("preset amplitude must be finite".into()),
                    _ => bad(format!("{} takes a conformal preset", self.kind)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Discretization {
    PeriodicGrid { n: usize, h: f64 },
    Icosphere { subdivisions: usize, triangles: Vec<[usize; 3]> },
}

/// Discretization substrate of a conformal family.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGeometry {
    pub positions: Vec<[f64; 3]>,
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    /// Base scalar curvature per vertex.
    pub r0: Vec<f64>,
    pub discretization: Discretization,
    /// Edges (i < j) with positive-convention weight w = −S_ij.
    pub edges: Vec<(usize, usize, f64)>,
}

impl BaseGeometry {
    pub(crate) fn new(
        positions: Vec<[f64; 3]>,
        stiffness: CsrMatrix,
        mass: Vec<f64>,
        r0: Vec<f64>,
        discretization: Discretization,
    ) -> Self {
        let edges = stiffness.upper_edges().into_iter().map(|(i, j, v)| (i, j, -v)).collect();
        Self { positions, stiffness, mass, r0, discretization, edges }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn base_volume(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn for_family(spec: &FamilySpec) -> Result<Self> {
        match spec.kind {
            FamilyKind::ConformalTorus2D => Ok(grid::flat_torus(spec.resolution)),
            FamilyKind::ConformalSphere2D => Ok(icosphere::unit_sphere(spec.resolution)),
            _ => Err(Error::UnsupportedFamily(spec.kind.name())),
        }
    }
}

/// Metric degrees of freedom.
#[derive(Debug, Clone)]
pub enum Dof {
    Scale(f64),
    Conformal { u: Vec<f64>, base: Arc<BaseGeometry> },
    Triple([f64; 3]),
}

#[derive(Debug, Clone)]
pub struct MetricState {
    pub family: FamilySpec,
    pub dof: Dof,
    pub t: f64,
}

/// Volume of the unit round n-sphere.
pub fn unit_sphere_volume(n: usize) -> f64 {
    // ω_n = 2π/(n−1) ω_{n−2}, ω_0 = 2, ω_1 = 2π
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * unit_sphere_volume(n - 2),
    }
}

pub fn init_state(spec: &FamilySpec) -> Result<MetricState> {
    spec.validate()?;
    let dof = match (spec.kind, spec.initial) {
        (FamilyKind::EinsteinSphere, InitialData::Scale(s)) => Dof::Scale(s),
        (FamilyKind::SU2Homogeneous, InitialData::Triple(t)) => Dof::Triple(t),
        (kind, InitialData::Conformal(preset)) if kind.is_conformal() => {
            let base = Arc::new(BaseGeometry::for_family(spec)?);
            let u = sample_preset(kind, &base, preset, spec.seed);
            Dof::Conformal { u, base }
        }
        _ => return Err(Error::Config("initial data does not match family".into())),
    };
    Ok(MetricState { family: spec.clone(), dof, t: 0.0 })
}

fn sample_preset(kind: FamilyKind, base: &BaseGeometry, preset: ConformalPreset, seed: u64) -> Vec<f64> {
    let tau = 2.0 * PI;
    let torus = kind == FamilyKind::ConformalTorus2D;
    let pts = &base.positions;
    match preset {
        ConformalPreset::Zero => vec![0.0; pts.len()],
        ConformalPreset::Constant(k) => vec![k; pts.len()],
        ConformalPreset::CosX(a) if torus => pts.iter().map(|p| a * (tau * p[0]).cos()).collect(),
        ConformalPreset::CosX(a) => pts.iter().map(|p| a * p[0]).collect(),
        ConformalPreset::CosXY(a) if torus => {
            pts.iter().map(|p| a * (tau * p[0]).cos() * (tau * p[1]).cos()).collect()
        }
        ConformalPreset::CosXY(a) => pts.iter().map(|p| a * p[0] * p[1]).collect(),
        ConformalPreset::RandomBand(a) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = if torus {
                let mut modes = Vec::new();
                for kx in -3i32..=3 {
                    for ky in -3i32..=3 {
                        if kx != 0 || ky != 0 {
                            modes.push((kx as f64, ky as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
                pts.iter()
                    .map(|p| {
                        modes
                            .iter()
                            .map(|&(kx, ky, ca, cb)| {
                                let phase = tau * (kx * p[0] + ky * p[1]);
                                ca * phase.cos() + cb * phase.sin()
                            })
                            .sum()
                    })
                    .collect()
            } else {
                let mut monomials = Vec::new();
                for i in 0..=3i32 {
                    for j in 0..=3 - i {
                        for k in 0..=3 - i - j {
                            if i + j + k > 0 {
                                monomials.push((i, j, k, rng.gen_range(-1.0..1.0)));
                            }
                        }
                    }
                }
                pts.iter()
                    .map(|p| {
                        monomials
                            .iter()
                            .map(|&(i, j, k, w)| w * p[0].powi(i) * p[1].powi(j) * p[2].powi(k))
                            .sum()
                    })
                    .collect()
            };
            let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                raw
            } else {
                raw.into_iter().map(|v| a * v / peak).collect()
            }
        }
    }
}

impl MetricState {
    pub fn kind(&self) -> FamilyKind {
        self.family.kind
    }

    pub fn dim(&self) -> usize {
        self.family.n
    }

    /// Checks positivity and that the dof variant matches the family.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidState(msg));
        match (&self.dof, self.family.kind) {
            (Dof::Scale(s), FamilyKind::EinsteinSphere) => {
                if *s > 0.0 && s.is_finite() {
                    Ok(())
                } else {
                    bad(format!("scale must be positive, got {s}"))
                }
            }
            (Dof::Triple(t), FamilyKind::SU2Homogeneous) => {
                if t.iter().all(|&x| x > 0.0 && x.is_finite()) {
                    Ok(())
                } else {
                    bad(format!("Milnor coefficients must be positive, got {t:?}"))
                }
            }
            (Dof::Conformal { u, base }, kind) if kind.is_conformal() => {
                if u.len() != base.len() {
                    return Err(Error::DimensionMismatch { expected: base.len(), got: u.len() });
                }
                // e^{2u} must stay a positive normal float
                if u.iter().all(|v| v.is_finite() && v.abs() < 300.0) {
                    Ok(())
                } else {
                    bad("conformal factor is not finite".into())
                }
            }
            _ => bad(format!("dof variant does not match family {}", self.family.kind)),
        }
    }

    pub fn base(&self) -> Option<&Arc<BaseGeometry>> {
        match &self.dof {
            Dof::Conformal { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn conformal_factor(&self) -> Option<&[f64]> {
        match &self.dof {
            Dof::Conformal { u, .. } => Some(u),
            _ => None,
        }
    }

    /// Number of nodal values a scalar field must carry (1 for homogeneous families).
    pub fn field_len(&self) -> usize {
        match &self.dof {
            Dof::Conformal { u, .. } => u.len(),
            _ => 1,
        }
    }

    /// Quadrature weights of dυ_g: base mass × e^{2u} on meshes, the volume otherwise.
    pub fn mass_weights(&self) -> Vec<f64> {
        match &self.dof {
            Dof::Conformal { u, base } => base.mass.iter().zip(u).map(|(m, u)| m * (2.0 * u).exp()).collect(),
            _ => vec![self.volume()],
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.dof {
            Dof::Scale(s) => {
                let n = self.family.n;
                unit_sphere_volume(n) * s.powf(n as f64 / 2.0)
            }
            Dof::Triple([a, b, c]) => unit_sphere_volume(3) * (a * b * c).sqrt(),
            Dof::Conformal { u, base } => base.mass.iter().zip(u).map(|(m, u)| m * (2.0 * u).exp()).sum(),
        }
    }

    /// ∫ field dυ. Homogeneous families take a single constant value.
    pub fn integrate_scalar(&self, field: &[f64]) -> Result<f64> {
        let expected = self.field_len();
        if field.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: field.len() });
        }
        match &self.dof {
            Dof::Conformal { u, base } => Ok(base
                .mass
                .iter()
                .zip(u)
                .zip(field)
                .map(|((m, u), f)| m * (2.0 * u).exp() * f)
                .sum()),
            _ => Ok(field[0] * self.volume()),
        }
    }

    pub fn dof_vector(&self) -> Vec<f64> {
        match &self.dof {
            Dof::Scale(s) => vec![*s],
            Dof::Triple(t) => t.to_vec(),
            Dof::Conformal { u, .. } => u.clone(),
        }
    }

    /// A new state of the same family carrying `values` at time `t`.
    pub fn with_dof(&self, values: Vec<f64>, t: f64) -> Result<MetricState> {
        let expected = self.dof_vector().len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        let dof = match &self.dof {
            Dof::Scale(_) => Dof::Scale(values[0]),
            Dof::Triple(_) => Dof::Triple([values[0], values[1], values[2]]),
            Dof::Conformal { base, .. } => Dof::Conformal { u: values, base: Arc::clone(base) },
        };
        let state = MetricState { family: self.family.clone(), dof, t };
        state.validate()?;
        Ok(state)
    }
}

pub fn volume(state: &MetricState) -> f64 {
    state.volume()
}

pub fn integrate_scalar(state: &MetricState, field: &[f64]) -> Result<f64> {
    state.integrate_scalar(field)
}
