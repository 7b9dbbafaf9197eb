//! Line-oriented `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is validated before
//! anything runs, and all problems are reported together with line numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::families::{ConformalPreset, FamilyKind, FamilySpec, InitialData};
use crate::flow::{DtPolicy, FlowParams, DEFAULT_BLOWUP_THRESHOLD};
use crate::monitor::Audit;
use crate::spectral::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Plot,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Plot => "plot",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "plot" => Some(Format::Plot),
            _ => None,
        }
    }
}

/// Parses a comma-separated format list.
pub fn parse_formats(s: &str) -> Result<Vec<Format>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f = Format::from_name(part).ok_or_else(|| format!("unknown format '{part}' (csv, json, plot)"))?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("empty format list".into());
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub flow: FlowParams,
    /// Pinching parameter of the λ₁ monotonicity hypothesis.
    pub a: f64,
    pub solver: SolverOptions,
    pub lambda0: bool,
    pub lambda1: bool,
    pub derivatives: bool,
    pub sample_stride: usize,
    pub audits: Vec<Audit>,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, absent for problems not tied to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

pub fn join_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

const KEYS: &[&str] = &[
    "family",
    "n",
    "s0",
    "triple",
    "resolution",
    "preset",
    "amplitude",
    "seed",
    "rho",
    "c",
    "dt",
    "dt_policy",
    "t_max",
    "blowup_threshold",
    "record_stride",
    "a",
    "eigen",
    "derivatives",
    "solver_tol",
    "solver_max_iter",
    "solver_guard",
    "sample_stride",
    "audits",
    "output_dir",
    "formats",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue { line, message: message.into() });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (line, value) = self.raw(key)?;
        let value = value.to_string();
        match parse(&value) {
            Some(v) => Some(v),
            None => {
                self.issue(Some(line), format!("{key}: expected {what}, got '{value}'"));
                None
            }
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a finite number", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn uint(&mut self, key: &str) -> Option<usize> {
        self.parsed(key, "a nonnegative integer", |s| s.parse::<usize>().ok())
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        self.parsed(key, "true or false", |s| s.parse::<bool>().ok())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(l, _)| *l)
    }
}

/// Parses and validates a configuration, collecting every problem.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigIssue>> {
    let mut e = Entries { map: BTreeMap::new(), issues: Vec::new() };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            e.issue(Some(line), format!("expected 'key = value', got '{content}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            e.issue(Some(line), format!("unknown key '{key}'"));
            continue;
        }
        if let Some((first, _)) = e.map.get(key) {
            let first = *first;
            e.issue(Some(line), format!("duplicate key '{key}' (first set on line {first})"));
            continue;
        }
        e.map.insert(key.to_string(), (line, value.to_string()));
    }

    let kind = match e.raw("family") {
        None => {
            e.issue(None, "missing required key 'family'");
            None
        }
        Some((line, v)) => {
            let v = v.to_string();
            let k = FamilyKind::from_name(&v);
            if k.is_none() {
                e.issue(Some(line), format!("family: unknown family '{v}'"));
            }
            k
        }
    };
    let rho = e.float("rho");
    if e.raw("rho").is_none() {
        e.issue(None, "missing required key 'rho'");
    }
    let c = e.float("c").unwrap_or(0.0);
    let declared_n = e.uint("n");
    let seed = e.parsed("seed", "a nonnegative integer", |s| s.parse::<u64>().ok()).unwrap_or(0);

    let family = kind.and_then(|kind| family_from_entries(&mut e, kind, declared_n, seed));

    let dt = e.float("dt").unwrap_or(1e-3);
    let dt_policy = e
        .parsed("dt_policy", "fixed or cfl", |s| match s {
            "fixed" => Some(DtPolicy::Fixed),
            "cfl" => Some(DtPolicy::CflAdaptive),
            _ => None,
        })
        .unwrap_or(DtPolicy::Fixed);
    let t_max = e.float("t_max").unwrap_or(1.0);
    let blowup_threshold = e.float("blowup_threshold").unwrap_or(DEFAULT_BLOWUP_THRESHOLD);
    let record_stride = e.uint("record_stride").unwrap_or(1);
    for (key, v) in [("dt", dt), ("t_max", t_max), ("blowup_threshold", blowup_threshold)] {
        if !(v > 0.0 && v.is_finite()) {
            let line = e.line(key);
            e.issue(line, format!("{key} must be positive, got {v}"));
        }
    }
    if record_stride == 0 {
        let line = e.line("record_stride");
        e.issue(line, "record_stride must be >= 1");
    }
    let a = e.float("a").unwrap_or(0.0);
    if a < 0.0 {
        let line = e.line("a");
        e.issue(line, format!("a must be >= 0, got {a}"));
    }
    let (lambda0, lambda1) = e
        .parsed("eigen", "a list from {lambda0, lambda1, none}", |s| {
            let mut sel = (false, false);
            for part in s.split(',').map(str::trim) {
                match part {
                    "lambda0" => sel.0 = true,
                    "lambda1" => sel.1 = true,
                    "none" => {}
                    _ => return None,
                }
            }
            Some(sel)
        })
        .unwrap_or((true, true));
    let derivatives = e.boolean("derivatives").unwrap_or(false);
    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        tol: e.float("solver_tol").unwrap_or(defaults.tol),
        max_iter: e.uint("solver_max_iter").unwrap_or(defaults.max_iter),
        guard: e.uint("solver_guard").unwrap_or(defaults.guard),
    };
    if !(solver.tol > 0.0) {
        let line = e.line("solver_tol");
        e.issue(line, "solver_tol must be positive");
    }
    if solver.max_iter == 0 {
        let line = e.line("solver_max_iter");
        e.issue(line, "solver_max_iter must be >= 1");
    }
    let sample_stride = e.uint("sample_stride").unwrap_or(1);
    if sample_stride == 0 {
        let line = e.line("sample_stride");
        e.issue(line, "sample_stride must be >= 1");
    }
    let audits = e
        .parsed("audits", "'all' or a list of audit names", |s| {
            if s == "all" {
                return Some(Audit::ALL.to_vec());
            }
            let mut out = Vec::new();
            for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let a = Audit::from_name(part)?;
                if !out.contains(&a) {
                    out.push(a);
                }
            }
            out.sort();
            Some(out)
        })
        .unwrap_or_else(|| Audit::ALL.to_vec());
    let output_dir = e.raw("output_dir").map(|(_, v)| PathBuf::from(v));
    let formats = match e.raw("formats") {
        None => vec![Format::Csv, Format::Json],
        Some((line, v)) => match parse_formats(v) {
            Ok(f) => f,
            Err(msg) => {
                e.issue(Some(line), format!("formats: {msg}"));
                Vec::new()
            }
        },
    };

    let n_for_flow = family.as_ref().map(|f: &FamilySpec| f.n).or(declared_n).unwrap_or(0);
    let flow = FlowParams {
        rho: rho.unwrap_or(0.0),
        c,
        n: n_for_flow,
        dt_init: dt,
        dt_policy,
        t_max,
        blowup_threshold,
        record_stride,
    };
    if let (Some(rho), Some(kind)) = (rho, kind) {
        // admissibility against the declared dimension, even when it is wrong for the family
        let n = declared_n.unwrap_or(n_for_flow);
        if n >= 2 {
            let bound = FlowParams::admissibility_bound(n);
            let strict = kind.is_conformal();
            if (strict && rho >= bound) || (!strict && rho > bound) {
                let line = e.line("rho");
                let rel = if strict { "<" } else { "<=" };
                e.issue(line, format!("rho must be {rel} 1/(2(n-1)) = {bound} for {kind} with n = {n}, got {rho}"));
            }
        }
    }
    if let Some(fam) = &family {
        if let Err(err) = flow.validate_for(fam) {
            for msg in err.to_string().trim_start_matches("configuration error: ").split("; ") {
                let reported = msg.starts_with("rho must be") || msg.contains("must be positive") || msg.starts_with("record stride");
                if !reported {
                    e.issue(None, msg.to_string());
                }
            }
        }
    }

    if !e.issues.is_empty() {
        return Err(e.issues);
    }
    Ok(RunConfig {
        family: family.expect("family validated"),
        flow,
        a,
        solver,
        lambda0,
        lambda1,
        derivatives,
        sample_stride,
        audits,
        output_dir,
        formats,
    })
}

fn family_from_entries(e: &mut Entries, kind: FamilyKind, declared_n: Option<usize>, seed: u64) -> Option<FamilySpec> {
    let forced = match kind {
        FamilyKind::ConformalTorus2D | FamilyKind::ConformalSphere2D => Some(2),
        FamilyKind::SU2Homogeneous => Some(3),
        FamilyKind::EinsteinSphere => None,
    };
    let n = match (forced, declared_n) {
        (Some(f), Some(d)) if f != d => {
            let line = e.line("n");
            e.issue(line, format!("{kind} forces n = {f}, got {d}"));
            return None;
        }
        (Some(f), _) => f,
        (None, Some(d)) => d,
        (None, None) => {
            e.issue(None, format!("missing required key 'n' for {kind}"));
            return None;
        }
    };
    let initial = match kind {
        FamilyKind::EinsteinSphere => InitialData::Scale(e.float("s0").unwrap_or(1.0)),
        FamilyKind::SU2Homogeneous => {
            let Some((line, v)) = e.raw("triple") else {
                e.issue(None, "missing required key 'triple' for su2");
                return None;
            };
            let parts: Vec<Option<f64>> = v.split(',').map(|p| p.trim().parse::<f64>().ok()).collect();
            match parts.as_slice() {
                [Some(a), Some(b), Some(c)] => InitialData::Triple([*a, *b, *c]),
                _ => {
                    let v = v.to_string();
                    e.issue(Some(line), format!("triple: expected three numbers 'a, b, c', got '{v}'"));
                    return None;
                }
            }
        }
        FamilyKind::ConformalTorus2D | FamilyKind::ConformalSphere2D => {
            let amplitude = e.float("amplitude").unwrap_or(0.0);
            let preset = match e.raw("preset") {
                None => ConformalPreset::Zero,
                Some((line, v)) => match ConformalPreset::from_name(v, amplitude) {
                    Some(p) => p,
                    None => {
                        let v = v.to_string();
                        e.issue(Some(line), format!("preset: unknown preset '{v}'"));
                        return None;
                    }
                },
            };
            InitialData::Conformal(preset)
        }
    };
    let resolution = if kind.is_conformal() {
        match e.uint("resolution") {
            Some(r) => r,
            None => {
                if e.raw("resolution").is_none() {
                    e.issue(None, format!("missing required key 'resolution' for {kind}"));
                }
                return None;
            }
        }
    } else {
        0
    };
    let spec = FamilySpec { kind, n, resolution, initial, seed };
    if let Err(err) = spec.validate() {
        e.issue(None, err.to_string().trim_start_matches("configuration error: ").to_string());
        return None;
    }
    Some(spec)
}

/// Renders a configuration in the format accepted by [`parse_config`].
pub fn render_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    let fam = &cfg.family;
    kv("family", fam.kind.name().into());
    kv("n", fam.n.to_string());
    match fam.initial {
        InitialData::Scale(s) => kv("s0", format!("{s:?}")),
        InitialData::Triple([a, b, c]) => kv("triple", format!("{a:?}, {b:?}, {c:?}")),
        InitialData::Conformal(p) => {
            kv("resolution", fam.resolution.to_string());
            kv("preset", p.name().into());
            kv("amplitude", format!("{:?}", p.amplitude()));
        }
    }
    kv("seed", fam.seed.to_string());
    let f = &cfg.flow;
    kv("rho", format!("{:?}", f.rho));
    kv("c", format!("{:?}", f.c));
    kv("dt", format!("{:?}", f.dt_init));
    kv("dt_policy", if f.dt_policy == DtPolicy::Fixed { "fixed" } else { "cfl" }.into());
    kv("t_max", format!("{:?}", f.t_max));
    kv("blowup_threshold", format!("{:?}", f.blowup_threshold));
    kv("record_stride", f.record_stride.to_string());
    kv("a", format!("{:?}", cfg.a));
    let eigen = match (cfg.lambda0, cfg.lambda1) {
        (true, true) => "lambda0, lambda1",
        (true, false) => "lambda0",
        (false, true) => "lambda1",
        (false, false) => "none",
    };
    kv("eigen", eigen.into());
    kv("derivatives", cfg.derivatives.to_string());
    kv("solver_tol", format!("{:?}", cfg.solver.tol));
    kv("solver_max_iter", cfg.solver.max_iter.to_string());
    kv("solver_guard", cfg.solver.guard.to_string());
    kv("sample_stride", cfg.sample_stride.to_string());
    let audits: Vec<&str> = cfg.audits.iter().map(|a| a.name()).collect();
    kv("audits", audits.join(", "));
    if let Some(dir) = &cfg.output_dir {
        kv("output_dir", dir.display().to_string());
    }
    let formats: Vec<&str> = cfg.formats.iter().map(|f| f.name()).collect();
    kv("formats", formats.join(", "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn messages(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().iter().map(ToString::to_string).collect()
    }

    #[test]
    fn einstein_example() {
        let cfg = parse_config("family = einstein_sphere\nn = 3\nrho = 0.1\nc = 0.75\ns0 = 1.0").unwrap();
        assert_eq!(cfg.family, FamilySpec::einstein_sphere(3, 1.0));
        assert_eq!(cfg.flow.rho, 0.1);
        assert_eq!(cfg.flow.c, 0.75);
        assert_eq!(cfg.audits, Audit::ALL.to_vec());
    }

    #[test]
    fn pde_admissibility_is_reported() {
        let msgs = messages("rho = 0.25\nn = 3\nfamily = conformal_torus");
        assert!(msgs.iter().any(|m| m.starts_with("line 1: rho must be <")), "{msgs:?}");
    }

    #[test]
    fn empty_text_lists_missing_keys() {
        let msgs = messages("");
        assert!(msgs.iter().any(|m| m.contains("'family'")));
        assert!(msgs.iter().any(|m| m.contains("'rho'")));
    }

    #[test]
    fn all_problems_reported_with_lines() {
        let msgs = messages("family = su2\n# comment\nrho = abc\nbogus = 1\ntriple = 1, 1\nformats = csv, pdf\n");
        assert!(msgs.contains(&"line 3: rho: expected a finite number, got 'abc'".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"line 4: unknown key 'bogus'".to_string()));
        assert!(msgs.iter().any(|m| m.starts_with("line 5: triple")));
        assert!(msgs.iter().any(|m| m.starts_with("line 6: formats")));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let msgs = messages("family = su2\nrho = 0\nrho = 0.1\ntriple = 1,1,1");
        assert_eq!(msgs, vec!["line 3: duplicate key 'rho' (first set on line 2)".to_string()]);
    }

    #[test]
    fn boundary_rho_allowed_for_ode_families() {
        assert!(parse_config("family = einstein_sphere\nn = 3\nrho = 0.25").is_ok());
        assert!(parse_config("family = einstein_sphere\nn = 3\nrho = 0.5").is_err());
        assert!(parse_config("family = conformal_sphere\nresolution = 3\nrho = 0.5").is_err());
    }

    #[test]
    fn render_round_trips_examples() {
        let text = "family = conformal_sphere\nresolution = 3\npreset = cos_xy\namplitude = 0.2\nseed = 7\nrho = 0.1\n\
                    dt_policy = cfl\neigen = lambda1\naudits = q_monotone, sigma_bound\nformats = plot, csv\noutput_dir = out/x\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Plot]);
    }

    proptest! {
        #[test]
        fn render_round_trip(
            rho in -1.0f64..0.12,
            c in -2.0f64..2.0,
            dt in 1e-6f64..1e-2,
            s0 in 0.1f64..10.0,
            n in 2usize..6,
            stride in 1usize..20,
            a in 0.0f64..3.0,
            derivatives: bool,
        ) {
            let text = format!(
                "family = einstein_sphere\nn = {n}\ns0 = {s0:?}\nrho = {rho:?}\nc = {c:?}\ndt = {dt:?}\n\
                 sample_stride = {stride}\na = {a:?}\nderivatives = {derivatives}\n"
            );
            let cfg = parse_config(&text).unwrap();
            prop_assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
        }
    }
}
