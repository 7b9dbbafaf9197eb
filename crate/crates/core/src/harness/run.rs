//! Running a configuration end to end, and parameter sweeps.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::init_state;
use crate::flow::{integrate, Trajectory};
use crate::monitor::{
    hypothesis_check, monitor_trajectory, run_audits, AuditEntry, HypothesisReport, MonitorOptions, MonitorRecord,
    Verdict,
};

use super::config::{parse_config, render_config, RunConfig};
use super::emit::emit_series;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_AUDIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// The configuration, rendered in its own file format.
    pub config: String,
    pub t_stop: f64,
    pub stop_reason: String,
    pub steps: usize,
    pub hypotheses: HypothesisReport,
    pub verdicts: Vec<AuditEntry>,
    pub extrema: BTreeMap<String, Extremum>,
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| !v.verdict.is_failure())
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_AUDIT_FAILED
        }
    }

    pub fn verdict(&self, audit: crate::monitor::Audit) -> Option<&Verdict> {
        self.verdicts.iter().find(|e| e.audit == audit).map(|e| &e.verdict)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<MonitorRecord>,
    pub trajectory: Trajectory,
    pub files: Vec<PathBuf>,
}

/// Exit status for a finished or failed run.
pub fn exit_code(result: &Result<RunOutput>) -> i32 {
    match result {
        Ok(out) => out.summary.exit_code(),
        Err(Error::Config(_)) => EXIT_CONFIG,
        Err(_) => EXIT_NUMERIC,
    }
}

pub fn monitor_options(cfg: &RunConfig) -> MonitorOptions {
    MonitorOptions {
        c: cfg.flow.c,
        a: cfg.a,
        solver: cfg.solver,
        sample_stride: cfg.sample_stride,
        lambda0: cfg.lambda0,
        lambda1: cfg.lambda1,
        derivatives: cfg.derivatives,
    }
}

fn extrema(records: &[MonitorRecord]) -> BTreeMap<String, Extremum> {
    let columns: [(&str, fn(&MonitorRecord) -> Option<f64>); 12] = [
        ("lambda0", |r| r.lambda0),
        ("lambda1", |r| r.lambda1),
        ("Q", |r| r.q),
        ("rhs31", |r| r.rhs31),
        ("rhs32", |r| r.rhs32),
        ("rhs41", |r| r.rhs41),
        ("fd0", |r| r.fd0),
        ("fd1", |r| r.fd1),
        ("R_min", |r| Some(r.r_min)),
        ("R_max", |r| Some(r.r_max)),
        ("sigma", |r| r.sigma),
        ("pinch", |r| r.pinch),
    ];
    let mut out = BTreeMap::new();
    for (name, get) in columns {
        let values: Vec<f64> = records.iter().filter_map(get).collect();
        if values.is_empty() {
            continue;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.insert(name.to_string(), Extremum { min, max });
    }
    out
}

/// Integrates, monitors, audits and writes the requested outputs.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let state0 = init_state(&cfg.family)?;
    cfg.flow.validate_for(&cfg.family)?;
    let traj = integrate(&state0, &cfg.flow)?;
    let records = monitor_trajectory(&traj, &monitor_options(cfg))?;
    let hypotheses = hypothesis_check(&cfg.flow, &state0, cfg.a)?;
    let all = if records.len() >= 3 {
        run_audits(&traj, &records, &hypotheses)?
    } else {
        crate::monitor::Audit::ALL
            .iter()
            .map(|&audit| AuditEntry {
                audit,
                verdict: Verdict::Skipped { reason: format!("only {} monitor records", records.len()) },
            })
            .collect()
    };
    let verdicts = all.into_iter().filter(|e| cfg.audits.contains(&e.audit)).collect();
    let mut summary = RunSummary {
        config: render_config(cfg),
        t_stop: traj.t_stop,
        stop_reason: traj.stop_reason.name().to_string(),
        steps: traj.steps,
        hypotheses,
        verdicts,
        extrema: extrema(&records),
        wall_clock_seconds: 0.0,
    };
    summary.wall_clock_seconds = started.elapsed().as_secs_f64();
    let mut files = Vec::new();
    if let Some(dir) = &cfg.output_dir {
        for &format in &cfg.formats {
            files.push(emit_series(&records, &summary, format, dir)?);
        }
    }
    Ok(RunOutput { summary, records, trajectory: traj, files })
}

/// Parses `text` and runs it, mapping every configuration problem to [`Error::Config`].
pub fn run_config_text(text: &str) -> Result<RunOutput> {
    let cfg = parse_config(text).map_err(|issues| Error::Config(super::config::join_issues(&issues)))?;
    run_scenario(&cfg)
}

/// Inclusive `start:stop:step` range.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("expected start:stop:step, got '{spec}'"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(Error::Config(format!("range '{spec}' has {count} points")));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

pub const SWEEP_KEYS: [&str; 5] = ["rho", "c", "a", "dt", "t_max"];

/// A config with one swept parameter replaced.
pub fn with_parameter(cfg: &RunConfig, key: &str, value: f64) -> Result<RunConfig> {
    let mut out = cfg.clone();
    match key {
        "rho" => out.flow.rho = value,
        "c" => out.flow.c = value,
        "a" => out.a = value,
        "dt" => out.flow.dt_init = value,
        "t_max" => out.flow.t_max = value,
        _ => return Err(Error::Config(format!("cannot sweep '{key}' (one of {})", SWEEP_KEYS.join(", ")))),
    }
    // re-validate through the text format so sweeps obey the same rules as files
    parse_config(&render_config(&out)).map_err(|issues| Error::Config(super::config::join_issues(&issues)))
}

/// Worker count from RBFLOW_THREADS, or rayon's default.
pub fn worker_count() -> Option<usize> {
    std::env::var("RBFLOW_THREADS").ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

/// Runs one config per value concurrently; each run writes under `out/<key>=<value>`.
pub fn sweep(cfg: &RunConfig, key: &str, values: &[f64], out: Option<&std::path::Path>) -> Result<Vec<(f64, Result<RunOutput>)>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    let results = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let run = with_parameter(cfg, key, v).and_then(|mut c| {
                    c.output_dir = out.map(|dir| dir.join(format!("{key}={v}")));
                    run_scenario(&c)
                });
                (v, run)
            })
            .collect()
    });
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::Audit;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:0.2:0.05").unwrap().len(), 5);
        assert_eq!(parse_range("1:1:1").unwrap(), vec![1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn exit_codes() {
        let cfg = "family = einstein_sphere\nn = 3\nrho = 0.5";
        assert_eq!(exit_code(&run_config_text(cfg)), EXIT_CONFIG);
        let cfg = "family = einstein_sphere\nn = 3\nrho = 0.1\nc = 0.75\nt_max = 0.08\ndt = 1e-3\nrecord_stride = 10";
        let out = run_config_text(cfg);
        assert_eq!(exit_code(&out), EXIT_PASS);
        let out = out.unwrap();
        assert_eq!(out.summary.verdict(Audit::QMonotone), Some(&Verdict::Pass));
        assert_eq!(out.summary.verdicts.len(), Audit::ALL.len());
    }

    #[test]
    fn requested_audits_only() {
        let cfg = "family = su2\ntriple = 1, 1, 0.8\nrho = 0\nt_max = 0.05\ndt = 1e-3\naudits = pinch_preserved, r_min_nondecreasing";
        let out = run_config_text(cfg).unwrap();
        assert_eq!(out.summary.verdicts.len(), 2);
        assert!(out.records.iter().all(|r| r.lambda0.is_none()));
        assert!(out.summary.passed());
    }

    #[test]
    fn sweep_rejects_inadmissible_points() {
        let cfg = parse_config("family = einstein_sphere\nn = 3\nrho = 0\nt_max = 0.01\neigen = none").unwrap();
        let res = sweep(&cfg, "rho", &[0.0, 0.5], None).unwrap();
        assert!(res[0].1.is_ok());
        assert!(matches!(res[1].1, Err(Error::Config(_))));
        assert!(with_parameter(&cfg, "bogus", 1.0).is_err());
    }
}
