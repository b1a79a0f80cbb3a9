//! Trace CSV and run metadata.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use super::diagnostics::PeReport;
use super::runner::{RunAbort, RunOutput, StepRecord};
use super::scenario::Scenario;
use super::summary::{summarize, Summary, Thresholds};
use crate::controller::GainReport;
use crate::Vec3;

pub const TRACE_FILE: &str = "trace.csv";
pub const META_FILE: &str = "meta.json";
pub const SUMMARY_FILE: &str = "summary.txt";

fn vec_cols(out: &mut Vec<String>, name: &str) {
    for axis in ["x", "y", "z"] {
        out.push(format!("{name}_{axis}"));
    }
}

/// Column names for a run with `targets` targets.
pub fn header(targets: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    vec_cols(&mut h, "x1");
    vec_cols(&mut h, "x2");
    for j in 1..=targets {
        vec_cols(&mut h, &format!("s{j}"));
    }
    vec_cols(&mut h, "c");
    vec_cols(&mut h, "c_hat");
    vec_cols(&mut h, "h_hat");
    h.push("r".into());
    vec_cols(&mut h, "upsilon");
    vec_cols(&mut h, "u1");
    vec_cols(&mut h, "u2");
    vec_cols(&mut h, "e");
    vec_cols(&mut h, "e1");
    vec_cols(&mut h, "e2");
    vec_cols(&mut h, "e_s");
    h.push("epsilon".into());
    for s in ["min", "mid", "max"] {
        h.push(format!("log10_xi_eig_{s}"));
    }
    for s in ["min_agent_target", "ell12", "antipodal_deg"] {
        h.push(s.into());
    }
    vec_cols(&mut h, "e_h");
    vec_cols(&mut h, "gain");
    for s in ["e_out", "identity_residual", "elevation", "radius_clamped"] {
        h.push(s.into());
    }
    vec_cols(&mut h, "p12");
    h
}

fn num(out: &mut Vec<String>, x: f64) {
    out.push(format!("{x:.16e}"));
}

fn vec3(out: &mut Vec<String>, v: &Vec3) {
    for c in v.iter() {
        num(out, *c);
    }
}

/// One CSV row, in [`header`] order.
pub fn row(r: &StepRecord) -> Vec<String> {
    let mut o = vec![r.k.to_string()];
    vec3(&mut o, &r.x1);
    vec3(&mut o, &r.x2);
    for s in &r.targets {
        vec3(&mut o, s);
    }
    for v in [&r.center, &r.c_hat, &r.h_hat] {
        vec3(&mut o, v);
    }
    num(&mut o, r.radius);
    for v in [&r.upsilon, &r.u1, &r.u2, &r.e, &r.e1, &r.e2, &r.e_s] {
        vec3(&mut o, v);
    }
    num(&mut o, r.residual);
    for x in r.log10_xi_eig {
        num(&mut o, x);
    }
    for x in [r.min_agent_target, r.ell12, r.antipodal_deg] {
        num(&mut o, x);
    }
    vec3(&mut o, &r.e_h);
    vec3(&mut o, &r.gain);
    for x in [r.e_out, r.identity_residual, r.elevation] {
        num(&mut o, x);
    }
    o.push(u8::from(r.radius_clamped).to_string());
    vec3(&mut o, &r.p12);
    o
}

pub fn write_trace<W: Write>(mut w: W, targets: usize, records: &[StepRecord]) -> io::Result<()> {
    writeln!(w, "{}", header(targets).join(","))?;
    for r in records {
        writeln!(w, "{}", row(r).join(","))?;
    }
    w.flush()
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub scenario: Scenario,
    pub gain_report: GainReport,
    /// False when any convergence condition on the gains fails.
    pub validated: bool,
    pub summary: Option<Summary>,
    pub persistent_excitation: Option<PeReport>,
    pub abort: Option<RunAbort>,
}

impl RunMeta {
    /// Window length for the excitation check: one revolution, `2 / rho`.
    pub fn new(scenario: &Scenario, output: &RunOutput) -> Self {
        let gain_report = scenario.gain_report();
        let records = &output.records;
        let summary = summarize(
            records,
            scenario.run.post_transient_fraction,
            Thresholds::default(),
        );
        let persistent_excitation = summary.as_ref().map(|s| {
            let start = records
                .iter()
                .position(|r| r.k == s.post_transient_start)
                .unwrap_or(0);
            PeReport::from_records(
                &records[start..],
                records,
                scenario.controller.period(),
                scenario.controller.beta,
            )
        });
        Self {
            scenario: scenario.clone(),
            validated: gain_report.all_passed(),
            gain_report,
            summary,
            persistent_excitation,
            abort: output.abort.clone(),
        }
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        if !self.validated {
            s.push_str("UNVALIDATED: gain conditions fail\n");
        }
        match &self.summary {
            Some(sum) => s.push_str(&sum.to_string()),
            None => s.push_str("empty trace"),
        }
        s.push('\n');
        if let Some(pe) = &self.persistent_excitation {
            s.push_str(&format!(
                "persistent excitation (N = {}): {} ({} of {} windows fail, eigenvalues {:.4e} .. {:.4e})\n",
                pe.window,
                if pe.passed { "pass" } else { "fail" },
                pe.windows_failed,
                pe.windows_checked,
                pe.min_eigenvalue,
                pe.max_eigenvalue
            ));
        }
        if let Some(a) = &self.abort {
            s.push_str(&format!("run aborted: {a}\n"));
        }
        s
    }
}

/// Writes `trace.csv`, `meta.json` and `summary.txt` into `dir`, creating it
/// if needed.
pub fn write_artifacts(dir: &Path, scenario: &Scenario, output: &RunOutput) -> io::Result<RunMeta> {
    fs::create_dir_all(dir)?;
    let file = io::BufWriter::new(fs::File::create(dir.join(TRACE_FILE))?);
    write_trace(file, scenario.world.targets.len(), &output.records)?;
    let meta = RunMeta::new(scenario, output);
    let json = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    fs::write(dir.join(META_FILE), json + "\n")?;
    fs::write(dir.join(SUMMARY_FILE), meta.summary_text())?;
    Ok(meta)
}
