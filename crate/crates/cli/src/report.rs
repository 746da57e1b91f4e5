//! JSON form of a certification run.

use detconvex::certifier::{CertificationReport, SampleDiagnostics, Witness};
use detconvex::linalg::RNG_DESCRIPTION;
use serde::Serialize;

#[derive(Serialize)]
pub struct GridJson {
    pub s_min: f64,
    pub s_max: f64,
    pub count: usize,
}

#[derive(Serialize)]
pub struct FailingPointJson {
    pub s: f64,
    pub fprime: f64,
    pub lhs: f64,
}

#[derive(Serialize)]
pub struct WitnessJson {
    pub kind: &'static str,
    pub s: f64,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub analytic: f64,
    pub fd: f64,
}

impl From<&Witness<f64>> for WitnessJson {
    fn from(w: &Witness<f64>) -> Self {
        Self {
            kind: w.kind.as_str(),
            s: w.s_star,
            c: w.c.rows(),
            h: w.h.rows(),
            analytic: w.analytic_value,
            fd: w.fd_value,
        }
    }
}

#[derive(Serialize)]
pub struct DiagnosticsJson {
    pub samples_run: usize,
    pub samples_skipped: usize,
    pub min_hess_form: Option<f64>,
    pub min_midpoint_gap: Option<f64>,
    pub failing_count: usize,
}

impl From<&SampleDiagnostics<f64>> for DiagnosticsJson {
    fn from(d: &SampleDiagnostics<f64>) -> Self {
        Self {
            samples_run: d.samples_run,
            samples_skipped: d.samples_skipped,
            min_hess_form: d.min_hess_form,
            min_midpoint_gap: d.min_midpoint_gap,
            failing_count: d.failing_count,
        }
    }
}

#[derive(Serialize)]
pub struct AnalyticJson {
    pub convex: bool,
    pub reason: String,
}

#[derive(Serialize)]
pub struct DomainFailureJson {
    pub s: f64,
    pub message: String,
}

#[derive(Serialize)]
pub struct ReportJson {
    pub version: &'static str,
    pub function_source: String,
    pub n: usize,
    pub grid: GridJson,
    pub tol: f64,
    pub verdict: &'static str,
    pub failing_points: Vec<FailingPointJson>,
    pub witnesses: Vec<WitnessJson>,
    pub diagnostics: DiagnosticsJson,
    pub analytic: Option<AnalyticJson>,
    pub domain_failure: Option<DomainFailureJson>,
    pub notes: Vec<String>,
    pub seed: u64,
    pub rng: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ReportJson {
    pub fn new(
        source: &str,
        report: &CertificationReport<f64>,
        diagnostics: DiagnosticsJson,
        extra_notes: &[String],
        seed: u64,
        timestamp: Option<u64>,
    ) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            function_source: source.to_string(),
            n: report.n,
            grid: GridJson {
                s_min: report.grid.s_min,
                s_max: report.grid.s_max,
                count: report.grid.count,
            },
            tol: report.tol,
            verdict: report.verdict.as_str(),
            failing_points: report
                .failing_points()
                .map(|p| FailingPointJson {
                    s: p.s,
                    fprime: p.fprime,
                    lhs: p.lhs,
                })
                .collect(),
            witnesses: report.witnesses.iter().map(WitnessJson::from).collect(),
            diagnostics,
            analytic: report.analytic.as_ref().map(|a| AnalyticJson {
                convex: a.convex,
                reason: a.reason.clone(),
            }),
            domain_failure: report.domain_failure.as_ref().map(|d| DomainFailureJson {
                s: d.s,
                message: d.message.clone(),
            }),
            notes: report.notes.iter().chain(extra_notes).cloned().collect(),
            seed,
            rng: RNG_DESCRIPTION,
            timestamp,
        }
    }
}
