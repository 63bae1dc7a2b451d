//! JSON reports. Every document starts with `"format_version": 1`; floats
//! use shortest round-trip formatting and non-finite values become `null`.

use serde::Serialize;

use expdyn_core::boxcount::BoxCountResult;
use expdyn_core::dynamics::{SupergrowthFailure, SupergrowthReport};
use expdyn_core::induced::{CertificateOutcome, ContractionCertificate, CoverReport};
use expdyn_core::search::{DimensionReport, ScanOutcome};
use expdyn_core::ComplexValue;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(body: T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        format_version: FORMAT_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

fn pair(z: ComplexValue) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
pub struct RectangleJson {
    pub k: i64,
    pub r: i64,
    pub bound: f64,
    pub ln_bound: f64,
    pub level: Option<usize>,
}

#[derive(Serialize)]
pub struct CertificateJson {
    pub lambda: [f64; 2],
    pub c: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: i64,
    pub l0: usize,
    pub r_range: [i64; 2],
    pub per_rectangle: Vec<RectangleJson>,
    pub max_sum: f64,
    pub pass: bool,
    pub outcome: &'static str,
    pub decay_rate: Option<f64>,
    pub distortion_allowance: f64,
    pub note: &'static str,
}

const DISTORTION_NOTE: &str = "bounds hold modulo the distortion allowance";

impl CertificateJson {
    pub fn new(lambda: ComplexValue, cert: &ContractionCertificate) -> Self {
        Self {
            lambda: pair(lambda),
            c: cert.c,
            delta: cert.delta,
            m: cert.m,
            l0: cert.l0,
            r_range: [cert.r_range.0, cert.r_range.1],
            per_rectangle: cert
                .per_rectangle
                .iter()
                .map(|b| RectangleJson {
                    k: b.rect.k,
                    r: b.rect.r,
                    bound: b.bound,
                    ln_bound: b.ln_bound,
                    level: b.level,
                })
                .collect(),
            max_sum: cert.max_sum,
            pass: cert.pass,
            outcome: match cert.outcome {
                CertificateOutcome::Pass => "pass",
                CertificateOutcome::NotAchieved => "not_achieved",
            },
            decay_rate: cert.decay_rate(),
            distortion_allowance: cert.distortion_allowance,
            note: DISTORTION_NOTE,
        }
    }
}

#[derive(Serialize)]
pub struct CoverLevelJson {
    pub depth: usize,
    pub total: f64,
    pub budget: f64,
}

#[derive(Serialize)]
pub struct CoverJson {
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: i64,
    pub baseline: f64,
    pub levels: Vec<CoverLevelJson>,
    pub aborted: bool,
}

impl From<&CoverReport> for CoverJson {
    fn from(r: &CoverReport) -> Self {
        Self {
            delta: r.delta,
            m: r.m,
            baseline: r.baseline,
            levels: r
                .levels
                .iter()
                .map(|l| CoverLevelJson {
                    depth: l.depth,
                    total: l.total,
                    budget: l.budget,
                })
                .collect(),
            aborted: r.aborted,
        }
    }
}

#[derive(Serialize)]
pub struct SupergrowthJson {
    pub lambda: [f64; 2],
    pub c: f64,
    pub steps: usize,
    pub holds: bool,
    pub first_failure_index: Option<usize>,
    pub failure: Option<&'static str>,
    pub n_min: usize,
    pub ratios: Vec<Option<f64>>,
    pub c_max: f64,
    pub superreal_ratios: Vec<Option<f64>>,
    pub tail_ratio: Option<f64>,
    pub escaped: bool,
}

impl SupergrowthJson {
    pub fn new(lambda: ComplexValue, c: f64, steps: usize, r: &SupergrowthReport) -> Self {
        Self {
            lambda: pair(lambda),
            c,
            steps,
            holds: r.holds,
            first_failure_index: r.first_failure_index,
            failure: r.failure.map(|f| match f {
                SupergrowthFailure::Inequality => "inequality",
                SupergrowthFailure::HitsZero => "hits_zero",
                SupergrowthFailure::UntrustedArgument => "untrusted_argument",
                SupergrowthFailure::NoEscape => "no_escape",
            }),
            n_min: r.n_min,
            ratios: r.ratios.clone(),
            c_max: r.c_max,
            superreal_ratios: r.superreal_ratios.clone(),
            tail_ratio: r.tail_ratio,
            escaped: r.escaped,
        }
    }
}

#[derive(Serialize)]
pub struct BoxCountJson {
    pub epsilons: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub r2: f64,
    pub points: usize,
    pub note: &'static str,
}

impl BoxCountJson {
    pub fn new(r: &BoxCountResult, points: usize) -> Self {
        Self {
            epsilons: r.epsilons.clone(),
            counts: r.counts.clone(),
            slope: r.slope,
            r2: r.r2,
            points,
            note: "box-counting slope of a finite sample, not a Hausdorff dimension",
        }
    }
}

#[derive(Serialize)]
pub struct ScanJson {
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: i64,
    pub l0: usize,
    pub outcome: &'static str,
    pub max_sum: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Serialize)]
pub struct SearchJson {
    pub lambda: [f64; 2],
    pub set: String,
    pub delta_grid: Vec<f64>,
    pub m_grid: Vec<i64>,
    pub l0_grid: Vec<usize>,
    pub c: f64,
    pub r_span: i64,
    pub negative_side: bool,
    pub bound_achieved: Option<f64>,
    pub result: &'static str,
    pub certificate: Option<CertificateJson>,
    pub boxcount: Option<BoxCountJson>,
    pub scanned: Vec<ScanJson>,
}

impl From<&DimensionReport> for SearchJson {
    fn from(r: &DimensionReport) -> Self {
        let p = &r.provenance;
        Self {
            lambda: pair(p.lambda),
            set: p.set.clone(),
            delta_grid: p.delta_grid.clone(),
            m_grid: p.m_grid.clone(),
            l0_grid: p.l0_grid.clone(),
            c: p.config.c,
            r_span: p.config.r_span,
            negative_side: p.config.negative_side,
            bound_achieved: r.bound_achieved,
            result: if r.bound_achieved.is_some() {
                "certificate found"
            } else {
                "no certificate in grid"
            },
            certificate: r.certificate.as_ref().map(|c| CertificateJson::new(p.lambda, c)),
            boxcount: r.boxcount.as_ref().map(|b| BoxCountJson::new(b, 0)),
            scanned: r
                .scanned
                .iter()
                .map(|e| {
                    let (outcome, max_sum, reason) = match &e.outcome {
                        ScanOutcome::Pass { max_sum } => ("pass", Some(*max_sum), None),
                        ScanOutcome::NotAchieved { max_sum } => ("not_achieved", Some(*max_sum), None),
                        ScanOutcome::Skipped { reason } => ("skipped", None, Some(reason.clone())),
                    };
                    ScanJson {
                        delta: e.delta,
                        m: e.m,
                        l0: e.l0,
                        outcome,
                        max_sum,
                        reason,
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_comes_first() {
        #[derive(Serialize)]
        struct Body {
            x: f64,
        }
        let s = to_json(Body { x: 0.1 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["x"].as_f64(), Some(0.1));
        assert!(s.trim_start().starts_with("{\n  \"format_version\": 1"));
    }

    #[test]
    fn non_finite_becomes_null() {
        #[derive(Serialize)]
        struct Body {
            x: f64,
        }
        let s = to_json(Body { x: f64::NEG_INFINITY }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["x"].is_null());
    }
}
