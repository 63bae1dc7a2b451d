//! Grid scans for contraction certificates.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::boxcount::BoxCountResult;
use crate::complex::ComplexValue;
use crate::error::{invalid, Result};
use crate::induced::{negative_geometry, verify_contraction, ContractionCertificate};
use crate::invariant::ThinSetSpec;

/// Knobs of a scan besides the three grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Supergrowth constant used to build the geometry.
    pub c: f64,
    /// Levels stored above `l0`.
    pub levels: usize,
    /// Certificates cover `M ≤ r ≤ M + r_span`.
    pub r_span: i64,
    /// Also certify `−M − r_span ≤ r ≤ −M`.
    pub negative_side: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            levels: 2,
            r_span: 20,
            negative_side: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScanOutcome {
    Pass { max_sum: f64 },
    NotAchieved { max_sum: f64 },
    /// No certificate could be attempted (geometry or range failure).
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanEntry {
    pub delta: f64,
    pub m: i64,
    pub l0: usize,
    pub outcome: ScanOutcome,
}

/// Parameters of a run, kept next to its results.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub lambda: ComplexValue,
    pub set: String,
    pub delta_grid: Vec<f64>,
    pub m_grid: Vec<i64>,
    pub l0_grid: Vec<usize>,
    pub config: SearchConfig,
}

/// Outcome of a scan. `bound_achieved` is `1 + δ` of the stored
/// certificate, present exactly when that certificate passes.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionReport {
    pub boxcount: Option<BoxCountResult>,
    pub certificate: Option<ContractionCertificate>,
    pub bound_achieved: Option<f64>,
    pub scanned: Vec<ScanEntry>,
    pub provenance: Provenance,
}

impl DimensionReport {
    pub fn with_boxcount(mut self, result: BoxCountResult) -> Self {
        self.boxcount = Some(result);
        self
    }
}

/// Scans the grids with the default [`SearchConfig`].
pub fn dimension_bound_search(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    delta_grid: &[f64],
    m_grid: &[i64],
    l0_grid: &[usize],
) -> Result<DimensionReport> {
    dimension_bound_search_with(lambda, spec, delta_grid, m_grid, l0_grid, &SearchConfig::default())
}

/// Runs [`verify_contraction`] on every grid point and keeps the passing
/// certificate with the smallest `δ` (first found on ties, scanning `l0`,
/// then `M`, then `δ` in the given order).
pub fn dimension_bound_search_with(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    delta_grid: &[f64],
    m_grid: &[i64],
    l0_grid: &[usize],
    config: &SearchConfig,
) -> Result<DimensionReport> {
    if delta_grid.is_empty() || m_grid.is_empty() || l0_grid.is_empty() {
        return Err(invalid("every grid must be nonempty"));
    }
    if delta_grid.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(invalid("δ values must lie in (0, 1)"));
    }
    if m_grid.iter().any(|m| *m < 1) {
        return Err(invalid("M values must be at least 1"));
    }
    if config.r_span < 0 {
        return Err(invalid("r span must be nonnegative"));
    }
    let mut scanned = Vec::new();
    let mut best: Option<ContractionCertificate> = None;
    for &l0 in l0_grid {
        let base = negative_geometry(lambda, config.c, l0, config.levels, 1);
        for &m in m_grid {
            let lo = if config.negative_side { -m - config.r_span } else { m };
            let hi = m + config.r_span;
            let geometry = base
                .clone()
                .and_then(|g| g.with_r_max(m + config.r_span).with_threshold(m));
            for &delta in delta_grid {
                let outcome = match geometry
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|g| verify_contraction(spec, g, delta, (lo, hi)))
                {
                    Err(e) => ScanOutcome::Skipped { reason: e.to_string() },
                    Ok(cert) if cert.pass => {
                        let max_sum = cert.max_sum;
                        if best.as_ref().is_none_or(|b| delta < b.delta) {
                            best = Some(cert);
                        }
                        ScanOutcome::Pass { max_sum }
                    }
                    Ok(cert) => ScanOutcome::NotAchieved { max_sum: cert.max_sum },
                };
                scanned.push(ScanEntry { delta, m, l0, outcome });
            }
        }
    }
    Ok(DimensionReport {
        boxcount: None,
        bound_achieved: best.as_ref().map(|c| 1.0 + c.delta),
        certificate: best,
        scanned,
        provenance: Provenance {
            lambda,
            set: spec.descriptor.clone(),
            delta_grid: delta_grid.to_vec(),
            m_grid: m_grid.to_vec(),
            l0_grid: l0_grid.to_vec(),
            config: *config,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip() -> ThinSetSpec {
        ThinSetSpec::strip(0.0, crate::math::PI).unwrap()
    }

    #[test]
    fn half_passes_at_ten() {
        let r = dimension_bound_search(ComplexValue::ONE, &strip(), &[0.5, 0.3, 0.2], &[5, 10, 20], &[3]).unwrap();
        let b = r.bound_achieved.unwrap();
        assert!(b <= 1.5, "{b}");
        assert!(r.certificate.as_ref().unwrap().pass);
        let at_ten = r
            .scanned
            .iter()
            .find(|e| e.m == 10 && e.delta == 0.5)
            .unwrap();
        assert!(matches!(at_ten.outcome, ScanOutcome::Pass { .. }));
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(dimension_bound_search(ComplexValue::ONE, &strip(), &[], &[10], &[3]).is_err());
    }

    #[test]
    fn unusable_l0_is_recorded_not_raised() {
        let r = dimension_bound_search(ComplexValue::ONE, &strip(), &[0.5], &[10], &[6]).unwrap();
        assert!(r.bound_achieved.is_none());
        assert!(matches!(r.scanned[0].outcome, ScanOutcome::Skipped { .. }));
    }
}
