//! Box-counting estimates on point samples.

use alloc::vec::Vec;

use crate::complex::ComplexValue;
use crate::error::{invalid, Error, Result};
use crate::math;

/// Occupied-box counts `N(ε)` and the fitted slope of `log N` against
/// `log 1/ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxCountResult {
    pub epsilons: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub r2: f64,
}

/// Counts boxes of a grid anchored at the lower-left corner of the
/// sample's bounding box.
pub fn box_count(points: &[ComplexValue], epsilons: &[f64]) -> Result<BoxCountResult> {
    box_count_shifted(points, epsilons, 0.0)
}

/// As [`box_count`], with the anchor moved by `−shift·ε` in both
/// coordinates at every scale.
pub fn box_count_shifted(points: &[ComplexValue], epsilons: &[f64], shift: f64) -> Result<BoxCountResult> {
    if points.is_empty() {
        return Err(invalid("no points to count"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("points must be finite"));
    }
    if !shift.is_finite() {
        return Err(invalid("shift must be finite"));
    }
    if epsilons.len() < 2
        || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0))
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::DegenerateScales);
    }
    let x0 = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let y0 = points.iter().map(|p| p.im).fold(f64::INFINITY, f64::min);
    let mut cells: Vec<(i64, i64)> = Vec::with_capacity(points.len());
    let mut counts = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let ax = x0 - shift * eps;
        let ay = y0 - shift * eps;
        cells.clear();
        for p in points {
            let i = math::floor((p.re - ax) / eps);
            let j = math::floor((p.im - ay) / eps);
            if i.abs() >= 9.0e18 || j.abs() >= 9.0e18 {
                return Err(Error::DegenerateScales);
            }
            cells.push((i as i64, j as i64));
        }
        cells.sort_unstable();
        cells.dedup();
        counts.push(cells.len() as u64);
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| -math::ln(*e)).collect();
    let ys: Vec<f64> = counts.iter().map(|n| math::ln(*n as f64)).collect();
    let (slope, _, r2) = math::least_squares(&xs, &ys).ok_or(Error::DegenerateScales)?;
    Ok(BoxCountResult {
        epsilons: epsilons.to_vec(),
        counts,
        slope,
        r2,
    })
}

/// `e0, e0·factor, …` down to `e1` inclusive (up to rounding).
pub fn geometric_scales(e0: f64, e1: f64, factor: f64) -> Result<Vec<f64>> {
    if !(e0 > 0.0 && e1 > 0.0 && e1 < e0 && factor > 0.0 && factor < 1.0) {
        return Err(Error::DegenerateScales);
    }
    let mut out = Vec::new();
    let mut e = e0;
    while e >= e1 * (1.0 - 1e-9) {
        out.push(e);
        e *= factor;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic(from: i32, to: i32) -> Vec<f64> {
        (from..=to).map(|k| math::powf(2.0, -(k as f64))).collect()
    }

    #[test]
    fn segment_has_slope_one() {
        let pts: Vec<ComplexValue> = (0..10_000)
            .map(|i| ComplexValue::real(i as f64 / 9_999.0))
            .collect();
        let r = box_count(&pts, &dyadic(2, 8)).unwrap();
        assert!((r.slope - 1.0).abs() < 0.05, "{}", r.slope);
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn repeated_point_has_slope_zero() {
        let pts = alloc::vec![ComplexValue::new(0.3, -2.0); 500];
        let r = box_count(&pts, &dyadic(1, 10)).unwrap();
        assert_eq!(r.slope, 0.0);
        assert!(r.counts.iter().all(|n| *n == 1));
    }

    #[test]
    fn counts_on_a_lattice_are_exact() {
        let mut pts = Vec::new();
        for i in 0..16 {
            for j in 0..16 {
                pts.push(ComplexValue::new(i as f64 / 16.0, j as f64 / 16.0));
            }
        }
        let r = box_count(&pts, &dyadic(1, 4)).unwrap();
        assert_eq!(r.counts, alloc::vec![4, 16, 64, 256]);
        assert!((r.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unordered_scales_are_degenerate() {
        let pts = [ComplexValue::ZERO];
        assert_eq!(box_count(&pts, &[0.1, 0.2]), Err(Error::DegenerateScales));
        assert_eq!(box_count(&pts, &[0.1, 0.1]), Err(Error::DegenerateScales));
        assert_eq!(box_count(&pts, &[0.1]), Err(Error::DegenerateScales));
        assert_eq!(box_count(&pts, &[0.1, -0.1]), Err(Error::DegenerateScales));
    }

    #[test]
    fn geometric_scales_include_endpoint() {
        let s = geometric_scales(0.5, 0.5 / 64.0, 0.5).unwrap();
        assert_eq!(s.len(), 7);
        assert!(geometric_scales(0.1, 0.2, 0.5).is_err());
    }
}
