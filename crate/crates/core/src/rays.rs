//! Dynamic rays traced by pulling back along an external address.
//!
//! A ray point `g_s(t)` is approximated by lifting `t` with
//! `F(t) = e^t − 1` `d` times, placing the result in strip `s_d` and applying
//! the inverse branches `s_{d−1}, …, s_0`. With this normalization
//! `f(g_s(t)) = g_{σs}(F(t))` holds exactly in the limit.

use alloc::vec::Vec;

use crate::coding::ExternalAddress;
use crate::complex::ComplexValue;
use crate::dynamics::{checked_lambda, eval_map, inverse_branch_parts};
use crate::error::{invalid, Error, Result};
use crate::logpolar::LambdaParts;
use crate::math::{self, LN_MAX, TAU};
use crate::tower::TowerReal;

pub const DEFAULT_TOL: f64 = 1e-10;
/// Extra depth used to confirm convergence.
pub const CHECK_EXTRA_DEPTH: usize = 5;
/// Samples below this parameter are flagged as low confidence.
pub const LOW_CONFIDENCE_T: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySample {
    pub t: f64,
    pub point: ComplexValue,
    pub depth: usize,
    /// Largest of the depth/depth+5 gap and the forward-invariance defect.
    pub residual: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub address: ExternalAddress,
    pub samples: Vec<RaySample>,
    pub depth: usize,
    pub residual: f64,
}

/// `F(t) = e^t − 1` on towers.
pub fn lift(x: TowerReal) -> TowerReal {
    match x.to_f64() {
        Some(v) if v < LN_MAX => TowerReal::from_f64(math::exp_m1(v)),
        _ => x.exp(),
    }
}

/// `F^n(t)`.
pub fn lift_n(t: f64, n: usize) -> TowerReal {
    let mut x = TowerReal::from_f64(t);
    for _ in 0..n {
        x = lift(x);
    }
    x
}

/// Pulls the seed at `F^depth(t)` back along `s_{depth−1}, …, s_0`.
pub fn pull_back(
    lambda: ComplexValue,
    s: &ExternalAddress,
    t: f64,
    depth: usize,
) -> Result<ComplexValue> {
    let lam = checked_lambda(lambda)?;
    let entries = s.prefix(depth + 1)?;
    pull_back_parts(&lam, &entries, lift_n(t, depth))
}

/// `entries[depth]` places the seed; the rest select the branches.
fn pull_back_parts(lam: &LambdaParts, entries: &[i64], seed_re: TowerReal) -> Result<ComplexValue> {
    let depth = entries.len() - 1;
    let strip_im = |k: i64| TAU * k as f64 - lam.arg;
    let mut far = Some(seed_re);
    let mut w = ComplexValue::new(0.0, strip_im(entries[depth]));
    for j in (0..depth).rev() {
        match far {
            Some(x) if !x.is_native() => {
                // arg w = Im/Re underflows at this scale
                let re = x.ln().expect("lifted level is positive").add_f64(-lam.ln_abs);
                match re.to_f64() {
                    Some(v) => {
                        far = None;
                        w = ComplexValue::new(v, strip_im(entries[j]));
                    }
                    None => far = Some(re),
                }
            }
            Some(x) => {
                far = None;
                w.re = x.to_f64().expect("native");
                w = inverse_branch_parts(lam, w, entries[j])?;
            }
            None => w = inverse_branch_parts(lam, w, entries[j])?,
        }
    }
    match far {
        None => Ok(w),
        Some(x) => match x.to_f64() {
            Some(v) => Ok(ComplexValue::new(v, w.im)),
            None => Err(Error::Overflow { re: f64::INFINITY }),
        },
    }
}

/// Traces `g_s` at each `t`, confirming every point against a trace five
/// levels deeper and against the ray of `σs` through its image.
pub fn trace_ray(
    lambda: ComplexValue,
    s: &ExternalAddress,
    t_values: &[f64],
    depth: usize,
    tol: f64,
) -> Result<Ray> {
    let lam = checked_lambda(lambda)?;
    if depth < 1 {
        return Err(invalid("depth must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if t_values.iter().any(|t| !(*t > 0.0) || !t.is_finite())
        || t_values.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(invalid("t values must be positive and strictly increasing"));
    }
    let entries = s.prefix(depth + CHECK_EXTRA_DEPTH + 1)?;
    let samples = t_values
        .iter()
        .map(|&t| trace_point(&lam, &entries, t, depth, tol))
        .collect::<Result<Vec<_>>>()?;
    let residual = samples.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(Ray {
        address: s.clone(),
        samples,
        depth,
        residual,
    })
}

/// One converged ray point. `entries` must hold `depth + 6` symbols.
pub(crate) fn trace_point(
    lam: &LambdaParts,
    entries: &[i64],
    t: f64,
    depth: usize,
    tol: f64,
) -> Result<RaySample> {
    let z = pull_back_parts(lam, &entries[..=depth], lift_n(t, depth))?;
    let deep = depth + CHECK_EXTRA_DEPTH;
    let z_deep = pull_back_parts(lam, &entries[..=deep], lift_n(t, deep))?;
    let gap = z.dist(z_deep);
    if !(gap < tol) {
        return Err(Error::NonConvergence { t, gap });
    }
    let mut residual = gap;
    // the image must sit on the shifted ray at parameter F(t)
    if let (Ok(fz), Some(ft)) = (eval_map(lam.value, z), lift_n(t, 1).to_f64()) {
        if ft > 0.0 {
            let w = pull_back_parts(lam, &entries[1..=depth], lift_n(ft, depth - 1))?;
            residual = residual.max(fz.dist(w) / fz.norm().max(1.0));
        }
    }
    Ok(RaySample {
        t,
        point: z,
        depth,
        residual,
        low_confidence: t < LOW_CONFIDENCE_T,
    })
}

/// `lim Im g_s(t) = 2π·s_0 − Arg λ`.
pub fn ray_asymptote(lambda: ComplexValue, s: &ExternalAddress) -> Result<f64> {
    let lam = checked_lambda(lambda)?;
    let s0 = s.first().ok_or(Error::EmptyAddress)?;
    Ok(TAU * s0 as f64 - lam.arg)
}

/// Heuristic behaviour of a ray towards its small-parameter end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Landing {
    /// Endpoints form a Cauchy-like sequence converging to `at`.
    Landing { at: ComplexValue },
    /// Endpoints keep spreading over a region of this diameter.
    Accumulating { diameter: f64 },
    Undecided,
}

/// Successive gaps must shrink by at least this factor.
pub const CAUCHY_FACTOR: f64 = 2.0;
/// Number of consecutive gap refinements inspected.
pub const LANDING_WINDOW: usize = 5;
/// Diameter above which the tail is reported as accumulating.
pub const SPREAD_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct LandingProbe {
    pub class: Landing,
    /// `(t, g_s(t))` for the parameters that converged, in input order.
    pub endpoints: Vec<(f64, ComplexValue)>,
}

/// Intermediate parameters traced between consecutive probe parameters.
pub const CONTINUITY_SUBDIVISIONS: usize = 16;

/// Traces `g_s` along a decreasing parameter sequence and classifies the
/// endpoints.
///
/// The walk stops at the first parameter whose trace fails to converge, or
/// whose connection to the previous endpoint is not continuous at the
/// sampled resolution (a subdivision step longer than [`SPREAD_THRESHOLD`]);
/// below the start of the ray the pullback settles on unrelated points. An
/// endpoint sequence whose modulus grows monotonically is running off to
/// infinity and is left undecided.
pub fn landing_probe(
    lambda: ComplexValue,
    s: &ExternalAddress,
    t_sequence: &[f64],
    depth: usize,
) -> Result<LandingProbe> {
    let lam = checked_lambda(lambda)?;
    if depth < 1 {
        return Err(invalid("depth must be at least 1"));
    }
    if t_sequence.windows(2).any(|w| w[0] <= w[1]) || t_sequence.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("t sequence must be positive and strictly decreasing"));
    }
    let entries = s.prefix(depth + CHECK_EXTRA_DEPTH + 1)?;
    let point = |t: f64| match trace_point(&lam, &entries, t, depth, 1e-8) {
        Ok(p) => Ok(Some(p.point)),
        Err(Error::NonConvergence { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let mut endpoints: Vec<(f64, ComplexValue)> = Vec::new();
    'walk: for &t in t_sequence {
        let Some(z) = point(t)? else { break };
        if let Some(&(t_prev, mut prev)) = endpoints.last() {
            let ratio = t / t_prev;
            for i in 1..=CONTINUITY_SUBDIVISIONS {
                let u = t_prev * math::powf(ratio, i as f64 / CONTINUITY_SUBDIVISIONS as f64);
                let Some(w) = (if i == CONTINUITY_SUBDIVISIONS { Some(z) } else { point(u)? }) else {
                    break 'walk;
                };
                if w.dist(prev) > SPREAD_THRESHOLD {
                    break 'walk;
                }
                prev = w;
            }
        }
        endpoints.push((t, z));
    }
    let class = classify_endpoints(&endpoints);
    Ok(LandingProbe { class, endpoints })
}

fn classify_endpoints(endpoints: &[(f64, ComplexValue)]) -> Landing {
    let need = LANDING_WINDOW + 2;
    if endpoints.len() < need {
        return Landing::Undecided;
    }
    let tail = &endpoints[endpoints.len() - need..];
    let scale = tail.iter().map(|p| p.1.norm()).fold(1.0, f64::max);
    let resolved = 1e-12 * scale;
    let gaps: Vec<f64> = tail.windows(2).map(|w| w[0].1.dist(w[1].1)).collect();
    let cauchy = gaps
        .windows(2)
        .all(|g| g[1] <= resolved || g[0] >= CAUCHY_FACTOR * g[1]);
    if cauchy {
        return Landing::Landing { at: tail[need - 1].1 };
    }
    let drifting = tail.windows(2).all(|w| w[1].1.norm() > w[0].1.norm());
    if drifting {
        return Landing::Undecided;
    }
    let mut diameter: f64 = 0.0;
    for a in tail {
        for b in tail {
            diameter = diameter.max(a.1.dist(b.1));
        }
    }
    if diameter > SPREAD_THRESHOLD {
        Landing::Accumulating { diameter }
    } else {
        Landing::Undecided
    }
}
