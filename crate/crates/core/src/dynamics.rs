//! Evaluation and iteration of `f_λ(z) = λe^z`.

use alloc::vec::Vec;

use crate::complex::ComplexValue;
use crate::error::{invalid, Error, Result};
use crate::logpolar::{LambdaParts, LogPolarComplex};
use crate::math::{self, LN_MAX, PI, TAU};
use crate::tower::TowerReal;

/// Accumulated derivative beyond which an orbit is flagged as not shadowed.
pub const PRECISION_DERIVATIVE_LIMIT: f64 = 1e15;

/// `λe^z` in native arithmetic.
pub fn eval_map(lambda: ComplexValue, z: ComplexValue) -> Result<ComplexValue> {
    if math::ln(lambda.norm()) + z.re > LN_MAX {
        return Err(Error::Overflow { re: z.re });
    }
    let w = lambda * z.exp();
    if !w.is_finite() {
        return Err(Error::Overflow { re: z.re });
    }
    Ok(w)
}

/// One point of an orbit. `native` is present while both cartesian
/// components fit in an `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub polar: LogPolarComplex,
    pub native: Option<ComplexValue>,
}

impl OrbitPoint {
    pub fn from_complex(z: ComplexValue) -> Self {
        Self {
            polar: LogPolarComplex::from_complex(z),
            native: Some(z),
        }
    }

    pub fn from_polar(polar: LogPolarComplex) -> Self {
        Self {
            native: polar.to_complex(),
            polar,
        }
    }

    /// Image under `f_λ`.
    pub fn step(&self, lambda: &LambdaParts) -> Self {
        Self::from_polar(self.polar.step(self.native, lambda))
    }

    pub fn log_modulus(&self) -> TowerReal {
        self.polar.log_modulus
    }

    /// `Im z` if it is meaningful as a native number.
    pub fn imag(&self) -> Option<f64> {
        match self.native {
            Some(z) => Some(z.im),
            None => self.polar.imag_part().to_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    /// `z_0, …, z_N`.
    pub points: Vec<OrbitPoint>,
    /// First index whose log-modulus exceeds the escape threshold.
    pub escape_index: Option<usize>,
    /// First index where the accumulated derivative passes
    /// [`PRECISION_DERIVATIVE_LIMIT`].
    pub precision_lost_at: Option<usize>,
    /// First index whose argument is no longer trusted.
    pub untrusted_from: Option<usize>,
}

/// Iterates `steps` times from `z0`, switching to log-polar form when the
/// cartesian form overflows.
pub fn iterate_orbit(
    lambda: ComplexValue,
    z0: ComplexValue,
    steps: usize,
    escape_log_modulus: f64,
) -> Result<Orbit> {
    let lam = checked_lambda(lambda)?;
    if !z0.is_finite() {
        return Err(invalid("z0 must be finite"));
    }
    let threshold = TowerReal::from_f64(escape_log_modulus);
    let deriv_limit = TowerReal::from_f64(math::ln(PRECISION_DERIVATIVE_LIMIT));
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = OrbitPoint::from_complex(z0);
    let mut escape_index = None;
    let mut precision_lost_at = None;
    let mut untrusted_from = None;
    let mut log_deriv = TowerReal::ZERO;
    points.push(p);
    if p.log_modulus() > threshold {
        escape_index = Some(0);
    }
    for n in 1..=steps {
        p = p.step(&lam);
        log_deriv = log_deriv.add(&p.log_modulus());
        if escape_index.is_none() && p.log_modulus() > threshold {
            escape_index = Some(n);
        }
        if precision_lost_at.is_none() && log_deriv > deriv_limit {
            precision_lost_at = Some(n);
        }
        if untrusted_from.is_none() && !p.polar.arg_trusted {
            untrusted_from = Some(n);
        }
        points.push(p);
    }
    Ok(Orbit {
        points,
        escape_index,
        precision_lost_at,
        untrusted_from,
    })
}

/// `log|(f^n)'(z0)| = Σ_{i=1..n} log|f^i(z0)|`, using `|f'(z)| = |f(z)|`.
pub fn orbit_derivative_log(lambda: ComplexValue, z0: ComplexValue, n: usize) -> Result<f64> {
    let lam = checked_lambda(lambda)?;
    let mut z = z0;
    let mut acc = 0.0;
    for i in 1..=n {
        let lm = lam.ln_abs + z.re;
        if lm > LN_MAX {
            return Err(Error::Range { step: i });
        }
        z = lam.value * z.exp();
        acc += lm;
    }
    Ok(acc)
}

/// The preimage of `w` lying in strip `P_k`, i.e. with
/// `Im z ∈ ((2k−1)π − Arg λ, (2k+1)π − Arg λ]`.
pub fn inverse_branch(lambda: ComplexValue, w: ComplexValue, k: i64) -> Result<ComplexValue> {
    let lam = checked_lambda(lambda)?;
    inverse_branch_parts(&lam, w, k)
}

pub(crate) fn inverse_branch_parts(
    lam: &LambdaParts,
    w: ComplexValue,
    k: i64,
) -> Result<ComplexValue> {
    if w.re == 0.0 && w.im == 0.0 {
        return Err(Error::ZeroPreimage);
    }
    let arg_w = if w.im == 0.0 && w.re < 0.0 { PI } else { w.arg() };
    Ok(ComplexValue::new(
        math::ln(w.norm()) - lam.ln_abs,
        (TAU * k as f64 + arg_w) - lam.arg,
    ))
}

/// `β_1, …, β_N` with `β_n = f^n(0)`.
pub fn singular_orbit(lambda: ComplexValue, n: usize) -> Result<Vec<OrbitPoint>> {
    if n < 1 {
        return Err(invalid("singular orbit needs N >= 1"));
    }
    let orbit = iterate_orbit(lambda, ComplexValue::ZERO, n, f64::MAX)?;
    Ok(orbit.points.into_iter().skip(1).collect())
}

/// Why a supergrowth index failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupergrowthFailure {
    /// `α_{n+1} < c·e^{α_n}`.
    Inequality,
    /// The orbit landed on `0` (or underflowed to it).
    HitsZero,
    /// The argument of `β_{n+1}` carries no information.
    UntrustedArgument,
    /// The orbit did not leave the native exponent range within the horizon.
    NoEscape,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupergrowthReport {
    pub holds: bool,
    pub first_failure_index: Option<usize>,
    pub failure: Option<SupergrowthFailure>,
    /// Start index of `ratios`.
    pub n_min: usize,
    /// `α_{n+1} / (c·e^{α_n})` for `n ∈ [n_min, N)` where both sides are native.
    pub ratios: Vec<Option<f64>>,
    /// Largest `c` passing every checked index (0 when none does).
    pub c_max: f64,
    /// `α_n / (c|β_n|/|λ|)` for `n ∈ [n_min, N]`.
    pub superreal_ratios: Vec<Option<f64>>,
    /// `(α_1 + … + α_n)/α_{n+1}` at the last `n` with native values.
    pub tail_ratio: Option<f64>,
    /// `α_N` left the native exponent range.
    pub escaped: bool,
}

/// Finite-horizon check of `α_{n+1} ≥ c·e^{α_n}` for `n ∈ [n_min, N)`.
///
/// The recursion fixes `log|β_{n+1}| = log|λ| + α_n`, so the inequality is
/// equivalent to `|λ|·cos(arg β_{n+1}) ≥ c`; that form is what gets tested,
/// so `e^{α_n}` is never formed. The orbit must also leave the native
/// exponent range by index `N`.
pub fn check_supergrowth(
    lambda: ComplexValue,
    c: f64,
    horizon: usize,
    n_min: usize,
) -> Result<SupergrowthReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("c must be positive"));
    }
    if n_min < 1 || horizon <= n_min {
        return Err(invalid("need N > n_min >= 1"));
    }
    let lam = checked_lambda(lambda)?;
    let orbit = iterate_orbit(lambda, ComplexValue::ZERO, horizon, f64::MAX)?;
    let beta = &orbit.points;
    let alpha = |n: usize| beta[n].polar.real_part();

    let mut first_failure_index = None;
    let mut failure = None;
    let mut ratios = Vec::with_capacity(horizon - n_min);
    let mut c_max = f64::INFINITY;
    for n in n_min..horizon {
        let next = &beta[n + 1].polar;
        let identity_ratio = if next.is_zero() {
            Err(SupergrowthFailure::HitsZero)
        } else if !next.arg_trusted {
            Err(SupergrowthFailure::UntrustedArgument)
        } else {
            Ok(lam.abs() * cos_exact(next.argument))
        };
        let direct = match (alpha(n + 1).to_f64(), alpha(n).to_f64()) {
            (Some(a1), Some(a0)) if a0 < LN_MAX => Some(a1 / (c * math::exp(a0))),
            _ => None,
        };
        ratios.push(direct);
        match identity_ratio {
            Ok(r) => {
                c_max = c_max.min(r);
                if r < c && first_failure_index.is_none() {
                    first_failure_index = Some(n);
                    failure = Some(SupergrowthFailure::Inequality);
                }
            }
            Err(why) => {
                c_max = 0.0;
                if first_failure_index.is_none() {
                    first_failure_index = Some(n);
                    failure = Some(why);
                }
            }
        }
    }
    let last = alpha(horizon);
    let escaped = !last.negative && last.magnitude > TowerReal::from_f64(LN_MAX);
    if failure.is_none() && !escaped {
        first_failure_index = Some(horizon);
        failure = Some(SupergrowthFailure::NoEscape);
    }

    let superreal_ratios = (n_min..=horizon)
        .map(|n| {
            let p = &beta[n].polar;
            (p.arg_trusted && !p.is_zero()).then(|| lam.abs() * cos_exact(p.argument) / c)
        })
        .collect();

    let mut tail_ratio = None;
    let mut sum = 0.0;
    for n in 1..horizon {
        match (alpha(n).to_f64(), alpha(n + 1).to_f64()) {
            (Some(a), Some(a1)) => {
                sum += a;
                if a1 != 0.0 {
                    tail_ratio = Some(sum / a1);
                }
            }
            _ => break,
        }
    }

    Ok(SupergrowthReport {
        holds: failure.is_none(),
        first_failure_index,
        failure,
        n_min,
        ratios,
        c_max: c_max.max(0.0),
        superreal_ratios,
        tail_ratio,
        escaped,
    })
}

fn cos_exact(theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else if theta == PI {
        -1.0
    } else {
        math::cos(theta)
    }
}

pub(crate) fn checked_lambda(lambda: ComplexValue) -> Result<LambdaParts> {
    if !lambda.is_finite() || (lambda.re == 0.0 && lambda.im == 0.0) {
        return Err(invalid("λ must be finite and nonzero"));
    }
    Ok(LambdaParts::new(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed point of `x = λe^x` by plain iteration (attracting branch).
    fn attracting_fixed_point(lambda: f64) -> f64 {
        let mut x: f64 = 0.0;
        for _ in 0..10_000 {
            x = lambda * x.exp();
        }
        x
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_map(ComplexValue::ONE, ComplexValue::ZERO).unwrap(), ComplexValue::ONE);
        let w = eval_map(ComplexValue::ONE, ComplexValue::new(1.0, PI)).unwrap();
        assert!((w.re + math::E).abs() < 1e-15 && w.im.abs() < 1e-15);
        let x = attracting_fixed_point(0.2);
        assert!((x - 0.259_171).abs() < 1e-6);
        let fx = eval_map(ComplexValue::real(0.2), ComplexValue::real(x)).unwrap();
        assert!((fx.re - x).abs() < 1e-12);
        assert!(matches!(
            eval_map(ComplexValue::ONE, ComplexValue::real(710.0)),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn orbit_of_zero_is_the_tower() {
        let o = iterate_orbit(ComplexValue::ONE, ComplexValue::ZERO, 4, 1e8).unwrap();
        let mods: Vec<f64> = o.points.iter().map(|p| p.polar.modulus_f64()).collect();
        assert_eq!(mods[0], 0.0);
        assert_eq!(mods[1], 1.0);
        assert!((mods[2] - math::E).abs() < 1e-15);
        assert!((mods[3] - 15.154_262_241_479_262).abs() < 1e-12);
        assert!((mods[4] / 3.814_279_104_760_214e6 - 1.0).abs() < 1e-12);
        assert_eq!(o.escape_index, None);
    }

    #[test]
    fn orbit_through_minus_one() {
        let o = iterate_orbit(ComplexValue::ONE, ComplexValue::new(0.0, PI), 2, 1e8).unwrap();
        assert_eq!(o.points[1].native, Some(ComplexValue::real(-1.0)));
        let z2 = o.points[2].native.unwrap();
        assert!((z2.re - math::exp(-1.0)).abs() < 1e-16 && z2.im == 0.0);
    }

    #[test]
    fn attracting_orbit_converges() {
        let o = iterate_orbit(ComplexValue::real(0.2), ComplexValue::ZERO, 50, 1e8).unwrap();
        let last = o.points[50].native.unwrap();
        assert!((last.re - 0.259_171).abs() < 1e-6);
        assert_eq!(o.escape_index, None);
        assert_eq!(o.precision_lost_at, None);
    }

    #[test]
    fn derivative_log_examples() {
        assert_eq!(orbit_derivative_log(ComplexValue::ONE, ComplexValue::ZERO, 1).unwrap(), 0.0);
        assert!((orbit_derivative_log(ComplexValue::ONE, ComplexValue::ZERO, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(orbit_derivative_log(ComplexValue::ONE, ComplexValue::real(5.0), 3).is_err());
    }

    #[test]
    fn inverse_branch_examples() {
        let e = ComplexValue::real(math::E);
        let z = inverse_branch(ComplexValue::ONE, e, 0).unwrap();
        assert!((z.re - 1.0).abs() < 1e-15 && z.im == 0.0);
        let z = inverse_branch(ComplexValue::ONE, -e, 0).unwrap();
        assert!((z.re - 1.0).abs() < 1e-15 && z.im == PI);
        let z = inverse_branch(ComplexValue::ONE, -e, -1).unwrap();
        assert!((z.re - 1.0).abs() < 1e-15 && (z.im + PI).abs() < 1e-15);
        assert_eq!(inverse_branch(ComplexValue::ONE, ComplexValue::ZERO, 0), Err(Error::ZeroPreimage));
    }

    #[test]
    fn singular_orbit_examples() {
        let b = singular_orbit(ComplexValue::ONE, 3).unwrap();
        assert!((b[2].polar.real_part().to_f64().unwrap() - 15.154_262_241_479_262).abs() < 1e-12);
        let b = singular_orbit(ComplexValue::ONE, 5).unwrap();
        let lm5 = b[4].polar.log_modulus;
        assert!(lm5.is_native());
        assert!((lm5.to_f64().unwrap() / 3.814_279_104_760_214e6 - 1.0).abs() < 1e-12);
        // |β_5| itself is beyond the native range, two levels up
        assert_eq!(b[4].polar.modulus().level(), 2);
        assert!(b[4].native.is_none());
        let b = singular_orbit(ComplexValue::real(0.2), 50).unwrap();
        assert!((b[49].polar.modulus_f64() - 0.259_171).abs() < 1e-6);
        assert!(b.iter().all(|p| p.polar.log_modulus.is_native()));
    }

    #[test]
    fn supergrowth_examples() {
        let r = check_supergrowth(ComplexValue::ONE, 1.0, 15, 1).unwrap();
        assert!(r.holds && r.escaped);
        let native: Vec<f64> = r.ratios.iter().flatten().copied().collect();
        assert!(native.len() >= 2);
        assert!(native.iter().all(|q| (q - 1.0).abs() < 1e-12));
        assert_eq!(r.c_max, 1.0);

        let r = check_supergrowth(ComplexValue::real(0.2), 0.1, 20, 1).unwrap();
        assert!(!r.holds);
        assert_eq!(r.failure, Some(SupergrowthFailure::NoEscape));

        let r = check_supergrowth(ComplexValue::real(10.0), 1.0, 15, 1).unwrap();
        assert!(r.holds);
        let native: Vec<f64> = r.ratios.iter().flatten().copied().collect();
        assert!(!native.is_empty());
        assert!(native.iter().all(|q| (q - 10.0).abs() < 1e-12 * 10.0));
        assert!(r.tail_ratio.unwrap() < 1e-3);

        let r = check_supergrowth(ComplexValue::real(10.0), 11.0, 15, 1).unwrap();
        assert_eq!(r.failure, Some(SupergrowthFailure::Inequality));
        assert_eq!(r.first_failure_index, Some(1));
    }

    #[test]
    fn supergrowth_rejects_bad_parameters() {
        assert!(check_supergrowth(ComplexValue::ONE, 0.0, 10, 1).is_err());
        assert!(check_supergrowth(ComplexValue::ONE, 1.0, 3, 3).is_err());
        assert!(check_supergrowth(ComplexValue::ONE, 1.0, 3, 0).is_err());
    }
}
