//! Overflow-safe orbit points.

use crate::complex::ComplexValue;
use crate::math::{self, PI, TAU};
use crate::tower::TowerReal;

/// Above this modulus an argument kept mod 2π no longer determines
/// `Im z mod 2π` to better than a turn.
pub const ARG_TRUST_LIMIT: f64 = TAU / f64::EPSILON;

/// A point stored as `(log|z|, arg z)`.
///
/// `argument` lies in `(-π, π]`. An argument of exactly `0` or `π` marks a
/// point known to lie on the real axis, which keeps real orbits exact at any
/// magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPolarComplex {
    pub log_modulus: TowerReal,
    pub argument: f64,
    /// False once the argument has lost all significance.
    pub arg_trusted: bool,
}

/// A signed real whose magnitude may be a tower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedTower {
    pub negative: bool,
    pub magnitude: TowerReal,
}

impl SignedTower {
    pub fn to_f64(&self) -> Option<f64> {
        self.magnitude
            .to_f64()
            .map(|m| if self.negative { -m } else { m })
    }
}

impl LogPolarComplex {
    pub const ZERO: Self = Self {
        log_modulus: TowerReal::NEG_INFINITY,
        argument: 0.0,
        arg_trusted: true,
    };

    pub fn from_complex(z: ComplexValue) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self {
            log_modulus: TowerReal::from_f64(math::ln(z.norm())),
            argument: if z.im == 0.0 && z.re < 0.0 { PI } else { z.arg() },
            arg_trusted: true,
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.log_modulus == TowerReal::NEG_INFINITY
    }

    /// Exactly on the real axis.
    #[inline]
    pub fn on_axis(&self) -> bool {
        self.argument == 0.0 || self.argument == PI
    }

    pub fn modulus(&self) -> TowerReal {
        self.log_modulus.exp()
    }

    /// Native modulus, `+inf` when above range.
    pub fn modulus_f64(&self) -> f64 {
        match self.log_modulus.to_f64() {
            Some(l) => math::exp(l),
            None => f64::INFINITY,
        }
    }

    /// Cartesian form, when both components are native.
    pub fn to_complex(&self) -> Option<ComplexValue> {
        let l = self.log_modulus.to_f64()?;
        let r = math::exp(l);
        if !r.is_finite() {
            return None;
        }
        Some(if self.argument == 0.0 {
            ComplexValue::real(r)
        } else if self.argument == PI {
            ComplexValue::real(-r)
        } else {
            ComplexValue::from_polar(r, self.argument)
        })
    }

    fn component(&self, factor: f64) -> SignedTower {
        if factor == 0.0 || self.is_zero() {
            return SignedTower {
                negative: false,
                magnitude: TowerReal::ZERO,
            };
        }
        let magnitude = self
            .log_modulus
            .add_f64(math::ln(math::abs(factor)))
            .exp();
        SignedTower {
            negative: factor < 0.0,
            magnitude,
        }
    }

    /// `Re z = |z| cos(arg z)`.
    pub fn real_part(&self) -> SignedTower {
        let c = if self.argument == 0.0 {
            1.0
        } else if self.argument == PI {
            -1.0
        } else {
            math::cos(self.argument)
        };
        self.component(c)
    }

    /// `Im z = |z| sin(arg z)`; exactly zero on the axis.
    pub fn imag_part(&self) -> SignedTower {
        let s = if self.on_axis() {
            0.0
        } else {
            math::sin(self.argument)
        };
        self.component(s)
    }

    /// One step of `z ↦ λe^z` by the exact recursion
    /// `log|f(z)| = log|λ| + Re z`, `arg f(z) = Im z + Arg λ (mod 2π)`.
    ///
    /// `native` is the cartesian form of `self` when known; it is used for
    /// the components so that no precision is lost converting back and
    /// forth. A hugely negative real part underflows to the origin.
    pub fn step(&self, native: Option<ComplexValue>, lambda: &LambdaParts) -> Self {
        let (re, im) = match native {
            Some(z) => (
                SignedTower {
                    negative: z.re < 0.0,
                    magnitude: TowerReal::from_f64(math::abs(z.re)),
                },
                Some(z.im),
            ),
            None => {
                let im = self.imag_part();
                (self.real_part(), im.to_f64())
            }
        };
        let log_modulus = if re.negative {
            match re.magnitude.to_f64() {
                Some(m) => TowerReal::from_f64(lambda.ln_abs - m),
                None => TowerReal::NEG_INFINITY,
            }
        } else {
            re.magnitude.add_f64(lambda.ln_abs)
        };
        let small = native.is_some_and(|z| z.norm() <= ARG_TRUST_LIMIT)
            || self.modulus_f64() <= ARG_TRUST_LIMIT;
        let arg_trusted = self.arg_trusted && (self.on_axis() || small);
        let argument = match im {
            Some(0.0) => math::wrap_angle(lambda.arg),
            Some(y) => math::wrap_angle(y + lambda.arg),
            None => 0.0,
        };
        if log_modulus == TowerReal::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            log_modulus,
            argument,
            arg_trusted: arg_trusted && (im.is_some()),
        }
    }
}

/// Precomputed `log|λ|`, `Arg λ` for the recursion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaParts {
    pub value: ComplexValue,
    pub ln_abs: f64,
    pub arg: f64,
}

impl LambdaParts {
    pub fn new(lambda: ComplexValue) -> Self {
        let arg = if lambda.im == 0.0 && lambda.re < 0.0 {
            PI
        } else {
            lambda.arg()
        };
        Self {
            value: lambda,
            ln_abs: math::ln(lambda.norm()),
            arg,
        }
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_orbit_stays_on_axis() {
        let lam = LambdaParts::new(ComplexValue::ONE);
        let mut p = LogPolarComplex::from_complex(ComplexValue::new(0.0, PI));
        let mut native = p.to_complex();
        native = native.map(|_| ComplexValue::new(0.0, PI));
        p = p.step(native, &lam);
        assert_eq!(p.to_complex(), Some(ComplexValue::real(-1.0)));
        for _ in 0..8 {
            let n = p.to_complex();
            p = p.step(n, &lam);
            assert!(p.on_axis());
            assert!(p.arg_trusted);
        }
    }

    #[test]
    fn huge_negative_real_part_underflows() {
        let lam = LambdaParts::new(ComplexValue::ONE);
        let p = LogPolarComplex {
            log_modulus: TowerReal::from_f64(1e6),
            argument: PI,
            arg_trusted: true,
        };
        let q = p.step(None, &lam);
        assert!(q.is_zero());
    }
}
