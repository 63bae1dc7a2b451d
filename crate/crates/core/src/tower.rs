//! Iterated-exponential reals.
//!
//! A [`TowerReal`] stores `exp^level(mantissa)`. Level 0 is an ordinary
//! finite `f64`; higher levels only hold positive magnitudes beyond the
//! native range. The canonical form is unique, so the derived equality and
//! the lexicographic `(level, mantissa)` order agree with the real order.

use core::cmp::Ordering;
use core::fmt;

use crate::math::{self, LN_MAX};

/// Mantissa ceiling for lifted levels.
pub const MANTISSA_CAP: f64 = 710.0;

fn ln_cap() -> f64 {
    math::ln(MANTISSA_CAP)
}

#[derive(Clone, Copy, Debug)]
pub struct TowerReal {
    level: u32,
    mantissa: f64,
}

impl TowerReal {
    pub const ZERO: Self = Self { level: 0, mantissa: 0.0 };
    /// `ln 0`; only ever produced as the log-modulus of the origin.
    pub const NEG_INFINITY: Self = Self {
        level: 0,
        mantissa: f64::NEG_INFINITY,
    };

    /// A native value. Panics on NaN or `+inf`.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan() && x != f64::INFINITY, "TowerReal::from_f64({x})");
        Self {
            level: 0,
            mantissa: if x == 0.0 { 0.0 } else { x },
        }
    }

    /// `exp^level(mantissa)`, brought to canonical form. Returns `None` for
    /// a non-positive mantissa at a lifted level or a non-finite mantissa.
    pub fn from_parts(level: u32, mantissa: f64) -> Option<Self> {
        if mantissa.is_nan() || mantissa == f64::INFINITY {
            return None;
        }
        if level == 0 {
            return Some(Self::from_f64(mantissa));
        }
        if !mantissa.is_finite() {
            return None;
        }
        Some(Self::normalize(level, mantissa))
    }

    fn normalize(mut level: u32, mut m: f64) -> Self {
        let lc = ln_cap();
        loop {
            if level >= 1 && m >= MANTISSA_CAP {
                m = math::ln(m);
                level += 1;
            } else if level == 1 && math::exp(m).is_finite() {
                m = math::exp(m);
                level = 0;
            } else if level >= 2 && m < lc {
                m = math::exp(m);
                level -= 1;
            } else {
                break;
            }
        }
        Self { level, mantissa: m }
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    #[inline]
    pub fn is_native(&self) -> bool {
        self.level == 0
    }

    /// The native value, if there is one.
    pub fn to_f64(&self) -> Option<f64> {
        (self.level == 0).then_some(self.mantissa)
    }

    /// The native value, saturating to `+inf` above the native range.
    pub fn to_f64_saturating(&self) -> f64 {
        if self.level == 0 {
            self.mantissa
        } else {
            f64::INFINITY
        }
    }

    pub fn is_positive(&self) -> bool {
        self.level > 0 || self.mantissa > 0.0
    }

    pub fn exp(&self) -> Self {
        if self.level == 0 {
            let e = math::exp(self.mantissa);
            if e.is_finite() {
                return Self::from_f64(e);
            }
        }
        Self::normalize(self.level + 1, self.mantissa)
    }

    /// Natural logarithm; `None` for non-positive values.
    pub fn ln(&self) -> Option<Self> {
        match self.level {
            0 if self.mantissa > 0.0 => Some(Self::from_f64(math::ln(self.mantissa))),
            0 if self.mantissa == 0.0 => Some(Self::NEG_INFINITY),
            0 => None,
            1 => Some(Self::from_f64(self.mantissa)),
            l => Some(Self::normalize(l - 1, self.mantissa)),
        }
    }

    /// `self + x` for a native `x`. Above the native range a native addend
    /// only moves level-1 values; deeper levels absorb it.
    pub fn add_f64(&self, x: f64) -> Self {
        match self.level {
            0 => {
                let s = self.mantissa + x;
                if s.is_finite() || s == f64::NEG_INFINITY {
                    Self::from_f64(s)
                } else {
                    // both operands are large and positive
                    let (hi, lo) = if self.mantissa >= x {
                        (self.mantissa, x)
                    } else {
                        (x, self.mantissa)
                    };
                    Self::normalize(1, math::ln(hi) + math::ln_1p(lo / hi))
                }
            }
            1 => {
                if x > 0.0 {
                    let t = math::exp(math::ln(x) - self.mantissa);
                    Self::normalize(1, self.mantissa + math::ln_1p(t))
                } else if x < 0.0 {
                    let t = math::exp(math::ln(-x) - self.mantissa);
                    Self::normalize(1, self.mantissa + math::ln_1p(-t))
                } else {
                    *self
                }
            }
            _ => *self,
        }
    }

    /// Sum of two values, at least one of which may be lifted. Lifted
    /// operands must be positive (they always are).
    pub fn add(&self, other: &Self) -> Self {
        match (self.level, other.level) {
            (0, 0) => Self::from_f64(self.mantissa).add_f64(other.mantissa),
            (_, 0) => self.add_f64(other.mantissa),
            (0, _) => other.add_f64(self.mantissa),
            (1, 1) => {
                let (hi, lo) = if self.mantissa >= other.mantissa {
                    (self.mantissa, other.mantissa)
                } else {
                    (other.mantissa, self.mantissa)
                };
                Self::normalize(1, hi + math::ln_1p(math::exp(lo - hi)))
            }
            _ => {
                if self >= other {
                    *self
                } else {
                    *other
                }
            }
        }
    }

    /// `k * self` for `k > 0`.
    pub fn scale(&self, k: f64) -> Self {
        debug_assert!(k > 0.0);
        if self.level == 0 {
            let v = self.mantissa * k;
            if v.is_finite() {
                return Self::from_f64(v);
            }
        }
        match self.ln() {
            Some(l) => l.add_f64(math::ln(k)).exp(),
            None => *self,
        }
    }

    /// Threshold beyond which `exp` of a level-0 value leaves the native range.
    pub const fn native_exp_limit() -> f64 {
        LN_MAX
    }
}

impl PartialEq for TowerReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TowerReal {}

impl PartialOrd for TowerReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TowerReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then_with(|| self.mantissa.total_cmp(&other.mantissa))
    }
}

impl fmt::Display for TowerReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "exp^{}({})", self.level, self.mantissa)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_of_e() {
        // 0 -> 1 -> e -> e^e -> e^(e^e) -> beyond native
        let mut t = TowerReal::ZERO;
        let mut seen = [0.0; 5];
        for s in seen.iter_mut() {
            *s = t.to_f64().unwrap();
            t = t.exp();
        }
        assert_eq!(seen[1], 1.0);
        assert!((seen[2] - core::f64::consts::E).abs() < 1e-15);
        assert!((seen[3] - 15.154_262_241_479_262).abs() < 1e-12);
        assert!((seen[4] / 3_814_279.104_760_214 - 1.0).abs() < 1e-12);
        // exp(3.8e6) is lifted directly to level 2
        assert_eq!(t.level(), 2);
        assert!((t.mantissa() - seen[4].ln()).abs() < 1e-12);
        let next = t.exp();
        assert_eq!(next.level(), 3);
        assert_eq!(next.mantissa(), t.mantissa());
    }

    #[test]
    fn ln_inverts_exp() {
        for x in [-5.0, 0.0, 1.0, 700.0, 709.9, 5000.0, 1e300] {
            let t = TowerReal::from_f64(x);
            let back = t.exp().ln().unwrap();
            assert!((back.to_f64().unwrap() - x).abs() <= 1e-12 * x.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn canonical_forms() {
        let a = TowerReal::from_parts(2, 6.0).unwrap();
        assert_eq!(a, TowerReal::from_f64(6.0_f64.exp().exp()));
        assert!(TowerReal::from_parts(1, 1000.0).unwrap().level() == 2);
        assert!(TowerReal::from_parts(1, -1.0).unwrap().is_native());
    }

    #[test]
    fn addition_above_native_range() {
        let big = TowerReal::from_f64(709.9).exp();
        assert_eq!(big.level(), 1);
        let doubled = big.add(&big);
        assert_eq!(doubled.level(), 2);
        assert!((doubled.ln().unwrap().to_f64().unwrap() - (709.9 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(TowerReal::from_f64(800.0).exp().level(), 2);
        assert_eq!(big.add_f64(1.0), big);
        let huge = TowerReal::from_f64(1e6).exp();
        assert_eq!(huge.add_f64(-1e300), huge);
    }

    #[test]
    fn scale_in_log_space() {
        let big = TowerReal::from_f64(709.9).exp();
        let s = big.scale(0.25);
        assert!((s.to_f64().unwrap().ln() - (709.9 - 4f64.ln())).abs() < 1e-12);
        let huge = TowerReal::from_f64(1e5).exp();
        let h = huge.scale(0.25);
        assert_eq!(h.level(), 2);
        assert!((h.ln().unwrap().to_f64().unwrap() - (1e5 - 4f64.ln())).abs() < 1e-9);
        assert_eq!(TowerReal::from_f64(3.0).scale(2.0), TowerReal::from_f64(6.0));
    }
}
