//! Strip partition, itineraries and external addresses.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::complex::ComplexValue;
use crate::dynamics::{checked_lambda, iterate_orbit};
use crate::error::{invalid, Error, Result};
use crate::logpolar::LambdaParts;
use crate::math::{self, PI, TAU};

/// Index `k` of the strip `P_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StripIndex(pub i64);

/// Beyond this `|Im z|` strip edges are no longer resolved by an `f64`.
pub const STRIP_IMAG_LIMIT: f64 = 1e15;

/// The `k` with `(2k−1)π − Arg λ < Im z ≤ (2k+1)π − Arg λ`.
pub fn strip_index(lambda: ComplexValue, z: ComplexValue) -> StripIndex {
    strip_of_imag(&LambdaParts::new(lambda), z.im)
}

pub(crate) fn strip_of_imag(lam: &LambdaParts, im: f64) -> StripIndex {
    let mut k = math::ceil((im + lam.arg - PI) / TAU) as i64;
    if !(math::abs(im) < STRIP_IMAG_LIMIT) {
        return StripIndex(k);
    }
    // the quotient can land one off near an edge
    loop {
        let upper = (TAU * k as f64 + PI) - lam.arg;
        let lower = (TAU * (k - 1) as f64 + PI) - lam.arg;
        if im > upper {
            k += 1;
        } else if im <= lower {
            k -= 1;
        } else {
            return StripIndex(k);
        }
    }
}

/// Strip indices of `z, f(z), …, f^{N−1}(z)`.
pub fn itinerary(lambda: ComplexValue, z: ComplexValue, n: usize) -> Result<ExternalAddress> {
    let lam = checked_lambda(lambda)?;
    if n == 0 {
        return Ok(ExternalAddress::finite(Vec::new()));
    }
    let orbit = iterate_orbit(lambda, z, n - 1, f64::MAX)?;
    let mut entries = Vec::with_capacity(n);
    let mut prev_im = 0.0;
    for (step, p) in orbit.points.iter().enumerate() {
        let im = match p.imag() {
            Some(im) if p.polar.arg_trusted && math::abs(im) < STRIP_IMAG_LIMIT => im,
            _ => return Err(Error::UntrustedArgument { step }),
        };
        let k = strip_of_imag(&lam, im).0;
        // an argument rounded at |Im f^{n−1}| scale, magnified by |f^n|
        let exact = prev_im == 0.0 && (lam.arg == 0.0 || lam.arg == PI);
        if step > 0 && !exact {
            let slack = p.polar.modulus_f64() * f64::EPSILON * (4.0 + math::abs(prev_im));
            let upper = (TAU * k as f64 + PI) - lam.arg;
            let edge = (upper - im).min(im - (upper - TAU));
            if !(slack < edge) {
                return Err(Error::UntrustedArgument { step });
            }
        }
        prev_im = im;
        entries.push(k);
    }
    Ok(ExternalAddress::finite(entries))
}

/// How entries continue past the stored prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// The address ends with the prefix.
    Finite,
    /// The last prefix entry repeats forever.
    Constant,
    /// The whole prefix repeats forever.
    Periodic,
    /// Framed blocks `T, r_0 … r_{n_1−1}, T, r_0 … r_{n_2−1}, T, …` with
    /// block lengths `n_j = first + (j−1)·step`.
    Framed {
        r: Box<ExternalAddress>,
        first: usize,
        step: usize,
    },
}

/// A (possibly infinite) sequence of strip indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalAddress {
    entries: Vec<i64>,
    tail: Tail,
    /// Number of leading generated entries dropped by shifts (framed tails only).
    start: usize,
    bound: i64,
}

impl ExternalAddress {
    pub fn finite(entries: Vec<i64>) -> Self {
        let bound = abs_bound(&entries);
        Self {
            entries,
            tail: Tail::Finite,
            start: 0,
            bound,
        }
    }

    /// `v v v …`.
    pub fn constant(v: i64) -> Self {
        Self::with_constant_tail(alloc::vec![v]).expect("nonempty")
    }

    /// `prefix` followed by its last entry forever.
    pub fn with_constant_tail(prefix: Vec<i64>) -> Result<Self> {
        if prefix.is_empty() {
            return Err(invalid("constant tail needs a nonempty prefix"));
        }
        let bound = abs_bound(&prefix);
        Ok(Self {
            entries: prefix,
            tail: Tail::Constant,
            start: 0,
            bound,
        })
    }

    /// `block block block …`.
    pub fn periodic(block: Vec<i64>) -> Result<Self> {
        if block.is_empty() {
            return Err(invalid("periodic address needs a nonempty block"));
        }
        let bound = abs_bound(&block);
        Ok(Self {
            entries: block,
            tail: Tail::Periodic,
            start: 0,
            bound,
        })
    }

    /// Infinite framed address over `r` with block lengths growing by `step`.
    pub fn framed(r: ExternalAddress, first: usize, step: usize) -> Result<Self> {
        if first == 0 {
            return Err(invalid("block lengths must be at least 1"));
        }
        if !r.is_infinite() {
            return Err(invalid("generated framed addresses need an infinite r"));
        }
        let bound = r.bound.saturating_add(2);
        Ok(Self {
            entries: Vec::new(),
            tail: Tail::Framed {
                r: Box::new(r),
                first,
                step,
            },
            start: 0,
            bound,
        })
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// `B` with `|s_n| ≤ B` for every entry.
    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn is_infinite(&self) -> bool {
        self.tail != Tail::Finite
    }

    /// Number of entries, `None` for infinite addresses.
    pub fn len(&self) -> Option<usize> {
        (!self.is_infinite()).then_some(self.entries.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Entry `s_n`, `None` past the end of a finite address.
    pub fn get(&self, n: usize) -> Option<i64> {
        match &self.tail {
            Tail::Finite => self.entries.get(n).copied(),
            Tail::Constant => Some(
                *self
                    .entries
                    .get(n)
                    .unwrap_or_else(|| self.entries.last().expect("nonempty")),
            ),
            Tail::Periodic => Some(self.entries[n % self.entries.len()]),
            Tail::Framed { r, first, step } => Some(framed_entry(r, *first, *step, n + self.start)),
        }
    }

    pub fn first(&self) -> Option<i64> {
        self.get(0)
    }

    /// `s_0, …, s_{n−1}`.
    pub fn prefix(&self, n: usize) -> Result<Vec<i64>> {
        (0..n)
            .map(|i| self.get(i).ok_or(Error::MissingEntry { index: i }))
            .collect()
    }

    /// `σ(s) = (s_1, s_2, …)`.
    pub fn shift(&self) -> Result<Self> {
        self.shift_by(1)
    }

    /// `σ^m(s)`.
    pub fn shift_by(&self, m: usize) -> Result<Self> {
        let mut out = self.clone();
        match out.tail {
            Tail::Finite => {
                if m > out.entries.len() || (m > 0 && out.entries.is_empty()) {
                    return Err(Error::EmptyAddress);
                }
                out.entries.drain(..m);
            }
            Tail::Constant => {
                let drop = m.min(out.entries.len() - 1);
                out.entries.drain(..drop);
            }
            Tail::Periodic => {
                let len = out.entries.len();
                out.entries.rotate_left(m % len);
            }
            Tail::Framed { .. } => out.start += m,
        }
        if matches!(out.tail, Tail::Finite | Tail::Constant) {
            out.bound = abs_bound(&out.entries);
        }
        Ok(out)
    }
}

fn abs_bound(entries: &[i64]) -> i64 {
    entries.iter().map(|v| v.saturating_abs()).max().unwrap_or(0)
}

fn framed_entry(r: &ExternalAddress, first: usize, step: usize, n: usize) -> i64 {
    if n == 0 {
        return r.bound.saturating_add(2);
    }
    let mut pos = 1;
    let mut consumed = 0usize;
    let mut max_seen = i64::MIN;
    let mut len = first;
    loop {
        if n < pos + len {
            return r.get(n - pos).expect("infinite r");
        }
        if len > consumed {
            for k in consumed..len {
                max_seen = max_seen.max(r.get(k).expect("infinite r"));
            }
            consumed = len;
        }
        if n == pos + len {
            return max_seen.saturating_add(2);
        }
        pos += len + 1;
        len += step;
    }
}

/// `T_1, r_0 … r_{n_1−1}, T, r_0 … r_{n_2−1}, T, …` truncated after the last
/// block. Each `T` is `2 + max` of the `r` entries consumed so far; the
/// leading `T_1`, before anything is consumed, is `2 + bound(r)`.
pub fn framed_address(r: &ExternalAddress, blocks: &[usize]) -> Result<ExternalAddress> {
    if blocks.is_empty() {
        return Err(invalid("blocks must be nonempty"));
    }
    if blocks.contains(&0) {
        return Err(invalid("block lengths must be at least 1"));
    }
    let longest = *blocks.iter().max().expect("nonempty");
    let used = r.prefix(longest)?;
    let mut out = alloc::vec![abs_bound(&used).max(r.bound).saturating_add(2)];
    let mut consumed = 0;
    let mut max_seen = i64::MIN;
    for &b in blocks {
        out.extend_from_slice(&used[..b]);
        if b > consumed {
            max_seen = used[consumed..b].iter().copied().fold(max_seen, i64::max);
            consumed = b;
        }
        out.push(max_seen.saturating_add(2));
    }
    Ok(ExternalAddress::finite(out))
}

impl fmt::Display for ExternalAddress {
    /// Literal form: `1,0,0`, `0...const`, `2,0,0,0...period`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[i64]| -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        };
        match &self.tail {
            Tail::Finite => join(f, &self.entries),
            Tail::Constant => {
                join(f, &self.entries)?;
                f.write_str("...const")
            }
            Tail::Periodic => {
                join(f, &self.entries)?;
                f.write_str("...period")
            }
            Tail::Framed { r, first, step } => {
                write!(f, "framed({r};{first}+{step}j)")?;
                if self.start > 0 {
                    write!(f, ">>{}", self.start)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ExternalAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, tail) = if let Some(b) = strip_suffix_any(s, &["...const", "…const"]) {
            (b, Tail::Constant)
        } else if let Some(b) = strip_suffix_any(s, &["...period", "…period"]) {
            (b, Tail::Periodic)
        } else {
            (s, Tail::Finite)
        };
        let entries = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| invalid_owned(alloc::format!("bad address entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match tail {
            Tail::Constant => Self::with_constant_tail(entries),
            Tail::Periodic => Self::periodic(entries),
            _ => Ok(Self::finite(entries)),
        }
    }
}

fn strip_suffix_any<'a>(s: &'a str, suffixes: &[&str]) -> Option<&'a str> {
    suffixes.iter().find_map(|x| s.strip_suffix(x))
}

fn invalid_owned(msg: String) -> Error {
    Error::Validation(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const ONE: ComplexValue = ComplexValue::ONE;

    #[test]
    fn strip_examples() {
        assert_eq!(strip_index(ONE, ComplexValue::real(3.0)), StripIndex(0));
        assert_eq!(strip_index(ONE, ComplexValue::new(0.0, PI)), StripIndex(0));
        assert_eq!(strip_index(ONE, ComplexValue::new(0.0, -PI)), StripIndex(-1));
        assert_eq!(strip_index(ONE, ComplexValue::new(0.0, 4.0)), StripIndex(1));
        assert_eq!(strip_index(ComplexValue::I, ComplexValue::new(0.0, PI / 2.0)), StripIndex(0));
        assert_eq!(strip_index(ComplexValue::I, ComplexValue::new(0.0, -4.8)), StripIndex(-1));
    }

    #[test]
    fn itinerary_examples() {
        let s = itinerary(ONE, ComplexValue::real(0.5), 5).unwrap();
        assert_eq!(s.prefix(5).unwrap(), vec![0; 5]);
        let s = itinerary(ONE, ComplexValue::new(1.0, PI), 3).unwrap();
        assert_eq!(s.prefix(3).unwrap(), vec![0; 3]);
        let s = itinerary(ONE, ComplexValue::new(0.0, 4.0), 1).unwrap();
        assert_eq!(s.prefix(1).unwrap(), vec![1]);
    }

    #[test]
    fn itinerary_stops_when_argument_dies() {
        let err = itinerary(ONE, ComplexValue::new(5.0, 0.5), 8).unwrap_err();
        assert!(matches!(err, Error::UntrustedArgument { .. }));
    }

    #[test]
    fn shift_examples() {
        let s = ExternalAddress::finite(vec![2, 0, 0, 2]);
        assert_eq!(s.shift().unwrap(), ExternalAddress::finite(vec![0, 0, 2]));
        let z = ExternalAddress::constant(0);
        assert_eq!(z.shift().unwrap(), z);
        let p = ExternalAddress::periodic(vec![1, 0]).unwrap();
        assert_eq!(p.shift().unwrap(), ExternalAddress::periodic(vec![0, 1]).unwrap());
        let one = ExternalAddress::finite(vec![7]);
        assert!(one.shift().unwrap().is_empty());
        assert_eq!(one.shift().unwrap().shift(), Err(Error::EmptyAddress));
        let c = ExternalAddress::with_constant_tail(vec![1, 0]).unwrap();
        assert_eq!(c.shift().unwrap(), ExternalAddress::constant(0));
    }

    #[test]
    fn framed_examples() {
        let zero = ExternalAddress::constant(0);
        let s = framed_address(&zero, &[3, 2]).unwrap();
        assert_eq!(s.prefix(8).unwrap(), vec![2, 0, 0, 0, 2, 0, 0, 2]);
        let three = ExternalAddress::constant(3);
        assert_eq!(framed_address(&three, &[1]).unwrap().prefix(3).unwrap(), vec![5, 3, 5]);
        assert_eq!(framed_address(&zero, &[1]).unwrap().prefix(3).unwrap(), vec![2, 0, 2]);
        assert!(framed_address(&zero, &[]).is_err());
        assert!(framed_address(&zero, &[0]).is_err());
        let short = ExternalAddress::finite(vec![1]);
        assert!(framed_address(&short, &[2]).is_err());
    }

    #[test]
    fn framed_generator_matches_truncations() {
        let r = ExternalAddress::periodic(vec![0, 1, 3]).unwrap();
        let g = ExternalAddress::framed(r.clone(), 1, 1).unwrap();
        let t = framed_address(&r, &[1, 2, 3, 4]).unwrap();
        let n = t.len().unwrap();
        assert_eq!(g.prefix(n).unwrap(), t.prefix(n).unwrap());
        assert_eq!(g.bound(), 5);
        assert_eq!(g.shift_by(4).unwrap().prefix(3).unwrap(), g.prefix(7).unwrap()[4..]);
    }

    #[test]
    fn literals_round_trip() {
        for lit in ["0...const", "2,0,0,0...period", "1,-2,3"] {
            let a: ExternalAddress = lit.parse().unwrap();
            assert_eq!(alloc::format!("{a}"), lit);
        }
        let a: ExternalAddress = "1,0...const".parse().unwrap();
        assert_eq!(a.prefix(4).unwrap(), vec![1, 0, 0, 0]);
        assert!("1,x".parse::<ExternalAddress>().is_err());
        assert!("...const".parse::<ExternalAddress>().is_err());
    }
}
