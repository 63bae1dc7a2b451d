//! Thin sets `W`, finite-depth membership in `Λ_W`, and trajectory tests.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::complex::ComplexValue;
use crate::dynamics::{checked_lambda, OrbitPoint};
use crate::error::{invalid, Result};
use crate::logpolar::LogPolarComplex;
use crate::math::{self, PI};

/// Below this distance from the axis the sign of `Im z` of a point outside
/// the native range is not resolved.
pub const AXIS_UNDECIDABLE: f64 = 1e-12;

pub type Predicate = Arc<dyn Fn(ComplexValue) -> bool + Send + Sync>;
pub type WidthFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Upper bound `w(R)` on the width of the vertical slices at `Re z = ±R`.
#[derive(Clone)]
pub enum WidthProfile {
    Constant(f64),
    /// `coef · R^exponent`.
    Power { coef: f64, exponent: f64 },
    Custom(WidthFn),
}

impl WidthProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant(w) => *w,
            Self::Power { coef, exponent } => coef * math::powf(r, *exponent),
            Self::Custom(f) => f(r),
        }
    }
}

#[derive(Clone)]
pub enum Shape {
    /// `lo ≤ Im z ≤ hi`.
    Strip { lo: f64, hi: f64 },
    /// `|Im z − center| ≤ w(|Re z|)/2` inside the cone.
    Band { center: f64 },
    Custom(Predicate),
}

/// A closed set given by a membership test, a cone constant `K` and a
/// width profile.
#[derive(Clone)]
pub struct ThinSetSpec {
    pub shape: Shape,
    pub cone_constant: f64,
    pub width: WidthProfile,
    pub descriptor: String,
}

impl fmt::Debug for ThinSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThinSetSpec")
            .field("descriptor", &self.descriptor)
            .field("cone_constant", &self.cone_constant)
            .finish_non_exhaustive()
    }
}

/// Outcome of testing one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    In,
    Out,
    /// Numerically undecidable.
    Undecided,
}

impl ThinSetSpec {
    /// `{a ≤ Im z ≤ b}`.
    pub fn strip(a: f64, b: f64) -> Result<Self> {
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("strip needs finite a <= b"));
        }
        Ok(Self {
            shape: Shape::Strip { lo: a, hi: b },
            cone_constant: math::abs(a).max(math::abs(b)) + 2.0,
            width: WidthProfile::Constant(b - a),
            descriptor: alloc::format!("strip:{a},{b}"),
        })
    }

    /// `{|Im z| ≤ p}`.
    pub fn symmetric_strip(p: f64) -> Result<Self> {
        if !(p >= 0.0) {
            return Err(invalid("half width must be non-negative"));
        }
        let mut s = Self::strip(-p, p)?;
        s.descriptor = alloc::format!("symstrip:{p}");
        Ok(s)
    }

    /// `{|Im z − center| ≤ w(|Re z|)/2, |z| < K(|Re z|+1)}`.
    pub fn cone_band(center: f64, width: WidthProfile, cone_constant: f64) -> Result<Self> {
        if !(cone_constant > 0.0) {
            return Err(invalid("cone constant must be positive"));
        }
        Ok(Self {
            shape: Shape::Band { center },
            cone_constant,
            width,
            descriptor: alloc::format!("band:{center}"),
        })
    }

    pub fn custom(
        membership: Predicate,
        cone_constant: f64,
        width: WidthProfile,
        descriptor: impl Into<String>,
    ) -> Self {
        Self {
            shape: Shape::Custom(membership),
            cone_constant,
            width,
            descriptor: descriptor.into(),
        }
    }

    pub fn contains(&self, z: ComplexValue) -> bool {
        match &self.shape {
            Shape::Strip { lo, hi } => *lo <= z.im && z.im <= *hi,
            Shape::Band { center } => {
                let r = math::abs(z.re);
                math::abs(z.im - center) <= self.width.eval(r) / 2.0
                    && z.norm() < self.cone_constant * (r + 1.0)
            }
            Shape::Custom(p) => p(z),
        }
    }

    /// Membership of an orbit point, which may lie outside the native range.
    pub fn contains_point(&self, p: &OrbitPoint) -> Membership {
        if let Some(z) = p.native {
            return if self.contains(z) { Membership::In } else { Membership::Out };
        }
        self.contains_far(&p.polar)
    }

    fn contains_far(&self, p: &LogPolarComplex) -> Membership {
        let (lo, hi) = match &self.shape {
            Shape::Strip { lo, hi } => (*lo, *hi),
            Shape::Band { center } => match self.width {
                WidthProfile::Constant(w) => (center - w / 2.0, center + w / 2.0),
                _ => return Membership::Undecided,
            },
            Shape::Custom(_) => return Membership::Undecided,
        };
        let im = if p.on_axis() {
            0.0
        } else {
            let theta = p.argument;
            if math::abs(theta) < AXIS_UNDECIDABLE || PI - math::abs(theta) < AXIS_UNDECIDABLE {
                return Membership::Undecided;
            }
            match p.imag_part().to_f64() {
                Some(y) => y,
                None => return Membership::Out,
            }
        };
        if lo <= im && im <= hi {
            Membership::In
        } else {
            Membership::Out
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThinReport {
    pub cone_ok: bool,
    pub width_ok: bool,
    /// Slope of `log₊ w(R)` against `log R`; `None` with fewer than two
    /// nonempty slices.
    pub thinness_exponent: Option<f64>,
    /// `(R, measured slice diameter)`; `None` marks an empty slice.
    pub widths: Vec<(f64, Option<f64>)>,
    pub worst_cone_ratio: f64,
}

impl ThinReport {
    pub fn empty_slices(&self) -> impl Iterator<Item = f64> + '_ {
        self.widths.iter().filter(|w| w.1.is_none()).map(|w| w.0)
    }
}

/// Samples the slices `Re z = ±R` and the circles `|z| = R`.
pub fn thin_check(spec: &ThinSetSpec, r_values: &[f64], samples_per_slice: usize) -> Result<ThinReport> {
    if r_values.is_empty() || r_values.iter().any(|r| !(*r >= 1.0)) {
        return Err(invalid("R values must be >= 1"));
    }
    if r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("R values must be increasing"));
    }
    if samples_per_slice < 2 {
        return Err(invalid("need at least two samples per slice"));
    }
    let k = spec.cone_constant;
    let mut worst: f64 = 0.0;
    let mut widths = Vec::with_capacity(r_values.len());
    let mut width_ok = true;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in r_values {
        let h = 2.0 * k * (r + 1.0);
        let mut measured: Option<f64> = None;
        for re in [r, -r] {
            let pts: Vec<ComplexValue> = (0..samples_per_slice)
                .map(|i| ComplexValue::new(re, -h + 2.0 * h * i as f64 / (samples_per_slice - 1) as f64))
                .collect();
            for z in pts.iter().filter(|z| spec.contains(**z)) {
                worst = worst.max(z.norm() / (math::abs(z.re) + 1.0));
            }
            if let Some(d) = slice_diameter(spec, &pts) {
                measured = Some(measured.map_or(d, |m: f64| m.max(d)));
            }
        }
        for i in 0..samples_per_slice {
            let theta = -PI + 2.0 * PI * i as f64 / samples_per_slice as f64;
            let z = ComplexValue::from_polar(r, theta);
            if spec.contains(z) {
                worst = worst.max(z.norm() / (math::abs(z.re) + 1.0));
            }
        }
        if let Some(d) = measured {
            if d > spec.width.eval(r) * (1.0 + 1e-9) {
                width_ok = false;
            }
            xs.push(math::ln(r));
            ys.push(math::ln(d).max(0.0));
        }
        widths.push((r, measured));
    }
    let thinness_exponent = if xs.len() >= 2 {
        math::least_squares(&xs, &ys).map(|fit| fit.0)
    } else {
        None
    };
    Ok(ThinReport {
        cone_ok: worst < k,
        width_ok,
        thinness_exponent,
        widths,
        worst_cone_ratio: worst,
    })
}

/// Extent in `Im` of the members among `pts` (a vertical slice), with the
/// outermost edges refined by bisection.
fn slice_diameter(spec: &ThinSetSpec, pts: &[ComplexValue]) -> Option<f64> {
    let first = pts.iter().position(|z| spec.contains(*z))?;
    let last = pts.iter().rposition(|z| spec.contains(*z))?;
    let refine = |inside: ComplexValue, outside: ComplexValue| {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..60 {
            let m = ComplexValue::new(a.re, (a.im + b.im) / 2.0);
            if spec.contains(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a.im
    };
    let bottom = if first > 0 { refine(pts[first], pts[first - 1]) } else { pts[first].im };
    let top = if last + 1 < pts.len() { refine(pts[last], pts[last + 1]) } else { pts[last].im };
    Some(top - bottom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MembershipStatus {
    /// `z, f(z), …, f^{depth−1}(z)` all lie in `W`.
    Member { depth: usize },
    /// `f^index(z)` is the first iterate outside `W`.
    Exit { index: usize },
}

/// Optimistic reading of a finite-depth membership test: undecidable steps
/// count as inside. `undecided_at` records the first such step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipResult {
    pub status: MembershipStatus,
    pub exit_point: Option<ComplexValue>,
    pub undecided_at: Option<usize>,
    /// The argument lost all precision at this step while still in `W`.
    pub precision_caveat: Option<usize>,
}

impl MembershipResult {
    pub fn is_member(&self) -> bool {
        matches!(self.status, MembershipStatus::Member { .. })
    }

    /// Field encoding: exit index, or `n + 1` for a member to depth `n`.
    pub fn optimistic_depth(&self, n: usize) -> u32 {
        match self.status {
            MembershipStatus::Member { .. } => (n + 1) as u32,
            MembershipStatus::Exit { index } => index as u32,
        }
    }

    /// Field encoding that counts undecidable steps as exits.
    pub fn conservative_depth(&self, n: usize) -> u32 {
        let opt = self.optimistic_depth(n);
        match self.undecided_at {
            Some(j) => opt.min(j as u32),
            None => opt,
        }
    }
}

/// Tests `f^n(z) ∈ W` for `n < depth`.
pub fn lambda_membership(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    z: ComplexValue,
    depth: usize,
) -> Result<MembershipResult> {
    let lam = checked_lambda(lambda)?;
    if depth < 1 {
        return Err(invalid("depth must be at least 1"));
    }
    if !z.is_finite() {
        return Err(invalid("z must be finite"));
    }
    let mut p = OrbitPoint::from_complex(z);
    let mut undecided_at = None;
    for n in 0..depth {
        if n > 0 {
            p = p.step(&lam);
        }
        if !p.polar.arg_trusted {
            return Ok(MembershipResult {
                status: MembershipStatus::Member { depth },
                exit_point: None,
                undecided_at: undecided_at.or(Some(n)),
                precision_caveat: Some(n),
            });
        }
        match spec.contains_point(&p) {
            Membership::In => {}
            Membership::Undecided => {
                undecided_at.get_or_insert(n);
            }
            Membership::Out => {
                return Ok(MembershipResult {
                    status: MembershipStatus::Exit { index: n },
                    exit_point: p.native,
                    undecided_at,
                    precision_caveat: None,
                })
            }
        }
    }
    Ok(MembershipResult {
        status: MembershipStatus::Member { depth },
        exit_point: None,
        undecided_at,
        precision_caveat: None,
    })
}

/// Axis-aligned window `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(invalid("window must be nondegenerate"));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// Grid node `(ix, iy)` of an `nx × ny` sampling; node `(0, 0)` is the
    /// lower-left corner and the last node is exactly the upper-right one.
    pub fn node(&self, ix: usize, iy: usize, nx: usize, ny: usize) -> ComplexValue {
        ComplexValue::new(lerp(self.x0, self.x1, ix, nx), lerp(self.y0, self.y1, iy, ny))
    }
}

fn lerp(a: f64, b: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        b
    } else {
        a + (b - a) * (i as f64 / (n - 1) as f64)
    }
}

/// Exit depths on a grid, rows bottom-up (`index = iy·nx + ix`).
#[derive(Clone, Debug, PartialEq)]
pub struct ExitField {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub depth: usize,
    /// Undecidable steps count as inside.
    pub optimistic: Vec<u32>,
    /// Undecidable steps count as exits.
    pub conservative: Vec<u32>,
}

impl ExitField {
    pub fn survivor_value(&self) -> u32 {
        (self.depth + 1) as u32
    }

    pub fn point(&self, ix: usize, iy: usize) -> ComplexValue {
        self.window.node(ix, iy, self.nx, self.ny)
    }

    /// Grid nodes that survive to full depth (conservative reading).
    pub fn survivors(&self) -> Vec<ComplexValue> {
        let s = self.survivor_value();
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.conservative[iy * self.nx + ix] == s {
                    out.push(self.point(ix, iy));
                }
            }
        }
        out
    }
}

/// Rejects grids below 2×2 and depths outside `1..u32::MAX`.
pub fn check_grid(nx: usize, ny: usize, depth: usize) -> Result<()> {
    if nx < 2 || ny < 2 {
        return Err(invalid("resolution must be at least 2x2"));
    }
    if depth < 1 || depth >= u32::MAX as usize {
        return Err(invalid("depth out of range"));
    }
    Ok(())
}

/// Exit depth of one grid node, `(optimistic, conservative)`.
pub fn pixel_depths(lambda: ComplexValue, spec: &ThinSetSpec, z: ComplexValue, depth: usize) -> Result<(u32, u32)> {
    let m = lambda_membership(lambda, spec, z, depth)?;
    Ok((m.optimistic_depth(depth), m.conservative_depth(depth)))
}

/// Serial grid sampling of the depth-`n` approximant of `Λ_W`.
pub fn sample_lambda_set(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    window: Window,
    nx: usize,
    ny: usize,
    depth: usize,
) -> Result<ExitField> {
    check_grid(nx, ny, depth)?;
    checked_lambda(lambda)?;
    let mut optimistic = Vec::with_capacity(nx * ny);
    let mut conservative = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let (o, c) = pixel_depths(lambda, spec, window.node(ix, iy, nx, ny), depth)?;
            optimistic.push(o);
            conservative.push(c);
        }
    }
    Ok(ExitField {
        window,
        nx,
        ny,
        depth,
        optimistic,
        conservative,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryKind {
    /// All iterates stayed in `|z| ≤ radius`.
    Bounded { radius: f64 },
    Escaping,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryClass {
    pub kind: TrajectoryKind,
    /// Index that settled the classification (the horizon for bounded
    /// orbits, the escape index for escaping ones).
    pub evidence: usize,
}

/// Finite-horizon bounded/escaping split.
pub fn classify_trajectory(
    lambda: ComplexValue,
    z: ComplexValue,
    steps: usize,
    r_bound: f64,
    escape_log_modulus: f64,
) -> Result<TrajectoryClass> {
    let lam = checked_lambda(lambda)?;
    if !(r_bound > 0.0) || !(math::ln(r_bound) < escape_log_modulus) {
        return Err(invalid("need 0 < log R_bound < escape threshold"));
    }
    let threshold = crate::tower::TowerReal::from_f64(escape_log_modulus);
    let ln_r = crate::tower::TowerReal::from_f64(math::ln(r_bound));
    let mut p = OrbitPoint::from_complex(z);
    let mut bounded = p.log_modulus() <= ln_r;
    for n in 1..=steps {
        p = p.step(&lam);
        if p.log_modulus() > threshold {
            return Ok(TrajectoryClass {
                kind: TrajectoryKind::Escaping,
                evidence: n,
            });
        }
        bounded &= p.log_modulus() <= ln_r;
    }
    Ok(TrajectoryClass {
        kind: if bounded {
            TrajectoryKind::Bounded { radius: r_bound }
        } else {
            TrajectoryKind::Undecided
        },
        evidence: steps,
    })
}

/// Fit of `|(f^j)'(z)| ≥ c·γ^j` over samples whose orbits stay in `B(0, R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionFit {
    pub survivors: usize,
    /// `exp` of the smallest per-sample log-derivative slope.
    pub gamma: Option<f64>,
    /// Largest `c` with `c·γ^j ≤ |(f^j)'(z)|` over all samples and `j ≤ n`.
    pub c: Option<f64>,
}

pub fn measure_expansion(
    lambda: ComplexValue,
    r: f64,
    samples: &[ComplexValue],
    n: usize,
) -> Result<ExpansionFit> {
    let lam = checked_lambda(lambda)?;
    if n < 1 || !(r > 0.0) {
        return Err(invalid("need n >= 1 and R > 0"));
    }
    let mut logs: Vec<Vec<f64>> = Vec::new();
    'sample: for &z0 in samples {
        if !(z0.norm() <= r) {
            continue;
        }
        let mut z = z0;
        let mut acc = 0.0;
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            z = lam.value * z.exp();
            if !(z.norm() <= r) {
                continue 'sample;
            }
            acc += math::ln(z.norm());
            row.push(acc);
        }
        logs.push(row);
    }
    if logs.is_empty() {
        return Ok(ExpansionFit {
            survivors: 0,
            gamma: None,
            c: None,
        });
    }
    let js: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let mut slope = f64::INFINITY;
    for row in &logs {
        let s = if n == 1 {
            row[0]
        } else {
            math::least_squares(&js, row).map_or(f64::INFINITY, |f| f.0)
        };
        slope = slope.min(s);
    }
    let mut ln_c = f64::INFINITY;
    for row in &logs {
        for (j, l) in row.iter().enumerate() {
            ln_c = ln_c.min(l - (j + 1) as f64 * slope);
        }
    }
    Ok(ExpansionFit {
        survivors: logs.len(),
        gamma: Some(math::exp(slope)),
        c: Some(math::exp(ln_c)),
    })
}
