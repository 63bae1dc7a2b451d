//! Rectangle families, the induced map `F` and its contraction sums.
//!
//! Rectangles are `R^k_r = {r ≤ Re z < r+1} ∩ P_k`. On the far right
//! `F = f`; on the far left a rectangle assigned to level `l` is mapped by
//! `F = f^{l+2}` through a neighbourhood of `0` and the ball around `β_l`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::coding::strip_of_imag;
use crate::complex::ComplexValue;
use crate::dynamics::{check_supergrowth, checked_lambda, inverse_branch_parts, OrbitPoint};
use crate::error::{invalid, Error, Result};
use crate::invariant::{Shape, ThinSetSpec, WidthProfile};
use crate::logpolar::{LambdaParts, LogPolarComplex};
use crate::math::{self, E, PI, TAU};
use crate::tower::TowerReal;

/// Default allowance for derivative distortion along inverse branches.
pub const DEFAULT_DISTORTION: f64 = 1.2;
/// Sub-grid resolution used when membership can only be sampled.
pub const SUBGRID: usize = 8;
/// Columns summed one by one before switching to dyadic blocks.
pub const EXPLICIT_COLUMNS: u64 = 1 << 12;
/// Largest `log` of an image radius handled by native column sums.
const LN_NATIVE_RADIUS: f64 = 690.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RectangleIndex {
    pub k: i64,
    pub r: i64,
}

impl RectangleIndex {
    pub fn new(k: i64, r: i64) -> Self {
        Self { k, r }
    }

    /// The rectangle containing `z`.
    pub fn containing(lambda: ComplexValue, z: ComplexValue) -> Self {
        let lam = LambdaParts::new(lambda);
        Self {
            k: strip_of_imag(&lam, z.im).0,
            r: math::floor(z.re) as i64,
        }
    }

    /// `(lower, upper]` bounds of `Im` for strip `k`.
    pub fn imag_bounds(&self, lambda: ComplexValue) -> (f64, f64) {
        strip_bounds(&LambdaParts::new(lambda), self.k)
    }
}

fn strip_bounds(lam: &LambdaParts, k: i64) -> (f64, f64) {
    (
        (TAU * (k - 1) as f64 + PI) - lam.arg,
        (TAU * k as f64 + PI) - lam.arg,
    )
}

/// Distance from the origin of the column `[r, r+1)`, as seen by `|Re z|`.
fn column_distance(r: i64) -> i64 {
    if r >= 0 {
        r
    } else {
        -r - 1
    }
}

/// Upper bound on the number of half-open strips of height `2π` met by a
/// vertical segment of length `w`; a negative width marks an empty slice.
pub fn rectangles_for_width(w: f64) -> u64 {
    if !(w >= 0.0) {
        0
    } else {
        math::ceil(w / TAU) as u64 + 1
    }
}

/// `n(d)` for a column covering `|Re z| ∈ [d, d+1]`, assuming the profile
/// is nondecreasing there.
fn column_count(width: &WidthProfile, d: f64) -> u64 {
    let a = width.eval(d);
    let b = width.eval(d + 1.0);
    match (a >= 0.0, b >= 0.0) {
        (false, false) => 0,
        _ => rectangles_for_width(a.max(b)),
    }
}

/// `Im` extent of `W` on the vertical line `Re z = x`, when known exactly.
fn slice_interval(spec: &ThinSetSpec, x: f64) -> Option<Option<(f64, f64)>> {
    match &spec.shape {
        Shape::Strip { lo, hi } => Some(Some((*lo, *hi))),
        Shape::Band { center } => {
            let w = spec.width.eval(math::abs(x));
            if !(w >= 0.0) {
                return Some(None);
            }
            let cone = spec.cone_constant * (math::abs(x) + 1.0);
            let reach = if cone > math::abs(x) {
                math::sqrt(cone * cone - x * x)
            } else {
                return Some(None);
            };
            let lo = (center - w / 2.0).max(-reach);
            let hi = (center + w / 2.0).min(reach);
            Some((lo <= hi).then_some((lo, hi)))
        }
        Shape::Custom(_) => None,
    }
}

/// Whether `R^k_r` meets `W ∩ {|Re z| ≥ M}`, exact in `Im` for strips and
/// bands and sampled on a sub-grid of `Re` (and of `Im` for custom sets).
pub fn rectangle_meets(lambda: ComplexValue, spec: &ThinSetSpec, m: i64, rect: RectangleIndex) -> bool {
    let lam = LambdaParts::new(lambda);
    rect_meets(&lam, spec, m, rect)
}

fn rect_meets(lam: &LambdaParts, spec: &ThinSetSpec, m: i64, rect: RectangleIndex) -> bool {
    let (lower, upper) = strip_bounds(lam, rect.k);
    let xs = (0..SUBGRID)
        .map(|i| rect.r as f64 + i as f64 / SUBGRID as f64)
        .filter(|x| math::abs(*x) >= m as f64);
    for x in xs {
        match slice_interval(spec, x) {
            Some(None) => {}
            Some(Some((a, b))) => {
                if a <= upper && b > lower {
                    return true;
                }
            }
            None => {
                for j in 0..SUBGRID {
                    let y = lower + TAU * (j + 1) as f64 / SUBGRID as f64;
                    if spec.contains(ComplexValue::new(x, y)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Strips that can meet `W` in column `r`, from the cone bound.
fn candidate_strips(lam: &LambdaParts, spec: &ThinSetSpec, r: i64) -> (i64, i64) {
    let reach = spec.cone_constant * (column_distance(r) as f64 + 2.0);
    (strip_of_imag(lam, -reach).0, strip_of_imag(lam, reach).0)
}

/// The rectangles meeting `W ∩ Y_M`, truncated at `|r| ≤ r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZMFamily {
    pub m: i64,
    pub r_max: i64,
    pub rectangles: Vec<RectangleIndex>,
    pub per_column_counts: BTreeMap<i64, usize>,
}

impl ZMFamily {
    pub fn contains(&self, rect: &RectangleIndex) -> bool {
        self.rectangles.binary_search(rect).is_ok()
    }

    pub fn column(&self, r: i64) -> impl Iterator<Item = &RectangleIndex> + '_ {
        self.rectangles.iter().filter(move |q| q.r == r)
    }
}

pub fn build_zm(spec: &ThinSetSpec, lambda: ComplexValue, m: i64, r_max: i64) -> Result<ZMFamily> {
    let lam = checked_lambda(lambda)?;
    if m < 1 || r_max <= m {
        return Err(invalid("need M >= 1 and r_max > M"));
    }
    let mut rectangles = Vec::new();
    let mut per_column_counts = BTreeMap::new();
    let columns = (-r_max..=-m).chain(m..=r_max);
    for r in columns {
        let (k0, k1) = candidate_strips(&lam, spec, r);
        let before = rectangles.len();
        for k in k0..=k1 {
            let rect = RectangleIndex::new(k, r);
            if rect_meets(&lam, spec, m, rect) {
                rectangles.push(rect);
            }
        }
        let n = rectangles.len() - before;
        if n > 0 {
            per_column_counts.insert(r, n);
        }
    }
    rectangles.sort();
    Ok(ZMFamily {
        m,
        r_max,
        rectangles,
        per_column_counts,
    })
}

/// `Σ_{d=from}^{to} n(d)·max(ρ, d)^{−p}` over column distances, with
/// `ln ρ` given. Columns past [`EXPLICIT_COLUMNS`] are grouped in dyadic
/// blocks, each bounded by its largest count and an integral tail.
fn column_sum(width: &WidthProfile, ln_rho: f64, p: f64, from: f64, to: f64) -> f64 {
    if from > to {
        return 0.0;
    }
    let rho = math::exp(ln_rho);
    let term = |d: f64| math::exp(-p * ln_rho.max(math::ln(d.max(1e-300))));
    let mut total = 0.0;
    let explicit_end = to.min(from + EXPLICIT_COLUMNS as f64 - 1.0);
    let mut d = from;
    while d <= explicit_end {
        let n = column_count(width, d);
        if n > 0 {
            total += n as f64 * term(d);
        }
        d += 1.0;
    }
    let mut a = d;
    while a <= to {
        let b = (2.0 * a).min(to);
        let n = column_count(width, a).max(column_count(width, b));
        if n > 0 {
            total += n as f64 * power_sum(rho, p, a, b);
        }
        if b >= to {
            break;
        }
        a = math::floor(b) + 1.0;
    }
    total
}

/// Upper bound on `Σ_{d=a}^{b} max(ρ, d)^{−p}` for integers `a ≤ b`.
fn power_sum(rho: f64, p: f64, a: f64, b: f64) -> f64 {
    let flat_end = b.min(math::floor(rho));
    let mut s = 0.0;
    let mut start = a;
    if flat_end >= a {
        s += (flat_end - a + 1.0) * math::powf(rho, -p);
        start = flat_end + 1.0;
    }
    if start <= b {
        // decreasing terms: first one plus the integral over the rest
        s += math::powf(start, -p) + (math::powf(start, 1.0 - p) - math::powf(b, 1.0 - p)) / (p - 1.0);
    }
    s
}

/// Image columns of `R^k_r` split by side: `(positive, negative)` sums of
/// `n(s)·max(|λ|e^r, dist(s))^{−(1+δ)}` over `|s| ≥ M`.
fn image_sums(lam: &LambdaParts, width: &WidthProfile, r: f64, delta: f64, m: i64) -> Result<(f64, f64)> {
    let ln_rho = lam.ln_abs + r;
    if ln_rho + 1.0 > LN_NATIVE_RADIUS {
        return Err(Error::Range { step: 0 });
    }
    let outer = math::floor(math::exp(ln_rho + 1.0));
    let p = 1.0 + delta;
    let pos = column_sum(width, ln_rho, p, m as f64, outer);
    let neg = column_sum(width, ln_rho, p, (m - 1) as f64, outer);
    Ok((pos, neg))
}

/// Natural log of an upper bound for the positive-side sum at column `r`,
/// valid far beyond the native range.
fn ln_positive_sum(lam: &LambdaParts, width: &WidthProfile, r: f64, delta: f64, m: i64) -> Result<f64> {
    let ln_rho = lam.ln_abs + r;
    if ln_rho + 1.0 <= LN_NATIVE_RADIUS {
        let (a, b) = image_sums(lam, width, r, delta, m)?;
        return Ok(math::ln(a + b));
    }
    // at most 2(ρe + 1) columns, each with n ≤ n(ρe + 1) and term ≤ ρ^{−p}
    let ln_cols = math::ln(2.0) + ln_rho + 1.0 + math::ln_1p(math::exp(-(ln_rho + 1.0)));
    let ln_n = match width {
        WidthProfile::Constant(w) => math::ln(rectangles_for_width(*w) as f64),
        WidthProfile::Power { coef, exponent } => {
            let ln_w = math::ln(*coef) + exponent * (ln_rho + 1.0);
            math::ln(math::exp(ln_w - math::ln(TAU)) + 2.0)
        }
        WidthProfile::Custom(_) => return Err(Error::Range { step: 0 }),
    };
    Ok(ln_cols + ln_n - (1.0 + delta) * ln_rho)
}

/// Column-aggregated upper bound for `Σ sup |f'|^{−(1+δ)}` over the pieces
/// of `R^k_r` mapped into rectangles of `Z_M`, using `|f'(z)| = |f(z)|`.
pub fn positive_sum(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    rect: RectangleIndex,
    delta: f64,
    m: i64,
) -> Result<f64> {
    let lam = checked_lambda(lambda)?;
    if m < 1 || rect.r < m {
        return Err(invalid("positive sums need r >= M >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    let (a, b) = image_sums(&lam, &spec.width, rect.r as f64, delta, m)?;
    Ok(a + b)
}

/// `B_l = B(β_l, D|β_l|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub level: usize,
    pub center: LogPolarComplex,
    /// `log(D|β_l|)`.
    pub log_radius: TowerReal,
}

impl Ball {
    pub fn center_native(&self) -> Option<ComplexValue> {
        self.center.to_complex()
    }

    pub fn radius(&self) -> Option<f64> {
        self.log_radius.exp().to_f64()
    }
}

/// Band `h_{l+1} ≤ Re z < h_l` standing in for `G_l ∖ G_{l+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub level: usize,
    pub upper: f64,
    pub lower: f64,
}

/// Negative-side scaffolding of the induced map.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedGeometry {
    pub lambda: ComplexValue,
    pub c: f64,
    /// `D = c/(4|λ|)`.
    pub d: f64,
    pub l0: usize,
    /// Threshold in use.
    pub m: i64,
    /// `⌊α_{l0}⌋ + 1`.
    pub natural_m: i64,
    pub r_max: i64,
    pub balls: Vec<Ball>,
    pub bands: Vec<Band>,
    /// Level of every negative column `−r_max ≤ r ≤ −M` that meets a band.
    pub assignment: BTreeMap<i64, usize>,
    pub distortion: f64,
    /// `β_0, …, β_{l0+N+1}`.
    pub orbit: Vec<OrbitPoint>,
}

/// `h_l = −log 4 − 1 + log D − (α_0 + … + α_{l−2}) − l·log|λ|`.
fn band_edge(orbit: &[OrbitPoint], lam: &LambdaParts, d: f64, l: usize) -> f64 {
    let mut sum = 0.0;
    for p in orbit.iter().take(l.saturating_sub(1)) {
        match p.polar.real_part().to_f64() {
            Some(a) => sum += a,
            None => return f64::NEG_INFINITY,
        }
    }
    -math::ln(4.0) - 1.0 + math::ln(d) - sum - l as f64 * lam.ln_abs
}

/// Builds `D`, the balls `B_l` for `l0 ≤ l ≤ l0+N`, `M = ⌊α_{l0}⌋ + 1` and
/// the level of each negative column. A column meeting two bands takes the
/// smaller level.
pub fn negative_geometry(
    lambda: ComplexValue,
    c: f64,
    l0: usize,
    levels: usize,
    r_max: i64,
) -> Result<InducedGeometry> {
    let lam = checked_lambda(lambda)?;
    if l0 < 1 || levels < 1 {
        return Err(invalid("need l0 >= 1 and at least one level"));
    }
    let horizon = l0 + levels + 1;
    let report = check_supergrowth(lambda, c, horizon.max(l0 + 2), l0)?;
    if !report.holds {
        return Err(Error::Supergrowth {
            index: report.first_failure_index.unwrap_or(l0),
        });
    }
    let orbit = crate::dynamics::iterate_orbit(lambda, ComplexValue::ZERO, horizon, f64::MAX)?.points;
    let alpha_l0 = orbit[l0]
        .polar
        .real_part()
        .to_f64()
        .filter(|a| *a < 1e15)
        .ok_or(Error::Range { step: l0 })?;
    let d = c / (4.0 * lam.abs());
    let natural_m = math::floor(alpha_l0) as i64 + 1;
    let balls = (l0..=l0 + levels)
        .map(|l| Ball {
            level: l,
            center: orbit[l].polar,
            log_radius: orbit[l].polar.log_modulus.add_f64(math::ln(d)),
        })
        .collect();
    let bands = (l0 + 1..=l0 + levels)
        .map(|l| Band {
            level: l,
            upper: band_edge(&orbit, &lam, d, l),
            lower: band_edge(&orbit, &lam, d, l + 1),
        })
        .collect();
    let mut g = InducedGeometry {
        lambda,
        c,
        d,
        l0,
        m: natural_m.max(1),
        natural_m,
        r_max,
        balls,
        bands,
        assignment: BTreeMap::new(),
        distortion: DEFAULT_DISTORTION,
        orbit,
    };
    g.assign();
    Ok(g)
}

impl InducedGeometry {
    /// Replaces `M` (keeping `l0`) and reassigns the columns.
    pub fn with_threshold(mut self, m: i64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("M must be at least 1"));
        }
        self.m = m;
        self.assign();
        Ok(self)
    }

    pub fn with_r_max(mut self, r_max: i64) -> Self {
        self.r_max = r_max;
        self.assign();
        self
    }

    pub fn with_distortion(mut self, allowance: f64) -> Result<Self> {
        if !(allowance >= 1.0) {
            return Err(invalid("distortion allowance must be >= 1"));
        }
        self.distortion = allowance;
        Ok(self)
    }

    fn assign(&mut self) {
        self.assignment.clear();
        for r in -self.r_max..=-self.m {
            let lo = r as f64;
            if let Some(b) = self.bands.iter().find(|b| lo < b.upper && lo + 1.0 > b.lower) {
                self.assignment.insert(r, b.level);
            }
        }
    }

    /// Negative columns in `[−r_max, −M]` without a level.
    pub fn uncovered(&self) -> Vec<i64> {
        (-self.r_max..=-self.m)
            .filter(|r| !self.assignment.contains_key(r))
            .collect()
    }

    /// `B_l ∩ B_{l+1} = ∅` for every stored pair, checked through
    /// `(1−D)|β_{l+1}| > (1+D)|β_l|`.
    pub fn balls_disjoint(&self) -> bool {
        let margin = math::ln((1.0 + self.d) / (1.0 - self.d));
        self.balls
            .windows(2)
            .all(|w| w[1].center.log_modulus > w[0].center.log_modulus.add_f64(margin))
    }

    pub fn level_of(&self, r: i64) -> Option<usize> {
        self.assignment.get(&r).copied()
    }

    fn lambda_parts(&self) -> LambdaParts {
        LambdaParts::new(self.lambda)
    }

    /// `log` of the per-rectangle bound on level `l`:
    /// `(4eL/D)^{1+δ}` times the positive sums over the rectangles covering
    /// `B_l`. `−∞` when the bound underflows every representation.
    pub fn ln_negative_bound(&self, spec: &ThinSetSpec, level: usize, delta: f64) -> Result<f64> {
        let lam = self.lambda_parts();
        let ball = self
            .balls
            .iter()
            .find(|b| b.level == level)
            .ok_or_else(|| invalid("level outside the stored balls"))?;
        let first_leg = (1.0 + delta) * math::ln(4.0 * E * self.distortion / self.d);
        let cos = if ball.center.on_axis() {
            if ball.center.argument == 0.0 { 1.0 } else { -1.0 }
        } else {
            math::cos(ball.center.argument)
        };
        if !ball.center.arg_trusted || cos <= self.d {
            return Err(Error::UntrustedArgument { step: level });
        }
        let modulus = ball.center.modulus();
        let Some(beta) = modulus.to_f64().filter(|b| b * (cos + self.d) < f64::MAX / 4.0) else {
            // the ball starts at |β_l|(cos θ − D), beyond every native scale
            return Ok(f64::NEG_INFINITY);
        };
        let radius = self.d * beta;
        let left = beta * cos - radius;
        let right = beta * cos + radius;
        let per_column = math::ln(rectangles_for_width(2.0 * radius) as f64);
        let first_col = math::floor(left);
        let last_col = math::floor(right);
        let ln_sum = if last_col - first_col < EXPLICIT_COLUMNS as f64 {
            let mut acc = f64::NEG_INFINITY;
            let mut col = first_col;
            while col <= last_col {
                acc = math::ln_add(acc, ln_positive_sum(&lam, &spec.width, col, delta, self.m)?);
                col += 1.0;
            }
            acc
        } else {
            math::ln(last_col - first_col + 1.0) + ln_positive_sum(&lam, &spec.width, first_col, delta, self.m)?
        };
        Ok(first_leg + per_column + ln_sum)
    }
}

/// `F(z)` and the number of iterates of `f` it uses.
pub fn induced_apply(
    geometry: &InducedGeometry,
    spec: &ThinSetSpec,
    z: ComplexValue,
) -> Result<(OrbitPoint, usize)> {
    let lam = geometry.lambda_parts();
    let n = induced_iterates(geometry, spec, &lam, z)?;
    let mut p = OrbitPoint::from_complex(z);
    for _ in 0..n {
        p = p.step(&lam);
    }
    Ok((p, n))
}

fn induced_iterates(geometry: &InducedGeometry, spec: &ThinSetSpec, lam: &LambdaParts, z: ComplexValue) -> Result<usize> {
    if !z.is_finite() {
        return Err(invalid("z must be finite"));
    }
    let rect = RectangleIndex {
        k: strip_of_imag(lam, z.im).0,
        r: math::floor(z.re) as i64,
    };
    let m = geometry.m;
    let out = Error::OutOfDomain { re: z.re, im: z.im };
    if !rect_meets(lam, spec, m, rect) {
        return Err(out);
    }
    if rect.r >= m {
        Ok(1)
    } else if rect.r <= -m {
        geometry.level_of(rect.r).map(|l| l + 2).ok_or(out)
    } else {
        Err(out)
    }
}

/// One application of `F`: the rectangle it starts in and the strips of
/// the intermediate iterates, enough to invert it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchStep {
    pub rect: RectangleIndex,
    pub strips: Vec<i64>,
}

impl BranchStep {
    pub fn iterates(&self) -> usize {
        self.strips.len()
    }
}

/// Applies `F` `n` times, recording the branch of each application.
pub fn branch_steps(
    geometry: &InducedGeometry,
    spec: &ThinSetSpec,
    z: ComplexValue,
    n: usize,
) -> Result<(Vec<BranchStep>, ComplexValue)> {
    let lam = geometry.lambda_parts();
    let mut steps = Vec::with_capacity(n);
    let mut w = z;
    for step in 0..n {
        let count = induced_iterates(geometry, spec, &lam, w)?;
        let mut strips = Vec::with_capacity(count);
        let rect = RectangleIndex::containing(geometry.lambda, w);
        for _ in 0..count {
            strips.push(strip_of_imag(&lam, w.im).0);
            w = crate::dynamics::eval_map(geometry.lambda, w).map_err(|_| Error::Range { step })?;
        }
        steps.push(BranchStep { rect, strips });
    }
    Ok((steps, w))
}

/// Inverts a composition recorded by [`branch_steps`].
pub fn pull_back_cell(geometry: &InducedGeometry, steps: &[BranchStep], w: ComplexValue) -> Result<ComplexValue> {
    let lam = geometry.lambda_parts();
    let mut z = w;
    for step in steps.iter().rev() {
        for &k in step.strips.iter().rev() {
            z = inverse_branch_parts(&lam, z, k)?;
        }
    }
    Ok(z)
}

/// Bound attached to one rectangle of a certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectangleBound {
    pub rect: RectangleIndex,
    pub bound: f64,
    /// `ln bound`, finite even when `bound` underflows to `0`.
    pub ln_bound: f64,
    /// Level of a negative-side rectangle.
    pub level: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateOutcome {
    Pass,
    /// Some bound reached `1/2`: certificate not achieved at this `M, δ`.
    NotAchieved,
}

/// Per-rectangle upper bounds on `Σ_Q sup_Q |F'|^{−(1+δ)}`, valid modulo the
/// distortion allowance.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCertificate {
    pub delta: f64,
    pub m: i64,
    pub l0: usize,
    pub c: f64,
    pub r_range: (i64, i64),
    pub distortion_allowance: f64,
    pub per_rectangle: Vec<RectangleBound>,
    pub max_sum: f64,
    pub pass: bool,
    pub outcome: CertificateOutcome,
}

impl ContractionCertificate {
    /// Minus the least-squares slope of `ln bound` against `r` over the
    /// positive columns (one value per column).
    pub fn decay_rate(&self) -> Option<f64> {
        let mut cols: BTreeMap<i64, f64> = BTreeMap::new();
        for b in self.per_rectangle.iter().filter(|b| b.level.is_none()) {
            let e = cols.entry(b.rect.r).or_insert(f64::NEG_INFINITY);
            *e = e.max(b.ln_bound);
        }
        let xs: Vec<f64> = cols.keys().map(|r| *r as f64).collect();
        let ys: Vec<f64> = cols.values().copied().collect();
        (xs.len() >= 2).then(|| math::least_squares(&xs, &ys).map(|f| -f.0)).flatten()
    }
}

/// The rectangles of `Z_M` in columns `r_lo..=r_hi`.
pub fn zm_rectangles(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    m: i64,
    r_lo: i64,
    r_hi: i64,
) -> Result<Vec<RectangleIndex>> {
    let lam = checked_lambda(lambda)?;
    let mut out = Vec::new();
    for r in r_lo..=r_hi {
        if r > -m && r < m {
            continue;
        }
        let (k0, k1) = candidate_strips(&lam, spec, r);
        out.extend((k0..=k1).map(|k| RectangleIndex::new(k, r)).filter(|q| rect_meets(&lam, spec, m, *q)));
    }
    Ok(out)
}

/// Checks `Σ_Q sup |F'|^{−(1+δ)} < 1/2` on every rectangle of `Z_M` with
/// column in `r_range`.
pub fn verify_contraction(
    spec: &ThinSetSpec,
    geometry: &InducedGeometry,
    delta: f64,
    r_range: (i64, i64),
) -> Result<ContractionCertificate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    let (r_lo, r_hi) = r_range;
    if r_lo > r_hi {
        return Err(invalid("empty r range"));
    }
    let lam = geometry.lambda_parts();
    let m = geometry.m;
    let rects = zm_rectangles(geometry.lambda, spec, m, r_lo, r_hi)?;
    let mut level_bounds: BTreeMap<usize, f64> = BTreeMap::new();
    let mut column_bounds: BTreeMap<i64, f64> = BTreeMap::new();
    let mut per_rectangle = Vec::with_capacity(rects.len());
    for rect in rects {
        let (ln_bound, level) = if rect.r >= m {
            let ln = match column_bounds.get(&rect.r) {
                Some(v) => *v,
                None => {
                    let v = ln_positive_sum(&lam, &spec.width, rect.r as f64, delta, m)?;
                    column_bounds.insert(rect.r, v);
                    v
                }
            };
            (ln, None)
        } else {
            let level = geometry
                .level_of(rect.r)
                .ok_or(Error::Uncovered { column: rect.r })?;
            let ln = match level_bounds.get(&level) {
                Some(v) => *v,
                None => {
                    let v = geometry.ln_negative_bound(spec, level, delta)?;
                    level_bounds.insert(level, v);
                    v
                }
            };
            (ln, Some(level))
        };
        per_rectangle.push(RectangleBound {
            rect,
            bound: math::exp(ln_bound),
            ln_bound,
            level,
        });
    }
    let max_sum = per_rectangle.iter().map(|b| b.bound).fold(0.0, f64::max);
    let pass = max_sum < 0.5;
    Ok(ContractionCertificate {
        delta,
        m,
        l0: geometry.l0,
        c: geometry.c,
        r_range,
        distortion_allowance: geometry.distortion,
        per_rectangle,
        max_sum,
        pass,
        outcome: if pass {
            CertificateOutcome::Pass
        } else {
            CertificateOutcome::NotAchieved
        },
    })
}

/// `diam(R^k_r)^{1+δ}` with `diam = √(1 + 4π²)`.
pub fn cell_baseline(delta: f64) -> f64 {
    math::powf(1.0 + 4.0 * PI * PI, (1.0 + delta) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverLevel {
    pub depth: usize,
    /// Upper bound on `Σ (diam K)^{1+δ}` over the depth-`n` cover of the
    /// worst starting rectangle.
    pub total: f64,
    /// `(2π + 1)/2^n`.
    pub budget: f64,
    /// Source columns handled explicitly at this depth.
    pub explicit_columns: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    pub delta: f64,
    pub m: i64,
    pub baseline: f64,
    pub levels: Vec<CoverLevel>,
    /// The work guard stopped the recursion early.
    pub aborted: bool,
}

impl CoverReport {
    pub fn within_budget(&self, from_depth: usize) -> bool {
        self.levels
            .iter()
            .filter(|l| l.depth >= from_depth)
            .all(|l| l.total < l.budget)
    }
}

/// Largest source column summed natively.
const MAX_EXPLICIT_SOURCE: i64 = 600;

/// Depth-indexed cover sums `Σ (diam K)^{1+δ}` for the covers built by
/// pulling the depth-`(n−1)` covers back along the branches of `F`.
///
/// Cells are handled through column weights: `T_n(r)` bounds the sum of
/// `Π sup|F'|^{−(1+δ)}` over compositions of length `n` starting in column
/// `r`. Columns `M ≤ r < M + branch_cap` (and within the native range) are
/// explicit; the rest are bounded by `S(r)·max T_{n−1}` where `S` is the
/// one-step bound. `work_limit` caps the number of (source, image) column
/// pairs visited; hitting it returns the depths finished so far.
pub fn cover_iterate(
    spec: &ThinSetSpec,
    geometry: &InducedGeometry,
    delta: f64,
    r_range: (i64, i64),
    depth_max: usize,
    branch_cap: usize,
    work_limit: u64,
) -> Result<CoverReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    if branch_cap < 1 {
        return Err(invalid("branch cap must be at least 1"));
    }
    let lam = geometry.lambda_parts();
    let m = geometry.m;
    let p = 1.0 + delta;
    let width = &spec.width;
    let baseline = cell_baseline(delta);
    let budget = |n: usize| (TAU + 1.0) / math::powf(2.0, n as f64);

    let starts = zm_rectangles(geometry.lambda, spec, m, r_range.0, r_range.1)?;
    if starts.is_empty() {
        return Err(invalid("no rectangles of Z_M in the r range"));
    }
    let end = (m + branch_cap as i64 - 1).min(MAX_EXPLICIT_SOURCE).max(m);
    let ncols = (end - m + 1) as usize;

    let s_tail = math::exp(ln_positive_sum(&lam, width, (end + 1) as f64, delta, m)?);
    let mut neg_max: f64 = 0.0;
    let mut levels_seen: Vec<usize> = geometry.assignment.values().copied().collect();
    levels_seen.sort_unstable();
    levels_seen.dedup();
    for l in levels_seen {
        neg_max = neg_max.max(math::exp(geometry.ln_negative_bound(spec, l, delta)?));
    }
    if !geometry.uncovered().is_empty() {
        return Err(Error::Uncovered {
            column: geometry.uncovered()[0],
        });
    }

    let mut levels = alloc::vec![CoverLevel {
        depth: 0,
        total: baseline,
        budget: budget(0),
        explicit_columns: 0,
    }];
    // T_{n−1} on explicit columns, its bound beyond them, and overall max
    let mut t_prev = alloc::vec![1.0; ncols];
    let mut tail_prev = 1.0;
    let mut neg_prev = 1.0;
    let mut max_prev = 1.0;
    let mut work = 0u64;
    let mut aborted = false;
    for depth in 1..=depth_max {
        // prefix sums of n(s)·T(s) and n(s)·s^{−p}·T(s)
        let mut pre_flat = Vec::with_capacity(ncols + 1);
        let mut pre_pow = Vec::with_capacity(ncols + 1);
        pre_flat.push(0.0);
        pre_pow.push(0.0);
        for (i, t) in t_prev.iter().enumerate() {
            let s = (m + i as i64) as f64;
            let n = column_count(width, s) as f64;
            pre_flat.push(pre_flat[i] + n * t);
            pre_pow.push(pre_pow[i] + n * math::powf(s, -p) * t);
        }
        let mut t_next = Vec::with_capacity(ncols);
        for i in 0..ncols {
            let r = (m + i as i64) as f64;
            let ln_rho = lam.ln_abs + r;
            let rho = math::exp(ln_rho);
            let outer = math::floor(math::exp(ln_rho + 1.0));
            let last = outer.min(end as f64);
            let mut total = 0.0;
            if last >= m as f64 {
                let flat_last = last.min(math::floor(rho));
                let j_flat = (flat_last - m as f64 + 1.0).max(0.0) as usize;
                let j_last = (last - m as f64 + 1.0) as usize;
                total += math::powf(rho, -p) * pre_flat[j_flat] + (pre_pow[j_last] - pre_pow[j_flat]);
                work += j_last as u64;
            }
            total += tail_prev * column_sum(width, ln_rho, p, (end + 1) as f64, outer);
            total += neg_prev * column_sum(width, ln_rho, p, (m - 1) as f64, outer);
            t_next.push(total);
        }
        if work > work_limit {
            aborted = true;
            break;
        }
        let explicit_max = t_next.iter().copied().fold(0.0, f64::max);
        let tail_next = s_tail * max_prev;
        let neg_next = neg_max * max_prev;
        let max_next = explicit_max.max(tail_next).max(neg_next);

        let mut worst: f64 = 0.0;
        for rect in &starts {
            let v = if rect.r >= m {
                let i = (rect.r - m) as usize;
                if i < ncols {
                    t_next[i]
                } else {
                    tail_next
                }
            } else {
                neg_next
            };
            worst = worst.max(v);
        }
        levels.push(CoverLevel {
            depth,
            total: baseline * worst,
            budget: budget(depth),
            explicit_columns: ncols,
        });
        t_prev = t_next;
        tail_prev = tail_next;
        neg_prev = neg_next;
        max_prev = max_next;
    }
    Ok(CoverReport {
        delta,
        m,
        baseline,
        levels,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::ThinSetSpec;

    fn one() -> ComplexValue {
        ComplexValue::ONE
    }

    fn strip_spec() -> ThinSetSpec {
        ThinSetSpec::symmetric_strip(1.0).unwrap()
    }

    #[test]
    fn thin_strip_gives_one_rectangle_per_column() {
        let zm = build_zm(&strip_spec(), one(), 5, 10).unwrap();
        let cols: Vec<i64> = zm.rectangles.iter().map(|q| q.r).collect();
        let expected: Vec<i64> = (-10..=-5).chain(5..=10).collect();
        assert_eq!(cols, expected);
        assert!(zm.rectangles.iter().all(|q| q.k == 0));
    }

    #[test]
    fn rectangle_count_for_width() {
        assert_eq!(rectangles_for_width(-1.0), 0);
        assert_eq!(rectangles_for_width(0.0), 1);
        assert_eq!(rectangles_for_width(2.0), 2);
        assert_eq!(rectangles_for_width(TAU + 0.1), 3);
    }

    #[test]
    fn positive_sum_is_small_and_decays() {
        let spec = strip_spec();
        let a = positive_sum(one(), &spec, RectangleIndex::new(0, 10), 0.5, 10).unwrap();
        let b = positive_sum(one(), &spec, RectangleIndex::new(0, 20), 0.5, 10).unwrap();
        assert!(a < 0.5, "{a}");
        assert!(b < a);
        // the ratio tracks e^{−10(1+δ)/2·…}: at least a factor e^{-5}
        assert!(b / a < math::exp(-4.0));
    }

    #[test]
    fn geometry_for_lambda_one() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap();
        assert!((g.d - 0.25).abs() < 1e-15);
        let b3 = g.balls.iter().find(|b| b.level == 3).unwrap();
        let c = b3.center_native().unwrap();
        assert!((c.re - 15.154262241479262).abs() < 1e-9, "{c:?}");
        assert!((b3.radius().unwrap() - 3.7885655603698155).abs() < 1e-9);
        assert!(g.balls_disjoint());
        assert_eq!(g.natural_m, 16);
    }

    #[test]
    fn threshold_override_covers_negative_columns() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40)
            .unwrap()
            .with_threshold(10)
            .unwrap();
        assert!(g.uncovered().is_empty(), "{:?}", g.uncovered());
        assert_eq!(g.level_of(-10), Some(4));
    }

    #[test]
    fn induced_map_on_positive_side_is_one_step() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40)
            .unwrap()
            .with_threshold(5)
            .unwrap();
        let (p, n) = induced_apply(&g, &strip_spec(), ComplexValue::real(6.0)).unwrap();
        assert_eq!(n, 1);
        let w = p.polar.to_complex().unwrap();
        assert!((w.re - math::exp(6.0)).abs() < 1e-9);
    }

    #[test]
    fn induced_map_on_negative_side_uses_level_plus_two() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40)
            .unwrap()
            .with_threshold(10)
            .unwrap();
        let z = ComplexValue::new(-10.5, 0.2);
        let l = g.level_of(-11).unwrap();
        let (_, n) = induced_apply(&g, &strip_spec(), z).unwrap();
        assert_eq!(n, l + 2);
    }

    #[test]
    fn outside_the_set_is_rejected() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(5).unwrap();
        assert!(induced_apply(&g, &strip_spec(), ComplexValue::new(6.0, 4.0)).is_err());
        assert!(induced_apply(&g, &strip_spec(), ComplexValue::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn branch_record_inverts() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(5).unwrap();
        let z = ComplexValue::new(5.5, 0.3);
        let (steps, w) = branch_steps(&g, &strip_spec(), z, 1).unwrap();
        let back = pull_back_cell(&g, &steps, w).unwrap();
        assert!((back - z).norm() < 1e-9, "{back:?}");
    }

    #[test]
    fn certificate_passes_for_thin_strip() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(10).unwrap();
        let cert = verify_contraction(&strip_spec(), &g, 0.5, (-40, 40)).unwrap();
        assert!(cert.pass, "max {}", cert.max_sum);
        assert_eq!(cert.outcome, CertificateOutcome::Pass);
        // the flat part Σ_{d ≤ ρ} ρ^{−(1+δ)} leaves a rate of δ per column
        assert!((cert.decay_rate().unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn tiny_delta_is_not_achieved() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(10).unwrap();
        let cert = verify_contraction(&strip_spec(), &g, 0.01, (10, 20)).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.outcome, CertificateOutcome::NotAchieved);
    }

    #[test]
    fn cover_totals_shrink_within_budget() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(10).unwrap();
        let rep = cover_iterate(&strip_spec(), &g, 0.5, (10, 20), 6, 64, u64::MAX).unwrap();
        assert!(!rep.aborted);
        assert_eq!(rep.levels.len(), 7);
        for w in rep.levels.windows(2) {
            assert!(w[1].total <= w[0].total);
        }
        assert!(rep.within_budget(1), "{:?}", rep.levels);
    }

    #[test]
    fn cover_work_guard_aborts() {
        let g = negative_geometry(one(), 1.0, 3, 2, 40).unwrap().with_threshold(10).unwrap();
        let rep = cover_iterate(&strip_spec(), &g, 0.5, (10, 20), 6, 64, 10).unwrap();
        assert!(rep.aborted);
        assert_eq!(rep.levels.len(), 1);
    }
}
