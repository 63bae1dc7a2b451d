//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use expdyn_core::boxcount::{box_count_shifted, geometric_scales};
use expdyn_core::coding::ExternalAddress;
use expdyn_core::dynamics::{check_supergrowth, iterate_orbit};
use expdyn_core::induced::{cover_iterate, negative_geometry, verify_contraction};
use expdyn_core::invariant::{ThinSetSpec, Window};
use expdyn_core::rays::DEFAULT_TOL;
use expdyn_core::search::{dimension_bound_search_with, SearchConfig};
use expdyn_core::ComplexValue;

use crate::error::{AppError, AppResult, EXIT_NOT_ACHIEVED, EXIT_OK};
use crate::formats::{self, Palette, Reading};
use crate::parallel;
use crate::report::{self, BoxCountJson, CertificateJson, CoverJson, SearchJson, SupergrowthJson};

#[derive(Parser, Debug)]
#[command(name = "expdyn", version, about = "Numerical dynamics of z ↦ λe^z")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Iterate z ↦ λe^z from a starting point.
    Orbit(OrbitArgs),
    /// Check α_{n+1} ≥ c·e^{α_n} along the orbit of 0.
    Supergrowth(SupergrowthArgs),
    /// Trace a dynamic ray.
    Ray(RayArgs),
    /// Sample the points whose orbits stay in a thin set.
    Lambdaset(LambdasetArgs),
    /// Verify the contraction condition of the induced map.
    Certify(CertifyArgs),
    /// Box-counting slope of a point sample.
    Boxdim(BoxdimArgs),
    /// Scan (l0, M, δ) grids for a contraction certificate.
    Searchbound(SearchArgs),
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: ComplexValue,
    #[arg(long)]
    pub steps: usize,
    /// Escape threshold on log|z|.
    #[arg(long, default_value_t = 1e8)]
    pub escape: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SupergrowthArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub steps: usize,
    /// First index at which the inequality is required.
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RayArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    /// E.g. `1,0...const` or `1,-2...period`.
    #[arg(long, allow_hyphen_values = true)]
    pub address: String,
    /// `T0:T1:STEP`.
    #[arg(long, value_parser = parse_t_range)]
    pub t: Grid,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LambdasetArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    /// `strip:A,B` or `sym:P`.
    #[arg(long, value_parser = parse_set, allow_hyphen_values = true)]
    pub set: ThinSetSpec,
    /// `X0,Y0,X1,Y1`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Window,
    /// `NX,NY`.
    #[arg(long, value_parser = parse_res)]
    pub res: (usize, usize),
    #[arg(long)]
    pub depth: usize,
    /// Count undecidable steps as exits.
    #[arg(long)]
    pub conservative: bool,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// 8-bit P5/P6 rendering.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, default_value = "gray")]
    pub palette: String,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    #[arg(long, value_parser = parse_set, allow_hyphen_values = true)]
    pub set: ThinSetSpec,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub m: i64,
    #[arg(long)]
    pub l0: usize,
    /// Columns `M ≤ |r| ≤ RMAX` are certified.
    #[arg(long)]
    pub rmax: i64,
    /// Only the positive columns.
    #[arg(long)]
    pub positive_only: bool,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Also iterate the cover sums to this depth.
    #[arg(long)]
    pub cover_depth: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub branch_cap: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoxdimArgs {
    /// CSV with `re,im` columns (or the first two columns).
    #[arg(long)]
    pub points: PathBuf,
    /// `E0:E1:FACTOR`, scales `E0, E0·FACTOR, …` down to `E1`.
    #[arg(long, value_parser = parse_scales)]
    pub scales: Grid,
    /// Shift the grid anchor by this fraction of ε.
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: ComplexValue,
    #[arg(long, value_parser = parse_set, allow_hyphen_values = true)]
    pub set: ThinSetSpec,
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_grid: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub l0_grid: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 20)]
    pub r_span: i64,
    #[arg(long)]
    pub negative_side: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// An increasing or decreasing list of reals given as a range.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"))
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v = s.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {s:?}"));
    }
    Ok(v)
}

pub fn parse_complex(s: &str) -> Result<ComplexValue, String> {
    let v = parse_list(s, 2)?;
    Ok(ComplexValue::new(v[0], v[1]))
}

pub fn parse_window(s: &str) -> Result<Window, String> {
    let v = parse_list(s, 4)?;
    Window::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

pub fn parse_res(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected NX,NY, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("not a count: {x:?}"));
    Ok((p(a)?, p(b)?))
}

/// `strip:A,B` or `sym:P`.
pub fn parse_set(s: &str) -> Result<ThinSetSpec, String> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("expected KIND:PARAMS, got {s:?}"))?;
    match kind {
        "strip" => {
            let v = parse_list(rest, 2)?;
            ThinSetSpec::strip(v[0], v[1]).map_err(|e| e.to_string())
        }
        "sym" => ThinSetSpec::symmetric_strip(parse_f64(rest)?).map_err(|e| e.to_string()),
        _ => Err(format!("unknown set kind {kind:?}")),
    }
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v = s.split(':').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected A:B:C, got {s:?}")),
    }
}

/// `T0:T1:STEP` as `T0 + i·STEP ≤ T1`.
pub fn parse_t_range(s: &str) -> Result<Grid, String> {
    let (t0, t1, step) = parse_triple(s)?;
    if !(step > 0.0) || !(t1 >= t0) {
        return Err("need STEP > 0 and T1 ≥ T0".into());
    }
    let n = ((t1 - t0) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=n).map(|i| t0 + i as f64 * step).collect()))
}

pub fn parse_scales(s: &str) -> Result<Grid, String> {
    let (e0, e1, f) = parse_triple(s)?;
    geometric_scales(e0, e1, f).map(Grid).map_err(|e| e.to_string())
}

fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> AppResult<()> {
    match path {
        Some(p) => formats::write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

/// Runs one command and returns the process exit status.
pub fn run(cli: Cli) -> AppResult<i32> {
    match cli.command {
        Command::Orbit(a) => {
            let orbit = iterate_orbit(a.lambda, a.z, a.steps, a.escape)?;
            emit(&a.csv, &formats::orbit_csv(&orbit))?;
            if a.csv.is_some() {
                match orbit.escape_index {
                    Some(n) => println!("escaped at step {n}"),
                    None => println!("no escape within {} steps", a.steps),
                }
            }
            Ok(EXIT_OK)
        }
        Command::Supergrowth(a) => {
            let r = check_supergrowth(a.lambda, a.c, a.steps, a.n_min)?;
            let json = report::to_json(SupergrowthJson::new(a.lambda, a.c, a.steps, &r))?;
            match &a.json {
                Some(p) => {
                    formats::write_file(p, json.as_bytes())?;
                    println!("holds: {}  c_max: {}", r.holds, r.c_max);
                }
                None => print!("{json}"),
            }
            Ok(EXIT_OK)
        }
        Command::Ray(a) => {
            let s: ExternalAddress = a
                .address
                .parse()
                .map_err(|e: expdyn_core::Error| AppError::Parse(format!("address: {e}")))?;
            let ray = parallel::trace_ray(a.lambda, &s, &a.t.0, a.depth, a.tol)?;
            emit(&a.csv, &formats::ray_csv(&ray))?;
            Ok(EXIT_OK)
        }
        Command::Lambdaset(a) => {
            let palette: Palette = a.palette.parse()?;
            let (nx, ny) = a.res;
            let field = parallel::sample_lambda_set(a.lambda, &a.set, a.window, nx, ny, a.depth)?;
            let reading = if a.conservative {
                Reading::Conservative
            } else {
                Reading::Optimistic
            };
            if let Some(p) = &a.pgm {
                formats::write_file(p, &formats::field_pgm16(&field, reading))?;
            }
            if let Some(p) = &a.csv {
                formats::write_file(p, &formats::field_csv(&field, reading))?;
            }
            if let Some(p) = &a.image {
                formats::render_field(&field, reading, palette, p)?;
            }
            let top = field.survivor_value();
            let opt = field.optimistic.iter().filter(|d| **d == top).count();
            let con = field.conservative.iter().filter(|d| **d == top).count();
            println!("survivors: {opt} optimistic, {con} conservative of {}", nx * ny);
            Ok(EXIT_OK)
        }
        Command::Certify(a) => {
            let geometry = negative_geometry(a.lambda, a.c, a.l0, a.levels, a.rmax)?.with_threshold(a.m)?;
            let lo = if a.positive_only { a.m } else { -a.rmax };
            let cert = verify_contraction(&a.set, &geometry, a.delta, (lo, a.rmax))?;
            let mut doc = serde_json::to_value(CertificateJson::new(a.lambda, &cert))?;
            if let Some(depth) = a.cover_depth {
                let cover = cover_iterate(&a.set, &geometry, a.delta, (a.m, a.rmax), depth, a.branch_cap, u64::MAX)?;
                doc["cover"] = serde_json::to_value(CoverJson::from(&cover))?;
            }
            let json = report::to_json(doc)?;
            match &a.json {
                Some(p) => {
                    formats::write_file(p, json.as_bytes())?;
                    println!("pass: {}  max_sum: {}", cert.pass, cert.max_sum);
                }
                None => print!("{json}"),
            }
            Ok(if cert.pass { EXIT_OK } else { EXIT_NOT_ACHIEVED })
        }
        Command::Boxdim(a) => {
            let points = formats::read_points(&a.points)?;
            let r = box_count_shifted(&points, &a.scales.0, a.shift)?;
            let json = report::to_json(BoxCountJson::new(&r, points.len()))?;
            match &a.json {
                Some(p) => {
                    formats::write_file(p, json.as_bytes())?;
                    println!("slope: {}  r2: {}", r.slope, r.r2);
                }
                None => print!("{json}"),
            }
            Ok(EXIT_OK)
        }
        Command::Searchbound(a) => {
            let config = SearchConfig {
                c: a.c,
                r_span: a.r_span,
                negative_side: a.negative_side,
                ..SearchConfig::default()
            };
            let r = dimension_bound_search_with(a.lambda, &a.set, &a.delta_grid, &a.m_grid, &a.l0_grid, &config)?;
            let json = report::to_json(SearchJson::from(&r))?;
            match &a.json {
                Some(p) => {
                    formats::write_file(p, json.as_bytes())?;
                    match r.bound_achieved {
                        Some(b) => println!("bound achieved: {b}"),
                        None => println!("no certificate in grid"),
                    }
                }
                None => print!("{json}"),
            }
            Ok(if r.bound_achieved.is_some() {
                EXIT_OK
            } else {
                EXIT_NOT_ACHIEVED
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_ranges() {
        assert_eq!(parse_complex("1,-0.5").unwrap(), ComplexValue::new(1.0, -0.5));
        assert!(parse_complex("1").is_err());
        assert_eq!(parse_t_range("2:3:0.5").unwrap().0, vec![2.0, 2.5, 3.0]);
        assert_eq!(parse_t_range("2:10:1").unwrap().0.len(), 9);
        assert!(parse_t_range("2:1:1").is_err());
        assert_eq!(parse_res("64,32").unwrap(), (64, 32));
        assert!(parse_set("strip:0,3.14").is_ok());
        assert!(parse_set("disk:1").is_err());
        assert_eq!(parse_scales("0.25:0.00390625:0.5").unwrap().0.len(), 7);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
