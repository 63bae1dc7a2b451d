//! Data-parallel drivers. Each work item is computed by the same serial
//! code as in `expdyn-core`, so results do not depend on the worker count.

use rayon::prelude::*;

use expdyn_core::coding::ExternalAddress;
use expdyn_core::invariant::{check_grid, pixel_depths, ExitField, ThinSetSpec, Window};
use expdyn_core::rays::{trace_ray as trace_serial, Ray};
use expdyn_core::{ComplexValue, Result};

/// Name of the variable holding the worker count.
pub const THREADS_VAR: &str = "EXPDYN_THREADS";

/// Worker count from `EXPDYN_THREADS`, else the machine parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Grid sampling of the depth-`n` approximant on `threads` workers.
pub fn sample_lambda_set_with(
    threads: usize,
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    window: Window,
    nx: usize,
    ny: usize,
    depth: usize,
) -> Result<ExitField> {
    check_grid(nx, ny, depth)?;
    let pixels: Vec<(u32, u32)> = with_pool(threads, || {
        (0..nx * ny)
            .into_par_iter()
            .map(|i| pixel_depths(lambda, spec, window.node(i % nx, i / nx, nx, ny), depth))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let (optimistic, conservative) = pixels.into_iter().unzip();
    Ok(ExitField {
        window,
        nx,
        ny,
        depth,
        optimistic,
        conservative,
    })
}

/// [`sample_lambda_set_with`] using [`thread_count`] workers.
pub fn sample_lambda_set(
    lambda: ComplexValue,
    spec: &ThinSetSpec,
    window: Window,
    nx: usize,
    ny: usize,
    depth: usize,
) -> Result<ExitField> {
    sample_lambda_set_with(thread_count(), lambda, spec, window, nx, ny, depth)
}

/// Traces the `t` values independently and reassembles them in order.
/// Errors are reported for the smallest failing `t`, as in the serial
/// tracer.
pub fn trace_ray_with(
    threads: usize,
    lambda: ComplexValue,
    s: &ExternalAddress,
    t_values: &[f64],
    depth: usize,
    tol: f64,
) -> Result<Ray> {
    // validates the whole grid (ordering, depth, tolerance) up front
    if t_values.len() < 2 {
        return trace_serial(lambda, s, t_values, depth, tol);
    }
    trace_serial(lambda, s, &t_values[..0], depth, tol)?;
    if t_values.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || t_values.windows(2).any(|w| w[0] >= w[1]) {
        return trace_serial(lambda, s, t_values, depth, tol);
    }
    let parts: Vec<Ray> = with_pool(threads, || {
        t_values
            .par_iter()
            .map(|t| trace_serial(lambda, s, std::slice::from_ref(t), depth, tol))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let samples: Vec<_> = parts.into_iter().flat_map(|r| r.samples).collect();
    let residual = samples.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(Ray {
        address: s.clone(),
        samples,
        depth,
        residual,
    })
}

pub fn trace_ray(lambda: ComplexValue, s: &ExternalAddress, t_values: &[f64], depth: usize, tol: f64) -> Result<Ray> {
    trace_ray_with(thread_count(), lambda, s, t_values, depth, tol)
}
