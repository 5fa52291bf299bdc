//! Batch front-end: metric spec files in, JSON reports and convergence
//! tables out.

pub mod commands;
pub mod output;
pub mod spec;

/// Process exit codes.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success: converged, hypotheses satisfied, boost within tolerance |
/// | 1 | input error (spec, chart, expression, file) |
/// | 2 | the mass does not converge |
/// | 3 | hypotheses violated |
/// | 4 | boost deviation above tolerance |
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const DIVERGENCE: i32 = 2;
    pub const HYPOTHESES_VIOLATED: i32 = 3;
    pub const BOOST_TOLERANCE: i32 = 4;
}

/// Size the global worker pool from `ALH_THREADS` (`0` or unset: automatic).
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let n = match value {
        None => return Ok(()),
        Some(s) => s.trim().parse::<usize>().map_err(|_| format!("ALH_THREADS = '{s}' is not a thread count"))?,
    };
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}
