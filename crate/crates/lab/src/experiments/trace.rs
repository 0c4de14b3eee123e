//! Driver generation and curve tracing for the CLI, plus the capacity and
//! boundary-derivative diagnostics.

use nradial_core::dyson::SimOptions;
use nradial_core::loewner::{
    generate_driver, trace_curves, DriverError, DrivingLaw, DrivingPaths, SlitMapChain, TraceSet,
};
use nradial_core::AngleConfig;

pub fn parse_law(name: &str) -> Option<DrivingLaw> {
    match name {
        "independent" => Some(DrivingLaw::Independent),
        "locally-independent" => Some(DrivingLaw::LocallyIndependent),
        "n-radial" => Some(DrivingLaw::NRadial),
        _ => None,
    }
}

pub struct TraceRun {
    pub driving: DrivingPaths,
    pub traces: TraceSet,
}

pub fn run_trace(
    law: DrivingLaw,
    n: usize,
    a: f64,
    t_end: f64,
    opts: &SimOptions,
    stream: u64,
) -> Result<TraceRun, DriverError> {
    let cfg0 = AngleConfig::equally_spaced(n);
    let driving = generate_driver(law, &cfg0, a, t_end, opts, stream)?;
    let traces = trace_curves(&driving);
    Ok(TraceRun { driving, traces })
}

/// `|log g_t'(0) − 2ant|` for a stochastic driver.
pub fn capacity_deviation(driving: &DrivingPaths) -> f64 {
    let r = SlitMapChain::from_driving(driving).capacity_report();
    (r.measured_log_deriv - r.expected).abs()
}

/// Boundary-derivative cross-check at up to `want` boundary points that
/// survive the flow: the accumulated cosecant integral vs a central finite
/// difference of the covering map.  Returns per-point absolute log-scale
/// discrepancies.
pub fn boundary_derivative_errors(driving: &DrivingPaths, want: usize) -> Vec<f64> {
    let chain = SlitMapChain::from_driving(driving);
    let fd_step = 1e-5;
    let mut errs = Vec::new();
    // candidate points spread over the covering circle (period π)
    let candidates = 73usize;
    for k in 0..candidates {
        if errs.len() >= want {
            break;
        }
        let zeta = (k as f64 + 0.31) * std::f64::consts::PI / candidates as f64;
        let (Some(flow), Some(up), Some(dn)) = (
            chain.evaluate_boundary(zeta),
            chain.evaluate_boundary(zeta + fd_step),
            chain.evaluate_boundary(zeta - fd_step),
        ) else {
            continue;
        };
        let fd = (up.h - dn.h) / (2.0 * fd_step);
        if fd <= 0.0 {
            continue;
        }
        // skip points that hug a slit: the FD stencil must be well inside
        // the analytic region, which shows up as a huge derivative
        if flow.csc2_integral * chain.a() > 8.0 {
            continue;
        }
        let integral_log = -chain.a() * flow.csc2_integral;
        errs.push((fd.ln() - integral_log).abs());
    }
    errs
}
