//! Sweep the compatible-triangle preset and print the fitted verdict.
//!
//! Run with: cargo run --release -p martenscale-core --example triangle_verdict

use martenscale::scenario::{self, SweepSource};
use martenscale::{fit_dichotomy, run_sweep, SweepSpec, Verdict};

fn main() -> martenscale::Result<()> {
    let doc = scenario::preset("compatible_triangle")?;
    let spec = SweepSpec::from_scenario("compatible_triangle", &doc)?;
    let report = run_sweep(&spec)?;
    let fit = fit_dichotomy(&report, SweepSource::Construction)?;
    assert_eq!(fit.verdict, Verdict::Linear);
    println!(
        "verdict {:?}: c_lin {:.3} (rms {:.4}) vs c_log {:.3} (rms {:.4})",
        fit.verdict, fit.c_lin, fit.rms_lin, fit.c_log, fit.rms_log
    );
    Ok(())
}
