//! CSV and JSON emission for sweeps.
//!
//! `rates.csv` columns:
//! `model,prior,estimator,alpha,d,eps,replicate,J,lambda,err_pred,err_param,seconds`.
//! Plot files `plot_<estimator>_<quantity>.csv` hold `log_eps,log_median_err,fit`.

use std::fs;
use std::path::Path;

use super::compare::CompareReport;
use super::sweep::{RateFit, RateRecord, SweepResult};
use crate::error::Result;

pub fn write_records(path: &Path, records: &[RateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plot(path: &Path, fit: &RateFit) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["log_eps", "log_median_err", "fit"])?;
    for &(x, y) in &fit.points {
        w.write_record([
            x.to_string(),
            y.to_string(),
            (fit.intercept + fit.slope * x).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn plot_name(fit: &RateFit) -> String {
    format!("plot_{}_{}.csv", fit.estimator, fit.quantity)
}

pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records(&dir.join("rates.csv"), &result.records)?;
    for f in &result.fits {
        write_plot(&dir.join(plot_name(f)), f)?;
    }
    fs::write(
        dir.join("fits.json"),
        serde_json::to_string_pretty(&result.fits)?,
    )?;
    Ok(())
}

pub fn write_compare(dir: &Path, report: &CompareReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records(&dir.join("rates.csv"), &report.records)?;
    write_plot(&dir.join(plot_name(&report.laplace)), &report.laplace)?;
    write_plot(&dir.join(plot_name(&report.gaussian)), &report.gaussian)?;
    let summary = serde_json::json!({
        "laplace": report.laplace,
        "gaussian": report.gaussian,
        "gap": report.gap,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "target_gap": report.target_gap,
        "rho": report.rho,
    });
    fs::write(
        dir.join("compare.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}
