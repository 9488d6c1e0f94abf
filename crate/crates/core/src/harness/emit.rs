//! Result persistence: per-sample, CDF and trace tables as headered CSV
//! (floats at 9 significant digits) plus a plain-text summary echoing the
//! configuration. Output bytes are a pure function of (config, seed).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::SimConfig;
use crate::error::{Error, Result};

use super::ExperimentResult;

/// Format a float with 9 significant digits.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Write `samples.csv`, `cdf.csv`, `trace.csv` and `summary.txt` under
/// `out_dir`; returns the written paths.
pub fn emit_results(
    res: &ExperimentResult,
    cfg: &SimConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let samples_path = out_dir.join("samples.csv");
    {
        let mut s = String::from("sample_id,seed,final_S,swaps,iterations\n");
        for t in &res.samples {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                t.sample_id,
                t.seed,
                sig9(t.final_s),
                t.swaps_applied,
                t.proposals
            ));
        }
        write_atomic(&samples_path, &s)?;
        written.push(samples_path);
    }

    let cdf_path = out_dir.join("cdf.csv");
    {
        let mut s = String::from("welfare,cum_prob\n");
        for &(w, p) in &res.cdf {
            s.push_str(&format!("{},{}\n", sig9(w), sig9(p)));
        }
        write_atomic(&cdf_path, &s)?;
        written.push(cdf_path);
    }

    let trace_path = out_dir.join("trace.csv");
    {
        let mut s = String::from("sample_id,iteration,S\n");
        for t in &res.samples {
            for &(it, v) in &t.per_iteration_s {
                s.push_str(&format!("{},{},{}\n", t.sample_id, it, sig9(v)));
            }
        }
        write_atomic(&trace_path, &s)?;
        written.push(trace_path);
    }

    let summary_path = out_dir.join("summary.txt");
    {
        let mut s = String::new();
        s.push_str("# experiment summary\n");
        s.push_str(&format!("samples = {}\n", res.samples.len()));
        s.push_str(&format!("mean_welfare = {}\n", sig9(res.mean_welfare)));
        s.push_str(&format!("per_op_welfare = {}\n", sig9(res.per_op_welfare)));
        s.push_str(&format!(
            "median_welfare = {}\n",
            sig9(super::welfare_quantile(res, 0.5))
        ));
        s.push_str("\n# config echo\n");
        s.push_str(&cfg.to_config_string());
        write_atomic(&summary_path, &s)?;
        written.push(summary_path);
    }

    Ok(written)
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(content.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}
