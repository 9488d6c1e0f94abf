//! Command-line interface: `run`, `verify` and `sweep` subcommands.
//! Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.

use std::path::PathBuf;

use crate::config::{default_quota, SimConfig};
use crate::error::{Error, Result};

use super::emit::emit_results;
use super::verify::run_verify;
use super::{run_experiment, welfare_quantile};

const USAGE: &str = "\
specshare - spectrum-sharing matching-game simulator

USAGE:
  specshare run    [--config PATH] [--samples N] [--seed S]
                   [--solver greedy|mcmc] [--power uniform|full|qlearning]
                   [--out DIR]
  specshare verify [--seed S]
  specshare sweep  --vary k|l [--config PATH] [--samples N] [--seed S]
                   [--out DIR]
  specshare help

SUBCOMMANDS:
  run      Run a Monte Carlo experiment and write samples.csv, cdf.csv,
           trace.csv and summary.txt into --out (default: results).
           Flags override values from the --config file.
  verify   Run the stability and learning property suite on small
           instances; prints one pass/fail line per property.
  sweep    Sweep the operator count (--vary k over 3..6) or the RB count
           (--vary l over 5,8,10,14) and write sweep.csv with per-OP
           average welfare per grid point.

The SPECTRUM_SIM_WORKERS environment variable overrides the worker count.
";

/// Entry point used by the binary; returns the process exit code.
pub fn cli_main(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Infeasible(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(args: &[String]) -> Result<i32> {
    let Some(cmd) = args.first() else {
        print!("{USAGE}");
        return Ok(1);
    };
    match cmd.as_str() {
        "run" => cmd_run(&args[1..]),
        "verify" => cmd_verify(&args[1..]),
        "sweep" => cmd_sweep(&args[1..]),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(0)
        }
        other => {
            eprintln!("unknown subcommand '{other}'\n");
            print!("{USAGE}");
            Ok(1)
        }
    }
}

struct CommonFlags {
    cfg: SimConfig,
    out: PathBuf,
    vary: Option<String>,
}

fn parse_flags(args: &[String], allow_vary: bool) -> Result<CommonFlags> {
    // --config must be applied first so other flags override it
    let mut cfg = SimConfig::default();
    let mut it = args.iter();
    let mut pending: Vec<(String, String)> = Vec::new();
    let mut out = PathBuf::from("results");
    let mut vary = None;
    while let Some(flag) = it.next() {
        let mut value = |name: &str| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| Error::config(format!("missing value for {name}")))
        };
        match flag.as_str() {
            "--config" => {
                // an unreadable config file is a configuration error (exit 1)
                cfg = SimConfig::from_file(value("--config")?).map_err(|e| match e {
                    Error::Io { .. } => Error::Config(e.to_string()),
                    other => other,
                })?;
            }
            "--samples" => pending.push(("samples".into(), value("--samples")?)),
            "--seed" => pending.push(("seed".into(), value("--seed")?)),
            "--solver" => pending.push(("solver.kind".into(), value("--solver")?)),
            "--power" => pending.push(("power_mode".into(), value("--power")?)),
            "--workers" => pending.push(("workers".into(), value("--workers")?)),
            "--out" => out = PathBuf::from(value("--out")?),
            "--vary" if allow_vary => vary = Some(value("--vary")?),
            other => {
                return Err(Error::config(format!("unknown flag '{other}'\n\n{USAGE}")));
            }
        }
    }
    for (key, value) in pending {
        cfg.set(&key, &value)?;
    }
    Ok(CommonFlags { cfg, out, vary })
}

fn cmd_run(args: &[String]) -> Result<i32> {
    let flags = parse_flags(args, false)?;
    let res = run_experiment(&flags.cfg)?;
    let files = emit_results(&res, &flags.cfg, &flags.out)?;
    println!(
        "{} samples: mean welfare {:.6} bits/s/Hz, median {:.6}, per-OP {:.6}",
        res.samples.len(),
        res.mean_welfare,
        welfare_quantile(&res, 0.5),
        res.per_op_welfare
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(0)
}

fn cmd_verify(args: &[String]) -> Result<i32> {
    let mut seed = 7u64;
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--seed" => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::config("missing value for --seed"))?;
                seed = v.parse().map_err(|_| Error::config("invalid --seed"))?;
            }
            other => return Err(Error::config(format!("unknown flag '{other}'\n\n{USAGE}"))),
        }
    }
    let checks = run_verify(seed);
    let mut all_ok = true;
    for c in &checks {
        println!(
            "{}: {} ({})",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
        all_ok &= c.passed;
    }
    if all_ok {
        Ok(0)
    } else {
        Err(Error::Domain("verification suite failed".into()))
    }
}

/// Reconfigure for a grid point: K changes swap in the reference quota
/// vector, L changes broadcast the first capacity over the new RB count.
fn set_num_ops(cfg: &mut SimConfig, k: usize) {
    cfg.num_ops = k;
    cfg.rb_quota = default_quota(k);
    cfg.op_weights = vec![1.0; k];
}

fn set_num_rbs(cfg: &mut SimConfig, l: usize) {
    let b = cfg.rb_capacity.first().copied().unwrap_or(4);
    cfg.num_rbs = l;
    cfg.rb_capacity = vec![b; l];
}

fn cmd_sweep(args: &[String]) -> Result<i32> {
    let flags = parse_flags(args, true)?;
    let vary = flags
        .vary
        .ok_or_else(|| Error::config("sweep requires --vary k|l"))?;
    let mut rows = String::from("param,value,mean_welfare,per_op_welfare\n");
    match vary.as_str() {
        "k" => {
            for k in [3usize, 4, 5, 6] {
                let mut cfg = flags.cfg.clone();
                set_num_ops(&mut cfg, k);
                cfg.validate()?;
                let res = run_experiment(&cfg)?;
                rows.push_str(&format!(
                    "K,{k},{:.8e},{:.8e}\n",
                    res.mean_welfare, res.per_op_welfare
                ));
                println!("K={k}: per-OP welfare {:.6}", res.per_op_welfare);
            }
        }
        "l" => {
            for l in [5usize, 8, 10, 14] {
                let mut cfg = flags.cfg.clone();
                set_num_rbs(&mut cfg, l);
                cfg.validate()?;
                let res = run_experiment(&cfg)?;
                rows.push_str(&format!(
                    "L,{l},{:.8e},{:.8e}\n",
                    res.mean_welfare, res.per_op_welfare
                ));
                println!("L={l}: per-OP welfare {:.6}", res.per_op_welfare);
            }
        }
        other => {
            return Err(Error::config(format!(
                "--vary must be k or l, got '{other}'"
            )))
        }
    }
    std::fs::create_dir_all(&flags.out).map_err(|e| Error::io(&flags.out, e))?;
    let path = flags.out.join("sweep.csv");
    std::fs::write(&path, rows).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(0)
}
