//! Subcommand implementations: run the core engine, then emit CSV series,
//! a summary JSON, and the embedded run manifest for each artifact set.
//!
//! Entropy series are stored in bits inside the core; the configured base
//! only scales entropy-valued columns at emission time, so extracted time
//! scales and velocities are identical across bases.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use entprop::{
    fit_velocity, run_protocol, run_thermalization, ti_dispersion, ti_vmax, ti_vmax_numeric,
    FitMode, ModelParams, ProtocolConfig, ProtocolRun, VelocityFit,
};
use serde_json::{json, Map, Value};

use crate::config::{
    echo_dispersion, echo_propagate, echo_sweep, echo_thermalize, ConfigDoc, Overrides,
};
use crate::emit::{fmt_num, manifest, write_csv, write_json};
use crate::{CliError, CliResult};

pub struct Ctx {
    pub out_dir: std::path::PathBuf,
    pub threads: usize,
    pub overrides: Overrides,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

pub fn cmd_thermalize(doc: &ConfigDoc, ctx: &Ctx) -> CliResult<()> {
    let cfg = crate::config::resolve_thermalize(doc, &ctx.overrides)?;
    let run = run_thermalization(&cfg)?;
    let factor = cfg.base.from_bits_factor();

    let mz = &run.magnetization.time_series;
    let ee = &run.half_chain_entropy;
    let csv_path = ctx.out_dir.join("thermalize.csv");
    write_csv(
        &csv_path,
        "t,M_z,S_R",
        (0..mz.len()).map(|k| {
            format!(
                "{},{},{}",
                fmt_num(mz.time(k)),
                fmt_num(mz.values()[k]),
                fmt_num(ee.values()[k] * factor)
            )
        }),
    )
    .map_err(io_err(&csv_path))?;

    let rep = &run.magnetization;
    let rec = &run.entropy_recurrence;
    let reason = if !rec.flagged {
        Value::Null
    } else if rec.t_enter.is_none() {
        json!("plateau band never entered (t* not found)")
    } else {
        json!("plateau band re-entered")
    };
    let outputs = vec!["thermalize.csv".to_string(), "thermalize.json".to_string()];
    let derived = json!({
        "e0": rep.e0,
        "shell_count": rep.shell_count,
        "shell_half_width": rep.shell_half_width,
    });
    let doc_out = json!({
        "manifest": manifest("thermalize", echo_thermalize(&cfg), derived, &outputs),
        "averages": {
            "observable": rep.observable,
            "diagonal": rep.diagonal_avg,
            "microcanonical": rep.microcanonical_avg,
            "shell_count": rep.shell_count,
            "shell_half_width": rep.shell_half_width,
            "e0": rep.e0,
        },
        "recurrence": {
            "flagged": rec.flagged,
            "reason": reason,
            "plateau": rec.plateau * factor,
            "t_enter": rec.t_enter,
            "t_exit": rec.t_exit,
            "t_reenter": rec.t_reenter,
        },
    });
    let json_path = ctx.out_dir.join("thermalize.json");
    write_json(&json_path, &doc_out).map_err(io_err(&json_path))?;
    println!(
        "wrote thermalize.csv, thermalize.json to {}",
        ctx.out_dir.display()
    );
    Ok(())
}

/// Serialize a velocity fit, or record why it is absent.
fn fit_entry(map: &mut Map<String, Value>, key: &str, points: &[(f64, f64)], mode: FitMode) {
    match fit_velocity(points, mode) {
        Ok(fit) => {
            map.insert(key.to_string(), serde_json::to_value(&fit).unwrap());
        }
        Err(e) => {
            map.insert(key.to_string(), Value::Null);
            map.insert(format!("{key}_reason"), json!(e.to_string()));
        }
    }
}

/// Insert an optional time scale as a value or as a null plus reason.
fn time_entry(map: &mut Map<String, Value>, key: &str, value: Option<f64>, reason: &str) {
    match value {
        Some(t) => {
            map.insert(key.to_string(), json!(t));
        }
        None => {
            map.insert(key.to_string(), Value::Null);
            map.insert(format!("{key}_reason"), json!(reason));
        }
    }
}

/// Emit the full propagation artifact set into `dir`. Shared between
/// `propagate` and each sweep point, so a single-element sweep produces
/// files byte-identical to a direct `propagate` run.
fn emit_propagate(cfg: &ProtocolConfig, run: &ProtocolRun, dir: &Path) -> CliResult<VelocityFit> {
    let factor = cfg.base.from_bits_factor();
    let mut outputs = Vec::new();
    for rec in &run.records {
        let name = format!("propagate_d{}.csv", rec.d);
        let path = dir.join(&name);
        write_csv(
            &path,
            "t,S_a,S_b,dS,I_0R",
            (0..rec.s_a.len()).map(|k| {
                let (a, b) = (rec.s_a.values()[k], rec.s_b.values()[k]);
                format!(
                    "{},{},{},{},{}",
                    fmt_num(rec.s_a.time(k)),
                    fmt_num(a * factor),
                    fmt_num(b * factor),
                    fmt_num((b - a) * factor),
                    fmt_num(rec.mi.values()[k] * factor)
                )
            }),
        )
        .map_err(io_err(&path))?;
        outputs.push(name);
    }
    outputs.push("propagate.json".to_string());

    let th = &cfg.thresholds;
    let records: Vec<Value> = run
        .records
        .iter()
        .map(|rec| {
            let mut m = Map::new();
            m.insert("d".into(), json!(rec.d));
            m.insert("ell".into(), json!(rec.ell));
            time_entry(
                &mut m,
                "t_star",
                rec.t_star,
                "entropy stayed below (1 - delta_sat) * plateau on the grid",
            );
            time_entry(
                &mut m,
                "t_diff",
                rec.t_diff,
                "no sustained |S_b - S_a| > eps_split over dwell consecutive samples",
            );
            time_entry(
                &mut m,
                "t_mi",
                rec.t_mi,
                "no sustained I(0|R) > eps_mi over dwell consecutive samples",
            );
            m.insert(
                "growth_rate".into(),
                rec.growth_rate.map_or(Value::Null, |g| json!(g * factor)),
            );
            Value::Object(m)
        })
        .collect();

    let mut ee_fits = Map::new();
    let ee_points = run.t_diff_points();
    fit_entry(&mut ee_fits, "all", &ee_points, FitMode::All);
    fit_entry(&mut ee_fits, "even_only", &ee_points, FitMode::EvenOnly);
    fit_entry(&mut ee_fits, "odd_only", &ee_points, FitMode::OddOnly);
    let mut mi_fits = Map::new();
    fit_entry(&mut mi_fits, "all", &run.t_mi_points(), FitMode::All);

    let ee_all = fit_velocity(&ee_points, FitMode::All);
    let t_star_d2 = run.records.iter().find(|r| r.d == 2).and_then(|r| r.t_star);
    let mut summary = Map::new();
    match (&ee_all, t_star_d2) {
        (Ok(fit), Some(ts)) => {
            summary.insert("scrambling_length".into(), json!(fit.velocity * ts));
        }
        (Err(e), _) => {
            summary.insert("scrambling_length".into(), Value::Null);
            summary.insert("scrambling_length_reason".into(), json!(e.to_string()));
        }
        (_, None) => {
            summary.insert("scrambling_length".into(), Value::Null);
            summary.insert(
                "scrambling_length_reason".into(),
                json!("t* not found at d = 2"),
            );
        }
    }

    let doc_out = json!({
        "manifest": manifest(
            "propagate",
            echo_propagate(cfg),
            json!({ "e0": run.e0 }),
            &outputs,
        ),
        "records": records,
        "fits": { "ee": ee_fits, "mi": mi_fits },
        "summary": summary,
        "thresholds": {
            "delta_sat": th.delta_sat,
            "eps_split": th.eps_split,
            "eps_mi": th.eps_mi,
            "dwell": th.dwell,
        },
    });
    let json_path = dir.join("propagate.json");
    write_json(&json_path, &doc_out).map_err(io_err(&json_path))?;
    ee_all.map_err(CliError::from)
}

pub fn cmd_propagate(doc: &ConfigDoc, ctx: &Ctx) -> CliResult<()> {
    let cfg = crate::config::resolve_propagate(doc, &ctx.overrides)?;
    let run = run_protocol(&cfg)?;
    // A missing velocity fit is reported inside the JSON, not an error.
    let _ = emit_propagate(&cfg, &run, &ctx.out_dir);
    println!(
        "wrote {} series files and propagate.json to {}",
        run.records.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

struct PointOutcome {
    hx: f64,
    dir: String,
    fit: Option<VelocityFit>,
    error: Option<String>,
}

fn run_point(cfg: &ProtocolConfig, dir: &Path) -> Result<Option<VelocityFit>, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let run = run_protocol(cfg).map_err(|e| e.to_string())?;
    match emit_propagate(cfg, &run, dir) {
        Ok(fit) => Ok(Some(fit)),
        // Emission succeeded but no fit was possible; the point still counts.
        Err(CliError::Numerical(_)) | Err(CliError::Usage(_)) => Ok(None),
    }
}

pub fn cmd_sweep(doc: &ConfigDoc, ctx: &Ctx) -> CliResult<()> {
    let hx_list = doc
        .hx_list
        .clone()
        .ok_or_else(|| CliError::Usage("sweep requires an hx_list in the config".into()))?;
    if hx_list.is_empty() {
        return Err(CliError::Usage("hx_list must not be empty".into()));
    }
    let base_cfg = crate::config::resolve_propagate(doc, &ctx.overrides)?;

    let configs: Vec<ProtocolConfig> = hx_list
        .iter()
        .map(|&hx| {
            let mut cfg = base_cfg.clone();
            cfg.model.hx = hx;
            cfg
        })
        .collect();
    for cfg in &configs {
        cfg.validate()?;
    }

    // Worker pool over sweep points; results land in per-index slots so
    // output order follows the input order whatever the scheduling.
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<PointOutcome>>> =
        (0..configs.len()).map(|_| Mutex::new(None)).collect();
    let workers = ctx.threads.max(1).min(configs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let hx = hx_list[i];
                let dir = format!("hx_{hx}");
                let outcome = match run_point(&configs[i], &ctx.out_dir.join(&dir)) {
                    Ok(fit) => PointOutcome {
                        hx,
                        dir,
                        fit,
                        error: None,
                    },
                    Err(msg) => PointOutcome {
                        hx,
                        dir,
                        fit: None,
                        error: Some(msg),
                    },
                };
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let outcomes: Vec<PointOutcome> = results
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .unwrap()
                .expect("every point was processed")
        })
        .collect();

    // One summary row per point with the fitted velocity and the
    // quasi-particle maximum side by side. A point whose run or fit failed
    // keeps its row with NaN in the fitted columns; the JSON carries the
    // reason.
    let csv_path = ctx.out_dir.join("sweep.csv");
    write_csv(
        &csv_path,
        "h_x,v_fit,v_quasiparticle,r_squared",
        outcomes.iter().map(|o| {
            let (v, r2) = o
                .fit
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |fit| (fit.velocity, fit.r_squared));
            format!(
                "{},{},{},{}",
                fmt_num(o.hx),
                fmt_num(v),
                fmt_num(ti_vmax(o.hx.abs())),
                fmt_num(r2)
            )
        }),
    )
    .map_err(io_err(&csv_path))?;

    let points: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "h_x": o.hx,
                "dir": o.dir,
                "velocity": o.fit.as_ref().map(|f| f.velocity),
                "r_squared": o.fit.as_ref().map(|f| f.r_squared),
                "v_quasiparticle": ti_vmax(o.hx.abs()),
                "error": o.error,
            })
        })
        .collect();
    let mut outputs = vec!["sweep.csv".to_string(), "sweep.json".to_string()];
    outputs.extend(outcomes.iter().map(|o| o.dir.clone()));
    let doc_out = json!({
        "manifest": manifest(
            "sweep",
            echo_sweep(&base_cfg, &hx_list),
            json!({}),
            &outputs,
        ),
        "points": points,
    });
    let json_path = ctx.out_dir.join("sweep.json");
    write_json(&json_path, &doc_out).map_err(io_err(&json_path))?;
    let failed = outcomes.iter().filter(|o| o.error.is_some()).count();
    println!(
        "swept {} points ({} failed) into {}",
        outcomes.len(),
        failed,
        ctx.out_dir.display()
    );
    Ok(())
}

pub fn cmd_dispersion(doc: &ConfigDoc, ctx: &Ctx) -> CliResult<()> {
    let p: ModelParams = doc.model.resolve(10)?;
    if p.j_nnn != 0.0 || p.hz != 0.0 || p.j != 1.0 {
        return Err(CliError::Usage(
            "the dispersion table applies to the transverse-field chain only \
             (j = 1, j_nnn = 0, h_z = 0)"
                .into(),
        ));
    }
    let hx = p.hx.abs();
    let k_points = doc.k_points.unwrap_or(512);
    if k_points < 2 {
        return Err(CliError::Usage("k_points must be at least 2".into()));
    }

    // Momentum grid over [0, pi] inclusive; the group velocity column uses
    // the same central difference as the numeric maximum.
    let h = 1e-6;
    let csv_path = ctx.out_dir.join("dispersion.csv");
    write_csv(
        &csv_path,
        "k,epsilon,group_velocity",
        (0..k_points).map(|i| {
            let k = std::f64::consts::PI * i as f64 / (k_points - 1) as f64;
            let g = (ti_dispersion(hx, k + h) - ti_dispersion(hx, k - h)) / (2.0 * h);
            format!(
                "{},{},{}",
                fmt_num(k),
                fmt_num(ti_dispersion(hx, k)),
                fmt_num(g)
            )
        }),
    )
    .map_err(io_err(&csv_path))?;

    let (closed, numeric) = (ti_vmax(hx), ti_vmax_numeric(hx));
    let outputs = vec!["dispersion.csv".to_string(), "dispersion.json".to_string()];
    let doc_out = json!({
        "manifest": manifest(
            "dispersion",
            echo_dispersion(&p, k_points),
            json!({ "v_max_closed_form": closed, "v_max_numeric": numeric }),
            &outputs,
        ),
        "v_max": { "closed_form": closed, "numeric": numeric },
    });
    let json_path = ctx.out_dir.join("dispersion.json");
    write_json(&json_path, &doc_out).map_err(io_err(&json_path))?;
    println!(
        "h_x = {}: v_max closed form {}, numeric {} ({} grid rows)",
        hx, closed, numeric, k_points
    );
    Ok(())
}
