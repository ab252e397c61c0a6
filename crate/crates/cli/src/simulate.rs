use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use serde::Serialize;

use zakharov::diagnostics::RunReport;
use zakharov::evolve::{run, RunOutput};
use zakharov::{GridKind, SimConfig, WaveState};

use crate::output::{say, unix_millis, RunDir, RunManifest};
use crate::{CmdResult, Failure, EXIT_BLOWUP, EXIT_OK};

/// Tolerated relative error of the fitted singular time on self-similar runs.
const TSTAR_TOLERANCE: f64 = 0.05;

#[derive(Serialize)]
struct SnapshotMeta<'a> {
    t: f64,
    index: usize,
    kind: GridKind,
    dim: usize,
    extent: f64,
    points: usize,
    config_hash: &'a str,
    columns: Vec<&'static str>,
}

fn write_snapshot(dir: &mut RunDir, index: usize, state: &WaveState, hash: &str) -> anyhow::Result<()> {
    let grid = state.grid();
    let mut columns: Vec<&'static str> = match grid.kind() {
        GridKind::Radial => vec!["r"],
        GridKind::Periodic => ["x", "y", "z"][..grid.dim()].to_vec(),
    };
    columns.extend(["psi_re", "psi_im", "n", "nt"]);
    let base = format!("snapshots/snapshot-{index:04}");
    {
        let mut w = dir.file(&format!("{base}.csv"))?;
        writeln!(w, "{}", columns.join(","))?;
        let ncoord = columns.len() - 4;
        let (psi, n, nt) = (state.psi.values(), state.n.values(), state.nt.values());
        for i in 0..grid.len() {
            let x = grid.node_position(i);
            for c in x.iter().take(ncoord) {
                write!(w, "{c:.10e},")?;
            }
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", psi[i].re, psi[i].im, n[i], nt[i])?;
        }
        w.flush()?;
    }
    let meta = SnapshotMeta {
        t: state.t,
        index,
        kind: grid.kind(),
        dim: grid.dim(),
        extent: grid.extent(),
        points: grid.points(),
        config_hash: hash,
        columns,
    };
    dir.write_json(&format!("{base}.json"), &meta)
}

fn build_report(config: &SimConfig, out: &RunOutput) -> Result<RunReport, Failure> {
    let dim = config.grid.dim;
    let blowup = out.stop.is_blowup();
    let mut rep = RunReport::analyze(&out.series, dim, &config.diagnostics.ell, blowup)?;
    if let (Some(expected), true) = (config.initial.t_star(), blowup) {
        match rep.entries.iter().find(|e| e.name == "t*").map(|e| e.value) {
            Some(fit) => {
                let rel = (fit - expected).abs() / expected.abs();
                rep.push(
                    "t* relative error",
                    rel,
                    format!("< {TSTAR_TOLERANCE}"),
                    Some(rel < TSTAR_TOLERANCE),
                );
            }
            None => rep.notes.push("no t* fit to compare with the configured t*".into()),
        }
    }
    rep.notes.insert(0, format!("stop reason: {}", out.stop.name()));
    rep.notes.extend(out.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(rep)
}

/// Result of one simulation, for printing after a sweep.
struct Done {
    code: u8,
    line: String,
}

fn simulate(root: &Path, path: &Path) -> Result<Done, Failure> {
    let started = unix_millis();
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    let config = SimConfig::from_toml_str(&text)
        .map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
    let name = run_name(path)?;
    let out = run(&config)?;
    let report = build_report(&config, &out)?;
    let hash = config.hash();
    let code = if out.stop.is_blowup() { EXIT_BLOWUP } else { EXIT_OK };

    let mut dir = RunDir::create(root, &name)?;
    dir.write_text("config.toml", &config.to_toml_string())?;
    {
        let mut w = dir.file("series.csv")?;
        out.series.write_csv(&mut w)?;
        w.flush()?;
    }
    for (i, s) in out.snapshots.iter().enumerate() {
        write_snapshot(&mut dir, i, s, &hash)?;
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "config = {}", path.display());
    let _ = writeln!(summary, "config hash = {hash}");
    let _ = writeln!(summary, "initial = {}", config.initial.name());
    let _ = writeln!(summary, "stop = {}", out.stop.name());
    let _ = writeln!(summary, "steps = {}", out.steps);
    let _ = writeln!(summary, "final t = {:.12e}", out.final_state.t);
    let _ = writeln!(summary, "samples = {}", out.series.len());
    summary.push('\n');
    summary.push_str(&report.to_text());
    dir.write_text("report.txt", &summary)?;
    {
        let mut w = dir.file("report.csv")?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    let target = dir.commit(RunManifest {
        command: format!("simulate --config {}", path.display()),
        config_hash: Some(hash),
        started_unix_ms: started,
        finished_unix_ms: 0,
        outputs: Vec::new(),
        stop_reason: Some(out.stop.name().to_string()),
        exit_code: code,
    })?;
    let checks = if report.all_pass() { "all checks pass" } else { "some checks FAIL" };
    Ok(Done {
        code,
        line: format!(
            "{}: stop = {}, t = {:.6}, steps = {}, {checks}; outputs in {}",
            name,
            out.stop.name(),
            out.final_state.t,
            out.steps,
            target.display()
        ),
    })
}

fn run_name(path: &Path) -> Result<String, Failure> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .ok_or_else(|| Failure::config(anyhow!("cannot name a run after {}", path.display())))
}

pub fn run_one(root: &Path, path: &Path) -> CmdResult {
    let done = simulate(root, path)?;
    say(&format!("{}\n", done.line));
    let report = root.join(run_name(path)?).join("report.txt");
    if let Ok(text) = std::fs::read_to_string(report) {
        say(&text);
    }
    Ok(done.code)
}

/// Config files named by `inputs`, directories expanded to their sorted
/// `*.toml` entries.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "toml"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Failure::config(anyhow!("--sweep found no config files")));
    }
    let mut names = BTreeSet::new();
    for f in &files {
        if !names.insert(run_name(f)?) {
            return Err(Failure::config(anyhow!(
                "two sweep configs share the run name {:?}",
                run_name(f)?
            )));
        }
    }
    Ok(files)
}

/// Runs every config on a pool of `jobs` threads. Each run writes only its
/// own directory. The exit code is the largest of the individual codes.
pub fn run_sweep(root: &Path, inputs: &[PathBuf], jobs: Option<usize>) -> CmdResult {
    let files = expand(inputs)?;
    let jobs = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, files.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Done, Failure>>>> =
        Mutex::new((0..files.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let r = simulate(root, &files[i]);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let mut code = EXIT_OK;
    for (f, r) in files.iter().zip(results.into_inner().expect("no worker panicked")) {
        match r.expect("every index was claimed") {
            Ok(d) => {
                say(&format!("{}\n", d.line));
                code = code.max(d.code);
            }
            Err(e) => {
                eprintln!("zak: {}: error: {:#}", f.display(), e.error);
                code = code.max(e.code);
            }
        }
    }
    Ok(code)
}
