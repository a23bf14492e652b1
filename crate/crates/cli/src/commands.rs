//! Experiment orchestration shared by the CLI subcommands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use spikepath::analysis::{
    audit_induction, compare_to_oracle, contour_lines, rasterize_field, run_time_range,
    OracleReport, Polyline, SpikeField,
};
use spikepath::engine::{run_until_converged, IterationRecord, RunConfig, RunResult, TraceEvent};
use spikepath::jsonutil::{canonicalize_floats, fnv1a64, to_canonical_json};
use spikepath::network::{
    generate_reachable, network_from_json, network_json, shortest_path_node_set, Environment,
    GeneratedNetwork, NetworkError, NodeId, SpatialNetwork,
};
use spikepath::protocol::InhibitionMode;

use crate::config::{ExperimentConfig, PlotConfig, SweepSpec};
use crate::svg::{render_panel, PanelInputs};
use crate::CliError;

fn map_network_err(err: NetworkError) -> CliError {
    match err {
        NetworkError::RetriesExhausted { .. } | NetworkError::Unreachable { .. } => {
            CliError::Unreachable(err.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<(String, Value), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid JSON in {}: {e}", path.display())))?;
    Ok((text, value))
}

/// Network generation plus everything needed to run and verify it.
pub struct PreparedRun {
    pub env: Environment,
    pub gen: GeneratedNetwork,
    pub run_cfg: RunConfig,
    pub network_text: String,
    pub network_hash: String,
}

pub fn prepare(exp: &ExperimentConfig) -> Result<PreparedRun, CliError> {
    exp.validate()?;
    let env = exp.resolve_environment()?;
    let source = exp.source.to_pick(&env)?;
    let targets = exp
        .targets
        .iter()
        .map(|t| t.to_pick(&env))
        .collect::<Result<Vec<_>, _>>()?;
    let gen = generate_reachable(&env, &exp.gen, source, &targets).map_err(map_network_err)?;
    let network_text = to_canonical_json(network_json(&gen.net, &exp.gen, gen.used_seed));
    let network_hash = fnv1a64(network_text.as_bytes());
    let mut run_cfg = RunConfig::new(
        gen.net.clone(),
        exp.timing,
        exp.inhibition,
        gen.source,
        gen.targets.clone(),
    );
    if let Some(m) = exp.max_iterations {
        run_cfg.max_iterations = m;
    }
    if let Some(t) = exp.t_max_per_iteration {
        run_cfg.t_max_per_iteration = t;
    }
    Ok(PreparedRun {
        env,
        gen,
        run_cfg,
        network_text,
        network_hash,
    })
}

/// Assemble the `run.json` document.
fn run_document(
    exp: &ExperimentConfig,
    prepared: &PreparedRun,
    result: &RunResult,
) -> Value {
    json!({
        "config": {
            "environment": prepared.env.to_json(),
            "gen_params": exp.gen,
            "timing": exp.timing,
            "inhibition": exp.inhibition,
            "source": prepared.gen.source,
            "targets": prepared.gen.targets,
            "max_iterations": prepared.run_cfg.max_iterations,
            "t_max_per_iteration": prepared.run_cfg.t_max_per_iteration,
            "network_hash": prepared.network_hash,
            "seed_provenance": {
                "requested_seed": prepared.gen.requested_seed,
                "used_seed": prepared.gen.used_seed,
                "retries": prepared.gen.retries,
            },
        },
        "iterations": result.iterations,
        "converged": result.converged,
        "convergence_iteration": result.convergence_iteration,
        "readout_spiking": result.readout_spiking,
    })
}

fn trace_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in trace {
        let mut value = serde_json::to_value(event).expect("trace event");
        canonicalize_floats(&mut value);
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}

pub struct RunOutcome {
    pub converged: bool,
    pub result: RunResult,
    pub prepared: PreparedRun,
}

/// Full single-run pipeline: generate, simulate, emit artifacts.
pub fn execute_run(
    exp: &ExperimentConfig,
    out_dir: &Path,
    with_trace: bool,
) -> Result<RunOutcome, CliError> {
    let prepared = prepare(exp)?;
    write_file(&out_dir.join("network.json"), &prepared.network_text)?;

    let mut trace = Vec::new();
    let result = run_until_converged(
        &prepared.run_cfg,
        with_trace.then_some(&mut trace),
    )
    .map_err(|e| match e {
        spikepath::engine::EngineError::Unreachable { .. } => CliError::Unreachable(e.to_string()),
        other => CliError::Failure(other.to_string()),
    })?;

    write_file(
        &out_dir.join("run.json"),
        &to_canonical_json(run_document(exp, &prepared, &result)),
    )?;
    write_file(
        &out_dir.join("metrics.csv"),
        &spikepath::analysis::metrics_csv(&result.iterations),
    )?;
    if with_trace {
        write_file(&out_dir.join("trace.jsonl"), &trace_jsonl(&trace))?;
    }
    if exp.plot.render {
        render_iterations(
            &prepared.gen.net,
            &result.iterations,
            prepared.gen.source,
            &prepared.gen.targets,
            &exp.plot,
            exp.gen.d_max,
            out_dir,
        )?;
    }
    Ok(RunOutcome {
        converged: result.converged,
        result,
        prepared,
    })
}

/// Render one SVG per iteration record. Contour levels are fixed across the
/// run (run-wide spike-time range) so panels stay comparable.
pub fn render_iterations(
    net: &SpatialNetwork,
    records: &[IterationRecord],
    source: NodeId,
    targets: &[NodeId],
    plot: &PlotConfig,
    d_max: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let bbox = net.environment().bbox;
    let radius = plot.influence_radius.unwrap_or(d_max);
    let time_range = run_time_range(records).unwrap_or((0.0, 1.0));
    let mut written = Vec::new();
    for record in records {
        let field = SpikeField::from_record(net, record);
        let (grid, contours): (Option<_>, Vec<(f64, Vec<Polyline>)>) = if field.samples.is_empty()
        {
            (None, Vec::new())
        } else {
            let grid = rasterize_field(&field, bbox, plot.resolution, radius);
            let contours = contour_lines(&grid, plot.n_levels, time_range).unwrap_or_default();
            (Some(grid), contours)
        };
        let title = match record.ttt {
            Some(ttt) => format!(
                "iteration {}   TTT {:.1} ms",
                record.index,
                spikepath::jsonutil::canon_f64(ttt)
            ),
            None => format!("iteration {}   TTT -", record.index),
        };
        let svg = render_panel(&PanelInputs {
            net,
            record,
            source,
            targets,
            grid: grid.as_ref(),
            contours: &contours,
            time_range,
            title,
        });
        let path = out_dir.join(format!("iter_{:03}.svg", record.index));
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

// ============================================================================
// Subcommand entry points
// ============================================================================

pub fn cmd_generate(exp: &ExperimentConfig, out_dir: &Path) -> Result<i32, CliError> {
    let prepared = prepare(exp)?;
    let path = out_dir.join("network.json");
    write_file(&path, &prepared.network_text)?;
    println!(
        "wrote {} ({} nodes, {} edges, seed {})",
        path.display(),
        prepared.gen.net.len(),
        prepared.gen.net.edges().len(),
        prepared.gen.used_seed
    );
    Ok(0)
}

pub fn cmd_run(exp: &ExperimentConfig, out_dir: &Path, with_trace: bool) -> Result<i32, CliError> {
    let outcome = execute_run(exp, out_dir, with_trace)?;
    let result = &outcome.result;
    match result.convergence_iteration {
        Some(k) => println!(
            "converged after {k} iterations; readout holds {} nodes; artifacts in {}",
            result.readout_spiking.len(),
            out_dir.display()
        ),
        None => println!(
            "did not converge within {} iterations; artifacts in {}",
            result.iterations.len(),
            out_dir.display()
        ),
    }
    Ok(if outcome.converged { 0 } else { 2 })
}

pub fn cmd_verify(run_path: &Path, network_path: &Path, out_dir: &Path) -> Result<i32, CliError> {
    let (network_text, network_value) = read_json(network_path)?;
    let (_, run_value) = read_json(run_path)?;

    let recorded_hash = run_value["config"]["network_hash"]
        .as_str()
        .ok_or_else(|| CliError::Config("run file lacks config.network_hash".into()))?;
    let actual_hash = fnv1a64(network_text.as_bytes());
    if recorded_hash != actual_hash {
        return Err(CliError::Config(format!(
            "network hash mismatch: run file expects {recorded_hash}, file is {actual_hash}"
        )));
    }

    let net = network_from_json(&network_value).map_err(|e| CliError::Config(e.to_string()))?;
    let source: NodeId = serde_json::from_value(run_value["config"]["source"].clone())
        .map_err(|e| CliError::Config(format!("bad source in run file: {e}")))?;
    let targets: Vec<NodeId> = serde_json::from_value(run_value["config"]["targets"].clone())
        .map_err(|e| CliError::Config(format!("bad targets in run file: {e}")))?;
    let mode: InhibitionMode = serde_json::from_value(run_value["config"]["inhibition"].clone())
        .map_err(|e| CliError::Config(format!("bad inhibition mode in run file: {e}")))?;
    let records: Vec<IterationRecord> = serde_json::from_value(run_value["iterations"].clone())
        .map_err(|e| CliError::Config(format!("bad iterations in run file: {e}")))?;
    let readout: BTreeSet<NodeId> = serde_json::from_value::<Vec<NodeId>>(
        run_value["readout_spiking"].clone(),
    )
    .map_err(|e| CliError::Config(format!("bad readout in run file: {e}")))?
    .into_iter()
    .collect();

    let mut oracle: BTreeSet<NodeId> = BTreeSet::new();
    for &t in &targets {
        let set = shortest_path_node_set(&net, source, t).map_err(map_network_err)?;
        oracle.extend(set);
    }
    let report = compare_to_oracle(&readout, &oracle);
    write_file(
        &out_dir.join("oracle.json"),
        &to_canonical_json(serde_json::to_value(&report).expect("oracle report")),
    )?;
    println!(
        "oracle comparison: exact_match={} jaccard={:.6} missing={} extra={}",
        report.exact_match,
        report.jaccard,
        report.missing.len(),
        report.extra.len()
    );

    // The convergence argument (and so the audit's lower bound) is stated
    // for a single target; multi-target runs get the oracle report only.
    let audit_ok = if targets.len() == 1 {
        let audit = audit_induction(&records, &net, source, targets[0], mode);
        for entry in &audit.entries {
            if !entry.pass {
                println!(
                    "audit violation at iteration {}: missing={:?} too_far={:?}",
                    entry.index, entry.missing, entry.too_far
                );
            }
        }
        println!(
            "induction audit over {} iterations: {}",
            audit.entries.len(),
            if audit.pass { "pass" } else { "FAIL" }
        );
        audit.pass
    } else {
        println!("induction audit skipped (multi-target run)");
        true
    };

    Ok(if report.exact_match && audit_ok { 0 } else { 1 })
}

fn oracle_report_for(outcome: &RunOutcome) -> Result<OracleReport, CliError> {
    let mut oracle: BTreeSet<NodeId> = BTreeSet::new();
    for &t in &outcome.prepared.gen.targets {
        oracle.extend(
            shortest_path_node_set(&outcome.prepared.gen.net, outcome.prepared.gen.source, t)
                .map_err(map_network_err)?,
        );
    }
    let readout: BTreeSet<NodeId> = outcome.result.readout_spiking.iter().copied().collect();
    Ok(compare_to_oracle(&readout, &oracle))
}

pub fn cmd_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<i32, CliError> {
    spec.validate()?;
    let rows: Mutex<Vec<Option<Value>>> = Mutex::new(vec![None; spec.seeds.len()]);
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = spec.parallelism.min(spec.seeds.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= spec.seeds.len() {
                    break;
                }
                let seed = spec.seeds[i];
                let mut exp = spec.base.clone();
                exp.gen.seed = seed;
                let seed_dir = out_dir.join(format!("seed_{seed}"));
                let started = std::time::Instant::now();
                let row = match execute_run(&exp, &seed_dir, false) {
                    Ok(outcome) => {
                        let report = oracle_report_for(&outcome);
                        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                        match report {
                            Ok(report) => json!({
                                "seed": seed,
                                "converged": outcome.converged,
                                "iterations": outcome.result.iterations.len(),
                                "exact_match": report.exact_match,
                                "jaccard": report.jaccard,
                                "wall_ms": wall_ms,
                                "error": Value::Null,
                            }),
                            Err(e) => json!({"seed": seed, "error": e.to_string()}),
                        }
                    }
                    Err(e) => json!({"seed": seed, "error": e.to_string()}),
                };
                rows.lock().expect("rows lock")[i] = Some(row);
            });
        }
    });

    let rows: Vec<Value> = rows
        .into_inner()
        .expect("rows lock")
        .into_iter()
        .map(|r| r.expect("every seed produced a row"))
        .collect();
    let any_error = rows.iter().any(|r| !r["error"].is_null());
    let n_converged = rows
        .iter()
        .filter(|r| r["converged"].as_bool() == Some(true))
        .count();
    let n_exact = rows
        .iter()
        .filter(|r| r["exact_match"].as_bool() == Some(true))
        .count();
    let summary = json!({
        "seeds": spec.seeds,
        "rows": rows,
        "aggregate": {
            "n_seeds": spec.seeds.len(),
            "n_converged": n_converged,
            "n_exact": n_exact,
        },
    });
    write_file(&out_dir.join("summary.json"), &to_canonical_json(summary))?;
    println!(
        "sweep done: {}/{} converged, {}/{} exact; summary in {}",
        n_converged,
        spec.seeds.len(),
        n_exact,
        spec.seeds.len(),
        out_dir.join("summary.json").display()
    );
    Ok(if any_error { 1 } else { 0 })
}

pub fn cmd_plot(
    run_path: &Path,
    network_path: &Path,
    out_dir: &Path,
    resolution: Option<usize>,
    n_levels: Option<usize>,
) -> Result<i32, CliError> {
    let (network_text, network_value) = read_json(network_path)?;
    let (_, run_value) = read_json(run_path)?;
    let recorded_hash = run_value["config"]["network_hash"]
        .as_str()
        .ok_or_else(|| CliError::Config("run file lacks config.network_hash".into()))?;
    if recorded_hash != fnv1a64(network_text.as_bytes()) {
        return Err(CliError::Config("network hash mismatch".into()));
    }

    let env = Environment::from_json(&run_value["config"]["environment"])
        .map_err(|e| CliError::Config(e.to_string()))?;
    let bare = network_from_json(&network_value).map_err(|e| CliError::Config(e.to_string()))?;
    let net = SpatialNetwork::from_parts(
        bare.positions().to_vec(),
        bare.adjacency().to_vec(),
        env,
    );
    let records: Vec<IterationRecord> = serde_json::from_value(run_value["iterations"].clone())
        .map_err(|e| CliError::Config(format!("bad iterations in run file: {e}")))?;
    let source: NodeId = serde_json::from_value(run_value["config"]["source"].clone())
        .map_err(|e| CliError::Config(format!("bad source in run file: {e}")))?;
    let targets: Vec<NodeId> = serde_json::from_value(run_value["config"]["targets"].clone())
        .map_err(|e| CliError::Config(format!("bad targets in run file: {e}")))?;
    let d_max = run_value["config"]["gen_params"]["d_max"].as_f64().unwrap_or(0.15);

    let mut plot = PlotConfig {
        render: true,
        ..PlotConfig::default()
    };
    if let Some(r) = resolution {
        plot.resolution = r;
    }
    if let Some(l) = n_levels {
        plot.n_levels = l;
    }
    let written = render_iterations(&net, &records, source, &targets, &plot, d_max, out_dir)?;
    println!("wrote {} panels to {}", written.len(), out_dir.display());
    Ok(0)
}
