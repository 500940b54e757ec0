//! The subcommands, independent of argument parsing.

use std::path::{Path, PathBuf};

use formation_core::center::{decompose, verify_center, CenterCheck, CenterDecomposition};
use formation_core::eso::residual_gain;
use formation_core::export::{fmt_num, read_trace_csv, write_center_csv, write_trace_csv, TRACE_FORMAT_VERSION};
use formation_core::simulator::run;
use formation_core::{design, DesignReport, DisturbanceSpec, Scenario, SimulationTrace};
use serde::Serialize;

use crate::config::{ScenarioConfig, SigmaConfig};
use crate::error::{CliError, Result};
use crate::output::{meta_path, plot_script, to_toml, Staged, Summary, TraceMeta};

/// RK4 on the observer error dynamics (double pole at `-sigma`) loses
/// accuracy quickly once `sigma dt` exceeds this.
pub const OBSERVER_STEP_LIMIT: f64 = 0.28;

#[derive(Debug, Serialize)]
struct DesignFile<'a> {
    label: &'a str,
    report: &'a DesignReport,
}

fn scenario_and_report(cfg: &ScenarioConfig) -> Result<(Scenario, DesignReport)> {
    let scenario = cfg.to_scenario()?;
    let report = design(&scenario.design_input())?;
    Ok((scenario, report))
}

pub fn design_toml(cfg: &ScenarioConfig, report: &DesignReport) -> Result<String> {
    to_toml(&DesignFile { label: &cfg.label, report })
}

/// Runs the design and prints the report; with `out`, also writes `design.toml`.
pub fn design_command(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<String> {
    let (_, report) = scenario_and_report(cfg)?;
    let text = design_toml(cfg, &report)?;
    if let Some(dir) = out {
        let mut staged = Staged::new();
        staged.add("design.toml", text.clone().into_bytes());
        staged.commit(dir)?;
    }
    Ok(text)
}

/// Everything produced by one simulation, before anything is written.
#[derive(Debug)]
pub struct Simulated {
    pub config: ScenarioConfig,
    pub report: DesignReport,
    pub trace: SimulationTrace,
    pub center: CenterDecomposition,
    pub summary: Summary,
}

pub fn simulate_config(cfg: &ScenarioConfig) -> Result<Simulated> {
    let (scenario, report) = scenario_and_report(cfg)?;
    let trace = run(&scenario, &report)?;
    let center = decompose(&trace, &report.spectrum.u_bar_1, &scenario.plant, &scenario.formation);

    let mut warnings = report.warnings.clone();
    let dt = scenario.integrator.dt;
    let sigma_max = scenario.sigma.iter().copied().fold(0.0, f64::max);
    if sigma_max * dt > OBSERVER_STEP_LIMIT {
        warnings.push(format!(
            "dt = {dt} is large for observer bandwidth {sigma_max}: keep dt <= {:.3e}",
            OBSERVER_STEP_LIMIT / sigma_max
        ));
    }
    if !scenario.compensation {
        warnings.push("observer compensation disabled".into());
    }
    let end = trace.samples.last().map_or(0.0, |s| s.t);
    let late_window = [0.75 * end, end];
    let summary = Summary {
        label: cfg.label.clone(),
        final_error: trace.final_error(),
        max_late_error: trace.max_error_between(late_window[0], late_window[1]),
        late_window,
        k_p: report.riccati.k_row.k_p,
        k_v: report.riccati.k_row.k_v,
        lambda2_used: report.lambda2_used,
        lambda2_topology: report.spectrum.lambda2_re,
        lambda2_overridden: report.lambda2_overridden,
        max_abs_state: trace.max_abs_state(),
        center_max_residual: center.residual.iter().copied().fold(0.0, f64::max),
        steps: scenario.integrator.steps(),
        rows: trace.samples.len(),
        warnings,
    };
    Ok(Simulated { config: cfg.clone(), report, trace, center, summary })
}

pub fn render_simulation(sim: &Simulated, plot: bool) -> Result<Staged> {
    let mut staged = Staged::new();
    staged.add("design.toml", design_toml(&sim.config, &sim.report)?.into_bytes());
    let mut trace_csv = Vec::new();
    write_trace_csv(&sim.trace, &mut trace_csv)?;
    staged.add("trace.csv", trace_csv);
    staged.add_toml(
        "trace.meta.toml",
        &TraceMeta {
            format_version: TRACE_FORMAT_VERSION,
            rows: sim.trace.samples.len(),
            n_agents: sim.trace.n_agents,
            n_axes: sim.trace.n_axes,
            u_bar_1: sim.report.spectrum.u_bar_1.clone(),
            config: sim.config.clone(),
        },
    )?;
    let mut center_csv = Vec::new();
    write_center_csv(&sim.center, sim.trace.n_axes, &mut center_csv)?;
    staged.add("center.csv", center_csv);
    staged.add_toml("summary.toml", &sim.summary)?;
    if plot {
        staged.add("plot.py", plot_script(sim.trace.n_agents, sim.trace.n_axes).into_bytes());
    }
    Ok(staged)
}

/// Designs, simulates and writes the output directory. Returns the summary
/// rendered as TOML.
pub fn simulate_command(cfg: &ScenarioConfig, out: &Path, plot: bool) -> Result<String> {
    let sim = simulate_config(cfg)?;
    render_simulation(&sim, plot)?.commit(out)?;
    to_toml(&sim.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub angular_frequency: f64,
    /// Worst `|1 - G(j w)|` over agents.
    pub residual_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentObserverRow {
    pub agent: usize,
    /// Largest `|w - z|` over axes in the late window.
    pub measured: f64,
    /// `sum |a_k| |1 - G(j w_k)|` over the agent's terms, worst axis.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverAnalysis {
    pub compensation: bool,
    pub window: [f64; 2],
    pub measured_max: f64,
    pub predicted_max: f64,
    pub frequencies: Vec<FrequencyRow>,
    pub agents: Vec<AgentObserverRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub label: String,
    pub rows: usize,
    pub center: CenterCheck,
    /// `max_t ||cz(t)||_2`: the part of the center driven by `z - w`.
    pub cz_max: f64,
    pub observer: ObserverAnalysis,
}

/// Steady-state bound on `|w - z|` for one axis signal.
fn predicted_residual(d: &DisturbanceSpec, i: usize, axis: usize, sigma: f64, compensation: bool) -> f64 {
    d.agents[i][axis]
        .terms
        .iter()
        .map(|s| {
            if compensation {
                // offsets sit at w = 0 where the residual gain vanishes
                s.amplitude.abs() * residual_gain(sigma, s.angular_frequency.abs()).norm()
            } else {
                s.amplitude.abs() + s.offset.abs()
            }
        })
        .sum()
}

fn observer_analysis(trace: &SimulationTrace, scenario: &Scenario) -> ObserverAnalysis {
    let end = trace.samples.last().map_or(0.0, |s| s.t);
    let window = [0.75 * end, end];
    let late: Vec<_> = trace.samples.iter().filter(|s| s.t >= window[0] - 1e-9).collect();
    let d = &scenario.disturbance;
    let agents: Vec<AgentObserverRow> = (0..trace.n_agents)
        .map(|i| {
            let measured =
                late.iter().flat_map(|s| s.omega(i).iter().zip(s.z(i)).map(|(w, z)| (w - z).abs())).fold(0.0, f64::max);
            let predicted = (0..trace.n_axes)
                .map(|a| predicted_residual(d, i, a, scenario.sigma[i], scenario.compensation))
                .fold(0.0, f64::max);
            AgentObserverRow { agent: i + 1, measured, predicted }
        })
        .collect();
    let frequencies = d
        .frequencies()
        .into_iter()
        .map(|w| FrequencyRow {
            angular_frequency: w,
            residual_gain: scenario.sigma.iter().map(|&s| residual_gain(s, w).norm()).fold(0.0, f64::max),
        })
        .collect();
    ObserverAnalysis {
        compensation: scenario.compensation,
        window,
        measured_max: agents.iter().map(|a| a.measured).fold(0.0, f64::max),
        predicted_max: agents.iter().map(|a| a.predicted).fold(0.0, f64::max),
        frequencies,
        agents,
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub trace: PathBuf,
    pub meta: Option<PathBuf>,
    pub eps: f64,
    pub t_check: f64,
    pub out: Option<PathBuf>,
}

/// Re-reads a trace, recomputes the center decomposition and compares the
/// observer residual against its frequency-domain prediction. Writes
/// `residual.csv` and `analysis.toml` next to the trace unless `out` is set.
pub fn analyze_command(opts: &AnalyzeOptions) -> Result<String> {
    if !(opts.eps > 0.0) || !opts.eps.is_finite() {
        return Err(CliError::Config(format!("--eps: must be positive, got {}", opts.eps)));
    }
    let meta_file = opts.meta.clone().unwrap_or_else(|| meta_path(&opts.trace));
    let meta = TraceMeta::load(&meta_file)?;
    if meta.format_version != TRACE_FORMAT_VERSION {
        return Err(CliError::Format(format!(
            "{}: trace format version {} is not supported (expected {TRACE_FORMAT_VERSION})",
            meta_file.display(),
            meta.format_version
        )));
    }
    let scenario = meta
        .config
        .to_scenario()
        .map_err(|e| CliError::Format(format!("{}: embedded config: {e}", meta_file.display())))?;
    if scenario.graph.n_agents() != meta.n_agents
        || scenario.plant.n_axes != meta.n_axes
        || meta.u_bar_1.len() != meta.n_agents
    {
        return Err(CliError::Format(format!("{}: shape fields disagree with the config", meta_file.display())));
    }
    let file = std::fs::File::open(&opts.trace).map_err(|e| CliError::io(&opts.trace, e))?;
    let trace =
        read_trace_csv(std::io::BufReader::new(file), meta.n_agents, meta.n_axes, &scenario.formation, Some(meta.rows))
            .map_err(|e| CliError::Format(format!("{}: {e}", opts.trace.display())))?;

    let center = decompose(&trace, &meta.u_bar_1, &scenario.plant, &scenario.formation);
    let analysis = Analysis {
        label: meta.config.label.clone(),
        rows: trace.samples.len(),
        center: verify_center(&center, opts.eps, opts.t_check),
        cz_max: center.cz.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max),
        observer: observer_analysis(&trace, &scenario),
    };

    let mut residual = String::from("t,r\n");
    for (t, r) in center.times.iter().zip(&center.residual) {
        residual.push_str(&format!("{},{}\n", fmt_num(*t), fmt_num(*r)));
    }
    let text = to_toml(&analysis)?;
    let dir = match &opts.out {
        Some(d) => d.clone(),
        None => opts.trace.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut staged = Staged::new();
    staged.add("residual.csv", residual.into_bytes());
    staged.add("analysis.toml", text.clone().into_bytes());
    staged.commit(&dir)?;
    Ok(text)
}

pub fn sigma_dir_name(sigma: f64) -> String {
    format!("sigma_{sigma}")
}

/// One simulation per observer bandwidth, run in parallel. Each run writes
/// its own subdirectory; `sweep.csv` collects the headline numbers. Returns
/// the CSV text, or the first failure after the CSV is written.
pub fn sweep_command(cfg: &ScenarioConfig, sigmas: &[f64], out: &Path) -> Result<String> {
    if sigmas.is_empty() {
        return Err(CliError::Config("--sigma: at least one value is required".into()));
    }
    let configs: Vec<ScenarioConfig> = sigmas
        .iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.observer.sigma = SigmaConfig::Uniform(s);
            c.label = format!("{}_{}", cfg.label, sigma_dir_name(s));
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;

    let results: Vec<Result<Summary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(sigmas)
            .map(|(c, &s)| {
                scope.spawn(move || {
                    let sim = simulate_config(c)?;
                    render_simulation(&sim, false)?.commit(&out.join(sigma_dir_name(s)))?;
                    Ok(sim.summary)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    let mut csv = String::from("sigma,status,final_error,max_late_error,max_abs_state,center_max_residual\n");
    for (s, r) in sigmas.iter().zip(&results) {
        match r {
            Ok(sum) => csv.push_str(&format!(
                "{s},ok,{},{},{},{}\n",
                fmt_num(sum.final_error),
                fmt_num(sum.max_late_error),
                fmt_num(sum.max_abs_state),
                fmt_num(sum.center_max_residual)
            )),
            Err(e) => csv.push_str(&format!("{s},{},,,,\n", e.class())),
        }
    }
    let mut staged = Staged::new();
    staged.add("sweep.csv", csv.clone().into_bytes());
    staged.commit(out)?;
    if let Some(err) = results.into_iter().find_map(|r| r.err()) {
        return Err(err);
    }
    Ok(csv)
}
