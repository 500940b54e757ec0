//! Output files: summaries, sidecars and all-or-nothing writes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

/// Files rendered in memory and written together. Either every file lands
/// or none does.
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.add(name, to_toml(value)?.into_bytes());
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file to a temporary name, then renames them into place.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |temps: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in temps {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                cleanup(&temps);
                return Err(CliError::io(tmp, e));
            }
            temps.push((tmp, target));
        }
        let mut done: Vec<PathBuf> = Vec::new();
        for (i, (tmp, target)) in temps.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, target) {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                cleanup(&temps[i..]);
                return Err(CliError::io(target.clone(), e));
            }
            done.push(target.clone());
        }
        Ok(done)
    }
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| CliError::Config(format!("cannot serialise output: {e}")))
}

/// Sidecar describing a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub format_version: u32,
    pub rows: usize,
    pub n_agents: usize,
    pub n_axes: usize,
    pub u_bar_1: Vec<f64>,
    /// Effective configuration, after command-line overrides.
    pub config: ScenarioConfig,
}

impl TraceMeta {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}

/// Sidecar path for a trace: `trace.csv` -> `trace.meta.toml`.
pub fn meta_path(trace: &Path) -> PathBuf {
    let stem = trace.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    trace.with_file_name(format!("{stem}.meta.toml"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub final_error: f64,
    /// Largest `e(t)` on the last quarter of the horizon.
    pub max_late_error: f64,
    pub late_window: [f64; 2],
    pub k_p: f64,
    pub k_v: f64,
    pub lambda2_used: f64,
    pub lambda2_topology: f64,
    pub lambda2_overridden: bool,
    pub max_abs_state: f64,
    pub center_max_residual: f64,
    pub steps: usize,
    pub rows: usize,
    pub warnings: Vec<String>,
}

/// A matplotlib script that plots the files written by `simulate`:
/// 3D position and velocity paths with end-of-run snapshots, the formation
/// center against its decomposition, `e(t)` and the center residual.
pub fn plot_script(n_agents: usize, n_axes: usize) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot trace.csv and center.csv from this directory."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
N_AGENTS = {n_agents}
AXES = {axes:?}


def load(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    return {{h: [float(r[k]) for r in data] for k, h in enumerate(header)}}


trace = load("trace.csv")
center = load("center.csv")
t = trace["t"]
axes3 = AXES[:3]


def paths(ax, block, title):
    for i in range(1, N_AGENTS + 1):
        cols = [trace[f"{{block}}{{i}}_{{a}}"] for a in axes3]
        if len(cols) == 3:
            ax.plot(*cols, lw=0.8)
            ax.scatter(*[c[-1] for c in cols], s=20)
        else:
            ax.plot(t, cols[0], lw=0.8)
    if len(axes3) == 3:
        # closed polygon through the final snapshot
        last = [[trace[f"{{block}}{{i}}_{{a}}"][-1] for i in range(1, N_AGENTS + 1)] for a in axes3]
        ax.plot(*[c + c[:1] for c in last], "k--", lw=0.8)
    ax.set_title(title)


fig = plt.figure(figsize=(13, 8))
three_d = len(axes3) == 3
kw = {{"projection": "3d"}} if three_d else {{}}
paths(fig.add_subplot(2, 3, 1, **kw), "p", "positions")
paths(fig.add_subplot(2, 3, 2, **kw), "v", "velocities")

ax = fig.add_subplot(2, 3, 3)
for a in axes3:
    ax.plot(center["t"], center[f"kappa_p_{{a}}"], label=f"kappa_p_{{a}}")
    ax.plot(center["t"], center[f"kappa_hat_p_{{a}}"], "--", label=f"c0 + cz + cf ({{a}})")
ax.set_title("formation center (position)")
ax.legend(fontsize="x-small")

ax = fig.add_subplot(2, 3, 4)
for a in axes3:
    ax.plot(center["t"], center[f"c0_p_{{a}}"], label=f"c0 {{a}}")
    ax.plot(center["t"], center[f"cz_p_{{a}}"], label=f"cz {{a}}")
    ax.plot(center["t"], center[f"cf_p_{{a}}"], label=f"cf {{a}}")
ax.set_title("center components (position)")
ax.legend(fontsize="x-small", ncol=3)

ax = fig.add_subplot(2, 3, 5)
ax.semilogy(t, trace["e"])
ax.set_title("formation error e(t)")
ax.set_xlabel("t [s]")

ax = fig.add_subplot(2, 3, 6)
ax.semilogy(center["t"], [max(r, 1e-18) for r in center["r"]])
ax.set_title("center residual r(t)")
ax.set_xlabel("t [s]")

fig.tight_layout()
fig.savefig(os.path.join(HERE, "plot.png"), dpi=120)
plt.show()
"#,
        axes = formation_core::export::axis_names(n_axes),
    )
}
