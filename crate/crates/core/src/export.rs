//! CSV files for traces and center decompositions.
//!
//! Trace columns: `t`, then for each agent `i` (1-based) the blocks
//! `p{i}_{axis}`, `v{i}_{axis}`, `u{i}_{axis}`, `w{i}_{axis}`, `z{i}_{axis}`,
//! then `kappa_p_{axis}`, `kappa_v_{axis}` and finally `e`. Axes are named
//! `x`, `y`, `z` (or `a1`, `a2`, ... beyond three). Numbers carry nine
//! significant digits.

use std::io::{Read, Write};

use crate::center::CenterDecomposition;
use crate::error::{Error, Result};
use crate::signals::FormationSpec;
use crate::simulator::{deviation_norm, SimulationTrace, TraceSample};

/// Version of the trace column layout.
pub const TRACE_FORMAT_VERSION: u32 = 1;

pub fn axis_names(n_axes: usize) -> Vec<String> {
    if n_axes <= 3 {
        ["x", "y", "z"][..n_axes].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n_axes).map(|a| format!("a{a}")).collect()
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn trace_header(n_agents: usize, n_axes: usize) -> Vec<String> {
    let axes = axis_names(n_axes);
    let mut h = vec!["t".to_string()];
    for i in 1..=n_agents {
        for block in ["p", "v", "u", "w", "z"] {
            h.extend(axes.iter().map(|a| format!("{block}{i}_{a}")));
        }
    }
    for block in ["kappa_p", "kappa_v"] {
        h.extend(axes.iter().map(|a| format!("{block}_{a}")));
    }
    h.push("e".into());
    h
}

pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, writer: W) -> Result<()> {
    let n = trace.n_axes;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trace_header(trace.n_agents, n))?;
    for s in &trace.samples {
        let mut row = vec![fmt_num(s.t)];
        for i in 0..trace.n_agents {
            for block in [s.p(i), s.v(i), s.u(i), s.omega(i), s.z(i)] {
                row.extend(block.iter().copied().map(fmt_num));
            }
        }
        row.extend(s.kappa.iter().copied().map(fmt_num));
        row.push(fmt_num(s.error));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace written by [`write_trace_csv`]. Per-agent deviation norms
/// are recomputed from `formation`; `expected_rows` guards against
/// truncation at a line boundary.
pub fn read_trace_csv<R: Read>(
    reader: R,
    n_agents: usize,
    n_axes: usize,
    formation: &FormationSpec,
    expected_rows: Option<usize>,
) -> Result<SimulationTrace> {
    let n = n_axes;
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Format(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let want = trace_header(n_agents, n);
    if header != want {
        return Err(Error::Format(format!(
            "header mismatch: expected {} columns starting {:?}, found {} columns",
            want.len(),
            &want[..want.len().min(3)],
            header.len()
        )));
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
        if rec.len() != want.len() {
            return Err(Error::Format(format!("row {} has {} columns, expected {}", line + 1, rec.len(), want.len())));
        }
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
        let mut cur = 1;
        let mut take = |len: usize| {
            let s = vals[cur..cur + len].to_vec();
            cur += len;
            s
        };
        let (mut positions, mut velocities, mut controls, mut disturbances, mut compensations) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n_agents {
            positions.extend(take(n));
            velocities.extend(take(n));
            controls.extend(take(n));
            disturbances.extend(take(n));
            compensations.extend(take(n));
        }
        let kappa = take(2 * n);
        let error = take(1)[0];
        let t = vals[0];
        let deviation_norms = (0..n_agents)
            .map(|i| {
                let f = formation.eval(i, t);
                deviation_norm(&positions[i * n..(i + 1) * n], &velocities[i * n..(i + 1) * n], &f, &kappa)
            })
            .collect();
        samples.push(TraceSample {
            t,
            positions,
            velocities,
            controls,
            disturbances,
            compensations,
            kappa,
            deviation_norms,
            error,
        });
    }
    if samples.is_empty() {
        return Err(Error::Format("trace has no data rows".into()));
    }
    if let Some(rows) = expected_rows {
        if samples.len() != rows {
            return Err(Error::Format(format!("trace has {} rows, metadata promises {rows}", samples.len())));
        }
    }
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Format("time column is not strictly increasing".into()));
    }
    Ok(SimulationTrace { n_agents, n_axes, samples })
}

pub fn center_header(n_axes: usize) -> Vec<String> {
    let axes = axis_names(n_axes);
    let mut h = vec!["t".to_string()];
    for block in ["c0", "cz", "cf", "kappa", "kappa_hat"] {
        for part in ["p", "v"] {
            h.extend(axes.iter().map(|a| format!("{block}_{part}_{a}")));
        }
    }
    h.push("r".into());
    h
}

pub fn write_center_csv<W: Write>(d: &CenterDecomposition, n_axes: usize, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(center_header(n_axes))?;
    for k in 0..d.times.len() {
        let mut row = vec![fmt_num(d.times[k])];
        for block in [&d.c0[k], &d.cz[k], &d.cf[k], &d.kappa[k], &d.kappa_hat[k]] {
            row.extend(block.iter().copied().map(fmt_num));
        }
        row.push(fmt_num(d.residual[k]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = trace_header(2, 3);
        assert_eq!(h.len(), 1 + 2 * 15 + 6 + 1);
        assert_eq!(&h[..4], &["t", "p1_x", "p1_y", "p1_z"]);
        assert_eq!(h[16], "p2_x");
        assert_eq!(h.last().unwrap(), "e");
        assert_eq!(trace_header(1, 4)[1], "p1_a1");
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(fmt_num(0.0), "0.00000000e0");
        assert_eq!(fmt_num(-12345.678912), "-1.23456789e4");
    }

    #[test]
    fn rejects_garbage() {
        let spec = FormationSpec::zero(1, 1);
        assert!(matches!(read_trace_csv("a,b\n1,2\n".as_bytes(), 1, 1, &spec, None), Err(Error::Format(_))));
        let header = trace_header(1, 1).join(",");
        let short = format!("{header}\n0,1,2\n");
        assert!(matches!(read_trace_csv(short.as_bytes(), 1, 1, &spec, None), Err(Error::Format(_))));
        assert!(matches!(read_trace_csv(format!("{header}\n").as_bytes(), 1, 1, &spec, None), Err(Error::Format(_))));
    }
}
