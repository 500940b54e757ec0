use formation_core::center::decompose;
use formation_core::export::{read_trace_csv, write_trace_csv};
use formation_core::simulator::{run, IntegratorSettings, SimulationTrace, TraceSample};
use formation_core::{design, presets, Error, FormationSpec, Scenario};
use proptest::prelude::*;

fn scenario(horizon: f64, dt: f64, decimation: usize) -> Scenario {
    let mut s = presets::hexagon_scenario(horizon).unwrap();
    s.integrator = IntegratorSettings::new(dt, horizon, decimation).unwrap();
    s
}

fn simulate(s: &Scenario) -> (SimulationTrace, Vec<f64>) {
    let r = design(&s.design_input()).unwrap();
    (run(s, &r).unwrap(), r.spectrum.u_bar_1)
}

/// `x_i - f_i - kappa` for every agent, flattened.
fn deviations(sample: &TraceSample, spec: &FormationSpec, n_agents: usize) -> Vec<Vec<f64>> {
    let n = sample.kappa.len() / 2;
    (0..n_agents)
        .map(|i| {
            let f = spec.eval(i, sample.t);
            let x = sample.x(i);
            (0..2 * n)
                .map(|m| {
                    let fm = if m < n { f.fp[m] } else { f.fv[m - n] };
                    x[m] - fm - sample.kappa[m]
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn common_shift_moves_only_the_center(delta in prop::collection::vec(-5.0f64..5.0, 6)) {
        let base = scenario(4.0, 1e-3, 50);
        let mut shifted = base.clone();
        for x in &mut shifted.initial {
            for (c, d) in x.iter_mut().zip(&delta) {
                *c += d;
            }
        }
        let (a, _) = simulate(&base);
        let (b, _) = simulate(&shifted);
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            let (da, db) = (deviations(sa, &base.formation, 6), deviations(sb, &base.formation, 6));
            for (x, y) in da.iter().flatten().zip(db.iter().flatten()) {
                prop_assert!((x - y).abs() < 1e-6, "t = {}: {x} vs {y}", sa.t);
            }
        }
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn weighted_deviations_vanish() {
    let s = scenario(20.0, 1e-3, 10);
    let (trace, u) = simulate(&s);
    for sample in &trace.samples {
        let d = deviations(sample, &s.formation, 6);
        for m in 0..6 {
            let acc: f64 = (0..6).map(|i| u[i] * d[i][m]).sum();
            assert!(acc.abs() < 1e-8, "t = {}: {acc}", sample.t);
        }
        let norms: Vec<f64> = d.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        for (a, b) in norms.iter().zip(&sample.deviation_norms) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn states_stay_bounded_over_sixty_seconds() {
    let s = scenario(60.0, 1e-3, 100);
    let (trace, _) = simulate(&s);
    let max = trace.max_abs_state();
    assert!(max.is_finite() && max < 100.0, "max |state| = {max}");
    // no growth: the last third is no larger than the whole run
    let late = trace.max_error_between(40.0, 60.0);
    assert!(late < 0.1, "late error {late}");
    let late_kappa =
        trace.samples.iter().filter(|x| x.t >= 40.0).flat_map(|x| x.kappa.iter().map(|k| k.abs())).fold(0.0, f64::max);
    assert!(late_kappa < 100.0, "{late_kappa}");
}

#[test]
fn step_size_refinement_agrees() {
    let (coarse, _) = simulate(&scenario(20.0, 1e-3, 10));
    let (fine, _) = simulate(&scenario(20.0, 5e-4, 20));
    assert_eq!(coarse.samples.len(), fine.samples.len());
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.samples.iter().zip(&fine.samples) {
        assert!((a.t - b.t).abs() < 1e-12);
        worst = worst.max((a.error - b.error).abs());
    }
    assert!(worst < 1e-5, "max |e_coarse - e_fine| = {worst}");
}

#[test]
fn runs_are_reproducible() {
    let s = scenario(2.0, 1e-3, 10);
    let (a, _) = simulate(&s);
    let (b, _) = simulate(&s);
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_trace_csv(&a, &mut x).unwrap();
    write_trace_csv(&b, &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn observer_tracks_constant_offsets() {
    // constant part of the disturbance is rejected: compensation error settles
    let s = scenario(20.0, 1e-3, 10);
    let (trace, _) = simulate(&s);
    let last = trace.samples.last().unwrap();
    for i in 0..6 {
        for a in 0..3 {
            // sinusoidal residual bounded by |1 - G(j1)| * amplitude (<= 3.0)
            let r = (last.omega(i)[a] - last.z(i)[a]).abs();
            assert!(r < 0.2 * 3.1, "agent {i} axis {a}: {r}");
        }
    }
}

#[test]
fn center_decomposition_properties() {
    let s = scenario(6.0, 1e-3, 10);
    let (trace, u) = simulate(&s);
    let d = decompose(&trace, &u, &s.plant, &s.formation);
    assert!(d.residual[0] < 1e-14, "r(0) = {}", d.residual[0]);
    assert!(d.cz[0].iter().all(|&x| x == 0.0));

    // doubling the residual w - z doubles cz and leaves c0, cf alone
    let mut doubled = trace.clone();
    for sample in &mut doubled.samples {
        sample.disturbances.iter_mut().for_each(|x| *x *= 2.0);
        sample.compensations.iter_mut().for_each(|x| *x *= 2.0);
    }
    let d2 = decompose(&doubled, &u, &s.plant, &s.formation);
    for k in 0..d.times.len() {
        for m in 0..6 {
            assert!((d2.cz[k][m] - 2.0 * d.cz[k][m]).abs() < 1e-12 * d.cz[k][m].abs().max(1.0));
            assert_eq!(d2.c0[k][m], d.c0[k][m]);
            assert_eq!(d2.cf[k][m], d.cf[k][m]);
        }
    }

    // perfect compensation: cz is exactly zero
    let mut perfect = trace.clone();
    for sample in &mut perfect.samples {
        sample.compensations = sample.disturbances.clone();
    }
    let d3 = decompose(&perfect, &u, &s.plant, &s.formation);
    assert!(d3.cz.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn trace_csv_round_trip_and_truncation() {
    let s = scenario(1.0, 1e-3, 10);
    let (trace, _) = simulate(&s);
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let back = read_trace_csv(&buf[..], 6, 3, &s.formation, Some(trace.samples.len())).unwrap();
    assert_eq!(back.samples.len(), trace.samples.len());
    for (a, b) in trace.samples.iter().zip(&back.samples) {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(1e-300) + 1e-300;
        assert!(close(a.t, b.t));
        for (x, y) in a.positions.iter().zip(&b.positions).chain(a.kappa.iter().zip(&b.kappa)) {
            assert!(close(*x, *y), "{x} vs {y}");
        }
        assert!(close(a.error, b.error));
        for (x, y) in a.deviation_norms.iter().zip(&b.deviation_norms) {
            assert!((x - y).abs() < 1e-7);
        }
    }

    let text = String::from_utf8(buf).unwrap();
    // cut at a line boundary: the row count no longer matches the metadata
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 3].join("\n") + "\n";
    let err = read_trace_csv(cut.as_bytes(), 6, 3, &s.formation, Some(trace.samples.len()));
    assert!(matches!(err, Err(Error::Format(_))));
    // cut mid-row
    let mid = &text[..text.len() - 40];
    assert!(matches!(read_trace_csv(mid.as_bytes(), 6, 3, &s.formation, None), Err(Error::Format(_))));
    // wrong shape
    assert!(matches!(read_trace_csv(text.as_bytes(), 5, 3, &s.formation, None), Err(Error::Format(_))));
}
