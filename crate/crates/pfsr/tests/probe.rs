//! Temporary calibration probes; deleted once acceptance parameters freeze.

use pfsr::experiment::run_curves;
use pfsr::montecarlo::{estimate_rate, estimate_threshold, Method, RunSpec};
use pfsr::noise::Channel;
use pfsr::surface::{build_code, Basis, Mode};
use std::time::Instant;

fn sigma(t: &pfsr::montecarlo::ThresholdEstimate) -> f64 {
    (t.ci_high - t.ci_low) / (2.0 * 1.96)
}

#[test]
#[ignore]
fn probe_c6_coherent_phenom() {
    let grid = [0.012, 0.019, 0.026, 0.033, 0.040];
    let t0 = Instant::now();
    for method in [Method::Exact, Method::Pta] {
        let curves = run_curves(
            &[3, 5],
            &Channel::CoherentZ(0.0),
            &grid,
            Mode::Phenomenological,
            method,
            0.0,
            10_000,
            77,
        )
        .unwrap();
        for c in &curves {
            let rates: Vec<f64> = c.iter().map(|r| r.rate).collect();
            println!("{method:?} d={} rates {rates:?}", c[0].d);
        }
        let t = estimate_threshold(&curves, 77).unwrap();
        println!(
            "C6 {method:?}: threshold {:.4} [{:.4}, {:.4}] elapsed {:?}",
            t.threshold,
            t.ci_low,
            t.ci_high,
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_c7_schedule_compare() {
    let grid = [0.003, 0.0045, 0.006, 0.0075];
    let t0 = Instant::now();
    for mode in [Mode::CircuitParallel, Mode::CircuitLayered] {
        let curves = run_curves(
            &[3, 5],
            &Channel::Depolarizing(0.0),
            &grid,
            mode,
            Method::Exact,
            0.0,
            20_000,
            77,
        )
        .unwrap();
        for c in &curves {
            let rates: Vec<f64> = c.iter().map(|r| r.rate).collect();
            println!("{mode:?} d={} rates {rates:?}", c[0].d);
        }
        let t = estimate_threshold(&curves, 77).unwrap();
        println!(
            "C7 {mode:?}: threshold {:.5} [{:.5}, {:.5}] elapsed {:?}",
            t.threshold,
            t.ci_low,
            t.ci_high,
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_c8_circuit_coherent() {
    let grid = [0.0005, 0.001, 0.002, 0.004, 0.008];
    let t0 = Instant::now();
    for method in [Method::Exact, Method::Pta] {
        let curves = run_curves(
            &[3, 5],
            &Channel::CoherentZ(0.0),
            &grid,
            Mode::CircuitLayered,
            method,
            1e-4,
            5_000,
            77,
        )
        .unwrap();
        for c in &curves {
            let rates: Vec<f64> = c.iter().map(|r| r.rate).collect();
            let me: Vec<usize> = c.iter().map(|r| r.max_entries).collect();
            println!("{method:?} d={} rates {rates:?} max_entries {me:?}", c[0].d);
        }
        match estimate_threshold(&curves, 77) {
            Ok(t) => println!(
                "C8 {method:?}: threshold {:.5} [{:.5}, {:.5}] sigma {:.5} elapsed {:?}",
                t.threshold,
                t.ci_low,
                t.ci_high,
                sigma(&t),
                t0.elapsed()
            ),
            Err(e) => println!("C8 {method:?}: no crossing ({e}) elapsed {:?}", t0.elapsed()),
        }
    }
}

#[test]
#[ignore]
fn probe_c9_truncation() {
    let code = build_code(5).unwrap();
    let t0 = Instant::now();
    for (eps, shots) in [(1e-5, 2_000u64), (1e-4, 2_000), (0.0, 30)] {
        let spec = RunSpec {
            code: &code,
            basis: Basis::X,
            channel: Channel::CoherentZ(0.0).with_strength(0.0006).unwrap(),
            mode: Mode::CircuitLayered,
            epsilon: eps,
            method: Method::Exact,
        };
        let r = estimate_rate(&spec, shots, 77).unwrap();
        println!(
            "C9 eps={eps:e} shots={shots}: rate {} stderr {} max_entries {} fallbacks {} elapsed {:?}",
            r.rate, r.stderr, r.max_entries, r.truncation_fallbacks, t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_c10_importance() {
    use pfsr::montecarlo::run_importance_sampling;
    let code = build_code(3).unwrap();
    let spec = RunSpec {
        code: &code,
        basis: Basis::Z,
        channel: Channel::Depolarizing(0.01),
        mode: Mode::CircuitLayered,
        epsilon: 0.0,
        method: Method::Exact,
    };
    let t0 = Instant::now();
    let ks: Vec<usize> = (2..=12).collect();
    let est = run_importance_sampling(&spec, &ks, &vec![2_000; ks.len()], &[0.01], 77, 1).unwrap();
    println!(
        "C10 importance: rate {} var {} tail {} elapsed {:?}",
        est.rates[0], est.variances[0], est.tail_bounds[0], t0.elapsed()
    );
    let brute = estimate_rate(&spec, 100_000, 78).unwrap();
    println!(
        "C10 brute: rate {} stderr {} elapsed {:?}",
        brute.rate, brute.stderr, t0.elapsed()
    );
    let gap = (est.rates[0] - brute.rate).abs();
    let sig = (est.variances[0] + brute.stderr * brute.stderr).sqrt();
    println!("C10 gap {gap} vs 3 sigma {}", 3.0 * sig);
}
