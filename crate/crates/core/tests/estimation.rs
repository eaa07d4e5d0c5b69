use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use jointnet_core::cascade::{run_network, AvailabilityMask};
use jointnet_core::estimation::{
    admittance_from_branch, branch_current_rows, build_system, compare_models, simulate_measurements, wls_solve,
    EstimationError, MaskEstimator, MeasurementKind, NoiseModel, StateVector,
};
use jointnet_core::fixtures::ieee14_network;
use jointnet_core::{CasePolicy, EntityId, FailureScenario, JointNetwork, Model};

fn net14() -> &'static JointNetwork {
    static NET: OnceLock<JointNetwork> = OnceLock::new();
    NET.get_or_init(ieee14_network)
}

fn full_mask() -> AvailabilityMask {
    AvailabilityMask::full(net14(), Model::Miim, CasePolicy::Case1)
}

/// `(a + jb) / (c + jd)`
fn cdiv(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let den = c * c + d * d;
    ((a * c + b * d) / den, (b * c - a * d) / den)
}

proptest! {
    #[test]
    fn current_block_matches_complex_arithmetic(
        r in 0.0f64..0.2, x in 0.005f64..0.6, bsh in 0.0f64..0.6,
        ma in 0.8f64..1.2, aa in -1.0f64..1.0, mb in 0.8f64..1.2, ab in -1.0f64..1.0,
    ) {
        let (var, vai) = (ma * aa.cos(), ma * aa.sin());
        let (vbr, vbi) = (mb * ab.cos(), mb * ab.sin());
        let rows = branch_current_rows(&admittance_from_branch(r, x, bsh).unwrap());
        let v = [var, vai, vbr, vbi];
        let ir: f64 = rows[0].iter().zip(v).map(|(c, x)| c * x).sum();
        let ii: f64 = rows[1].iter().zip(v).map(|(c, x)| c * x).sum();
        // (Va - Vb) / (r + jx) + Va * j bsh/2
        let (sr, si) = cdiv(var - vbr, vai - vbi, r, x);
        let (er, ei) = (sr - vai * bsh / 2.0, si + var * bsh / 2.0);
        prop_assert!((ir - er).abs() < 1e-9 && (ii - ei).abs() < 1e-9, "{ir},{ii} vs {er},{ei}");
    }

    #[test]
    fn variance_scaling_leaves_estimate_unchanged(seed in any::<u64>(), scale in 1e-4f64..1e4) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let m = n + rng.random_range(1..=4);
        let j = DMatrix::from_fn(m, n, |r, c| if r == c { 2.0 } else { rng.random_range(-0.5..0.5) });
        let w = DVector::from_fn(m, |_, _| rng.random_range(0.5..2.0));
        let z = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let a = wls_solve(&j, &w, &z).unwrap().x;
        let b = wls_solve(&j, &(&w * scale), &z).unwrap().x;
        prop_assert!((a - b).amax() < 1e-10);
    }
}

#[test]
fn noiseless_measurements_satisfy_the_linear_model() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let meas = simulate_measurements(&truth, &net.grid, &full_mask(), 3, &NoiseModel::noiseless()).unwrap();
    let sys = build_system(&meas, &net.grid).unwrap();
    assert_eq!(sys.j.nrows(), 2 * meas.len());
    let x = DVector::from_vec(truth.to_interleaved());
    assert!((&sys.j * x - &sys.z).amax() < 1e-12);
}

#[test]
fn zero_noise_recovery_where_observable() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let scenario = FailureScenario::new(
        "substation 6",
        ["P(12)", "C(1,1,6,6)", "C(1,2,6,6)"].map(|s| EntityId::parse(s).unwrap()),
    );
    for (model, case) in [(Model::Miim, CasePolicy::Case1), (Model::Iim, CasePolicy::Case1)] {
        let (_, mask) = run_network(net, model, case, &scenario).unwrap();
        let est = MaskEstimator::new(&net.grid, &truth, &mask, NoiseModel::noiseless()).unwrap();
        let v = est.estimate(1).unwrap();
        for (k, bus) in net.grid.bus_ids().into_iter().enumerate() {
            if est.flagged.contains(&bus) {
                continue;
            }
            let err = (v.vr[k] - truth.vr[k]).hypot(v.vi[k] - truth.vi[k]);
            assert!(err < 1e-9, "{model}: bus {bus} err {err:e}");
        }
        // anything flagged has lost its own SCADA
        for b in &est.flagged {
            assert!(!mask.get(*b).unwrap().scada);
        }
    }
}

#[test]
fn rank_deficiency_is_reported() {
    let j = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
    let w = DVector::from_element(3, 1.0);
    let z = DVector::from_element(3, 1.0);
    assert!(matches!(wls_solve(&j, &w, &z), Err(EstimationError::Unobservable(_))));
}

#[test]
fn noise_draws_match_the_stated_sigma() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let noise = NoiseModel::default();
    let (mut scada, mut pmu) = (Vec::new(), Vec::new());
    for seed in 0..600 {
        for m in simulate_measurements(&truth, &net.grid, &full_mask(), seed, &noise).unwrap() {
            let k = net.grid.bus_ids().iter().position(|b| *b == m.bus).unwrap();
            let mag = truth.magnitude(k);
            match m.kind {
                MeasurementKind::ScadaV => scada.extend([(m.z_r - truth.vr[k]) / mag, (m.z_i - truth.vi[k]) / mag]),
                MeasurementKind::PmuV => pmu.extend([(m.z_r - truth.vr[k]) / mag, (m.z_i - truth.vi[k]) / mag]),
                MeasurementKind::PmuI => {}
            }
        }
    }
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let (s, p) = (rms(&scada), rms(&pmu));
    assert!((s / noise.scada - 1.0).abs() < 0.02, "SCADA sigma {s}");
    assert!((p / noise.pmu_v - 1.0).abs() < 0.02, "PMU sigma {p}");
}

#[test]
fn masks_share_noise_per_seed() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let full = full_mask();
    let mut partial = full.clone();
    for b in partial.buses.iter_mut().filter(|b| b.bus % 2 == 0) {
        b.scada = false;
        b.pmu = false;
    }
    let a = simulate_measurements(&truth, &net.grid, &full, 42, &NoiseModel::default()).unwrap();
    let b = simulate_measurements(&truth, &net.grid, &partial, 42, &NoiseModel::default()).unwrap();
    assert!(b.len() < a.len());
    for m in &b {
        assert!(a.contains(m));
    }
}

#[test]
fn pmu_buses_are_estimated_more_precisely() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let seeds: Vec<u64> = (0..100).collect();
    let report = &compare_models(&net.grid, &truth, &[full_mask()], &seeds, NoiseModel::default()).unwrap()[0];
    let mask = full_mask();
    let mean = |pmu: bool| {
        let v: Vec<f64> = report
            .buses
            .iter()
            .filter(|b| mask.get(b.bus).unwrap().pmu == pmu)
            .map(|b| b.mean_abs_err)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (with, without) = (mean(true), mean(false));
    assert!(with < without, "PMU {with:e} vs SCADA-only {without:e}");
}

#[test]
fn estimator_is_unbiased() {
    let net = net14();
    let truth = StateVector::from_grid(&net.grid);
    let mask = full_mask();
    let est = MaskEstimator::new(&net.grid, &truth, &mask, NoiseModel::default()).unwrap();
    let n = 1000;
    let dim = 2 * truth.len();
    let (mut sum, mut sq) = (vec![0.0; dim], vec![0.0; dim]);
    let t = truth.to_interleaved();
    for seed in 0..n {
        let v = est.estimate(seed).unwrap().to_interleaved();
        for c in 0..dim {
            let e = v[c] - t[c];
            sum[c] += e;
            sq[c] += e * e;
        }
    }
    let nf = n as f64;
    for c in 0..dim {
        let mean = sum[c] / nf;
        let var = (sq[c] - nf * mean * mean) / (nf - 1.0);
        let se = (var / nf).sqrt();
        assert!(mean.abs() <= 3.0 * se, "component {c}: mean {mean:e}, se {se:e}");
    }
}
