use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::cascade::AvailabilityMask;
use crate::estimation::wls::{gain, observability};
use crate::estimation::{build_system, simulate_measurements, EstimationError, NoiseModel, StateVector};
use crate::grid::Grid;
use crate::network::CasePolicy;
use crate::ternary::Model;

/// Anchor for unobservable buses: `V = 1 + j0` with this standard deviation.
pub const PSEUDO_SIGMA: f64 = 0.5;

/// Estimator for one mask, factorized once and reused across seeds.
pub struct MaskEstimator<'a> {
    grid: &'a Grid,
    truth: &'a StateVector,
    mask: &'a AvailabilityMask,
    noise: NoiseModel,
    j: DMatrix<f64>,
    w: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Buses anchored by a pseudo-measurement.
    pub flagged: Vec<u32>,
}

impl<'a> MaskEstimator<'a> {
    pub fn new(
        grid: &'a Grid,
        truth: &'a StateVector,
        mask: &'a AvailabilityMask,
        noise: NoiseModel,
    ) -> Result<Self, EstimationError> {
        let n = 2 * grid.buses.len();
        let template = simulate_measurements(truth, grid, mask, 0, &noise)?;
        let (mut j, mut w) = if template.is_empty() {
            (DMatrix::zeros(0, n), DVector::zeros(0))
        } else {
            let sys = build_system(&template, grid)?;
            (sys.j, sys.w)
        };
        let cols = observability(&gain(&j, &w));
        let mut anchored: Vec<usize> = cols.iter().map(|c| c / 2).collect();
        anchored.dedup();
        if !anchored.is_empty() {
            let m = j.nrows();
            let extra = 2 * anchored.len();
            j = j.resize_vertically(m + extra, 0.0);
            w = w.resize_vertically(m + extra, PSEUDO_SIGMA * PSEUDO_SIGMA);
            for (t, k) in anchored.iter().enumerate() {
                j[(m + 2 * t, 2 * k)] = 1.0;
                j[(m + 2 * t + 1, 2 * k + 1)] = 1.0;
            }
        }
        let chol = gain(&j, &w)
            .cholesky()
            .ok_or_else(|| EstimationError::Unobservable(grid.bus_ids()))?;
        Ok(Self {
            grid,
            truth,
            mask,
            noise,
            flagged: anchored.iter().map(|k| grid.buses[*k].id).collect(),
            j,
            w,
            chol,
        })
    }

    pub fn estimate(&self, seed: u64) -> Result<StateVector, EstimationError> {
        let meas = simulate_measurements(self.truth, self.grid, self.mask, seed, &self.noise)?;
        let mut z = DVector::zeros(self.j.nrows());
        for (k, m) in meas.iter().enumerate() {
            z[2 * k] = m.z_r;
            z[2 * k + 1] = m.z_i;
        }
        // pseudo-measurements: V_r = 1, V_i = 0
        for t in 0..self.flagged.len() {
            z[2 * meas.len() + 2 * t] = 1.0;
        }
        let rhs = self.j.transpose() * z.component_div(&self.w);
        let x = self.chol.solve(&rhs);
        Ok(StateVector::from_interleaved(self.grid.bus_ids(), x.as_slice()))
    }
}

/// Per-bus summary over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusError {
    pub bus: u32,
    pub mean_abs_err: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    pub flagged_unobservable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: Model,
    pub case: CasePolicy,
    pub buses: Vec<BusError>,
    /// `errors[s][k]`: `|V_est - V_true|` at bus `k` (grid order) for seed `s`.
    #[serde(skip)]
    pub errors: Vec<Vec<f64>>,
}

impl ModelReport {
    /// Per-seed errors at one bus.
    pub fn bus_series(&self, bus_index: usize) -> Vec<f64> {
        self.errors.iter().map(|row| row[bus_index]).collect()
    }
}

/// Estimate under every mask with shared noise draws per seed.
pub fn compare_models(
    grid: &Grid,
    truth: &StateVector,
    masks: &[AvailabilityMask],
    seeds: &[u64],
    noise: NoiseModel,
) -> Result<Vec<ModelReport>, EstimationError> {
    let mut out = Vec::with_capacity(masks.len());
    for mask in masks {
        let est = MaskEstimator::new(grid, truth, mask, noise)?;
        let mut errors = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let v = est.estimate(seed)?;
            errors.push(
                (0..v.len())
                    .map(|k| (v.vr[k] - truth.vr[k]).hypot(v.vi[k] - truth.vi[k]))
                    .collect::<Vec<f64>>(),
            );
        }
        let n = seeds.len() as f64;
        let buses = grid
            .buses
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let col: Vec<f64> = errors.iter().map(|r| r[k]).collect();
                let mean = col.iter().sum::<f64>() / n;
                let var = if col.len() > 1 {
                    col.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                BusError {
                    bus: b.id,
                    mean_abs_err: mean,
                    std_err: (var / n).sqrt(),
                    flagged_unobservable: est.flagged.contains(&b.id),
                }
            })
            .collect();
        out.push(ModelReport {
            model: mask.model,
            case: mask.case,
            buses,
            errors,
        });
    }
    Ok(out)
}

/// One-sided paired t-test of `H1: mean(alt - base) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
}

pub fn paired_one_sided_test(base: &[f64], alt: &[f64], alpha: f64) -> PairedTest {
    assert_eq!(base.len(), alt.len(), "paired samples differ in length");
    let n = base.len();
    let d: Vec<f64> = alt.iter().zip(base).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let sd = if n > 1 {
        (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    let (t, p) = if n < 2 {
        (f64::NAN, 1.0)
    } else if sd == 0.0 {
        if mean > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (if mean < 0.0 { f64::NEG_INFINITY } else { 0.0 }, 1.0)
        }
    } else {
        let t = mean / (sd / nf.sqrt());
        let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("valid degrees of freedom");
        (t, 1.0 - dist.cdf(t))
    };
    PairedTest {
        n,
        mean_diff: mean,
        t,
        p_value: p,
        significant: p < alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_test_detects_shift() {
        let base: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let alt: Vec<f64> = base.iter().enumerate().map(|(i, b)| b + 0.5 + 0.01 * (i % 3) as f64).collect();
        let t = paired_one_sided_test(&base, &alt, 0.05);
        assert!(t.significant && t.p_value < 1e-10);
        let rev = paired_one_sided_test(&alt, &base, 0.05);
        assert!(!rev.significant && rev.p_value > 0.99);
    }

    #[test]
    fn t_test_reference_value() {
        // d = [1, 2, 3]: mean 2, sd 1, t = 2 * sqrt(3), df 2
        let t = paired_one_sided_test(&[0.0; 3], &[1.0, 2.0, 3.0], 0.05);
        assert!((t.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // one-sided p for t=3.4641 with 2 df: 0.5 - t / (2 sqrt(2 + t^2))
        let expected = 0.5 - t.t / (2.0 * (2.0 + t.t * t.t).sqrt());
        assert!((t.p_value - expected).abs() < 1e-9, "{} vs {expected}", t.p_value);
    }
}
