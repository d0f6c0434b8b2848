//! Ensemble-vs-ensemble fidelity metrics with bootstrap intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::{check_grids, quantile, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::rng::mix64;

pub const FIDELITY_RESAMPLES: usize = 1000;
const BOOTSTRAP_SALT: u64 = 0xB007_57A9;

/// A point estimate with a 95% percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    /// Percentile interval of `samples`, widened if needed so that it
    /// contains `value`.
    pub fn from_bootstrap(value: f64, samples: &mut [f64]) -> Self {
        if samples.is_empty() {
            return Estimate { value, lo: value, hi: value };
        }
        let lo = quantile(samples, 0.025).min(value);
        let hi = quantile(samples, 0.975).max(value);
        Estimate { value, lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Max over grid and compartment of the ensemble-mean difference.
    pub l_inf: Estimate,
    /// Root mean square of the same difference over grid and compartment.
    pub l_2: Estimate,
    /// `|max_t I_a - max_t I_b|` on the ensemble means.
    pub err_peak_infected: Estimate,
    /// `|R_a(T) - R_b(T)|` on the ensemble means; absent without a terminal state.
    pub err_final_terminal: Option<Estimate>,
    /// Mean over runs of `a` of `|peak_r - mean peak of b|`.
    pub per_run_peak_error: Estimate,
    /// Mean over runs of `a` of `|R_r(T) - mean R(T) of b|`.
    pub per_run_final_error: Option<Estimate>,
    pub runs_a: usize,
    pub runs_b: usize,
    pub resamples: usize,
}

struct Metrics {
    l_inf: f64,
    l_2: f64,
    peak: f64,
    fin: Option<f64>,
    run_peak: f64,
    run_fin: Option<f64>,
}

struct Prepared<'a> {
    runs: &'a [TrajectoryRecord],
    infectious: usize,
    terminal: Option<usize>,
}

fn mean_of(runs: &[TrajectoryRecord], idx: &[usize]) -> Vec<Vec<f64>> {
    let first = &runs[0];
    let inv = 1.0 / idx.len() as f64;
    let mut out = vec![vec![0.0; first.grid.len()]; first.fractions.len()];
    for &r in idx {
        for (acc, f) in out.iter_mut().zip(&runs[r].fractions) {
            for (a, x) in acc.iter_mut().zip(f) {
                *a += x;
            }
        }
    }
    for acc in &mut out {
        for a in acc {
            *a *= inv;
        }
    }
    out
}

impl Prepared<'_> {
    fn metrics(&self, b: &Prepared, ia: &[usize], ib: &[usize]) -> Metrics {
        let ma = mean_of(self.runs, ia);
        let mb = mean_of(b.runs, ib);
        let (mut l_inf, mut sq, mut cnt) = (0.0f64, 0.0f64, 0usize);
        for (ca, cb) in ma.iter().zip(&mb) {
            for (x, y) in ca.iter().zip(cb) {
                let d = (x - y).abs();
                l_inf = l_inf.max(d);
                sq += d * d;
                cnt += 1;
            }
        }
        let peak_of = |m: &[Vec<f64>]| m[self.infectious].iter().copied().fold(0.0, f64::max);
        let peak = (peak_of(&ma) - peak_of(&mb)).abs();
        let fin = self.terminal.map(|t| (ma[t].last().unwrap() - mb[t].last().unwrap()).abs());

        let inv_b = 1.0 / ib.len() as f64;
        let ref_peak = ib.iter().map(|&r| b.runs[r].summary.peak_infected).sum::<f64>() * inv_b;
        let inv_a = 1.0 / ia.len() as f64;
        let run_peak = ia.iter().map(|&r| (self.runs[r].summary.peak_infected - ref_peak).abs()).sum::<f64>() * inv_a;
        let final_of = |r: &TrajectoryRecord| r.summary.final_terminal.unwrap_or(0.0);
        let run_fin = self.terminal.map(|_| {
            let ref_fin = ib.iter().map(|&r| final_of(&b.runs[r])).sum::<f64>() * inv_b;
            ia.iter().map(|&r| (final_of(&self.runs[r]) - ref_fin).abs()).sum::<f64>() * inv_a
        });
        Metrics { l_inf, l_2: (sq / cnt.max(1) as f64).sqrt(), peak, fin, run_peak, run_fin }
    }
}

/// Fidelity of ensemble `a` against reference ensemble `b`, with
/// [`FIDELITY_RESAMPLES`] bootstrap resamples.
pub fn fidelity(a: &[TrajectoryRecord], b: &[TrajectoryRecord]) -> Result<FidelityReport> {
    fidelity_with(a, b, FIDELITY_RESAMPLES, 0)
}

/// As [`fidelity`] with an explicit resample count and bootstrap seed.
pub fn fidelity_with(a: &[TrajectoryRecord], b: &[TrajectoryRecord], resamples: usize, seed: u64) -> Result<FidelityReport> {
    let (fa, fb) = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::InvalidParameter("fidelity needs non-empty ensembles".into())),
    };
    check_grids(a, fa)?;
    check_grids(b, fa)?;
    let _ = fb;
    let infectious = infectious_index(fa);
    let terminal = fa.summary.final_terminal.map(|_| fa.compartments.len() - 1);
    let pa = Prepared { runs: a, infectious, terminal };
    let pb = Prepared { runs: b, infectious, terminal };

    let all_a: Vec<usize> = (0..a.len()).collect();
    let all_b: Vec<usize> = (0..b.len()).collect();
    let point = pa.metrics(&pb, &all_a, &all_b);

    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ BOOTSTRAP_SALT));
    let mut samples: [Vec<f64>; 6] = Default::default();
    let (mut ia, mut ib) = (vec![0; a.len()], vec![0; b.len()]);
    for _ in 0..resamples {
        ia.iter_mut().for_each(|x| *x = rng.random_range(0..a.len()));
        ib.iter_mut().for_each(|x| *x = rng.random_range(0..b.len()));
        let m = pa.metrics(&pb, &ia, &ib);
        samples[0].push(m.l_inf);
        samples[1].push(m.l_2);
        samples[2].push(m.peak);
        samples[3].push(m.run_peak);
        if let (Some(f), Some(rf)) = (m.fin, m.run_fin) {
            samples[4].push(f);
            samples[5].push(rf);
        }
    }
    let [s0, s1, s2, s3, s4, s5] = &mut samples;
    Ok(FidelityReport {
        l_inf: Estimate::from_bootstrap(point.l_inf, s0),
        l_2: Estimate::from_bootstrap(point.l_2, s1),
        err_peak_infected: Estimate::from_bootstrap(point.peak, s2),
        per_run_peak_error: Estimate::from_bootstrap(point.run_peak, s3),
        err_final_terminal: point.fin.map(|f| Estimate::from_bootstrap(f, s4)),
        per_run_final_error: point.run_fin.map(|f| Estimate::from_bootstrap(f, s5)),
        runs_a: a.len(),
        runs_b: b.len(),
        resamples,
    })
}

fn infectious_index(r: &TrajectoryRecord) -> usize {
    r.compartments.iter().position(|c| c == "I").unwrap_or(1.min(r.compartments.len() - 1))
}

/// Mean of `xs` with a bootstrap percentile interval.
pub fn bootstrap_mean(xs: &[f64], resamples: usize, seed: u64) -> Estimate {
    if xs.is_empty() {
        return Estimate { value: f64::NAN, lo: f64::NAN, hi: f64::NAN };
    }
    let n = xs.len();
    let value = xs.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ BOOTSTRAP_SALT ^ 0x3EA));
    let mut samples: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    Estimate::from_bootstrap(value, &mut samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::trajectory::RunSummary;

    fn record(i: Vec<f64>, grid: &[f64]) -> TrajectoryRecord {
        let r: Vec<f64> = grid.iter().map(|t| t / 100.0).collect();
        let s: Vec<f64> = i.iter().zip(&r).map(|(a, b)| 1.0 - a - b).collect();
        let peak = i.iter().copied().fold(0.0, f64::max);
        TrajectoryRecord {
            compartments: vec!["S".into(), "I".into(), "R".into()],
            grid: grid.to_vec(),
            summary: RunSummary {
                peak_infected: peak,
                peak_time: 0.0,
                final_terminal: Some(*r.last().unwrap()),
                step_count: 0,
                wall_clock: 0.0,
            },
            fractions: vec![s, i, r],
        }
    }

    fn ensemble(shift: f64, runs: usize) -> Vec<TrajectoryRecord> {
        let grid: Vec<f64> = (0..51).map(|k| k as f64).collect();
        (0..runs)
            .map(|r| {
                let i = grid.iter().map(|t| 0.2 * (-(t - 20.0f64).powi(2) / 50.0).exp() + 0.001 * r as f64 + shift).collect();
                record(i, &grid)
            })
            .collect()
    }

    #[test]
    fn identical_ensembles_have_zero_error() {
        let a = ensemble(0.0, 20);
        let r = fidelity_with(&a, &a, 200, 1).unwrap();
        assert_eq!(r.l_inf.value, 0.0);
        assert_eq!(r.l_2.value, 0.0);
        assert_eq!(r.err_peak_infected.value, 0.0);
        assert_eq!(r.err_final_terminal.unwrap().value, 0.0);
    }

    #[test]
    fn constant_shift() {
        let a = ensemble(0.01, 20);
        let b = ensemble(0.0, 20);
        let r = fidelity_with(&a, &b, 200, 1).unwrap();
        assert!((r.err_peak_infected.value - 0.01).abs() < 1e-12);
        assert!(r.l_inf.value >= 0.01 - 1e-12);
        assert!(r.err_peak_infected.lo <= r.err_peak_infected.value);
        assert!(r.err_peak_infected.value <= r.err_peak_infected.hi);
    }

    #[test]
    fn trajectory_metrics_are_symmetric() {
        let a = ensemble(0.013, 15);
        let b = ensemble(0.0, 25);
        let ab = fidelity_with(&a, &b, 0, 0).unwrap();
        let ba = fidelity_with(&b, &a, 0, 0).unwrap();
        assert_eq!(ab.l_inf.value, ba.l_inf.value);
        assert_eq!(ab.l_2.value, ba.l_2.value);
        assert_eq!(ab.err_peak_infected.value, ba.err_peak_infected.value);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = ensemble(0.0, 3);
        let mut b = ensemble(0.0, 3);
        b[1].grid[3] += 0.5;
        assert!(matches!(fidelity(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn bootstrap_width_shrinks_with_runs() {
        let xs: Vec<f64> = (0..400).map(|k| ((k * 7919) % 101) as f64 / 100.0).collect();
        let wide = bootstrap_mean(&xs[..100], 1000, 3);
        let narrow = bootstrap_mean(&xs, 1000, 3);
        assert!(narrow.width() < wide.width());
        assert!(wide.contains(wide.value));
    }
}
