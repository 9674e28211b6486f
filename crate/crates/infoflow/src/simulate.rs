//! Seeded Monte Carlo simulation of the closed loop, plus empirical
//! covariance and averaged-periodogram estimates over the stationary tail.
//!
//! Every trial draws from its own counter-based ChaCha stream keyed by
//! (seed, trial index), so batches are bitwise reproducible no matter how
//! trials are scheduled, and estimates are reduced in fixed trial order.

use crate::error::{Error, Result};
use crate::exec::{default_parallel, map_indexed};
use crate::gaussian::SignalRole;
use crate::lti::FeedbackLoop;
use crate::spectral::SpectralDensity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

/// Identifier recorded in batch metadata for the trial-stream scheme.
pub const RNG_ALGORITHM: &str = "chacha12/stream-per-trial";

pub const PERIODOGRAM_MIN_TRIALS: usize = 100;
pub const PERIODOGRAM_MIN_N: usize = 256;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub system: FeedbackLoop,
    /// Samples per trajectory.
    pub n: usize,
    /// Independent trajectories.
    pub trials: usize,
    pub seed: u64,
}

/// All simulated trajectories of one run, trial-major.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch {
    n: usize,
    trials: usize,
    seed: u64,
    algorithm: &'static str,
    x0: Vec<f64>,
    e: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    w_plus_v: Vec<Vec<f64>>,
}

impl TrajectoryBatch {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        self.algorithm
    }

    /// The message value drawn for each trial.
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// All trajectories of one signal, indexed [trial][time].
    pub fn signal(&self, role: SignalRole) -> &[Vec<f64>] {
        match role {
            SignalRole::X => &self.x,
            SignalRole::E => &self.e,
            SignalRole::Y => &self.y,
            SignalRole::V => &self.v,
            SignalRole::WPlusV => &self.w_plus_v,
        }
    }
}

/// Runs the loop recursion (A−B)·e = A·(θx₀ + w + v) forward in time for
/// every trial. Draw order per trial is x₀, then w₁…w_n, then v₁…v_n,
/// matching the noise-basis column order of the linear maps.
pub fn simulate_loop(config: &SimulationConfig) -> Result<TrajectoryBatch> {
    simulate_loop_with(config, default_parallel())
}

#[doc(hidden)]
pub fn simulate_loop_with(config: &SimulationConfig, parallel: bool) -> Result<TrajectoryBatch> {
    config.system.require_valid()?;
    let n = config.n;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    if config.trials == 0 {
        return Err(Error::InsufficientTrials { got: 0, need: 1 });
    }
    let lp = &config.system;
    let a = lp.plant.den().clone();
    let c = a.sub(lp.plant.num());
    debug_assert_eq!(c.coeff(0), 1.0);
    let s0 = lp.sigma_02.sqrt();
    let sw = lp.sigma_w2.sqrt();
    let sv = lp.sigma_v2.sqrt();
    let theta = lp.theta.clone();
    let seed = config.seed;

    let per_trial = map_indexed(config.trials, parallel, |trial| {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let x0 = s0 * rng.sample::<f64, _>(StandardNormal);
        let w: Vec<f64> = (0..n)
            .map(|_| sw * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let v: Vec<f64> = (0..n)
            .map(|_| sv * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut u = vec![0.0; n];
        for i in 0..n {
            let th = theta.get(i).copied().unwrap_or(0.0);
            u[i] = th * x0 + w[i] + v[i];
        }
        let mut e = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..=a.degree().min(i) {
                acc += a.coeff(k) * u[i - k];
            }
            for k in 1..=c.degree().min(i) {
                acc -= c.coeff(k) * e[i - k];
            }
            e[i] = acc;
        }
        let x: Vec<f64> = (0..n).map(|i| e[i] - w[i] - v[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| e[i] - v[i]).collect();
        let wv: Vec<f64> = (0..n).map(|i| w[i] + v[i]).collect();
        (x0, e, x, y, v, wv)
    });

    let mut batch = TrajectoryBatch {
        n,
        trials: config.trials,
        seed,
        algorithm: RNG_ALGORITHM,
        x0: Vec::with_capacity(config.trials),
        e: Vec::with_capacity(config.trials),
        x: Vec::with_capacity(config.trials),
        y: Vec::with_capacity(config.trials),
        v: Vec::with_capacity(config.trials),
        w_plus_v: Vec::with_capacity(config.trials),
    };
    for (x0, e, x, y, v, wv) in per_trial {
        batch.x0.push(x0);
        batch.e.push(e);
        batch.x.push(x);
        batch.y.push(y);
        batch.v.push(v);
        batch.w_plus_v.push(wv);
    }
    Ok(batch)
}

/// Unbiased zero-mean sample covariances r̂(0..=lag_window) over the
/// stationary tail (last half of each trajectory), averaged across trials.
pub fn empirical_covariance(
    batch: &TrajectoryBatch,
    role: SignalRole,
    lag_window: usize,
) -> Result<Vec<f64>> {
    if batch.trials < 2 {
        return Err(Error::InsufficientTrials {
            got: batch.trials,
            need: 2,
        });
    }
    let tail_len = batch.n / 2;
    if lag_window >= tail_len {
        return Err(Error::InsufficientTail {
            window: lag_window,
            tail: tail_len,
        });
    }
    let start = batch.n - tail_len;
    let series = batch.signal(role);
    let out = map_indexed(lag_window + 1, default_parallel(), |lag| {
        let mut acc = 0.0;
        for tr in series {
            for t in start..(batch.n - lag) {
                acc += tr[t] * tr[t + lag];
            }
        }
        acc / (batch.trials * (tail_len - lag)) as f64
    });
    Ok(out)
}

/// Trial-averaged periodogram of the stationary tail, sampled on the FFT grid
/// θ_k = k/L for k = 0..=L/2 with L = n/2, conjugate bins averaged so the
/// density is exactly even.
pub fn periodogram_psd(batch: &TrajectoryBatch, role: SignalRole) -> Result<SpectralDensity> {
    let n = batch.n;
    if n < PERIODOGRAM_MIN_N || !n.is_power_of_two() {
        return Err(Error::BadTrajectoryLength { n });
    }
    if batch.trials < PERIODOGRAM_MIN_TRIALS {
        return Err(Error::InsufficientTrials {
            got: batch.trials,
            need: PERIODOGRAM_MIN_TRIALS,
        });
    }
    let len = n / 2;
    let fft = FftPlanner::new().plan_fft_forward(len);
    let series = batch.signal(role);
    let mut mean = vec![0.0; len];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for tr in series {
        for (b, &s) in buf.iter_mut().zip(&tr[n - len..]) {
            *b = Complex::new(s, 0.0);
        }
        fft.process(&mut buf);
        for (m, b) in mean.iter_mut().zip(&buf) {
            *m += b.norm_sqr();
        }
    }
    let scale = 1.0 / (len as f64 * batch.trials as f64);
    let half = len / 2;
    let thetas: Vec<f64> = (0..=half).map(|k| k as f64 / len as f64).collect();
    let values: Vec<f64> = (0..=half)
        .map(|k| {
            if k == 0 || k == half {
                mean[k] * scale
            } else {
                0.5 * (mean[k] + mean[len - k]) * scale
            }
        })
        .collect();
    Ok(SpectralDensity::from_samples(
        format!("periodogram {}", role.label()),
        thetas,
        values,
    ))
}

/// Root-mean-square relative deviation of a sampled density from a reference,
/// evaluated on the sample grid.
pub fn rms_relative_error(sampled: &SpectralDensity, reference: &SpectralDensity) -> Result<f64> {
    let (thetas, values) = sampled.samples().ok_or(Error::DimensionMismatch(
        "rms comparison needs a sampled density".into(),
    ))?;
    let mut acc = 0.0;
    for (&t, &v) in thetas.iter().zip(values) {
        let truth = reference.value(t)?;
        if !(truth > 0.0) {
            return Err(Error::LogSingularity {
                theta: t,
                value: truth,
            });
        }
        let rel = (v - truth) / truth;
        acc += rel * rel;
    }
    Ok((acc / thetas.len() as f64).sqrt())
}
