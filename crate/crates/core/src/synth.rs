//! Seeded synthetic KPI generators with known day-type structure.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::MultiSeries;

/// 2024-01-01T00:00:00Z, a Monday.
pub const SYNTH_EPOCH: i64 = 1_704_067_200;

/// Day type labels for the weekly generator.
pub const HIGH_ACTIVITY: usize = 0;
pub const LOW_ACTIVITY: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData<T> {
    pub series: MultiSeries<T>,
    /// Planted day type of every generated day.
    pub labels: Vec<usize>,
}

fn check(days: usize, h: usize, p: usize, noise: f64) -> Result<()> {
    if h == 0 || p == 0 || days == 0 {
        return Err(Error::InvalidParameter("days, h and dims must be positive".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be a finite non-negative value, got {noise}")));
    }
    Ok(())
}

fn timestamps(n: usize, h: usize) -> Vec<i64> {
    let step = (86_400 / h as i64).max(1);
    (0..n as i64).map(|t| SYNTH_EPOCH + t * step).collect()
}

fn assemble<T: Scalar>(
    labels: Vec<usize>,
    h: usize,
    p: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
    shape: impl Fn(usize, usize, usize) -> f64,
) -> Result<SynthData<T>> {
    let gauss = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut values = Vec::with_capacity(labels.len() * h * p);
    for &label in &labels {
        for t in 0..h {
            for j in 0..p {
                let e = if noise > 0.0 { gauss.sample(rng) } else { 0.0 };
                values.push(T::lit(shape(label, t, j) + e));
            }
        }
    }
    let n = labels.len() * h;
    let series = MultiSeries::from_flat(values, p)?
        .with_timestamps(timestamps(n, h))?
        .with_dim_names((0..p).map(|j| format!("kpi_{j}")).collect())?;
    Ok(SynthData { series, labels })
}

/// Five high-activity weekdays then two low-activity weekend days, repeated,
/// starting on a Monday. Profiles are smooth daily bumps; `noise` is the
/// standard deviation of additive Gaussian noise.
pub fn weekly<T: Scalar>(days: usize, h: usize, p: usize, noise: f64, seed: u64) -> Result<SynthData<T>> {
    check(days, h, p, noise)?;
    if days < 7 {
        return Err(Error::InvalidParameter("the weekly profile needs at least 7 days".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..days)
        .map(|d| if d % 7 < 5 { HIGH_ACTIVITY } else { LOW_ACTIVITY })
        .collect();
    assemble(labels, h, p, noise, &mut rng, |label, t, j| {
        let x = (t as f64 + 0.5) / h as f64;
        let bump = (-((x - 0.55) / 0.18).powi(2)).exp();
        let scale = 1.0 + 0.5 * j as f64;
        scale
            * match label {
                HIGH_ACTIVITY => 1.0 + 3.0 * bump + 0.3 * (2.0 * PI * x).sin(),
                _ => 0.5 + 0.8 * bump,
            }
    })
}

/// `k` random day shapes visited in a random cyclic order (a random
/// permutation of the shapes, repeated). Shape means are 2 units apart.
pub fn planted_k<T: Scalar>(k: usize, days: usize, h: usize, p: usize, noise: f64, seed: u64) -> Result<SynthData<T>> {
    check(days, h, p, noise)?;
    if k == 0 {
        return Err(Error::InvalidParameter("planted-k needs k ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (amplitude, frequency, phase) per shape and dimension
    let params: Vec<Vec<(f64, f64, f64)>> = (0..k)
        .map(|_| {
            (0..p)
                .map(|_| {
                    (
                        rng.random_range(0.5..1.5),
                        f64::from(rng.random_range(1u8..=2)),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect()
        })
        .collect();
    let mut cycle: Vec<usize> = (0..k).collect();
    cycle.shuffle(&mut rng);
    let labels = (0..days).map(|d| cycle[d % k]).collect();
    assemble(labels, h, p, noise, &mut rng, |label, t, j| {
        let x = t as f64 / h as f64;
        let (amp, freq, phase) = params[label][j];
        2.0 * label as f64 + amp * (2.0 * PI * freq * x + phase).sin()
    })
}
