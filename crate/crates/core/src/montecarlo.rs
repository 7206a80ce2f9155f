//! Deterministic Monte Carlo oracle.
//!
//! Every sample draws one uniform variate per leaf segment and turns it
//! into a failure time by inverse-CDF sampling, `-ln(u) / rate` with `u`
//! in `(0, 1]`. The structure function is applied to those failure times.
//!
//! # Random streams
//!
//! Samples are split into chunks of `chunk_size`. Chunk `i` draws from a
//! ChaCha8 generator seeded with `seed` (via `seed_from_u64`) and switched
//! to stream `i`, so each chunk's stream depends only on `(seed, i)`.
//! Chunks run in parallel on the current rayon pool and survivor counts
//! are summed as integers, which makes every estimate bit-identical for a
//! fixed `(seed, samples, chunk_size)` whatever the thread count. The
//! `rand_chacha` stream is value-stable, so outputs are stable across
//! releases of this crate with the same major version.
//!
//! A uniform variate is `((x >> 11) + 1) * 2^-53` for the next 64-bit
//! output `x`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Block, FailureModel, RbdModel, Segment, TimeValue};

pub const DEFAULT_CHUNK_SIZE: u64 = 65_536;
/// Fewest samples accepted by [`check_mutual_independence`].
pub const MIN_INDEPENDENCE_SAMPLES: usize = 10_000;
/// Most events accepted by [`check_mutual_independence`].
pub const MAX_INDEPENDENCE_EVENTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub chunk_size: u64,
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Result<Self> {
        McConfig::with_chunk_size(seed, samples, DEFAULT_CHUNK_SIZE)
    }

    pub fn with_chunk_size(seed: u64, samples: u64, chunk_size: u64) -> Result<Self> {
        let cfg = McConfig {
            seed,
            samples,
            chunk_size,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Usage("samples must be >= 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::Usage("chunk_size must be >= 1".into()));
        }
        Ok(())
    }

    fn chunks(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        (self.samples - chunk * self.chunk_size).min(self.chunk_size)
    }

    fn stream(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk);
        rng
    }
}

/// Fraction of surviving samples with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl McEstimate {
    pub fn from_counts(survivors: u64, samples: u64) -> Self {
        assert!(samples > 0 && survivors <= samples);
        let n = samples as f64;
        let p_hat = survivors as f64 / n;
        McEstimate {
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / n).sqrt(),
            samples,
        }
    }

    /// `|p_hat - reference| / std_err`. Zero when both the deviation and
    /// the standard error are zero, infinite when only the error is zero.
    pub fn z_score(&self, reference: f64) -> f64 {
        let dev = (self.p_hat - reference).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.std_err
        }
    }
}

fn uniform_open_zero(rng: &mut impl RngCore) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) + 1) as f64 * SCALE
}

fn check_uniform(u: f64) -> Result<()> {
    if u > 0.0 && u <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidUniform(u))
    }
}

/// Inverse-CDF draw: the failure time whose CDF value is `1 - u`.
pub fn sample_failure_time(model: &FailureModel, u: f64) -> Result<f64> {
    model.check()?;
    check_uniform(u)?;
    Ok(failure_time(model, u))
}

#[inline]
fn failure_time(model: &FailureModel, u: f64) -> f64 {
    match *model {
        FailureModel::Exponential { rate } => -u.ln() / rate,
    }
}

/// Whether the component sampled from `u` is still working at `t`.
pub fn survival_event(model: &FailureModel, t: TimeValue, u: f64) -> Result<bool> {
    Ok(sample_failure_time(model, u)? > t.get())
}

/// Failure time of a whole block: series fails with its first child,
/// parallel with its last. Consumes one uniform per leaf, left to right.
fn block_lifetime(block: &Block, uniforms: &mut std::slice::Iter<'_, f64>) -> f64 {
    match block {
        Block::Leaf(seg) => failure_time(&seg.model, *uniforms.next().expect("one uniform per leaf")),
        Block::Series(children) => children
            .iter()
            .map(|c| block_lifetime(c, uniforms))
            .fold(f64::INFINITY, f64::min),
        Block::Parallel(children) => children
            .iter()
            .map(|c| block_lifetime(c, uniforms))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Runs `per_sample` over every sample, handing it that sample's uniforms,
/// and sums the returned counter vectors chunk by chunk.
fn run_chunks<F>(cfg: &McConfig, draws: usize, counters: usize, per_sample: F) -> Vec<u64>
where
    F: Fn(&[f64], &mut [u64]) + Sync,
{
    (0..cfg.chunks())
        .into_par_iter()
        .map(|chunk| {
            let mut rng = cfg.stream(chunk);
            let mut uniforms = vec![0.0; draws];
            let mut counts = vec![0u64; counters];
            for _ in 0..cfg.chunk_len(chunk) {
                uniforms.iter_mut().for_each(|u| *u = uniform_open_zero(&mut rng));
                per_sample(&uniforms, &mut counts);
            }
            counts
        })
        .reduce(
            || vec![0u64; counters],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Empirical probability that the system survives past `t`.
pub fn estimate_system_reliability(
    model: &RbdModel,
    t: TimeValue,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(estimate_at_times(model, &[t], cfg)?[0])
}

/// Estimates at several times from one shared set of samples. Each
/// estimate equals what [`estimate_system_reliability`] returns for the
/// same time and configuration.
pub fn estimate_at_times(
    model: &RbdModel,
    times: &[TimeValue],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    cfg.check()?;
    if times.is_empty() {
        return Err(Error::Empty("time list"));
    }
    let leaves = model.leaves().len();
    let root = model.root();
    let counts = run_chunks(cfg, leaves, times.len(), |uniforms, counts| {
        let life = block_lifetime(root, &mut uniforms.iter());
        for (c, t) in counts.iter_mut().zip(times) {
            *c += u64::from(life > t.get());
        }
    });
    Ok(counts
        .into_iter()
        .map(|c| McEstimate::from_counts(c, cfg.samples))
        .collect())
}

/// Boolean sample matrix, one row per sample and one column per event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    events: usize,
    rows: Vec<u32>,
}

impl IndicatorMatrix {
    /// Most columns a matrix can hold.
    pub const MAX_EVENTS: usize = 32;

    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let events = rows.first().map_or(0, |r| r.as_ref().len());
        if events > Self::MAX_EVENTS {
            return Err(Error::Usage(format!(
                "{events} events exceed the matrix limit of {}",
                Self::MAX_EVENTS
            )));
        }
        let mut packed = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != events {
                return Err(Error::Usage("indicator rows differ in length".into()));
            }
            packed.push(row.iter().enumerate().fold(0u32, |m, (i, &b)| m | (u32::from(b) << i)));
        }
        Ok(IndicatorMatrix {
            events,
            rows: packed,
        })
    }

    pub fn events(&self) -> usize {
        self.events
    }

    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, sample: usize, event: usize) -> bool {
        assert!(event < self.events);
        self.rows[sample] >> event & 1 == 1
    }

    /// Reorders columns: new column `j` is old column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.events];
        if order.len() != self.events || order.iter().any(|&i| i >= self.events || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Usage("column order is not a permutation".into()));
        }
        let rows = self
            .rows
            .iter()
            .map(|&r| {
                order
                    .iter()
                    .enumerate()
                    .fold(0u32, |m, (j, &i)| m | ((r >> i & 1) << j))
            })
            .collect();
        Ok(IndicatorMatrix {
            events: self.events,
            rows,
        })
    }
}

/// Survival indicators of each segment at `t`, sampled independently with
/// the same stream layout as the reliability estimators.
pub fn sample_indicators(
    segments: &[Segment],
    t: TimeValue,
    cfg: &McConfig,
) -> Result<IndicatorMatrix> {
    cfg.check()?;
    if segments.is_empty() {
        return Err(Error::Empty("segment list"));
    }
    if segments.len() > IndicatorMatrix::MAX_EVENTS {
        return Err(Error::Usage(format!(
            "{} events exceed the matrix limit of {}",
            segments.len(),
            IndicatorMatrix::MAX_EVENTS
        )));
    }
    segments.iter().try_for_each(|s| s.model.check())?;
    let rows: Vec<u32> = (0..cfg.chunks())
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = cfg.stream(chunk);
            (0..cfg.chunk_len(chunk))
                .map(|_| {
                    segments.iter().enumerate().fold(0u32, |m, (i, s)| {
                        let u = uniform_open_zero(&mut rng);
                        m | (u32::from(failure_time(&s.model, u) > t.get()) << i)
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(IndicatorMatrix {
        events: segments.len(),
        rows,
    })
}

/// One product-rule comparison for a subset of events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCheck {
    /// Event indices in ascending order.
    pub events: Vec<usize>,
    pub joint: f64,
    pub product: f64,
    pub std_err: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub events: usize,
    pub samples: usize,
    pub tolerance_sigmas: f64,
    pub subsets_checked: usize,
    pub subsets_failed: usize,
    pub max_z: f64,
    /// Up to [`IndependenceReport::MAX_LISTED`] failing subsets, worst first.
    pub failures: Vec<SubsetCheck>,
}

impl IndependenceReport {
    pub const MAX_LISTED: usize = 32;

    pub fn passed(&self) -> bool {
        self.subsets_failed == 0
    }
}

/// Empirical product-rule test over every subset of two or more events.
///
/// For a subset `S` the joint frequency of all events in `S` occurring
/// together is compared with the product of the marginal frequencies. The
/// deviation must stay within `tolerance_sigmas` standard errors of a
/// binomial proportion at the product value.
pub fn check_mutual_independence(
    indicators: &IndicatorMatrix,
    tolerance_sigmas: f64,
) -> Result<IndependenceReport> {
    let events = indicators.events;
    if !(2..=MAX_INDEPENDENCE_EVENTS).contains(&events) {
        return Err(Error::Usage(format!(
            "independence check needs 2..={MAX_INDEPENDENCE_EVENTS} events, got {events}"
        )));
    }
    let samples = indicators.samples();
    if samples < MIN_INDEPENDENCE_SAMPLES {
        return Err(Error::Usage(format!(
            "independence check needs at least {MIN_INDEPENDENCE_SAMPLES} samples, got {samples}"
        )));
    }
    if !(tolerance_sigmas.is_finite() && tolerance_sigmas > 0.0) {
        return Err(Error::Usage(format!(
            "tolerance must be a positive number of sigmas, got {tolerance_sigmas}"
        )));
    }

    // superset sums: covered[s] = rows in which every event of s occurs
    let size = 1usize << events;
    let mut covered = vec![0u64; size];
    for &row in &indicators.rows {
        covered[row as usize] += 1;
    }
    for bit in 0..events {
        let b = 1usize << bit;
        for mask in 0..size {
            if mask & b == 0 {
                covered[mask] += covered[mask | b];
            }
        }
    }

    let n = samples as f64;
    let marginal: Vec<f64> = (0..events).map(|i| covered[1 << i] as f64 / n).collect();
    // Multiply in a fixed order of marginal values so the product depends
    // only on which values are in the subset, not on column positions.
    let mut by_value: Vec<usize> = (0..events).collect();
    by_value.sort_by(|&a, &b| marginal[a].total_cmp(&marginal[b]));

    let mut subsets_checked = 0;
    let mut subsets_failed = 0;
    let mut max_z = 0.0f64;
    let mut failures = Vec::new();
    for mask in 0..size {
        if mask.count_ones() < 2 {
            continue;
        }
        subsets_checked += 1;
        let product: f64 = by_value
            .iter()
            .filter(|&&i| mask >> i & 1 == 1)
            .map(|&i| marginal[i])
            .product();
        let joint = covered[mask] as f64 / n;
        let std_err = (product * (1.0 - product) / n).sqrt();
        let dev = (joint - product).abs();
        let z = if dev == 0.0 { 0.0 } else { dev / std_err };
        max_z = max_z.max(z);
        if !(dev <= tolerance_sigmas * std_err) {
            subsets_failed += 1;
            failures.push(SubsetCheck {
                events: (0..events).filter(|&i| mask >> i & 1 == 1).collect(),
                joint,
                product,
                std_err,
                z,
            });
        }
    }
    failures.sort_by(|a, b| b.z.total_cmp(&a.z).then_with(|| a.events.cmp(&b.events)));
    failures.truncate(IndependenceReport::MAX_LISTED);

    Ok(IndependenceReport {
        events,
        samples,
        tolerance_sigmas,
        subsets_checked,
        subsets_failed,
        max_z,
        failures,
    })
}
