//! Monte-Carlo engine: operating points, sweeps, stop rule, CSV output and
//! required-Eb/N0 extraction.
//!
//! Seeds: every operating point gets a seed mixed from the master seed, the
//! number of users and the Eb/N0 value (not the detector, so detectors are
//! compared on identical frames). Frame `i` of a point uses
//! `mix_seed(point_seed, i)`. Frames are simulated in fixed-size batches in
//! parallel and the stop rule is evaluated afterwards in frame order, so the
//! result does not depend on the number of workers.

mod extract;
mod link;
mod record;

use std::time::Instant;

use rayon::prelude::*;

use crate::channel::ebn0_to_noisevar;
use crate::detectors::DetectorSpec;
use crate::error::{Error, Result};
use crate::sysmodel::{CheckedParams, ConfigMap};

pub use extract::{extract, read_extract, required_ebn0, write_extract, ExtractRow, Metric, Required};
pub use link::{FrameOutcome, Link, VAR_FLOOR};
pub use record::{read_records, RecordWriter, SimRecord, CSV_HEADER};

/// Frames simulated per parallel batch.
pub const BATCH_FRAMES: u64 = 32;

/// SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: a child seed for `counter` under `seed`.
pub fn mix_seed(seed: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ counter)
}

/// Seed of the operating point `(n_users, ebn0_db)` under `master`.
pub fn point_seed(master: u64, n_users: usize, ebn0_db: f64) -> u64 {
    mix_seed(mix_seed(master, n_users as u64), ebn0_db.to_bits())
}

/// When to stop simulating an operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub min_frame_errors: u64,
    /// Frames simulated before the error targets are checked.
    pub min_frames: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    /// 200 bit errors or 50 frame errors or 20 000 frames, whichever comes
    /// first.
    fn default() -> Self {
        StopRule {
            min_bit_errors: 200,
            min_frame_errors: 50,
            min_frames: 1,
            max_frames: 20_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 || self.max_frames < self.min_frames {
            return Err(Error::config(format!(
                "stop rule needs 0 < min_frames <= max_frames, got {} and {}",
                self.min_frames, self.max_frames
            )));
        }
        Ok(())
    }

    pub fn done(&self, frames: u64, bit_errors: u64, frame_errors: u64) -> bool {
        frames >= self.max_frames
            || (frames >= self.min_frames
                && (bit_errors >= self.min_bit_errors || frame_errors >= self.min_frame_errors))
    }

    /// Reads `min_bit_errors`, `min_frame_errors`, `min_frames` and
    /// `max_frames` from a configuration file.
    pub fn apply_config(&mut self, config: &mut ConfigMap) -> Result<()> {
        for (key, field) in [
            ("min_bit_errors", &mut self.min_bit_errors),
            ("min_frame_errors", &mut self.min_frame_errors),
            ("min_frames", &mut self.min_frames),
            ("max_frames", &mut self.max_frames),
        ] {
            if let Some(v) = config.take(key) {
                *field = v.parse_as(key)?;
            }
        }
        self.validate()
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))
}

fn run_point_in(
    pool: &rayon::ThreadPool,
    params: &CheckedParams,
    detector: &DetectorSpec,
    ebn0_db: f64,
    stop: &StopRule,
    seed: u64,
) -> Result<SimRecord> {
    detector.validate()?;
    stop.validate()?;
    let start = Instant::now();
    let link = Link::new(params)?;
    let noise_var = ebn0_to_noisevar(ebn0_db, params);
    let (mut frames, mut bits, mut bit_errors, mut frame_errors) = (0u64, 0u64, 0u64, 0u64);
    'batches: while !stop.done(frames, bit_errors, frame_errors) {
        let first = frames;
        let count = BATCH_FRAMES.min(stop.max_frames - first);
        let outcomes: Vec<Result<FrameOutcome>> = pool.install(|| {
            (first..first + count)
                .into_par_iter()
                .map(|i| link.run_frame(detector, noise_var, mix_seed(seed, i)))
                .collect()
        });
        for outcome in outcomes {
            let o = outcome?;
            frames += 1;
            bits += o.bits;
            bit_errors += o.bit_errors;
            frame_errors += u64::from(o.frame_error());
            if stop.done(frames, bit_errors, frame_errors) {
                break 'batches;
            }
        }
    }
    Ok(SimRecord::new(
        detector.to_string(),
        params.params().n_users,
        ebn0_db,
        bits,
        bit_errors,
        frames,
        frame_errors,
        seed,
        start.elapsed(),
    ))
}

/// Simulates one operating point with `params.n_users` active codes.
pub fn run_point(
    params: &CheckedParams,
    detector: &DetectorSpec,
    ebn0_db: f64,
    stop: &StopRule,
    seed: u64,
    workers: usize,
) -> Result<SimRecord> {
    run_point_in(&thread_pool(workers)?, params, detector, ebn0_db, stop, seed)
}

/// One entry of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub detector: DetectorSpec,
    pub n_users: usize,
    pub ebn0_db: f64,
}

/// Cartesian product ordered by load, then detector, then Eb/N0.
pub fn sweep_points(detectors: &[DetectorSpec], ebn0_grid: &[f64], load_grid: &[usize]) -> Vec<SweepPoint> {
    let mut points = Vec::with_capacity(detectors.len() * ebn0_grid.len() * load_grid.len());
    for &n_users in load_grid {
        for detector in detectors {
            for &ebn0_db in ebn0_grid {
                points.push(SweepPoint {
                    detector: detector.clone(),
                    n_users,
                    ebn0_db,
                });
            }
        }
    }
    points
}

/// Points assigned to shard `index` out of `count` (round robin).
pub fn shard(points: &[SweepPoint], index: usize, count: usize) -> Result<Vec<SweepPoint>> {
    if count == 0 || index >= count {
        return Err(Error::Argument(format!("shard {index} of {count} does not exist")));
    }
    Ok(points.iter().skip(index).step_by(count).cloned().collect())
}

/// Runs `points` in order, handing each record to `sink` as soon as it is
/// available.
pub fn run_points(
    params: &CheckedParams,
    points: &[SweepPoint],
    stop: &StopRule,
    master_seed: u64,
    workers: usize,
    mut sink: impl FnMut(&SimRecord) -> Result<()>,
) -> Result<Vec<SimRecord>> {
    let pool = thread_pool(workers)?;
    let mut records = Vec::with_capacity(points.len());
    for point in points {
        let p = params.with_users(point.n_users)?;
        let seed = point_seed(master_seed, point.n_users, point.ebn0_db);
        let record = run_point_in(&pool, &p, &point.detector, point.ebn0_db, stop, seed)?;
        sink(&record)?;
        records.push(record);
    }
    Ok(records)
}

/// Every combination of detector, Eb/N0 and load.
pub fn sweep(
    params: &CheckedParams,
    detectors: &[DetectorSpec],
    ebn0_grid: &[f64],
    load_grid: &[usize],
    stop: &StopRule,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<SimRecord>> {
    let points = sweep_points(detectors, ebn0_grid, load_grid);
    run_points(params, &points, stop, master_seed, workers, |_| Ok(()))
}

/// Reassembles shard outputs into the order of `points`.
pub fn merge_shards(points: &[SweepPoint], shards: Vec<Vec<SimRecord>>) -> Result<Vec<SimRecord>> {
    let mut pool: Vec<SimRecord> = shards.into_iter().flatten().collect();
    let mut merged = Vec::with_capacity(points.len());
    for point in points {
        let id = point.detector.to_string();
        let pos = pool
            .iter()
            .position(|r| r.detector == id && r.n_users == point.n_users && r.ebn0_db == point.ebn0_db)
            .ok_or_else(|| {
                Error::Argument(format!("no record for {id}, K = {}, {} dB", point.n_users, point.ebn0_db))
            })?;
        merged.push(pool.swap_remove(pos));
    }
    if !pool.is_empty() {
        return Err(Error::Argument(format!("{} records match no sweep point", pool.len())));
    }
    Ok(merged)
}

/// Parses an inclusive `start:step:stop` grid, or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::config(format!("bad grid '{text}', expected start:step:stop"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] if v.is_finite() => Ok(vec![v]),
        [start, step, stop] if start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Rounded so that 0.1-type steps print as written.
            Ok((0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        _ => Err(bad()),
    }
}
