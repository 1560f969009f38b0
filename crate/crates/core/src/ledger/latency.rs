//! Virtual-clock transaction latency measurement.
//!
//! Models submit -> endorse -> order -> commit against a virtual clock:
//! endorsement is a single shared server with a per-transaction service
//! time, blocks are cut when the pending queue reaches the block size (or
//! the remainder at the end of the run), and each block pays an ordering
//! delay. All delays carry seeded uniform jitter, so a run is a pure
//! function of its configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyConfig {
    pub block_sizes: Vec<usize>,
    pub concurrency_levels: Vec<usize>,
    /// Transactions simulated per (block size, concurrency) setting.
    pub txns_per_setting: usize,
    /// Spacing between submission rounds, seconds.
    pub arrival_interval_s: f64,
    pub endorse_delay_ms: f64,
    pub ordering_delay_ms: f64,
    /// Jitter as a fraction of the mean, uniform in [-j, +j].
    pub jitter: f64,
    pub seed: u64,
}

impl Default for LatencyConfig {
    fn default() -> LatencyConfig {
        LatencyConfig {
            block_sizes: vec![10, 50, 100, 300],
            concurrency_levels: vec![1],
            txns_per_setting: 1200,
            arrival_interval_s: 0.005,
            endorse_delay_ms: 2.0,
            ordering_delay_ms: 5.0,
            jitter: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub block_size: usize,
    pub concurrency: usize,
    pub txns: usize,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Simulated submit-to-commit latency per configured setting.
pub fn measure_txn_latency(config: &LatencyConfig) -> Vec<LatencyRow> {
    let mut rows = Vec::new();
    for &block_size in &config.block_sizes {
        for &concurrency in &config.concurrency_levels {
            rows.push(run_setting(config, block_size, concurrency));
        }
    }
    rows
}

fn run_setting(config: &LatencyConfig, block_size: usize, concurrency: usize) -> LatencyRow {
    assert!(block_size >= 1 && concurrency >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ (block_size as u64) << 24 ^ (concurrency as u64) << 8,
    );
    let n = config.txns_per_setting;
    let jittered = |rng: &mut ChaCha8Rng, mean_ms: f64| -> f64 {
        let j = if config.jitter > 0.0 {
            rng.gen_range(-config.jitter..=config.jitter)
        } else {
            0.0
        };
        (mean_ms * (1.0 + j)).max(0.0) / 1000.0
    };

    // Submission times: `concurrency` submitters fire together every round.
    let mut submit_ts = Vec::with_capacity(n);
    let rounds = n.div_ceil(concurrency);
    'outer: for round in 0..rounds {
        for _ in 0..concurrency {
            if submit_ts.len() == n {
                break 'outer;
            }
            submit_ts.push(round as f64 * config.arrival_interval_s);
        }
    }

    // Endorsement: shared single server, FIFO.
    let mut server_free = 0.0f64;
    let mut endorsed_ts = Vec::with_capacity(n);
    for &s in &submit_ts {
        let svc = jittered(&mut rng, config.endorse_delay_ms);
        let done = server_free.max(s) + svc;
        server_free = done;
        endorsed_ts.push(done);
    }

    // Ordering: cut a block when `block_size` endorsements are pending; the
    // remainder commits at the end of the run.
    let mut commit_ts = vec![0.0f64; n];
    let mut block_start = 0usize;
    while block_start < n {
        let block_end = (block_start + block_size).min(n);
        let cut_ts = endorsed_ts[block_end - 1];
        let commit = cut_ts + jittered(&mut rng, config.ordering_delay_ms);
        for ts in commit_ts.iter_mut().take(block_end).skip(block_start) {
            *ts = commit;
        }
        block_start = block_end;
    }

    let latencies_ms: Vec<f64> = submit_ts
        .iter()
        .zip(&commit_ts)
        .map(|(s, c)| (c - s) * 1000.0)
        .collect();
    let mean_ms = latencies_ms.iter().sum::<f64>() / n as f64;
    let min_ms = latencies_ms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ms = latencies_ms
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    LatencyRow {
        block_size,
        concurrency,
        txns: n,
        mean_ms,
        min_ms,
        max_ms,
    }
}
