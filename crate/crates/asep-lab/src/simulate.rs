//! Event-driven continuous-time Monte Carlo of ASEP with step-Bernoulli
//! initial data, with reproducible counter-based per-trial random streams.
//!
//! Each particle carries a unit-rate clock; a step draws an exponential
//! waiting time with total rate equal to the particle count, picks a
//! uniform particle, and attempts a jump (right with probability `p`,
//! left with `q`) that is suppressed when the target site is occupied.
//! Suppressed attempts consume the event.
//!
//! Direction of drift: the determinant formulas this module is validated
//! against pin `p` as the right-jump rate, so `gamma = q - p > 0` is a net
//! leftward drift and the particles started on the positive half-line spill
//! left into the vacuum (the leading particles move ballistically left,
//! matching the scaling constant `c1 -> -1` as `sigma -> 0`).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{AsepParams, BlockQuery, Method, ProbabilityResult};
use crate::{Error, Result};

/// Particle configuration at a point in time. `positions[k]` is the site of
/// the `(k+1)`-th particle from the left; strict increase encodes exclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub positions: Vec<i64>,
    pub time: f64,
    pub window_right: i64,
}

/// Outcome of a batch of independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialBatch {
    pub n_trials: u64,
    pub hits: u64,
    pub seed: u64,
}

/// Initialized window `1..=W` with `W = (m + L) + ceil(t) + ceil(4 sqrt t) + 32`.
///
/// Influence of the uninitialized sites beyond `W` travels left at most one
/// site per unit time plus fluctuations, so events observed at sites up to
/// `m + L + 32`-ish are unaffected; the window-doubling test certifies this.
pub fn window_size(m: usize, l: usize, t: f64) -> i64 {
    (m + l) as i64 + t.ceil() as i64 + (4.0 * t.sqrt()).ceil() as i64 + 32
}

/// Sites `1..=window` independently occupied with probability `rho`;
/// non-positive sites empty.
pub fn sample_initial(params: &AsepParams, window: i64, rng: &mut impl Rng) -> SimState {
    assert!(window >= 1, "window must cover at least site 1");
    let mut positions = Vec::with_capacity((window as f64 * params.rho) as usize + 8);
    for site in 1..=window {
        if params.rho >= 1.0 || rng.random::<f64>() < params.rho {
            positions.push(site);
        }
    }
    SimState {
        positions,
        time: 0.0,
        window_right: window,
    }
}

/// Advance the configuration to `t_end` by Gillespie steps.
pub fn evolve(state: &mut SimState, t_end: f64, params: &AsepParams, rng: &mut impl Rng) {
    assert!(t_end >= state.time, "cannot evolve backwards in time");
    let n = state.positions.len();
    if n == 0 {
        state.time = t_end;
        return;
    }
    let rate = n as f64;
    loop {
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / rate;
        if state.time + dt > t_end {
            state.time = t_end;
            return;
        }
        state.time += dt;
        let i = rng.random_range(0..n);
        if rng.random::<f64>() < params.p {
            // right jump, probability p
            if i == n - 1 || state.positions[i + 1] > state.positions[i] + 1 {
                state.positions[i] += 1;
            }
        } else if i == 0 || state.positions[i - 1] < state.positions[i] - 1 {
            // left jump, probability q
            state.positions[i] -= 1;
        }
        debug_assert!(i == 0 || state.positions[i - 1] < state.positions[i]);
        debug_assert!(i == n - 1 || state.positions[i] < state.positions[i + 1]);
    }
}

fn certified_site_bound(m: usize, l: usize, t: f64) -> i64 {
    let window = window_size(m, l, t);
    window - t.ceil() as i64 - (4.0 * t.sqrt()).ceil() as i64 - 8
}

/// Run one trial and report whether the block event holds at time `t`.
fn trial_hits_block(params: &AsepParams, query: &BlockQuery, window: i64, seed: u64, idx: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    let mut state = sample_initial(params, window, &mut rng);
    evolve(&mut state, query.t, params, &mut rng);
    block_event(&state.positions, query.m, query.l, query.x)
}

fn block_event(positions: &[i64], m: usize, l: usize, x: i64) -> bool {
    if positions.len() < m + l - 1 {
        return false;
    }
    (0..l).all(|j| positions[m - 1 + j] == x + j as i64)
}

/// Unbiased Monte Carlo estimate of the block probability, with binomial
/// standard error. Identical `(seed, n_trials, params, query)` give identical
/// results regardless of thread count: each trial has its own counter-derived
/// random stream and the aggregation is an integer sum.
pub fn estimate_block_probability(
    params: &AsepParams,
    query: &BlockQuery,
    n_trials: u64,
    seed: u64,
) -> Result<ProbabilityResult> {
    assert!(n_trials >= 1);
    let window = window_size(query.m, query.l, query.t);
    if query.x + query.l as i64 - 1 > certified_site_bound(query.m, query.l, query.t) {
        return Err(Error::WindowExhausted);
    }
    let hits: u64 = (0..n_trials)
        .into_par_iter()
        .map(|idx| trial_hits_block(params, query, window, seed, idx) as u64)
        .sum();
    let p_hat = hits as f64 / n_trials as f64;
    let stderr = (p_hat * (1.0 - p_hat) / n_trials as f64).sqrt();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("n_trials".into(), n_trials as f64);
    diagnostics.insert("hits".into(), hits as f64);
    diagnostics.insert("window".into(), window as f64);
    diagnostics.insert("seed".into(), seed as f64);
    Ok(ProbabilityResult {
        value: p_hat,
        method: Method::MonteCarlo,
        error: stderr,
        diagnostics,
    })
}

/// Per-site counts of the location of the m-th particle and the length of
/// the particle run it heads: `counts[x][l-1]` is the number of trials with
/// `x_m = x` and at least `l` consecutive occupied sites from `x`.
#[derive(Debug, Clone)]
pub struct BlockStats {
    pub counts: BTreeMap<i64, Vec<u64>>,
    pub n_trials: u64,
    pub l_max: usize,
}

impl BlockStats {
    /// Estimated `P(x_m = x, block >= l)` with its binomial standard error.
    pub fn probability(&self, x: i64, l: usize) -> (f64, f64) {
        let hits = self
            .counts
            .get(&x)
            .map(|v| v[l - 1])
            .unwrap_or(0);
        let p = hits as f64 / self.n_trials as f64;
        let se = (p * (1.0 - p) / self.n_trials as f64).sqrt();
        (p, se)
    }
}

/// Simulate `n_trials` up to raw time `t` and histogram `(x_m, run length)`.
pub fn block_statistics(
    params: &AsepParams,
    m: usize,
    l_max: usize,
    t: f64,
    n_trials: u64,
    seed: u64,
) -> BlockStats {
    assert!(m >= 1 && l_max >= 1 && n_trials >= 1);
    let window = window_size(m, l_max, t);
    let counts = (0..n_trials)
        .into_par_iter()
        .fold(
            BTreeMap::<i64, Vec<u64>>::new,
            |mut acc, idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(idx);
                let mut state = sample_initial(params, window, &mut rng);
                evolve(&mut state, t, params, &mut rng);
                if state.positions.len() >= m {
                    let x = state.positions[m - 1];
                    let mut run = 1usize;
                    while run < l_max
                        && m - 1 + run < state.positions.len()
                        && state.positions[m - 1 + run] == x + run as i64
                    {
                        run += 1;
                    }
                    let entry = acc.entry(x).or_insert_with(|| vec![0; l_max]);
                    for li in 0..run {
                        entry[li] += 1;
                    }
                }
                acc
            },
        )
        .reduce(BTreeMap::new, |mut a, b| {
            for (x, v) in b {
                let entry = a.entry(x).or_insert_with(|| vec![0; l_max]);
                for (ai, bi) in entry.iter_mut().zip(v) {
                    *ai += bi;
                }
            }
            a
        });
    BlockStats {
        counts,
        n_trials,
        l_max,
    }
}

/// Monte Carlo estimate of the conditional probability that the m-th
/// particle heads a block of length `l`, given its position, pooled over
/// positions within two fluctuation widths of the law-of-large-numbers
/// location. `t` is the macroscopic time of the limit statement (`m` is set
/// to `ceil(sigma t)`); the particle system is run to raw time `t / gamma`.
pub fn estimate_conditional_ratio(
    params: &AsepParams,
    sigma: f64,
    l: usize,
    t: f64,
    n_trials: u64,
    seed: u64,
) -> Result<ProbabilityResult> {
    if sigma <= 0.0 || sigma >= 1.0 {
        return Err(Error::DomainError(format!(
            "sigma must lie in (0,1), got {sigma}"
        )));
    }
    assert!(l >= 1);
    let m = (sigma * t).ceil().max(1.0) as usize;
    let t_raw = t / params.gamma;
    let rho2 = params.rho * params.rho;
    let (center, half_width) = if sigma <= rho2 {
        let c1 = -1.0 + 2.0 * sigma.sqrt();
        let c2 = sigma.powf(-1.0 / 6.0) * (1.0 - sigma.sqrt()).powf(2.0 / 3.0);
        (c1 * t, 2.0 * c2 * t.powf(1.0 / 3.0))
    } else {
        let c1p = sigma / params.rho + params.rho - 1.0;
        let c2p = ((1.0 - params.rho) * (sigma - rho2)).sqrt() / params.rho;
        (c1p * t, 2.0 * c2p * t.sqrt())
    };
    let x_hi = (center + half_width).ceil() as i64 + l as i64;
    if x_hi > certified_site_bound(m, l, t_raw) {
        return Err(Error::WindowExhausted);
    }
    let stats = block_statistics(params, m, l, t_raw, n_trials, seed);
    let mut num = 0u64;
    let mut den = 0u64;
    for (x, c) in &stats.counts {
        if (*x as f64 - center).abs() <= half_width {
            den += c[0];
            num += c[l - 1];
        }
    }
    if den < 100 {
        return Err(Error::InsufficientConditioningEvents(den));
    }
    let ratio = num as f64 / den as f64;
    let stderr = (ratio * (1.0 - ratio) / den as f64).sqrt();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("m".into(), m as f64);
    diagnostics.insert("t_raw".into(), t_raw);
    diagnostics.insert("center".into(), center);
    diagnostics.insert("half_width".into(), half_width);
    diagnostics.insert("conditioning_events".into(), den as f64);
    diagnostics.insert("block_events".into(), num as f64);
    Ok(ProbabilityResult {
        value: ratio,
        method: Method::MonteCarlo,
        error: stderr,
        diagnostics,
    })
}
