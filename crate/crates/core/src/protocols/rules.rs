//! Closed-form update rules shared by the protocols. Each works on a single
//! destination column (one entry per neighbor).

use crate::kernel::RandomStream;
use crate::routing::TripModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("reinforcement {0} outside [0, 1]")]
    ReinforcementOutOfRange(f64),
    #[error("neighbor index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no alternative neighbor left: destination unreachable")]
    Unreachable,
    #[error("empty neighbor set")]
    NoNeighbors,
}

/// Raise the chosen entry by `r(1 - P_f)` and shrink the others by `r P_n`.
pub fn babr_reinforce(col: &mut [f64], f: usize, r: f64) -> Result<(), RuleError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(RuleError::ReinforcementOutOfRange(r));
    }
    if f >= col.len() {
        return Err(RuleError::IndexOutOfRange { index: f, len: col.len() });
    }
    for (i, p) in col.iter_mut().enumerate() {
        if i == f {
            *p += r * (1.0 - *p);
        } else {
            *p -= r * *p;
        }
    }
    Ok(())
}

/// Reinforcement from a trip time `t` given the window best and confidence bounds.
/// The second term is zero when its denominator vanishes; the result is clamped to [0, 1].
pub fn reinforcement(w_best: f64, t: f64, i_inf: f64, i_sup: f64, c1: f64, c2: f64) -> f64 {
    let first = c1 * (w_best / t);
    let span = i_sup - i_inf;
    let denom = span + (t - i_inf);
    let second = if denom == 0.0 || !denom.is_finite() { 0.0 } else { c2 * span / denom };
    let r = first + second;
    if r.is_nan() {
        0.0
    } else {
        r.clamp(0.0, 1.0)
    }
}

/// Reinforcement for trip time `t` using the node's trip model.
pub fn babr_reinforcement_factor(model: &TripModel, t: f64, c1: f64, c2: f64, confidence: f64) -> Option<f64> {
    let w_best = model.w_best()?;
    let (i_inf, i_sup) = model.confidence_bounds(confidence)?;
    Some(reinforcement(w_best, t, i_inf, i_sup, c1, c2))
}

/// Initial distribution from cost estimates `q` and local costs `c`:
/// `P_n ∝ exp((C - Q_n) * beta)` with `C = min(c_n + Q_n)`.
pub fn sc_initial(q: &[f64], c: &[f64], beta: f64) -> Result<Vec<f64>, RuleError> {
    if q.is_empty() {
        return Err(RuleError::NoNeighbors);
    }
    let cost = q
        .iter()
        .zip(c)
        .map(|(q, c)| q + c)
        .fold(f64::INFINITY, f64::min);
    let exponents: Vec<f64> = q.iter().map(|q| (cost - q) * beta).collect();
    // shift by the max exponent for numerical range; the ratio is unchanged
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|x| (x - top).exp()).collect();
    let sum: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / sum).collect())
}

/// Flood control: rebroadcast only if the sender's entry is below uniform.
pub fn ff_should_broadcast(p_n: f64, n: usize) -> bool {
    n >= 1 && p_n < 1.0 / n as f64
}

/// `1 / (C - e_s)` with the denominator floored at `eps_fraction * C`.
pub fn visibility(c: f64, e_s: f64, eps_fraction: f64) -> f64 {
    1.0 / (c - e_s).max(eps_fraction * c)
}

/// Unnormalised selection weights `tau^alpha * E^beta`; excluded entries get 0.
pub fn eeabr_weights(tau: &[f64], vis: &[f64], excluded: &[bool], alpha: f64, beta: f64) -> Vec<f64> {
    tau.iter()
        .zip(vis)
        .zip(excluded)
        .map(|((t, e), &x)| if x { 0.0 } else { t.max(0.0).powf(alpha) * e.powf(beta) })
        .collect()
}

/// Selection distribution over candidates; `None` if every candidate is excluded.
pub fn eeabr_distribution(tau: &[f64], vis: &[f64], excluded: &[bool], alpha: f64, beta: f64) -> Option<Vec<f64>> {
    let w = eeabr_weights(tau, vis, excluded, alpha, beta);
    let sum: f64 = w.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        return Some(w.into_iter().map(|x| x / sum).collect());
    }
    let free = excluded.iter().filter(|x| !**x).count();
    if free == 0 {
        return None;
    }
    // all admissible weights vanished: fall back to uniform over candidates
    Some(excluded.iter().map(|&x| if x { 0.0 } else { 1.0 / free as f64 }).collect())
}

/// Draw the next hop index from [`eeabr_distribution`]; `None` on a dead end.
pub fn eeabr_select_next(
    rng: &mut RandomStream,
    tau: &[f64],
    vis: &[f64],
    excluded: &[bool],
    alpha: f64,
    beta: f64,
) -> Option<usize> {
    let dist = eeabr_distribution(tau, vis, excluded, alpha, beta)?;
    rng.weighted_index(&dist)
}

/// Pheromone carried back by an ant: `1 / (C - (E_min - N_j) / (E_av - N_j))`,
/// clamped to `max` when the expression is undefined or non-positive.
pub fn eeabr_delta_tau(c: f64, e_min: f64, e_av: f64, n_j: f64, max: f64) -> f64 {
    let inner = e_av - n_j;
    if inner <= 0.0 {
        return max;
    }
    let denom = c - (e_min - n_j) / inner;
    if !(denom > 0.0) {
        return max;
    }
    (1.0 / denom).min(max)
}

/// `(1 - rho) tau + dtau / (phi * bd)`.
pub fn eeabr_update_trail(tau: f64, dtau: f64, bd: f64, rho: f64, phi: f64) -> f64 {
    (1.0 - rho) * tau + dtau / (phi * bd)
}

/// Destination-neighbor entry for `n` neighbors: `(9n - 5) / 4n^2`.
pub fn ieeabr_p_dd(n: usize) -> f64 {
    let n = n as f64;
    (9.0 * n - 5.0) / (4.0 * n * n)
}

/// Entry of every other neighbor: `(4n - 5) / 4n^2`, or 0 for a single neighbor.
pub fn ieeabr_p_dm(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let n = n as f64;
    (4.0 * n - 5.0) / (4.0 * n * n)
}

/// Initial column: uniform, or biased towards the destination when it is a neighbor.
pub fn ieeabr_initial(n: usize, dest_index: Option<usize>) -> Result<Vec<f64>, RuleError> {
    if n == 0 {
        return Err(RuleError::NoNeighbors);
    }
    Ok(match dest_index {
        None => vec![1.0 / n as f64; n],
        Some(d) if d < n => {
            let (dd, dm) = (ieeabr_p_dd(n), ieeabr_p_dm(n));
            (0..n).map(|i| if i == d { dd } else { dm }).collect()
        }
        Some(d) => return Err(RuleError::IndexOutOfRange { index: d, len: n }),
    })
}

/// Spread the lost neighbor's share over the survivors in proportion to
/// their current values. The lost entry is set to 0.
pub fn ieeabr_link_failure(col: &mut [f64], m: usize) -> Result<(), RuleError> {
    if m >= col.len() {
        return Err(RuleError::IndexOutOfRange { index: m, len: col.len() });
    }
    let p_m = col[m];
    if p_m == 0.0 {
        return Ok(());
    }
    let survivors: f64 = col.iter().enumerate().filter(|(i, _)| *i != m).map(|(_, v)| v).sum();
    if p_m >= 1.0 || survivors <= 0.0 {
        return Err(RuleError::Unreachable);
    }
    // 1 + p_m / (1 - p_m) = 1 / (1 - p_m); the survivors' own sum is that
    // denominator without the cancellation when p_m is close to 1.
    let scale = 1.0 / survivors;
    for (i, p) in col.iter_mut().enumerate() {
        if i == m {
            *p = 0.0;
        } else {
            *p *= scale;
        }
    }
    Ok(())
}

/// Admit a new forward ant iff fewer than `multiplier * k` are alive.
pub fn ieeabr_admit(live: usize, k: usize, multiplier: usize) -> bool {
    live < multiplier.saturating_mul(k)
}
