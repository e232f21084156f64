//! Exact extinction-time law of a fixed-environment monogamous process
//! `N' = min(F, M)`, `F, M ~ Poisson(m·N)` independent, truncated to
//! `{0, …, top}` with the top state absorbing the overflow.

fn poisson_tail(lambda: f64, upto: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; upto + 1];
    pmf[0] = (-lambda).exp();
    for k in 1..=upto {
        pmf[k] = pmf[k - 1] * lambda / k as f64;
    }
    let mut tail = vec![0.0; upto + 2];
    for k in (0..=upto).rev() {
        tail[k] = tail[k + 1] + pmf[k];
    }
    tail
}

/// `P(τ ≤ n)` for `n = 1..=horizon` starting from `n0` couples.
pub fn monogamous_absorption_cdf(mean: f64, n0: usize, top: usize, horizon: usize) -> Vec<f64> {
    let mut matrix = vec![vec![0.0; top + 1]; top + 1];
    matrix[0][0] = 1.0;
    let support = (4.0 * mean * top as f64) as usize + 4 * top + 50;
    for (j, row) in matrix.iter_mut().enumerate().skip(1) {
        let tail = poisson_tail(mean * j as f64, support);
        for k in 0..top {
            row[k] = tail[k].powi(2) - tail[k + 1].powi(2);
        }
        row[top] = tail[top].powi(2);
    }
    let mut dist = vec![0.0; top + 1];
    dist[n0] = 1.0;
    let mut cdf = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut next = vec![0.0; top + 1];
        for (j, &p) in dist.iter().enumerate() {
            if p > 0.0 {
                for (k, &q) in matrix[j].iter().enumerate() {
                    next[k] += p * q;
                }
            }
        }
        dist = next;
        cdf.push(dist[0]);
    }
    cdf
}
