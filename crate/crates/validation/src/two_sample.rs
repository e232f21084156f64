/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = a.iter().chain(&b).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
        .iter()
        .map(|&t| {
            let fa = a.partition_point(|&x| x <= t) as f64 / a.len() as f64;
            let fb = b.partition_point(|&x| x <= t) as f64 / b.len() as f64;
            (fa - fb).abs()
        })
        .fold(0.0, f64::max)
}

/// Rejection threshold at level `alpha` for sample sizes `n` and `m`.
pub fn critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}
