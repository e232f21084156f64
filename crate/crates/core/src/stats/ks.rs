//! Empirical distribution functions and Kolmogorov–Smirnov distances.

use crate::limit_law::ChiLaw;
use crate::{Error, Result};

/// Right-continuous step function with mass `1/n` at each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("empirical cdf of an empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("empirical cdf of a sample containing NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.len() as f64
    }

    /// Pools two samples.
    pub fn merge(self, other: EmpiricalCdf) -> EmpiricalCdf {
        let (a, b) = (self.sorted, other.sorted);
        let mut sorted = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                sorted.push(a[i]);
                i += 1;
            } else {
                sorted.push(b[j]);
                j += 1;
            }
        }
        sorted.extend_from_slice(&a[i..]);
        sorted.extend_from_slice(&b[j..]);
        EmpiricalCdf { sorted }
    }

    /// `sup_t |F_n(t) − F(t)|`, evaluated at the jumps.
    pub fn ks_distance(&self, law: &ChiLaw) -> f64 {
        censored_sup(&self.sorted, self.len(), None, law)
    }
}

/// `max_i max(i/n − F(x_(i)), F(x_(i)) − (i−1)/n)`.
pub fn ks_statistic(samples: &[f64], law: &ChiLaw) -> Result<f64> {
    Ok(EmpiricalCdf::new(samples.to_vec())?.ks_distance(law))
}

/// KS distance when `total − observed.len()` further runs were censored at
/// `limit` (all observations lie at or below it).
///
/// Censored runs contribute no jump but stay in the denominator, and the
/// supremum runs over `t ≤ limit`, so the gap `F(limit) − observed/total`
/// left by the censored mass is included.
pub fn ks_statistic_censored(observed: &[f64], total: usize, limit: f64, law: &ChiLaw) -> Result<f64> {
    if total == 0 || observed.len() > total {
        return Err(Error::Domain(format!("{} observations out of {total} runs", observed.len())));
    }
    if observed.iter().any(|x| x.is_nan() || *x > limit) {
        return Err(Error::Domain("observations must not exceed the censoring limit".into()));
    }
    let mut sorted = observed.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(censored_sup(&sorted, total, Some(limit), law))
}

fn censored_sup(sorted: &[f64], total: usize, limit: Option<f64>, law: &ChiLaw) -> f64 {
    let n = total as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = law.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    if let Some(limit) = limit {
        d = d.max(law.cdf(limit) - sorted.len() as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

/// `sup_t |F_a(t) − F_b(t)|`.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = EmpiricalCdf::new(a.to_vec())?;
    let b = EmpiricalCdf::new(b.to_vec())?;
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let t = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= t {
            i += 1;
        }
        while j < xb.len() && xb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample critical value `c(α)·√((n+m)/(nm))`,
/// `c(α) = √(−ln(α/2)/2)`.
pub fn two_sample_critical_value(alpha: f64, n: usize, m: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || n == 0 || m == 0 {
        return Err(Error::Domain(format!("critical value needs alpha in (0,1) and nonempty samples, got {alpha}, {n}, {m}")));
    }
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    Ok(c * ((n + m) / (n * m)).sqrt())
}
