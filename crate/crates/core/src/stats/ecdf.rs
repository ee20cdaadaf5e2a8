use crate::error::{invalid, Error, Result};

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(invalid("sample contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        Ok(Self { sorted: sorted(sample)? })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Distinct values with the cumulative fraction reached at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted
    }

    /// Two-sample KS distance between `sample` and this ECDF, computed with one
    /// binary search per distinct sample value so a large reference is sorted once.
    pub fn ks_distance_to(&self, sample: &[f64]) -> Result<f64> {
        let s = sorted(sample)?;
        let (n, m) = (s.len() as f64, self.sorted.len() as f64);
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < s.len() {
            let v = s[i];
            let below = i as f64 / n;
            while i < s.len() && s[i] == v {
                i += 1;
            }
            let above = i as f64 / n;
            let left = self.sorted.partition_point(|&x| x < v) as f64 / m;
            let right = self.sorted.partition_point(|&x| x <= v) as f64 / m;
            d = d.max((below - left).abs()).max((above - right).abs());
        }
        Ok(d)
    }
}

/// Type-7 sample quantile of sorted data: linear between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `n_quantiles` matched quantiles at evenly spaced probabilities from 0 to 1
/// (the median alone when `n_quantiles` is 1).
pub fn qq_pairs(a: &[f64], b: &[f64], n_quantiles: usize) -> Result<Vec<(f64, f64)>> {
    if n_quantiles == 0 {
        return Err(invalid("need at least one quantile"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    Ok((0..n_quantiles)
        .map(|k| {
            let p = if n_quantiles == 1 { 0.5 } else { k as f64 / (n_quantiles - 1) as f64 };
            (quantile(&a, p), quantile(&b, p))
        })
        .collect())
}

/// Supremum distance between the sample's ECDF and a continuous CDF.
///
/// The supremum is attained at a sample point, approached from the left or
/// reached from the right, so checking both sides of every distinct value is exact.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let e = Ecdf::new(sample)?;
    let n = e.len() as f64;
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    let s = e.sorted_sample();
    while i < s.len() {
        let v = s[i];
        let mut j = i;
        while j < s.len() && s[j] == v {
            j += 1;
        }
        let f = cdf(v);
        let above = j as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
        below = above;
        i = j;
    }
    Ok(d.min(1.0))
}

/// Supremum distance between two ECDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
