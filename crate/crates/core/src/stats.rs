//! Monte-Carlo summary statistics.

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    /// `|self - other|` in units of the combined standard error. Zero when
    /// both sides agree exactly, `inf` when they differ with no noise.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let se = self.std_error.hypot(other.std_error);
        if diff == 0.0 {
            0.0
        } else {
            diff / se
        }
    }
}

/// Mean and standard error, summed in slice order. Sums are taken relative
/// to the first sample, so a constant sample has exactly its value as mean.
pub fn mean_estimate(samples: &[f64]) -> Estimate {
    let n = samples.len() as f64;
    let Some(&shift) = samples.first() else {
        return Estimate::exact(f64::NAN);
    };
    let mean = shift + samples.iter().map(|x| x - shift).sum::<f64>() / n;
    if samples.len() < 2 {
        return Estimate::exact(mean);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

/// Unbiased sample variance with the large-sample standard error
/// `sqrt((m4 - s^4) / n)`.
pub fn variance_estimate(samples: &[f64]) -> Estimate {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return Estimate::exact(0.0);
    }
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Estimate {
        value: m2 * n / (n - 1.0),
        std_error: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Empirical pmf of integer samples.
pub fn empirical_pmf(samples: &[u64]) -> Vec<f64> {
    let len = samples.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut pmf = vec![0.0; len];
    for s in samples {
        pmf[*s as usize] += 1.0;
    }
    let n = samples.len() as f64;
    pmf.iter_mut().for_each(|p| *p /= n);
    pmf
}

/// Total-variation distance `1/2 sum |p_i - q_i|`; missing entries count as 0.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Sample covariance with the standard error of the mean of the centred products.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> Estimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    mean_estimate(&products)
}
