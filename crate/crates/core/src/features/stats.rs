use thiserror::Error;

use super::{FeatureVector, FEATURE_NAMES, NUMERIC_FEATURES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no observations")]
    Empty,
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least two observations are required")]
    TooShort,
    #[error("input has zero variance")]
    DegenerateVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Neumaier-compensated running sum. Partial sums merge associatively up to
/// rounding of the compensation terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value() / xs.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub name: &'static str,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

fn column_stats(name: &'static str, xs: &mut [f64]) -> FeatureStats {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).collect::<NeumaierSum>().value() / xs.len() as f64;
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let median = if n % 2 == 1 { xs[n / 2] } else { (xs[n / 2 - 1] + xs[n / 2]) / 2.0 };
    FeatureStats { name, mean: m, std: var.sqrt(), median, min: xs[0], max: xs[n - 1] }
}

/// Per-feature population statistics over the numeric features.
pub fn descriptive_stats(vectors: &[FeatureVector]) -> Result<Vec<FeatureStats>, StatsError> {
    if vectors.is_empty() {
        return Err(StatsError::Empty);
    }
    let rows: Vec<Vec<f64>> = vectors.iter().map(FeatureVector::numeric_values).collect();
    Ok((0..NUMERIC_FEATURES)
        .map(|j| {
            let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            column_stats(FEATURE_NAMES[j], &mut col)
        })
        .collect())
}

/// Pearson product-moment correlation, clamped to `[-1, 1]`.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (NeumaierSum::default(), NeumaierSum::default(), NeumaierSum::default());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let (vx, vy) = (sxx.value(), syy.value());
    if vx <= 0.0 || vy <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sxy.value() / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Symmetric correlation matrix with an exact unit diagonal.
pub fn correlation_matrix(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StatsError> {
    let k = columns.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let r = pearson_correlation(&columns[i], &columns[j])?;
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}
