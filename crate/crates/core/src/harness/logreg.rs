//! L2-regularized logistic regression fitted by gradient descent with
//! Armijo backtracking.

use std::fmt::Write as _;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    /// Stop once the gradient's infinity norm drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { l2_lambda: 0.01, tol: 1e-8, max_iters: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub columns: Vec<String>,
    /// Per-column `(mean, std)` of the training rows.
    pub standardization: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `(lambda / 2) * |w|^2`. The last
/// parameter is the unpenalized bias.
pub fn objective(params: &[f64], x: &[Vec<f64>], y: &[u8], lambda: f64) -> f64 {
    let (w, b) = params.split_at(params.len() - 1);
    let nll: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z = dot(w, row) + b[0];
            softplus(z) - yi as f64 * z
        })
        .sum();
    nll / x.len() as f64 + 0.5 * lambda * dot(w, w)
}

pub fn gradient(params: &[f64], x: &[Vec<f64>], y: &[u8], lambda: f64) -> Vec<f64> {
    let d = params.len() - 1;
    let (w, b) = params.split_at(d);
    let mut g = vec![0.0; d + 1];
    for (row, &yi) in x.iter().zip(y) {
        let r = sigmoid(dot(w, row) + b[0]) - yi as f64;
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    let n = x.len() as f64;
    for (j, gj) in g.iter_mut().enumerate() {
        *gj /= n;
        if j < d {
            *gj += lambda * w[j];
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn standardize(rows: &[Vec<f64>], stats: &[(f64, f64)]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().zip(stats).map(|(v, (m, s))| (v - m) / s).collect())
        .collect()
}

/// Fits the model from zero initialization. Standardization statistics come
/// from `rows` only.
pub fn train_logreg(
    columns: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<(LogisticModel, TrainReport), HarnessError> {
    if rows.len() != labels.len() {
        return Err(HarnessError::LengthMismatch(rows.len(), labels.len()));
    }
    if rows.len() < 2 {
        return Err(HarnessError::TooFewRows(rows.len()));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(HarnessError::SingleClass);
    }
    if rows.iter().any(|r| r.len() != columns.len()) {
        return Err(HarnessError::SchemaMismatch { expected: columns.len(), found: rows[0].len() });
    }
    let n = rows.len() as f64;
    let stats: Vec<(f64, f64)> = (0..columns.len())
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std > 0.0 { std } else { 1.0 })
        })
        .collect();
    let x = standardize(rows, &stats);
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HarnessError::NonFinite);
    }

    let lambda = config.l2_lambda;
    let mut params = vec![0.0; columns.len() + 1];
    let mut loss = objective(&params, &x, labels, lambda);
    let mut history = vec![loss];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let g = gradient(&params, &x, labels, lambda);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.tol {
            converged = true;
            break;
        }
        let g2 = dot(&g, &g);
        // Grow the trial step a little each iteration, then backtrack.
        step *= 2.0;
        let accepted = loop {
            let trial: Vec<f64> = params.iter().zip(&g).map(|(p, gj)| p - step * gj).collect();
            let trial_loss = objective(&trial, &x, labels, lambda);
            if trial_loss <= loss - 1e-4 * step * g2 {
                break Some((trial, trial_loss));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        iterations += 1;
        let Some((next, next_loss)) = accepted else { break };
        params = next;
        loss = next_loss;
        history.push(loss);
    }
    let bias = params.pop().unwrap();
    let model = LogisticModel {
        columns: columns.to_vec(),
        standardization: stats,
        weights: params,
        bias,
        l2_lambda: lambda,
    };
    Ok((model, TrainReport { iterations, converged, loss_history: history }))
}

impl LogisticModel {
    pub fn predict(&self, columns: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>, HarnessError> {
        if columns != self.columns.as_slice() {
            return Err(HarnessError::SchemaMismatch { expected: self.columns.len(), found: columns.len() });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != self.columns.len()) {
            return Err(HarnessError::SchemaMismatch { expected: self.columns.len(), found: r.len() });
        }
        Ok(standardize(rows, &self.standardization)
            .iter()
            .map(|r| sigmoid(dot(&self.weights, r) + self.bias))
            .collect())
    }

    /// Plain-text form: `bias`, `l2_lambda`, then one `feature` line per column.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "bias {}", self.bias).unwrap();
        writeln!(out, "l2_lambda {}", self.l2_lambda).unwrap();
        for ((name, (m, s)), w) in self.columns.iter().zip(&self.standardization).zip(&self.weights) {
            writeln!(out, "feature {name} {m} {s} {w}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let bad = |line: usize, why: &str| HarnessError::Format { file: "model", reason: format!("line {line}: {why}") };
        let num = |line: usize, s: &str| s.parse::<f64>().map_err(|e| bad(line, &e.to_string()));
        let mut model = LogisticModel { columns: vec![], standardization: vec![], weights: vec![], bias: 0.0, l2_lambda: 0.0 };
        let (mut has_bias, mut has_lambda) = (false, false);
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                ["bias", v] => {
                    model.bias = num(n, v)?;
                    has_bias = true;
                }
                ["l2_lambda", v] => {
                    model.l2_lambda = num(n, v)?;
                    has_lambda = true;
                }
                ["feature", name, m, s, w] => {
                    model.columns.push(name.to_string());
                    model.standardization.push((num(n, m)?, num(n, s)?));
                    model.weights.push(num(n, w)?);
                }
                _ => return Err(bad(n, "unrecognized line")),
            }
        }
        if !has_bias || !has_lambda {
            return Err(bad(0, "missing bias or l2_lambda"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cols(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0) ^ u8::from(rng.random_bool(0.2))).collect();
        let p: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
        (x, y, p)
    }

    #[test]
    fn separable_pair_gets_positive_weight() {
        let (m, _) = train_logreg(&cols(1), &[vec![-1.0], vec![1.0]], &[0, 1], &TrainConfig { l2_lambda: 0.1, ..Default::default() }).unwrap();
        assert!(m.weights[0] > 0.0);
        let p = m.predict(&cols(1), &[vec![-1.0], vec![1.0]]).unwrap();
        assert!(p[0] < 0.5 && p[1] > 0.5);
    }

    #[test]
    fn heavy_penalty_returns_the_prior() {
        let (x, y, _) = random_problem(3, 40, 3);
        let cfg = TrainConfig { l2_lambda: 1e9, ..Default::default() };
        let (m, _) = train_logreg(&cols(3), &x, &y, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-8));
        let prior = y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64;
        assert!((sigmoid(m.bias) - prior).abs() < 1e-6);
    }

    #[test]
    fn zero_model_scores_one_half() {
        let m = LogisticModel { columns: cols(2), standardization: vec![(0.0, 1.0); 2], weights: vec![0.0; 2], bias: 0.0, l2_lambda: 0.0 };
        assert_eq!(m.predict(&cols(2), &[vec![3.0, -7.0]]).unwrap(), vec![0.5]);
        assert!(matches!(m.predict(&cols(3), &[]), Err(HarnessError::SchemaMismatch { .. })));
    }

    #[test]
    fn rejects_single_class_and_non_finite() {
        assert!(matches!(train_logreg(&cols(1), &[vec![1.0], vec![2.0]], &[1, 1], &TrainConfig::default()), Err(HarnessError::SingleClass)));
        let r = train_logreg(&cols(1), &[vec![f64::NAN], vec![2.0]], &[0, 1], &TrainConfig::default());
        assert!(matches!(r, Err(HarnessError::NonFinite)));
    }

    #[test]
    fn predictions_match_direct_formula() {
        let (x, y, _) = random_problem(11, 60, 4);
        let (m, _) = train_logreg(&cols(4), &x, &y, &TrainConfig::default()).unwrap();
        let p = m.predict(&cols(4), &x[..50]).unwrap();
        for (row, pi) in x[..50].iter().zip(&p) {
            let mut z = m.bias;
            for j in 0..4 {
                let (mean, std) = m.standardization[j];
                z += m.weights[j] * (row[j] - mean) / std;
            }
            assert!((pi - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn model_text_round_trip() {
        let (x, y, _) = random_problem(5, 30, 3);
        let (m, _) = train_logreg(&cols(3), &x, &y, &TrainConfig::default()).unwrap();
        assert_eq!(LogisticModel::from_text(&m.to_text()).unwrap(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn gradient_matches_central_differences(seed: u64) {
            let (x, y, p) = random_problem(seed, 30, 8);
            let lambda = 0.05;
            let g = gradient(&p, &x, &y, lambda);
            let h = 1e-5;
            for j in 0..p.len() {
                let mut up = p.clone();
                let mut down = p.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (objective(&up, &x, &y, lambda) - objective(&down, &x, &y, lambda)) / (2.0 * h);
                let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-8);
                prop_assert!(rel < 1e-6, "param {} analytic {} fd {} rel {}", j, g[j], fd, rel);
            }
        }

        #[test]
        fn loss_never_increases(seed: u64) {
            let (x, y, _) = random_problem(seed, 40, 5);
            let (_, report) = train_logreg(&cols(5), &x, &y, &TrainConfig { max_iters: 500, ..Default::default() }).unwrap();
            for w in report.loss_history.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }
}
