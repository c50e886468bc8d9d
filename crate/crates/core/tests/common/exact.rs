//! Exact-arithmetic reference implementations.

use claimgraph_core::metrics::FeverLabel;
use num_rational::{BigRational, Ratio};
use num_traits::ToPrimitive;

/// exp(x) by its Taylor series in exact rational arithmetic.
pub fn exp_rational(x: f64, terms: u32) -> BigRational {
    let x = BigRational::from_float(x).unwrap();
    let mut term = BigRational::from_float(1.0).unwrap();
    let mut sum = term.clone();
    for k in 1..=terms {
        term = term * &x / BigRational::from_float(f64::from(k)).unwrap();
        sum += &term;
    }
    sum
}

pub fn softmax_oracle(l: [f64; 3]) -> [f64; 3] {
    let e: Vec<BigRational> = l.iter().map(|x| exp_rational(*x, 60)).collect();
    let total = &e[0] + &e[1] + &e[2];
    [0, 1, 2].map(|i| (&e[i] / &total).to_f64().unwrap())
}

pub struct Expected {
    pub precision: [Ratio<i64>; 3],
    pub recall: [Ratio<i64>; 3],
    pub f1: [Ratio<i64>; 3],
    pub weighted: [Ratio<i64>; 3],
    pub accuracy: Ratio<i64>,
}

/// Per-label metrics straight from the definitions, F1 as the harmonic
/// mean of precision and recall.
pub fn metrics_oracle(m: [[i64; 3]; 3]) -> Expected {
    let n: i64 = m.iter().flatten().sum();
    let support = [0, 1, 2].map(|i| m[i].iter().sum::<i64>());
    let predicted = [0, 1, 2].map(|j| (0..3).map(|i| m[i][j]).sum::<i64>());
    let precision = [0, 1, 2].map(|i| Ratio::new(m[i][i], predicted[i]));
    let recall = [0, 1, 2].map(|i| Ratio::new(m[i][i], support[i]));
    let f1 =
        [0, 1, 2].map(|i| Ratio::from(2) * precision[i] * recall[i] / (precision[i] + recall[i]));
    let weigh = |v: &[Ratio<i64>; 3]| (0..3).map(|i| v[i] * support[i]).sum::<Ratio<i64>>() / n;
    Expected {
        weighted: [weigh(&precision), weigh(&recall), weigh(&f1)],
        accuracy: Ratio::new((0..3).map(|i| m[i][i]).sum(), n),
        precision,
        recall,
        f1,
    }
}

pub fn f(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn expand(m: [[i64; 3]; 3]) -> (Vec<FeverLabel>, Vec<FeverLabel>) {
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for (i, row) in m.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                gold.push(FeverLabel::ALL[i]);
                pred.push(FeverLabel::ALL[j]);
            }
        }
    }
    (gold, pred)
}
