//! Reference implementations used as test oracles. They restate the scoring
//! rules independently of the library and enumerate paths exhaustively.

#![allow(dead_code)]

use mavils_core::SimilarityMatrix;

#[derive(Debug, Clone, Copy)]
pub struct Penalties {
    pub lambda_jump: f64,
    pub lambda_linear: f64,
}

/// Doubled cost when the previous slide is below the new one.
pub fn oracle_jump(prev: usize, next: usize, lambda: f64) -> f64 {
    if prev == next {
        return 0.0;
    }
    let d = prev.abs_diff(next) as f64;
    if prev < next {
        2.0 * d * lambda
    } else {
        d * lambda
    }
}

pub fn oracle_linear(i: usize, slide: usize, n: usize, m: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut e = 1.0 + (m as f64 / (n - 1) as f64) * i as f64;
    if e > m as f64 {
        e = m as f64;
    }
    if e < 1.0 {
        e = 1.0;
    }
    (e - slide as f64).abs() * lambda
}

pub fn oracle_score(s: &SimilarityMatrix, p: Penalties, path: &[usize]) -> f64 {
    let (n, m) = s.shape();
    let mut score = s.get(0, path[0] - 1) - oracle_linear(0, path[0], n, m, p.lambda_linear);
    for i in 1..n {
        score = score
            - oracle_jump(path[i - 1], path[i], p.lambda_jump)
            - oracle_linear(i, path[i], n, m, p.lambda_linear)
            + s.get(i, path[i] - 1);
    }
    score
}

/// Best score over all `m^n` slide sequences.
pub fn exhaustive_best(s: &SimilarityMatrix, p: Penalties) -> f64 {
    let (n, m) = s.shape();
    let mut path = vec![1usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        best = best.max(oracle_score(s, p, &path));
        let mut pos = n;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            if path[pos] < m {
                path[pos] += 1;
                break;
            }
            path[pos] = 1;
        }
    }
}

/// Per-frame argmax, first index on ties, 1-based.
pub fn row_argmax(s: &SimilarityMatrix) -> Vec<usize> {
    (0..s.n_frames())
        .map(|i| {
            let row = s.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best + 1
        })
        .collect()
}
