//! Penalized dynamic-programming decoder.
//!
//! The decoder keeps a table `D` where `D[i][j]` is the best cumulative score of
//! any slide sequence for frames `0..=i` that shows slide `j` at frame `i`:
//!
//! ```text
//! D[0][j] = S[0][j] - linear(0, j)
//! D[i][j] = max_k( D[i-1][k] - jump(k, j) - linear(i, j) ) + S[i][j]
//! ```
//!
//! `jump(k, j)` charges for moving from slide `k` to slide `j` between
//! consecutive frames and `linear(i, j)` charges for straying from the slide a
//! presenter walking the deck at constant speed would show at frame `i`.
//!
//! Slide indices are 1-based in every public value; frame indices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;

/// What the linear penalty measures the expected slide index against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearPenaltyMode {
    /// `|e_i - j|`: distance between the expected and the candidate slide.
    #[default]
    SlideDeviation,
    /// `|e_i - i|`: expected slide against the frame index. Constant in the
    /// candidate slide, so it shifts scores without changing the path.
    Literal,
}

/// Which transition direction carries the doubled jump cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpDirectionMode {
    /// Doubled cost when the previous slide `k` is below the new slide `j`.
    #[default]
    AsWritten,
    /// Doubled cost when the previous slide `k` is above the new slide `j`,
    /// i.e. on moves back through the deck.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentConfig {
    pub lambda_jump: f64,
    pub lambda_linear: f64,
    #[serde(default)]
    pub linear_penalty_mode: LinearPenaltyMode,
    #[serde(default)]
    pub jump_direction_mode: JumpDirectionMode,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            lambda_jump: 0.1,
            lambda_linear: 0.0,
            linear_penalty_mode: LinearPenaltyMode::SlideDeviation,
            jump_direction_mode: JumpDirectionMode::AsWritten,
        }
    }
}

impl AlignmentConfig {
    pub fn with_lambdas(lambda_jump: f64, lambda_linear: f64) -> Self {
        Self {
            lambda_jump,
            lambda_linear,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_jump", self.lambda_jump),
            ("lambda_linear", self.lambda_linear),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Decoded slide sequence for one lecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// Slide index (1-based) for every frame.
    pub path: Vec<usize>,
    /// Optimal terminal value of the decoding table.
    pub cumulative_score: f64,
    /// Similarity of each frame with its decoded slide.
    pub per_frame_scores: Vec<f64>,
    pub lambda_jump: f64,
    pub lambda_linear: f64,
}

impl Alignment {
    pub fn n_frames(&self) -> usize {
        self.path.len()
    }

    /// Number of consecutive frame pairs showing different slides.
    pub fn transitions(&self) -> usize {
        self.path.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Cost of moving from slide `k` to slide `j` (both 1-based).
pub fn jump_penalty(k: usize, j: usize, lambda_jump: f64, mode: JumpDirectionMode) -> f64 {
    let dist = k.abs_diff(j) as f64;
    let doubled = match mode {
        JumpDirectionMode::AsWritten => k < j,
        JumpDirectionMode::Swapped => k > j,
    };
    if k == j {
        0.0
    } else if doubled {
        2.0 * dist * lambda_jump
    } else {
        dist * lambda_jump
    }
}

/// Slide index (1-based, fractional) expected at frame `i` for a presenter
/// moving through `m` slides at constant speed over `n` frames, kept within
/// `[1, m]`.
pub fn expected_slide_index(i: usize, n: usize, m: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::SingleFrameLinear);
    }
    if m == 0 {
        return Err(Error::Empty("deck has no slides"));
    }
    if i >= n {
        return Err(Error::invalid(format!("frame index {i} out of range for {n} frames")));
    }
    let e = 1.0 + (m as f64 / (n - 1) as f64) * i as f64;
    Ok(e.clamp(1.0, m as f64))
}

/// Penalty for showing slide `j` (1-based) at frame `i` (0-based).
pub fn linear_penalty(
    i: usize,
    j: usize,
    config: &AlignmentConfig,
    n: usize,
    m: usize,
) -> Result<f64> {
    if config.lambda_linear == 0.0 {
        return Ok(0.0);
    }
    let e = expected_slide_index(i, n, m)?;
    let reference = match config.linear_penalty_mode {
        LinearPenaltyMode::SlideDeviation => j as f64,
        LinearPenaltyMode::Literal => i as f64,
    };
    Ok((e - reference).abs() * config.lambda_linear)
}

/// Row-major `n x m` table of linear penalties, `table[i * m + (j - 1)]`.
fn linear_table(config: &AlignmentConfig, n: usize, m: usize) -> Result<Vec<f64>> {
    let mut table = vec![0.0; n * m];
    if config.lambda_linear == 0.0 {
        return Ok(table);
    }
    for i in 0..n {
        for j in 0..m {
            table[i * m + j] = linear_penalty(i, j + 1, config, n, m)?;
        }
    }
    Ok(table)
}

/// Decodes the highest-scoring slide sequence for `sim`.
///
/// Every max breaks ties toward the smallest slide index. Runs in
/// `O(n * m^2)` time and `O(n * m)` memory.
pub fn dp_align(sim: &SimilarityMatrix, config: &AlignmentConfig) -> Result<Alignment> {
    config.validate()?;
    let (n, m) = sim.shape();
    if n == 0 || m == 0 {
        return Err(Error::Empty("similarity matrix"));
    }
    let linear = linear_table(config, n, m)?;

    // jump[j * m + k]: cost of arriving at column j from column k.
    let mut jump = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            jump[j * m + k] = jump_penalty(k + 1, j + 1, config.lambda_jump, config.jump_direction_mode);
        }
    }

    let mut back = vec![0u32; n * m];
    let mut prev: Vec<f64> = (0..m).map(|j| sim.get(0, j) - linear[j]).collect();
    let mut cur = vec![0.0; m];

    for i in 1..n {
        let s_row = sim.row(i);
        let lin_row = &linear[i * m..(i + 1) * m];
        let back_row = &mut back[i * m..(i + 1) * m];
        for j in 0..m {
            let jump_row = &jump[j * m..(j + 1) * m];
            let lin = lin_row[j];
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (k, (&d, &p)) in prev.iter().zip(jump_row).enumerate() {
                let cand = d - p - lin;
                if cand > best {
                    best = cand;
                    arg = k;
                }
            }
            cur[j] = best + s_row[j];
            back_row[j] = arg as u32;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let (mut last, cumulative_score) = argmax(&prev);
    let mut path = vec![0usize; n];
    for i in (0..n).rev() {
        path[i] = last + 1;
        last = back[i * m + last] as usize;
    }
    let per_frame_scores = path.iter().enumerate().map(|(i, &j)| sim.get(i, j - 1)).collect();

    Ok(Alignment {
        path,
        cumulative_score,
        per_frame_scores,
        lambda_jump: config.lambda_jump,
        lambda_linear: config.lambda_linear,
    })
}

/// First index of the maximum value.
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Score of an arbitrary slide sequence, accumulated in the same order as the
/// decoder so an optimal path reproduces the decoder's value exactly.
pub fn path_score(sim: &SimilarityMatrix, config: &AlignmentConfig, path: &[usize]) -> Result<f64> {
    let (n, m) = sim.shape();
    if path.len() != n {
        return Err(Error::LengthMismatch {
            pred: path.len(),
            truth: n,
        });
    }
    if let Some(&bad) = path.iter().find(|&&j| j == 0 || j > m) {
        return Err(Error::invalid(format!("slide {bad} outside 1..={m}")));
    }
    let mut score = sim.get(0, path[0] - 1) - linear_penalty(0, path[0], config, n, m)?;
    for i in 1..n {
        let (k, j) = (path[i - 1], path[i]);
        let jump = jump_penalty(k, j, config.lambda_jump, config.jump_direction_mode);
        score = score - jump - linear_penalty(i, j, config, n, m)? + sim.get(i, j - 1);
    }
    Ok(score)
}
