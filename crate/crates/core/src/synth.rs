//! Synthetic lectures with a planted slide path.
//!
//! Every modality matrix holds `signal` on the planted path, `0.9 * signal` on
//! an occasional distractor slide, zero elsewhere, plus independent Gaussian
//! noise. Frames labeled `-1` carry no signal in any modality.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{GroundTruth, Segment};
use crate::matrix::{Modality, SimilarityMatrix};
use crate::NO_SLIDE;

const SEGMENT_SECONDS: f64 = 5.0;
const DISTRACTOR_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_frames: usize,
    pub m_slides: usize,
    /// Similarity on planted-path entries, in `(0, 1]`.
    pub signal: f64,
    pub noise_sigma: f64,
    /// Target slide changes per slide on the planted path.
    pub volatility: f64,
    /// Fraction of frames relabeled `-1`, in `[0, 1)`.
    pub no_slide_fraction: f64,
    /// Per-frame chance that one wrong slide gets a near-signal value.
    pub distractor_prob: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_frames: 200,
            m_slides: 20,
            signal: 0.6,
            noise_sigma: 0.3,
            volatility: 1.0,
            no_slide_fraction: 0.0,
            distractor_prob: 0.15,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 || self.m_slides == 0 {
            return Err(Error::invalid("n_frames and m_slides must be >= 1"));
        }
        if !(self.signal > 0.0 && self.signal <= 1.0) {
            return Err(Error::invalid(format!("signal must lie in (0, 1], got {}", self.signal)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma must be finite and >= 0"));
        }
        if !(self.volatility.is_finite() && self.volatility >= 0.0) {
            return Err(Error::invalid("volatility must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.no_slide_fraction) {
            return Err(Error::invalid("no_slide_fraction must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.distractor_prob) {
            return Err(Error::invalid("distractor_prob must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Slide changes the planted path will contain.
    pub fn target_changes(&self) -> usize {
        (self.volatility * self.m_slides as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLecture {
    pub truth: GroundTruth,
    /// Planted slide path before `-1` masking.
    pub path: Vec<usize>,
    pub text: SimilarityMatrix,
    pub audio: SimilarityMatrix,
    pub image: SimilarityMatrix,
}

impl SynthLecture {
    pub fn matrices(&self) -> [&SimilarityMatrix; 3] {
        [&self.text, &self.audio, &self.image]
    }
}

/// Builds a lecture from `spec`; identical specs give identical lectures.
///
/// The planted path has exactly `round(volatility * m_slides)` changes. The
/// volatility target applies to that path; masking frames as `-1` afterwards
/// adds changes of its own.
pub fn generate(spec: &SynthSpec) -> Result<SynthLecture> {
    spec.validate()?;
    let (n, m) = (spec.n_frames, spec.m_slides);
    let changes = spec.target_changes();
    if changes > n - 1 {
        return Err(Error::Infeasible(format!(
            "volatility {} over {m} slides needs {changes} changes, {n} frames allow at most {}",
            spec.volatility,
            n - 1
        )));
    }
    if changes > 0 && m == 1 {
        return Err(Error::Infeasible("a single-slide deck cannot change slides".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let path = planted_path(&mut rng, n, m, changes);

    let mut labels: Vec<i64> = path.iter().map(|&s| s as i64).collect();
    let masked = (spec.no_slide_fraction * n as f64).floor() as usize;
    for i in sample(&mut rng, n, masked) {
        labels[i] = NO_SLIDE;
    }

    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut modality_matrix = |modality: Modality| -> Result<SimilarityMatrix> {
        let mut values = vec![0.0; n * m];
        for (i, &label) in labels.iter().enumerate() {
            if label == NO_SLIDE {
                continue;
            }
            let truth_col = label as usize - 1;
            values[i * m + truth_col] = spec.signal;
            if m > 1 && rng.random_bool(spec.distractor_prob) {
                let mut col = rng.random_range(0..m - 1);
                if col >= truth_col {
                    col += 1;
                }
                values[i * m + col] = spec.signal * DISTRACTOR_FACTOR;
            }
        }
        if spec.noise_sigma > 0.0 {
            for v in values.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        SimilarityMatrix::new(n, m, values, modality.as_str())
    };
    let text = modality_matrix(Modality::Text)?;
    let audio = modality_matrix(Modality::Audio)?;
    let image = modality_matrix(Modality::Image)?;

    let segments = labels
        .iter()
        .enumerate()
        .map(|(i, &slide_label)| Segment {
            start_time: i as f64 * SEGMENT_SECONDS,
            end_time: (i + 1) as f64 * SEGMENT_SECONDS,
            sentence: format!("segment {i}"),
            slide_label,
        })
        .collect();
    let truth = GroundTruth::new(segments, m)?;

    Ok(SynthLecture {
        truth,
        path,
        text,
        audio,
        image,
    })
}

/// Walks the deck from slide 1 with exactly `changes` changes. A change opens
/// the next unseen slide with probability `(m - 1) / changes` and otherwise
/// revisits a random earlier slide, so volatility above 1 produces
/// back-and-forth navigation.
fn planted_path(rng: &mut impl Rng, n: usize, m: usize, changes: usize) -> Vec<usize> {
    let mut at = vec![false; n];
    if changes > 0 {
        for pos in sample(rng, n - 1, changes) {
            at[pos + 1] = true;
        }
    }
    let p_advance = if changes == 0 {
        1.0
    } else {
        ((m - 1) as f64 / changes as f64).min(1.0)
    };

    let mut path = Vec::with_capacity(n);
    let (mut cur, mut furthest) = (1usize, 1usize);
    for &change in &at {
        if change {
            let must_advance = furthest == 1;
            if furthest < m && (must_advance || rng.random_bool(p_advance)) {
                furthest += 1;
                cur = furthest;
            } else {
                let mut next = rng.random_range(1..furthest);
                if next >= cur {
                    next += 1;
                }
                cur = next;
            }
        }
        path.push(cur);
    }
    path
}
