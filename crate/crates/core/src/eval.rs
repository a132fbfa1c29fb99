//! Scoring alignments against labeled ground truth, plus lecture statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::align::Alignment;
use crate::error::{Error, Result};
use crate::NO_SLIDE;

/// One transcript sentence and the slide shown while it was spoken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_time: f64,
    pub end_time: f64,
    pub sentence: String,
    /// 1-based slide index, or `-1` when no slide is identifiable.
    pub slide_label: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub segments: Vec<Segment>,
    pub total_slides: usize,
}

impl GroundTruth {
    pub fn new(segments: Vec<Segment>, total_slides: usize) -> Result<Self> {
        if total_slides == 0 {
            return Err(Error::GroundTruth("total_slides must be >= 1".into()));
        }
        let mut prev: Option<&Segment> = None;
        for (row, seg) in segments.iter().enumerate() {
            if !(seg.start_time.is_finite() && seg.end_time.is_finite()) {
                return Err(Error::GroundTruth(format!("segment {row}: non-finite time")));
            }
            if seg.start_time < 0.0 || seg.end_time < seg.start_time {
                return Err(Error::GroundTruth(format!(
                    "segment {row}: invalid time span {}..{}",
                    seg.start_time, seg.end_time
                )));
            }
            if let Some(p) = prev {
                if seg.start_time < p.start_time || seg.end_time < p.end_time {
                    return Err(Error::GroundTruth(format!(
                        "segment {row}: times decrease ({}..{} after {}..{})",
                        seg.start_time, seg.end_time, p.start_time, p.end_time
                    )));
                }
            }
            let label = seg.slide_label;
            if label != NO_SLIDE && !(1..=total_slides as i64).contains(&label) {
                return Err(Error::GroundTruth(format!(
                    "segment {row}: slide {label} outside 1..={total_slides}"
                )));
            }
            prev = Some(seg);
        }
        Ok(Self {
            segments,
            total_slides,
        })
    }

    /// Ground truth with unit-length segments and empty sentences.
    pub fn from_labels(labels: &[i64], total_slides: usize) -> Result<Self> {
        let segments = labels
            .iter()
            .enumerate()
            .map(|(i, &slide_label)| Segment {
                start_time: i as f64,
                end_time: (i + 1) as f64,
                sentence: String::new(),
                slide_label,
            })
            .collect();
        Self::new(segments, total_slides)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn labels(&self) -> Vec<i64> {
        self.segments.iter().map(|s| s.slide_label).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Fraction of scored frames whose decoded slide matches the label.
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub n_scored: usize,
    /// Frames labeled `-1`.
    pub n_ignored: usize,
    pub volatility: f64,
    pub no_slide_ratio: f64,
    /// Volatility counts changes into and out of `-1` as slide changes.
    pub volatility_counts_no_slide: bool,
}

/// Scores a decoded alignment; frame `i` is compared with segment `i`.
pub fn score_alignment(pred: &Alignment, truth: &GroundTruth) -> Result<EvalReport> {
    score_path(&pred.path, truth)
}

/// [`score_alignment`] on a bare slide path (1-based).
pub fn score_path(path: &[usize], truth: &GroundTruth) -> Result<EvalReport> {
    if path.len() != truth.len() {
        return Err(Error::LengthMismatch {
            pred: path.len(),
            truth: truth.len(),
        });
    }
    let no_slide_ratio = no_slide_ratio(truth)?;
    let volatility = volatility_score(truth);

    let scored: Vec<(i64, i64)> = path
        .iter()
        .zip(&truth.segments)
        .filter(|(_, s)| s.slide_label != NO_SLIDE)
        .map(|(&p, s)| (p as i64, s.slide_label))
        .collect();
    let n_scored = scored.len();
    let correct = scored.iter().filter(|(p, t)| p == t).count();

    // (tp, fp, fn) for every class present in the truth
    let mut counts: BTreeMap<i64, (usize, usize, usize)> = BTreeMap::new();
    for &(_, t) in &scored {
        counts.entry(t).or_default();
    }
    for &(p, t) in &scored {
        if p == t {
            counts.get_mut(&t).unwrap().0 += 1;
        } else {
            counts.get_mut(&t).unwrap().2 += 1;
            if let Some(c) = counts.get_mut(&p) {
                c.1 += 1;
            }
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &(tp, fp, fn_) in counts.values() {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        p_sum += precision;
        r_sum += recall;
        f_sum += f1;
    }
    let classes = counts.len() as f64;

    Ok(EvalReport {
        accuracy: ratio(correct, n_scored),
        precision_macro: p_sum / classes,
        recall_macro: r_sum / classes,
        f1_macro: f_sum / classes,
        n_scored,
        n_ignored: truth.len() - n_scored,
        volatility,
        no_slide_ratio,
        volatility_counts_no_slide: true,
    })
}

/// Label changes between consecutive segments divided by the deck size.
/// Changes into and out of `-1` count.
pub fn volatility_score(truth: &GroundTruth) -> f64 {
    let changes = truth
        .segments
        .windows(2)
        .filter(|w| w[0].slide_label != w[1].slide_label)
        .count();
    changes as f64 / truth.total_slides as f64
}

/// Segments without a slide per segment with one.
pub fn no_slide_ratio(truth: &GroundTruth) -> Result<f64> {
    let none = truth
        .segments
        .iter()
        .filter(|s| s.slide_label == NO_SLIDE)
        .count();
    let some = truth.len() - none;
    if some == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(none as f64 / some as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "pearson_r needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson_r needs at least two points"));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
