//! Fusion of per-modality similarity matrices.
//!
//! Three rules are provided: element-wise mean, element-wise max, and a
//! weighted sum whose weights live on the probability simplex and can be fit
//! per lecture by projected Adam ascent on the decoder's optimal score.

use serde::{Deserialize, Serialize};

use crate::align::{dp_align, AlignmentConfig};
use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;

const SIMPLEX_TOL: f64 = 1e-9;

/// Mixing weights for the text (OCR), audio (transcript) and image matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityWeights {
    pub w_text: f64,
    pub w_audio: f64,
    pub w_image: f64,
}

impl Default for ModalityWeights {
    fn default() -> Self {
        Self::equal()
    }
}

impl ModalityWeights {
    pub fn equal() -> Self {
        let third = 1.0 / 3.0;
        Self {
            w_text: third,
            w_audio: third,
            w_image: third,
        }
    }

    pub fn new(w_text: f64, w_audio: f64, w_image: f64) -> Result<Self> {
        let w = Self {
            w_text,
            w_audio,
            w_image,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let arr = self.to_array();
        if arr.iter().any(|w| !w.is_finite() || *w < -SIMPLEX_TOL) {
            return Err(Error::invalid(format!("weights must be finite and >= 0: {arr:?}")));
        }
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.w_text, self.w_audio, self.w_image]
    }

    fn from_array(w: [f64; 3]) -> Self {
        Self {
            w_text: w[0],
            w_audio: w[1],
            w_image: w[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub iterations: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            iterations: 50,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return Err(Error::invalid("adam_epsilon must be > 0"));
        }
        Ok(())
    }
}

fn check_shapes(matrices: &[&SimilarityMatrix]) -> Result<(usize, usize)> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::invalid("at least one matrix is required"))?;
    let shape = first.shape();
    for m in &matrices[1..] {
        if m.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: m.shape(),
            });
        }
    }
    Ok(shape)
}

fn zip_with(
    matrices: &[&SimilarityMatrix],
    tag: &str,
    fold: impl Fn(&mut f64, f64),
) -> Result<SimilarityMatrix> {
    let (n, m) = check_shapes(matrices)?;
    let mut out = matrices[0].values().to_vec();
    for mat in &matrices[1..] {
        for (o, &v) in out.iter_mut().zip(mat.values()) {
            fold(o, v);
        }
    }
    SimilarityMatrix::new(n, m, out, tag)
}

/// Element-wise arithmetic mean.
pub fn combine_mean(matrices: &[&SimilarityMatrix]) -> Result<SimilarityMatrix> {
    let (n, m) = check_shapes(matrices)?;
    let count = matrices.len() as f64;
    let mut out = vec![0.0; n * m];
    for mat in matrices {
        for (o, &v) in out.iter_mut().zip(mat.values()) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= count);
    SimilarityMatrix::new(n, m, out, "mean")
}

/// Element-wise maximum.
pub fn combine_max(matrices: &[&SimilarityMatrix]) -> Result<SimilarityMatrix> {
    zip_with(matrices, "max", |o, v| *o = o.max(v))
}

/// `w_text * text + w_audio * audio + w_image * image`, element-wise.
pub fn combine_weighted(
    text: &SimilarityMatrix,
    audio: &SimilarityMatrix,
    image: &SimilarityMatrix,
    weights: &ModalityWeights,
) -> Result<SimilarityMatrix> {
    weights.validate()?;
    let (n, m) = check_shapes(&[text, audio, image])?;
    let values = text
        .values()
        .iter()
        .zip(audio.values())
        .zip(image.values())
        .map(|((a, b), c)| weights.w_text * a + weights.w_audio * b + weights.w_image * c)
        .collect();
    SimilarityMatrix::new(n, m, values, "weighted")
}

/// Euclidean projection onto `{w : w >= 0, sum(w) = 1}`.
pub fn project_to_simplex(v: [f64; 3]) -> [f64; 3] {
    let mut sorted = v;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (idx + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: [f64; 3],
    v: [f64; 3],
    t: i32,
}

impl Adam {
    fn new(s: &OptimizerSettings) -> Self {
        Self {
            lr: s.learning_rate,
            beta1: s.adam_beta1,
            beta2: s.adam_beta2,
            eps: s.adam_epsilon,
            m: [0.0; 3],
            v: [0.0; 3],
            t: 0,
        }
    }

    /// Ascent step: moves `params` along `grad`.
    fn step(&mut self, params: &mut [f64; 3], grad: [f64; 3]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..3 {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] += self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Result of [`optimize_weights`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightOptimization {
    /// Weights of the best iterate.
    pub weights: ModalityWeights,
    /// Decoder optimum at every visited iterate, starting from equal weights.
    pub trace: Vec<f64>,
}

impl WeightOptimization {
    pub fn best_objective(&self) -> f64 {
        self.trace.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn initial_objective(&self) -> f64 {
        self.trace[0]
    }
}

/// Fits simplex weights that maximize the decoder's optimal cumulative score.
///
/// Each iteration decodes the current fused matrix, takes the subgradient
/// `(sum text, sum audio, sum image)` along the decoded path, removes its mean
/// (the component orthogonal to the simplex), applies an Adam ascent step and
/// projects back onto the simplex. The trace holds `iterations + 1` objective
/// values; the weights returned are those of the best one (first on ties).
pub fn optimize_weights(
    text: &SimilarityMatrix,
    audio: &SimilarityMatrix,
    image: &SimilarityMatrix,
    config: &AlignmentConfig,
    settings: &OptimizerSettings,
) -> Result<WeightOptimization> {
    settings.validate()?;
    config.validate()?;
    check_shapes(&[text, audio, image])?;

    let mut adam = Adam::new(settings);
    let mut w = ModalityWeights::equal().to_array();
    let mut trace = Vec::with_capacity(settings.iterations + 1);
    let mut best = (f64::NEG_INFINITY, w);

    for it in 0..=settings.iterations {
        let fused = combine_weighted(text, audio, image, &ModalityWeights::from_array(w))?;
        let alignment = dp_align(&fused, config)?;
        let objective = alignment.cumulative_score;
        if !objective.is_finite() {
            return Err(Error::NonFiniteObjective(it));
        }
        trace.push(objective);
        if objective > best.0 {
            best = (objective, w);
        }
        if it == settings.iterations {
            break;
        }

        let mut grad = [0.0; 3];
        for (i, &slide) in alignment.path.iter().enumerate() {
            grad[0] += text.get(i, slide - 1);
            grad[1] += audio.get(i, slide - 1);
            grad[2] += image.get(i, slide - 1);
        }
        let mean = grad.iter().sum::<f64>() / 3.0;
        let tangent = grad.map(|g| g - mean);

        adam.step(&mut w, tangent);
        w = project_to_simplex(w);
    }

    Ok(WeightOptimization {
        weights: ModalityWeights::from_array(best.1),
        trace,
    })
}
