//! Python bindings for the alignment engine.
//!
//! Matrices cross the boundary as nested lists of floats (one inner list per
//! frame) so the module has no dependency on numpy.

use mavils_core::align::{self as core_align, JumpDirectionMode, LinearPenaltyMode};
use mavils_core::eval::{self, GroundTruth};
use mavils_core::matrix::{EmbeddingKind, EmbeddingMatrix, Modality};
use mavils_core::{combine, io, synth, AlignmentConfig, Error, ModalityWeights, OptimizerSettings};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::File { .. } | Error::Io(_) => PyOSError::new_err(e.to_string()),
        e if !e.is_user_error() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parse_linear(mode: &str) -> PyResult<LinearPenaltyMode> {
    match mode {
        "slide_deviation" => Ok(LinearPenaltyMode::SlideDeviation),
        "literal" => Ok(LinearPenaltyMode::Literal),
        _ => Err(PyValueError::new_err(format!("unknown linear mode {mode:?}"))),
    }
}

fn parse_jump(mode: &str) -> PyResult<JumpDirectionMode> {
    match mode {
        "as_written" => Ok(JumpDirectionMode::AsWritten),
        "swapped" => Ok(JumpDirectionMode::Swapped),
        _ => Err(PyValueError::new_err(format!("unknown jump mode {mode:?}"))),
    }
}

fn config(lambda_jump: f64, lambda_linear: f64, linear_mode: &str, jump_mode: &str) -> PyResult<AlignmentConfig> {
    Ok(AlignmentConfig {
        lambda_jump,
        lambda_linear,
        linear_penalty_mode: parse_linear(linear_mode)?,
        jump_direction_mode: parse_jump(jump_mode)?,
    })
}

/// Frame-by-slide similarity matrix with values in [-1, 1].
#[pyclass(name = "SimilarityMatrix", module = "mavils", frozen)]
pub struct PySimilarityMatrix {
    inner: mavils_core::SimilarityMatrix,
}

#[pymethods]
impl PySimilarityMatrix {
    #[new]
    #[pyo3(signature = (rows, tag = "fused"))]
    fn new(rows: Vec<Vec<f64>>, tag: &str) -> PyResult<Self> {
        let inner = mavils_core::SimilarityMatrix::from_rows(&rows, tag).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: io::read_similarity(path).map_err(to_py)? })
    }

    /// Writes CSV when the path ends in `.csv`, the binary container otherwise.
    fn save(&self, path: &str) -> PyResult<()> {
        io::write_similarity(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn tag(&self) -> &str {
        self.inner.tag()
    }

    fn get(&self, frame: usize, slide: usize) -> PyResult<f64> {
        let (n, m) = self.inner.shape();
        if frame >= n || slide >= m {
            return Err(PyValueError::new_err(format!("index ({frame}, {slide}) out of range for {n}x{m}")));
        }
        Ok(self.inner.get(frame, slide))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn __repr__(&self) -> String {
        let (n, m) = self.inner.shape();
        format!("SimilarityMatrix({n}x{m}, tag={:?})", self.inner.tag())
    }
}

#[pyclass(name = "Alignment", module = "mavils", frozen, get_all)]
pub struct PyAlignment {
    /// 1-based slide per frame.
    path: Vec<usize>,
    cumulative_score: f64,
    per_frame_scores: Vec<f64>,
    lambda_jump: f64,
    lambda_linear: f64,
}

#[pymethods]
impl PyAlignment {
    fn transitions(&self) -> usize {
        self.path.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn __len__(&self) -> usize {
        self.path.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Alignment(frames={}, cumulative_score={}, lambda_jump={})",
            self.path.len(),
            self.cumulative_score,
            self.lambda_jump
        )
    }
}

impl From<mavils_core::Alignment> for PyAlignment {
    fn from(a: mavils_core::Alignment) -> Self {
        Self {
            path: a.path,
            cumulative_score: a.cumulative_score,
            per_frame_scores: a.per_frame_scores,
            lambda_jump: a.lambda_jump,
            lambda_linear: a.lambda_linear,
        }
    }
}

#[pyclass(name = "WeightFit", module = "mavils", frozen, get_all)]
pub struct PyWeightFit {
    /// `(w_text, w_audio, w_image)`
    weights: (f64, f64, f64),
    trace: Vec<f64>,
}

#[pymethods]
impl PyWeightFit {
    fn __repr__(&self) -> String {
        let (t, a, i) = self.weights;
        format!("WeightFit(text={t:.4}, audio={a:.4}, image={i:.4})")
    }
}

#[pyclass(name = "EvalReport", module = "mavils", frozen, get_all)]
pub struct PyEvalReport {
    accuracy: f64,
    precision_macro: f64,
    recall_macro: f64,
    f1_macro: f64,
    n_scored: usize,
    n_ignored: usize,
    volatility: f64,
    no_slide_ratio: f64,
}

#[pymethods]
impl PyEvalReport {
    fn __repr__(&self) -> String {
        format!("EvalReport(accuracy={:.4}, f1_macro={:.4})", self.accuracy, self.f1_macro)
    }
}

#[pyclass(name = "SynthLecture", module = "mavils", frozen, get_all)]
pub struct PySynthLecture {
    /// Ground-truth label per frame, `-1` where no slide is shown.
    labels: Vec<i64>,
    /// Planted path before masking.
    path: Vec<usize>,
    total_slides: usize,
    text: Py<PySimilarityMatrix>,
    audio: Py<PySimilarityMatrix>,
    image: Py<PySimilarityMatrix>,
}

/// Cosine similarity between frame and slide embeddings (rows are vectors).
#[pyfunction]
fn cosine_similarity(frames: Vec<Vec<f64>>, slides: Vec<Vec<f64>>) -> PyResult<PySimilarityMatrix> {
    let f = EmbeddingMatrix::from_rows(&frames, EmbeddingKind::Frame, Modality::Text).map_err(to_py)?;
    let s = EmbeddingMatrix::from_rows(&slides, EmbeddingKind::Slide, Modality::Text).map_err(to_py)?;
    let inner = mavils_core::cosine_similarity_matrix(&f, &s).map_err(to_py)?;
    Ok(PySimilarityMatrix { inner: inner.with_tag("fused") })
}

#[pyfunction]
#[pyo3(signature = (sim, lambda_jump = 0.1, lambda_linear = 0.0, linear_mode = "slide_deviation", jump_mode = "as_written"))]
fn align(
    py: Python<'_>,
    sim: &PySimilarityMatrix,
    lambda_jump: f64,
    lambda_linear: f64,
    linear_mode: &str,
    jump_mode: &str,
) -> PyResult<PyAlignment> {
    let cfg = config(lambda_jump, lambda_linear, linear_mode, jump_mode)?;
    let a = py.detach(|| core_align::dp_align(&sim.inner, &cfg)).map_err(to_py)?;
    Ok(a.into())
}

#[pyfunction]
#[pyo3(signature = (k, j, lambda_jump, jump_mode = "as_written"))]
fn jump_penalty(k: usize, j: usize, lambda_jump: f64, jump_mode: &str) -> PyResult<f64> {
    Ok(core_align::jump_penalty(k, j, lambda_jump, parse_jump(jump_mode)?))
}

#[pyfunction]
fn expected_slide_index(i: usize, n: usize, m: usize) -> PyResult<f64> {
    core_align::expected_slide_index(i, n, m).map_err(to_py)
}

fn inners<'a>(ms: &'a [PyRef<'_, PySimilarityMatrix>]) -> Vec<&'a mavils_core::SimilarityMatrix> {
    ms.iter().map(|m| &m.inner).collect()
}

#[pyfunction]
fn combine_mean(matrices: Vec<PyRef<'_, PySimilarityMatrix>>) -> PyResult<PySimilarityMatrix> {
    Ok(PySimilarityMatrix { inner: combine::combine_mean(&inners(&matrices)).map_err(to_py)? })
}

#[pyfunction]
fn combine_max(matrices: Vec<PyRef<'_, PySimilarityMatrix>>) -> PyResult<PySimilarityMatrix> {
    Ok(PySimilarityMatrix { inner: combine::combine_max(&inners(&matrices)).map_err(to_py)? })
}

#[pyfunction]
fn combine_weighted(
    text: &PySimilarityMatrix,
    audio: &PySimilarityMatrix,
    image: &PySimilarityMatrix,
    weights: (f64, f64, f64),
) -> PyResult<PySimilarityMatrix> {
    let w = ModalityWeights::new(weights.0, weights.1, weights.2).map_err(to_py)?;
    let inner = combine::combine_weighted(&text.inner, &audio.inner, &image.inner, &w).map_err(to_py)?;
    Ok(PySimilarityMatrix { inner })
}

#[pyfunction]
#[pyo3(signature = (text, audio, image, lambda_jump = 0.1, lambda_linear = 0.0, learning_rate = 0.001, iterations = 50))]
#[allow(clippy::too_many_arguments)]
fn optimize_weights(
    py: Python<'_>,
    text: &PySimilarityMatrix,
    audio: &PySimilarityMatrix,
    image: &PySimilarityMatrix,
    lambda_jump: f64,
    lambda_linear: f64,
    learning_rate: f64,
    iterations: usize,
) -> PyResult<PyWeightFit> {
    let cfg = AlignmentConfig::with_lambdas(lambda_jump, lambda_linear);
    let settings = OptimizerSettings { learning_rate, iterations, ..OptimizerSettings::default() };
    let fit = py
        .detach(|| combine::optimize_weights(&text.inner, &audio.inner, &image.inner, &cfg, &settings))
        .map_err(to_py)?;
    let w = fit.weights;
    Ok(PyWeightFit { weights: (w.w_text, w.w_audio, w.w_image), trace: fit.trace })
}

/// Scores a 1-based slide path against per-frame labels (`-1` = no slide).
#[pyfunction]
fn evaluate(path: Vec<usize>, labels: Vec<i64>, total_slides: usize) -> PyResult<PyEvalReport> {
    let truth = GroundTruth::from_labels(&labels, total_slides).map_err(to_py)?;
    let r = eval::score_path(&path, &truth).map_err(to_py)?;
    Ok(PyEvalReport {
        accuracy: r.accuracy,
        precision_macro: r.precision_macro,
        recall_macro: r.recall_macro,
        f1_macro: r.f1_macro,
        n_scored: r.n_scored,
        n_ignored: r.n_ignored,
        volatility: r.volatility,
        no_slide_ratio: r.no_slide_ratio,
    })
}

#[pyfunction]
fn volatility(labels: Vec<i64>, total_slides: usize) -> PyResult<f64> {
    let truth = GroundTruth::from_labels(&labels, total_slides).map_err(to_py)?;
    Ok(eval::volatility_score(&truth))
}

#[pyfunction]
fn no_slide_ratio(labels: Vec<i64>, total_slides: usize) -> PyResult<f64> {
    let truth = GroundTruth::from_labels(&labels, total_slides).map_err(to_py)?;
    eval::no_slide_ratio(&truth).map_err(to_py)
}

#[pyfunction]
fn pearson_r(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    eval::pearson_r(&x, &y).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_frames = 200, m_slides = 20, signal = 0.6, noise_sigma = 0.3, volatility = 1.0, no_slide_fraction = 0.0, distractor_prob = 0.15, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    py: Python<'_>,
    n_frames: usize,
    m_slides: usize,
    signal: f64,
    noise_sigma: f64,
    volatility: f64,
    no_slide_fraction: f64,
    distractor_prob: f64,
    seed: u64,
) -> PyResult<PySynthLecture> {
    let spec = mavils_core::SynthSpec {
        n_frames,
        m_slides,
        signal,
        noise_sigma,
        volatility,
        no_slide_fraction,
        distractor_prob,
        seed,
    };
    let lec = synth::generate(&spec).map_err(to_py)?;
    let wrap = |inner| Py::new(py, PySimilarityMatrix { inner });
    Ok(PySynthLecture {
        labels: lec.truth.labels(),
        path: lec.path,
        total_slides: lec.truth.total_slides,
        text: wrap(lec.text)?,
        audio: wrap(lec.audio)?,
        image: wrap(lec.image)?,
    })
}

#[pymodule]
fn mavils(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NO_SLIDE", mavils_core::NO_SLIDE)?;
    m.add_class::<PySimilarityMatrix>()?;
    m.add_class::<PyAlignment>()?;
    m.add_class::<PyWeightFit>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_class::<PySynthLecture>()?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(jump_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(expected_slide_index, m)?)?;
    m.add_function(wrap_pyfunction!(combine_mean, m)?)?;
    m.add_function(wrap_pyfunction!(combine_max, m)?)?;
    m.add_function(wrap_pyfunction!(combine_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_weights, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(volatility, m)?)?;
    m.add_function(wrap_pyfunction!(no_slide_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_r, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
