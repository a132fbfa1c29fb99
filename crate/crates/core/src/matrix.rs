//! Embedding containers and frame/slide similarity matrices.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature source of an embedding or similarity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Audio,
    Image,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Audio, Modality::Image];

    pub fn code(self) -> u8 {
        match self {
            Modality::Text => 0,
            Modality::Audio => 1,
            Modality::Image => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::Text),
            1 => Some(Modality::Audio),
            2 => Some(Modality::Image),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Audio => "audio",
            Modality::Image => "image",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the rows of an embedding matrix describe video frames or slides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Frame,
    Slide,
}

/// Row-major matrix of embedding vectors, one row per frame or slide.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dims: usize,
    data: Vec<f64>,
    kind: EmbeddingKind,
    modality: Modality,
}

impl EmbeddingMatrix {
    pub fn new(
        rows: usize,
        dims: usize,
        data: Vec<f64>,
        kind: EmbeddingKind,
        modality: Modality,
    ) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Empty("embedding matrix has no rows"));
        }
        if dims == 0 {
            return Err(Error::Empty("embedding matrix has zero dimensions"));
        }
        if data.len() != rows * dims {
            return Err(Error::invalid(format!(
                "embedding data has {} values, expected {rows} x {dims}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        Ok(Self {
            rows,
            dims,
            data,
            kind,
            modality,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: EmbeddingKind, modality: Modality) -> Result<Self> {
        let dims = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dims) {
            return Err(Error::RaggedRow {
                row,
                expected: dims,
                found: r.len(),
            });
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), dims, data, kind, modality)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }
}

/// Dense `n_frames x m_slides` matrix of similarity scores in `[-1, 1]`.
///
/// Row `i` holds the scores of frame `i` (0-based) against every slide; column
/// `j` corresponds to slide `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n_frames: usize,
    m_slides: usize,
    values: Vec<f64>,
    tag: String,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, clamping them into `[-1, 1]`.
    pub fn new(
        n_frames: usize,
        m_slides: usize,
        values: Vec<f64>,
        tag: impl Into<String>,
    ) -> Result<Self> {
        clamp_similarity(n_frames, m_slides, values, tag).map(|(s, _)| s)
    }

    pub fn from_rows(rows: &[Vec<f64>], tag: impl Into<String>) -> Result<Self> {
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(Error::RaggedRow {
                row,
                expected: m,
                found: r.len(),
            });
        }
        Self::new(rows.len(), m, rows.iter().flatten().copied().collect(), tag)
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn m_slides(&self) -> usize {
        self.m_slides
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_frames, self.m_slides)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m_slides..(i + 1) * self.m_slides]
    }

    /// Score of frame `i` (0-based) against slide column `j` (0-based).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m_slides + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.m_slides).map(<[f64]>::to_vec).collect()
    }
}

/// Clamps raw scores into `[-1, 1]` and wraps them as a [`SimilarityMatrix`].
///
/// Returns the matrix together with the number of entries that had to be
/// moved. NaN is rejected with its `(frame, slide column)` position.
pub fn clamp_similarity(
    n_frames: usize,
    m_slides: usize,
    mut values: Vec<f64>,
    tag: impl Into<String>,
) -> Result<(SimilarityMatrix, usize)> {
    if n_frames == 0 || m_slides == 0 {
        return Err(Error::Empty("similarity matrix needs at least one frame and one slide"));
    }
    if values.len() != n_frames * m_slides {
        return Err(Error::invalid(format!(
            "similarity matrix has {} values, expected {n_frames} x {m_slides}",
            values.len()
        )));
    }
    let mut clamped = 0;
    for (pos, v) in values.iter_mut().enumerate() {
        if v.is_nan() {
            return Err(Error::NonFinite {
                row: pos / m_slides,
                col: pos % m_slides,
            });
        }
        let c = v.clamp(-1.0, 1.0);
        if c != *v {
            clamped += 1;
            *v = c;
        }
    }
    let matrix = SimilarityMatrix {
        n_frames,
        m_slides,
        values,
        tag: tag.into(),
    };
    Ok((matrix, clamped))
}

/// Cosine similarity between every frame embedding and every slide embedding.
///
/// Rows with zero norm score 0 against everything.
pub fn cosine_similarity_matrix(
    frames: &EmbeddingMatrix,
    slides: &EmbeddingMatrix,
) -> Result<SimilarityMatrix> {
    if frames.kind != EmbeddingKind::Frame {
        return Err(Error::invalid("first argument must be frame embeddings"));
    }
    if slides.kind != EmbeddingKind::Slide {
        return Err(Error::invalid("second argument must be slide embeddings"));
    }
    if frames.dims != slides.dims {
        return Err(Error::DimMismatch {
            frames: frames.dims,
            slides: slides.dims,
        });
    }

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let slide_norms: Vec<f64> = (0..slides.rows).map(|j| norm(slides.row(j))).collect();
    let m = slides.rows;

    let mut values = vec![0.0; frames.rows * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, out)| {
            let f = frames.row(i);
            let f_norm = norm(f);
            if f_norm == 0.0 {
                return;
            }
            for (j, cell) in out.iter_mut().enumerate() {
                if slide_norms[j] == 0.0 {
                    continue;
                }
                let dot: f64 = f.iter().zip(slides.row(j)).map(|(a, b)| a * b).sum();
                *cell = (dot / (f_norm * slide_norms[j])).clamp(-1.0, 1.0);
            }
        });

    SimilarityMatrix::new(frames.rows, m, values, frames.modality.as_str())
}
