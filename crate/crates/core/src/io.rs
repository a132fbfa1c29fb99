//! On-disk formats shared with the feature extractor.
//!
//! Binary matrices use the `MVLS` container: an 18-byte little-endian header
//! (`magic[4]`, `version: u32 = 1`, `rows: u32`, `dims: u32`, `kind: u8`,
//! `modality: u8`) followed by `rows * dims` little-endian `f32` values.
//! `kind` is 0 for frame embeddings, 1 for slide embeddings and 2 for a
//! similarity matrix (`dims` is then the slide count). `modality` is 0 text,
//! 1 audio, 2 image; similarity matrices fused from several modalities use 255.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::align::Alignment;
use crate::combine::{ModalityWeights, WeightOptimization};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, GroundTruth, Segment};
use crate::matrix::{clamp_similarity, EmbeddingKind, EmbeddingMatrix, Modality, SimilarityMatrix};

pub const MAGIC: &[u8; 4] = b"MVLS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 18;

pub const KIND_FRAME: u8 = 0;
pub const KIND_SLIDE: u8 = 1;
pub const KIND_SIMILARITY: u8 = 2;
pub const MODALITY_FUSED: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub rows: u32,
    pub dims: u32,
    pub kind: u8,
    pub modality: u8,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::file(path, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

fn encode_matrix(header: MatrixHeader, values: &[f64]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(header.rows)?;
    out.write_u32::<LittleEndian>(header.dims)?;
    out.push(header.kind);
    out.push(header.modality);
    for (pos, &v) in values.iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            let dims = header.dims.max(1) as usize;
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        out.write_f32::<LittleEndian>(f)?;
    }
    Ok(out)
}

fn decode_matrix(bytes: &[u8]) -> Result<(MatrixHeader, Vec<f64>)> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::NotEmbeddingFile);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let header = MatrixHeader {
        rows: LittleEndian::read_u32(&bytes[8..12]),
        dims: LittleEndian::read_u32(&bytes[12..16]),
        kind: bytes[16],
        modality: bytes[17],
    };
    let expected = header.rows as usize * header.dims as usize * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::invalid(format!(
            "payload has {} trailing bytes past the expected {expected}",
            payload.len() - expected
        )));
    }
    let dims = header.dims as usize;
    let mut values = Vec::with_capacity(expected / 4);
    for (pos, chunk) in payload.chunks_exact(4).enumerate() {
        let v = LittleEndian::read_f32(chunk);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        values.push(v as f64);
    }
    Ok((header, values))
}

fn header_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit the header")))
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let header = MatrixHeader {
        rows: header_u32(m.rows(), "rows")?,
        dims: header_u32(m.dims(), "dims")?,
        kind: match m.kind() {
            EmbeddingKind::Frame => KIND_FRAME,
            EmbeddingKind::Slide => KIND_SLIDE,
        },
        modality: m.modality().code(),
    };
    encode_matrix(header, m.data())
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let (h, values) = decode_matrix(bytes)?;
    let kind = match h.kind {
        KIND_FRAME => EmbeddingKind::Frame,
        KIND_SLIDE => EmbeddingKind::Slide,
        KIND_SIMILARITY => {
            return Err(Error::invalid("file holds a similarity matrix, not embeddings"))
        }
        k => return Err(Error::invalid(format!("unknown kind byte {k}"))),
    };
    let modality = Modality::from_code(h.modality)
        .ok_or_else(|| Error::invalid(format!("unknown modality byte {}", h.modality)))?;
    EmbeddingMatrix::new(h.rows as usize, h.dims as usize, values, kind, modality)
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(m)?;
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    decode_embeddings(&read_file(path.as_ref())?)
}

fn tag_modality(tag: &str) -> u8 {
    match tag {
        "text" => Modality::Text.code(),
        "audio" => Modality::Audio.code(),
        "image" => Modality::Image.code(),
        _ => MODALITY_FUSED,
    }
}

pub fn encode_similarity(s: &SimilarityMatrix) -> Result<Vec<u8>> {
    let header = MatrixHeader {
        rows: header_u32(s.n_frames(), "frames")?,
        dims: header_u32(s.m_slides(), "slides")?,
        kind: KIND_SIMILARITY,
        modality: tag_modality(s.tag()),
    };
    encode_matrix(header, s.values())
}

pub fn decode_similarity(bytes: &[u8]) -> Result<SimilarityMatrix> {
    let (h, values) = decode_matrix(bytes)?;
    if h.kind != KIND_SIMILARITY {
        return Err(Error::invalid("file holds embeddings, not a similarity matrix"));
    }
    let tag = Modality::from_code(h.modality)
        .map(Modality::as_str)
        .unwrap_or("fused");
    let (matrix, clamped) = clamp_similarity(h.rows as usize, h.dims as usize, values, tag)?;
    if clamped > 0 {
        log::warn!("clamped {clamped} similarity values into [-1, 1]");
    }
    Ok(matrix)
}

/// Parses one-row-per-frame comma-separated similarities. Blank lines are
/// skipped; out-of-range values are clamped with a warning.
pub fn parse_similarity_csv(text: &str, tag: &str) -> Result<SimilarityMatrix> {
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = values.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                row: rows,
                msg: format!("{field:?}: {e}"),
            })?;
            values.push(v);
        }
        let found = values.len() - start;
        let expected = *width.get_or_insert(found);
        if found != expected {
            return Err(Error::RaggedRow {
                row: rows,
                expected,
                found,
            });
        }
        rows += 1;
    }
    let (matrix, clamped) = clamp_similarity(rows, width.unwrap_or(0), values, tag)?;
    if clamped > 0 {
        log::warn!("clamped {clamped} similarity values into [-1, 1]");
    }
    Ok(matrix)
}

pub fn format_similarity_csv(s: &SimilarityMatrix) -> String {
    let mut out = String::new();
    for i in 0..s.n_frames() {
        let row: Vec<String> = s.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn stem_tag(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("similarity")
        .to_string()
}

pub fn read_similarity_csv(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_similarity_csv(&text, &stem_tag(path))
}

pub fn write_similarity_csv(s: &SimilarityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_similarity_csv(s)).map_err(|e| Error::file(path, e))
}

/// Reads either container, detected from the leading magic bytes.
pub fn read_similarity(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    if bytes.starts_with(MAGIC) {
        return decode_similarity(&bytes);
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::invalid(format!("{} is neither MVLS nor UTF-8 CSV", path.display())))?;
    parse_similarity_csv(&text, &stem_tag(path))
}

/// Writes CSV when the path ends in `.csv`, the binary container otherwise.
pub fn write_similarity(s: &SimilarityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_similarity_csv(s, path)
    } else {
        let bytes = encode_similarity(s)?;
        fs::write(path, bytes).map_err(|e| Error::file(path, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRecord {
    start: f64,
    end: f64,
    sentence: String,
    slide: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthMeta {
    total_slides: usize,
}

/// Sidecar holding the deck size for a ground-truth CSV.
pub fn truth_meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Parses a `start,end,sentence,slide` CSV.
pub fn parse_ground_truth(reader: impl Read, total_slides: usize) -> Result<GroundTruth> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["start", "end", "sentence", "slide"];
    if headers.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::GroundTruth(format!(
            "expected header start,end,sentence,slide, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut segments = Vec::new();
    for (row, rec) in rdr.deserialize::<TruthRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        segments.push(Segment {
            start_time: rec.start,
            end_time: rec.end,
            sentence: rec.sentence,
            slide_label: rec.slide,
        });
    }
    if segments.is_empty() {
        return Err(Error::GroundTruth("no segments".into()));
    }
    GroundTruth::new(segments, total_slides)
}

/// Reads a ground-truth CSV. The deck size comes from `total_slides` or, when
/// absent, from the `<name>.meta.json` sidecar.
pub fn read_ground_truth(path: impl AsRef<Path>, total_slides: Option<usize>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let total = match total_slides {
        Some(t) => t,
        None => {
            let meta = truth_meta_path(path);
            let text = fs::read_to_string(&meta).map_err(|_| {
                Error::GroundTruth(format!(
                    "total slide count unknown: pass it explicitly or provide {}",
                    meta.display()
                ))
            })?;
            serde_json::from_str::<TruthMeta>(&text)?.total_slides
        }
    };
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_ground_truth(file, total)
}

/// Writes the CSV and its sidecar.
pub fn write_ground_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::Writer::from_writer(create_file(path)?);
    for s in &truth.segments {
        wtr.serialize(TruthRecord {
            start: s.start_time,
            end: s.end_time,
            sentence: s.sentence.clone(),
            slide: s.slide_label,
        })?;
    }
    wtr.flush()?;
    write_json(
        &TruthMeta {
            total_slides: truth.total_slides,
        },
        truth_meta_path(path),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameEntry {
    index: usize,
    slide: usize,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlignmentFile {
    lambda_jump: f64,
    lambda_linear: f64,
    cumulative_score: f64,
    frames: Vec<FrameEntry>,
}

pub fn alignment_to_json(a: &Alignment) -> Result<String> {
    let file = AlignmentFile {
        lambda_jump: a.lambda_jump,
        lambda_linear: a.lambda_linear,
        cumulative_score: a.cumulative_score,
        frames: a
            .path
            .iter()
            .zip(&a.per_frame_scores)
            .enumerate()
            .map(|(index, (&slide, &score))| FrameEntry { index, slide, score })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn alignment_from_json(text: &str) -> Result<Alignment> {
    let file: AlignmentFile = serde_json::from_str(text)?;
    let mut path = Vec::with_capacity(file.frames.len());
    let mut scores = Vec::with_capacity(file.frames.len());
    for (pos, f) in file.frames.iter().enumerate() {
        if f.index != pos {
            return Err(Error::invalid(format!("frame {pos} has index {}", f.index)));
        }
        if f.slide == 0 {
            return Err(Error::invalid(format!("frame {pos}: slide indices are 1-based, got 0")));
        }
        path.push(f.slide);
        scores.push(f.score);
    }
    Ok(Alignment {
        path,
        cumulative_score: file.cumulative_score,
        per_frame_scores: scores,
        lambda_jump: file.lambda_jump,
        lambda_linear: file.lambda_linear,
    })
}

pub fn write_alignment(a: &Alignment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, alignment_to_json(a)?).map_err(|e| Error::file(path, e))
}

pub fn read_alignment(path: impl AsRef<Path>) -> Result<Alignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    alignment_from_json(&text)
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsFile {
    #[serde(flatten)]
    weights: ModalityWeights,
    #[serde(default)]
    trace: Vec<f64>,
}

pub fn write_weights(opt: &WeightOptimization, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        &WeightsFile {
            weights: opt.weights,
            trace: opt.trace.clone(),
        },
        path,
    )
}

/// Reads a weights document; the trace is optional.
pub fn read_weights(path: impl AsRef<Path>) -> Result<ModalityWeights> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let file: WeightsFile = serde_json::from_str(&text)?;
    file.weights.validate()?;
    Ok(file.weights)
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const SUMMARY_HEADER: [&str; 5] = ["lecture_id", "accuracy", "f1_macro", "volatility", "no_slide_ratio"];

/// Appends one `lecture_id,accuracy,f1_macro,volatility,no_slide_ratio` row,
/// writing the header first when the file is new or empty.
pub fn append_summary_row(path: impl AsRef<Path>, lecture_id: &str, report: &EvalReport) -> Result<()> {
    let path = path.as_ref();
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::file(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    if fresh {
        wtr.write_record(SUMMARY_HEADER)?;
    }
    wtr.write_record([
        lecture_id.to_string(),
        report.accuracy.to_string(),
        report.f1_macro.to_string(),
        report.volatility.to_string(),
        report.no_slide_ratio.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush().map_err(|e| Error::file(path, e))
}
