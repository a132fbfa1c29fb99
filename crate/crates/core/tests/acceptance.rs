//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

// Checks are written as `!(cond)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use mavils_core::align::{dp_align, expected_slide_index, jump_penalty, linear_penalty};
use mavils_core::cli::{sweep, Method, Metric};
use mavils_core::combine::project_to_simplex;
use mavils_core::eval::{no_slide_ratio, pearson_r, score_path, volatility_score};
use mavils_core::matrix::{EmbeddingKind, EmbeddingMatrix, Modality};
use mavils_core::synth::generate;
use mavils_core::{
    combine_mean, combine_weighted, io, optimize_weights, AlignmentConfig, GroundTruth,
    JumpDirectionMode, ModalityWeights, OptimizerSettings, SimilarityMatrix, SynthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_best, oracle_score, row_argmax, Penalties};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_matrix(rng: &mut impl Rng, n: usize, m: usize) -> SimilarityMatrix {
    let values = (0..n * m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SimilarityMatrix::new(n, m, values, "random").unwrap()
}

fn quantized_matrix(rng: &mut impl Rng, n: usize, m: usize) -> SimilarityMatrix {
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let values = (0..n * m).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    SimilarityMatrix::new(n, m, values, "quantized").unwrap()
}

fn dp_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lambdas_jump = [0.0, 0.1, 0.15, 0.2, 0.25];
    let lambdas_linear = [0.0, 1e-4, 1e-3];
    let mut cases = 0;
    for seed in 0..300 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=4);
        let s = random_matrix(&mut rng, n, m);
        let p = Penalties {
            lambda_jump: lambdas_jump[seed % lambdas_jump.len()],
            lambda_linear: lambdas_linear[seed % lambdas_linear.len()],
        };
        let config = AlignmentConfig::with_lambdas(p.lambda_jump, p.lambda_linear);
        let a = dp_align(&s, &config).map_err(|e| e.to_string())?;
        let best = exhaustive_best(&s, p);
        ensure!(
            a.cumulative_score == best,
            "seed {seed}: dp {} != exhaustive {best}",
            a.cumulative_score
        );
        let achieved = oracle_score(&s, p, &a.path);
        ensure!(achieved == best, "seed {seed}: path scores {achieved}, optimum {best}");
        cases += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{cases} matrices bit-identical to exhaustive search in {elapsed:.2?}"))
}

fn zero_penalty_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = AlignmentConfig::with_lambdas(0.0, 0.0);
    for case in 0..100 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(1..=15);
        // half the cases use coarse levels so ties actually occur
        let s = if case % 2 == 0 {
            random_matrix(&mut rng, n, m)
        } else {
            quantized_matrix(&mut rng, n, m)
        };
        let a = dp_align(&s, &config).map_err(|e| e.to_string())?;
        ensure!(a.path == row_argmax(&s), "case {case}: path differs from per-frame argmax");
    }
    Ok("100 matrices decode to per-frame argmax".into())
}

fn penalty_formulas() -> Outcome {
    let tol = 1e-12;
    let mode = JumpDirectionMode::AsWritten;
    let checks = [
        ("jump(2,5)", jump_penalty(2, 5, 0.1, mode), 0.6),
        ("jump(5,5)", jump_penalty(5, 5, 0.1, mode), 0.0),
        ("jump(7,5)", jump_penalty(7, 5, 0.1, mode), 0.2),
        ("e(0;10,30)", expected_slide_index(0, 10, 30).unwrap(), 1.0),
        ("e(4;9,16)", expected_slide_index(4, 9, 16).unwrap(), 9.0),
        ("e(8;9,16)", expected_slide_index(8, 9, 16).unwrap(), 16.0),
        (
            "linear(4,9)",
            linear_penalty(4, 9, &AlignmentConfig::with_lambdas(0.1, 1e-3), 9, 16).unwrap(),
            0.0,
        ),
        (
            "linear(4,12)",
            linear_penalty(4, 12, &AlignmentConfig::with_lambdas(0.1, 1e-3), 9, 16).unwrap(),
            0.003,
        ),
    ];
    for (name, got, want) in checks {
        ensure!((got - want).abs() <= tol, "{name}: got {got}, want {want}");
    }
    ensure!(expected_slide_index(0, 1, 5).is_err(), "single frame must be rejected");
    Ok(format!("{} formula values within {tol:e}", checks.len()))
}

fn sweep_spec(volatility: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        n_frames: 200,
        m_slides: 20,
        signal: 0.6,
        noise_sigma: 0.3,
        volatility,
        no_slide_fraction: 0.0,
        distractor_prob: 0.15,
        seed,
    }
}

/// Mean accuracy over seeds of mean-fused alignments at each jump penalty.
fn mean_accuracy(volatility: f64, seeds: u64, lambdas: &[f64]) -> Result<Vec<f64>, String> {
    let mut totals = vec![0.0; lambdas.len()];
    for seed in 0..seeds {
        let lecture = generate(&sweep_spec(volatility, seed)).map_err(|e| e.to_string())?;
        let fused = combine_mean(&lecture.matrices()).map_err(|e| e.to_string())?;
        for (t, &lj) in totals.iter_mut().zip(lambdas) {
            let a = dp_align(&fused, &AlignmentConfig::with_lambdas(lj, 0.0)).map_err(|e| e.to_string())?;
            *t += score_path(&a.path, &lecture.truth).map_err(|e| e.to_string())?.accuracy;
        }
    }
    Ok(totals.into_iter().map(|t| t / seeds as f64).collect())
}

fn jump_penalty_helps() -> Outcome {
    let start = Instant::now();
    let acc = mean_accuracy(1.0, 30, &[0.0, 0.1])?;
    let delta = acc[1] - acc[0];
    let elapsed = start.elapsed();
    ensure!(delta >= 0.02, "delta {delta:.4} (acc {:.4} -> {:.4})", acc[0], acc[1]);
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "accuracy {:.4} at lambda 0 -> {:.4} at lambda 0.1 (delta {delta:.4}) in {elapsed:.2?}",
        acc[0], acc[1]
    ))
}

fn high_volatility_reversal() -> Outcome {
    let acc = mean_accuracy(3.0, 30, &[0.0, 0.25])?;
    ensure!(acc[0] >= acc[1], "lambda 0: {:.4}, lambda 0.25: {:.4}", acc[0], acc[1]);
    Ok(format!("volatility 3: {:.4} at lambda 0 >= {:.4} at lambda 0.25", acc[0], acc[1]))
}

fn weight_optimization() -> Outcome {
    let (n, m) = (80, 10);
    let planted: Vec<usize> = (0..n).map(|i| i * m / n + 1).collect();
    let mut summary = Vec::new();
    for seed in [42u64, 43, 44] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![-1.0; n * m];
        for (i, &j) in planted.iter().enumerate() {
            a[i * m + j - 1] = 1.0;
        }
        let mut noise = || -> Vec<f64> { (0..n * m).map(|_| rng.random_range(-0.2..=0.2)).collect() };
        let (b, c) = (noise(), noise());
        let mk = |v: Vec<f64>, t: &str| SimilarityMatrix::new(n, m, v, t).unwrap();
        let (a, b, c) = (mk(a, "text"), mk(b, "audio"), mk(c, "image"));
        let fit = optimize_weights(&a, &b, &c, &AlignmentConfig::default(), &OptimizerSettings::default())
            .map_err(|e| e.to_string())?;
        let w = fit.weights;
        ensure!(
            w.w_text > w.w_audio && w.w_text > w.w_image,
            "seed {seed}: text weight not maximal: {w:?}"
        );
        ensure!(fit.trace.iter().all(|t| t.is_finite()), "seed {seed}: non-finite trace");
        ensure!(
            fit.best_objective() >= fit.initial_objective(),
            "seed {seed}: best {} < initial {}",
            fit.best_objective(),
            fit.initial_objective()
        );
        let sum = w.w_text + w.w_audio + w.w_image;
        ensure!((sum - 1.0).abs() <= 1e-9, "seed {seed}: weights sum to {sum}");
        summary.push(format!("{:.3}", w.w_text));
    }
    Ok(format!("text weight maximal in 3 runs (w_text = {})", summary.join(", ")))
}

fn combination_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.random_range(1..=20);
        let m = rng.random_range(1..=10);
        let (a, b, c) = (
            random_matrix(&mut rng, n, m),
            random_matrix(&mut rng, n, m),
            random_matrix(&mut rng, n, m),
        );
        let eq = combine_weighted(&a, &b, &c, &ModalityWeights::equal()).map_err(|e| e.to_string())?;
        let mean = combine_mean(&[&a, &b, &c]).map_err(|e| e.to_string())?;
        for (x, y) in eq.values().iter().zip(mean.values()) {
            ensure!((x - y).abs() <= 1e-12, "case {case}: weighted {x} vs mean {y}");
        }
        let w = project_to_simplex([rng.random(), rng.random(), rng.random()]);
        let w = ModalityWeights::new(w[0], w[1], w[2]).map_err(|e| e.to_string())?;
        let raw: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .zip(c.values())
            .map(|((x, y), z)| w.w_text * x + w.w_audio * y + w.w_image * z)
            .collect();
        ensure!(
            raw.iter().all(|v| (-1.0..=1.0).contains(v)),
            "case {case}: convex combination left [-1, 1]"
        );
    }
    Ok("100 random triples: equal weights == mean, convex stays in range".into())
}

fn metric_suite() -> Outcome {
    let t = |labels: &[i64], m: usize| GroundTruth::from_labels(labels, m).unwrap();
    let r = score_path(&[1, 2, 3], &t(&[1, 2, 3], 3)).unwrap();
    ensure!(r.accuracy == 1.0 && r.f1_macro == 1.0, "perfect prediction: {r:?}");
    let r = score_path(&[1, 7, 2], &t(&[1, -1, 2], 7)).unwrap();
    ensure!(r.accuracy == 1.0 && r.n_ignored == 1, "-1 exclusion: {r:?}");
    let r = score_path(&[1, 2, 2, 2], &t(&[1, 1, 2, 2], 2)).unwrap();
    ensure!(r.accuracy == 0.75, "3 of 4: {}", r.accuracy);
    ensure!(volatility_score(&t(&[1, 1, 2, 1, 2], 2)) == 1.5, "volatility 1.5");
    ensure!(volatility_score(&t(&[1, 2, 3], 3)) == 2.0 / 3.0, "volatility 2/3");
    ensure!(volatility_score(&t(&[1], 3)) == 0.0, "volatility single");
    ensure!(no_slide_ratio(&t(&[1, 2, 3], 3)).unwrap() == 0.0, "ratio 0");
    let mut ten = vec![-1; 10];
    ten.push(1);
    ensure!(no_slide_ratio(&t(&ten, 1)).unwrap() == 10.0, "ratio 10");
    ensure!(no_slide_ratio(&t(&[-1, 1, 1, -1], 1)).unwrap() == 1.0, "ratio 1");
    ensure!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12, "r = 1");
    ensure!((pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12, "r = -1");
    let r06 = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
    ensure!((r06 - 0.6).abs() < 1e-12, "r = 0.6, got {r06}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(1..=50);
        let labels: Vec<i64> = (0..n)
            .map(|_| if rng.random_bool(0.25) { -1 } else { rng.random_range(1..=8) })
            .collect();
        if labels.iter().all(|&l| l == -1) {
            continue;
        }
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(1..=8)).collect();
        let full = score_path(&pred, &t(&labels, 8)).unwrap();
        let (kl, kp): (Vec<i64>, Vec<usize>) = labels
            .iter()
            .zip(&pred)
            .filter(|(l, _)| **l != -1)
            .map(|(l, p)| (*l, *p))
            .unzip();
        let reduced = score_path(&kp, &t(&kl, 8)).unwrap();
        ensure!(full.accuracy == reduced.accuracy, "-1 removal changed accuracy");
        checked += 1;
    }
    Ok("examples exact; -1 exclusion invariant on 100 random truths".into())
}

fn performance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let big = random_matrix(&mut rng, 2000, 200);
    let start = Instant::now();
    let a = dp_align(&big, &AlignmentConfig::default()).map_err(|e| e.to_string())?;
    let dp_time = start.elapsed();
    ensure!(a.path.len() == 2000, "wrong path length");
    ensure!(dp_time < Duration::from_secs(1), "dp_align 2000x200 took {dp_time:?}");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for k in 0..5u64 {
        let lecture = generate(&sweep_spec(1.0, k)).map_err(|e| e.to_string())?;
        let ldir = dir.path().join(format!("lecture_{k:03}"));
        std::fs::create_dir_all(&ldir).map_err(|e| e.to_string())?;
        io::write_ground_truth(&lecture.truth, ldir.join("truth.csv")).map_err(|e| e.to_string())?;
        for m in lecture.matrices() {
            io::write_similarity_csv(m, ldir.join(format!("{}.csv", m.tag()))).map_err(|e| e.to_string())?;
        }
    }
    let start = Instant::now();
    let grid = [0.0, 0.1, 0.15, 0.2, 0.25];
    let table = sweep(dir.path(), &grid, Method::Mean, &AlignmentConfig::default(), Metric::Accuracy)
        .map_err(|e| e.to_string())?;
    let sweep_time = start.elapsed();
    ensure!(table.rows.len() == 5, "sweep rows {}", table.rows.len());
    ensure!(sweep_time < Duration::from_secs(30), "sweep took {sweep_time:?}");
    Ok(format!("dp_align 2000x200 in {dp_time:.2?}; 5x5 sweep in {sweep_time:.2?}"))
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let err = |e: mavils_core::Error| e.to_string();
    for case in 0..100 {
        let rows = rng.random_range(1..=12);
        let dims = rng.random_range(1..=16);
        let data: Vec<f64> = (0..rows * dims).map(|_| rng.random_range(-3.0..3.0)).collect();
        let kind = if case % 2 == 0 { EmbeddingKind::Frame } else { EmbeddingKind::Slide };
        let modality = Modality::ALL[case % 3];
        let emb = EmbeddingMatrix::new(rows, dims, data, kind, modality).map_err(err)?;
        let p = dir.path().join(format!("e{case}.mvls"));
        io::write_embeddings(&emb, &p).map_err(err)?;
        let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
        let back = io::read_embeddings(&p).map_err(err)?;
        ensure!(
            (back.rows(), back.dims(), back.kind(), back.modality()) == (rows, dims, kind, modality),
            "case {case}: embedding header changed"
        );
        let rewritten = io::encode_embeddings(&back).map_err(err)?;
        ensure!(rewritten == bytes, "case {case}: embedding payload not bit-exact");
        for (x, y) in emb.data().iter().zip(back.data()) {
            ensure!((*x as f32).to_bits() == (*y as f32).to_bits(), "case {case}: value drift");
        }

        let (n, m) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let sim = random_matrix(&mut rng, n, m);
        let csv = dir.path().join(format!("s{case}.csv"));
        io::write_similarity(&sim, &csv).map_err(err)?;
        let back = io::read_similarity(&csv).map_err(err)?;
        ensure!(
            back.values().iter().zip(sim.values()).all(|(a, b)| a.to_bits() == b.to_bits()),
            "case {case}: CSV similarity not bit-exact"
        );
        let bin = dir.path().join(format!("s{case}.mvls"));
        io::write_similarity(&sim, &bin).map_err(err)?;
        let bytes = std::fs::read(&bin).map_err(|e| e.to_string())?;
        let back = io::read_similarity(&bin).map_err(err)?;
        ensure!(back.shape() == (n, m), "case {case}: binary similarity shape");
        ensure!(io::encode_similarity(&back).map_err(err)? == bytes, "case {case}: binary similarity bytes");

        let a = dp_align(&sim, &AlignmentConfig::default()).map_err(err)?;
        let ap = dir.path().join(format!("a{case}.json"));
        io::write_alignment(&a, &ap).map_err(err)?;
        let back = io::read_alignment(&ap).map_err(err)?;
        ensure!(back.path == a.path, "case {case}: alignment path");
        ensure!(
            (back.cumulative_score - a.cumulative_score).abs() <= 1e-9
                && back
                    .per_frame_scores
                    .iter()
                    .zip(&a.per_frame_scores)
                    .all(|(x, y)| (x - y).abs() <= 1e-9),
            "case {case}: alignment reals"
        );

        let labels: Vec<i64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { -1 } else { rng.random_range(1..=m as i64) })
            .collect();
        let mut truth = GroundTruth::from_labels(&labels, m).map_err(err)?;
        for (i, s) in truth.segments.iter_mut().enumerate() {
            s.sentence = format!("sentence {i}, with \"quotes\" and commas");
        }
        let tp = dir.path().join(format!("t{case}.csv"));
        io::write_ground_truth(&truth, &tp).map_err(err)?;
        let back = io::read_ground_truth(&tp, None).map_err(err)?;
        ensure!(back == truth, "case {case}: ground truth round trip");
    }
    Ok("100 fixtures: embeddings, similarity (CSV + binary), alignment, ground truth".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("dp-oracle-equivalence", dp_oracle_equivalence),
        ("zero-penalty-reduction", zero_penalty_reduction),
        ("penalty-formulas", penalty_formulas),
        ("jump-penalty-improves-accuracy", jump_penalty_helps),
        ("high-volatility-reversal", high_volatility_reversal),
        ("weight-optimization", weight_optimization),
        ("combination-identities", combination_identities),
        ("metric-suite", metric_suite),
        ("performance", performance),
        ("format-round-trips", format_round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name:32} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:32} {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
