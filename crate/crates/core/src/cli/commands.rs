use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::args::*;
use crate::completion::{
    mae, svt_fast, svt_reference, write_trace_csv, Backend, CompletionResult, Strategy, SvtParams, Workload,
};
use crate::error::{Error, Result};
use crate::io::{
    load_image_stacked, load_ratings, load_ratings_auto, random_sparse, read_binary_matrix, sample_pixels,
    split_observations, split_stats, synth_image, synth_low_rank, synth_ratings, write_binary_matrix,
    write_image_stacked, RatingFormat, PIXEL_MAX, RatingsShape, RunSummary, Spectrum,
};
use crate::linalg::{oracle_svd_capped, DenseMatrix, RngState, SvdResult, DEFAULT_ORACLE_CAP};
use crate::rsvd::{qb_error, rsvd_basic, rsvd_bki, rsvd_pi, RsvdParams, DEFAULT_OVERSAMPLING};
use crate::sparse::{
    read_dense_matrix_market, read_matrix_market, write_dense_matrix_market, write_matrix_market, Observation,
    ObservationSet, SparseMatrix, Split,
};
use crate::timing::Stopwatch;

const DEFAULT_OUT: &str = "fastsvt-out";

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn required<'a>(input: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let path = input
        .as_deref()
        .ok_or_else(|| config_error(format!("--{flag} is required")))?;
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )));
    }
    Ok(path)
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub(super) fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(config_error("--threads must be at least 1"));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn is_image(path: &Path) -> bool {
    matches!(extension(path).as_str(), "ppm" | "pgm" | "pnm")
}

fn load_rating_file(path: &Path, format: &Option<String>) -> Result<crate::io::Ratings> {
    match format {
        Some(f) => load_ratings(path, f.parse::<RatingFormat>()?),
        None => load_ratings_auto(path),
    }
}

/// Reads a MatrixMarket file, the stacked matrix of an image, or the rating
/// matrix of a rating file.
fn load_matrix(path: &Path, format: &Option<String>) -> Result<SparseMatrix> {
    if extension(path) == "mtx" {
        Ok(read_matrix_market(path)?.0)
    } else if is_image(path) {
        Ok(SparseMatrix::from_dense(&load_image_stacked(path)?.stacked))
    } else {
        load_rating_file(path, format)?.observations.train_matrix()
    }
}

fn write_factors(dir: &Path, svd_u: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> Result<()> {
    write_dense_matrix_market(dir.join("u.mtx"), svd_u)?;
    write_dense_matrix_market(dir.join("v.mtx"), v)?;
    write_binary_matrix(dir.join("u.bin"), svd_u)?;
    write_binary_matrix(dir.join("v.bin"), v)?;
    let text: String = s.iter().map(|x| format!("{x:.17e}\n")).collect();
    fs::write(dir.join("s.txt"), text)?;
    Ok(())
}

fn config_echo(args: &impl Serialize, resolved: &impl Serialize) -> serde_json::Value {
    json!({ "args": args, "resolved": resolved })
}

pub(super) fn run_algo(algo: SvdAlgo, a: &SparseMatrix, params: &RsvdParams, cap: usize) -> Result<SvdResult> {
    match algo {
        SvdAlgo::Basic => Ok(rsvd_basic(a, params)?.0),
        SvdAlgo::Pi => Ok(rsvd_pi(a, params)?.0),
        SvdAlgo::Bki => Ok(rsvd_bki(a, params)?.0),
        SvdAlgo::Oracle => {
            let dim = a.rows().min(a.cols());
            if dim > cap {
                return Err(Error::SizeCap { dim, cap });
            }
            if params.k == 0 || params.k > dim {
                return Err(config_error(format!("k must lie in 1..={dim}")));
            }
            Ok(oracle_svd_capped(&a.to_dense(), cap)?.truncated(params.k))
        }
    }
}

fn algo_name(algo: SvdAlgo) -> &'static str {
    match algo {
        SvdAlgo::Basic => "basic",
        SvdAlgo::Pi => "pi",
        SvdAlgo::Bki => "bki",
        SvdAlgo::Oracle => "oracle",
    }
}

pub fn cmd_svd(args: &SvdArgs) -> Result<RunSummary> {
    let args = merge_config(args, args.config.as_deref())?;
    let input = required(&args.input, "input")?;
    set_threads(args.threads)?;
    let algo = args.algo.unwrap_or(SvdAlgo::Bki);
    let params = RsvdParams::new(args.k.unwrap_or(100), args.p.unwrap_or(4), args.seed.unwrap_or(0))
        .with_oversampling(args.s.unwrap_or(DEFAULT_OVERSAMPLING));
    let cap = args.oracle_cap.unwrap_or(DEFAULT_ORACLE_CAP);
    if params.k == 0 {
        return Err(config_error("--k must be at least 1"));
    }
    let a = load_matrix(input, &args.format)?;

    let watch = Stopwatch::start();
    let res = run_algo(algo, &a, &params, cap)?;
    let (wall, cpu) = (watch.wall(), watch.cpu());
    let err = qb_error(&a, &res)?;

    let speedup = if algo == SvdAlgo::Basic {
        Some(1.0)
    } else if args.baseline.unwrap_or(true) {
        let watch = Stopwatch::start();
        rsvd_basic(&a, &params)?;
        Some(watch.wall() / wall.max(f64::MIN_POSITIVE))
    } else {
        None
    };

    let dir = out_dir(&args.out)?;
    write_factors(&dir, &res.u, &res.s, &res.v)?;
    let header = "algorithm,k,p,s,seed,wall_secs,cpu_secs,qb_error,speedup_vs_basic";
    let row = format!(
        "{},{},{},{},{},{:.6},{:.6},{:.10},{}",
        algo_name(algo),
        params.k,
        params.p,
        params.s,
        params.seed,
        wall,
        cpu,
        err,
        speedup.map(|x| format!("{x:.3}")).unwrap_or_default()
    );
    fs::write(dir.join("svd.csv"), format!("{header}\n{row}\n"))?;
    println!("{header}\n{row}");

    let mut summary = RunSummary::new("svd", params.seed, &config_echo(&args, &json!({"algo": algo, "rsvd": params, "oracle_cap": cap})))?;
    summary.metric("rows", a.rows());
    summary.metric("cols", a.cols());
    summary.metric("nnz", a.nnz());
    summary.metric("qb_error", err);
    summary.metric("singular_values", &res.s);
    if let Some(sp) = speedup {
        summary.metric("speedup_vs_basic", sp);
    }
    summary.timing("wall_secs", wall);
    summary.timing("cpu_secs", cpu);
    summary.write(dir.join("summary.json"))?;
    Ok(summary)
}

fn parse_backend(s: &str) -> Result<Backend> {
    match s {
        "oracle" => Ok(Backend::Oracle),
        "rsvd-bki" | "bki" => Ok(Backend::RsvdBki),
        other => Err(config_error(format!("unknown backend {other:?} (expected oracle or rsvd-bki)"))),
    }
}

fn parse_workload(s: &str) -> Result<Workload> {
    match s {
        "image" => Ok(Workload::Image),
        "ratings" => Ok(Workload::Ratings),
        "generic" => Ok(Workload::Generic),
        other => Err(config_error(format!(
            "unknown workload {other:?} (expected image, ratings or generic)"
        ))),
    }
}

fn check_fraction(name: &str, f: f64, closed: bool) -> Result<()> {
    let ok = f > 0.0 && (f < 1.0 || (closed && f == 1.0));
    if ok {
        Ok(())
    } else {
        Err(config_error(format!("--{name} must lie in (0, 1{}, got {f}", if closed { "]" } else { ")" })))
    }
}

fn resolve_svt_params(args: &CompleteArgs, kind: DataKind) -> Result<SvtParams> {
    let workload = match &args.workload {
        Some(w) => parse_workload(w)?,
        None => match kind {
            DataKind::Image => Workload::Image,
            DataKind::Ratings => Workload::Ratings,
            DataKind::Matrix => Workload::Generic,
        },
    };
    let mut p = SvtParams::for_workload(workload);
    p.tau = args.tau.or(p.tau);
    p.delta = args.delta.or(p.delta);
    p.l = args.l.unwrap_or(p.l);
    p.epsilon = args.epsilon.unwrap_or(p.epsilon);
    p.i_max = args.i_max.unwrap_or(p.i_max);
    p.i_reuse = args.i_reuse.unwrap_or(p.i_reuse);
    p.q_reuse = args.q_reuse.unwrap_or(p.q_reuse);
    if let Some(s) = &args.strategy {
        p.strategy = s.parse::<Strategy>()?;
    }
    p.p0 = args.p.unwrap_or(p.p0);
    p.p_min = args.p_min.unwrap_or(p.p_min);
    p.adaptive_power = args.adaptive_power.unwrap_or(p.adaptive_power);
    p.s = args.s.unwrap_or(p.s);
    p.seed = args.seed.unwrap_or(p.seed);
    p.oracle_cap = args.oracle_cap.unwrap_or(p.oracle_cap);
    p.validate()?;
    Ok(p)
}

/// Observations with every entry of a MatrixMarket file.
fn matrix_observations(a: &SparseMatrix) -> Result<ObservationSet> {
    let entries = a
        .iter()
        .map(|(row, col, value)| Observation {
            row,
            col,
            value,
            split: Split::Train,
        })
        .collect();
    ObservationSet::new(a.rows(), a.cols(), entries)
}

pub fn cmd_complete(args: &CompleteArgs) -> Result<RunSummary> {
    let args = merge_config(args, args.config.as_deref())?;
    let input = required(&args.input, "input")?;
    set_threads(args.threads)?;
    let kind = args.kind.unwrap_or_else(|| {
        if is_image(input) {
            DataKind::Image
        } else if extension(input) == "mtx" {
            DataKind::Matrix
        } else {
            DataKind::Ratings
        }
    });
    let params = resolve_svt_params(&args, kind)?;
    let algo = args.algo.unwrap_or(CompleteAlgo::Fast);
    let backend = match &args.backend {
        Some(b) => parse_backend(b)?,
        None => Backend::RsvdBki,
    };
    let train_fraction = args.train_fraction.unwrap_or(0.8);
    let pixel_fraction = args.pixel_fraction.unwrap_or(0.2);
    check_fraction("train-fraction", train_fraction, false)?;
    check_fraction("pixel-fraction", pixel_fraction, true)?;
    let mut sample_rng = RngState::with_stream(params.seed, 1);

    let mut summary = RunSummary::new(
        "complete",
        params.seed,
        &config_echo(
            &args,
            &json!({"kind": kind, "algo": algo, "backend": backend, "svt": params,
                    "train_fraction": train_fraction, "pixel_fraction": pixel_fraction}),
        ),
    )?;

    let image = if kind == DataKind::Image {
        Some(load_image_stacked(input)?)
    } else {
        None
    };
    let mut ids: Option<(Vec<u64>, Vec<u64>)> = None;
    let obs = match kind {
        // Pixels are completed on a 0..1 scale; the default tau = 5n assumes O(1) entries.
        DataKind::Image => {
            sample_pixels(image.as_ref().expect("loaded"), pixel_fraction, &mut sample_rng)?.scaled(1.0 / PIXEL_MAX)
        }
        DataKind::Ratings => {
            let r = load_rating_file(input, &args.format)?;
            summary.metric("duplicates", r.duplicates);
            summary.metric("users", r.user_ids.len());
            summary.metric("items", r.item_ids.len());
            let split = split_observations(&r.observations, train_fraction, &mut sample_rng)?;
            ids = Some((r.user_ids, r.item_ids));
            split
        }
        DataKind::Matrix => {
            let all = matrix_observations(&read_matrix_market(input)?.0)?;
            split_observations(&all, train_fraction, &mut sample_rng)?
        }
    };
    summary.metric("observed", obs.train_len());
    if kind != DataKind::Image {
        summary.metric("split", split_stats(&obs));
    }

    let res: CompletionResult = match algo {
        CompleteAlgo::Reference => svt_reference(&obs, &params, backend)?,
        CompleteAlgo::Fast => svt_fast(&obs, &params)?,
    };
    let dir = out_dir(&args.out)?;

    let err = match &image {
        Some(img) => {
            let mut pred = res.to_dense();
            pred.scale(PIXEL_MAX);
            let recovered = img.with_stacked(pred.clone())?;
            write_image_stacked(dir.join(format!("recovered.{}", if img.channels == 3 { "ppm" } else { "pgm" })), &recovered)?;
            mae(pred.as_slice(), img.stacked.as_slice())?
        }
        None => {
            let test: Vec<&Observation> = obs.test().collect();
            let truth: Vec<f64> = test.iter().map(|o| o.value).collect();
            let pred = res.predict_all(test.iter().copied());
            write_predictions(&dir.join("predictions.csv"), &test, &pred, ids.as_ref())?;
            mae(&pred, &truth)?
        }
    };

    write_trace_csv(dir.join("trace.csv"), &res.trace)?;
    write_factors(&dir, &res.u, &res.s, &res.v)?;

    summary.converged = Some(res.converged);
    if !res.converged {
        summary
            .warnings
            .push(format!("not converged after {} iterations", res.iterations));
        eprintln!("warning: not converged after {} iterations", res.iterations);
    }
    summary.metric("mae", err);
    summary.metric("mae_scope", if image.is_some() { "all-pixels" } else { "held-out" });
    summary.metric("iterations", res.iterations);
    summary.metric("rank", res.rank);
    summary.metric("residual", res.residual);
    summary.metric("result_iteration", res.result_iteration);
    summary.metric("tau", res.tau);
    summary.metric("delta", res.delta);
    summary.metric("c", res.c);
    summary.metric("events", &res.events);
    summary.timing("svd_secs", res.timing.svd_secs);
    summary.timing("update_secs", res.timing.update_secs);
    summary.timing("wall_secs", res.timing.total_wall_secs);
    summary.timing("cpu_secs", res.timing.total_cpu_secs);
    summary.write(dir.join("summary.json"))?;
    println!(
        "converged={} iterations={} rank={} mae={:.6} wall_secs={:.3}",
        res.converged, res.iterations, res.rank, err, res.timing.total_wall_secs
    );
    Ok(summary)
}

/// Held-out entries as `row,col,truth,prediction`; rating runs use the file's user and item ids.
fn write_predictions(path: &Path, test: &[&Observation], pred: &[f64], ids: Option<&(Vec<u64>, Vec<u64>)>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "row,col,truth,prediction")?;
    for (o, p) in test.iter().zip(pred) {
        match ids {
            Some((users, items)) => writeln!(w, "{},{},{},{:.17e}", users[o.row], items[o.col], o.value, p)?,
            None => writeln!(w, "{},{},{:.17e},{:.17e}", o.row, o.col, o.value, p)?,
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub algo: SvdAlgo,
    pub p: usize,
    pub median_wall_secs: f64,
    pub median_cpu_secs: f64,
    pub qb_error: f64,
    pub speedup: f64,
}

fn parse_run(spec: &str) -> Result<(SvdAlgo, usize)> {
    let (name, p) = spec.split_once(':').unwrap_or((spec, "0"));
    let algo = <SvdAlgo as clap::ValueEnum>::from_str(name.trim(), true)
        .map_err(|_| config_error(format!("unknown algorithm {name:?} in run {spec:?}")))?;
    let p = p
        .trim()
        .parse::<usize>()
        .map_err(|_| config_error(format!("bad power {p:?} in run {spec:?}")))?;
    Ok((algo, p))
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Renders rows as an aligned text table.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>4} {:>12} {:>12} {:>14} {:>8}", "algorithm", "p", "wall (s)", "cpu (s)", "error", "Sp.");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>4} {:>12.4} {:>12.4} {:>14.8} {:>8.2}",
            algo_name(r.algo),
            r.p,
            r.median_wall_secs,
            r.median_cpu_secs,
            r.qb_error,
            r.speedup
        );
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> Result<RunSummary> {
    let args = merge_config(args, args.config.as_deref())?;
    let input = required(&args.input, "input")?;
    set_threads(args.threads)?;
    let specs: Vec<String> = args.runs.clone().unwrap_or_default();
    if specs.is_empty() {
        return Err(config_error("benchmark suite is empty; pass --runs algo:p[,algo:p...]"));
    }
    let runs: Vec<(String, SvdAlgo, usize)> = specs
        .iter()
        .map(|s| parse_run(s).map(|(a, p)| (s.trim().to_string(), a, p)))
        .collect::<Result<_>>()?;
    let baseline = args.baseline.clone().unwrap_or_else(|| runs[0].0.clone());
    let base_idx = runs
        .iter()
        .position(|r| r.0 == baseline)
        .ok_or_else(|| config_error(format!("baseline {baseline:?} is not one of the runs")))?;
    let reps = args.repetitions.unwrap_or(5);
    if reps == 0 {
        return Err(config_error("--repetitions must be at least 1"));
    }
    let k = args.k.unwrap_or(100);
    let s = args.s.unwrap_or(DEFAULT_OVERSAMPLING);
    let seed = args.seed.unwrap_or(0);
    let cap = args.oracle_cap.unwrap_or(DEFAULT_ORACLE_CAP);
    let a = load_matrix(input, &args.format)?;

    let mut rows = Vec::with_capacity(runs.len());
    for (label, algo, p) in &runs {
        let params = RsvdParams::new(k, *p, seed).with_oversampling(s);
        let mut walls = Vec::with_capacity(reps);
        let mut cpus = Vec::with_capacity(reps);
        let mut err = f64::NAN;
        for rep in 0..reps {
            let watch = Stopwatch::start();
            let res = run_algo(*algo, &a, &params, cap)?;
            walls.push(watch.wall());
            cpus.push(watch.cpu());
            if rep == 0 {
                err = qb_error(&a, &res)?;
            }
        }
        rows.push(BenchRow {
            label: label.clone(),
            algo: *algo,
            p: *p,
            median_wall_secs: median(&mut walls),
            median_cpu_secs: median(&mut cpus),
            qb_error: err,
            speedup: f64::NAN,
        });
    }
    let t_base = rows[base_idx].median_wall_secs;
    for r in &mut rows {
        r.speedup = t_base / r.median_wall_secs.max(f64::MIN_POSITIVE);
    }

    let dir = out_dir(&args.out)?;
    let mut csv = String::from("algorithm,p,k,s,repetitions,median_wall_secs,median_cpu_secs,qb_error,speedup\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{:.6},{:.6},{:.10},{:.4}",
            algo_name(r.algo),
            r.p,
            k,
            s,
            reps,
            r.median_wall_secs,
            r.median_cpu_secs,
            r.qb_error,
            r.speedup
        );
    }
    fs::write(dir.join("bench.csv"), &csv)?;
    let table = render_table(&rows);
    fs::write(dir.join("bench.txt"), &table)?;
    print!("{table}");

    let mut summary = RunSummary::new(
        "bench",
        seed,
        &config_echo(&args, &json!({"runs": specs, "baseline": baseline, "repetitions": reps, "k": k, "s": s, "oracle_cap": cap})),
    )?;
    summary.metric("rows", &rows);
    summary.write(dir.join("summary.json"))?;
    Ok(summary)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<RunSummary> {
    let args = merge_config(args, args.config.as_deref())?;
    let kind = args.kind.ok_or_else(|| config_error("--kind is required (lowrank, ratings, image or sparse)"))?;
    let seed = args.seed.unwrap_or(0);
    let dir = out_dir(&args.out)?;
    let mut rng = RngState::new(seed);
    let mut summary = RunSummary::new("synth", seed, &config_echo(&args, &json!({"kind": kind})))?;
    match kind {
        SynthKind::Lowrank => {
            let (m, n) = (args.m.unwrap_or(200), args.n.unwrap_or(200));
            let rank = args.rank.unwrap_or(10);
            let spectrum = match args.spectrum.unwrap_or(SpectrumKind::Flat) {
                SpectrumKind::Flat => Spectrum::Flat,
                SpectrumKind::Decay => Spectrum::PowerDecay {
                    alpha: args.alpha.unwrap_or(1.0),
                },
            };
            let scale = args.scale.unwrap_or(((m * n) as f64).sqrt());
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(config_error(format!("--scale must be positive, got {scale}")));
            }
            let mut a = synth_low_rank(m, n, rank, spectrum, args.noise.unwrap_or(0.0), &mut rng)?;
            a.matrix = a.matrix.scaled(scale);
            a.s.iter_mut().for_each(|x| *x *= scale);
            write_matrix_market(dir.join("matrix.mtx"), &a.matrix)?;
            let truth = dir.join("truth");
            fs::create_dir_all(&truth)?;
            write_factors(&truth, &a.u, &a.s, &a.v)?;
            summary.metric("path", dir.join("matrix.mtx"));
        }
        SynthKind::Ratings => {
            let obs = synth_ratings(RatingsShape::ml100k(), &mut rng)?;
            let mut text = String::with_capacity(obs.len() * 16);
            for o in obs.entries() {
                let _ = writeln!(text, "{}\t{}\t{}\t0", o.row + 1, o.col + 1, o.value);
            }
            fs::write(dir.join("ratings.tsv"), text)?;
            summary.metric("ratings", obs.len());
            summary.metric("path", dir.join("ratings.tsv"));
        }
        SynthKind::Image => {
            let img = synth_image(args.width.unwrap_or(64), args.height.unwrap_or(64), args.noise.unwrap_or(0.0), seed)?;
            write_image_stacked(dir.join("image.ppm"), &img)?;
            summary.metric("path", dir.join("image.ppm"));
        }
        SynthKind::Sparse => {
            let (m, n) = (args.m.unwrap_or(20_000), args.n.unwrap_or(20_000));
            let a = random_sparse(m, n, args.per_row.unwrap_or(25), &mut rng)?;
            write_matrix_market(dir.join("matrix.mtx"), &a)?;
            summary.metric("nnz", a.nnz());
            summary.metric("path", dir.join("matrix.mtx"));
        }
    }
    summary.write(dir.join("summary.json"))?;
    Ok(summary)
}

/// Loads any supported matrix file as dense values.
fn load_dense(path: &Path) -> Result<DenseMatrix> {
    match extension(path).as_str() {
        "bin" => read_binary_matrix(path),
        "ppm" | "pgm" | "pnm" => Ok(load_image_stacked(path)?.stacked),
        "mtx" => match read_dense_matrix_market(path) {
            Ok(d) => Ok(d),
            Err(_) => Ok(read_matrix_market(path)?.0.to_dense()),
        },
        other => Err(Error::Unsupported(format!("metrics input with extension {other:?}"))),
    }
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<RunSummary> {
    let args = merge_config(args, args.config.as_deref())?;
    let truth = load_dense(required(&args.truth, "truth")?)?;
    let pred = load_dense(required(&args.pred, "pred")?)?;
    let diff = pred.sub(&truth)?;
    let norm = truth.frobenius_norm();
    let err_mae = mae(pred.as_slice(), truth.as_slice())?;
    let rmse = diff.frobenius_norm() / (diff.as_slice().len() as f64).sqrt();
    let rel = if norm > 0.0 { diff.frobenius_norm() / norm } else { f64::NAN };
    let mut summary = RunSummary::new("metrics", 0, &config_echo(&args, &json!({})))?;
    summary.metric("mae", err_mae);
    summary.metric("rmse", rmse);
    summary.metric("relative_frobenius_error", rel);
    println!("mae={err_mae:.8} rmse={rmse:.8} relative_frobenius_error={rel:.8e}");
    if args.out.is_some() {
        summary.write(out_dir(&args.out)?.join("summary.json"))?;
    }
    Ok(summary)
}
