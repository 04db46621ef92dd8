//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any criterion fails.
//!
//! `cargo test --release -p fastsvt --test acceptance -- 5 8` runs a subset.
//! The ratings criteria use `$SVT_ML100K` or `data/ml-100k/u.data` when
//! present and a synthetic matrix of the same shape otherwise.

use std::alloc::{GlobalAlloc, Layout, System};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use fastsvt::completion::{
    mae, recycle_q, recycle_u, svt_fast, svt_fast_observed, svt_reference, Backend, CompletionResult,
    PowerController, Strategy, SvtObserver, SvtParams, SvtState, Workload,
};
use fastsvt::io::{
    load_image_stacked, load_ratings_auto, random_sparse, sample_entries, sample_pixels, split_observations,
    synth_low_rank, synth_ratings, gaussian_product, ImageMatrix, RatingsShape, Spectrum, PIXEL_MAX,
};
use fastsvt::linalg::{eig_svd, lu_pl, oracle_svd, oracle_svd_capped, orth, DenseMatrix, RngState};
use fastsvt::rsvd::{qb_error, rsvd_basic, rsvd_bki, rsvd_pi, RsvdParams};
use fastsvt::sparse::{ObservationSet, SparseMatrix};

struct CountingAlloc;

static ARMED: AtomicBool = AtomicBool::new(false);
static ALLOCS: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if ARMED.load(Ordering::Relaxed) {
            ALLOCS.fetch_add(1, Ordering::Relaxed);
        }
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        if ARMED.load(Ordering::Relaxed) {
            ALLOCS.fetch_add(1, Ordering::Relaxed);
        }
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: CountingAlloc = CountingAlloc;

type Outcome = (bool, String);

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().unwrap();
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "eig_svd matches the oracle", c1_eig_svd),
        (2, "LU and QR bases span the same subspace", c2_lu_subspace),
        (3, "power iteration equals basic rSVD", c3_pi_equivalence),
        (4, "rSVD error within 1.5x of the best rank-k error", c4_quality),
        (5, "BKI <= PI(p=4) <= PI(p=0) on ratings", c5_bki_vs_pi),
        (6, "PI faster than basic rSVD", c6_speedup),
        (7, "SVT recovers a 200x200 rank-10 matrix", c7_recovery),
        (8, "fast SVT matches reference MAE", c8_fidelity),
        (9, "subspace recycling speeds up the image run", c9_recycling),
        (10, "recycle_q at least as accurate as recycle_u", c10_recycle_order),
        (11, "adaptive power rule matches the fixture trace", c11_adapt_power),
        (12, "Y keeps its pattern and the update does not allocate", c12_pattern),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match std::panic::catch_unwind(run) {
            Ok(r) => r,
            Err(e) => (false, format!("panicked: {}", panic_text(&e))),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {id:>2} {} ({:.1}s) {name}: {detail}",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn within_time(ok: bool, secs: f64, limit: f64) -> bool {
    ok && secs < limit
}

fn range_projector(x: &DenseMatrix) -> DenseMatrix {
    let r = oracle_svd(x).unwrap();
    let keep = r.s.iter().take_while(|&&s| s > 1e-10 * r.s[0]).count();
    let u = r.truncated(keep).u;
    u.matmul(&u.transpose()).unwrap()
}

fn sparse_random(m: usize, n: usize, density: f64, rng: &mut RngState) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.uniform() < density {
                t.push((i, j, rng.normal()));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, &t).unwrap().0
}

fn c1_eig_svd() -> Outcome {
    let t = Instant::now();
    let mut rng = RngState::new(1);
    let (mut worst_s, mut worst_rec) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = 1 + (rng.uniform() * 60.0) as usize;
        let m = n + (rng.uniform() * (300 - n) as f64) as usize;
        let a = rng.gaussian_matrix(m, n.min(60)).unwrap();
        let e = eig_svd(&a).unwrap();
        let o = oracle_svd(&a).unwrap();
        for (x, y) in e.s.iter().rev().zip(&o.s) {
            worst_s = worst_s.max((x - y).abs() / y);
        }
        worst_rec = worst_rec.max(e.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm());
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = within_time(worst_s < 1e-10 && worst_rec < 1e-8, secs, 30.0);
    (ok, format!("max rel sigma diff {worst_s:.2e} (< 1e-10), max rel reconstruction {worst_rec:.2e} (< 1e-8)"))
}

fn c2_lu_subspace() -> Outcome {
    let t = Instant::now();
    let mut rng = RngState::new(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 1 + (rng.uniform() * 40.0) as usize;
        let m = n + (rng.uniform() * 200.0) as usize;
        let x = rng.gaussian_matrix(m, n).unwrap();
        let q = orth(&x).unwrap();
        let pq = q.matmul(&q.transpose()).unwrap();
        let pl = range_projector(&lu_pl(&x).unwrap());
        worst = worst.max(pl.sub(&pq).unwrap().frobenius_norm());
    }
    let secs = t.elapsed().as_secs_f64();
    (within_time(worst < 1e-8, secs, 10.0), format!("max projector difference {worst:.2e} (< 1e-8)"))
}

fn c3_pi_equivalence() -> Outcome {
    let t = Instant::now();
    let mut rng = RngState::new(3);
    let (mut worst_s, mut worst_x) = (0.0f64, 0.0f64);
    for trial in 0..20 {
        let m = 100 + (rng.uniform() * 200.0) as usize;
        let n = 100 + (rng.uniform() * 200.0) as usize;
        let a = sparse_random(m, n, 0.05, &mut rng);
        let params = RsvdParams::new(10, 1 + trial % 4, trial as u64).with_oversampling(5);
        let (b, _) = rsvd_basic(&a, &params).unwrap();
        let (p, _) = rsvd_pi(&a, &params).unwrap();
        for (x, y) in p.s.iter().zip(&b.s) {
            worst_s = worst_s.max((x - y).abs() / y);
        }
        let xb = b.reconstruct();
        worst_x = worst_x.max(p.reconstruct().sub(&xb).unwrap().frobenius_norm() / xb.frobenius_norm());
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = within_time(worst_s < 1e-8 && worst_x < 1e-8, secs, 60.0);
    (ok, format!("max rel sigma diff {worst_s:.2e}, max rel product diff {worst_x:.2e} (both < 1e-8)"))
}

fn c4_quality() -> Outcome {
    let mut good = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = RngState::new(400 + seed);
        let alpha = if seed % 2 == 0 { 1.0 } else { 2.0 };
        let a = synth_low_rank(120, 80, 80, Spectrum::PowerDecay { alpha }, 0.0, &mut rng).unwrap();
        let (r, _) = rsvd_pi(&a.matrix, &RsvdParams::new(5, 2, seed).with_oversampling(5)).unwrap();
        let err = a.ground_truth().sub(&r.reconstruct()).unwrap().frobenius_norm();
        let best = a.s[5..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let ratio = err / best;
        worst = worst.max(ratio);
        good += usize::from(ratio <= 1.5);
    }
    (good >= 95, format!("{good}/100 trials within 1.5x (need >= 95), worst ratio {worst:.4}"))
}

fn ml100k() -> (ObservationSet, String) {
    let candidates: Vec<PathBuf> = std::env::var_os("SVT_ML100K")
        .map(PathBuf::from)
        .into_iter()
        .chain([Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data")])
        .collect();
    for path in candidates {
        if path.is_file() {
            let r = load_ratings_auto(&path).expect("ml-100k file parses");
            return (r.observations, format!("ml-100k from {}", path.display()));
        }
    }
    let obs = synth_ratings(RatingsShape::ml100k(), &mut RngState::new(100)).unwrap();
    (obs, "synthetic 943x1682 ratings (ml-100k not found)".into())
}

fn c5_bki_vs_pi() -> Outcome {
    let t = Instant::now();
    let (obs, source) = ml100k();
    let a = obs.train_matrix().unwrap();
    let k = 50;
    let err = |algo: fn(&SparseMatrix, &RsvdParams) -> fastsvt::Result<_>, p: usize| {
        median(
            (0..10u64)
                .map(|seed| {
                    let (r, _) = algo(&a, &RsvdParams::new(k, p, seed)).unwrap();
                    qb_error(&a, &r).unwrap()
                })
                .collect(),
        )
    };
    let bki4 = err(rsvd_bki, 4);
    let pi4 = err(rsvd_pi, 4);
    let pi0 = err(rsvd_pi, 0);
    let full = oracle_svd_capped(&a.to_dense(), usize::MAX).unwrap();
    let total: f64 = full.s.iter().map(|s| s * s).sum();
    let tail: f64 = full.s[k..].iter().map(|s| s * s).sum();
    let best = (tail / total).sqrt();
    let secs = t.elapsed().as_secs_f64();
    let ok = within_time(bki4 <= pi4 && pi4 <= pi0 && bki4 <= 1.005 * best, secs, 600.0);
    (
        ok,
        format!(
            "{source}: bki(p=4) {bki4:.6}, pi(p=4) {pi4:.6}, pi(p=0) {pi0:.6}, oracle {best:.6}, bki/oracle {:.5} (<= 1.005)",
            bki4 / best
        ),
    )
}

fn c6_speedup() -> Outcome {
    let a = random_sparse(20_000, 20_000, 25, &mut RngState::new(6)).unwrap();
    let params = RsvdParams::new(100, 4, 6);
    let time = |f: fn(&SparseMatrix, &RsvdParams) -> fastsvt::Result<_>| {
        median(
            (0..3)
                .map(|_| {
                    let t = Instant::now();
                    let r = f(&a, &params).unwrap();
                    let secs = t.elapsed().as_secs_f64();
                    drop(r);
                    secs
                })
                .collect(),
        )
    };
    let basic = time(rsvd_basic);
    let pi = time(rsvd_pi);
    let ratio = pi / basic;
    (
        ratio <= 0.8,
        format!("nnz {}, basic {basic:.2}s, pi {pi:.2}s, ratio {ratio:.3} (<= 0.8)", a.nnz()),
    )
}

fn c7_recovery() -> Outcome {
    let t = Instant::now();
    let mut rng = RngState::new(7);
    let truth = gaussian_product(200, 200, 10, &mut rng).unwrap();
    let obs = sample_entries(&truth, 0.3, &mut rng).unwrap();
    let params = SvtParams::for_workload(Workload::Generic);
    let res = svt_reference(&obs, &params, Backend::Oracle).unwrap();
    let err = res.to_dense().sub(&truth).unwrap().frobenius_norm() / truth.frobenius_norm();
    let secs = t.elapsed().as_secs_f64();
    (
        within_time(err < 1e-2, secs, 300.0),
        format!("relative recovery error {err:.2e} (< 1e-2) after {} iterations, rank {}", res.iterations, res.rank),
    )
}

fn image_fixture() -> ImageMatrix {
    load_image_stacked(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/image64.ppm")).unwrap()
}

fn image_problem() -> (ImageMatrix, ObservationSet) {
    let img = image_fixture();
    let obs = sample_pixels(&img, 0.2, &mut RngState::with_stream(0, 1)).unwrap().scaled(1.0 / PIXEL_MAX);
    (img, obs)
}

fn image_mae(img: &ImageMatrix, res: &CompletionResult) -> f64 {
    let mut pred = res.to_dense();
    pred.scale(PIXEL_MAX);
    mae(pred.as_slice(), img.stacked.as_slice()).unwrap()
}

fn held_out_mae(obs: &ObservationSet, res: &CompletionResult) -> f64 {
    let test: Vec<_> = obs.test().collect();
    let truth: Vec<f64> = test.iter().map(|o| o.value).collect();
    mae(&res.predict_all(test), &truth).unwrap()
}

const RATINGS_DELTA: f64 = 1.9;

fn c8_fidelity() -> Outcome {
    let t = Instant::now();
    let (img, obs) = image_problem();
    let params = SvtParams::for_workload(Workload::Image);
    let fast = image_mae(&img, &svt_fast(&obs, &params).unwrap());
    let reference = image_mae(&img, &svt_reference(&obs, &params, Backend::RsvdBki).unwrap());
    let oracle = image_mae(&img, &svt_reference(&obs, &params, Backend::Oracle).unwrap());
    let image_gap = (fast - reference).abs() / reference;

    let (ratings, source) = ml100k();
    let split = split_observations(&ratings, 0.8, &mut RngState::with_stream(0, 1)).unwrap();
    let mut params = SvtParams::for_workload(Workload::Ratings);
    // The default step 1.2mn/|Phi| (about 24 here) diverges on skewed rating patterns.
    params.delta = Some(RATINGS_DELTA);
    let rf = svt_fast(&split, &params).unwrap();
    let rr = svt_reference(&split, &params, Backend::RsvdBki).unwrap();
    let (fast_r, ref_r) = (held_out_mae(&split, &rf), held_out_mae(&split, &rr));
    let ratings_gap = (fast_r - ref_r).abs() / ref_r;
    let secs = t.elapsed().as_secs_f64();
    (
        within_time(image_gap <= 0.01 && ratings_gap <= 0.01, secs, 1200.0),
        format!(
            "image MAE fast {fast:.4} vs reference {reference:.4} ({:.2}%; oracle backend {oracle:.4}), \
             {source} (delta {RATINGS_DELTA}) MAE fast {fast_r:.4} vs reference {ref_r:.4} ({:.2}%), limit 1%",
            100.0 * image_gap,
            100.0 * ratings_gap
        ),
    )
}

fn c9_recycling() -> Outcome {
    // The fixture converges in under 50 iterations, so recycling starts at iteration 10.
    let (img, obs) = image_problem();
    let run = |strategy: Strategy| {
        let mut params = SvtParams::for_workload(Workload::Image);
        params.strategy = strategy;
        params.i_reuse = 10;
        let mut walls = Vec::new();
        let mut last = None;
        for _ in 0..3 {
            let res = svt_fast(&obs, &params).unwrap();
            walls.push(res.timing.total_wall_secs);
            last = Some(res);
        }
        let res = last.unwrap();
        (median(walls), image_mae(&img, &res), res.iterations, res.converged)
    };
    let (t_none, mae_none, it_none, conv_none) = run(Strategy::None);
    let (t_u, mae_u, it_u, conv_u) = run(Strategy::ReuseU);
    let ratio = t_u / t_none;
    let gap = (mae_u - mae_none).abs() / mae_none;
    (
        ratio <= 0.8 && gap <= 0.01,
        format!(
            "none {t_none:.3}s MAE {mae_none:.4} ({it_none} it, converged {conv_none}); \
             reuse-u {t_u:.3}s MAE {mae_u:.4} ({it_u} it, converged {conv_u}); \
             time ratio {ratio:.3} (<= 0.8), MAE gap {:.2}% (<= 1%)",
            100.0 * gap
        ),
    )
}

/// Captures Y before and after one mid-run update.
struct Snapshot {
    at: usize,
    before: Option<SparseMatrix>,
    after: Option<SparseMatrix>,
    rank: usize,
}

impl SvtObserver for Snapshot {
    fn before_update(&mut self, s: &SvtState) {
        if s.iteration == self.at {
            self.before = Some(s.y.clone());
        }
    }

    fn after_update(&mut self, s: &SvtState) {
        if s.iteration == self.at {
            self.after = Some(s.y.clone());
        }
    }

    fn on_iteration(&mut self, r: &fastsvt::completion::TraceRecord) {
        if r.iteration == self.at {
            self.rank = r.rank;
        }
    }
}

fn c10_recycle_order() -> Outcome {
    let (mut eq, mut eu) = (Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let mut rng = RngState::new(1000 + seed);
        let truth = gaussian_product(150, 120, 8, &mut rng).unwrap();
        let obs = sample_entries(&truth, 0.4, &mut rng).unwrap();
        let mut params = SvtParams::for_workload(Workload::Generic);
        params.i_max = 20;
        params.epsilon = 1e-12;
        params.seed = seed;
        let mut snap = Snapshot { at: 15, before: None, after: None, rank: 0 };
        svt_fast_observed(&obs, &params, &mut snap).unwrap();
        let (prev, next) = (snap.before.unwrap(), snap.after.unwrap());
        let k = snap.rank.max(1);
        let (fresh, sub) = rsvd_bki(&prev, &RsvdParams::new(k, params.p0, seed)).unwrap();
        let best = oracle_svd(&next.to_dense()).unwrap().truncated(k).reconstruct();
        let rel = |x: DenseMatrix| x.sub(&best).unwrap().frobenius_norm() / best.frobenius_norm();
        eq.push(rel(recycle_q(&sub, &next, k).unwrap().reconstruct()));
        eu.push(rel(recycle_u(&fresh.u, &next).unwrap().reconstruct()));
    }
    let (mq, mu) = (median(eq), median(eu));
    (mq <= mu, format!("median error vs oracle: recycle_q {mq:.3e}, recycle_u {mu:.3e}"))
}

fn c11_adapt_power() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/adapt_power_trace.csv");
    let text = std::fs::read_to_string(path).unwrap();
    let mut ctrl = PowerController::new(3, 1);
    let (mut steps, mut mismatches, mut decrements) = (0, Vec::new(), 0);
    let mut prev_p = 3;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("step")) {
        let f: Vec<&str> = line.split(',').collect();
        let (err, want): (f64, usize) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        let got = fastsvt::completion::adapt_power(&mut ctrl, err);
        if got != want {
            mismatches.push(format!("step {}: got {got}, want {want}", f[0]));
        }
        decrements += usize::from(got < prev_p);
        prev_p = got;
        steps += 1;
    }
    (
        steps == 20 && mismatches.is_empty() && decrements >= 1,
        format!("{steps} steps, {decrements} streak decrement(s), mismatches: {mismatches:?}"),
    )
}

struct PatternProbe {
    nnz: Option<usize>,
    indices: Option<*const usize>,
    violations: Vec<String>,
    allocs_after_first: usize,
}

impl SvtObserver for PatternProbe {
    fn before_update(&mut self, s: &SvtState) {
        let (nnz, ptr) = (s.y.nnz(), s.y.indices().as_ptr());
        if *self.nnz.get_or_insert(nnz) != nnz || *self.indices.get_or_insert(ptr) != ptr {
            self.violations.push(format!("iteration {}: pattern changed", s.iteration));
        }
        ALLOCS.store(0, Ordering::SeqCst);
        ARMED.store(true, Ordering::SeqCst);
    }

    fn after_update(&mut self, s: &SvtState) {
        ARMED.store(false, Ordering::SeqCst);
        let n = ALLOCS.load(Ordering::SeqCst);
        if s.iteration > 1 {
            self.allocs_after_first += n;
        }
        if s.y.nnz() != self.nnz.unwrap() || s.y.indices().as_ptr() != self.indices.unwrap() {
            self.violations.push(format!("iteration {}: pattern changed by the update", s.iteration));
        }
    }
}

fn c12_pattern() -> Outcome {
    let (_, obs) = image_problem();
    let mut params = SvtParams::for_workload(Workload::Image);
    // Recycling from iteration 10 exercises both fresh and recycled updates.
    params.i_reuse = 10;
    params.i_max = 60;
    let mut probe = PatternProbe { nnz: None, indices: None, violations: Vec::new(), allocs_after_first: 0 };
    let res = svt_fast_observed(&obs, &params, &mut probe).unwrap();
    (
        probe.violations.is_empty() && probe.allocs_after_first == 0 && res.iterations > 1,
        format!(
            "{} iterations, nnz(Y) {}, pattern violations {}, allocations in updates after iteration 1: {}",
            res.iterations,
            probe.nnz.unwrap_or(0),
            probe.violations.len(),
            probe.allocs_after_first
        ),
    )
}
