use fastsvt::completion::{recycle_q, shrink};
use fastsvt::io::{
    decode_netpbm, encode_netpbm, read_ratings, sample_pixels, split_observations, ImageMatrix, RatingFormat,
};
use fastsvt::linalg::{eig_svd, gaussian_matrix, lu_pl, oracle_svd, orth, sym_eig, DenseMatrix, RngState};
use fastsvt::rsvd::{rsvd_basic, rsvd_bki, rsvd_pi, sketch_matrix, RsvdParams};
use fastsvt::sparse::{
    project_observed, read_matrix_market_from, write_matrix_market_to, Observation, ObservationSet, SparseMatrix,
    Split,
};
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(&mut RngState::new(seed), rows, cols).unwrap()
}

/// Gaussian entries kept with probability `density`; zero rows and columns allowed.
fn sparse_random(m: usize, n: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut rng = RngState::new(seed);
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

fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn projector(q: &DenseMatrix) -> DenseMatrix {
    q.matmul(&q.transpose()).unwrap()
}

/// Orthogonal projector onto range(x) built from the oracle SVD, independent of orth/lu.
fn range_projector(x: &DenseMatrix) -> DenseMatrix {
    let r = oracle_svd(x).unwrap();
    let top = r.s[0];
    let keep = r.s.iter().take_while(|&&s| s > 1e-10 * top).count();
    projector(&r.truncated(keep).u)
}

fn orthonormality_defect(q: &DenseMatrix) -> f64 {
    q.gram().sub(&DenseMatrix::identity(q.cols())).unwrap().frobenius_norm()
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn spmm_and_spmm_t_are_adjoint(m in 1usize..40, n in 1usize..40, b in 1usize..6, density in 0.05f64..0.9, seed in any::<u64>()) {
        let a = sparse_random(m, n, density, seed);
        let x = gaussian(n, b, seed ^ 1);
        let z = gaussian(m, b, seed ^ 2);
        let ax = a.spmm(&x).unwrap();
        let atz = a.spmm_t(&z).unwrap();
        let lhs = inner(&ax, &z);
        let rhs = inner(&x, &atz);
        let scale = ax.frobenius_norm() * z.frobenius_norm() + atz.frobenius_norm() * x.frobenius_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE), "{lhs} vs {rhs}");
        // Both products agree with the densified matrix.
        let d = a.to_dense();
        prop_assert!(d.matmul(&x).unwrap().sub(&ax).unwrap().frobenius_norm() <= 1e-12 * (1.0 + ax.frobenius_norm()));
    }

    #[test]
    fn project_observed_is_linear_in_s(m in 1usize..25, n in 1usize..25, r in 1usize..5, seed in any::<u64>()) {
        let u = gaussian(m, r, seed);
        let v = gaussian(n, r, seed ^ 3);
        let s: Vec<f64> = (0..r).map(|t| 1.0 + t as f64).collect();
        let s2: Vec<f64> = s.iter().map(|x| 2.0 * x).collect();
        let a = sparse_random(m, n, 0.4, seed ^ 5);
        let entries: Vec<Observation> = a.iter().map(|(row, col, value)| Observation { row, col, value, split: Split::Train }).collect();
        prop_assume!(!entries.is_empty());
        let obs = ObservationSet::new(m, n, entries).unwrap();
        let once = project_observed(&u, &s, &v, &obs).unwrap();
        let twice = project_observed(&u, &s2, &v, &obs).unwrap();
        for (x, y) in once.iter().zip(&twice) {
            prop_assert_eq!(2.0 * x, *y);
        }
        // Values match the dense product at the same positions.
        let x = DenseMatrix::from_factors(&u, &s, &v).unwrap();
        for (o, val) in obs.train().zip(&once) {
            prop_assert!((x.get(o.row, o.col) - val).abs() <= 1e-12 * (1.0 + val.abs()));
        }
    }

    #[test]
    fn eig_svd_matches_oracle_on_full_rank_tall_matrices(n in 1usize..16, extra in 0usize..30, seed in any::<u64>()) {
        let a = gaussian(n + extra, n, seed);
        let e = eig_svd(&a).unwrap();
        let o = oracle_svd(&a).unwrap();
        prop_assert!(e.s.windows(2).all(|w| w[0] <= w[1]), "eig_svd order must be ascending");
        for (x, y) in e.s.iter().rev().zip(&o.s) {
            prop_assert!((x - y).abs() <= 1e-10 * y, "{x} vs {y}");
        }
        let rec = e.reconstruct().sub(&a).unwrap().frobenius_norm();
        prop_assert!(rec < 1e-8 * a.frobenius_norm());
        prop_assert!(orthonormality_defect(&e.u) < 1e-10);
        prop_assert!(orthonormality_defect(&e.v) < 1e-10);
    }

    #[test]
    fn lu_and_orth_span_the_same_space(n in 1usize..12, extra in 0usize..30, seed in any::<u64>()) {
        let x = gaussian(n + extra, n, seed);
        let q = orth(&x).unwrap();
        let l = lu_pl(&x).unwrap();
        prop_assert!(orthonormality_defect(&q) < 1e-10);
        let pq = projector(&q);
        let diff = range_projector(&l).sub(&pq).unwrap().frobenius_norm();
        prop_assert!(diff < 1e-8, "{diff}");
        prop_assert!(range_projector(&x).sub(&pq).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn power_iteration_equals_basic_rsvd_with_shared_sketch(m in 30usize..70, n in 30usize..70, k in 1usize..6, p in 0usize..3, seed in any::<u64>()) {
        let a = sparse_random(m, n, 0.3, seed);
        let params = RsvdParams::new(k, p, seed ^ 7).with_oversampling(3);
        let (b, _) = rsvd_basic(&a, &params).unwrap();
        let (pi, _) = rsvd_pi(&a, &params).unwrap();
        for (x, y) in pi.s.iter().zip(&b.s) {
            prop_assert!((x - y).abs() <= 1e-8 * y.max(1e-300), "{x} vs {y}");
        }
        let diff = pi.reconstruct().sub(&b.reconstruct()).unwrap().frobenius_norm();
        prop_assert!(diff <= 1e-8 * b.reconstruct().frobenius_norm(), "{diff}");
    }

    #[test]
    fn final_orthonormalization_choice_does_not_change_the_product(m in 20usize..50, n in 20usize..50, k in 1usize..5, seed in any::<u64>()) {
        // Basic rSVD through eig_svd against the textbook path: Q = orth(A Omega), SVD of Q^T A.
        let a = sparse_random(m, n, 0.4, seed);
        let params = RsvdParams::new(k, 0, seed ^ 11).with_oversampling(2);
        let (fast, _) = rsvd_basic(&a, &params).unwrap();
        let omega = sketch_matrix(n, &params).unwrap();
        let q = orth(&a.spmm(&omega).unwrap()).unwrap();
        let bt = a.spmm_t(&q).unwrap();
        let small = oracle_svd(&bt.transpose()).unwrap().truncated(k);
        let reference = q.matmul(&small.u).unwrap();
        let textbook = DenseMatrix::from_factors(&reference, &small.s, &small.v).unwrap();
        let diff = fast.reconstruct().sub(&textbook).unwrap().frobenius_norm();
        prop_assert!(diff <= 1e-8 * textbook.frobenius_norm(), "{diff}");
    }

    #[test]
    fn randomized_factors_are_orthonormal(m in 30usize..60, n in 30usize..60, k in 1usize..5, p in 0usize..3, seed in any::<u64>()) {
        let a = sparse_random(m, n, 0.5, seed);
        let params = RsvdParams::new(k, p, seed).with_oversampling(2);
        for (res, sub) in [rsvd_basic(&a, &params).unwrap(), rsvd_pi(&a, &params).unwrap(), rsvd_bki(&a, &params).unwrap()] {
            prop_assert!(orthonormality_defect(&res.u) < 1e-10);
            prop_assert!(orthonormality_defect(&res.v) < 1e-10);
            prop_assert!(orthonormality_defect(&sub.q) < 1e-8);
            prop_assert!(res.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn shrink_satisfies_the_proximal_optimality_conditions(m in 2usize..20, n in 2usize..20, seed in any::<u64>(), frac in 0.05f64..0.95) {
        // X = prox(Y) iff Y - X = tau (U V^T + W) with U^T W = 0, W V = 0, ||W||_2 <= 1.
        let y = gaussian(m, n, seed);
        let full = oracle_svd(&y).unwrap();
        let tau = frac * full.s[0];
        let x = shrink(&full, tau).unwrap();
        prop_assert!(x.s.iter().all(|&s| s > 0.0));
        prop_assert_eq!(x.rank(), full.s.iter().filter(|&&s| s > tau).count());
        let xd = if x.rank() == 0 { DenseMatrix::zeros(m, n) } else { x.reconstruct() };
        let mut g = y.sub(&xd).unwrap();
        g.scale(1.0 / tau);
        let w = if x.rank() == 0 { g.clone() } else { g.sub(&x.u.matmul(&x.v.transpose()).unwrap()).unwrap() };
        if x.rank() > 0 {
            prop_assert!(x.u.t_matmul(&w).unwrap().frobenius_norm() < 1e-9);
            prop_assert!(w.matmul(&x.v).unwrap().frobenius_norm() < 1e-9);
        }
        let wn = oracle_svd(&w).unwrap().s[0];
        prop_assert!(wn <= 1.0 + 1e-9, "{wn}");
    }

    #[test]
    fn sym_eig_diagonalizes(n in 1usize..25, seed in any::<u64>()) {
        let g = gaussian(n, n, seed);
        let b = g.add(&g.transpose()).unwrap();
        let (v, d) = sym_eig(&b).unwrap();
        prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        let mut vd = v.clone();
        vd.scale_columns(&d);
        let res = b.matmul(&v).unwrap().sub(&vd).unwrap().frobenius_norm();
        prop_assert!(res < 1e-10 * b.frobenius_norm().max(1.0), "{res}");
        prop_assert!(orthonormality_defect(&v) < 1e-10);
    }

    #[test]
    fn gaussian_stream_is_deterministic(rows in 1usize..30, cols in 1usize..8, seed in any::<u64>()) {
        let a = gaussian(rows, cols, seed);
        let b = gaussian(rows, cols, seed);
        prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(a.is_finite());
    }

    #[test]
    fn triplets_keep_the_last_duplicate(m in 1usize..10, n in 1usize..10, raw in proptest::collection::vec((0usize..10, 0usize..10, -5.0f64..5.0), 0..60)) {
        let t: Vec<_> = raw.into_iter().map(|(i, j, v)| (i % m, j % n, v)).collect();
        let (a, dups) = SparseMatrix::from_triplets(m, n, &t).unwrap();
        let mut dense = vec![vec![None; n]; m];
        for &(i, j, v) in &t {
            dense[i][j] = Some(v);
        }
        let stored = dense.iter().flatten().filter(|x| x.is_some()).count();
        prop_assert_eq!(a.nnz(), stored);
        prop_assert_eq!(dups, t.len() - stored);
        let d = a.to_dense();
        for i in 0..m {
            for j in 0..n {
                prop_assert_eq!(d.get(i, j), dense[i][j].unwrap_or(0.0));
            }
        }
    }

    #[test]
    fn matrix_market_round_trips(m in 1usize..15, n in 1usize..15, seed in any::<u64>()) {
        let a = sparse_random(m, n, 0.3, seed);
        let mut buf = Vec::new();
        write_matrix_market_to(&mut buf, &a).unwrap();
        let (b, dups) = read_matrix_market_from(buf.as_slice()).unwrap();
        prop_assert_eq!(dups, 0);
        prop_assert_eq!(a.shape(), b.shape());
        prop_assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
    }

    #[test]
    fn binary_netpbm_round_trips_bit_exact(w in 1usize..12, h in 1usize..12, gray in any::<bool>(), bytes in proptest::collection::vec(any::<u8>(), 432)) {
        let c = if gray { 1 } else { 3 };
        let img = ImageMatrix::from_interleaved(w, h, c, &bytes[..w * h * c]).unwrap();
        prop_assert_eq!(img.stacked.shape(), (c * h, w));
        let enc = encode_netpbm(&img, true);
        let back = decode_netpbm(&enc).unwrap();
        prop_assert_eq!(back.to_interleaved(), bytes[..w * h * c].to_vec());
        prop_assert_eq!(encode_netpbm(&back, true), enc);
    }

    #[test]
    fn pixel_masks_are_shared_across_channels(w in 2usize..10, h in 2usize..10, frac in 0.1f64..1.0, seed in any::<u64>()) {
        let bytes: Vec<u8> = (0..w * h * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = ImageMatrix::from_interleaved(w, h, 3, &bytes).unwrap();
        let obs = sample_pixels(&img, frac, &mut RngState::new(seed)).unwrap();
        let mut masks = vec![Vec::new(); 3];
        for o in obs.entries() {
            masks[o.row / h].push((o.row % h, o.col));
            prop_assert_eq!(o.value, img.stacked.get(o.row, o.col));
        }
        for m in &mut masks {
            m.sort_unstable();
        }
        prop_assert_eq!(&masks[0], &masks[1]);
        prop_assert_eq!(&masks[1], &masks[2]);
        prop_assert_eq!(masks[0].len(), ((frac * (w * h) as f64).round() as usize).max(1));
    }

    #[test]
    fn ratings_ingestion_preserves_values(raw in proptest::collection::vec((0u64..50, 0u64..40, 1u32..=10), 1..200)) {
        let mut text = String::new();
        for (u, i, r) in &raw {
            text.push_str(&format!("{u}\t{i}\t{}\t0\n", *r as f64 / 2.0));
        }
        let ratings = read_ratings(text.as_bytes(), RatingFormat::Tsv).unwrap();
        let file_sum: f64 = raw.iter().map(|(_, _, r)| *r as f64 / 2.0).sum();
        prop_assert!((ratings.file_sum - file_sum).abs() < 1e-9);
        prop_assert_eq!(ratings.records, raw.len());
        prop_assert_eq!(ratings.observations.len() + ratings.duplicates, raw.len());
        for o in ratings.observations.entries() {
            let (u, i) = (ratings.user_ids[o.row], ratings.item_ids[o.col]);
            let last = raw.iter().rev().find(|(ru, ri, _)| *ru == u && *ri == i).unwrap();
            prop_assert_eq!(o.value, last.2 as f64 / 2.0);
        }
    }

    #[test]
    fn splits_are_deterministic_and_sized(n in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let t: Vec<_> = (0..n).map(|k| (k / 20, k % 20, 1.0 + (k % 9) as f64 / 2.0)).collect();
        let (obs, _) = ObservationSet::from_triplets_last_wins(n / 20 + 1, 20, &t).unwrap();
        let a = split_observations(&obs, frac, &mut RngState::new(seed));
        let b = split_observations(&obs, frac, &mut RngState::new(seed));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.entries(), b.entries());
                prop_assert_eq!(a.train_len(), (frac * n as f64).round() as usize);
                prop_assert_eq!(a.train_len() + a.test_len(), n);
            }
            (Err(_), Err(_)) => {
                let train = (frac * n as f64).round() as usize;
                prop_assert!(train == 0 || train == n);
            }
            _ => prop_assert!(false, "split not deterministic"),
        }
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn recycled_basis_on_unchanged_matrix_reproduces_bki(m in 40usize..80, n in 40usize..80, k in 1usize..5, seed in any::<u64>()) {
        let a = sparse_random(m, n, 0.3, seed);
        let (fresh, sub) = rsvd_bki(&a, &RsvdParams::new(k, 2, seed).with_oversampling(3)).unwrap();
        let again = recycle_q(&sub, &a, k).unwrap();
        for (x, y) in fresh.s.iter().zip(&again.s) {
            prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-300));
        }
        let diff = fresh.reconstruct().sub(&again.reconstruct()).unwrap().frobenius_norm();
        prop_assert!(diff <= 1e-10 * a.frobenius_norm());
    }
}
