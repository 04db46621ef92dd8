use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orth, DenseMatrix, RngState};
use crate::sparse::{Observation, ObservationSet, SparseMatrix, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spectrum {
    /// `sigma_j = 1`.
    Flat,
    /// `sigma_j = j^-alpha`, `j = 1..rank`.
    PowerDecay { alpha: f64 },
}

impl Spectrum {
    pub fn values(&self, rank: usize) -> Vec<f64> {
        (1..=rank)
            .map(|j| match *self {
                Spectrum::Flat => 1.0,
                Spectrum::PowerDecay { alpha } => (j as f64).powf(-alpha),
            })
            .collect()
    }
}

/// Synthetic matrix with its noise-free ground-truth factors.
#[derive(Debug, Clone)]
pub struct SynthLowRank {
    pub matrix: SparseMatrix,
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl SynthLowRank {
    pub fn ground_truth(&self) -> DenseMatrix {
        DenseMatrix::from_factors(&self.u, &self.s, &self.v).expect("factor shapes agree")
    }
}

/// `A = sum_j sigma_j u_j v_j^T + noise * G` with random orthonormal factors,
/// stored densely in CSR.
pub fn synth_low_rank(
    m: usize,
    n: usize,
    rank: usize,
    spectrum: Spectrum,
    noise: f64,
    rng: &mut RngState,
) -> Result<SynthLowRank> {
    if m == 0 || n == 0 || rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidDimensions(format!(
            "rank {rank} for a {m}x{n} matrix (need 1 <= rank <= min(m, n))"
        )));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidParameter(format!("noise must be finite and >= 0, got {noise}")));
    }
    if let Spectrum::PowerDecay { alpha } = spectrum {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!("decay exponent must be >= 0, got {alpha}")));
        }
    }
    let u = orth(&rng.gaussian_matrix(m, rank)?)?;
    let v = orth(&rng.gaussian_matrix(n, rank)?)?;
    let s = spectrum.values(rank);
    let mut a = DenseMatrix::from_factors(&u, &s, &v)?;
    if noise > 0.0 {
        let g = rng.gaussian_matrix(m, n)?;
        for (x, e) in a.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *x += noise * e;
        }
    }
    Ok(SynthLowRank {
        matrix: SparseMatrix::from_dense(&a),
        u,
        s,
        v,
    })
}

/// `M_L M_R^T` with i.i.d. standard normal `m x rank` and `n x rank` factors.
pub fn gaussian_product(m: usize, n: usize, rank: usize, rng: &mut RngState) -> Result<DenseMatrix> {
    let l = rng.gaussian_matrix(m, rank)?;
    let r = rng.gaussian_matrix(n, rank)?;
    l.matmul(&r.transpose())
}

/// Uniformly samples `round(fraction * m * n)` entries of `a` without replacement.
pub fn sample_entries(a: &DenseMatrix, fraction: f64, rng: &mut RngState) -> Result<ObservationSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let (m, n) = a.shape();
    let count = ((fraction * (m * n) as f64).round() as usize).max(1);
    let mut idx = rng.sample_indices(m * n, count);
    idx.sort_unstable();
    let entries = idx
        .into_iter()
        .map(|p| {
            let (row, col) = (p / n, p % n);
            Observation {
                row,
                col,
                value: a.get(row, col),
                split: Split::Train,
            }
        })
        .collect();
    ObservationSet::new(m, n, entries)
}

/// Random sparse matrix with exactly `per_row` standard normal entries in
/// distinct columns of every row.
pub fn random_sparse(m: usize, n: usize, per_row: usize, rng: &mut RngState) -> Result<SparseMatrix> {
    if m == 0 || n == 0 || per_row == 0 || per_row > n {
        return Err(Error::InvalidDimensions(format!(
            "{per_row} entries per row in a {m}x{n} matrix"
        )));
    }
    let mut indptr = Vec::with_capacity(m + 1);
    let mut indices = Vec::with_capacity(m * per_row);
    let mut values = Vec::with_capacity(m * per_row);
    indptr.push(0);
    for _ in 0..m {
        let mut cols = if per_row * 4 < n {
            let mut c = Vec::with_capacity(per_row);
            while c.len() < per_row {
                let j = rng.below(n);
                if !c.contains(&j) {
                    c.push(j);
                }
            }
            c
        } else {
            rng.sample_indices(n, per_row)
        };
        cols.sort_unstable();
        for c in cols {
            indices.push(c);
            values.push(rng.normal());
        }
        indptr.push(indices.len());
    }
    SparseMatrix::from_csr(m, n, indptr, indices, values)
}

/// Shape of a synthetic rating matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingsShape {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub min_per_user: usize,
    pub latent_rank: usize,
}

impl RatingsShape {
    /// Same dimensions as MovieLens 100k.
    pub fn ml100k() -> Self {
        RatingsShape {
            users: 943,
            items: 1682,
            ratings: 100_000,
            min_per_user: 20,
            latent_rank: 10,
        }
    }
}

/// Integer 1..=5 ratings from a biased low-rank model with noise: heavy-tailed
/// user activity (at least `min_per_user` each) and Zipf-like item popularity.
/// Row `u` / column `i` correspond to user id `u + 1` / item id `i + 1`.
pub fn synth_ratings(shape: RatingsShape, rng: &mut RngState) -> Result<ObservationSet> {
    let RatingsShape {
        users,
        items,
        ratings,
        min_per_user,
        latent_rank,
    } = shape;
    if users == 0 || items < min_per_user || ratings < users * min_per_user || ratings > users * items {
        return Err(Error::InvalidParameter(format!(
            "cannot place {ratings} ratings on {users}x{items} with {min_per_user} per user"
        )));
    }

    // Activity: lognormal weights on top of the per-user minimum.
    let weights: Vec<f64> = (0..users).map(|_| (1.1 * rng.normal()).exp()).collect();
    let total_w: f64 = weights.iter().sum();
    let spare = ratings - users * min_per_user;
    let cap = items - min_per_user;
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|w| min_per_user + ((w / total_w * spare as f64).floor() as usize).min(cap))
        .collect();
    let mut placed: usize = counts.iter().sum();
    while placed < ratings {
        let u = rng.below(users);
        if counts[u] < items {
            counts[u] += 1;
            placed += 1;
        }
    }

    // Popularity: Zipf weights over a random item order.
    let mut order: Vec<usize> = (0..items).collect();
    rng.shuffle(&mut order);
    let mut pop = vec![0.0; items];
    for (rank, &item) in order.iter().enumerate() {
        pop[item] = 1.0 / (rank as f64 + 10.0);
    }
    let mut cdf = Vec::with_capacity(items);
    let mut acc = 0.0;
    for w in &pop {
        acc += w;
        cdf.push(acc);
    }

    let scale = 0.8 / (latent_rank as f64).sqrt();
    let pu = rng.gaussian_matrix(users, latent_rank)?;
    let qi = rng.gaussian_matrix(items, latent_rank)?;
    let bu: Vec<f64> = (0..users).map(|_| 0.4 * rng.normal()).collect();
    let bi: Vec<f64> = (0..items).map(|_| 0.5 * rng.normal()).collect();

    let mut entries = Vec::with_capacity(ratings);
    let mut taken = vec![false; items];
    for (u, &count) in counts.iter().enumerate() {
        let mut chosen = Vec::with_capacity(count);
        while chosen.len() < count {
            let item = if chosen.len() * 2 < items {
                let t = rng.uniform() * acc;
                cdf.partition_point(|&c| c < t).min(items - 1)
            } else {
                rng.below(items)
            };
            if !taken[item] {
                taken[item] = true;
                chosen.push(item);
            }
        }
        chosen.sort_unstable();
        for &i in &chosen {
            taken[i] = false;
            let latent: f64 = (0..latent_rank).map(|r| pu.get(u, r) * qi.get(i, r)).sum::<f64>() * scale;
            let raw = 3.5 + bu[u] + bi[i] + latent + 0.8 * rng.normal();
            entries.push(Observation {
                row: u,
                col: i,
                value: raw.round().clamp(1.0, 5.0),
                split: Split::Train,
            });
        }
    }
    ObservationSet::new(users, items, entries)
}

/// RGB test image: separable waves and Gaussian blobs per channel, so the
/// stacked matrix is approximately low rank, plus optional per-pixel Gaussian
/// `texture` (standard deviation in 0..255 units).
pub fn synth_image(width: usize, height: usize, texture: f64, seed: u64) -> Result<super::ImageMatrix> {
    if !(texture >= 0.0 && texture.is_finite()) {
        return Err(Error::InvalidParameter(format!("texture must be finite and non-negative, got {texture}")));
    }
    let mut rng = RngState::new(seed);
    struct Blob {
        cx: f64,
        cy: f64,
        r: f64,
        amp: [f64; 3],
    }
    let blobs: Vec<Blob> = (0..4)
        .map(|_| Blob {
            cx: rng.uniform(),
            cy: rng.uniform(),
            r: 0.1 + 0.2 * rng.uniform(),
            amp: [
                80.0 * (rng.uniform() - 0.3),
                80.0 * (rng.uniform() - 0.3),
                80.0 * (rng.uniform() - 0.3),
            ],
        })
        .collect();
    let phase: Vec<f64> = (0..3).map(|_| std::f64::consts::TAU * rng.uniform()).collect();
    let mut samples = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        let fy = y as f64 / height as f64;
        for x in 0..width {
            let fx = x as f64 / width as f64;
            for c in 0..3 {
                let mut v = 110.0 + 30.0 * c as f64
                    + 35.0 * (std::f64::consts::TAU * fx + phase[c]).sin() * (std::f64::consts::PI * fy).cos();
                for b in &blobs {
                    let d2 = (fx - b.cx).powi(2) + (fy - b.cy).powi(2);
                    v += b.amp[c] * (-d2 / (b.r * b.r)).exp();
                }
                if texture > 0.0 {
                    v += texture * rng.normal();
                }
                samples.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    super::ImageMatrix::from_interleaved(width, height, 3, &samples)
}
