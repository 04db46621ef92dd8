//! Reproducible random streams.
//!
//! Uniforms come from ChaCha8, a counter-based generator: any position of the
//! stream can be reached directly, so each column of a Gaussian matrix is drawn
//! from a fixed window of the stream regardless of how the fill is tiled.
//! Normals use the Box–Muller transform on pairs of 53-bit uniforms.

use rand_chacha::rand_core::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Seeded position in a counter-based random stream.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

/// ChaCha word position is counted in 32-bit words; one u64 draw takes two.
const WORDS_PER_U64: u128 = 2;

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    /// Independent stream derived from this seed; position starts at zero.
    pub fn fork(&self, stream: u64) -> RngState {
        RngState::with_stream(self.seed, self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_add(1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        unit_from_bits(self.rng.next_u64())
    }

    /// Standard normal via Box–Muller (one value of the pair is discarded).
    pub fn normal(&mut self) -> f64 {
        let (a, b) = (self.rng.next_u64(), self.rng.next_u64());
        box_muller(a, b).0
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // Lemire-style rejection keeps the result unbiased.
        let n64 = n as u64;
        let zone = u64::MAX - (u64::MAX % n64);
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return (x % n64) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(count);
        idx
    }

    /// `rows x cols` matrix of i.i.d. standard normals.
    ///
    /// Column `j` consumes `ceil(rows/2)` Box–Muller pairs starting at a fixed
    /// offset from the current position, and the state advances past the whole
    /// block afterwards.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "gaussian matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let start = self.rng.get_word_pos();
        let pairs = rows.div_ceil(2) as u128;
        let words_per_col = pairs * 2 * WORDS_PER_U64;
        let mut data = vec![0.0; rows * cols];
        for (j, col) in data.chunks_mut(rows).enumerate() {
            let mut r = self.rng.clone();
            r.set_word_pos(start + j as u128 * words_per_col);
            let mut i = 0;
            while i < rows {
                let (z0, z1) = box_muller(r.next_u64(), r.next_u64());
                col[i] = z0;
                if i + 1 < rows {
                    col[i + 1] = z1;
                }
                i += 2;
            }
        }
        self.rng.set_word_pos(start + cols as u128 * words_per_col);
        Ok(DenseMatrix::from_parts(rows, cols, data))
    }
}

#[inline]
fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    // 1 - u lies in (0, 1], so the log is finite.
    let u1 = 1.0 - unit_from_bits(a);
    let u2 = unit_from_bits(b);
    let radius = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (radius * theta.cos(), radius * theta.sin())
}
