//! Netpbm images (PPM/PGM, maxval 255) as channel-stacked matrices: the R
//! block on top, then G, then B, giving a `(channels * height) x width` matrix.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RngState};
use crate::sparse::{Observation, ObservationSet, Split};

/// The only supported maxval.
pub const PIXEL_MAX: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Stacked values on the 0..=255 scale.
    pub stacked: DenseMatrix,
}

impl ImageMatrix {
    /// Builds from interleaved samples in row-major pixel order.
    pub fn from_interleaved(width: usize, height: usize, channels: usize, samples: &[u8]) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Unsupported(format!("{channels} channels")));
        }
        if width == 0 || height == 0 || samples.len() != width * height * channels {
            return Err(Error::InvalidDimensions(format!(
                "{} samples for a {width}x{height}x{channels} image",
                samples.len()
            )));
        }
        let stacked = DenseMatrix::from_fn(channels * height, width, |r, x| {
            let (c, y) = (r / height, r % height);
            samples[(y * width + x) * channels + c] as f64
        });
        Ok(ImageMatrix {
            width,
            height,
            channels,
            stacked,
        })
    }

    /// Interleaved samples, rounding and clamping values to 0..=255.
    pub fn to_interleaved(&self) -> Vec<u8> {
        let (w, h, ch) = (self.width, self.height, self.channels);
        let mut out = vec![0u8; w * h * ch];
        for c in 0..ch {
            for y in 0..h {
                for x in 0..w {
                    out[(y * w + x) * ch + c] = self.stacked.get(c * h + y, x).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        out
    }

    /// Same geometry with new stacked values.
    pub fn with_stacked(&self, stacked: DenseMatrix) -> Result<Self> {
        if stacked.shape() != self.stacked.shape() {
            return Err(Error::DimensionMismatch(format!(
                "stacked matrix {:?} for image {:?}",
                stacked.shape(),
                self.stacked.shape()
            )));
        }
        Ok(ImageMatrix {
            stacked,
            ..self.clone()
        })
    }
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Tokens<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("expected {what} in netpbm header"),
            })
    }
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<ImageMatrix> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Unsupported("not a netpbm file".into()));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'3' => (3, false),
        b'5' => (1, true),
        b'6' => (3, true),
        m => return Err(Error::Unsupported(format!("netpbm magic P{}", m as char))),
    };
    let mut t = Tokens { bytes, pos: 2 };
    let width = t.number("width")?;
    let height = t.number("height")?;
    let maxval = t.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!("maxval {maxval} (only 255 is supported)")));
    }
    let count = width * height * channels;
    let samples: Vec<u8> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = t.pos + 1;
        let raster = bytes.get(start..start + count).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("raster has fewer than {count} bytes"),
        })?;
        raster.to_vec()
    } else {
        (0..count)
            .map(|_| {
                let v = t.number("sample")?;
                u8::try_from(v).map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("sample {v} exceeds maxval"),
                })
            })
            .collect::<Result<_>>()?
    };
    ImageMatrix::from_interleaved(width, height, channels, &samples)
}

pub fn encode_netpbm(img: &ImageMatrix, binary: bool) -> Vec<u8> {
    let magic = match (img.channels, binary) {
        (1, false) => "P2",
        (3, false) => "P3",
        (1, true) => "P5",
        _ => "P6",
    };
    let samples = img.to_interleaved();
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    if binary {
        out.extend_from_slice(&samples);
    } else {
        for row in samples.chunks(img.width * img.channels) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn load_image_stacked(path: impl AsRef<Path>) -> Result<ImageMatrix> {
    decode_netpbm(&fs::read(path)?)
}

/// Writes binary P6/P5.
pub fn write_image_stacked(path: impl AsRef<Path>, img: &ImageMatrix) -> Result<()> {
    fs::write(path, encode_netpbm(img, true))?;
    Ok(())
}

/// Samples `round(fraction * width * height)` pixel positions; each sampled
/// pixel contributes one observation per channel block, so all channels share
/// the same mask.
pub fn sample_pixels(img: &ImageMatrix, fraction: f64, rng: &mut RngState) -> Result<ObservationSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pixel fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let (w, h) = (img.width, img.height);
    let count = ((fraction * (w * h) as f64).round() as usize).max(1);
    let mut pixels = rng.sample_indices(w * h, count);
    pixels.sort_unstable();
    let mut entries = Vec::with_capacity(count * img.channels);
    for c in 0..img.channels {
        for &p in &pixels {
            let (y, x) = (p / w, p % w);
            let row = c * h + y;
            entries.push(Observation {
                row,
                col: x,
                value: img.stacked.get(row, x),
                split: Split::Train,
            });
        }
    }
    ObservationSet::new(img.channels * h, w, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p6_fixture_stacks_channels() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
        let img = decode_netpbm(&bytes).unwrap();
        assert_eq!(img.stacked.shape(), (6, 2));
        // R block rows 0..2, G rows 2..4, B rows 4..6.
        assert_eq!(img.stacked.to_row_major(), vec![1., 4., 7., 10., 2., 5., 8., 11., 3., 6., 9., 12.]);
    }

    #[test]
    fn p5_grayscale() {
        let mut bytes = b"P5 # comment\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255]);
        let img = decode_netpbm(&bytes).unwrap();
        assert_eq!((img.channels, img.stacked.shape()), (1, (1, 3)));
    }

    #[test]
    fn ascii_round_trip_and_bad_maxval() {
        let img = decode_netpbm(b"P3\n1 1\n255\n10 20 30\n").unwrap();
        assert_eq!(decode_netpbm(&encode_netpbm(&img, false)).unwrap(), img);
        assert!(matches!(decode_netpbm(b"P2\n1 1\n65535\n7\n"), Err(Error::Unsupported(_))));
        assert!(matches!(decode_netpbm(b"P4\n1 1\n"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sampling_counts_and_shared_mask() {
        let samples: Vec<u8> = (0..100 * 100 * 3).map(|i| (i % 251) as u8).collect();
        let img = ImageMatrix::from_interleaved(100, 100, 3, &samples).unwrap();
        let obs = sample_pixels(&img, 0.1, &mut RngState::new(1)).unwrap();
        assert_eq!(obs.len(), 3000);
        let all = sample_pixels(&img, 1.0, &mut RngState::new(1)).unwrap();
        assert_eq!(all.len(), 30000);
    }
}
