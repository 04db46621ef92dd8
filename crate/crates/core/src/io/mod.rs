//! Ingestion and emission: rating files, images, synthetic data, binary
//! matrices and run summaries.

mod binary;
mod image;
mod ratings;
mod summary;
mod synth;

pub use binary::{read_binary_matrix, read_binary_matrix_from, write_binary_matrix, write_binary_matrix_to};
pub use image::{decode_netpbm, encode_netpbm, load_image_stacked, sample_pixels, write_image_stacked, ImageMatrix,
    PIXEL_MAX};
pub use ratings::{
    load_ratings, load_ratings_auto, read_ratings, split_observations, split_stats, RatingFormat, RatingRecord,
    Ratings, SplitStats, RATING_MAX, RATING_MIN,
};
pub use summary::{RunSummary, BUILD_DESCRIBE};
pub use synth::{
    gaussian_product, random_sparse, sample_entries, synth_image, synth_low_rank, synth_ratings, RatingsShape,
    Spectrum, SynthLowRank,
};
