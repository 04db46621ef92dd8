use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RngState;
use crate::sparse::{ColdStart, ObservationSet, Split};

pub const RATING_MIN: f64 = 0.5;
pub const RATING_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingFormat {
    /// `user,item,rating[,timestamp]`, optional header line.
    CsvComma,
    /// `user<TAB>item<TAB>rating[<TAB>timestamp]` (ml-100k `u.data`).
    Tsv,
    /// `user::item::rating[::timestamp]` (ml-1m / ml-10m).
    DoubleColon,
}

impl RatingFormat {
    fn separator(self) -> &'static str {
        match self {
            RatingFormat::CsvComma => ",",
            RatingFormat::Tsv => "\t",
            RatingFormat::DoubleColon => "::",
        }
    }

    /// Guesses the format from a sample line.
    pub fn detect(line: &str) -> RatingFormat {
        if line.contains("::") {
            RatingFormat::DoubleColon
        } else if line.contains('\t') {
            RatingFormat::Tsv
        } else {
            RatingFormat::CsvComma
        }
    }
}

impl std::str::FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" | "csv-comma" => Ok(RatingFormat::CsvComma),
            "tsv" => Ok(RatingFormat::Tsv),
            "double-colon" | "dat" => Ok(RatingFormat::DoubleColon),
            other => Err(Error::InvalidParameter(format!(
                "unknown rating format {other:?} (expected csv, tsv or double-colon)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRecord {
    pub user: u64,
    pub item: u64,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Parsed rating file: observations on contiguous indices plus the maps back
/// to the file's ids (`user_ids[row]`, `item_ids[col]`).
#[derive(Debug, Clone)]
pub struct Ratings {
    pub observations: ObservationSet,
    pub user_ids: Vec<u64>,
    pub item_ids: Vec<u64>,
    /// Repeated `(user, item)` pairs resolved last-wins.
    pub duplicates: usize,
    /// Compensated sum of every rating read, duplicates included.
    pub file_sum: f64,
    pub records: usize,
}

fn parse_line(line: &str, format: RatingFormat, lineno: usize) -> Result<RatingRecord> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let fields: Vec<&str> = line.split(format.separator()).map(str::trim).collect();
    if fields.len() < 3 {
        return Err(err(format!("expected at least 3 fields, found {}", fields.len())));
    }
    let user = fields[0]
        .parse::<u64>()
        .map_err(|_| err(format!("bad user id {:?}", fields[0])))?;
    let item = fields[1]
        .parse::<u64>()
        .map_err(|_| err(format!("bad item id {:?}", fields[1])))?;
    let rating = fields[2]
        .parse::<f64>()
        .map_err(|_| err(format!("bad rating {:?}", fields[2])))?;
    if !(RATING_MIN..=RATING_MAX).contains(&rating) {
        return Err(err(format!(
            "rating {rating} outside [{RATING_MIN}, {RATING_MAX}]"
        )));
    }
    let timestamp = match fields.get(3) {
        Some(t) if !t.is_empty() => Some(t.parse::<i64>().map_err(|_| err(format!("bad timestamp {t:?}")))?),
        _ => None,
    };
    Ok(RatingRecord {
        user,
        item,
        rating,
        timestamp,
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn load_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<Ratings> {
    read_ratings(File::open(path)?, format)
}

/// Reads ratings, detecting the format from the first data line.
pub fn load_ratings_auto(path: impl AsRef<Path>) -> Result<Ratings> {
    let mut first = String::new();
    BufReader::new(File::open(path.as_ref())?).read_line(&mut first)?;
    load_ratings(path, RatingFormat::detect(&first))
}

pub fn read_ratings(src: impl Read, format: RatingFormat) -> Result<Ratings> {
    let mut records = Vec::new();
    let mut sum = CompensatedSum::default();
    for (idx, line) in BufReader::new(src).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match parse_line(t, format, lineno) {
            Ok(r) => {
                sum.add(r.rating);
                records.push(r);
            }
            // A non-numeric first line of a CSV file is its header.
            Err(_) if lineno == 1 && format == RatingFormat::CsvComma && t.chars().any(|c| c.is_alphabetic()) => {}
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(Error::Empty("rating file has no records".into()));
    }
    let index = |ids: BTreeMap<u64, usize>| -> (BTreeMap<u64, usize>, Vec<u64>) {
        let list: Vec<u64> = ids.keys().copied().collect();
        let map = list.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        (map, list)
    };
    let (umap, user_ids) = index(records.iter().map(|r| (r.user, 0)).collect());
    let (imap, item_ids) = index(records.iter().map(|r| (r.item, 0)).collect());
    let triplets: Vec<(usize, usize, f64)> = records
        .iter()
        .map(|r| (umap[&r.user], imap[&r.item], r.rating))
        .collect();
    let (observations, duplicates) =
        ObservationSet::from_triplets_last_wins(user_ids.len(), item_ids.len(), &triplets)?;
    Ok(Ratings {
        observations,
        user_ids,
        item_ids,
        duplicates,
        file_sum: sum.value(),
        records: records.len(),
    })
}

/// Uniform random train/test split without replacement:
/// `round(fraction * len)` entries are tagged train, the rest test.
pub fn split_observations(obs: &ObservationSet, train_fraction: f64, rng: &mut RngState) -> Result<ObservationSet> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = obs.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} of {n} observations leaves an empty split"
        )));
    }
    let mut tags = vec![Split::Test; n];
    for i in rng.sample_indices(n, n_train) {
        tags[i] = Split::Train;
    }
    obs.with_splits(&tags)
}

/// Split summary for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub train: usize,
    pub test: usize,
    pub cold_start: ColdStart,
}

pub fn split_stats(obs: &ObservationSet) -> SplitStats {
    SplitStats {
        train: obs.train_len(),
        test: obs.test_len(),
        cold_start: obs.cold_start_counts(),
    }
}
