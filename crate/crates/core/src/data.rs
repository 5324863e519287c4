//! Pair and metadata files, standardization, subsampling and noise injection.
//!
//! Pair files hold whitespace-separated numeric columns, one observation per
//! line. Metadata files hold six fields per line:
//!
//! ```text
//! <pair id> <cause first> <cause last> <effect first> <effect last> <weight>
//! ```
//!
//! with 1-based column indices into the pair file. Pair `k` lives in
//! `pairKKKK.txt` next to the metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::anm::MIN_SAMPLES;
use crate::seed;
use crate::{ensure_finite, mean_var, Direction, Error, PairedSample, Result, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CepMeta {
    pub pair_id: u32,
    pub cause_first_col: usize,
    pub cause_last_col: usize,
    pub effect_first_col: usize,
    pub effect_last_col: usize,
    pub weight: f64,
}

impl CepMeta {
    pub fn is_scalar(&self) -> bool {
        self.cause_first_col == self.cause_last_col && self.effect_first_col == self.effect_last_col
    }

    pub fn file_name(&self) -> String {
        pair_file_name(self.pair_id)
    }
}

pub fn pair_file_name(pair_id: u32) -> String {
    format!("pair{pair_id:04}.txt")
}

/// Parsed metadata: scalar pairs kept, multivariate pair ids skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetaListing {
    pub pairs: Vec<CepMeta>,
    pub skipped: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub pair: PairedSample,
    pub truth: Direction,
    pub weight: f64,
}

impl Problem {
    pub fn new(
        id: impl Into<String>,
        pair: PairedSample,
        truth: Direction,
        weight: f64,
    ) -> Result<Self> {
        if pair.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_SAMPLES,
                got: pair.len(),
            });
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight must lie in (0, 1], got {weight}"
            )));
        }
        Ok(Self {
            id: id.into(),
            pair,
            truth,
            weight,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_real(token: &str, path: &Path, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            path,
            line,
            format!("non-numeric token {token:?}"),
        )),
    }
}

/// Columns of a whitespace-separated pair file.
pub fn load_cep_pair(path: impl AsRef<Path>) -> Result<Vec<Series>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut columns: Vec<Series> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); tokens.len()];
        } else if tokens.len() != columns.len() {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} columns, found {}", columns.len(), tokens.len()),
            ));
        }
        for (col, tok) in columns.iter_mut().zip(&tokens) {
            col.push(parse_real(tok, path, lineno)?);
        }
    }
    if columns.is_empty() {
        return Err(Error::parse(path, 0, "empty file"));
    }
    Ok(columns)
}

pub fn load_cep_meta(path: impl AsRef<Path>) -> Result<MetaListing> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut listing = MetaListing::default();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 6 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 6 fields, found {}", tokens.len()),
            ));
        }
        let int = |k: usize| -> Result<usize> {
            // integers are sometimes written as reals ("1.0")
            let v = parse_real(tokens[k], path, lineno)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("field {} must be a positive integer", k + 1),
                ));
            }
            Ok(v as usize)
        };
        let meta = CepMeta {
            pair_id: int(0)? as u32,
            cause_first_col: int(1)?,
            cause_last_col: int(2)?,
            effect_first_col: int(3)?,
            effect_last_col: int(4)?,
            weight: parse_real(tokens[5], path, lineno)?,
        };
        if meta.cause_first_col > meta.cause_last_col
            || meta.effect_first_col > meta.effect_last_col
        {
            return Err(Error::parse(path, lineno, "column range is reversed"));
        }
        let overlap = meta.cause_first_col <= meta.effect_last_col
            && meta.effect_first_col <= meta.cause_last_col;
        if overlap {
            return Err(Error::parse(
                path,
                lineno,
                "cause and effect columns overlap",
            ));
        }
        if meta.weight.is_nan() || meta.weight <= 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("weight must be positive, got {}", meta.weight),
            ));
        }
        if meta.is_scalar() {
            listing.pairs.push(meta);
        } else {
            listing.skipped.push(meta.pair_id);
        }
    }
    Ok(listing)
}

/// Problems for every scalar pair in `meta_path`, reading pair files from
/// `dir`. The lower-numbered column becomes `x`; truth is forward when it
/// is the cause.
pub fn load_cep_corpus(
    dir: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<(Vec<Problem>, MetaListing)> {
    let dir = dir.as_ref();
    let listing = load_cep_meta(meta_path)?;
    let mut problems = Vec::with_capacity(listing.pairs.len());
    for meta in &listing.pairs {
        let path = dir.join(meta.file_name());
        let columns = load_cep_pair(&path)?;
        let (c, e) = (meta.cause_first_col, meta.effect_first_col);
        let needed = c.max(e);
        if columns.len() < needed {
            return Err(Error::parse(
                &path,
                1,
                format!(
                    "metadata references column {needed}, file has {}",
                    columns.len()
                ),
            ));
        }
        let (xi, yi, truth) = if c < e {
            (c, e, Direction::Forward)
        } else {
            (e, c, Direction::Backward)
        };
        let pair = PairedSample::new(columns[xi - 1].clone(), columns[yi - 1].clone())?;
        let id = meta.file_name().trim_end_matches(".txt").to_string();
        problems.push(
            Problem::new(id, pair, truth, meta.weight)
                .map_err(|e| Error::parse(&path, 0, e.to_string()))?,
        );
    }
    Ok((problems, listing))
}

/// Two numeric comma-separated columns with an optional header line.
pub fn load_csv_pair(path: impl AsRef<Path>) -> Result<PairedSample> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 1;
        let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 columns, found {}", record.len()),
            ));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                x.push(a);
                y.push(b);
            }
            _ if lineno == 1 => continue,
            _ => return Err(Error::parse(path, lineno, "non-numeric field")),
        }
    }
    if x.is_empty() {
        return Err(Error::parse(path, 0, "empty file"));
    }
    PairedSample::new(x, y)
}

/// Pair file text; values use the shortest round-trip representation.
pub fn format_pair(pair: &PairedSample) -> String {
    let mut out = String::with_capacity(pair.len() * 40);
    for (a, b) in pair.x.iter().zip(&pair.y) {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

pub fn format_meta(entries: &[CepMeta]) -> String {
    let mut out = String::new();
    for m in entries {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            m.pair_id,
            m.cause_first_col,
            m.cause_last_col,
            m.effect_first_col,
            m.effect_last_col,
            m.weight
        );
    }
    out
}

/// Write problems as `pairKKKK.txt` files plus a metadata file, numbering
/// pairs from 1 in slice order. Returns the metadata path.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    problems: &[Problem],
    meta_name: &str,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut metas = Vec::with_capacity(problems.len());
    for (k, p) in problems.iter().enumerate() {
        let id = k as u32 + 1;
        let (cause, effect) = match p.truth {
            Direction::Forward => (1, 2),
            Direction::Backward => (2, 1),
        };
        let meta = CepMeta {
            pair_id: id,
            cause_first_col: cause,
            cause_last_col: cause,
            effect_first_col: effect,
            effect_last_col: effect,
            weight: p.weight,
        };
        let path = dir.join(meta.file_name());
        fs::write(&path, format_pair(&p.pair)).map_err(|e| Error::io(&path, e))?;
        metas.push(meta);
    }
    let meta_path = dir.join(meta_name);
    fs::write(&meta_path, format_meta(&metas)).map_err(|e| Error::io(&meta_path, e))?;
    Ok(meta_path)
}

/// At most `n_max` rows, drawn uniformly without replacement and kept in
/// their original order.
pub fn subsample(pair: &PairedSample, n_max: usize, seed: u64) -> Result<PairedSample> {
    if n_max < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_max must be at least {MIN_SAMPLES}, got {n_max}"
        )));
    }
    let n = pair.len();
    if n <= n_max {
        return Ok(pair.clone());
    }
    let mut rng = seed::rng(seed);
    let mut rows = index::sample(&mut rng, n, n_max).into_vec();
    rows.sort_unstable();
    Ok(PairedSample {
        x: rows.iter().map(|&i| pair.x[i]).collect(),
        y: rows.iter().map(|&i| pair.y[i]).collect(),
    })
}

/// `s + ε` with `ε ~ N(0, var(s)/10^(snr/10))`. The noise direction depends
/// only on `seed`, so different SNRs scale the same draw.
pub fn add_awgn(s: &[f64], snr_db: f64, seed: u64) -> Result<Series> {
    ensure_finite(s)?;
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "SNR must be finite, got {snr_db}"
        )));
    }
    if s.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (_, power) = mean_var(s);
    if power <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = seed::rng(seed);
    Ok(s.iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + std * z
        })
        .collect())
}

/// Zero mean, unit (n-denominator) standard deviation. Returns the series
/// with the shift and scale that invert it: `s = z·scale + shift`.
pub fn standardize(s: &[f64]) -> Result<(Series, f64, f64)> {
    if s.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    ensure_finite(s)?;
    let (mean, var) = mean_var(s);
    if var <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let scale = var.sqrt();
    Ok((s.iter().map(|v| (v - mean) / scale).collect(), mean, scale))
}
