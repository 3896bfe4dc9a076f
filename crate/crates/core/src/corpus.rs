//! Labeled URL corpus: CSV ingestion, byte vocabulary, fixed-length encoding
//! and reproducible stratified splits.

use std::fmt;
use std::fs::File;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default fixed sequence length.
pub const DEFAULT_MAX_LEN: usize = 150;

/// Default fraction of each class held out for testing.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is missing the `{0}` column")]
    MissingColumn(&'static str),
    #[error("row {row}: missing `{field}` field")]
    MissingField { row: u64, field: &'static str },
    #[error("row {row}: UnknownLabel {label:?}")]
    UnknownLabel { row: u64, label: String },
    #[error("unknown class label {0:?}")]
    BadLabel(String),
    #[error("url is empty")]
    EmptyUrl,
    #[error("max_len must be at least 1")]
    ZeroMaxLen,
    #[error("test_fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("class {class} has {count} record(s); at least 2 are needed to split")]
    ClassTooSmall { class: UrlClass, count: usize },
    #[error("cannot draw {wanted} records from a corpus of {available}")]
    SampleTooLarge { wanted: usize, available: usize },
}

/// The four URL categories with their stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrlClass {
    Benign = 0,
    Phishing = 1,
    Defacement = 2,
    Malware = 3,
}

impl UrlClass {
    pub const COUNT: usize = 4;
    pub const ALL: [UrlClass; 4] = [
        UrlClass::Benign,
        UrlClass::Phishing,
        UrlClass::Defacement,
        UrlClass::Malware,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    /// Lowercase dataset label, also used on the wire.
    pub fn name(self) -> &'static str {
        match self {
            UrlClass::Benign => "benign",
            UrlClass::Phishing => "phishing",
            UrlClass::Defacement => "defacement",
            UrlClass::Malware => "malware",
        }
    }
}

impl fmt::Display for UrlClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UrlClass {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CorpusError::BadLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlRecord {
    pub url: String,
    pub label: UrlClass,
}

impl UrlRecord {
    pub fn new(url: impl Into<String>, label: UrlClass) -> Result<Self, CorpusError> {
        let url = url.into();
        if url.trim().is_empty() {
            return Err(CorpusError::EmptyUrl);
        }
        Ok(Self { url, label })
    }
}

/// Reads a `url,type` CSV with a header row. Row order is preserved.
///
/// Row numbers in errors are 1-based file line numbers, so the header is
/// line 1 and the first data row is line 2.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<UrlRecord>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<UrlRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let url_col = headers
        .iter()
        .position(|h| h.trim() == "url")
        .ok_or(CorpusError::MissingColumn("url"))?;
    let type_col = headers
        .iter()
        .position(|h| h.trim() == "type")
        .ok_or(CorpusError::MissingColumn("type"))?;

    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let row = record.position().map_or(0, |p| p.line());
        let url = record
            .get(url_col)
            .filter(|u| !u.trim().is_empty())
            .ok_or(CorpusError::MissingField { row, field: "url" })?;
        let label = record
            .get(type_col)
            .ok_or(CorpusError::MissingField { row, field: "type" })?;
        let label = label.parse().map_err(|_| CorpusError::UnknownLabel {
            row,
            label: label.to_string(),
        })?;
        out.push(UrlRecord {
            url: url.to_string(),
            label,
        });
    }
    Ok(out)
}

/// Writes records back out in the same `url,type` schema.
pub fn write_csv(path: impl AsRef<Path>, records: &[UrlRecord]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["url", "type"])?;
    for r in records {
        w.write_record([r.url.as_str(), r.label.name()])?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Byte → index map with reserved padding and out-of-vocabulary slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    table: [Option<u32>; 256],
    size: u32,
}

impl Vocabulary {
    pub const PAD: u32 = 0;
    pub const OOV: u32 = 1;

    /// Builds a vocabulary from explicit `(byte, index)` entries.
    ///
    /// Rejects entries that use a reserved index, fall outside `[0, size)`,
    /// repeat a byte, or share an index with another byte.
    pub fn from_entries(
        size: u32,
        entries: impl IntoIterator<Item = (u8, u32)>,
    ) -> Result<Self, String> {
        if size < 2 {
            return Err(format!("vocabulary size {size} leaves no room for pad/oov"));
        }
        let mut table = [None; 256];
        let mut used = vec![false; size as usize];
        for (byte, index) in entries {
            if index <= Self::OOV || index >= size {
                return Err(format!("byte {byte} maps to invalid index {index}"));
            }
            if table[byte as usize].is_some() {
                return Err(format!("byte {byte} listed twice"));
            }
            if std::mem::replace(&mut used[index as usize], true) {
                return Err(format!("index {index} assigned to more than one byte"));
            }
            table[byte as usize] = Some(index);
        }
        Ok(Self { table, size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn index_of(&self, byte: u8) -> Option<u32> {
        self.table[byte as usize]
    }

    /// Only single-byte (ASCII) characters can be in the vocabulary.
    pub fn index_of_char(&self, ch: char) -> Option<u32> {
        u8::try_from(ch).ok().and_then(|b| self.index_of(b))
    }

    pub fn encode_byte(&self, byte: u8) -> u32 {
        self.index_of(byte).unwrap_or(Self::OOV)
    }

    pub fn byte_at(&self, index: u32) -> Option<u8> {
        (0..=255u8).find(|&b| self.table[b as usize] == Some(index))
    }

    /// Real entries in byte order.
    pub fn entries(&self) -> impl Iterator<Item = (u8, u32)> + '_ {
        (0..=255u8).filter_map(move |b| self.table[b as usize].map(|i| (b, i)))
    }

    pub fn len(&self) -> usize {
        self.entries().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Printable ASCII (32..=126) at indices 2..=96 in code order; size 97.
pub fn default_vocabulary() -> Vocabulary {
    Vocabulary::from_entries(97, (32u8..=126).map(|b| (b, u32::from(b) - 30)))
        .expect("static layout is valid")
}

impl Default for Vocabulary {
    fn default() -> Self {
        default_vocabulary()
    }
}

/// Fixed-length, post-padded index sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub indices: Vec<u32>,
    pub valid_len: usize,
}

impl EncodedSequence {
    pub fn valid(&self) -> &[u32] {
        &self.indices[..self.valid_len]
    }
}

/// Encodes the URL byte by byte, truncating the tail past `max_len` and
/// padding the remainder with [`Vocabulary::PAD`].
pub fn encode_url(
    url: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedSequence, CorpusError> {
    if url.is_empty() {
        return Err(CorpusError::EmptyUrl);
    }
    if max_len == 0 {
        return Err(CorpusError::ZeroMaxLen);
    }
    let bytes = url.as_bytes();
    let valid_len = bytes.len().min(max_len);
    let mut indices = vec![Vocabulary::PAD; max_len];
    for (slot, &b) in indices.iter_mut().zip(&bytes[..valid_len]) {
        *slot = vocab.encode_byte(b);
    }
    Ok(EncodedSequence { indices, valid_len })
}

/// Maps the non-pad prefix back to text; OOV slots become U+FFFD.
pub fn decode_sequence(seq: &EncodedSequence, vocab: &Vocabulary) -> String {
    seq.valid()
        .iter()
        .map(|&i| vocab.byte_at(i).map_or('\u{FFFD}', char::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: DEFAULT_TEST_FRACTION,
            seed: 0,
        }
    }
}

/// Per-class record counts, indexed by class code.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts(pub [usize; UrlClass::COUNT]);

impl ClassCounts {
    pub fn get(&self, class: UrlClass) -> usize {
        self.0[class.code()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = UrlClass::ALL
            .iter()
            .map(|c| format!("{c}={}", self.get(*c)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn class_distribution(records: &[UrlRecord]) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for r in records {
        counts.0[r.label.code()] += 1;
    }
    counts
}

fn indices_by_class(records: &[UrlRecord]) -> [Vec<usize>; UrlClass::COUNT] {
    let mut by_class: [Vec<usize>; UrlClass::COUNT] = Default::default();
    for (i, r) in records.iter().enumerate() {
        by_class[r.label.code()].push(i);
    }
    by_class
}

fn select(records: &[UrlRecord], mask: &[bool], want: bool) -> Vec<UrlRecord> {
    records
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m == want)
        .map(|(r, _)| r.clone())
        .collect()
}

/// Splits records into `(train, test)` holding out `round(n_c * fraction)`
/// records of each class `c`.
///
/// Both outputs keep the input's relative order. Classes absent from the
/// input are skipped; a class with exactly one record is an error.
pub fn stratified_split(
    records: &[UrlRecord],
    spec: &SplitSpec,
) -> Result<(Vec<UrlRecord>, Vec<UrlRecord>), CorpusError> {
    let frac = spec.test_fraction;
    if !(frac > 0.0 && frac < 1.0) {
        return Err(CorpusError::BadFraction(frac));
    }
    let by_class = indices_by_class(records);
    for class in UrlClass::ALL {
        let count = by_class[class.code()].len();
        if count == 1 {
            return Err(CorpusError::ClassTooSmall { class, count });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_test = vec![false; records.len()];
    for mut members in by_class {
        let n_test = (members.len() as f64 * frac).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    Ok((
        select(records, &is_test, false),
        select(records, &is_test, true),
    ))
}

/// Draws `n` records with class proportions preserved (largest-remainder
/// quotas), keeping input order.
pub fn stratified_subsample(
    records: &[UrlRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<UrlRecord>, CorpusError> {
    if n > records.len() {
        return Err(CorpusError::SampleTooLarge {
            wanted: n,
            available: records.len(),
        });
    }
    let by_class = indices_by_class(records);
    let total = records.len().max(1);
    let mut quotas = [0usize; UrlClass::COUNT];
    let mut remainders = Vec::with_capacity(UrlClass::COUNT);
    for (c, members) in by_class.iter().enumerate() {
        let exact = members.len() * n;
        quotas[c] = exact / total;
        remainders.push((exact % total, c));
    }
    let short = n - quotas.iter().sum::<usize>();
    // largest remainder first, lower class code on ties
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(short) {
        quotas[c] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; records.len()];
    for (c, mut members) in by_class.into_iter().enumerate() {
        members.shuffle(&mut rng);
        for &i in &members[..quotas[c]] {
            keep[i] = true;
        }
    }
    Ok(select(records, &keep, true))
}
