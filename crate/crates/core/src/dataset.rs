//! Model corpus: pretraining metadata, proxy metrics and post-SFT scores for
//! each pretrained checkpoint.
//!
//! The canonical 50-model corpus is embedded in the crate as a CSV asset and
//! parsed through the same path as user-supplied files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pairing::TaskId;

/// Raw bytes of the canonical corpus shipped with the crate.
pub const CANONICAL_CSV: &str = include_str!("../data/canonical.csv");

/// Exact header required of every corpus CSV.
pub const CSV_HEADER: [&str; 14] = [
    "id",
    "objective",
    "data_config",
    "learning_rate",
    "domain_tagging",
    "length_filter",
    "ppl_clm",
    "ppl_sc",
    "kshot_cms",
    "kshot_rag",
    "kshot_cbqa",
    "sft_cms",
    "sft_rag",
    "sft_cbqa",
];

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

string_enum!(
    /// Pretraining objective.
    Objective {
        Clm => "clm",
        Sc => "sc",
        Plm => "plm",
        ScClm => "sc_clm",
        Ul2 => "ul2",
        Ul2r => "ul2r",
        Ul2rClm => "ul2r_clm",
    }
);

string_enum!(
    /// Domain re-weighting variant of the pretraining mixture.
    DataConfig {
        Dc0 => "dc0",
        Dc1 => "dc1",
        Dc2 => "dc2",
        Dc3 => "dc3",
        Dc4 => "dc4",
        Dc5 => "dc5",
    }
);

string_enum!(
    /// Token-length filtering of the pretraining corpus.
    LengthFilter {
        All => "all",
        Mid25to75 => "mid",
        Top75to100 => "max",
    }
);

string_enum!(
    /// One of the five pre-training proxies, in feature-layout order.
    Proxy {
        PplClm => "ppl_clm",
        PplSc => "ppl_sc",
        KshotCms => "kshot_cms",
        KshotRag => "kshot_rag",
        KshotCbqa => "kshot_cbqa",
    }
);

impl Proxy {
    /// Position of the proxy in [`Proxy::ALL`] and in the feature layout.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Display label used in tables and figures.
    pub fn label(self) -> &'static str {
        match self {
            Proxy::PplClm => "PPL-CLM",
            Proxy::PplSc => "PPL-SC",
            Proxy::KshotCms => "Kshot-CMS",
            Proxy::KshotRag => "Kshot-RAG",
            Proxy::KshotCbqa => "Kshot-CBQA",
        }
    }

    pub fn is_perplexity(self) -> bool {
        matches!(self, Proxy::PplClm | Proxy::PplSc)
    }
}

string_enum!(
    /// Column scaling applied to the proxy values of a [`ModelSet`].
    Normalization {
        Raw => "raw",
        MinMax => "minmax",
        ZScore => "zscore",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub objective: Objective,
    pub data_config: DataConfig,
    pub learning_rate: f64,
    pub domain_tagging: bool,
    pub length_filter: LengthFilter,
}

/// Proxy metrics of one model. Perplexities are stored inverted (`1/PPL`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyVector {
    pub ppl_clm: f64,
    pub ppl_sc: f64,
    pub kshot_cms: f64,
    pub kshot_rag: f64,
    pub kshot_cbqa: f64,
}

impl ProxyVector {
    pub fn get(&self, proxy: Proxy) -> f64 {
        match proxy {
            Proxy::PplClm => self.ppl_clm,
            Proxy::PplSc => self.ppl_sc,
            Proxy::KshotCms => self.kshot_cms,
            Proxy::KshotRag => self.kshot_rag,
            Proxy::KshotCbqa => self.kshot_cbqa,
        }
    }

    fn get_mut(&mut self, proxy: Proxy) -> &mut f64 {
        match proxy {
            Proxy::PplClm => &mut self.ppl_clm,
            Proxy::PplSc => &mut self.ppl_sc,
            Proxy::KshotCms => &mut self.kshot_cms,
            Proxy::KshotRag => &mut self.kshot_rag,
            Proxy::KshotCbqa => &mut self.kshot_cbqa,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.ppl_clm,
            self.ppl_sc,
            self.kshot_cms,
            self.kshot_rag,
            self.kshot_cbqa,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SftVector {
    pub sft_cms: f64,
    pub sft_rag: f64,
    pub sft_cbqa: f64,
}

impl SftVector {
    pub fn get(&self, task: TaskId) -> f64 {
        match task {
            TaskId::SftCms => self.sft_cms,
            TaskId::SftRag => self.sft_rag,
            TaskId::SftCbqa => self.sft_cbqa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: u32,
    pub config: PretrainConfig,
    pub proxies: ProxyVector,
    pub sft: SftVector,
}

/// How perplexity columns are encoded in an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerplexityForm {
    /// Already inverted, `1/PPL` in (0, 1].
    #[default]
    Inverted,
    /// Raw perplexities (≥ 1); inverted during parsing.
    Raw,
}

/// An immutable, validated collection of model records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    records: Vec<ModelRecord>,
    normalization: Normalization,
}

impl ModelSet {
    /// Builds a raw set, checking every record against the value ranges.
    pub fn new(records: Vec<ModelRecord>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Domain(format!(
                "a model set needs at least 2 records, got {}",
                records.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            validate_record(row, r)?;
            if !seen.insert(r.id) {
                return Err(Error::DuplicateId { row, id: r.id });
            }
        }
        Ok(Self {
            records,
            normalization: Normalization::Raw,
        })
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn ids(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.id).collect()
    }

    pub fn get(&self, id: u32) -> Result<&ModelRecord> {
        self.records
            .iter()
            .find(|r| r.id == id)
            .ok_or(Error::UnknownModel(id))
    }

    pub fn proxy_column(&self, proxy: Proxy) -> Vec<f64> {
        self.records.iter().map(|r| r.proxies.get(proxy)).collect()
    }

    /// Records whose ids appear in `ids`, kept in the original set order.
    pub fn subset(&self, ids: &[u32]) -> Result<ModelSet> {
        for &id in ids {
            self.get(id)?;
        }
        let records: Vec<_> = self
            .records
            .iter()
            .filter(|r| ids.contains(&r.id))
            .cloned()
            .collect();
        if records.len() < 2 {
            return Err(Error::Domain("subset needs at least 2 records".into()));
        }
        Ok(ModelSet {
            records,
            normalization: self.normalization,
        })
    }

    /// Serializes the set in the documented CSV schema.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.records {
            let c = &r.config;
            let p = &r.proxies;
            let s = &r.sft;
            out.push_str(&format!(
                "{},{},{},{:e},{},{},{},{},{},{},{},{},{},{}\n",
                r.id,
                c.objective,
                c.data_config,
                c.learning_rate,
                c.domain_tagging,
                c.length_filter,
                p.ppl_clm,
                p.ppl_sc,
                p.kshot_cms,
                p.kshot_rag,
                p.kshot_cbqa,
                s.sft_cms,
                s.sft_rag,
                s.sft_cbqa
            ));
        }
        out
    }

    /// Hex SHA-256 of [`ModelSet::to_csv`].
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }
}

fn validate_record(row: usize, r: &ModelRecord) -> Result<()> {
    let err = |column: &str, message: String| Error::Validation {
        row,
        column: column.to_string(),
        message,
    };
    if r.id == 0 {
        return Err(err("id", "id must be a positive integer".into()));
    }
    let lr = r.config.learning_rate;
    if !(lr.is_finite() && lr > 0.0) {
        return Err(err("learning_rate", format!("{lr} is not > 0")));
    }
    for proxy in Proxy::ALL {
        let v = r.proxies.get(*proxy);
        let ok = if proxy.is_perplexity() {
            v.is_finite() && v > 0.0 && v <= 1.0
        } else {
            v.is_finite() && (0.0..=100.0).contains(&v)
        };
        if !ok {
            let range = if proxy.is_perplexity() {
                "(0, 1]"
            } else {
                "[0, 100]"
            };
            return Err(err(proxy.as_str(), format!("{v} outside {range}")));
        }
    }
    for task in TaskId::ALL {
        let v = r.sft.get(*task);
        if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
            return Err(err(task.as_str(), format!("{v} outside [0, 100]")));
        }
    }
    Ok(())
}

/// Returns `1 / raw_ppl`.
pub fn invert_perplexity(raw_ppl: f64) -> Result<f64> {
    if !raw_ppl.is_finite() || raw_ppl < 1.0 {
        return Err(Error::Domain(format!(
            "perplexity must be a finite value >= 1, got {raw_ppl}"
        )));
    }
    Ok(1.0 / raw_ppl)
}

/// The embedded 50-model corpus.
pub fn load_canonical() -> Result<ModelSet> {
    parse_csv_str(CANONICAL_CSV, PerplexityForm::Inverted)
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<ModelSet> {
    parse_csv_with(path, PerplexityForm::Inverted)
}

pub fn parse_csv_with(path: impl AsRef<Path>, form: PerplexityForm) -> Result<ModelSet> {
    let text = std::fs::read_to_string(path)?;
    parse_csv_str(&text, form)
}

pub fn parse_csv_str(text: &str, form: PerplexityForm) -> Result<ModelSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != CSV_HEADER {
        return Err(Error::Schema(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            found.join(",")
        )));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        records.push(parse_row(row_no, &row, form)?);
    }
    ModelSet::new(records)
}

fn parse_row(row: usize, fields: &csv::StringRecord, form: PerplexityForm) -> Result<ModelRecord> {
    if fields.len() != CSV_HEADER.len() {
        return Err(Error::Parse {
            row,
            message: format!(
                "expected {} fields, found {}",
                CSV_HEADER.len(),
                fields.len()
            ),
        });
    }
    let field = |col: usize| &fields[col];
    let invalid = |col: usize, message: String| Error::Validation {
        row,
        column: CSV_HEADER[col].to_string(),
        message,
    };
    let parse_enum = |col: usize| -> Result<_> { Ok(field(col).to_string()) };
    let number = |col: usize| -> Result<f64> {
        field(col)
            .parse::<f64>()
            .map_err(|_| invalid(col, format!("`{}` is not numeric", field(col))))
    };

    let id = field(0)
        .parse::<u32>()
        .map_err(|_| invalid(0, format!("`{}` is not a positive integer", field(0))))?;
    let objective = parse_enum(1)?
        .parse::<Objective>()
        .map_err(|m| invalid(1, m))?;
    let data_config = parse_enum(2)?
        .parse::<DataConfig>()
        .map_err(|m| invalid(2, m))?;
    let learning_rate = number(3)?;
    let domain_tagging = match field(4).to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(invalid(4, format!("`{other}` is not true/false"))),
    };
    let length_filter = parse_enum(5)?
        .parse::<LengthFilter>()
        .map_err(|m| invalid(5, m))?;

    let mut ppl = [number(6)?, number(7)?];
    if form == PerplexityForm::Raw {
        for (k, v) in ppl.iter_mut().enumerate() {
            *v = invert_perplexity(*v).map_err(|e| invalid(6 + k, e.to_string()))?;
        }
    }

    Ok(ModelRecord {
        id,
        config: PretrainConfig {
            objective,
            data_config,
            learning_rate,
            domain_tagging,
            length_filter,
        },
        proxies: ProxyVector {
            ppl_clm: ppl[0],
            ppl_sc: ppl[1],
            kshot_cms: number(8)?,
            kshot_rag: number(9)?,
            kshot_cbqa: number(10)?,
        },
        sft: SftVector {
            sft_cms: number(11)?,
            sft_rag: number(12)?,
            sft_cbqa: number(13)?,
        },
    })
}

/// Scales every proxy column independently; SFT scores are left untouched.
///
/// MinMax maps each column onto [0, 1] (a constant column maps to 0.5).
/// ZScore centres each column and divides by its population standard
/// deviation (a constant column maps to 0).
pub fn normalize_proxies(set: &ModelSet, scheme: Normalization) -> ModelSet {
    let mut records = set.records.clone();
    if scheme != Normalization::Raw {
        for proxy in Proxy::ALL {
            let column = set.proxy_column(*proxy);
            let scaled = scale_column(&column, scheme);
            for (r, v) in records.iter_mut().zip(scaled) {
                *r.proxies.get_mut(*proxy) = v;
            }
        }
    }
    ModelSet {
        records,
        normalization: scheme,
    }
}

/// Applies one normalization scheme to a single column.
pub fn scale_column(column: &[f64], scheme: Normalization) -> Vec<f64> {
    match scheme {
        Normalization::Raw => column.to_vec(),
        Normalization::MinMax => {
            let min = column.iter().copied().fold(f64::INFINITY, f64::min);
            let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = max - min;
            column
                .iter()
                .map(|v| if span > 0.0 { (v - min) / span } else { 0.5 })
                .collect()
        }
        Normalization::ZScore => {
            let n = column.len() as f64;
            let mean = column.iter().sum::<f64>() / n;
            let sd = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            column
                .iter()
                .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
                .collect()
        }
    }
}
