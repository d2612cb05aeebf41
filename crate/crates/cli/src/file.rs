//! JSON system description, version 1.

use serde::{Deserialize, Serialize};

use shinf::linalg::RMat;
use shinf::{Occurrence, SystemData, Target, UncertainDelaySystem, UncertaintyBlock};

pub const VERSION: u32 = 1;

/// Row-major matrix as an array of rows.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub delays: Vec<f64>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Rows>,
    #[serde(rename = "A")]
    pub a: Vec<Rows>,
    #[serde(rename = "B")]
    pub b: Vec<Rows>,
    #[serde(rename = "C")]
    pub c: Vec<Rows>,
    #[serde(rename = "D")]
    pub d: Vec<Rows>,
    #[serde(default)]
    pub uncertainties: Vec<BlockFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_bounds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub bound: f64,
    pub rows: usize,
    pub cols: usize,
    pub occurrences: Vec<OccurrenceFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccurrenceFile {
    pub target: String,
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "H")]
    pub h: Rows,
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: cannot read: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: at `{key}`: {message}")]
    Syntax { path: String, line: usize, column: usize, key: String, message: String },
    #[error("{path}: at `{key}`: {message}")]
    Content { path: String, key: String, message: String },
}

fn content(path: &str, key: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError::Content { path: path.into(), key: key.into(), message: message.into() }
}

fn to_matrix(path: &str, key: &str, rows: &Rows, nr: usize, nc: usize) -> Result<RMat, FileError> {
    // An empty row list stands for any matrix without entries.
    if nr * nc == 0 && rows.iter().all(|r| r.is_empty()) {
        return Ok(RMat::zeros(nr, nc));
    }
    if rows.len() != nr {
        return Err(content(path, key, format!("expected {nr} rows, found {}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != nc {
            return Err(content(path, format!("{key}[{i}]"), format!("expected {nc} columns, found {}", r.len())));
        }
    }
    Ok(RMat::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn from_matrix(m: &RMat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl SystemFile {
    /// Parses JSON text; errors carry the line, column and key path.
    pub fn parse(path: &str, text: &str) -> Result<Self, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            FileError::Syntax { path: path.into(), line: inner.line(), column: inner.column(), key, message: inner.to_string() }
        })
    }

    pub fn read(path: &str) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.into(), source })?;
        Self::parse(path, &text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn to_system(&self, path: &str) -> Result<UncertainDelaySystem, FileError> {
        if self.version != VERSION {
            return Err(content(path, "version", format!("unsupported version {}, expected {VERSION}", self.version)));
        }
        let (n, m, p, k) = (self.n, self.m, self.p, self.k);
        if self.delays.len() != k {
            return Err(content(path, "delays", format!("expected K = {k} delays, found {}", self.delays.len())));
        }
        let family = |key: &str, mats: &[Rows], nr: usize, nc: usize| -> Result<Vec<RMat>, FileError> {
            if mats.len() != k + 1 {
                return Err(content(path, key, format!("expected K + 1 = {} matrices, found {}", k + 1, mats.len())));
            }
            mats.iter()
                .enumerate()
                .map(|(i, r)| to_matrix(path, &format!("{key}[{i}]"), r, nr, nc))
                .collect()
        };
        let a = family("A", &self.a, n, n)?;
        let b = family("B", &self.b, n, m)?;
        let c = family("C", &self.c, p, n)?;
        let d = family("D", &self.d, p, m)?;
        let e = self.e.as_ref().map(|r| to_matrix(path, "E", r, n, n)).transpose()?;
        let mut blocks = Vec::with_capacity(self.uncertainties.len());
        for (l, blk) in self.uncertainties.iter().enumerate() {
            let mut occurrences = Vec::with_capacity(blk.occurrences.len());
            for (s, occ) in blk.occurrences.iter().enumerate() {
                let key = format!("uncertainties[{l}].occurrences[{s}]");
                let target: Target =
                    occ.target.parse().map_err(|e: shinf::Error| content(path, format!("{key}.target"), e.to_string()))?;
                if target.index > k {
                    return Err(content(path, format!("{key}.target"), format!("index {} exceeds K = {k}", target.index)));
                }
                let (tr, tc) = match target.family {
                    shinf::Family::A => (n, n),
                    shinf::Family::B => (n, m),
                    shinf::Family::C => (p, n),
                    shinf::Family::D => (p, m),
                };
                let g = to_matrix(path, &format!("{key}.G"), &occ.g, tr, blk.rows)?;
                let h = to_matrix(path, &format!("{key}.H"), &occ.h, blk.cols, tc)?;
                occurrences.push(Occurrence { target, g, h });
            }
            blocks.push(UncertaintyBlock { bound: blk.bound, rows: blk.rows, cols: blk.cols, occurrences });
        }
        let data = SystemData { delays: self.delays.clone(), e, a, b, c, d, blocks, delay_bounds: self.delay_bounds.clone() };
        UncertainDelaySystem::new(data).map_err(|e| content(path, "", e.to_string()))
    }

    pub fn from_system(system: &UncertainDelaySystem) -> Self {
        let data = system.to_data();
        SystemFile {
            version: VERSION,
            n: system.n(),
            m: system.m(),
            p: system.p(),
            k: system.k(),
            delays: data.delays.clone(),
            e: data.e.as_ref().map(from_matrix),
            a: data.a.iter().map(from_matrix).collect(),
            b: data.b.iter().map(from_matrix).collect(),
            c: data.c.iter().map(from_matrix).collect(),
            d: data.d.iter().map(from_matrix).collect(),
            uncertainties: data
                .blocks
                .iter()
                .map(|b| BlockFile {
                    bound: b.bound,
                    rows: b.rows,
                    cols: b.cols,
                    occurrences: b
                        .occurrences
                        .iter()
                        .map(|o| OccurrenceFile { target: o.target.to_string(), g: from_matrix(&o.g), h: from_matrix(&o.h) })
                        .collect(),
                })
                .collect(),
            delay_bounds: data.delay_bounds.clone().filter(|b| b.iter().any(|x| *x != 0.0)),
        }
    }
}
