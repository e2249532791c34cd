//! `.sfun` files: a JSON document holding one low-rank sphere function.
//!
//! Complex numbers are `[re, im]` pairs. `col_coeffs` has `m` rows and `row_coeffs` has `n`
//! rows, each with `K` entries (one per term), modes ascending from `-m/2` (resp. `-n/2`).

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spherekit::fourier::CoeffVector;
use spherekit::{LowRankSphereFun, Parity};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SfunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed sfun document: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid sfun contents: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityFlag {
    Even,
    Odd,
}

impl From<Parity> for ParityFlag {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Even => ParityFlag::Even,
            Parity::Odd => ParityFlag::Odd,
        }
    }
}

impl From<ParityFlag> for Parity {
    fn from(p: ParityFlag) -> Self {
        match p {
            ParityFlag::Even => Parity::Even,
            ParityFlag::Odd => Parity::Odd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfunFile {
    pub format_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub vscale: f64,
    pub tolerance: f64,
    pub parity: Vec<ParityFlag>,
    pub d: Vec<[f64; 2]>,
    pub col_coeffs: Vec<Vec<[f64; 2]>>,
    pub row_coeffs: Vec<Vec<[f64; 2]>>,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn transpose(factors: &[CoeffVector], len: usize) -> Vec<Vec<[f64; 2]>> {
    (0..len)
        .map(|i| factors.iter().map(|f| pair(f.as_slice()[i])).collect())
        .collect()
}

impl SfunFile {
    pub fn from_fun(f: &LowRankSphereFun, tolerance: f64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            k: f.rank(),
            m: f.m(),
            n: f.n(),
            vscale: f.vscale(),
            tolerance,
            parity: f.parities().iter().map(|&p| p.into()).collect(),
            d: f.weights().iter().map(|&c| pair(c)).collect(),
            col_coeffs: transpose(f.cols(), f.m()),
            row_coeffs: transpose(f.rows(), f.n()),
        }
    }

    fn check(&self) -> Result<(), SfunError> {
        let bad = |msg: String| Err(SfunError::Invalid(msg));
        if self.format_version != FORMAT_VERSION {
            return bad(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.parity.len() != self.k || self.d.len() != self.k {
            return bad(format!(
                "K = {} but {} parity flags and {} weights",
                self.k,
                self.parity.len(),
                self.d.len()
            ));
        }
        if self.col_coeffs.len() != self.m || self.row_coeffs.len() != self.n {
            return bad(format!(
                "header says {}x{}, coefficient arrays have {} and {} rows",
                self.m,
                self.n,
                self.col_coeffs.len(),
                self.row_coeffs.len()
            ));
        }
        if let Some(r) = self
            .col_coeffs
            .iter()
            .chain(&self.row_coeffs)
            .find(|r| r.len() != self.k)
        {
            return bad(format!(
                "coefficient row with {} entries, K = {}",
                r.len(),
                self.k
            ));
        }
        Ok(())
    }

    pub fn to_fun(&self) -> Result<LowRankSphereFun, SfunError> {
        self.check()?;
        let column = |rows: &[Vec<[f64; 2]>], t: usize| -> Result<CoeffVector, SfunError> {
            CoeffVector::new(rows.iter().map(|r| complex(r[t])).collect())
                .map_err(|e| SfunError::Invalid(e.to_string()))
        };
        let cols = (0..self.k)
            .map(|t| column(&self.col_coeffs, t))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = (0..self.k)
            .map(|t| column(&self.row_coeffs, t))
            .collect::<Result<Vec<_>, _>>()?;
        LowRankSphereFun::new(
            self.m,
            self.n,
            self.d.iter().map(|&p| complex(p)).collect(),
            cols,
            rows,
            self.parity.iter().map(|&p| p.into()).collect(),
            self.vscale,
        )
        .map_err(|e| SfunError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sfun documents always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<(), SfunError> {
        fs::write(path, self.to_json() + "\n").map_err(|source| SfunError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SfunError> {
        let text = fs::read_to_string(path).map_err(|source| SfunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: SfunFile = serde_json::from_str(&text).map_err(|source| SfunError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        file.check()?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spherekit::{cart_real, construct, ConstructorConfig};

    #[test]
    fn json_round_trip_is_exact() {
        let f = construct(
            &cart_real(|x, y, z| (x * z - y.sin()).cos()),
            &ConstructorConfig::default(),
        )
        .unwrap();
        let file = SfunFile::from_fun(&f, f64::EPSILON);
        let back: SfunFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_fun().unwrap(), f);
    }

    #[test]
    fn rejects_inconsistent_sizes() {
        let f = construct(&cart_real(|_, _, z| z), &ConstructorConfig::default()).unwrap();
        let mut file = SfunFile::from_fun(&f, 1e-15);
        file.col_coeffs.pop();
        assert!(matches!(file.to_fun(), Err(SfunError::Invalid(_))));
        let mut file = SfunFile::from_fun(&f, 1e-15);
        file.format_version = 7;
        assert!(matches!(file.to_fun(), Err(SfunError::Invalid(_))));
    }
}
