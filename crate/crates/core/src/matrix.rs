//! Dense spreading matrices and their on-disk formats.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | field                                       |
//! |--------|------|---------------------------------------------|
//! | 0      | 4    | magic `b"GSPM"`                             |
//! | 4      | 4    | `M` (rows), u32                             |
//! | 8      | 4    | `N` (columns), u32                          |
//! | 12     | 4    | family tag: 0 golay, 1 zc, 2 bipolar, 3 gaussian |
//! | 16     | 16·M·N | column-major `(re, im)` pairs of f64       |

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::Permutation;

pub const MAGIC: [u8; 4] = *b"GSPM";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Golay,
    Zc,
    Bipolar,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Golay, Family::Zc, Family::Bipolar, Family::Gaussian];

    pub fn tag(self) -> u32 {
        match self {
            Family::Golay => 0,
            Family::Zc => 1,
            Family::Bipolar => 2,
            Family::Gaussian => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown family tag {tag}")))
    }

    /// Families whose entries are `±1/√M`, for which exact integer inner
    /// products are available.
    pub fn is_binary(self) -> bool {
        matches!(self, Family::Golay | Family::Bipolar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Golay => "golay",
            Family::Zc => "zc",
            Family::Bipolar => "bipolar",
            Family::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "golay" => Ok(Family::Golay),
            "zc" | "zadoff-chu" => Ok(Family::Zc),
            "bipolar" => Ok(Family::Bipolar),
            "gaussian" => Ok(Family::Gaussian),
            other => Err(Error::Config(format!("unknown family {other:?}"))),
        }
    }
}

/// Construction parameters recorded alongside a matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Golay {
        permutations: Vec<Permutation>,
    },
    Zc {
        length: usize,
        roots: Vec<usize>,
    },
    Random {
        seed: u64,
    },
    /// Loaded from a file; construction parameters unknown.
    Imported,
}

/// `M × N` complex matrix stored column-major, one spreading sequence per column.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    family: Family,
    provenance: Provenance,
}

impl SpreadingMatrix {
    pub fn from_columns(
        rows: usize,
        cols: usize,
        data: Vec<Complex64>,
        family: Family,
        provenance: Provenance,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            family,
            provenance,
        })
    }

    /// Number of rows, `M`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns, `N`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[Complex64]> + '_ {
        self.data.chunks_exact(self.rows.max(1))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.column(j)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Sign bits of a `±1/√M` column packed into words (bit set where the
    /// entry is negative). `None` for non-binary families.
    pub fn sign_bits(&self, j: usize) -> Option<Vec<u64>> {
        if !self.family.is_binary() {
            return None;
        }
        let mut words = vec![0u64; self.rows.div_ceil(64)];
        for (i, z) in self.column(j).iter().enumerate() {
            if z.re < 0.0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Some(words)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&(self.rows as u32).to_le_bytes())?;
        w.write_all(&(self.cols as u32).to_le_bytes())?;
        w.write_all(&self.family.tag().to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for z in &self.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 16);
        self.write_binary(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| Error::Format(format!("header: {e}")))?;
        if header[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
        let (rows, cols) = (word(4) as usize, word(8) as usize);
        let family = Family::from_tag(word(12))?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)
            .map_err(|e| Error::Format(format!("body: {e}")))?;
        if body.len() != rows * cols * 16 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                rows * cols * 16,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Self::from_columns(rows, cols, data, family, Provenance::Imported)
    }

    /// Long-format CSV: `column,row,re,im`, one line per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "column,row,re,im")?;
        for j in 0..self.cols {
            for (i, z) in self.column(j).iter().enumerate() {
                writeln!(w, "{j},{i},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}
