use std::io::{Read, Write};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Flat vector of genes in `[0, 1]`. One tree occupies `3N + 1` consecutive
/// genes; an ensemble concatenates one block per action channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(Vec<f64>);

#[derive(Debug, thiserror::Error)]
pub enum GenomeError {
    #[error("gene {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("genome file is empty")]
    Empty,
    #[error("cannot parse gene {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: std::num::ParseFloatError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Genome {
    /// Wraps `values`, rejecting anything outside the unit box.
    pub fn new(values: Vec<f64>) -> Result<Self, GenomeError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(GenomeError::OutOfRange { index, value });
        }
        Ok(Self(values))
    }

    /// Clamps every coordinate into `[0, 1]`. NaN maps to 0.5.
    pub fn repaired(point: &[f64]) -> Self {
        Self(
            point
                .iter()
                .map(|&v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Writes the genome as a single CSV line of reals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), GenomeError> {
        let line: Vec<String> = self.0.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
        Ok(())
    }

    /// Reads a flat CSV of reals; newlines and commas are both separators.
    pub fn read_csv<R: Read>(mut input: R) -> Result<Self, GenomeError> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(index, s)| s.parse::<f64>().map_err(|source| GenomeError::Parse { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(GenomeError::Empty);
        }
        Self::new(values)
    }
}

impl Deref for Genome {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
