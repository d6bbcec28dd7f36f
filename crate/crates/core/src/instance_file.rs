//! JSON instance files.
//!
//! ```json
//! { "q": 3, "d": 2, "h": 1,
//!   "eta": [{"v": "0", "c": 1}, {"v": "1", "c": 1}],
//!   "eta_prime": [{"v": "0", "c": 1}, {"v": "1", "c": 2}] }
//! ```
//!
//! Colors are 1-based in files and 0-based in memory; the conversion happens
//! here and nowhere else. `eta_prime` is optional. The optional fields
//! `root_degree` and `pruned` describe irregular trees.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::TreeError;
use crate::tree::{Boundary, BoundaryPair, TreeInstance, TreeShape, VertexAddress};

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("color {0} is outside 1..=q")]
    Color(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("the file has no eta_prime assignment")]
    MissingEtaPrime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub v: String,
    pub c: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub q: usize,
    pub d: usize,
    pub h: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pruned: Vec<String>,
    #[serde(default)]
    pub eta: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_prime: Option<Vec<Entry>>,
}

fn to_boundary(entries: &[Entry], q: usize) -> Result<Boundary, InstanceFileError> {
    let mut boundary = Boundary::new();
    for entry in entries {
        if entry.c == 0 || entry.c > q {
            return Err(InstanceFileError::Color(entry.c));
        }
        let v: VertexAddress = entry.v.parse()?;
        if boundary.insert(v, entry.c - 1).is_some() {
            return Err(TreeError::DuplicateAddress(entry.v.clone()).into());
        }
    }
    Ok(boundary)
}

fn to_entries(boundary: &Boundary) -> Vec<Entry> {
    boundary
        .iter()
        .map(|(v, c)| Entry {
            v: v.to_string(),
            c: c + 1,
        })
        .collect()
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, InstanceFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, InstanceFileError> {
        let text = fs::read_to_string(path).map_err(|source| InstanceFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn shape(&self) -> Result<TreeShape, InstanceFileError> {
        let mut shape = TreeShape::new(self.q, self.d, self.h)?;
        if let Some(k) = self.root_degree {
            shape = shape.with_root_degree(k)?;
        }
        if !self.pruned.is_empty() {
            let pruned = self
                .pruned
                .iter()
                .map(|s| s.parse::<VertexAddress>())
                .collect::<Result<Vec<_>, _>>()?;
            shape = shape.with_pruned(pruned)?;
        }
        Ok(shape)
    }

    /// The instance conditioned on `eta`.
    pub fn instance(&self) -> Result<TreeInstance, InstanceFileError> {
        Ok(TreeInstance::new(
            self.shape()?,
            to_boundary(&self.eta, self.q)?,
        )?)
    }

    pub fn pair(&self) -> Result<BoundaryPair, InstanceFileError> {
        let eta_prime = self
            .eta_prime
            .as_ref()
            .ok_or(InstanceFileError::MissingEtaPrime)?;
        Ok(BoundaryPair::new(
            self.shape()?,
            to_boundary(&self.eta, self.q)?,
            to_boundary(eta_prime, self.q)?,
        )?)
    }

    fn header(shape: &TreeShape) -> Self {
        InstanceFile {
            q: shape.q(),
            d: shape.d(),
            h: shape.h(),
            root_degree: (shape.root_degree() != shape.d()).then(|| shape.root_degree()),
            pruned: shape.pruned().iter().map(ToString::to_string).collect(),
            eta: Vec::new(),
            eta_prime: None,
        }
    }

    pub fn from_instance(instance: &TreeInstance) -> Self {
        InstanceFile {
            eta: to_entries(instance.boundary()),
            ..Self::header(instance.shape())
        }
    }

    pub fn from_pair(pair: &BoundaryPair) -> Self {
        InstanceFile {
            eta: to_entries(pair.eta()),
            eta_prime: Some(to_entries(pair.eta_prime())),
            ..Self::header(pair.shape())
        }
    }
}
