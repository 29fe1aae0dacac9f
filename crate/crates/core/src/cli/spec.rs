//! JSON matrix specifications.
//!
//! ```json
//! {"ell": 10, "bulk": {"a": 0, "b": 1},
//!  "left": {"a": [2.0], "b": [1.0]}, "right": {"a": [], "b": []}}
//! ```
//!
//! or a named family:
//!
//! ```json
//! {"ell": 10, "preset": "two-edge", "params": {"x": 2.0, "y": 1.0}}
//! ```
//!
//! `left.b[i]` couples rows `i+1` and `i+2`; `right.a` lists the last rows
//! in order and `right.b[i]` couples the `i`-th of them to the row above.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::Preset;
use crate::qutmodel::QutMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bulk {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl Edge {
    fn is_empty(&self) -> bool {
        self.a.is_empty() && self.b.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub ell: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<Bulk>,
    #[serde(default, skip_serializing_if = "Edge::is_empty")]
    pub left: Edge,
    #[serde(default, skip_serializing_if = "Edge::is_empty")]
    pub right: Edge,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl MatrixSpec {
    /// Syntax errors only; semantic problems surface in [`MatrixSpec::build`].
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn preset(preset: Preset, ell: usize, params: BTreeMap<String, f64>) -> Self {
        Self {
            ell,
            bulk: None,
            left: Edge::default(),
            right: Edge::default(),
            preset: Some(preset),
            params,
        }
    }

    /// Expands presets and validates the result.
    pub fn build(&self) -> Result<QutMatrix> {
        match self.preset {
            Some(p) => {
                if self.bulk.is_some() || !self.left.is_empty() || !self.right.is_empty() {
                    return Err(Error::InvalidArgument(
                        "a preset spec cannot also give bulk, left or right".into(),
                    ));
                }
                p.build(self.ell, &self.params)
            }
            None => {
                if !self.params.is_empty() {
                    return Err(Error::InvalidArgument(
                        "params given without a preset".into(),
                    ));
                }
                let bulk = self.bulk.ok_or_else(|| {
                    Error::InvalidArgument("spec needs either bulk or preset".into())
                })?;
                QutMatrix::from_edges(
                    self.ell,
                    bulk.a,
                    bulk.b,
                    &self.left.a,
                    &self.left.b,
                    &self.right.a,
                    &self.right.b,
                )
            }
        }
    }
}
