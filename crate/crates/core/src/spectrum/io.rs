//! Text serialization of spectra. Values carry 17 significant digits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_modes, ConditionalSlice, JointSpectrum, OamWindow};
use crate::error::{Error, Result};
use crate::numfmt::{sig17, Sig17};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPair {
    pub a: OamWindow,
    pub b: OamWindow,
}

#[derive(Serialize)]
struct JointSpectrumOut<'a> {
    gamma: Sig17,
    n_modes: u64,
    window: WindowPair,
    values_row_major: &'a [Sig17],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpectrumIn {
    gamma: f64,
    n_modes: u64,
    window: WindowPair,
    values_row_major: Vec<f64>,
}

impl JointSpectrum {
    /// CSV with header `l_a,l_b,value`, rows in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l_a,l_b,value\n");
        for (a, b, v) in self.cells() {
            let _ = writeln!(out, "{a},{b},{}", sig17(v));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let values: Vec<Sig17> = self.values.iter().copied().map(Sig17).collect();
        let doc = JointSpectrumOut {
            gamma: Sig17(self.gamma),
            n_modes: self.n_modes,
            window: WindowPair {
                a: self.window_a,
                b: self.window_b,
            },
            values_row_major: &values,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JointSpectrumIn = serde_json::from_str(text)?;
        check_modes(doc.n_modes)?;
        let expect = doc.window.a.len() * doc.window.b.len();
        if doc.values_row_major.len() != expect {
            return Err(Error::Parse(format!(
                "expected {expect} values, found {}",
                doc.values_row_major.len()
            )));
        }
        Ok(JointSpectrum {
            gamma: doc.gamma,
            window_a: doc.window.a,
            window_b: doc.window.b,
            n_modes: doc.n_modes,
            values: doc.values_row_major,
        })
    }
}

impl ConditionalSlice {
    /// CSV with header `l_b,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l_b,value\n");
        for (l, v) in self.iter() {
            let _ = writeln!(out, "{l},{}", sig17(v));
        }
        out
    }
}
