//! Machine-readable spectrum reports. Every float is written with 17
//! significant digits so that values survive a text round trip bit for bit.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::chebyshev::Side;
use crate::spectrum::{Branch, Counts, Spectrum, FIXED_POINT_TOL};

/// `{:.16e}`: one digit before the point and sixteen after.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub branch: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub lambda: f64,
    pub phi: Option<f64>,
    pub dos: Option<f64>,
    pub residual: f64,
    pub o_k1: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub band_edge: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub fixed_point: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub ell: usize,
    pub n: usize,
    pub counts: Counts,
    pub tolerances: Tolerances,
    pub version: &'static str,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleCheck {
    pub max_eigenvalue_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_eigenvector_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<ModeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
    pub metadata: Metadata,
}

impl SpectrumReport {
    pub fn new(s: &Spectrum, tol: f64) -> Self {
        let modes = s
            .modes
            .iter()
            .zip(&s.eigenvalues)
            .zip(&s.eigvec_first)
            .map(|((m, &lambda), &o)| {
                let (branch, k, p) = match m.branch {
                    Branch::InBand { k, .. } => ("in-band", Some(k), None),
                    Branch::OutOfBand {
                        p,
                        side: Side::Above,
                    } => ("above", None, Some(p)),
                    Branch::OutOfBand {
                        p,
                        side: Side::Below,
                    } => ("below", None, Some(p)),
                };
                ModeReport {
                    branch,
                    k,
                    p,
                    lambda,
                    phi: m.phi,
                    dos: m.dos_weight,
                    residual: m.residual,
                    o_k1: o,
                    band_edge: m.band_edge,
                }
            })
            .collect();
        Self {
            eigenvalues: s.eigenvalues.clone(),
            modes,
            vectors: s.vectors.clone(),
            oracle: None,
            metadata: Metadata {
                ell: s.ell,
                n: s.n,
                counts: s.counts,
                tolerances: Tolerances {
                    tol,
                    fixed_point: FIXED_POINT_TOL,
                },
                version: env!("CARGO_PKG_VERSION"),
            },
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.residual).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    /// One row per mode; eigenvector components, when present, follow as
    /// columns `v1…vℓ`. Oracle deviations are not part of the table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "index", "branch", "lambda", "k", "p", "phi", "dos", "residual", "o_k1",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if self.vectors.is_some() {
            header.extend((1..=self.metadata.ell).map(|i| format!("v{i}")));
        }
        w.write_record(&header).expect("in-memory write");
        for (i, m) in self.modes.iter().enumerate() {
            let mut row = vec![
                (i + 1).to_string(),
                m.branch.to_string(),
                fmt_f64(m.lambda),
                fmt_opt(m.k),
                fmt_opt(m.p),
                fmt_opt(m.phi),
                fmt_opt(m.dos),
                fmt_f64(m.residual),
                fmt_f64(m.o_k1),
            ];
            if let Some(v) = &self.vectors {
                row.extend(v[i].iter().map(|&x| fmt_f64(x)));
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Pretty JSON with floats in `{:.16e}` form.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            2f64.sqrt(),
        ] {
            let s = fmt_f64(x);
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert_eq!(digits, 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats_use_full_precision() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            n: usize,
            missing: Option<f64>,
        }
        let text = to_json_string(&Row {
            x: 0.1,
            n: 3,
            missing: None,
        });
        assert!(text.contains("\"x\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"n\": 3"));
        assert!(text.contains("\"missing\": null"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }
}
