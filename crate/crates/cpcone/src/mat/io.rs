//! Matrix serialization.
//!
//! Text format: first line `n`, then n whitespace-separated rows.
//! JSON format: `{"dim": n, "entries": [row-major n*n floats]}`; rational
//! matrices carry entries as `"p/q"` strings; factor matrices use
//! `{"rows": n, "cols": r, "entries": [...]}` with the support implied by
//! the nonzero positions.

use std::str::FromStr;

use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FactorMatrix, RationalFactorMatrix, RationalSymMatrix, SymMatrix};
use crate::{Error, Result};

/// Parse the text format.
pub fn read_sym_text(text: &str) -> Result<SymMatrix> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
    let mut data = Vec::with_capacity(n * n);
    for tok in tokens {
        let v: f64 = tok
            .parse()
            .map_err(|e| Error::Parse(format!("bad entry {tok:?}: {e}")))?;
        data.push(v);
    }
    if data.len() != n * n {
        return Err(Error::Parse(format!(
            "expected {} entries, found {}",
            n * n,
            data.len()
        )));
    }
    SymMatrix::from_data(n, data)
}

/// Render the text format.
pub fn write_sym_text(a: &SymMatrix) -> String {
    let n = a.dim();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.17e}", a.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SymRepr {
    dim: usize,
    entries: Vec<f64>,
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymRepr {
            dim: self.dim(),
            entries: self.data().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SymRepr::deserialize(d)?;
        SymMatrix::from_data(repr.dim, repr.entries).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalSymRepr {
    dim: usize,
    entries: Vec<String>,
}

impl Serialize for RationalSymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let entries = (0..n * n)
            .map(|k| self.get(k / n, k % n).to_string())
            .collect();
        RationalSymRepr { dim: n, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalSymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RationalSymRepr::deserialize(d)?;
        let n = repr.dim;
        if repr.entries.len() != n * n {
            return Err(D::Error::custom(format!(
                "expected {} entries, found {}",
                n * n,
                repr.entries.len()
            )));
        }
        let mut parsed = Vec::with_capacity(n * n);
        for e in &repr.entries {
            parsed.push(
                BigRational::from_str(e)
                    .map_err(|err| D::Error::custom(format!("bad rational {e:?}: {err}")))?,
            );
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if parsed[i * n + j] != parsed[j * n + i] {
                    return Err(D::Error::custom(format!(
                        "rational matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(RationalSymMatrix::from_upper(n, |i, j| {
            parsed[i * n + j].clone()
        }))
    }
}

#[derive(Serialize, Deserialize)]
struct FactorRepr {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Serialize for FactorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FactorRepr {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.data().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FactorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FactorRepr::deserialize(d)?;
        FactorMatrix::new(repr.rows, repr.cols, repr.entries).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalFactorRepr {
    rows: usize,
    cols: usize,
    entries: Vec<String>,
}

impl Serialize for RationalFactorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.rows() * self.cols())
            .map(|k| self.get(k / self.cols(), k % self.cols()).to_string())
            .collect();
        RationalFactorRepr {
            rows: self.rows(),
            cols: self.cols(),
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalFactorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RationalFactorRepr::deserialize(d)?;
        let mut parsed = Vec::with_capacity(repr.entries.len());
        for e in &repr.entries {
            parsed.push(
                BigRational::from_str(e)
                    .map_err(|err| D::Error::custom(format!("bad rational {e:?}: {err}")))?,
            );
        }
        RationalFactorMatrix::new(repr.rows, repr.cols, parsed).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_round_trip() {
        let a = SymMatrix::from_rows(&[vec![1.5, -2.0], vec![-2.0, 0.25]]).unwrap();
        let txt = write_sym_text(&a);
        assert_eq!(read_sym_text(&txt).unwrap(), a);
        assert!(read_sym_text("2\n1 2 3").is_err());
        assert!(read_sym_text("").is_err());
    }

    #[test]
    fn json_rational_round_trip() {
        let json = r#"{"dim":2,"entries":["1/2","-3/7","-3/7","5"]}"#;
        let m: RationalSymMatrix = serde_json::from_str(json).unwrap();
        let back = serde_json::to_string(&m).unwrap();
        let m2: RationalSymMatrix = serde_json::from_str(&back).unwrap();
        assert_eq!(m, m2);

        let asym = r#"{"dim":2,"entries":["1","2","3","4"]}"#;
        assert!(serde_json::from_str::<RationalSymMatrix>(asym).is_err());
    }

    proptest! {
        #[test]
        fn sym_json_round_trip(upper in proptest::collection::vec(-1e6f64..1e6, 15)) {
            let mut k = 0;
            let a = SymMatrix::from_upper(5, |_, _| { let v = upper[k]; k += 1; v });
            let json = serde_json::to_string(&a).unwrap();
            let back: SymMatrix = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(a, back);
        }

        #[test]
        fn factor_json_round_trip(data in proptest::collection::vec(0f64..1e3, 20)) {
            let b = FactorMatrix::new(4, 5, data).unwrap();
            let json = serde_json::to_string(&b).unwrap();
            let back: FactorMatrix = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(b, back);
        }
    }
}
