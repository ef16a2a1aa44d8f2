//! JSON encoding of trig forms: a list of terms
//! `{indices, freq, phase, coeff, pi_pow}` with `coeff` an exact `"p/q"` or decimal string.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coeff::{format_rational, parse_rational, PiPoly};
use crate::error::{Error, Result};
use crate::exterior::{sort_sign, Indices, TrigForm};
use crate::trig::{Phase, TrigScalar};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum IndexRef {
    Int(u8),
    Name(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum CoeffRef {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermIn {
    #[serde(default)]
    indices: Vec<IndexRef>,
    #[serde(default)]
    freq: Option<Vec<i64>>,
    #[serde(default = "default_phase")]
    phase: Phase,
    coeff: CoeffRef,
    #[serde(default)]
    pi_pow: i32,
}

fn default_phase() -> Phase {
    Phase::Cos
}

#[derive(Clone, Debug, Serialize)]
struct TermOut {
    indices: Vec<u8>,
    freq: Vec<i64>,
    phase: Phase,
    coeff: Value,
    pi_pow: i32,
}

/// Resolves `"x1"`, `"y2"` (or `"x"`, `"y"` when `n = 1`) against a torus of dimension `dim`.
/// On `L` (`lagrangian = true`) only `x` names exist.
fn resolve(r: &IndexRef, dim: usize, lagrangian: bool) -> Result<u8> {
    let n = if lagrangian { dim } else { dim / 2 };
    let i = match r {
        IndexRef::Int(i) => *i as usize,
        IndexRef::Name(s) => {
            let (head, tail) = s.split_at(1.min(s.len()));
            let k: usize = if tail.is_empty() && n == 1 {
                1
            } else {
                tail.parse().map_err(|_| Error::Scenario(format!("bad coordinate name {s:?}")))?
            };
            if k == 0 || k > n {
                return Err(Error::Scenario(format!("coordinate {s:?} out of range")));
            }
            match head {
                "x" => k - 1,
                "y" if !lagrangian => n + k - 1,
                _ => return Err(Error::Scenario(format!("bad coordinate name {s:?}"))),
            }
        }
    };
    if i >= dim {
        return Err(Error::Scenario(format!("index {i} out of range for dimension {dim}")));
    }
    Ok(i as u8)
}

fn parse_coeff(c: &CoeffRef) -> Result<crate::coeff::Rational> {
    let s = match c {
        CoeffRef::Text(s) => s.clone(),
        CoeffRef::Number(n) => n.to_string(),
    };
    parse_rational(&s).ok_or_else(|| Error::Scenario(format!("bad coefficient {s:?}")))
}

/// Parses a form on a torus of dimension `dim`. The degree comes from the terms, or from
/// `degree` when the list is empty; a mismatch with `degree` is an error.
pub fn form_from_value(v: &Value, dim: usize, degree: Option<usize>, lagrangian: bool) -> Result<TrigForm> {
    let terms: Vec<TermIn> =
        serde_json::from_value(v.clone()).map_err(|e| Error::Scenario(format!("form: {e}")))?;
    let mut deg = degree;
    let mut out: Option<TrigForm> = None;
    for t in &terms {
        let mut idx: Indices = t.indices.iter().map(|r| resolve(r, dim, lagrangian)).collect::<Result<_>>()?;
        match deg {
            Some(d) if d != idx.len() => {
                return Err(Error::Scenario(format!("expected a {d}-form, found a term of degree {}", idx.len())))
            }
            _ => deg = Some(idx.len()),
        }
        let freq: crate::trig::Freq = match &t.freq {
            Some(f) if f.len() == dim => f.iter().copied().collect(),
            Some(f) => return Err(Error::Scenario(format!("frequency of length {} on dimension {dim}", f.len()))),
            None => crate::trig::zero_freq(dim),
        };
        let Some(sign) = sort_sign(&mut idx) else { continue };
        let mut q = parse_coeff(&t.coeff)?;
        if sign < 0 {
            q = -q;
        }
        let f = TrigScalar::mode(freq, t.phase, PiPoly::monomial(q, t.pi_pow));
        let term = TrigForm::monomial(dim, &idx, f);
        out = Some(match out {
            Some(o) => o.add(&term),
            None => term,
        });
    }
    let d = deg.ok_or_else(|| Error::Scenario("empty form without a declared degree".into()))?;
    Ok(out.unwrap_or_else(|| TrigForm::zero(dim, d)))
}

pub fn form_to_value(w: &TrigForm) -> Value {
    let mut out = Vec::new();
    for (idx, f) in w.terms() {
        for (k, phase, c) in f.terms() {
            for (e, q) in c.terms() {
                out.push(TermOut {
                    indices: idx.to_vec(),
                    freq: k.to_vec(),
                    phase,
                    coeff: Value::String(format_rational(q)),
                    pi_pow: e,
                });
            }
        }
    }
    serde_json::to_value(out).expect("terms serialize")
}

/// Numeric forms are written with decimal coefficients and `pi_pow = 0`.
pub fn numeric_form_to_value(w: &TrigForm<f64>) -> Value {
    let mut out = Vec::new();
    for (idx, f) in w.terms() {
        for (k, phase, c) in f.terms() {
            out.push(TermOut {
                indices: idx.to_vec(),
                freq: k.to_vec(),
                phase,
                coeff: serde_json::json!(round_sig(*c)),
                pi_pow: 0,
            });
        }
    }
    serde_json::to_value(out).expect("terms serialize")
}

/// Rounds to 12 significant digits so reports do not carry last-bit noise.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let s = format!("{v:.11e}");
    s.parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use serde_json::json;
    use smallvec::smallvec;

    #[test]
    fn round_trip_and_names() {
        let v = json!([
            {"indices": ["y", "x"], "freq": [0, 1], "phase": "sin", "coeff": "-1/2", "pi_pow": 1},
            {"indices": [0, 1], "coeff": 2}
        ]);
        let w = form_from_value(&v, 2, None, false).unwrap();
        let expected = TrigForm::monomial(
            2,
            &[0, 1],
            TrigScalar::mode(smallvec![0, 1], Phase::Sin, PiPoly::monomial(rat(1, 2), 1))
                .add(&TrigScalar::constant(2, PiPoly::int(2))),
        );
        assert_eq!(w, expected);
        let back = form_from_value(&form_to_value(&w), 2, None, false).unwrap();
        assert_eq!(back, w);
        assert_eq!(form_from_value(&json!([]), 2, Some(2), false).unwrap(), TrigForm::zero(2, 2));
        assert_eq!(
            form_from_value(&json!([{"indices": ["x"], "coeff": "0.05"}]), 1, None, true).unwrap(),
            TrigForm::monomial(1, &[0], TrigScalar::from_rational(1, rat(1, 20)))
        );
        let w4 = form_from_value(&json!([{"indices": ["x1", "y2"], "coeff": "1"}]), 4, None, false).unwrap();
        assert_eq!(w4, TrigForm::monomial(4, &[0, 3], TrigScalar::from_rational(4, rat_int(1))));
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(form_from_value(&json!([{"indices": ["z"], "coeff": "1"}]), 2, None, false).is_err());
        assert!(form_from_value(&json!([{"indices": [0], "coeff": "1/0"}]), 2, None, false).is_err());
        assert!(form_from_value(&json!([{"indices": [0], "freq": [1], "coeff": "1"}]), 2, None, false).is_err());
        assert!(form_from_value(&json!([{"indices": [0, 1], "coeff": "1"}]), 2, Some(1), false).is_err());
        assert!(form_from_value(&json!([{"indices": ["y"], "coeff": "1"}]), 1, None, true).is_err());
    }
}
