//! Model files: a transition matrix, a locally constant potential keyed by
//! 1-based words, and optional symbol labels.
//!
//! ```json
//! {
//!   "transition": [[1, 1], [1, 0]],
//!   "potential": { "order": 2, "values": { "11": 0.0, "12": 0.5, "21": -0.5 } },
//!   "labels": ["a", "b"]
//! }
//! ```
//!
//! `values` may also be a list of `[[1, 2], 0.5]` pairs, which is the only
//! form available once the alphabet has more than nine symbols.

use std::collections::BTreeMap;
use std::path::Path;

use gibbs_spectra::shift::{TransitionMatrix, Word};
use gibbs_spectra::thermo::Potential;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Clone, Debug)]
pub struct Model {
    pub potential: Potential,
    pub labels: Option<Vec<String>>,
}

impl Model {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Model::parse(&text).map_err(|e| match e {
            CliError::Model(msg) => CliError::Model(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Model(format!("malformed JSON: {e}")))?;
        let root = root
            .as_object()
            .ok_or_else(|| CliError::Model("expected a JSON object at the top level".into()))?;
        for key in root.keys() {
            if !matches!(key.as_str(), "transition" | "potential" | "labels") {
                return Err(CliError::Model(format!("unknown key `{key}`")));
            }
        }

        let base = parse_transition(
            root.get("transition")
                .ok_or_else(|| missing("transition"))?,
        )?;
        let n = base.n_symbols();
        let potential = root.get("potential").ok_or_else(|| missing("potential"))?;
        let potential = potential
            .as_object()
            .ok_or_else(|| CliError::Model("`potential` must be an object".into()))?;
        let order = potential
            .get("order")
            .ok_or_else(|| missing("potential.order"))?
            .as_u64()
            .filter(|&k| k >= 1)
            .ok_or_else(|| CliError::Model("`potential.order` must be a positive integer".into()))?
            as usize;
        let values = parse_values(
            potential
                .get("values")
                .ok_or_else(|| missing("potential.values"))?,
            n,
            order,
        )?;
        let potential = Potential::new(base, order, values)
            .map_err(|e| CliError::Model(format!("`potential.values`: {e}")))?;

        let labels = match root.get("labels") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => {
                let labels = items
                    .iter()
                    .map(|v| v.as_str().map(str::to_owned))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| {
                        CliError::Model("`labels` must be an array of strings".into())
                    })?;
                if labels.len() != n {
                    return Err(CliError::Model(format!(
                        "`labels` has {} entries for {n} symbols",
                        labels.len()
                    )));
                }
                Some(labels)
            }
            Some(_) => {
                return Err(CliError::Model(
                    "`labels` must be an array of strings".into(),
                ))
            }
        };
        Ok(Model { potential, labels })
    }
}

/// Model-file JSON for a potential; word keys are digit strings up to nine
/// symbols and `[[labels], value]` pairs beyond.
pub fn potential_json(f: &Potential, labels: Option<&[String]>) -> Value {
    let n = f.base().n_symbols();
    let values = if n <= 9 {
        Value::Object(
            f.values()
                .iter()
                .map(|(w, v)| (w.to_string(), json!(v)))
                .collect::<Map<_, _>>(),
        )
    } else {
        Value::Array(
            f.values()
                .iter()
                .map(|(w, v)| json!([w.labels(), v]))
                .collect(),
        )
    };
    let mut model = json!({
        "transition": f.base().rows(),
        "potential": { "order": f.order(), "values": values },
    });
    if let Some(labels) = labels {
        model["labels"] = json!(labels);
    }
    model
}

/// Word as it appears in model files and reports.
pub fn word_key(w: &Word) -> String {
    w.to_string()
}

fn missing(key: &str) -> CliError {
    CliError::Model(format!("missing key `{key}`"))
}

fn parse_transition(value: &Value) -> Result<TransitionMatrix, CliError> {
    let bad = || CliError::Model("`transition` must be a square array of 0/1 rows".into());
    let rows = value.as_array().ok_or_else(bad)?;
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .enumerate()
                .map(|(j, x)| match x.as_u64() {
                    Some(0) => Ok(0u8),
                    Some(1) => Ok(1u8),
                    _ => Err(CliError::Model(format!(
                        "`transition[{i}][{j}]` must be 0 or 1, got {x}"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    TransitionMatrix::new(rows).map_err(|e| CliError::Model(format!("`transition`: {e}")))
}

fn parse_word(key: &str, n: usize, order: usize) -> Result<Word, CliError> {
    let w: Word = key.parse().map_err(|_| {
        CliError::Model(format!(
            "`potential.values`: key \"{key}\" is not a word of digits 1-9"
        ))
    })?;
    check_word(&w, key, n, order)?;
    Ok(w)
}

fn check_word(w: &Word, key: &str, n: usize, order: usize) -> Result<(), CliError> {
    if w.len() != order {
        return Err(CliError::Model(format!(
            "`potential.values`: key \"{key}\" has length {}, expected {order}",
            w.len()
        )));
    }
    if w.symbols().iter().any(|&s| s >= n) {
        return Err(CliError::Model(format!(
            "`potential.values`: key \"{key}\" uses a symbol outside 1..={n}"
        )));
    }
    Ok(())
}

fn parse_values(value: &Value, n: usize, order: usize) -> Result<BTreeMap<Word, f64>, CliError> {
    let number = |key: &str, v: &Value| {
        v.as_f64().ok_or_else(|| {
            CliError::Model(format!(
                "`potential.values`: value for \"{key}\" is not a number"
            ))
        })
    };
    let mut values = BTreeMap::new();
    match value {
        Value::Object(map) => {
            for (key, v) in map {
                values.insert(parse_word(key, n, order)?, number(key, v)?);
            }
        }
        Value::Array(pairs) => {
            for (k, pair) in pairs.iter().enumerate() {
                let bad = || {
                    CliError::Model(format!("`potential.values[{k}]` must be [[labels], value]"))
                };
                let pair = pair.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                let labels = pair[0]
                    .as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|x| x.as_u64().map(|x| x as usize))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(bad)?;
                let key = format!("{labels:?}");
                let w = Word::from_labels(&labels).ok_or_else(|| {
                    CliError::Model(format!("`potential.values`: labels {key} must be 1-based"))
                })?;
                check_word(&w, &key, n, order)?;
                if values.insert(w, number(&key, &pair[1])?).is_some() {
                    return Err(CliError::Model(format!(
                        "`potential.values`: duplicate word {key}"
                    )));
                }
            }
        }
        _ => {
            return Err(CliError::Model(
                "`potential.values` must be an object or an array of pairs".into(),
            ))
        }
    }
    Ok(values)
}
