//! JSON datasets and model files.
//!
//! Dataset: `{"records": [{"euler": [φ1, θ, φ2] | "quaternion": [w, x, y, z]
//! | "matrix": [[..], [..], [..]], "value": v | [re, im]}, ...]}`. Exactly one
//! rotation form per record; forms may differ between records.
//!
//! Model: `{"format_version": 1, "order": m, "l0": ℓ₀, "row_ordering":
//! "l-iota-nu-ascending/v1", "centers": [[w, x, y, z], ...], "alpha": [[re,
//! im], ...], "beta": [{"l", "iota", "nu", "value": [re, im]}, ...]}`.

use crate::error::{Error, Result};
use crate::fit::SplineModel;
use crate::kernels::KernelOrder;
use crate::rotations::{distance, EulerAngles, Rotation};
use crate::wigner::{polynomial_dimension, WignerIndex, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Tag naming the flat `(ℓ, ι, ν)` order of `β`, each index ascending.
pub const ROW_ORDERING: &str = "l-iota-nu-ascending/v1";

/// Tolerance on quaternion norms and matrix orthogonality in input files.
pub const INPUT_TOLERANCE: f64 = 1e-6;

/// Sample rotations with real or complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rotations: Vec<Rotation>,
    values: Vec<C64>,
}

impl Dataset {
    /// Fails with [`Error::Validation`] if empty and with
    /// [`Error::DegenerateSet`] if two rotations coincide.
    pub fn new(rotations: Vec<Rotation>, values: Vec<C64>) -> Result<Self> {
        if rotations.is_empty() {
            return Err(Error::Validation {
                record: None,
                message: "a dataset needs at least one record".into(),
            });
        }
        if rotations.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rotations but {} values",
                rotations.len(),
                values.len()
            )));
        }
        if let Some((first, second)) = find_coincident(&rotations) {
            return Err(Error::DegenerateSet { first, second });
        }
        Ok(Self { rotations, values })
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// JSON with every rotation in quaternion form and complex values.
    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rotations
            .iter()
            .zip(&self.values)
            .map(|(r, v)| serde_json::json!({ "quaternion": r.quaternion(), "value": [v.re, v.im] }))
            .collect();
        to_pretty(&serde_json::json!({ "records": records }))
    }
}

fn find_coincident(rotations: &[Rotation]) -> Option<(usize, usize)> {
    for i in 0..rotations.len() {
        for j in i + 1..rotations.len() {
            if distance(&rotations[i], &rotations[j]) == 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn parse_error(record: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        record,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `path`.
pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn numbers<const N: usize>(v: &Value, record: usize, what: &str) -> Result<[f64; N]> {
    let items = v
        .as_array()
        .filter(|a| a.len() == N)
        .ok_or_else(|| parse_error(Some(record), format!("{what} must be an array of {N} numbers")))?;
    let mut out = [0.0; N];
    for (o, item) in out.iter_mut().zip(items) {
        *o = item
            .as_f64()
            .ok_or_else(|| parse_error(Some(record), format!("{what} must contain only numbers")))?;
    }
    Ok(out)
}

fn parse_complex(v: &Value, record: usize) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    let [re, im] = numbers::<2>(v, record, "value")?;
    Ok(C64::new(re, im))
}

fn parse_rotation(obj: &serde_json::Map<String, Value>, record: usize) -> Result<Rotation> {
    let forms: Vec<&str> = ["euler", "quaternion", "matrix"]
        .into_iter()
        .filter(|k| obj.contains_key(*k))
        .collect();
    if forms.len() != 1 {
        return Err(parse_error(
            Some(record),
            format!(
                "expected exactly one of euler, quaternion, matrix; found {}",
                if forms.is_empty() { "none".to_string() } else { forms.join(", ") }
            ),
        ));
    }
    let invalid = |e: Error| Error::Validation {
        record: Some(record),
        message: e.to_string(),
    };
    match forms[0] {
        "euler" => {
            let [phi1, theta, phi2] = numbers::<3>(&obj["euler"], record, "euler")?;
            Ok(Rotation::from_euler(EulerAngles::new(phi1, theta, phi2)))
        }
        "quaternion" => {
            let q = numbers::<4>(&obj["quaternion"], record, "quaternion")?;
            Rotation::from_quaternion(q, INPUT_TOLERANCE).map_err(invalid)
        }
        _ => {
            let rows = obj["matrix"]
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| parse_error(Some(record), "matrix must be an array of 3 rows"))?;
            let mut m = [[0.0; 3]; 3];
            for (row, v) in m.iter_mut().zip(rows) {
                *row = numbers::<3>(v, record, "matrix row")?;
            }
            Rotation::from_matrix(m, INPUT_TOLERANCE).map_err(invalid)
        }
    }
}

// Records as (rotation, optional value).
fn parse_records(text: &str) -> Result<Vec<(Rotation, Option<C64>)>> {
    let root: Value = serde_json::from_str(text).map_err(|e| parse_error(None, e.to_string()))?;
    let records = root
        .get("records")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error(None, "top-level object must have a \"records\" array"))?;
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let obj = rec
                .as_object()
                .ok_or_else(|| parse_error(Some(i), "record must be an object"))?;
            if let Some(k) = obj
                .keys()
                .find(|k| !matches!(k.as_str(), "euler" | "quaternion" | "matrix" | "value"))
            {
                return Err(parse_error(Some(i), format!("unknown field \"{k}\"")));
            }
            let rotation = parse_rotation(obj, i)?;
            let value = obj.get("value").map(|v| parse_complex(v, i)).transpose()?;
            Ok((rotation, value))
        })
        .collect()
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut rotations = Vec::new();
    let mut values = Vec::new();
    for (i, (r, v)) in parse_records(text)?.into_iter().enumerate() {
        rotations.push(r);
        values.push(v.ok_or_else(|| parse_error(Some(i), "missing \"value\""))?);
    }
    Dataset::new(rotations, values)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read(path)?)
}

/// Evaluation points: dataset records whose `value` is optional and ignored.
pub fn parse_points(text: &str) -> Result<Vec<Rotation>> {
    Ok(parse_records(text)?.into_iter().map(|(r, _)| r).collect())
}

pub fn load_points(path: &Path) -> Result<Vec<Rotation>> {
    parse_points(&read(path)?)
}

/// `{"values": [[re, im], ...]}`.
pub fn values_to_json(values: &[C64]) -> String {
    let pairs: Vec<[f64; 2]> = values.iter().map(|v| [v.re, v.im]).collect();
    to_pretty(&serde_json::json!({ "values": pairs }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BetaEntry {
    l: usize,
    iota: i64,
    nu: i64,
    value: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    order: u32,
    l0: usize,
    row_ordering: String,
    centers: Vec<[f64; 4]>,
    alpha: Vec<[f64; 2]>,
    beta: Vec<BetaEntry>,
}

pub fn model_to_json(model: &SplineModel) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        order: model.order().m(),
        l0: model.cpd_order(),
        row_ordering: ROW_ORDERING.into(),
        centers: model.centers().iter().map(|c| c.quaternion()).collect(),
        alpha: model.alpha().iter().map(|a| [a.re, a.im]).collect(),
        beta: model
            .beta()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let idx = WignerIndex::from_flat(i);
                BetaEntry {
                    l: idx.degree(),
                    iota: idx.k(),
                    nu: idx.m(),
                    value: [b.re, b.im],
                }
            })
            .collect(),
    };
    to_pretty(&file)
}

pub fn model_from_json(text: &str) -> Result<SplineModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_error(None, e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(parse_error(
            None,
            format!("unsupported model format_version {}", file.format_version),
        ));
    }
    if file.row_ordering != ROW_ORDERING {
        return Err(parse_error(
            None,
            format!("unknown row_ordering \"{}\", expected \"{ROW_ORDERING}\"", file.row_ordering),
        ));
    }
    let order = KernelOrder::new(file.order).map_err(|e| Error::Validation {
        record: None,
        message: e.to_string(),
    })?;
    if file.l0 != order.cpd_order() {
        return Err(Error::Validation {
            record: None,
            message: format!("l0 = {} does not match order {} (expected {})", file.l0, file.order, order.cpd_order()),
        });
    }
    if file.beta.len() != polynomial_dimension(file.l0) {
        return Err(Error::Validation {
            record: None,
            message: format!(
                "{} beta entries, expected {}",
                file.beta.len(),
                polynomial_dimension(file.l0)
            ),
        });
    }
    for (i, b) in file.beta.iter().enumerate() {
        let idx = WignerIndex::from_flat(i);
        if (b.l, b.iota, b.nu) != (idx.degree(), idx.k(), idx.m()) {
            return Err(Error::Validation {
                record: Some(i),
                message: format!(
                    "beta entry ({}, {}, {}) out of order, expected ({}, {}, {})",
                    b.l,
                    b.iota,
                    b.nu,
                    idx.degree(),
                    idx.k(),
                    idx.m()
                ),
            });
        }
    }
    let centers = file
        .centers
        .iter()
        .enumerate()
        .map(|(i, q)| {
            Rotation::from_quaternion(*q, INPUT_TOLERANCE).map_err(|e| Error::Validation {
                record: Some(i),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SplineModel::new(
        order,
        centers,
        file.alpha.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
        file.beta.iter().map(|b| C64::new(b.value[0], b.value[1])).collect(),
    )
    .map_err(|e| Error::Validation {
        record: None,
        message: e.to_string(),
    })
}

pub fn save_model(model: &SplineModel, path: &Path) -> Result<()> {
    write(path, &model_to_json(model))
}

pub fn load_model(path: &Path) -> Result<SplineModel> {
    model_from_json(&read(path)?)
}
