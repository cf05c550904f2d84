//! Weight files.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic    8 bytes  b"DACTIFW\0"
//! version  u32      1
//! gates    4 bytes  b"ifgo"
//! F, H, P  3 × u32
//! tensors  f64 × n  w_ih, w_hh, b_gates, w_pen, b_pen, w_out, b_out (row-major)
//! ```
//!
//! The JSON form carries the same fields with `format`, `version` and
//! `gate_order` tags.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::lstm::{LstmRegressor, ModelDims, GATE_ORDER};

const MAGIC: &[u8; 8] = b"DACTIFW\0";
const VERSION: u32 = 1;
const FORMAT_TAG: &str = "deepactif-weights";

pub fn to_bytes(model: &LstmRegressor) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(GATE_ORDER.as_bytes());
    for d in [model.dims.input, model.dims.hidden, model.dims.penult] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for t in model.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<LstmRegressor> {
    let header = 8 + 4 + 4 + 12;
    if bytes.len() < header || &bytes[..8] != MAGIC {
        return Err(Error::WeightFormat("bad magic or truncated header".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::WeightFormat(format!("unsupported version {version}")));
    }
    if &bytes[12..16] != GATE_ORDER.as_bytes() {
        return Err(Error::WeightFormat("gate order tag is not \"ifgo\"".into()));
    }
    let dims = ModelDims::new(u32_at(16) as usize, u32_at(20) as usize, u32_at(24) as usize);
    dims.validate()?;
    let mut model = LstmRegressor::zeros(dims);
    let body = &bytes[header..];
    if body.len() != 8 * model.num_params() {
        return Err(Error::WeightFormat(format!(
            "expected {} parameter bytes, found {}",
            8 * model.num_params(),
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for t in model.tensors_mut() {
        for v in t {
            *v = values.next().expect("length checked");
        }
    }
    model.validate()?;
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct JsonWeights {
    format: String,
    version: u32,
    gate_order: String,
    dims: ModelDims,
    w_ih: Vec<f64>,
    w_hh: Vec<f64>,
    b_gates: Vec<f64>,
    w_pen: Vec<f64>,
    b_pen: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

pub fn to_json(model: &LstmRegressor) -> Result<String> {
    let doc = JsonWeights {
        format: FORMAT_TAG.into(),
        version: VERSION,
        gate_order: GATE_ORDER.into(),
        dims: model.dims,
        w_ih: model.w_ih.as_slice().to_vec(),
        w_hh: model.w_hh.as_slice().to_vec(),
        b_gates: model.b_gates.clone(),
        w_pen: model.w_pen.as_slice().to_vec(),
        b_pen: model.b_pen.clone(),
        w_out: model.w_out.clone(),
        b_out: model.b_out,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<LstmRegressor> {
    let doc: JsonWeights = serde_json::from_str(text)?;
    if doc.format != FORMAT_TAG || doc.version != VERSION {
        return Err(Error::WeightFormat(format!(
            "unsupported document {} v{}",
            doc.format, doc.version
        )));
    }
    if doc.gate_order != GATE_ORDER {
        return Err(Error::WeightFormat(format!("gate order {:?} is not \"ifgo\"", doc.gate_order)));
    }
    doc.dims.validate()?;
    let mut model = LstmRegressor::zeros(doc.dims);
    let sources: [&[f64]; 7] = [
        &doc.w_ih,
        &doc.w_hh,
        &doc.b_gates,
        &doc.w_pen,
        &doc.b_pen,
        &doc.w_out,
        std::slice::from_ref(&doc.b_out),
    ];
    for ((dst, src), name) in model.tensors_mut().into_iter().zip(sources).zip(crate::nn::lstm::PARAM_NAMES) {
        if dst.len() != src.len() {
            return Err(Error::WeightFormat(format!(
                "{name} has {} values, expected {}",
                src.len(),
                dst.len()
            )));
        }
        dst.copy_from_slice(src);
    }
    model.validate()?;
    Ok(model)
}

/// Saves as binary unless the extension is `.json`.
pub fn save(model: &LstmRegressor, path: &Path) -> Result<()> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    let res = if is_json {
        fs::write(path, to_json(model)?)
    } else {
        fs::write(path, to_bytes(model))
    };
    res.map_err(|e| Error::io(path, e))
}

/// Loads either form, sniffing the binary magic.
pub fn load(path: &Path) -> Result<LstmRegressor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        from_bytes(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::WeightFormat("neither binary weights nor UTF-8 JSON".into()))?;
        from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let model = LstmRegressor::init(ModelDims::new(3, 5, 2), 11).unwrap();
        let back = from_bytes(&to_bytes(&model)).unwrap();
        for (a, b) in model.tensors().iter().zip(back.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let model = LstmRegressor::init(ModelDims::new(2, 3, 4), 3).unwrap();
        assert_eq!(from_json(&to_json(&model).unwrap()).unwrap(), model);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let model = LstmRegressor::init(ModelDims::new(2, 3, 4), 3).unwrap();
        let mut bytes = to_bytes(&model);
        bytes.pop();
        assert!(from_bytes(&bytes).is_err());
        let mut bytes = to_bytes(&model);
        bytes[12..16].copy_from_slice(b"iofg");
        assert!(from_bytes(&bytes).is_err());
        assert!(from_bytes(b"nonsense").is_err());
    }

    #[test]
    fn save_and_load_both_forms() {
        let dir = tempfile::tempdir().unwrap();
        let model = LstmRegressor::init(ModelDims::new(4, 2, 3), 9).unwrap();
        for name in ["w.bin", "w.json"] {
            let p = dir.path().join(name);
            save(&model, &p).unwrap();
            assert_eq!(load(&p).unwrap(), model);
        }
    }
}
