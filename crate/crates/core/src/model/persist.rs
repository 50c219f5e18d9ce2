//! JSON model files.
//!
//! ```text
//! { "format_version": 1, "variant": "GP2T", "hyperparams": {...},
//!   "vocabulary": [item ids], "n": n, "d": d,
//!   "parameters": [ { "name": "W", "shape": [n, d], "data": [row-major] }, ... ] }
//! ```
//!
//! Numbers are written in shortest round-trip form and parsed with correct
//! rounding, so loading a saved model reproduces every parameter bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Block, Hyperparams, M2Model, M2Params, Variant};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BlockRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize)]
struct ModelOut<'a> {
    format_version: u32,
    variant: Variant,
    hyperparams: &'a Hyperparams,
    vocabulary: &'a [String],
    n: usize,
    d: usize,
    parameters: Vec<BlockRecord>,
}

pub fn save_model(model: &M2Model, path: &Path) -> Result<()> {
    if !model.params.all_finite() {
        return Err(Error::Training("refusing to save non-finite parameters".into()));
    }
    let params = &model.params;
    let out = ModelOut {
        format_version: MODEL_FORMAT_VERSION,
        variant: model.hyperparams.variant,
        hyperparams: &model.hyperparams,
        vocabulary: &model.item_ids,
        n: params.n,
        d: params.d,
        parameters: params
            .iter()
            .map(|(block, data)| {
                let (rows, cols) = params.shape(block).expect("present block");
                BlockRecord {
                    name: block.name().to_string(),
                    shape: [rows, cols],
                    data: data.to_vec(),
                }
            })
            .collect(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &out)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<T: for<'de> Deserialize<'de>>(root: &mut serde_json::Map<String, Value>, name: &str) -> Result<T> {
    let value = root
        .remove(name)
        .ok_or_else(|| Error::model_file(name, "missing"))?;
    serde_json::from_value(value).map_err(|e| Error::model_file(name, e.to_string()))
}

pub fn load_model(path: &Path) -> Result<M2Model> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let root: Value = serde_json::from_reader(BufReader::new(file))?;
    let Value::Object(mut root) = root else {
        return Err(Error::model_file("<root>", "expected a JSON object"));
    };

    let version: u32 = field(&mut root, "format_version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::model_file(
            "format_version",
            format!("unsupported version {version} (expected {MODEL_FORMAT_VERSION})"),
        ));
    }
    let variant_name: String = field(&mut root, "variant")?;
    let variant: Variant = variant_name
        .parse()
        .map_err(|_| Error::model_file("variant", format!("unknown variant `{variant_name}`")))?;
    let hyperparams: Hyperparams = field(&mut root, "hyperparams")?;
    if hyperparams.variant != variant {
        return Err(Error::model_file("hyperparams.variant", "disagrees with `variant`"));
    }
    let item_ids: Vec<String> = field(&mut root, "vocabulary")?;
    let n: usize = field(&mut root, "n")?;
    let d: usize = field(&mut root, "d")?;
    if item_ids.len() != n {
        return Err(Error::model_file(
            "vocabulary",
            format!("{} ids for n = {n}", item_ids.len()),
        ));
    }
    if d != hyperparams.d {
        return Err(Error::model_file("d", "disagrees with hyperparams.d"));
    }

    let records: Vec<BlockRecord> = field(&mut root, "parameters")?;
    let layout = variant.layout();
    let mut blocks = Vec::with_capacity(records.len());
    for rec in records {
        let block = Block::from_name(&rec.name)
            .ok_or_else(|| Error::model_file(&rec.name, "unknown parameter block"))?;
        let expected = layout.shape(block, n, d).ok_or_else(|| {
            Error::model_file(&rec.name, format!("not part of a {variant} model"))
        })?;
        if (rec.shape[0], rec.shape[1]) != expected {
            return Err(Error::model_file(
                &rec.name,
                format!(
                    "shape {}x{} does not match expected {}x{}",
                    rec.shape[0], rec.shape[1], expected.0, expected.1
                ),
            ));
        }
        if rec.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::model_file(&rec.name, "non-finite value"));
        }
        blocks.push((block, rec.data));
    }
    let params = M2Params::from_blocks(layout, n, d, blocks)
        .map_err(|(block, msg)| Error::model_file(block.name(), msg))?;

    Ok(M2Model {
        params,
        hyperparams,
        item_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(variant: Variant) -> M2Model {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hyperparams = Hyperparams {
            d: 3,
            variant,
            ..Hyperparams::default()
        };
        let mut params = M2Params::init(variant.layout(), 4, 3, &mut rng);
        for block in Block::ALL {
            for x in params.block_mut(block) {
                *x += rng.gen::<f64>() * 1e-7 - 3.3e-8;
            }
        }
        M2Model {
            params,
            hyperparams,
            item_ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        for variant in [Variant::P2, Variant::GP2, Variant::GP2T] {
            let path = dir.path().join("m.json");
            let m = model(variant);
            save_model(&m, &path).unwrap();
            let back = load_model(&path).unwrap();
            for ((b1, x1), (b2, x2)) in m.params.iter().zip(back.params.iter()) {
                assert_eq!(b1, b2);
                let bits1: Vec<u64> = x1.iter().map(|x| x.to_bits()).collect();
                let bits2: Vec<u64> = x2.iter().map(|x| x.to_bits()).collect();
                assert_eq!(bits1, bits2);
            }
            assert_eq!(back, m);
        }
    }

    fn rewrite(path: &Path, edit: impl FnOnce(&mut Value)) {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        edit(&mut v);
        std::fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
    }

    #[test]
    fn wrong_w_shape_names_w() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model(Variant::GP2T), &path).unwrap();
        rewrite(&path, |v| {
            let w = &mut v["parameters"][0];
            assert_eq!(w["name"], "W");
            w["shape"] = serde_json::json!([3, 3]);
            w["data"] = serde_json::json!(vec![0.0; 9]);
        });
        match load_model(&path).unwrap_err() {
            Error::ModelFile { field, .. } => assert_eq!(field, "W"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_version_and_variant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model(Variant::P2), &path).unwrap();
        rewrite(&path, |v| v["format_version"] = serde_json::json!(99));
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::ModelFile { ref field, .. } if field == "format_version"), "{err}");

        save_model(&model(Variant::P2), &path).unwrap();
        rewrite(&path, |v| v["variant"] = serde_json::json!("GP9"));
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::ModelFile { ref field, .. } if field == "variant"), "{err}");
    }
}
