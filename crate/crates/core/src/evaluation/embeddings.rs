use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Block, Layout, M2Params};

/// Writes each row of the encoder matrix `W` as `id, dim_0, ..., dim_{d-1}`.
pub fn export_embeddings(params: &M2Params, item_ids: &[String], path: &Path) -> Result<()> {
    if params.layout != Layout::Transition {
        return Err(Error::config("embeddings need a model with a transition encoder"));
    }
    if item_ids.len() != params.n {
        return Err(Error::contract("item id count differs from the model's n"));
    }
    let d = params.d;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|k| format!("dim_{k}")));
    w.write_record(&header)?;
    for (row, id) in params.block(Block::W).chunks(d).zip(item_ids) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`export_embeddings`].
pub fn read_embeddings(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut fields = rec.iter();
        ids.push(fields.next().unwrap_or_default().to_string());
        let row = fields
            .map(|f| f.parse::<f64>().map_err(|e| Error::Format(format!("bad value `{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((ids, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn export_shape_header_and_exact_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = M2Params::zeros(Layout::Transition, 3, 2);
        for x in params.block_mut(Block::W) {
            *x = rng.gen::<f64>() - 0.5;
        }
        let ids: Vec<String> = vec!["x,1".into(), "y".into(), "z".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        export_embeddings(&params, &ids, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "id,dim_0,dim_1");
        assert_eq!(text.lines().count(), 4);

        let (back_ids, rows) = read_embeddings(&path).unwrap();
        assert_eq!(back_ids, ids);
        assert!(rows.iter().all(|r| r.len() == 2));
        let flat: Vec<u64> = rows.concat().iter().map(|x| x.to_bits()).collect();
        let orig: Vec<u64> = params.block(Block::W).iter().map(|x| x.to_bits()).collect();
        assert_eq!(flat, orig);
    }
}
