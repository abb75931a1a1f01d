//! Ensemble checkpoints.
//!
//! Little-endian layout, named-tensor records as in the dataset container:
//!   magic "RPWC" | version u32 | meta_len u64 | metadata JSON
//!   then per member, in order: `m{i}.trainable.{param}` and
//!   `m{i}.prior.{param}` tensors in the model's declaration order.
//!
//! Loading rebuilds the ensemble bitwise: predictions from a loaded
//! checkpoint equal in-memory predictions exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rpwno_core::autodiff::Parameter;
use rpwno_core::ensemble::{Ensemble, RpWno};
use rpwno_core::pde::{
    read_container_header, read_named_tensor, write_container_header, write_named_tensor,
    Normalizer, Problem,
};
use rpwno_core::tensor::Tensor;
use rpwno_core::wno::{WnoConfig, WnoModel};

const RPWC_MAGIC: &[u8; 4] = b"RPWC";
const RPWC_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub problem: Problem,
    pub config: WnoConfig,
    pub beta: f64,
    pub seeds: Vec<u64>,
    pub loss_histories: Vec<Vec<f64>>,
    /// Standardization fitted on the training split; training ran in the
    /// standardized space and predictions are decoded through these.
    pub input_norm: Normalizer,
    pub output_norm: Normalizer,
}

pub fn save_checkpoint(path: &Path, ensemble: &Ensemble, meta: &CheckpointMeta) -> Result<()> {
    if meta.seeds.len() != ensemble.n_c() || meta.loss_histories.len() != ensemble.n_c() {
        bail!(
            "metadata covers {} members, ensemble has {}",
            meta.seeds.len(),
            ensemble.n_c()
        );
    }
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    let meta_json = serde_json::to_vec(meta)?;
    write_container_header(&mut w, RPWC_MAGIC, RPWC_VERSION, &meta_json)?;
    for (i, member) in ensemble.members.iter().enumerate() {
        for p in &member.trainable.params {
            write_named_tensor(&mut w, &format!("m{i}.trainable.{}", p.name), &p.value)?;
        }
        for p in &member.prior.params {
            write_named_tensor(&mut w, &format!("m{i}.prior.{}", p.name), &p.value)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Ensemble, CheckpointMeta)> {
    let mut r = BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    );
    let meta_bytes = read_container_header(&mut r, RPWC_MAGIC, RPWC_VERSION)?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta_bytes)?;

    let mut records: Vec<(String, Tensor)> = Vec::new();
    while let Some(record) = read_named_tensor(&mut r)? {
        records.push(record);
    }
    let mut cursor = 0usize;
    let mut take_model = |prefix: &str| -> Result<WnoModel> {
        let mut params = Vec::new();
        while cursor < records.len() && records[cursor].0.starts_with(prefix) {
            let (name, tensor) = &records[cursor];
            params.push(Parameter::new(&name[prefix.len()..], tensor.clone()));
            cursor += 1;
        }
        WnoModel::from_parts(meta.config.clone(), params)
            .with_context(|| format!("rebuilding model '{prefix}'"))
    };

    let mut members = Vec::with_capacity(meta.seeds.len());
    for (i, &seed) in meta.seeds.iter().enumerate() {
        let trainable = take_model(&format!("m{i}.trainable."))?;
        let prior = take_model(&format!("m{i}.prior."))?;
        members.push(RpWno {
            trainable,
            prior,
            beta: meta.beta,
            seed,
        });
    }
    if cursor != records.len() {
        bail!("checkpoint has {} unexpected trailing tensors", records.len() - cursor);
    }
    Ok((Ensemble { members }, meta))
}
