//! Model checkpoint files (`model.bin`).
//!
//! Little-endian layout:
//!
//! ```text
//! magic    8 bytes   "LXMODEL1"
//! kind     u8        0 linear, 1 mlp, 2 conv
//! c,h,w    3 x u32   input shape
//! classes  u32
//! n        u64       parameter count
//! params   n x f64   flat parameters in Model::param_vec order
//! ```
//!
//! Loading rebuilds the architecture from (kind, shape, classes) and installs
//! the parameters, so a checkpoint is valid exactly when those five fields
//! and the parameter count are consistent.

use crate::error::LabError;
use lumix_core::nn::{init_stream, Model, ModelKind};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"LXMODEL1";

fn kind_tag(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::Linear => 0,
        ModelKind::Mlp => 1,
        ModelKind::Conv => 2,
    }
}

fn tag_kind(tag: u8, path: &Path) -> Result<ModelKind, LabError> {
    match tag {
        0 => Ok(ModelKind::Linear),
        1 => Ok(ModelKind::Mlp),
        2 => Ok(ModelKind::Conv),
        _ => Err(LabError::Data(format!("{}: unknown model kind tag {tag}", path.display()))),
    }
}

fn model_kind(model: &Model) -> ModelKind {
    use lumix_core::nn::layers::Layer;
    if model.layers.iter().any(|l| matches!(l, Layer::Conv3x3 { .. })) {
        ModelKind::Conv
    } else if model.layers.len() > 2 {
        ModelKind::Mlp
    } else {
        ModelKind::Linear
    }
}

/// Writes a checkpoint for `model` at `path`.
pub fn save_model(path: &Path, model: &Model) -> Result<(), LabError> {
    let params = model.param_vec();
    let (c, h, w) = model.input_shape;
    let mut bytes = Vec::with_capacity(8 + 1 + 16 + 8 + 8 * params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.push(kind_tag(model_kind(model)));
    for dim in [c, h, w, model.num_classes] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    bytes.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in &params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

/// Reads a checkpoint back into a ready-to-use model.
pub fn load_model(path: &Path) -> Result<Model, LabError> {
    let bytes = fs::read(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    let fixed = 8 + 1 + 16 + 8;
    if bytes.len() < fixed {
        return Err(LabError::Data(format!("{}: truncated checkpoint ({} bytes)", path.display(), bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(LabError::Data(format!("{}: bad magic, not a model checkpoint", path.display())));
    }
    let kind = tag_kind(bytes[8], path)?;
    let mut dims = [0usize; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        let off = 9 + 4 * i;
        *d = u32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as usize;
    }
    let n = u64::from_le_bytes(bytes[25..33].try_into().expect("8 bytes")) as usize;
    if bytes.len() != fixed + 8 * n {
        return Err(LabError::Data(format!(
            "{}: checkpoint declares {n} parameters but holds {} payload bytes",
            path.display(),
            bytes.len() - fixed
        )));
    }
    let mut params = Vec::with_capacity(n);
    for chunk in bytes[fixed..].chunks_exact(8) {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(LabError::Data(format!("{}: checkpoint holds a non-finite parameter", path.display())));
        }
        params.push(v);
    }
    // Rebuild the architecture, then overwrite the fresh init with the
    // stored parameters.
    let mut model = Model::build(kind, (dims[0], dims[1], dims[2]), dims[3], &mut init_stream(0))
        .map_err(|e| LabError::Data(format!("{}: {e}", path.display())))?;
    model
        .set_param_vec(&params)
        .map_err(|e| LabError::Data(format!("{}: {e}", path.display())))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lumix_core::Tensor;

    fn roundtrip(kind: ModelKind, shape: (usize, usize, usize)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let model = Model::build(kind, shape, 3, &mut init_stream(42)).unwrap();
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.input_shape, model.input_shape);
        assert_eq!(back.num_classes, 3);
        assert_eq!(back.param_vec(), model.param_vec());
        // Same logits on a probe input.
        let x = Tensor::from_vec(
            &[1, shape.0, shape.1, shape.2],
            (0..shape.0 * shape.1 * shape.2).map(|i| (i % 7) as f64 / 7.0).collect(),
        )
        .unwrap();
        assert_eq!(
            model.predict(&x).unwrap().as_slice(),
            back.predict(&x).unwrap().as_slice()
        );
    }

    #[test]
    fn all_architectures_round_trip_bit_exactly() {
        roundtrip(ModelKind::Linear, (1, 4, 4));
        roundtrip(ModelKind::Mlp, (1, 4, 4));
        roundtrip(ModelKind::Conv, (1, 8, 8));
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let model = Model::build(ModelKind::Linear, (1, 2, 2), 2, &mut init_stream(1)).unwrap();
        save_model(&path, &model).unwrap();
        let good = fs::read(&path).unwrap();

        fs::write(&path, b"NOTMODEL").unwrap();
        assert!(load_model(&path).unwrap_err().to_string().contains("truncated"));

        let mut bad = good.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(load_model(&path).unwrap_err().to_string().contains("bad magic"));

        let mut bad = good.clone();
        bad[8] = 9;
        fs::write(&path, &bad).unwrap();
        assert!(load_model(&path).unwrap_err().to_string().contains("kind tag"));

        let mut bad = good.clone();
        bad.truncate(good.len() - 8);
        fs::write(&path, &bad).unwrap();
        assert!(load_model(&path).unwrap_err().to_string().contains("declares"));
    }
}
