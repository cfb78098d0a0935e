//! IDX ubyte dataset files.
//!
//! The classic big-endian container: a four-byte magic `0x00 0x00 0x08 d`
//! (unsigned-byte element type, `d` dimensions), `d` big-endian `u32` sizes,
//! then the raw bytes in row-major order.
//!
//! Images are written as 3-dimensional files `[n, h, w]` when they have a
//! single channel (interoperable with the common handwritten-digit corpora)
//! and as 4-dimensional files `[n, c, h, w]` otherwise. Labels are
//! 1-dimensional `[n]`. Pixels map `u8 <-> f64` by `v / 255` on read and
//! `round(v * 255)` after clamping to `[0, 1]` on write.
//!
//! A dataset directory holds four files: `train-images.idx`,
//! `train-labels.idx`, `test-images.idx`, `test-labels.idx`.

use crate::error::LabError;
use lumix_core::data::Dataset;
use lumix_core::Tensor;
use std::fs;
use std::path::Path;

const TYPE_UBYTE: u8 = 0x08;

fn read_file(path: &Path) -> Result<Vec<u8>, LabError> {
    fs::read(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))
}

fn header(ndims: u8, dims: &[usize]) -> Vec<u8> {
    debug_assert_eq!(ndims as usize, dims.len());
    let mut out = vec![0u8, 0u8, TYPE_UBYTE, ndims];
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out
}

/// Parses the magic and dimension list, returning `(dims, payload_offset)`.
fn parse_header(bytes: &[u8], path: &Path, want_dims: &[u8]) -> Result<(Vec<usize>, usize), LabError> {
    if bytes.len() < 4 {
        return Err(LabError::Data(format!("{}: truncated header ({} bytes)", path.display(), bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 || bytes[2] != TYPE_UBYTE {
        return Err(LabError::Data(format!(
            "{}: bad magic {:02x}{:02x}{:02x}{:02x} (expected unsigned-byte idx)",
            path.display(),
            bytes[0],
            bytes[1],
            bytes[2],
            bytes[3]
        )));
    }
    let ndims = bytes[3];
    if !want_dims.contains(&ndims) {
        return Err(LabError::Data(format!(
            "{}: unexpected rank {} (expected one of {:?})",
            path.display(),
            ndims,
            want_dims
        )));
    }
    let hdr = 4 + 4 * ndims as usize;
    if bytes.len() < hdr {
        return Err(LabError::Data(format!("{}: truncated dimension list", path.display())));
    }
    let mut dims = Vec::with_capacity(ndims as usize);
    for i in 0..ndims as usize {
        let off = 4 + 4 * i;
        dims.push(u32::from_be_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as usize);
    }
    let expect: usize = dims.iter().product();
    let have = bytes.len() - hdr;
    if have != expect {
        return Err(LabError::Data(format!(
            "{}: payload holds {} bytes but dimensions {:?} need {}",
            path.display(),
            have,
            dims,
            expect
        )));
    }
    Ok((dims, hdr))
}

/// Writes an image tensor of shape `[n, c, h, w]` as an IDX ubyte file.
pub fn write_images(path: &Path, images: &Tensor) -> Result<(), LabError> {
    let s = images.shape().to_vec();
    if s.len() != 4 {
        return Err(LabError::Data(format!("image tensor must be [n, c, h, w], got {s:?}")));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    let mut bytes = if c == 1 { header(3, &[n, h, w]) } else { header(4, &[n, c, h, w]) };
    bytes.reserve(images.numel());
    for &v in images.as_slice() {
        bytes.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    fs::write(path, bytes).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

/// Reads an IDX ubyte image file (rank 3 or 4) into an `[n, c, h, w]` tensor.
pub fn read_images(path: &Path) -> Result<Tensor, LabError> {
    let bytes = read_file(path)?;
    let (dims, off) = parse_header(&bytes, path, &[3, 4])?;
    let shape: Vec<usize> = match dims.len() {
        3 => vec![dims[0], 1, dims[1], dims[2]],
        _ => dims.clone(),
    };
    let data: Vec<f64> = bytes[off..].iter().map(|&b| b as f64 / 255.0).collect();
    Tensor::from_vec(&shape, data).map_err(|e| LabError::Data(e.to_string()))
}

/// Writes labels as a rank-1 IDX ubyte file. Labels above 255 are rejected.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), LabError> {
    let mut bytes = header(1, &[labels.len()]);
    bytes.reserve(labels.len());
    for &l in labels {
        if l > 255 {
            return Err(LabError::Data(format!("label {l} exceeds the ubyte range of idx files")));
        }
        bytes.push(l as u8);
    }
    fs::write(path, bytes).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

/// Reads a rank-1 IDX ubyte label file.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, LabError> {
    let bytes = read_file(path)?;
    let (_dims, off) = parse_header(&bytes, path, &[1])?;
    Ok(bytes[off..].iter().map(|&b| b as usize).collect())
}

fn read_split(dir: &Path, stem: &str, num_classes: usize) -> Result<Dataset, LabError> {
    let images = read_images(&dir.join(format!("{stem}-images.idx")))?;
    let labels = read_labels(&dir.join(format!("{stem}-labels.idx")))?;
    if images.shape()[0] != labels.len() {
        return Err(LabError::Data(format!(
            "{}: {} images but {} labels in the {stem} split",
            dir.display(),
            images.shape()[0],
            labels.len()
        )));
    }
    Ok(Dataset { images, labels, num_classes })
}

/// Loads the four-file dataset layout from `dir`.
///
/// The class count is taken from the data itself (`max label + 1` across both
/// splits), so any `data.classes` setting is ignored for idx datasets.
pub fn load_dataset(dir: &Path) -> Result<(Dataset, Dataset), LabError> {
    let train_labels = read_labels(&dir.join("train-labels.idx"))?;
    let test_labels = read_labels(&dir.join("test-labels.idx"))?;
    let max = train_labels.iter().chain(test_labels.iter()).copied().max();
    let num_classes = match max {
        None => return Err(LabError::Data(format!("{}: dataset has no samples", dir.display()))),
        Some(m) => (m + 1).max(2),
    };
    let train = read_split(dir, "train", num_classes)?;
    let test = read_split(dir, "test", num_classes)?;
    if train.input_shape() != test.input_shape() {
        return Err(LabError::Data(format!(
            "{}: train images are {:?} but test images are {:?}",
            dir.display(),
            train.input_shape(),
            test.input_shape()
        )));
    }
    Ok((train, test))
}

/// Writes both splits into `dir` using the four-file layout.
pub fn save_dataset(dir: &Path, train: &Dataset, test: &Dataset) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    write_images(&dir.join("train-images.idx"), &train.images)?;
    write_labels(&dir.join("train-labels.idx"), &train.labels)?;
    write_images(&dir.join("test-images.idx"), &test.images)?;
    write_labels(&dir.join("test-labels.idx"), &test.labels)?;
    Ok(())
}
