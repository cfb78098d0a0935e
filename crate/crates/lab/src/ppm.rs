//! Binary PPM (P6) image dumps, used by `--dump-mixed` to eyeball augmented
//! batches. Single-channel images are replicated to gray; images with three
//! or more channels map channels 0/1/2 to R/G/B; two-channel images fill the
//! blue plane with zeros.

use crate::error::LabError;
use lumix_core::Tensor;
use std::fs;
use std::path::Path;

fn byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes sample `index` of an `[n, c, h, w]` batch as a P6 file.
pub fn write_ppm(path: &Path, batch: &Tensor, index: usize) -> Result<(), LabError> {
    let s = batch.shape();
    if s.len() != 4 {
        return Err(LabError::Data(format!("expected an [n, c, h, w] batch, got {:?}", s)));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    if index >= n {
        return Err(LabError::Data(format!("sample {index} out of batch of {n}")));
    }
    let plane = h * w;
    let img = &batch.as_slice()[index * c * plane..(index + 1) * c * plane];
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * plane);
    for p in 0..plane {
        for ch in 0..3 {
            let v = if c == 1 {
                img[p]
            } else if ch < c {
                img[ch * plane + p]
            } else {
                0.0
            };
            out.push(byte(v));
        }
    }
    fs::write(path, out).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_replicates_and_header_is_correct() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ppm");
        let t = Tensor::from_vec(&[1, 1, 2, 2], vec![0.0, 1.0, 0.5, 0.25]).unwrap();
        write_ppm(&path, &t, 0).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 12);
        assert_eq!(&px[0..3], &[0, 0, 0]);
        assert_eq!(&px[3..6], &[255, 255, 255]);
        assert_eq!(&px[6..9], &[128, 128, 128]);
        assert_eq!(&px[9..12], &[64, 64, 64]);
    }

    #[test]
    fn multichannel_maps_to_rgb_and_bad_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        // Two samples, three channels, 1x1: write sample 1.
        let t = Tensor::from_vec(&[2, 3, 1, 1], vec![0.1, 0.2, 0.3, 1.0, 0.0, 0.5]).unwrap();
        write_ppm(&path, &t, 1).unwrap();
        let bytes = fs::read(&path).unwrap();
        let px = &bytes[bytes.len() - 3..];
        assert_eq!(px, &[255, 0, 128]);
        assert!(write_ppm(&path, &t, 2).is_err());
    }
}
