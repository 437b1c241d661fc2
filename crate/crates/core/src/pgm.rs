//! Binary PGM (P5) rendering of prune masks, one image per weight layer.
//!
//! Retained connections are white (255), pruned ones black (0). The image is
//! laid out like the weight matrix itself: one row per output unit, one
//! column per input unit.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::linalg::matrix::Matrix;
use crate::network::PruneMask;

/// Encodes a 0/1 mask layer as a P5 image.
pub fn mask_pgm_bytes(layer: &Matrix) -> Result<Vec<u8>, Error> {
    let mut out = format!("P5\n{} {}\n255\n", layer.cols(), layer.rows()).into_bytes();
    for &v in layer.data() {
        match v {
            v if v == 0.0 => out.push(0),
            v if v == 1.0 => out.push(255),
            other => {
                return Err(Error::InvalidArgument {
                    op: "mask_pgm_bytes",
                    detail: format!("mask entry {other} is not 0 or 1"),
                })
            }
        }
    }
    Ok(out)
}

/// Writes one PGM per layer as `<stem>_layer<l>.pgm`, returning the paths.
pub fn write_mask_layers(
    dir: &Path,
    stem: &str,
    mask: &PruneMask,
) -> Result<Vec<PathBuf>, Error> {
    let mut paths = Vec::with_capacity(mask.layers.len());
    for (idx, layer) in mask.layers.iter().enumerate() {
        let path = dir.join(format!("{}_layer{}.pgm", stem, idx + 1));
        fs::write(&path, mask_pgm_bytes(layer)?)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_exact_p5_bytes() {
        let layer = Matrix::from_vec(2, 3, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let bytes = mask_pgm_bytes(&layer).unwrap();
        let mut expected = b"P5\n3 2\n255\n".to_vec();
        expected.extend([255, 0, 255, 0, 0, 255]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn rejects_fractional_entries() {
        let layer = Matrix::from_vec(1, 2, vec![1.0, 0.5]).unwrap();
        assert!(mask_pgm_bytes(&layer).is_err());
    }

    #[test]
    fn writes_one_file_per_layer() {
        let dir = tempfile::tempdir().unwrap();
        let mask = PruneMask {
            layers: vec![
                Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
                Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap(),
            ],
        };
        let paths = write_mask_layers(dir.path(), "mask", &mask).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[0].ends_with("mask_layer1.pgm"));
        assert!(paths[1].ends_with("mask_layer2.pgm"));
        let bytes = std::fs::read(&paths[1]).unwrap();
        assert_eq!(&bytes[..9], b"P5\n2 1\n25"[..9].as_ref());
        assert_eq!(&bytes[bytes.len() - 2..], &[255, 255]);
    }
}
