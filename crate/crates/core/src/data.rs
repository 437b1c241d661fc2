//! Datasets: IDX image/label files, synthetic clusters, splits, batches.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::linalg::matrix::Matrix;
use crate::rng::Rng;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// A labelled dataset with inputs scaled to `[0, 1]`.
///
/// `inputs` is `n x dim`, one example per row; `labels[i] < n_classes`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    /// Copies a contiguous row range into its own dataset.
    pub fn take_rows(&self, start: usize, end: usize) -> Dataset {
        let indices: Vec<usize> = (start..end).collect();
        Dataset {
            inputs: self.inputs.gather_rows(&indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

/// Train/validation partition of one dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::IdxFormat {
                path: self.path.to_path_buf(),
                detail: format!(
                    "truncated: needed {} bytes at offset {}, file has {}",
                    n,
                    self.pos,
                    self.bytes.len()
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn read_u32_be(&mut self) -> Result<u32, Error> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Loads an IDX image/label file pair into a dataset.
///
/// Pixels are scaled by `1/255` into `[0, 1]`. The class count is inferred
/// as `max(label) + 1`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, Error> {
    let image_bytes = fs::read(images_path)?;
    let mut r = ByteReader {
        bytes: &image_bytes,
        pos: 0,
        path: images_path,
    };
    let magic = r.read_u32_be()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::IdxFormat {
            path: images_path.to_path_buf(),
            detail: format!("bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let n = r.read_u32_be()? as usize;
    let rows = r.read_u32_be()? as usize;
    let cols = r.read_u32_be()? as usize;
    let dim = rows * cols;
    if n == 0 || dim == 0 {
        return Err(Error::IdxFormat {
            path: images_path.to_path_buf(),
            detail: format!("degenerate dimensions: {n} images of {rows}x{cols}"),
        });
    }
    let pixels = r.take(n * dim)?;

    let label_bytes = fs::read(labels_path)?;
    let mut r = ByteReader {
        bytes: &label_bytes,
        pos: 0,
        path: labels_path,
    };
    let magic = r.read_u32_be()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::IdxFormat {
            path: labels_path.to_path_buf(),
            detail: format!("bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let n_labels = r.read_u32_be()? as usize;
    if n_labels != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }
    let raw_labels = r.take(n)?;

    let mut inputs = Matrix::zeros(n, dim);
    for (x, &p) in inputs.data_mut().iter_mut().zip(pixels) {
        *x = p as f64 / 255.0;
    }
    let labels: Vec<usize> = raw_labels.iter().map(|&l| l as usize).collect();
    let n_classes = labels.iter().copied().max().unwrap() + 1;
    Ok(Dataset {
        inputs,
        labels,
        n_classes,
    })
}

/// Writes an IDX image file (used for fixtures and for exporting subsets).
pub fn write_idx_images(
    path: &Path,
    rows: usize,
    cols: usize,
    images: &[Vec<u8>],
) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(16 + images.len() * rows * cols);
    bytes.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), rows * cols);
        bytes.extend_from_slice(img);
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes an IDX label file.
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes)?;
    Ok(())
}

/// Standard file names for the four-file IDX train/test layout.
pub fn idx_dir_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    (
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    )
}

/// Loads the `(train, test)` pair from a directory in the standard layout.
pub fn load_idx_dir(dir: &Path) -> Result<(Dataset, Dataset), Error> {
    let (ti, tl, vi, vl) = idx_dir_paths(dir);
    Ok((load_idx(&ti, &tl)?, load_idx(&vi, &vl)?))
}

/// Synthetic Gaussian clusters at fixed orthogonal centers.
///
/// Class `k`'s center puts `0.8` on every coordinate `j` with
/// `j % n_classes == k` and `0` elsewhere, so centers have disjoint support
/// and near-equal norms. Coordinates get `N(0, spread^2)` noise and are
/// clipped back into `[0, 1]`. Examples are laid out class-major: all of
/// class 0, then class 1, and so on.
pub fn synthetic_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    spread: f64,
    rng: &mut Rng,
) -> Result<Dataset, Error> {
    if n_per_class == 0 || n_classes < 2 || dim < n_classes || !(spread >= 0.0) {
        return Err(Error::InvalidArgument {
            op: "synthetic_blobs",
            detail: format!(
                "need n_per_class >= 1, n_classes >= 2, dim >= n_classes, spread >= 0; \
                 got {n_per_class}, {n_classes}, {dim}, {spread}"
            ),
        });
    }
    let n = n_per_class * n_classes;
    let mut inputs = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n_classes {
        for i in 0..n_per_class {
            let row = inputs.row_mut(k * n_per_class + i);
            for (j, x) in row.iter_mut().enumerate() {
                let center = if j % n_classes == k { 0.8 } else { 0.0 };
                let noisy = center + spread * rng.gaussian();
                *x = noisy.clamp(0.0, 1.0);
            }
            labels.push(k);
        }
    }
    Ok(Dataset {
        inputs,
        labels,
        n_classes,
    })
}

/// Splits a dataset into train/validation parts by shuffled indices.
///
/// The validation part receives `round(n * fraction)` examples.
pub fn split(ds: &Dataset, fraction: f64, rng: &mut Rng) -> Result<Split, Error> {
    if !(fraction > 0.0 && fraction < 1.0) || ds.len() < 2 {
        return Err(Error::InvalidArgument {
            op: "split",
            detail: format!(
                "need 0 < fraction < 1 and at least 2 examples; got {} on {} examples",
                fraction,
                ds.len()
            ),
        });
    }
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let n_val = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let gather = |idx: &[usize]| Dataset {
        inputs: ds.inputs.gather_rows(idx),
        labels: idx.iter().map(|&i| ds.labels[i]).collect(),
        n_classes: ds.n_classes,
    };
    Ok(Split {
        train: gather(train_idx),
        validation: gather(val_idx),
    })
}

/// Streaming minibatches with per-epoch reshuffling.
///
/// Each epoch visits every example exactly once; the final batch of an epoch
/// may be short. Crossing an epoch boundary reshuffles with the generator
/// handed in at construction, so the whole batch sequence is a deterministic
/// function of `(dataset, batch_size, seed)`.
pub struct Batches<'a> {
    ds: &'a Dataset,
    batch_size: usize,
    order: Vec<usize>,
    pos: usize,
    rng: Rng,
}

impl<'a> Batches<'a> {
    pub fn new(ds: &'a Dataset, batch_size: usize, mut rng: Rng) -> Result<Self, Error> {
        if batch_size == 0 || batch_size > ds.len() {
            return Err(Error::InvalidArgument {
                op: "Batches::new",
                detail: format!(
                    "batch_size {} outside [1, {}]",
                    batch_size,
                    ds.len()
                ),
            });
        }
        let mut order: Vec<usize> = (0..ds.len()).collect();
        rng.shuffle(&mut order);
        Ok(Batches {
            ds,
            batch_size,
            order,
            pos: 0,
            rng,
        })
    }

    /// Pulls the next minibatch, reshuffling when the epoch is exhausted.
    pub fn next_batch(&mut self) -> (Matrix, Vec<usize>) {
        if self.pos >= self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.pos = 0;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let idx = &self.order[self.pos..end];
        self.pos = end;
        let inputs = self.ds.inputs.gather_rows(idx);
        let labels = idx.iter().map(|&i| self.ds.labels[i]).collect();
        (inputs, labels)
    }
}
