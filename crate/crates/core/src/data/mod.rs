//! Datasets: IDX (MNIST) ingestion and deterministic synthetic toy sets.

pub mod idx;
mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

pub use idx::{
    maybe_decompress, parse_idx_header, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels,
    IdxHeader, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use synthetic::{make_synthetic, Regime, SYNTHETIC_DIM};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MNIST_CLASSES: usize = 10;

/// Features (one sample per row) with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl DatasetSplit {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::Format(format!(
                "label {l} at index {i} is outside 0..{num_classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    /// Assembles a split from IDX image and label files (raw or gzipped).
    pub fn from_idx(images: &[u8], labels: &[u8], num_classes: usize) -> Result<Self> {
        Self::new(parse_idx_images(images)?, parse_idx_labels(labels)?, num_classes)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Rows `indices` as a feature batch plus matching labels.
    pub fn batch(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        (
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Train and test splits that share a feature dimension and class count.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: DatasetSplit,
    pub test: DatasetSplit,
}

impl Dataset {
    pub fn new(train: DatasetSplit, test: DatasetSplit) -> Result<Self> {
        if train.dim() != test.dim() || train.num_classes() != test.num_classes() {
            return Err(Error::Consistency(format!(
                "train is {}-d/{} classes, test is {}-d/{} classes",
                train.dim(),
                train.num_classes(),
                test.dim(),
                test.num_classes()
            )));
        }
        Ok(Self { train, test })
    }
}

const MNIST_FILES: [(&str, &str); 2] = [
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
];

/// Finds `<dir>/<stem>` or `<dir>/<stem>.gz`.
fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    let plain = dir.join(stem);
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} (or .gz) not found", plain.display()),
    )))
}

/// Whether `dir` holds all four MNIST files (plain or gzipped).
pub fn mnist_available(dir: &Path) -> bool {
    MNIST_FILES
        .iter()
        .flat_map(|(a, b)| [a, b])
        .all(|stem| locate(dir, stem).is_ok())
}

/// Loads the standard MNIST train/test files from `dir`.
pub fn load_mnist(dir: &Path) -> Result<Dataset> {
    let load = |(images, labels): (&str, &str)| -> Result<DatasetSplit> {
        let images = fs::read(locate(dir, images)?)?;
        let labels = fs::read(locate(dir, labels)?)?;
        DatasetSplit::from_idx(&images, &labels, MNIST_CLASSES)
    };
    Dataset::new(load(MNIST_FILES[0])?, load(MNIST_FILES[1])?)
}
