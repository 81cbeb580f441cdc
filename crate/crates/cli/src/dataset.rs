//! Labeled-image dataset file format.
//!
//! Little-endian binary, magic `SBD1`:
//!
//! ```text
//! "SBD1" | u32 count | u32 C | u32 H | u32 W | u32 K
//!        | count * C*H*W f32 pixels (channel-major, row-major, in [0,1])
//!        | count u16 labels (each < K)
//! ```
//!
//! The layout is deliberately trivial so real datasets can be exported from
//! any ecosystem with a few lines of code.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sbo_core::oracle::{ImageTensor, Label};
use thiserror::Error;

pub const DATASET_MAGIC: &[u8; 4] = b"SBD1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: not an SBD1 dataset")]
    BadMagic,
    #[error("dataset is empty")]
    Empty,
    #[error("header shape {found:?} does not match expected {expected:?}")]
    ShapeMismatch { expected: (u32, u32, u32), found: (u32, u32, u32) },
    #[error("image {index}: pixel {value} outside [0,1]")]
    PixelOutOfRange { index: usize, value: f32 },
    #[error("image {index}: label {label} exceeds class count {classes}")]
    LabelOverflow { index: usize, label: u16, classes: u32 },
    #[error("unreasonable header field: {0}")]
    BadHeader(&'static str),
}

/// A loaded dataset: images, labels and the class count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<Label>,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.images[0].shape()
    }
}

/// Read a dataset, validating every pixel and label. `expected_shape`, when
/// given, must match the header.
pub fn load_dataset(
    path: &Path,
    expected_shape: Option<(u32, u32, u32)>,
) -> Result<Dataset, DatasetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let count = r.read_u32::<LittleEndian>()?;
    let c = r.read_u32::<LittleEndian>()?;
    let h = r.read_u32::<LittleEndian>()?;
    let w = r.read_u32::<LittleEndian>()?;
    let k = r.read_u32::<LittleEndian>()?;
    if count == 0 {
        return Err(DatasetError::Empty);
    }
    if c == 0 || h == 0 || w == 0 || k == 0 {
        return Err(DatasetError::BadHeader("zero dimension"));
    }
    if let Some(expected) = expected_shape {
        if expected != (c, h, w) {
            return Err(DatasetError::ShapeMismatch { expected, found: (c, h, w) });
        }
    }
    let pixels_per_image = (c * h * w) as usize;
    let mut images = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let mut data = Vec::with_capacity(pixels_per_image);
        for _ in 0..pixels_per_image {
            let v = r.read_f32::<LittleEndian>()?;
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(DatasetError::PixelOutOfRange { index, value: v });
            }
            data.push(v as f64);
        }
        let image = ImageTensor::new(c as usize, h as usize, w as usize, data)
            .expect("pixels validated above");
        images.push(image);
    }
    let mut labels = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let label = r.read_u16::<LittleEndian>()?;
        if u32::from(label) >= k {
            return Err(DatasetError::LabelOverflow { index, label, classes: k });
        }
        labels.push(label as usize);
    }
    Ok(Dataset { images, labels, classes: k as usize })
}

/// Write a dataset in the SBD1 layout.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let (c, h, w) = dataset.shape();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(DATASET_MAGIC)?;
    out.write_u32::<LittleEndian>(dataset.len() as u32)?;
    out.write_u32::<LittleEndian>(c as u32)?;
    out.write_u32::<LittleEndian>(h as u32)?;
    out.write_u32::<LittleEndian>(w as u32)?;
    out.write_u32::<LittleEndian>(dataset.classes as u32)?;
    for image in &dataset.images {
        for &v in &image.data {
            out.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    for &label in &dataset.labels {
        out.write_u16::<LittleEndian>(label as u16)?;
    }
    out.flush()?;
    Ok(())
}
