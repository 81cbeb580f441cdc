//! Model weight file format for the built-in oracles.
//!
//! Little-endian binary, magic `SBO1`:
//!
//! ```text
//! "SBO1" | u8 kind | u32 C | u32 H | u32 W | u32 K | [u32 hidden if kind=1]
//!        | f32 weights...
//! ```
//!
//! Weight payloads (all f32, row-major):
//! * kind 0 (linear): `K x (C*H*W)` weights, then `K` biases.
//! * kind 1 (MLP):    `hidden x (C*H*W)` first-layer weights, `hidden`
//!   biases, `K x hidden` output weights, `K` biases.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sbo_core::oracle::{ImageTensor, Label, LinearModel, MlpModel, Oracle, OracleError};
use thiserror::Error;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"SBO1";

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: not an SBO1 weights file")]
    BadMagic,
    #[error("unknown model kind {0}")]
    UnknownKind(u8),
    #[error("unreasonable header field: {0}")]
    BadHeader(&'static str),
}

/// A built-in model loaded from disk, usable directly as an oracle.
#[derive(Debug, Clone)]
pub enum BuiltinModel {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Oracle for BuiltinModel {
    fn classes(&self) -> usize {
        match self {
            BuiltinModel::Linear(m) => m.classes(),
            BuiltinModel::Mlp(m) => m.classes(),
        }
    }

    fn input_shape(&self) -> (usize, usize, usize) {
        match self {
            BuiltinModel::Linear(m) => (m.channels, m.height, m.width),
            BuiltinModel::Mlp(m) => (m.channels, m.height, m.width),
        }
    }

    fn predict_hard(&mut self, image: &ImageTensor) -> Result<Label, OracleError> {
        match self {
            BuiltinModel::Linear(m) => m.predict_hard(image),
            BuiltinModel::Mlp(m) => m.predict_hard(image),
        }
    }

    fn predict_soft(&mut self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        match self {
            BuiltinModel::Linear(m) => m.predict_soft(image),
            BuiltinModel::Mlp(m) => m.predict_soft(image),
        }
    }

    fn supports_soft(&self) -> bool {
        true
    }
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, WeightsError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(f64::from(r.read_f32::<LittleEndian>()?));
    }
    Ok(out)
}

fn write_f32s<W: Write>(w: &mut W, values: &[f64]) -> Result<(), WeightsError> {
    for &v in values {
        w.write_f32::<LittleEndian>(v as f32)?;
    }
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<BuiltinModel, WeightsError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != WEIGHTS_MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let kind = r.read_u8()?;
    let c = r.read_u32::<LittleEndian>()? as usize;
    let h = r.read_u32::<LittleEndian>()? as usize;
    let w = r.read_u32::<LittleEndian>()? as usize;
    let k = r.read_u32::<LittleEndian>()? as usize;
    if c == 0 || h == 0 || w == 0 || k == 0 {
        return Err(WeightsError::BadHeader("zero dimension"));
    }
    let d = c * h * w;
    match kind {
        0 => {
            let weights = read_f32s(&mut r, k * d)?;
            let biases = read_f32s(&mut r, k)?;
            Ok(BuiltinModel::Linear(LinearModel { channels: c, height: h, width: w, weights, biases }))
        }
        1 => {
            let hidden = r.read_u32::<LittleEndian>()? as usize;
            if hidden == 0 {
                return Err(WeightsError::BadHeader("zero hidden width"));
            }
            let w1 = read_f32s(&mut r, hidden * d)?;
            let b1 = read_f32s(&mut r, hidden)?;
            let w2 = read_f32s(&mut r, k * hidden)?;
            let b2 = read_f32s(&mut r, k)?;
            Ok(BuiltinModel::Mlp(MlpModel { channels: c, height: h, width: w, hidden, w1, b1, w2, b2 }))
        }
        other => Err(WeightsError::UnknownKind(other)),
    }
}

pub fn write_weights(path: &Path, model: &BuiltinModel) -> Result<(), WeightsError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(WEIGHTS_MAGIC)?;
    match model {
        BuiltinModel::Linear(m) => {
            out.write_u8(0)?;
            out.write_u32::<LittleEndian>(m.channels as u32)?;
            out.write_u32::<LittleEndian>(m.height as u32)?;
            out.write_u32::<LittleEndian>(m.width as u32)?;
            out.write_u32::<LittleEndian>(m.classes() as u32)?;
            write_f32s(&mut out, &m.weights)?;
            write_f32s(&mut out, &m.biases)?;
        }
        BuiltinModel::Mlp(m) => {
            out.write_u8(1)?;
            out.write_u32::<LittleEndian>(m.channels as u32)?;
            out.write_u32::<LittleEndian>(m.height as u32)?;
            out.write_u32::<LittleEndian>(m.width as u32)?;
            out.write_u32::<LittleEndian>(m.classes() as u32)?;
            out.write_u32::<LittleEndian>(m.hidden as u32)?;
            write_f32s(&mut out, &m.w1)?;
            write_f32s(&mut out, &m.b1)?;
            write_f32s(&mut out, &m.w2)?;
            write_f32s(&mut out, &m.b2)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn f32v(rng: &mut StdRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| f64::from(rng.random_range(-1.0f32..1.0))).collect()
    }

    #[test]
    fn linear_round_trip() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = LinearModel {
            channels: 2,
            height: 3,
            width: 3,
            weights: f32v(&mut rng, 4 * 18),
            biases: f32v(&mut rng, 4),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("linear.sbo1");
        write_weights(&path, &BuiltinModel::Linear(m.clone())).unwrap();
        match load_weights(&path).unwrap() {
            BuiltinModel::Linear(back) => assert_eq!(back, m),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn mlp_round_trip_and_prediction_consistency() {
        let mut rng = StdRng::seed_from_u64(6);
        let m = MlpModel {
            channels: 1,
            height: 4,
            width: 4,
            hidden: 8,
            w1: f32v(&mut rng, 8 * 16),
            b1: f32v(&mut rng, 8),
            w2: f32v(&mut rng, 3 * 8),
            b2: f32v(&mut rng, 3),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlp.sbo1");
        write_weights(&path, &BuiltinModel::Mlp(m.clone())).unwrap();
        let mut back = load_weights(&path).unwrap();
        let mut orig = BuiltinModel::Mlp(m);
        for _ in 0..20 {
            let data: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
            let img = ImageTensor::new(1, 4, 4, data).unwrap();
            assert_eq!(back.predict_hard(&img).unwrap(), orig.predict_hard(&img).unwrap());
        }
    }

    #[test]
    fn bad_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.sbo1");
        std::fs::write(&path, b"JUNKJUNK").unwrap();
        assert!(matches!(load_weights(&path), Err(WeightsError::BadMagic)));

        let path2 = dir.path().join("kind.sbo1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(WEIGHTS_MAGIC);
        bytes.push(9);
        for v in [1u32, 1, 1, 1] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path2, bytes).unwrap();
        assert!(matches!(load_weights(&path2), Err(WeightsError::UnknownKind(9))));
    }
}
