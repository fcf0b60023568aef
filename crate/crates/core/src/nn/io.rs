//! Model file: magic, version, layer sizes, scaler statistics, then each layer's
//! row-major weights followed by its biases. All numbers little-endian.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Dense, Mlp, MlpModel, Scaler};
use crate::binio::*;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"IRSMLP\0\0";
const VERSION: u32 = 1;
const MAX_WIDTH: u32 = 1 << 24;

impl MlpModel {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        write_u32(w, VERSION)?;
        let sizes = self.net.layer_sizes();
        write_u32(w, sizes.len() as u32)?;
        for s in &sizes {
            write_u32(w, *s as u32)?;
        }
        write_f64s(w, self.scaler.mean.as_slice().unwrap())?;
        write_f64s(w, self.scaler.std.as_slice().unwrap())?;
        for layer in self.net.layers() {
            write_f64s(w, layer.weights.as_slice().unwrap())?;
            write_f64s(w, layer.biases.as_slice().unwrap())?;
        }
        Ok(())
    }

    /// Reads a model, rejecting it when `expected_io` is given and the input or
    /// output width differs.
    pub fn read_from<R: Read>(r: &mut R, expected_io: Option<(usize, usize)>) -> Result<Self> {
        expect_magic(r, MAGIC, "model")?;
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model format version {version}")));
        }
        let count = read_u32(r)?;
        if !(2..=64).contains(&count) {
            return Err(Error::Format(format!("implausible layer count {count}")));
        }
        let mut sizes = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let s = read_u32(r)?;
            if s == 0 || s > MAX_WIDTH {
                return Err(Error::Format(format!("implausible layer width {s}")));
            }
            sizes.push(s as usize);
        }
        let (input, output) = (sizes[0], *sizes.last().unwrap());
        if let Some((ei, eo)) = expected_io {
            if (ei, eo) != (input, output) {
                return Err(Error::Dimension(format!(
                    "model maps {input} -> {output}, expected {ei} -> {eo}"
                )));
            }
        }
        let mean = Array1::from(read_f64_vec(r, input)?);
        let std = Array1::from(read_f64_vec(r, input)?);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let weights = Array2::from_shape_vec((pair[1], pair[0]), read_f64_vec(r, pair[0] * pair[1])?)
                .map_err(|e| Error::Format(e.to_string()))?;
            let biases = Array1::from(read_f64_vec(r, pair[1])?);
            layers.push(Dense { weights, biases });
        }
        Ok(Self { net: Mlp::from_layers(layers)?, scaler: Scaler { mean, std } })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, expected_io: Option<(usize, usize)>) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r, expected_io)
    }
}
