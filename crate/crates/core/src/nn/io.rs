//! Model file format (version 1, little-endian):
//!
//! ```text
//! magic       4 bytes  "DWNN"
//! version     u32      1
//! rng_seed    u64
//! n_layers    u32
//! per layer:
//!   input_dim   u32
//!   output_dim  u32
//!   activation  u8     0 tanh, 1 relu, 2 softmax, 3 linear
//!   dropout     f64
//!   weights     f64 x (output_dim * input_dim), row-major (row = output unit)
//!   bias        f64 x output_dim
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, LayerSpec, Network};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"DWNN";

fn malformed(detail: impl Into<String>) -> Error {
    Error::Malformed {
        what: "model file",
        detail: detail.into(),
    }
}

pub fn write_network<W: Write>(net: &Network, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&net.rng_seed.to_le_bytes())?;
    w.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for layer in &net.layers {
        let s = layer.spec;
        w.write_all(&(s.input_dim as u32).to_le_bytes())?;
        w.write_all(&(s.output_dim as u32).to_le_bytes())?;
        w.write_all(&[s.activation.code()])?;
        w.write_all(&s.dropout_prob.to_le_bytes())?;
        for v in layer.weights.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in layer.bias.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| malformed(format!("truncated: {e}")))?;
    Ok(buf)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(|e| malformed(format!("truncated parameters: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn read_network<R: Read>(mut r: R) -> Result<Network> {
    if &read_exact::<4, _>(&mut r)? != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(read_exact(&mut r)?);
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            what: "model file",
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let rng_seed = u64::from_le_bytes(read_exact(&mut r)?);
    let n_layers = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    if n_layers == 0 {
        return Err(malformed("zero layers"));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let input_dim = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let output_dim = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let [code] = read_exact::<1, _>(&mut r)?;
        let activation = Activation::from_code(code).ok_or_else(|| malformed(format!("activation code {code}")))?;
        let dropout_prob = f64::from_le_bytes(read_exact(&mut r)?);
        let spec = LayerSpec {
            input_dim,
            output_dim,
            activation,
            dropout_prob,
        };
        let weights = Array2::from_shape_vec((output_dim, input_dim), read_f64s(&mut r, input_dim * output_dim)?)
            .map_err(|e| malformed(e.to_string()))?;
        let bias = Array1::from(read_f64s(&mut r, output_dim)?);
        layers.push(Dense { spec, weights, bias });
    }
    for pair in layers.windows(2) {
        if pair[0].spec.output_dim != pair[1].spec.input_dim {
            return Err(malformed("adjacent layer dims disagree"));
        }
    }
    let net = Network { layers, rng_seed };
    if !net.is_finite() {
        return Err(Error::NonFinite("model parameters".into()));
    }
    Ok(net)
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_network(net, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: &Path) -> Result<Network> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_network(BufReader::new(f))
}
