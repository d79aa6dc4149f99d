//! Checkpoint files: magic, a length-prefixed JSON header, then each
//! layer's weights and biases as length-prefixed little-endian `f64` arrays.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Activation, Autoencoder, Hyper, Layer, Standardization};

const MAGIC: &[u8; 8] = b"FIFTHAE1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an autoencoder checkpoint")]
    BadMagic,
    #[error("bad checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("array {index} has length {found}, expected {expected}")]
    Shape { index: usize, expected: usize, found: usize },
}

#[derive(Serialize, Deserialize)]
struct Header {
    sizes: [usize; 5],
    activations: [Activation; 4],
    hyper: Hyper,
    standardization: Standardization,
    active_mask: Vec<bool>,
}

pub fn write_checkpoint(ae: &Autoencoder, out: &mut impl Write) -> Result<(), CheckpointError> {
    let header = Header {
        sizes: ae.sizes,
        activations: ae.layers.each_ref().map(|l| l.activation),
        hyper: ae.hyper,
        standardization: ae.standardization.clone(),
        active_mask: ae.active_mask.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for layer in &ae.layers {
        for array in [&layer.weights, &layer.biases] {
            out.write_all(&(array.len() as u64).to_le_bytes())?;
            for v in array {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u64(input: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_array(input: &mut impl Read, index: usize, expected: usize) -> Result<Vec<f64>, CheckpointError> {
    let found = read_u64(input)? as usize;
    if found != expected {
        return Err(CheckpointError::Shape { index, expected, found });
    }
    (0..found).map(|_| Ok(f64::from_bits(read_u64(input)?))).collect()
}

pub fn read_checkpoint(input: &mut impl Read) -> Result<Autoencoder, CheckpointError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let len = read_u64(input)? as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    let [f, h, k, _, _] = header.sizes;
    let mut ae = Autoencoder::zeros(f, h, k, header.hyper);
    ae.sizes = header.sizes;
    for (i, layer) in ae.layers.iter_mut().enumerate() {
        let (inputs, outputs) = (header.sizes[i], header.sizes[i + 1]);
        *layer = Layer {
            inputs,
            outputs,
            weights: read_array(input, 2 * i, inputs * outputs)?,
            biases: read_array(input, 2 * i + 1, outputs)?,
            activation: header.activations[i],
        };
    }
    ae.standardization = header.standardization;
    ae.active_mask = header.active_mask;
    Ok(ae)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoenc::{plane_dataset, train};
    use crate::rng::SeededRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let data = plane_dataset(40, 6, 3);
        let mut ae = Autoencoder::new(6, 7, 4, Hyper::default(), &mut SeededRng::new(2));
        train(&mut ae, &data, 3, 4).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&ae, &mut bytes).unwrap();
        let back = read_checkpoint(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, ae);
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(read_checkpoint(&mut &b"NOTAMODELFILE..."[..]), Err(CheckpointError::BadMagic)));
    }
}
