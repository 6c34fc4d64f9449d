//! Sample-cube file format for cross-implementation comparison.
//!
//! Layout: an 8-byte little-endian header length, a JSON header (dimensions,
//! sample rate, scenario hash, dtype), then the payload as little-endian
//! complex64 values (f32 real, f32 imaginary) in `[n_tx][n_rx][sample]`
//! order.

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::signal::SampleCube;

const DTYPE: &str = "complex64";
const BYTE_ORDER: &str = "little";

#[derive(Debug, Serialize, Deserialize)]
struct CubeHeader {
    n_tx: usize,
    n_rx: usize,
    num_samples: usize,
    sample_rate_hz: f64,
    scenario_sha256: String,
    dtype: String,
    byte_order: String,
}

pub fn write_cube(cube: &SampleCube, mut w: impl Write) -> Result<()> {
    let (n_tx, n_rx, num_samples) = cube.data.dim();
    let header = CubeHeader {
        n_tx,
        n_rx,
        num_samples,
        sample_rate_hz: cube.sample_rate_hz,
        scenario_sha256: cube.scenario.sha256(),
        dtype: DTYPE.to_string(),
        byte_order: BYTE_ORDER.to_string(),
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| Error::CubeFormat(e.to_string()))?;
    w.write_all(&(header_json.len() as u64).to_le_bytes())?;
    w.write_all(&header_json)?;
    let mut payload = Vec::with_capacity(cube.data.len() * 8);
    for v in cube.data.iter() {
        payload.extend_from_slice(&(v.re as f32).to_le_bytes());
        payload.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    w.write_all(&payload)?;
    Ok(())
}

pub fn write_cube_file(cube: &SampleCube, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_cube(cube, std::io::BufWriter::new(file))
}

/// Read a cube written by [`write_cube`]. The scenario is needed to rebuild
/// the metadata; a hash mismatch against the header is an error.
pub fn read_cube(mut r: impl Read, scenario: &ScenarioConfig) -> Result<SampleCube> {
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 1 << 20 {
        return Err(Error::CubeFormat(format!(
            "implausible header length {header_len}"
        )));
    }
    let mut header_json = vec![0u8; header_len];
    r.read_exact(&mut header_json)?;
    let header: CubeHeader =
        serde_json::from_slice(&header_json).map_err(|e| Error::CubeFormat(e.to_string()))?;
    if header.dtype != DTYPE || header.byte_order != BYTE_ORDER {
        return Err(Error::CubeFormat(format!(
            "unsupported payload encoding {}/{}",
            header.dtype, header.byte_order
        )));
    }
    let expected_hash = scenario.sha256();
    if header.scenario_sha256 != expected_hash {
        return Err(Error::CubeFormat(format!(
            "scenario hash mismatch: file has {}, expected {}",
            header.scenario_sha256, expected_hash
        )));
    }
    let count = header.n_tx * header.n_rx * header.num_samples;
    let mut payload = vec![0u8; count * 8];
    r.read_exact(&mut payload)?;
    let mut values = Vec::with_capacity(count);
    for chunk in payload.chunks_exact(8) {
        let re = f32::from_le_bytes(chunk[0..4].try_into().expect("chunk size"));
        let im = f32::from_le_bytes(chunk[4..8].try_into().expect("chunk size"));
        values.push(Complex64::new(re as f64, im as f64));
    }
    let data = Array3::from_shape_vec((header.n_tx, header.n_rx, header.num_samples), values)
        .map_err(|e| Error::CubeFormat(e.to_string()))?;
    SampleCube::new(data, header.sample_rate_hz, scenario.clone())
}

pub fn read_cube_file(path: impl AsRef<Path>, scenario: &ScenarioConfig) -> Result<SampleCube> {
    let file = std::fs::File::open(path)?;
    read_cube(std::io::BufReader::new(file), scenario)
}
