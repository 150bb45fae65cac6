//! Binary container for fields sampled on a grid.
//!
//! Layout of a container file:
//!
//! ```text
//! bytes 0..4    magic "HFK1"
//! bytes 4..8    u32 little-endian: byte length L of the JSON header
//! bytes 8..8+L  JSON header (UTF-8)
//! rest          payload: node_count * components f64 values, little-endian
//! ```
//!
//! The header records the field kind, the grid dimensions (the grid itself
//! is rebuilt deterministically from them on load), the per-node component
//! count, and a human-readable layout note. The payload is node-major; the
//! per-node component order is fixed per kind:
//!
//! - `framing`, `gauge`, `h_tensor`: 9 values, 3x3 row-major
//! - `structure`: 27 values, indices (k, i, j) slowest-to-fastest
//! - `curvature`: 81 values, indices (k, i, j, l) slowest-to-fastest

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureField, StructureField};
use crate::error::{HfError, Result};
use crate::framing::{Framing, GaugeField};
use crate::s3_geometry::{build_grid, Grid, MatrixField};

const MAGIC: [u8; 4] = *b"HFK1";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FieldKind {
    Framing,
    Gauge,
    Structure,
    Curvature,
    HTensor,
}

impl FieldKind {
    fn name(self) -> &'static str {
        match self {
            FieldKind::Framing => "framing",
            FieldKind::Gauge => "gauge",
            FieldKind::Structure => "structure",
            FieldKind::Curvature => "curvature",
            FieldKind::HTensor => "h_tensor",
        }
    }

    fn components(self) -> usize {
        match self {
            FieldKind::Framing | FieldKind::Gauge | FieldKind::HTensor => 9,
            FieldKind::Structure => 27,
            FieldKind::Curvature => 81,
        }
    }

    fn layout(self) -> &'static str {
        match self {
            FieldKind::Framing | FieldKind::Gauge | FieldKind::HTensor => {
                "node-major; per node 3x3 row-major"
            }
            FieldKind::Structure => "node-major; per node (k,i,j) slowest-to-fastest",
            FieldKind::Curvature => "node-major; per node (k,i,j,l) slowest-to-fastest",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    grid: [usize; 3],
    components: usize,
    layout: String,
}

fn write_container(path: &Path, kind: FieldKind, grid: &Grid, values: &[f64]) -> Result<()> {
    let header = Header {
        kind: kind.name().to_string(),
        grid: [grid.n_alpha, grid.n_beta, grid.n_gamma],
        components: kind.components(),
        layout: kind.layout().to_string(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&MAGIC)?;
    out.write_all(&(header_json.len() as u32).to_le_bytes())?;
    out.write_all(&header_json)?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_container(path: &Path, kind: FieldKind) -> Result<(Arc<Grid>, Vec<f64>)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(HfError::InvalidInput(format!(
            "{} is not a field container (bad magic)",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 4];
    input.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    input.read_exact(&mut header_json)?;
    let header: Header = serde_json::from_slice(&header_json)?;
    if header.kind != kind.name() {
        return Err(HfError::InvalidInput(format!(
            "{} holds a '{}' field, expected '{}'",
            path.display(),
            header.kind,
            kind.name()
        )));
    }
    if header.components != kind.components() {
        return Err(HfError::InvalidInput(format!(
            "component count {} does not match kind '{}'",
            header.components,
            kind.name()
        )));
    }
    let grid = Arc::new(build_grid(header.grid[0], header.grid[1], header.grid[2])?);
    let expected = grid.node_count() * kind.components();
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != expected * 8 {
        return Err(HfError::InvalidInput(format!(
            "payload of {} holds {} bytes, expected {}",
            path.display(),
            payload.len(),
            expected * 8
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((grid, values))
}

fn matrices_to_values(field: &MatrixField) -> Vec<f64> {
    let mut values = Vec::with_capacity(field.len() * 9);
    for m in field {
        for i in 0..3 {
            for j in 0..3 {
                values.push(m[(i, j)]);
            }
        }
    }
    values
}

fn values_to_matrices(values: &[f64]) -> MatrixField {
    values
        .chunks_exact(9)
        .map(|c| Matrix3::from_fn(|i, j| c[i * 3 + j]))
        .collect()
}

pub fn save_framing(path: &Path, w: &Framing) -> Result<()> {
    write_container(path, FieldKind::Framing, &w.grid, &matrices_to_values(&w.field))
}

pub fn load_framing(path: &Path) -> Result<Framing> {
    let (grid, values) = read_container(path, FieldKind::Framing)?;
    Framing::new(grid, values_to_matrices(&values))
}

pub fn save_gauge(path: &Path, a: &GaugeField) -> Result<()> {
    write_container(path, FieldKind::Gauge, &a.grid, &matrices_to_values(&a.field))
}

pub fn load_gauge(path: &Path) -> Result<GaugeField> {
    let (grid, values) = read_container(path, FieldKind::Gauge)?;
    GaugeField::new(grid, values_to_matrices(&values))
}

pub fn save_structure(path: &Path, s: &StructureField) -> Result<()> {
    let mut values = Vec::with_capacity(s.c.len() * 27);
    for t in &s.c {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    values.push(t[k][i][j]);
                }
            }
        }
    }
    write_container(path, FieldKind::Structure, &s.grid, &values)
}

pub fn load_structure(path: &Path) -> Result<StructureField> {
    let (grid, values) = read_container(path, FieldKind::Structure)?;
    let c = values
        .chunks_exact(27)
        .map(|ch| {
            let mut t = [[[0.0; 3]; 3]; 3];
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        t[k][i][j] = ch[(k * 3 + i) * 3 + j];
                    }
                }
            }
            t
        })
        .collect();
    Ok(StructureField { grid, c })
}

pub fn save_curvature(path: &Path, r: &CurvatureField) -> Result<()> {
    let mut values = Vec::with_capacity(r.r.len() * 81);
    for t in &r.r {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        values.push(t[k][i][j][l]);
                    }
                }
            }
        }
    }
    write_container(path, FieldKind::Curvature, &r.grid, &values)
}

pub fn load_curvature(path: &Path) -> Result<CurvatureField> {
    let (grid, values) = read_container(path, FieldKind::Curvature)?;
    let r = values
        .chunks_exact(81)
        .map(|ch| {
            let mut t = [[[[0.0; 3]; 3]; 3]; 3];
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        for l in 0..3 {
                            t[k][i][j][l] = ch[((k * 3 + i) * 3 + j) * 3 + l];
                        }
                    }
                }
            }
            t
        })
        .collect();
    Ok(CurvatureField { grid, r })
}
