//! Field snapshots: a JSON header plus a CSV body of coefficients.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Field, FourierGrid, SpectralError, TorusGeometry};
use crate::Real;

pub const NORMALIZATION: &str = "sum-exp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    #[serde(rename = "M")]
    pub modes: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub normalization: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    m1: i64,
    m2: i64,
    re: f64,
    im: f64,
}

/// Write `header_path` (JSON) and `body_path` (CSV columns `m1,m2,re,im`,
/// frequencies in increasing order).
pub fn write_snapshot<T: Real>(field: &Field<T>, header_path: &Path, body_path: &Path) -> Result<(), SpectralError> {
    let grid = field.grid();
    let header = SnapshotHeader {
        modes: grid.modes(),
        theta1: grid.geometry().theta1.as_f64(),
        theta2: grid.geometry().theta2.as_f64(),
        normalization: NORMALIZATION.to_string(),
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(header_path)?), &header)
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(body_path)?));
    let half = (grid.modes() / 2) as i64;
    for m1 in -half..half {
        for m2 in -half..half {
            let c = field.coeff((m1, m2)).expect("in grid");
            w.serialize(Row { m1, m2, re: c.re.as_f64(), im: c.im.as_f64() })
                .map_err(|e| SpectralError::Format(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<T: Real>(header_path: &Path, body_path: &Path) -> Result<Field<T>, SpectralError> {
    let header: SnapshotHeader = serde_json::from_reader(BufReader::new(File::open(header_path)?))
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    if header.normalization != NORMALIZATION {
        return Err(SpectralError::Format(format!("unsupported normalization {:?}", header.normalization)));
    }
    let geometry = TorusGeometry::new(T::lit(header.theta1), T::lit(header.theta2))?;
    let mut field = Field::zeros(FourierGrid::new(geometry, header.modes)?);
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(body_path)?));
    for row in r.deserialize() {
        let row: Row = row.map_err(|e| SpectralError::Format(e.to_string()))?;
        field.set((row.m1, row.m2), Complex::new(T::lit(row.re), T::lit(row.im)))?;
    }
    Ok(field)
}
