//! CSV and JSON artefacts. Floats are written with 17 significant digits so
//! that files round-trip exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::ShootingPoint;
use crate::romdyn::{BackbonePoint, PolarFixedPoint};
use crate::validity::{Status, ValidityEstimate};

/// Formats `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// One line of a validity summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub criterion: String,
    pub rho_star: Option<f64>,
    pub u_max: Option<f64>,
    pub epsilon: f64,
    pub order: usize,
    pub status: Status,
}

impl Summary {
    pub fn new(est: &ValidityEstimate, u_max: Option<f64>, epsilon: f64, order: usize) -> Self {
        Summary {
            criterion: est.criterion.name().to_string(),
            rho_star: est.rho_star,
            u_max,
            epsilon,
            order,
            status: est.status,
        }
    }
}

/// Per-direction radii: `criterion,theta,phi,rho`, empty `rho` where none was found.
pub fn write_angle_csv<W: Write>(out: W, estimates: &[ValidityEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["criterion", "theta", "phi", "rho"])?;
    for est in estimates {
        for s in &est.samples {
            w.write_record([est.criterion.name().to_string(), fmt17(s.theta), fmt17(s.phi), opt17(s.rho)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(mut out: W, rows: &[Summary]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_backbone_csv<W: Write>(out: W, points: &[BackbonePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rho", "omega_nl", "u_max"])?;
    for p in points {
        w.write_record([fmt17(p.rho), fmt17(p.omega_nl), fmt17(p.u_max)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frc_csv<W: Write>(out: W, branches: &[Vec<PolarFixedPoint>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "rho", "phi", "u_max", "stable"])?;
    for p in branches.iter().flatten() {
        w.write_record([fmt17(p.omega), fmt17(p.rho), fmt17(p.phi), fmt17(p.u_max), p.stable.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Shooting results with the columns of [`write_frc_csv`]; `rho` and `phi` stay empty.
pub fn write_shooting_csv<W: Write>(out: W, branches: &[Vec<ShootingPoint>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "rho", "phi", "u_max", "stable"])?;
    for p in branches.iter().flatten() {
        w.write_record([fmt17(p.omega), String::new(), String::new(), fmt17(p.amplitude), p.stable.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
