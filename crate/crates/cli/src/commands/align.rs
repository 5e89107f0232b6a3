//! `align`: magnet-axis misalignment from an alignment scan, emitting the
//! software rotation to apply to subsequent field settings.

use std::path::Path;

use serde::Serialize;
use tmfield::dataset::parse_alignment_scan;
use tmfield::fit::{fit_alignment, AlignmentFit};
use tmfield::fit::offsets::AlignmentPoint;

use super::{read_to_string, write_json, CliError};
use crate::manifest::{DirLock, RunManifest};

#[derive(Debug, Serialize)]
pub struct AlignmentArtifact {
    pub misalignment_angle_deg: f64,
    pub angle_sigma_deg: f64,
    /// Perpendicular correction per unit in-plane field: the rotation to
    /// apply in software before setting coil currents.
    pub correction_slope: f64,
    pub intercept_t: f64,
    pub excluded_rows: Vec<usize>,
}

impl From<&AlignmentFit> for AlignmentArtifact {
    fn from(f: &AlignmentFit) -> Self {
        Self {
            misalignment_angle_deg: f.misalignment_angle_rad.to_degrees(),
            angle_sigma_deg: f.angle_sigma_rad.to_degrees(),
            correction_slope: f.correction_slope,
            intercept_t: f.intercept_t,
            excluded_rows: f.excluded_rows.clone(),
        }
    }
}

pub fn run(dataset_path: &Path, period_t: f64, out_dir: &Path) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    let records = parse_alignment_scan(&read_to_string(dataset_path)?)?;
    if records.is_empty() {
        return Err(CliError::Input(format!(
            "{}: alignment scan has no rows",
            dataset_path.display()
        )));
    }

    let mut manifest = RunManifest::new(
        "align",
        serde_json::json!({
            "dataset": dataset_path.display().to_string(),
            "period": period_t,
            "out_dir": out_dir.display().to_string(),
        }),
    );
    manifest.add_input(dataset_path)?;

    let points: Vec<AlignmentPoint> = records
        .iter()
        .map(|r| AlignmentPoint { b_inplane_t: r.b_y_t, arch_offset_t: r.arch_offset_t })
        .collect();
    let fit = fit_alignment(&points, period_t)
        .map_err(|e| CliError::Convergence(e.to_string()))?;

    let path = out_dir.join("alignment.json");
    write_json(&path, &AlignmentArtifact::from(&fit))?;
    manifest.record_output(&path);
    manifest.write(out_dir)
}
