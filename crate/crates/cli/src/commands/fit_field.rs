//! `fit-field`: fit the in-plane field model to extracted E_J curves.
//! Curve labels map onto junctions: each `single*` label is its own
//! junction; a `squid_sum`/`squid_diff` pair shares two junctions fitted
//! jointly. All junctions share one GL critical field, fixed or fitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tmfield::dataset::parse_ej_curves;
use tmfield::fit::{fit_ej_field_curves, BcritMode, CurveKind, FieldCurve};

use super::{read_to_string, write_file, write_json, CliError};
use crate::manifest::{DirLock, RunManifest};
use crate::ToleranceProfile;

#[derive(Debug, Serialize)]
pub struct FieldFitArtifact {
    pub b_crit_t: f64,
    pub b_crit_fitted: bool,
    pub junctions: Vec<JunctionRow>,
    pub residual_rms_ghz: f64,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct JunctionRow {
    pub label: String,
    pub ej0_ghz: f64,
    pub b_phi0_t: f64,
    pub ej0_sigma_ghz: f64,
    pub b_phi0_sigma_t: f64,
}

pub fn run(
    curve_paths: &[PathBuf],
    out_dir: &Path,
    bcrit_fixed: Option<f64>,
    bcrit_free_init: Option<f64>,
    profile: ToleranceProfile,
) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    let mut manifest = RunManifest::new(
        "fit-field",
        serde_json::json!({
            "curves": curve_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "out_dir": out_dir.display().to_string(),
            "bcrit": bcrit_fixed,
            "fit_bcrit": bcrit_free_init,
        }),
    );
    manifest.tolerance_profile = Some(profile.name().to_string());

    // gather labeled point sets across all files
    let mut by_label: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for path in curve_paths {
        manifest.add_input(path)?;
        for rec in parse_ej_curves(&read_to_string(path)?)? {
            by_label.entry(rec.junction).or_default().push((rec.b_par_t, rec.ej_ghz));
        }
    }
    if by_label.is_empty() {
        return Err(CliError::Input("no curve records found".into()));
    }

    // map labels to junction slots
    let mut labels: Vec<String> = Vec::new();
    let mut curves: Vec<FieldCurve> = Vec::new();
    let sum = by_label.remove("squid_sum");
    let diff = by_label.remove("squid_diff");
    match (sum, diff) {
        (Some(sum), Some(diff)) => {
            let j1 = labels.len();
            labels.push("squid_jj1".into());
            let j2 = labels.len();
            labels.push("squid_jj2".into());
            curves.push(FieldCurve { kind: CurveKind::Sum(j1, j2), points: sum });
            curves.push(FieldCurve { kind: CurveKind::AbsDiff(j1, j2), points: diff });
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::Input(
                "squid_sum and squid_diff curves must be provided together".into(),
            ));
        }
        (None, None) => {}
    }
    for (label, points) in by_label {
        let j = labels.len();
        labels.push(label);
        curves.push(FieldCurve { kind: CurveKind::Direct(j), points });
    }

    let mode = match (bcrit_fixed, bcrit_free_init) {
        (Some(b), None) => BcritMode::Fixed(b),
        (None, Some(init)) => BcritMode::Free { init_t: init },
        (None, None) => BcritMode::Free { init_t: 1.0 },
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let joint = fit_ej_field_curves(labels.len(), &curves, mode, &profile.fit_options())
        .map_err(|e| CliError::Convergence(e.to_string()))?;

    let base = usize::from(joint.b_crit_fitted);
    let rows: Vec<JunctionRow> = labels
        .iter()
        .zip(&joint.junctions)
        .enumerate()
        .map(|(i, (label, j))| JunctionRow {
            label: label.clone(),
            ej0_ghz: j.ej0_ghz,
            b_phi0_t: j.b_phi0_t,
            ej0_sigma_ghz: joint.fit.uncertainties[base + 2 * i],
            b_phi0_sigma_t: joint.fit.uncertainties[base + 2 * i + 1],
        })
        .collect();

    let artifact = FieldFitArtifact {
        b_crit_t: joint.b_crit_t,
        b_crit_fitted: joint.b_crit_fitted,
        junctions: rows,
        residual_rms_ghz: joint.fit.residual_rms,
        converged: joint.fit.converged(),
    };

    let json_path = out_dir.join("field_fit.json");
    write_json(&json_path, &artifact)?;
    manifest.record_output(&json_path);

    let mut table = String::from(
        "# tmfield field-fit v1\n# columns = junction ej0_ghz b_phi0_t b_crit_t\n",
    );
    for row in &artifact.junctions {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}",
            row.label, row.ej0_ghz, row.b_phi0_t, artifact.b_crit_t
        );
    }
    let table_path = out_dir.join("field_fit.tsv");
    write_file(&table_path, &table)?;
    manifest.record_output(&table_path);
    manifest.write(out_dir)?;

    if !artifact.converged {
        return Err(CliError::Convergence("field-model fit hit the iteration limit".into()));
    }
    Ok(())
}
