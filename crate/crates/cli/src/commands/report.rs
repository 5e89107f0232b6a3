//! `report`: assemble columnar plot-data files from datasets.
//!
//! Outputs, one file per figure-style panel:
//! - `spectrum_vs_bperp.tsv`   — transitions along each perpendicular sweep
//! - `spectrum_vs_bpar.tsv`    — per-B_par frequency extremes per device
//! - `coherence_vs_bperp.tsv`  — T1/T2 along each perpendicular sweep
//! - `coherence_vs_bpar.tsv`   — per-B_par top-5% coherence summaries
//! - `dephasing_vs_bpar.tsv`   — pure echo dephasing rates vs B_par

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tmfield::coherence::pure_dephasing;
use tmfield::dataset::{CoherenceDataset, SpectroscopyDataset};

use super::{read_to_string, write_file, CliError};
use crate::manifest::{DirLock, RunManifest};

pub fn run(
    spectroscopy: &[PathBuf],
    coherence: &[PathBuf],
    out_dir: &Path,
) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    if spectroscopy.is_empty() && coherence.is_empty() {
        return Err(CliError::Input("report needs at least one dataset".into()));
    }

    let mut manifest = RunManifest::new(
        "report",
        serde_json::json!({
            "spectroscopy": spectroscopy.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "coherence": coherence.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "out_dir": out_dir.display().to_string(),
        }),
    );

    let mut spec_sets = Vec::new();
    for p in spectroscopy {
        manifest.add_input(p)?;
        let ds = SpectroscopyDataset::parse(&read_to_string(p)?)?;
        if ds.records.is_empty() {
            return Err(CliError::Input(format!("{}: dataset has no records", p.display())));
        }
        spec_sets.push(ds);
    }
    let mut coh_sets = Vec::new();
    for p in coherence {
        manifest.add_input(p)?;
        let ds = CoherenceDataset::parse(&read_to_string(p)?)?;
        if ds.records.is_empty() {
            return Err(CliError::Input(format!("{}: dataset has no records", p.display())));
        }
        coh_sets.push(ds);
    }

    if !spec_sets.is_empty() {
        // raw transitions along each sweep
        let mut out = String::from(
            "# tmfield report-spectrum-vs-bperp v1\n# columns = device sweep_id b_par_t \
             b_perp_t transition freq_ghz\n",
        );
        for ds in &spec_sets {
            for r in &ds.records {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    ds.header.device,
                    r.sweep_id,
                    r.b_par_t,
                    r.b_perp_t,
                    r.transition.as_str(),
                    r.freq_ghz
                );
            }
        }
        let path = out_dir.join("spectrum_vs_bperp.tsv");
        write_file(&path, &out)?;
        manifest.record_output(&path);

        // per-B_par frequency envelope (sweetspot extremes for the SQUID)
        let mut out = String::from(
            "# tmfield report-spectrum-vs-bpar v1\n# columns = device b_par_t f01_min_ghz \
             f01_max_ghz n_points\n",
        );
        for ds in &spec_sets {
            let mut by_bpar: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
            for r in &ds.records {
                if r.transition.as_str().starts_with("f01") {
                    let e = by_bpar
                        .entry(r.b_par_t.to_bits())
                        .or_insert((f64::INFINITY, f64::NEG_INFINITY, 0));
                    e.0 = e.0.min(r.freq_ghz);
                    e.1 = e.1.max(r.freq_ghz);
                    e.2 += 1;
                }
            }
            for (bits, (lo, hi, n)) in by_bpar {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{lo}\t{hi}\t{n}",
                    ds.header.device,
                    f64::from_bits(bits)
                );
            }
        }
        let path = out_dir.join("spectrum_vs_bpar.tsv");
        write_file(&path, &out)?;
        manifest.record_output(&path);
    }

    if !coh_sets.is_empty() {
        let mut out = String::from(
            "# tmfield report-coherence-vs-bperp v1\n# columns = device sweep_id b_par_t \
             b_perp_t t1_us t2_star_us t2_echo_us\n",
        );
        for ds in &coh_sets {
            for r in &ds.records {
                let fmt = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x}"));
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    ds.header.device,
                    r.sweep_id,
                    r.b_par_t,
                    r.b_perp_t,
                    fmt(r.t1_us),
                    fmt(r.t2_star_us),
                    fmt(r.t2_echo_us)
                );
            }
        }
        let path = out_dir.join("coherence_vs_bperp.tsv");
        write_file(&path, &out)?;
        manifest.record_output(&path);

        // top-5% summaries per B_par (mean of the best 5%, min 1 point)
        let mut out = String::from(
            "# tmfield report-coherence-vs-bpar v1\n# columns = device b_par_t t1_top5_us \
             t2_star_top5_us t2_echo_top5_us n_points\n",
        );
        for ds in &coh_sets {
            let mut by_bpar: BTreeMap<u64, Vec<&tmfield::dataset::CoherenceRecord>> =
                BTreeMap::new();
            for r in &ds.records {
                by_bpar.entry(r.b_par_t.to_bits()).or_default().push(r);
            }
            for (bits, recs) in by_bpar {
                let top5 = |f: &dyn Fn(&tmfield::dataset::CoherenceRecord) -> Option<f64>| {
                    let mut v: Vec<f64> = recs.iter().filter_map(|r| f(r)).collect();
                    if v.is_empty() {
                        return "-".to_string();
                    }
                    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    let n = (v.len() as f64 * 0.05).ceil().max(1.0) as usize;
                    let mean = v[..n].iter().sum::<f64>() / n as f64;
                    format!("{mean}")
                };
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    ds.header.device,
                    f64::from_bits(bits),
                    top5(&|r| r.t1_us),
                    top5(&|r| r.t2_star_us),
                    top5(&|r| r.t2_echo_us),
                    recs.len()
                );
            }
        }
        let path = out_dir.join("coherence_vs_bpar.tsv");
        write_file(&path, &out)?;
        manifest.record_output(&path);

        // pure echo dephasing
        let mut out = String::from(
            "# tmfield report-dephasing-vs-bpar v1\n# columns = device b_par_t b_perp_t \
             gamma_phi_echo_per_us negative_artifact\n",
        );
        for ds in &coh_sets {
            for r in &ds.records {
                if let (Some(t1), Some(t2e)) = (r.t1_us, r.t2_echo_us) {
                    if let Ok(d) = pure_dephasing(t2e, t1) {
                        let _ = writeln!(
                            out,
                            "{}\t{}\t{}\t{}\t{}",
                            ds.header.device,
                            r.b_par_t,
                            r.b_perp_t,
                            d.rate_per_us,
                            d.negative_artifact
                        );
                    }
                }
            }
        }
        let path = out_dir.join("dephasing_vs_bpar.tsv");
        write_file(&path, &out)?;
        manifest.record_output(&path);
    }

    manifest.write(out_dir)
}
