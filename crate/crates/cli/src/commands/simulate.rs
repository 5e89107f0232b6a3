//! `simulate`: scenario config in, datasets out.

use std::path::Path;

use tmfield::synth::{generate_dataset, ScenarioConfig};

use super::{read_to_string, write_file, write_json, CliError};
use crate::manifest::{DirLock, RunManifest};

pub fn run(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    let text = read_to_string(config_path)?;
    let mut cfg: ScenarioConfig = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", config_path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }

    let out = generate_dataset(&cfg).map_err(|e| CliError::Input(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::json!({
            "config": config_path.display().to_string(),
            "out_dir": out_dir.display().to_string(),
        }),
    );
    manifest.seed = Some(cfg.seed);
    manifest.add_input(config_path)?;

    let files = [
        ("single_jj_spectroscopy.tsv", out.single_spectroscopy.serialize()),
        ("squid_spectroscopy.tsv", out.squid_spectroscopy.serialize()),
        ("single_jj_coherence.tsv", out.single_coherence.serialize()),
        ("squid_coherence.tsv", out.squid_coherence.serialize()),
    ];
    for (name, contents) in files {
        let path = out_dir.join(name);
        write_file(&path, &contents)?;
        manifest.record_output(&path);
    }

    // the resolved config doubles as the ground-truth record for roundtrips
    let truth_path = out_dir.join("ground_truth.json");
    write_json(&truth_path, &cfg)?;
    manifest.record_output(&truth_path);

    manifest.write(out_dir)
}
