//! `budget`: per-channel coherence decomposition at requested field points.
//! For the SQUID the budget is evaluated at both sweetspots; the single JJ
//! gets one row per field point.

use std::fmt::Write as _;
use std::path::Path;

use tmfield::coherence::{
    budget, sensitivity, BudgetChannels, BudgetInput, QuasiparticleParams,
};
use tmfield::cpb::transitions_unchecked;
use tmfield::dressed::dispersive_chi;
use tmfield::field::{ej_inplane, ej_squid, gl_gap, SquidParams};
use tmfield::synth::ScenarioConfig;
use tmfield::units::T_TO_MT;

use super::{read_to_string, write_file, CliError};
use crate::manifest::{DirLock, RunManifest};

pub fn run(config_path: &Path, out_dir: &Path, b_par_override: &[f64]) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    let cfg: ScenarioConfig = toml::from_str(&read_to_string(config_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", config_path.display())))?;

    let mut manifest = RunManifest::new(
        "budget",
        serde_json::json!({
            "config": config_path.display().to_string(),
            "out_dir": out_dir.display().to_string(),
            "b_par": b_par_override,
        }),
    );
    manifest.add_input(config_path)?;

    let b_par_list: Vec<f64> = if b_par_override.is_empty() {
        cfg.grid.b_par_list_t.clone()
    } else {
        b_par_override.to_vec()
    };

    let k = tmfield::cpb::DEFAULT_TRUNCATION;
    let pair = |ej: f64| -> Result<(f64, f64), CliError> {
        let ec = cfg.relation.ec_ghz(ej);
        transitions_unchecked(ej, ec, 0.0, k)
            .map_err(|e| CliError::Input(e.to_string()))
    };

    let f01_single_zero = pair(
        ej_inplane(&cfg.single_jj, 0.0).map_err(|e| CliError::Input(e.to_string()))?,
    )?
    .0;
    let ej_sq0 = ej_inplane(&cfg.squid_jj1, 0.0).map_err(|e| CliError::Input(e.to_string()))?
        + ej_inplane(&cfg.squid_jj2, 0.0).map_err(|e| CliError::Input(e.to_string()))?;
    let f01_squid_zero = pair(ej_sq0)?.0;

    let mut out = String::from(
        "# tmfield budget v1\n# columns = device b_par_t point f01_ghz purcell_per_us \
         dielectric_per_us quasiparticle_per_us vortex_per_us gamma1_per_us t1_us \
         photon_per_us flux_ramsey_per_us t2_echo_us t2_star_us charge_dispersion_ghz\n",
    );

    for &b_par in &b_par_list {
        let gap = gl_gap(cfg.film.delta0_ghz, b_par, cfg.single_jj.b_crit_par_t)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let qp =
            QuasiparticleParams { t_bath_k: cfg.coherence.quasiparticle_bath_k, gap_ghz: gap };
        let b0 = cfg.coherence.vortex.b0_offset_t
            + cfg.coherence.b0_trend_deg.to_radians().tan() * b_par;
        let vortex = tmfield::coherence::VortexParams { b0_offset_t: b0, ..cfg.coherence.vortex };

        let ej1 = ej_inplane(&cfg.squid_jj1, b_par).map_err(|e| CliError::Input(e.to_string()))?;
        let ej2 = ej_inplane(&cfg.squid_jj2, b_par).map_err(|e| CliError::Input(e.to_string()))?;
        let squid =
            SquidParams::from_junction_energies(ej1, ej2, cfg.squid_period_t, cfg.squid_offset_t)
                .map_err(|e| CliError::Input(e.to_string()))?;

        // single JJ: one row at the T1-optimal perpendicular field
        let ej_s =
            ej_inplane(&cfg.single_jj, b_par).map_err(|e| CliError::Input(e.to_string()))?;
        let rows: Vec<(&str, &str, f64, f64, f64, f64)> = vec![
            // device, point, ej, b_perp, slope_a, sensitivity
            ("single_jj", "b0", ej_s, b0, 0.0, 0.0),
            ("squid", "top", ej_squid(&squid, cfg.squid_offset_t), cfg.squid_offset_t, 0.0, 0.0),
            (
                "squid",
                "bottom",
                ej_squid(&squid, cfg.squid_offset_t + cfg.squid_period_t / 2.0),
                cfg.squid_offset_t + cfg.squid_period_t / 2.0,
                0.0,
                0.0,
            ),
        ];

        for (device, point, ej, b_perp, _, _) in rows {
            let ec = cfg.relation.ec_ghz(ej);
            let (f01, f02h) = transitions_unchecked(ej, ec, 0.0, k)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let g = cfg.cavity.coupling.g_ghz(f01);
            let chi =
                dispersive_chi(f01, 2.0 * (f02h - f01), g, cfg.cavity.f_cavity_ghz).unwrap_or(0.0);
            let (slope_a, sens) = if device == "squid" {
                let s = sensitivity(&squid, &cfg.relation, b_perp)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                (cfg.coherence.vibration_slope_per_t * b_par, s / T_TO_MT)
            } else {
                (0.0, 0.0)
            };
            let input = BudgetInput {
                f01_ghz: f01,
                f01_zero_field_ghz: if device == "squid" {
                    f01_squid_zero
                } else {
                    f01_single_zero
                },
                ej_ghz: ej,
                ec_ghz: ec,
                b_par_t: b_par,
                b_perp_t: b_perp,
                b_crit_par_t: cfg.single_jj.b_crit_par_t,
                g_ghz: g,
                f_cavity_ghz: cfg.cavity.f_cavity_ghz,
                kappa_ghz: cfg.cavity.f_cavity_ghz / cfg.cavity.q_total,
                q_background: cfg.coherence.q_background,
                t_cavity_k: cfg.coherence.t_cavity_k,
                quasiparticle: qp,
                vortex,
                chi_ghz: chi,
                ramsey_slope_a: slope_a,
                sensitivity_ghz_per_mt: sens,
            };
            let b = budget(&input, &BudgetChannels::default())
                .map_err(|e| CliError::Input(e.to_string()))?;
            let _ = writeln!(
                out,
                "{device}\t{b_par}\t{point}\t{f01}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                b.purcell_per_us,
                b.dielectric_per_us,
                b.quasiparticle_per_us,
                b.vortex_per_us,
                b.gamma1_per_us,
                b.t1_us,
                b.photon_per_us,
                b.flux_ramsey_per_us,
                b.t2_echo_us,
                b.t2_star_us,
                b.charge_dispersion_ghz
            );
        }
    }

    let path = out_dir.join("budget.tsv");
    write_file(&path, &out)?;
    manifest.record_output(&path);
    manifest.write(out_dir)
}
