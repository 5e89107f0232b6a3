//! Library surface of the command-line tool, so integration tests can
//! drive the exact code paths the binary runs without spawning processes.

pub mod commands;
pub mod manifest;

pub const EXIT_INPUT_ERROR: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

/// Named fit-tolerance presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ToleranceProfile {
    /// Production defaults (ftol/xtol 1e-12, 200 iterations).
    Default,
    /// Tighter convergence for regression baselines.
    Strict,
    /// Looser convergence for quick previews.
    Fast,
}

impl ToleranceProfile {
    pub fn fit_options(self) -> tmfield::fit::FitOptions {
        use tmfield::fit::FitOptions;
        match self {
            ToleranceProfile::Default => FitOptions::default(),
            ToleranceProfile::Strict => FitOptions {
                max_iterations: 500,
                ftol: 1e-14,
                xtol: 1e-14,
                gtol: 1e-12,
                ..FitOptions::default()
            },
            ToleranceProfile::Fast => FitOptions {
                max_iterations: 60,
                ftol: 1e-9,
                xtol: 1e-9,
                gtol: 1e-7,
                ..FitOptions::default()
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ToleranceProfile::Default => "default",
            ToleranceProfile::Strict => "strict",
            ToleranceProfile::Fast => "fast",
        }
    }
}
