//! Named experiment configurations. Each is a TOML file under `presets/`
//! and doubles as an example of the configuration format.

use crate::config::ExperimentConfig;
use crate::CliError;

const PRESETS: [(&str, &str); 8] = [
    ("fig1_tauE1", include_str!("../presets/fig1_tauE1.toml")),
    ("fig1_tauE2", include_str!("../presets/fig1_tauE2.toml")),
    ("fig3_sigma0", include_str!("../presets/fig3_sigma0.toml")),
    ("fig3_sigma005", include_str!("../presets/fig3_sigma005.toml")),
    ("fig3_sigma01", include_str!("../presets/fig3_sigma01.toml")),
    ("bandit_brig_vs_ilarl", include_str!("../presets/bandit_brig_vs_ilarl.toml")),
    ("tabular_regret_sweep", include_str!("../presets/tabular_regret_sweep.toml")),
    ("optimism_check", include_str!("../presets/optimism_check.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Raw TOML text of a preset.
pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| CliError::UnknownPreset {
            name: name.to_string(),
            available: preset_names().join(", "),
        })
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_toml(preset_text(name)?)
}
