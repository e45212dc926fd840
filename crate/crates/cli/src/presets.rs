//! Figure scenarios shipped with the binary. The values live in the
//! checked-in files under `presets/`.

use anyhow::{Context, Result};
use relaymimo::scenario::Scenario;

pub const PRESETS: [(&str, &str); 7] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8", include_str!("../presets/fig8.toml")),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset(name: &str) -> Result<Scenario> {
    let (_, text) = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .with_context(|| format!("unknown preset {name}; known: {}", names().join(", ")))?;
    text.parse().with_context(|| format!("preset {name}"))
}
