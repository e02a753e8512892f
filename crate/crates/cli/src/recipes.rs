//! Checked-in configurations reproducing each figure.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const RECIPES: [(&str, &str); 7] = [
    ("fig2", include_str!("../recipes/fig2.toml")),
    ("fig3", include_str!("../recipes/fig3.toml")),
    ("fig4", include_str!("../recipes/fig4.toml")),
    ("fig5", include_str!("../recipes/fig5.toml")),
    ("fig6", include_str!("../recipes/fig6.toml")),
    ("fig7", include_str!("../recipes/fig7.toml")),
    ("fig8", include_str!("../recipes/fig8.toml")),
];

pub fn names() -> Vec<&'static str> {
    RECIPES.iter().map(|(n, _)| *n).collect()
}

pub fn recipe_text(name: &str) -> CliResult<&'static str> {
    RECIPES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "unknown recipe `{name}`; available: {}",
                names().join(", ")
            ))
        })
}

pub fn figure_recipe(name: &str) -> CliResult<RunConfig> {
    RunConfig::parse(recipe_text(name)?)
}
