//! Experiment configs shipped with the crate.

use crate::error::{Error, Result};
use crate::runner::RunConfig;

const PRESETS: &[(&str, &str)] = &[
    (
        "theorem1-l1-median",
        include_str!("../presets/theorem1-l1-median.toml"),
    ),
    (
        "cifar-madgrad",
        include_str!("../presets/cifar-madgrad.toml"),
    ),
    (
        "cifar-adagrad",
        include_str!("../presets/cifar-adagrad.toml"),
    ),
    ("cifar-adam", include_str!("../presets/cifar-adam.toml")),
    ("cifar-sgd", include_str!("../presets/cifar-sgd.toml")),
    (
        "imagenet-madgrad",
        include_str!("../presets/imagenet-madgrad.toml"),
    ),
    (
        "fastmri-madgrad",
        include_str!("../presets/fastmri-madgrad.toml"),
    ),
    (
        "iwslt14-madgrad",
        include_str!("../presets/iwslt14-madgrad.toml"),
    ),
    (
        "bookwiki-madgrad",
        include_str!("../presets/bookwiki-madgrad.toml"),
    ),
    (
        "sparse-bow-madgrad",
        include_str!("../presets/sparse-bow-madgrad.toml"),
    ),
    ("adam-stress", include_str!("../presets/adam-stress.toml")),
];

/// Names of all presets, in a fixed order.
pub fn list() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// The TOML source of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn get(name: &str) -> Result<RunConfig> {
    let text = source(name).ok_or_else(|| {
        Error::config(format!(
            "unknown preset `{name}` (expected one of: {})",
            list().join(", ")
        ))
    })?;
    RunConfig::from_toml(text)
}
