use std::path::Path;

use anyhow::{Context, Result};
use orsearch_core::benchmark::BenchEntry;
use orsearch_core::{AugmentPlan, BenchConfig, HttpConfig, NoiseModel, SearchConfig, SolverConfig};
use serde::Deserialize;

/// Optional TOML file passed with `--config`. Every table may be omitted.
///
/// ```toml
/// seed = 7
///
/// [search]
/// branching = 3
/// epsilon = 0.1
///
/// [noise]
/// logit_stddev = 3.0
///
/// [bench]
/// entries = [{ algorithm = "beam", beam_width = 2 }, { algorithm = "bpp", beam_width = 2 }]
///
/// [augment.positive]
/// rename_sum_index = 2
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub search: SearchConfig,
    pub noise: NoiseModel,
    pub solver: SolverConfig,
    pub http: HttpConfig,
    pub bench: BenchSection,
    pub augment: Option<AugmentPlan>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub entries: Option<Vec<BenchEntry>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn bench_config(&self, seed: u64) -> BenchConfig {
        let defaults = BenchConfig::default();
        BenchConfig {
            entries: self.bench.entries.clone().unwrap_or(defaults.entries),
            search: self.search.clone(),
            noise: self.noise.clone(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use orsearch_core::Algorithm;

    #[test]
    fn documented_example_parses() {
        let cfg: Config = toml::from_str(
            r#"
            seed = 7
            [search]
            branching = 3
            epsilon = 0.1
            [noise]
            logit_stddev = 3.0
            [bench]
            entries = [{ algorithm = "beam", beam_width = 2 }, { algorithm = "bpp", beam_width = 2 }]
            [augment.positive]
            rename_sum_index = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.noise.logit_stddev, 3.0);
        let bench = cfg.bench_config(1);
        assert_eq!(bench.entries[1], BenchEntry::beam(Algorithm::BPP, 2));
        assert_eq!(cfg.augment.unwrap().positive.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("[search]\nbranchy = 2").is_err());
    }
}
