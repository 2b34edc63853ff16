use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use zebra_core::eval::query::ModelEndpointConfig;
use zebra_core::eval::score::MatchMode;
use zebra_core::{ClueType, GenerationConfig, RedHerringType};

/// Optional overrides read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub generation: GenerationOverrides,
    pub endpoint: ModelEndpointConfig,
    pub evaluation: EvaluationOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationOverrides {
    pub clue_weights: Option<BTreeMap<ClueType, f64>>,
    pub herring_weights: Option<BTreeMap<RedHerringType, f64>>,
    pub max_proposals: Option<usize>,
    pub max_attempts: Option<usize>,
    pub allow_same_category_pairs: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationOverrides {
    pub concurrency: Option<usize>,
    pub match_mode: Option<MatchMode>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

impl GenerationOverrides {
    pub fn apply(&self, cfg: &mut GenerationConfig) {
        // Listed types override the defaults; the rest keep theirs.
        if let Some(w) = &self.clue_weights {
            cfg.clue_weights.extend(w.iter().map(|(&k, &v)| (k, v)));
        }
        if let Some(w) = &self.herring_weights {
            cfg.herring_weights.extend(w.iter().map(|(&k, &v)| (k, v)));
        }
        if let Some(n) = self.max_proposals {
            cfg.max_proposals = n;
        }
        if let Some(n) = self.max_attempts {
            cfg.max_attempts = n;
        }
        if let Some(b) = self.allow_same_category_pairs {
            cfg.allow_same_category_pairs = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_config() {
        let cfg: FileConfig = serde_json::from_str(
            r#"{"generation": {"clue_weights": {"found_at": 2.0, "between": 0.0}},
                "endpoint": {"model": "gpt-4o-mini"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.endpoint.model, "gpt-4o-mini");
        assert_eq!(cfg.endpoint.max_in_flight, 4);
        let weights = cfg.generation.clue_weights.unwrap();
        assert_eq!(weights[&ClueType::FoundAt], 2.0);
    }

    #[test]
    fn weights_merge_into_defaults() {
        let overrides: GenerationOverrides =
            serde_json::from_str(r#"{"clue_weights": {"between": 0.0}}"#).unwrap();
        let mut cfg = GenerationConfig::new("3x3".parse().unwrap(), 0, 0);
        overrides.apply(&mut cfg);
        assert_eq!(cfg.clue_weight(ClueType::Between), 0.0);
        assert_eq!(cfg.clue_weight(ClueType::FoundAt), 1.0);
    }

    #[test]
    fn rejects_unknown_sections() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"generaton": {}}"#).is_err());
    }
}
