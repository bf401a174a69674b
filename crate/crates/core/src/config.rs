//! Pipeline configuration: one TOML file, overridable through `ATLAS_*`
//! environment variables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusFilter, SourceConfig, SourceDb};
use crate::extraction::ExtractionConfig;
use crate::graph::DEFAULT_THRESHOLD;
use crate::netanalysis::ScoreFormula;
use crate::provider::{Mode, RetryPolicy};
use crate::semantics;

/// Environment variable holding provider credentials; read in live mode only.
pub const API_KEY_VAR: &str = "ATLAS_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{var}: cannot parse `{value}`")]
    Env { var: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSettings {
    pub sources: Vec<SourceConfig>,
    pub filter: CorpusFilter,
    /// Dedupe keeps the record from the earliest source listed here.
    pub priority: Vec<SourceDb>,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            filter: CorpusFilter::default(),
            priority: SourceDb::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub mode: Mode,
    /// Defaults to `cache` inside the work directory. A relative path read
    /// from a file is taken relative to that file.
    pub cache_dir: Option<PathBuf>,
    pub messages_url: String,
    pub embeddings_url: String,
    pub retry: RetryPolicy,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            mode: Mode::Replay,
            cache_dir: None,
            messages_url: "https://api.anthropic.com/v1/messages".into(),
            embeddings_url: "http://127.0.0.1:8000/v1/embeddings".into(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionSettings {
    pub model: String,
    pub parallelism: usize,
    /// Template overrides; the bundled prompts are used when absent.
    pub findings_template: Option<PathBuf>,
    pub triplet_template: Option<PathBuf>,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        Self {
            model: d.model,
            parallelism: d.parallelism,
            findings_template: None,
            triplet_template: None,
        }
    }
}

impl ExtractionSettings {
    pub fn to_config(&self) -> Result<ExtractionConfig, ConfigError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let mut c = ExtractionConfig {
            model: self.model.clone(),
            parallelism: self.parallelism,
            ..ExtractionConfig::default()
        };
        if let Some(p) = &self.findings_template {
            c.findings_template = read(p)?;
        }
        if let Some(p) = &self.triplet_template {
            c.triplet_template = read(p)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemanticsSettings {
    pub embedding_model: String,
    pub eps: f64,
    pub min_pts: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub restarts: usize,
    pub naming_model: String,
    pub name_clusters: bool,
}

impl Default for SemanticsSettings {
    fn default() -> Self {
        Self {
            embedding_model: semantics::DEFAULT_EMBEDDING_MODEL.into(),
            eps: semantics::DEFAULT_EPS,
            min_pts: semantics::DEFAULT_MIN_PTS,
            k_min: semantics::DEFAULT_K_MIN,
            k_max: semantics::DEFAULT_K_MAX,
            seed: 0,
            restarts: 10,
            naming_model: ExtractionConfig::default().model,
            name_clusters: true,
        }
    }
}

impl SemanticsSettings {
    pub fn cluster_config(&self) -> semantics::ClusterConfig {
        semantics::ClusterConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            seed: self.seed,
            restarts: self.restarts,
            ..semantics::ClusterConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSettings {
    pub threshold: usize,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub seed: u64,
    pub score_formula: ScoreFormula,
    pub top_k: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            score_formula: ScoreFormula::default(),
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceSettings {
    pub addr: String,
    pub admin_token: Option<String>,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            admin_token: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AtlasConfig {
    pub work_dir: PathBuf,
    pub corpus: CorpusSettings,
    pub provider: ProviderSettings,
    pub extraction: ExtractionSettings,
    pub semantics: SemanticsSettings,
    pub graph: GraphSettings,
    pub analysis: AnalysisSettings,
    pub service: ServiceSettings,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            work_dir: PathBuf::from("atlas-data"),
            corpus: CorpusSettings::default(),
            provider: ProviderSettings::default(),
            extraction: ExtractionSettings::default(),
            semantics: SemanticsSettings::default(),
            graph: GraphSettings::default(),
            analysis: AnalysisSettings::default(),
            service: ServiceSettings::default(),
        }
    }
}

fn parsed<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env {
        var: var.to_string(),
        value: value.to_string(),
    })
}

impl AtlasConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_path_buf(),
            source,
        })
    }

    /// Reads `path`; relative source paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::from_toml(&text, path)?;
        if let Some(base) = path.parent() {
            let rebase = |p: &mut Option<PathBuf>| {
                if let Some(rel) = p.as_ref().filter(|p| p.is_relative()) {
                    *p = Some(base.join(rel));
                }
            };
            for s in &mut c.corpus.sources {
                rebase(&mut s.path);
            }
            rebase(&mut c.provider.cache_dir);
        }
        Ok(c)
    }

    /// Applies `ATLAS_*` overrides from `vars`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (var, value) in vars {
            match var.as_str() {
                "ATLAS_WORK_DIR" => self.work_dir = PathBuf::from(value),
                "ATLAS_MODE" => self.provider.mode = parsed(&var, &value)?,
                "ATLAS_CACHE_DIR" => self.provider.cache_dir = Some(PathBuf::from(value)),
                "ATLAS_EXTRACTION_MODEL" => self.extraction.model = value,
                "ATLAS_PARALLELISM" => self.extraction.parallelism = parsed(&var, &value)?,
                "ATLAS_EMBEDDING_MODEL" => self.semantics.embedding_model = value,
                "ATLAS_NAMING_MODEL" => self.semantics.naming_model = value,
                "ATLAS_EPS" => self.semantics.eps = parsed(&var, &value)?,
                "ATLAS_MIN_PTS" => self.semantics.min_pts = parsed(&var, &value)?,
                "ATLAS_K_MIN" => self.semantics.k_min = parsed(&var, &value)?,
                "ATLAS_K_MAX" => self.semantics.k_max = parsed(&var, &value)?,
                "ATLAS_SEED" => {
                    self.semantics.seed = parsed(&var, &value)?;
                    self.analysis.seed = self.semantics.seed;
                }
                "ATLAS_THRESHOLD" => self.graph.threshold = parsed(&var, &value)?,
                "ATLAS_SCORE_FORMULA" => self.analysis.score_formula = parsed(&var, &value)?,
                "ATLAS_TOP_K" => self.analysis.top_k = parsed(&var, &value)?,
                "ATLAS_ADDR" => self.service.addr = value,
                "ATLAS_ADMIN_TOKEN" => self.service.admin_token = Some(value),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        match &self.provider.cache_dir {
            Some(dir) => dir.clone(),
            None => self.work_dir.join("cache"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = AtlasConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(AtlasConfig::from_toml(&text, Path::new("x")).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = AtlasConfig::from_toml(
            "work_dir = \"out\"\n[graph]\nthreshold = 3\n[[corpus.sources]]\nsource = \"fixture\"\npath = \"a.json\"\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(c.graph.threshold, 3);
        assert_eq!(c.semantics.eps, 0.2);
        assert_eq!(c.corpus.sources[0].source, SourceDb::Fixture);
        assert_eq!(c.cache_dir(), PathBuf::from("out/cache"));
    }

    #[test]
    fn file_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atlas.toml");
        std::fs::write(
            &path,
            "[provider]\ncache_dir = \"cache\"\n[[corpus.sources]]\nsource = \"acm\"\npath = \"acm.json\"\n",
        )
        .unwrap();
        let c = AtlasConfig::load(&path).unwrap();
        assert_eq!(c.cache_dir(), dir.path().join("cache"));
        assert_eq!(c.corpus.sources[0].path, Some(dir.path().join("acm.json")));
    }

    #[test]
    fn env_overrides() {
        let mut c = AtlasConfig::default();
        c.apply_env([
            ("ATLAS_THRESHOLD".to_string(), "7".to_string()),
            ("ATLAS_MODE".to_string(), "live".to_string()),
            ("ATLAS_SEED".to_string(), "42".to_string()),
            ("HOME".to_string(), "/".to_string()),
        ])
        .unwrap();
        assert_eq!(c.graph.threshold, 7);
        assert_eq!(c.provider.mode, Mode::Live);
        assert_eq!(c.analysis.seed, 42);
        assert!(c.apply_env([("ATLAS_EPS".to_string(), "wide".to_string())]).is_err());
    }
}
