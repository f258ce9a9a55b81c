//! Application configuration: one TOML file describing providers for every
//! role, pool growth knobs, build and eval defaults, and output paths. Flags
//! override file values; all randomness flows from `global_seed`.
//!
//! API keys are read from the environment variable each provider names; they
//! never appear in the file itself.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gateway::{
    ChatClient, Clock, EmbeddingClient, Gateway, ProviderConfig, RequestLog, RoleId, SystemClock,
    TemplateRegistry,
};
use crate::persona::PoolConfig;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolSection {
    pub seed_profiles: PathBuf,
    pub seed_personalities: PathBuf,
    pub similarity_threshold: f64,
    pub batch_size: usize,
    pub few_shot_count: usize,
    pub stop_accept_rate: f64,
    pub stop_patience: usize,
    pub max_iterations: usize,
    /// Personas to assemble from the profile x personality cross product.
    pub count: usize,
}

impl Default for PoolSection {
    fn default() -> Self {
        let defaults = PoolConfig::new(Vec::new(), 3, 0);
        Self {
            seed_profiles: PathBuf::from("data/seed_profiles.txt"),
            seed_personalities: PathBuf::from("data/seed_personalities.txt"),
            similarity_threshold: defaults.similarity_threshold,
            batch_size: defaults.batch_size,
            few_shot_count: defaults.few_shot_count,
            stop_accept_rate: defaults.stop_accept_rate,
            stop_patience: defaults.stop_patience,
            max_iterations: 3,
            count: 20,
        }
    }
}

impl PoolSection {
    /// Concrete pool settings for one kind, with seeds loaded and the RNG
    /// stream namespaced by kind.
    pub fn to_pool_config(
        &self,
        seed_entries: Vec<String>,
        kind: &str,
        global_seed: u64,
    ) -> PoolConfig {
        PoolConfig {
            similarity_threshold: self.similarity_threshold,
            batch_size: self.batch_size,
            few_shot_count: self.few_shot_count,
            seed_entries,
            stop_accept_rate: self.stop_accept_rate,
            stop_patience: self.stop_patience,
            max_iterations: self.max_iterations,
            rng_seed: derive_seed(global_seed, &["pool", kind]),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub max_turns: usize,
    pub parallelism: usize,
}

impl Default for BuildSection {
    fn default() -> Self {
        Self {
            max_turns: 4,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub max_turns: usize,
    pub parallelism: usize,
    pub cases: PathBuf,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            max_turns: 10,
            parallelism: 4,
            cases: PathBuf::from("data/sample_cases.jsonl"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub pools: PathBuf,
    pub personas: PathBuf,
    pub dataset: PathBuf,
    pub exports: PathBuf,
    pub runs: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            pools: PathBuf::from("out/pools"),
            personas: PathBuf::from("out/personas.jsonl"),
            dataset: PathBuf::from("out/dataset.jsonl"),
            exports: PathBuf::from("out/exports"),
            runs: PathBuf::from("out/runs"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub global_seed: u64,
    /// One chat provider per role; keys are the role names.
    pub providers: BTreeMap<String, ProviderConfig>,
    /// Embedding provider for similarity filtering.
    pub embedding: ProviderConfig,
    /// The model under evaluation.
    pub endpoint: ProviderConfig,
    pub pool: PoolSection,
    pub build: BuildSection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

impl Default for AppConfig {
    fn default() -> Self {
        let providers = RoleId::ALL
            .iter()
            .map(|role| (role.as_str().to_string(), ProviderConfig::default()))
            .collect();
        Self {
            global_seed: 42,
            providers,
            embedding: ProviderConfig::default(),
            endpoint: ProviderConfig::default(),
            pool: PoolSection::default(),
            build: BuildSection::default(),
            eval: EvalSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let config: AppConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Load `path` if it exists, otherwise fall back to the all-mock default
    /// configuration. An explicitly requested file must exist.
    pub fn load_or_default(path: &Path, explicit: bool) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else if explicit {
            Err(Error::Config(format!(
                "config file {} does not exist",
                path.display()
            )))
        } else {
            Ok(Self::default())
        }
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.providers.keys() {
            if !RoleId::ALL.iter().any(|r| r.as_str() == key) {
                return Err(Error::UnknownRole(key.clone()));
            }
        }
        for role in RoleId::ALL {
            let provider = self.providers.get(role.as_str()).ok_or_else(|| {
                Error::Config(format!("providers must cover role {}", role.as_str()))
            })?;
            provider.validate(role.as_str())?;
        }
        self.embedding.validate("embedding")?;
        self.endpoint.validate("endpoint")?;
        if self.pool.count == 0 {
            return Err(Error::Config("pool.count must be at least 1".to_string()));
        }
        if self.build.max_turns == 0 || self.build.parallelism == 0 {
            return Err(Error::Config(
                "build.max_turns and build.parallelism must be at least 1".to_string(),
            ));
        }
        if self.eval.max_turns == 0 || self.eval.parallelism == 0 {
            return Err(Error::Config(
                "eval.max_turns and eval.parallelism must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn provider(&self, role: RoleId) -> Result<&ProviderConfig> {
        self.providers.get(role.as_str()).ok_or_else(|| {
            Error::Config(format!("providers must cover role {}", role.as_str()))
        })
    }

    /// Force every provider (roles, embedding, endpoint) onto one backend.
    pub fn override_backend(&mut self, backend: crate::gateway::Backend) {
        for provider in self.providers.values_mut() {
            provider.backend = backend;
        }
        self.embedding.backend = backend;
        self.endpoint.backend = backend;
    }

    /// Wire up one chat client per role plus the embedder, all sharing a
    /// request log and clock.
    pub fn build_gateway(&self) -> Result<Gateway> {
        let clock: Arc<dyn Clock> = Arc::new(SystemClock);
        let log = RequestLog::new();
        let mut clients = BTreeMap::new();
        for role in RoleId::ALL {
            let provider = self.provider(role)?;
            let client = ChatClient::from_config(
                role.as_str(),
                provider,
                self.global_seed,
                clock.clone(),
                Some(log.clone()),
            )?;
            clients.insert(role, client);
        }
        let embedder = EmbeddingClient::from_config(&self.embedding, clock)?;
        Ok(Gateway::new(
            clients,
            TemplateRegistry::defaults(),
            embedder,
            log,
        ))
    }

    /// Client for the model under evaluation, sharing the gateway's request
    /// log so blindness checks can see its traffic.
    pub fn build_endpoint(&self, gateway: &Gateway) -> Result<Arc<ChatClient>> {
        ChatClient::from_config(
            "evaluated",
            &self.endpoint,
            self.global_seed,
            Arc::new(SystemClock),
            Some(gateway.request_log().clone()),
        )
    }
}
