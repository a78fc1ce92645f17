use std::path::{Path, PathBuf};

use irf_core::{ConfigError, RerankConfig, UpmConfig};
use serde::{Deserialize, Serialize};

/// Service configuration. Relative paths are resolved against the
/// directory of the config file by [`GatewayConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub recommender_base_url: String,
    pub user_service_base_url: String,
    pub item_service_base_url: String,
    pub user_update_enabled: bool,
    pub item_desc_enabled: bool,
    pub n_recommendations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub w_session: f64,
    pub w_perm: f64,
    pub lambda: f64,
    pub epsilon_prune: f64,
    pub k_explain: usize,
    /// Entries shown by the profile view.
    pub k_profile: usize,
    pub ask_threshold: usize,
    pub request_timeout_ms: u64,
    pub workspace_path: PathBuf,
    pub messages_path: PathBuf,
    pub persistence_path: PathBuf,
    /// Item corpus file used instead of `item/all` when the item service
    /// cannot list its catalog.
    pub corpus_path: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        let upm = UpmConfig::default();
        Self {
            recommender_base_url: "http://127.0.0.1:9000/".into(),
            user_service_base_url: "http://127.0.0.1:9000/".into(),
            item_service_base_url: "http://127.0.0.1:9000/".into(),
            user_update_enabled: true,
            item_desc_enabled: true,
            n_recommendations: 10,
            alpha: RerankConfig::default().alpha,
            beta: 0.5,
            w_session: upm.w_session,
            w_perm: upm.w_perm,
            lambda: upm.lambda,
            epsilon_prune: upm.epsilon_prune,
            k_explain: 3,
            k_profile: 10,
            ask_threshold: 5,
            request_timeout_ms: 2000,
            workspace_path: "workspace.json".into(),
            messages_path: "messages.json".into(),
            persistence_path: "prefs".into(),
            corpus_path: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigLoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

fn absolute_url(name: &'static str, url: &str) -> Result<(), ConfigError> {
    let rest = url.strip_prefix("http://").or_else(|| url.strip_prefix("https://"));
    match rest {
        Some(host) if !host.is_empty() && !host.starts_with('/') => Ok(()),
        _ => Err(ConfigError::Inconsistent(format!(
            "`{name}` must be an absolute http(s) URL, got `{url}`"
        ))),
    }
}

fn positive(name: &'static str, value: usize) -> Result<(), ConfigError> {
    if value == 0 {
        return Err(ConfigError::OutOfRange {
            name,
            value: 0.0,
            range: "[1, inf)",
        });
    }
    Ok(())
}

impl GatewayConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigLoadError> {
        let path = path.as_ref();
        let raw = std::fs::read(path).map_err(|source| ConfigLoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: GatewayConfig = serde_json::from_slice(&raw).map_err(|source| ConfigLoadError::Parse {
            path: path.to_owned(),
            source,
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.workspace_path,
            &mut self.messages_path,
            &mut self.persistence_path,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = self.corpus_path.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        absolute_url("recommender_base_url", &self.recommender_base_url)?;
        absolute_url("user_service_base_url", &self.user_service_base_url)?;
        absolute_url("item_service_base_url", &self.item_service_base_url)?;
        positive("n_recommendations", self.n_recommendations)?;
        positive("k_explain", self.k_explain)?;
        positive("k_profile", self.k_profile)?;
        positive("request_timeout_ms", self.request_timeout_ms as usize)?;
        self.rerank().validate()?;
        self.upm().validate()?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ConfigError::OutOfRange {
                name: "beta",
                value: self.beta,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    pub fn rerank(&self) -> RerankConfig {
        RerankConfig { alpha: self.alpha }
    }

    pub fn upm(&self) -> UpmConfig {
        UpmConfig {
            w_session: self.w_session,
            w_perm: self.w_perm,
            lambda: self.lambda,
            epsilon_prune: self.epsilon_prune,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        GatewayConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_file_falls_back_to_defaults() {
        let cfg: GatewayConfig = serde_json::from_str(r#"{"n_recommendations": 5}"#).unwrap();
        assert_eq!(cfg.n_recommendations, 5);
        assert_eq!(cfg.k_explain, 3);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |f: fn(&mut GatewayConfig)| {
            let mut c = GatewayConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.alpha = 1.5));
        assert!(bad(|c| c.beta = -0.1));
        assert!(bad(|c| c.w_perm = 0.9));
        assert!(bad(|c| c.n_recommendations = 0));
        assert!(bad(|c| c.recommender_base_url = "localhost:9000".into()));
        assert!(serde_json::from_str::<GatewayConfig>(r#"{"alhpa": 0.5}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = GatewayConfig::default();
        c.resolve_paths(Path::new("/etc/irf"));
        assert_eq!(c.workspace_path, Path::new("/etc/irf/workspace.json"));
        assert_eq!(c.persistence_path, Path::new("/etc/irf/prefs"));
    }
}
