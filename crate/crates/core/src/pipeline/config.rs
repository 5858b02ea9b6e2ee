use std::fmt::Write as _;
use std::path::Path;

use crate::affinity::{AffinityConfig, FeatureSet};
use crate::embedding::{ArchConfig, TrainingConfig};
use crate::error::{Error, Result};

/// Which trained encoder provides latent distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    /// Snapshot taken before the clustering term switches on.
    Reconstruction,
    /// Final model trained with the clustering term.
    Clustered,
}

/// Encoder shape; the input size comes from the detection patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchSettings {
    pub stages: usize,
    pub filters: usize,
    pub latent_dim: usize,
    pub batchnorm: bool,
}

impl Default for ArchSettings {
    fn default() -> Self {
        ArchSettings {
            stages: 3,
            filters: 8,
            latent_dim: 32,
            batchnorm: false,
        }
    }
}

impl ArchSettings {
    pub fn build(&self, input: (usize, usize, usize)) -> ArchConfig {
        ArchConfig::pyramid(input, self.stages, self.filters, self.latent_dim, self.batchnorm)
    }
}

/// Every tunable of a tracking run. Read from and written to flat
/// `key = value` text; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub max_frame_gap: u32,
    pub lifted_gaps: Vec<u32>,
    /// Lifted edges are kept only below this quantile of their latent distances.
    pub lifted_percentile: f64,
    pub pregroup_threshold: f64,
    pub pregroup_max_gap: u32,
    pub min_cluster_size: usize,
    pub affinity: AffinityConfig,
    pub features: FeatureSet,
    pub embedding: EmbeddingKind,
    pub arch: ArchSettings,
    pub training: TrainingConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_frame_gap: 5,
            lifted_gaps: vec![10, 20, 30],
            lifted_percentile: 0.9,
            pregroup_threshold: 0.7,
            pregroup_max_gap: 3,
            min_cluster_size: 5,
            affinity: AffinityConfig::default(),
            features: FeatureSet::COMBINED,
            embedding: EmbeddingKind::Clustered,
            arch: ArchSettings::default(),
            training: TrainingConfig::default(),
            seed: 0,
        }
    }
}

fn parse_features(v: &str) -> std::result::Result<FeatureSet, String> {
    let mut set = FeatureSet {
        overlap: false,
        distance: false,
        product: false,
    };
    for part in v.split('+').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "iou" => set.overlap = true,
            "d" => set.distance = true,
            "product" => set.product = true,
            other => return Err(format!("unknown feature {other:?} (expected iou, d, product)")),
        }
    }
    Ok(set)
}

fn format_features(f: FeatureSet) -> String {
    let mut parts = Vec::new();
    if f.overlap {
        parts.push("iou");
    }
    if f.distance {
        parts.push("d");
    }
    if f.product {
        parts.push("product");
    }
    parts.join("+")
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty() && *p != "none")
        .map(|p| p.parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_schedule(v: &str) -> std::result::Result<Vec<(usize, f64)>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (e, l) = p.split_once(':').ok_or_else(|| format!("expected epoch:lambda, got {p:?}"))?;
            let e = e.trim().parse::<usize>().map_err(|x| format!("{e:?}: {x}"))?;
            let l = l.trim().parse::<f64>().map_err(|x| format!("{l:?}: {x}"))?;
            Ok((e, l))
        })
        .collect()
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.max_frame_gap == 0 {
            return bad("max_frame_gap must be at least 1".into());
        }
        if let Some(g) = self.lifted_gaps.iter().find(|&&g| g <= self.max_frame_gap) {
            return bad(format!("lifted gap {g} must exceed max_frame_gap {}", self.max_frame_gap));
        }
        if !(0.0..=1.0).contains(&self.lifted_percentile) {
            return bad(format!("lifted_percentile {} outside [0, 1]", self.lifted_percentile));
        }
        if !(0.0..=1.0).contains(&self.pregroup_threshold) || self.pregroup_max_gap == 0 {
            return bad("pregroup_threshold must lie in [0, 1] and pregroup_max_gap be positive".into());
        }
        self.affinity.validate()?;
        self.training.validate()?;
        if self.arch.stages == 0 || self.arch.filters == 0 || self.arch.latent_dim == 0 {
            return bad("arch_stages, arch_filters and latent_dim must be positive".into());
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
        }
        match key {
            "max_frame_gap" => self.max_frame_gap = num(value)?,
            "lifted_gaps" => self.lifted_gaps = parse_list(value)?,
            "lifted_percentile" => self.lifted_percentile = num(value)?,
            "pregroup_threshold" => self.pregroup_threshold = num(value)?,
            "pregroup_max_gap" => self.pregroup_max_gap = num(value)?,
            "min_cluster_size" => self.min_cluster_size = num(value)?,
            "t_low" => self.affinity.t_low = num(value)?,
            "t_high" => self.affinity.t_high = num(value)?,
            "features" => self.features = parse_features(value)?,
            "embedding" => {
                self.embedding = match value {
                    "clustered" => EmbeddingKind::Clustered,
                    "reconstruction" => EmbeddingKind::Reconstruction,
                    other => return Err(format!("unknown embedding {other:?} (expected clustered or reconstruction)")),
                }
            }
            "arch_stages" => self.arch.stages = num(value)?,
            "arch_filters" => self.arch.filters = num(value)?,
            "latent_dim" => self.arch.latent_dim = num(value)?,
            "batchnorm" => self.arch.batchnorm = num(value)?,
            "epochs" => self.training.epochs = num(value)?,
            "learning_rate" => self.training.learning_rate = num(value)?,
            "lambda_schedule" => self.training.lambda_schedule = parse_schedule(value)?,
            "plateau_patience" => {
                self.training.plateau_patience = match value {
                    "none" | "" => None,
                    v => Some(num(v)?),
                }
            }
            "seed" => self.set_seed(num(value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Seeds model initialization and batch order.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.training.seed = seed;
    }

    /// Parses settings on top of the defaults.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, lineno + 1, "expected key = value"))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|m| Error::parse(origin, lineno + 1, m))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[u32]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
            }
        };
        let schedule = self
            .training
            .lambda_schedule
            .iter()
            .map(|(e, l)| format!("{e}:{l}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("max_frame_gap", self.max_frame_gap.to_string());
        kv("lifted_gaps", list(&self.lifted_gaps));
        kv("lifted_percentile", self.lifted_percentile.to_string());
        kv("pregroup_threshold", self.pregroup_threshold.to_string());
        kv("pregroup_max_gap", self.pregroup_max_gap.to_string());
        kv("min_cluster_size", self.min_cluster_size.to_string());
        kv("t_low", self.affinity.t_low.to_string());
        kv("t_high", self.affinity.t_high.to_string());
        kv("features", format_features(self.features));
        let embedding = match self.embedding {
            EmbeddingKind::Clustered => "clustered",
            EmbeddingKind::Reconstruction => "reconstruction",
        };
        kv("embedding", embedding.into());
        kv("arch_stages", self.arch.stages.to_string());
        kv("arch_filters", self.arch.filters.to_string());
        kv("latent_dim", self.arch.latent_dim.to_string());
        kv("batchnorm", self.arch.batchnorm.to_string());
        kv("epochs", self.training.epochs.to_string());
        kv("learning_rate", self.training.learning_rate.to_string());
        kv("lambda_schedule", schedule);
        kv(
            "plateau_patience",
            self.training.plateau_patience.map_or("none".into(), |p| p.to_string()),
        );
        kv("seed", self.seed.to_string());
        out
    }
}
