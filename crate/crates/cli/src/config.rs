use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use roadboost::boost::TrainConfig;
use roadboost::dataset::{Archetype, SyntheticConfig};
use roadboost::haar::{build_index, FeatureIndex, HaarKernelType};
use roadboost::harness::Query;
use roadboost::mining::{CullConfig, MiningConfig};
use serde::Deserialize;

/// Whole configuration file. Sections not used by a subcommand are ignored
/// but still checked for unknown keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub features: FeatureSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub mine: MineSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub roc: RocSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    pub n_pos: usize,
    pub n_neg: usize,
    pub patch_size: usize,
    pub noise_level: f64,
    pub n_videos: usize,
    pub archetypes: Vec<String>,
    pub id_prefix: String,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        Self {
            n_pos: d.n_pos,
            n_neg: d.n_neg,
            patch_size: d.patch_size,
            noise_level: d.noise_level,
            n_videos: d.n_videos,
            archetypes: vec!["bright_body".to_string()],
            id_prefix: d.id_prefix,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub patch_size: usize,
    pub translation_stride: usize,
    pub scale_stride: usize,
    /// Kernel names; empty means all eight.
    pub kernels: Vec<String>,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self {
            patch_size: 24,
            translation_stride: 2,
            scale_stride: 2,
            kernels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub dataset: Option<PathBuf>,
    pub max_rounds: usize,
    /// Negative disables the training-error stop.
    pub error_floor: f64,
    pub plateau_window: usize,
    pub plateau_tol: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            dataset: None,
            max_rounds: 50,
            error_floor: 0.0,
            plateau_window: 0,
            plateau_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MineSection {
    pub initial: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub p: f64,
    pub max_iterations: usize,
    pub complexity_cap: usize,
    pub error_tol: f64,
    pub plateau_window: usize,
    pub duplicate_radius: f64,
    pub neighborhood_cap: usize,
    pub noise_weight_percentile: f64,
    pub noise_persistence: usize,
}

impl Default for MineSection {
    fn default() -> Self {
        let m = MiningConfig::default();
        Self {
            initial: None,
            population: None,
            p: m.p,
            max_iterations: m.max_iterations,
            complexity_cap: m.complexity_cap,
            error_tol: m.error_tol,
            plateau_window: m.plateau_window,
            duplicate_radius: m.cull.duplicate_radius,
            neighborhood_cap: m.cull.neighborhood_cap,
            noise_weight_percentile: m.cull.noise_weight_percentile,
            noise_persistence: m.cull.noise_persistence,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub dataset: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub query: String,
    pub run_id: String,
    pub max_retries: u32,
    /// Probability that a task gets injected failures.
    pub fault_rate: f64,
    /// Injected failures per faulty task are drawn from `1..=fault_max`.
    pub fault_max: u32,
    pub fault_seed: Option<u64>,
    pub max_failed_fraction: Option<f64>,
    /// Exit non-zero when overall accuracy falls below this.
    pub min_accuracy: Option<f64>,
    pub archive: Option<PathBuf>,
    pub dry_run: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            dataset: None,
            classifier: None,
            query: "*".to_string(),
            run_id: "run".to_string(),
            max_retries: 3,
            fault_rate: 0.0,
            fault_max: 1,
            fault_seed: None,
            max_failed_fraction: None,
            min_accuracy: None,
            archive: None,
            dry_run: false,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RocSection {
    pub dataset: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    /// Extra thresholds swept in addition to every distinct score.
    pub thresholds: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    /// Output directory; it must already exist.
    pub fn out_dir(&self) -> Result<&Path> {
        let out = self.out.as_deref().context("no output directory (set `out` or pass --out)")?;
        if !out.is_dir() {
            bail!("output directory {} does not exist", out.display());
        }
        Ok(out)
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.workers() == 0 {
            bail!("workers must be at least 1");
        }
        Ok(())
    }

    pub fn synthetic(&self) -> Result<SyntheticConfig> {
        let c = &self.corpus;
        let archetypes = c
            .archetypes
            .iter()
            .map(|a| match a.as_str() {
                "bright_body" => Ok(Archetype::BrightBody),
                "headlights" => Ok(Archetype::Headlights),
                other => bail!("unknown archetype {other:?} (bright_body, headlights)"),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SyntheticConfig {
            n_pos: c.n_pos,
            n_neg: c.n_neg,
            patch_size: c.patch_size,
            noise_level: c.noise_level,
            seed: self.seed(),
            n_videos: c.n_videos,
            archetypes,
            id_prefix: c.id_prefix.clone(),
        })
    }

    pub fn feature_index(&self) -> Result<FeatureIndex> {
        let f = &self.features;
        let kernels = if f.kernels.is_empty() {
            HaarKernelType::ALL.to_vec()
        } else {
            f.kernels
                .iter()
                .map(|k| k.parse::<HaarKernelType>().map_err(anyhow::Error::msg))
                .collect::<Result<Vec<_>>>()?
        };
        build_index(f.patch_size, f.patch_size, &kernels, f.translation_stride, f.scale_stride)
            .context("cannot build feature index")
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let cfg = TrainConfig {
            max_rounds: t.max_rounds,
            error_floor: (t.error_floor >= 0.0).then_some(t.error_floor),
            plateau_window: t.plateau_window,
            plateau_tol: t.plateau_tol,
            parallel_width: self.workers(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mining_config(&self) -> Result<MiningConfig> {
        let m = &self.mine;
        let cfg = MiningConfig {
            p: m.p,
            max_iterations: m.max_iterations,
            complexity_cap: m.complexity_cap,
            error_tol: m.error_tol,
            plateau_window: m.plateau_window,
            seed: self.seed(),
            cull: CullConfig {
                duplicate_radius: m.duplicate_radius,
                neighborhood_cap: m.neighborhood_cap,
                noise_weight_percentile: m.noise_weight_percentile,
                noise_persistence: m.noise_persistence,
                ..CullConfig::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate_eval(&self) -> Result<()> {
        let e = &self.eval;
        Query::parse(&e.query)?;
        if !(0.0..=1.0).contains(&e.fault_rate) {
            bail!("eval.fault_rate must be in [0, 1], got {}", e.fault_rate);
        }
        if e.fault_rate > 0.0 && e.fault_max == 0 {
            bail!("eval.fault_max must be at least 1 when fault_rate > 0");
        }
        if let Some(f) = e.max_failed_fraction {
            if !(0.0..=1.0).contains(&f) {
                bail!("eval.max_failed_fraction must be in [0, 1], got {f}");
            }
        }
        if let Some(a) = e.min_accuracy {
            if !(0.0..=1.0).contains(&a) {
                bail!("eval.min_accuracy must be in [0, 1], got {a}");
            }
        }
        Ok(())
    }
}

pub fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value.as_deref().with_context(|| format!("missing `{key}` in config"))
}
