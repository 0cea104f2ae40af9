use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use flowdpc::baselines::{DbscanConfig, DetectorConfig, IForestConfig, KMeansConfig};
use flowdpc::eval::{default_dpc_settings, MethodSpec, SweepSource, SweepSpec, DEFAULT_VOLUMES};
use flowdpc::ingest::{CategoryMode, SynthConfig};
use flowdpc::pca::PcaConfig;
use flowdpc::pipeline::{FeatureMode, PreprocessConfig};
use flowdpc::{rng, DpcParams, LabeledDataset};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_241_018;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic,
    NslKdd,
    UnswNb15,
    /// A labeled CSV as written by `synth`.
    Csv,
}

/// Synthetic mixture parameters; the seed comes from the root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub dims: usize,
    pub n_clusters: usize,
    pub cluster_spread: f64,
    pub outlier_low: f64,
    pub outlier_high: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let r = SynthConfig::reference();
        Self {
            n_normal: r.n_normal,
            n_anomaly: r.n_anomaly,
            dims: r.dims,
            n_clusters: r.n_clusters,
            cluster_spread: r.cluster_spread,
            outlier_low: r.outlier_low,
            outlier_high: r.outlier_high,
        }
    }
}

impl SynthSection {
    pub fn with_seed(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            n_normal: self.n_normal,
            n_anomaly: self.n_anomaly,
            dims: self.dims,
            n_clusters: self.n_clusters,
            cluster_spread: self.cluster_spread,
            outlier_low: self.outlier_low,
            outlier_high: self.outlier_high,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub source: DatasetSource,
    pub path: Option<PathBuf>,
    /// Handling of categorical values missing from the NSL-KDD lists.
    pub categories: CategoryMode,
    pub synthetic: SynthSection,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            source: DatasetSource::Synthetic,
            path: None,
            categories: CategoryMode::Strict,
            synthetic: SynthSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dpc,
    Kmeans,
    Iforest,
    Dbscan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmeansSection {
    pub k: usize,
    pub max_iters: usize,
    pub quantile: f64,
}

impl Default for KmeansSection {
    fn default() -> Self {
        let d = KMeansConfig::default();
        Self {
            k: d.k,
            max_iters: d.max_iters,
            quantile: d.quantile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IforestSection {
    pub n_trees: usize,
    pub subsample: usize,
    pub threshold: f64,
}

impl Default for IforestSection {
    fn default() -> Self {
        let d = IForestConfig::default();
        Self {
            n_trees: d.n_trees,
            subsample: d.subsample,
            threshold: d.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub volumes: Vec<usize>,
    /// Anomaly share of each synthetic draw.
    pub anomaly_fraction: f64,
    pub methods: Vec<Method>,
    /// Named density peaks settings; baselines run once with their sections.
    pub dpc_settings: BTreeMap<String, DpcParams>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            volumes: DEFAULT_VOLUMES.to_vec(),
            anomaly_fraction: 0.01,
            methods: vec![Method::Dpc, Method::Kmeans, Method::Iforest, Method::Dbscan],
            dpc_settings: default_dpc_settings().into_iter().collect(),
        }
    }
}

/// Everything a command needs. Every key has a default, so `{}` is a
/// complete configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: DatasetSection,
    pub features: FeatureMode,
    pub pca: PcaConfig,
    /// Detector used by `detect`.
    pub method: Method,
    pub dpc: DpcParams,
    pub kmeans: KmeansSection,
    pub iforest: IforestSection,
    pub dbscan: DbscanConfig,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            dataset: DatasetSection::default(),
            features: FeatureMode::Record,
            pca: PcaConfig::default(),
            method: Method::Dpc,
            dpc: DpcParams::default(),
            kmeans: KmeansSection::default(),
            iforest: IforestSection::default(),
            dbscan: DbscanConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Recursively overlays `patch` on `base`. Objects merge key by key, any
/// other value replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}

/// Applies one `key.path=value` override. The value is read as JSON when
/// it parses, otherwise as a bare string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::User(format!("--set expects key=value, got {assignment:?}")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::User(format!(
            "--set has an empty key in {path:?}"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    let mut slot = doc;
    for key in &keys {
        if !slot.is_object() {
            *slot = Value::Object(Default::default());
        }
        slot = slot
            .as_object_mut()
            .expect("just made an object")
            .entry(key.to_string())
            .or_insert(Value::Null);
    }
    *slot = value;
    Ok(())
}

impl RunConfig {
    /// Defaults, then the config file, then each `--set`, in that order.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc =
            serde_json::to_value(RunConfig::default()).expect("default config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::User(format!("cannot read config {}: {e}", path.display()))
            })?;
            let patch: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::User(format!("config {} is not valid JSON: {e}", path.display()))
            })?;
            if !patch.is_object() {
                return Err(CliError::User("config must be a JSON object".into()));
            }
            merge(&mut doc, patch);
        }
        for assignment in overrides {
            apply_override(&mut doc, assignment)?;
        }
        let config: RunConfig = serde_json::from_value(doc)
            .map_err(|e| CliError::User(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let user = |e: String| CliError::User(e);
        match self.dataset.source {
            DatasetSource::Synthetic => self
                .dataset
                .synthetic
                .with_seed(0)
                .validate()
                .map_err(|e| user(e.to_string()))?,
            _ => match &self.dataset.path {
                None => return Err(user("dataset.path is required for file sources".into())),
                Some(p) if !p.is_file() => {
                    return Err(user(format!("dataset.path {} does not exist", p.display())))
                }
                Some(_) => {}
            },
        }
        if let FeatureMode::Window { window, top_k } = &self.features {
            window.validate().map_err(|e| user(e.to_string()))?;
            if *top_k == 0 {
                return Err(user("features.top_k must be at least 1".into()));
            }
        }
        self.pca.validate().map_err(|e| user(e.to_string()))?;
        for method in [Method::Dpc, Method::Kmeans, Method::Iforest, Method::Dbscan] {
            self.detector(method)
                .validate()
                .map_err(|e| user(e.to_string()))?;
        }
        if self.sweep.methods.contains(&Method::Dpc) && self.sweep.dpc_settings.is_empty() {
            return Err(user("sweep.dpc_settings is empty".into()));
        }
        for (name, params) in &self.sweep.dpc_settings {
            params
                .validate()
                .map_err(|e| user(format!("sweep.dpc_settings.{name}: {e}")))?;
        }
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        self.dataset
            .synthetic
            .with_seed(rng::derive_seed(self.seed, rng::DATASET))
    }

    pub fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            features: self.features,
            pca: self.pca,
        }
    }

    /// The detector for `method`, seeded from the root seed.
    pub fn detector(&self, method: Method) -> DetectorConfig {
        match method {
            Method::Dpc => DetectorConfig::Dpc(self.dpc),
            Method::Kmeans => DetectorConfig::Kmeans(KMeansConfig {
                k: self.kmeans.k,
                max_iters: self.kmeans.max_iters,
                quantile: self.kmeans.quantile,
                seed: rng::derive_seed(self.seed, rng::KMEANS),
            }),
            Method::Iforest => DetectorConfig::Iforest(IForestConfig {
                n_trees: self.iforest.n_trees,
                subsample: self.iforest.subsample,
                threshold: self.iforest.threshold,
                seed: rng::derive_seed(self.seed, rng::IFOREST),
            }),
            Method::Dbscan => DetectorConfig::Dbscan(self.dbscan.clone()),
        }
    }

    /// The sweep grid. `loaded` is the file dataset, absent for synthetic
    /// sources.
    pub fn sweep_spec(&self, loaded: Option<(String, Arc<LabeledDataset>)>) -> SweepSpec {
        let mut methods = Vec::new();
        for &method in &self.sweep.methods {
            if method == Method::Dpc {
                for (name, params) in &self.sweep.dpc_settings {
                    methods.push(MethodSpec::new(name, DetectorConfig::Dpc(*params)));
                }
            } else {
                methods.push(MethodSpec::new("default", self.detector(method)));
            }
        }
        let source = match loaded {
            Some((name, data)) => SweepSource::Dataset { name, data },
            None => SweepSource::Synthetic {
                base: self.synth_config(),
                anomaly_fraction: self.sweep.anomaly_fraction,
            },
        };
        SweepSpec {
            volumes: self.sweep.volumes.clone(),
            methods,
            preprocess: self.preprocess(),
            source,
            seed: self.seed,
        }
    }
}
