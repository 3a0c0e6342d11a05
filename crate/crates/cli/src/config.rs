//! Pipeline configuration: one JSON file, relative paths resolved against the
//! file's directory, then overridden by command-line flags.

use std::path::{Path, PathBuf};

use geoprobe_core::corpus::NegativesMode;
use geoprobe_core::experts::{TargetStat, TopKMode};
use geoprobe_core::generation::{DEFAULT_DRIFT_THRESHOLD, DEFAULT_RS_M};
use geoprobe_core::georep::GraphChoice;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUT: &str = "geoprobe-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw news JSONL for corpus building.
    pub news: Option<PathBuf>,
    /// A `.gprb` dump or a directory of them.
    pub dumps: Option<PathBuf>,
    /// Directory of expert-set JSON files.
    pub experts: Option<PathBuf>,
    pub network: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub names: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Generated-text records JSONL.
    pub generated: Option<PathBuf>,
    /// Reference news corpora compared against generated text.
    pub references: Vec<PathBuf>,
    pub boundaries: Option<PathBuf>,
    pub spans: Option<PathBuf>,
    pub filler: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Paths {
    fn inputs(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.news,
            &self.dumps,
            &self.experts,
            &self.network,
            &self.adjacency,
            &self.gazetteer,
            &self.names,
            &self.templates,
            &self.generated,
            &self.boundaries,
            &self.spans,
            &self.filler,
        ]
        .into_iter()
        .flatten()
        .chain(&self.references)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.news,
            &mut self.dumps,
            &mut self.experts,
            &mut self.network,
            &mut self.adjacency,
            &mut self.gazetteer,
            &mut self.names,
            &mut self.templates,
            &mut self.generated,
            &mut self.boundaries,
            &mut self.spans,
            &mut self.filler,
            &mut self.out,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.references.iter_mut().for_each(fix);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub k: usize,
    pub topk_mode: TopKMode,
    pub target_stat: TargetStat,
    pub louvain_graph: GraphChoice,
    pub rs_m: usize,
    pub seed: u64,
    pub drift_threshold: f64,
    pub jobs: Option<usize>,
    pub source_country: Option<String>,
    pub language: Option<String>,
    pub negatives_mode: NegativesMode,
    pub skip_empty_concepts: bool,
    pub two_hop_ball: bool,
    pub templates_per_concept: usize,
    pub samples_per_prefix: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 50,
            topk_mode: TopKMode::PerLayer,
            target_stat: TargetStat::Mean,
            louvain_graph: GraphChoice::Tree,
            rs_m: DEFAULT_RS_M,
            seed: 0,
            drift_threshold: DEFAULT_DRIFT_THRESHOLD,
            jobs: None,
            source_country: None,
            language: None,
            negatives_mode: NegativesMode::OutOfDomain,
            skip_empty_concepts: false,
            two_hop_ball: false,
            templates_per_concept: 5,
            samples_per_prefix: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub params: Params,
}

/// Values given on the command line; `None` keeps the config value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub topk_mode: Option<TopKMode>,
    pub louvain_graph: Option<GraphChoice>,
    pub rs_m: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fails with [`CliError::MissingInput`] naming `path` when it does not exist.
pub fn require(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput { path: path.to_path_buf() })
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        require(path)?;
        let text = std::fs::read_to_string(path).map_err(crate::error::io_at(path))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let p = &mut self.params;
        p.seed = o.seed.unwrap_or(p.seed);
        p.k = o.k.unwrap_or(p.k);
        p.topk_mode = o.topk_mode.unwrap_or(p.topk_mode);
        p.louvain_graph = o.louvain_graph.unwrap_or(p.louvain_graph);
        p.rs_m = o.rs_m.unwrap_or(p.rs_m);
        if o.jobs.is_some() {
            p.jobs = o.jobs;
        }
        if o.out.is_some() {
            self.paths.out = o.out.clone();
        }
    }

    /// Every referenced input exists and every parameter is in range.
    pub fn validate(&self) -> CliResult<()> {
        for p in self.paths.inputs() {
            require(p)?;
        }
        let p = &self.params;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if p.k == 0 {
            return bad("k must be at least 1");
        }
        if p.rs_m == 0 {
            return bad("rs_m must be at least 1");
        }
        if !(0.0..=1.0).contains(&p.drift_threshold) {
            return bad("drift_threshold must lie in [0, 1]");
        }
        if p.jobs == Some(0) {
            return bad("jobs must be at least 1");
        }
        if p.templates_per_concept == 0 || p.samples_per_prefix == 0 {
            return bad("templates_per_concept and samples_per_prefix must be at least 1");
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("adj.csv"), "a,b\n").unwrap();
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, r#"{"paths": {"adjacency": "adj.csv"}, "params": {"k": 7, "louvain_graph": "full"}}"#).unwrap();
        let cfg = PipelineConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.paths.adjacency.as_deref(), Some(dir.path().join("adj.csv").as_path()));
        assert_eq!(cfg.params.k, 7);
        assert_eq!(cfg.params.louvain_graph, GraphChoice::Full);
        assert_eq!(cfg.params.rs_m, DEFAULT_RS_M);
        cfg.validate().unwrap();
    }

    #[test]
    fn flags_override_config() {
        let mut cfg = PipelineConfig::default();
        cfg.apply(&Overrides { k: Some(3), topk_mode: Some(TopKMode::Global), ..Default::default() });
        assert_eq!(cfg.params.k, 3);
        assert_eq!(cfg.params.topk_mode, TopKMode::Global);
        assert_eq!(cfg.params.seed, 0);
    }

    #[test]
    fn rejects_out_of_range() {
        let mut cfg = PipelineConfig::default();
        cfg.params.drift_threshold = 1.5;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let mut cfg = PipelineConfig::default();
        cfg.paths.adjacency = Some("/nonexistent/adj.csv".into());
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, CliError::MissingInput { .. }));
        assert!(err.to_string().contains("/nonexistent/adj.csv"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"params": {"kk": 1}}"#).unwrap();
        assert!(matches!(PipelineConfig::load(&p), Err(CliError::Config(_))));
    }
}
