use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::MalformedPolicy;
use crate::dedup::{DedupParams, KeeperPolicy};
use crate::error::{Error, Result};
use crate::fingerprint::{DEFAULT_NUM_PERMS, DEFAULT_SHINGLE_SIZE};
use crate::lsh::{BandingScheme, SpillOptions, DEFAULT_BUCKET_CAP};
use crate::quality::{FilterKind, FilterPolicy, MissingFieldPolicy, MissingScorePolicy};

/// Environment variable that overrides [`PipelineConfig::seed`] in frontends.
pub const SEED_ENV_VAR: &str = "CORPUS_DISTILL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    IntraDedup,
    CrossDedup,
    QualityFilter,
    EduFilter,
}

impl StageName {
    pub const DEFAULT_ORDER: [StageName; 4] = [
        StageName::IntraDedup,
        StageName::CrossDedup,
        StageName::QualityFilter,
        StageName::EduFilter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::IntraDedup => "intra_dedup",
            StageName::CrossDedup => "cross_dedup",
            StageName::QualityFilter => "quality_filter",
            StageName::EduFilter => "edu_filter",
        }
    }

    pub fn is_dedup(self) -> bool {
        matches!(self, StageName::IntraDedup | StageName::CrossDedup)
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageName::DEFAULT_ORDER
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinHashConfig {
    pub shingle_size: usize,
    pub num_perms: usize,
}

impl Default for MinHashConfig {
    fn default() -> Self {
        Self {
            shingle_size: DEFAULT_SHINGLE_SIZE,
            num_perms: DEFAULT_NUM_PERMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    /// Sources deduplicated internally by `intra_dedup`; all sources when absent.
    pub intra_sources: Option<Vec<String>>,
    pub verify_threshold: Option<f64>,
    pub bucket_cap: usize,
    /// Spill band tables to disk once this many entries are buffered.
    pub spill_max_entries: Option<usize>,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            intra_sources: None,
            verify_threshold: None,
            bucket_cap: DEFAULT_BUCKET_CAP,
            spill_max_entries: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerCommandConfig {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityFilterConfig {
    pub policy: FilterKind,
    pub applies_to: BTreeSet<String>,
    pub top_fraction: f64,
    /// Score files joined onto in-scope documents. Without scores or a scorer,
    /// labels already present on the records are used.
    pub scores: Vec<PathBuf>,
    pub scorer: Option<ScorerCommandConfig>,
    /// Score file thresholds to check labels against.
    pub scorer_manifest: Option<PathBuf>,
    pub missing_score: MissingScorePolicy,
    pub missing_label: MissingFieldPolicy,
}

impl Default for QualityFilterConfig {
    fn default() -> Self {
        let p = FilterPolicy::default_quality();
        Self {
            policy: p.kind,
            applies_to: p.applies_to,
            top_fraction: p.top_fraction,
            scores: Vec::new(),
            scorer: None,
            scorer_manifest: None,
            missing_score: MissingScorePolicy::Fail,
            missing_label: MissingFieldPolicy::Fail,
        }
    }
}

impl QualityFilterConfig {
    pub fn filter_policy(&self) -> FilterPolicy {
        FilterPolicy {
            kind: self.policy,
            top_fraction: self.top_fraction,
            applies_to: self.applies_to.clone(),
            missing: self.missing_label,
            ..FilterPolicy::new(self.policy, Vec::<String>::new())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EduFilterConfig {
    pub min_integer_score: i64,
    pub applies_to: BTreeSet<String>,
    pub missing: MissingFieldPolicy,
}

impl Default for EduFilterConfig {
    fn default() -> Self {
        let p = FilterPolicy::default_edu();
        Self {
            min_integer_score: p.edu_min_integer_score,
            applies_to: p.applies_to,
            missing: p.missing,
        }
    }
}

impl EduFilterConfig {
    pub fn filter_policy(&self) -> FilterPolicy {
        FilterPolicy {
            edu_min_integer_score: self.min_integer_score,
            missing: self.missing,
            ..FilterPolicy::new(FilterKind::EduThreshold, self.applies_to.iter().cloned())
        }
    }
}

fn default_stages() -> Vec<StageName> {
    StageName::DEFAULT_ORDER.to_vec()
}

/// Declarative description of one corpus build, loaded from TOML.
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; the rayon default when absent.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_stages")]
    pub stages: Vec<StageName>,
    /// Restrict the build to these sources; all manifest sources when absent.
    #[serde(default)]
    pub sources: Option<Vec<String>>,
    /// Keeper order, best first; the manifest ranks when absent.
    #[serde(default)]
    pub ranking: Option<Vec<String>>,
    #[serde(default)]
    pub malformed: MalformedPolicy,
    #[serde(default)]
    pub minhash: MinHashConfig,
    #[serde(default)]
    pub banding: BandingScheme,
    #[serde(default)]
    pub dedup: DedupConfig,
    #[serde(default)]
    pub quality_filter: QualityFilterConfig,
    #[serde(default)]
    pub edu_filter: EduFilterConfig,
}

impl PipelineConfig {
    /// A config with every default, for programmatic use.
    pub fn new(manifest: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            output_dir: output_dir.into(),
            seed: 0,
            parallelism: None,
            stages: default_stages(),
            sources: None,
            ranking: None,
            malformed: MalformedPolicy::Skip,
            minhash: MinHashConfig::default(),
            banding: BandingScheme::default(),
            dedup: DedupConfig::default(),
            quality_filter: QualityFilterConfig::default(),
            edu_filter: EduFilterConfig::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.output_dir);
        self.quality_filter.scores.iter_mut().for_each(fix);
        if let Some(m) = &mut self.quality_filter.scorer_manifest {
            fix(m);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for stage in &self.stages {
            if !seen.insert(stage) {
                return Err(Error::Config(format!("stage {stage} listed twice")));
            }
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.minhash.shingle_size == 0 {
            return Err(Error::Config("shingle_size must be at least 1".into()));
        }
        self.banding.check(self.minhash.num_perms)?;
        if let Some(t) = self.dedup.verify_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!(
                    "verify_threshold {t} outside [0, 1]"
                )));
            }
        }
        if self.dedup.bucket_cap < 2 {
            return Err(Error::Config("bucket_cap must be at least 2".into()));
        }
        let q = &self.quality_filter;
        if !(0.0..=1.0).contains(&q.top_fraction) {
            return Err(Error::Config(format!(
                "top_fraction {} outside [0, 1]",
                q.top_fraction
            )));
        }
        if q.policy == FilterKind::EduThreshold {
            return Err(Error::Config(
                "quality_filter cannot use the edu_threshold policy".into(),
            ));
        }
        if !q.scores.is_empty() && q.scorer.is_some() {
            return Err(Error::Config(
                "quality_filter sets both scores and scorer".into(),
            ));
        }
        if let Some(r) = &self.ranking {
            KeeperPolicy::from_order(r)?;
        }
        Ok(())
    }

    /// Dedup parameters for this config; `spill_dir` hosts spill runs if enabled.
    pub fn dedup_params(&self, spill_dir: Option<&Path>) -> DedupParams {
        DedupParams {
            shingle_size: self.minhash.shingle_size,
            num_perms: self.minhash.num_perms,
            seed: self.seed,
            banding: self.banding,
            verify_threshold: self.dedup.verify_threshold,
            bucket_cap: self.dedup.bucket_cap,
            spill: self.dedup.spill_max_entries.map(|max| SpillOptions {
                dir: spill_dir.map(Path::to_path_buf),
                max_entries_in_memory: max,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_has_default_parameters() {
        let c = PipelineConfig::from_toml_str(
            "manifest = \"m.toml\"\noutput_dir = \"out\"\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.manifest, Path::new("/cfg/m.toml"));
        assert_eq!(c.output_dir, Path::new("/cfg/out"));
        assert_eq!(c.stages, StageName::DEFAULT_ORDER);
        assert_eq!(
            c.minhash,
            MinHashConfig {
                shingle_size: 25,
                num_perms: 128
            }
        );
        assert_eq!(c.banding, BandingScheme { bands: 8, rows: 16 });
        assert_eq!(c.quality_filter.policy, FilterKind::KeepHigh);
        let scope: Vec<_> = c
            .quality_filter
            .applies_to
            .iter()
            .map(String::as_str)
            .collect();
        assert_eq!(scope, ["dolma-cc", "zyda-1"]);
        assert_eq!(c.edu_filter.min_integer_score, 3);
        assert_eq!(c, PipelineConfig::new("/cfg/m.toml", "/cfg/out"));
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
manifest = "/data/manifest.toml"
output_dir = "/data/out"
seed = 7
parallelism = 4
stages = ["cross_dedup", "edu_filter"]
ranking = ["dclm", "fineweb-edu2"]

[minhash]
shingle_size = 5
num_perms = 64

[banding]
bands = 4
rows = 16

[dedup]
verify_threshold = 0.85
bucket_cap = 1000

[quality_filter]
policy = "remove_low"
applies_to = ["zyda-1"]
scores = ["scores.jsonl"]
missing_score = "pass_through"

[edu_filter]
min_integer_score = 2
"#;
        let c = PipelineConfig::from_toml_str(text, Path::new("/base")).unwrap();
        assert_eq!(c.stages, [StageName::CrossDedup, StageName::EduFilter]);
        assert_eq!(
            c.quality_filter.scores,
            [PathBuf::from("/base/scores.jsonl")]
        );
        assert_eq!(
            c.quality_filter.missing_score,
            MissingScorePolicy::PassThrough
        );
        assert_eq!(c.dedup_params(None).num_perms, 64);
        assert_eq!(c.edu_filter.filter_policy().edu_min_integer_score, 2);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = "manifest = \"m\"\noutput_dir = \"o\"\n";
        for extra in [
            "stages = [\"cross_dedup\", \"cross_dedup\"]",
            "stages = [\"dedup\"]",
            "[banding]\nbands = 3\nrows = 16",
            "parallelism = 0",
            "nonsense = 1",
            "ranking = [\"a\", \"a\"]",
            "[dedup]\nverify_threshold = 1.5",
            "[quality_filter]\npolicy = \"edu_threshold\"",
        ] {
            let err = PipelineConfig::from_toml_str(&format!("{base}{extra}\n"), Path::new("."))
                .unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::Config(_) | Error::Banding(_) | Error::Manifest(_)
                ),
                "{extra}: {err}"
            );
        }
    }

    #[test]
    fn missing_file_is_an_environment_error() {
        let err = PipelineConfig::load("/nonexistent/run.toml").unwrap_err();
        assert_eq!(err.category(), crate::ErrorCategory::Environment);
        assert!(err.to_string().contains("/nonexistent/run.toml"));
    }
}
