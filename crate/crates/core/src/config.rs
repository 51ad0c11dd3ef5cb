//! Pipeline configuration.
//!
//! Every threshold the pipeline applies lives here as a config knob so that
//! sensitivity sweeps only need a different config file (or flag), never a
//! rebuild. All keys are optional in the file; missing keys take the defaults
//! below.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subreddits auto-subscribed to new accounts in the analysis era; excluded
/// from home classification by default.
pub const DEFAULT_EXCLUDED: [&str; 5] = ["AskReddit", "news", "worldnews", "pics", "videos"];

/// How the standard deviation of the Monte-Carlo null is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Sample standard deviation (n-1 denominator).
    #[default]
    Sample,
    /// Population standard deviation (n denominator).
    Population,
}

/// How author homes are determined when building monthly graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MonthlyHomeMode {
    /// Re-classify homes from each month's comments alone, using the
    /// `monthly_presence` threshold.
    #[default]
    Reclassify,
    /// Keep the yearly home assignments; a cohort author contributes to a
    /// monthly edge when they clear `monthly_presence` in both endpoint
    /// subreddits that month.
    Yearly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Calendar year of the analysis window (UTC).
    pub year: i32,
    /// Inclusive month range within the year.
    pub month_start: u8,
    pub month_end: u8,

    /// Strict lower bound on an author's total yearly comments for
    /// qualification.
    pub min_total_comments: u64,
    /// Strict lower bound on per-subreddit yearly comments for significant
    /// presence (home classification, common authors, profile estimation).
    pub min_sub_comments: u64,
    /// Minimum k1+k2 over both directions for a subreddit pair to produce
    /// conflict edge candidates.
    pub min_pair_authors: u64,
    /// Minimum common negatively-perceived controversial authors for a
    /// co-conflict edge.
    pub min_common_coconflict: u64,
    /// Retention threshold on the null-model z-score.
    pub z_threshold: f64,
    /// Monte-Carlo trials per candidate edge.
    pub mc_trials: u32,
    /// Strict lower bound on per-subreddit comments within one month for
    /// monthly significant presence.
    pub monthly_presence: u64,

    /// Subreddits excluded from home classification.
    pub excluded_subreddits: Vec<String>,
    /// Author names treated as deletion sentinels and skipped at parse time.
    pub deleted_author_sentinels: Vec<String>,
    /// Authors dropped from qualification (empty by default; bots are kept).
    pub author_blocklist: Vec<String>,

    /// Null std denominator (sample = n-1, population = n).
    pub std_mode: StdMode,
    /// Monthly home handling for temporal graphs.
    pub monthly_home_mode: MonthlyHomeMode,

    /// Louvain resolution parameter.
    pub louvain_resolution: f64,
    /// Stop aggregating when the modularity gain of a level falls below this.
    pub louvain_epsilon: f64,

    /// Global RNG seed; all randomized stages derive keyed streams from it.
    pub seed: u64,
    /// Worker threads for parallel stages; 1 forces fully sequential
    /// execution, 0 uses the available parallelism.
    pub threads: usize,

    /// Input comment archive (newline-delimited records; `.gz` accepted).
    pub input: Option<PathBuf>,
    /// Directory all artifacts are written to.
    pub outdir: PathBuf,

    /// Spill the ingest aggregation to sorted disk runs once this many
    /// in-memory groups accumulate. `None` means never spill.
    pub memory_budget_groups: Option<usize>,

    /// Reporting filter: minimum controversial authors for a subreddit to
    /// appear in the con_author_percent ranking.
    pub report_min_con_authors: u64,
    /// Rows per ranking table.
    pub report_top_n: usize,
    /// Reporting filter: minimum distinct yearly targets for a source to get
    /// a focus track.
    pub min_targets_for_track: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            year: 2016,
            month_start: 1,
            month_end: 12,
            min_total_comments: 100,
            min_sub_comments: 10,
            min_pair_authors: 5,
            min_common_coconflict: 2,
            z_threshold: 3.0,
            mc_trials: 30,
            monthly_presence: 3,
            excluded_subreddits: DEFAULT_EXCLUDED.iter().map(|s| s.to_string()).collect(),
            deleted_author_sentinels: vec!["[deleted]".to_string()],
            author_blocklist: Vec::new(),
            std_mode: StdMode::Sample,
            monthly_home_mode: MonthlyHomeMode::Reclassify,
            louvain_resolution: 1.0,
            louvain_epsilon: 1e-7,
            seed: 0,
            threads: 0,
            input: None,
            outdir: PathBuf::from("out"),
            memory_budget_groups: None,
            report_min_con_authors: 20,
            report_top_n: 10,
            min_targets_for_track: 5,
        }
    }
}

impl PipelineConfig {
    /// Load from a TOML file, applying defaults for missing keys.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.month_start < 1 || self.month_end > 12 || self.month_start > self.month_end {
            return Err(Error::Config(format!(
                "invalid month range {}..={}",
                self.month_start, self.month_end
            )));
        }
        let positive = [
            ("min_total_comments", self.min_total_comments),
            ("min_sub_comments", self.min_sub_comments),
            ("min_pair_authors", self.min_pair_authors),
            ("min_common_coconflict", self.min_common_coconflict),
            ("monthly_presence", self.monthly_presence),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.mc_trials < 2 {
            return Err(Error::Config("mc_trials must be at least 2".into()));
        }
        if !(self.z_threshold > 0.0) {
            return Err(Error::Config("z_threshold must be positive".into()));
        }
        if !(self.louvain_resolution > 0.0) || !(self.louvain_epsilon > 0.0) {
            return Err(Error::Config(
                "louvain_resolution and louvain_epsilon must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn excluded_set(&self) -> BTreeSet<String> {
        self.excluded_subreddits.iter().cloned().collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_thresholds() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.min_total_comments, 100);
        assert_eq!(cfg.min_sub_comments, 10);
        assert_eq!(cfg.min_pair_authors, 5);
        assert_eq!(cfg.min_common_coconflict, 2);
        assert_eq!(cfg.z_threshold, 3.0);
        assert_eq!(cfg.mc_trials, 30);
        assert_eq!(cfg.monthly_presence, 3);
        assert_eq!(cfg.excluded_subreddits.len(), 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        let mut cfg = PipelineConfig::default();
        cfg.z_threshold = 2.5;
        cfg.seed = 987654321;
        cfg.input = Some(PathBuf::from("/data/comments.ndjson.gz"));
        cfg.memory_budget_groups = Some(100_000);
        cfg.std_mode = StdMode::Population;
        cfg.monthly_home_mode = MonthlyHomeMode::Yearly;
        let text = cfg.to_toml();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg: PipelineConfig = toml::from_str("seed = 7\nmin_sub_comments = 20\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.min_sub_comments, 20);
        assert_eq!(cfg.min_total_comments, 100);
    }

    #[test]
    fn zero_thresholds_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.min_pair_authors = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.mc_trials = 1;
        assert!(cfg.validate().is_err());
    }
}
