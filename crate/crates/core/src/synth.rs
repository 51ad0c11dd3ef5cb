//! Synthetic comment corpora with planted ground truth.
//!
//! A scenario describes subreddits with baseline polarity rates, resident
//! background authors, cross-posting author groups, and planted conflicts.
//! Comment *counts* and month placement are fixed by the scenario, so
//! presence and qualification are exact by construction; only polarities are
//! random (i.i.d. per comment given the author/subreddit rates, which is
//! exactly the null model the significance filter assumes). With extreme
//! planted rates the designed homes realize with overwhelming probability,
//! and tests pin seeds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::seeds::keyed_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub p_pos: f64,
    pub p_neg: f64,
    pub p_neu: f64,
}

impl Rates {
    pub fn new(p_pos: f64, p_neg: f64, p_neu: f64) -> Self {
        Rates { p_pos, p_neg, p_neu }
    }

    fn valid(&self) -> bool {
        let sum = self.p_pos + self.p_neg + self.p_neu;
        self.p_pos >= 0.0 && self.p_neg >= 0.0 && self.p_neu >= 0.0 && (sum - 1.0).abs() < 1e-9
    }
}

fn default_source_rates() -> Rates {
    Rates::new(0.9, 0.05, 0.05)
}

fn default_target_rates() -> Rates {
    Rates::new(0.05, 0.9, 0.05)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubredditSpec {
    pub name: String,
    /// Baseline polarity rates for authors drawing from this subreddit.
    pub p_pos: f64,
    pub p_neg: f64,
    pub p_neu: f64,
}

impl SubredditSpec {
    fn rates(&self) -> Rates {
        Rates::new(self.p_pos, self.p_neg, self.p_neu)
    }
}

/// Resident authors posting only in one subreddit at its baseline rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub subreddit: String,
    pub authors: u32,
    pub comments_each: u32,
}

/// Authors posting in several subreddits, each at the subreddit baseline (or
/// an override). The building block of null scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossposterSpec {
    pub prefix: String,
    pub authors: u32,
    pub subreddits: Vec<String>,
    pub comments_each: u32,
    #[serde(default)]
    pub rates: Option<Rates>,
}

/// A planted conflict: `authors` authors with a social home in `source`
/// (positive-heavy comments there) and an anti-social home in every listed
/// target (negative-heavy, `comments_in_target` comments per target).
/// Comments land in `active_months` (default: the whole window); filler
/// comments in `source` top authors up over the qualification threshold.
/// Multiple targets give the same author set several anti-social homes,
/// which is what creates co-conflict edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictSpec {
    pub name: String,
    pub source: String,
    /// Single target, or use `targets` for several.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub targets: Vec<String>,
    pub authors: u32,
    pub comments_in_source: u32,
    pub comments_in_target: u32,
    #[serde(default)]
    pub active_months: Option<Vec<u8>>,
    #[serde(default = "default_source_rates")]
    pub source_rates: Rates,
    #[serde(default = "default_target_rates")]
    pub target_rates: Rates,
}

impl ConflictSpec {
    pub fn all_targets(&self) -> Vec<&str> {
        self.target
            .iter()
            .map(String::as_str)
            .chain(self.targets.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub seed: u64,
    pub year: i32,
    pub subreddits: Vec<SubredditSpec>,
    pub background: Vec<BackgroundSpec>,
    pub crossposters: Vec<CrossposterSpec>,
    pub conflicts: Vec<ConflictSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 0,
            year: 2016,
            subreddits: Vec::new(),
            background: Vec::new(),
            crossposters: Vec::new(),
            conflicts: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomeType {
    Social,
    Antisocial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthHome {
    pub author: String,
    pub subreddit: String,
    pub home_type: HomeType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEdge {
    pub source: String,
    pub target: String,
    pub k: u64,
    pub n_common: u64,
    pub weight: f64,
}

/// What the pipeline is expected to recover, computed from the scenario's
/// designed counts (not from the random draws).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub controversial_authors: BTreeSet<String>,
    pub homes: Vec<GroundTruthHome>,
    pub edges: Vec<GroundTruthEdge>,
    /// Expected top conflict target per window month for each planted
    /// source; `None` months lack the monthly presence to form an edge.
    pub monthly_top_targets: BTreeMap<String, Vec<Option<String>>>,
}

/// One author's posting plan in one subreddit; everything about generation
/// except the polarity draws is fixed here.
struct ActivityPlan {
    author: String,
    subreddit: String,
    count: u64,
    /// Comment j lands in months[j % months.len()].
    months: Vec<u8>,
    rates: Rates,
}

/// Comments of a `count`-comment plan that land in `month`.
fn count_in_month(count: u64, months: &[u8], month: u8) -> u64 {
    let Some(idx) = months.iter().position(|&m| m == month) else {
        return 0;
    };
    let base = count / months.len() as u64;
    let rem = count % months.len() as u64;
    base + if (idx as u64) < rem { 1 } else { 0 }
}

fn validate(scenario: &Scenario, cfg: &PipelineConfig) -> Result<BTreeMap<String, Rates>> {
    let mut baselines = BTreeMap::new();
    for sub in &scenario.subreddits {
        if !sub.rates().valid() {
            return Err(Error::Scenario(format!(
                "subreddit {} rates do not form a distribution",
                sub.name
            )));
        }
        if baselines.insert(sub.name.clone(), sub.rates()).is_some() {
            return Err(Error::Scenario(format!("duplicate subreddit {}", sub.name)));
        }
    }
    let known = |name: &str| baselines.contains_key(name);
    for b in &scenario.background {
        if !known(&b.subreddit) {
            return Err(Error::Scenario(format!(
                "background references unknown subreddit {}",
                b.subreddit
            )));
        }
    }
    for x in &scenario.crossposters {
        if x.subreddits.is_empty() {
            return Err(Error::Scenario(format!(
                "crossposter group {} has no subreddits",
                x.prefix
            )));
        }
        for s in &x.subreddits {
            if !known(s) {
                return Err(Error::Scenario(format!(
                    "crossposter group {} references unknown subreddit {s}",
                    x.prefix
                )));
            }
        }
        if let Some(r) = &x.rates {
            if !r.valid() {
                return Err(Error::Scenario(format!(
                    "crossposter group {} rates invalid",
                    x.prefix
                )));
            }
        }
    }
    let window: Vec<u8> = (cfg.month_start..=cfg.month_end).collect();
    let mut pairs = BTreeSet::new();
    for c in &scenario.conflicts {
        let targets = c.all_targets();
        if targets.is_empty() {
            return Err(Error::Scenario(format!("conflict {} has no targets", c.name)));
        }
        let distinct: BTreeSet<&str> = targets.iter().copied().collect();
        if distinct.len() != targets.len() {
            return Err(Error::Scenario(format!("conflict {} repeats a target", c.name)));
        }
        if targets.contains(&c.source.as_str()) {
            return Err(Error::Scenario(format!("conflict {} is a self-loop", c.name)));
        }
        if !known(&c.source) || targets.iter().any(|t| !known(t)) {
            return Err(Error::Scenario(format!(
                "conflict {} references unknown subreddits",
                c.name
            )));
        }
        if c.authors == 0 {
            return Err(Error::Scenario(format!("conflict {} has no authors", c.name)));
        }
        if u64::from(c.comments_in_source) <= cfg.min_sub_comments
            || u64::from(c.comments_in_target) <= cfg.min_sub_comments
        {
            return Err(Error::Scenario(format!(
                "conflict {}: per-side comment counts must exceed the significant-presence threshold ({})",
                c.name, cfg.min_sub_comments
            )));
        }
        if !c.source_rates.valid() || !c.target_rates.valid() {
            return Err(Error::Scenario(format!("conflict {} rates invalid", c.name)));
        }
        if let Some(months) = &c.active_months {
            if months.is_empty() || months.iter().any(|m| !window.contains(m)) {
                return Err(Error::Scenario(format!(
                    "conflict {}: active months must be a non-empty subset of the window",
                    c.name
                )));
            }
        }
        for t in targets {
            if !pairs.insert((c.source.clone(), t.to_string())) {
                return Err(Error::Scenario(format!(
                    "duplicate conflict pair {} -> {t}",
                    c.source
                )));
            }
        }
    }
    Ok(baselines)
}

fn build_plans(
    scenario: &Scenario,
    cfg: &PipelineConfig,
    baselines: &BTreeMap<String, Rates>,
) -> Result<Vec<ActivityPlan>> {
    let window: Vec<u8> = (cfg.month_start..=cfg.month_end).collect();
    let mut plans = Vec::new();
    let mut seen = BTreeSet::new();
    let push = |plan: ActivityPlan, plans: &mut Vec<ActivityPlan>, seen: &mut BTreeSet<(String, String)>| -> Result<()> {
        if !seen.insert((plan.author.clone(), plan.subreddit.clone())) {
            return Err(Error::Scenario(format!(
                "author {} planned twice in {}; choose distinct prefixes",
                plan.author, plan.subreddit
            )));
        }
        plans.push(plan);
        Ok(())
    };

    for (si, b) in scenario.background.iter().enumerate() {
        for i in 0..b.authors {
            push(
                ActivityPlan {
                    author: format!("bg{si}_{i:04}"),
                    subreddit: b.subreddit.clone(),
                    count: b.comments_each as u64,
                    months: window.clone(),
                    rates: baselines[&b.subreddit],
                },
                &mut plans,
                &mut seen,
            )?;
        }
    }
    for x in &scenario.crossposters {
        for i in 0..x.authors {
            let author = format!("{}{i:04}", x.prefix);
            for sub in &x.subreddits {
                push(
                    ActivityPlan {
                        author: author.clone(),
                        subreddit: sub.clone(),
                        count: x.comments_each as u64,
                        months: window.clone(),
                        rates: x.rates.unwrap_or(baselines[sub]),
                    },
                    &mut plans,
                    &mut seen,
                )?;
            }
        }
    }
    for c in &scenario.conflicts {
        let months = c.active_months.clone().unwrap_or_else(|| window.clone());
        let targets = c.all_targets();
        let designed = u64::from(c.comments_in_source)
            + u64::from(c.comments_in_target) * targets.len() as u64;
        let filler = (cfg.min_total_comments + 1).saturating_sub(designed);
        for i in 0..c.authors {
            let author = format!("{}_{i:04}", c.name);
            push(
                ActivityPlan {
                    author: author.clone(),
                    subreddit: c.source.clone(),
                    count: u64::from(c.comments_in_source) + filler,
                    months: months.clone(),
                    rates: c.source_rates,
                },
                &mut plans,
                &mut seen,
            )?;
            for t in &targets {
                push(
                    ActivityPlan {
                        author: author.clone(),
                        subreddit: t.to_string(),
                        count: u64::from(c.comments_in_target),
                        months: months.clone(),
                        rates: c.target_rates,
                    },
                    &mut plans,
                    &mut seen,
                )?;
            }
        }
    }
    Ok(plans)
}

fn ground_truth(scenario: &Scenario, cfg: &PipelineConfig, plans: &[ActivityPlan]) -> GroundTruth {
    let window: Vec<u8> = (cfg.month_start..=cfg.month_end).collect();
    let mut truth = GroundTruth::default();

    for c in &scenario.conflicts {
        for i in 0..c.authors {
            let author = format!("{}_{i:04}", c.name);
            truth.controversial_authors.insert(author.clone());
            truth.homes.push(GroundTruthHome {
                author: author.clone(),
                subreddit: c.source.clone(),
                home_type: HomeType::Social,
            });
            for t in c.all_targets() {
                truth.homes.push(GroundTruthHome {
                    author: author.clone(),
                    subreddit: t.to_string(),
                    home_type: HomeType::Antisocial,
                });
            }
        }
    }
    truth
        .homes
        .sort_by(|a, b| (&a.author, &a.subreddit).cmp(&(&b.author, &b.subreddit)));

    // Qualified authors with significant presence per (author, subreddit),
    // straight from the designed counts.
    let mut totals: HashMap<&str, u64> = HashMap::new();
    for p in plans {
        *totals.entry(p.author.as_str()).or_insert(0) += p.count;
    }
    let mut present: HashMap<&str, Vec<&ActivityPlan>> = HashMap::new();
    for p in plans {
        if totals[p.author.as_str()] > cfg.min_total_comments && p.count > cfg.min_sub_comments {
            present.entry(p.author.as_str()).or_default().push(p);
        }
    }
    let n_common = |a: &str, b: &str| -> u64 {
        present
            .values()
            .filter(|subs| {
                subs.iter().any(|p| p.subreddit == a) && subs.iter().any(|p| p.subreddit == b)
            })
            .count() as u64
    };

    for c in &scenario.conflicts {
        let k = c.authors as u64;
        for t in c.all_targets() {
            let common = n_common(&c.source, t);
            truth.edges.push(GroundTruthEdge {
                source: c.source.clone(),
                target: t.to_string(),
                k,
                n_common: common,
                weight: k as f64 / common as f64,
            });
        }
    }
    truth
        .edges
        .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));

    // Monthly expectations: a conflict forms a monthly edge when both sides
    // clear the monthly presence threshold that month.
    let monthly_common = |a: &str, b: &str, m: u8| -> u64 {
        present
            .values()
            .filter(|subs| {
                let ok = |sub: &str| {
                    subs.iter()
                        .find(|p| p.subreddit == sub)
                        .is_some_and(|p| count_in_month(p.count, &p.months, m) > cfg.monthly_presence)
                };
                ok(a) && ok(b)
            })
            .count() as u64
    };
    let sources: BTreeSet<&str> = scenario.conflicts.iter().map(|c| c.source.as_str()).collect();
    for source in sources {
        let mut track = Vec::with_capacity(window.len());
        for &m in &window {
            let mut best: Option<(&str, f64)> = None;
            for c in scenario.conflicts.iter().filter(|c| c.source == source) {
                let months = c.active_months.clone().unwrap_or_else(|| window.clone());
                let targets = c.all_targets();
                let designed = u64::from(c.comments_in_source)
                    + u64::from(c.comments_in_target) * targets.len() as u64;
                let filler = (cfg.min_total_comments + 1).saturating_sub(designed);
                let src_m = count_in_month(u64::from(c.comments_in_source) + filler, &months, m);
                let tgt_m = count_in_month(u64::from(c.comments_in_target), &months, m);
                if src_m <= cfg.monthly_presence || tgt_m <= cfg.monthly_presence {
                    continue;
                }
                for t in targets {
                    let common = monthly_common(&c.source, t, m);
                    let w = c.authors as f64 / common as f64;
                    match best {
                        Some((bt, bw)) if bw > w || (bw == w && bt < t) => {}
                        _ => best = Some((t, w)),
                    }
                }
            }
            track.push(best.map(|(t, _)| t.to_string()));
        }
        truth.monthly_top_targets.insert(source.to_string(), track);
    }
    truth
}

#[derive(Serialize)]
struct OutRecord<'a> {
    author: &'a str,
    subreddit: &'a str,
    score: i64,
    created_utc: i64,
    id: String,
}

fn month_bounds(year: i32, month: u8) -> (i64, i64) {
    let start = NaiveDate::from_ymd_opt(year, month as u32, 1)
        .expect("valid month")
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp();
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let end = NaiveDate::from_ymd_opt(ny, nm as u32, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp();
    (start, end)
}

/// Generate the comment stream into `out` and return the ground truth.
///
/// Each (author, subreddit) plan draws from its own keyed RNG stream, so the
/// stream is byte-identical on replay.
pub fn generate(
    scenario: &Scenario,
    cfg: &PipelineConfig,
    out: &mut impl Write,
) -> Result<GroundTruth> {
    let baselines = validate(scenario, cfg)?;
    let plans = build_plans(scenario, cfg, &baselines)?;
    let truth = ground_truth(scenario, cfg, &plans);

    let bounds: BTreeMap<u8, (i64, i64)> = (cfg.month_start..=cfg.month_end)
        .map(|m| (m, month_bounds(scenario.year, m)))
        .collect();

    for plan in &plans {
        let seed = keyed_seed(
            scenario.seed,
            &[b"gen", plan.author.as_bytes(), plan.subreddit.as_bytes()],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 0..plan.count {
            let month = plan.months[(j % plan.months.len() as u64) as usize];
            let (start, end) = bounds[&month];
            let created_utc = rng.random_range(start..end);
            let u: f64 = rng.random();
            let score = if u < plan.rates.p_neg {
                -1
            } else if u < plan.rates.p_neg + plan.rates.p_pos {
                1
            } else {
                0
            };
            let record = OutRecord {
                author: &plan.author,
                subreddit: &plan.subreddit,
                score,
                created_utc,
                id: format!("{}-{}-{j}", plan.author, plan.subreddit),
            };
            serde_json::to_writer(&mut *out, &record)
                .map_err(|e| Error::Internal(format!("serialize record: {e}")))?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<generated stream>", e))?;
        }
    }
    Ok(truth)
}

/// Generate straight to a file.
pub fn generate_to_path(
    scenario: &Scenario,
    cfg: &PipelineConfig,
    path: &Path,
) -> Result<GroundTruth> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let truth = generate(scenario, cfg, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(truth)
}

// ---------------------------------------------------------------------------
// Scenario builders shared by tests and the bundled demo
// ---------------------------------------------------------------------------

/// A scenario with planted conflicts on disjoint pairs: `pairs` conflicts of
/// `authors_per_conflict` authors each at extreme rates, plus positive-only
/// background residents everywhere. `benign_per_pair` adds qualified
/// positive-only crossposters spanning each pair, so n_common exceeds k and
/// the recovered weight is a non-trivial k / n_common.
pub fn planted_scenario(
    subreddit_count: usize,
    pairs: usize,
    authors_per_conflict: u32,
    comments_per_side: u32,
    benign_per_pair: u32,
    seed: u64,
) -> Scenario {
    assert!(pairs * 2 <= subreddit_count, "need two fresh subreddits per pair");
    let subreddits: Vec<SubredditSpec> = (0..subreddit_count)
        .map(|i| SubredditSpec {
            name: format!("s{i:02}"),
            p_pos: 0.8,
            p_neg: 0.1,
            p_neu: 0.1,
        })
        .collect();
    let background = (0..subreddit_count)
        .map(|i| BackgroundSpec {
            subreddit: format!("s{i:02}"),
            authors: 25,
            comments_each: 24,
        })
        .collect();
    let conflicts = (0..pairs)
        .map(|p| ConflictSpec {
            name: format!("con{p:02}"),
            source: format!("s{:02}", 2 * p),
            target: Some(format!("s{:02}", 2 * p + 1)),
            targets: Vec::new(),
            authors: authors_per_conflict,
            comments_in_source: comments_per_side,
            comments_in_target: comments_per_side,
            active_months: None,
            source_rates: default_source_rates(),
            target_rates: default_target_rates(),
        })
        .collect();
    let crossposters = if benign_per_pair > 0 {
        (0..pairs)
            .map(|p| CrossposterSpec {
                prefix: format!("benign{p:02}_"),
                authors: benign_per_pair,
                subreddits: vec![format!("s{:02}", 2 * p), format!("s{:02}", 2 * p + 1)],
                // 52 per subreddit clears qualification (104 > 100) and
                // presence; never-negative rates keep them non-controversial.
                comments_each: 52,
                rates: Some(Rates::new(0.95, 0.0, 0.05)),
            })
            .collect()
    } else {
        Vec::new()
    };
    Scenario {
        seed,
        year: 2016,
        subreddits,
        background,
        crossposters,
        conflicts,
    }
}

/// A null scenario: every author draws from the subreddit baselines, with
/// cross-posting groups creating common-author mass but no planted signal.
pub fn null_scenario(subreddit_count: usize, crossposters: u32, seed: u64) -> Scenario {
    let names: Vec<String> = (0..subreddit_count).map(|i| format!("n{i:02}")).collect();
    let subreddits = names
        .iter()
        .map(|name| SubredditSpec {
            name: name.clone(),
            p_pos: 0.5,
            p_neg: 0.45,
            p_neu: 0.05,
        })
        .collect();
    let background = names
        .iter()
        .map(|name| BackgroundSpec {
            subreddit: name.clone(),
            authors: 12,
            comments_each: 24,
        })
        .collect();
    // Every crossposter posts in every subreddit often enough to qualify.
    let comments_each = (100 / subreddit_count as u32 + 2).max(14);
    let crossposters = vec![CrossposterSpec {
        prefix: "x".into(),
        authors: crossposters,
        subreddits: names,
        comments_each,
        rates: None,
    }];
    Scenario {
        seed,
        year: 2016,
        subreddits,
        background,
        crossposters,
        conflicts: Vec::new(),
    }
}
