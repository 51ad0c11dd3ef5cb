//! Monte-Carlo null model that eliminates candidate edges explainable by
//! chance.
//!
//! For a candidate A→B, the null asks: if every common user of A and B drew
//! their B comments i.i.d. from B's empirical polarity distribution, how many
//! would come out negatively perceived? The experiment is repeated `trials`
//! times; the edge survives only when the actual count sits more than
//! `z_threshold` standard deviations above the sampled mean.
//!
//! RNG streams are keyed per (edge, trial) so results do not depend on
//! execution order or thread count.

use std::collections::BTreeSet;
use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::StdMode;
use crate::conflict::{common_authors, ConflictEdgeCandidate};
use crate::error::{Error, Result};
use crate::graph::{ConflictEdge, ConflictGraph};
use crate::stats::StatsView;

/// Empirical polarity distribution of a subreddit's comments, estimated from
/// users with significant presence there.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialProfile {
    pub subreddit: String,
    pub p_pos: f64,
    pub p_neg: f64,
    pub p_neu: f64,
}

/// Outcome of testing one candidate edge against the null.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTestResult {
    pub candidate: ConflictEdgeCandidate,
    pub n_actual: u64,
    pub null_mean: f64,
    pub null_std: f64,
    /// z-score of `n_actual` under the sampled null; +inf/-inf when the
    /// sampling distribution is degenerate.
    pub z: f64,
    pub retained: bool,
}

/// Test parameters, shared across all candidates of one run.
#[derive(Debug, Clone, Copy)]
pub struct TestParams {
    pub trials: u32,
    pub z_threshold: f64,
    pub std_mode: StdMode,
    pub seed: u64,
    /// Extra stream-key component separating e.g. monthly runs; 0 for the
    /// yearly graph.
    pub stream_tag: u64,
}

impl TestParams {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::Config("mc_trials must be at least 2".into()));
        }
        Ok(())
    }
}

fn stream_seed(global: u64, tag: u64, source: &str, target: &str, trial: u32) -> u64 {
    crate::seeds::keyed_seed(
        global,
        &[
            b"edge",
            &tag.to_le_bytes(),
            source.as_bytes(),
            target.as_bytes(),
            &trial.to_le_bytes(),
        ],
    )
}

/// Estimate B's polarity distribution from qualifying comments.
pub fn estimate_profile(
    stats: &StatsView<'_>,
    subreddit: &str,
    min_sub_comments: u64,
) -> Result<MultinomialProfile> {
    let mut pos = 0u64;
    let mut neg = 0u64;
    let mut neu = 0u64;
    for (_, c) in stats.sub_entries(subreddit) {
        if c.total() > min_sub_comments {
            pos += c.pos;
            neg += c.neg;
            neu += c.neu;
        }
    }
    let total = pos + neg + neu;
    if total == 0 {
        return Err(Error::Internal(format!(
            "no qualifying comments in {subreddit}; cannot estimate a polarity profile"
        )));
    }
    Ok(MultinomialProfile {
        subreddit: subreddit.to_string(),
        p_pos: pos as f64 / total as f64,
        p_neg: neg as f64 / total as f64,
        p_neu: neu as f64 / total as f64,
    })
}

/// One null experiment: every common user draws their comment count from the
/// profile; returns how many come out negatively perceived (strictly more
/// negative than positive draws, neutrals never tip it).
pub fn simulate_negatives(
    comment_counts: &[u64],
    profile: &MultinomialProfile,
    rng: &mut impl Rng,
) -> u64 {
    let mut negative_users = 0u64;
    for &n_i in comment_counts {
        let mut pos = 0u64;
        let mut neg = 0u64;
        for _ in 0..n_i {
            let u: f64 = rng.random();
            if u < profile.p_neg {
                neg += 1;
            } else if u < profile.p_neg + profile.p_pos {
                pos += 1;
            }
        }
        if neg > pos {
            negative_users += 1;
        }
    }
    negative_users
}

/// Run the Monte-Carlo test for one candidate.
///
/// `comment_counts` are the per-user comment counts in the target subreddit
/// for all common users of the pair, in a deterministic (author-name) order.
pub fn test_edge(
    candidate: &ConflictEdgeCandidate,
    comment_counts: &[u64],
    profile: &MultinomialProfile,
    params: &TestParams,
) -> Result<EdgeTestResult> {
    params.validate()?;
    let n_actual = candidate.k;
    let samples: Vec<f64> = (0..params.trials)
        .map(|trial| {
            let seed = stream_seed(
                params.seed,
                params.stream_tag,
                &candidate.source,
                &candidate.target,
                trial,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_negatives(comment_counts, profile, &mut rng) as f64
        })
        .collect();

    let n = samples.len() as f64;
    let null_mean = samples.iter().sum::<f64>() / n;
    let denom = match params.std_mode {
        StdMode::Sample => n - 1.0,
        StdMode::Population => n,
    };
    let variance = samples.iter().map(|x| (x - null_mean).powi(2)).sum::<f64>() / denom;
    let null_std = variance.sqrt();

    let z = if null_std > 0.0 {
        (n_actual as f64 - null_mean) / null_std
    } else if (n_actual as f64) > null_mean {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(EdgeTestResult {
        candidate: candidate.clone(),
        n_actual,
        null_mean,
        null_std,
        z,
        retained: z > params.z_threshold,
    })
}

/// Test every candidate and assemble the conflict graph from the retained
/// ones. Returns the full test report (sorted by source, target) alongside
/// the graph.
pub fn filter_graph(
    candidates: &[ConflictEdgeCandidate],
    stats: &StatsView<'_>,
    qualified: &BTreeSet<String>,
    min_sub_comments: u64,
    params: &TestParams,
    threads: usize,
) -> Result<(ConflictGraph, Vec<EdgeTestResult>)> {
    params.validate()?;

    // Profiles are per target subreddit; cache them.
    let mut profiles: HashMap<&str, MultinomialProfile> = HashMap::new();
    for c in candidates {
        if !profiles.contains_key(c.target.as_str()) {
            profiles.insert(
                c.target.as_str(),
                estimate_profile(stats, &c.target, min_sub_comments)?,
            );
        }
    }

    let run_one = |c: &ConflictEdgeCandidate| -> Result<EdgeTestResult> {
        let common = common_authors(stats, &c.source, &c.target, qualified, min_sub_comments);
        let counts: Vec<u64> = common
            .iter()
            .map(|a| stats.counts(a, &c.target).total())
            .collect();
        let profile = &profiles[c.target.as_str()];
        test_edge(c, &counts, profile, params)
    };

    let mut results: Vec<EdgeTestResult> = if threads == 1 {
        candidates.iter().map(run_one).collect::<Result<_>>()?
    } else {
        let pool = crate::corpus::build_pool(threads)?;
        pool.install(|| {
            use rayon::prelude::*;
            candidates.par_iter().map(run_one).collect::<Result<_>>()
        })?
    };
    results.sort_by(|a, b| {
        (&a.candidate.source, &a.candidate.target).cmp(&(&b.candidate.source, &b.candidate.target))
    });

    let edges: Vec<ConflictEdge> = results
        .iter()
        .filter(|r| r.retained)
        .map(|r| ConflictEdge {
            source: r.candidate.source.clone(),
            target: r.candidate.target.clone(),
            k: r.candidate.k,
            n_common: r.candidate.n_common,
            weight: r.candidate.weight,
            z: r.z,
            author_set: r.candidate.author_set.clone(),
        })
        .collect();
    Ok((ConflictGraph::from_edges(edges), results))
}
