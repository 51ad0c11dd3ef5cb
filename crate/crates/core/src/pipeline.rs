//! Stage orchestration over on-disk artifacts.
//!
//! Each `run_*` function reads only the canonical artifacts of earlier
//! stages and writes its own, so running `all` is byte-identical to running
//! the stages one by one, and re-running any stage with unchanged inputs
//! reproduces its outputs exactly.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::artifacts::{self, CommunityReportRow};
use crate::coconflict::{build_coconflict, giant_component, louvain};
use crate::config::PipelineConfig;
use crate::conflict::{candidate_edges, ConflictEdgeCandidate};
use crate::corpus::{ingest, sentinel_set, AnalysisWindow, IngestReport};
use crate::error::{Error, Result};
use crate::export;
use crate::graph::{ConflictEdge, ConflictGraph};
use crate::metrics::{correlation_report, node_metrics, rankings, reciprocity, RankKey};
use crate::profiles::{classify_all_homes, controversial_authors, qualified_authors, ControversialAuthor, HomeAssignment};
use crate::significance::{filter_graph, TestParams};
use crate::stats::StatsTable;
use crate::synth::{self, GroundTruth, Scenario};
use crate::temporal::{focus_tracks, monthly_graphs, monthly_metrics, rank_trajectories, Cohort};

fn outpath(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.outdir.join(name)
}

fn ensure_outdir(cfg: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.outdir).map_err(|e| Error::io(&cfg.outdir, e))
}

fn load_table(cfg: &PipelineConfig) -> Result<StatsTable> {
    let path = outpath(cfg, artifacts::AGGREGATE);
    artifacts::require(&path, "ingest")?;
    let rows = artifacts::read_aggregate(&path)?;
    Ok(StatsTable::from_rows(&rows))
}

fn load_homes(cfg: &PipelineConfig) -> Result<Vec<HomeAssignment>> {
    let path = outpath(cfg, artifacts::HOMES);
    artifacts::require(&path, "profiles")?;
    artifacts::read_homes(&path)
}

/// Conflict graph from the test report, with edge author sets rebuilt from
/// the home assignments.
fn load_conflict_graph(cfg: &PipelineConfig, controversial: &[ControversialAuthor]) -> Result<ConflictGraph> {
    let path = outpath(cfg, artifacts::EDGE_TESTS);
    artifacts::require(&path, "filter")?;
    let rows = artifacts::read_edge_tests(&path)?;
    let edges = rows
        .into_iter()
        .filter(|r| r.retained)
        .map(|r| {
            let author_set: BTreeSet<String> = controversial
                .iter()
                .filter(|c| c.social_homes.contains(&r.source) && c.antisocial_homes.contains(&r.target))
                .map(|c| c.author.clone())
                .collect();
            ConflictEdge {
                source: r.source,
                target: r.target,
                k: r.k,
                n_common: r.n_common,
                weight: r.weight,
                z: r.z,
                author_set,
            }
        })
        .collect();
    Ok(ConflictGraph::from_edges(edges))
}

/// Parse, classify and aggregate the input archive into `aggregate.csv`.
pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestReport> {
    ensure_outdir(cfg)?;
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input archive configured (set `input` or --input)".into()))?;
    if !input.is_file() {
        return Err(Error::io(
            input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input archive not found"),
        ));
    }
    let window = AnalysisWindow::from_config(cfg);
    let sentinels = sentinel_set(cfg);
    let (rows, report) = ingest(input, &window, &sentinels, cfg.threads, cfg.memory_budget_groups)?;
    if !report.conserved() {
        return Err(Error::Internal(format!(
            "ingest accounting violated: {} lines vs {} records + {} skips",
            report.lines,
            report.records,
            report.skips.total()
        )));
    }
    artifacts::write_aggregate(&outpath(cfg, artifacts::AGGREGATE), &rows)?;
    artifacts::write_ingest_report(&outpath(cfg, artifacts::INGEST_REPORT), &report)?;
    Ok(report)
}

/// Qualify authors and classify their homes into `homes.csv`.
pub fn run_profiles(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let table = load_table(cfg)?;
    let blocklist: BTreeSet<String> = cfg.author_blocklist.iter().cloned().collect();
    let qualified = qualified_authors(&table, cfg.min_total_comments, &blocklist);
    let homes = classify_all_homes(
        &table.year_view(),
        &qualified,
        cfg.min_sub_comments,
        &cfg.excluded_set(),
    );
    artifacts::write_homes(&outpath(cfg, artifacts::HOMES), &homes)
}

fn rebuild_candidates(cfg: &PipelineConfig, table: &StatsTable, homes: &[HomeAssignment]) -> Vec<ConflictEdgeCandidate> {
    let blocklist: BTreeSet<String> = cfg.author_blocklist.iter().cloned().collect();
    let qualified = qualified_authors(table, cfg.min_total_comments, &blocklist);
    let controversial = controversial_authors(homes);
    candidate_edges(
        &controversial,
        &table.year_view(),
        &qualified,
        cfg.min_pair_authors,
        cfg.min_sub_comments,
    )
}

/// Build candidate edges into `candidates.csv`.
pub fn run_conflict(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let table = load_table(cfg)?;
    let homes = load_homes(cfg)?;
    let candidates = rebuild_candidates(cfg, &table, &homes);
    artifacts::write_candidates(&outpath(cfg, artifacts::CANDIDATES), &candidates)
}

/// Run the Monte-Carlo null test over the candidates into `edge_tests.csv`.
pub fn run_filter(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let candidates_path = outpath(cfg, artifacts::CANDIDATES);
    artifacts::require(&candidates_path, "conflict")?;
    let file_rows = artifacts::read_candidates(&candidates_path)?;

    let table = load_table(cfg)?;
    let homes = load_homes(cfg)?;
    let rebuilt = rebuild_candidates(cfg, &table, &homes);
    // The candidate list is a function of the upstream artifacts; a mismatch
    // means candidates.csv is stale relative to aggregate.csv / homes.csv.
    let matches = file_rows.len() == rebuilt.len()
        && file_rows.iter().zip(&rebuilt).all(|(f, r)| {
            f.source == r.source && f.target == r.target && f.k == r.k && f.n_common == r.n_common
        });
    if !matches {
        return Err(Error::Artifact {
            path: candidates_path,
            record: 0,
            message: "candidates.csv does not match the current aggregate/homes artifacts; rerun `conflict`".into(),
        });
    }

    let blocklist: BTreeSet<String> = cfg.author_blocklist.iter().cloned().collect();
    let qualified = qualified_authors(&table, cfg.min_total_comments, &blocklist);
    let params = TestParams {
        trials: cfg.mc_trials,
        z_threshold: cfg.z_threshold,
        std_mode: cfg.std_mode,
        seed: cfg.seed,
        stream_tag: 0,
    };
    let (_, results) = filter_graph(
        &rebuilt,
        &table.year_view(),
        &qualified,
        cfg.min_sub_comments,
        &params,
        cfg.threads,
    )?;
    artifacts::write_edge_tests(&outpath(cfg, artifacts::EDGE_TESTS), &results)
}

/// Node metrics, rankings, reciprocity and the correlation report.
pub fn run_metrics(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let table = load_table(cfg)?;
    let homes = load_homes(cfg)?;
    let controversial = controversial_authors(&homes);
    let graph = load_conflict_graph(cfg, &controversial)?;

    let metrics = node_metrics(&graph, &controversial, &table.year_view(), cfg.min_sub_comments);
    artifacts::write_node_metrics(&outpath(cfg, artifacts::NODE_METRICS), &metrics)?;

    let correlations = correlation_report(&graph, &metrics);
    artifacts::write_correlations(&outpath(cfg, artifacts::CORRELATIONS), &correlations)?;

    for (key, min_con) in [
        (RankKey::WeightedIndegree, 0),
        (RankKey::WeightedOutdegree, 0),
        (RankKey::AvgOutIntensity, 0),
        (RankKey::ConAuthorPercent, cfg.report_min_con_authors),
    ] {
        let rows = rankings(&metrics, key, cfg.report_top_n, min_con);
        artifacts::write_ranking(&outpath(cfg, &format!("ranking_{}.csv", key.name())), &rows)?;
    }

    let mut corr_map = serde_json::Map::new();
    for c in &correlations {
        corr_map.insert(
            c.name.clone(),
            serde_json::json!({ "n": c.n, "rho": c.rho, "p_value": c.p_value }),
        );
    }
    let summary = serde_json::json!({
        "nodes": graph.nodes.len(),
        "edges": graph.edges.len(),
        "reciprocity": reciprocity(&graph),
        "correlations": corr_map,
    });
    artifacts::write_summary(&outpath(cfg, artifacts::SUMMARY), &summary)
}

/// Co-conflict graph, giant component, Louvain partition and the community
/// report.
pub fn run_coconflict(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let homes = load_homes(cfg)?;
    let controversial = controversial_authors(&homes);
    let graph = load_conflict_graph(cfg, &controversial)?;

    let coconflict = build_coconflict(&controversial, &graph.nodes, cfg.min_common_coconflict);
    artifacts::write_coconflict_edges(&outpath(cfg, artifacts::COCONFLICT_EDGES), &coconflict.edges)?;

    let giant = giant_component(&coconflict);
    let partition = louvain(&giant, cfg.seed, cfg.louvain_resolution, cfg.louvain_epsilon);
    artifacts::write_communities(&outpath(cfg, artifacts::COMMUNITIES), &partition.assignment)?;

    let report: Vec<CommunityReportRow> = partition
        .communities
        .iter()
        .enumerate()
        .map(|(id, community)| CommunityReportRow {
            community_id: id,
            size: community.len(),
            mu: partition.mu_scores[id],
            cc: partition.clustering[id],
            exemplars: community
                .iter()
                .take(5)
                .cloned()
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect();
    artifacts::write_community_report(&outpath(cfg, artifacts::COMMUNITY_REPORT), &report)
}

/// Monthly graphs, focus tracks and rank trajectories.
pub fn run_temporal(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let table = load_table(cfg)?;
    let homes = load_homes(cfg)?;
    let controversial = controversial_authors(&homes);
    let yearly = load_conflict_graph(cfg, &controversial)?;
    let blocklist: BTreeSet<String> = cfg.author_blocklist.iter().cloned().collect();
    let qualified = qualified_authors(&table, cfg.min_total_comments, &blocklist);

    let cohort = Cohort {
        controversial,
        nodes: yearly.nodes.clone(),
    };
    let series = monthly_graphs(&table, &cohort, &qualified, cfg)?;

    let monthly_dir = cfg.outdir.join(artifacts::MONTHLY_DIR);
    std::fs::create_dir_all(&monthly_dir).map_err(|e| Error::io(&monthly_dir, e))?;
    for month in &series.months {
        artifacts::write_retained_edges(
            &artifacts::monthly_edges_path(&cfg.outdir, month.month),
            &month.results,
        )?;
    }

    let window: Vec<u8> = (cfg.month_start..=cfg.month_end).collect();
    let tracks = focus_tracks(&series, &yearly, cfg.min_targets_for_track);
    artifacts::write_focus_tracks(&outpath(cfg, artifacts::FOCUS_TRACKS), &tracks, &window)?;

    let monthly = monthly_metrics(&table, &series, cfg);
    let targeted = rank_trajectories(&monthly, &cohort.nodes, RankKey::WeightedIndegree);
    artifacts::write_rank_trajectories(&outpath(cfg, artifacts::RANK_TARGETED), &targeted, &window)?;
    let instigating = rank_trajectories(&monthly, &cohort.nodes, RankKey::WeightedOutdegree);
    artifacts::write_rank_trajectories(
        &outpath(cfg, artifacts::RANK_INSTIGATING),
        &instigating,
        &window,
    )
}

pub const CONFLICT_GRAPHML: &str = "conflict_graph.graphml";
pub const CONFLICT_DOT: &str = "conflict_graph.dot";
pub const COCONFLICT_GRAPHML: &str = "coconflict_graph.graphml";
pub const COCONFLICT_DOT: &str = "coconflict_graph.dot";

/// GraphML and DOT exports of whatever graphs have been built.
pub fn run_export(cfg: &PipelineConfig) -> Result<()> {
    ensure_outdir(cfg)?;
    let homes = load_homes(cfg)?;
    let controversial = controversial_authors(&homes);
    let graph = load_conflict_graph(cfg, &controversial)?;

    let metrics_path = outpath(cfg, artifacts::NODE_METRICS);
    let metrics = if metrics_path.is_file() {
        Some(artifacts::read_node_metrics(&metrics_path)?)
    } else {
        None
    };
    artifacts::write_text(
        &outpath(cfg, CONFLICT_GRAPHML),
        &export::conflict_graphml(&graph, metrics.as_deref()),
    )?;
    artifacts::write_text(&outpath(cfg, CONFLICT_DOT), &export::conflict_dot(&graph))?;

    let cocon_path = outpath(cfg, artifacts::COCONFLICT_EDGES);
    if cocon_path.is_file() {
        let edges = artifacts::read_coconflict_edges(&cocon_path)?;
        let nodes: Vec<String> = graph.nodes.iter().cloned().collect();
        let cocon = crate::coconflict::CoConflictGraph::from_parts(nodes, edges);
        artifacts::write_text(
            &outpath(cfg, COCONFLICT_GRAPHML),
            &export::coconflict_graphml(&cocon),
        )?;
        artifacts::write_text(&outpath(cfg, COCONFLICT_DOT), &export::coconflict_dot(&cocon))?;
    }
    Ok(())
}

/// Generate a synthetic corpus and its ground truth into the output
/// directory.
pub fn run_synth(cfg: &PipelineConfig, scenario_path: &Path) -> Result<GroundTruth> {
    ensure_outdir(cfg)?;
    let scenario = Scenario::from_file(scenario_path)?;
    let comments = outpath(cfg, artifacts::COMMENTS);
    let truth = synth::generate_to_path(&scenario, cfg, &comments)?;
    artifacts::write_ground_truth(&outpath(cfg, artifacts::GROUND_TRUTH), &truth)?;
    Ok(truth)
}

/// The whole pipeline in stage order.
pub fn run_all(cfg: &PipelineConfig) -> Result<()> {
    run_ingest(cfg)?;
    run_profiles(cfg)?;
    run_conflict(cfg)?;
    run_filter(cfg)?;
    run_metrics(cfg)?;
    run_coconflict(cfg)?;
    run_temporal(cfg)?;
    run_export(cfg)
}
