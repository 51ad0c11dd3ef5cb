//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{analyze_lines, assert_handshake, lock_timing, tree};
use subconflict::artifacts;
use subconflict::coconflict::{louvain, modularity, CoConflictEdge, CoConflictGraph};
use subconflict::config::{PipelineConfig, StdMode};
use subconflict::conflict::ConflictEdgeCandidate;
use subconflict::corpus::{self, AnalysisWindow};
use subconflict::graph::{ConflictEdge, ConflictGraph};
use subconflict::metrics::spearman;
use subconflict::pipeline;
use subconflict::significance::{test_edge, MultinomialProfile, TestParams};
use subconflict::synth::{self, Scenario};
use subconflict::temporal::change_count;

fn base_cfg(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.outdir = dir.join("out");
    cfg.seed = 1;
    cfg.threads = 1;
    cfg
}

/// Criterion 1: on 20 subreddits with 10 planted conflicts (rates 0.9/0.9,
/// 12 authors, 15 comments per side) the disk pipeline recovers the edge set
/// with precision = recall = 1.0 and exact k / n_common / weight, in under
/// ten seconds.
#[test]
fn criterion_01_planted_conflict_recovery() {
    let _guard = lock_timing();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_cfg(dir.path());
    let input = dir.path().join("comments.ndjson");
    cfg.input = Some(input.clone());

    let scenario = synth::planted_scenario(20, 10, 12, 15, 3, 20160101);
    let truth = synth::generate_to_path(&scenario, &cfg, &input).unwrap();
    assert_eq!(truth.edges.len(), 10);

    let started = Instant::now();
    pipeline::run_ingest(&cfg).unwrap();
    pipeline::run_profiles(&cfg).unwrap();
    pipeline::run_conflict(&cfg).unwrap();
    pipeline::run_filter(&cfg).unwrap();
    let elapsed = started.elapsed();

    let rows = artifacts::read_edge_tests(&cfg.outdir.join(artifacts::EDGE_TESTS)).unwrap();
    let recovered: BTreeMap<(String, String), (u64, u64, f64)> = rows
        .iter()
        .filter(|r| r.retained)
        .map(|r| ((r.source.clone(), r.target.clone()), (r.k, r.n_common, r.weight)))
        .collect();
    let expected: BTreeMap<(String, String), (u64, u64, f64)> = truth
        .edges
        .iter()
        .map(|e| ((e.source.clone(), e.target.clone()), (e.k, e.n_common, e.weight)))
        .collect();
    // Equal maps mean precision = recall = 1.0, with exact counts and exact
    // weights (same integer division on both sides).
    assert_eq!(recovered, expected);

    let homes = artifacts::read_homes(&cfg.outdir.join(artifacts::HOMES)).unwrap();
    let controversial: BTreeSet<String> = homes
        .iter()
        .filter(|h| h.is_controversial())
        .map(|h| h.author.clone())
        .collect();
    assert_eq!(controversial, truth.controversial_authors);

    assert!(
        elapsed.as_secs_f64() < 10.0,
        "pipeline took {elapsed:?}, budget 10s"
    );
    println!("ACCEPTANCE 1 (planted-conflict recovery, {elapsed:?}): PASS");
}

/// Criterion 2: across 50 seeded null scenarios the z>3 filter retains at
/// most 1% of candidate edges, within a two-minute budget.
#[test]
fn criterion_02_null_calibration() {
    let _guard = lock_timing();
    let started = Instant::now();
    let mut total_candidates = 0usize;
    let mut total_retained = 0usize;
    for seed in 0..50u64 {
        let scenario = synth::null_scenario(8, 40, 9000 + seed);
        let mut lines = Vec::new();
        synth::generate(&scenario, &PipelineConfig::default(), &mut lines).unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.seed = seed;
        cfg.threads = 1;
        let analysis = analyze_lines(&lines, &cfg);
        total_candidates += analysis.results.len();
        total_retained += analysis.results.iter().filter(|r| r.retained).count();
    }
    let elapsed = started.elapsed();
    assert!(
        total_candidates >= 1000,
        "null scenarios produced only {total_candidates} candidates; calibration would be vacuous"
    );
    let fraction = total_retained as f64 / total_candidates as f64;
    assert!(
        fraction <= 0.01,
        "retained {total_retained} of {total_candidates} null candidates ({fraction:.4})"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}, budget 2min");
    println!(
        "ACCEPTANCE 2 (null calibration: {total_retained}/{total_candidates} retained, {elapsed:?}): PASS"
    );
}

/// Exact P[neg > pos] for n i.i.d. draws, by direct trinomial enumeration.
/// Independent of the implementation's sampling path.
fn enumerated_negative_probability(n: u64, p_pos: f64, p_neg: f64, p_neu: f64) -> f64 {
    fn factorial(n: u64) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }
    let mut prob = 0.0;
    for neg in 0..=n {
        for pos in 0..=(n - neg) {
            if neg > pos {
                let neu = n - neg - pos;
                let coeff = factorial(n) / (factorial(neg) * factorial(pos) * factorial(neu));
                prob += coeff
                    * p_neg.powi(neg as i32)
                    * p_pos.powi(pos as i32)
                    * p_neu.powi(neu as i32);
            }
        }
    }
    prob
}

/// Criterion 3: on the 20-user / 11-comment / (0.7, 0.25, 0.05) instance the
/// empirical null mean over 20 seeds x 30 trials matches the enumerated
/// expectation within three standard errors.
#[test]
fn criterion_03_significance_oracle() {
    let q = enumerated_negative_probability(11, 0.7, 0.25, 0.05);
    let expected_mean = 20.0 * q;
    let profile = MultinomialProfile {
        subreddit: "b".into(),
        p_pos: 0.7,
        p_neg: 0.25,
        p_neu: 0.05,
    };
    let candidate = ConflictEdgeCandidate {
        source: "a".into(),
        target: "b".into(),
        k: 10,
        n_common: 20,
        weight: 0.5,
        author_set: BTreeSet::new(),
    };
    let counts = vec![11u64; 20];

    let mut means = Vec::new();
    for seed in 0..20u64 {
        let params = TestParams {
            trials: 30,
            z_threshold: 3.0,
            std_mode: StdMode::Sample,
            seed,
            stream_tag: 0,
        };
        let r = test_edge(&candidate, &counts, &profile, &params).unwrap();
        means.push(r.null_mean);
    }
    let grand_mean: f64 = means.iter().sum::<f64>() / means.len() as f64;
    // 600 pooled trials of a Binomial(20, q) count.
    let se = (20.0 * q * (1.0 - q) / 600.0).sqrt();
    let deviation = (grand_mean - expected_mean).abs();
    assert!(
        deviation <= 3.0 * se,
        "empirical mean {grand_mean:.4} vs analytic {expected_mean:.4} (3se = {:.4})",
        3.0 * se
    );
    println!(
        "ACCEPTANCE 3 (significance oracle: |{grand_mean:.4} - {expected_mean:.4}| <= {:.4}): PASS",
        3.0 * se
    );
}

/// Rank-then-Pearson oracle with O(n^2) rank counting.
fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx).powi(2);
        dy += (ry[i] - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return None;
    }
    Some(num / (dx * dy).sqrt())
}

/// Criterion 4: 1,000 random tied vectors agree with the brute-force oracle
/// within 1e-12.
#[test]
fn criterion_04_spearman_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0usize;
    for case in 0..1000 {
        let n = rng.random_range(3..=50usize);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        match (spearman(&x, &y), spearman_oracle(&x, &y)) {
            (Some(s), Some(oracle)) => {
                assert!(
                    (s.rho - oracle).abs() < 1e-12,
                    "case {case}: {} vs oracle {oracle}",
                    s.rho
                );
                compared += 1;
            }
            (None, None) => {}
            (got, oracle) => panic!(
                "case {case}: definedness mismatch (impl {:?}, oracle {:?})",
                got.map(|s| s.rho),
                oracle
            ),
        }
    }
    assert!(compared >= 900, "only {compared} defined comparisons");
    println!("ACCEPTANCE 4 (spearman oracle, {compared} tied vectors): PASS");
}

/// Unit-weight two-clique barbell: cliques of `a` and `b` nodes joined by a
/// single bridge between the first node of each.
fn barbell(a: usize, b: usize, bridge_weight: f64, clique_weight: f64) -> CoConflictGraph {
    let name = |side: char, i: usize| format!("{side}{i}");
    let mut edges = Vec::new();
    for (side, k) in [('a', a), ('b', b)] {
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push(CoConflictEdge {
                    a: name(side, i),
                    b: name(side, j),
                    weight: clique_weight,
                    common_count: 2,
                });
            }
        }
    }
    edges.push(CoConflictEdge {
        a: name('a', 0),
        b: name('b', 0),
        weight: bridge_weight,
        common_count: 2,
    });
    let nodes = [('a', a), ('b', b)]
        .iter()
        .flat_map(|&(s, k)| (0..k).map(move |i| name(s, i)))
        .collect();
    CoConflictGraph::from_parts(nodes, edges)
}

/// Visit every set partition of n elements (restricted growth strings).
fn for_each_partition(n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(assign: &mut Vec<usize>, max_label: usize, n: usize, f: &mut impl FnMut(&[usize])) {
        if assign.len() == n {
            f(assign);
            return;
        }
        for label in 0..=max_label + 1 {
            assign.push(label);
            rec(assign, max_label.max(label), n, f);
            assign.pop();
        }
    }
    let mut assign = vec![0usize];
    rec(&mut assign, 0, n, f);
}

fn brute_force_max_modularity(g: &CoConflictGraph) -> f64 {
    let n = g.nodes.len();
    let mut best = f64::NEG_INFINITY;
    for_each_partition(n, &mut |assign| {
        let groups = assign.iter().max().unwrap() + 1;
        let mut communities: Vec<BTreeSet<String>> = vec![BTreeSet::new(); groups];
        for (i, &label) in assign.iter().enumerate() {
            communities[label].insert(g.nodes[i].clone());
        }
        let q = modularity(g, &communities, 1.0);
        if q > best {
            best = q;
        }
    });
    best
}

/// Criterion 5: Louvain matches the brute-force modularity maximum exactly
/// on every two-clique barbell of up to 8 nodes (and on the weighted barbell
/// built to favor merging), and splits the two-5-clique graph at the bridge.
#[test]
fn criterion_05_louvain_brute_force() {
    let mut instances = 0;
    for a in 1..=4usize {
        for b in a..=(8 - a) {
            let g = barbell(a, b, 1.0, 1.0);
            let p = louvain(&g, 5, 1.0, 1e-7);
            let best = brute_force_max_modularity(&g);
            assert_eq!(
                p.modularity, best,
                "barbell ({a},{b}): louvain {} vs brute force {best}",
                p.modularity
            );
            instances += 1;
        }
    }

    // Weighted barbell chosen so one merged community is the optimum.
    let heavy = barbell(2, 2, 3.0, 1.0);
    let p = louvain(&heavy, 5, 1.0, 1e-7);
    let best = brute_force_max_modularity(&heavy);
    assert_eq!(p.modularity, best);
    assert_eq!(p.communities.len(), 1);
    instances += 1;

    // Two 5-cliques split exactly at the bridge.
    let g = barbell(5, 5, 1.0, 1.0);
    let p = louvain(&g, 5, 1.0, 1e-7);
    let clique_a: BTreeSet<String> = (0..5).map(|i| format!("a{i}")).collect();
    let clique_b: BTreeSet<String> = (0..5).map(|i| format!("b{i}")).collect();
    assert_eq!(p.communities, vec![clique_a, clique_b]);

    println!("ACCEPTANCE 5 (louvain vs brute force on {instances} barbells): PASS");
}

fn random_conflict_graph(seed: u64) -> ConflictGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..20usize);
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random::<f64>() < 0.15 {
                let k = rng.random_range(1..10u64);
                let n_common = k + rng.random_range(0..20u64);
                edges.push(ConflictEdge {
                    source: names[s].clone(),
                    target: names[t].clone(),
                    k,
                    n_common,
                    weight: k as f64 / n_common as f64,
                    z: rng.random_range(3.0..30.0),
                    author_set: BTreeSet::new(),
                });
            }
        }
    }
    ConflictGraph::from_edges(edges)
}

/// Criterion 6: degree handshake invariants hold exactly on generated and
/// random graphs.
#[test]
fn criterion_06_graph_accounting() {
    // A generated pipeline graph.
    let scenario = synth::planted_scenario(8, 4, 8, 15, 2, 66);
    let mut lines = Vec::new();
    synth::generate(&scenario, &PipelineConfig::default(), &mut lines).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.threads = 1;
    let analysis = analyze_lines(&lines, &cfg);
    assert!(!analysis.graph.edges.is_empty());
    assert_handshake(&analysis.graph);

    // Random graphs.
    for seed in 0..200u64 {
        assert_handshake(&random_conflict_graph(seed));
    }
    println!("ACCEPTANCE 6 (graph accounting on generated + 200 random graphs): PASS");
}

/// Criterion 7: change_count equals a direct adjacent-pair scan on 10,000
/// random tracks, stays within 0..=11, and the endpoint semantics hold.
#[test]
fn criterion_07_change_count_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let track: Vec<Option<String>> = (0..12)
            .map(|_| {
                if rng.random::<f64>() < 0.25 {
                    None
                } else {
                    Some(format!("t{}", rng.random_range(0..4)))
                }
            })
            .collect();
        // Oracle: indexed scan with the None cases spelled out.
        let mut expected = 0u32;
        for i in 1..track.len() {
            let changed = match (&track[i - 1], &track[i]) {
                (None, None) => false,
                (Some(a), Some(b)) => a != b,
                _ => true,
            };
            if changed {
                expected += 1;
            }
        }
        let got = change_count(&track);
        assert_eq!(got, expected);
        assert!(got <= 11);
    }

    let steady: Vec<Option<String>> = (0..12).map(|_| Some("b".to_string())).collect();
    assert_eq!(change_count(&steady), 0);
    let alternating: Vec<Option<String>> = (0..12)
        .map(|i| Some(if i % 2 == 0 { "b" } else { "c" }.to_string()))
        .collect();
    assert_eq!(change_count(&alternating), 11);
    let mut with_gap = steady.clone();
    with_gap[2] = None;
    assert_eq!(change_count(&with_gap), 2);

    println!("ACCEPTANCE 7 (change_count oracle, 10000 tracks + endpoints): PASS");
}

/// Criterion 8: `all` on the bundled demo scenario is deterministic: same
/// seed twice gives byte-identical artifact trees, and so does changing only
/// the thread count. The edge report also matches a digest recorded from the
/// reference run.
#[test]
fn criterion_08_determinism() {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo.toml");
    let scenario = Scenario::from_file(&demo).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("comments.ndjson");
    synth::generate_to_path(&scenario, &PipelineConfig::default(), &input).unwrap();

    let run = |outdir: &Path, threads: usize| {
        let mut cfg = PipelineConfig::default();
        cfg.input = Some(input.clone());
        cfg.outdir = outdir.to_path_buf();
        cfg.seed = 7;
        cfg.threads = threads;
        pipeline::run_all(&cfg).unwrap();
        tree(outdir)
    };

    let first = run(&dir.path().join("a"), 1);
    let second = run(&dir.path().join("b"), 1);
    assert_eq!(first, second, "same seed, same threads");
    let with_threads = run(&dir.path().join("c"), 4);
    assert_eq!(first, with_threads, "thread count changed the artifacts");

    let edge_tests = String::from_utf8(first["edge_tests.csv"].clone()).unwrap();
    let digest = fnv1a_hex(edge_tests.as_bytes());
    println!("edge_tests.csv digest: {digest}");
    assert_eq!(
        digest, GOLDEN_EDGE_TESTS_DIGEST,
        "edge_tests.csv drifted from the recorded reference run:\n{edge_tests}"
    );
    println!("ACCEPTANCE 8 (determinism across reruns and thread counts): PASS");
}

/// Digest recorded once from the reference demo run.
const GOLDEN_EDGE_TESTS_DIGEST: &str = "79fc6f482ea6fa54";

fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Criterion 9: raising the significant-presence threshold from 10 to 20
/// never adds controversial authors or conflict edges; lowering it to 5
/// never removes any. The tiered scenario makes both directions strict.
#[test]
fn criterion_09_threshold_monotonicity() {
    // Three tiers of planted conflicts on disjoint pairs: comments per side
    // 25 (alive at threshold 20), 15 (alive at 10), 8 (alive at 5 only).
    let mut scenario = synth::planted_scenario(12, 0, 0, 15, 0, 31);
    scenario.background.iter_mut().for_each(|b| b.comments_each = 30);
    let tiers = [(25u32, "deep"), (15, "mid"), (8, "shallow")];
    let mut pair = 0usize;
    for (comments, label) in tiers {
        for i in 0..2 {
            scenario.conflicts.push(synth::ConflictSpec {
                name: format!("{label}{i}"),
                source: format!("s{:02}", 2 * pair),
                target: Some(format!("s{:02}", 2 * pair + 1)),
                targets: Vec::new(),
                authors: 12,
                comments_in_source: comments,
                comments_in_target: comments,
                active_months: None,
                source_rates: synth::Rates::new(0.9, 0.05, 0.05),
                target_rates: synth::Rates::new(0.05, 0.9, 0.05),
            });
            pair += 1;
        }
    }
    // Generate under the loosest threshold so the shallow tier validates.
    let mut gen_cfg = PipelineConfig::default();
    gen_cfg.min_sub_comments = 5;
    let mut lines = Vec::new();
    synth::generate(&scenario, &gen_cfg, &mut lines).unwrap();

    let measure = |min_sub: u64| -> (usize, usize) {
        let mut cfg = PipelineConfig::default();
        cfg.min_sub_comments = min_sub;
        cfg.threads = 1;
        cfg.seed = 3;
        let analysis = analyze_lines(&lines, &cfg);
        (
            analysis.controversial.len(),
            analysis.graph.edges.len(),
        )
    };

    let (con5, edges5) = measure(5);
    let (con10, edges10) = measure(10);
    let (con20, edges20) = measure(20);

    assert!(con20 <= con10 && con10 <= con5, "controversial: {con20} / {con10} / {con5}");
    assert!(edges20 <= edges10 && edges10 <= edges5, "edges: {edges20} / {edges10} / {edges5}");
    // The tiers are designed to make the direction strict end to end.
    assert!(con20 < con5 && edges20 < edges5);
    assert!(edges10 >= 4 && edges20 >= 2, "tiers missing: {edges20}/{edges10}/{edges5}");

    println!(
        "ACCEPTANCE 9 (threshold monotonicity: edges {edges20} <= {edges10} <= {edges5}, authors {con20} <= {con10} <= {con5}): PASS"
    );
}

fn write_perf_corpus(path: &Path, records: u64) {
    let file = std::fs::File::create(path).unwrap();
    let mut w = std::io::BufWriter::with_capacity(4 << 20, file);
    for i in 0..records {
        let author = i % 20_000;
        let sub = (author * 7 + (i / 20_000) % 5) % 211;
        let score = [3i64, -2, 0, 1, -1][(i % 5) as usize];
        let ts = 1451606400 + (i.wrapping_mul(2654435761)) % 31_536_000;
        writeln!(
            w,
            "{{\"author\":\"u{author:05}\",\"subreddit\":\"s{sub:03}\",\"score\":{score},\"created_utc\":{ts}}}"
        )
        .unwrap();
    }
    w.flush().unwrap();
}

/// Criterion 10: ingest + aggregate of 10 million records finishes under two
/// minutes single-threaded; a 4-thread run reproduces the output exactly and
/// speeds it up (>= 2x where 4 hardware threads exist).
#[test]
fn criterion_10_throughput_floor() {
    let _guard = lock_timing();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perf.ndjson");
    let records = 10_000_000u64;
    write_perf_corpus(&path, records);

    let window = AnalysisWindow::new(2016, 1, 12);
    let sentinels = std::collections::HashSet::new();

    let started = Instant::now();
    let (rows_seq, report) = corpus::ingest(&path, &window, &sentinels, 1, None).unwrap();
    let t1 = started.elapsed();
    assert_eq!(report.lines, records);
    assert_eq!(report.records, records);
    assert!(
        t1.as_secs_f64() < 120.0,
        "single-threaded ingest took {t1:?}, budget 120s"
    );

    let started = Instant::now();
    let (rows_par, report_par) = corpus::ingest(&path, &window, &sentinels, 4, None).unwrap();
    let t4 = started.elapsed();
    assert_eq!(report, report_par);
    assert_eq!(rows_seq, rows_par, "parallel ingest changed the aggregate");

    let speedup = t1.as_secs_f64() / t4.as_secs_f64();
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if cpus >= 4 {
        assert!(
            speedup >= 2.0,
            "4-thread speedup {speedup:.2}x below 2x on a {cpus}-CPU host"
        );
    } else {
        // The 2x bound presumes 4 hardware threads; on smaller hosts assert
        // that parallelism helps at all and report the measurement.
        assert!(
            speedup >= 1.2,
            "4-thread speedup {speedup:.2}x on a {cpus}-CPU host"
        );
        println!(
            "NOTE: only {cpus} CPUs available; measured speedup {speedup:.2}x (2x asserted on >=4-CPU hosts)"
        );
    }
    println!(
        "ACCEPTANCE 10 (throughput: {records} records, single-thread {t1:?}, 4-thread {t4:?}, speedup {speedup:.2}x): PASS"
    );
}
