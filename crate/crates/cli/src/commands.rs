use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subtraj_core::engine::{Engine, EtaSetting, Query, TemporalConstraint, Threshold};
use subtraj_core::persist;
use subtraj_core::scenario::{self, GenOptions, NetworkKind, ScenarioSpec};
use subtraj_core::traj::parse_trajectory_file;
use subtraj_core::{
    CostModel, CostModelKind, ExecMode, IndexOrdering, InvertedIndex, QueryResult, Representation,
    RoadNetwork, Symbol, TrajectoryDb, VerifyStats,
};

use crate::config::{self, FileConfig};
use crate::{
    BenchArgs, BuildIndexArgs, CliError, GenArgs, IngestArgs, ModelArgs, OracleCheckArgs, QueryArgs,
};

type CliResult = Result<(), CliError>;

pub fn gen(args: GenArgs) -> CliResult {
    let network = match &args.geometric {
        Some(spec) => {
            let (count, radius) = spec
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| CliError::config("--geometric expects COUNT,RADIUS"))?;
            NetworkKind::RandomGeometric { count, radius }
        }
        None => {
            let (rows, cols) = args
                .grid
                .split_once('x')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| CliError::config("--grid expects ROWSxCOLS"))?;
            NetworkKind::Grid { rows, cols }
        }
    };
    if args.len_min == 0 || args.len_max < args.len_min {
        return Err(CliError::config(
            "walk lengths must satisfy 1 <= len-min <= len-max",
        ));
    }
    let generated = scenario::generate(&GenOptions {
        seed: args.seed,
        network,
        num_trajectories: args.trajs,
        min_len: args.len_min,
        max_len: args.len_max,
        with_timestamps: !args.no_timestamps,
    });

    std::fs::create_dir_all(&args.out_dir)?;
    let write = |name: &str, body: String| -> Result<(), CliError> {
        std::fs::write(args.out_dir.join(name), body)?;
        Ok(())
    };
    let mut nodes = String::new();
    for (id, lon, lat) in &generated.nodes {
        nodes.push_str(&format!("{id}\t{lon}\t{lat}\n"));
    }
    write("nodes.tsv", nodes)?;
    let mut edges = String::new();
    for (id, src, dst, w) in &generated.edges {
        edges.push_str(&format!("{id}\t{src}\t{dst}\t{w}\n"));
    }
    write("edges.tsv", edges)?;
    let mut trajs = String::new();
    for rec in &generated.records {
        trajs.push_str(&format!("{}\t", rec.external_id));
        let parts: Vec<String> = match &rec.timestamps {
            Some(ts) => rec
                .vertices
                .iter()
                .zip(ts)
                .map(|(v, t)| format!("{v}:{t}"))
                .collect(),
            None => rec.vertices.iter().map(|v| v.to_string()).collect(),
        };
        trajs.push_str(&parts.join(","));
        trajs.push('\n');
    }
    write("trajs.tsv", trajs)?;
    println!(
        "generated {} nodes, {} edges, {} trajectories into {}",
        generated.nodes.len(),
        generated.edges.len(),
        generated.records.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn parse_representation(s: &str) -> Result<Representation, CliError> {
    match s {
        "vertex" => Ok(Representation::Vertex),
        "edge" => Ok(Representation::Edge),
        other => Err(CliError::config(format!(
            "unknown representation {other:?} (expected vertex or edge)"
        ))),
    }
}

pub fn ingest(args: IngestArgs) -> CliResult {
    let representation = parse_representation(&args.representation)?;
    let network = RoadNetwork::load(&args.nodes, &args.edges)?;
    let records = parse_trajectory_file(&args.trajs)?;
    let (db, rejected) = TrajectoryDb::ingest(&records, &network, representation)?;
    persist::save_db(&db, &args.out)?;
    println!(
        "ingested {} of {} trajectories ({} symbols, {} representation) into {}",
        db.len(),
        records.len(),
        db.total_symbols(),
        db.representation(),
        args.out.display()
    );
    if !rejected.is_empty() {
        for r in &rejected {
            eprintln!("{r}");
        }
        return Err(CliError::data(format!(
            "{} trajectories rejected",
            rejected.len()
        )));
    }
    Ok(())
}

pub fn build_index(args: BuildIndexArgs) -> CliResult {
    let db = persist::load_db(&args.db)?;
    let ordering = if args.temporal_order {
        IndexOrdering::ByDeparture
    } else {
        IndexOrdering::ByPosition
    };
    let index = InvertedIndex::build_with_ordering(&db, ordering);
    index.save(&args.out)?;
    println!(
        "indexed {} postings over {} symbols into {}",
        index.total_postings(),
        index.alphabet_size(),
        args.out.display()
    );
    Ok(())
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("missing {what} (flag or config file)")))
}

fn build_model(
    args: &ModelArgs,
    file: &FileConfig,
    network: &RoadNetwork,
    representation: Representation,
) -> Result<(CostModel, EtaSetting), CliError> {
    let name = require(args.cost.clone().or_else(|| file.cost.clone()), "--cost")?;
    let kind = CostModelKind::parse(&name)?;
    let epsilon = args.epsilon.or(file.epsilon);
    let neterp_del = args.neterp_del.or(file.neterp_del);
    let erp_ref = args.erp_ref.clone().or_else(|| file.erp_ref.clone());

    let model = match kind {
        CostModelKind::Lev => CostModel::lev(representation),
        CostModelKind::Edr => CostModel::edr(require(epsilon, "--epsilon")?)?,
        CostModelKind::NetEdr => CostModel::net_edr(require(epsilon, "--epsilon")?)?,
        CostModelKind::NetErp => CostModel::net_erp(require(neterp_del, "--neterp-del")?)?,
        CostModelKind::Surs => CostModel::surs(),
        CostModelKind::Erp => {
            let reference = match erp_ref.as_deref() {
                None | Some("auto") => network.barycenter(),
                Some(spec) => spec
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| CliError::config("--erp-ref expects LON,LAT or auto"))?,
            };
            CostModel::erp(reference)
        }
        CostModelKind::Table => unreachable!("parse only yields the six standard models"),
    };

    let eta = match args.eta.clone().or_else(|| file.eta_string()) {
        None => EtaSetting::Auto,
        Some(s) if s == "auto" => EtaSetting::Auto,
        Some(s) => EtaSetting::Fixed(
            s.parse()
                .map_err(|_| CliError::config(format!("bad --eta value {s:?}")))?,
        ),
    };
    Ok((model, eta))
}

struct Loaded {
    engine: Engine,
}

fn load_engine(
    nodes: Option<PathBuf>,
    edges: Option<PathBuf>,
    db: Option<PathBuf>,
    index: Option<PathBuf>,
    model_args: &ModelArgs,
    file: &FileConfig,
) -> Result<Loaded, CliError> {
    let nodes = require(nodes.or_else(|| file.paths.nodes.clone()), "--nodes")?;
    let edges = require(edges.or_else(|| file.paths.edges.clone()), "--edges")?;
    let db_path = require(db.or_else(|| file.paths.db.clone()), "--db")?;
    let index_path = index.or_else(|| file.paths.index.clone());

    let network = Arc::new(RoadNetwork::load(&nodes, &edges)?);
    let db = Arc::new(persist::load_db(&db_path)?);
    let index = Arc::new(match index_path {
        Some(p) => InvertedIndex::load(&p)?,
        None => InvertedIndex::build(&db),
    });
    let (model, eta) = build_model(model_args, file, &network, db.representation())?;
    let engine = Engine::new(network, db, index, model, eta)?;
    Ok(Loaded { engine })
}

fn map_symbols(engine: &Engine, ext: &[i64]) -> Result<Vec<Symbol>, CliError> {
    let network = engine.network();
    ext.iter()
        .map(|&e| match engine.db().representation() {
            Representation::Vertex => network
                .vertex_by_external(e)
                .map(|v| v.0)
                .ok_or_else(|| CliError::data(format!("unknown vertex id {e}"))),
            Representation::Edge => network
                .edge_by_external(e)
                .map(|v| v.0)
                .ok_or_else(|| CliError::data(format!("unknown edge id {e}"))),
        })
        .collect()
}

fn parse_interval(s: &str) -> Result<(f64, f64), CliError> {
    s.split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .ok_or_else(|| CliError::config("--interval expects LO,HI"))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::config(format!("bad {what} list {s:?}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::config(format!("bad {what} list {s:?}")))
        })
        .collect()
}

/// Write one line, reporting whether the consumer is still listening: a
/// closed pipe (e.g. piping into `head`) ends output without an error.
fn write_line(out: &mut impl Write, line: std::fmt::Arguments<'_>) -> Result<bool, CliError> {
    match out.write_fmt(line).and_then(|()| out.write_all(b"\n")) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
        Err(e) => Err(e.into()),
    }
}

fn emit_matches(
    out: &mut impl Write,
    engine: &Engine,
    result: &QueryResult,
    format: &str,
    query_idx: Option<usize>,
) -> Result<bool, CliError> {
    for m in &result.matches {
        let ext = engine.db().get(m.traj)?.external_id;
        let alive = match format {
            "jsonl" => {
                let mut obj = serde_json::json!({
                    "traj": ext, "s": m.s, "t": m.t, "wed": m.value,
                });
                if let Some(qi) = query_idx {
                    obj["query"] = serde_json::json!(qi);
                }
                write_line(out, format_args!("{obj}"))?
            }
            _ => write_line(out, format_args!("{ext}\t{}\t{}\t{}", m.s, m.t, m.value))?,
        };
        if !alive {
            return Ok(false);
        }
    }
    Ok(true)
}

fn print_stats(result: &QueryResult) {
    let v = &result.stats.verify;
    eprintln!(
        "stats: tau={} eta={} candidates={} verified={} matches={} upr={:.2}% cmr={:.2}% tur={:.2}% \
         selection={:?} lookup={:?} verify={:?}",
        result.stats.tau,
        result.stats.eta,
        result.stats.candidates_generated,
        result.stats.candidates_verified,
        result.matches.len(),
        v.unpruned_rate() * 100.0,
        v.cache_miss_rate() * 100.0,
        v.total_unpruned_rate() * 100.0,
        result.stats.selection_time,
        result.stats.lookup_time,
        result.stats.verify_time,
    );
}

pub fn query(args: QueryArgs) -> CliResult {
    let file = config::load(args.config.as_ref())?;
    let loaded = load_engine(
        args.nodes.clone(),
        args.edges.clone(),
        args.db.clone(),
        args.index.clone(),
        &args.model,
        &file,
    )?;
    let engine = &loaded.engine;

    let threshold = match (
        args.tau.or(file.query.tau),
        args.tau_ratio.or(file.query.tau_ratio),
    ) {
        (Some(t), None) => Threshold::Absolute(t),
        (None, Some(r)) => Threshold::Ratio(r),
        (Some(_), Some(_)) => {
            return Err(CliError::config("give exactly one of --tau / --tau-ratio"))
        }
        (None, None) => return Err(CliError::config("give one of --tau / --tau-ratio")),
    };
    let temporal = match (&args.temporal, &args.interval) {
        (None, _) => None,
        (Some(kind), Some(interval)) => {
            let (lo, hi) = parse_interval(interval)?;
            Some(match kind.as_str() {
                "contained" => TemporalConstraint::ContainedIn(lo, hi),
                "overlaps" => TemporalConstraint::Overlaps(lo, hi),
                other => {
                    return Err(CliError::config(format!(
                        "unknown temporal constraint {other:?} (contained or overlaps)"
                    )))
                }
            })
        }
        (Some(_), None) => return Err(CliError::config("--temporal requires --interval")),
    };

    let symbol_lists: Vec<Vec<Symbol>> = if let Some(inline) = &args.symbols {
        let ext: Vec<i64> = inline
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| CliError::config("bad --symbols list"))
            })
            .collect::<Result<_, _>>()?;
        vec![map_symbols(engine, &ext)?]
    } else if let Some(path) = &args.query_file {
        let records = parse_trajectory_file(path)?;
        records
            .iter()
            .map(|r| map_symbols(engine, &r.vertices))
            .collect::<Result<_, _>>()?
    } else if let Some(len) = args.sample_len {
        vec![
            sample_symbols(engine.db(), len, args.sample_seed).ok_or_else(|| {
                CliError::config(format!("no trajectory of length >= {len} to sample"))
            })?,
        ]
    } else {
        return Err(CliError::config(
            "give one of --symbols / --query-file / --sample-len",
        ));
    };

    let format = args
        .format
        .clone()
        .or_else(|| file.query.format.clone())
        .unwrap_or_else(|| "tsv".into());
    if format != "tsv" && format != "jsonl" {
        return Err(CliError::config(format!(
            "unknown format {format:?} (tsv or jsonl)"
        )));
    }

    let queries: Vec<Query> = symbol_lists
        .into_iter()
        .map(|symbols| Query {
            symbols,
            threshold,
            temporal,
        })
        .collect();
    let batch = queries.len() > 1;
    let results = engine.run_batch(&queries, ExecMode::default());

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failed_checks = 0usize;
    let mut listening = true;
    for (i, (query, result)) in queries.iter().zip(results).enumerate() {
        let result = result?;
        if listening && batch && format == "tsv" {
            listening = write_line(&mut out, format_args!("# query {i}"))?;
        }
        if listening {
            listening = emit_matches(&mut out, engine, &result, &format, batch.then_some(i))?;
        }
        if args.stats {
            print_stats(&result);
        }
        if args.oracle_check {
            let scan = engine.plain_sw_scan(query, ExecMode::default())?;
            let a: Vec<_> = result.matches.iter().map(|m| (m.traj, m.s, m.t)).collect();
            let b: Vec<_> = scan.matches.iter().map(|m| (m.traj, m.s, m.t)).collect();
            if a == b {
                eprintln!("oracle check: PASS ({} matches)", a.len());
            } else {
                eprintln!(
                    "oracle check: FAIL (search {} matches, scan {} matches)",
                    a.len(),
                    b.len()
                );
                failed_checks += 1;
            }
        }
    }
    if failed_checks > 0 {
        return Err(CliError::mismatch(format!(
            "{failed_checks} oracle checks failed"
        )));
    }
    Ok(())
}

fn sample_symbols(db: &TrajectoryDb, len: usize, seed: u64) -> Option<Vec<Symbol>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eligible: Vec<u32> = db
        .iter()
        .filter(|(_, t)| t.len() >= len)
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let id = eligible[rng.gen_range(0..eligible.len())];
    let traj = &db.trajectories()[id as usize];
    let start = rng.gen_range(0..=traj.len() - len);
    Some(traj.symbols[start..start + len].to_vec())
}

pub fn bench(args: BenchArgs) -> CliResult {
    let file = config::load(args.config.as_ref())?;
    let loaded = load_engine(
        args.nodes.clone(),
        args.edges.clone(),
        args.db.clone(),
        args.index.clone(),
        &args.model,
        &file,
    )?;
    let engine = &loaded.engine;
    let ratios = parse_f64_list(&args.tau_ratios, "--tau-ratios")?;
    let lens = parse_usize_list(&args.q_lens, "--q-lens")?;
    let mode = if args.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    };

    let mut header = vec![
        "q_len",
        "tau_ratio",
        "queries",
        "matches_mean",
        "candidates_mean",
        "total_ms_mean",
        "selection_us_mean",
        "lookup_us_mean",
        "verify_ms_mean",
        "upr_pct",
        "cmr_pct",
        "tur_pct",
    ];
    if args.compare_prefix {
        header.push("prefix_candidates_mean");
    }
    if args.with_scan {
        header.push("scan_ms_mean");
    }
    println!("{}", header.join("\t"));

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for &len in &lens {
        for &ratio in &ratios {
            let mut queries = Vec::new();
            for _ in 0..args.queries {
                if let Some(symbols) = sample_symbols(engine.db(), len, rng.gen()) {
                    queries.push(Query {
                        symbols,
                        threshold: Threshold::Ratio(ratio),
                        temporal: None,
                    });
                }
            }
            if queries.is_empty() {
                eprintln!("skipping q_len {len}: no trajectory long enough to sample");
                continue;
            }
            let results = engine.run_batch(&queries, mode);
            let mut agg = VerifyStats::default();
            let mut candidates = 0u64;
            let mut matches = 0u64;
            let mut total = std::time::Duration::ZERO;
            let mut selection = std::time::Duration::ZERO;
            let mut lookup = std::time::Duration::ZERO;
            let mut verify = std::time::Duration::ZERO;
            let mut oks = Vec::new();
            for r in results {
                let r = r?;
                agg.merge(&r.stats.verify);
                candidates += r.stats.candidates_generated;
                matches += r.matches.len() as u64;
                selection += r.stats.selection_time;
                lookup += r.stats.lookup_time;
                verify += r.stats.verify_time;
                total += r.stats.selection_time + r.stats.lookup_time + r.stats.verify_time;
                oks.push(r);
            }
            let n = oks.len() as f64;
            let mut row = vec![
                len.to_string(),
                ratio.to_string(),
                oks.len().to_string(),
                format!("{:.2}", matches as f64 / n),
                format!("{:.2}", candidates as f64 / n),
                format!("{:.3}", total.as_secs_f64() * 1e3 / n),
                format!("{:.1}", selection.as_secs_f64() * 1e6 / n),
                format!("{:.1}", lookup.as_secs_f64() * 1e6 / n),
                format!("{:.3}", verify.as_secs_f64() * 1e3 / n),
                format!("{:.2}", agg.unpruned_rate() * 100.0),
                format!("{:.2}", agg.cache_miss_rate() * 100.0),
                format!("{:.2}", agg.total_unpruned_rate() * 100.0),
            ];
            if args.compare_prefix {
                let mut prefix_total = 0u64;
                for (q, r) in queries.iter().zip(&oks) {
                    prefix_total += prefix_candidates(engine, q, r)?;
                }
                row.push(format!("{:.2}", prefix_total as f64 / n));
            }
            if args.with_scan {
                let t0 = std::time::Instant::now();
                for q in &queries {
                    engine.plain_sw_scan(q, mode)?;
                }
                row.push(format!("{:.3}", t0.elapsed().as_secs_f64() * 1e3 / n));
            }
            println!("{}", row.join("\t"));
        }
    }
    Ok(())
}

/// Candidate total under the alternative selection that takes the shortest
/// query prefix whose escape costs reach the threshold. Reported for
/// comparison only.
fn prefix_candidates(
    engine: &Engine,
    query: &Query,
    result: &QueryResult,
) -> Result<u64, CliError> {
    let model = engine.model().clone().with_eta(result.stats.eta)?;
    let network = engine.network();
    let mut acc = 0.0;
    let mut total = 0u64;
    for &sym in &query.symbols {
        if acc >= result.stats.tau {
            break;
        }
        acc += model.escape_cost(sym, network);
        total += model
            .neighbors(sym, network)
            .iter()
            .map(|&b| engine.index().frequency(b))
            .sum::<u64>();
    }
    Ok(total)
}

pub fn oracle_check(args: OracleCheckArgs) -> CliResult {
    let models: Vec<CostModelKind> = if args.models == "all" {
        CostModelKind::all_standard().to_vec()
    } else {
        args.models
            .split(',')
            .map(|m| CostModelKind::parse(m.trim()).map_err(CliError::from))
            .collect::<Result<_, _>>()?
    };
    let q_lens = parse_usize_list(&args.q_lens, "--q-lens")?;
    let tau_ratios = parse_f64_list(&args.tau_ratios, "--tau-ratios")?;
    let mut specs = Vec::new();
    for &model in &models {
        for s in args.seed..args.seed + args.scenarios {
            let mut spec = ScenarioSpec::desk(s, model);
            spec.num_trajectories = args.trajs;
            spec.max_len = args.max_len.max(spec.min_len);
            spec.query_lens = q_lens.clone();
            spec.tau_ratios = tau_ratios.clone();
            spec.temporal = args.temporal;
            specs.push(spec);
        }
    }
    let mode = if args.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    };
    let report = scenario::run_oracle_equivalence(&specs, mode)?;
    println!(
        "scenarios={} queries={} matches={} mismatches={} coverage_misses={} \
         conservation_violations={} counter_violations={} candidate_identity_violations={} \
         temporal_violations={} errors={}",
        report.scenarios,
        report.queries,
        report.total_matches,
        report.counts.result_mismatches + report.counts.value_mismatches,
        report.counts.coverage_misses,
        report.counts.conservation_violations,
        report.counts.counter_violations,
        report.counts.candidate_identity_violations,
        report.counts.temporal_violations,
        report.counts.errors,
    );
    for (ratio, tur) in &report.mean_tur_by_ratio {
        println!("mean_tur\tratio={ratio}\t{:.4}%", tur * 100.0);
    }
    if report.passed() {
        println!("oracle equivalence: PASS");
        Ok(())
    } else {
        for f in &report.failures {
            eprintln!("{f}");
        }
        Err(CliError::mismatch(format!(
            "{} checks failed",
            report.failures.len()
        )))
    }
}
