//! Scenario generation and the batch benchmark runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::baselines::{SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::graph::{Graph, GridMap, HeuristicKind, VertexId};
use crate::io;
use crate::model::Agent;
use crate::sim::{run_online, OnlineInstance, RunFailure};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MapSource {
    Open { width: u32, height: u32 },
    /// Random blocked interior cells; border cells stay free.
    Obstacles { width: u32, height: u32, density: f64 },
    File { path: PathBuf },
}

impl MapSource {
    pub fn name(&self) -> String {
        match self {
            MapSource::Open { width, height } => format!("open{width}x{height}"),
            MapSource::Obstacles { width, height, density } => {
                format!("obst{width}x{height}d{}", (density * 100.0).round() as u32)
            }
            MapSource::File { path } => path
                .file_stem()
                .map_or_else(|| "map".to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn load(&self, rng: &mut ChaCha8Rng) -> Result<GridMap> {
        match self {
            MapSource::Open { width, height } => Ok(GridMap::open(*width, *height)),
            MapSource::Obstacles { width, height, density } => {
                let mut m = GridMap::open(*width, *height);
                for y in 1..height.saturating_sub(1) {
                    for x in 1..width.saturating_sub(1) {
                        if rng.gen_bool(density.clamp(0.0, 1.0)) {
                            m.set_blocked(x, y, true);
                        }
                    }
                }
                Ok(m)
            }
            MapSource::File { path } => io::load_map(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub maps: Vec<MapSource>,
    pub agent_counts: Vec<usize>,
    /// Instances per (map, agent count).
    pub instances: usize,
    /// Inclusive start-time range.
    pub start_times: (Time, Time),
    pub time_limit: f64,
    pub seed: u64,
    pub solvers: Vec<Variant>,
    #[serde(default)]
    pub heuristic: HeuristicKind,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl BenchSpec {
    /// The large-grid protocol at desk scale: one open 32x32 grid.
    pub fn desk_scale(agent_counts: Vec<usize>, instances: usize, seed: u64) -> Self {
        BenchSpec {
            maps: vec![MapSource::Open { width: 32, height: 32 }],
            agent_counts,
            instances,
            start_times: (1, 100),
            time_limit: 30.0,
            seed,
            solvers: Variant::ALL.to_vec(),
            heuristic: HeuristicKind::Manhattan,
            threads: None,
        }
    }
}

/// Cells on the four border sides: left, right, top, bottom.
fn sides(graph: &Graph) -> Result<[Vec<VertexId>; 4]> {
    let (w, h) = graph
        .grid_dims()
        .ok_or_else(|| Error::Usage("scenario generation needs a grid map".into()))?;
    let col = |x: u32| (0..h).filter_map(|y| graph.vertex_at(x, y)).collect::<Vec<_>>();
    let row = |y: u32| (0..w).filter_map(|x| graph.vertex_at(x, y)).collect::<Vec<_>>();
    Ok([col(0), col(w - 1), row(0), row(h - 1)])
}

/// `k` agents whose start and goal lie on opposite sides, with start times
/// uniform in `start_times` and distinct start cells per start time.
pub fn sample_agents(graph: &Graph, k: usize, start_times: (Time, Time), rng: &mut ChaCha8Rng) -> Result<Vec<Agent>> {
    let (lo, hi) = start_times;
    if lo > hi {
        return Err(Error::Usage(format!("empty start-time range [{lo}, {hi}]")));
    }
    let sides = sides(graph)?;
    let mut used: FxHashSet<(Time, VertexId)> = FxHashSet::default();
    let mut reach: BTreeMap<VertexId, Vec<u32>> = BTreeMap::new();
    let mut agents = Vec::with_capacity(k);
    for id in 0..k {
        let t = rng.gen_range(lo..=hi);
        let mut placed = false;
        for _ in 0..1000 {
            let pair = rng.gen_range(0..2) * 2;
            let flip = rng.gen_bool(0.5);
            let (from, to) = if flip { (pair + 1, pair) } else { (pair, pair + 1) };
            if sides[from].is_empty() || sides[to].is_empty() {
                continue;
            }
            let s = sides[from][rng.gen_range(0..sides[from].len())];
            let g = sides[to][rng.gen_range(0..sides[to].len())];
            if s == g || used.contains(&(t, s)) {
                continue;
            }
            let dist = reach.entry(s).or_insert_with(|| graph.distances_from(s));
            if dist[g.index()] == crate::time::INF {
                continue;
            }
            used.insert((t, s));
            agents.push(Agent::new(id as u32, t, s, g));
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Usage(format!(
                "not enough free side cells to place agent {id} of {k} at t={t}"
            )));
        }
    }
    // ids follow start order so a written scenario reads back identically
    agents.sort_by_key(|a| a.start_time);
    for (i, a) in agents.iter_mut().enumerate() {
        a.id = crate::model::AgentId(i as u32);
    }
    Ok(agents)
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub map_name: String,
    pub map: GridMap,
    pub k: usize,
    pub index: usize,
    pub instance: OnlineInstance,
}

impl BenchCase {
    pub fn file_stem(&self) -> String {
        format!("{}_k{}_{:03}", self.map_name, self.k, self.index)
    }
}

/// Every (map, k, index) instance of `spec`, deterministic under its seed.
pub fn generate_cases(spec: &BenchSpec) -> Result<Vec<BenchCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cases = Vec::new();
    for source in &spec.maps {
        let map = source.load(&mut rng)?;
        let graph = map.to_graph();
        let name = source.name();
        for &k in &spec.agent_counts {
            for index in 0..spec.instances {
                let mut inst_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                let agents = sample_agents(&graph, k, spec.start_times, &mut inst_rng)?;
                let id = format!("{name}_k{k}_{index:03}");
                cases.push(BenchCase {
                    map_name: name.clone(),
                    map: map.clone(),
                    k,
                    index,
                    instance: OnlineInstance::new(id, graph.clone(), agents)?,
                });
            }
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub map: String,
    pub scenario: String,
    pub k: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: BenchSpec,
    pub scenarios: Vec<ManifestEntry>,
}

/// Writes `<map>.map`, one `.scen` per case and `manifest.json` into `out`.
pub fn gen_scenarios(spec: &BenchSpec, out: &FsPath) -> Result<Manifest> {
    let cases = generate_cases(spec)?;
    let mut written_maps = FxHashSet::default();
    let mut entries = Vec::with_capacity(cases.len());
    for case in &cases {
        let map_file = format!("{}.map", case.map_name);
        if written_maps.insert(map_file.clone()) {
            io::write_text(&out.join(&map_file), &case.map.to_text())?;
        }
        let scen_file = format!("{}.scen", case.file_stem());
        io::write_text(
            &out.join(&scen_file),
            &io::scenario_text(&case.instance.agents, &case.instance.graph),
        )?;
        entries.push(ManifestEntry {
            map: map_file,
            scenario: scen_file,
            k: case.k,
            index: case.index,
        });
    }
    let manifest = Manifest {
        spec: spec.clone(),
        scenarios: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    io::write_text(&out.join("manifest.json"), &(text + "\n"))?;
    Ok(manifest)
}

/// Reads back the cases listed in `dir/manifest.json`.
pub fn load_cases(dir: &FsPath) -> Result<(BenchSpec, Vec<BenchCase>)> {
    let path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&io::read_text(&path)?)
        .map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))?;
    let mut cases = Vec::with_capacity(manifest.scenarios.len());
    for e in &manifest.scenarios {
        let map = io::load_map(&dir.join(&e.map))?;
        let instance = io::load_instance(&dir.join(&e.map), &dir.join(&e.scenario))?;
        cases.push(BenchCase {
            map_name: e.map.trim_end_matches(".map").to_string(),
            map,
            k: e.k,
            index: e.index,
            instance,
        });
    }
    Ok((manifest.spec, cases))
}

/// Outcome of one (instance, solver) run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub instance: String,
    pub k: usize,
    pub solver: Variant,
    pub success: bool,
    pub failure: Option<RunFailure>,
    pub time_s: f64,
    pub expansions: u64,
    pub ll_calls: u64,
    pub ctx_hits: u64,
    pub socs: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub k: usize,
    pub solver: Variant,
    pub success_rate: f64,
    pub mean_time_s: f64,
    /// Mean time of A1 divided by this solver's; empty without an A1 row.
    pub speedup_vs_a1: Option<f64>,
    pub expansions: f64,
    pub ctx_hit_rate: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub runs: Vec<RunSummary>,
    pub rows: Vec<BenchRow>,
}

/// Runs every case under every solver in a worker pool.
pub fn run_bench(spec: &BenchSpec, cases: &[BenchCase]) -> Result<BenchOutput> {
    let jobs: Vec<(usize, Variant)> = (0..cases.len())
        .flat_map(|i| spec.solvers.iter().map(move |&s| (i, s)))
        .collect();
    let work = || -> Result<Vec<RunSummary>> {
        jobs.par_iter()
            .map(|&(i, solver)| {
                let case = &cases[i];
                let config = SolverConfig {
                    variant: solver,
                    heuristic: spec.heuristic,
                    time_limit: spec.time_limit,
                    seed: spec.seed,
                };
                let report = run_online(&case.instance, &config)?;
                Ok(RunSummary {
                    instance: case.instance.id.clone(),
                    k: case.k,
                    solver,
                    success: report.success,
                    failure: report.failure,
                    time_s: report.total_time_s,
                    expansions: report.total_expansions(),
                    ll_calls: report.total_ll_calls(),
                    ctx_hits: report.total_ctx_hits(),
                    socs: report.iterations.iter().map(|r| r.soc).collect(),
                })
            })
            .collect()
    };
    let mut runs = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    runs.sort_by(|a, b| (a.k, &a.instance, a.solver).cmp(&(b.k, &b.instance, b.solver)));
    let rows = aggregate(&runs);
    Ok(BenchOutput { runs, rows })
}

/// Per-(k, solver) means; failed runs count at their recorded time, which
/// is the time limit for timeouts.
pub fn aggregate(runs: &[RunSummary]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<(usize, Variant), Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.k, r.solver)).or_default().push(r);
    }
    let mut rows: Vec<BenchRow> = groups
        .iter()
        .map(|(&(k, solver), rs)| {
            let n = rs.len() as f64;
            let calls: u64 = rs.iter().map(|r| r.ll_calls).sum();
            let hits: u64 = rs.iter().map(|r| r.ctx_hits).sum();
            BenchRow {
                k,
                solver,
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / n,
                mean_time_s: rs.iter().map(|r| r.time_s).sum::<f64>() / n,
                speedup_vs_a1: None,
                expansions: rs.iter().map(|r| r.expansions as f64).sum::<f64>() / n,
                ctx_hit_rate: if calls == 0 { 0.0 } else { hits as f64 / calls as f64 },
            }
        })
        .collect();
    let a1: BTreeMap<usize, f64> = rows
        .iter()
        .filter(|r| r.solver == Variant::A1)
        .map(|r| (r.k, r.mean_time_s))
        .collect();
    for row in &mut rows {
        row.speedup_vs_a1 = a1.get(&row.k).map(|&t| if row.mean_time_s > 0.0 { t / row.mean_time_s } else { 0.0 });
    }
    rows
}

#[derive(Serialize)]
struct CsvRow {
    k: usize,
    solver: String,
    success_rate: String,
    mean_time_s: String,
    #[serde(rename = "speedup_vs_A1")]
    speedup_vs_a1: String,
    expansions: String,
    ctx_hit_rate: String,
}

/// The per-(k, solver) table as CSV with a header row.
pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow {
            k: r.k,
            solver: r.solver.to_string(),
            success_rate: format!("{:.4}", r.success_rate),
            mean_time_s: format!("{:.4}", r.mean_time_s),
            speedup_vs_a1: r.speedup_vs_a1.map_or(String::new(), |s| format!("{s:.4}")),
            expansions: format!("{:.1}", r.expansions),
            ctx_hit_rate: format!("{:.4}", r.ctx_hit_rate),
        })
        .expect("csv row");
    }
    if rows.is_empty() {
        return "k,solver,success_rate,mean_time_s,speedup_vs_A1,expansions,ctx_hit_rate\n".to_string();
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8 csv")
}

/// Up to two decimals, trailing zeros dropped: 21.90 -> "21.9".
fn short(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// `time(speedup)` cell; A1's own speedup shows as `-`.
pub fn time_cell(row: &BenchRow) -> String {
    match (row.solver, row.speedup_vs_a1) {
        (Variant::A1, _) | (_, None) => format!("{}(-)", short(row.mean_time_s)),
        (_, Some(s)) => format!("{}({})", short(row.mean_time_s), short(s)),
    }
}

/// Markdown tables of running time (with speedup) and success rate, one
/// row per agent count.
pub fn markdown_tables(rows: &[BenchRow]) -> String {
    let solvers: Vec<Variant> = {
        let mut s: Vec<Variant> = rows.iter().map(|r| r.solver).collect();
        s.sort();
        s.dedup();
        s
    };
    let ks: Vec<usize> = {
        let mut k: Vec<usize> = rows.iter().map(|r| r.k).collect();
        k.dedup();
        k
    };
    let find = |k: usize, s: Variant| rows.iter().find(|r| r.k == k && r.solver == s);
    let header = |out: &mut String| {
        let names: Vec<&str> = solvers.iter().map(|s| s.name()).collect();
        let _ = writeln!(out, "| k | {} |", names.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(solvers.len()));
    };
    let mut out = String::from("Running time in seconds (speedup relative to A1)\n\n");
    header(&mut out);
    for &k in &ks {
        let cells: Vec<String> = solvers.iter().map(|&s| find(k, s).map_or("".into(), time_cell)).collect();
        let _ = writeln!(out, "| {k} | {} |", cells.join(" | "));
    }
    out.push_str("\nSuccess rate\n\n");
    header(&mut out);
    for &k in &ks {
        let cells: Vec<String> = solvers
            .iter()
            .map(|&s| find(k, s).map_or("".into(), |r| format!("{}%", (r.success_rate * 100.0).round())))
            .collect();
        let _ = writeln!(out, "| {k} | {} |", cells.join(" | "));
    }
    out
}
