//! End-to-end run: risk, sizing, macro candidates, macro solve, micro
//! candidates, calibration, micro solve, indicators and representatives.
//!
//! Each stage persists its outputs into a [`Bundle`] as soon as it
//! finishes. The stage functions are public so the CLI can run any stage on
//! its own from persisted upstream files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::instance::{Demand, InstanceFile};
use crate::io::{archive_rows, geojson, opt, parse_sites, read_json, site_list, Bundle, ARCHIVE_HEADER};
use crate::macro_model::{solve_macro, MacroPlan, MacroProblem, MacroSolution};
use crate::metrics::{coverage_report, indicator_trace, CoverageReport, IndicatorRow, ParetoArchive, StationLayer};
use crate::micro_model::{calibrate_workload, solve_micro, MicroProblem, MicroSolution, WorkloadCalibration};
use crate::selection::{pick_weighted, RepresentativeSet};
use crate::sizing::{annulus_filter, generate_candidates, SizingReport};

pub const STAGES: [&str; 9] = [
    "risk",
    "size",
    "candidates",
    "solve-macro",
    "micro-candidates",
    "calibrate",
    "solve-micro",
    "metrics",
    "select",
];

/// Outputs of the cheap deterministic stages that every later stage needs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub demand: Demand,
    pub sizing: SizingReport,
    pub macro_candidates: PointSet,
}

/// Persisted macro result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPlanFile {
    pub plan: MacroPlan,
    pub feasible: bool,
    pub violation: f64,
    pub new_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRunRow {
    pub run: usize,
    pub seed: u64,
    pub front_size: usize,
    pub max_mean_workload: Option<f64>,
}

/// Persisted calibration summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub cap: f64,
    pub runs: Vec<CalibrationRunRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub config_sha256: String,
    pub instance_sha256: String,
    pub stages: Vec<String>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    /// SHA-256 of every output file except the manifest itself.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub macro_feasible: bool,
    pub micro_feasible: bool,
    pub cap: f64,
    pub manifest: Manifest,
}

impl PipelineSummary {
    pub fn feasible(&self) -> bool {
        self.macro_feasible && self.micro_feasible
    }
}

fn at<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage, source: Box::new(e) })
}

pub fn risk_stage(inst: &InstanceFile, cfg: &RunConfig, bundle: &mut Bundle) -> Result<Demand> {
    let demand = inst.demand(cfg.risk.classes, cfg.risk.gamma)?;
    let rows: Vec<Vec<String>> = demand
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (ra, rp) = match &demand.scores {
                Some(s) => (s[i].accident_rank.to_string(), s[i].density_rank.to_string()),
                None => (String::new(), String::new()),
            };
            vec![p.id.clone(), ra, rp, demand.values[i].to_string()]
        })
        .collect();
    bundle.put_csv("risk.csv", &["id", "r_a", "r_p", "a"], &rows)?;
    Ok(demand)
}

pub fn size_stage(inst: &InstanceFile, cfg: &RunConfig, bundle: &mut Bundle) -> Result<SizingReport> {
    let mut sizing = cfg.sizing.clone();
    if let Some(a) = inst.total_area {
        sizing.total_area = a;
    }
    let report = sizing.resolve(inst.existing.len())?;
    bundle.put_json("sizing.json", &report)?;
    Ok(report)
}

fn network_candidates(inst: &InstanceFile, cfg: &RunConfig, tier: &str) -> Result<PointSet> {
    let net = inst
        .road_network
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("instance has neither {tier} candidates nor a road network")))?;
    generate_candidates(net, cfg.sizing.candidate_spacing, cfg.sizing.junction_clearance, true)
}

pub fn candidates_stage(inst: &InstanceFile, cfg: &RunConfig, bundle: &mut Bundle) -> Result<PointSet> {
    let cands = match &inst.macro_candidates {
        Some(c) => c.clone(),
        None => network_candidates(inst, cfg, "macro")?,
    };
    bundle.put_json("macro_candidates.json", &cands)?;
    Ok(cands)
}

pub fn macro_problem(inst: &InstanceFile, cfg: &RunConfig, prep: &Prepared) -> Result<MacroProblem> {
    let s = &prep.sizing;
    Ok(MacroProblem::new(
        prep.demand.points.clone(),
        prep.demand.values.clone(),
        prep.macro_candidates.clone(),
        inst.existing.clone(),
        s.macro_radius,
        (s.bounds.macro_min, s.bounds.macro_max),
        s.new_macro_count,
        cfg.metric,
        inst.road_network.as_ref(),
    )?
    .with_mode(cfg.adjacency))
}

pub fn macro_plan_file(problem: &MacroProblem, selected: &[usize]) -> MacroPlanFile {
    let violation = problem.violation(selected);
    MacroPlanFile { plan: problem.plan(selected), feasible: violation == 0.0, violation, new_count: problem.new_count }
}

pub fn solve_macro_stage(problem: &MacroProblem, cfg: &RunConfig, bundle: &mut Bundle) -> Result<MacroSolution> {
    let sol = solve_macro(problem, &cfg.macro_params())?;
    let file = MacroPlanFile {
        plan: sol.plan.clone(),
        feasible: sol.feasible,
        violation: sol.violation,
        new_count: problem.new_count,
    };
    bundle.put_json("macro_plan.json", &file)?;
    let rows: Vec<Vec<String>> = sol
        .trace
        .iter()
        .map(|t| vec![t.generation.to_string(), t.fitness.to_string(), t.violation.to_string()])
        .collect();
    bundle.put_csv("macro_trace.csv", &["generation", "fitness", "violation"], &rows)?;
    Ok(sol)
}

/// Selected sites of a persisted macro plan.
pub fn load_macro_plan(bundle: &Bundle, problem: &MacroProblem) -> Result<Vec<usize>> {
    let file: MacroPlanFile = read_json(&bundle.path("macro_plan.json"))?;
    parse_sites(&file.plan.selected_ids.join(";"), &problem.candidates)
}

/// Existing stations followed by the new macro stations.
pub fn anchors(inst: &InstanceFile, problem: &MacroProblem, selected: &[usize]) -> Result<PointSet> {
    inst.existing.chain(&problem.selected_points(selected))
}

pub fn micro_candidates_stage(
    inst: &InstanceFile,
    cfg: &RunConfig,
    prep: &Prepared,
    anchors: &PointSet,
    bundle: &mut Bundle,
) -> Result<PointSet> {
    let base = match &inst.micro_candidates {
        Some(c) => c.clone(),
        None => network_candidates(inst, cfg, "micro")?,
    };
    let b = &prep.sizing.bounds;
    let cands = annulus_filter(&base, anchors, b.micro_min, b.micro_max)?;
    bundle.put_json("micro_candidates.json", &cands)?;
    Ok(cands)
}

pub fn micro_problem(
    inst: &InstanceFile,
    cfg: &RunConfig,
    prep: &Prepared,
    candidates: &PointSet,
    anchors: &PointSet,
    cap: Option<f64>,
) -> Result<MicroProblem> {
    let b = &prep.sizing.bounds;
    MicroProblem::new(
        prep.demand.points.clone(),
        prep.demand.values.clone(),
        candidates.clone(),
        anchors.clone(),
        prep.sizing.micro_radius,
        (b.micro_min, b.micro_max),
        cap,
        cfg.metric,
        inst.road_network.as_ref(),
    )
}

pub fn calibrate_stage(problem: &MicroProblem, cfg: &RunConfig, bundle: &mut Bundle) -> Result<WorkloadCalibration> {
    let cal = calibrate_workload(problem, &cfg.calibration_params(), cfg.calibration_runs)?;
    let file = CalibrationFile {
        cap: cal.cap,
        runs: cal
            .runs
            .iter()
            .map(|r| CalibrationRunRow {
                run: r.run,
                seed: r.seed,
                front_size: r.archive.len(),
                max_mean_workload: r.max_workload,
            })
            .collect(),
    };
    bundle.put_json("calibration.json", &file)?;
    let summary: Vec<Vec<String>> = file
        .runs
        .iter()
        .map(|r| vec![r.run.to_string(), r.seed.to_string(), r.front_size.to_string(), opt(r.max_mean_workload)])
        .collect();
    bundle.put_csv("calibration_runs.csv", &["run", "seed", "front_size", "max_mean_workload"], &summary)?;
    let mut rows = Vec::new();
    for r in &cal.runs {
        for (k, e) in r.archive.entries().iter().enumerate() {
            let mut row = vec![r.run.to_string(), r.seed.to_string(), format!("s{k}")];
            row.extend(e.objectives.iter().map(f64::to_string));
            row.push(r.workloads[k].to_string());
            row.push(site_list(&e.chromosome.selected(), &problem.candidates));
            rows.push(row);
        }
    }
    bundle.put_csv(
        "calibration_archives.csv",
        &["run", "seed", "solution", "F1", "F2", "F3", "mean_workload", "sites"],
        &rows,
    )?;
    Ok(cal)
}

pub fn solve_micro_stage(problem: &MicroProblem, cfg: &RunConfig, bundle: &mut Bundle) -> Result<MicroSolution> {
    let sol = solve_micro(problem, &cfg.micro_params())?;
    bundle.put_csv("micro_archive.csv", &ARCHIVE_HEADER, &archive_rows(&sol.archive, sol.feasible, &problem.candidates))?;
    let mut rows = Vec::new();
    for snap in &sol.history {
        let mut front = snap.archive.clone();
        front.sort_by(|a, b| crate::metrics::lex_cmp(a, b));
        for p in front {
            let mut row = vec![snap.generation.to_string()];
            row.extend(p.iter().map(f64::to_string));
            rows.push(row);
        }
    }
    bundle.put_csv("micro_fronts.csv", &["generation", "F1", "F2", "F3"], &rows)?;
    Ok(sol)
}

/// Per-generation fronts of a `micro_fronts.csv` file.
pub fn read_fronts(path: &Path) -> Result<Vec<(usize, Vec<Vec<f64>>)>> {
    let (_, rows) = crate::io::read_csv(path)?;
    let mut by_gen: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for r in rows {
        let bad = |s: &str| Error::Validation(format!("bad value `{s}` in {}", path.display()));
        let g: usize = r[0].parse().map_err(|_| bad(&r[0]))?;
        let p = r[1..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(s)))
            .collect::<Result<Vec<_>>>()?;
        by_gen.entry(g).or_default().push(p);
    }
    Ok(by_gen.into_iter().collect())
}

pub fn metrics_stage(
    fronts: &[(usize, Vec<Vec<f64>>)],
    cfg: &RunConfig,
    bundle: &mut Bundle,
) -> Result<Vec<IndicatorRow>> {
    let trace = indicator_trace(fronts, cfg.indicators.reference, cfg.indicators.normalize);
    let rows: Vec<Vec<String>> = trace
        .iter()
        .map(|r| vec![r.generation.to_string(), r.size.to_string(), r.hypervolume.to_string(), opt(r.spacing)])
        .collect();
    bundle.put_csv("indicators.csv", &["generation", "size", "hypervolume", "spacing"], &rows)?;
    Ok(trace)
}

/// Representatives of the final front with coverage statistics of the
/// combined macro and micro system.
pub fn select_stage(
    inst: &InstanceFile,
    cfg: &RunConfig,
    prep: &Prepared,
    micro: &MicroProblem,
    archive: &ParetoArchive,
    bundle: &mut Bundle,
) -> Result<(RepresentativeSet, Vec<CoverageReport>)> {
    let reps = pick_weighted(archive, &cfg.weights)?;
    let macro_layer = StationLayer { stations: micro.anchors.clone(), radius: prep.sizing.macro_radius };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut layers: Vec<(String, PointSet)> = vec![("macro".into(), micro.anchors.clone())];
    for r in reps.all() {
        let stations = micro.candidates.subset(&r.selected);
        let layer = StationLayer { stations: stations.clone(), radius: prep.sizing.micro_radius };
        let rep = coverage_report(
            &prep.demand.points,
            &prep.demand.values,
            &[macro_layer.clone(), layer],
            inst.incidents.as_ref(),
            cfg.high_risk_threshold,
        )?;
        let mut row = vec![r.label.to_string()];
        row.extend(r.objectives.iter().map(f64::to_string));
        row.push(r.score.to_string());
        row.extend([rep.high_risk_rate, rep.demand_rate, rep.community_rate, rep.incident_rate].map(opt));
        row.push(site_list(&r.selected, &micro.candidates));
        rows.push(row);
        reports.push(rep);
        layers.push((format!("micro-{}", r.label), stations));
    }
    bundle.put_csv(
        "representatives.csv",
        &[
            "solution",
            "F1",
            "F2",
            "F3",
            "score",
            "high_risk_rate",
            "demand_rate",
            "community_rate",
            "incident_rate",
            "stations",
        ],
        &rows,
    )?;
    let radii = [prep.sizing.macro_radius, prep.sizing.micro_radius];
    let refs: Vec<(&str, &PointSet, f64)> = layers
        .iter()
        .enumerate()
        .map(|(k, (role, pts))| (role.as_str(), pts, radii[(k > 0) as usize]))
        .collect();
    let props = json!({ "coverage": reports });
    bundle.put_json("representatives.geojson", &geojson(&refs, props))?;
    Ok((reps, reports))
}

struct Outcome {
    macro_feasible: bool,
    micro_feasible: bool,
    cap: f64,
}

fn run_stages(inst: &InstanceFile, cfg: &RunConfig, bundle: &mut Bundle, done: &mut Vec<String>) -> Result<Outcome> {
    let mut mark = |s: &str| done.push(s.to_string());
    let demand = at("risk", risk_stage(inst, cfg, bundle))?;
    mark("risk");
    let sizing = at("size", size_stage(inst, cfg, bundle))?;
    mark("size");
    let macro_candidates = at("candidates", candidates_stage(inst, cfg, bundle))?;
    mark("candidates");
    let prep = Prepared { demand, sizing, macro_candidates };

    let mp = at("solve-macro", macro_problem(inst, cfg, &prep))?;
    let msol = at("solve-macro", solve_macro_stage(&mp, cfg, bundle))?;
    mark("solve-macro");
    let anchor_set = at("micro-candidates", anchors(inst, &mp, &msol.plan.selected))?;
    let geo = geojson(
        &[("existing", &inst.existing, prep.sizing.macro_radius), ("new", &mp.selected_points(&msol.plan.selected), prep.sizing.macro_radius)],
        json!({ "fitness": msol.plan.total_covered_demand, "feasible": msol.feasible }),
    );
    at("solve-macro", bundle.put_json("macro_plan.geojson", &geo))?;
    let micro_cands = at("micro-candidates", micro_candidates_stage(inst, cfg, &prep, &anchor_set, bundle))?;
    mark("micro-candidates");

    let uncapped = at("calibrate", micro_problem(inst, cfg, &prep, &micro_cands, &anchor_set, None))?;
    let cal = at("calibrate", calibrate_stage(&uncapped, cfg, bundle))?;
    mark("calibrate");
    let capped = uncapped.with_cap(Some(cal.cap));
    let msol2 = at("solve-micro", solve_micro_stage(&capped, cfg, bundle))?;
    mark("solve-micro");
    let fronts: Vec<(usize, Vec<Vec<f64>>)> = msol2.history.iter().map(|s| (s.generation, s.archive.clone())).collect();
    at("metrics", metrics_stage(&fronts, cfg, bundle))?;
    mark("metrics");
    at("select", select_stage(inst, cfg, &prep, &capped, &msol2.archive, bundle))?;
    mark("select");
    Ok(Outcome { macro_feasible: msol.feasible, micro_feasible: msol2.feasible, cap: cal.cap })
}

/// Runs every stage into `out`. The effective config and instance are
/// written alongside so `pipeline --config out/config.json --instance
/// out/instance.json` replays the run.
pub fn run_pipeline(inst: &InstanceFile, cfg: &RunConfig, out: &Path) -> Result<PipelineSummary> {
    inst.validate()?;
    cfg.validate()?;
    let cfg = RunConfig { output_dir: None, ..cfg.clone() };
    let mut bundle = Bundle::create(out)?;
    let inst_json = inst.to_json()?;
    bundle.put_bytes("instance.json", inst_json.as_bytes())?;
    bundle.put_json("config.json", &cfg)?;
    let mut done = Vec::new();
    let result = run_stages(inst, &cfg, &mut bundle, &mut done);
    let (failed_stage, error) = match &result {
        Ok(_) => (None, None),
        Err(Error::Stage { stage, source }) => (Some(stage.to_string()), Some(source.to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    let manifest = Manifest {
        schema_version: crate::instance::SCHEMA_VERSION,
        seed: cfg.seed,
        config_sha256: cfg.sha256()?,
        instance_sha256: crate::io::sha256_hex(inst_json.as_bytes()),
        stages: done,
        failed_stage,
        error,
        outputs: bundle.hashes().clone(),
    };
    bundle.put_json("manifest.json", &manifest)?;
    let o = result?;
    Ok(PipelineSummary { macro_feasible: o.macro_feasible, micro_feasible: o.micro_feasible, cap: o.cap, manifest })
}

/// Cheap stages recomputed for standalone subcommands.
pub fn prepare(inst: &InstanceFile, cfg: &RunConfig, bundle: &mut Bundle) -> Result<Prepared> {
    Ok(Prepared {
        demand: at("risk", risk_stage(inst, cfg, bundle))?,
        sizing: at("size", size_stage(inst, cfg, bundle))?,
        macro_candidates: at("candidates", candidates_stage(inst, cfg, bundle))?,
    })
}
