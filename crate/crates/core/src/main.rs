use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use firesite::config::RunConfig;
use firesite::error::{Error, Result};
use firesite::instance::InstanceFile;
use firesite::io::{archive_rows, read_archive, read_json, Bundle, ARCHIVE_HEADER};
use firesite::oracle::{brute_force_macro, exact_pareto_micro};
use firesite::pipeline::{self, CalibrationFile};
use firesite::risk::{score_all, RiskInputs};
use firesite::sizing::{generate_candidates, RoadNetwork};
use firesite::synth::{generate_synthetic, SynthParams};

#[derive(Parser)]
#[command(name = "firesite", version, about = "Two-tier emergency station siting")]
struct Cli {
    /// Run configuration, TOML or JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Oracle-sized instances for `synth`.
    #[arg(long, global = true)]
    tiny: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tier {
    Macro,
    Micro,
}

#[derive(Subcommand)]
enum Command {
    /// Ranks communities from a CSV with columns id, accidents, density.
    Risk { input: PathBuf },
    /// Prints every sizing quantity.
    Size {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        existing: usize,
    },
    /// Generates candidate sites from a road network JSON document.
    Candidates {
        network: PathBuf,
        /// Junctions only.
        #[arg(long)]
        junctions_only: bool,
    },
    SolveMacro {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Needs macro_plan.json in the output directory.
    Calibrate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Needs macro_plan.json and calibration.json in the output directory.
    SolveMicro {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Hypervolume and spacing per generation.
    Metrics {
        /// Defaults to micro_fronts.csv in the output directory.
        #[arg(long)]
        fronts: Option<PathBuf>,
    },
    Select {
        #[arg(long)]
        instance: PathBuf,
        /// Defaults to micro_archive.csv in the output directory.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Exact enumeration of a small instance.
    Oracle {
        #[arg(long, value_enum)]
        tier: Tier,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Writes a seeded synthetic instance.
    Synth {
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long)]
        cluster_share: Option<f64>,
        #[arg(long)]
        cluster_radius: Option<f64>,
        /// Demo scale (30 communities, 40 macro and 60 micro candidates).
        #[arg(long)]
        demo: bool,
        #[arg(long, default_value = "instance.json")]
        name: String,
    },
    Pipeline {
        #[arg(long)]
        instance: PathBuf,
    },
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn bundle(&self) -> Result<Bundle> {
        Bundle::create(&self.out)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Validation(_) | Error::Config(_) | Error::Domain(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Calibration(_) => 3,
        Error::GuardExceeded { .. } => 4,
        _ => 1,
    }
}

fn flag(feasible: bool) -> u8 {
    if feasible {
        0
    } else {
        warn!("result is flagged infeasible");
        3
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx { cfg, out };
    let cfg = &ctx.cfg;
    match cli.command {
        Command::Risk { input } => {
            let mut r = csv::Reader::from_path(&input)?;
            let inputs: Vec<RiskInputs> = r.deserialize().collect::<std::result::Result<_, _>>()?;
            let scores = score_all(&inputs, cfg.risk.classes, cfg.risk.gamma)?;
            let rows: Vec<Vec<String>> = inputs
                .iter()
                .zip(&scores)
                .map(|(i, s)| vec![i.id.clone(), s.accident_rank.to_string(), s.density_rank.to_string(), s.demand.to_string()])
                .collect();
            ctx.bundle()?.put_csv("risk.csv", &["id", "r_a", "r_p", "a"], &rows)?;
            Ok(0)
        }
        Command::Size { instance, existing } => {
            let mut sizing = cfg.sizing.clone();
            let mut existing = existing;
            if let Some(p) = instance {
                let inst = InstanceFile::load(&p)?;
                existing = inst.existing.len();
                if let Some(a) = inst.total_area {
                    sizing.total_area = a;
                }
            }
            let report = sizing.resolve(existing)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if cli.out.is_some() {
                ctx.bundle()?.put_json("sizing.json", &report)?;
            }
            Ok(0)
        }
        Command::Candidates { network, junctions_only } => {
            let net: RoadNetwork = read_json(&network)?;
            net.validate()?;
            let c = generate_candidates(&net, cfg.sizing.candidate_spacing, cfg.sizing.junction_clearance, !junctions_only)?;
            info!("{} candidates", c.len());
            ctx.bundle()?.put_json("candidates.json", &c)?;
            Ok(0)
        }
        Command::SolveMacro { instance } => {
            let inst = InstanceFile::load(&instance)?;
            let mut b = ctx.bundle()?;
            let prep = pipeline::prepare(&inst, cfg, &mut b)?;
            let mp = pipeline::macro_problem(&inst, cfg, &prep)?;
            let sol = pipeline::solve_macro_stage(&mp, cfg, &mut b)?;
            Ok(flag(sol.feasible))
        }
        Command::Calibrate { instance } => {
            let (inst, prep, mut b, mp) = macro_side(&ctx, &instance)?;
            let sel = pipeline::load_macro_plan(&b, &mp)?;
            let anchors = pipeline::anchors(&inst, &mp, &sel)?;
            let cands = pipeline::micro_candidates_stage(&inst, cfg, &prep, &anchors, &mut b)?;
            let p = pipeline::micro_problem(&inst, cfg, &prep, &cands, &anchors, None)?;
            let cal = pipeline::calibrate_stage(&p, cfg, &mut b)?;
            println!("{}", cal.cap);
            Ok(0)
        }
        Command::SolveMicro { instance } => {
            let p = capped_micro(&ctx, &instance)?;
            let sol = pipeline::solve_micro_stage(&p, cfg, &mut ctx.bundle()?)?;
            Ok(flag(sol.feasible))
        }
        Command::Metrics { fronts } => {
            let path = fronts.unwrap_or_else(|| ctx.out.join("micro_fronts.csv"));
            let fronts = pipeline::read_fronts(&path)?;
            pipeline::metrics_stage(&fronts, cfg, &mut ctx.bundle()?)?;
            Ok(0)
        }
        Command::Select { instance, archive } => {
            let (inst, prep, mut b, mp) = macro_side(&ctx, &instance)?;
            let sel = pipeline::load_macro_plan(&b, &mp)?;
            let anchors = pipeline::anchors(&inst, &mp, &sel)?;
            let cands = pipeline::micro_candidates_stage(&inst, cfg, &prep, &anchors, &mut b)?;
            let cal: CalibrationFile = read_json(&b.path("calibration.json"))?;
            let p = pipeline::micro_problem(&inst, cfg, &prep, &cands, &anchors, Some(cal.cap))?;
            let path = archive.unwrap_or_else(|| ctx.out.join("micro_archive.csv"));
            let (arch, feasible) = read_archive(&path, &cands)?;
            pipeline::select_stage(&inst, cfg, &prep, &p, &arch, &mut b)?;
            Ok(flag(feasible))
        }
        Command::Oracle { tier: Tier::Macro, instance } => {
            let (_, _, mut b, mp) = macro_side(&ctx, &instance)?;
            let r = brute_force_macro(&mp)?;
            info!("{} subsets enumerated in {:?}", r.enumerated, r.elapsed);
            match r.argmax.first() {
                Some(best) => {
                    b.put_json("oracle_macro_plan.json", &pipeline::macro_plan_file(&mp, best))?;
                    Ok(0)
                }
                None => {
                    warn!("no feasible subset");
                    Ok(3)
                }
            }
        }
        Command::Oracle { tier: Tier::Micro, instance } => {
            let p = capped_micro(&ctx, &instance)?;
            let r = exact_pareto_micro(&p)?;
            info!("{} subsets enumerated in {:?}", r.enumerated, r.elapsed);
            let feasible = !r.front.is_empty();
            ctx.bundle()?.put_csv("oracle_micro_archive.csv", &ARCHIVE_HEADER, &archive_rows(&r.front, feasible, &p.candidates))?;
            Ok(flag(feasible))
        }
        Command::Synth { communities, cluster_share, cluster_radius, demo, name } => {
            let seed = cfg.seed;
            let mut params = if cli.tiny {
                SynthParams::tiny(seed)
            } else if demo {
                SynthParams::demo(seed)
            } else {
                SynthParams { seed, ..Default::default() }
            };
            if let Some(n) = communities {
                params.communities = n;
            }
            if let Some(v) = cluster_share {
                params.cluster_share = v;
            }
            if let Some(v) = cluster_radius {
                params.cluster_radius = v;
            }
            let inst = generate_synthetic(&params)?;
            ctx.bundle()?.put_bytes(&name, inst.to_json()?.as_bytes())?;
            Ok(0)
        }
        Command::Pipeline { instance } => {
            let inst = InstanceFile::load(&instance)?;
            let s = pipeline::run_pipeline(&inst, cfg, &ctx.out)?;
            info!("workload cap {}", s.cap);
            Ok(flag(s.feasible()))
        }
    }
}

type MacroSide = (InstanceFile, pipeline::Prepared, Bundle, firesite::macro_model::MacroProblem);

fn macro_side(ctx: &Ctx, instance: &Path) -> Result<MacroSide> {
    let inst = InstanceFile::load(instance)?;
    let mut b = ctx.bundle()?;
    let prep = pipeline::prepare(&inst, &ctx.cfg, &mut b)?;
    let mp = pipeline::macro_problem(&inst, &ctx.cfg, &prep)?;
    Ok((inst, prep, b, mp))
}

fn capped_micro(ctx: &Ctx, instance: &Path) -> Result<firesite::micro_model::MicroProblem> {
    let (inst, prep, mut b, mp) = macro_side(ctx, instance)?;
    let sel = pipeline::load_macro_plan(&b, &mp)?;
    let anchors = pipeline::anchors(&inst, &mp, &sel)?;
    let cands = pipeline::micro_candidates_stage(&inst, &ctx.cfg, &prep, &anchors, &mut b)?;
    let cal: CalibrationFile = read_json(&b.path("calibration.json"))?;
    pipeline::micro_problem(&inst, &ctx.cfg, &prep, &cands, &anchors, Some(cal.cap))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
