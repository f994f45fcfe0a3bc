//! `cq`: command-line driver for constellation queries.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use constellation::bench::{run_bench, run_scaleup, BenchConfig, GeneralRunConfig, ScaleupConfig};
use constellation::catalog::{generate_dense_with_truth, generate_uniform};
use constellation::composition::CycleOrder;
use constellation::engine::{execute_query, QueryConfig, QueryMode};
use constellation::io::{load_pattern, save_json, write_solutions};
use constellation::oracle::brute_general_with_cap;
use constellation::oracle::{brute_pure_with_cap, DEFAULT_CAP};
use constellation::{Algorithm, Catalog, EpsilonMode, Quadtree, QueryPattern, Rect, Solution};

#[derive(Parser)]
#[command(name = "cq", version, about = "Constellation queries over 2-D point catalogs")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value defaults; command-line flags and CQ_* variables win.
    #[arg(long, global = true, env = "CQ_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the quadtree and print its statistics.
    Index(IndexArgs),
    /// Run a pure, general or existential query.
    Query(QueryArgs),
    /// Write a synthetic catalog.
    Generate(GenerateArgs),
    /// Answer a small query by brute force.
    Oracle(OracleArgs),
    /// Time composition algorithms over a tolerance sweep.
    Bench(BenchArgs),
    /// Run pure queries on dense catalogs of growing size.
    Scaleup(ScaleupArgs),
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// Comma-separated attribute columns to load.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,
}

impl CatalogArgs {
    fn load(&self) -> Result<Catalog> {
        let cols: Vec<&str> = self.attrs.iter().map(String::as_str).collect();
        Catalog::load_csv(&self.catalog, &cols).with_context(|| format!("loading {}", self.catalog.display()))
    }
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = constellation::quadtree::DEFAULT_MAX_DEPTH)]
    max_depth: u32,
    /// Write the statistics here instead of stdout.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pure,
    General,
    Existential,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    BucketNl,
    MmNl,
    MmmNl,
    Auto,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::BucketNl => Algorithm::BucketNl,
            AlgoArg::MmNl => Algorithm::MmNl,
            AlgoArg::MmmNl => Algorithm::MmmNl,
            AlgoArg::Auto => Algorithm::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Index,
    Size,
}

#[derive(Args)]
struct PatternArgs {
    #[arg(long)]
    pattern: PathBuf,
    /// Overrides the pattern file's epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Overrides the pattern file's theta.
    #[arg(long)]
    theta: Option<f64>,
    /// Overrides the anchor element.
    #[arg(long)]
    anchor: Option<usize>,
}

impl PatternArgs {
    fn load(&self) -> Result<QueryPattern> {
        let mut q = load_pattern(&self.pattern).with_context(|| format!("loading {}", self.pattern.display()))?;
        if let Some(e) = self.epsilon {
            q = q.with_epsilon(e)?;
        }
        if let Some(t) = self.theta {
            q = q.with_theta(t)?;
        }
        if let Some(a) = self.anchor {
            q = q.with_anchor(a)?;
        }
        Ok(q)
    }
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long, default_value_t = 0.5)]
    scale_min: f64,
    #[arg(long, default_value_t = 2.0)]
    scale_max: f64,
    /// Scale-proportional tolerance fraction, replacing epsilon.
    #[arg(long)]
    relative_e: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Solutions CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[command(flatten)]
    pattern: PatternArgs,
    #[command(flatten)]
    scale: ScaleArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_enum, default_value = "pure")]
    mode: ModeArg,
    /// Shorthand for --mode existential.
    #[arg(long)]
    existential: bool,
    #[arg(long, value_enum, default_value = "auto")]
    algo: AlgoArg,
    #[arg(long, env = "CQ_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = constellation::engine::DEFAULT_SELECTION_THRESHOLD)]
    selection_threshold: f64,
    #[arg(long, value_enum, default_value = "index")]
    cycle_order: OrderArg,
    /// Scan node pairs without descending the tree.
    #[arg(long)]
    no_descend: bool,
    /// Per-anchor bucket sizes as JSON lines.
    #[arg(long)]
    trace_filter: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Uniform,
    Dense,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "CQ_SEED", default_value_t = 1)]
    seed: u64,
    /// min_x,min_y,max_x,max_y
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.0, 0.0, 1.0, 1.0])]
    region: Vec<f64>,
    /// Attribute range lo:hi, repeatable (uniform catalogs).
    #[arg(long = "attr-range")]
    attr_ranges: Vec<String>,
    /// Pattern to plant (dense catalogs).
    #[arg(long)]
    pattern: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    planted: usize,
    #[arg(long, default_value_t = 1.00000001)]
    scale_min: f64,
    #[arg(long, default_value_t = 1.0000009)]
    scale_max: f64,
    #[arg(long)]
    out: PathBuf,
    /// Planted instances as JSON (dense catalogs).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[command(flatten)]
    pattern: PatternArgs,
    #[command(flatten)]
    scale: ScaleArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_enum, default_value = "pure")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    epsilons: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["bucket-nl", "mm-nl", "mmm-nl"])]
    algos: Vec<AlgoArg>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, env = "CQ_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Args)]
struct ScaleupArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 5000, 10000, 20000])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 20, 200, 1000])]
    planted: Vec<usize>,
    #[arg(long, default_value_t = 4.4e-6)]
    epsilon: f64,
    #[arg(long, env = "CQ_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, env = "CQ_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "bucket-nl")]
    algo: AlgoArg,
    /// Skip the general-mode run on the smallest catalog.
    #[arg(long)]
    no_general: bool,
    #[arg(long, default_value_t = 10)]
    general_planted: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse_from(with_config_defaults(std::env::args().collect())?);
    match cli.cmd {
        Cmd::Index(a) => cmd_index(a),
        Cmd::Query(a) => cmd_query(a),
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Scaleup(a) => cmd_scaleup(a),
    }
}

/// Inserts `--key value` for every config-file entry right after the
/// subcommand, so later command-line flags override it. Keys whose `CQ_*`
/// variable is set are skipped so the environment wins over the file.
fn with_config_defaults(args: Vec<String>) -> Result<Vec<String>> {
    let path = args
        .iter()
        .position(|a| a == "--config")
        .and_then(|i| args.get(i + 1).cloned())
        .or_else(|| args.iter().find_map(|a| a.strip_prefix("--config=").map(String::from)))
        .or_else(|| std::env::var("CQ_CONFIG").ok());
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected key=value", n + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if std::env::var(format!("CQ_{}", key.replace('-', "_").to_uppercase())).is_ok() {
            continue;
        }
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            v => injected.extend([format!("--{key}"), v.to_string()]),
        }
    }
    let sub = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !a.starts_with('-') && args[i - 1] != "--config")
        .map(|(i, _)| i);
    let Some(sub) = sub else {
        return Ok(args);
    };
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_index(a: IndexArgs) -> Result<()> {
    let catalog = a.catalog.load()?;
    let tree = Quadtree::build_with_max_depth(&catalog, a.epsilon, a.max_depth)?;
    match a.stats {
        Some(p) => save_json(tree.stats(), p)?,
        None => println!("{}", serde_json::to_string_pretty(tree.stats())?),
    }
    Ok(())
}

fn epsilon_mode(scale: &ScaleArgs, eps: f64) -> EpsilonMode {
    match scale.relative_e {
        Some(e) => EpsilonMode::Proportional(e),
        None => EpsilonMode::Constant(eps),
    }
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let catalog = a.catalog.load()?;
    let q = a.pattern.load()?;
    let mode = match (a.existential, a.mode) {
        (true, _) | (_, ModeArg::Existential) => QueryMode::Existential,
        (_, ModeArg::General) => QueryMode::General,
        (_, ModeArg::Pure) => QueryMode::Pure,
    };
    let cfg = QueryConfig {
        mode,
        algo: a.algo.into(),
        epsilon: q.epsilon(),
        theta: q.theta(),
        scale_range: (a.scale.scale_min, a.scale.scale_max),
        relative_e: a.scale.relative_e,
        workers: a.workers,
        selection_threshold: a.selection_threshold,
        cycle_order: match a.cycle_order {
            OrderArg::Index => CycleOrder::ElementIndex,
            OrderArg::Size => CycleOrder::BucketSize,
        },
        descend: !a.no_descend,
        trace_filter: a.trace_filter.is_some(),
        ..QueryConfig::default()
    };
    let out = execute_query(&catalog, &q, &cfg)?;
    log::info!(
        "{} solutions, {} of {} anchors productive",
        out.solutions.len(),
        out.stats.totals.anchors_productive,
        out.stats.totals.anchors_total
    );

    if let Some(p) = &a.trace_filter {
        let mut w = open_out(Some(p))?;
        for t in &out.traces {
            serde_json::to_writer(&mut w, t)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    if let Some(p) = &a.output.stats {
        save_json(&out.stats, p)?;
    }
    if let Some(exists) = out.exists {
        let summary = serde_json::json!({
            "exists": exists,
            "productive_anchors": out.stats.totals.anchors_productive,
        });
        let mut w = open_out(a.output.out.as_deref())?;
        writeln!(w, "{summary}")?;
        w.flush()?;
        return Ok(());
    }
    write_solutions(open_out(a.output.out.as_deref())?, q.k(), &out.solutions)?;
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .with_context(|| format!("expected lo:hi, got `{s}`"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let region = Rect::new(a.region[0], a.region[1], a.region[2], a.region[3]);
    let catalog = match a.kind {
        GenKind::Uniform => {
            let ranges = a
                .attr_ranges
                .iter()
                .map(|s| parse_range(s))
                .collect::<Result<Vec<_>>>()?;
            generate_uniform(a.n, region, &ranges, a.seed)?
        }
        GenKind::Dense => {
            let Some(pattern) = &a.pattern else {
                bail!("--kind dense needs --pattern");
            };
            let q = load_pattern(pattern)?;
            let (catalog, truth) =
                generate_dense_with_truth(a.n, &q, (a.scale_min, a.scale_max), a.planted, a.seed, region)?;
            if let Some(t) = &a.truth {
                save_json(&truth, t)?;
            }
            catalog
        }
    };
    catalog.write_csv(&a.out)?;
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let catalog = a.catalog.load()?;
    let q = a.pattern.load()?;
    let result = match a.mode {
        ModeArg::Pure | ModeArg::Existential => brute_pure_with_cap(&catalog, &q, q.epsilon(), q.theta(), a.cap)?,
        ModeArg::General => brute_general_with_cap(
            &catalog,
            &q,
            epsilon_mode(&a.scale, q.epsilon()),
            (a.scale.scale_min, a.scale.scale_max),
            a.cap,
        )?,
    };
    if let Some(p) = &a.output.stats {
        save_json(
            &serde_json::json!({
                "solutions": result.solutions.len(),
                "subsets_examined": result.subsets_examined,
            }),
            p,
        )?;
    }
    if matches!(a.mode, ModeArg::Existential) {
        let mut w = open_out(a.output.out.as_deref())?;
        writeln!(w, "{}", serde_json::json!({ "exists": !result.solutions.is_empty() }))?;
        w.flush()?;
        return Ok(());
    }
    let solutions: Vec<Solution> = result
        .solutions
        .into_iter()
        .map(|(ids, scale)| Solution { ids, scale })
        .collect();
    write_solutions(open_out(a.output.out.as_deref())?, q.k(), &solutions)?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let catalog = a.catalog.load()?;
    let q = load_pattern(&a.pattern)?;
    let cfg = BenchConfig {
        epsilons: a.epsilons.clone(),
        algos: a.algos.iter().map(|&x| x.into()).collect(),
        reps: a.reps,
        confidence_level: a.confidence,
        workers: a.workers,
        theta: a.theta.unwrap_or(q.theta()),
    };
    let report = run_bench(&catalog, &q, &cfg)?;
    if let Some(p) = &a.json {
        save_json(&report, p)?;
    }
    match &a.csv {
        Some(p) => report.write_csv(File::create(p)?)?,
        None => report.write_csv(io::stdout().lock())?,
    }
    if let Some(p) = &a.gnuplot {
        let csv = a.csv.as_ref().map_or("bench.csv".into(), |c| c.display().to_string());
        std::fs::write(p, report.gnuplot_script(&csv, "bench.png"))?;
    }
    eprintln!("{}", report.summary);
    Ok(())
}

fn cmd_scaleup(a: ScaleupArgs) -> Result<()> {
    let q = load_pattern(&a.pattern)?;
    let cfg = ScaleupConfig {
        sizes: a.sizes,
        planted: a.planted,
        epsilon: a.epsilon,
        seed: a.seed,
        algo: a.algo.into(),
        workers: a.workers,
        general: (!a.no_general).then_some(GeneralRunConfig {
            size: 1000,
            planted: a.general_planted,
            scale_range: (0.5, 1.0),
        }),
        ..ScaleupConfig::default()
    };
    let report = run_scaleup(&q, &cfg)?;
    if let Some(p) = &a.json {
        save_json(&report, p)?;
    }
    println!("size,planted,expected,solutions,elapsed_ms");
    for r in &report.rows {
        println!(
            "{},{},{},{},{:.1}",
            r.size, r.planted, r.expected, r.solutions, r.elapsed_ms
        );
    }
    if let Some(g) = &report.general {
        eprintln!(
            "general run: {} solutions, {}/{} planted recovered, verified={}",
            g.solutions, g.planted_recovered, g.planted, g.verified
        );
    }
    if !report.all_expected || !report.nondecreasing {
        bail!("scale-up counts differ from the planted expectation");
    }
    Ok(())
}
