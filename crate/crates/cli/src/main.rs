//! `nowcast` command-line driver.
//!
//! Exit codes: 0 on success, 2 for configuration errors (one
//! `error kind=config field=... message=...` line per bad field), 3 for data
//! or model errors (`error kind=data message=...`).

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nowcast::evaluate::{
    daily_exercise, daily_mae_csv, daily_nowcasts_csv, daily_windows_csv, nowcast_at, nowcasts_csv, run_ablation, run_exercise, run_selection,
    score_table, scores_csv, selection_csv, selection_dates_csv, selection_ratios, DailyConfig, ExerciseConfig,
};
use nowcast::series::io::{load_dataset, save_dataset, write_atomic};
use nowcast::series::{AsOf, Dataset, Quarter, SeriesKind};
use nowcast::synth::{a1_calendar_spec, default_txn_spec, gen_factor_panel, gen_transactions, table_a1_spec};
use nowcast::txn::{
    build_index_deflated, default_consumption_mapping, default_investment_mapping, read_transactions_csv, winsorize,
    write_transactions_csv, InflationTable, Purpose, SectorMapping, Weights,
};

use config::{Config, Economy, FieldError, IndexWeights, Overrides};

// Progress lines go to stdout; a reader that hangs up early (`| head`) is fine.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "nowcast", version, about = "Mixed-frequency GDP nowcasting")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel model fitting.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Comma list from ar,dfm,bvar,lm,rf,gbm (oracle is a test stub).
    #[arg(long, global = true)]
    models: Option<String>,
    /// Lasso pre-selection of indicators at each vintage.
    #[arg(long, global = true)]
    preselect: Option<Switch>,
    /// Drop big-data series (evaluate also reports MAED against the full run).
    #[arg(long, global = true)]
    ablate_bigdata: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic economy and transaction records.
    Synth,
    /// Build a real activity index from transaction records.
    Index,
    /// Nowcasts from a single vintage.
    Nowcast {
        /// Vintage date, YYYY-MM-DD.
        #[arg(long)]
        as_of: Option<String>,
    },
    /// Monthly pseudo-real-time exercise.
    Evaluate,
    /// Daily exercise over 150-day windows.
    Daily,
    /// Lasso selection ratios over the evaluation span.
    Select,
}

enum Failure {
    Config(Vec<FieldError>),
    Data(String),
}

impl From<nowcast::Error> for Failure {
    fn from(e: nowcast::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn missing(field: &str, what: &str) -> Failure {
    Failure::Config(vec![FieldError { field: field.into(), message: format!("required: {what}") }])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let as_of = match &cli.command {
        Command::Nowcast { as_of } => as_of.clone(),
        _ => None,
    };
    let ov = Overrides {
        seed: cli.seed,
        jobs: cli.jobs,
        output_dir: cli.output_dir.clone(),
        models: cli.models.clone(),
        preselect: cli.preselect.map(|s| matches!(s, Switch::On)),
        ablate_bigdata: cli.ablate_bigdata,
        as_of,
    };
    let result = config::load(cli.config.as_deref(), &ov).map_err(Failure::Config).and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(errs)) => {
            for e in errs {
                eprintln!("error kind=config field={} message={:?}", e.field, e.message);
            }
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error kind=data message={msg:?}");
            ExitCode::from(3)
        }
    }
}

fn run(command: &Command, cfg: &Config) -> Result<(), Failure> {
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Data(format!("thread pool: {e}")))?;
    }
    match command {
        Command::Synth => synth(cfg),
        Command::Index => index(cfg),
        Command::Nowcast { .. } => nowcast_cmd(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::Daily => daily(cfg),
        Command::Select => select(cfg),
    }
}

fn out_path(cfg: &Config, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents.as_bytes())?;
    say!("wrote {}", path.display());
    Ok(())
}

fn dataset(cfg: &Config) -> Result<Dataset, Failure> {
    let meta = cfg.meta.as_ref().ok_or_else(|| missing("data.meta", "path to the series metadata file"))?;
    load_dataset(meta).map_err(|e| Failure::Data(format!("{}: {e}", meta.display())))
}

fn synth(cfg: &Config) -> Result<(), Failure> {
    let s = &cfg.synth;
    let spec = match s.economy {
        Economy::TableA1 => table_a1_spec(s.start, s.months),
        Economy::Simple(n) => a1_calendar_spec(n, s.start, s.months),
    };
    let data = gen_factor_panel(&spec, cfg.seed)?;
    let meta = save_dataset(&cfg.output_dir, &data.dataset)?;
    say!("wrote {}", meta.display());
    let mut factors = String::from("month,factor\n");
    for (t, f) in data.factors.iter().enumerate() {
        writeln!(factors, "{},{}", s.start + t as i32, f[0]).expect("string write");
    }
    write(&out_path(cfg, "factors.csv"), &factors)?;
    if !s.transactions {
        return Ok(());
    }
    let tspec = default_txn_spec(s.txn_start, s.txn_months);
    let txn = gen_transactions(&tspec, cfg.seed.wrapping_add(1))?;
    let mut buf = Vec::new();
    write_transactions_csv(&mut buf, &txn.records)?;
    write_atomic(&out_path(cfg, "transactions.csv"), &buf)?;
    say!("wrote {} ({} records)", out_path(cfg, "transactions.csv").display(), txn.records.len());
    let buckets: Vec<String> = tspec.buckets.iter().map(|b| b.bucket.clone()).collect();
    let table = InflationTable::constant(&buckets, s.txn_start, s.txn_months, s.inflation);
    write(&out_path(cfg, "inflation.csv"), &table.to_csv())?;
    let mut growth = String::from("month");
    for b in &tspec.buckets {
        write!(growth, ",{}", b.bucket).expect("string write");
    }
    growth.push('\n');
    for t in 0..s.txn_months.saturating_sub(12) {
        write!(growth, "{}", s.txn_start + 12 + t as i32).expect("string write");
        for b in &tspec.buckets {
            write!(growth, ",{}", b.growth[t]).expect("string write");
        }
        growth.push('\n');
    }
    write(&out_path(cfg, "txn_target_growth.csv"), &growth)
}

fn index(cfg: &Config) -> Result<(), Failure> {
    let tx = cfg.transactions.as_ref().ok_or_else(|| missing("data.transactions", "transaction records CSV"))?;
    let infl = cfg.inflation.as_ref().ok_or_else(|| missing("data.inflation", "deflator inflation CSV"))?;
    let file = std::fs::File::open(tx).map_err(|e| Failure::Data(format!("{}: {e}", tx.display())))?;
    let mut records = read_transactions_csv(file)?;
    let text = std::fs::read_to_string(infl).map_err(|e| Failure::Data(format!("{}: {e}", infl.display())))?;
    let table = InflationTable::parse_csv(&text)?;
    let purpose = cfg.index.purpose;
    let mapping = match &cfg.mapping {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            SectorMapping::parse_csv(&text)?
        }
        None if purpose == Purpose::Consumption => default_consumption_mapping(),
        None => default_investment_mapping(),
    };
    if let Some((lo, hi)) = cfg.index.winsorize {
        winsorize(&mut records, lo, hi)?;
    }
    let weights = match &cfg.index.weights {
        IndexWeights::LaggedShares => Weights::LaggedShares,
        IndexWeights::Fixed(w) => Weights::Fixed(w.clone()),
    };
    let (series, report) = build_index_deflated(&records, purpose, &mapping, &table, &weights)?;
    write(&out_path(cfg, &format!("index_{purpose}.csv")), &series.to_csv())?;
    let mut filt = String::from("rule,removed\n");
    for (rule, n) in &report.removed {
        writeln!(filt, "{rule},{n}").expect("string write");
    }
    writeln!(filt, "kept,{}", report.kept.len()).expect("string write");
    write(&out_path(cfg, &format!("filter_{purpose}.csv")), &filt)
}

fn nowcast_cmd(cfg: &Config) -> Result<(), Failure> {
    let date = cfg.as_of.ok_or_else(|| missing("nowcast.as_of", "vintage date (or --as-of)"))?;
    let mut data = dataset(cfg)?;
    if cfg.ablate_bigdata {
        data = data.without_kind(SeriesKind::BigData)?;
    }
    let out = nowcast_at(&data, AsOf::Date(date), &cfg.models, &cfg.settings, cfg.preselect)?;
    for r in &out.records {
        say!("{} {} h{} {}", r.model, r.quarter, r.horizon, r.value);
    }
    write(&out_path(cfg, "nowcasts.csv"), &nowcasts_csv(&out.records))?;
    if cfg.preselect {
        write(&out_path(cfg, "selection.csv"), &selection_csv(&selection_ratios(&out.selection)))?;
    }
    Ok(())
}

fn exercise_config(cfg: &Config) -> ExerciseConfig {
    let mut ec = ExerciseConfig::new(cfg.eval_start, cfg.eval_end, cfg.models.clone());
    ec.settings = cfg.settings.clone();
    ec.preselect = cfg.preselect;
    ec.combinations = cfg.combinations;
    ec.window = cfg.window;
    ec.min_history = cfg.min_history;
    ec
}

fn evaluate(cfg: &Config) -> Result<(), Failure> {
    let data = dataset(cfg)?;
    let ec = exercise_config(cfg);
    let (full, scores) = if cfg.ablate_bigdata {
        let (full, reduced) = run_ablation(&data, &ec)?;
        write(&out_path(cfg, "nowcasts_reduced.csv"), &nowcasts_csv(&reduced.records))?;
        let scores = score_table(&full.records, Some(&reduced.records), &data)?;
        (full, scores)
    } else {
        let full = run_exercise(&data, &ec)?;
        let scores = score_table(&full.records, None, &data)?;
        (full, scores)
    };
    write(&out_path(cfg, "nowcasts.csv"), &nowcasts_csv(&full.records))?;
    write(&out_path(cfg, "scores.csv"), &scores_csv(&scores))?;
    if cfg.preselect {
        write(&out_path(cfg, "selection.csv"), &selection_csv(&selection_ratios(&full.selection)))?;
        write(&out_path(cfg, "selection_dates.csv"), &selection_dates_csv(&full.selection))?;
    }
    Ok(())
}

fn daily(cfg: &Config) -> Result<(), Failure> {
    let data = dataset(cfg)?;
    let quarters = cfg.daily_quarters.clone().unwrap_or_else(|| {
        (0..=(cfg.eval_end - cfg.eval_start)).map(|i| cfg.eval_start + i).collect::<Vec<Quarter>>()
    });
    let mut dc = DailyConfig::new(quarters, cfg.models.clone());
    dc.settings = cfg.settings.clone();
    dc.days = cfg.days;
    dc.ablate_bigdata = cfg.ablate_bigdata;
    let out = daily_exercise(&data, &dc)?;
    write(&out_path(cfg, "daily_mae.csv"), &daily_mae_csv(&out))?;
    write(&out_path(cfg, "daily_windows.csv"), &daily_windows_csv(&out))?;
    write(&out_path(cfg, "daily_nowcasts.csv"), &daily_nowcasts_csv(&out))
}

fn select(cfg: &Config) -> Result<(), Failure> {
    let mut data = dataset(cfg)?;
    if cfg.ablate_bigdata {
        data = data.without_kind(SeriesKind::BigData)?;
    }
    let log = run_selection(&data, &exercise_config(cfg))?;
    let ratios = selection_ratios(&log);
    for (name, r) in &ratios {
        say!("{name} {r}");
    }
    write(&out_path(cfg, "selection.csv"), &selection_csv(&ratios))?;
    write(&out_path(cfg, "selection_dates.csv"), &selection_dates_csv(&log))
}
