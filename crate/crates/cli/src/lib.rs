//! The `spc` command line: synthetic data, prototype building, evaluation,
//! parameter sweeps and cross-validation, all driven by files.

mod args;
mod error;
mod grid;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;

pub use args::{
    BucketArgs, BuildArgs, Cli, Command, CvArgs, EvalArgs, FormatName, InputArgs, ReportArgs,
    StrategyName, SweepArgs, SynthArgs,
};
pub use error::{CliError, CliResult};
pub use grid::parse_grid;

use spc_core::io::{
    read_prototypes, read_records, render_cv, write_prototypes, ReportFormat, ReportTable,
};
use spc_core::{
    build_prototypes, coverage, cross_validate_w, evaluate, generate_synthetic, group_streams,
    select_classes, sweep_w, sweep_ws, write_synthetic, EvalConfig, LabelRegistry, MeanMode,
    PrototypeSet, SpcConfig, Strategy, SubsetSpec, SumConfig, SynthConfig, TrainIndex, UserStream,
    VectorSet,
};

/// Default prototype weight of `spc`.
pub const DEFAULT_W: f64 = 0.85;
/// Default balance of `spc-sum`.
pub const DEFAULT_WS: f64 = 0.5;

/// Runs one parsed command, writing progress lines and stdout reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::BuildPrototypes(a) => cmd_build_prototypes(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Cv(a) => cmd_cv(&a, out),
    }
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> CliResult<()> {
    writeln!(out, "{}", line.as_ref())
        .map_err(|e| CliError::Core(spc_core::Error::io("<stdout>", e)))
}

impl SynthArgs {
    pub fn to_config(&self) -> SynthConfig {
        let d = SynthConfig::default();
        SynthConfig {
            dim: self.dim.unwrap_or(d.dim),
            classes: self.classes.unwrap_or(d.classes),
            users: self.users.unwrap_or(d.users),
            records: self.records.unwrap_or(d.records),
            zipf_exponent: self.zipf.unwrap_or(d.zipf_exponent),
            novel_per_user: self.novel_per_user.unwrap_or(d.novel_per_user),
            novel_mass: self.novel_mass.unwrap_or(d.novel_mass),
            sigma_user: self.sigma_user.unwrap_or(d.sigma_user),
            sigma_sample: self.sigma_sample.unwrap_or(d.sigma_sample),
            confusable_groups: self.confusable_groups.unwrap_or(d.confusable_groups),
            group_size: self.group_size.unwrap_or(d.group_size),
            group_tightness: self.group_tightness.unwrap_or(d.group_tightness),
            train_max: self.train_max.unwrap_or(d.train_max),
            train_min: self.train_min.unwrap_or(d.train_min),
            rectify: !self.signed,
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = args.to_config();
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let data = generate_synthetic(&cfg)?;
    let files = write_synthetic(&data, &args.out_dir)?;
    for path in [&files.train, &files.stream, &files.manifest] {
        say(out, path.display().to_string())?;
    }
    say(
        out,
        format!(
            "{} train records, {} stream records ({} users x {} records), {} common classes, dim {}, seed {}",
            data.train.len(),
            data.stream.len(),
            cfg.users,
            cfg.records,
            cfg.classes,
            cfg.dim,
            cfg.seed
        ),
    )
}

pub fn cmd_build_prototypes(args: &BuildArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = SubsetSpec::new(args.min_records, args.per_class_cap)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut registry = LabelRegistry::new();
    let (_, records) = read_records(&args.train, &mut registry)?;
    let index = TrainIndex::from_records(&records);
    let selected: BTreeSet<_> = select_classes(&index, &spec);
    if selected.is_empty() {
        return Err(spc_core::Error::invalid(format!(
            "no class has at least {} training records; lower --min-records",
            args.min_records
        ))
        .into());
    }
    let cov = coverage(&selected, &index)?;
    let set = build_prototypes(&records, &selected, &spec, args.seed, &registry)?;
    write_prototypes(&args.out, &set, &registry)?;
    say(out, args.out.display().to_string())?;
    say(
        out,
        format!("classes: {} of {}", set.len(), index.classes().count()),
    )?;
    say(
        out,
        format!("coverage: {cov} ({}%)", spc_core::io::percent(cov)),
    )
}

/// Resolves the strategy flags, rejecting weights that do not belong to it.
pub fn resolve_strategy(
    name: StrategyName,
    w: Option<f64>,
    ws: Option<f64>,
) -> CliResult<Strategy> {
    let reject = |flag: &str| {
        Err(CliError::usage(format!(
            "--{flag} does not apply to strategy {}",
            name.to_possible_value()
                .map(|v| v.get_name().to_owned())
                .unwrap_or_default()
        )))
    };
    let strategy = match name {
        StrategyName::Spc => {
            if ws.is_some() {
                return reject("ws");
            }
            Strategy::Spc(
                SpcConfig::new(w.unwrap_or(DEFAULT_W))
                    .map_err(|e| CliError::usage(e.to_string()))?,
            )
        }
        StrategyName::SpcSum => {
            if w.is_some() {
                return reject("w");
            }
            Strategy::SpcSum(
                SumConfig::new(ws.unwrap_or(DEFAULT_WS))
                    .map_err(|e| CliError::usage(e.to_string()))?,
            )
        }
        other => {
            if w.is_some() {
                return reject("w");
            }
            if ws.is_some() {
                return reject("ws");
            }
            match other {
                StrategyName::NcmFixed => Strategy::NcmFixed,
                StrategyName::NcmIncrFull => Strategy::NcmIncr(MeanMode::FullHistory),
                StrategyName::NcmIncrOne => Strategy::NcmIncr(MeanMode::MeanAsOne),
                StrategyName::OneNn => Strategy::OneNn,
                _ => Strategy::OneNnStar,
            }
        }
    };
    Ok(strategy)
}

fn check_buckets(b: &BucketArgs) -> CliResult<()> {
    if b.bucket == 0 {
        return Err(CliError::usage("--bucket must be at least 1"));
    }
    if b.topk.is_empty() || b.topk.contains(&0) {
        return Err(CliError::usage("--topk needs positive values"));
    }
    Ok(())
}

fn format_of(name: FormatName) -> ReportFormat {
    match name {
        FormatName::Tsv => ReportFormat::Tsv,
        FormatName::Markdown => ReportFormat::Markdown,
    }
}

/// Prototypes and user streams sharing one label registry.
pub fn load_inputs(input: &InputArgs) -> CliResult<(PrototypeSet, Vec<UserStream>)> {
    let mut registry = LabelRegistry::new();
    let common = read_prototypes(&input.prototypes, &mut registry)?;
    let (dim, records) = read_records(&input.stream, &mut registry)?;
    if !common.is_empty() && common.dim() != dim {
        return Err(spc_core::Error::DimensionMismatch {
            expected: common.dim(),
            got: dim,
        }
        .into());
    }
    Ok((common, group_streams(records)?))
}

fn emit(text: String, report: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    match &report.out {
        Some(path) => {
            write_file(path, &text)?;
            say(out, path.display().to_string())
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Core(spc_core::Error::io("<stdout>", e))),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Core(spc_core::Error::io(path, e)))
}

fn emit_table(table: &ReportTable, report: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    if table.rows.is_empty() {
        return Err(spc_core::Error::invalid("report has no rows").into());
    }
    emit(
        table.render(format_of(report.format), report.precise),
        report,
        out,
    )
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let strategy = resolve_strategy(args.strategy, args.w, args.ws)?;
    check_buckets(&args.buckets)?;
    let mut cfg = EvalConfig::new(strategy, &args.buckets.topk)?;
    if args.no_register {
        cfg = cfg.without_learning();
    }
    let (common, streams) = load_inputs(&args.input)?;
    let report = evaluate(&streams, &common, &cfg, args.buckets.bucket)?;
    emit_table(&ReportTable::from_eval(&report), &args.report, out)
}

fn checked_grid(
    spec: &str,
    flag: &str,
    valid: impl Fn(f64) -> bool,
    range: &str,
) -> CliResult<Vec<f64>> {
    let grid = parse_grid(spec).map_err(|e| CliError::usage(format!("--{flag}: {e}")))?;
    if let Some(bad) = grid.iter().find(|v| !valid(**v)) {
        return Err(CliError::usage(format!(
            "--{flag}: {bad} is outside {range}"
        )));
    }
    Ok(grid)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    check_buckets(&args.buckets)?;
    let b = &args.buckets;
    let table = match (&args.w_grid, &args.ws_grid) {
        (Some(spec), None) => {
            let grid = checked_grid(spec, "w-grid", |w| w > 0.0 && w <= 1.0, "(0, 1]")?;
            let (common, streams) = load_inputs(&args.input)?;
            let rows = sweep_w(&streams, &common, &grid, &b.topk, b.bucket)?;
            ReportTable::from_sweep("w", &rows, |w| (w == 1.0).then_some("1-NN"))
        }
        (None, Some(spec)) => {
            let grid = checked_grid(spec, "ws-grid", |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
            let (common, streams) = load_inputs(&args.input)?;
            let rows = sweep_ws(&streams, &common, &grid, &b.topk, b.bucket)?;
            ReportTable::from_sweep("w_s", &rows, |ws| {
                if ws == 0.0 {
                    Some("1-NN*")
                } else if ws == 1.0 {
                    Some("NCM")
                } else {
                    None
                }
            })
        }
        _ => {
            return Err(CliError::usage(
                "give exactly one of --w-grid and --ws-grid",
            ))
        }
    };
    emit_table(&table, &args.report, out)
}

pub fn cmd_cv(args: &CvArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.folds < 2 {
        return Err(CliError::usage("--folds must be at least 2"));
    }
    if args.objective_k == 0 {
        return Err(CliError::usage("--objective-k must be at least 1"));
    }
    let grid = checked_grid(&args.w_grid, "w-grid", |w| w > 0.0 && w <= 1.0, "(0, 1]")?;
    let (common, streams) = load_inputs(&args.input)?;
    let result = cross_validate_w(
        &streams,
        &common,
        &grid,
        args.folds,
        args.objective_k,
        args.seed,
    )?;
    emit(
        render_cv(&result, format_of(args.report.format), args.report.precise),
        &args.report,
        out,
    )?;
    say(out, format!("chosen w: {}", result.chosen_w))
}
