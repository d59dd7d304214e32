use std::collections::HashSet;
use std::fs::File;
use std::io::BufWriter;
use std::ops::Range;
use std::path::{Path, PathBuf};

use flowcast::data::{
    build_windows, generate_synthetic, split_by_calendar, Calendar, Normalizer, RoadDataset,
    SampleWindow, SyntheticConfig, INPUT_LAGS,
};
use flowcast::eval::{
    export_report, r2_windowed, run_offline, run_online, run_scenarios_with, trace_file_name,
    write_trace_csv, ScenarioConfig, ScenarioEvent, SUMMARY_FILE,
};
use flowcast::lifecycle::{retrain_with, train_batch_with, transfer, OnlineConfig, TrainingConfig};
use flowcast::NetworkSpec;

use crate::args::{Cli, Command};
use crate::error::{file_error, CliError, Result};
use crate::files::{
    create_dir, dataset_paths, guard_outputs, load_dataset, load_model_with_normalizer,
    normalizer_path, read_text, run_manifest_path, save_model_with_normalizer, write_dataset,
};
use crate::manifest::RunManifest;

const RUN_MANIFEST: &str = "run.json";

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate => generate(cli),
        Command::Train { data } => train(cli, data),
        Command::Transfer { model, data } => transfer_model(cli, model, data.as_deref()),
        Command::RunScenarios { donors, target } => scenarios(cli, donors, target),
        Command::Evaluate {
            model,
            data,
            range,
            online_lr,
            window,
        } => evaluate(cli, model, data, range, *online_lr, *window),
    }
}

fn out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{} needs --out", cli.command.name())))
}

fn at_most_one_config(cli: &Cli) -> Result<Option<&Path>> {
    match cli.configs.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        _ => Err(CliError::Usage(format!(
            "{} takes a single --config",
            cli.command.name()
        ))),
    }
}

fn manifest(cli: &Cli) -> RunManifest {
    RunManifest::new(cli.command.name(), cli.seed, cli.scale_days)
}

fn calendar(cli: &Cli) -> Result<Calendar> {
    Ok(Calendar::new(cli.scale_days.unwrap_or(365))
        .map_err(|e| flowcast::Error::Config(e.to_string()))?)
}

fn named_slots(data: &RoadDataset, cal: &Calendar, name: &str) -> Result<Range<usize>> {
    let days = cal
        .by_name(name)
        .ok_or_else(|| flowcast::Error::Config(format!("unknown calendar range `{name}`")))?;
    Ok(split_by_calendar(data, &[days])?.remove(0).slots)
}

/// Windows whose target slot lies in `range`, skipping slots without a full lag history.
fn windows_in(data: &RoadDataset, range: Range<usize>) -> Result<Vec<SampleWindow>> {
    Ok(build_windows(data, range.start.max(INPUT_LAGS)..range.end)?)
}

/// Reads a training config. A `[network]` table, if present, is returned
/// separately; `defaults` fill keys the file leaves out.
fn training_config(
    text: &str,
    seed: Option<u64>,
    defaults: &[(&str, toml::Value)],
) -> Result<(TrainingConfig, Option<NetworkSpec>)> {
    let parse = |e: toml::de::Error| CliError::Core(e.into());
    let mut table: toml::Table = toml::from_str(text).map_err(parse)?;
    let network = match table.remove("network") {
        Some(v) => Some(v.try_into::<NetworkSpec>().map_err(parse)?),
        None => None,
    };
    if let Some(seed) = seed {
        let seed = i64::try_from(seed)
            .map_err(|_| CliError::Usage(format!("--seed {seed} exceeds {}", i64::MAX)))?;
        table.insert("seed".into(), seed.into());
    }
    for (key, value) in defaults {
        table.entry(*key).or_insert_with(|| value.clone());
    }
    let cfg: TrainingConfig = toml::Value::Table(table).try_into().map_err(parse)?;
    cfg.validate()?;
    if let Some(spec) = &network {
        spec.validate()
            .map_err(|e| flowcast::Error::Config(e.to_string()))?;
    }
    Ok((cfg, network))
}

fn report_epoch(epoch: usize, loss: f64) {
    println!("epoch {} loss {loss:.6e}", epoch + 1);
}

fn report_losses(trace: &[f64]) {
    if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
        println!("initial loss {first:.6e} final loss {last:.6e}");
    }
}

fn generate(cli: &Cli) -> Result<()> {
    if cli.configs.is_empty() {
        return Err(CliError::Usage(
            "generate needs at least one --config".into(),
        ));
    }
    let dir = out(cli)?;
    let mut configs = Vec::with_capacity(cli.configs.len());
    let mut names = HashSet::new();
    for (i, path) in cli.configs.iter().enumerate() {
        let mut cfg = SyntheticConfig::from_toml(&read_text(path)?)?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed.wrapping_add(i as u64);
        }
        if let Some(days) = cli.scale_days {
            cfg.year_days = days;
        }
        if !names.insert(cfg.road_name.clone()) {
            return Err(CliError::Usage(format!(
                "road name `{}` appears twice",
                cfg.road_name
            )));
        }
        configs.push(cfg);
    }
    let mut outputs = Vec::new();
    for cfg in &configs {
        let (csv, manifest) = dataset_paths(dir, &cfg.road_name);
        outputs.extend([csv, manifest]);
    }
    let run_path = dir.join(RUN_MANIFEST);
    guard_outputs(
        outputs
            .iter()
            .map(PathBuf::as_path)
            .chain([run_path.as_path()]),
        cli.force,
    )?;
    create_dir(dir)?;

    for cfg in &configs {
        let data = generate_synthetic(cfg)?;
        let (csv, _) = dataset_paths(dir, &cfg.road_name);
        write_dataset(&data, &csv)?;
        println!(
            "{}: {} days, {} rows",
            csv.display(),
            data.days(),
            data.len() * data.loops().len()
        );
    }
    manifest(cli)
        .configs(&cli.configs)?
        .outputs(&outputs)?
        .write(&run_path)
}

fn train(cli: &Cli, data_path: &Path) -> Result<()> {
    let out = out(cli)?;
    let config_path =
        at_most_one_config(cli)?.ok_or_else(|| CliError::Usage("train needs a --config".into()))?;
    let (cfg, network) = training_config(&read_text(config_path)?, cli.seed, &[])?;
    let spec = network.unwrap_or_else(NetworkSpec::standard);
    let run_path = run_manifest_path(out);
    guard_outputs(
        [out, normalizer_path(out).as_path(), run_path.as_path()],
        cli.force,
    )?;

    let data = load_dataset(data_path)?;
    let range = named_slots(&data, &calendar(cli)?, &cfg.normalizer_source)?;
    let norm = Normalizer::fit(&data, range.clone())?;
    let windows = norm.apply_windows(&windows_in(&data, range)?)?;
    println!(
        "training on {} windows of {}",
        windows.len(),
        cfg.normalizer_source
    );
    let outcome = train_batch_with(spec, &windows, &cfg, report_epoch)?;
    report_losses(&outcome.loss_trace);

    let written = save_model_with_normalizer(&outcome.model, &norm, out)?;
    manifest(cli)
        .configs(&cli.configs)?
        .inputs(&[data_path.to_path_buf()])?
        .outputs(&written)?
        .write(&run_path)
}

fn transfer_model(cli: &Cli, model_path: &Path, data_path: Option<&Path>) -> Result<()> {
    let out = out(cli)?;
    let run_path = run_manifest_path(out);
    guard_outputs(
        [out, normalizer_path(out).as_path(), run_path.as_path()],
        cli.force,
    )?;
    let (source, source_norm) = load_model_with_normalizer(model_path)?;
    let mut inputs = vec![model_path.to_path_buf(), normalizer_path(model_path)];

    let (model, norm) = match data_path {
        None => {
            if !cli.configs.is_empty() {
                return Err(CliError::Usage(
                    "transfer --config needs --data to retrain on".into(),
                ));
            }
            (transfer(&source), source_norm)
        }
        Some(data_path) => {
            let text = match at_most_one_config(cli)? {
                Some(p) => read_text(p)?,
                None => String::new(),
            };
            let retrain = TrainingConfig::retrain_default();
            let defaults = [
                ("epochs", toml::Value::Integer(retrain.epochs as i64)),
                (
                    "normalizer_source",
                    toml::Value::String(retrain.normalizer_source),
                ),
                ("seed", toml::Value::Integer(0)),
            ];
            let (cfg, network) = training_config(&text, cli.seed, &defaults)?;
            if network.is_some() {
                return Err(flowcast::Error::Config(
                    "a transferred model keeps its network; drop [network]".into(),
                )
                .into());
            }
            let data = load_dataset(data_path)?;
            let range = named_slots(&data, &calendar(cli)?, &cfg.normalizer_source)?;
            let norm = Normalizer::fit(&data, range.clone())?;
            let windows = norm.apply_windows(&windows_in(&data, range)?)?;
            println!(
                "retraining on {} windows of {}",
                windows.len(),
                cfg.normalizer_source
            );
            let outcome = retrain_with(transfer(&source), &windows, &cfg, report_epoch)?;
            report_losses(&outcome.loss_trace);
            inputs.push(data_path.to_path_buf());
            (outcome.model, norm)
        }
    };
    let written = save_model_with_normalizer(&model, &norm, out)?;
    manifest(cli)
        .configs(&cli.configs)?
        .inputs(&inputs)?
        .outputs(&written)?
        .write(&run_path)
}

fn scenarios(cli: &Cli, donor_paths: &[PathBuf], target_path: &Path) -> Result<()> {
    let dir = out(cli)?;
    let mut cfg = match at_most_one_config(cli)? {
        Some(p) => ScenarioConfig::from_toml(&read_text(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(days) = cli.scale_days {
        cfg.year_days = days;
    }
    if let Some(seed) = cli.seed {
        for t in [
            &mut cfg.donor_training,
            &mut cfg.target_training,
            &mut cfg.retrain,
            &mut cfg.scratch,
        ] {
            t.seed = seed;
        }
    }
    cfg.validate()?;
    let run_path = dir.join(RUN_MANIFEST);
    guard_outputs(
        [dir.join(SUMMARY_FILE).as_path(), run_path.as_path()],
        cli.force,
    )?;

    let donors = donor_paths
        .iter()
        .map(|p| load_dataset(p))
        .collect::<Result<Vec<_>>>()?;
    let target = load_dataset(target_path)?;
    let reports = run_scenarios_with(&donors, &target, &cfg, |event| match event {
        ScenarioEvent::Training { label, epochs } => {
            println!("training {label} for {epochs} epochs")
        }
        ScenarioEvent::Epoch { label, epoch, loss } => {
            if (epoch + 1) % 100 == 0 {
                println!("  {label} epoch {} loss {loss:.6e}", epoch + 1);
            }
        }
        ScenarioEvent::Tested { id, mean_r2 } => match mean_r2 {
            Some(r2) => println!("tested {id}: mean R2 {r2:.4}"),
            None => println!("tested {id}: mean R2 undefined"),
        },
    })?;

    let planned: Vec<PathBuf> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| dir.join(trace_file_name(i, r)))
        .collect();
    guard_outputs(planned.iter().map(PathBuf::as_path), cli.force)?;
    create_dir(dir)?;
    let files = export_report(&reports, dir)?;
    let mut outputs = files.traces;
    outputs.push(files.summary);

    let mut inputs = donor_paths.to_vec();
    inputs.push(target_path.to_path_buf());
    manifest(cli)
        .configs(&cli.configs)?
        .inputs(&inputs)?
        .outputs(&outputs)?
        .write(&run_path)
}

fn evaluate(
    cli: &Cli,
    model_path: &Path,
    data_path: &Path,
    range_name: &str,
    online_lr: Option<f64>,
    window: usize,
) -> Result<()> {
    let out = out(cli)?;
    let run_path = run_manifest_path(out);
    guard_outputs([out, run_path.as_path()], cli.force)?;
    let mut online = match at_most_one_config(cli)? {
        Some(p) => {
            let cfg: OnlineConfig =
                toml::from_str(&read_text(p)?).map_err(|e| CliError::Core(e.into()))?;
            Some(cfg)
        }
        None => None,
    };
    if let Some(lr) = online_lr {
        online
            .get_or_insert_with(OnlineConfig::default)
            .learning_rate = lr;
    }

    let (model, norm) = load_model_with_normalizer(model_path)?;
    let data = load_dataset(data_path)?;
    let windows = windows_in(&data, named_slots(&data, &calendar(cli)?, range_name)?)?;
    let trace = match &online {
        Some(cfg) => run_online(&model, &norm, &windows, cfg)?.0,
        None => run_offline(&model, &norm, &windows)?,
    };
    let r2 = r2_windowed(&trace, window)?;
    let sink = BufWriter::new(File::create(out).map_err(file_error(out))?);
    write_trace_csv(&trace, &r2, data.start(), sink)?;

    let s = r2.summary();
    let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
    println!(
        "{} {range_name} ({} slots): mean R2 {} min R2 {} final R2 {}",
        if online.is_some() {
            "online"
        } else {
            "offline"
        },
        trace.len(),
        show(s.mean_r2),
        show(s.min_r2),
        show(s.final_r2)
    );
    manifest(cli)
        .configs(&cli.configs)?
        .inputs(&[
            model_path.to_path_buf(),
            normalizer_path(model_path),
            data_path.to_path_buf(),
        ])?
        .outputs(&[out.to_path_buf()])?
        .write(&run_path)
}
