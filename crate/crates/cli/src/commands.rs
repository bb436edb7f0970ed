use crate::output::{envelope, format_of, write_json, write_with, CliError, CliResult, Format};
use crate::{AnalyzeArgs, Cli, Command, DesignArgs, EstimateParamsArgs, GenerateArgs, SimulateArgs};
use aipw_design::design::{estimate_population_params, plan_trial, HistoricalDataset, ParamOverrides};
use aipw_design::estimators::{estimate_aipw, estimate_ancova_hc0, estimate_unadjusted};
use aipw_design::io::{read_historical_path, read_trial_path, write_historical, write_trial};
use aipw_design::learners::LearnerSpec;
use aipw_design::math::{EffectDefinition, PopulationParams};
use aipw_design::simulation::{
    default_estimators, experiment_grid, learner_variants, sample_counterfactual, simulate_trial, benchmark_scenario,
    write_points_csv, EstimatorConfig, ExperimentConfig, NGrid, ScenarioEntry, ScenarioName, ScenarioSpec,
};
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

pub fn run(cli: &Cli) -> CliResult<()> {
    configure_threads(&cli.threads)?;
    match &cli.command {
        Command::EstimateParams(a) => estimate_params(cli, a),
        Command::Design(a) => design(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Generate(a) => generate(cli, a),
    }
}

fn configure_threads(threads: &str) -> CliResult<()> {
    if threads == "auto" {
        return Ok(());
    }
    let n: usize = threads
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::validation(format!("--threads must be a positive integer or 'auto', got '{threads}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::validation(e.to_string()))
}

fn require_seed(cli: &Cli, command: &str) -> CliResult<u64> {
    cli.seed.ok_or_else(|| CliError::validation(format!("{command} is stochastic and needs --seed")))
}

fn parse<T>(value: &str) -> CliResult<T>
where
    T: std::str::FromStr<Err = aipw_design::Error>,
{
    value.parse().map_err(|e| CliError::from_core(e, false))
}

fn json_only(out: Option<&Path>, command: &str) -> CliResult<()> {
    match format_of(out, Format::Json)? {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::validation(format!("{command} writes JSON; use a .json output path"))),
    }
}

fn estimate_params(cli: &Cli, a: &EstimateParamsArgs) -> CliResult<()> {
    let out = cli.out.as_deref();
    json_only(out, "estimate-params")?;
    let seed = require_seed(cli, "estimate-params")?;
    let learner: LearnerSpec = parse(&a.learner)?;
    let effect: EffectDefinition = parse(&a.effect)?;
    let loaded = read_historical_path(&a.historical).map_err(|e| CliError::from_core(e, true))?;
    let est = estimate_population_params(&loaded.data, &learner, a.folds, seed, a.target_effect, effect, a.pi1)
        .map_err(|e| CliError::from_core(e, true))?;
    let mut doc = envelope(&est)?;
    doc.insert("imputed_cells".into(), Value::from(loaded.imputed_cells));
    doc.insert("covariates".into(), Value::from(loaded.covariates));
    doc.insert("seed".into(), Value::from(seed));
    write_json(&doc, out)
}

fn design(cli: &Cli, a: &DesignArgs) -> CliResult<()> {
    let out = cli.out.as_deref();
    json_only(out, "design")?;
    let text = std::fs::read_to_string(&a.params).map_err(|e| CliError::data(format!("{}: {e}", a.params.display())))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", a.params.display())))?;
    let params_value = doc.get("params").unwrap_or(&doc).clone();
    let params: PopulationParams = serde_json::from_value(params_value)
        .map_err(|e| CliError::data(format!("{}: not a parameter object: {e}", a.params.display())))?;
    let effect: EffectDefinition = match (&a.effect, doc.get("effect")) {
        (Some(s), _) => parse(s)?,
        (None, Some(v)) => serde_json::from_value(v.clone()).map_err(|e| CliError::data(e.to_string()))?,
        (None, None) => EffectDefinition::DifferenceInMeans,
    };
    let overrides = ParamOverrides { gamma: a.gamma, sigma1: a.sigma1, kappa1: a.kappa1 };
    let params = overrides.apply(&params).map_err(|e| CliError::from_core(e, false))?;
    let mut report =
        plan_trial(&params, effect, a.alpha, a.power, a.max_n).map_err(|e| CliError::from_core(e, false))?;

    let mut assumptions: Vec<String> = string_list(doc.get("assumptions"));
    for (flag, value) in [("gamma", a.gamma), ("sigma1", a.sigma1), ("kappa1", a.kappa1)] {
        if let Some(v) = value {
            assumptions.push(format!("{flag} = {v} (user override)"));
        }
    }
    for item in report.assumptions.drain(..) {
        if !assumptions.iter().any(|c| c.starts_with(&item)) {
            assumptions.push(item);
        }
    }
    report.assumptions = assumptions;
    let mut out_doc = envelope(&report)?;
    out_doc.insert("warnings".into(), Value::from(string_list(doc.get("warnings"))));
    write_json(&out_doc, out)
}

fn string_list(v: Option<&Value>) -> Vec<String> {
    v.and_then(Value::as_array)
        .map(|items| items.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> CliResult<()> {
    let out = cli.out.as_deref();
    let format = format_of(out, Format::Json)?;
    if format == Format::Csv && a.full {
        return Err(CliError::validation("--full needs JSON output"));
    }
    let effect: EffectDefinition = parse(&a.effect)?;
    let loaded = read_trial_path(&a.trial, a.pi1).map_err(|e| CliError::from_core(e, true))?;
    let data = &loaded.data;
    let mut config = Map::new();
    config.insert("estimator".into(), Value::from(a.estimator.as_str()));
    config.insert("effect".into(), Value::from(effect.short_name()));
    config.insert("pi1".into(), Value::from(a.pi1));
    let mut result = match a.estimator.as_str() {
        "unadj" | "unadjusted" => estimate_unadjusted(data, effect, a.alpha),
        "ancova" => estimate_ancova_hc0(data, effect, a.alpha),
        "aipw" => {
            let seed = require_seed(cli, "analyze --estimator aipw")?;
            let learner: LearnerSpec = parse(&a.learner)?;
            config.insert("learner".into(), Value::from(learner.label()));
            config.insert("folds".into(), Value::from(a.folds));
            config.insert("seed".into(), Value::from(seed));
            estimate_aipw(data, effect, &learner, a.folds, a.alpha, seed)
        }
        other => {
            return Err(CliError::validation(format!("unknown estimator '{other}'; expected unadj, ancova or aipw")))
        }
    }
    .map_err(|e| CliError::from_core(e, true))?;
    let nu_sq_hat = result.nu_sq_hat();
    if !a.full {
        result.influence.clear();
    }
    let mut doc = envelope(&result)?;
    doc.insert("nu_sq_hat".into(), Value::from(nu_sq_hat));
    doc.insert("imputed_cells".into(), Value::from(loaded.imputed_cells));
    match format {
        Format::Json => {
            doc.insert("config".into(), Value::Object(config));
            write_json(&doc, out)
        }
        Format::Csv => write_flat_csv(&doc, out),
    }
}

/// One header row and one value row from the scalar fields of `doc`.
fn write_flat_csv(doc: &Map<String, Value>, out: Option<&Path>) -> CliResult<()> {
    let fields: Vec<(&String, String)> = doc
        .iter()
        .filter_map(|(k, v)| match v {
            Value::String(s) => Some((k, s.clone())),
            Value::Number(_) | Value::Bool(_) => Some((k, v.to_string())),
            _ => None,
        })
        .collect();
    write_with(out, |w| {
        let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
        writeln!(w, "{}\n{}", header.join(","), values.join(",")).map_err(|e| aipw_design::Error::Data(e.to_string()))
    })
}

fn parse_scenarios(arg: &str) -> CliResult<Vec<ScenarioEntry>> {
    if arg.ends_with(".json") {
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{arg}: {e}")))?;
        if let Ok(list) = serde_json::from_str::<Vec<ScenarioEntry>>(&text) {
            return Ok(list);
        }
        if let Ok(entry) = serde_json::from_str::<ScenarioEntry>(&text) {
            return Ok(vec![entry]);
        }
        let spec: ScenarioSpec =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("{arg}: not a scenario: {e}")))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom").to_string();
        return Ok(vec![ScenarioEntry { name, spec }]);
    }
    if arg == "all" {
        return Ok(ScenarioName::ALL.iter().map(|&n| ScenarioEntry::benchmark(n)).collect());
    }
    arg.split(',').map(|s| parse::<ScenarioName>(s.trim()).map(ScenarioEntry::benchmark)).collect()
}

fn parse_estimators(arg: &str, folds: usize) -> CliResult<Vec<EstimatorConfig>> {
    let mut out = Vec::new();
    for item in arg.split(',').map(str::trim) {
        match item {
            "all" => out.extend(default_estimators().into_iter().map(|e| with_folds(e, folds))),
            "learners" => out.extend(learner_variants().into_iter().map(|e| with_folds(e, folds))),
            "unadj" | "unadjusted" => out.push(EstimatorConfig::Unadjusted),
            "ancova" => out.push(EstimatorConfig::AncovaHc0),
            "oracle" => out.push(EstimatorConfig::OracleAipw),
            "aipw" => out.push(EstimatorConfig::Aipw { learner: LearnerSpec::default_ensemble(), folds }),
            other => match other.strip_prefix("aipw:") {
                Some(l) => out.push(EstimatorConfig::Aipw { learner: parse(l)?, folds }),
                None => return Err(CliError::validation(format!("unknown estimator '{other}'"))),
            },
        }
    }
    Ok(out)
}

fn with_folds(e: EstimatorConfig, folds: usize) -> EstimatorConfig {
    match e {
        EstimatorConfig::Aipw { learner, .. } => EstimatorConfig::Aipw { learner, folds },
        other => other,
    }
}

fn parse_grid(arg: &str) -> CliResult<NGrid> {
    if arg == "auto" {
        return Ok(NGrid::default());
    }
    let sizes = arg
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::validation(format!("bad n-grid entry '{s}'"))))
        .collect::<CliResult<Vec<usize>>>()?;
    Ok(NGrid::Explicit { sizes })
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    targets: &'a [aipw_design::simulation::ScenarioTargets],
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CliResult<()> {
    let out = cli.out.as_deref();
    let format = format_of(out, Format::Json)?;
    let seed = require_seed(cli, "simulate")?;
    if a.reps == 0 {
        return Err(CliError::validation("--reps must be at least 1"));
    }
    let config = ExperimentConfig {
        scenarios: parse_scenarios(&a.scenario)?,
        estimators: parse_estimators(&a.estimators, a.folds)?,
        n_grid: parse_grid(&a.n_grid)?,
        reps: a.reps,
        alpha: a.alpha,
        pi1: a.pi1,
        target_power: a.power,
        seed,
        null: a.null,
        historical_n: a.historical_n,
        design_folds: a.design_folds,
        true_mc_reps: a.mc_reps,
        max_n: a.max_n,
    };
    let result = experiment_grid(&config).map_err(|e| CliError::from_core(e, false))?;
    let mut summary = envelope(&Summary { config: &config, targets: &result.targets })?;
    match (format, out) {
        (Format::Csv, Some(path)) => {
            write_with(Some(path), |w| write_points_csv(&result.points, w))?;
            let sidecar = path.with_extension("summary.json");
            write_json(&summary, Some(&sidecar))
        }
        _ => {
            let points = serde_json::to_value(&result.points).map_err(|e| CliError::data(e.to_string()))?;
            summary.insert("points".into(), points);
            write_json(&summary, out)
        }
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> CliResult<()> {
    let out = cli.out.as_deref();
    if format_of(out, Format::Csv)? != Format::Csv {
        return Err(CliError::validation("generate writes CSV; use a .csv output path"));
    }
    let seed = require_seed(cli, "generate")?;
    let name: ScenarioName = parse(&a.scenario)?;
    let mut spec = benchmark_scenario(name);
    if a.null {
        spec = spec.null_calibrated();
    }
    let core = |e| CliError::from_core(e, false);
    match a.kind.as_str() {
        "trial" => {
            let (data, _) = simulate_trial(&spec, a.n, a.pi1, 1, seed).map_err(core)?;
            write_with(out, |w| write_trial(&data, w))
        }
        "historical" => {
            let sample = sample_counterfactual(&spec, a.n, seed).map_err(core)?;
            let hist = HistoricalDataset::new(sample.x, sample.y0).map_err(core)?;
            write_with(out, |w| write_historical(&hist, w))
        }
        other => Err(CliError::validation(format!("unknown kind '{other}'; expected trial or historical"))),
    }
}
