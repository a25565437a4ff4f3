use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use parc::config::{Manifest, RunConfig};
use parc::data::{encode, encode_feature_rows, infer_specs, split, ColumnKind, ColumnSpec, EncodedDataset, RawTable};
use parc::mip::{build_tracking_milp, export_lp, optimize_tracking, FeatureBox, MilpStatus};
use parc::parc::{fit, select_k, DiscardPolicy, ParcConfig, ParcModel, SeparationMode};
use parc::predictor::{evaluate, predict_rows, Metrics};
use parc::synth::{format_benchmark_table, run_benchmark, write_benchmark_csv, BenchmarkSpec, Experiment, SampleBox};
use parc::{ParcError, Result};

#[derive(Parser)]
#[command(name = "parc", version, about = "Piecewise-affine regression and classification, and MILP encodings of the fitted models")]
struct Cli {
    /// Run configuration (TOML, or JSON with a .json extension). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest [default: next to the main output]
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Seed for sampling, splits, folds and k-means++ [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset to CSV
    Synth(SynthArgs),
    /// Train a model on a CSV file
    Fit(FitArgs),
    /// Write predictions for the rows of a CSV file
    Predict(PredictArgs),
    /// Score a model on a labelled CSV file
    Evaluate(EvaluateArgs),
    /// Choose K by cross-validation
    SelectK(SelectKArgs),
    /// Find features whose prediction tracks a reference output
    Optimize(OptimizeArgs),
    /// Write the tracking MILP in CPLEX LP format
    ExportLp(ExportLpArgs),
    /// Repeat a synthetic experiment and tabulate R2 scores
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// pwa or nonlinear
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// Lower corner of the sampling box, e.g. 0,0
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    box_lo: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    box_hi: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target column (repeat or separate with commas)
    #[arg(long = "target", value_delimiter = ',')]
    targets: Vec<String>,
    /// Features with at most this many distinct values are categorical
    #[arg(long)]
    categorical_threshold: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// softmax or voronoi
    #[arg(long)]
    separation: Option<SeparationMode>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    c_min_fraction: Option<f64>,
    /// drop or reassign
    #[arg(long, value_parser = parse_discard)]
    discard: Option<DiscardPolicy>,
    /// Train on unscaled features and targets
    #[arg(long)]
    no_standardize: bool,
}

impl TrainArgs {
    fn apply(&self, c: &mut ParcConfig) {
        set(&mut c.k, self.k);
        set(&mut c.alpha, self.alpha);
        set(&mut c.beta, self.beta);
        set(&mut c.sigma, self.sigma);
        set(&mut c.separation, self.separation);
        set(&mut c.epsilon, self.epsilon);
        set(&mut c.max_iters, self.max_iters);
        set(&mut c.c_min_fraction, self.c_min_fraction);
        set(&mut c.discard, self.discard);
        if self.no_standardize {
            c.standardize = false;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Hold out this fraction of the rows as a test set
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    model: PathBuf,
    /// Also write the training report (JSON, includes wall time)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Append metric rows to this CSV
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    label: String,
}

#[derive(Args)]
struct SelectKArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Refit with the chosen K on all rows and save the model here
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct MipArgs {
    #[arg(long)]
    model: PathBuf,
    /// Reference output, one value per numeric target
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    y_ref: Vec<f64>,
    /// Per-side expansion of the training box, relative to its width
    #[arg(long)]
    box_expand: Option<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    mip: MipArgs,
    /// Relative optimality gap of branch and bound
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Also write the MILP in LP format
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Write the solution as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportLpArgs {
    #[command(flatten)]
    mip: MipArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    train: TrainArgs,
    /// pwa or nonlinear
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<SeparationMode>>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Write the table as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_discard(s: &str) -> std::result::Result<DiscardPolicy, String> {
    match s {
        "drop" => Ok(DiscardPolicy::Drop),
        "reassign" => Ok(DiscardPolicy::Reassign),
        other => Err(format!("unknown discard policy {other:?}")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Output of one command: what was read and written, for the manifest.
#[derive(Default)]
struct Files {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Files {
    fn read(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn wrote(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                    eprintln!("parc: error[usage]: {first}");
                    ExitCode::from(2)
                }
            };
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("parc: error[{}]: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed.map(Some));
    let mut files = Files::default();
    if let Some(p) = &cli.config {
        files.read(p);
    }
    let (name, primary) = match &cli.command {
        Command::Synth(a) => ("synth", Some(a.out.clone())),
        Command::Fit(a) => ("fit", Some(a.model.clone())),
        Command::Predict(a) => ("predict", Some(a.out.clone())),
        Command::Evaluate(a) => ("evaluate", a.results.clone()),
        Command::SelectK(a) => ("select-k", a.model.clone()),
        Command::Optimize(a) => ("optimize", a.out.clone()),
        Command::ExportLp(a) => ("export-lp", Some(a.out.clone())),
        Command::Benchmark(a) => ("benchmark", a.out.clone()),
    };
    let cfg = match cli.command {
        Command::Synth(a) => synth(a, cfg, &mut files)?,
        Command::Fit(a) => fit_cmd(a, cfg, &mut files)?,
        Command::Predict(a) => predict_cmd(a, cfg, &mut files)?,
        Command::Evaluate(a) => evaluate_cmd(a, cfg, &mut files)?,
        Command::SelectK(a) => select_k_cmd(a, cfg, &mut files)?,
        Command::Optimize(a) => optimize_cmd(a, cfg, &mut files)?,
        Command::ExportLp(a) => export_lp_cmd(a, cfg, &mut files)?,
        Command::Benchmark(a) => benchmark_cmd(a, cfg, &mut files)?,
    };

    let mut manifest = Manifest::new(name, argv, &cfg);
    for p in &files.inputs {
        manifest.input(p)?;
    }
    for p in &files.outputs {
        manifest.output(p)?;
    }
    let path = cli.manifest.unwrap_or_else(|| match primary {
        Some(p) => {
            let mut s = p.into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("parc-{name}.manifest.json")),
    });
    manifest.write(path)
}

fn apply_data(a: &DataArgs, cfg: &mut RunConfig) {
    if !a.targets.is_empty() {
        cfg.data.targets = a.targets.clone();
    }
    set(&mut cfg.data.categorical_threshold, a.categorical_threshold);
}

fn load_training_data(a: &DataArgs, cfg: &RunConfig, files: &mut Files) -> Result<EncodedDataset> {
    if cfg.data.targets.is_empty() {
        return Err(ParcError::InvalidArgument("no target column given (use --target)".into()));
    }
    let table = RawTable::read_csv(&a.data)?;
    files.read(&a.data);
    let (mut features, mut targets) = infer_specs(&table, &cfg.data.targets, cfg.data.categorical_threshold)?;
    cfg.override_specs(&mut features);
    cfg.override_specs(&mut targets);
    encode(&table, &features, &targets)
}

/// Encodes the model's feature columns of `table`; other columns are ignored.
fn model_features(model: &ParcModel, table: &RawTable) -> Result<nalgebra::DMatrix<f64>> {
    let cols: Vec<usize> = model
        .feature_specs
        .iter()
        .map(|s| table.column_index(&s.name))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| cols.iter().map(|&c| r.get(c).cloned().unwrap_or_default()).collect())
        .collect();
    encode_feature_rows(&model.feature_specs, &rows)
}

/// Names of the encoded feature columns; indicators are `name=category`.
fn encoded_names(specs: &[ColumnSpec]) -> Vec<String> {
    specs
        .iter()
        .flat_map(|s| match s.kind {
            ColumnKind::Numeric => vec![s.name.clone()],
            ColumnKind::Categorical => s.categories[1..].iter().map(|c| format!("{}={c}", s.name)).collect(),
        })
        .collect()
}

/// `(target, metric, value)` triples with full precision values.
fn metric_rows(model: &ParcModel, m: &Metrics) -> Vec<(String, &'static str, String)> {
    let mut out = Vec::new();
    let numeric = model.target_specs.iter().filter(|s| !s.is_categorical());
    for ((spec, r2), sse) in numeric.zip(&m.r2).zip(&m.sse) {
        let r2 = r2.map_or_else(|| "undefined".to_string(), |v| format!("{v}"));
        out.push((spec.name.clone(), "r2", r2));
        out.push((spec.name.clone(), "sse", format!("{sse}")));
    }
    for (spec, acc) in model.target_specs.iter().filter(|s| s.is_categorical()).zip(&m.accuracy) {
        out.push((spec.name.clone(), "accuracy", format!("{acc}")));
    }
    out
}

fn print_metrics(label: &str, model: &ParcModel, m: &Metrics) {
    println!("{label} n {}", m.n_samples);
    for (target, metric, value) in metric_rows(model, m) {
        println!("{label} {metric} {target} {value}");
    }
}

fn synth(a: SynthArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    set(&mut cfg.synth.experiment, a.experiment);
    set(&mut cfg.synth.n_samples, a.n_samples);
    let pair = |v: Vec<f64>| [v[0], v[1]];
    set(&mut cfg.synth.box_lo, a.box_lo.map(|v| Some(pair(v))));
    set(&mut cfg.synth.box_hi, a.box_hi.map(|v| Some(pair(v))));
    let cfg = cfg.resolve()?;
    let experiment: Experiment = cfg.synth.experiment.parse()?;
    let default = experiment.default_box();
    let bx = SampleBox {
        lo: cfg.synth.box_lo.unwrap_or(default.lo),
        hi: cfg.synth.box_hi.unwrap_or(default.hi),
    };
    let ds = experiment.generate(cfg.synth.n_samples, cfg.effective_seed(), bx)?;
    ds.to_table().write_csv(&a.out)?;
    files.wrote(&a.out);
    println!("wrote {} samples to {}", ds.n_samples(), a.out.display());
    Ok(cfg)
}

fn fit_cmd(a: FitArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    apply_data(&a.data, &mut cfg);
    a.train.apply(&mut cfg.parc);
    if a.test_fraction.is_some() {
        cfg.data.test_fraction = a.test_fraction;
    }
    let cfg = cfg.resolve()?;
    let ds = load_training_data(&a.data, &cfg, files)?;
    let (train, test) = match cfg.data.test_fraction {
        Some(f) => {
            let (tr, te) = split(&ds, f, cfg.effective_seed())?;
            (tr, Some(te))
        }
        None => (ds, None),
    };
    let (model, report) = fit(&train, &cfg.parc)?;
    model.save(&a.model)?;
    files.wrote(&a.model);
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
        files.wrote(p);
    }
    println!(
        "K = {}, {} iterations ({:?}), {} regions",
        cfg.parc.k,
        report.iterations,
        report.stop_reason,
        model.n_regions()
    );
    print_metrics("train", &model, &evaluate(&model, &train)?);
    if let Some(te) = test {
        print_metrics("test", &model, &evaluate(&model, &te)?);
    }
    Ok(cfg)
}

fn predict_cmd(a: PredictArgs, cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    let cfg = cfg.resolve()?;
    let model = ParcModel::load(&a.model)?;
    files.read(&a.model);
    let table = RawTable::read_csv(&a.data)?;
    files.read(&a.data);
    let x = model_features(&model, &table)?;
    let preds = predict_rows(&model, &x);
    let numeric: Vec<&ColumnSpec> = model.target_specs.iter().filter(|s| !s.is_categorical()).collect();
    let categorical: Vec<&ColumnSpec> = model.target_specs.iter().filter(|s| s.is_categorical()).collect();
    let mut headers = vec!["region".to_string()];
    headers.extend(numeric.iter().chain(&categorical).map(|s| s.name.clone()));
    let rows = preds
        .iter()
        .map(|p| {
            let mut row = vec![p.region.to_string()];
            row.extend(p.numeric.iter().map(|v| format!("{v}")));
            row.extend(p.category_values(&model).into_iter().map(str::to_string));
            row
        })
        .collect();
    RawTable { headers, rows }.write_csv(&a.out)?;
    files.wrote(&a.out);
    println!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(cfg)
}

/// Encodes a labelled CSV the way the model's training data was encoded.
fn model_dataset(model: &ParcModel, path: &Path) -> Result<EncodedDataset> {
    let table = RawTable::read_csv(path)?;
    encode(&table, &model.feature_specs, &model.target_specs)
}

fn evaluate_cmd(a: EvaluateArgs, cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    let cfg = cfg.resolve()?;
    let model = ParcModel::load(&a.model)?;
    files.read(&a.model);
    let ds = model_dataset(&model, &a.data)?;
    files.read(&a.data);
    let m = evaluate(&model, &ds)?;
    print_metrics(&a.label, &model, &m);
    if let Some(p) = &a.results {
        let fresh = std::fs::metadata(p).map_or(true, |md| md.len() == 0);
        let file = OpenOptions::new().create(true).append(true).open(p)?;
        let mut w = csv::Writer::from_writer(file);
        if fresh {
            w.write_record(["label", "model", "data", "n_samples", "target", "metric", "value"])?;
        }
        let (model_s, data_s, n_s) = (a.model.display().to_string(), a.data.display().to_string(), m.n_samples.to_string());
        for (target, metric, value) in metric_rows(&model, &m) {
            w.write_record([a.label.as_str(), &model_s, &data_s, &n_s, &target, metric, &value])?;
        }
        w.flush()?;
        files.wrote(p);
    }
    Ok(cfg)
}

fn select_k_cmd(a: SelectKArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    apply_data(&a.data, &mut cfg);
    a.train.apply(&mut cfg.parc);
    set(&mut cfg.select.k_min, a.k_min);
    set(&mut cfg.select.k_max, a.k_max);
    set(&mut cfg.select.folds, a.folds);
    let cfg = cfg.resolve()?;
    if cfg.select.k_min == 0 || cfg.select.k_min > cfg.select.k_max {
        return Err(ParcError::InvalidArgument("need 1 <= k_min <= k_max".into()));
    }
    let ds = load_training_data(&a.data, &cfg, files)?;
    let ks: Vec<usize> = (cfg.select.k_min..=cfg.select.k_max).collect();
    let sel = select_k(&ds, &ks, cfg.select.folds, &cfg.parc)?;
    for (k, score) in &sel.scores {
        println!("K {k} score {score}");
    }
    println!("best K {}", sel.best_k);
    let mut cfg = cfg;
    if let Some(p) = &a.model {
        cfg.parc.k = sel.best_k;
        let (model, _) = fit(&ds, &cfg.parc)?;
        model.save(p)?;
        files.wrote(p);
        print_metrics("train", &model, &evaluate(&model, &ds)?);
    }
    Ok(cfg)
}

fn apply_mip(a: &MipArgs, cfg: &mut RunConfig) {
    if !a.y_ref.is_empty() {
        cfg.mip.y_ref = a.y_ref.clone();
    }
    set(&mut cfg.mip.box_expand, a.box_expand);
}

#[derive(Serialize)]
struct OptimizeOutput {
    status: MilpStatus,
    epsilon: f64,
    x_star: Vec<(String, f64)>,
    region: usize,
    y_hat: Vec<f64>,
    y_ref: Vec<f64>,
    nodes: usize,
}

fn optimize_cmd(a: OptimizeArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    apply_mip(&a.mip, &mut cfg);
    set(&mut cfg.mip.gap, a.gap);
    set(&mut cfg.mip.node_limit, a.node_limit);
    let cfg = cfg.resolve()?;
    let model = ParcModel::load(&a.mip.model)?;
    files.read(&a.mip.model);
    let bx = FeatureBox::from_model(&model, cfg.mip.box_expand)?;
    if let Some(p) = &a.export_lp {
        std::fs::write(p, export_lp(&build_tracking_milp(&model, &cfg.mip.y_ref, &bx)?))?;
        files.wrote(p);
    }
    let r = optimize_tracking(&model, &cfg.mip.y_ref, &bx, &cfg.mip.bnb())?;
    let out = OptimizeOutput {
        status: r.solution.status,
        epsilon: r.epsilon,
        x_star: encoded_names(&model.feature_specs).into_iter().zip(r.x_star.iter().copied()).collect(),
        region: r.region,
        y_hat: r.y_hat.clone(),
        y_ref: cfg.mip.y_ref.clone(),
        nodes: r.solution.nodes,
    };
    println!("status {:?}", out.status);
    println!("epsilon {}", out.epsilon);
    for (name, v) in &out.x_star {
        println!("x {name} {v}");
    }
    println!("region {}", out.region);
    for v in &out.y_hat {
        println!("y_hat {v}");
    }
    println!("nodes {}", out.nodes);
    if let Some(p) = &a.out {
        std::fs::write(p, serde_json::to_string_pretty(&out)? + "\n")?;
        files.wrote(p);
    }
    Ok(cfg)
}

fn export_lp_cmd(a: ExportLpArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    apply_mip(&a.mip, &mut cfg);
    let cfg = cfg.resolve()?;
    let model = ParcModel::load(&a.mip.model)?;
    files.read(&a.mip.model);
    let bx = FeatureBox::from_model(&model, cfg.mip.box_expand)?;
    let milp = build_tracking_milp(&model, &cfg.mip.y_ref, &bx)?;
    std::fs::write(&a.out, export_lp(&milp))?;
    files.wrote(&a.out);
    println!(
        "wrote {} variables ({} binary) and {} constraints to {}",
        milp.variables.len(),
        milp.binaries().len(),
        milp.constraints.len(),
        a.out.display()
    );
    Ok(cfg)
}

fn benchmark_cmd(a: BenchmarkArgs, mut cfg: RunConfig, files: &mut Files) -> Result<RunConfig> {
    a.train.apply(&mut cfg.parc);
    let b = &mut cfg.benchmark;
    set(&mut b.experiment, a.experiment);
    set(&mut b.repetitions, a.repetitions);
    set(&mut b.ks, a.ks.map(Some));
    set(&mut b.sigmas, a.sigmas.map(Some));
    set(&mut b.modes, a.modes.map(Some));
    set(&mut b.n_samples, a.n_samples);
    set(&mut b.test_fraction, a.test_fraction);
    let cfg = cfg.resolve()?;
    let b = &cfg.benchmark;
    let mut spec = BenchmarkSpec::new(b.experiment.parse()?, b.repetitions);
    set(&mut spec.ks, b.ks.clone());
    set(&mut spec.sigmas, b.sigmas.clone());
    set(&mut spec.modes, b.modes.clone());
    spec.n_samples = b.n_samples;
    spec.test_fraction = b.test_fraction;
    spec.base_seed = cfg.effective_seed();
    spec.config = cfg.parc.clone();
    let rows = run_benchmark(&spec)?;
    print!("{}", format_benchmark_table(&rows));
    if let Some(p) = &a.out {
        write_benchmark_csv(&rows, std::fs::File::create(p)?)?;
        files.wrote(p);
    }
    Ok(cfg)
}
