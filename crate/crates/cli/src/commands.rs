use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tally_core::data::{read_scaling_csv, write_scaling_csv};
use tally_core::features::{build_design, read_corpus, FollowerSeries, LexiconConfig, ScalingPolicy, TopicLexicon};
use tally_core::inference::CoefficientTable;
use tally_core::report::{render_markdown, write_table_csv, ModelColumn};
use tally_core::selection::default_grid;
use tally_core::synth::{generate, ColumnLaw, SynthSpec};
use tally_core::{bootstrap, cross_validate, summarize, BootstrapSummary, CVReport, Dataset};

use crate::output::{read_input, OutputDir};
use crate::{BootArgs, Common, CvArgs, DataArgs, FeaturizeArgs, FitArgs, PenaltyArgs, ReportArgs, SimulateArgs};

pub const DATASET: &str = "dataset.csv";
pub const SCALING: &str = "scaling.csv";
pub const BOOTSTRAP: &str = "bootstrap.json";
pub const CV_REPORT: &str = "cv_report.json";

type Inputs = BTreeMap<String, String>;

fn start(common: &Common) -> Result<(OutputDir, Inputs)> {
    let mut inputs = Inputs::new();
    if let Some(cfg) = &common.config {
        read_input(&mut inputs, cfg)?;
    }
    Ok((OutputDir::create(&common.out)?, inputs))
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

fn dataset_files(out: &mut OutputDir, data: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    out.write(DATASET, &buf)?;
    let mut buf = Vec::new();
    data.write_scaling_csv(&mut buf)?;
    out.write(SCALING, &buf)
}

fn load_dataset(args: &DataArgs, inputs: &mut Inputs) -> Result<Dataset> {
    let bytes = read_input(inputs, &args.data)?;
    let scaling_path = match &args.scaling {
        Some(p) => Some(p.clone()),
        None => {
            let sibling = args.data.with_file_name(SCALING);
            sibling.is_file().then_some(sibling)
        }
    };
    let scaling = match scaling_path {
        Some(path) => {
            let (names, scaling) = read_scaling_csv(read_input(inputs, &path)?.as_slice())
                .with_context(|| format!("reading {}", path.display()))?;
            Some((path, names, scaling))
        }
        None => None,
    };
    let data = Dataset::read_csv(bytes.as_slice(), scaling.as_ref().map(|s| s.2.clone()))
        .with_context(|| format!("reading {}", args.data.display()))?;
    if let Some((path, names, _)) = scaling {
        if names != data.column_names() {
            bail!("{} does not list the columns of {}", path.display(), args.data.display());
        }
    }
    Ok(data)
}

fn resolve_lambda(args: &PenaltyArgs, inputs: &mut Inputs) -> Result<f64> {
    match (args.lambda, &args.cv) {
        (Some(l), _) => Ok(l),
        (None, Some(path)) => {
            let report: CVReport = serde_json::from_slice(&read_input(inputs, path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            Ok(report.selected_lambda)
        }
        (None, None) => bail!("give --lambda or --cv"),
    }
}

pub fn featurize(args: &FeaturizeArgs) -> Result<()> {
    let (mut out, mut inputs) = start(&args.common)?;
    let corpus = read_input(&mut inputs, &args.corpus)?;
    let records = read_corpus(corpus.as_slice(), &args.corpus)?;
    let series = FollowerSeries::read_csv(read_input(&mut inputs, &args.followers)?.as_slice(), &args.followers)?;
    let config = match &args.lexicon {
        Some(path) => {
            let text = String::from_utf8(read_input(&mut inputs, path)?)
                .with_context(|| format!("{} is not UTF-8", path.display()))?;
            LexiconConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => LexiconConfig::bundled(),
    };
    let author = records.first().map(|r| r.author.clone());
    let lexicon = TopicLexicon::from_config(&config, args.candidate.as_deref(), author.as_deref())?;
    let policy = ScalingPolicy {
        follower_divisor: args.follower_divisor,
        standardize: !args.no_standardize,
    };
    let design = build_design(&records, &series, &lexicon, &policy)?;

    dataset_files(&mut out, &design.dataset)?;
    out.write("dropped.csv", &csv_bytes(&["column"], design.dropped.iter().map(|c| vec![c.clone()]))?)?;
    let label = lexicon.candidate().map(str::to_string).or(author).unwrap_or_default();
    let likes = records.iter().map(|r| vec![label.clone(), float((r.likes as f64).ln_1p())]);
    out.write("log_likes.csv", &csv_bytes(&["candidate", "log_likes"], likes)?)?;
    out.finish("featurize", inputs, args)
}

fn parse_law(text: &str) -> Result<ColumnLaw> {
    Ok(match text.trim() {
        "intercept" => ColumnLaw::Intercept,
        "normal" => ColumnLaw::StandardNormal,
        other => match other.strip_prefix("bernoulli:") {
            Some(q) => ColumnLaw::Bernoulli(q.parse().with_context(|| format!("bad probability in {other:?}"))?),
            None => bail!("unknown column law {other:?}; use intercept, normal or bernoulli:Q"),
        },
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let (mut out, inputs) = start(&args.common)?;
    let spec = if args.design.is_empty() {
        SynthSpec::gaussian(args.n, args.beta.clone(), args.alpha, args.seed)
    } else {
        SynthSpec {
            n: args.n,
            true_beta: args.beta.clone(),
            true_alpha: args.alpha,
            design: args.design.iter().map(|d| parse_law(d)).collect::<Result<_>>()?,
            seed: args.seed,
        }
    };
    let (data, truth) = generate(&spec)?;
    dataset_files(&mut out, &data)?;

    #[derive(Serialize)]
    struct Truth<'a> {
        column_names: &'a [String],
        beta: &'a [f64],
        alpha: f64,
    }
    out.write_json(
        "truth.json",
        &Truth {
            column_names: data.column_names(),
            beta: &truth.beta,
            alpha: truth.alpha,
        },
    )?;
    out.finish("simulate", inputs, args)
}

pub fn cv(args: &CvArgs) -> Result<()> {
    let (mut out, mut inputs) = start(&args.common)?;
    let data = load_dataset(&args.data, &mut inputs)?;
    let opts = args.solver.options();
    let grid = if args.grid.is_empty() {
        let mut g = default_grid(&data, &opts, args.grid_size, args.grid_ratio)?;
        if !args.no_baseline {
            g.push(0.0);
        }
        g
    } else {
        args.grid.clone()
    };
    let report = cross_validate(&data, &grid, args.folds, &opts, args.seed, args.solver.execution())?;

    let mut buf = Vec::new();
    report.write_curve_csv(&mut buf)?;
    out.write("cv_curve.csv", &buf)?;
    let fold_names: Vec<String> = (0..report.k).map(|f| format!("fold_{f}")).collect();
    let mut header = vec!["lambda"];
    header.extend(fold_names.iter().map(String::as_str));
    let rows = report.lambdas.iter().enumerate().map(|(l, lambda)| {
        let mut row = vec![float(*lambda)];
        row.extend(report.fold_mse.iter().map(|f| float(f[l])));
        row
    });
    out.write("cv_folds.csv", &csv_bytes(&header, rows)?)?;
    out.write_json(CV_REPORT, &report)?;
    out.finish("cv", inputs, args)
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let (mut out, mut inputs) = start(&args.common)?;
    let data = load_dataset(&args.data, &mut inputs)?;
    let lambda = resolve_lambda(&args.penalty, &mut inputs)?;
    let res = tally_core::fit(&data, lambda, &args.solver.options(), None)?;

    out.write_json("fit.json", &res)?;
    let rows = res
        .column_names
        .iter()
        .zip(&res.beta)
        .zip(&res.scaling)
        .map(|((name, b), s)| vec![name.clone(), float(*b), float(s.multiplier), float(s.offset)]);
    out.write("coefficients.csv", &csv_bytes(&["column", "estimate", "multiplier", "offset"], rows)?)?;
    let trace = res.objective_trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), float(*v)]);
    out.write("trace.csv", &csv_bytes(&["iteration", "objective"], trace)?)?;
    out.finish("fit", inputs, args)
}

pub fn boot(args: &BootArgs) -> Result<()> {
    let (mut out, mut inputs) = start(&args.common)?;
    let data = load_dataset(&args.data, &mut inputs)?;
    let lambda = resolve_lambda(&args.penalty, &mut inputs)?;
    let summary = bootstrap(
        &data,
        lambda,
        args.replicates,
        &args.solver.options(),
        args.seed,
        args.solver.execution(),
    )?;

    out.write_json(BOOTSTRAP, &summary)?;
    let mut buf = Vec::new();
    summary.write_draws_csv(&mut buf)?;
    out.write("draws.csv", &buf)?;
    let mut buf = Vec::new();
    write_scaling_csv(&mut buf, data.column_names(), data.scaling())?;
    out.write(SCALING, &buf)?;
    out.finish("boot", inputs, args)
}

fn parse_model(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((label, dir)) if !label.is_empty() && !dir.is_empty() => Ok((label.to_string(), PathBuf::from(dir))),
        _ => bail!("--model expects LABEL=DIR, got {spec:?}"),
    }
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn merge_likes(paths: &[PathBuf], inputs: &mut Inputs) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for path in paths {
        let bytes = read_input(inputs, path)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        if r.headers()?.iter().collect::<Vec<_>>() != ["candidate", "log_likes"] {
            bail!("{} is not a log_likes.csv file", path.display());
        }
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
    }
    csv_bytes(&["candidate", "log_likes"], rows)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let (mut out, mut inputs) = start(&args.common)?;
    let mut models: Vec<(String, BootstrapSummary, CoefficientTable)> = Vec::new();
    for spec in &args.model {
        let (label, dir) = parse_model(spec)?;
        let path = dir.join(BOOTSTRAP);
        if !path.is_file() {
            bail!("missing bootstrap output for model {label:?}: {}", path.display());
        }
        let summary: BootstrapSummary = serde_json::from_slice(&read_input(&mut inputs, &path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let table = summarize(&summary);
        models.push((label, summary, table));
    }
    let columns: Vec<ModelColumn<'_>> = models
        .iter()
        .map(|(label, _, table)| ModelColumn { label, table })
        .collect();

    out.write("table.md", render_markdown(&columns).as_bytes())?;
    let mut buf = Vec::new();
    write_table_csv(&mut buf, &columns)?;
    out.write("table.csv", &buf)?;
    for (label, summary, _) in &models {
        let mut buf = Vec::new();
        summary.write_draws_csv(&mut buf)?;
        out.write(&format!("draws_{}.csv", file_label(label)), &buf)?;
    }
    if !args.likes.is_empty() {
        out.write("log_likes.csv", &merge_likes(&args.likes, &mut inputs)?)?;
    }
    out.finish("report", inputs, args)
}
