//! Command-line front end: batch evaluation, lambda-sweep ranking, instance
//! inspection and the brute-force self-test.
//!
//! Exit codes: 0 on success, 1 on validation or load errors, 2 when the
//! fraction of quarantined instances exceeds the `--max-failures`
//! threshold.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use credal_eval::credal::{
    credal_width, full_family, interval_envelope, intervals_from_samples, lower_prob_from_samples,
    select_budget_subsets, vertices_approx, vertices_exact, CredalVertices, IntervalPrediction,
    SampleSet,
};
use credal_eval::divergence::DivergenceKind;
use credal_eval::evaluator::{
    lambda_grid, point_summary, EvalConfig, NsKind, VertexMode,
};
use credal_eval::io::{
    evaluate_to_dir, fmt_sig, load_labels, load_manifest, load_predictions, rank_to_dir,
    ModelManifest, PredictionPayload, RunOutcome, DEFAULT_MAX_FAILURE_FRACTION,
};
use credal_eval::setfn::{
    belief, mobius_inverse, mobius_inverse_raw, pignistic, plausibility, LabelSpace,
    LowerProbability, MassFunction,
};
use credal_eval::uncertainty::{
    entropy_bounds, mutual_information, ns_dubois, ns_korner, ns_smets, shannon_entropy, spec_pal,
};

#[derive(Parser)]
#[command(name = "credal-eval", version, about = "Evaluate and rank uncertainty-aware classifier predictions via credal sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DivergenceArg {
    Kl,
    Js,
}

#[derive(Clone, Copy, ValueEnum)]
enum NsArg {
    Dubois,
    Smets,
    Korner,
    Cu,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerticesArg {
    Exact,
    Approx,
}

#[derive(Args)]
struct MetricArgs {
    /// Distance measure between ground truth and prediction.
    #[arg(long, value_enum, default_value = "kl")]
    divergence: DivergenceArg,

    /// Non-specificity measure.
    #[arg(long, value_enum, default_value = "dubois")]
    ns: NsArg,

    /// Credal-set vertex enumeration mode.
    #[arg(long, value_enum, default_value = "approx")]
    vertices: VerticesArg,

    /// Tolerated fraction of quarantined instances before exit code 2.
    #[arg(long, default_value_t = DEFAULT_MAX_FAILURE_FRACTION)]
    max_failures: f64,
}

impl MetricArgs {
    fn config(&self, lambda: f64) -> EvalConfig {
        EvalConfig {
            lambda,
            divergence: match self.divergence {
                DivergenceArg::Kl => DivergenceKind::Kl,
                DivergenceArg::Js => DivergenceKind::Js,
            },
            ns: match self.ns {
                NsArg::Dubois => NsKind::Dubois,
                NsArg::Smets => NsKind::Smets,
                NsArg::Korner => NsKind::Korner,
                NsArg::Cu => NsKind::CredalUncertainty,
            },
            vertex_mode: match self.vertices {
                VerticesArg::Exact => VertexMode::Exact,
                VerticesArg::Approx => VertexMode::Approximate,
            },
            ..EvalConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every model in a manifest at one trade-off value.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Labels file: one class index per line, line number = instance id.
        #[arg(long)]
        labels: PathBuf,
        /// Trade-off weight on non-specificity.
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        metric: MetricArgs,
        /// Also write per-instance records.
        #[arg(long)]
        per_instance: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank models across a lambda sweep.
    Rank {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Sweep as start:stop:step.
        #[arg(long, default_value = "0.1:1.0:0.1")]
        lambdas: String,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the credal decomposition of one instance of one model.
    Inspect {
        #[arg(long)]
        manifest: PathBuf,
        /// Model id as listed in the manifest.
        #[arg(long)]
        model: String,
        /// Instance id to inspect.
        #[arg(long)]
        instance: u64,
        #[arg(long, value_enum, default_value = "approx")]
        vertices: VerticesArg,
    },
    /// Brute-force verification of the optimized paths.
    Oracle {
        /// Run the equivalence suite.
        #[arg(long)]
        self_test: bool,
        /// Largest label-space size drawn for the vertex batches.
        #[arg(long, default_value_t = 6)]
        max_classes: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Evaluate {
            manifest,
            labels,
            lambda,
            metric,
            per_instance,
            out,
        } => {
            let cfg = metric.config(lambda);
            cfg.validate()?;
            validate_max_failures(metric.max_failures)?;
            let manifests = load_manifest(&manifest)?;
            let label_values = load_labels(&labels)?;
            let outcome = evaluate_to_dir(&manifests, &label_values, &cfg, per_instance, &out)?;
            print_summaries(&outcome);
            println!(
                "wrote {} and {}{}",
                out.join(credal_eval::io::SUMMARIES_FILE).display(),
                out.join(credal_eval::io::RANKINGS_FILE).display(),
                if per_instance {
                    format!(" and {}", out.join(credal_eval::io::PER_INSTANCE_FILE).display())
                } else {
                    String::new()
                }
            );
            Ok(failure_exit(&outcome, metric.max_failures))
        }
        Command::Rank {
            manifest,
            labels,
            lambdas,
            metric,
            out,
        } => {
            let grid = parse_lambda_grid(&lambdas)?;
            let cfg = metric.config(*grid.last().unwrap());
            cfg.validate()?;
            validate_max_failures(metric.max_failures)?;
            let manifests = load_manifest(&manifest)?;
            let label_values = load_labels(&labels)?;
            let outcome = rank_to_dir(&manifests, &label_values, &cfg, &grid, &out)?;
            print_summaries(&outcome);
            println!(
                "wrote {} and {}",
                out.join(credal_eval::io::SUMMARIES_FILE).display(),
                out.join(credal_eval::io::RANKINGS_FILE).display()
            );
            Ok(failure_exit(&outcome, metric.max_failures))
        }
        Command::Inspect {
            manifest,
            model,
            instance,
            vertices,
        } => {
            let manifests = load_manifest(&manifest)?;
            let entry = manifests
                .iter()
                .find(|m| m.model_id == model)
                .with_context(|| format!("model {model:?} is not in the manifest"))?;
            let mode = match vertices {
                VerticesArg::Exact => VertexMode::Exact,
                VerticesArg::Approx => VertexMode::Approximate,
            };
            inspect(entry, instance, mode)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            self_test,
            max_classes,
        } => {
            if !self_test {
                bail!("nothing to do; pass --self-test");
            }
            let report = credal_eval::oracle::self_test(max_classes)?;
            for b in &report.batches {
                println!(
                    "{}: {} cases, max error {} (tolerance {}) ... {}",
                    b.name,
                    b.cases,
                    fmt_sig(b.max_error),
                    fmt_sig(b.tolerance),
                    if b.passed { "pass" } else { "FAIL" }
                );
            }
            println!(
                "self-test {} in {}s",
                if report.passed() { "passed" } else { "FAILED" },
                fmt_sig(report.elapsed_secs)
            );
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn validate_max_failures(f: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&f) {
        bail!("--max-failures must lie in [0, 1], got {f}");
    }
    Ok(())
}

fn parse_lambda_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--lambdas expects start:stop:step, got {spec:?}");
    }
    let parse = |s: &str| -> anyhow::Result<f64> {
        s.parse::<f64>()
            .with_context(|| format!("invalid number {s:?} in --lambdas"))
    };
    Ok(lambda_grid(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)?)
}

fn print_summaries(outcome: &RunOutcome) {
    for s in &outcome.summaries {
        println!(
            "{}: n={} accuracy={} ece={} d={} ns={} e={}",
            s.model_id,
            s.count,
            fmt_sig(s.accuracy),
            fmt_sig(s.ece),
            fmt_sig(s.d.overall.mean),
            fmt_sig(s.ns.overall.mean),
            fmt_sig(s.e.overall.mean),
        );
    }
    if outcome.singleton_warnings > 0 {
        eprintln!(
            "warning: {} mass records do not cover every singleton",
            outcome.singleton_warnings
        );
    }
    if outcome.failed_records > 0 {
        eprintln!(
            "warning: {} of {} records quarantined",
            outcome.failed_records, outcome.total_records
        );
        for f in &outcome.failures {
            match f.row {
                Some(row) => eprintln!("  {} row {}: {}", f.model_id, row, f.message),
                None => eprintln!("  {} instance {}: {}", f.model_id, f.instance_id, f.message),
            }
        }
    }
}

fn failure_exit(outcome: &RunOutcome, max_failures: f64) -> ExitCode {
    if outcome.failure_fraction() > max_failures {
        eprintln!(
            "failure fraction {} exceeds threshold {}",
            fmt_sig(outcome.failure_fraction()),
            fmt_sig(max_failures)
        );
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

const MAX_PRINTED_SUBSETS: usize = 64;

fn inspect(entry: &ModelManifest, instance: u64, mode: VertexMode) -> anyhow::Result<()> {
    let space = LabelSpace::new(entry.num_classes)?;
    let mut stream = load_predictions(entry)?;
    let record = loop {
        match stream.next() {
            None => bail!(
                "instance {instance} not found in {}",
                entry.predictions_path.display()
            ),
            Some(Err(e)) => return Err(e.into()),
            Some(Ok(r)) if r.instance_id == instance => break r,
            Some(Ok(r)) if r.instance_id > instance => bail!(
                "instance {instance} not found (file skips from before to {})",
                r.instance_id
            ),
            Some(Ok(_)) => continue,
        }
    };

    println!("model {} instance {instance} ({})", entry.model_id, entry.encoding.as_str());
    let summary = point_summary(&record, &space)?;
    println!("point summary: {}", fmt_vec(&summary));
    let predicted = summary
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    println!("predicted class: {} ({})", predicted, space.class_name(predicted));
    println!("summary entropy: {}", fmt_sig(shannon_entropy(&summary)));

    match &record.payload {
        PredictionPayload::Point(_) => {
            println!("point prediction: zero non-specificity, credal set is a single vertex");
        }
        PredictionPayload::Samples(rows) => {
            let s = SampleSet::new(space.clone(), rows.clone())?;
            println!("samples: {}", s.len());
            println!("mutual information: {}", fmt_sig(mutual_information(&s)));
            let family = match entry.budget {
                Some(b) => select_budget_subsets(&s, b)?,
                None => full_family(&space)?,
            };
            let lp = lower_prob_from_samples(&s, &family)?;
            print_lower_probability(&space, &lp);
            let m = mobius_inverse(&lp)?;
            print_raw_negatives(&space, &lp)?;
            print_mass(&space, &m);
            let v = enumerate(&m, mode)?;
            print_vertices(&space, &v, predicted);
            print_measures(&m)?;
            let ip = intervals_from_samples(&s);
            print_entropy_bounds(&ip)?;
        }
        PredictionPayload::Intervals { lower, upper } => {
            let ip = IntervalPrediction::new(space.clone(), lower.clone(), upper.clone())?;
            println!("lower bounds: {}", fmt_vec(ip.lower()));
            println!("upper bounds: {}", fmt_vec(ip.upper()));
            let lp = interval_envelope(&ip)?;
            print_lower_probability(&space, &lp);
            let m = mobius_inverse(&lp)?;
            print_raw_negatives(&space, &lp)?;
            print_mass(&space, &m);
            let v = enumerate(&m, mode)?;
            print_vertices(&space, &v, predicted);
            print_measures(&m)?;
            print_entropy_bounds(&ip)?;
        }
        PredictionPayload::Masses(pairs) => {
            let entries: Vec<(credal_eval::setfn::SubsetMask, f64)> = pairs
                .iter()
                .map(|&(bits, mass)| (credal_eval::setfn::SubsetMask::from_bits(bits), mass))
                .collect();
            let m = MassFunction::new(space.clone(), entries)?;
            print_mass(&space, &m);
            let bel: Vec<f64> = (0..space.num_classes())
                .map(|i| belief(&m, space.singleton(i)))
                .collect();
            let pl: Vec<f64> = (0..space.num_classes())
                .map(|i| plausibility(&m, space.singleton(i)))
                .collect();
            println!("singleton belief: {}", fmt_vec(&bel));
            println!("singleton plausibility: {}", fmt_vec(&pl));
            println!("pignistic: {}", fmt_vec(&pignistic(&m)));
            let v = enumerate(&m, mode)?;
            print_vertices(&space, &v, predicted);
            print_measures(&m)?;
            let ip = IntervalPrediction::new(
                space.clone(),
                bel,
                pl.into_iter().map(|x| x.clamp(0.0, 1.0)).collect(),
            )?;
            print_entropy_bounds(&ip)?;
        }
    }
    Ok(())
}

fn enumerate(m: &MassFunction, mode: VertexMode) -> credal_eval::Result<CredalVertices> {
    match mode {
        VertexMode::Exact => vertices_exact(m),
        VertexMode::Approximate => vertices_approx(m),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_sig(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn print_lower_probability(space: &LabelSpace, lp: &LowerProbability) {
    println!("lower probabilities ({} subsets):", lp.family_len());
    for (mask, value) in lp.family().take(MAX_PRINTED_SUBSETS) {
        println!("  P{} >= {}", space.format_subset(mask), fmt_sig(value));
    }
    if lp.family_len() > MAX_PRINTED_SUBSETS {
        println!("  ... ({} more)", lp.family_len() - MAX_PRINTED_SUBSETS);
    }
}

fn print_raw_negatives(space: &LabelSpace, lp: &LowerProbability) -> anyhow::Result<()> {
    let raw = mobius_inverse_raw(lp)?;
    let negatives: Vec<String> = raw
        .iter()
        .filter(|&&(_, m)| m < -1e-12)
        .take(MAX_PRINTED_SUBSETS)
        .map(|&(mask, m)| format!("{}: {}", space.format_subset(mask), fmt_sig(m)))
        .collect();
    if negatives.is_empty() {
        println!("raw masses: none negative");
    } else {
        println!("raw negative masses clamped to zero: {}", negatives.join(", "));
    }
    Ok(())
}

fn print_mass(space: &LabelSpace, m: &MassFunction) {
    println!("mass function ({} focal subsets):", m.num_focal());
    for (mask, mass) in m.focal_iter().take(MAX_PRINTED_SUBSETS) {
        println!("  m{} = {}", space.format_subset(mask), fmt_sig(mass));
    }
    if m.num_focal() > MAX_PRINTED_SUBSETS {
        println!("  ... ({} more)", m.num_focal() - MAX_PRINTED_SUBSETS);
    }
}

fn print_vertices(space: &LabelSpace, v: &CredalVertices, predicted: usize) {
    println!("credal vertices ({}, {:?}):", v.len(), v.provenance());
    for vertex in v.vertices().iter().take(MAX_PRINTED_SUBSETS) {
        println!("  {}", fmt_vec(vertex));
    }
    if v.len() > MAX_PRINTED_SUBSETS {
        println!("  ... ({} more)", v.len() - MAX_PRINTED_SUBSETS);
    }
    println!(
        "credal width of class {} ({}): {}",
        predicted,
        space.class_name(predicted),
        fmt_sig(credal_width(v, predicted))
    );
}

fn print_measures(m: &MassFunction) -> anyhow::Result<()> {
    println!("non-specificity (dubois): {}", fmt_sig(ns_dubois(m)));
    match ns_smets(m) {
        Ok(v) => println!("non-specificity (smets): {}", fmt_sig(v)),
        Err(e) => println!("non-specificity (smets): unavailable ({e})"),
    }
    println!("non-specificity (korner): {}", fmt_sig(ns_korner(m)));
    println!("specificity (pal): {}", fmt_sig(spec_pal(m)));
    Ok(())
}

fn print_entropy_bounds(ip: &IntervalPrediction) -> anyhow::Result<()> {
    match entropy_bounds(ip) {
        Ok(b) => {
            println!(
                "entropy bounds: [{}, {}], credal uncertainty {}",
                fmt_sig(b.lower),
                fmt_sig(b.upper),
                fmt_sig(b.upper - b.lower)
            );
        }
        Err(e) => println!("entropy bounds: unavailable ({e})"),
    }
    Ok(())
}
