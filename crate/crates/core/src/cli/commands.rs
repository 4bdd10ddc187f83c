//! Subcommand arguments and their implementations. Every command writes its
//! artifacts into the output directory and returns their file names.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::io::{read_dataset, read_rows, sidecar_path, write_dataset, write_json, CsvWriter};
use crate::acquisition::{generate_scenario_i, generate_scenario_ii, Scenario, Split};
use crate::bayes::{Counts, LikelihoodModel, Prior, DEFAULT_RABI_NODES};
use crate::physics::{harmonic_survival, Basis, DressedModel, QuantumState, TargetField};
use crate::precision::{qfi, Parameter, QfiReport};
use crate::regressor::{
    evaluate_repeated, metrics, metrics_by_dimension, predict_split, train_with, Metrics, RegressorModel,
};
use crate::stirap::{pulse_pair, readout_with, simulate_preparation_with, Sampling, StirapShape};
use crate::units::{to_two_pi_khz, two_pi_khz};
use crate::{physics, Error, Result};

/// Must match [`crate::bayes::DEFAULT_DETUNING_NODES`].
pub(crate) const DETUNING_NODES_DEFAULT: &str = "51";

pub(crate) struct Context<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
}

impl Context<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn khz_all(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| to_two_pi_khz(v)).collect()
}

/// Response vectors from a text file: one per row, or a single vector
/// written as one value per row.
fn read_responses(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(path)?;
    if rows.len() > 1 && rows.iter().all(|r| r.len() == 1) {
        return Ok(vec![rows.into_iter().map(|r| r[0]).collect()]);
    }
    Ok(rows)
}

/// Survival probability `P_D(t)` for one target field.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Target Rabi frequency, 2π×kHz.
    #[arg(long)]
    pub rabi_khz: f64,
    /// Target detuning, 2π×kHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub detuning_khz: f64,
    /// Number of time points; defaults to the acquisition plan.
    #[arg(long)]
    pub points: Option<usize>,
    /// Last time point in ms; defaults to the acquisition plan.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Integration step in ms.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Add the closed-form two-level curve as a second column.
    #[arg(long)]
    pub harmonic: bool,
}

pub(crate) fn simulate(ctx: &Context<'_>, args: &SimulateArgs) -> Result<Vec<String>> {
    let cfg = ctx.config.sensor()?;
    let mut plan = ctx.config.plan()?;
    if let Some(n) = args.points {
        plan.n_points = n;
    }
    if let Some(t) = args.t_final {
        plan.t_final = t;
    }
    plan.validate()?;
    let target = TargetField::detuned(&cfg, two_pi_khz(args.rabi_khz), two_pi_khz(args.detuning_khz))?;
    let model = DressedModel::new(&cfg, &target, ctx.config.tier)?;
    let times = plan.times();
    let dt = args.dt.or(plan.time_step).unwrap_or_else(|| model.default_step());
    let curve = model.survival_curve(&times, dt)?;
    let name = "curve.csv";
    let header: &[&str] = if args.harmonic { &["t_ms", "p_dark", "p_harmonic"] } else { &["t_ms", "p_dark"] };
    let mut w = CsvWriter::create(&ctx.path(name), header)?;
    for (&t, &p) in times.iter().zip(&curve) {
        if args.harmonic {
            w.row(&[t, p, harmonic_survival(&target, t)])?;
        } else {
            w.row(&[t, p])?;
        }
    }
    w.finish()?;
    Ok(vec![name.into()])
}

/// STIRAP preparation of `|D⟩` from `|+1⟩`, and optionally the mirrored
/// readout ramp.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PrepArgs {
    /// Pulse amplitude, 2π×kHz.
    #[arg(long)]
    pub amplitude_khz: Option<f64>,
    /// Ramp centre of the first pulse, ms.
    #[arg(long)]
    pub b1: Option<f64>,
    /// Ramp centre of the second pulse, ms.
    #[arg(long)]
    pub b2: Option<f64>,
    /// Ramp width, ms.
    #[arg(long)]
    pub c: Option<f64>,
    /// Sequence length, ms.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output sample spacing, ms.
    #[arg(long, default_value_t = 0.01)]
    pub sample_every: f64,
    /// Integration step, ms.
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Also run the readout ramp from an ideal `|D⟩`.
    #[arg(long)]
    pub readout: bool,
}

impl PrepArgs {
    fn shape(&self) -> StirapShape {
        let mut s = StirapShape::default();
        if let Some(a) = self.amplitude_khz {
            s.amplitude = two_pi_khz(a);
            s.c = 3.0 * std::f64::consts::PI / s.amplitude;
        }
        s.b1 = self.b1.unwrap_or(s.b1);
        s.b2 = self.b2.unwrap_or(s.b2);
        s.c = self.c.unwrap_or(s.c);
        s.total_duration = self.duration.unwrap_or(s.total_duration);
        s
    }
}

const TRAJECTORY_HEADER: [&str; 8] =
    ["t_ms", "omega1_khz", "omega2_khz", "p_plus_one", "p_zero_prime", "p_minus_one", "p_zero", "p_dark"];

fn write_trajectory(
    path: &Path,
    shape: &StirapShape,
    traj: &crate::stirap::StirapTrajectory,
    pulse_time: impl Fn(f64) -> f64,
) -> Result<()> {
    let mut w = CsvWriter::create(path, &TRAJECTORY_HEADER)?;
    for i in 0..traj.len() {
        let t = traj.times[i];
        let (o1, o2) = pulse_pair(shape, pulse_time(t).clamp(0.0, shape.total_duration))?;
        w.row(&[
            t,
            to_two_pi_khz(o1),
            to_two_pi_khz(o2),
            traj.plus_one[i],
            traj.zero_prime[i],
            traj.minus_one[i],
            traj.zero[i],
            traj.dark[i],
        ])?;
    }
    w.finish()
}

pub(crate) fn prep(ctx: &Context<'_>, args: &PrepArgs) -> Result<Vec<String>> {
    let cfg = ctx.config.sensor()?;
    let shape = args.shape();
    shape.validate()?;
    let sampling = Sampling { sample_every: args.sample_every, dt: args.dt };
    let start = QuantumState::basis_state(Basis::Lab, physics::bare::PLUS_ONE);
    let traj = simulate_preparation_with(&cfg, &shape, &start, sampling)?;
    write_trajectory(&ctx.path("stirap.csv"), &shape, &traj, |t| t)?;
    let k = traj.nearest(shape.ramp_end());
    println!("P_D({} ms) = {}", traj.times[k], traj.dark[k]);
    let mut outputs = vec!["stirap.csv".to_string()];
    if args.readout {
        let back = readout_with(&cfg, &shape, &QuantumState::dark(), sampling)?;
        let end = shape.ramp_end();
        write_trajectory(&ctx.path("readout.csv"), &shape, &back, |s| end - s)?;
        println!("readout P(+1) = {}", back.plus_one.last().copied().unwrap_or(f64::NAN));
        outputs.push("readout.csv".into());
    }
    Ok(outputs)
}

/// Synthetic training corpus from the configured grid and acquisition.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Records per parameter tuple; overrides the configuration.
    #[arg(long)]
    pub repetitions: Option<usize>,
}

pub(crate) fn gen(ctx: &Context<'_>, args: &GenArgs) -> Result<Vec<String>> {
    let c = ctx.config;
    let cfg = c.sensor()?;
    let plan = c.plan()?;
    let reps = args.repetitions.unwrap_or_else(|| c.repetitions());
    let omega = c.rabi_grid();
    let dataset = match plan.scenario {
        Scenario::AveragedI => {
            let xi = c.detuning_grid();
            generate_scenario_i(&cfg, c.tier, &plan, &omega, xi.as_deref(), reps, c.seeds.data)?
        }
        Scenario::SingleShotII => {
            if c.grid.detuning_khz.is_some() {
                return Err(Error::invalid("single-shot corpora take no detuning grid"));
            }
            generate_scenario_ii(&cfg, c.tier, &plan, &omega, reps, c.seeds.data)?
        }
    };
    let path = ctx.path("dataset.jsonl");
    write_dataset(&path, &dataset)?;
    println!("{} records ({} train, {} validation, {} test)", dataset.len(),
        dataset.count(Split::Train), dataset.count(Split::Validation), dataset.count(Split::Test));
    let sidecar = sidecar_path(&path);
    let sidecar = sidecar.file_name().unwrap_or_default().to_string_lossy().into_owned();
    Ok(vec!["dataset.jsonl".into(), sidecar])
}

/// Trains the regressor on a dataset written by `gen`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Dataset file (`.jsonl`, with its `.meta.json` alongside).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Overrides the configured epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn estimate_header(prefix: &str, dims: usize) -> Vec<String> {
    match dims {
        1 => vec![format!("{prefix}rabi_khz")],
        2 => vec![format!("{prefix}rabi_khz"), format!("{prefix}detuning_khz")],
        _ => (0..dims).map(|d| format!("{prefix}{d}")).collect(),
    }
}

pub(crate) fn train(ctx: &Context<'_>, args: &TrainArgs) -> Result<Vec<String>> {
    let dataset = read_dataset(&args.dataset)?;
    let mut hyper = ctx.config.hyperparameters();
    if let Some(e) = args.epochs {
        hyper.epochs = e;
    }
    let arch = ctx.config.architecture();
    let mut curve = CsvWriter::create(
        &ctx.path("training.csv"),
        &["epoch", "train_cost", "validation_cost", "test_cost", "gradient_norm"],
    )?;
    let mut write_err = None;
    let model = train_with(&dataset, &arch, &hyper, |r| {
        if write_err.is_none() {
            if let Err(e) = curve.row(&[r.epoch as f64, r.train_cost, r.validation_cost, r.test_cost, r.gradient_norm]) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    curve.finish()?;
    model.save(&ctx.path("model.json"))?;

    let (targets, outputs) = predict_split(&model, &dataset, Split::Test)?;
    let dims = dataset.target_len();
    let mut header = estimate_header("target_", dims);
    header.extend(estimate_header("output_", dims));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&ctx.path("predictions.csv"), &header)?;
    for (t, o) in targets.iter().zip(&outputs) {
        let mut row = khz_all(t);
        row.extend(khz_all(o));
        w.row(&row)?;
    }
    w.finish()?;
    let m = metrics_by_dimension(&targets, &outputs)?;
    write_json(&ctx.path("metrics.json"), &m)?;
    let best = &model.report().epochs[model.report().best_epoch];
    println!("best epoch {} (validation cost {}, test cost {})", best.epoch, best.validation_cost, best.test_cost);
    for (d, md) in m.iter().enumerate() {
        println!("dim {d}: alpha {:?} R {:?} mean accuracy {:?}", md.fit_alpha, md.correlation_r, md.mean_accuracy);
    }
    Ok(vec![
        "training.csv".into(),
        "model.json".into(),
        "predictions.csv".into(),
        "metrics.json".into(),
    ])
}

/// Estimates from measured or synthetic response vectors.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Text file with one response vector per row (or one value per row).
    #[arg(long)]
    pub responses: PathBuf,
    /// Treat the rows as repeated acquisitions and report their mean and SD.
    #[arg(long)]
    pub repeated: bool,
}

pub(crate) fn estimate(ctx: &Context<'_>, args: &EstimateArgs) -> Result<Vec<String>> {
    let model = RegressorModel::load(&args.model)?;
    let responses = read_responses(&args.responses)?;
    let estimates = model.estimate_batch(&responses)?;
    let dims = model.n_outputs();
    let mut header = estimate_header("", dims);
    header.push("extrapolated".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&ctx.path("estimates.csv"), &header)?;
    for e in &estimates {
        let mut row = khz_all(&e.values);
        println!(
            "{}{}",
            row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            if e.extrapolated { "  (extrapolated)" } else { "" }
        );
        row.push(if e.extrapolated { 1.0 } else { 0.0 });
        w.row(&row)?;
    }
    w.finish()?;
    let mut outputs = vec!["estimates.csv".to_string()];
    if args.repeated {
        let r = evaluate_repeated(&model, &responses)?;
        let summary = RepeatedSummary { count: responses.len(), mean_khz: khz_all(&r.mean), sd_khz: khz_all(&r.sd) };
        println!("mean {:?} sd {:?} (2π×kHz)", summary.mean_khz, summary.sd_khz);
        write_json(&ctx.path("repeated.json"), &summary)?;
        outputs.push("repeated.json".into());
    }
    Ok(outputs)
}

#[derive(Debug, Serialize)]
struct RepeatedSummary {
    count: usize,
    mean_khz: Vec<f64>,
    sd_khz: Vec<f64>,
}

/// Grid posterior over the target parameters for each response vector.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BayesArgs {
    /// Text file of averaged responses, one vector per row.
    #[arg(long)]
    pub responses: PathBuf,
    /// Shots behind each averaged point; defaults to the acquisition plan.
    #[arg(long)]
    pub n_shots: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub rabi_min_khz: f64,
    #[arg(long, default_value_t = 10.0)]
    pub rabi_max_khz: f64,
    #[arg(long, default_value_t = DEFAULT_RABI_NODES)]
    pub rabi_nodes: usize,
    /// Adds a detuning axis with this many nodes.
    #[arg(long, num_args = 0..=1, default_missing_value = DETUNING_NODES_DEFAULT)]
    pub detuning_nodes: Option<usize>,
    #[arg(long, default_value_t = -0.6, allow_hyphen_values = true)]
    pub detuning_min_khz: f64,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub detuning_max_khz: f64,
    /// Truncated Gaussian prior means, one per axis, 2π×kHz.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub prior_mean_khz: Vec<f64>,
    /// Truncated Gaussian prior SDs, one per axis, 2π×kHz.
    #[arg(long, value_delimiter = ',')]
    pub prior_sd_khz: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct BayesRow {
    record: usize,
    mode_khz: Vec<f64>,
    mean_khz: Vec<f64>,
    sd_khz: Vec<f64>,
}

pub(crate) fn bayes(ctx: &Context<'_>, args: &BayesArgs) -> Result<Vec<String>> {
    let cfg = ctx.config.sensor()?;
    let mut plan = ctx.config.plan()?;
    if let Some(n) = args.n_shots {
        plan.n_shots = n;
    }
    let responses = read_responses(&args.responses)?;
    let mut axes = vec![crate::acquisition::linear_grid(
        two_pi_khz(args.rabi_min_khz),
        two_pi_khz(args.rabi_max_khz),
        args.rabi_nodes,
    )];
    if let Some(n) = args.detuning_nodes {
        axes.push(crate::acquisition::linear_grid(
            two_pi_khz(args.detuning_min_khz),
            two_pi_khz(args.detuning_max_khz),
            n,
        ));
    }
    let dims = axes.len();
    let prior = match (args.prior_mean_khz.is_empty(), args.prior_sd_khz.is_empty()) {
        (true, true) => Prior::Uniform,
        (false, false) => {
            if args.prior_mean_khz.len() != dims || args.prior_sd_khz.len() != dims {
                return Err(Error::invalid(format!("prior needs {dims} means and {dims} SDs")));
            }
            Prior::TruncatedGaussian {
                mean: args.prior_mean_khz.iter().map(|&v| two_pi_khz(v)).collect(),
                sd: args.prior_sd_khz.iter().map(|&v| two_pi_khz(v)).collect(),
            }
        }
        _ => return Err(Error::invalid("--prior-mean-khz and --prior-sd-khz go together")),
    };
    let model = LikelihoodModel::build(&cfg, ctx.config.tier, &plan, axes)?;

    let mut names = vec!["rabi_khz"];
    if dims == 2 {
        names.push("detuning_khz");
    }
    let mut outputs = Vec::new();
    let mut summary = Vec::with_capacity(responses.len());
    for (k, r) in responses.iter().enumerate() {
        let counts = Counts::from_averages(r, plan.n_shots as u64)?;
        let grid = model.posterior(&counts, &prior)?;
        let name = format!("posterior_{k}.csv");
        let mut header = names.clone();
        header.extend(["prior", "log_likelihood", "posterior"]);
        let mut w = CsvWriter::create(&ctx.path(&name), &header)?;
        let n_det = if dims == 2 { grid.axes[1].len() } else { 1 };
        for (i, ((&p, &l), &q)) in grid.prior.iter().zip(&grid.log_likelihood).zip(&grid.posterior).enumerate() {
            let mut row = vec![to_two_pi_khz(grid.axes[0][i / n_det])];
            if dims == 2 {
                row.push(to_two_pi_khz(grid.axes[1][i % n_det]));
            }
            row.extend([p, l, q]);
            w.row(&row)?;
        }
        w.finish()?;
        outputs.push(name);
        let est = grid.marginal_estimates();
        let row = BayesRow {
            record: k,
            mode_khz: khz_all(&grid.mode()),
            mean_khz: est.iter().map(|e| to_two_pi_khz(e.mean)).collect(),
            sd_khz: est.iter().map(|e| to_two_pi_khz(e.sd)).collect(),
        };
        println!("record {k}: mode {:?} mean {:?} sd {:?} (2π×kHz)", row.mode_khz, row.mean_khz, row.sd_khz);
        summary.push(row);
    }
    let mut header = vec!["record".to_string()];
    for prefix in ["mode_", "mean_", "sd_"] {
        header.extend(names.iter().map(|n| format!("{prefix}{n}")));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&ctx.path("bayes.csv"), &header)?;
    for s in &summary {
        let mut row = vec![s.record as f64];
        row.extend(&s.mode_khz);
        row.extend(&s.mean_khz);
        row.extend(&s.sd_khz);
        w.row(&row)?;
    }
    w.finish()?;
    outputs.push("bayes.csv".into());
    Ok(outputs)
}

/// Quantum Fisher information and the Cramér-Rao bound.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QfiArgs {
    /// Target Rabi frequency, 2π×kHz.
    #[arg(long)]
    pub rabi_khz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub detuning_khz: f64,
    #[arg(long, default_value = "rabi")]
    pub parameter: Parameter,
    /// Interaction time in ms; defaults to the acquisition plan.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Total shot counts to report bounds for; defaults to points × shots
    /// of the acquisition plan.
    #[arg(long, value_delimiter = ',')]
    pub total_shots: Vec<usize>,
    /// Finite-difference step, in the parameter's 2π×kHz units.
    #[arg(long)]
    pub delta_khz: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Serialize)]
struct QfiOutput {
    tier: physics::FidelityTier,
    rabi_khz: f64,
    detuning_khz: f64,
    /// ms²
    qfi: f64,
    coarse_qfi: f64,
    reports: Vec<BoundRow>,
}

#[derive(Debug, Serialize)]
struct BoundRow {
    #[serde(flatten)]
    report: QfiReport,
    bound_khz: Option<f64>,
}

pub(crate) fn qfi_report(ctx: &Context<'_>, args: &QfiArgs) -> Result<Vec<String>> {
    let cfg = ctx.config.sensor()?;
    let plan = ctx.config.plan()?;
    let target = TargetField::detuned(&cfg, two_pi_khz(args.rabi_khz), two_pi_khz(args.detuning_khz))?;
    let t_final = args.t_final.unwrap_or(plan.t_final);
    let q = qfi(
        &cfg,
        &target,
        ctx.config.tier,
        args.parameter,
        t_final,
        args.delta_khz.map(two_pi_khz),
        args.dt.or(plan.time_step),
    )?;
    let totals = if args.total_shots.is_empty() { vec![plan.n_points * plan.n_shots] } else { args.total_shots.clone() };
    let reports = totals
        .iter()
        .map(|&n| {
            let report = QfiReport::new(args.parameter, t_final, &q, n, 1)?;
            Ok(BoundRow { report, bound_khz: report.bound.map(to_two_pi_khz) })
        })
        .collect::<Result<Vec<_>>>()?;
    println!("I = {} ms² at t = {t_final} ms", q.value);
    for r in &reports {
        println!("N_T = {}: bound {:?} (2π×kHz)", r.report.total_shots, r.bound_khz);
    }
    let out = QfiOutput {
        tier: ctx.config.tier,
        rabi_khz: args.rabi_khz,
        detuning_khz: args.detuning_khz,
        qfi: q.value,
        coarse_qfi: q.coarse_value,
        reports,
    };
    write_json(&ctx.path("qfi.json"), &out)?;
    Ok(vec!["qfi.json".into()])
}

/// Accuracy, correlation and regression-line metrics for `target,output`
/// pairs.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// Two-column text file of targets and estimates.
    #[arg(long)]
    pub input: PathBuf,
}

pub(crate) fn metrics_report(ctx: &Context<'_>, args: &MetricsArgs) -> Result<Vec<String>> {
    let rows = read_rows(&args.input)?;
    if let Some(bad) = rows.iter().find(|r| r.len() != 2) {
        return Err(Error::DimensionMismatch { expected: 2, got: bad.len() });
    }
    let targets: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let outputs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let m: Metrics = metrics(&targets, &outputs)?;
    println!(
        "mean accuracy {:?} SD {:?} R {:?} alpha {:?} beta {:?}",
        m.mean_accuracy, m.accuracy_sd, m.correlation_r, m.fit_alpha, m.fit_beta
    );
    write_json(&ctx.path("metrics.json"), &m)?;
    Ok(vec!["metrics.json".into()])
}
