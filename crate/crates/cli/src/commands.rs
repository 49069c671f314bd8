use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use wavkan::data::{load_mnist, make_synthetic, Dataset, Regime};
use wavkan::kan::{load_checkpoint, save_checkpoint, Layer, ModelKind, ParamGroup};
use wavkan::training::{
    evaluate, run_training_with, write_comparison_csv, write_metrics_csv, MetricsRow, Split,
    TrainConfig, TrainingOutcome, Trial,
};
use wavkan::wavelets::{check_criteria, haar_decompose, haar_reconstruct, DEFAULT_OMEGA0};
use wavkan::{Rng, WaveletFamily, WaveletKind};

use crate::args::{
    ConfigFile, DataArgs, DatasetChoice, DwtDemoArgs, EvalArgs, ExportArgs, Layout, ParamCountArgs,
    TrainArgs, WaveletCheckArgs,
};
use crate::CliError;

/// Residual threshold of `wavelet-check`.
pub const RESIDUAL_TOL: f64 = 1e-4;
const DEFAULT_SAMPLES: usize = 512;
/// Offset between the train and test seeds of a synthetic dataset.
const SYNTHETIC_TEST_SEED_OFFSET: u64 = 1 << 32;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

struct DataSpec {
    choice: DatasetChoice,
    dir: PathBuf,
    samples: usize,
    seed: u64,
}

impl DataSpec {
    fn resolve(args: DataArgs, file: &ConfigFile, seed: u64) -> Result<Self, CliError> {
        Ok(Self {
            choice: file.pick(args.dataset, "dataset")?.unwrap_or(DatasetChoice::Mnist),
            dir: file
                .pick(args.data_dir, "data-dir")?
                .unwrap_or_else(|| PathBuf::from("data/mnist")),
            samples: file.pick(args.samples, "samples")?.unwrap_or(DEFAULT_SAMPLES),
            seed,
        })
    }

    fn load(&self) -> Result<Dataset, CliError> {
        match self.choice {
            DatasetChoice::Mnist => Ok(load_mnist(&self.dir)?),
            DatasetChoice::Synthetic(regime) => synthetic(regime, self.samples, self.seed),
        }
    }

    fn default_layout(&self) -> Vec<usize> {
        match self.choice {
            DatasetChoice::Mnist => vec![784, 32, 10],
            DatasetChoice::Synthetic(_) => vec![wavkan::data::SYNTHETIC_DIM, 8, 2],
        }
    }

    fn describe(&self) -> String {
        match self.choice {
            DatasetChoice::Mnist => "dataset=mnist".to_string(),
            DatasetChoice::Synthetic(r) => format!("dataset={r} samples={}", self.samples),
        }
    }
}

fn synthetic(regime: Regime, samples: usize, seed: u64) -> Result<Dataset, CliError> {
    let train = make_synthetic(regime, samples, seed)?;
    let test = make_synthetic(regime, samples, seed.wrapping_add(SYNTHETIC_TEST_SEED_OFFSET))?;
    Ok(Dataset::new(train, test)?)
}

fn wavelet_kind(family: WaveletFamily, omega0: f64) -> Result<WaveletKind, CliError> {
    Ok(WaveletKind::of(family).with_omega0(omega0)?)
}

/// Resolves flags, config file and defaults into a training configuration.
fn resolve_train(args: TrainArgs) -> Result<(TrainConfig, DataSpec, PathBuf, bool, bool), CliError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let defaults = TrainConfig::default();
    let seed = file.pick(args.seed, "seed")?.unwrap_or(defaults.seed);
    let data = DataSpec::resolve(args.data, &file, seed)?;
    let family = file.pick(args.wavelet, "wavelet")?.unwrap_or(WaveletFamily::MexicanHat);
    let omega0 = file.pick(args.omega0, "omega0")?.unwrap_or(DEFAULT_OMEGA0);
    let layout = file
        .pick(args.layout, "layout")?
        .map(|l| l.0)
        .unwrap_or_else(|| data.default_layout());
    let cfg = TrainConfig {
        model: file.pick(args.model, "model")?.unwrap_or(defaults.model),
        layout,
        kind: wavelet_kind(family, omega0)?,
        batchnorm: file.pick(args.batchnorm, "batchnorm")?.unwrap_or(defaults.batchnorm),
        lr: file.pick(args.lr, "lr")?.unwrap_or(defaults.lr),
        weight_decay: file.pick(args.weight_decay, "weight-decay")?.unwrap_or(defaults.weight_decay),
        batch_size: file.pick(args.batch_size, "batch-size")?.unwrap_or(defaults.batch_size),
        epochs: file.pick(args.epochs, "epochs")?.unwrap_or(defaults.epochs),
        trials: file.pick(args.trials, "trials")?.unwrap_or(defaults.trials),
        seed,
        ..defaults
    };
    cfg.validate()?;
    let out = file.pick(args.out, "out")?.unwrap_or_else(|| PathBuf::from("runs"));
    Ok((cfg, data, out, args.compare_mlp, args.dry_run))
}

fn final_test_accuracy(rows: &[MetricsRow], trial: Trial) -> Option<f64> {
    rows.iter()
        .rev()
        .find(|r| r.trial == trial && r.split == Split::Test)
        .map(|r| r.accuracy)
}

/// Trains one configuration and writes `<prefix>metrics.csv` and
/// `<prefix>trial_<k>.ckpt` under `out`.
fn train_one(
    cfg: &TrainConfig,
    data: &Dataset,
    comment: &str,
    out: &Path,
    prefix: &str,
) -> Result<TrainingOutcome, CliError> {
    let outcome = run_training_with(cfg, data, |r| {
        if let Trial::Index(k) = r.trial {
            eprintln!(
                "[{}] trial {k} epoch {} {} loss={:.6} accuracy={:.4}",
                cfg.model, r.epoch, r.split, r.loss, r.accuracy
            );
        }
    })?;
    let mut csv = create(&out.join(format!("{prefix}metrics.csv")))?;
    write_metrics_csv(&mut csv, &outcome.rows, Some(comment))?;
    csv.flush()?;
    for (k, net) in outcome.networks.iter().enumerate() {
        save_checkpoint(net, out.join(format!("{prefix}trial_{k}.ckpt")))?;
    }
    if let Some(stop) = outcome.aborted {
        return Err(CliError::Numeric(format!(
            "{stop}; last finite state saved to {}",
            out.join(format!("{prefix}trial_{}.ckpt", stop.trial)).display()
        )));
    }
    for k in 0..cfg.trials {
        match final_test_accuracy(&outcome.rows, Trial::Index(k)) {
            Some(acc) => println!("{} trial {k} final test accuracy {acc:.4}", cfg.model),
            None => println!("{} trial {k} ran no epochs", cfg.model),
        }
    }
    if let Some(acc) = final_test_accuracy(&outcome.rows, Trial::Mean) {
        println!("{} mean final test accuracy {acc:.4}", cfg.model);
    }
    Ok(outcome)
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let (cfg, spec, out, compare_mlp, dry_run) = resolve_train(args)?;
    if compare_mlp && cfg.model == ModelKind::Mlp {
        return Err(usage("--compare-mlp needs --model wavkan"));
    }
    if dry_run {
        println!("{} {}", cfg.summary(), spec.describe());
        println!("out={}", out.display());
        return Ok(());
    }
    let data = spec.load()?;
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;

    let comment = format!("{} {}", cfg.summary(), spec.describe());
    let primary = train_one(&cfg, &data, &comment, &out, "")?;
    if compare_mlp {
        let mlp_cfg = TrainConfig { model: ModelKind::Mlp, ..cfg.clone() };
        let comment = format!("{} {}", mlp_cfg.summary(), spec.describe());
        let baseline = train_one(&mlp_cfg, &data, &comment, &out, "mlp_")?;
        let mut csv = create(&out.join("comparison.csv"))?;
        write_comparison_csv(&mut csv, "wavkan", &primary.rows, "mlp", &baseline.rows)?;
        csv.flush()?;
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let net = load_checkpoint(&args.checkpoint)?;
    let seed = args.seed.unwrap_or(0);
    let spec = DataSpec::resolve(args.data, &ConfigFile::default(), seed)?;
    let data = spec.load()?;
    for (name, split) in [("train", &data.train), ("test", &data.test)] {
        let (loss, acc) = evaluate(&net, split)?;
        println!("{name} loss={loss:.6} accuracy={acc:.4} samples={}", split.len());
    }
    Ok(())
}

pub fn wavelet_check(args: WaveletCheckArgs) -> Result<(), CliError> {
    let families: Vec<WaveletFamily> = match args.wavelet {
        Some(f) => vec![f],
        None => WaveletFamily::ALL.to_vec(),
    };
    let mut report = String::new();
    let mut failed = 0;
    for family in families {
        let kind = wavelet_kind(family, args.omega0)?;
        let r = check_criteria(&kind, args.halfwidth, args.points)?;
        let ok = r.passes(RESIDUAL_TOL);
        if !ok {
            failed += 1;
        }
        report.push_str(&format!(
            "{} {} zero_mean_residual={:.3e} c_psi={:.6} grid_points={} domain=[-{},{}] omega=[{:.6},{:.6}]\n",
            if ok { "PASS" } else { "FAIL" },
            family,
            r.zero_mean_residual,
            r.c_psi,
            r.grid_points,
            r.domain_halfwidth,
            r.domain_halfwidth,
            r.omega_min,
            r.omega_max
        ));
    }
    print!("{report}");
    if let Some(path) = &args.report {
        let mut f = create(path)?;
        f.write_all(report.as_bytes())?;
        f.flush()?;
    }
    if failed > 0 {
        return Err(CliError::Numeric(format!(
            "{failed} wavelet(s) failed the criteria (residual tolerance {RESIDUAL_TOL:e})"
        )));
    }
    Ok(())
}

fn demo_signal(name: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let t = |k: usize| k as f64 / n as f64;
    match name {
        "chirp" => Ok((0..n).map(|k| (2.0 * std::f64::consts::PI * 40.0 * t(k) * t(k)).sin()).collect()),
        "constant" => Ok(vec![1.0; n]),
        "step" => Ok((0..n).map(|k| if 3 * k < n { 0.0 } else { 1.0 }).collect()),
        other => Err(usage(format!("unknown demo signal '{other}' (expected chirp, constant or step)"))),
    }
}

fn read_signal(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(n, l)| {
            l.parse::<f64>()
                .map_err(|e| CliError::Io(format!("{} line {}: {e}", path.display(), n + 1)))
        })
        .collect()
}

pub fn dwt_demo(args: DwtDemoArgs) -> Result<(), CliError> {
    let x = match &args.signal {
        Some(path) => read_signal(path)?,
        None => demo_signal(&args.demo, args.length)?,
    };
    if !x.len().is_power_of_two() || x.len() < 2 {
        return Err(usage(format!("signal length {} is not a power of two", x.len())));
    }
    let coeffs = haar_decompose(&x, args.levels)?;
    let back = haar_reconstruct(&coeffs)?;
    let roundtrip = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let signal_energy: f64 = x.iter().map(|v| v * v).sum();
    let energy_error = if signal_energy > 0.0 {
        (coeffs.energy() - signal_energy).abs() / signal_energy
    } else {
        coeffs.energy()
    };

    println!("signal length={} levels={}", x.len(), coeffs.levels());
    for (level, e) in coeffs.detail_energies().iter().enumerate() {
        println!("level {} detail_energy={e:.12e}", level + 1);
    }
    let approx: f64 = coeffs.approx.iter().map(|v| v * v).sum();
    println!("approx_energy={approx:.12e}");
    println!("roundtrip_max_error={roundtrip:.3e}");
    println!("energy_relative_error={energy_error:.3e}");

    let shallow = haar_decompose(&x, 1)?;
    let same = shallow.details[0] == coeffs.details[0];
    println!("level1_details_identical={same} (levels=1 vs levels={})", coeffs.levels());
    if !same {
        return Err(CliError::Numeric("level-1 details changed with depth".into()));
    }
    Ok(())
}

pub fn param_count(args: ParamCountArgs) -> Result<(), CliError> {
    let net = wavkan::kan::Network::build(
        args.model,
        &args.layout.0,
        WaveletKind::mexican_hat(),
        args.batchnorm,
        &mut Rng::new(0),
    )?;
    let count = net.param_count();
    println!("model={} layout={} batchnorm={}", args.model, Layout(args.layout.0.clone()), args.batchnorm);
    for group in [
        ParamGroup::Weight,
        ParamGroup::Translation,
        ParamGroup::Scale,
        ParamGroup::Bias,
        ParamGroup::BnGamma,
        ParamGroup::BnBeta,
    ] {
        println!("{}={}", group.name(), count.group(group));
    }
    if args.model == ModelKind::WavKan {
        println!("wavelet_params={}", count.wavelet_params());
    }
    println!("learnable={}", count.learnable);
    println!("non_learnable={}", count.non_learnable);
    Ok(())
}

pub fn export_activations(args: ExportArgs) -> Result<(), CliError> {
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    if !(args.tmin.is_finite() && args.tmax.is_finite() && args.tmin < args.tmax) {
        return Err(usage(format!("need finite --tmin < --tmax, got {} and {}", args.tmin, args.tmax)));
    }
    let net = load_checkpoint(&args.checkpoint)?;
    let layer = net
        .layers()
        .get(args.layer)
        .ok_or_else(|| usage(format!("layer {} out of range (network has {})", args.layer, net.layers().len())))?;
    let Layer::WavKan(layer) = layer else {
        return Err(usage(format!("layer {} is not a wavelet layer", args.layer)));
    };
    if args.out_node >= layer.n_out() || args.in_node >= layer.n_in() {
        return Err(usage(format!(
            "edge ({}, {}) out of range for a {}→{} layer",
            args.out_node,
            args.in_node,
            layer.n_in(),
            layer.n_out()
        )));
    }

    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(sink, "t,value")?;
    let last = (args.points - 1) as f64;
    for k in 0..args.points {
        let kf = k as f64;
        let t = (args.tmin * (last - kf) + args.tmax * kf) / last;
        writeln!(sink, "{t},{}", layer.edge_value(args.out_node, args.in_node, t))?;
    }
    sink.flush()?;
    Ok(())
}
