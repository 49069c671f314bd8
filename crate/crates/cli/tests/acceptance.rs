//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The MNIST criteria read the four IDX files from `$WAVKAN_MNIST_DIR`,
//! falling back to `data/mnist` at the workspace root.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use tempfile::TempDir;
use wavkan::data::{load_mnist, make_synthetic, mnist_available, Dataset, Regime};
use wavkan::kan::{BatchNorm1d, Layer, ModelKind, Network, WavKanLayer};
use wavkan::training::{run_training, write_comparison_csv, Split, TrainConfig, TrainingOutcome, Trial};
use wavkan::wavelets::{check_criteria, haar_decompose, haar_reconstruct};
use wavkan::{Matrix, Rng, WaveletKind};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---- 1: gradients --------------------------------------------------------

const FD_STEP: f64 = 1e-6;
const FD_RTOL: f64 = 1e-4;
const FD_ATOL: f64 = 1e-7;

fn random(rng: &mut Rng, rows: usize, cols: usize, a: f64, b: f64) -> Matrix {
    Matrix::new(rows, cols, rng.uniform(a, b, rows * cols).unwrap()).unwrap()
}

fn probe(net: &mut Network, x: &Matrix, g: &Matrix) -> f64 {
    let y = net.forward(x).unwrap();
    y.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a * b).sum()
}

/// Worst `|fd − analytic| / (atol + rtol·|analytic|)` over all parameters
/// and inputs; at most 1 passes.
fn gradient_ratio(kind: WaveletKind, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let (batch, n_in, n_out) = (8, 5, 4);
    let w = random(&mut rng, n_out, n_in, -1.0, 1.0);
    let tau = random(&mut rng, n_out, n_in, -0.5, 0.5);
    let s = random(&mut rng, n_out, n_in, 0.6, 1.6);
    let mut bn = BatchNorm1d::new(n_in);
    bn.gamma = rng.uniform(0.5, 1.5, n_in).unwrap();
    bn.beta = rng.uniform(-0.3, 0.3, n_in).unwrap();
    let layer = WavKanLayer::from_parts(kind, w, tau, s, Some(bn)).unwrap();
    let mut net = Network::from_layers(vec![Layer::WavKan(layer)]).unwrap();
    let x = random(&mut rng, batch, n_in, -2.0, 2.0);
    let g = random(&mut rng, batch, n_out, -1.0, 1.0);

    net.forward(&x).unwrap();
    let dx = net.backward(&g).unwrap();
    let grads: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.to_vec()).collect();
    let score = |fd: f64, analytic: f64| (fd - analytic).abs() / (FD_ATOL + FD_RTOL * analytic.abs());

    let mut worst: f64 = 0.0;
    for (slot, analytic) in grads.iter().enumerate() {
        for (e, &a) in analytic.iter().enumerate() {
            let original = net.params()[slot].value[e];
            net.params()[slot].value[e] = original + FD_STEP;
            let up = probe(&mut net, &x, &g);
            net.params()[slot].value[e] = original - FD_STEP;
            let down = probe(&mut net, &x, &g);
            net.params()[slot].value[e] = original;
            worst = worst.max(score((up - down) / (2.0 * FD_STEP), a));
        }
    }
    for e in 0..x.len() {
        let mut p = x.clone();
        p.as_mut_slice()[e] += FD_STEP;
        let mut m = x.clone();
        m.as_mut_slice()[e] -= FD_STEP;
        let fd = (probe(&mut net, &p, &g) - probe(&mut net, &m, &g)) / (2.0 * FD_STEP);
        worst = worst.max(score(fd, dx.as_slice()[e]));
    }
    worst
}

fn ac1_gradients() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, kind) in WaveletKind::all_default().into_iter().enumerate() {
        let ratio = gradient_ratio(kind, 1000 + k as u64);
        pass &= ratio <= 1.0;
        parts.push(format!("{}={ratio:.3}", kind.family()));
    }
    verdict(pass, format!("worst error/tolerance {}", parts.join(" ")))
}

// ---- 2: wavelet criteria -------------------------------------------------

fn ac2_wavelet_criteria() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in WaveletKind::all_default() {
        let r = check_criteria(&kind, 12.0, 8192).unwrap();
        pass &= r.zero_mean_residual < 1e-4 && r.c_psi.is_finite() && r.c_psi > 0.0 && r.c_psi < 1e6;
        parts.push(format!("{}: residual={:.2e} c_psi={:.4}", kind.family(), r.zero_mean_residual, r.c_psi));
    }
    verdict(pass, parts.join(", "))
}

// ---- 3: Haar MRA ---------------------------------------------------------

fn ac3_haar() -> Verdict {
    let mut rng = Rng::new(3);
    let (mut worst_rt, mut worst_energy) = (0.0f64, 0.0f64);
    let mut deepening_ok = true;
    let mut n = 8;
    while n <= 1024 {
        for _ in 0..20 {
            let x = rng.uniform(-5.0, 5.0, n).unwrap();
            let levels = n.trailing_zeros() as usize;
            let c = haar_decompose(&x, levels).unwrap();
            let back = haar_reconstruct(&c).unwrap();
            let rt = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let e: f64 = x.iter().map(|v| v * v).sum();
            worst_rt = worst_rt.max(rt);
            worst_energy = worst_energy.max((c.energy() - e).abs() / e);

            let mut shallow = haar_decompose(&x, 1).unwrap();
            let level1 = shallow.details[0].clone();
            deepening_ok &= c.details[0] == level1;
            shallow.deepen(levels - 1).unwrap();
            deepening_ok &= shallow.details[0] == level1 && shallow == c;
        }
        n *= 2;
    }
    verdict(
        worst_rt < 1e-10 && worst_energy < 1e-10 && deepening_ok,
        format!(
            "lengths 8..1024: max roundtrip {worst_rt:.2e}, max energy rel {worst_energy:.2e}, level-1 details stable={deepening_ok}"
        ),
    )
}

// ---- 4: parameter accounting ---------------------------------------------

fn ac4_param_count() -> Verdict {
    let layout = [784, 32, 10];
    let kan = Network::wavkan(&layout, WaveletKind::mexican_hat(), true, &mut Rng::new(0)).unwrap();
    let mlp = Network::mlp(&layout, false, &mut Rng::new(0)).unwrap();
    let wavelet = kan.param_count().wavelet_params();
    let mlp_count = mlp.param_count().learnable;
    let expected = 3 * (784 * 32 + 32 * 10);
    verdict(
        wavelet == 76_224 && wavelet == expected && mlp_count == 25_450,
        format!("wavkan wavelet params {wavelet} (expected 76224), mlp {mlp_count} (expected 25450)"),
    )
}

// ---- 5 and 6: MNIST ------------------------------------------------------

fn mnist_dir() -> PathBuf {
    std::env::var_os("WAVKAN_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist_config(model: ModelKind) -> TrainConfig {
    TrainConfig {
        model,
        layout: vec![784, 32, 10],
        kind: WaveletKind::mexican_hat(),
        batchnorm: true,
        lr: 1e-3,
        weight_decay: 1e-4,
        batch_size: 128,
        epochs: 5,
        trials: 1,
        seed: 0,
        ..TrainConfig::default()
    }
}

fn final_test(outcome: &TrainingOutcome) -> f64 {
    outcome
        .rows
        .iter()
        .rev()
        .find(|r| r.trial == Trial::Mean && r.split == Split::Test)
        .map_or(f64::NAN, |r| r.accuracy)
}

struct MnistRuns {
    wavkan: Result<TrainingOutcome, String>,
    mlp: Result<TrainingOutcome, String>,
}

fn mnist_runs() -> Result<MnistRuns, String> {
    let dir = mnist_dir();
    if !mnist_available(&dir) {
        return Err(format!(
            "MNIST IDX files not found in {} (set WAVKAN_MNIST_DIR)",
            dir.display()
        ));
    }
    let data: Dataset = load_mnist(&dir).map_err(|e| e.to_string())?;
    if data.train.len() != 60_000 || data.test.len() != 10_000 {
        return Err(format!("expected 60000/10000 samples, found {}/{}", data.train.len(), data.test.len()));
    }
    let run = |m| run_training(&mnist_config(m), &data).map_err(|e| e.to_string());
    Ok(MnistRuns {
        wavkan: run(ModelKind::WavKan),
        mlp: run(ModelKind::Mlp),
    })
}

fn ac5_mnist_wavkan(runs: &Result<MnistRuns, String>) -> Verdict {
    match runs {
        Err(e) => verdict(false, e.clone()),
        Ok(r) => match &r.wavkan {
            Err(e) => verdict(false, e.clone()),
            Ok(o) => {
                let acc = final_test(o);
                verdict(acc >= 0.95, format!("wavkan test accuracy after 5 epochs {acc:.4} (need >= 0.95)"))
            }
        },
    }
}

fn ac6_mnist_mlp(runs: &Result<MnistRuns, String>) -> Verdict {
    let (kan, mlp) = match runs {
        Err(e) => return verdict(false, e.clone()),
        Ok(MnistRuns { wavkan: Ok(k), mlp: Ok(m) }) => (k, m),
        Ok(MnistRuns { wavkan, mlp }) => {
            let e = wavkan.as_ref().err().or(mlp.as_ref().err()).cloned().unwrap_or_default();
            return verdict(false, e);
        }
    };
    let acc = final_test(mlp);
    let mut csv = Vec::new();
    write_comparison_csv(&mut csv, "wavkan", &kan.rows, "mlp", &mlp.rows).unwrap();
    let csv_rows = String::from_utf8(csv).unwrap().lines().count().saturating_sub(1);
    verdict(
        acc >= 0.90 && csv_rows == 10,
        format!("mlp test accuracy after 5 epochs {acc:.4} (need >= 0.90), comparison rows {csv_rows}"),
    )
}

// ---- 7: determinism ------------------------------------------------------

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wavkan")).args(args).output().unwrap()
}

fn ac7_determinism() -> Verdict {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    let mut csvs = Vec::new();
    for dir in &dirs {
        let out = cli(&[
            "train", "--dataset", "rings", "--samples", "200", "--layout", "4,6,2", "--epochs", "3", "--trials",
            "2", "--batch-size", "32", "--seed", "17", "--out", dir.path().to_str().unwrap(),
        ]);
        if !out.status.success() {
            return verdict(false, format!("train exited with {:?}", out.status.code()));
        }
        let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let without_seconds: Vec<String> = text
            .lines()
            .map(|l| if l.starts_with('#') { l.to_string() } else { l.rsplit_once(',').unwrap().0.to_string() })
            .collect();
        csvs.push(without_seconds);
    }
    let same = csvs[0] == csvs[1];
    verdict(same, format!("two runs, {} CSV lines each, identical without seconds={same}", csvs[0].len()))
}

// ---- 8: overfit sanity ---------------------------------------------------

fn ac8_overfit() -> Verdict {
    let train = make_synthetic(Regime::TwoBlobs, 16, 0).unwrap();
    let test = make_synthetic(Regime::TwoBlobs, 16, 1).unwrap();
    let data = Dataset::new(train, test).unwrap();
    let cfg = TrainConfig {
        layout: vec![4, 8, 2],
        epochs: 200,
        trials: 1,
        seed: 0,
        ..TrainConfig::default()
    };
    let out = run_training(&cfg, &data).unwrap();
    let acc = out
        .rows
        .iter()
        .rev()
        .find(|r| r.trial == Trial::Index(0) && r.split == Split::Train)
        .map_or(f64::NAN, |r| r.accuracy);
    verdict(acc == 1.0, format!("train accuracy after 200 epochs {acc}"))
}

// ---- 9: full protocol expressible -----------------------------------------

fn ac9_protocol() -> Verdict {
    let mut failures = Vec::new();
    let configs: [&[&str]; 5] = [
        &["--model", "wavkan", "--wavelet", "mexican_hat"],
        &["--model", "wavkan", "--wavelet", "morlet"],
        &["--model", "wavkan", "--wavelet", "dog"],
        &["--model", "wavkan", "--wavelet", "shannon"],
        &["--model", "mlp"],
    ];
    for extra in configs {
        let mut args = vec!["train"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&[
            "--layout", "784,32,10", "--epochs", "50", "--trials", "5", "--lr", "0.001", "--weight-decay", "1e-4",
            "--batch-size", "128", "--dry-run",
        ]);
        let out = cli(&args);
        let text = String::from_utf8_lossy(&out.stdout);
        let ok = out.status.success()
            && ["layout=784,32,10", "epochs=50 ", "trials=5 ", "lr=0.001 ", "weight_decay=0.0001 ", "batch_size=128 "]
                .iter()
                .all(|k| text.contains(k));
        if !ok {
            failures.push(extra.join(" "));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "5 configurations (4 wavelets + mlp) x 50 epochs x 5 trials each resolve from one invocation".to_string()
        } else {
            format!("rejected: {}", failures.join("; "))
        },
    )
}

fn main() -> ExitCode {
    // `cargo test -- --list` must report no harness tests.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Option<u64>); 9] = [
        ("gradient suite", Some(10)),
        ("wavelet criteria", Some(5)),
        ("haar multiresolution", Some(5)),
        ("parameter accounting", None),
        ("mnist wavkan >= 0.95", None),
        ("mnist mlp >= 0.90", None),
        ("determinism", None),
        ("overfit sanity", Some(5)),
        ("full protocol via cli", None),
    ];

    let mut mnist: Option<Result<MnistRuns, String>> = None;
    let mut failed = 0;
    for (k, (name, limit)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let v = match k {
            0 => ac1_gradients(),
            1 => ac2_wavelet_criteria(),
            2 => ac3_haar(),
            3 => ac4_param_count(),
            4 => ac5_mnist_wavkan(mnist.get_or_insert_with(mnist_runs)),
            5 => ac6_mnist_mlp(mnist.get_or_insert_with(mnist_runs)),
            6 => ac7_determinism(),
            7 => ac8_overfit(),
            _ => ac9_protocol(),
        };
        let elapsed = started.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= Duration::from_secs(l));
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(", limit {l} s"));
        println!(
            "AC{} {} {name}: {} [{:.2} s{budget}]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
