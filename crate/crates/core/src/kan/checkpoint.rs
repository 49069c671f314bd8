//! Plain-text checkpoint format, version `WAVKAN1`.
//!
//! ```text
//! WAVKAN1
//! layout 784,32,10
//! layers 2
//! layer wavkan <n_in> <n_out> <family> <omega0> <sigma> <shannon_halfwidth> <bn|nobn>
//! w <n_out*n_in values, row-major>
//! tau <...>
//! s <...>
//! bn_gamma <n_in values>          (only with bn)
//! bn_beta <...>
//! bn_running_mean <...>
//! bn_running_var <...>
//! layer mlp <n_in> <n_out> <relu|sigmoid|identity> <bn|nobn>
//! weight <n_out*n_in values>
//! bias <n_out values>
//! bn_... as above
//! end
//! ```
//!
//! Values are space separated and written in Rust's shortest round-trip
//! decimal form, so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BatchNorm1d, Layer, Network, WavKanLayer};
use crate::error::{Error, Result};
use crate::mlp::{Activation, MlpLayer};
use crate::numerics::Matrix;
use crate::wavelets::{WaveletFamily, WaveletKind};

pub const CHECKPOINT_MAGIC: &str = "WAVKAN1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn write_values(out: &mut impl Write, name: &str, values: &[f64]) -> Result<()> {
    write!(out, "{name}")?;
    for v in values {
        write!(out, " {v:?}")?;
    }
    writeln!(out)?;
    Ok(())
}

fn write_bn(out: &mut impl Write, bn: &BatchNorm1d) -> Result<()> {
    write_values(out, "bn_gamma", &bn.gamma)?;
    write_values(out, "bn_beta", &bn.beta)?;
    write_values(out, "bn_running_mean", &bn.running_mean)?;
    write_values(out, "bn_running_var", &bn.running_var)
}

fn bn_flag(bn: &Option<BatchNorm1d>) -> &'static str {
    if bn.is_some() {
        "bn"
    } else {
        "nobn"
    }
}

pub fn write_checkpoint(net: &Network, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    let layout: Vec<String> = net.layout().iter().map(usize::to_string).collect();
    writeln!(out, "layout {}", layout.join(","))?;
    writeln!(out, "layers {}", net.layers().len())?;
    for layer in net.layers() {
        match layer {
            Layer::WavKan(l) => {
                let k = l.kind();
                writeln!(
                    out,
                    "layer wavkan {} {} {} {:?} {:?} {:?} {}",
                    l.n_in(),
                    l.n_out(),
                    k.family(),
                    k.omega0(),
                    k.sigma(),
                    k.shannon_halfwidth(),
                    bn_flag(&l.bn)
                )?;
                write_values(out, "w", l.w.as_slice())?;
                write_values(out, "tau", l.tau.as_slice())?;
                write_values(out, "s", l.s.as_slice())?;
                if let Some(bn) = &l.bn {
                    write_bn(out, bn)?;
                }
            }
            Layer::Mlp(l) => {
                writeln!(
                    out,
                    "layer mlp {} {} {} {}",
                    l.n_in(),
                    l.n_out(),
                    l.activation,
                    bn_flag(&l.bn)
                )?;
                write_values(out, "weight", l.weight.as_slice())?;
                write_values(out, "bias", &l.bias)?;
                if let Some(bn) = &l.bn {
                    write_bn(out, bn)?;
                }
            }
        }
    }
    writeln!(out, "end")?;
    Ok(())
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_checkpoint(net, &mut out)?;
    out.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => format_err(format!("unexpected end of checkpoint at line {}", self.number)),
        }
    }

    fn values(&mut self, name: &str, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let mut tokens = line.split_ascii_whitespace();
        if tokens.next() != Some(name) {
            return format_err(format!("line {}: expected '{name}' values", self.number));
        }
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number '{t}'", self.number)))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return format_err(format!(
                "line {}: '{name}' has {} values, expected {expected}",
                self.number,
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return format_err(format!("line {}: '{name}' contains non-finite values", self.number));
        }
        Ok(values)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        Matrix::new(rows, cols, self.values(name, rows * cols)?)
    }

    fn batchnorm(&mut self, flag: &str, features: usize) -> Result<Option<BatchNorm1d>> {
        match flag {
            "nobn" => Ok(None),
            "bn" => {
                let mut bn = BatchNorm1d::new(features);
                bn.gamma = self.values("bn_gamma", features)?;
                bn.beta = self.values("bn_beta", features)?;
                bn.running_mean = self.values("bn_running_mean", features)?;
                bn.running_var = self.values("bn_running_var", features)?;
                if bn.running_var.iter().any(|&v| v < 0.0) {
                    return format_err("negative running variance");
                }
                Ok(Some(bn))
            }
            other => format_err(format!("line {}: unknown batch-norm flag '{other}'", self.number)),
        }
    }
}

fn parse_field<T: std::str::FromStr>(token: Option<&str>, what: &str, line: usize) -> Result<T> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format(format!("line {line}: missing or invalid {what}")))
}

pub fn read_checkpoint(input: impl BufRead) -> Result<Network> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    if lines.next_line()?.trim() != CHECKPOINT_MAGIC {
        return format_err(format!("missing {CHECKPOINT_MAGIC} header"));
    }
    let layout_line = lines.next_line()?;
    let layout: Vec<usize> = layout_line
        .strip_prefix("layout ")
        .ok_or_else(|| Error::Format("expected layout line".into()))?
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("bad layout '{layout_line}'")))?;
    let count_line = lines.next_line()?;
    let count: usize = parse_field(count_line.strip_prefix("layers "), "layer count", lines.number)?;

    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let header = lines.next_line()?;
        let n = lines.number;
        let mut t = header.split_ascii_whitespace();
        if t.next() != Some("layer") {
            return format_err(format!("line {n}: expected a layer header"));
        }
        let tag = t.next();
        let n_in: usize = parse_field(t.next(), "n_in", n)?;
        let n_out: usize = parse_field(t.next(), "n_out", n)?;
        let layer = match tag {
            Some("wavkan") => {
                let family: WaveletFamily = parse_field(t.next(), "wavelet family", n)?;
                let omega0: f64 = parse_field(t.next(), "omega0", n)?;
                let sigma: f64 = parse_field(t.next(), "sigma", n)?;
                let halfwidth: f64 = parse_field(t.next(), "shannon half-width", n)?;
                let flag = t.next().unwrap_or("");
                let kind = WaveletKind::new(family, omega0, sigma, halfwidth)?;
                let w = lines.matrix("w", n_out, n_in)?;
                let tau = lines.matrix("tau", n_out, n_in)?;
                let s = lines.matrix("s", n_out, n_in)?;
                let bn = lines.batchnorm(flag, n_in)?;
                Layer::WavKan(WavKanLayer::from_parts(kind, w, tau, s, bn)?)
            }
            Some("mlp") => {
                let activation: Activation = parse_field(t.next(), "activation", n)?;
                let flag = t.next().unwrap_or("");
                let weight = lines.matrix("weight", n_out, n_in)?;
                let bias = lines.values("bias", n_out)?;
                let bn = lines.batchnorm(flag, n_in)?;
                Layer::Mlp(MlpLayer::from_parts(weight, bias, activation, bn)?)
            }
            other => return format_err(format!("line {n}: unknown layer type {other:?}")),
        };
        layers.push(layer);
    }
    if lines.next_line()?.trim() != "end" {
        return format_err("missing end marker");
    }
    let net = Network::from_layers(layers)?;
    if net.layout() != layout.as_slice() {
        return format_err(format!(
            "declared layout {layout:?} does not match layers {:?}",
            net.layout()
        ));
    }
    Ok(net)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
