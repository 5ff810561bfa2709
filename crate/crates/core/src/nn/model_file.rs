//! Text model file.
//!
//! ```text
//! format cdf2pdf-network
//! version 1
//! widths 3 12 12 1
//! hidden_activations silu silu
//! output_activation sigmoid
//! init glorot_uniform 1.0000000000000000e0 7
//! training_seed 7
//! layer 0
//! weights <out*in values, row-major>
//! bias <out values>
//! slope <value>            (parametric activations only)
//! layer 1
//! ...
//! ```
//!
//! Reals are written with 17 significant digits so a write/read cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::activation::Activation;
use super::network::{InitScheme, InitSpec, Layer, Network, NetworkSpec};
use crate::{Error, Result};

pub const FORMAT_NAME: &str = "cdf2pdf-network";
pub const FORMAT_VERSION: u32 = 1;

/// Decimal rendering with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_reals(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(" ")
}

pub fn to_model_string(net: &Network, training_seed: u64) -> String {
    let spec = net.spec();
    let mut s = String::new();
    let _ = writeln!(s, "format {FORMAT_NAME}");
    let _ = writeln!(s, "version {FORMAT_VERSION}");
    let widths: Vec<String> = spec.layer_widths.iter().map(usize::to_string).collect();
    let _ = writeln!(s, "widths {}", widths.join(" "));
    let acts: Vec<&str> = spec.hidden_activations.iter().map(|a| a.name()).collect();
    let _ = writeln!(s, "hidden_activations {}", acts.join(" "));
    let _ = writeln!(s, "output_activation {}", spec.output_activation);
    let _ = writeln!(
        s,
        "init {} {} {}",
        spec.init.scheme.name(),
        fmt_real(spec.init.kappa),
        spec.init.seed
    );
    let _ = writeln!(s, "training_seed {training_seed}");
    for (l, layer) in net.layers().iter().enumerate() {
        let _ = writeln!(s, "layer {l}");
        let _ = writeln!(s, "weights {}", join_reals(&layer.weights));
        let _ = writeln!(s, "bias {}", join_reals(&layer.bias));
        if let Some(a) = layer.slope {
            let _ = writeln!(s, "slope {}", fmt_real(a));
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: u64,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-blank, non-comment line as `(keyword, rest)`.
    fn next_entry(&mut self) -> Option<(&'a str, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.line = i as u64 + 1;
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            return Some((key, rest.trim()));
        }
        None
    }

    fn expect(&mut self, key: &str) -> Result<&'a str> {
        match self.next_entry() {
            Some((k, rest)) if k == key => Ok(rest),
            Some((k, _)) => Err(self.err(format!("expected `{key}`, found `{k}`"))),
            None => Err(self.err(format!("unexpected end of file, expected `{key}`"))),
        }
    }

    fn reals(&self, rest: &str) -> Result<Vec<f64>> {
        rest.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("invalid number `{t}`")))
            })
            .collect()
    }

    fn expect_reals(&mut self, key: &str) -> Result<Vec<f64>> {
        let rest = self.expect(key)?;
        self.reals(rest)
    }

    fn expect_ints<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let rest = self.expect(key)?;
        self.ints(rest)
    }

    fn ints<T: std::str::FromStr>(&self, rest: &str) -> Result<Vec<T>> {
        rest.split_whitespace()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| self.err(format!("invalid integer `{t}`")))
            })
            .collect()
    }
}

/// Parse a model document into the network and its training seed.
pub fn parse_model(text: &str) -> Result<(Network, u64)> {
    let mut lines = Lines::new(text);
    let format = lines.expect("format")?;
    if format != FORMAT_NAME {
        return Err(Error::Schema(format!("not a {FORMAT_NAME} document: `{format}`")));
    }
    let version: u32 = lines.expect_ints("version")?.first().copied().unwrap_or(0);
    if version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported model version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let layer_widths: Vec<usize> = lines.expect_ints("widths")?;
    let hidden = lines.expect("hidden_activations")?;
    let hidden_activations = hidden
        .split_whitespace()
        .map(str::parse::<Activation>)
        .collect::<Result<Vec<_>>>()?;
    let output_activation: Activation = lines.expect("output_activation")?.parse()?;
    let init_rest = lines.expect("init")?;
    let parts: Vec<&str> = init_rest.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(lines.err("`init` takes scheme, kappa and seed"));
    }
    let init = InitSpec {
        scheme: InitScheme::parse(parts[0]).map_err(|_| lines.err("unknown init scheme"))?,
        kappa: lines.reals(parts[1])?[0],
        seed: lines.ints::<u64>(parts[2])?[0],
    };
    let training_seed = lines
        .expect_ints::<u64>("training_seed")?
        .first()
        .copied()
        .ok_or_else(|| lines.err("missing training seed"))?;

    let spec = NetworkSpec {
        layer_widths,
        hidden_activations,
        output_activation,
        init,
    };
    spec.validate()?;

    let mut layers = Vec::new();
    for l in 0..spec.layer_widths.len() - 1 {
        let idx: Vec<usize> = lines.expect_ints("layer")?;
        if idx != [l] {
            return Err(lines.err(format!("expected layer {l}")));
        }
        let weights = lines.expect_reals("weights")?;
        let (i, o) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
        if weights.len() != i * o {
            return Err(lines.err(format!("layer {l}: expected {} weights, found {}", i * o, weights.len())));
        }
        let bias = lines.expect_reals("bias")?;
        if bias.len() != o {
            return Err(lines.err(format!("layer {l}: expected {o} biases, found {}", bias.len())));
        }
        let activation = spec.activation(l);
        let slope = if activation.is_parametric() {
            Some(lines.expect_reals("slope")?.first().copied().ok_or_else(|| lines.err("missing slope"))?)
        } else {
            None
        };
        layers.push(Layer {
            in_dim: i,
            out_dim: o,
            weights,
            bias,
            activation,
            slope,
        });
    }
    if let Some((k, _)) = lines.next_entry() {
        return Err(lines.err(format!("unexpected trailing `{k}`")));
    }
    Ok((Network::from_parts(spec, layers)?, training_seed))
}

pub fn save_model(path: &Path, net: &Network, training_seed: u64) -> Result<()> {
    std::fs::write(path, to_model_string(net, training_seed))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Network, u64)> {
    parse_model(&std::fs::read_to_string(path)?)
}
