//! Plain-text checkpoint format:
//!
//! ```text
//! antithetic-model 1
//! input <h> <w>
//! hidden <width>...
//! identities <k>
//! layer <outputs> <inputs>      (once per hidden layer, then once for the head)
//! <one weight row per line>
//! bias <values>
//! centers <k> <dim>
//! <one center per line>
//! end
//! ```
//!
//! Floats are written with 17 significant digits, so a round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::model::{Dense, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::CenterBank;

const MAGIC: &str = "antithetic-model";
const VERSION: u32 = 1;

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:.16e}").expect("string write");
    }
    out.push('\n');
}

fn push_dense(out: &mut String, layer: &Dense) {
    writeln!(out, "layer {} {}", layer.outputs(), layer.inputs()).expect("string write");
    for r in 0..layer.outputs() {
        push_row(out, layer.weights.row(r));
    }
    out.push_str("bias ");
    push_row(out, &layer.bias);
}

pub fn encode_model(model: &Model) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").expect("string write");
    writeln!(out, "input {} {}", model.input_h, model.input_w).expect("string write");
    let widths: Vec<String> = model.hidden_widths().iter().map(usize::to_string).collect();
    writeln!(out, "hidden {}", widths.join(" ")).expect("string write");
    writeln!(out, "identities {}", model.num_identities()).expect("string write");
    for layer in &model.hidden {
        push_dense(&mut out, layer);
    }
    push_dense(&mut out, &model.head);
    writeln!(out, "centers {} {}", model.centers.len(), model.centers.dim()).expect("string write");
    for r in 0..model.centers.len() {
        push_row(&mut out, model.centers.centers.row(r));
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(Error::Checkpoint(format!("truncated after line {}", self.line))),
        }
    }

    fn fail(&self, reason: impl std::fmt::Display) -> Error {
        Error::Checkpoint(format!("line {}: {reason}", self.line))
    }

    /// Reads a line that starts with `key` and returns the remaining fields.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut fields = line.split_ascii_whitespace();
        if fields.next() != Some(key) {
            return Err(self.fail(format!("expected `{key}`")));
        }
        Ok(fields.collect())
    }

    fn usizes(&self, fields: &[&str], n: usize) -> Result<Vec<usize>> {
        if fields.len() != n {
            return Err(self.fail(format!("expected {n} integers, found {}", fields.len())));
        }
        fields.iter().map(|f| f.parse().map_err(|_| self.fail(format!("bad integer `{f}`")))).collect()
    }

    fn floats(&self, fields: &[&str], n: usize) -> Result<Vec<f64>> {
        if fields.len() != n {
            return Err(self.fail(format!("expected {n} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.fail(format!("bad value `{f}`"))),
            })
            .collect()
    }

    fn float_line(&mut self, n: usize) -> Result<Vec<f64>> {
        let fields: Vec<&str> = self.next()?.split_ascii_whitespace().collect();
        self.floats(&fields, n)
    }

    fn dense(&mut self, outputs: usize, inputs: usize) -> Result<Dense> {
        let dims = self.keyed("layer")?;
        if self.usizes(&dims, 2)? != [outputs, inputs] {
            return Err(self.fail(format!("layer is not {outputs}x{inputs}")));
        }
        let mut w = Vec::with_capacity(outputs * inputs);
        for _ in 0..outputs {
            w.extend(self.float_line(inputs)?);
        }
        let fields = self.keyed("bias")?;
        let bias = self.floats(&fields, outputs)?;
        Ok(Dense { weights: Grid::from_vec(outputs, inputs, w)?, bias })
    }
}

pub fn decode_model(text: &str) -> Result<Model> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let header = lines.keyed(MAGIC)?;
    if header != [VERSION.to_string().as_str()] {
        return Err(lines.fail(format!("unsupported version {header:?}, expected {VERSION}")));
    }
    let input = lines.keyed("input")?;
    let input = lines.usizes(&input, 2)?;
    let widths = lines.keyed("hidden")?;
    let widths = lines.usizes(&widths, widths.len())?;
    let k = lines.keyed("identities")?;
    let k = lines.usizes(&k, 1)?[0];
    let cfg =
        ModelConfig { input_h: input[0], input_w: input[1], hidden: widths, num_identities: k, seed: 0 };
    cfg.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;

    let mut hidden = Vec::with_capacity(cfg.hidden.len());
    let mut fan_in = cfg.input_dim();
    for &w in &cfg.hidden {
        hidden.push(lines.dense(w, fan_in)?);
        fan_in = w;
    }
    let head = lines.dense(k, fan_in)?;
    let dims = lines.keyed("centers")?;
    if lines.usizes(&dims, 2)? != [k, fan_in] {
        return Err(lines.fail(format!("centers are not {k}x{fan_in}")));
    }
    let mut centers = Vec::with_capacity(k * fan_in);
    for _ in 0..k {
        centers.extend(lines.float_line(fan_in)?);
    }
    lines.keyed("end")?;
    Ok(Model {
        input_h: cfg.input_h,
        input_w: cfg.input_w,
        hidden,
        head,
        centers: CenterBank::new(Grid::from_vec(k, fan_in, centers)?),
    })
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_model(&text).map_err(|e| match e {
        Error::Checkpoint(reason) => Error::Decode { path: path.to_path_buf(), reason },
        other => other,
    })
}

/// Loads a checkpoint and rejects it unless its shapes match `cfg`.
pub fn load_model_for(path: &Path, cfg: &ModelConfig) -> Result<Model> {
    let model = load_model(path)?;
    if !model.matches(cfg) {
        return Err(Error::Shape(format!(
            "{} holds a {}x{} -> {:?} -> {} model, expected {}x{} -> {:?} -> {}",
            path.display(),
            model.input_h,
            model.input_w,
            model.hidden_widths(),
            model.num_identities(),
            cfg.input_h,
            cfg.input_w,
            cfg.hidden,
            cfg.num_identities
        )));
    }
    Ok(model)
}
