//! Versioned text checkpoints.
//!
//! ```text
//! causalwalk-ckpt v1
//! config <key> <value>          (one line per model setting)
//! meta <key> <value>            (training mode and seed)
//! param <name> <rows> <cols>
//! <row-major values>
//! dict <classes> <k> <d>
//! <row-major values>
//! end
//! ```
//!
//! Values are written with 17 significant digits, so a save/load round
//! trip restores every `f64` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use causalwalk_core::walk::{ConfounderDictionary, ModelConfig, ModelParams, Objective};
use causalwalk_core::{Normalization, Tensor};

use crate::error::{io_err, CliError, Result};

pub const HEADER: &str = "causalwalk-ckpt v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub dictionary: ConfounderDictionary,
    pub objective: Objective,
    pub seed: u64,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_values(out: &mut String, values: &[f64]) {
    let line: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::Symmetric => "symmetric",
        Normalization::Row => "row",
        Normalization::None => "none",
    }
}

pub fn parse_normalization(s: &str) -> Option<Normalization> {
    match s {
        "symmetric" => Some(Normalization::Symmetric),
        "row" => Some(Normalization::Row),
        "none" => Some(Normalization::None),
        _ => None,
    }
}

pub fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::Full => "causal",
        Objective::WalkOnly => "walk-only",
    }
}

pub fn parse_objective(s: &str) -> Option<Objective> {
    match s {
        "causal" => Some(Objective::Full),
        "walk-only" => Some(Objective::WalkOnly),
        _ => None,
    }
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        let orders: Vec<String> = c.featurizer.ngram_orders.iter().map(|o| o.to_string()).collect();
        let settings: [(&str, String); 15] = [
            ("featurizer.dim", c.featurizer.dim.to_string()),
            ("featurizer.ngram_orders", orders.join(",")),
            ("featurizer.hash_seed", c.featurizer.hash_seed.to_string()),
            ("featurizer.lowercase", c.featurizer.lowercase.to_string()),
            ("gconv.layers", c.gconv.layers.to_string()),
            ("gconv.hidden_dim", c.gconv.hidden_dim.to_string()),
            ("gconv.self_loops", c.gconv.self_loops.to_string()),
            ("gconv.normalization", normalization_name(c.gconv.normalization).into()),
            ("gconv.root_weight", c.gconv.root_weight.to_string()),
            ("mlp_hidden", c.mlp_hidden.to_string()),
            ("classes", c.classes.to_string()),
            ("beam_width", c.beam_width.to_string()),
            ("max_hops", c.max_hops.to_string()),
            ("alpha", fmt_f64(c.alpha)),
            ("dict_k", c.dict_k.to_string()),
        ];
        for (k, v) in settings {
            let _ = writeln!(out, "config {k} {v}");
        }
        let _ = writeln!(out, "meta objective {}", objective_name(self.objective));
        let _ = writeln!(out, "meta seed {}", self.seed);
        for (name, t) in self.params.names.iter().zip(&self.params.tensors) {
            let _ = writeln!(out, "param {name} {} {}", t.rows(), t.cols());
            write_values(&mut out, t.data());
        }
        let d = self.dictionary.to_tensor();
        let s = d.shape();
        let _ = writeln!(out, "dict {} {} {}", s[0], s[1], s[2]);
        write_values(&mut out, d.data());
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|(line, message)| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses checkpoint text; errors carry a 1-based line number.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            Some((n, l)) => return Err((n, format!("expected header {HEADER:?}, found {l:?}"))),
            None => return Err((1, "empty checkpoint".into())),
        }
        let mut config = ModelConfig::default();
        let mut objective = Objective::Full;
        let mut seed = 0;
        let mut blocks: Vec<(String, Tensor)> = Vec::new();
        let mut dictionary = None;
        let mut ended = false;

        while let Some((n, line)) = lines.next() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |m: &str| (n, format!("{m}: {line:?}"));
            match fields.as_slice() {
                [] => continue,
                ["config", key, value] => set_config(&mut config, key, value).map_err(|m| bad(&m))?,
                ["meta", "objective", v] => {
                    objective = parse_objective(v).ok_or_else(|| bad("unknown objective"))?
                }
                ["meta", "seed", v] => seed = v.parse().map_err(|_| bad("bad seed"))?,
                ["param", name, rows, cols] => {
                    let shape = [parse_usize(rows).map_err(|m| bad(&m))?, parse_usize(cols).map_err(|m| bad(&m))?];
                    let (vn, values) = lines.next().ok_or((n + 1, "missing values".to_string()))?;
                    let data = parse_values(values, shape[0] * shape[1]).map_err(|m| (vn, m))?;
                    let t = Tensor::new(&shape, data).map_err(|e| (vn, e.to_string()))?;
                    blocks.push((name.to_string(), t));
                }
                ["dict", a, b, c] => {
                    let shape = [
                        parse_usize(a).map_err(|m| bad(&m))?,
                        parse_usize(b).map_err(|m| bad(&m))?,
                        parse_usize(c).map_err(|m| bad(&m))?,
                    ];
                    let (vn, values) = lines.next().ok_or((n + 1, "missing values".to_string()))?;
                    let data = parse_values(values, shape.iter().product()).map_err(|m| (vn, m))?;
                    let t = Tensor::new(&shape, data).map_err(|e| (vn, e.to_string()))?;
                    dictionary = Some(ConfounderDictionary::from_tensor(&t).map_err(|e| (vn, e.to_string()))?);
                }
                ["end"] => {
                    ended = true;
                    break;
                }
                _ => return Err(bad("unrecognized line")),
            }
        }
        let last = text.lines().count();
        if !ended {
            return Err((last, "missing end marker".into()));
        }
        config.validate().map_err(|e| (last, e.to_string()))?;
        let params = ModelParams::from_named(&config, &blocks).map_err(|e| (last, e.to_string()))?;
        let dictionary = dictionary.ok_or((last, "missing dictionary".to_string()))?;
        if dictionary.classes() != config.classes || dictionary.dim() != config.hidden() {
            return Err((last, "dictionary does not match the model configuration".into()));
        }
        Ok(Self {
            config,
            params,
            dictionary,
            objective,
            seed,
        })
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("expected an integer, found {s:?}"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    s.parse().map_err(|_| format!("expected true or false, found {s:?}"))
}

fn parse_values(line: &str, expected: usize) -> std::result::Result<Vec<f64>, String> {
    let values = line
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| format!("bad number {v:?}")))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if values.len() != expected {
        return Err(format!("expected {expected} values, found {}", values.len()));
    }
    Ok(values)
}

fn set_config(c: &mut ModelConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "featurizer.dim" => c.featurizer.dim = parse_usize(value)?,
        "featurizer.ngram_orders" => {
            c.featurizer.ngram_orders = value.split(',').map(parse_usize).collect::<std::result::Result<_, _>>()?
        }
        "featurizer.hash_seed" => c.featurizer.hash_seed = value.parse().map_err(|_| format!("bad hash seed {value:?}"))?,
        "featurizer.lowercase" => c.featurizer.lowercase = parse_bool(value)?,
        "gconv.layers" => c.gconv.layers = parse_usize(value)?,
        "gconv.hidden_dim" => c.gconv.hidden_dim = parse_usize(value)?,
        "gconv.self_loops" => c.gconv.self_loops = parse_bool(value)?,
        "gconv.normalization" => {
            c.gconv.normalization = parse_normalization(value).ok_or_else(|| format!("unknown normalization {value:?}"))?
        }
        "gconv.root_weight" => c.gconv.root_weight = parse_bool(value)?,
        "mlp_hidden" => c.mlp_hidden = parse_usize(value)?,
        "classes" => c.classes = parse_usize(value)?,
        "beam_width" => c.beam_width = parse_usize(value)?,
        "max_hops" => c.max_hops = parse_usize(value)?,
        "alpha" => c.alpha = value.parse().map_err(|_| format!("bad alpha {value:?}"))?,
        "dict_k" => c.dict_k = parse_usize(value)?,
        _ => return Err(format!("unknown config key {key:?}")),
    }
    Ok(())
}
