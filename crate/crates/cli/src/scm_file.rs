//! Plain-text SCM description.
//!
//! ```text
//! # comments and blank lines are ignored
//! cardinalities <|U|> <|G|> <|R|> <|L|>
//! p_u <|U| probabilities>
//! p_g_given_u <u> : <|G| probabilities>      (one line per u)
//! p_r_given_g <g> : <|R| probabilities>      (one line per g)
//! p_l_given_ru <r> <u> : <|L| probabilities> (one line per r, u)
//! ```

use std::fs;
use std::path::Path;

use causalwalk_core::scm::{DiscreteScm, MAX_CARDINALITY};

use crate::error::{io_err, CliError, Result};

pub fn to_text(scm: &DiscreteScm) -> String {
    let c = scm.card;
    let row = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
    let mut out = format!("cardinalities {} {} {} {}\n", c.u, c.g, c.r, c.l);
    out.push_str(&format!("p_u {}\n", row(&scm.p_u)));
    for (u, r) in scm.p_g_given_u.iter().enumerate() {
        out.push_str(&format!("p_g_given_u {u} : {}\n", row(r)));
    }
    for (g, r) in scm.p_r_given_g.iter().enumerate() {
        out.push_str(&format!("p_r_given_g {g} : {}\n", row(r)));
    }
    for (r, per_u) in scm.p_l_given_ru.iter().enumerate() {
        for (u, dist) in per_u.iter().enumerate() {
            out.push_str(&format!("p_l_given_ru {r} {u} : {}\n", row(dist)));
        }
    }
    out
}

type LineResult<T> = std::result::Result<T, (usize, String)>;

fn numbers(n: usize, s: &str) -> LineResult<Vec<f64>> {
    s.split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| (n, format!("bad probability {v:?}"))))
        .collect()
}

fn index(n: usize, s: &str, limit: usize) -> LineResult<usize> {
    match s.parse::<usize>() {
        Ok(i) if i < limit => Ok(i),
        _ => Err((n, format!("index {s:?} outside 0..{limit}"))),
    }
}

pub fn parse(text: &str) -> LineResult<DiscreteScm> {
    let mut card: Option<[usize; 4]> = None;
    let mut p_u = None;
    let mut p_g: Vec<Option<Vec<f64>>> = Vec::new();
    let mut p_r: Vec<Option<Vec<f64>>> = Vec::new();
    let mut p_l: Vec<Vec<Option<Vec<f64>>>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = match line.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t)),
            None => (line, None),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        match (words.as_slice(), tail) {
            (["cardinalities", a, b, c, d], None) => {
                let mut v = [0; 4];
                for (slot, s) in v.iter_mut().zip([a, b, c, d]) {
                    *slot = index(n, s, MAX_CARDINALITY + 1)?;
                    if *slot < 2 {
                        return Err((n, format!("cardinality {s} must be in 2..={MAX_CARDINALITY}")));
                    }
                }
                p_g = vec![None; v[0]];
                p_r = vec![None; v[1]];
                p_l = vec![vec![None; v[0]]; v[2]];
                card = Some(v);
            }
            (["p_u", rest @ ..], None) => {
                card.ok_or((n, "cardinalities must come first".to_string()))?;
                p_u = Some(numbers(n, &rest.join(" "))?);
            }
            (["p_g_given_u", u], Some(t)) => {
                let c = card.ok_or((n, "cardinalities must come first".to_string()))?;
                p_g[index(n, u, c[0])?] = Some(numbers(n, t)?);
            }
            (["p_r_given_g", g], Some(t)) => {
                let c = card.ok_or((n, "cardinalities must come first".to_string()))?;
                p_r[index(n, g, c[1])?] = Some(numbers(n, t)?);
            }
            (["p_l_given_ru", r, u], Some(t)) => {
                let c = card.ok_or((n, "cardinalities must come first".to_string()))?;
                p_l[index(n, r, c[2])?][index(n, u, c[0])?] = Some(numbers(n, t)?);
            }
            _ => return Err((n, format!("unrecognized line {raw:?}"))),
        }
    }
    let last = text.lines().count().max(1);
    let missing = |what: &str| (last, format!("missing {what}"));
    let declared = card.ok_or_else(|| missing("cardinalities"))?;
    let p_u = p_u.ok_or_else(|| missing("p_u"))?;
    let p_g = p_g.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| missing("p_g_given_u rows"))?;
    let p_r = p_r.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| missing("p_r_given_g rows"))?;
    let p_l = p_l
        .into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| missing("p_l_given_ru rows"))?;
    let scm = DiscreteScm::new(p_u, p_g, p_r, p_l).map_err(|e| (last, e.to_string()))?;
    let c = scm.card;
    if [c.u, c.g, c.r, c.l] != declared {
        return Err((last, "table sizes disagree with the declared cardinalities".into()));
    }
    Ok(scm)
}

pub fn load(path: &Path) -> Result<DiscreteScm> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse(&text).map_err(|(line, message)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}
