//! Exact discrete structural causal model with the mediator structure
//! `U -> G`, `G -> R`, `(R, U) -> L`, where `U` is unobserved.
//!
//! Everything is computed by enumeration. [`DiscreteScm::interventional`]
//! uses the truncated factorization (graph surgery on `G`), while
//! [`DiscreteScm::frontdoor_estimate`] only reads the observational joint
//! over `(G, R, L)`. Their agreement is the front-door identity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_CARDINALITY: usize = 8;
const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cardinalities {
    pub u: usize,
    pub g: usize,
    pub r: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    pub card: Cardinalities,
    pub p_u: Vec<f64>,
    /// `[u][g]`
    pub p_g_given_u: Vec<Vec<f64>>,
    /// `[g][r]`
    pub p_r_given_g: Vec<Vec<f64>>,
    /// `[r][u][l]`
    pub p_l_given_ru: Vec<Vec<Vec<f64>>>,
}

/// Observational joint `P(G, R, L)` indexed `[g][r][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub p: Vec<Vec<Vec<f64>>>,
}

impl Joint {
    pub fn total(&self) -> f64 {
        self.p.iter().flatten().flatten().sum()
    }

    pub fn p_g(&self, g: usize) -> f64 {
        self.p[g].iter().flatten().sum()
    }

    pub fn p_gr(&self, g: usize, r: usize) -> f64 {
        self.p[g][r].iter().sum()
    }

    /// `P(L | G = g)`; zeros when `P(g) = 0`.
    pub fn l_given_g(&self, g: usize) -> Vec<f64> {
        let cl = self.p[g][0].len();
        let pg = self.p_g(g);
        let mut out = vec![0.0; cl];
        if pg > 0.0 {
            for row in &self.p[g] {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v / pg;
                }
            }
        }
        out
    }
}

fn check_row(name: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::Config(format!(
            "{name}: expected {len} entries, got {}",
            row.len()
        )));
    }
    if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config(format!("{name}: entries must be finite and >= 0")));
    }
    let s: f64 = row.iter().sum();
    if libm::fabs(s - 1.0) > ROW_TOL {
        return Err(Error::Config(format!("{name}: row sums to {s}, not 1")));
    }
    Ok(())
}

/// Symmetric Dirichlet(1) draw: normalized Exp(1) variates.
fn dirichlet_row<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|_| -libm::log(1.0 - rng.gen::<f64>()))
        .collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    // Keep the row sum within tolerance after rounding.
    let s: f64 = row.iter().sum();
    row[0] += 1.0 - s;
    row
}

impl DiscreteScm {
    pub fn new(
        p_u: Vec<f64>,
        p_g_given_u: Vec<Vec<f64>>,
        p_r_given_g: Vec<Vec<f64>>,
        p_l_given_ru: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let card = Cardinalities {
            u: p_u.len(),
            g: p_g_given_u.first().map_or(0, Vec::len),
            r: p_r_given_g.first().map_or(0, Vec::len),
            l: p_l_given_ru
                .first()
                .and_then(|x| x.first())
                .map_or(0, Vec::len),
        };
        for (name, c) in [("U", card.u), ("G", card.g), ("R", card.r), ("L", card.l)] {
            if !(2..=MAX_CARDINALITY).contains(&c) {
                return Err(Error::Config(format!(
                    "|{name}| = {c} outside 2..={MAX_CARDINALITY}"
                )));
            }
        }
        check_row("P(U)", &p_u, card.u)?;
        if p_g_given_u.len() != card.u || p_r_given_g.len() != card.g || p_l_given_ru.len() != card.r
        {
            return Err(Error::Config("conditional table has the wrong number of rows".into()));
        }
        for (u, row) in p_g_given_u.iter().enumerate() {
            check_row(&format!("P(G|U={u})"), row, card.g)?;
        }
        for (g, row) in p_r_given_g.iter().enumerate() {
            check_row(&format!("P(R|G={g})"), row, card.r)?;
        }
        for (r, rows) in p_l_given_ru.iter().enumerate() {
            if rows.len() != card.u {
                return Err(Error::Config(format!("P(L|R={r},U): wrong number of rows")));
            }
            for (u, row) in rows.iter().enumerate() {
                check_row(&format!("P(L|R={r},U={u})"), row, card.l)?;
            }
        }
        Ok(Self {
            card,
            p_u,
            p_g_given_u,
            p_r_given_g,
            p_l_given_ru,
        })
    }

    /// Tables with every row drawn from a symmetric Dirichlet(1).
    pub fn random<R: Rng>(card: Cardinalities, rng: &mut R) -> Result<Self> {
        let p_u = dirichlet_row(card.u, rng);
        let p_g_given_u = (0..card.u).map(|_| dirichlet_row(card.g, rng)).collect();
        let p_r_given_g = (0..card.g).map(|_| dirichlet_row(card.r, rng)).collect();
        let p_l_given_ru = (0..card.r)
            .map(|_| (0..card.u).map(|_| dirichlet_row(card.l, rng)).collect())
            .collect();
        Self::new(p_u, p_g_given_u, p_r_given_g, p_l_given_ru)
    }

    /// A binary model where `U` drives both `G` and `L` strongly, so that
    /// `P(L | G)` and `P(L | do(G))` differ markedly.
    pub fn confounded_example() -> Self {
        Self::new(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            vec![
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.8, 0.2], vec![0.1, 0.9]],
            ],
        )
        .expect("valid tables")
    }

    pub fn observational(&self) -> Joint {
        let c = self.card;
        let mut p = vec![vec![vec![0.0; c.l]; c.r]; c.g];
        for u in 0..c.u {
            for g in 0..c.g {
                let pug = self.p_u[u] * self.p_g_given_u[u][g];
                for r in 0..c.r {
                    let pugr = pug * self.p_r_given_g[g][r];
                    for l in 0..c.l {
                        p[g][r][l] += pugr * self.p_l_given_ru[r][u][l];
                    }
                }
            }
        }
        Joint { p }
    }

    /// `P(L | do(G = g)) = sum_u sum_r P(u) P(r | g) P(L | r, u)`.
    pub fn interventional(&self, g: usize) -> Result<Vec<f64>> {
        self.check_g(g)?;
        let c = self.card;
        let mut out = vec![0.0; c.l];
        for u in 0..c.u {
            for r in 0..c.r {
                let w = self.p_u[u] * self.p_r_given_g[g][r];
                for l in 0..c.l {
                    out[l] += w * self.p_l_given_ru[r][u][l];
                }
            }
        }
        Ok(out)
    }

    /// Front-door adjustment evaluated from the observational joint only:
    /// `sum_r P(r | g) sum_g' P(L | r, g') P(g')`. Terms with
    /// `P(g', r) = 0` carry zero weight.
    pub fn frontdoor_estimate(&self, g: usize) -> Result<Vec<f64>> {
        self.check_g(g)?;
        Ok(frontdoor_from_joint(&self.observational(), g))
    }

    fn check_g(&self, g: usize) -> Result<()> {
        if g >= self.card.g {
            return Err(Error::Config(format!(
                "treatment value {g} outside 0..{}",
                self.card.g
            )));
        }
        Ok(())
    }
}

/// Front-door formula on an arbitrary observational joint.
pub fn frontdoor_from_joint(joint: &Joint, g: usize) -> Vec<f64> {
    let cg = joint.p.len();
    let cr = joint.p[0].len();
    let cl = joint.p[0][0].len();
    let p_g: Vec<f64> = (0..cg).map(|x| joint.p_g(x)).collect();
    let mut out = vec![0.0; cl];
    if p_g[g] == 0.0 {
        return out;
    }
    for r in 0..cr {
        let p_r_given_g = joint.p_gr(g, r) / p_g[g];
        if p_r_given_g == 0.0 {
            continue;
        }
        for gp in 0..cg {
            let p_gr = joint.p_gr(gp, r);
            if p_gr == 0.0 {
                continue;
            }
            for l in 0..cl {
                out[l] += p_r_given_g * (joint.p[gp][r][l] / p_gr) * p_g[gp];
            }
        }
    }
    out
}

/// Outcome of [`verify_frontdoor`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrontdoorReport {
    pub models: usize,
    /// Largest `|front-door - interventional|` over models, treatments and
    /// outcomes.
    pub max_deviation: f64,
    /// Largest `|P(L|g) - P(L|do(g))|` over the same grid.
    pub max_confounding_gap: f64,
}

/// Largest front-door and confounding deviations for one model.
pub fn deviations(scm: &DiscreteScm) -> Result<(f64, f64)> {
    let joint = scm.observational();
    let mut dev: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for g in 0..scm.card.g {
        let iv = scm.interventional(g)?;
        let fd = frontdoor_from_joint(&joint, g);
        let ob = joint.l_given_g(g);
        for l in 0..scm.card.l {
            dev = dev.max(libm::fabs(fd[l] - iv[l]));
            gap = gap.max(libm::fabs(ob[l] - iv[l]));
        }
    }
    Ok((dev, gap))
}

/// Runs the front-door identity check over `count` random models with
/// cardinalities drawn uniformly from `2..=max_card`.
pub fn verify_frontdoor<R: Rng>(count: usize, max_card: usize, rng: &mut R) -> Result<FrontdoorReport> {
    let max_card = max_card.clamp(2, MAX_CARDINALITY);
    let mut report = FrontdoorReport {
        models: 0,
        max_deviation: 0.0,
        max_confounding_gap: 0.0,
    };
    for _ in 0..count {
        let card = Cardinalities {
            u: rng.gen_range(2..=max_card),
            g: rng.gen_range(2..=max_card),
            r: rng.gen_range(2..=max_card),
            l: rng.gen_range(2..=max_card),
        };
        let scm = DiscreteScm::random(card, rng)?;
        let (dev, gap) = deviations(&scm)?;
        report.models += 1;
        report.max_deviation = report.max_deviation.max(dev);
        report.max_confounding_gap = report.max_confounding_gap.max(gap);
    }
    Ok(report)
}
