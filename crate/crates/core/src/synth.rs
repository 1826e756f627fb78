//! Template-generated multi-hop verification data with an injectable
//! label shortcut.
//!
//! A claim states that entity `X0` is linked to `XL` through a chain of
//! support. The gold evidence is the chain `X0 rel X1`, `X1 rel X2`, ...
//! The claim holds iff every hop uses a supportive relation. Distractors
//! are hedged near-claims ("reportedly ... according to unverified
//! rumors", "unverified rumors claim that") that assert nothing, plus supportive facts about unrelated
//! entities. One fixed shortcut sentence per label polarity can be added;
//! it carries no logical content.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::featurizer::FeaturizerConfig;
use crate::graph::{build_graph, ClaimEvidenceGraph, MAX_EVIDENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Supports,
    Refutes,
    Nei,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Supports, Label::Refutes, Label::Nei];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supports => "SUPPORTS",
            Label::Refutes => "REFUTES",
            Label::Nei => "NOT ENOUGH INFO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SUPPORTS" => Some(Label::Supports),
            "REFUTES" => Some(Label::Refutes),
            "NOT ENOUGH INFO" | "NEI" => Some(Label::Nei),
            _ => None,
        }
    }
}

/// Outcome of symbolic evaluation of a claim against evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Supports,
    Refutes,
    Undetermined,
}

pub const SUPPORTIVE: [&str; 4] = ["endorsed", "funded", "praised", "backed"];
pub const OPPOSING: [&str; 4] = ["opposed", "sued", "criticized", "rejected"];
const HEDGES: [&str; 2] = ["reportedly", "allegedly"];
const HEDGE_SUFFIX: &str = "according to unverified rumors";
const RUMOR_PREFIX: &str = "Unverified rumors claim that";
const CLAIM_MIDDLE: &str = "is linked to";
const CLAIM_TAIL: &str = "through a chain of support.";

/// Shortcut sentence per label polarity.
pub const SHORTCUTS: [&str; 3] = [
    "The post was verified by independent editors.",
    "The post was flagged as part of efforts to combat false news.",
    "The post is still awaiting review.",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    /// Gold hops per claim.
    pub chain_length: usize,
    pub n_distractors: usize,
    /// 2 (SUPPORTS/REFUTES) or 3 (adds NOT ENOUGH INFO).
    pub classes: usize,
    /// Probability that the shortcut sentence agrees with the label in
    /// train, dev and the in-distribution test split. Otherwise its
    /// polarity is uniform over the classes.
    pub bias_strength: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_train: 500,
            n_dev: 200,
            n_test: 200,
            chain_length: 3,
            n_distractors: 8,
            classes: 2,
            bias_strength: 0.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chain_length < 2 {
            return Err(Error::Config("chain_length must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.bias_strength) {
            return Err(Error::Config(format!(
                "bias strength {} outside [0, 1]",
                self.bias_strength
            )));
        }
        if !(2..=3).contains(&self.classes) {
            return Err(Error::Config(format!("classes must be 2 or 3, got {}", self.classes)));
        }
        // Symmetric pairs hold two chains.
        let widest = (self.chain_length + self.n_distractors + 1).max(2 * self.chain_length + 1);
        if widest > MAX_EVIDENCE {
            return Err(Error::Config(format!(
                "examples would hold {widest} evidences, limit is {MAX_EVIDENCE}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedExample {
    pub id: String,
    pub claim: String,
    pub evidence: Vec<String>,
    pub evidence_flags: Vec<bool>,
    pub label: Label,
    pub has_shortcut: bool,
    pub shortcut_agrees: bool,
}

impl GeneratedExample {
    pub fn to_graph(&self, featurizer: &FeaturizerConfig) -> Result<ClaimEvidenceGraph> {
        build_graph(&self.claim, &self.evidence, featurizer)?
            .with_label(self.label.index())
            .with_evidence_flags(&self.evidence_flags)
    }

    /// Gold chain sentences in evidence order.
    pub fn gold_evidence(&self) -> Vec<&str> {
        self.evidence
            .iter()
            .zip(&self.evidence_flags)
            .filter(|(_, f)| **f)
            .map(|(e, _)| e.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<GeneratedExample>,
    pub dev: Vec<GeneratedExample>,
    pub test_id: Vec<GeneratedExample>,
    pub test_adversarial: Vec<GeneratedExample>,
    pub test_symmetric: Vec<GeneratedExample>,
}

impl Splits {
    pub const NAMES: [&'static str; 5] =
        ["train", "dev", "test_id", "test_adversarial", "test_symmetric"];

    pub fn get(&self, name: &str) -> Option<&[GeneratedExample]> {
        match name {
            "train" => Some(&self.train),
            "dev" => Some(&self.dev),
            "test_id" => Some(&self.test_id),
            "test_adversarial" => Some(&self.test_adversarial),
            "test_symmetric" => Some(&self.test_symmetric),
            _ => None,
        }
    }
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ru", "ze", "po", "ta", "vi", "no", "sa", "de", "gu", "fo", "ri", "xa",
    "bel", "tor", "qui", "han", "mos", "ul", "eth", "ny", "wa",
];
const NAMES_PER_SPLIT: usize = 60_000;

/// Opaque entity token for index `i`.
pub fn entity_name(i: usize) -> String {
    let mut s = String::new();
    let mut x = i;
    for _ in 0..4 {
        s.push_str(SYLLABLES[x % SYLLABLES.len()]);
        x /= SYLLABLES.len();
    }
    let mut chars = s.chars();
    let first = chars.next().expect("non-empty").to_ascii_uppercase();
    let mut out = String::new();
    out.push(first);
    out.extend(chars);
    out
}

#[derive(Clone, Copy)]
enum ShortcutPolicy {
    /// Agree with the label with probability `p`, else uniform.
    Agree(f64),
    /// Disagree with probability `p`, else uniform.
    Flip(f64),
}

struct SplitGen {
    rng: ChaCha8Rng,
    entity_base: usize,
}

impl SplitGen {
    fn new(seed: u64, split: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed ^ (0xa076_1d64_78bd_642f_u64.wrapping_mul(split as u64 + 1))),
            entity_base: split * NAMES_PER_SPLIT,
        }
    }

    fn entities(&mut self, count: usize) -> Vec<String> {
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        while picked.len() < count {
            let i = self.entity_base + self.rng.gen_range(0..NAMES_PER_SPLIT);
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        picked.into_iter().map(entity_name).collect()
    }

    fn relation(&mut self, supportive: bool) -> &'static str {
        let pool = if supportive { &SUPPORTIVE } else { &OPPOSING };
        pool[self.rng.gen_range(0..pool.len())]
    }

    /// Hop polarities for a label: all supportive for SUPPORTS, exactly
    /// one opposing hop for REFUTES.
    fn hop_polarities(&mut self, label: Label, hops: usize) -> Vec<bool> {
        let mut pol = vec![true; hops];
        if label == Label::Refutes {
            let k = self.rng.gen_range(0..hops);
            pol[k] = false;
        }
        pol
    }

    fn chain(&mut self, ents: &[String], polarities: &[bool]) -> Vec<String> {
        polarities
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let rel = self.relation(p);
                format!("{} {} {}.", ents[k], rel, ents[k + 1])
            })
            .collect()
    }

    fn hedged(&mut self, a: &str, b: &str) -> String {
        let supportive = self.rng.gen_bool(0.5);
        let rel = self.relation(supportive);
        if self.rng.gen_bool(0.5) {
            format!("{RUMOR_PREFIX} {a} {rel} {b}.")
        } else {
            let hedge = HEDGES[self.rng.gen_range(0..HEDGES.len())];
            format!("{a} {hedge} {rel} {b} {HEDGE_SUFFIX}.")
        }
    }

    /// Hedged near-claims (may mention chain entities) and supportive
    /// facts among fresh entities.
    fn distractors(&mut self, chain_ents: &[String], count: usize) -> Vec<String> {
        let fresh = self.entities(count * 2 + 2);
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            if self.rng.gen_bool(0.75) {
                let pool: Vec<&String> = chain_ents.iter().chain(fresh.iter()).collect();
                let a = pool[self.rng.gen_range(0..pool.len())].clone();
                let mut b = a.clone();
                while b == a {
                    b = pool[self.rng.gen_range(0..pool.len())].clone();
                }
                out.push(self.hedged(&a, &b));
            } else {
                let rel = self.relation(true);
                out.push(format!("{} {} {}.", fresh[2 * k], rel, fresh[2 * k + 1]));
            }
        }
        out
    }

    fn shortcut(&mut self, label: Label, classes: usize, policy: ShortcutPolicy) -> Label {
        let uniform = |rng: &mut ChaCha8Rng| Label::ALL[rng.gen_range(0..classes)];
        match policy {
            ShortcutPolicy::Agree(p) => {
                if self.rng.gen_bool(p) {
                    label
                } else {
                    uniform(&mut self.rng)
                }
            }
            ShortcutPolicy::Flip(p) => {
                if self.rng.gen_bool(p) {
                    let others: Vec<Label> = Label::ALL[..classes]
                        .iter()
                        .copied()
                        .filter(|l| *l != label)
                        .collect();
                    others[self.rng.gen_range(0..others.len())]
                } else {
                    uniform(&mut self.rng)
                }
            }
        }
    }

    fn example(
        &mut self,
        id: String,
        config: &GeneratorConfig,
        policy: ShortcutPolicy,
    ) -> GeneratedExample {
        let hops = config.chain_length;
        let label = Label::ALL[self.rng.gen_range(0..config.classes)];
        let ents = self.entities(hops + 1);
        let mut gold = match label {
            Label::Nei => {
                let pol: Vec<bool> = (0..hops).map(|_| self.rng.gen_bool(0.5)).collect();
                let mut g = self.chain(&ents, &pol);
                let drop = self.rng.gen_range(0..hops);
                g.remove(drop);
                g
            }
            _ => {
                let pol = self.hop_polarities(label, hops);
                self.chain(&ents, &pol)
            }
        };
        let claim = claim_text(&ents[0], &ents[hops]);
        let mut items: Vec<(String, bool)> = gold.drain(..).map(|g| (g, true)).collect();
        for d in self.distractors(&ents, config.n_distractors) {
            items.push((d, false));
        }
        let polarity = self.shortcut(label, config.classes, policy);
        items.push((String::from(SHORTCUTS[polarity.index()]), false));
        items.shuffle(&mut self.rng);
        let (evidence, evidence_flags) = items.into_iter().unzip();
        GeneratedExample {
            id,
            claim,
            evidence,
            evidence_flags,
            label,
            has_shortcut: true,
            shortcut_agrees: polarity == label,
        }
    }

    /// Two claims over distinct chains, one SUPPORTS and one REFUTES,
    /// sharing one merged evidence pool.
    fn symmetric_pair(&mut self, index: usize, config: &GeneratorConfig) -> [GeneratedExample; 2] {
        let hops = config.chain_length;
        let ents_s = self.entities(hops + 1);
        let mut ents_r = self.entities(hops + 1);
        while ents_r.iter().any(|e| ents_s.contains(e)) {
            ents_r = self.entities(hops + 1);
        }
        let pol_s = self.hop_polarities(Label::Supports, hops);
        let pol_r = self.hop_polarities(Label::Refutes, hops);
        let chain_s = self.chain(&ents_s, &pol_s);
        let chain_r = self.chain(&ents_r, &pol_r);
        let room = MAX_EVIDENCE - 2 * hops;
        let n_distract = config.n_distractors.saturating_sub(hops).min(room);
        let mut both = ents_s.clone();
        both.extend(ents_r.iter().cloned());
        // Tag: 0 = distractor, 1 = supports chain, 2 = refutes chain.
        let mut items: Vec<(String, u8)> = Vec::new();
        items.extend(chain_s.into_iter().map(|s| (s, 1)));
        items.extend(chain_r.into_iter().map(|s| (s, 2)));
        for d in self.distractors(&both, n_distract) {
            items.push((d, 0));
        }
        items.shuffle(&mut self.rng);
        let evidence: Vec<String> = items.iter().map(|(s, _)| s.clone()).collect();
        let make = |tag: u8, ents: &[String], label: Label, suffix: &str| GeneratedExample {
            id: format!("test_symmetric-{index}{suffix}"),
            claim: claim_text(&ents[0], &ents[hops]),
            evidence: evidence.clone(),
            evidence_flags: items.iter().map(|(_, t)| *t == tag).collect(),
            label,
            has_shortcut: false,
            shortcut_agrees: false,
        };
        [
            make(1, &ents_s, Label::Supports, "a"),
            make(2, &ents_r, Label::Refutes, "b"),
        ]
    }
}

pub fn claim_text(first: &str, last: &str) -> String {
    format!("{first} {CLAIM_MIDDLE} {last} {CLAIM_TAIL}")
}

/// Generates all five splits. Each split draws entities from its own
/// disjoint name range and uses its own derived seed.
pub fn generate(config: &GeneratorConfig) -> Result<Splits> {
    config.validate()?;
    let beta = config.bias_strength;
    let run = |split: usize, name: &str, n: usize, policy: ShortcutPolicy| {
        let mut g = SplitGen::new(config.seed, split);
        (0..n)
            .map(|i| g.example(format!("{name}-{i}"), config, policy))
            .collect::<Vec<_>>()
    };
    let mut sym = SplitGen::new(config.seed, 4);
    let mut test_symmetric = Vec::with_capacity(config.n_test);
    let mut pair = 0;
    while test_symmetric.len() < config.n_test {
        for ex in sym.symmetric_pair(pair, config) {
            if test_symmetric.len() < config.n_test {
                test_symmetric.push(ex);
            }
        }
        pair += 1;
    }
    Ok(Splits {
        train: run(0, "train", config.n_train, ShortcutPolicy::Agree(beta)),
        dev: run(1, "dev", config.n_dev, ShortcutPolicy::Agree(beta)),
        test_id: run(2, "test_id", config.n_test, ShortcutPolicy::Agree(beta)),
        test_adversarial: run(3, "test_adversarial", config.n_test, ShortcutPolicy::Flip(beta)),
        test_symmetric,
    })
}

fn strip_period(s: &str) -> Result<&str> {
    s.trim()
        .strip_suffix('.')
        .ok_or_else(|| Error::Grammar(String::from(s)))
}

/// A parsed evidence sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sentence {
    Fact {
        from: String,
        to: String,
        supportive: bool,
    },
    /// Hedged statements and shortcut boilerplate.
    NoContent,
}

fn relation_polarity(word: &str) -> Option<bool> {
    if SUPPORTIVE.contains(&word) {
        Some(true)
    } else if OPPOSING.contains(&word) {
        Some(false)
    } else {
        None
    }
}

pub fn parse_evidence(text: &str) -> Result<Sentence> {
    let t = text.trim();
    if SHORTCUTS.contains(&t) {
        return Ok(Sentence::NoContent);
    }
    let grammar = || Error::Grammar(String::from(text));
    let body = strip_period(t)?;
    let rel_ok = |w: &str| relation_polarity(w).is_some();
    if let Some(rest) = body.strip_prefix(RUMOR_PREFIX) {
        return match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
            [_, rel, _] if rel_ok(rel) => Ok(Sentence::NoContent),
            _ => Err(grammar()),
        };
    }
    if let Some(rest) = body.strip_suffix(HEDGE_SUFFIX) {
        return match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
            [_, hedge, rel, _] if HEDGES.contains(hedge) && rel_ok(rel) => Ok(Sentence::NoContent),
            _ => Err(grammar()),
        };
    }
    match body.split_whitespace().collect::<Vec<_>>().as_slice() {
        [a, rel, b] => {
            let supportive = relation_polarity(rel).ok_or_else(grammar)?;
            Ok(Sentence::Fact {
                from: String::from(*a),
                to: String::from(*b),
                supportive,
            })
        }
        _ => Err(grammar()),
    }
}

/// Returns the two endpoint entities of a claim.
pub fn parse_claim(text: &str) -> Result<(String, String)> {
    let grammar = || Error::Grammar(String::from(text));
    let t = text.trim();
    let body = t
        .strip_suffix(CLAIM_TAIL)
        .ok_or_else(grammar)?
        .trim();
    let (first, last) = body.split_once(CLAIM_MIDDLE).ok_or_else(grammar)?;
    let (first, last) = (first.trim(), last.trim());
    if first.is_empty() || last.is_empty() || first.contains(' ') || last.contains(' ') {
        return Err(grammar());
    }
    Ok((String::from(first), String::from(last)))
}

/// Exact symbolic evaluation: SUPPORTS iff some chain of asserted facts
/// links the claim endpoints using only supportive relations, REFUTES iff
/// they are linked but every such chain contains an opposing hop, and
/// UNDETERMINED when no chain links them.
pub fn template_logic_eval<S: AsRef<str>>(claim: &str, evidence: &[S]) -> Result<Verdict> {
    let (start, goal) = parse_claim(claim)?;
    let mut facts = Vec::new();
    for e in evidence {
        if let Sentence::Fact {
            from,
            to,
            supportive,
        } = parse_evidence(e.as_ref())?
        {
            facts.push((from, to, supportive));
        }
    }
    let reach = |only_supportive: bool| -> bool {
        let mut seen: Vec<&str> = vec![start.as_str()];
        let mut frontier: Vec<&str> = vec![start.as_str()];
        while let Some(node) = frontier.pop() {
            if node == goal {
                return true;
            }
            for (from, to, sup) in &facts {
                if from == node && (*sup || !only_supportive) && !seen.contains(&to.as_str()) {
                    seen.push(to);
                    frontier.push(to);
                }
            }
        }
        false
    };
    Ok(if reach(true) {
        Verdict::Supports
    } else if reach(false) {
        Verdict::Refutes
    } else {
        Verdict::Undetermined
    })
}

pub fn verdict_label(v: Verdict) -> Label {
    match v {
        Verdict::Supports => Label::Supports,
        Verdict::Refutes => Label::Refutes,
        Verdict::Undetermined => Label::Nei,
    }
}
