//! Word-sense induction: clustering metrics and dataset evaluation.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::math::Scalar;
use crate::model::SenseModel;
use crate::predict::disambiguate;

struct Contingency {
    n: u64,
    cells: Vec<u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

fn contingency<A: Hash + Eq, B: Hash + Eq>(gold: &[A], pred: &[B]) -> Result<Contingency> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(gold.len(), pred.len()));
    }
    let mut gi: HashMap<&A, usize> = HashMap::new();
    let mut pi: HashMap<&B, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let n = gi.len();
        let i = *gi.entry(g).or_insert(n);
        let n = pi.len();
        let j = *pi.entry(p).or_insert(n);
        *cells.entry((i, j)).or_default() += 1;
    }
    let mut rows = vec![0; gi.len()];
    let mut cols = vec![0; pi.len()];
    for (&(i, j), &c) in &cells {
        rows[i] += c;
        cols[j] += c;
    }
    Ok(Contingency {
        n: gold.len() as u64,
        cells: cells.into_values().collect(),
        rows,
        cols,
    })
}

fn pairs(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index (Hubert & Arabie). Returns 0 when the maximum index
/// equals its expectation (e.g. both partitions trivial).
pub fn ari<A: Hash + Eq, B: Hash + Eq>(gold: &[A], pred: &[B]) -> Result<f64> {
    if gold.len() < 2 {
        return Err(Error::TooFewItems { need: 2, got: gold.len() });
    }
    let t = contingency(gold, pred)?;
    let index: f64 = t.cells.iter().map(|&c| pairs(c)).sum();
    let a: f64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let b: f64 = t.cols.iter().map(|&c| pairs(c)).sum();
    let expected = a * b / pairs(t.n);
    let max = (a + b) / 2.0;
    if max == expected {
        return Ok(0.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// V-measure: harmonic mean of homogeneity and completeness. A zero
/// marginal entropy makes the corresponding score 1.
pub fn v_measure<A: Hash + Eq, B: Hash + Eq>(gold: &[A], pred: &[B]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::TooFewItems { need: 1, got: 0 });
    }
    let t = contingency(gold, pred)?;
    let n = t.n as f64;
    let h_c = entropy(&t.rows, n);
    let h_k = entropy(&t.cols, n);
    let h_joint = entropy(&t.cells, n);
    let h_c_given_k = h_joint - h_k;
    let h_k_given_c = h_joint - h_c;
    let homogeneity = if h_c == 0.0 { 1.0 } else { 1.0 - h_c_given_k / h_c };
    let completeness = if h_k == 0.0 { 1.0 } else { 1.0 - h_k_given_c / h_k };
    if homogeneity + completeness == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * homogeneity * completeness / (homogeneity + completeness))
}

/// Paired F-score over co-clustered instance pairs. An empty pair set scores
/// precision (or recall) 1 when the other set is empty too, else 0.
pub fn paired_fscore<A: Hash + Eq, B: Hash + Eq>(gold: &[A], pred: &[B]) -> Result<f64> {
    if gold.len() < 2 {
        return Err(Error::TooFewItems { need: 2, got: gold.len() });
    }
    let t = contingency(gold, pred)?;
    let both: f64 = t.cells.iter().map(|&c| pairs(c)).sum();
    let gold_pairs: f64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let pred_pairs: f64 = t.cols.iter().map(|&c| pairs(c)).sum();
    let ratio = |num: f64, den: f64, other: f64| {
        if den > 0.0 {
            num / den
        } else if other == 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let precision = ratio(both, pred_pairs, gold_pairs);
    let recall = ratio(both, gold_pairs, pred_pairs);
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WsiInstance {
    pub target: String,
    pub id: String,
    pub gold: String,
    pub context: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WsiDataset {
    pub instances: Vec<WsiInstance>,
}

/// Resolve a possibly graded gold field (`a/0.7 b/0.3`, comma or space
/// separated) to its heaviest label; plain labels pass through.
fn harden_gold(field: &str) -> std::result::Result<String, String> {
    if !field.contains('/') {
        return Ok(field.to_owned());
    }
    let mut best: Option<(f64, &str)> = None;
    for part in field.split([',', ' ']).filter(|p| !p.is_empty()) {
        let (label, weight) = part.rsplit_once('/').ok_or_else(|| format!("bad graded label {part:?}"))?;
        let weight: f64 = weight.parse().map_err(|_| format!("bad weight in {part:?}"))?;
        if best.is_none_or(|(w, _)| weight > w) {
            best = Some((weight, label));
        }
    }
    best.map(|(_, l)| l.to_owned()).ok_or_else(|| "empty gold label".to_owned())
}

impl WsiDataset {
    /// Parse `target \t instance_id \t gold_label \t context` lines. Blank
    /// lines and lines starting with `#` are ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut instances = Vec::new();
        let mut ids = std::collections::HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let err = |msg: String| Error::Parse { line: lineno, msg };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.splitn(4, '\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, got {}", fields.len())));
            }
            let target = fields[0].trim();
            if target.is_empty() {
                return Err(err("empty target".into()));
            }
            let id = fields[1].trim().to_owned();
            if !ids.insert(id.clone()) {
                return Err(err(format!("duplicate instance id {id:?}")));
            }
            let gold = harden_gold(fields[2].trim()).map_err(err)?;
            let context: Vec<String> = fields[3].split_whitespace().map(str::to_owned).collect();
            if context.is_empty() {
                return Err(err("empty context".into()));
            }
            instances.push(WsiInstance {
                target: target.to_owned(),
                id,
                gold,
                context,
            });
        }
        Ok(WsiDataset { instances })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordScore {
    pub word: String,
    pub instances: usize,
    pub ari: f64,
    pub v_measure: f64,
    pub fscore: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WsiReport {
    pub words: Vec<WordScore>,
    /// Targets that were out of vocabulary or had fewer than two instances.
    pub skipped: Vec<String>,
    pub mean_ari: f64,
    pub mean_v_measure: f64,
    pub mean_fscore: f64,
}

impl WsiReport {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word\tn_instances\tari\tvm\tfs")?;
        for s in &self.words {
            writeln!(out, "{}\t{}\t{:.6}\t{:.6}\t{:.6}", s.word, s.instances, s.ari, s.v_measure, s.fscore)?;
        }
        let n: usize = self.words.iter().map(|s| s.instances).sum();
        writeln!(
            out,
            "MEAN\t{n}\t{:.6}\t{:.6}\t{:.6}",
            self.mean_ari, self.mean_v_measure, self.mean_fscore
        )
    }
}

/// Context words of an instance: up to `width / 2` tokens either side of the
/// first occurrence of the target (or of the midpoint when the target does
/// not appear), keeping only in-vocabulary words.
pub fn instance_context<F: Scalar>(model: &SenseModel<F>, inst: &WsiInstance, width: usize) -> Vec<u32> {
    let half = width / 2;
    let ctx = &inst.context;
    let (left_end, right_start) = match ctx.iter().position(|t| *t == inst.target) {
        Some(p) => (p, p + 1),
        None => (ctx.len() / 2, ctx.len() / 2),
    };
    let left = &ctx[left_end.saturating_sub(half)..left_end];
    let right = &ctx[right_start..(right_start + half).min(ctx.len())];
    model.vocab().encode(left.iter().chain(right).map(String::as_str))
}

/// Label each instance with its most probable sense and score the induced
/// clustering per target word. Means are unweighted over scored words.
pub fn evaluate_wsi<F: Scalar>(model: &SenseModel<F>, dataset: &WsiDataset, context_width: usize) -> Result<WsiReport> {
    if context_width == 0 {
        return Err(Error::InvalidConfig("context width must be positive".into()));
    }
    let mut by_word: BTreeMap<&str, Vec<&WsiInstance>> = BTreeMap::new();
    for inst in &dataset.instances {
        by_word.entry(&inst.target).or_default().push(inst);
    }
    let mut words = Vec::new();
    let mut skipped = Vec::new();
    for (target, insts) in by_word {
        let Some(w) = model.vocab().id(target) else {
            skipped.push(target.to_owned());
            continue;
        };
        if insts.len() < 2 {
            skipped.push(target.to_owned());
            continue;
        }
        let gold: Vec<&str> = insts.iter().map(|i| i.gold.as_str()).collect();
        let pred: Vec<usize> = insts
            .iter()
            .map(|i| disambiguate(model, w, &instance_context(model, i, context_width)).argmax())
            .collect();
        words.push(WordScore {
            word: target.to_owned(),
            instances: insts.len(),
            ari: ari(&gold, &pred)?,
            v_measure: v_measure(&gold, &pred)?,
            fscore: paired_fscore(&gold, &pred)?,
        });
    }
    if words.is_empty() {
        return Err(Error::NoScoreableWords);
    }
    let n = words.len() as f64;
    Ok(WsiReport {
        mean_ari: words.iter().map(|s| s.ari).sum::<f64>() / n,
        mean_v_measure: words.iter().map(|s| s.v_measure).sum::<f64>() / n,
        mean_fscore: words.iter().map(|s| s.fscore).sum::<f64>() / n,
        words,
        skipped,
    })
}
