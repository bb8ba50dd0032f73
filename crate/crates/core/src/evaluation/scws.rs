use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use super::spearman;
use crate::corpus::{ContextWindow, Vocabulary};
use crate::error::{Error, Result};
use crate::math::cosine;
use crate::params::ModelParams;
use crate::selection::score_senses;

/// One contextual similarity pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ScwsItem {
    pub word_i: String,
    pub word_j: String,
    pub context_i: Vec<String>,
    pub target_i: usize,
    pub context_j: Vec<String>,
    pub target_j: usize,
    pub human_score: f64,
}

impl ScwsItem {
    /// Builds an item from contexts with the target marked `<b>word</b>`.
    pub fn from_marked(word_i: &str, word_j: &str, context_i: &str, context_j: &str, human_score: f64) -> Result<Self> {
        let (context_i, target_i) = parse_marked(context_i)?;
        let (context_j, target_j) = parse_marked(context_j)?;
        Ok(ScwsItem {
            word_i: word_i.to_lowercase(),
            word_j: word_j.to_lowercase(),
            context_i,
            target_i,
            context_j,
            target_j,
            human_score,
        })
    }
}

/// Lowercased tokens plus the index of the marked target.
fn parse_marked(context: &str) -> Result<(Vec<String>, usize)> {
    let spaced = context.replace("<b>", " <b> ").replace("</b>", " </b> ");
    let mut tokens = Vec::new();
    let mut target = None;
    let mut inside = false;
    for tok in spaced.split_whitespace() {
        match tok {
            "<b>" => inside = true,
            "</b>" => inside = false,
            _ => {
                if inside && target.is_none() {
                    target = Some(tokens.len());
                }
                tokens.push(tok.to_lowercase());
            }
        }
    }
    let target = target.ok_or_else(|| Error::format(format!("context without <b> target: {context:.60}")))?;
    Ok((tokens, target))
}

/// TSV: id, word1, pos1, word2, pos2, context1, context2, mean rating, ratings...
pub fn read_scws(path: &Path) -> Result<Vec<ScwsItem>> {
    let reader = BufReader::new(File::open(path)?);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(Error::format(format!("scws line {}: expected at least 8 tab-separated fields", i + 1)));
        }
        let score: f64 = fields[7]
            .trim()
            .parse()
            .map_err(|_| Error::format(format!("scws line {}: bad rating {:?}", i + 1, fields[7])))?;
        let item = ScwsItem::from_marked(fields[1], fields[3], fields[5], fields[6], score)
            .map_err(|e| Error::format(format!("scws line {}: {e}", i + 1)))?;
        items.push(item);
    }
    Ok(items)
}

/// Window of in-vocabulary tokens around the marked position, with the
/// target itself mapped through `word`.
fn window_for(word: &str, tokens: &[String], target: usize, vocab: &Vocabulary, radius: usize) -> Option<ContextWindow> {
    let target_id = vocab.id(word)?;
    let mut seq = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if i == target {
            pos = seq.len();
            seq.push(target_id);
        } else if let Some(id) = vocab.id(tok) {
            seq.push(id);
        }
    }
    Some(ContextWindow::around(&seq, pos, radius))
}

fn windows(item: &ScwsItem, vocab: &Vocabulary, radius: usize) -> Option<(ContextWindow, ContextWindow)> {
    Some((
        window_for(&item.word_i, &item.context_i, item.target_i, vocab, radius)?,
        window_for(&item.word_j, &item.context_j, item.target_j, vocab, radius)?,
    ))
}

/// Cosine between the argmax senses; `None` when either word is OOV.
pub fn max_sim_c(item: &ScwsItem, params: &ModelParams, vocab: &Vocabulary, radius: usize) -> Option<f64> {
    let (wi, wj) = windows(item, vocab, radius)?;
    let si = score_senses(&wi, params);
    let sj = score_senses(&wj, params);
    let a = params.sense(wi.target, si.greedy());
    let b = params.sense(wj.target, sj.greedy());
    Some(cosine(params.u_row(a.flat), params.u_row(b.flat)))
}

/// Policy-weighted mean of all sense-pair cosines; `None` when either word is OOV.
pub fn avg_sim_c(item: &ScwsItem, params: &ModelParams, vocab: &Vocabulary, radius: usize) -> Option<f64> {
    let (wi, wj) = windows(item, vocab, radius)?;
    let si = score_senses(&wi, params);
    let sj = score_senses(&wj, params);
    let mut total = 0.0;
    for (k, pk) in si.policy.iter().enumerate() {
        let a = params.sense(wi.target, k as u32);
        for (l, pl) in sj.policy.iter().enumerate() {
            let b = params.sense(wj.target, l as u32);
            total += pk * pl * cosine(params.u_row(a.flat), params.u_row(b.flat));
        }
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScwsReport {
    /// Spearman ρ; `None` when undefined (fewer than two scored items or no variance).
    pub max_sim_c: Option<f64>,
    pub avg_sim_c: Option<f64>,
    pub scored: usize,
    pub skipped: usize,
}

impl ScwsReport {
    /// `MaxSimC=<ρ×100> AvgSimC=<ρ×100> skipped=<n>`
    pub fn summary_line(&self) -> String {
        format!(
            "MaxSimC={} AvgSimC={} skipped={}",
            fmt_rho(self.max_sim_c),
            fmt_rho(self.avg_sim_c),
            self.skipped
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({
            "metric": "scws",
            "MaxSimC": self.max_sim_c.map(|r| r * 100.0),
            "AvgSimC": self.avg_sim_c.map(|r| r * 100.0),
            "scored": self.scored,
            "skipped": self.skipped,
        })
        .to_string()
    }
}

fn fmt_rho(r: Option<f64>) -> String {
    match r {
        Some(r) => format!("{:.2}", r * 100.0),
        None => "undefined".into(),
    }
}

pub fn evaluate_scws(items: &[ScwsItem], params: &ModelParams, vocab: &Vocabulary, radius: usize) -> ScwsReport {
    let mut max_scores = Vec::new();
    let mut avg_scores = Vec::new();
    let mut human = Vec::new();
    let mut skipped = 0;
    for item in items {
        match (max_sim_c(item, params, vocab, radius), avg_sim_c(item, params, vocab, radius)) {
            (Some(m), Some(a)) => {
                max_scores.push(m);
                avg_scores.push(a);
                human.push(item.human_score);
            }
            _ => skipped += 1,
        }
    }
    let rho = |xs: &[f64]| {
        if xs.len() < 2 {
            None
        } else {
            spearman(xs, &human).ok()
        }
    };
    ScwsReport {
        max_sim_c: rho(&max_scores),
        avg_sim_c: rho(&avg_scores),
        scored: human.len(),
        skipped,
    }
}
