use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::math::cosine;
use crate::params::ModelParams;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynonymQuestion {
    pub question: String,
    pub candidates: [String; 4],
    pub answer_index: usize,
}

impl SynonymQuestion {
    /// `question | a b c d | letter`
    pub fn parse(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        let [question, candidates, answer] = parts[..] else {
            return Err(Error::format(format!("synonym line needs 3 '|' fields: {line:?}")));
        };
        let cands: Vec<String> = candidates.split_whitespace().map(str::to_lowercase).collect();
        let candidates: [String; 4] = cands
            .try_into()
            .map_err(|_| Error::format(format!("synonym line needs exactly 4 candidates: {line:?}")))?;
        for i in 0..4 {
            if candidates[i + 1..].contains(&candidates[i]) {
                return Err(Error::format(format!("duplicate candidate {:?}", candidates[i])));
            }
        }
        let answer_index = match answer.to_ascii_lowercase().as_str() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            "d" => 3,
            other => return Err(Error::format(format!("bad answer letter {other:?}"))),
        };
        if question.is_empty() {
            return Err(Error::format("empty question word"));
        }
        Ok(SynonymQuestion {
            question: question.to_lowercase(),
            candidates,
            answer_index,
        })
    }
}

pub fn read_synonyms(path: &Path) -> Result<Vec<SynonymQuestion>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(SynonymQuestion::parse(&line).map_err(|e| Error::format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Highest cosine over every sense pair of the two words.
fn max_sense_cosine(a: u32, b: u32, params: &ModelParams) -> f64 {
    let n = params.senses() as u32;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let ua = params.u_row(params.sense(a, k).flat);
        for l in 0..n {
            best = best.max(cosine(ua, params.u_row(params.sense(b, l).flat)));
        }
    }
    best
}

/// Index of the chosen candidate, or `None` when the question word or every
/// candidate is out of vocabulary.
pub fn answer_synonym(question: &SynonymQuestion, params: &ModelParams, vocab: &Vocabulary) -> Option<usize> {
    let q = vocab.id(&question.question)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, cand) in question.candidates.iter().enumerate() {
        let Some(c) = vocab.id(cand) else { continue };
        let score = max_sense_cosine(q, c, params);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynonymReport {
    pub name: String,
    pub correct: usize,
    pub answered: usize,
    pub skipped: usize,
}

impl SynonymReport {
    /// Accuracy over answered questions.
    pub fn accuracy(&self) -> Option<f64> {
        (self.answered > 0).then(|| self.correct as f64 / self.answered as f64)
    }

    pub fn summary_line(&self) -> String {
        let acc = self.accuracy().map_or("undefined".to_string(), |a| format!("{:.2}", a * 100.0));
        format!(
            "{} accuracy={acc} answered={} skipped={}",
            self.name, self.answered, self.skipped
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({
            "metric": "synonym",
            "dataset": self.name,
            "accuracy": self.accuracy().map(|a| a * 100.0),
            "correct": self.correct,
            "answered": self.answered,
            "skipped": self.skipped,
        })
        .to_string()
    }
}

pub fn evaluate_synonyms(name: &str, questions: &[SynonymQuestion], params: &ModelParams, vocab: &Vocabulary) -> SynonymReport {
    let mut report = SynonymReport {
        name: name.to_string(),
        correct: 0,
        answered: 0,
        skipped: 0,
    };
    for q in questions {
        match answer_synonym(q, params, vocab) {
            Some(i) => {
                report.answered += 1;
                if i == q.answer_index {
                    report.correct += 1;
                }
            }
            None => report.skipped += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        let words = ["q", "c0", "c1", "c2", "c3"];
        Vocabulary::from_ordered(words.iter().map(|w| (w.to_string(), 10)).collect(), 1).unwrap()
    }

    #[test]
    fn parse_line() {
        let q = SynonymQuestion::parse("Big | large small red tall | a").unwrap();
        assert_eq!(q.question, "big");
        assert_eq!(q.candidates[3], "tall");
        assert_eq!(q.answer_index, 0);
        assert!(SynonymQuestion::parse("big | a b c | a").is_err());
        assert!(SynonymQuestion::parse("big | a b c a | a").is_err());
        assert!(SynonymQuestion::parse("big | a b c d | e").is_err());
    }

    #[test]
    fn shared_sense_vector_wins() {
        let v = vocab();
        let mut p = ModelParams::init(5, 4, 2, 3);
        let shared = p.u_row(p.sense(0, 1).flat).to_vec();
        let flat = p.sense(3, 0).flat;
        p.u_row_mut(flat).copy_from_slice(&shared);
        let q = SynonymQuestion::parse("q | c0 c1 c2 c3 | c").unwrap();
        assert_eq!(answer_synonym(&q, &p, &v), Some(2));
    }

    #[test]
    fn oov_handling() {
        let v = vocab();
        let p = ModelParams::init(5, 4, 2, 3);
        let all_oov = SynonymQuestion::parse("q | x1 x2 x3 x4 | a").unwrap();
        assert_eq!(answer_synonym(&all_oov, &p, &v), None);
        let oov_q = SynonymQuestion::parse("zz | c0 c1 c2 c3 | a").unwrap();
        assert_eq!(answer_synonym(&oov_q, &p, &v), None);
        let one = SynonymQuestion::parse("q | x1 x2 c2 x4 | c").unwrap();
        assert_eq!(answer_synonym(&one, &p, &v), Some(2));
        let r = evaluate_synonyms("toy", &[all_oov, one], &p, &v);
        assert_eq!((r.correct, r.answered, r.skipped), (1, 1, 1));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let v = vocab();
        let mut p = ModelParams::zeros(5, 2, 1);
        p.u_row_mut(0).copy_from_slice(&[1.0, 0.0]);
        for w in 1..5 {
            p.u_row_mut(w).copy_from_slice(&[0.0, 1.0]);
        }
        let q = SynonymQuestion::parse("q | c3 c2 c1 c0 | a").unwrap();
        assert_eq!(answer_synonym(&q, &p, &v), Some(0));
    }
}
