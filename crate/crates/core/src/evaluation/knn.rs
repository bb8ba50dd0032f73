use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::math::{cosine, dot};
use crate::params::{ModelParams, SenseRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `cos(U[query], U[z])`
    Cosine,
    /// `U[query]·V[z]`, monotone in the collocation likelihood.
    Collocation,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "collocation" => Ok(Metric::Collocation),
            _ => Err(Error::Usage(format!("unknown metric {s:?} (cosine|collocation)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub sense: SenseRef,
    pub score: f64,
}

/// Top `k` senses of other words; ties broken by flat index.
pub fn knn_senses(query: SenseRef, params: &ModelParams, k: usize, metric: Metric) -> Vec<Neighbor> {
    let n = params.senses();
    let u = params.u_row(query.flat);
    let mut all: Vec<Neighbor> = (0..params.num_senses_total())
        .filter(|&flat| flat / n != query.word as usize)
        .map(|flat| {
            let score = match metric {
                Metric::Cosine => cosine(u, params.u_row(flat)),
                Metric::Collocation => dot(u, params.v_row(flat)),
            };
            Neighbor {
                sense: SenseRef::from_flat(flat, n),
                score,
            }
        })
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &Neighbor, b: &Neighbor| b.score.total_cmp(&a.score).then(a.sense.flat.cmp(&b.sense.flat));
    all.select_nth_unstable_by(k - 1, cmp);
    all.truncate(k);
    all.sort_by(cmp);
    all
}
