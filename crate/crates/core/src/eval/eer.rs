use std::collections::HashMap;

use super::embedding::{cosine_similarity, SpeakerEmbedding};
use crate::anonymizer::csv_line;
use crate::error::{Error, Result};
use crate::io::{TrialLabel, TrialRow};

/// Labelled similarity scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub entries: Vec<(f64, TrialLabel)>,
}

impl ScoreSet {
    pub fn new(entries: Vec<(f64, TrialLabel)>) -> Self {
        Self { entries }
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let mut targets = Vec::new();
        let mut non_targets = Vec::new();
        for &(s, label) in &self.entries {
            match label {
                TrialLabel::Target => targets.push(s),
                TrialLabel::NonTarget => non_targets.push(s),
            }
        }
        (targets, non_targets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrial {
    pub enrolment_id: String,
    pub test_id: String,
    pub label: TrialLabel,
    pub score: f64,
}

impl FromIterator<ScoredTrial> for ScoreSet {
    fn from_iter<I: IntoIterator<Item = ScoredTrial>>(iter: I) -> Self {
        Self::new(iter.into_iter().map(|t| (t.score, t.label)).collect())
    }
}

/// Cosine-scores each trial, enrolment side against `enrolment`, test side
/// against `test`.
pub fn score_trials(
    trials: &[TrialRow],
    enrolment: &HashMap<String, SpeakerEmbedding>,
    test: &HashMap<String, SpeakerEmbedding>,
) -> Result<Vec<ScoredTrial>> {
    trials
        .iter()
        .map(|t| {
            let missing = |id: &str| {
                Error::Input(format!(
                    "no embedding for {id:?} in trial {} / {}",
                    t.enrolment_utterance_id, t.test_utterance_id
                ))
            };
            let e = enrolment
                .get(&t.enrolment_utterance_id)
                .ok_or_else(|| missing(&t.enrolment_utterance_id))?;
            let x = test
                .get(&t.test_utterance_id)
                .ok_or_else(|| missing(&t.test_utterance_id))?;
            Ok(ScoredTrial {
                enrolment_id: t.enrolment_utterance_id.clone(),
                test_id: t.test_utterance_id.clone(),
                label: t.label,
                score: cosine_similarity(&e.0, &x.0),
            })
        })
        .collect()
}

pub fn scores_csv(scores: &[ScoredTrial]) -> String {
    let mut out = String::from("enrol_id,test_id,label,score\n");
    for s in scores {
        out.push_str(&csv_line(&[
            &s.enrolment_id,
            &s.test_id,
            s.label.as_str(),
            &s.score.to_string(),
        ]));
    }
    out
}

/// Equal error rate.
///
/// A trial is accepted when its score is at or above the threshold. The
/// threshold sweeps every distinct score and finally `+inf`; the EER is
/// read off where the false-accept and false-reject rates cross, linearly
/// interpolated between the two bracketing operating points. The result
/// lies in `[0, 1]` and is at most 0.5 unless targets systematically score
/// below non-targets.
pub fn compute_eer(scores: &ScoreSet) -> Result<f64> {
    let (mut targets, mut non_targets) = scores.split();
    if targets.is_empty() || non_targets.is_empty() {
        return Err(Error::Input(format!(
            "EER needs both labels; got {} target and {} non-target scores",
            targets.len(),
            non_targets.len()
        )));
    }
    if scores.entries.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    targets.sort_by(f64::total_cmp);
    non_targets.sort_by(f64::total_cmp);
    let nt = targets.len() as f64;
    let nn = non_targets.len() as f64;

    let mut thresholds: Vec<f64> = targets.iter().chain(&non_targets).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let operating_point = |t: f64| {
        let rejected_targets = targets.partition_point(|&s| s < t) as f64;
        let accepted_non_targets = nn - non_targets.partition_point(|&s| s < t) as f64;
        (accepted_non_targets / nn, rejected_targets / nt)
    };

    let mut prev = operating_point(thresholds[0]);
    for &t in &thresholds {
        let (far, frr) = operating_point(t);
        let gap = far - frr;
        if gap <= 0.0 {
            if gap == 0.0 {
                return Ok(far);
            }
            let prev_gap = prev.0 - prev.1;
            let s = prev_gap / (prev_gap - gap);
            return Ok(prev.0 + s * (far - prev.0));
        }
        prev = (far, frr);
    }
    unreachable!("the +inf threshold rejects everything, so FAR - FRR ends at -1")
}
