use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::eer::{compute_eer, score_trials, ScoreSet, ScoredTrial};
use super::embedding::{embed_utterance, SpeakerEmbedding};
use super::lsd::log_spectral_distortion;
use crate::anonymizer::{anonymise_utterance, sample_alpha, worker_pool, AnonymisationConfig};
use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};
use crate::io::{read_wav, Manifest, TrialRow};

/// Attack scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Ignorant adversary: original enrolment against anonymised test.
    OriginalAnonymised,
    /// Semi-informed adversary: both sides anonymised, with different configs.
    AnonymisedAnonymised,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "o-a" => Ok(Scenario::OriginalAnonymised),
            "a-a" => Ok(Scenario::AnonymisedAnonymised),
            other => Err(Error::Config(format!("unknown scenario {other:?}, expected o-a or a-a"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::OriginalAnonymised => "o-a",
            Scenario::AnonymisedAnonymised => "a-a",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub speaker_id: String,
    pub audio: AudioBuffer,
}

/// Reads every manifest utterance referenced by `trials`.
pub fn load_utterances(manifest: &Manifest, trials: &[TrialRow]) -> Result<Vec<Utterance>> {
    let wanted: BTreeSet<&str> = trials
        .iter()
        .flat_map(|t| [t.enrolment_utterance_id.as_str(), t.test_utterance_id.as_str()])
        .collect();
    let index = manifest.index();
    wanted
        .into_iter()
        .map(|id| {
            let row = index
                .get(id)
                .ok_or_else(|| Error::Input(format!("utterance {id:?} is not in the manifest")))?;
            Ok(Utterance {
                id: id.to_owned(),
                speaker_id: row.speaker_id.clone(),
                audio: read_wav(manifest.resolve(row))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub scenario: Scenario,
    pub scores: Vec<ScoredTrial>,
    pub original_scores: Vec<ScoredTrial>,
    pub eer: f64,
    pub eer_original: f64,
    /// Mean log-spectral distortion of the anonymised test utterances.
    pub mean_lsd_db: f64,
}

impl EvalOutcome {
    pub fn summary_csv(&self) -> String {
        format!(
            "metric,value\nscenario,{}\ntrials,{}\neer_original,{}\neer,{}\nmean_lsd_db,{}\n",
            self.scenario,
            self.scores.len(),
            self.eer_original,
            self.eer,
            self.mean_lsd_db
        )
    }
}

fn bind_split(config: &AnonymisationConfig, default: &str) -> AnonymisationConfig {
    if config.split.is_empty() {
        config.with_split(default)
    } else {
        config.clone()
    }
}

/// Runs one scenario over in-memory utterances.
///
/// Test utterances are anonymised with `test_config` (split label "test"
/// unless the config names one). In the a-a scenario enrolment utterances
/// are anonymised with `enrolment_config` (default label "enrolment"),
/// which gives every speaker a different coefficient on each side.
pub fn evaluate(
    utterances: &[Utterance],
    trials: &[TrialRow],
    scenario: Scenario,
    enrolment_config: &AnonymisationConfig,
    test_config: &AnonymisationConfig,
    jobs: usize,
) -> Result<EvalOutcome> {
    let enrolment_config = bind_split(enrolment_config, "enrolment");
    let test_config = bind_split(test_config, "test");
    let by_id: HashMap<&str, &Utterance> = utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    let ids = |pick: fn(&TrialRow) -> &str| -> Result<Vec<&Utterance>> {
        let set: BTreeSet<&str> = trials.iter().map(pick).collect();
        set.into_iter()
            .map(|id| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("no audio for utterance {id:?}")))
            })
            .collect()
    };
    let enrolment_side = ids(|t| t.enrolment_utterance_id.as_str())?;
    let test_side = ids(|t| t.test_utterance_id.as_str())?;

    let pool = worker_pool(jobs)?;
    pool.install(|| -> Result<EvalOutcome> {
        let all: BTreeSet<&str> = enrolment_side.iter().chain(&test_side).map(|u| u.id.as_str()).collect();
        let original: HashMap<String, SpeakerEmbedding> = all
            .into_par_iter()
            .map(|id| Ok((id.to_owned(), embed_utterance(&by_id[id].audio)?)))
            .collect::<Result<_>>()?;

        let anonymise = |u: &Utterance, config: &AnonymisationConfig| -> Result<AudioBuffer> {
            let ctx = sample_alpha(config, &u.speaker_id)?;
            anonymise_utterance(&u.audio, &ctx, config)
        };

        let test_results: Vec<(String, SpeakerEmbedding, f64)> = test_side
            .par_iter()
            .map(|u| {
                let anon = anonymise(u, &test_config)?;
                let lsd = log_spectral_distortion(&u.audio, &anon)?;
                Ok((u.id.clone(), embed_utterance(&anon)?, lsd))
            })
            .collect::<Result<_>>()?;
        let mean_lsd_db = if test_results.is_empty() {
            0.0
        } else {
            test_results.iter().map(|r| r.2).sum::<f64>() / test_results.len() as f64
        };
        let test: HashMap<String, SpeakerEmbedding> =
            test_results.into_iter().map(|(id, e, _)| (id, e)).collect();

        let enrolment: HashMap<String, SpeakerEmbedding> = match scenario {
            Scenario::OriginalAnonymised => original.clone(),
            Scenario::AnonymisedAnonymised => enrolment_side
                .par_iter()
                .map(|u| Ok((u.id.clone(), embed_utterance(&anonymise(u, &enrolment_config)?)?)))
                .collect::<Result<_>>()?,
        };

        let scores = score_trials(trials, &enrolment, &test)?;
        let original_scores = score_trials(trials, &original, &original)?;
        Ok(EvalOutcome {
            scenario,
            eer: compute_eer(&scores.iter().cloned().collect::<ScoreSet>())?,
            eer_original: compute_eer(&original_scores.iter().cloned().collect::<ScoreSet>())?,
            scores,
            original_scores,
            mean_lsd_db,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::TrialLabel;
    use crate::mcadams::McAdamsCoefficient;
    use crate::anonymizer::AlphaMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn utterance(id: &str, speaker: &str, coeffs: &[f64], seed: u64) -> Utterance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..8000).map(|_| rng.random_range(-0.01..0.01)).collect();
        Utterance {
            id: id.into(),
            speaker_id: speaker.into(),
            audio: AudioBuffer::new(crate::lpc::synthesize(coeffs, &e).unwrap(), 16_000),
        }
    }

    fn trial(e: &str, t: &str, label: TrialLabel) -> TrialRow {
        TrialRow {
            enrolment_utterance_id: e.into(),
            test_utterance_id: t.into(),
            label,
        }
    }

    #[test]
    fn identity_config_matches_original() {
        let p = [-1.2, 0.9, -0.3, 0.2];
        let q = [-2.0 * 0.9 * 2.0f64.cos(), 0.81];
        let utts = vec![
            utterance("a1", "a", &p, 1),
            utterance("a2", "a", &p, 2),
            utterance("b1", "b", &q, 3),
            utterance("b2", "b", &q, 4),
        ];
        let trials = vec![
            trial("a1", "a2", TrialLabel::Target),
            trial("b1", "b2", TrialLabel::Target),
            trial("a1", "b2", TrialLabel::NonTarget),
            trial("b1", "a2", TrialLabel::NonTarget),
        ];
        let identity = AnonymisationConfig {
            mode: AlphaMode::Fixed(McAdamsCoefficient::IDENTITY),
            ..Default::default()
        };
        for scenario in [Scenario::OriginalAnonymised, Scenario::AnonymisedAnonymised] {
            let out = evaluate(&utts, &trials, scenario, &identity, &identity, 2).unwrap();
            assert!((out.eer - out.eer_original).abs() <= 0.005);
            assert!(out.mean_lsd_db < 1e-3, "{}", out.mean_lsd_db);
            assert!(out.summary_csv().contains(&format!("scenario,{scenario}")));
        }
    }

    #[test]
    fn scenario_names() {
        assert_eq!("o-a".parse::<Scenario>().unwrap(), Scenario::OriginalAnonymised);
        assert_eq!("a-a".parse::<Scenario>().unwrap(), Scenario::AnonymisedAnonymised);
        assert!("x-y".parse::<Scenario>().is_err());
    }

    #[test]
    fn missing_audio_is_reported() {
        let utts = vec![utterance("a1", "a", &[-0.5], 1)];
        let trials = vec![trial("a1", "nope", TrialLabel::Target)];
        let cfg = AnonymisationConfig::default();
        let e = evaluate(&utts, &trials, Scenario::OriginalAnonymised, &cfg, &cfg, 1).unwrap_err();
        assert!(e.to_string().contains("nope"));
    }
}
