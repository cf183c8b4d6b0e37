use mcadams_core::io::{read_wav, sample_to_word, write_wav};
use mcadams_core::{anonymise_utterance, AnonymisationConfig, AudioBuffer, Error, McAdamsCoefficient, SpeakerContext};

#[test]
fn anonymised_file_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<f64> = (0..8000).map(|i| 0.3 * (i as f64 * 0.07).sin() + 0.1 * (i as f64 * 0.9).sin()).collect();
    let input = AudioBuffer::new(samples, 16_000);
    let ctx = SpeakerContext::with_alpha("s1", McAdamsCoefficient::BASELINE);
    let out = anonymise_utterance(&input, &ctx, &AnonymisationConfig::default()).unwrap();

    let path = dir.path().join("out.wav");
    write_wav(&path, &out).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.sample_rate_hz, 16_000);
    assert_eq!(back.len(), input.len());
    for (a, b) in out.samples.iter().zip(&back.samples) {
        assert_eq!(sample_to_word(*a), sample_to_word(*b));
    }
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 44 + 2 * 8000);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = read_wav(dir.path().join("nope.wav")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
}
