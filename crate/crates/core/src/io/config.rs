use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::anonymizer::{AlphaMode, AnonymisationConfig};
use crate::error::{Error, Result};
use crate::mcadams::McAdamsCoefficient;

const KEYS: [&str; 8] = [
    "alpha", "alpha_min", "alpha_max", "lpc_order", "frame_ms", "hop_ms", "seed", "split",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<AnonymisationConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Parses flat `key = value` text. Blank lines and lines starting with `#`
/// are ignored; unknown or repeated keys are errors. Omitted keys keep the
/// defaults of [`AnonymisationConfig::default`].
pub fn parse_config(text: &str) -> Result<AnonymisationConfig> {
    let mut values: HashMap<&str, (u64, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let Some(&key) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::parse(line_no, format!("unknown key {key:?}")));
        };
        if let Some((first, _)) = values.insert(key, (line_no, value)) {
            return Err(Error::parse(
                line_no,
                format!("duplicate key {key:?} (first set on line {first})"),
            ));
        }
    }

    let mut config = AnonymisationConfig::default();

    let alpha = number::<f64>(&values, "alpha")?;
    let alpha_min = number::<f64>(&values, "alpha_min")?;
    let alpha_max = number::<f64>(&values, "alpha_max")?;
    config.mode = match (alpha, alpha_min, alpha_max) {
        (None, None, None) => config.mode,
        (Some((_, a)), None, None) => AlphaMode::Fixed(McAdamsCoefficient::new(a)?),
        (None, Some((_, lo)), Some((_, hi))) => AlphaMode::uniform(lo, hi)?,
        (Some((line, _)), _, _) => {
            return Err(Error::parse(line, "alpha cannot be combined with alpha_min/alpha_max"))
        }
        (None, Some((line, _)), None) | (None, None, Some((line, _))) => {
            return Err(Error::parse(line, "alpha_min and alpha_max must be given together"))
        }
    };
    if let Some((_, order)) = number::<usize>(&values, "lpc_order")? {
        config.lpc_order = order;
    }
    if let Some((_, ms)) = number::<f64>(&values, "frame_ms")? {
        config.frame_ms = ms;
    }
    if let Some((_, ms)) = number::<f64>(&values, "hop_ms")? {
        config.hop_ms = ms;
    }
    if let Some((_, seed)) = values.get("seed") {
        config.secret_seed = seed.as_bytes().to_vec();
    }
    if let Some((_, split)) = values.get("split") {
        config.split = (*split).to_owned();
    }
    config.validate()?;
    Ok(config)
}

fn number<T: FromStr>(values: &HashMap<&str, (u64, &str)>, key: &str) -> Result<Option<(u64, T)>> {
    match values.get(key) {
        None => Ok(None),
        Some(&(line, v)) => v
            .parse::<T>()
            .map(|x| Some((line, x)))
            .map_err(|_| Error::parse(line, format!("{key}: {v:?} is not a valid number"))),
    }
}
