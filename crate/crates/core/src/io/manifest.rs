use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord};

use crate::error::{Error, Result};

const MANIFEST_COLUMNS: [&str; 4] = ["utterance_id", "path", "speaker_id", "split"];
const TRIAL_COLUMNS: [&str; 3] = ["enrolment_utterance_id", "test_utterance_id", "label"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub utterance_id: String,
    pub path: PathBuf,
    pub speaker_id: String,
    pub split: String,
}

/// Corpus listing. Relative paths resolve against `base_dir`, the directory
/// holding the manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        self.base_dir.join(&row.path)
    }

    pub fn get(&self, utterance_id: &str) -> Option<&ManifestRow> {
        self.rows.iter().find(|r| r.utterance_id == utterance_id)
    }

    pub fn index(&self) -> HashMap<&str, &ManifestRow> {
        self.rows.iter().map(|r| (r.utterance_id.as_str(), r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialLabel {
    Target,
    NonTarget,
}

impl TrialLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialLabel::Target => "target",
            TrialLabel::NonTarget => "non-target",
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            TrialLabel::Target => TrialLabel::NonTarget,
            TrialLabel::NonTarget => TrialLabel::Target,
        }
    }
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRow {
    pub enrolment_utterance_id: String,
    pub test_utterance_id: String,
    pub label: TrialLabel,
}

/// Reads the header, checks it names exactly `expected` (any order) and
/// returns each column's position in `expected` order.
fn column_positions(headers: &StringRecord, expected: &[&str]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    for h in headers {
        if !expected.contains(&h) {
            return Err(Error::parse(1, format!("unknown column {h:?}")));
        }
        if !seen.insert(h) {
            return Err(Error::parse(1, format!("duplicate column {h:?}")));
        }
    }
    expected
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::parse(1, format!("missing column {name:?}")))
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(line, e.to_string())
}

/// Yields `(line, fields)` for every data record, fields in `expected` order.
fn records(input: &[u8], expected: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Err(Error::parse(1, "missing header row"));
    }
    let positions = column_positions(&headers, expected)?;

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let fields = positions
            .iter()
            .zip(expected)
            .map(|(&i, name)| match record.get(i) {
                Some(v) if !v.is_empty() => Ok(v.to_owned()),
                _ => Err(Error::parse(line, format!("empty field {name:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((line, fields));
    }
    Ok(out)
}

/// Parses manifest CSV (`utterance_id,path,speaker_id,split`).
pub fn parse_manifest(input: &[u8], base_dir: impl Into<PathBuf>) -> Result<Manifest> {
    let mut ids = HashMap::new();
    let mut rows = Vec::new();
    for (line, mut f) in records(input, &MANIFEST_COLUMNS)? {
        let split = f.pop().expect("four fields");
        let speaker_id = f.pop().expect("four fields");
        let path = PathBuf::from(f.pop().expect("four fields"));
        let utterance_id = f.pop().expect("four fields");
        if let Some(first) = ids.insert(utterance_id.clone(), line) {
            return Err(Error::parse(
                line,
                format!("duplicate utterance_id {utterance_id:?} (first seen on line {first})"),
            ));
        }
        rows.push(ManifestRow {
            utterance_id,
            path,
            speaker_id,
            split,
        });
    }
    Ok(Manifest {
        rows,
        base_dir: base_dir.into(),
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&bytes, base)
}

/// Parses trial CSV (`enrolment_utterance_id,test_utterance_id,label`).
pub fn parse_trials(input: &[u8]) -> Result<Vec<TrialRow>> {
    Ok(parse_trials_with_lines(input)?.into_iter().map(|(_, t)| t).collect())
}

fn parse_trials_with_lines(input: &[u8]) -> Result<Vec<(u64, TrialRow)>> {
    records(input, &TRIAL_COLUMNS)?
        .into_iter()
        .map(|(line, mut f)| {
            let label = match f.pop().expect("three fields").as_str() {
                "target" => TrialLabel::Target,
                "non-target" => TrialLabel::NonTarget,
                other => {
                    return Err(Error::parse(
                        line,
                        format!("label {other:?} is neither \"target\" nor \"non-target\""),
                    ))
                }
            };
            let test_utterance_id = f.pop().expect("three fields");
            let enrolment_utterance_id = f.pop().expect("three fields");
            Ok((
                line,
                TrialRow {
                    enrolment_utterance_id,
                    test_utterance_id,
                    label,
                },
            ))
        })
        .collect()
}

/// Loads trials and checks every id resolves against `manifest`.
pub fn load_trials(path: impl AsRef<Path>, manifest: &Manifest) -> Result<Vec<TrialRow>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let trials = parse_trials_with_lines(&bytes)?;
    let index = manifest.index();
    for (line, t) in &trials {
        for id in [&t.enrolment_utterance_id, &t.test_utterance_id] {
            if !index.contains_key(id.as_str()) {
                return Err(Error::parse(
                    *line,
                    format!("utterance {id:?} is not in the manifest"),
                ));
            }
        }
    }
    Ok(trials.into_iter().map(|(_, t)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let m = parse_manifest(
            b"utterance_id,path,speaker_id,split\n\
              u1,a/u1.wav,s1,enrolment\n\
              u2,a/u2.wav,s1,test\n\
              u3,b/u3.wav,s2,test\n",
            "/data",
        )
        .unwrap();
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.rows[2].speaker_id, "s2");
        assert_eq!(m.resolve(&m.rows[0]), PathBuf::from("/data/a/u1.wav"));
    }

    #[test]
    fn column_order_is_free() {
        let m = parse_manifest(b"split,speaker_id,path,utterance_id\ntest,s1,x.wav,u1\n", "").unwrap();
        assert_eq!(m.rows[0].utterance_id, "u1");
        assert_eq!(m.rows[0].path, PathBuf::from("x.wav"));
    }

    #[test]
    fn duplicate_id_names_line() {
        let e = parse_manifest(
            b"utterance_id,path,speaker_id,split\nu1,a.wav,s1,test\nu1,b.wav,s1,test\n",
            "",
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn malformed_rows() {
        let e = parse_manifest(b"utterance_id,path,speaker_id,split\nu1,a.wav,s1\n", "").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_manifest(b"utterance_id,path,speaker_id,split\nu1,,s1,test\n", "").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_manifest(b"utterance_id,path,speaker\nu1,a,s1\n", "").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        assert!(parse_manifest(b"", "").is_err());
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_manifest(b"utterance_id,path,speaker_id,split\n", "").unwrap().rows.is_empty());
    }

    #[test]
    fn trials() {
        let t = parse_trials(
            b"enrolment_utterance_id,test_utterance_id,label\ne1,t1,target\ne1,t2,non-target\n",
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].label, TrialLabel::NonTarget);
        let e = parse_trials(b"enrolment_utterance_id,test_utterance_id,label\ne1,t1,maybe\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn trials_must_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let m = parse_manifest(b"utterance_id,path,speaker_id,split\ne1,a.wav,s1,enrolment\n", "").unwrap();
        let p = dir.path().join("trials.csv");
        fs::write(&p, "enrolment_utterance_id,test_utterance_id,label\ne1,t9,target\n").unwrap();
        let e = load_trials(&p, &m).unwrap_err();
        assert!(e.to_string().contains("t9"));
    }
}
