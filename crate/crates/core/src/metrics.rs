//! Action-generalizability and comprehensibility of representations.
//!
//! `AG = 1 − |V|/T` where `|V|` counts the core vocabulary; `VC = N_succ/T`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{Vocabulary, VocabularyDocument};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("task count must be at least 1")]
    ZeroTasks,
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskOutcome {
    pub task: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationProfile {
    pub name: String,
    pub vocabulary: Vocabulary,
    pub has_host_escape: bool,
    pub task_outcomes: Vec<TaskOutcome>,
}

impl RepresentationProfile {
    pub fn from_document(doc: &VocabularyDocument) -> Result<Self, String> {
        Ok(Self {
            name: doc.name.clone(),
            vocabulary: doc.vocabulary()?,
            has_host_escape: doc.host_escape,
            task_outcomes: Vec::new(),
        })
    }

    /// Size of the core word table; template extensions and the host escape
    /// are not counted.
    pub fn core_size(&self) -> usize {
        self.vocabulary.core().words.len()
    }

    /// Core size with a host escape counted as one extra word.
    pub fn size_with_escape(&self) -> usize {
        self.core_size() + usize::from(self.has_host_escape)
    }

    pub fn successes(&self) -> usize {
        self.task_outcomes.iter().filter(|o| o.success).count()
    }
}

pub fn action_generalizability(vocabulary_size: usize, task_count: usize) -> Result<f64, MetricsError> {
    if task_count == 0 {
        return Err(MetricsError::ZeroTasks);
    }
    Ok(1.0 - vocabulary_size as f64 / task_count as f64)
}

pub fn vlm_comprehensibility(outcomes: &[TaskOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::ZeroTasks);
    }
    Ok(outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len() as f64)
}

/// One judged representation for one task, as recorded in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Judgment {
    pub task: usize,
    pub title: String,
    /// Verdict text as written by the judge.
    pub verdict: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodJudgments {
    pub method: String,
    /// Successes counted by hand when the corpus was transcribed.
    pub hand_count: usize,
    /// How a verdict maps to success for this method.
    pub rule: String,
    pub judgments: Vec<Judgment>,
}

impl MethodJudgments {
    pub fn outcomes(&self) -> Vec<TaskOutcome> {
        self.judgments
            .iter()
            .map(|j| TaskOutcome {
                task: j.task,
                success: j.success,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentCorpus {
    pub task_count: usize,
    pub methods: Vec<MethodJudgments>,
}

impl JudgmentCorpus {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, MetricsError> {
        parse_json(text, origin)
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        Self::from_json(&read(path)?, &path.display().to_string())
    }

    pub fn method(&self, name: &str) -> Option<&MethodJudgments> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Fill in task outcomes for every profile the corpus knows about.
    pub fn attach(&self, profiles: &mut [RepresentationProfile]) {
        for p in profiles {
            if let Some(m) = self.method(&p.name) {
                p.task_outcomes = m.outcomes();
            }
        }
    }
}

fn read(path: &Path) -> Result<String, MetricsError> {
    std::fs::read_to_string(path).map_err(|e| MetricsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, MetricsError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| MetricsError::Schema {
        path: origin.to_owned(),
        message: format!("{} at `{}`", e.inner(), e.path()),
    })
}

pub fn parse_profile(text: &str, origin: &str) -> Result<RepresentationProfile, MetricsError> {
    let doc: VocabularyDocument = parse_json(text, origin)?;
    RepresentationProfile::from_document(&doc).map_err(|message| MetricsError::Schema {
        path: origin.to_owned(),
        message,
    })
}

/// Load one profile file, or every `*.json` in a directory in name order.
pub fn load_profiles(path: &Path) -> Result<Vec<RepresentationProfile>, MetricsError> {
    let io = |e: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        files.retain(|p| p.extension().is_some_and(|x| x == "json"));
        files.sort();
        files
            .iter()
            .map(|f| parse_profile(&read(f)?, &f.display().to_string()))
            .collect()
    } else {
        Ok(vec![parse_profile(&read(path)?, &path.display().to_string())?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub method: String,
    pub vocabulary_size: usize,
    pub ag: f64,
    pub successes: usize,
    pub vc: f64,
}

pub fn rows(profiles: &[RepresentationProfile], task_count: usize) -> Result<Vec<MetricsRow>, MetricsError> {
    profiles
        .iter()
        .map(|p| {
            Ok(MetricsRow {
                method: p.name.clone(),
                vocabulary_size: p.core_size(),
                ag: action_generalizability(p.core_size(), task_count)?,
                successes: p.successes(),
                vc: p.successes() as f64 / task_count as f64,
            })
        })
        .collect()
}

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("method,|V|,AG,N_succ,VC\n");
    for r in rows {
        writeln!(out, "{},{},{:.6},{},{:.6}", r.method, r.vocabulary_size, r.ag, r.successes, r.vc).unwrap();
    }
    out
}

/// AG (x) against VC (y) scatter, one labeled dot per method.
pub fn to_svg(rows: &[MetricsRow]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 50.0;
    let x_of = |ag: f64| M + ag.clamp(0.0, 1.0) * (W - 2.0 * M);
    let y_of = |vc: f64| H - M - vc.clamp(0.0, 1.0) * (H - 2.0 * M);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M
    )
    .unwrap();
    writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M).unwrap();
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{v:.2}</text>"#,
            x_of(v),
            H - M + 14.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.2}</text>"#,
            M - 6.0,
            y_of(v) + 3.0
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">AG</text>"#, W / 2.0, H - 12.0).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">VC</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    for r in rows {
        let (x, y) = (x_of(r.ag), y_of(r.vc));
        writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="5" fill="steelblue"/>"#).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#, x + 8.0, y - 6.0, escape(&r.method)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ag_examples() {
        assert_eq!(action_generalizability(33, 33).unwrap(), 0.0);
        assert!((action_generalizability(11, 33).unwrap() - 22.0 / 33.0).abs() < 1e-12);
        assert_eq!(action_generalizability(0, 33).unwrap(), 1.0);
        assert_eq!(action_generalizability(40, 20).unwrap(), -1.0);
        assert_eq!(action_generalizability(1, 0), Err(MetricsError::ZeroTasks));
    }

    #[test]
    fn vc_examples() {
        let all = |s| (0..33).map(|task| TaskOutcome { task, success: s }).collect::<Vec<_>>();
        assert_eq!(vlm_comprehensibility(&all(true)).unwrap(), 1.0);
        assert_eq!(vlm_comprehensibility(&all(false)).unwrap(), 0.0);
        assert_eq!(vlm_comprehensibility(&[]), Err(MetricsError::ZeroTasks));
    }

    #[test]
    fn seam_document_core_size() {
        let p = RepresentationProfile::from_document(&VocabularyDocument::seam()).unwrap();
        assert_eq!(p.vocabulary.words.len(), 20);
        assert_eq!(p.core_size(), 11);
        assert_eq!(p.size_with_escape(), 11);
    }

    #[test]
    fn empty_profile_is_schema_error() {
        assert!(matches!(parse_profile("", "x.json"), Err(MetricsError::Schema { .. })));
        let e = parse_profile(r#"{"name": "m", "words": [{"nam": "a"}]}"#, "m.json").unwrap_err();
        assert!(e.to_string().contains("words[0]"), "{e}");
    }

    #[test]
    fn csv_layout() {
        let r = MetricsRow {
            method: "m".into(),
            vocabulary_size: 11,
            ag: 22.0 / 33.0,
            successes: 33,
            vc: 1.0,
        };
        assert_eq!(to_csv(std::slice::from_ref(&r)), "method,|V|,AG,N_succ,VC\nm,11,0.666667,33,1.000000\n");
        assert_eq!(to_svg(std::slice::from_ref(&r)), to_svg(&[r]));
    }
}
