//! Part database lookup by key-phrase edit distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{CostError, PartResolver, Scene, GRIPPER};
use crate::geometry::PointCloud;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("part database has no entries")]
    EmptyDatabase,
    #[error("no scene part matches `{0}`")]
    MissingPart(String),
    #[error("invalid part database: {0}")]
    Schema(String),
}

impl From<RetrievalError> for CostError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::MissingPart(name) => CostError::MissingPart(name),
            other => CostError::MissingPart(other.to_string()),
        }
    }
}

/// Lower-case and collapse runs of whitespace to one space.
pub fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Edit distance over Unicode scalar values. Callers normalize first when
/// matching phrases.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    raw_levenshtein(&a, &b)
}

fn raw_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diag + usize::from(ca != cb)).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportPair {
    pub image: String,
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartEntry {
    pub key_phrases: Vec<String>,
    #[serde(default)]
    pub support_pairs: Vec<SupportPair>,
}

impl PartEntry {
    /// The first key phrase names the entry.
    pub fn canonical_phrase(&self) -> &str {
        &self.key_phrases[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDatabase {
    pub entries: Vec<PartEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Retrieved<'a> {
    pub index: usize,
    #[serde(skip)]
    pub entry: &'a PartEntry,
    pub matched_phrase: &'a str,
    pub distance: usize,
}

impl PartDatabase {
    pub fn new(entries: Vec<PartEntry>) -> Result<Self, RetrievalError> {
        let db = Self { entries };
        db.validate()?;
        Ok(db)
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.key_phrases.is_empty() {
                return Err(RetrievalError::Schema(format!("entries[{i}].key_phrases is empty")));
            }
            for (j, pair) in e.support_pairs.iter().enumerate() {
                if pair.image.is_empty() || pair.mask.is_empty() {
                    return Err(RetrievalError::Schema(format!("entries[{i}].support_pairs[{j}] has an empty reference")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, RetrievalError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let db: PartDatabase = serde_path_to_error::deserialize(de)
            .map_err(|e| RetrievalError::Schema(format!("{} at `{}`", e.inner(), e.path())))?;
        db.validate()?;
        Ok(db)
    }

    /// Entry holding the key phrase closest to `desc`. Ties go to the lower
    /// entry index, then the lexicographically smaller phrase.
    pub fn retrieve(&self, desc: &str) -> Result<Retrieved<'_>, RetrievalError> {
        let query: Vec<char> = normalize(desc).chars().collect();
        let mut best: Option<Retrieved> = None;
        for (index, entry) in self.entries.iter().enumerate() {
            for phrase in &entry.key_phrases {
                let p: Vec<char> = normalize(phrase).chars().collect();
                let distance = raw_levenshtein(&query, &p);
                let better = match &best {
                    None => true,
                    Some(b) => (distance, index, phrase.as_str()) < (b.distance, b.index, b.matched_phrase),
                };
                if better {
                    best = Some(Retrieved {
                        index,
                        entry,
                        matched_phrase: phrase,
                        distance,
                    });
                }
            }
        }
        best.ok_or(RetrievalError::EmptyDatabase)
    }
}

/// Fraction of the phrase length a match may differ by before it is refused.
pub const DEFAULT_THRESHOLD: f64 = 0.6;

fn within(distance: usize, phrase: &str, threshold: f64) -> bool {
    distance as f64 <= threshold * normalize(phrase).chars().count() as f64
}

/// Scene part name closest to `desc` through the database, with the
/// distance of that last hop.
pub fn oracle_part_name(scene: &Scene, desc: &str, db: &PartDatabase) -> Result<(String, usize), RetrievalError> {
    oracle_part_name_with(scene, desc, db, DEFAULT_THRESHOLD)
}

pub fn oracle_part_name_with(
    scene: &Scene,
    desc: &str,
    db: &PartDatabase,
    threshold: f64,
) -> Result<(String, usize), RetrievalError> {
    let missing = || RetrievalError::MissingPart(desc.to_owned());
    let hit = db.retrieve(desc)?;
    if !within(hit.distance, desc, threshold) {
        return Err(missing());
    }
    let phrase = hit.entry.canonical_phrase();
    let (name, distance) = scene
        .parts
        .keys()
        .map(|n| (n, levenshtein(&normalize(phrase), &normalize(n))))
        .min_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)))
        .ok_or_else(missing)?;
    if !within(distance, phrase, threshold) {
        return Err(missing());
    }
    Ok((name.clone(), distance))
}

/// Stand-in for a few-shot segmenter: returns the labeled cloud the
/// description resolves to.
pub fn oracle_segment<'s>(scene: &'s Scene, desc: &str, db: &PartDatabase) -> Result<&'s PointCloud, RetrievalError> {
    let (name, _) = oracle_part_name(scene, desc, db)?;
    Ok(&scene.parts[&name].cloud)
}

/// Segmentation port: maps a part description to a cloud.
pub trait Segmenter {
    fn segment<'s>(&self, scene: &'s Scene, desc: &str) -> Result<&'s PointCloud, RetrievalError>;
}

/// Database-backed oracle over labeled scenes. Also usable as a
/// [`PartResolver`]: exact part names win, anything else goes through the
/// database.
#[derive(Debug, Clone)]
pub struct OracleSegmenter {
    pub db: PartDatabase,
    pub threshold: f64,
}

impl OracleSegmenter {
    pub fn new(db: PartDatabase) -> Self {
        Self {
            db,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Segmenter for OracleSegmenter {
    fn segment<'s>(&self, scene: &'s Scene, desc: &str) -> Result<&'s PointCloud, RetrievalError> {
        let (name, _) = oracle_part_name_with(scene, desc, &self.db, self.threshold)?;
        Ok(&scene.parts[&name].cloud)
    }
}

impl PartResolver for OracleSegmenter {
    fn resolve(&self, scene: &Scene, name: &str) -> Result<String, CostError> {
        if scene.parts.contains_key(name) || name == GRIPPER {
            return Ok(name.to_owned());
        }
        Ok(oracle_part_name_with(scene, name, &self.db, self.threshold)?.0)
    }
}
