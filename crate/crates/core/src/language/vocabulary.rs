//! Word descriptors, grammar rules and their JSON document form.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    #[serde(alias = "pt")]
    Point,
    Vec,
    Cost,
    Scalar,
    #[serde(alias = "object")]
    String,
    Void,
}

impl Sort {
    pub const ALL: [Sort; 6] = [Sort::Point, Sort::Vec, Sort::Cost, Sort::Scalar, Sort::String, Sort::Void];

    pub fn name(self) -> &'static str {
        match self {
            Sort::Point => "point",
            Sort::Vec => "vec",
            Sort::Cost => "cost",
            Sort::Scalar => "scalar",
            Sort::String => "string",
            Sort::Void => "void",
        }
    }

    pub fn from_name(name: &str) -> Option<Sort> {
        match name {
            "point" | "pt" => Some(Sort::Point),
            "vec" => Some(Sort::Vec),
            "cost" => Some(Sort::Cost),
            "scalar" => Some(Sort::Scalar),
            "string" | "object" => Some(Sort::String),
            "void" => Some(Sort::Void),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    /// Accepted sorts, in order of preference.
    pub sorts: Vec<Sort>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
}

impl Param {
    fn required(name: &str, sorts: &[Sort]) -> Self {
        Self {
            name: name.into(),
            sorts: sorts.to_vec(),
            optional: false,
        }
    }

    fn optional(name: &str, sorts: &[Sort]) -> Self {
        Self {
            optional: true,
            ..Self::required(name, sorts)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDescriptor {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<Param>,
    /// Result sort; absent for foreign vocabularies listed only by name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Sort>,
    /// Second surface spelling of another word.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias_of: Option<String>,
    /// Word added on top of the core table (reference-template extensions).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub extension: bool,
}

impl WordDescriptor {
    fn new(name: &str, params: Vec<Param>, result: Sort) -> Self {
        Self {
            name: name.into(),
            params,
            result: Some(result),
            alias_of: None,
            extension: false,
        }
    }

    fn extension(mut self) -> Self {
        self.extension = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrammarRule {
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl GrammarRule {
    pub fn new(lhs: &str, rhs: &[&str]) -> Self {
        Self {
            lhs: lhs.into(),
            rhs: rhs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for GrammarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    pub words: Vec<WordDescriptor>,
    /// The vocabulary also allows arbitrary host-language code. Never executed.
    pub host_escape: bool,
}

impl Vocabulary {
    pub fn new(words: Vec<WordDescriptor>) -> Result<Self, String> {
        let mut seen = BTreeSet::new();
        for w in &words {
            if !seen.insert(w.name.as_str()) {
                return Err(format!("duplicate word `{}`", w.name));
            }
        }
        for w in &words {
            if let Some(target) = &w.alias_of {
                if !seen.contains(target.as_str()) {
                    return Err(format!("word `{}` aliases unknown word `{target}`", w.name));
                }
            }
        }
        Ok(Self {
            words,
            host_escape: false,
        })
    }

    pub fn lookup(&self, name: &str) -> Option<&WordDescriptor> {
        self.words.iter().find(|w| w.name == name)
    }

    /// Resolve aliases to the canonical descriptor.
    pub fn canonical(&self, name: &str) -> Option<&WordDescriptor> {
        let word = self.lookup(name)?;
        match &word.alias_of {
            Some(target) => self.lookup(target),
            None => Some(word),
        }
    }

    /// Words of the core table, without template extensions.
    pub fn core(&self) -> Vocabulary {
        Vocabulary {
            words: self.words.iter().filter(|w| !w.extension).cloned().collect(),
            host_escape: self.host_escape,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.name.as_str())
    }
}

/// Number of distinct vocabulary operations (surface spellings included).
/// A host-language escape is never counted here.
pub fn vocabulary_size(vocab: &Vocabulary) -> usize {
    vocab.words.len()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grammar {
    pub rules: Vec<GrammarRule>,
}

impl Grammar {
    pub fn new(rules: Vec<GrammarRule>) -> Self {
        Self { rules }
    }

    /// Result sort of `lhs op rhs`, if some rule derives it.
    pub fn binary_result(&self, lhs: Sort, op: &str, rhs: Sort) -> Option<Sort> {
        self.rules.iter().find_map(|r| {
            (r.rhs.len() == 3 && r.rhs[0] == lhs.name() && r.rhs[1] == op && r.rhs[2] == rhs.name())
                .then(|| Sort::from_name(&r.lhs))
                .flatten()
        })
    }

    pub fn unary_result(&self, op: &str, operand: Sort) -> Option<Sort> {
        self.rules.iter().find_map(|r| {
            (r.rhs.len() == 2 && r.rhs[0] == op && r.rhs[1] == operand.name())
                .then(|| Sort::from_name(&r.lhs))
                .flatten()
        })
    }
}

/// JSON document shared by the language module and representation profiles:
/// `{ "name", "host_escape", "words": [...], "rules": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabularyDocument {
    pub name: String,
    #[serde(default)]
    pub host_escape: bool,
    pub words: Vec<WordDescriptor>,
    #[serde(default)]
    pub rules: Vec<GrammarRule>,
}

impl VocabularyDocument {
    pub fn vocabulary(&self) -> Result<Vocabulary, String> {
        let mut v = Vocabulary::new(self.words.clone())?;
        v.host_escape = self.host_escape;
        Ok(v)
    }

    pub fn grammar(&self) -> Grammar {
        Grammar::new(self.rules.clone())
    }

    pub fn seam() -> Self {
        let vocabulary = default_vocabulary();
        Self {
            name: "seam".into(),
            host_escape: false,
            rules: default_rules(&vocabulary).rules,
            words: vocabulary.words,
        }
    }
}

/// The fixed manipulation vocabulary: the eleven core words plus the nine
/// words introduced by the atomic-action reference templates.
pub fn default_vocabulary() -> Vocabulary {
    use Sort::*;
    let part = |n: &str| Param::required(n, &[String]);
    let part_or_point = |n: &str| Param::required(n, &[String, Point]);
    let words = vec![
        WordDescriptor::new("get_axis", vec![part("part")], Vec),
        WordDescriptor::new("get_centroid", vec![part("part")], Point),
        WordDescriptor::new("get_height", vec![part("part")], Scalar),
        WordDescriptor::new(
            "move_cost",
            vec![
                part_or_point("source"),
                part_or_point("target"),
                Param::optional("offset", &[Point, Vec]),
            ],
            Cost,
        ),
        WordDescriptor::new(
            "parallel_cost",
            vec![Param::required("a", &[Vec]), Param::required("b", &[Vec])],
            Cost,
        ),
        WordDescriptor::new("get_gripper_pos", vec![], Point),
        WordDescriptor::new(
            "perpendicular_cost",
            vec![Param::required("a", &[Vec]), Param::required("b", &[Vec])],
            Cost,
        ),
        WordDescriptor::new(
            "rotate_cost",
            vec![
                Param::required("axis", &[Vec]),
                Param::required("angle", &[Scalar]),
                Param::required("reference", &[Vec]),
            ],
            Cost,
        ),
        WordDescriptor::new(
            "orbit_cost",
            vec![
                part("center_part"),
                Param::required("radius", &[Scalar]),
                part("moving_part"),
            ],
            Cost,
        ),
        WordDescriptor::new("gripper_close", vec![], Void),
        WordDescriptor::new("gripper_open", vec![], Void),
        // template extensions
        WordDescriptor {
            alias_of: Some("get_centroid".into()),
            ..WordDescriptor::new("centroid", vec![part("part")], Point).extension()
        },
        WordDescriptor::new("centroid_last", vec![part("part")], Point).extension(),
        WordDescriptor::new("get_width", vec![part("part")], Scalar).extension(),
        WordDescriptor::new("get_length", vec![part("part")], Scalar).extension(),
        WordDescriptor::new(
            "direction_of",
            vec![part_or_point("start"), part_or_point("end")],
            Vec,
        )
        .extension(),
        WordDescriptor::new(
            "move_cost_with_offset",
            vec![part("part"), Param::required("offset", &[Point, Vec])],
            Cost,
        )
        .extension(),
        WordDescriptor::new("upright_cost", vec![part("up_part"), part("down_part")], Cost).extension(),
        WordDescriptor::new("gripper_open_cost", vec![], Cost).extension(),
        WordDescriptor::new("gripper_close_first_cost", vec![], Cost).extension(),
    ];
    Vocabulary::new(words).expect("default vocabulary is well formed")
}

/// Composition rules plus one signature rule per word of `vocab`.
pub fn default_rules(vocab: &Vocabulary) -> Grammar {
    let mut rules = vec![
        GrammarRule::new("cost", &["cost", "+", "cost"]),
        GrammarRule::new("point", &["point", "+", "point"]),
        GrammarRule::new("point", &["point", "-", "point"]),
        GrammarRule::new("point", &["point", "+", "vec"]),
        GrammarRule::new("point", &["point", "-", "vec"]),
        GrammarRule::new("vec", &["vec", "*", "scalar"]),
        GrammarRule::new("vec", &["scalar", "*", "vec"]),
        GrammarRule::new("scalar", &["scalar", "+", "scalar"]),
        GrammarRule::new("scalar", &["scalar", "-", "scalar"]),
        GrammarRule::new("scalar", &["scalar", "*", "scalar"]),
        GrammarRule::new("scalar", &["-", "scalar"]),
    ];
    for w in &vocab.words {
        let Some(result) = w.result else { continue };
        let mut rhs = vec![w.name.clone()];
        rhs.extend(w.params.iter().map(|p| {
            let alts: std::vec::Vec<&str> = p.sorts.iter().map(|s| s.name()).collect();
            let joined = alts.join("|");
            if p.optional {
                format!("{joined}?")
            } else {
                joined
            }
        }));
        rules.push(GrammarRule {
            lhs: result.name().into(),
            rhs,
        });
    }
    Grammar::new(rules)
}
