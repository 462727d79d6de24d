//! Instruction to executed stages: prompt, translate, validate, solve.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{ExactResolver, PartResolver, Scene, Snapshot};
use crate::fixtures::{MockMap, PromptTemplate};
use crate::geometry::RigidMotion;
use crate::language::{parse_stages, Expr, Language, LanguageError, Sort, TypedExpr, TypedNode, VerdictRecord};
use crate::retrieval::{OracleSegmenter, PartDatabase};
use crate::solver::{partition_moving_static, solve_with, SolveConfig, SolveResult};

/// Environment variable holding the remote translation endpoint URL.
pub const ENDPOINT_ENV: &str = "SEAM_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("no scripted response for instruction `{0}`")]
    UnknownInstruction(String),
    #[error("translation service: {0}")]
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationRequest<'a> {
    pub instruction: &'a str,
    pub scene_summary: &'a str,
    pub prompt: &'a str,
    /// Zero-based attempt number for this instruction.
    #[serde(skip)]
    pub attempt: usize,
}

pub trait TranslationClient {
    fn translate(&self, request: &TranslationRequest) -> Result<String, ClientError>;
}

/// Scripted client: the n-th attempt gets the n-th response (the last one
/// repeats).
#[derive(Debug, Clone, Default)]
pub struct MockClient {
    pub map: MockMap,
}

impl MockClient {
    pub fn new(map: MockMap) -> Self {
        Self { map }
    }
}

impl TranslationClient for MockClient {
    fn translate(&self, request: &TranslationRequest) -> Result<String, ClientError> {
        let responses = self
            .map
            .responses
            .get(request.instruction)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| ClientError::UnknownInstruction(request.instruction.to_owned()))?;
        Ok(responses[request.attempt.min(responses.len() - 1)].clone())
    }
}

/// JSON-over-HTTP client: POSTs `{instruction, scene_summary, prompt}` and
/// reads `{program}`.
#[derive(Debug, Clone)]
pub struct RemoteClient {
    pub endpoint: String,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct RemoteReply {
    program: String,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout,
        }
    }

    pub fn from_env(timeout: Duration) -> Result<Self, ClientError> {
        let endpoint =
            std::env::var(ENDPOINT_ENV).map_err(|_| ClientError::Remote(format!("{ENDPOINT_ENV} is not set")))?;
        Ok(Self::new(endpoint, timeout))
    }
}

impl TranslationClient for RemoteClient {
    fn translate(&self, request: &TranslationRequest) -> Result<String, ClientError> {
        let reply: RemoteReply = ureq::post(&self.endpoint)
            .timeout(self.timeout)
            .send_json(request)
            .map_err(|e| ClientError::Remote(e.to_string()))?
            .into_json()
            .map_err(|e| ClientError::Remote(e.to_string()))?;
        Ok(reply.program)
    }
}

/// Part inventory, one line per part in name order.
pub fn scene_summary(scene: &Scene) -> String {
    if scene.parts.is_empty() {
        return "(no parts)\n".to_owned();
    }
    let mut out = String::new();
    for (name, part) in &scene.parts {
        let grasped = if part.grasped { " (grasped)" } else { "" };
        writeln!(out, "- {name}{grasped}").unwrap();
    }
    out
}

pub fn build_prompt(instruction: &str, scene: &Scene, template: &PromptTemplate) -> String {
    let mut out = String::new();
    writeln!(out, "Instruction: {instruction}\n").unwrap();
    writeln!(out, "Scene parts:\n{}", scene_summary(scene)).unwrap();
    writeln!(out, "Reference atomic actions:").unwrap();
    for (i, a) in template.atomic_actions.iter().enumerate() {
        writeln!(out, "\n{}. {}\n{}", i + 1, a.action, a.template).unwrap();
        for note in &a.notes {
            writeln!(out, "{note}").unwrap();
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solve: SolveConfig,
    pub max_attempts: usize,
    /// Residual below which the final cost stage counts as achieved.
    pub success_threshold: f64,
    /// Fuzzy part lookup; exact names only when absent.
    pub parts: Option<PartDatabase>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            max_attempts: 3,
            success_threshold: 1e-2,
            parts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub program: String,
    pub verdict: VerdictRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub program: String,
    pub sort: Sort,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub open_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskTrace {
    pub instruction: String,
    pub candidates: Vec<CandidateRecord>,
    pub stages: Vec<StageRecord>,
    pub final_snapshot: Snapshot,
    /// Cost residual of the last cost stage, if any ran.
    pub residual: Option<f64>,
    pub success: bool,
}

impl TaskTrace {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("no valid program after {} attempts", trace.candidates.len())]
    TranslationFailed { trace: Box<TaskTrace> },
    #[error(transparent)]
    Client(#[from] ClientError),
}

fn rejection_note(reason: &str) -> String {
    format!("\nThe previous program was rejected: {reason}\nReply with a corrected program.\n")
}

fn calls(expr: &TypedExpr, word: &str) -> bool {
    let mut found = false;
    expr.visit(&mut |e| {
        if matches!(&e.node, TypedNode::Call { word: w, .. } if w == word) {
            found = true;
        }
    });
    found
}

fn release(scene: &mut Scene) {
    scene.gripper.open_fraction = 1.0;
    for part in scene.parts.values_mut() {
        part.grasped = false;
    }
}

fn check_stages(lang: &Language, program: &str) -> Result<Vec<(Expr, TypedExpr)>, LanguageError> {
    parse_stages(program)?
        .into_iter()
        .map(|e| {
            let typed = lang.check(&e)?;
            Ok((e, typed))
        })
        .collect()
}

/// Translate, validate and execute one instruction against `scene`.
pub fn run_task(
    instruction: &str,
    scene: &Scene,
    client: &dyn TranslationClient,
    template: &PromptTemplate,
    cfg: &RunConfig,
) -> Result<TaskTrace, PipelineError> {
    let lang = Language::default();
    let base_prompt = build_prompt(instruction, scene, template);
    let summary = scene_summary(scene);
    let mut candidates = Vec::new();
    let mut prompt = base_prompt.clone();
    let mut accepted: Option<Vec<(Expr, TypedExpr)>> = None;
    for attempt in 0..cfg.max_attempts.max(1) {
        let program = client.translate(&TranslationRequest {
            instruction,
            scene_summary: &summary,
            prompt: &prompt,
            attempt,
        })?;
        let verdict = check_stages(&lang, &program);
        candidates.push(CandidateRecord {
            program,
            verdict: VerdictRecord {
                accepted: verdict.is_ok(),
                reason: verdict.as_ref().err().map(LanguageError::to_string),
            },
        });
        match verdict {
            Ok(stages) => {
                accepted = Some(stages);
                break;
            }
            Err(e) => prompt = base_prompt.clone() + &rejection_note(&e.to_string()),
        }
    }

    let mut scene = scene.clone();
    let Some(stages) = accepted else {
        return Err(PipelineError::TranslationFailed {
            trace: Box::new(TaskTrace {
                instruction: instruction.to_owned(),
                candidates,
                stages: Vec::new(),
                final_snapshot: scene.snapshot(),
                residual: None,
                success: false,
            }),
        });
    };

    let segmenter = cfg.parts.clone().map(OracleSegmenter::new);
    let resolver: &dyn PartResolver = match &segmenter {
        Some(s) => s,
        None => &ExactResolver,
    };
    let mut records = Vec::new();
    let mut residual = None;
    let mut failed = false;
    for (source, stage) in &stages {
        let snapshot = scene.snapshot();
        scene.history.push(snapshot);
        let program = source.to_string();
        let mut record = StageRecord {
            program,
            sort: stage.sort,
            solve: None,
            error: None,
            open_fraction: 0.0,
        };
        if stage.sort == Sort::Void {
            if calls(stage, "gripper_open") {
                release(&mut scene);
            } else {
                scene.gripper.open_fraction = 0.0;
            }
        } else {
            if calls(stage, "gripper_close_first_cost") {
                scene.gripper.open_fraction = 0.0;
            }
            if calls(stage, "gripper_open_cost") {
                release(&mut scene);
            }
            match solve_with(stage, &scene, &cfg.solve, resolver) {
                Ok(result) => {
                    let motion = RigidMotion::between(&scene.gripper.pose(), &result.pose);
                    let moving = partition_moving_static(&scene).0;
                    scene = scene.apply_motion(&motion, &moving);
                    residual = Some(result.cost_term);
                    record.solve = Some(result);
                }
                Err(e) => {
                    record.error = Some(e.to_string());
                    failed = true;
                }
            }
        }
        record.open_fraction = scene.gripper.open_fraction;
        records.push(record);
        if failed {
            break;
        }
    }
    let success = !failed && residual.is_none_or(|r| r < cfg.success_threshold);
    Ok(TaskTrace {
        instruction: instruction.to_owned(),
        candidates,
        stages: records,
        final_snapshot: scene.snapshot(),
        residual,
        success,
    })
}
