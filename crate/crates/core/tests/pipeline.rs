use seam_core::fixtures::{self, make_scene, SceneKind};
use seam_core::language::Language;
use seam_core::pipeline::{run_task, MockClient, PipelineError, RunConfig, TaskTrace};

const CASES: [(&str, SceneKind); 4] = [
    ("put the pen into the penholder", SceneKind::PenHolder),
    ("cut the carrot with the grasped knife", SceneKind::CarrotKnife),
    ("sort the red cube", SceneKind::CubeTarget),
    ("fit the lid on the teapot", SceneKind::TeapotLid),
];

fn run(instruction: &str, kind: SceneKind) -> Result<TaskTrace, PipelineError> {
    let client = MockClient::new(fixtures::mock_map());
    run_task(
        instruction,
        &make_scene(kind, fixtures::DEFAULT_SEED),
        &client,
        &fixtures::prompt_template(),
        &RunConfig::default(),
    )
}

#[test]
fn runs_are_deterministic() {
    for (instruction, kind) in CASES {
        let a = run(instruction, kind).unwrap();
        let b = run(instruction, kind).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{instruction}");
    }
}

#[test]
fn executed_stages_revalidate() {
    let lang = Language::default();
    for (instruction, kind) in CASES {
        let trace = run(instruction, kind).unwrap();
        let last = trace.candidates.last().unwrap();
        assert!(last.verdict.accepted);
        for stage in &trace.stages {
            let typed = lang.compile(&stage.program).unwrap();
            assert_eq!(typed.sort, stage.sort);
        }
    }
}

#[test]
fn carrot_knife_is_solved_tightly() {
    let trace = run("cut the carrot with the grasped knife", SceneKind::CarrotKnife).unwrap();
    assert!(trace.success);
    assert!(trace.residual.unwrap() < 1e-3, "{:?}", trace.residual);
}

#[test]
fn pen_reaches_the_holder() {
    let trace = run("put the pen into the penholder", SceneKind::PenHolder).unwrap();
    assert!(trace.success);
    assert!(trace.residual.unwrap() < 1e-2, "{:?}", trace.residual);
}

#[test]
fn cube_recovers_from_a_bad_first_answer_and_releases() {
    let trace = run("sort the red cube", SceneKind::CubeTarget).unwrap();
    assert_eq!(trace.candidates.len(), 2);
    assert!(!trace.candidates[0].verdict.accepted);
    assert!(trace.candidates[1].verdict.accepted);
    assert_eq!(trace.stages.len(), 2);
    assert_eq!(trace.stages[1].open_fraction, 1.0);
    assert!(trace.success);
}

#[test]
fn garbage_exhausts_attempts() {
    match run("recite a poem", SceneKind::PenHolder) {
        Err(PipelineError::TranslationFailed { trace }) => {
            assert_eq!(trace.candidates.len(), 3);
            assert!(trace.candidates.iter().all(|c| !c.verdict.accepted));
            assert!(trace.stages.is_empty());
        }
        other => panic!("{other:?}"),
    }
}
