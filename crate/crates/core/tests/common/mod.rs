#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use explain_loop::gateway::{Gateway, GatewayMode, ScriptedTransport};
use explain_loop::session::ManualClock;
use explain_loop::task::load_corpus_auto;
use explain_loop::{DemoStore, Engine, EngineSettings, Sandbox, TaskBundle};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn sql_tasks() -> Vec<TaskBundle> {
    load_corpus_auto(&fixtures().join("spider")).unwrap().1
}

pub fn python_tasks() -> Vec<TaskBundle> {
    load_corpus_auto(&fixtures().join("mbpp")).unwrap().1
}

pub fn all_tasks() -> Vec<TaskBundle> {
    let mut t = sql_tasks();
    t.extend(python_tasks());
    t
}

pub fn task(id: &str) -> TaskBundle {
    all_tasks()
        .into_iter()
        .find(|t| t.task_id == id)
        .unwrap_or_else(|| panic!("no fixture task {id}"))
}

/// An engine whose model replies come from `replies`, in order, on a
/// manual clock starting at zero.
pub fn scripted_engine(
    replies: &[&str],
    settings: EngineSettings,
) -> (Engine, Arc<ManualClock>, Arc<ScriptedTransport>) {
    let transport = Arc::new(ScriptedTransport::new(replies.iter().map(|s| s.to_string())));
    let gateway = Gateway::new(transport.clone(), None);
    let clock = Arc::new(ManualClock::new(0));
    let engine = Engine::new(
        Arc::new(gateway),
        Sandbox::default(),
        Arc::new(DemoStore::shipped()),
        clock.clone(),
        EngineSettings {
            gateway_mode: GatewayMode::Live,
            ..settings
        },
    );
    (engine, clock, transport)
}

pub fn replay_engine(cassette: &std::path::Path) -> (Engine, Arc<ManualClock>) {
    let cassette = Arc::new(explain_loop::gateway::Cassette::open(cassette).unwrap());
    let clock = Arc::new(ManualClock::new(0));
    let engine = Engine::new(
        Arc::new(Gateway::replay_only(cassette)),
        Sandbox::default(),
        Arc::new(DemoStore::shipped()),
        clock.clone(),
        EngineSettings {
            gateway_mode: GatewayMode::Replay,
            ..EngineSettings::default()
        },
    );
    (engine, clock)
}

/// Prompts checked byte-for-byte against `fixtures/golden/prompts/<name>.txt`.
pub fn golden_prompts() -> Vec<(&'static str, explain_loop::PromptBundle)> {
    use explain_loop::prompt::*;
    let store = DemoStore::shipped();
    let sql = task("sql-hs-grade");
    let py = task("py-kth-element");
    let py_code = "def kth_element(arr, n, k):\n    arr.sort()\n    return arr[k - 1]";
    vec![
        ("codegen_sql", build_codegen_prompt(&sql, &store).unwrap()),
        ("codegen_python", build_codegen_prompt(&py, &store).unwrap()),
        (
            "restatement",
            build_restatement_prompt("SELECT ID, grade FROM Highschooler", &sql.question, &store).unwrap(),
        ),
        ("description", build_description_prompt(py_code, &store).unwrap()),
        (
            "correction_sql",
            build_correction_prompt(
                "SELECT ID, grade FROM Highschooler",
                "What are the ids and grades of all high schoolers?",
                "Only show the grade.",
                &sql,
                &store,
            )
            .unwrap(),
        ),
        (
            "correction_python",
            build_correction_prompt(
                py_code,
                "The program sorts the list and returns the k-th item.",
                "The array does not need to be sorted.",
                &py,
                &store,
            )
            .unwrap(),
        ),
        (
            "vanilla_sql",
            build_vanilla_prompt(&sql, &[], &vanilla_opening(&sql)).unwrap(),
        ),
    ]
}

/// Compares against the golden file; `UPDATE_GOLDEN=1` rewrites it instead.
pub fn check_golden(relative: &str, actual: &str) -> Result<(), String> {
    let path = fixtures().join("golden").join(relative);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{} differs from the golden file", path.display()))
    }
}
