use serde::{Deserialize, Serialize};

use super::{DemoStore, Message, PromptBundle, PromptError, Purpose, Role};
use crate::task::{Language, TaskBundle, TaskContext, TaskError};

pub const RESTATEMENT_INSTRUCTION: &str = "Translate the following SQL into question. The question should be consistent with the SQL and follow a similar style as the original question.";

pub const DESCRIPTION_INSTRUCTION: &str = "You are an expert Python programmer. Your task is to write a description for the following Python program. The description should be accurate, concise, and easily understood by non-programmers.";

const CODEGEN_SQL: &str =
    "Write a SQLite query that answers the question using the database described below. Reply with the SQL query only.";
const CODEGEN_PYTHON: &str =
    "Write a Python function that solves the task and passes the given tests. Reply with the Python code only.";
const CORRECT_SQL: &str = "The SQL query below was written for the question but may be wrong. The explanation says what the query does, and the feedback comes from a user who read that explanation. Rewrite the query so that it follows the feedback. Reply with the corrected SQL query only.";
const CORRECT_PYTHON: &str = "The Python program below was written for the task but may be wrong. The explanation says what the program does, and the feedback comes from a user who read that explanation. Rewrite the program so that it follows the feedback. Reply with the corrected Python code only.";
const VANILLA_SQL: &str =
    "You are a helpful assistant that writes SQLite queries. Put the query in a fenced code block.";
const VANILLA_PYTHON: &str =
    "You are a helpful assistant that writes Python code. Put the code in a fenced code block.";

/// One user message and the model's reply in a free-chat session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub user: String,
    pub assistant: String,
}

/// Schema and sample rows for SQL, the assert list for Python.
pub fn render_task_context(task: &TaskBundle) -> String {
    match &task.context {
        TaskContext::Sql { schema_text, .. } => format!(
            "Database schema:\n{}\n\nSample rows:\n{}",
            schema_text.trim_end(),
            task.context.render_samples().trim_end()
        ),
        TaskContext::Python { .. } => task.context.test_assertions().join("\n"),
    }
}

fn task_block(language: Language, question: &str, context: Option<&str>) -> String {
    match (language, context) {
        (Language::Sql, Some(ctx)) => format!("{ctx}\n\nQuestion: {question}"),
        (Language::Sql, None) => format!("Question: {question}"),
        (Language::Python, Some(ctx)) => format!("Task: {question}\nYour code should pass these tests:\n{ctx}"),
        (Language::Python, None) => format!("Task: {question}"),
    }
}

fn check_task(task: &TaskBundle) -> Result<(), PromptError> {
    let reason = if task.question.trim().is_empty() {
        "question is empty"
    } else if task.language == Language::Python && task.context.test_assertions().is_empty() {
        "python task has no test cases"
    } else {
        return Ok(());
    };
    Err(TaskError::MalformedTask {
        task_id: task.task_id.clone(),
        reason: reason.into(),
    }
    .into())
}

pub fn build_codegen_prompt(task: &TaskBundle, store: &DemoStore) -> Result<PromptBundle, PromptError> {
    check_task(task)?;
    let demos: Vec<_> = store.codegen_demos(task.language).collect();
    if demos.is_empty() {
        return Err(PromptError::MissingDemos {
            purpose: Purpose::CodeGen,
            language: Some(task.language),
        });
    }
    let instruction = match task.language {
        Language::Sql => CODEGEN_SQL,
        Language::Python => CODEGEN_PYTHON,
    };
    let mut messages = vec![Message::new(Role::System, instruction)];
    for d in demos {
        messages.push(Message::new(
            Role::User,
            task_block(d.language, &d.question, Some(&d.context)),
        ));
        messages.push(Message::new(Role::Assistant, d.code.clone()));
    }
    let ctx = render_task_context(task);
    messages.push(Message::new(
        Role::User,
        task_block(task.language, &task.question, Some(&ctx)),
    ));
    PromptBundle::new(Purpose::CodeGen, messages)
}

fn restate_input(sql: &str, question: &str) -> String {
    format!("SQL: {sql}\nOriginal Question: {question}")
}

pub fn build_restatement_prompt(
    sql: &str,
    original_question: &str,
    store: &DemoStore,
) -> Result<PromptBundle, PromptError> {
    if sql.trim().is_empty() {
        return Err(PromptError::EmptyInput("sql"));
    }
    if original_question.trim().is_empty() {
        return Err(PromptError::EmptyInput("original question"));
    }
    if store.restatement.is_empty() {
        return Err(PromptError::MissingDemos {
            purpose: Purpose::RestateExplain,
            language: Some(Language::Sql),
        });
    }
    let mut messages = vec![Message::new(Role::System, RESTATEMENT_INSTRUCTION)];
    for d in &store.restatement {
        messages.push(Message::new(Role::User, restate_input(&d.sql, &d.question)));
        messages.push(Message::new(Role::Assistant, d.restated.clone()));
    }
    messages.push(Message::new(Role::User, restate_input(sql, original_question)));
    PromptBundle::new(Purpose::RestateExplain, messages)
}

pub fn build_description_prompt(python_code: &str, store: &DemoStore) -> Result<PromptBundle, PromptError> {
    if python_code.trim().is_empty() {
        return Err(PromptError::EmptyInput("python code"));
    }
    if store.description.is_empty() {
        return Err(PromptError::MissingDemos {
            purpose: Purpose::DescribeExplain,
            language: Some(Language::Python),
        });
    }
    let mut messages = vec![Message::new(Role::System, DESCRIPTION_INSTRUCTION)];
    for d in &store.description {
        messages.push(Message::new(Role::User, format!("Python Program:\n{}", d.program)));
        messages.push(Message::new(Role::Assistant, d.description.clone()));
    }
    messages.push(Message::new(Role::User, format!("Python Program:\n{python_code}")));
    PromptBundle::new(Purpose::DescribeExplain, messages)
}

fn correction_input(block: &str, code: &str, explanation: &str, feedback: &str) -> String {
    format!("{block}\n\nCode:\n{code}\nExplanation: {explanation}\nFeedback: {feedback}")
}

/// The code, explanation and feedback are embedded verbatim.
pub fn build_correction_prompt(
    code: &str,
    explanation: &str,
    feedback: &str,
    task: &TaskBundle,
    store: &DemoStore,
) -> Result<PromptBundle, PromptError> {
    if feedback.trim().is_empty() {
        return Err(PromptError::EmptyFeedback);
    }
    if code.trim().is_empty() {
        return Err(PromptError::EmptyInput("code"));
    }
    if explanation.trim().is_empty() {
        return Err(PromptError::EmptyInput("explanation"));
    }
    check_task(task)?;
    let demos: Vec<_> = store.corrections(task.language).collect();
    if demos.is_empty() {
        return Err(PromptError::MissingDemos {
            purpose: Purpose::ErrorCorrect,
            language: Some(task.language),
        });
    }
    let instruction = match task.language {
        Language::Sql => CORRECT_SQL,
        Language::Python => CORRECT_PYTHON,
    };
    let mut messages = vec![Message::new(Role::System, instruction)];
    for d in demos {
        let block = task_block(d.language, &d.question, None);
        messages.push(Message::new(
            Role::User,
            correction_input(&block, &d.code, &d.explanation, &d.feedback),
        ));
        messages.push(Message::new(Role::Assistant, d.corrected.clone()));
    }
    let ctx = render_task_context(task);
    let block = task_block(task.language, &task.question, Some(&ctx));
    messages.push(Message::new(
        Role::User,
        correction_input(&block, code, explanation, feedback),
    ));
    PromptBundle::new(Purpose::ErrorCorrect, messages)
}

/// First message of a free-chat session: the task, with no demonstrations.
pub fn vanilla_opening(task: &TaskBundle) -> String {
    task_block(task.language, &task.question, Some(&render_task_context(task)))
}

/// Free chat: the whole history so far, then `message`. With an empty
/// history the message should be [`vanilla_opening`].
pub fn build_vanilla_prompt(
    task: &TaskBundle,
    history: &[ChatExchange],
    message: &str,
) -> Result<PromptBundle, PromptError> {
    check_task(task)?;
    if message.trim().is_empty() {
        return Err(PromptError::EmptyFeedback);
    }
    let instruction = match task.language {
        Language::Sql => VANILLA_SQL,
        Language::Python => VANILLA_PYTHON,
    };
    let mut messages = vec![Message::new(Role::System, instruction)];
    for ex in history {
        messages.push(Message::new(Role::User, ex.user.clone()));
        messages.push(Message::new(Role::Assistant, ex.assistant.clone()));
    }
    messages.push(Message::new(Role::User, message));
    PromptBundle::new(Purpose::VanillaChat, messages)
}

/// Code from a model reply: the first fenced block if there is one,
/// otherwise the whole reply, trimmed.
pub fn extract_code(reply: &str) -> String {
    let Some(open) = reply.find("```") else {
        return reply.trim().to_string();
    };
    let after = &reply[open + 3..];
    // Skip the info string (```sql, ```python).
    let body = match after.find('\n') {
        Some(nl) => &after[nl + 1..],
        None => after,
    };
    let body = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    body.trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{Origin, TestCase};

    fn py_task() -> TaskBundle {
        TaskBundle {
            task_id: "py".into(),
            language: Language::Python,
            question: "Write a function to find the kth element in the given array.".into(),
            context: TaskContext::Python {
                test_cases: vec![TestCase::from_assertion(
                    "assert kth_element([12, 3, 5, 7, 19], 5, 2) == 3",
                )],
            },
            gold_code: "def kth_element(arr, n, k):\n    return arr[k - 1]\n".into(),
            difficulty: None,
            origin: Origin::MbppStyle,
        }
    }

    #[test]
    fn restatement_layout() {
        let store = DemoStore::shipped();
        let b = build_restatement_prompt("SELECT 1", "What is one?", &store).unwrap();
        assert_eq!(b.messages.len(), 1 + 2 * 13 + 1);
        assert_eq!(b.messages[0].role, Role::System);
        assert!(b.messages[0].content.starts_with(RESTATEMENT_INSTRUCTION));
        assert_eq!(
            b.messages.last().unwrap().content,
            "SQL: SELECT 1\nOriginal Question: What is one?"
        );
        assert_eq!(b.purpose, Purpose::RestateExplain);
    }

    #[test]
    fn description_keeps_demo_order() {
        let store = DemoStore::shipped();
        let b = build_description_prompt("def f():\n    return 1", &store).unwrap();
        let demo_inputs: Vec<_> = b
            .messages
            .iter()
            .skip(1)
            .step_by(2)
            .take(8)
            .map(|m| m.content.clone())
            .collect();
        let expected: Vec<_> = store
            .description
            .iter()
            .map(|d| format!("Python Program:\n{}", d.program))
            .collect();
        assert_eq!(demo_inputs, expected);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let store = DemoStore::shipped();
        assert!(matches!(
            build_restatement_prompt(" ", "q", &store),
            Err(PromptError::EmptyInput(_))
        ));
        assert!(matches!(
            build_description_prompt("\n\t ", &store),
            Err(PromptError::EmptyInput(_))
        ));
        let t = py_task();
        assert!(matches!(
            build_correction_prompt("x", "y", "", &t, &store),
            Err(PromptError::EmptyFeedback)
        ));
        assert!(matches!(
            build_correction_prompt("x", "y", "   ", &t, &store),
            Err(PromptError::EmptyFeedback)
        ));
        let mut blank = py_task();
        blank.question.clear();
        assert!(matches!(
            build_codegen_prompt(&blank, &store),
            Err(PromptError::MalformedTask(_))
        ));
    }

    #[test]
    fn correction_embeds_the_triple_verbatim() {
        let store = DemoStore::shipped();
        let code = "def kth_element(arr, n, k):\n    arr.sort()\n    return arr[k - 1]\n";
        let explanation = "This program sorts the array and returns the kth item.";
        let feedback = "The array does not need to be sorted.";
        let b = build_correction_prompt(code, explanation, feedback, &py_task(), &store).unwrap();
        let last = &b.messages.last().unwrap().content;
        assert!(last.contains(code));
        assert!(last.contains(explanation));
        assert!(last.contains(feedback));
        assert!(last.contains("assert kth_element"));
        assert_eq!(b.messages.len(), 1 + 2 * 4 + 1);
    }

    #[test]
    fn missing_codegen_demos() {
        let mut store = DemoStore::shipped();
        store.codegen.retain(|d| d.language == Language::Sql);
        match build_codegen_prompt(&py_task(), &store) {
            Err(PromptError::MissingDemos { language, .. }) => assert_eq!(language, Some(Language::Python)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("  SELECT 1 \n"), "SELECT 1");
        assert_eq!(extract_code("Here:\n```sql\nSELECT 2\n```\nDone."), "SELECT 2");
        assert_eq!(extract_code("```\nx = 1\n"), "x = 1");
    }

    #[test]
    fn vanilla_history_is_replayed_in_order() {
        let t = py_task();
        let opening = vanilla_opening(&t);
        let history = vec![ChatExchange {
            user: opening.clone(),
            assistant: "```python\npass\n```".into(),
        }];
        let b = build_vanilla_prompt(&t, &history, "Do not sort.").unwrap();
        let roles: Vec<_> = b.messages.iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
        assert_eq!(b.messages[1].content, opening);
    }
}
