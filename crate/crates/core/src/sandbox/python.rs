use std::fs;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::{excerpt, CaseResult, ExecStatus, ExecutionOutcome, SandboxConfig};

const DRIVER: &str = include_str!("driver.py");
/// Bytes of stdout/stderr kept per case.
const STREAM_CAP: u64 = 64 * 1024;
pub(crate) const TIMEOUT_DETAIL: &str = "timeout";

enum CaseEnd {
    Exited { code: Option<i32>, stderr: String },
    TimedOut,
}

fn drain<R: Read + Send + 'static>(stream: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(s) = stream {
            let mut limited = s.take(STREAM_CAP);
            let _ = limited.read_to_end(&mut buf);
            // Keep draining so the child never blocks on a full pipe.
            let mut rest = limited.into_inner();
            let _ = std::io::copy(&mut rest, &mut std::io::sink());
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn kill_group(child: &mut Child) {
    let pid = child.id() as libc::pid_t;
    // SAFETY: signalling a process group we created; no memory is touched.
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn spawn_case(config: &SandboxConfig, scratch: &Path, case_file: &Path) -> std::io::Result<Child> {
    let memory = config.python_memory_bytes as libc::rlim_t;
    let mut cmd = Command::new(&config.python);
    cmd.arg("-I")
        .arg("-B")
        .arg(scratch.join("driver.py"))
        .arg(scratch)
        .arg(scratch.join("candidate.py"))
        .arg(case_file)
        .current_dir(scratch)
        .env_clear()
        .env("HOME", scratch)
        .env("TMPDIR", scratch)
        .env("LANG", "C.UTF-8")
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    // SAFETY: setrlimit is async-signal-safe and only affects the child.
    unsafe {
        cmd.pre_exec(move || {
            let lim = libc::rlimit {
                rlim_cur: memory,
                rlim_max: memory,
            };
            libc::setrlimit(libc::RLIMIT_AS, &lim);
            Ok(())
        });
    }
    cmd.spawn()
}

fn run_case(config: &SandboxConfig, scratch: &Path, case_file: &Path, limit: Duration) -> std::io::Result<CaseEnd> {
    let mut child = spawn_case(config, scratch, case_file)?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let status = match child.wait_timeout(limit) {
        Ok(Some(status)) => Some(status),
        Ok(None) => None,
        Err(e) => {
            kill_group(&mut child);
            return Err(e);
        }
    };
    let Some(status) = status else {
        kill_group(&mut child);
        let _ = out.join();
        let _ = err.join();
        return Ok(CaseEnd::TimedOut);
    };
    let _ = out.join();
    let stderr = err.join().unwrap_or_default();
    Ok(CaseEnd::Exited {
        code: status.code(),
        stderr,
    })
}

fn detail_for(code: Option<i32>, stderr: &str) -> String {
    let last = stderr.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    match code {
        Some(0) => "passed".into(),
        Some(1..=3) if !last.is_empty() => last.to_string(),
        Some(c) => format!("interpreter exited with status {c}"),
        None => "interpreter was killed by a signal".into(),
    }
}

pub(super) fn run(config: &SandboxConfig, code: &str, cases: &[String], per_case_limit_ms: u64) -> ExecutionOutcome {
    let started = Instant::now();
    let elapsed = || started.elapsed().as_millis() as u64;
    if cases.is_empty() {
        return ExecutionOutcome::failed(ExecStatus::SetupError, "no test cases", elapsed());
    }
    let scratch = match tempfile::Builder::new().prefix("explain-loop-py-").tempdir() {
        Ok(d) => d,
        Err(e) => return ExecutionOutcome::failed(ExecStatus::SetupError, format!("scratch dir: {e}"), elapsed()),
    };
    let root = match scratch.path().canonicalize() {
        Ok(p) => p,
        Err(e) => return ExecutionOutcome::failed(ExecStatus::SetupError, format!("scratch dir: {e}"), elapsed()),
    };
    let setup = fs::write(root.join("driver.py"), DRIVER).and_then(|_| fs::write(root.join("candidate.py"), code));
    if let Err(e) = setup {
        return ExecutionOutcome::failed(ExecStatus::SetupError, format!("scratch dir: {e}"), elapsed());
    }

    let limit = Duration::from_millis(per_case_limit_ms);
    let mut results = Vec::with_capacity(cases.len());
    let mut first_stderr = String::new();
    for (index, case) in cases.iter().enumerate() {
        let case_file = root.join(format!("case_{index}.py"));
        if let Err(e) = fs::write(&case_file, case) {
            return ExecutionOutcome::failed(ExecStatus::SetupError, format!("scratch dir: {e}"), elapsed());
        }
        let end = match run_case(config, &root, &case_file, limit) {
            Ok(end) => end,
            Err(e) => {
                let msg = format!("cannot run {}: {e}", config.python.display());
                return ExecutionOutcome::failed(ExecStatus::SetupError, msg, elapsed());
            }
        };
        let (passed, detail) = match end {
            CaseEnd::TimedOut => (false, TIMEOUT_DETAIL.to_string()),
            CaseEnd::Exited { code, stderr } => {
                if code != Some(0) && first_stderr.is_empty() {
                    first_stderr = stderr.clone();
                }
                (code == Some(0), detail_for(code, &stderr))
            }
        };
        results.push(CaseResult { index, passed, detail });
    }

    let failures: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    let status = if failures.is_empty() {
        ExecStatus::Ok
    } else if failures.iter().all(|r| r.detail == TIMEOUT_DETAIL) {
        ExecStatus::Timeout
    } else {
        ExecStatus::RuntimeError
    };
    if first_stderr.is_empty() && status == ExecStatus::Timeout {
        first_stderr = format!("case exceeded {per_case_limit_ms} ms");
    }
    ExecutionOutcome {
        status,
        columns: Vec::new(),
        sql_rows: Vec::new(),
        case_results: results,
        stderr_excerpt: excerpt(&first_stderr),
        wall_ms: elapsed(),
    }
}
