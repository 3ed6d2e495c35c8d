"""Writes a hand-specified 10-session transcript and a feedback annotation file.

3 sessions end in success, 6 in failure (wrong accepted answer, unsolvable
skip, timeout) and 1 is skipped as unclear. Run from this directory.
"""
import json

DEADLINE = 300000

# (session_id, task_id, mode, terminal kind, success, elapsed_ms, turns)
SESSIONS = [
    ("syn01", "sql-hs-grade", "intelli_explain", "completed_by_user", True, 60000, 2),
    ("syn02", "sql-hs-count", "intelli_explain", "completed_by_user", True, 45000, 1),
    ("syn03", "py-kth-element", "intelli_explain", "completed_by_user", True, 90000, 2),
    ("syn04", "sql-world-spanish", "intelli_explain", "completed_by_user", False, 120000, 3),
    ("syn05", "sql-wta-left-winners", "vanilla", "completed_by_user", False, 150000, 2),
    ("syn06", "py-round-num", "vanilla", "completed_by_user", False, 80000, 1),
    ("syn07", "sql-voter-area-code", "intelli_explain", "skip_unsolvable", False, 200000, 4),
    ("syn08", "py-prod-square", "vanilla", "skip_unsolvable", False, 240000, 3),
    ("syn09", "py-last-digit", "intelli_explain", "timeout", False, 302000, 5),
    ("syn10", "sql-apt-status", "intelli_explain", "skip_unclear", False, 30000, 1),
]


def verdict(sql, ok):
    if sql:
        return {"success": ok, "reason": "results_match" if ok else "results_differ"}
    return {"success": ok, "reason": "all_cases_passed" if ok else "case_failed"}


def events():
    for sid, task, mode, kind, ok, elapsed, turns in SESSIONS:
        sql = task.startswith("sql-")
        start = 1_000_000
        yield {"session_id": sid, "at_ms": start, "event": "session_created", "task_id": task, "mode": mode,
               "deadline_ms": DEADLINE}
        for i in range(turns):
            at = start + i * 10000
            last = i == turns - 1
            yield {"session_id": sid, "at_ms": at, "event": "turn_added", "turn": {
                "index": i,
                "code": f"-- attempt {i}" if sql else f"# attempt {i}",
                "explanation": "" if mode == "vanilla" else f"explanation {i}",
                "reply": f"reply {i}",
                "verdict": verdict(sql, ok and last),
                "prompts_used": [f"{sid}-{i}"],
                "created_at_ms": at,
            }}
            if not last:
                yield {"session_id": sid, "at_ms": at + 5000, "event": "feedback", "turn_index": i,
                       "text": f"feedback {i}"}
        yield {"session_id": sid, "at_ms": start + elapsed, "event": "terminal", "outcome": {
            "kind": kind, "final_verdict": verdict(sql, ok), "elapsed_ms": elapsed}}


ANNOTATIONS = [
    ("syn01", 0, "instruction_for_error_correction", True, True),
    ("syn03", 0, "instruction_for_error_correction", True, False),
    ("syn03", 1, "instruction_for_error_correction", True, None),
    ("syn04", 0, "question_rephrasing", False, None),
    ("syn04", 1, "instruction_for_error_correction", False, None),
    ("syn07", 2, "step_by_step_instructions", True, True),
]

with open("synthetic_10.jsonl", "w") as fh:
    for e in events():
        fh.write(json.dumps(e, separators=(",", ":")) + "\n")

with open("annotations.jsonl", "w") as fh:
    for sid, turn, kind, accurate, complete in ANNOTATIONS:
        rec = {"session_id": sid, "turn_index": turn, "kind": kind, "accurate": accurate, "annotator": "a1"}
        if complete is not None:
            rec["complete"] = complete
        fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
