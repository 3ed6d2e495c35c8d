# Runs one candidate program and one assertion under an audit hook.
#
# argv: scratch dir, candidate file, case file.
# Exit status: 0 passed, 1 assertion failed, 2 other exception, 3 syntax error.
# The last stderr line is the case detail.
import os
import sys

SCRATCH = os.path.realpath(sys.argv[1])
with open(sys.argv[2], encoding="utf-8") as fh:
    CANDIDATE = fh.read()
with open(sys.argv[3], encoding="utf-8") as fh:
    CASE = fh.read()

try:
    candidate_code = compile(CANDIDATE, "<candidate>", "exec")
    case_code = compile(CASE, "<case>", "exec")
except SyntaxError as exc:
    print(f"SyntaxError: {exc.msg} (line {exc.lineno})", file=sys.stderr)
    sys.exit(3)

WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_APPEND | os.O_TRUNC

DENIED = {
    "socket.connect", "socket.bind", "socket.sendto", "socket.sendmsg", "socket.getaddrinfo",
    "subprocess.Popen", "os.system", "os.exec", "os.posix_spawn", "os.spawn", "os.fork", "os.forkpty",
    "os.kill", "os.killpg", "ctypes.dlopen", "ctypes.dlsym", "ctypes.cdata", "pty.spawn",
}

PATH_EVENTS = {
    "os.remove": (0,), "os.rmdir": (0,), "os.mkdir": (0,), "os.chmod": (0,), "os.chown": (0,),
    "os.truncate": (0,), "os.utime": (0,), "os.rename": (0, 1), "os.link": (0, 1),
    "os.symlink": (1,), "shutil.rmtree": (0,), "shutil.copyfile": (1,), "shutil.copytree": (1,),
    "shutil.move": (0, 1),
}


def inside_scratch(path):
    if isinstance(path, int):
        return True
    real = os.path.realpath(os.fsdecode(path))
    return real == SCRATCH or real.startswith(SCRATCH + os.sep)


def refuse(what):
    raise PermissionError(f"sandbox: {what} is not allowed")


def hook(event, args):
    if event == "open":
        path, mode, flags = args
        writing = (mode is not None and any(c in mode for c in "wax+")) or bool(flags & WRITE_FLAGS)
        if writing and not inside_scratch(path):
            refuse(f"writing {os.fsdecode(path)}")
    elif event in DENIED:
        refuse(event)
    elif event in PATH_EVENTS:
        for i in PATH_EVENTS[event]:
            if i < len(args) and not inside_scratch(args[i]):
                refuse(f"{event} on {args[i]}")


sys.addaudithook(hook)

scope = {"__name__": "__main__", "__builtins__": __builtins__}
try:
    exec(candidate_code, scope)
    exec(case_code, scope)
except AssertionError as exc:
    print("AssertionError" + (f": {exc}" if str(exc) else ""), file=sys.stderr)
    sys.exit(1)
except BaseException as exc:  # noqa: BLE001 - SystemExit from the candidate is a failure too
    print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
    sys.exit(2)
sys.exit(0)
