# Sandbox shim: runs one call of a candidate function in a fresh interpreter.
#
# stdin:  one JSON object
#         {"mode": "call" | "probe", "source": str, "function": str,
#          "args": [..], "arity": int, "nonce": str, "max_stdout": int}
#         where "args" is the ArgumentTuple encoding (a JSON list).
# stdout: one line, <nonce> followed by the Outcome encoding
#         {"status": "returned", "value": ..} | {"status": "raised", "error": str}
#         | {"status": "memory"} | {"status": "signature", "ok": bool, "error": str}
#         plus "stdout": the candidate's printed output, truncated.
import builtins
import inspect
import io
import json
import os
import sys

MAX_DEPTH = 4
INT64_MIN, INT64_MAX = -(2 ** 63), 2 ** 63 - 1

DENIED_PREFIXES = (
    "socket.", "subprocess.", "ctypes.", "urllib.", "http.", "ftplib.", "smtplib.",
    "telnetlib.", "webbrowser.", "shutil.", "gc.", "sys._current_frames",
    "os.system", "os.exec", "os.posix_spawn", "os.spawn", "os.fork", "os.kill",
    "os.remove", "os.rename", "os.rmdir", "os.mkdir", "os.chmod", "os.chown", "os.chdir",
    "os.symlink", "os.link", "os.truncate", "os.utime", "os.putenv", "os.unsetenv",
    "os.startfile", "os.chflags", "os.setxattr", "os.removexattr", "pty.",
)
WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND


class Unencodable(Exception):
    pass


class BoundedWriter(io.TextIOBase):
    def __init__(self, limit):
        self.limit = limit
        self.parts = []
        self.size = 0

    def writable(self):
        return True

    def write(self, s):
        s = str(s)
        room = self.limit - self.size
        if room > 0:
            chunk = s[:room]
            self.parts.append(chunk)
            self.size += len(chunk)
        return len(s)

    def text(self):
        return "".join(self.parts)


def encode(value, depth=0):
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise Unencodable("integer out of range")
        return int(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise Unencodable("non-finite float")
        return float(value)
    if isinstance(value, (list, tuple)):
        if depth >= MAX_DEPTH:
            raise Unencodable("list nested too deeply")
        return [encode(v, depth + 1) for v in value]
    raise Unencodable(type(value).__name__)


def install_guard():
    roots = tuple(
        os.path.realpath(p) for p in sys.path if p and os.path.isdir(p)
    )

    def readable(path):
        if isinstance(path, bytes):
            path = os.fsdecode(path)
        if not isinstance(path, str):
            return False
        real = os.path.realpath(path)
        return any(real == r or real.startswith(r + os.sep) for r in roots)

    def hook(event, args):
        if event == "open":
            path, mode, flags = args
            writing = (mode is not None and any(c in str(mode) for c in "wax+")) or (
                isinstance(flags, int) and flags & WRITE_FLAGS
            )
            if writing or not readable(path):
                raise PermissionError("sandbox: file access denied")
        elif event in ("os.listdir", "os.scandir"):
            if not readable(args[0] if args and args[0] is not None else "."):
                raise PermissionError("sandbox: directory listing denied")
        elif event.startswith(DENIED_PREFIXES):
            raise PermissionError("sandbox: %s denied" % event)

    sys.addaudithook(hook)


def describe(exc):
    try:
        return "%s: %s" % (type(exc).__name__, exc)
    except BaseException:
        return type(exc).__name__


def main():
    request = json.loads(sys.stdin.buffer.read().decode("utf-8"))
    nonce = request["nonce"]
    out_fd = os.dup(1)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.close(devnull)

    captured = BoundedWriter(int(request.get("max_stdout", 65536)))
    sys.stdout = captured
    sys.stdin = io.StringIO("")

    install_guard()
    try:
        namespace = {"__name__": "__candidate__", "__builtins__": builtins}
        exec(compile(request["source"], "<candidate>", "exec"), namespace)
        fn = namespace.get(request["function"])
        if not callable(fn):
            missing = "name %r is not defined as a function" % request["function"]
            if request["mode"] != "probe":
                raise NameError(missing)
            result = {"status": "signature", "ok": False, "error": missing}
        elif request["mode"] == "probe":
            try:
                inspect.signature(fn).bind(*([None] * int(request["arity"])))
                result = {"status": "signature", "ok": True, "error": ""}
            except TypeError as e:
                result = {"status": "signature", "ok": False, "error": str(e)}
        else:
            value = fn(*request["args"])
            try:
                result = {"status": "returned", "value": encode(value)}
            except Unencodable as e:
                result = {"status": "raised", "error": "unencodable return type: %s" % e}
    except MemoryError:
        result = {"status": "memory"}
    except BaseException as e:  # noqa: B902 - SystemExit and friends are candidate faults
        result = {"status": "raised", "error": describe(e)}

    if request["mode"] == "probe" and result["status"] == "raised":
        result = {"status": "load_error", "error": result["error"]}
    result["stdout"] = captured.text()
    line = nonce + json.dumps(result, ensure_ascii=False, allow_nan=False) + "\n"
    os.write(out_fd, line.encode("utf-8"))


main()
