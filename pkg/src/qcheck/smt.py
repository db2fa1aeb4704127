"""SMT-LIB v2 serialization and the external solver subprocess."""
from __future__ import annotations

import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass

from .terms import App, Num, Quant, Term, Var, used_ops

DEFAULT_LOGIC = "NRA"
DEFAULT_SOLVER = "z3 -in"
SOLVER_ENV_VAR = "QCHECK_SOLVER"

# min/max are not SMT-LIB builtins; scripts that use them get a definition.
_DEFINE_FUNS = {
    "min": "(define-fun min ((a Real) (b Real)) Real (ite (<= a b) a b))",
    "max": "(define-fun max ((a Real) (b Real)) Real (ite (<= a b) b a))",
}


class SolverError(RuntimeError):
    """Solver failure: spawn error, malformed output, timeout, or `unknown`.

    Never coerced into a verdict; analyses abort instead.
    """


@dataclass(frozen=True)
class SmtScript:
    logic: str
    declarations: tuple[str, ...]  # constant names, all Real-sorted
    assertions: tuple[Term, ...]
    check: bool = True

    def __post_init__(self) -> None:
        # canonical form keeps declarations sorted, so equal queries
        # serialize identically and the text can serve as a cache key
        object.__setattr__(self, "declarations", tuple(sorted(self.declarations)))


def serialize(script: SmtScript) -> str:
    """Canonical text: set-logic, sorted declarations, define-funs, asserts, check-sat."""
    lines = [f"(set-logic {script.logic})"]
    for name in script.declarations:
        lines.append(f"(declare-const {name} Real)")
    needed = set()
    for a in script.assertions:
        needed.update(op for op in used_ops(a) if op in _DEFINE_FUNS)
    for op in sorted(needed):
        lines.append(_DEFINE_FUNS[op])
    for a in script.assertions:
        lines.append(f"(assert {a})")
    if script.check:
        lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _tokenize_sexpr(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c in "()":
            out.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _read_sexpr(tokens: list[str], pos: int):
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while tokens[pos] != ")":
            item, pos = _read_sexpr(tokens, pos)
            items.append(item)
        return items, pos + 1
    if tok == ")":
        raise ValueError("unbalanced parenthesis")
    return tok, pos + 1


def term_from_sexpr(sx) -> Term:
    if isinstance(sx, str):
        if sx[0].isdigit() or (sx[0] == "." and len(sx) > 1):
            return Num(sx)
        return Var(sx)
    if not sx:
        raise ValueError("empty application")
    head = sx[0]
    if head in ("exists", "forall"):
        binders = tuple(b[0] for b in sx[1])
        for b in sx[1]:
            if len(b) != 2 or b[1] != "Real":
                raise ValueError("only Real-sorted bound variables are supported")
        return Quant(head, binders, term_from_sexpr(sx[2]))
    if isinstance(head, list):
        raise ValueError("higher-order application is not supported")
    return App(head, tuple(term_from_sexpr(a) for a in sx[1:]))


def parse_script(text: str) -> SmtScript:
    """Inverse of serialize for the supported command subset."""
    tokens = _tokenize_sexpr(text)
    pos = 0
    logic = DEFAULT_LOGIC
    decls: list[str] = []
    asserts: list[Term] = []
    check = False
    while pos < len(tokens):
        sx, pos = _read_sexpr(tokens, pos)
        if not isinstance(sx, list) or not sx:
            raise ValueError(f"not a command: {sx!r}")
        cmd = sx[0]
        if cmd == "set-logic":
            logic = sx[1]
        elif cmd == "declare-const":
            if sx[2] != "Real":
                raise ValueError("only Real constants are supported")
            decls.append(sx[1])
        elif cmd == "define-fun":
            continue  # min/max helpers, regenerated on serialization
        elif cmd == "assert":
            asserts.append(term_from_sexpr(sx[1]))
        elif cmd == "check-sat":
            check = True
        else:
            raise ValueError(f"unsupported command {cmd!r}")
    return SmtScript(logic, tuple(decls), tuple(asserts), check)


def resolve_solver_command(explicit: str | None = None) -> str:
    return explicit or os.environ.get(SOLVER_ENV_VAR) or DEFAULT_SOLVER


class SolverHandle:
    """One external solver process; at most one outstanding query.

    Queries are isolated with (push 1)/(pop 1); the session is restarted if
    the process dies or a query times out.
    """

    def __init__(self, command: str | None = None, timeout: float = 30.0):
        self.command = resolve_solver_command(command)
        self.timeout = timeout
        self.queries = 0
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._logic_sent: str | None = None

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as e:
            raise SolverError(f"cannot start solver {self.command!r}: {e}") from e
        self._lines = queue.Queue()
        self._logic_sent = None

        def pump(proc: subprocess.Popen, q: queue.Queue) -> None:
            assert proc.stdout is not None
            for line in proc.stdout:
                q.put(line.rstrip("\n"))
            q.put(None)

        threading.Thread(target=pump, args=(self._proc, self._lines), daemon=True).start()

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None

    def __enter__(self) -> "SolverHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def check_sat(self, script: SmtScript) -> str:
        """Run one query; returns "sat", "unsat" or "unknown".

        Timeouts, spawn failures and malformed replies raise SolverError: a
        missing verdict must never pass for one.
        """
        if self._proc is None or self._proc.poll() is not None:
            self.close()
            self._start()
        if self._logic_sent is not None and script.logic != self._logic_sent:
            self.close()  # a session can only fix its logic once
            self._start()
        assert self._proc is not None and self._proc.stdin is not None
        logic_line, _, rest = serialize(script).partition("\n")
        text = "(push 1)\n" + rest + "(pop 1)\n"
        if self._logic_sent is None:
            text = logic_line + "\n" + text
            self._logic_sent = script.logic
        self.queries += 1
        try:
            self._proc.stdin.write(text)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            self.close()
            raise SolverError(f"solver process died: {e}") from e
        try:
            reply = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise SolverError(f"solver timeout after {self.timeout}s")
        if reply is None:
            self.close()
            raise SolverError("solver closed its output stream")
        verdict = reply.strip()
        if verdict in ("sat", "unsat", "unknown"):
            return verdict
        self.close()
        raise SolverError(f"unexpected solver reply: {reply!r}")
