"""Satisfiability and validity checking.

``SmtSolver`` drives an SMT-LIB2 solver in a child process (z3 by default).
``BoundedSolver`` enumerates small domains exhaustively; it is complete only
within those domains and exists for tests and solver-less environments.
"""

from __future__ import annotations

import itertools
import logging
import os
import select
import shutil
import subprocess
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .logic import (
    BOOL,
    FALSE,
    TRUE,
    UNIT,
    Formula,
    SymVar,
    eval_ground,
    free_syms,
    is_closed,
    neg,
    smt_formula,
)

log = logging.getLogger(__name__)


class SolverUnknown(Exception):
    """Raised where a caller needs a definite answer but the solver gave none."""


@dataclass(frozen=True)
class Sat:
    model: dict  # SymVar -> python value

    def __bool__(self):
        return True


class _Unsat:
    def __repr__(self):
        return "Unsat"

    def __bool__(self):
        return False


class _Unknown:
    def __repr__(self):
        return "Unknown"

    def __bool__(self):
        return False


UNSAT = _Unsat()
UNKNOWN = _Unknown()


@dataclass
class SolverStats:
    calls: int = 0
    cache_hits: int = 0
    seconds: float = 0.0


class Solver:
    """Common caching front end. Subclasses implement ``_solve``."""

    def __init__(self):
        self.stats = SolverStats()
        self._cache: dict = {}

    def check_sat(self, f: Formula, want_model: bool = True):
        if f is TRUE:
            return Sat({})
        if f is FALSE:
            return UNSAT
        if not is_closed(f):
            raise ValueError(f"formula is not closed: {f!r}")
        hit = self._cache.get(f)
        if hit is not None and (not want_model or hit is UNSAT or hit.model or not free_syms(f)):
            self.stats.cache_hits += 1
            return hit
        self.stats.calls += 1
        start = time.perf_counter()
        try:
            res = self._solve(f, want_model)
        finally:
            self.stats.seconds += time.perf_counter() - start
        if res is not UNKNOWN and (hit is None or want_model):
            self._cache[f] = res
        return res

    def check_valid(self, f: Formula):
        res = self.check_sat(neg(f), want_model=False)
        if res is UNSAT:
            return True
        if res is UNKNOWN:
            return UNKNOWN
        return False

    def _solve(self, f: Formula, want_model: bool = True):
        raise NotImplementedError

    def close(self):
        pass


# ---------------------------------------------------------------------------


def _parse_sexprs(text: str):
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(read())
            pos += 1
            return out
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def _sexpr_value(v):
    if isinstance(v, list):
        if len(v) == 2 and v[0] == "-":
            return -_sexpr_value(v[1])
        raise ValueError(f"unexpected model value {v}")
    if v == "true":
        return True
    if v == "false":
        return False
    return int(v)


def default_solver_cmd() -> list[str] | None:
    path = os.environ.get("SRE_FALSIFY_SOLVER") or shutil.which("z3")
    if path is None:
        return None
    return [path, "-in", "-smt2"]


class SmtSolver(Solver):
    """Persistent SMT-LIB2 child process; each query runs inside ``(push)``/``(pop)``."""

    def __init__(self, cmd: list[str] | None = None, timeout: float = 2.0):
        super().__init__()
        self.cmd = cmd or default_solver_cmd()
        if self.cmd is None:
            raise FileNotFoundError("no SMT solver found (install z3 or pass --solver-cmd)")
        self.timeout = timeout
        self._proc = None

    def _start(self):
        self._proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        self._buf = b""

    def _send(self, text: str):
        data = text.encode()
        fd = self._proc.stdin.fileno()
        while data:
            data = data[os.write(fd, data):]

    def _read_line(self, deadline: float) -> str:
        fd = self._proc.stdout.fileno()
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line, self._buf = self._buf[:nl], self._buf[nl + 1:]
                line = line.decode().strip()
                if line:
                    return line
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("solver did not answer in time")
            ready, _, _ = select.select([fd], [], [], remaining)
            if ready:
                chunk = os.read(fd, 65536)
                if not chunk:
                    raise BrokenPipeError("solver exited")
                self._buf += chunk

    def _read_sexpr(self, deadline: float) -> str:
        buf = self._read_line(deadline)
        while buf.count("(") > buf.count(")"):
            buf += " " + self._read_line(deadline)
        return buf

    def _solve(self, f: Formula, want_model: bool = True):
        syms = sorted(free_syms(f), key=lambda v: v.id)
        lines = ["(push)"]
        for v in syms:
            lines.append(f"(declare-const {v.smt_name} {'Bool' if v.sort == BOOL else 'Int'})")
            if v.sort == UNIT:
                lines.append(f"(assert (= {v.smt_name} 0))")
        lines.append(f"(assert {smt_formula(f)})")
        lines.append("(check-sat)")
        want_model = want_model and bool(syms)
        if want_model:
            # on unsat this prints an error line, which is read and discarded
            lines.append(f"(get-value ({' '.join(v.smt_name for v in syms)}))")
        lines.append("(pop)")
        try:
            if self._proc is None or self._proc.poll() is not None:
                self._start()
                self._send("(set-option :produce-models true)\n"
                           f"(set-option :timeout {int(self.timeout * 1000)})\n(set-logic ALL)\n")
            self._send("\n".join(lines) + "\n")
            deadline = time.monotonic() + self.timeout + 5.0
            answer = self._read_line(deadline)
            reply = self._read_sexpr(deadline) if want_model else None
            if answer == "unsat":
                return UNSAT
            if answer != "sat":
                if answer.startswith("(error"):
                    log.warning("solver error: %s", answer)
                return UNKNOWN
            if not want_model:
                return Sat({})
            by_name = {v.smt_name: v for v in syms}
            model = {by_name[name]: _sexpr_value(val) for name, val in _parse_sexprs(reply)[0]}
            return Sat(model)
        except (TimeoutError, BrokenPipeError, OSError, ValueError, IndexError) as exc:
            log.warning("solver failure (%s); answering Unknown", exc)
            self.close()
            return UNKNOWN

    def close(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=1)
            except (OSError, subprocess.TimeoutExpired):
                pass
            self._proc = None


class BoundedSolver(Solver):
    """Exhaustive search over small domains; Unsat means "no model in the domain"."""

    def __init__(self, int_domain=range(-3, 4), max_vars: int = 8):
        super().__init__()
        self.int_domain = list(int_domain)
        self.max_vars = max_vars

    def _domain(self, v: SymVar):
        if v.sort == BOOL:
            return [False, True]
        if v.sort == UNIT:
            return [0]
        return self.int_domain

    def _solve(self, f: Formula, want_model: bool = True):
        syms = sorted(free_syms(f), key=lambda v: v.id)
        if len(syms) > self.max_vars:
            return UNKNOWN
        for values in itertools.product(*(self._domain(v) for v in syms)):
            env = dict(zip(syms, values))
            if eval_ground(f, env):
                return Sat(env)
        return UNSAT


# ---------------------------------------------------------------------------
# Process-wide current solver


_current: Solver | None = None


def get_solver() -> Solver:
    global _current
    if _current is None:
        _current = SmtSolver() if default_solver_cmd() else BoundedSolver()
    return _current


def set_solver(s: Solver) -> Solver | None:
    global _current
    old, _current = _current, s
    return old


@contextmanager
def using(s: Solver):
    old = set_solver(s)
    try:
        yield s
    finally:
        set_solver(old)


def check_sat(f: Formula, budget: float | None = None):
    return get_solver().check_sat(f)


def check_valid(f: Formula, budget: float | None = None):
    return get_solver().check_valid(f)
