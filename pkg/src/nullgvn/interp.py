"""Bounded nondeterministic interpreter: the differential oracle.

Explores every goto choice and both outcomes of opaque conditions, up to a
step budget per path (executed statements and control transfers both count,
so even statement-free cycles terminate). A trace is the sequence of
observable events along one path:

    ("assign", var, value)       assignment through a statement
    ("assert_pass", loc) / ("assert_fail", loc)
    ("null_deref", loc)          field access through Null
    ("assume_blocked", loc)      assume condition was false
    ("unassigned", loc, var)     read of a never-assigned variable
    ("return", values)           normal return of the entry procedure
    ("truncated",)               step budget exhausted

Values are summarized as "null" or ("loc", site, n) where n numbers the
allocations along the path, so summaries line up between a program and its
transformed versions. Parameter, output and return binding is silent: only
statements produce events, and binding an undefined source leaves the
destination untouched.
"""

from __future__ import annotations

from .ir import (
    Alloc,
    Assert,
    Assign,
    AssignNull,
    Assume,
    Call,
    Goto,
    Opaque,
    Program,
    Store,
    NULL_SITE,
    is_tagged,
    original_name,
)
from .solver import PointsToSolution, var_key

DEFAULT_TRACE_CAP = 10**6

_MISSING = object()


class TraceLimitError(Exception):
    """More traces than the configured cap; exploration was aborted."""


class _State:
    __slots__ = (
        "frames", "heap", "globals", "steps", "next_uid", "next_activation",
        "trace", "user", "halted",
    )

    def __init__(self):
        # frame: [proc name, block label, stmt index, vars dict, activation id]
        self.frames = []
        self.heap = {}     # uid -> (site, {field: value}); value is None or uid
        self.globals = {}
        self.steps = 0
        self.next_uid = 1
        self.next_activation = 1
        self.trace = []
        self.user = {}     # observer scratch space, cloned on branch
        self.halted = False

    def clone(self) -> "_State":
        st = _State()
        st.frames = [[p, l, i, dict(v), a] for p, l, i, v, a in self.frames]
        st.heap = {uid: (site, dict(fs)) for uid, (site, fs) in self.heap.items()}
        st.globals = dict(self.globals)
        st.steps = self.steps
        st.next_uid = self.next_uid
        st.next_activation = self.next_activation
        st.trace = list(self.trace)
        st.user = dict(self.user)
        return st

    def summary(self, value):
        if value is None:
            return "null"
        return ("loc", self.heap[value][0], value)


class _Engine:
    def __init__(self, program: Program, depth_bound: int, max_traces: int, observer=None):
        self.program = program
        self.procs = program.proc_map()
        self.blocks = {p.name: p.block_map() for p in program.procedures}
        self.globals = set(program.globals)
        self.depth = depth_bound
        self.max_traces = max_traces
        self.observer = observer

    # -- state access --------------------------------------------------------

    def lookup(self, st: _State, name: str):
        store = st.globals if name in self.globals else st.frames[-1][3]
        return store.get(name, _MISSING)

    def bind(self, st: _State, proc: str, name: str, value) -> None:
        store = st.globals if name in self.globals else st.frames[-1][3]
        store[name] = value
        if self.observer is not None:
            self.observer.on_bind(proc, name, value, st)

    def eval_path(self, st: _State, path):
        """("ok", value) | ("unassigned", var) | ("null_deref", None)."""
        value = self.lookup(st, path.base)
        if value is _MISSING:
            return ("unassigned", path.base)
        for f in path.fields:
            if value is None:
                return ("null_deref", None)
            value = st.heap[value][1].get(f)
        return ("ok", value)

    # -- execution -----------------------------------------------------------

    def run(self):
        entry = self.procs[self.program.entry]
        start = _State()
        start.frames = [[entry.name, entry.entry_block, 0, {}, 0]]
        stack = [start]
        traces: list[tuple] = []
        seen = set()
        while stack:
            st = stack.pop()
            finished = self.advance(st, stack)
            if finished:
                t = tuple(st.trace)
                if t not in seen:
                    seen.add(t)
                    traces.append(t)
                    if len(traces) > self.max_traces:
                        raise TraceLimitError(
                            f"exceeded {self.max_traces} traces at depth {self.depth}"
                        )
        return tuple(traces)

    def advance(self, st: _State, stack: list) -> bool:
        """Run a state until its trace ends (True) or it forks (False,
        children pushed onto the stack, first choice on top)."""
        while True:
            if st.halted:
                return True
            proc, label, idx = st.frames[-1][:3]
            block = self.blocks[proc][label]
            if st.steps >= self.depth:
                st.trace.append(("truncated",))
                return True
            st.steps += 1
            if idx >= len(block.stmts):
                result = self.transfer(st, block.transfer)
            else:
                loc = (proc, label, idx)
                stmt = block.stmts[idx]
                if self.observer is not None:
                    self.observer.before_stmt(loc, st)
                result = self.execute(st, stmt, loc)
            if result is True:
                return True
            if result is False:
                continue
            # A list of alternative successor states: depth-first, first
            # alternative explored first.
            for child in reversed(result):
                stack.append(child)
            return False

    def transfer(self, st: _State, transfer):
        if isinstance(transfer, Goto):
            targets = list(dict.fromkeys(transfer.targets))
            if len(targets) == 1:
                frame = st.frames[-1]
                frame[1] = targets[0]
                frame[2] = 0
                return False
            children = []
            for t in targets:
                child = st.clone()
                frame = child.frames[-1]
                frame[1] = t
                frame[2] = 0
                children.append(child)
            return children
        # Return
        callee_frame = st.frames.pop()
        callee = self.procs[callee_frame[0]]
        if not st.frames:
            values = []
            for r in callee.returns:
                v = callee_frame[3].get(r, _MISSING)
                values.append("undef" if v is _MISSING else st.summary(v))
            st.trace.append(("return", tuple(values)))
            return True
        caller = st.frames[-1]
        call_stmt = self.blocks[caller[0]][caller[1]].stmts[caller[2]]
        for out, ret in zip(call_stmt.outs, callee.returns):
            v = callee_frame[3].get(ret, _MISSING)
            if v is not _MISSING:
                self.bind(st, caller[0], out, v)
        caller[2] += 1
        return False

    def execute(self, st: _State, stmt, loc):
        proc = loc[0]
        frame = st.frames[-1]

        def step() -> bool:
            frame[2] += 1
            return False

        if isinstance(stmt, Assign):
            status, payload = self.eval_path(st, stmt.rhs)
            if status == "unassigned":
                st.trace.append(("unassigned", loc, payload))
                return True
            if status == "null_deref":
                st.trace.append(("null_deref", loc))
                return True
            self.bind(st, proc, stmt.lhs, payload)
            st.trace.append(("assign", stmt.lhs, st.summary(payload)))
            return step()

        if isinstance(stmt, Alloc):
            uid = st.next_uid
            st.next_uid += 1
            st.heap[uid] = (stmt.site, {})
            self.bind(st, proc, stmt.lhs, uid)
            st.trace.append(("assign", stmt.lhs, st.summary(uid)))
            return step()

        if isinstance(stmt, AssignNull):
            self.bind(st, proc, stmt.lhs, None)
            st.trace.append(("assign", stmt.lhs, "null"))
            return step()

        if isinstance(stmt, Store):
            base = self.lookup(st, stmt.base)
            if base is _MISSING:
                st.trace.append(("unassigned", loc, stmt.base))
                return True
            if base is None:
                st.trace.append(("null_deref", loc))
                return True
            src = self.lookup(st, stmt.src)
            if src is _MISSING:
                st.trace.append(("unassigned", loc, stmt.src))
                return True
            st.heap[base][1][stmt.field] = src
            if self.observer is not None:
                self.observer.on_store(st.heap[base][0], stmt.field, src, st)
            return step()

        if isinstance(stmt, (Assume, Assert)):
            is_assert = isinstance(stmt, Assert)
            cond = stmt.cond
            if isinstance(cond, Opaque):
                taken = st.clone()
                taken.frames[-1][2] += 1
                other = st.clone()
                other.halted = True
                if is_assert:
                    taken.trace.append(("assert_pass", loc))
                    other.trace.append(("assert_fail", loc))
                else:
                    other.trace.append(("assume_blocked", loc))
                return [taken, other]
            status, payload = self.eval_path(st, cond.path)
            if status == "unassigned":
                st.trace.append(("unassigned", loc, payload))
                return True
            if status == "null_deref":
                st.trace.append(("null_deref", loc))
                return True
            holds = (payload is not None) if cond.negated else (payload is None)
            if is_assert:
                if holds:
                    st.trace.append(("assert_pass", loc))
                    return step()
                st.trace.append(("assert_fail", loc))
                return True
            if holds:
                return step()
            st.trace.append(("assume_blocked", loc))
            return True

        if isinstance(stmt, Call):
            callee = self.procs[stmt.callee]
            new_vars = {}
            for actual, formal in zip(stmt.args, callee.params):
                v = self.lookup(st, actual)
                if v is not _MISSING:
                    new_vars[formal] = v
            st.frames.append(
                [callee.name, callee.entry_block, 0, new_vars, st.next_activation]
            )
            st.next_activation += 1
            if self.observer is not None:
                for formal, v in new_vars.items():
                    self.observer.on_bind(callee.name, formal, v, st)
            return False

        raise TypeError(f"unknown statement {stmt!r}")


def enumerate_traces(
    program: Program,
    depth_bound: int,
    max_traces: int = DEFAULT_TRACE_CAP,
    observer=None,
):
    """All traces of the program up to the step budget, deterministically
    ordered, duplicates removed. Raises TraceLimitError past max_traces."""
    return _Engine(program, depth_bound, max_traces, observer).run()


# ---------------------------------------------------------------------------
# Trace projection and comparison
# ---------------------------------------------------------------------------

def project_trace(trace: tuple, keep=None) -> tuple:
    """Canonicalize a trace for cross-version comparison.

    Tagged variables disappear, SSA versions collapse to their source
    names, locations are stripped, and re-assignments that do not change a
    variable's (projected) value are dropped; merge copies introduced by
    SSA are exactly such no-ops.
    """
    keep = keep or (lambda name: not is_tagged(name))
    values: dict[str, object] = {}
    out = []
    for ev in trace:
        kind = ev[0]
        if kind == "assign":
            _, var, val = ev
            if not keep(var):
                continue
            name = original_name(var)
            if values.get(name, _MISSING) == val:
                continue
            values[name] = val
            out.append(("assign", name, val))
        elif kind == "unassigned":
            out.append(("unassigned", original_name(ev[2])))
        elif kind in ("assert_pass", "assert_fail", "null_deref", "assume_blocked"):
            out.append((kind,))
        else:  # return, truncated
            out.append(ev)
    return tuple(out)


def _compatible(x: tuple, y: tuple) -> bool:
    xt = bool(x) and x[-1] == ("truncated",)
    yt = bool(y) and y[-1] == ("truncated",)
    if not xt and not yt:
        return x == y
    xe = x[:-1] if xt else x
    ye = y[:-1] if yt else y
    if xt and not yt:
        return xe == ye[: len(xe)]
    if yt and not xt:
        return ye == xe[: len(ye)]
    return xe == ye[: len(xe)] or ye == xe[: len(ye)]


def traces_equivalent(a, b, keep=None) -> bool:
    """Set equivalence of projected traces.

    Complete traces must match exactly. A truncated trace matches anything
    it is a prefix of: transformations change statement counts, so the
    budget runs out at different logical points on the two sides.
    """
    pa = {project_trace(t, keep) for t in a}
    pb = {project_trace(t, keep) for t in b}
    if pa == pb:
        return True
    # Exact matches are trivially compatible; only the remainder needs the
    # quadratic prefix search.
    return all(any(_compatible(x, y) for y in pb) for x in pa - pb) and all(
        any(_compatible(x, y) for x in pa) for y in pb - pa
    )


def traces_diff(a, b, keep=None) -> str | None:
    """Human-readable witness of non-equivalence, or None."""
    pa = {project_trace(t, keep) for t in a}
    pb = {project_trace(t, keep) for t in b}
    for x in sorted(pa, key=repr):
        if not any(_compatible(x, y) for y in pb):
            return f"trace only on the left side:\n  {x}"
    for y in sorted(pb, key=repr):
        if not any(_compatible(x, y) for x in pa):
            return f"trace only on the right side:\n  {y}"
    return None


def dump_traces_jsonl(traces, fp) -> None:
    import json

    for t in traces:
        fp.write(json.dumps([list(ev) if isinstance(ev, tuple) else ev for ev in t]))
        fp.write("\n")


# ---------------------------------------------------------------------------
# Dynamic checks built on the interpreter
# ---------------------------------------------------------------------------

class _SoundnessObserver:
    def __init__(self, program: Program, solution: PointsToSolution, cap: int = 100):
        self.globals = set(program.globals)
        self.sol = solution
        self.cap = cap
        self.violations: list[tuple] = []
        self._seen: set = set()

    def _report(self, key, detail, st):
        if key in self._seen or len(self.violations) >= self.cap:
            return
        self._seen.add(key)
        self.violations.append((*detail, tuple(st.trace)))

    def before_stmt(self, loc, st):
        pass

    def on_bind(self, proc, var, value, st):
        key = var_key(proc, var, self.globals)
        pt = self.sol.pt(key)
        if value is None:
            if is_tagged(var):
                self._report(("tagged_null", key), ("tagged_null", key), st)
            elif NULL_SITE not in pt:
                self._report(("var_null", key), ("missing_null", key), st)
        else:
            site = st.heap[value][0]
            if site not in pt:
                self._report(("var", key, site), ("missing_site", key, site), st)

    def on_store(self, base_site, fname, value, st):
        cell = self.sol.pt_field(base_site, fname)
        if value is None:
            if NULL_SITE not in cell:
                self._report(
                    ("field_null", base_site, fname),
                    ("missing_null_field", base_site, fname),
                    st,
                )
        else:
            site = st.heap[value][0]
            if site not in cell:
                self._report(
                    ("field", base_site, fname, site),
                    ("missing_field_site", base_site, fname, site),
                    st,
                )


def check_solution_soundness(
    program: Program,
    solution: PointsToSolution,
    depth_bound: int,
    max_traces: int = DEFAULT_TRACE_CAP,
) -> list[tuple]:
    """Replay the program and flag every state the points-to solution fails
    to over-approximate. Empty result = no unsoundness observed."""
    obs = _SoundnessObserver(program, solution)
    enumerate_traces(program, depth_bound, max_traces, observer=obs)
    return obs.violations


class _TermObserver:
    def __init__(self, recording, cap: int = 100):
        self.recording = recording
        self.cap = cap
        self.violations: list[tuple] = []
        self.engine: _Engine | None = None

    def before_stmt(self, loc, st):
        recs = self.recording.get(loc)
        if not recs:
            return
        # Terms live per procedure activation: a recursive activation (as
        # lifted loops produce) re-evaluates the same locations with new
        # values, and the equal-terms claim is within one activation.
        activation = st.frames[-1][4]
        for path, term in recs:
            status, value = self.engine.eval_path(st, path)
            if status != "ok":
                continue
            key = (activation, term)
            prev = st.user.get(key, _MISSING)
            if prev is _MISSING:
                st.user[key] = value
            elif prev != value and len(self.violations) < self.cap:
                self.violations.append((term, loc, str(path), prev, value, tuple(st.trace)))

    def on_bind(self, proc, var, value, st):
        pass

    def on_store(self, base_site, fname, value, st):
        pass


def check_term_consistency(
    program: Program,
    recording: dict,
    depth_bound: int,
    max_traces: int = DEFAULT_TRACE_CAP,
) -> list[tuple]:
    """Replay a transformed program and verify that every two expression
    occurrences that received the same term hold the same value on each
    explored path. `recording` comes from do_gvn(instrument=True)."""
    obs = _TermObserver(recording)
    engine = _Engine(program, depth_bound, max_traces, observer=obs)
    obs.engine = engine
    engine.run()
    return obs.violations
