"""Field-sensitive, flow- and context-insensitive inclusion-based points-to
analysis, plus non-null assertion classification.

The program is treated as a bag of statements. Each statement contributes
set constraints over points-to sets: allocation and Null assignment seed
base facts, copies are subset edges, field reads/writes are conditional
edges through (site, field) cells. Calls become parameter and return
copies. Variables are namespaced per procedure; globals share one node.

Tagged variables never admit the Null site: the filter runs inside the
fixpoint (equivalently, at every insertion), which stops Null from
propagating through them.

A field read can also observe a field that was never written, which
evaluates to Null at runtime, so every read contributes the Null site to
its target in addition to the conditional rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (
    Alloc,
    Assert,
    Assign,
    AssignNull,
    Call,
    NullCheck,
    Path,
    Program,
    Store,
    NULL_SITE,
    is_tagged,
)

RULES = ("alloc", "null", "copy", "load", "store")


def var_key(proc_name: str | None, name: str, globals_: set[str]) -> str:
    """Solver node for a variable; globals share one namespace."""
    if proc_name is None or name in globals_:
        return name
    return f"{proc_name}::{name}"


def _key_is_tagged(key: str) -> bool:
    return is_tagged(key.rsplit("::", 1)[-1])


@dataclass
class Constraints:
    base: list[tuple[str, int]] = field(default_factory=list)          # site in pt(x)
    copies: list[tuple[str, str]] = field(default_factory=list)        # pt(src) <= pt(dst)
    loads: list[tuple[str, str, str]] = field(default_factory=list)    # x := base.f
    stores: list[tuple[str, str, str]] = field(default_factory=list)   # base.f := src


def generate_constraints(program: Program, disable_rule: str | None = None) -> Constraints:
    """One constraint per statement occurrence. `disable_rule` drops one of
    RULES, used by the fault-injection tests to prove the oracle notices."""
    if disable_rule is not None and disable_rule not in RULES:
        raise ValueError(f"unknown rule {disable_rule!r}")
    globals_ = set(program.globals)
    cons = Constraints()
    temp_count = 0

    def on(rule: str) -> bool:
        return rule != disable_rule

    def add_path(proc_name: str, lhs_key: str, path: Path) -> None:
        """Decompose `lhs := base.f1...fn` into single-level reads through
        analysis-internal temporaries ($n is not a legal identifier)."""
        nonlocal temp_count
        src = var_key(proc_name, path.base, globals_)
        for f in path.fields[:-1]:
            temp_count += 1
            tmp = f"${temp_count}"
            if on("load"):
                cons.loads.append((src, f, tmp))
            cons.base.append((tmp, NULL_SITE))
            src = tmp
        if path.fields:
            if on("load"):
                cons.loads.append((src, path.fields[-1], lhs_key))
            cons.base.append((lhs_key, NULL_SITE))
        else:
            if on("copy"):
                cons.copies.append((src, lhs_key))

    procs = program.proc_map()
    for proc in program.procedures:
        for block in proc.blocks:
            for stmt in block.stmts:
                if isinstance(stmt, Alloc):
                    if on("alloc"):
                        cons.base.append((var_key(proc.name, stmt.lhs, globals_), stmt.site))
                elif isinstance(stmt, AssignNull):
                    if on("null"):
                        cons.base.append((var_key(proc.name, stmt.lhs, globals_), NULL_SITE))
                elif isinstance(stmt, Assign):
                    add_path(proc.name, var_key(proc.name, stmt.lhs, globals_), stmt.rhs)
                elif isinstance(stmt, Store):
                    if on("store"):
                        cons.stores.append(
                            (
                                var_key(proc.name, stmt.base, globals_),
                                stmt.field,
                                var_key(proc.name, stmt.src, globals_),
                            )
                        )
                elif isinstance(stmt, Call):
                    callee = procs[stmt.callee]
                    if on("copy"):
                        for actual, formal in zip(stmt.args, callee.params):
                            cons.copies.append(
                                (
                                    var_key(proc.name, actual, globals_),
                                    var_key(callee.name, formal, globals_),
                                )
                            )
                        for ret, out in zip(callee.returns, stmt.outs):
                            cons.copies.append(
                                (
                                    var_key(callee.name, ret, globals_),
                                    var_key(proc.name, out, globals_),
                                )
                            )
                # assume/assert contribute nothing
    return cons


@dataclass
class PointsToSolution:
    var_pt: dict[str, set[int]] = field(default_factory=dict)
    field_pt: dict[tuple[int, str], set[int]] = field(default_factory=dict)

    def pt(self, key: str) -> set[int]:
        return self.var_pt.get(key, set())

    def pt_field(self, site: int, fname: str) -> set[int]:
        return self.field_pt.get((site, fname), set())

    def pruned(self) -> "PointsToSolution":
        """Drop empty entries so structurally different solvers compare equal."""
        return PointsToSolution(
            {k: set(v) for k, v in sorted(self.var_pt.items()) if v},
            {k: set(v) for k, v in sorted(self.field_pt.items()) if v},
        )


def solve_naive(constraints: Constraints, schedule: str = "per_statement") -> PointsToSolution:
    """Fixpoint by repeated full passes over the constraints.

    schedule="per_statement" strips the Null site from tagged variables as
    soon as it lands (the filter nested in the statement loop);
    "per_iteration" filters once per pass, which lets Null transit a tagged
    variable within a single pass and can reach a strictly larger fixpoint.
    """
    if schedule not in ("per_statement", "per_iteration"):
        raise ValueError(f"unknown schedule {schedule!r}")
    sol = PointsToSolution()
    var_pt, field_pt = sol.var_pt, sol.field_pt
    per_stmt = schedule == "per_statement"

    def add_var(key: str, sites: set[int]) -> None:
        if per_stmt and _key_is_tagged(key):
            sites = sites - {NULL_SITE}
        var_pt.setdefault(key, set()).update(sites)

    def snapshot():
        return (
            {k: frozenset(v) for k, v in var_pt.items() if v},
            {k: frozenset(v) for k, v in field_pt.items() if v},
        )

    # Old-state/new-state comparison rather than an additions flag: with the
    # per-iteration schedule the filter keeps removing what the pass keeps
    # re-adding, and only the post-filter state reaches a fixpoint.
    old = snapshot()
    while True:
        for key, site in constraints.base:
            add_var(key, {site})
        for src, dst in constraints.copies:
            if var_pt.get(src):
                add_var(dst, var_pt[src])
        for base, fname, dst in constraints.loads:
            for site in sorted(var_pt.get(base, ())):
                cell = field_pt.get((site, fname))
                if cell:
                    add_var(dst, cell)
        for base, fname, src in constraints.stores:
            if not var_pt.get(src):
                continue
            for site in sorted(var_pt.get(base, ())):
                field_pt.setdefault((site, fname), set()).update(var_pt[src])
        if not per_stmt:
            for key in var_pt:
                if _key_is_tagged(key):
                    var_pt[key].discard(NULL_SITE)
        new = snapshot()
        if new == old:
            return sol.pruned()
        old = new


def solve_worklist(constraints: Constraints) -> PointsToSolution:
    """Constraint-graph solver with difference propagation; same least
    fixpoint as solve_naive, much faster on long copy chains."""
    pt: dict[object, set[int]] = {}
    edges: dict[object, list[object]] = {}
    edge_set: set[tuple[object, object]] = set()
    load_index: dict[object, list[tuple[str, object]]] = {}
    store_index: dict[object, list[tuple[str, object]]] = {}
    work: list[tuple[object, set[int]]] = []

    def filtered(node: object, sites: set[int]) -> set[int]:
        if isinstance(node, str) and _key_is_tagged(node):
            return sites - {NULL_SITE}
        return sites

    def add(node: object, sites: set[int]) -> None:
        sites = filtered(node, sites)
        cur = pt.setdefault(node, set())
        delta = sites - cur
        if delta:
            cur |= delta
            work.append((node, delta))

    def add_edge(src: object, dst: object) -> None:
        if (src, dst) in edge_set:
            return
        edge_set.add((src, dst))
        edges.setdefault(src, []).append(dst)
        if pt.get(src):
            add(dst, pt[src])

    for base, fname, dst in constraints.loads:
        load_index.setdefault(base, []).append((fname, dst))
    for base, fname, src in constraints.stores:
        store_index.setdefault(base, []).append((fname, src))
    for src, dst in constraints.copies:
        add_edge(src, dst)
    for key, site in constraints.base:
        add(key, {site})

    while work:
        node, delta = work.pop()
        for fname, dst in load_index.get(node, ()):
            for site in delta:
                add_edge((site, fname), dst)
        for fname, src in store_index.get(node, ()):
            for site in delta:
                add_edge(src, (site, fname))
        for dst in edges.get(node, ()):
            add(dst, delta)

    sol = PointsToSolution()
    for node, sites in pt.items():
        if isinstance(node, tuple):
            sol.field_pt[node] = sites
        else:
            sol.var_pt[node] = sites
    return sol.pruned()


# ---------------------------------------------------------------------------
# Assertion classification
# ---------------------------------------------------------------------------

SAFE = "SAFE"
UNPROVED = "UNPROVED"


@dataclass
class AssertVerdict:
    proc: str
    block: str
    index: int
    cond: str
    verdict: str


@dataclass
class SafetyReport:
    per_assert: list[AssertVerdict]
    timings_ms: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.per_assert)

    @property
    def unproved(self) -> int:
        return sum(1 for a in self.per_assert if a.verdict == UNPROVED)

    def to_json_dict(self) -> dict:
        return {
            "asserts_total": self.total,
            "asserts_unproved": self.unproved,
            "per_assert": [
                {
                    "proc": a.proc,
                    "block": a.block,
                    "index": a.index,
                    "verdict": a.verdict,
                }
                for a in self.per_assert
            ],
            "timings_ms": dict(self.timings_ms),
        }


def eval_abstract(sol: PointsToSolution, proc_name: str, path: Path, globals_: set[str]) -> set[int]:
    """Abstract value set of an access path: pt of the base chained through
    the field cells of every site it may reach."""
    sites = set(sol.pt(var_key(proc_name, path.base, globals_)))
    for f in path.fields:
        nxt: set[int] = set()
        for site in sites:
            nxt |= sol.pt_field(site, f)
        nxt.add(NULL_SITE)  # an unwritten field reads as Null
        sites = nxt
    return sites


def classify_assertions(program: Program, sol: PointsToSolution) -> SafetyReport:
    """Give every assert a verdict: SAFE when the abstract set of a
    `!= Null` condition excludes the Null site, UNPROVED otherwise (opaque
    and `== Null` asserts are never proved)."""
    globals_ = set(program.globals)
    verdicts = []
    for proc in program.procedures:
        for block in proc.blocks:
            for i, stmt in enumerate(block.stmts):
                if not isinstance(stmt, Assert):
                    continue
                verdict = UNPROVED
                if isinstance(stmt.cond, NullCheck) and stmt.cond.negated:
                    sites = eval_abstract(sol, proc.name, stmt.cond.path, globals_)
                    if NULL_SITE not in sites:
                        verdict = SAFE
                verdicts.append(
                    AssertVerdict(proc.name, block.label, i, str(stmt.cond), verdict)
                )
    return SafetyReport(verdicts)
