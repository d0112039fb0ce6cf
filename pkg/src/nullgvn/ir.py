"""Pointer-program intermediate representation: statements, blocks, procedures."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Allocation sites are plain non-negative ints; site 0 stands for Null.
NULL_SITE = 0

_TAGGED_RE = re.compile(r"__gvn\d+$")
_VERSION_RE = re.compile(r"^(.+?)__(\d+)$")


def is_tagged(name: str) -> bool:
    """True for temporaries introduced by the value-numbering pass.

    Tagged variables carry the invariant that they are never Null at
    runtime; the points-to solver strips the Null site from them.
    """
    return _TAGGED_RE.search(name) is not None


def make_tagged(index: int) -> str:
    return f"gvnTmp__gvn{index}"


def original_name(name: str) -> str:
    """Map an SSA version name (x__2, x__3, ...) back to its source variable."""
    m = _VERSION_RE.match(name)
    if m:
        return m.group(1)
    return name


# ---------------------------------------------------------------------------
# Expressions and conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    """An access path: a base variable plus zero or more field selectors."""

    base: str
    fields: tuple[str, ...] = ()

    def __str__(self) -> str:
        return ".".join((self.base, *self.fields))


@dataclass(frozen=True)
class NullCheck:
    """Condition of the form `path != Null` (negated=True) or `path == Null`."""

    path: Path
    negated: bool

    def __str__(self) -> str:
        op = "!=" if self.negated else "=="
        return f"({self.path} {op} Null)"


@dataclass(frozen=True)
class Opaque:
    """A condition the analysis does not model; written `*` in source."""

    def __str__(self) -> str:
        return "*"


Cond = NullCheck | Opaque


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """`x := y` or `x := y.f.g`; covers plain copies and field reads."""

    lhs: str
    rhs: Path


@dataclass(frozen=True)
class Alloc:
    """`x := new(site)`; site ids are positive and unique program-wide."""

    lhs: str
    site: int


@dataclass(frozen=True)
class AssignNull:
    lhs: str


@dataclass(frozen=True)
class Store:
    """`x.f := y`; single-level stores only, source must be a variable."""

    base: str
    field: str
    src: str


@dataclass(frozen=True)
class Assume:
    cond: Cond


@dataclass(frozen=True)
class Assert:
    cond: Cond


@dataclass(frozen=True)
class Call:
    """`o1, ... := call p(a1, ...)`; outs may be empty."""

    outs: tuple[str, ...]
    callee: str
    args: tuple[str, ...]


Statement = Assign | Alloc | AssignNull | Store | Assume | Assert | Call


@dataclass(frozen=True)
class Goto:
    """Nondeterministic jump to one of the listed labels."""

    targets: tuple[str, ...]


@dataclass(frozen=True)
class Return:
    pass


Transfer = Goto | Return


# ---------------------------------------------------------------------------
# Program structure
# ---------------------------------------------------------------------------

@dataclass
class Block:
    label: str
    stmts: list[Statement]
    transfer: Transfer


@dataclass
class Procedure:
    name: str
    params: list[str]
    returns: list[str]
    locals: list[str]
    blocks: list[Block]
    entry_block: str

    def block_map(self) -> dict[str, Block]:
        return {b.label: b for b in self.blocks}

    def scope_vars(self) -> list[str]:
        """Procedure-scope variables in declaration order (no duplicates)."""
        seen: list[str] = []
        for name in (*self.params, *self.locals, *self.returns):
            if name not in seen:
                seen.append(name)
        return seen


@dataclass
class Program:
    globals: list[str]
    procedures: list[Procedure]
    entry: str

    def proc_map(self) -> dict[str, Procedure]:
        return {p.name: p for p in self.procedures}


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    file: str = ""
    line: int = 0
    col: int = 0
    where: str = ""

    def __str__(self) -> str:
        loc = ""
        if self.file:
            loc = f"{self.file}:{self.line}:{self.col}: "
        elif self.where:
            loc = f"{self.where}: "
        return f"{loc}{self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Statement and CFG queries
# ---------------------------------------------------------------------------

def stmt_writes(stmt: Statement) -> tuple[str, ...]:
    """Variables assigned by a statement (call outputs count as assignments)."""
    if isinstance(stmt, (Assign, Alloc, AssignNull)):
        return (stmt.lhs,)
    if isinstance(stmt, Call):
        return stmt.outs
    return ()


def stmt_reads(stmt: Statement) -> tuple[str, ...]:
    """Variables read by a statement. Field names are not variables."""
    if isinstance(stmt, Assign):
        return (stmt.rhs.base,)
    if isinstance(stmt, Store):
        return (stmt.base, stmt.src)
    if isinstance(stmt, (Assume, Assert)):
        if isinstance(stmt.cond, NullCheck):
            return (stmt.cond.path.base,)
        return ()
    if isinstance(stmt, Call):
        return stmt.args
    return ()


def successors(proc: Procedure) -> dict[str, tuple[str, ...]]:
    out = {}
    for b in proc.blocks:
        if isinstance(b.transfer, Goto):
            out[b.label] = b.transfer.targets
        else:
            out[b.label] = ()
    return out


def predecessors(proc: Procedure) -> dict[str, list[str]]:
    preds: dict[str, list[str]] = {b.label: [] for b in proc.blocks}
    for b in proc.blocks:
        if isinstance(b.transfer, Goto):
            for t in b.transfer.targets:
                if t in preds and b.label not in preds[t]:
                    preds[t].append(b.label)
    return preds


def cfg_is_acyclic(proc: Procedure) -> bool:
    """True iff the block-level goto graph has no cycle."""
    succ = successors(proc)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {b.label: WHITE for b in proc.blocks}
    for start in color:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(succ[start]))]
        color[start] = GREY
        while stack:
            label, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[label] = BLACK
                stack.pop()
            elif color[nxt] == GREY:
                return False
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(succ[nxt])))
    return True


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(program: Program) -> list[Diagnostic]:
    """Check all structural invariants; returns an empty list iff they hold."""
    diags: list[Diagnostic] = []

    def err(message: str, where: str = "") -> None:
        diags.append(Diagnostic("error", message, where=where))

    names = [p.name for p in program.procedures]
    for n in sorted({n for n in names if names.count(n) > 1}):
        err(f"duplicate procedure name '{n}'")
    procs = program.proc_map()
    if program.entry not in procs:
        err(f"entry procedure '{program.entry}' is not defined")
    elif procs[program.entry].params:
        err(f"entry procedure '{program.entry}' must take no parameters")

    globals_ = set(program.globals)
    seen_sites: dict[int, str] = {}
    tagged_assigns: dict[str, int] = {}
    tagged_seen: set[str] = set()

    for proc in program.procedures:
        where = f"procedure {proc.name}"
        params, locals_, returns = set(proc.params), set(proc.locals), set(proc.returns)
        if params & locals_:
            err(f"params and locals overlap: {sorted(params & locals_)}", where)
        clash = (params | locals_) & globals_
        if clash:
            err(f"globals shadowed by procedure-scope names: {sorted(clash)}", where)
        if len(proc.returns) != len(returns):
            err("duplicate names in returns list", where)
        if returns & globals_:
            err(f"returns may not name globals: {sorted(returns & globals_)}", where)
        scope = params | locals_ | returns | globals_

        labels = [b.label for b in proc.blocks]
        label_set = set(labels)
        if len(labels) != len(label_set):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            err(f"duplicate block labels: {dupes}", where)
        if not proc.blocks:
            err("procedure has no blocks", where)
            continue
        if proc.entry_block not in label_set:
            err(f"entry block '{proc.entry_block}' is not a declared label", where)
        elif proc.entry_block != proc.blocks[0].label:
            err("entry block must be the first block", where)

        for block in proc.blocks:
            bwhere = f"{where}, block {block.label}"
            if isinstance(block.transfer, Goto):
                if not block.transfer.targets:
                    err("goto with no targets", bwhere)
                for t in block.transfer.targets:
                    if t not in label_set:
                        err(f"goto to undeclared label '{t}'", bwhere)
            for i, stmt in enumerate(block.stmts):
                swhere = f"{bwhere}, stmt {i}"
                for v in (*stmt_reads(stmt), *stmt_writes(stmt)):
                    if v not in scope:
                        err(f"undeclared variable '{v}'", swhere)
                if isinstance(stmt, Alloc):
                    if stmt.site <= 0:
                        err(f"allocation site id must be positive, got {stmt.site}", swhere)
                    elif stmt.site in seen_sites:
                        err(
                            f"allocation site {stmt.site} already used in {seen_sites[stmt.site]}",
                            swhere,
                        )
                    else:
                        seen_sites[stmt.site] = swhere
                if isinstance(stmt, Call):
                    callee = procs.get(stmt.callee)
                    if callee is None:
                        err(f"call to undefined procedure '{stmt.callee}'", swhere)
                    else:
                        if len(stmt.args) != len(callee.params):
                            err(
                                f"call to '{stmt.callee}' passes {len(stmt.args)} args, "
                                f"expects {len(callee.params)}",
                                swhere,
                            )
                        if len(stmt.outs) != len(callee.returns):
                            err(
                                f"call to '{stmt.callee}' binds {len(stmt.outs)} outputs, "
                                f"callee returns {len(callee.returns)}",
                                swhere,
                            )
                for v in stmt_writes(stmt):
                    if is_tagged(v):
                        tagged_assigns[v] = tagged_assigns.get(v, 0) + 1
                for v in (*stmt_reads(stmt), *stmt_writes(stmt)):
                    if is_tagged(v):
                        tagged_seen.add(v)

    for v in sorted(tagged_seen):
        n = tagged_assigns.get(v, 0)
        if n != 1:
            err(f"tagged variable '{v}' has {n} assignments, expected exactly 1")

    return diags
