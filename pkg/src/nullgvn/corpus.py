"""Bundled example programs and a seeded random program generator.

The bundled set covers the motivating patterns of the transformation
(guarded copies, chained field reads, merge-point checks, field and call
kills, loops) plus adversarial corners. The generator produces closed
programs (no read of a never-assigned variable on any path) with a
"defensive programmer" bias: dereferences tend to sit behind a non-null
check, which is exactly the shape the transformation exploits.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .ir import (
    Alloc,
    Assert,
    Assign,
    AssignNull,
    Assume,
    Block,
    Call,
    Goto,
    NullCheck,
    Opaque,
    Path,
    Procedure,
    Program,
    Return,
    Store,
    validate,
)
from .parse import parse_program

_SOURCES: dict[str, str] = {}


def _add(name: str, text: str) -> None:
    _SOURCES[name] = text.strip() + "\n"


# -- core examples -----------------------------------------------------------

_add("basic_interproc", """
var x;
procedure f(var y : int) returns u : int {
  var z;
  L1:
    x := y.f;
    assume (x != Null);
    goto L2;
  L2:
    z.g := y;
    assert (x != Null);
    u := x;
    return;
}
procedure main() {
  var a;
  var b;
  L1:
    a := new(1);
    b := call f(a);
    goto L2;
  L2:
    return;
}
""")

_add("reassign_null_after_check", """
procedure main() {
  var x; var y;
  L1:
    x := new(1);
    assert (x != Null);
    y := x.f;
    x := Null;
    return;
}
""")

_add("guarded_copy", """
procedure main() {
  var x; var y; var z;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    assume (x != Null);
    y := x;
    assert (x != Null);
    z := x.f;
    return;
}
""")

_add("store_invalidates_check", """
procedure main() {
  var x; var y; var z; var w;
  L0:
    x := new(1);
    w := new(2);
    x.f := w;
    y := new(3);
    z := new(4);
    assume (x.f != Null);
    y.f := z;
    z := x.f;
    return;
}
""")

_add("chained_field_equiv", """
procedure main() {
  var x; var v1; var v2; var v3; var c; var d;
  var y; var z; var a; var b;
  L1:
    x := new(1);
    v1 := new(2);
    v2 := new(3);
    v3 := new(4);
    c := new(5);
    d := new(6);
    x.f := v1;
    v1.g := v2;
    v2.h := v3;
    y := x.f.g;
    z := y.h;
    assume (z != Null);
    a := x.f;
    b := a.g.h;
    assert (b != Null);
    c.g := d;
    return;
}
""")

_add("branch_merge_check", """
procedure check(x) returns (r) {
  L0:
    r := x;
    goto L1, L2;
  L1:
    assume (x != Null);
    goto L3;
  L2:
    assume (x != Null);
    goto L3;
  L3:
    assert (x != Null);
    return;
}
procedure main() {
  var p; var q;
  L0:
    goto LA, LB;
  LA:
    p := new(1);
    goto LC;
  LB:
    p := Null;
    goto LC;
  LC:
    q := call check(p);
    return;
}
""")


def _chained_field_equiv_rewritten() -> Program:
    """The chained-field program after the transformation, built directly
    since source text cannot declare tagged variables."""
    program = parse_program(_SOURCES["chained_field_equiv"])
    assert isinstance(program, Program)
    proc = program.procedures[0]
    tag = "gvnTmp__gvn1"
    proc.locals.append(tag)
    out = []
    for stmt in proc.blocks[0].stmts:
        if isinstance(stmt, Assign) and stmt.lhs == "b":
            out.append(Assign("b", Path(tag)))
        elif isinstance(stmt, Assert):
            out.append(Assert(NullCheck(Path(tag), True)))
        else:
            out.append(stmt)
            if (
                isinstance(stmt, Assume)
                and isinstance(stmt.cond, NullCheck)
                and stmt.cond.path == Path("z")
            ):
                out.append(Assign(tag, Path("z")))
    proc.blocks[0].stmts = out
    return program


# -- adversarial cases --------------------------------------------------------

_add("store_kill_across_blocks", """
procedure main() {
  var x; var y; var z; var w;
  L1:
    x := new(1);
    w := new(2);
    x.f := w;
    y := new(3);
    z := new(4);
    assume (x.f != Null);
    goto L2;
  L2:
    y.f := z;
    goto L3;
  L3:
    w := x.f;
    assert (w != Null);
    return;
}
""")

_add("call_invalidates_global_check", """
var g;
procedure clobber() {
  L1:
    g := Null;
    return;
}
procedure main() {
  var y;
  L1:
    g := new(1);
    assume (g != Null);
    call clobber();
    y := g;
    assert (y != Null);
    return;
}
""")

_add("global_check_no_call", """
var g;
procedure main() {
  var y;
  L1:
    goto LA, LB;
  LA:
    g := new(1);
    goto L2;
  LB:
    g := Null;
    goto L2;
  L2:
    assume (g != Null);
    y := g;
    assert (y != Null);
    return;
}
""")

_add("diamond_one_sided_check", """
procedure main() {
  var x; var y;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    assume (x != Null);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    assert (x != Null);
    return;
}
""")

_add("merge_without_prior_mention", """
procedure check(x) returns (r) {
  L0:
    goto L1, L2;
  L1:
    assume (x != Null);
    goto L3;
  L2:
    assume (x != Null);
    goto L3;
  L3:
    assert (x != Null);
    r := x;
    return;
}
procedure main() {
  var p; var q;
  L0:
    goto LA, LB;
  LA:
    p := new(1);
    goto LC;
  LB:
    p := Null;
    goto LC;
  LC:
    q := call check(p);
    return;
}
""")

_add("self_referential_load", """
procedure main() {
  var a; var b; var x; var y;
  L0:
    a := new(1);
    b := new(2);
    a.f := b;
    b.f := a;
    x := a;
    assume (x.f != Null);
    x := x.f;
    y := x;
    assert (y != Null);
    return;
}
""")

_add("tag_lookalike_names", """
procedure main() {
  var gvnTmp; var gvnTmp1; var x;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    gvnTmp := x;
    assume (gvnTmp != Null);
    gvnTmp1 := gvnTmp;
    assert (gvnTmp1 != Null);
    return;
}
""")

_add("store_base_substitution", """
procedure main() {
  var x; var y;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    y := new(2);
    assume (x != Null);
    x.f := y;
    assert (x != Null);
    return;
}
""")

_add("opaque_branching", """
procedure main() {
  var x; var y;
  L0:
    x := new(1);
    assume *;
    goto LA, LB;
  LA:
    y := x;
    assert *;
    goto L1;
  LB:
    y := Null;
    goto L1;
  L1:
    assert (x != Null);
    return;
}
""")

_add("null_equality_assume", """
procedure main() {
  var x; var y;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    assume (x == Null);
    y := x;
    assert (y == Null);
    return;
}
""")

_add("assert_chain", """
procedure main() {
  var x; var y;
  L0:
    goto LA, LB;
  LA:
    x := new(1);
    goto L1;
  LB:
    x := Null;
    goto L1;
  L1:
    assert (x != Null);
    y := x;
    assert (y != Null);
    return;
}
""")

_add("deep_field_chain", """
procedure main() {
  var a; var b; var c; var d; var x;
  L0:
    a := new(1);
    b := new(2);
    c := new(3);
    d := new(4);
    a.f := b;
    b.f := c;
    c.f := d;
    assume (a.f.f.f != Null);
    x := a.f.f.f;
    assert (x != Null);
    return;
}
""")

_add("loop_self", """
procedure main() {
  var a; var b; var x;
  L0:
    a := new(1);
    b := new(2);
    a.f := b;
    b.f := a;
    x := a;
    goto L1;
  L1:
    x := x.f;
    goto L1, L2;
  L2:
    assert (x != Null);
    return;
}
""")

_add("loop_nested", """
procedure main() {
  var a; var b; var x; var i;
  L0:
    a := new(1);
    b := new(2);
    a.f := b;
    b.f := a;
    x := a;
    i := a;
    goto OUT;
  OUT:
    x := x.f;
    goto IN;
  IN:
    i := i.f;
    goto IN, OUTB;
  OUTB:
    i := x;
    goto OUT, DONE;
  DONE:
    assert (x != Null);
    return;
}
""")

_add("loop_multi_exit", """
procedure main() {
  var a; var b; var x; var y; var z;
  L0:
    a := new(1);
    b := new(2);
    a.f := b;
    b.f := a;
    x := a;
    goto H;
  H:
    x := x.f;
    goto B, X1;
  B:
    y := x;
    goto H, X2;
  X1:
    z := new(3);
    assert (x != Null);
    return;
  X2:
    z := new(4);
    assert (y != Null);
    return;
}
""")

_add("loop_guarded_walk", """
procedure main() {
  var a; var b; var x; var y;
  L0:
    a := new(1);
    b := new(2);
    a.f := b;
    x := a;
    goto L1;
  L1:
    assume (x != Null);
    y := x;
    x := x.f;
    goto L1, L2;
  L2:
    assert (y != Null);
    return;
}
""")


def bundled_programs() -> dict[str, Program]:
    """Name -> parsed program; every entry validates cleanly."""
    out: dict[str, Program] = {}
    for name, text in _SOURCES.items():
        program = parse_program(text, filename=name)
        if isinstance(program, list):
            raise AssertionError(f"bundled program {name} does not parse: {program[0]}")
        out[name] = program
    out["chained_field_equiv_rewritten"] = _chained_field_equiv_rewritten()
    for name, program in out.items():
        problems = validate(program)
        if problems:
            raise AssertionError(f"bundled program {name}: {problems[0]}")
    return out


def bundled_sources() -> dict[str, str]:
    """Name -> source text for the programs that exist in textual form."""
    return dict(_SOURCES)


# ---------------------------------------------------------------------------
# Random program generator
# ---------------------------------------------------------------------------

DEFAULT_WEIGHTS = {
    "defensive": 4.0,
    "copy": 1.5,
    "load": 1.0,
    "store": 1.0,
    "alloc": 1.0,
    "null": 0.5,
    "assume": 0.3,
    "assert": 0.4,
    "call": 0.8,
}

FIELDS = ("f", "g", "h")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    max_procs: int = 2
    max_blocks: int = 4
    max_stmts: int = 4
    weights: tuple[tuple[str, float], ...] = tuple(DEFAULT_WEIGHTS.items())
    null_check_density: float = 0.85
    loop_prob: float = 0.15


def _weighted(rng: random.Random, weights: tuple[tuple[str, float], ...]) -> str:
    total = sum(w for _, w in weights)
    x = rng.random() * total
    for kind, w in weights:
        x -= w
        if x <= 0:
            return kind
    return weights[-1][0]


class _Gen:
    def __init__(self, config: GeneratorConfig):
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.site = 0
        self.signatures: dict[str, tuple[list[str], list[str]]] = {}

    def new_site(self) -> int:
        self.site += 1
        return self.site

    def generate(self) -> Program:
        rng, cfg = self.rng, self.cfg
        n_procs = rng.randint(1, max(1, cfg.max_procs))
        globals_ = [f"g{i}" for i in range(rng.randint(0, 2))]
        names = ["main"] + [f"p{i}" for i in range(1, n_procs)]
        # Signatures first: call sites need the callee arity.
        self.signatures["main"] = ([], [])
        for name in names[1:]:
            params = [f"a{i}" for i in range(rng.randint(0, 2))]
            returns = [f"r{i}" for i in range(rng.randint(0, 1))]
            self.signatures[name] = (params, returns)
        procs = []
        for i, name in enumerate(names):
            procs.append(self._procedure(i, name, names, globals_))
        program = Program(globals=globals_, procedures=procs, entry="main")
        self._ensure_assert(program)
        problems = validate(program)
        if problems:
            raise AssertionError(f"generator produced invalid program: {problems[0]}")
        return program

    def _procedure(self, index: int, name: str, names: list[str], globals_: list[str]) -> Procedure:
        rng, cfg = self.rng, self.cfg
        is_main = index == 0
        params, returns = self.signatures[name]
        locals_ = [f"v{i}" for i in range(rng.randint(2, 4))]
        n_blocks = rng.randint(1, max(1, cfg.max_blocks))
        labels = [f"B{i}" for i in range(n_blocks)]

        # Chain edges keep every block reachable; occasional skip edges add
        # merge diversity; an optional back edge forms a natural loop.
        targets: dict[str, list[str]] = {l: [] for l in labels}
        for i in range(n_blocks - 1):
            targets[labels[i]].append(labels[i + 1])
            if i + 2 < n_blocks and rng.random() < 0.3:
                targets[labels[i]].append(labels[rng.randint(i + 2, n_blocks - 1)])

        blocks = [Block(l, [], Goto(tuple(targets[l])) if targets[l] else Return()) for l in labels]
        proc = Procedure(name, params, returns, locals_, blocks, labels[0])

        if n_blocks >= 2 and rng.random() < cfg.loop_prob:
            self._add_back_edge(proc)

        scope = proc.scope_vars() + globals_
        known: list[str] = list(params)
        # Prologue: initialize globals (entry procedure only) and every
        # procedure-scope variable, so no path reads an unassigned name.
        prologue: list = []
        init_targets = (globals_ if is_main else []) + locals_ + returns
        for v in init_targets:
            choice = rng.random()
            if choice < 0.55 or not known:
                prologue.append(self._alloc(v))
            elif choice < 0.75:
                prologue.append(self._null(v))
            else:
                prologue.append(Assign(v, Path(rng.choice(known))))
            known.append(v)
        blocks[0].stmts = prologue

        callees = names[index + 1 :]
        for block in blocks:
            body: list = []
            for _ in range(rng.randint(0, max(0, cfg.max_stmts))):
                body.extend(self._statement(scope, callees, names, globals_))
            block.stmts = block.stmts + body
        return proc

    def _add_back_edge(self, proc: Procedure) -> None:
        from .normalize import dominators  # deferred; normalize imports ir only

        rng = self.rng
        labels = [b.label for b in proc.blocks]
        u_i = rng.randint(1, len(labels) - 1)
        h_i = rng.randint(0, u_i)
        u, h = labels[u_i], labels[h_i]
        block = proc.blocks[u_i]
        if not isinstance(block.transfer, Goto):
            block.transfer = Goto((h,))
        elif h not in block.transfer.targets:
            block.transfer = Goto(block.transfer.targets + (h,))
        else:
            return
        if h not in dominators(proc)[u]:
            # Irreducible shape; drop the edge again.
            kept = tuple(t for t in block.transfer.targets if t != h)
            block.transfer = Goto(kept) if kept else Return()

    def _alloc(self, v: str):
        return Alloc(v, self.new_site())

    def _null(self, v: str):
        return AssignNull(v)

    def _cond(self, path: Path, want_neq: bool = True):
        rng, cfg = self.rng, self.cfg
        if rng.random() < cfg.null_check_density:
            return NullCheck(path, want_neq)
        if rng.random() < 0.3:
            return NullCheck(path, not want_neq)
        return Opaque()

    def _statement(self, scope: list[str], callees: list[str], names: list[str], globals_: list[str]) -> list:
        rng, cfg = self.rng, self.cfg
        kind = _weighted(rng, cfg.weights)
        pick = lambda: rng.choice(scope)
        fieldname = lambda: rng.choice(FIELDS)

        if kind == "defensive":
            # The shape the transformation exploits: load, check, use. One
            # density draw covers the pair, a real check guards a real assert.
            src, dst, cpy = pick(), pick(), pick()
            real = rng.random() < cfg.null_check_density

            def cond(p: Path):
                if real:
                    return NullCheck(p, True)
                if rng.random() < 0.3:
                    return NullCheck(p, False)
                return Opaque()

            out = [Assign(dst, Path(src, (fieldname(),)))]
            out.append(Assume(cond(Path(dst))))
            subject = dst
            if rng.random() < 0.5 and cpy != dst:
                out.append(Assign(cpy, Path(dst)))
                subject = cpy
            out.append(Assert(cond(Path(subject))))
            return out
        if kind == "copy":
            a, b = pick(), pick()
            return [Assign(a, Path(b))]
        if kind == "load":
            depth = 2 if rng.random() < 0.25 else 1
            fields = tuple(fieldname() for _ in range(depth))
            return [Assign(pick(), Path(pick(), fields))]
        if kind == "store":
            return [Store(pick(), fieldname(), pick())]
        if kind == "alloc":
            return [self._alloc(pick())]
        if kind == "null":
            return [self._null(pick())]
        if kind == "assume":
            return [Assume(self._cond(Path(pick())))]
        if kind == "assert":
            return [Assert(self._cond(Path(pick())))]
        if kind == "call" and callees:
            callee_name = rng.choice(callees)
            params, returns = self.signatures[callee_name]
            args = tuple(pick() for _ in range(len(params)))
            candidates = [v for v in scope if v not in globals_]
            outs = tuple(rng.choice(candidates) for _ in range(len(returns)))
            if len(set(outs)) != len(outs):
                return []
            return [Call(outs, callee_name, args)]
        return []

    def _ensure_assert(self, program: Program) -> None:
        for proc in program.procedures:
            for block in proc.blocks:
                if any(isinstance(s, Assert) for s in block.stmts):
                    return
        main = program.procedures[0]
        scope = main.scope_vars()
        block = main.blocks[-1]
        if scope:
            block.stmts.append(Assert(self._cond(Path(scope[0]))))
        else:
            block.stmts.append(Assert(Opaque()))


def generate(config: GeneratorConfig) -> Program:
    """Deterministic program generation: same config, same program."""
    return _Gen(config).generate()
