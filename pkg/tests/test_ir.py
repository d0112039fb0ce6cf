from nullgvn.ir import (
    Alloc,
    Assign,
    Block,
    Path,
    Procedure,
    Program,
    Return,
    cfg_is_acyclic,
    is_tagged,
    original_name,
    validate,
)

from conftest import parse_ok


def test_tagged_naming():
    assert is_tagged("gvnTmp__gvn1")
    assert is_tagged("gvnTmp__gvn12")
    assert not is_tagged("gvnTmp")
    assert not is_tagged("x__2")
    assert original_name("x__2") == "x"
    assert original_name("x") == "x"
    assert original_name("gvnTmp__gvn1") == "gvnTmp__gvn1"


def test_validate_clean_program(bundled):
    for name, program in bundled.items():
        assert validate(program) == [], name


def test_validate_goto_undeclared_label():
    src = """
    procedure main() {
      var x;
      L1:
        x := new(1);
        goto L9;
    }
    """
    from nullgvn.parse import parse_program

    diags = parse_program(src)
    assert isinstance(diags, list)
    assert any("L9" in d.message for d in diags)


def test_validate_duplicate_site():
    prog = Program(
        globals=[],
        procedures=[
            Procedure(
                "main",
                [],
                [],
                ["x", "y"],
                [Block("L1", [Alloc("x", 3), Alloc("y", 3)], Return())],
                "L1",
            )
        ],
        entry="main",
    )
    diags = validate(prog)
    assert len(diags) == 1
    assert "3" in diags[0].message


def test_validate_call_arity():
    src = """
    procedure f(a) returns (r) { L1: r := a; return; }
    procedure main() { var x; L1: x := new(1); x := call f(x, x); return; }
    """
    from nullgvn.parse import parse_program

    diags = parse_program(src)
    assert isinstance(diags, list)
    assert any("args" in d.message for d in diags)


def test_validate_tagged_single_assignment():
    prog = Program(
        globals=[],
        procedures=[
            Procedure(
                "main",
                [],
                [],
                ["x", "gvnTmp__gvn1"],
                [
                    Block(
                        "L1",
                        [
                            Alloc("x", 1),
                            Assign("gvnTmp__gvn1", Path("x")),
                            Assign("gvnTmp__gvn1", Path("x")),
                        ],
                        Return(),
                    )
                ],
                "L1",
            )
        ],
        entry="main",
    )
    diags = validate(prog)
    assert any("gvnTmp__gvn1" in d.message for d in diags)


def test_cfg_acyclic_chain(bundled):
    f = bundled["basic_interproc"].procedures[0]
    assert cfg_is_acyclic(f)


def test_cfg_self_loop():
    p = parse_ok("procedure main() { L1: goto L1; }")
    assert not cfg_is_acyclic(p.procedures[0])


def test_cfg_diamond():
    p = parse_ok(
        """
        procedure main() {
          L1: goto L2, L3;
          L2: goto L4;
          L3: goto L4;
          L4: return;
        }
        """
    )
    assert cfg_is_acyclic(p.procedures[0])
