import pytest

from almc.bat import build_action_theory
from almc.errors import AlmError, DiagnosticSink, InputError
from almc.ontology import build_signature
from almc.syntax import ast
from almc.syntax.parser import parse_file, parse_literal_text

from conftest import ALM_FILES, parse_path


@pytest.mark.parametrize("path", ALM_FILES, ids=lambda p: p.name)
def test_corpus_parses(path):
    node = parse_path(path)
    assert isinstance(node, (ast.System, ast.Theory))


def test_system_shape():
    src = """
    system description s
      theory t
        module m
          sort declarations
            rooms :: universe
          function declarations
            fluents
              basic
                total locked : rooms -> booleans
          axioms
            locked(R) if instance(R, rooms).
      structure b
        instances
          kitchen in rooms
    """
    node = parse_file(src)
    assert isinstance(node, ast.System)
    assert node.name == "s"
    (mod,) = node.theory.items
    assert mod.name == "m"
    assert mod.sorts[0].names == ("rooms",)
    (f,) = mod.functions
    assert (f.name, f.total, f.cat, f.basic) == ("locked", True, "fluent", True)
    assert isinstance(mod.axioms[0], ast.Rule)
    assert node.structure.instances[0].sorts == ("rooms",)


def test_dynamic_law_and_executability():
    src = """
    theory t
      module m
        sort declarations
          move :: actions
            attributes
              dest : universe
        function declarations
          fluents
            basic
              at : booleans
        axioms
          occurs(X) causes at if instance(X, move).
          impossible occurs(X) if instance(X, move), at.
    """
    mod = parse_file(src).items[0]
    dyn, imp = mod.axioms
    assert isinstance(dyn, ast.DynamicLaw) and dyn.sort == "move"
    assert isinstance(imp, ast.Executability) and imp.sort == "move"


def test_import_forms():
    for line in ["import theory motion from commonsense_library",
                 "import module sequence from commonsense_lib",
                 "import motion from commonsense_library",
                 "import motion.moving from commonsense_library"]:
        node = parse_file(f"theory t\n  {line}\n  module m\n")
        imp = node.items[0]
        assert isinstance(imp, ast.ImportDirective)
        assert imp.library in ("commonsense_library", "commonsense_lib")


def test_parameterised_constants_and_ranges():
    src = """
    theory t
      module m
        sort declarations
          points :: universe
          elevations :: universe
            attributes
              height : [0..10]
        object constants
          top(elevations) : points
    """
    mod = parse_file(src).items[0]
    (decl,) = mod.constants
    ((name, params),) = decl.consts
    assert name == "top" and params == ("elevations",)
    attr = mod.sorts[1].attrs[0]
    assert isinstance(attr.result, ast.RangeSort)
    assert (attr.result.lo, attr.result.hi) == (0, 10)


def test_symbolic_range_bounds():
    src = """
    theory t
      module m
        sort declarations
          sequences :: universe
            attributes
              length : [1..4]
              component : [0..length] -> universe
    """
    comp = parse_file(src).items[0].sorts[0].attrs[1]
    assert comp.args[0].hi == "length"


def test_where_clause_schema():
    src = """
    system description s
      theory t
        module m
          sort declarations
            points :: universe
            carry :: actions
      structure b
        instances
          p1, p2 in points
          carry(box, P) in carry where instance(P, points), P != p1
            dest = P
    """
    inst = parse_file(src).structure.instances[1]
    assert len(inst.where) == 2
    assert isinstance(inst.objects[0], ast.App)
    assert inst.attrs[0].name == "dest"


def test_parse_literal_text():
    lit = parse_literal_text("loc_in(monkey) = initial_box")
    assert not lit.neg and lit.op == "="
    neg = parse_literal_text("-holding(monkey, banana)")
    assert neg.neg and neg.op is None


def test_facts_without_if_are_rules():
    src = """
    theory t
      module m
        function declarations
          statics
            basic
              connected : booleans
        axioms
          connected.
    """
    rule = parse_file(src).items[0].axioms[0]
    assert isinstance(rule, ast.Rule) and rule.body == ()


# ---------------------------------------------------------------- negatives

def _reject(src: str):
    """The input must be refused by parsing or by signature/theory checks."""
    sink = DiagnosticSink()
    try:
        node = parse_file(src, "bad.alm")
        mods = node.items if isinstance(node, ast.Theory) \
            else node.theory.items
        for mod in mods:
            if isinstance(mod, ast.Module):
                sig = build_signature(mod, sink)
                build_action_theory(mod, sig, sink)
        sink.raise_if_errors()
    except AlmError as exc:
        return exc
    raise AssertionError("input was accepted")


_MOD = "theory t\n  module m\n"
_SD = "theory t\n  module m\n    sort declarations\n"
_FN = (_SD + "      s :: universe\n"
       + "    function declarations\n      fluents\n        basic\n")
_AX = _FN + "          p : s -> booleans\n    axioms\n"

NEGATIVE = [
    # --- lexer: characters outside the alphabet
    "theory t @",
    "theory t #",
    "theory t $",
    "theory t ?",
    "theory t & module",
    "theory t ; module",
    "theory t { }",
    'theory t "quoted"',
    "theory t `tick`",
    "theory t | alt",
    # --- top level shape
    "",
    "theory",
    "module m",
    "system s",
    "system description",
    "system description s",
    "system description s\n  theory t\n    module m\n",  # no structure
    "system description s\n  structure b\n",             # no theory
    "theory t\n  module M\n",                            # variable as name
    "theory t\n  module 3\n",
    # --- declarations
    _MOD + "    sort declarations\n      a ::\n",
    _MOD + "    sort declarations\n      a, :: universe\n",
    _MOD + "    sort declarations\n      :: universe\n",
    _MOD + "    sort declarations\n      module :: universe\n",
    _MOD + "    sort declarations\n      3 :: universe\n",
    _SD + "      a :: [0..]\n",
    _SD + "      a :: [..3]\n",
    _SD + "      a :: [0..3\n",
    _SD + "      a :: universe\n        attributes\n          x :\n",
    _MOD + "    object constants\n      o :\n",
    _MOD + "    object constants\n      o : 5\n",
    _MOD + "    object constants\n      : s\n",
    _FN + "          f\n",
    _FN + "          f : a *\n",
    _FN + "          f : a * -> booleans\n",
    _FN + "          f booleans\n",
    # --- axioms
    _AX + "      occurs(X) causes .\n",
    _AX + "      occurs X causes p(X).\n",
    _AX + "      causes p(X).\n",
    _AX + "      impossible occurs(X) if\n",
    _AX + "      p(X) if\n",
    _AX + "      p(X) if q(X)\n",       # missing final dot
    _AX + "      p(X) = .\n",
    _AX + "      p(X) .. q(X).\n",
    # --- imports / dependencies
    "theory t\n  import from lib\n  module m\n",
    "theory t\n  import x from\n  module m\n",
    _MOD.replace("module m", "module m\n    depends on"),
    # --- structure
    "system description s\n  theory t\n    module m\n"
    "  structure b\n    instances\n      x in\n",
    "system description s\n  theory t\n    module m\n"
    "  structure b\n    instances\n      in points\n",
    "system description s\n  theory t\n    module m\n"
    "  structure b\n    instances\n      x in points\n        actor =\n",
    # --- coherence (signature / theory level)
    _SD + "      a :: b\n",                                  # unknown parent
    _SD + "      a :: a\n",                                  # cycle
    _SD + "      booleans :: universe\n",                    # reserved
    _FN + "          instance : s -> booleans\n",            # reserved name
    _AX + "      p(X) if p(X) = p(X).\n",   # two user functions in one atom
]

assert len(NEGATIVE) == 55


@pytest.mark.parametrize("idx", range(len(NEGATIVE)))
def test_negative_corpus_is_rejected_with_location(idx):
    exc = _reject(NEGATIVE[idx])
    span = getattr(exc, "span", None)
    assert span is not None and span.line >= 1
    assert str(exc)  # non-empty diagnostic


def test_negative_corpus_counts():
    assert len(NEGATIVE) >= 50


def test_cyclic_depends_on_is_diagnosed():
    src = """
    theory t
      module a
        depends on b
      module b
        depends on a
    """
    from almc.modular import resolve_theory, flatten
    sink = DiagnosticSink()
    node = parse_file(src)
    mods = resolve_theory(node, [], sink)
    with pytest.raises(AlmError) as exc:
        flatten(mods, node.name, sink)
        sink.raise_if_errors()
    assert "cycle" in str(exc.value) or "depends" in str(exc.value)
