"""State/transition semantics.

The T0-style fixture values are frozen from the worked example; the random
suite generates small action theories as source text and re-checks every
enumerated state and transition with evaluators written here from scratch.
"""

import random

import pytest

from almc.bat import CmpLit, Constraint, FunLit, OccLit
from almc.errors import DiagnosticSink
from almc.modular import compare
from almc.ontology import BASIC_FLUENT, DEFINED_FLUENT, FALSE, TRUE, dom_name
from almc.semantics import (
    Grounder, enumerate_states, compute_transitions, static_truth,
    system_pre_models,
)
from almc.syntax.parser import parse_file
from almc.tasks import compile_system

from conftest import CORPUS, parse_path


def compile_src(src: str, search=()):
    sink = DiagnosticSink()
    return compile_system(parse_file(src), [str(p) for p in search], sink)


def grounder_of(cs):
    pms = system_pre_models(cs.theory, cs.structure, cs.sink)
    return Grounder(cs.theory, pms[0])


def state_key(state):
    return frozenset((f, args, v) for f, args, v in state.atoms())


# ---------------------------------------------------------------- T0 fixture

T0_STATES = [
    {("dom_f", ("x",)): "false", ("dom_g", ("x",)): "true",
     ("g", ("x",)): "o"},
    {("dom_f", ("x",)): "false", ("dom_g", ("x",)): "true",
     ("g", ("x",)): "z"},
    {("dom_f", ("x",)): "true", ("dom_g", ("x",)): "true",
     ("f", ("x",)): "o", ("g", ("x",)): "o"},
    {("dom_f", ("x",)): "true", ("dom_g", ("x",)): "true",
     ("f", ("x",)): "o", ("g", ("x",)): "z"},
    {("dom_f", ("x",)): "true", ("dom_g", ("x",)): "true",
     ("f", ("x",)): "z", ("g", ("x",)): "o"},
    {("dom_f", ("x",)): "true", ("dom_g", ("x",)): "true",
     ("f", ("x",)): "z", ("g", ("x",)): "z"},
]

# full transition relation over the indices above, action sets of size <= 1
T0_TRANSITIONS = {
    (0, frozenset(), 0), (0, frozenset({"a"}), 2), (0, frozenset({"b"}), 0),
    (1, frozenset(), 1), (1, frozenset({"a"}), 1), (1, frozenset({"b"}), 1),
    (2, frozenset(), 2), (2, frozenset({"a"}), 2), (2, frozenset({"b"}), 0),
    (3, frozenset(), 3), (3, frozenset({"a"}), 3), (3, frozenset({"b"}), 1),
    (4, frozenset(), 4), (4, frozenset({"a"}), 2), (4, frozenset({"b"}), 0),
    (5, frozenset(), 5), (5, frozenset({"a"}), 5), (5, frozenset({"b"}), 1),
}


@pytest.fixture(scope="module")
def t0():
    sink = DiagnosticSink()
    cs = compile_system(parse_path(CORPUS / "t0.alm"), [], sink)
    g = grounder_of(cs)
    space = enumerate_states(g)
    return g, space


def test_t0_states_exact(t0):
    g, space = t0
    got = {state_key(s) for s in space.states}
    want = {frozenset((f, a, v) for (f, a), v in d.items()) for d in T0_STATES}
    assert got == want
    assert space.well_founded


def test_t0_transitions_exact(t0):
    g, space = t0
    index = {state_key(s): T0_STATES.index(dict(
        ((f, a), v) for f, a, v in s.atoms())) for s in space.states}
    order = sorted(range(len(space.states)),
                   key=lambda i: index[state_key(space.states[i])])
    # renumber into the fixture's order
    trans = compute_transitions(g, space.states, "upto1")
    renum = {i: index[state_key(space.states[i])]
             for i in range(len(space.states))}
    got = {(renum[i], frozenset(map(str, acts)), renum[j])
           for i, acts, j in trans}
    assert got == T0_TRANSITIONS


def test_empty_action_set_is_inertia(t0):
    g, space = t0
    trans = compute_transitions(g, space.states, "upto1")
    for i, acts, j in trans:
        if not acts:
            assert i == j


def test_not_well_founded_fixture_has_no_states():
    sink = DiagnosticSink()
    cs = compile_system(parse_path(CORPUS / "n_w_f.alm"), [], sink)
    g = grounder_of(cs)
    space = enumerate_states(g)
    assert not space.well_founded
    assert space.states == []


def test_three_pre_models_for_alice():
    sink = DiagnosticSink()
    cs = compile_system(parse_path(CORPUS / "professors.alm"), [], sink)
    pms = system_pre_models(cs.theory, cs.structure, sink)
    assert len(pms) == 3


# ------------------------------------------------------------ random BATs

def make_source(rng):
    n_obj = rng.randrange(1, 3)
    objects = [f"e{i}" for i in range(n_obj)]
    n_act = rng.randrange(1, 3)
    actions = [f"act{i}" for i in range(n_act)]
    fluents = ["p", "q", "r"][: rng.randrange(2, 4)]
    total = {f for f in fluents if rng.random() < 0.3}

    def lit(f=None):
        f = f or rng.choice(fluents)
        sign = "-" if rng.random() < 0.4 else ""
        return f"{sign}{f}(X)"

    axioms = []
    for _ in range(rng.randrange(1, 4)):
        body = f"instance(A, acts), instance(X, elems)"
        if rng.random() < 0.5:
            body += f", {lit()}"
        axioms.append(f"occurs(A) causes {lit()} if {body}.")
    if rng.random() < 0.5:
        axioms.append(f"false if {lit()}, {lit()}, instance(X, elems).")
    if rng.random() < 0.5:
        axioms.append(f"{lit()} if {lit()}, instance(X, elems).")
    axioms.append(f"d(X) if {lit()}, {lit()}, instance(X, elems).")
    if rng.random() < 0.5:
        axioms.append(
            f"impossible occurs(A) if instance(A, acts), "
            f"instance(X, elems), {lit()}.")

    decls = "\n".join(
        f"              {'total ' if f in total else ''}{f} : "
        "elems -> booleans" for f in fluents)
    ax = "\n".join(f"        {a}" for a in axioms)
    insts = "\n".join(f"      {o} in elems" for o in objects) + "\n" + \
        "\n".join(f"      {a} in acts" for a in actions)
    return f"""
system description rnd
  theory t
    module m
      sort declarations
        elems :: universe
        acts :: actions
      function declarations
        fluents
          basic
{decls}
          defined
            d : elems -> booleans
      axioms
{ax}
  structure b
    instances
{insts}
"""


def lit_true(g, pm, lit, env, values):
    """Truth of a ground body literal against a state's value map."""
    if isinstance(lit, CmpLit):
        return compare(lit.op, g.eval_term(lit.lhs, env),
                       g.eval_term(lit.rhs, env), lit.span)
    assert isinstance(lit, FunLit)
    argvals = tuple(g.eval_term(a, env) for a in lit.args)
    val = g.eval_term(lit.value, env)
    info = g.sig.functions.get(lit.func)
    if info is None or not info.is_fluent:
        return static_truth(pm, lit, argvals, val)
    cur = values.get((lit.func, argvals))
    if lit.op == "=":
        return cur == val
    return cur is not None and cur != val


def check_state(g, pm, theory, state):
    values = {(f, a): v for f, a, v in state.atoms()}
    # (c) state constraints hold
    for c in theory.constraints:
        for env in g.envs(c):
            if all(lit_true(g, pm, b, env, values) for b in c.body
                   if not isinstance(b, OccLit)):
                assert c.head is not None, (c, env, values)
                assert lit_true(g, pm, c.head, env, values), (c, env, values)
    # (b) defined fluents are exactly the definitional fixpoint
    derived = {}
    changed = True
    while changed:
        changed = False
        for clause in theory.definitions:
            for env in g.envs(clause):
                base = dict(values)
                base.update(derived)
                if all(lit_true(g, pm, b, env, base) for b in clause.body):
                    key = (clause.head.func,
                           tuple(g.eval_term(a, env)
                                 for a in clause.head.args))
                    if derived.get(key) != TRUE:
                        derived[key] = TRUE
                        changed = True
    for f in theory.sig.functions.values():
        if f.kind != DEFINED_FLUENT:
            continue
        for args in g.tuples[f.name]:
            want = derived.get((f.name, args), FALSE)
            assert values.get((f.name, args), FALSE) == want, \
                (f.name, args, values)


def check_transitions(g, theory, states, trans):
    affected = set()
    for law in theory.dynamic:
        affected.add(law.head.func)
        affected.add(dom_name(law.head.func))
    # indirect effects: state-constraint heads may be forced to follow
    for c in theory.constraints:
        if c.head is not None:
            affected.add(c.head.func)
            affected.add(dom_name(c.head.func))
    basic = {f.name for f in theory.sig.functions.values()
             if f.kind == BASIC_FLUENT}
    for i, acts, j in trans:
        a = {(f, args): v for f, args, v in states[i].atoms()}
        b = {(f, args): v for f, args, v in states[j].atoms()}
        if not acts:
            assert i == j
            continue
        for key in set(a) | set(b):
            if key[0] not in basic:
                continue  # defined fluents follow their definitions
            if a.get(key) != b.get(key):
                assert key[0] in affected, (key, i, j, acts)


def test_100_random_bats_satisfy_inertia_cwa_and_constraints():
    rng = random.Random(413)
    n_states = 0
    for trial in range(100):
        src = make_source(rng)
        cs = compile_src(src)
        pms = system_pre_models(cs.theory, cs.structure, cs.sink)
        (pm,) = pms
        g = Grounder(cs.theory, pm)
        space = enumerate_states(g)
        for s in space.states:
            check_state(g, pm, cs.theory, s)
        trans = compute_transitions(g, space.states, "upto1")
        check_transitions(g, cs.theory, space.states, trans)
        n_states += len(space.states)
    assert n_states > 100  # the suite is not vacuous
