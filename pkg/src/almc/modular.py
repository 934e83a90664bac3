"""Module system and structures.

Three jobs live here:

* resolving `import` directives against library search paths and flattening a
  theory's module hierarchy into a single module (union of declarations and
  axioms, dependencies first, duplicates removed);
* expanding a structure into a concrete object universe (plain instances,
  parameterised instance schemas with `where` clauses, and parameterised
  object constants declared in modules);
* enumerating the pre-models of a system: one candidate per placement of
  objects into source nodes of the sort hierarchy, each completed with the
  values of statics and attributes derivable from the structure and from the
  static-only axioms of the theory.  Candidates whose statics conflict are
  discarded.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Optional, Union

from almc.errors import DiagnosticSink, InputError, SemanticError, Span
from almc.ontology import (
    BOOLEANS, FALSE, NUMERIC_SORTS, TRUE, ObjectInfo, Signature,
)
from almc.bat import ActionTheory, Constraint, FunLit
from almc.syntax import ast, parse_file

LIBRARY_PATH_VAR = "ALM_LIBRARY_PATH"

#: Ground values are object names (str), integers, or "true"/"false".
Value = Union[str, int]


# ================================================================ libraries

@dataclass
class Library:
    """Parsed library file: theories by name."""

    name: str
    theories: dict[str, ast.Theory]


def library_search_paths(extra: tuple[str, ...] = ()) -> list[str]:
    paths = list(extra)
    env = os.environ.get(LIBRARY_PATH_VAR, "")
    paths.extend(p for p in env.split(os.pathsep) if p)
    return paths or ["."]


def load_library(name: str, search_paths: list[str],
                 cache: Optional[dict[str, Library]] = None) -> Library:
    if cache is not None and name in cache:
        return cache[name]
    for d in search_paths:
        path = os.path.join(d, name + ".alm")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                node = parse_file(fh.read(), path)
            theories: dict[str, ast.Theory] = {}
            if isinstance(node, ast.Theory):
                theories[node.name] = node
            elif isinstance(node, ast.System) and isinstance(node.theory,
                                                             ast.Theory):
                theories[node.theory.name] = node.theory
            else:
                raise InputError(f"library {path} does not contain a theory")
            lib = Library(name, theories)
            if cache is not None:
                cache[name] = lib
            return lib
    raise InputError(
        f"library {name!r} not found on search path "
        f"({os.pathsep.join(search_paths)})")


def resolve_theory(theory: ast.Theory, search_paths: list[str],
                   sink: DiagnosticSink,
                   cache: Optional[dict[str, Library]] = None,
                   _seen: Optional[set[str]] = None) -> list[ast.Module]:
    """All modules of `theory` with imports expanded, dependency-safe order."""
    cache = cache if cache is not None else {}
    seen = _seen if _seen is not None else set()
    modules: list[ast.Module] = []

    def add(mod: ast.Module) -> None:
        if all(m.name != mod.name for m in modules):
            modules.append(mod)

    for item in theory.items:
        if isinstance(item, ast.Module):
            add(item)
            continue
        key = f"{item.library}:{item.theory}:{item.module}"
        if key in seen:
            sink.error(f"circular import of {item.library}", item.span)
            continue
        seen.add(key)
        lib = load_library(item.library, search_paths, cache)
        if item.kind == "theory":
            src = lib.theories.get(item.theory)
            if src is None:
                sink.error(f"library {item.library!r} has no theory "
                           f"{item.theory!r}", item.span)
                continue
            for m in resolve_theory(src, search_paths, sink, cache, seen):
                add(m)
        else:
            candidates = ([lib.theories[item.theory]]
                          if item.theory and item.theory in lib.theories
                          else list(lib.theories.values()))
            found = None
            for src in candidates:
                for m in resolve_theory(src, search_paths, sink, cache, seen):
                    if m.name == item.module:
                        found = (src, m)
                        break
                if found:
                    break
            if found is None:
                sink.error(f"module {item.module!r} not found in library "
                           f"{item.library!r}", item.span)
                continue
            src_theory, _ = found
            resolved = resolve_theory(src_theory, search_paths, sink, cache,
                                      seen)
            for m in _closure(resolved, item.module, sink, item.span):
                add(m)
    return modules


def _closure(modules: list[ast.Module], root: str, sink: DiagnosticSink,
             span: Span) -> list[ast.Module]:
    by_name = {m.name: m for m in modules}
    order: list[ast.Module] = []
    state: dict[str, int] = {}

    def visit(name: str) -> None:
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            sink.error(f"module dependency cycle through {name!r}", span)
            return
        mod = by_name.get(name)
        if mod is None:
            sink.error(f"unknown module {name!r} in depends on", span)
            return
        state[name] = 1
        for dep in mod.depends_on:
            visit(dep)
        state[name] = 2
        order.append(mod)

    visit(root)
    return order


def flatten(modules: list[ast.Module], name: str,
            sink: DiagnosticSink) -> ast.Module:
    """Union of the given modules as one dependency-free module.

    `modules` must already be in dependency order (dependencies first);
    duplicate declarations and axioms are kept once.
    """
    ordered: list[ast.Module] = []
    by_name = {m.name: m for m in modules}
    state: dict[str, int] = {}

    def visit(mod: ast.Module) -> None:
        if state.get(mod.name) == 2:
            return
        if state.get(mod.name) == 1:
            sink.error(f"module dependency cycle through {mod.name!r}",
                       mod.span)
            return
        state[mod.name] = 1
        for dep in mod.depends_on:
            if dep in by_name:
                visit(by_name[dep])
            else:
                sink.error(f"module {mod.name!r} depends on unknown module "
                           f"{dep!r}", mod.span)
        state[mod.name] = 2
        ordered.append(mod)

    for mod in modules:
        visit(mod)

    def dedup(items):
        out = []
        for x in items:
            if x not in out:
                out.append(x)
        return tuple(out)

    return ast.Module(
        name=name,
        depends_on=(),
        sorts=dedup([d for m in ordered for d in m.sorts]),
        constants=dedup([d for m in ordered for d in m.constants]),
        functions=dedup([d for m in ordered for d in m.functions]),
        axioms=dedup([a for m in ordered for a in m.axioms]),
    )


def flatten_system(system: ast.System, search_paths: list[str],
                   sink: DiagnosticSink) -> ast.Module:
    if isinstance(system.theory, ast.ImportDirective):
        wrapper = ast.Theory(system.name, (system.theory,))
        modules = resolve_theory(wrapper, search_paths, sink)
        tname = system.theory.theory or system.theory.module or system.name
    else:
        modules = resolve_theory(system.theory, search_paths, sink)
        tname = system.theory.name
    sink.raise_if_errors()
    if not modules:
        raise SemanticError(f"theory {tname!r} declares no modules",
                            system.span)
    return flatten(modules, tname, sink)


# ================================================================ pre-models

@dataclass(frozen=True)
class ObjectTerm:
    """A ground object: bare name or parameterised instance."""

    name: str
    args: tuple[Value, ...] = ()

    @property
    def key(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass
class PreModel:
    sig: Signature
    consts: dict[str, Value]
    universe: list[str]  # object keys, deterministic order
    #: direct membership in source nodes: object -> frozenset of sorts
    is_a: dict[str, frozenset[str]]
    #: full membership: sort -> tuple of objects (instance closure)
    members: dict[str, tuple[str, ...]]
    #: (func name, ground args) -> value, for statics and attributes
    statics: dict[tuple[str, tuple[Value, ...]], Value]
    #: declared links object -> declared sorts (for reporting)
    declared: dict[str, tuple[str, ...]]

    def sort_values(self, key: str) -> list[Value]:
        """Ground values of a sort key: node members, booleans, or a range."""
        if key == BOOLEANS:
            return [TRUE, FALSE]
        if key in NUMERIC_SORTS:
            raise SemanticError(
                f"the numeric sort {key!r} is unbounded and cannot be "
                "grounded; use a range sort instead")
        if key in self.sig.ranges:
            return list(self.range_values(key))
        return list(self.members.get(key, ()))

    def range_values(self, key: str) -> range:
        r = self.sig.ranges[key]
        lo = self._bound(r.lo)
        hi = self._bound(r.hi)
        return range(lo, hi + 1)

    def _bound(self, b: Union[int, str]) -> int:
        if isinstance(b, int):
            return b
        v = self.consts.get(b)
        if not isinstance(v, int):
            raise SemanticError(
                f"range bound {b!r} is not a structure integer constant")
        return v

    def is_instance(self, obj: Value, sort: str) -> bool:
        if sort == BOOLEANS:
            return obj in (TRUE, FALSE)
        if sort in NUMERIC_SORTS:
            return isinstance(obj, int) and \
                (obj >= 1 if sort == "positive_natural_numbers"
                 else obj >= 0 if sort == "natural_numbers" else True)
        if sort in self.sig.ranges:
            return isinstance(obj, int) and obj in self.range_values(sort)
        return obj in self.members.get(sort, ())

    def static_value(self, func: str, args: tuple[Value, ...]) -> Optional[Value]:
        return self.statics.get((func, args))


# -------------------------------------------------- term / literal evaluation

def eval_ground_term(t: ast.Term, consts: dict[str, Value],
                     env: Optional[dict[str, Value]] = None) -> Value:
    """Evaluate a pre-interpreted term to a ground value."""
    if isinstance(t, ast.Num):
        return t.value
    if isinstance(t, ast.Var):
        if env is None or t.name not in env:
            raise SemanticError(f"unbound variable {t.name}", t.span)
        return env[t.name]
    if isinstance(t, ast.Sym):
        if t.name in consts:
            return consts[t.name]
        return t.name
    if isinstance(t, ast.App):
        args = tuple(eval_ground_term(a, consts, env) for a in t.args)
        return ObjectTerm(t.name, args).key
    if isinstance(t, ast.Arith):
        lv = eval_ground_term(t.left, consts, env)
        rv = eval_ground_term(t.right, consts, env)
        if not isinstance(lv, int) or not isinstance(rv, int):
            raise SemanticError("arithmetic over non-integers", t.span)
        if t.op == "+":
            return lv + rv
        if t.op == "-":
            return lv - rv
        if t.op == "*":
            return lv * rv
        if t.op == "mod":
            return lv % rv
        raise SemanticError(f"unknown operator {t.op}", t.span)
    raise SemanticError(f"cannot evaluate term {t!r}")


def compare(op: str, lv: Value, rv: Value, span: Span = Span()) -> bool:
    if op == "=":
        return lv == rv
    if op == "!=":
        return lv != rv
    if not isinstance(lv, int) or not isinstance(rv, int):
        raise SemanticError(f"order comparison {op} over non-integers "
                            f"({lv!r}, {rv!r})", span)
    return {"<": lv < rv, "<=": lv <= rv,
            ">": lv > rv, ">=": lv >= rv}[op]


# -------------------------------------------------- universe construction

@dataclass
class _Universe:
    objects: list[ObjectTerm] = field(default_factory=list)
    #: object key -> declared sorts
    declared: dict[str, list[str]] = field(default_factory=dict)
    #: object key -> attribute assignments (func, extra args) -> value
    attrs: list[tuple[str, str, tuple[Value, ...], Value]] = \
        field(default_factory=list)

    def add(self, obj: ObjectTerm, sorts: list[str]) -> None:
        if obj.key not in self.declared:
            self.objects.append(obj)
            self.declared[obj.key] = []
        for s in sorts:
            if s not in self.declared[obj.key]:
                self.declared[obj.key].append(s)


def _declared_members(uni: _Universe, sig: Signature, sort: str,
                      consts: dict[str, Value]) -> list[Value]:
    """Objects declared (directly or via subsorts) in `sort` so far."""
    if sort == BOOLEANS:
        return [TRUE, FALSE]
    if sort in sig.ranges:
        r = sig.ranges[sort]
        lo = r.lo if isinstance(r.lo, int) else consts.get(r.lo)
        hi = r.hi if isinstance(r.hi, int) else consts.get(r.hi)
        if not isinstance(lo, int) or not isinstance(hi, int):
            raise SemanticError(f"unresolved range bound in {sort}")
        return list(range(lo, hi + 1))
    below = {sort} | sig.descendants(sort)
    return [o.key for o in uni.objects
            if any(s in below for s in uni.declared[o.key])]


def build_universe(sig: Signature, structure: ast.Structure,
                   sink: DiagnosticSink) -> tuple[_Universe, dict[str, Value]]:
    consts: dict[str, Value] = {}
    for c in structure.constants:
        try:
            consts[c.name] = eval_ground_term(c.value, consts)
        except SemanticError as e:
            sink.error(e.message, c.span)

    uni = _Universe()

    def check_sorts(sorts, span) -> list[str]:
        out = []
        for s in sorts:
            if not sig.is_node(s):
                sink.error(f"unknown sort {s!r} in instance declaration", span)
            else:
                out.append(s)
        return out

    plain_defs = []
    schema_defs = []
    for idef in structure.instances:
        if any(isinstance(o, ast.App) for o in idef.objects):
            schema_defs.append(idef)
        else:
            plain_defs.append(idef)

    # Plain structure instances and module object constants first.
    for idef in plain_defs:
        sorts = check_sorts(idef.sorts, idef.span)
        for o in idef.objects:
            if not isinstance(o, ast.Sym):
                sink.error("instance name must be an identifier", idef.span)
                continue
            obj = ObjectTerm(o.name)
            uni.add(obj, sorts)
            for a in idef.attrs:
                _add_attr(uni, sig, obj, a, consts, {}, sink)

    for oinfo in sig.objects.values():
        if not oinfo.params:
            uni.add(ObjectTerm(oinfo.name),
                    check_sorts(oinfo.sorts, oinfo.span))

    # Parameterised module constants and instance schemas, to fixpoint.
    pending: list[tuple[str, object]] = \
        [("const", o) for o in sig.objects.values() if o.params] + \
        [("schema", d) for d in schema_defs]
    for _round in range(20):
        changed = False
        for kind, item in pending:
            if kind == "const":
                oinfo = item
                assert isinstance(oinfo, ObjectInfo)
                domains = [_declared_members(uni, sig, p, consts)
                           for p in oinfo.params]
                for combo in product(*domains):
                    obj = ObjectTerm(oinfo.name, tuple(combo))
                    if obj.key not in uni.declared:
                        uni.add(obj, check_sorts(oinfo.sorts, oinfo.span))
                        changed = True
            else:
                changed |= _expand_schema(uni, sig, item, consts, sink)
        if not changed:
            break
        if len(uni.objects) > 100000:
            sink.error("instance expansion did not converge "
                       "(more than 100000 objects)", structure.span)
            break
    else:
        sink.error("instance expansion did not reach a fixpoint",
                   structure.span)

    sink.raise_if_errors()
    return uni, consts


def _schema_var_sorts(idef: ast.InstanceDef, sig: Signature,
                      sink: DiagnosticSink) -> dict[str, str]:
    """Infer a sort for each schema parameter variable.

    Sources: attribute assignments whose value is the variable (the
    attribute's result sort) and `instance(X, s)` literals in the where
    clause.
    """
    out: dict[str, str] = {}

    def note(var: str, sort: str, span: Span) -> None:
        prev = out.get(var)
        if prev is None or prev == sort:
            out[var] = sort
            return
        # keep the more specific of two comparable sorts
        if sig.is_node(prev) and sig.is_node(sort):
            if sort in sig.descendants(prev):
                out[var] = sort
                return
            if prev in sig.descendants(sort):
                return
        sink.error(f"parameter {var} constrained to both {prev!r} "
                   f"and {sort!r}", span)

    for a in idef.attrs:
        info = sig.functions.get(a.name)
        if info is None:
            continue
        if isinstance(a.value, ast.Var):
            note(a.value.name, info.result, a.span)
        for pos, arg in enumerate(a.args, start=1):
            if isinstance(arg, ast.Var) and pos < len(info.args):
                note(arg.name, info.args[pos], a.span)
    for w in idef.where:
        if (isinstance(w.lhs, ast.App) and w.lhs.name == "instance"
                and w.op is None and len(w.lhs.args) == 2
                and isinstance(w.lhs.args[0], ast.Var)
                and isinstance(w.lhs.args[1], ast.Sym)):
            note(w.lhs.args[0].name, w.lhs.args[1].name, w.span)
    return out


def _expand_schema(uni: _Universe, sig: Signature, idef: ast.InstanceDef,
                   consts: dict[str, Value], sink: DiagnosticSink) -> bool:
    sorts = [s for s in idef.sorts if sig.is_node(s)]
    var_sorts = _schema_var_sorts(idef, sig, sink)
    changed = False
    for o in idef.objects:
        if not isinstance(o, ast.App):
            continue
        # parameter positions may mix variables and ground terms,
        # e.g. carry(box, P)
        params: list[str] = []
        ground: dict[int, Value] = {}
        for pos, p in enumerate(o.args):
            if isinstance(p, ast.Var):
                params.append(p.name)
            else:
                try:
                    ground[pos] = eval_ground_term(p, consts)
                except SemanticError as e:
                    sink.error(e.message, idef.span)
                    return False
        missing = [v for v in params if v not in var_sorts]
        if missing:
            sink.error(
                f"cannot infer a sort for parameter(s) {', '.join(missing)}; "
                "add an attribute assignment or an instance(...) condition",
                idef.span)
            return False
        domains = [_declared_members(uni, sig, var_sorts[v], consts)
                   for v in params]
        for combo in product(*domains):
            env = dict(zip(params, combo))
            if not _where_holds(idef.where, consts, env, sink):
                continue
            it = iter(combo)
            args = tuple(ground[pos] if pos in ground else next(it)
                         for pos in range(len(o.args)))
            obj = ObjectTerm(o.name, args)
            if obj.key in uni.declared:
                # created elsewhere (e.g. a parameterised constant):
                # merge any sorts this definition adds
                new = [s for s in sorts if s not in uni.declared[obj.key]]
                if new:
                    uni.add(obj, new)
                    changed = True
                continue
            uni.add(obj, sorts)
            for a in idef.attrs:
                _add_attr(uni, sig, obj, a, consts, env, sink)
            changed = True
    return changed


def _where_holds(where, consts, env, sink: DiagnosticSink) -> bool:
    for w in where:
        if w.op is None:
            if isinstance(w.lhs, ast.App) and w.lhs.name == "instance":
                continue  # used for sorting parameters, always true here
            sink.error("unsupported where-clause literal", w.span)
            return False
        lv = eval_ground_term(w.lhs, consts, env)
        rv = eval_ground_term(w.rhs, consts, env)
        ok = compare(w.op, lv, rv, w.span)
        if w.neg:
            ok = not ok
        if not ok:
            return False
    return True


def _add_attr(uni: _Universe, sig: Signature, obj: ObjectTerm,
              a: ast.AttrAssign, consts: dict[str, Value],
              env: dict[str, Value], sink: DiagnosticSink) -> None:
    info = sig.functions.get(a.name)
    if info is None or info.kind != "attribute":
        sink.error(f"{a.name!r} is not a declared attribute", a.span)
        return
    try:
        extra = tuple(eval_ground_term(x, consts, env) for x in a.args)
        value = eval_ground_term(a.value, consts, env)
    except SemanticError as e:
        sink.error(e.message, a.span)
        return
    if len(extra) + 1 != info.arity:
        sink.error(f"attribute {a.name!r} takes {info.arity - 1} extra "
                   f"argument(s)", a.span)
        return
    uni.attrs.append((a.name, obj.key, extra, value))


# -------------------------------------------------- placement enumeration

def enumerate_placements(sig: Signature, structure: ast.Structure,
                         sink: DiagnosticSink,
                         limit: int = 1_000_000) -> Iterator[PreModel]:
    """Pre-model candidates, one per object placement, deterministic order.

    Each candidate carries the structure's attribute assignments; values of
    statics derivable from axioms are completed (and conflicting candidates
    discarded) by the semantics layer.
    """
    uni, consts = build_universe(sig, structure, sink)

    # For each object and each declared non-source sort, the object must sit
    # in exactly one source node below that sort.
    source_nodes = set(sig.source_nodes())
    choice_axes: list[tuple[str, list[str]]] = []  # (object, options)
    fixed: dict[str, set[str]] = {o.key: set() for o in uni.objects}
    for obj in uni.objects:
        for s in uni.declared[obj.key]:
            if s in source_nodes:
                fixed[obj.key].add(s)
    for obj in uni.objects:
        for s in uni.declared[obj.key]:
            if s in source_nodes:
                continue
            options = sorted(set(sig.descendants(s)) & source_nodes)
            if not options:
                sink.error(f"sort {s!r} has no source subsorts to place "
                           f"{obj.key} into")
                continue
            if fixed[obj.key] & set(options):
                continue  # membership already witnessed by a declared source
            choice_axes.append((obj.key, options))
    sink.raise_if_errors()

    total = 1
    for _, options in choice_axes:
        total *= len(options)
        if total > limit:
            raise SemanticError(
                f"placement enumeration exceeds {limit} candidates")

    for combo in product(*[options for _, options in choice_axes]):
        is_a: dict[str, set[str]] = {k: set(v) for k, v in fixed.items()}
        for (okey, _), chosen in zip(choice_axes, combo):
            is_a[okey].add(chosen)
        pm = _make_placement(sig, uni, consts, is_a, sink)
        if pm is not None:
            yield pm


def _make_placement(sig: Signature, uni: _Universe,
                    consts: dict[str, Value],
                    is_a: dict[str, set[str]],
                    sink: DiagnosticSink) -> Optional[PreModel]:
    # Instance closure: membership in a node = is_a in some source below it.
    members: dict[str, list[str]] = {n: [] for n in sig.sorts}
    for obj in uni.objects:
        nodes: set[str] = set()
        for src in is_a[obj.key]:
            nodes.add(src)
            nodes |= sig.ancestors(src)
        for n in nodes:
            members[n].append(obj.key)

    pm = PreModel(
        sig=sig,
        consts=consts,
        universe=[o.key for o in uni.objects],
        is_a={k: frozenset(v) for k, v in is_a.items()},
        members={n: tuple(v) for n, v in members.items()},
        statics={},
        declared={k: tuple(v) for k, v in uni.declared.items()},
    )

    # Attribute assignments from the structure.
    for func, okey, extra, value in uni.attrs:
        keyargs = (okey,) + extra
        prev = pm.statics.get((func, keyargs))
        if prev is not None and prev != value:
            sink.error(f"conflicting values for {func}({okey}, ...)")
            return None
        pm.statics[(func, keyargs)] = value
    return pm


def structure_static_rules(theory: ActionTheory, structure: ast.Structure,
                           sink: DiagnosticSink) -> list[Constraint]:
    """Normalize the structure's `values of statics` clauses."""
    from almc.bat import _Normalizer
    norm = _Normalizer(theory.sig, sink)
    rules: list[Constraint] = []
    for sa in structure.statics:
        norm.extra = []
        head = norm.normalize(sa.lit)
        extra = list(norm.extra)
        body = norm.body(sa.body, allow_occurs=False)
        if not isinstance(head, FunLit):
            sink.error("values of statics must assign a function value",
                       sa.span)
            continue
        info = theory.sig.functions.get(head.func)
        if info is None or info.is_fluent:
            sink.error(f"{head.func!r} is not a static", sa.span)
            continue
        rules.append(Constraint(head, tuple(list(body) + extra),
                                span=sa.span))
    sink.raise_if_errors()
    return rules
