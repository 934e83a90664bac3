"""Canonical pretty-printer.

`parse_file(pretty(node))` returns a node structurally equal to the input
(spans aside); tests rely on that round trip.
"""

from __future__ import annotations

from typing import Union

from almc.syntax import ast

_PREC = {"+": 1, "-": 1, "*": 2, "mod": 2}


def term_str(t: ast.Term) -> str:
    if isinstance(t, (ast.Var, ast.Sym)):
        return t.name
    if isinstance(t, ast.Num):
        return str(t.value)
    if isinstance(t, ast.App):
        return f"{t.name}({', '.join(term_str(a) for a in t.args)})"
    if isinstance(t, ast.Arith):
        left = term_str(t.left)
        right = term_str(t.right)
        if isinstance(t.left, ast.Arith) and _PREC[t.left.op] < _PREC[t.op]:
            left = f"({left})"
        if isinstance(t.right, ast.Arith) and _PREC[t.right.op] <= _PREC[t.op]:
            right = f"({right})"
        return f"{left} {t.op} {right}"
    raise TypeError(f"not a term: {t!r}")


def lit_str(lit: ast.BodyItem) -> str:
    if isinstance(lit, ast.OccursLit):
        s = f"occurs({term_str(lit.action)})"
    else:
        s = term_str(lit.lhs)
        if lit.op is not None:
            s += f" {lit.op} {term_str(lit.rhs)}"
    return ("-" if lit.neg else "") + s


def sortname_str(s: ast.SortName) -> str:
    return s if isinstance(s, str) else f"[{s.lo}..{s.hi}]"


_WIDTH = 79


def _fill(first: str, parts: list[str], width: int = _WIDTH) -> str:
    """Lay body literals out after `first`, wrapping at commas; continuation
    lines align with the first literal."""
    pad = " " * len(first)
    lines = [first + parts[0]]
    for p in parts[1:]:
        cand = f"{lines[-1]}, {p}"
        if len(cand) < width:
            lines[-1] = cand
        else:
            lines[-1] += ","
            lines.append(pad + p)
    lines[-1] += "."
    return "\n".join(lines)


def stmt_str(stmt: ast.Statement, indent: str = "") -> str:
    if isinstance(stmt, ast.DynamicLaw):
        parts = [f"instance({term_str(stmt.act)}, {stmt.sort})"]
        parts += [lit_str(b) for b in stmt.body]
        return _fill(f"{indent}occurs({term_str(stmt.act)}) causes "
                     f"{lit_str(stmt.head)} if ", parts)
    if isinstance(stmt, ast.Executability):
        parts = [f"instance({term_str(stmt.act)}, {stmt.sort})"]
        parts += [lit_str(b) for b in stmt.body]
        return _fill(f"{indent}impossible occurs({term_str(stmt.act)}) if ",
                     parts)
    head = "false" if stmt.head is None else lit_str(stmt.head)
    if stmt.body:
        return _fill(f"{indent}{head} if ", [lit_str(b) for b in stmt.body])
    return f"{indent}{head}."


def _emit_module(m: ast.Module, out: list[str], ind: str) -> None:
    dep = f" depends on {', '.join(m.depends_on)}" if m.depends_on else ""
    out.append(f"{ind}module {m.name}{dep}")
    sub = ind + "  "
    item = sub + "  "
    if m.sorts:
        out.append(f"{sub}sort declarations")
        for sd in m.sorts:
            out.append(f"{item}{', '.join(sd.names)} :: "
                       f"{', '.join(sortname_str(p) for p in sd.parents)}")
            if sd.attrs:
                out.append(f"{item}  attributes")
                for a in sd.attrs:
                    if a.args:
                        sig = " * ".join(sortname_str(x) for x in a.args)
                        out.append(f"{item}    {a.name} : {sig} -> {sortname_str(a.result)}")
                    else:
                        out.append(f"{item}    {a.name} : {sortname_str(a.result)}")
    if m.constants:
        out.append(f"{sub}object constants")
        for cd in m.constants:
            names = ", ".join(
                n if not ps else f"{n}({', '.join(sortname_str(p) for p in ps)})"
                for n, ps in cd.consts)
            out.append(f"{item}{names} : {', '.join(sortname_str(s) for s in cd.sorts)}")
    if m.functions:
        out.append(f"{sub}function declarations")
        groups: dict[tuple[str, bool], list[ast.FuncDecl]] = {}
        for fd in m.functions:
            groups.setdefault((fd.cat, fd.basic), []).append(fd)
        for cat in ("static", "fluent"):
            for basic in (True, False):
                decls = groups.get((cat, basic))
                if not decls:
                    continue
                out.append(f"{item}{cat}s")
                out.append(f"{item}  {'basic' if basic else 'defined'}")
                for fd in decls:
                    total = "total " if fd.total else ""
                    if fd.args:
                        sig = " * ".join(sortname_str(a) for a in fd.args)
                        out.append(f"{item}    {total}{fd.name} : {sig} -> "
                                   f"{sortname_str(fd.result)}")
                    else:
                        out.append(f"{item}    {total}{fd.name} : {sortname_str(fd.result)}")
    if m.axioms:
        out.append(f"{sub}axioms")
        for ax in m.axioms:
            out.append(stmt_str(ax, item))


def _emit_import(imp: ast.ImportDirective, out: list[str], ind: str) -> None:
    if imp.kind == "theory":
        out.append(f"{ind}import theory {imp.theory} from {imp.library}")
    elif imp.theory:
        out.append(f"{ind}import {imp.theory}.{imp.module} from {imp.library}")
    else:
        out.append(f"{ind}import module {imp.module} from {imp.library}")


def _emit_theory(t: ast.Theory, out: list[str], ind: str) -> None:
    out.append(f"{ind}theory {t.name}")
    for it in t.items:
        if isinstance(it, ast.Module):
            _emit_module(it, out, ind + "  ")
        else:
            _emit_import(it, out, ind + "  ")


def _emit_structure(s: ast.Structure, out: list[str], ind: str) -> None:
    out.append(f"{ind}structure {s.name}")
    sub = ind + "  "
    item = sub + "  "
    if s.constants:
        out.append(f"{sub}constants")
        for c in s.constants:
            out.append(f"{item}{c.name} = {term_str(c.value)}")
    if s.instances:
        out.append(f"{sub}instances")
        for idef in s.instances:
            line = (f"{item}{', '.join(term_str(o) for o in idef.objects)} "
                    f"in {', '.join(idef.sorts)}")
            if idef.where:
                line += f" where {', '.join(lit_str(w) for w in idef.where)}"
            out.append(line)
            for a in idef.attrs:
                args = f"({', '.join(term_str(x) for x in a.args)})" if a.args else ""
                out.append(f"{item}  {a.name}{args} = {term_str(a.value)}")
    if s.statics:
        out.append(f"{sub}values of statics")
        for sa in s.statics:
            if sa.body:
                out.append(_fill(f"{item}{lit_str(sa.lit)} if ",
                                 [lit_str(b) for b in sa.body]))
            else:
                out.append(f"{item}{lit_str(sa.lit)}.")


def pretty(node: Union[ast.System, ast.Theory, ast.Module, ast.Structure]) -> str:
    out: list[str] = []
    if isinstance(node, ast.System):
        out.append(f"system description {node.name}")
        if isinstance(node.theory, ast.ImportDirective):
            _emit_import(node.theory, out, "  ")
        else:
            _emit_theory(node.theory, out, "  ")
        _emit_structure(node.structure, out, "  ")
    elif isinstance(node, ast.Theory):
        _emit_theory(node, out, "")
    elif isinstance(node, ast.Module):
        _emit_module(node, out, "")
    elif isinstance(node, ast.Structure):
        _emit_structure(node, out, "")
    else:
        raise TypeError(f"cannot pretty-print {node!r}")
    return "\n".join(out) + "\n"
