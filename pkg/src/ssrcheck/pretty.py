"""Canonical text rendering of sorts, terms, goals and proof states.

This is the single display format consumed by goldens, traces, the CLI
and the HTTP service.  Conventions:

* numerals render closed `succ` chains; `succ^k t` renders as `t + k`,
* `add`/`sub`/`le`/`lt`/`mem`/`cons` applications render infix,
* connectives render as `->`, `/\\`, `\\/`, `~`, `<->`, `=`, `<=`,
* binders render `forall x y : S, ...` with prime-freshened names.
"""

from __future__ import annotations

from .proofstate import CtxHyp, CtxVar, Goal
from .terms import (
    And, App, BVar, Const, Eq, Exists, FalseP, Forall, FVar, Iff, Imp, Ite,
    Lam, Meta, Not, Or, Sort, SArrow, SData, SProp, SVar, Term, TrueP,
    unapply,
)

# Precedence levels (higher binds tighter).
_P_BINDER = 0
_P_IFF = 10
_P_IMP = 20
_P_OR = 30
_P_AND = 40
_P_NOT = 50
_P_CMP = 60
_P_CONS = 70
_P_ADD = 80
_P_APP = 90
_P_ATOM = 100

_INFIX_CONSTS = {
    "add": ("+", _P_ADD, "left"),
    "sub": ("-", _P_ADD, "left"),
    "le": ("<=", _P_CMP, "none"),
    "lt": ("<", _P_CMP, "none"),
    "mem": ("∈", _P_CMP, "none"),
    "cons": ("::", _P_CONS, "right"),
}


def pp_sort(s: Sort, prec: int = 0) -> str:
    match s:
        case SProp():
            return "Prop"
        case SVar(name):
            return name
        case SData(name, args):
            if not args:
                return name
            inner = " ".join(pp_sort(a, 2) for a in args)
            out = f"{name} {inner}"
            return f"({out})" if prec >= 2 else out
        case SArrow(dom, cod):
            out = f"{pp_sort(dom, 1)} -> {pp_sort(cod, 0)}"
            return f"({out})" if prec >= 1 else out
    raise AssertionError(s)


def _fresh(base: str, taken: set[str]) -> str:
    name = base or "x"
    while name in taken:
        name += "'"
    return name


def _succ_chain(t: Term) -> tuple[int, Term]:
    k = 0
    while isinstance(t, App) and isinstance(t.fn, Const) \
            and t.fn.name == "succ":
        k += 1
        t = t.arg
    return k, t


def pp_term(t: Term, env: list[str] | None = None,
            taken: set[str] | None = None) -> str:
    if env is None:
        env = []
    if taken is None:
        taken = set(_free_names(t))
    return _pp(t, env, set(taken) | set(env), _P_BINDER)


def _free_names(t: Term) -> set[str]:
    from .terms import free_vars
    return set(free_vars(t))


def _paren(s: str, prec: int, at: int) -> str:
    return f"({s})" if prec > at else s


def _pp(t: Term, env: list[str], taken: set[str], prec: int) -> str:
    match t:
        case BVar(i):
            return env[i] if i < len(env) else f"#{i}"
        case FVar(name, _):
            return name
        case Meta(mid, _):
            return f"?m{mid}"
        case TrueP():
            return "True"
        case FalseP():
            return "False"
        case Not(body):
            return _paren("~" + _pp(body, env, taken, _P_NOT),
                          prec, _P_NOT)
        case Imp(a, b):
            s = (f"{_pp(a, env, taken, _P_IMP + 1)} -> "
                 f"{_pp(b, env, taken, _P_IMP)}")
            return _paren(s, prec, _P_IMP)
        case Iff(a, b):
            s = (f"{_pp(a, env, taken, _P_IFF + 1)} <-> "
                 f"{_pp(b, env, taken, _P_IFF)}")
            return _paren(s, prec, _P_IFF)
        case And(a, b):
            s = (f"{_pp(a, env, taken, _P_AND + 1)} /\\ "
                 f"{_pp(b, env, taken, _P_AND)}")
            return _paren(s, prec, _P_AND)
        case Or(a, b):
            s = (f"{_pp(a, env, taken, _P_OR + 1)} \\/ "
                 f"{_pp(b, env, taken, _P_OR)}")
            return _paren(s, prec, _P_OR)
        case Eq(_, a, b):
            s = (f"{_pp(a, env, taken, _P_CMP + 1)} = "
                 f"{_pp(b, env, taken, _P_CMP + 1)}")
            return _paren(s, prec, _P_CMP)
        case Ite(c, a, b):
            s = (f"if {_pp(c, env, taken, _P_BINDER)} "
                 f"then {_pp(a, env, taken, _P_BINDER)} "
                 f"else {_pp(b, env, taken, _P_BINDER)}")
            return _paren(s, prec, _P_APP)
        case Forall() | Exists() | Lam():
            return _pp_binder(t, env, taken, prec)
    # applications and constants
    k, core = _succ_chain(t)
    if k:
        if isinstance(core, Const) and core.name == "zero":
            return str(k)
        s = f"{_pp(core, env, taken, _P_ADD + 1)} + {k}"
        return _paren(s, prec, _P_ADD)
    if isinstance(t, Const):
        if t.name == "zero":
            return "0"
        if t.name == "nil":
            return "[]"
        return t.name
    head, args = unapply(t)
    if isinstance(head, Const) and head.name in _INFIX_CONSTS \
            and len(args) == 2:
        op, p, assoc = _INFIX_CONSTS[head.name]
        lp = p if assoc == "left" else p + 1
        rp = p if assoc == "right" else p + 1
        s = (f"{_pp(args[0], env, taken, lp)} {op} "
             f"{_pp(args[1], env, taken, rp)}")
        return _paren(s, prec, p)
    if isinstance(head, Const) and head.name == "nil" and not args:
        return "[]"
    assert isinstance(t, App)
    s = (f"{_pp(t.fn, env, taken, _P_APP)} "
         f"{_pp(t.arg, env, taken, _P_APP + 1)}")
    return _paren(s, prec, _P_APP)


def _pp_binder(t: Term, env: list[str], taken: set[str], prec: int) -> str:
    kind = {"Forall": "forall", "Exists": "exists", "Lam": "fun"}[
        type(t).__name__]
    names: list[str] = []
    sort = t.var_sort  # type: ignore[union-attr]
    cur: Term = t
    inner_env = list(env)
    inner_taken = set(taken)
    while type(cur).__name__ == {"forall": "Forall", "exists": "Exists",
                                 "fun": "Lam"}[kind] \
            and cur.var_sort == sort:  # type: ignore[union-attr]
        name = _fresh(cur.hint, inner_taken)  # type: ignore[union-attr]
        names.append(name)
        inner_taken.add(name)
        inner_env.insert(0, name)
        cur = cur.body  # type: ignore[union-attr]
    body = _pp(cur, inner_env, inner_taken, _P_BINDER)
    if kind == "fun":
        s = f"fun {' '.join(names)} : {pp_sort(sort)} => {body}"
    else:
        s = f"{kind} {' '.join(names)} : {pp_sort(sort)}, {body}"
    return _paren(s, prec, _P_BINDER)


# ---------------------------------------------------------------------------
# Goals and states
# ---------------------------------------------------------------------------


def pp_goal(goal: Goal) -> str:
    lines: list[str] = []
    taken = {e.name for e in goal.ctx}
    for e in goal.ctx:
        if isinstance(e, CtxVar):
            lines.append(f"{e.name} : {pp_sort(e.sort)}")
        else:
            lines.append(f"{e.name} : {pp_term(e.prop, [], taken)}")
    lines.append(f"⊢ {pp_term(goal.concl, [], taken)}")
    return "\n".join(lines)


def pp_goals(goals: list[Goal]) -> str:
    if not goals:
        return "goals accomplished"
    return "\n---\n".join(pp_goal(g) for g in goals)
