"""Elaboration: surface syntax to kernel terms.

Identifiers resolve, in order, to bound variables, ambient declared
variables, then signature constants.  Polymorphic constants are
instantiated at fresh unification sort variables (spelled `?u…`,
unreachable from the surface grammar); sorts are solved by first-order
unification where user type variables stay rigid.  Numerals elaborate
to `succ` chains, and `t + k` with a literal k folds into `succ^k t`,
so surface arithmetic agrees with the normal forms computed by
simplification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .kernel import Kernel
from .parser import (
    SApp, SAt, SBin, SBinder, SHole, SIdent, SIte, SList, SNot, SNum, SSArrow,
    SSIdent, SSort, STerm, Span,
)
from .terms import (
    And, App, BOOL, BVar, Const, Eq, Exists, FVar, FalseP, Forall, Iff, Imp,
    Ite, Lam, Meta, NAT, Not, Or, PROP, Sort, SArrow, SData, SProp, SVar,
    Term, TrueP, TRUE, FALSE, apps, arrow, check_sorts, sort_free_vars,
    sort_subst,
)


class ElabError(Exception):
    def __init__(self, span: Span, message: str) -> None:
        super().__init__(message)
        self.span = span
        self.message = message


@dataclass
class Env:
    """Ambient elaboration environment (from `variable` declarations).

    `pending_consts` holds constants being declared right now (the
    recursive definition's own name, an inductive predicate inside its
    constructor statements) before the kernel knows them.
    """

    kernel: Kernel
    type_vars: dict[str, SVar] = field(default_factory=dict)
    term_vars: dict[str, Sort] = field(default_factory=dict)
    pending_consts: dict[str, tuple[tuple[str, ...], Sort]] = field(
        default_factory=dict)


_BUILTIN_PROPS = {"True": TRUE, "False": FALSE}


class Elaborator:
    def __init__(self, env: Env) -> None:
        self.env = env
        self.kernel = env.kernel
        self.sol: dict[str, Sort] = {}
        self._counter = itertools.count(1)
        self._meta_counter = itertools.count(1)

    # -- sort unification (user type vars rigid) -----------------------------

    def fresh_sort(self) -> SVar:
        return SVar(f"?u{next(self._counter)}")

    def resolve(self, s: Sort) -> Sort:
        out = sort_subst(s, self.sol)
        while out != s:
            s, out = out, sort_subst(out, self.sol)
        return out

    def uni(self, a: Sort, b: Sort, span: Span) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if isinstance(a, SVar) and a.name.startswith("?"):
            if a.name in sort_free_vars(b):
                raise ElabError(span, "circular sort constraint")
            self.sol[a.name] = b
            return
        if isinstance(b, SVar) and b.name.startswith("?"):
            self.uni(b, a, span)
            return
        if isinstance(a, SData) and isinstance(b, SData) \
                and a.name == b.name and len(a.args) == len(b.args):
            for x, y in zip(a.args, b.args):
                self.uni(x, y, span)
            return
        if isinstance(a, SArrow) and isinstance(b, SArrow):
            self.uni(a.dom, b.dom, span)
            self.uni(a.cod, b.cod, span)
            return
        raise ElabError(span, f"sort mismatch: expected "
                              f"{_ppsort(a)}, got {_ppsort(b)}")

    # -- sorts ---------------------------------------------------------------

    def elab_sort(self, s: SSort) -> Sort:
        if isinstance(s, SSArrow):
            return SArrow(self.elab_sort(s.dom), self.elab_sort(s.cod))
        assert isinstance(s, SSIdent)
        if s.name == "Prop":
            if s.args:
                raise ElabError(s.span, "Prop takes no arguments")
            return PROP
        if s.name in self.env.type_vars:
            if s.args:
                raise ElabError(s.span, "type variables take no arguments")
            return self.env.type_vars[s.name]
        ind = self.kernel.sig.inductives.get(s.name)
        if ind is not None and not ind.is_prop:
            if len(s.args) != len(ind.svars):
                raise ElabError(s.span, f"{s.name} expects "
                                        f"{len(ind.svars)} sort argument(s)")
            return SData(s.name, tuple(self.elab_sort(a) for a in s.args))
        raise ElabError(s.span, f"unknown sort {s.name}")

    # -- constants -----------------------------------------------------------

    def const(self, name: str, span: Span) -> Optional[Const]:
        if name == "eqb":
            u = self.fresh_sort()
            return Const("eqb", arrow(u, u, BOOL))
        entry = self.env.pending_consts.get(name) \
            or self.kernel.sig.consts.get(name)
        if entry is None:
            return None
        svars, scheme = entry
        inst = {v: self.fresh_sort() for v in svars}
        return Const(name, sort_subst(scheme, inst))

    # -- sort inference over built terms --------------------------------------

    def infer(self, t: Term, bsorts: list[Sort], span: Span) -> Sort:
        match t:
            case BVar(i):
                return self.resolve(bsorts[i])
            case FVar(_, s) | Const(_, s) | Meta(_, s):
                return self.resolve(s)
            case App(fn, arg):
                f = self.infer(fn, bsorts, span)
                if isinstance(f, SVar):
                    d, c = self.fresh_sort(), self.fresh_sort()
                    self.uni(f, SArrow(d, c), span)
                    f = SArrow(d, c)
                if not isinstance(f, SArrow):
                    raise ElabError(span, "this term is not a function")
                self.uni(f.dom, self.infer(arg, bsorts, span), span)
                return self.resolve(f.cod)
            case Forall(_, s, b) | Exists(_, s, b):
                self.uni(self.infer(b, [s] + bsorts, span), PROP, span)
                return PROP
            case Lam(_, s, b):
                return SArrow(self.resolve(s),
                              self.infer(b, [s] + bsorts, span))
            case Imp(a, b) | And(a, b) | Or(a, b) | Iff(a, b):
                self.uni(self.infer(a, bsorts, span), PROP, span)
                self.uni(self.infer(b, bsorts, span), PROP, span)
                return PROP
            case Not(a):
                self.uni(self.infer(a, bsorts, span), PROP, span)
                return PROP
            case Eq(s, a, b):
                self.uni(self.infer(a, bsorts, span), s, span)
                self.uni(self.infer(b, bsorts, span), s, span)
                return PROP
            case TrueP() | FalseP():
                return PROP
            case Ite(c, a, b):
                sa = self.infer(a, bsorts, span)
                self.uni(sa, self.infer(b, bsorts, span), span)
                return self.resolve(sa)
        raise AssertionError(t)

    # -- terms ----------------------------------------------------------------

    def elab(self, st: STerm, bound: list[tuple[str, Sort]]) -> Term:
        match st:
            case SNum(value, _):
                return _numeral(value)
            case SHole(_):
                return Meta(next(self._meta_counter), self.fresh_sort())
            case SIdent(name, span):
                return self._ident(name, span, bound)
            case SAt(name, ssorts, span):
                entry = self.env.pending_consts.get(name) \
                    or self.kernel.sig.consts.get(name)
                if entry is None:
                    raise ElabError(span, f"unknown constant {name}")
                svars, scheme = entry
                if len(ssorts) != len(svars):
                    raise ElabError(
                        span, f"{name} takes {len(svars)} sort argument(s), "
                        f"got {len(ssorts)}")
                inst = dict(zip(svars, (self.elab_sort(s) for s in ssorts)))
                return Const(name, sort_subst(scheme, inst))
            case SApp(fn, arg, span):
                tf = self.elab(fn, bound)
                ta = self.elab(arg, bound)
                t = App(tf, ta)
                self.infer(t, [s for _, s in bound], span)
                return t
            case SNot(body, span):
                b = self.elab(body, bound)
                self.uni(self.infer(b, [s for _, s in bound], span),
                         PROP, span)
                return Not(b)
            case SIte(c, a, b, span):
                tc = self.elab(c, bound)
                ta = self.elab(a, bound)
                tb = self.elab(b, bound)
                bsorts = [s for _, s in bound]
                sc = self.infer(tc, bsorts, span)
                if not (sc == BOOL or sc == PROP):
                    self.uni(sc, BOOL, span)
                self.uni(self.infer(ta, bsorts, span),
                         self.infer(tb, bsorts, span), span)
                return Ite(tc, ta, tb)
            case SList(items, span):
                elem = self.fresh_sort()
                lst = SData("List", (elem,))
                out: Term = Const("nil", lst)
                bsorts = [s for _, s in bound]
                for it in reversed(items):
                    t = self.elab(it, bound)
                    self.uni(self.infer(t, bsorts, span), elem, span)
                    out = apps(Const("cons", arrow(elem, lst, lst)), t, out)
                return out
            case SBinder(kind, binders, body, span):
                return self._binder(kind, list(binders), body, bound, span)
            case SBin(op, lhs, rhs, span):
                return self._binop(op, lhs, rhs, bound, span)
        raise AssertionError(st)

    def _ident(self, name: str, span: Span,
               bound: list[tuple[str, Sort]]) -> Term:
        for i, (n, s) in enumerate(bound):
            if n == name:
                return BVar(i)
        if name in _BUILTIN_PROPS:
            return _BUILTIN_PROPS[name]
        if name in self.env.term_vars:
            return FVar(name, self.env.term_vars[name])
        c = self.const(name, span)
        if c is not None:
            return c
        if name in self.env.type_vars:
            raise ElabError(span, f"{name} is a type variable, not a term")
        raise ElabError(span, f"unknown identifier {name}")

    def _binder(self, kind: str, binders: list, body: STerm,
                bound: list[tuple[str, Sort]], span: Span) -> Term:
        if not binders:
            return self.elab(body, bound)
        names, ssort = binders[0]
        sort = self.elab_sort(ssort) if ssort is not None \
            else self.fresh_sort()
        if not names:
            return self._binder(kind, binders[1:], body, bound, span)
        name = names[0]
        rest = [(names[1:], ssort)] + binders[1:]
        inner = self._binder(kind, rest, body, [(name, sort)] + bound, span)
        if kind == "forall":
            bsorts = [sort] + [s for _, s in bound]
            self.uni(self.infer(inner, bsorts, span), PROP, span)
            return Forall(name, sort, inner)
        if kind == "exists":
            bsorts = [sort] + [s for _, s in bound]
            self.uni(self.infer(inner, bsorts, span), PROP, span)
            return Exists(name, sort, inner)
        return Lam(name, sort, inner)

    def _binop(self, op: str, slhs: STerm, srhs: STerm,
               bound: list[tuple[str, Sort]], span: Span) -> Term:
        bsorts = [s for _, s in bound]
        if op == "add" and isinstance(srhs, SNum):
            t = self.elab(slhs, bound)
            self.uni(self.infer(t, bsorts, span), NAT, span)
            for _ in range(srhs.value):
                t = App(Const("succ", SArrow(NAT, NAT)), t)
            return t
        lhs = self.elab(slhs, bound)
        rhs = self.elab(srhs, bound)
        if op in ("imp", "iff", "and", "or"):
            self.uni(self.infer(lhs, bsorts, span), PROP, span)
            self.uni(self.infer(rhs, bsorts, span), PROP, span)
            node = {"imp": Imp, "iff": Iff, "and": And, "or": Or}[op]
            return node(lhs, rhs)
        if op == "eq":
            s = self.infer(lhs, bsorts, span)
            self.uni(s, self.infer(rhs, bsorts, span), span)
            return Eq(self.resolve(s), lhs, rhs)
        if op in ("add", "sub"):
            self.uni(self.infer(lhs, bsorts, span), NAT, span)
            self.uni(self.infer(rhs, bsorts, span), NAT, span)
            return apps(Const(op, arrow(NAT, NAT, NAT)), lhs, rhs)
        if op in ("le", "lt", "mem"):
            c = self.const(op, span)
            if c is None:
                raise ElabError(span, f"{op} is not defined")
            t = apps(c, lhs, rhs)
            self.uni(self.infer(t, bsorts, span), PROP, span)
            return t
        if op == "cons":
            elem = self.fresh_sort()
            lst = SData("List", (elem,))
            self.uni(self.infer(lhs, bsorts, span), elem, span)
            self.uni(self.infer(rhs, bsorts, span), lst, span)
            return apps(Const("cons", arrow(elem, lst, lst)), lhs, rhs)
        raise AssertionError(op)

    # -- finalisation ----------------------------------------------------------

    def finalize(self, t: Term, span: Span,
                 default_sorts: bool = False) -> Term:
        """Apply the sort solution; reject leftover unification vars
        (or, for `default_sorts`, leave them — used for patterns whose
        sorts are fixed by the enclosing declaration)."""
        out = _map_sorts(t, self.resolve)
        if not default_sorts:
            bad = _unsolved(out)
            if bad:
                raise ElabError(span, "cannot infer a sort here "
                                      f"(unresolved {sorted(bad)[0]})")
        return _fix_prop_eq(out)


def _numeral(k: int) -> Term:
    t: Term = Const("zero", NAT)
    for _ in range(k):
        t = App(Const("succ", SArrow(NAT, NAT)), t)
    return t


def _map_sorts(t: Term, f) -> Term:
    match t:
        case FVar(n, s):
            return FVar(n, f(s))
        case Const(n, s):
            return Const(n, f(s))
        case Meta(m, s):
            return Meta(m, f(s))
        case App(a, b):
            return App(_map_sorts(a, f), _map_sorts(b, f))
        case Forall(h, s, b):
            return Forall(h, f(s), _map_sorts(b, f))
        case Exists(h, s, b):
            return Exists(h, f(s), _map_sorts(b, f))
        case Lam(h, s, b):
            return Lam(h, f(s), _map_sorts(b, f))
        case Imp(a, b):
            return Imp(_map_sorts(a, f), _map_sorts(b, f))
        case And(a, b):
            return And(_map_sorts(a, f), _map_sorts(b, f))
        case Or(a, b):
            return Or(_map_sorts(a, f), _map_sorts(b, f))
        case Iff(a, b):
            return Iff(_map_sorts(a, f), _map_sorts(b, f))
        case Not(a):
            return Not(_map_sorts(a, f))
        case Eq(s, a, b):
            return Eq(f(s), _map_sorts(a, f), _map_sorts(b, f))
        case Ite(c, a, b):
            return Ite(_map_sorts(c, f), _map_sorts(a, f), _map_sorts(b, f))
        case _:
            return t


def _unsolved(t: Term) -> set[str]:
    out: set[str] = set()

    def sgo(s: Sort) -> None:
        for v in sort_free_vars(s):
            if v.startswith("?"):
                out.add(v)

    def go(x: Term) -> None:
        match x:
            case FVar(_, s) | Const(_, s) | Meta(_, s) | Eq(s, _, _):
                sgo(s)
            case Forall(_, s, _) | Exists(_, s, _) | Lam(_, s, _):
                sgo(s)
        from .terms import children
        for c in children(x):
            go(c)

    go(t)
    return out


def _fix_prop_eq(t: Term) -> Term:
    """`=` written between propositions means `<->`."""
    from .terms import children, with_children
    if isinstance(t, Eq) and t.sort == PROP:
        return Iff(_fix_prop_eq(t.lhs), _fix_prop_eq(t.rhs))
    cs = [_fix_prop_eq(c) for c in children(t)]
    return with_children(t, tuple(cs)) if cs else t


def _ppsort(s: Sort) -> str:
    from .pretty import pp_sort
    return pp_sort(s)


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def elaborate_term(env: Env, st: STerm,
                   expect: Optional[Sort] = None,
                   bound: Optional[list[tuple[str, Sort]]] = None) -> Term:
    el = Elaborator(env)
    t = el.elab(st, bound or [])
    span = st.span  # type: ignore[attr-defined]
    if expect is not None:
        el.uni(el.infer(t, [s for _, s in (bound or [])], span),
               expect, span)
    return el.finalize(t, span)


def elaborate_prop(env: Env, st: STerm) -> Term:
    t = elaborate_term(env, st, expect=PROP)
    check_sorts(t)
    return t


def elaborate_clause(env: Env, pats_s: list[STerm], arg_sorts: list[Sort],
                     rhs_s: STerm, result_sort: Sort,
                     ) -> tuple[list[Term], Term]:
    """Elaborate one `| p1, …, pk => rhs` clause of a recursive
    definition: patterns are constructor applications over pattern
    variables; the variables scope over the right-hand side."""
    el = Elaborator(env)
    pvars: dict[str, Sort] = {}
    fresh = itertools.count(1)

    def go(s: STerm, exp: Sort) -> Term:
        match s:
            case SHole(_):
                return FVar(f"_p{next(fresh)}", exp)
            case SNum(value, span):
                el.uni(exp, NAT, span)
                return _numeral(value)
            case SBin("add", lhs, SNum(value, _), span):
                el.uni(exp, NAT, span)
                t = go(lhs, NAT)
                for _ in range(value):
                    t = App(Const("succ", SArrow(NAT, NAT)), t)
                return t
            case SBin("cons", lhs, rhs, span):
                elem = el.fresh_sort()
                lst = SData("List", (elem,))
                el.uni(exp, lst, span)
                return apps(Const("cons", arrow(elem, lst, lst)),
                            go(lhs, elem), go(rhs, lst))
            case SList((), span):
                elem = el.fresh_sort()
                el.uni(exp, SData("List", (elem,)), span)
                return Const("nil", SData("List", (elem,)))
            case SIdent(name, span):
                if env.kernel.sig.is_ctor(name):
                    c = el.const(name, span)
                    assert c is not None
                    el.uni(exp, c.sort, span)
                    return c
                if name in pvars:
                    raise ElabError(span, f"pattern variable {name} "
                                          "used twice")
                pvars[name] = exp
                return FVar(name, exp)
            case SApp(_, _, span):
                head = s
                args: list[STerm] = []
                while isinstance(head, SApp):
                    args.insert(0, head.arg)
                    head = head.fn
                if not (isinstance(head, SIdent)
                        and env.kernel.sig.is_ctor(head.name)):
                    raise ElabError(span, "pattern head must be a "
                                          "constructor")
                c = el.const(head.name, span)
                assert c is not None
                cs = c.sort
                targs: list[Term] = []
                for a in args:
                    if not isinstance(cs, SArrow):
                        raise ElabError(span, "too many pattern arguments")
                    targs.append(go(a, cs.dom))
                    cs = cs.cod
                el.uni(exp, cs, span)
                return apps(c, *targs)
        raise ElabError(s.span,  # type: ignore[attr-defined]
                        "invalid pattern")

    if len(pats_s) != len(arg_sorts):
        raise ElabError(pats_s[0].span if pats_s  # type: ignore[attr-defined]
                        else rhs_s.span,  # type: ignore[attr-defined]
                        f"expected {len(arg_sorts)} pattern(s)")
    pats = [go(p, s) for p, s in zip(pats_s, arg_sorts)]
    env2 = Env(env.kernel, env.type_vars,
               {**env.term_vars,
                **{n: el.resolve(s) for n, s in pvars.items()}},
               env.pending_consts)
    el2 = Elaborator(env2)
    el2.sol = el.sol
    el2._counter = el._counter
    rhs = el2.elab(rhs_s, [])
    rspan = rhs_s.span  # type: ignore[attr-defined]
    el2.uni(el2.infer(rhs, [], rspan), result_sort, rspan)
    pats = [el2.finalize(p, rspan) for p in pats]
    return pats, el2.finalize(rhs, rspan)
