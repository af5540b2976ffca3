"""Moving between propositions and boolean computations.

A reflection certificate is an ordinary theorem of the shape
``forall xs, P xs <-> (b xs = true)`` linking a predicate with a
boolean function.  Certificates are registered in a :class:`ReflectDb`
and composed structurally: conjunction maps to ``andb``, disjunction to
``orb``, negation to ``negb``, propositional equality to the generated
decidable equality ``eqb``.  The bridging lemmas for those operators
are derived on demand by case analysis on the boolean arguments
followed by closed evaluation, so they are available exactly when the
development actually defines the operators.

On top of certificate synthesis sit the two user-facing operations:

* ``#reflect P b`` transports every defining equation of ``b`` into a
  propositional rewrite rule about ``P`` (all of them, or none);
* :func:`decide` evaluates a closed proposition to ``<-> True`` or
  ``<-> False`` through its boolean companion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kernel import Equation, Kernel, KernelError, Theorem, close_forall, \
    strip_forall_metas
from .terms import (BOOL, FALSE, TRUE, And, Const, Eq, FalseP, Forall, FVar,
                    Iff, Imp, Lam, Meta, Not, Or, Sort, SVar, Subst, Term,
                    TrueP, apps, arrow, check_sorts, children, free_vars,
                    instantiate, is_closed, match_fo, metas_of,
                    sort_free_vars, unapply)

_TRUE_B = Const("true", BOOL)
_FALSE_B = Const("false", BOOL)


class ReflectError(Exception):
    pass


def _stmt_sort_vars(t: Term) -> set[str]:
    out: set[str] = set()

    def go(x: Term) -> None:
        match x:
            case Const(_, s) | FVar(_, s) | Meta(_, s):
                out.update(sort_free_vars(s))
            case Eq(s, _, _):
                out.update(sort_free_vars(s))
            case Forall(_, s, _) | Lam(_, s, _):
                out.update(sort_free_vars(s))
            case _:
                pass
        for c in children(x):
            go(c)

    go(t)
    return out


@dataclass(frozen=True)
class ReflectInstance:
    """A registered certificate together with its matching patterns."""

    name: str
    cert: Theorem                 # forall xs, prop <-> (bool = true)
    metas: tuple[Meta, ...]
    prop_pat: Term
    bool_pat: Term
    flex_sorts: frozenset[str]


def instance_of_theorem(name: str, cert: Theorem) -> ReflectInstance:
    metas, prems, core = strip_forall_metas(cert.concl)
    if prems:
        raise ReflectError(f"{name}: a certificate cannot have premises")
    if not (isinstance(core, Iff) and isinstance(core.rhs, Eq)
            and core.rhs.sort == BOOL and core.rhs.rhs == _TRUE_B):
        raise ReflectError(
            f"{name}: certificate must end in `P <-> (b = true)`")
    flex = frozenset(_stmt_sort_vars(cert.concl))
    return ReflectInstance(name, cert, tuple(metas), core.lhs,
                           core.rhs.lhs, flex)


@dataclass
class ReflectDb:
    """Certificates in most-recently-registered-first order."""

    instances: list[ReflectInstance] = field(default_factory=list)
    _bridges: dict[str, Theorem] = field(default_factory=dict)

    def register(self, inst: ReflectInstance) -> None:
        self.instances.insert(0, inst)

    def find(self, prop_name: str, bool_name: str) -> Optional[ReflectInstance]:
        for inst in self.instances:
            ph, _ = unapply(inst.prop_pat)
            bh, _ = unapply(inst.bool_pat)
            if (isinstance(ph, Const) and ph.name == prop_name
                    and isinstance(bh, Const) and bh.name == bool_name):
                return inst
        return None


# ---------------------------------------------------------------------------
# closed decision: proving and refuting ground propositions
# ---------------------------------------------------------------------------


def _prove(k: Kernel, p: Term) -> Optional[Theorem]:
    """A proof of the closed proposition ``p``, when one is found."""
    match p:
        case TrueP():
            return k.prim("true_intro", (), ())
        case And(a, b):
            ta, tb = _prove(k, a), _prove(k, b)
            if ta is None or tb is None:
                return None
            return k.prim("and_intro", (ta, tb), ())
        case Or(a, b):
            ta = _prove(k, a)
            if ta is not None:
                return k.prim("or_intro_l", (ta,), (b,))
            tb = _prove(k, b)
            if tb is not None:
                return k.prim("or_intro_r", (tb,), (a,))
            return None
        case Not(a):
            return _refute(k, a)
        case Iff(a, b):
            return _prove_iff(k, a, b)
        case Imp(a, b):
            tb = _prove(k, b)
            if tb is not None:
                return k.prim("imp_intro", (tb,), (a,))
            na = _refute(k, a)
            if na is not None:
                ha = k.prim("assume", (), (a,))
                f = k.prim("not_elim", (na, ha), ())
                return k.prim("imp_intro",
                              (k.prim("false_elim", (f,), (b,)),), (a,))
            return None
        case Eq(s, a, b) if s == BOOL and is_closed(p) and not free_vars(p):
            va, vb = _bool_value(k, a), _bool_value(k, b)
            if va is None or vb is None or va[0] != vb[0]:
                return None
            eva, evb = va[1], vb[1]          # a = v  and  b = v
            return k.prim("rewrite", (evb, eva), (((1,),), Subst(), "R2L"))
        case Forall(hint, s, _) if s == BOOL:
            return _prove_forall_bool(k, p)
        case _:
            return None


def _refute(k: Kernel, p: Term) -> Optional[Theorem]:
    """``|- not p`` for a closed proposition ``p``, when derivable."""
    match p:
        case FalseP():
            f = k.prim("assume", (), (FALSE,))
            return k.prim("not_intro", (f,), (FALSE,))
        case And(a, b):
            for side, pick in ((a, "and_elim_l"), (b, "and_elim_r")):
                n = _refute(k, side)
                if n is not None:
                    h = k.prim("assume", (), (p,))
                    f = k.prim("not_elim", (n, k.prim(pick, (h,), ())), ())
                    return k.prim("not_intro", (f,), (p,))
            return None
        case Or(a, b):
            na, nb = _refute(k, a), _refute(k, b)
            if na is None or nb is None:
                return None
            h = k.prim("assume", (), (p,))
            fa = k.prim("not_elim", (na, k.prim("assume", (), (a,))), ())
            fb = k.prim("not_elim", (nb, k.prim("assume", (), (b,))), ())
            f = k.prim("or_elim", (h, fa, fb), ())
            return k.prim("not_intro", (f,), (p,))
        case Not(a):
            ta = _prove(k, a)
            if ta is None:
                return None
            h = k.prim("assume", (), (p,))
            return k.prim("not_intro", (k.prim("not_elim", (h, ta), ()),),
                          (p,))
        case Iff(a, b):
            h = k.prim("assume", (), (p,))
            ta, nb = _prove(k, a), _refute(k, b)
            if ta is not None and nb is not None:
                f = k.prim("not_elim", (nb, k.prim("iff_fwd", (h, ta), ())),
                           ())
                return k.prim("not_intro", (f,), (p,))
            na, tb = _refute(k, a), _prove(k, b)
            if na is not None and tb is not None:
                f = k.prim("not_elim", (na, k.prim("iff_bwd", (h, tb), ())),
                           ())
                return k.prim("not_intro", (f,), (p,))
            return None
        case Eq(s, a, b) if s == BOOL and is_closed(p) and not free_vars(p):
            va, vb = _bool_value(k, a), _bool_value(k, b)
            if va is None or vb is None or va[0] == vb[0]:
                return None
            h = k.prim("assume", (), (p,))
            h = k.prim("rewrite", (va[1], h), (((0,),), Subst(), "L2R"))
            h = k.prim("rewrite", (vb[1], h), (((1,),), Subst(), "L2R"))
            clash = k.prim("ctor_clash", (), (h.concl,))
            return k.prim("not_intro",
                          (k.prim("iff_fwd", (clash, h), ()),), (p,))
        case _:
            return None


def _bool_value(k: Kernel, t: Term) -> Optional[tuple[str, Theorem]]:
    """Evaluate a closed boolean term to a literal: (name, ``|- t = lit``)."""
    try:
        ev = k.eval_theorem(t)
    except KernelError:
        return None
    v = ev.concl.rhs
    if v == _TRUE_B:
        return ("true", ev)
    if v == _FALSE_B:
        return ("false", ev)
    return None


def _prove_iff(k: Kernel, a: Term, b: Term) -> Optional[Theorem]:
    ta, tb = _prove(k, a), _prove(k, b)
    if ta is not None and tb is not None:
        return k.prim("iff_intro",
                      (k.prim("imp_intro", (tb,), (a,)),
                       k.prim("imp_intro", (ta,), (b,))), ())
    na, nb = _refute(k, a), _refute(k, b)
    if na is not None and nb is not None:
        def absurd(src: Term, nsrc: Theorem, dst: Term) -> Theorem:
            h = k.prim("assume", (), (src,))
            f = k.prim("not_elim", (nsrc, h), ())
            return k.prim("imp_intro",
                          (k.prim("false_elim", (f,), (dst,)),), (src,))
        return k.prim("iff_intro", (absurd(a, na, b), absurd(b, nb, a)), ())
    return None


def _prove_forall_bool(k: Kernel, p: Forall) -> Optional[Theorem]:
    """Prove ``forall x : Bool, body`` by case analysis on ``x``."""
    scheme = k.scheme_of("Bool", "cases")
    motive = Lam(p.hint or "b", BOOL, p.body)
    th = k.prim("forall_elim", (scheme,), (motive,))
    while isinstance(th.concl, Imp):
        case = _prove(k, th.concl.lhs)
        if case is None:
            return None
        th = k.prim("imp_elim", (th, case), ())
    return th


# ---------------------------------------------------------------------------
# iff plumbing
# ---------------------------------------------------------------------------


def _iff_trans(k: Kernel, ab: Theorem, bc: Theorem) -> Theorem:
    a, c = ab.concl.lhs, bc.concl.rhs
    ha = k.prim("assume", (), (a,))
    fwd = k.prim("imp_intro",
                 (k.prim("iff_fwd", (bc, k.prim("iff_fwd", (ab, ha), ())),
                         ()),), (a,))
    hc = k.prim("assume", (), (c,))
    bwd = k.prim("imp_intro",
                 (k.prim("iff_bwd", (ab, k.prim("iff_bwd", (bc, hc), ())),
                         ()),), (c,))
    return k.prim("iff_intro", (fwd, bwd), ())


def _iff_sym(k: Kernel, th: Theorem) -> Theorem:
    return k.prim("eq_sym", (th,), ())


def _cong_and(k: Kernel, t1: Theorem, t2: Theorem) -> Theorem:
    """From P1<->Q1 and P2<->Q2 derive (P1 /\\ P2) <-> (Q1 /\\ Q2)."""
    p1, q1 = t1.concl.lhs, t1.concl.rhs
    p2, q2 = t2.concl.lhs, t2.concl.rhs

    def direction(src: Term, prim: str) -> Theorem:
        h = k.prim("assume", (), (src,))
        l = k.prim(prim, (t1, k.prim("and_elim_l", (h,), ())), ())
        r = k.prim(prim, (t2, k.prim("and_elim_r", (h,), ())), ())
        return k.prim("imp_intro", (k.prim("and_intro", (l, r), ()),), (src,))

    return k.prim("iff_intro",
                  (direction(And(p1, p2), "iff_fwd"),
                   direction(And(q1, q2), "iff_bwd")), ())


def _cong_or(k: Kernel, t1: Theorem, t2: Theorem) -> Theorem:
    p1, q1 = t1.concl.lhs, t1.concl.rhs
    p2, q2 = t2.concl.lhs, t2.concl.rhs

    def direction(a1: Term, a2: Term, b1: Term, b2: Term,
                  prim: str) -> Theorem:
        h = k.prim("assume", (), (Or(a1, a2),))
        c1 = k.prim("or_intro_l",
                    (k.prim(prim, (t1, k.prim("assume", (), (a1,))), ()),),
                    (b2,))
        c2 = k.prim("or_intro_r",
                    (k.prim(prim, (t2, k.prim("assume", (), (a2,))), ()),),
                    (b1,))
        body = k.prim("or_elim", (h, c1, c2), ())
        return k.prim("imp_intro", (body,), (Or(a1, a2),))

    return k.prim("iff_intro",
                  (direction(p1, p2, q1, q2, "iff_fwd"),
                   direction(q1, q2, p1, p2, "iff_bwd")), ())


def _cong_not(k: Kernel, t1: Theorem) -> Theorem:
    p, q = t1.concl.lhs, t1.concl.rhs

    def direction(a: Term, b: Term, prim: str) -> Theorem:
        hn = k.prim("assume", (), (Not(a),))
        hb = k.prim("assume", (), (b,))
        f = k.prim("not_elim", (hn, k.prim(prim, (t1, hb), ())), ())
        return k.prim("imp_intro",
                      (k.prim("not_intro", (f,), (b,)),), (Not(a),))

    return k.prim("iff_intro",
                  (direction(p, q, "iff_bwd"), direction(q, p, "iff_fwd")),
                  ())


def _cong_iff(k: Kernel, t1: Theorem, t2: Theorem) -> Theorem:
    p1, q1 = t1.concl.lhs, t1.concl.rhs
    p2, q2 = t2.concl.lhs, t2.concl.rhs

    def direction(src: Term, first: Theorem, second: Theorem) -> Theorem:
        h = k.prim("assume", (), (src,))
        chained = _iff_trans(k, _iff_trans(k, _iff_sym(k, first), h), second)
        return k.prim("imp_intro", (chained,), (src,))

    return k.prim("iff_intro",
                  (direction(Iff(p1, p2), t1, t2),
                   direction(Iff(q1, q2), _iff_sym(k, t1),
                             _iff_sym(k, t2))), ())


# ---------------------------------------------------------------------------
# bridging lemmas for the boolean operators
# ---------------------------------------------------------------------------

_BRIDGE_STMTS = {
    "andb": lambda a, b: And(a, b),
    "orb": lambda a, b: Or(a, b),
    "eqb": lambda a, b: Iff(a, b),
}


def _bridge_lemma(k: Kernel, db: ReflectDb, op: str) -> Theorem:
    """``forall a b, ((a=true) <*> (b=true)) <-> (op a b = true)`` where
    ``<*>`` is the propositional counterpart of ``op``.  Derived once by
    exhausting the boolean cases and cached."""
    cached = db._bridges.get(op)
    if cached is not None:
        return cached
    a, b = FVar("a✝r", BOOL), FVar("b✝r", BOOL)
    et = lambda x: Eq(BOOL, x, _TRUE_B)
    if op == "negb":
        fn = Const("negb", arrow(BOOL, BOOL))
        stmt = close_forall([a], Iff(Not(et(a)), et(apps(fn, a))))
    else:
        fn = Const(op, arrow(BOOL, BOOL, BOOL))
        stmt = close_forall(
            [a, b], Iff(_BRIDGE_STMTS[op](et(a), et(b)),
                        et(apps(fn, a, b))))
    th = _prove(k, stmt)
    if th is None:
        raise ReflectError(
            f"cannot establish the reflection rule for `{op}`; is it "
            "defined with the standard boolean behaviour?")
    db._bridges[op] = th
    return th


# ---------------------------------------------------------------------------
# certificate synthesis
# ---------------------------------------------------------------------------


def _true_cert(k: Kernel) -> Theorem:
    fwd = k.prim("imp_intro",
                 (k.prim("eq_refl", (), (_TRUE_B,)),), (TRUE,))
    bwd = k.prim("imp_intro",
                 (k.prim("true_intro", (), ()),), (Eq(BOOL, _TRUE_B, _TRUE_B),))
    return k.prim("iff_intro", (fwd, bwd), ())


def _false_cert(k: Kernel) -> Theorem:
    eq = Eq(BOOL, _FALSE_B, _TRUE_B)
    hf = k.prim("assume", (), (FALSE,))
    fwd = k.prim("imp_intro",
                 (k.prim("false_elim", (hf,), (eq,)),), (FALSE,))
    clash = k.prim("ctor_clash", (), (eq,))
    he = k.prim("assume", (), (eq,))
    bwd = k.prim("imp_intro",
                 (k.prim("false_elim",
                         (k.prim("iff_fwd", (clash, he), ()),), (FALSE,)),),
                 (eq,))
    return k.prim("iff_intro", (fwd, bwd), ())


def _instantiate(k: Kernel, inst: ReflectInstance,
                 s: Subst) -> Optional[Theorem]:
    th = inst.cert
    if s.sorts:
        mapping = tuple((n, v) for n, v in sorted(s.sorts.items())
                        if SVar(n) != v)
        if mapping:
            th = k.prim("sort_inst", (th,), mapping)
    for m in inst.metas:
        v = s.metas.get(m.mid)
        if v is None or metas_of(v):
            return None
        th = k.prim("forall_elim", (th,), (v,))
    return th


def _try_instances(k: Kernel, db: ReflectDb, t: Term,
                   by_prop: bool) -> Optional[Theorem]:
    for inst in db.instances:
        pat = inst.prop_pat if by_prop else inst.bool_pat
        s = match_fo(pat, t, None, set(inst.flex_sorts))
        if s is None:
            continue
        th = _instantiate(k, inst, s)
        if th is not None:
            return th
    return None


def synthesize_reflect(k: Kernel, db: ReflectDb, b: Term) -> Theorem:
    """A certificate ``|- P <-> (b = true)`` for the boolean term ``b``,
    assembled from registered instances and the operator bridges."""
    th = _try_instances(k, db, b, by_prop=False)
    if th is not None:
        return th
    if b == _TRUE_B:
        return _true_cert(k)
    if b == _FALSE_B:
        return _false_cert(k)
    head, args = unapply(b)
    if isinstance(head, Const):
        if head.name in ("andb", "orb") and len(args) == 2:
            cong = _cong_and if head.name == "andb" else _cong_or
            t1 = synthesize_reflect(k, db, args[0])
            t2 = synthesize_reflect(k, db, args[1])
            lem = _bridge_lemma(k, db, head.name)
            lem = k.prim("forall_elim", (lem,), (args[0],))
            lem = k.prim("forall_elim", (lem,), (args[1],))
            return _iff_trans(k, cong(k, t1, t2), lem)
        if head.name == "negb" and len(args) == 1:
            t1 = synthesize_reflect(k, db, args[0])
            lem = _bridge_lemma(k, db, "negb")
            lem = k.prim("forall_elim", (lem,), (args[0],))
            return _iff_trans(k, _cong_not(k, t1), lem)
        if head.name == "eqb" and len(args) == 2:
            s0 = check_sorts(args[0])
            if s0 == BOOL:
                try:
                    t1 = synthesize_reflect(k, db, args[0])
                    t2 = synthesize_reflect(k, db, args[1])
                    lem = _bridge_lemma(k, db, "eqb")
                    lem = k.prim("forall_elim", (lem,), (args[0],))
                    lem = k.prim("forall_elim", (lem,), (args[1],))
                    return _iff_trans(k, _cong_iff(k, t1, t2), lem)
                except ReflectError:
                    pass
            th = k.eq_reflect(s0)
            th = k.prim("forall_elim", (th,), (args[0],))
            return k.prim("forall_elim", (th,), (args[1],))
    raise ReflectError(f"no reflection instance covers `{b}`")


def reflect_cert(k: Kernel, db: ReflectDb, p: Term) -> Theorem:
    """A certificate ``|- p <-> (b = true)``, directed by the shape of
    the proposition ``p``."""
    th = _try_instances(k, db, p, by_prop=True)
    if th is not None:
        return th
    match p:
        case TrueP():
            return _true_cert(k)
        case FalseP():
            return _false_cert(k)
        case And(l, r) | Or(l, r):
            op = "andb" if isinstance(p, And) else "orb"
            cong = _cong_and if isinstance(p, And) else _cong_or
            t1, t2 = reflect_cert(k, db, l), reflect_cert(k, db, r)
            b1, b2 = t1.concl.rhs.lhs, t2.concl.rhs.lhs
            lem = _bridge_lemma(k, db, op)
            lem = k.prim("forall_elim", (lem,), (b1,))
            lem = k.prim("forall_elim", (lem,), (b2,))
            return _iff_trans(k, cong(k, t1, t2), lem)
        case Not(x):
            t1 = reflect_cert(k, db, x)
            lem = _bridge_lemma(k, db, "negb")
            lem = k.prim("forall_elim", (lem,), (t1.concl.rhs.lhs,))
            return _iff_trans(k, _cong_not(k, t1), lem)
        case Iff(l, r):
            t1, t2 = reflect_cert(k, db, l), reflect_cert(k, db, r)
            lem = _bridge_lemma(k, db, "eqb")
            lem = k.prim("forall_elim", (lem,), (t1.concl.rhs.lhs,))
            lem = k.prim("forall_elim", (lem,), (t2.concl.rhs.lhs,))
            return _iff_trans(k, _cong_iff(k, t1, t2), lem)
        case Eq(s, x, y):
            th = k.eq_reflect(s)
            th = k.prim("forall_elim", (th,), (x,))
            return k.prim("forall_elim", (th,), (y,))
        case _:
            raise ReflectError(f"no reflection instance covers `{p}`")


def decide(k: Kernel, db: ReflectDb, p: Term) -> Theorem:
    """For a closed proposition with boolean companion, the theorem
    ``|- p <-> True`` or ``|- p <-> False``."""
    if free_vars(p) or metas_of(p) or not is_closed(p):
        raise ReflectError("decide: the proposition must be closed")
    cert = reflect_cert(k, db, p)
    eq = cert.concl.rhs
    pf = _prove(k, eq)
    if pf is not None:
        fwd = k.prim("imp_intro",
                     (k.prim("true_intro", (), ()),), (p,))
        bwd = k.prim("imp_intro",
                     (k.prim("iff_bwd", (cert, pf), ()),), (TRUE,))
        return k.prim("iff_intro", (fwd, bwd), ())
    nf = _refute(k, eq)
    if nf is None:
        raise ReflectError(f"decide: cannot evaluate `{eq.lhs}`")
    hp = k.prim("assume", (), (p,))
    f = k.prim("not_elim", (nf, k.prim("iff_fwd", (cert, hp), ())), ())
    fwd = k.prim("imp_intro", (f,), (p,))
    hf = k.prim("assume", (), (FALSE,))
    bwd = k.prim("imp_intro",
                 (k.prim("false_elim", (hf,), (p,)),), (FALSE,))
    return k.prim("iff_intro", (fwd, bwd), ())


# ---------------------------------------------------------------------------
# transporting defining equations
# ---------------------------------------------------------------------------


def _open_binders(stmt: Term) -> tuple[list[FVar], list[Term], Term]:
    vs: list[FVar] = []
    taken: set[str] = set()
    t = stmt
    while isinstance(t, Forall):
        base = t.hint or "x"
        name, i = base, 0
        while name in taken:
            i += 1
            name = f"{base}{i}"
        taken.add(name)
        v = FVar(name, t.var_sort)
        vs.append(v)
        t = instantiate(t.body, v)
    prems: list[Term] = []
    while isinstance(t, Imp):
        prems.append(t.lhs)
        t = t.rhs
    return vs, prems, t


def transport_equation(k: Kernel, db: ReflectDb, eq: Equation) -> Theorem:
    """Turn a boolean defining equation ``forall xs, f ps = rhs`` into
    the matching statement about the reflected predicate:
    ``forall xs, P ps <-> Q`` with ``Q`` the reflection of ``rhs``."""
    vs, prems, core = _open_binders(eq.thm.concl)
    if not isinstance(core, Eq) or core.sort != BOOL:
        raise ReflectError("not a boolean equation")
    th_l = synthesize_reflect(k, db, core.lhs)   # P <-> (lhs = true)
    th_r = synthesize_reflect(k, db, core.rhs)   # Q <-> (rhs = true)
    inst = eq.thm
    for v in vs:
        inst = k.prim("forall_elim", (inst,), (v,))
    for prem in prems:
        inst = k.prim("imp_elim", (inst, k.prim("assume", (), (prem,))), ())
    bridged = k.prim("rewrite", (inst, th_l), (((1, 0),), Subst(), "L2R"))
    res = _iff_trans(k, bridged, _iff_sym(k, th_r))
    for prem in reversed(prems):
        res = k.prim("imp_intro", (res,), (prem,))
    for v in reversed(vs):
        res = k.prim("forall_intro", (res,), (v.name, v.sort))
    return res


# ---------------------------------------------------------------------------
# declaration processing (driven by the file checker)
# ---------------------------------------------------------------------------


def ensure_db(checker) -> ReflectDb:
    db = getattr(checker, "reflect_db", None)
    if db is None:
        db = ReflectDb()
        checker.reflect_db = db
    return db


def process_instance(checker, d) -> None:
    from .elab import ElabError, Elaborator, Env, elaborate_prop, \
        elaborate_term
    from .engine import EngineError, Interp
    from .proofstate import CtxVar, Goal, qed
    from .check import ScriptRecord

    k = checker.kernel
    db = ensure_db(checker)
    el = Elaborator(checker.env)
    params: list[tuple[str, Sort]] = []
    for names, ssort in d.binders:
        if ssort is None:
            raise ElabError(d.span, "instance binders need a sort")
        s = el.elab_sort(ssort)
        params.extend((n, s) for n in names)
    env2 = Env(k, checker.env.type_vars,
               {**checker.env.term_vars, **dict(params)},
               dict(checker.env.pending_consts))
    prop = elaborate_prop(env2, d.prop_head)
    boolt = elaborate_term(env2, d.bool_head, expect=BOOL)
    stmt_open = Iff(prop, Eq(BOOL, boolt, _TRUE_B))
    fvs = [FVar(n, s) for n, s in params]
    closed_binders = close_forall(fvs, stmt_open)
    closed, root0 = checker._close_over_ambient(closed_binders)
    ctx = tuple(list(root0.ctx) + [CtxVar(n, FVar(n, s))
                                   for n, s in params])
    root = Goal(ctx, stmt_open)

    interp = Interp(checker._penv(), closed, root)
    error = None
    try:
        interp.run(d.script)
    except EngineError as e:
        error = (e.span, e.message)
    ok = error is None and not interp.goals
    checker.scripts.append(ScriptRecord(d.name, d.span, stmt_open,
                                        list(interp.trace),
                                        list(interp.goals), ok))
    if error is not None:
        checker._error(*error)
        return
    if interp.goals:
        checker._error(d.span, f"unfinished proof: {len(interp.goals)} "
                               "goal(s) remain")
        return
    thm = qed(k, closed, interp.root, interp.forest,
              frozenset(checker.axiom_names))
    k.register_lemma(d.name, thm)
    try:
        db.register(instance_of_theorem(d.name, thm))
    except ReflectError as e:
        raise ElabError(d.span, str(e)) from e


def process_pragma(checker, d) -> None:
    from .elab import ElabError
    from .automation import rule_of_theorem, AutomationError

    k = checker.kernel
    db = ensure_db(checker)
    if db.find(d.prop_name, d.bool_name) is None:
        raise ElabError(
            d.span, f"no reflection instance links {d.prop_name} "
                    f"with {d.bool_name}")
    eqs = k.all_equations().get(d.bool_name)
    if not eqs:
        raise ElabError(d.span,
                        f"{d.bool_name} has no defining equations")
    rules = []
    for i, eq in enumerate(eqs):
        try:
            thm = transport_equation(k, db, eq)
        except (ReflectError, KernelError) as e:
            raise ElabError(
                d.span, f"cannot transport equation {i} of "
                        f"{d.bool_name}: {e}") from e
        name = f"{d.prop_name}.eq{i}"
        flex = frozenset(_stmt_sort_vars(thm.concl))
        try:
            rules.append(rule_of_theorem(name, thm, flex))
        except AutomationError as e:
            raise ElabError(d.span, str(e)) from e
        k.register_lemma(name, thm)
    for r in rules:
        checker.simpset.add(r, strict=False)
