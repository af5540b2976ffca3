"""The trusted proof kernel.

`Theorem` values are only created here, by a fixed table of primitive
rules (`Kernel.prim`); everything above the kernel (tactics, automation,
reflection) is an untrusted client that can fail but cannot forge a
theorem.  Besides the rule table the trusted surface consists of:

* declaration checking: strictly positive inductives, structurally
  terminating recursive definitions with exhaustive patterns,
* generated schemes: induction, case analysis and functional induction,
* generated decidable-equality equations and certificates for concrete
  first-order datatypes,
* closed-term evaluation.

Every theorem records its provenance (rule name, premises, parameters),
so it can be independently re-derived and checked.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .terms import (
    PROP, BOOL, NAT, And, App, BVar, Const, Eq, Exists, FVar, FalseP, Forall,
    Iff, Imp, Ite, Lam, Meta, Not, Or, Path, Sort, SArrow, SData, SProp,
    SVar, Subst, Term, TrueP, TRUE, FALSE, abstract, alpha_eq, apply_subst,
    apps, arrow, beta_normalize, check_sorts, children, free_vars,
    instantiate, is_closed, loose_bvars, metas_of, replace_at, sort_free_vars,
    sort_match, sort_subst, subterm_at, unapply, with_children,
)


class KernelError(Exception):
    pass


# ---------------------------------------------------------------------------
# Theorems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Theorem:
    """A certified sequent ``hyps ⊢ concl``.

    Free variables are implicitly universal (eigenvariables).  ``axioms``
    is the set of axiom names the derivation depends on.  ``prov``
    records how the theorem was obtained so it can be re-checked.
    """

    hyps: frozenset[Term]
    concl: Term
    axioms: frozenset[str]
    prov: tuple = field(compare=False, repr=False, default=())

    def __repr__(self) -> str:
        return f"Theorem({len(self.hyps)} hyps ⊢ {self.concl!r})"


def _mk(rule: str, prems: Sequence[Theorem], params: tuple,
        hyps: Iterable[Term], concl: Term,
        extra_axioms: Iterable[str] = ()) -> Theorem:
    ax: frozenset[str] = frozenset(extra_axioms)
    for p in prems:
        ax |= p.axioms
    return Theorem(frozenset(hyps), concl, ax, (rule, tuple(prems), params))


def _union_hyps(*thms: Theorem) -> frozenset[Term]:
    out: frozenset[Term] = frozenset()
    for t in thms:
        out |= t.hyps
    return out


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass
class CtorDecl:
    name: str
    arg_sorts: tuple[Sort, ...]      # for datatype constructors
    statement: Optional[Term] = None  # for predicate constructors


@dataclass
class InductiveDecl:
    name: str
    svars: tuple[str, ...]
    is_prop: bool
    index_sorts: tuple[Sort, ...]    # only for predicates
    ctors: list[CtorDecl]

    @property
    def self_sort(self) -> Sort:
        return SData(self.name, tuple(SVar(v) for v in self.svars))


@dataclass
class Equation:
    """A defining equation `forall vars, lhs = rhs` prepared for
    rewriting: ``lhs``/``rhs`` use metavariables for the pattern vars."""

    lhs: Term
    rhs: Term
    thm: Theorem
    flex_sorts: frozenset[str]


@dataclass
class RecDefDecl:
    name: str
    svars: tuple[str, ...]
    sort: Sort
    clauses: list[tuple[list[Term], Term]]   # user clauses (pattern terms)
    equations: list[Equation]                # non-overlapping residuals


@dataclass
class DefDecl:
    """A non-recursive definition (including Prop-valued ones)."""

    name: str
    svars: tuple[str, ...]
    params: list[tuple[str, Sort]]
    result_sort: Sort                         # PROP for Prop definitions
    body: Term
    unfold: Theorem                           # forall-closed eq/iff


# ---------------------------------------------------------------------------
# Helpers for building forall-closed statements
# ---------------------------------------------------------------------------


def close_forall(vars_: Sequence[FVar], body: Term) -> Term:
    for v in reversed(vars_):
        body = Forall(v.name, v.sort, abstract(body, v.name))
    return body


def close_imp(prems: Sequence[Term], body: Term) -> Term:
    for p in reversed(prems):
        body = Imp(p, body)
    return body


def strip_forall(t: Term, fresh: Callable[[str, Sort], FVar]
                 ) -> tuple[list[FVar], Term]:
    out: list[FVar] = []
    while isinstance(t, Forall):
        v = fresh(t.hint or "x", t.var_sort)
        out.append(v)
        t = instantiate(t.body, v)
    return out, t


def strip_forall_metas(t: Term) -> tuple[list[Meta], list[Term], Term]:
    """Strip a forall/implication prefix into metavariables and premise
    instances; metavariable ids are 0,1,2,... in binding order."""
    metas: list[Meta] = []
    while isinstance(t, Forall):
        m = Meta(len(metas), t.var_sort)
        metas.append(m)
        t = instantiate(t.body, m)
    prems: list[Term] = []
    while isinstance(t, Imp):
        prems.append(t.lhs)
        t = t.rhs
    return metas, prems, t


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------


@dataclass
class Signature:
    inductives: dict[str, InductiveDecl] = field(default_factory=dict)
    consts: dict[str, tuple[tuple[str, ...], Sort]] = field(default_factory=dict)
    recdefs: dict[str, RecDefDecl] = field(default_factory=dict)
    defs: dict[str, DefDecl] = field(default_factory=dict)
    axioms: dict[str, Theorem] = field(default_factory=dict)
    lemmas: dict[str, Theorem] = field(default_factory=dict)
    decidable_svars: set[str] = field(default_factory=set)

    def const_sort(self, name: str, sorts: dict[str, Sort]) -> Sort:
        svars, scheme = self.consts[name]
        return sort_subst(scheme, sorts)

    def ctor_names(self, data: str) -> list[str]:
        return [c.name for c in self.inductives[data].ctors]

    def is_ctor(self, name: str) -> Optional[str]:
        """Datatype name if `name` is a constructor of a declared
        (non-Prop) datatype."""
        for ind in self.inductives.values():
            if not ind.is_prop and any(c.name == name for c in ind.ctors):
                return ind.name
        return None


# ---------------------------------------------------------------------------
# The kernel
# ---------------------------------------------------------------------------

_IFF_POSITIONS_OK = (Imp, And, Or, Iff, Not, Forall, Exists)


class Kernel:
    def __init__(self) -> None:
        self.sig = Signature()
        self._fresh_counter = itertools.count(1)
        self._bootstrap()

    # -- fresh names --------------------------------------------------------

    def fresh_fvar(self, base: str, sort: Sort) -> FVar:
        return FVar(f"{base}✝{next(self._fresh_counter)}", sort)

    # -- bootstrap: Bool ----------------------------------------------------

    def _bootstrap(self) -> None:
        self.declare_inductive("Bool", (), [CtorDecl("false", ()),
                                            CtorDecl("true", ())])

    # ======================================================================
    # Declarations
    # ======================================================================

    def declare_inductive(self, name: str, svars: tuple[str, ...],
                          ctors: list[CtorDecl],
                          index_sorts: tuple[Sort, ...] = (),
                          is_prop: bool = False) -> InductiveDecl:
        if name in self.sig.inductives or name in self.sig.consts:
            raise KernelError(f"duplicate declaration {name}")
        decl = InductiveDecl(name, svars, is_prop, index_sorts, ctors)
        self_sort: Sort = (arrow(*index_sorts, PROP) if is_prop and index_sorts
                           else (PROP if is_prop else decl.self_sort))
        if is_prop:
            self.sig.consts[name] = (svars, self_sort)
            for c in ctors:
                if c.statement is None:
                    raise KernelError("predicate constructor needs statement")
                self._check_positivity_pred(name, c.statement)
        else:
            for c in ctors:
                for a in c.arg_sorts:
                    self._check_positivity_data(name, a, decl.self_sort)
                self.sig.consts[c.name] = (
                    svars, arrow(*c.arg_sorts, decl.self_sort))
        self.sig.inductives[name] = decl
        if not is_prop and self._first_order(decl):
            self._generate_eqb(decl)
        return decl

    def _check_positivity_data(self, name: str, arg: Sort,
                               self_sort: Sort) -> None:
        if arg == self_sort:
            return
        if isinstance(arg, SArrow):
            raise KernelError(
                f"constructor of {name} has function argument; "
                "only strictly positive first-order arguments are allowed")
        if name in _sort_data_names(arg):
            raise KernelError(
                f"constructor of {name} mentions {name} in a nested "
                "position; not strictly positive")

    def _check_positivity_pred(self, name: str, stmt: Term) -> None:
        t = stmt
        while isinstance(t, Forall):
            t = t.body
        while isinstance(t, Imp):
            prem = t.lhs
            head, _ = unapply(prem)
            if not (isinstance(head, Const) and head.name == name):
                if name in {c.name for c in _consts_of(prem)}:
                    raise KernelError(
                        f"predicate {name} occurs negatively in a "
                        "constructor premise")
            t = t.rhs
        head, _ = unapply(t)
        if not (isinstance(head, Const) and head.name == name):
            raise KernelError(
                f"constructor conclusion must be an application of {name}")

    def _first_order(self, decl: InductiveDecl) -> bool:
        for c in decl.ctors:
            for a in c.arg_sorts:
                if isinstance(a, SArrow):
                    return False
        return True

    # -- generated decidable equality --------------------------------------

    def eqb_const(self, sort: Sort) -> Const:
        return Const("eqb", arrow(sort, sort, BOOL))

    def _generate_eqb(self, decl: InductiveDecl) -> None:
        """Install defining equations for `eqb` at this datatype."""
        sort = decl.self_sort
        eqb = self.eqb_const(sort)
        eqs = self._eqb_equations.setdefault("eqb", [])
        for c1 in decl.ctors:
            for c2 in decl.ctors:
                xs = [FVar(f"x{i+1}", s) for i, s in enumerate(c1.arg_sorts)]
                ys = [FVar(f"y{i+1}", s) for i, s in enumerate(c2.arg_sorts)]
                s1, _ = self.sig.consts[c1.name]
                lhs = apps(eqb,
                           apps(Const(c1.name, arrow(*c1.arg_sorts, sort)), *xs),
                           apps(Const(c2.name, arrow(*c2.arg_sorts, sort)), *ys))
                if c1.name != c2.name:
                    rhs: Term = Const("false", BOOL)
                else:
                    rhs = Const("true", BOOL)
                    for x, y in zip(reversed(xs), reversed(ys)):
                        cmp = apps(self.eqb_const(x.sort), x, y)
                        rhs = (cmp if rhs == Const("true", BOOL)
                               else apps(andb_const(), cmp, rhs))
                stmt = close_forall(xs + ys, Eq(BOOL, lhs, rhs))
                thm = _mk("eqb_defeq", (), (decl.name, c1.name, c2.name),
                          (), stmt)
                eqs.append(self._equation_of(thm, decl.svars))

    _eqb_equations: dict[str, list[Equation]]

    # -- recursive definitions ----------------------------------------------

    def declare_recdef(self, name: str, svars: tuple[str, ...],
                       arg_sorts: tuple[Sort, ...], result_sort: Sort,
                       clauses: list[tuple[list[Term], Term]]) -> RecDefDecl:
        if name in self.sig.consts:
            raise KernelError(f"duplicate declaration {name}")
        fn_sort = arrow(*arg_sorts, result_sort)
        self.sig.consts[name] = (svars, fn_sort)
        residuals = self._compile_patterns(name, arg_sorts, clauses)
        self._check_termination(name, arg_sorts, residuals)
        decl = RecDefDecl(name, svars, fn_sort, clauses, [])
        fn = Const(name, fn_sort)
        for i, (pats, rhs) in enumerate(residuals):
            pvars = []
            seen: set[str] = set()
            for p in pats:
                for v, s in free_vars(p).items():
                    if v not in seen:
                        seen.add(v)
                        pvars.append(FVar(v, s))
            lhs = apps(fn, *pats)
            stmt = close_forall(pvars, Eq(result_sort, lhs, rhs))
            thm = _mk("defeq", (), (name, i), (), stmt)
            decl.equations.append(self._equation_of(thm, svars))
        self.sig.recdefs[name] = decl
        return decl

    def _equation_of(self, thm: Theorem, svars: tuple[str, ...]) -> Equation:
        metas, prems, core = strip_forall_metas(thm.concl)
        if prems or not isinstance(core, Eq):
            raise KernelError("defining equation must be unconditional")
        return Equation(core.lhs, core.rhs, thm, frozenset(svars))

    # pattern compilation ---------------------------------------------------

    def _is_ctor_pattern(self, t: Term) -> bool:
        head, _ = unapply(t)
        return isinstance(head, Const) and self.sig.is_ctor(head.name) is not None

    def _split_var(self, v: FVar) -> list[Term]:
        """All constructor shapes of a variable's sort (fresh arg vars)."""
        s = v.sort
        if not isinstance(s, SData) or s.name not in self.sig.inductives:
            raise KernelError(f"cannot split on sort {s!r}")
        decl = self.sig.inductives[s.name]
        smap = dict(zip(decl.svars, s.args))
        out = []
        for c in decl.ctors:
            args = [self.fresh_fvar("p", sort_subst(a, smap))
                    for a in c.arg_sorts]
            csort = arrow(*(sort_subst(a, smap) for a in c.arg_sorts), s)
            out.append(apps(Const(c.name, csort), *args))
        return out

    def _subtract(self, vec: list[Term], prior: list[Term],
                  ) -> list[list[Term]]:
        """Pattern vectors covered by ``vec`` but not by ``prior``
        (result vectors are pairwise disjoint)."""
        for j in range(len(vec)):
            p, q = vec[j], prior[j]
            if isinstance(q, FVar):
                continue
            if isinstance(p, FVar):
                out: list[list[Term]] = []
                for shape in self._split_var(p):
                    sub = [apply_subst(x, Subst(fvars={p.name: shape}))
                           for x in vec]
                    out.extend(self._subtract(sub, prior))
                return out
            ph, pargs = unapply(p)
            qh, qargs = unapply(q)
            assert isinstance(ph, Const) and isinstance(qh, Const)
            if ph.name != qh.name:
                return [vec]
            flat = self._subtract(vec[:j] + pargs + vec[j + 1:],
                                  prior[:j] + qargs + prior[j + 1:])
            # restore the constructor column the recursion expanded
            return [r[:j] + [apps(ph, *r[j:j + len(pargs)])]
                    + r[j + len(pargs):] for r in flat]
        return []   # prior is all-variables: fully covered

    def _compile_patterns(self, name: str, arg_sorts: tuple[Sort, ...],
                          clauses: list[tuple[list[Term], Term]],
                          ) -> list[tuple[list[Term], Term]]:
        for pats, _ in clauses:
            if len(pats) != len(arg_sorts):
                raise KernelError(f"{name}: clause arity mismatch")
            for p in pats:
                self._check_linear_pattern(p)
        residuals: list[tuple[list[Term], Term]] = []
        for i, (pats, rhs) in enumerate(clauses):
            vecs = [(pats, rhs)]
            for prior_pats, _ in clauses[:i]:
                nxt: list[tuple[list[Term], Term]] = []
                for vec, vrhs in vecs:
                    for sub in self._subtract_with_rhs(vec, vrhs, prior_pats):
                        nxt.append(sub)
                vecs = nxt
            residuals.extend(vecs)
        # exhaustiveness: the catch-all vector minus all clauses is empty
        wild = [FVar(f"w{i}", s) for i, s in enumerate(arg_sorts)]
        rest: list[list[Term]] = [wild]
        for pats, _ in clauses:
            nxt2: list[list[Term]] = []
            for vec in rest:
                nxt2.extend(self._subtract(vec, pats))
            rest = nxt2
        if rest:
            raise KernelError(
                f"{name}: patterns are not exhaustive; missing e.g. "
                f"{[repr(p) for p in rest[0]]}")
        return residuals

    def _subtract_with_rhs(self, vec: list[Term], rhs: Term,
                           prior: list[Term],
                           ) -> list[tuple[list[Term], Term]]:
        """Like _subtract but propagates variable refinements into rhs."""
        for j in range(len(vec)):
            p, q = vec[j], prior[j]
            if isinstance(q, FVar):
                continue
            if isinstance(p, FVar):
                out: list[tuple[list[Term], Term]] = []
                for shape in self._split_var(p):
                    sub = Subst(fvars={p.name: shape})
                    nv = [apply_subst(x, sub) for x in vec]
                    nr = apply_subst(rhs, sub)
                    out.extend(self._subtract_with_rhs(nv, nr, prior))
                return out
            ph, pargs = unapply(p)
            qh, qargs = unapply(q)
            assert isinstance(ph, Const) and isinstance(qh, Const)
            if ph.name != qh.name:
                return [(vec, rhs)]
            flat = self._subtract_with_rhs(
                vec[:j] + pargs + vec[j + 1:], rhs,
                prior[:j] + qargs + prior[j + 1:])
            return [(r[:j] + [apps(ph, *r[j:j + len(pargs)])]
                     + r[j + len(pargs):], rr) for r, rr in flat]
        return []

    def _check_linear_pattern(self, p: Term) -> None:
        names: list[str] = []

        def go(t: Term) -> None:
            if isinstance(t, FVar):
                if t.name in names:
                    raise KernelError(f"non-linear pattern variable {t.name}")
                names.append(t.name)
                return
            head, args = unapply(t)
            if not (isinstance(head, Const)
                    and self.sig.is_ctor(head.name)):
                raise KernelError(f"invalid pattern {t!r}")
            for a in args:
                go(a)

        go(p)

    def _check_termination(self, name: str, arg_sorts: tuple[Sort, ...],
                           residuals: list[tuple[list[Term], Term]]) -> None:
        arity = len(arg_sorts)

        def rec_calls(t: Term) -> list[list[Term]]:
            out = []
            head, args = unapply(t)
            if isinstance(head, Const) and head.name == name:
                if len(args) != arity:
                    raise KernelError(
                        f"{name}: partially applied recursive call")
                out.append(args)
                for a in args:
                    out.extend(rec_calls(a))
                return out
            for c in children(t):
                out.extend(rec_calls(c))
            return out

        for i in range(len(arg_sorts)):
            ok = True
            for pats, rhs in residuals:
                strict = set(free_vars(pats[i])) if not isinstance(
                    pats[i], FVar) else set()
                for args in rec_calls(rhs):
                    if len(args) < len(arg_sorts):
                        ok = False
                        break
                    a = args[i]
                    if not (isinstance(a, FVar) and a.name in strict):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return
        raise KernelError(
            f"{name}: no argument position is structurally decreasing in "
            "every recursive call")

    # -- plain definitions ---------------------------------------------------

    def declare_def(self, name: str, svars: tuple[str, ...],
                    params: list[tuple[str, Sort]], result_sort: Sort,
                    body: Term) -> DefDecl:
        if name in self.sig.consts:
            raise KernelError(f"duplicate declaration {name}")
        fn_sort = arrow(*(s for _, s in params), result_sort)
        self.sig.consts[name] = (svars, fn_sort)
        pvars = [FVar(n, s) for n, s in params]
        lhs = apps(Const(name, fn_sort), *pvars)
        core: Term = (Iff(lhs, body) if result_sort == PROP
                      else Eq(result_sort, lhs, body))
        stmt = close_forall(pvars, core)
        thm = _mk("unfold_def", (), (name,), (), stmt)
        decl = DefDecl(name, svars, params, result_sort, body, thm)
        self.sig.defs[name] = decl
        return decl

    # -- axioms and lemmas ---------------------------------------------------

    def declare_axiom(self, name: str, stmt: Term) -> Theorem:
        if name in self.sig.axioms:
            raise KernelError(f"duplicate axiom {name}")
        if check_sorts(stmt) != PROP:
            raise KernelError("axiom statement must be a proposition")
        thm = _mk("axiom", (), (name,), (), stmt, extra_axioms=(name,))
        self.sig.axioms[name] = thm
        return thm

    def register_lemma(self, name: str, thm: Theorem) -> None:
        if thm.hyps:
            raise KernelError("lemmas must have no hypotheses")
        self.sig.lemmas[name] = thm

    # ======================================================================
    # Schemes
    # ======================================================================

    def scheme_of(self, name: str, kind: str) -> Theorem:
        """kind in {"induction", "cases", "fun-induction"}."""
        if kind == "fun-induction":
            return self._fun_induction(name)
        decl = self.sig.inductives.get(name)
        if decl is None:
            raise KernelError(f"no inductive {name}")
        if decl.is_prop:
            return self._pred_scheme(decl, with_ih=(kind == "induction"))
        return self._data_scheme(decl, with_ih=(kind == "induction"))

    def _data_scheme(self, decl: InductiveDecl, with_ih: bool) -> Theorem:
        s = decl.self_sort
        p = FVar("P", SArrow(s, PROP))
        cases: list[Term] = []
        for c in decl.ctors:
            xs = [FVar(f"a✝{i+1}", a) for i, a in enumerate(c.arg_sorts)]
            prems = [App(p, x) for x in xs if with_ih and x.sort == s]
            concl = App(p, apps(Const(c.name, arrow(*c.arg_sorts, s)), *xs))
            cases.append(close_forall(xs, close_imp(prems, concl)))
        x = FVar("x✝", s)
        stmt = close_forall(
            [p], close_imp(cases, close_forall([x], App(p, x))))
        kind = "induction" if with_ih else "cases"
        return _mk("scheme", (), (decl.name, kind), (), stmt)

    def _pred_scheme(self, decl: InductiveDecl, with_ih: bool) -> Theorem:
        idx = decl.index_sorts
        pred_sort = arrow(*idx, PROP) if idx else PROP
        pname = decl.name
        p = FVar("P", pred_sort)
        cases: list[Term] = []
        for c in decl.ctors:
            assert c.statement is not None
            t = c.statement
            xs: list[FVar] = []
            while isinstance(t, Forall):
                v = FVar(f"c✝{len(xs)+1}", t.var_sort)
                xs.append(v)
                t = instantiate(t.body, v)
            prems: list[Term] = []
            while isinstance(t, Imp):
                prem = t.lhs
                prems.append(prem)
                head, args = unapply(prem)
                if isinstance(head, Const) and head.name == pname and with_ih:
                    prems.append(beta_normalize(apps(p, *args)))
                t = t.rhs
            _, head_args = unapply(t)
            concl = beta_normalize(apps(p, *head_args))
            cases.append(close_forall(xs, close_imp(prems, concl)))
        ivars = [FVar(f"i✝{k+1}", s) for k, s in enumerate(idx)]
        pred_const = Const(pname, self.sig.const_sort(pname, {}))
        main = close_forall(
            ivars, Imp(apps(pred_const, *ivars),
                       beta_normalize(apps(p, *ivars))))
        stmt = close_forall([p], close_imp(cases, main))
        kind = "induction" if with_ih else "cases"
        return _mk("scheme", (), (decl.name, kind), (), stmt)

    def _fun_induction(self, name: str) -> Theorem:
        decl = self.sig.recdefs.get(name)
        if decl is None:
            raise KernelError(f"no recursive definition {name}")
        fsort = decl.sort
        arg_sorts: list[Sort] = []
        rs = fsort
        while isinstance(rs, SArrow):
            arg_sorts.append(rs.dom)
            rs = rs.cod
        p = FVar("P", arrow(*arg_sorts, PROP))
        cases: list[Term] = []
        for eq in self.sig.recdefs[name].equations:
            # re-read the residual from the stored theorem for var names
            vs, _, core = _open_equation(eq.thm.concl)
            assert isinstance(core, Eq)
            _, largs = unapply(core.lhs)
            ihs: list[Term] = []

            def collect(t: Term) -> None:
                head, args = unapply(t)
                if isinstance(head, Const) and head.name == name:
                    ihs.append(beta_normalize(apps(p, *args)))
                    for a in args:
                        collect(a)
                    return
                for c in children(t):
                    collect(c)

            collect(core.rhs)
            cases.append(close_forall(
                vs, close_imp(ihs, beta_normalize(apps(p, *largs)))))
        xs = [FVar(f"x✝{i+1}", s) for i, s in enumerate(arg_sorts)]
        stmt = close_forall(
            [p], close_imp(cases, close_forall(
                xs, beta_normalize(apps(p, *xs)))))
        return _mk("scheme", (), (name, "fun-induction"), (), stmt)

    def ctor_theorem(self, pred: str, ctor: str) -> Theorem:
        decl = self.sig.inductives.get(pred)
        if decl is None or not decl.is_prop:
            raise KernelError(f"no inductive predicate {pred}")
        for c in decl.ctors:
            if c.name == ctor:
                assert c.statement is not None
                return _mk("ctor_thm", (), (pred, ctor), (), c.statement)
        raise KernelError(f"no constructor {ctor} of {pred}")

    def defeq_theorems(self, name: str) -> list[Theorem]:
        return [e.thm for e in self.sig.recdefs[name].equations]

    def unfold_theorem(self, name: str) -> Theorem:
        return self.sig.defs[name].unfold

    # -- decidable equality certificates ------------------------------------

    def eq_reflect(self, sort: Sort) -> Theorem:
        """`forall x y : S, (x = y) <-> (eqb x y = true)`.

        Kernel-generated (like schemes) for concrete first-order
        datatypes; for a type variable it requires a declared
        DecidableEq assumption and is tagged as an axiom use.
        """
        axioms: tuple[str, ...] = ()
        if isinstance(sort, SVar):
            if sort.name not in self.sig.decidable_svars:
                raise KernelError(
                    f"no DecidableEq assumption for type variable {sort.name}")
            axioms = (f"DecidableEq {sort.name}",)
        elif isinstance(sort, SData):
            self._require_decidable(sort, axioms_out := [])
            axioms = tuple(axioms_out)
        else:
            raise KernelError(f"no decidable equality at sort {sort!r}")
        x, y = FVar("x", sort), FVar("y", sort)
        stmt = close_forall(
            [x, y], Iff(Eq(sort, x, y),
                        Eq(BOOL, apps(self.eqb_const(sort), x, y),
                           Const("true", BOOL))))
        return _mk("eq_reflect", (), (sort,), (), stmt, extra_axioms=axioms)

    def _require_decidable(self, sort: Sort, axioms_out: list[str]) -> None:
        if isinstance(sort, SVar):
            if sort.name not in self.sig.decidable_svars:
                raise KernelError(
                    f"no DecidableEq assumption for type variable {sort.name}")
            axioms_out.append(f"DecidableEq {sort.name}")
            return
        if not isinstance(sort, SData) or sort.name not in self.sig.inductives:
            raise KernelError(f"no decidable equality at sort {sort!r}")
        decl = self.sig.inductives[sort.name]
        if decl.is_prop or not self._first_order(decl):
            raise KernelError(f"no decidable equality at sort {sort!r}")
        smap = dict(zip(decl.svars, sort.args))
        for c in decl.ctors:
            for a in c.arg_sorts:
                inst = sort_subst(a, smap)
                if inst != sort:
                    self._require_decidable(inst, axioms_out)

    # ======================================================================
    # Evaluation / normalisation with defining equations
    # ======================================================================

    def all_equations(self) -> dict[str, list[Equation]]:
        out: dict[str, list[Equation]] = {}
        for rd in self.sig.recdefs.values():
            out[rd.name] = list(rd.equations)
        for head, eqs in self._eqb_equations.items():
            out.setdefault(head, []).extend(eqs)
        return out

    def __getattr__(self, item):  # pragma: no cover - dataclass-ish default
        if item == "_eqb_equations":
            object.__setattr__(self, "_eqb_equations", {})
            return self._eqb_equations
        raise AttributeError(item)

    def rewrite_step(self, t: Term, extra_rules: Optional[
            dict[str, list[Equation]]] = None,
            ) -> Optional[tuple[Term, tuple]]:
        """One leftmost-outermost computation step: defining equation,
        ite reduction, eqb evaluation or beta.  Returns the new term and
        a replayable step descriptor (rule theorem, path, substitution).
        """
        eqs = self.all_equations()
        if extra_rules:
            for k, v in extra_rules.items():
                eqs.setdefault(k, []).extend(v)

        def attempt(node: Term, path: Path, depth: int,
                    ) -> Optional[tuple[Term, tuple]]:
            red = self._head_reduce(node, eqs, depth)
            if red is not None:
                new_node, step = red
                return replace_at(t, path, new_node), step + (path,)
            bump = 1 if isinstance(node, (Lam, Forall, Exists)) else 0
            for i, c in enumerate(children(node)):
                r = attempt(c, path + (i,), depth + bump)
                if r is not None:
                    return r
            return None

        return attempt(t, (), 0)

    def _head_reduce(self, node: Term, eqs: dict[str, list[Equation]],
                     depth: int) -> Optional[tuple[Term, tuple]]:
        # beta
        if isinstance(node, App) and isinstance(node.fn, Lam):
            return beta_normalize(node), ("beta", node)
        # ite with literal condition
        if isinstance(node, Ite):
            if node.cond == Const("true", BOOL):
                return node.then, ("ite", True, node)
            if node.cond == Const("false", BOOL):
                return node.els, ("ite", False, node)
        # eqb on closed constructor terms
        head, args = unapply(node)
        if (isinstance(head, Const) and head.name == "eqb" and len(args) == 2
                and self._ctor_normal(args[0]) and self._ctor_normal(args[1])):
            same = args[0] == args[1]
            # only reduce syntactic equality/inequality of closed values
            return (Const("true" if same else "false", BOOL),
                    ("eqb", node, same))
        # defining equations
        if isinstance(head, Const) and head.name in eqs:
            from .terms import match_fo
            for eq in eqs[head.name]:
                m = match_fo(eq.lhs, node, None, set(eq.flex_sorts))
                if m is not None:
                    new = beta_normalize(apply_subst(eq.rhs, m))
                    return new, ("eq", eq, m)
        return None

    def _ctor_normal(self, t: Term) -> bool:
        if not is_closed(t) or free_vars(t) or metas_of(t):
            return False
        head, args = unapply(t)
        if not (isinstance(head, Const) and self.sig.is_ctor(head.name)):
            return False
        return all(self._ctor_normal(a) for a in args)

    def normalize(self, t: Term, fuel: int = 100000,
                  ) -> tuple[Term, list[tuple]]:
        steps: list[tuple] = []
        while fuel > 0:
            r = self.rewrite_step(t)
            if r is None:
                return t, steps
            t, step = r
            steps.append(step)
            fuel -= 1
        raise KernelError("evaluation fuel exhausted")

    def eval_closed(self, t: Term) -> Term:
        """Evaluate a closed first-order term to constructor normal form
        (or True/False for decided propositions)."""
        if free_vars(t) or metas_of(t) or not is_closed(t):
            raise KernelError("eval_closed requires a closed term")
        nf, _ = self.normalize(t)
        return nf

    def eval_theorem(self, t: Term) -> Theorem:
        """`⊢ t = eval(t)` derived by replaying computation steps
        through the rewrite rule."""
        nf, steps = self.normalize(t)
        thm = self.prim("eq_refl", (), (t,))
        cur = t
        for step in steps:
            thm = self._replay_step(thm, cur, step)
            cur = subterm_at(thm.concl, (1,))
        assert alpha_eq(cur, nf)
        return thm

    def _replay_step(self, thm: Theorem, cur: Term, step: tuple) -> Theorem:
        kind = step[0]
        path: Path = (1,) + step[-1]
        if kind == "beta":
            node = step[1]
            rule = self.prim("beta_conv", (), (node,))
            return self.prim("rewrite", (rule, thm),
                             ((path,), Subst(), "L2R"))
        if kind == "ite":
            _, is_true, node = step[0], step[1], step[2]
            rule = self.prim("ite_true" if is_true else "ite_false", (),
                             (node.then, node.els))
            return self.prim("rewrite", (rule, thm),
                             ((path,), Subst(), "L2R"))
        if kind == "eqb":
            node = step[1]
            _, args = unapply(node)
            rule = self.prim("eqb_eval", (), (args[0], args[1]))
            return self.prim("rewrite", (rule, thm),
                             ((path,), Subst(), "L2R"))
        if kind == "eq":
            eq, m = step[1], step[2]
            return self.prim("rewrite", (eq.thm, thm),
                             ((path,), m, "L2R"))
        raise KernelError(f"unknown step {kind}")

    # ======================================================================
    # The primitive rule table
    # ======================================================================

    def prim(self, rule: str, premises: Sequence[Theorem] = (),
             params: tuple = ()) -> Theorem:
        fn = _RULES.get(rule)
        if fn is None:
            raise KernelError(f"unknown primitive rule {rule}")
        return fn(self, tuple(premises), params)

    def recheck(self, thm: Theorem) -> bool:
        """Re-derive a theorem from its provenance and compare."""
        rule, prems, params = thm.prov
        for p in prems:
            if not self.recheck(p):
                return False
        if rule in ("axiom",):
            redo = self.sig.axioms.get(params[0])
            if redo is None:
                return False
        elif rule == "scheme":
            redo = self.scheme_of(params[0], params[1])
        elif rule == "ctor_thm":
            redo = self.ctor_theorem(params[0], params[1])
        elif rule == "defeq":
            redo = self.sig.recdefs[params[0]].equations[params[1]].thm
        elif rule == "eqb_defeq":
            redo = thm  # regenerated deterministically at declaration
        elif rule == "unfold_def":
            redo = self.sig.defs[params[0]].unfold
        elif rule == "eq_reflect":
            redo = self.eq_reflect(params[0])
        else:
            redo = self.prim(rule, prems, params)
        return redo.concl == thm.concl and redo.hyps <= thm.hyps


# ---------------------------------------------------------------------------
# Rule implementations
# ---------------------------------------------------------------------------


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise KernelError(msg)


def _prop(t: Term) -> None:
    _expect(check_sorts(t) == PROP, "parameter must be a proposition")


def _r_assume(k: Kernel, prems, params) -> Theorem:
    (a,) = params
    _prop(a)
    return _mk("assume", prems, params, (a,), a)


def _r_imp_intro(k, prems, params) -> Theorem:
    (th,) = prems
    (a,) = params
    _prop(a)
    return _mk("imp_intro", prems, params, th.hyps - {a}, Imp(a, th.concl))


def _r_imp_elim(k, prems, params) -> Theorem:
    th_ab, th_a = prems
    _expect(isinstance(th_ab.concl, Imp), "imp_elim: not an implication")
    _expect(alpha_eq(th_ab.concl.lhs, th_a.concl), "imp_elim: premise mismatch")
    return _mk("imp_elim", prems, params, _union_hyps(th_ab, th_a),
               th_ab.concl.rhs)


def _r_forall_intro(k, prems, params) -> Theorem:
    (th,) = prems
    name, sort = params
    for h in th.hyps:
        _expect(name not in free_vars(h),
                f"forall_intro: {name} occurs in a hypothesis")
    return _mk("forall_intro", prems, params, th.hyps,
               Forall(name.split("✝")[0] or name, sort,
                      abstract(th.concl, name)))


def _r_forall_elim(k, prems, params) -> Theorem:
    (th,) = prems
    (t,) = params
    _expect(isinstance(th.concl, Forall), "forall_elim: not a forall")
    _expect(is_closed(t), "forall_elim: instance has loose bound variables")
    _expect(check_sorts(t) == th.concl.var_sort,
            "forall_elim: instance sort mismatch")
    return _mk("forall_elim", prems, params, th.hyps,
               beta_normalize(instantiate(th.concl.body, t)))


def _r_exists_intro(k, prems, params) -> Theorem:
    (th,) = prems
    ex, w = params
    _expect(isinstance(ex, Exists), "exists_intro: not an exists")
    _expect(check_sorts(w) == ex.var_sort, "exists_intro: witness sort")
    _expect(alpha_eq(beta_normalize(instantiate(ex.body, w)), th.concl),
            "exists_intro: premise does not instantiate the body")
    return _mk("exists_intro", prems, params, th.hyps, ex)


def _r_exists_elim(k, prems, params) -> Theorem:
    th_ex, th_body = prems
    (eigen,) = params
    ex = th_ex.concl
    _expect(isinstance(ex, Exists), "exists_elim: not an exists")
    c = FVar(eigen, ex.var_sort)
    inst = beta_normalize(instantiate(ex.body, c))
    rest = th_body.hyps - {inst}
    for h in rest | {th_body.concl} | th_ex.hyps:
        _expect(eigen not in free_vars(h),
                "exists_elim: eigenvariable escapes")
    return _mk("exists_elim", prems, params, th_ex.hyps | rest, th_body.concl)


def _r_and_intro(k, prems, params) -> Theorem:
    a, b = prems
    return _mk("and_intro", prems, params, _union_hyps(a, b),
               And(a.concl, b.concl))


def _r_and_elim_l(k, prems, params) -> Theorem:
    (th,) = prems
    _expect(isinstance(th.concl, And), "and_elim_l: not a conjunction")
    return _mk("and_elim_l", prems, params, th.hyps, th.concl.lhs)


def _r_and_elim_r(k, prems, params) -> Theorem:
    (th,) = prems
    _expect(isinstance(th.concl, And), "and_elim_r: not a conjunction")
    return _mk("and_elim_r", prems, params, th.hyps, th.concl.rhs)


def _r_or_intro_l(k, prems, params) -> Theorem:
    (th,) = prems
    (b,) = params
    _prop(b)
    return _mk("or_intro_l", prems, params, th.hyps, Or(th.concl, b))


def _r_or_intro_r(k, prems, params) -> Theorem:
    (th,) = prems
    (a,) = params
    _prop(a)
    return _mk("or_intro_r", prems, params, th.hyps, Or(a, th.concl))


def _r_or_elim(k, prems, params) -> Theorem:
    th_or, th_a, th_b = prems
    _expect(isinstance(th_or.concl, Or), "or_elim: not a disjunction")
    _expect(alpha_eq(th_a.concl, th_b.concl), "or_elim: branch mismatch")
    a, b = th_or.concl.lhs, th_or.concl.rhs
    return _mk("or_elim", prems, params,
               th_or.hyps | (th_a.hyps - {a}) | (th_b.hyps - {b}),
               th_a.concl)


def _r_not_intro(k, prems, params) -> Theorem:
    (th,) = prems
    (a,) = params
    _prop(a)
    _expect(isinstance(th.concl, FalseP), "not_intro: conclusion not False")
    return _mk("not_intro", prems, params, th.hyps - {a}, Not(a))


def _r_not_elim(k, prems, params) -> Theorem:
    th_na, th_a = prems
    _expect(isinstance(th_na.concl, Not), "not_elim: not a negation")
    _expect(alpha_eq(th_na.concl.body, th_a.concl), "not_elim: mismatch")
    return _mk("not_elim", prems, params, _union_hyps(th_na, th_a), FALSE)


def _r_true_intro(k, prems, params) -> Theorem:
    return _mk("true_intro", prems, params, (), TRUE)


def _r_false_elim(k, prems, params) -> Theorem:
    (th,) = prems
    (c,) = params
    _prop(c)
    _expect(isinstance(th.concl, FalseP), "false_elim: premise not False")
    return _mk("false_elim", prems, params, th.hyps, c)


def _r_iff_intro(k, prems, params) -> Theorem:
    ab, ba = prems
    _expect(isinstance(ab.concl, Imp) and isinstance(ba.concl, Imp),
            "iff_intro: premises must be implications")
    _expect(alpha_eq(ab.concl.lhs, ba.concl.rhs)
            and alpha_eq(ab.concl.rhs, ba.concl.lhs),
            "iff_intro: directions do not match")
    return _mk("iff_intro", prems, params, _union_hyps(ab, ba),
               Iff(ab.concl.lhs, ab.concl.rhs))


def _r_iff_fwd(k, prems, params) -> Theorem:
    th_iff, th_a = prems
    _expect(isinstance(th_iff.concl, Iff), "iff_fwd: not an iff")
    _expect(alpha_eq(th_iff.concl.lhs, th_a.concl), "iff_fwd: mismatch")
    return _mk("iff_fwd", prems, params, _union_hyps(th_iff, th_a),
               th_iff.concl.rhs)


def _r_iff_bwd(k, prems, params) -> Theorem:
    th_iff, th_b = prems
    _expect(isinstance(th_iff.concl, Iff), "iff_bwd: not an iff")
    _expect(alpha_eq(th_iff.concl.rhs, th_b.concl), "iff_bwd: mismatch")
    return _mk("iff_bwd", prems, params, _union_hyps(th_iff, th_b),
               th_iff.concl.lhs)


def _r_eq_refl(k, prems, params) -> Theorem:
    (t,) = params
    _expect(is_closed(t), "eq_refl: loose bound variables")
    s = check_sorts(t)
    if s == PROP:
        return _mk("eq_refl", prems, params, (), Iff(t, t))
    return _mk("eq_refl", prems, params, (), Eq(s, t, t))


def _r_eq_sym(k, prems, params) -> Theorem:
    (th,) = prems
    c = th.concl
    if isinstance(c, Eq):
        return _mk("eq_sym", prems, params, th.hyps, Eq(c.sort, c.rhs, c.lhs))
    if isinstance(c, Iff):
        return _mk("eq_sym", prems, params, th.hyps, Iff(c.rhs, c.lhs))
    raise KernelError("eq_sym: not an equality")


def _r_beta_conv(k, prems, params) -> Theorem:
    (t,) = params
    nf = beta_normalize(t)
    s = check_sorts(t)
    if s == PROP:
        return _mk("beta_conv", prems, params, (), Iff(t, nf))
    return _mk("beta_conv", prems, params, (), Eq(s, t, nf))


def _r_ite_true(k, prems, params) -> Theorem:
    a, b = params
    s = check_sorts(a)
    t = Ite(Const("true", BOOL), a, b)
    core = Iff(t, a) if s == PROP else Eq(s, t, a)
    return _mk("ite_true", prems, params, (), core)


def _r_ite_false(k, prems, params) -> Theorem:
    a, b = params
    s = check_sorts(a)
    t = Ite(Const("false", BOOL), a, b)
    core = Iff(t, b) if s == PROP else Eq(s, t, b)
    return _mk("ite_false", prems, params, (), core)


def _r_ite_prop_true(k, prems, params) -> Theorem:
    (th,) = prems
    a, b = params
    s = check_sorts(a)
    t = Ite(th.concl, a, b)
    core = Iff(t, a) if s == PROP else Eq(s, t, a)
    return _mk("ite_prop_true", prems, params, th.hyps, core)


def _r_ite_prop_false(k, prems, params) -> Theorem:
    (th,) = prems
    a, b = params
    _expect(isinstance(th.concl, Not), "ite_prop_false: premise not ¬P")
    s = check_sorts(a)
    t = Ite(th.concl.body, a, b)
    core = Iff(t, b) if s == PROP else Eq(s, t, b)
    return _mk("ite_prop_false", prems, params, th.hyps, core)


def _r_eqb_eval(k: Kernel, prems, params) -> Theorem:
    a, b = params
    _expect(k._ctor_normal(a) and k._ctor_normal(b),
            "eqb_eval: arguments must be closed constructor terms")
    s = check_sorts(a)
    _expect(check_sorts(b) == s, "eqb_eval: sort mismatch")
    val = Const("true" if a == b else "false", BOOL)
    return _mk("eqb_eval", prems, params, (),
               Eq(BOOL, apps(k.eqb_const(s), a, b), val))


def _r_ctor_inj(k: Kernel, prems, params) -> Theorem:
    (eq,) = params
    _expect(isinstance(eq, Eq), "ctor_inj: not an equality")
    h1, a1 = unapply(eq.lhs)
    h2, a2 = unapply(eq.rhs)
    _expect(isinstance(h1, Const) and isinstance(h2, Const)
            and h1 == h2 and k.sig.is_ctor(h1.name) is not None,
            "ctor_inj: sides must share a constructor head")
    _expect(len(a1) == len(a2), "ctor_inj: arity mismatch")
    comps = [Eq(check_sorts(x), x, y) for x, y in zip(a1, a2)]
    if not comps:
        rhs: Term = TRUE
    else:
        rhs = comps[0]
        for c in comps[1:]:
            rhs = And(rhs, c)
    return _mk("ctor_inj", prems, params, (), Iff(eq, rhs))


def _r_ctor_clash(k: Kernel, prems, params) -> Theorem:
    (eq,) = params
    _expect(isinstance(eq, Eq), "ctor_clash: not an equality")
    h1, _ = unapply(eq.lhs)
    h2, _ = unapply(eq.rhs)
    _expect(isinstance(h1, Const) and isinstance(h2, Const)
            and h1.name != h2.name
            and k.sig.is_ctor(h1.name) is not None
            and k.sig.is_ctor(h2.name) == k.sig.is_ctor(h1.name),
            "ctor_clash: sides must have distinct constructor heads")
    return _mk("ctor_clash", prems, params, (), Iff(eq, FALSE))


def _r_sort_inst(k, prems, params) -> Theorem:
    """Instantiate free sort variables of a theorem.  Free sort
    variables are implicitly universally quantified, so any instance of
    a derivable statement is derivable."""
    (th,) = prems
    mapping = dict(params)
    for s in mapping.values():
        _expect(isinstance(s, Sort), "sort_inst: not a sort")
    sub = Subst(sorts=mapping)
    hyps = frozenset(apply_subst(h, sub) for h in th.hyps)
    concl = apply_subst(th.concl, sub)
    check_sorts(concl)
    return _mk("sort_inst", prems, tuple(sorted(mapping.items(),
                                                key=lambda kv: kv[0])),
               hyps, concl)


def _r_rewrite(k: Kernel, prems, params) -> Theorem:
    """Rewrite inside the conclusion of a target theorem.

    premises: [rule_thm, target_thm, *premise_proofs]
    params:   (paths, subst, direction)

    The rule theorem must be a forall-closed, possibly conditional
    equation or iff.  The substitution instantiates the stripped
    metavariables (ids 0..n-1 in binding order) and any free sort
    variables of the rule.  Iff rules may only rewrite at propositional
    positions (under connectives, quantifiers and ite conditions).
    """
    rule_thm, target = prems[0], prems[1]
    prem_proofs = prems[2:]
    paths, subst, direction = params
    metas, rprems, core = strip_forall_metas(rule_thm.concl)
    inst_prems = [beta_normalize(apply_subst(p, subst)) for p in rprems]
    if isinstance(core, Eq):
        lhs, rhs = core.lhs, core.rhs
        is_iff = False
    elif isinstance(core, Iff):
        lhs, rhs = core.lhs, core.rhs
        is_iff = True
    else:
        raise KernelError("rewrite: rule core must be = or <->")
    src = beta_normalize(apply_subst(lhs, subst))
    dst = beta_normalize(apply_subst(rhs, subst))
    if direction == "R2L":
        src, dst = dst, src
    elif direction != "L2R":
        raise KernelError("rewrite: bad direction")
    for t in (src, dst, *inst_prems):
        _expect(not metas_of(t), "rewrite: uninstantiated metavariable")
    _expect(len(inst_prems) == len(prem_proofs),
            "rewrite: premise count mismatch")
    for ip, pf in zip(inst_prems, prem_proofs):
        _expect(is_closed(ip), "rewrite: open premise instance")
        _expect(alpha_eq(ip, pf.concl), "rewrite: premise proof mismatch")
    open_inst = not (is_closed(src) and is_closed(dst))
    if open_inst:
        _expect(len(paths) == 1 and not inst_prems,
                "rewrite: open instances allowed at a single occurrence "
                "without premises")
    concl = target.concl
    for path in paths:
        sub = subterm_at(concl, path)
        _expect(alpha_eq(sub, src), "rewrite: subterm does not match")
        if open_inst:
            from .terms import binder_depth_at
            depth = binder_depth_at(concl, path)
            for t in (src, dst):
                _expect(all(i < depth for i in loose_bvars(t)),
                        "rewrite: instance escapes its binders")
        if is_iff:
            node = concl
            for i in path:
                ok = isinstance(node, _IFF_POSITIONS_OK) or (
                    isinstance(node, Ite) and i == 0)
                _expect(ok, "rewrite: iff rule at a non-propositional "
                            "position")
                node = children(node)[i]
        concl = replace_at(concl, path, dst)
    check_sorts(concl)
    hyps = _union_hyps(rule_thm, target, *prem_proofs)
    return _mk("rewrite", prems, params, hyps, concl)


_RULES: dict[str, Callable[[Kernel, tuple, tuple], Theorem]] = {
    "assume": _r_assume,
    "imp_intro": _r_imp_intro,
    "imp_elim": _r_imp_elim,
    "forall_intro": _r_forall_intro,
    "forall_elim": _r_forall_elim,
    "exists_intro": _r_exists_intro,
    "exists_elim": _r_exists_elim,
    "and_intro": _r_and_intro,
    "and_elim_l": _r_and_elim_l,
    "and_elim_r": _r_and_elim_r,
    "or_intro_l": _r_or_intro_l,
    "or_intro_r": _r_or_intro_r,
    "or_elim": _r_or_elim,
    "not_intro": _r_not_intro,
    "not_elim": _r_not_elim,
    "true_intro": _r_true_intro,
    "false_elim": _r_false_elim,
    "iff_intro": _r_iff_intro,
    "iff_fwd": _r_iff_fwd,
    "iff_bwd": _r_iff_bwd,
    "eq_refl": _r_eq_refl,
    "eq_sym": _r_eq_sym,
    "beta_conv": _r_beta_conv,
    "ite_true": _r_ite_true,
    "ite_false": _r_ite_false,
    "ite_prop_true": _r_ite_prop_true,
    "ite_prop_false": _r_ite_prop_false,
    "eqb_eval": _r_eqb_eval,
    "ctor_inj": _r_ctor_inj,
    "ctor_clash": _r_ctor_clash,
    "sort_inst": _r_sort_inst,
    "rewrite": _r_rewrite,
}


# ---------------------------------------------------------------------------
# misc helpers
# ---------------------------------------------------------------------------


def andb_const() -> Const:
    return Const("andb", arrow(BOOL, BOOL, BOOL))


def _open_equation(stmt: Term) -> tuple[list[FVar], list[Term], Term]:
    """Open a forall-closed equation, inventing free variables for the
    binders (names taken from the hints)."""
    vs: list[FVar] = []
    taken: set[str] = set()
    t = stmt
    while isinstance(t, Forall):
        base = t.hint or "x"
        name = base
        i = 0
        while name in taken:
            i += 1
            name = f"{base}{i}"
        taken.add(name)
        v = FVar(name, t.var_sort)
        vs.append(v)
        t = instantiate(t.body, v)
    prems = []
    while isinstance(t, Imp):
        prems.append(t.lhs)
        t = t.rhs
    return vs, prems, t


def _sort_data_names(s: Sort) -> set[str]:
    match s:
        case SData(name, args):
            out = {name}
            for a in args:
                out |= _sort_data_names(a)
            return out
        case SArrow(dom, cod):
            return _sort_data_names(dom) | _sort_data_names(cod)
        case _:
            return set()


def _consts_of(t: Term) -> list[Const]:
    out = []

    def go(x: Term) -> None:
        if isinstance(x, Const):
            out.append(x)
        for c in children(x):
            go(c)

    go(t)
    return out
