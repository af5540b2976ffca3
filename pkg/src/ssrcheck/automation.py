"""Goal simplification and the trivial-goal closer.

Everything here is untrusted search: each simplification is recorded as
a sequence of rewrite steps and replayed through the kernel, and the
closer produces ordinary kernel theorems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .kernel import (Equation, Kernel, KernelError, Theorem,
                     strip_forall_metas)
from .proofstate import CtxHyp, CtxVar, Goal, ProofError, Validation, \
    intro_hyp, intro_var
from .terms import (FALSE, PROP, TRUE, And, App, BVar, Const, Eq, Exists,
                    FalseP, Forall, FVar, Iff, Imp, Ite, Lam, Meta, Not, Or,
                    Path, Sort, SortError, Subst, SVar, Term, TrueP,
                    UnifyError, alpha_eq, apply_subst, apps, beta_normalize,
                    check_sorts, children, find_occurrences, free_vars,
                    instantiate,
                    is_closed, loose_bvars, match_fo, metas_of, sort_of,
                    unapply, unify)


class AutomationError(Exception):
    pass


# ---------------------------------------------------------------------------
# Rewrite rules
# ---------------------------------------------------------------------------


RuleKey = tuple


def head_key(t: Term) -> RuleKey:
    head, _ = unapply(t)
    match head:
        case Const(name, _):
            return ("const", name)
        case FVar(name, _):
            return ("fvar", name)
        case _:
            return ("node", type(t).__name__)


@dataclass
class SimpRule:
    """A left-to-right rewrite rule prepared for matching: the statement
    is stripped of its quantifier prefix, pattern variables become
    metavariables, and leading implications become side conditions."""

    name: str
    thm: Theorem
    lhs: Term
    rhs: Term
    prems: tuple[Term, ...]
    flex_sorts: frozenset[str]
    is_iff: bool
    # defining equation of a [simp]-tagged definition: also usable by the
    # structural simplifier (`/=`), which otherwise ignores tagged rules
    structural: bool = False

    @property
    def key(self) -> RuleKey:
        return head_key(self.lhs)


def rule_of_theorem(name: str, thm: Theorem,
                    flex_sorts: frozenset[str] = frozenset(),
                    reverse: bool = False) -> SimpRule:
    metas, prems, core = strip_forall_metas(thm.concl)
    if isinstance(core, Eq):
        lhs, rhs, is_iff = core.lhs, core.rhs, False
    elif isinstance(core, Iff):
        lhs, rhs, is_iff = core.lhs, core.rhs, True
    else:
        raise AutomationError(f"{name}: not an equation")
    if reverse:
        lhs, rhs = rhs, lhs
    if isinstance(lhs, Meta):
        raise AutomationError(f"{name}: left-hand side is a bare variable")
    need = set(metas_of(rhs)) | {m for p in prems for m in metas_of(p)}
    if not need <= set(metas_of(lhs)):
        raise AutomationError(
            f"{name}: right-hand side has variables the left cannot bind")
    return SimpRule(name, thm, lhs, rhs, tuple(prems), flex_sorts, is_iff)


def _would_loop(rule: SimpRule) -> bool:
    flex = set(rule.flex_sorts) if rule.flex_sorts else set()
    return bool(find_occurrences(rule.lhs, rule.rhs, flex))


class SimpSet:
    """An ordered collection of rewrite rules indexed by head symbol."""

    def __init__(self) -> None:
        self._by_key: dict[RuleKey, list[SimpRule]] = {}
        self._names: set[str] = set()

    def add(self, rule: SimpRule, strict: bool = True) -> bool:
        if _would_loop(rule):
            if strict:
                raise AutomationError(
                    f"{rule.name}: rewriting would not terminate "
                    "(the left-hand side matches inside the right)")
            return False
        self._by_key.setdefault(rule.key, []).append(rule)
        self._names.add(rule.name)
        return True

    def remove(self, name: str) -> None:
        for rules in self._by_key.values():
            rules[:] = [r for r in rules if r.name != name]
        self._names.discard(name)

    def __contains__(self, name: str) -> bool:
        return name in self._names

    def lookup(self, t: Term) -> list[SimpRule]:
        return self._by_key.get(head_key(t), [])

    def copy(self) -> "SimpSet":
        out = SimpSet()
        out._by_key = {k: list(v) for k, v in self._by_key.items()}
        out._names = set(self._names)
        return out


# ---------------------------------------------------------------------------
# Opening a subterm's binder frame
# ---------------------------------------------------------------------------


def _frame(kernel: Kernel, t: Term, bsorts: Sequence[Sort],
           ) -> tuple[Term, Subst]:
    """Replace the loose bound variables of ``t`` (which refer to binders
    above it) with fresh free variables.  Returns the framed term and the
    substitution mapping the fresh variables back to the bound ones."""
    loose = sorted(loose_bvars(t))
    if not loose:
        return t, Subst()
    fvs = {i: kernel.fresh_fvar("u", bsorts[i]) for i in loose}

    def go(x: Term, depth: int) -> Term:
        match x:
            case BVar(i) if i >= depth:
                return fvs[i - depth]
            case Lam(_, _, _) | Forall(_, _, _) | Exists(_, _, _):
                (body,) = children(x)
                from .terms import with_children
                return with_children(x, (go(body, depth + 1),))
            case _:
                kids = children(x)
                if not kids:
                    return x
                from .terms import with_children
                return with_children(
                    x, tuple(go(c, depth) for c in kids))

    back = Subst(fvars={fv.name: BVar(i) for i, fv in fvs.items()})
    return go(t, 0), back


# ---------------------------------------------------------------------------
# Step search
# ---------------------------------------------------------------------------


@dataclass
class RwStep:
    """One kernel-replayable rewrite: apply ``rule_thm`` under ``subst``
    at ``path`` (left to right), discharging side conditions with the
    given proofs."""

    rule_thm: Theorem
    path: Path
    subst: Subst
    prem_proofs: tuple[Theorem, ...]
    new_sub: Term


Prover = Callable[[Term], Optional[Theorem]]


def _try_rule(kernel: Kernel, rule: SimpRule, node: Term, path: Path,
              bsorts: list[Sort], at_prop: bool,
              prover: Optional[Prover]) -> Optional[RwStep]:
    if rule.is_iff and not at_prop:
        return None
    m = match_fo(rule.lhs, node, None, set(rule.flex_sorts))
    if m is None:
        return None
    try:
        dst = beta_normalize(apply_subst(rule.rhs, m))
        if metas_of(dst):
            return None
        if alpha_eq(dst, node):
            return None
        check_sorts(dst, list(bsorts))
        inst_prems = [beta_normalize(apply_subst(p, m)) for p in rule.prems]
    except (SortError, KernelError):
        return None
    open_inst = not (is_closed(node) and is_closed(dst))
    if inst_prems and (open_inst or prover is None):
        return None
    proofs: list[Theorem] = []
    for p in inst_prems:
        if metas_of(p) or not is_closed(p):
            return None
        pf = prover(p)
        if pf is None:
            return None
        proofs.append(pf)
    return RwStep(rule.thm, path, m, tuple(proofs), dst)


def _eq_rule_thm(kernel: Kernel, rule: str, params: tuple) -> Theorem:
    return kernel.prim(rule, (), params)


def _computation_step(kernel: Kernel, node: Term, path: Path,
                      bsorts: list[Sort], at_prop: bool,
                      full: bool) -> Optional[RwStep]:
    """Kernel-computation rules that depend on the node's shape: beta
    reduction, if-then-else on literal conditions, decidable equality on
    constructor values, and (in full mode) constructor injectivity and
    disjointness."""
    from .terms import BOOL
    if isinstance(node, App) and isinstance(node.fn, Lam):
        framed, back = _frame(kernel, node, bsorts)
        thm = _eq_rule_thm(kernel, "beta_conv", (framed,))
    elif isinstance(node, Ite) and node.cond == Const("true", BOOL):
        framed, back = _frame(kernel, node, bsorts)
        assert isinstance(framed, Ite)
        thm = _eq_rule_thm(kernel, "ite_true", (framed.then, framed.els))
    elif isinstance(node, Ite) and node.cond == Const("false", BOOL):
        framed, back = _frame(kernel, node, bsorts)
        assert isinstance(framed, Ite)
        thm = _eq_rule_thm(kernel, "ite_false", (framed.then, framed.els))
    else:
        fn, args = unapply(node)
        if (isinstance(fn, Const) and fn.name == "eqb" and len(args) == 2
                and kernel._ctor_normal(args[0])
                and kernel._ctor_normal(args[1])):
            thm = _eq_rule_thm(kernel, "eqb_eval", (args[0], args[1]))
            back = Subst()
        elif (isinstance(fn, Const) and args
              and (fn.name in kernel.sig.recdefs
                   or fn.name in kernel.sig.defs)
              and is_closed(node) and not metas_of(node)
              and not free_vars(node)):
            # a closed applied definition evaluates outright
            try:
                nsort = check_sorts(node)
            except SortError:
                return None
            from .terms import SArrow
            if isinstance(nsort, SArrow) or nsort == PROP:
                return None
            try:
                thm = kernel.eval_theorem(node)
            except KernelError:
                return None
            back = Subst()
        elif (full and at_prop and isinstance(node, Eq)):
            h1, _ = unapply(node.lhs)
            h2, _ = unapply(node.rhs)
            if not (isinstance(h1, Const) and isinstance(h2, Const)):
                return None
            d1, d2 = kernel.sig.is_ctor(h1.name), kernel.sig.is_ctor(h2.name)
            if d1 is None or d1 != d2:
                return None
            framed, back = _frame(kernel, node, bsorts)
            rule = "ctor_inj" if h1.name == h2.name else "ctor_clash"
            try:
                thm = _eq_rule_thm(kernel, rule, (framed,))
            except KernelError:
                return None
        else:
            return None
    core = thm.concl
    dst_framed = core.rhs if isinstance(core, (Eq, Iff)) else None
    assert dst_framed is not None
    dst = beta_normalize(apply_subst(dst_framed, back))
    if alpha_eq(dst, node):
        return None
    return RwStep(thm, path, back, (), dst)


def _find_step(kernel: Kernel, t: Term, simpset: Optional[SimpSet],
               comp: SimpSet, full: bool,
               prover: Optional[Prover]) -> Optional[RwStep]:
    def visit(node: Term, path: Path, bsorts: list[Sort],
              at_prop: bool) -> Optional[RwStep]:
        if simpset is not None:
            for rule in simpset.lookup(node):
                if not full and not rule.structural:
                    continue
                st = _try_rule(kernel, rule, node, path, bsorts, at_prop,
                               prover)
                if st is not None:
                    return st
        for rule in comp.lookup(node):
            st = _try_rule(kernel, rule, node, path, bsorts, at_prop, prover)
            if st is not None:
                return st
        st = _computation_step(kernel, node, path, bsorts, at_prop, full)
        if st is not None:
            return st
        cs = children(node)
        for i, c in enumerate(cs):
            if isinstance(node, (Imp, And, Or, Iff, Not)):
                child_prop = True
            elif isinstance(node, (Forall, Exists)):
                child_prop = True
            elif isinstance(node, Ite) and i == 0:
                try:
                    child_prop = sort_of(c, list(bsorts)) == PROP
                except SortError:
                    child_prop = False
            else:
                child_prop = False
            if isinstance(node, (Lam, Forall, Exists)):
                sub_bsorts = [node.var_sort] + bsorts
            else:
                sub_bsorts = bsorts
            st = visit(c, path + (i,), sub_bsorts, child_prop)
            if st is not None:
                return st
        return None

    try:
        root_prop = sort_of(t) == PROP
    except SortError:
        root_prop = False
    return visit(t, (), [], root_prop)


def _computation_rules(kernel: Kernel, defeq: bool) -> SimpSet:
    """Computation rules: unfoldable non-recursive definitions always;
    with ``defeq`` also the defining equations of recursive definitions
    and generated equality tests (full definitional normalization, used
    only when closing a goal, never to present one)."""
    n_defs = len(kernel.sig.defs)
    eqs = kernel.all_equations()
    stamp = (sum(len(v) for v in eqs.values()), n_defs)
    cache = getattr(kernel, "_comp_rules_cache", {})
    cached = cache.get(defeq)
    if cached is not None and cached[0] == stamp:
        return cached[1]
    out = SimpSet()
    if defeq:
        for name, equations in eqs.items():
            for i, eq in enumerate(equations):
                out.add(SimpRule(f"{name}.eq{i}", eq.thm, eq.lhs, eq.rhs,
                                 (), eq.flex_sorts, False), strict=False)
    for name, d in kernel.sig.defs.items():
        thm = kernel.unfold_theorem(name)
        _, _, core = strip_forall_metas(thm.concl)
        if isinstance(core, Eq):
            out.add(rule_of_theorem(f"{name}.unfold", thm,
                                    frozenset(d.svars)), strict=False)
    cache[defeq] = (stamp, out)
    kernel._comp_rules_cache = cache
    return out


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay_steps(kernel: Kernel, t0: Term, steps: Sequence[RwStep],
                 ) -> Theorem:
    """Replay recorded steps through the kernel, producing
    ``t0 <-> result`` (or ``t0 = result`` for non-propositions)."""
    thm = kernel.prim("eq_refl", (), (t0,))
    for st in steps:
        thm = kernel.prim(
            "rewrite", (st.rule_thm, thm, *st.prem_proofs),
            (((1,) + st.path,), st.subst, "L2R"))
    return thm


def simp_term(kernel: Kernel, t: Term, simpset: Optional[SimpSet] = None,
              full: bool = True, prover: Optional[Prover] = None,
              fuel: int = 2000, defeq: bool = False,
              ) -> tuple[Term, list[RwStep]]:
    """Simplify to a normal form, returning it with the step trail."""
    comp = _computation_rules(kernel, defeq)
    steps: list[RwStep] = []
    for _ in range(fuel):
        st = _find_step(kernel, t, simpset, comp, full, prover)
        if st is None:
            break
        steps.append(st)
        from .terms import replace_at
        t = replace_at(t, st.path, st.new_sub)
    return t, steps


# ---------------------------------------------------------------------------
# Built-in propositional rules
# ---------------------------------------------------------------------------


def _derive_prop_rules(kernel: Kernel) -> list[SimpRule]:
    k = kernel

    def assume(p: Term) -> Theorem:
        return k.prim("assume", (), (p,))

    def impi(p: Term, th: Theorem) -> Theorem:
        return k.prim("imp_intro", (th,), (p,))

    def impe(ab: Theorem, a: Theorem) -> Theorem:
        return k.prim("imp_elim", (ab, a), ())

    def iffi(ab: Theorem, ba: Theorem) -> Theorem:
        return k.prim("iff_intro", (ab, ba), ())

    def truei() -> Theorem:
        return k.prim("true_intro", (), ())

    def falsee(th: Theorem, c: Term) -> Theorem:
        return k.prim("false_elim", (th,), (c,))

    def close(th: Theorem, *vs: FVar) -> Theorem:
        for v in reversed(vs):
            th = k.prim("forall_intro", (th,), (v.name, v.sort))
        return th

    P = FVar("P", PROP)
    alpha = SVar("α")
    x = FVar("x", alpha)
    rules: list[tuple[str, Theorem, frozenset[str]]] = []

    def rule(name: str, th: Theorem, flex: frozenset[str] = frozenset(),
             ) -> None:
        rules.append((name, th, flex))

    # conjunction with constants / itself
    rule("and_true", close(iffi(
        impi(And(P, TRUE), k.prim("and_elim_l", (assume(And(P, TRUE)),), ())),
        impi(P, k.prim("and_intro", (assume(P), truei()), ()))), P))
    rule("true_and", close(iffi(
        impi(And(TRUE, P), k.prim("and_elim_r", (assume(And(TRUE, P)),), ())),
        impi(P, k.prim("and_intro", (truei(), assume(P)), ()))), P))
    rule("and_false", close(iffi(
        impi(And(P, FALSE),
             k.prim("and_elim_r", (assume(And(P, FALSE)),), ())),
        impi(FALSE, falsee(assume(FALSE), And(P, FALSE)))), P))
    rule("false_and", close(iffi(
        impi(And(FALSE, P),
             k.prim("and_elim_l", (assume(And(FALSE, P)),), ())),
        impi(FALSE, falsee(assume(FALSE), And(FALSE, P)))), P))
    rule("and_self", close(iffi(
        impi(And(P, P), k.prim("and_elim_l", (assume(And(P, P)),), ())),
        impi(P, k.prim("and_intro", (assume(P), assume(P)), ()))), P))

    # disjunction with constants / itself
    def ore(th_or: Theorem, th_a: Theorem, th_b: Theorem) -> Theorem:
        return k.prim("or_elim", (th_or, th_a, th_b), ())

    imp_id = impi(P, assume(P))
    rule("or_true", close(iffi(
        impi(Or(P, TRUE), truei()),
        impi(TRUE, k.prim("or_intro_r", (truei(),), (P,)))), P))
    rule("true_or", close(iffi(
        impi(Or(TRUE, P), truei()),
        impi(TRUE, k.prim("or_intro_l", (truei(),), (P,)))), P))
    p_of_false = falsee(assume(FALSE), P)
    rule("or_false", close(iffi(
        impi(Or(P, FALSE), ore(assume(Or(P, FALSE)), assume(P), p_of_false)),
        impi(P, k.prim("or_intro_l", (assume(P),), (FALSE,)))), P))
    rule("false_or", close(iffi(
        impi(Or(FALSE, P), ore(assume(Or(FALSE, P)), p_of_false, assume(P))),
        impi(P, k.prim("or_intro_r", (assume(P),), (FALSE,)))), P))
    rule("or_self", close(iffi(
        impi(Or(P, P), ore(assume(Or(P, P)), assume(P), assume(P))),
        impi(P, k.prim("or_intro_l", (assume(P),), (P,)))), P))

    # implication with constants / itself
    rule("true_imp", close(iffi(
        impi(Imp(TRUE, P), impe(assume(Imp(TRUE, P)), truei())),
        impi(P, impi(TRUE, assume(P)))), P))
    rule("imp_true", close(iffi(
        impi(Imp(P, TRUE), truei()),
        impi(TRUE, impi(P, truei()))), P))
    rule("false_imp", close(iffi(
        impi(Imp(FALSE, P), truei()),
        impi(TRUE, impi(FALSE, falsee(assume(FALSE), P)))), P))
    rule("imp_self", close(iffi(
        impi(Imp(P, P), truei()),
        impi(TRUE, imp_id)), P))

    # negation of constants
    rule("not_true", close(iffi(
        impi(Not(TRUE), k.prim("not_elim", (assume(Not(TRUE)), truei()), ())),
        impi(FALSE, falsee(assume(FALSE), Not(TRUE))))))
    rule("not_false", close(iffi(
        impi(Not(FALSE), truei()),
        impi(TRUE, k.prim("not_intro", (assume(FALSE),), (FALSE,))))))

    # bi-implication with constants / itself
    rule("iff_true", close(iffi(
        impi(Iff(P, TRUE),
             k.prim("iff_bwd", (assume(Iff(P, TRUE)), truei()), ())),
        impi(P, iffi(impi(P, truei()), impi(TRUE, assume(P))))), P))
    rule("true_iff", close(iffi(
        impi(Iff(TRUE, P),
             k.prim("iff_fwd", (assume(Iff(TRUE, P)), truei()), ())),
        impi(P, iffi(impi(TRUE, assume(P)), impi(P, truei())))), P))
    not_p_of_ifff = k.prim("not_intro", (
        k.prim("iff_fwd", (assume(Iff(P, FALSE)), assume(P)), ()),), (P,))
    rule("iff_false", close(iffi(
        impi(Iff(P, FALSE), not_p_of_ifff),
        impi(Not(P), iffi(
            impi(P, k.prim("not_elim", (assume(Not(P)), assume(P)), ())),
            impi(FALSE, falsee(assume(FALSE), P))))), P))
    not_p_of_fiff = k.prim("not_intro", (
        k.prim("iff_bwd", (assume(Iff(FALSE, P)), assume(P)), ()),), (P,))
    rule("false_iff", close(iffi(
        impi(Iff(FALSE, P), not_p_of_fiff),
        impi(Not(P), iffi(
            impi(FALSE, falsee(assume(FALSE), P)),
            impi(P, k.prim("not_elim", (assume(Not(P)), assume(P)), ()))))),
        P))
    rule("iff_self", close(iffi(
        impi(Iff(P, P), truei()),
        impi(TRUE, iffi(imp_id, imp_id))), P))

    # reflexive equality and trivial quantifiers
    eqxx = iffi(impi(Eq(alpha, x, x), truei()),
                impi(TRUE, k.prim("eq_refl", (), (x,))))
    rule("eqxx", close(eqxx, x), frozenset({"α"}))
    fa_true = Forall("x", alpha, TRUE)
    rule("forall_true", iffi(
        impi(fa_true, truei()),
        impi(TRUE, k.prim("forall_intro", (truei(),), ("x", alpha)))),
        frozenset({"α"}))
    ex_false = Exists("x", alpha, FALSE)
    eigen = "x✝ex"
    rule("exists_false", iffi(
        impi(ex_false,
             k.prim("exists_elim", (assume(ex_false), assume(FALSE)),
                    (eigen,))),
        impi(FALSE, falsee(assume(FALSE), ex_false))),
        frozenset({"α"}))

    out = []
    for name, th, flex in rules:
        out.append(rule_of_theorem(name, th, flex))
    return out


def prop_rules(kernel: Kernel) -> list[SimpRule]:
    cached = getattr(kernel, "_prop_rules_cache", None)
    if cached is None:
        cached = _derive_prop_rules(kernel)
        kernel._prop_rules_cache = cached
    return cached


def default_simpset(kernel: Kernel) -> SimpSet:
    ss = SimpSet()
    for r in prop_rules(kernel):
        ss.add(r, strict=False)
    return ss


# ---------------------------------------------------------------------------
# Goal-level simplification
# ---------------------------------------------------------------------------


def _premise_prover(kernel: Kernel, facts: Sequence[Term],
                    simpset: Optional[SimpSet], full: bool,
                    depth: int) -> Prover:
    def prove(p: Term) -> Optional[Theorem]:
        for f in facts:
            if alpha_eq(f, p):
                return kernel.prim("assume", (), (p,))
        if depth <= 0:
            return None
        inner = _premise_prover(kernel, facts, simpset, full, depth - 1)
        nf, steps = simp_term(kernel, p, simpset, full, inner, defeq=True)
        if isinstance(nf, TrueP):
            iff_thm = replay_steps(kernel, p, steps)
            return kernel.prim("iff_bwd",
                               (iff_thm, kernel.prim("true_intro", (), ())),
                               ())
        return None

    return prove


def simp_goal(kernel: Kernel, goal: Goal, simpset: Optional[SimpSet],
              full: bool = True, defeq: bool = False,
              ) -> Optional[tuple[list[Goal], Validation]]:
    """Simplify the conclusion.  Returns the residual goals (empty when
    the conclusion reduced to True) and a validation, or None when
    nothing changed."""
    prover = _premise_prover(kernel, goal.fact_props(), simpset, full, 1)
    nf, steps = simp_term(kernel, goal.concl, simpset, full, prover,
                          defeq=defeq)
    if not steps:
        return None
    concl = goal.concl

    if isinstance(nf, TrueP):
        def validate_closed(thms: Sequence[Theorem]) -> Theorem:
            iff_thm = replay_steps(kernel, concl, steps)
            return kernel.prim(
                "iff_bwd", (iff_thm, kernel.prim("true_intro", (), ())), ())

        return [], validate_closed

    sub = Goal(goal.ctx, nf)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        iff_thm = replay_steps(kernel, concl, steps)
        return kernel.prim("iff_bwd", (iff_thm, th), ())

    return [sub], validate


def dsimp_goal(kernel: Kernel, goal: Goal,
               simpset: Optional[SimpSet] = None,
               ) -> Optional[tuple[list[Goal], Validation]]:
    return simp_goal(kernel, goal, simpset, full=False)


def simp_hyp(kernel: Kernel, goal: Goal, name: str,
             simpset: Optional[SimpSet], full: bool = True,
             defeq: bool = False,
             ) -> Optional[tuple[Goal, Validation]]:
    """Simplify one hypothesis in place.  The validation converts a proof
    using the simplified hypothesis into one using the original."""
    idx = next((i for i, e in enumerate(goal.ctx)
                if isinstance(e, CtxHyp) and e.name == name), None)
    if idx is None:
        raise ProofError(f"no hypothesis named {name}")
    entry = goal.ctx[idx]
    other_facts = [e.prop for i, e in enumerate(goal.ctx)
                   if isinstance(e, CtxHyp) and i != idx]
    prover = _premise_prover(kernel, other_facts, simpset, full, 1)
    nf, steps = simp_term(kernel, entry.prop, simpset, full, prover,
                          defeq=defeq)
    if not steps:
        return None
    old = entry.prop
    new_ctx = goal.ctx[:idx] + (CtxHyp(name, nf),) + goal.ctx[idx + 1:]
    sub = Goal(new_ctx, goal.concl)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        iff_thm = replay_steps(kernel, old, steps)
        new_thm = kernel.prim(
            "iff_fwd", (iff_thm, kernel.prim("assume", (), (old,))), ())
        return kernel.prim(
            "imp_elim", (kernel.prim("imp_intro", (th,), (nf,)), new_thm), ())

    return sub, validate


# ---------------------------------------------------------------------------
# The trivial-goal closer
# ---------------------------------------------------------------------------


# A closing rule proposes alternatives; each alternative is a list of
# subgoals (all of which must then close) plus a validation.
TrivRule = Callable[[Kernel, Goal],
                    list[tuple[list[Goal], Validation]]]


def _named_facts(goal: Goal) -> list[tuple[str, Term]]:
    return [(e.name, e.prop) for e in goal.ctx if isinstance(e, CtxHyp)]


def _assumption(kernel: Kernel, goal: Goal,
                inst: bool = True) -> Optional[Theorem]:
    """Close the goal from a context fact, instantiating quantifiers by
    unification and discharging the fact's own premises against other
    context facts."""
    facts = _named_facts(goal)
    concl = goal.concl
    for _, prop in reversed(facts):
        if alpha_eq(prop, concl):
            return kernel.prim("assume", (), (prop,))
    if not inst:
        return None
    for _, prop in reversed(facts):
        metas, prems, core = strip_forall_metas(prop)
        if not metas and not prems:
            continue
        try:
            s = unify(core, concl)
        except UnifyError:
            continue
        solved = _close_premises(kernel, prems, s, facts)
        if solved is None:
            continue
        s, proofs = solved
        vals = []
        ok = True
        for m in metas:
            v = beta_normalize(apply_subst(m, s))
            if metas_of(v) or not is_closed(v):
                ok = False
                break
            vals.append(v)
        if not ok:
            continue
        try:
            th = kernel.prim("assume", (), (prop,))
            for v in vals:
                th = kernel.prim("forall_elim", (th,), (v,))
            for pf in proofs:
                th = kernel.prim("imp_elim", (th, pf), ())
        except KernelError:
            continue
        if alpha_eq(th.concl, concl):
            return th
    return None


def _close_premises(kernel: Kernel, prems: Sequence[Term], s: Subst,
                    facts: Sequence[tuple[str, Term]],
                    ) -> Optional[tuple[Subst, list[Theorem]]]:
    if not prems:
        return s, []
    head, rest = prems[0], prems[1:]
    inst = beta_normalize(apply_subst(head, s))
    for _, fprop in facts:
        try:
            s2 = unify(inst, fprop, s)
        except UnifyError:
            continue
        deeper = _close_premises(kernel, rest, s2, facts)
        if deeper is not None:
            s3, proofs = deeper
            return s3, [kernel.prim("assume", (), (fprop,))] + proofs
    return None


def _contradiction(kernel: Kernel, goal: Goal) -> Optional[Theorem]:
    facts = _named_facts(goal)
    props = [p for _, p in facts]
    false_thm: Optional[Theorem] = None
    for p in props:
        if isinstance(p, FalseP):
            false_thm = kernel.prim("assume", (), (p,))
            break
    if false_thm is None:
        for p in props:
            if not isinstance(p, Not):
                continue
            body = p.body
            if any(alpha_eq(q, body) for q in props):
                false_thm = kernel.prim(
                    "not_elim",
                    (kernel.prim("assume", (), (p,)),
                     kernel.prim("assume", (), (body,))), ())
                break
            if (isinstance(body, Eq) and alpha_eq(body.lhs, body.rhs)
                    and is_closed(body.lhs)):
                false_thm = kernel.prim(
                    "not_elim",
                    (kernel.prim("assume", (), (p,)),
                     kernel.prim("eq_refl", (), (body.lhs,))), ())
                break
    if false_thm is None:
        return None
    return kernel.prim("false_elim", (false_thm,), (goal.concl,))


def rule_or_branch(kernel: Kernel, goal: Goal,
                   ) -> list[tuple[list[Goal], Validation]]:
    c = goal.concl
    if not isinstance(c, Or):
        return []
    left, right = c.lhs, c.rhs

    def val_l(thms: Sequence[Theorem]) -> Theorem:
        return kernel.prim("or_intro_l", (thms[0],), (right,))

    def val_r(thms: Sequence[Theorem]) -> Theorem:
        return kernel.prim("or_intro_r", (thms[0],), (left,))

    return [([Goal(goal.ctx, left)], val_l),
            ([Goal(goal.ctx, right)], val_r)]


def rule_constructor(kernel: Kernel, goal: Goal,
                     ) -> list[tuple[list[Goal], Validation]]:
    """Apply a constructor of a propositional inductive whose conclusion
    unifies with the goal, leaving its premises as subgoals."""
    head, _ = unapply(goal.concl)
    if not isinstance(head, Const):
        return []
    ind = kernel.sig.inductives.get(head.name)
    if ind is None or not ind.is_prop:
        return []
    out: list[tuple[list[Goal], Validation]] = []
    for ctor in ind.ctors:
        thm = kernel.ctor_theorem(ind.name, ctor.name)
        metas, prems, core = strip_forall_metas(thm.concl)
        try:
            s = unify(core, goal.concl)
        except UnifyError:
            continue
        vals = []
        ok = True
        for m in metas:
            v = beta_normalize(apply_subst(m, s))
            if metas_of(v) or not is_closed(v):
                ok = False
                break
            vals.append(v)
        if not ok:
            continue
        inst_prems = [beta_normalize(apply_subst(p, s)) for p in prems]
        if any(metas_of(p) or not is_closed(p) for p in inst_prems):
            continue
        subgoals = [Goal(goal.ctx, p) for p in inst_prems]

        def validate(thms: Sequence[Theorem], thm=thm, vals=tuple(vals),
                     ) -> Theorem:
            th = thm
            for v in vals:
                th = kernel.prim("forall_elim", (th,), (v,))
            for pf in thms:
                th = kernel.prim("imp_elim", (th, pf), ())
            return th

        out.append((subgoals, validate))
    return out


DEFAULT_TRIV_RULES: tuple[TrivRule, ...] = (rule_constructor, rule_or_branch)


def triv_prove(kernel: Kernel, goal: Goal,
               simpset: Optional[SimpSet] = None,
               rules: Sequence[TrivRule] = DEFAULT_TRIV_RULES,
               depth: int = 6, inst: bool = True) -> Optional[Theorem]:
    """Try to close the goal outright.  Returns a theorem whose
    hypotheses are contained in the goal's facts, or None."""
    if depth <= 0:
        return None
    # introduce the whole quantifier/implication prefix anonymously
    g = goal
    wraps: list[Validation] = []
    while True:
        c = g.concl
        if isinstance(c, Forall):
            g2, v = intro_var(kernel, g, g.fresh("t"))
        elif isinstance(c, (Imp, Not)):
            g2, v = intro_hyp(kernel, g, g.fresh("t"))
        else:
            break
        g, wraps = g2, wraps + [v]
    th = _triv_core(kernel, g, simpset, rules, depth, inst)
    if th is None:
        return None
    for v in reversed(wraps):
        th = v([th])
    return th


def _triv_core(kernel: Kernel, g: Goal, simpset: Optional[SimpSet],
               rules: Sequence[TrivRule], depth: int,
               inst: bool = True) -> Optional[Theorem]:
    if isinstance(g.concl, TrueP):
        return kernel.prim("true_intro", (), ())
    th = _assumption(kernel, g, inst)
    if th is not None:
        return th
    th = _contradiction(kernel, g)
    if th is not None:
        return th

    # simplify the hypotheses and the conclusion, then retry
    g2, hyp_wraps = _simp_all(kernel, g, simpset)
    res = simp_goal(kernel, g2, _with_fact_rules(kernel, simpset, g2))
    if res is not None:
        subs, validate = res
        if not subs:
            return _unwrap(validate([]), hyp_wraps)
        (g3,) = subs
    else:
        g3 = g2
        validate = None
    if g3 is not g or validate is not None:
        th = _retry_flat(kernel, g3, simpset, rules, depth, inst)
        if th is not None:
            if validate is not None:
                th = validate([th])
            return _unwrap(th, hyp_wraps)

    # full definitional reduction.  The reduced goal may expose subterms
    # that were only equal up to computation, so the retry is restricted:
    # no instantiation of quantified facts and no rewrite-set rules (a
    # reduced goal combined with those would prove far more than a
    # reflexivity check).
    base = default_simpset(kernel)
    res2 = simp_goal(kernel, g, base, full=True, defeq=True)
    if res2 is not None:
        subs2, val2 = res2
        if not subs2:
            return val2([])
        (g4,) = subs2
        th = _triv_core(kernel, g4, base, rules, depth - 1, inst=False)
        if th is not None:
            return val2([th])

    # closing rules: registered extensions first, then the built-ins
    for rule in rules:
        for subgoals, validate_r in rule(kernel, g):
            proofs = []
            for sg in subgoals:
                p = triv_prove(kernel, sg, simpset, rules, depth - 1, inst)
                if p is None:
                    break
                proofs.append(p)
            else:
                return validate_r(proofs)
    return None


def _retry_flat(kernel: Kernel, g: Goal, simpset: Optional[SimpSet],
                rules: Sequence[TrivRule], depth: int,
                inst: bool = True) -> Optional[Theorem]:
    """Retry the cheap closers on an already-simplified goal (the
    conclusion may have exposed a new prefix)."""
    return triv_prove(kernel, g, simpset, rules, depth - 1, inst)


def _unwrap(th: Theorem, wraps: Sequence[Validation]) -> Theorem:
    for v in reversed(wraps):
        th = v([th])
    return th


def _simp_all(kernel: Kernel, g: Goal, simpset: Optional[SimpSet],
              ) -> tuple[Goal, list[Validation]]:
    wraps: list[Validation] = []
    for e in list(g.ctx):
        if not isinstance(e, CtxHyp):
            continue
        res = simp_hyp(kernel, g, e.name, simpset)
        if res is not None:
            g, v = res
            wraps.append(v)
    return g, wraps


def _with_fact_rules(kernel: Kernel, simpset: Optional[SimpSet],
                     g: Goal) -> SimpSet:
    """Extend the rule set with the goal's own facts: equations are used
    directly, other facts rewrite to True and negated ones to False."""
    ss = simpset.copy() if simpset is not None else SimpSet()
    for name, prop in _named_facts(g):
        thm = None
        metas, prems, core = strip_forall_metas(prop)
        if prems:
            continue
        if isinstance(core, (Eq, Iff)):
            thm = kernel.prim("assume", (), (prop,))
        elif isinstance(core, Not) and not metas:
            body = core.body
            d1 = kernel.prim("imp_intro", (kernel.prim(
                "not_elim", (kernel.prim("assume", (), (prop,)),
                             kernel.prim("assume", (), (body,))), ()),),
                (body,))
            d2 = kernel.prim("imp_intro", (kernel.prim(
                "false_elim", (kernel.prim("assume", (), (FALSE,)),),
                (body,)),), (FALSE,))
            thm = kernel.prim("iff_intro", (d1, d2), ())
        elif not metas and not isinstance(core, (TrueP, FalseP)):
            d1 = kernel.prim("imp_intro",
                             (kernel.prim("true_intro", (), ()),), (core,))
            d2 = kernel.prim("imp_intro",
                             (kernel.prim("assume", (), (core,)),), (TRUE,))
            thm = kernel.prim("iff_intro", (d1, d2), ())
        if thm is None:
            continue
        try:
            ss.add(rule_of_theorem(f"hyp.{name}", thm), strict=False)
        except AutomationError:
            pass
    return ss


# ---------------------------------------------------------------------------
# Terminal switches
# ---------------------------------------------------------------------------


def last_mile(kernel: Kernel, goal: Goal, kind: str,
              simpset: Optional[SimpSet] = None,
              rules: Sequence[TrivRule] = DEFAULT_TRIV_RULES,
              ) -> Optional[tuple[list[Goal], Validation]]:
    """Run one of the terminal switches.  Returns the residual goals and
    a validation, or None when the goal is left untouched."""
    if kind in ("/=", "//="):
        res = dsimp_goal(kernel, goal, simpset)
    elif kind in ("/==", "//=="):
        res = simp_goal(kernel, goal, simpset)
    else:
        res = None
    if kind == "/=" or kind == "/==":
        return res

    # the trivial closer runs on the simplified goal
    base_goals: list[Goal]
    if res is None:
        base_goals, base_val = [goal], None
    else:
        base_goals, base_val = res
    out_goals: list[Goal] = []
    closers: dict[int, Theorem] = {}
    for g in base_goals:
        th = triv_prove(kernel, g, simpset, rules)
        if th is not None:
            closers[g.id] = th
        else:
            out_goals.append(g)
    if res is None and not closers:
        return None

    def validate(thms: Sequence[Theorem]) -> Theorem:
        it = iter(thms)
        inner = [closers[g.id] if g.id in closers else next(it)
                 for g in base_goals]
        if base_val is None:
            (th,) = inner
            return th
        return base_val(inner)

    return out_goals, validate
