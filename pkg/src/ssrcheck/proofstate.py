"""Goals, proof states and the justification forest.

A goal is a context (term variables and named fact hypotheses, in
dependency order) together with a conclusion.  The "stack" a script
manipulates is simply the leading ∀/→/¬ prefix of the conclusion, read
off lazily: `intro` moves the top of that prefix into the context,
`revert` puts a context entry back.

Tactics never produce theorems directly.  Applying a tactic to a goal
yields subgoals plus a validation — a closure turning certified proofs
of the subgoals into a certified proof of the goal.  The forest of
these validations, keyed by goal id, is folded at `qed` time and the
resulting theorem is compared against the stated lemma.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .kernel import Kernel, Theorem
from .terms import (
    FVar, Forall, Imp, Not, PROP, Sort, Term, alpha_eq, check_sorts,
    free_vars, instantiate,
)


class ProofError(Exception):
    pass


# ---------------------------------------------------------------------------
# Contexts and goals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CtxVar:
    name: str            # display name
    fvar: FVar           # the actual (possibly mangled) free variable

    @property
    def sort(self) -> Sort:
        return self.fvar.sort


@dataclass(frozen=True)
class CtxHyp:
    name: str
    prop: Term


CtxEntry = CtxVar | CtxHyp

_goal_ids = itertools.count(1)


@dataclass(frozen=True)
class Goal:
    ctx: tuple[CtxEntry, ...]
    concl: Term
    id: int = field(default_factory=lambda: next(_goal_ids))

    # -- lookups ------------------------------------------------------------

    def hyp(self, name: str) -> Term:
        for e in reversed(self.ctx):
            if isinstance(e, CtxHyp) and e.name == name:
                return e.prop
        raise ProofError(f"no hypothesis named {name}")

    def has_name(self, name: str) -> bool:
        return any(e.name == name for e in self.ctx)

    def var(self, name: str) -> FVar:
        for e in reversed(self.ctx):
            if isinstance(e, CtxVar) and e.name == name:
                return e.fvar
        raise ProofError(f"no variable named {name}")

    def fact_props(self) -> list[Term]:
        return [e.prop for e in self.ctx if isinstance(e, CtxHyp)]

    def fresh(self, base: str) -> str:
        if not self.has_name(base):
            return base
        i = 1
        while self.has_name(f"{base}{i}"):
            i += 1
        return f"{base}{i}"


Validation = Callable[[Sequence[Theorem]], Theorem]


@dataclass
class Node:
    children: tuple[int, ...]
    validate: Validation


class Forest:
    """Justification forest: one node per solved goal."""

    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {}

    def record(self, goal: Goal, subgoals: Sequence[Goal],
               validate: Validation) -> None:
        if goal.id in self.nodes:
            raise ProofError("goal already solved")
        self.nodes[goal.id] = Node(tuple(g.id for g in subgoals), validate)

    def prove(self, goal_id: int) -> Theorem:
        node = self.nodes.get(goal_id)
        if node is None:
            raise ProofError("unsolved goal in justification forest")
        return node.validate([self.prove(c) for c in node.children])


# ---------------------------------------------------------------------------
# Structural goal moves
# ---------------------------------------------------------------------------


def intro_var(kernel: Kernel, goal: Goal, name: str,
              ) -> tuple[Goal, Validation]:
    c = goal.concl
    if not isinstance(c, Forall):
        raise ProofError("conclusion is not universally quantified")
    if goal.has_name(name):
        raise ProofError(f"name {name} already in context")
    fv = FVar(name, c.var_sort) if not _taken_fvar(goal, name) \
        else kernel.fresh_fvar(name, c.var_sort)
    sub = Goal(goal.ctx + (CtxVar(name, fv),), instantiate(c.body, fv))

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        return kernel.prim("forall_intro", (th,), (fv.name, fv.sort))

    return sub, validate


def intro_hyp(kernel: Kernel, goal: Goal, name: str,
              ) -> tuple[Goal, Validation]:
    c = goal.concl
    if isinstance(c, Imp):
        prem, rest = c.lhs, c.rhs
        rule = "imp_intro"
    elif isinstance(c, Not):
        from .terms import FALSE
        prem, rest = c.body, FALSE
        rule = "not_intro"
    else:
        raise ProofError("conclusion is not an implication")
    if goal.has_name(name):
        raise ProofError(f"name {name} already in context")
    sub = Goal(goal.ctx + (CtxHyp(name, prem),), rest)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        return kernel.prim(rule, (th,), (prem,))

    return sub, validate


def revert_entry(kernel: Kernel, goal: Goal, name: str,
                 ) -> tuple[Goal, Validation]:
    idx = None
    for i in range(len(goal.ctx) - 1, -1, -1):
        if goal.ctx[i].name == name:
            idx = i
            break
    if idx is None:
        raise ProofError(f"nothing named {name} to revert")
    entry = goal.ctx[idx]
    rest = goal.ctx[:idx] + goal.ctx[idx + 1:]
    if isinstance(entry, CtxVar):
        v = entry.fvar
        for e in goal.ctx[idx + 1:]:
            if isinstance(e, CtxHyp) and v.name in free_vars(e.prop):
                raise ProofError(
                    f"cannot revert {name}: hypothesis {e.name} depends on it")
            if isinstance(e, CtxVar) and v.name in _sort_fvars(e):
                raise ProofError(f"cannot revert {name}")
        from .terms import abstract
        new_concl: Term = Forall(entry.name, v.sort,
                                 abstract(goal.concl, v.name))
        sub = Goal(rest, new_concl)

        def validate(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            return kernel.prim("forall_elim", (th,), (v,))

        return sub, validate

    prop = entry.prop
    sub = Goal(rest, Imp(prop, goal.concl))

    def validate_h(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        return kernel.prim("imp_elim",
                           (th, kernel.prim("assume", (), (prop,))), ())

    return sub, validate_h


def _taken_fvar(goal: Goal, name: str) -> bool:
    return any(isinstance(e, CtxVar) and e.fvar.name == name
               for e in goal.ctx)


def _sort_fvars(e: CtxVar) -> set[str]:
    return set()  # sorts do not contain term variables


# ---------------------------------------------------------------------------
# Stack view and state diffing
# ---------------------------------------------------------------------------


def stack_view(goal: Goal) -> list[tuple[str, Term | Sort]]:
    """The ∀/→ prefix of the conclusion, top first: ("var", sort) and
    ("hyp", prop) items, read without modifying the goal."""
    out: list[tuple[str, Term | Sort]] = []
    t = goal.concl
    while True:
        if isinstance(t, Forall):
            out.append(("var", t.var_sort))
            t = t.body
        elif isinstance(t, Imp):
            out.append(("hyp", t.lhs))
            t = t.rhs
        elif isinstance(t, Not):
            from .terms import FALSE
            out.append(("hyp", t.body))
            t = FALSE
        else:
            return out


def diff_goals(before: Optional[Goal], after: Goal) -> dict:
    """Structural diff used by the trace: which context entries are new
    and whether the conclusion changed."""
    if before is None:
        return {"added": [e.name for e in after.ctx],
                "removed": [], "concl_changed": True}
    bset = {(e.name, _entry_key(e)) for e in before.ctx}
    aset = {(e.name, _entry_key(e)) for e in after.ctx}
    return {
        "added": sorted(n for (n, _) in aset - bset),
        "removed": sorted(n for (n, _) in bset - aset),
        "concl_changed": not alpha_eq(before.concl, after.concl),
    }


def _entry_key(e: CtxEntry):
    return e.prop if isinstance(e, CtxHyp) else e.fvar


# ---------------------------------------------------------------------------
# qed
# ---------------------------------------------------------------------------


def qed(kernel: Kernel, statement: Term, root: Goal, forest: Forest,
        allowed_axioms: frozenset[str] = frozenset()) -> Theorem:
    """Fold the justification forest and certify the statement.

    The root goal's context must only contain entries that were part of
    the ambient declaration (none, in the common case): the folded
    theorem is rebuilt by discharging the root context from the inside
    out, then compared with the statement.
    """
    thm = forest.prove(root.id)
    if not alpha_eq(thm.concl, root.concl):
        raise ProofError("validation produced a proof of the wrong statement")
    facts = set(root.fact_props())
    for h in thm.hyps:
        if h not in facts:
            raise ProofError("proof depends on a hypothesis not in "
                             "the goal context")
    for e in reversed(root.ctx):
        if isinstance(e, CtxHyp):
            thm = kernel.prim("imp_intro", (thm,), (e.prop,))
        else:
            thm = kernel.prim("forall_intro", (thm,),
                              (e.fvar.name, e.fvar.sort))
    if thm.hyps:
        raise ProofError("undischarged hypotheses at qed")
    if not alpha_eq(thm.concl, statement):
        raise ProofError("proved statement differs from the declared one")
    extra = thm.axioms - allowed_axioms
    if extra:
        raise ProofError(f"proof uses undeclared axioms: {sorted(extra)}")
    return thm


def initial_goal(statement: Term) -> Goal:
    if check_sorts(statement) != PROP:
        raise ProofError("statement must be a proposition")
    return Goal((), statement)
