"""Tactic interpretation: scripts over proof states.

Each script token is applied atomically (failures roll the state back
and report the token's span), and every pattern token leaves one trace
entry with the goals before and after it.  All reasoning is justified
through the kernel via the justification forest; this module only
searches and orchestrates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .automation import (AutomationError, SimpSet, TrivRule,
                         DEFAULT_TRIV_RULES, last_mile, replay_steps,
                         rule_of_theorem, _try_rule)
from .elab import ElabError, Env, elaborate_term
from .kernel import Kernel, KernelError, Theorem, strip_forall_metas
from .parser import (IAll, IAlt, IAnon, IBuiltinView, IDeep, IDiscard,
                     IExt, IIdent, IntroItem, IRw, ISplit, ITriv, IView,
                     RevertItem, RwItem, RwRule, RwTriv, SApp, SHole, SIdent,
                     Span, STerm, Tactic, TElim, TExists, TFocus, TMove,
                     TNamed, TSApply, TSby, TScase, TSplitTac, TSrw,
                     sterm_span)
from .proofstate import (CtxHyp, CtxVar, Forest, Goal, ProofError,
                         Validation, initial_goal, intro_hyp, intro_var,
                         qed, revert_entry)
from .terms import (FALSE, TRUE, And, BVar, Const, Eq, Exists,
                    FalseP, Forall, FVar, Iff, Imp, Ite, Lam, Not, Or, Meta,
                    Path, Sort, SArrow, SData, Subst, SVar, Term, TrueP,
                    UnifyError,
                    abstract, alpha_eq, apply_subst, beta_normalize,
                    check_sorts, children, contains_fvar, instantiate,
                    is_closed, match_fo, metas_of, replace_at, shift,
                    sort_free_vars, sort_match, subterm_at, unapply, unify,
                    with_children)


def _merge(s: Subst, s2: Subst) -> None:
    s.metas.update(s2.metas)
    s.fvars.update(s2.fvars)
    s.sorts.update(s2.sorts)


class EngineError(Exception):
    def __init__(self, span: Span, message: str) -> None:
        super().__init__(message)
        self.span = span
        self.message = message


# ---------------------------------------------------------------------------
# The extensible rule stack
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternRule:
    """An extension hook: `intro` rules serve `/[name]` and `!name`
    items, `triv` rules extend the trivial closer, `rw` rules extend
    rewrite-item dispatch."""

    category: str           # "intro" | "triv" | "rw"
    name: str
    action: Callable
    origin: Optional[Span] = None


class RuleStack:
    def __init__(self) -> None:
        self._stacks: dict[str, list[PatternRule]] = {
            "intro": [], "triv": [], "rw": []}

    def push(self, rule: PatternRule) -> None:
        self._stacks[rule.category].append(rule)

    def lookup(self, category: str) -> list[PatternRule]:
        """Top of stack first (newest registration wins)."""
        return list(reversed(self._stacks[category]))

    def copy(self) -> "RuleStack":
        out = RuleStack()
        out._stacks = {k: list(v) for k, v in self._stacks.items()}
        return out


def register_pattern_rule(rules: RuleStack, r: PatternRule) -> RuleStack:
    out = rules.copy()
    out.push(r)
    return out


@dataclass
class ProofEnv:
    """Everything a proof runs against: kernel, ambient elaboration
    environment, simplification rules and the extension stack — all
    frozen for the duration of the script."""

    kernel: Kernel
    env: Env
    simpset: SimpSet
    rules: RuleStack

    def triv_rules(self) -> tuple[TrivRule, ...]:
        user = tuple(r.action for r in self.rules.lookup("triv"))
        return user + DEFAULT_TRIV_RULES


@dataclass(frozen=True)
class TraceEntry:
    span: Span
    before: tuple[Goal, ...]
    after: tuple[Goal, ...]


# ---------------------------------------------------------------------------
# Fact references (hypotheses, lemmas, applied facts)
# ---------------------------------------------------------------------------


@dataclass
class FactRef:
    """A fact expression resolved against the goal: its statement
    (possibly containing metavariables for `_` arguments) and a recipe
    producing the kernel theorem once the metavariables are solved."""

    prop: Term
    base: Callable[[], Theorem]
    steps: tuple = ()          # ("inst", Term) | ("prem", FactRef)

    def build(self, kernel: Kernel, s: Subst) -> Theorem:
        th = self.base()
        relevant = {v: s.sorts[v]
                    for v in sort_free_vars_of_theorem(th) if v in s.sorts}
        if relevant:
            th = kernel.prim("sort_inst", (th,), tuple(relevant.items()))
        for kind, payload in self.steps:
            if kind == "inst":
                v = beta_normalize(apply_subst(payload, s))
                if metas_of(v):
                    raise ProofError("could not infer an argument")
                th = kernel.prim("forall_elim", (th,), (v,))
            else:
                th = kernel.prim("imp_elim",
                                 (th, payload.build(kernel, s)), ())
        return th


def sort_free_vars_of_theorem(th: Theorem) -> set[str]:
    out: set[str] = set()

    def sorts_of(t: Term) -> None:
        from .terms import sort_free_vars
        match t:
            case FVar(_, s) | Const(_, s) | Meta(_, s) | Eq(s, _, _):
                out.update(sort_free_vars(s))
            case Forall(_, s, _) | Exists(_, s, _) | Lam(_, s, _):
                out.update(sort_free_vars(s))
        for c in children(t):
            sorts_of(c)

    sorts_of(th.concl)
    for h in th.hyps:
        sorts_of(h)
    return out


# ---------------------------------------------------------------------------
# The interpreter
# ---------------------------------------------------------------------------


_IFF_OK = (Imp, And, Or, Iff, Not, Forall, Exists)


class Interp:
    def __init__(self, penv: ProofEnv, statement: Term,
                 root: Optional[Goal] = None) -> None:
        self.penv = penv
        self.kernel = penv.kernel
        self.statement = statement
        self.root = root if root is not None else initial_goal(statement)
        self.goals: list[Goal] = [self.root]
        self.forest = Forest()
        self.trace: list[TraceEntry] = []
        self._focus: list[int] = [self.root.id]
        self._meta_ids = itertools.count(10000)
        self._anon = itertools.count(1)
        self._traced = True

    # -- bookkeeping -------------------------------------------------------

    def _goal(self, gid: int) -> Goal:
        for g in self.goals:
            if g.id == gid:
                return g
        raise ProofError("goal vanished")

    def first_goal(self) -> Goal:
        if not self.goals:
            raise ProofError("no goals left")
        return self.goals[0]

    def _apply(self, goal: Goal, subgoals: Sequence[Goal],
               validate: Validation) -> list[Goal]:
        self.forest.record(goal, subgoals, validate)
        i = next(i for i, g in enumerate(self.goals) if g.id == goal.id)
        self.goals[i:i + 1] = list(subgoals)
        return list(subgoals)

    def _snapshot(self):
        return (list(self.goals), dict(self.forest.nodes),
                len(self.trace), list(self._focus))

    def _rollback(self, snap) -> None:
        self.goals, nodes, ntrace, self._focus = snap
        self.forest.nodes = nodes
        del self.trace[ntrace:]

    def _step(self, span: Span, fn: Callable[[], None]) -> None:
        """Run one pattern token atomically, recording a trace entry."""
        snap = self._snapshot()
        before = tuple(snap[0])
        try:
            fn()
        except EngineError:
            self._rollback(snap)
            raise
        except (ProofError, KernelError, AutomationError, ElabError,
                UnifyError) as e:
            self._rollback(snap)
            raise EngineError(span, str(e)) from e
        if self._traced:
            self.trace.append(TraceEntry(span, before, tuple(self.goals)))

    def _note(self, span: Span, before: tuple[Goal, ...]) -> None:
        if self._traced:
            self.trace.append(TraceEntry(span, before, tuple(self.goals)))

    # -- elaboration helpers -------------------------------------------------

    def _goal_env(self, goal: Goal) -> Env:
        base = self.penv.env
        tv = dict(base.term_vars)
        for e in goal.ctx:
            if isinstance(e, CtxVar):
                tv[e.name] = e.fvar.sort
        return Env(self.kernel, base.type_vars, tv, base.pending_consts)

    def _elab_term(self, goal: Goal, st: STerm,
                   expect: Optional[Sort] = None,
                   allow_holes: bool = False) -> Term:
        from .elab import Elaborator
        env = self._goal_env(goal)
        el = Elaborator(env)
        span = sterm_span(st)
        t = el.elab(st, [])
        if expect is not None:
            el.uni(el.infer(t, [], span), expect, span)
        else:
            el.infer(t, [], span)
        t = el.finalize(t, span, default_sorts=allow_holes)
        if metas_of(t):
            if not allow_holes:
                raise EngineError(span, "placeholders are not allowed here")
            # move elaborator hole ids into the interpreter's own range
            remap = {m: Meta(next(self._meta_ids), srt)
                     for m, srt in _meta_sorts(t).items()}
            t = apply_subst(t, Subst(metas=remap))
        # rename ctx-variable references to their true (possibly
        # mangled) free variables
        fvs = {e.name: e.fvar for e in goal.ctx
               if isinstance(e, CtxVar) and e.name != e.fvar.name}
        return apply_subst(t, Subst(fvars=fvs)) if fvs else t

    # -- fact resolution -----------------------------------------------------

    def _named_theorem(self, name: str) -> Optional[Theorem]:
        sig = self.kernel.sig
        if name in sig.lemmas:
            return sig.lemmas[name]
        if name in sig.axioms:
            return sig.axioms[name]
        for ind in sig.inductives.values():
            if ind.is_prop and any(c.name == name for c in ind.ctors):
                return self.kernel.ctor_theorem(ind.name, name)
        if name in sig.defs:
            return self.kernel.unfold_theorem(name)
        base, _, suffix = name.rpartition(".")
        if base and suffix.startswith("eq") and suffix[2:].isdigit():
            eqs = self.kernel.all_equations().get(base)
            idx = int(suffix[2:])
            if eqs is not None and idx < len(eqs):
                return eqs[idx].thm
        if name == "eqP" and sig.decidable_svars:
            sv = sorted(sig.decidable_svars)[0]
            return self.kernel.eq_reflect(SVar(sv))
        return None

    def _resolve_fact(self, goal: Goal, st: STerm, s: Subst,
                      allow_holes: bool = True) -> FactRef:
        """Resolve a fact expression: a hypothesis or lemma name, or an
        application of one to term/fact arguments.  Unsolved `_`
        arguments become metavariables constrained later."""
        span = sterm_span(st)
        if isinstance(st, SIdent):
            name = st.name
            if goal.has_name(name) and any(
                    isinstance(e, CtxHyp) and e.name == name
                    for e in goal.ctx):
                prop = goal.hyp(name)
                return FactRef(prop, lambda p=prop: self.kernel.prim(
                    "assume", (), (p,)))
            th = self._named_theorem(name)
            if th is not None and not th.hyps:
                return FactRef(th.concl, lambda t=th: t)
            raise EngineError(span, f"unknown fact {name}")
        if isinstance(st, SApp):
            head = st
            args: list[STerm] = []
            while isinstance(head, SApp):
                args.insert(0, head.arg)
                head = head.fn
            base = self._resolve_fact(goal, head, s, allow_holes)
            prop = base.prop
            steps = list(base.steps)
            for a in args:
                if isinstance(prop, Forall):
                    if isinstance(a, SHole):
                        if not allow_holes:
                            raise EngineError(sterm_span(a),
                                              "placeholder not allowed here")
                        m: Term = Meta(next(self._meta_ids), prop.var_sort)
                    else:
                        m = self._elab_term(goal, a, allow_holes=allow_holes)
                        if not sort_match(prop.var_sort, check_sorts(m),
                                          s.sorts, None):
                            raise EngineError(sterm_span(a),
                                              "argument sort mismatch")
                    steps.append(("inst", m))
                    prop = beta_normalize(instantiate(prop.body, m))
                elif isinstance(prop, Imp):
                    sub = self._resolve_fact(goal, a, s, allow_holes)
                    try:
                        _merge(s, unify(prop.lhs, sub.prop, s))
                    except UnifyError as e:
                        raise EngineError(sterm_span(a), str(e)) from e
                    steps.append(("prem", sub))
                    prop = prop.rhs
                else:
                    raise EngineError(sterm_span(a),
                                      "fact takes no more arguments")
            return FactRef(prop, base.base, tuple(steps))
        raise EngineError(span, "expected a fact (hypothesis or lemma)")

    def _peel(self, prop: Term) -> tuple[list[Meta], list[tuple[str, object]],
                                         Term]:
        """Strip the interleaved forall/implication prefix, inventing
        fresh metavariables; returns (metas, ops, core) where ops records
        instantiations and premises in order."""
        metas: list[Meta] = []
        ops: list[tuple[str, object]] = []
        t = prop
        while True:
            if isinstance(t, Forall):
                m = Meta(next(self._meta_ids), t.var_sort)
                metas.append(m)
                ops.append(("m", m))
                t = beta_normalize(instantiate(t.body, m))
            elif isinstance(t, Imp):
                ops.append(("p", t.lhs))
                t = t.rhs
            else:
                return metas, ops, t

    # -- unfolding propositional definitions ----------------------------------

    def _unfold_at(self, t: Term, path: Path) -> Optional[tuple[Term, list]]:
        """Unfold a defined proposition heading the subterm at `path`."""
        node = subterm_at(t, path)
        head, _ = unapply(node)
        if not isinstance(head, Const):
            return None
        d = self.kernel.sig.defs.get(head.name)
        if d is None:
            return None
        thm = self.kernel.unfold_theorem(head.name)
        _, _, core = strip_forall_metas(thm.concl)
        if not isinstance(core, Iff):
            return None
        rule = rule_of_theorem(f"{head.name}.unfold", thm,
                               frozenset(d.svars))
        step = _try_rule(self.kernel, rule, node, path, [], True, None)
        if step is None:
            return None
        from .terms import replace_at
        return replace_at(t, path, step.new_sub), [step]

    def _expose(self, goal: Goal, want: str) -> Goal:
        """If the conclusion (or its top assumption, for want="asm") is a
        defined proposition, unfold it in place; otherwise return the
        goal unchanged."""
        c = goal.concl
        if want == "concl":
            res = self._unfold_at(c, ())
        else:
            if not isinstance(c, Imp):
                return goal
            res = self._unfold_at(c, (0,))
        if res is None:
            return goal
        new_c, steps = res
        sub = Goal(goal.ctx, new_c)

        def validate(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            iff_thm = replay_steps(self.kernel, c, steps)
            return self.kernel.prim("iff_bwd", (iff_thm, th), ())

        (g2,) = self._apply(goal, [sub], validate)
        return g2

    # -- script driver ---------------------------------------------------------

    def run(self, tactics: Sequence[Tactic]) -> None:
        for t in tactics:
            self.exec_tactic(t)

    def finish(self, name: str, by_span: Span,
               allowed_axioms: frozenset[str] = frozenset()) -> Theorem:
        if self.goals:
            raise EngineError(by_span,
                              f"unfinished proof: {len(self.goals)} "
                              "goal(s) remain")
        return qed(self.kernel, self.statement, self.root, self.forest,
                   allowed_axioms)

    def exec_tactic(self, t: Tactic) -> None:
        match t:
            case TMove(span, reverts, intros):
                self._with_reverts(span, reverts, None)
                self._run_intros(intros)
            case TSApply(span, reverts, intros):
                self._with_reverts(span, reverts, self._core_sapply)
                self._run_intros(intros)
            case TElim(span, fn, reverts, intros):
                self._with_reverts(
                    span, reverts,
                    lambda g, fn=fn: self._core_elim(g, fn))
                self._run_intros(intros)
            case TScase(span, deep, reverts, intros):
                self._with_reverts(
                    span, reverts,
                    lambda g, deep=deep: self._core_scase(g, deep))
                self._run_intros(intros)
            case TSrw(span, items, location, loc_span, intros):
                self.exec_srw(t)
                self._run_intros(intros)
            case TExists(span, witnesses, intros):
                self._step(span, lambda: self._core_exists(witnesses))
                self._focus = [self.goals[0].id] if self.goals else []
                self._run_intros(intros)
            case TSby(span, body):
                self.exec_sby(span, body)
            case TSplitTac(span, branches):
                self._step(span,
                           lambda: self._core_split(span, branches))
            case TFocus(span, body):
                self.exec_focus(span, body)
            case TNamed(span, name):
                raise EngineError(span, f"unknown tactic {name}")
            case _:
                raise AssertionError(t)

    # -- reverts ---------------------------------------------------------------

    def _with_reverts(self, span: Span, reverts: tuple[RevertItem, ...],
                      core: Optional[Callable]) -> None:
        """Run the keyword, its reverts and its core action, fabricating
        one trace entry per revert item in textual order: entry k shows
        the first goal with items 0..k pushed (item 0 on top)."""
        if not reverts:
            def kw() -> None:
                if core is not None:
                    subs = core(self.first_goal())
                    self._focus = [g.id for g in subs]
                else:
                    self._focus = [self.first_goal().id]
            self._step(span, kw)
            return

        goal = self.first_goal()
        # fabricated intermediate states (prefix pushes, no justification)
        prefixes: list[Goal] = []
        for k in range(len(reverts)):
            g = goal
            for item in reversed(reverts[:k + 1]):
                g, _ = self._push_one_pure(g, item)
            prefixes.append(g)

        snap = self._snapshot()
        before_all = tuple(snap[0])
        try:
            # the real transition: all items pushed right-to-left
            g = goal
            vals: list[Validation] = []
            for item in reversed(reverts):
                g, v = self._push_one_pure(g, item)
                vals.append(v)

            def validate(thms: Sequence[Theorem]) -> Theorem:
                (th,) = thms
                for v in reversed(vals):
                    th = v([th])
                return th

            subs = self._apply(goal, [g], validate)
            if core is not None:
                subs = core(subs[0])
            self._focus = [x.id for x in subs]
        except EngineError:
            self._rollback(snap)
            raise
        except (ProofError, KernelError, AutomationError, ElabError,
                UnifyError) as e:
            self._rollback(snap)
            raise EngineError(reverts[-1].span, str(e)) from e

        if not self._traced:
            return
        # trace: keyword no-op, then one entry per revert item
        rest = before_all[1:]
        self.trace.append(TraceEntry(span, before_all, before_all))
        prev = before_all
        for k, item in enumerate(reverts):
            if k + 1 == len(reverts):
                after = tuple(self.goals)
            else:
                after = (prefixes[k],) + rest
            self.trace.append(TraceEntry(item.span, prev, after))
            prev = after


    def _push_one_pure(self, goal: Goal,
                       item: RevertItem) -> tuple[Goal, Validation]:
        st = item.term
        if isinstance(st, SIdent) and goal.has_name(st.name):
            return self._revert_with_closure(goal, st.name)
        # fact expression push (e.g. `scase!: (IH m1 m2)`)
        try:
            s = Subst()
            fact = self._resolve_fact(goal, st, s, allow_holes=False)
            prop = beta_normalize(apply_subst(fact.prop, s))
            if not metas_of(prop):
                sub = Goal(goal.ctx, Imp(prop, goal.concl))

                def validate(thms: Sequence[Theorem]) -> Theorem:
                    (th,) = thms
                    return self.kernel.prim(
                        "imp_elim", (th, fact.build(self.kernel, s)), ())

                return sub, validate
        except EngineError:
            pass
        # term generalization
        t = self._elab_term(goal, st)
        from .terms import check_sorts
        sort = check_sorts(t)
        hint = st.name if isinstance(st, SIdent) else "x"
        v = self.kernel.fresh_fvar(hint, sort)
        gen = _replace_term(goal.concl, t, v)
        from .terms import abstract
        new_concl = Forall(hint, sort, abstract(gen, v.name))
        sub = Goal(goal.ctx, new_concl)

        def validate_g(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            return self.kernel.prim("forall_elim", (th,), (t,))

        return sub, validate_g

    def _revert_with_closure(self, goal: Goal, name: str,
                             ) -> tuple[Goal, Validation]:
        idx = next(i for i, e in enumerate(goal.ctx) if e.name == name)
        entry = goal.ctx[idx]
        names = [name]
        if isinstance(entry, CtxVar):
            fv = entry.fvar.name
            for e in goal.ctx[idx + 1:]:
                if isinstance(e, CtxHyp) and contains_fvar(e.prop, fv):
                    names.insert(0, e.name)
        g = goal
        vals: list[Validation] = []
        for n in names:
            g, v = revert_entry(self.kernel, g, n)
            vals.append(v)

        def validate(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            for v in reversed(vals):
                th = v([th])
            return th

        return g, validate

    # -- intro sequences ---------------------------------------------------------

    def _run_intros(self, items: Sequence[IntroItem]) -> None:
        for item in items:
            self._step(item.span, lambda item=item: self._item(item))

    def _item(self, item: IntroItem) -> None:
        if isinstance(item, IAlt):
            self._item_alt(item)
            return
        new_focus: list[int] = []
        for gid in list(self._focus):
            g = self._goal(gid)
            subs = self._item_on_goal(item, g)
            new_focus.extend(x.id for x in subs)
        self._focus = new_focus

    def _item_alt(self, item: IAlt) -> None:
        k = len(item.branches)
        if k == 1 and not item.branches[0]:
            # bare `[]`: destruct the top item, keep every resulting goal
            new_focus = []
            for gid in list(self._focus):
                subs = self._core_scase(self._goal(gid), False)
                new_focus.extend(x.id for x in subs)
            self._focus = new_focus
            return
        focus = list(self._focus)
        if len(focus) == 1 and k != 1:
            g = self._goal(focus[0])
            subs = self._core_scase(g, False)
            focus = [x.id for x in subs]
        branches = item.branches
        if len(focus) > k:
            # fewer branches than goals: the leading goals take no intros
            branches = ((),) * (len(focus) - k) + branches
        if len(focus) != len(branches):
            raise EngineError(
                item.span,
                f"{k} branch(es) for {len(focus)} goal(s)")
        new_focus: list[int] = []
        for gid, branch in zip(focus, branches):
            self._focus = [gid]
            for sub in branch:
                self._item(sub)
            new_focus.extend(self._focus)
        self._focus = new_focus

    def _item_on_goal(self, item: IntroItem, g: Goal) -> list[Goal]:
        k = self.kernel
        match item:
            case IIdent(span, name):
                return self._intro_named(g, name, span)
            case IAnon(span):
                return self._intro_named(g, None, span)
            case IAll(span):
                out = [g]
                while isinstance(out[0].concl, (Forall, Imp, Not)):
                    out = self._intro_named(out[0], None, span)
                return out
            case IDiscard(span):
                return self._intro_discard(g, span)
            case ITriv(span, kind):
                res = last_mile(k, g, kind, self.penv.simpset,
                                self.penv.triv_rules())
                if res is None:
                    return [g]
                subs, val = res
                return self._apply(g, subs, val)
            case IDeep(span, items):
                leaves = self._flatten_top(g, 1)
                save = self._focus
                self._focus = [x.id for x in leaves]
                for sub in items:
                    self._item(sub)
                out = [self._goal(i) for i in self._focus]
                self._focus = save
                return out
            case IView(span, term):
                return self._apply_view(g, term, span)
            case IBuiltinView(span, name):
                for rule in self.penv.rules.lookup("intro"):
                    if rule.name == name:
                        subs, val = rule.action(self, g)
                        return self._apply(g, subs, val)
                raise EngineError(span, f"unknown view [{name}]")
            case IRw(span, direction):
                return self._intro_rw(g, direction, span)
            case IExt(span, name):
                for rule in self.penv.rules.lookup("intro"):
                    if rule.name == name:
                        subs, val = rule.action(self, g)
                        return self._apply(g, subs, val)
                raise EngineError(span, f"no rule for !{name}")
            case ISplit(span, branches):
                return self._split_on_goal(g, branches, span)
            case _:
                raise AssertionError(item)

    def _intro_named(self, g: Goal, name: Optional[str],
                     span: Span) -> list[Goal]:
        c = g.concl
        if not isinstance(c, (Forall, Imp, Not)):
            g = self._expose(g, "concl")
            c = g.concl
        if isinstance(c, Forall):
            n = name or g.fresh((c.hint or "x") + "✝")
            sub, val = intro_var(self.kernel, g, n)
        elif isinstance(c, (Imp, Not)):
            n = name or g.fresh("a✝")
            sub, val = intro_hyp(self.kernel, g, n)
        else:
            raise EngineError(span, "nothing to introduce")
        return self._apply(g, [sub], val)

    def _intro_discard(self, g: Goal, span: Span) -> list[Goal]:
        c = g.concl
        if not isinstance(c, (Forall, Imp, Not)):
            g = self._expose(g, "concl")
            c = g.concl
        k = self.kernel
        if isinstance(c, Forall):
            v = k.fresh_fvar(c.hint or "x", c.var_sort)
            rest = beta_normalize(instantiate(c.body, v))
            if contains_fvar(rest, v.name):
                raise EngineError(span,
                                  "cannot discard: the goal depends on it")
            sub = Goal(g.ctx, rest)

            def val_v(thms: Sequence[Theorem]) -> Theorem:
                (th,) = thms
                return k.prim("forall_intro", (th,), (v.name, v.sort))

            return self._apply(g, [sub], val_v)
        if isinstance(c, Imp):
            prem, rest = c.lhs, c.rhs
        elif isinstance(c, Not):
            prem, rest = c.body, FALSE
        else:
            raise EngineError(span, "nothing to discard")
        sub = Goal(g.ctx, rest)

        def val_h(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            if isinstance(c, Not):
                return k.prim("not_intro", (th,), (prem,)) \
                    if isinstance(rest, FalseP) else th
            return k.prim("imp_intro", (th,), (prem,))

        return self._apply(g, [sub], val_h)

    # -- intro-pattern rewriting (`->` / `<-`) -----------------------------------

    def _intro_rw(self, g: Goal, direction: str, span: Span) -> list[Goal]:
        c = g.concl
        if not isinstance(c, Imp):
            g = self._expose(g, "concl")
            c = g.concl
        if not isinstance(c, Imp) or not isinstance(c.lhs, (Eq, Iff)):
            raise EngineError(span, "the top assumption is not an equation")
        eqn, rest = c.lhs, c.rhs
        k = self.kernel
        lhs, rhs = eqn.lhs, eqn.rhs
        is_iff = isinstance(eqn, Iff)
        if direction == "R2L":
            lhs, rhs = rhs, lhs
        occ_list = _occurrences(lhs, rest, Subst())
        paths = [p for p, _, _ in occ_list]
        if is_iff:
            paths = [p for p in paths if _prop_position(rest, p)]
        if not paths:
            raise EngineError(span, "the equation matches nowhere")
        new_rest = rest
        for p in paths:
            new_rest = replace_at(new_rest, p, rhs)
        sub = Goal(g.ctx, new_rest)

        def validate(thms: Sequence[Theorem]) -> Theorem:
            (th,) = thms
            rule = k.prim("assume", (), (eqn,))
            iff_thm = k.prim("eq_refl", (), (rest,))
            iff_thm = k.prim("rewrite", (rule, iff_thm),
                             (tuple((1,) + p for p in paths), Subst(),
                              direction))
            got = k.prim("iff_bwd", (iff_thm, th), ())
            return k.prim("imp_intro", (got,), (eqn,))

        return self._apply(g, [sub], validate)

    # -- views ------------------------------------------------------------------

    def _apply_view(self, g: Goal, term: STerm, span: Span) -> list[Goal]:
        c = g.concl
        if not isinstance(c, Imp):
            g = self._expose(g, "concl")
            c = g.concl
        if not isinstance(c, Imp):
            raise EngineError(span, "no assumption to view")
        asm, rest = c.lhs, c.rhs
        s = Subst()
        fact = self._resolve_fact(g, term, s)
        metas, ops, core = self._peel(
            beta_normalize(apply_subst(fact.prop, s)))

        attempt: Optional[tuple] = None
        if isinstance(core, Iff):
            for direction in ("fwd", "bwd"):
                side = core.lhs if direction == "fwd" else core.rhs
                other = core.rhs if direction == "fwd" else core.lhs
                try:
                    s2 = unify(side, asm, s)
                except UnifyError:
                    continue
                attempt = ("iff", direction, other, s2,
                           [p for kind, p in ops if kind == "p"], None)
                break
        if attempt is None:
            prems = [p for kind, p in ops if kind == "p"]
            for i, p in enumerate(prems):
                try:
                    s2 = unify(p, asm, s)
                except UnifyError:
                    continue
                # new assumption: the remainder after premise i
                rem = core
                for q in reversed(prems[i + 1:]):
                    rem = Imp(q, rem)
                attempt = ("imp", i, rem, s2, prems[:i], i)
                break
        if attempt is None:
            raise EngineError(span, "the view does not apply")
        kind, which, new_raw, s2, side_prems, upto = attempt
        new_asm = beta_normalize(apply_subst(new_raw, s2))
        side_insts = [beta_normalize(apply_subst(p, s2))
                      for p in side_prems]
        for t in [new_asm, *side_insts]:
            if metas_of(t) or not is_closed(t):
                raise EngineError(span, "could not infer the view's "
                                        "arguments")
        main = Goal(g.ctx, Imp(new_asm, rest))
        trailing = [Goal(g.ctx, p) for p in side_insts]

        def validate(thms: Sequence[Theorem]) -> Theorem:
            k = self.kernel
            child, side = thms[0], list(thms[1:])
            asm_thm = k.prim("assume", (), (asm,))
            th = fact.build(k, s2)
            if kind == "iff":
                # instantiate the full prefix, then pick a direction
                it = iter(side)
                for op, payload in ops:
                    if op == "m":
                        v = beta_normalize(apply_subst(payload, s2))
                        th = k.prim("forall_elim", (th,), (v,))
                    else:
                        th = k.prim("imp_elim", (th, next(it)), ())
                rule = "iff_fwd" if which == "fwd" else "iff_bwd"
                got = k.prim(rule, (th, asm_thm), ())
            else:
                it = iter(side)
                used = 0
                for op, payload in ops:
                    if op == "m":
                        v = beta_normalize(apply_subst(payload, s2))
                        th = k.prim("forall_elim", (th,), (v,))
                    else:
                        if used < upto:
                            th = k.prim("imp_elim", (th, next(it)), ())
                        elif used == upto:
                            th = k.prim("imp_elim", (th, asm_thm), ())
                        else:
                            break
                        used += 1
                got = th
            res = k.prim("imp_elim", (child, got), ())
            return k.prim("imp_intro", (res,), (asm,))

        return self._apply(g, [main] + trailing, validate)

    # -- deep destruction ---------------------------------------------------------

    def _flatten_top(self, g: Goal, n: int) -> list[Goal]:
        """Destruct the top `n` stack items through nested ∃/∧/∨,
        returning the resulting goals (already recorded)."""
        if n == 0:
            return [g]
        k = self.kernel
        c = g.concl
        if isinstance(c, Forall):
            name = g.fresh((c.hint or "x") + "✝f")
            sub, val = intro_var(k, g, name)
            (g2,) = self._apply(g, [sub], val)
            leaves = self._flatten_top(g2, n)
            out = []
            for leaf in leaves:
                back, vb = revert_entry(k, leaf, name)
                out.extend(self._apply(leaf, [back], vb))
            return out
        if not isinstance(c, Imp):
            return [g]
        a, rest = c.lhs, c.rhs
        if isinstance(a, Exists):
            sub, val = _destruct_exists(k, g)
            (g2,) = self._apply(g, [sub], val)
            return self._flatten_top(g2, n)
        if isinstance(a, And):
            sub, val = _destruct_and(k, g)
            (g2,) = self._apply(g, [sub], val)
            return self._flatten_top(g2, n + 1)
        if isinstance(a, TrueP):
            sub, val = _destruct_true(k, g)
            (g2,) = self._apply(g, [sub], val)
            return self._flatten_top(g2, n - 1)
        if isinstance(a, FalseP):
            self._apply(g, [], _destruct_false(k, g))
            return []
        if isinstance(a, Or):
            (ga, gb), val = _destruct_or(k, g)
            out2 = self._apply(g, [ga, gb], val)
            return (self._flatten_top(out2[0], n)
                    + self._flatten_top(out2[1], n))
        head, _ = unapply(a)
        if isinstance(head, Const):
            g2 = self._expose(g, "asm")
            if g2.concl is not g.concl:
                return self._flatten_top(g2, n)
        # opaque assumption: keep it in the telescope
        name = g.fresh("a✝f")
        sub, val = intro_hyp(k, g, name)
        (g2,) = self._apply(g, [sub], val)
        leaves = self._flatten_top(g2, n - 1)
        out = []
        for leaf in leaves:
            back, vb = revert_entry(k, leaf, name)
            out.extend(self._apply(leaf, [back], vb))
        return out

    # -- core actions ---------------------------------------------------------------

    def _core_sapply(self, goal: Goal) -> list[Goal]:
        c = goal.concl
        if not isinstance(c, Imp):
            goal = self._expose(goal, "concl")
            c = goal.concl
        if not isinstance(c, Imp):
            raise ProofError("no assumption to apply")
        fact_prop, rest = c.lhs, c.rhs
        metas, ops, core = self._peel(fact_prop)
        # prefer the fullest peel; shorter peels keep a trailing
        # implication prefix that must appear in the conclusion itself
        best: Optional[tuple[Subst, int]] = None
        for cut in range(len(ops), -1, -1):
            t: Optional[Term] = core
            for op, payload in reversed(ops[cut:]):
                if op == "p":
                    t = Imp(payload, t)
                else:
                    # a forall over a metavariable cannot be re-closed
                    t = None
                    break
            if t is None:
                continue
            try:
                s = unify(t, rest)
            except UnifyError:
                continue
            best = (s, cut)
            break
        if best is None:
            raise ProofError("the top assumption does not apply")
        s, cut = best
        side: list[Term] = []
        for op, payload in ops[:cut]:
            if op == "p":
                inst = beta_normalize(apply_subst(payload, s))
                if metas_of(inst) or not is_closed(inst):
                    raise ProofError("could not infer all arguments")
                side.append(inst)
        subgoals = [Goal(goal.ctx, p) for p in side]

        def validate(thms: Sequence[Theorem]) -> Theorem:
            k = self.kernel
            th = k.prim("assume", (), (fact_prop,))
            it = iter(thms)
            for op, payload in ops[:cut]:
                if op == "m":
                    v = beta_normalize(apply_subst(payload, s))
                    if metas_of(v):
                        raise ProofError("could not infer all arguments")
                    th = k.prim("forall_elim", (th,), (v,))
                else:
                    th = k.prim("imp_elim", (th, next(it)), ())
            return k.prim("imp_intro", (th,), (fact_prop,))

        return self._apply(goal, subgoals, validate)

    def _core_elim(self, goal: Goal,
                   fn: Optional[str]) -> list[Goal]:
        if fn is not None:
            return self._elim_fun(goal, fn)
        c = goal.concl
        if isinstance(c, Forall) and isinstance(c.var_sort, SData):
            return self._elim_data(goal, "induction")
        goal2 = self._expose(goal, "asm") if isinstance(c, Imp) else goal
        c = goal2.concl
        if isinstance(c, Imp):
            head, _ = unapply(c.lhs)
            if isinstance(head, Const) and \
                    self.kernel.sig.inductives.get(head.name) is not None:
                return self._elim_pred(goal2, "induction")
        raise ProofError("nothing to eliminate: the top item is neither "
                         "a datatype variable nor an inductive fact")

    def _core_scase(self, goal: Goal, deep: bool) -> list[Goal]:
        c = goal.concl
        if isinstance(c, Forall) and isinstance(c.var_sort, SData) \
                and not deep:
            return self._elim_data(goal, "cases")
        if not isinstance(c, Imp):
            goal = self._expose(goal, "concl")
            c = goal.concl
        if isinstance(c, Forall) and isinstance(c.var_sort, SData):
            return self._elim_data(goal, "cases")
        if not isinstance(c, Imp):
            raise ProofError("nothing to destruct")
        a = c.lhs
        if isinstance(a, (Exists, And, Or, TrueP, FalseP)):
            if deep:
                return self._scase_deep(goal)
            return self._destruct_step(goal)
        head, _ = unapply(a)
        if isinstance(head, Const):
            ind = self.kernel.sig.inductives.get(head.name)
            if ind is not None and ind.is_prop:
                return self._elim_pred(goal, "cases")
            goal2 = self._expose(goal, "asm")
            if goal2.concl is not goal.concl:
                # the unfold is already recorded; continue on its result
                return self._core_scase(goal2, deep)
        if deep:
            return self._scase_deep(goal)
        raise ProofError("the top assumption is not destructible")

    def _scase_deep(self, goal: Goal) -> list[Goal]:
        return self._flatten_top(goal, 1)

    def _destruct_step(self, goal: Goal) -> list[Goal]:
        k = self.kernel
        a = goal.concl.lhs
        if isinstance(a, Exists):
            sub, val = _destruct_exists(k, goal)
            return self._apply(goal, [sub], val)
        if isinstance(a, And):
            sub, val = _destruct_and(k, goal)
            return self._apply(goal, [sub], val)
        if isinstance(a, TrueP):
            sub, val = _destruct_true(k, goal)
            return self._apply(goal, [sub], val)
        if isinstance(a, FalseP):
            return self._apply(goal, [], _destruct_false(k, goal))
        if isinstance(a, Or):
            (ga, gb), val = _destruct_or(k, goal)
            return self._apply(goal, [ga, gb], val)
        raise ProofError("not destructible")

    def _elim_data(self, goal: Goal, kind: str) -> list[Goal]:
        k = self.kernel
        c = goal.concl
        assert isinstance(c, Forall) and isinstance(c.var_sort, SData)
        s = c.var_sort
        decl = k.sig.inductives.get(s.name)
        if decl is None or decl.is_prop:
            raise ProofError(f"no case scheme for sort {s.name}")
        scheme = k.scheme_of(s.name, kind)
        if decl.svars:
            mapping = tuple(zip(decl.svars, s.args))
            scheme = k.prim("sort_inst", (scheme,), mapping)
        motive = Lam(c.hint, s, c.body)
        th0 = k.prim("forall_elim", (scheme,), (motive,))
        cases = []
        t = th0.concl
        while isinstance(t, Imp):
            cases.append(t.lhs)
            t = t.rhs
        subgoals = [Goal(goal.ctx, case) for case in cases]

        def validate(thms: Sequence[Theorem]) -> Theorem:
            th = th0
            for child in thms:
                th = k.prim("imp_elim", (th, child), ())
            return th

        return self._apply(goal, subgoals, validate)

    def _elim_pred(self, goal: Goal, kind: str) -> list[Goal]:
        k = self.kernel
        c = goal.concl
        assert isinstance(c, Imp)
        asm, rest = c.lhs, c.rhs
        head, args = unapply(asm)
        assert isinstance(head, Const)
        decl = k.sig.inductives[head.name]
        scheme = k.scheme_of(head.name, kind)
        # substitutive motive when every index is a distinct variable
        subst_ok = (all(isinstance(a, FVar) for a in args)
                    and len({a.name for a in args}) == len(args))
        if subst_ok:
            motive = _lam_abstract(rest, list(args))
        else:
            ivars = [k.fresh_fvar("i", check_sorts(a)) for a in args]
            core = rest
            for iv, a in zip(reversed(ivars), reversed(args)):
                core = Imp(Eq(iv.sort, iv, a), core)
            motive = _lam_abstract(core, ivars)
        th0 = k.prim("forall_elim", (scheme,), (motive,))
        cases = []
        t = th0.concl
        while isinstance(t, Imp):
            cases.append(t.lhs)
            t = t.rhs
        # t is now: forall i⃗, pred i⃗ -> motive i⃗
        subgoals = [Goal(goal.ctx, case) for case in cases]

        def validate(thms: Sequence[Theorem]) -> Theorem:
            th = th0
            for child in thms:
                th = k.prim("imp_elim", (th, child), ())
            for a in args:
                th = k.prim("forall_elim", (th,), (a,))
            th = k.prim("imp_elim",
                        (th, k.prim("assume", (), (asm,))), ())
            if not subst_ok:
                for a in args:
                    th = k.prim("imp_elim",
                                (th, k.prim("eq_refl", (), (a,))), ())
            return k.prim("imp_intro", (th,), (asm,))

        return self._apply(goal, subgoals, validate)

    def _elim_fun(self, goal: Goal, fn: str) -> list[Goal]:
        k = self.kernel
        decl = k.sig.recdefs.get(fn)
        if decl is None:
            raise ProofError(f"no recursive definition {fn}")
        arity = 0
        rs = decl.sort
        arg_sorts = []
        from .terms import SArrow
        while isinstance(rs, SArrow):
            arg_sorts.append(rs.dom)
            rs = rs.cod
            arity += 1
        c = goal.concl
        binders: list[tuple[str, Sort]] = []
        t = c
        for _ in range(arity):
            if not isinstance(t, Forall):
                raise ProofError(
                    f"functional induction over {fn} needs {arity} "
                    "leading universals")
            binders.append((t.hint, t.var_sort))
            t = t.body
        # sort instantiation for polymorphic definitions
        from .terms import sort_match
        mapping: dict[str, Sort] = {}
        for expected, (_, actual) in zip(arg_sorts, binders):
            if not sort_match(expected, actual, mapping,
                              set(decl.svars)):
                raise ProofError("argument sorts do not match "
                                 f"the definition of {fn}")
        scheme = k.scheme_of(fn, "fun-induction")
        if mapping:
            scheme = k.prim("sort_inst", (scheme,),
                            tuple(sorted(mapping.items())))
        motive = _foralls_to_lams(c, arity)
        th0 = k.prim("forall_elim", (scheme,), (motive,))
        cases = []
        t2 = th0.concl
        while isinstance(t2, Imp):
            cases.append(t2.lhs)
            t2 = t2.rhs
        subgoals = [Goal(goal.ctx, case) for case in cases]

        def validate(thms: Sequence[Theorem]) -> Theorem:
            th = th0
            for child in thms:
                th = k.prim("imp_elim", (th, child), ())
            return th

        return self._apply(goal, subgoals, validate)

    # -- srw -----------------------------------------------------------------------

    def exec_srw(self, t: TSrw) -> None:
        for item in t.items:
            self._step(item.span,
                       lambda item=item: self._rw_item(item, t.location,
                                                       t.loc_span))
        if self.goals:
            self._focus = [self.goals[0].id]
        else:
            self._focus = []

    def _rw_item(self, item: RwItem, location: Optional[str],
                 loc_span: Optional[Span]) -> None:
        if isinstance(item, RwTriv):
            for g in list(self.goals):
                res = last_mile(self.kernel, g, item.kind,
                                self.penv.simpset, self.penv.triv_rules())
                if res is not None:
                    self._apply(g, *res)
            return
        assert isinstance(item, RwRule)
        goal = self.first_goal()
        s = Subst()
        fact = self._resolve_fact(goal, item.term, s)
        prop = beta_normalize(apply_subst(fact.prop, s))
        metas, ops, core = self._peel(prop)
        prems = [p for kind, p in ops if kind == "p"]
        if not isinstance(core, (Eq, Iff)):
            raise EngineError(item.span, "the fact is not an equation")

        if location is None:
            target = goal.concl
        else:
            target = goal.hyp(location)

        # match/orient/select occurrences
        lhs, rhs = core.lhs, core.rhs
        is_iff = isinstance(core, Iff)
        if item.direction == "R2L":
            lhs, rhs = rhs, lhs
        pat = beta_normalize(apply_subst(lhs, s))
        occ_list = _occurrences(pat, target, s)
        if not occ_list:
            raise EngineError(item.span, "the equation matches nowhere")
        # the first matching occurrence fixes the instance
        _, s0, _ = occ_list[0]
        inst = beta_normalize(apply_subst(lhs, s0))
        sel = [p for (p, _, _) in occ_list
               if alpha_eq(subterm_at(target, p), inst)]
        if is_iff:
            sel = [p for p in sel if _prop_position(target, p)]
        if item.occs is not None:
            for o in item.occs:
                if o < 1 or o > len(sel):
                    raise EngineError(
                        item.span, f"occurrence {o} out of range "
                                   f"(only {len(sel)} match)")
            sel = [sel[o - 1] for o in item.occs]
        if not sel:
            raise EngineError(item.span, "the equation matches nowhere")
        paths = sel
        dst = beta_normalize(apply_subst(rhs, s0))
        side = [beta_normalize(apply_subst(p, s0)) for p in prems]
        for x in [dst, *side]:
            if metas_of(x):
                raise EngineError(item.span,
                                  "could not infer all arguments")
        new_target = target
        for p in paths:
            new_target = replace_at(new_target, p, dst)

        open_inst = not (is_closed(inst) and is_closed(dst))
        if open_inst and side:
            raise EngineError(item.span,
                              "conditional rewriting under binders is "
                              "not supported")
        if open_inst:
            # the kernel rewrites open instances one occurrence at a
            # time from a forall-closed rule; the solved values are
            # re-keyed by the rule's own binder order
            vals = []
            for m in metas:
                v = beta_normalize(apply_subst(m, s0))
                if isinstance(v, Meta):
                    raise EngineError(item.span,
                                      "could not infer all arguments")
                vals.append(v)
            prim_subst = Subst(metas=dict(enumerate(vals)))

        side_goals = [Goal(goal.ctx, p) for p in side]

        def replay(child_proofs: tuple[Theorem, ...]) -> Theorem:
            k = self.kernel
            th = k.prim("eq_refl", (), (target,))
            if open_inst:
                rule = fact.build(k, Subst(sorts=dict(s0.sorts)))
                for p in paths:
                    th = k.prim("rewrite", (rule, th),
                                (((1,) + p,), prim_subst, item.direction))
            else:
                # fully instantiate the rule (side premises come from
                # the trailing subgoals' proofs)
                rule = fact.build(k, s0)
                it = iter(child_proofs)
                for op, payload in ops:
                    if op == "m":
                        v = beta_normalize(apply_subst(payload, s0))
                        rule = k.prim("forall_elim", (rule,), (v,))
                    else:
                        rule = k.prim("imp_elim", (rule, next(it)), ())
                th = k.prim("rewrite", (rule, th),
                            (tuple((1,) + p for p in paths),
                             Subst(), item.direction))
            return th

        if location is None:
            main = Goal(goal.ctx, new_target)

            def validate(thms: Sequence[Theorem]) -> Theorem:
                k = self.kernel
                th = replay(tuple(thms[1:]))
                return k.prim("iff_bwd", (th, thms[0]), ())

            self._apply(goal, [main] + side_goals, validate)
        else:
            idx = next(i for i, e in enumerate(goal.ctx)
                       if isinstance(e, CtxHyp) and e.name == location)
            new_ctx = (goal.ctx[:idx] + (CtxHyp(location, new_target),)
                       + goal.ctx[idx + 1:])
            main = Goal(new_ctx, goal.concl)
            old = target

            def validate_h(thms: Sequence[Theorem]) -> Theorem:
                k = self.kernel
                th = replay(tuple(thms[1:]))
                new_thm = k.prim(
                    "iff_fwd", (th, k.prim("assume", (), (old,))), ())
                return k.prim(
                    "imp_elim",
                    (k.prim("imp_intro", (thms[0],), (new_target,)),
                     new_thm), ())

            self._apply(goal, [main] + side_goals, validate_h)

    # -- exists / split / sby / focus -------------------------------------------

    def _core_exists(self, witnesses: Sequence[STerm]) -> None:
        for w in witnesses:
            goal = self.first_goal()
            c = goal.concl
            if not isinstance(c, Exists):
                goal = self._expose(goal, "concl")
                c = goal.concl
            if not isinstance(c, Exists):
                raise EngineError(sterm_span(w),
                                  "the conclusion is not existential")
            t = self._elab_term(goal, w, expect=c.var_sort)
            body = beta_normalize(instantiate(c.body, t))
            sub = Goal(goal.ctx, body)

            def validate(thms: Sequence[Theorem], c=c, t=t) -> Theorem:
                (th,) = thms
                return self.kernel.prim("exists_intro", (th,), (c, t))

            self._apply(goal, [sub], validate)

    def _core_split(self, span: Span,
                    branches: tuple[tuple[IntroItem, ...], ...]) -> None:
        goal = self.first_goal()
        subs = self._split_on_goal(goal, branches, span)
        self._focus = [g.id for g in subs]

    def _split_on_goal(self, goal: Goal,
                       branches: tuple[tuple[IntroItem, ...], ...],
                       span: Span) -> list[Goal]:
        k = self.kernel
        c = goal.concl
        if not isinstance(c, (And, Iff, TrueP)):
            goal = self._expose(goal, "concl")
            c = goal.concl
        if isinstance(c, TrueP):
            if branches and any(branches):
                raise EngineError(span, "no branches expected here")
            self._apply(goal, [],
                        lambda thms: k.prim("true_intro", (), ()))
            return []
        if isinstance(c, And):
            parts = [c.lhs, c.rhs]

            def val_and(thms: Sequence[Theorem]) -> Theorem:
                return k.prim("and_intro", tuple(thms), ())

            subs = self._apply(goal, [Goal(goal.ctx, p) for p in parts],
                               val_and)
        elif isinstance(c, Iff):
            parts = [Imp(c.lhs, c.rhs), Imp(c.rhs, c.lhs)]

            def val_iff(thms: Sequence[Theorem]) -> Theorem:
                return k.prim("iff_intro", tuple(thms), ())

            subs = self._apply(goal, [Goal(goal.ctx, p) for p in parts],
                               val_iff)
        else:
            # single applicable constructor of an inductive proposition
            from .automation import rule_constructor
            alts = rule_constructor(k, goal)
            if len(alts) != 1:
                raise EngineError(span, "no single applicable constructor")
            subs = self._apply(goal, *alts[0])
        if len(branches) != len(subs):
            raise EngineError(span,
                              f"{len(branches)} branch(es) for "
                              f"{len(subs)} goal(s)")
        save = self._focus
        out: list[int] = []
        for g, branch in zip(subs, branches):
            self._focus = [g.id]
            for sub in branch:
                self._item(sub)
            out.extend(self._focus)
        self._focus = save
        return [self._goal(i) for i in out]

    def _open_below(self, goal_id: int) -> list[Goal]:
        by_id = {g.id: g for g in self.goals}
        out: list[Goal] = []
        seen: set[int] = set()
        stack = [goal_id]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            if i in by_id:
                out.append(by_id[i])
            node = self.forest.nodes.get(i)
            if node is not None:
                stack.extend(node.children)
        return out

    def _closed_below(self, goal_id: int) -> bool:
        return not self._open_below(goal_id)

    def exec_sby(self, span: Span, body: tuple[Tactic, ...]) -> None:
        def fn() -> None:
            target = self.first_goal()
            saved, self._traced = self._traced, False
            try:
                self.run(body)
                for g in self._open_below(target.id):
                    res = last_mile(self.kernel, g, "//",
                                    self.penv.simpset,
                                    self.penv.triv_rules())
                    if res is not None:
                        self._apply(g, *res)
            finally:
                self._traced = saved
            if not self._closed_below(target.id):
                raise ProofError("No applicable tactic")

        self._step(span, fn)

    def exec_focus(self, span: Span, body: tuple[Tactic, ...]) -> None:
        target = self.first_goal()
        self.run(body)
        if not self._closed_below(target.id):
            raise EngineError(span, "the focused goal is not closed")
        self._focus = [self.goals[0].id] if self.goals else []


def run_script(penv: ProofEnv, statement: Term,
               tactics: Sequence[Tactic],
               root: Optional[Goal] = None) -> dict:
    """Run a whole script, collecting the trace; never raises on
    script-level failures."""
    interp = Interp(penv, statement, root)
    error = None
    try:
        interp.run(tactics)
    except EngineError as e:
        error = {"span": e.span, "message": e.message}
    return {"interp": interp, "goals": list(interp.goals),
            "trace": list(interp.trace), "error": error}


# ---------------------------------------------------------------------------
# structural destruction steps (single kernel-justified moves)
# ---------------------------------------------------------------------------


def _destruct_exists(k: Kernel, g: Goal) -> tuple[Goal, Validation]:
    c = g.concl
    assert isinstance(c, Imp) and isinstance(c.lhs, Exists)
    ex, rest = c.lhs, c.rhs
    from .terms import shift
    new_concl = Forall(ex.hint, ex.var_sort,
                       Imp(ex.body, shift(rest, 1)))
    sub = Goal(g.ctx, new_concl)
    eigen = k.fresh_fvar(ex.hint or "x", ex.var_sort)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        inst = beta_normalize(instantiate(ex.body, eigen))
        step = k.prim("forall_elim", (th,), (eigen,))
        step = k.prim("imp_elim",
                      (step, k.prim("assume", (), (inst,))), ())
        got = k.prim("exists_elim",
                     (k.prim("assume", (), (ex,)), step), (eigen.name,))
        return k.prim("imp_intro", (got,), (ex,))

    return sub, validate


def _destruct_and(k: Kernel, g: Goal) -> tuple[Goal, Validation]:
    c = g.concl
    assert isinstance(c, Imp) and isinstance(c.lhs, And)
    a, rest = c.lhs, c.rhs
    sub = Goal(g.ctx, Imp(a.lhs, Imp(a.rhs, rest)))

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        both = k.prim("assume", (), (a,))
        got = k.prim("imp_elim",
                     (th, k.prim("and_elim_l", (both,), ())), ())
        got = k.prim("imp_elim",
                     (got, k.prim("and_elim_r", (both,), ())), ())
        return k.prim("imp_intro", (got,), (a,))

    return sub, validate


def _destruct_true(k: Kernel, g: Goal) -> tuple[Goal, Validation]:
    c = g.concl
    assert isinstance(c, Imp) and isinstance(c.lhs, TrueP)
    sub = Goal(g.ctx, c.rhs)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        return k.prim("imp_intro", (th,), (TRUE,))

    return sub, validate


def _destruct_false(k: Kernel, g: Goal) -> Validation:
    c = g.concl
    assert isinstance(c, Imp) and isinstance(c.lhs, FalseP)
    rest = c.rhs

    def validate(thms: Sequence[Theorem]) -> Theorem:
        got = k.prim("false_elim",
                     (k.prim("assume", (), (FALSE,)),), (rest,))
        return k.prim("imp_intro", (got,), (FALSE,))

    return validate


def _destruct_or(k: Kernel, g: Goal,
                 ) -> tuple[tuple[Goal, Goal], Validation]:
    c = g.concl
    assert isinstance(c, Imp) and isinstance(c.lhs, Or)
    o, rest = c.lhs, c.rhs
    ga = Goal(g.ctx, Imp(o.lhs, rest))
    gb = Goal(g.ctx, Imp(o.rhs, rest))

    def validate(thms: Sequence[Theorem]) -> Theorem:
        tha, thb = thms
        branch_a = k.prim("imp_elim",
                          (tha, k.prim("assume", (), (o.lhs,))), ())
        branch_b = k.prim("imp_elim",
                          (thb, k.prim("assume", (), (o.rhs,))), ())
        got = k.prim("or_elim",
                     (k.prim("assume", (), (o,)), branch_a, branch_b), ())
        return k.prim("imp_intro", (got,), (o,))

    return (ga, gb), validate


# ---------------------------------------------------------------------------
# built-in `/[...]` views
# ---------------------------------------------------------------------------


def _view_swap(interp: Interp, g: Goal) -> tuple[list[Goal], Validation]:
    k = interp.kernel
    g0 = g
    c = g.concl
    if not isinstance(c, (Forall, Imp)):
        raise ProofError("nothing to swap")
    n1 = g.fresh("s✝1")
    s1, v1 = _intro_any(k, g, n1)
    n2 = s1.fresh("s✝2")
    s2, v2 = _intro_any(k, s1, n2)
    s3, v3 = revert_entry(k, s2, n1)
    s4, v4 = revert_entry(k, s3, n2)

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        return v1([v2([v3([v4([th])])])])

    return [s4], validate


def _view_dup(interp: Interp, g: Goal) -> tuple[list[Goal], Validation]:
    k = interp.kernel
    c = g.concl
    if not isinstance(c, Imp):
        raise ProofError("the top item is not an assumption")
    a, rest = c.lhs, c.rhs
    sub = Goal(g.ctx, Imp(a, Imp(a, rest)))

    def validate(thms: Sequence[Theorem]) -> Theorem:
        (th,) = thms
        ha = k.prim("assume", (), (a,))
        got = k.prim("imp_elim", (k.prim("imp_elim", (th, ha), ()), ha), ())
        return k.prim("imp_intro", (got,), (a,))

    return [sub], validate


def _intro_any(k: Kernel, g: Goal, name: str) -> tuple[Goal, Validation]:
    if isinstance(g.concl, Forall):
        return intro_var(k, g, name)
    return intro_hyp(k, g, name)


def default_rule_stack() -> RuleStack:
    rs = RuleStack()
    rs.push(PatternRule("intro", "swap", _view_swap))
    rs.push(PatternRule("intro", "dup", _view_dup))
    return rs


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _occurrences(pat: Term, t: Term, s: Subst,
                 ) -> list[tuple[Path, Subst, int]]:
    """Leftmost-outermost matches of `pat` in `t`, threading an initial
    substitution; sort variables are all treated as flexible."""
    out: list[tuple[Path, Subst, int]] = []

    def go(node: Term, path: Path, depth: int) -> None:
        m = match_fo(pat, node, s, None)
        if m is not None:
            out.append((path, m, depth))
            return
        bump = 1 if isinstance(node, (Lam, Forall, Exists)) else 0
        for i, c in enumerate(children(node)):
            go(c, path + (i,), depth + bump)

    go(t, (), 0)
    return out


def _prop_position(t: Term, path: Path) -> bool:
    node = t
    for i in path:
        ok = isinstance(node, _IFF_OK) or (isinstance(node, Ite) and i == 0)
        if not ok:
            return False
        node = children(node)[i]
    return True


def _replace_term(t: Term, needle: Term, v: FVar) -> Term:
    if alpha_eq(t, needle):
        return v
    cs = children(t)
    if not cs:
        return t
    return with_children(t, tuple(_replace_term(c, needle, v) for c in cs))


def _lam_abstract(body: Term, vars_: list[FVar]) -> Term:
    from .terms import abstract
    t = body
    for v in reversed(vars_):
        t = Lam(v.name, v.sort, abstract(t, v.name))
    return t


def _foralls_to_lams(t: Term, k: int) -> Term:
    if k == 0:
        return t
    assert isinstance(t, Forall)
    return Lam(t.hint, t.var_sort, _foralls_to_lams(t.body, k - 1))


def _meta_sorts(t: Term) -> dict[int, Sort]:
    out: dict[int, Sort] = {}

    def go(x: Term) -> None:
        if isinstance(x, Meta):
            out[x.mid] = x.sort
        for c in children(x):
            go(c)

    go(t)
    return out
