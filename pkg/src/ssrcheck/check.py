"""Checking whole files: declarations, definitions and proof scripts.

One `Checker` holds the evolving state (kernel signature, ambient
variables, simplification rules, extension stack).  Each declaration is
processed independently: a failing declaration is reported and skipped,
later declarations still run against the state built so far.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .automation import AutomationError, SimpRule, SimpSet, \
    default_simpset, rule_of_theorem
from .elab import ElabError, Elaborator, Env, elaborate_prop
from .engine import (EngineError, Interp, ProofEnv, TraceEntry,
                     default_rule_stack)
from .kernel import CtorDecl, Kernel, KernelError
from .parser import (DAttribute, DAxiom, DCtor, DDef, DInductive, DLemma,
                     DReflectInstance, DReflectPragma, DVariable, Decl,
                     ParseError, SBinder, Span, SSArrow, SSIdent, SSort,
                     STerm, parse_file)
from .proofstate import CtxVar, Goal, ProofError, qed
from .terms import (PROP, Forall, FVar, SArrow, SData, Sort, SVar, Term,
                    abstract, free_vars, sort_free_vars)


@dataclass(frozen=True)
class Diagnostic:
    severity: str            # "error" | "warning"
    span: Span
    message: str

    def as_json(self) -> dict:
        return {"severity": self.severity,
                "start": self.span.start, "end": self.span.end,
                "line": self.span.line, "col": self.span.col,
                "end_line": self.span.end_line,
                "end_col": self.span.end_col,
                "message": self.message}


@dataclass
class ScriptRecord:
    """The outcome of one proof script: its trace and leftover goals."""

    name: Optional[str]
    span: Span
    statement: Term
    entries: list[TraceEntry]
    pending: list[Goal]
    ok: bool


@dataclass
class CheckResult:
    checker: "Checker"
    diagnostics: list[Diagnostic]
    scripts: list[ScriptRecord]

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


class Checker:
    def __init__(self) -> None:
        self.kernel = Kernel()
        self.env = Env(self.kernel)
        self.simpset = default_simpset(self.kernel)
        self.rules = default_rule_stack()
        self.diagnostics: list[Diagnostic] = []
        self.scripts: list[ScriptRecord] = []
        self.axiom_names: set[str] = set()

    # -- entry points ---------------------------------------------------------

    def check_source(self, text: str) -> CheckResult:
        decls, parse_errors = parse_file(text)
        for e in parse_errors:
            self._error(e.span, e.message)
        for d in decls:
            try:
                self._decl(d)
            except (ElabError, EngineError, ParseError) as e:
                self._error(e.span, e.message)
            except (KernelError, ProofError, AutomationError) as e:
                self._error(d.span, str(e))
        return CheckResult(self, list(self.diagnostics), list(self.scripts))

    # -- helpers ---------------------------------------------------------------

    def _error(self, span: Span, message: str) -> None:
        self.diagnostics.append(Diagnostic("error", span, message))

    def _warn(self, span: Span, message: str) -> None:
        self.diagnostics.append(Diagnostic("warning", span, message))

    def _penv(self) -> ProofEnv:
        return ProofEnv(self.kernel, self.env, self.simpset, self.rules)

    def _add_simp(self, name: str, span: Span, reverse: bool = False) -> None:
        equations = self.kernel.all_equations()
        if name in equations:
            # a recursive definition: its defining equations become rules
            for i, eq in enumerate(equations[name]):
                self.simpset.add(SimpRule(f"{name}.eq{i}", eq.thm, eq.lhs,
                                          eq.rhs, (), eq.flex_sorts, False,
                                          structural=True),
                                 strict=False)
            return
        thm = self.kernel.sig.lemmas.get(name) \
            or self.kernel.sig.axioms.get(name)
        if thm is None and name in self.kernel.sig.defs:
            thm = self.kernel.unfold_theorem(name)
        if thm is None:
            base, _, suffix = name.rpartition(".")
            if (base in equations and suffix.startswith("eq")
                    and suffix[2:].isdigit()
                    and int(suffix[2:]) < len(equations[base])):
                eq = equations[base][int(suffix[2:])]
                self.simpset.add(SimpRule(name, eq.thm, eq.lhs, eq.rhs, (),
                                          eq.flex_sorts, False,
                                          structural=True),
                                 strict=False)
                return
        if thm is None:
            raise ElabError(span, f"no lemma named {name}")
        flex = frozenset(_stmt_svars(thm.concl))
        try:
            rule = rule_of_theorem(name, thm, flex, reverse=reverse)
            self.simpset.add(rule)
        except AutomationError as e:
            raise ElabError(span, str(e)) from e

    # -- declaration dispatch ----------------------------------------------------

    def _decl(self, d: Decl) -> None:
        match d:
            case DVariable():
                self._variable(d)
            case DInductive():
                self._inductive(d)
            case DDef():
                self._def(d)
            case DAxiom():
                self._axiom(d)
            case DLemma():
                self._lemma(d)
            case DAttribute():
                self._attribute(d)
            case DReflectPragma():
                from .reflection import process_pragma
                process_pragma(self, d)
            case DReflectInstance():
                from .reflection import process_instance
                process_instance(self, d)
            case _:
                raise ElabError(d.span, "unsupported declaration")

    def _variable(self, d: DVariable) -> None:
        el = Elaborator(self.env)
        for b in d.binders:
            if b.kind == "type":
                for n in b.names:
                    if n in self.env.type_vars:
                        raise ElabError(b.span, f"duplicate variable {n}")
                    self.env.type_vars[n] = SVar(n)
            elif b.kind == "deceq":
                (n,) = b.names
                if n not in self.env.type_vars:
                    raise ElabError(b.span, f"unknown type variable {n}")
                self.kernel.sig.decidable_svars.add(n)
                self.axiom_names.add(f"DecidableEq {n}")
            else:
                assert b.sort is not None
                sort = el.elab_sort(b.sort)
                for n in b.names:
                    if n in self.env.term_vars:
                        raise ElabError(b.span, f"duplicate variable {n}")
                    self.env.term_vars[n] = sort

    def _inductive(self, d: DInductive) -> None:
        svars = tuple(n for b in d.params if b.kind == "type"
                      for n in b.names)
        env2 = Env(self.kernel,
                   {**self.env.type_vars, **{n: SVar(n) for n in svars}},
                   self.env.term_vars, dict(self.env.pending_consts))
        el = Elaborator(env2)
        self_sort = SData(d.name, tuple(SVar(v) for v in svars))

        def elab_sort(ssort: SSort) -> Sort:
            if isinstance(ssort, SSArrow):
                return SArrow(elab_sort(ssort.dom), elab_sort(ssort.cod))
            assert isinstance(ssort, SSIdent)
            if ssort.name == d.name:
                args = tuple(elab_sort(a) for a in ssort.args)
                if args != self_sort.args:
                    raise ElabError(ssort.span,
                                    "recursive occurrences must use the "
                                    "declared sort parameters")
                return self_sort
            return el.elab_sort(ssort)

        if d.result is None:
            ctors = []
            for c in d.ctors:
                arg_sorts: list[Sort] = []
                for names, ssort in c.binders:
                    if ssort is None:
                        raise ElabError(c.span, "constructor arguments "
                                                "need a sort")
                    s = elab_sort(ssort)
                    arg_sorts.extend([s] * len(names))
                ctors.append(CtorDecl(c.name, tuple(arg_sorts), None))
            self.kernel.declare_inductive(d.name, svars, ctors)
            return
        rsort = el.elab_sort(d.result)
        index_sorts: list[Sort] = []
        t = rsort
        while isinstance(t, SArrow):
            index_sorts.append(t.dom)
            t = t.cod
        if t != PROP:
            raise ElabError(d.span, "an inductive family must end in Prop")
        from .terms import arrow
        env3 = Env(self.kernel, env2.type_vars, env2.term_vars,
                   {**env2.pending_consts,
                    d.name: (svars, arrow(*index_sorts, PROP))})
        ctors = []
        for c in d.ctors:
            if c.statement is None:
                raise ElabError(c.span, "a predicate constructor needs "
                                        "a statement")
            st: STerm = c.statement
            if c.binders:
                st = SBinder("forall", c.binders, st, c.span)
            stmt = elaborate_prop(env3, st)
            ctors.append(CtorDecl(c.name, (), stmt))
        self.kernel.declare_inductive(d.name, svars, ctors,
                                      tuple(index_sorts), is_prop=True)

    def _def(self, d: DDef) -> None:
        el = Elaborator(self.env)
        params: list[tuple[str, Sort]] = []
        for names, ssort in d.params:
            s = el.elab_sort(ssort)
            params.extend((n, s) for n in names)
        result = el.elab_sort(d.result)
        used: list[str] = []
        for _, s in params:
            used.extend(v for v in sorted(sort_free_vars(s)))
        used.extend(sorted(sort_free_vars(result)))
        svars = tuple(dict.fromkeys(
            v for v in used if v in self.env.type_vars))
        if d.body is not None:
            env2 = Env(self.kernel, self.env.type_vars,
                       {**self.env.term_vars, **dict(params)},
                       dict(self.env.pending_consts))
            from .elab import elaborate_term
            body = elaborate_term(env2, d.body, expect=result)
            self.kernel.declare_def(d.name, svars, params, result, body)
        else:
            from .elab import elaborate_clause
            from .terms import arrow
            arg_sorts = tuple(s for _, s in params)
            env2 = Env(self.kernel, self.env.type_vars, self.env.term_vars,
                       {**self.env.pending_consts,
                        d.name: (svars, arrow(*arg_sorts, result))})
            clauses = []
            for pats_s, rhs_s in d.clauses:
                pats, rhs = elaborate_clause(env2, list(pats_s),
                                             list(arg_sorts), rhs_s, result)
                clauses.append((pats, rhs))
            self.kernel.declare_recdef(d.name, svars, arg_sorts, result,
                                       clauses)
        if "simp" in d.attrs:
            self._add_simp(d.name, d.span)

    def _close_over_ambient(self, stmt: Term) -> tuple[Term, Goal]:
        """Generalize a statement over the ambient variables it uses;
        returns the closed statement and the root goal carrying those
        variables in its context."""
        used = free_vars(stmt)
        ctx = tuple(CtxVar(n, FVar(n, s))
                    for n, s in self.env.term_vars.items() if n in used)
        closed = stmt
        for e in reversed(ctx):
            closed = Forall(e.name, e.fvar.sort,
                            abstract(closed, e.name))
        return closed, Goal(ctx, stmt)

    def _axiom(self, d: DAxiom) -> None:
        stmt = elaborate_prop(self.env, d.statement)
        closed, _ = self._close_over_ambient(stmt)
        self.kernel.declare_axiom(d.name, closed)
        self.axiom_names.add(d.name)

    def _lemma(self, d: DLemma) -> None:
        stmt = elaborate_prop(self.env, d.statement)
        closed, root = self._close_over_ambient(stmt)
        # the lemma's own binders start out in the context
        ctx = list(root.ctx)
        concl = root.concl
        from .terms import beta_normalize, instantiate
        for n in d.binder_names:
            if not isinstance(concl, Forall):
                raise ElabError(d.span, "binder/statement mismatch")
            fv = FVar(n, concl.var_sort)
            ctx.append(CtxVar(n, fv))
            concl = beta_normalize(instantiate(concl.body, fv))
        root = Goal(tuple(ctx), concl)
        interp = Interp(self._penv(), closed, root)
        error: Optional[tuple[Span, str]] = None
        try:
            interp.run(d.script)
        except EngineError as e:
            error = (e.span, e.message)
        ok = error is None and not interp.goals
        self.scripts.append(ScriptRecord(d.name, d.span, stmt,
                                         list(interp.trace),
                                         list(interp.goals), ok))
        if error is not None:
            self._error(*error)
            return
        if interp.goals:
            self._error(d.by_span,
                        f"unfinished proof: {len(interp.goals)} goal(s) "
                        "remain")
            return
        thm = qed(self.kernel, closed, interp.root, interp.forest,
                  frozenset(self.axiom_names))
        if d.name is not None:
            self.kernel.register_lemma(d.name, thm)
            if "simp" in d.attrs:
                self._add_simp(d.name, d.span)

    def _attribute(self, d: DAttribute) -> None:
        if d.attr != "simp":
            raise ElabError(d.span, f"unknown attribute {d.attr}")
        self._add_simp(d.target, d.span)


def _stmt_svars(t: Term) -> set[str]:
    from .engine import sort_free_vars_of_theorem

    class _T:  # minimal shim: reuse the theorem walker on a bare term
        concl = t
        hyps = ()

    return sort_free_vars_of_theorem(_T())  # type: ignore[arg-type]


def check_source(text: str) -> CheckResult:
    return Checker().check_source(text)


def check_file(path: str) -> CheckResult:
    with open(path, encoding="utf-8") as f:
        return check_source(f.read())


def source_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
