"""Term and sort representations plus the syntactic operations everything
else is built on: substitution, matching, unification, occurrence search
and path-based replacement.

Bound variables are de Bruijn indices (`BVar`); the name carried by a
binder is only a display hint and never affects equality.  Free variables
(`FVar`) are named and carry their sort.  Constants embed their fully
instantiated sort so that terms are self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------


class Sort:
    """Base class for sorts."""

    __slots__ = ()


@dataclass(frozen=True)
class SProp(Sort):
    """The sort of propositions."""

    def __repr__(self) -> str:
        return "Prop"


@dataclass(frozen=True)
class SVar(Sort):
    """A type variable (prenex polymorphism only)."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class SData(Sort):
    """A declared datatype, possibly applied to sort arguments."""

    name: str
    args: tuple[Sort, ...] = ()

    def __repr__(self) -> str:
        if not self.args:
            return self.name
        return f"({self.name} {' '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class SArrow(Sort):
    """Function sort `dom -> cod`."""

    dom: Sort
    cod: Sort

    def __repr__(self) -> str:
        return f"({self.dom!r} -> {self.cod!r})"


PROP = SProp()
BOOL = SData("Bool")
NAT = SData("Nat")


def list_sort(elem: Sort) -> Sort:
    return SData("List", (elem,))


def arrow(*sorts: Sort) -> Sort:
    """Right-nested arrow sort from the given components."""
    out = sorts[-1]
    for s in reversed(sorts[:-1]):
        out = SArrow(s, out)
    return out


def sort_free_vars(s: Sort) -> set[str]:
    match s:
        case SVar(name):
            return {name}
        case SData(_, args):
            out: set[str] = set()
            for a in args:
                out |= sort_free_vars(a)
            return out
        case SArrow(dom, cod):
            return sort_free_vars(dom) | sort_free_vars(cod)
        case _:
            return set()


def sort_subst(s: Sort, m: dict[str, Sort]) -> Sort:
    if not m:
        return s
    match s:
        case SVar(name):
            return m.get(name, s)
        case SData(name, args):
            return SData(name, tuple(sort_subst(a, m) for a in args))
        case SArrow(dom, cod):
            return SArrow(sort_subst(dom, m), sort_subst(cod, m))
        case _:
            return s


def sort_match(pat: Sort, tgt: Sort, out: dict[str, Sort],
               flex: Optional[set[str]] = None) -> bool:
    """One-way matching of ``pat`` against ``tgt``.

    Variables of ``pat`` listed in ``flex`` (all of them when ``flex`` is
    None) may be bound in ``out``; bindings already present must agree.
    """
    match pat:
        case SVar(name) if flex is None or name in flex:
            if name in out:
                return out[name] == tgt
            out[name] = tgt
            return True
        case SVar(_):
            return pat == tgt
        case SData(name, args):
            return (isinstance(tgt, SData) and tgt.name == name
                    and len(tgt.args) == len(args)
                    and all(sort_match(p, t, out, flex)
                            for p, t in zip(args, tgt.args)))
        case SArrow(dom, cod):
            return (isinstance(tgt, SArrow)
                    and sort_match(dom, tgt.dom, out, flex)
                    and sort_match(cod, tgt.cod, out, flex))
        case _:
            return pat == tgt


def sort_unify(a: Sort, b: Sort, out: dict[str, Sort]) -> bool:
    """Two-way unification of sorts; solutions accumulate in ``out``."""
    a = sort_subst(a, out)
    b = sort_subst(b, out)
    if a == b:
        return True
    if isinstance(a, SVar):
        if a.name in sort_free_vars(b):
            return False
        out[a.name] = b
        # keep substitution idempotent
        for k in list(out):
            out[k] = sort_subst(out[k], {a.name: b})
        return True
    if isinstance(b, SVar):
        return sort_unify(b, a, out)
    if isinstance(a, SData) and isinstance(b, SData):
        if a.name != b.name or len(a.args) != len(b.args):
            return False
        return all(sort_unify(x, y, out) for x, y in zip(a.args, b.args))
    if isinstance(a, SArrow) and isinstance(b, SArrow):
        return sort_unify(a.dom, b.dom, out) and sort_unify(a.cod, b.cod, out)
    return False


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class BVar(Term):
    """Bound variable, de Bruijn index."""

    index: int


@dataclass(frozen=True)
class FVar(Term):
    """Free (context) variable."""

    name: str
    sort: Sort


@dataclass(frozen=True)
class Meta(Term):
    """Unification metavariable."""

    mid: int
    sort: Sort


@dataclass(frozen=True)
class Const(Term):
    """A declared constant with its fully instantiated sort."""

    name: str
    sort: Sort


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Lam(Term):
    hint: str = field(compare=False)
    var_sort: Sort
    body: Term


@dataclass(frozen=True)
class Forall(Term):
    hint: str = field(compare=False)
    var_sort: Sort
    body: Term


@dataclass(frozen=True)
class Exists(Term):
    hint: str = field(compare=False)
    var_sort: Sort
    body: Term


@dataclass(frozen=True)
class Imp(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class And(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Or(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Iff(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not(Term):
    body: Term


@dataclass(frozen=True)
class Eq(Term):
    sort: Sort
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class TrueP(Term):
    pass


@dataclass(frozen=True)
class FalseP(Term):
    pass


@dataclass(frozen=True)
class Ite(Term):
    """`if cond then a else b`; the condition is a Bool term or a
    decidable proposition."""

    cond: Term
    then: Term
    els: Term


TRUE = TrueP()
FALSE = FalseP()


def apps(fn: Term, *args: Term) -> Term:
    out = fn
    for a in args:
        out = App(out, a)
    return out


def unapply(t: Term) -> tuple[Term, list[Term]]:
    """Split `f a1 .. an` into head and argument list."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

Path = tuple[int, ...]

_BINDER = (Lam, Forall, Exists)


def children(t: Term) -> tuple[Term, ...]:
    match t:
        case App(fn, a):
            return (fn, a)
        case Lam(_, _, b) | Forall(_, _, b) | Exists(_, _, b):
            return (b,)
        case Imp(a, b) | And(a, b) | Or(a, b) | Iff(a, b):
            return (a, b)
        case Not(a):
            return (a,)
        case Eq(_, a, b):
            return (a, b)
        case Ite(c, x, y):
            return (c, x, y)
        case _:
            return ()


def with_children(t: Term, cs: tuple[Term, ...]) -> Term:
    match t:
        case App(_, _):
            return App(cs[0], cs[1])
        case Lam(h, s, _):
            return Lam(h, s, cs[0])
        case Forall(h, s, _):
            return Forall(h, s, cs[0])
        case Exists(h, s, _):
            return Exists(h, s, cs[0])
        case Imp(_, _):
            return Imp(cs[0], cs[1])
        case And(_, _):
            return And(cs[0], cs[1])
        case Or(_, _):
            return Or(cs[0], cs[1])
        case Iff(_, _):
            return Iff(cs[0], cs[1])
        case Not(_):
            return Not(cs[0])
        case Eq(s, _, _):
            return Eq(s, cs[0], cs[1])
        case Ite(_, _, _):
            return Ite(cs[0], cs[1], cs[2])
        case _:
            raise ValueError(f"node has no children: {t!r}")


def subterm_at(t: Term, path: Path) -> Term:
    for i in path:
        cs = children(t)
        if i >= len(cs):
            raise KeyError(f"invalid path {path} in term")
        t = cs[i]
    return t


def binder_depth_at(t: Term, path: Path) -> int:
    """Number of binders crossed while following ``path``."""
    depth = 0
    for i in path:
        if isinstance(t, _BINDER):
            depth += 1
        t = children(t)[i]
    return depth


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    cs = list(children(t))
    cs[path[0]] = replace_at(cs[path[0]], path[1:], new)
    return with_children(t, tuple(cs))


def replace_at_paths(t: Term, repl: dict[Path, Term]) -> Term:
    """Replace several disjoint paths at once."""
    for path in sorted(repl, key=len, reverse=True):
        t = replace_at(t, path, repl[path])
    return t


# ---------------------------------------------------------------------------
# de Bruijn plumbing
# ---------------------------------------------------------------------------


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    if by == 0:
        return t
    match t:
        case BVar(i):
            return BVar(i + by) if i >= cutoff else t
        case FVar(_, _) | Const(_, _) | Meta(_, _) | TrueP() | FalseP():
            return t
        case Lam(_, _, _) | Forall(_, _, _) | Exists(_, _, _):
            body = shift(children(t)[0], by, cutoff + 1)
            return with_children(t, (body,))
        case _:
            return with_children(
                t, tuple(shift(c, by, cutoff) for c in children(t)))


def loose_bvars(t: Term, cutoff: int = 0) -> set[int]:
    """Indices (relative to the term root) of unbound bound-variables."""
    out: set[int] = set()

    def go(t: Term, c: int) -> None:
        match t:
            case BVar(i):
                if i >= c:
                    out.add(i - c)
            case Lam(_, _, b) | Forall(_, _, b) | Exists(_, _, b):
                go(b, c + 1)
            case _:
                for ch in children(t):
                    go(ch, c)

    go(t, cutoff)
    return out


def is_closed(t: Term) -> bool:
    return not loose_bvars(t)


def instantiate(body: Term, arg: Term) -> Term:
    """Substitute ``arg`` for bound variable 0 of ``body`` (the body of a
    binder), shifting remaining indices down."""

    def go(t: Term, depth: int) -> Term:
        match t:
            case BVar(i):
                if i == depth:
                    return shift(arg, depth)
                if i > depth:
                    return BVar(i - 1)
                return t
            case FVar(_, _) | Const(_, _) | Meta(_, _) | TrueP() | FalseP():
                return t
            case Lam(_, _, _) | Forall(_, _, _) | Exists(_, _, _):
                return with_children(t, (go(children(t)[0], depth + 1),))
            case _:
                return with_children(
                    t, tuple(go(c, depth) for c in children(t)))

    return go(body, 0)


def abstract(t: Term, name: str) -> Term:
    """Turn occurrences of free variable ``name`` into bound variable 0
    (to be placed immediately under a new binder)."""

    def go(t: Term, depth: int) -> Term:
        match t:
            case FVar(n, _):
                return BVar(depth) if n == name else t
            case BVar(i):
                return BVar(i + 1) if i >= depth else t
            case Const(_, _) | Meta(_, _) | TrueP() | FalseP():
                return t
            case Lam(_, _, _) | Forall(_, _, _) | Exists(_, _, _):
                return with_children(t, (go(children(t)[0], depth + 1),))
            case _:
                return with_children(
                    t, tuple(go(c, depth) for c in children(t)))

    return go(t, 0)


def free_vars(t: Term) -> dict[str, Sort]:
    out: dict[str, Sort] = {}

    def go(t: Term) -> None:
        match t:
            case FVar(name, sort):
                out[name] = sort
            case _:
                for c in children(t):
                    go(c)

    go(t)
    return out


def metas_of(t: Term) -> dict[int, Sort]:
    out: dict[int, Sort] = {}

    def go(t: Term) -> None:
        match t:
            case Meta(mid, sort):
                out[mid] = sort
            case _:
                for c in children(t):
                    go(c)

    go(t)
    return out


def contains_fvar(t: Term, name: str) -> bool:
    return name in free_vars(t)


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


@dataclass
class Subst:
    """A combined substitution: metavariable assignments, free-variable
    assignments and sort-variable assignments."""

    metas: dict[int, Term] = field(default_factory=dict)
    fvars: dict[str, Term] = field(default_factory=dict)
    sorts: dict[str, Sort] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.metas or self.fvars or self.sorts)

    def copy(self) -> "Subst":
        return Subst(dict(self.metas), dict(self.fvars), dict(self.sorts))


def apply_subst(t: Term, s: Subst, depth: int = 0) -> Term:
    """Apply a substitution.  Replacement terms are treated as living at
    the root; their loose bound variables are shifted when substituted
    under binders, so capture cannot occur."""
    match t:
        case Meta(mid, msort):
            if mid in s.metas:
                # bindings are already on the target side: chase the
                # remaining meta/fvar assignments but leave their sort
                # variables alone (they may share names with the
                # pattern's flexible sorts)
                inner = Subst(s.metas, s.fvars, {}) if s.sorts else s
                return shift(apply_subst(s.metas[mid], inner, 0), depth)
            if s.sorts:
                return Meta(mid, sort_subst(msort, s.sorts))
            return t
        case FVar(name, fsort):
            if name in s.fvars:
                inner = Subst(s.metas, s.fvars, {}) if s.sorts else s
                return shift(apply_subst(s.fvars[name], inner, 0), depth)
            if s.sorts:
                return FVar(name, sort_subst(fsort, s.sorts))
            return t
        case Const(name, csort):
            if s.sorts:
                return Const(name, sort_subst(csort, s.sorts))
            return t
        case BVar(_) | TrueP() | FalseP():
            return t
        case Lam(h, vs, b):
            return Lam(h, sort_subst(vs, s.sorts), apply_subst(b, s, depth + 1))
        case Forall(h, vs, b):
            return Forall(h, sort_subst(vs, s.sorts),
                          apply_subst(b, s, depth + 1))
        case Exists(h, vs, b):
            return Exists(h, sort_subst(vs, s.sorts),
                          apply_subst(b, s, depth + 1))
        case Eq(es, a, b):
            return Eq(sort_subst(es, s.sorts), apply_subst(a, s, depth),
                      apply_subst(b, s, depth))
        case _:
            return with_children(
                t, tuple(apply_subst(c, s, depth) for c in children(t)))


def subst_fvar(t: Term, name: str, value: Term) -> Term:
    return apply_subst(t, Subst(fvars={name: value}))


# ---------------------------------------------------------------------------
# Beta normalisation
# ---------------------------------------------------------------------------


def beta_normalize(t: Term) -> Term:
    """Reduce all beta redexes (`(fun x => b) a`)."""
    match t:
        case App(fn, arg):
            fn2 = beta_normalize(fn)
            arg2 = beta_normalize(arg)
            if isinstance(fn2, Lam):
                return beta_normalize(instantiate(fn2.body, arg2))
            return App(fn2, arg2)
        case BVar(_) | FVar(_, _) | Const(_, _) | Meta(_, _) | TrueP() | FalseP():
            return t
        case _:
            return with_children(
                t, tuple(beta_normalize(c) for c in children(t)))


def alpha_eq(a: Term, b: Term) -> bool:
    """Alpha equivalence.  With de Bruijn indices and display hints
    excluded from equality this is plain structural equality."""
    return a == b


# ---------------------------------------------------------------------------
# Sort computation
# ---------------------------------------------------------------------------


class SortError(Exception):
    pass


def sort_of(t: Term, env: Optional[list[Sort]] = None) -> Sort:
    """Compute the sort of a term.  ``env`` lists binder sorts, innermost
    first."""
    env = env if env is not None else []
    match t:
        case BVar(i):
            if i >= len(env):
                raise SortError(f"loose bound variable {i}")
            return env[i]
        case FVar(_, s) | Meta(_, s) | Const(_, s):
            return s
        case App(fn, _):
            fs = sort_of(fn, env)
            if not isinstance(fs, SArrow):
                raise SortError(f"application head is not a function: {fs!r}")
            return fs.cod
        case Lam(_, vs, b):
            return SArrow(vs, sort_of(b, [vs] + env))
        case Forall(_, vs, b) | Exists(_, vs, b):
            _ = sort_of(children(t)[0], [vs] + env)
            return PROP
        case Imp(_, _) | And(_, _) | Or(_, _) | Iff(_, _) | Not(_):
            return PROP
        case Eq(_, _, _):
            return PROP
        case TrueP() | FalseP():
            return PROP
        case Ite(_, a, _):
            return sort_of(a, env)
        case _:
            raise SortError(f"unknown term node {t!r}")


def check_sorts(t: Term, env: Optional[list[Sort]] = None) -> Sort:
    """Like :func:`sort_of` but verifies the whole tree (argument sorts of
    applications, equality operand sorts, ...)."""
    env = env if env is not None else []
    match t:
        case App(fn, arg):
            fs = check_sorts(fn, env)
            if not isinstance(fs, SArrow):
                raise SortError(f"application head is not a function: {fs!r}")
            ars = check_sorts(arg, env)
            if ars != fs.dom:
                raise SortError(f"argument sort {ars!r} != expected {fs.dom!r}")
            return fs.cod
        case Lam(_, vs, b):
            return SArrow(vs, check_sorts(b, [vs] + env))
        case Forall(_, vs, b) | Exists(_, vs, b):
            bs = check_sorts(children(t)[0], [vs] + env)
            if bs != PROP:
                raise SortError("quantifier body must be a proposition")
            return PROP
        case Imp(a, b) | And(a, b) | Or(a, b) | Iff(a, b):
            for side in (a, b):
                if check_sorts(side, env) != PROP:
                    raise SortError("connective operand must be a proposition")
            return PROP
        case Not(a):
            if check_sorts(a, env) != PROP:
                raise SortError("negation operand must be a proposition")
            return PROP
        case Eq(s, a, b):
            if check_sorts(a, env) != s or check_sorts(b, env) != s:
                raise SortError("equality operand sort mismatch")
            if s == PROP:
                raise SortError("propositional equality must be an iff")
            return PROP
        case Ite(c, a, b):
            cs = check_sorts(c, env)
            if cs not in (BOOL, PROP):
                raise SortError("ite condition must be Bool or Prop")
            asort = check_sorts(a, env)
            if check_sorts(b, env) != asort:
                raise SortError("ite branch sorts differ")
            return asort
        case _:
            return sort_of(t, env)


# ---------------------------------------------------------------------------
# First-order matching
# ---------------------------------------------------------------------------


def match_fo(pat: Term, tgt: Term, subst: Optional[Subst] = None,
             flex_sorts: Optional[set[str]] = None) -> Optional[Subst]:
    """Match ``pat`` (containing metavariables) against ``tgt``.

    Returns the extending substitution or None.  Sort variables of the
    pattern listed in ``flex_sorts`` may be instantiated.  Metavariables
    may be bound to target subterms containing loose bound variables; the
    caller is responsible for interpreting those in the right frame.
    """
    s = subst.copy() if subst is not None else Subst()

    def go(p: Term, t: Term) -> bool:
        match p:
            case Meta(mid, msort):
                if mid in s.metas:
                    return s.metas[mid] == t
                if not loose_bvars(t):
                    # reject bindings whose sort cannot agree; open
                    # targets are the caller's responsibility
                    try:
                        tsort = check_sorts(t)
                    except SortError:
                        tsort = None
                    if tsort is not None and not sort_match(
                            msort, tsort, s.sorts, flex_sorts):
                        return False
                s.metas[mid] = t
                return True
            case BVar(i):
                return isinstance(t, BVar) and t.index == i
            case FVar(name, fsort):
                return (isinstance(t, FVar) and t.name == name
                        and sort_match(fsort, t.sort, s.sorts, flex_sorts))
            case Const(name, csort):
                return (isinstance(t, Const) and t.name == name
                        and sort_match(csort, t.sort, s.sorts, flex_sorts))
            case TrueP():
                return isinstance(t, TrueP)
            case FalseP():
                return isinstance(t, FalseP)
            case Eq(es, a, b):
                return (isinstance(t, Eq)
                        and sort_match(es, t.sort, s.sorts, flex_sorts)
                        and go(a, t.lhs) and go(b, t.rhs))
            case Lam(_, vs, b) | Forall(_, vs, b) | Exists(_, vs, b):
                if type(t) is not type(p):
                    return False
                if not sort_match(vs, t.var_sort, s.sorts, flex_sorts):  # type: ignore[attr-defined]
                    return False
                return go(b, children(t)[0])
            case _:
                if type(t) is not type(p):
                    return False
                pcs, tcs = children(p), children(t)
                return len(pcs) == len(tcs) and all(
                    go(pc, tc) for pc, tc in zip(pcs, tcs))

    if go(pat, tgt):
        return s
    return None


# ---------------------------------------------------------------------------
# Occurrence search
# ---------------------------------------------------------------------------


def find_occurrences(pat: Term, t: Term,
                     flex_sorts: Optional[set[str]] = None,
                     ) -> list[tuple[Path, Subst, int]]:
    """All matches of ``pat`` in ``t`` in leftmost-outermost pre-order.

    Returns (path, substitution, binder-depth) triples, 0-indexed in list
    order (display occurrence numbers are 1-indexed).  Subterms below a
    matched root are not searched again.
    """
    out: list[tuple[Path, Subst, int]] = []

    def go(node: Term, path: Path, depth: int) -> None:
        m = match_fo(pat, node, None, flex_sorts)
        if m is not None:
            out.append((path, m, depth))
            return
        cs = children(node)
        bump = 1 if isinstance(node, _BINDER) else 0
        for i, c in enumerate(cs):
            go(c, path + (i,), depth + bump)

    go(t, (), 0)
    return out


# ---------------------------------------------------------------------------
# Unification (first-order plus the pattern fragment)
# ---------------------------------------------------------------------------


class UnifyError(Exception):
    """Raised when two terms do not unify, or when the problem falls
    outside the supported fragment."""

    def __init__(self, msg: str, out_of_fragment: bool = False):
        super().__init__(msg)
        self.out_of_fragment = out_of_fragment


def _occurs(mid: int, t: Term) -> bool:
    return mid in metas_of(t)


def unify(a: Term, b: Term, subst: Optional[Subst] = None) -> Subst:
    """Unify two terms.  Metavariables may appear on either side.

    Handles first-order problems plus the Miller pattern fragment (a
    metavariable applied to distinct variables).  Anything outside that
    raises :class:`UnifyError` with ``out_of_fragment=True`` rather than
    guessing a solution.
    """
    s = subst.copy() if subst is not None else Subst()

    def resolve(t: Term) -> Term:
        t = beta_normalize(apply_subst(t, s))
        return t

    def flex_pattern(t: Term) -> Optional[tuple[Meta, list[Term]]]:
        head, args = unapply(t)
        if not isinstance(head, Meta):
            return None
        seen: set[object] = set()
        for arg in args:
            key: object
            if isinstance(arg, BVar):
                key = ("b", arg.index)
            elif isinstance(arg, FVar):
                key = ("f", arg.name)
            else:
                return None
            if key in seen:
                return None
            seen.add(key)
        return head, args

    def bind(m: Meta, t: Term) -> None:
        if isinstance(t, Meta) and t.mid == m.mid:
            return
        if _occurs(m.mid, t):
            raise UnifyError(f"occurs check failed for ?{m.mid}")
        s.metas[m.mid] = t

    def solve_pattern(m: Meta, args: list[Term], rhs: Term) -> None:
        # lambda-abstract rhs over the argument variables
        body = rhs
        for arg in reversed(args):
            if isinstance(arg, FVar):
                body = Lam(arg.name, arg.sort, abstract(body, arg.name))
            else:
                raise UnifyError(
                    "pattern unification over bound variables unsupported",
                    out_of_fragment=True)
        if _occurs(m.mid, body):
            raise UnifyError(f"occurs check failed for ?{m.mid}")
        s.metas[m.mid] = body

    def go(x: Term, y: Term) -> None:
        x, y = resolve(x), resolve(y)
        if x == y:
            return
        if isinstance(x, Meta):
            bind(x, y)
            return
        if isinstance(y, Meta):
            bind(y, x)
            return
        px, py = flex_pattern(x), flex_pattern(y)
        if px is not None:
            if px[1]:
                solve_pattern(px[0], px[1], y)
                return
        if py is not None:
            if py[1]:
                solve_pattern(py[0], py[1], x)
                return
        match (x, y):
            case (Const(n1, s1), Const(n2, s2)):
                if n1 != n2 or not sort_unify(s1, s2, s.sorts):
                    raise UnifyError(f"constant clash {n1}/{n2}")
            case (Eq(s1, a1, b1), Eq(s2, a2, b2)):
                if not sort_unify(s1, s2, s.sorts):
                    raise UnifyError("equality sort clash")
                go(a1, a2)
                go(b1, b2)
            case _ if type(x) is type(y):
                if isinstance(x, _BINDER):
                    if not sort_unify(x.var_sort, y.var_sort, s.sorts):  # type: ignore[attr-defined]
                        raise UnifyError("binder sort clash")
                cx, cy = children(x), children(y)
                if len(cx) != len(cy):
                    raise UnifyError("arity mismatch")
                if not cx:
                    raise UnifyError(f"clash: {x!r} vs {y!r}")
                for a2, b2 in zip(cx, cy):
                    go(a2, b2)
            case _:
                head_x, _ = unapply(x)
                head_y, _ = unapply(y)
                if isinstance(head_x, Meta) or isinstance(head_y, Meta):
                    raise UnifyError(
                        "higher-order unification outside the pattern "
                        "fragment", out_of_fragment=True)
                raise UnifyError(f"clash: {x!r} vs {y!r}")

    go(a, b)
    return s
