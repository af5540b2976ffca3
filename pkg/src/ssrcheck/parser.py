"""Lexer and parser for `.ssr` files: declarations, terms and tactic
scripts.

Every token carries a byte-precise span; the parser reports errors at
the offending token's span only.  Pattern sequences after `=>` (and the
item list of `srw`) follow an offside rule anchored at the governing
keyword's column: a continuation line belongs to the sequence only when
it is indented strictly past that column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


# ---------------------------------------------------------------------------
# Spans and tokens
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int
    col: int
    end_line: int
    end_col: int

    def merge(self, other: "Span") -> "Span":
        a, b = (self, other) if self.start <= other.start else (other, self)
        return Span(a.start, max(a.end, b.end), a.line, a.col,
                    b.end_line if b.end >= a.end else a.end_line,
                    max(b.end_col, a.end_col) if b.end_line == a.end_line
                    else (b.end_col if b.end >= a.end else a.end_col))

    def covers(self, line: int, col: int) -> bool:
        if (line, col) < (self.line, self.col):
            return False
        return (line, col) < (self.end_line, self.end_col) or (
            line == self.end_line and col < self.end_col)

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end,
                "line": self.line, "col": self.col,
                "endLine": self.end_line, "endCol": self.end_col}


@dataclass(frozen=True)
class Token:
    value: str       # canonical text (unicode operators normalised)
    text: str        # original source text
    kind: str        # "ident" | "num" | "sym" | "eof"
    span: Span


class ParseError(Exception):
    def __init__(self, span: Span, message: str) -> None:
        super().__init__(message)
        self.span = span
        self.message = message


# Multi-character symbols, longest first (maximal munch).
_SYMBOLS = [
    "//==",
    "//=", "/==", "<->",
    "//", "/=", "=>", "->", "<-", ":=", "![", "/[", "/\\", "\\/", "::",
    "<=", "<[", "]>",
    "[", "]", "(", ")", "{", "}", "|", ":", ",", "?", "*", "_", "=",
    "<", "+", "-", "/", "~", "!", ";", "@", "⟨", "⟩", "∈",
]

_UNICODE_ALIASES = {
    "→": "->", "↔": "<->", "∧": "/\\", "∨": "\\/", "¬": "~",
    "≤": "<=", "−": "-", "∀": "forall", "∃": "exists", "λ": "fun",
    "⊢": "|-",
}


def _ident_start(ch: str) -> bool:
    return ch.isalpha() and ch not in "∀∃λ¬∧∨"


def _ident_char(ch: str) -> bool:
    return ch != "✝" and (ch.isalnum() or ch in "_'.")


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source)

    def advance(text: str) -> Span:
        nonlocal i, line, col
        start, sline, scol = i, line, col
        for ch in text:
            i += 1
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        return Span(start, i, sline, scol, line, col)

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            continue
        if source.startswith("--", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            advance(source[i:j])
            continue
        if ch == "✝":
            raise ParseError(Span(i, i + 1, line, col, line, col + 1),
                             "reserved character in source")
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            toks.append(Token(text, text, "num", advance(text)))
            continue
        if ch in _UNICODE_ALIASES:
            toks.append(Token(_UNICODE_ALIASES[ch], ch, "sym"
                              if _UNICODE_ALIASES[ch] not in
                              ("forall", "exists", "fun") else "ident",
                              advance(ch)))
            continue
        if source.startswith("#reflect", i):
            toks.append(Token("#reflect", "#reflect", "ident",
                              advance("#reflect")))
            continue
        if _ident_start(ch):
            j = i
            while j < n and _ident_char(source[j]):
                j += 1
            text = source[i:j]
            if text == "scase" and j < n and source[j] == "!" \
                    and not source.startswith("![", j):
                text = "scase!"
            toks.append(Token(text, text, "ident", advance(text)))
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                toks.append(Token(sym, sym, "sym", advance(sym)))
                break
        else:
            raise ParseError(Span(i, i + 1, line, col, line, col + 1),
                             f"unexpected character {ch!r}")
    toks.append(Token("", "", "eof",
                      Span(n, n, line, col, line, col)))
    return toks


# ---------------------------------------------------------------------------
# Surface AST: terms and sorts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SSort:
    pass


@dataclass(frozen=True)
class SSIdent(SSort):
    name: str
    args: tuple[SSort, ...]
    span: Span


@dataclass(frozen=True)
class SSArrow(SSort):
    dom: SSort
    cod: SSort
    span: Span


@dataclass(frozen=True)
class STerm:
    pass


@dataclass(frozen=True)
class SIdent(STerm):
    name: str
    span: Span


@dataclass(frozen=True)
class SNum(STerm):
    value: int
    span: Span


@dataclass(frozen=True)
class SHole(STerm):
    span: Span


@dataclass(frozen=True)
class SAt(STerm):
    """`@name σ …` — a constant with its sort arguments given explicitly."""
    name: str
    sorts: tuple["SSort", ...]
    span: Span


@dataclass(frozen=True)
class SApp(STerm):
    fn: STerm
    arg: STerm
    span: Span


@dataclass(frozen=True)
class SBin(STerm):
    op: str   # imp iff and or eq le lt mem cons add sub
    lhs: STerm
    rhs: STerm
    span: Span


@dataclass(frozen=True)
class SNot(STerm):
    body: STerm
    span: Span


Binder = tuple[list[str], Optional[SSort]]


@dataclass(frozen=True)
class SBinder(STerm):
    kind: str  # forall | exists | fun
    binders: tuple[Binder, ...]
    body: STerm
    span: Span


@dataclass(frozen=True)
class SList(STerm):
    items: tuple[STerm, ...]
    span: Span


@dataclass(frozen=True)
class SIte(STerm):
    cond: STerm
    then: STerm
    els: STerm
    span: Span


def sterm_span(t: STerm) -> Span:
    return t.span  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Surface AST: scripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevertItem:
    term: STerm          # SIdent for plain names
    span: Span


@dataclass(frozen=True)
class IntroItem:
    span: Span


@dataclass(frozen=True)
class IIdent(IntroItem):
    name: str


@dataclass(frozen=True)
class IAnon(IntroItem):
    pass


@dataclass(frozen=True)
class IAll(IntroItem):
    pass


@dataclass(frozen=True)
class IDiscard(IntroItem):
    pass


@dataclass(frozen=True)
class ITriv(IntroItem):
    kind: str   # // /= /== //= //==


@dataclass(frozen=True)
class IAlt(IntroItem):
    branches: tuple[tuple[IntroItem, ...], ...]


@dataclass(frozen=True)
class IDeep(IntroItem):
    items: tuple[IntroItem, ...]


@dataclass(frozen=True)
class IView(IntroItem):
    term: STerm


@dataclass(frozen=True)
class IBuiltinView(IntroItem):
    name: str


@dataclass(frozen=True)
class IRw(IntroItem):
    direction: str   # L2R for ->, R2L for <-


@dataclass(frozen=True)
class IExt(IntroItem):
    name: str


@dataclass(frozen=True)
class ISplit(IntroItem):
    branches: tuple[tuple[IntroItem, ...], ...]


@dataclass(frozen=True)
class RwItem:
    span: Span


@dataclass(frozen=True)
class RwTriv(RwItem):
    kind: str


@dataclass(frozen=True)
class RwRule(RwItem):
    direction: str           # L2R | R2L
    occs: Optional[tuple[int, ...]]
    term: STerm


@dataclass(frozen=True)
class Tactic:
    span: Span   # keyword span


@dataclass(frozen=True)
class TMove(Tactic):
    reverts: tuple[RevertItem, ...]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TSApply(Tactic):
    reverts: tuple[RevertItem, ...]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TElim(Tactic):
    fn: Optional[str]
    reverts: tuple[RevertItem, ...]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TScase(Tactic):
    deep: bool
    reverts: tuple[RevertItem, ...]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TSrw(Tactic):
    items: tuple[RwItem, ...]
    location: Optional[str]
    loc_span: Optional[Span]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TExists(Tactic):
    witnesses: tuple[STerm, ...]
    intros: tuple[IntroItem, ...]


@dataclass(frozen=True)
class TSby(Tactic):
    body: tuple[Tactic, ...]


@dataclass(frozen=True)
class TSplitTac(Tactic):
    branches: tuple[tuple[IntroItem, ...], ...]


@dataclass(frozen=True)
class TFocus(Tactic):
    body: tuple[Tactic, ...]


@dataclass(frozen=True)
class TNamed(Tactic):
    name: str


# ---------------------------------------------------------------------------
# Surface AST: declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decl:
    span: Span


@dataclass(frozen=True)
class VarBinder:
    names: list[str]
    sort: Optional[SSort]     # None for `: Type`
    kind: str                 # "type" | "term" | "deceq"
    span: Span


@dataclass(frozen=True)
class DVariable(Decl):
    binders: tuple[VarBinder, ...]


@dataclass(frozen=True)
class DCtor:
    name: str
    binders: tuple[Binder, ...]
    statement: Optional[STerm]
    span: Span


@dataclass(frozen=True)
class DInductive(Decl):
    name: str
    params: tuple[VarBinder, ...]
    result: Optional[SSort]
    ctors: tuple[DCtor, ...]


@dataclass(frozen=True)
class DDef(Decl):
    name: str
    params: tuple[tuple[list[str], SSort], ...]
    result: SSort
    body: Optional[STerm]
    clauses: tuple[tuple[tuple[STerm, ...], STerm], ...]
    attrs: tuple[str, ...] = ()


@dataclass(frozen=True)
class DAxiom(Decl):
    name: str
    statement: STerm


@dataclass(frozen=True)
class DLemma(Decl):
    kind: str                 # lemma | example
    name: Optional[str]
    statement: STerm
    script: tuple[Tactic, ...]
    attrs: tuple[str, ...] = ()
    by_span: Optional[Span] = None
    binder_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class DAttribute(Decl):
    attr: str
    target: str


@dataclass(frozen=True)
class DReflectPragma(Decl):
    prop_name: str
    bool_name: str


@dataclass(frozen=True)
class DReflectInstance(Decl):
    name: str
    binders: tuple[Binder, ...]
    prop_head: STerm
    bool_head: STerm
    script: tuple[Tactic, ...]


_DECL_KEYWORDS = {"inductive", "def", "axiom", "lemma", "example",
                  "variable", "attribute", "#reflect", "reflect"}

_TACTIC_KEYWORDS = {"move", "sapply", "elim", "scase", "scase!", "srw",
                    "exists", "sby"}

_TRIV_TOKENS = {"//", "/=", "/==", "//=", "//=="}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class Parser:
    def __init__(self, source: str) -> None:
        self.toks = tokenize(source)
        self.pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, value: str) -> bool:
        return self.peek().value == value

    def eat(self, value: str) -> Optional[Token]:
        if self.at(value):
            return self.next()
        return None

    def expect(self, value: str, what: str = "") -> Token:
        t = self.peek()
        if t.value != value:
            raise ParseError(t.span, f"expected {what or value!r}, "
                                     f"got {t.text or 'end of input'!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.value in _DECL_KEYWORDS:
            raise ParseError(t.span, f"expected {what}")
        return self.next()

    # =======================================================================
    # Sorts
    # =======================================================================

    def parse_sort(self) -> SSort:
        dom = self.parse_sort_app()
        if self.eat("->"):
            cod = self.parse_sort()
            return SSArrow(dom, cod, _sspan(dom).merge(_sspan(cod)))
        return dom

    _SORT_STOPS = {"where", "then", "else", "at", "by", "Type"}

    def parse_sort_app(self) -> SSort:
        head = self.parse_sort_atom()
        args: list[SSort] = []
        while True:
            t = self.peek()
            if t.value == "(" or (
                    t.kind == "ident"
                    and t.value not in _DECL_KEYWORDS | self._SORT_STOPS):
                args.append(self.parse_sort_atom())
            else:
                break
        if args:
            if not isinstance(head, SSIdent) or head.args:
                raise ParseError(_sspan(head), "cannot apply this sort")
            return SSIdent(head.name, tuple(args),
                           head.span.merge(_sspan(args[-1])))
        return head

    def parse_sort_atom(self) -> SSort:
        if self.at("("):
            open_ = self.next()
            s = self.parse_sort()
            close = self.expect(")")
            return _resp(s, open_.span.merge(close.span))
        t = self.expect_ident("sort")
        return SSIdent(t.value, (), t.span)

    # =======================================================================
    # Terms  (precedence climbing)
    # =======================================================================

    def parse_term(self) -> STerm:
        return self.parse_iff()

    def parse_iff(self) -> STerm:
        lhs = self.parse_imp()
        if self.eat("<->"):
            rhs = self.parse_iff()
            return SBin("iff", lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_imp(self) -> STerm:
        lhs = self.parse_or()
        if self.eat("->"):
            rhs = self.parse_imp()
            return SBin("imp", lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_or(self) -> STerm:
        lhs = self.parse_and()
        if self.eat("\\/"):
            rhs = self.parse_or()
            return SBin("or", lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_and(self) -> STerm:
        lhs = self.parse_not()
        if self.eat("/\\"):
            rhs = self.parse_and()
            return SBin("and", lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_not(self) -> STerm:
        if self.at("~"):
            t = self.next()
            body = self.parse_not()
            return SNot(body, t.span.merge(body.span))
        return self.parse_cmp()

    _CMP = {"=": "eq", "<=": "le", "<": "lt", "∈": "mem"}

    def parse_cmp(self) -> STerm:
        lhs = self.parse_cons()
        v = self.peek().value
        if v in self._CMP:
            self.next()
            rhs = self.parse_cons()
            return SBin(self._CMP[v], lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_cons(self) -> STerm:
        lhs = self.parse_add()
        if self.eat("::"):
            rhs = self.parse_cons()
            return SBin("cons", lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_add(self) -> STerm:
        lhs = self.parse_app()
        while self.peek().value in ("+", "-"):
            op = "add" if self.next().value == "+" else "sub"
            rhs = self.parse_app()
            lhs = SBin(op, lhs, rhs, lhs.span.merge(rhs.span))
        return lhs

    def parse_app(self) -> STerm:
        fn = self.parse_atom()
        while self._at_atom_start():
            arg = self.parse_atom()
            fn = SApp(fn, arg, fn.span.merge(arg.span))
        return fn

    def _at_atom_start(self) -> bool:
        t = self.peek()
        if t.kind == "num":
            return True
        if t.value in ("(", "[", "_", "@"):
            return True
        if t.kind == "ident":
            return t.value not in _DECL_KEYWORDS | _TACTIC_KEYWORDS | {
                "where", "then", "else", "at", "by", "forall", "exists",
                "fun", "if", "Reflect", "instance", "Type"}
        return False

    def parse_atom(self) -> STerm:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return SNum(int(t.value), t.span)
        if t.value == "_":
            self.next()
            return SHole(t.span)
        if t.value == "@":
            self.next()
            name = self.expect_ident("constant name")
            sorts: list[SSort] = []
            while self.at("(") or (
                    self.peek().kind == "ident"
                    and self.peek().value not in
                    _DECL_KEYWORDS | self._SORT_STOPS):
                sorts.append(self.parse_sort_atom())
            end = _sspan(sorts[-1]) if sorts else name.span
            return SAt(name.value, tuple(sorts), t.span.merge(end))
        if t.value == "(":
            open_ = self.next()
            inner = self.parse_term()
            close = self.expect(")")
            return _retm(inner, open_.span.merge(close.span))
        if t.value == "[":
            open_ = self.next()
            items: list[STerm] = []
            if not self.at("]"):
                items.append(self.parse_term())
                while self.eat(","):
                    items.append(self.parse_term())
            close = self.expect("]")
            return SList(tuple(items), open_.span.merge(close.span))
        if t.value in ("forall", "exists", "fun"):
            self.next()
            binders = self.parse_binders(allow_bare=True)
            if not binders:
                raise ParseError(self.peek().span, "expected binder")
            sep = "=>" if t.value == "fun" else ","
            self.expect(sep)
            body = self.parse_term()
            return SBinder(t.value, tuple(binders), body,
                           t.span.merge(body.span))
        if t.value == "if":
            self.next()
            cond = self.parse_term()
            self.expect("then")
            then = self.parse_term()
            self.expect("else")
            els = self.parse_term()
            return SIte(cond, then, els, t.span.merge(els.span))
        if t.kind == "ident" and t.value not in _DECL_KEYWORDS:
            self.next()
            return SIdent(t.value, t.span)
        raise ParseError(t.span, f"expected a term, got {t.text!r}")

    def parse_binders(self, allow_bare: bool) -> list[Binder]:
        binders: list[Binder] = []
        while True:
            if self.at("("):
                self.next()
                names = [self.expect_ident("binder name").value]
                while self.peek().kind == "ident" and not self.at(":"):
                    names.append(self.next().value)
                self.expect(":")
                sort = self.parse_sort()
                self.expect(")")
                binders.append((names, sort))
            elif allow_bare and self.peek().kind == "ident" and \
                    self.peek().value not in _DECL_KEYWORDS | {
                        "where", "then", "else", "if", "by"}:
                names = [self.next().value]
                while self.peek().kind == "ident" and \
                        self.peek().value not in _DECL_KEYWORDS:
                    names.append(self.next().value)
                if self.eat(":"):
                    sort = self.parse_sort()
                    binders.append((names, sort))
                else:
                    binders.append((names, None))
                return binders
            else:
                return binders

    # =======================================================================
    # Scripts
    # =======================================================================

    def parse_script(self, anchor_col: int) -> tuple[Tactic, ...]:
        """Tactics until a token at column ≤ anchor_col starts a new
        declaration (or `}` / eof)."""
        out: list[Tactic] = []
        while True:
            t = self.peek()
            if t.kind == "eof" or t.value == "}":
                return tuple(out)
            if t.span.col <= anchor_col and t.value in _DECL_KEYWORDS:
                return tuple(out)
            if t.value == ";":
                self.next()
                continue
            out.append(self.parse_tactic())

    def parse_tactic(self) -> Tactic:
        t = self.peek()
        v = t.value
        if v == "move":
            self.next()
            rev, intro = self.parse_tails(t)
            return TMove(t.span, rev, intro)
        if v == "sapply":
            self.next()
            rev, intro = self.parse_tails(t)
            return TSApply(t.span, rev, intro)
        if v == "elim":
            self.next()
            fn = None
            if self.at("/"):
                self.next()
                fn = self.expect_ident("function name").value
            rev, intro = self.parse_tails(t)
            return TElim(t.span, fn, rev, intro)
        if v in ("scase", "scase!"):
            self.next()
            rev, intro = self.parse_tails(t)
            return TScase(t.span, v == "scase!", rev, intro)
        if v == "srw":
            self.next()
            items = self.parse_rw_items(t)
            loc = None
            loc_span = None
            if self._continues(t) and self.at("at"):
                self.next()
                lt = self.expect_ident("hypothesis name")
                loc, loc_span = lt.value, lt.span
            intros: tuple[IntroItem, ...] = ()
            if self._continues(t) and self.at("=>"):
                arrow = self.next()
                intros = tuple(self.parse_intro_seq(t, top=True))
                if not intros:
                    raise ParseError(arrow.span, "empty pattern sequence")
            return TSrw(t.span, tuple(items), loc, loc_span, intros)
        if v == "exists":
            self.next()
            wits = [self.parse_atom()]
            while self._continues(t) and (self._at_atom_start()
                                          or self.at(",")):
                self.eat(",")
                wits.append(self.parse_atom())
            intros = ()
            if self._continues(t) and self.at("=>"):
                self.next()
                intros = tuple(self.parse_intro_seq(t, top=True))
            return TExists(t.span, tuple(wits), intros)
        if v == "sby":
            self.next()
            body: list[Tactic] = []
            while self._continues(t) and not self.at("}") \
                    and self.peek().kind != "eof":
                if self.eat(";"):
                    continue
                body.append(self.parse_tactic())
            return TSby(t.span, tuple(body))
        if v in ("⟨", "<["):
            return self.parse_split_tactic()
        if v == "{":
            self.next()
            body = self.parse_script(anchor_col=0)
            close = self.expect("}")
            return TFocus(t.span.merge(close.span), tuple(body))
        if t.kind == "ident" and v not in _DECL_KEYWORDS:
            self.next()
            return TNamed(t.span, v)
        raise ParseError(t.span, f"expected a tactic, got {t.text!r}")

    def parse_split_tactic(self) -> TSplitTac:
        open_ = self.next()
        closing = "⟩" if open_.value == "⟨" else "]>"
        branches: list[tuple[IntroItem, ...]] = []
        cur: list[IntroItem] = []
        while not self.at(closing):
            if self.eat("|"):
                branches.append(tuple(cur))
                cur = []
                continue
            if self.peek().kind == "eof":
                raise ParseError(self.peek().span, f"expected {closing}")
            cur.extend(self.parse_intro_item(open_))
        close = self.next()
        branches.append(tuple(cur))
        return TSplitTac(open_.span.merge(close.span), tuple(branches))

    def parse_tails(self, kw: Token,
                    ) -> tuple[tuple[RevertItem, ...],
                               tuple[IntroItem, ...]]:
        reverts: list[RevertItem] = []
        if self.at(":"):
            self.next()
            while self._continues(kw) and (
                    self.at("(") or (self.peek().kind == "ident"
                                     and not self._stops_items())):
                reverts.append(self.parse_revert_item())
            if not reverts:
                raise ParseError(self.peek().span, "expected items to revert")
        intros: tuple[IntroItem, ...] = ()
        if self._continues(kw) and self.at("=>"):
            arrow = self.next()
            intros = tuple(self.parse_intro_seq(kw, top=True))
            if not intros:
                raise ParseError(arrow.span, "empty pattern sequence")
        return tuple(reverts), intros

    def parse_revert_item(self) -> RevertItem:
        if self.at("("):
            term = self.parse_atom()
            return RevertItem(term, term.span)
        t = self.expect_ident("name")
        return RevertItem(SIdent(t.value, t.span), t.span)

    def _stops_items(self) -> bool:
        return self.peek().value in _TACTIC_KEYWORDS | _DECL_KEYWORDS | {
            "at", "by", "then", "else", "where"}

    def _continues(self, kw: Token) -> bool:
        """Offside rule: the next token continues kw's item list."""
        t = self.peek()
        if t.kind == "eof":
            return False
        if t.span.line == kw.span.line:
            return True
        return t.span.col > kw.span.col

    def parse_intro_seq(self, kw: Token, top: bool) -> list[IntroItem]:
        items: list[IntroItem] = []
        while self._continues(kw) and not self._at_seq_end():
            items.extend(self.parse_intro_item(kw))
        return items

    def _at_seq_end(self) -> bool:
        t = self.peek()
        if t.kind == "eof":
            return True
        if t.value in ("]", "|", ";", "}", "⟩", "]>", "at"):
            return True
        if t.kind == "ident" and t.value in (
                _TACTIC_KEYWORDS | _DECL_KEYWORDS):
            return True
        if t.value == "{":
            return True
        return False

    def parse_intro_item(self, kw: Token) -> list[IntroItem]:
        t = self.peek()
        v = t.value
        if v in _TRIV_TOKENS:
            self.next()
            return [ITriv(t.span, v)]
        if v == "?":
            self.next()
            return [IAnon(t.span)]
        if v == "*":
            self.next()
            return [IAll(t.span)]
        if v == "_":
            self.next()
            return [IDiscard(t.span)]
        if v == "->":
            self.next()
            return [IRw(t.span, "L2R")]
        if v == "<-":
            self.next()
            return [IRw(t.span, "R2L")]
        if v == "![":
            self.next()
            inner = self.parse_intro_seq(kw, top=False)
            close = self.expect("]")
            return [IDeep(t.span.merge(close.span), tuple(inner))]
        if v == "[":
            self.next()
            branches: list[tuple[IntroItem, ...]] = []
            cur: list[IntroItem] = []
            while not self.at("]"):
                if self.eat("|"):
                    branches.append(tuple(cur))
                    cur = []
                    continue
                if self.peek().kind == "eof":
                    raise ParseError(self.peek().span, "expected ]")
                cur.extend(self.parse_intro_item(kw))
            close = self.next()
            branches.append(tuple(cur))
            return [IAlt(t.span.merge(close.span), tuple(branches))]
        if v in ("⟨", "<["):
            tac = self.parse_split_tactic()
            return [ISplit(tac.span, tac.branches)]
        if v == "/[":
            self.next()
            self.eat("/")
            name = self.expect_ident("view name")
            close = self.expect("]")
            return [IBuiltinView(t.span.merge(close.span), name.value)]
        if v == "/":
            self.next()
            term = self.parse_atom()
            return [IView(t.span.merge(term.span), term)]
        if v == "!":
            self.next()
            name = self.expect_ident("extension name")
            return [IExt(t.span.merge(name.span), name.value)]
        if t.kind == "ident" and not self._stops_items():
            self.next()
            return [IIdent(t.span, t.value)]
        raise ParseError(t.span, f"expected an intro pattern, got {t.text!r}")

    def parse_rw_items(self, kw: Token) -> list[RwItem]:
        items: list[RwItem] = []
        while self._continues(kw):
            t = self.peek()
            v = t.value
            if v in _TRIV_TOKENS:
                self.next()
                items.append(RwTriv(t.span, v))
                continue
            if v == "-" or v == "<-":
                self.next()
                occs = self._parse_occs()
                term = self.parse_rw_atom()
                items.append(RwRule(t.span.merge(term.span), "R2L",
                                    occs, term))
                continue
            if v == "[":
                occs = self._parse_occs()
                term = self.parse_rw_atom()
                items.append(RwRule(t.span.merge(term.span), "L2R",
                                    occs, term))
                continue
            if v == "(" or (t.kind == "ident" and not self._stops_items()
                            and v != "at"):
                term = self.parse_rw_atom()
                items.append(RwRule(term.span, "L2R", None, term))
                continue
            break
        if not items:
            raise ParseError(self.peek().span, "expected rewrite items")
        return items

    def _parse_occs(self) -> Optional[tuple[int, ...]]:
        if not self.at("["):
            return None
        open_ = self.next()
        occs: list[int] = []
        while not self.at("]"):
            t = self.peek()
            if t.kind != "num":
                raise ParseError(t.span, "expected an occurrence number")
            occs.append(int(self.next().value))
            self.eat(",")
        self.expect("]")
        if not occs or any(b <= a for a, b in zip(occs, occs[1:])) \
                or occs[0] < 1:
            raise ParseError(open_.span,
                             "occurrence list must be strictly increasing "
                             "and 1-indexed")
        return tuple(occs)

    def parse_rw_atom(self) -> STerm:
        """A rule term: identifier or parenthesised term (`(IHn m')`)."""
        if self.at("("):
            return self.parse_atom()
        t = self.expect_ident("rule name")
        return SIdent(t.value, t.span)

    # =======================================================================
    # Declarations
    # =======================================================================

    def parse_file(self) -> tuple[list[Decl], list[ParseError]]:
        decls: list[Decl] = []
        errors: list[ParseError] = []
        while self.peek().kind != "eof":
            start = self.pos
            try:
                decls.append(self.parse_decl())
            except ParseError as e:
                errors.append(e)
                self.pos = max(self.pos, start + 1)
                self._skip_to_next_decl()
        return decls, errors

    def _skip_to_next_decl(self) -> None:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.span.col == 1 and t.value in _DECL_KEYWORDS:
                return
            self.next()

    def parse_decl(self) -> Decl:
        attrs: tuple[str, ...] = ()
        t = self.peek()
        v = t.value
        if v == "variable":
            self.next()
            binders = self._parse_variable_binders()
            return DVariable(t.span, tuple(binders))
        if v == "inductive":
            return self.parse_inductive()
        if v == "def":
            return self.parse_def()
        if v == "axiom":
            self.next()
            name = self.expect_ident("axiom name")
            self.expect(":")
            stmt = self.parse_term()
            return DAxiom(t.span.merge(stmt.span), name.value, stmt)
        if v in ("lemma", "example"):
            return self.parse_lemma(v)
        if v == "attribute":
            self.next()
            self.expect("[")
            attr = self.expect_ident("attribute name").value
            self.expect("]")
            target = self.expect_ident("lemma name")
            return DAttribute(t.span.merge(target.span), attr, target.value)
        if v == "#reflect":
            self.next()
            p = self.expect_ident("predicate name")
            b = self.expect_ident("boolean function name")
            return DReflectPragma(t.span.merge(b.span), p.value, b.value)
        if v == "reflect":
            return self.parse_reflect_instance()
        raise ParseError(t.span, f"expected a declaration, got {t.text!r}")

    def _parse_variable_binders(self) -> list[VarBinder]:
        out: list[VarBinder] = []
        while self.peek().value in ("(", "{", "["):
            open_ = self.next()
            if open_.value == "[":
                self.expect("DecidableEq")
                name = self.expect_ident("type variable")
                close = self.expect("]")
                out.append(VarBinder([name.value], None, "deceq",
                                     open_.span.merge(close.span)))
                continue
            closing = ")" if open_.value == "(" else "}"
            names = [self.expect_ident("name").value]
            while self.peek().kind == "ident" and not self.at(":"):
                names.append(self.next().value)
            self.expect(":")
            if self.at("Type"):
                self.next()
                close = self.expect(closing)
                out.append(VarBinder(names, None, "type",
                                     open_.span.merge(close.span)))
            else:
                sort = self.parse_sort()
                close = self.expect(closing)
                out.append(VarBinder(names, sort, "term",
                                     open_.span.merge(close.span)))
        if not out:
            raise ParseError(self.peek().span, "expected variable binders")
        return out

    def parse_inductive(self) -> DInductive:
        kw = self.next()
        name = self.expect_ident("inductive name")
        params: list[VarBinder] = []
        while self.at("(") or self.at("{"):
            open_ = self.next()
            closing = ")" if open_.value == "(" else "}"
            pnames = [self.expect_ident("parameter").value]
            while self.peek().kind == "ident" and not self.at(":"):
                pnames.append(self.next().value)
            self.expect(":")
            if self.at("Type"):
                self.next()
                close = self.expect(closing)
                params.append(VarBinder(pnames, None, "type",
                                        open_.span.merge(close.span)))
            else:
                sort = self.parse_sort()
                close = self.expect(closing)
                params.append(VarBinder(pnames, sort, "term",
                                        open_.span.merge(close.span)))
        result: Optional[SSort] = None
        if self.eat(":"):
            result = self.parse_sort()
        where = self.expect("where")
        ctors: list[DCtor] = []
        while self.at("|"):
            self.next()
            cname = self.expect_ident("constructor name")
            binders = tuple(self.parse_binders(allow_bare=False))
            stmt: Optional[STerm] = None
            if self.eat(":"):
                stmt = self.parse_term()
            ctors.append(DCtor(cname.value, binders, stmt,
                               cname.span))
        return DInductive(kw.span.merge(where.span), name.value,
                          tuple(params), result, tuple(ctors))

    def parse_def(self) -> DDef:
        kw = self.next()
        name = self.expect_ident("definition name")
        params: list[tuple[list[str], SSort]] = []
        while self.at("("):
            self.next()
            pnames = [self.expect_ident("parameter").value]
            while self.peek().kind == "ident" and not self.at(":"):
                pnames.append(self.next().value)
            self.expect(":")
            sort = self.parse_sort()
            self.expect(")")
            params.append((pnames, sort))
        self.expect(":")
        result = self.parse_sort()
        if self.eat(":="):
            body = self.parse_term()
            return DDef(kw.span.merge(body.span), name.value, tuple(params),
                        result, body, ())
        clauses: list[tuple[tuple[STerm, ...], STerm]] = []
        last = kw.span
        while self.at("|"):
            self.next()
            pats = [self.parse_cons()]
            while self.eat(","):
                pats.append(self.parse_cons())
            self.expect("=>")
            rhs = self.parse_term()
            clauses.append((tuple(pats), rhs))
            last = rhs.span
        if not clauses:
            raise ParseError(self.peek().span,
                             "expected := body or | pattern clauses")
        return DDef(kw.span.merge(last), name.value, tuple(params),
                    result, None, tuple(clauses))

    def parse_lemma(self, kind: str) -> DLemma:
        kw = self.next()
        attrs: tuple[str, ...] = ()
        name: Optional[str] = None
        if kind == "lemma":
            tok = self.expect_ident("lemma name")
            name = tok.value
        if self.at("["):
            self.next()
            attrs = (self.expect_ident("attribute").value,)
            self.expect("]")
        binders = tuple(self.parse_binders(allow_bare=False))
        self.expect(":")
        stmt = self.parse_term()
        if binders:
            stmt = SBinder("forall", binders, stmt,
                           kw.span.merge(stmt.span))
        self.expect(":=")
        by = self.expect("by")
        script = self.parse_script(anchor_col=kw.span.col)
        bnames = tuple(n for names, _ in binders for n in names)
        return DLemma(kw.span, kind, name, stmt, tuple(script), attrs,
                      by.span, bnames)

    def parse_reflect_instance(self) -> DReflectInstance:
        kw = self.next()
        self.expect("instance")
        name = self.expect_ident("instance name")
        binders = tuple(self.parse_binders(allow_bare=False))
        self.expect(":")
        self.expect("Reflect")
        phead = self.parse_atom()
        bhead = self.parse_atom()
        self.expect(":=")
        self.expect("by")
        script = self.parse_script(anchor_col=kw.span.col)
        return DReflectInstance(kw.span, name.value, binders, phead, bhead,
                                tuple(script))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sspan(s: SSort) -> Span:
    return s.span  # type: ignore[attr-defined]


def _resp(s: SSort, span: Span) -> SSort:
    if isinstance(s, SSIdent):
        return SSIdent(s.name, s.args, span)
    assert isinstance(s, SSArrow)
    return SSArrow(s.dom, s.cod, span)


def _retm(t: STerm, span: Span) -> STerm:
    from dataclasses import replace
    return replace(t, span=span)


def parse_file(source: str) -> tuple[list[Decl], list[ParseError]]:
    return Parser(source).parse_file()
