"""Parsers and serializers for the .qosfsa, .ql and .qosgc text formats.

All three formats share `--` end-of-line comments and embed QoS constraints
as fully parenthesized SMT-LIB terms. Every parse error carries a source
position.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import gchor as gc
from . import logic
from .model import (
    INPUT,
    OUTPUT,
    Action,
    Machine,
    QosAttributeDecl,
    QosSpec,
    System,
    Transition,
    validate_system,
)
from .projection import QGChor, QInteraction, QSlots, SLOT_NAMES
from .smt import _read_sexpr, _tokenize_sexpr, term_from_sexpr
from .terms import Term, free_vars, is_boolean, SortError


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


_TWO_CHAR = ("->", "=>")
_ONE_CHAR = "{}()[]:;,+*|!?@<>"


@dataclass(frozen=True)
class Token:
    kind: str  # "word", "punct" or "eof"
    text: str
    span: SourceSpan
    offset: int


def _word_char(c: str) -> bool:
    return c.isalnum() or c in "_'"


class Lexer:
    def __init__(self, text: str, filename: str):
        self.text = text
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1
        self._peeked: Token | None = None

    def span(self) -> SourceSpan:
        return SourceSpan(self.filename, self.line, self.col)

    def _advance(self, n: int) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_trivia(self) -> None:
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isspace():
                self._advance(1)
            elif self.text.startswith("--", self.pos):
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance(1)
            else:
                return

    def peek(self) -> Token:
        if self._peeked is None:
            self._peeked = self._lex()
        return self._peeked

    def next(self) -> Token:
        t = self.peek()
        self._peeked = None
        return t

    def _lex(self) -> Token:
        self._skip_trivia()
        span = self.span()
        if self.pos >= len(self.text):
            return Token("eof", "", span, self.pos)
        for two in _TWO_CHAR:
            if self.text.startswith(two, self.pos):
                self._advance(2)
                return Token("punct", two, span, self.pos - 2)
        c = self.text[self.pos]
        if c in _ONE_CHAR or c in "/-":
            self._advance(1)
            return Token("punct", c, span, self.pos - 1)
        if _word_char(c):
            start = self.pos
            while self.pos < len(self.text) and _word_char(self.text[self.pos]):
                self._advance(1)
            return Token("word", self.text[start : self.pos], span, start)
        raise ParseError(f"unexpected character {c!r}", span)

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of file'!r}", t.span)
        return t

    def expect_word(self, what: str) -> Token:
        t = self.next()
        if t.kind != "word":
            raise ParseError(f"expected {what}, found {t.text or 'end of file'!r}", t.span)
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def read_term(self) -> tuple[Term, SourceSpan]:
        """Read one parenthesized SMT-LIB term from the raw text."""
        self._skip_trivia()
        if self._peeked is not None:
            # re-lex from the peeked token's offset
            self.pos = self._peeked.offset
            self.line, self.col = self._peeked.span.line, self._peeked.span.col
            self._peeked = None
            self._skip_trivia()
        span = self.span()
        if self.pos >= len(self.text) or self.text[self.pos] != "(":
            raise ParseError("expected a parenthesized SMT-LIB term", span)
        depth = 0
        start = self.pos
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
            self._advance(1)
            if depth == 0:
                break
        if depth != 0:
            raise ParseError("unbalanced parentheses in SMT-LIB term", span)
        raw = self.text[start : self.pos]
        try:
            sx, _ = _read_sexpr(_tokenize_sexpr(raw), 0)
            term = term_from_sexpr(sx)
        except (ValueError, IndexError) as e:
            raise ParseError(f"bad SMT-LIB term: {e}", span) from e
        return term, span


# ---------------------------------------------------------------------------
# .qosfsa

def _parse_attr_decls(lx: Lexer) -> list[QosAttributeDecl]:
    out: list[QosAttributeDecl] = []
    lx.expect("{")
    while not lx.at("}"):
        name = lx.expect_word("attribute name")
        lx.expect(":")
        op = lx.next()
        if op.kind == "eof" or op.text in ",{}":
            raise ParseError("expected an aggregation operator", op.span)
        out.append(QosAttributeDecl(name.text, op.text))
        if lx.at(","):
            lx.next()
    lx.expect("}")
    return out


def parse_qosfsa(text: str, filename: str = "<qosfsa>") -> System:
    lx = Lexer(text, filename)
    lx.expect("fsa")
    lx.expect("{")
    names: list[str] = []
    raw_machines: list[tuple[str, str, list[tuple], SourceSpan]] = []
    while lx.at("machine"):
        lx.next()
        name_tok = lx.expect_word("machine name")
        if name_tok.text in names:
            raise ParseError(f"duplicate machine {name_tok.text}", name_tok.span)
        lx.expect("{")
        lx.expect("initial")
        initial = lx.expect_word("initial state").text
        transitions: list[tuple] = []
        while not lx.at("}"):
            src = lx.expect_word("source state")
            partner = lx.expect_word("partner index")
            act = lx.next()
            if act.text not in (OUTPUT, INPUT):
                raise ParseError("expected ! or ?", act.span)
            msg = lx.expect_word("message")
            tgt = lx.expect_word("target state")
            transitions.append((src.text, partner, act.text, msg.text, tgt.text))
        lx.expect("}")
        names.append(name_tok.text)
        raw_machines.append((name_tok.text, initial, transitions, name_tok.span))
    lx.expect("}")
    if not raw_machines:
        raise ParseError("fsa block declares no machines", lx.span())

    machines: list[Machine] = []
    for i, (name, initial, raw_ts, _) in enumerate(raw_machines):
        ts: list[Transition] = []
        for src, partner_tok, act, msg, tgt in raw_ts:
            try:
                p = int(partner_tok.text)
            except ValueError:
                p = -1
            if p < 0 or p >= len(raw_machines) or p == i:
                raise ParseError(
                    f"unknown partner index {partner_tok.text!r} for machine {name}",
                    partner_tok.span,
                )
            other = raw_machines[p][0]
            if act == OUTPUT:
                action = Action(name, other, OUTPUT, msg)
            else:
                action = Action(other, name, INPUT, msg)
            ts.append(Transition(src, action, tgt))
        machines.append(Machine(name, initial, tuple(ts)))

    by_name = {m.name: i for i, m in enumerate(machines)}
    attributes: list[QosAttributeDecl] = []
    specs: dict[str, dict[str, list[Term]]] = {m.name: {} for m in machines}
    finals: dict[str, tuple[str, ...]] = {}
    seen_blocks: set[str] = set()
    while not lx.at(""):
        block = lx.expect_word("attributes, specs or finals")
        if block.text in seen_blocks:
            raise ParseError(f"duplicate {block.text} block", block.span)
        seen_blocks.add(block.text)
        if block.text == "attributes":
            attributes = _parse_attr_decls(lx)
        elif block.text == "specs":
            lx.expect("{")
            declared = {a.name for a in attributes}
            while not lx.at("}"):
                mname = lx.expect_word("machine name")
                if mname.text not in by_name:
                    raise ParseError(f"unknown machine {mname.text}", mname.span)
                lx.expect("@")
                state = lx.expect_word("state")
                if state.text not in machines[by_name[mname.text]].states:
                    raise ParseError(
                        f"spec on unknown state {state.text} of machine {mname.text}",
                        state.span,
                    )
                lx.expect(":")
                term, tspan = lx.read_term()
                for v in sorted(free_vars(term)):
                    if v not in declared:
                        raise ParseError(f"undeclared attribute {v}", tspan)
                try:
                    if not is_boolean(term):
                        raise ParseError("constraint must be boolean", tspan)
                except SortError as e:
                    raise ParseError(f"ill-sorted constraint: {e}", tspan) from e
                specs[mname.text].setdefault(state.text, []).append(term)
                if lx.at(","):
                    lx.next()
            lx.expect("}")
        elif block.text == "finals":
            lx.expect("{")
            while not lx.at("}"):
                mname = lx.expect_word("machine name")
                if mname.text not in by_name:
                    raise ParseError(f"unknown machine {mname.text}", mname.span)
                lx.expect(":")
                lx.expect("[")
                states: list[str] = []
                while not lx.at("]"):
                    s = lx.expect_word("state")
                    if s.text not in machines[by_name[mname.text]].states:
                        raise ParseError(
                            f"final on unknown state {s.text} of machine {mname.text}",
                            s.span,
                        )
                    states.append(s.text)
                    if lx.at(","):
                        lx.next()
                lx.expect("]")
                finals[mname.text] = tuple(states)
                if lx.at(","):
                    lx.next()
            lx.expect("}")
        else:
            raise ParseError(f"unknown block {block.text!r}", block.span)

    full = [
        Machine(
            m.name,
            m.initial,
            m.transitions,
            finals.get(m.name, ()),
            {s: QosSpec(tuple(cs)) for s, cs in specs[m.name].items()},
        )
        for m in machines
    ]
    system = System(tuple(attributes), tuple(full))
    violations = validate_system(system)
    if violations:
        raise ParseError(
            "invalid system: " + "; ".join(str(v) for v in violations),
            SourceSpan(filename, 1, 1),
        )
    return system


# ---------------------------------------------------------------------------
# g-choreographies (shared by .ql and .qosgc)

def _parse_gchor_atom(lx: Lexer, annotated: bool) -> gc.GChor:
    t = lx.peek()
    if t.text == "{":
        lx.next()
        if lx.at("}"):
            lx.next()
            node: gc.GChor = gc.Empty()
        else:
            node = _parse_gchor(lx, annotated)
            lx.expect("}")
    elif t.text == "repeat":
        lx.next()
        lx.expect("{")
        body = _parse_gchor(lx, annotated)
        lx.expect("}")
        # one-or-more repetition
        return gc.Seq(body, gc.Star(body))
    elif t.text == "break":
        lx.next()
        return gc.Break()
    elif t.kind == "word":
        sender = lx.next()
        lx.expect("->")
        receiver = lx.expect_word("receiver")
        lx.expect(":")
        message = lx.expect_word("message")
        if sender.text == receiver.text:
            raise ParseError("interaction needs distinct participants", sender.span)
        if annotated and lx.at("["):
            node = _parse_slots(lx, sender.text, receiver.text, message.text)
        else:
            node = gc.Interaction(sender.text, receiver.text, message.text)
    else:
        raise ParseError(f"expected a g-choreography, found {t.text!r}", t.span)
    if lx.at("*"):
        lx.next()
        return gc.Star(node)
    return node


def _parse_slots(lx: Lexer, sender: str, receiver: str, message: str) -> QInteraction:
    lx.expect("[")
    slots: dict[str, tuple[Term, ...]] = {}
    while not lx.at("]"):
        name = lx.expect_word("slot name")
        key = name.text
        if key not in SLOT_NAMES:
            raise ParseError(f"unknown slot {key!r}", name.span)
        if key in slots:
            raise ParseError(f"duplicate slot {key!r}", name.span)
        lx.expect(":")
        terms: list[Term] = []
        while lx.at("("):
            terms.append(lx.read_term()[0])
        if not terms:
            raise ParseError("slot needs at least one constraint", lx.span())
        slots[key] = tuple(terms)
        if lx.at(","):
            lx.next()
    lx.expect("]")
    return QInteraction(
        sender,
        receiver,
        message,
        QSlots(
            slots.get("sqos", ()),
            slots.get("rqos", ()),
            slots.get("sqos'", ()),
            slots.get("rqos'", ()),
        ),
    )


def _parse_gchor_seq(lx: Lexer, annotated: bool) -> gc.GChor:
    node = _parse_gchor_atom(lx, annotated)
    while lx.at(";"):
        lx.next()
        node = gc.Seq(node, _parse_gchor_atom(lx, annotated))
    return node


def _parse_gchor_par(lx: Lexer, annotated: bool) -> gc.GChor:
    node = _parse_gchor_seq(lx, annotated)
    while lx.at("|"):
        lx.next()
        node = gc.Par(node, _parse_gchor_seq(lx, annotated))
    return node


def _parse_gchor(lx: Lexer, annotated: bool = False) -> gc.GChor:
    node = _parse_gchor_par(lx, annotated)
    while lx.at("+"):
        lx.next()
        node = gc.Choice(node, _parse_gchor_par(lx, annotated))
    return node


# ---------------------------------------------------------------------------
# .ql

def _parse_ql_unary(lx: Lexer) -> logic.Formula:
    t = lx.peek()
    if t.text == "not":
        lx.next()
        return logic.Not(_parse_ql_unary(lx))
    if t.text == "true":
        lx.next()
        return logic.TrueF()
    if t.text == "qos":
        lx.next()
        term, span = lx.read_term()
        try:
            if not is_boolean(term):
                raise ParseError("QoS constraint must be boolean", span)
        except SortError as e:
            raise ParseError(f"ill-sorted QoS constraint: {e}", span) from e
        return logic.Atom(term)
    if t.text == "<":
        lx.next()
        g = _parse_gchor(lx)
        lx.expect(">")
        return logic.Possib(g, _parse_ql_unary(lx))
    if t.text == "[":
        lx.next()
        g = _parse_gchor(lx)
        lx.expect("]")
        return logic.Nec(g, _parse_ql_unary(lx))
    if t.text == "(":
        lx.next()
        f = _parse_ql_formula(lx)
        lx.expect(")")
        return f
    raise ParseError(f"expected a formula, found {t.text or 'end of file'!r}", t.span)


def _parse_ql_and(lx: Lexer) -> logic.Formula:
    node = _parse_ql_unary(lx)
    while lx.at("and"):
        lx.next()
        node = logic.And(node, _parse_ql_unary(lx))
    return node


def _parse_ql_or(lx: Lexer) -> logic.Formula:
    node = _parse_ql_and(lx)
    while lx.at("or"):
        lx.next()
        node = logic.Or(node, _parse_ql_and(lx))
    return node


def _parse_ql_implies(lx: Lexer) -> logic.Formula:
    node = _parse_ql_or(lx)
    if lx.at("=>"):
        lx.next()
        return logic.Implies(node, _parse_ql_implies(lx))
    return node


def _parse_ql_formula(lx: Lexer) -> logic.Formula:
    node = _parse_ql_implies(lx)
    if lx.at("until"):
        lx.next()
        lx.expect("{")
        g = _parse_gchor(lx)
        lx.expect("}")
        return logic.Until(node, g, _parse_ql_formula(lx))
    return node


def parse_ql(text: str, filename: str = "<ql>") -> logic.Formula:
    lx = Lexer(text, filename)
    f = _parse_ql_formula(lx)
    trailing = lx.peek()
    if trailing.kind != "eof":
        raise ParseError(f"trailing input {trailing.text!r}", trailing.span)
    return f


# ---------------------------------------------------------------------------
# .qosgc

def parse_qosgc(text: str, filename: str = "<qosgc>") -> QGChor:
    lx = Lexer(text, filename)
    lx.expect("qos")
    attributes = _parse_attr_decls(lx)
    body = _parse_gchor(lx, annotated=True)
    trailing = lx.peek()
    if trailing.kind != "eof":
        raise ParseError(f"trailing input {trailing.text!r}", trailing.span)
    declared = {a.name for a in attributes}
    _check_slot_attrs(body, declared, lx.filename)
    return QGChor(tuple(attributes), body)


def _check_slot_attrs(g: gc.GChor, declared: set[str], filename: str) -> None:
    if isinstance(g, QInteraction):
        for terms in (g.slots.sqos, g.slots.rqos, g.slots.sqos_post, g.slots.rqos_post):
            for t in terms:
                bad = sorted(free_vars(t) - declared)
                if bad:
                    raise ParseError(
                        f"undeclared attribute {bad[0]}", SourceSpan(filename, 1, 1)
                    )
    elif isinstance(g, (gc.Seq, gc.Choice, gc.Par)):
        _check_slot_attrs(g.left, declared, filename)
        _check_slot_attrs(g.right, declared, filename)
    elif isinstance(g, gc.Star):
        _check_slot_attrs(g.body, declared, filename)


# ---------------------------------------------------------------------------
# serializers (round-trip inverses of the parsers)

def serialize_qosfsa(sys: System) -> str:
    index = {m.name: i for i, m in enumerate(sys.machines)}
    lines = ["fsa {"]
    for m in sys.machines:
        lines.append(f"  machine {m.name} {{")
        lines.append(f"    initial {m.initial}")
        for t in m.transitions:
            partner = (
                t.action.receiver if t.action.kind == OUTPUT else t.action.sender
            )
            lines.append(
                f"    {t.src} {index[partner]} {t.action.kind} {t.action.message} {t.tgt}"
            )
        lines.append("  }")
    lines.append("}")
    if sys.attributes:
        decls = ", ".join(f"{a.name}: {a.op}" for a in sys.attributes)
        lines.append(f"attributes {{ {decls} }}")
    entries = [
        f"  {m.name}@{s} : {c}"
        for m in sys.machines
        for s, spec in m.specs.items()
        for c in spec.constraints
    ]
    if entries:
        lines.append("specs {")
        lines.append(",\n".join(entries))
        lines.append("}")
    finals = [f"{m.name}: [{', '.join(m.accepting)}]" for m in sys.machines if m.accepting]
    if finals:
        lines.append(f"finals {{ {', '.join(finals)} }}")
    return "\n".join(lines) + "\n"


def _gchor_text(g: gc.GChor, prec: int = 0) -> str:
    # precedence: choice(0) < par(1) < seq(2) < atom(3)
    if isinstance(g, gc.Choice):
        s = f"{_gchor_text(g.left, 0)} + {_gchor_text(g.right, 1)}"
        return f"{{ {s} }}" if prec > 0 else s
    if isinstance(g, gc.Par):
        s = f"{_gchor_text(g.left, 1)} | {_gchor_text(g.right, 2)}"
        return f"{{ {s} }}" if prec > 1 else s
    if isinstance(g, gc.Seq):
        s = f"{_gchor_text(g.left, 2)} ; {_gchor_text(g.right, 3)}"
        return f"{{ {s} }}" if prec > 2 else s
    if isinstance(g, gc.Star):
        return f"{{ {_gchor_text(g.body, 0)} }} *"
    if isinstance(g, gc.Break):
        return "break"
    if isinstance(g, gc.Empty):
        return "{ }"
    if isinstance(g, QInteraction):
        parts = []
        for label, terms in (
            ("sqos", g.slots.sqos),
            ("rqos", g.slots.rqos),
            ("sqos'", g.slots.sqos_post),
            ("rqos'", g.slots.rqos_post),
        ):
            if terms:
                parts.append(f"{label}: " + " ".join(str(t) for t in terms))
        ann = f" [{', '.join(parts)}]" if parts else ""
        return f"{g.sender} -> {g.receiver} : {g.message}{ann}"
    if isinstance(g, gc.Interaction):
        return f"{g.sender} -> {g.receiver} : {g.message}"
    raise TypeError(f"not a g-choreography: {g!r}")


def _ql_text(f: logic.Formula, prec: int = 0) -> str:
    # precedence: until(0) < => (1) < or(2) < and(3) < unary(4)
    if isinstance(f, logic.Until):
        s = f"{_ql_text(f.left, 1)} until {{ {_gchor_text(f.index)} }} {_ql_text(f.right, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(f, logic.Implies):
        s = f"{_ql_text(f.left, 2)} => {_ql_text(f.right, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(f, logic.Or):
        s = f"{_ql_text(f.left, 2)} or {_ql_text(f.right, 3)}"
        return f"({s})" if prec > 2 else s
    if isinstance(f, logic.And):
        s = f"{_ql_text(f.left, 3)} and {_ql_text(f.right, 4)}"
        return f"({s})" if prec > 3 else s
    if isinstance(f, logic.Not):
        return f"not {_ql_text(f.sub, 4)}"
    if isinstance(f, logic.TrueF):
        return "true"
    if isinstance(f, logic.Atom):
        return f"qos {f.term}"
    if isinstance(f, logic.Possib):
        return f"< {_gchor_text(f.index)} > {_ql_text(f.sub, 4)}"
    if isinstance(f, logic.Nec):
        return f"[ {_gchor_text(f.index)} ] {_ql_text(f.sub, 4)}"
    raise TypeError(f"not a formula: {f!r}")


def serialize_ql(f: logic.Formula) -> str:
    return _ql_text(f) + "\n"


def serialize_qosgc(qg: QGChor) -> str:
    decls = ", ".join(f"{a.name}: {a.op}" for a in qg.attributes)
    return f"qos {{ {decls} }}\n{_gchor_text(qg.body)}\n"
