"""Lexing, rule segmentation, and predicate-level rewriting of ASP source.

The parser is deliberately shallow: it tokenizes, splits the source into
rules, classifies each rule, and indexes predicate occurrences so that
renaming and fact stripping work on exact spans. Grounding and semantic
validation are the solver's job.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .errors import InvalidIdentifier, LexError, MappingCollision

FACT = "fact"
NORMAL_RULE = "normal_rule"
CHOICE_RULE = "choice_rule"
STRONG_CONSTRAINT = "strong_constraint"
WEAK_CONSTRAINT = "weak_constraint"
DIRECTIVE = "directive"
COMMENT = "comment"

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*")


@dataclass(frozen=True, order=True)
class PredicateSignature:
    """A predicate name with its arity, e.g. edge/2."""

    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"

    @classmethod
    def parse(cls, text: str) -> "PredicateSignature":
        name, _, arity = text.strip().partition("/")
        if not _IDENT_RE.fullmatch(name) or not arity.isdigit():
            raise ValueError(f"not a predicate signature: {text!r}")
        return cls(name, int(arity))


@dataclass(frozen=True, order=True)
class GroundAtom:
    """A ground atom in canonical (whitespace-free) rendering."""

    predicate: str
    args: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def canonical_text(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(self.args)})"

    def __str__(self) -> str:
        return self.canonical_text

    @property
    def signature(self) -> PredicateSignature:
        return PredicateSignature(self.predicate.lstrip("-"), len(self.args))


@dataclass(frozen=True)
class Occurrence:
    """Span of one predicate-name token: rule index plus offsets in that rule's text."""

    rule_index: int
    start: int
    end: int
    arity: int


@dataclass
class RuleText:
    """One segmented rule with its verbatim source text."""

    kind: str
    text: str
    weak_level: int | None = None


@dataclass
class Program:
    """An ASP source unit: ordered rules plus a predicate occurrence index."""

    rules: list[RuleText] = field(default_factory=list)
    predicate_index: dict[PredicateSignature, list[Occurrence]] = field(default_factory=dict)
    source_hash: str = ""

    def text(self) -> str:
        return "\n".join(r.text for r in self.rules) + ("\n" if self.rules else "")

    def predicate_names(self) -> set[str]:
        return {sig.name for sig in self.predicate_index}

    def signatures(self) -> set[PredicateSignature]:
        return set(self.predicate_index)

    def has_weak_constraints(self) -> bool:
        if any(r.kind == WEAK_CONSTRAINT for r in self.rules):
            return True
        return any(
            r.kind == DIRECTIVE and re.match(r"#(minimize|maximize)\b", r.text)
            for r in self.rules
        )


# --- tokenizer ----------------------------------------------------------

_PUNCT2 = (":-", ":~", "..", "<=", ">=", "!=", "<>", "**")
_KEYWORDS = {"not"}


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | var | num | str | punct | hash
    text: str
    pos: int
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(source)
    line, col = 1, 1

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if c == "%":
            if source.startswith("%*", i):
                end = source.find("*%", i + 2)
                if end < 0:
                    raise LexError("unterminated block comment", line, col)
                advance(end + 2 - i)
            else:
                end = source.find("\n", i)
                end = n if end < 0 else end
                advance(end - i)
            continue
        start, sline, scol = i, line, col
        if c == '"':
            j = i + 1
            while j < n:
                if source[j] == "\\":
                    j += 2
                    continue
                if source[j] == '"':
                    break
                j += 1
            if j >= n:
                raise LexError("unterminated string", sline, scol)
            advance(j + 1 - i)
            tokens.append(_Token("str", source[start:i], start, sline, scol))
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            advance(j - i)
            tokens.append(_Token("num", source[start:i], start, sline, scol))
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            text = source[start:j]
            kind = "var" if (c.isupper() or c == "_") else "ident"
            advance(j - i)
            tokens.append(_Token(kind, text, start, sline, scol))
            continue
        if c == "#":
            j = i + 1
            while j < n and source[j].isalpha():
                j += 1
            advance(j - i)
            tokens.append(_Token("hash", source[start:i], start, sline, scol))
            continue
        two = source[i : i + 2]
        if two in _PUNCT2:
            advance(2)
            tokens.append(_Token("punct", two, start, sline, scol))
            continue
        advance(1)
        tokens.append(_Token("punct", c, start, sline, scol))
    return tokens


# --- segmentation and classification -------------------------------------

_OPEN = {"(": ")", "{": "}", "[": "]"}
_CLOSE = {")", "}", "]"}


def _segment(source: str, tokens: list[_Token]) -> list[tuple[int, int, list[_Token]]]:
    """Split the token stream into rule segments: (start, end, tokens) source spans."""
    segments: list[tuple[int, int, list[_Token]]] = []
    cur: list[_Token] = []
    stack: list[_Token] = []
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if tok.kind == "punct" and tok.text in _OPEN:
            stack.append(tok)
        elif tok.kind == "punct" and tok.text in _CLOSE:
            if not stack or _OPEN[stack[-1].text] != tok.text:
                raise LexError("unbalanced parenthesis", tok.line, tok.col)
            stack.pop()
        cur.append(tok)
        if tok.kind == "punct" and tok.text == ".":
            if stack:
                raise LexError("unbalanced parenthesis", stack[-1].line, stack[-1].col)
            # a weak constraint's tail `[w@p, ...]` follows its terminating dot
            if cur[0].text == ":~" and k + 1 < len(tokens) and tokens[k + 1].text == "[":
                depth = 0
                while k + 1 < len(tokens):
                    k += 1
                    t2 = tokens[k]
                    cur.append(t2)
                    if t2.text == "[":
                        depth += 1
                    elif t2.text == "]":
                        depth -= 1
                        if depth == 0:
                            break
                if depth != 0:
                    raise LexError("unbalanced parenthesis", tok.line, tok.col)
            end = cur[-1].pos + len(cur[-1].text)
            segments.append((cur[0].pos, end, cur))
            cur = []
        k += 1
    if stack:
        raise LexError("unbalanced parenthesis", stack[-1].line, stack[-1].col)
    if cur:
        raise LexError("rule not terminated by '.'", cur[0].line, cur[0].col)
    return segments


def _comment_spans(source: str) -> list[tuple[int, int]]:
    """Spans of comments so they can be preserved as standalone rules."""
    spans = []
    i, n = 0, len(source)
    in_str = False
    while i < n:
        c = source[i]
        if in_str:
            if c == "\\":
                i += 2
                continue
            if c == '"':
                in_str = False
            i += 1
            continue
        if c == '"':
            in_str = True
            i += 1
            continue
        if c == "%":
            if source.startswith("%*", i):
                end = source.find("*%", i + 2)
                end = n if end < 0 else end + 2
            else:
                end = source.find("\n", i)
                end = n if end < 0 else end
            spans.append((i, end))
            i = end
            continue
        i += 1
    return spans


def _classify(tokens: list[_Token]) -> tuple[str, int | None]:
    """Classify a rule segment, returning (kind, weak_level)."""
    first = tokens[0]
    if first.kind == "hash":
        return DIRECTIVE, None
    if first.text == ":~":
        return WEAK_CONSTRAINT, _parse_weak_level(tokens)
    if first.text == ":-":
        return STRONG_CONSTRAINT, None
    texts = [t.text for t in tokens]
    body_split = ":-" in texts or ":~" in texts
    if not body_split and _is_fact(tokens):
        return FACT, None
    head_end = texts.index(":-") if ":-" in texts else len(texts)
    if "{" in texts[:head_end]:
        return CHOICE_RULE, None
    return NORMAL_RULE, None


def _is_fact(tokens: list[_Token]) -> bool:
    """A fact is a single ground head atom terminated by a dot."""
    if any(t.kind == "var" for t in tokens):
        return False
    if any(t.kind in ("hash",) or t.text in ("{", "}", ":-", ":~") for t in tokens):
        return False
    if tokens[0].kind != "ident":
        return False
    if len(tokens) == 2:  # `name .`
        return tokens[1].text == "."
    if len(tokens) < 4 or tokens[1].text != "(" or tokens[-1].text != ".":
        return False
    return tokens[-2].text == ")"


def _parse_weak_level(tokens: list[_Token]) -> int:
    """Priority from the `[w@p, ...]` tail; 0 when `@p` is absent or non-literal."""
    try:
        lb = max(i for i, t in enumerate(tokens) if t.text == "[")
    except ValueError:
        return 0
    texts = [t.text for t in tokens[lb:]]
    if "@" not in texts:
        return 0
    at = lb + texts.index("@")
    sign = 1
    j = at + 1
    if j < len(tokens) and tokens[j].text == "-":
        sign = -1
        j += 1
    if j < len(tokens) and tokens[j].kind == "num":
        return sign * int(tokens[j].text)
    return 0


def _index_rule(rule_index: int, base: int, tokens: list[_Token], kind: str) -> list[tuple[PredicateSignature, Occurrence]]:
    """Predicate-name occurrences in one rule.

    Applications `name(...)` are indexed at any nesting depth (this also
    covers function symbols, which keeps renaming consistent); bare
    lowercase identifiers are indexed as 0-ary atoms only at top level,
    outside weak-constraint tails. In directives, `name/arity` pairs are
    indexed so `#show` lines follow renames.
    """
    out: list[tuple[PredicateSignature, Occurrence]] = []
    paren_depth = 0
    bracket_depth = 0
    for i, tok in enumerate(tokens):
        if tok.kind == "punct":
            if tok.text == "(":
                paren_depth += 1
            elif tok.text == ")":
                paren_depth -= 1
            elif tok.text == "[":
                bracket_depth += 1
            elif tok.text == "]":
                bracket_depth -= 1
            continue
        if tok.kind != "ident" or tok.text in _KEYWORDS or bracket_depth > 0:
            continue
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        if nxt is not None and nxt.text == "(":
            arity = _application_arity(tokens, i + 1)
            out.append(
                (
                    PredicateSignature(tok.text, arity),
                    Occurrence(rule_index, tok.pos - base, tok.pos - base + len(tok.text), arity),
                )
            )
        elif kind == DIRECTIVE and nxt is not None and nxt.text == "/":
            if i + 2 < len(tokens) and tokens[i + 2].kind == "num":
                arity = int(tokens[i + 2].text)
                out.append(
                    (
                        PredicateSignature(tok.text, arity),
                        Occurrence(rule_index, tok.pos - base, tok.pos - base + len(tok.text), arity),
                    )
                )
        elif paren_depth == 0 and kind != DIRECTIVE:
            out.append(
                (
                    PredicateSignature(tok.text, 0),
                    Occurrence(rule_index, tok.pos - base, tok.pos - base + len(tok.text), 0),
                )
            )
    return out


def _application_arity(tokens: list[_Token], open_idx: int) -> int:
    depth = 0
    commas = 0
    saw_any = False
    for tok in tokens[open_idx:]:
        if tok.text in ("(", "{", "["):
            depth += 1
        elif tok.text in (")", "}", "]"):
            depth -= 1
            if depth == 0:
                break
        elif depth == 1:
            saw_any = True
            if tok.text == ",":
                commas += 1
        elif depth > 1:
            saw_any = True
    return commas + 1 if saw_any else 0


def tokenize(source: str) -> list[_Token]:
    """Public tokenizer entry point (used by the mutation operators)."""
    return _tokenize(source)


def parse_program(source: str) -> Program:
    """Parse ASP source into classified rules with a predicate occurrence index."""
    tokens = _tokenize(source)
    segments = _segment(source, tokens)
    comments = _comment_spans(source)

    # interleave rule segments and the comments that fall between them
    pieces: list[tuple[int, int, list[_Token] | None]] = [(s, e, toks) for s, e, toks in segments]
    for cs, ce in comments:
        if not any(s <= cs < e for s, e, _ in segments):
            pieces.append((cs, ce, None))
    pieces.sort(key=lambda p: p[0])

    rules: list[RuleText] = []
    index: dict[PredicateSignature, list[Occurrence]] = {}
    for start, end, toks in pieces:
        text = source[start:end].strip()
        if toks is None:
            rules.append(RuleText(COMMENT, text))
            continue
        kind, weak_level = _classify(toks)
        rule_index = len(rules)
        rules.append(RuleText(kind, text, weak_level))
        for sig, occ in _index_rule(rule_index, start, toks, kind):
            index.setdefault(sig, []).append(occ)

    program = Program(rules=rules, predicate_index=index)
    program.source_hash = hashlib.sha256(program.text().encode()).hexdigest()
    return program


# --- rewriting operations ------------------------------------------------


def rename_predicates(program: Program, mapping: dict[str, str]) -> Program:
    """Rename candidate predicate names to gold names across all arities.

    `mapping` is candidate-name -> gold-name. Raises MappingCollision when
    two distinct occurring names would end up identical, and
    InvalidIdentifier for malformed target names.
    """
    for target in mapping.values():
        if not _IDENT_RE.fullmatch(target):
            raise InvalidIdentifier(f"not a valid predicate name: {target!r}")
    occurring = program.predicate_names()
    effective = {name: mapping.get(name, name) for name in occurring}
    by_target: dict[str, list[str]] = {}
    for src, dst in effective.items():
        by_target.setdefault(dst, []).append(src)
    for dst, srcs in sorted(by_target.items()):
        if len(srcs) > 1:
            raise MappingCollision(
                f"predicates {sorted(srcs)} would all become {dst!r}"
            )

    replacements: dict[int, list[tuple[int, int, str]]] = {}
    for sig, occs in program.predicate_index.items():
        new_name = mapping.get(sig.name)
        if new_name is None or new_name == sig.name:
            continue
        for occ in occs:
            replacements.setdefault(occ.rule_index, []).append((occ.start, occ.end, new_name))

    new_texts: list[str] = []
    for i, rule in enumerate(program.rules):
        text = rule.text
        for start, end, new_name in sorted(replacements.get(i, []), reverse=True):
            text = text[:start] + new_name + text[end:]
        new_texts.append(text)
    return parse_program("\n".join(new_texts))


def strip_input_facts(program: Program, inputs: set[PredicateSignature]) -> Program:
    """Remove ground facts over the input predicates; all other rules stay verbatim."""
    kept: list[str] = []
    for rule in program.rules:
        if rule.kind == FACT and _fact_signature(rule.text) in inputs:
            continue
        kept.append(rule.text)
    return parse_program("\n".join(kept))


def _fact_signature(text: str) -> PredicateSignature | None:
    tokens = _tokenize(text)
    if not tokens or tokens[0].kind != "ident":
        return None
    if len(tokens) >= 2 and tokens[1].text == "(":
        return PredicateSignature(tokens[0].text, _application_arity(tokens, 1))
    return PredicateSignature(tokens[0].text, 0)


def drop_show_directives(program: Program) -> Program:
    """Drop #show directives so projection stays under harness control."""
    kept = [r.text for r in program.rules if not (r.kind == DIRECTIVE and r.text.startswith("#show"))]
    return parse_program("\n".join(kept))


def max_weak_level(program: Program) -> int:
    """Highest weak-constraint priority in the program, 0 if there are none.

    `#minimize`/`#maximize` directives are scanned too: a candidate may
    optimize through them, and steering constraints must outrank it.
    """
    levels = [r.weak_level for r in program.rules if r.kind == WEAK_CONSTRAINT and r.weak_level is not None]
    for rule in program.rules:
        if rule.kind == DIRECTIVE and re.match(r"#(minimize|maximize)\b", rule.text):
            levels.extend(int(m) for m in re.findall(r"@(-?\d+)", rule.text))
    return max(levels, default=0)


# --- ground atoms ---------------------------------------------------------


def parse_atom(text: str) -> GroundAtom:
    """Parse a ground atom as printed by the solver into canonical form."""
    canonical = _squeeze(text)
    if not canonical:
        raise ValueError("empty atom")
    head, args = _split_application(canonical)
    return GroundAtom(head, tuple(args))


def _squeeze(text: str) -> str:
    """Drop whitespace outside quoted strings."""
    out = []
    in_str = False
    i = 0
    while i < len(text):
        c = text[i]
        if in_str:
            out.append(c)
            if c == "\\" and i + 1 < len(text):
                out.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                in_str = False
        elif c == '"':
            in_str = True
            out.append(c)
        elif not c.isspace():
            out.append(c)
        i += 1
    return "".join(out)


def _split_application(canonical: str) -> tuple[str, list[str]]:
    lp = canonical.find("(")
    if lp < 0:
        return canonical, []
    if not canonical.endswith(")"):
        raise ValueError(f"malformed atom: {canonical!r}")
    head = canonical[:lp]
    args: list[str] = []
    depth = 0
    start = lp + 1
    in_str = False
    for i in range(lp, len(canonical)):
        c = canonical[i]
        if in_str:
            if c == "\\":
                continue
            if c == '"':
                in_str = False
            continue
        if c == '"':
            in_str = True
        elif c in "({[":
            depth += 1
        elif c in ")}]":
            depth -= 1
            if depth == 0 and i != len(canonical) - 1:
                raise ValueError(f"malformed atom: {canonical!r}")
        elif c == "," and depth == 1:
            args.append(canonical[start:i])
            start = i + 1
    args.append(canonical[start:-1])
    if any(not a for a in args):
        raise ValueError(f"malformed atom: {canonical!r}")
    return head, args


def project_atoms(atoms: frozenset[GroundAtom] | set[GroundAtom], preds: set[PredicateSignature]) -> frozenset[GroundAtom]:
    """Subset of atoms whose (predicate, arity) is in preds."""
    return frozenset(a for a in atoms if a.signature in preds)


def atoms_to_facts(atoms) -> str:
    """Render atoms as a fact-only program, sorted for determinism."""
    return "\n".join(f"{a.canonical_text}." for a in sorted(atoms)) + ("\n" if atoms else "")
