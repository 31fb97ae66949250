"""Search DSL: parsing, evaluation against a store, and canonical formatting.

Grammar (keywords are lowercase and case-sensitive; whitespace is free):

    query      = "search" "publications"
                 [ "in" scope "for" STRING ]
                 [ "where" predicate { "and" predicate } ]
                 "return" "publications" "[" projection "]"
                 [ "sort" "by" FIELD [ "asc" | "desc" ] ]
                 [ "limit" INT ] [ "skip" INT ]
    scope      = "title_only" | "full_data"
    predicate  = FIELD ( "=" value | ">" NUMBER | "<" NUMBER
                       | "in" "[" STRING { "," STRING } "]"
                       | "is" "not" "empty" )
    projection = "all" | FIELD { "+" FIELD }
    FIELD      = IDENT { "." IDENT }

Only conjunctive queries are supported. By default a page holds 20 records;
`limit` may not exceed 1000. Sorting by a count-like field (times_cited,
altmetric, relative_citation_ratio) defaults to descending, anything else
to ascending; an explicit asc/desc suffix overrides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable

from .corpus import CitationStore, Publication
from .errors import DslEvaluationError, DslParseError

DEFAULT_LIMIT = 20
MAX_LIMIT = 1000

#: sort direction defaults: score-like fields rank high-to-low
DESCENDING_BY_DEFAULT = frozenset({"times_cited", "altmetric", "relative_citation_ratio"})


@dataclass(frozen=True)
class TextSearch:
    scope: str  # "title_only" | "full_data"
    phrase: str


@dataclass(frozen=True)
class Predicate:
    field: str
    op: str  # "eq" | "gt" | "lt" | "in_set" | "is_not_empty"
    value: str | int | float | tuple[str, ...] | None = None


@dataclass(frozen=True)
class SortSpec:
    field: str
    descending: bool


@dataclass(frozen=True)
class DslQuery:
    source: str = "publications"
    text_search: TextSearch | None = None
    predicates: tuple[Predicate, ...] = ()
    projection: str | tuple[str, ...] = "all"
    sort: SortSpec | None = None
    limit: int = DEFAULT_LIMIT
    skip: int = 0


@dataclass
class ResultPage:
    """One page of matches plus the total match count before paging."""

    items: list[dict] = field(default_factory=list)
    total_count: int = 0
    raw_body: str | None = None


# ---------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | STRING | NUMBER | SYMBOL | EOF
    value: str | int | float
    offset: int  # byte offset into the query text


_SYMBOLS = "=><[],+."


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        start = pos
        if ch == '"':
            pos += 1
            out: list[str] = []
            while pos < n and text[pos] != '"':
                if text[pos] == "\\" and pos + 1 < n and text[pos + 1] in ('"', "\\"):
                    out.append(text[pos + 1])
                    pos += 2
                else:
                    out.append(text[pos])
                    pos += 1
            if pos >= n:
                raise DslParseError("unterminated string literal", _byte_offset(text, start))
            pos += 1
            tokens.append(_Token("STRING", "".join(out), _byte_offset(text, start)))
        elif ch.isdigit() or (ch == "-" and pos + 1 < n and text[pos + 1].isdigit()):
            pos += 1
            while pos < n and (text[pos].isdigit() or text[pos] == "."):
                pos += 1
            raw = text[start:pos]
            value: int | float
            try:
                value = float(raw) if "." in raw else int(raw)
            except ValueError:
                raise DslParseError(f"bad number {raw!r}", _byte_offset(text, start)) from None
            tokens.append(_Token("NUMBER", value, _byte_offset(text, start)))
        elif ch.isalpha() or ch == "_":
            pos += 1
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            tokens.append(_Token("IDENT", text[start:pos], _byte_offset(text, start)))
        elif ch in _SYMBOLS:
            pos += 1
            tokens.append(_Token("SYMBOL", ch, _byte_offset(text, start)))
        else:
            raise DslParseError(f"unexpected character {ch!r}", _byte_offset(text, start))
    tokens.append(_Token("EOF", "", _byte_offset(text, n)))
    return tokens


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: str) -> DslParseError:
        tok = self.peek()
        got = "end of input" if tok.kind == "EOF" else repr(tok.value)
        return DslParseError(f"expected {expected}, got {got}", tok.offset)

    def expect_keyword(self, word: str) -> None:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.value != word:
            raise self.fail(f"keyword '{word}'")
        self.next()

    def expect_symbol(self, sym: str) -> None:
        tok = self.peek()
        if tok.kind != "SYMBOL" or tok.value != sym:
            raise self.fail(f"'{sym}'")
        self.next()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.value == word

    def ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.fail(what)
        self.next()
        return str(tok.value)

    def string(self, what: str = "string literal") -> str:
        tok = self.peek()
        if tok.kind != "STRING":
            raise self.fail(what)
        self.next()
        return str(tok.value)

    def number(self, what: str = "number") -> int | float:
        tok = self.peek()
        if tok.kind != "NUMBER":
            raise self.fail(what)
        self.next()
        return tok.value  # type: ignore[return-value]

    def integer(self, what: str = "integer") -> int:
        tok = self.peek()
        value = self.number(what)
        if not isinstance(value, int):
            raise DslParseError(f"expected {what}, got {value!r}", tok.offset)
        return value

    def field_path(self) -> str:
        parts = [self.ident("field name")]
        while self.peek().kind == "SYMBOL" and self.peek().value == ".":
            self.next()
            parts.append(self.ident("field name"))
        return ".".join(parts)

    def predicate(self) -> Predicate:
        fieldname = self.field_path()
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.value == "=":
            self.next()
            vtok = self.peek()
            if vtok.kind == "STRING":
                return Predicate(fieldname, "eq", self.string())
            if vtok.kind == "NUMBER":
                return Predicate(fieldname, "eq", self.number())
            raise self.fail("string or number")
        if tok.kind == "SYMBOL" and tok.value == ">":
            self.next()
            return Predicate(fieldname, "gt", self.number())
        if tok.kind == "SYMBOL" and tok.value == "<":
            self.next()
            return Predicate(fieldname, "lt", self.number())
        if tok.kind == "IDENT" and tok.value == "in":
            self.next()
            self.expect_symbol("[")
            values = [self.string()]
            while self.peek().kind == "SYMBOL" and self.peek().value == ",":
                self.next()
                values.append(self.string())
            self.expect_symbol("]")
            return Predicate(fieldname, "in_set", tuple(values))
        if tok.kind == "IDENT" and tok.value == "is":
            self.next()
            self.expect_keyword("not")
            self.expect_keyword("empty")
            return Predicate(fieldname, "is_not_empty")
        raise self.fail("'=', '>', '<', 'in', or 'is not empty'")

    def query(self) -> DslQuery:
        self.expect_keyword("search")
        self.expect_keyword("publications")

        text_search = None
        if self.at_keyword("in"):
            self.next()
            scope = self.ident("search scope")
            if scope not in ("title_only", "full_data"):
                raise DslParseError(
                    f"expected 'title_only' or 'full_data', got {scope!r}",
                    self.tokens[self.pos - 1].offset,
                )
            self.expect_keyword("for")
            phrase = self.string("search phrase")
            text_search = TextSearch(scope=scope, phrase=phrase)

        predicates: list[Predicate] = []
        if self.at_keyword("where"):
            self.next()
            predicates.append(self.predicate())
            while self.at_keyword("and"):
                self.next()
                predicates.append(self.predicate())

        self.expect_keyword("return")
        self.expect_keyword("publications")
        self.expect_symbol("[")
        projection: str | tuple[str, ...]
        if self.at_keyword("all"):
            self.next()
            projection = "all"
        else:
            fields = [self.field_path()]
            while self.peek().kind == "SYMBOL" and self.peek().value == "+":
                self.next()
                fields.append(self.field_path())
            projection = tuple(fields)
        self.expect_symbol("]")

        sort = None
        if self.at_keyword("sort"):
            self.next()
            self.expect_keyword("by")
            sort_field = self.field_path()
            descending = sort_field in DESCENDING_BY_DEFAULT
            if self.at_keyword("asc"):
                self.next()
                descending = False
            elif self.at_keyword("desc"):
                self.next()
                descending = True
            sort = SortSpec(field=sort_field, descending=descending)

        limit = DEFAULT_LIMIT
        if self.at_keyword("limit"):
            self.next()
            tok = self.peek()
            limit = self.integer("limit value")
            if not 1 <= limit <= MAX_LIMIT:
                raise DslParseError(f"limit must be in [1, {MAX_LIMIT}]", tok.offset)

        skip = 0
        if self.at_keyword("skip"):
            self.next()
            tok = self.peek()
            skip = self.integer("skip value")
            if skip < 0:
                raise DslParseError("skip must be nonnegative", tok.offset)

        if self.peek().kind != "EOF":
            raise self.fail("end of query")

        return DslQuery(
            text_search=text_search,
            predicates=tuple(predicates),
            projection=projection,
            sort=sort,
            limit=limit,
            skip=skip,
        )


def parse(text: str) -> DslQuery:
    """Parse query text into its AST. Raises DslParseError with byte offset."""
    return _Parser(text).query()


# ---------------------------------------------------------------------------
# formatting


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_predicate(pred: Predicate) -> str:
    if pred.op == "eq":
        literal = _quote(pred.value) if isinstance(pred.value, str) else str(pred.value)
        return f"{pred.field} = {literal}"
    if pred.op == "gt":
        return f"{pred.field} > {pred.value}"
    if pred.op == "lt":
        return f"{pred.field} < {pred.value}"
    if pred.op == "in_set":
        return f"{pred.field} in [" + ", ".join(_quote(v) for v in pred.value) + "]"
    if pred.op == "is_not_empty":
        return f"{pred.field} is not empty"
    raise ValueError(f"unknown predicate op {pred.op!r}")


def format(query: DslQuery) -> str:  # noqa: A001 - name fixed by the API
    """Canonical text for a query; parse(format(q)) == q.

    Sort direction is always written explicitly; default limit/skip are
    omitted.
    """
    parts = ["search publications"]
    if query.text_search is not None:
        parts.append(f"in {query.text_search.scope} for {_quote(query.text_search.phrase)}")
    if query.predicates:
        parts.append("where " + " and ".join(_format_predicate(p) for p in query.predicates))
    if query.projection == "all":
        parts.append("return publications[all]")
    else:
        parts.append("return publications[" + "+".join(query.projection) + "]")
    if query.sort is not None:
        parts.append(f"sort by {query.sort.field} {'desc' if query.sort.descending else 'asc'}")
    if query.limit != DEFAULT_LIMIT:
        parts.append(f"limit {query.limit}")
    if query.skip != 0:
        parts.append(f"skip {query.skip}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# evaluation

# field name -> (extractor, is_list). Extractors return None for absent values.
_FIELDS: dict[str, tuple] = {
    "id": (lambda p: p.id, False),
    "doi": (lambda p: p.doi, False),
    "title": (lambda p: p.title, False),
    "year": (lambda p: p.year, False),
    "times_cited": (lambda p: p.times_cited, False),
    "altmetric": (lambda p: p.altmetric, False),
    "relative_citation_ratio": (lambda p: p.rcr, False),
    "references": (lambda p: list(p.reference_ids), True),
    "authors": (lambda p: list(p.authors), True),
    "issn": (lambda p: list(p.venue.issn), True),
    "journal": (lambda p: p.venue.journal_title, False),
    "journal.title": (lambda p: p.venue.journal_title, False),
    "FOR": (lambda p: [{"code": f.code, "name": f.name} for f in p.for_fields], True),
    "FOR.name": (lambda p: [f.name for f in p.for_fields], True),
    "FOR.code": (lambda p: [f.code for f in p.for_fields], True),
}


def _extract(pub: Publication, fieldname: str):
    try:
        getter, is_list = _FIELDS[fieldname]
    except KeyError:
        raise DslEvaluationError(f"unknown field {fieldname!r}") from None
    return getter(pub), is_list


def _matches(pub: Publication, pred: Predicate) -> bool:
    value, is_list = _extract(pub, pred.field)
    if pred.op == "eq":
        if is_list:
            return pred.value in value
        return value is not None and value == pred.value
    if pred.op in ("gt", "lt"):
        if is_list or isinstance(value, str):
            raise DslEvaluationError(f"field {pred.field!r} does not support numeric comparison")
        if value is None:
            return False
        return value > pred.value if pred.op == "gt" else value < pred.value
    if pred.op == "in_set":
        wanted = set(pred.value)
        if is_list:
            return any(v in wanted for v in value)
        return value in wanted
    if pred.op == "is_not_empty":
        if is_list:
            return len(value) > 0
        return value is not None and value != ""
    raise DslEvaluationError(f"unknown predicate op {pred.op!r}")


def _sort_key(pub: Publication, fieldname: str):
    value, is_list = _extract(pub, fieldname)
    if is_list:
        raise DslEvaluationError(f"cannot sort by list field {fieldname!r}")
    # absent values sort as the smallest possible key (last under descending)
    if value is None or value == "":
        return (0, 0)
    return (1, value)


def _project(pub: Publication, projection: str | tuple[str, ...]) -> dict:
    if projection == "all":
        return pub.to_dict()
    out = {}
    for name in projection:
        value, _ = _extract(pub, name)
        out[name] = value
    return out


def evaluate(store: CitationStore, query: DslQuery) -> ResultPage:
    """Run a query over the store's ingested records.

    Title search is case-insensitive phrase containment; full_data scope
    also matches titles only because corpus records carry no abstracts.
    Matches are ordered by the sort key with ties (and the no-sort case)
    broken by id ascending; total_count counts all matches before paging.
    """
    if query.projection != "all":
        for name in query.projection:
            if name not in _FIELDS:
                raise DslEvaluationError(f"unknown projection field {name!r}")
    if query.sort is not None and query.sort.field not in _FIELDS:
        raise DslEvaluationError(f"unknown sort field {query.sort.field!r}")

    phrase = query.text_search.phrase.lower() if query.text_search else None
    matched = []
    for pub_id in sorted(store.records):
        pub = store.records[pub_id]
        if phrase is not None and phrase not in pub.title.lower():
            continue
        if all(_matches(pub, pred) for pred in query.predicates):
            matched.append(pub)

    if query.sort is not None:
        sort = query.sort
        matched.sort(key=lambda p: _sort_key(p, sort.field), reverse=sort.descending)

    total = len(matched)
    window = matched[query.skip : query.skip + query.limit]
    return ResultPage(items=[_project(p, query.projection) for p in window], total_count=total)


def page_to_body(page: ResultPage) -> str:
    """Canonical JSON body for a result page (wire response shape)."""
    doc = {
        "items": {"publications": page.items},
        "_stats": {"total_count": page.total_count},
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def strip_paging(query: DslQuery) -> DslQuery:
    """The query with default paging; used as the canonical archive key."""
    return replace(query, limit=DEFAULT_LIMIT, skip=0)


def concat_pages(pages: Iterable[ResultPage]) -> list[dict]:
    """Stitch page items in order (paging-algebra helper for callers/tests)."""
    out: list[dict] = []
    for page in pages:
        out.extend(page.items)
    return out
