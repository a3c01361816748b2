"""
Parser for the similarity GROUP BY query language.

Accepted form (keywords are case-insensitive)::

    SELECT agg(...), ... FROM relation [WHERE col op literal [AND ...]]
    GROUP BY x, y DISTANCE-TO-ALL L2|LINF WITHIN eps ON-OVERLAP JOIN-ANY|ELIMINATE|FORM-NEW-GROUP
    GROUP BY x, y DISTANCE-TO-ANY L2|LINF WITHIN eps

Also accepted: DISTANCE-ALL / DISTANCE-ANY, ``WITHIN eps USING lone|ltwo``, ON_OVERLAP,
FORM-NEW, ``GROUP BY x AND y``, and a named parameter in place of eps (bound at execution).
Identifiers may contain hyphens (``GPSCoor-lat``).
"""

import math
import re
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum

from similarity_groupby.exceptions import QuerySemanticError, QuerySyntaxError
from similarity_groupby.geometry import Metric
from similarity_groupby.logger import get_logger
from similarity_groupby.model import GroupingMode, OverlapPolicy
from similarity_groupby.relation import ColumnType, Relation

logger = get_logger(__name__)

__all__ = [
    "AggregateFunction",
    "AggregateSpec",
    "Predicate",
    "QueryPlan",
    "Token",
    "TokenType",
    "tokenize",
    "parse",
    "render_plan",
    "validate_plan",
]


class TokenType(str, Enum):
    IDENT = "identifier"
    NUMBER = "number"
    STRING = "string"
    OPERATOR = "operator"
    PUNCT = "punctuation"
    EOF = "end of query"


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    line: int
    column: int

    @property
    def upper(self) -> str:
        return self.text.upper()

    def describe(self) -> str:
        return "end of query" if self.type is TokenType.EOF else repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    |(?P<comment>--[^\n]*)
    |(?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    |(?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
    |(?P<quoted>"[^"\n]+")
    |(?P<string>'(?:[^']|'')*')
    |(?P<operator><=|>=|<>|!=|=|<|>)
    |(?P<punct>[(),*;])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    """
    Split query text into tokens, tracking 1-based line and column.

    Raises
    ------
        QuerySyntaxError: On a character that starts no token, or an unterminated string.

    """
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            message = "unterminated string literal" if text[pos] == "'" else f"unexpected character {text[pos]!r}"
            raise QuerySyntaxError(message, line, column, text[pos : pos + 10])
        kind = match.lastgroup
        value = match.group()
        if kind == "number":
            tokens.append(Token(TokenType.NUMBER, value, line, column))
        elif kind == "ident":
            tokens.append(Token(TokenType.IDENT, value, line, column))
        elif kind == "quoted":
            tokens.append(Token(TokenType.IDENT, value[1:-1], line, column))
        elif kind == "string":
            tokens.append(Token(TokenType.STRING, value[1:-1].replace("''", "'"), line, column))
        elif kind == "operator":
            tokens.append(Token(TokenType.OPERATOR, value, line, column))
        elif kind == "punct":
            tokens.append(Token(TokenType.PUNCT, value, line, column))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = match.end()
    tokens.append(Token(TokenType.EOF, "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------- plan


class AggregateFunction(str, Enum):
    COUNT = "count"
    SUM = "sum"
    AVG = "avg"
    MIN = "min"
    MAX = "max"
    COLLECT = "collect"
    HULL_POLYGON = "hull_polygon"


AGGREGATE_NAMES: dict[str, AggregateFunction] = {
    "COUNT": AggregateFunction.COUNT,
    "SUM": AggregateFunction.SUM,
    "AVG": AggregateFunction.AVG,
    "AVERAGE": AggregateFunction.AVG,
    "MIN": AggregateFunction.MIN,
    "MAX": AggregateFunction.MAX,
    "COLLECT": AggregateFunction.COLLECT,
    "LIST-ID": AggregateFunction.COLLECT,
    "LIST_ID": AggregateFunction.COLLECT,
    "ARRAY_AGG": AggregateFunction.COLLECT,
    "HULL_POLYGON": AggregateFunction.HULL_POLYGON,
    "ST_POLYGON": AggregateFunction.HULL_POLYGON,
}

NUMERIC_ONLY = frozenset({AggregateFunction.SUM, AggregateFunction.AVG})


@dataclass(frozen=True)
class AggregateSpec:
    """One select-list aggregate. ``arg`` is None for ``*`` and for hull_polygon."""

    fn: AggregateFunction
    arg: str | None = None

    def render(self) -> str:
        if self.fn is AggregateFunction.HULL_POLYGON:
            return "hull_polygon()"
        return f"{self.fn.value}({self.arg if self.arg is not None else '*'})"


@dataclass(frozen=True)
class Predicate:
    """``column op literal``; ``op`` is one of = != < <= > >=."""

    column: str
    op: str
    value: int | float | str

    def render(self) -> str:
        return f"{self.column} {self.op} {_render_literal(self.value)}"


@dataclass(frozen=True)
class QueryPlan:
    """
    Parsed similarity group-by query.

    Attributes
    ----------
        source: Relation named in FROM.
        projections: Aggregates in select-list order.
        filters: WHERE conjuncts.
        group_cols: The two grouping columns (x, y).
        mode: ALL or ANY semantics.
        metric: L2 or LINF.
        eps: Numeric threshold, None while a parameter is unbound.
        eps_param: Name of the threshold parameter, if one was used.
        overlap_policy: ON-OVERLAP policy (ALL only).
        notes: Non-canonical spellings seen while parsing; not part of equality.

    """

    source: str
    projections: tuple[AggregateSpec, ...]
    filters: tuple[Predicate, ...]
    group_cols: tuple[str, str]
    mode: GroupingMode
    metric: Metric
    eps: float | None
    eps_param: str | None = None
    overlap_policy: OverlapPolicy | None = None
    notes: tuple[str, ...] = field(default=(), compare=False)

    def bind(self, params: Mapping[str, float] | None = None) -> "QueryPlan":
        """
        Resolve a named threshold.

        Raises
        ------
            QuerySemanticError: If the parameter is missing or not a positive finite number.

        """
        params = params or {}
        if self.eps_param is None:
            if params:
                logger.warning(f"Query has a numeric threshold; ignoring parameters {sorted(params)}")
            return self
        lookup = {name.lower(): value for name, value in params.items()}
        if self.eps_param.lower() not in lookup:
            raise QuerySemanticError(
                f"threshold parameter {self.eps_param!r} is not bound",
                solution=f"Pass --param {self.eps_param}=<value>",
            )
        try:
            value = float(lookup[self.eps_param.lower()])
        except (TypeError, ValueError) as e:
            raise QuerySemanticError(f"threshold parameter {self.eps_param!r} is not a number") from e
        if not math.isfinite(value) or value <= 0:
            raise QuerySemanticError(f"threshold parameter {self.eps_param!r} must be a positive number, got {value}")
        return replace(self, eps=value)


def _render_number(value: float | int) -> str:
    if isinstance(value, float) and value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _render_literal(value: int | float | str) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    return _render_number(value)


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*")


def _render_ident(name: str) -> str:
    if _IDENT_RE.fullmatch(name) and name.upper() not in RESERVED:
        return name
    return f'"{name}"'


def render_plan(plan: QueryPlan) -> str:
    """
    Canonical query text for a plan; parsing it gives back an equal plan.

    Example:
    -------
        >>> render_plan(parse("select COUNT(*) from T group by a, b distance-any within 2 using ltwo"))
        'SELECT count(*) FROM T GROUP BY a, b DISTANCE-TO-ANY L2 WITHIN 2'

    """
    parts = ["SELECT", ", ".join(_render_aggregate(spec) for spec in plan.projections), "FROM", _render_ident(plan.source)]
    if plan.filters:
        parts.append("WHERE")
        parts.append(" AND ".join(f"{_render_ident(p.column)} {p.op} {_render_literal(p.value)}" for p in plan.filters))
    parts += ["GROUP BY", f"{_render_ident(plan.group_cols[0])}, {_render_ident(plan.group_cols[1])}"]
    parts.append("DISTANCE-TO-ALL" if plan.mode is GroupingMode.ALL else "DISTANCE-TO-ANY")
    threshold = plan.eps_param if plan.eps_param is not None else _render_number(plan.eps)
    parts += [plan.metric.value, "WITHIN", threshold]
    if plan.mode is GroupingMode.ALL and plan.overlap_policy is not None:
        parts += ["ON-OVERLAP", plan.overlap_policy.value]
    return " ".join(parts)


def _render_aggregate(spec: AggregateSpec) -> str:
    if spec.fn is AggregateFunction.HULL_POLYGON:
        return spec.render()
    return f"{spec.fn.value}({_render_ident(spec.arg) if spec.arg is not None else '*'})"


# -------------------------------------------------------------------------- parser

ALL_KEYWORDS = {"DISTANCE-TO-ALL", "DISTANCE-ALL"}
ANY_KEYWORDS = {"DISTANCE-TO-ANY", "DISTANCE-ANY"}
OVERLAP_KEYWORDS = {"ON-OVERLAP", "ON_OVERLAP"}
METRICS: dict[str, Metric] = {"L2": Metric.L2, "LINF": Metric.LINF, "LTWO": Metric.L2, "LONE": Metric.LINF}
POLICIES: dict[str, OverlapPolicy] = {
    "JOIN-ANY": OverlapPolicy.JOIN_ANY,
    "ELIMINATE": OverlapPolicy.ELIMINATE,
    "FORM-NEW-GROUP": OverlapPolicy.FORM_NEW_GROUP,
    "FORM-NEW": OverlapPolicy.FORM_NEW_GROUP,
}
RESERVED = {"SELECT", "FROM", "WHERE", "AND", "GROUP", "BY", "GROUPBY", "WITHIN", "USING"} | ALL_KEYWORDS | ANY_KEYWORDS | OVERLAP_KEYWORDS
COMPARISONS = {"=", "!=", "<>", "<", "<=", ">", ">="}


class _Parser:
    """Recursive-descent parser over the token list with one token of lookahead."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0
        self._notes: list[str] = []

    # -- helpers

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self._tokens[self._pos]
        if token.type is not TokenType.EOF:
            self._pos += 1
        return token

    def _error(self, expected: str, token: Token | None = None) -> QuerySyntaxError:
        token = token or self._peek()
        return QuerySyntaxError(f"expected {expected}, found {token.describe()}", token.line, token.column, token.text)

    def _at_keyword(self, *words: str) -> bool:
        token = self._peek()
        return token.type is TokenType.IDENT and token.upper in words

    def _match_keyword(self, *words: str) -> Token | None:
        if self._at_keyword(*words):
            return self._advance()
        return None

    def _expect_keyword(self, *words: str) -> Token:
        token = self._match_keyword(*words)
        if token is None:
            raise self._error(" or ".join(words))
        return token

    def _match_punct(self, symbol: str) -> Token | None:
        token = self._peek()
        if token.type is TokenType.PUNCT and token.text == symbol:
            return self._advance()
        return None

    def _expect_punct(self, symbol: str) -> Token:
        token = self._match_punct(symbol)
        if token is None:
            raise self._error(f"'{symbol}'")
        return token

    def _expect_name(self, what: str) -> Token:
        token = self._peek()
        if token.type is not TokenType.IDENT or token.upper in RESERVED:
            raise self._error(what)
        return self._advance()

    def _note(self, token: Token, canonical: str) -> None:
        if token.upper != canonical:
            self._notes.append(f"{token.line}:{token.column}: {token.text!r} read as {canonical}")

    # -- grammar

    def parse(self) -> QueryPlan:
        self._expect_keyword("SELECT")
        raw_projections = self._parse_select_list()
        self._expect_keyword("FROM")
        source = self._expect_name("relation name").text
        filters: list[Predicate] = []
        if self._match_keyword("WHERE"):
            filters.append(self._parse_predicate())
            while self._match_keyword("AND"):
                filters.append(self._parse_predicate())
        group_cols = self._parse_group_by()
        plan = self._parse_distance_clause(source, filters, group_cols, raw_projections)
        self._match_punct(";")
        if self._peek().type is not TokenType.EOF:
            raise self._error("end of query")
        return plan

    def _parse_select_list(self) -> list[tuple[Token, list[Token | None]]]:
        items = [self._parse_aggregate()]
        while self._match_punct(","):
            items.append(self._parse_aggregate())
        return items

    def _parse_aggregate(self) -> tuple[Token, list[Token | None]]:
        name = self._peek()
        if name.type is not TokenType.IDENT or name.upper in RESERVED:
            raise self._error("aggregate function")
        self._advance()
        if self._match_punct("(") is None:
            raise QuerySemanticError(
                f"bare column {name.text!r} in the select list; only aggregates are allowed",
                name.line,
                name.column,
                solution="Wrap the column in an aggregate such as count, min, max or collect",
            )
        args: list[Token | None] = []
        if self._match_punct(")"):
            return name, args
        while True:
            if self._match_punct("*"):
                args.append(None)
            else:
                args.append(self._expect_name("column name or '*'"))
            if self._match_punct(")"):
                return name, args
            self._expect_punct(",")

    def _parse_predicate(self) -> Predicate:
        column = self._expect_name("column name")
        op = self._peek()
        if op.type is not TokenType.OPERATOR or op.text not in COMPARISONS:
            raise self._error("comparison operator")
        self._advance()
        literal = self._peek()
        if literal.type is TokenType.NUMBER:
            self._advance()
            value: int | float | str = _number(literal.text)
        elif literal.type is TokenType.STRING:
            self._advance()
            value = literal.text
        else:
            raise self._error("number or quoted string")
        return Predicate(column.text, "!=" if op.text == "<>" else op.text, value)

    def _parse_group_by(self) -> tuple[str, str]:
        if self._match_keyword("GROUPBY") is None:
            self._expect_keyword("GROUP")
            self._expect_keyword("BY")
        first = self._expect_name("grouping column")
        if self._match_punct(",") is None and self._match_keyword("AND") is None:
            raise self._error("',' and a second grouping column")
        second = self._expect_name("second grouping column")
        return first.text, second.text

    def _parse_distance_clause(
        self,
        source: str,
        filters: list[Predicate],
        group_cols: tuple[str, str],
        raw_projections: list[tuple[Token, list[Token | None]]],
    ) -> QueryPlan:
        keyword = self._peek()
        if self._match_keyword(*ALL_KEYWORDS):
            mode = GroupingMode.ALL
            self._note(keyword, "DISTANCE-TO-ALL")
        elif self._match_keyword(*ANY_KEYWORDS):
            mode = GroupingMode.ANY
            self._note(keyword, "DISTANCE-TO-ANY")
        else:
            raise self._error("DISTANCE-TO-ALL or DISTANCE-TO-ANY")

        metric = self._match_metric()
        self._expect_keyword("WITHIN")
        eps, eps_param = self._parse_threshold()
        if self._match_keyword("USING"):
            using = self._match_metric()
            if using is None:
                raise self._error("L2, LINF, LTWO or LONE")
            if metric is not None and metric is not using:
                token = self._tokens[self._pos - 1]
                raise QuerySemanticError("conflicting metrics before WITHIN and after USING", token.line, token.column)
            metric = using
        if metric is None:
            raise self._error("metric (L2 or LINF) before WITHIN or USING after the threshold")

        policy: OverlapPolicy | None = None
        overlap = self._peek()
        if self._match_keyword(*OVERLAP_KEYWORDS):
            self._note(overlap, "ON-OVERLAP")
            policy_token = self._peek()
            if policy_token.type is not TokenType.IDENT or policy_token.upper not in POLICIES:
                raise self._error("JOIN-ANY, ELIMINATE or FORM-NEW-GROUP")
            self._advance()
            policy = POLICIES[policy_token.upper]
            self._note(policy_token, policy.value)
            if mode is GroupingMode.ANY:
                raise QuerySemanticError(
                    "ON-OVERLAP is not allowed with DISTANCE-TO-ANY; overlapping groups always merge",
                    overlap.line,
                    overlap.column,
                    solution="Remove the ON-OVERLAP clause or use DISTANCE-TO-ALL",
                )
        elif mode is GroupingMode.ALL:
            raise self._error("ON-OVERLAP clause")

        projections = tuple(self._build_aggregate(name, args, group_cols) for name, args in raw_projections)
        return QueryPlan(
            source=source,
            projections=projections,
            filters=tuple(filters),
            group_cols=group_cols,
            mode=mode,
            metric=metric,
            eps=eps,
            eps_param=eps_param,
            overlap_policy=policy,
            notes=tuple(self._notes),
        )

    def _match_metric(self) -> Metric | None:
        token = self._peek()
        if token.type is TokenType.IDENT and token.upper in METRICS:
            self._advance()
            metric = METRICS[token.upper]
            self._note(token, metric.value)
            return metric
        return None

    def _parse_threshold(self) -> tuple[float | None, str | None]:
        token = self._peek()
        if token.type is TokenType.NUMBER:
            self._advance()
            eps = float(token.text)
            if not math.isfinite(eps) or eps <= 0:
                raise QuerySemanticError(f"similarity threshold must be positive, got {token.text}", token.line, token.column)
            return eps, None
        if token.type is TokenType.IDENT and token.upper not in RESERVED and token.upper not in METRICS:
            self._advance()
            return None, token.text
        raise self._error("threshold (number or parameter name)")

    def _build_aggregate(self, name: Token, args: list[Token | None], group_cols: tuple[str, str]) -> AggregateSpec:
        fn = AGGREGATE_NAMES.get(name.upper)
        if fn is None:
            raise QuerySemanticError(
                f"unknown aggregate function {name.text!r}",
                name.line,
                name.column,
                solution=f"Use one of {', '.join(sorted(f.value for f in AggregateFunction))}",
            )
        self._note(name, fn.value.upper())
        if fn is AggregateFunction.HULL_POLYGON:
            given = [a.text.lower() for a in args if a is not None]
            if args and (len(args) != 2 or given != [c.lower() for c in group_cols]):
                raise QuerySemanticError(
                    f"{name.text} takes no arguments or exactly the grouping columns {group_cols[0]}, {group_cols[1]}",
                    name.line,
                    name.column,
                )
            return AggregateSpec(fn)
        if len(args) != 1:
            raise QuerySemanticError(f"{name.text} takes exactly one argument, got {len(args)}", name.line, name.column)
        arg = args[0]
        if arg is None:
            if fn is not AggregateFunction.COUNT:
                raise QuerySemanticError(f"{name.text}(*) is not defined; only count accepts '*'", name.line, name.column)
            return AggregateSpec(fn)
        return AggregateSpec(fn, arg.text)


def _number(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse(query_text: str) -> QueryPlan:
    """
    Parse query text into a plan.

    Raises
    ------
        QuerySyntaxError: When the text does not follow the grammar (with line and column).
        QuerySemanticError: For a non-positive threshold, ON-OVERLAP on ANY, unknown aggregates
            and wrong aggregate arguments.

    """
    plan = _Parser(tokenize(query_text)).parse()
    for note in plan.notes:
        logger.debug(f"Non-canonical spelling {note}")
    return plan


def validate_plan(plan: QueryPlan, relation: Relation) -> None:
    """
    Check a plan against the relation it will run on.

    Raises
    ------
        QuerySemanticError: On a relation name mismatch, unknown columns, non-numeric grouping
            columns, sum/avg over text, or an unbound threshold.

    """
    if plan.source.lower() != relation.name.lower():
        raise QuerySemanticError(f"query reads {plan.source!r} but the relation is {relation.name!r}")
    for column in plan.group_cols:
        kind = relation.column_type(column)
        if kind is None:
            raise QuerySemanticError(f"unknown grouping column {column!r}; columns are {relation.columns}")
        if not kind.is_numeric:
            raise QuerySemanticError(f"grouping column {column!r} is {kind.value}, not numeric")
    for predicate in plan.filters:
        kind = relation.column_type(predicate.column)
        if kind is None:
            raise QuerySemanticError(f"unknown column {predicate.column!r} in WHERE")
        if kind.is_numeric != (not isinstance(predicate.value, str)):
            raise QuerySemanticError(f"cannot compare {kind.value} column {predicate.column!r} with {_render_literal(predicate.value)}")
    for spec in plan.projections:
        if spec.arg is None:
            continue
        kind = relation.column_type(spec.arg)
        if kind is None:
            raise QuerySemanticError(f"unknown column {spec.arg!r} in {spec.render()}")
        if spec.fn in NUMERIC_ONLY and kind is ColumnType.TEXT:
            raise QuerySemanticError(f"{spec.fn.value} needs a numeric column, {spec.arg!r} is text")
    if plan.eps is None:
        raise QuerySemanticError(f"threshold parameter {plan.eps_param!r} is not bound")
