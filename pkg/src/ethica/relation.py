"""A small relational engine over CSV tables.

Tables are typed row multisets. Expressions use a functional syntax::

    select(join(EMPLOYEE, PERSON), Role = "clerk" AND Performance > 3.5)
    project(EMPLOYEE, pID, Performance)
    group(select(join(EMPLOYEE, PERSON), Role = "manager"), Gender)

``group`` returns one row per distinct combination of the grouping columns
plus an integer ``count`` column.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import os
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Iterable, Union

from .errors import EvaluationError, ParseError, ValidationError

TEXT, INTEGER, DECIMAL, BOOLEAN, DATE = "text", "integer", "decimal", "boolean", "date"
TYPES = (TEXT, INTEGER, DECIMAL, BOOLEAN, DATE)
NUMERIC = (INTEGER, DECIMAL)
NULL = "\\N"
COUNT = "count"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# -- values -----------------------------------------------------------------

def coerce(raw: str, type_: str) -> Any:
    """Convert one CSV field to its typed value; ``\\N`` is null."""
    if raw == NULL:
        return None
    if type_ == TEXT:
        return raw
    s = raw.strip()
    if type_ == INTEGER:
        if not re.fullmatch(r"[+-]?\d+", s):
            raise ValueError(f"not an integer: {raw!r}")
        return int(s)
    if type_ == DECIMAL:
        try:
            d = Decimal(s)
        except InvalidOperation:
            raise ValueError(f"not a decimal: {raw!r}") from None
        if not d.is_finite():
            raise ValueError(f"not a finite decimal: {raw!r}")
        return d
    if type_ == BOOLEAN:
        low = s.lower()
        if low in ("true", "t", "1", "yes"):
            return True
        if low in ("false", "f", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if type_ == DATE:
        try:
            datetime.date.fromisoformat(s)
        except ValueError:
            raise ValueError(f"not an ISO-8601 date: {raw!r}") from None
        return s
    raise ValueError(f"unknown type {type_!r}")


def format_value(value: Any) -> str:
    if value is None:
        return NULL
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


# -- schema & tables --------------------------------------------------------

@dataclass(frozen=True)
class Column:
    name: str
    type: str


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]
    key: tuple[str, ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValidationError(f"duplicate column(s): {', '.join(sorted(dupes))}")
        for c in self.columns:
            if c.type not in TYPES:
                raise ValidationError(f"column {c.name!r}: unknown type {c.type!r}")
        missing = [k for k in self.key if k not in names]
        if missing:
            raise ValidationError(f"key column(s) not in schema: {', '.join(missing)}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise EvaluationError(f"unknown column {name!r} (have: {', '.join(self.names)})")

    def type_of(self, name: str) -> str:
        return self.columns[self.index(name)].type

    def has(self, name: str) -> bool:
        return name in self.names


@dataclass(frozen=True)
class Table:
    name: str
    schema: Schema
    rows: tuple[tuple, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        width = len(self.schema.columns)
        for i, r in enumerate(self.rows):
            if len(r) != width:
                raise ValidationError(
                    f"table {self.name}: row {i} has {len(r)} values, expected {width}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def columns(self) -> tuple[str, ...]:
        return self.schema.names

    def column(self, name: str) -> list:
        i = self.schema.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict]:
        names = self.columns
        return [dict(zip(names, r)) for r in self.rows]

    def with_rows(self, rows: Iterable[tuple], name: str | None = None) -> Table:
        """Same columns, new rows; derived tables carry no key."""
        return Table(name or self.name, Schema(self.schema.columns), tuple(rows))

    def resolve(self, name: str) -> str:
        """Case-insensitive column lookup returning the stored spelling."""
        if self.schema.has(name):
            return name
        hits = [c for c in self.columns if c.lower() == name.lower()]
        if len(hits) == 1:
            return hits[0]
        raise EvaluationError(
            f"table {self.name}: unknown column {name!r} (have: {', '.join(self.columns)})")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(v) for v in r])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def check_key(table: Table) -> None:
    key = table.schema.key
    if not key:
        return
    idx = [table.schema.index(k) for k in key]
    seen: dict[tuple, int] = {}
    for rownum, r in enumerate(table.rows, start=1):
        k = tuple(r[i] for i in idx)
        if k in seen:
            raise ValidationError(
                f"table {table.name}: duplicate key {dict(zip(key, k))} "
                f"(data rows {seen[k]} and {rownum})")
        seen[k] = rownum


@dataclass(frozen=True)
class Database:
    tables: dict[str, Table]
    # sha256 of each table's CSV bytes, when loaded from disk
    digests: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise EvaluationError(
                f"unknown table {name!r} (have: {', '.join(sorted(self.tables))})") from None

    def digest(self, name: str) -> str:
        if name in self.digests:
            return self.digests[name]
        return hashlib.sha256(self[name].to_csv().encode("utf-8")).hexdigest()


def database(*tables: Table, check_keys: bool = True) -> Database:
    out = {}
    for t in tables:
        if t.name in out:
            raise ValidationError(f"duplicate table name {t.name!r}")
        if check_keys:
            check_key(t)
        out[t.name] = t
    return Database(out)


# -- loading ----------------------------------------------------------------

@dataclass
class _TableDecl:
    name: str
    file: str
    columns: list[Column] = field(default_factory=list)
    key: tuple[str, ...] = ()
    line: int = 0


def parse_manifest(text: str, source: str | None = None) -> list[_TableDecl]:
    decls: list[_TableDecl] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        kw = parts[0].lower()
        rest = parts[1].strip() if len(parts) > 1 else ""
        if kw == "table":
            m = re.fullmatch(r"(\S+)\s+file\s+(.+)", rest)
            if not m or not _IDENT.match(m.group(1)):
                raise ParseError("expected 'table <name> file <csv>'",
                                 line=lineno, source=source)
            decls.append(_TableDecl(m.group(1), m.group(2).strip(), line=lineno))
            continue
        if not decls:
            raise ParseError(f"{kw!r} before any 'table' line", line=lineno, source=source)
        if kw == "col":
            bits = rest.split()
            if len(bits) != 2 or not _IDENT.match(bits[0]):
                raise ParseError("expected 'col <name> <type>'", line=lineno, source=source)
            if bits[1].lower() not in TYPES:
                raise ParseError(f"unknown column type {bits[1]!r} "
                                 f"(expected one of {', '.join(TYPES)})",
                                 line=lineno, source=source)
            decls[-1].columns.append(Column(bits[0], bits[1].lower()))
        elif kw == "key":
            names = tuple(n.strip() for n in rest.split(",") if n.strip())
            if not names:
                raise ParseError("expected 'key <name>[, <name>...]'",
                                 line=lineno, source=source)
            decls[-1].key = names
        else:
            raise ParseError(f"unknown manifest keyword {kw!r}", line=lineno, source=source)
    return decls


def read_table(name: str, schema: Schema, data: bytes, source: str = "") -> Table:
    """Parse CSV bytes (header row mandatory) into a typed table."""
    label = source or name
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError(f"{label}: missing header row") from None
    except csv.Error as exc:
        raise ParseError(str(exc), line=1, source=label) from None
    header = [h.strip() for h in header]
    if sorted(header) != sorted(schema.names) or len(set(header)) != len(header):
        raise ValidationError(
            f"{label}: header {header} does not match declared columns {list(schema.names)}")
    order = [header.index(n) for n in schema.names]
    types = [c.type for c in schema.columns]
    rows = []
    try:
        for record in reader:
            if not record:
                continue
            lineno = reader.line_num
            if len(record) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(record)}",
                                 line=lineno, source=label)
            row = []
            for col_i, src_i in enumerate(order):
                try:
                    row.append(coerce(record[src_i], types[col_i]))
                except ValueError as exc:
                    raise ValidationError(
                        f"{label}: line {lineno}, column {schema.names[col_i]!r}: {exc}"
                    ) from None
            rows.append(tuple(row))
    except csv.Error as exc:
        raise ParseError(str(exc), line=reader.line_num, source=label) from None
    return Table(name, schema, tuple(rows))


def load_database(directory, manifest) -> Database:
    """Load every table declared in ``manifest``; CSV paths are relative to
    ``directory``. Missing files raise ``OSError``."""
    manifest = os.fspath(manifest)
    with open(manifest, encoding="utf-8") as fh:
        decls = parse_manifest(fh.read(), source=manifest)
    tables, digests = {}, {}
    for d in decls:
        if d.name in tables:
            raise ValidationError(f"{manifest}: table {d.name!r} declared twice")
        if not d.columns:
            raise ValidationError(f"{manifest}: table {d.name!r} declares no columns")
        schema = Schema(tuple(d.columns), d.key)
        path = os.path.join(os.fspath(directory), d.file)
        with open(path, "rb") as fh:
            data = fh.read()
        table = read_table(d.name, schema, data, source=path)
        check_key(table)
        tables[d.name] = table
        digests[d.name] = hashlib.sha256(data).hexdigest()
    return Database(tables, digests)


# -- expressions ------------------------------------------------------------

Literal = Union[str, int, Decimal, bool, None]
OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    column: str
    op: str
    value: Literal


@dataclass(frozen=True)
class And:
    left: Any
    right: Any


@dataclass(frozen=True)
class Or:
    left: Any
    right: Any


@dataclass(frozen=True)
class Not:
    operand: Any


Predicate = Union[Compare, And, Or, Not]


@dataclass(frozen=True)
class Base:
    table: str


@dataclass(frozen=True)
class Select:
    child: Any
    predicate: Predicate


@dataclass(frozen=True)
class NaturalJoin:
    left: Any
    right: Any


@dataclass(frozen=True)
class Project:
    child: Any
    columns: tuple[str, ...]


@dataclass(frozen=True)
class GroupCount:
    child: Any
    columns: tuple[str, ...]


RelExpr = Union[Base, Select, NaturalJoin, Project, GroupCount]


def base_tables(expr: RelExpr) -> set[str]:
    if isinstance(expr, Base):
        return {expr.table}
    if isinstance(expr, NaturalJoin):
        return base_tables(expr.left) | base_tables(expr.right)
    return base_tables(expr.child)


def _literal_text(v: Literal) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)


def pred_to_text(p: Predicate) -> str:
    if isinstance(p, Compare):
        return f"{p.column} {p.op} {_literal_text(p.value)}"
    if isinstance(p, Not):
        return f"NOT ({pred_to_text(p.operand)})"
    op = "AND" if isinstance(p, And) else "OR"
    return f"({pred_to_text(p.left)} {op} {pred_to_text(p.right)})"


def to_text(expr: RelExpr) -> str:
    if isinstance(expr, Base):
        return expr.table
    if isinstance(expr, Select):
        return f"select({to_text(expr.child)}, {pred_to_text(expr.predicate)})"
    if isinstance(expr, NaturalJoin):
        return f"join({to_text(expr.left)}, {to_text(expr.right)})"
    fn = "project" if isinstance(expr, Project) else "group"
    return f"{fn}({to_text(expr.child)}, {', '.join(expr.columns)})"


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|<>|=|<|>|≠|≤|≥)
  | (?P<punct>[(),])
""", re.VERBOSE)
_OP_ALIASES = {"<>": "!=", "≠": "!=", "≤": "<=", "≥": ">="}
_FUNCTIONS = ("select", "join", "project", "group")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", column=pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, msg: str):
        kind, val, pos = self.tok
        got = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"{msg}, got {got}", column=pos)

    def take(self, kind: str, value: str | None = None) -> str:
        k, v, _ = self.tok
        if k != kind or (value is not None and v != value):
            self.fail(f"expected {value or kind!r}")
        self.i += 1
        return v

    def at(self, kind: str, value: str | None = None) -> bool:
        k, v, _ = self.tok
        return k == kind and (value is None or v == value)

    def at_keyword(self, word: str) -> bool:
        k, v, _ = self.tok
        return k == "name" and v.upper() == word

    def parse(self) -> RelExpr:
        e = self.expr()
        if not self.at("end"):
            self.fail("expected end of expression")
        return e

    def expr(self) -> RelExpr:
        kind, name, pos = self.tok
        if kind != "name":
            self.fail("expected a table name or function")
        self.i += 1
        if not self.at("punct", "("):
            return Base(name)
        fn = name.lower()
        if fn not in _FUNCTIONS:
            raise ParseError(f"unknown function {name!r} "
                             f"(expected one of {', '.join(_FUNCTIONS)})", column=pos)
        self.take("punct", "(")
        child = self.expr()
        self.take("punct", ",")
        if fn == "select":
            out = Select(child, self.pred())
        elif fn == "join":
            out = NaturalJoin(child, self.expr())
        else:
            cols = [self.take("name")]
            while self.at("punct", ","):
                self.i += 1
                cols.append(self.take("name"))
            out = (Project if fn == "project" else GroupCount)(child, tuple(cols))
        self.take("punct", ")")
        return out

    def pred(self) -> Predicate:
        left = self.conj()
        while self.at_keyword("OR"):
            self.i += 1
            left = Or(left, self.conj())
        return left

    def conj(self) -> Predicate:
        left = self.neg()
        while self.at_keyword("AND"):
            self.i += 1
            left = And(left, self.neg())
        return left

    def neg(self) -> Predicate:
        if self.at_keyword("NOT"):
            self.i += 1
            return Not(self.neg())
        if self.at("punct", "("):
            self.i += 1
            p = self.pred()
            self.take("punct", ")")
            return p
        column = self.take("name")
        if not self.at("op"):
            self.fail("expected a comparison operator")
        op = self.take("op")
        return Compare(column, _OP_ALIASES.get(op, op), self.literal())

    def literal(self) -> Literal:
        kind, val, _ = self.tok
        if kind == "string":
            self.i += 1
            return re.sub(r"\\(.)", r"\1", val[1:-1])
        if kind == "number":
            self.i += 1
            return Decimal(val) if "." in val else int(val)
        if kind == "name" and val.upper() in ("TRUE", "FALSE", "NULL"):
            self.i += 1
            return {"TRUE": True, "FALSE": False, "NULL": None}[val.upper()]
        self.fail("expected a literal")


def parse_expr(text: str) -> RelExpr:
    """Parse the expression mini-language into an AST."""
    try:
        return _ExprParser(text).parse()
    except ParseError as exc:
        raise ParseError(f"{exc.message} in {text!r}", column=exc.column) from None


# -- evaluation -------------------------------------------------------------

def _compare(a, op: str, b) -> bool:
    if a is None or b is None:
        return False
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _check_literal(col: str, type_: str, value: Literal) -> Literal:
    if value is None:
        return None
    if type_ in NUMERIC:
        if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
            raise EvaluationError(f"type mismatch: {col} is {type_}, compared with {value!r}")
        return value
    if type_ == BOOLEAN:
        if not isinstance(value, bool):
            raise EvaluationError(f"type mismatch: {col} is boolean, compared with {value!r}")
        return value
    if not isinstance(value, str):
        raise EvaluationError(f"type mismatch: {col} is {type_}, compared with {value!r}")
    if type_ == DATE:
        try:
            datetime.date.fromisoformat(value)
        except ValueError:
            raise EvaluationError(f"{col}: {value!r} is not an ISO-8601 date") from None
    return value


def compile_predicate(p: Predicate, schema: Schema) -> Callable[[tuple], bool]:
    if isinstance(p, Compare):
        i = schema.index(p.column)
        value = _check_literal(p.column, schema.columns[i].type, p.value)
        op = p.op
        return lambda row: _compare(row[i], op, value)
    if isinstance(p, Not):
        f = compile_predicate(p.operand, schema)
        return lambda row: not f(row)
    f = compile_predicate(p.left, schema)
    g = compile_predicate(p.right, schema)
    if isinstance(p, And):
        return lambda row: f(row) and g(row)
    return lambda row: f(row) or g(row)


def natural_join(left: Table, right: Table, name: str | None = None) -> Table:
    shared = [c for c in left.columns if right.schema.has(c)]
    if not shared:
        raise EvaluationError(
            f"join of {left.name} and {right.name}: no shared column names")
    for c in shared:
        lt, rt = left.schema.type_of(c), right.schema.type_of(c)
        if lt != rt and not (lt in NUMERIC and rt in NUMERIC):
            raise EvaluationError(f"join column {c!r}: {lt} vs {rt}")
    li = [left.schema.index(c) for c in shared]
    ri = [right.schema.index(c) for c in shared]
    l_only = [i for i, c in enumerate(left.columns) if c not in shared]
    r_only = [i for i, c in enumerate(right.columns) if c not in shared]
    cols = ([left.schema.columns[i] for i in li]
            + [left.schema.columns[i] for i in l_only]
            + [right.schema.columns[i] for i in r_only])

    buckets: dict[tuple, list[tuple]] = {}
    for r in right.rows:
        k = tuple(r[i] for i in ri)
        if None in k:
            continue
        buckets.setdefault(k, []).append(r)
    rows = []
    for l in left.rows:
        k = tuple(l[i] for i in li)
        if None in k:
            continue
        for r in buckets.get(k, ()):
            rows.append(k + tuple(l[i] for i in l_only) + tuple(r[i] for i in r_only))
    return Table(name or f"join({left.name}, {right.name})", Schema(tuple(cols)), tuple(rows))


def group_count(t: Table, columns: Iterable[str], name: str | None = None) -> Table:
    columns = tuple(columns)
    if COUNT in columns:
        raise EvaluationError(f"cannot group on a column named {COUNT!r}")
    if len(set(columns)) != len(columns):
        raise EvaluationError("duplicate grouping column")
    idx = [t.schema.index(c) for c in columns]
    counts: dict[tuple, int] = {}
    for r in t.rows:
        k = tuple(r[i] for i in idx)
        counts[k] = counts.get(k, 0) + 1
    cols = tuple(t.schema.columns[i] for i in idx) + (Column(COUNT, INTEGER),)
    return Table(name or f"group({t.name})", Schema(cols),
                 tuple(k + (n,) for k, n in counts.items()))


def project(t: Table, columns: Iterable[str], name: str | None = None) -> Table:
    columns = tuple(columns)
    if len(set(columns)) != len(columns):
        raise EvaluationError("duplicate column in projection")
    idx = [t.schema.index(c) for c in columns]
    cols = tuple(t.schema.columns[i] for i in idx)
    return Table(name or f"project({t.name})", Schema(cols),
                 tuple(tuple(r[i] for i in idx) for r in t.rows))


def evaluate(db: Database, expr: RelExpr) -> Table:
    """Evaluate an expression; the result is a derived (keyless) table."""
    if isinstance(expr, Base):
        t = db[expr.table]
        return t.with_rows(t.rows)
    if isinstance(expr, Select):
        child = evaluate(db, expr.child)
        keep = compile_predicate(expr.predicate, child.schema)
        return child.with_rows((r for r in child.rows if keep(r)), name=to_text(expr))
    if isinstance(expr, NaturalJoin):
        return natural_join(evaluate(db, expr.left), evaluate(db, expr.right),
                            name=to_text(expr))
    if isinstance(expr, Project):
        return project(evaluate(db, expr.child), expr.columns, name=to_text(expr))
    if isinstance(expr, GroupCount):
        return group_count(evaluate(db, expr.child), expr.columns, name=to_text(expr))
    raise EvaluationError(f"not an expression: {expr!r}")
