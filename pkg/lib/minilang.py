"""The annotated contract language: tokenizer, parser, scope checks and a reference interpreter.

The surface syntax follows the Java-like listings contracts are published in::

    contract Crowdfunding {
      int minimum = 1000;
      // requires 0 < n
      // ensures \\result >= minimum
      int crowdfund(int n, int[] inputs) {
        int sum = 0;
        // invariant 0 <= i && i <= n
        for (int i = 0; i < n; i++) { sum += inputs[i]; }
        return sum;
      }
    }

Values are unbounded integers. Arrays are read-only parameters. Annotations
live in ``//`` comments: ``requires``/``ensures`` before a method,
``invariant`` before a loop or after a field declaration (a class
invariant). A comment starting with ``&&`` or ``||`` continues the previous
annotation. A method named ``init`` is a constructor and does not assume
the class invariants.
"""
import operator
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterator, Mapping, NamedTuple, Union

from utils.exceptions import AnnotationSemanticError, MiniLangSyntaxError, UnboundedLoopError, UnknownVariableError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

RESULT = "\\result"
OLD_PREFIX = "\\old:"
IMPLIES = "==>"
MAX_EXECUTION_STEPS = 100_000


# ---- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    array: str
    index: "Expr"


@dataclass(frozen=True)
class Old:
    expr: "Expr"


@dataclass(frozen=True)
class Result:
    pass


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Index, Old, Result, Unary, Binary]


class AnnotationKind(str, Enum):
    REQUIRES = "requires"
    ENSURES = "ensures"
    INVARIANT = "invariant"


@dataclass(frozen=True)
class Annotation:
    kind: AnnotationKind
    expr: Expr
    text: str
    line: int
    owner: str = ""


@dataclass(frozen=True)
class Decl:
    name: str
    init: Expr | None


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Block | None


@dataclass(frozen=True)
class For:
    init: Union[Decl, Assign, None]
    cond: Expr
    update: Assign | None
    body: Block
    invariants: tuple[Annotation, ...]
    line: int


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    invariants: tuple[Annotation, ...]
    line: int


@dataclass(frozen=True)
class Return:
    expr: Expr | None


Stmt = Union[Decl, Assign, Block, If, For, While, Return]


@dataclass(frozen=True)
class Param:
    name: str
    is_array: bool = False


@dataclass(frozen=True)
class Method:
    name: str
    params: tuple[Param, ...]
    returns_value: bool
    body: Block
    requires: tuple[Annotation, ...]
    ensures: tuple[Annotation, ...]

    @property
    def is_constructor(self) -> bool:
        return self.name == "init"


@dataclass(frozen=True)
class FieldDecl:
    name: str
    init: Expr | None


@dataclass(frozen=True)
class Contract:
    name: str
    fields: tuple[FieldDecl, ...]
    methods: tuple[Method, ...]
    invariants: tuple[Annotation, ...]

    def method(self, name: str) -> Method:
        for method in self.methods:
            if method.name == name:
                return method
        raise UnknownVariableError(f"contract {self.name} has no method {name!r}")

    @property
    def constants(self) -> dict[str, int]:
        """Fields with a literal initializer that no method assigns."""
        assigned = {name for method in self.methods for name in assigned_names(method.body)}
        return {f.name: f.init.value for f in self.fields if isinstance(f.init, Num) and f.name not in assigned}

    def annotations(self) -> list[Annotation]:
        found = list(self.invariants)
        for method in self.methods:
            found += method.requires
            found += method.ensures
            found += [a for loop in loops(method.body) for a in loop.invariants]
        return found


def walk(block: Block) -> Iterator[Stmt]:
    for stmt in block.stmts:
        yield stmt
        if isinstance(stmt, Block):
            yield from walk(stmt)
        elif isinstance(stmt, If):
            yield from walk(stmt.then)
            if stmt.orelse is not None:
                yield from walk(stmt.orelse)
        elif isinstance(stmt, (For, While)):
            if isinstance(stmt, For):
                for part in (stmt.init, stmt.update):
                    if part is not None:
                        yield part
            yield from walk(stmt.body)


def loops(block: Block) -> list[For | While]:
    return [stmt for stmt in walk(block) if isinstance(stmt, (For, While))]


def assigned_names(block: Block) -> set[str]:
    return {stmt.name for stmt in walk(block) if isinstance(stmt, (Assign, Decl))}


def free_names(expr: Expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Index):
        return {expr.array} | free_names(expr.index)
    if isinstance(expr, Old):
        return free_names(expr.expr)
    if isinstance(expr, Unary):
        return free_names(expr.operand)
    if isinstance(expr, Binary):
        return free_names(expr.left) | free_names(expr.right)
    return set()


def show(expr: Expr) -> str:
    if isinstance(expr, Num):
        return str(expr.value)
    if isinstance(expr, Var):
        if expr.name.startswith(OLD_PREFIX):
            return f"\\old({expr.name[len(OLD_PREFIX):]})"
        return expr.name
    if isinstance(expr, Index):
        return f"{expr.array}[{show(expr.index)}]"
    if isinstance(expr, Old):
        return f"\\old({show(expr.expr)})"
    if isinstance(expr, Result):
        return RESULT
    if isinstance(expr, Unary):
        return f"{expr.op}{show(expr.operand)}" if expr.op == "-" else f"!({show(expr.operand)})"
    return f"({show(expr.left)} {expr.op} {show(expr.right)})"


# ---- tokenizer -------------------------------------------------------------

KEYWORDS = {"contract", "int", "void", "if", "else", "for", "while", "return"}

_TOKEN = re.compile(
    r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+)
  | (?P<name>\\?[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\+\+|--|\+=|-=|==|!=|<=|>=|&&|\|\||[-+*<>=!(){}\[\];,.])
    """,
    re.VERBOSE,
)
_ANNOTATION = re.compile(r"//\s*(requires|ensures|invariant)\b(.*)")
_CONTINUATION = re.compile(r"//\s*(&&|\|\|)(.*)")


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str, line: int = 1, column: int = 1) -> list[Token]:
    tokens = []
    position = 0
    line_start = position - (column - 1)
    while position < len(source):
        match = _TOKEN.match(source, position)
        if match is None:
            raise MiniLangSyntaxError(f"unexpected character {source[position]!r}", line, position - line_start + 1)
        kind, text = match.lastgroup, match.group()
        col = position - line_start + 1
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind == "comment":
            annotation = _ANNOTATION.match(text)
            continuation = _CONTINUATION.match(text)
            if annotation:
                tokens.append(Token("annotation", text, line, col))
            elif continuation and tokens and tokens[-1].kind == "annotation":
                last = tokens[-1]
                tokens[-1] = last._replace(text=f"{last.text} {continuation.group(1)} {continuation.group(2).strip()}")
        elif kind != "space":
            if kind == "name" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, col))
        position = match.end()
    tokens.append(Token("eof", "", line, position - line_start + 1))
    return tokens


# ---- parser ----------------------------------------------------------------

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*",),
)


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.position = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def fail(self, message: str, token: Token | None = None):
        token = token or self.current
        raise MiniLangSyntaxError(message, token.line, token.column)

    def check(self, text: str) -> bool:
        return self.current.text == text and self.current.kind in ("op", "keyword")

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.position += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.check(text):
            self.fail(f"expected {text!r}, found {self.current.text or 'end of input'!r}")
        token = self.current
        self.position += 1
        return token

    def name(self) -> str:
        if self.current.kind != "name" or self.current.text.startswith("\\"):
            self.fail(f"expected a name, found {self.current.text or 'end of input'!r}")
        token = self.current
        self.position += 1
        return token.text

    def annotations(self, owner: str = "") -> list[Annotation]:
        found = []
        while self.current.kind == "annotation":
            found.append(parse_annotation(self.current, owner))
            self.position += 1
        return found

    # expressions

    def expression(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expression(level + 1)
        while self.current.kind == "op" and self.current.text in _BINARY_LEVELS[level]:
            op = self.current.text
            self.position += 1
            left = Binary(op, left, self.expression(level + 1))
        return left

    def unary(self) -> Expr:
        if self.accept("!"):
            return Unary("!", self.unary())
        if self.accept("-"):
            operand = self.unary()
            return Num(-operand.value) if isinstance(operand, Num) else Unary("-", operand)
        return self.primary()

    def primary(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.position += 1
            return Num(int(token.text))
        if self.accept("("):
            inner = self.expression()
            self.expect(")")
            return inner
        if token.kind == "name" and token.text == RESULT:
            self.position += 1
            return Result()
        if token.kind == "name" and token.text == "\\old":
            self.position += 1
            self.expect("(")
            inner = self.expression()
            self.expect(")")
            return Old(inner)
        name = self.name()
        if self.accept("["):
            index = self.expression()
            self.expect("]")
            return Index(name, index)
        return Var(name)

    # statements

    def block(self) -> Block:
        self.expect("{")
        stmts = []
        while not self.check("}"):
            if self.current.kind == "eof":
                self.fail("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return Block(tuple(stmts))

    def body(self) -> Block:
        return self.block() if self.check("{") else Block((self.statement(),))

    def simple(self) -> Union[Decl, Assign]:
        if self.accept("int"):
            target = self.name()
            return Decl(target, self.expression() if self.accept("=") else None)
        target = self.name()
        if self.accept("="):
            return Assign(target, self.expression())
        if self.accept("+="):
            return Assign(target, Binary("+", Var(target), self.expression()))
        if self.accept("-="):
            return Assign(target, Binary("-", Var(target), self.expression()))
        if self.accept("++"):
            return Assign(target, Binary("+", Var(target), Num(1)))
        if self.accept("--"):
            return Assign(target, Binary("-", Var(target), Num(1)))
        self.fail(f"expected an assignment to {target}")

    def statement(self) -> Stmt:
        invariants = self.annotations()
        if any(a.kind is not AnnotationKind.INVARIANT for a in invariants):
            self.fail("only loop invariants may annotate a statement")
        token = self.current
        if invariants and not (self.check("for") or self.check("while")):
            self.fail("a loop invariant must precede a loop")
        if self.check("{"):
            return self.block()
        if self.accept("if"):
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.body()
            return If(cond, then, self.body() if self.accept("else") else None)
        if self.accept("for"):
            self.expect("(")
            init = None if self.check(";") else self.simple()
            self.expect(";")
            cond = self.expression()
            self.expect(";")
            update = None if self.check(")") else self.simple()
            if isinstance(update, Decl):
                self.fail("a for-loop update cannot declare a variable")
            self.expect(")")
            return For(init, cond, update, self.body(), tuple(invariants), token.line)
        if self.accept("while"):
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            return While(cond, self.body(), tuple(invariants), token.line)
        if self.accept("return"):
            value = None if self.check(";") else self.expression()
            self.expect(";")
            return Return(value)
        stmt = self.simple()
        self.expect(";")
        return stmt

    # declarations

    def contract(self) -> Contract:
        self.expect("contract")
        name = self.name()
        self.expect("{")
        fields, methods, invariants = [], [], []
        while not self.check("}"):
            if self.current.kind == "eof":
                self.fail("unterminated contract")
            annotations = self.annotations()
            invariants += [replace(a, owner=name) for a in annotations if a.kind is AnnotationKind.INVARIANT]
            annotations = [a for a in annotations if a.kind is not AnnotationKind.INVARIANT]
            if self.check("}") and not annotations:
                break
            if self.accept("void"):
                methods.append(self.method(self.name(), False, annotations))
                continue
            self.expect("int")
            member = self.name()
            if self.check("("):
                methods.append(self.method(member, True, annotations))
                continue
            if annotations:
                self.fail("requires/ensures must precede a method")
            init = self.expression() if self.accept("=") else None
            self.expect(";")
            fields.append(FieldDecl(member, init))
        self.expect("}")
        if self.current.kind != "eof":
            self.fail("text after the contract body")
        return Contract(name, tuple(fields), tuple(methods), tuple(invariants))

    def method(self, name: str, returns_value: bool, annotations: list[Annotation]) -> Method:
        self.expect("(")
        params = []
        while not self.check(")"):
            self.expect("int")
            is_array = self.accept("[")
            if is_array:
                self.expect("]")
            params.append(Param(self.name(), is_array))
            if not self.accept(","):
                break
        self.expect(")")
        body = self.block()
        annotations = [replace(a, owner=name) for a in annotations]
        requires = tuple(a for a in annotations if a.kind is AnnotationKind.REQUIRES)
        ensures = tuple(a for a in annotations if a.kind is AnnotationKind.ENSURES)
        return Method(name, tuple(params), returns_value, body, requires, ensures)


def parse_annotation(token: Token, owner: str = "") -> Annotation:
    match = _ANNOTATION.match(token.text)
    kind = AnnotationKind(match.group(1))
    text = match.group(2).strip().rstrip(";").strip()
    if not text:
        raise MiniLangSyntaxError(f"empty {kind.value} annotation", token.line, token.column)
    offset = token.text.index(match.group(2)) + 1
    parser = Parser(tokenize(text, token.line, token.column + offset))
    expr = parser.expression()
    if parser.current.kind != "eof":
        parser.fail("unexpected text after the annotation expression")
    return Annotation(kind, expr, text, token.line, owner)


# ---- semantic checks -------------------------------------------------------


def _check_expr(expr: Expr, scope: set[str], arrays: set[str], where: str, allow_result: bool, allow_old: bool):
    if isinstance(expr, Result):
        if not allow_result:
            raise AnnotationSemanticError(f"{where}: \\result is only meaningful in a postcondition of a value-returning method")
        return
    if isinstance(expr, Old):
        if not allow_old:
            raise AnnotationSemanticError(f"{where}: \\old refers to the pre-state and is only valid in ensures")
        _check_expr(expr.expr, scope, arrays, where, allow_result, False)
        return
    if isinstance(expr, Var):
        if expr.name in arrays:
            raise AnnotationSemanticError(f"{where}: array {expr.name} used as an integer")
        if expr.name not in scope:
            raise UnknownVariableError(f"{where}: unknown variable {expr.name!r}")
        return
    if isinstance(expr, Index):
        if expr.array not in arrays:
            raise UnknownVariableError(f"{where}: {expr.array!r} is not an array")
        _check_expr(expr.index, scope, arrays, where, allow_result, allow_old)
        return
    if isinstance(expr, Unary):
        _check_expr(expr.operand, scope, arrays, where, allow_result, allow_old)
    elif isinstance(expr, Binary):
        _check_expr(expr.left, scope, arrays, where, allow_result, allow_old)
        _check_expr(expr.right, scope, arrays, where, allow_result, allow_old)


def _check_block(block: Block, scope: set[str], arrays: set[str], method: Method):
    scope = set(scope)
    for stmt in block.stmts:
        _check_stmt(stmt, scope, arrays, method)


def _check_stmt(stmt: Stmt, scope: set[str], arrays: set[str], method: Method):
    where = f"method {method.name}"
    if isinstance(stmt, Decl):
        if stmt.init is not None:
            _check_expr(stmt.init, scope, arrays, where, False, False)
        scope.add(stmt.name)
    elif isinstance(stmt, Assign):
        if stmt.name not in scope:
            raise UnknownVariableError(f"{where}: assignment to undeclared {stmt.name!r}")
        _check_expr(stmt.expr, scope, arrays, where, False, False)
    elif isinstance(stmt, Block):
        _check_block(stmt, scope, arrays, method)
    elif isinstance(stmt, If):
        _check_expr(stmt.cond, scope, arrays, where, False, False)
        _check_block(stmt.then, scope, arrays, method)
        if stmt.orelse is not None:
            _check_block(stmt.orelse, scope, arrays, method)
    elif isinstance(stmt, (For, While)):
        inner = set(scope)
        if isinstance(stmt, For) and stmt.init is not None:
            _check_stmt(stmt.init, inner, arrays, method)
        _check_expr(stmt.cond, inner, arrays, where, False, False)
        for annotation in stmt.invariants:
            _check_expr(annotation.expr, inner, arrays, f"{where} line {annotation.line}", False, False)
        _check_block(stmt.body, inner, arrays, method)
        if isinstance(stmt, For) and stmt.update is not None:
            _check_stmt(stmt.update, inner, arrays, method)
    elif isinstance(stmt, Return):
        if (stmt.expr is None) == method.returns_value:
            raise AnnotationSemanticError(f"{where}: return does not match the declared result type")
        if stmt.expr is not None:
            _check_expr(stmt.expr, scope, arrays, where, False, False)


def check_contract(contract: Contract):
    field_names = {f.name for f in contract.fields}
    for f in contract.fields:
        if f.init is not None:
            _check_expr(f.init, set(), set(), f"field {f.name}", False, False)
    for annotation in contract.invariants:
        _check_expr(annotation.expr, field_names, set(), f"class invariant line {annotation.line}", False, False)
    for method in contract.methods:
        arrays = {p.name for p in method.params if p.is_array}
        scope = field_names | {p.name for p in method.params if not p.is_array}
        for annotation in method.requires:
            _check_expr(annotation.expr, scope, arrays, f"requires of {method.name}", False, False)
        for annotation in method.ensures:
            _check_expr(annotation.expr, scope, arrays, f"ensures of {method.name}", method.returns_value, True)
        _check_block(method.body, scope, arrays, method)


def parse_annotations(source: str) -> tuple[Contract, list[Annotation]]:
    contract = Parser(tokenize(source)).contract()
    check_contract(contract)
    annotations = contract.annotations()
    logger.debug(f"parsed contract {contract.name}: {len(contract.methods)} methods, {len(annotations)} annotations")
    return contract, annotations


# ---- interpreter -----------------------------------------------------------


class ArrayValue:
    """A total integer array: unset cells come from a fill function and are memoised."""

    def __init__(self, values: Mapping[int, int] | list[int] = (), fill: Callable[[int], int] | None = None):
        self.cells = dict(enumerate(values)) if isinstance(values, (list, tuple)) else dict(values)
        self.fill = fill

    def __getitem__(self, index: int) -> int:
        if index not in self.cells:
            if self.fill is None:
                raise IndexError(f"array cell {index} was never set")
            self.cells[index] = self.fill(index)
        return self.cells[index]


Value = int | ArrayValue


class _Returned(Exception):
    def __init__(self, value: int | None):
        self.value = value


@dataclass
class LoopViolation:
    line: int
    invariant: str
    state: dict[str, int]


@dataclass
class Execution:
    result: int | None
    state: dict[str, int]
    old: dict[str, int]
    violations: list[LoopViolation] = field(default_factory=list)


def evaluate(expr: Expr, env: Mapping[str, Value], old: Mapping[str, Value] | None = None, result: int | None = None) -> int:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Index):
        return env[expr.array][evaluate(expr.index, env, old, result)]
    if isinstance(expr, Old):
        return evaluate(expr.expr, old if old is not None else env, None, result)
    if isinstance(expr, Result):
        return result
    if isinstance(expr, Unary):
        value = evaluate(expr.operand, env, old, result)
        return int(not value) if expr.op == "!" else -value
    op = expr.op
    if op == IMPLIES:
        return int(not evaluate(expr.left, env, old, result) or bool(evaluate(expr.right, env, old, result)))
    if op == "&&":
        return int(bool(evaluate(expr.left, env, old, result)) and bool(evaluate(expr.right, env, old, result)))
    if op == "||":
        return int(bool(evaluate(expr.left, env, old, result)) or bool(evaluate(expr.right, env, old, result)))
    left, right = evaluate(expr.left, env, old, result), evaluate(expr.right, env, old, result)
    return int(BINARY_OPS[op](left, right))


BINARY_OPS: dict[str, Callable] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class Interpreter:
    def __init__(self, contract: Contract, max_steps: int = MAX_EXECUTION_STEPS):
        self.contract = contract
        self.max_steps = max_steps
        self._steps = 0

    def initial_fields(self) -> dict[str, int]:
        env: dict[str, int] = {}
        for f in self.contract.fields:
            env[f.name] = evaluate(f.init, env) if f.init is not None else 0
        return env

    def run(self, method_name: str, args: Mapping[str, Value], fields: Mapping[str, int] | None = None) -> Execution:
        method = self.contract.method(method_name)
        env: dict[str, Value] = dict(self.initial_fields() if fields is None else fields)
        for param in method.params:
            env[param.name] = args[param.name]
        old = dict(env)
        self._steps = 0
        violations: list[LoopViolation] = []
        try:
            self._block(method.body, env, violations)
            result = None
        except _Returned as returned:
            result = returned.value
        state = {name: value for name, value in env.items() if isinstance(value, int)}
        return Execution(result, state, old, violations)

    def _tick(self, line: int):
        self._steps += 1
        if self._steps > self.max_steps:
            raise UnboundedLoopError(f"loop at line {line} ran for more than {self.max_steps} steps")

    def _block(self, block: Block, env: dict[str, Value], violations: list[LoopViolation]):
        declared = []
        try:
            for stmt in block.stmts:
                if isinstance(stmt, Decl) and stmt.name not in env:
                    declared.append(stmt.name)
                self._stmt(stmt, env, violations)
        finally:
            for name in declared:
                env.pop(name, None)

    def _check_invariants(self, loop: For | While, env: dict[str, Value], violations: list[LoopViolation]):
        for annotation in loop.invariants:
            if not evaluate(annotation.expr, env):
                state = {k: v for k, v in env.items() if isinstance(v, int)}
                violations.append(LoopViolation(loop.line, annotation.text, state))

    def _stmt(self, stmt: Stmt, env: dict[str, Value], violations: list[LoopViolation]):
        if isinstance(stmt, Decl):
            env[stmt.name] = evaluate(stmt.init, env) if stmt.init is not None else 0
        elif isinstance(stmt, Assign):
            env[stmt.name] = evaluate(stmt.expr, env)
        elif isinstance(stmt, Block):
            self._block(stmt, env, violations)
        elif isinstance(stmt, If):
            if evaluate(stmt.cond, env):
                self._block(stmt.then, env, violations)
            elif stmt.orelse is not None:
                self._block(stmt.orelse, env, violations)
        elif isinstance(stmt, For):
            scope = dict(env)
            if stmt.init is not None:
                self._stmt(stmt.init, scope, violations)
            while True:
                self._check_invariants(stmt, scope, violations)
                if not evaluate(stmt.cond, scope):
                    break
                self._tick(stmt.line)
                self._block(stmt.body, scope, violations)
                if stmt.update is not None:
                    self._stmt(stmt.update, scope, violations)
            for name in env:
                env[name] = scope[name]
        elif isinstance(stmt, While):
            while True:
                self._check_invariants(stmt, env, violations)
                if not evaluate(stmt.cond, env):
                    break
                self._tick(stmt.line)
                self._block(stmt.body, env, violations)
        elif isinstance(stmt, Return):
            raise _Returned(evaluate(stmt.expr, env) if stmt.expr is not None else None)
