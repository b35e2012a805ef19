"""Verification conditions by weakest precondition, and their exhaustive check over a bounded box.

Every VC is a closed formula; its free variables are read as universally
quantified. Loops contribute an initialization VC, a preservation VC and an
exit VC built from their invariants. ``\\old(x)`` becomes a variable that is
identified with ``x`` at method entry.
"""
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Sequence

import numpy as np

from lib.minilang import (
    IMPLIES,
    OLD_PREFIX,
    RESULT,
    BINARY_OPS,
    Assign,
    Binary,
    Block,
    Contract,
    Decl,
    Expr,
    For,
    If,
    Index,
    Method,
    Num,
    Old,
    Result,
    Return,
    Stmt,
    Unary,
    Var,
    While,
    assigned_names,
    free_names,
    loops,
    parse_annotations,
    show,
)
from utils.constants import DISCHARGE_CHUNK, DISCHARGE_POINT_CAP, VERIFY_BOUND
from utils.exceptions import UnboundedLoopError
from utils.logger_config import configure_logger
from utils.utils import sha256_hex

logger = configure_logger(__name__)

TRUE = Num(1)
FALSE = Num(0)


def conj(parts: Sequence[Expr]) -> Expr:
    parts = [p for p in parts if p != TRUE]
    return reduce(lambda a, b: Binary("&&", a, b), parts) if parts else TRUE


def implies(left: Expr, right: Expr) -> Expr:
    if left == TRUE or right == TRUE:
        return right
    return Binary(IMPLIES, left, right)


def negate(expr: Expr) -> Expr:
    return Unary("!", expr)


def subst(expr: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replaces variables (and ``\\result`` under the RESULT key) by expressions."""
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Result):
        return mapping.get(RESULT, expr)
    if isinstance(expr, Index):
        return Index(expr.array, subst(expr.index, mapping))
    if isinstance(expr, Unary):
        return Unary(expr.op, subst(expr.operand, mapping))
    if isinstance(expr, Binary):
        return Binary(expr.op, subst(expr.left, mapping), subst(expr.right, mapping))
    if isinstance(expr, Old):
        return Old(subst(expr.expr, mapping))
    return expr


def lower_old(expr: Expr) -> Expr:
    """Turns \\old(e) into e over pre-state variables."""
    if isinstance(expr, Old):
        names = free_names(expr.expr)
        return subst(lower_old(expr.expr), {name: Var(OLD_PREFIX + name) for name in names})
    if isinstance(expr, Index):
        return Index(expr.array, lower_old(expr.index))
    if isinstance(expr, Unary):
        return Unary(expr.op, lower_old(expr.operand))
    if isinstance(expr, Binary):
        return Binary(expr.op, lower_old(expr.left), lower_old(expr.right))
    return expr


@dataclass(frozen=True)
class VC:
    contract: str
    method: str
    kind: str
    line: int
    formula: Expr = field(repr=False)

    @property
    def tag(self) -> str:
        suffix = f"@{self.line}" if self.line else ""
        return f"{self.contract}.{self.method}:{self.kind}{suffix}"

    @property
    def tags(self) -> frozenset[str]:
        """Spec identifiers this VC establishes."""
        return frozenset({f"{self.contract}.{self.method}", f"{self.contract}.{self.method}:{self.kind}", self.tag})

    @property
    def text(self) -> str:
        return show(self.formula)

    @property
    def digest(self) -> str:
        return sha256_hex(f"{self.tag}\n{self.text}".encode())


def _loop_counter(loop: For) -> str:
    init, cond, update = loop.init, loop.cond, loop.update
    if not isinstance(init, (Decl, Assign)) or not isinstance(update, Assign):
        raise UnboundedLoopError(f"loop at line {loop.line} has no counter initialisation or update")
    counter = init.name
    steps = {Binary("+", Var(counter), Num(1)), Binary("-", Var(counter), Num(1))}
    if update.name != counter or update.expr not in steps:
        raise UnboundedLoopError(f"loop at line {loop.line} must step its counter {counter} by one")
    if not isinstance(cond, Binary) or cond.op not in ("<", "<=", ">", ">=") or cond.left != Var(counter):
        raise UnboundedLoopError(f"loop at line {loop.line} must compare its counter against a bound")
    written = assigned_names(loop.body)
    if counter in written or written & free_names(cond.right):
        raise UnboundedLoopError(f"loop at line {loop.line} writes its counter or bound inside the body")
    return counter


class _WeakestPrecondition:
    """One pass over a method body; ``focus`` selects the loop whose initialization is isolated."""

    def __init__(self, vc_for: Any, post: Expr, focus: For | None = None):
        self.vc_for = vc_for
        self.post = post
        self.focus = focus
        self.side: list[VC] = []
        self.focus_vc: Expr | None = None

    def block(self, block: Block, q: Expr) -> Expr:
        for stmt in reversed(block.stmts):
            q = self.stmt(stmt, q)
        return q

    def stmt(self, stmt: Stmt, q: Expr) -> Expr:
        if isinstance(stmt, Decl):
            return subst(q, {stmt.name: stmt.init if stmt.init is not None else Num(0)})
        if isinstance(stmt, Assign):
            return subst(q, {stmt.name: stmt.expr})
        if isinstance(stmt, Block):
            return self.block(stmt, q)
        if isinstance(stmt, If):
            otherwise = self.block(stmt.orelse, q) if stmt.orelse is not None else q
            return conj([implies(stmt.cond, self.block(stmt.then, q)), implies(negate(stmt.cond), otherwise)])
        if isinstance(stmt, Return):
            return subst(self.post, {RESULT: stmt.expr}) if stmt.expr is not None else self.post
        if isinstance(stmt, While):
            raise UnboundedLoopError(f"while loop at line {stmt.line} has no static bound")
        return self.loop(stmt, q)

    def loop(self, loop: For, q: Expr) -> Expr:
        _loop_counter(loop)
        if not loop.invariants:
            logger.warning(f"loop at line {loop.line} has no invariant; its VCs assume only true")
        invariant = conj([a.expr for a in loop.invariants])
        body = Block(loop.body.stmts + (loop.update,))
        guarded = conj([invariant, loop.cond])

        if self.focus is not None:
            if loop is self.focus:
                return self.stmt(loop.init, invariant)
            if any(inner is self.focus for inner in loops(loop.body)):
                self.focus_vc = implies(guarded, self.block(body, TRUE))
            return TRUE

        self.side.append(self.vc_for("loop-preserve", loop.line, implies(guarded, self.block(body, invariant))))
        self.side.append(self.vc_for("loop-exit", loop.line, implies(conj([invariant, negate(loop.cond)]), q)))
        return self.stmt(loop.init, invariant)


def method_vcs(contract: Contract, method: Method) -> list[VC]:
    constants = {name: Num(value) for name, value in contract.constants.items()}
    class_invariants = [a.expr for a in contract.invariants]
    pre = conj([a.expr for a in method.requires] + ([] if method.is_constructor else class_invariants))
    post = conj([lower_old(a.expr) for a in method.ensures] + class_invariants)

    def close(formula: Expr, at_entry: bool) -> Expr:
        mapping = dict(constants)
        if at_entry:
            mapping |= {name: Var(name[len(OLD_PREFIX):]) for name in free_names(formula) if name.startswith(OLD_PREFIX)}
        return subst(formula, mapping)

    def vc_for(kind: str, line: int, formula: Expr) -> VC:
        return VC(contract.name, method.name, kind, line, close(formula, at_entry=False))

    end = FALSE if method.returns_value else post
    main = _WeakestPrecondition(vc_for, post)
    entry = main.block(method.body, end)
    vcs = [VC(contract.name, method.name, "post", 0, close(implies(pre, entry), at_entry=True))]
    for loop in loops(method.body):
        if isinstance(loop, While):
            continue
        focused = _WeakestPrecondition(vc_for, TRUE, focus=loop)
        initial = focused.block(method.body, TRUE)
        formula = focused.focus_vc if focused.focus_vc is not None else implies(pre, initial)
        vcs.append(VC(contract.name, method.name, "loop-init", loop.line, close(formula, at_entry=focused.focus_vc is None)))
    return vcs + main.side


def gen_vcs(source: str | Contract) -> list[VC]:
    contract = parse_annotations(source)[0] if isinstance(source, str) else source
    vcs = [vc for method in contract.methods for vc in method_vcs(contract, method)]
    logger.debug(f"{contract.name}: generated {len(vcs)} verification conditions")
    return vcs


# ---- bounded discharge -----------------------------------------------------


def abstract_reads(expr: Expr) -> Expr:
    """Array reads become free variables named after the read; arrays are unconstrained, so this only widens the check."""
    if isinstance(expr, Index):
        return Var(show(Index(expr.array, abstract_reads(expr.index))))
    if isinstance(expr, Unary):
        return Unary(expr.op, abstract_reads(expr.operand))
    if isinstance(expr, Binary):
        return Binary(expr.op, abstract_reads(expr.left), abstract_reads(expr.right))
    return expr


def _truth(value) -> np.ndarray:
    return np.asarray(value) != 0


def evaluate_vector(expr: Expr, env: dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(expr, Num):
        return np.int64(expr.value)
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Unary):
        operand = evaluate_vector(expr.operand, env)
        return ~_truth(operand) if expr.op == "!" else -np.asarray(operand, dtype=np.int64)
    left, right = evaluate_vector(expr.left, env), evaluate_vector(expr.right, env)
    if expr.op == "&&":
        return _truth(left) & _truth(right)
    if expr.op == "||":
        return _truth(left) | _truth(right)
    if expr.op == IMPLIES:
        return ~_truth(left) | _truth(right)
    if expr.op in ("+", "-", "*"):
        left, right = np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64)
    return BINARY_OPS[expr.op](left, right)


@dataclass(frozen=True)
class Discharge:
    tag: str
    digest: str
    variables: tuple[str, ...]
    bound: int
    points: int
    holds: bool
    counterexample: dict[str, int] | None = None

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "digest": self.digest,
            "variables": list(self.variables),
            "bound": self.bound,
            "points": self.points,
            "holds": self.holds,
            "counterexample": self.counterexample,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Discharge":
        return cls(
            raw["tag"],
            raw["digest"],
            tuple(raw["variables"]),
            raw["bound"],
            raw["points"],
            raw["holds"],
            raw.get("counterexample"),
        )


def effective_bound(bound: int, variables: int, cap: int = DISCHARGE_POINT_CAP) -> int:
    if variables == 0 or (2 * bound + 1) ** variables <= cap:
        return bound
    shrunk = int((cap ** (1 / variables) - 1) // 2)
    while shrunk > 0 and (2 * shrunk + 1) ** variables > cap:
        shrunk -= 1
    return max(0, min(bound, shrunk))


def discharge_vc(vc: VC, bound: int = VERIFY_BOUND) -> Discharge:
    formula = abstract_reads(vc.formula)
    names = tuple(sorted(free_names(formula)))
    used = effective_bound(bound, len(names))
    if used < bound:
        logger.warning(f"{vc.tag}: {len(names)} variables, checking over [-{used}, {used}] instead of [-{bound}, {bound}]")

    if not names:
        holds = bool(_truth(evaluate_vector(formula, {})))
        return Discharge(vc.tag, vc.digest, names, used, 1, holds, None if holds else {})

    values = np.arange(-used, used + 1, dtype=np.int64)
    shape = (len(values),) * len(names)
    total = len(values) ** len(names)
    for start in range(0, total, DISCHARGE_CHUNK):
        flat = np.arange(start, min(total, start + DISCHARGE_CHUNK), dtype=np.int64)
        env = {name: values[axis] for name, axis in zip(names, np.unravel_index(flat, shape))}
        holds = np.broadcast_to(_truth(evaluate_vector(formula, env)), flat.shape)
        failing = np.flatnonzero(~holds)
        if failing.size:
            point = int(failing[0])
            counterexample = {name: int(env[name][point]) for name in names}
            logger.info(f"{vc.tag} fails at {counterexample}")
            return Discharge(vc.tag, vc.digest, names, used, total, False, counterexample)
    return Discharge(vc.tag, vc.digest, names, used, total, True)


def discharge_bounded(vcs: Sequence[VC], bound: int = VERIFY_BOUND) -> list[Discharge]:
    return [discharge_vc(vc, bound) for vc in vcs]
