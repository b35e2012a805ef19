import math

import pytest

from lib.circuit import eval_plaintext, eval_plaintext_batch, gate_counts
from lib.gadgets import INTEGER_GADGETS, ONE, ZERO, CircuitBuilder, build_gadget
from utils.exceptions import CircuitError, UnknownGadgetError, UnsupportedWidthError
from utils.fixed_point import decode_fixed, encode_fixed, fixed_div_ref, fixed_mul_ref, fixed_sqrt_ref
from utils.utils import bits_to_int, int_to_bits


def run(circuit, *values, width=32):
    return eval_plaintext(circuit, [int_to_bits(v, width) for v in values])


@pytest.mark.parametrize("width", [1, 8, 32])
def test_comparisons(width, py_rng):
    top = 1 << width
    gt, ge, eq = build_gadget("gt", width), build_gadget("ge", width), build_gadget("eq", width)
    for _ in range(30):
        a, b = py_rng.randrange(top), py_rng.randrange(top)
        assert run(gt, a, b, width=width) == [int(a > b)]
        assert run(ge, a, b, width=width) == [int(a >= b)]
        assert run(eq, a, a, width=width) == [1]
        assert run(eq, a, b, width=width) == [int(a == b)]


@pytest.mark.parametrize("kind, op", [("add", lambda a, b: a + b), ("sub", lambda a, b: a - b), ("mul", lambda a, b: a * b)])
def test_integer_arithmetic_wraps(kind, op, py_rng):
    circuit = build_gadget(kind, 16)
    samples = [(py_rng.randrange(1 << 16), py_rng.randrange(1 << 16)) for _ in range(10_000)]
    outputs = eval_plaintext_batch(circuit, [[int_to_bits(a, 16), int_to_bits(b, 16)] for a, b in samples])
    assert [bits_to_int(out) for out in outputs] == [op(a, b) % (1 << 16) for a, b in samples]


def test_mux_selects():
    circuit = build_gadget("mux", 8)
    assert bits_to_int(eval_plaintext(circuit, [[1], int_to_bits(11, 8), int_to_bits(22, 8)])) == 11
    assert bits_to_int(eval_plaintext(circuit, [[0], int_to_bits(11, 8), int_to_bits(22, 8)])) == 22


def test_mul_and_count_is_quadratic():
    assert gate_counts(build_gadget("mul", 8)).and_count < gate_counts(build_gadget("mul", 16)).and_count <= 4 * 16 * 16


def test_fixed_mul_and_div_are_bit_exact(py_rng):
    mul, div = build_gadget("fixed_mul", 32), build_gadget("fixed_div", 32)
    for _ in range(25):
        a, b = encode_fixed(py_rng.uniform(-100, 100)), encode_fixed(py_rng.uniform(-100, 100))
        assert bits_to_int(run(mul, a, b), signed=True) == fixed_mul_ref(a, b)
        assert bits_to_int(run(div, a, b), signed=True) == fixed_div_ref(a, b)


def test_fixed_div_by_zero_saturates():
    div = build_gadget("fixed_div", 32)
    assert bits_to_int(run(div, encode_fixed(3.0), 0), signed=True) == fixed_div_ref(encode_fixed(3.0), 0)


def test_fixed_sqrt_is_bit_exact(py_rng):
    sqrt = build_gadget("fixed_sqrt", 32)
    for value in [0.0, 1.0, 2.0, 0.25, 1000.5, *(py_rng.uniform(0, 30000) for _ in range(10))]:
        x = encode_fixed(value)
        assert bits_to_int(run(sqrt, x), signed=True) == fixed_sqrt_ref(x)


def test_fixed_sqrt_of_negative_is_zero():
    assert bits_to_int(run(build_gadget("fixed_sqrt", 32), encode_fixed(-4.0))) == 0


@pytest.mark.slow
@pytest.mark.parametrize(
    "kind, reference, points, tolerance",
    [
        ("fixed_exp", math.exp, [-3.0, -0.5, 0.0, 0.7, 2.0, 5.0], 1e-2),
        ("fixed_ln", math.log, [0.05, 0.5, 1.0, 2.0, 10.0, 1000.0], 1e-2),
        ("fixed_phi", lambda x: 0.5 * math.erfc(-x / math.sqrt(2)), [-5.0, -1.5, -0.2, 0.0, 0.9, 2.5, 4.5], 1e-2),
    ],
)
def test_transcendental_gadgets(kind, reference, points, tolerance):
    circuit = build_gadget(kind, 32)
    for x in points:
        got = decode_fixed(bits_to_int(run(circuit, encode_fixed(x)), signed=True))
        expected = reference(x)
        assert abs(got - expected) <= tolerance * max(1.0, abs(expected)), (kind, x, got, expected)


@pytest.mark.slow
@pytest.mark.parametrize(
    "kind, reference, low, high",
    [
        ("fixed_exp", math.exp, -3.0, 5.0),
        ("fixed_ln", math.log, 0.05, 1000.0),
        ("fixed_phi", lambda x: 0.5 * math.erfc(-x / math.sqrt(2)), -5.0, 5.0),
    ],
)
def test_transcendental_gadgets_on_random_points(kind, reference, low, high, py_rng):
    circuit = build_gadget(kind, 32)
    raws = [encode_fixed(py_rng.uniform(low, high)) for _ in range(1000)]
    outputs = eval_plaintext_batch(circuit, [[int_to_bits(raw, 32)] for raw in raws])
    for raw, out in zip(raws, outputs):
        expected = reference(decode_fixed(raw))
        got = decode_fixed(bits_to_int(out, signed=True))
        assert abs(got - expected) <= 1e-2 * max(1.0, abs(expected)), (kind, decode_fixed(raw), got, expected)


def test_constants_fold_away():
    cb = CircuitBuilder("folded")
    (a,) = cb.input(1)
    assert cb.and_(a, ZERO) == ZERO
    assert cb.and_(a, ONE) == a
    assert cb.xor(a, ZERO) == a
    circuit = cb.build([[cb.xor(a, ONE), ONE, ZERO]])
    assert gate_counts(circuit).and_count == 0
    assert eval_plaintext(circuit, [[0]]) == [1, 1, 0]
    assert eval_plaintext(circuit, [[1]]) == [0, 1, 0]


def test_inputs_after_gates_rejected():
    cb = CircuitBuilder()
    a, b = cb.input(1), cb.input(1)
    cb.and_(a[0], b[0])
    with pytest.raises(CircuitError):
        cb.input(1)


def test_unknown_gadget():
    with pytest.raises(UnknownGadgetError):
        build_gadget("divmod", 8)


@pytest.mark.parametrize("kind, width", [("fixed_mul", 16), ("add", 0), ("gt", 65)])
def test_unsupported_widths(kind, width):
    with pytest.raises(UnsupportedWidthError):
        build_gadget(kind, width)


def test_one_bit_gt_is_a_and_not_b():
    gt = build_gadget("gt", 1)
    assert [run(gt, a, b, width=1)[0] for a in (0, 1) for b in (0, 1)] == [0, 0, 1, 0]


INTEGER_REFERENCES = {
    "gt": lambda a, b: int(a > b),
    "ge": lambda a, b: int(a >= b),
    "eq": lambda a, b: int(a == b),
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
}


@pytest.mark.parametrize("width", range(1, 9))
@pytest.mark.parametrize("kind", sorted(INTEGER_REFERENCES))
def test_binary_integer_gadgets_exhaustive(kind, width):
    top = 1 << width
    pairs = [(a, b) for a in range(top) for b in range(top)]
    outputs = eval_plaintext_batch(build_gadget(kind, width), [[int_to_bits(a, width), int_to_bits(b, width)] for a, b in pairs])
    assert [bits_to_int(out) for out in outputs] == [INTEGER_REFERENCES[kind](a, b) % top for a, b in pairs]


@pytest.mark.parametrize("width", range(1, 9))
def test_mux_exhaustive(width):
    top = 1 << width
    cases = [(s, a, b) for s in (0, 1) for a in range(top) for b in range(top)]
    outputs = eval_plaintext_batch(build_gadget("mux", width), [[[s], int_to_bits(a, width), int_to_bits(b, width)] for s, a, b in cases])
    assert [bits_to_int(out) for out in outputs] == [a if s else b for s, a, b in cases]


def test_every_integer_gadget_is_checked_exhaustively():
    assert set(INTEGER_GADGETS) == {*INTEGER_REFERENCES, "mux"}
