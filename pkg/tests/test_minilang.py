import pytest

from lib.contracts import ACCOUNT_SOURCE, CROWDFUND_SOURCE
from lib.minilang import Interpreter, parse_annotations
from lib.vcgen import discharge_bounded, discharge_vc, effective_bound, gen_vcs
from utils.exceptions import (
    AnnotationSemanticError,
    MiniLangSyntaxError,
    UnboundedLoopError,
    UnknownVariableError,
)

IDENTITY = """\
contract Echo {{
  // ensures {post}
  int id(int x) {{
    return x;
  }}
}}
"""


def test_account_parses():
    contract, annotations = parse_annotations(ACCOUNT_SOURCE)
    assert contract.name == "Account"
    assert [m.name for m in contract.methods] == ["init", "deposit", "withdraw", "current"]
    assert len(annotations) == 7
    assert contract.method("init").is_constructor


def test_interpreter_runs_a_method():
    contract, _ = parse_annotations(ACCOUNT_SOURCE)
    run = Interpreter(contract).run("deposit", {"amount": 5}, {"balance": 10})
    assert run.state["balance"] == 15
    assert run.old["balance"] == 10
    assert Interpreter(contract).run("current", {}, {"balance": 3}).result == 3


def test_runaway_loop_is_stopped():
    source = "contract Spin {\n  int spin(int x) {\n    while (x == x) {\n      x += 1;\n    }\n    return x;\n  }\n}\n"
    contract, _ = parse_annotations(source)
    with pytest.raises(UnboundedLoopError):
        Interpreter(contract, max_steps=100).run("spin", {"x": 0})


@pytest.mark.parametrize(
    "source, line, column",
    [
        ("contract A {\n  int f( {\n  }\n}\n", 2, 10),
        ("contract A { # }", 1, 14),
    ],
)
def test_syntax_errors_carry_positions(source, line, column):
    with pytest.raises(MiniLangSyntaxError) as info:
        parse_annotations(source)
    assert (info.value.line, info.value.column) == (line, column)


def test_unknown_variable_in_annotation():
    with pytest.raises(UnknownVariableError):
        parse_annotations(IDENTITY.format(post="z == 1"))


def test_result_in_a_precondition():
    source = "contract A {\n  // requires \\result > 0\n  int f(int x) {\n    return x;\n  }\n}\n"
    with pytest.raises(AnnotationSemanticError):
        parse_annotations(source)


def test_true_postcondition_discharges():
    (vc,) = gen_vcs(IDENTITY.format(post="\\result >= x"))
    proof = discharge_vc(vc, bound=10)
    assert proof.holds
    assert proof.points == 21
    assert proof.variables == ("x",)


def test_false_postcondition_has_a_counterexample():
    (vc,) = gen_vcs(IDENTITY.format(post="\\result > x"))
    proof = discharge_vc(vc, bound=10)
    assert not proof.holds
    assert set(proof.counterexample) == {"x"}


@pytest.mark.parametrize("source", [ACCOUNT_SOURCE, CROWDFUND_SOURCE])
def test_shipped_sources_discharge(source):
    proofs = discharge_bounded(gen_vcs(source), bound=16)
    assert proofs and all(p.holds for p in proofs)


def test_vc_digests_are_stable():
    assert [vc.digest for vc in gen_vcs(ACCOUNT_SOURCE)] == [vc.digest for vc in gen_vcs(ACCOUNT_SOURCE)]


def test_bound_shrinks_with_many_variables():
    assert effective_bound(64, 2) == 64
    assert (2 * effective_bound(64, 6) + 1) ** 6 <= 129**3
