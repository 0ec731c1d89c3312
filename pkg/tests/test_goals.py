
import pytest

from skeletal.goals import (
    Col, Eq, GoalError, KeyApp, Non, Preceq, RolePred, Unq, Var, check_claim, evaluate,
    find_witness, parse_goal, satisfies_atomic, satisfies_claim, satisfies_conclusion,
)
from skeletal.protocol import Direction, Role, RoleEvent, instantiate
from skeletal.skeleton import Node, Preskeleton
from skeletal.terms import Base, Enc, Indet, InvKey, PubKey, SigKey, Sort

from oracles import preservation_violations
from conftest import INIT, A, A0, A1, A3, A4, B, BLANCHET, C, REFERENCE, K, S, goal

HEADER = '(defgoal blanchet (forall ((n m node) (a b name) (k skey) (s text)) (implies '


def sigma_a(node=Node(0, 2)):
    return {"n2": node, "a": A, "b": B, "k": K, "s": S}


def with_sk_a(sk):
    return sk.with_sets(non=sk.non | {SigKey(A)})


def test_parse_initiator_goal():
    g = goal("goal-a-auth")
    kinds = [type(c).__name__ for c in g.hypothesis.conjuncts]
    assert kinds == ["RolePred", "Unq", "Non", "Non"]
    init2 = g.hypothesis.conjuncts[0]
    assert (init2.role.name, init2.index, init2.node) == ("init", 2, "n2")
    assert g.hypothesis.conjuncts[2].term == KeyApp("sk", Var("a"))
    assert g.hypothesis.conjuncts[3].term == KeyApp("inv", KeyApp("pk", Var("b")))
    assert len(g.conclusion) == 1
    (resp2,) = g.conclusion[0].conjuncts
    assert (resp2.role.name, resp2.index) == ("resp", 2)
    assert [v for v, _ in g.existential_vars] == ["m"]


def test_parse_secrecy_goal_has_empty_conclusion():
    assert goal("goal-a-secrecy").conclusion == ()


def test_clause_a_rejected():
    src = HEADER + '(and (p "init" 1 n (a a) (b b) (k k)) (p "resp" 1 n (a a) (b b) (k k))) (false))))'
    with pytest.raises(GoalError, match=r"clause \(a\)"):
        parse_goal(src, BLANCHET)


def test_clause_b_rejected():
    src = ('(defgoal blanchet (forall ((n node) (a b name) (k skey)) (implies '
           '(and (p "init" 1 n (a a) (b a) (k a2)) (non (sk b))) (false))))')
    with pytest.raises(GoalError):
        parse_goal(src, BLANCHET)
    src = ('(defgoal blanchet (forall ((n node) (a b name) (k skey)) (implies '
           '(and (p "init" 1 n (a a) (b a) (k k)) (non (sk b))) (false))))')
    with pytest.raises(GoalError, match=r"clause \(b\)"):
        parse_goal(src, BLANCHET)


@pytest.mark.parametrize("body, message", [
    ('(and (p "nobody" 1 n)) (false)', "unknown role"),
    ('(and (p "init" 3 n (a a))) (false)', "out of range"),
    ('(and (p "init" 1 n (a a) (b b))) (false)', "lacks"),
    ('(and (p "init" 1 n (a a) (b b) (k k) (s s))) (false)', "does not occur"),
    ('(and (p "init" 1 n (a k) (b b) (k k))) (false)', "sort"),
    ('(and (p "init" 1 n (a a) (b b) (k k)) (frob k)) (false)', "unknown predicate"),
])
def test_parse_errors(body, message):
    with pytest.raises(GoalError, match=message):
        parse_goal(HEADER + body + ")))", BLANCHET)


def test_parse_error_has_position():
    with pytest.raises(GoalError) as err:
        parse_goal('(defgoal blanchet\n (forall ((n node)) (implies (and (p "x" 1 n)) (false))))', BLANCHET)
    assert err.value.line == 2


def test_equations_are_eliminated():
    src = ('(defgoal blanchet (forall ((n node) (a b name) (k skey)) (implies '
           '(and (p "init" 1 n (a a) (b b) (k k)) (= a b)) (false))))')
    g = parse_goal(src, BLANCHET)
    assert not any(isinstance(c, Eq) for c in g.hypothesis.conjuncts)
    assert g.equations == (("a", Var("b")),)
    assert dict(g.hypothesis.conjuncts[0].args)[INIT.param("a")] == Var("b")


def test_existential_must_be_anchored():
    src = ('(defgoal blanchet (forall ((n node) (a b name) (k skey)) (implies '
           '(and (p "init" 1 n (a a) (b b) (k k))) '
           '(exists ((c name)) (and (non (sk c)))))))')
    with pytest.raises(GoalError, match="not an argument"):
        parse_goal(src, BLANCHET)


def test_satisfies_atomic_examples():
    resp2 = goal("goal-a-auth").conclusion[0].conjuncts[0]
    sig = {"m": Node(1, 2), "a": A, "b": B, "k": K, "s": S}
    assert satisfies_atomic(A1, sig, resp2)
    assert satisfies_atomic(A1, sig, Preceq("m", "m"))
    assert satisfies_atomic(A0, {"v": K}, Unq(Var("v")))
    assert satisfies_atomic(A0, {"b": B}, Non(KeyApp("inv", KeyApp("pk", Var("b")))))
    assert not satisfies_atomic(A0, {"a": A}, Non(KeyApp("sk", Var("a"))))
    assert satisfies_atomic(A1, {"m": Node(1, 1), "n": Node(1, 2)}, Col("m", "n"))
    assert not satisfies_atomic(A1, {"m": Node(0, 1), "n": Node(1, 2)}, Col("m", "n"))
    assert satisfies_atomic(A1, {"m": Node(0, 1), "n": Node(1, 2)}, Preceq("m", "n"))
    assert not satisfies_atomic(A1, {"m": Node(1, 2), "n": Node(0, 1)}, Preceq("m", "n"))
    assert satisfies_atomic(A1, {"a": A, "c": A}, Eq(Var("a"), Var("c")))


def test_undefined_variable_is_false():
    assert not satisfies_atomic(A0, {}, Unq(Var("v")))


def test_satisfies_claim_examples():
    hyp = goal("goal-a-auth").hypothesis
    reference_hyp = [c for c in hyp.conjuncts if c != Non(KeyApp("sk", Var("a")))]
    assert satisfies_claim(A0, sigma_a(), reference_hyp)
    assert satisfies_claim(with_sk_a(A0), sigma_a(), hyp)
    missing = sigma_a()
    del missing["s"]
    assert not satisfies_claim(A0, missing, reference_hyp)
    assert satisfies_claim(with_sk_a(A1), sigma_a(), hyp)


def test_satisfies_conclusion_examples():
    g = goal("goal-a-auth")
    assert satisfies_conclusion(A1, sigma_a(), g)
    assert find_witness(A1, sigma_a(), g)["m"] == Node(1, 2)
    assert not satisfies_conclusion(A0, sigma_a(), g)
    assert not satisfies_conclusion(A1, sigma_a(), goal("goal-a-secrecy"))
    sig_b = {"m": Node(0, 2), "a": A, "b": B, "k": K, "s": S}
    assert not satisfies_conclusion(A4, sig_b, goal("goal-b-auth"))
    assert satisfies_conclusion(A4, sig_b, goal("goal-b-weak"))
    assert find_witness(A4, sig_b, goal("goal-b-weak"))["c"] == C


def test_conclusion_monotone_under_disjuncts():
    g = goal("goal-b-auth")
    weak = goal("goal-b-weak")
    sig_b = {"m": Node(0, 2), "a": A, "b": B, "k": K, "s": S}
    both = g.__class__(g.protocol, g.universal_vars, g.hypothesis,
                       g.conclusion + weak.conclusion, g.equations)
    assert satisfies_conclusion(A4, sig_b, both)


def test_claim_antitone_under_conjuncts():
    hyp = list(goal("goal-b-auth").hypothesis.conjuncts)
    sig_b = {"m": Node(0, 2), "a": A, "b": B, "k": K, "s": S}
    assert satisfies_claim(A3, sig_b, hyp)
    assert not satisfies_claim(A3, sig_b, hyp + [Unq(Var("s"))])


def test_evaluate_key_terms():
    sig = {"a": A, "q": InvKey(PubKey(B))}
    assert evaluate(KeyApp("inv", KeyApp("pk", Var("a"))), sig) == InvKey(PubKey(A))
    assert evaluate(KeyApp("inv", Var("q")), sig) == PubKey(B)
    assert evaluate(KeyApp("sk", Var("q")), sig) is None
    assert evaluate(Var("n"), {"n": Node(0, 1)}) is None


def test_check_claim_direct():
    init1 = goal("goal-b-auth").conclusion[0].conjuncts[0]
    with pytest.raises(GoalError):
        check_claim([init1, RolePred(init1.role, 1, init1.node, init1.args)])


def test_branching_roles_equivalent():
    x, n = Indet("x"), Base("n", Sort.NONCE)
    r1 = Role("r1", (x, n), (RoleEvent(Direction.SEND, x), RoleEvent(Direction.RECV, n)))
    r2 = Role("r2", (x, n), (RoleEvent(Direction.SEND, x), RoleEvent(Direction.SEND, n)))
    value = Enc(S, K)
    sk = Preskeleton((instantiate(r1, {x: value}, 1), instantiate(r2, {x: value, n: Base("N", Sort.NONCE)}, 2)))
    for node in sk.nodes:
        for v in (value, S):
            sig = {"m": node, "x": v}
            p1 = RolePred(r1, 1, "m", ((x, Var("x")),))
            p2 = RolePred(r2, 1, "m", ((x, Var("x")),))
            assert satisfies_atomic(sk, sig, p1) == satisfies_atomic(sk, sig, p2)


def test_preservation_on_reference_skeletons():
    bad, checked = preservation_violations(list(REFERENCE.values()), BLANCHET)
    assert checked > 0 and bad == []
