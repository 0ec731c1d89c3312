import pathlib

import pytest

from skeletal.goals import load_goal
from skeletal.protocol import LISTENER, instantiate, load_protocol
from skeletal.skeleton import Node, Preskeleton
from skeletal.terms import Base, InvKey, PubKey, SigKey, Sort

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

A = Base("A", Sort.NAME)
B = Base("B", Sort.NAME)
C = Base("C", Sort.NAME)
K = Base("K", Sort.SKEY)
S = Base("S", Sort.TEXT)

GOALS = ["goal-a-auth", "goal-a-secrecy", "goal-b-auth", "goal-b-weak", "goal-b-secrecy"]

# Acceptance outcomes, printed by the terminal summary hook below.
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}")


def params(role, **values):
    return {role.param(k): v for k, v in values.items()}


def load(name):
    return load_protocol(FIXTURES / f"{name}.prot")


BLANCHET = load("blanchet")
FIXED = load("blanchet-fix")
INIT = BLANCHET.role("init")
RESP = BLANCHET.role("resp")


def goal(name, protocol=BLANCHET):
    return load_goal(FIXTURES / f"{name}.goal", protocol)


def init_strand(b=B, length=2, protocol=BLANCHET):
    role = protocol.role("init")
    vals = dict(a=A, b=b, k=K, s=S) if length == 2 else dict(a=A, b=b, k=K)
    return instantiate(role, params(role, **vals), length)


def resp_strand(length=2, protocol=BLANCHET):
    role = protocol.role("resp")
    vals = dict(a=A, b=B, k=K, s=S) if length == 2 else dict(a=A, b=B, k=K)
    return instantiate(role, params(role, **vals), length)


def listener(value):
    return instantiate(LISTENER, {LISTENER.params[0]: value}, 1)


NON_A = frozenset({InvKey(PubKey(B))})
NON_B = frozenset({SigKey(A), InvKey(PubKey(B))})

A0 = Preskeleton((init_strand(),), frozenset(), NON_A, frozenset({K}))
A1 = Preskeleton((init_strand(), resp_strand()),
                 frozenset({(Node(0, 1), Node(1, 1)), (Node(1, 2), Node(0, 2))}),
                 NON_A, frozenset({K}))
A2 = Preskeleton((init_strand(), listener(S)), frozenset(), NON_A, frozenset({K, S}))
A3 = Preskeleton((resp_strand(),), frozenset(), NON_B, frozenset({K}))
A4 = Preskeleton((resp_strand(), init_strand(b=C, length=1)),
                 frozenset({(Node(1, 1), Node(0, 1))}), NON_B, frozenset({K}))

REFERENCE = {"A0": A0, "A1": A1, "A2": A2, "A3": A3, "A4": A4}


@pytest.fixture
def blanchet():
    return BLANCHET


@pytest.fixture
def fixed():
    return FIXED
