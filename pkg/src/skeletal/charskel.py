"""Characteristic skeletons of security claims."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .goals import (
    Col, Eq, Non, Preceq, RolePred, SecurityClaim, SecurityGoal, Unq, Var, evaluate,
)
from .protocol import Protocol, instantiate
from .skeleton import (
    EMPTY_SKELETON, Homomorphism, Node, Preskeleton, hull, merge_strands,
)
from .terms import FreshSupply, Sort, is_atom


class Failure(str, enum.Enum):
    NON_ORIGINATES = "non-origination violated"
    HULL_UNDEFINED = "hull undefined"
    ORDER_CYCLE = "order cycle"
    DIRECTION_CONFLICT = "direction conflict"
    UNIFICATION = "unification failure"
    SORT_CLASH = "sort clash"
    NON_ATOMIC = "non-atomic value"

    @property
    def is_input_error(self) -> bool:
        # The remaining causes mean the claim itself is unsatisfiable.
        return self in (Failure.SORT_CLASH, Failure.NON_ATOMIC)


class CsFailed(Exception):
    def __init__(self, reason: Failure, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


@dataclass
class CsState:
    skeleton: Preskeleton
    sigma: dict
    fresh: FreshSupply = field(default_factory=FreshSupply)


@dataclass(frozen=True)
class CharacteristicResult:
    skeleton: Optional[Preskeleton] = None
    sigma: Optional[dict] = None
    reason: Optional[Failure] = None
    index: Optional[int] = None  # conjunct at which the fold failed
    conjunct: object = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.reason is None

    def __bool__(self) -> bool:
        return self.ok


def order_conjuncts(conjuncts) -> list:
    """Role predicates (listener included) first, otherwise textual order."""
    return ([c for c in conjuncts if isinstance(c, RolePred)]
            + [c for c in conjuncts if not isinstance(c, RolePred)])


def characteristic_skeleton(claim, protocol: Protocol = None, sorts=None,
                            equations=()) -> CharacteristicResult:
    """Fold the case handlers over ``claim``.

    ``sorts`` maps goal variables to their declared sorts and only matters
    for listener arguments, whose parameter is untyped.  ``equations``
    are the ``(x, t)`` pairs eliminated at parse time; ``x`` is assigned
    the value of ``t`` at the end.
    """
    if isinstance(claim, SecurityGoal):
        sorts = dict(claim.universal_vars)
        equations = claim.equations
        claim = claim.hypothesis
    conjuncts = claim.conjuncts if isinstance(claim, SecurityClaim) else tuple(claim)
    state = CsState(EMPTY_SKELETON, {}, FreshSupply())
    sorts = sorts or {}
    for i, c in enumerate(order_conjuncts(conjuncts)):
        try:
            if isinstance(c, RolePred):
                state = handle_role_predicate(state, c, sorts)
            elif isinstance(c, Non):
                state = handle_non(state, c)
            elif isinstance(c, Unq):
                state = handle_unq(state, c)
            elif isinstance(c, Preceq):
                state = handle_preceq(state, c)
            elif isinstance(c, Col):
                state = handle_col(state, c)
            elif isinstance(c, Eq):
                a, b = evaluate(c.left, state.sigma), evaluate(c.right, state.sigma)
                if a is None or a != b:
                    raise CsFailed(Failure.UNIFICATION, f"{c} does not hold")
            else:
                raise TypeError(f"unexpected conjunct {c!r}")
        except CsFailed as exc:
            return CharacteristicResult(reason=exc.reason, index=i, conjunct=c, detail=exc.detail)
    sigma = dict(state.sigma)
    for x, t in equations:
        v = evaluate(t, sigma)
        if v is not None:
            sigma[x] = v
    return CharacteristicResult(state.skeleton, sigma)


def _want_sort(t, param_sort: str, declared: dict) -> dict:
    """Sorts for the variables of goal term ``t`` filling a parameter."""
    if isinstance(t, Var):
        if param_sort == "mesg":
            return {t.name: declared.get(t.name, "mesg")}
        return {t.name: param_sort}
    if t.fn in ("sk", "pk"):
        return _want_sort(t.arg, Sort.NAME.value, declared)
    return _want_sort(t.arg, param_sort, declared)


def handle_role_predicate(state: CsState, f: RolePred, declared=None) -> CsState:
    declared = declared or {}
    sk, sigma = state.skeleton, dict(state.sigma)
    state.fresh.reserve(m for s in sk.strands for _, m in s.events)
    state.fresh.reserve(sk.non | sk.unique)
    binding = {}
    for p, t in f.args:
        for name, sort in _want_sort(t, f.role.param_sort(p), declared).items():
            if name in sigma:
                continue
            if sort == "mesg":
                sigma[name] = state.fresh.indet(name)
            else:
                sigma[name] = state.fresh.atom(name, Sort(sort))
        v = evaluate(t, sigma)
        if v is None:
            raise CsFailed(Failure.SORT_CLASH, f"{t} has no message value")
        binding[p] = v
    try:
        strand = instantiate(f.role, binding, f.index)
    except ValueError as exc:
        raise CsFailed(Failure.SORT_CLASH, str(exc)) from None
    pre = sk.add_strand(strand)
    idx = len(pre.strands) - 1
    for a in pre.non:
        for pos in range(1, f.index + 1):
            if pre.originates_at(a, Node(idx, pos)):
                raise CsFailed(Failure.NON_ORIGINATES, f"{a} originates at new node {pos}")
    h = hull(pre)
    if h is None:
        raise CsFailed(Failure.HULL_UNDEFINED)
    new_sk, hom = h
    sigma = hom.assignment(sigma)
    sigma[f.node] = hom.node(Node(idx, f.index))
    return CsState(new_sk, sigma, state.fresh)


def _atomic_value(state: CsState, t):
    v = evaluate(t, state.sigma)
    if v is None:
        raise CsFailed(Failure.SORT_CLASH, f"{t} is unbound")
    if not is_atom(v):
        raise CsFailed(Failure.NON_ATOMIC, f"{t} denotes the non-atom {v}")
    return v


def handle_non(state: CsState, f: Non) -> CsState:
    v = _atomic_value(state, f.term)
    sk = state.skeleton.with_sets(non=state.skeleton.non | {v})
    if sk.originates(v):
        raise CsFailed(Failure.NON_ORIGINATES, f"{v} originates")
    return CsState(sk, state.sigma, state.fresh)


def handle_unq(state: CsState, f: Unq) -> CsState:
    v = _atomic_value(state, f.term)
    pre = state.skeleton.with_sets(unique=state.skeleton.unique | {v})
    h = hull(pre)
    if h is None:
        raise CsFailed(Failure.HULL_UNDEFINED, f"no hull after adding {v} to unique")
    sk, hom = h
    return CsState(sk, hom.assignment(state.sigma), state.fresh)


def _node(state: CsState, name: str) -> Node:
    n = state.sigma.get(name)
    if not isinstance(n, Node):
        raise CsFailed(Failure.SORT_CLASH, f"{name} is not bound to a node")
    return n


def handle_preceq(state: CsState, f: Preceq) -> CsState:
    m, n = _node(state, f.left), _node(state, f.right)
    sk = state.skeleton
    if sk.preceq(m, n):
        return state
    if sk.precedes(n, m):
        raise CsFailed(Failure.ORDER_CYCLE, f"{n} already precedes {m}")
    return CsState(sk.add_edge(m, n), state.sigma, state.fresh)


def handle_col(state: CsState, f: Col) -> CsState:
    m, n = _node(state, f.left), _node(state, f.right)
    sk = state.skeleton
    if m.strand == n.strand:
        return state
    s, t = sk.strands[m.strand], sk.strands[n.strand]
    for p in range(1, min(s.length, t.length) + 1):
        if s.direction(p) != t.direction(p):
            raise CsFailed(Failure.DIRECTION_CONFLICT, f"position {p}")
    merged = merge_strands(sk, m.strand, n.strand)
    if merged is None:
        raise CsFailed(Failure.UNIFICATION, f"strands of {f.left} and {f.right} do not merge")
    pre, smap, beta = merged
    step = Homomorphism(sk, pre, smap, beta)
    h = hull(pre)
    if h is None:
        raise CsFailed(Failure.HULL_UNDEFINED)
    new_sk, hom = h
    sigma = hom.assignment(step.assignment(state.sigma))
    return CsState(new_sk, sigma, state.fresh)
