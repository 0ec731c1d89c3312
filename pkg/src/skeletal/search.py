"""Bounded breadth-first search for shapes, and goal checking."""
from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .adversary import AdversaryContext, _synth, analyze, unique_originated, unrealized_nodes
from .charskel import CharacteristicResult, characteristic_skeleton
from .goals import SecurityGoal, satisfies_conclusion
from .sexpr import SkeletalError
from .protocol import Direction, Protocol, instantiate
from .skeleton import (
    Homomorphism, Node, Preskeleton, compose, find_homomorphisms, hull, identity,
)
from .terms import (
    Base, Enc, FreshSupply, Indet, InvKey, Pair, PubKey, SigKey, Substitution,
    ingredients, inverse, is_atom, subterms, unify, var_set, variables,
)


@dataclass(frozen=True)
class SearchBounds:
    max_added_strands: int = 3
    max_fresh_atoms: int = 4
    max_states: int = 20000

    def __post_init__(self):
        for name in ("max_added_strands", "max_fresh_atoms", "max_states"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


DEFAULT_BOUNDS = SearchBounds()


@dataclass(frozen=True)
class ShapeResult:
    shapes: tuple  # of (Homomorphism, Preskeleton)
    exhausted: bool
    states: int = 0


class VerdictKind(str, enum.Enum):
    ACHIEVED = "achieved"
    COUNTEREXAMPLE = "counterexample"
    BOUND_EXCEEDED = "bound_exceeded"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    cs: CharacteristicResult
    result: Optional[ShapeResult] = None
    counterexample: Optional[tuple] = None  # (Homomorphism, Preskeleton)
    bounds: SearchBounds = DEFAULT_BOUNDS

    @property
    def vacuous(self) -> bool:
        return not self.cs.ok

    @property
    def shapes(self) -> tuple:
        return self.result.shapes if self.result is not None else ()

    @property
    def exhausted(self) -> bool:
        return self.result.exhausted if self.result is not None else True


# -------------------------------------------------------------- canonical

def _canon_term(t, names: dict, counters: dict) -> str:
    if isinstance(t, (Base, Indet)):
        if t not in names:
            sort = t.sort.value if isinstance(t, Base) else "mesg"
            counters[sort] = counters.get(sort, 0) + 1
            names[t] = f"{sort}{counters[sort]}"
        return names[t]
    if isinstance(t, SigKey):
        return f"(sk {_canon_term(t.owner, names, counters)})"
    if isinstance(t, PubKey):
        return f"(pk {_canon_term(t.owner, names, counters)})"
    if isinstance(t, InvKey):
        return f"(invk {_canon_term(t.key, names, counters)})"
    if isinstance(t, Enc):
        return f"(enc {_canon_term(t.plain, names, counters)} {_canon_term(t.key, names, counters)})"
    if isinstance(t, Pair):
        return (f"(tag {t.tag} {_canon_term(t.left, names, counters)} "
                f"{_canon_term(t.right, names, counters)})")
    raise TypeError(t)


def _serialize(sk: Preskeleton, perm: tuple, head: tuple) -> str:
    """Serialization of ``sk`` with strands listed in ``perm`` order.

    ``head`` lists terms renamed before anything else, so that the images
    of a search's start variables keep their place.
    """
    names: dict = {}
    counters: dict = {}
    parts = [" ".join(_canon_term(t, names, counters) for t in head)]
    pos = {old: new for new, old in enumerate(perm)}
    for i in perm:
        s = sk.strands[i]
        msgs = " ".join(d.sign + _canon_term(m, names, counters) for d, m in s.events)
        parts.append(f"{s.role.name}[{msgs}]")
    edges = sorted((pos[a.strand], a.pos, pos[b.strand], b.pos) for a, b in sk.order)
    parts.append(repr(edges))
    # atoms of non/unique that appear nowhere else get names last
    parts.append(" ".join(sorted(_canon_term(a, names, counters) for a in sk.non)))
    parts.append(" ".join(sorted(_canon_term(a, names, counters) for a in sk.unique)))
    return "|".join(parts)


def canonical_key(sk: Preskeleton, h: Optional[Homomorphism] = None) -> str:
    """Key equal for isomorphic skeletons (with isomorphic start maps).

    Strands in the image of ``h`` come first in start order; the rest are
    tried in every order and the least serialization wins.
    """
    if h is None:
        fixed: list = []
        head: tuple = ()
        smap: tuple = ()
    else:
        fixed = []
        for j in h.strand_map:
            if j not in fixed:
                fixed.append(j)
        head = tuple(h.term(v) for v in _ordered_vars(h.src))
        smap = h.strand_map
    rest = [i for i in range(len(sk.strands)) if i not in fixed]
    # Sorting the free strands by a rename-free signature first keeps the
    # permutation count small in the common case.
    groups: dict = {}
    for i in rest:
        s = sk.strands[i]
        groups.setdefault((s.role.name, s.length), []).append(i)
    ordered_groups = [groups[k] for k in sorted(groups)]
    best = None
    for choice in itertools.product(*(itertools.permutations(g) for g in ordered_groups)):
        perm = tuple(fixed) + tuple(i for g in choice for i in g)
        ser = _serialize(sk, perm, head)
        if best is None or ser < best:
            best = ser
    pos = {old: new for new, old in enumerate(tuple(fixed) + tuple(rest))}
    return f"{best}|{[pos[j] for j in smap]}"


def _ordered_vars(sk: Preskeleton) -> list:
    seen: list = []
    for s in sk.strands:
        for _, m in s.events:
            for v in variables(m):
                if v not in seen:
                    seen.append(v)
    for a in sorted(sk.non | sk.unique, key=str):
        for v in variables(a):
            if v not in seen:
                seen.append(v)
    return seen


# ---------------------------------------------------------------- search

def _candidates(sk: Preskeleton, n: Node) -> list:
    """Values the adversary would need but cannot produce at ``n``."""
    uo = unique_originated(sk)
    avail = frozenset(sk.msg(m) for m in sk.predecessors(n) if sk.is_transmission(m))
    ctx = AdversaryContext(avail, sk.non, uo)
    known = analyze(ctx)
    out: list = []

    def want(t):
        if t not in out and (isinstance(t, Enc) or is_atom(t)) and not _synth(t, known, ctx):
            out.append(t)

    for t in subterms(sk.msg(n)):
        want(t)
    for t in sorted(known, key=str):
        if isinstance(t, Enc):
            want(inverse(t.key))
    return out


def _extend(h: Homomorphism, pre: Preskeleton, beta: Substitution, keep) -> Optional[tuple]:
    """Hull of ``pre`` (already ``beta``-substituted) and the updated start map."""
    step = Homomorphism(h.src, pre, h.strand_map, beta.compose(h.subst))
    out = hull(pre, keep)
    if out is None:
        return None
    sk, hom = out
    return compose(hom, step), sk


def successors(h: Homomorphism, sk: Preskeleton, n: Node, protocol: Protocol, keep=()):
    """Successor states that try to explain reception ``n``."""
    keep = frozenset(keep)
    cands = _candidates(sk, n)
    out = []
    # contraction: unify a needed value with something already sent
    for m in sk.nodes:
        if not sk.is_transmission(m) or sk.preceq(n, m):
            continue
        for v in ingredients(sk.msg(m)):
            if isinstance(v, Indet) or not (isinstance(v, Enc) or is_atom(v)):
                continue
            for c in cands:
                beta = unify(c, v, keep=keep)
                if beta is None:
                    continue
                pre = sk.substitute(beta)
                if not pre.preceq(m, n):
                    pre = pre.add_edge(m, n)
                nxt = _extend(h, pre, beta, keep)
                if nxt is not None:
                    out.append(nxt)
    # a new regular strand transmitting a needed value
    fresh = FreshSupply()
    fresh.reserve(sk.variables)
    fresh.reserve(keep)
    for role in protocol.roles:
        binding = {p: (fresh.indet(p.ident) if isinstance(p, Indet) else fresh.atom(p.ident, p.sort))
                   for p in role.params}
        full = instantiate(role, binding, len(role))
        for j in range(1, len(role) + 1):
            if full.direction(j) is not Direction.SEND:
                continue
            prefix = instantiate(role, binding, j)
            for u in ingredients(full.msg(j)):
                if isinstance(u, Indet) or not (isinstance(u, Enc) or is_atom(u)):
                    continue
                for c in cands:
                    beta = unify(c, u, keep=keep)
                    if beta is None:
                        continue
                    pre = sk.substitute(beta).add_strand(prefix.substitute(beta))
                    pre = pre.add_edge(Node(len(sk.strands), j), n)
                    nxt = _extend(h, pre, beta, keep)
                    if nxt is not None:
                        out.append(nxt)
    return out


def _fresh_count(h: Homomorphism, sk: Preskeleton) -> int:
    image = var_set(h.term(v) for v in h.src.variables)
    return len(sk.variables - image)


def shapes(start: Preskeleton, protocol: Protocol, bounds: SearchBounds = DEFAULT_BOUNDS) -> ShapeResult:
    h0 = identity(start)
    queue = deque([(h0, start)])
    visited = {canonical_key(start, h0)}
    found = []
    exhausted = True
    while queue:
        h, sk = queue.popleft()
        pending = unrealized_nodes(sk)
        if not pending:
            found.append((h, sk))
            continue
        keep = var_set(h.term(v) for v in start.variables)
        for h2, sk2 in successors(h, sk, pending[0], protocol, keep):
            if len(sk2.strands) - len(start.strands) > bounds.max_added_strands:
                continue
            if _fresh_count(h2, sk2) > bounds.max_fresh_atoms:
                continue
            key = canonical_key(sk2, h2)
            if key in visited:
                continue
            if len(visited) >= bounds.max_states:
                exhausted = False
                queue.clear()
                break
            visited.add(key)
            queue.append((h2, sk2))
    return ShapeResult(tuple(minimal(found)), exhausted, len(visited))


def factors_through(j: Homomorphism, h: Homomorphism) -> Optional[Homomorphism]:
    """``K`` with ``j = K ∘ h``, or None."""
    if j.src != h.src:
        raise ValueError("homomorphisms must share a source")
    for k in find_homomorphisms(h.dst, j.dst):
        if compose(k, h).equivalent(j):
            return k
    return None


def minimal(found) -> list:
    """Drop images that factor through another found image; one per iso class."""
    kept: list = []
    for _, h, sk in _sort_found(found):
        if any(factors_through(h, h2) is not None for h2, _ in kept):
            continue
        kept = [(h2, s2) for h2, s2 in kept if factors_through(h2, h) is None]
        kept.append((h, sk))
    return kept


def _sort_found(found) -> list:
    items = [((len(sk.strands), len(sk.nodes), canonical_key(sk, h)), h, sk) for h, sk in found]
    items.sort(key=lambda x: x[0])
    return items


def dead_within_bound(sk: Preskeleton, protocol: Protocol, bounds: SearchBounds = DEFAULT_BOUNDS) -> bool:
    """No realized image found within ``bounds``; conclusive only up to the bound."""
    return not shapes(sk, protocol, bounds).shapes


# ------------------------------------------------------------ goal check

class GoalInputError(SkeletalError):
    """The hypothesis cannot be evaluated, as opposed to being unsatisfiable."""


def check_goal(protocol: Protocol, goal: SecurityGoal, bounds: SearchBounds = DEFAULT_BOUNDS) -> Verdict:
    cs = characteristic_skeleton(goal)
    if not cs.ok:
        if cs.reason.is_input_error:
            raise GoalInputError(f"conjunct {cs.index + 1} ({cs.conjunct}): {cs.reason.value} {cs.detail}".rstrip())
        return Verdict(VerdictKind.ACHIEVED, cs, bounds=bounds)
    result = shapes(cs.skeleton, protocol, bounds)
    for h, sk in result.shapes:
        if not satisfies_conclusion(sk, h.assignment(cs.sigma), goal):
            return Verdict(VerdictKind.COUNTEREXAMPLE, cs, result, (h, sk), bounds)
    kind = VerdictKind.ACHIEVED if result.exhausted else VerdictKind.BOUND_EXCEEDED
    return Verdict(kind, cs, result, bounds=bounds)
