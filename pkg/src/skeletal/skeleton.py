"""Preskeletons, skeletons, hulls and skeleton homomorphisms."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

from .protocol import Direction, StrandInstance
from .terms import (
    EMPTY, Substitution, Term, apply, is_atom, is_ingredient, match, unify_all,
    var_set,
)


class Node(NamedTuple):
    strand: int
    pos: int  # 1-based

    def __str__(self) -> str:
        return f"{self.strand}:{self.pos}"


@dataclass(frozen=True, eq=True)
class Preskeleton:
    """Role instances with an ordering and non/unique assumptions.

    ``order`` holds generating edges; strand succession is implicit.
    The same class represents skeletons; see :func:`validate`.
    """

    strands: tuple = ()
    order: frozenset = frozenset()
    non: frozenset = frozenset()
    unique: frozenset = frozenset()

    def __post_init__(self):
        for a, b in self.order:
            for n in (a, b):
                if not (0 <= n.strand < len(self.strands)
                        and 1 <= n.pos <= self.strands[n.strand].length):
                    raise ValueError(f"order edge mentions unknown node {n}")
        for a in self.non | self.unique:
            if not is_atom(a):
                raise ValueError(f"non/unique members must be atoms, got {a}")

    def __hash__(self) -> int:
        return hash((self.strands, self.order, self.non, self.unique))

    # ------------------------------------------------------------ nodes
    @cached_property
    def nodes(self) -> tuple:
        return tuple(Node(i, p) for i, s in enumerate(self.strands)
                     for p in range(1, s.length + 1))

    def has_node(self, n) -> bool:
        return (isinstance(n, tuple) and 0 <= n[0] < len(self.strands)
                and 1 <= n[1] <= self.strands[n[0]].length)

    def msg(self, n: Node) -> Term:
        return self.strands[n.strand].msg(n.pos)

    def direction(self, n: Node) -> Direction:
        return self.strands[n.strand].direction(n.pos)

    def is_transmission(self, n: Node) -> bool:
        return self.direction(n) is Direction.SEND

    # ------------------------------------------------------------ order
    @cached_property
    def _succ(self) -> dict:
        succ = {n: set() for n in self.nodes}
        for i, s in enumerate(self.strands):
            for p in range(1, s.length):
                succ[Node(i, p)].add(Node(i, p + 1))
        for a, b in self.order:
            succ[a].add(b)
        return succ

    @cached_property
    def _closure(self) -> dict:
        reach = {}
        succ = self._succ
        for n in self.nodes:
            seen = set()
            stack = list(succ[n])
            while stack:
                m = stack.pop()
                if m in seen:
                    continue
                seen.add(m)
                stack.extend(succ[m])
            reach[n] = frozenset(seen)
        return reach

    def precedes(self, a: Node, b: Node) -> bool:
        """Strict ``a ≺ b``."""
        return b in self._closure[a]

    def preceq(self, a: Node, b: Node) -> bool:
        return a == b or self.precedes(a, b)

    def has_cycle(self) -> bool:
        return any(n in self._closure[n] for n in self.nodes)

    def closure_edges(self) -> frozenset:
        return frozenset((a, b) for a in self.nodes for b in self._closure[a])

    def predecessors(self, n: Node) -> list:
        return [m for m in self.nodes if n in self._closure[m]]

    # ------------------------------------------------------ origination
    def originates_at(self, a: Term, n: Node) -> bool:
        if not self.has_node(n):
            raise ValueError(f"no node {n} in skeleton")
        if not self.is_transmission(n) or not is_ingredient(a, self.msg(n)):
            return False
        s = self.strands[n.strand]
        return not any(is_ingredient(a, s.msg(p)) for p in range(1, n.pos))

    def origination_nodes(self, a: Term) -> list:
        return [n for n in self.nodes if self.originates_at(a, n)]

    def originates(self, a: Term) -> bool:
        return any(self.originates_at(a, n) for n in self.nodes)

    # -------------------------------------------------------- variables
    @cached_property
    def variables(self) -> frozenset:
        terms = [m for s in self.strands for _, m in s.events]
        return frozenset(var_set(terms + list(self.non) + list(self.unique)))

    def parameter_values(self) -> set:
        vals = set()
        for s in self.strands:
            vals.update(s.binding[p] for p in s.role.params_upto(s.length))
        return vals

    # ---------------------------------------------------------- editing
    def substitute(self, subst: Substitution) -> "Preskeleton":
        if not subst:
            return self
        return Preskeleton(
            tuple(s.substitute(subst) for s in self.strands),
            self.order,
            frozenset(apply(subst, a) for a in self.non),
            frozenset(apply(subst, a) for a in self.unique),
        )

    def add_strand(self, strand: StrandInstance) -> "Preskeleton":
        return Preskeleton(self.strands + (strand,), self.order, self.non, self.unique)

    def add_edge(self, a: Node, b: Node) -> "Preskeleton":
        return Preskeleton(self.strands, self.order | {(a, b)}, self.non, self.unique)

    def with_sets(self, non=None, unique=None) -> "Preskeleton":
        return Preskeleton(self.strands, self.order,
                           self.non if non is None else frozenset(non),
                           self.unique if unique is None else frozenset(unique))

    def pruned(self) -> "Preskeleton":
        """Same skeleton with edges implied by strand order or transitivity removed."""
        keep = set()
        for a, b in self.order:
            if a.strand == b.strand and a.pos < b.pos:
                continue
            keep.add((a, b))
        out = set(keep)
        for e in sorted(keep):
            rest = Preskeleton(self.strands, frozenset(out - {e}), self.non, self.unique)
            if rest.precedes(*e):
                out.discard(e)
        return Preskeleton(self.strands, frozenset(out), self.non, self.unique)

    def __repr__(self) -> str:
        strands = "; ".join(f"{s.role.name}/{s.length}" for s in self.strands)
        return f"<Preskeleton [{strands}] edges={len(self.order)} non={len(self.non)} unique={len(self.unique)}>"


Skeleton = Preskeleton
EMPTY_SKELETON = Preskeleton()

SKELETON = "skeleton"
PRESKELETON = "preskeleton"
INVALID = "invalid"


def validate(sk: Preskeleton) -> str:
    if sk.has_cycle():
        return INVALID
    if any(sk.originates(a) for a in sk.non):
        return INVALID
    if any(len(sk.origination_nodes(a)) > 1 for a in sk.unique):
        return PRESKELETON
    return SKELETON


def originates_at(a: Term, sk: Preskeleton, n: Node) -> bool:
    return sk.originates_at(a, n)


# ---------------------------------------------------------- homomorphisms

@dataclass(frozen=True)
class Homomorphism:
    """``[ζ, α]`` given as a strand map (positions are preserved) and a substitution."""

    src: Preskeleton
    dst: Preskeleton
    strand_map: tuple
    subst: Substitution = EMPTY

    def node(self, n: Node) -> Node:
        return Node(self.strand_map[n.strand], n.pos)

    def term(self, t: Term) -> Term:
        return apply(self.subst, t)

    def value(self, v):
        if isinstance(v, Node):
            return self.node(v)
        return apply(self.subst, v)

    def assignment(self, sigma: dict) -> dict:
        """``H ∘ σ``."""
        return {k: self.value(v) for k, v in sigma.items()}

    def equivalent(self, other: "Homomorphism") -> bool:
        if self.strand_map != other.strand_map:
            return False
        return all(apply(self.subst, v) == apply(other.subst, v) for v in self.src.variables)

    def is_isomorphism(self) -> bool:
        if sorted(self.strand_map) != list(range(len(self.dst.strands))):
            return False
        if len(self.src.nodes) != len(self.dst.nodes):
            return False
        images = [apply(self.subst, v) for v in self.src.variables]
        if any(type(i) is not type(v) for i, v in zip(images, self.src.variables)):
            return False
        if len(set(images)) != len(images):
            return False
        return (len(self.src.closure_edges()) == len(self.dst.closure_edges())
                and len(self.src.non) == len(self.dst.non)
                and len(self.src.unique) == len(self.dst.unique))


def identity(sk: Preskeleton) -> Homomorphism:
    return Homomorphism(sk, sk, tuple(range(len(sk.strands))), EMPTY)


def compose(h2: Homomorphism, h1: Homomorphism) -> Homomorphism:
    """``h2 ∘ h1``."""
    if h1.dst != h2.src:
        raise ValueError("cannot compose: target of first is not source of second")
    return Homomorphism(h1.src, h2.dst,
                        tuple(h2.strand_map[i] for i in h1.strand_map),
                        h2.subst.compose(h1.subst))


def check_homomorphism(h: Homomorphism, src: Preskeleton, dst: Preskeleton) -> bool:
    if len(h.strand_map) != len(src.strands):
        return False
    for i, s in enumerate(src.strands):
        j = h.strand_map[i]
        if not 0 <= j < len(dst.strands) or dst.strands[j].length < s.length:
            return False
        t = dst.strands[j]
        for p in range(1, s.length + 1):
            if s.direction(p) != t.direction(p) or apply(h.subst, s.msg(p)) != t.msg(p):
                return False
    return _check_structure(h.subst, h.strand_map, src, dst)


def _check_structure(subst, smap, src, dst) -> bool:
    node = lambda n: Node(smap[n.strand], n.pos)
    for a, b in src.order:
        if not dst.preceq(node(a), node(b)):
            return False
    if any(apply(subst, a) not in dst.non for a in src.non):
        return False
    if any(apply(subst, a) not in dst.unique for a in src.unique):
        return False
    for a in src.unique:
        image = apply(subst, a)
        for n in src.origination_nodes(a):
            if not dst.originates_at(image, node(n)):
                return False
    return True


def find_homomorphisms(src: Preskeleton, dst: Preskeleton) -> list:
    """Every homomorphism ``src → dst``, one per equivalence class."""
    order = sorted(range(len(src.strands)), key=lambda i: -src.strands[i].length)
    results = []
    smap = [0] * len(src.strands)

    def rec(k: int, binding: dict):
        if k == len(order):
            b = dict(binding)
            for v in src.variables:
                b.setdefault(v, v)
            try:
                subst = Substitution(b)
            except TypeError:
                return
            if _check_structure(subst, smap, src, dst):
                results.append(Homomorphism(src, dst, tuple(smap), subst))
            return
        i = order[k]
        s = src.strands[i]
        for j, t in enumerate(dst.strands):
            if t.length < s.length:
                continue
            b = binding
            for p in range(1, s.length + 1):
                if s.direction(p) != t.direction(p):
                    b = None
                    break
                b = match(s.msg(p), t.msg(p), b)
                if b is None:
                    break
            if b is not None:
                smap[i] = j
                rec(k + 1, b)

    rec(0, {})
    results.sort(key=lambda h: h.strand_map)
    return results


def isomorphic(a: Preskeleton, b: Preskeleton) -> bool:
    if len(a.strands) != len(b.strands) or len(a.nodes) != len(b.nodes):
        return False
    return any(h.is_isomorphism() for h in find_homomorphisms(a, b))


# ------------------------------------------------------------------- hull

def identify_strands(sk: Preskeleton, keep: int, drop: int) -> Optional[tuple]:
    """Fold strand ``drop`` onto ``keep``; messages must already agree.

    Returns the new preskeleton and the strand map, or None when the
    merged ordering has a cycle.
    """
    smap = []
    new_index = 0
    for i in range(len(sk.strands)):
        if i == drop:
            smap.append(None)
        else:
            smap.append(new_index)
            new_index += 1
    smap[drop] = smap[keep]
    strands = tuple(s for i, s in enumerate(sk.strands) if i != drop)
    edges = set()
    for a, b in sk.order:
        a2, b2 = Node(smap[a.strand], a.pos), Node(smap[b.strand], b.pos)
        if a2.strand == b2.strand:
            if a2.pos >= b2.pos:
                return None
            continue
        edges.add((a2, b2))
    out = Preskeleton(strands, frozenset(edges), sk.non, sk.unique)
    if out.has_cycle():
        return None
    return out, tuple(smap)


def unify_strands(sk: Preskeleton, i: int, j: int, subst: Substitution = EMPTY, keep=()):
    """MGU making strands ``i`` and ``j`` agree wherever both are defined."""
    s, t = sk.strands[i], sk.strands[j]
    pairs = []
    for p in range(1, min(s.length, t.length) + 1):
        if s.direction(p) != t.direction(p):
            return None
        pairs.append((s.msg(p), t.msg(p)))
    return unify_all(pairs, subst, keep)


def merge_strands(sk: Preskeleton, i: int, j: int, keep=()) -> Optional[tuple]:
    """Identify strands ``i`` and ``j`` via their MGU.

    Returns ``(preskeleton, strand_map, subst)`` or None on failure.
    The longer strand survives; on equal length the lower index does.
    """
    beta = unify_strands(sk, i, j, keep=keep)
    if beta is None:
        return None
    sk1 = sk.substitute(beta)
    if any(sk1.originates(a) for a in sk1.non):
        return None
    li, lj = sk.strands[i].length, sk.strands[j].length
    survivor, dropped = (i, j) if (li > lj or (li == lj and i < j)) else (j, i)
    merged = identify_strands(sk1, survivor, dropped)
    if merged is None:
        return None
    return merged[0], merged[1], beta


def hull(p: Preskeleton, keep=()) -> Optional[tuple]:
    """The hull of ``p`` and the homomorphism onto it, or None if undefined."""
    if validate(p) == INVALID:
        return None
    current = p
    smap = tuple(range(len(p.strands)))
    subst = EMPTY
    while True:
        clash = None
        for a in sorted(current.unique, key=str):
            origins = current.origination_nodes(a)
            if len(origins) > 1:
                clash = origins[:2]
                break
        if clash is None:
            break
        n, m = clash
        if n.pos != m.pos:
            return None
        merged = merge_strands(current, n.strand, m.strand, keep)
        if merged is None:
            return None
        current, step_map, beta = merged
        smap = tuple(step_map[i] for i in smap)
        subst = beta.compose(subst)
    if validate(current) != SKELETON:
        return None
    return current, Homomorphism(p, current, smap, subst)
