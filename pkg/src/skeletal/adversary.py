"""Dolev-Yao derivability and the realized test."""
from __future__ import annotations

from dataclasses import dataclass

from .skeleton import Node, Preskeleton
from .terms import Atom, Enc, Indet, Pair, Term, inverse, is_atom


@dataclass(frozen=True)
class AdversaryContext:
    available: frozenset
    non: frozenset = frozenset()
    unique_originated: frozenset = frozenset()

    def creatable(self, a: Atom) -> bool:
        return a not in self.non and a not in self.unique_originated


def analyze(ctx: AdversaryContext) -> frozenset:
    """Saturate ``ctx.available`` under projection and decryption."""
    known = set(ctx.available)
    changed = True
    while changed:
        changed = False
        for t in list(known):
            if isinstance(t, Pair):
                parts = (t.left, t.right)
            elif isinstance(t, Enc) and _synth(inverse(t.key), known, ctx):
                parts = (t.plain,)
            else:
                continue
            for part in parts:
                if part not in known:
                    known.add(part)
                    changed = True
    return frozenset(known)


def _synth(t: Term, known, ctx: AdversaryContext) -> bool:
    if t in known or isinstance(t, Indet):
        return True
    if is_atom(t):
        return ctx.creatable(t)
    if isinstance(t, Pair):
        return _synth(t.left, known, ctx) and _synth(t.right, known, ctx)
    if isinstance(t, Enc):
        return _synth(t.plain, known, ctx) and _synth(t.key, known, ctx)
    return False


def derivable(ctx: AdversaryContext, target: Term) -> bool:
    return _synth(target, analyze(ctx), ctx)


def context_at(sk: Preskeleton, n: Node) -> AdversaryContext:
    avail = frozenset(sk.msg(m) for m in sk.predecessors(n) if sk.is_transmission(m))
    return AdversaryContext(avail, sk.non, unique_originated(sk))


def unique_originated(sk: Preskeleton) -> frozenset:
    return frozenset(a for a in sk.unique if sk.originates(a))


def unrealized_nodes(sk: Preskeleton) -> list:
    """Reception nodes whose message the adversary cannot build, in node order."""
    uo = unique_originated(sk)
    memo: dict = {}
    out = []
    for n in sk.nodes:
        if sk.is_transmission(n):
            continue
        avail = frozenset(sk.msg(m) for m in sk.predecessors(n) if sk.is_transmission(m))
        ctx = AdversaryContext(avail, sk.non, uo)
        known = memo.get(avail)
        if known is None:
            known = memo[avail] = analyze(ctx)
        if not _synth(sk.msg(n), known, ctx):
            out.append(n)
    return out


def realized(sk: Preskeleton) -> bool:
    return not unrealized_nodes(sk)
