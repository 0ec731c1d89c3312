"""Message algebra: sorted atoms, indeterminates, encryption and tagged pairs.

Atoms act as sorted variables under substitution; indeterminates are
untyped.  Constructed keys (``sk``, ``pk``, ``invk``) are atoms whose
identity is determined by their arguments.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union


class Sort(str, enum.Enum):
    NAME = "name"
    TEXT = "text"
    NONCE = "nonce"
    SKEY = "skey"
    AKEY = "akey"

    def __str__(self) -> str:
        return self.value


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


class Atom(Term):
    __slots__ = ()


@dataclass(frozen=True, repr=False)
class Base(Atom):
    ident: str
    sort: Sort

    def __repr__(self) -> str:
        return f"Base({self.ident!r}, {self.sort.value})"


@dataclass(frozen=True, repr=False)
class SigKey(Atom):
    owner: Base

    def __post_init__(self):
        if not (isinstance(self.owner, Base) and self.owner.sort is Sort.NAME):
            raise TypeError(f"sk expects a name atom, got {self.owner!r}")

    def __repr__(self) -> str:
        return f"SigKey({self.owner!r})"


@dataclass(frozen=True, repr=False)
class PubKey(Atom):
    owner: Base

    def __post_init__(self):
        if not (isinstance(self.owner, Base) and self.owner.sort is Sort.NAME):
            raise TypeError(f"pk expects a name atom, got {self.owner!r}")

    def __repr__(self) -> str:
        return f"PubKey({self.owner!r})"


@dataclass(frozen=True, repr=False)
class InvKey(Atom):
    # Always wraps a non-inverted asymmetric key; build through inverse().
    key: Atom

    def __repr__(self) -> str:
        return f"InvKey({self.key!r})"


@dataclass(frozen=True, repr=False)
class Indet(Term):
    ident: str

    def __repr__(self) -> str:
        return f"Indet({self.ident!r})"


@dataclass(frozen=True, repr=False)
class Enc(Term):
    plain: Term
    key: Term
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("enc", self.plain, self.key)))

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Enc({self.plain!r}, {self.key!r})"


@dataclass(frozen=True, repr=False)
class Pair(Term):
    tag: str
    left: Term
    right: Term
    _hash: int = field(init=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("pair", self.tag, self.left, self.right)))

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Pair({self.tag!r}, {self.left!r}, {self.right!r})"


NIL = "nil"
Var = Union[Base, Indet]


def cat(*parts: Term) -> Term:
    """Right-nested untagged concatenation."""
    if len(parts) < 2:
        raise ValueError("cat needs at least two arguments")
    result = parts[-1]
    for p in reversed(parts[:-1]):
        result = Pair(NIL, p, result)
    return result


def sort_of(a: Atom) -> Sort:
    if isinstance(a, Base):
        return a.sort
    return Sort.AKEY


def is_atom(t: Term) -> bool:
    return isinstance(t, Atom)


def is_var(t: Term) -> bool:
    return isinstance(t, (Base, Indet))


def inverse(k: Term) -> Term:
    """Decryption key for ``k``.

    Symmetric atoms and non-atomic keys are their own inverse.
    """
    if isinstance(k, InvKey):
        return k.key
    if isinstance(k, (SigKey, PubKey)):
        return InvKey(k)
    if isinstance(k, Base):
        return InvKey(k) if k.sort is Sort.AKEY else k
    return k


def depth(t: Term) -> int:
    if isinstance(t, Enc):
        return 1 + max(depth(t.plain), depth(t.key))
    if isinstance(t, Pair):
        return 1 + max(depth(t.left), depth(t.right))
    return 0


def variables(t: Term) -> Iterator[Var]:
    """Base atoms and indeterminates of ``t`` in left-to-right order, with repeats."""
    if isinstance(t, (Base, Indet)):
        yield t
    elif isinstance(t, (SigKey, PubKey)):
        yield t.owner
    elif isinstance(t, InvKey):
        yield from variables(t.key)
    elif isinstance(t, Enc):
        yield from variables(t.plain)
        yield from variables(t.key)
    elif isinstance(t, Pair):
        yield from variables(t.left)
        yield from variables(t.right)


def var_set(terms: Iterable[Term]) -> set:
    out = set()
    for t in terms:
        out.update(variables(t))
    return out


# ---------------------------------------------------------------- paths

LEFT = "left"
RIGHT = "right"


def path_apply(path, t: Term) -> Optional[Term]:
    for step in path:
        if isinstance(t, Enc):
            t = t.plain if step == LEFT else t.key
        elif isinstance(t, Pair):
            t = t.left if step == LEFT else t.right
        else:
            return None
    return t


def traverses_key_edge(path, t: Term) -> bool:
    path = tuple(path)
    if path_apply(path, t) is None:
        raise ValueError(f"path {path} is undefined on {render(t)}")
    for step in path:
        if isinstance(t, Enc) and step == RIGHT:
            return True
        t = path_apply((step,), t)
    return False


def paths(t: Term, prefix=()) -> Iterator[tuple]:
    """Every defined path of ``t``, shortest first along each branch."""
    yield prefix
    if isinstance(t, Enc):
        yield from paths(t.plain, prefix + (LEFT,))
        yield from paths(t.key, prefix + (RIGHT,))
    elif isinstance(t, Pair):
        yield from paths(t.left, prefix + (LEFT,))
        yield from paths(t.right, prefix + (RIGHT,))


def ingredients(t: Term) -> Iterator[Term]:
    """Subterms reachable without crossing an encryption key edge."""
    yield t
    if isinstance(t, Enc):
        yield from ingredients(t.plain)
    elif isinstance(t, Pair):
        yield from ingredients(t.left)
        yield from ingredients(t.right)


def subterms(t: Term) -> Iterator[Term]:
    """Subterms reachable along any path, key edges included."""
    yield t
    if isinstance(t, Enc):
        yield from subterms(t.plain)
        yield from subterms(t.key)
    elif isinstance(t, Pair):
        yield from subterms(t.left)
        yield from subterms(t.right)


def is_ingredient(t0: Term, t: Term) -> bool:
    if t0 == t:
        return True
    if isinstance(t, Enc):
        return is_ingredient(t0, t.plain)
    if isinstance(t, Pair):
        return is_ingredient(t0, t.left) or is_ingredient(t0, t.right)
    return False


def appears_in(t0: Term, t: Term) -> bool:
    if t0 == t:
        return True
    if isinstance(t, Enc):
        return appears_in(t0, t.plain) or appears_in(t0, t.key)
    if isinstance(t, Pair):
        return appears_in(t0, t.left) or appears_in(t0, t.right)
    return False


def occurs(v: Var, t: Term) -> bool:
    return any(x == v for x in variables(t))


# ---------------------------------------------------------- substitution

class Substitution:
    """Finite map from variables (base atoms, indeterminates) to terms.

    Application is simultaneous.  Substitutions produced by :func:`unify`
    and :meth:`compose` are idempotent.
    """

    __slots__ = ("_map",)

    def __init__(self, mapping: Optional[Mapping] = None):
        m = {}
        for k, v in (mapping or {}).items():
            if isinstance(k, Base):
                if not is_atom(v) or sort_of(v) is not k.sort:
                    raise TypeError(f"{render(k)}:{k.sort} cannot map to {render(v)}")
                if k.sort is Sort.NAME and not isinstance(v, Base):
                    raise TypeError(f"name {render(k)} must map to a name atom")
            elif not isinstance(k, Indet):
                raise TypeError(f"not a variable: {k!r}")
            if k != v:
                m[k] = v
        self._map = m

    def __getitem__(self, v):
        return self._map.get(v, v)

    def __contains__(self, v) -> bool:
        return v in self._map

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def items(self):
        return self._map.items()

    def domain(self):
        return self._map.keys()

    def __repr__(self) -> str:
        body = ", ".join(f"{render(k)}↦{render(v)}" for k, v in self._map.items())
        return "{" + body + "}"

    def __call__(self, t: Term) -> Term:
        return apply(self, t)

    def restrict(self, keep: Iterable) -> "Substitution":
        keep = set(keep)
        return Substitution({k: v for k, v in self._map.items() if k in keep})

    def compose(self, first: "Substitution") -> "Substitution":
        """``self ∘ first``: apply ``first``, then ``self``."""
        out = {k: apply(self, v) for k, v in first._map.items()}
        for k, v in self._map.items():
            if k not in first._map:
                out[k] = v
        return Substitution(out)


EMPTY = Substitution()


def apply(subst: Substitution, t: Term) -> Term:
    if not subst:
        return t
    return _apply(subst._map, t)


def _apply(m: dict, t: Term) -> Term:
    if isinstance(t, (Base, Indet)):
        return m.get(t, t)
    if isinstance(t, SigKey):
        return SigKey(m.get(t.owner, t.owner))
    if isinstance(t, PubKey):
        return PubKey(m.get(t.owner, t.owner))
    if isinstance(t, InvKey):
        return inverse(_apply(m, t.key))
    if isinstance(t, Enc):
        return Enc(_apply(m, t.plain), _apply(m, t.key))
    if isinstance(t, Pair):
        return Pair(t.tag, _apply(m, t.left), _apply(m, t.right))
    raise TypeError(f"not a term: {t!r}")


def compose(second: Substitution, first: Substitution) -> Substitution:
    return second.compose(first)


# ------------------------------------------------------------ unification

def unify(u: Term, v: Term, subst: Substitution = EMPTY, keep=()) -> Optional[Substitution]:
    """Most general unifier of ``u`` and ``v`` extending ``subst``, or None.

    When two variables meet, the one from ``v`` is bound to the one from
    ``u`` unless only the ``u`` side is outside ``keep``.
    """
    return unify_all([(u, v)], subst, keep)


def unify_all(pairs, subst: Substitution = EMPTY, keep=()) -> Optional[Substitution]:
    m = dict(subst._map)
    keep = set(keep)
    work = list(pairs)
    work.reverse()
    while work:
        s, t = work.pop()
        s = _apply(m, s)
        t = _apply(m, t)
        if s == t:
            continue
        if isinstance(s, Indet) or isinstance(t, Indet):
            if isinstance(s, Indet) and isinstance(t, Indet):
                var, val = (s, t) if t in keep and s not in keep else (t, s)
            elif isinstance(t, Indet):
                var, val = t, s
            else:
                var, val = s, t
            if occurs(var, val):
                return None
            _bind(m, var, val)
        elif is_atom(s) or is_atom(t):
            if not (is_atom(s) and is_atom(t)) or sort_of(s) is not sort_of(t):
                return None
            if isinstance(s, Base) and isinstance(t, Base):
                var, val = (s, t) if t in keep and s not in keep else (t, s)
                _bind(m, var, val)
            elif isinstance(t, Base):
                if occurs(t, s):
                    return None
                _bind(m, t, s)
            elif isinstance(s, Base):
                if occurs(s, t):
                    return None
                _bind(m, s, t)
            elif isinstance(s, InvKey) and isinstance(t, InvKey):
                work.append((s.key, t.key))
            elif isinstance(s, InvKey) or isinstance(t, InvKey):
                # inv(q) = k only by binding q to inv(k); a constructed key
                # under inv cannot equal a differently built atom
                inv, other = (s, t) if isinstance(s, InvKey) else (t, s)
                if not isinstance(inv.key, Base):
                    return None
                work.append((inv.key, inverse(other)))
            elif type(s) is type(t):
                work.append((s.owner, t.owner))
            else:
                return None
        elif isinstance(s, Enc) and isinstance(t, Enc):
            work.append((s.key, t.key))
            work.append((s.plain, t.plain))
        elif isinstance(s, Pair) and isinstance(t, Pair):
            if s.tag != t.tag:
                return None
            work.append((s.right, t.right))
            work.append((s.left, t.left))
        else:
            return None
    return Substitution(m)


def _bind(m: dict, var, val) -> None:
    one = {var: val}
    for k in list(m):
        m[k] = _apply(one, m[k])
    m[var] = val


def match(pattern: Term, target: Term, binding: Optional[dict] = None, pattern_vars=None) -> Optional[dict]:
    """One-sided matching: find ``b`` with ``apply(b, pattern) == target``.

    Variables of ``target`` are treated as constants.  When
    ``pattern_vars`` is given, only those variables of ``pattern`` may be
    bound; any other variable must match itself.
    """
    b = dict(binding) if binding else {}
    if _match(pattern, target, b, pattern_vars):
        return b
    return None


def _match(p: Term, t: Term, b: dict, pv) -> bool:
    if isinstance(p, (Base, Indet)) and (pv is None or p in pv):
        if p in b:
            return b[p] == t
        if isinstance(p, Base):
            if not is_atom(t) or sort_of(t) is not p.sort:
                return False
            if p.sort is Sort.NAME and not isinstance(t, Base):
                return False
        b[p] = t
        return True
    if isinstance(p, (Base, Indet)):
        return p == t
    if isinstance(p, InvKey):
        if not is_atom(t) or sort_of(t) is not Sort.AKEY:
            return False
        return _match(p.key, inverse(t), b, pv)
    if isinstance(p, SigKey):
        return isinstance(t, SigKey) and _match(p.owner, t.owner, b, pv)
    if isinstance(p, PubKey):
        return isinstance(t, PubKey) and _match(p.owner, t.owner, b, pv)
    if isinstance(p, Enc):
        return isinstance(t, Enc) and _match(p.plain, t.plain, b, pv) and _match(p.key, t.key, b, pv)
    if isinstance(p, Pair):
        return (isinstance(t, Pair) and p.tag == t.tag
                and _match(p.left, t.left, b, pv) and _match(p.right, t.right, b, pv))
    return False


# ------------------------------------------------------------ fresh atoms

class FreshSupply:
    """Generates identifiers unused so far in one analysis run."""

    def __init__(self, taken: Iterable[str] = ()):
        self._taken = set(taken)
        self._counter = itertools.count()

    def reserve(self, terms: Iterable[Term]) -> None:
        for v in var_set(terms):
            self._taken.add(v.ident)

    def ident(self, base: str) -> str:
        if base not in self._taken:
            self._taken.add(base)
            return base
        while True:
            cand = f"{base}-{next(self._counter)}"
            if cand not in self._taken:
                self._taken.add(cand)
                return cand

    def atom(self, base: str, sort: Sort) -> Base:
        return Base(self.ident(base), sort)

    def indet(self, base: str) -> Indet:
        return Indet(self.ident(base))


# -------------------------------------------------------------- rendering

def render(t: Term) -> str:
    if isinstance(t, (Base, Indet)):
        return t.ident
    if isinstance(t, SigKey):
        return f"(sk {t.owner.ident})"
    if isinstance(t, PubKey):
        return f"(pk {t.owner.ident})"
    if isinstance(t, InvKey):
        return f"(invk {render(t.key)})"
    if isinstance(t, Enc):
        return f"(enc {render(t.plain)} {render(t.key)})"
    if isinstance(t, Pair):
        if t.tag == NIL:
            parts = [t.left]
            rest = t.right
            while isinstance(rest, Pair) and rest.tag == NIL:
                parts.append(rest.left)
                rest = rest.right
            parts.append(rest)
            return "(cat " + " ".join(render(p) for p in parts) + ")"
        return f'(tag "{t.tag}" {render(t.left)} {render(t.right)})'
    raise TypeError(f"not a term: {t!r}")
