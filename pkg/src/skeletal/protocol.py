"""Protocols as sets of roles; role instantiation and the role-node instance test."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .sexpr import ParseError, SList, String, Symbol, read_all
from .terms import (
    Base, Enc, Indet, Pair, PubKey, SigKey, Sort, Substitution, Term, apply,
    cat, inverse, match, render, sort_of, variables, is_atom,
)


class Direction(str, enum.Enum):
    SEND = "send"
    RECV = "recv"

    @property
    def sign(self) -> str:
        return "+" if self is Direction.SEND else "-"


@dataclass(frozen=True)
class RoleEvent:
    direction: Direction
    template: Term


@dataclass(frozen=True)
class Role:
    name: str
    params: tuple
    trace: tuple

    def __post_init__(self):
        if not self.trace:
            raise ValueError(f"role {self.name} has an empty trace")
        declared = set(self.params)
        for ev in self.trace:
            for v in variables(ev.template):
                if v not in declared:
                    raise ValueError(f"role {self.name} uses undeclared {v.ident}")

    def __len__(self) -> int:
        return len(self.trace)

    def param(self, ident: str):
        for p in self.params:
            if p.ident == ident:
                return p
        raise KeyError(ident)

    def params_upto(self, j: int) -> tuple:
        """Params occurring in the first ``j`` templates, in declaration order."""
        seen = set()
        for ev in self.trace[:j]:
            seen.update(variables(ev.template))
        return tuple(p for p in self.params if p in seen)

    def param_sort(self, p) -> str:
        return "mesg" if isinstance(p, Indet) else p.sort.value


LISTENER_NAME = "lsn"
LISTENER = Role(LISTENER_NAME, (Indet("x"),), (RoleEvent(Direction.RECV, Indet("x")),))


@dataclass(frozen=True)
class Protocol:
    name: str
    roles: tuple  # protocol-specific roles; the listener is implicit

    def __post_init__(self):
        names = [r.name for r in self.roles]
        for n in names:
            if n == LISTENER_NAME:
                raise ValueError("role name 'lsn' is reserved for the listener")
            if names.count(n) > 1:
                raise ValueError(f"duplicate role name {n}")

    @property
    def all_roles(self) -> tuple:
        return self.roles + (LISTENER,)

    def role(self, name: str) -> Role:
        for r in self.all_roles:
            if r.name == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class StrandInstance:
    role: Role
    length: int
    binding: Substitution
    events: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        evs = tuple((ev.direction, apply(self.binding, ev.template))
                    for ev in self.role.trace[:self.length])
        object.__setattr__(self, "events", evs)

    def msg(self, pos: int) -> Term:
        return self.events[pos - 1][1]

    def direction(self, pos: int) -> Direction:
        return self.events[pos - 1][0]

    def substitute(self, subst: Substitution) -> "StrandInstance":
        if not subst:
            return self
        b = {p: apply(subst, v) for p, v in self.binding.items()}
        return StrandInstance(self.role, self.length, _binding(b))

    def values(self) -> tuple:
        """Parameter values in the role's canonical order."""
        return tuple(self.binding[p] for p in self.role.params_upto(self.length))


def instantiate(role: Role, binding: Union[Substitution, Mapping], length: int) -> StrandInstance:
    if not 1 <= length <= len(role):
        raise ValueError(f"length {length} out of range for role {role.name}")
    items = dict(binding.items())
    needed = role.params_upto(length)
    missing = [p.ident for p in needed if p not in items]
    if missing:
        raise ValueError(f"binding for role {role.name} lacks {', '.join(missing)}")
    try:
        b = _binding({p: items[p] for p in needed})
    except TypeError as exc:
        raise ValueError(str(exc)) from None
    return StrandInstance(role, length, b)


def _binding(m: dict) -> Substitution:
    # Role params may share identifiers with the values they are bound to;
    # keep identity entries so the binding stays total on the prefix params.
    s = Substitution(m)
    s._map.update({k: v for k, v in m.items() if k == v})
    return s


def instance_of(events: Sequence, role: Role, j: int) -> Optional[Substitution]:
    """Binding ``α`` with ``α(templateᵢ) = msgᵢ`` and equal directions, i ≤ j."""
    if not 1 <= j <= len(role) or len(events) < j:
        return None
    pv = set(role.params)
    b: dict = {}
    for (d, msg), ev in zip(events[:j], role.trace[:j]):
        if d != ev.direction:
            return None
        b = match(ev.template, msg, b, pv)
        if b is None:
            return None
    return _binding(b)


# ------------------------------------------------------------------ parse

SORT_NAMES = {s.value: s for s in Sort}


def parse_message(form, scope: Mapping[str, object], source="<input>") -> Term:
    """Parse concrete message syntax; identifiers resolve through ``scope``."""
    if isinstance(form, Symbol):
        if form.name not in scope:
            raise ParseError(f"undeclared identifier {form.name}", form.line, form.col, source)
        return scope[form.name]
    if not isinstance(form, SList) or form.head is None:
        raise ParseError(f"malformed message {form}", *_pos(form), source)
    op, args = form.head, form.items[1:]
    try:
        if op == "enc":
            _arity(form, 2, source)
            return Enc(parse_message(args[0], scope, source), parse_message(args[1], scope, source))
        if op == "cat":
            if len(args) < 2:
                raise ParseError("cat needs at least two arguments", form.line, form.col, source)
            return cat(*(parse_message(a, scope, source) for a in args))
        if op == "tag":
            if len(args) != 3 or not isinstance(args[0], String):
                raise ParseError('tag expects (tag "str" t1 t2)', form.line, form.col, source)
            return Pair(args[0].value, parse_message(args[1], scope, source),
                        parse_message(args[2], scope, source))
        if op in ("sk", "pk"):
            _arity(form, 1, source)
            owner = parse_message(args[0], scope, source)
            return SigKey(owner) if op == "sk" else PubKey(owner)
        if op == "invk":
            _arity(form, 1, source)
            k = parse_message(args[0], scope, source)
            if not is_atom(k) or sort_of(k) not in (Sort.AKEY, Sort.SKEY):
                raise ParseError(f"invk expects a key atom, got {render(k)}", form.line, form.col, source)
            return inverse(k)
    except TypeError as exc:
        raise ParseError(str(exc), form.line, form.col, source) from None
    raise ParseError(f"unknown message operator {op}", form.line, form.col, source)


def _arity(form, n, source):
    if len(form.items) - 1 != n:
        raise ParseError(f"{form.head} expects {n} argument(s)", form.line, form.col, source)


def _pos(form):
    return getattr(form, "line", 0), getattr(form, "col", 0)


def parse_vars(form, source="<input>", allow_node=False) -> list:
    """``((a b name) (k skey))`` → ``[("a", "name"), ("b", "name"), ("k", "skey")]``."""
    if not isinstance(form, SList):
        raise ParseError("expected a variable declaration list", *_pos(form), source)
    out = []
    for decl in form:
        if not isinstance(decl, SList) or len(decl) < 2 or not all(isinstance(x, Symbol) for x in decl):
            raise ParseError(f"malformed declaration {decl}", *_pos(decl), source)
        sort = decl[-1].name
        if sort not in SORT_NAMES and sort != "mesg" and not (allow_node and sort == "node"):
            raise ParseError(f"unknown sort {sort}", decl[-1].line, decl[-1].col, source)
        for sym in decl.items[:-1]:
            out.append((sym, sort))
    return out


def make_var(ident: str, sort: str):
    return Indet(ident) if sort == "mesg" else Base(ident, SORT_NAMES[sort])


def parse_role(form: SList, source="<input>") -> Role:
    if form.head != "defrole" or len(form) < 4 or not isinstance(form[1], Symbol):
        raise ParseError("expected (defrole <name> (vars ...) (trace ...))", form.line, form.col, source)
    name = form[1].name
    vars_form, trace_form = form[2], form[3]
    if not isinstance(vars_form, SList) or vars_form.head != "vars":
        raise ParseError("expected (vars ...)", *_pos(vars_form), source)
    if not isinstance(trace_form, SList) or trace_form.head != "trace":
        raise ParseError("expected (trace ...)", *_pos(trace_form), source)
    scope, params = {}, []
    for sym, sort in parse_vars(SList(vars_form.items[1:], vars_form.line, vars_form.col), source):
        if sym.name in scope:
            raise ParseError(f"parameter {sym.name} declared twice in role {name}", sym.line, sym.col, source)
        v = make_var(sym.name, sort)
        scope[sym.name] = v
        params.append(v)
    events = []
    for ev in trace_form.items[1:]:
        if not isinstance(ev, SList) or ev.head not in ("send", "recv") or len(ev) != 2:
            raise ParseError("trace events are (send <msg>) or (recv <msg>)", *_pos(ev), source)
        events.append(RoleEvent(Direction(ev.head), parse_message(ev[1], scope, source)))
    if not events:
        raise ParseError(f"role {name} has an empty trace", trace_form.line, trace_form.col, source)
    return Role(name, tuple(params), tuple(events))


def parse_protocol(text: str, source: str = "<input>") -> Protocol:
    forms = read_all(text, source)
    if len(forms) != 1:
        raise ParseError("expected exactly one defprotocol form", 1, 1, source)
    form = forms[0]
    if not isinstance(form, SList) or form.head != "defprotocol" or len(form) < 3 \
            or not isinstance(form[1], Symbol):
        raise ParseError("expected (defprotocol <name> (defrole ...)+)", *_pos(form), source)
    roles, seen = [], {}
    for rf in form.items[2:]:
        if not isinstance(rf, SList):
            raise ParseError("expected a defrole form", *_pos(rf), source)
        role = parse_role(rf, source)
        if role.name == LISTENER_NAME:
            raise ParseError("role name 'lsn' is reserved", rf.line, rf.col, source)
        if role.name in seen:
            raise ParseError(f"duplicate role name {role.name}", rf.line, rf.col, source)
        seen[role.name] = role
        roles.append(role)
    return Protocol(form[1].name, tuple(roles))


def load_protocol(path) -> Protocol:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read(), str(path))


def format_protocol(p: Protocol) -> str:
    lines = [f"(defprotocol {p.name}"]
    for r in p.roles:
        groups: list = []
        for v in r.params:
            s = r.param_sort(v)
            if groups and groups[-1][1] == s:
                groups[-1][0].append(v.ident)
            else:
                groups.append(([v.ident], s))
        decls = " ".join(f"({' '.join(ids)} {s})" for ids, s in groups)
        lines.append(f"  (defrole {r.name}")
        lines.append(f"    (vars {decls})")
        evs = " ".join(f"({ev.direction.value} {render(ev.template)})" for ev in r.trace)
        lines.append(f"    (trace {evs}))")
    lines[-1] += ")"
    return "\n".join(lines) + "\n"
