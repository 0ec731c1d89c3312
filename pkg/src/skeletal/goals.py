"""The goal language: atomic formulas, security claims and goals, satisfaction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .protocol import LISTENER, Protocol, Role, instance_of, parse_vars
from .sexpr import Number, ParseError, SList, String, Symbol, read_all
from .skeleton import Node, Preskeleton
from .terms import Base, PubKey, SigKey, Sort, Term, inverse


# ------------------------------------------------------------------ terms

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class KeyApp:
    fn: str  # "sk" | "pk" | "inv"
    arg: object

    def __str__(self) -> str:
        return f"({self.fn} {self.arg})"


def term_vars(t) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    else:
        yield from term_vars(t.arg)


def substitute_term(t, name: str, repl):
    if isinstance(t, Var):
        return repl if t.name == name else t
    return KeyApp(t.fn, substitute_term(t.arg, name, repl))


def evaluate(t, sigma: dict) -> Optional[Term]:
    """Value of a goal term, or None when undefined."""
    if isinstance(t, Var):
        v = sigma.get(t.name)
        return v if isinstance(v, Term) else None
    inner = evaluate(t.arg, sigma)
    if inner is None:
        return None
    if t.fn in ("sk", "pk"):
        if not (isinstance(inner, Base) and inner.sort is Sort.NAME):
            return None
        return SigKey(inner) if t.fn == "sk" else PubKey(inner)
    return inverse(inner)


# --------------------------------------------------------------- formulas

@dataclass(frozen=True)
class RolePred:
    role: Role
    index: int
    node: str
    args: tuple  # ((param var, goal term), ...) in canonical param order

    @property
    def is_listener(self) -> bool:
        return self.role is LISTENER or self.role.name == LISTENER.name

    def variables(self) -> set:
        out = {self.node}
        for _, t in self.args:
            out.update(term_vars(t))
        return out

    def __str__(self) -> str:
        if self.is_listener:
            return f"(lsn {self.node} {self.args[0][1]})"
        args = " ".join(f"({p.ident} {t})" for p, t in self.args)
        return f'(p "{self.role.name}" {self.index} {self.node} {args})'.replace(" )", ")")


@dataclass(frozen=True)
class Non:
    term: object

    def variables(self) -> set:
        return set(term_vars(self.term))

    def __str__(self) -> str:
        return f"(non {self.term})"


@dataclass(frozen=True)
class Unq:
    term: object

    def variables(self) -> set:
        return set(term_vars(self.term))

    def __str__(self) -> str:
        return f"(unq {self.term})"


@dataclass(frozen=True)
class Col:
    left: str
    right: str

    def variables(self) -> set:
        return {self.left, self.right}

    def __str__(self) -> str:
        return f"(col {self.left} {self.right})"


@dataclass(frozen=True)
class Preceq:
    left: str
    right: str

    def variables(self) -> set:
        return {self.left, self.right}

    def __str__(self) -> str:
        return f"(prec {self.left} {self.right})"


@dataclass(frozen=True)
class Eq:
    left: object
    right: object

    def variables(self) -> set:
        return set(term_vars(self.left)) | set(term_vars(self.right))

    def __str__(self) -> str:
        return f"(= {self.left} {self.right})"


@dataclass(frozen=True)
class Falsum:
    def variables(self) -> set:
        return set()

    def __str__(self) -> str:
        return "(false)"


def listener_pred(node: str, term) -> RolePred:
    return RolePred(LISTENER, 1, node, ((LISTENER.params[0], term),))


@dataclass(frozen=True)
class SecurityClaim:
    conjuncts: tuple

    def variables(self) -> set:
        out = set()
        for c in self.conjuncts:
            out |= c.variables()
        return out

    def role_preds(self) -> list:
        return [c for c in self.conjuncts if isinstance(c, RolePred)]


@dataclass(frozen=True)
class Disjunct:
    variables: tuple  # ((name, sort), ...)
    conjuncts: tuple


@dataclass(frozen=True)
class SecurityGoal:
    protocol: str
    universal_vars: tuple  # ((name, sort), ...)
    hypothesis: SecurityClaim
    conclusion: tuple  # of Disjunct; empty means false
    equations: tuple = ()  # (lhs var, rhs term) eliminated from the hypothesis

    @property
    def existential_vars(self) -> tuple:
        out = []
        for d in self.conclusion:
            out.extend(d.variables)
        return tuple(out)


class GoalError(ParseError):
    pass


# ---------------------------------------------------------------- parsing

_ATOM_SORTS = {s.value for s in Sort}


class _GoalParser:
    def __init__(self, protocol: Protocol, source: str):
        self.protocol = protocol
        self.source = source

    def fail(self, msg, form=None):
        line, col = getattr(form, "line", 0), getattr(form, "col", 0)
        raise GoalError(msg, line, col, self.source)

    def declare(self, form, scope: dict) -> list:
        out = []
        for sym, sort in parse_vars(form, self.source, allow_node=True):
            if sym.name in scope:
                self.fail(f"variable {sym.name} declared twice", sym)
            scope[sym.name] = sort
            out.append((sym.name, sort))
        return out

    def term(self, form, scope):
        if isinstance(form, Symbol):
            if form.name not in scope:
                self.fail(f"undeclared variable {form.name}", form)
            if scope[form.name] == "node":
                self.fail(f"node variable {form.name} used as a message", form)
            return Var(form.name)
        if isinstance(form, SList) and form.head in ("sk", "pk", "inv") and len(form) == 2:
            return KeyApp(form.head, self.term(form[1], scope))
        self.fail(f"malformed term {form}", form)

    def term_sort(self, t, scope, form) -> str:
        if isinstance(t, Var):
            return scope[t.name]
        inner = self.term_sort(t.arg, scope, form)
        if t.fn in ("sk", "pk"):
            if inner != Sort.NAME.value:
                self.fail(f"{t.fn} expects a name, got {t.arg} of sort {inner}", form)
            return Sort.AKEY.value
        if inner not in (Sort.AKEY.value, Sort.SKEY.value, "mesg"):
            self.fail(f"inv expects a key, got {t.arg} of sort {inner}", form)
        return inner

    def node_var(self, form, scope) -> str:
        if not isinstance(form, Symbol) or form.name not in scope:
            self.fail(f"undeclared node variable {form}", form)
        if scope[form.name] != "node":
            self.fail(f"{form.name} is not a node variable", form)
        return form.name

    def atomic(self, form, scope):
        if not isinstance(form, SList) or form.head is None:
            self.fail(f"malformed atomic formula {form}", form)
        op, args = form.head, form.items[1:]
        if op == "p":
            return self.role_pred(form, scope)
        if op == "lsn":
            if len(args) != 2:
                self.fail("lsn expects a node variable and a term", form)
            return listener_pred(self.node_var(args[0], scope), self.term(args[1], scope))
        if op in ("non", "unq"):
            if len(args) != 1:
                self.fail(f"{op} expects one term", form)
            t = self.term(args[0], scope)
            s = self.term_sort(t, scope, form)
            if s == "mesg":
                self.fail(f"{op} needs an atom-sorted argument, {t} is mesg", form)
            return Non(t) if op == "non" else Unq(t)
        if op in ("col", "prec"):
            if len(args) != 2:
                self.fail(f"{op} expects two node variables", form)
            a, b = self.node_var(args[0], scope), self.node_var(args[1], scope)
            return Col(a, b) if op == "col" else Preceq(a, b)
        if op == "=":
            if len(args) != 2:
                self.fail("= expects two terms", form)
            return Eq(self.term(args[0], scope), self.term(args[1], scope))
        if op == "false":
            return Falsum()
        self.fail(f"unknown predicate {op}", form)

    def role_pred(self, form, scope) -> RolePred:
        args = form.items[1:]
        if len(args) < 3 or not isinstance(args[0], String) or not isinstance(args[1], Number):
            self.fail('role predicate syntax is (p "<role>" <index> <node> (<param> <term>)*)', form)
        try:
            role = self.protocol.role(args[0].value)
        except KeyError:
            self.fail(f"unknown role {args[0].value}", args[0])
        if role is LISTENER:
            self.fail("use (lsn <node> <term>) for the listener", form)
        index = args[1].value
        if not 1 <= index <= len(role):
            self.fail(f"index {index} out of range for role {role.name}", args[1])
        node = self.node_var(args[2], scope)
        expected = role.params_upto(index)
        given = {}
        for pf in args[3:]:
            if not isinstance(pf, SList) or len(pf) != 2 or not isinstance(pf[0], Symbol):
                self.fail("role arguments are (<param> <term>)", pf)
            pname = pf[0].name
            try:
                param = role.param(pname)
            except KeyError:
                self.fail(f"role {role.name} has no parameter {pname}", pf[0])
            if param not in expected:
                self.fail(f"parameter {pname} does not occur in the first {index} "
                          f"event(s) of role {role.name}", pf[0])
            if param in given:
                self.fail(f"parameter {pname} given twice", pf[0])
            t = self.term(pf[1], scope)
            want = role.param_sort(param)
            got = self.term_sort(t, scope, pf)
            if want != "mesg" and got != want:
                self.fail(f"parameter {pname} has sort {want} but {t} has sort {got}", pf)
            given[param] = t
        missing = [p.ident for p in expected if p not in given]
        if missing:
            self.fail(f"role predicate {role.name}{index} lacks parameter(s) {', '.join(missing)}", form)
        return RolePred(role, index, node, tuple((p, given[p]) for p in expected))

    def conjunction(self, form, scope) -> list:
        if isinstance(form, SList) and form.head == "and":
            return [self.atomic(f, scope) for f in form.items[1:]]
        return [self.atomic(form, scope)]

    def exists(self, form, scope) -> Disjunct:
        if not isinstance(form, SList) or form.head != "exists" or len(form) != 3:
            self.fail("expected (exists ((<var> <sort>)+) (and <atomic>+))", form)
        inner = dict(scope)
        decls = self.declare(form[1], inner)
        overlap = [n for n, _ in decls if n in scope]
        if overlap:
            self.fail(f"existential variable(s) {', '.join(overlap)} also universally bound", form[1])
        conj = self.conjunction(form[2], inner)
        anchored = set()
        for c in conj:
            if isinstance(c, RolePred):
                anchored |= c.variables()
        for n, _ in decls:
            if n not in anchored:
                self.fail(f"existential variable {n} is not an argument of any role predicate", form)
        return Disjunct(tuple(decls), tuple(conj))

    def conclusion(self, form, scope) -> tuple:
        if isinstance(form, SList) and form.head == "false" and len(form) == 1:
            return ()
        if isinstance(form, SList) and form.head == "or":
            return tuple(d for f in form.items[1:] for d in self.conclusion(f, scope))
        if isinstance(form, SList) and form.head == "exists":
            return (self.exists(form, scope),)
        return (Disjunct((), tuple(self.conjunction(form, scope))),)

    def goal(self, form) -> SecurityGoal:
        if not isinstance(form, SList) or form.head != "defgoal" or len(form) != 3 \
                or not isinstance(form[1], Symbol):
            self.fail("expected (defgoal <protocol> (forall ...))", form)
        if form[1].name != self.protocol.name:
            self.fail(f"goal is for protocol {form[1].name}, not {self.protocol.name}", form[1])
        body = form[2]
        if not isinstance(body, SList) or body.head != "forall" or len(body) != 3:
            self.fail("expected (forall ((<var> <sort>)+) (implies ...))", body)
        scope: dict = {}
        universal = self.declare(body[1], scope)
        imp = body[2]
        if not isinstance(imp, SList) or imp.head != "implies" or len(imp) != 3:
            self.fail("expected (implies (and <atomic>+) <conclusion>)", imp)
        conjuncts = self.conjunction(imp[1], scope)
        if any(isinstance(c, Falsum) for c in conjuncts):
            self.fail("false is not allowed in a hypothesis", imp[1])
        check_claim(conjuncts, self.fail, imp[1])
        hyp_vars = set()
        for c in conjuncts:
            hyp_vars |= c.variables()
        unused = [n for n, _ in universal if n not in hyp_vars]
        if unused:
            self.fail(f"universal variable(s) {', '.join(unused)} do not occur in the hypothesis", body[1])
        conjuncts, equations = eliminate_equations(conjuncts, self.fail, imp[1])
        conclusion = self.conclusion(imp[2], scope)
        return SecurityGoal(self.protocol.name, tuple(universal), SecurityClaim(tuple(conjuncts)),
                            conclusion, tuple(equations))


def check_claim(conjuncts, fail=None, form=None) -> None:
    """Enforce the two syntactic restrictions on security claims."""
    def _fail(msg):
        if fail is None:
            raise GoalError(msg)
        fail(msg, form)

    seen = {}
    for c in conjuncts:
        if isinstance(c, RolePred):
            if c.node in seen:
                _fail(f"claim clause (a) violated: role predicates {seen[c.node]} and {c} "
                      f"share node variable {c.node}")
            seen[c.node] = c
    anchored = set()
    for c in conjuncts:
        if isinstance(c, RolePred):
            anchored |= c.variables()
    for c in conjuncts:
        if isinstance(c, RolePred):
            continue
        loose = sorted(v for v in c.variables() if v not in anchored)
        if loose:
            _fail(f"claim clause (b) violated: {', '.join(loose)} in {c} "
                  f"is not an argument of any role predicate")


def eliminate_equations(conjuncts, fail, form):
    """Replace each ``(= x t)`` by substituting ``t`` for ``x`` in later conjuncts."""
    out, equations = [], []
    pending = list(conjuncts)
    while pending:
        c = pending.pop(0)
        if not isinstance(c, Eq):
            out.append(c)
            continue
        if not isinstance(c.left, Var):
            fail(f"left side of {c} must be a variable", form)
        x, t = c.left.name, c.right
        if x in set(term_vars(t)):
            if t == c.left:
                continue
            fail(f"equation {c} is cyclic", form)
        out = [_subst_formula(f, x, t) for f in out]
        pending = [_subst_formula(f, x, t) for f in pending]
        equations = [(lhs, substitute_term(rhs, x, t)) for lhs, rhs in equations]
        equations.append((x, t))
    return out, equations


def _subst_formula(f, x, t):
    if isinstance(f, RolePred):
        return RolePred(f.role, f.index, f.node, tuple((p, substitute_term(a, x, t)) for p, a in f.args))
    if isinstance(f, Non):
        return Non(substitute_term(f.term, x, t))
    if isinstance(f, Unq):
        return Unq(substitute_term(f.term, x, t))
    if isinstance(f, Eq):
        return Eq(substitute_term(f.left, x, t), substitute_term(f.right, x, t))
    return f


def parse_goal(text: str, protocol: Protocol, source: str = "<input>") -> SecurityGoal:
    forms = read_all(text, source)
    if len(forms) != 1:
        raise GoalError("expected exactly one defgoal form", 1, 1, source)
    parser = _GoalParser(protocol, source)
    g = parser.goal(forms[0])
    # Node-variable equations would let two role predicates share a node.
    for x, t in g.equations:
        if dict(g.universal_vars).get(x) == "node":
            raise GoalError(f"equations between node variables are not supported ({x})", 0, 0, source)
    return g


def load_goal(path, protocol: Protocol) -> SecurityGoal:
    with open(path, encoding="utf-8") as fh:
        return parse_goal(fh.read(), protocol, str(path))


# ----------------------------------------------------------- satisfaction

def satisfies_atomic(sk: Preskeleton, sigma: dict, f) -> bool:
    if isinstance(f, Falsum):
        return False
    for v in f.variables():
        if v not in sigma:
            return False
    if isinstance(f, Eq):
        a, b = evaluate(f.left, sigma), evaluate(f.right, sigma)
        return a is not None and a == b
    if isinstance(f, Non):
        v = evaluate(f.term, sigma)
        return v is not None and v in sk.non
    if isinstance(f, Unq):
        v = evaluate(f.term, sigma)
        return v is not None and v in sk.unique
    if isinstance(f, (Col, Preceq)):
        m, n = sigma[f.left], sigma[f.right]
        if not (isinstance(m, Node) and isinstance(n, Node) and sk.has_node(m) and sk.has_node(n)):
            return False
        if isinstance(f, Col):
            return m.strand == n.strand
        return sk.preceq(m, n)
    if isinstance(f, RolePred):
        node = sigma[f.node]
        if not isinstance(node, Node) or not sk.has_node(node) or node.pos != f.index:
            return False
        strand = sk.strands[node.strand]
        alpha = instance_of(strand.events[:f.index], f.role, f.index)
        if alpha is None:
            return False
        for p, t in f.args:
            v = evaluate(t, sigma)
            if v is None or alpha[p] != v:
                return False
        return True
    raise TypeError(f"not an atomic formula: {f!r}")


def satisfies_claim(sk: Preskeleton, sigma: dict, claim) -> bool:
    conjuncts = claim.conjuncts if isinstance(claim, SecurityClaim) else claim
    return all(satisfies_atomic(sk, sigma, c) for c in conjuncts)


def parameter_closure(sk: Preskeleton) -> set:
    vals = set(sk.parameter_values())
    vals |= set(sk.non) | set(sk.unique)
    return vals


def witnesses(sk: Preskeleton, sigma: dict, conjuncts) -> Iterator[dict]:
    """Extensions of ``sigma`` satisfying every conjunct."""
    ordered = sorted(conjuncts, key=lambda c: not isinstance(c, RolePred))
    domain = None

    def rec(k: int, s: dict):
        nonlocal domain
        if k == len(ordered):
            yield s
            return
        c = ordered[k]
        if isinstance(c, RolePred):
            if c.node in s:
                candidates = [s[c.node]] if sk.has_node(s[c.node]) else []
            else:
                candidates = sk.nodes
            for node in candidates:
                if node.pos != c.index:
                    continue
                strand = sk.strands[node.strand]
                alpha = instance_of(strand.events[:c.index], c.role, c.index)
                if alpha is None:
                    continue
                s2 = dict(s)
                s2[c.node] = node
                if all(_bind_term(t, alpha[p], s2) for p, t in c.args):
                    yield from rec(k + 1, s2)
            return
        free = sorted(v for v in c.variables() if v not in s)
        if free:
            if domain is None:
                domain = list(sk.nodes) + sorted(parameter_closure(sk), key=str)
            v = free[0]
            for val in domain:
                s2 = dict(s)
                s2[v] = val
                yield from rec(k, s2)
            return
        if satisfies_atomic(sk, s, c):
            yield from rec(k + 1, s)

    yield from rec(0, dict(sigma))


def _bind_term(t, value, s: dict) -> bool:
    """Extend ``s`` so that goal term ``t`` evaluates to ``value``."""
    if isinstance(t, Var):
        cur = s.get(t.name)
        if cur is None:
            s[t.name] = value
            return True
        return cur == value
    if t.fn == "inv":
        return _bind_term(t.arg, inverse(value), s)
    wanted = SigKey if t.fn == "sk" else PubKey
    if not isinstance(value, wanted):
        return False
    return _bind_term(t.arg, value.owner, s)


def satisfies_disjunct(sk: Preskeleton, sigma: dict, d: Disjunct) -> bool:
    return next(witnesses(sk, sigma, d.conjuncts), None) is not None


def satisfies_conclusion(sk: Preskeleton, sigma: dict, goal: SecurityGoal) -> bool:
    return any(satisfies_disjunct(sk, sigma, d) for d in goal.conclusion)


def find_witness(sk: Preskeleton, sigma: dict, goal: SecurityGoal) -> Optional[dict]:
    for d in goal.conclusion:
        w = next(witnesses(sk, sigma, d.conjuncts), None)
        if w is not None:
            return w
    return None
