"""The eight acceptance criteria, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""
import random
import time

from skeletal.charskel import characteristic_skeleton
from skeletal.protocol import LISTENER, instantiate
from skeletal.search import VerdictKind, check_goal, shapes
from skeletal.skeleton import (
    SKELETON, Homomorphism, check_homomorphism, find_homomorphisms, isomorphic, validate,
)
from skeletal.terms import Base, Enc, Indet, InvKey, Pair, PubKey, SigKey, Sort, Substitution, apply, unify

from conftest import A, A2, A3, A4, ACCEPTANCE, BLANCHET, REFERENCE, FIXED, GOALS, goal
from oracles import (
    dy_derivable, enumerate_unifiers, factors, is_atomic, leaves, preservation_violations, subterms,
)
from strategies import NAMES, NONCES, SKEYS, TEXTS, random_atom, random_message

PROTOCOLS = {"blanchet": BLANCHET, "fixed": FIXED}


def record(n, ok, text):
    ACCEPTANCE[n] = (ok, text)
    assert ok, text


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def binding(strand):
    return {p.ident: v for p, v in strand.binding.items()}


# ------------------------------------------------------------ criteria 1-4

def test_criterion_1_initiator_authentication():
    v, secs = timed(lambda: check_goal(BLANCHET, goal("goal-a-auth")))
    ok = v.kind is VerdictKind.ACHIEVED and len(v.shapes) == 1 and secs < 10
    if ok:
        _, sk = v.shapes[0]
        init = [s for s in sk.strands if s.role.name == "init"]
        resp = [s for s in sk.strands if s.role.name == "resp" and s.length == 2]
        ok = len(init) == 1 and len(resp) == 1 and binding(init[0]) == binding(resp[0])
    record(1, ok, f"initiator authentication: {v.kind.value}, {len(v.shapes)} shape, "
                  f"responder parameters match, {secs:.2f}s (< 10s)")


def test_criterion_2_initiator_secrecy():
    v, secs = timed(lambda: check_goal(BLANCHET, goal("goal-a-secrecy")))
    cs = v.cs.skeleton
    same_as_reference = isomorphic(cs, A2.with_sets(non=A2.non | {SigKey(A)}))
    ok = (v.kind is VerdictKind.ACHIEVED and len(v.shapes) == 0 and v.exhausted
          and same_as_reference and secs < 10)
    record(2, ok, f"initiator secrecy: {v.kind.value}, {len(v.shapes)} shapes, "
                  f"exhausted={v.exhausted}, {secs:.2f}s (< 10s)")


def test_criterion_3_responder_weakness():
    def run():
        return shapes(A3, BLANCHET), check_goal(BLANCHET, goal("goal-b-auth"))
    (res, v), secs = timed(run)
    ok = len(res.shapes) == 1 and isomorphic(res.shapes[0][1], A4)
    if ok:
        sk = res.shapes[0][1]
        init = [s for s in sk.strands if s.role.name == "init"][0]
        resp = [s for s in sk.strands if s.role.name == "resp"][0]
        ok = binding(init)["b"] != binding(resp)["b"]
    ok = ok and v.kind is VerdictKind.COUNTEREXAMPLE and secs < 30
    record(3, ok, f"responder weakness: {len(res.shapes)} shape isomorphic to A4 with a third name, "
                  f"goal {v.kind.value}, {secs:.2f}s (< 30s)")


def test_criterion_4_corrected_protocol():
    def run():
        return [check_goal(FIXED, goal(n, FIXED)) for n in ("goal-b-auth", "goal-b-secrecy")]
    vs, secs = timed(run)
    ok = all(v.kind is VerdictKind.ACHIEVED and not v.vacuous for v in vs) and secs < 30
    record(4, ok, f"corrected protocol: responder authentication {vs[0].kind.value}, "
                  f"responder secrecy {vs[1].kind.value}, {secs:.2f}s (< 30s)")


# --------------------------------------------------------------- criterion 5

def _fresh_like(v, i):
    return Base(f"{v.ident.upper()}{i}", v.sort)


def random_image(cs, protocol, rng):
    """A random target with a verified homomorphism from ``cs``, or None."""
    variables = sorted((v for v in cs.variables if isinstance(v, Base)), key=repr)
    m = {}
    for i, v in enumerate(variables):
        r = rng.random()
        if r < 0.4:
            m[v] = _fresh_like(v, i)
        elif r < 0.6:
            peers = [w for w in variables if w.sort is v.sort]
            m[v] = rng.choice(peers)
    subst = Substitution(m)
    img = cs.substitute(subst)
    pool = sorted({apply(subst, v) for v in variables} | {_fresh_like(v, 9) for v in variables}, key=repr)
    by_sort = {s: [v for v in pool if v.sort is s] for s in Sort}
    for _ in range(rng.randrange(3)):
        role = rng.choice(protocol.roles + (LISTENER,))
        length = rng.randint(1, len(role))
        vals = {}
        for p in role.params_upto(length):
            if isinstance(p, Indet):
                vals[p] = rng.choice(pool)
            else:
                choices = by_sort.get(p.sort) or [p]
                vals[p] = rng.choice(choices)
        img = img.add_strand(instantiate(role, vals, length))
    nodes = img.nodes
    for _ in range(rng.randrange(4)):
        a, b = rng.choice(nodes), rng.choice(nodes)
        if a.strand != b.strand and not img.preceq(b, a):
            img = img.add_edge(a, b)
    if rng.random() < 0.3:
        names = by_sort.get(Sort.NAME) or []
        if names:
            extra = SigKey(rng.choice(names))
            if not img.originates(extra):
                img = img.with_sets(non=img.non | {extra})
    h = Homomorphism(cs, img, tuple(range(len(cs.strands))), subst)
    if validate(img) != SKELETON or not check_homomorphism(h, cs, img):
        return None
    return img, h


def _claim_vars(g):
    out = set()
    for c in g.hypothesis.conjuncts:
        out |= c.variables()
    return out


def characteristic_violations(g, protocol, rng, wanted=20, attempts=600):
    cs = characteristic_skeleton(g)
    fv = _claim_vars(g)
    pairs = bad = 0
    for _ in range(attempts):
        if pairs >= wanted:
            break
        got = random_image(cs.skeleton, protocol, rng)
        if got is None:
            continue
        img, h0 = got
        sigma = {v: h0.assignment(cs.sigma)[v] for v in fv}
        hits = []
        for h in find_homomorphisms(cs.skeleton, img):
            if all(h.assignment(cs.sigma).get(v) == sigma[v] for v in fv):
                if not any(h.equivalent(k) for k in hits):
                    hits.append(h)
        pairs += 1
        bad += len(hits) != 1
    return pairs, bad


def test_criterion_5_characteristic_property():
    rng = random.Random(5)
    report = []
    ok = True
    for pname, protocol in PROTOCOLS.items():
        for name in GOALS:
            pairs, bad = characteristic_violations(goal(name, protocol), protocol, rng)
            report.append(pairs)
            ok = ok and pairs >= 20 and bad == 0
    record(5, ok, f"characteristic property: {len(report)} claims, "
                  f"min {min(report)} verified images per claim, 0 ambiguous" if ok else
                  f"characteristic property: images per claim {report}")


# --------------------------------------------------------------- criterion 6

def corpus(protocol):
    out = list(REFERENCE.values()) if protocol is BLANCHET else []
    for name in GOALS:
        cs = characteristic_skeleton(goal(name, protocol))
        out.append(cs.skeleton)
        out.extend(sk for _, sk in shapes(cs.skeleton, protocol).shapes)
    unique = []
    for sk in out:
        if sk not in unique:
            unique.append(sk)
    return unique


def test_criterion_6_formula_preservation():
    total = checked = 0
    violations = []
    for protocol in PROTOCOLS.values():
        sks = corpus(protocol)
        total += len(sks)
        bad, n = preservation_violations(sks, protocol)
        violations += bad
        checked += n
    record(6, not violations and checked > 0,
           f"formula preservation: {len(violations)} violations over {total} skeletons, "
           f"{checked} formula/homomorphism checks")


# --------------------------------------------------------------- criterion 7

def generalize(t, rng, tag, sub, p=0.3, message=True):
    """Replace random subterms of ``t`` by fresh variables, recording them in ``sub``.

    Indeterminates only replace subterms in message positions; key owners
    and inverted keys are generalized by same-sorted atoms.
    """
    if message and rng.random() < p * 0.5 and not isinstance(t, Indet):
        v = Indet(f"{tag}{len(sub)}")
        sub[v] = t
        return v
    if isinstance(t, Base):
        if rng.random() < p:
            v = Base(f"{tag}{len(sub)}", t.sort)
            sub[v] = t
            return v
        return t
    if isinstance(t, (SigKey, PubKey)):
        return type(t)(generalize(t.owner, rng, tag, sub, p, message=False))
    if isinstance(t, InvKey):
        inner = generalize(t.key, rng, tag, sub, p, message=False) if not isinstance(t.key, Base) else t.key
        return InvKey(inner)
    if isinstance(t, Enc):
        return Enc(generalize(t.plain, rng, tag, sub, p), generalize(t.key, rng, tag, sub, p))
    if isinstance(t, Pair):
        return Pair(t.tag, generalize(t.left, rng, tag, sub, p), generalize(t.right, rng, tag, sub, p))
    return t


def unifiable_pair(rng):
    t = random_message(rng, 4)
    s1, s2 = {}, {}
    return t, generalize(t, rng, "u", s1), generalize(t, rng, "w", s2), {**s1, **s2}


SAME_SORT = {Sort.NAME: NAMES, Sort.TEXT: TEXTS, Sort.NONCE: NONCES, Sort.SKEY: SKEYS}


def _pool(v, known, t, rng):
    out = {known.get(v, v), v}
    if isinstance(v, Indet):
        out.add(rng.choice(sorted(subterms(t), key=repr)))
    elif v.sort in SAME_SORT:
        out.add(rng.choice(SAME_SORT[v.sort]))
    return sorted(out, key=repr)


def test_criterion_7_unification_laws():
    rng = random.Random(7)
    sound_bad = general_bad = general_pairs = unifiers_seen = 0
    for i in range(1000):
        t, u1, u2, known = unifiable_pair(rng)
        beta = unify(u1, u2)
        if beta is None or apply(beta, u1) != apply(beta, u2):
            sound_bad += 1
            continue
        if general_pairs >= 200:
            continue
        variables = sorted(set(leaves(u1)) | set(leaves(u2)), key=repr)
        if len(variables) > 6:
            continue
        pools = {v: _pool(v, known, t, rng) for v in variables}
        gammas = enumerate_unifiers(u1, u2, pools)
        general_pairs += 1
        unifiers_seen += len(gammas)
        b = dict(beta.items())
        general_bad += sum(not factors(g, b, variables) for g in gammas)
    ok = sound_bad == 0 and general_bad == 0 and general_pairs >= 200
    record(7, ok, f"unification laws: 1000 unifiable pairs, {sound_bad} soundness violations; "
                  f"{general_pairs} generality pairs, {unifiers_seen} enumerated unifiers, "
                  f"{general_bad} not factoring through the MGU")


# --------------------------------------------------------------- criterion 8

def random_context(rng):
    available = [random_message(rng, 3) for _ in range(rng.randint(0, 4))]
    if available and rng.random() < 0.5:
        target = rng.choice(sorted(subterms(rng.choice(available)), key=repr))
    else:
        target = random_message(rng, 3)
    # withhold some atoms of the target so both outcomes are common
    target_atoms = sorted((u for u in subterms(target) if is_atomic(u)), key=repr)
    non = {random_atom(rng) for _ in range(rng.randrange(3))}
    uniq = {a for a in target_atoms if rng.random() < 0.5}
    return available, target, non, uniq


def test_criterion_8_dolev_yao_oracle():
    from skeletal.adversary import AdversaryContext, derivable
    rng = random.Random(8)
    disagree = positive = 0
    for _ in range(500):
        available, target, non, uniq = random_context(rng)
        got = derivable(AdversaryContext(frozenset(available), frozenset(non), frozenset(uniq)), target)
        want = dy_derivable(available, target, non, uniq)
        disagree += got != want
        positive += want
    record(8, disagree == 0,
           f"Dolev-Yao oracle: 500 contexts ({positive} derivable), {disagree} disagreements")


if __name__ == "__main__":
    import subprocess
    import sys
    raise SystemExit(subprocess.call([sys.executable, "-m", "pytest", __file__, "-q"]))
