"""Text, JSON and DOT views of skeletons and verdicts."""
from __future__ import annotations

import json
from importlib import resources

from .skeleton import Preskeleton
from .terms import render


def _binding(strand) -> dict:
    return {p.ident: render(strand.binding[p]) for p in strand.role.params_upto(strand.length)}


def _edges(sk: Preskeleton) -> list:
    return sorted([[a.strand, a.pos], [b.strand, b.pos]] for a, b in sk.order)


def skeleton_record(sk: Preskeleton) -> dict:
    return {
        "strands": [{"role": s.role.name, "length": s.length, "binding": _binding(s)}
                    for s in sk.strands],
        "order": _edges(sk),
        "non": sorted(render(a) for a in sk.non),
        "unique": sorted(render(a) for a in sk.unique),
    }


def _value(v) -> str:
    if hasattr(v, "strand") and hasattr(v, "pos"):
        return f"{v.strand}:{v.pos}"
    return render(v)


def assignment_record(sigma: dict) -> dict:
    return {k: _value(sigma[k]) for k in sorted(sigma)}


def bounds_record(bounds) -> dict:
    return {"max_added_strands": bounds.max_added_strands,
            "max_fresh_atoms": bounds.max_fresh_atoms,
            "max_states": bounds.max_states}


def shapes_record(result, bounds) -> dict:
    return {
        "shapes": [skeleton_record(sk) for _, sk in result.shapes],
        "bounds": bounds_record(bounds),
        "exhausted": result.exhausted,
    }


def verdict_record(verdict) -> dict:
    out = {"verdict": verdict.kind.value}
    out["shapes"] = [skeleton_record(sk) for _, sk in verdict.shapes]
    if verdict.counterexample is not None:
        h, sk = verdict.counterexample
        out["counterexample"] = skeleton_record(sk)
        out["assignment"] = assignment_record(h.assignment(verdict.cs.sigma))
    if verdict.vacuous:
        out["vacuous"] = {"reason": verdict.cs.reason.value, "conjunct": verdict.cs.index}
    out["bounds"] = bounds_record(verdict.bounds)
    out["exhausted"] = verdict.exhausted
    return out


def cs_record(cs) -> dict:
    if not cs.ok:
        return {"characteristic": None,
                "failure": {"reason": cs.reason.value, "conjunct": cs.index,
                            "formula": str(cs.conjunct), "detail": cs.detail}}
    return {"characteristic": skeleton_record(cs.skeleton),
            "assignment": assignment_record(cs.sigma)}


def to_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def load_schema() -> dict:
    text = resources.files("skeletal").joinpath("verdict.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# ------------------------------------------------------------------ text

def format_skeleton(sk: Preskeleton, name: str = "skeleton") -> str:
    lines = [f"({name}"]
    for i, s in enumerate(sk.strands):
        args = " ".join(f"({k} {v})" for k, v in _binding(s).items())
        lines.append(f"  (strand {i} {s.role.name} {s.length} {args})".rstrip())
    if sk.order:
        edges = " ".join(f"(({a} {p}) ({b} {q}))" for (a, p), (b, q) in _edges(sk))
        lines.append(f"  (precedes {edges})")
    if sk.non:
        lines.append(f"  (non-orig {' '.join(sorted(render(a) for a in sk.non))})")
    if sk.unique:
        lines.append(f"  (uniq-orig {' '.join(sorted(render(a) for a in sk.unique))})")
    lines[-1] += ")"
    return "\n".join(lines)


# ------------------------------------------------------------------- dot

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(sk: Preskeleton, name: str = "skeleton") -> str:
    out = [f"digraph {_quote(name)} {{", "  rankdir=TB;", "  node [shape=box, fontname=monospace];"]
    for i, s in enumerate(sk.strands):
        out.append(f"  subgraph cluster_{i} {{")
        out.append(f"    label={_quote(f'{i}: {s.role.name}')};")
        for p, (d, m) in enumerate(s.events, start=1):
            out.append(f"    n{i}_{p} [label={_quote(d.sign + ' ' + render(m))}];")
        for p in range(1, s.length):
            # a parallel colour list draws strand succession as a double arrow
            out.append(f'    n{i}_{p} -> n{i}_{p + 1} [color="black:invis:black"];')
        out.append("  }")
    for (a, p), (b, q) in _edges(sk):
        out.append(f"  n{a}_{p} -> n{b}_{q} [style=dashed];")
    notes = []
    if sk.non:
        notes.append("non: " + ", ".join(sorted(render(a) for a in sk.non)))
    if sk.unique:
        notes.append("unique: " + ", ".join(sorted(render(a) for a in sk.unique)))
    if notes:
        out.append(f"  label={_quote('; '.join(notes))};")
    out.append("}")
    return "\n".join(out) + "\n"
