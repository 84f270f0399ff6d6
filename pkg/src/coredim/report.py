"""Text, JSON and DOT renderings of every computation.

Each ``*_report`` function returns ``(result, text)``: a JSON-ready dict
with exact values only, and a human-readable table.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .dimension import (
    ASSUMPTIONS,
    beta_matrix,
    inclusion_matrix,
    k0_finite,
    limit_report,
    trace_pairing,
)
from .exact import format_fraction, matrix_to_json
from .fiber import build_fiber, fiber_decomposition
from .mapspec import MapSpec, PQOrbit, level_branch_counts, pq_orbits, singular_points
from .reference import k1_metadata, matrix_in_basis, reference_basis, reference_inclusion, reference_labels


def meta(spec: MapSpec, **extra) -> dict:
    out = {"spec": spec.name, **{k: v for k, v in extra.items() if v is not None}}
    out["assumptions"] = dict(ASSUMPTIONS)
    return out


def approx(x: Fraction) -> str:
    return f"{float(x):.6g}"


def _frac_row(row: Sequence[Fraction], with_approx: bool) -> str:
    cells = [format_fraction(x) + (f" (~{approx(x)})" if with_approx and Fraction(x).denominator != 1 else "")
             for x in row]
    return "  ".join(cells)


def _int_table(M, row_labels=None, col_labels=None) -> str:
    rows = [[str(x) for x in r] for r in M.tolist()]
    width = max([len(c) for r in rows for c in r] + [len(c) for c in (col_labels or [])] + [1])
    lw = max([len(x) for x in (row_labels or [])] + [0])
    lines = []
    if col_labels:
        lines.append(" " * (lw + 2 if lw else 0) + " ".join(c.rjust(width) for c in col_labels))
    for i, r in enumerate(rows):
        head = f"{row_labels[i].ljust(lw)}  " if row_labels else ""
        lines.append(head + " ".join(c.rjust(width) for c in r))
    return "\n".join(lines)


# -- ifs-spec ---------------------------------------------------------


def validate_report(spec: MapSpec) -> tuple[dict, str]:
    result = {
        "branch_count": spec.N,
        "points": list(spec.points),
        "h": {y: spec.h[y] for y in spec.points},
        "branched": [
            {"point": b, "multiplicity": spec.multiplicity[b], "entry_indices": list(spec.entry_indices[b])}
            for b in spec.branched
        ],
        "branch_values": list(spec.branch_values),
        "postcritical": list(spec.postcritical),
    }
    lines = [
        f"spec {spec.name}: valid, N = {spec.N}",
        "h: " + ", ".join(f"{y} -> {spec.h[y]}" for y in spec.points),
        "branched: " + (", ".join(
            f"{b} (e={spec.multiplicity[b]}, J={list(spec.entry_indices[b])})" for b in spec.branched) or "none"),
        "branch values: " + (", ".join(spec.branch_values) or "none"),
        "postcritical: " + (", ".join(spec.postcritical) or "none"),
    ]
    return result, "\n".join(lines)


def orbit_families(spec: MapSpec, point: str, depth: int, q: int) -> list[PQOrbit]:
    return [o for p in range(1, depth + 1) for o in pq_orbits(spec, point, p, q)]


def _orbit_line(o: PQOrbit) -> str:
    parts = [o.path[0]]
    for j, x in zip(o.prefix_word, o.path[1:-1]):
        parts.append(f"-γ{j}-> {x}")
    parts.append("=" + ",".join(f"γ{j}" for j in o.entry_indices) + "=> " + o.base_point)
    tail = f"  then {o.branch_count}^{o.q} continuations" if o.q else ""
    return " ".join(parts) + tail + f"  [p={o.p}, q={o.q}, orbits={o.count}]"


def orbits_report(spec: MapSpec, point: str, depth: int, q: int) -> tuple[dict, str]:
    fams = orbit_families(spec, point, depth, q)
    result = {
        "start": point,
        "depth": depth,
        "q": q,
        "families": [
            {"base_point": o.base_point, "p": o.p, "q": o.q, "path": list(o.path),
             "prefix_word": list(o.prefix_word), "entry_indices": list(o.entry_indices),
             "count": o.count}
            for o in fams
        ],
    }
    text = "\n".join(_orbit_line(o) for o in fams) or f"no branched orbits from {point} within depth {depth}"
    return result, text


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_orbit_dot(orbits: Sequence[PQOrbit]) -> str:
    """Graphviz digraph of orbit pictures: plain arrows for single steps,
    a doubled heavy arrow for the collapsing entry into the branched point,
    and a note for the ``N^q`` free continuations."""
    if not orbits:
        return "digraph orbits {\n}\n"
    lines = ["digraph orbits {", "  rankdir=LR;", "  node [shape=circle];"]
    for f, o in enumerate(orbits):
        ids = [f"f{f}_{k}" for k in range(len(o.path))]
        for nid, label in zip(ids, o.path):
            lines.append(f"  {nid} [label={_dot_quote(label)}];")
        for k, j in enumerate(o.prefix_word):
            lines.append(f"  {ids[k]} -> {ids[k + 1]} [label={_dot_quote(f'γ{j}')}];")
        entry = ",".join(f"γ{j}" for j in o.entry_indices)
        lines.append(
            f"  {ids[-2]} -> {ids[-1]} [label={_dot_quote(entry)}, "
            f'penwidth={len(o.entry_indices)}, color="black:invis:black"];'
        )
        if o.q:
            note = f"f{f}_fan"
            lines.append(
                f"  {note} [shape=plaintext, label={_dot_quote(f'{o.branch_count}^{o.q} = {o.branch_count**o.q} continuations')}];"
            )
            lines.append(f"  {ids[-1]} -> {note} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def branch_sets_report(spec: MapSpec, n: int) -> tuple[dict, str]:
    bs = level_branch_counts(spec, n)
    result = {
        "level": n,
        "branched_count": bs.count,
        "count_note": "under genericity",
        "branch_values": list(bs.singular),
        "words": [{"word": list(w), "base": b} for w, b in bs.words],
    }
    text = "\n".join([
        f"level {n}: |B| = {bs.count} (under genericity)",
        "C = {" + ", ".join(bs.singular) + "}",
    ])
    return result, text


# -- fibers -----------------------------------------------------------


def fibers_report(spec: MapSpec, n: int, point: Optional[str], with_matrices: bool,
                  guard: Optional[int]) -> tuple[dict, str]:
    if point is None:
        points = list(singular_points(spec, n)) + [None]
    else:
        points = [None if point == "generic" and point not in spec.h else point]
    entries, lines = [], []
    for P in points:
        dec = fiber_decomposition(spec, P, n)
        item = dec.to_json()
        if with_matrices:
            fib = build_fiber(spec, P, n, guard)
            item["Q"] = matrix_to_json(fib.Q)
            item["central"] = [matrix_to_json(z) for z in fib.centrals]
        entries.append(item)
        name = "generic" if P is None else P
        lines.append(f"fiber at {name}, level {n}: {dec.summary()}")
        for b in dec.blocks:
            extra = f"  prefix={list(b.prefix)} J={list(b.entry_indices)}" if b.kind == "singular" else ""
            lines.append(f"  {b.tag:<16} M_{b.size:<6} weight {b.weight}{extra}")
    return {"level": n, "fibers": entries}, "\n".join(lines)


# -- dimension --------------------------------------------------------


def k0_report(spec: MapSpec, n: int) -> tuple[dict, str]:
    pres = k0_finite(spec, n)
    result = pres.to_json()
    lines = [f"K0 at level {n}: rank {pres.rank}", "blocks: " + " ".join(pres.labels),
             "lattice basis (rows):", _int_table(pres.basis, col_labels=pres.labels)]
    ref = reference_basis(spec, n)
    if ref is not None:
        from .exact import int_matrix

        labels = reference_labels(spec, n)
        result["reference_basis"] = {"labels": labels, "raw": matrix_to_json(int_matrix(ref))}
        lines += ["hand-written basis (rows):", _int_table(int_matrix(ref), labels, pres.labels)]
    return result, "\n".join(lines)


def embed_report(spec: MapSpec, n: int, guard: Optional[int]) -> tuple[dict, str]:
    inc = inclusion_matrix(spec, n, guard)
    result = {
        "level": n,
        "inclusion": matrix_to_json(inc.matrix),
        "injective": inc.injective,
        "raw_images": [[str(x) for x in r] for r in inc.raw_images],
    }
    lines = [f"inclusion K0(level {n}) -> K0(level {n + 1}) in lattice bases:",
             _int_table(inc.matrix), f"injective: {inc.injective}"]
    ref = reference_inclusion(spec, n)
    if ref is not None:
        result["reference_basis_inclusion"] = matrix_to_json(ref["matrix"])
        result["matches_closed_form"] = ref["matches_closed_form"]
        lines += ["in the hand-written bases:",
                  _int_table(ref["matrix"], ref["labels_codomain"], ref["labels_domain"])]
        if ref["closed_form"] is not None:
            result["closed_form"] = matrix_to_json(ref["closed_form"])
            lines.append(f"matches the classical closed form: {ref['matches_closed_form']}")
            if not ref["matches_closed_form"]:
                lines += ["classical closed form:", _int_table(ref["closed_form"])]
    return result, "\n".join(lines)


def traces_report(spec: MapSpec, n: int, r_max: int, show_approx: bool,
                  guard: Optional[int]) -> tuple[dict, str]:
    tp = trace_pairing(spec, n, r_max, guard=guard)
    result = {"lattice_basis": tp.to_json()}
    lines = [f"trace pairing at level {n} (rows: lattice basis)", "  ".join(tp.labels)]
    lines += [_frac_row(r, show_approx) for r in tp.values.to_fractions()]
    if show_approx:
        result["lattice_basis"]["approx"] = [[approx(x) for x in r] for r in tp.values.to_fractions()]
    ref = reference_basis(spec, n)
    if ref is not None:
        rt = trace_pairing(spec, n, r_max, basis=ref, guard=guard)
        result["reference_basis"] = {**rt.to_json(), "rows": reference_labels(spec, n)}
        lines.append("rows: hand-written basis " + " ".join(reference_labels(spec, n)))
        lines += [_frac_row(r, show_approx) for r in rt.values.to_fractions()]
    return result, "\n".join(lines)


def beta_report(spec: MapSpec, n: int, guard: Optional[int]) -> tuple[dict, str]:
    bm = beta_matrix(spec, n, guard)
    result = {"level": n, "beta": matrix_to_json(bm.matrix)}
    lines = [f"beta: K0(level {n}) -> K0(level {n + 1}) in lattice bases:", _int_table(bm.matrix)]
    ref = matrix_in_basis(spec, n, "beta")
    if ref is not None:
        result["reference_basis_beta"] = matrix_to_json(ref)
        lines += ["in the hand-written bases:",
                  _int_table(ref, reference_labels(spec, n + 1), reference_labels(spec, n))]
    return result, "\n".join(lines)


def limit_report_doc(spec: MapSpec, n_max: int, r_max: int, show_approx: bool,
                     guard: Optional[int]) -> tuple[dict, str]:
    rep = limit_report(spec, n_max, r_max, guard)
    levels = []
    lines = [f"limit report for {spec.name}: levels 0..{n_max}, traces up to r = {r_max}",
             "ranks: " + " ".join(str(r) for r in rep.ranks)]
    for lv in rep.levels:
        item = {
            "level": lv.level,
            "rank": lv.presentation.rank,
            "ambient_blocks": lv.presentation.labels,
            "basis": matrix_to_json(lv.presentation.basis),
            "traces": matrix_to_json(lv.traces.values),
            "phi_independent": lv.phi_independent,
            "phi_in_c_span": lv.phi_in_c_span,
        }
        line = f"level {lv.level}: rank {lv.presentation.rank}, phi independent {lv.phi_independent}"
        if lv.inclusion is not None:
            item["inclusion"] = matrix_to_json(lv.inclusion.matrix)
            item["injective"] = lv.inclusion.injective
            item["beta"] = matrix_to_json(lv.beta.matrix)
            item["trace_invariant"] = lv.trace_invariant
            line += f", inclusion injective {lv.inclusion.injective}, traces invariant {lv.trace_invariant}"
            if lv.reference is not None:
                item["reference_basis_inclusion"] = matrix_to_json(lv.reference["matrix"])
                if lv.reference["matches_closed_form"] is not None:
                    item["matches_closed_form"] = lv.reference["matches_closed_form"]
                    line += f", closed form {lv.reference['matches_closed_form']}"
        if lv.divisibility is not None:
            d = lv.divisibility
            item["divisibility"] = {
                "divisor": d["divisor"],
                "target": [str(x) for x in d["target"]],
                "solvable": d["solvable"],
                "witness": None if d["witness"] is None else [str(x) for x in d["witness"]],
            }
            line += f", {d['divisor']}x = c1 solvable {d['solvable']}"
        levels.append(item)
        lines.append(line)
    cvec = [[format_fraction(x) for x in c] for c in rep.c_vectors]
    lines.append("c-vectors:")
    lines += ["  c%d = (%s)" % (m, _frac_row(c, show_approx).replace("  ", ", ")) for m, c in enumerate(rep.c_vectors)]
    lines.append(f"K1: {rep.k1['statement'] or 'Unknown'}")
    result = {
        "n_max": n_max,
        "r_max": r_max,
        "ranks": rep.ranks,
        "all_injective": rep.all_injective,
        "all_trace_invariant": rep.all_trace_invariant,
        "c_vectors": cvec,
        "levels": levels,
        "k1": rep.k1,
    }
    return result, "\n".join(lines)


def k1_report(spec: MapSpec) -> dict:
    return k1_metadata(spec)
