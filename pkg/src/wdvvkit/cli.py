"""Command-line front end.

Loads JSON problem files, dispatches the verification, construction, and
simulation commands, and emits machine-readable reports.

Problem files carry expression strings in the tool's polynomial syntax plus
exact rational matrices (entries are ints or strings like "1/60").  Metric
matrices in problem files are always the covariant components; loaders
invert exactly where a contravariant object is needed.

Exit codes: 0 all checks passed, 1 a mathematical check failed, 2 input or
usage error.  Reports are deterministic for identical inputs: keys are
sorted and timings are only included under --timings.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import (
    ConstSymMatrix,
    NotClosedError,
    Poly,
    SingularMatrixError,
)
from .exprlang import ParseError, format_polynomial, parse as parse_expr
from .frobenius import (
    Potential,
    find_unit,
    verify_frobenius_conditions,
    wdvv_residual,
)
from .hamop import (
    FlatHamOp,
    affinors_from_psi,
    check_relations,
    flat_to_general,
    pencil_check,
    structural_flows,
)
from .hierarchy import (
    NotASolutionError,
    build_hierarchy,
    check_eq10,
    check_locality,
    first_density,
    involution_residual_constant_bracket,
    involution_wdvv_integrals,
)
from .hydrosim import (
    BlowUp,
    FieldState,
    Grid1D,
    SimConfig,
    advisory_dt,
    conservation_report,
    functional_value,
    simulate_flow,
)
from .realization import (
    default_initial_frame,
    loop_closure_test,
    sample_grid,
    verify_fundamental_forms,
)
from .submanifold import (
    LaxParams,
    PsiSystem,
    codazzi_check,
    gauss_residual,
    reduce_potential,
    ricci_residual,
    zero_curvature_residual,
)

SCHEMA_VERSION = "1"
TERM_CAP = 200
EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

KINDS = ("potential", "psi_system", "hamop", "embedding", "simulation")


class ProblemError(Exception):
    """Schema or content violation in a problem file, with a JSON pointer."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


# ---------------------------------------------------------------------------
# problem loading


def _fraction(value, ptr: str) -> Fraction:
    if isinstance(value, bool):
        raise ProblemError(ptr, "expected a rational number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ProblemError(ptr, f"not a rational number: {e}")
    raise ProblemError(ptr, f"expected int or rational string, got {type(value).__name__}")


def _matrix(obj, size: int, ptr: str, name: str) -> ConstSymMatrix:
    if not isinstance(obj, list) or len(obj) != size:
        raise ProblemError(ptr, f"{name} must be a {size}x{size} matrix")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != size:
            raise ProblemError(f"{ptr}/{i}", f"{name} row must have {size} entries")
        rows.append([_fraction(v, f"{ptr}/{i}/{j}") for j, v in enumerate(row)])
    try:
        return ConstSymMatrix(rows)
    except SingularMatrixError:
        raise ProblemError(ptr, f"{name} is singular over the rationals")
    except ValueError as e:
        raise ProblemError(ptr, f"{name}: {e}")


def _expression(raw, name: str, n: int) -> Poly:
    ptr = f"/expressions/{name}"
    if not isinstance(raw, dict) or name not in raw:
        raise ProblemError(ptr, "missing expression")
    text = raw[name]
    if not isinstance(text, str):
        raise ProblemError(ptr, "expression must be a string")
    try:
        return parse_expr(text, n)
    except ParseError as e:
        raise ProblemError(ptr, str(e))


def _int_field(raw, key: str, lo: int, hi: int) -> int:
    if key not in raw:
        raise ProblemError(f"/{key}", "missing")
    v = raw[key]
    if not isinstance(v, int) or isinstance(v, bool) or not (lo <= v <= hi):
        raise ProblemError(f"/{key}", f"expected an integer in [{lo}, {hi}]")
    return v


class Problem:
    """A validated problem file: the kind decides which fields are set."""

    def __init__(self, kind: str, path: str, raw: dict):
        self.kind = kind
        self.path = path
        self.raw = raw
        self.potential: Potential | None = None
        self.psi_system: PsiSystem | None = None
        self.hamop: FlatHamOp | None = None
        self.c: Fraction | None = None
        self.base_point = None
        self.flow_index: int | None = None
        self.sim_grid: dict | None = None
        self.sim_init: dict | None = None
        self.dt: float | None = None
        self.t_end: float | None = None


def load_problem(path: str) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ProblemError("", f"cannot read problem file: {e}")
    except json.JSONDecodeError as e:
        raise ProblemError("", f"not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ProblemError("", "problem file must be a JSON object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ProblemError("/kind", f"must be one of {', '.join(KINDS)}")
    n = _int_field(raw, "n", 1, 8)
    if "eta" not in raw:
        raise ProblemError("/eta", "missing")
    eta = _matrix(raw["eta"], n, "/eta", "eta")
    prob = Problem(kind, path, raw)

    exprs = raw.get("expressions", {})
    if kind == "potential":
        prob.potential = Potential(n, eta, _expression(exprs, "phi", n))
    elif kind == "psi_system":
        l = _int_field(raw, "l", 1, 8)
        if "mu" not in raw:
            raise ProblemError("/mu", "missing")
        mu = _matrix(raw["mu"], l, "/mu", "mu")
        psi = [_expression(exprs, f"psi{a + 1}", n) for a in range(l)]
        prob.psi_system = PsiSystem(n=n, l=l, eta=eta, mu=mu, psi=tuple(psi))
    elif kind == "hamop":
        l = _int_field(raw, "l", 1, 8)
        if "mu" not in raw:
            raise ProblemError("/mu", "missing")
        mu = _matrix(raw["mu"], l, "/mu", "mu")
        if "affinors" not in raw or not isinstance(raw["affinors"], list) or len(raw["affinors"]) != l:
            raise ProblemError("/affinors", f"expected a list of {l} matrices of expressions")
        from .algebra import PolyMatrix

        ws = []
        for a, wm in enumerate(raw["affinors"]):
            if not isinstance(wm, list) or len(wm) != n:
                raise ProblemError(f"/affinors/{a}", f"expected an {n}x{n} matrix of expressions")
            entries = []
            for i, row in enumerate(wm):
                if not isinstance(row, list) or len(row) != n:
                    raise ProblemError(f"/affinors/{a}/{i}", f"expected {n} entries")
                prow = []
                for j, text in enumerate(row):
                    try:
                        prow.append(parse_expr(text, n))
                    except ParseError as e:
                        raise ProblemError(f"/affinors/{a}/{i}/{j}", str(e))
                entries.append(prow)
            ws.append(PolyMatrix(entries))
        # file matrices are covariant; the operator stores contravariant
        prob.hamop = FlatHamOp(eta=eta.inverse(), mu=mu.inverse(), affinors=tuple(ws))
    elif kind in ("embedding", "simulation"):
        prob.potential = Potential(n, eta, _expression(exprs, "phi", n))
        prob.c = _fraction(raw.get("c", 1), "/c")
        if prob.c == 0:
            raise ProblemError("/c", "must be nonzero")
        bp = raw.get("base_point", [0] * n)
        if not isinstance(bp, list) or len(bp) != n:
            raise ProblemError("/base_point", f"expected {n} coordinates")
        prob.base_point = [float(_fraction(v, f"/base_point/{i}")) for i, v in enumerate(bp)]
        if kind == "simulation":
            prob.flow_index = raw.get("flow", 1)
            if not isinstance(prob.flow_index, int) or not (1 <= prob.flow_index <= n):
                raise ProblemError("/flow", f"expected an affinor index in [1, {n}]")
            g = raw.get("grid", {})
            if not isinstance(g, dict):
                raise ProblemError("/grid", "expected an object with m and length")
            prob.sim_grid = {
                "m": g.get("m", 256),
                "length": float(g.get("length", 1.0)),
            }
            init = raw.get("init", {})
            if not isinstance(init, dict):
                raise ProblemError("/init", "expected an object")
            amps = init.get("amplitudes", [0.0] * n)
            if not isinstance(amps, list) or len(amps) != n:
                raise ProblemError("/init/amplitudes", f"expected {n} numbers")
            prob.sim_init = {
                "amplitudes": [float(a) for a in amps],
                "harmonics": [int(h) for h in init.get("harmonics", [1] * n)],
                "phases": [float(p) for p in init.get("phases", [0.0] * n)],
            }
            prob.dt = float(raw["dt"]) if "dt" in raw else None
            prob.t_end = float(raw.get("t_end", 0.1))
    return prob


# ---------------------------------------------------------------------------
# residual rendering


def _flatten(node, prefix=()):
    """Yield (index tuple, Poly) over an arbitrarily nested list grid."""
    if isinstance(node, Poly):
        yield prefix, node
        return
    for k, child in enumerate(node):
        yield from _flatten(child, prefix + (k + 1,))


def _poly_text(p: Poly) -> str:
    n_terms = len(p.terms)
    if n_terms <= TERM_CAP:
        return format_polynomial(p)
    return f"<{n_terms} terms, total degree {p.total_degree()}>"


def _grid_summary(labeled) -> dict:
    labeled = list(labeled)
    nonzero = [(lbl, p) for lbl, p in labeled if not p.is_zero()]
    out = {"checked_entries": len(labeled), "nonzero_entries": len(nonzero)}
    if nonzero:
        out["max_total_degree"] = max(p.total_degree() for _, p in nonzero)
        out["sample_entries"] = {lbl: _poly_text(p) for lbl, p in nonzero[:10]}
    return out


def _labeled(grid):
    for idx, p in _flatten(grid):
        yield ",".join(str(i) for i in idx), p


# ---------------------------------------------------------------------------
# command implementations; each returns (report dict, exit code)


def _require(prob: Problem, *kinds: str):
    if prob.kind not in kinds:
        raise ProblemError("/kind", f"this command needs a {' or '.join(kinds)} problem, got {prob.kind}")


def _psi_from_problem(prob: Problem, c_flag) -> PsiSystem:
    if prob.kind == "psi_system":
        return prob.psi_system
    c = Fraction(c_flag) if c_flag is not None else (prob.c or Fraction(1))
    return reduce_potential(prob.potential, c)


def _verify_wdvv(prob, args, checks):
    _require(prob, "potential", "embedding", "simulation")
    res = wdvv_residual(prob.potential)
    summary = _grid_summary(_labeled(res))
    checks["wdvv"] = {"pass": summary["nonzero_entries"] == 0, **summary}


def _verify_frobenius(prob, args, checks):
    _require(prob, "potential", "embedding", "simulation")
    rep = verify_frobenius_conditions(prob.potential)
    unit = find_unit(prob.potential)
    checks["invariance"] = {"pass": rep.invariance_ok}
    checks["commutativity"] = {"pass": rep.commutativity_ok}
    checks["derivative_symmetry"] = {"pass": rep.derivative_symmetry_ok}
    checks["associativity"] = {
        "pass": rep.associativity_ok,
        "nonzero_entries": len(rep.nonzero_entries),
    }
    checks["unit"] = {
        "pass": unit is not None,
        "vector": None if unit is None else [str(x) for x in unit],
    }


def _verify_submanifold(prob, args, checks):
    _require(prob, "psi_system")
    S = prob.psi_system
    g = _grid_summary(_labeled(gauss_residual(S)))
    r = _grid_summary(_labeled(ricci_residual(S)))
    cod = codazzi_check(S)
    checks["gauss"] = {"pass": g["nonzero_entries"] == 0, **g}
    checks["ricci"] = {"pass": r["nonzero_entries"] == 0, **r}
    checks["codazzi"] = {"pass": cod.ok, "checked_triples": cod.checked_triples}


def _hamop_from_problem(prob, args) -> FlatHamOp:
    if prob.kind == "hamop":
        return prob.hamop
    return affinors_from_psi(prob.psi_system)


def _verify_hamop(prob, args, checks):
    _require(prob, "psi_system", "hamop")
    H = _hamop_from_problem(prob, args)
    rep = check_relations(flat_to_general(H))
    for key in sorted(rep.passes):
        entry = {"pass": rep.passes[key]}
        if not rep.passes[key]:
            entry["nonzero_indices"] = [
                ",".join(str(i) for i in idx) for idx in rep.nonzero_indices(key)[:10]
            ]
        checks[f"relation_{key}"] = entry


def _verify_pencil(prob, args, checks):
    _require(prob, "psi_system", "hamop")
    H = _hamop_from_problem(prob, args)
    rep = pencil_check(H)
    checks["relations"] = {"pass": rep.relations.all_pass}
    checks["local_part"] = {"pass": rep.left07_zero}
    checks["nonlocal_part"] = {"pass": rep.right07_zero}


def _verify_lax(prob, args, checks):
    _require(prob, "psi_system")
    params = LaxParams(
        lam=None if args.lam is None else Fraction(args.lam),
        rho=None if args.rho is None else Fraction(args.rho),
    )
    res = zero_curvature_residual(prob.psi_system, params)
    labeled = []
    for (i, j), mat in sorted(res.items()):
        for a in range(mat.rows):
            for b in range(mat.cols):
                labeled.append((f"{i},{j}:{a + 1},{b + 1}", mat[a, b]))
    summary = _grid_summary(labeled)
    checks["zero_curvature"] = {"pass": summary["nonzero_entries"] == 0, **summary}


def _verify_locality(prob, args, checks):
    _require(prob, "psi_system")
    S = prob.psi_system
    if args.h is not None:
        try:
            h = parse_expr(args.h, S.n)
        except ParseError as e:
            raise ProblemError("", f"--h: {e}")
    else:
        h = first_density(S)
    try:
        rep = check_locality(S, h)
    except NotClosedError as e:
        checks["locality"] = {"pass": False, "detail": str(e)}
        return
    entry = {"pass": rep.passes, **_grid_summary(_labeled(rep.residual))}
    if rep.passes:
        entry["p_densities"] = [_poly_text(p) for p in rep.p_densities]
        entry["f_density"] = _poly_text(rep.f_density)
    checks["locality"] = entry


def _verify_involution(prob, args, checks):
    if prob.kind == "psi_system":
        S = prob.psi_system
        labeled = []
        for a in range(1, S.l + 1):
            for b in range(a, S.l + 1):
                res = involution_residual_constant_bracket(S, a, b)
                for idx, p in _flatten(res):
                    labeled.append((f"{a},{b}:" + ",".join(str(i) for i in idx), p))
        summary = _grid_summary(labeled)
        checks["involution_brackets"] = {"pass": summary["nonzero_entries"] == 0, **summary}
    elif prob.kind == "potential":
        summary = _grid_summary(_labeled(involution_wdvv_integrals(prob.potential)))
        checks["involution_integrals"] = {"pass": summary["nonzero_entries"] == 0, **summary}
    else:
        raise ProblemError("/kind", "this command needs a psi_system or potential problem")


def _verify_eq10(prob, args, checks):
    _require(prob, "potential", "embedding", "simulation")
    summary = _grid_summary(_labeled(check_eq10(prob.potential)))
    checks["eq10"] = {"pass": summary["nonzero_entries"] == 0, **summary}


_VERIFY = {
    "wdvv": _verify_wdvv,
    "frobenius": _verify_frobenius,
    "submanifold": _verify_submanifold,
    "hamop": _verify_hamop,
    "pencil": _verify_pencil,
    "lax": _verify_lax,
    "locality": _verify_locality,
    "involution": _verify_involution,
    "eq10": _verify_eq10,
}


def cmd_verify(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    checks: dict = {}
    _VERIFY[args.check](prob, args, checks)
    ok = all(c["pass"] for c in checks.values())
    return {"checks": checks, "pass": ok}, EXIT_PASS if ok else EXIT_FAIL


def _matrix_json(mat: ConstSymMatrix) -> list:
    return [[str(mat.entries[i][j]) for j in range(mat.dim)] for i in range(mat.dim)]


def cmd_reduce(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    _require(prob, "potential")
    c = Fraction(args.c)
    if c == 0:
        raise ProblemError("", "--c must be nonzero")
    S = reduce_potential(prob.potential, c)
    flat_ok = all(p.is_zero() for _, p in _labeled(gauss_residual(S))) and all(
        p.is_zero() for _, p in _labeled(ricci_residual(S))
    )
    out_file = {
        "schema_version": SCHEMA_VERSION,
        "kind": "psi_system",
        "n": S.n,
        "l": S.l,
        "c": str(c),
        "eta": _matrix_json(S.eta),
        "mu": _matrix_json(S.mu),
        "expressions": {f"psi{a + 1}": format_polynomial(S.psi[a]) for a in range(S.l)},
    }
    text = json.dumps(out_file, indent=2, sort_keys=True) + "\n"
    if args.to:
        Path(args.to).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    report = {
        "checks": {"flat_after_reduction": {"pass": flat_ok}},
        "pass": flat_ok,
        "written": args.to or "-",
    }
    return report, EXIT_PASS if flat_ok else EXIT_FAIL


def cmd_hierarchy(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    _require(prob, "psi_system")
    try:
        levels = build_hierarchy(prob.psi_system, args.depth)
    except NotASolutionError as e:
        return {"checks": {"hierarchy": {"pass": False, "detail": str(e)}}, "pass": False}, EXIT_FAIL
    report_levels = []
    for lv in levels:
        report_levels.append(
            {
                "s": lv.s,
                "h": _poly_text(lv.h),
                "lifts": [_poly_text(f) for f in lv.f_lift],
                "flow_max_degree": lv.flow.a.max_total_degree(),
            }
        )
    return {
        "checks": {"hierarchy": {"pass": True, "depth": args.depth}},
        "levels": report_levels,
        "pass": True,
    }, EXIT_PASS


def _embedding_from_problem(prob, c_flag):
    if prob.kind == "potential" or prob.kind == "embedding" or prob.kind == "simulation":
        c = Fraction(c_flag) if c_flag is not None else (prob.c or Fraction(1))
        base = prob.base_point or [0.0] * prob.potential.n
        return default_initial_frame(prob.potential, c, base)
    raise ProblemError("/kind", "this command needs a potential or embedding problem")


def _parse_grid_flag(text: str):
    try:
        pts, spacing = text.split(":")
        return int(pts), float(spacing)
    except ValueError:
        raise ProblemError("", f"--grid expects POINTS:SPACING, got {text!r}")


def _write_realize_csv(path: str, sample):
    n = sample.problem.n
    header = (
        [f"u{i + 1}" for i in range(n)]
        + [f"r{a + 1}" for a in range(2 * n)]
        + [f"n{a + 1}" for a in range(2 * n)]
        + [f"R{a + 1}_{i + 1}" for a in range(2 * n) for i in range(n)]
        + [f"Nn{a + 1}_{i + 1}" for a in range(2 * n) for i in range(n)]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(sample.points.shape[0]):
            row = (
                list(sample.points[k])
                + list(sample.r[k])
                + list(sample.n[k])
                + list(sample.R[k].ravel())
                + list(sample.Nn[k].ravel())
            )
            w.writerow([repr(float(v)) for v in row])


def cmd_realize(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    E = _embedding_from_problem(prob, args.c)
    pts, spacing = _parse_grid_flag(args.grid)
    n = E.n
    half = (pts - 1) / 2.0
    axes = [E.base_point[d] + spacing * (np.arange(pts) - half) for d in range(n)]
    sample = sample_grid(E, axes, step=args.step, fd_delta=args.fd_delta)
    rep = verify_fundamental_forms(sample, tol=args.tol)
    checks = {
        "tangent_gram": {"pass": rep.passes["tangent_gram"], "max_residual": rep.max_tangent_gram},
        "mixed_gram": {"pass": rep.passes["mixed_gram"], "max_residual": rep.max_mixed_gram},
        "normal_gram": {"pass": rep.passes["normal_gram"], "max_residual": rep.max_normal_gram},
    }
    if "second_form" in rep.passes:
        checks["second_form"] = {
            "pass": rep.passes["second_form"],
            "max_residual": rep.max_second_form,
            "difference_mode": rep.second_form_mode,
        }
    if args.csv:
        _write_realize_csv(args.csv, sample)
    if args.plot:
        from .plotting import plot_embedding_sample

        plot_embedding_sample(sample, args.plot)
    ok = all(c["pass"] for c in checks.values())
    report = {
        "checks": checks,
        "grid": {"points_per_axis": pts, "spacing": spacing, "nodes": rep.n_points},
        "signature": list(E.ambient.signature()),
        "tol": args.tol,
        "pass": ok,
    }
    return report, EXIT_PASS if ok else EXIT_FAIL


def cmd_loop_test(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    E = _embedding_from_problem(prob, args.c)
    n = E.n
    if n < 2:
        raise ProblemError("", "loop test needs at least two coordinates")
    if args.axes is None:
        ax = (n - 2, n - 1)
    else:
        try:
            a, b_ = (int(v) for v in args.axes.split(","))
        except ValueError:
            raise ProblemError("", f"--axes expects two indices like 2,3, got {args.axes!r}")
        if not (1 <= a <= n and 1 <= b_ <= n) or a == b_:
            raise ProblemError("", f"--axes indices must be distinct and in [1, {n}]")
        ax = (a - 1, b_ - 1)
    b = np.asarray(E.base_point, dtype=float)
    e1 = np.eye(n)[ax[0]] * args.side
    e2 = np.eye(n)[ax[1]] * args.side
    loop = [b, b + e1, b + e1 + e2, b + e2, b]
    dev = loop_closure_test(E, loop, step=args.step)
    ok = dev <= args.tol
    report = {
        "checks": {"loop_closure": {"pass": ok, "deviation": dev, "tol": args.tol}},
        "loop_side": args.side,
        "loop_axes": [ax[0] + 1, ax[1] + 1],
        "pass": ok,
    }
    return report, EXIT_PASS if ok else EXIT_FAIL


def _write_sim_csv(path: str, trajectory, grid: Grid1D):
    n = trajectory[0].values.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "node", "x"] + [f"u{i + 1}" for i in range(n)])
        x = grid.nodes()
        for state in trajectory:
            for k in range(grid.m):
                w.writerow(
                    [repr(float(state.time)), k, repr(float(x[k]))]
                    + [repr(float(v)) for v in state.values[k]]
                )


def cmd_simulate(args) -> tuple[dict, int]:
    prob = load_problem(args.problem)
    _require(prob, "simulation")
    S = reduce_potential(prob.potential, prob.c)
    flows = structural_flows(affinors_from_psi(S))
    flow_index = args.flow if args.flow is not None else prob.flow_index
    if not (1 <= flow_index <= len(flows)):
        raise ProblemError("", f"--flow must be in [1, {len(flows)}]")
    flow = flows[flow_index - 1]

    grid = Grid1D(m=int(prob.sim_grid["m"]), length=prob.sim_grid["length"])
    x = grid.nodes()
    n = prob.potential.n
    vals = np.zeros((grid.m, n))
    init = prob.sim_init
    for i in range(n):
        vals[:, i] = init["amplitudes"][i] * np.sin(
            2 * np.pi * init["harmonics"][i] * x / grid.length + init["phases"][i]
        )
    state0 = FieldState(values=vals)

    t_end = args.t_end if args.t_end is not None else prob.t_end
    dt = args.dt if args.dt is not None else prob.dt
    if dt is None:
        adv = advisory_dt(flow, state0, grid)
        dt = adv if np.isfinite(adv) else t_end / 100.0
    cfg = SimConfig(dt=dt, t_end=t_end, record_every=args.record_every)

    densities = []
    labels = []
    try:
        levels = build_hierarchy(S, args.densities)
    except NotASolutionError as e:
        return {
            "checks": {"hierarchy_densities": {"pass": False, "detail": str(e)}},
            "pass": False,
        }, EXIT_FAIL
    for lv in levels:
        densities.append(lv.h)
        labels.append(f"h{lv.s}")

    try:
        trajectory = simulate_flow(flow, state0, grid, cfg)
    except BlowUp as e:
        return {
            "checks": {"completed": {"pass": False, "blow_up_time": e.time}},
            "pass": False,
        }, EXIT_FAIL

    drifts = conservation_report(trajectory, densities, grid)
    checks = {"completed": {"pass": True, "steps": len(trajectory) - 1}}
    drift_ok = True
    for lbl, d in zip(labels, drifts):
        entry = {"max_relative_drift": d}
        if args.drift_tol is not None:
            entry["pass"] = d <= args.drift_tol
            drift_ok = drift_ok and entry["pass"]
        else:
            entry["pass"] = True
        checks[f"conservation_{lbl}"] = entry

    if args.csv:
        _write_sim_csv(args.csv, trajectory, grid)
    if args.plot:
        from .plotting import plot_simulation

        series = []
        times = [s.time for s in trajectory]
        for lbl, dens in zip(labels, densities):
            h0 = functional_value(dens, trajectory[0], grid)
            series.append((lbl, times, [functional_value(dens, s, grid) - h0 for s in trajectory]))
        plot_simulation(trajectory, grid, series, args.plot)

    ok = drift_ok
    report = {
        "checks": checks,
        "flow": flow_index,
        "dt": dt,
        "t_end": t_end,
        "grid": {"m": grid.m, "length": grid.length},
        "pass": ok,
    }
    return report, EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# plumbing


def _emit(report: dict, args, command: str, started: float) -> None:
    report = dict(report)
    report["schema_version"] = SCHEMA_VERSION
    report["command"] = command
    report["problem"] = Path(args.problem).name if getattr(args, "problem", None) else None
    if getattr(args, "timings", False):
        report["timings"] = {"total_s": round(time.perf_counter() - started, 3)}
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    for name, entry in sorted(report.get("checks", {}).items()):
        verdict = "pass" if entry.get("pass") else "FAIL"
        extras = []
        for key in ("nonzero_entries", "max_residual", "deviation", "max_relative_drift", "blow_up_time"):
            if key in entry:
                v = entry[key]
                extras.append(f"{key}={v:.3e}" if isinstance(v, float) else f"{key}={v}")
        suffix = f" ({', '.join(extras)})" if extras else ""
        print(f"check {name}: {verdict}{suffix}")
    if "pass" in report:
        print(f"overall: {'pass' if report['pass'] else 'FAIL'}")


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wdvvkit",
        description="Verify and construct associativity-equation structures; run their numeric realizations.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem JSON file")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    pv = sub.add_parser("verify", help="run a symbolic verification")
    pv.add_argument("check", choices=sorted(_VERIFY))
    common(pv)
    pv.add_argument("--h", help="density expression for the locality check")
    pv.add_argument("--lam", help="numeric value for the first deformation parameter (lax)")
    pv.add_argument("--rho", help="numeric value for the second deformation parameter (lax)")
    pv.set_defaults(fn=cmd_verify)

    pr = sub.add_parser("reduce", help="turn a potential into its flat submanifold system")
    common(pr)
    pr.add_argument("--c", default="1", help="reduction constant (exact rational, default 1)")
    pr.add_argument("--to", help="write the produced problem file here (default: stdout)")
    pr.set_defaults(fn=cmd_reduce)

    ph = sub.add_parser("hierarchy", help="build commuting densities and flows")
    common(ph)
    ph.add_argument("--depth", type=int, default=3)
    ph.set_defaults(fn=cmd_hierarchy)

    pz = sub.add_parser("realize", help="integrate the embedding over a grid and check its forms")
    common(pz)
    pz.add_argument("--c", help="deformation constant override (exact rational)")
    pz.add_argument("--grid", default="5:0.05", help="POINTS:SPACING per axis (default 5:0.05)")
    pz.add_argument("--step", type=float, default=1e-2, help="integrator step along grid edges")
    pz.add_argument("--fd-delta", type=float, default=5e-4, help="side-stencil spacing for the second-form check")
    pz.add_argument("--tol", type=float, default=1e-6)
    pz.add_argument("--csv", help="write sampled states as CSV")
    pz.add_argument("--plot", help="write a PNG figure here")
    pz.set_defaults(fn=cmd_realize)

    pl = sub.add_parser("loop-test", help="closure deviation around a coordinate square")
    common(pl)
    pl.add_argument("--c", help="deformation constant override (exact rational)")
    pl.add_argument("--side", type=float, default=0.1)
    pl.add_argument("--axes", help="coordinate plane of the square, 1-based like 2,3 (default: last two)")
    pl.add_argument("--step", type=float, default=1e-3)
    pl.add_argument("--tol", type=float, default=1e-7)
    pl.set_defaults(fn=cmd_loop_test)

    ps = sub.add_parser("simulate", help="march a hydrodynamic flow and watch conserved functionals")
    common(ps)
    ps.add_argument("--flow", type=int, help="affinor index (1-based), overrides the problem file")
    ps.add_argument("--t-end", type=float, help="override the horizon")
    ps.add_argument("--dt", type=float, help="override the time step")
    ps.add_argument("--densities", type=int, default=2, help="how many conserved densities to track")
    ps.add_argument("--drift-tol", type=float, help="fail if any relative drift exceeds this")
    ps.add_argument("--record-every", type=int, default=25)
    ps.add_argument("--csv", help="write the trajectory as CSV")
    ps.add_argument("--plot", help="write a PNG figure here")
    ps.set_defaults(fn=cmd_simulate)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    started = time.perf_counter()
    try:
        report, code = args.fn(args)
    except ProblemError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NotASolutionError as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    command = args.command if args.command != "verify" else f"verify {args.check}"
    _emit(report, args, command, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
