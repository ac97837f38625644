"""Acceptance gate: one test per numbered item of the README checklist.

Each test prints a single ``criterion N: PASS/FAIL`` line with a short
detail, then asserts.  Runtime budgets are asserted where the checklist
states one.
"""

import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import (
    F0,
    SOL1,
    SOL1_BROKEN,
    make_eta,
    make_potential,
    random_poly,
    random_potentials,
)
from wdvvkit.algebra import Poly, PolyMatrix, gradient, hessian
from wdvvkit.cli import main as cli_main
from wdvvkit.exprlang import format_polynomial, parse
from wdvvkit.frobenius import Potential, dubrovin_residual, wdvv_residual
from wdvvkit.hamop import (
    FlatHamOp,
    affinors_from_psi,
    check_relations,
    flat_to_general,
    flows_commute_residual,
    pencil_check,
    structural_flows,
)
from wdvvkit.hierarchy import (
    build_hierarchy,
    check_eq10,
    involution_residual_constant_bracket,
    involution_wdvv_integrals,
)
from wdvvkit.hydrosim import (
    FieldState,
    Grid1D,
    SimConfig,
    conservation_report,
    simulate_flow,
)
from wdvvkit.realization import (
    default_initial_frame,
    integrate_along_path,
    loop_closure_test,
    sample_grid,
    verify_fundamental_forms,
)
from wdvvkit.submanifold import (
    gauss_residual,
    reduce_potential,
    ricci_residual,
    zero_curvature_residual,
)

ORIGIN = (0.0, 0.0, 0.0)


def all_zero(node):
    if isinstance(node, Poly):
        return node.is_zero()
    return all(all_zero(ch) for ch in node)


def announce(num, ok, detail=""):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)


def test_criterion_01_associativity_exactness(solutions, perturbed):
    t0 = time.perf_counter()
    zero_ok = all(all_zero(wdvv_residual(P)) for P in solutions)
    nonzero_ok = all(not all_zero(wdvv_residual(P)) for P in perturbed)
    elapsed = time.perf_counter() - t0
    ok = zero_ok and nonzero_ok and elapsed < 5.0
    announce(1, ok, f"3 solutions zero, 3 perturbed nonzero, {elapsed:.2f}s")
    assert zero_ok and nonzero_ok
    assert elapsed < 5.0


def test_criterion_02_scalar_reduction_equation(sol1, sol2):
    # the normalized cubic part drops out; the residual tests the f tail only
    quad = parse("1/2*u1^2*u3 + 1/2*u1*u2^2", 3)
    ok = all(dubrovin_residual(P.phi - quad).is_zero() for P in (sol1, sol2))
    announce(2, ok, "scalar residual zero for both bundled solutions")
    assert ok


def test_criterion_03_reduction_coincidence(sol1, sol2):
    # flatness of the induced geometry and associativity of the potential
    # fail or hold together, entry by entry: with R the associativity
    # residual,  gauss == c*(R[i][k][j][l] - R[i][l][j][k])  and
    # ricci == R[i][k][j][l] - R[i][l][j][k]
    pots = [sol1, sol2] + random_potentials(20260822, 5)
    simultaneous = True
    combination = True
    for P in pots:
        R = wdvv_residual(P)
        wdvv_zero = all_zero(R)
        for c in (1, -1):
            S = reduce_potential(P, c)
            G = gauss_residual(S)
            Ric = ricci_residual(S)
            flat = all_zero(G) and all_zero(Ric)
            simultaneous = simultaneous and (flat == wdvv_zero)
            cF = Fraction(c)
            for i, j, k, l in product(range(3), repeat=4):
                comb = R[i][k][j][l] - R[i][l][j][k]
                if G[i][j][k][l] != comb * cF or Ric[i][j][k][l] != comb:
                    combination = False
    ok = simultaneous and combination
    announce(3, ok, "7 potentials, c = +1 and -1, exact combination identity")
    assert simultaneous
    assert combination


def test_criterion_04_affinor_match(sol1_reduction):
    H = affinors_from_psi(sol1_reduction)

    def mat(rows):
        return PolyMatrix([[parse(t, 3) for t in row] for row in rows])

    want = [
        mat([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]),
        mat([["0", "u3", "u2"], ["1", "0", "u3"], ["0", "1", "0"]]),
        mat([["0", "u2", "u3^2"], ["0", "u3", "u2"], ["1", "0", "0"]]),
    ]
    match = list(H.affinors) == want
    commute = all(
        H.affinors[a].commutator(H.affinors[b]).is_zero()
        for a in range(3)
        for b in range(3)
    )
    ok = match and commute
    announce(4, ok, "hand matrices reproduced, all commutators zero")
    assert match
    assert commute


def test_criterion_05_operator_relations(sol1_reduction):
    rep = check_relations(flat_to_general(affinors_from_psi(sol1_reduction)))
    sol_ok = rep.all_pass and set(rep.passes) == {"01", "02", "03", "04", "05", "06", "07"}

    eta_contra = make_eta().inverse()
    Z = PolyMatrix.zeros(3, 3, 3)
    const_op = FlatHamOp(eta_contra, eta_contra, (Z, Z, Z))
    const_ok = check_relations(flat_to_general(const_op)).all_pass

    pen = pencil_check(affinors_from_psi(sol1_reduction))
    pencil_ok = pen.passes and pen.left07_zero and pen.right07_zero
    pen_const = pencil_check(const_op)
    pencil_ok = pencil_ok and pen_const.passes

    ok = sol_ok and const_ok and pencil_ok
    announce(5, ok, "all seven relations, both operators, pencil sides vanish")
    assert sol_ok
    assert const_ok
    assert pencil_ok


def test_criterion_06_deformed_consistency(sol1_reduction, perturbed):
    def curvature_zero(res):
        return all(m.is_zero() for m in res.values())

    good = curvature_zero(zero_curvature_residual(sol1_reduction))
    bad = not curvature_zero(zero_curvature_residual(reduce_potential(perturbed[0], 1)))
    ok = good and bad
    announce(6, ok, "residual zero in all parameters, nonzero off solution")
    assert good
    assert bad


def test_criterion_07_hierarchy_recursion(sol1_reduction):
    t0 = time.perf_counter()
    levels = build_hierarchy(sol1_reduction, 3)

    # defining relations, restated:
    #   psi_{a,jp} eta^{jr} dh_s/du^r == dF_a^(s)/du^p
    #   mu^{mq} psi_{m,jk} F_q^(s)   == d2 h_{s+1}/du^j du^k
    S = sol1_reduction
    n, L = S.n, S.l
    psi_hess = [hessian(p) for p in S.psi]
    relations_ok = True
    for s in range(len(levels)):
        grad_h = gradient(levels[s].h)
        lifts = levels[s].f_lift
        for a in range(L):
            for p in range(n):
                lhs = Poly.zero(n)
                for j in range(n):
                    for r in range(n):
                        coeff = S.eta.inv_entry(j, r)
                        if coeff:
                            lhs = lhs + psi_hess[a][j, p] * grad_h[r] * coeff
                relations_ok = relations_ok and lhs == lifts[a].diff(p + 1)
        if s + 1 < len(levels):
            h_next = hessian(levels[s + 1].h)
            for j in range(n):
                for k in range(n):
                    lhs = Poly.zero(n)
                    for m in range(L):
                        for q in range(L):
                            coeff = S.mu.inv_entry(m, q)
                            if coeff:
                                lhs = lhs + psi_hess[m][j, k] * lifts[q] * coeff
                    relations_ok = relations_ok and lhs == h_next[j, k]

    first_lift_ok = levels[0].f_lift[0] == parse("u1*u3 + 1/2*u2^2", 3)
    commute_ok = all(
        p.is_zero() for p in flows_commute_residual(levels[0].flow, levels[1].flow)
    )
    elapsed = time.perf_counter() - t0
    ok = relations_ok and first_lift_ok and commute_ok and elapsed < 60.0
    announce(7, ok, f"3 levels, defining relations exact, {elapsed:.2f}s")
    assert relations_ok
    assert first_lift_ok
    assert commute_ok
    assert elapsed < 60.0


def test_criterion_08_involution(sol1_reduction, solutions, perturbed, f0):
    pairs_ok = all(
        all_zero(involution_residual_constant_bracket(sol1_reduction, a, b))
        for a in range(1, 4)
        for b in range(1, 4)
    )
    integrals_ok = all(all_zero(involution_wdvv_integrals(P)) for P in solutions)
    integrals_ok = integrals_ok and all(
        not all_zero(involution_wdvv_integrals(P)) for P in perturbed
    )
    import random

    cubic = random_poly(random.Random(61), min_deg=3, max_deg=3)
    eq10_ok = all_zero(check_eq10(f0)) and not all_zero(
        check_eq10(Potential(3, make_eta(), cubic))
    )
    ok = pairs_ok and integrals_ok and eq10_ok
    announce(8, ok, "9 density pairs, functional test tracks associativity")
    assert pairs_ok
    assert integrals_ok
    assert eq10_ok


def expm_frame_oracle(problem, direction, t=1.0):
    # constant third derivatives make the frame system autonomous linear
    P = problem.potential
    n = P.n
    eta_inv = P.eta.inv_to_float()
    third = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                third[i, j, k] = P.phi.diff(i + 1).diff(j + 1).diff(k + 1).eval_float(
                    tuple(problem.base_point)
                )
    contracted = np.einsum("ijk,j->ik", third, np.asarray(direction))
    B = eta_inv @ contracted.T
    c = float(problem.c)
    K = np.zeros((2 * n, 2 * n))
    K[:n, n:] = -B
    K[n:, :n] = c * B
    X0 = np.hstack([problem.R0, problem.Nn0])
    return X0 @ expm(t * K)


def test_criterion_09_realization_numerics():
    t0 = time.perf_counter()
    f0_prob = default_initial_frame(make_potential(F0), 1, ORIGIN)
    sol1_prob = default_initial_frame(make_potential(SOL1), 1, ORIGIN)

    # (i) straight unit path against the matrix-exponential oracle
    d = 1.0 / math.sqrt(3.0)
    sample = integrate_along_path(f0_prob, [ORIGIN, (d, d, d)], step=1e-3)
    X = np.hstack([sample.R[-1], sample.Nn[-1]])
    oracle_err = float(np.max(np.abs(X - expm_frame_oracle(f0_prob, (d, d, d)))))
    sub_i = oracle_err < 1e-8

    # (ii) 5x5x5 grid of spacing 0.05 around the base point
    axes = [0.05 * (np.arange(5) - 2.0) for _ in range(3)]
    grid_sample = sample_grid(sol1_prob, axes, step=1e-2, fd_delta=5e-4)
    rep = verify_fundamental_forms(grid_sample, tol=1e-6)
    sub_ii = all(rep.passes.values()) and rep.n_points == 125

    # (iii) closure deviation around a small coordinate square
    b = np.zeros(3)
    e1 = np.array([0.0, 0.1, 0.0])
    e2 = np.array([0.0, 0.0, 0.1])
    loop = [b, b + e1, b + e1 + e2, b + e2, b]
    good = loop_closure_test(sol1_prob, loop, step=1e-3)
    bad_prob = default_initial_frame(make_potential(SOL1_BROKEN), 1, ORIGIN)
    bad = loop_closure_test(bad_prob, loop, step=1e-3)
    sub_iii = good < 1e-7 and bad >= 100.0 * good

    # (iv) convergence order of the worst Gram residual in the step size
    drifts = []
    for h in (0.04, 0.02, 0.01):
        s = integrate_along_path(f0_prob, [ORIGIN, (1.0, 0.0, 0.0)], step=h)
        r = verify_fundamental_forms(s, tol=1.0)
        drifts.append(max(r.max_tangent_gram, r.max_mixed_gram, r.max_normal_gram))
    orders = [math.log2(drifts[i] / drifts[i + 1]) for i in range(2)]
    sub_iv = all(3.5 <= o <= 4.5 for o in orders)

    elapsed = time.perf_counter() - t0
    ok = sub_i and sub_ii and sub_iii and sub_iv and elapsed < 120.0
    print(f"criterion 9 (i): {'PASS' if sub_i else 'FAIL'} (oracle gap {oracle_err:.2e})")
    print(f"criterion 9 (ii): {'PASS' if sub_ii else 'FAIL'} (125 nodes, tol 1e-6)")
    print(
        f"criterion 9 (iii): {'PASS' if sub_iii else 'FAIL'} "
        f"(closure {good:.2e} vs {bad:.2e})"
    )
    print(
        f"criterion 9 (iv): {'PASS' if sub_iv else 'FAIL'} "
        f"(orders {orders[0]:.2f}, {orders[1]:.2f}, window [3.5, 4.5])"
    )
    announce(9, ok, f"{elapsed:.2f}s")
    assert sub_i
    assert sub_ii
    assert sub_iii
    assert elapsed < 120.0
    assert sub_iv, (
        f"Gram-drift order measured {orders} against the required window "
        "[3.5, 4.5].  The quadratic frame invariant of this skew-compatible "
        "linear benchmark superconverges: the fourth-order step's leading "
        "error term cancels in the invariant by parity, so the measured "
        "order sits near five.  See the acceptance notes in the README; the "
        "window cannot be met by a correct classical fourth-order integrator."
    )


def sine_state(grid, amplitude):
    x = grid.nodes()
    vals = np.zeros((grid.m, 3))
    vals[:, 1] = amplitude * np.sin(2 * math.pi * x / grid.length)
    return FieldState(vals, 0.0)


def test_criterion_10_simulation_conservation(sol1_reduction):
    flows_list = structural_flows(affinors_from_psi(sol1_reduction))
    densities = [lv.h for lv in build_hierarchy(sol1_reduction, 2)]

    g = Grid1D(256, 1.0)
    init = sine_state(g, 0.01)
    traj = simulate_flow(flows_list[1], init, g, SimConfig(dt=2e-4, t_end=0.1, record_every=25))
    drifts = conservation_report(traj, densities, g)
    drift_ok = len(drifts) == 2 and all(d < 1e-4 for d in drifts)

    # refinement comparison in a regime where the drift is resolvable
    def resolvable_drift(m):
        gm = Grid1D(m, 1.0)
        t = simulate_flow(
            flows_list[1], sine_state(gm, 0.05), gm, SimConfig(dt=1e-4, t_end=0.05)
        )
        return max(conservation_report(t, densities, gm))

    refine_ok = resolvable_drift(128) < resolvable_drift(64)

    init256 = sine_state(g, 0.01)
    round_trip = simulate_flow(
        flows_list[0], init256, g, SimConfig(dt=1.0 / 2560, t_end=1.0)
    )
    trans_err = float(np.max(np.abs(round_trip[-1].values - init256.values)))
    trans_ok = trans_err < 1e-4

    ok = drift_ok and refine_ok and trans_ok
    announce(
        10,
        ok,
        f"drifts {max(drifts):.1e}, translation round trip {trans_err:.1e}",
    )
    assert drift_ok
    assert refine_ok
    assert trans_ok


def test_criterion_11_parser_and_cli(problems_dir, tmp_path, capsys):
    # expression round trip over every bundled file
    roundtrip_ok = True
    for f in sorted(problems_dir.glob("*.json")):
        doc = json.loads(f.read_text())
        texts = list(doc.get("expressions", {}).values())
        for row_block in doc.get("affinors", []):
            for row in row_block:
                texts.extend(row)
        for t in texts:
            roundtrip_ok = roundtrip_ok and format_polynomial(parse(t, 3)) == t

    # exit-code contract over the corpus
    expected = [
        ("verify", "wdvv", "sol1.json", 0),
        ("verify", "wdvv", "sol1-broken.json", 1),
        ("verify", "frobenius", "sol2.json", 0),
        ("verify", "submanifold", "sol1-reduced.json", 0),
        ("verify", "lax", "sol1-broken-reduced.json", 1),
        ("verify", "hamop", "sol1-hamop.json", 0),
        ("verify", "involution", "f0.json", 0),
    ]
    codes_ok = True
    for cmd, check, name, want in expected:
        got = cli_main([cmd, check, str(problems_dir / name)])
        codes_ok = codes_ok and got == want
    codes_ok = codes_ok and cli_main(["verify", "wdvv", str(tmp_path / "missing.json")]) == 2

    # golden reports byte-stable across two consecutive runs
    stable_ok = True
    for args in (
        ["verify", "wdvv", str(problems_dir / "sol1.json")],
        ["hierarchy", str(problems_dir / "sol1-reduced.json"), "--depth", "2"],
    ):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert cli_main(args + ["--out", str(a)]) == 0
        assert cli_main(args + ["--out", str(b)]) == 0
        stable_ok = stable_ok and a.read_bytes() == b.read_bytes()
    capsys.readouterr()

    ok = roundtrip_ok and codes_ok and stable_ok
    announce(11, ok, "round trip, exit codes, byte-stable reports")
    assert roundtrip_ok
    assert codes_ok
    assert stable_ok
