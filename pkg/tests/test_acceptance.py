"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports its measured numbers.
"""

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import ACCEPTANCE_RESULTS
from photonloss.fock import StateVector, embed, make_layout, random_state, single_mode_annihilation, with_ancillas
from photonloss.gates import ECS, PCS, CodingSpec, coding_generator, parity_op, squeeze_generator_matrix
from photonloss.measurement import (
    count_probabilities,
    empirical_distribution,
    no_click_report,
    sample_counts,
    squeezed_vacuum_pmf,
    total_variation,
)
from photonloss.protocol import (
    ANCILLA_LOSS_EVENT,
    INFO_LOSS_EVENT,
    LossEvent,
    code_words,
    one_to_one_coupling,
    run_protocol,
    symmetric_coupling,
    transmit,
)
from photonloss.synthesis import (
    MediatedProtocolSpec,
    certify_cubic_dress,
    dressed_forms,
    ecs_target_forms,
    field_factor,
    gaussian_reduction_solve,
    mediated_pcs,
    rank_invariance_harness,
)


def record(n, ok, detail):
    ACCEPTANCE_RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_round_trip():
    rng = np.random.default_rng(1)
    codings = [
        (CodingSpec(ECS, [[0.3, 0.1], [0.05, 0.25]]), [2, 2], [40, 40]),
        (CodingSpec(PCS, [[1, 0], [1, 1]], 0.4), [3, 3], [40, 40]),
    ]
    worst_f, worst_p = 1.0, 1.0
    for coding, info_dims, anc in codings:
        for _ in range(50):
            psi = random_state(make_layout(info_dims), rng)
            rep = run_protocol(psi, coding, LossEvent(), anc_dims=anc)
            worst_f = min(worst_f, rep.fidelity)
            worst_p = min(worst_p, rep.p_zero_counts)
    ok = worst_f >= 1 - 1e-10 and worst_p >= 1 - 1e-10
    record(1, ok, f"min fidelity 1-{1 - worst_f:.1e}, min P(all-zero) 1-{1 - worst_p:.1e} over 100 runs")


def test_criterion_02_pcs_full_space_recovery():
    rng = np.random.default_rng(2)
    configs = [
        (CodingSpec(PCS, [[1]], 0.5), [6], [60]),
        (CodingSpec(PCS, [[1, 0], [1, 1]], 0.4), [3, 3], [40, 40]),
    ]
    worst = 1.0
    for coding, info_dims, anc in configs:
        for _ in range(50):
            psi = random_state(make_layout(info_dims), rng)
            rep = run_protocol(psi, coding, LossEvent(ANCILLA_LOSS_EVENT), anc_dims=anc)
            assert rep.recovery_applied
            worst = min(worst, rep.fidelity)
    record(2, worst >= 1 - 1e-10, f"min recovered fidelity 1-{1 - worst:.1e} over 100 states")


def test_criterion_03_ecs_code_preservation():
    rng = np.random.default_rng(3)
    words = code_words(3)
    coding = CodingSpec(ECS, symmetric_coupling(3, 0.25))
    inputs = list(words)
    for _ in range(20):
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        c /= np.linalg.norm(c)
        inputs.append(StateVector(words[0].layout, sum(ci * w.amps for ci, w in zip(c, words))))
    worst = 1.0
    for psi in inputs:
        rep = run_protocol(psi, coding, LossEvent(ANCILLA_LOSS_EVENT), anc_dims=120)
        worst = min(worst, rep.fidelity)
    record(3, worst >= 1 - 1e-10, f"min info fidelity 1-{1 - worst:.1e} over {len(inputs)} code states")


def test_criterion_04_loss_localisation():
    rng = np.random.default_rng(4)
    coding = CodingSpec(ECS, one_to_one_coupling(2, 0.4))
    worst = 1.0
    for i in range(2):
        for _ in range(3):
            psi = random_state(make_layout([3, 3]), rng)
            _, dec, _ = transmit(psi, coding, LossEvent.on_mode(INFO_LOSS_EVENT, i, 2), anc_dims=[60, 60])
            p = count_probabilities(dec)
            other = 1 - i
            marg_i = p.take(0, axis=other)
            good = marg_i[2::2].sum()
            any_click = 1.0 - p[0, 0]
            worst = min(worst, good / any_click)
    record(4, worst >= 1 - 1e-8, f"min P(even>=2 on lossy mode's ancilla | click) = 1-{1 - worst:.1e}")


def dense_no_click_oracle(gamma, d=120):
    lay = make_layout([2], [d])
    coding = CodingSpec(ECS, [[gamma]])
    u = sla.expm(-1j * coding_generator(lay, coding).to_dense())
    a = embed(lay, {0: single_mode_annihilation(2)}).to_dense()
    psi = with_ancillas(StateVector(make_layout([2]), np.array([0, 1.0])), [d]).amps
    v = u.conj().T @ a @ u @ psi
    v /= np.linalg.norm(v)
    return float(np.sum(np.abs(v.reshape(2, d)[:, 0]) ** 2))


def test_criterion_05_no_click_decay():
    gammas = [0.1, 0.2, 0.3, 0.4, 0.5]
    reports = [no_click_report(CodingSpec(ECS, [[g]])) for g in gammas]
    exact = [r.exact for r in reports]
    oracle = [dense_no_click_oracle(g) for g in gammas]
    decreasing = all(a > b for a, b in zip(exact, exact[1:]))
    err = max(abs(a - b) for a, b in zip(exact, oracle))
    table = ", ".join(f"g={g}: {r.exact:.6f} vs printed {r.printed_form:.6f}" for g, r in zip(gammas, reports))
    record(5, decreasing and err <= 1e-9, f"max |exact-oracle| {err:.1e}; {table}")


def test_criterion_06_squeezed_vacuum_statistics():
    d = 220
    worst_match, worst_odd, worst_sign = 0.0, 0.0, 0.0
    for g in (0.1, 0.3, 0.5):
        oracle = np.abs(sla.expm(-1j * g * squeeze_generator_matrix(d))[:, 0]) ** 2
        mirror = np.abs(sla.expm(1j * g * squeeze_generator_matrix(d))[:, 0]) ** 2
        analytic = np.array([squeezed_vacuum_pmf(2 * g, m) for m in range(41)])
        worst_match = max(worst_match, np.abs(analytic - oracle[:41]).max())
        worst_odd = max(worst_odd, oracle[1::2].sum(), analytic[1::2].sum())
        flipped = np.array([squeezed_vacuum_pmf(-2 * g, m) for m in range(41)])
        worst_sign = max(worst_sign, np.abs(flipped - analytic).max(), np.abs(mirror - oracle).max())
    ok = worst_match <= 1e-9 and worst_odd <= 1e-10 and worst_sign <= 1e-12
    record(6, ok, f"pmf vs oracle {worst_match:.1e}, odd mass {worst_odd:.1e}, sign diff {worst_sign:.1e}")


def test_criterion_07_sampling_consistency():
    scenarios = {
        "no-loss": (CodingSpec(PCS, [[1]], 0.4), [0.6, 0.8], LossEvent()),
        "ancilla-loss": (CodingSpec(ECS, [[0.3]]), [0.0, 0.6, 0.8], LossEvent(ANCILLA_LOSS_EVENT)),
        "info-loss": (CodingSpec(ECS, [[0.5]]), [0.0, 1.0], LossEvent(INFO_LOSS_EVENT)),
    }
    tvs = {}
    for k, (name, (coding, amps, event)) in enumerate(scenarios.items()):
        psi = StateVector(make_layout([len(amps)]), np.array(amps, dtype=complex))
        _, dec, _ = transmit(psi, coding, event, anc_dims=80)
        exact = count_probabilities(dec)
        emp = empirical_distribution(sample_counts(dec, 100 + k, 100_000), exact.shape)
        tvs[name] = total_variation(exact, emp)
    ok = max(tvs.values()) <= 0.01
    record(7, ok, "TV " + ", ".join(f"{k}={v:.4f}" for k, v in tvs.items()))


def test_criterion_08_mediated_pcs():
    rng = np.random.default_rng(8)
    worst_purity, worst_fid, worst_round = 1.0, 1.0, 1.0
    for strength in (0.2, 0.4):
        for _ in range(10):
            psi = random_state(make_layout([4]), rng)
            enc, cert = mediated_pcs(MediatedProtocolSpec(strength), psi, 60)
            worst_purity = min(worst_purity, cert.qubit_purity)
            worst_fid = min(worst_fid, cert.field_fidelity)
            dec, cert2 = mediated_pcs(MediatedProtocolSpec(strength, qubit_init=-1), field_factor(enc, 1))
            worst_purity = min(worst_purity, cert2.qubit_purity)
            back = field_factor(dec, -1)
            worst_round = min(worst_round, abs(np.vdot(with_ancillas(psi, [60]).amps, back.amps)) ** 2)
    ok = min(worst_purity, worst_fid, worst_round) >= 1 - 1e-9
    record(
        8, ok,
        f"min purity 1-{max(1 - worst_purity, 0):.1e}, min field fidelity 1-{max(1 - worst_fid, 0):.1e}, "
        f"encode/decode 1-{max(1 - worst_round, 0):.1e}",
    )


def test_criterion_09_conjugation_machinery():
    cert = certify_cubic_dress(80, 0.05, 0.05)
    pairs = rank_invariance_harness(100, seed=9)
    rank_ok = all(a == b for a, b in pairs)
    args = (ecs_target_forms(0.3), dressed_forms(0.05, 0.05))
    s1 = gaussian_reduction_solve(*args, seed=0, truncation=40)
    s2 = gaussian_reduction_solve(*args, seed=0, truncation=40)
    reproducible = s1.parameters == s2.parameters and s1.residual == s2.residual
    ok = cert.residual <= 1e-6 and rank_ok and reproducible
    record(
        9, ok,
        f"cubic dress residual {cert.residual:.1e} on window {cert.window} (60% window: "
        f"{cert.extra['residual_at_fixed_window']:.3f}); rank harness {sum(a == b for a, b in pairs)}/100; "
        f"solver residual {s1.residual:.3e} (coefficients {s1.extra['coefficient_residual']:.3e}), "
        f"reproducible={reproducible}",
    )


def test_criterion_10_parity_identities():
    rng = np.random.default_rng(10)
    lay = make_layout([3, 3], [4])
    pi = parity_op(lay, [1, 1]).to_dense()
    square_exact = np.array_equal(pi @ pi, np.eye(lay.total_dim))
    strength = 0.4
    sinh_pi = sla.sinhm(2 * strength * pi)
    worst = 0.0
    for _ in range(20):
        psi = random_state(lay, rng).amps
        worst = max(worst, np.abs(sinh_pi @ psi - np.sinh(2 * strength) * (pi @ psi)).max())
    record(10, square_exact and worst <= 1e-12, f"Pi^2 == I exactly: {square_exact}; sinh identity error {worst:.1e}")


@pytest.mark.parametrize("n", range(1, 11))
def test_all_criteria_recorded(n):
    # runs last in file order; fails loudly if a criterion test was skipped or errored before recording
    assert n in ACCEPTANCE_RESULTS
