import numpy as np
import pytest

from epirep.continuation import (
    bifurcations_csv,
    branches_csv,
    detect_transcritical,
    newton_correct,
    trace_branch,
)
from epirep.equilibria import eigenvalues_3x3, equilibrium_point, with_gamma
from epirep.model import ModelParams, SystemState, default_params, jacobian

P = default_params(0.1)

EXPECTED_POINTS = {
    "T0": (0.075, ("E0", "E4")),
    "T1": (0.15, ("E1", "E2")),
    "T2": (0.125, ("E2", "E3")),
    "T3": (0.0625, ("E3", "E4")),
}


class TestTraceBranch:
    def test_unprotected_endemic_branch_follows_closed_form(self):
        br = trace_branch(P, "E2", (0.01, 0.149), 120)
        for s in br.samples:
            assert s.state[0] == pytest.approx(1 - s.gamma / 0.15, abs=1e-12)
            assert s.state[1] == 1.0 and s.state[2] == 0.0
            # stable exactly between the two exchanges at 0.125 and 0.15
            assert s.stable == (0.125 < s.gamma < 0.15)

    def test_disease_free_branches(self):
        e1 = trace_branch(P, "E1", (0.05, 0.25), 60)
        for s in e1.samples:
            assert np.array_equal(s.state, [0.0, 1.0, 0.0])
            assert s.stable == (s.gamma > 0.15)
        e0 = trace_branch(P, "E0", (0.05, 0.25), 60)
        assert all(np.array_equal(s.state, [0.0, 0.0, 0.0]) for s in e0.samples)
        assert not any(s.stable for s in e0.samples)

    def test_nonphysical_segment_truncated_by_default(self):
        br = trace_branch(P, "E2", (0.01, 0.25), 100)
        assert all(s.state[0] >= -1e-12 for s in br.samples)
        assert br.valid_range[1] <= 0.15 + 1e-9
        full = trace_branch(P, "E2", (0.01, 0.25), 100, include_nonphysical=True)
        assert len(full.samples) > len(br.samples)
        assert any(s.state[0] < 0 for s in full.samples)
        assert full.valid_range == br.valid_range

    def test_samples_satisfy_equilibrium_residual(self):
        from epirep.model import vector_field
        br = trace_branch(P, "E3", (0.063, 0.124), 50)
        for s in br.samples:
            p = with_gamma(P, s.gamma)
            f = vector_field(p, SystemState.from_array(s.state)).as_array()
            assert np.abs(f).max() <= 1e-10

    def test_stability_flips_only_at_detected_points(self):
        points = {bp.label: bp.gamma_star for bp in detect_transcritical(P, (0.01, 0.25))}
        br = trace_branch(P, "E2", (0.01, 0.149), 200)
        flips = [
            0.5 * (a.gamma + b.gamma)
            for a, b in zip(br.samples, br.samples[1:])
            if a.stable != b.stable
        ]
        assert len(flips) == 1
        spacing = br.samples[1].gamma - br.samples[0].gamma
        assert abs(flips[0] - points["T2"]) <= spacing

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            trace_branch(P, "E2", (0.1, 0.05), 10)
        with pytest.raises(ValueError):
            trace_branch(P, "E2", (0.05, 0.1), 1)


class TestNewtonCorrect:
    def test_recovers_equilibrium_from_perturbed_predictor(self):
        from epirep.model import vector_field
        rng = np.random.default_rng(2)
        for gamma in (0.05, 0.1, 0.13):
            p = with_gamma(P, gamma)
            for eq_id in ("E2", "E3", "E4"):
                exact = equilibrium_point(p, eq_id)
                x = newton_correct(p, exact + rng.uniform(-1e-3, 1e-3, size=3))
                f = vector_field(p, SystemState.from_array(x)).as_array()
                assert np.abs(f).max() <= 1e-10
                assert np.abs(x - exact).max() <= 1e-6

    def test_exact_point_is_fixed(self):
        exact = equilibrium_point(P, "E3")
        assert np.array_equal(newton_correct(P, exact.copy()), exact)


class TestDetectTranscritical:
    def test_all_four_points_with_correct_pairs(self):
        points = detect_transcritical(P, (0.01, 0.25))
        assert len(points) == 4
        by_label = {bp.label: bp for bp in points}
        for label, (gamma_star, pair) in EXPECTED_POINTS.items():
            bp = by_label[label]
            assert bp.gamma_star == pytest.approx(gamma_star, abs=1e-8)
            assert bp.branches == pair
        # returned sorted by gamma
        gammas = [bp.gamma_star for bp in points]
        assert gammas == sorted(gammas)

    def test_branches_coincide_and_have_zero_eigenvalue(self):
        for bp in detect_transcritical(P, (0.01, 0.25)):
            p = with_gamma(P, bp.gamma_star)
            pa = equilibrium_point(p, bp.branches[0])
            pb = equilibrium_point(p, bp.branches[1])
            assert np.abs(pa - pb).max() <= 1e-7
            for pt in (pa, pb):
                eigs = eigenvalues_3x3(jacobian(p, SystemState.from_array(pt)))
                assert min(abs(z.real) for z in eigs) <= 1e-7

    def test_range_without_crossings_is_empty(self):
        assert detect_transcritical(P, (0.16, 0.30)) == []

    def test_exchange_points_merge_as_protection_becomes_ineffective(self):
        # alpha -> 1 pushes the E0/E4 exchange toward the E1/E2 one
        p = ModelParams(c_P=1.0, alpha=0.999, beta_u=0.3, beta_p=0.15,
                        c_IU=2.0, c_IP=1.0, L=80.0, gamma=0.1)
        points = detect_transcritical(p, (0.1, 0.2))
        by_label = {bp.label: bp for bp in points}
        assert {"T0", "T1"} <= set(by_label)
        gap = abs(by_label["T1"].gamma_star - by_label["T0"].gamma_star)
        assert gap == pytest.approx((1 - 0.999) * 0.15, rel=1e-3)

    def test_exactly_one_stable_branch_off_critical_set(self):
        stable_at = {}  # gamma -> number of stable branches
        for eq_id in ("E0", "E1", "E2", "E3", "E4"):
            br = trace_branch(P, eq_id, (0.011, 0.249), 150)
            for s in br.samples:
                stable_at[s.gamma] = stable_at.get(s.gamma, 0) + (1 if s.stable else 0)
        criticals = [bp.gamma_star for bp in detect_transcritical(P, (0.01, 0.25))]
        for gamma, n_stable in stable_at.items():
            if min(abs(gamma - c) for c in criticals) < 1e-6:
                continue
            assert n_stable == 1, gamma


class TestCsvOutput:
    def test_branch_csv_schema(self):
        br = trace_branch(P, "E2", (0.13, 0.14), 5)
        text = branches_csv([br])
        lines = text.strip().split("\n")
        assert lines[0] == "branch,gamma,y,z_S,z_I,re_lambda_max,stable"
        fields = lines[1].split(",")
        assert fields[0] == "E2"
        assert float(fields[1]) == pytest.approx(0.13)
        assert fields[6] in ("0", "1")

    def test_bifurcation_csv_schema(self):
        points = detect_transcritical(P, (0.14, 0.16))
        text = bifurcations_csv(points)
        lines = text.strip().split("\n")
        assert lines[0] == "label,gamma_star,branch_a,branch_b"
        assert lines[1].startswith("T1,")
