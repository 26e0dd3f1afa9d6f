import math

import numpy as np
import pytest

from oamsim.bell import (
    ProjectionSetting,
    TSIRELSON,
    chsh,
    coincidence,
    ekert_run,
    project_single,
    projector_coincidence,
    task_rng,
    _joint_probs,
)
from oamsim.hilbert import PhotonState, SpectrumModel, mode
from oamsim.sources import PRODUCT_HH, SourceSpec, spdc
from helpers import random_oam_state, random_two_photon

SQ2 = 1.0 / math.sqrt(2.0)

MAX_SETTINGS = (0.0, math.pi / 4.0, math.pi / 8.0, 3.0 * math.pi / 8.0)


def vortex_state(truncation=8, spectrum=None):
    spectrum = spectrum or SpectrumModel.uniform()
    return spdc(SourceSpec(1, spectrum, PRODUCT_HH, truncation))


class TestProjectSingle:
    def test_aligned_projector(self):
        s = PhotonState.from_oam({0: SQ2, 1: SQ2}, 8)
        i1, i2 = project_single(s, ProjectionSetting(math.pi / 4.0))
        assert i1 == pytest.approx(1.0, abs=1e-12)
        assert i2 == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_zero_angle_reads_even_weight(self, seed):
        rng = np.random.default_rng(seed)
        s = random_oam_state(rng, 6, modes=range(-4, 5))
        i1, _ = project_single(s, ProjectionSetting(0.0))
        even = sum(abs(a) ** 2 for k, a in s.amplitudes.items() if k.m % 2 == 0)
        assert i1 == pytest.approx(even, abs=1e-12)

    def test_skewed_qubit_value(self):
        s = PhotonState.from_oam({0: 0.6, 1: 0.8}, 8)
        i1, i2 = project_single(s, ProjectionSetting(math.pi / 4.0))
        assert i1 == pytest.approx(0.98, abs=1e-12)
        assert i2 == pytest.approx(0.02, abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_completeness(self, seed):
        rng = np.random.default_rng(40 + seed)
        s = random_oam_state(rng, 6, modes=range(-4, 5))
        theta = float(rng.uniform(0, math.pi))
        i1, i2 = project_single(s, ProjectionSetting(theta))
        assert i1 + i2 == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_variant_equivalence(self, seed):
        rng = np.random.default_rng(500 + seed)
        s = random_oam_state(rng, 6, modes=range(-4, 5))
        for theta in rng.uniform(0, math.pi, size=5):
            a = project_single(s, ProjectionSetting(float(theta), "tunable_bs"))
            b = project_single(s, ProjectionSetting(float(theta), "polarization"))
            assert a[0] == pytest.approx(b[0], abs=1e-10)
            assert a[1] == pytest.approx(b[1], abs=1e-10)

    def test_polarization_variant_requires_h(self):
        s = PhotonState({mode(0, "V"): 1.0}, 4)
        with pytest.raises(ValueError):
            project_single(s, ProjectionSetting(0.3, "polarization"))

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            ProjectionSetting(0.1, "holographic")


class TestCoincidence:
    def test_half_way_settings(self):
        tab = coincidence(vortex_state(), 0.0, math.pi / 8.0)
        assert tab.correlation() == pytest.approx(math.cos(math.pi / 8.0) ** 2, abs=1e-9)
        assert tab.correlation() == pytest.approx(0.8535533905932737, abs=1e-9)

    def test_equal_settings_coincide(self):
        tab = coincidence(vortex_state(), 0.7, 0.7)
        assert tab.correlation() == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_settings(self):
        tab = coincidence(vortex_state(), 0.0, math.pi / 2.0)
        assert tab.correlation() == pytest.approx(0.0, abs=1e-9)

    def test_joint_probabilities_sum_to_one(self):
        tab = coincidence(vortex_state(), 0.3, 1.1)
        assert sum(tab.joint().values()) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_cosine_squared_law(self, k):
        state = vortex_state(truncation=k)
        for theta in np.linspace(0, math.pi, 7):
            for chi_ in np.linspace(0, math.pi, 7):
                tab = coincidence(state, float(theta), float(chi_))
                assert tab.correlation() == pytest.approx(
                    math.cos(theta - chi_) ** 2, abs=1e-9)

    @pytest.mark.parametrize("seed", range(8))
    def test_circuit_matches_projector_contraction(self, seed):
        rng = np.random.default_rng(70 + seed)
        spectrum = SpectrumModel.gaussian(float(rng.uniform(0.5, 4.0)))
        state = vortex_state(truncation=8, spectrum=spectrum)
        theta = float(rng.uniform(0, math.pi))
        chi_ = float(rng.uniform(0, math.pi))
        circ = _joint_probs(state, theta, chi_, "tunable_bs")
        direct = projector_coincidence(state, theta, chi_)
        for a, b in zip(circ, direct):
            assert a == pytest.approx(b, abs=1e-10)

    @pytest.mark.parametrize("seed", range(4))
    def test_no_signaling(self, seed):
        rng = np.random.default_rng(90 + seed)
        state = vortex_state()
        theta = float(rng.uniform(0, math.pi))
        marginals = []
        for chi_ in rng.uniform(0, math.pi, size=5):
            d13, d14, _, _ = _joint_probs(state, theta, float(chi_), "tunable_bs")
            marginals.append(d13 + d14)
        assert max(marginals) - min(marginals) < 1e-10

    def test_sampled_counts(self):
        tab = coincidence(vortex_state(), 0.0, math.pi / 8.0, shots=2000, seed=9)
        assert tab.mode == "sampled"
        assert sum(tab.counts) == 2000
        assert tab.seed == 9

    def test_sampling_requires_seed(self):
        with pytest.raises(ValueError):
            coincidence(vortex_state(), 0.0, 0.1, shots=10)


class TestCHSH:
    def test_maximal_violation(self):
        result = chsh(vortex_state(), *MAX_SETTINGS)
        assert result.b == pytest.approx(TSIRELSON, abs=1e-9)

    def test_identical_settings(self):
        result = chsh(vortex_state(), 0.0, 0.0, 0.0, 0.0)
        assert result.b == pytest.approx(2.0, abs=1e-9)

    def test_sampled_estimate_within_5_sigma(self):
        result = chsh(vortex_state(), *MAX_SETTINGS, shots=100_000, seed=23)
        assert result.sigma is not None
        assert abs(result.b - TSIRELSON) < 5.0 * result.sigma

    @pytest.mark.parametrize("seed", range(6))
    def test_quantum_bound_on_random_states(self, seed):
        rng = np.random.default_rng(300 + seed)
        state = random_two_photon(rng, 4, n_terms=8, margin=2)
        angles = rng.uniform(0, math.pi, size=4)
        result = chsh(state, *map(float, angles))
        assert result.b <= TSIRELSON + 1e-9

    def test_e_values_consistent_with_tables(self):
        result = chsh(vortex_state(), *MAX_SETTINGS)
        for key, table in zip(("E(theta,chi)", "E(theta,chi2)",
                               "E(theta2,chi)", "E(theta2,chi2)"), result.tables):
            assert result.e_values[key] == pytest.approx(table.e_value())


class TestEkert:
    def test_ideal_run(self):
        result = ekert_run(vortex_state(), rounds=4000, seed=77)
        assert result.qber == 0.0
        assert result.key_a == result.key_b
        assert len(result.key_a) == result.matched_rounds
        assert abs(result.chsh_estimate - TSIRELSON) < 5.0 * result.chsh_sigma

    def test_deterministic_under_seed(self):
        a = ekert_run(vortex_state(), rounds=500, seed=4)
        b = ekert_run(vortex_state(), rounds=500, seed=4)
        assert a == b

    def test_single_round_without_matched_bases(self):
        state = vortex_state()
        for seed in range(50):
            result = ekert_run(state, rounds=1, seed=seed)
            if result.matched_rounds == 0:
                assert result.key_a == "" and result.key_b == ""
                assert result.qber is None
                break
        else:
            pytest.fail("no seed produced a mismatched single round")

    def test_rejects_zero_rounds(self):
        with pytest.raises(ValueError):
            ekert_run(vortex_state(), rounds=0, seed=1)

    def test_gaussian_spectrum_also_ideal(self):
        state = vortex_state(spectrum=SpectrumModel.gaussian(2.0))
        result = ekert_run(state, rounds=1500, seed=5)
        assert result.qber == 0.0
        assert result.key_a == result.key_b


def test_task_rng_streams_are_independent_of_order():
    a = task_rng(5, 1, 2).random(4)
    b = task_rng(5, 1, 3).random(4)
    a2 = task_rng(5, 1, 2).random(4)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)
