import json
import math

import numpy as np
import pytest

from oamsim.hilbert import (
    EVEN,
    H,
    ODD,
    V,
    ModeBasis,
    ModeKey,
    NormalizationError,
    PhotonState,
    SpectrumModel,
    TruncationError,
    TwoPhotonState,
    inner_product,
    mode,
    parity,
    parity_marginals,
    state_from_json,
    state_to_json,
    state_to_records,
)
from helpers import random_two_photon

SQ2 = 1.0 / math.sqrt(2.0)


@pytest.mark.parametrize("m,expected", [(0, EVEN), (-3, ODD), (4, EVEN)])
def test_parity_examples(m, expected):
    assert parity(m) == expected


@pytest.mark.parametrize("m", range(-9, 10))
def test_parity_total_and_sign_independent(m):
    assert parity(m) == parity(-m)
    assert parity(m) in (EVEN, ODD)
    assert (parity(m) == EVEN) == (m % 2 == 0)


class TestInnerProduct:
    def test_orthonormality(self):
        a = PhotonState({mode(1): 1.0}, 4)
        b = PhotonState({mode(2): 1.0}, 4)
        assert inner_product(a, a) == pytest.approx(1.0)
        assert inner_product(a, b) == 0.0

    def test_orthogonal_superpositions(self):
        plus = PhotonState({mode(0): SQ2, mode(1): SQ2}, 4)
        minus = PhotonState({mode(0): SQ2, mode(1): -SQ2}, 4)
        assert abs(inner_product(plus, minus)) < 1e-15

    def test_conjugate_linear_first_argument(self):
        rng = np.random.default_rng(3)
        x = PhotonState({mode(0): complex(*rng.normal(size=2)),
                         mode(1): complex(*rng.normal(size=2))}, 4)
        y = PhotonState({mode(0): complex(*rng.normal(size=2)),
                         mode(1): complex(*rng.normal(size=2))}, 4)
        z = 0.3 - 1.7j
        lhs = inner_product(x.scaled(z), y)
        assert lhs == pytest.approx(z.conjugate() * inner_product(x, y))
        assert inner_product(x, x).real >= 0
        assert abs(inner_product(x, x).imag) < 1e-15

    def test_mismatched_truncation_rejected(self):
        a = PhotonState({mode(1): 1.0}, 4)
        b = PhotonState({mode(1): 1.0}, 5)
        with pytest.raises(TruncationError):
            inner_product(a, b)


class TestStates:
    def test_out_of_band_mode_rejected(self):
        with pytest.raises(TruncationError):
            PhotonState({mode(5): 1.0}, 4)
        with pytest.raises(TruncationError):
            TwoPhotonState({(mode(0), mode(9)): 1.0}, 8)

    def test_normalize_hits_unit_norm(self):
        s = PhotonState({mode(0): 3.0, mode(1): 4.0j}, 2).normalized()
        assert abs(s.norm_sq() - 1.0) < 1e-12

    def test_tiny_amplitudes_pruned(self):
        s = PhotonState({mode(0): 1.0, mode(1): 1e-16}, 2)
        assert mode(1) not in s.amplitudes

    def test_zero_state_cannot_normalize(self):
        with pytest.raises(NormalizationError):
            PhotonState({}, 2).normalized()

    def test_mode_key_ordering(self):
        keys = [mode(1, V, "b"), mode(-2, H, "a"), mode(0, H, "b"), mode(3, H, "a")]
        ordered = sorted(keys)
        assert ordered == [mode(-2, H, "a"), mode(3, H, "a"),
                           mode(0, H, "b"), mode(1, V, "b")]

    def test_items_iterates_in_canonical_order(self):
        s = PhotonState({mode(2): 0.5, mode(-1): 0.5, mode(0, V): 0.5}, 4)
        ks = [k for k, _ in s.items()]
        assert ks == sorted(ks)


class TestParityMarginals:
    def test_even_odd_entangled_pair(self):
        amps = {(mode(0), mode(1)): SQ2, (mode(1), mode(0)): SQ2}
        table = parity_marginals(TwoPhotonState(amps, 4))
        assert table[(EVEN, ODD)] == pytest.approx(0.5, abs=1e-12)
        assert table[(ODD, EVEN)] == pytest.approx(0.5, abs=1e-12)
        assert table[(EVEN, EVEN)] == 0.0
        assert table[(ODD, ODD)] == 0.0

    def test_product_state(self):
        table = parity_marginals(TwoPhotonState({(mode(2), mode(4)): 1.0}, 5))
        assert table[(EVEN, EVEN)] == pytest.approx(1.0, abs=1e-12)

    def test_rejects_unnormalized(self):
        with pytest.raises(NormalizationError):
            parity_marginals(TwoPhotonState({(mode(0), mode(0)): 0.7}, 2))

    @pytest.mark.parametrize("seed", range(5))
    def test_sums_to_one(self, seed):
        rng = np.random.default_rng(seed)
        s = random_two_photon(rng, 5)
        assert sum(parity_marginals(s).values()) == pytest.approx(1.0, abs=1e-12)


class TestSpectrumModel:
    @pytest.mark.parametrize("model", [SpectrumModel.uniform(),
                                       SpectrumModel.gaussian(2.5)])
    def test_realization_normalized(self, model):
        coeffs = model.realize(6)
        assert sum(abs(c) ** 2 for c in coeffs.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(c.imag == 0 and c.real >= 0 for c in coeffs.values())

    def test_explicit_keeps_complex_values(self):
        model = SpectrumModel.explicit({0: 1.0, 1: 1.0j})
        coeffs = model.realize(3)
        assert coeffs[1] == pytest.approx(1.0j / math.sqrt(2.0))

    def test_explicit_out_of_band_rejected(self):
        model = SpectrumModel.explicit({7: 1.0})
        with pytest.raises(TruncationError):
            model.realize(6)

    def test_gaussian_out_of_band_weight(self):
        model = SpectrumModel.gaussian(3.0)
        band = 4
        # independent tail sum over a wide window
        w = [math.exp(-(m / 3.0) ** 2) for m in range(-200, 201)]
        outside = sum(x for m, x in zip(range(-200, 201), w) if abs(m) > band)
        expected = outside / sum(w)
        assert model.out_of_band_weight(band) == pytest.approx(expected, rel=1e-9)
        assert SpectrumModel.uniform().out_of_band_weight(band) == 0.0

    def test_dict_round_trip(self):
        for model in (SpectrumModel.uniform(), SpectrumModel.gaussian(1.25),
                      SpectrumModel.explicit({-2: 0.5, 1: 0.5j})):
            assert SpectrumModel.from_dict(model.to_dict()) == model

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError):
            SpectrumModel("triangular")
        with pytest.raises(ValueError):
            SpectrumModel.gaussian(-1.0)


class TestSerialization:
    def test_single_photon_round_trip(self):
        s = PhotonState({mode(0): SQ2, mode(1, V): SQ2 * 1j}, 4)
        text = state_to_json(s)
        back = state_from_json(text, 4)
        assert back.amplitudes == s.amplitudes

    def test_two_photon_round_trip(self):
        rng = np.random.default_rng(11)
        s = random_two_photon(rng, 4)
        back = state_from_json(state_to_json(s), 4)
        for key, amp in s.amplitudes.items():
            assert back.get(key) == pytest.approx(amp, abs=1e-16)

    def test_records_in_canonical_order(self):
        s = PhotonState({mode(3): 0.5, mode(-1): 0.5, mode(0, V): 0.5,
                         mode(2, H, "aux"): 0.5}, 4)
        recs = state_to_records(s)
        keys = [ModeKey(r["path"], r["pol"], r["m"]) for r in recs]
        assert keys == sorted(keys)

    def test_floats_carry_17_significant_digits(self):
        s = PhotonState({mode(0): 1.0 / 3.0}, 2)
        text = state_to_json(s)
        assert "0.33333333333333331" in text
        # and the text parses back to the exact double
        assert json.loads(text)[0]["re"] == 1.0 / 3.0


class TestModeBasis:
    def test_round_trip(self):
        basis = ModeBasis(("in", "out"), 3)
        s = PhotonState({mode(1): SQ2, mode(-2, V, "out"): SQ2}, 3)
        assert basis.from_vector(basis.to_vector(s)).amplitudes == s.amplitudes

    def test_dimension_guard(self):
        paths = [f"p{i}" for i in range(100)]
        with pytest.raises(ValueError):
            ModeBasis(paths, 50)
