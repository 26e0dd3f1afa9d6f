"""Even/odd projections, two-photon coincidences, CHSH and key exchange.

Alice's analyzer projects onto cos(theta)|even> + sin(theta)|odd> per OAM
pair.  Bob's analyzer is referenced with the even/odd roles interchanged
(his angle is measured from the odd axis), which matches the source's
even/odd anticorrelation: at equal settings every coincidence lands in the
paired ports, and for symmetric real spectra the normalized coincidence
obeys C(theta, chi) = cos^2(theta - chi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elements import apply_circuit, build_projection, coincidence_detect, detect
from .hilbert import V, PhotonState, TwoPhotonState

__all__ = [
    "TSIRELSON",
    "ALICE_KEY_ANGLES",
    "BOB_KEY_ANGLES",
    "ProjectionSetting",
    "project_single",
    "CoincidenceTable",
    "coincidence",
    "projector_coincidence",
    "CHSHResult",
    "chsh",
    "EkertResult",
    "ekert_run",
    "task_rng",
]

TSIRELSON = 2.0 * math.sqrt(2.0)

# Standard entanglement-based key-exchange settings: the overlapping pair of
# angles gives key bits, the outer 2x2 block is the CHSH witness.
ALICE_KEY_ANGLES = (0.0, math.pi / 8.0, math.pi / 4.0)
BOB_KEY_ANGLES = (math.pi / 8.0, math.pi / 4.0, 3.0 * math.pi / 8.0)
_MATCHED = {(1, 0), (2, 1)}
_CHSH_COMBOS = ((0, 0), (0, 2), (2, 0), (2, 2))

VARIANTS = ("tunable_bs", "polarization")


def task_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic sub-stream for (seed, task indices); thread-count neutral."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class ProjectionSetting:
    """Analyzer angle in radians plus the hardware variant realizing it."""

    theta: float
    variant: str = "tunable_bs"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown projection variant {self.variant!r}")


def _require_h_polarized(state, variant: str) -> None:
    if variant != "polarization":
        return
    if isinstance(state, PhotonState):
        pols = (key.pol for key in state.amplitudes)
    else:
        pols = (k.pol for pair in state.amplitudes for k in pair)
    if any(pol == V for pol in pols):
        raise ValueError(
            "polarization-assisted projection needs H-polarized input")


def project_single(state: PhotonState, setting: ProjectionSetting):
    """Intensities (I1, I2) at the theta and theta-perp ports."""
    _require_h_polarized(state, setting.variant)
    circuit = build_projection(setting.theta, setting.variant)
    out = apply_circuit(circuit, state)
    return detect(out, "p_theta"), detect(out, "p_theta_perp")


def _bob_angle(chi: float) -> float:
    # Bob's odd-axis reference realized as the complementary analyzer angle.
    return math.pi / 2.0 - chi


def _joint_probs(s: TwoPhotonState, theta: float, chi: float, variant: str):
    """Joint detector probabilities (d13, d14, d23, d24) from the circuits."""
    _require_h_polarized(s, variant)
    alice = build_projection(theta, variant)
    bob = build_projection(_bob_angle(chi), variant)
    out = apply_circuit(alice, s, slot=1)
    out = apply_circuit(bob, out, slot=2)
    d13 = coincidence_detect(out, "p_theta", "p_theta")
    d14 = coincidence_detect(out, "p_theta", "p_theta_perp")
    d23 = coincidence_detect(out, "p_theta_perp", "p_theta")
    d24 = coincidence_detect(out, "p_theta_perp", "p_theta_perp")
    return d13, d14, d23, d24


def projector_coincidence(s: TwoPhotonState, theta: float, chi: float):
    """Direct projector contraction <Psi| P_theta (x) P_chi |Psi> and partners.

    Independent of the circuit machinery: amplitudes are contracted against
    the analyzer vectors bucket by bucket (one bucket per OAM pair, path and
    polarization), then squared.  Returns (d13, d14, d23, d24).
    """
    ct, st = math.cos(theta), math.sin(theta)
    cc, sc = math.cos(chi), math.sin(chi)
    buckets: dict[tuple, np.ndarray] = {}
    for (k1, k2), amp in s.amplitudes.items():
        j, even1 = divmod(k1.m, 2)
        l, even2 = divmod(k2.m, 2)
        # Alice weights (theta from the even axis), Bob weights (chi from odd)
        a1 = ct if even1 == 0 else st
        a2 = st if even1 == 0 else -ct
        b1 = sc if even2 == 0 else cc
        b2 = cc if even2 == 0 else -sc
        tag = (j, l, k1.pol, k2.pol, k1.path, k2.path)
        acc = buckets.setdefault(tag, np.zeros(4, dtype=complex))
        acc += amp * np.array([a1 * b1, a1 * b2, a2 * b1, a2 * b2])
    totals = np.zeros(4)
    for acc in buckets.values():
        totals += np.abs(acc) ** 2
    return tuple(float(x) for x in totals)


def _clean_probs(probs) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p[p < 1e-15] = 0.0
    total = p.sum()
    if total <= 0.0:
        raise ValueError("all coincidence probabilities vanish")
    return p / total


@dataclass(frozen=True)
class CoincidenceTable:
    """Coincidence data for one (theta, chi) setting pair.

    d13..d24 are the exact joint detection probabilities (they sum to one);
    in sampled mode `counts` carries one multinomial draw over them.
    """

    theta: float
    chi: float
    d13: float
    d14: float
    d23: float
    d24: float
    mode: str = "analytic"
    shots: int = 0
    seed: int | None = None
    counts: tuple[int, int, int, int] | None = None

    def joint(self) -> dict[str, float]:
        return {"D13": self.d13, "D14": self.d14, "D23": self.d23, "D24": self.d24}

    def correlation(self) -> float:
        """C(theta, chi): Bob's paired-port fraction of Alice's theta-port counts."""
        return self.d13 / (self.d13 + self.d14)

    def correlations(self) -> dict[str, float]:
        a1 = self.d13 + self.d14
        a2 = self.d23 + self.d24
        return {
            "C(theta,chi)": self.d13 / a1,
            "C(theta,chi_perp)": self.d14 / a1,
            "C(theta_perp,chi)": self.d23 / a2,
            "C(theta_perp,chi_perp)": self.d24 / a2,
        }

    def e_value(self) -> float:
        """Correlation parameter from the four-coincidence ratio."""
        if self.mode == "sampled" and self.counts is not None:
            n13, n14, n23, n24 = self.counts
            total = n13 + n14 + n23 + n24
            if total == 0:
                raise ValueError("no sampled coincidences")
            return (n13 + n24 - n14 - n23) / total
        total = self.d13 + self.d14 + self.d23 + self.d24
        if total < 1e-12:
            raise ValueError("all coincidence probabilities vanish")
        return (self.d13 + self.d24 - self.d14 - self.d23) / total


def coincidence(s: TwoPhotonState, theta: float, chi: float,
                variant: str = "tunable_bs", shots: int = 0,
                seed: int | None = None) -> CoincidenceTable:
    """Coincidence table at one setting pair; shots > 0 samples a multinomial."""
    d13, d14, d23, d24 = _joint_probs(s, theta, chi, variant)
    if shots <= 0:
        return CoincidenceTable(theta, chi, d13, d14, d23, d24)
    if seed is None:
        raise ValueError("sampled mode requires a seed")
    probs = _clean_probs([d13, d14, d23, d24])
    counts = task_rng(seed, 2).multinomial(int(shots), probs)
    return CoincidenceTable(theta, chi, d13, d14, d23, d24, mode="sampled",
                            shots=int(shots), seed=int(seed),
                            counts=tuple(int(c) for c in counts))


@dataclass(frozen=True)
class CHSHResult:
    settings: tuple[float, float, float, float]
    e_values: dict[str, float]
    b: float
    sigma: float | None = None
    tables: tuple[CoincidenceTable, ...] = field(default=(), repr=False)


def chsh(s: TwoPhotonState, theta: float, theta2: float, chi: float, chi2: float,
         variant: str = "tunable_bs", shots: int = 0,
         seed: int | None = None) -> CHSHResult:
    """CHSH combination B = |E(t,c) - E(t,c') + E(t',c) + E(t',c')|."""
    pairs = ((theta, chi), (theta, chi2), (theta2, chi), (theta2, chi2))
    tables = []
    for i, (t, c) in enumerate(pairs):
        d = _joint_probs(s, t, c, variant)
        if shots > 0:
            if seed is None:
                raise ValueError("sampled mode requires a seed")
            counts = task_rng(seed, 2, i).multinomial(int(shots), _clean_probs(d))
            tables.append(CoincidenceTable(t, c, *d, mode="sampled",
                                           shots=int(shots), seed=int(seed),
                                           counts=tuple(int(x) for x in counts)))
        else:
            tables.append(CoincidenceTable(t, c, *d))
    e = [tab.e_value() for tab in tables]
    b = abs(e[0] - e[1] + e[2] + e[3])
    sigma = None
    if shots > 0:
        var = sum((1.0 - ei * ei) / shots for ei in e)
        sigma = math.sqrt(var)
    elif b > TSIRELSON + 1e-9:
        raise AssertionError(f"analytic CHSH value {b} exceeds the quantum bound")
    e_values = {
        "E(theta,chi)": e[0],
        "E(theta,chi2)": e[1],
        "E(theta2,chi)": e[2],
        "E(theta2,chi2)": e[3],
    }
    return CHSHResult((theta, theta2, chi, chi2), e_values, b, sigma, tuple(tables))


@dataclass(frozen=True)
class EkertResult:
    rounds: int
    seed: int
    key_a: str
    key_b: str
    qber: float | None
    chsh_estimate: float | None
    chsh_sigma: float | None
    matched_rounds: int
    chsh_rounds: int


def ekert_run(s: TwoPhotonState, rounds: int, seed: int,
              variant: str = "tunable_bs") -> EkertResult:
    """Entanglement-based key exchange with a CHSH security estimate.

    Per round Alice draws from {0, pi/8, pi/4} and Bob from
    {pi/8, pi/4, 3pi/8}.  Matched angles yield key bits (Bob flips his bit,
    so an anticorrelated source gives identical sifted keys); the four
    outer setting pairs accumulate the CHSH estimate.  Outcomes are sampled
    from one deterministic sub-stream per setting pair, so results do not
    depend on any parallel scheduling.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    base = task_rng(seed, 0)
    a_idx = base.integers(0, 3, size=rounds)
    b_idx = base.integers(0, 3, size=rounds)

    outcome = np.full(rounds, -1, dtype=np.int64)
    combo_counts: dict[tuple[int, int], np.ndarray] = {}
    for ai in range(3):
        for bi in range(3):
            here = np.flatnonzero((a_idx == ai) & (b_idx == bi))
            if here.size == 0:
                continue
            probs = _clean_probs(_joint_probs(
                s, ALICE_KEY_ANGLES[ai], BOB_KEY_ANGLES[bi], variant))
            draws = task_rng(seed, 1, ai, bi).choice(4, size=here.size, p=probs)
            outcome[here] = draws
            combo_counts[(ai, bi)] = np.bincount(draws, minlength=4)

    matched = np.zeros(rounds, dtype=bool)
    for ai, bi in _MATCHED:
        matched |= (a_idx == ai) & (b_idx == bi)
    alice_bits = (outcome[matched] // 2).astype(int)
    bob_bits = (outcome[matched] % 2).astype(int)  # port flip folded in
    key_a = "".join(map(str, alice_bits))
    key_b = "".join(map(str, bob_bits))
    qber = float(np.mean(alice_bits != bob_bits)) if matched.any() else None

    e_hat = {}
    sigma_sq = 0.0
    for combo in _CHSH_COMBOS:
        counts = combo_counts.get(combo)
        if counts is None or counts.sum() == 0:
            e_hat = None
            break
        n = counts.sum()
        e = (counts[0] + counts[3] - counts[1] - counts[2]) / n
        e_hat[combo] = e
        sigma_sq += (1.0 - e * e) / n
    if e_hat is None:
        estimate, sigma = None, None
        chsh_rounds = int(sum(c.sum() for k, c in combo_counts.items()
                              if k in _CHSH_COMBOS))
    else:
        estimate = abs(e_hat[(0, 0)] - e_hat[(0, 2)]
                       + e_hat[(2, 0)] + e_hat[(2, 2)])
        sigma = math.sqrt(sigma_sq)
        chsh_rounds = int(sum(combo_counts[k].sum() for k in _CHSH_COMBOS))
    return EkertResult(
        rounds=int(rounds),
        seed=int(seed),
        key_a=key_a,
        key_b=key_b,
        qber=qber,
        chsh_estimate=estimate,
        chsh_sigma=sigma,
        matched_rounds=int(matched.sum()),
        chsh_rounds=chsh_rounds,
    )
