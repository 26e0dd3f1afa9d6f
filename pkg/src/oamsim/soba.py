"""Spin-orbit gates, the spin-orbit Bell-state analyzer, and dense coding.

The analyzer (an even/odd sorter feeding two polarizing splitters, two
spiral plates and two recombining splitters) routes each of the four
single-photon (parity x polarization) Bell states to its own detector:

    psi+ -> D1, psi- -> D2, phi- -> D3, phi+ -> D4.

Running it locally on both photons of a hyperentangled pair identifies all
four polarization Bell states, which is what makes the superdense-coding
round trip deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bell import task_rng
from .elements import (
    Circuit,
    WRAP_GUARD,
    WrapGuardError,
    apply_circuit,
    beam_splitter,
    coincidence_detect,
    half_wave_plate,
    polarizing_bs,
    spiral_phase_plate,
    _sorter_elements,
)
from .hilbert import H, V, ModeKey, PhotonState, TwoPhotonState, SpectrumModel
from .sources import (
    canonical_pair_spectrum,
    hyper_source,
    normalize_spin_orbit_label,
)

__all__ = [
    "POLARIZATION_LABELS",
    "MESSAGE_BITS",
    "BITS_MESSAGE",
    "DETECTOR_LABELS",
    "oc_p_gate",
    "pc_o_gate",
    "build_soba",
    "soba_route",
    "joint_soba",
    "encode_polarization_bell",
    "hbsa_decode",
    "DenseCodingResult",
    "dense_coding_roundtrip",
]

POLARIZATION_LABELS = ("Psi+", "Psi-", "Phi+", "Phi-")
MESSAGE_BITS = {"Psi+": "00", "Psi-": "01", "Phi+": "10", "Phi-": "11"}
BITS_MESSAGE = {bits: label for label, bits in MESSAGE_BITS.items()}
DETECTOR_LABELS = {"D1": "psi+", "D2": "psi-", "D3": "phi-", "D4": "phi+"}

_POL_ALIASES = {"Ψ+": "Psi+", "Ψ−": "Psi-", "Ψ-": "Psi-",
                "Φ+": "Phi+", "Φ−": "Phi-", "Φ-": "Phi-"}


def normalize_polarization_label(label: str) -> str:
    label = _POL_ALIASES.get(label, label)
    if label not in POLARIZATION_LABELS:
        raise ValueError(f"unknown polarization Bell label {label!r}")
    return label


def _wrap_m(m: int, truncation: int) -> tuple[int, bool]:
    span = 2 * truncation + 1
    wrapped = ((m + truncation) % span) - truncation
    return wrapped, wrapped != m


def _apply_keymap(state, slot, action, wrap_guard):
    """Apply a single-photon key permutation to a state slot."""
    if isinstance(state, PhotonState):
        items = ((key, amp, None) for key, amp in state.amplitudes.items())
        make = lambda new_key, old: new_key
    elif isinstance(state, TwoPhotonState):
        if slot not in (1, 2):
            raise ValueError("slot must be 1 or 2 for a two-photon state")
        idx = 0 if slot == 1 else 1
        items = ((key[idx], amp, key) for key, amp in state.amplitudes.items())
        make = (lambda new_key, old: (new_key, old[1])) if idx == 0 else \
               (lambda new_key, old: (old[0], new_key))
    else:
        raise TypeError(f"cannot apply gate to {type(state).__name__}")
    out: dict = {}
    wrapped_weight = 0.0
    for key, amp, old in items:
        new_key, factor, wrapped = action(key, state.truncation)
        if wrapped:
            wrapped_weight += abs(amp * factor) ** 2
        joint = make(new_key, old)
        out[joint] = out.get(joint, 0.0 + 0.0j) + amp * factor
    if wrap_guard is not None and wrapped_weight > wrap_guard:
        raise WrapGuardError(
            f"gate moved weight {wrapped_weight:.3e} across the band edge")
    return type(state)(out, state.truncation)


def _oc_p_action(key: ModeKey, truncation: int):
    # Parity-controlled joint NOT, completed to a permutation at the OAM
    # level: even/H fixed; odd/H -> even/V; even/V -> odd/V; odd/V -> odd/H.
    even = key.m % 2 == 0
    if key.pol == H:
        if even:
            return key, 1.0, False
        m2, wrapped = _wrap_m(key.m + 1, truncation)
        return ModeKey(key.path, V, m2), 1.0, wrapped
    if even:
        m2, wrapped = _wrap_m(key.m + 1, truncation)
        return ModeKey(key.path, V, m2), 1.0, wrapped
    return ModeKey(key.path, H, key.m), 1.0, False


def _pc_o_action(key: ModeKey, truncation: int):
    # Polarization-controlled parity NOT: V polarization shifts m by +1.
    if key.pol == V:
        m2, wrapped = _wrap_m(key.m + 1, truncation)
        return ModeKey(key.path, V, m2), 1.0, wrapped
    return key, 1.0, False


def oc_p_gate(state, slot: int = 1, wrap_guard=WRAP_GUARD):
    """OAM-parity controlled polarization NOT (flips parity alongside)."""
    return _apply_keymap(state, slot, _oc_p_action, wrap_guard)


def pc_o_gate(state, slot: int = 1, wrap_guard=WRAP_GUARD):
    """Polarization-controlled parity NOT: V triggers an order +1 spiral shift."""
    return _apply_keymap(state, slot, _pc_o_action, wrap_guard)


def build_soba() -> Circuit:
    """Spin-orbit Bell-state analyzer with detectors D1..D4."""
    elems = _sorter_elements("in", "even_arm", "odd_arm", "sb_")
    elems.append(half_wave_plate("even_arm", math.pi / 4.0))
    # Even arm: H transmits toward the phi interferometer, V reflects (with
    # a spiral plate) toward the psi interferometer.
    elems.append(polarizing_bs("even_arm", "sb_aux_a", "port5", "port3"))
    elems.append(spiral_phase_plate("port3", +1))
    # Odd arm: H transmits (then shifts to even) for phi, V reflects for psi.
    elems.append(polarizing_bs("odd_arm", "sb_aux_b", "port6", "port4"))
    elems.append(spiral_phase_plate("port6", -1))
    elems.append(beam_splitter("port3", "port4", "D1", "D2"))
    elems.append(beam_splitter("port5", "port6", "D4", "D3"))
    return Circuit("soba", tuple(elems), "in", ("D1", "D2", "D3", "D4"))


_CANONICAL_MS = (0, 1)


def soba_route(state: PhotonState, wrap_guard=WRAP_GUARD) -> dict[str, float]:
    """Detector probabilities for a single photon entering the analyzer."""
    for key in state.amplitudes:
        if key.path != "in" or key.m not in _CANONICAL_MS:
            raise ValueError(
                "analyzer input must live on path 'in' with m in {0, 1}")
    out = apply_circuit(build_soba(), state, wrap_guard=wrap_guard)
    return {d: out.path_probability(d) for d in ("D1", "D2", "D3", "D4")}


def joint_soba(state: TwoPhotonState, wrap_guard=WRAP_GUARD) -> dict[tuple[str, str], float]:
    """Coincidence probabilities of local analyzers on both photons."""
    circuit = build_soba()
    out = apply_circuit(circuit, state, slot=1, wrap_guard=wrap_guard)
    out = apply_circuit(circuit, out, slot=2, wrap_guard=wrap_guard)
    dets = ("D1", "D2", "D3", "D4")
    return {(a, b): coincidence_detect(out, a, b) for a in dets for b in dets}


def encode_polarization_bell(s: TwoPhotonState, label: str) -> TwoPhotonState:
    """Encode two bits by a polarization unitary on photon 1.

    Starting from the (HH+VV)/sqrt2 polarization factor: identity keeps
    Phi+, Z gives Phi-, X gives Psi+, and X followed by Z gives Psi-.  The
    OAM factor is untouched.
    """
    label = normalize_polarization_label(label)
    flip = label in ("Psi+", "Psi-")
    sign = label in ("Phi-", "Psi-")
    amps: dict = {}
    for (k1, k2), amp in s.amplitudes.items():
        pol = k1.pol
        if flip:
            pol = V if pol == H else H
        if sign and pol == V:
            amp = -amp
        key = (ModeKey(k1.path, pol, k1.m), k2)
        amps[key] = amps.get(key, 0.0 + 0.0j) + amp
    return TwoPhotonState(amps, s.truncation)


def hbsa_decode(r1: str, r2: str) -> str:
    """Polarization Bell label from the two local spin-orbit outcomes.

    Same-letter outcome pairs decode to the Psi family, mixed pairs to Phi;
    the product of the outcome signs fixes the +/-.  All 16 pairs decode,
    four per message.
    """
    r1 = normalize_spin_orbit_label(r1)
    r2 = normalize_spin_orbit_label(r2)
    same_letter = r1[:3] == r2[:3]
    family = "Psi" if same_letter else "Phi"
    plus = (r1[-1] == "+") == (r2[-1] == "+")
    return family + ("+" if plus else "-")


@dataclass(frozen=True)
class DenseCodingResult:
    sent: str
    label: str
    message_probs: dict[str, float]
    pair_probs: dict[tuple[str, str], float] = field(repr=False)
    accuracy: float
    mode: str = "analytic"
    shots: int = 0
    seed: int | None = None
    counts: dict[tuple[str, str], int] | None = field(default=None, repr=False)


def dense_coding_roundtrip(message: str, shots: int = 0, seed: int | None = None,
                           truncation: int = 8,
                           spectrum: SpectrumModel | None = None) -> DenseCodingResult:
    """Hyperentangled pair -> polarization encoding -> local analyzers -> decode.

    Analytic mode returns the exact decode distribution; sampled mode draws
    detector pairs from one seeded multinomial.
    """
    if message not in BITS_MESSAGE:
        raise ValueError(f"message must be two bits 00..11, got {message!r}")
    label = BITS_MESSAGE[message]
    spectrum = spectrum if spectrum is not None else canonical_pair_spectrum()
    pair = hyper_source(spectrum, truncation)
    encoded = encode_polarization_bell(pair, label)
    pair_probs = joint_soba(encoded)

    message_probs = {bits: 0.0 for bits in BITS_MESSAGE}
    for (da, db), p in pair_probs.items():
        decoded = hbsa_decode(DETECTOR_LABELS[da], DETECTOR_LABELS[db])
        message_probs[MESSAGE_BITS[decoded]] += p

    if shots <= 0:
        return DenseCodingResult(message, label, message_probs, pair_probs,
                                 accuracy=message_probs[message])
    if seed is None:
        raise ValueError("sampled mode requires a seed")
    keys = sorted(pair_probs)
    probs = np.clip(np.array([pair_probs[k] for k in keys]), 0.0, None)
    probs[probs < 1e-15] = 0.0
    probs = probs / probs.sum()
    draws = task_rng(seed, 3).multinomial(int(shots), probs)
    counts = {k: int(n) for k, n in zip(keys, draws) if n}
    correct = 0
    sampled_probs = {bits: 0.0 for bits in BITS_MESSAGE}
    for (da, db), n in counts.items():
        decoded = hbsa_decode(DETECTOR_LABELS[da], DETECTOR_LABELS[db])
        bits = MESSAGE_BITS[decoded]
        sampled_probs[bits] += n / shots
        if bits == message:
            correct += n
    return DenseCodingResult(message, label, sampled_probs, pair_probs,
                             accuracy=correct / shots, mode="sampled",
                             shots=int(shots), seed=int(seed), counts=counts)
