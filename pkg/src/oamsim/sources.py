"""Initial states: down-conversion pairs, hyperentangled pairs, spin-orbit states.

Down-conversion of a pump of OAM order p produces photon pairs whose OAM
indices satisfy m1 + m2 = p exactly.  A Gaussian pump (order 0) yields
|m>|-m> correlations; a first-order vortex pump yields |m>|1-m>, which in
the even/odd coarse-graining is the maximally entangled state
(|even>|odd> + |odd>|even>)/sqrt(2).

Sources populate only OAM indices well inside the truncation band
(|m| <= max(1, K - 2)), so the order +/-1 spiral plates used by every
analyzer never push weight across the band edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .hilbert import (
    EVEN,
    H,
    ODD,
    V,
    ModeKey,
    PhotonState,
    SpectrumModel,
    TruncationError,
    TwoPhotonState,
    mode,
    parity,
)

__all__ = [
    "PRODUCT_HH",
    "BELL_PHI_PLUS",
    "SourceSpec",
    "source_band",
    "spdc",
    "hyper_source",
    "hybrid_two_photon",
    "prepare_single_photon_bell",
    "postselect_partner",
    "vortex_symmetric",
    "canonical_pair_spectrum",
    "SPIN_ORBIT_STATES",
]

PRODUCT_HH = "product_hh"
BELL_PHI_PLUS = "bell_phi_plus"

# Canonical parity representatives used whenever a protocol needs a concrete
# qubit embedding: even -> m=0, odd -> m=1.
EVEN_M = 0
ODD_M = 1


@dataclass(frozen=True)
class SourceSpec:
    """Pump order, spectral model and polarization mode of a pair source."""

    pump_order: int
    spectrum: SpectrumModel
    polarization_mode: str = PRODUCT_HH
    truncation: int = 8

    def __post_init__(self):
        if self.pump_order not in (0, 1):
            raise ValueError("pump_order must be 0 (Gaussian) or 1 (vortex)")
        if self.polarization_mode not in (PRODUCT_HH, BELL_PHI_PLUS):
            raise ValueError(f"unknown polarization mode {self.polarization_mode!r}")
        if self.truncation < 1:
            raise ValueError("truncation band must satisfy K >= 1")

    def to_dict(self) -> dict:
        return {
            "pump_order": self.pump_order,
            "spectrum": self.spectrum.to_dict(),
            "polarization_mode": self.polarization_mode,
            "truncation": self.truncation,
        }

    @staticmethod
    def from_dict(d) -> "SourceSpec":
        return SourceSpec(
            pump_order=int(d["pump_order"]),
            spectrum=SpectrumModel.from_dict(d["spectrum"]),
            polarization_mode=str(d.get("polarization_mode", PRODUCT_HH)),
            truncation=int(d.get("truncation", 8)),
        )


def source_band(truncation: int) -> int:
    """Largest |m| a source populates; leaves spiral-plate headroom."""
    return max(1, truncation - 2)


def canonical_pair_spectrum() -> SpectrumModel:
    """Explicit spectrum selecting only the canonical (m=0, m=1) pair."""
    r = 1.0 / math.sqrt(2.0)
    return SpectrumModel.explicit({EVEN_M: r, ODD_M: r})


def _vortex_pair_indices(band: int) -> list[int]:
    # Pair index k groups OAM modes (2k, 2k+1) on photon 1, which by OAM
    # conservation puts photon 2 on (1-2k, -2k); all four must fit the band.
    return [k for k in range(-band, band + 1) if 2 * abs(k) + 1 <= band]


def _vortex_oam_terms(spectrum: SpectrumModel, band: int):
    """OAM amplitude terms (m1, m2, c) for a first-order vortex pump."""
    if spectrum.kind == "explicit":
        terms = []
        for m, c in spectrum.realize(band).items():
            if abs(1 - m) > band:
                raise TruncationError(
                    f"partner mode m={1 - m} outside source band |m| <= {band}")
            terms.append((m, 1 - m, c))
        return terms
    # Smooth spectra are symmetrized per pair: both members of (2k, 2k+1)
    # share one real weight, so even and odd carry exactly half the total
    # each and every analyzer pair interferes with equal magnitudes.
    ks = _vortex_pair_indices(band)
    weights = {k: spectrum.weight(2 * k + 0.5) for k in ks}
    total = sum(weights.values())
    if total <= 0.0:
        raise ValueError("vortex spectrum has zero weight on the band")
    terms = []
    for k in ks:
        a = math.sqrt(weights[k] / (2.0 * total))
        terms.append((2 * k, 1 - 2 * k, a))        # photon 1 even
        terms.append((2 * k + 1, -2 * k, a))       # photon 1 odd
    return terms


def _gaussian_oam_terms(spectrum: SpectrumModel, band: int):
    terms = []
    for m, c in spectrum.realize(band).items():
        terms.append((m, -m, c))
    return terms


def _polarization_factor(mode_name: str):
    if mode_name == PRODUCT_HH:
        return [((H, H), 1.0)]
    r = 1.0 / math.sqrt(2.0)
    return [((H, H), r), ((V, V), r)]


def spdc(spec: SourceSpec) -> TwoPhotonState:
    """Photon pair from down-conversion; every term satisfies m1 + m2 = pump order."""
    band = source_band(spec.truncation)
    if spec.pump_order == 1:
        oam_terms = _vortex_oam_terms(spec.spectrum, band)
    else:
        oam_terms = _gaussian_oam_terms(spec.spectrum, band)
    pol_terms = _polarization_factor(spec.polarization_mode)
    amps = {}
    for m1, m2, c in oam_terms:
        for (p1, p2), w in pol_terms:
            key = (mode(m1, p1), mode(m2, p2))
            amps[key] = amps.get(key, 0.0 + 0.0j) + c * w
    return TwoPhotonState(amps, spec.truncation).normalized()


def hyper_source(spectrum: SpectrumModel, truncation: int = 8) -> TwoPhotonState:
    """Pair entangled in polarization ((HH+VV)/sqrt2) and in even/odd OAM."""
    return spdc(SourceSpec(1, spectrum, BELL_PHI_PLUS, truncation))


def vortex_symmetric(spectrum: SpectrumModel, truncation: int = 8) -> bool:
    """True when the realized vortex spectrum has equal real pair members.

    Smooth spectra are symmetrized by construction; explicit spectra are
    checked term by term.  Only symmetric spectra obey the cos^2 joint
    correlation law.
    """
    if spectrum.kind != "explicit":
        return True
    band = source_band(truncation)
    coeffs = spectrum.realize(band)
    seen = set()
    for m in coeffs:
        even_m = m if m % 2 == 0 else m - 1
        seen.add(even_m)
    for even_m in seen:
        a = coeffs.get(even_m, 0.0 + 0.0j)
        b = coeffs.get(even_m + 1, 0.0 + 0.0j)
        if abs(a.imag) > 1e-12 or abs(b.imag) > 1e-12:
            return False
        if abs(a.real - b.real) > 1e-12 or a.real < 0 or b.real < 0:
            return False
    return True


def hybrid_two_photon(s: TwoPhotonState) -> TwoPhotonState:
    """Swap photon 1's polarization into correlation with photon 2's parity.

    Input must be a product-polarized vortex-pump pair (all HH, m1+m2 = 1).
    The OAM-controlled polarization NOT gate on photon 1 leaves its OAM
    all-even and its polarization tracking photon 2's even/odd class.
    """
    for (k1, k2), _ in s.items():
        if k1.pol != H or k2.pol != H:
            raise ValueError("expected an all-H product-polarized input pair")
        if k1.m + k2.m != 1:
            raise ValueError("expected a first-order vortex-pump pair (m1 + m2 = 1)")
    from .soba import oc_p_gate  # gates live with the analyzer machinery

    return oc_p_gate(s, slot=1)


_SQ2 = 1.0 / math.sqrt(2.0)

# The four maximally nonseparable (parity x polarization) states of one
# photon, at the canonical representatives even->m=0, odd->m=1.
SPIN_ORBIT_STATES: dict[str, tuple[tuple[int, str, complex], ...]] = {
    "psi+": ((EVEN_M, H, _SQ2), (ODD_M, V, _SQ2)),
    "psi-": ((EVEN_M, H, _SQ2), (ODD_M, V, -_SQ2)),
    "phi+": ((ODD_M, H, _SQ2), (EVEN_M, V, _SQ2)),
    "phi-": ((ODD_M, H, _SQ2), (EVEN_M, V, -_SQ2)),
}

_LABEL_ALIASES = {
    "ψ+": "psi+", "ψ−": "psi-", "ψ-": "psi-",
    "φ+": "phi+", "φ−": "phi-", "φ-": "phi-",
}


def normalize_spin_orbit_label(label: str) -> str:
    label = _LABEL_ALIASES.get(label, label)
    if label not in SPIN_ORBIT_STATES:
        raise ValueError(f"unknown spin-orbit state label {label!r}")
    return label


def prepare_single_photon_bell(label: str, truncation: int = 8,
                               path: str = "in") -> PhotonState:
    """One of the four spin-orbit Bell states at the canonical m values."""
    label = normalize_spin_orbit_label(label)
    amps = {mode(m, pol, path): c for m, pol, c in SPIN_ORBIT_STATES[label]}
    return PhotonState(amps, truncation).normalized()


def postselect_partner(s: TwoPhotonState, measured_slot: int = 2,
                       pol: str | None = None,
                       parity_class: str | None = None):
    """Condition on one photon's (polarization, parity) outcome.

    Returns (probability, renormalized PhotonState of the other photon).
    Models heralded preparation from conservation-constrained pair states,
    where each surviving partner mode is tied to a single measured mode; an
    ambiguous (mixed) herald raises instead of silently merging amplitudes.
    """
    if measured_slot not in (1, 2):
        raise ValueError("measured_slot must be 1 or 2")
    if parity_class not in (None, EVEN, ODD):
        raise ValueError(f"unknown parity class {parity_class!r}")
    meas = 0 if measured_slot == 1 else 1
    keep = 1 - meas
    amps: dict[ModeKey, complex] = {}
    origin: dict[ModeKey, ModeKey] = {}
    prob = 0.0
    for key, amp in s.items():
        mk = key[meas]
        if pol is not None and mk.pol != pol:
            continue
        if parity_class is not None and parity(mk.m) != parity_class:
            continue
        prob += abs(amp) ** 2
        pk = key[keep]
        if pk in origin and origin[pk] != mk:
            raise ValueError(
                "herald does not leave the partner photon in a pure state")
        origin[pk] = mk
        amps[pk] = amps.get(pk, 0.0 + 0.0j) + amp
    if prob <= 0.0:
        return 0.0, None
    return prob, PhotonState(amps, s.truncation).normalized()
