"""Optical elements as exact unitaries on mode space, plus circuit composition.

Conventions (fixed package-wide):
  * beam splitter with transmission amplitude t: transmitted amplitude is
    real t, reflected amplitude is i*sqrt(1 - t^2); t = 1/sqrt(2) is 50:50;
  * polarizing beam splitter transmits H unchanged and reflects V with an
    extra factor i;
  * a dove prism rotated by alpha/2 imprints exp(i*m*alpha) on OAM mode m;
  * a spiral phase plate of order q shifts m -> m + q, wrapping cyclically
    at the truncation band edge (a guard raises if the wrapped weight is
    not negligible);
  * mirrors relabel a path and are otherwise the identity (common
    reflection phases are dropped globally).

Elements and circuits are immutable; application is a pure function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .hilbert import (
    H,
    V,
    ModeBasis,
    ModeKey,
    PhotonState,
    TwoPhotonState,
)

__all__ = [
    "WRAP_GUARD",
    "WrapGuardError",
    "Element",
    "beam_splitter",
    "polarizing_bs",
    "dove_prism",
    "spiral_phase_plate",
    "half_wave_plate",
    "phase_delay",
    "mirror",
    "Circuit",
    "apply_element",
    "apply_circuit",
    "detect",
    "coincidence_detect",
    "build_sorter",
    "build_s2_setup",
    "build_s3_setup",
    "build_projection",
    "element_matrix",
    "circuit_unitary",
    "dense_apply",
    "circuit_to_dict",
    "circuit_from_dict",
]

WRAP_GUARD = 1e-9


class WrapGuardError(RuntimeError):
    """An OAM shift moved non-negligible weight across the band edge."""


@dataclass(frozen=True, eq=True)
class Element:
    kind: str
    in_paths: tuple[str, ...]
    out_paths: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def paths(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.in_paths + self.out_paths))


def _require_disjoint(in_paths, out_paths) -> None:
    if set(in_paths) & set(out_paths):
        raise ValueError("input and output paths must be distinct")
    if len(set(in_paths)) != len(in_paths) or len(set(out_paths)) != len(out_paths):
        raise ValueError("port paths must be pairwise distinct")


def _assert_local_unitary(matrix) -> None:
    u = np.asarray(matrix, dtype=complex)
    if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > 1e-12:
        raise ValueError("element parameters do not give a unitary action")


def beam_splitter(in_a: str, in_b: str, out_a: str, out_b: str,
                  t: float = 1.0 / math.sqrt(2.0)) -> Element:
    """Two-port splitter; out_a takes t from in_a and i*r from in_b."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmission amplitude must lie in [0, 1], got {t}")
    _require_disjoint((in_a, in_b), (out_a, out_b))
    r = math.sqrt(max(0.0, 1.0 - t * t))
    _assert_local_unitary([[t, 1j * r], [1j * r, t]])
    return Element("bs", (in_a, in_b), (out_a, out_b), {"t": t})


def polarizing_bs(in_a: str, in_b: str, out_a: str, out_b: str) -> Element:
    _require_disjoint((in_a, in_b), (out_a, out_b))
    return Element("pbs", (in_a, in_b), (out_a, out_b))


def dove_prism(path: str, alpha: float) -> Element:
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError("dove prism rotation must be finite")
    return Element("dove", (path,), (path,), {"alpha": alpha})


def spiral_phase_plate(path: str, q: int) -> Element:
    return Element("spp", (path,), (path,), {"q": int(q)})


def half_wave_plate(path: str, theta: float) -> Element:
    theta = float(theta)
    c, s = math.cos(2.0 * theta), math.sin(2.0 * theta)
    _assert_local_unitary([[c, s], [s, -c]])
    return Element("hwp", (path,), (path,), {"theta": theta})


def phase_delay(path: str, phi: float) -> Element:
    phi = float(phi)
    if not math.isfinite(phi):
        raise ValueError("phase delay must be finite")
    return Element("phase", (path,), (path,), {"phi": phi})


def mirror(in_path: str, out_path: str) -> Element:
    if in_path == out_path:
        raise ValueError("mirror must relabel the path")
    return Element("mirror", (in_path,), (out_path,))


def _wrap_m(m: int, truncation: int) -> tuple[int, bool]:
    span = 2 * truncation + 1
    wrapped = ((m + truncation) % span) - truncation
    return wrapped, wrapped != m


def _key_action(elem: Element, key: ModeKey, truncation: int):
    """Targets of one basis mode: list of (new_key, factor, crossed_band_edge).

    Elements with distinct in/out ports also map their (normally empty)
    output paths back onto the input paths, so every element is a genuine
    unitary on the whole basis, not just an isometry on fed ports.
    """
    kind = elem.kind
    if kind == "bs":
        in_a, in_b = elem.in_paths
        out_a, out_b = elem.out_paths
        if key.path == in_a or key.path == in_b:
            t = elem.params["t"]
            r = math.sqrt(max(0.0, 1.0 - t * t))
            ka = ModeKey(out_a, key.pol, key.m)
            kb = ModeKey(out_b, key.pol, key.m)
            if key.path == in_a:
                return [(ka, t, False), (kb, 1j * r, False)]
            return [(ka, 1j * r, False), (kb, t, False)]
        if key.path == out_a:
            return [(ModeKey(in_a, key.pol, key.m), 1.0, False)]
        if key.path == out_b:
            return [(ModeKey(in_b, key.pol, key.m), 1.0, False)]
    elif kind == "pbs":
        in_a, in_b = elem.in_paths
        out_a, out_b = elem.out_paths
        if key.path == in_a:
            if key.pol == H:
                return [(ModeKey(out_a, H, key.m), 1.0, False)]
            return [(ModeKey(out_b, V, key.m), 1j, False)]
        if key.path == in_b:
            if key.pol == H:
                return [(ModeKey(out_b, H, key.m), 1.0, False)]
            return [(ModeKey(out_a, V, key.m), 1j, False)]
        if key.path == out_a:
            return [(ModeKey(in_a, key.pol, key.m), 1.0, False)]
        if key.path == out_b:
            return [(ModeKey(in_b, key.pol, key.m), 1.0, False)]
    elif kind == "dove":
        if key.path == elem.in_paths[0]:
            return [(key, cmath.exp(1j * key.m * elem.params["alpha"]), False)]
    elif kind == "spp":
        if key.path == elem.in_paths[0]:
            m2, wrapped = _wrap_m(key.m + elem.params["q"], truncation)
            return [(ModeKey(key.path, key.pol, m2), 1.0, wrapped)]
    elif kind == "hwp":
        if key.path == elem.in_paths[0]:
            two = 2.0 * elem.params["theta"]
            c, s = math.cos(two), math.sin(two)
            kh = ModeKey(key.path, H, key.m)
            kv = ModeKey(key.path, V, key.m)
            if key.pol == H:
                return [(kh, c, False), (kv, s, False)]
            return [(kh, s, False), (kv, -c, False)]
    elif kind == "phase":
        if key.path == elem.in_paths[0]:
            return [(key, cmath.exp(1j * elem.params["phi"]), False)]
    elif kind == "mirror":
        if key.path == elem.in_paths[0]:
            return [(ModeKey(elem.out_paths[0], key.pol, key.m), 1.0, False)]
        if key.path == elem.out_paths[0]:
            return [(ModeKey(elem.in_paths[0], key.pol, key.m), 1.0, False)]
    else:
        raise ValueError(f"unknown element kind {kind!r}")
    return [(key, 1.0, False)]  # modes on unrelated paths pass through


def _apply_single(elem: Element, state: PhotonState, wrap_guard, prune):
    out: dict[ModeKey, complex] = {}
    wrapped_weight = 0.0
    for key, amp in state.amplitudes.items():
        for new_key, factor, wrapped in _key_action(elem, key, state.truncation):
            contrib = amp * factor
            if wrapped:
                wrapped_weight += abs(contrib) ** 2
            out[new_key] = out.get(new_key, 0.0 + 0.0j) + contrib
    if wrap_guard is not None and wrapped_weight > wrap_guard:
        raise WrapGuardError(
            f"{elem.kind} moved weight {wrapped_weight:.3e} across the band edge")
    return PhotonState(out, state.truncation, prune=prune)


def _apply_joint(elem: Element, state: TwoPhotonState, slot, wrap_guard, prune):
    slots = (1, 2) if slot == "both" else (slot,)
    amps = dict(state.amplitudes)
    for s in slots:
        idx = 0 if s == 1 else 1
        out: dict[tuple[ModeKey, ModeKey], complex] = {}
        wrapped_weight = 0.0
        for key, amp in amps.items():
            for new_key, factor, wrapped in _key_action(elem, key[idx], state.truncation):
                contrib = amp * factor
                if wrapped:
                    wrapped_weight += abs(contrib) ** 2
                joint = (new_key, key[1]) if idx == 0 else (key[0], new_key)
                out[joint] = out.get(joint, 0.0 + 0.0j) + contrib
        if wrap_guard is not None and wrapped_weight > wrap_guard:
            raise WrapGuardError(
                f"{elem.kind} moved weight {wrapped_weight:.3e} across the band edge")
        amps = out
    return TwoPhotonState(amps, state.truncation, prune=prune)


def apply_element(elem: Element, state, slot="both", wrap_guard=WRAP_GUARD,
                  prune: bool = True):
    """Apply one element; only the addressed photon slot is transformed."""
    if isinstance(state, PhotonState):
        return _apply_single(elem, state, wrap_guard, prune)
    if isinstance(state, TwoPhotonState):
        if slot not in (1, 2, "both"):
            raise ValueError(f"slot must be 1, 2 or 'both', got {slot!r}")
        return _apply_joint(elem, state, slot, wrap_guard, prune)
    raise TypeError(f"cannot apply element to {type(state).__name__}")


@dataclass(frozen=True)
class Circuit:
    """Ordered element placements acting on named paths."""

    name: str
    elements: tuple[Element, ...]
    input_path: str
    detector_paths: tuple[str, ...]

    def __post_init__(self):
        known = set(self.paths())
        for d in self.detector_paths:
            if d not in known:
                raise ValueError(f"detector path {d!r} not produced by any element")

    def paths(self) -> tuple[str, ...]:
        seen: dict[str, None] = {self.input_path: None}
        for elem in self.elements:
            for p in elem.paths():
                seen.setdefault(p, None)
        return tuple(seen)


def apply_circuit(circuit: Circuit, state, slot="both", wrap_guard=WRAP_GUARD,
                  prune: bool = True):
    for elem in circuit.elements:
        state = apply_element(elem, state, slot=slot, wrap_guard=wrap_guard,
                              prune=prune)
    return state


def detect(state: PhotonState, path: str) -> float:
    """Probability of a click at `path`, summed over OAM and polarization.

    A path that carries no amplitude reads 0; a dark detector is a valid
    outcome, so only non-string path labels are rejected.
    """
    if not isinstance(path, str):
        raise TypeError(f"path label must be a string, got {path!r}")
    return state.path_probability(path)


def coincidence_detect(state: TwoPhotonState, path1: str, path2: str,
                       return_state: bool = False):
    """Joint probability of photon 1 at path1 and photon 2 at path2.

    With return_state=True also returns the renormalized post-detection
    state (None when the probability vanishes), for conditional chaining.
    """
    kept = {key: amp for key, amp in state.amplitudes.items()
            if key[0].path == path1 and key[1].path == path2}
    prob = float(sum(abs(a) ** 2 for a in kept.values()))
    if not return_state:
        return prob
    if prob <= 0.0:
        return prob, None
    post = TwoPhotonState(kept, state.truncation).normalized()
    return prob, post


# ---------------------------------------------------------------------------
# Built-in interferometers


def _sorter_elements(inp: str, even_out: str, odd_out: str, tag: str) -> list[Element]:
    # Mach-Zehnder with a pi dove prism in the reflected arm: even OAM
    # leaves through even_out (with a residual factor i), odd through odd_out.
    arm_t = f"{tag}arm_t"
    arm_r = f"{tag}arm_r"
    return [
        beam_splitter(inp, f"{tag}vac", arm_t, arm_r),
        dove_prism(arm_r, math.pi),
        beam_splitter(arm_t, arm_r, odd_out, even_out),
    ]


def build_sorter() -> Circuit:
    """Even/odd OAM sorter: 'in' -> detector paths 'even_port' / 'odd_port'."""
    return Circuit(
        name="sorter",
        elements=tuple(_sorter_elements("in", "even_port", "odd_port", "s_")),
        input_path="in",
        detector_paths=("even_port", "odd_port"),
    )


def _analyzer_front(tag: str = "a_") -> list[Element]:
    # Sorter followed by an order +1 spiral plate in the even arm, so both
    # arms interfere on the odd mode of each (2k, 2k+1) pair.
    elems = _sorter_elements("in", "even_arm", "odd_arm", tag)
    elems.append(spiral_phase_plate("even_arm", +1))
    return elems


def build_s2_setup() -> Circuit:
    """Diagonal-basis analyzer; s2 = P(d2) - P(d1)."""
    elems = _analyzer_front()
    elems.append(beam_splitter("odd_arm", "even_arm", "d1", "d2"))
    return Circuit("s2_setup", tuple(elems), "in", ("d1", "d2"))


def build_s3_setup() -> Circuit:
    """Circular-basis analyzer: extra quarter-cycle delay; s3 = P(d2) - P(d1)."""
    elems = _analyzer_front()
    elems.append(phase_delay("even_arm", math.pi / 2.0))
    elems.append(beam_splitter("odd_arm", "even_arm", "d1", "d2"))
    return Circuit("s3_setup", tuple(elems), "in", ("d1", "d2"))


def build_projection(theta: float, variant: str = "tunable_bs") -> Circuit:
    """General linear even/odd projection at angle theta.

    The 'p_theta' detector fires with probability
    sum_k |cos(theta) c_{2k} + sin(theta) c_{2k+1}|^2 and 'p_theta_perp'
    with the orthogonal combination.  Two equivalent realizations:

      * "tunable_bs": the 50:50 recombiner is replaced by a splitter with
        transmission cos(theta);
      * "polarization": the arms are tagged with orthogonal polarizations,
        merged on a polarizing splitter, rotated by a half-wave plate at
        theta/2 and split again (requires H-polarized input).
    """
    theta = float(theta) % math.pi
    if variant == "tunable_bs":
        elems = _analyzer_front()
        # A projector beyond pi/2 is the perpendicular port of the analyzer
        # at theta - pi/2, which keeps the splitter transmission in [0, 1].
        if math.cos(theta) >= 0.0:
            t, out_a, out_b = math.cos(theta), "p_theta_perp", "p_theta"
        else:
            t, out_a, out_b = math.cos(theta - math.pi / 2.0), "p_theta", "p_theta_perp"
        elems.append(beam_splitter("odd_arm", "even_arm", out_a, out_b, t=t))
        return Circuit("projection_tunable", tuple(elems), "in",
                       ("p_theta", "p_theta_perp"))
    if variant == "polarization":
        elems = _analyzer_front()
        elems.append(half_wave_plate("even_arm", math.pi / 4.0))
        elems.append(polarizing_bs("odd_arm", "even_arm", "merged", "discard"))
        elems.append(half_wave_plate("merged", theta / 2.0))
        elems.append(polarizing_bs("merged", "aux", "p_theta_perp", "p_theta"))
        return Circuit("projection_polarization", tuple(elems), "in",
                       ("p_theta", "p_theta_perp"))
    raise ValueError(f"unknown projection variant {variant!r}")


# ---------------------------------------------------------------------------
# Dense oracle


def element_matrix(elem: Element, basis: ModeBasis) -> np.ndarray:
    """Materialize one element as a dense unitary on the basis."""
    n = basis.size
    u = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for key, factor, _ in _key_action(elem, basis.key_at(j), basis.truncation):
            u[basis.index(key), j] += factor
    return u


def circuit_unitary(circuit: Circuit, truncation: int,
                    extra_paths=()) -> tuple[np.ndarray, ModeBasis]:
    """Dense unitary of a whole circuit (matrix product of its elements)."""
    basis = ModeBasis(tuple(circuit.paths()) + tuple(extra_paths), truncation)
    u = np.eye(basis.size, dtype=complex)
    for elem in circuit.elements:
        u = element_matrix(elem, basis) @ u
    return u, basis


def dense_apply(circuit: Circuit, state, slot="both"):
    """Apply a circuit through its materialized dense matrix.

    Independent verification path for the sparse evolution; the per-photon
    dense dimension is capped at DENSE_DIM_LIMIT.
    """
    if isinstance(state, PhotonState):
        u, basis = circuit_unitary(circuit, state.truncation,
                                   extra_paths=state.paths())
        return basis.from_vector(u @ basis.to_vector(state))
    if isinstance(state, TwoPhotonState):
        u, basis = circuit_unitary(circuit, state.truncation,
                                   extra_paths=state.paths())
        mat = basis.to_matrix(state)
        if slot in (1, "both"):
            mat = u @ mat
        if slot in (2, "both"):
            mat = mat @ u.T
        return basis.from_matrix(mat)
    raise TypeError(f"cannot apply circuit to {type(state).__name__}")


# ---------------------------------------------------------------------------
# Circuit descriptions (JSON)

_FACTORIES = {
    "bs": lambda d: beam_splitter(*d["in"], *d["out"], t=d["params"].get("t", 1 / math.sqrt(2))),
    "pbs": lambda d: polarizing_bs(*d["in"], *d["out"]),
    "dove": lambda d: dove_prism(d["in"][0], d["params"]["alpha"]),
    "spp": lambda d: spiral_phase_plate(d["in"][0], d["params"]["q"]),
    "hwp": lambda d: half_wave_plate(d["in"][0], d["params"]["theta"]),
    "phase": lambda d: phase_delay(d["in"][0], d["params"]["phi"]),
    "mirror": lambda d: mirror(d["in"][0], d["out"][0]),
}


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "name": circuit.name,
        "input": circuit.input_path,
        "detectors": list(circuit.detector_paths),
        "elements": [
            {"kind": e.kind, "in": list(e.in_paths), "out": list(e.out_paths),
             "params": dict(e.params)}
            for e in circuit.elements
        ],
    }


def circuit_from_dict(d: Mapping) -> Circuit:
    elems = []
    for ed in d["elements"]:
        kind = ed["kind"]
        if kind not in _FACTORIES:
            raise ValueError(f"unknown element kind {kind!r}")
        ed = {"in": ed["in"], "out": ed.get("out", ed["in"]),
              "params": ed.get("params", {}), "kind": kind}
        elems.append(_FACTORIES[kind](ed))
    return Circuit(
        name=str(d.get("name", "circuit")),
        elements=tuple(elems),
        input_path=str(d["input"]),
        detector_paths=tuple(d["detectors"]),
    )
