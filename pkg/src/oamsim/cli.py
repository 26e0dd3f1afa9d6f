"""Command-line front end: experiment commands with deterministic JSON reports.

Every report is a single JSON object carrying the command name, the full
effective configuration, and the results; identical (command, config, seed)
invocations produce byte-identical output.  Angles are accepted in degrees
and converted once at this boundary.

Exit codes: 0 success, 2 validation error, 3 guard error from the core
(e.g. weight pushed across the truncation band edge).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import bell, soba, tomography
from .elements import (
    WrapGuardError,
    apply_circuit,
    build_s2_setup,
    build_s3_setup,
    build_sorter,
    circuit_to_dict,
    detect,
)
from .hilbert import (
    PhotonState,
    SpectrumModel,
    TruncationError,
    mode,
    state_to_records,
)
from .jsonfmt import dumps, format_float
from .sources import (
    BELL_PHI_PLUS,
    PRODUCT_HH,
    SourceSpec,
    normalize_spin_orbit_label,
    prepare_single_photon_bell,
    source_band,
    spdc,
    vortex_symmetric,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3

CONFIG_ENV = "OAMSIM_CONFIG"

COMMANDS = ("state", "sorter", "tomography", "bell", "ekert", "soba", "densecode")

# Named interferometers shipped with the CLI (JSON via --circuit NAME).
BUILTIN_CIRCUITS = {
    "sorter": build_sorter,
    "s2_setup": build_s2_setup,
    "s3_setup": build_s3_setup,
    "soba": soba.build_soba,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "oamsim report",
    "type": "object",
    "required": ["command", "config"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "config": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"command": {"const": "state"}}},
         "then": {"required": ["state"]}},
        {"if": {"properties": {"command": {"const": "sorter"}}},
         "then": {"required": ["probabilities"]}},
        {"if": {"properties": {"command": {"const": "tomography"}}},
         "then": {"required": ["s0", "s1", "s2", "s3", "rho", "clipped"]}},
        {"if": {"properties": {"command": {"const": "bell"}}},
         "then": {"required": ["B", "C", "E"]}},
        {"if": {"properties": {"command": {"const": "ekert"}}},
         "then": {"required": ["key_a", "key_b", "qber", "chsh_estimate"]}},
        {"if": {"properties": {"command": {"const": "soba"}}},
         "then": {"required": ["distribution"]}},
        {"if": {"properties": {"command": {"const": "densecode"}}},
         "then": {"required": ["sent", "decoded_distribution", "accuracy"]}},
    ],
}


class ValidationError(ValueError):
    pass


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj) + "\n")


def _env_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must contain a JSON object")
    return data


def _parse_spectrum(text: str | None) -> SpectrumModel:
    if text is None or text == "uniform":
        return SpectrumModel.uniform()
    if text.startswith("gaussian:"):
        try:
            return SpectrumModel.gaussian(float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ValidationError(f"bad gaussian spectrum {text!r}") from exc
    if text == "canonical":
        from .sources import canonical_pair_spectrum

        return canonical_pair_spectrum()
    try:
        return SpectrumModel.from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"bad spectrum {text!r}: {exc}") from exc


def _parse_state(text: str, truncation: int) -> PhotonState:
    try:
        return prepare_single_photon_bell(normalize_spin_orbit_label(text),
                                          truncation)
    except ValueError:
        pass
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bad state {text!r}: {exc}") from exc
    try:
        amps = {}
        if "coeffs" in data:
            for row in data["coeffs"]:
                m = int(row[0])
                re = float(row[1])
                im = float(row[2]) if len(row) > 2 else 0.0
                key = mode(m)
                amps[key] = amps.get(key, 0j) + complex(re, im)
        elif "terms" in data:
            for term in data["terms"]:
                key = mode(int(term["m"]), str(term.get("pol", "H")),
                           str(term.get("path", "in")))
                amps[key] = amps.get(key, 0j) + complex(
                    float(term.get("re", 0.0)), float(term.get("im", 0.0)))
        else:
            raise KeyError("state JSON needs 'coeffs' or 'terms'")
        return PhotonState(amps, truncation).normalized()
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"bad state {text!r}: {exc}") from exc


def _base_config(args, spectrum: SpectrumModel | None = None) -> dict:
    cfg = {
        "truncation": args.truncation,
        "shots": args.shots,
        "seed": args.seed,
        "format": args.format,
        "rng": "numpy-pcg64",
    }
    if spectrum is not None:
        cfg["spectrum"] = spectrum.to_dict()
    return cfg


def _require_seed(args) -> None:
    if args.shots > 0 and args.seed is None:
        raise ValidationError("shots > 0 requires --seed")


def _vortex_state(args, spectrum):
    spec = SourceSpec(1, spectrum, PRODUCT_HH, args.truncation)
    return spdc(spec)


# ---------------------------------------------------------------------------
# command handlers


def _cmd_state(args) -> dict:
    spectrum = _parse_spectrum(args.spectrum)
    cfg = _base_config(args, spectrum)
    cfg.update({"kind": args.kind, "pump_order": args.pump,
                "polarization_mode": args.pol})
    band = source_band(args.truncation)
    if args.kind == "bell":
        label = normalize_spin_orbit_label(args.label)
        cfg["label"] = label
        state = prepare_single_photon_bell(label, args.truncation)
        return {"command": "state", "config": cfg,
                "state": state_to_records(state)}
    if args.kind == "hyper":
        spec = SourceSpec(1, spectrum, BELL_PHI_PLUS, args.truncation)
    else:
        spec = SourceSpec(args.pump, spectrum, args.pol, args.truncation)
    state = spdc(spec)
    report = {"command": "state", "config": cfg,
              "state": state_to_records(state),
              "out_of_band_weight": spectrum.out_of_band_weight(band)}
    if spec.pump_order == 1:
        report["symmetric"] = vortex_symmetric(spectrum, args.truncation)
    return report


def _cmd_sorter(args) -> dict:
    if (args.m is None) == (args.state is None):
        raise ValidationError("sorter needs exactly one of --m or --state")
    if args.m is not None:
        state = PhotonState({mode(args.m): 1.0}, args.truncation)
    else:
        state = _parse_state(args.state, args.truncation)
    _require_seed(args)
    out = apply_circuit(build_sorter(), state)
    probs = {"even_port": detect(out, "even_port"),
             "odd_port": detect(out, "odd_port")}
    cfg = _base_config(args)
    cfg["m"] = args.m
    report = {"command": "sorter", "config": cfg, "probabilities": probs}
    if args.shots > 0:
        p = np.array([probs["even_port"], probs["odd_port"]])
        p = np.clip(p, 0.0, None)
        p[p < 1e-15] = 0.0
        counts = bell.task_rng(args.seed, 10).multinomial(args.shots, p / p.sum())
        report["counts"] = {"even_port": int(counts[0]), "odd_port": int(counts[1])}
    return report


def _rho_records(matrix) -> list:
    return [[[float(matrix[r, c].real), float(matrix[r, c].imag)]
             for c in range(2)] for r in range(2)]


def _single_pair_qubit(state: PhotonState):
    """Qubit (even, odd) amplitudes when the state occupies one OAM pair."""
    evens = {}
    odds = {}
    for key, amp in state.amplitudes.items():
        (evens if key.m % 2 == 0 else odds)[key.m] = amp
    if len(evens) > 1 or len(odds) > 1:
        return None
    a = next(iter(evens.values()), 0j)
    b = next(iter(odds.values()), 0j)
    if evens and odds:
        m_even = next(iter(evens))
        m_odd = next(iter(odds))
        if m_odd != m_even + 1:
            return None
    return a, b


def _cmd_tomography(args) -> dict:
    state = _parse_state(args.state, args.truncation)
    i1a, i2a, s0, s1 = tomography.measure_s0_s1(state)
    i1b, i2b, s2 = tomography.measure_s2(state)
    i1c, i2c, s3 = tomography.measure_s3(state)
    sv = tomography.StokesVector(s0, s1, s2, s3)
    density = tomography.reconstruct(sv)
    report = {
        "command": "tomography",
        "config": _base_config(args),
        "intensities": {
            "sorter": {"I1": i1a, "I2": i2a},
            "s2_setup": {"I1": i1b, "I2": i2b},
            "s3_setup": {"I1": i1c, "I2": i2c},
        },
        "s0": s0, "s1": s1, "s2": s2, "s3": s3,
        "rho": _rho_records(density.matrix),
        "clipped": density.clipped,
    }
    qubit = _single_pair_qubit(state)
    if qubit is not None:
        report["fidelity"] = tomography.fidelity(density, qubit)
    if args.csv:
        rows = [("sorter", "even_port", i1a), ("sorter", "odd_port", i2a),
                ("s2_setup", "d1", i1b), ("s2_setup", "d2", i2b),
                ("s3_setup", "d1", i1c), ("s3_setup", "d2", i2c)]
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("setup", "port", "intensity"))
            for setup, port, intensity in rows:
                writer.writerow((setup, port, format_float(float(intensity))))
        report["csv"] = args.csv
    return report


def _cmd_bell(args) -> dict:
    _require_seed(args)
    spectrum = _parse_spectrum(args.spectrum)
    state = _vortex_state(args, spectrum)
    angles = tuple(math.radians(x) for x in
                   (args.theta, args.theta2, args.chi, args.chi2))
    result = bell.chsh(state, *angles, variant=args.variant,
                       shots=args.shots, seed=args.seed)
    labels = ("theta_chi", "theta_chi2", "theta2_chi", "theta2_chi2")
    c_block = {}
    for label, table in zip(labels, result.tables):
        entry = dict(table.joint())
        entry["C"] = table.correlation()
        if table.counts is not None:
            entry["counts"] = list(table.counts)
        c_block[label] = entry
    e_block = {label: result.e_values[key]
               for label, key in zip(labels, ("E(theta,chi)", "E(theta,chi2)",
                                              "E(theta2,chi)", "E(theta2,chi2)"))}
    cfg = _base_config(args, spectrum)
    cfg.update({"theta_deg": args.theta, "theta2_deg": args.theta2,
                "chi_deg": args.chi, "chi2_deg": args.chi2,
                "variant": args.variant,
                "symmetric": vortex_symmetric(spectrum, args.truncation)})
    report = {"command": "bell", "config": cfg,
              "C": c_block, "E": e_block, "B": result.b}
    if result.sigma is not None:
        report["sigma"] = result.sigma
    return report


def _cmd_ekert(args) -> dict:
    if args.seed is None:
        raise ValidationError("ekert requires --seed")
    spectrum = _parse_spectrum(args.spectrum)
    state = _vortex_state(args, spectrum)
    result = bell.ekert_run(state, args.rounds, args.seed, variant=args.variant)
    cfg = _base_config(args, spectrum)
    cfg.update({"rounds": args.rounds, "variant": args.variant})
    return {
        "command": "ekert",
        "config": cfg,
        "key_a": result.key_a,
        "key_b": result.key_b,
        "qber": result.qber,
        "chsh_estimate": result.chsh_estimate,
        "chsh_sigma": result.chsh_sigma,
        "matched_rounds": result.matched_rounds,
        "chsh_rounds": result.chsh_rounds,
    }


def _cmd_soba(args) -> dict:
    _require_seed(args)
    state = _parse_state(args.state, args.truncation)
    dist = soba.soba_route(state)
    cfg = _base_config(args)
    cfg["state"] = args.state
    report = {"command": "soba", "config": cfg, "distribution": dist}
    if args.shots > 0:
        dets = ("D1", "D2", "D3", "D4")
        p = np.clip(np.array([dist[d] for d in dets]), 0.0, None)
        p[p < 1e-15] = 0.0
        counts = bell.task_rng(args.seed, 11).multinomial(args.shots, p / p.sum())
        report["counts"] = {d: int(n) for d, n in zip(dets, counts)}
    return report


def _cmd_densecode(args) -> dict:
    _require_seed(args)
    if args.spectrum:
        spectrum = _parse_spectrum(args.spectrum)
    else:
        from .sources import canonical_pair_spectrum

        spectrum = canonical_pair_spectrum()
    result = soba.dense_coding_roundtrip(args.message, shots=args.shots,
                                         seed=args.seed,
                                         truncation=args.truncation,
                                         spectrum=spectrum)
    cfg = _base_config(args, spectrum)
    cfg["message"] = args.message
    report = {
        "command": "densecode",
        "config": cfg,
        "sent": result.sent,
        "label": result.label,
        "decoded_distribution": result.message_probs,
        "accuracy": result.accuracy,
    }
    if result.counts is not None:
        report["counts"] = {f"{a},{b}": n for (a, b), n in sorted(result.counts.items())}
    return report


_HANDLERS = {
    "state": _cmd_state,
    "sorter": _cmd_sorter,
    "tomography": _cmd_tomography,
    "bell": _cmd_bell,
    "ekert": _cmd_ekert,
    "soba": _cmd_soba,
    "densecode": _cmd_densecode,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamsim",
        description="Even/odd OAM photonic qubit experiments",
    )
    parser.add_argument("--schema", action="store_true",
                        help="print the report JSON schema and exit")
    parser.add_argument("--circuit", choices=tuple(BUILTIN_CIRCUITS),
                        default=None,
                        help="print a built-in circuit description and exit")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-K", "--truncation", type=int, default=None,
                        help="OAM truncation band |m| <= K (default 8)")
    common.add_argument("--spectrum", type=str, default=None,
                        help="'uniform', 'gaussian:SIGMA', 'canonical' or JSON")
    common.add_argument("--shots", type=int, default=None,
                        help="number of sampled shots; 0 = analytic")
    common.add_argument("--seed", type=int, default=None, help="PRNG seed")
    common.add_argument("--format", choices=("json",), default=None,
                        help="report format")

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("state", parents=[common], help="emit a source state")
    p.add_argument("--kind", choices=("spdc", "hyper", "bell"), default="spdc")
    p.add_argument("--pump", type=int, choices=(0, 1), default=1)
    p.add_argument("--pol", choices=(PRODUCT_HH, BELL_PHI_PLUS), default=PRODUCT_HH)
    p.add_argument("--label", type=str, default="psi+")

    p = sub.add_parser("sorter", parents=[common], help="even/odd sorter run")
    p.add_argument("--m", type=int, default=None, help="single OAM input mode")
    p.add_argument("--state", type=str, default=None, help="input state JSON")

    p = sub.add_parser("tomography", parents=[common],
                       help="Stokes measurements and reconstruction")
    p.add_argument("--state", type=str, required=True)
    p.add_argument("--csv", type=str, default=None,
                   help="also write (setup, port, intensity) rows to this file")

    p = sub.add_parser("bell", parents=[common], help="CHSH coincidence run")
    p.add_argument("--theta", type=float, required=True, help="degrees")
    p.add_argument("--theta2", type=float, required=True, help="degrees")
    p.add_argument("--chi", type=float, required=True, help="degrees")
    p.add_argument("--chi2", type=float, required=True, help="degrees")
    p.add_argument("--variant", choices=bell.VARIANTS, default="tunable_bs")

    p = sub.add_parser("ekert", parents=[common],
                       help="entanglement-based key exchange")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--variant", choices=bell.VARIANTS, default="tunable_bs")

    p = sub.add_parser("soba", parents=[common],
                       help="spin-orbit Bell-state analyzer")
    p.add_argument("--state", type=str, required=True,
                   help="psi+|psi-|phi+|phi- or custom state JSON")

    p = sub.add_parser("densecode", parents=[common],
                       help="superdense-coding round trip")
    p.add_argument("--message", type=str, required=True,
                   choices=tuple(sorted(soba.BITS_MESSAGE)))

    return parser


def _fill_defaults(args) -> None:
    env = _env_defaults()
    if args.truncation is None:
        args.truncation = int(env.get("truncation", 8))
    if args.truncation < 1:
        raise ValidationError("truncation must satisfy K >= 1")
    if args.spectrum is None and "spectrum" in env:
        args.spectrum = env["spectrum"] if isinstance(env["spectrum"], str) \
            else json.dumps(env["spectrum"])
    if args.shots is None:
        args.shots = int(env.get("shots", 0))
    if args.shots < 0:
        raise ValidationError("shots must be >= 0")
    if args.seed is None and "seed" in env:
        args.seed = int(env["seed"])
    if args.format is None:
        args.format = str(env.get("format", "json"))
    if args.format != "json":
        raise ValidationError(f"unsupported output format {args.format!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.schema:
        _emit(REPORT_SCHEMA)
        return EXIT_OK
    if args.circuit:
        _emit(circuit_to_dict(BUILTIN_CIRCUITS[args.circuit]()))
        return EXIT_OK
    if not args.command:
        _emit({"error": {"code": "validation",
                         "message": "no command given (see --help)"}})
        return EXIT_VALIDATION
    try:
        _fill_defaults(args)
        report = _HANDLERS[args.command](args)
    except (ValidationError, ValueError) as exc:
        if isinstance(exc, (WrapGuardError, TruncationError)):
            _emit({"error": {"code": "guard", "message": str(exc)}})
            return EXIT_GUARD
        _emit({"error": {"code": "validation", "message": str(exc)}})
        return EXIT_VALIDATION
    except WrapGuardError as exc:
        _emit({"error": {"code": "guard", "message": str(exc)}})
        return EXIT_GUARD
    _emit(report)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
