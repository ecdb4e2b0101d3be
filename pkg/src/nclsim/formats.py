"""File formats: profile/expansion JSON, CSV exports and provenance headers."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .elimination import NAMED_OPS, ModeExpansion
from .fock import LossProfile, TailRule


class FormatError(ValueError):
    """Input file does not follow the expected layout."""


# -- provenance --------------------------------------------------------------


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(config: dict) -> dict:
    return {"tool": "nclsim", "version": __version__, "config_hash": config_hash(config)}


def provenance_line(config: dict) -> str:
    p = provenance(config)
    return f"# {p['tool']} {p['version']} config_hash={p['config_hash']}\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header, rows, config=None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write(provenance_line(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


# -- loss profiles -----------------------------------------------------------


def profile_to_dict(profile: LossProfile) -> dict:
    tail = {"periodic": profile.period} if profile.tail is TailRule.PERIODIC else profile.tail.value
    return {"n_max": profile.n_max, "f": list(profile.f_values), "tail": tail}


def profile_from_dict(data: dict) -> LossProfile:
    try:
        f = data["f"]
        n_max = int(data["n_max"])
        tail = data.get("tail", "hold")
    except (KeyError, TypeError) as exc:
        raise FormatError(f"profile JSON needs 'n_max' and 'f': {exc}") from None
    if len(f) != n_max + 1:
        raise FormatError(f"'f' has {len(f)} entries, expected n_max + 1 = {n_max + 1}")
    period = None
    if isinstance(tail, dict):
        if set(tail) != {"periodic"}:
            raise FormatError(f"unknown tail rule {tail!r}")
        period = int(tail["periodic"])
        tail = TailRule.PERIODIC
    elif tail not in ("truncate", "hold"):
        raise FormatError(f"unknown tail rule {tail!r}")
    try:
        return LossProfile(tuple(f), tail, period)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_profile(path) -> LossProfile:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return profile_from_dict(data)


# -- density matrices --------------------------------------------------------


def density_matrix_rows(rho):
    rho = np.asarray(rho)
    for n in range(rho.shape[0]):
        for m in range(n + 1):
            yield n, m, rho[n, m]


def density_matrix_csv(rho, config=None) -> str:
    rows = [(n, m, _fmt(v.real), _fmt(v.imag)) for n, m, v in density_matrix_rows(rho)]
    return _csv(["n", "m", "re", "im"], rows, config)


def read_density_matrix_csv(text: str) -> np.ndarray:
    lines = _data_lines(text)
    if not lines or lines[0].replace(" ", "") != "n,m,re,im":
        raise FormatError("density-matrix CSV must start with header n,m,re,im")
    entries = []
    for ln in lines[1:]:
        n, m, re, im = ln.split(",")
        entries.append((int(n), int(m), complex(float(re), float(im))))
    dim = max(n for n, _, _ in entries) + 1
    rho = np.zeros((dim, dim), dtype=complex)
    for n, m, v in entries:
        if m > n:
            raise FormatError("density-matrix CSV holds the lower triangle only")
        rho[m, n] = np.conj(v)
        rho[n, m] = v
    return rho


# -- trajectories ------------------------------------------------------------


def trajectory_csv(traj, config=None) -> str:
    if traj.mode == "matrix":
        rows = [
            (_fmt(t), n, m, _fmt(v.real), _fmt(v.imag))
            for t, rho in zip(traj.times, traj.states)
            for n, m, v in density_matrix_rows(rho)
        ]
        return _csv(["t", "n", "m", "re", "im"], rows, config)
    states = np.asarray(traj.states)
    complex_xi = np.iscomplexobj(states) and np.max(np.abs(states.imag), initial=0.0) > 0
    header = ["t", "k", "n", "xi"] + (["xi_im"] if complex_xi else [])
    rows = []
    for t, xi in zip(traj.times, states):
        for n, v in enumerate(xi):
            row = [_fmt(t), traj.offset, n, _fmt(np.real(v))]
            if complex_xi:
                row.append(_fmt(np.imag(v)))
            rows.append(row)
    return _csv(header, rows, config)


def diagnostics_csv(traj, config=None) -> str:
    rows = [
        (_fmt(t), _fmt(a), _fmt(b), _fmt(c))
        for t, a, b, c in zip(traj.times, traj.trace_error, traj.min_xi, traj.herm_error)
    ]
    return _csv(["t", "trace_error", "min_xi", "herm_error"], rows, config)


# -- sweeps ------------------------------------------------------------------


def sweep_csv(rows, config=None) -> str:
    body = [(_fmt(r["r"]), _fmt(r["coherence"]), _fmt(r["fidelity"]), _fmt(r["purity"])) for r in rows]
    return _csv(["r", "coherence", "fidelity", "purity"], body, config)


def metric_sweep_csv(rows, metric: str, config=None) -> str:
    return _csv(["r", "metric_value"], [(_fmt(r["r"]), _fmt(r[metric])) for r in rows], config)


# -- elimination -------------------------------------------------------------


def _matrix_from_dump(dump, dim):
    if isinstance(dump, dict):
        mat = np.asarray(dump["re"], dtype=float) + 1j * np.asarray(dump.get("im", 0.0), dtype=float)
    else:
        arr = np.asarray(dump, dtype=float)
        mat = arr[..., 0] + 1j * arr[..., 1] if arr.ndim == 3 else arr.astype(complex)
    if mat.shape != (dim, dim):
        raise FormatError(f"matrix dump has shape {mat.shape}, expected {(dim, dim)}")
    return mat


def expansion_from_dict(data: dict) -> ModeExpansion:
    try:
        kept, lossy, gamma = int(data["kept_dim"]), int(data["lossy_dim"]), float(data["gamma"])
        terms = data["terms"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"expansion JSON missing field: {exc}") from None
    ops = {}
    for term in terms:
        m, n, op = int(term["m"]), int(term["n"]), term["op"]
        coeff = complex(*term.get("coeff", [1.0, 0.0]))
        if op == "matrix":
            if "matrix" not in term:
                raise FormatError("op 'matrix' needs a 'matrix' dump")
            base = _matrix_from_dump(term["matrix"], kept)
        elif op in NAMED_OPS:
            base = NAMED_OPS[op](kept)
        else:
            raise FormatError(f"unknown operator {op!r}")
        ops[(m, n)] = ops.get((m, n), 0) + coeff * base
    try:
        return ModeExpansion(kept, lossy, gamma, ops)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_expansion(path) -> ModeExpansion:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return expansion_from_dict(data)


def elimination_csv(report, config=None) -> str:
    rows = [(_fmt(t), _fmt(d)) for t, d in zip(report.times, report.trace_distance)]
    return _csv(["t", "trace_distance"], rows, config)
