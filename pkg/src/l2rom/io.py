"""File formats: a JSON container for models, samples, roms, certificates
and fit traces.

All files share the envelope {"kind": ..., "version": 1, ...}.  Complex
numbers are stored as two-element [re, im] arrays and matrices as row-major
nested lists (dense only).  Writes are atomic (temp file + rename) so an
interrupted run never leaves a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .certify import Certificate, CertificateRow
from .core import KronStructure, SampleSet, ScalarFamily, StructuredRom

__all__ = [
    "FORMAT_VERSION",
    "write_payload",
    "read_payload",
    "samples_to_payload",
    "samples_from_payload",
    "rom_to_payload",
    "rom_from_payload",
    "certificate_to_payload",
    "certificate_from_payload",
    "trace_to_payload",
]

FORMAT_VERSION = 1
KINDS = ("model", "samples", "rom", "certificate", "trace")
MODEL_NAMES = ("penzl", "poisson", "random-lti", "kron-parametric")


def _encode_complex_array(arr):
    arr = np.asarray(arr, dtype=complex)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _decode_complex_array(nested):
    arr = np.asarray(nested, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _encode_real_array(arr):
    return np.asarray(arr, dtype=float).tolist()


def write_payload(path, payload):
    """Atomically write a JSON payload; the envelope is validated first."""
    if payload.get("kind") not in KINDS:
        raise ValueError(f"payload kind must be one of {KINDS}")
    payload = dict(payload, version=FORMAT_VERSION)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(payload, handle, indent=1)
            handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_payload(path, expect_kind=None):
    with open(path) as handle:
        payload = json.load(handle)
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported file version {payload.get('version')!r}")
    if payload.get("kind") not in KINDS:
        raise ValueError(f"unknown file kind {payload.get('kind')!r}")
    if expect_kind is not None and payload["kind"] != expect_kind:
        raise ValueError(f"expected a {expect_kind} file, found {payload['kind']!r}")
    return payload


def samples_to_payload(samples):
    return {
        "kind": "samples",
        "points": _encode_complex_array(samples.points),
        "values": _encode_complex_array(samples.values),
        "weights": _encode_real_array(samples.weights),
    }


def samples_from_payload(payload):
    return SampleSet(
        points=_decode_complex_array(payload["points"]),
        values=_decode_complex_array(payload["values"]),
        weights=np.asarray(payload["weights"], dtype=float),
    )


def _family_to_list(family):
    return [[coeff, list(exps)] for coeff, exps in family.terms]


def _family_from_list(terms, n_p):
    return ScalarFamily(tuple((float(c), tuple(int(e) for e in exps)) for c, exps in terms), n_p)


def _terms_to_list(terms):
    return [
        {"family": _family_to_list(fam), "matrix": _encode_real_array(mat)} for fam, mat in terms
    ]


def _terms_from_list(items, n_p):
    return tuple(
        (_family_from_list(item["family"], n_p), np.asarray(item["matrix"], dtype=float))
        for item in items
    )


def rom_to_payload(rom):
    payload = {
        "kind": "rom",
        "n_p": rom.n_p,
        "A_terms": _terms_to_list(rom.A_terms),
        "B_terms": _terms_to_list(rom.B_terms),
        "C_terms": _terms_to_list(rom.C_terms),
    }
    if rom.kron is not None:
        ks = rom.kron
        payload["kron"] = {
            name: _encode_real_array(mat)
            for name, mat in (("E", ks.E), ("A", ks.A), ("E_xi", ks.E_xi), ("A_xi", ks.A_xi))
        }
    return payload


def rom_from_payload(payload):
    n_p = int(payload["n_p"])
    kron = None
    if payload.get("kron") is not None:
        kron = KronStructure(
            **{name: np.asarray(mat, dtype=float) for name, mat in payload["kron"].items()}
        )
    return StructuredRom(
        A_terms=_terms_from_list(payload["A_terms"], n_p),
        B_terms=_terms_from_list(payload["B_terms"], n_p),
        C_terms=_terms_from_list(payload["C_terms"], n_p),
        kron=kron,
    )


def certificate_to_payload(cert):
    return {
        "kind": "certificate",
        "family": cert.family,
        "tolerance": cert.tolerance,
        "passed": cert.passed,
        "max_residual": cert.max_residual,
        "rows": [
            {"label": row.label, "residuals": [[name, val] for name, val in row.residuals]}
            for row in cert.rows
        ],
    }


def certificate_from_payload(payload):
    rows = tuple(
        CertificateRow(
            label=row["label"],
            residuals=tuple((name, float(val)) for name, val in row["residuals"]),
        )
        for row in payload["rows"]
    )
    return Certificate(family=payload["family"], rows=rows, tolerance=float(payload["tolerance"]))


def model_to_payload(name, params, meta=None):
    """Model files store the generator name and parameters.

    The generators are deterministic (seeded), so regenerating on load gives
    bit-identical matrices without shipping megabytes of dense data.
    """
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown model {name!r}, expected one of {MODEL_NAMES}")
    payload = {"kind": "model", "name": name, "params": dict(params)}
    if meta:
        payload["meta"] = dict(meta)
    return payload


def model_from_payload(payload):
    """Reconstruct the full-order model object described by a model file."""
    from . import models

    name = payload["name"]
    params = payload.get("params", {})
    builders = {
        "penzl": models.make_penzl,
        "poisson": models.make_poisson,
        "random-lti": models.make_random_stable,
        "kron-parametric": models.make_kron_parametric,
    }
    if name not in builders:
        raise ValueError(f"unknown model {name!r}")
    return builders[name](**params)


def trace_to_payload(trace):
    return {
        "kind": "trace",
        "objectives": [float(v) for v in trace.objectives],
        "grad_norms": [float(v) for v in trace.grad_norms],
        "step_lengths": [float(v) for v in trace.step_lengths],
        "converged": bool(trace.converged),
        "iterations": int(trace.iterations),
        "message": trace.message,
    }
