"""JSON and CSV encodings for matrices, channels, MC states and reports.

Matrices are ``{"dim": d, "re": [[...]], "im": [[...]]}`` when square and
``{"rows": r, "cols": c, ...}`` otherwise. Python's float repr is the
shortest string that round-trips, so encoding is bit-exact.
"""

import csv
import io as _io
import json

import numpy as np

from . import __version__
from .channels import QuantumChannel
from .errors import ResourceKitError
from .states import MCState, computational


class ParseError(ResourceKitError, ValueError):
    """Input could not be decoded into the expected object."""


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    out = {}
    if M.shape[0] == M.shape[1]:
        out["dim"] = M.shape[0]
    else:
        out["rows"], out["cols"] = M.shape
    out["re"] = M.real.tolist()
    out["im"] = M.imag.tolist()
    return out


def matrix_from_json(obj):
    try:
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
        if "dim" in obj:
            shape = (int(obj["dim"]), int(obj["dim"]))
        else:
            shape = (int(obj["rows"]), int(obj["cols"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != shape or im.shape != shape:
        raise ParseError(f"matrix entries of shape {re.shape}/{im.shape} do not match declared {shape}")
    M = re + 1j * im
    if not np.all(np.isfinite(M)):
        raise ParseError("matrix has non-finite entries")
    return M


def channel_to_json(ch):
    return {"in_dim": ch.in_dim, "out_dim": ch.out_dim,
            "kraus": [matrix_to_json(K) for K in ch.kraus]}


def channel_from_json(obj):
    try:
        ks = [matrix_from_json(k) for k in obj["kraus"]]
        d_in, d_out = int(obj["in_dim"]), int(obj["out_dim"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed channel JSON: {exc}") from exc
    for K in ks:
        if K.shape != (d_out, d_in):
            raise ParseError(f"Kraus operator of shape {K.shape}, expected {(d_out, d_in)}")
    if not ks:
        raise ParseError("channel has no Kraus operators")
    return QuantumChannel(np.stack(ks))


def mc_state_to_json(mc):
    d = mc.coeff.shape[0]
    canonical = all(B.shape == (d, d) and np.array_equal(B, computational(d)) for B in mc.bases)
    out = {"coeff": matrix_to_json(mc.coeff)}
    if canonical:
        out["canonical"] = True
        out["parties"] = mc.parties
    else:
        out["bases"] = [matrix_to_json(B) for B in mc.bases]
    return out


def mc_state_from_json(obj):
    try:
        coeff = matrix_from_json(obj["coeff"])
        if obj.get("canonical"):
            d = coeff.shape[0]
            bases = [computational(d)] * int(obj.get("parties", 2))
        else:
            bases = [matrix_from_json(B) for B in obj["bases"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed MC state JSON: {exc}") from exc
    return MCState(coeff, bases)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"cannot encode {type(o).__name__}")


def dumps(obj):
    """Deterministic JSON (sorted keys, fixed separators)."""
    return json.dumps(obj, default=_default, sort_keys=True, indent=2) + "\n"


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


def load_file(path):
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def with_version(report):
    out = dict(report)
    out["version"] = __version__
    return out


def reports_to_csv(reports, columns):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in reports:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_row()])
    return buf.getvalue()
