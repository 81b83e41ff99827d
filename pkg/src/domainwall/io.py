"""JSON interchange for QUBOs and DQMs.

QUBO files look like::

    {"num_bits": 6, "linear": {"1": 4.0}, "quadratic": [[0, 1, -4.0]],
     "offset": -1.0, "labels": [[0, 0], [0, 1]], "encoding": {...}}

with ``p < q`` required for every quadratic entry.  DQM files carry
``num_vars``, ``size``, ``terms`` as ``[i, j, a, b, weight]`` rows and an
optional ``constraints`` list of ``[i, j, a, b]`` keys.
"""

from __future__ import annotations

import json
from pathlib import Path

from .encoders import EncodingMap
from .errors import DomainError, StructureError
from .model import PLUMBING, Dqm, Qubo

__all__ = [
    "qubo_to_dict",
    "qubo_from_dict",
    "dqm_to_dict",
    "dqm_from_dict",
    "save_qubo",
    "load_qubo",
]


def qubo_to_dict(q: Qubo, encoding: EncodingMap | None = None) -> dict:
    out = {
        "num_bits": q.num_bits,
        "linear": {str(p): v for p, v in q.linear.items()},
        "quadratic": [[p, r, v] for (p, r), v in q.quadratic.items()],
        "offset": q.offset,
        "labels": [lab if lab == PLUMBING else list(lab) for lab in q.labels],
    }
    if encoding is not None:
        out["encoding"] = encoding.to_dict()
    return out


def qubo_from_dict(data: dict) -> tuple[Qubo, EncodingMap | None]:
    try:
        n = int(data["num_bits"])
        linear = {int(p): float(v) for p, v in data.get("linear", {}).items()}
        quad = []
        for row in data.get("quadratic", []):
            p, r, v = int(row[0]), int(row[1]), float(row[2])
            if not p < r:
                raise StructureError(f"quadratic entry ({p}, {r}) is not upper-triangular")
            quad.append(((p, r), v))
        labels = data.get("labels")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StructureError):
            raise
        raise DomainError(f"malformed QUBO JSON: {exc}") from exc
    keys = [k for k, _ in quad]
    if len(set(keys)) != len(keys):
        raise StructureError("duplicate quadratic entries")
    q = Qubo.from_terms(n, linear, quad, float(data.get("offset", 0.0)), labels)
    enc = data.get("encoding")
    return q, None if enc is None else EncodingMap.from_dict(enc)


def dqm_to_dict(d: Dqm) -> dict:
    return {
        "num_vars": d.num_vars,
        "size": d.size,
        "terms": [[i, j, a, b, w] for (i, j, a, b), w in d.terms.items()],
        "constraints": [list(k) for k in sorted(d.constraints)],
    }


def dqm_from_dict(data: dict) -> Dqm:
    try:
        terms = [((int(r[0]), int(r[1]), int(r[2]), int(r[3])), float(r[4])) for r in data["terms"]]
        cons = [tuple(int(v) for v in k) for k in data.get("constraints", [])]
        size = data["size"] if "size" in data else data["sizes"]
        return Dqm.from_terms(int(data["num_vars"]), size, terms, cons)
    except (KeyError, TypeError, IndexError) as exc:
        raise DomainError(f"malformed DQM JSON: {exc}") from exc


def save_qubo(path: str | Path, q: Qubo, encoding: EncodingMap | None = None) -> None:
    Path(path).write_text(json.dumps(qubo_to_dict(q, encoding), indent=1) + "\n")


def load_qubo(path: str | Path) -> tuple[Qubo, EncodingMap | None]:
    return qubo_from_dict(json.loads(Path(path).read_text()))
