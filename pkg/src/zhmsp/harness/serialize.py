"""Instance text format.

One JSON document per instance, written compactly with a fixed key order so
that ``serialize_instance(deserialize_instance(text)) == text``::

    {"format": "zhmsp-instance/1", "L": 5, "stages": [1, 1, 1, 1, 1, 1],
     "edges": [[0, 0, 1], ...], "labels": {"1:0": [0], ...},
     "provenance": {...}, "reduction_map": [...], "sha256": "..."}

``edges`` holds ``[tail index in stage, head index in stage, stage]`` in
EdgeId order; ``labels`` maps ``"stage:index"`` to EdgeIds.  ``sha256`` is
the digest of the same document without that field.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

from ..edgeset import iter_bits
from ..graph import BadLabel, MultiStageGraph, build_graph
from ..reduction import CnfFormula, ReductionMap, VertexOrigin

FORMAT = "zhmsp-instance/1"


class FormatVersionMismatch(ValueError):
    pass


class HashMismatch(UserWarning):
    pass


@dataclass
class Instance:
    id: str
    graph: MultiStageGraph
    provenance: dict = field(default_factory=dict)
    formula: CnfFormula | None = None
    reduction: ReductionMap | None = None


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def graph_body(g: MultiStageGraph) -> dict:
    labels = {}
    for v in range(1, g.n_vertices):
        l, i = g.position(v)
        labels[f"{l}:{i}"] = list(iter_bits(g.label_bits[v]))
    return {
        "format": FORMAT,
        "L": g.L,
        "stages": list(g.stage_sizes),
        "edges": [list(t) for t in g.edge_triples_local()],
        "labels": labels,
    }


def content_hash(g: MultiStageGraph) -> str:
    """Digest of the graph alone (no provenance)."""
    return hashlib.sha256(_dumps(graph_body(g)).encode()).hexdigest()


def serialize_instance(g: MultiStageGraph, provenance: dict | None = None,
                       reduction: ReductionMap | None = None) -> str:
    body = graph_body(g)
    body["provenance"] = provenance or {}
    if reduction is not None:
        body["reduction_map"] = reduction.to_list()
        body["reduction_clauses"] = [list(c) for c in reduction.clauses]
    digest = hashlib.sha256(_dumps(body).encode()).hexdigest()
    body["sha256"] = digest
    return _dumps(body) + "\n"


def deserialize_instance(text: str | bytes, min_L: int = 5) -> tuple[MultiStageGraph, dict, ReductionMap | None]:
    """Parse an instance document into ``(graph, provenance, reduction map)``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"instance is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("instance document must be a JSON object")
    fmt = doc.get("format")
    if fmt != FORMAT:
        raise FormatVersionMismatch(f"expected format {FORMAT!r}, got {fmt!r}")
    for key in ("L", "stages", "edges", "labels"):
        if key not in doc:
            raise ValueError(f"instance is missing field {key!r}")
    stages = doc["stages"]
    if len(stages) != doc["L"] + 1:
        raise ValueError(f"L = {doc['L']} but {len(stages)} stages listed")
    labels = {}
    for key, ids in doc["labels"].items():
        try:
            l, i = (int(x) for x in key.split(":"))
        except ValueError:
            raise BadLabel(f"label key {key!r} is not 'stage:index'") from None
        if not isinstance(ids, list):
            raise BadLabel(f"label {key!r}: expected a list of edge ids")
        labels[(l, i)] = ids
    g = build_graph(stages, [tuple(e) for e in doc["edges"]], labels, min_L=min_L)

    stored = doc.get("sha256")
    if stored is not None:
        body = {k: v for k, v in doc.items() if k != "sha256"}
        actual = hashlib.sha256(_dumps(body).encode()).hexdigest()
        if actual != stored:
            warnings.warn(f"instance hash mismatch: stored {stored[:12]}, actual {actual[:12]}",
                          HashMismatch, stacklevel=2)
    rmap = None
    if "reduction_map" in doc:
        rmap = ReductionMap([VertexOrigin.from_dict(d) for d in doc["reduction_map"]],
                            tuple(tuple(c) for c in doc.get("reduction_clauses", [])))
    return g, doc.get("provenance", {}), rmap
