"""File formats and report plumbing shared by the CLI and tests.

Everything is JSON or CSV so fixtures stay diffable. Reports are written
as {schema_version, manifest, payload}; the manifest carries timestamps
and digests, the payload is deterministic given inputs and seeds.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import platform
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .coarsening import CoarseningFunction, EmbeddingTable
from .dist import JointModel, OutcomeSpace, Pmf, SampleSet
from .errors import InputFormatError
from .testdiv import PairedCorpus, PairedItem
from .testfns import Dialogue

SCHEMA_VERSION = 1


def sha256_of_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def sha256_of_obj(obj) -> str:
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    seed: Optional[int]
    config_digest: str
    input_digests: dict
    created_at: str
    versions: dict

    @classmethod
    def build(cls, command: str, seed=None, config=None, inputs=None) -> "RunManifest":
        return cls(
            command=command,
            seed=seed,
            config_digest=sha256_of_obj(config if config is not None else {}),
            input_digests={str(k): sha256_of_file(v) for k, v in (inputs or {}).items()},
            created_at=datetime.now(timezone.utc).isoformat(),
            versions={"shiftscope": __version__, "python": platform.python_version()},
        )

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "input_digests": dict(self.input_digests),
            "created_at": self.created_at,
            "versions": dict(self.versions),
        }


def write_report(path, manifest: RunManifest, payload: dict) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest.as_dict(),
        "payload": payload,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# distributions


def load_distribution(path):
    """A pmf JSON ({"mass": {...}}) or a label,count CSV -> Pmf | SampleSet."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text())
            return Pmf.from_mapping(doc["mass"])
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise InputFormatError(f"{path}: not a pmf JSON ({exc})") from exc
    return load_sampleset_csv(path)


def load_sampleset_csv(path) -> SampleSet:
    path = Path(path)
    counts: dict = {}
    try:
        with path.open(newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#"):
                    continue
                if lineno == 1 and row[0].strip().lower() == "label":
                    continue
                if len(row) != 2:
                    raise InputFormatError(f"{path}:{lineno}: expected 'label,count'")
                label, count = row[0].strip(), row[1].strip()
                counts[label] = counts.get(label, 0) + int(count)
    except (ValueError, OSError) as exc:
        raise InputFormatError(f"{path}: bad sample CSV ({exc})") from exc
    if not counts:
        raise InputFormatError(f"{path}: no rows")
    return SampleSet.from_counts(counts)


def write_sampleset_csv(path, s: SampleSet) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "count"])
        for label, count in zip(s.space.labels, s.counts):
            w.writerow([label, count])


# ---------------------------------------------------------------------------
# dialogues and corpora


def dialogue_from_json(obj, uid=None) -> Dialogue:
    try:
        return Dialogue.from_pairs([(t["q"], t["a"]) for t in obj["turns"]], uid=uid or obj.get("id"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"bad dialogue object ({exc})") from exc


def dialogue_to_json(d: Dialogue) -> dict:
    return {"turns": [{"q": " ".join(q), "a": a} for q, a in d.turns]}


def load_dialogues_jsonl(path) -> dict:
    """One dialogue per line: {id, context_id, turns:[{q, a}]} -> id keyed."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            d = dialogue_from_json(obj)
            out[str(obj["id"])] = {"dialogue": d, "context_id": obj.get("context_id")}
        except (KeyError, json.JSONDecodeError, InputFormatError) as exc:
            raise InputFormatError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise InputFormatError(f"{path}: no dialogues")
    return out


def load_paired_corpus(path) -> PairedCorpus:
    """JSONL, one pair per line: {context_id, human, generated, u?}."""
    items = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            items.append(
                PairedItem(
                    context_id=str(obj["context_id"]),
                    human=dialogue_from_json(obj["human"]),
                    generated=dialogue_from_json(obj["generated"]),
                    u=obj.get("u"),
                )
            )
        except (KeyError, json.JSONDecodeError, InputFormatError) as exc:
            raise InputFormatError(f"{path}:{lineno}: {exc}") from exc
    if not items:
        raise InputFormatError(f"{path}: no pairs")
    return PairedCorpus(tuple(items))


# ---------------------------------------------------------------------------
# embeddings and coarsenings


def load_embeddings(path) -> EmbeddingTable:
    """CSV (id, v1..vd) or JSONL {"id":..., "vector": [...]}."""
    path = Path(path)
    ids, vectors = [], []
    try:
        if path.suffix.lower() in (".jsonl", ".ndjson"):
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                ids.append(str(obj["id"]))
                vectors.append([float(x) for x in obj["vector"]])
        else:
            with path.open(newline="") as fh:
                for lineno, row in enumerate(csv.reader(fh), start=1):
                    if not row or row[0].startswith("#"):
                        continue
                    if lineno == 1 and row[0].strip().lower() == "id":
                        continue
                    ids.append(row[0].strip())
                    vectors.append([float(x) for x in row[1:]])
    except (KeyError, ValueError, json.JSONDecodeError, OSError) as exc:
        raise InputFormatError(f"{path}: bad embeddings ({exc})") from exc
    if not ids:
        raise InputFormatError(f"{path}: no embeddings")
    import numpy as np

    return EmbeddingTable(ids=tuple(ids), vectors=np.asarray(vectors, dtype=float))


def load_coarsening(path) -> CoarseningFunction:
    try:
        return CoarseningFunction.from_json(json.loads(Path(path).read_text()))
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"{path}: bad coarsening JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# joint models


def joint_from_json(doc: dict) -> JointModel:
    try:
        contexts = doc["contexts"]
        space = OutcomeSpace.from_labels(contexts.keys())
        weights = tuple(float(contexts[c]) for c in space.labels)
        rows = {}
        for key in ("human", "gen1", "gen2"):
            rows[key] = {c: Pmf.from_mapping(doc[key][c]) for c in space.labels}
        noise = Pmf.from_mapping(doc["noise"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"bad joint model ({exc})") from exc
    return JointModel(
        context_space=space,
        context_weights=weights,
        human=rows["human"],
        gen1=rows["gen1"],
        gen2=rows["gen2"],
        noise=noise,
    )


def load_joint_instance(path) -> dict:
    """Joint-model JSON plus its optional test/coarsening sections."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON ({exc})") from exc
    out = {"joint": joint_from_json(doc)}
    out["test"] = doc.get("test")
    out["coarse_map"] = doc.get("coarse_map")
    out["dialogues"] = {
        k: dialogue_from_json(v, uid=k) for k, v in doc.get("dialogues", {}).items()
    }
    return out


def load_score_table_csv(path) -> dict:
    """CSV (dialogue_id, u_id, score) -> {(id, u): score}; empty u -> None."""
    scores = {}
    try:
        with Path(path).open(newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#"):
                    continue
                if lineno == 1 and row[0].strip().lower() in ("dialogue_id", "id"):
                    continue
                if len(row) != 3:
                    raise InputFormatError(f"{path}:{lineno}: expected 'id,u,score'")
                u = row[1].strip() or None
                scores[(row[0].strip(), u)] = float(row[2])
    except (ValueError, OSError) as exc:
        raise InputFormatError(f"{path}: bad score table ({exc})") from exc
    return scores


def rows_to_csv_text(rows: Sequence, columns: Sequence) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns))
    w.writeheader()
    for row in rows:
        w.writerow({k: row.get(k, "") for k in columns})
    return buf.getvalue()
