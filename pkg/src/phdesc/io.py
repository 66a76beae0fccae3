"""File formats: extended XYZ, diagram CSV, binary feature grids, model documents."""

from __future__ import annotations

import base64
import csv
import json
import math
import os
import shlex
import struct
import tempfile
from contextlib import contextmanager

import numpy as np

from .descriptor import DescriptorHistogram, GridSpec, StandardizationStats
from .errors import InputError, ParseError, ShapeError
from .filtration import Convention
from .geometry import PeriodicStructure
from .model import PcaProjection, RidgeModel
from .persistence import INF, PersistenceDiagram, PersistencePair

FEATURE_MAGIC = b"PHDESC1\0"
_HEADER = struct.Struct("<8sIddI")
MODEL_FORMAT = "phdesc-ridge-model/1"


@contextmanager
def atomic_write(path, mode="w", newline=None):
    """Write to a temporary sibling, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    kwargs = {} if "b" in mode else {"encoding": "utf-8", "newline": newline}
    try:
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- extended XYZ -----------------------------------------------------------

def _parse_comment(line, lineno):
    try:
        tokens = shlex.split(line, posix=True)
    except ValueError as exc:
        raise ParseError(f"unbalanced quotes in comment line ({exc})", lineno) from None
    fields = {}
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            fields[k] = v
    return fields


def _parse_lattice(text, lineno):
    try:
        vals = np.array([float(x) for x in text.split()], dtype=float)
    except ValueError:
        raise ParseError(f"malformed Lattice {text!r}", lineno) from None
    if vals.size != 9 or not np.all(np.isfinite(vals)):
        raise ParseError(f"Lattice needs 9 finite numbers, got {text!r}", lineno)
    m = vals.reshape(3, 3)
    if np.any(np.abs(m - np.diag(np.diag(m))) > 1e-10):
        raise ParseError("only orthorhombic lattices are supported", lineno)
    lengths = np.diag(m)
    if np.any(lengths <= 0):
        raise ParseError(f"lattice lengths must be positive, got {lengths.tolist()}", lineno)
    return lengths


def read_extxyz(path):
    """All frames of an extended XYZ file; an empty file yields ``[]``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    frames = []
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        lineno = i + 1
        try:
            count = int(lines[i].strip())
        except ValueError:
            raise ParseError(f"expected an atom count, got {lines[i]!r}", lineno) from None
        if count < 1:
            raise ParseError(f"atom count must be positive, got {count}", lineno)
        if i + 1 >= len(lines):
            raise ParseError("missing comment line", lineno + 1)
        fields = _parse_comment(lines[i + 1], lineno + 1)
        if "Lattice" not in fields:
            raise ParseError("comment line has no Lattice=", lineno + 1)
        cell = _parse_lattice(fields["Lattice"], lineno + 1)
        atom_lines = lines[i + 2:i + 2 + count]
        if len(atom_lines) < count or any(not ln.strip() for ln in atom_lines):
            got = sum(1 for ln in atom_lines if ln.strip())
            raise ParseError(f"declared {count} atoms but found {got}", lineno)
        species, pos, extra = [], [], []
        for k, ln in enumerate(atom_lines):
            parts = ln.split()
            if len(parts) < 4:
                raise ParseError(f"atom line needs species and 3 coordinates: {ln!r}", i + 3 + k)
            try:
                xyz = [float(x) for x in parts[1:4]]
            except ValueError:
                raise ParseError(f"bad coordinate in {ln!r}", i + 3 + k) from None
            if not all(math.isfinite(x) for x in xyz):
                raise ParseError("non-finite coordinate", i + 3 + k)
            species.append(parts[0])
            pos.append(xyz)
            extra.append(parts[4:])
        label = None
        for key in ("energy_per_atom", "energy"):
            if key in fields:
                try:
                    label = float(fields[key])
                except ValueError:
                    raise ParseError(f"bad {key} value {fields[key]!r}", lineno + 1) from None
                if key == "energy":
                    label /= count
                if not math.isfinite(label):
                    raise ParseError(f"non-finite {key}", lineno + 1)
                break
        info = {k: v for k, v in fields.items() if k not in ("Lattice", "Properties", "energy_per_atom", "id")}
        frames.append(PeriodicStructure(np.array(pos), cell, tuple(species), label,
                                        fields.get("id", f"frame{len(frames)}"), info))
        i += 2 + count
    return frames


def _fmt(x):
    return repr(float(x))  # shortest round-trip representation


def format_extxyz(structure: PeriodicStructure, extra_columns=None) -> str:
    a, b, c = structure.cell
    props = "species:S:1:pos:R:3"
    if extra_columns:
        props += "".join(f":{name}:S:1" for name in extra_columns)
    head = [f'Lattice="{_fmt(a)} 0 0 0 {_fmt(b)} 0 0 0 {_fmt(c)}"', f"Properties={props}", "pbc=\"T T T\""]
    if structure.id:
        head.append(f"id={shlex.quote(structure.id)}")
    if structure.label is not None:
        head.append(f"energy_per_atom={_fmt(structure.label)}")
    for k, v in sorted(structure.info.items()):
        if k in ("pbc",):
            continue
        head.append(f"{k}={shlex.quote(str(v))}")
    out = [str(structure.n_atoms), " ".join(head)]
    for k, (sp, p) in enumerate(zip(structure.species, structure.positions)):
        row = f"{sp} {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}"
        if extra_columns:
            row += "".join(f" {col[k]}" for col in extra_columns.values())
        out.append(row)
    return "\n".join(out) + "\n"


def write_extxyz(path, structures, extra_columns=None):
    with atomic_write(path) as fh:
        for k, s in enumerate(structures):
            cols = extra_columns[k] if extra_columns else None
            fh.write(format_extxyz(s, cols))


# -- persistence diagrams ---------------------------------------------------

def _g9(x):
    return "inf" if x == INF else f"{x:.9g}"


def write_diagram_csv(path, diagram: PersistenceDiagram, include_zero=False):
    """``dim,birth,death`` rows, 9 significant digits, ``inf`` for essential classes."""
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dim", "birth", "death"])
        for p in diagram.pairs:
            if p.zero_persistence and not include_zero:
                continue
            w.writerow([p.dim, _g9(p.birth), _g9(p.death)])


def read_diagram_csv(path, convention=Convention.SQUARED_RADIUS, structure_id="") -> PersistenceDiagram:
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["dim", "birth", "death"]:
            raise ParseError(f"expected header dim,birth,death, got {header}", 1)
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            try:
                dim, birth, death = int(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise ParseError(f"bad diagram row {row}", lineno) from None
            pairs.append(PersistencePair(dim, birth, death, None, None))
    return PersistenceDiagram(pairs, Convention.parse(convention), structure_id)


# -- binary feature grids ---------------------------------------------------

def write_features(path, histograms, spec: GridSpec = None, ids=None, labels=None, extra=None):
    """Binary grid file plus ``<path>.csv`` manifest (``index,id,label`` and extras)."""
    if spec is None:
        if not histograms:
            raise ShapeError("cannot infer a grid spec from zero histograms")
        spec = histograms[0].spec
    for h in histograms:
        if h.spec != spec:
            raise ShapeError(f"histogram spec {h.spec} does not match {spec}")
    with atomic_write(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, spec.bins, spec.lo, spec.hi, len(histograms)))
        for h in histograms:
            fh.write(np.ascontiguousarray(h.grid, dtype="<f8").tobytes())
    if ids is not None:
        write_manifest(os.fspath(path) + ".csv", ids, labels, extra)


def _read_header(fh, path):
    raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, bins, lo, hi, count = _HEADER.unpack(raw)
    if magic != FEATURE_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    return GridSpec(bins, lo, hi), count


def read_features(path, normalized=True):
    """Return ``(spec, [DescriptorHistogram, ...])``."""
    with open(path, "rb") as fh:
        spec, count = _read_header(fh, path)
        size = spec.bins * spec.bins
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count * size:
        raise ParseError(f"{path}: expected {count} grids of {size} values, found {data.size} values")
    grids = data.reshape(count, spec.bins, spec.bins).astype(float)
    hists = [DescriptorHistogram(g, spec, normalized=normalized, empty=not g.any()) for g in grids]
    return spec, hists


def write_manifest(path, ids, labels=None, extra=None):
    extra = extra or {}
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "id", "label", *extra.keys()])
        for k, sid in enumerate(ids):
            lab = "" if labels is None or labels[k] is None else _fmt(labels[k])
            w.writerow([k, sid, lab, *(col[k] for col in extra.values())])


def read_manifest(path):
    """Rows of a CSV file as dicts."""
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_stats(path, stats: StandardizationStats):
    spec = stats.spec
    with atomic_write(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, spec.bins, spec.lo, spec.hi, 2))
        fh.write(np.ascontiguousarray(stats.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(stats.std, dtype="<f8").tobytes())


def read_stats(path) -> StandardizationStats:
    with open(path, "rb") as fh:
        spec, count = _read_header(fh, path)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if count != 2 or data.size != 2 * spec.bins ** 2:
        raise ParseError(f"{path}: not a standardization stats file")
    mean, std = data.reshape(2, spec.bins, spec.bins).astype(float)
    return StandardizationStats(mean, std, spec)


# -- model document ---------------------------------------------------------

def _b64(a):
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _unb64(s, shape):
    return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(float).reshape(shape)


def model_to_dict(model: RidgeModel) -> dict:
    if model.spec is None or model.stats is None:
        raise ShapeError("only grid models with standardization stats can be serialized")
    spec = model.spec
    return {
        "format": MODEL_FORMAT,
        "encoding": "base64 little-endian float64, row-major (birth row, death column)",
        "spec": {"bins": spec.bins, "lo": spec.lo, "hi": spec.hi},
        "lambda": model.lam,
        "seed": model.seed,
        "intercept": model.intercept,
        "weights": _b64(model.weights),
        "stats": {"mean": _b64(model.stats.mean), "std": _b64(model.stats.std), "epsilon": model.stats.epsilon},
        "meta": model.meta,
    }


def model_from_dict(doc) -> RidgeModel:
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(f"unsupported model format {doc.get('format')!r}")
    s = doc["spec"]
    spec = GridSpec(s["bins"], s["lo"], s["hi"])
    stats = StandardizationStats(_unb64(doc["stats"]["mean"], spec.shape), _unb64(doc["stats"]["std"], spec.shape),
                                 spec, doc["stats"].get("epsilon", 1e-12))
    return RidgeModel(_unb64(doc["weights"], (spec.bins ** 2,)), float(doc["intercept"]), float(doc["lambda"]),
                      stats, spec, doc.get("seed"), dict(doc.get("meta", {})))


def write_model(path, model: RidgeModel):
    with atomic_write(path) as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_model(path) -> RidgeModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None
    return model_from_dict(doc)


# -- tables -----------------------------------------------------------------

def write_pca_csv(path, projection: PcaProjection, sample_ids, labels=None, densities=None):
    if projection.coordinates.shape[1] < 2:
        raise ShapeError("PCA output needs at least 2 components")
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "pc1", "pc2", "label", "density"])
        for k, sid in enumerate(sample_ids):
            lab = "" if labels is None or labels[k] is None else _fmt(labels[k])
            den = "" if densities is None or densities[k] is None else _fmt(densities[k])
            w.writerow([sid, _fmt(projection.coordinates[k, 0]), _fmt(projection.coordinates[k, 1]), lab, den])


def read_pca_csv(path):
    rows = read_manifest(path)
    def num(v):
        return float(v) if v != "" else None
    return [{"sample_id": r["sample_id"], "pc1": float(r["pc1"]), "pc2": float(r["pc2"]),
             "label": num(r["label"]), "density": num(r["density"])} for r in rows]


def write_predictions_csv(path, ids, actual, predicted):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "actual", "predicted"])
        for sid, a, p in zip(ids, actual, predicted):
            w.writerow([sid, "" if a is None else _fmt(a), _fmt(p)])


def write_dataset_manifest(path, structures):
    """``id,kind,density,n_atoms,seed,energy_per_atom`` for generated structures."""
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "kind", "density", "n_atoms", "seed", "energy_per_atom"])
        for s in structures:
            w.writerow([s.id, s.info.get("kind", ""), _fmt(s.info.get("density", s.density)), s.n_atoms,
                        s.info.get("seed", ""), "" if s.label is None else _fmt(s.label)])
