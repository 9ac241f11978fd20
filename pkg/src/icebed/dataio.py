"""On-disk formats.

Sequence container (a directory, format version 1)::

    manifest.json   {"format": "icebed-sequence", "version": 1,
                     "l": .., "phi": .., "rho": .., "dtype": "<f4",
                     "layout": "((i*rho)+r)*phi+j",
                     "intensity_sha256": ..}
    intensity.bin   little-endian float32; the value of slice i, row r,
                    column j sits at flat index ((i*rho)+r)*phi+j
    air.csv         header i,j,a - one row per (i, j)
    bins.csv        header i,j,b - at most one row per slice

Surfaces are CSV files with header ``i,j,s`` covering the grid exactly once.
Energy parameters and synthetic configs are TOML. Every writer goes through
a temporary file and an atomic rename.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import tomli_w

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .core import EnergyParams, ExtraEvidence, Surface, TemplateModel, TopoSequence
from .errors import ChecksumMismatch, CorruptManifest, MalformedFile, SizeMismatch, UnsupportedVersion
from .synth import SynthConfig, gaussian_template, suite_config

FORMAT_VERSION = 1
SEQUENCE_FORMAT = "icebed-sequence"
PARAMS_FORMAT = "icebed-params"
LAYOUT = "((i*rho)+r)*phi+j"


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path, header):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except FileNotFoundError:
        raise MalformedFile(f"missing file: {path}") from None
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise MalformedFile(f"{path}: expected header {','.join(header)}")
    try:
        return np.array([[int(v) for v in r] for r in rows[1:] if r], dtype=np.int64).reshape(-1, len(header))
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None


# -- sequences ---------------------------------------------------------------


def write_sequence(seq: TopoSequence, path):
    """Write ``seq`` as a container directory at ``path`` (replacing any existing one)."""
    path = Path(path)
    l, phi, rho = seq.shape
    raw = np.ascontiguousarray(seq.intensity.transpose(0, 2, 1)).astype("<f4").tobytes()
    manifest = {
        "format": SEQUENCE_FORMAT,
        "version": FORMAT_VERSION,
        "l": l,
        "phi": phi,
        "rho": rho,
        "dtype": "<f4",
        "layout": LAYOUT,
        "intensity_sha256": hashlib.sha256(raw).hexdigest(),
    }
    air_rows = [(i, j, int(seq.air[i, j])) for i in range(l) for j in range(phi)]
    bin_rows = [(i, j, b) for i, (j, b) in sorted(seq.bins.items())]
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"))
    try:
        (tmp / "intensity.bin").write_bytes(raw)
        (tmp / "air.csv").write_text(_csv_text(("i", "j", "a"), air_rows), encoding="utf-8")
        (tmp / "bins.csv").write_text(_csv_text(("i", "j", "b"), bin_rows), encoding="utf-8")
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        if path.exists():
            # keep side files (e.g. ground truth) that live next to the container
            for name in ("manifest.json", "intensity.bin", "air.csv", "bins.csv"):
                os.replace(tmp / name, path / name)
            shutil.rmtree(tmp)
        else:
            os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def read_manifest(path):
    mpath = Path(path) / "manifest.json"
    if not mpath.is_file():
        raise CorruptManifest(f"manifest not found: {mpath}")
    try:
        m = json.loads(mpath.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"{mpath}: unreadable manifest ({exc})") from None
    if not isinstance(m, dict) or m.get("format") != SEQUENCE_FORMAT:
        raise CorruptManifest(f"{mpath}: not an {SEQUENCE_FORMAT} manifest")
    if "version" not in m:
        raise CorruptManifest(f"{mpath}: missing version field")
    if m["version"] != FORMAT_VERSION:
        raise UnsupportedVersion(f"{mpath}: format version {m['version']!r}, supported: {FORMAT_VERSION}")
    for key in ("l", "phi", "rho", "intensity_sha256"):
        if key not in m:
            raise CorruptManifest(f"{mpath}: missing field {key!r}")
    if not all(isinstance(m[k], int) and m[k] >= 1 for k in ("l", "phi", "rho")):
        raise CorruptManifest(f"{mpath}: dimensions must be positive integers")
    if m.get("dtype", "<f4") != "<f4" or m.get("layout", LAYOUT) != LAYOUT:
        raise CorruptManifest(f"{mpath}: unsupported dtype or layout")
    return m


def read_sequence(path) -> TopoSequence:
    path = Path(path)
    m = read_manifest(path)
    l, phi, rho = m["l"], m["phi"], m["rho"]
    ipath = path / "intensity.bin"
    if not ipath.is_file():
        raise SizeMismatch(f"{ipath}: missing (expected {4 * l * phi * rho} bytes)")
    raw = ipath.read_bytes()
    if len(raw) != 4 * l * phi * rho:
        raise SizeMismatch(f"{ipath}: {len(raw)} bytes, expected {4 * l * phi * rho} for l={l}, phi={phi}, rho={rho}")
    if hashlib.sha256(raw).hexdigest() != m["intensity_sha256"]:
        raise ChecksumMismatch(f"{ipath}: sha256 does not match manifest")
    vol = np.frombuffer(raw, dtype="<f4").reshape(l, rho, phi).transpose(0, 2, 1).astype(np.float32)

    air_rows = _read_csv(path / "air.csv", ("i", "j", "a"))
    if len(air_rows) != l * phi:
        raise SizeMismatch(f"{path / 'air.csv'}: {len(air_rows)} rows, expected {l * phi}")
    air = np.full((l, phi), -1, dtype=np.int64)
    ii, jj = air_rows[:, 0], air_rows[:, 1]
    if ii.min() < 0 or ii.max() >= l or jj.min() < 0 or jj.max() >= phi:
        raise MalformedFile(f"{path / 'air.csv'}: index out of range")
    air[ii, jj] = air_rows[:, 2]
    if len(np.unique(ii * phi + jj)) != l * phi:
        raise MalformedFile(f"{path / 'air.csv'}: duplicate or missing (i, j) entries")

    bins = {}
    for i, j, b in _read_csv(path / "bins.csv", ("i", "j", "b")):
        if int(i) in bins:
            raise MalformedFile(f"{path / 'bins.csv'}: slice {i} has more than one bin")
        bins[int(i)] = (int(j), int(b))
    return TopoSequence(vol, air, bins)


# -- surfaces and evidence ---------------------------------------------------


def surface_csv(surface: Surface) -> str:
    s = surface.labels
    return _csv_text(("i", "j", "s"), ((i, j, int(s[i, j])) for i in range(s.shape[0]) for j in range(s.shape[1])))


def write_surface(surface: Surface, path):
    atomic_write_text(path, surface_csv(surface))


def read_surface(path) -> Surface:
    rows = _read_csv(path, ("i", "j", "s"))
    if len(rows) == 0:
        raise MalformedFile(f"{path}: empty surface")
    l, phi = int(rows[:, 0].max()) + 1, int(rows[:, 1].max()) + 1
    if rows[:, :2].min() < 0:
        raise MalformedFile(f"{path}: negative index")
    if len(rows) != l * phi or len(np.unique(rows[:, 0] * phi + rows[:, 1])) != l * phi:
        raise MalformedFile(f"{path}: rows do not cover the {l}x{phi} grid exactly once")
    labels = np.empty((l, phi), dtype=np.int64)
    labels[rows[:, 0], rows[:, 1]] = rows[:, 2]
    return Surface(labels)


def write_extra(extra: ExtraEvidence, path):
    atomic_write_text(path, _csv_text(("i", "j", "s_min", "s_max"), extra.intervals()))


def read_extra(path) -> ExtraEvidence:
    """Evidence CSV with header ``i,j,s_min,s_max``; rows with equal bounds are pins."""
    rows = _read_csv(path, ("i", "j", "s_min", "s_max"))
    pins = [(i, j, lo) for i, j, lo, hi in rows if lo == hi]
    ranges = [(i, j, lo, hi) for i, j, lo, hi in rows if lo != hi]
    try:
        return ExtraEvidence(pins, ranges)
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None


# -- parameters --------------------------------------------------------------


def params_toml(params: EnergyParams) -> str:
    beta = params.beta
    doc = {
        "format": PARAMS_FORMAT,
        "version": FORMAT_VERSION,
        "air": {"tau_rows": float(params.tau)},
        "pairwise": {
            "alpha_rows": int(params.alpha),
            "sigma_hat_rows": float(params.sigma_hat),
            "beta": [float(b) for b in np.atleast_1d(beta)],
        },
        "template": {
            "length_pixels": int(params.template.t),
            "mean_intensity": [float(v) for v in params.template.mu],
            "variance_intensity2": [float(v) for v in params.template.sigma],
        },
    }
    header = (
        "# Energy parameters. Distances are in rows (range bins);\n"
        "# beta holds one smoothness weight per column, or a single shared weight.\n"
    )
    return header + tomli_w.dumps(doc)


def write_params(params: EnergyParams, path):
    atomic_write_text(path, params_toml(params))


def read_params(path) -> EnergyParams:
    try:
        doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MalformedFile(f"params file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    if doc.get("format") != PARAMS_FORMAT:
        raise MalformedFile(f"{path}: not an {PARAMS_FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: params version {doc.get('version')!r}")
    try:
        tm = TemplateModel(doc["template"]["mean_intensity"], doc["template"]["variance_intensity2"])
        pw = doc["pairwise"]
        beta = pw["beta"]
        return EnergyParams(
            tm,
            tau=doc["air"]["tau_rows"],
            alpha=pw["alpha_rows"],
            sigma_hat=pw["sigma_hat_rows"],
            beta=beta[0] if len(beta) == 1 else beta,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{path}: {exc!r}") from None


# -- synthetic configs -------------------------------------------------------

_TEMPLATE_KEYS = ("template_length", "template_contrast", "template_width")


def read_synth_config(path_or_name, seed=None) -> SynthConfig:
    """Load a TOML synth config, or a suite entry by name (``easy``, ``noisy``, ``rough``).

    A TOML file may name a suite entry under ``base`` and override any
    :class:`SynthConfig` field; the render template is described by
    ``template_length``, ``template_contrast`` and ``template_width``.
    """
    p = Path(path_or_name)
    if not p.is_file():
        try:
            cfg = suite_config(str(path_or_name))
        except KeyError:
            raise MalformedFile(f"synth config not found: {path_or_name}") from None
    else:
        try:
            doc = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise MalformedFile(f"{p}: {exc}") from None
        try:
            cfg = suite_config(doc.pop("base")) if "base" in doc else SynthConfig()
        except KeyError as exc:
            raise MalformedFile(f"{p}: unknown base {exc}") from None
        tkw = {k: doc.pop(k) for k in _TEMPLATE_KEYS if k in doc}
        if tkw:
            doc["template"] = gaussian_template(
                t=tkw.get("template_length", 11),
                contrast=tkw.get("template_contrast", 1.0),
                width=tkw.get("template_width", 1.5),
            )
        if "amplitude" in doc:
            doc["amplitude"] = tuple(doc["amplitude"])
        unknown = set(doc) - set(SynthConfig.__dataclass_fields__)
        if unknown:
            raise MalformedFile(f"{p}: unknown keys {sorted(unknown)}")
        cfg = cfg.replace(**doc)
    return cfg if seed is None else cfg.replace(seed=int(seed))
