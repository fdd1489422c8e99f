"""Plain-text instance files, seeded instance generators, and the one-line
result record format shared by the CLI subcommands.

An instance file is a header ``d=<int> n=<int>`` followed by n lines of d
comma-separated decimals. Records are single lines of ``key=value`` tokens
with the center list JSON-encoded, so they survive a round trip through
shell pipelines and diff cleanly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .geometry import PointSet, as_points

__all__ = [
    "ResultRecord",
    "parse_instance",
    "parse_instance_file",
    "format_instance",
    "format_record",
    "parse_record",
    "gen_uniform",
    "gen_gaussian_mixture",
    "gen_two_scale",
]

_HEADER_RE = re.compile(r"^d=(\d+) n=(\d+)$")

RECORD_KEYS = (
    "algorithm",
    "k",
    "r",
    "z",
    "eps",
    "radius_factor",
    "cost",
    "covered_count",
    "seed",
    "wall_time_ms",
    "centers",
)


@dataclass
class ResultRecord:
    algorithm: str
    k: int
    r: float
    z: int
    eps: float
    radius_factor: float
    cost: float
    covered_count: int
    seed: int
    wall_time_ms: float
    centers: list
    extras: dict | None = None


def format_instance(P) -> str:
    """Render points in the instance file format."""
    P = as_points(P)
    n, d = P.shape
    lines = [f"d={d} n={n}"]
    for row in P:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> PointSet:
    """Parse instance text; raises ParseError with a 1-based line number."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty instance file", line=1)
    m = _HEADER_RE.match(lines[0].strip())
    if not m:
        raise ParseError("header must be 'd=<int> n=<int>'", line=1)
    d, n = int(m.group(1)), int(m.group(2))
    if d < 1:
        raise ParseError("dimension must be >= 1", line=1)
    rows = []
    ln = 1
    for ln, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.strip().split(",")
        if len(parts) != d:
            raise ParseError(f"expected {d} coordinates, got {len(parts)}", line=ln)
        try:
            row = [float(v) for v in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=ln) from exc
        if not all(np.isfinite(row)):
            raise ParseError("non-finite coordinate", line=ln)
        rows.append(row)
    if len(rows) != n:
        raise ParseError(f"header promised n={n} points, file has {len(rows)}", line=ln)
    if n == 0:
        raise ParseError("instance has no points", line=1)
    return np.array(rows, dtype=float)


def parse_instance_file(path) -> PointSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_record(rec: ResultRecord, pretty: bool = False) -> str:
    """One ``key=value`` line (or an aligned block with ``pretty``)."""
    centers_json = json.dumps(
        [[float(v) for v in row] for row in rec.centers], separators=(",", ":")
    )
    items = [
        ("algorithm", rec.algorithm),
        ("k", rec.k),
        ("r", float(rec.r)),
        ("z", rec.z),
        ("eps", float(rec.eps)),
        ("radius_factor", float(rec.radius_factor)),
        ("cost", float(rec.cost)),
        ("covered_count", rec.covered_count),
        ("seed", rec.seed),
        ("wall_time_ms", float(rec.wall_time_ms)),
        ("centers", centers_json),
    ]
    for key, value in (rec.extras or {}).items():
        items.append((key, value))
    if pretty:
        width = max(len(k) for k, _ in items)
        return "\n".join(f"{k.ljust(width)} = {_fmt(v)}" for k, v in items) + "\n"
    return " ".join(f"{k}={_fmt(v)}" for k, v in items)


def parse_record(line: str) -> ResultRecord:
    """Inverse of the one-line format; unknown keys land in ``extras``."""
    fields: dict[str, str] = {}
    for token in line.strip().split(" "):
        if not token:
            continue
        if "=" not in token:
            raise ParseError(f"malformed record token {token!r}")
        key, value = token.split("=", 1)
        fields[key] = value
    missing = [k for k in RECORD_KEYS if k not in fields]
    if missing:
        raise ParseError(f"record is missing keys: {missing}")
    extras = {k: v for k, v in fields.items() if k not in RECORD_KEYS}
    return ResultRecord(
        algorithm=fields["algorithm"],
        k=int(fields["k"]),
        r=float(fields["r"]),
        z=int(fields["z"]),
        eps=float(fields["eps"]),
        radius_factor=float(fields["radius_factor"]),
        cost=float(fields["cost"]),
        covered_count=int(fields["covered_count"]),
        seed=int(fields["seed"]),
        wall_time_ms=float(fields["wall_time_ms"]),
        centers=json.loads(fields["centers"]),
        extras=extras or None,
    )


def gen_uniform(n: int, d: int, seed: int, box: float = 10.0) -> PointSet:
    """n points uniform in [0, box]^d."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, box, size=(n, d))


def gen_gaussian_mixture(
    n: int,
    d: int,
    seed: int,
    mixture_k: int = 3,
    spread: float = 1.0,
    box: float = 10.0,
) -> PointSet:
    """Exactly n points from mixture_k equal-weight spherical gaussians whose
    means are uniform in [0, box]^d."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, box, size=(mixture_k, d))
    which = rng.integers(0, mixture_k, size=n)
    return means[which] + rng.normal(0.0, spread, size=(n, d))


def gen_two_scale(
    n: int,
    d: int,
    seed: int,
    blob_centers=None,
    n_blobs: int = 2,
    blob_std: float = 0.3,
    stragglers: int = 4,
    straggler_lo: float = 2.0,
    straggler_hi: float = 2.8,
    box: float = 10.0,
) -> PointSet:
    """Dense blobs plus a handful of stragglers rung around them.

    Stragglers sit at distance uniform in [straggler_lo, straggler_hi] from a
    blob center, cycling through the blobs; the remaining n - stragglers
    points are split round-robin across the blobs with gaussian jitter of
    ``blob_std``.
    """
    rng = np.random.default_rng(seed)
    if blob_centers is None:
        centers = rng.uniform(0.0, box, size=(n_blobs, d))
    else:
        centers = as_points(blob_centers, name="blob_centers")
        if centers.shape[1] != d:
            raise ValueError(f"blob centers are {centers.shape[1]}-d, requested d={d}")
    nb = centers.shape[0]
    stragglers = min(stragglers, n)
    core = n - stragglers
    rows = []
    for i in range(core):
        c = centers[i % nb]
        rows.append(c + rng.normal(0.0, blob_std, size=d))
    for i in range(stragglers):
        c = centers[i % nb]
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        rows.append(c + direction * rng.uniform(straggler_lo, straggler_hi))
    return np.array(rows, dtype=float)
