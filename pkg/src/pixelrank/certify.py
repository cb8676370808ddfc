"""Certificates for the structural properties of image families: row
configuration counts, fixed-row unfolding ranks, the row-cut subadditivity
inequality, region rank profiles, random baselines, and rank scaling
experiments."""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .images import ImageFamily, Region, gen_random_family, make_family
from .rankcore import (
    RankFactorization,
    exact_rank,
    factorize,
    fixed_row_unfolding,
    region_unfolding,
    row_prefix_unfolding,
)

__all__ = [
    "StructureReport",
    "ScalingReport",
    "SubadditivityRow",
    "RegionRankRow",
    "RegionRankProfile",
    "BaselineResult",
    "FeatureReport",
    "row_configurations",
    "row_config_counts",
    "fixed_row_rank_table",
    "structure_report",
    "verify_row_cut_subadditivity",
    "region_rank_profile",
    "random_baseline_profile",
    "feature_decomposition",
    "scaling_experiment",
    "fit_loglog",
]


def _pmap(fn, items, jobs):
    """Ordered map, optionally over a process pool; results never depend on
    the degree of parallelism."""
    items = list(items)
    if jobs and jobs > 1 and len(items) > 1:
        with multiprocessing.Pool(processes=min(jobs, len(items))) as pool:
            return pool.map(fn, items)
    return [fn(x) for x in items]


def row_configurations(family: ImageFamily, i: int) -> tuple[bytes, ...]:
    """Distinct configurations of row i among the members, sorted."""
    return tuple(sorted({img.row(i) for img in family}))


def row_config_counts(family: ImageFamily) -> dict[int, int]:
    """Distinct row-configuration count per row index."""
    return {i: len(row_configurations(family, i)) for i in range(1, family.n + 1)}


def _fixed_row_ranks_for_row(args):
    family, i = args
    out = {}
    for y in row_configurations(family, i):
        out[(i, "".join("01"[b] for b in y))] = exact_rank(fixed_row_unfolding(family, i, y))
    return out


def fixed_row_rank_table(family: ImageFamily, jobs: int = 1) -> dict[tuple[int, str], int]:
    """Exact rank of the row-i-pinned unfolding, for every row i and every
    occurring configuration y."""
    ranks: dict[tuple[int, str], int] = {}
    for chunk in _pmap(
        _fixed_row_ranks_for_row,
        [(family, i) for i in range(1, family.n + 1)],
        jobs,
    ):
        ranks.update(chunk)
    return ranks


@dataclass
class StructureReport:
    """Per-row configuration counts, per-(row, configuration) pinned-row
    ranks, and their maxima."""

    n: int
    family_name: str
    row_config_counts: dict[int, int]
    fixed_row_ranks: dict[tuple[int, str], int]
    max_row_configs: int
    max_fixed_row_rank: int


def structure_report(family: ImageFamily, jobs: int = 1) -> StructureReport:
    counts = row_config_counts(family)
    ranks = fixed_row_rank_table(family, jobs=jobs)
    return StructureReport(
        n=family.n,
        family_name=family.meta.name,
        row_config_counts=counts,
        fixed_row_ranks=ranks,
        max_row_configs=max(counts.values(), default=0),
        max_fixed_row_rank=max(ranks.values(), default=0),
    )


@dataclass
class SubadditivityRow:
    i: int
    row_prefix_rank: int
    fixed_row_rank_sum: int
    holds: bool


def _subadditivity_row(args):
    family, i = args
    lhs = exact_rank(row_prefix_unfolding(family, i))
    rhs = sum(
        exact_rank(fixed_row_unfolding(family, i, y))
        for y in row_configurations(family, i)
    )
    return SubadditivityRow(i, lhs, rhs, lhs <= rhs)


def verify_row_cut_subadditivity(family: ImageFamily, jobs: int = 1) -> list[SubadditivityRow]:
    """For every row cut i: rank of the row-prefix unfolding against the sum
    of pinned-row ranks over occurring configurations of row i.

    The inequality lhs <= rhs always holds; a False flag signals a bug.
    """
    if family.n < 2:
        return []
    return _pmap(_subadditivity_row, [(family, i) for i in range(1, family.n)], jobs)


@dataclass
class ScalingReport:
    """A measured series with its least-squares slope on log2/log2 axes."""

    label: str
    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float


def fit_loglog(points, label: str = "") -> ScalingReport:
    """Least-squares line through (log2 x, log2 y) for the positive points."""
    pts = [(float(x), float(y)) for x, y in points]
    pos = [(x, y) for x, y in pts if x > 0 and y > 0]
    if len(pos) < 2:
        raise ValueError("need at least 2 positive points to fit a slope")
    lx = np.log2([x for x, _ in pos])
    ly = np.log2([y for _, y in pos])
    slope, intercept = np.polyfit(lx, ly, 1)
    return ScalingReport(label, tuple(pts), float(slope), float(intercept))


@dataclass
class RegionRankRow:
    region: Region
    area: int
    boundary: int
    rank: int


@dataclass
class RegionRankProfile:
    rows: list[RegionRankRow]
    vs_boundary: ScalingReport | None
    vs_area: ScalingReport | None


def _region_rank(args):
    family, region = args
    return exact_rank(region_unfolding(family, region))


def region_rank_profile(
    family: ImageFamily, regions: list[Region], jobs: int = 1
) -> RegionRankProfile:
    """Exact region-against-complement ranks with fits of log rank against
    the region boundary length and against the region area."""
    for region in regions:
        if region.kind != "rectangle":
            raise ValueError("region rank profiles expect rectangular regions")
    ranks = _pmap(_region_rank, [(family, r) for r in regions], jobs)
    rows = [
        RegionRankRow(r, r.size, r.boundary_length, rank)
        for r, rank in zip(regions, ranks)
    ]
    def _try_fit(points, label):
        try:
            return fit_loglog(points, label)
        except ValueError:
            return None
    vs_boundary = _try_fit([(row.boundary, row.rank) for row in rows], "rank vs boundary")
    vs_area = _try_fit([(row.area, row.rank) for row in rows], "rank vs area")
    return RegionRankProfile(rows, vs_boundary, vs_area)


@dataclass
class BaselineResult:
    n: int
    m: int
    seed: int
    cut: Region
    rank: int
    cap: int


def random_baseline_profile(n: int, m: int, seed: int, cut: Region) -> BaselineResult:
    """Exact rank of a uniformly random m-member family at the given cut,
    reported alongside the cap min(m, 2^|A|, 2^|complement|)."""
    if m < 1:
        raise ValueError("need at least one member")
    family = gen_random_family(n, m, seed)
    rank = exact_rank(region_unfolding(family, cut))
    inside = cut.size
    outside = n * n - inside
    cap = min(m, 1 << min(inside, 60), 1 << min(outside, 60))
    return BaselineResult(n, m, seed, cut, rank, cap)


@dataclass
class FeatureReport:
    """A region factorization read as local features: per-factor support
    sizes over the occurring configurations, and how far entries stray from
    an indicator pattern (factors need not be 0/1 vectors).

    The deviation is measured after rescaling each factor to unit maximal
    entry, so it is 0 exactly when the factor is a scaled indicator.
    """

    factorization: RankFactorization
    left_support_sizes: list[int]
    right_support_sizes: list[int]
    max_off_binary: float


def feature_decomposition(
    family: ImageFamily, region: Region, tol: float = 1e-9
) -> FeatureReport:
    fac = factorize(region_unfolding(family, region), tol=tol)
    scale = float(fac.singular_values[0]) if fac.rank else 1.0
    lsup = [int(np.count_nonzero(np.abs(v) > tol * scale)) for v in fac.left]
    rsup = [int(np.count_nonzero(np.abs(v) > tol * scale)) for v in fac.right]
    off = 0.0
    for mat in (fac.left, fac.right):
        for vec in mat:
            peak = np.abs(vec).max()
            if peak <= 0:
                continue
            unit = vec / peak
            dev = np.minimum(np.abs(unit), np.abs(unit - 1.0))
            off = max(off, float(dev.max()))
    return FeatureReport(fac, lsup, rsup, off)


# Named quantities measurable per family in a scaling experiment.
QUANTITIES: dict[str, Callable[[ImageFamily], float]] = {
    "member_count": lambda fam: float(len(fam)),
    "max_row_config_count": lambda fam: float(
        max(row_config_counts(fam).values(), default=0)
    ),
    "max_fixed_row_rank": lambda fam: float(
        max(fixed_row_rank_table(fam).values(), default=0)
    ),
    "max_row_prefix_rank": lambda fam: float(
        max(
            (exact_rank(row_prefix_unfolding(fam, i)) for i in range(1, fam.n)),
            default=0,
        )
    ),
    "middle_row_prefix_rank": lambda fam: float(
        exact_rank(row_prefix_unfolding(fam, fam.n // 2))
    ),
}


def scaling_experiment(
    generator: str | Callable[[int], ImageFamily],
    ns: list[int],
    quantity: str | Callable[[ImageFamily], float],
    gen_params: dict | None = None,
    label: str | None = None,
) -> ScalingReport:
    """Measure a quantity on a generated family for each n and fit the
    log2/log2 slope.

    generator is a named generator ('rect', 'bars', 'stacked', 'random',
    parameters via gen_params) or a callable n -> family.  quantity is a key
    of QUANTITIES or a callable family -> value.
    """
    if sorted(ns) != list(ns):
        raise ValueError("n values must be ascending")
    if len(ns) < 2:
        raise ValueError("need at least 2 n values to fit a slope")
    if isinstance(generator, str):
        params = dict(gen_params or {})
        factory = lambda n: make_family(generator, n, **params)
        gen_label = generator
    else:
        factory = generator
        gen_label = getattr(generator, "__name__", "custom")
    if isinstance(quantity, str):
        measure = QUANTITIES[quantity]
        q_label = quantity
    else:
        measure = quantity
        q_label = getattr(quantity, "__name__", "custom")
    points = [(n, measure(factory(n))) for n in ns]
    report_label = label if label is not None else f"{q_label}[{gen_label}]"
    if all(y == points[0][1] for _, y in points):
        # A constant series has slope 0 even when the constant is 0.
        return ScalingReport(report_label, tuple(points), 0.0, math.log2(points[0][1]) if points[0][1] > 0 else float("-inf"))
    return fit_loglog(points, report_label)
