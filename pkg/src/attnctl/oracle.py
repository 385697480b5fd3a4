"""Exact counts behind the combinatorial arguments for task-guided attention.

Everything here is integer arithmetic except the sky geometry, which is
plain real arithmetic. Printed reference figures are compared at the
precision they were printed with: a claim matches when the exact value lies
within one unit of the last printed digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache


@dataclass(frozen=True, order=True)
class BigCount:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or isinstance(self.value, bool) or self.value < 0:
            raise ValueError(f"BigCount needs a non-negative int, got {self.value!r}")

    def mantissa_exponent(self, digits: int = 3) -> tuple[int, int]:
        """(m, e) with m a ``digits``-digit integer and value ~ m * 10^(e - digits + 1), rounded half up."""
        n = self.value
        if n == 0:
            return 0, 0
        e = len(str(n)) - 1
        shift = e - (digits - 1)
        if shift >= 0:
            unit = 10**shift
            m = (2 * n + unit) // (2 * unit)
        else:
            m = n * 10**-shift
        if m >= 10**digits:
            m //= 10
            e += 1
        return m, e

    def render(self, digits: int = 3) -> str:
        """Scientific rendering such as ``1.07e301``."""
        m, e = self.mantissa_exponent(digits)
        s = str(m).rjust(digits, "0")
        return f"{s[0]}.{s[1:]}e{e}" if digits > 1 else f"{s}e{e}"

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return self.render()


def powerset_count(n: int) -> BigCount:
    if n < 0:
        raise ValueError("n must be non-negative")
    return BigCount(1 << n)


def binomial(n: int, k: int) -> BigCount:
    """Product formula; every partial product divides exactly."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    c = 1
    for i in range(1, k + 1):
        c = c * (n - k + i) // i
    return BigCount(c)


def binomial_pascal(n: int, k: int) -> BigCount:
    """Pascal's rule row by row; the independent cross-check for ``binomial``."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    row = [1] + [0] * k
    for _ in range(n):
        for j in range(k, 0, -1):
            row[j] += row[j - 1]
    return BigCount(row[k])


def mechanism_space(a: int, d: int, p: int) -> BigCount:
    """Subsets of A mechanisms, each with d durations and p parameterisations: 2^(A*d*p)."""
    if min(a, d, p) < 1:
        raise ValueError("A, d and p must be >= 1")
    return BigCount(1 << (a * d * p))


def synapse_budget(neurons: int, synapses_per: int) -> tuple[BigCount, int]:
    """Total synapses and the largest m with 2^m <= total."""
    if neurons < 1 or synapses_per < 1:
        raise ValueError("inputs must be positive")
    total = int(neurons) * int(synapses_per)
    return BigCount(total), total.bit_length() - 1


# ---------------------------------------------------------------------------
# Sky geometry


@dataclass(frozen=True)
class SkyModel:
    stars: int = 1000
    radius: float = 100.0
    patch_deg: float = 20.0
    group: int = 6  # stars per constellation

    def __post_init__(self):
        if self.stars < 1 or self.radius <= 0 or not 0 < self.patch_deg < 180 or self.group < 1:
            raise ValueError("need stars >= 1, radius > 0, 0 < patch_deg < 180, group >= 1")


@dataclass(frozen=True)
class SkyGeometry:
    hemisphere_area: float
    patch_area: float  # r^2 * theta * sin(theta)
    patch_count: float
    stars_per_patch: int
    patch_area_latlon: float  # equatorial theta x theta lat-lon rectangle
    patch_area_flat: float  # flat square with side r*theta


def sky_geometry(model: SkyModel = SkyModel()) -> SkyGeometry:
    r, th = model.radius, math.radians(model.patch_deg)
    hemi = 2 * math.pi * r * r
    patch = r * r * th * math.sin(th)
    count = hemi / patch
    return SkyGeometry(
        hemisphere_area=hemi,
        patch_area=patch,
        patch_count=count,
        stars_per_patch=round(model.stars / count),
        patch_area_latlon=r * r * th * 2 * math.sin(th / 2),
        patch_area_flat=(r * th) ** 2,
    )


@dataclass(frozen=True)
class GuidedCount:
    discs: int  # one disc per whole unit of hemisphere area
    per_disc: BigCount
    total: BigCount
    unguided: BigCount
    orders_gap: int  # floor(log10(unguided / total))


def orders_between(a: Decimal | int, b: Decimal | int) -> int:
    """floor(log10(a / b)) for positive exact values."""
    a, b = Decimal(a), Decimal(b)
    if a <= 0 or b <= 0:
        raise ValueError("orders_between needs positive values")
    k = 0
    if a >= b:
        while b * Decimal(10) ** (k + 1) <= a:
            k += 1
    else:
        while b * Decimal(10) ** k > a:
            k -= 1
    return k


def guided_search_count(model: SkyModel = SkyModel()) -> GuidedCount:
    """Groups to check when each disc of the hemisphere only offers its own stars."""
    geo = sky_geometry(model)
    discs = int(geo.hemisphere_area)
    per = binomial(geo.stars_per_patch, model.group)
    total = BigCount(discs * per.value)
    unguided = binomial(model.stars, model.group)
    return GuidedCount(discs, per, total, unguided, orders_between(unguided.value, total.value))


# ---------------------------------------------------------------------------
# Guided versus unguided matching


class DemoRangeError(ValueError):
    pass


@dataclass(frozen=True)
class MatchRun:
    n: int
    guided: bool
    examined: int
    found: int  # bitmask of the matched subset


def visual_match_demo(n: int, guided: bool, target: int | None = None) -> MatchRun:
    """Search an n-feature display for the one subset that matches the target.

    Subsets are bitmasks. Unguided search walks all of them in counting order
    and only learns "match" or "no match", so the worst case (the full set,
    the default target) costs 2^n examinations. Guided search is told which
    features the target contains; it grows a candidate feature by feature in
    that order, checking each grown candidate, so it costs at most n.
    """
    if not 1 <= n <= 24:
        raise DemoRangeError(f"n must lie in 1..24, got {n}")
    full = (1 << n) - 1
    target = full if target is None else target
    if not 0 < target <= full:
        raise DemoRangeError("target must be a non-empty subset of the display")
    examined = 0
    if not guided:
        for cand in range(full + 1):
            examined += 1
            if cand == target:
                return MatchRun(n, False, examined, cand)
        raise AssertionError("unreachable: the target is a subset of the display")
    order = [i for i in range(n) if target >> i & 1] + [i for i in range(n) if not target >> i & 1]
    cand = 0
    for i in order:
        trial = cand | (1 << i)
        examined += 1
        if trial & ~target == 0:  # the grown candidate is still part of the target
            cand = trial
            if cand == target:
                return MatchRun(n, True, examined, cand)
    raise AssertionError("unreachable: the target is reached through its own features")


# ---------------------------------------------------------------------------
# Claims table


@dataclass(frozen=True)
class Claim:
    id: str
    expr: str
    printed: str  # figure as printed, e.g. "1.07e301"
    oracle: str  # exact or high-precision value
    status: str  # match, flag or verified
    note: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("id", "expr", "printed", "oracle", "status", "note")}


def agrees(printed: str, value) -> bool:
    """True when ``value`` lies within one unit of the last digit of ``printed``."""
    p = Decimal(printed)
    exp = p.as_tuple().exponent
    unit = Decimal(1).scaleb(exp)
    v = Decimal(value) if not isinstance(value, float) else Decimal(repr(value))
    return abs(v - p) <= unit


def _claim(cid, expr, printed, value, shown, note="") -> Claim:
    return Claim(cid, expr, printed, shown, "match" if agrees(printed, value) else "flag", note)


@lru_cache(maxsize=1)
def _claims() -> tuple[Claim, ...]:
    geo = sky_geometry()
    guided = guided_search_count()
    budget, m = synapse_budget(86 * 10**9, 10**4)
    c19 = binomial(19, 6)
    two_ways = c19 == binomial_pascal(19, 6)
    c1000 = binomial(1000, 6)
    images = BigCount(5**36)
    printed_gap = orders_between(Decimal("5.0e134"), Decimal("1.95e7"))
    rows = [
        _claim("powerset-1000", "2^1000", "1.07e301", powerset_count(1000).value, powerset_count(1000).render()),
        _claim("images-5^36", "5^36", "1.5e25", images.value, images.render()),
        _claim(
            "imagenet-share",
            "5^36 / 1.5e8",
            "1e17",
            images.value * 10 // (15 * 10**8),
            BigCount(images.value * 10 // (15 * 10**8)).render(),
            "one of every 10^17 images",
        ),
        _claim("subsets-19", "2^19", "524288", powerset_count(19).value, str(powerset_count(19).value)),
        _claim("mechanisms-190", "2^(19*5*2)", "1.6e57", mechanism_space(19, 5, 2).value, mechanism_space(19, 5, 2).render()),
        _claim("synapses", "86e9 * 1e4", "8.6e14", budget.value, budget.render()),
        Claim(
            "max-adp",
            "max m: 2^m <= 8.6e14",
            "49",
            str(m),
            "match" if m == 49 else "flag",
            "printed as 2^49.62; the text rounds the bound to 50",
        ),
        _claim("c-1000-6", "C(1000,6)", "5.0e134", c1000.value, c1000.render(), "printed figure does not follow from the formula"),
        _claim("hemisphere", "2*pi*100^2", "62831", geo.hemisphere_area, f"{geo.hemisphere_area:.2f}"),
        _claim(
            "patch-area",
            "r^2*theta*sin(theta), theta=20deg",
            "1193.9",
            geo.patch_area,
            f"{geo.patch_area:.2f}",
            f"lat-lon patch {geo.patch_area_latlon:.1f}, flat square {geo.patch_area_flat:.1f}",
        ),
        _claim("patch-count", "hemisphere / patch", "52.6", geo.patch_count, f"{geo.patch_count:.2f}"),
        _claim("stars-per-patch", "round(1000 / patches)", "19", geo.stars_per_patch, str(geo.stars_per_patch)),
        Claim(
            "c-19-6",
            "C(19,6)",
            "",
            str(c19.value),
            "verified" if two_ways and c19.value == 27132 else "flag",
            "product formula and Pascal recurrence agree",
        ),
        _claim(
            "guided-count",
            "62831 * C(19,6)",
            "1.95e7",
            guided.total.value,
            f"{guided.total.value} ({guided.total.render()})",
            "printed figure does not follow from the formula",
        ),
        Claim(
            "orders-gap",
            "log10(5.0e134 / 1.95e7)",
            "127",
            str(printed_gap),
            "match" if printed_gap == 127 else "flag",
            f"from the two printed figures; exact values give {guided.orders_gap} orders",
        ),
    ]
    return tuple(rows)


def claims_table(select: str | None = None) -> list[Claim]:
    """All claims, or those whose id or expression contains ``select``."""
    rows = list(_claims())
    if select:
        rows = [c for c in rows if select in c.id or select in c.expr]
    return rows
