"""Root finding for closed DS truncations.

Univariate polynomials go through Aberth-Ehrlich simultaneous iteration in
mpmath precision followed by Newton polishing; square systems go through the
total-degree homotopy in :mod:`dstower.homotopy`.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

import mpmath

from .errors import ContractViolation
from .symbolic import GaussianRational, MultiPoly

__all__ = [
    "SolverConfig",
    "RootSet",
    "roots_univariate",
    "solve_system",
    "solve_truncation",
    "select_physical",
    "nearest_root",
]


@dataclass(frozen=True)
class SolverConfig:
    precision_bits: int = 256
    polish_tol: float = 1e-30
    max_iter: int = 600
    cluster_tol: float = 1e-12
    axis_tol: float = 1e-6
    # homotopy path tracking (double precision, then polished in mpmath)
    initial_step: float = 0.02
    min_step: float = 1e-9
    max_step: float = 0.1
    corrector_tol: float = 1e-9
    divergence_bound: float = 1e7
    stall_bound: float = 1e2
    max_steps: int = 20000
    retries: int = 2
    seed: int = 20240917

    def precision_for(self, degree: int) -> int:
        """Working precision for a degree-``degree`` solve."""
        if degree > 64:
            return max(self.precision_bits, 2 * degree)
        return self.precision_bits

    def with_overrides(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class RootSet:
    """Roots of one truncation.

    ``roots[k]`` is a tuple with one value per entry of ``unknowns``.  Every
    entry in ``roots`` met the polish tolerance; roots that did not are kept
    apart in ``failed`` so they are never mistaken for solutions.  Homotopy
    endpoints where Newton converges only linearly (singular solutions) are
    listed in ``singular`` with their last iterate and residual.
    """

    unknowns: tuple[int, ...]
    roots: list[tuple] = field(default_factory=list)
    residuals: list = field(default_factory=list)
    multiplicities: list[int] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    failed: list[tuple] = field(default_factory=list)
    singular: list[tuple] = field(default_factory=list)
    path_failures: int = 0
    diverged: int = 0
    bezout: int | None = None
    expected: int | None = None
    theory: str = ""
    order: int | None = None
    closure: str = "zero"
    diagnostics: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.roots)

    def values(self, index: int | None = None) -> list:
        """The component for Green's index ``index`` (default: first unknown)."""
        pos = 0 if index is None else self.unknowns.index(index)
        return [r[pos] for r in self.roots]

    def count_with_multiplicity(self) -> int:
        return sum(self.multiplicities)

    @property
    def complete(self) -> bool:
        """All roots promised by the (weighted) degree count were found."""
        return self.expected is None or self.count_with_multiplicity() >= self.expected

    def subset(self, positions: Sequence[int], tags: Sequence[str] | None = None,
               diagnostics: Sequence[str] = ()) -> "RootSet":
        tags = [self.tags[i] for i in positions] if tags is None else list(tags)
        return replace(
            self,
            roots=[self.roots[i] for i in positions],
            residuals=[self.residuals[i] for i in positions],
            multiplicities=[self.multiplicities[i] for i in positions],
            tags=tags,
            failed=list(self.failed),
            singular=list(self.singular),
            diagnostics=list(self.diagnostics) + list(diagnostics),
        )

    # -- serialisation ----------------------------------------------------
    CSV_HEADER = ("theory", "order", "seed_index", "re", "im", "residual", "tag")

    def to_rows(self, digits: int = 20) -> list[tuple]:
        """One row per (root, seed index); a root's rows are consecutive."""
        rows = []
        for root, res, tag in zip(self.roots, self.residuals, self.tags):
            for idx, v in zip(self.unknowns, root):
                v = mpmath.mpc(v)
                rows.append((
                    self.theory,
                    "" if self.order is None else self.order,
                    idx,
                    mpmath.nstr(v.real, digits, min_fixed=-3, max_fixed=3),
                    mpmath.nstr(v.imag, digits, min_fixed=-3, max_fixed=3),
                    mpmath.nstr(res, 3),
                    tag,
                ))
        return rows

    def to_dict(self, digits: int = 20) -> dict:
        def num(v):
            v = mpmath.mpc(v)
            return [mpmath.nstr(v.real, digits), mpmath.nstr(v.imag, digits)]

        return {
            "theory": self.theory,
            "order": self.order,
            "closure": self.closure,
            "unknowns": list(self.unknowns),
            "roots": [
                {
                    "values": {str(i): num(v) for i, v in zip(self.unknowns, root)},
                    "residual": mpmath.nstr(res, 3),
                    "multiplicity": mult,
                    "tag": tag,
                }
                for root, res, mult, tag in zip(self.roots, self.residuals,
                                                self.multiplicities, self.tags)
            ],
            "failed": len(self.failed),
            "singular": len(self.singular),
            "path_failures": self.path_failures,
            "diverged": self.diverged,
            "bezout": self.bezout,
            "expected": self.expected,
            "diagnostics": list(self.diagnostics),
        }

    def to_json(self, digits: int = 20) -> str:
        return json.dumps(self.to_dict(digits), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RootSet":
        unknowns = tuple(data["unknowns"])
        roots, res, mults, tags = [], [], [], []
        for r in data["roots"]:
            roots.append(tuple(mpmath.mpc(*map(mpmath.mpf, r["values"][str(i)])) for i in unknowns))
            res.append(mpmath.mpf(r["residual"]))
            mults.append(r["multiplicity"])
            tags.append(r["tag"])
        return cls(unknowns, roots, res, mults, tags, theory=data["theory"],
                   order=data["order"], closure=data.get("closure", "zero"),
                   path_failures=data.get("path_failures", 0),
                   diverged=data.get("diverged", 0), bezout=data.get("bezout"),
                   expected=data.get("expected"),
                   diagnostics=list(data.get("diagnostics", [])))


# -- univariate ------------------------------------------------------------

def _coefficients(p) -> tuple[list[GaussianRational], int | None]:
    if isinstance(p, MultiPoly):
        idx = p.indices()
        if len(idx) > 1:
            raise ContractViolation(f"polynomial is not univariate: G_{sorted(idx)}")
        var = next(iter(idx)) if idx else None
        if var is None:
            raise ContractViolation("constant polynomial has no roots")
        return p.univariate_coeffs(var), var
    return [GaussianRational.coerce(c) for c in p], None


def _horner(coeffs, z):
    """p(z), p'(z) and sum |c_k| |z|^k for coefficients low -> high."""
    p = coeffs[-1]
    dp = mpmath.mpc(0)
    az = abs(z)
    scale = abs(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        dp = dp * z + p
        p = p * z + c
        scale = scale * az + abs(c)
    return p, dp, scale


def _initial_guesses(coeffs, offset: float) -> list:
    """Bini's Newton-polygon starting points on circles of suitable radii."""
    n = len(coeffs) - 1
    logs = []
    for c in coeffs:
        a = abs(c)
        logs.append(float(mpmath.log(a)) if a else -math.inf)
    hull = [0]
    for k in range(1, n + 1):
        if logs[k] == -math.inf:
            continue
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # keep the upper hull: drop j if it lies below segment i-k
            if (logs[j] - logs[i]) * (k - i) <= (logs[k] - logs[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    guesses = []
    for i, j in zip(hull, hull[1:]):
        cnt = j - i
        radius = math.exp((logs[i] - logs[j]) / cnt)
        for q in range(cnt):
            ang = 2 * math.pi * q / cnt + 2 * math.pi * i / n + offset
            guesses.append(mpmath.mpc(radius * math.cos(ang), radius * math.sin(ang)))
    return guesses


def _aberth(coeffs, cfg: SolverConfig, rng: random.Random):
    n = len(coeffs) - 1
    z = _initial_guesses(coeffs, 0.4 + 0.2 * rng.random())
    eps = mpmath.mpf(2) ** (-mpmath.mp.prec)
    done = [False] * n
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        for k in range(n):
            if done[k]:
                continue
            zk = z[k]
            p, dp, scale = _horner(coeffs, zk)
            if abs(p) <= 8 * eps * scale:
                done[k] = True
                continue
            ratio = p / dp if dp else mpmath.mpc(1)
            s = mpmath.mpc(0)
            for j in range(n):
                if j != k:
                    d = zk - z[j]
                    if d:
                        s += 1 / d
            w = ratio / (1 - ratio * s)
            z[k] = zk - w
            if abs(w) <= 16 * eps * abs(z[k]):
                done[k] = True
        if all(done):
            break
    return z, done, iterations


def _newton_polish(coeffs, z, steps: int = 8):
    for _ in range(steps):
        p, dp, _ = _horner(coeffs, z)
        if not dp:
            break
        dz = p / dp
        z = z - dz
        if abs(dz) <= mpmath.mpf(2) ** (-mpmath.mp.prec + 4) * abs(z):
            break
    return z


def _cluster(values, tol) -> list[list[int]]:
    """Group indices whose values lie within ``tol`` (relative) of each other."""
    groups: list[list[int]] = []
    order = sorted(range(len(values)), key=lambda i: mpmath.re(values[i]))
    for i in order:
        placed = False
        for g in groups:
            ref = values[g[0]]
            if abs(values[i] - ref) <= tol * max(abs(ref), mpmath.mpf(1e-300)):
                g.append(i)
                placed = True
                break
        if not placed:
            groups.append([i])
    return groups


def roots_univariate(p, cfg: SolverConfig | None = None, *, theory: str = "",
                     order: int | None = None, closure: str = "zero") -> RootSet:
    """All complex roots of a univariate polynomial.

    ``p`` is a univariate :class:`MultiPoly` or a coefficient list ordered
    from the constant term up.  Exact zero roots are split off first; the
    rest are found by Aberth-Ehrlich iteration and polished by Newton's
    method.  Roots that miss ``cfg.polish_tol`` are reported in ``failed``.
    """
    cfg = cfg or SolverConfig()
    coeffs, var = _coefficients(p)
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    degree = len(coeffs) - 1
    if degree < 1:
        raise ContractViolation("polynomial must have degree >= 1")
    unknowns = (var if var is not None else 0,)
    zeros = 0
    while coeffs[zeros].is_zero():
        zeros += 1
    rest = coeffs[zeros:]
    rs = RootSet(unknowns, theory=theory, order=order, closure=closure, expected=degree)
    if zeros:
        rs.roots.append((mpmath.mpc(0),))
        rs.residuals.append(mpmath.mpf(0))
        rs.multiplicities.append(zeros)
        rs.tags.append("none")
    if len(rest) == 1:
        return rs
    rng = random.Random(cfg.seed)
    with mpmath.workprec(cfg.precision_for(degree)):
        mc = [c.to_mpc() for c in rest]
        found, done, its = _aberth(mc, cfg, rng)
        found = [_newton_polish(mc, z) for z in found]
        rs.diagnostics.append(f"aberth iterations={its} precision={mpmath.mp.prec}")
        resid = []
        for z in found:
            val, _, scale = _horner(mc, z)
            resid.append(abs(val) / scale if scale else abs(val))
        groups = _cluster(found, cfg.cluster_tol)
        for g in groups:
            best = min(g, key=lambda i: resid[i])
            z, r = found[best], resid[best]
            if r <= cfg.polish_tol and all(done[i] or resid[i] <= cfg.polish_tol for i in g):
                rs.roots.append((+z,))
                rs.residuals.append(+r)
                rs.multiplicities.append(len(g))
                rs.tags.append("none")
                if len(g) > 1:
                    rs.diagnostics.append(f"cluster of {len(g)} roots merged near {mpmath.nstr(z, 10)}")
            else:
                for i in g:
                    rs.failed.append(((+found[i],), +resid[i]))
    if rs.failed:
        rs.diagnostics.append(f"{len(rs.failed)} roots failed to reach polish tolerance")
    return rs


def solve_system(eqs: Sequence[MultiPoly], cfg: SolverConfig | None = None,
                 unknowns: Sequence[int] | None = None, **meta) -> RootSet:
    """All isolated solutions of a square polynomial system (homotopy continuation)."""
    from .homotopy import track_total_degree

    return track_total_degree(list(eqs), cfg or SolverConfig(), unknowns, **meta)


def solve_truncation(system, cfg: SolverConfig | None = None) -> RootSet:
    """Solve a :class:`~dstower.tower.TruncatedSystem` with the appropriate method."""
    meta = dict(theory=system.theory.name, order=system.order, closure=system.closure)
    if len(system.unknowns) == 1:
        rs = roots_univariate(system.equations[0], cfg, **meta)
        return rs
    return solve_system(system.equations, cfg, system.unknowns, **meta)


# -- selection ---------------------------------------------------------------

def _axis_directions(rs: RootSet, index: int) -> tuple:
    if index % 2 == 0:
        return (mpmath.mpc(1),)
    if rs.theory == "pt_quintic":
        # two PT sector pairs: one root family on each half of the imaginary axis
        return (mpmath.mpc(0, -1), mpmath.mpc(0, 1))
    return (mpmath.mpc(0, -1),)


def _mirror(z, index: int):
    # PT reflection for G_1-type values is z -> -conj(z); for G_2 it is conj(z)
    return mpmath.conj(z) if index % 2 == 0 else -mpmath.conj(z)


def _axis_distance(z, directions) -> mpmath.mpf:
    """Angular distance of z from the nearest of the given axis directions."""
    if not z:
        return mpmath.mpf(math.pi)
    return min(abs(mpmath.arg(z / d)) for d in directions)


def select_physical(rs: RootSet, criterion: str = "pt_axis", *, index: int | None = None,
                    axis_tol: float | None = None, reference=None) -> RootSet:
    """Filter and tag roots.

    ``pt_axis``      roots on the PT axis of G_index (negative imaginary for
                     odd index, positive real for even index); if there are
                     none, the mirror pair closest to the axis, tagged
                     ``off_axis``.
    ``largest_real`` the largest positive real root.
    ``nearest``      the root nearest ``reference``, plus its PT mirror partner
                     when it is off the axis.
    ``none``         everything, untagged.
    """
    index = rs.unknowns[0] if index is None else index
    tol = 1e-6 if axis_tol is None else axis_tol
    vals = rs.values(index)
    if not vals:
        return rs.subset([], diagnostics=["empty root set"])
    if criterion == "none":
        return rs.subset(range(len(vals)), ["none"] * len(vals))
    dirs = _axis_directions(rs, index)
    on_axis = [i for i, z in enumerate(vals)
               if z and _axis_distance(z, dirs) <= tol]
    if criterion == "pt_axis":
        if on_axis:
            return rs.subset(on_axis, ["pt_axis"] * len(on_axis))
        candidates = [i for i, z in enumerate(vals) if z]
        if not candidates:
            return rs.subset([], diagnostics=["no nonzero roots"])
        best = min(candidates, key=lambda i: _axis_distance(vals[i], dirs))
        pair = _mirror_partner(vals, best, index)
        return rs.subset(pair, ["off_axis"] * len(pair),
                         diagnostics=["no root on the PT axis; returning the closest mirror pair"])
    if criterion == "largest_real":
        real = [i for i, z in enumerate(vals)
                if mpmath.re(z) > 0 and abs(mpmath.im(z)) <= tol * abs(z)]
        if not real:
            return rs.subset([], diagnostics=["no positive real root"])
        best = max(real, key=lambda i: mpmath.re(vals[i]))
        return rs.subset([best], ["largest_real"])
    if criterion == "nearest":
        if reference is None:
            raise ContractViolation("nearest selection needs a reference value")
        ref = mpmath.mpmathify(reference)
        best = min(range(len(vals)), key=lambda i: abs(vals[i] - ref))
        if _axis_distance(vals[best], dirs) <= tol:
            return rs.subset([best], ["pt_axis"])
        pair = _mirror_partner(vals, best, index)
        return rs.subset(pair, ["off_axis"] * len(pair))
    raise ContractViolation(f"unknown selection criterion {criterion!r}")


def _mirror_partner(vals, best: int, index: int) -> list[int]:
    target = _mirror(vals[best], index)
    partner = min(range(len(vals)), key=lambda i: abs(vals[i] - target))
    scale = max(abs(vals[best]), mpmath.mpf(1e-300))
    if partner != best and abs(vals[partner] - target) <= 1e-8 * scale:
        return sorted([best, partner], key=lambda i: mpmath.re(vals[i]))
    return [best]


def nearest_root(rs: RootSet, reference, index: int | None = None):
    """Value of the root closest to ``reference``."""
    vals = rs.values(index)
    if not vals:
        raise ContractViolation("empty root set")
    ref = mpmath.mpmathify(reference)
    return min(vals, key=lambda z: abs(z - ref))
