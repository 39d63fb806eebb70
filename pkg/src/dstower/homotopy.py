"""Total-degree homotopy continuation for small square polynomial systems.

Paths are tracked in double precision on a random affine patch of projective
space, so that solutions at infinity end at finite points with x0 = 0
instead of diverging.  Finite endpoints are then Newton-polished in mpmath
against the exact coefficients.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Sequence

import gmpy2
import mpmath
import numpy as np

from .errors import ContractViolation
from .symbolic import MultiPoly

__all__ = ["track_total_degree", "HomogeneousSystem", "weighted_bound"]


class _Compiled:
    """A homogeneous polynomial as exponent matrix plus coefficient vector."""

    def __init__(self, exps: np.ndarray, coeffs: np.ndarray):
        self.exps = exps
        self.coeffs = coeffs
        nvar = exps.shape[1]
        self._grad = []
        for j in range(nvar):
            mask = exps[:, j] > 0
            e = exps[mask].copy()
            c = coeffs[mask] * e[:, j]
            e[:, j] -= 1
            self._grad.append((e, c))

    @staticmethod
    def _eval(exps, coeffs, X):
        if len(coeffs) == 0:
            return np.zeros(X.shape[0], dtype=complex)
        mono = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return mono @ coeffs

    def value(self, X):
        return self._eval(self.exps, self.coeffs, X)

    def gradient(self, X):
        return np.stack([self._eval(e, c, X) for e, c in self._grad], axis=1)


class HomogeneousSystem:
    """Target system homogenised with x0, in variables (x0, x_1, ..., x_s)."""

    def __init__(self, eqs: Sequence[MultiPoly], unknowns: Sequence[int]):
        self.unknowns = tuple(unknowns)
        self.eqs = list(eqs)
        self.degrees = []
        self.target = []
        self.start = []
        pos = {n: j + 1 for j, n in enumerate(self.unknowns)}
        nvar = len(self.unknowns) + 1
        for j, eq in enumerate(self.eqs):
            stray = eq.indices() - set(self.unknowns)
            if stray:
                raise ContractViolation(f"equation {j} involves G_{sorted(stray)} outside the unknowns")
            d = eq.total_degree()
            if d < 1:
                raise ContractViolation(f"equation {j} is constant")
            self.degrees.append(d)
            rows, cs = [], []
            for mono, c in eq.items():
                row = [0] * nvar
                for n, e in mono:
                    row[pos[n]] = e
                row[0] = d - mono.total_degree()
                rows.append(row)
                cs.append(complex(c))
            cs = np.array(cs)
            cs /= np.max(np.abs(cs))
            self.target.append(_Compiled(np.array(rows, dtype=np.int64), cs))
            # start equation x_j^d - x0^d
            srow = np.zeros((2, nvar), dtype=np.int64)
            srow[0, j + 1] = d
            srow[1, 0] = d
            self.start.append(_Compiled(srow, np.array([1.0, -1.0], dtype=complex)))

    @property
    def bezout(self) -> int:
        return int(np.prod(self.degrees))

    def start_points(self) -> np.ndarray:
        roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in self.degrees]
        pts = [(1.0,) + combo for combo in itertools.product(*roots)]
        return np.array(pts, dtype=complex)


def _batched_solve(A, b):
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(b)
        for k in range(A.shape[0]):
            out[k] = np.linalg.lstsq(A[k], b[k], rcond=None)[0]
        return out


class _Homotopy:
    """H(X, t) = (1 - t) gamma G(X) + t F(X), plus the patch a.X - 1."""

    def __init__(self, system: HomogeneousSystem, gamma: complex, patch: np.ndarray):
        self.system = system
        self.gamma = gamma
        self.patch = patch

    def residual(self, X, t):
        rows = []
        for f, g in zip(self.system.target, self.system.start):
            rows.append((1 - t) * self.gamma * g.value(X) + t * f.value(X))
        rows.append(X @ self.patch - 1)
        return np.stack(rows, axis=1)

    def jacobian(self, X, t):
        rows = []
        for f, g in zip(self.system.target, self.system.start):
            rows.append(((1 - t) * self.gamma)[:, None] * g.gradient(X) + t[:, None] * f.gradient(X))
        rows.append(np.broadcast_to(self.patch, X.shape))
        return np.stack(rows, axis=1)

    def dt_residual(self, X):
        rows = [f.value(X) - self.gamma * g.value(X)
                for f, g in zip(self.system.target, self.system.start)]
        rows.append(np.zeros(X.shape[0], dtype=complex))
        return np.stack(rows, axis=1)


def _track(hom: _Homotopy, X0: np.ndarray, cfg):
    """Euler predictor, Newton corrector, per-path adaptive step."""
    P = X0.shape[0]
    X = X0.copy()
    t = np.zeros(P)
    dt = np.full(P, cfg.initial_step)
    active = np.ones(P, dtype=bool)
    stalled = np.zeros(P, dtype=bool)
    streak = np.zeros(P, dtype=int)
    steps = 0
    while active.any() and steps < cfg.max_steps:
        steps += 1
        idx = np.nonzero(active)[0]
        x, tt, h = X[idx], t[idx], np.minimum(dt[idx], 1 - t[idx])
        J = hom.jacobian(x, tt)
        v = _batched_solve(J, -hom.dt_residual(x))
        xp = x + h[:, None] * v
        tn = tt + h
        ok = np.isfinite(xp).all(axis=1)
        norm = np.maximum(np.linalg.norm(x, axis=1), 1.0)
        last = np.full(len(idx), np.inf)
        for it in range(3):
            dx = _batched_solve(hom.jacobian(xp, tn), -hom.residual(xp, tn))
            size = np.linalg.norm(dx, axis=1)
            if it == 0:
                ok &= size <= 0.1 * norm
            else:
                ok &= size <= 0.5 * last + 1e-14
            last = size
            xp = xp + dx
        ok &= last <= cfg.corrector_tol * norm
        ok &= np.isfinite(xp).all(axis=1)

        acc = idx[ok]
        X[acc] = xp[ok]
        t[acc] = tn[ok]
        streak[acc] += 1
        grow = acc[streak[acc] >= 3]
        dt[grow] = np.minimum(dt[grow] * 2, cfg.max_step)
        streak[grow] = 0
        rej = idx[~ok]
        dt[rej] /= 2
        streak[rej] = 0
        done = acc[t[acc] >= 1.0]
        active[done] = False
        dead = rej[dt[rej] < cfg.min_step]
        active[dead] = False
        stalled[dead] = True
    stalled |= active
    return X, t, stalled, steps


def _refine(hom: _Homotopy, X, iterations: int = 12):
    """Newton steps on the target (t = 1) in double precision, all paths at once."""
    one = np.ones(X.shape[0])
    for _ in range(iterations):
        with np.errstate(all="ignore"):
            dx = _batched_solve(hom.jacobian(X, one), -hom.residual(X, one))
            ok = np.isfinite(dx).all(axis=1)
            ok &= np.linalg.norm(dx, axis=1) <= np.linalg.norm(X, axis=1)
        X = np.where(ok[:, None], X + dx, X)
    return X


def _to_gmpy(v):
    v = mpmath.mpc(v)
    return gmpy2.mpc(_mpf_to_mpfr(v.real), _mpf_to_mpfr(v.imag))


def _mpf_to_mpfr(x):
    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    return gmpy2.mul_2exp(gmpy2.mpfr(-man if sign else man), exp)


def _to_mpmath(z):
    out = []
    for part in (z.real, z.imag):
        if part == 0:
            out.append(mpmath.mpf(0))
        else:
            man, exp = part.as_mantissa_exp()
            out.append(mpmath.mpf((int(man), int(exp))))
    return mpmath.mpc(*out)


def _gauss_solve(A, b):
    """Dense complex solve with partial pivoting; raises ZeroDivisionError if singular."""
    n = len(b)
    A = [row[:] for row in A]
    b = b[:]
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(A[i][k]))
        if A[p][k] == 0:
            raise ZeroDivisionError("singular Jacobian")
        A[k], A[p] = A[p], A[k]
        b[k], b[p] = b[p], b[k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            for j in range(k, n):
                A[i][j] -= f * A[k][j]
            b[i] -= f * b[k]
    x = [None] * n
    for i in reversed(range(n)):
        acc = b[i]
        for j in range(i + 1, n):
            acc -= A[i][j] * x[j]
        x[i] = acc / A[i][i]
    return x


class _MpSystem:
    """Exact system in gmpy2 multiprecision with a shared power table.

    Coefficients are rounded once from the exact rationals at the working
    precision; mpmath values are converted in and out at the boundary.
    """

    def __init__(self, eqs, unknowns, precision: int):
        self.unknowns = unknowns
        self.ctx = gmpy2.context(precision=precision + 16)
        pos = {n: j for j, n in enumerate(unknowns)}
        self.terms = []
        with self.ctx:
            for eq in eqs:
                self.terms.append([
                    (gmpy2.mpc(gmpy2.mpfr(c.re), gmpy2.mpfr(c.im)),
                     tuple((pos[n], e) for n, e in mono))
                    for mono, c in eq.items()
                ])
        self.max_exp = 1 + max((e for eq in self.terms for _, m in eq for _, e in m), default=1)

    def _evaluate(self, x, jacobian=True):
        s = len(x)
        one = gmpy2.mpc(1)
        pw = [[one] for _ in range(s)]
        for j in range(s):
            for _ in range(self.max_exp):
                pw[j].append(pw[j][-1] * x[j])
        # residual scale: coefficient sizes at max(1, |x_j|), so that a root
        # with a vanishing coordinate is not judged against a vanishing scale
        big = [max(gmpy2.mpfr(1), abs(v)) for v in x]
        F, Jm, scale = [], [], []
        zero = gmpy2.mpc(0)
        for eq in self.terms:
            f = zero
            sc = gmpy2.mpfr(0)
            row = [zero] * s
            for c, mono in eq:
                term = c
                mag = abs(c)
                for j, e in mono:
                    term = term * pw[j][e]
                    mag *= big[j] ** e
                f += term
                sc += mag
                if jacobian:
                    for k, (j, e) in enumerate(mono):
                        d = c * e * pw[j][e - 1]
                        for jj, ee in mono[:k] + mono[k + 1:]:
                            d = d * pw[jj][ee]
                        row[j] += d
            F.append(f)
            scale.append(sc)
            Jm.append(row)
        return F, Jm, scale

    def residual(self, x) -> object:
        with self.ctx:
            F, _, scale = self._evaluate([_to_gmpy(v) for v in x], jacobian=False)
            res = max(abs(f) / sc if sc else abs(f) for f, sc in zip(F, scale))
            return mpmath.mpf(str(res))

    def polish(self, x, max_iter=60):
        """Newton's method; stops early once convergence is visibly linear.

        Returns ``(x, residual, singular)`` with mpmath values.  ``singular``
        is set when Newton contracts only by a constant factor per step.
        """
        with self.ctx:
            x = [gmpy2.mpc(complex(v)) if not isinstance(v, mpmath.mpc) else _to_gmpy(v) for v in x]
            tiny = gmpy2.mpfr(2) ** (-self.ctx.precision + 26)
            prev = None
            slow = 0
            singular = False
            for _ in range(max_iter):
                F, Jm, _ = self._evaluate(x)
                try:
                    dx = _gauss_solve(Jm, [-f for f in F])
                except ZeroDivisionError:
                    singular = True
                    break
                x = [a + d for a, d in zip(x, dx)]
                if not all(gmpy2.is_finite(v.real) and gmpy2.is_finite(v.imag) for v in x):
                    break
                size = max(abs(d) for d in dx)
                if size <= tiny * max(1, max(abs(v) for v in x)):
                    break
                if prev is not None and size > 0.2 * prev and size < 1e-3:
                    slow += 1
                    if slow >= 6:
                        singular = True
                        break
                else:
                    slow = 0
                prev = size
            F, _, scale = self._evaluate(x, jacobian=False)
            res = max(abs(f) / sc if sc else abs(f) for f, sc in zip(F, scale))
            if not (gmpy2.is_finite(res)):
                return [mpmath.mpc(complex(v)) for v in x], mpmath.inf, singular
            return [_to_mpmath(v) for v in x], mpmath.mpf(str(res)), singular


def weighted_bound(eqs: Sequence[MultiPoly], unknowns: Sequence[int]) -> int:
    """Generic root count when G_k carries weight k (all DS truncations qualify)."""
    num = 1
    for eq in eqs:
        num *= max(mono.weighted_degree() for mono, _ in eq.items())
    den = 1
    for n in unknowns:
        den *= n
    return num // den


def _root_key(root, digits: int = 12) -> tuple:
    """Grid cell of a polished root; duplicates agree far below the grid."""
    scale = max(mpmath.mpf(1), max(abs(v) for v in root))
    q = mpmath.mpf(10) ** digits / scale
    return tuple((int(mpmath.nint(mpmath.re(v) * q)), int(mpmath.nint(mpmath.im(v) * q))) for v in root)


def _adopt_singular_origin(rs, eqs, unknowns, expected: int) -> None:
    """Record G = 0 as a root when it solves the system exactly and singular paths end there.

    Newton cannot polish a multiple root, but the origin can be checked in
    exact arithmetic.  Its multiplicity is inferred as the shortfall of the
    regular roots against the weighted count (at least 1).  This assumes the
    weighted leading forms have no common nontrivial zero, as for DS
    truncations; the number of total-degree paths ending at the origin is
    no guide, since the origin also absorbs the excess of the Bezout count.
    """
    if not rs.singular or any(all(v == 0 for v in r) for r in rs.roots):
        return
    zero = {n: 0 for n in unknowns}
    if any(e.evaluate(zero) != 0 for e in eqs):
        return
    near = [s for s in rs.singular if max(abs(v) for v in s[0]) < 1e-2]
    if not near:
        return
    mult = max(1, expected - sum(rs.multiplicities))
    rs.roots.append(tuple(mpmath.mpc(0) for _ in unknowns))
    rs.residuals.append(mpmath.mpf(0))
    rs.multiplicities.append(mult)
    rs.tags.append("singular")
    rs.diagnostics.append(
        f"origin is an exact singular root ({len(near)} singular endpoints nearby); "
        f"multiplicity {mult} inferred from the weighted count"
    )


def track_total_degree(eqs: list[MultiPoly], cfg, unknowns=None, *, theory: str = "",
                       order: int | None = None, closure: str = "zero"):
    """Solve a square system by total-degree homotopy; returns a RootSet.

    When fewer roots than the weighted Bezout count are found, the paths are
    re-tracked with a fresh gamma (up to ``cfg.retries`` times, stopping once
    a retry adds nothing) and new roots are merged in.  Singular solutions
    make up part of the shortfall, so the count is a trigger, not a target.
    Multiplicities come from the first run only.
    """
    from .solver import RootSet

    if unknowns is None:
        unknowns = sorted(set().union(*(e.indices() for e in eqs)))
    unknowns = tuple(unknowns)
    if len(eqs) != len(unknowns):
        raise ContractViolation(f"system is not square: {len(eqs)} equations, {len(unknowns)} unknowns")
    system = HomogeneousSystem(eqs, unknowns)
    expected = weighted_bound(eqs, unknowns) if all(n > 0 for n in unknowns) else system.bezout
    rs = RootSet(unknowns, theory=theory, order=order, closure=closure, bezout=system.bezout,
                 expected=expected)
    mp_sys = _MpSystem(eqs, unknowns, cfg.precision_bits)
    found: dict[tuple, int] = {}
    known: list[np.ndarray] = []
    fine = replace(cfg, initial_step=cfg.initial_step / 10, max_step=cfg.max_step / 10,
                   max_steps=10 * cfg.max_steps)

    def _absorb(X, stalled, first, record):
        """Classify refined endpoints; returns rows that failed to polish."""
        lost = []
        with mpmath.workprec(cfg.precision_bits):
            for k in range(X.shape[0]):
                x0 = X[k, 0]
                ratio = np.linalg.norm(X[k, 1:]) / max(abs(x0), 1e-300)
                if not np.isfinite(X[k]).all() or ratio > cfg.divergence_bound:
                    rs.diverged += first
                    continue
                x = X[k, 1:] / x0
                if known:
                    dist = np.max(np.abs(np.array(known) - x), axis=1)
                    hit = int(np.argmin(dist))
                    if dist[hit] <= 1e-9 * max(1.0, np.max(np.abs(x))):
                        # already polished; a refined double endpoint this close is the same root
                        if first and not stalled[k]:
                            rs.multiplicities[hit] += 1
                        continue
                xp, r, singular = mp_sys.polish(list(x))
                if r <= cfg.polish_tol and (singular or r > cfg.polish_tol ** 2):
                    # far starts can spend the iteration budget getting into the basin; finish there
                    xp, r, singular = mp_sys.polish(xp)
                if r > cfg.polish_tol:
                    if singular:
                        if first:
                            rs.singular.append((tuple(xp), r))
                    elif stalled[k] and ratio > cfg.stall_bound:
                        # paths into solutions at infinity slow down before t = 1
                        rs.diverged += first
                    elif not record:
                        lost.append(k)
                    elif first:
                        rs.failed.append((tuple(xp), r))
                        rs.path_failures += 1
                    continue
                key = _root_key(xp)
                pos = found.get(key)
                if pos is None:
                    found[key] = len(rs.roots)
                    known.append(np.array([complex(v) for v in xp]))
                    rs.roots.append(tuple(+v for v in xp))
                    rs.residuals.append(+r)
                    rs.multiplicities.append(0 if stalled[k] else 1)
                    rs.tags.append("none")
                elif first and not stalled[k]:
                    rs.multiplicities[pos] += 1
                    rs.residuals[pos] = min(rs.residuals[pos], +r)
        return lost

    for attempt in range(cfg.retries + 1):
        rng = np.random.default_rng(cfg.seed + attempt)
        gamma = np.exp(2j * np.pi * rng.random())
        nvar = len(unknowns) + 1
        patch = rng.normal(size=nvar) + 1j * rng.normal(size=nvar)
        start = system.start_points()
        start = start / (start @ patch)[:, None]
        hom = _Homotopy(system, gamma, patch)
        X, _, stalled, steps = _track(hom, start, cfg)
        X = _refine(hom, X)
        rs.diagnostics.append(
            f"run {attempt}: paths={len(start)} tracker_iterations={steps} stalled={int(stalled.sum())}"
        )
        first = attempt == 0
        before = len(rs.roots)
        lost = _absorb(X, stalled, first, record=False)
        if lost:
            # lost paths usually jumped or stalled; track them again with a finer step
            Xl, _, sl, steps = _track(hom, start[lost], fine)
            Xl = _refine(hom, Xl)
            rs.diagnostics.append(f"run {attempt}: retracked {len(lost)} lost paths, tracker_iterations={steps}")
            _absorb(Xl, sl, first, record=True)
        if len(rs.roots) >= expected or (not first and len(rs.roots) == before):
            break
    # roots reached only by stalled paths still count once
    rs.multiplicities = [max(1, m) for m in rs.multiplicities]
    if rs.failed and sum(rs.multiplicities) >= expected:
        # every finite isolated root is accounted for, so these endpoints were bound for infinity
        rs.diagnostics.append(f"{len(rs.failed)} unpolished endpoints reclassified as diverging: "
                              "the weighted count is already met")
        rs.diverged += len(rs.failed)
        rs.failed = []
        rs.path_failures = 0
    _adopt_singular_origin(rs, eqs, unknowns, expected)
    merged = sum(1 for m in rs.multiplicities if m > 1)
    if merged:
        rs.diagnostics.append(f"{merged} roots reached by several paths (multiplicity > 1)")
    rs.diagnostics.append(f"weighted root count {expected}, found {len(rs.roots)}")
    if rs.singular:
        rs.diagnostics.append(f"{len(rs.singular)} paths ended at singular solutions (not polished)")
    if rs.path_failures:
        rs.diagnostics.append(f"{rs.path_failures} finite endpoints failed to polish (singular or lost paths)")
    order_key = [(float(mpmath.re(r[0])), float(mpmath.im(r[0]))) for r in rs.roots]
    perm = sorted(range(len(rs.roots)), key=lambda i: order_key[i])
    rs.roots = [rs.roots[i] for i in perm]
    rs.residuals = [rs.residuals[i] for i in perm]
    rs.multiplicities = [rs.multiplicities[i] for i in perm]
    rs.tags = [rs.tags[i] for i in perm]
    return rs
