"""Bracket-scan plus Brent-style scalar minimization.

The feed-through objectives are cheap but not guaranteed unimodal, so the
policy is: evaluate a fixed candidate ladder, take the best point, then
refine inside the bracket formed by its ladder neighbors with Brent's
method (parabolic steps where the local model is trustworthy, golden
sections otherwise).  Probes may return +inf (rejected candidates); the
parabolic model is only used on finite triples.  Ties within 1e-12
relative prefer the smaller magnitude argument.  Used unchanged by both
the reduction pipeline and the shifted balanced-truncation baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(eq=False)
class ProbeRecord:
    x: float
    value: float
    stable: bool
    phase: str = "scan"


@dataclass(eq=False)
class ScalarSearch:
    x_best: float
    value: float
    trace: list = field(default_factory=list)

    @property
    def rejected_count(self):
        return sum(1 for p in self.trace if not p.stable)

    def value_at(self, x):
        """First recorded probe value at argument x (exact match)."""
        for p in self.trace:
            if p.x == x:
                return p.value
        raise KeyError(f"no probe recorded at {x}")


def ladder(scale: float, decades: int = 4, per_sign: int = 5):
    """0 plus +/- scale * 10^{-decades..0}, sorted ascending."""
    if scale <= 0:
        return [0.0]
    mags = scale * np.geomspace(10.0 ** (-decades), 1.0, per_sign)
    vals = np.concatenate([-mags[::-1], [0.0], mags])
    return [float(v) for v in vals]


def _brent_min(f, a, b, x0, f0, rel_tol, max_iters=80):
    """Brent minimization on [a, b], warm-started at the interior point x0.

    Classic scheme: try a parabolic step through the three best points,
    fall back to a golden section when the fit is untrusted or any of the
    three values is non-finite (a rejected probe).
    """
    cgold = 1.0 - _GOLDEN
    x = w = v = x0
    fx = fw = fv = f0
    d = e = 0.0
    for _ in range(max_iters):
        xm = 0.5 * (a + b)
        tol1 = 0.5 * rel_tol * max(abs(a), abs(b), 1e-30)
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1 and np.isfinite(fx) and np.isfinite(fw) and np.isfinite(fv):
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp, e = e, d
            if abs(p) < abs(0.5 * q * etemp) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if xm >= x else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < xm else (a - x)
            d = cgold * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d >= 0.0 else -tol1)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def minimize_scalar(f, candidates, rel_tol: float = 1e-4) -> ScalarSearch:
    """Scan ``candidates`` with f(x) -> (value, stable), refine the winner.

    Candidates are evaluated in sorted order; rejected probes keep +inf in
    the trace.  If every candidate is rejected the search reports the
    all-rejected state with x_best = nan.
    """
    xs = sorted(set(float(x) for x in candidates))
    trace = []
    vals = []
    for x in xs:
        value, stable = f(x)
        value = float(value) if stable else np.inf
        trace.append(ProbeRecord(x=x, value=value, stable=bool(stable)))
        vals.append(value)
    vals = np.asarray(vals)
    if not np.any(np.isfinite(vals)):
        return ScalarSearch(x_best=np.nan, value=np.inf, trace=trace)
    best = np.min(vals[np.isfinite(vals)])
    # tie-break: smallest |x| among values within 1e-12 relative of the best
    close = [i for i, v in enumerate(vals) if v <= best * (1.0 + 1e-12)]
    i = min(close, key=lambda k: abs(xs[k]))
    x_best, v_best = xs[i], float(vals[i])

    lo = xs[i - 1] if i > 0 else xs[i]
    hi = xs[i + 1] if i + 1 < len(xs) else xs[i]
    if hi > lo:
        def scalar(x):
            value, stable = f(x)
            value = float(value) if stable else np.inf
            trace.append(ProbeRecord(x=x, value=value, stable=bool(stable),
                                     phase="refine"))
            return value

        x, v = _brent_min(scalar, lo, hi, x_best, v_best, rel_tol)
        if v < v_best:
            x_best, v_best = float(x), float(v)
    return ScalarSearch(x_best=x_best, value=v_best, trace=trace)
