"""Half-line certificates for ``Sigma + Sigma`` at high energy.

Two independent routes are provided.

*Certificate route.*  The spectrum in ``t = sqrt(E)`` is cut into windows
``J_n`` away from the points ``t = n pi``; the pieces ``K_n`` must satisfy

1. disjoint, increasing convex hulls ``I_n``;
2. ``tau(K_n) > 1 + eps`` for one ``eps > 0``;
3. ``2A >= |I_n| >= A`` and ``dist(I_n, I_{n+1}) <= a`` with ``A > a``.

After squaring, every sum ``K~_n + K~_n`` and ``K~_n + K~_{n+1}`` is checked
to be a single interval and consecutive sums must overlap.  Each inequality
is recomputed on the finite sets rather than taken from asymptotics.

*Direct route.*  :func:`direct_sum_tail` forms the Minkowski sum of the
energy approximant with itself and reads off the gap-free tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cantor import INF, _from_json_num, _json_num, thickness
from .intervals import Interval, IntervalSet, covers_interval, gap_array, hull, minkowski_sum, square_image
from .spectrum import ENERGY, T_PARAM, SpectrumApproximant
from .transfer import Model, invariant_closed_form, log_derivative_invariant

DEFAULT_TRIM = 0.3
_DIAG_POINTS = 401


class CertificateError(ValueError):
    """Bad input to the certificate pipeline (not a failed certificate)."""


class NoTailError(RuntimeError):
    """The direct sum has no gap-free stretch below the truncation."""


def window(n: int, trim: float) -> Interval:
    """``J_n = [n pi + trim, (n+1) pi - trim]``, one half-period of ``cos t``."""
    if not trim > 0:
        raise CertificateError("trim must be positive")
    if trim >= math.pi / 2:
        raise CertificateError("trim exceeds half window")
    return Interval(n * math.pi + trim, (n + 1) * math.pi - trim)


@dataclass(frozen=True)
class WindowFamily:
    """Windows ``(n, J_n, K_n)``; ``excluded`` lists the ``n`` with empty ``K_n``."""

    windows: tuple[tuple[int, Interval, IntervalSet], ...]
    alpha_n: tuple[float, ...]
    beta_n: tuple[float, ...]
    excluded: tuple[int, ...] = ()
    model: Model | None = None

    def to_json(self) -> dict:
        return {
            "windows": [{"n": n, "J": j.as_list(), "K": k.tolist()} for n, j, k in self.windows],
            "alpha_n": list(self.alpha_n),
            "beta_n": list(self.beta_n),
            "excluded": list(self.excluded),
            "model": None if self.model is None else self.model.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WindowFamily":
        return cls(
            windows=tuple((int(w["n"]), Interval(*w["J"]), IntervalSet(w["K"])) for w in obj["windows"]),
            alpha_n=tuple(obj["alpha_n"]),
            beta_n=tuple(obj["beta_n"]),
            excluded=tuple(obj.get("excluded", ())),
            model=None if obj.get("model") is None else Model.from_json(obj["model"]),
        )


@dataclass(frozen=True)
class ChainLink:
    n: int
    j_n: Interval | None
    j_n_prime: Interval | None
    overlap_ok: bool
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "J_n": None if self.j_n is None else self.j_n.as_list(),
            "J_n_prime": None if self.j_n_prime is None else self.j_n_prime.as_list(),
            "overlap_ok": self.overlap_ok,
            "reason": self.reason,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainLink":
        iv = lambda v: None if v is None else Interval(*v)  # noqa: E731
        return cls(int(obj["n"]), iv(obj["J_n"]), iv(obj["J_n_prime"]),
                   bool(obj["overlap_ok"]), obj.get("reason", ""))


@dataclass(frozen=True)
class BSCertificate:
    """Numbers witnessing (or refuting) a half-line in ``Sigma + Sigma``.

    ``status`` is ``"pending"`` after the hypothesis check, then ``"valid"``
    or ``"invalid"``.  ``failures`` name the condition or chain step that
    broke.  ``e1``/``e_max`` bound the stretch ``[e1, e_max]`` that the
    finite data certify; nothing is claimed beyond ``e_max``.
    """

    epsilon: float
    a_cap: float
    a_gap: float
    thickness_list: tuple[float, ...]
    squared_thickness_list: tuple[float, ...] = ()
    chain: tuple[ChainLink, ...] = ()
    e1: float | None = None
    e_max: float | None = None
    valid: bool = False
    status: str = "pending"
    failures: tuple[str, ...] = ()
    window_ns: tuple[int, ...] = ()
    hulls: tuple[Interval, ...] = ()
    diagnostics: tuple[dict, ...] = field(default=())

    @property
    def conditions_ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "epsilon": _json_num(self.epsilon),
            "a_cap": self.a_cap,
            "a_gap": self.a_gap,
            "thickness_list": [_json_num(t) for t in self.thickness_list],
            "squared_thickness_list": [_json_num(t) for t in self.squared_thickness_list],
            "chain": [c.to_json() for c in self.chain],
            "e1": self.e1,
            "e_max": self.e_max,
            "valid": self.valid,
            "status": self.status,
            "failures": list(self.failures),
            "window_ns": list(self.window_ns),
            "hulls": [h.as_list() for h in self.hulls],
            "diagnostics": [dict(d) for d in self.diagnostics],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BSCertificate":
        return cls(
            epsilon=_from_json_num(obj["epsilon"]),
            a_cap=float(obj["a_cap"]),
            a_gap=float(obj["a_gap"]),
            thickness_list=tuple(_from_json_num(t) for t in obj["thickness_list"]),
            squared_thickness_list=tuple(_from_json_num(t) for t in obj["squared_thickness_list"]),
            chain=tuple(ChainLink.from_json(c) for c in obj["chain"]),
            e1=obj["e1"],
            e_max=obj["e_max"],
            valid=bool(obj["valid"]),
            status=obj["status"],
            failures=tuple(obj["failures"]),
            window_ns=tuple(obj["window_ns"]),
            hulls=tuple(Interval(*h) for h in obj["hulls"]),
            diagnostics=tuple(obj.get("diagnostics", ())),
        )


def decompose_windows(spec_t: SpectrumApproximant, n_lo: int, n_hi: int,
                      trim: float = DEFAULT_TRIM) -> WindowFamily:
    """Cut a t-approximant into ``K_n = set & J_n`` for ``n_lo <= n <= n_hi``.

    Windows with empty ``K_n`` are dropped and listed in ``excluded``.
    """
    if spec_t.variable != T_PARAM:
        raise CertificateError("decompose_windows needs a t-variable approximant")
    if n_hi < n_lo:
        raise CertificateError("need n_lo <= n_hi")
    rng = spec_t.range
    kept, excluded = [], []
    for n in range(n_lo, n_hi + 1):
        j = window(n, trim)
        if j.lo < rng.lo or j.hi > rng.hi:
            raise CertificateError(f"window J_{n} = [{j.lo}, {j.hi}] leaves the range [{rng.lo}, {rng.hi}]")
        k = spec_t.set.intersect(j)
        if k:
            kept.append((n, j, k))
        else:
            excluded.append(n)
    m = len(kept)
    return WindowFamily(tuple(kept), (trim,) * m, (trim,) * m, tuple(excluded), spec_t.model)


def _window_diagnostics(model: Model | None, j: Interval) -> dict:
    """Invariant positivity and log-derivative size along one window."""
    if model is None or not model.is_canonical or model.coupling == 0:
        return {}
    lam = model.coupling
    t = np.linspace(j.lo, j.hi, _DIAG_POINTS)
    inv = invariant_closed_form(lam, t * t, limit=True)
    worst = 0.0
    for x in t:
        try:
            worst = max(worst, abs(log_derivative_invariant(lam, float(x))))
        except ValueError:
            worst = INF
            break
    return {"min_invariant": float(np.min(inv)), "max_abs_log_derivative": _json_num(worst)}


def check_abs_conditions(w: WindowFamily) -> BSCertificate:
    """Evaluate conditions (1)-(3) on the windows; the chain is left pending."""
    if len(w.windows) < 2:
        raise CertificateError("need at least two nonempty windows")
    ns = tuple(n for n, _, _ in w.windows)
    hulls = tuple(hull(k) for _, _, k in w.windows)
    taus = tuple(thickness(k).tau for _, _, k in w.windows)
    failures = []

    for (n0, h0), (n1, h1) in zip(zip(ns, hulls), zip(ns[1:], hulls[1:])):
        if not h0.hi < h1.lo:
            failures.append(f"condition 1: hulls I_{n0} and I_{n1} overlap or are out of order")

    eps = min(taus) - 1
    if not eps > 0:
        bad = [n for n, t in zip(ns, taus) if t - 1 <= 0]
        failures.append(f"condition 2: thickness <= 1 at n = {bad}")

    widths = [h.width for h in hulls]
    a_cap = min(widths)
    a_gap = max(h1.lo - h0.hi for h0, h1 in zip(hulls, hulls[1:]))
    if max(widths) > 2 * a_cap:
        n_bad = ns[int(np.argmax(widths))]
        failures.append(f"condition 3: |I_{n_bad}| = {max(widths)} exceeds 2A = {2 * a_cap}")
    if not a_gap < a_cap:
        failures.append(f"condition 3: hull spacing a = {a_gap} is not below A = {a_cap}")

    diags = tuple(_window_diagnostics(w.model, j) for _, j, _ in w.windows)
    return BSCertificate(
        epsilon=float(eps), a_cap=float(a_cap), a_gap=float(a_gap), thickness_list=taus,
        status="invalid" if failures else "pending", failures=tuple(failures),
        window_ns=ns, hulls=hulls, diagnostics=diags,
    )


def _single(s: IntervalSet) -> Interval | None:
    return Interval(float(s.lo[0]), float(s.hi[0])) if len(s) == 1 else None


def _meets(x: Interval, y: Interval) -> bool:
    return x.lo <= y.hi and y.lo <= x.hi


def verify_half_line(w: WindowFamily, cert: BSCertificate) -> BSCertificate:
    """Run the overlap chain on the squared windows.

    ``K~_n + K~_n`` and ``K~_n + K~_{n+1}`` must be single intervals, and
    ``J_n, J_n', J_{n+1}`` must overlap in turn.  The certificate is valid
    iff conditions (1)-(3) held and every link is intact; ``e1`` is then the
    left end of the first ``J_n`` and ``e_max`` the right end of the last.
    """
    if cert.failures:
        return replace(cert, valid=False, status="invalid")
    ks = [square_image(k) for _, _, k in w.windows]
    ns = [n for n, _, _ in w.windows]
    tau_sq = tuple(thickness(k).tau for k in ks)
    failures = [f"squared thickness <= 1 at n = {n}" for n, t in zip(ns, tau_sq) if not t > 1]

    sums = [minkowski_sum(k, k) for k in ks]
    links = []
    for i, n in enumerate(ns):
        j_n = _single(sums[i])
        if j_n is None:
            g = gap_array(sums[i])[0]
            links.append(ChainLink(n, None, None, False, f"J_{n} has a gap at [{g[0]}, {g[1]}]"))
            continue
        if i == len(ns) - 1:
            links.append(ChainLink(n, j_n, None, True))
            continue
        if ns[i + 1] != n + 1:
            links.append(ChainLink(n, j_n, None, False, f"window {n + 1} missing from the family"))
            continue
        cross = minkowski_sum(ks[i], ks[i + 1])
        j_p = _single(cross)
        if j_p is None:
            g = gap_array(cross)[0]
            links.append(ChainLink(n, j_n, None, False, f"J_{n}' has a gap at [{g[0]}, {g[1]}]"))
            continue
        j_next = _single(sums[i + 1])
        reasons = []
        if not _meets(j_n, j_p):
            reasons.append(f"J_{n} and J_{n}' do not overlap")
        if j_next is not None and not _meets(j_p, j_next):
            reasons.append(f"J_{n}' and J_{n + 1} do not overlap")
        links.append(ChainLink(n, j_n, j_p, not reasons, "; ".join(reasons)))

    broken = [i for i, l in enumerate(links) if not l.overlap_ok]
    failures += [f"chain break at n = {links[i].n}: {links[i].reason}" for i in broken]
    valid = not failures
    e1 = links[0].j_n.lo if valid else None
    e_max = links[-1].j_n.hi if valid else None
    return replace(cert, squared_thickness_list=tau_sq, chain=tuple(links), e1=e1, e_max=e_max,
                   valid=valid, status="valid" if valid else "invalid",
                   failures=cert.failures + tuple(failures))


def certify(spec_t: SpectrumApproximant, n_lo: int, n_hi: int,
            trim: float = DEFAULT_TRIM) -> tuple[WindowFamily, BSCertificate]:
    w = decompose_windows(spec_t, n_lo, n_hi, trim)
    return w, verify_half_line(w, check_abs_conditions(w))


def direct_sum_tail(spec_e: SpectrumApproximant, tol: float = 1e-9) -> tuple[float, Interval]:
    """Smallest ``e1`` with ``[e1, e_safe]`` covered by ``set + set`` up to ``tol``.

    ``e_safe = 2 e_max - w`` with ``w`` the width of the last band: beyond it
    the sum is shaped by the truncation rather than by the spectrum.

    Raises
    ------
    NoTailError
        If a gap wider than ``2 tol`` sits right below ``e_safe``.
    """
    if spec_e.variable != ENERGY:
        raise CertificateError("direct_sum_tail needs an energy approximant")
    if not spec_e.set:
        raise NoTailError("empty approximant")
    s = minkowski_sum(spec_e.set, spec_e.set)
    last = spec_e.set.array[-1]
    e_safe = 2 * spec_e.e_max - (last[1] - last[0])
    e1 = float(s.lo[0])
    if len(s) > 1:
        g = gap_array(s)
        wide = g[(g[:, 1] - g[:, 0] > 2 * tol) & (g[:, 0] + tol < e_safe)]
        if len(wide):
            e1 = float(wide[-1, 1])
    if not e1 < e_safe or not covers_interval(s, Interval(e1, e_safe), tol):
        gl = gap_array(s)[-1] if len(s) > 1 else (s.hi[0], s.hi[0])
        raise NoTailError(f"no gap-free tail below e_safe = {e_safe}; last gap [{gl[0]}, {gl[1]}]")
    return e1, Interval(e1, e_safe)
