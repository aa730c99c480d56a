"""2-stage -> Lambda-stage coefficient transform and evolution operators.

A two-stage scheme S(h) = e^{A a_1 h} e^{B b_1 h} ... e^{A a_{q+1} h} is
rewritten as q sweeps over Lambda operators,

    U(h) = prod_i [ asc-block(c_i) * desc-block(d_i) ],

where an ascending block is e^{A_1 c h} e^{A_2 c h} ... e^{A_L c h} and a
descending block runs k = L..1.  For Lambda = 2 adjacent same-operator
exponentials merge and U reduces to S exactly; for general Lambda the
order of the source scheme is preserved.  Reversing the (c, d) sequence
yields the adjoint decomposition, and alternating the two across steps
elevates an odd-order scheme to the next even order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DimensionError, StructuralError
from .schemes import (
    TwoStageScheme,
    fit_loglog_slope,
    random_hermitian,
    validate_consistency,
)
from .tolerances import CONSISTENCY_TOL, DEFAULT_SEED, HERMITICITY_TOL

__all__ = [
    "MultiStageScheme",
    "OperatorSplit",
    "to_multistage",
    "reconstruct_two_stage",
    "apply_two_stage",
    "apply_multistage",
    "evolve",
    "multistage_order",
    "direction_prefactor",
]


@dataclass(frozen=True)
class MultiStageScheme:
    """Per-sweep coefficient pairs (c_i, d_i), i = 1..q."""

    name: str
    order_n: int
    c: tuple
    d: tuple
    source_scheme: str = ""

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(complex(x) for x in self.c))
        object.__setattr__(self, "d", tuple(complex(x) for x in self.d))
        if len(self.c) != len(self.d) or not self.c:
            raise StructuralError(
                f"multistage scheme {self.name!r}: need len(c) = len(d) >= 1"
            )
        total = sum(self.c) + sum(self.d)
        if abs(total - 1.0) > CONSISTENCY_TOL:
            raise ConsistencyError(
                f"multistage scheme {self.name!r}: sum(c)+sum(d) = {total!r}, not 1"
            )

    @property
    def q(self):
        return len(self.c)

    def reversed(self):
        """Adjoint decomposition: reverse the full factor sequence.

        Reading the factor list backwards swaps the roles of ascending and
        descending blocks, so the reversed scheme has c' = reversed(d) and
        d' = reversed(c).  For symmetric source schemes c = d reversed-pair
        wise and this is the identity.
        """
        return MultiStageScheme(
            name=self.name + "-reversed",
            order_n=self.order_n,
            c=self.d[::-1],
            d=self.c[::-1],
            source_scheme=self.source_scheme,
        )


@dataclass(frozen=True)
class OperatorSplit:
    """An ordered split H = sum_k A_k into Hermitian parts."""

    parts: tuple
    total: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        parts = tuple(np.asarray(p, dtype=complex) for p in self.parts)
        if not parts:
            raise StructuralError("operator split needs at least one part")
        dim = parts[0].shape[0]
        for i, p in enumerate(parts):
            if p.ndim != 2 or p.shape != (dim, dim):
                raise DimensionError(
                    f"part {i} has shape {p.shape}, expected ({dim}, {dim})"
                )
            dev = np.max(np.abs(p - p.conj().T))
            if dev > HERMITICITY_TOL:
                raise StructuralError(
                    f"part {i} is not Hermitian (max deviation {dev:.3e})"
                )
        for p in parts:
            p.setflags(write=False)
        object.__setattr__(self, "parts", parts)
        total = np.zeros((dim, dim), dtype=complex)
        for p in parts:
            total = total + p
        total.setflags(write=False)
        object.__setattr__(self, "total", total)

    @property
    def dim(self):
        return self.parts[0].shape[0]

    @property
    def n_parts(self):
        return len(self.parts)


def direction_prefactor(direction):
    """Generator prefactor: -i for real-time, -1 for imaginary-time."""
    if direction == "forward":
        return -1j
    if direction == "imaginary":
        return -1.0
    raise StructuralError(f"direction must be 'forward' or 'imaginary', got {direction!r}")


def to_multistage(scheme):
    """Transform (a, b) to (c, d): c1=a1, d1=b1-c1, ci=ai-d(i-1), di=bi-ci.

    The recurrence consumes a_1..a_q and b_1..b_q; consistency forces the
    final a_{q+1} to close the sequence (checked by the round trip).
    """
    report = validate_consistency(scheme)
    if not report.ok:
        raise ConsistencyError(
            f"scheme {scheme.name!r} is inconsistent "
            f"(a-residual {report.a_residual:.3e}, b-residual {report.b_residual:.3e}); "
            "refusing to transform"
        )
    c = [scheme.a[0]]
    d = [scheme.b[0] - c[0]]
    for i in range(1, scheme.q):
        c.append(scheme.a[i] - d[i - 1])
        d.append(scheme.b[i] - c[i])
    if scheme.symmetric and report.symmetry_ok:
        # A palindromic factor sequence transforms to d = reversed(c)
        # exactly; enforcing it here (instead of keeping the recurrence's
        # round-off-contaminated d) makes the reversed scheme equal the
        # original bit for bit, so alternate reversal is a true no-op.
        d = c[::-1]
    return MultiStageScheme(
        name=scheme.name + "-multistage",
        order_n=scheme.order_n,
        c=tuple(c),
        d=tuple(d),
        source_scheme=scheme.name,
    )


def reconstruct_two_stage(ms):
    """Invert the transform: a1=c1, bi=ci+di, a(i+1)=di+c(i+1), a(q+1)=dq."""
    q = ms.q
    a = [ms.c[0]]
    b = []
    for i in range(q):
        b.append(ms.c[i] + ms.d[i])
        a.append(ms.d[i] + ms.c[i + 1] if i + 1 < q else ms.d[i])
    return tuple(a), tuple(b)


# ---------------------------------------------------------------------------
# evolution operators


class _FactorCache:
    """Per-call cache of e^{A_k * tau} factors, built from one eigh per part.

    An optional hook may supply factors directly (e.g. a lifted fast path
    for structured Hamiltonians); the cache is local to one evolve call, so
    concurrent calls never share mutable state.
    """

    def __init__(self, parts, hook=None):
        self._parts = parts
        self._hook = hook
        self._eigs = [None] * len(parts)
        self._factors = {}

    def factor(self, k, tau):
        key = (k, tau)
        got = self._factors.get(key)
        if got is not None:
            return got
        mat = self._hook(k, tau) if self._hook is not None else None
        if mat is None:
            if self._eigs[k] is None:
                w, v = np.linalg.eigh(self._parts[k])
                # One Newton-Schulz step pulls v back onto the unitary
                # manifold; otherwise LAPACK's orthonormality drift leaks a
                # ~dim*eps unitarity defect into every factor and compounds
                # over long step sequences.
                v = v @ (1.5 * np.eye(v.shape[0]) - 0.5 * (v.conj().T @ v))
                self._eigs[k] = (w, v)
            w, v = self._eigs[k]
            mat = (v * np.exp(tau * w)) @ v.conj().T
        self._factors[key] = mat
        return mat


def apply_two_stage(a, b, scheme, h, direction="forward"):
    """Ordered product e^{A a_1 h'} e^{B b_1 h'} ... with h' = prefactor * h."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"A and B must be square and same shape, got {a.shape} vs {b.shape}")
    pref = direction_prefactor(direction)
    cache = _FactorCache((a, b))
    u = cache.factor(0, pref * scheme.a[0] * h)
    for i in range(scheme.q):
        u = u @ cache.factor(1, pref * scheme.b[i] * h)
        u = u @ cache.factor(0, pref * scheme.a[i + 1] * h)
    return u


def _one_step(split, ms, h, pref, cache):
    dim = split.dim
    u = np.eye(dim, dtype=complex)
    n = split.n_parts
    for i in range(ms.q):
        ci, di = ms.c[i], ms.d[i]
        if ci != 0:
            for k in range(n):
                u = u @ cache.factor(k, pref * ci * h)
        if di != 0:
            for k in range(n - 1, -1, -1):
                u = u @ cache.factor(k, pref * di * h)
    return u


def apply_multistage(split, ms, h, direction="forward", *, expm_hook=None):
    """One step of the Lambda-stage decomposition (ascending/descending blocks)."""
    pref = direction_prefactor(direction)
    cache = _FactorCache(split.parts, expm_hook)
    return _one_step(split, ms, h, pref, cache)


def evolve(split, ms, h, steps, alternate_reversal=False, direction="forward",
           *, expm_hook=None):
    """Compose `steps` applications of the decomposition.

    With alternate_reversal, every second step uses the reversed coefficient
    sequence (the adjoint decomposition), elevating an odd-order scheme to
    the next even order.  For symmetric schemes the reversal is the identity
    and the results are bit-identical.
    """
    if steps < 1:
        raise StructuralError(f"steps must be >= 1, got {steps}")
    pref = direction_prefactor(direction)
    cache = _FactorCache(split.parts, expm_hook)
    ms_rev = ms.reversed() if alternate_reversal else ms
    u = np.eye(split.dim, dtype=complex)
    for i in range(steps):
        use = ms_rev if (alternate_reversal and i % 2 == 1) else ms
        u = u @ _one_step(split, use, h, pref, cache)
    return u


def multistage_order(
    split,
    ms,
    h_grid=None,
    *,
    t_total=1.0,
    direction="forward",
    alternate_reversal=False,
    expm_hook=None,
):
    """Fitted log-log slope of the Lambda-stage decomposition error.

    Error is the Frobenius distance to the exact exponential of the summed
    operator after t/h steps; plateau points are excluded by the fit.
    """
    if h_grid is None:
        h_grid = [2.0 ** (-j) for j in range(2, 7)]
    pref = direction_prefactor(direction)
    w, v = np.linalg.eigh(split.total)
    errors = []
    for h in h_grid:
        steps = max(1, round(t_total / h))
        u_exact = (v * np.exp(pref * steps * h * w)) @ v.conj().T
        u = evolve(split, ms, h, steps, alternate_reversal, direction,
                   expm_hook=expm_hook)
        errors.append(float(np.linalg.norm(u - u_exact)))
    return fit_loglog_slope(h_grid, errors)


def random_split(n_parts, dim, *, seed=DEFAULT_SEED):
    """Seeded random Hermitian split for order checks and tests."""
    rng = np.random.default_rng(seed)
    return OperatorSplit(tuple(random_hermitian(rng, dim) for _ in range(n_parts)))
