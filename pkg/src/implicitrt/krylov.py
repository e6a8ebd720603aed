"""Matrix-free preconditioned conjugate gradient and restarted GMRES.

PCG runs in a weighted inner product so that operators which are symmetric
positive definite only in that product (the parity transport system) can be
solved without forming anything.  Applying the preconditioner once per
iteration is algebraically the same as running CG on the preconditioned
operator in the preconditioner-weighted inner product, so the residual
history reported here is the *preconditioned* relative residual.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import IndefiniteOperatorError

__all__ = [
    "LinearOperatorHandle",
    "KrylovReport",
    "pcg_solve",
    "cg_self_adjoint_solve",
    "gmres_solve",
]


@dataclass
class LinearOperatorHandle:
    """A square operator given by its action on vectors."""

    apply: Callable[[np.ndarray], np.ndarray]
    n: int
    precond: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass
class KrylovReport:
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    matvec_count: int = 0
    message: str = ""

    @property
    def final_residual(self):
        return self.residual_history[-1]


def _as_handle(op):
    if isinstance(op, LinearOperatorHandle):
        return op
    raise TypeError("expected a LinearOperatorHandle")


def pcg_solve(op, precond, b, tol=1e-10, max_iter=1000, weight=None, x0=None):
    """Preconditioned conjugate gradient in a weighted inner product.

    Parameters
    ----------
    op : LinearOperatorHandle
        Symmetric positive (semi-)definite in the weighted inner product.
    precond : LinearOperatorHandle or None
        Symmetric positive definite approximation of op^{-1}; None means
        the identity.
    b : right-hand side vector.
    tol : relative preconditioned-residual tolerance.
    max_iter : iteration cap; on hitting it the best iterate is returned
        with ``converged=False``.
    weight : per-entry positive weights of the inner product (None =
        Euclidean).
    x0 : initial guess (default zero).

    Returns
    -------
    (x, KrylovReport).  One op apply and one precond apply per iteration
    plus the initial residual; matvec_count counts op applies.
    """
    op = _as_handle(op)
    apply_m = precond.apply if precond is not None else (lambda v: v)
    w = None if weight is None else np.asarray(weight)

    def dot(u, v):
        return float(u @ v) if w is None else float((w * u) @ v)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op.apply(x)
    matvecs = 1
    z = apply_m(r)
    rz = dot(r, z)
    if rz < 0.0:
        raise IndefiniteOperatorError("preconditioner is not positive definite")
    norm0 = np.sqrt(rz)
    if norm0 == 0.0:
        return x, KrylovReport(0, [0.0], True, matvecs)

    history = [1.0]
    p = z.copy()
    iterations = 0
    converged = True
    message = ""
    while history[-1] > tol:
        if iterations >= max_iter:
            converged = False
            message = f"max_iter={max_iter} reached"
            break
        q = op.apply(p)
        matvecs += 1
        curv = dot(p, q)
        if curv <= 0.0:
            if curv < -1e-12 * dot(p, p):
                raise IndefiniteOperatorError(
                    f"negative curvature {curv:g} in CG; operator is indefinite"
                )
            converged = False
            message = "CG stagnated on a numerically null direction"
            break
        alpha = rz / curv
        x += alpha * p
        r -= alpha * q
        z = apply_m(r)
        rz_new = dot(r, z)
        if rz_new < 0.0:
            raise IndefiniteOperatorError("preconditioner is not positive definite")
        history.append(np.sqrt(rz_new) / norm0)
        p = z + (rz_new / rz) * p
        rz = rz_new
        iterations += 1
    return x, KrylovReport(iterations, history, converged, matvecs, message)


def cg_self_adjoint_solve(op, inner, b, tol=1e-10, max_iter=1000, weight=None, x0=None):
    """CG for an operator that is self-adjoint positive definite in the
    inner product  (u, v) = <u, inner(v)>_w.

    This runs the conjugate gradient recurrences directly on a
    preconditioned system T = M^{-1} S (self-adjoint in the M-inner
    product), which produces the same iterates as ``pcg_solve`` on S with
    preconditioner M^{-1} but never evaluates the ill-scaled product S p.
    That matters in the stiff regime, where forming S p and then applying
    M^{-1} amplifies rounding of the dominant identity-like part of S; here
    the caller composes T so that the amplification only ever touches the
    genuinely small elliptic part.

    ``b`` must already live in the preconditioned space (b = M^{-1} rhs),
    and ``inner`` applies M.  Residuals are relative M-norm residuals,
    identical to the preconditioned residuals of ``pcg_solve``.
    """
    op = _as_handle(op)
    w = None if weight is None else np.asarray(weight)

    def dot(u, v):
        return float(u @ v) if w is None else float((w * u) @ v)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op.apply(x)
    matvecs = 1
    rr = dot(r, inner(r))
    if rr < 0.0:
        raise IndefiniteOperatorError("inner-product operator is not positive definite")
    norm0 = np.sqrt(rr)
    if norm0 == 0.0:
        return x, KrylovReport(0, [0.0], True, matvecs)

    history = [1.0]
    p = r.copy()
    iterations = 0
    converged = True
    message = ""
    while history[-1] > tol:
        if iterations >= max_iter:
            converged = False
            message = f"max_iter={max_iter} reached"
            break
        q = op.apply(p)
        matvecs += 1
        curv = dot(p, inner(q))
        if curv <= 0.0:
            if curv < -1e-12 * dot(p, inner(p)):
                raise IndefiniteOperatorError(
                    f"negative curvature {curv:g} in CG; operator is indefinite"
                )
            converged = False
            message = "CG stagnated on a numerically null direction"
            break
        alpha = rr / curv
        x += alpha * p
        r -= alpha * q
        rr_new = dot(r, inner(r))
        if rr_new < 0.0:
            raise IndefiniteOperatorError("inner-product operator is not positive definite")
        history.append(np.sqrt(rr_new) / norm0)
        p = r + (rr_new / rr) * p
        rr = rr_new
        iterations += 1
    return x, KrylovReport(iterations, history, converged, matvecs, message)


def gmres_solve(op, precond=None, b=None, tol=1e-10, max_iter=1000, restart=30):
    """Restarted GMRES with optional left preconditioning.

    Minimizes the preconditioned residual over the Krylov space of the
    preconditioned operator; convergence is declared on the relative
    preconditioned residual, like ``pcg_solve``.  Stagnation across a full
    restart cycle aborts with ``converged=False`` and a diagnostic message.
    """
    op = _as_handle(op)
    apply_m = precond.apply if precond is not None else (lambda v: v)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    restart = max(1, min(restart, n))

    x = np.zeros_like(b)
    history = []
    matvecs = 0
    total_iters = 0
    converged = False
    message = ""

    r0 = apply_m(b)
    norm0 = float(np.linalg.norm(r0))
    if norm0 == 0.0:
        return x, KrylovReport(0, [0.0], True, 0)

    prev_cycle = np.inf
    while True:
        # the cycle-start residual is recomputed, so convergence is always
        # declared on the true preconditioned residual of the iterate
        r = apply_m(b - op.apply(x))
        matvecs += 1
        relres = float(np.linalg.norm(r)) / norm0
        history.append(relres)
        if relres <= tol:
            converged = True
            break
        if total_iters >= max_iter:
            message = f"max_iter={max_iter} reached"
            break
        if relres >= 0.999 * prev_cycle:
            message = (
                f"GMRES stagnated: relative residual {relres:.3e} did not "
                f"improve over a restart cycle of {restart}"
            )
            break
        prev_cycle = relres

        beta = relres * norm0
        v = [r / beta]
        h = np.zeros((restart + 1, restart))
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = beta

        k = 0
        for j in range(restart):
            wv = apply_m(op.apply(v[j]))
            matvecs += 1
            total_iters += 1
            for i in range(j + 1):
                h[i, j] = float(v[i] @ wv)
                wv -= h[i, j] * v[i]
            h_sub = float(np.linalg.norm(wv))
            h[j + 1, j] = h_sub
            # previously accumulated Givens rotations
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            denom = np.hypot(h[j, j], h[j + 1, j])
            cs[j], sn[j] = h[j, j] / denom, h[j + 1, j] / denom
            h[j, j] = denom
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            estimate = abs(g[j + 1]) / norm0
            if j + 1 < restart:
                history.append(estimate)
            if estimate <= tol or h_sub == 0.0 or not np.isfinite(estimate):
                break
            if total_iters >= max_iter:
                break
            v.append(wv / h_sub)

        # back substitution on the k x k triangular system
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - h[i, i + 1 : k] @ y[i + 1 : k]) / h[i, i]
        for i in range(k):
            x += y[i] * v[i]

    return x, KrylovReport(total_iters, history, converged, matvecs, message)
