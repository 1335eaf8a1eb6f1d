"""Independent numerical oracles used only by the tests.

Each oracle recomputes a quantity the package produces, by a different
route (Taylor series, Riccati integration, collocation, polynomial
sampling), so agreement is evidence of correctness rather than
self-consistency.
"""
import numpy as np
import scipy.integrate


def taylor_expm(M):
    """Matrix exponential by scaling and squaring a 50-term Taylor series."""
    M = np.asarray(M, dtype=float)
    nrm = np.linalg.norm(M, 1)
    s = max(0, int(np.ceil(np.log2(nrm))) + 1) if nrm > 0 else 0
    A = M / 2.0**s
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 51):
        term = term @ A / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def riccati_lq(A, B, Q, Qf, R, x0, t0, tf, K):
    """LQ-optimal (x, lam, u) on a K-step grid via the Riccati ODE.

    P is integrated backward with RK4 on a doubled grid so midpoint values
    are available for the forward closed-loop state pass; lam = P x.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    S = B @ np.linalg.solve(np.asarray(R, float), B.T)

    def pdot(P):
        return -(A.T @ P + P @ A - P @ S @ P + Q)

    K2 = 2 * K
    h = (tf - t0) / K2
    Ps = [None] * (K2 + 1)
    P = np.asarray(Qf, float).copy()
    Ps[K2] = P
    for i in range(K2, 0, -1):
        k1 = pdot(P)
        k2 = pdot(P - 0.5 * h * k1)
        k3 = pdot(P - 0.5 * h * k2)
        k4 = pdot(P - h * k3)
        P = P - h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        Ps[i - 1] = P

    hh = (tf - t0) / K
    x = np.zeros((K + 1, A.shape[0]))
    x[0] = x0

    def xdot(xv, P):
        return (A - S @ P) @ xv

    for k in range(K):
        Pk, Pm, Pk1 = Ps[2 * k], Ps[2 * k + 1], Ps[2 * k + 2]
        k1 = xdot(x[k], Pk)
        k2 = xdot(x[k] + 0.5 * hh * k1, Pm)
        k3 = xdot(x[k] + 0.5 * hh * k2, Pm)
        k4 = xdot(x[k] + hh * k3, Pk1)
        x[k + 1] = x[k] + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    Pc = np.array([Ps[2 * k] for k in range(K + 1)])
    lam = np.einsum("kij,kj->ki", Pc, x)
    u = -np.linalg.solve(np.asarray(R, float), B.T @ lam.T).T
    return x, lam, u


def bvp_truth(A, B, N, Q, Qf, R, x0, t0, tf, tol=1e-10):
    """Collocation solution of the full stationarity system.

    The right-hand side is written from the necessary conditions directly:
    u = -R^{-1}(B + sum_j x_j N_j)^T lam, dx = A x + (B + N(x)) u,
    dlam_j = -(Q x + A^T lam)_j - lam^T N_j u. Returns the scipy solution
    object with dense output.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    N = [np.asarray(Nj, float) for Nj in N]
    Q = np.asarray(Q, float)
    Qf = np.asarray(Qf, float)
    R = np.asarray(R, float)
    x0 = np.asarray(x0, float)
    n = A.shape[0]

    def fun(t, z):
        cols = z.shape[1]
        dz = np.zeros_like(z)
        for c in range(cols):
            x = z[:n, c]
            lam = z[n:, c]
            Bx = B + sum(x[j] * N[j] for j in range(n))
            u = -np.linalg.solve(R, Bx.T @ lam)
            dz[:n, c] = A @ x + Bx @ u
            dz[n:, c] = -(Q @ x + A.T @ lam)
            for j in range(n):
                dz[n + j, c] -= lam @ (N[j] @ u)
        return dz

    def bc(za, zb):
        return np.concatenate([za[:n] - x0, zb[n:] - Qf @ zb[:n]])

    tmesh = np.linspace(t0, tf, 41)
    guess = np.zeros((2 * n, tmesh.size))
    guess[:n] = x0[:, None]
    sol = scipy.integrate.solve_bvp(fun, bc, tmesh, guess, tol=tol, max_nodes=20000)
    if not sol.success:
        raise RuntimeError(f"collocation oracle failed: {sol.message}")
    return sol


def poly_coefficients(samples, points, degree):
    """Maclaurin coefficients of a vector polynomial from sampled values.

    samples has shape (len(points),) + tail; returns (degree + 1,) + tail.
    """
    points = np.asarray(points, float)
    V = np.vander(points, degree + 1, increasing=True)
    flat = samples.reshape(len(points), -1)
    coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
    return coef.reshape((degree + 1,) + samples.shape[1:])
