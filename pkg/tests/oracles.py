"""Independent reference computations used only by the tests."""
import numpy as np
from scipy import integrate


def snr(x, h, hv, sigw):
    """|x^H h|^2 / (x^H HVH^H x + sigma_w^2) for conjugated gains x (rows allowed)."""
    num = np.abs(np.sum(np.conj(x) * h, axis=-1)) ** 2
    den = np.sum(np.abs(x) ** 2 * hv, axis=-1) + sigw
    return num / den


def projected_gradient_max(h, hv, w, sigw, budget, rng, starts=50, iters=4000):
    """Multi-start projected gradient ascent of the SNR on ``sum w_i |x_i|^2 = budget``.

    The objective increases with the norm of x, so the budget is active and the
    feasible set reduces to the ellipsoid surface, handled in y = sqrt(w) x.
    """
    g = h / np.sqrt(w)
    k = hv / w
    n = h.size
    best = -np.inf
    for _ in range(starts):
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y *= np.sqrt(budget) / np.linalg.norm(y)
        step = step0 = 1.0 / (np.abs(g) ** 2).sum()
        f = None
        for _ in range(iters):
            a = np.vdot(y, g)                       # y^H g
            den = np.sum(np.abs(y) ** 2 * k) + sigw
            f = abs(a) ** 2 / den
            grad = (g * np.conj(a) * den - abs(a) ** 2 * k * y) / den ** 2
            while True:
                z = y + step * grad
                z *= np.sqrt(budget) / np.linalg.norm(z)
                a2 = np.vdot(z, g)
                f2 = abs(a2) ** 2 / (np.sum(np.abs(z) ** 2 * k) + sigw)
                if f2 >= f or step < 1e-20:
                    break
                step *= 0.5
            if f2 - f <= 1e-15 * f:
                y = z
                f = f2
                break
            y = z
            step = min(1.5 * step, 1e8 * step0)
        best = max(best, f)
    return best


def grid_max_snr_n2(h, hv, w, sigw, caps, res=400):
    """Exhaustive (|x1|, |x2|, relative phase) grid under per-sensor caps, N = 2."""
    r1 = np.linspace(0, np.sqrt(caps[0] / w[0]), res)
    r2 = np.linspace(0, np.sqrt(caps[1] / w[1]), res)
    ph = np.exp(1j * np.linspace(0, 2 * np.pi, res, endpoint=False))
    best = 0.0
    for a in r1:
        x1 = a
        x2 = r2[:, None] * ph[None, :]
        num = np.abs(np.conj(x1) * h[0] + np.conj(x2) * h[1]) ** 2
        den = abs(x1) ** 2 * hv[0] + np.abs(x2) ** 2 * hv[1] + sigw
        best = max(best, float(np.max(num / den)))
    return best


def grid_min_peak_n2(h, hv, w, sigw, need, res=2000):
    """Smallest max_i w_i |x_i|^2 with SNR >= need, over a direction grid, N = 2.

    For each direction the smallest feasible scale is solved exactly, so the
    grid runs over (magnitude split, relative phase) only.
    """
    psi = np.linspace(1e-6, np.pi / 2 - 1e-6, res)
    ph = np.exp(1j * np.linspace(0, 2 * np.pi, res, endpoint=False))
    x1 = np.cos(psi)[:, None] / np.sqrt(w[0]) + 0 * ph[None, :]
    x2 = np.sin(psi)[:, None] / np.sqrt(w[1]) * ph[None, :]
    num = np.abs(x1 * h[0] + np.conj(x2) * h[1]) ** 2
    quad = np.abs(x1) ** 2 * hv[0] + np.abs(x2) ** 2 * hv[1]
    margin = num - need * quad
    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = np.where(margin > 0, need * sigw / margin, np.inf)
    peak = c2 * np.maximum(w[0] * np.abs(x1) ** 2, w[1] * np.abs(x2) ** 2)
    return float(np.min(peak))


def lmmse_filtered_mse(prior, h, gains, meas_vars, sigw):
    """Posterior error of the best linear estimate c*y, built from the joint covariance.

    u = [theta, v_1..v_N, w] is zero-mean with diagonal covariance; y = b^T u and
    theta = e_1^T u.  The optimum is the Schur complement of var(y) in cov([theta, y]).
    """
    n = h.size
    cov_u = np.diag(np.concatenate([[prior], meas_vars, [sigw]])).astype(complex)
    gh = gains * h
    b = np.concatenate([[gh.sum()], gh, [1.0]])
    e1 = np.zeros(n + 2)
    e1[0] = 1.0
    t = np.vstack([e1, b])                    # [theta; y] = T u
    joint = t @ cov_u @ t.conj().T
    c = joint[0, 1] / joint[1, 1]
    err = e1 - c * b
    return float(np.real(err @ cov_u @ err.conj()))


def gil_pelaez_cdf(weights, c):
    """Pr(sum_i w_i E_i < c) for unit exponentials, by characteristic-function inversion.

    Needs ``c > 0``; the oscillatory part goes through quad's Fourier-weight rule.
    """
    w = np.asarray(weights, dtype=float)

    def phi(t):
        return np.prod(1.0 / (1.0 - 1j * w * t))

    def tail(fn, weight):
        head, _ = integrate.quad(lambda t: fn(t) * (np.cos(c * t) if weight == "cos" else np.sin(c * t)),
                                 0, 1.0, limit=200, epsabs=1e-13)
        rest, _ = integrate.quad(fn, 1.0, np.inf, weight=weight, wvar=c, limlst=200, epsabs=1e-11)
        return head + rest

    # Im(e^{-itc} phi) = cos(ct) Im(phi) - sin(ct) Re(phi)
    val = tail(lambda t: phi(t).imag / t, "cos") - tail(lambda t: phi(t).real / t, "sin")
    return 0.5 - val / np.pi
