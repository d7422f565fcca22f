# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 stepper for the rotating-frame equations of motion.

State layout: y = [Re a, Im a, x, p].  Parameter layout:
pars = [Delta_c, kappa, g, U, eps_l, m, omega_m, gamma_m, hbar].

The probe drive is tabulated on the half-step grid over one beat period
(``drive``, length 2N) and the demodulation phasor e^{i W t} on the full
step grid (``rot``, length N), so no trigonometry runs inside the loop.
"""

from libc.math cimport isfinite

cdef inline void _rhs(double complex a, double x, double p, double complex drv,
                      double dc, double kappa, double g, double u, double el,
                      double m, double wm2, double gm, double hg,
                      double complex* da, double* dx, double* dp) noexcept nogil:
    cdef double n = a.real * a.real + a.imag * a.imag
    da[0] = a * (-kappa + 1j * (dc - g * x + 2.0 * u * n)) + el + drv
    dx[0] = p / m
    dp[0] = -gm * p - m * wm2 * x - hg * n


def advance(double[::1] y, double[::1] pars, double complex[::1] drive,
            double complex[::1] rot, Py_ssize_t nsteps, double h, Py_ssize_t j0,
            double complex[::1] acc, double[:, ::1] traj, double amax):
    """Take ``nsteps`` RK4 steps of size ``h`` starting at grid index ``j0``.

    ``acc`` (length 9, or empty) receives trapezoid-weighted sums of
    a e^{ikWt} (k=-2..2), x e^{ikWt} (k=0..2) and |a|^2.  ``traj`` (shape
    (nsteps+1, 4), or empty) receives the sampled state.  Returns 0 on
    success, 1 on a non-finite state, 2 when |a| exceeds ``amax``.
    """
    cdef Py_ssize_t nper = rot.shape[0]
    cdef double dc = pars[0], kappa = pars[1], g = pars[2], u = pars[3]
    cdef double el = pars[4], m = pars[5], wm2 = pars[6] * pars[6]
    cdef double gm = pars[7], hg = pars[8] * pars[2]
    cdef double complex a = y[0] + 1j * y[1]
    cdef double x = y[2], p = y[3]
    cdef double complex k1a, k2a, k3a, k4a, d0, d1, d2, r, r2, wa
    cdef double k1x, k2x, k3x, k4x, k1p, k2p, k3p, k4p, w, wx, amax2 = amax * amax
    cdef bint do_acc = acc.shape[0] >= 9
    cdef bint do_traj = traj.shape[0] > 0
    cdef Py_ssize_t i, j = j0 % nper
    cdef int status = 0

    with nogil:
        for i in range(nsteps + 1):
            if do_traj:
                traj[i, 0] = a.real
                traj[i, 1] = a.imag
                traj[i, 2] = x
                traj[i, 3] = p
            if do_acc:
                w = 0.5 if (i == 0 or i == nsteps) else 1.0
                r = rot[j]
                r2 = r * r
                wa = w * a
                wx = w * x
                acc[0] += wa * r2.conjugate()
                acc[1] += wa * r.conjugate()
                acc[2] += wa
                acc[3] += wa * r
                acc[4] += wa * r2
                acc[5] += wx
                acc[6] += wx * r
                acc[7] += wx * r2
                acc[8] += w * (a.real * a.real + a.imag * a.imag)
            if i == nsteps:
                break

            d0 = drive[2 * j]
            d1 = drive[2 * j + 1]
            d2 = drive[(2 * j + 2) % (2 * nper)]
            _rhs(a, x, p, d0, dc, kappa, g, u, el, m, wm2, gm, hg, &k1a, &k1x, &k1p)
            _rhs(a + 0.5 * h * k1a, x + 0.5 * h * k1x, p + 0.5 * h * k1p, d1,
                 dc, kappa, g, u, el, m, wm2, gm, hg, &k2a, &k2x, &k2p)
            _rhs(a + 0.5 * h * k2a, x + 0.5 * h * k2x, p + 0.5 * h * k2p, d1,
                 dc, kappa, g, u, el, m, wm2, gm, hg, &k3a, &k3x, &k3p)
            _rhs(a + h * k3a, x + h * k3x, p + h * k3p, d2,
                 dc, kappa, g, u, el, m, wm2, gm, hg, &k4a, &k4x, &k4p)
            a = a + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            j += 1
            if j == nper:
                j = 0

            if not (isfinite(a.real) and isfinite(a.imag) and isfinite(x) and isfinite(p)):
                status = 1
                break
            if a.real * a.real + a.imag * a.imag > amax2:
                status = 2
                break

    y[0] = a.real
    y[1] = a.imag
    y[2] = x
    y[3] = p
    return status
