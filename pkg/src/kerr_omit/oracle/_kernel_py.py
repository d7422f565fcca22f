"""Pure-Python twin of ``_kernel.advance``.

Same arguments, same arithmetic order, same return codes; roughly two
orders of magnitude slower.  Used when the compiled extension is absent
or ``KERR_OMIT_PURE_PYTHON`` is set.
"""

import math


def advance(y, pars, drive, rot, nsteps, h, j0, acc, traj, amax):
    nper = len(rot)
    dc, kappa, g, u, el, m, wm, gm, hbar = (float(v) for v in pars)
    wm2 = wm * wm
    hg = hbar * g
    drive = [complex(v) for v in drive]
    rot = [complex(v) for v in rot]
    do_acc = len(acc) >= 9
    do_traj = len(traj) > 0
    sums = [0j] * 9

    def rhs(a, x, p, drv):
        n = a.real * a.real + a.imag * a.imag
        return (a * complex(-kappa, dc - g * x + 2.0 * u * n) + el + drv,
                p / m,
                -gm * p - m * wm2 * x - hg * n)

    a = complex(y[0], y[1])
    x = float(y[2])
    p = float(y[3])
    j = j0 % nper
    amax2 = amax * amax
    half = 0.5 * h
    status = 0
    i = 0
    while True:
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
            sums[0] += wa * r2.conjugate()
            sums[1] += wa * r.conjugate()
            sums[2] += wa
            sums[3] += wa * r
            sums[4] += wa * r2
            sums[5] += wx
            sums[6] += wx * r
            sums[7] += wx * r2
            sums[8] += w * (a.real * a.real + a.imag * a.imag)
        if i == nsteps:
            break

        d0 = drive[2 * j]
        d1 = drive[2 * j + 1]
        d2 = drive[(2 * j + 2) % (2 * nper)]
        k1a, k1x, k1p = rhs(a, x, p, d0)
        k2a, k2x, k2p = rhs(a + half * k1a, x + half * k1x, p + half * k1p, d1)
        k3a, k3x, k3p = rhs(a + half * k2a, x + half * k2x, p + half * k2p, d1)
        k4a, k4x, k4p = rhs(a + h * k3a, x + h * k3x, p + h * k3p, d2)
        a = a + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        j += 1
        if j == nper:
            j = 0
        i += 1

        if not (math.isfinite(a.real) and math.isfinite(a.imag)
                and math.isfinite(x) and math.isfinite(p)):
            status = 1
            break
        if a.real * a.real + a.imag * a.imag > amax2:
            status = 2
            break

    if do_acc:
        for k in range(9):
            acc[k] += sums[k]
    y[0] = a.real
    y[1] = a.imag
    y[2] = x
    y[3] = p
    return status
