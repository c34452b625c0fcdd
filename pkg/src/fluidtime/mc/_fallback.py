"""Pure-Python path loop, used when the compiled kernel is unavailable."""
from math import log1p

from numpy.random import Generator


def run_paths(bit_generator, reset, j0, j1, cum, last, qd, c, nu, L, a, phase0, fout, iout):
    draw = Generator(bit_generator).random
    cum = cum.tolist()
    last = last.tolist()
    qd = qd.tolist()
    c = c.tolist()
    up0 = c[phase0] > 0
    for j in range(j0, j1):
        reset(j)
        x = z = xmin = xmax = zmin = zmax = a
        ph = phase0
        stage, first_switch, ret_stage, ret_phase, events = 0, -1, -1, -1, 0
        while True:
            rate = qd[ph] + nu
            dt = -log1p(-draw()) / rate
            xn = x + c[ph] * dt
            zn = z + c[ph] * dt
            if zn < 0.0:
                zn = 0.0
            if ret_stage < 0:
                if (up0 and c[ph] < 0 and xn <= a) or (not up0 and c[ph] > 0 and xn >= a):
                    ret_stage, ret_phase = stage, ph
            xmin = min(xmin, xn)
            xmax = max(xmax, xn)
            zmin = min(zmin, zn)
            zmax = max(zmax, zn)
            x, z = xn, zn
            events += 1
            if draw() * rate < nu:
                stage += 1
                if stage == L:
                    break
            else:
                u = draw()
                row = cum[ph]
                nxt = last[ph]
                for k, ck in enumerate(row):
                    if u < ck:
                        nxt = k
                        break
                ph = nxt
                if first_switch < 0:
                    first_switch = stage
        fout[j - j0] = (x, z, xmin, xmax, zmin, zmax)
        iout[j - j0] = (ph, first_switch if first_switch >= 0 else L, ret_stage, ret_phase, events)
