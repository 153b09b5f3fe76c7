"""Pure-Python versions of the per-sample kernels.

These mirror ``_ckernels.pyx`` operation for operation so both backends
produce bit-identical floats.
"""
import math

INF = math.inf


def velocities(xs, ys, ts):
    n = len(xs)
    out = [0.0] * max(n - 1, 0)
    for i in range(1, n):
        dt = ts[i] - ts[i - 1]
        if dt < 0:
            raise ValueError(i)
        dx = xs[i] - xs[i - 1]
        dy = ys[i] - ys[i - 1]
        if dt == 0:
            out[i - 1] = INF
        else:
            out[i - 1] = math.sqrt(dx * dx + dy * dy) / (dt / 1000.0)
    return out


def ivt_labels(vel, v_basic):
    return [0 if v <= v_basic else 1 for v in vel]


def cluster_starts(xs, ys, vel, v_advanced, tau):
    """Start index of every greedy cluster, the first always being 0."""
    n = len(xs)
    if n == 0:
        return []
    starts = [0]
    sx = xs[0]
    sy = ys[0]
    count = 1
    tau2 = tau * tau
    for i in range(1, n):
        cx = sx / count
        cy = sy / count
        dx = xs[i] - cx
        dy = ys[i] - cy
        if vel[i - 1] < v_advanced and dx * dx + dy * dy <= tau2:
            sx += xs[i]
            sy += ys[i]
            count += 1
        else:
            starts.append(i)
            sx = xs[i]
            sy = ys[i]
            count = 1
    return starts
