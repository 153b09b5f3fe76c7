from gazetrace.ingest import GazeSample


def stream(points, t0=0, dt=20, level=1):
    """GazeSamples from (x, y) or (x, y, t) tuples."""
    out = []
    for i, p in enumerate(points):
        t = p[2] if len(p) == 3 else t0 + i * dt
        out.append(GazeSample(int(t), float(p[0]), float(p[1]), level))
    return out
