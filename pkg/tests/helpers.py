import numpy as np

from flipperplan.terrain import ElevationMap


def make_map(heights, resolution=0.005, origin=(0.0, 0.0)):
    h = np.asarray(heights, dtype=float)
    return ElevationMap(h.shape[1], h.shape[0], resolution, origin, h)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def record(num: int, ok: bool, detail: str):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
