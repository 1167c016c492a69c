"""Record solver regression values (run from the repository root).

These are not oracles: they freeze the current solver output so that later
changes which move it are noticed.
"""
import json
from pathlib import Path

import numpy as np

from adslab import boundary as Bd
from adslab import solver
from adslab.geometry import core_mask
from adslab.mesh import disc_mesh


def sine_case(K=16):
    b = Bd.AdmissibleBoundary.from_fourier(Bd.Fourier((0.0,), (0.0, 0.2)), N=128)
    c = solver.solve_cmc(b, 1.0, disc_mesh(K, 3.0))
    g = c.geometry
    core = core_mask(c.mesh, 1.5) & g.valid
    i0 = int(np.argmin(c.mesh.rho))
    return {"K": K, "H": 1.0, "amplitude": 0.2, "R_disc": 3.0,
            "max_H_error": c.max_H_error, "f_centre": float(c.f[i0]),
            "f_max": float(c.f.max()), "f_min": float(c.f.min()),
            "B0_core_max": float(np.max(g.B0_norm[core]))}


if __name__ == "__main__":
    out = Path(__file__).with_name("regression.json")
    out.write_text(json.dumps({"sine_H1": sine_case()}, indent=2, sort_keys=True) + "\n")
    print(out.read_text())
