#!/usr/bin/env python3
"""Regenerate the bundled spectrum and material CSV fixtures.

The outputs are committed; this script only documents how they were made.

Materials: ICRU-44 adipose, soft tissue and cortical bone mass attenuation
coefficients (NIST X-ray attenuation tables), times nominal density,
resampled log-log onto a 5 keV grid and rescaled so the 70 keV values are
exactly 0.1782, 0.2033 and 0.4948 cm^-1. Air is modelled as zero.

Spectrum: Kramers' thick-target law (photon count ~ (kVp - E) / E) for a
130 kVp tube, hardened by 3.4 mm of aluminium, integrated over eleven
10 keV bins spanning 20-130 keV and normalized to unit sum.
"""
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))

ANCHOR_E = np.array([10, 15, 20, 30, 40, 50, 60, 80, 100, 150.0])
MATERIALS = {
    # name: (density g/cm^3, mu/rho cm^2/g at ANCHOR_E, LAC at 70 keV)
    "fat": (0.95, [3.268, 1.083, 0.5712, 0.3060, 0.2392, 0.2128, 0.1995, 0.1849, 0.1758, 0.1595], 0.1782),
    "soft_tissue": (1.06, [5.379, 1.718, 0.8370, 0.3804, 0.2678, 0.2262, 0.2065, 0.1864, 0.1742, 0.1566], 0.2033),
    "bone": (1.92, [28.51, 9.032, 4.001, 1.331, 0.6655, 0.4242, 0.3148, 0.2229, 0.1855, 0.1480], 0.4948),
}
ALUMINIUM = [26.23, 7.955, 3.441, 1.128, 0.5685, 0.3681, 0.2778, 0.2018, 0.1704, 0.1378]
AL_DENSITY = 2.699
AL_MM = 3.4
KVP = 130.0
GRID = np.arange(10.0, 150.0 + 1e-9, 5.0)


def loglog(e, xs, ys):
    return np.exp(np.interp(np.log(e), np.log(xs), np.log(ys)))


def write_material(name, lac):
    path = os.path.join(HERE, "materials", f"{name}.csv")
    with open(path, "w") as f:
        f.write(f"# {name}: linear attenuation coefficient, 70 keV anchored\n")
        f.write("energy_kev,lac_per_cm\n")
        for e, v in zip(GRID, lac):
            f.write(f"{e:g},{v:.17g}\n")


def materials():
    write_material("air", np.zeros_like(GRID))
    for name, (rho, mu_rho, anchor) in MATERIALS.items():
        lac = rho * np.array(mu_rho)
        curve = loglog(GRID, ANCHOR_E, lac)
        curve *= anchor / loglog(np.array([70.0]), ANCHOR_E, lac)[0]
        curve[GRID == 70.0] = anchor
        write_material(name, curve)


def spectrum():
    edges = np.linspace(20.0, 130.0, 12)
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        e = np.linspace(lo, hi, 2001)
        flux = (KVP - e) / e * np.exp(-AL_DENSITY * loglog(e, ANCHOR_E, ALUMINIUM) * AL_MM / 10.0)
        weights.append(np.trapezoid(flux, e))
    weights = np.array(weights)
    weights /= weights.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    with open(os.path.join(HERE, "spectrum_130kvp.csv"), "w") as f:
        f.write("# 130 kVp tungsten (Kramers), 3.4 mm Al, 11 bins, bin-integrated photon fractions\n")
        f.write("energy_kev,weight\n")
        for e, w in zip(centers, weights):
            f.write(f"{e:g},{w:.17g}\n")


if __name__ == "__main__":
    materials()
    spectrum()
