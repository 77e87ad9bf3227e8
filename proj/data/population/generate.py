"""Writes the synthetic population data used by the `population` preset.

Row i of every raster is cell index i along x (the first spatial axis), column j
is index j along y. Cell centers are ((i + 0.5) / 64, (j + 0.5) / 64).
"""

import csv
import pathlib

import numpy as np

N = 64
HERE = pathlib.Path(__file__).resolve().parent

YEARS = np.arange(1876, 1937, 5)
# Totals in millions: steady growth, a dip around 1916-1921, recovery afterwards.
TOTALS = np.array([3.60, 3.75, 3.92, 4.08, 4.24, 4.42, 4.60, 4.74, 4.66, 4.70, 4.95, 5.20, 5.40])

CITIES_START = [((0.30, 0.35), 0.05, 1.0), ((0.62, 0.28), 0.06, 0.7), ((0.45, 0.70), 0.07, 0.8)]
CITIES_END = [((0.32, 0.38), 0.06, 1.6), ((0.62, 0.28), 0.05, 0.5), ((0.45, 0.70), 0.06, 0.9),
              ((0.70, 0.62), 0.05, 0.8)]


def centers():
    c = (np.arange(N) + 0.5) / N
    return np.meshgrid(c, c, indexing="ij")


def region_mask():
    x, y = centers()
    angle = np.arctan2(y - 0.5, x - 0.5)
    radius = 0.36 + 0.05 * np.sin(3 * angle) + 0.03 * np.cos(5 * angle + 0.7)
    inside = np.hypot(x - 0.5, y - 0.5) <= radius
    lake = np.hypot(x - 0.55, y - 0.50) < 0.06
    return (inside & ~lake).astype(float)


def density(cities, mask, total):
    x, y = centers()
    rho = 0.15 * np.ones_like(x)
    for (cx, cy), sigma, weight in cities:
        rho += weight * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma**2))
    rho *= mask
    return rho * total / (rho.sum() / N**2)


def write_grid(name, values):
    np.savetxt(HERE / name, values, delimiter=",", fmt="%.10g")


def main():
    mask = region_mask()
    write_grid("region_mask.csv", mask)
    write_grid("density_start.csv", density(CITIES_START, mask, TOTALS[0]))
    write_grid("density_end.csv", density(CITIES_END, mask, TOTALS[-1]))
    with open(HERE / "total_population.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["year", "total"])
        for year, total in zip(YEARS, TOTALS):
            w.writerow([int(year), f"{total:.2f}"])


if __name__ == "__main__":
    main()
