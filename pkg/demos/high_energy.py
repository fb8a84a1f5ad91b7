"""Deviation tables for the high-energy behaviour of phi, m and the scaled pair along a ray."""

import math

import numpy as np

from quasispec import PiecewiseCoefficient, b6_fixed_point_check, m_asymptotics, make_schroedinger, phi_asymptotics, preset


def show(report):
    print(f"  {report.quantity} on arg z = {report.ray:.4f}; factor per decade {report.per_decade():.3g}")
    for r, _, _, d in report.rows():
        print(f"    |z| = {r:10.1f}   deviation = {d:.3e}")


def main():
    problems = {
        "step_s": preset("step_s"),
        "s = sin": make_schroedinger((0, math.pi), s=PiecewiseCoefficient.fit(np.sin, [0, math.pi])),
    }
    for name, c in problems.items():
        print(name)
        show(phi_asymptotics(c, 2.0))
        show(m_asymptotics(c, 0.0))
        show(m_asymptotics(c, math.pi / 3, ray=math.pi / 2))
        for rep in b6_fixed_point_check(c, 2.0):
            show(rep)


if __name__ == "__main__":
    main()
