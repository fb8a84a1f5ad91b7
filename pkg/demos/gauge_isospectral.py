"""A gauge-transformed step-s problem keeps both spectra and the formal potential."""

from quasispec import (
    BumpFunction,
    GaugeSpec,
    PiecewiseCoefficient,
    formal_potential_pairing,
    gauge_transform,
    preset,
    same_expression,
    two_spectra_verify,
)


def main():
    c1 = preset("step_s")
    nu = PiecewiseCoefficient.bump(c1.interval, 1.6, 1.0, 0.8, order=3)
    link = GaugeSpec(0.0, nu)
    c2 = gauge_transform(c1, link)
    report = two_spectra_verify(c1, c2, link, window=(-5, 100))
    print("status:", "PASS" if report.passed else "FAIL")
    print(f"max eigenvalue deviation: {report.deviation:.3e}")
    print("same expression on (0, pi):", bool(same_expression(c1, c2)))
    chi = BumpFunction(1.5, 0.6)
    print(f"pairing with a bump: {formal_potential_pairing(c1, chi):.12f} vs {formal_potential_pairing(c2, chi):.12f}")


if __name__ == "__main__":
    main()
