"""How fast constant-permittivity plates approach the ideal-mirror limit.

For each permittivity the pipeline's |F| a^4 / (hbar c) and |E| a^3 / (hbar c)
are divided by the ideal-mirror values and compared with the exact ratio
from :func:`birefcasimir.oracle.constant_mirror_ratio`. The deficit falls
off like ln(eps) / sqrt(eps), so a 0.1 % approach needs eps above about 4e8.

    python3 scripts/mirror_convergence.py --eps 1e4 1e6 1e8 1e10 1e12
"""
import argparse
import math
import sys

from birefcasimir import Constant, QuadratureSpec, Scenario, UniaxialPlate, evaluate_point
from birefcasimir.oracle import constant_mirror_ratio, ideal_mirror_energy, ideal_mirror_pressure
from birefcasimir.quadrature import HBAR_C


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--eps", type=float, nargs="+", default=[1e2, 1e4, 1e6, 1e8, 1e10, 1e12])
    parser.add_argument("--a", type=float, default=1e-6, help="separation (m)")
    parser.add_argument("--rel-tol", type=float, default=1e-8)
    args = parser.parse_args(argv)

    spec = QuadratureSpec(rel_tol=args.rel_tol)
    print("eps,F_ratio,E_ratio,exact_ratio,F_vs_exact,deficit_times_sqrt_eps_over_ln_eps")
    for eps in args.eps:
        plate = UniaxialPlate.isotropic(Constant(eps))
        r = evaluate_point(Scenario(plate, plate, args.a), spec, ("F", "E"))
        f_ratio = -r.F * args.a**4 / HBAR_C / ideal_mirror_pressure()
        e_ratio = -r.E * args.a**3 / HBAR_C / ideal_mirror_energy()
        exact = constant_mirror_ratio(eps)
        law = (1 - exact) * math.sqrt(eps) / math.log(eps)
        print(f"{eps:.3g},{f_ratio:.9f},{e_ratio:.9f},{exact:.9f},{f_ratio / exact - 1:.1e},{law:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
