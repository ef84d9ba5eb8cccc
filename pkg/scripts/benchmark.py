"""Wall time and node count per point against tolerance and worker count.

    python3 scripts/benchmark.py --rel-tol 1e-4 1e-6 1e-8 --workers 1 4
"""
import argparse
import sys
import time

from birefcasimir import Constant, OscillatorSum, Oscillator, QuadratureSpec, Scenario, UniaxialPlate
from birefcasimir import evaluate_point


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rel-tol", type=float, nargs="+", default=[1e-4, 1e-6, 1e-8])
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 4])
    parser.add_argument("--a", type=float, default=1e-7)
    args = parser.parse_args(argv)

    # a birefringent dielectric with one UV and one IR resonance on the axis
    e_par = OscillatorSum((Oscillator(3.0e32, 1.2e16), Oscillator(2.0e28, 4.0e13, 1e12)))
    plate = UniaxialPlate(Constant(2.2), e_par)
    scenario = Scenario(plate, plate, args.a, 0.6)

    print("rel_tol,workers,seconds,nodes,angular_order,F_Pa,Q_J_per_m2_rad")
    for tol in args.rel_tol:
        for w in args.workers:
            start = time.perf_counter()
            r = evaluate_point(scenario, QuadratureSpec(rel_tol=tol, workers=w))
            dt = time.perf_counter() - start
            print(f"{tol:.0e},{w},{dt:.2f},{r.nodes},{r.angular_order},{r.F:.12e},{r.Q:.12e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
