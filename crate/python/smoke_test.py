"""Smoke test for the chemonet Python bindings.

Build and install the extension first, e.g.

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/chemonet-*.whl

then run `python python/smoke_test.py`.
"""

import math
import pathlib

import chemonet

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    star = chemonet.Model.from_file(str(CONFIGS / "star.toml"))
    check(star.arc_ids == [1, 2, 3], "star config has three arcs")
    check("nondegeneracy condition satisfied, acyclic" in star.validate(), "star validates")

    profile = star.stationary()
    check(profile.converged and max(profile.residuals.values()) <= 1e-8, "star stationary residuals")
    check(max(profile.contraction) < 0.9, "contraction ratio below 0.9")

    series, final = star.simulate(t_final=1.0, cadence=0.1, profile=profile)
    check(len(series["t"]) == 11 and math.isclose(series["t"][-1], 1.0), "sample grid")
    check(max(series["mass_residual"]) <= 1e-12, "mass identity")
    check(all(l <= r + 1e-9 for l, r in zip(series["bound_lhs"], series["bound_rhs"])), "sup bound")
    check(math.isclose(final.t, 1.0), "final state time")

    arc = chemonet.Model.fixture("single_arc", 100)
    p = arc.stationary(mu_s=0.1)
    out = arc.perturb(p, amplitude=1e-2, t_final=50.0, cadence=0.1, seed=0)
    check(out["final_distance"] <= 1e-3 * out["initial_distance"], "perturbation decays by 1e-3")

    path = chemonet.Model.fixture("path2", 400).set_boundary([0.01, -0.01], [0.05, 0.0])
    cmp = path.oracle_check(mu_s=0.1)
    check(cmp["passed"], "fixed point matches the shooting oracle")

    zero = chemonet.Model.fixture("star3", 10)
    series, state = zero.simulate(t_final=0.5, cadence=0.1)
    check(all(x == 0.0 for row in state.u + state.v + state.psi for x in row), "zero data stays zero")

    try:
        chemonet.Model("nodes = []\narcs = []\nbogus = 1\n")
    except chemonet.ChemonetError as e:
        check("bogus" in str(e), "schema errors surface as ChemonetError")
    else:
        raise SystemExit("FAIL: invalid config accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
