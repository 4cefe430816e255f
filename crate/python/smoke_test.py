"""Smoke test for the rlsmcg_py extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math
import os
import tempfile

import rlsmcg_py as rl


def rosenbrock(x):
    return sum(100.0 * (x[i + 1] - x[i] ** 2) ** 2 + (1.0 - x[i]) ** 2 for i in range(len(x) - 1))


def rosenbrock_grad(x):
    n = len(x)
    g = [0.0] * n
    for i in range(n - 1):
        g[i] += -400.0 * x[i] * (x[i + 1] - x[i] ** 2) - 2.0 * (1.0 - x[i])
        g[i + 1] += 200.0 * (x[i + 1] - x[i] ** 2)
    return g


def main():
    names = rl.problem_names()
    assert "quad_hilbert(8)" in names and len(names) == 64, names

    p = rl.problem("ext_rosenbrock(10)")
    assert p.dim == 10 and p.x0[:2] == [-1.2, 1.0]
    assert abs(p.value([1.0] * 10)) < 1e-14

    res = rl.minimize("quad_hilbert(8)", trace=True)
    assert res.converged and res.gnorm_inf <= 1e-6, res
    assert len(res.trace) == res.n_iter and res.trace[0][1] == "NEG_GRAD"

    params = rl.Params(4, grad_tol=1e-9, enable_rqn=False)
    assert params.grad_tol == 1e-9 and not params.enable_rqn
    assert abs(params.descent_constant() - 2.78e-5) < 1e-7 and params.l_reset() == 20
    assert rl.Params(100).l_reset() == 121

    res = rl.minimize(rosenbrock, x0=[-1.2, 1.0, -1.2, 1.0], grad=rosenbrock_grad, params=params)
    assert res.converged, res
    assert all(abs(v - 1.0) < 1e-6 for v in res.x), res.x

    for solver in ("hs", "lbfgs(5)", "bbsd"):
        r = rl.minimize(p, solver=solver)
        assert r.converged, (solver, r)

    def broken(x):
        raise RuntimeError("boom")

    try:
        rl.minimize(broken, x0=[1.0], grad=lambda x: [0.0])
    except RuntimeError as e:
        assert "boom" in str(e)
    else:
        raise AssertionError("callback exception was swallowed")

    try:
        rl.problem("nosuch(3)")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown problem accepted")

    ok, worst = rl.verify_gradients("ext_rosenbrock(10)", 10)
    assert ok and worst <= 1e-6

    rows = rl.run_bench("solvers = rlsmcg, bbsd\nproblems = quad_diag(10), tridia(10)\n")
    assert len(rows) == 4 and rows[0]["solver"] == "bbsd"
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "r.csv")
        cols = list(rows[0].keys())
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(str(r[c]) for c in cols) + "\n")
        solvers, taus, curves = rl.performance_profile(path, "n_g")
        assert solvers == ["bbsd", "rlsmcg"] and taus[0] == 1.0
        assert all(math.isclose(c[-1], 1.0) for c in curves)

    print("smoke test passed")


if __name__ == "__main__":
    main()
