use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run_script(body: &str) {
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("rl", wrap_pymodule!(rlsmcg_py::rlsmcg_py)(py)).unwrap();
        let code = CString::new(body).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("script failed: {e}");
        }
    });
}

#[test]
fn named_problem_round_trip() {
    run_script(
        r#"
r = rl.minimize("ext_rosenbrock(10)")
assert r.converged and r.status == "CONVERGED", r
assert max(abs(v - 1.0) for v in r.x) < 1e-5
assert r.n_g >= r.n_iter
"#,
    );
}

#[test]
fn python_callables_and_overrides() {
    run_script(
        r#"
p = rl.Params(3, grad_tol=1e-10, max_iter=500)
r = rl.minimize(lambda x: sum((v - 2.0) ** 2 for v in x), x0=[0.0, 0.0, 0.0],
                grad=lambda x: [2.0 * (v - 2.0) for v in x], params=p, solver="lbfgs")
assert r.converged and all(abs(v - 2.0) < 1e-9 for v in r.x), r.x
try:
    rl.Params(3, bogus=1)
except ValueError:
    pass
else:
    raise AssertionError("unknown parameter accepted")
try:
    rl.minimize(lambda x: 0.0, x0=[1.0])
except ValueError:
    pass
else:
    raise AssertionError("missing gradient accepted")
"#,
    );
}

#[test]
fn wrong_gradient_length_raises() {
    run_script(
        r#"
try:
    rl.minimize(lambda x: x[0] ** 2, x0=[1.0, 2.0], grad=lambda x: [0.0])
except ValueError as e:
    assert "length" in str(e)
else:
    raise AssertionError("short gradient accepted")
"#,
    );
}
