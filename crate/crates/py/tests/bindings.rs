use heisenflag_py::heisenflag_py;
use pyo3::prelude::*;

#[test]
fn module_runs_from_an_embedded_interpreter() {
    pyo3::append_to_inittab!(heisenflag_py);
    Python::attach(|py| {
        py.run(
            cr#"
import heisenflag_py as hf
spec = hf.GridSpec(1, 2.0, 4.0, 8, 16)
calc = hf.SpectralCalculus(spec)
f = hf.random_band_limited(spec, 3)
assert abs(hf.square_dis(f, calc).norm(2) - f.norm(2)) < 1e-10 * f.norm(2)
assert hf.tube_measure(1.0, 1.0) == 16.0
p = hf.HPoint([0.5], [-1.0], 2.0)
q = p * p.inv()
assert q.t == 0.0 and q.x == [0.0]
try:
    hf.HPoint([1.0], [1.0, 2.0], 0.0)
    raise AssertionError("mismatched point accepted")
except ValueError:
    pass
"#,
            None,
            None,
        )
        .map_err(|e| e.print(py))
        .expect("script failed");
    });
}
