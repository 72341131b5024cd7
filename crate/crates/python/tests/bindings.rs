use pyo3::prelude::*;
use qwalk::qwalk;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(qwalk);
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(c"
import json, qwalk
p = qwalk.SystemParams([1.0], drive=12.0, detuning=1e-4, qubit_decay=4.0, initial_photon=5)
rec = qwalk.run_to_decay(p)
assert abs(rec.average_photon(0) - 5.0) < 0.2, rec.average_photon(0)
assert rec.stop in ('decayed', 'plateau', 'maxtime')
assert qwalk.analytic_displacement(p) == [0.0]
spec = json.loads(qwalk.preset('fig8'))
assert spec['base']['couplings'] == [2.0, 1.0]
try:
    qwalk.preset('fig1')
    raise SystemExit('unknown preset accepted')
except ValueError:
    pass
try:
    qwalk.winding_displacement(1.0, [1.0])
    raise SystemExit('critical point accepted')
except RuntimeError:
    pass
");
}
