use mmia_py::mmia_module;
use pyo3::prelude::*;

#[test]
fn module_round_trip_through_the_interpreter() {
    pyo3::append_to_inittab!(mmia_module);
    Python::initialize();
    Python::attach(|py| {
        py.run(
            cr#"
import math
import mmia
assert abs(mmia.pathloss(200.0) - 109.72163) < 1e-4
cfg = mmia.Config()
cfg.trials = 5
assert cfg.trials == 5 and cfg.n_tx == 8
exh, coord = mmia.single_trial(cfg, 1)
assert exh["slots_used"] >= 1 and coord["slots_used"] >= 1
d = mmia.solve_distances([2 * math.pi / 3] * 3, [200.0] * 3)
assert all(abs(x - 200.0 / math.sqrt(3.0)) < 1e-6 for x in d)
try:
    mmia.run_experiment("nope", cfg)
    raise AssertionError("accepted unknown experiment")
except ValueError:
    pass
"#,
            None,
            None,
        )
        .map_err(|e| {
            e.print(py);
            e
        })
        .unwrap();
    });
}
