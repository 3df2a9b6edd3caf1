use pyo3::prelude::*;
use pyfluxsim::pyfluxsim;

const SCRIPT: &str = r#"
import math
import pyfluxsim as fs

c = fs.Config()
assert math.isclose(fs.ghz(1.0), 2 * math.pi)
band = fs.GravononBand.calibrated(200, 0.0, fs.ghz(0.5), 16.0)
assert len(band) == 200
assert math.isclose(1.0 / band.golden_rule_width(), 16.0, rel_tol=1e-12)

b = fs.Basis.single_qubit(3, 2)
assert len(b) == 9
assert len(b.labels()) == 9

h = fs.Hamiltonian.annealer(c, 0.0)
assert h.dim == 16 and h.hermiticity_residual() < 1e-12
h = fs.Hamiltonian.annealer(c, 1000.0, phonon=True)
assert h.dim == 32
probs = h.evolve(0, [0.0, 1.0, 2.0])
assert all(abs(sum(p) - 1.0) < 1e-9 for p in probs)
krylov = h.evolve(0, [0.0, 1.0, 2.0], dt=0.01)
assert max(abs(x - y) for p, q in zip(probs, krylov) for x, y in zip(p, q)) < 1e-8

short = c.with_overrides(["annealer.schedule.t_final=200", "annealer.spectrum_points=21"])
out = fs.run_anneal(short)
assert out["summary"]["dimension"] == 16
assert 0.0 <= out["summary"]["success_probability"] <= 1.0
assert len(out["spectrum"]) == 21

try:
    fs.Config(["annealer.schedule.t_final=-1"])
except ValueError as e:
    assert "t_final" in str(e)
else:
    raise AssertionError("negative t_final accepted")
"#;

#[test]
fn bindings_round_trip_through_python() {
    pyo3::append_to_inittab!(pyfluxsim);
    Python::with_gil(|py| py.run_bound(SCRIPT, None, None).map_err(|e| e.display(py)).unwrap());
}
