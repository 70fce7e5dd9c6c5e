use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn check(code: &str) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(twisted::twisted)(py);
        let globals = PyDict::new(py);
        globals.set_item("twisted", m).unwrap();
        let src = CString::new(code).unwrap();
        if let Err(e) = py.run(&src, Some(&globals), None) {
            e.print(py);
            panic!("python check failed");
        }
    });
}

#[test]
fn homology_and_smith_form() {
    check(
        "c = twisted.Complex(0, [1, 1], {0: [[2]]})\n\
         h = c.homology_all()\n\
         assert h[1].free == 0 and h[1].torsion == [2]\n\
         assert twisted.smith_diagonal([[2, 4], [6, 8]]) == [2, 4]\n\
         assert twisted.smith_diagonal([[2**80]]) == [2**80]\n",
    );
}

#[test]
fn tr_hom_and_cone() {
    check(
        "z = twisted.TwistedComplex.single('Z', twisted.Complex(0, [1]))\n\
         r = twisted.TwistedComplex.single('R', twisted.Complex(-1, [1, 1], {-1: [[2]]}))\n\
         assert str(z.tr_hom(r)) == 'Z/2'\n\
         one = '{\"degree\": 0, \"blocks\": {\"0,0\": {\"degree\": 0, \"blocks\": {\"0\": [[1]]}}}}'\n\
         c = z.cone(z, one)\n\
         assert c.is_valid() and c.tr_hom(c).is_zero()\n\
         assert z.tensor(r).dual().is_valid()\n",
    );
}

#[test]
fn command_engine() {
    check(
        "code, out = twisted.run('d2-audit', trials=10, seed=7, format='text')\n\
         assert code == 0 and 'violations: 0' in out\n\
         assert len(twisted.COMMANDS) == 19\n\
         try:\n    twisted.run('homology', ['{'])\n    raise SystemExit('no error')\nexcept ValueError:\n    pass\n",
    );
}
