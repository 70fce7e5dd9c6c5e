//! Python bindings: complexes, twisted complexes, Tr-groups and the command engine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use twisted_core::cli::{self, Format, Options};
use twisted_core::document::{
    self, complex_from_value, complex_to_value, element_from_value, element_to_value, twisted_from_value,
    twisted_to_value, Document,
};
use twisted_core::monoidal::{dual_twisted, tate_object, tate_twist, tensor_twisted, unit};
use twisted_core::pretr::{PreTrHom, TwistedComplex};
use twisted_core::{tr, Error, FgAbGroup, IntMatrix, ZComplex};

fn err(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Shape(_) | Error::InvalidComplex(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_json(text: &str) -> PyResult<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("malformed JSON: {e}")))
}

fn payload(text: &str, kind: &str) -> PyResult<serde_json::Value> {
    let v = parse_json(text)?;
    if v.get("version").is_some() {
        let d = Document::from_value(&v).map_err(err)?;
        return d.expect_kind(kind).cloned().map_err(err);
    }
    Ok(v)
}

fn matrix(rows: Vec<Vec<BigInt>>) -> PyResult<IntMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|x| x.len() != c) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    IntMatrix::from_vec(r, c, rows.into_iter().flatten().collect()).map_err(err)
}

fn rows_of(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Finitely generated abelian group `Z^free + Z/t1 + ...`.
#[pyclass(name = "Group", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyGroup {
    inner: FgAbGroup,
}

#[pymethods]
impl PyGroup {
    #[getter]
    fn free(&self) -> usize {
        self.inner.free
    }

    #[getter]
    fn torsion(&self) -> Vec<BigInt> {
        self.inner.torsion.clone()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __repr__(&self) -> String {
        format!("Group({})", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

fn group(g: FgAbGroup) -> PyGroup {
    PyGroup { inner: g }
}

/// Bounded cochain complex of free abelian groups; `d[n]` maps degree `n` to `n+1`.
#[pyclass(name = "Complex", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyComplex {
    inner: ZComplex,
}

#[pymethods]
impl PyComplex {
    #[new]
    #[pyo3(signature = (lo, ranks, d=None))]
    fn new(lo: i64, ranks: Vec<usize>, d: Option<BTreeMap<i64, Vec<Vec<BigInt>>>>) -> PyResult<Self> {
        let rank_map: BTreeMap<i64, usize> = ranks.iter().enumerate().map(|(k, &r)| (lo + k as i64, r)).collect();
        let mut maps = BTreeMap::new();
        for (n, rows) in d.unwrap_or_default() {
            let mut m = matrix(rows)?;
            if m.rows() * m.cols() == 0 {
                m = IntMatrix::zeros(rank_map.get(&(n + 1)).copied().unwrap_or(0), rank_map.get(&n).copied().unwrap_or(0));
            }
            maps.insert(n, m);
        }
        Ok(PyComplex { inner: ZComplex::from_maps(&rank_map, &maps).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyComplex { inner: complex_from_value(&payload(text, "complex")?).map_err(err)? })
    }

    fn to_json(&self) -> String {
        Document::new("complex", complex_to_value(&self.inner)).to_pretty()
    }

    fn rank(&self, n: i64) -> usize {
        self.inner.rank(n)
    }

    fn d(&self, n: i64) -> Vec<Vec<BigInt>> {
        rows_of(&self.inner.d(n))
    }

    fn is_valid(&self) -> bool {
        self.inner.is_valid()
    }

    fn homology(&self, n: i64) -> PyResult<PyGroup> {
        Ok(group(self.inner.homology(n).map_err(err)?))
    }

    /// Nonzero homology groups by degree.
    fn homology_all(&self) -> PyResult<BTreeMap<i64, PyGroup>> {
        Ok(self.inner.homology_all().map_err(err)?.into_iter().filter(|(_, g)| !g.is_zero()).map(|(n, g)| (n, group(g))).collect())
    }

    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    fn shift(&self, k: i64) -> Self {
        PyComplex { inner: self.inner.shift(k) }
    }

    fn dual(&self) -> Self {
        PyComplex { inner: self.inner.dual() }
    }

    fn tensor(&self, other: &PyComplex) -> Self {
        PyComplex { inner: self.inner.tensor(&other.inner) }
    }

    /// The Hom-complex `Hom(self, other)`.
    fn hom(&self, other: &PyComplex) -> Self {
        PyComplex { inner: twisted_core::complex::hom_complex(&self.inner, &other.inner).complex }
    }

    fn __eq__(&self, other: &PyComplex) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.support().unwrap_or((0, -1));
        let ranks: Vec<String> = (lo..=hi).map(|n| self.inner.rank(n).to_string()).collect();
        format!("Complex(lo={lo}, ranks=[{}])", ranks.join(", "))
    }
}

/// One-sided twisted complex `(A^i, q_{i,j})`.
#[pyclass(name = "TwistedComplex", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyTwisted {
    inner: TwistedComplex,
}

fn tw(t: TwistedComplex) -> PyTwisted {
    PyTwisted { inner: t }
}

#[pymethods]
impl PyTwisted {
    /// A single generator `name` with complex `c` placed at `index`.
    #[staticmethod]
    #[pyo3(signature = (name, c, index=0))]
    fn single(name: &str, c: &PyComplex, index: i64) -> Self {
        tw(twisted_core::random::as_twisted(name, c.inner.clone(), index))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(tw(twisted_from_value(&payload(text, "twisted")?).map_err(err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        Ok(Document::new("twisted", twisted_to_value(&self.inner).map_err(err)?).to_pretty())
    }

    #[staticmethod]
    fn unit() -> Self {
        tw(unit())
    }

    #[staticmethod]
    fn tate(n: i64) -> Self {
        tw(tate_object(n))
    }

    fn indices(&self) -> Vec<i64> {
        self.inner.indices()
    }

    fn term(&self, i: i64) -> PyComplex {
        PyComplex { inner: (*self.inner.term_complex(i)).clone() }
    }

    /// Maurer-Cartan check.
    fn is_valid(&self) -> bool {
        self.inner.is_valid()
    }

    fn shift(&self, k: i64) -> Self {
        tw(tr::shift_twisted(&self.inner, k))
    }

    fn tensor(&self, other: &PyTwisted) -> Self {
        tw(tensor_twisted(&self.inner, &other.inner))
    }

    fn dual(&self) -> Self {
        tw(dual_twisted(&self.inner))
    }

    fn twist(&self, n: i64) -> Self {
        tw(tate_twist(&self.inner, n))
    }

    fn direct_sum(&self, other: &PyTwisted) -> Self {
        tw(self.inner.direct_sum(&other.inner))
    }

    /// The complex `(Hom_PreTr(self, other), D)`.
    fn hom(&self, other: &PyTwisted) -> PyComplex {
        PyComplex { inner: PreTrHom::new(&self.inner, &other.inner).complex }
    }

    /// `Hom_Tr(self, other)`.
    fn tr_hom(&self, other: &PyTwisted) -> PyResult<PyGroup> {
        Ok(group(tr::tr_hom(&self.inner, &other.inner).map_err(err)?.group))
    }

    /// Cone of a degree-0 cocycle given as an element JSON object `{"degree", "blocks"}`.
    fn cone(&self, other: &PyTwisted, element: &str) -> PyResult<PyTwisted> {
        let u = element_from_value(&parse_json(element)?, &self.inner, &other.inner).map_err(err)?;
        Ok(tw(tr::cone_twisted(&self.inner, &other.inner, &u).map_err(err)?.cone))
    }

    /// A null-homotopy of the element, as JSON, or `None`.
    fn null_homotopy(&self, other: &PyTwisted, element: &str) -> PyResult<Option<String>> {
        let hom = PreTrHom::new(&self.inner, &other.inner);
        let u = element_from_value(&parse_json(element)?, &self.inner, &other.inner).map_err(err)?;
        Ok(tr::is_null_homotopic(&hom, &u).map_err(err)?.map(|h| element_to_value(&h).to_string()))
    }

    fn __eq__(&self, other: &PyTwisted) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("TwistedComplex(indices={:?})", self.inner.indices())
    }
}

/// Smith normal form diagonal of an integer matrix.
#[pyfunction]
fn smith_diagonal(rows: Vec<Vec<BigInt>>) -> PyResult<Vec<BigInt>> {
    Ok(twisted_core::zmodule::snf(&matrix(rows)?).diagonal())
}

/// Runs a command of the command-line engine on JSON documents; returns `(exit_code, output)`.
#[pyfunction]
#[pyo3(signature = (command, documents=Vec::new(), trials=None, seed=0, choice=None, format="json", by=1))]
fn run(
    command: &str,
    documents: Vec<String>,
    trials: Option<usize>,
    seed: u64,
    choice: Option<String>,
    format: &str,
    by: i64,
) -> PyResult<(i32, String)> {
    let format = match format {
        "json" => Format::Json,
        "text" => Format::Text,
        other => return Err(PyValueError::new_err(format!("format must be json or text, got {other:?}"))),
    };
    let opts = Options { trials, seed, choice, format, by };
    let docs = cli::load(&documents).map_err(err)?;
    let out = cli::run(command, &docs, &opts);
    Ok((out.code, out.output))
}

#[pymodule]
pub fn twisted(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PyComplex>()?;
    m.add_class::<PyTwisted>()?;
    m.add_function(wrap_pyfunction!(smith_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("COMMANDS", cli::COMMANDS.to_vec())?;
    m.add("FORMAT_VERSION", document::VERSION)?;
    Ok(())
}
