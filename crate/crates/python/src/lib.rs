use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

use spencer_core::bundle::{cartan_residual, transversality_report};
use spencer_core::complex::{build_complex, cohomology, kunneth_diagnostic, mirror_invariance_check, torus_model, ComplexOptions, Grading, RankMethod};
use spencer_core::json::{AlgebraJson, GridBundleJson};
use spencer_core::lie::{builtin_algebra, builtin_automorphism, weyl_mirrors as core_weyl, AlgebraVector, AutomorphismKind, DualVector, LieAlgebra};
use spencer_core::mirror::{self, DualTransport, MirrorTransform};
use spencer_core::scalar::{self, Scalar};
use spencer_core::spencer::{nilpotency_report, signed_leibniz_welldefinedness, LeibnizConvention, SpencerOperator};
use spencer_core::symtensor::Pairing;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Accepts ints, strings like "1/2", or `fractions.Fraction`.
fn scalars(items: &[Bound<'_, PyAny>]) -> PyResult<Vec<Scalar>> {
    items.iter().map(|x| scalar::parse(&x.str()?.to_string()).map_err(err)).collect()
}

fn strings(xs: &[Scalar]) -> Vec<String> {
    xs.iter().map(scalar::format).collect()
}

fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn pairing(name: &str, alg: &LieAlgebra) -> PyResult<Pairing> {
    match name {
        "basis" => Ok(Pairing::Basis),
        "killing" => Pairing::killing(alg).map_err(err),
        other => Err(err(format!("unknown pairing `{other}`"))),
    }
}

fn transform(name: &str, alg: &LieAlgebra) -> PyResult<MirrorTransform> {
    if name == "sign" {
        return Ok(MirrorTransform::Sign);
    }
    let kind = AutomorphismKind::parse(name).map_err(err)?;
    Ok(MirrorTransform::Automorphism(builtin_automorphism(alg, &kind).map_err(err)?))
}

fn dual(alg: &LieAlgebra, lam: &[Bound<'_, PyAny>]) -> PyResult<DualVector> {
    let v = scalars(lam)?;
    if v.len() != alg.dim() {
        return Err(err(format!("λ has {} coefficients, expected {}", v.len(), alg.dim())));
    }
    Ok(DualVector(v))
}

#[pyclass(name = "LieAlgebra", module = "spencer", frozen)]
struct PyLieAlgebra {
    inner: LieAlgebra,
}

#[pymethods]
impl PyLieAlgebra {
    /// so3, sl2, sl3, sl(n), su(n), abelian(n).
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Self { inner: builtin_algebra(name).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let parsed: AlgebraJson = serde_json::from_str(text).map_err(err)?;
        Ok(Self { inner: parsed.to_algebra().map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&AlgebraJson::from_algebra(&self.inner)).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn jacobi_residual(&self) -> String {
        scalar::format(&self.inner.jacobi_residual())
    }

    fn bracket(&self, x: Vec<Bound<'_, PyAny>>, y: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<String>> {
        let r = self.inner.bracket(&AlgebraVector(scalars(&x)?), &AlgebraVector(scalars(&y)?)).map_err(err)?;
        Ok(strings(&r.0))
    }

    fn coadjoint(&self, z: Vec<Bound<'_, PyAny>>, xi: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<String>> {
        let r = self.inner.coadjoint(&AlgebraVector(scalars(&z)?), &DualVector(scalars(&xi)?)).map_err(err)?;
        Ok(strings(&r.0))
    }

    fn killing_form(&self) -> Vec<Vec<String>> {
        self.inner.killing_form().to_rows().iter().map(|r| strings(r)).collect()
    }

    fn __repr__(&self) -> String {
        format!("LieAlgebra({}, dim={})", self.inner.name(), self.inner.dim())
    }
}

#[pyclass(name = "SpencerOperator", module = "spencer", frozen)]
struct PySpencerOperator {
    inner: SpencerOperator,
}

#[pymethods]
impl PySpencerOperator {
    #[new]
    #[pyo3(signature = (algebra, lam, convention = "unsigned", pairing = "basis"))]
    fn new(algebra: &PyLieAlgebra, lam: Vec<Bound<'_, PyAny>>, convention: &str, pairing: &str) -> PyResult<Self> {
        let alg = &algebra.inner;
        let conv = LeibnizConvention::parse(convention).map_err(err)?;
        let op = SpencerOperator::with_pairing(alg, &dual(alg, &lam)?, conv, self::pairing(pairing, alg)?).map_err(err)?;
        Ok(Self { inner: op })
    }

    /// `(rows, cols, [(row, col, "p/q"), ...])` for `S^k → S^{k+1}`.
    fn matrix(&self, k: usize) -> PyResult<(usize, usize, Vec<(usize, usize, String)>)> {
        let m = self.inner.matrix(k).map_err(err)?;
        let entries = m.entries().map(|(r, c, v)| (r, c, scalar::format(v))).collect();
        Ok((m.rows(), m.cols(), entries))
    }

    fn generator(&self, i: usize) -> PyResult<String> {
        if i >= self.inner.dim() {
            return Err(err(format!("index {i} out of range")));
        }
        Ok(self.inner.generator(i).to_string())
    }

    fn nilpotency_report(&self, py: Python<'_>, max_degree: usize) -> PyResult<Py<PyAny>> {
        let r = nilpotency_report(&self.inner, max_degree).map_err(err)?;
        let residuals: Vec<(usize, String)> = r.residuals.iter().map(|(k, v)| (*k, scalar::format(v))).collect();
        to_py(py, &serde_json::json!({"convention": r.convention, "residuals": residuals, "holds": r.holds, "witness": r.witness}))
    }

    /// Monomials where the signed Leibniz rule depends on factor order.
    fn welldefinedness_witnesses(&self, k: usize) -> PyResult<Vec<String>> {
        Ok(signed_leibniz_welldefinedness(&self.inner, k).map_err(err)?.iter().map(|w| w.multiset.to_string()).collect())
    }
}

#[pyfunction]
fn mirror_lambda(algebra: &PyLieAlgebra, transform: &str, lam: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<String>> {
    let t = self::transform(transform, &algebra.inner)?;
    Ok(strings(&mirror::mirror_lambda(&t, &dual(&algebra.inner, &lam)?).map_err(err)?.0))
}

#[pyfunction]
#[pyo3(signature = (algebra, automorphism, lam, k, convention = "unsigned", transport = "inverse", pairing = "basis"))]
#[allow(clippy::too_many_arguments)]
fn intertwining_check(
    py: Python<'_>,
    algebra: &PyLieAlgebra,
    automorphism: &str,
    lam: Vec<Bound<'_, PyAny>>,
    k: usize,
    convention: &str,
    transport: &str,
    pairing: &str,
) -> PyResult<Py<PyAny>> {
    let alg = &algebra.inner;
    let MirrorTransform::Automorphism(a) = transform(automorphism, alg)? else {
        return Err(err("intertwining needs an automorphism"));
    };
    let transport = match transport {
        "inverse" => DualTransport::Inverse,
        "paper-literal" => DualTransport::PaperLiteral,
        other => return Err(err(format!("unknown transport `{other}`"))),
    };
    let conv = LeibnizConvention::parse(convention).map_err(err)?;
    let r = mirror::intertwining_check(alg, &a, &dual(alg, &lam)?, k, conv, transport, &self::pairing(pairing, alg)?).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn weyl_mirrors(n: usize) -> PyResult<Vec<String>> {
    Ok(core_weyl(n).map_err(err)?.iter().map(|w| w.label().to_string()).collect())
}

fn complex_for(
    algebra: &PyLieAlgebra,
    lam: &[Bound<'_, PyAny>],
    torus: usize,
    k: usize,
    convention: &str,
    grading: &str,
    pairing: &str,
) -> PyResult<spencer_core::complex::SpencerComplex> {
    let alg = &algebra.inner;
    let opts = ComplexOptions {
        max_degree: k,
        convention: LeibnizConvention::parse(convention).map_err(err)?,
        grading: Grading::parse(grading).map_err(err)?,
        pairing: self::pairing(pairing, alg)?,
    };
    build_complex(&torus_model(torus).map_err(err)?, alg, &dual(alg, lam)?, &opts).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (algebra, lam, torus = 2, k = 4, convention = "unsigned", grading = "total", pairing = "basis", float_ranks = false))]
#[allow(clippy::too_many_arguments)]
fn spencer_cohomology(
    py: Python<'_>,
    algebra: &PyLieAlgebra,
    lam: Vec<Bound<'_, PyAny>>,
    torus: usize,
    k: usize,
    convention: &str,
    grading: &str,
    pairing: &str,
    float_ranks: bool,
) -> PyResult<Py<PyAny>> {
    let c = complex_for(algebra, &lam, torus, k, convention, grading, pairing)?;
    let method = if float_ranks { RankMethod::Float { tol: 1e-9 } } else { RankMethod::Exact };
    to_py(py, &cohomology(&c, method).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (algebra, lam, transform, torus = 2, k = 2, convention = "unsigned", pairing = "basis"))]
#[allow(clippy::too_many_arguments)]
fn mirror_invariance(
    py: Python<'_>,
    algebra: &PyLieAlgebra,
    lam: Vec<Bound<'_, PyAny>>,
    transform: &str,
    torus: usize,
    k: usize,
    convention: &str,
    pairing: &str,
) -> PyResult<Py<PyAny>> {
    let c = complex_for(algebra, &lam, torus, k, convention, "total", pairing)?;
    let t = self::transform(transform, &algebra.inner)?;
    to_py(py, &mirror_invariance_check(&c, &t, None, RankMethod::Exact).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (algebra, lam, torus = 2, k = 2, convention = "unsigned", pairing = "basis"))]
fn kunneth(py: Python<'_>, algebra: &PyLieAlgebra, lam: Vec<Bound<'_, PyAny>>, torus: usize, k: usize, convention: &str, pairing: &str) -> PyResult<Py<PyAny>> {
    let c = complex_for(algebra, &lam, torus, k, convention, "total", pairing)?;
    to_py(py, &kunneth_diagnostic(&c, RankMethod::Exact).map_err(err)?)
}

/// Transversality and Cartan-residual summary for a GridBundle JSON document.
#[pyfunction]
fn bundle_report(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let b = serde_json::from_str::<GridBundleJson>(text).map_err(err)?.to_bundle().map_err(err)?;
    let t = transversality_report(&b).map_err(err)?;
    let cartan = cartan_residual(&b).ok().map(|r| scalar::format(&r.max));
    let mut v = serde_json::to_value(&t).map_err(err)?;
    if let Value::Object(m) = &mut v {
        m.insert("cartan_max".into(), serde_json::json!(cartan));
    }
    to_py(py, &v)
}

#[pymodule]
fn spencer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLieAlgebra>()?;
    m.add_class::<PySpencerOperator>()?;
    m.add_function(wrap_pyfunction!(mirror_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(intertwining_check, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_mirrors, m)?)?;
    m.add_function(wrap_pyfunction!(spencer_cohomology, m)?)?;
    m.add_function(wrap_pyfunction!(mirror_invariance, m)?)?;
    m.add_function(wrap_pyfunction!(kunneth, m)?)?;
    m.add_function(wrap_pyfunction!(bundle_report, m)?)?;
    Ok(())
}
