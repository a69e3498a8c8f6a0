//! Python bindings: grids, fields, group points, the spectral calculus and the
//! main operators. Fields cross the boundary as flat lists in `(z, t)` order
//! with `t` fastest.

use heisenflag::atoms::{atomic_decompose as decompose, DecomposeOptions};
use heisenflag::experiments::{self, equivalence_row as eq_row, EquivalenceScales, FUNCTIONALS};
use heisenflag::fields::lp_norm;
use heisenflag::group::distance as hdist;
use heisenflag::operators::{self, FilterPair, ScaleGrid};
use heisenflag::tiling::{self, TileHeight};
use heisenflag::{kernels, spectral, Error, C64};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Domain(_) | Error::InvalidSpec(_) | Error::SpecMismatch(_) | Error::Config(_) | Error::NotContained => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_metric(name: &str) -> PyResult<heisenflag::Metric> {
    match name {
        "gauge" => Ok(heisenflag::Metric::Gauge),
        "koranyi" => Ok(heisenflag::Metric::Koranyi),
        _ => Err(PyValueError::new_err(format!("unknown metric '{name}'"))),
    }
}

#[pyclass(name = "GridSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridSpec(heisenflag::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (nu, z_half, t_half, n_z, n_t, t_periodic = true))]
    fn new(nu: usize, z_half: f64, t_half: f64, n_z: usize, n_t: usize, t_periodic: bool) -> PyResult<Self> {
        heisenflag::GridSpec::new(nu, z_half, t_half, n_z, n_t, t_periodic).map(Self).map_err(err)
    }

    #[getter]
    fn dz(&self) -> f64 {
        self.0.dz()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn dv(&self) -> f64 {
        self.0.dv()
    }

    /// `(number of z nodes, n_t)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_zpts(), self.0.n_t)
    }

    fn lattice_ratio(&self) -> Option<i64> {
        self.0.lattice_ratio()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        let s = &self.0;
        format!("GridSpec(nu={}, z_half={}, t_half={}, n_z={}, n_t={}, t_periodic={})", s.nu, s.z_half, s.t_half, s.n_z, s.n_t, s.t_periodic)
    }
}

#[pyclass(name = "GridField", skip_from_py_object)]
#[derive(Clone)]
struct PyGridField(heisenflag::GridField);

#[pymethods]
impl PyGridField {
    #[staticmethod]
    fn zeros(spec: &PyGridSpec) -> Self {
        Self(heisenflag::GridField::zeros(&spec.0))
    }

    #[staticmethod]
    fn delta(spec: &PyGridSpec) -> Self {
        Self(heisenflag::GridField::delta(&spec.0))
    }

    /// Real field from a flat list of samples.
    #[staticmethod]
    fn from_real(spec: &PyGridSpec, values: Vec<f64>) -> PyResult<Self> {
        heisenflag::GridField::from_real(&spec.0, &values).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_complex(spec: &PyGridSpec, re: Vec<f64>, im: Vec<f64>) -> PyResult<Self> {
        if re.len() != im.len() {
            return Err(PyValueError::new_err("real and imaginary parts differ in length"));
        }
        let v = re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect();
        heisenflag::GridField::from_values(&spec.0, v).map(Self).map_err(err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        heisenflag::GridField::read_hfld(&path).map(Self).map_err(err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_hfld(&path).map_err(err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.spec.clone())
    }

    fn real(&self) -> Vec<f64> {
        self.0.re()
    }

    fn imag(&self) -> Vec<f64> {
        self.0.values.iter().map(|v| v.im).collect()
    }

    fn abs(&self) -> Vec<f64> {
        self.0.abs()
    }

    /// `(re, im)` of the integral.
    fn integral(&self) -> (f64, f64) {
        let c = self.0.integral();
        (c.re, c.im)
    }

    #[pyo3(signature = (p = 2.0))]
    fn norm(&self, p: f64) -> PyResult<f64> {
        if !(p >= 1.0) {
            return Err(PyValueError::new_err("p must be at least 1"));
        }
        Ok(lp_norm(&self.0, p))
    }

    fn __sub__(&self, o: &PyGridField) -> PyResult<Self> {
        self.0.sub(&o.0).map(Self).map_err(err)
    }

    fn __add__(&self, o: &PyGridField) -> PyResult<Self> {
        self.0.add(&o.0).map(Self).map_err(err)
    }

    fn __mul__(&self, c: f64) -> Self {
        Self(self.0.scale(c))
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }
}

#[pyclass(name = "HPoint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHPoint(heisenflag::HPoint);

#[pymethods]
impl PyHPoint {
    #[new]
    fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> PyResult<Self> {
        heisenflag::HPoint::new(x, y, t).map(Self).map_err(err)
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.0.x.clone()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.0.y.clone()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    fn __mul__(&self, o: &PyHPoint) -> PyResult<Self> {
        self.0.mul(&o.0).map(Self).map_err(err)
    }

    fn inv(&self) -> Self {
        Self(self.0.inv())
    }

    fn dilate(&self, r: f64) -> PyResult<Self> {
        self.0.dilate(r).map(Self).map_err(err)
    }

    #[pyo3(signature = (metric = "gauge"))]
    fn norm(&self, metric: &str) -> PyResult<f64> {
        Ok(self.0.norm(parse_metric(metric)?))
    }

    fn __repr__(&self) -> String {
        format!("HPoint(x={:?}, y={:?}, t={})", self.0.x, self.0.y, self.0.t)
    }
}

#[pyclass(name = "SpectralCalculus", frozen)]
struct PyCalculus(spectral::SpectralCalculus);

#[pymethods]
impl PyCalculus {
    #[new]
    #[pyo3(signature = (spec, cache_dir = None))]
    fn new(py: Python<'_>, spec: &PyGridSpec, cache_dir: Option<PathBuf>) -> PyResult<Self> {
        let s = spec.0.clone();
        py.detach(|| spectral::SpectralCalculus::build_cached(&s, cache_dir.as_deref())).map(Self).map_err(err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.spec.clone())
    }

    /// `lambda` of every t-frequency, in bin order.
    fn lambdas(&self) -> Vec<f64> {
        self.0.modes.iter().map(|m| m.lambda).collect()
    }

    fn heat(&self, f: &PyGridField, r: f64) -> PyResult<PyGridField> {
        self.0.heat(&f.0, r).map(PyGridField).map_err(err)
    }

    /// Energy of `f` in each t-frequency; sums to `||f||_2^2`.
    fn mode_energies(&self, f: &PyGridField) -> PyResult<Vec<f64>> {
        let c = self.0.forward(&f.0).map_err(err)?;
        Ok(self.0.mode_energies(&c))
    }

    /// `(energy, weight)` clusters of one t-frequency, as seen from the origin.
    #[pyo3(signature = (bin, rel_weight_floor = 0.05))]
    fn fan_clusters(&self, bin: usize, rel_weight_floor: f64) -> PyResult<Vec<(f64, f64)>> {
        if bin >= self.0.modes.len() {
            return Err(PyValueError::new_err(format!("no bin {bin}")));
        }
        Ok(spectral::fan_clusters(&self.0, bin, rel_weight_floor).into_iter().map(|c| (c.energy, c.weight)).collect())
    }
}

fn pair(name: &str) -> PyResult<FilterPair> {
    match name {
        "partition" => Ok(FilterPair::partition()),
        "partition_cts" => Ok(FilterPair::partition_cts()),
        "flag_poisson" => Ok(FilterPair::flag_poisson()),
        "gaussian" => Ok(FilterPair::gaussian()),
        _ => Err(PyValueError::new_err(format!("unknown filter pair '{name}'"))),
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, metric = "gauge"))]
fn distance(a: &PyHPoint, b: &PyHPoint, metric: &str) -> PyResult<f64> {
    hdist(&a.0, &b.0, parse_metric(metric)?).map_err(err)
}

/// `|T(o, r, s)|` in dimension `nu`.
#[pyfunction]
#[pyo3(signature = (r, s, nu = 1))]
fn tube_measure(r: f64, s: f64, nu: usize) -> PyResult<f64> {
    let t = tiling::Tube::new(heisenflag::HPoint::zero(nu.max(1)), r, s).map_err(err)?;
    Ok(t.measure())
}

/// Height of the unit tile over `z` (packed as `[x.., y..]`).
#[pyfunction]
#[pyo3(signature = (z, tol = 1e-13))]
fn tile_height(z: Vec<f64>, tol: f64) -> PyResult<f64> {
    if z.is_empty() || z.len() % 2 != 0 {
        return Err(PyValueError::new_err("z must have even positive length"));
    }
    TileHeight::new(z.len() / 2).eval(&z, tol).map_err(err)
}

#[pyfunction]
fn heat_kernel(r: f64, spec: &PyGridSpec) -> PyResult<PyGridField> {
    kernels::heat_kernel(r, &spec.0).map(PyGridField).map_err(err)
}

#[pyfunction]
fn poisson_kernel(calc: &PyCalculus, r: f64) -> PyResult<PyGridField> {
    kernels::poisson_kernel_with(&calc.0, r, 64).map(PyGridField).map_err(err)
}

/// Smooth random test field with vanishing t-mean.
#[pyfunction]
fn random_band_limited(spec: &PyGridSpec, seed: u64) -> PyGridField {
    PyGridField(experiments::random_band_limited(&spec.0, seed))
}

#[pyfunction]
#[pyo3(signature = (f, calc, pair_name = "partition"))]
fn square_dis(py: Python<'_>, f: &PyGridField, calc: &PyCalculus, pair_name: &str) -> PyResult<PyGridField> {
    let p = pair(pair_name)?;
    py.detach(|| operators::square_dis(&f.0, &calc.0, &p, &ScaleGrid::covering(&calc.0))).map(PyGridField).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, calc, beta = 1.0, gamma = 1.0))]
fn area(py: Python<'_>, f: &PyGridField, calc: &PyCalculus, beta: f64, gamma: f64) -> PyResult<PyGridField> {
    let p = FilterPair::partition_cts();
    py.detach(|| operators::area_fn(&f.0, &calc.0, &p, beta, gamma, &ScaleGrid::covering(&calc.0)))
        .map(PyGridField)
        .map_err(err)
}

#[pyfunction]
fn radial_maximal(py: Python<'_>, f: &PyGridField, calc: &PyCalculus) -> PyResult<PyGridField> {
    py.detach(|| operators::radial_maximal(&f.0, &calc.0, &ScaleGrid::for_spec(&calc.0.spec)))
        .map(PyGridField)
        .map_err(err)
}

#[pyfunction]
fn flag_maximal(py: Python<'_>, f: &PyGridField) -> PyGridField {
    py.detach(|| PyGridField(operators::flag_maximal(&f.0, &ScaleGrid::for_spec(&f.0.spec))))
}

/// Ratio `||S f||_1 / E||sum of signed pieces||_1` with its standard error.
#[pyfunction]
#[pyo3(signature = (f, calc, n_draws = 64, seed = 0))]
fn khinchin<'py>(py: Python<'py>, f: &PyGridField, calc: &PyCalculus, n_draws: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let rep = py
        .detach(|| {
            operators::khinchin_square_check(&f.0, &calc.0, &FilterPair::partition(), &ScaleGrid::covering(&calc.0), n_draws, seed)
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("ratio", rep.ratio)?;
    d.set_item("square_l1", rep.square_l1)?;
    d.set_item("mean_random_l1", rep.mean_random_l1)?;
    d.set_item("rel_std_err", rep.rel_std_err)?;
    Ok(d)
}

/// Atomic decomposition summary: `lambda_sum`, `levels`, `residual`, `area_l1`.
#[pyfunction]
fn atomic_decompose<'py>(py: Python<'py>, f: &PyGridField, calc: &PyCalculus) -> PyResult<Bound<'py, PyDict>> {
    let opts = DecomposeOptions::for_nu(f.0.spec.nu);
    let dec = py
        .detach(|| decompose(&f.0, &calc.0, &FilterPair::partition(), &ScaleGrid::covering(&calc.0), &opts))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda_sum", dec.lambda_sum())?;
    d.set_item("levels", dec.levels.iter().map(|l| l.lambda).collect::<Vec<_>>())?;
    d.set_item("residual", PyGridField(dec.residual.clone()))?;
    d.set_item("area_l1", dec.area_l1)?;
    Ok(d)
}

/// The eight Hardy-norm functionals of `f`, keyed by name.
#[pyfunction]
fn equivalence_row<'py>(py: Python<'py>, f: &PyGridField, calc: &PyCalculus) -> PyResult<Bound<'py, PyDict>> {
    let row = py.detach(|| eq_row(&f.0, &calc.0, &EquivalenceScales::for_calc(&calc.0))).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in FUNCTIONALS.iter().zip(row) {
        d.set_item(*k, v)?;
    }
    Ok(d)
}

#[pymodule]
pub fn heisenflag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", heisenflag::VERSION)?;
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyGridField>()?;
    m.add_class::<PyHPoint>()?;
    m.add_class::<PyCalculus>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(tube_measure, m)?)?;
    m.add_function(wrap_pyfunction!(tile_height, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(random_band_limited, m)?)?;
    m.add_function(wrap_pyfunction!(square_dis, m)?)?;
    m.add_function(wrap_pyfunction!(area, m)?)?;
    m.add_function(wrap_pyfunction!(radial_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(flag_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(khinchin, m)?)?;
    m.add_function(wrap_pyfunction!(atomic_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_row, m)?)?;
    Ok(())
}
