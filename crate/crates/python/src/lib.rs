//! Python bindings for hubkit. Matrices cross the boundary as `Matrix`
//! objects or nested lists of floats.

use hubkit::dissim::{self, TopkOptions};
use hubkit::hubstats::{self, HistogramOptions};
use hubkit::mitigate::{self, SecondaryKind};
use hubkit::synth::{self, SweepMode, SweepOptions};
use hubkit::{freqcorr, matrixio, predeval, DenseMatrix, Dtype, HubError, Measure};
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyhubkit, HubkitError, PyValueError);
create_exception!(pyhubkit, UndefinedStatistic, HubkitError);

fn to_py(e: HubError) -> PyErr {
    match e {
        HubError::Io { .. } => PyIOError::new_err(e.to_string()),
        HubError::Undefined(_) => UndefinedStatistic::new_err(e.to_string()),
        _ => HubkitError::new_err(format!("{}: {}", e.kind(), e)),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for hubkit::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse_measure(name: &str) -> PyResult<Measure> {
    name.parse().py()
}

fn parse_dtype(name: &str) -> PyResult<Dtype> {
    match name {
        "f32" => Ok(Dtype::F32),
        "f64" => Ok(Dtype::F64),
        _ => Err(PyValueError::new_err(format!("dtype must be 'f32' or 'f64', got {name:?}"))),
    }
}

/// Dense row-major matrix of finite floats.
#[pyclass(module = "pyhubkit", name = "Matrix", frozen)]
pub struct PyMatrix {
    inner: DenseMatrix,
}

#[pymethods]
impl PyMatrix {
    #[new]
    #[pyo3(signature = (rows, dtype = "f64"))]
    fn new(rows: Vec<Vec<f64>>, dtype: &str) -> PyResult<Self> {
        let m = DenseMatrix::from_rows(&rows).py()?;
        Ok(Self { inner: m.with_dtype(parse_dtype(dtype)?).py()? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self { inner: matrixio::read_matrix(path).py()? })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        matrixio::write_matrix(&self.inner, path).py()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    #[getter]
    fn dtype(&self) -> &'static str {
        match self.inner.dtype() {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.rows() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn tolist(&self) -> Vec<Vec<f64>> {
        self.inner.row_iter().map(<[f64]>::to_vec).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.rows()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Matrix(shape=({}, {}), dtype={})", self.inner.rows(), self.inner.cols(), self.dtype())
    }
}

/// Exact top-k lists and k-occurrence counts.
#[pyclass(module = "pyhubkit", name = "TopK", frozen, get_all)]
pub struct PyTopK {
    ids: Vec<Vec<usize>>,
    dissims: Vec<Vec<f64>>,
    counts: Vec<u64>,
    k: usize,
}

#[pymethods]
impl PyTopK {
    fn k_skew(&self) -> PyResult<f64> {
        let values: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        hubstats::skewness(&values).py()
    }

    fn hubs(&self, threshold: u64) -> Vec<(usize, u64)> {
        hubstats::HubSet::from_counts(&self.counts, threshold).members.iter().map(|h| (h.id, h.n_k)).collect()
    }

    fn __repr__(&self) -> String {
        format!("TopK(queries={}, candidates={}, k={})", self.ids.len(), self.counts.len(), self.k)
    }
}

fn wrap_topk(r: dissim::TopkResult) -> PyTopK {
    PyTopK {
        ids: r.neighbors.iter().map(|l| l.entries.iter().map(|e| e.id).collect()).collect(),
        dissims: r.neighbors.iter().map(|l| l.entries.iter().map(|e| e.dissim).collect()).collect(),
        counts: r.occurrence.counts().to_vec(),
        k: r.occurrence.k(),
    }
}

#[pyfunction]
fn euclidean(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    dissim::euclidean(&a, &b).py()
}

#[pyfunction]
fn normalized_euclidean(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    dissim::normalized_euclidean(&a, &b).py()
}

#[pyfunction]
fn softmax_rows(logits: &PyMatrix) -> PyMatrix {
    PyMatrix { inner: dissim::softmax_rows(&logits.inner) }
}

/// Exact k nearest candidates for every query.
#[pyfunction]
#[pyo3(signature = (queries, k, measure = "euclidean", candidates = None, exclude_self = None))]
fn topk(
    py: Python<'_>,
    queries: &PyMatrix,
    k: usize,
    measure: &str,
    candidates: Option<&PyMatrix>,
    exclude_self: Option<bool>,
) -> PyResult<PyTopK> {
    let measure = parse_measure(measure)?;
    let exclude_self = exclude_self.unwrap_or(candidates.is_none() && measure.default_exclude_self());
    let opts = TopkOptions::new(measure, k, exclude_self);
    let (q, c) = (&queries.inner, candidates.map(|c| &c.inner));
    let r = py.detach(|| dissim::topk_stream(q, c, &opts)).py()?;
    Ok(wrap_topk(r))
}

#[pyfunction]
fn skewness(values: Vec<f64>) -> PyResult<f64> {
    hubstats::skewness(&values).py()
}

#[pyfunction]
#[pyo3(signature = (counts, threshold = hubstats::DEFAULT_HUB_THRESHOLD))]
fn detect_hubs(counts: Vec<u64>, threshold: u64) -> Vec<(usize, u64)> {
    hubstats::HubSet::from_counts(&counts, threshold).members.iter().map(|h| (h.id, h.n_k)).collect()
}

#[pyfunction]
#[pyo3(signature = (counts, threshold = hubstats::DEFAULT_HUB_THRESHOLD))]
fn hub_summary(py: Python<'_>, counts: Vec<u64>, threshold: u64) -> PyResult<Bound<'_, PyDict>> {
    let s = hubstats::hub_summary(&hubstats::HubSet::from_counts(&counts, threshold));
    let d = PyDict::new(py);
    d.set_item("num_hubs", s.num_hubs)?;
    d.set_item("median", s.median)?;
    d.set_item("mean", s.mean)?;
    d.set_item("max", s.max)?;
    d.set_item("variance", s.variance)?;
    Ok(d)
}

#[pyfunction]
fn relative_variance(distances: Vec<f64>) -> PyResult<f64> {
    hubstats::relative_variance(&distances).py()
}

#[pyfunction]
fn average_ranks(values: Vec<f64>) -> Vec<f64> {
    freqcorr::average_ranks(&values)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    freqcorr::spearman(&x, &y).py()
}

/// `(mean, variance, relative_variance)` of `1 - p` over every entry.
#[pyfunction]
fn prob_distance_stats(probs: &PyMatrix) -> PyResult<(f64, f64, f64)> {
    let s = dissim::prob_distance_stats(&probs.inner).py()?;
    Ok((s.mean, s.variance, s.relative_variance))
}

#[pyfunction]
fn mean_l2_to_uniform(probs: &PyMatrix) -> PyResult<f64> {
    hubstats::mean_l2_to_uniform(&probs.inner).py()
}

type HistogramTuple = (Vec<f64>, Vec<u64>, f64, f64, f64);

/// Histogram of sampled dissimilarities: `(edges, counts, min, max, mean)`.
#[pyfunction]
#[pyo3(signature = (queries, measure = "euclidean", bins = 100, sample_pairs = 1_000_000, seed = 0))]
fn distance_histogram(
    py: Python<'_>,
    queries: &PyMatrix,
    measure: &str,
    bins: usize,
    sample_pairs: u64,
    seed: u64,
) -> PyResult<HistogramTuple> {
    let measure = parse_measure(measure)?;
    let opts = HistogramOptions {
        measure,
        bins,
        sample_pairs,
        seed,
        exclude_self: measure.default_exclude_self(),
    };
    let q = &queries.inner;
    let d = py.detach(|| hubstats::distance_histogram(q, None, &opts)).py()?;
    Ok((d.histogram.edges, d.histogram.counts, d.min_dist, d.max_dist, d.mean_dist))
}

#[pyfunction]
fn gaussian_matrix(n: usize, d: usize, seed: u64) -> PyMatrix {
    PyMatrix { inner: synth::gaussian_matrix(n, d, seed) }
}

#[pyfunction]
fn peaked_softmax_matrix(n: usize, v: usize, sharpness: f64, seed: u64) -> PyResult<PyMatrix> {
    Ok(PyMatrix { inner: synth::peaked_softmax_matrix(n, v, sharpness, seed).py()? })
}

/// Relative variance and k-skew per dimension: `[(dim, rv, kskew or None)]`.
#[pyfunction]
#[pyo3(signature = (dims, n, measure = "euclidean", sharpness = 1.0, seed = 0, k = 10, sample_pairs = 1_000_000))]
#[allow(clippy::too_many_arguments)]
fn rv_scan(
    py: Python<'_>,
    dims: Vec<usize>,
    n: usize,
    measure: &str,
    sharpness: f64,
    seed: u64,
    k: usize,
    sample_pairs: u64,
) -> PyResult<Vec<(usize, f64, Option<f64>)>> {
    let mode = match parse_measure(measure)? {
        Measure::Euclidean => SweepMode::EuclideanGaussian,
        Measure::Probability => SweepMode::ProbabilityPeaked { sharpness },
        other => return Err(HubkitError::new_err(format!("rv_scan does not support {other}"))),
    };
    let opts = SweepOptions { k, sample_pairs };
    let r = py.detach(|| synth::rv_scan(&dims, n, mode, seed, &opts)).py()?;
    Ok(r.dims.into_iter().zip(r.rv).zip(r.kskew).map(|((d, rv), ks)| (d, rv, ks)).collect())
}

#[pyfunction]
#[pyo3(signature = (queries, measure = "euclidean"))]
fn pairwise_matrix(py: Python<'_>, queries: &PyMatrix, measure: &str) -> PyResult<PyMatrix> {
    let measure = parse_measure(measure)?;
    let q = &queries.inner;
    Ok(PyMatrix { inner: py.detach(|| dissim::pairwise_matrix(q, None, measure)).py()? })
}

fn secondary(py: Python<'_>, dist: &PyMatrix, kind: SecondaryKind) -> PyResult<PyMatrix> {
    let d = &dist.inner;
    let s = py.detach(|| mitigate::secondary(d, kind)).py()?;
    Ok(PyMatrix { inner: s.to_matrix() })
}

/// Mutual proximity of a square distance matrix with a zero diagonal.
#[pyfunction]
fn mutual_proximity(py: Python<'_>, dist: &PyMatrix) -> PyResult<PyMatrix> {
    secondary(py, dist, SecondaryKind::MutualProximity)
}

/// Globally corrected rank; entry `[x][y]` is the rank of `x` in `y`'s list.
#[pyfunction]
fn global_rank(py: Python<'_>, dist: &PyMatrix) -> PyResult<PyMatrix> {
    secondary(py, dist, SecondaryKind::GlobalRank)
}

/// Top-k over a precomputed dissimilarity matrix, self excluded.
#[pyfunction]
fn topk_precomputed(dist: &PyMatrix, k: usize) -> PyResult<PyTopK> {
    Ok(wrap_topk(dissim::topk_precomputed(&dist.inner, k, true).py()?))
}

#[pyfunction]
fn top1_predict(probs: &PyMatrix) -> PyResult<Vec<usize>> {
    predeval::top1_predict(&probs.inner).py()
}

/// `(all, hub, non_hub)` accuracy, partitioned by whether the predicted
/// token is a hub.
#[pyfunction]
fn accuracy_partition(
    predicted: Vec<usize>,
    gold: Vec<usize>,
    hub_ids: Vec<usize>,
) -> PyResult<(f64, Option<f64>, Option<f64>)> {
    let hubs = hubstats::HubSet {
        threshold: 0,
        members: hub_ids.into_iter().map(|id| hubstats::Hub { id, n_k: 0 }).collect(),
    };
    let a = predeval::accuracy_partition(&predicted, &gold, &hubs).py()?;
    Ok((a.all, a.hub, a.non_hub))
}

#[pymodule]
pub fn pyhubkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HubkitError", m.py().get_type::<HubkitError>())?;
    m.add("UndefinedStatistic", m.py().get_type::<UndefinedStatistic>())?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyTopK>()?;
    m.add_function(wrap_pyfunction!(euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_rows, m)?)?;
    m.add_function(wrap_pyfunction!(topk, m)?)?;
    m.add_function(wrap_pyfunction!(topk_precomputed, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(skewness, m)?)?;
    m.add_function(wrap_pyfunction!(detect_hubs, m)?)?;
    m.add_function(wrap_pyfunction!(hub_summary, m)?)?;
    m.add_function(wrap_pyfunction!(relative_variance, m)?)?;
    m.add_function(wrap_pyfunction!(average_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(prob_distance_stats, m)?)?;
    m.add_function(wrap_pyfunction!(mean_l2_to_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(distance_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(peaked_softmax_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(rv_scan, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_proximity, m)?)?;
    m.add_function(wrap_pyfunction!(global_rank, m)?)?;
    m.add_function(wrap_pyfunction!(top1_predict, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_partition, m)?)?;
    Ok(())
}
