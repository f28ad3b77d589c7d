//! Native ristretto255 kernels for zkfl.
//!
//! Every function takes and returns canonical 32-byte encodings so the
//! Python side can swap this module for the pure-Python fallback without
//! changing a byte of output.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn decode_point(b: &[u8]) -> PyResult<RistrettoPoint> {
    if b.len() != 32 {
        return Err(PyValueError::new_err("point encoding must be 32 bytes"));
    }
    let mut arr = [0u8; 32];
    arr.copy_from_slice(b);
    CompressedRistretto(arr)
        .decompress()
        .ok_or_else(|| PyValueError::new_err("invalid ristretto255 encoding"))
}

fn decode_scalar(b: &[u8]) -> PyResult<Scalar> {
    if b.len() != 32 {
        return Err(PyValueError::new_err("scalar encoding must be 32 bytes"));
    }
    let mut arr = [0u8; 32];
    arr.copy_from_slice(b);
    Option::from(Scalar::from_canonical_bytes(arr))
        .ok_or_else(|| PyValueError::new_err("non-canonical scalar"))
}

fn decode_points(buf: &[u8]) -> PyResult<Vec<RistrettoPoint>> {
    if buf.len() % 32 != 0 {
        return Err(PyValueError::new_err("point buffer length not a multiple of 32"));
    }
    buf.chunks_exact(32).map(decode_point).collect()
}

fn decode_scalars(buf: &[u8]) -> PyResult<Vec<Scalar>> {
    if buf.len() % 32 != 0 {
        return Err(PyValueError::new_err("scalar buffer length not a multiple of 32"));
    }
    buf.chunks_exact(32).map(decode_scalar).collect()
}

fn out<'py>(py: Python<'py>, p: &RistrettoPoint) -> Bound<'py, PyBytes> {
    PyBytes::new(py, p.compress().as_bytes())
}

#[pyfunction]
fn from_uniform<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    if data.len() != 64 {
        return Err(PyValueError::new_err("hash-to-group input must be 64 bytes"));
    }
    let mut arr = [0u8; 64];
    arr.copy_from_slice(data);
    Ok(out(py, &RistrettoPoint::from_uniform_bytes(&arr)))
}

#[pyfunction]
fn is_valid(data: &[u8]) -> bool {
    decode_point(data).is_ok()
}

#[pyfunction]
fn add<'py>(py: Python<'py>, a: &[u8], b: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    Ok(out(py, &(decode_point(a)? + decode_point(b)?)))
}

#[pyfunction]
fn sub<'py>(py: Python<'py>, a: &[u8], b: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    Ok(out(py, &(decode_point(a)? - decode_point(b)?)))
}

#[pyfunction]
fn neg<'py>(py: Python<'py>, a: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    Ok(out(py, &(-decode_point(a)?)))
}

#[pyfunction]
fn mul<'py>(py: Python<'py>, point: &[u8], scalar: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    Ok(out(py, &(decode_scalar(scalar)? * decode_point(point)?)))
}

#[pyfunction]
fn mul_base<'py>(py: Python<'py>, scalar: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    Ok(out(py, &RistrettoPoint::mul_base(&decode_scalar(scalar)?)))
}

/// Variable-time multi-scalar multiplication over concatenated buffers.
#[pyfunction]
fn msm<'py>(py: Python<'py>, scalars: &[u8], points: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    let s = decode_scalars(scalars)?;
    let p = decode_points(points)?;
    if s.len() != p.len() {
        return Err(PyValueError::new_err("msm: scalar/point count mismatch"));
    }
    let r = py.detach(|| RistrettoPoint::vartime_multiscalar_mul(s.iter(), p.iter()));
    Ok(out(py, &r))
}

/// Decompressed generator table; avoids re-decoding fixed bases on every call.
#[pyclass(frozen)]
struct PointTable {
    points: Vec<RistrettoPoint>,
}

#[pymethods]
impl PointTable {
    #[new]
    fn new(points: &[u8]) -> PyResult<Self> {
        Ok(PointTable { points: decode_points(points)? })
    }

    fn __len__(&self) -> usize {
        self.points.len()
    }

    /// MSM against the first len(scalars)/32 points of the table.
    fn msm<'py>(&self, py: Python<'py>, scalars: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
        let s = decode_scalars(scalars)?;
        if s.len() > self.points.len() {
            return Err(PyValueError::new_err("msm: more scalars than table points"));
        }
        let pts = &self.points[..s.len()];
        let r = py.detach(|| RistrettoPoint::vartime_multiscalar_mul(s.iter(), pts.iter()));
        Ok(out(py, &r))
    }
}

#[pymodule]
fn _core(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(from_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(is_valid, m)?)?;
    m.add_function(wrap_pyfunction!(add, m)?)?;
    m.add_function(wrap_pyfunction!(sub, m)?)?;
    m.add_function(wrap_pyfunction!(neg, m)?)?;
    m.add_function(wrap_pyfunction!(mul, m)?)?;
    m.add_function(wrap_pyfunction!(mul_base, m)?)?;
    m.add_function(wrap_pyfunction!(msm, m)?)?;
    m.add_class::<PointTable>()?;
    let py = m.py();
    m.add("BASEPOINT", PyBytes::new(py, RISTRETTO_BASEPOINT_POINT.compress().as_bytes()))?;
    m.add("IDENTITY", PyBytes::new(py, RistrettoPoint::identity().compress().as_bytes()))?;
    m.add("BACKEND", "rust")?;
    Ok(())
}
