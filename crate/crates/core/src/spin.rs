//! Collective spin operators and states in the Dicke basis `|J, m>`.
//!
//! Index `i` of every amplitude vector or matrix corresponds to
//! `m = i - J`, so index 0 is `m = -J` and index `N` is `m = +J`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Total spin `J = N / 2` of `N` two-level particles.
///
/// Stores `N` so that half-integer `J` stays exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinLength {
    n: usize,
}

impl SpinLength {
    pub fn new(n_particles: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::NoParticles);
        }
        Ok(Self { n: n_particles })
    }

    pub fn n_particles(self) -> usize {
        self.n
    }

    pub fn dim(self) -> usize {
        self.n + 1
    }

    pub fn j(self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Magnetic quantum number at amplitude index `index`.
    pub fn m(self, index: usize) -> f64 {
        index as f64 - self.j()
    }

    /// Amplitude index of `m`, if `m` lies on the ladder.
    pub fn index_of(self, m: f64) -> Option<usize> {
        let shifted = m + self.j();
        if shifted < 0.0 || shifted.fract() != 0.0 || shifted > self.n as f64 {
            None
        } else {
            Some(shifted as usize)
        }
    }

    /// `true` when `J` is an even integer, i.e. `N` divisible by 4.
    pub fn has_even_j(self) -> bool {
        self.n % 4 == 0
    }

    pub fn m_values(self) -> impl Iterator<Item = f64> {
        (0..self.dim()).map(move |i| self.m(i))
    }

    fn check_dim(self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }
}

/// Pure state expanded in the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeVector {
    spin: SpinLength,
    amps: DVector<C64>,
}

impl DickeVector {
    /// Builds a state and rescales it to unit norm.
    pub fn normalized(spin: SpinLength, amps: DVector<C64>) -> Result<Self> {
        spin.check_dim(amps.len())?;
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            spin,
            amps: amps.unscale(norm),
        })
    }

    /// Wraps amplitudes as given. Evolution uses this path so that a unitarity
    /// defect shows up as norm drift instead of being hidden.
    pub fn from_raw(spin: SpinLength, amps: DVector<C64>) -> Result<Self> {
        spin.check_dim(amps.len())?;
        Ok(Self { spin, amps })
    }

    pub(crate) fn from_raw_unchecked(spin: SpinLength, amps: DVector<C64>) -> Self {
        debug_assert_eq!(amps.len(), spin.dim());
        Self { spin, amps }
    }

    /// The Dicke state `|J, m>`.
    pub fn basis(spin: SpinLength, m: f64) -> Result<Self> {
        let index = spin.index_of(m).ok_or(Error::OutOfRange {
            name: "m",
            value: m,
            range: "the ladder -J..J",
        })?;
        let mut amps = DVector::zeros(spin.dim());
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { spin, amps })
    }

    pub fn spin(&self) -> SpinLength {
        self.spin
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn amplitude(&self, m: f64) -> Option<C64> {
        self.spin.index_of(m).map(|i| self.amps[i])
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &DickeVector) -> Result<C64> {
        self.spin.check_dim(other.amps.len())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn expectation_jz(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| self.spin.m(i) * a.norm_sqr())
            .sum()
    }

    pub fn variance_jz(&self) -> f64 {
        let second: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let m = self.spin.m(i);
                m * m * a.norm_sqr()
            })
            .sum();
        let mean = self.expectation_jz();
        (second - mean * mean).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
}

/// Dense operator on the `(N+1)`-dimensional Dicke space.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    spin: SpinLength,
    entries: DMatrix<C64>,
    kind: OperatorKind,
}

impl DenseOperator {
    pub fn new(spin: SpinLength, entries: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        spin.check_dim(entries.nrows())?;
        spin.check_dim(entries.ncols())?;
        Ok(Self {
            spin,
            entries,
            kind,
        })
    }

    pub fn identity(spin: SpinLength) -> Self {
        Self {
            spin,
            entries: DMatrix::identity(spin.dim(), spin.dim()),
            kind: OperatorKind::Unitary,
        }
    }

    pub fn spin(&self) -> SpinLength {
        self.spin
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn adjoint(&self) -> Self {
        Self {
            spin: self.spin,
            entries: self.entries.adjoint(),
            kind: self.kind,
        }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &DenseOperator) -> Result<Self> {
        self.spin.check_dim(rhs.spin.dim())?;
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self {
            spin: self.spin,
            entries: linalg::cmatmul(&self.entries, &rhs.entries),
            kind,
        })
    }

    /// Max-abs entry of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = linalg::cmatmul(&self.entries.adjoint(), &self.entries);
        linalg::max_abs_diff(&product, &DMatrix::identity(self.spin.dim(), self.spin.dim()))
    }

    /// Max-abs entry of `A - A^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    /// Matrix-vector product. The result is not renormalized.
    pub fn apply(&self, state: &DickeVector) -> Result<DickeVector> {
        self.spin.check_dim(state.spin.dim())?;
        Ok(self.apply_unchecked(state))
    }

    pub(crate) fn apply_unchecked(&self, state: &DickeVector) -> DickeVector {
        DickeVector::from_raw_unchecked(self.spin, linalg::cmatvec(&self.entries, &state.amps))
    }

    pub(crate) fn apply_to_amplitudes(&self, amps: &DVector<C64>) -> DVector<C64> {
        linalg::cmatvec(&self.entries, amps)
    }
}

/// `op * state`; fails when the spin lengths differ.
pub fn apply(op: &DenseOperator, state: &DickeVector) -> Result<DickeVector> {
    op.apply(state)
}

/// Mixed state over the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    spin: SpinLength,
    entries: DMatrix<C64>,
}

impl DensityOperator {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn from_pure(state: &DickeVector) -> Self {
        let amps = state.amplitudes();
        Self {
            spin: state.spin(),
            entries: amps * amps.adjoint(),
        }
    }

    /// Validates Hermiticity and unit trace. Positivity is checked separately
    /// by [`DensityOperator::validate`] since it needs an eigensolve.
    pub fn from_entries(spin: SpinLength, entries: DMatrix<C64>) -> Result<Self> {
        spin.check_dim(entries.nrows())?;
        spin.check_dim(entries.ncols())?;
        let rho = Self { spin, entries };
        let herm = rho.hermiticity_defect();
        if herm > Self::HERMITICITY_TOL {
            return Err(Error::InvalidDensity(format!("non-Hermitian by {herm:e}")));
        }
        let trace = rho.trace();
        if (trace - 1.0).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_entries_unchecked(spin: SpinLength, entries: DMatrix<C64>) -> Self {
        Self { spin, entries }
    }

    pub fn spin(&self) -> SpinLength {
        self.spin
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (&self.entries + self.entries.adjoint()).unscale(2.0);
        SymmetricEigen::new(hermitian)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Full check of Hermiticity, trace and positivity.
    pub fn validate(&self) -> Result<()> {
        Self::from_entries(self.spin, self.entries.clone())?;
        let min = self.min_eigenvalue();
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, unitary: &DenseOperator) -> Result<Self> {
        self.spin.check_dim(unitary.spin().dim())?;
        let u = unitary.entries();
        let entries = linalg::cmatmul(&linalg::cmatmul(u, &self.entries), &u.adjoint());
        Ok(Self {
            spin: self.spin,
            entries,
        })
    }

    /// Expectation of `Jz`.
    pub fn expectation_jz(&self) -> f64 {
        self.diagonal()
            .iter()
            .enumerate()
            .map(|(i, p)| self.spin.m(i) * p)
            .sum()
    }
}

/// `(m)` for `m = -J..J`.
pub fn jz_diagonal(spin: SpinLength) -> Vec<f64> {
    spin.m_values().collect()
}

/// Off-diagonal ladder element `<J, m+1| Jx |J, m> = sqrt(J(J+1) - m(m+1)) / 2`.
fn jx_element(spin: SpinLength, lower_index: usize) -> f64 {
    let j = spin.j();
    let m = spin.m(lower_index);
    0.5 * (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

fn jx_real(spin: SpinLength) -> DMatrix<f64> {
    let dim = spin.dim();
    let mut jx = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        let v = jx_element(spin, i);
        jx[(i + 1, i)] = v;
        jx[(i, i + 1)] = v;
    }
    jx
}

/// Tridiagonal Hermitian `Jx`.
pub fn build_jx(spin: SpinLength) -> DenseOperator {
    DenseOperator {
        spin,
        entries: jx_real(spin).map(|x| C64::new(x, 0.0)),
        kind: OperatorKind::Hermitian,
    }
}

/// Sign of the exponent in `exp(sign * i * angle * Jx)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RotationSign {
    Positive,
    Negative,
}

impl RotationSign {
    pub fn value(self) -> f64 {
        match self {
            RotationSign::Positive => 1.0,
            RotationSign::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            RotationSign::Positive => RotationSign::Negative,
            RotationSign::Negative => RotationSign::Positive,
        }
    }
}

/// Spectral decomposition `Jx = V diag(lambda) V^T`.
#[derive(Debug)]
pub struct JxEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

type Slot<T> = Arc<OnceLock<T>>;

fn slot<K: std::hash::Hash + Eq + Copy, T>(
    map: &Mutex<HashMap<K, Slot<T>>>,
    key: K,
    cap: usize,
) -> Slot<T> {
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(s) = guard.get(&key) {
        return Arc::clone(s);
    }
    let s: Slot<T> = Arc::new(OnceLock::new());
    if guard.len() < cap {
        guard.insert(key, Arc::clone(&s));
    }
    s
}

const EIGEN_CACHE_CAP: usize = 64;
const ROTATION_CACHE_CAP: usize = 256;

/// Eigendecomposition of `Jx`, computed once per spin length.
pub fn jx_eigen(spin: SpinLength) -> Arc<JxEigen> {
    static CACHE: OnceLock<Mutex<HashMap<SpinLength, Slot<Arc<JxEigen>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let s = slot(cache, spin, EIGEN_CACHE_CAP);
    Arc::clone(s.get_or_init(|| {
        let eig = SymmetricEigen::new(jx_real(spin));
        Arc::new(JxEigen {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }))
}

fn rotation_from_eigen(spin: SpinLength, eigen: &JxEigen, angle: f64, sign: RotationSign) -> DenseOperator {
    // exp(i s a Jx) = V diag(cos) V^T + i V diag(sin) V^T
    let v = &eigen.eigenvectors;
    let phase = sign.value() * angle;
    let mut vc = v.clone();
    let mut vs = v.clone();
    for (k, &lambda) in eigen.eigenvalues.iter().enumerate() {
        let (s, c) = (phase * lambda).sin_cos();
        vc.column_mut(k).scale_mut(c);
        vs.column_mut(k).scale_mut(s);
    }
    let vt = v.transpose();
    let re = &vc * &vt;
    let im = &vs * &vt;
    DenseOperator {
        spin,
        entries: linalg::join(&re, &im),
        kind: OperatorKind::Unitary,
    }
}

/// `exp(sign * i * angle * Jx)` by spectral exponentiation of the cached
/// `Jx` eigendecomposition. Results are cached per `(N, angle, sign)`.
pub fn rot_x(spin: SpinLength, angle: f64, sign: RotationSign) -> Arc<DenseOperator> {
    type Key = (SpinLength, u64, RotationSign);
    static CACHE: OnceLock<Mutex<HashMap<Key, Slot<Arc<DenseOperator>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let s = slot(cache, (spin, angle.to_bits(), sign), ROTATION_CACHE_CAP);
    Arc::clone(s.get_or_init(|| {
        let eigen = jx_eigen(spin);
        Arc::new(rotation_from_eigen(spin, &eigen, angle, sign))
    }))
}
