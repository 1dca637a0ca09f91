//! Lorentzian linear algebra on a single tangent space.
//!
//! Sign convention: timelike vectors satisfy `B(v, v) < 0`, so the metric has
//! exactly one negative eigenvalue.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const NULL_TOL_FACTOR: f64 = 1e-12;

/// Causal character of a single vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CausalClass {
    Timelike,
    Lightlike,
    Spacelike,
    Zero,
}

impl CausalClass {
    pub fn is_causal(self) -> bool {
        matches!(self, CausalClass::Timelike | CausalClass::Lightlike)
    }
}

/// Symmetric bilinear form of signature (1, dim-1) stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    dim: usize,
    components: Vec<f64>,
    /// A unit (euclidean) eigenvector of the negative eigenvalue; orients the
    /// two components of the causal double cone.
    time_axis: Vec<f64>,
    max_abs: f64,
}

impl MetricTensor {
    pub fn new(dim: usize, components: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("metric dimension {dim} < 2")));
        }
        if components.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, got: components.len() });
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("metric has non-finite components".into()));
        }
        let max_abs = components.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (components[i * dim + j], components[j * dim + i]);
                if (a - b).abs() > SYMMETRY_TOL * max_abs.max(1.0) {
                    return Err(Error::Domain(format!("metric not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &components));
        let tol = NULL_TOL_FACTOR * max_abs;
        let negative: Vec<usize> =
            (0..dim).filter(|&k| eig.eigenvalues[k] < -tol).collect();
        let degenerate = (0..dim).any(|k| eig.eigenvalues[k].abs() <= tol);
        if negative.len() != 1 || degenerate {
            return Err(Error::Domain(format!(
                "metric is not Lorentzian: eigenvalues {:?}",
                eig.eigenvalues.as_slice()
            )));
        }
        let col = eig.eigenvectors.column(negative[0]);
        let mut time_axis: Vec<f64> = col.iter().copied().collect();
        // Orient the axis so its largest-magnitude entry is positive.
        let lead = time_axis
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, &x)| if x.abs() > acc.1 { (k, x.abs()) } else { acc })
            .0;
        if time_axis[lead] < 0.0 {
            time_axis.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(MetricTensor { dim, components, time_axis, max_abs })
    }

    /// Minkowski metric diag(-1, 1, ..., 1).
    pub fn minkowski(dim: usize) -> Self {
        let mut d = vec![1.0; dim];
        d[0] = -1.0;
        Self::diagonal(&d).expect("minkowski metric is Lorentzian")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut c = vec![0.0; n * n];
        for (k, d) in diag.iter().enumerate() {
            c[k * n + k] = *d;
        }
        Self::new(n, c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.components[i * self.dim + j]
    }

    pub fn null_tolerance(&self) -> f64 {
        NULL_TOL_FACTOR * self.max_abs
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// B(v, w) without dimension checks.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            let row = &self.components[i * n..(i + 1) * n];
            let mut r = 0.0;
            for j in 0..n {
                r += row[j] * w[j];
            }
            s += v[i] * r;
        }
        s
    }

    pub fn form(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        self.check_len(w)?;
        Ok(self.apply(v, w))
    }

    pub fn classify(&self, v: &[f64]) -> Result<CausalClass> {
        self.check_len(v)?;
        Ok(self.classify_unchecked(v))
    }

    pub(crate) fn classify_unchecked(&self, v: &[f64]) -> CausalClass {
        if v.iter().all(|x| *x == 0.0) {
            return CausalClass::Zero;
        }
        let q = self.apply(v, v);
        let tol = self.null_tolerance();
        if q < -tol {
            CausalClass::Timelike
        } else if q > tol {
            CausalClass::Spacelike
        } else {
            CausalClass::Lightlike
        }
    }

    /// `sqrt(-B(v, v))` for causal `v`.
    pub fn lorentz_norm(&self, v: &[f64]) -> Result<f64> {
        match self.classify(v)? {
            CausalClass::Spacelike => Err(Error::Domain("lorentz_norm of a spacelike vector".into())),
            CausalClass::Zero | CausalClass::Lightlike => Ok((-self.apply(v, v)).max(0.0).sqrt()),
            CausalClass::Timelike => Ok((-self.apply(v, v)).sqrt()),
        }
    }

    /// Sign (+1 / -1) of the cone component containing the causal vector `v`,
    /// relative to the stored time axis.
    fn component_sign(&self, v: &[f64]) -> f64 {
        self.apply(&self.time_axis, v).signum() * -1.0
    }

    /// Whether two nonzero causal vectors lie in the same component of the
    /// causal double cone.
    pub fn same_cone(&self, v: &[f64], w: &[f64]) -> Result<bool> {
        for x in [v, w] {
            match self.classify(x)? {
                CausalClass::Timelike | CausalClass::Lightlike => {}
                c => return Err(Error::Domain(format!("same_cone needs causal vectors, got {c:?}"))),
            }
        }
        Ok(self.component_sign(v) == self.component_sign(w))
    }

    /// Time axis oriented by the caller's choice of future vector.
    pub fn time_axis(&self) -> &[f64] {
        &self.time_axis
    }

    /// Inverse form (indices raised), also of Lorentzian signature.
    pub fn inverse(&self) -> Result<MetricTensor> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.components);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Domain("metric is singular".into()))?;
        let mut c: Vec<f64> = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                // symmetrize against roundoff
                c.push(0.5 * (inv[(i, j)] + inv[(j, i)]));
            }
        }
        MetricTensor::new(self.dim, c)
    }

    /// `factor * B`; `factor` must be positive to keep the signature.
    pub fn scaled(&self, factor: f64) -> Result<MetricTensor> {
        if !(factor > 0.0) {
            return Err(Error::Domain(format!("conformal factor {factor} must be positive")));
        }
        MetricTensor::new(self.dim, self.components.iter().map(|c| c * factor).collect())
    }

    /// Entry-wise mean of two forms of equal dimension (midpoint metric of a segment).
    pub fn midpoint(&self, other: &MetricTensor) -> Result<MetricTensor> {
        if other.dim != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        MetricTensor::new(
            self.dim,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &MetricTensor) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Whether two vectors are linearly dependent, judged by the 2x2 Gram
/// determinant relative to their euclidean norms.
pub fn linearly_dependent(v: &[f64], w: &[f64], rel_tol: f64) -> bool {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let vw: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    if vv == 0.0 || ww == 0.0 {
        return true;
    }
    (vv * ww - vw * vw).abs() <= rel_tol * vv * ww
}
