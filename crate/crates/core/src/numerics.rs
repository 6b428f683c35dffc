//! Small numerical building blocks shared across modules.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * ti);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Field of scalars the tridiagonal solver works over.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Tridiagonal matrix; `lower[0]` and `upper[n-1]` are unused.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        m.diag.iter_mut().for_each(|d| *d = T::one());
        m
    }

    pub fn from_diagonal(diag: Vec<T>) -> Self {
        let n = diag.len();
        Self {
            lower: vec![T::zero(); n],
            diag,
            upper: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            lower: self.lower.iter().map(|&v| v * s).collect(),
            diag: self.diag.iter().map(|&v| v * s).collect(),
            upper: self.upper.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let zip = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x + y).collect();
        Self {
            lower: zip(&self.lower, &other.lower),
            diag: zip(&self.diag, &other.diag),
            upper: zip(&self.upper, &other.upper),
        }
    }

    /// `self * diag(d)`: column `k` scaled by `d[k]`.
    pub fn mul_diag_right(&self, d: &[T]) -> Self {
        let n = self.len();
        Self {
            lower: (0..n)
                .map(|j| if j > 0 { self.lower[j] * d[j - 1] } else { T::zero() })
                .collect(),
            diag: (0..n).map(|j| self.diag[j] * d[j]).collect(),
            upper: (0..n)
                .map(|j| if j + 1 < n { self.upper[j] * d[j + 1] } else { T::zero() })
                .collect(),
        }
    }

    /// `diag(d) * self`: row `j` scaled by `d[j]`.
    pub fn mul_diag_left(&self, d: &[T]) -> Self {
        Self {
            lower: self.lower.iter().zip(d).map(|(&v, &s)| v * s).collect(),
            diag: self.diag.iter().zip(d).map(|(&v, &s)| v * s).collect(),
            upper: self.upper.iter().zip(d).map(|(&v, &s)| v * s).collect(),
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * x[j];
                if j > 0 {
                    acc = acc + self.lower[j] * x[j - 1];
                }
                if j + 1 < n {
                    acc = acc + self.upper[j] * x[j + 1];
                }
                acc
            })
            .collect()
    }

    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        let scale = self
            .diag
            .iter()
            .map(|d| d.modulus())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        if pivot.modulus() <= 1e-14 * scale {
            return Err(Error::SolverBreakdown { row: 0 });
        }
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for j in 1..n {
            pivot = self.diag[j] - self.lower[j] * c[j - 1];
            if pivot.modulus() <= 1e-14 * scale || !pivot.modulus().is_finite() {
                return Err(Error::SolverBreakdown { row: j });
            }
            if j + 1 < n {
                c[j] = self.upper[j] / pivot;
            }
            d[j] = (rhs[j] - self.lower[j] * d[j - 1]) / pivot;
        }
        for j in (0..n - 1).rev() {
            d[j] = d[j] - c[j] * d[j + 1];
        }
        Ok(d)
    }
}
