//! Dirichlet Green's functions `G = S − H` on bounded domains.
//!
//! `S(x,y) = κ|x−y|^{2−N}` with `κ = ((N−2)ω_N)^{−1}` is the fundamental
//! solution, `H(x,·)` is harmonic with `H = S` on the boundary, and the
//! Robin function is `R(x) = H(x,x)`.
//!
//! A [`DomainKernel`] only has to supply `H`; every derivative has a
//! finite-difference default. The ball kernel overrides all of them with
//! the image-method closed forms, written through
//!
//! ```text
//! Q(x,y) = |x'|²|y'|²/a² − 2⟨x',y'⟩ + a²,   x' = x−c, y' = y−c,
//! H(x,y) = κ Q^{−(N−2)/2},
//! ```
//!
//! which equals the usual `((|x'|/a)|y − x*|)²` and stays regular at `x = c`.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::DimensionContext;
use crate::fd;
use crate::field::{dist, dist2, dot};
use crate::quadrature::Ball;

pub use crate::tabulated::{Interpolation, TabulatedKernel};

/// `G` is refused closer than this to the diagonal.
pub const DIAGONAL_CUTOFF: f64 = 1e-10;
/// Robin derivatives are refused within this fraction of the domain scale
/// from the boundary.
pub const BOUNDARY_CUTOFF: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GreensError {
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("points are {distance:e} apart; G is singular on the diagonal")]
    NearDiagonal { distance: f64 },
    #[error("point is {distance:e} from the boundary; Robin derivatives are ill-conditioned there")]
    NearBoundary { distance: f64 },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("malformed kernel file: {0}")]
    Format(String),
    #[error("tabulated samples are not symmetric: max |H(x,y) − H(y,x)| = {max_asymmetry:e}")]
    Asymmetric { max_asymmetry: f64 },
    #[error("point {0:?} lies outside the tabulated region")]
    OutsideTable(Vec<f64>),
    #[error("kernel file i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lower, .. } => lower.len(),
        }
    }

    pub fn validate(&self) -> Result<(), GreensError> {
        match self {
            Shape::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(GreensError::InvalidDomain(format!("ball radius must be positive, got {radius}")));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return Err(GreensError::InvalidDomain("ball centre must be finite".into()));
                }
            }
            Shape::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(GreensError::InvalidDomain("box needs lower < upper in every coordinate".into()));
                }
            }
        }
        Ok(())
    }

    /// Closed membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance_to_boundary(x) >= -1e-12 * self.scale()
    }

    /// Signed distance to the boundary, positive inside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Ball { center, radius } => radius - dist(x, center),
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (v - l).min(u - v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Box { lower, upper } => dist(lower, upper),
        }
    }

    /// Length used to make boundary tolerances relative.
    pub fn scale(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } => *radius,
            Shape::Box { lower, upper } => {
                0.5 * lower.iter().zip(upper).map(|(l, u)| u - l).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn bounding_ball(&self) -> Ball {
        match self {
            Shape::Ball { center, radius } => Ball::new(center.clone(), *radius),
            Shape::Box { lower, upper } => {
                let c: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
                Ball::new(c, 0.5 * dist(lower, upper))
            }
        }
    }
}

/// Runs `f` through an FD helper, remembering the first error it reports.
fn fd_try<T>(eval: impl FnOnce(&dyn Fn(&[f64]) -> f64) -> T, f: impl Fn(&[f64]) -> Result<f64, GreensError>) -> Result<T, GreensError> {
    let err: RefCell<Option<GreensError>> = RefCell::new(None);
    let wrapped = |p: &[f64]| match f(p) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let out = eval(&wrapped);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn fd_try_vec<T>(
    eval: impl FnOnce(&dyn Fn(&[f64]) -> DVector<f64>) -> T,
    f: impl Fn(&[f64]) -> Result<DVector<f64>, GreensError>,
    len: usize,
) -> Result<T, GreensError> {
    let err: RefCell<Option<GreensError>> = RefCell::new(None);
    let wrapped = |p: &[f64]| match f(p) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            DVector::from_element(len, f64::NAN)
        }
    };
    let out = eval(&wrapped);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub trait DomainKernel: Send + Sync {
    fn dim(&self) -> usize;

    /// `((N−2)ω_N)^{−1}`.
    fn kappa(&self) -> f64;

    fn shape(&self) -> &Shape;

    /// Short human-readable description for reports.
    fn describe(&self) -> String;

    /// Regular part `H(x,y)`.
    fn regular(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError>;

    fn regular_grad_x(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        fd_try(|f| fd::gradient(f, x), |p| self.regular(p, y))
    }

    fn regular_grad_y(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        self.regular_grad_x(y, x)
    }

    /// `∂²H/∂x_i∂x_j`.
    fn regular_hess_xx(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        let n = self.dim();
        fd_try_vec(|g| fd::hessian_from_gradient(g, x), |p| self.regular_grad_x(p, y), n)
    }

    /// `∂²H/∂x_i∂y_j`.
    fn regular_hess_xy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        let n = self.dim();
        fd_try_vec(|g| fd::jacobian(g, y, n), |p| self.regular_grad_x(x, p), n)
    }

    fn regular_hess_yy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.regular_hess_xx(y, x)
    }

    fn robin(&self, x: &[f64]) -> Result<f64, GreensError> {
        self.check_interior(x)?;
        self.regular(x, x)
    }

    fn robin_gradient(&self, x: &[f64]) -> Result<DVector<f64>, GreensError> {
        self.check_conditioning(x)?;
        fd_try(|f| fd::gradient(f, x), |p| self.robin(p))
    }

    fn robin_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.check_conditioning(x)?;
        let n = self.dim();
        fd_try_vec(|g| fd::hessian_from_gradient(g, x), |p| self.robin_gradient(p), n)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GreensError> {
        if x.len() != self.dim() {
            return Err(GreensError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn check_closed(&self, x: &[f64]) -> Result<(), GreensError> {
        self.check_dim(x)?;
        if !self.shape().contains(x) {
            return Err(GreensError::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn check_interior(&self, x: &[f64]) -> Result<(), GreensError> {
        self.check_dim(x)?;
        if !(self.shape().distance_to_boundary(x) > 0.0) {
            return Err(GreensError::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn check_conditioning(&self, x: &[f64]) -> Result<(), GreensError> {
        self.check_interior(x)?;
        let d = self.shape().distance_to_boundary(x);
        if d < BOUNDARY_CUTOFF * self.shape().scale() {
            return Err(GreensError::NearBoundary { distance: d });
        }
        Ok(())
    }

    fn singular(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim() as f64;
        self.kappa() * dist2(x, y).powf((2.0 - n) / 2.0)
    }

    fn green(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(self.singular(x, y) - self.regular(x, y)?)
    }

    fn check_off_diagonal(&self, x: &[f64], y: &[f64]) -> Result<(), GreensError> {
        self.check_closed(x)?;
        self.check_closed(y)?;
        let d = dist(x, y);
        if d < DIAGONAL_CUTOFF {
            return Err(GreensError::NearDiagonal { distance: d });
        }
        Ok(())
    }

    fn green_grad_x(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(singular_grad_x(self.kappa(), x, y) - self.regular_grad_x(x, y)?)
    }

    fn green_grad_y(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(singular_grad_x(self.kappa(), y, x) - self.regular_grad_y(x, y)?)
    }

    fn green_hess_xx(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(singular_hess_xx(self.kappa(), x, y) - self.regular_hess_xx(x, y)?)
    }

    fn green_hess_xy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(-singular_hess_xx(self.kappa(), x, y) - self.regular_hess_xy(x, y)?)
    }

    fn green_hess_yy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.check_off_diagonal(x, y)?;
        Ok(singular_hess_xx(self.kappa(), x, y) - self.regular_hess_yy(x, y)?)
    }
}

/// `∇_x S(x,y) = −(N−2)κ|x−y|^{−N}(x−y)`.
pub fn singular_grad_x(kappa: f64, x: &[f64], y: &[f64]) -> DVector<f64> {
    let n = x.len() as f64;
    let r2 = dist2(x, y);
    let c = -(n - 2.0) * kappa * r2.powf(-n / 2.0);
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| c * (a - b)))
}

/// `D²_xx S = (N−2)κ(N zzᵀ|z|^{−N−2} − I|z|^{−N})` with `z = x−y`;
/// `D_xD_y S = −D²_xx S` and `D²_yy S = D²_xx S`.
pub fn singular_hess_xx(kappa: f64, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let dim = x.len();
    let n = dim as f64;
    let z = DVector::from_iterator(dim, x.iter().zip(y).map(|(a, b)| a - b));
    let r2 = z.norm_squared();
    let c = (n - 2.0) * kappa;
    (&z * z.transpose()) * (c * n * r2.powf(-n / 2.0 - 1.0)) - DMatrix::identity(dim, dim) * (c * r2.powf(-n / 2.0))
}

/// Image-method kernel of the ball `B_a(c)`.
#[derive(Debug, Clone)]
pub struct BallKernel {
    n: usize,
    kappa: f64,
    center: Vec<f64>,
    radius: f64,
    shape: Shape,
}

pub fn ball_kernel(ctx: &DimensionContext, center: &[f64], radius: f64) -> Result<BallKernel, GreensError> {
    if center.len() != ctx.n {
        return Err(GreensError::DimensionMismatch { expected: ctx.n, got: center.len() });
    }
    let shape = Shape::Ball { center: center.to_vec(), radius };
    shape.validate()?;
    Ok(BallKernel { n: ctx.n, kappa: ctx.kappa(), center: center.to_vec(), radius, shape })
}

impl BallKernel {
    fn m(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| a - c).collect()
    }

    fn q(&self, xs: &[f64], ys: &[f64]) -> f64 {
        let a2 = self.radius * self.radius;
        dot(xs, xs) * dot(ys, ys) / a2 - 2.0 * dot(xs, ys) + a2
    }

    /// `∇_x Q`; swap the arguments for `∇_y Q`.
    fn q_grad_x(&self, xs: &[f64], ys: &[f64]) -> DVector<f64> {
        let a2 = self.radius * self.radius;
        let y2 = dot(ys, ys);
        DVector::from_iterator(xs.len(), xs.iter().zip(ys).map(|(a, b)| 2.0 * y2 * a / a2 - 2.0 * b))
    }

    fn prepared(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64), GreensError> {
        self.check_closed(x)?;
        self.check_closed(y)?;
        let (xs, ys) = (self.shifted(x), self.shifted(y));
        let q = self.q(&xs, &ys);
        if !(q > 0.0) {
            return Err(GreensError::NearDiagonal { distance: dist(x, y) });
        }
        Ok((xs, ys, q))
    }

    fn robin_parts(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let xs = self.shifted(x);
        let gap = self.radius * self.radius - dot(&xs, &xs);
        (xs, gap)
    }
}

impl DomainKernel for BallKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn shape(&self) -> &Shape {
        &self.shape
    }

    fn describe(&self) -> String {
        format!("ball(radius={}, center={:?})", self.radius, self.center)
    }

    fn regular(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError> {
        let (_, _, q) = self.prepared(x, y)?;
        Ok(self.kappa * q.powf(-self.m()))
    }

    fn regular_grad_x(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        let (xs, ys, q) = self.prepared(x, y)?;
        let m = self.m();
        Ok(self.q_grad_x(&xs, &ys) * (-m * self.kappa * q.powf(-m - 1.0)))
    }

    fn regular_grad_y(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        let (xs, ys, q) = self.prepared(x, y)?;
        let m = self.m();
        Ok(self.q_grad_x(&ys, &xs) * (-m * self.kappa * q.powf(-m - 1.0)))
    }

    fn regular_hess_xx(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        let (xs, ys, q) = self.prepared(x, y)?;
        let m = self.m();
        let g = self.q_grad_x(&xs, &ys);
        let a2 = self.radius * self.radius;
        let qxx = 2.0 * dot(&ys, &ys) / a2;
        Ok((&g * g.transpose()) * (self.kappa * m * (m + 1.0) * q.powf(-m - 2.0))
            - DMatrix::identity(self.n, self.n) * (self.kappa * m * q.powf(-m - 1.0) * qxx))
    }

    fn regular_hess_xy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        let (xs, ys, q) = self.prepared(x, y)?;
        let m = self.m();
        let gx = self.q_grad_x(&xs, &ys);
        let gy = self.q_grad_x(&ys, &xs);
        let a2 = self.radius * self.radius;
        let xv = DVector::from_column_slice(&xs);
        let yv = DVector::from_column_slice(&ys);
        let qxy = (&xv * yv.transpose()) * (4.0 / a2) - DMatrix::identity(self.n, self.n) * 2.0;
        Ok((&gx * gy.transpose()) * (self.kappa * m * (m + 1.0) * q.powf(-m - 2.0))
            - qxy * (self.kappa * m * q.powf(-m - 1.0)))
    }

    fn regular_hess_yy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.regular_hess_xx(y, x)
    }

    fn robin(&self, x: &[f64]) -> Result<f64, GreensError> {
        self.check_interior(x)?;
        let (_, gap) = self.robin_parts(x);
        let n = self.n as f64;
        Ok(self.kappa * (self.radius / gap).powf(n - 2.0))
    }

    fn robin_gradient(&self, x: &[f64]) -> Result<DVector<f64>, GreensError> {
        self.check_conditioning(x)?;
        let (xs, gap) = self.robin_parts(x);
        let n = self.n as f64;
        let c = self.kappa * self.radius.powf(n - 2.0) * (n - 2.0) * 2.0 * gap.powf(1.0 - n);
        Ok(DVector::from_iterator(self.n, xs.iter().map(|v| c * v)))
    }

    fn robin_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        self.check_conditioning(x)?;
        let (xs, gap) = self.robin_parts(x);
        let n = self.n as f64;
        let base = self.kappa * self.radius.powf(n - 2.0) * (n - 2.0);
        let xv = DVector::from_column_slice(&xs);
        Ok(DMatrix::identity(self.n, self.n) * (2.0 * base * gap.powf(1.0 - n))
            + (&xv * xv.transpose()) * (4.0 * (n - 1.0) * base * gap.powf(-n)))
    }
}

/// Any kernel behind a shared pointer.
impl<K: DomainKernel + ?Sized> DomainKernel for std::sync::Arc<K> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn kappa(&self) -> f64 {
        (**self).kappa()
    }
    fn shape(&self) -> &Shape {
        (**self).shape()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
    fn regular(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError> {
        (**self).regular(x, y)
    }
    fn regular_grad_x(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        (**self).regular_grad_x(x, y)
    }
    fn regular_grad_y(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>, GreensError> {
        (**self).regular_grad_y(x, y)
    }
    fn regular_hess_xx(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        (**self).regular_hess_xx(x, y)
    }
    fn regular_hess_xy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        (**self).regular_hess_xy(x, y)
    }
    fn regular_hess_yy(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        (**self).regular_hess_yy(x, y)
    }
    fn robin(&self, x: &[f64]) -> Result<f64, GreensError> {
        (**self).robin(x)
    }
    fn robin_gradient(&self, x: &[f64]) -> Result<DVector<f64>, GreensError> {
        (**self).robin_gradient(x)
    }
    fn robin_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>, GreensError> {
        (**self).robin_hessian(x)
    }
}

/// `y ↦ G(pole, y)` with gradient `∇_y G`.
pub struct GreenField<'a> {
    pub kernel: &'a dyn DomainKernel,
    pub pole: Vec<f64>,
}

impl crate::field::Field for GreenField<'_> {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.kernel.green(&self.pole, y).unwrap_or(f64::NAN)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        self.kernel
            .green_grad_y(&self.pole, y)
            .unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN))
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        match self.kernel.green_hess_yy(&self.pole, y) {
            Ok(h) => h.trace(),
            Err(_) => f64::NAN,
        }
    }
}

/// Which argument of `G` a derivative field differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// `y ↦ ∂G(x,y)/∂x_h` at `x = pole`.
    Pole,
    /// `y ↦ ∂G(x,y)/∂y_h`.
    Field,
}

/// A first derivative of `G(pole, ·)` in one coordinate of either slot.
pub struct GreenDerivativeField<'a> {
    pub kernel: &'a dyn DomainKernel,
    pub pole: Vec<f64>,
    pub coordinate: usize,
    pub slot: Slot,
}

impl crate::field::Field for GreenDerivativeField<'_> {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let g = match self.slot {
            Slot::Pole => self.kernel.green_grad_x(&self.pole, y),
            Slot::Field => self.kernel.green_grad_y(&self.pole, y),
        };
        g.map(|g| g[self.coordinate]).unwrap_or(f64::NAN)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        let h = match self.slot {
            Slot::Pole => self.kernel.green_hess_xy(&self.pole, y).map(|h| h.row(self.coordinate).transpose()),
            Slot::Field => self.kernel.green_hess_yy(&self.pole, y).map(|h| h.column(self.coordinate).into_owned()),
        };
        h.unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN))
    }
}

/// `y ↦ S(pole, y)`, the fundamental solution alone.
pub struct SingularField {
    pub dim: usize,
    pub kappa: f64,
    pub pole: Vec<f64>,
}

impl crate::field::Field for SingularField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.kappa * dist2(&self.pole, y).powf((2.0 - self.dim as f64) / 2.0)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        singular_grad_x(self.kappa, y, &self.pole)
    }
    fn laplacian(&self, _y: &[f64]) -> f64 {
        0.0
    }
}

/// A first derivative of `S(pole, ·)`, with the same slot convention as
/// [`GreenDerivativeField`].
pub struct SingularDerivativeField {
    pub dim: usize,
    pub kappa: f64,
    pub pole: Vec<f64>,
    pub coordinate: usize,
    pub slot: Slot,
}

impl SingularDerivativeField {
    fn sign(&self) -> f64 {
        match self.slot {
            Slot::Pole => -1.0,
            Slot::Field => 1.0,
        }
    }
}

impl crate::field::Field for SingularDerivativeField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.sign() * singular_grad_x(self.kappa, y, &self.pole)[self.coordinate]
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        singular_hess_xx(self.kappa, y, &self.pole).column(self.coordinate) * self.sign()
    }
    fn laplacian(&self, _y: &[f64]) -> f64 {
        0.0
    }
}

/// Distance from `x` to the boundary and to the nearest of `others`.
pub fn clearance(kernel: &dyn DomainKernel, x: &[f64], others: &[Vec<f64>]) -> f64 {
    others
        .iter()
        .filter(|o| dist(o, x) > 0.0)
        .map(|o| dist(o, x))
        .fold(kernel.shape().distance_to_boundary(x), f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_context;
    use std::f64::consts::PI;

    #[test]
    fn robin_at_centre() {
        let ctx = make_context(6).unwrap();
        let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
        assert!((k.robin(&[0.0; 6]).unwrap() - 1.0 / (4.0 * PI.powi(3))).abs() < 1e-15);
        assert!((k.regular(&[0.0; 6], &[0.0; 6]).unwrap() - 1.0 / (4.0 * PI.powi(3))).abs() < 1e-15);
        let h = k.robin_hessian(&[0.0; 6]).unwrap();
        assert!((h[(0, 0)] - 8.0 / (4.0 * PI.powi(3))).abs() < 1e-14);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn refusals() {
        let ctx = make_context(6).unwrap();
        let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
        let x = [0.1, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(k.green(&x, &x), Err(GreensError::NearDiagonal { .. })));
        let out = [1.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(k.green(&x, &out), Err(GreensError::OutsideDomain(_))));
        let edge = [1.0 - 1e-10, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(k.robin_gradient(&edge), Err(GreensError::NearBoundary { .. })));
        assert!(ball_kernel(&ctx, &[0.0; 6], -1.0).is_err());
    }
}
