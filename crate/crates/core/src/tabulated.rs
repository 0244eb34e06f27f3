//! Regular parts `H` read from a tensor-grid table.
//!
//! File layout, all integers and floats little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 7 | ASCII `SPKGRN1` |
//! | 7 | 1 | reserved, must be 0 |
//! | 8 | 4 | `u32` dimension N |
//! | 12 | 4 | `u32` shape id: 0 ball, 1 axis-aligned box |
//! | 16 | 4N | `u32` nodes per coordinate axis, `d_1..d_N`, each ≥ 2 |
//! | 16+4N | 8P | `f64` shape parameters: ball `c_1..c_N, radius` (P = N+1); box `lo_1..lo_N, hi_1..hi_N` (P = 2N) |
//! | … | 16N | `f64` grid bounds `lo_1, hi_1, …, lo_N, hi_N` |
//! | … | 8M² | `f64` samples, M = d_1⋯d_N |
//!
//! The same grid is used for both arguments. Sample `(i, j)` holds
//! `H(x_i, y_j)` at flat offset `i·M + j`, where the multi-index of a
//! grid node is flattened row-major (coordinate N varies fastest). Nodes
//! along coordinate `a` are `lo_a + t·(hi_a − lo_a)/(d_a − 1)`.

use std::path::Path;

use serde::Serialize;

use crate::bubble::DimensionContext;
use crate::greens::{DomainKernel, GreensError, Shape};

pub const MAGIC: &[u8; 7] = b"SPKGRN1";
/// Largest `|H(x,y) − H(y,x)|` accepted at grid nodes.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Multilinear,
}

#[derive(Debug, Clone)]
pub struct TabulatedKernel {
    n: usize,
    kappa: f64,
    shape: Shape,
    nodes: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
    order: Interpolation,
    error_estimate: f64,
    max_asymmetry: f64,
}

/// Grid description used when writing a table.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nodes: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridSpec {
    pub fn cube(n: usize, nodes: usize, half_width: f64) -> Self {
        GridSpec { nodes: vec![nodes; n], lower: vec![-half_width; n], upper: vec![half_width; n] }
    }

    fn count(&self) -> usize {
        self.nodes.iter().product()
    }

    fn node(&self, mut flat: usize, out: &mut [f64]) {
        for a in (0..self.nodes.len()).rev() {
            let d = self.nodes[a];
            let t = flat % d;
            flat /= d;
            out[a] = self.lower[a] + t as f64 * (self.upper[a] - self.lower[a]) / (d - 1) as f64;
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize, what: &str) -> Result<&[u8], GreensError> {
        if self.pos + len > self.bytes.len() {
            return Err(GreensError::Format(format!("truncated while reading {what} at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, GreensError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, GreensError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl TabulatedKernel {
    pub fn load(ctx: &DimensionContext, path: &Path, order: Interpolation) -> Result<Self, GreensError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(ctx, &bytes, order)
    }

    pub fn from_bytes(ctx: &DimensionContext, bytes: &[u8], order: Interpolation) -> Result<Self, GreensError> {
        if bytes.is_empty() {
            return Err(GreensError::Format("empty file".into()));
        }
        let mut r = Reader { bytes, pos: 0 };
        if r.take(7, "magic")? != MAGIC {
            return Err(GreensError::Format("bad magic, expected SPKGRN1".into()));
        }
        if r.take(1, "reserved byte")?[0] != 0 {
            return Err(GreensError::Format("reserved byte must be 0".into()));
        }
        let n = r.u32("dimension")? as usize;
        if n != ctx.n {
            return Err(GreensError::Format(format!("table is for N = {n}, context has N = {}", ctx.n)));
        }
        let shape_id = r.u32("shape id")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let d = r.u32("grid dims")? as usize;
            if d < 2 {
                return Err(GreensError::Format("every axis needs at least 2 nodes".into()));
            }
            nodes.push(d);
        }
        let shape = match shape_id {
            0 => {
                let center = (0..n).map(|_| r.f64("ball centre")).collect::<Result<Vec<_>, _>>()?;
                let radius = r.f64("ball radius")?;
                Shape::Ball { center, radius }
            }
            1 => {
                let lower = (0..n).map(|_| r.f64("box lower")).collect::<Result<Vec<_>, _>>()?;
                let upper = (0..n).map(|_| r.f64("box upper")).collect::<Result<Vec<_>, _>>()?;
                Shape::Box { lower, upper }
            }
            other => return Err(GreensError::Format(format!("unknown shape id {other}"))),
        };
        shape.validate().map_err(|e| GreensError::Format(e.to_string()))?;
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for _ in 0..n {
            let lo = r.f64("grid bounds")?;
            let hi = r.f64("grid bounds")?;
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GreensError::Format("grid bounds need lo < hi".into()));
            }
            lower.push(lo);
            upper.push(hi);
        }
        let m: usize = nodes
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| GreensError::Format("grid too large".into()))?;
        let total = m.checked_mul(m).ok_or_else(|| GreensError::Format("grid too large".into()))?;
        let remaining = bytes.len() - r.pos;
        if remaining != total * 8 {
            return Err(GreensError::Format(format!(
                "expected {} sample bytes, found {remaining}",
                total * 8
            )));
        }
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            let v = r.f64("samples")?;
            if !v.is_finite() {
                return Err(GreensError::Format("non-finite sample".into()));
            }
            values.push(v);
        }
        let mut max_asymmetry = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                max_asymmetry = max_asymmetry.max((values[i * m + j] - values[j * m + i]).abs());
            }
        }
        if max_asymmetry > SYMMETRY_TOL {
            return Err(GreensError::Asymmetric { max_asymmetry });
        }
        let mut k = TabulatedKernel {
            n,
            kappa: ctx.kappa(),
            shape,
            nodes,
            lower,
            upper,
            values,
            order,
            error_estimate: 0.0,
            max_asymmetry,
        };
        k.error_estimate = k.estimate_error();
        Ok(k)
    }

    /// Samples `H` of another kernel on a grid and encodes the table.
    pub fn encode(kernel: &dyn DomainKernel, grid: &GridSpec) -> Result<Vec<u8>, GreensError> {
        let n = kernel.dim();
        if grid.nodes.len() != n || grid.lower.len() != n || grid.upper.len() != n {
            return Err(GreensError::DimensionMismatch { expected: n, got: grid.nodes.len() });
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(0);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        let (id, params): (u32, Vec<f64>) = match kernel.shape() {
            Shape::Ball { center, radius } => (0, center.iter().copied().chain([*radius]).collect()),
            Shape::Box { lower, upper } => (1, lower.iter().chain(upper).copied().collect()),
        };
        out.extend_from_slice(&id.to_le_bytes());
        for d in &grid.nodes {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        for a in 0..n {
            out.extend_from_slice(&grid.lower[a].to_le_bytes());
            out.extend_from_slice(&grid.upper[a].to_le_bytes());
        }
        let m = grid.count();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..m {
            grid.node(i, &mut x);
            for j in 0..m {
                grid.node(j, &mut y);
                out.extend_from_slice(&kernel.regular(&x, &y)?.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn order(&self) -> Interpolation {
        self.order
    }

    /// A-priori bound on the interpolation error from the tabulated data:
    /// `Σ_axes max|Δ²H|/8` for multilinear, `Σ_axes max|ΔH|/2` for nearest,
    /// summed over all 2N axes of Ω×Ω.
    pub fn interpolation_error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    fn count(&self) -> usize {
        self.nodes.iter().product()
    }

    /// Strides of the 2N-axis table, axis order `x_1..x_N, y_1..y_N`.
    fn strides(&self) -> Vec<usize> {
        let dims: Vec<usize> = self.nodes.iter().chain(&self.nodes).copied().collect();
        let mut s = vec![1usize; dims.len()];
        for a in (0..dims.len() - 1).rev() {
            s[a] = s[a + 1] * dims[a + 1];
        }
        s
    }

    fn estimate_error(&self) -> f64 {
        let dims: Vec<usize> = self.nodes.iter().chain(&self.nodes).copied().collect();
        let strides = self.strides();
        let total = self.values.len();
        let mut sum = 0.0;
        for a in 0..dims.len() {
            let st = strides[a];
            let mut worst = 0.0f64;
            for flat in 0..total {
                let t = (flat / st) % dims[a];
                match self.order {
                    Interpolation::Multilinear => {
                        if t >= 1 && t + 1 < dims[a] {
                            let d2 = self.values[flat + st] - 2.0 * self.values[flat] + self.values[flat - st];
                            worst = worst.max(d2.abs());
                        }
                    }
                    Interpolation::Nearest => {
                        if t + 1 < dims[a] {
                            worst = worst.max((self.values[flat + st] - self.values[flat]).abs());
                        }
                    }
                }
            }
            sum += match self.order {
                Interpolation::Multilinear => worst / 8.0,
                Interpolation::Nearest => worst / 2.0,
            };
        }
        sum
    }

    fn interpolate(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError> {
        let n = self.n;
        let mut base = [0usize; 64];
        let mut frac = [0f64; 64];
        for (a, v) in x.iter().chain(y).enumerate() {
            let c = a % n;
            let (lo, hi, d) = (self.lower[c], self.upper[c], self.nodes[c]);
            let tol = 1e-12 * (hi - lo);
            if *v < lo - tol || *v > hi + tol {
                let p: Vec<f64> = if a < n { x.to_vec() } else { y.to_vec() };
                return Err(GreensError::OutsideTable(p));
            }
            let u = ((v - lo) / (hi - lo) * (d - 1) as f64).clamp(0.0, (d - 1) as f64);
            let i = (u.floor() as usize).min(d - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let strides = self.strides();
        let axes = 2 * n;
        match self.order {
            Interpolation::Nearest => {
                let flat: usize =
                    (0..axes).map(|a| (base[a] + usize::from(frac[a] >= 0.5)) * strides[a]).sum();
                Ok(self.values[flat])
            }
            Interpolation::Multilinear => {
                let mut acc = 0.0;
                for corner in 0..(1usize << axes) {
                    let mut w = 1.0;
                    let mut flat = 0;
                    for a in 0..axes {
                        let bit = (corner >> a) & 1;
                        w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                        flat += (base[a] + bit) * strides[a];
                    }
                    if w != 0.0 {
                        acc += w * self.values[flat];
                    }
                }
                Ok(acc)
            }
        }
    }
}

impl DomainKernel for TabulatedKernel {
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
        format!(
            "tabulated({:?}, nodes={:?}, order={:?}, error_estimate={:e})",
            self.shape,
            self.nodes,
            self.order,
            self.error_estimate
        )
    }

    fn regular(&self, x: &[f64], y: &[f64]) -> Result<f64, GreensError> {
        self.check_closed(x)?;
        self.check_closed(y)?;
        self.interpolate(x, y)
    }
}

impl TabulatedKernel {
    pub fn node_count(&self) -> usize {
        self.count()
    }
}
