use crate::error::{Error, Result};
use crate::fields::GridDomain;

/// Values on the grid points of a [`GridDomain`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    domain: GridDomain,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.num_nodes() {
            return Err(Error::Input(format!(
                "expected {} grid values, got {}",
                domain.num_nodes(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite field value".into()));
        }
        Ok(ScalarField { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        ScalarField {
            domain,
            values: vec![0.0; domain.num_nodes()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(domain: GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.num_nodes())
            .map(|n| f(domain.node_point(n)))
            .collect();
        ScalarField { domain, values }
    }

    /// Samples `f` at interior grid points and sets the boundary to zero.
    pub fn dirichlet_from_fn(domain: GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.num_nodes())
            .map(|n| {
                if domain.is_boundary_node(n) {
                    0.0
                } else {
                    f(domain.node_point(n))
                }
            })
            .collect();
        ScalarField { domain, values }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        (0..self.values.len()).all(|n| !self.domain.is_boundary_node(n) || self.values[n] == 0.0)
    }

    /// `∫ f` with control-volume weights.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| v * self.domain.node_weight(n))
            .sum()
    }

    /// `∫ g(f)` with control-volume weights.
    pub fn integral_of(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(n, &v)| g(v) * self.domain.node_weight(n))
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.integral_of(f64::abs)
    }

    pub fn lp_distance(&self, other: &ScalarField, p: f64) -> Result<f64> {
        check_same(&self.domain, &other.domain)?;
        let s: f64 = (0..self.values.len())
            .map(|n| (self.values[n] - other.values[n]).abs().powf(p) * self.domain.node_weight(n))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation of the grid values at `p`; zero outside the rectangle.
    pub fn interpolate(&self, p: [f64; 2]) -> f64 {
        let d = &self.domain;
        let [x0, x1, y0, y1] = d.extent();
        if p[0] < x0 || p[0] > x1 || p[1] < y0 || p[1] > y1 {
            return 0.0;
        }
        let fx = (p[0] - x0) / d.h();
        let fy = (p[1] - y0) / d.h();
        let i = (fx.floor() as usize).min(d.nx() - 1);
        let j = (fy.floor() as usize).min(d.ny() - 1);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v = |a: usize, b: usize| self.values[d.node_index(a, b)];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

/// Vectors per cell; `layers` vectors per cell, each carrying an equal share
/// of the cell area. Gradients have two layers (one per triangle).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    domain: GridDomain,
    layers: usize,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn new(domain: GridDomain, layers: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if layers == 0 || values.len() != layers * domain.num_cells() {
            return Err(Error::Input(format!(
                "expected {}×{} cell vectors, got {}",
                layers,
                domain.num_cells(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::Input("non-finite vector value".into()));
        }
        Ok(VectorField {
            domain,
            layers,
            values,
        })
    }

    pub fn zeros(domain: GridDomain, layers: usize) -> Self {
        VectorField {
            domain,
            layers,
            values: vec![[0.0; 2]; layers * domain.num_cells()],
        }
    }

    /// One vector per cell, `f` sampled at cell centers.
    pub fn from_fn(domain: GridDomain, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let values = (0..domain.num_cells())
            .map(|c| f(domain.cell_center(c)))
            .collect();
        VectorField {
            domain,
            layers: 1,
            values,
        }
    }

    pub fn constant(domain: GridDomain, v: [f64; 2]) -> Self {
        VectorField {
            domain,
            layers: 1,
            values: vec![v; domain.num_cells()],
        }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn layers(&self) -> usize {
        self.layers
    }
    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }
    /// Cell index of flat entry `k`.
    pub fn cell_of(&self, k: usize) -> usize {
        k % self.domain.num_cells()
    }
    /// Quadrature weight of one entry.
    pub fn entry_weight(&self) -> f64 {
        self.domain.cell_area() / self.layers as f64
    }

    pub fn scale(&self, a: f64) -> VectorField {
        self.map(|v| [a * v[0], a * v[1]])
    }

    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> VectorField {
        VectorField {
            domain: self.domain,
            layers: self.layers,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
    ) -> Result<VectorField> {
        self.check_compatible(other)?;
        Ok(VectorField {
            domain: self.domain,
            layers: self.layers,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| [a[0] - b[0], a[1] - b[1]])
    }

    /// `∫ ξ·η`.
    pub fn dot_integral(&self, other: &VectorField) -> Result<f64> {
        self.check_compatible(other)?;
        let w = self.entry_weight();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum::<f64>()
            * w)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v[0].hypot(v[1])).sum::<f64>() * self.entry_weight()
    }

    pub(crate) fn check_compatible(&self, other: &VectorField) -> Result<()> {
        check_same(&self.domain, &other.domain)?;
        if self.layers != other.layers {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }
}

pub(crate) fn check_same(a: &GridDomain, b: &GridDomain) -> Result<()> {
    if a != b {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// Cellwise values with quadrature weights, the common input of integral
/// diagnostics that do not care where the values came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Density {
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }
}

impl From<&ScalarField> for Density {
    fn from(f: &ScalarField) -> Self {
        let d = f.domain();
        Density {
            values: f.values().to_vec(),
            weights: (0..d.num_nodes()).map(|n| d.node_weight(n)).collect(),
        }
    }
}

/// Piecewise-linear gradient on the two triangles of every cell.
///
/// Layer 0 uses forward differences from the lower-left corner, layer 1
/// backward differences from the upper-right corner. For `p = 2` the
/// resulting energy is the 5-point Laplacian.
pub fn gradient(u: &ScalarField) -> VectorField {
    let d = *u.domain();
    let h = d.h();
    let nc = d.num_cells();
    let v = u.values();
    let mut out = vec![[0.0; 2]; 2 * nc];
    for c in 0..nc {
        let (i, j) = d.cell_ij(c);
        let a = v[d.node_index(i, j)];
        let b = v[d.node_index(i + 1, j)];
        let e = v[d.node_index(i, j + 1)];
        let f = v[d.node_index(i + 1, j + 1)];
        out[c] = [(b - a) / h, (e - a) / h];
        out[nc + c] = [(f - e) / h, (f - b) / h];
    }
    VectorField {
        domain: d,
        layers: 2,
        values: out,
    }
}

/// Transpose of [`gradient`] against the quadrature: entry `n` of the result
/// is `∫ q·∇φ_n` for the hat function `φ_n` of grid point `n`.
pub fn weak_divergence(q: &VectorField) -> Vec<f64> {
    let d = *q.domain();
    assert_eq!(q.layers(), 2, "weak divergence needs a two-layer field");
    let h = d.h();
    let nc = d.num_cells();
    // triangle area h²/2 times the ±1/h difference weight
    let w = 0.5 * h;
    let qv = q.values();
    let mut out = vec![0.0; d.num_nodes()];
    for c in 0..nc {
        let (i, j) = d.cell_ij(c);
        let a = d.node_index(i, j);
        let b = d.node_index(i + 1, j);
        let e = d.node_index(i, j + 1);
        let f = d.node_index(i + 1, j + 1);
        let [p0, p1] = qv[c];
        out[b] += w * p0;
        out[a] -= w * (p0 + p1);
        out[e] += w * p1;
        let [r0, r1] = qv[nc + c];
        out[f] += w * (r0 + r1);
        out[e] -= w * r0;
        out[b] -= w * r1;
    }
    out
}
