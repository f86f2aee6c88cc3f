use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangle `[x0,x1]×[y0,y1]` cut into `nx×ny` square cells of edge `h`.
///
/// Scalar fields live on the `(nx+1)×(ny+1)` grid points; points on the
/// outer boundary carry the Dirichlet value. Each cell is split along its
/// anti-diagonal into two right triangles, and cellwise quantities
/// (gradients, modular densities, coefficients) are stored per triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct GridDomain {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    extent: [f64; 4],
    nx: usize,
    ny: usize,
}

impl TryFrom<RawDomain> for GridDomain {
    type Error = Error;
    fn try_from(raw: RawDomain) -> Result<Self> {
        let [x0, x1, y0, y1] = raw.extent;
        GridDomain::new(x0, x1, y0, y1, raw.nx, raw.ny)
    }
}

impl From<GridDomain> for RawDomain {
    fn from(d: GridDomain) -> Self {
        RawDomain {
            extent: [d.x0, d.x1, d.y0, d.y1],
            nx: d.nx,
            ny: d.ny,
        }
    }
}

impl GridDomain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::Input("non-finite extent".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Input("empty extent".into()));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::Input("need at least 2 cells per side".into()));
        }
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(Error::Input(format!("cells are not square: {hx} vs {hy}")));
        }
        Ok(GridDomain {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
            h: hx,
        })
    }

    /// Unit square with `n×n` cells.
    pub fn unit_square(n: usize) -> Self {
        GridDomain::new(0.0, 1.0, 0.0, 1.0, n, n).expect("valid unit square")
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn extent(&self) -> [f64; 4] {
        [self.x0, self.x1, self.y0, self.y1]
    }
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
    /// Radius of the ball about the center with respect to which the
    /// rectangle is star-shaped: half the shorter edge.
    pub fn star_radius(&self) -> f64 {
        0.5 * self.width().min(self.height())
    }

    /// Same rectangle scaled by `factor` about its center, same cell counts.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let [cx, cy] = self.center();
        GridDomain::new(
            cx + factor * (self.x0 - cx),
            cx + factor * (self.x1 - cx),
            cy + factor * (self.y0 - cy),
            cy + factor * (self.y1 - cy),
            self.nx,
            self.ny,
        )
    }

    /// Same rectangle with `factor` times as many cells per side.
    pub fn refined(&self, factor: usize) -> Self {
        GridDomain::new(
            self.x0,
            self.x1,
            self.y0,
            self.y1,
            self.nx * factor,
            self.ny * factor,
        )
        .expect("refinement keeps cells square")
    }

    // ---- grid points ----

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n % (self.nx + 1), n / (self.nx + 1))
    }
    pub fn node_point(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(n);
        [self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h]
    }
    pub fn is_boundary_node(&self, n: usize) -> bool {
        let (i, j) = self.node_ij(n);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }
    /// Area of the control volume of a grid point (half/quarter cells on the
    /// boundary), so that the weights sum to the rectangle area.
    pub fn node_weight(&self, n: usize) -> f64 {
        let (i, j) = self.node_ij(n);
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.h * self.h
    }

    // ---- cells ----

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }
    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(c);
        [
            self.x0 + (i as f64 + 0.5) * self.h,
            self.y0 + (j as f64 + 0.5) * self.h,
        ]
    }
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Grid points of triangle `layer` (0 = lower-left, 1 = upper-right) of
    /// cell `c`. The first entry is the right-angle vertex.
    pub fn triangle_nodes(&self, c: usize, layer: usize) -> [usize; 3] {
        let (i, j) = self.cell_ij(c);
        if layer == 0 {
            [
                self.node_index(i, j),
                self.node_index(i + 1, j),
                self.node_index(i, j + 1),
            ]
        } else {
            [
                self.node_index(i + 1, j + 1),
                self.node_index(i, j + 1),
                self.node_index(i + 1, j),
            ]
        }
    }

    /// Index of the cell containing point `p` (clamped to the grid).
    pub fn locate_cell(&self, p: [f64; 2]) -> usize {
        let i = (((p[0] - self.x0) / self.h).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p[1] - self.y0) / self.h).floor().max(0.0) as usize).min(self.ny - 1);
        self.cell_index(i, j)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_weights_sum_to_the_area() {
        let d = GridDomain::new(-1.0, 2.0, 0.0, 1.5, 6, 3).unwrap();
        let total: f64 = (0..d.num_nodes()).map(|n| d.node_weight(n)).sum();
        assert!((total - d.area()).abs() < 1e-12);
    }

    #[test]
    fn non_square_cells_are_rejected() {
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 4, 5).is_err());
    }

    #[test]
    fn located_cell_contains_the_point() {
        let d = GridDomain::unit_square(8);
        for p in [[0.01, 0.99], [0.5, 0.5], [0.999, 0.0], [0.3, 0.71]] {
            let [x, y] = d.cell_center(d.locate_cell(p));
            assert!(
                (x - p[0]).abs() <= 0.5 * d.h() + 1e-12 && (y - p[1]).abs() <= 0.5 * d.h() + 1e-12
            );
        }
    }
}
