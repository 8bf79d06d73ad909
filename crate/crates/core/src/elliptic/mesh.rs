use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical coordinates; the second component is 0 on 1D meshes.
pub type Point = [f64; 2];

/// Uniform grid along one axis with `nodes` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes + 1) as f64
    }

    /// Coordinate of grid line `i`, where 0 and `nodes + 1` are the boundary.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        if i == self.nodes + 1 {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(Error::InvalidMesh(format!("{name}-range must satisfy lo < hi")));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidMesh(format!(
                "{name}-axis needs at least 2 interior nodes, got {}",
                self.nodes
            )));
        }
        Ok(())
    }
}

/// Interval or axis-aligned rectangle with homogeneous Dirichlet boundary.
/// Degrees of freedom live on interior nodes only, ordered x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMesh {
    axes: Vec<Axis>,
}

impl SpatialMesh {
    pub fn interval(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        let x = Axis { lo, hi, nodes };
        x.validate("x")?;
        Ok(SpatialMesh { axes: vec![x] })
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let ax = Axis { lo: x.0, hi: x.1, nodes: nx };
        let ay = Axis { lo: y.0, hi: y.1, nodes: ny };
        ax.validate("x")?;
        ay.validate("y")?;
        Ok(SpatialMesh { axes: vec![ax, ay] })
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dofs(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    /// Cell measure attached to every node by the lumped mass.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|a| a.hi - a.lo).product()
    }

    /// Linear index of interior node (ix, iy), both 1-based grid-line indices.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        match self.axes.len() {
            1 => ix - 1,
            _ => (iy - 1) * self.axes[0].nodes + (ix - 1),
        }
    }

    /// Grid-line indices (ix, iy) of degree of freedom `i` (iy = 0 in 1D).
    #[inline]
    pub fn grid_indices(&self, i: usize) -> (usize, usize) {
        match self.axes.len() {
            1 => (i + 1, 0),
            _ => {
                let nx = self.axes[0].nodes;
                (i % nx + 1, i / nx + 1)
            }
        }
    }

    pub fn node(&self, i: usize) -> Point {
        let (ix, iy) = self.grid_indices(i);
        match self.axes.len() {
            1 => [self.axes[0].coord(ix), 0.0],
            _ => [self.axes[0].coord(ix), self.axes[1].coord(iy)],
        }
    }

    pub fn nodes(&self) -> Vec<Point> {
        (0..self.dofs()).map(|i| self.node(i)).collect()
    }

    /// Every boundary grid node.
    pub fn boundary_nodes(&self) -> Vec<Point> {
        match self.axes.len() {
            1 => vec![[self.axes[0].lo, 0.0], [self.axes[0].hi, 0.0]],
            _ => {
                let (ax, ay) = (self.axes[0], self.axes[1]);
                let mut pts = Vec::new();
                for ix in 0..=ax.nodes + 1 {
                    pts.push([ax.coord(ix), ay.lo]);
                    pts.push([ax.coord(ix), ay.hi]);
                }
                for iy in 1..=ay.nodes {
                    pts.push([ax.lo, ay.coord(iy)]);
                    pts.push([ax.hi, ay.coord(iy)]);
                }
                pts
            }
        }
    }
}

/// Nodal values on the interior degrees of freedom of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialField {
    pub values: Vec<f64>,
}

impl SpatialField {
    pub fn new(mesh: &SpatialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.dofs() {
            return Err(Error::LengthMismatch {
                expected: mesh.dofs(),
                got: values.len(),
            });
        }
        Ok(SpatialField { values })
    }

    pub fn zeros(mesh: &SpatialMesh) -> Self {
        SpatialField {
            values: vec![0.0; mesh.dofs()],
        }
    }

    pub fn sample(mesh: &SpatialMesh, f: impl Fn(Point) -> f64) -> Self {
        SpatialField {
            values: (0..mesh.dofs()).map(|i| f(mesh.node(i))).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpatialField {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Maximum nodal distance to another field.
    pub fn sup_distance(&self, other: &SpatialField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
