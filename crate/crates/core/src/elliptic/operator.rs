use serde::Serialize;

use super::diffusion::DiffusionField;
use super::mesh::{SpatialField, SpatialMesh};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;

/// Symmetric sparse matrix over the interior degrees of freedom (CSR).
#[derive(Debug, Clone, Serialize)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
    positive_definite: bool,
}

impl SparseOperator {
    /// Builds from triplets; duplicates are summed in insertion order.
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // Stable sort keeps the summation order of duplicates.
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = SparseOperator {
            n,
            row_ptr,
            cols,
            vals,
            symmetric: false,
            positive_definite: false,
        };
        op.symmetric = op.is_bitwise_symmetric();
        op
    }

    pub fn diagonal_matrix(values: Vec<f64>) -> Self {
        let n = values.len();
        let pd = values.iter().all(|&v| v > 0.0);
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: values,
            symmetric: true,
            positive_definite: pd,
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive_definite
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(c, _)| c == i))
    }

    /// Transposed entries are bitwise equal.
    pub fn is_bitwise_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.entry(j, i).to_bits() == v.to_bits()))
    }

    /// (sub, diag, super) bands if the pattern is tridiagonal.
    pub fn tridiagonal_bands(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.n;
        if (0..n).any(|i| self.row(i).any(|(c, _)| c + 1 < i || c > i + 1)) {
            return None;
        }
        let sub = (1..n).map(|i| self.entry(i, i - 1)).collect();
        let sup = (0..n.saturating_sub(1)).map(|i| self.entry(i, i + 1)).collect();
        Some((sub, self.diagonal(), sup))
    }

    /// y = A x
    pub fn apply_into(&self, x: &[f64], y: &mut [f64], policy: ExecPolicy) {
        debug_assert_eq!(x.len(), self.n);
        policy.for_each_chunk_mut(y, |offset, out| {
            for (j, yi) in out.iter_mut().enumerate() {
                let i = offset + j;
                let mut s = 0.0;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[p] * x[self.cols[p]];
                }
                *yi = s;
            }
        });
    }

    pub fn apply(&self, x: &[f64], policy: ExecPolicy) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y, policy);
        y
    }

    /// uᵀ A v
    pub fn bilinear(&self, u: &[f64], v: &[f64], policy: ExecPolicy) -> f64 {
        policy.sum(self.n, |i| {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * v[self.cols[p]];
            }
            u[i] * s
        })
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// c·D + self for a diagonal operator D on the same dofs.
    pub fn shifted(&self, c: f64, diag_op: &SparseOperator) -> Result<SparseOperator> {
        if diag_op.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: diag_op.n,
            });
        }
        if !diag_op.is_diagonal() {
            return Err(Error::Domain("shift operator must be diagonal".into()));
        }
        let d = diag_op.diagonal();
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            let p = (out.row_ptr[i]..out.row_ptr[i + 1])
                .find(|&p| out.cols[p] == i)
                .ok_or_else(|| Error::Domain(format!("missing diagonal entry in row {i}")))?;
            out.vals[p] += c * di;
        }
        out.positive_definite = self.positive_definite && diag_op.positive_definite && c >= 0.0;
        Ok(out)
    }

    /// Positive-definiteness probe: LDLᵀ pivots for tridiagonal patterns,
    /// otherwise curvature pᵀAp of every conjugate-gradient search direction.
    fn probe_positive_definite(&self) -> std::result::Result<(), String> {
        if let Some((sub, diag, sup)) = self.tridiagonal_bands() {
            let mut pivot = diag[0];
            if pivot <= 0.0 {
                return Err(format!("non-positive pivot {pivot} in row 0"));
            }
            for i in 1..self.n {
                pivot = diag[i] - sub[i - 1] * sup[i - 1] / pivot;
                if pivot <= 0.0 {
                    return Err(format!("non-positive pivot {pivot} in row {i}"));
                }
            }
            return Ok(());
        }
        if let Some(i) = (0..self.n).find(|&i| self.entry(i, i) <= 0.0) {
            return Err(format!("non-positive diagonal entry in row {i}"));
        }
        let policy = ExecPolicy::default();
        let b: Vec<f64> = (0..self.n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_7).fract() - 0.5).collect();
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; self.n];
        let mut rr = policy.dot(&r, &r);
        let b_norm = rr.sqrt();
        for it in 0..(20 * self.n).max(50) {
            self.apply_into(&p, &mut ap, policy);
            let pap = policy.dot(&p, &ap);
            let pp = policy.dot(&p, &p);
            if pap <= 1e-14 * pp * self.norm_inf() {
                return Err(format!("non-positive curvature {pap:e} at probe iteration {it}"));
            }
            let step = rr / pap;
            for i in 0..self.n {
                r[i] -= step * ap[i];
            }
            let rr_new = policy.dot(&r, &r);
            if rr_new.sqrt() <= 1e-10 * b_norm {
                return Ok(());
            }
            let beta = rr_new / rr;
            for i in 0..self.n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        Ok(())
    }
}

/// Triplet builder that records each off-diagonal contribution for both
/// (p,q) and (q,p) back to back, so the assembled matrix is bitwise symmetric.
struct SymmetricTriplets {
    items: Vec<(usize, usize, f64)>,
}

impl SymmetricTriplets {
    fn add(&mut self, p: usize, q: usize, v: f64) {
        if p == q {
            self.items.push((p, p, v));
        } else {
            self.items.push((p, q, v));
            self.items.push((q, p, v));
        }
    }
}

/// Stiffness operator of −div(a∇·).
///
/// 1D: P1 elements, a sampled at element midpoints, rows scaled like
/// (−1, 2, −1)/Δx for a ≡ 1. 2D: flux finite differences with a11 (a22) at
/// x-face (y-face) midpoints and the mixed term a12 applied to cell-centre
/// gradients, all weighted by the cell area ΔxΔy.
pub fn assemble_stiffness(mesh: &SpatialMesh, a: &DiffusionField) -> Result<SparseOperator> {
    let mut t = SymmetricTriplets { items: Vec::new() };
    match mesh.dimension() {
        1 => {
            let ax = mesh.axis(0);
            let (n, dx) = (ax.nodes, ax.spacing());
            // Element e spans grid lines e and e+1; dof i sits on line i+1.
            for e in 0..=n {
                let mid = ax.lo + (e as f64 + 0.5) * dx;
                let k = a.checked([mid, 0.0], 1)?[0][0] / dx;
                let left = (e >= 1).then(|| e - 1);
                let right = (e < n).then_some(e);
                if let Some(l) = left {
                    t.add(l, l, k);
                }
                if let Some(r) = right {
                    t.add(r, r, k);
                }
                if let (Some(l), Some(r)) = (left, right) {
                    t.add(l, r, -k);
                }
            }
        }
        2 => assemble_2d(mesh, a, &mut t)?,
        d => return Err(Error::InvalidMesh(format!("unsupported dimension {d}"))),
    }
    let mut op = SparseOperator::from_triplets(mesh.dofs(), t.items);
    if !op.symmetric {
        return Err(Error::InvalidCoefficients("assembled stiffness is not symmetric".into()));
    }
    op.probe_positive_definite()
        .map_err(|e| Error::InvalidCoefficients(format!("stiffness not positive definite: {e}")))?;
    op.positive_definite = true;
    Ok(op)
}

fn assemble_2d(mesh: &SpatialMesh, a: &DiffusionField, t: &mut SymmetricTriplets) -> Result<()> {
    let (ax, ay) = (*mesh.axis(0), *mesh.axis(1));
    let (nx, ny) = (ax.nodes, ay.nodes);
    let (dx, dy) = (ax.spacing(), ay.spacing());
    let area = dx * dy;
    let dof = |ix: usize, iy: usize| -> Option<usize> {
        (ix >= 1 && ix <= nx && iy >= 1 && iy <= ny).then(|| mesh.index(ix, iy))
    };
    let mut edge = |p: Option<usize>, q: Option<usize>, k: f64| {
        if let Some(p) = p {
            t.add(p, p, k);
        }
        if let Some(q) = q {
            t.add(q, q, k);
        }
        if let (Some(p), Some(q)) = (p, q) {
            t.add(p, q, -k);
        }
    };
    // x-faces: between (ix, iy) and (ix+1, iy)
    for iy in 1..=ny {
        for ix in 0..=nx {
            let mid = [ax.lo + (ix as f64 + 0.5) * dx, ay.coord(iy)];
            let k = a.checked(mid, 2)?[0][0] * area / (dx * dx);
            edge(dof(ix, iy), dof(ix + 1, iy), k);
        }
    }
    // y-faces: between (ix, iy) and (ix, iy+1)
    for ix in 1..=nx {
        for iy in 0..=ny {
            let mid = [ax.coord(ix), ay.lo + (iy as f64 + 0.5) * dy];
            let k = a.checked(mid, 2)?[1][1] * area / (dy * dy);
            edge(dof(ix, iy), dof(ix, iy + 1), k);
        }
    }
    // Mixed derivative on cells with corners (ix..ix+1, iy..iy+1).
    for iy in 0..=ny {
        for ix in 0..=nx {
            let centre = [ax.lo + (ix as f64 + 0.5) * dx, ay.lo + (iy as f64 + 0.5) * dy];
            let a12 = a.checked(centre, 2)?[0][1];
            if a12 == 0.0 {
                continue;
            }
            let corners = [(ix, iy), (ix + 1, iy), (ix, iy + 1), (ix + 1, iy + 1)];
            let gx = [-0.5 / dx, 0.5 / dx, -0.5 / dx, 0.5 / dx];
            let gy = [-0.5 / dy, -0.5 / dy, 0.5 / dy, 0.5 / dy];
            let w = area * a12;
            for (p, &(px, py)) in corners.iter().enumerate() {
                let Some(dp) = dof(px, py) else { continue };
                for (q, &(qx, qy)) in corners.iter().enumerate().skip(p) {
                    let Some(dq) = dof(qx, qy) else { continue };
                    let v = w * (gx[p] * gy[q] + gy[p] * gx[q]);
                    t.add(dp, dq, v);
                }
            }
        }
    }
    Ok(())
}

/// Lumped mass: cell measure on the diagonal.
pub fn assemble_mass(mesh: &SpatialMesh) -> SparseOperator {
    SparseOperator::diagonal_matrix(vec![mesh.cell_volume(); mesh.dofs()])
}

/// M·f for nodal samples f.
pub fn load(mass: &SparseOperator, f: &SpatialField, policy: ExecPolicy) -> SpatialField {
    SpatialField {
        values: mass.apply(&f.values, policy),
    }
}
