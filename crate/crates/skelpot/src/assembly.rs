//! Assembly of the sesquilinear forms, facet mass matrices, right-hand-side
//! functionals and the weak co-normal derivative.
//!
//! The form of subdomain `j` at frequency `s` is
//! `l_j(s)(u, v) = <A_j^ext grad u, conj(grad v)> + s^2 <p_j^ext u, conj(v)>`
//! with exact P1 quadrature for the stiffness part and the one-point
//! barycenter rule for the mass part (coefficients are cellwise constant).
//! Test functions carry the conjugation, so the assembled matrices are
//! complex symmetric, not Hermitian.

use crate::coefficients::{CoefficientField, Frequency, MatValue};
use crate::femspace::{Discretization, Field, Side, SpaceKind};
use crate::geometry::PartitionedMesh;
use crate::{C64, Result, SkelError};

/// Minimal complex CSR matrix: build from triplets, multiply, iterate rows.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for r in 0..self.nrows {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[p] * x[self.indices[p]];
            }
            y[r] = acc;
        }
        y
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |p| (self.indices[p], self.data[p]))
    }

    /// Largest absolute entry; used for relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Gradients of the P1 basis functions on one simplex, padded to 3 components.
pub fn p1_gradients(dim: usize, cell: &[usize], coords: &[f64]) -> [[f64; 3]; 4] {
    let p = |v: usize| &coords[v * dim..(v + 1) * dim];
    let mut grads = [[0.0; 3]; 4];
    match dim {
        2 => {
            let (a, b, c) = (p(cell[0]), p(cell[1]), p(cell[2]));
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            grads[0] = [(b[1] - c[1]) / det, (c[0] - b[0]) / det, 0.0];
            grads[1] = [(c[1] - a[1]) / det, (a[0] - c[0]) / det, 0.0];
            grads[2] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det, 0.0];
        }
        3 => {
            let a = p(cell[0]);
            let m = nalgebra::Matrix3::from_fn(|r, cidx| p(cell[cidx + 1])[r] - a[r]);
            let inv = m.try_inverse().expect("non-degenerate cell");
            // Rows of the inverse are the gradients of the last three basis
            // functions; the first is minus their sum.
            for i in 0..3 {
                for k in 0..3 {
                    grads[i + 1][k] = inv[(i, k)];
                }
            }
            for k in 0..3 {
                grads[0][k] = -(grads[1][k] + grads[2][k] + grads[3][k]);
            }
        }
        _ => unreachable!(),
    }
    grads
}

/// Element matrix of `l_j(s)` on one cell: exact stiffness plus one-point
/// mass, both multiplied by the cellwise coefficient values.
fn element_form(
    dim: usize,
    cell: &[usize],
    coords: &[f64],
    a: &MatValue,
    p: f64,
    s2: C64,
) -> [[C64; 4]; 4] {
    let vol = crate::geometry::simplex_volume(dim, cell, coords);
    let grads = p1_gradients(dim, cell, coords);
    let nv = dim + 1;
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    let phi = 1.0 / nv as f64;
    let mass = vol * p * phi * phi;
    for m in 0..nv {
        // A grad(phi_m)
        let mut ag = [0.0; 3];
        for r in 0..dim {
            for c in 0..dim {
                ag[r] += a[r][c] * grads[m][c];
            }
        }
        for n in 0..nv {
            let stiff: f64 = (0..dim).map(|k| ag[k] * grads[n][k]).sum();
            out[m][n] = C64::new(vol * stiff, 0.0) + s2 * mass;
        }
    }
    out
}

/// Assembled sesquilinear form with its provenance.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    pub mat: CsrMatrix,
    pub kind: SpaceKind,
    pub j: u32,
    pub s: C64,
}

/// Assemble `l_j(s)` on the conforming or broken space of subdomain `j`.
pub fn assemble_ell(
    disc: &Discretization,
    coeffs: &CoefficientField,
    j: u32,
    s: &Frequency,
    kind: SpaceKind,
) -> Result<FormMatrix> {
    let mesh = &disc.mesh;
    let s2 = s.s * s.s;
    let nv = mesh.dim + 1;
    let n_dofs = match kind {
        SpaceKind::Conforming => disc.conforming.n_dofs,
        SpaceKind::Broken(jj) if jj == j => disc.broken(j).n_dofs,
        other => {
            return Err(SkelError::SpaceMismatch {
                expected: format!("Conforming or Broken({j})"),
                got: other.to_string(),
            })
        }
    };
    let mut trips = Vec::new();
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let local = element_form(
            mesh.dim,
            cell,
            &mesh.vertices,
            coeffs.ext_a(j, c),
            coeffs.ext_p(j, c),
            s2,
        );
        let dof = |v: usize| -> Option<usize> {
            match kind {
                SpaceKind::Conforming => disc.conforming.dof_of_vertex[v],
                SpaceKind::Broken(_) => disc.broken(j).cell_dof(mesh.tags[c] == j, v),
                _ => unreachable!(),
            }
        };
        for m in 0..nv {
            let Some(dm) = dof(cell[m]) else { continue };
            for n in 0..nv {
                let Some(dn) = dof(cell[n]) else { continue };
                trips.push((dm, dn, local[m][n]));
            }
        }
    }
    Ok(FormMatrix {
        mat: CsrMatrix::from_triplets(n_dofs, n_dofs, trips),
        kind,
        j,
        s: s.s,
    })
}

/// `K + |s|^2 M` with `A = I`, `p = 1` on the given space (real entries).
pub fn freq_gram(disc: &Discretization, kind: SpaceKind, s_mod: f64) -> Result<CsrMatrix> {
    let mesh = &disc.mesh;
    let nv = mesh.dim + 1;
    let (n_dofs, j) = match kind {
        SpaceKind::Conforming => (disc.conforming.n_dofs, 1),
        SpaceKind::Broken(j) => (disc.broken(j).n_dofs, j),
        other => {
            return Err(SkelError::SpaceMismatch {
                expected: "Conforming or Broken".into(),
                got: other.to_string(),
            })
        }
    };
    let ident = crate::coefficients::identity_mat();
    let s2 = C64::new(s_mod * s_mod, 0.0);
    let mut trips = Vec::new();
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let local = element_form(mesh.dim, cell, &mesh.vertices, &ident, 1.0, s2);
        for m in 0..nv {
            let dm = match kind {
                SpaceKind::Conforming => disc.conforming.dof_of_vertex[cell[m]],
                SpaceKind::Broken(_) => disc.broken(j).cell_dof(mesh.tags[c] == j, cell[m]),
                _ => unreachable!(),
            };
            let Some(dm) = dm else { continue };
            for n in 0..nv {
                let dn = match kind {
                    SpaceKind::Conforming => disc.conforming.dof_of_vertex[cell[n]],
                    SpaceKind::Broken(_) => disc.broken(j).cell_dof(mesh.tags[c] == j, cell[n]),
                    _ => unreachable!(),
                };
                let Some(dn) = dn else { continue };
                trips.push((dm, dn, local[m][n]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n_dofs, n_dofs, trips))
}

/// Cellwise `||grad v||^2 + |s|^2 ||v||^2` (piecewise gradient on broken
/// spaces); deterministic cell-order accumulation.
pub fn freq_energy(disc: &Discretization, u: &Field, s_mod: f64) -> Result<f64> {
    let mesh = &disc.mesh;
    let j = match u.kind {
        SpaceKind::Conforming => {
            if u.vals.len() != disc.conforming.n_dofs {
                return Err(SkelError::Input("field length mismatch".into()));
            }
            0
        }
        SpaceKind::Broken(j) => {
            if u.vals.len() != disc.broken(j).n_dofs {
                return Err(SkelError::Input("field length mismatch".into()));
            }
            j
        }
        other => {
            return Err(SkelError::SpaceMismatch {
                expected: "Conforming or Broken".into(),
                got: other.to_string(),
            })
        }
    };
    let dim = mesh.dim;
    let mut acc = 0.0;
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let vol = mesh.cell_volume(c);
        let grads = p1_gradients(dim, cell, &mesh.vertices);
        let mut g = [C64::new(0.0, 0.0); 3];
        let mut mean = C64::new(0.0, 0.0);
        for (i, &v) in cell.iter().enumerate() {
            let val = match u.kind {
                SpaceKind::Conforming => disc.conforming.dof_of_vertex[v]
                    .map(|d| u.vals[d])
                    .unwrap_or_default(),
                SpaceKind::Broken(_) => disc
                    .broken(j)
                    .cell_dof(mesh.tags[c] == j, v)
                    .map(|d| u.vals[d])
                    .unwrap_or_default(),
                _ => unreachable!(),
            };
            for k in 0..dim {
                g[k] += val * grads[i][k];
            }
            mean += val;
        }
        mean /= dim as f64 + 1.0;
        let grad2: f64 = g[..dim].iter().map(|z| z.norm_sqr()).sum();
        acc += vol * (grad2 + s_mod * s_mod * mean.norm_sqr());
    }
    Ok(acc)
}

/// Exact P1 mass matrix of one facet, padded to 3x3.
pub fn facet_mass(dim: usize, verts: &[usize], coords: &[f64]) -> [[f64; 3]; 3] {
    let area = crate::geometry::facet_area(dim, verts, coords);
    let mut m = [[0.0; 3]; 3];
    match dim {
        2 => {
            let d = area / 6.0;
            m[0][0] = 2.0 * d;
            m[1][1] = 2.0 * d;
            m[0][1] = d;
            m[1][0] = d;
        }
        3 => {
            let d = area / 12.0;
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] = if r == c { 2.0 * d } else { d };
                }
            }
        }
        _ => unreachable!(),
    }
    m
}

/// Quadrature points and weights on a facet (3-point Gauss on edges,
/// midedge rule on triangles); returns physical points padded to 3d.
pub fn facet_quadrature(dim: usize, verts: &[usize], coords: &[f64]) -> Vec<([f64; 3], f64, Vec<f64>)> {
    let p = |v: usize| &coords[v * dim..(v + 1) * dim];
    let area = crate::geometry::facet_area(dim, verts, coords);
    let mut out = Vec::new();
    match dim {
        2 => {
            let (a, b) = (p(verts[0]), p(verts[1]));
            let g = (3.0f64 / 5.0).sqrt();
            for (t, w) in [(-g, 5.0 / 18.0), (0.0, 8.0 / 18.0), (g, 5.0 / 18.0)] {
                let l0 = 0.5 * (1.0 - t);
                let l1 = 0.5 * (1.0 + t);
                out.push((
                    [l0 * a[0] + l1 * b[0], l0 * a[1] + l1 * b[1], 0.0],
                    w * area,
                    vec![l0, l1],
                ));
            }
        }
        3 => {
            let (a, b, c) = (p(verts[0]), p(verts[1]), p(verts[2]));
            for (l0, l1, l2) in [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)] {
                let pt = [
                    l0 * a[0] + l1 * b[0] + l2 * c[0],
                    l0 * a[1] + l1 * b[1] + l2 * c[1],
                    l0 * a[2] + l1 * b[2] + l2 * c[2],
                ];
                out.push((pt, area / 3.0, vec![l0, l1, l2]));
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Volume quadrature on one cell: degree-4 rule in 2d, degree-2 in 3d.
/// Returns (physical point, weight, barycentric coordinates).
pub fn cell_quadrature(mesh: &PartitionedMesh, c: usize) -> Vec<([f64; 3], f64, Vec<f64>)> {
    let cell = mesh.cell(c);
    let vol = mesh.cell_volume(c);
    let mut out = Vec::new();
    let pt_of = |bary: &[f64]| {
        let mut pt = [0.0; 3];
        for (l, &v) in bary.iter().zip(cell) {
            for k in 0..mesh.dim {
                pt[k] += l * mesh.vertex(v)[k];
            }
        }
        pt
    };
    match mesh.dim {
        2 => {
            // Dunavant degree-4, 6 points.
            const A1: f64 = 0.108_103_018_168_070;
            const B1: f64 = 0.445_948_490_915_965;
            const W1: f64 = 0.223_381_589_678_011;
            const A2: f64 = 0.816_847_572_980_459;
            const B2: f64 = 0.091_576_213_509_771;
            const W2: f64 = 0.109_951_743_655_322;
            let groups = [(A1, B1, W1), (A2, B2, W2)];
            for (a, b, w) in groups {
                for bary in [[a, b, b], [b, a, b], [b, b, a]] {
                    out.push((pt_of(&bary), w * vol, bary.to_vec()));
                }
            }
        }
        3 => {
            const A: f64 = 0.585_410_196_624_969;
            const B: f64 = 0.138_196_601_125_011;
            for i in 0..4 {
                let mut bary = [B; 4];
                bary[i] = A;
                out.push((pt_of(&bary), 0.25 * vol, bary.to_vec()));
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Dual Dirichlet-trace right-hand side: entry `m` is
/// `<phi, gamma_D(s) conj(w_m)>_Gamma = s^{1/2} phi_q` for the conforming
/// basis function at trace node `q` (plain dual-vector scatter).
pub fn trace_rhs(disc: &Discretization, j: u32, phi: &Field, s: &Frequency) -> Result<Vec<C64>> {
    phi.expect_kind(SpaceKind::TraceN(j))?;
    let tr = disc.trace(j);
    let scale = s.sqrt_s();
    let mut rhs = vec![C64::new(0.0, 0.0); disc.conforming.n_dofs];
    for (q, &v) in tr.nodes.iter().enumerate() {
        let d = disc.conforming.dof_of_vertex[v].expect("trace nodes are free");
        rhs[d] = scale * phi.vals[q];
    }
    Ok(rhs)
}

/// Weak one-sided co-normal derivative of a field that solves the
/// homogeneous equation on side `sigma` of `Gamma_j`, as a scaled dual
/// vector: `gamma_N^{ext,sigma}(s) u` with entries
/// `s^{-1/2} * a_sigma(u, Z_sigma(e_q))`.
///
/// Returns the dual trace field and the relative interior residual of the
/// precondition (non-fatal; the caller decides whether to warn).
pub fn weak_conormal(
    disc: &Discretization,
    broken_form: &FormMatrix,
    u: &Field,
    side: Side,
    j: u32,
    s: &Frequency,
) -> Result<(Field, f64)> {
    if broken_form.kind != SpaceKind::Broken(j) {
        return Err(SkelError::SpaceMismatch {
            expected: format!("Broken({j}) form"),
            got: broken_form.kind.to_string(),
        });
    }
    let b = disc.broken(j);
    let ub = match u.kind {
        SpaceKind::Broken(jj) if jj == j => u.clone(),
        SpaceKind::Conforming => disc.uplift(j, u)?,
        other => {
            return Err(SkelError::SpaceMismatch {
                expected: format!("Conforming or Broken({j})"),
                got: other.to_string(),
            })
        }
    };
    let y = broken_form.mat.matvec(&ub.vals);
    let tr = disc.trace(j);
    let inv_scale = C64::new(1.0, 0.0) / s.sqrt_s();
    let mut g = Field::zeros(SpaceKind::TraceN(j), tr.n_nodes());
    let side_dofs = match side {
        Side::Minus => &b.trace_minus,
        Side::Plus => &b.trace_plus,
    };
    for (q, &d) in side_dofs.iter().enumerate() {
        g.vals[q] = inv_scale * y[d];
    }

    // Interior residual on side sigma: rows at dofs referenced by
    // sigma-side cells that are not the sigma trace copies.
    let mut side_interior = vec![false; b.n_dofs];
    for c in 0..disc.mesh.n_cells() {
        let on_minus = disc.mesh.tags[c] == j;
        let matches = match side {
            Side::Minus => on_minus,
            Side::Plus => !on_minus,
        };
        if !matches {
            continue;
        }
        for &v in disc.mesh.cell(c) {
            if let Some(d) = b.cell_dof(on_minus, v) {
                side_interior[d] = true;
            }
        }
    }
    for &d in side_dofs {
        side_interior[d] = false;
    }
    let interior: f64 = y
        .iter()
        .enumerate()
        .filter(|(d, _)| side_interior[*d])
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let total: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rel = if total > 0.0 { interior / total } else { 0.0 };
    Ok((g, rel))
}
