//! Partitioned simplicial meshes of a truncation box, skeleton extraction and
//! oriented interfaces.
//!
//! The full space is replaced by the box `[-R, R]^d`; facets on the box
//! surface are tagged `TRUNCATION` and carry the homogeneous Dirichlet
//! condition that stands in for decay at infinity. Cells carry region tags,
//! `0` being the complement of the physical domain inside the box and
//! `j >= 1` the subdomains. Every interior facet between cells of different
//! tags is a skeleton facet with an ordered pair `(j, k)` and a unit normal
//! pointing from the `j` side into the `k` side.

use crate::{Result, SkelError};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// Boundary-condition tag of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcTag {
    Dirichlet,
    Neumann,
    Truncation,
}

/// Region assignment rule, evaluated at cell barycenters.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionRule {
    /// Every cell gets the same tag.
    Uniform(u32),
    /// Tag 1 where `x < split`, tag 2 otherwise.
    HalfX { split: f64 },
    /// Four quadrant tags in 2d: (-,-) -> 1, (+,-) -> 2, (+,+) -> 3, (-,+) -> 4.
    Quadrant,
    /// Three strips along x with equal width inside the box.
    ThreeStripX { half_width: f64 },
    /// Tag `inside` where `|x - center| < radius`, `outside` elsewhere.
    Ball {
        radius: f64,
        inside: u32,
        outside: u32,
    },
    /// Half-split square `[-a, a]^d` (tag 1 for x<0, tag 2 otherwise) embedded
    /// in a larger box; cells outside get the complement tag 0.
    HalfXInBox { a: f64 },
}

impl PartitionRule {
    pub fn region_of(&self, bary: &[f64]) -> u32 {
        match self {
            PartitionRule::Uniform(t) => *t,
            PartitionRule::HalfX { split } => {
                if bary[0] < *split {
                    1
                } else {
                    2
                }
            }
            PartitionRule::Quadrant => match (bary[0] < 0.0, bary[1] < 0.0) {
                (true, true) => 1,
                (false, true) => 2,
                (false, false) => 3,
                (true, false) => 4,
            },
            PartitionRule::ThreeStripX { half_width } => {
                let w = 2.0 * half_width / 3.0;
                if bary[0] < -half_width + w {
                    1
                } else if bary[0] < -half_width + 2.0 * w {
                    2
                } else {
                    3
                }
            }
            PartitionRule::Ball {
                radius,
                inside,
                outside,
            } => {
                let r2: f64 = bary.iter().map(|x| x * x).sum();
                if r2.sqrt() < *radius {
                    *inside
                } else {
                    *outside
                }
            }
            PartitionRule::HalfXInBox { a } => {
                if bary.iter().any(|x| x.abs() > *a) {
                    0
                } else if bary[0] < 0.0 {
                    1
                } else {
                    2
                }
            }
        }
    }

    /// Canonical text form used in config hashing.
    pub fn canonical(&self) -> String {
        format!("{self:?}")
    }
}

/// Dirichlet/Neumann assignment rule for boundary facets of the physical
/// domain, evaluated at facet barycenters.
#[derive(Debug, Clone, PartialEq)]
pub enum BcRule {
    AllDirichlet,
    AllNeumann,
    /// Dirichlet where `coord[axis] < value`, Neumann otherwise.
    DirichletBelow { axis: usize, value: f64 },
}

impl BcRule {
    pub fn tag_of(&self, bary: &[f64]) -> BcTag {
        match self {
            BcRule::AllDirichlet => BcTag::Dirichlet,
            BcRule::AllNeumann => BcTag::Neumann,
            BcRule::DirichletBelow { axis, value } => {
                if bary[*axis] < *value {
                    BcTag::Dirichlet
                } else {
                    BcTag::Neumann
                }
            }
        }
    }
}

/// Simplicial mesh of `[-R, R]^d` with cellwise region tags.
#[derive(Debug, Clone)]
pub struct PartitionedMesh {
    pub dim: usize,
    pub half_width: f64,
    /// Flat coordinates, `dim` entries per vertex.
    pub vertices: Vec<f64>,
    /// Flat connectivity, `dim + 1` entries per cell.
    pub cells: Vec<usize>,
    /// Region tag per cell.
    pub tags: Vec<u32>,
    /// Largest region tag (number of subdomains).
    pub n_regions: u32,
    /// Boundary-condition tags keyed by sorted facet vertices. Holds the
    /// Dirichlet/Neumann split of the domain boundary and the truncation
    /// facets on the box surface.
    pub facet_bc: BTreeMap<Vec<usize>, BcTag>,
    /// Vertices pinned to zero by the truncation surrogate.
    pub pinned: Vec<bool>,
    /// Non-fatal diagnostics collected during construction.
    pub warnings: Vec<String>,
}

impl PartitionedMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.tags.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.vertices[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn cell_barycenter(&self, c: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for &v in self.cell(c) {
            for (bi, xi) in b.iter_mut().zip(self.vertex(v)) {
                *bi += xi;
            }
        }
        let inv = 1.0 / (self.dim as f64 + 1.0);
        b.iter_mut().for_each(|x| *x *= inv);
        b
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        simplex_volume(self.dim, self.cell(c), &self.vertices)
    }

    /// Cells carrying a given region tag.
    pub fn cells_with_tag(&self, tag: u32) -> Vec<usize> {
        (0..self.n_cells()).filter(|&c| self.tags[c] == tag).collect()
    }

    /// Sorted vertices incident to cells of a given tag.
    pub fn vertices_of_tag(&self, tag: u32) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for c in 0..self.n_cells() {
            if self.tags[c] == tag {
                set.extend(self.cell(c).iter().copied());
            }
        }
        set.into_iter().collect()
    }
}

/// Signed volume helper for orientation fixing.
fn simplex_signed_volume(dim: usize, verts: &[usize], coords: &[f64]) -> f64 {
    let p = |v: usize| &coords[v * dim..(v + 1) * dim];
    let p0 = p(verts[0]);
    match dim {
        2 => {
            let a = p(verts[1]);
            let b = p(verts[2]);
            0.5 * ((a[0] - p0[0]) * (b[1] - p0[1]) - (a[1] - p0[1]) * (b[0] - p0[0]))
        }
        3 => {
            let a = p(verts[1]);
            let b = p(verts[2]);
            let c = p(verts[3]);
            let e1 = [a[0] - p0[0], a[1] - p0[1], a[2] - p0[2]];
            let e2 = [b[0] - p0[0], b[1] - p0[1], b[2] - p0[2]];
            let e3 = [c[0] - p0[0], c[1] - p0[1], c[2] - p0[2]];
            (e1[0] * (e2[1] * e3[2] - e2[2] * e3[1])
                - e1[1] * (e2[0] * e3[2] - e2[2] * e3[0])
                + e1[2] * (e2[0] * e3[1] - e2[1] * e3[0]))
                / 6.0
        }
        _ => unreachable!("dimension must be 2 or 3"),
    }
}

pub fn simplex_volume(dim: usize, verts: &[usize], coords: &[f64]) -> f64 {
    simplex_signed_volume(dim, verts, coords).abs()
}

/// Area (2d: length) of a facet given by `dim` vertex indices.
pub fn facet_area(dim: usize, verts: &[usize], coords: &[f64]) -> f64 {
    let p = |v: usize| &coords[v * dim..(v + 1) * dim];
    match dim {
        2 => {
            let a = p(verts[0]);
            let b = p(verts[1]);
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
        }
        3 => {
            let a = p(verts[0]);
            let b = p(verts[1]);
            let c = p(verts[2]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
        }
        _ => unreachable!(),
    }
}

/// Unit normal of a facet, sign not yet fixed. Padded to three components.
fn facet_raw_normal(dim: usize, verts: &[usize], coords: &[f64]) -> [f64; 3] {
    let p = |v: usize| &coords[v * dim..(v + 1) * dim];
    match dim {
        2 => {
            let a = p(verts[0]);
            let b = p(verts[1]);
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            [t[1] / len, -t[0] / len, 0.0]
        }
        3 => {
            let a = p(verts[0]);
            let b = p(verts[1]);
            let c = p(verts[2]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let mut n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            n.iter_mut().for_each(|x| *x /= len);
            n
        }
        _ => unreachable!(),
    }
}

/// Build a structured simplicial mesh of `[-R, R]^d` and tag its cells.
///
/// In 2d every grid square is split into two triangles along the same
/// diagonal; in 3d every cube is split into six tetrahedra sharing the main
/// diagonal (Kuhn triangulation), which keeps adjacent cubes conforming.
pub fn build_box_mesh(
    dim: usize,
    half_width: f64,
    resolution: usize,
    partition: &PartitionRule,
    bc: &BcRule,
) -> Result<PartitionedMesh> {
    if !(dim == 2 || dim == 3) {
        return Err(SkelError::Mesh(format!("dimension {dim} not supported")));
    }
    if half_width <= 0.0 {
        return Err(SkelError::Mesh("box half-width must be positive".into()));
    }
    if resolution < 2 {
        return Err(SkelError::Mesh("resolution must be at least 2".into()));
    }
    let n = resolution;
    let np = n + 1;
    let coord = |i: usize| -half_width + 2.0 * half_width * (i as f64) / (n as f64);

    let mut vertices = Vec::new();
    let mut cells: Vec<usize> = Vec::new();
    match dim {
        2 => {
            for jj in 0..np {
                for i in 0..np {
                    vertices.push(coord(i));
                    vertices.push(coord(jj));
                }
            }
            let vid = |i: usize, jj: usize| jj * np + i;
            for jj in 0..n {
                for i in 0..n {
                    let a = vid(i, jj);
                    let b = vid(i + 1, jj);
                    let c = vid(i + 1, jj + 1);
                    let d = vid(i, jj + 1);
                    cells.extend_from_slice(&[a, b, c]);
                    cells.extend_from_slice(&[a, c, d]);
                }
            }
        }
        3 => {
            for kk in 0..np {
                for jj in 0..np {
                    for i in 0..np {
                        vertices.push(coord(i));
                        vertices.push(coord(jj));
                        vertices.push(coord(kk));
                    }
                }
            }
            let vid = |i: usize, jj: usize, kk: usize| (kk * np + jj) * np + i;
            // Kuhn: one tetrahedron per permutation of the three axis steps.
            const PERMS: [[usize; 3]; 6] = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            for kk in 0..n {
                for jj in 0..n {
                    for i in 0..n {
                        for perm in PERMS {
                            let mut ofs = [0usize; 3];
                            let mut tet = [vid(i, jj, kk), 0, 0, 0];
                            for (step, &axis) in perm.iter().enumerate() {
                                ofs[axis] += 1;
                                tet[step + 1] = vid(i + ofs[0], jj + ofs[1], kk + ofs[2]);
                            }
                            cells.extend_from_slice(&tet);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }

    // Orientation fix and tags.
    let n_cells = cells.len() / (dim + 1);
    let mut tags = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        let sv = simplex_signed_volume(dim, &cells[c * (dim + 1)..(c + 1) * (dim + 1)], &vertices);
        if sv == 0.0 {
            return Err(SkelError::Mesh(format!("cell {c} is degenerate")));
        }
        if sv < 0.0 {
            cells.swap(c * (dim + 1), c * (dim + 1) + 1);
        }
        let mut bary = vec![0.0; dim];
        for &v in &cells[c * (dim + 1)..(c + 1) * (dim + 1)] {
            for (bi, xi) in bary.iter_mut().zip(&vertices[v * dim..(v + 1) * dim]) {
                *bi += xi;
            }
        }
        bary.iter_mut().for_each(|x| *x /= dim as f64 + 1.0);
        tags.push(partition.region_of(&bary));
    }

    let n_regions = tags.iter().copied().max().unwrap_or(0);
    if n_regions == 0 {
        return Err(SkelError::Mesh(
            "partition assigns no subdomain tags (all cells are complement)".into(),
        ));
    }
    for t in 1..=n_regions {
        if !tags.iter().any(|&x| x == t) {
            return Err(SkelError::Mesh(format!("subdomain {t} has no cells")));
        }
    }

    let mut mesh = PartitionedMesh {
        dim,
        half_width,
        vertices,
        cells,
        tags,
        n_regions,
        facet_bc: BTreeMap::new(),
        pinned: Vec::new(),
        warnings: Vec::new(),
    };
    finalize_mesh(&mut mesh, Some(bc))?;
    Ok(mesh)
}

/// Compute pinned vertices, boundary tags and connectivity diagnostics.
/// `bc` assigns Dirichlet/Neumann tags to domain-boundary facets; `None`
/// keeps tags already present in `facet_bc` (used by the loader).
fn finalize_mesh(mesh: &mut PartitionedMesh, bc: Option<&BcRule>) -> Result<()> {
    let dim = mesh.dim;
    let r = mesh
        .vertices
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    mesh.half_width = r;
    let eps = r * 1e-9;
    mesh.pinned = (0..mesh.n_vertices())
        .map(|v| mesh.vertex(v).iter().any(|x| (x.abs() - r).abs() <= eps))
        .collect();

    // Facet incidence.
    let mut incidence: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c).to_vec();
        for skip in 0..=dim {
            let mut f: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &v)| v)
                .collect();
            f.sort_unstable();
            incidence.entry(f).or_default().push(c);
        }
    }

    let mut facet_bc = BTreeMap::new();
    for (f, cs) in &incidence {
        if cs.len() > 2 {
            return Err(SkelError::Mesh(format!(
                "facet {f:?} shared by more than two cells"
            )));
        }
        if cs.len() == 1 {
            // Box surface.
            if f.iter().all(|&v| mesh.pinned[v]) {
                facet_bc.insert(f.clone(), BcTag::Truncation);
            } else {
                return Err(SkelError::Mesh(format!(
                    "boundary facet {f:?} does not lie on the box surface"
                )));
            }
        } else {
            let (ta, tb) = (mesh.tags[cs[0]], mesh.tags[cs[1]]);
            if ta != tb && (ta == 0 || tb == 0) {
                // Domain boundary facet: tag Dirichlet/Neumann.
                let tag = match bc {
                    Some(rule) => {
                        let mut bary = vec![0.0; dim];
                        for &v in f {
                            for (bi, xi) in bary.iter_mut().zip(mesh.vertex(v)) {
                                *bi += xi;
                            }
                        }
                        bary.iter_mut().for_each(|x| *x /= dim as f64);
                        rule.tag_of(&bary)
                    }
                    None => *mesh.facet_bc.get(f).unwrap_or(&BcTag::Dirichlet),
                };
                facet_bc.insert(f.clone(), tag);
            }
        }
    }
    mesh.facet_bc = facet_bc;

    // Face-connectivity per subdomain (diagnostic only).
    for t in 1..=mesh.n_regions {
        let cells = mesh.cells_with_tag(t);
        if cells.is_empty() {
            continue;
        }
        let index: BTreeMap<usize, usize> =
            cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut parent: Vec<usize> = (0..cells.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for cs in incidence.values() {
            if cs.len() == 2 && mesh.tags[cs[0]] == t && mesh.tags[cs[1]] == t {
                let (a, b) = (index[&cs[0]], index[&cs[1]]);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let roots: BTreeSet<usize> = (0..cells.len()).map(|i| find(&mut parent, i)).collect();
        if roots.len() > 1 {
            mesh.warnings.push(format!(
                "subdomain {t} is not face-connected ({} components)",
                roots.len()
            ));
        }
    }
    Ok(())
}

/// One oriented skeleton facet.
#[derive(Debug, Clone)]
pub struct SkelFacet {
    /// Sorted vertex indices (`dim` of them).
    pub verts: Vec<usize>,
    /// Ordered region pair `(j, k)`: the normal points from the `j` side
    /// into the `k` side; `j >= 1`, `k` may be `0`.
    pub pair: (u32, u32),
    /// Cell on the `j` side / `k` side.
    pub cell_j: usize,
    pub cell_k: usize,
    /// Unit normal (padded to 3 components), oriented `j -> k`.
    pub normal: [f64; 3],
    pub area: f64,
    /// Boundary tag if this facet is part of the domain boundary.
    pub bc: Option<BcTag>,
}

/// Per-subdomain view of the skeleton.
#[derive(Debug, Clone, Default)]
pub struct GammaIndex {
    /// Facets of `Gamma_j` as indices into [`SkeletonIndex::facets`], each
    /// with the sign relating the stored normal to the outward normal of
    /// the subdomain (`+1` when the facet pair starts with `j`).
    pub facets: Vec<(usize, f64)>,
    /// Free trace vertices (pinned box-surface vertices excluded), sorted.
    pub nodes: Vec<usize>,
    /// Vertex index -> position in `nodes`.
    pub node_lookup: BTreeMap<usize, usize>,
    /// Facet ids of `Gamma_{j,k}` keyed by the other region tag.
    pub by_other: BTreeMap<u32, Vec<usize>>,
    /// Vertices of `Gamma_j` on the Dirichlet part of the domain boundary.
    pub dirichlet_nodes: BTreeSet<usize>,
    /// Vertices of `Gamma_j` on the Neumann part of the domain boundary.
    pub neumann_nodes: BTreeSet<usize>,
}

/// Oriented skeleton of a partitioned mesh.
#[derive(Debug, Clone)]
pub struct SkeletonIndex {
    pub facets: Vec<SkelFacet>,
    /// Entry `j - 1` describes `Gamma_j`.
    pub gamma: Vec<GammaIndex>,
}

impl SkeletonIndex {
    pub fn gamma(&self, j: u32) -> &GammaIndex {
        &self.gamma[(j - 1) as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

/// Extract the oriented skeleton: all interior facets separating cells of
/// different region tags, ordered and oriented deterministically.
pub fn extract_skeleton(mesh: &PartitionedMesh) -> Result<SkeletonIndex> {
    let dim = mesh.dim;
    let mut incidence: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c).to_vec();
        for skip in 0..=dim {
            let mut f: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &v)| v)
                .collect();
            f.sort_unstable();
            incidence.entry(f).or_default().push(c);
        }
    }

    let mut facets = Vec::new();
    for (f, cs) in &incidence {
        if cs.len() != 2 {
            continue;
        }
        let (mut ca, mut cb) = (cs[0], cs[1]);
        let (mut ta, mut tb) = (mesh.tags[ca], mesh.tags[cb]);
        if ta == tb {
            continue;
        }
        // Order: j < k among subdomains, complement always on the k side.
        let swap = if ta == 0 {
            true
        } else if tb == 0 {
            false
        } else {
            ta > tb
        };
        if swap {
            std::mem::swap(&mut ca, &mut cb);
            std::mem::swap(&mut ta, &mut tb);
        }
        let mut normal = facet_raw_normal(dim, f, &mesh.vertices);
        let bj = mesh.cell_barycenter(ca);
        let bk = mesh.cell_barycenter(cb);
        let dot: f64 = (0..dim).map(|i| normal[i] * (bk[i] - bj[i])).sum();
        if dot == 0.0 {
            return Err(SkelError::Mesh(format!(
                "cannot orient facet {f:?}: adjacent cells claim the same side"
            )));
        }
        if dot < 0.0 {
            normal.iter_mut().for_each(|x| *x = -*x);
        }
        facets.push(SkelFacet {
            verts: f.clone(),
            pair: (ta, tb),
            cell_j: ca,
            cell_k: cb,
            normal,
            area: facet_area(dim, f, &mesh.vertices),
            bc: mesh.facet_bc.get(f).copied(),
        });
    }

    let mut gamma = vec![GammaIndex::default(); mesh.n_regions as usize];
    for (fid, fac) in facets.iter().enumerate() {
        for (tag, sign) in [(fac.pair.0, 1.0), (fac.pair.1, -1.0)] {
            if tag == 0 {
                continue;
            }
            let g = &mut gamma[(tag - 1) as usize];
            g.facets.push((fid, sign));
            let other = if tag == fac.pair.0 {
                fac.pair.1
            } else {
                fac.pair.0
            };
            g.by_other.entry(other).or_default().push(fid);
            for &v in &fac.verts {
                if !mesh.pinned[v] {
                    g.node_lookup.entry(v).or_insert(0);
                }
                match fac.bc {
                    Some(BcTag::Dirichlet) => {
                        g.dirichlet_nodes.insert(v);
                    }
                    Some(BcTag::Neumann) => {
                        g.neumann_nodes.insert(v);
                    }
                    _ => {}
                }
            }
        }
    }
    for g in &mut gamma {
        g.nodes = g.node_lookup.keys().copied().collect();
        for (i, &v) in g.nodes.iter().enumerate() {
            g.node_lookup.insert(v, i);
        }
    }
    Ok(SkeletonIndex { facets, gamma })
}

/// Save a mesh in the `skelmesh` ASCII format.
pub fn save_mesh(mesh: &PartitionedMesh, path: &std::path::Path) -> Result<()> {
    let mut out = String::new();
    writeln!(
        out,
        "skelmesh {} {} {}",
        mesh.dim,
        mesh.n_vertices(),
        mesh.n_cells()
    )
    .unwrap();
    for v in 0..mesh.n_vertices() {
        let coords: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", coords.join(" ")).unwrap();
    }
    for c in 0..mesh.n_cells() {
        let idx: Vec<String> = mesh.cell(c).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{} {}", idx.join(" "), mesh.tags[c]).unwrap();
    }
    writeln!(out, "facets {}", mesh.facet_bc.len()).unwrap();
    for (f, tag) in &mesh.facet_bc {
        let idx: Vec<String> = f.iter().map(|v| format!("{v}")).collect();
        let t = match tag {
            BcTag::Dirichlet => "D",
            BcTag::Neumann => "N",
            BcTag::Truncation => "TRUNCATION",
        };
        writeln!(out, "{} {}", idx.join(" "), t).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load a mesh from the `skelmesh` ASCII format, validating indices, cell
/// uniqueness and orientation.
pub fn load_mesh(path: &std::path::Path) -> Result<PartitionedMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<PartitionedMesh> {
    let err = |line: usize, msg: &str| SkelError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (lno, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 4 || head[0] != "skelmesh" {
        return Err(err(lno + 1, "expected header `skelmesh <d> <nv> <nc>`"));
    }
    let dim: usize = head[1]
        .parse()
        .map_err(|_| err(lno + 1, "bad dimension"))?;
    if dim != 2 && dim != 3 {
        return Err(err(lno + 1, "dimension must be 2 or 3"));
    }
    let nv: usize = head[2]
        .parse()
        .map_err(|_| err(lno + 1, "bad vertex count"))?;
    let nc: usize = head[3]
        .parse()
        .map_err(|_| err(lno + 1, "bad cell count"))?;

    let mut vertices = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| err(usize::MAX, "unexpected end of file in vertex block"))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim {
            return Err(err(lno + 1, "wrong number of coordinates"));
        }
        for p in parts {
            vertices.push(p.parse::<f64>().map_err(|_| err(lno + 1, "bad float"))?);
        }
    }

    let mut cells = Vec::with_capacity(nc * (dim + 1));
    let mut tags = Vec::with_capacity(nc);
    let mut seen = BTreeSet::new();
    for _ in 0..nc {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| err(usize::MAX, "unexpected end of file in cell block"))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim + 2 {
            return Err(err(lno + 1, "expected d+1 vertex indices and a region tag"));
        }
        let mut cell = Vec::with_capacity(dim + 1);
        for p in &parts[..dim + 1] {
            let v: usize = p.parse().map_err(|_| err(lno + 1, "bad vertex index"))?;
            if v >= nv {
                return Err(err(lno + 1, "vertex index out of range"));
            }
            cell.push(v);
        }
        let mut key = cell.clone();
        key.sort_unstable();
        if !seen.insert(key) {
            return Err(err(lno + 1, "duplicate cell"));
        }
        let tag: u32 = parts[dim + 1]
            .parse()
            .map_err(|_| err(lno + 1, "bad region tag"))?;
        let sv = simplex_signed_volume(dim, &cell, &vertices);
        if sv == 0.0 {
            return Err(err(lno + 1, "degenerate cell"));
        }
        if sv < 0.0 {
            cell.swap(0, 1);
        }
        cells.extend_from_slice(&cell);
        tags.push(tag);
    }

    // Optional facet section.
    let mut facet_bc = BTreeMap::new();
    if let Some((lno, line)) = lines.next() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if !(parts.len() == 2 && parts[0] == "facets") {
            return Err(err(lno + 1, "expected `facets <n>`"));
        }
        let nf: usize = parts[1]
            .parse()
            .map_err(|_| err(lno + 1, "bad facet count"))?;
        for _ in 0..nf {
            let (lno, line) = lines
                .next()
                .ok_or_else(|| err(usize::MAX, "unexpected end of file in facet block"))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != dim + 1 {
                return Err(err(lno + 1, "expected d vertex indices and a tag"));
            }
            let mut f = Vec::with_capacity(dim);
            for p in &parts[..dim] {
                let v: usize = p.parse().map_err(|_| err(lno + 1, "bad vertex index"))?;
                if v >= nv {
                    return Err(err(lno + 1, "vertex index out of range"));
                }
                f.push(v);
            }
            f.sort_unstable();
            let tag = match parts[dim] {
                "D" => BcTag::Dirichlet,
                "N" => BcTag::Neumann,
                "TRUNCATION" => BcTag::Truncation,
                other => return Err(err(lno + 1, &format!("unknown facet tag `{other}`"))),
            };
            facet_bc.insert(f, tag);
        }
    }

    let n_regions = tags.iter().copied().max().unwrap_or(0);
    if n_regions == 0 {
        return Err(SkelError::Mesh("mesh has no subdomain cells".into()));
    }
    for t in 1..=n_regions {
        if !tags.iter().any(|&x| x == t) {
            return Err(SkelError::Mesh(format!("subdomain {t} has no cells")));
        }
    }
    let mut mesh = PartitionedMesh {
        dim,
        half_width: 0.0,
        vertices,
        cells,
        tags,
        n_regions,
        facet_bc,
        pinned: Vec::new(),
        warnings: Vec::new(),
    };
    finalize_mesh(&mut mesh, None)?;
    Ok(mesh)
}
