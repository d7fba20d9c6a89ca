//! Variable coefficients `A` (SPD matrix field) and `p > 0`, their
//! per-subdomain extensions and spectral bounds, and the complex frequency.

use crate::geometry::PartitionedMesh;
use crate::{C64, Result, SkelError};

/// Symmetric matrix value stored densely, padded to 3x3.
pub type MatValue = [[f64; 3]; 3];

pub fn identity_mat() -> MatValue {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn diag_mat(d: &[f64]) -> MatValue {
    let mut m = [[0.0; 3]; 3];
    for (i, &v) in d.iter().enumerate() {
        m[i][i] = v;
    }
    for i in d.len()..3 {
        m[i][i] = 1.0;
    }
    m
}

/// Eigenvalue range of the leading `dim x dim` block of a symmetric value.
fn sym_eig_range(m: &MatValue, dim: usize) -> (f64, f64) {
    match dim {
        2 => {
            let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
            let tr = a + c;
            let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
            (0.5 * (tr - disc), 0.5 * (tr + disc))
        }
        3 => {
            let sm = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
            let eig = sm.symmetric_eigen().eigenvalues;
            (
                eig.iter().copied().fold(f64::INFINITY, f64::min),
                eig.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        }
        _ => unreachable!(),
    }
}

/// Analytic coefficient catalog used by config files; evaluated at cell
/// barycenters.
#[derive(Debug, Clone, PartialEq)]
pub enum MatRule {
    Identity,
    Constant(MatValue),
    /// `a1 * I` in cells whose integer grid parity is even, `a2 * I` odd.
    Checkerboard { a1: f64, a2: f64, cell_size: f64 },
    /// `(1 + slope * |x|) * I`.
    RadialRamp { slope: f64 },
    /// Constant multiple of the identity per subdomain tag, indexed `tag-1`;
    /// complement cells use the first value.
    PerSubdomain(Vec<f64>),
}

impl MatRule {
    pub fn eval(&self, bary: &[f64], tag: u32) -> MatValue {
        match self {
            MatRule::Identity => identity_mat(),
            MatRule::Constant(m) => *m,
            MatRule::Checkerboard { a1, a2, cell_size } => {
                let parity: i64 = bary
                    .iter()
                    .map(|x| (x / cell_size).floor() as i64)
                    .sum::<i64>()
                    & 1;
                let v = if parity == 0 { *a1 } else { *a2 };
                diag_mat(&[v, v, v])
            }
            MatRule::RadialRamp { slope } => {
                let r: f64 = bary.iter().map(|x| x * x).sum::<f64>().sqrt();
                let v = 1.0 + slope * r;
                diag_mat(&[v, v, v])
            }
            MatRule::PerSubdomain(vals) => {
                let idx = if tag == 0 { 0 } else { (tag - 1) as usize };
                let v = vals[idx.min(vals.len() - 1)];
                diag_mat(&[v, v, v])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalRule {
    Constant(f64),
    Checkerboard { p1: f64, p2: f64, cell_size: f64 },
    RadialRamp { slope: f64 },
    PerSubdomain(Vec<f64>),
}

impl ScalRule {
    pub fn eval(&self, bary: &[f64], tag: u32) -> f64 {
        match self {
            ScalRule::Constant(p) => *p,
            ScalRule::Checkerboard { p1, p2, cell_size } => {
                let parity: i64 = bary
                    .iter()
                    .map(|x| (x / cell_size).floor() as i64)
                    .sum::<i64>()
                    & 1;
                if parity == 0 {
                    *p1
                } else {
                    *p2
                }
            }
            ScalRule::RadialRamp { slope } => {
                let r: f64 = bary.iter().map(|x| x * x).sum::<f64>().sqrt();
                1.0 + slope * r
            }
            ScalRule::PerSubdomain(vals) => {
                let idx = if tag == 0 { 0 } else { (tag - 1) as usize };
                vals[idx.min(vals.len() - 1)]
            }
        }
    }
}

/// How the coefficients on a subdomain are extended to the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionMode {
    /// `A_j^ext = A`, `p_j^ext = p` everywhere.
    Global,
    /// The constant value of `A`, `p` on the subdomain, frozen everywhere.
    /// Requires the coefficients to actually be constant on the subdomain.
    ConstantFreeze,
}

#[derive(Debug, Clone)]
enum Extension {
    Global,
    Frozen { a: MatValue, p: f64 },
}

/// Cellwise coefficient data plus per-subdomain extensions.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    dim: usize,
    a: Vec<MatValue>,
    p: Vec<f64>,
    ext: Vec<Extension>,
}

impl CoefficientField {
    /// Build from rules evaluated at cell barycenters; validates symmetry,
    /// positive definiteness of `A` and positivity of `p`, and checks the
    /// constancy requirement of `ConstantFreeze` extensions.
    pub fn from_rules(
        mesh: &PartitionedMesh,
        a_rule: &MatRule,
        p_rule: &ScalRule,
        modes: &[ExtensionMode],
    ) -> Result<Self> {
        let mut a = Vec::with_capacity(mesh.n_cells());
        let mut p = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let bary = mesh.cell_barycenter(c);
            a.push(a_rule.eval(&bary, mesh.tags[c]));
            p.push(p_rule.eval(&bary, mesh.tags[c]));
        }
        Self::from_values(mesh, a, p, modes)
    }

    pub fn from_values(
        mesh: &PartitionedMesh,
        a: Vec<MatValue>,
        p: Vec<f64>,
        modes: &[ExtensionMode],
    ) -> Result<Self> {
        let dim = mesh.dim;
        for (c, m) in a.iter().enumerate() {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    if (m[i][j] - m[j][i]).abs() > 1e-14 {
                        return Err(SkelError::Coefficient(format!(
                            "A is not symmetric in cell {c}"
                        )));
                    }
                }
            }
            let (lo, _) = sym_eig_range(m, dim);
            if lo <= 0.0 {
                return Err(SkelError::Coefficient(format!(
                    "A is not positive definite in cell {c} (lambda_min = {lo})"
                )));
            }
        }
        for (c, &v) in p.iter().enumerate() {
            if v <= 0.0 {
                return Err(SkelError::Coefficient(format!(
                    "p is not positive in cell {c} (p = {v})"
                )));
            }
        }
        if modes.len() != mesh.n_regions as usize {
            return Err(SkelError::Coefficient(format!(
                "expected {} extension modes, got {}",
                mesh.n_regions,
                modes.len()
            )));
        }
        let mut ext = Vec::with_capacity(modes.len());
        for (idx, &mode) in modes.iter().enumerate() {
            let j = (idx + 1) as u32;
            match mode {
                ExtensionMode::Global => ext.push(Extension::Global),
                ExtensionMode::ConstantFreeze => {
                    let cells = mesh.cells_with_tag(j);
                    let a0 = a[cells[0]];
                    let p0 = p[cells[0]];
                    for &c in &cells {
                        let same_a = (0..dim)
                            .all(|r| (0..dim).all(|s| (a[c][r][s] - a0[r][s]).abs() <= 1e-14));
                        if !same_a || (p[c] - p0).abs() > 1e-14 {
                            return Err(SkelError::Coefficient(format!(
                                "ConstantFreeze for subdomain {j}: coefficients vary on the subdomain (cell {c})"
                            )));
                        }
                    }
                    ext.push(Extension::Frozen { a: a0, p: p0 });
                }
            }
        }
        Ok(Self { dim, a, p, ext })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Global coefficient value on a cell.
    pub fn a(&self, cell: usize) -> &MatValue {
        &self.a[cell]
    }

    pub fn p(&self, cell: usize) -> f64 {
        self.p[cell]
    }

    /// Extended coefficient `A_j^ext` on a cell.
    pub fn ext_a(&self, j: u32, cell: usize) -> &MatValue {
        match &self.ext[(j - 1) as usize] {
            Extension::Global => &self.a[cell],
            Extension::Frozen { a, .. } => a,
        }
    }

    pub fn ext_p(&self, j: u32, cell: usize) -> f64 {
        match &self.ext[(j - 1) as usize] {
            Extension::Global => self.p[cell],
            Extension::Frozen { p, .. } => *p,
        }
    }

    pub fn mode(&self, j: u32) -> ExtensionMode {
        match &self.ext[(j - 1) as usize] {
            Extension::Global => ExtensionMode::Global,
            Extension::Frozen { .. } => ExtensionMode::ConstantFreeze,
        }
    }

    /// Reference coefficients `A = I`, `p = 1` on the same mesh, used to
    /// build the frozen norm Grams.
    pub fn reference(mesh: &PartitionedMesh) -> Self {
        let modes = vec![ExtensionMode::Global; mesh.n_regions as usize];
        Self::from_rules(mesh, &MatRule::Identity, &ScalRule::Constant(1.0), &modes)
            .expect("reference coefficients are valid")
    }
}

/// Spectral bounds of a matrix field and a scalar field over a cell set.
#[derive(Debug, Clone, Copy)]
pub struct SpectralBounds {
    pub lambda_mat: f64,
    pub cap_mat: f64,
    pub lambda_scal: f64,
    pub cap_scal: f64,
}

impl SpectralBounds {
    /// `lambda_j = min(lambda(p), lambda(A))`.
    pub fn lambda(&self) -> f64 {
        self.lambda_mat.min(self.lambda_scal)
    }

    /// `Lambda_j = max(Lambda(p), Lambda(A))`.
    pub fn cap(&self) -> f64 {
        self.cap_mat.max(self.cap_scal)
    }
}

/// Spectral bounds of the extended coefficients of subdomain `j` over a cell
/// region (brute-force scan over cells).
pub fn spectral_bounds(
    coeffs: &CoefficientField,
    j: u32,
    region: &[usize],
) -> Result<SpectralBounds> {
    if region.is_empty() {
        return Err(SkelError::Input("spectral bounds over empty region".into()));
    }
    let mut b = SpectralBounds {
        lambda_mat: f64::INFINITY,
        cap_mat: f64::NEG_INFINITY,
        lambda_scal: f64::INFINITY,
        cap_scal: f64::NEG_INFINITY,
    };
    for &c in region {
        let (lo, hi) = sym_eig_range(coeffs.ext_a(j, c), coeffs.dim);
        if lo <= 0.0 {
            return Err(SkelError::Coefficient(format!(
                "non-SPD coefficient in cell {c}"
            )));
        }
        b.lambda_mat = b.lambda_mat.min(lo);
        b.cap_mat = b.cap_mat.max(hi);
        let p = coeffs.ext_p(j, c);
        b.lambda_scal = b.lambda_scal.min(p);
        b.cap_scal = b.cap_scal.max(p);
    }
    Ok(b)
}

/// `lambda_j`, `Lambda_j` of subdomain `j` (extension scanned over all cells).
pub fn subdomain_bounds(coeffs: &CoefficientField, j: u32, n_cells: usize) -> (f64, f64) {
    let region: Vec<usize> = (0..n_cells).collect();
    let b = spectral_bounds(coeffs, j, &region).expect("validated field");
    (b.lambda(), b.cap())
}

/// Global `lambda = min_j lambda_j`, `Lambda = max_j Lambda_j`.
pub fn global_bounds(coeffs: &CoefficientField, n_regions: u32, n_cells: usize) -> (f64, f64) {
    let mut lam = f64::INFINITY;
    let mut cap = f64::NEG_INFINITY;
    for j in 1..=n_regions {
        let (l, c) = subdomain_bounds(coeffs, j, n_cells);
        lam = lam.min(l);
        cap = cap.max(c);
    }
    (lam, cap)
}

/// Complex frequency with `Re s > 0`, `|s| >= s0`.
#[derive(Debug, Clone, Copy)]
pub struct Frequency {
    pub s: C64,
    pub s0: f64,
}

impl Frequency {
    pub fn modulus(&self) -> f64 {
        self.s.norm()
    }

    /// `mu = s / |s|`.
    pub fn mu(&self) -> C64 {
        self.s / self.s.norm()
    }

    /// Principal square root of `s`.
    pub fn sqrt_s(&self) -> C64 {
        self.s.sqrt()
    }
}

pub fn validate_frequency(s: C64, s0: f64) -> Result<Frequency> {
    if s.re <= 0.0 {
        return Err(SkelError::FrequencyHalfPlane(s.re));
    }
    if s.norm() < s0 {
        return Err(SkelError::FrequencyFloor { norm: s.norm(), s0 });
    }
    Ok(Frequency { s, s0 })
}
