//! Finite-dimensional Lie algebras over the rationals.
//!
//! An algebra is stored by its structure constants `c[i][j][k]`, meaning
//! `[e_i, e_j] = sum_k c[i][j][k] e_k`. Indices are zero-based throughout.
//! The matrix algebras (`so3`, `sl(n)`, `su(n)`) also keep a matrix
//! realization with Gaussian-rational entries; that is what lets
//! `negate_transpose` and permutation conjugation be turned into exact
//! automorphism matrices.

use std::fmt;

use itertools::Itertools;
use num::{Complex, One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::QMatrix;
use crate::scalar::{self, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraVector(pub Vec<Scalar>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualVector(pub Vec<Scalar>);

macro_rules! coeff_vector {
    ($t:ident) => {
        impl $t {
            pub fn zero(dim: usize) -> Self {
                Self(vec![Scalar::zero(); dim])
            }

            pub fn basis(dim: usize, i: usize) -> Self {
                let mut v = Self::zero(dim);
                v.0[i] = Scalar::one();
                v
            }

            pub fn from_ints(coeffs: &[i64]) -> Self {
                Self(coeffs.iter().map(|&c| scalar::int(c)).collect())
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn coeffs(&self) -> &[Scalar] {
                &self.0
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(Zero::is_zero)
            }

            pub fn scale(&self, s: &Scalar) -> Self {
                Self(self.0.iter().map(|x| x * s).collect())
            }

            pub fn neg(&self) -> Self {
                Self(self.0.iter().map(|x| -x).collect())
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                check_dim(self.dim(), other.dim())?;
                Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                check_dim(self.dim(), other.dim())?;
                Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
            }

            pub fn max_abs(&self) -> Scalar {
                scalar::max_abs(&self.0)
            }

            /// Random vector with small rational coefficients.
            pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
                Self((0..dim).map(|_| scalar::ratio(rng.random_range(-4..=4), rng.random_range(1..=3))).collect())
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let parts: Vec<String> = self.0.iter().map(scalar::format).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    };
}

coeff_vector!(AlgebraVector);
coeff_vector!(DualVector);

impl DualVector {
    /// True iff some coefficient is nonzero.
    pub fn is_nondegenerate(&self) -> bool {
        !self.is_zero()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

type Entry = Complex<Scalar>;

/// Square matrix with Gaussian-rational entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Entry>,
}

impl CMatrix {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![Entry::zero(); n * n] }
    }

    fn unit(n: usize, r: usize, c: usize, v: Entry) -> Self {
        let mut m = Self::zeros(n);
        m.data[r * n + c] = v;
        m
    }

    fn at(&self, r: usize, c: usize) -> &Entry {
        &self.data[r * self.n + c]
    }

    fn add(&self, o: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    fn sub(&self, o: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * o.at(k, c);
                }
            }
        }
        out
    }

    fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    fn negate_transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = -self.at(r, c).clone();
            }
        }
        out
    }

    /// `P X P^{-1}` for the permutation matrix `P e_i = e_{perm[i]}`.
    fn conjugate_by_permutation(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[perm[r] * n + perm[c]] = self.at(r, c).clone();
            }
        }
        out
    }

    fn flatten(&self) -> Vec<Scalar> {
        self.data.iter().map(|z| z.re.clone()).chain(self.data.iter().map(|z| z.im.clone())).collect()
    }
}

/// Matrix realization of a basis plus an exact coordinate extractor.
#[derive(Clone, Debug)]
struct Realization {
    basis: Vec<CMatrix>,
    pivot_rows: Vec<usize>,
    solver: QMatrix,
}

impl Realization {
    fn new(basis: Vec<CMatrix>) -> Result<Self> {
        let dim = basis.len();
        let flat: Vec<Vec<Scalar>> = basis.iter().map(CMatrix::flatten).collect();
        let (_, pivots) = QMatrix::from_rows(flat.clone())?.rref();
        if pivots.len() != dim {
            return Err(Error::InvalidModel("realization basis is linearly dependent".into()));
        }
        let square: Vec<Vec<Scalar>> =
            pivots.iter().map(|&p| flat.iter().map(|b| b[p].clone()).collect()).collect();
        let solver = QMatrix::from_rows(square)?.inverse()?;
        Ok(Self { basis, pivot_rows: pivots, solver })
    }

    fn coords(&self, m: &CMatrix) -> Result<Vec<Scalar>> {
        let flat = m.flatten();
        let rhs: Vec<Scalar> = self.pivot_rows.iter().map(|&p| flat[p].clone()).collect();
        let coords = self.solver.mul_vec(&rhs)?;
        let mut rebuilt = CMatrix::zeros(m.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            for (o, x) in rebuilt.data.iter_mut().zip(&b.data) {
                *o += x * c;
            }
        }
        if rebuilt != *m {
            return Err(Error::InvalidModel("matrix lies outside the realized algebra".into()));
        }
        Ok(coords)
    }
}

#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    constants: Vec<Scalar>,
    labels: Vec<String>,
    realization: Option<Realization>,
}

impl PartialEq for LieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.dim == other.dim && self.constants == other.constants && self.labels == other.labels
    }
}

/// Location of the first failing Jacobi sum, zero-based `(i, j, l, k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiWitness {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub k: usize,
    pub value: Scalar,
}

impl LieAlgebra {
    /// Builds an algebra from sparse `(i, j, k, c)` entries. Entries are taken
    /// literally; antisymmetry and Jacobi are reported, not enforced.
    pub fn from_constants(
        name: impl Into<String>,
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, Scalar)>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange("algebra dimension must be positive".into()));
        }
        let mut constants = vec![Scalar::zero(); dim * dim * dim];
        for (i, j, k, c) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::OutOfRange(format!("structure constant index ({i},{j},{k}) for dim {dim}")));
            }
            constants[(i * dim + j) * dim + k] = c;
        }
        let labels = labels.unwrap_or_else(|| (1..=dim).map(|i| format!("e{i}")).collect());
        check_dim(dim, labels.len())?;
        Ok(Self { name: name.into(), dim, constants, labels, realization: None })
    }

    fn from_realization(name: &str, basis: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        let dim = basis.len();
        let real = Realization::new(basis)?;
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let coords = real.coords(&real.basis[i].commutator(&real.basis[j]))?;
                entries.extend(coords.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (i, j, k, c)));
            }
        }
        let mut alg = Self::from_constants(name, dim, entries, Some(labels))?;
        alg.realization = Some(real);
        Ok(alg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_realization(&self) -> bool {
        self.realization.is_some()
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> &Scalar {
        &self.constants[(i * self.dim + j) * self.dim + k]
    }

    /// Nonzero structure constants in `(i, j, k)` order.
    pub fn nonzero_constants(&self) -> Vec<(usize, usize, usize, Scalar)> {
        let n = self.dim;
        (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .filter_map(|(i, j, k)| {
                let c = self.c(i, j, k);
                (!c.is_zero()).then(|| (i, j, k, c.clone()))
            })
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.constants.iter().all(Zero::is_zero)
    }

    pub fn basis_vector(&self, i: usize) -> AlgebraVector {
        AlgebraVector::basis(self.dim, i)
    }

    pub fn dual_basis_vector(&self, i: usize) -> DualVector {
        DualVector::basis(self.dim, i)
    }

    pub fn basis_bracket(&self, i: usize, j: usize) -> AlgebraVector {
        AlgebraVector((0..self.dim).map(|k| self.c(i, j, k).clone()).collect())
    }

    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, y.dim())?;
        let n = self.dim;
        let mut out = vec![Scalar::zero(); n];
        for (i, xi) in x.0.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, yj) in y.0.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                let xy = xi * yj;
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.c(i, j, k);
                    if !c.is_zero() {
                        *o += &xy * c;
                    }
                }
            }
        }
        Ok(AlgebraVector(out))
    }

    fn jacobi_sum(&self, i: usize, j: usize, l: usize, k: usize) -> Scalar {
        (0..self.dim).fold(Scalar::zero(), |acc, m| {
            acc + self.c(i, j, m) * self.c(m, l, k) + self.c(j, l, m) * self.c(m, i, k) + self.c(l, i, m) * self.c(m, j, k)
        })
    }

    /// First `(i, j, l, k)` with a nonzero Jacobi sum, if any.
    pub fn jacobi_witness(&self) -> Option<JacobiWitness> {
        let n = self.dim;
        (0..n).cartesian_product(0..n).cartesian_product(0..n).cartesian_product(0..n).find_map(|(((i, j), l), k)| {
            let value = self.jacobi_sum(i, j, l, k);
            (!value.is_zero()).then_some(JacobiWitness { i, j, l, k, value })
        })
    }

    /// Max absolute Jacobi sum over all index quadruples.
    pub fn jacobi_residual(&self) -> Scalar {
        let n = self.dim;
        (0..n)
            .cartesian_product(0..n)
            .cartesian_product(0..n)
            .cartesian_product(0..n)
            .map(|(((i, j), l), k)| self.jacobi_sum(i, j, l, k).abs())
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    /// Max `|c[i][j][k] + c[j][i][k]|`.
    pub fn antisymmetry_residual(&self) -> Scalar {
        let n = self.dim;
        (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .map(|(i, j, k)| (self.c(i, j, k) + self.c(j, i, k)).abs())
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn pairing(&self, xi: &DualVector, x: &AlgebraVector) -> Result<Scalar> {
        check_dim(self.dim, xi.dim())?;
        check_dim(self.dim, x.dim())?;
        Ok(xi.0.iter().zip(&x.0).fold(Scalar::zero(), |acc, (a, b)| acc + a * b))
    }

    /// `ad*_Z xi`, defined by `<ad*_Z xi, Y> = -<xi, [Z, Y]>`.
    pub fn coadjoint(&self, z: &AlgebraVector, xi: &DualVector) -> Result<DualVector> {
        check_dim(self.dim, z.dim())?;
        check_dim(self.dim, xi.dim())?;
        let n = self.dim;
        let out = (0..n)
            .map(|j| {
                let mut acc = Scalar::zero();
                for (i, zi) in z.0.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                    for (k, xk) in xi.0.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                        acc += zi * xk * self.c(i, j, k);
                    }
                }
                -acc
            })
            .collect();
        Ok(DualVector(out))
    }

    /// Matrix of `ad_Z` on coefficient vectors (column `j` is `[Z, e_j]`).
    pub fn ad_matrix(&self, z: &AlgebraVector) -> Result<QMatrix> {
        let cols: Result<Vec<Vec<Scalar>>> =
            (0..self.dim).map(|j| self.bracket(z, &self.basis_vector(j)).map(|v| v.0)).collect();
        Ok(QMatrix::from_columns(self.dim, &cols?))
    }

    /// Matrix of `ad*_Z` on dual coefficient vectors.
    pub fn coadjoint_matrix(&self, z: &AlgebraVector) -> Result<QMatrix> {
        let cols: Result<Vec<Vec<Scalar>>> =
            (0..self.dim).map(|j| self.coadjoint(z, &self.dual_basis_vector(j)).map(|v| v.0)).collect();
        Ok(QMatrix::from_columns(self.dim, &cols?))
    }

    /// Killing form `K_ij = tr(ad_{e_i} ad_{e_j})`.
    pub fn killing_form(&self) -> QMatrix {
        let n = self.dim;
        let mut k = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Scalar::zero();
                for a in 0..n {
                    for b in 0..n {
                        let x = self.c(i, a, b);
                        if !x.is_zero() {
                            acc += x * self.c(j, b, a);
                        }
                    }
                }
                k[(i, j)] = acc;
            }
        }
        k
    }

    fn realization(&self) -> Result<&Realization> {
        self.realization.as_ref().ok_or_else(|| Error::NoRealization(self.name.clone()))
    }

    /// Matrix size of the realization, if one is stored.
    pub fn realization_size(&self) -> Option<usize> {
        self.realization.as_ref().map(|r| r.basis[0].n)
    }

    fn matrix_map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Result<QMatrix> {
        let real = self.realization()?;
        let cols: Result<Vec<Vec<Scalar>>> = real.basis.iter().map(|b| real.coords(&f(b))).collect();
        Ok(QMatrix::from_columns(self.dim, &cols?))
    }
}

fn c_real(x: i64) -> Entry {
    Complex::new(scalar::int(x), Scalar::zero())
}

fn c_imag(x: i64) -> Entry {
    Complex::new(Scalar::zero(), scalar::int(x))
}

fn so3() -> Result<LieAlgebra> {
    // (L_i)_{jk} = -eps_{ijk}, so [L1, L2] = L3 cyclically
    let gen = |a: usize, b: usize| CMatrix::unit(3, b, a, c_real(1)).sub(&CMatrix::unit(3, a, b, c_real(1)));
    let basis = vec![gen(1, 2), gen(2, 0), gen(0, 1)];
    LieAlgebra::from_realization("so3", basis, vec!["e1".into(), "e2".into(), "e3".into()])
}

fn sl(n: usize) -> Result<LieAlgebra> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("sl({n}) needs n >= 2")));
    }
    let mut basis = Vec::new();
    let mut labels = Vec::new();
    for k in 0..n - 1 {
        basis.push(CMatrix::unit(n, k, k, c_real(1)).sub(&CMatrix::unit(n, k + 1, k + 1, c_real(1))));
        labels.push(format!("h{}", k + 1));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                basis.push(CMatrix::unit(n, i, j, c_real(1)));
                labels.push(format!("e{}{}", i + 1, j + 1));
            }
        }
    }
    let name = if n == 2 {
        labels = vec!["h".into(), "x".into(), "y".into()];
        "sl2".to_string()
    } else {
        format!("sl{n}")
    };
    LieAlgebra::from_realization(&name, basis, labels)
}

fn su(n: usize) -> Result<LieAlgebra> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("su({n}) needs n >= 2")));
    }
    let mut basis = Vec::new();
    let mut labels = Vec::new();
    for k in 0..n - 1 {
        basis.push(CMatrix::unit(n, k, k, c_imag(1)).sub(&CMatrix::unit(n, k + 1, k + 1, c_imag(1))));
        labels.push(format!("ih{}", k + 1));
    }
    for j in 0..n {
        for k in j + 1..n {
            basis.push(CMatrix::unit(n, j, k, c_real(1)).sub(&CMatrix::unit(n, k, j, c_real(1))));
            labels.push(format!("a{}{}", j + 1, k + 1));
            basis.push(CMatrix::unit(n, j, k, c_imag(1)).add(&CMatrix::unit(n, k, j, c_imag(1))));
            labels.push(format!("s{}{}", j + 1, k + 1));
        }
    }
    LieAlgebra::from_realization(&format!("su{n}"), basis, labels)
}

fn abelian(n: usize) -> Result<LieAlgebra> {
    LieAlgebra::from_constants(format!("abelian{n}"), n, std::iter::empty(), None)
}

fn split_family(name: &str) -> Option<(&str, usize)> {
    let t = name.trim().to_ascii_lowercase();
    let t = t.replace(['(', ')', '_', ':'], "");
    let pos = t.find(|c: char| c.is_ascii_digit())?;
    let n = t[pos..].parse().ok()?;
    ["sl", "su", "so", "abelian"].into_iter().find(|f| *f == &t[..pos]).map(|f| (f, n))
}

/// Builtin algebras: `so3`, `sl2`, `sl3`, `sl(n)`, `su(n)`, `abelian(n)`.
pub fn builtin_algebra(name: &str) -> Result<LieAlgebra> {
    let unknown = || Error::UnknownAlgebra(name.to_string());
    let (family, n) = split_family(name).ok_or_else(unknown)?;
    match family {
        "so" if n == 3 => so3(),
        "sl" if (2..=6).contains(&n) => sl(n),
        "su" if (2..=6).contains(&n) => su(n),
        "abelian" if n >= 1 => abelian(n),
        _ => Err(unknown()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomorphismKind {
    Identity,
    /// `X -> -X^T` on a matrix realization.
    NegateTranspose,
    /// `X -> -X`; only a homomorphism on abelian algebras.
    InverseMirror,
    /// `X -> P X P^{-1}` with `P e_i = e_{perm[i]}` (zero-based images).
    Permutation(Vec<usize>),
}

impl AutomorphismKind {
    /// Parses `identity`, `negate-transpose`, `inverse-mirror`, or
    /// `weyl:<images>` / `permutation:<images>` where the images are the
    /// one-based one-line notation (`231` or `2,3,1`).
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        match t.as_str() {
            "identity" => return Ok(Self::Identity),
            "negate_transpose" | "cartan" => return Ok(Self::NegateTranspose),
            "inverse_mirror" => return Ok(Self::InverseMirror),
            _ => {}
        }
        let Some((head, perm)) = t.split_once(':') else {
            return Err(Error::UnknownAutomorphism(s.to_string()));
        };
        if head != "weyl" && head != "permutation" {
            return Err(Error::UnknownAutomorphism(s.to_string()));
        }
        let images: Option<Vec<usize>> = if perm.contains(',') {
            perm.split(',').map(|p| p.trim().parse::<usize>().ok()).collect()
        } else {
            perm.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect()
        };
        let images = images.ok_or_else(|| Error::UnknownAutomorphism(s.to_string()))?;
        let zero_based: Vec<usize> = images.iter().map(|&i| i.wrapping_sub(1)).collect();
        validate_permutation(&zero_based)?;
        Ok(Self::Permutation(zero_based))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::NegateTranspose => "negate_transpose".into(),
            Self::InverseMirror => "inverse_mirror".into(),
            Self::Permutation(p) => format!("weyl:{}", p.iter().map(|i| (i + 1).to_string()).join(",")),
        }
    }
}

fn validate_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// A validated Lie algebra automorphism acting on coefficient vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAutomorphism {
    algebra: String,
    matrix: QMatrix,
    inverse: QMatrix,
    label: String,
}

impl LieAutomorphism {
    /// Validates invertibility and `A[e_i,e_j] = [Ae_i, Ae_j]` on every basis pair.
    pub fn new(algebra: &LieAlgebra, matrix: QMatrix, label: impl Into<String>) -> Result<Self> {
        let n = algebra.dim();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.rows().max(matrix.cols()) });
        }
        let inverse = matrix.inverse()?;
        debug_assert!(matrix.mul(&inverse)?.is_identity());
        let images: Vec<AlgebraVector> = (0..n).map(|i| AlgebraVector(matrix.column(i))).collect();
        for i in 0..n {
            for j in 0..n {
                let lhs = matrix.mul_vec(&algebra.basis_bracket(i, j).0)?;
                let rhs = algebra.bracket(&images[i], &images[j])?;
                if lhs != rhs.0 {
                    return Err(Error::NotAutomorphism {
                        i: i + 1,
                        j: j + 1,
                        detail: format!("A[e{},e{}] = {} but [Ae{},Ae{}] = {}", i + 1, j + 1, AlgebraVector(lhs), i + 1, j + 1, rhs),
                    });
                }
            }
        }
        Ok(Self { algebra: algebra.name().to_string(), matrix, inverse, label: label.into() })
    }

    pub fn identity(algebra: &LieAlgebra) -> Self {
        let n = algebra.dim();
        Self { algebra: algebra.name().to_string(), matrix: QMatrix::identity(n), inverse: QMatrix::identity(n), label: "identity".into() }
    }

    pub fn algebra_name(&self) -> &str {
        &self.algebra
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &QMatrix {
        &self.inverse
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(AlgebraVector(self.matrix.mul_vec(&x.0)?))
    }

    pub fn apply_inverse(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(AlgebraVector(self.inverse.mul_vec(&x.0)?))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LieAutomorphism) -> Result<LieAutomorphism> {
        Ok(Self {
            algebra: self.algebra.clone(),
            matrix: self.matrix.mul(&other.matrix)?,
            inverse: other.inverse.mul(&self.inverse)?,
            label: format!("{}*{}", self.label, other.label),
        })
    }

    pub fn inverted(&self) -> LieAutomorphism {
        Self {
            algebra: self.algebra.clone(),
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            label: format!("{}^-1", self.label),
        }
    }

    pub fn is_involution(&self) -> bool {
        self.matrix == self.inverse
    }
}

pub fn builtin_automorphism(algebra: &LieAlgebra, kind: &AutomorphismKind) -> Result<LieAutomorphism> {
    let n = algebra.dim();
    let matrix = match kind {
        AutomorphismKind::Identity => QMatrix::identity(n),
        AutomorphismKind::InverseMirror => QMatrix::identity(n).scale(&-Scalar::one()),
        AutomorphismKind::NegateTranspose => algebra.matrix_map(CMatrix::negate_transpose)?,
        AutomorphismKind::Permutation(perm) => {
            validate_permutation(perm)?;
            let size = algebra.realization_size().ok_or_else(|| Error::NoRealization(algebra.name().to_string()))?;
            if perm.len() != size {
                return Err(Error::InvalidPermutation(perm.clone()));
            }
            algebra.matrix_map(|m| m.conjugate_by_permutation(perm))?
        }
    };
    LieAutomorphism::new(algebra, matrix, kind.label())
}

/// The `n!` permutation-conjugation automorphisms of `sl(n)`, in
/// lexicographic order of the permutations.
pub fn weyl_mirrors(n: usize) -> Result<Vec<LieAutomorphism>> {
    if !(2..=5).contains(&n) {
        return Err(Error::OutOfRange(format!("weyl_mirrors needs 2 <= n <= 5, got {n}")));
    }
    let alg = sl(n)?;
    (0..n)
        .permutations(n)
        .map(|p| builtin_automorphism(&alg, &AutomorphismKind::Permutation(p)))
        .collect()
}
