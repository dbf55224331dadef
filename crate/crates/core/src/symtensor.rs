//! The symmetric algebra `S(g)` in the multiset basis.
//!
//! A degree-`k` tensor is a sparse map from sorted index multisets to
//! rational coefficients, so equal tensors have identical maps.
//!
//! Tensors are evaluated as symmetric multilinear functionals. With the
//! basis pairing, the monomial `e_{i1} ⊙ … ⊙ e_{ik}` evaluates on
//! `(X_1, …, X_k)` to `(1/k!) Σ_σ Π_t (X_{σ(t)})_{i_t}`. A monomial evaluated
//! on its own basis vectors therefore gives `Π m_r! / k!`, one over the
//! multinomial coefficient of its multiplicities.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use itertools::Itertools;
use num::{BigInt, One, Zero};

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, LieAlgebra};
use crate::linalg::{QMatrix, SparseMatrix};
use crate::scalar::{self, Scalar};

/// Sorted multiset of basis indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn merge(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Self::new(v)
    }

    /// The multiset with the factor at `pos` removed.
    pub fn without(&self, pos: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.remove(pos);
        Self(v)
    }

    /// `k! / Π m_r!` for the multiplicities `m_r`.
    pub fn multinomial(&self) -> BigInt {
        let mults = self.0.iter().dedup_with_count().map(|(c, _)| scalar::factorial(c));
        scalar::factorial(self.0.len()) / mults.fold(BigInt::one(), |a, b| a * b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", self.0.iter().map(|i| format!("e{}", i + 1)).join("⊙"))
    }
}

/// All multisets of size `k` over `0..dim`, in lexicographic order.
pub fn sym_basis(dim: usize, k: usize) -> Vec<MultiIndex> {
    (0..dim).combinations_with_replacement(k).map(MultiIndex).collect()
}

pub fn sym_dim(dim: usize, k: usize) -> usize {
    if dim == 0 {
        return usize::from(k == 0);
    }
    scalar::binomial(dim + k - 1, k)
}

/// Enumerated basis of `S^k` with a reverse lookup.
#[derive(Clone, Debug)]
pub struct SymBasis {
    dim: usize,
    degree: usize,
    elems: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl SymBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let elems = sym_basis(dim, degree);
        let index = elems.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Self { dim, degree, elems, index }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn elems(&self) -> &[MultiIndex] {
        &self.elems
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn to_coords(&self, t: &SymTensor) -> Result<BTreeMap<usize, Scalar>> {
        if t.degree != self.degree || t.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.degree, got: t.degree });
        }
        Ok(t.terms.iter().map(|(m, c)| (self.index[m], c.clone())).collect())
    }

    pub fn from_coords<'a>(&self, coords: impl IntoIterator<Item = (usize, &'a Scalar)>) -> SymTensor {
        let mut t = SymTensor::zero(self.dim, self.degree);
        for (i, c) in coords {
            t.add_term(self.elems[i].clone(), c.clone());
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymTensor {
    dim: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, Scalar>,
}

impl SymTensor {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, terms: BTreeMap::new() }
    }

    pub fn one(dim: usize) -> Self {
        Self::monomial(dim, MultiIndex::empty(), Scalar::one())
    }

    pub fn monomial(dim: usize, m: MultiIndex, c: Scalar) -> Self {
        let mut t = Self::zero(dim, m.degree());
        t.add_term(m, c);
        t
    }

    pub fn from_vector(v: &AlgebraVector) -> Self {
        let mut t = Self::zero(v.dim(), 1);
        for (i, c) in v.coeffs().iter().enumerate() {
            t.add_term(MultiIndex(vec![i]), c.clone());
        }
        t
    }

    /// Builds a tensor from sparse `(indices, coefficient)` terms; indices are
    /// sorted into normal form and repeated keys accumulate.
    pub fn from_terms(dim: usize, degree: usize, terms: impl IntoIterator<Item = (Vec<usize>, Scalar)>) -> Result<Self> {
        let mut t = Self::zero(dim, degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::DimensionMismatch { expected: degree, got: idx.len() });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
                return Err(Error::OutOfRange(format!("basis index {bad} for dim {dim}")));
            }
            t.add_term(MultiIndex::new(idx), c);
        }
        Ok(t)
    }

    /// Tensor whose evaluation on `(e_{i1}, …, e_{ik})` equals `values(m)` for
    /// every basis multiset `m` (basis pairing).
    pub fn from_basis_values(dim: usize, degree: usize, mut values: impl FnMut(&MultiIndex) -> Scalar) -> Self {
        let mut t = Self::zero(dim, degree);
        for m in sym_basis(dim, degree) {
            let v = values(&m);
            if !v.is_zero() {
                let c = v * Scalar::from_integer(m.multinomial());
                t.add_term(m, c);
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Scalar> {
        &self.terms
    }

    pub fn coeff(&self, m: &MultiIndex) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> Scalar {
        scalar::max_abs(self.terms.values())
    }

    pub fn add_term(&mut self, m: MultiIndex, c: Scalar) {
        debug_assert_eq!(m.degree(), self.degree);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_same_space(&self, other: &SymTensor) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.degree != other.degree {
            return Err(Error::DimensionMismatch { expected: self.degree, got: other.degree });
        }
        Ok(())
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SymTensor) -> Result<SymTensor> {
        self.add(&other.scale(&-Scalar::one()))
    }

    /// In-place `self += s * other`.
    pub fn add_scaled(&mut self, other: &SymTensor, s: &Scalar) -> Result<()> {
        self.check_same_space(other)?;
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
        Ok(())
    }

    pub fn scale(&self, s: &Scalar) -> SymTensor {
        let mut out = Self::zero(self.dim, self.degree);
        if !s.is_zero() {
            out.terms = self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect();
        }
        out
    }

    /// The symmetric product: multisets merge, coefficients multiply.
    pub fn sym_product(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.merge(m2), c1 * c2);
            }
        }
        Ok(out)
    }

    /// Symmetric multilinear evaluation under the basis pairing.
    pub fn eval(&self, args: &[AlgebraVector]) -> Result<Scalar> {
        if args.len() != self.degree {
            return Err(Error::Arity { degree: self.degree, args: args.len() });
        }
        if let Some(bad) = args.iter().find(|a| a.dim() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: bad.dim() });
        }
        let k = self.degree;
        let norm = Scalar::from_integer(scalar::factorial(k));
        let mut total = Scalar::zero();
        for (m, c) in &self.terms {
            // permanent of P[t][s] = args[s][i_t]
            let mut perm = Scalar::zero();
            for sigma in (0..k).permutations(k) {
                let mut prod = Scalar::one();
                for (t, &s) in sigma.iter().enumerate() {
                    let x = &args[s].coeffs()[m.0[t]];
                    if x.is_zero() {
                        prod = Scalar::zero();
                        break;
                    }
                    prod *= x;
                }
                perm += prod;
            }
            total += c * perm;
        }
        Ok(total / norm)
    }

    /// Evaluation under an arbitrary pairing.
    pub fn eval_with(&self, pairing: &Pairing, args: &[AlgebraVector]) -> Result<Scalar> {
        match pairing {
            Pairing::Basis => self.eval(args),
            Pairing::Form { gram, .. } => {
                let lowered: Result<Vec<AlgebraVector>> = args.iter().map(|a| gram.mul_vec(a.coeffs()).map(AlgebraVector)).collect();
                self.eval(&lowered?)
            }
        }
    }
}

impl fmt::Display for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("{}·{}", scalar::format(c), m)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Matrix of the symmetric power `Sym^k(M)` on `S^k` in [`sym_basis`] order:
/// the column of `e_{i1} ⊙ … ⊙ e_{ik}` is `(M e_{i1}) ⊙ … ⊙ (M e_{ik})`.
pub fn sym_power_matrix(m: &QMatrix, k: usize) -> Result<SparseMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch { expected: m.rows(), got: m.cols() });
    }
    let dim = m.rows();
    let basis = SymBasis::new(dim, k);
    let images: Vec<SymTensor> = (0..dim).map(|i| SymTensor::from_vector(&AlgebraVector(m.column(i)))).collect();
    let columns: Result<Vec<BTreeMap<usize, Scalar>>> = basis
        .elems()
        .iter()
        .map(|mi| {
            let mut t = SymTensor::one(dim);
            for &i in mi.indices() {
                t = t.sym_product(&images[i])?;
            }
            basis.to_coords(&t)
        })
        .collect();
    Ok(SparseMatrix::from_columns(basis.len(), columns?))
}

/// How a symmetric tensor over `g` is read as a multilinear functional.
///
/// `Basis` pairs `e_i` with `e_i*`. `Form` pairs through a nondegenerate
/// symmetric bilinear form (`u ↦ B(u, ·)`), e.g. the Killing form, which
/// every automorphism preserves.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Pairing {
    #[default]
    Basis,
    Form { gram: QMatrix, gram_inv: QMatrix },
}

impl Pairing {
    pub fn form(gram: QMatrix) -> Result<Self> {
        if gram != gram.transpose() {
            return Err(Error::InvalidModel("pairing form must be symmetric".into()));
        }
        let gram_inv = gram.inverse().map_err(|_| Error::DegenerateForm)?;
        Ok(Self::Form { gram, gram_inv })
    }

    /// The Killing form of `algebra`; errors when it is degenerate.
    pub fn killing(algebra: &LieAlgebra) -> Result<Self> {
        Self::form(algebra.killing_form())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Pairing::Basis => "basis",
            Pairing::Form { .. } => "form",
        }
    }

    /// Converts a tensor built with the basis pairing (one whose
    /// [`SymTensor::eval`] reproduces a functional) into the tensor that
    /// reproduces the same functional under this pairing.
    pub fn raise(&self, t: &SymTensor) -> Result<SymTensor> {
        match self {
            Pairing::Basis => Ok(t.clone()),
            Pairing::Form { gram_inv, .. } => {
                let basis = SymBasis::new(t.dim(), t.degree());
                let mat = sym_power_matrix(gram_inv, t.degree())?;
                let coords = basis.to_coords(t)?;
                let v: Vec<Scalar> = (0..basis.len()).map(|i| coords.get(&i).cloned().unwrap_or_else(Scalar::zero)).collect();
                let out = mat.mul_vec(&v)?;
                Ok(basis.from_coords(out.iter().enumerate().filter(|(_, c)| !c.is_zero())))
            }
        }
    }

    /// The matrix `N` such that `Sym^k(N)` transports tensors along an
    /// automorphism `A` compatibly with evaluation: `eval(Sym^k(N) s, X…) =
    /// eval(s, A^{-1}X…)`. `N = (A^{-1})^T` for the basis pairing and
    /// `G^{-1} (A^{-1})^T G` for a form with Gram matrix `G`.
    pub fn transport_matrix(&self, a_inv: &QMatrix) -> Result<QMatrix> {
        let at = a_inv.transpose();
        match self {
            Pairing::Basis => Ok(at),
            Pairing::Form { gram, gram_inv } => gram_inv.mul(&at)?.mul(gram),
        }
    }
}
