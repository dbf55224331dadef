//! The Spencer complex over a finite differential graded model of the base.
//!
//! In the total grading the degree-`k` space is `⊕_{i+j=k} Ω^i ⊗ S^j` with
//! `D(ω⊗s) = dω⊗s + (-1)^i ω⊗δ^λ s`. Coordinates inside a block `(i, j)`
//! are `a * dim S^j + b` for the `a`-th form and the `b`-th monomial.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{DualVector, LieAlgebra};
use crate::linalg::{QMatrix, SparseMatrix};
use crate::mirror::{induced_tensor_map, mirror_lambda, sign_chain_sign, MirrorTransform};
use crate::scalar::{self, Scalar};
use crate::spencer::{LeibnizConvention, SpencerOperator};
use crate::symtensor::{sym_dim, Pairing, SymBasis};

/// Product of basis elements `(p, a) · (q, b)`, as coordinates in degree `p + q`.
pub type ProductTable = BTreeMap<(usize, usize, usize, usize), BTreeMap<usize, Scalar>>;

/// A finite commutative differential graded algebra standing in for `Ω(M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DGAModel {
    name: String,
    basis: Vec<Vec<String>>,
    /// `d_i : degree i → degree i+1` for `i < top degree`.
    differentials: Vec<SparseMatrix>,
    product: Option<ProductTable>,
}

impl DGAModel {
    /// Validates shapes, `d² = 0` and, when a product is given, graded
    /// commutativity, associativity and the Leibniz rule.
    pub fn new(name: impl Into<String>, basis: Vec<Vec<String>>, differentials: Vec<SparseMatrix>, product: Option<ProductTable>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidModel("no degrees".into()));
        }
        let top = basis.len() - 1;
        if differentials.len() != top {
            return Err(Error::InvalidModel(format!("expected {top} differentials, got {}", differentials.len())));
        }
        for (i, d) in differentials.iter().enumerate() {
            if d.cols() != basis[i].len() || d.rows() != basis[i + 1].len() {
                return Err(Error::InvalidModel(format!(
                    "d_{i} has shape {}x{}, expected {}x{}",
                    d.rows(),
                    d.cols(),
                    basis[i + 1].len(),
                    basis[i].len()
                )));
            }
        }
        for i in 0..top.saturating_sub(1) {
            let sq = differentials[i + 1].mul(&differentials[i])?;
            if !sq.is_zero() {
                return Err(Error::InvalidModel(format!("d_{} d_{} != 0", i + 1, i)));
            }
        }
        let model = Self { name: name.into(), basis, differentials, product };
        if model.product.is_some() {
            model.validate_product()?;
        }
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn top_degree(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn dim(&self, degree: usize) -> usize {
        self.basis.get(degree).map_or(0, Vec::len)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(Vec::len).collect()
    }

    pub fn basis(&self) -> &[Vec<String>] {
        &self.basis
    }

    pub fn differential(&self, degree: usize) -> SparseMatrix {
        match self.differentials.get(degree) {
            Some(d) => d.clone(),
            None => SparseMatrix::zeros(self.dim(degree + 1), self.dim(degree)),
        }
    }

    pub fn differentials(&self) -> &[SparseMatrix] {
        &self.differentials
    }

    pub fn product(&self) -> Option<&ProductTable> {
        self.product.as_ref()
    }

    pub fn has_product(&self) -> bool {
        self.product.is_some()
    }

    /// `(p, a) · (q, b)` as coordinates in degree `p + q`.
    pub fn multiply_basis(&self, p: usize, a: usize, q: usize, b: usize) -> Result<BTreeMap<usize, Scalar>> {
        let table = self.product.as_ref().ok_or(Error::NoProduct)?;
        Ok(table.get(&(p, a, q, b)).cloned().unwrap_or_default())
    }

    /// Product of coordinate vectors of degrees `p` and `q`.
    pub fn multiply(&self, p: usize, x: &[Scalar], q: usize, y: &[Scalar]) -> Result<Vec<Scalar>> {
        let mut out = vec![Scalar::zero(); self.dim(p + q)];
        for (a, xa) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (b, yb) in y.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                for (r, c) in self.multiply_basis(p, a, q, b)? {
                    out[r] += xa * yb * c;
                }
            }
        }
        Ok(out)
    }

    fn unit_vector(&self, degree: usize, a: usize) -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); self.dim(degree)];
        v[a] = Scalar::one();
        v
    }

    fn validate_product(&self) -> Result<()> {
        let table = self.product.as_ref().ok_or(Error::NoProduct)?;
        let top = self.top_degree();
        for &(p, a, q, b) in table.keys() {
            if p + q > top || a >= self.dim(p) || b >= self.dim(q) || table[&(p, a, q, b)].keys().any(|&r| r >= self.dim(p + q)) {
                return Err(Error::InvalidModel(format!("product entry ({p},{a})·({q},{b}) out of range")));
            }
        }
        let elems: Vec<(usize, usize)> = (0..=top).flat_map(|p| (0..self.dim(p)).map(move |a| (p, a))).collect();
        for &(p, a) in &elems {
            for &(q, b) in &elems {
                if p + q > top {
                    continue;
                }
                let ab = self.multiply_basis(p, a, q, b)?;
                let ba = self.multiply_basis(q, b, p, a)?;
                let sign = if (p * q) % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                let swapped: BTreeMap<usize, Scalar> = ba.into_iter().map(|(r, c)| (r, c * &sign)).collect();
                if ab != swapped {
                    return Err(Error::InvalidModel(format!("product not graded commutative on ({p},{a}), ({q},{b})")));
                }
                // d(xy) = dx·y + (-1)^p x·dy
                if p + q < top {
                    let x = self.unit_vector(p, a);
                    let y = self.unit_vector(q, b);
                    let xy = self.multiply(p, &x, q, &y)?;
                    let lhs = self.differential(p + q).mul_vec(&xy)?;
                    let mut rhs = vec![Scalar::zero(); self.dim(p + q + 1)];
                    if p < top {
                        let dx = self.differential(p).mul_vec(&x)?;
                        for (r, v) in self.multiply(p + 1, &dx, q, &y)?.into_iter().enumerate() {
                            rhs[r] += v;
                        }
                    }
                    if q < top {
                        let dy = self.differential(q).mul_vec(&y)?;
                        let s = if p % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                        for (r, v) in self.multiply(p, &x, q + 1, &dy)?.into_iter().enumerate() {
                            rhs[r] += v * &s;
                        }
                    }
                    if lhs != rhs {
                        return Err(Error::InvalidModel(format!("Leibniz rule fails on ({p},{a}), ({q},{b})")));
                    }
                }
                for &(r, c) in &elems {
                    if p + q + r > top {
                        continue;
                    }
                    let x = self.unit_vector(p, a);
                    let y = self.unit_vector(q, b);
                    let z = self.unit_vector(r, c);
                    let left = self.multiply(p + q, &self.multiply(p, &x, q, &y)?, r, &z)?;
                    let right = self.multiply(p, &x, q + r, &self.multiply(q, &y, r, &z)?)?;
                    if left != right {
                        return Err(Error::InvalidModel(format!("product not associative on ({p},{a}), ({q},{b}), ({r},{c})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `dim H^i` of the model, by rank-nullity.
    pub fn cohomology_dims(&self) -> Vec<usize> {
        let ranks: Vec<usize> = (0..=self.top_degree()).map(|i| self.differential(i).rank()).collect();
        (0..=self.top_degree())
            .map(|i| self.dim(i) - ranks[i] - if i > 0 { ranks[i - 1] } else { 0 })
            .collect()
    }
}

/// Constant-coefficient forms on the flat `n`-torus: the exterior algebra on
/// `n` degree-one generators, with `d = 0`.
pub fn torus_model(n: usize) -> Result<DGAModel> {
    if !(1..=4).contains(&n) {
        return Err(Error::OutOfRange(format!("torus model needs 1 <= n <= 4, got {n}")));
    }
    let subsets: Vec<Vec<Vec<usize>>> = (0..=n).map(|k| (0..n).combinations(k).collect()).collect();
    let label = |s: &[usize]| {
        if s.is_empty() {
            "1".to_string()
        } else {
            s.iter().map(|i| format!("dx{}", i + 1)).join("^")
        }
    };
    let basis = subsets.iter().map(|row| row.iter().map(|s| label(s)).collect()).collect();
    let differentials = (0..n).map(|k| SparseMatrix::zeros(subsets[k + 1].len(), subsets[k].len())).collect();
    let mut product = ProductTable::new();
    for (p, row_p) in subsets.iter().enumerate() {
        for (q, row_q) in subsets.iter().enumerate() {
            if p + q > n {
                continue;
            }
            for (a, s) in row_p.iter().enumerate() {
                for (b, t) in row_q.iter().enumerate() {
                    if s.iter().any(|i| t.contains(i)) {
                        continue;
                    }
                    let joined: Vec<usize> = s.iter().chain(t).copied().collect();
                    let inversions = (0..joined.len()).flat_map(|x| (x + 1..joined.len()).map(move |y| (x, y))).filter(|&(x, y)| joined[x] > joined[y]).count();
                    let sorted: Vec<usize> = joined.iter().copied().sorted().collect();
                    let r = subsets[p + q].iter().position(|u| *u == sorted).expect("subset present");
                    let c = if inversions % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    product.insert((p, a, q, b), BTreeMap::from([(r, c)]));
                }
            }
        }
    }
    DGAModel::new(format!("torus({n})"), basis, differentials, Some(product))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    /// `⊕_{i+j=k} Ω^i ⊗ S^j`.
    #[default]
    Total,
    /// `Ω^k ⊗ S^k`, with `D^k` landing in `Ω^{k+1}⊗S^k ⊕ Ω^k⊗S^{k+1}`.
    Diagonal,
}

impl Grading {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "total" => Ok(Self::Total),
            "diagonal" => Ok(Self::Diagonal),
            other => Err(Error::Parse(format!("unknown grading `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Total => "total",
            Self::Diagonal => "diagonal",
        }
    }
}

impl fmt::Display for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How ranks are computed.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum RankMethod {
    #[default]
    Exact,
    FractionFree,
    Float { tol: f64 },
}

impl RankMethod {
    pub fn rank(self, m: &SparseMatrix) -> usize {
        match self {
            Self::Exact => m.rank(),
            Self::FractionFree => m.rank_fraction_free(),
            Self::Float { tol } => m.rank_float(tol),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOptions {
    pub max_degree: usize,
    pub convention: LeibnizConvention,
    pub grading: Grading,
    pub pairing: Pairing,
}

impl Default for ComplexOptions {
    fn default() -> Self {
        Self { max_degree: 4, convention: LeibnizConvention::Unsigned, grading: Grading::Total, pairing: Pairing::Basis }
    }
}

/// One `Ω^i ⊗ S^j` summand of a total-degree space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub form_degree: usize,
    pub tensor_degree: usize,
    pub offset: usize,
    pub form_dim: usize,
    pub sym_dim: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.form_dim * self.sym_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The summands of one degree, in increasing form degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Space {
    pub blocks: Vec<Block>,
    pub dim: usize,
}

impl Space {
    fn new(pieces: impl IntoIterator<Item = (usize, usize, usize, usize)>) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (i, j, form_dim, sym_dim) in pieces {
            blocks.push(Block { form_degree: i, tensor_degree: j, offset, form_dim, sym_dim });
            offset += form_dim * sym_dim;
        }
        Self { blocks, dim: offset }
    }

    pub fn find(&self, i: usize, j: usize) -> Option<&Block> {
        self.blocks.iter().find(|b| b.form_degree == i && b.tensor_degree == j)
    }
}

/// Diagonal-grading differential `Ω^k⊗S^k → Ω^{k+1}⊗S^k ⊕ Ω^k⊗S^{k+1}`,
/// kept as its two components.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalBlocks {
    pub degree: usize,
    /// `d ⊗ 1`, into `Ω^{k+1} ⊗ S^k`.
    pub d_block: SparseMatrix,
    /// `(-1)^k 1 ⊗ δ`, into `Ω^k ⊗ S^{k+1}`.
    pub delta_block: SparseMatrix,
}

#[derive(Clone, Debug)]
pub struct SpencerComplex {
    dga: DGAModel,
    algebra: LieAlgebra,
    lambda: DualVector,
    options: ComplexOptions,
    op: SpencerOperator,
    /// `δ_j : S^j → S^{j+1}` for `j < K`.
    delta: Vec<SparseMatrix>,
    /// Total grading: `C^0..=C^K`.
    spaces: Vec<Space>,
    /// Total grading: `D^0..D^{K-1}`.
    differentials: Vec<SparseMatrix>,
    diagonal: Vec<DiagonalBlocks>,
}

fn koszul(i: usize) -> Scalar {
    if i % 2 == 0 {
        Scalar::one()
    } else {
        -Scalar::one()
    }
}

pub fn build_complex(dga: &DGAModel, alg: &LieAlgebra, lambda: &DualVector, options: &ComplexOptions) -> Result<SpencerComplex> {
    let k_max = options.max_degree;
    if k_max < 1 {
        return Err(Error::OutOfRange("truncation K must be at least 1".into()));
    }
    if lambda.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: lambda.dim() });
    }
    let n = alg.dim();
    let op = SpencerOperator::with_pairing(alg, lambda, options.convention, options.pairing.clone())?;
    let delta = op.matrices(k_max - 1)?;
    let mut c = SpencerComplex {
        dga: dga.clone(),
        algebra: alg.clone(),
        lambda: lambda.clone(),
        options: options.clone(),
        op,
        delta,
        spaces: Vec::new(),
        differentials: Vec::new(),
        diagonal: Vec::new(),
    };
    match options.grading {
        Grading::Total => {
            c.spaces = (0..=k_max)
                .map(|k| Space::new((0..=k.min(dga.top_degree())).map(|i| (i, k - i, dga.dim(i), sym_dim(n, k - i)))))
                .collect();
            for k in 0..k_max {
                let (src, dst) = (&c.spaces[k], &c.spaces[k + 1]);
                let mut m = SparseMatrix::zeros(dst.dim, src.dim);
                for b in &src.blocks {
                    let (i, j) = (b.form_degree, b.tensor_degree);
                    if let Some(t) = dst.find(i + 1, j) {
                        m.insert_block(t.offset, b.offset, &dga.differential(i).kron(&SparseMatrix::identity(b.sym_dim)));
                    }
                    let t = dst.find(i, j + 1).expect("tensor-raising block exists");
                    let blk = SparseMatrix::identity(b.form_dim).kron(&c.delta[j]).scale(&koszul(i));
                    m.insert_block(t.offset, b.offset, &blk);
                }
                c.differentials.push(m);
            }
        }
        Grading::Diagonal => {
            for k in 0..k_max.min(dga.top_degree() + 1) {
                let sk = sym_dim(n, k);
                c.diagonal.push(DiagonalBlocks {
                    degree: k,
                    d_block: dga.differential(k).kron(&SparseMatrix::identity(sk)),
                    delta_block: SparseMatrix::identity(dga.dim(k)).kron(&c.delta[k]).scale(&koszul(k)),
                });
            }
        }
    }
    Ok(c)
}

impl SpencerComplex {
    pub fn dga(&self) -> &DGAModel {
        &self.dga
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn lambda(&self) -> &DualVector {
        &self.lambda
    }

    pub fn options(&self) -> &ComplexOptions {
        &self.options
    }

    pub fn max_degree(&self) -> usize {
        self.options.max_degree
    }

    pub fn grading(&self) -> Grading {
        self.options.grading
    }

    pub fn operator(&self) -> &SpencerOperator {
        &self.op
    }

    pub fn delta_matrix(&self, j: usize) -> &SparseMatrix {
        &self.delta[j]
    }

    pub fn spaces(&self) -> &[Space] {
        &self.spaces
    }

    pub fn space_dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim).collect()
    }

    pub fn differential(&self, k: usize) -> Option<&SparseMatrix> {
        self.differentials.get(k)
    }

    pub fn differentials(&self) -> &[SparseMatrix] {
        &self.differentials
    }

    pub fn diagonal_blocks(&self) -> &[DiagonalBlocks] {
        &self.diagonal
    }

    fn require_total(&self) -> Result<()> {
        match self.grading() {
            Grading::Total => Ok(()),
            Grading::Diagonal => Err(Error::InvalidModel("operation needs the total grading".into())),
        }
    }
}

/// `max |D^{k+1} D^k|` over `k ≤ K-2`; `None` in the diagonal grading, where
/// `D^k` does not land in the domain of `D^{k+1}`.
pub fn d_squared_residual(c: &SpencerComplex) -> Result<Option<Scalar>> {
    if c.grading() == Grading::Diagonal {
        return Ok(None);
    }
    let mut worst = Scalar::zero();
    for k in 0..c.differentials.len().saturating_sub(1) {
        let r = c.differentials[k + 1].mul(&c.differentials[k])?.max_abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(Some(worst))
}

pub const FLAG_NON_COMPLEX: &str = "non-complex: D^2 != 0, dims withheld";
pub const FLAG_DIAGONAL: &str = "diagonal grading: D^k leaves Omega^k(x)S^k for Omega^(k+1)(x)S^k + Omega^k(x)S^(k+1), dims withheld";
pub const FLAG_RANK_MISMATCH: &str = "rank cross-check mismatch";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohomologyReport {
    pub grading: Grading,
    pub convention: LeibnizConvention,
    pub pairing: String,
    #[serde(rename = "K")]
    pub max_degree: usize,
    pub space_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub dims: Vec<usize>,
    pub euler: Option<i64>,
    #[serde(serialize_with = "crate::json::ser_opt_scalar")]
    pub d_squared_residual: Option<Scalar>,
    pub flags: Vec<String>,
}

impl CohomologyReport {
    pub fn is_complex(&self) -> bool {
        self.d_squared_residual.as_ref().is_some_and(Zero::is_zero)
    }
}

fn betti(space_dims: &[usize], ranks: &[usize], top: usize) -> Vec<usize> {
    (0..top)
        .map(|k| space_dims[k] - ranks[k] - if k > 0 { ranks[k - 1] } else { 0 })
        .collect()
}

/// `dim H^k` for `k ≤ K-1` by rank-nullity. In exact mode the ranks are
/// recomputed by fraction-free elimination and a disagreement is flagged.
pub fn cohomology(c: &SpencerComplex, method: RankMethod) -> Result<CohomologyReport> {
    let residual = d_squared_residual(c)?;
    let mut report = CohomologyReport {
        grading: c.grading(),
        convention: c.options.convention,
        pairing: c.options.pairing.name().to_string(),
        max_degree: c.max_degree(),
        space_dims: c.space_dims(),
        ranks: Vec::new(),
        dims: Vec::new(),
        euler: None,
        d_squared_residual: residual.clone(),
        flags: Vec::new(),
    };
    let Some(residual) = residual else {
        report.flags.push(FLAG_DIAGONAL.into());
        return Ok(report);
    };
    report.ranks = c.differentials.iter().map(|d| method.rank(d)).collect();
    if !residual.is_zero() {
        report.flags.push(FLAG_NON_COMPLEX.into());
        return Ok(report);
    }
    if method == RankMethod::Exact {
        let check: Vec<usize> = c.differentials.iter().map(SparseMatrix::rank_fraction_free).collect();
        if check != report.ranks {
            report.flags.push(FLAG_RANK_MISMATCH.into());
        }
    }
    report.dims = betti(&report.space_dims, &report.ranks, c.max_degree());
    report.euler = Some(euler(&report.dims));
    Ok(report)
}

pub fn euler(dims: &[usize]) -> i64 {
    dims.iter().enumerate().map(|(k, &d)| if k % 2 == 0 { d as i64 } else { -(d as i64) }).sum()
}

/// Dims computed by incremental rational elimination and by fraction-free
/// integer elimination; `None` when `D² ≠ 0` or the grading is diagonal.
pub fn dims_two_ways(c: &SpencerComplex) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    if !d_squared_residual(c)?.is_some_and(|r| r.is_zero()) {
        return Ok(None);
    }
    let a: Vec<usize> = c.differentials.iter().map(SparseMatrix::rank).collect();
    let b: Vec<usize> = c.differentials.iter().map(SparseMatrix::rank_fraction_free).collect();
    let dims = c.space_dims();
    Ok(Some((betti(&dims, &a, c.max_degree()), betti(&dims, &b, c.max_degree()))))
}

/// `max |D^k rep|`; `rep` lives in `C^k` with `k ≤ K-1`.
pub fn closedness_residual(c: &SpencerComplex, k: usize, rep: &[Scalar]) -> Result<Scalar> {
    c.require_total()?;
    let d = c.differentials.get(k).ok_or_else(|| Error::OutOfRange(format!("degree {k} beyond truncation")))?;
    Ok(scalar::max_abs(&d.mul_vec(rep)?))
}

/// True if `rep ∈ C^k` is `D^{k-1}` of something.
pub fn is_exact(c: &SpencerComplex, k: usize, rep: &[Scalar]) -> Result<bool> {
    c.require_total()?;
    if k == 0 {
        return Ok(rep.iter().all(Zero::is_zero));
    }
    c.differentials[k - 1].column_span_contains(rep)
}

/// `1 ⊗ 1 ∈ C^0`; assumes the first degree-0 basis element is the unit.
pub fn unit_class(c: &SpencerComplex) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(); c.spaces[0].dim];
    v[0] = Scalar::one();
    v
}

/// The coordinate vector of `ω_a ⊗ m_b` in block `(i, j)` of `C^{i+j}`.
pub fn basis_element(c: &SpencerComplex, i: usize, a: usize, j: usize, b: usize) -> Result<Vec<Scalar>> {
    c.require_total()?;
    let k = i + j;
    let space = c.spaces.get(k).ok_or_else(|| Error::OutOfRange(format!("degree {k} beyond truncation")))?;
    let blk = space.find(i, j).ok_or_else(|| Error::OutOfRange(format!("no block ({i},{j})")))?;
    if a >= blk.form_dim || b >= blk.sym_dim {
        return Err(Error::OutOfRange(format!("element ({a},{b}) outside block ({i},{j})")));
    }
    let mut v = vec![Scalar::zero(); space.dim];
    v[blk.offset + a * blk.sym_dim + b] = Scalar::one();
    Ok(v)
}

fn raw_product(c: &SpencerComplex, k1: usize, x: &[Scalar], k2: usize, y: &[Scalar]) -> Result<Vec<Scalar>> {
    let n = c.algebra.dim();
    let k = k1 + k2;
    let target = &c.spaces[k];
    let mut out = vec![Scalar::zero(); target.dim];
    let sym: Vec<SymBasis> = (0..=k).map(|j| SymBasis::new(n, j)).collect();
    for b1 in &c.spaces[k1].blocks {
        for b2 in &c.spaces[k2].blocks {
            let (i, j) = (b1.form_degree + b2.form_degree, b1.tensor_degree + b2.tensor_degree);
            let Some(t) = target.find(i, j) else { continue };
            for (p1, v1) in x[b1.offset..b1.offset + b1.len()].iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                let (a1, m1) = (p1 / b1.sym_dim, p1 % b1.sym_dim);
                for (p2, v2) in y[b2.offset..b2.offset + b2.len()].iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                    let (a2, m2) = (p2 / b2.sym_dim, p2 % b2.sym_dim);
                    let forms = c.dga.multiply_basis(b1.form_degree, a1, b2.form_degree, a2)?;
                    if forms.is_empty() {
                        continue;
                    }
                    let merged = sym[b1.tensor_degree].elems()[m1].merge(&sym[b2.tensor_degree].elems()[m2]);
                    let m = sym[j].position(&merged).expect("merged monomial in basis");
                    for (a, f) in forms {
                        out[t.offset + a * t.sym_dim + m] += v1 * v2 * f;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CupProduct {
    pub degree: usize,
    #[serde(serialize_with = "crate::json::ser_scalar_vec")]
    pub representative: Vec<Scalar>,
    /// The product class vanishes in cohomology.
    pub class_is_zero: bool,
    /// Random exact perturbations of the inputs tried.
    pub samples: usize,
    /// Every perturbed product stayed in the same class.
    pub well_defined: bool,
}

/// `(ω1⊗s1)·(ω2⊗s2) = (ω1∧ω2)⊗(s1⊙s2)` on closed representatives of
/// degrees `k1`, `k2`. Well-definedness is sampled by adding `samples` random
/// coboundaries to the inputs and testing the change lies in `im D`.
pub fn cup_product<R: Rng>(
    c: &SpencerComplex,
    k1: usize,
    x: &[Scalar],
    k2: usize,
    y: &[Scalar],
    samples: usize,
    rng: &mut R,
) -> Result<CupProduct> {
    c.require_total()?;
    if !c.dga.has_product() {
        return Err(Error::NoProduct);
    }
    let k = k1 + k2;
    if k >= c.max_degree() {
        return Err(Error::OutOfRange(format!("product degree {k} needs K > {k}")));
    }
    for (deg, v) in [(k1, x), (k2, y)] {
        if v.len() != c.spaces[deg].dim {
            return Err(Error::DimensionMismatch { expected: c.spaces[deg].dim, got: v.len() });
        }
        let r = closedness_residual(c, deg, v)?;
        if !r.is_zero() {
            return Err(Error::NotClosed(scalar::format(&r)));
        }
    }
    let rep = raw_product(c, k1, x, k2, y)?;
    if !closedness_residual(c, k, &rep)?.is_zero() {
        return Err(Error::ProductNotClosed);
    }
    let class_is_zero = is_exact(c, k, &rep)?;
    let mut well_defined = true;
    for _ in 0..samples {
        let px = perturb(c, k1, x, rng)?;
        let py = perturb(c, k2, y, rng)?;
        let alt = raw_product(c, k1, &px, k2, &py)?;
        let diff: Vec<Scalar> = alt.iter().zip(&rep).map(|(a, b)| a - b).collect();
        if !is_exact(c, k, &diff)? {
            well_defined = false;
        }
    }
    Ok(CupProduct { degree: k, representative: rep, class_is_zero, samples, well_defined })
}

fn perturb<R: Rng>(c: &SpencerComplex, k: usize, v: &[Scalar], rng: &mut R) -> Result<Vec<Scalar>> {
    if k == 0 {
        return Ok(v.to_vec());
    }
    let src = c.spaces[k - 1].dim;
    let r: Vec<Scalar> = (0..src).map(|_| scalar::int(rng.random_range(-2..=2))).collect();
    let dr = c.differentials[k - 1].mul_vec(&r)?;
    Ok(v.iter().zip(dr).map(|(a, b)| a + b).collect())
}

/// `Ψ^k` for `k ≤ K`: `(-1)^j` on block `(i, j)` for the sign mirror,
/// `B_i ⊗ Sym^j(A)` for an automorphism (with `B = 1` unless a base map is
/// supplied).
pub fn chain_map(c: &SpencerComplex, t: &MirrorTransform, base_map: Option<&[QMatrix]>) -> Result<Vec<SparseMatrix>> {
    c.require_total()?;
    t.check_algebra(&c.algebra)?;
    if let Some(bm) = base_map {
        validate_base_map(&c.dga, bm)?;
    }
    let mut tensor_maps: BTreeMap<usize, SparseMatrix> = BTreeMap::new();
    let mut out = Vec::new();
    for space in &c.spaces {
        let mut m = SparseMatrix::zeros(space.dim, space.dim);
        for b in &space.blocks {
            let (i, j) = (b.form_degree, b.tensor_degree);
            let tensor = match t {
                MirrorTransform::Sign => SparseMatrix::identity(b.sym_dim).scale(&sign_chain_sign(i, j)),
                MirrorTransform::Automorphism(a) => {
                    if !tensor_maps.contains_key(&j) {
                        tensor_maps.insert(j, induced_tensor_map(a, j, &c.options.pairing)?);
                    }
                    tensor_maps[&j].clone()
                }
            };
            let form = match base_map {
                Some(bm) => bm[i].to_sparse(),
                None => SparseMatrix::identity(b.form_dim),
            };
            m.insert_block(b.offset, b.offset, &form.kron(&tensor));
        }
        out.push(m);
    }
    Ok(out)
}

fn validate_base_map(dga: &DGAModel, bm: &[QMatrix]) -> Result<()> {
    if bm.len() != dga.top_degree() + 1 {
        return Err(Error::InvalidModel(format!("base map needs {} degrees, got {}", dga.top_degree() + 1, bm.len())));
    }
    for (i, b) in bm.iter().enumerate() {
        if b.rows() != dga.dim(i) || b.cols() != dga.dim(i) {
            return Err(Error::InvalidModel(format!("base map in degree {i} has the wrong shape")));
        }
        b.inverse().map_err(|_| Error::InvalidModel(format!("base map in degree {i} is singular")))?;
        if i < dga.top_degree() {
            let d = dga.differential(i).to_dense();
            if bm[i + 1].mul(&d)? != d.mul(b)? {
                return Err(Error::InvalidModel(format!("base map does not commute with d in degree {i}")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MirrorInvarianceReport {
    pub transform: String,
    #[serde(serialize_with = "crate::json::ser_dual")]
    pub mirrored_lambda: DualVector,
    pub original: CohomologyReport,
    pub mirrored: CohomologyReport,
    /// `max |Ψ^{k+1} D^k − D'^k Ψ^k|` per `k`.
    #[serde(serialize_with = "crate::json::ser_scalar_vec")]
    pub commutation: Vec<Scalar>,
    pub commutes: bool,
    /// First failing degree and its residual.
    pub failure: Option<(usize, String)>,
    pub psi_invertible: bool,
    pub dims_equal: Option<bool>,
    pub euler_equal: Option<bool>,
}

pub fn mirror_invariance_check(c: &SpencerComplex, t: &MirrorTransform, base_map: Option<&[QMatrix]>, method: RankMethod) -> Result<MirrorInvarianceReport> {
    c.require_total()?;
    let lambda_m = mirror_lambda(t, &c.lambda)?;
    let mirrored = build_complex(&c.dga, &c.algebra, &lambda_m, &c.options)?;
    let psi = chain_map(c, t, base_map)?;
    let mut commutation = Vec::new();
    let mut failure = None;
    for k in 0..c.differentials.len() {
        let lhs = psi[k + 1].mul(&c.differentials[k])?;
        let rhs = mirrored.differentials[k].mul(&psi[k])?;
        let r = lhs.sub(&rhs)?.max_abs();
        if failure.is_none() && !r.is_zero() {
            failure = Some((k, scalar::format(&r)));
        }
        commutation.push(r);
    }
    let psi_invertible = psi.iter().all(|p| p.rank() == p.rows());
    let original = cohomology(c, method)?;
    let mirrored_report = cohomology(&mirrored, method)?;
    let both = original.is_complex() && mirrored_report.is_complex();
    Ok(MirrorInvarianceReport {
        transform: t.label(),
        mirrored_lambda: lambda_m,
        commutes: failure.is_none(),
        failure,
        commutation,
        psi_invertible,
        dims_equal: both.then(|| original.dims == mirrored_report.dims),
        euler_equal: both.then(|| original.euler == mirrored_report.euler),
        original,
        mirrored: mirrored_report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KunnethReport {
    pub precondition_holds: bool,
    #[serde(serialize_with = "crate::json::ser_opt_scalar")]
    pub d_squared_residual: Option<Scalar>,
    pub de_rham_dims: Vec<usize>,
    /// `dim H^j` of `S^0 → S^1 → …` under `δ^λ`, `j ≤ K-1`.
    pub delta_dims: Vec<usize>,
    pub spencer_dims: Vec<usize>,
    /// `Σ_{i+j=k} dim H^i_dR · dim H^j(δ)`.
    pub product_dims: Vec<usize>,
    pub matches: Vec<bool>,
    pub all_match: bool,
}

pub fn kunneth_diagnostic(c: &SpencerComplex, method: RankMethod) -> Result<KunnethReport> {
    c.require_total()?;
    let report = cohomology(c, method)?;
    let de_rham = c.dga.cohomology_dims();
    let mut out = KunnethReport {
        precondition_holds: report.is_complex(),
        d_squared_residual: report.d_squared_residual.clone(),
        de_rham_dims: de_rham.clone(),
        delta_dims: Vec::new(),
        spencer_dims: Vec::new(),
        product_dims: Vec::new(),
        matches: Vec::new(),
        all_match: false,
    };
    if !out.precondition_holds {
        return Ok(out);
    }
    let n = c.algebra.dim();
    let k_max = c.max_degree();
    let delta_ranks: Vec<usize> = c.delta.iter().map(|d| method.rank(d)).collect();
    out.delta_dims = (0..k_max)
        .map(|j| sym_dim(n, j) - delta_ranks[j] - if j > 0 { delta_ranks[j - 1] } else { 0 })
        .collect();
    out.product_dims = (0..k_max)
        .map(|k| (0..=k).map(|i| de_rham.get(i).copied().unwrap_or(0) * out.delta_dims[k - i]).sum())
        .collect();
    out.spencer_dims = report.dims;
    out.matches = out.spencer_dims.iter().zip(&out.product_dims).map(|(a, b)| a == b).collect();
    out.all_match = out.matches.iter().all(|&m| m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{builtin_algebra, builtin_automorphism, AutomorphismKind};
    use crate::scalar::{binomial, int};
    use crate::symtensor::sym_dim;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opts(k: usize) -> ComplexOptions {
        ComplexOptions { max_degree: k, ..Default::default() }
    }

    #[test]
    fn torus_dims_are_binomial() {
        for n in 1..=4 {
            let t = torus_model(n).unwrap();
            let want: Vec<usize> = (0..=n).map(|k| binomial(n, k)).collect();
            assert_eq!(t.dims(), want);
            assert_eq!(t.cohomology_dims(), want);
        }
        assert!(torus_model(0).is_err());
        assert!(torus_model(5).is_err());
    }

    #[test]
    fn torus_wedge_signs() {
        let t = torus_model(2).unwrap();
        assert_eq!(t.multiply_basis(1, 0, 1, 1).unwrap(), BTreeMap::from([(0, int(1))]));
        assert_eq!(t.multiply_basis(1, 1, 1, 0).unwrap(), BTreeMap::from([(0, int(-1))]));
        assert!(t.multiply_basis(1, 0, 1, 0).unwrap().is_empty());
    }

    #[test]
    fn bad_models_rejected() {
        let mut d = SparseMatrix::zeros(1, 1);
        d.set(0, 0, int(1));
        let basis = vec![vec!["a".to_string()], vec!["b".to_string()], vec!["c".to_string()]];
        assert!(DGAModel::new("bad", basis, vec![d.clone(), d], None).is_err());
    }

    #[test]
    fn lambda_zero_dims_match_count() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &DualVector::zero(3), &opts(3)).unwrap();
        assert!(c.differentials().iter().all(SparseMatrix::is_zero));
        let r = cohomology(&c, RankMethod::Exact).unwrap();
        let count: Vec<usize> = (0..3).map(|k| (0..=k.min(2)).map(|i| binomial(2, i) * sym_dim(3, k - i)).sum()).collect();
        assert_eq!(r.dims, count);
        assert_eq!(r.dims, vec![1, 5, 13]);
    }

    #[test]
    fn blocks_are_delta_matrices() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let l = g.dual_basis_vector(2);
        let c = build_complex(&t, &g, &l, &opts(3)).unwrap();
        let op = SpencerOperator::new(&g, &l, LeibnizConvention::Unsigned).unwrap();
        let d1 = c.differential(1).unwrap();
        let (src, dst) = (&c.spaces()[1], &c.spaces()[2]);
        // Ω^0⊗S^1 → Ω^0⊗S^2
        let b = src.find(0, 1).unwrap();
        let tb = dst.find(0, 2).unwrap();
        assert_eq!(d1.block(tb.offset, b.offset, tb.len(), b.len()), op.matrix(1).unwrap());
        // Ω^1⊗S^0 → Ω^1⊗S^1 carries the Koszul sign, and δ on S^0 is zero
        let b = src.find(1, 0).unwrap();
        let tb = dst.find(1, 1).unwrap();
        assert!(d1.block(tb.offset, b.offset, tb.len(), b.len()).is_zero());
        // d-blocks vanish on the torus
        let tb = dst.find(1, 1).unwrap();
        let b = src.find(0, 1).unwrap();
        assert!(d1.block(tb.offset, b.offset, tb.len(), b.len()).is_zero());
        // Ω^1⊗S^1 → Ω^1⊗S^2 is -(1⊗δ)
        let c3 = build_complex(&t, &g, &l, &opts(4)).unwrap();
        let d2 = c3.differential(2).unwrap();
        let b = c3.spaces()[2].find(1, 1).unwrap();
        let tb = c3.spaces()[3].find(1, 2).unwrap();
        let want = SparseMatrix::identity(2).kron(&op.matrix(1).unwrap()).scale(&int(-1));
        assert_eq!(d2.block(tb.offset, b.offset, tb.len(), b.len()), want);
    }

    #[test]
    fn diagonal_blocks_have_split_codomain() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let o = ComplexOptions { max_degree: 3, grading: Grading::Diagonal, ..Default::default() };
        let c = build_complex(&t, &g, &g.dual_basis_vector(2), &o).unwrap();
        for b in c.diagonal_blocks() {
            let k = b.degree;
            assert_eq!(b.d_block.cols(), t.dim(k) * sym_dim(3, k));
            assert_eq!(b.d_block.rows(), t.dim(k + 1) * sym_dim(3, k));
            assert_eq!(b.delta_block.rows(), t.dim(k) * sym_dim(3, k + 1));
        }
        let r = cohomology(&c, RankMethod::Exact).unwrap();
        assert!(r.dims.is_empty());
        assert_eq!(r.flags, vec![FLAG_DIAGONAL.to_string()]);
    }

    #[test]
    fn abelian_complex_is_full() {
        let g = builtin_algebra("abelian2").unwrap();
        let t = torus_model(1).unwrap();
        let c = build_complex(&t, &g, &g.dual_basis_vector(0), &opts(2)).unwrap();
        let r = cohomology(&c, RankMethod::Exact).unwrap();
        assert_eq!(r.dims, c.space_dims()[..2].to_vec());
    }

    #[test]
    fn so3_square_is_reported_not_assumed() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &g.dual_basis_vector(2), &opts(4)).unwrap();
        let r = cohomology(&c, RankMethod::Exact).unwrap();
        assert!(!r.is_complex());
        assert!(r.dims.is_empty());
        let c2 = build_complex(&t, &g, &g.dual_basis_vector(2), &opts(2)).unwrap();
        assert!(cohomology(&c2, RankMethod::Exact).unwrap().is_complex());
    }

    #[test]
    fn sign_chain_map_commutes() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &g.dual_basis_vector(2), &opts(4)).unwrap();
        let r = mirror_invariance_check(&c, &MirrorTransform::Sign, None, RankMethod::Exact).unwrap();
        assert!(r.commutes);
        assert!(r.psi_invertible);
    }

    #[test]
    fn cartan_mirror_on_sl2() {
        let g = builtin_algebra("sl2").unwrap();
        let a = builtin_automorphism(&g, &AutomorphismKind::NegateTranspose).unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &g.dual_basis_vector(0), &opts(2)).unwrap();
        let r = mirror_invariance_check(&c, &MirrorTransform::Automorphism(a), None, RankMethod::Exact).unwrap();
        assert!(r.commutes);
        assert_eq!(r.dims_equal, Some(true));
        assert_eq!(r.euler_equal, Some(true));
    }

    #[test]
    fn cup_products_on_torus() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &DualVector::zero(3), &opts(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dx = basis_element(&c, 1, 0, 0, 0).unwrap();
        let dy = basis_element(&c, 1, 1, 0, 0).unwrap();
        let xy = cup_product(&c, 1, &dx, 1, &dy, 3, &mut rng).unwrap();
        assert!(!xy.class_is_zero);
        assert_eq!(xy.representative, basis_element(&c, 2, 0, 0, 0).unwrap());
        let xx = cup_product(&c, 1, &dx, 1, &dx, 3, &mut rng).unwrap();
        assert!(xx.class_is_zero);
        let unit = unit_class(&c);
        let u = cup_product(&c, 0, &unit, 1, &dy, 3, &mut rng).unwrap();
        assert_eq!(u.representative, dy);
    }

    #[test]
    fn cup_rejects_open_input() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &g.dual_basis_vector(2), &opts(3)).unwrap();
        let e1 = basis_element(&c, 0, 0, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(cup_product(&c, 1, &e1, 0, &unit_class(&c), 0, &mut rng), Err(Error::NotClosed(_))));
    }

    #[test]
    fn kunneth_trivial_cases() {
        let g = builtin_algebra("so3").unwrap();
        let t = torus_model(2).unwrap();
        let c = build_complex(&t, &g, &DualVector::zero(3), &opts(3)).unwrap();
        let r = kunneth_diagnostic(&c, RankMethod::Exact).unwrap();
        assert!(r.all_match);
    }
}
