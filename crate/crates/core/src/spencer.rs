//! Spencer operators on `S(g)`.
//!
//! The constraint-coupled operator `δ^λ` sends a generator `v` to the
//! symmetric bilinear functional
//! `(w1, w2) ↦ ½(<λ,[w1,[w2,v]]> + <λ,[w2,[w1,v]]>)`, read back as an element
//! of `S²` through the chosen [`Pairing`], and extends to `S^k` by a Leibniz
//! rule ([`LeibnizConvention`]).

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, DualVector, LieAlgebra};
use crate::linalg::SparseMatrix;
use crate::scalar::{self, Scalar};
use crate::symtensor::{MultiIndex, Pairing, SymBasis, SymTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeibnizConvention {
    /// `δ(s1 ⊙ s2) = δs1 ⊙ s2 + s1 ⊙ δs2`.
    #[default]
    Unsigned,
    /// `δ(s1 ⊙ s2) = δs1 ⊙ s2 + (-1)^p s1 ⊙ δs2`, applied left to right on the
    /// sorted factorization of each basis monomial.
    PaperSigned,
}

impl LeibnizConvention {
    pub const ALL: [LeibnizConvention; 2] = [LeibnizConvention::Unsigned, LeibnizConvention::PaperSigned];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "unsigned" => Ok(Self::Unsigned),
            "paper-signed" | "signed" => Ok(Self::PaperSigned),
            other => Err(Error::Parse(format!("unknown Leibniz convention `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Unsigned => "unsigned",
            Self::PaperSigned => "paper-signed",
        }
    }
}

impl fmt::Display for LeibnizConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn nested(alg: &LieAlgebra, lambda: &DualVector, a: &AlgebraVector, b: &AlgebraVector, v: &AlgebraVector) -> Result<Scalar> {
    alg.pairing(lambda, &alg.bracket(a, &alg.bracket(b, v)?)?)
}

/// `½(<λ,[w1,[w2,v]]> + <λ,[w2,[w1,v]]>)`.
pub fn constructive_value(
    alg: &LieAlgebra,
    lambda: &DualVector,
    v: &AlgebraVector,
    w1: &AlgebraVector,
    w2: &AlgebraVector,
) -> Result<Scalar> {
    Ok((nested(alg, lambda, w1, w2, v)? + nested(alg, lambda, w2, w1, v)?) / scalar::int(2))
}

/// `<λ,[w2,[w1,v]]> + ½<λ,[[w1,w2],v]>`, the Jacobi-rewritten form.
pub fn jacobi_form_value(
    alg: &LieAlgebra,
    lambda: &DualVector,
    v: &AlgebraVector,
    w1: &AlgebraVector,
    w2: &AlgebraVector,
) -> Result<Scalar> {
    let first = nested(alg, lambda, w2, w1, v)?;
    let second = alg.pairing(lambda, &alg.bracket(&alg.bracket(w1, w2)?, v)?)?;
    Ok(first + second / scalar::int(2))
}

fn generator_from_values(
    alg: &LieAlgebra,
    lambda: &DualVector,
    v: &AlgebraVector,
    pairing: &Pairing,
    value: fn(&LieAlgebra, &DualVector, &AlgebraVector, &AlgebraVector, &AlgebraVector) -> Result<Scalar>,
) -> Result<SymTensor> {
    let n = alg.dim();
    if lambda.dim() != n || v.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lambda.dim().min(v.dim()) });
    }
    let mut err = None;
    let t = SymTensor::from_basis_values(n, 2, |m| {
        let (a, b) = (m.indices()[0], m.indices()[1]);
        value(alg, lambda, v, &alg.basis_vector(a), &alg.basis_vector(b)).unwrap_or_else(|e| {
            err = Some(e);
            Scalar::zero()
        })
    });
    if let Some(e) = err {
        return Err(e);
    }
    pairing.raise(&t)
}

/// `δ^λ(v) ∈ S²`, reconstructed from its values on basis pairs.
pub fn delta_lambda_generator(alg: &LieAlgebra, lambda: &DualVector, v: &AlgebraVector, pairing: &Pairing) -> Result<SymTensor> {
    generator_from_values(alg, lambda, v, pairing, constructive_value)
}

/// Same as [`delta_lambda_generator`] but through the Jacobi-rewritten formula.
pub fn jacobi_form_generator(alg: &LieAlgebra, lambda: &DualVector, v: &AlgebraVector, pairing: &Pairing) -> Result<SymTensor> {
    generator_from_values(alg, lambda, v, pairing, jacobi_form_value)
}

/// The classical prolongation
/// `X1 ⊙ … ⊙ Xk ↦ Σ_i Σ_j e_i ⊙ X1 ⊙ … ⊙ [e_i, Xj] ⊙ … ⊙ Xk`, summed over
/// the stored basis.
pub fn classical_prolongation(alg: &LieAlgebra, s: &SymTensor) -> Result<SymTensor> {
    let n = alg.dim();
    if s.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.dim() });
    }
    let mut out = SymTensor::zero(n, s.degree() + 1);
    for (m, c) in s.terms() {
        for i in 0..n {
            for pos in 0..m.degree() {
                let br = alg.basis_bracket(i, m.indices()[pos]);
                if br.is_zero() {
                    continue;
                }
                let rest = SymTensor::monomial(n, m.without(pos).merge(&MultiIndex::new(vec![i])), c.clone());
                out.add_scaled(&rest.sym_product(&SymTensor::from_vector(&br))?, &Scalar::one())?;
            }
        }
    }
    Ok(out)
}

/// `δ^λ` with a fixed convention and pairing; generator images are cached.
#[derive(Clone, Debug)]
pub struct SpencerOperator {
    dim: usize,
    lambda: DualVector,
    convention: LeibnizConvention,
    pairing: Pairing,
    generators: Vec<SymTensor>,
}

impl SpencerOperator {
    pub fn new(alg: &LieAlgebra, lambda: &DualVector, convention: LeibnizConvention) -> Result<Self> {
        Self::with_pairing(alg, lambda, convention, Pairing::Basis)
    }

    pub fn with_pairing(alg: &LieAlgebra, lambda: &DualVector, convention: LeibnizConvention, pairing: Pairing) -> Result<Self> {
        let generators = (0..alg.dim())
            .map(|i| delta_lambda_generator(alg, lambda, &alg.basis_vector(i), &pairing))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: alg.dim(), lambda: lambda.clone(), convention, pairing, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> &DualVector {
        &self.lambda
    }

    pub fn convention(&self) -> LeibnizConvention {
        self.convention
    }

    pub fn pairing(&self) -> &Pairing {
        &self.pairing
    }

    /// `δ^λ(e_i)`.
    pub fn generator(&self, i: usize) -> &SymTensor {
        &self.generators[i]
    }

    /// Applies the Leibniz rule to the factors in the given order.
    fn apply_ordered(&self, factors: &[usize], convention: LeibnizConvention) -> Result<SymTensor> {
        let mut out = SymTensor::zero(self.dim, factors.len() + 1);
        for pos in 0..factors.len() {
            let g = &self.generators[factors[pos]];
            if g.is_zero() {
                continue;
            }
            let mut rest: Vec<usize> = factors.to_vec();
            rest.remove(pos);
            let rest = SymTensor::monomial(self.dim, MultiIndex::new(rest), Scalar::one());
            let sign = match convention {
                LeibnizConvention::PaperSigned if pos % 2 == 1 => -Scalar::one(),
                _ => Scalar::one(),
            };
            out.add_scaled(&g.sym_product(&rest)?, &sign)?;
        }
        Ok(out)
    }

    pub fn apply_monomial(&self, m: &MultiIndex) -> Result<SymTensor> {
        self.apply_ordered(m.indices(), self.convention)
    }

    pub fn apply(&self, s: &SymTensor) -> Result<SymTensor> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: s.dim() });
        }
        let mut out = SymTensor::zero(self.dim, s.degree() + 1);
        for (m, c) in s.terms() {
            out.add_scaled(&self.apply_monomial(m)?, c)?;
        }
        Ok(out)
    }

    /// Matrix of `δ^λ: S^k → S^{k+1}` in `sym_basis` order.
    pub fn matrix(&self, k: usize) -> Result<SparseMatrix> {
        let domain = SymBasis::new(self.dim, k);
        let codomain = SymBasis::new(self.dim, k + 1);
        let columns = domain
            .elems()
            .iter()
            .map(|m| codomain.to_coords(&self.apply_monomial(m)?))
            .collect::<Result<Vec<BTreeMap<usize, Scalar>>>>()?;
        Ok(SparseMatrix::from_columns(codomain.len(), columns))
    }

    /// Matrices for `k = 0..=max_k`.
    pub fn matrices(&self, max_k: usize) -> Result<Vec<SparseMatrix>> {
        (0..=max_k).map(|k| self.matrix(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NilpotencyWitness {
    pub degree: usize,
    pub basis_element: String,
    pub image: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NilpotencyReport {
    pub convention: LeibnizConvention,
    /// `(k, max |entry of δ^{k+1} δ^k|)`.
    pub residuals: Vec<(usize, Scalar)>,
    pub holds: bool,
    pub witness: Option<NilpotencyWitness>,
}

/// Measures `δ^{k+1} ∘ δ^k` for `k ≤ max_degree - 2`.
pub fn nilpotency_report(op: &SpencerOperator, max_degree: usize) -> Result<NilpotencyReport> {
    if max_degree < 2 {
        return Err(Error::OutOfRange(format!("nilpotency needs K >= 2, got {max_degree}")));
    }
    let mats = op.matrices(max_degree - 1)?;
    let mut residuals = Vec::new();
    let mut witness = None;
    for k in 0..=max_degree - 2 {
        let sq = mats[k + 1].mul(&mats[k])?;
        residuals.push((k, sq.max_abs()));
        if witness.is_none() {
            if let Some(col) = (0..sq.cols()).find(|&c| !sq.column(c).is_empty()) {
                let domain = SymBasis::new(op.dim(), k);
                let codomain = SymBasis::new(op.dim(), k + 2);
                witness = Some(NilpotencyWitness {
                    degree: k,
                    basis_element: domain.elems()[col].to_string(),
                    image: codomain.from_coords(sq.column(col).iter().map(|(r, v)| (*r, v))).to_string(),
                });
            }
        }
    }
    let holds = residuals.iter().all(|(_, r)| r.is_zero());
    Ok(NilpotencyReport { convention: op.convention(), residuals, holds, witness })
}

/// A basis monomial on which the signed Leibniz rule depends on factor order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingWitness {
    pub multiset: MultiIndex,
    pub order_a: Vec<usize>,
    pub order_b: Vec<usize>,
    pub image_a: SymTensor,
    pub image_b: SymTensor,
}

/// Applies the signed rule to the sorted factorization and to the ordering
/// that swaps the first factor with the first differing one, for every
/// degree-`k` monomial, and returns the monomials where the results differ.
pub fn signed_leibniz_welldefinedness(op: &SpencerOperator, k: usize) -> Result<Vec<OrderingWitness>> {
    if k < 2 {
        return Err(Error::OutOfRange(format!("well-definedness audit needs k >= 2, got {k}")));
    }
    let mut out = Vec::new();
    for m in SymBasis::new(op.dim(), k).elems() {
        let order_a = m.indices().to_vec();
        let Some(p) = order_a.iter().position(|&i| i != order_a[0]) else { continue };
        let mut order_b = order_a.clone();
        order_b.swap(0, p);
        let image_a = op.apply_ordered(&order_a, LeibnizConvention::PaperSigned)?;
        let image_b = op.apply_ordered(&order_b, LeibnizConvention::PaperSigned)?;
        if image_a != image_b {
            out.push(OrderingWitness { multiset: m.clone(), order_a, order_b, image_a, image_b });
        }
    }
    Ok(out)
}
