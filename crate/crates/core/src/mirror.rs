//! Mirror transformations of compatible pairs and the induced maps on `S(g)`.

use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{DualVector, LieAlgebra, LieAutomorphism};
use crate::linalg::SparseMatrix;
use crate::scalar::{self, Scalar};
use crate::spencer::{LeibnizConvention, SpencerOperator};
use crate::symtensor::{sym_power_matrix, Pairing};

/// How `λ` is carried along an automorphism `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualTransport {
    /// `λ ↦ λ ∘ A^{-1}`.
    #[default]
    Inverse,
    /// `λ ↦ λ ∘ A`.
    PaperLiteral,
}

impl DualTransport {
    pub fn name(self) -> &'static str {
        match self {
            Self::Inverse => "inverse",
            Self::PaperLiteral => "paper-literal",
        }
    }
}

impl fmt::Display for DualTransport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MirrorTransform {
    /// `(D, λ) ↦ (D, -λ)`.
    Sign,
    Automorphism(LieAutomorphism),
}

impl MirrorTransform {
    pub fn label(&self) -> String {
        match self {
            Self::Sign => "sign".into(),
            Self::Automorphism(a) => a.label().to_string(),
        }
    }

    /// Checks that the transform belongs to `alg`.
    pub fn check_algebra(&self, alg: &LieAlgebra) -> Result<()> {
        match self {
            Self::Automorphism(a) if a.dim() != alg.dim() || a.algebra_name() != alg.name() => {
                Err(Error::InvalidModel(format!("automorphism of {} applied to {}", a.algebra_name(), alg.name())))
            }
            _ => Ok(()),
        }
    }
}

/// `λ` carried through `t`.
pub fn mirror_lambda(t: &MirrorTransform, lambda: &DualVector) -> Result<DualVector> {
    mirror_lambda_with(t, lambda, DualTransport::Inverse)
}

pub fn mirror_lambda_with(t: &MirrorTransform, lambda: &DualVector, transport: DualTransport) -> Result<DualVector> {
    match t {
        MirrorTransform::Sign => Ok(lambda.neg()),
        MirrorTransform::Automorphism(a) => {
            if lambda.dim() != a.dim() {
                return Err(Error::DimensionMismatch { expected: a.dim(), got: lambda.dim() });
            }
            // <λ', e_j> = <λ, M e_j> = Σ_i λ_i M_ij
            let m = match transport {
                DualTransport::Inverse => a.inverse(),
                DualTransport::PaperLiteral => a.matrix(),
            };
            Ok(DualVector(m.transpose().mul_vec(&lambda.0)?))
        }
    }
}

/// Matrix of the transport of `S^k` along `A` (in `sym_basis` order), read
/// through `pairing`, so that `eval(map·s, X…) = eval(s, A^{-1}X…)`.
pub fn induced_tensor_map(a: &LieAutomorphism, k: usize, pairing: &Pairing) -> Result<SparseMatrix> {
    sym_power_matrix(&pairing.transport_matrix(a.inverse())?, k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntertwiningReport {
    pub automorphism: String,
    pub degree: usize,
    pub transport: DualTransport,
    pub convention: LeibnizConvention,
    pub pairing: String,
    #[serde(serialize_with = "crate::json::ser_scalar")]
    pub residual: Scalar,
    pub holds: bool,
}

/// `R = map(A,k+1)·δ^λ_k − δ^{λ'}_k·map(A,k)` with `λ'` the transported `λ`.
pub fn intertwining_check(
    alg: &LieAlgebra,
    a: &LieAutomorphism,
    lambda: &DualVector,
    k: usize,
    convention: LeibnizConvention,
    transport: DualTransport,
    pairing: &Pairing,
) -> Result<IntertwiningReport> {
    if k < 1 {
        return Err(Error::OutOfRange(format!("intertwining check needs k >= 1, got {k}")));
    }
    let t = MirrorTransform::Automorphism(a.clone());
    t.check_algebra(alg)?;
    let mirrored = mirror_lambda_with(&t, lambda, transport)?;
    let op = SpencerOperator::with_pairing(alg, lambda, convention, pairing.clone())?;
    let op_m = SpencerOperator::with_pairing(alg, &mirrored, convention, pairing.clone())?;
    let lhs = induced_tensor_map(a, k + 1, pairing)?.mul(&op.matrix(k)?)?;
    let rhs = op_m.matrix(k)?.mul(&induced_tensor_map(a, k, pairing)?)?;
    let residual = lhs.sub(&rhs)?.max_abs();
    Ok(IntertwiningReport {
        automorphism: a.label().to_string(),
        degree: k,
        transport,
        convention,
        pairing: pairing.name().to_string(),
        holds: residual.is_zero(),
        residual,
    })
}

/// `(-1)^j` for form degree `i` and tensor degree `j`.
pub fn sign_chain_sign(_i: usize, j: usize) -> Scalar {
    if j % 2 == 0 {
        Scalar::one()
    } else {
        -Scalar::one()
    }
}

/// `max |δ^{-λ}_k + δ^λ_k|` over `k ≤ max_k`.
pub fn sign_antisymmetry_residual(op: &SpencerOperator, op_neg: &SpencerOperator, max_k: usize) -> Result<Scalar> {
    let mut worst = Scalar::zero();
    for k in 0..=max_k {
        let r = op_neg.matrix(k)?.linear_combination(&Scalar::one(), &op.matrix(k)?, &Scalar::one())?.max_abs();
        if r.abs() > worst {
            worst = r;
        }
    }
    Ok(worst)
}

impl fmt::Display for IntertwiningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} k={} transport={} pairing={} residual={}",
            self.automorphism,
            self.degree,
            self.transport,
            self.pairing,
            scalar::format(&self.residual)
        )
    }
}
