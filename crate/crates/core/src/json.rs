//! JSON forms of the core types. Rationals travel as `"p/q"` strings and all
//! indices are zero-based.

use std::collections::BTreeMap;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::bundle::GridBundle;
use crate::complex::{DGAModel, ProductTable};
use crate::error::{Error, Result};
use crate::lie::{builtin_algebra, AlgebraVector, DualVector, LieAlgebra, LieAutomorphism};
use crate::linalg::{QMatrix, SparseMatrix};
use crate::mirror::MirrorTransform;
use crate::scalar::{self, Scalar};
use crate::symtensor::SymTensor;

pub fn ser_scalar<S: Serializer>(x: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&scalar::format(x))
}

pub fn ser_opt_scalar<S: Serializer>(x: &Option<Scalar>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&scalar::format(v)),
        None => s.serialize_none(),
    }
}

pub fn ser_scalar_vec<S: Serializer>(xs: &[Scalar], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&scalar::format(x))?;
    }
    seq.end()
}

pub fn ser_dual<S: Serializer>(x: &DualVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    ser_scalar_vec(&x.0, s)
}

fn strings(xs: &[Scalar]) -> Vec<String> {
    xs.iter().map(scalar::format).collect()
}

fn parse_all(xs: &[String]) -> Result<Vec<Scalar>> {
    xs.iter().map(|x| scalar::parse(x)).collect()
}

pub fn from_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_string_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub name: String,
    pub dim: usize,
    pub structure_constants: Vec<(usize, usize, usize, String)>,
    #[serde(default)]
    pub basis_labels: Option<Vec<String>>,
}

impl AlgebraJson {
    pub fn from_algebra(alg: &LieAlgebra) -> Self {
        Self {
            name: alg.name().to_string(),
            dim: alg.dim(),
            structure_constants: alg.nonzero_constants().into_iter().map(|(i, j, k, c)| (i, j, k, scalar::format(&c))).collect(),
            basis_labels: Some(alg.labels().to_vec()),
        }
    }

    pub fn to_algebra(&self) -> Result<LieAlgebra> {
        let entries = self
            .structure_constants
            .iter()
            .map(|(i, j, k, c)| Ok((*i, *j, *k, scalar::parse(c)?)))
            .collect::<Result<Vec<_>>>()?;
        LieAlgebra::from_constants(self.name.clone(), self.dim, entries, self.basis_labels.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismJson {
    pub algebra: String,
    pub matrix: Vec<Vec<String>>,
    pub label: String,
}

impl AutomorphismJson {
    pub fn from_automorphism(a: &LieAutomorphism) -> Self {
        Self { algebra: a.algebra_name().to_string(), matrix: a.matrix().to_rows().iter().map(|r| strings(r)).collect(), label: a.label().to_string() }
    }

    /// Validates against `alg`.
    pub fn to_automorphism(&self, alg: &LieAlgebra) -> Result<LieAutomorphism> {
        if self.algebra != alg.name() {
            return Err(Error::InvalidModel(format!("automorphism of `{}` given for `{}`", self.algebra, alg.name())));
        }
        let rows = self.matrix.iter().map(|r| parse_all(r)).collect::<Result<Vec<_>>>()?;
        LieAutomorphism::new(alg, QMatrix::from_rows(rows)?, self.label.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTensorJson {
    pub degree: usize,
    pub terms: Vec<(Vec<usize>, String)>,
}

impl SymTensorJson {
    pub fn from_tensor(t: &SymTensor) -> Self {
        Self { degree: t.degree(), terms: t.terms().iter().map(|(m, c)| (m.indices().to_vec(), scalar::format(c))).collect() }
    }

    pub fn to_tensor(&self, dim: usize) -> Result<SymTensor> {
        let terms = self.terms.iter().map(|(m, c)| Ok((m.clone(), scalar::parse(c)?))).collect::<Result<Vec<_>>>()?;
        SymTensor::from_terms(dim, self.degree, terms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
    pub domain_degree: usize,
    pub codomain_degree: usize,
}

impl OperatorMatrixJson {
    pub fn from_matrix(m: &SparseMatrix, domain_degree: usize, codomain_degree: usize) -> Self {
        let mut entries: Vec<(usize, usize, String)> = m.entries().map(|(r, c, v)| (r, c, scalar::format(v))).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self { rows: m.rows(), cols: m.cols(), entries, domain_degree, codomain_degree }
    }

    pub fn to_matrix(&self) -> Result<SparseMatrix> {
        sparse_from_entries(self.rows, self.cols, &self.entries)
    }
}

fn sparse_from_entries(rows: usize, cols: usize, entries: &[(usize, usize, String)]) -> Result<SparseMatrix> {
    let mut m = SparseMatrix::zeros(rows, cols);
    for (r, c, v) in entries {
        if *r >= rows || *c >= cols {
            return Err(Error::OutOfRange(format!("entry ({r},{c}) outside {rows}x{cols}")));
        }
        m.set(*r, *c, scalar::parse(v)?);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MirrorTransformJson {
    Sign,
    Automorphism { automorphism: AutomorphismJson },
}

impl MirrorTransformJson {
    pub fn from_transform(t: &MirrorTransform) -> Self {
        match t {
            MirrorTransform::Sign => Self::Sign,
            MirrorTransform::Automorphism(a) => Self::Automorphism { automorphism: AutomorphismJson::from_automorphism(a) },
        }
    }

    pub fn to_transform(&self, alg: &LieAlgebra) -> Result<MirrorTransform> {
        match self {
            Self::Sign => Ok(MirrorTransform::Sign),
            Self::Automorphism { automorphism } => Ok(MirrorTransform::Automorphism(automorphism.to_automorphism(alg)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
}

/// `[p, a, q, b, [[r, "c"], …]]`: basis element `a` of degree `p` times
/// element `b` of degree `q`.
pub type ProductEntryJson = (usize, usize, usize, usize, Vec<(usize, String)>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DGAModelJson {
    pub name: String,
    pub basis: Vec<Vec<String>>,
    pub differentials: Vec<MatrixJson>,
    #[serde(default)]
    pub product: Option<Vec<ProductEntryJson>>,
}

impl DGAModelJson {
    pub fn from_model(m: &DGAModel) -> Self {
        let differentials = m
            .differentials()
            .iter()
            .map(|d| {
                let op = OperatorMatrixJson::from_matrix(d, 0, 0);
                MatrixJson { rows: op.rows, cols: op.cols, entries: op.entries }
            })
            .collect();
        let product = m.product().map(|table| {
            table
                .iter()
                .map(|(&(p, a, q, b), v)| (p, a, q, b, v.iter().map(|(r, c)| (*r, scalar::format(c))).collect()))
                .collect()
        });
        Self { name: m.name().to_string(), basis: m.basis().to_vec(), differentials, product }
    }

    pub fn to_model(&self) -> Result<DGAModel> {
        let differentials = self.differentials.iter().map(|d| sparse_from_entries(d.rows, d.cols, &d.entries)).collect::<Result<Vec<_>>>()?;
        let product = match &self.product {
            None => None,
            Some(entries) => {
                let mut table = ProductTable::new();
                for (p, a, q, b, coords) in entries {
                    let mut v = BTreeMap::new();
                    for (r, c) in coords {
                        let c = scalar::parse(c)?;
                        if !num::Zero::is_zero(&c) {
                            v.insert(*r, c);
                        }
                    }
                    table.insert((*p, *a, *q, *b), v);
                }
                Some(table)
            }
        };
        DGAModel::new(self.name.clone(), self.basis.clone(), differentials, product)
    }
}

/// A per-site field: a constant, or a sparse map keyed by site index with an
/// optional default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaFieldJson {
    Constant { constant: Vec<String> },
    Sites {
        #[serde(default)]
        default: Option<Vec<String>>,
        sites: BTreeMap<String, Vec<String>>,
    },
}

/// Horizontal connection components. `constant` holds one coefficient list
/// per base direction; `sites` maps site → direction → coefficients, with
/// unlisted entries zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaJson {
    Constant { constant: Vec<Vec<String>> },
    Sites { sites: BTreeMap<String, BTreeMap<String, Vec<String>>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBundleJson {
    pub grid: Vec<usize>,
    pub algebra: String,
    #[serde(default)]
    pub omega_base: Option<OmegaJson>,
    pub lambda_field: LambdaFieldJson,
}

impl GridBundleJson {
    pub fn from_bundle(b: &GridBundle) -> Self {
        let mut sites = BTreeMap::new();
        for (s, row) in b.omega_base().iter().enumerate() {
            let dirs: BTreeMap<String, Vec<String>> = row.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(a, v)| (a.to_string(), strings(&v.0))).collect();
            if !dirs.is_empty() {
                sites.insert(s.to_string(), dirs);
            }
        }
        Self {
            grid: b.grid().to_vec(),
            algebra: b.algebra().name().to_string(),
            omega_base: Some(OmegaJson::Sites { sites }),
            lambda_field: LambdaFieldJson::Sites { default: None, sites: b.lambda_field().iter().enumerate().map(|(s, l)| (s.to_string(), strings(&l.0))).collect() },
        }
    }

    /// The algebra is resolved by builtin name.
    pub fn to_bundle(&self) -> Result<GridBundle> {
        self.to_bundle_with(&builtin_algebra(&self.algebra)?)
    }

    pub fn to_bundle_with(&self, alg: &LieAlgebra) -> Result<GridBundle> {
        if self.grid.is_empty() || self.grid.contains(&0) {
            return Err(Error::InvalidModel(format!("bad grid {:?}", self.grid)));
        }
        let sites: usize = self.grid.iter().product();
        let (n, g) = (self.grid.len(), alg.dim());
        let mut omega = vec![vec![AlgebraVector::zero(g); n]; sites];
        match &self.omega_base {
            None => {}
            Some(OmegaJson::Constant { constant }) => {
                if constant.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: constant.len() });
                }
                let row = constant.iter().map(|c| Ok(AlgebraVector(parse_all(c)?))).collect::<Result<Vec<_>>>()?;
                omega = vec![row; sites];
            }
            Some(OmegaJson::Sites { sites: map }) => {
                for (s, dirs) in map {
                    let s = parse_index(s)?;
                    for (a, c) in dirs {
                        let a = parse_index(a)?;
                        if s >= sites || a >= n {
                            return Err(Error::OutOfRange(format!("omega entry site {s} direction {a}")));
                        }
                        omega[s][a] = AlgebraVector(parse_all(c)?);
                    }
                }
            }
        }
        let lambda = match &self.lambda_field {
            LambdaFieldJson::Constant { constant } => vec![DualVector(parse_all(constant)?); sites],
            LambdaFieldJson::Sites { default, sites: map } => {
                let mut field: Vec<Option<DualVector>> = vec![default.as_ref().map(|d| parse_all(d).map(DualVector)).transpose()?; sites];
                for (s, c) in map {
                    let s = parse_index(s)?;
                    if s >= sites {
                        return Err(Error::OutOfRange(format!("lambda entry for site {s} of {sites}")));
                    }
                    field[s] = Some(DualVector(parse_all(c)?));
                }
                field
                    .into_iter()
                    .enumerate()
                    .map(|(s, l)| l.ok_or_else(|| Error::InvalidModel(format!("no lambda given for site {s}"))))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        GridBundle::new(self.grid.clone(), alg.clone(), omega, lambda)
    }
}

fn parse_index(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad index `{s}`")))
}
