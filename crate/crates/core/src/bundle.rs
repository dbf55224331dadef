//! Lattice model of a trivial principal bundle over a periodic grid on the
//! `n`-torus. The tangent space at a point is `R^n ⊕ g`, the vertical
//! subspace is `0 ⊕ g`, and `ω(u, X) = Σ u_a ω_a + X`.

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, DualVector, LieAlgebra};
use crate::linalg::{self, QMatrix};
use crate::scalar::{self, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct GridBundle {
    grid: Vec<usize>,
    algebra: LieAlgebra,
    /// `[site][direction]`.
    omega_base: Vec<Vec<AlgebraVector>>,
    lambda_field: Vec<DualVector>,
}

impl GridBundle {
    pub fn new(grid: Vec<usize>, algebra: LieAlgebra, omega_base: Vec<Vec<AlgebraVector>>, lambda_field: Vec<DualVector>) -> Result<Self> {
        if grid.is_empty() || grid.contains(&0) {
            return Err(Error::InvalidModel(format!("bad grid {grid:?}")));
        }
        let sites: usize = grid.iter().product();
        let (n, g) = (grid.len(), algebra.dim());
        if omega_base.len() != sites || lambda_field.len() != sites {
            return Err(Error::DimensionMismatch { expected: sites, got: omega_base.len().min(lambda_field.len()) });
        }
        for row in &omega_base {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if let Some(v) = row.iter().find(|v| v.dim() != g) {
                return Err(Error::DimensionMismatch { expected: g, got: v.dim() });
            }
        }
        if let Some(l) = lambda_field.iter().find(|l| l.dim() != g) {
            return Err(Error::DimensionMismatch { expected: g, got: l.dim() });
        }
        Ok(Self { grid, algebra, omega_base, lambda_field })
    }

    /// Constant fields on an `m^n` grid.
    pub fn constant(m: usize, n: usize, algebra: LieAlgebra, omega: Vec<AlgebraVector>, lambda: DualVector) -> Result<Self> {
        let sites = m.pow(n as u32);
        Self::new(vec![m; n], algebra, vec![omega; sites], vec![lambda; sites])
    }

    /// Constant fields with `ω = 0`.
    pub fn flat(m: usize, n: usize, algebra: LieAlgebra, lambda: DualVector) -> Result<Self> {
        let g = algebra.dim();
        Self::constant(m, n, algebra, vec![AlgebraVector::zero(g); n], lambda)
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn base_dim(&self) -> usize {
        self.grid.len()
    }

    pub fn num_sites(&self) -> usize {
        self.lambda_field.len()
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn omega(&self, site: usize, direction: usize) -> &AlgebraVector {
        &self.omega_base[site][direction]
    }

    pub fn omega_base(&self) -> &[Vec<AlgebraVector>] {
        &self.omega_base
    }

    pub fn lambda(&self, site: usize) -> &DualVector {
        &self.lambda_field[site]
    }

    pub fn lambda_field(&self) -> &[DualVector] {
        &self.lambda_field
    }

    pub fn set_lambda(&mut self, site: usize, lambda: DualVector) -> Result<()> {
        if lambda.dim() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), got: lambda.dim() });
        }
        self.lambda_field[site] = lambda;
        Ok(())
    }

    pub fn set_omega(&mut self, site: usize, direction: usize, omega: AlgebraVector) -> Result<()> {
        if omega.dim() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), got: omega.dim() });
        }
        self.omega_base[site][direction] = omega;
        Ok(())
    }

    /// The same bundle with `λ` replaced by `f(λ)` at every site.
    pub fn map_lambda(&self, f: impl Fn(&DualVector) -> DualVector) -> Self {
        Self { lambda_field: self.lambda_field.iter().map(f).collect(), ..self.clone() }
    }

    /// Grid coordinates of `site`; axis 0 varies fastest.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        self.grid
            .iter()
            .map(|&m| {
                let c = rest % m;
                rest /= m;
                c
            })
            .collect()
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.grid).rev().fold(0, |acc, (&c, &m)| acc * m + c % m)
    }

    /// Periodic neighbour `site ± e_axis`.
    pub fn neighbor(&self, site: usize, axis: usize, forward: bool) -> usize {
        let mut c = self.coords(site);
        let m = self.grid[axis];
        c[axis] = if forward { (c[axis] + 1) % m } else { (c[axis] + m - 1) % m };
        self.site(&c)
    }

    /// `dim T_pP = n + dim g`.
    pub fn tangent_dim(&self) -> usize {
        self.base_dim() + self.algebra.dim()
    }

    /// Coefficients of `v ↦ <λ(p), ω(v)>` on `R^n ⊕ g`.
    pub fn constraint_functional(&self, site: usize) -> Result<Vec<Scalar>> {
        let l = &self.lambda_field[site];
        let mut row = Vec::with_capacity(self.tangent_dim());
        for w in &self.omega_base[site] {
            row.push(self.algebra.pairing(l, w)?);
        }
        row.extend(l.0.iter().cloned());
        Ok(row)
    }
}

/// Canonical basis of `D_p = ker(v ↦ <λ(p), ω(v)>)`.
pub fn constraint_distribution(b: &GridBundle, site: usize) -> Result<Vec<Vec<Scalar>>> {
    if site >= b.num_sites() {
        return Err(Error::OutOfRange(format!("site {site} of {}", b.num_sites())));
    }
    if !b.lambda(site).is_nondegenerate() {
        return Err(Error::DegenerateSite { site });
    }
    let f = QMatrix::from_rows(vec![b.constraint_functional(site)?])?;
    Ok(linalg::canonical_basis(&f.nullspace(), b.tangent_dim()))
}

fn vertical_basis(b: &GridBundle) -> Vec<Vec<Scalar>> {
    let (n, t) = (b.base_dim(), b.tangent_dim());
    (0..b.algebra().dim())
        .map(|i| (0..t).map(|k| if k == n + i { Scalar::one() } else { Scalar::zero() }).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SiteTransversality {
    pub site: usize,
    pub dim_d: usize,
    pub dim_intersection: usize,
    pub dim_sum: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransversalityReport {
    pub tangent_dim: usize,
    pub vertical_dim: usize,
    pub sites: Vec<SiteTransversality>,
    /// `D_p ∩ V_p = 0` at every site.
    pub zero_intersection_holds: bool,
    /// `D_p + V_p = T_pP` at every site.
    pub sum_holds: bool,
    pub strong_transversality_holds: bool,
    /// `dim(D+V) = dim D + dim V − dim(D∩V)` at every site.
    pub rank_nullity_consistent: bool,
}

pub fn transversality_report(b: &GridBundle) -> Result<TransversalityReport> {
    let degenerate: Vec<usize> = (0..b.num_sites()).filter(|&s| !b.lambda(s).is_nondegenerate()).collect();
    if !degenerate.is_empty() {
        return Err(Error::DegenerateSites(degenerate));
    }
    let t = b.tangent_dim();
    let v = vertical_basis(b);
    let mut sites = Vec::with_capacity(b.num_sites());
    for s in 0..b.num_sites() {
        let d = constraint_distribution(b, s)?;
        let inter = linalg::intersection(&d, &v, t);
        let all: Vec<Vec<Scalar>> = d.iter().chain(&v).cloned().collect();
        sites.push(SiteTransversality { site: s, dim_d: d.len(), dim_intersection: inter.len(), dim_sum: linalg::span_dim(&all) });
    }
    let zero_intersection_holds = sites.iter().all(|s| s.dim_intersection == 0);
    let sum_holds = sites.iter().all(|s| s.dim_sum == t);
    let rank_nullity_consistent = sites.iter().all(|s| s.dim_sum + s.dim_intersection == s.dim_d + v.len());
    Ok(TransversalityReport {
        tangent_dim: t,
        vertical_dim: v.len(),
        sites,
        zero_intersection_holds,
        sum_holds,
        strong_transversality_holds: zero_intersection_holds && sum_holds,
        rank_nullity_consistent,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartanResidual {
    /// `[site][direction]`.
    pub field: Vec<Vec<DualVector>>,
    pub max: Scalar,
}

/// `(λ(p+a) − λ(p−a)) / 2h_a + ad*_{ω_a(p)} λ(p)` at every site and direction.
pub fn cartan_residual(b: &GridBundle) -> Result<CartanResidual> {
    if let Some(&m) = b.grid().iter().find(|&&m| m < 3) {
        return Err(Error::OutOfRange(format!("central differences need m >= 3, got {m}")));
    }
    let mut field = Vec::with_capacity(b.num_sites());
    let mut max = Scalar::zero();
    for s in 0..b.num_sites() {
        let mut row = Vec::with_capacity(b.base_dim());
        for a in 0..b.base_dim() {
            // 1 / 2h = m / 2
            let inv_2h = scalar::ratio(b.grid()[a] as i64, 2);
            let diff = b.lambda(b.neighbor(s, a, true)).sub(b.lambda(b.neighbor(s, a, false)))?.scale(&inv_2h);
            let r = diff.add(&b.algebra().coadjoint(b.omega(s, a), b.lambda(s))?)?;
            max = max.max(r.max_abs());
            row.push(r);
        }
        field.push(row);
    }
    Ok(CartanResidual { field, max })
}

/// Sampled fibre-action check, in floating point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub series_order: usize,
    pub times: Vec<f64>,
    pub samples: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub holds: bool,
}

pub const EQUIVARIANCE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SERIES_ORDER: usize = 16;

/// `Σ_{k ≤ order} M^k / k!`.
pub fn exp_series(m: &[Vec<f64>], order: usize) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = out.clone();
    for k in 1..=order {
        term = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|l| term[i][l] * m[l][j]).sum::<f64>() / k as f64).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                out[i][j] += term[i][j];
            }
        }
    }
    out
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// The equivariant extension `λ(p, g) = Ad*_{g^{-1}} λ(p)` must satisfy
/// `R_h^* λ = Ad*_{h^{-1}} λ`. Sampled with `g = h = exp(t/2 e_i)`, so that
/// `λ(p, exp(t e_i))` computed in one step is compared against
/// `Ad*_{h^{-1}} λ(p, h)`. `Ad*_{exp(-X)} = exp(-ad*_X)` by truncated series.
pub fn equivariance_residual(b: &GridBundle, times: &[f64], order: usize) -> Result<EquivarianceReport> {
    if order < 4 {
        return Err(Error::OutOfRange(format!("series order must be >= 4, got {order}")));
    }
    let alg = b.algebra();
    let mut residual = 0.0f64;
    let mut samples = 0;
    for i in 0..alg.dim() {
        let c = alg.coadjoint_matrix(&alg.basis_vector(i))?;
        let cf: Vec<Vec<f64>> = (0..c.rows()).map(|r| c.row(r).iter().map(scalar::to_f64).collect()).collect();
        for &t in times {
            let scaled = |s: f64| -> Vec<Vec<f64>> { cf.iter().map(|row| row.iter().map(|x| -s * x).collect()).collect() };
            let full = exp_series(&scaled(t), order);
            let half = exp_series(&scaled(t / 2.0), order);
            for s in 0..b.num_sites() {
                let l: Vec<f64> = b.lambda(s).0.iter().map(scalar::to_f64).collect();
                let direct = mat_vec(&full, &l);
                let stepped = mat_vec(&half, &mat_vec(&half, &l));
                let dev = direct.iter().zip(&stepped).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                residual = residual.max(dev);
                samples += 1;
            }
        }
    }
    Ok(EquivarianceReport {
        series_order: order,
        times: times.to_vec(),
        samples,
        residual,
        tolerance: EQUIVARIANCE_TOLERANCE,
        holds: residual <= EQUIVARIANCE_TOLERANCE,
    })
}

/// `dist²(ξ, W°)` in the dual-basis Euclidean norm, where `W°` is the
/// annihilator of `span(w)`: the squared norm of the projection of `ξ` onto
/// `span(w)`.
pub fn dist_sq_to_annihilator(xi: &[Scalar], w: &[Vec<Scalar>]) -> Result<Scalar> {
    let w = linalg::canonical_basis(w, xi.len());
    if w.is_empty() {
        return Ok(Scalar::zero());
    }
    let wm = QMatrix::from_rows(w)?;
    let gram = wm.mul(&wm.transpose())?;
    let proj = wm.mul_vec(xi)?;
    let coeffs = gram.inverse()?.mul_vec(&proj)?;
    Ok(coeffs.iter().zip(&proj).map(|(a, b)| a * b).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalTerms {
    /// `½ Σ_p h^n Σ_a |cartan residual|²`.
    #[serde(serialize_with = "crate::json::ser_scalar")]
    pub cartan_energy: Scalar,
    /// `Σ_p h^n dist²(λ(p), A_D(p))`.
    #[serde(serialize_with = "crate::json::ser_scalar")]
    pub distance_energy: Scalar,
}

/// Evaluates both terms of the compatibility functional. `targets[p]` spans
/// the target distribution at `p` (inside `R^n ⊕ g`); `A_D(p)` is taken as
/// the annihilator of `ω(D_p)`.
pub fn compatibility_functional_terms(b: &GridBundle, targets: &[Vec<Vec<Scalar>>]) -> Result<FunctionalTerms> {
    if targets.len() != b.num_sites() {
        return Err(Error::DimensionMismatch { expected: b.num_sites(), got: targets.len() });
    }
    let cell: Scalar = b.grid().iter().fold(Scalar::one(), |acc, &m| acc * scalar::ratio(1, m as i64));
    let res = cartan_residual(b)?;
    let sq: Scalar = res.field.iter().flatten().flat_map(|r| r.0.iter()).map(|x| x * x).sum();
    let cartan_energy = sq * &cell / scalar::int(2);
    let n = b.base_dim();
    let mut dist = Scalar::zero();
    for (s, basis) in targets.iter().enumerate() {
        let images: Vec<Vec<Scalar>> = basis
            .iter()
            .map(|v| {
                if v.len() != b.tangent_dim() {
                    return Err(Error::DimensionMismatch { expected: b.tangent_dim(), got: v.len() });
                }
                let mut w = v[n..].to_vec();
                for a in 0..n {
                    for (k, c) in b.omega(s, a).0.iter().enumerate() {
                        w[k] += &v[a] * c;
                    }
                }
                Ok(w)
            })
            .collect::<Result<_>>()?;
        dist += dist_sq_to_annihilator(&b.lambda(s).0, &images)?;
    }
    Ok(FunctionalTerms { cartan_energy, distance_energy: dist * cell })
}

/// `constraint_distribution` at every site.
pub fn all_constraint_distributions(b: &GridBundle) -> Result<Vec<Vec<Vec<Scalar>>>> {
    (0..b.num_sites()).map(|s| constraint_distribution(b, s)).collect()
}

impl CartanResidual {
    pub fn max_f64(&self) -> f64 {
        scalar::to_f64(&self.max.abs())
    }
}
