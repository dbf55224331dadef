use std::fmt;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use spencer_core::bundle::{
    all_constraint_distributions, cartan_residual, compatibility_functional_terms, equivariance_residual, transversality_report, GridBundle,
    DEFAULT_SERIES_ORDER,
};
use spencer_core::complex::{
    basis_element, build_complex, cohomology, cup_product, kunneth_diagnostic, mirror_invariance_check, torus_model, ComplexOptions, DGAModel,
    Grading, RankMethod,
};
use spencer_core::json::{AlgebraJson, DGAModelJson, GridBundleJson, MirrorTransformJson, OperatorMatrixJson, SymTensorJson};
use spencer_core::lie::{builtin_algebra, builtin_automorphism, AlgebraVector, AutomorphismKind, DualVector, LieAlgebra};
use spencer_core::mirror::{intertwining_check, mirror_lambda, mirror_lambda_with, sign_antisymmetry_residual, DualTransport, MirrorTransform};
use spencer_core::scalar::{self, Scalar};
use spencer_core::spencer::{
    delta_lambda_generator, jacobi_form_generator, nilpotency_report, signed_leibniz_welldefinedness, LeibnizConvention, NilpotencyReport,
    SpencerOperator,
};
use spencer_core::symtensor::Pairing;

use crate::{AlgebraSource, BundleCmd, Cli, Command, ComplexCmd, LambdaSource, MirrorCmd, Mode, OperatorOptions, SpencerCmd};

const FLOAT_RANK_TOL: f64 = 1e-9;

/// Input or precondition problem; maps to exit code 2.
#[derive(Debug)]
pub struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<spencer_core::Error> for InputError {
    fn from(e: spencer_core::Error) -> Self {
        Self(e.to_string())
    }
}

impl From<std::io::Error> for InputError {
    fn from(e: std::io::Error) -> Self {
        Self(e.to_string())
    }
}

impl From<serde_json::Error> for InputError {
    fn from(e: serde_json::Error) -> Self {
        Self(format!("malformed JSON: {e}"))
    }
}

fn input_err(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

type Res<T> = Result<T, InputError>;

pub struct Outcome {
    pub report: Value,
    /// Asserted checks that failed; non-empty means exit 1.
    pub failures: Vec<String>,
}

pub fn run(cli: &Cli) -> Res<Outcome> {
    let method = match cli.mode {
        Mode::Rational => RankMethod::Exact,
        Mode::Float => RankMethod::Float { tol: FLOAT_RANK_TOL },
    };
    let mut out = match &cli.command {
        Command::Algebra(a) => cmd_algebra(&a.source)?,
        Command::Spencer(a) => cmd_spencer(a, cli.seed)?,
        Command::Mirror(a) => cmd_mirror(a)?,
        Command::Complex(a) => cmd_complex(a, method, cli.seed)?,
        Command::Bundle(a) => cmd_bundle(a)?,
    };
    if let Value::Object(map) = &mut out.report {
        map.insert("mode".into(), json!(match cli.mode {
            Mode::Rational => "rational",
            Mode::Float => "float",
        }));
        if let Some(s) = cli.seed {
            map.insert("seed".into(), json!(s));
        }
    }
    Ok(out)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn fmt_scalar(x: &Scalar) -> Value {
    Value::String(scalar::format(x))
}

fn fmt_vec(xs: &[Scalar]) -> Value {
    Value::Array(xs.iter().map(fmt_scalar).collect())
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_algebra_unchecked(src: &AlgebraSource) -> Res<LieAlgebra> {
    match (&src.builtin, &src.file) {
        (Some(name), _) => Ok(builtin_algebra(name)?),
        (None, Some(path)) => {
            let parsed: AlgebraJson = serde_json::from_str(&read(path)?)?;
            Ok(parsed.to_algebra()?)
        }
        (None, None) => Err(input_err("an algebra is required (--builtin or --file)")),
    }
}

/// Every command except `algebra` needs genuine structure constants.
fn load_algebra(src: &AlgebraSource) -> Res<LieAlgebra> {
    let alg = load_algebra_unchecked(src)?;
    if let Some(w) = alg.jacobi_witness() {
        return Err(input_err(format!(
            "`{}` fails the Jacobi identity at (i,j,l,k) = ({},{},{},{}), value {}",
            alg.name(),
            w.i,
            w.j,
            w.l,
            w.k,
            scalar::format(&w.value)
        )));
    }
    if !is_zero(&alg.antisymmetry_residual()) {
        return Err(input_err(format!("`{}` has non-antisymmetric structure constants", alg.name())));
    }
    Ok(alg)
}

fn load_lambda(src: &LambdaSource, alg: &LieAlgebra) -> Res<DualVector> {
    let coeffs = match (&src.lambda, &src.lambda_file) {
        (Some(s), _) => scalar::parse_list(s)?,
        (None, Some(path)) => {
            let raw: Vec<String> = serde_json::from_str(&read(path)?)?;
            raw.iter().map(|s| scalar::parse(s)).collect::<spencer_core::Result<_>>()?
        }
        (None, None) => return Err(input_err("λ is required (--lambda or --lambda-file)")),
    };
    if coeffs.len() != alg.dim() {
        return Err(input_err(format!("λ has {} coefficients, algebra `{}` has dimension {}", coeffs.len(), alg.name(), alg.dim())));
    }
    Ok(DualVector(coeffs))
}

fn parse_pairing(s: &str, alg: &LieAlgebra) -> Res<Pairing> {
    match s.trim().to_ascii_lowercase().as_str() {
        "basis" => Ok(Pairing::Basis),
        "killing" => Ok(Pairing::killing(alg)?),
        other => Err(input_err(format!("unknown pairing `{other}` (basis or killing)"))),
    }
}

fn parse_transform(s: &str, alg: &LieAlgebra) -> Res<MirrorTransform> {
    if s.trim().eq_ignore_ascii_case("sign") {
        return Ok(MirrorTransform::Sign);
    }
    let kind = AutomorphismKind::parse(s)?;
    Ok(MirrorTransform::Automorphism(builtin_automorphism(alg, &kind)?))
}

struct OpSetup {
    k: usize,
    convention: LeibnizConvention,
    pairing: Pairing,
}

fn op_setup(o: &OperatorOptions, alg: &LieAlgebra) -> Res<OpSetup> {
    Ok(OpSetup { k: o.k, convention: LeibnizConvention::parse(&o.convention)?, pairing: parse_pairing(&o.pairing, alg)? })
}

fn cmd_algebra(src: &AlgebraSource) -> Res<Outcome> {
    let alg = load_algebra_unchecked(src)?;
    let witness = alg.jacobi_witness();
    let mut failures = Vec::new();
    if let Some(w) = &witness {
        failures.push(format!("Jacobi identity fails at (i,j,l,k) = ({},{},{},{}), value {}", w.i, w.j, w.l, w.k, scalar::format(&w.value)));
    }
    let antisym = alg.antisymmetry_residual();
    if !is_zero(&antisym) {
        failures.push(format!("structure constants not antisymmetric, residual {}", scalar::format(&antisym)));
    }
    let report = json!({
        "command": "algebra",
        "algebra": to_value(&AlgebraJson::from_algebra(&alg)),
        "dim": alg.dim(),
        "basis_labels": alg.labels(),
        "jacobi_residual": fmt_scalar(&alg.jacobi_residual()),
        "jacobi_witness": witness.map(|w| json!({"i": w.i, "j": w.j, "l": w.l, "k": w.k, "value": fmt_scalar(&w.value)})),
        "antisymmetry_residual": fmt_scalar(&antisym),
        "abelian": alg.is_abelian(),
        "killing_form": alg.killing_form().to_rows().iter().map(|r| fmt_vec(r)).collect::<Vec<_>>(),
    });
    Ok(Outcome { report, failures })
}

fn nilpotency_value(r: &NilpotencyReport) -> Value {
    json!({
        "convention": r.convention,
        "residuals": r.residuals.iter().map(|(k, v)| json!({"degree": k, "max_abs": fmt_scalar(v)})).collect::<Vec<_>>(),
        "holds": r.holds,
        "witness": r.witness.as_ref().map(to_value),
    })
}

/// Largest coefficient gap between the constructive and Jacobi-form generators.
fn equivalence_residual(alg: &LieAlgebra, lambda: &DualVector, pairing: &Pairing) -> Res<Scalar> {
    let mut worst = scalar::zero();
    for i in 0..alg.dim() {
        let v = alg.basis_vector(i);
        let a = delta_lambda_generator(alg, lambda, &v, pairing)?;
        let b = jacobi_form_generator(alg, lambda, &v, pairing)?;
        let r = a.sub(&b)?.max_abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

fn cmd_spencer(a: &SpencerCmd, seed: Option<u64>) -> Res<Outcome> {
    let alg = load_algebra(&a.source)?;
    let lambda = load_lambda(&a.lambda, &alg)?;
    if !lambda.is_nondegenerate() && !a.lambda.allow_degenerate {
        return Err(input_err("non-degeneracy λ(p) ≠ 0 violated: λ = 0 (pass --allow-degenerate to proceed)"));
    }
    let s = op_setup(&a.op, &alg)?;
    if s.k < 2 {
        return Err(input_err(format!("--K must be at least 2, got {}", s.k)));
    }
    if a.random_lambdas > 0 && seed.is_none() {
        return Err(input_err("--random-lambdas needs --seed"));
    }
    let op = SpencerOperator::with_pairing(&alg, &lambda, s.convention, s.pairing.clone())?;
    let matrices: Vec<Value> = (0..s.k)
        .map(|k| op.matrix(k).map(|m| to_value(&OperatorMatrixJson::from_matrix(&m, k, k + 1))))
        .collect::<spencer_core::Result<_>>()?;
    let generators: Vec<Value> = (0..alg.dim()).map(|i| to_value(&SymTensorJson::from_tensor(op.generator(i)))).collect();
    let nil = nilpotency_report(&op, s.k)?;

    let welldefinedness = if s.convention == LeibnizConvention::PaperSigned {
        let mut per_degree = Vec::new();
        for k in 2..s.k {
            let ws = signed_leibniz_welldefinedness(&op, k)?;
            per_degree.push(json!({
                "degree": k,
                "well_defined": ws.is_empty(),
                "witnesses": ws.iter().map(|w| json!({
                    "multiset": w.multiset.to_string(),
                    "order_a": w.order_a,
                    "order_b": w.order_b,
                    "image_a": w.image_a.to_string(),
                    "image_b": w.image_b.to_string(),
                })).collect::<Vec<_>>(),
            }));
        }
        Value::Array(per_degree)
    } else {
        Value::Null
    };

    let eq = equivalence_residual(&alg, &lambda, &s.pairing)?;
    let mut random = Vec::new();
    if let Some(seed) = seed.filter(|_| a.random_lambdas > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..a.random_lambdas {
            let l = DualVector::random(alg.dim(), &mut rng);
            let o = SpencerOperator::with_pairing(&alg, &l, s.convention, s.pairing.clone())?;
            let r = equivalence_residual(&alg, &l, &s.pairing)?;
            random.push(json!({
                "lambda": fmt_vec(&l.0),
                "equivalence_residual": fmt_scalar(&r),
                "nilpotent": nilpotency_report(&o, s.k)?.holds,
            }));
        }
    }

    let mut failures = Vec::new();
    if a.assert_nilpotent && !nil.holds {
        let detail = nil.witness.as_ref().map(|w| format!(" (degree {}, {} -> {})", w.degree, w.basis_element, w.image)).unwrap_or_default();
        failures.push(format!("δ∘δ ≠ 0{detail}"));
    }
    let report = json!({
        "command": "spencer",
        "algebra": alg.name(),
        "lambda": fmt_vec(&lambda.0),
        "K": s.k,
        "convention": s.convention,
        "pairing": s.pairing.name(),
        "generators": generators,
        "matrices": matrices,
        "nilpotency": nilpotency_value(&nil),
        "welldefinedness": welldefinedness,
        "equivalence": {"max_residual": fmt_scalar(&eq), "holds": is_zero(&eq)},
        "random_lambdas": random,
    });
    Ok(Outcome { report, failures })
}

fn cmd_mirror(a: &MirrorCmd) -> Res<Outcome> {
    let alg = load_algebra(&a.source)?;
    let lambda = load_lambda(&a.lambda, &alg)?;
    let s = op_setup(&a.op, &alg)?;
    if s.k < 2 {
        return Err(input_err(format!("--K must be at least 2, got {}", s.k)));
    }
    let t = match &a.transform_file {
        Some(path) => serde_json::from_str::<MirrorTransformJson>(&read(path)?)?.to_transform(&alg)?,
        None => parse_transform(&a.transform, &alg)?,
    };
    t.check_algebra(&alg)?;
    let is_sign = matches!(t, MirrorTransform::Sign);
    if !is_sign && a.assert_antisymmetry {
        return Err(input_err("--assert-antisymmetry applies to the sign transform"));
    }
    if is_sign && a.assert_intertwining {
        return Err(input_err("--assert-intertwining applies to automorphism transforms"));
    }

    let mirrored = mirror_lambda(&t, &lambda)?;
    let twice = mirror_lambda(&t, &mirrored)?;
    let involution = twice == lambda;
    let nondegeneracy_preserved = lambda.is_zero() == mirrored.is_zero();
    let mut failures = Vec::new();
    if a.assert_involution && !involution {
        failures.push(format!("{} applied twice does not return λ", t.label()));
    }

    let mut report = json!({
        "command": "mirror",
        "algebra": alg.name(),
        "transform": t.label(),
        "lambda": fmt_vec(&lambda.0),
        "mirrored_lambda": fmt_vec(&mirrored.0),
        "K": s.k,
        "convention": s.convention,
        "pairing": s.pairing.name(),
        "involution": {"mirrored_twice": fmt_vec(&twice.0), "holds": involution},
        "nondegeneracy_preserved": nondegeneracy_preserved,
    });
    let map = report.as_object_mut().expect("object");

    match &t {
        MirrorTransform::Sign => {
            let op = SpencerOperator::with_pairing(&alg, &lambda, s.convention, s.pairing.clone())?;
            let op_neg = SpencerOperator::with_pairing(&alg, &mirrored, s.convention, s.pairing.clone())?;
            let r = sign_antisymmetry_residual(&op, &op_neg, s.k - 1)?;
            let holds = is_zero(&r);
            if a.assert_antisymmetry && !holds {
                failures.push(format!("δ^(-λ) ≠ -δ^λ, residual {}", scalar::format(&r)));
            }
            map.insert("antisymmetry".into(), json!({"max_degree": s.k - 1, "residual": fmt_scalar(&r), "holds": holds}));
        }
        MirrorTransform::Automorphism(aut) => {
            let literal = mirror_lambda_with(&t, &lambda, DualTransport::PaperLiteral)?;
            let mut inverse = Vec::new();
            let mut literal_reports = Vec::new();
            for k in 1..s.k {
                inverse.push(intertwining_check(&alg, aut, &lambda, k, s.convention, DualTransport::Inverse, &s.pairing)?);
                literal_reports.push(intertwining_check(&alg, aut, &lambda, k, s.convention, DualTransport::PaperLiteral, &s.pairing)?);
            }
            let holds = inverse.iter().all(|r| r.holds);
            if a.assert_intertwining && !holds {
                let bad = inverse.iter().find(|r| !r.holds).expect("a failing degree");
                failures.push(format!("{} does not intertwine at degree {}, residual {}", aut.label(), bad.degree, scalar::format(&bad.residual)));
            }
            map.insert("paper_literal_lambda".into(), fmt_vec(&literal.0));
            map.insert("is_involution".into(), json!(aut.is_involution()));
            map.insert(
                "intertwining".into(),
                json!({
                    "inverse": inverse.iter().map(to_value).collect::<Vec<_>>(),
                    "paper_literal": literal_reports.iter().map(to_value).collect::<Vec<_>>(),
                    "holds": holds,
                    "paper_literal_holds": literal_reports.iter().all(|r| r.holds),
                }),
            );
        }
    }
    Ok(Outcome { report, failures })
}

fn load_dga(a: &ComplexCmd) -> Res<DGAModel> {
    match &a.dga_file {
        Some(path) => Ok(serde_json::from_str::<DGAModelJson>(&read(path)?)?.to_model()?),
        None => Ok(torus_model(a.torus)?),
    }
}

fn cmd_complex(a: &ComplexCmd, method: RankMethod, seed: Option<u64>) -> Res<Outcome> {
    let alg = load_algebra(&a.source)?;
    let lambda = load_lambda(&a.lambda, &alg)?;
    let s = op_setup(&a.op, &alg)?;
    let grading = Grading::parse(&a.grading)?;
    if a.cup_samples > 0 && seed.is_none() {
        return Err(input_err("--cup-samples needs --seed"));
    }
    let dga = load_dga(a)?;
    let opts = ComplexOptions { max_degree: s.k, convention: s.convention, grading, pairing: s.pairing.clone() };
    let c = build_complex(&dga, &alg, &lambda, &opts)?;
    let coh = cohomology(&c, method)?;

    let mut report = json!({
        "command": "complex",
        "algebra": alg.name(),
        "dga": dga.name(),
        "lambda": fmt_vec(&lambda.0),
        "cohomology": to_value(&coh),
    });
    let map = report.as_object_mut().expect("object");
    let mut failures = Vec::new();

    if grading == Grading::Diagonal {
        let blocks: Vec<Value> = c
            .diagonal_blocks()
            .iter()
            .map(|b| {
                json!({
                    "degree": b.degree,
                    "d_block": {"rows": b.d_block.rows(), "cols": b.d_block.cols(), "nnz": b.d_block.nnz()},
                    "delta_block": {"rows": b.delta_block.rows(), "cols": b.delta_block.cols(), "nnz": b.delta_block.nnz()},
                })
            })
            .collect();
        map.insert("diagonal_blocks".into(), Value::Array(blocks));
    }

    if let Some(name) = &a.mirror {
        if grading != Grading::Total {
            return Err(input_err("--mirror needs the total grading"));
        }
        let t = parse_transform(name, &alg)?;
        let m = mirror_invariance_check(&c, &t, None, method)?;
        if a.assert_mirror_invariant {
            if !m.commutes {
                let detail = m.failure.as_ref().map(|(k, w)| format!(" at degree {k}: {w}")).unwrap_or_default();
                failures.push(format!("chain map for {} does not commute with D{detail}", m.transform));
            }
            if m.dims_equal == Some(false) {
                failures.push(format!("cohomology dims differ: {:?} vs {:?}", m.original.dims, m.mirrored.dims));
            }
        }
        map.insert("mirror".into(), to_value(&m));
    }

    if a.kunneth {
        if grading != Grading::Total {
            return Err(input_err("--kunneth needs the total grading"));
        }
        map.insert("kunneth".into(), to_value(&kunneth_diagnostic(&c, method)?));
    }

    if let Some(seed) = seed.filter(|_| a.cup_samples > 0) {
        if grading != Grading::Total {
            return Err(input_err("--cup-samples needs the total grading"));
        }
        if !dga.has_product() {
            return Err(input_err(format!("model `{}` has no product", dga.name())));
        }
        if s.k < 3 {
            return Err(input_err("cup products of degree-one classes need --K 3 or more"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = &dga.basis()[1];
        let mut products = Vec::new();
        for i in 0..dga.dim(1) {
            for j in 0..dga.dim(1) {
                let x = basis_element(&c, 1, i, 0, 0)?;
                let y = basis_element(&c, 1, j, 0, 0)?;
                let p = cup_product(&c, 1, &x, 1, &y, a.cup_samples, &mut rng)?;
                products.push(json!({
                    "left": format!("{}(x)1", labels[i]),
                    "right": format!("{}(x)1", labels[j]),
                    "product": to_value(&p),
                }));
            }
        }
        map.insert("cup_products".into(), Value::Array(products));
    }
    Ok(Outcome { report, failures })
}

fn parse_omega(s: &str, n: usize, dim: usize) -> Res<Vec<AlgebraVector>> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != n {
        return Err(input_err(format!("--omega needs {n} `;`-separated components, got {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| {
            let v = scalar::parse_list(p)?;
            if v.len() != dim {
                return Err(input_err(format!("ω component has {} coefficients, algebra dimension is {dim}", v.len())));
            }
            Ok(AlgebraVector(v))
        })
        .collect()
}

fn load_bundle(a: &BundleCmd) -> Res<GridBundle> {
    if let Some(path) = &a.file {
        return Ok(serde_json::from_str::<GridBundleJson>(&read(path)?)?.to_bundle()?);
    }
    let Some(name) = &a.builtin else {
        return Err(input_err("a bundle is required (--file, or --builtin with --lambda)"));
    };
    let alg = load_algebra(&AlgebraSource { builtin: Some(name.clone()), file: None })?;
    let lambda = load_lambda(&LambdaSource { lambda: a.lambda.clone(), lambda_file: None, allow_degenerate: true }, &alg)?;
    let omega = match &a.omega {
        Some(s) => parse_omega(s, a.base_dim, alg.dim())?,
        None => vec![AlgebraVector::zero(alg.dim()); a.base_dim],
    };
    Ok(GridBundle::constant(a.grid, a.base_dim, alg, omega, lambda)?)
}

fn cmd_bundle(a: &BundleCmd) -> Res<Outcome> {
    let b = load_bundle(a)?;
    // degenerate sites surface here as an input error naming them
    let trans = transversality_report(&b)?;
    let cartan = match cartan_residual(&b) {
        Ok(r) => json!({
            "max": fmt_scalar(&r.max),
            "max_f64": r.max_f64(),
            "nonzero_sites": (0..b.num_sites()).filter(|&s| r.field[s].iter().any(|v| !v.is_zero())).collect::<Vec<_>>(),
        }),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    let equiv = equivariance_residual(&b, &[0.5, 1.0], DEFAULT_SERIES_ORDER)?;
    let terms = if b.grid().iter().all(|&m| m >= 3) {
        let targets = all_constraint_distributions(&b)?;
        to_value(&compatibility_functional_terms(&b, &targets)?)
    } else {
        Value::Null
    };
    let report = json!({
        "command": "bundle",
        "algebra": b.algebra().name(),
        "grid": b.grid(),
        "num_sites": b.num_sites(),
        "transversality": to_value(&trans),
        "cartan": cartan,
        "equivariance": to_value(&equiv),
        "functional": terms,
    });
    Ok(Outcome { report, failures: Vec::new() })
}

fn is_zero(x: &Scalar) -> bool {
    *x == scalar::zero()
}
