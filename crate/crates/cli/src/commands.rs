use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use thiserror::Error;

use jetq_core::bidisc::{
    brute_force_quotient, contraction_report, frame_image_series, gram_data,
    gram_determinant_closed_form, homog_bundle_metric, homog_curvature_restriction,
    jet_frame_image, quotient_kernel_restricted, recover_homog_abc, shift_blocks, shift_table_csv,
    truncated_shift_operators, FrameImage, HomogBundleParams, ModuleParams,
};
use jetq_core::calc::EvalPoint;
use jetq_core::dsl::{parse_params, serialize, AffineMap, KernelSpec, ParameterBinding};
use jetq_core::equivalence::{order_k_equivalent, BlockResiduals, Verdict};
use jetq_core::grid::{seed_from_env, SampleGrid};
use jetq_core::jet::{curvature_matrix, curvature_split, jet_kernel, second_fundamental_form};
use jetq_core::linalg::{max_abs, max_abs_diff, CMatrix};
use jetq_core::{Complex64, ENGINE_VERSION};

use crate::report::{self, complex, complex_vec, matrix, real, real_matrix2, SCHEMA_VERSION};
use crate::{
    BidiscAction, Command, EquivArgs, Format, GridArgs, HomogArgs, InvariantsArgs, KernelAction,
    KernelParseArgs, OutputArgs, TableArgs, VerifyArgs,
};

/// Tangential points used for the restricted-kernel triangle, all with `|z| <= 0.5`.
pub const TRIANGLE_POINTS: [(f64, f64); 9] = [
    (0.0, 0.0),
    (0.2, 0.0),
    (0.35, 0.0),
    (0.5, 0.0),
    (0.0, 0.3),
    (-0.4, 0.0),
    (0.25, 0.25),
    (-0.208_073_418_273_571_2, 0.454_648_713_412_840_9),
    (-0.1, -0.45),
];
const SERIES_DEGREE: usize = 300;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] jetq_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(command: Command) -> CliResult<u8> {
    let start = Instant::now();
    match command {
        Command::Kernel {
            action: KernelAction::Parse(a),
        } => kernel_parse(a, start),
        Command::Invariants(a) => invariants(a, start),
        Command::Equiv(a) => equiv(a, start),
        Command::Bidisc {
            action: BidiscAction::Table(a),
        } => table(a, start),
        Command::Bidisc {
            action: BidiscAction::Verify(a),
        } => verify(a, start),
        Command::Homog(a) => homog(a, start),
    }
}

fn read_kernel(path: &Path, overrides: &ParameterBinding) -> CliResult<KernelSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut spec = KernelSpec::from_file_contents(&text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    spec.params
        .extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(spec)
}

fn overrides(params: &Option<String>) -> CliResult<ParameterBinding> {
    Ok(params
        .as_deref()
        .map(parse_params)
        .transpose()?
        .unwrap_or_default())
}

fn json_only(out: &OutputArgs) -> CliResult<()> {
    match out.format {
        Some(Format::Csv) => Err(usage("csv output is only available for `bidisc table`")),
        _ => Ok(()),
    }
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("tolerance must be positive, got {tol}")))
    }
}

fn check_order(k: usize) -> CliResult<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(usage("order must be at least 1"))
    }
}

fn grid(args: &GridArgs) -> CliResult<SampleGrid> {
    if args.samples == 0 {
        return Err(usage("at least one sample is required"));
    }
    if !(args.radius >= 0.0 && args.radius < 1.0) {
        return Err(usage(format!(
            "grid radius must lie in [0, 1), got {}",
            args.radius
        )));
    }
    Ok(SampleGrid {
        count: args.samples,
        radius: args.radius,
        seed: seed_from_env(),
    })
}

fn params_json(p: &ParameterBinding) -> Value {
    Value::Object(p.iter().map(|(k, v)| (k.clone(), real(*v))).collect())
}

fn residuals_json(r: &BlockResiduals) -> Value {
    json!({"tan": r.tan, "row": r.row, "col": r.col, "scalar": r.scalar, "max": r.max()})
}

fn emit(
    out: &OutputArgs,
    command: &str,
    config: Value,
    results: Value,
    extra: Map<String, Value>,
    start: Instant,
) -> CliResult<()> {
    let mut root = Map::new();
    root.insert("schema".into(), json!(SCHEMA_VERSION));
    root.insert("command".into(), json!(command));
    root.insert("config".into(), config);
    root.insert("engine_version".into(), json!(ENGINE_VERSION));
    root.insert("results".into(), results);
    root.extend(extra);
    if !out.no_timing {
        root.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    }
    write_text(out, &report::to_string(&Value::Object(root)))
}

fn write_text(out: &OutputArgs, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn seed_field(g: &SampleGrid) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("seed".into(), json!(g.seed));
    m
}

fn kernel_parse(a: KernelParseArgs, start: Instant) -> CliResult<u8> {
    json_only(&a.output)?;
    let spec = read_kernel(&a.kernel, &overrides(&a.params)?)?;
    let results = json!({
        "dim": spec.dim,
        "kernel": serialize(&spec.kernel),
        "params": params_json(&spec.params),
        "free_parameters": spec.kernel.params(),
    });
    let config = json!({"kernel": a.kernel.display().to_string(), "params": a.params});
    emit(
        &a.output,
        "kernel parse",
        config,
        results,
        Map::new(),
        start,
    )?;
    Ok(0)
}

fn point_json(z: &[Complex64]) -> Value {
    complex_vec(z)
}

fn invariants(a: InvariantsArgs, start: Instant) -> CliResult<u8> {
    json_only(&a.output)?;
    check_order(a.order)?;
    let spec = read_kernel(&a.kernel, &overrides(&a.params)?)?;
    let g = grid(&a.grid)?;
    let mut items = Vec::new();
    for zprime in g.points(spec.dim - 1) {
        let z: Vec<Complex64> = std::iter::once(Complex64::new(0.0, 0.0))
            .chain(zprime)
            .collect();
        let curv = curvature_matrix(&spec.kernel, &z, &spec.params)?;
        let split = curvature_split(&curv);
        let sff = second_fundamental_form(&spec.kernel, &z, &spec.params)?;
        let jet = jet_kernel(
            &spec.kernel,
            a.order,
            &EvalPoint::diagonal(&z),
            &spec.params,
        )?;
        items.push(json!({
            "point": point_json(&z),
            "curvature": matrix(&curv),
            "trans": split.trans,
            "tan": matrix(&split.tan),
            "angle": complex_vec(&split.angle),
            "second_fundamental_form": complex_vec(&sff),
            "jet_metric": matrix(&jet.matrix),
        }));
    }
    let config = json!({
        "kernel": a.kernel.display().to_string(),
        "params": params_json(&spec.params),
        "order": a.order,
        "samples": g.count,
        "radius": g.radius,
    });
    emit(
        &a.output,
        "invariants",
        config,
        Value::Array(items),
        seed_field(&g),
        start,
    )?;
    Ok(0)
}

fn equiv(a: EquivArgs, start: Instant) -> CliResult<u8> {
    json_only(&a.output)?;
    check_order(a.order)?;
    check_tol(a.tol)?;
    if a.kernel.len() != 2 {
        return Err(usage(format!(
            "equiv takes exactly two --kernel files, got {}",
            a.kernel.len()
        )));
    }
    let ov = overrides(&a.params)?;
    let ka = read_kernel(&a.kernel[0], &ov)?;
    let kb = read_kernel(&a.kernel[1], &ov)?;
    if ka.dim != kb.dim {
        return Err(jetq_core::Error::DimensionMismatch {
            expected: ka.dim,
            found: kb.dim,
        }
        .into());
    }
    // each file's parameters stay local to its kernel
    let (a_kernel, b_kernel) = (ka.kernel.bind(&ka.params), kb.kernel.bind(&kb.params));
    let params = ParameterBinding::new();
    let g = grid(&a.grid)?;
    let samples = g.points(ka.dim - 1);
    let rep = order_k_equivalent(&a_kernel, &b_kernel, a.order, &samples, a.tol, &params)?;
    let equivalent = rep.verdict == Verdict::Equivalent;
    let per_sample: Vec<Value> = rep
        .samples
        .iter()
        .zip(&rep.per_sample)
        .map(|(zp, r)| json!({"tangential_point": point_json(zp), "residuals": residuals_json(r)}))
        .collect();
    let results = json!({
        "verdict": if equivalent { "equivalent" } else { "not_equivalent" },
        "residuals": residuals_json(&rep.residuals),
        "per_sample": per_sample,
    });
    let config = json!({
        "kernels": a.kernel.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "params": [params_json(&ka.params), params_json(&kb.params)],
        "order": a.order,
        "tol": a.tol,
        "samples": g.count,
        "radius": g.radius,
    });
    emit(&a.output, "equiv", config, results, seed_field(&g), start)?;
    Ok(if equivalent { 0 } else { 1 })
}

fn table(a: TableArgs, start: Instant) -> CliResult<u8> {
    let params = ModuleParams::new(a.lambda, a.mu)?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_text(&a.output, &shift_table_csv(&params, a.p_max))?,
        Format::Json => {
            let rows: Vec<Value> = (0..=a.p_max)
                .map(|p| {
                    let b = shift_blocks(&params, p);
                    json!({
                        "p": p,
                        "alpha_p": b.alpha(),
                        "beta_p1": b.beta1(),
                        "eta_p": b.eta(),
                        "beta_p2": b.beta2(),
                        "m1": real_matrix2(&b.m1),
                        "m2": real_matrix2(&b.m2),
                    })
                })
                .collect();
            let config = json!({"lambda": a.lambda, "mu": a.mu, "p_max": a.p_max});
            emit(
                &a.output,
                "bidisc table",
                config,
                Value::Array(rows),
                Map::new(),
                start,
            )?;
        }
    }
    Ok(0)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `v1 v1* + v2 v2*` for the degree-`p` images, insensitive to the sign of each basis vector.
fn image_projector(img: &FrameImage) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for v in [img.e1, img.e2] {
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += v[i] * v[j];
            }
        }
    }
    out
}

fn triangle_point(&(re, im): &(f64, f64)) -> Complex64 {
    Complex64::new(re, im)
}

/// Band offsets (in degrees) where the truncated `Q2` has a nonzero entry.
fn q2_bands(params: &ModuleParams, p_max: usize) -> Vec<i64> {
    let (m1, m2) = truncated_shift_operators(params, p_max);
    let q2 = (m1 + m2).scale(0.5);
    let degree = |i: usize| if i == 0 { 0 } else { (i - 1) / 2 + 1 };
    let mut bands = std::collections::BTreeSet::new();
    for ((i, j), v) in q2
        .iter()
        .enumerate()
        .map(|(n, v)| ((n % q2.nrows(), n / q2.nrows()), v))
    {
        if v.norm() > 1e-14 {
            bands.insert(degree(i) as i64 - degree(j) as i64);
        }
    }
    bands.into_iter().collect()
}

fn verify(a: VerifyArgs, start: Instant) -> CliResult<u8> {
    json_only(&a.output)?;
    check_tol(a.tol)?;
    let params = ModuleParams::new(a.lambda, a.mu)?;
    let oracle = brute_force_quotient(&params, a.p_max)?;

    let gram_identity = (0..=a.p_max)
        .map(|p| {
            relative_gap(
                gram_data(&params, p).determinant(),
                gram_determinant_closed_form(&params, p),
            )
        })
        .fold(0.0, f64::max);
    let gram_oracle = oracle
        .basis
        .iter()
        .take(a.p_max + 1)
        .map(|b| {
            let c = gram_data(&params, b.p);
            let o = b.gram;
            [
                relative_gap(o.norm_g1_sq, c.norm_g1_sq),
                relative_gap(o.inner_g1_g2, c.inner_g1_g2),
                relative_gap(o.norm_g2_sq, c.norm_g2_sq),
                relative_gap(o.norm_f2_sq, c.norm_f2_sq),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let blocks = oracle
        .blocks
        .iter()
        .map(|b| b.distance(&shift_blocks(&params, b.p)))
        .fold(0.0, f64::max);
    let frame_images = (0..=a.p_max)
        .map(|p| {
            let (o, c) = (
                image_projector(&oracle.frame_image(p)),
                image_projector(&jet_frame_image(&params, p)),
            );
            let mut d: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    d = d.max(relative_gap(o[i][j], c[i][j]));
                }
            }
            d
        })
        .fold(0.0, f64::max);

    let kernel = AffineMap::diagonal_normal_first().apply(&params.kernel());
    let none = ParameterBinding::new();
    let mut kq_jet: f64 = 0.0;
    let mut kq_series: f64 = 0.0;
    for z in TRIANGLE_POINTS.iter().map(triangle_point) {
        let closed = quotient_kernel_restricted(&params, z)?;
        let at = EvalPoint::diagonal(&[Complex64::new(0.0, 0.0), z]);
        let jet = jet_kernel(&kernel, 2, &at, &none)?.matrix;
        kq_jet = kq_jet.max(max_abs_diff(&closed, &jet));
        kq_series = kq_series.max(max_abs_diff(
            &closed,
            &frame_image_series(&params, z, SERIES_DEGREE)?,
        ));
    }

    let (m1, m2) = truncated_shift_operators(&params, a.p_max);
    let q1: CMatrix = (&m1 - &m2).scale(0.5);
    let q1_nilpotent = max_abs(&(&q1 * &q1));
    let contraction = contraction_report(&params, a.p_max);

    let gated = [
        ("gram_identity", gram_identity),
        ("gram_oracle", gram_oracle),
        ("shift_blocks", blocks),
        ("frame_images", frame_images),
        ("kq_closed_vs_jet", kq_jet),
        ("kq_closed_vs_series", kq_series),
        ("q1_squared", q1_nilpotent),
    ];
    let pass = gated.iter().all(|(_, v)| *v <= a.tol);
    let residuals: Map<String, Value> = gated
        .iter()
        .map(|(k, v)| (k.to_string(), real(*v)))
        .collect();
    let results = json!({
        "pass": pass,
        "residuals": residuals,
        "contraction": {
            "norm_m1": contraction.norm_m1,
            "norm_m2": contraction.norm_m2,
        },
        "q2_degree_bands": q2_bands(&params, a.p_max),
        "triangle_points": TRIANGLE_POINTS.iter().map(|p| complex(triangle_point(p))).collect::<Vec<_>>(),
    });
    let config = json!({"lambda": a.lambda, "mu": a.mu, "p_max": a.p_max, "tol": a.tol});
    emit(
        &a.output,
        "bidisc verify",
        config,
        results,
        Map::new(),
        start,
    )?;
    if !pass {
        let failed: Vec<&str> = gated
            .iter()
            .filter(|(_, v)| !(*v <= a.tol))
            .map(|(k, _)| *k)
            .collect();
        eprintln!("verification failed: {}", failed.join(", "));
    }
    Ok(if pass { 0 } else { 2 })
}

fn homog(a: HomogArgs, start: Instant) -> CliResult<u8> {
    json_only(&a.output)?;
    check_tol(a.tol)?;
    let params = HomogBundleParams::new(a.alpha, a.delta, a.beta)?;
    let g = grid(&a.grid)?;
    let kernel = AffineMap::u_coordinates().apply(&homog_bundle_metric(&params));
    let (ca, cb, cc) = params.abc();
    let none = ParameterBinding::new();
    let mut items = Vec::new();
    let mut worst: f64 = 0.0;
    for pt in g.points(1) {
        let u1 = pt[0];
        let symbolic = curvature_matrix(&kernel, &[u1, Complex64::new(0.0, 0.0)], &none)?;
        let closed = homog_curvature_restriction(&params, u1)?;
        let curvature_residual = max_abs_diff(&symbolic, &closed);
        let (ra, rb, rc) = recover_homog_abc(ca, cb, cc, u1)?;
        let recovery_residual = (ra - ca).abs().max((rb - cb).abs()).max((rc - cc).abs());
        worst = worst.max(curvature_residual).max(recovery_residual);
        items.push(json!({
            "u1": complex(u1),
            "curvature": matrix(&symbolic),
            "curvature_residual": curvature_residual,
            "recovered_abc": [ra, rb, rc],
            "recovery_residual": recovery_residual,
        }));
    }
    let pass = worst <= a.tol;
    let results =
        json!({"abc": [ca, cb, cc], "pass": pass, "max_residual": worst, "points": items});
    let config = json!({
        "alpha": a.alpha,
        "delta": a.delta,
        "beta": a.beta,
        "tol": a.tol,
        "samples": g.count,
        "radius": g.radius,
    });
    emit(&a.output, "homog", config, results, seed_field(&g), start)?;
    if !pass {
        eprintln!(
            "homogeneous curvature residual {worst:e} exceeds tolerance {:e}",
            a.tol
        );
    }
    Ok(if pass { 0 } else { 2 })
}
