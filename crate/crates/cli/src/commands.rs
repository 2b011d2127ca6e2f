use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use solvdyn::certify::{certify_linear_t3, certify_model_sol, cone_certify, cs_torus_obstruction, htop};
use solvdyn::linalg::{
    commutant_generator, commutes, decompose, det_i_minus, eigen_frame, is_hyperbolic, UnimodularMatrix2,
    UnimodularMatrix3,
};
use solvdyn::numdyn::{
    expansivity_scan, fuller_pc, gps_check, graph_transform, height_progress, lyapunov_exponents, section_map,
    semiconjugacy_to_linear, GpsConfig, GridSpec, NumericConfig, ReturnMap, SectionKind,
};
use solvdyn::pi1::{
    build_model, foliation_action, normalize_iterate, power_relation, validate_automorphism, verify_conjugation,
    AutomorphismData, GroupElement, RationalPoint,
};
use solvdyn::presets;
use solvdyn::quotients::{
    classify_nil_quotient, classify_t3_quotient, commutator, heis_example_automorphism, heis_example_map,
    in_lattice, induced_h1_block, is_homomorphism_on, lefschetz, linear_part, tau_k, AffineTorusMap,
    HeisenbergElement,
};
use solvdyn::sol::{write_points_csv, CoverPoint, SolSpace};
use solvdyn::{Error, Result};

use crate::Command;

pub struct Output {
    pub config: Value,
    pub result: Value,
    pub csv: Option<String>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn keys_of<T: Default + Serialize>() -> Vec<String> {
    match to_value(&T::default()) {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn typed<T: DeserializeOwned>(obj: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(obj)).map_err(|e| Error::Parse(e.to_string()))
}

/// Splits a config object into the numeric part and the command extras.
fn numeric<T: DeserializeOwned + Serialize + Default>(obj: Map<String, Value>) -> Result<(NumericConfig, T, Value)> {
    let nkeys = keys_of::<NumericConfig>();
    let (mut a, mut b) = (Map::new(), Map::new());
    for (k, v) in obj {
        if nkeys.contains(&k) {
            a.insert(k, v);
        } else {
            b.insert(k, v);
        }
    }
    let n: NumericConfig = typed(a)?;
    n.validate()?;
    let x: T = typed(b)?;
    let mut echo = match to_value(&n) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    if let Value::Object(m) = to_value(&x) {
        echo.extend(m);
    }
    Ok((n, x, Value::Object(echo)))
}

/// Integers that fit in i64 print as numbers, larger ones as strings.
fn int_value(x: impl std::fmt::Display) -> Value {
    let s = x.to_string();
    s.parse::<i64>().map(Value::from).unwrap_or(Value::String(s))
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MatrixCfg {
    #[serde(rename = "A")]
    a: UnimodularMatrix2,
}

impl Default for MatrixCfg {
    fn default() -> Self {
        MatrixCfg { a: presets::cat() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CommutantCfg {
    #[serde(rename = "A")]
    a: UnimodularMatrix2,
    #[serde(rename = "B")]
    b: Option<UnimodularMatrix2>,
}

impl Default for CommutantCfg {
    fn default() -> Self {
        CommutantCfg { a: presets::cat(), b: None }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AutCfg {
    #[serde(rename = "A")]
    a: UnimodularMatrix2,
    #[serde(rename = "B")]
    b: UnimodularMatrix2,
    v: [i64; 2],
    e: i8,
}

impl Default for AutCfg {
    fn default() -> Self {
        AutCfg {
            a: presets::cat(),
            b: UnimodularMatrix2::identity(),
            v: [0, 0],
            e: 1,
        }
    }
}

impl AutCfg {
    fn data(&self) -> AutomorphismData {
        AutomorphismData::new(self.b.clone(), self.v, self.e)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CertSolCfg {
    #[serde(rename = "A")]
    a: UnimodularMatrix2,
    #[serde(rename = "B")]
    b: UnimodularMatrix2,
    v: [i64; 2],
    e: i8,
    k: i64,
}

impl Default for CertSolCfg {
    fn default() -> Self {
        let d = AutCfg::default();
        CertSolCfg {
            a: d.a,
            b: d.b,
            v: d.v,
            e: d.e,
            k: 1,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LinearCfg {
    #[serde(rename = "M")]
    m: UnimodularMatrix3,
}

impl Default for LinearCfg {
    fn default() -> Self {
        LinearCfg {
            m: presets::paper_matrix(1),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LefschetzCfg {
    #[serde(rename = "L")]
    l: UnimodularMatrix3,
}

impl Default for LefschetzCfg {
    fn default() -> Self {
        LefschetzCfg {
            l: presets::paper_matrix(1),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ObstructionCfg {
    #[serde(rename = "A")]
    a: UnimodularMatrix2,
    gamma2_log: f64,
}

impl Default for ObstructionCfg {
    fn default() -> Self {
        ObstructionCfg {
            a: presets::cat(),
            gamma2_log: 0.5,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QuotientCfg {
    generators: Vec<AffineTorusMap>,
    f_star: UnimodularMatrix3,
}

impl Default for QuotientCfg {
    fn default() -> Self {
        QuotientCfg {
            generators: vec![presets::tau(1)],
            f_star: presets::paper_matrix(1),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HeisCfg {
    /// Lattice level Γ_k.
    k: u64,
    /// Flips h ↦ ι(h)c; τ_k when absent.
    flips: Option<Vec<HeisenbergElement>>,
}

impl Default for HeisCfg {
    fn default() -> Self {
        HeisCfg { k: 2, flips: None }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConeCfg {
    opening: f64,
    #[serde(rename = "N")]
    n: u32,
    sample_grid: GridSpec,
}

impl Default for ConeCfg {
    fn default() -> Self {
        ConeCfg {
            opening: 0.5,
            n: 1,
            sample_grid: GridSpec { nv: 8, nt: 4 },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LyapunovCfg {
    steps: usize,
    point: [f64; 3],
}

impl Default for LyapunovCfg {
    fn default() -> Self {
        LyapunovCfg {
            steps: 10_000,
            point: [0.1, 0.2, 0.3],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GraphCfg {
    kind: SectionKind,
}

impl Default for GraphCfg {
    fn default() -> Self {
        GraphCfg { kind: SectionKind::Cs }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FullerCfg {
    point: [f64; 3],
    /// Height range of the sampled center curve.
    length: f64,
}

impl Default for FullerCfg {
    fn default() -> Self {
        FullerCfg {
            point: [0.3, 0.4, 0.0],
            length: 8.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SectionCfg {
    n: usize,
    expansivity_eps: Option<f64>,
    expansivity_steps: usize,
}

impl Default for SectionCfg {
    fn default() -> Self {
        SectionCfg {
            n: 8,
            expansivity_eps: None,
            expansivity_steps: 60,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SemiCfg {
    n: usize,
    n_terms: usize,
}

impl Default for SemiCfg {
    fn default() -> Self {
        SemiCfg { n: 8, n_terms: 20 }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GpsCfg {
    samples: usize,
    half_width: f64,
    points: usize,
    pushes: usize,
}

impl Default for GpsCfg {
    fn default() -> Self {
        let g = GpsConfig::default();
        GpsCfg {
            samples: g.samples,
            half_width: g.half_width,
            points: g.points,
            pushes: g.pushes,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HeightCfg {
    samples: usize,
    n_max: usize,
}

impl Default for HeightCfg {
    fn default() -> Self {
        HeightCfg { samples: 64, n_max: 8 }
    }
}

fn union<A: Default + Serialize, B: Default + Serialize>() -> Vec<String> {
    let mut k = keys_of::<A>();
    k.extend(keys_of::<B>());
    k
}

/// Config keys accepted by a command.
pub fn keys(cmd: Command) -> Vec<String> {
    match cmd {
        Command::Eigen => keys_of::<MatrixCfg>(),
        Command::Commutant => keys_of::<CommutantCfg>(),
        Command::AutValidate | Command::ModelBuild | Command::ModelNormalize => keys_of::<AutCfg>(),
        Command::CertLinear => keys_of::<LinearCfg>(),
        Command::CertSol => keys_of::<CertSolCfg>(),
        Command::CertCone => union::<NumericConfig, ConeCfg>(),
        Command::Obstruction => keys_of::<ObstructionCfg>(),
        Command::Lefschetz => keys_of::<LefschetzCfg>(),
        Command::QuotientClassify => keys_of::<QuotientCfg>(),
        Command::Heis => keys_of::<HeisCfg>(),
        Command::FlowLyapunov => union::<NumericConfig, LyapunovCfg>(),
        Command::GraphTransform => union::<NumericConfig, GraphCfg>(),
        Command::Fuller => union::<NumericConfig, FullerCfg>(),
        Command::SectionMap => union::<NumericConfig, SectionCfg>(),
        Command::Semiconjugacy => union::<NumericConfig, SemiCfg>(),
        Command::GpsCheck => union::<NumericConfig, GpsCfg>(),
        Command::HeightProgress => union::<NumericConfig, HeightCfg>(),
    }
}

fn simple<T: DeserializeOwned + Serialize>(obj: Map<String, Value>) -> Result<(T, Value)> {
    let c: T = typed(obj)?;
    let echo = to_value(&c);
    Ok((c, echo))
}

fn out(config: Value, result: Value) -> Output {
    Output {
        config,
        result,
        csv: None,
    }
}

pub fn run(cmd: Command, obj: Map<String, Value>) -> Result<Output> {
    match cmd {
        Command::Eigen => {
            let (c, echo) = simple::<MatrixCfg>(obj)?;
            let result = if is_hyperbolic(&c.a) {
                let f = eigen_frame(&c.a)?;
                json!({"hyperbolic": true, "lambda": f.lambda, "log_lambda": f.log_lambda(), "frame": f})
            } else {
                json!({"hyperbolic": false})
            };
            Ok(out(echo, result))
        }
        Command::Commutant => {
            let (c, echo) = simple::<CommutantCfg>(obj)?;
            let a0 = commutant_generator(&c.a)?;
            let mut result = json!({"generator": a0, "A": decompose(&c.a, &a0)});
            if let Some(b) = &c.b {
                result["B"] = json!({"commutes": commutes(&c.a, b), "decomposition": decompose(b, &a0)});
            }
            Ok(out(echo, result))
        }
        Command::AutValidate => {
            let (c, echo) = simple::<AutCfg>(obj)?;
            let valid = validate_automorphism(&c.a, &c.data());
            let rel = power_relation(&c.a, &c.b, 12)?;
            Ok(out(echo, json!({"valid": valid, "power_relation": rel})))
        }
        Command::ModelBuild => {
            let (c, echo) = simple::<AutCfg>(obj)?;
            let data = c.data();
            let model = build_model(&c.a, &data)?;
            let gens = [
                GroupElement::new([1, 0], 0),
                GroupElement::new([0, 1], 0),
                GroupElement::new([0, 0], 1),
            ];
            let points = [
                RationalPoint::origin(),
                RationalPoint::from_ints([(1, 2), (-1, 3)], (1, 5)),
                RationalPoint::from_ints([(7, 3), (2, 7)], (-3, 2)),
            ];
            let verified = verify_conjugation(&c.a, &data, &model, &gens, &points)?;
            Ok(out(echo, json!({"model": model, "verified_on_generators": verified})))
        }
        Command::ModelNormalize => {
            let (c, echo) = simple::<AutCfg>(obj)?;
            let model = build_model(&c.a, &c.data())?;
            let nf = normalize_iterate(&c.a, &model)?;
            let action = foliation_action(&SolSpace::new(c.a.clone())?, &model)?;
            Ok(out(echo, json!({"normal_form": nf, "foliation_action": action})))
        }
        Command::CertLinear => {
            let (c, echo) = simple::<LinearCfg>(obj)?;
            Ok(out(echo, to_value(&certify_linear_t3(&c.m))))
        }
        Command::CertSol => {
            let (c, echo) = simple::<CertSolCfg>(obj)?;
            let data = AutomorphismData::new(c.b.clone(), c.v, c.e);
            let model = build_model(&c.a, &data)?;
            Ok(out(echo, to_value(&certify_model_sol(&c.a, &model, c.k)?)))
        }
        Command::CertCone => {
            let (n, x, echo) = numeric::<ConeCfg>(obj)?;
            let f = n.map()?;
            let cocycle = f.sampled_cocycle(x.sample_grid.nv, x.sample_grid.nt)?;
            Ok(out(echo, to_value(&cone_certify(&cocycle, x.opening, x.n)?)))
        }
        Command::Obstruction => {
            let (c, echo) = simple::<ObstructionCfg>(obj)?;
            let v = cs_torus_obstruction(&c.a, c.gamma2_log)?;
            Ok(out(echo, json!({"htop": htop(&c.a)?, "verdict": v})))
        }
        Command::Lefschetz => {
            let (c, echo) = simple::<LefschetzCfg>(obj)?;
            let l = int_value(lefschetz(&c.l));
            let d = int_value(det_i_minus(&c.l));
            Ok(out(echo, json!({"lefschetz": l, "det_i_minus": d})))
        }
        Command::QuotientClassify => {
            let (c, echo) = simple::<QuotientCfg>(obj)?;
            Ok(out(echo, to_value(&classify_t3_quotient(&c.generators, &c.f_star)?)))
        }
        Command::Heis => {
            let (c, echo) = simple::<HeisCfg>(obj)?;
            Ok(out(echo, heis(&c)?))
        }
        Command::FlowLyapunov => {
            let (n, x, echo) = numeric::<LyapunovCfg>(obj)?;
            let f = n.map()?;
            let p = CoverPoint::new([x.point[0], x.point[1]], x.point[2]);
            let rep = lyapunov_exponents(&f, p, x.steps)?;
            Ok(out(echo, json!({"report": rep, "admissible": f.is_admissible(solvdyn::numdyn::DEFAULT_ADMISSIBLE_EPS)})))
        }
        Command::GraphTransform => {
            let (n, x, echo) = numeric::<GraphCfg>(obj)?;
            let f = n.map()?;
            let g = graph_transform(&f, x.kind, n.grid, n.tol, n.maxiter)?;
            let pts = g.sample_leaf(0.0, [-1.0, 1.0], [0.0, 1.0], 17);
            let mut buf = Vec::new();
            write_points_csv(&mut buf, &pts)?;
            Ok(Output {
                config: echo,
                result: json!({"summary": g.summary, "admissible": f.is_admissible(solvdyn::numdyn::DEFAULT_ADMISSIBLE_EPS)}),
                csv: Some(String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?),
            })
        }
        Command::Fuller => {
            let (n, x, echo) = numeric::<FullerCfg>(obj)?;
            let f = n.map()?;
            let fol = n.foliation(&f)?;
            let window = n.window(&f)?;
            let space = f.space();
            let start = space.to_leaf(CoverPoint::new([x.point[0], x.point[1]], x.point[2]));
            let labels = fol.labels_of(start)?;
            let h = solvdyn::numdyn::HEIGHT_STEP;
            let count = (x.length / h).ceil() as usize + 1;
            let curve: Vec<CoverPoint> = fol
                .center_curve(labels, x.point[2], h, count)?
                .into_iter()
                .map(|c| space.from_leaf(c))
                .collect();
            let prof = fuller_pc(space, &curve, window)?;
            let csv = csv_rows(
                &["arclength", "p_c"],
                prof.arclength.iter().zip(&prof.values).map(|(a, v)| vec![*a, *v]),
            )?;
            Ok(Output {
                config: echo,
                result: json!({"window": window, "labels": labels, "min_slope": prof.min_slope(), "profile": prof}),
                csv: Some(csv),
            })
        }
        Command::SectionMap => {
            let (n, x, echo) = numeric::<SectionCfg>(obj)?;
            let f = n.map()?;
            let fol = n.foliation(&f)?;
            let rm = ReturnMap::new(&f, &fol, n.window(&f)?)?;
            let map = section_map(&rm, x.n)?;
            let exp = match x.expansivity_eps {
                Some(e) => Some(expansivity_scan(&rm, &map, e, x.expansivity_steps)?),
                None => None,
            };
            let csv = csv_rows(
                &["x", "y", "t", "psi_x", "psi_y", "psi_t"],
                map.points.iter().zip(&map.images).map(|(p, q)| vec![p.v[0], p.v[1], p.t, q.v[0], q.v[1], q.t]),
            )?;
            Ok(Output {
                config: echo,
                result: json!({"section_map": map, "expansivity": exp}),
                csv: Some(csv),
            })
        }
        Command::Semiconjugacy => {
            let (n, x, echo) = numeric::<SemiCfg>(obj)?;
            let f = n.map()?;
            let fol = n.foliation(&f)?;
            let rm = ReturnMap::new(&f, &fol, n.window(&f)?)?;
            let map = section_map(&rm, x.n)?;
            let rep = semiconjugacy_to_linear(&rm, &map, x.n_terms)?;
            let csv = csv_rows(
                &["x", "y", "t", "h_x", "h_y"],
                rep.points.iter().zip(&rep.h).map(|(p, h)| vec![p.v[0], p.v[1], p.t, h[0], h[1]]),
            )?;
            Ok(Output {
                config: echo,
                result: to_value(&rep),
                csv: Some(csv),
            })
        }
        Command::GpsCheck => {
            let (n, x, echo) = numeric::<GpsCfg>(obj)?;
            let f = n.map()?;
            let fol = n.foliation(&f)?;
            let cfg = GpsConfig {
                samples: x.samples,
                seed: n.seed,
                half_width: x.half_width,
                points: x.points,
                pushes: x.pushes,
            };
            Ok(out(echo, to_value(&gps_check(&f, &fol, &cfg)?)))
        }
        Command::HeightProgress => {
            let (n, x, echo) = numeric::<HeightCfg>(obj)?;
            let f = n.map()?;
            let rep = height_progress(&f, &n.samples(x.samples), x.n_max)?;
            let window = rep.n0.map(|n0| solvdyn::numdyn::default_window(n.k, n0));
            let csv = csv_rows(
                &["n", "min_gain"],
                rep.min_gain.iter().enumerate().map(|(i, g)| vec![(i + 1) as f64, *g]),
            )?;
            Ok(Output {
                config: echo,
                result: json!({"report": rep, "default_window": window}),
                csv: Some(csv),
            })
        }
    }
}

fn heis(c: &HeisCfg) -> Result<Value> {
    let x = HeisenbergElement::x_gen();
    let y = HeisenbergElement::y_gen();
    let one = HeisenbergElement::central(num_rational::BigRational::from_integer(1.into()));
    let comm = commutator(&x, &y);
    let tau = if c.k % 2 == 0 && c.k > 0 {
        let e = HeisenbergElement::identity();
        let t2 = tau_k(&tau_k(&e, c.k)?, c.k)?;
        json!({"tau_squared_at_identity": t2, "in_lattice": in_lattice(&t2, c.k)})
    } else {
        Value::Null
    };
    let samples: Vec<HeisenbergElement> = [(1, 2, 3), (-2, 1, 5), (3, -1, -2), (1, 1, 1)]
        .iter()
        .map(|&(a, b, z)| HeisenbergElement::from_ints((a, 3), (b, 2), (z, 5)))
        .collect();
    let printed_block = match induced_h1_block(&linear_part(heis_example_map)) {
        Ok((a, d)) => json!({"A": a, "center": d}),
        Err(e) => json!({"error": e.name()}),
    };
    let (a, d) = induced_h1_block(&linear_part(heis_example_automorphism))?;
    let flips = match &c.flips {
        Some(f) => f.clone(),
        None => vec![HeisenbergElement::central(num_rational::BigRational::new(1.into(), (2 * c.k as i64).max(1).into()))],
    };
    Ok(json!({
        "commutator_xy": comm,
        "commutator_is_central_generator": comm == one,
        "tau_k": tau,
        "example": {
            "printed": {
                "image_x": heis_example_map(&x),
                "image_y": heis_example_map(&y),
                "is_homomorphism": is_homomorphism_on(heis_example_map, &samples),
                "h1_block": printed_block,
            },
            "corrected": {
                "image_x": heis_example_automorphism(&x),
                "image_y": heis_example_automorphism(&y),
                "is_homomorphism": is_homomorphism_on(heis_example_automorphism, &samples),
                "h1_block": {"A": a, "center": d},
            },
        },
        "quotient": classify_nil_quotient(c.k, &flips),
    }))
}
