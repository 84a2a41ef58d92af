use std::time::Instant;

use anyhow::{anyhow, Context};
use cauchy_core::cobordism::{signature_obstruction, BoundarySymbolPair};
use cauchy_core::interval::{
    calderon_projections, calderon_vs_tangential, cauchy_data_space, double_kernel_matrix,
    fd_eigenvalues, find_eigenvalues, find_eigenvalues_with, fit_linear_modulus, graph_gap, green_form,
    rotate_domain, sf_mas_experiment, weak_ucp_check, CalderonMethod, Coefficient, DoubleCoupling,
    IntervalSystem, LocatorOptions, OperatorPath, RealizedOperator, SfMasOptions,
};
use cauchy_core::linalg::{expm, identity, op_norm, principal_angles, rank};
use cauchy_core::random::{self, ExperimentRng, SymbolShape};
use cauchy_core::sectorial::{
    convergence_series, eigenprojection_oracle, left_projection, sectorial_projection, TangentialMatrix,
};
use cauchy_core::symplectic::LagrangianFrame;
use cauchy_core::{CMat, C64};
use serde_json::json;

use crate::report::{matrix_json, Report, Series, Tolerances};
use crate::scenario::{coefficient, constant_matrix, Kind, Scenario};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
    pub oracle: bool,
}

pub struct Outcome {
    pub report: Report,
    /// Wall-clock seconds per stage, kept apart from the deterministic report.
    pub timings: Vec<(String, f64)>,
}

struct Ctx {
    report: Report,
    timings: Vec<(String, f64)>,
    current: String,
    oracle: bool,
    seed: Option<u64>,
}

impl Ctx {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Report) -> anyhow::Result<T>) -> anyhow::Result<T> {
        self.current = name.to_string();
        let start = Instant::now();
        let out = f(&mut self.report);
        self.timings.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    fn rng(&self) -> anyhow::Result<ExperimentRng> {
        self.seed
            .map(random::rng)
            .ok_or_else(|| anyhow!("randomization requested without a seed"))
    }
}

pub fn run_scenario(scenario: Scenario, opts: &RunOptions) -> Outcome {
    let seed = opts.seed.or(scenario.seed);
    let scale = opts.tol_scale.unwrap_or(1.0);
    let tolerances = match Tolerances::new(&scenario.tolerances, scale) {
        Ok(t) => t,
        Err(e) => {
            let mut report = Report::new(scenario, seed, opts.oracle, Tolerances::new(&Default::default(), scale).expect("defaults"));
            report.fail("tolerances", &e);
            return Outcome {
                report,
                timings: Vec::new(),
            };
        }
    };
    let kind = scenario.kind;
    let randomized = scenario.random.is_some();
    let mut ctx = Ctx {
        report: Report::new(scenario.clone(), seed, opts.oracle, tolerances),
        timings: Vec::new(),
        current: "build".into(),
        oracle: opts.oracle,
        seed,
    };
    let s = &scenario;
    let result = match (kind, randomized) {
        (Kind::SfMas, false) => sf_mas(&mut ctx, s),
        (Kind::SfMas, true) => sf_mas_random(&mut ctx, s),
        (Kind::Calderon, false) => calderon(&mut ctx, s),
        (Kind::Calderon, true) => calderon_random(&mut ctx, s),
        (Kind::Sectorial, _) => sectorial(&mut ctx, s),
        (Kind::Cobordism, _) => cobordism(&mut ctx, s),
        (Kind::Continuity, false) => continuity(&mut ctx, s),
        (Kind::Continuity, true) => continuity_random(&mut ctx, s),
        (Kind::Morse, _) => morse(&mut ctx, s),
    };
    if let Err(e) = result {
        let stage = ctx.current.clone();
        ctx.report.fail(&stage, &e);
    }
    Outcome {
        report: ctx.report,
        timings: ctx.timings,
    }
}

fn system(s: &Scenario) -> anyhow::Result<IntervalSystem> {
    s.system
        .as_ref()
        .ok_or_else(|| anyhow!("missing system"))?
        .build()
}

fn domain(s: &Scenario) -> anyhow::Result<LagrangianFrame> {
    s.boundary
        .as_ref()
        .ok_or_else(|| anyhow!("missing boundary"))?
        .frame()
        .context("boundary")
}

fn expect_i64(s: &Scenario, key: &str) -> anyhow::Result<Option<i64>> {
    match s.expect.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_i64()
            .map(Some)
            .ok_or_else(|| anyhow!("expect.{key} must be an integer")),
    }
}

fn expect_f64s(s: &Scenario, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
    match s.expect.get(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| anyhow!("expect.{key}: {e}")),
    }
}

fn operator_path(s: &Scenario, base: IntervalSystem) -> anyhow::Result<OperatorPath> {
    let p = s.path.as_ref().ok_or_else(|| anyhow!("missing path"))?;
    let n = base.dim();
    let terms = p
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| coefficient(t, n, &format!("path.terms[{i}]")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(OperatorPath::new(base, terms, (p.range[0], p.range[1]), p.samples)?)
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn sf_mas(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let (path, d) = ctx.stage("build", |_| Ok((operator_path(s, system(s)?)?, domain(s)?)))?;
    let r = ctx.stage("sf_mas", |rep| {
        let r = sf_mas_experiment(&path, &d, &SfMasOptions::default())?;
        rep.result("sf", r.sf);
        rep.result("mas", r.mas);
        rep.result("flow_crossings", &r.flow.crossings);
        rep.result("maslov_crossings", &r.maslov.crossings);
        rep.result("window", r.flow.window);
        rep.check_eq("sf = mas", r.sf, r.mas);
        if let Some(want) = expect_i64(s, "sf")? {
            rep.check_eq("sf matches expected", r.sf, want);
        }
        if let Some(want) = expect_i64(s, "mas")? {
            rep.check_eq("mas matches expected", r.mas, want);
        }
        Ok(r)
    })?;
    ctx.stage("series", |rep| {
        let rows = r
            .flow
            .trajectories
            .iter()
            .flat_map(|tr| tr.points.iter().map(move |&(t, v)| vec![t, tr.label as f64, v]))
            .collect();
        rep.series.insert(
            "eigen_trajectories".into(),
            Series {
                columns: vec!["t".into(), "label".into(), "eigenvalue".into()],
                x: "t".into(),
                y: "eigenvalue".into(),
                group: Some("label".into()),
                rows,
            },
        );
        let mut rows = Vec::new();
        for t in linspace(path.range.0, path.range.1, 4 * path.samples) {
            let cd = cauchy_data_space(&path.system_at(t)?, C64::new(0.0, 0.0))?;
            for (i, a) in principal_angles(cd.matrix(), d.matrix())?.into_iter().enumerate() {
                rows.push(vec![t, i as f64, a]);
            }
        }
        rep.series.insert(
            "principal_angles".into(),
            Series {
                columns: vec!["t".into(), "index".into(), "angle".into()],
                x: "t".into(),
                y: "angle".into(),
                group: Some("index".into()),
                rows,
            },
        );
        Ok(())
    })
}

fn sf_mas_random(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let suite = s.random.clone().expect("randomized");
    let mut rng = ctx.rng()?;
    ctx.stage("families", |rep| {
        let mut runs = Vec::new();
        let mut disagreements = 0;
        while runs.len() < suite.count {
            let n = 1 + runs.len() % suite.max_dim;
            let base = random::symmetric_system(&mut rng, n, SymbolShape::Constant)?;
            let space = green_form(&base)?;
            let d = random::lagrangian(&mut rng, &space)?;
            let dir = random::hermitian(&mut rng, n) * C64::new(8.0, 0.0);
            let path = OperatorPath::new(base, vec![dir.into()], (0.0, 1.0), 16)?;
            let mut degenerate = false;
            for t in [0.0, 1.0] {
                let op = RealizedOperator::new(path.system_at(t)?, d.clone())?;
                degenerate |= !find_eigenvalues(&op, (-1e-3, 1e-3))?.is_empty();
            }
            if degenerate {
                continue;
            }
            let r = sf_mas_experiment(&path, &d, &SfMasOptions::default())?;
            disagreements += (!r.agree) as i64;
            runs.push(json!({"dim": n, "sf": r.sf, "mas": r.mas}));
        }
        rep.result("families", &runs);
        rep.check_eq("families with sf != mas", disagreements, 0);
        Ok(())
    })
}

fn calderon_checks(rep: &mut Report, sys: &IntervalSystem, prefix: &str) -> anyhow::Result<CMat> {
    let coupling = DoubleCoupling::default_for(sys)?;
    let kernel = double_kernel_matrix(sys, &coupling)?;
    let jump = calderon_projections(sys, &coupling, CalderonMethod::Jump)?;
    let comp = calderon_projections(sys, &coupling, CalderonMethod::Complement)?;
    let n2 = 2 * sys.dim();
    let cp = &jump.c_plus;
    rep.check(&format!("{prefix}|C+^2 - C+|"), op_norm(&(cp * cp - cp)), "identity");
    rep.check(&format!("{prefix}|C+ + C- - I|"), op_norm(&(cp + &jump.c_minus - identity(n2))), "identity");
    rep.check(&format!("{prefix}complement vs jump"), op_norm(&(cp - &comp.c_plus)), "cross_method");
    let space = green_form(sys)?;
    let cd = cauchy_data_space(sys, C64::new(0.0, 0.0))?;
    rep.check(&format!("{prefix}Cauchy data isotropy"), space.isotropy_defect(&cd)?, "lagrangian");
    if sys.j_coefficient().is_constant() {
        rep.check(&format!("{prefix}|C+* - C+|"), op_norm(&(cp.adjoint() - cp)), "self_adjoint");
    }
    rep.result(&format!("{prefix}double_sigma_min"), kernel.sigma_min);
    Ok(jump.c_plus)
}

fn calderon(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let sys = ctx.stage("build", |_| system(s))?;
    let cp = ctx.stage("calderon", |rep| calderon_checks(rep, &sys, ""))?;
    ctx.report.result("c_plus", matrix_json(&cp));
    ctx.report.result("rank_c_plus", rank(&cp, 1e-8));
    let tangential = s.expect.get("tangential").and_then(|v| v.as_bool()).unwrap_or(false);
    ctx.stage("tangential", |rep| {
        let margins = TangentialMatrix::new(sys.b(0.0)).and(TangentialMatrix::new(sys.b(1.0)));
        if margins.is_err() && !tangential {
            rep.result("tangential", "skipped: B(0) or B(1) has imaginary spectrum");
            return Ok(());
        }
        let coupling = DoubleCoupling::default_for(&sys)?;
        let cmp = calderon_vs_tangential(&sys, &coupling, None, &[])?;
        rep.result("tangential_deviation", cmp.deviation);
        rep.result("tangential_margins", [cmp.margin0, cmp.margin1]);
        if tangential {
            rep.check("|C+ - blockdiag(P+(B(0)), P-(B(1)))|", cmp.deviation, "tangential");
        }
        Ok(())
    })?;
    if ctx.oracle {
        ctx.stage("ucp", |rep| {
            rep.result("weak_ucp", weak_ucp_check(&sys)?);
            Ok(())
        })?;
    }
    Ok(())
}

fn calderon_random(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let suite = s.random.clone().expect("randomized");
    let mut rng = ctx.rng()?;
    ctx.stage("systems", |rep| {
        for i in 0..suite.count {
            let n = 1 + i % suite.max_dim;
            let shape = [SymbolShape::Constant, SymbolShape::VariableK, SymbolShape::Variable][i % 3];
            let sys = random::symmetric_system(&mut rng, n, shape)?;
            calderon_checks(rep, &sys, &format!("system {i}: "))?;
        }
        Ok(())
    })
}

const SECTORIAL_X: [f64; 4] = [0.0, 0.25, 1.0, 4.0];

fn sectorial(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let mut rng = ctx.rng().ok();
    let matrices = ctx.stage("build", |_| match &s.random {
        None => Ok(vec![constant_matrix(s.matrix.as_ref().expect("validated"), "matrix")?]),
        Some(suite) => {
            let rng = rng.as_mut().ok_or_else(|| anyhow!("randomization requested without a seed"))?;
            let margin = suite.margin.unwrap_or(0.1);
            Ok((0..suite.count)
                .map(|i| random::matrix_with_margin(rng, 2 + i % suite.max_dim.max(1), margin))
                .collect::<Vec<_>>())
        }
    })?;
    let xs = s.samples.clone().unwrap_or_else(|| SECTORIAL_X.to_vec());
    let oracle = ctx.oracle;
    ctx.stage("projections", |rep| {
        let (mut idem, mut sum, mut semi, mut orc) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for m in &matrices {
            let b0 = TangentialMatrix::new(m.clone())?;
            let p = sectorial_projection(&b0, 0.0)?;
            let q = left_projection(&b0, 0.0)?;
            idem = idem.max(op_norm(&(&p * &p - &p)));
            sum = sum.max(op_norm(&(&p + q - identity(m.nrows()))));
            for &x in &xs {
                let qx = sectorial_projection(&b0, x)?;
                semi = semi.max(op_norm(&(&qx - expm(&(m * C64::new(-x, 0.0))) * &p)));
                if oracle {
                    orc = orc.max(op_norm(&(&qx - eigenprojection_oracle(&b0, x)?.matrix)));
                }
            }
        }
        rep.check("|P+^2 - P+|", idem, "identity");
        rep.check("|P+ + P- - I|", sum, "identity");
        rep.check("|Q+(x) - exp(-x B0) P+|", semi, "semigroup");
        if oracle {
            rep.check("|Q+(x) - eigenprojection oracle|", orc, "oracle");
        }
        if matrices.len() == 1 {
            let b0 = TangentialMatrix::new(matrices[0].clone())?;
            rep.result("p_plus", matrix_json(&sectorial_projection(&b0, 0.0)?));
            rep.result("margin", b0.margin());
        }
        rep.result("matrices", matrices.len());
        Ok(())
    })?;
    ctx.stage("convergence", |rep| {
        let b0 = TangentialMatrix::new(matrices[0].clone())?;
        let series = convergence_series(&b0, 0.0, 8, 8)?;
        rep.series.insert(
            "convergence".into(),
            Series {
                columns: vec!["nodes".into(), "difference".into()],
                x: "nodes".into(),
                y: "difference".into(),
                group: None,
                rows: series.iter().map(|&(n, d)| vec![n as f64, d]).collect(),
            },
        );
        let p = sectorial_projection(&b0, 0.0)?;
        let mut rows = Vec::new();
        for k in 1..=20 {
            let x = 0.5_f64.powi(k);
            rows.push(vec![x, op_norm(&(sectorial_projection(&b0, x)? - &p))]);
        }
        let monotone = rows.windows(2).all(|w| w[1][1] <= w[0][1]);
        rep.result("strong_convergence_monotone", monotone);
        rep.series.insert(
            "strong_convergence".into(),
            Series {
                columns: vec!["x".into(), "error".into()],
                x: "x".into(),
                y: "error".into(),
                group: None,
                rows,
            },
        );
        Ok(())
    })
}

fn cobordism(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let transformations = s.random.as_ref().and_then(|r| r.transformations).unwrap_or(20);
    let mut rng = ctx.rng().ok();
    let pairs = ctx.stage("build", |_| {
        let mut out = Vec::new();
        match &s.random {
            None => {
                if s.system.is_some() {
                    out.push(BoundarySymbolPair::from_system(&system(s)?)?);
                } else {
                    let j0 = constant_matrix(s.matrix.as_ref().expect("validated"), "matrix")?;
                    let b0 = constant_matrix(s.b0.as_ref().expect("validated"), "b0")?;
                    out.push(BoundarySymbolPair::new(j0, b0)?);
                }
            }
            Some(suite) => {
                let rng = rng.as_mut().ok_or_else(|| anyhow!("randomization requested without a seed"))?;
                for i in 0..suite.count {
                    let sys = random::symmetric_system(rng, 1 + i % suite.max_dim, SymbolShape::Variable)?;
                    out.push(BoundarySymbolPair::from_system(&sys)?);
                }
            }
        }
        Ok(out)
    })?;
    ctx.stage("obstruction", |rep| {
        let mut rows = Vec::new();
        let (mut nonzero, mut unstable) = (0, 0);
        for p in &pairs {
            let ob = signature_obstruction(p)?;
            if p.provenance == cauchy_core::cobordism::Provenance::Bounding && ob.signature != 0 {
                nonzero += 1;
            }
            if let Some(rng) = rng.as_mut() {
                for _ in 0..transformations {
                    let t = random::well_conditioned(rng, p.dim());
                    let moved = signature_obstruction(&p.transformed(&t)?)?;
                    unstable += (moved.signature != ob.signature || moved.dimension != ob.dimension) as i64;
                }
            }
            rows.push(json!({"dim": p.dim(), "provenance": p.provenance, "obstruction": ob}));
        }
        rep.result("pairs", &rows);
        rep.check_eq("bounding pairs with nonzero obstruction", nonzero, 0);
        if rng.is_some() {
            rep.result("transformations_per_pair", transformations);
            rep.check_eq("obstructions changed by transformations", unstable, 0);
        }
        if let Some(want) = expect_i64(s, "signature")? {
            let got = signature_obstruction(&pairs[0])?.signature;
            rep.check_eq("signature matches expected", got, want);
        }
        Ok(())
    })
}

const CONTINUITY_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn calderon_modulus(sys: &IntervalSystem, dir: &Coefficient, eps: &[f64]) -> anyhow::Result<Vec<(f64, f64)>> {
    let coupling = DoubleCoupling::default_for(sys)?;
    let base = calderon_projections(sys, &coupling, CalderonMethod::Jump)?.c_plus;
    let r0 = rank(&base, 1e-8);
    let mut out = Vec::new();
    for &e in eps {
        let cp = calderon_projections(&sys.perturbed(&dir.scaled(e))?, &coupling, CalderonMethod::Jump)?.c_plus;
        if rank(&cp, 1e-8) != r0 {
            return Err(anyhow!("kernel dimension changed at eps = {e}"));
        }
        out.push((e, op_norm(&(cp - &base))));
    }
    Ok(out)
}

fn gap_modulus(op: &RealizedOperator, h: &CMat, eps: &[f64]) -> anyhow::Result<Vec<(f64, f64)>> {
    let space = op.space().clone();
    let mut out = Vec::new();
    for &e in eps {
        let rotated = op.with_domain(rotate_domain(&space, op.domain(), h, e)?)?;
        out.push((e, graph_gap(op, &rotated, 64, None)?.graph));
    }
    Ok(out)
}

fn continuity_series(rows: &[(usize, Vec<(f64, f64)>)]) -> Series {
    Series {
        columns: vec!["experiment".into(), "eps".into(), "distance".into()],
        x: "eps".into(),
        y: "distance".into(),
        group: Some("experiment".into()),
        rows: rows
            .iter()
            .flat_map(|(k, s)| s.iter().map(move |&(e, d)| vec![*k as f64, e, d]))
            .collect(),
    }
}

fn continuity(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let eps = s.samples.clone().unwrap_or_else(|| CONTINUITY_EPS.to_vec());
    let sys = ctx.stage("build", |_| system(s))?;
    let n = sys.dim();
    let dir = coefficient(s.direction.as_ref().expect("validated"), n, "direction")?;
    let mut groups = Vec::new();
    let samples = ctx.stage("calderon", |rep| {
        let samples = calderon_modulus(&sys, &dir, &eps)?;
        let fit = fit_linear_modulus(&samples);
        rep.result("calderon_fit", &fit);
        rep.check("1 - slope of |C+(A + eps C) - C+(A)|", 1.0 - fit.slope, "slope_defect");
        Ok(samples)
    })?;
    groups.push((0, samples));
    if let (Some(_), Some(h)) = (&s.boundary, &s.rotation) {
        let samples = ctx.stage("graph_gap", |rep| {
            let op = RealizedOperator::new(sys.clone(), domain(s)?)?;
            let h = constant_matrix(h, "rotation")?;
            let samples = gap_modulus(&op, &h, &eps)?;
            let fit = fit_linear_modulus(&samples);
            rep.result("graph_gap_fit", &fit);
            rep.check("1 - slope of graph gap under domain rotation", 1.0 - fit.slope, "slope_defect");
            Ok(samples)
        })?;
        groups.push((1, samples));
    }
    ctx.report.series.insert("continuity".into(), continuity_series(&groups));
    Ok(())
}

fn continuity_random(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let suite = s.random.clone().expect("randomized");
    let eps = s.samples.clone().unwrap_or_else(|| CONTINUITY_EPS.to_vec());
    let mut rng = ctx.rng()?;
    ctx.stage("families", |rep| {
        let (mut worst_c, mut worst_g) = (f64::INFINITY, f64::INFINITY);
        for i in 0..suite.count {
            let n = 1 + i % suite.max_dim;
            let sys = random::symmetric_system(&mut rng, n, SymbolShape::Constant)?;
            let dir: Coefficient = random::hermitian(&mut rng, n).into();
            worst_c = worst_c.min(fit_linear_modulus(&calderon_modulus(&sys, &dir, &eps)?).slope);
            let d = random::lagrangian(&mut rng, &green_form(&sys)?)?;
            let op = RealizedOperator::new(sys, d)?;
            let h = random::hermitian(&mut rng, 2 * n);
            worst_g = worst_g.min(fit_linear_modulus(&gap_modulus(&op, &h, &eps)?).slope);
        }
        rep.result("min_calderon_slope", worst_c);
        rep.result("min_graph_gap_slope", worst_g);
        rep.check("1 - min Calderon slope", 1.0 - worst_c, "slope_defect");
        rep.check("1 - min graph gap slope", 1.0 - worst_g, "slope_defect");
        Ok(())
    })
}

fn morse(ctx: &mut Ctx, s: &Scenario) -> anyhow::Result<()> {
    let op = ctx.stage("build", |_| Ok(RealizedOperator::new(system(s)?, domain(s)?)?))?;
    let window = s.window.expect("validated");
    let window = (window[0], window[1]);
    let values = ctx.stage("eigenvalues", |rep| {
        let ev = find_eigenvalues(&op, window)?;
        let tol = rep.tolerances.get("eigenvalue");
        let negative: usize = ev.iter().filter(|e| e.value < -tol).map(|e| e.multiplicity).sum();
        rep.result("eigenvalues", &ev);
        rep.result("negative_count", negative);
        if let Some(want) = expect_i64(s, "negative")? {
            rep.check_eq("negative eigenvalue count", negative as i64, want);
        }
        let values: Vec<f64> = ev.iter().map(|e| e.value).collect();
        if let Some(want) = expect_f64s(s, "eigenvalues")? {
            let neg: Vec<f64> = values.iter().copied().filter(|v| *v < -tol).collect();
            let err = if neg.len() == want.len() {
                neg.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            rep.check("max eigenvalue error", err, "eigenvalue");
        }
        Ok(values)
    })?;
    if ctx.oracle {
        ctx.stage("finite_differences", |rep| {
            let opts = LocatorOptions::default();
            let reference: Vec<f64> = find_eigenvalues_with(&op, window, &opts)?
                .iter()
                .map(|e| e.value)
                .collect();
            debug_assert_eq!(reference, values);
            let mut rows = Vec::new();
            for cells in [200, 400, 800] {
                let fd: Vec<f64> = fd_eigenvalues(&op, window, cells, &opts)?.iter().map(|e| e.value).collect();
                if fd.len() != reference.len() {
                    return Err(anyhow!("{} discrete eigenvalues at N = {cells}, expected {}", fd.len(), reference.len()));
                }
                let err = fd.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                rows.push(vec![cells as f64, err]);
            }
            let orders: Vec<f64> = rows.windows(2).map(|w| (w[0][1] / w[1][1]).log2()).collect();
            rep.result("fd_orders", &orders);
            for (i, p) in orders.iter().enumerate() {
                rep.check(&format!("2 - observed order ({i})"), 2.0 - p, "order_defect");
            }
            rep.series.insert(
                "convergence".into(),
                Series {
                    columns: vec!["cells".into(), "error".into()],
                    x: "cells".into(),
                    y: "error".into(),
                    group: None,
                    rows,
                },
            );
            Ok(())
        })?;
    }
    Ok(())
}
