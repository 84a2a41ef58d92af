//! Acceptance suite A1 to A9. Runs as a plain binary so the summary lines are
//! always printed; exits nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use cauchy_core::cobordism::{signature_obstruction, BoundarySymbolPair, Provenance};
use cauchy_core::interval::{
    calderon_projections, cauchy_data_space, fd_eigenvalues, find_eigenvalues, find_eigenvalues_with,
    fit_linear_modulus, graph_gap, green_form, rotate_domain, sf_mas_experiment, CalderonMethod,
    DoubleCoupling, IntervalSystem, LocatorOptions, OperatorPath, RealizedOperator, SfMasOptions,
};
use cauchy_core::linalg::{c, expm, op_norm, real, CMat, CVec};
use cauchy_core::random::{self, SymbolShape};
use cauchy_core::sectorial::{
    convergence_series, eigenprojection_oracle, left_projection, sectorial_projection, TangentialMatrix,
};
use cauchy_core::symplectic::{is_lagrangian, LagrangianFrame};
use cauchy_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() <= limit
}

fn id(n: usize) -> CMat {
    CMat::identity(n, n)
}

fn a1() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = random::rng(101);
    let mut worst = [0.0_f64; 4];
    let cases = 500;
    for i in 0..cases {
        let n = [2, 4, 8][i % 3];
        let b0 = TangentialMatrix::new(random::matrix_with_margin(&mut rng, n, 0.1))?;
        let pp = sectorial_projection(&b0, 0.0)?;
        let pm = left_projection(&b0, 0.0)?;
        worst[2] = worst[2].max(op_norm(&(&pp * &pp - &pp)));
        worst[3] = worst[3].max(op_norm(&(&pp + &pm - id(n))));

        let shape = if i % 2 == 0 { SymbolShape::Constant } else { SymbolShape::Variable };
        let sys = random::symmetric_system(&mut rng, n.min(4), shape)?;
        let coupling = DoubleCoupling::default_for(&sys)?;
        let pair = calderon_projections(&sys, &coupling, CalderonMethod::Jump)?;
        let cp = &pair.c_plus;
        worst[0] = worst[0].max(op_norm(&(cp * cp - cp)));
        worst[1] = worst[1].max(op_norm(&(cp + &pair.c_minus - id(2 * sys.dim()))));
    }
    let elapsed = start.elapsed();
    let pass = worst.iter().all(|&w| w <= 1e-8) && within(elapsed, 120.0);
    outcome(
        pass,
        format!(
            "{cases} cases; |C+^2-C+| {:.1e}, |C+ + C- - I| {:.1e}, |P+^2-P+| {:.1e}, |P+ + P- - I| {:.1e}; {:.1}s",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            elapsed.as_secs_f64()
        ),
    )
}

fn periodic_domain() -> LagrangianFrame {
    LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)])).unwrap()
}

fn has_kernel(op: &RealizedOperator) -> Result<bool> {
    Ok(!find_eigenvalues(op, (-1e-3, 1e-3))?.is_empty())
}

fn a2() -> Result<Outcome> {
    let start = Instant::now();
    let base = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::zeros(1, 1))?;
    let path = OperatorPath::new(base, vec![CMat::from_element(1, 1, real(1.0)).into()], (0.0, TAU), 16)?;
    let periodic = sf_mas_experiment(&path, &periodic_domain(), &SfMasOptions::default())?;
    let calibrated = periodic.sf == 1 && periodic.mas == 1;

    let mut rng = random::rng(202);
    let families = 100;
    let mut agree = 0;
    let mut nonzero = 0;
    let mut failures = Vec::new();
    let mut k = 0;
    while k < families {
        let n = 1 + k % 4;
        let base = random::symmetric_system(&mut rng, n, SymbolShape::Constant)?;
        let space = green_form(&base)?;
        let domain = random::lagrangian(&mut rng, &space)?;
        let dir = random::hermitian(&mut rng, n) * real(8.0);
        let path = OperatorPath::new(base, vec![dir.into()], (0.0, 1.0), 16)?;
        // endpoints must be nondegenerate
        let ends = [path.system_at(0.0)?, path.system_at(1.0)?];
        let mut degenerate = false;
        for sys in ends {
            degenerate |= has_kernel(&RealizedOperator::new(sys, domain.clone())?)?;
        }
        if degenerate {
            continue;
        }
        match sf_mas_experiment(&path, &domain, &SfMasOptions::default()) {
            Ok(r) if r.agree => {
                agree += 1;
                nonzero += (r.sf != 0) as usize;
            }
            Ok(r) => failures.push(format!("family {k}: sf {} mas {}", r.sf, r.mas)),
            Err(e) => failures.push(format!("family {k}: {e}")),
        }
        k += 1;
    }
    let elapsed = start.elapsed();
    let pass = calibrated && agree == families && within(elapsed, 300.0);
    let mut detail = format!(
        "periodic SF {} MAS {}; random {agree}/{families} agree ({nonzero} nonzero flows); {:.1}s",
        periodic.sf,
        periodic.mas,
        elapsed.as_secs_f64()
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join(", ")));
    }
    outcome(pass, detail)
}

fn morse() -> Result<RealizedOperator> {
    let l = 4.0 * PI;
    let j = CMat::from_row_slice(2, 2, &[real(0.0), real(-1.0), real(1.0), real(0.0)]);
    let k = CMat::from_diagonal(&CVec::from_vec(vec![real(-l), real(-l)]));
    let w = CMat::from_diagonal(&CVec::from_vec(vec![real(l), real(0.0)]));
    let sys = IntervalSystem::symmetric(j, k)?.with_weight(w)?;
    let mut d = CMat::zeros(4, 2);
    d[(1, 0)] = real(1.0);
    d[(3, 1)] = real(1.0);
    RealizedOperator::new(sys, LagrangianFrame::new(d)?)
}

fn morse_exact() -> Vec<f64> {
    (1..=3).map(|k| (k as f64 / 4.0).powi(2) - 1.0).collect()
}

fn a3() -> Result<Outcome> {
    let start = Instant::now();
    let op = morse()?;
    // the window reaches past 0, which is itself an eigenvalue (k = 4)
    let ev = find_eigenvalues(&op, (-2.0, 0.5))?;
    let negative: Vec<f64> = ev.iter().filter(|e| e.value < -1e-6).map(|e| e.value).collect();
    let exact = morse_exact();
    let err = negative
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = negative.len() == 3 && err <= 1e-6 && within(elapsed, 30.0);
    outcome(
        pass,
        format!(
            "{} negative eigenvalues {:?}; max error {:.1e}; {:.1}s",
            negative.len(),
            negative,
            err,
            elapsed.as_secs_f64()
        ),
    )
}

fn sectorial_corpus() -> Vec<CMat> {
    let mut rng = random::rng(404);
    let mut out = Vec::new();
    for n in [2, 3, 4, 8] {
        for _ in 0..100 {
            out.push(random::matrix_with_margin(&mut rng, n, 0.1));
        }
    }
    out
}

/// Each doubling shrinks the difference tenfold until it reaches the floor.
fn geometric(series: &[(usize, f64)], floor: f64) -> bool {
    series
        .windows(2)
        .all(|w| w[0].1 <= floor || w[1].1 <= floor || w[1].1 <= w[0].1 / 10.0)
}

fn a4() -> Result<Outcome> {
    let start = Instant::now();
    let corpus = sectorial_corpus();
    let (mut oracle_err, mut semigroup_err) = (0.0_f64, 0.0_f64);
    let mut geometric_ok = 0;
    let mut worst_floor = 0.0_f64;
    for m in &corpus {
        let b0 = TangentialMatrix::new(m.clone())?;
        let p = sectorial_projection(&b0, 0.0)?;
        for x in [0.0, 0.25, 1.0, 4.0] {
            let q = sectorial_projection(&b0, x)?;
            let o = eigenprojection_oracle(&b0, x)?.matrix;
            oracle_err = oracle_err.max(op_norm(&(&q - o)));
            let semigroup = expm(&(m * real(-x))) * &p;
            semigroup_err = semigroup_err.max(op_norm(&(&q - semigroup)));
        }
        let series = convergence_series(&b0, 0.0, 64, 6)?;
        let last = series.last().map_or(0.0, |s| s.1);
        worst_floor = worst_floor.max(last);
        geometric_ok += (geometric(&series, 1e-12) && last <= 1e-12) as usize;
    }
    let elapsed = start.elapsed();
    let pass = oracle_err <= 1e-8
        && semigroup_err <= 1e-8
        && geometric_ok == corpus.len()
        && within(elapsed, 120.0);
    outcome(
        pass,
        format!(
            "{} matrices; oracle {:.1e}, semigroup {:.1e}; geometric node doubling 64..4096 {geometric_ok}/{} (floor {:.1e}); {:.1}s",
            corpus.len(),
            oracle_err,
            semigroup_err,
            corpus.len(),
            worst_floor,
            elapsed.as_secs_f64()
        ),
    )
}

fn a5() -> Result<Outcome> {
    let start = Instant::now();
    let corpus = sectorial_corpus();
    let mut monotone = 0;
    let mut small = 0;
    let mut worst_final = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    for m in &corpus {
        let b0 = TangentialMatrix::new(m.clone())?;
        let p = sectorial_projection(&b0, 0.0)?;
        let mut errs = Vec::with_capacity(20);
        for k in 1..=20 {
            let x = 0.5_f64.powi(k);
            let e = op_norm(&(sectorial_projection(&b0, x)? - &p));
            worst_ratio = worst_ratio.max(e / x);
            errs.push(e);
        }
        monotone += errs.windows(2).all(|w| w[1] <= w[0]) as usize;
        let last = *errs.last().unwrap();
        worst_final = worst_final.max(last);
        small += (last <= 1e-6) as usize;
    }
    let pass = monotone == corpus.len() && small == corpus.len();
    outcome(
        pass,
        format!(
            "monotone {monotone}/{n}; final error <= 1e-6 in {small}/{n} (worst {:.2e}, sup error/x {:.2}); {:.1}s",
            worst_final,
            worst_ratio,
            start.elapsed().as_secs_f64(),
            n = corpus.len()
        ),
    )
}

fn a6() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = random::rng(606);
    let systems = 200;
    let mut lagrangian = 0;
    let mut cross = 0.0_f64;
    let mut selfadj = 0.0_f64;
    let mut constant_j = 0;
    for i in 0..systems {
        let n = 1 + i % 4;
        let shape = [SymbolShape::Constant, SymbolShape::VariableK, SymbolShape::Variable][i % 3];
        let sys = random::symmetric_system(&mut rng, n, shape)?;
        let cd = cauchy_data_space(&sys, c(0.0, 0.0))?;
        lagrangian += is_lagrangian(&green_form(&sys)?, &cd)? as usize;
        let coupling = DoubleCoupling::default_for(&sys)?;
        let jump = calderon_projections(&sys, &coupling, CalderonMethod::Jump)?;
        let comp = calderon_projections(&sys, &coupling, CalderonMethod::Complement)?;
        cross = cross.max(op_norm(&(&jump.c_plus - &comp.c_plus)));
        if shape != SymbolShape::Variable {
            constant_j += 1;
            selfadj = selfadj.max(op_norm(&(jump.c_plus.adjoint() - &jump.c_plus)));
        }
    }
    let pass = lagrangian == systems && cross <= 1e-6 && selfadj <= 1e-6;
    outcome(
        pass,
        format!(
            "Lagrangian {lagrangian}/{systems}; complement vs jump {:.1e}; |C+* - C+| {:.1e} over {constant_j} constant-J systems; {:.1}s",
            cross,
            selfadj,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn a7() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = random::rng(707);
    let pairs = 60;
    let mut zero = 0;
    let mut invariant = 0;
    let mut nontrivial = 0;
    let mut notes = Vec::new();
    for i in 0..pairs {
        let n = 1 + i % 3;
        let sys = random::symmetric_system(&mut rng, n, SymbolShape::Variable)?;
        let pair = BoundarySymbolPair::from_system(&sys)?;
        debug_assert_eq!(pair.provenance, Provenance::Bounding);
        let ob = signature_obstruction(&pair)?;
        nontrivial += (ob.dimension > 0) as usize;
        if ob.signature == 0 {
            zero += 1;
        } else {
            notes.push(format!("pair {i}: signature {}", ob.signature));
        }
        let mut stable = true;
        for _ in 0..20 {
            let s = random::well_conditioned(&mut rng, 2 * n);
            let t = signature_obstruction(&pair.transformed(&s)?)?;
            stable &= t.signature == ob.signature && t.dimension == ob.dimension;
        }
        invariant += stable as usize;
    }
    let pass = zero == pairs && invariant == pairs;
    let mut detail = format!(
        "{pairs} bounding pairs ({nontrivial} with imaginary spectrum); obstruction 0 in {zero}; invariant under 20 transformations in {invariant}; {:.1}s",
        start.elapsed().as_secs_f64()
    );
    if !notes.is_empty() {
        detail.push_str(&format!("; {}", notes.join(", ")));
    }
    outcome(pass, detail)
}

const EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn a8() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = random::rng(808);
    let families = 10;
    let mut calderon_slopes = Vec::new();
    let mut gap_slopes = Vec::new();
    for i in 0..families {
        let n = 1 + i % 2;
        let shape = if i % 2 == 0 { SymbolShape::Constant } else { SymbolShape::VariableK };
        let sys = random::symmetric_system(&mut rng, n, shape)?;
        let coupling = DoubleCoupling::default_for(&sys)?;
        let base = calderon_projections(&sys, &coupling, CalderonMethod::Jump)?.c_plus;
        let dir: cauchy_core::interval::Coefficient = random::hermitian(&mut rng, n).into();
        let mut samples = Vec::new();
        for e in EPS {
            let pert = sys.perturbed(&dir.scaled(e))?;
            let cp = calderon_projections(&pert, &coupling, CalderonMethod::Jump)?.c_plus;
            samples.push((e, op_norm(&(cp - &base))));
        }
        calderon_slopes.push(fit_linear_modulus(&samples).slope);

        let csys = random::symmetric_system(&mut rng, n, SymbolShape::Constant)?;
        let space = green_form(&csys)?;
        let domain = random::lagrangian(&mut rng, &space)?;
        let op = RealizedOperator::new(csys, domain.clone())?;
        let h = random::hermitian(&mut rng, 2 * n);
        let mut samples = Vec::new();
        for e in EPS {
            let rotated = op.with_domain(rotate_domain(&space, &domain, &h, e)?)?;
            samples.push((e, graph_gap(&op, &rotated, 64, None)?.graph));
        }
        gap_slopes.push(fit_linear_modulus(&samples).slope);
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (sc, sg) = (min(&calderon_slopes), min(&gap_slopes));
    outcome(
        sc >= 0.9 && sg >= 0.9,
        format!(
            "{families} families; min log-log slope Calderon {sc:.3}, graph gap {sg:.3}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn a9() -> Result<Outcome> {
    let start = Instant::now();
    let op = morse()?;
    let opts = LocatorOptions::default();
    let window = (-2.0, -0.1);
    let reference: Vec<f64> = find_eigenvalues_with(&op, window, &opts)?.iter().map(|e| e.value).collect();
    let mut errors = Vec::new();
    for cells in [200, 400, 800] {
        let fd: Vec<f64> = fd_eigenvalues(&op, window, cells, &opts)?.iter().map(|e| e.value).collect();
        if fd.len() != reference.len() {
            return outcome(false, format!("N = {cells}: {} discrete eigenvalues, expected {}", fd.len(), reference.len()));
        }
        errors.push(fd.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let orders = [(errors[0] / errors[1]).log2(), (errors[1] / errors[2]).log2()];
    outcome(
        orders.iter().all(|&p| p >= 1.8),
        format!(
            "errors {:.2e}, {:.2e}, {:.2e}; observed orders {:.3}, {:.3}; {:.1}s",
            errors[0],
            errors[1],
            errors[2],
            orders[0],
            orders[1],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("A1 projection identities", a1),
        ("A2 SF = MAS calibration", a2),
        ("A3 Morse index", a3),
        ("A4 sectorial oracle", a4),
        ("A5 strong convergence", a5),
        ("A6 Lagrangian and Calderon cross-check", a6),
        ("A7 cobordism obstruction", a7),
        ("A8 continuity", a8),
        ("A9 discretization order", a9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = criteria
        .iter()
        .filter(|(name, _)| filter.is_empty() || filter.iter().any(|f| name.starts_with(f.as_str())))
        .collect();
    let results: Vec<(String, Outcome)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|(name, f)| {
                let f = *f;
                (name.to_string(), s.spawn(f))
            })
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| {
                let out = match h.join() {
                    Ok(Ok(o)) => o,
                    Ok(Err(e)) => Outcome {
                        pass: false,
                        detail: format!("error: {e}"),
                    },
                    Err(_) => Outcome {
                        pass: false,
                        detail: "panicked".into(),
                    },
                };
                (name, out)
            })
            .collect()
    });
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
