//! Spectral flow of one-parameter families of self-adjoint problems.
//!
//! A family is sampled either as hermitian matrices (all eigenvalues) or
//! through an eigenvalue locator that returns the eigenvalues inside a real
//! window `[-Λ, Λ]`. Consecutive snapshots are linked into labelled
//! trajectories; eigenvalues may enter or leave at the window edges. The flow
//! counts `+1` for every trajectory moving from `λ < 0` to `λ ≥ 0` and `-1`
//! for the reverse, with the endpoint convention shared with the Maslov index.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, op_norm, CMat};
use crate::symplectic::EndpointConvention;

type MatrixFn<'a> = Box<dyn Fn(f64) -> Result<CMat> + 'a>;
type LocatorFn<'a> = Box<dyn Fn(f64, f64) -> Result<Vec<C64>> + 'a>;

enum EigenSource<'a> {
    Hermitian(MatrixFn<'a>),
    Locator(LocatorFn<'a>),
}

/// A parameter family `t ↦` (hermitian problem) over `[t0, t1]`.
pub struct EigenFamily<'a> {
    source: EigenSource<'a>,
    t0: f64,
    t1: f64,
    window: Option<f64>,
}

impl<'a> EigenFamily<'a> {
    pub fn hermitian(range: (f64, f64), f: impl Fn(f64) -> Result<CMat> + 'a) -> Self {
        EigenFamily {
            source: EigenSource::Hermitian(Box::new(f)),
            t0: range.0,
            t1: range.1,
            window: None,
        }
    }

    /// `f(t, Λ)` must return the eigenvalues in `[-Λ, Λ]`. Without an explicit
    /// window one is chosen from the spectrum at `t0`.
    pub fn locator(
        range: (f64, f64),
        window: Option<f64>,
        f: impl Fn(f64, f64) -> Result<Vec<C64>> + 'a,
    ) -> Self {
        EigenFamily {
            source: EigenSource::Locator(Box::new(f)),
            t0: range.0,
            t1: range.1,
            window,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub convention: EndpointConvention,
    pub initial_grid: usize,
    /// Eigenvalues of smaller magnitude sit on zero.
    pub zero_tol: f64,
    /// Parameter accuracy of crossing localization.
    pub param_tol: f64,
    /// Shift used to confirm that tangential crossings do not change the flow.
    pub shift: f64,
    pub max_depth: u32,
    /// Lower bound on the eigenvalue spacing used by the refinement test.
    pub spacing_floor: f64,
    pub max_window_doublings: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            convention: EndpointConvention::HalfOpen,
            initial_grid: 32,
            zero_tol: 1e-7,
            param_tol: 1e-8,
            shift: 1e-7,
            max_depth: 40,
            spacing_floor: 1e-3,
            max_window_doublings: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub label: usize,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCrossing {
    pub t: f64,
    pub label: usize,
    pub direction: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowResult {
    pub flow: i64,
    pub crossings: Vec<FlowCrossing>,
    pub trajectories: Vec<Trajectory>,
    /// Window used for locator families.
    pub window: Option<f64>,
}

struct Snap {
    t: f64,
    values: Vec<f64>,
}

/// Pairs `(i, j)` of eigenvalue indices linking two snapshots.
struct Link {
    pairs: Vec<(usize, usize)>,
}

struct Tracking {
    snaps: Vec<Snap>,
    links: Vec<Link>,
    window: Option<f64>,
}

fn evaluate(family: &EigenFamily<'_>, t: f64, window: Option<f64>) -> Result<Vec<f64>> {
    match &family.source {
        EigenSource::Hermitian(f) => {
            let h = f(t)?;
            let scale = op_norm(&h).max(1.0);
            if op_norm(&(&h - h.adjoint())) > 1e-10 * scale {
                return Err(Error::InvalidArgument(format!(
                    "family member at t = {t} is not hermitian"
                )));
            }
            Ok(hermitian_eigen(&h).0)
        }
        EigenSource::Locator(f) => {
            let lam = window.expect("locator families carry a window");
            let raw = f(t, lam)?;
            let mut vals = Vec::with_capacity(raw.len());
            for z in raw {
                if !z.re.is_finite() || z.im.abs() > 1e-8 * z.re.abs().max(1.0) {
                    return Err(Error::NonRealEigenvalue(z.im));
                }
                if z.re.abs() <= lam {
                    vals.push(z.re);
                }
            }
            vals.sort_by(f64::total_cmp);
            Ok(vals)
        }
    }
}

fn spacing(values: &[f64], i: usize, floor: f64) -> f64 {
    let mut s = f64::INFINITY;
    if i > 0 {
        s = s.min(values[i] - values[i - 1]);
    }
    if i + 1 < values.len() {
        s = s.min(values[i + 1] - values[i]);
    }
    s.max(floor)
}

/// Links two snapshots, or `None` when they are too far apart to be matched
/// reliably.
fn link(a: &[f64], b: &[f64], window: Option<f64>, floor: f64) -> Option<Link> {
    match window {
        None => {
            if a.len() != b.len() {
                return None;
            }
            // sorted order is continuous for full spectra; refinement only
            // matters near zero where crossings are localized
            for i in 0..a.len() {
                let d = (b[i] - a[i]).abs();
                let near_zero = a[i].abs().min(b[i].abs()) <= d + spacing(a, i, floor);
                if near_zero && d > 0.5 * spacing(a, i, floor) {
                    return None;
                }
            }
            Some(Link {
                pairs: (0..a.len()).map(|i| (i, i)).collect(),
            })
        }
        Some(lam) => {
            let la = a.len() as isize;
            let lb = b.len() as isize;
            if la == 0 && lb == 0 {
                return Some(Link { pairs: Vec::new() });
            }
            let edge = 0.5 * lam;
            let mut best: Option<(isize, f64)> = None;
            for s in (-la)..=lb {
                let mut ok = true;
                let mut worst = 0.0_f64;
                for i in 0..la {
                    let j = i + s;
                    if j < 0 || j >= lb {
                        if a[i as usize].abs() < edge {
                            ok = false;
                            break;
                        }
                    } else {
                        let (x, y) = (a[i as usize], b[j as usize]);
                        let d = (y - x).abs();
                        if d > 0.5 * spacing(a, i as usize, floor).min(spacing(b, j as usize, floor)) {
                            ok = false;
                            break;
                        }
                        worst = worst.max(d);
                    }
                }
                if !ok {
                    continue;
                }
                for j in 0..lb {
                    let i = j - s;
                    if (i < 0 || i >= la) && b[j as usize].abs() < edge {
                        ok = false;
                        break;
                    }
                }
                if ok && best.map_or(true, |(_, w)| worst < w) {
                    best = Some((s, worst));
                }
            }
            let (s, _) = best?;
            let pairs = (0..la)
                .filter_map(|i| {
                    let j = i + s;
                    (j >= 0 && j < lb).then_some((i as usize, j as usize))
                })
                .collect();
            Some(Link { pairs })
        }
    }
}

fn choose_window(family: &EigenFamily<'_>) -> Result<Option<f64>> {
    match (&family.source, family.window) {
        (EigenSource::Hermitian(_), _) => Ok(None),
        (EigenSource::Locator(_), Some(w)) => {
            if !(w > 0.0) {
                return Err(Error::WindowTooSmall(format!("window {w} must be positive")));
            }
            Ok(Some(w))
        }
        (EigenSource::Locator(_), None) => {
            let mut seed = 1.0;
            for _ in 0..20 {
                let vals = evaluate(family, family.t0, Some(seed))?;
                if let Some(m) = vals.iter().map(|v| v.abs()).reduce(f64::max) {
                    return Ok(Some((4.0 * m).max(seed)));
                }
                seed *= 2.0;
            }
            Err(Error::WindowTooSmall(
                "no eigenvalue found near zero at the initial parameter".into(),
            ))
        }
    }
}

fn build_tracking(family: &EigenFamily<'_>, opts: &FlowOptions) -> Result<Tracking> {
    if !(family.t1 > family.t0) || opts.initial_grid < 1 {
        return Err(Error::InvalidArgument(format!(
            "family needs t0 < t1 and a positive grid, got [{}, {}]",
            family.t0, family.t1
        )));
    }
    let mut window = choose_window(family)?;
    let mut doublings = 0;
    loop {
        match track_in_window(family, opts, window) {
            Err(Error::TrackingBudget { .. })
                if window.is_some() && doublings < opts.max_window_doublings =>
            {
                window = window.map(|w| 2.0 * w);
                doublings += 1;
            }
            other => return other,
        }
    }
}

fn track_in_window(
    family: &EigenFamily<'_>,
    opts: &FlowOptions,
    window: Option<f64>,
) -> Result<Tracking> {
    let (t0, t1) = (family.t0, family.t1);
    let grid = opts.initial_grid;
    let mut snaps = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        let t = t0 + (t1 - t0) * k as f64 / grid as f64;
        snaps.push(Snap {
            t,
            values: evaluate(family, t, window)?,
        });
    }
    let min_width = (t1 - t0) * 0.5_f64.powi(opts.max_depth as i32);
    let mut links = Vec::with_capacity(grid);
    let mut i = 0;
    while i + 1 < snaps.len() {
        match link(&snaps[i].values, &snaps[i + 1].values, window, opts.spacing_floor) {
            Some(l) => {
                links.push(l);
                i += 1;
            }
            None => {
                let (ta, tb) = (snaps[i].t, snaps[i + 1].t);
                if tb - ta <= min_width {
                    return Err(Error::TrackingBudget { t0: ta, t1: tb });
                }
                let tm = 0.5 * (ta + tb);
                snaps.insert(
                    i + 1,
                    Snap {
                        t: tm,
                        values: evaluate(family, tm, window)?,
                    },
                );
            }
        }
    }
    Ok(Tracking {
        snaps,
        links,
        window,
    })
}

fn trajectories(tracking: &Tracking) -> (Vec<Trajectory>, Vec<Vec<usize>>) {
    let mut out: Vec<Trajectory> = Vec::new();
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(tracking.snaps.len());
    let first = &tracking.snaps[0];
    labels.push((0..first.values.len()).collect());
    for (k, &v) in first.values.iter().enumerate() {
        out.push(Trajectory {
            label: k,
            points: vec![(first.t, v)],
        });
    }
    for (s, l) in tracking.links.iter().enumerate() {
        let next = &tracking.snaps[s + 1];
        let mut next_labels = vec![usize::MAX; next.values.len()];
        for &(i, j) in &l.pairs {
            next_labels[j] = labels[s][i];
        }
        for (j, lab) in next_labels.iter_mut().enumerate() {
            if *lab == usize::MAX {
                *lab = out.len();
                out.push(Trajectory {
                    label: *lab,
                    points: Vec::new(),
                });
            }
            out[*lab].points.push((next.t, next.values[j]));
        }
        labels.push(next_labels);
    }
    (out, labels)
}

pub struct Tracked {
    pub trajectories: Vec<Trajectory>,
    pub window: Option<f64>,
}

/// Samples the family and links eigenvalues into continuous labelled
/// trajectories.
pub fn track_eigenvalues(family: &EigenFamily<'_>, initial_grid: usize) -> Result<Tracked> {
    let opts = FlowOptions {
        initial_grid,
        ..FlowOptions::default()
    };
    if initial_grid < 2 {
        return Err(Error::InvalidArgument("initial grid must be at least 2".into()));
    }
    let tracking = build_tracking(family, &opts)?;
    Ok(Tracked {
        trajectories: trajectories(&tracking).0,
        window: tracking.window,
    })
}

fn cls(v: f64, shift: f64) -> i64 {
    (v - shift >= 0.0) as i64
}

/// Net count over all linked pairs for a given class shift and endpoint
/// rule. Returns the flow and, for the unshifted count, the raw crossing
/// intervals `(snapshot index, i, j, contribution)`.
fn count(
    tracking: &Tracking,
    opts: &FlowOptions,
    shift: f64,
) -> Result<(i64, Vec<(usize, usize, usize, i64)>)> {
    let last = tracking.links.len();
    let mut flow = 0;
    let mut raw = Vec::new();
    for (s, l) in tracking.links.iter().enumerate() {
        let a = &tracking.snaps[s];
        let b = &tracking.snaps[s + 1];
        for &(i, j) in &l.pairs {
            let (x, y) = (a.values[i], b.values[j]);
            let mut ca = cls(x, shift);
            let mut cb = cls(y, shift);
            if shift == 0.0 {
                if s == 0 && x.abs() < opts.zero_tol {
                    match opts.convention {
                        EndpointConvention::Strict => {
                            return Err(Error::DegenerateEndpoint { t: a.t })
                        }
                        EndpointConvention::HalfOpen => {
                            if y.abs() < opts.zero_tol {
                                return Err(Error::ZeroBranch { t0: a.t, t1: b.t });
                            }
                            ca = 1 - cls(y, 0.0);
                        }
                    }
                }
                if s + 1 == last && y.abs() < opts.zero_tol {
                    match opts.convention {
                        EndpointConvention::Strict => {
                            return Err(Error::DegenerateEndpoint { t: b.t })
                        }
                        EndpointConvention::HalfOpen => {
                            if x.abs() < opts.zero_tol {
                                return Err(Error::ZeroBranch { t0: a.t, t1: b.t });
                            }
                            cb = ca;
                        }
                    }
                }
            }
            let c = cb - ca;
            if c != 0 {
                flow += c;
                raw.push((s, i, j, c));
            }
        }
    }
    Ok((flow, raw))
}

fn check_zero_branches(trajs: &[Trajectory], opts: &FlowOptions, span: f64) -> Result<()> {
    for tr in trajs {
        let mut run_start: Option<usize> = None;
        for (k, &(_, v)) in tr.points.iter().enumerate() {
            if v.abs() < opts.zero_tol {
                let start = *run_start.get_or_insert(k);
                let (ta, tb) = (tr.points[start].0, tr.points[k].0);
                if k - start >= 2 && tb - ta >= 1e-3 * span {
                    return Err(Error::ZeroBranch { t0: ta, t1: tb });
                }
            } else {
                run_start = None;
            }
        }
    }
    Ok(())
}

fn locate(
    family: &EigenFamily<'_>,
    window: Option<f64>,
    lo: (f64, f64),
    hi: (f64, f64),
    opts: &FlowOptions,
) -> Result<f64> {
    let (mut ta, mut a) = lo;
    let (mut tb, mut b) = hi;
    while tb - ta > opts.param_tol {
        let tm = 0.5 * (ta + tb);
        let vals = evaluate(family, tm, window)?;
        let guess = 0.5 * (a + b);
        let Some(v) = vals
            .iter()
            .copied()
            .min_by(|x, y| (x - guess).abs().total_cmp(&(y - guess).abs()))
        else {
            break;
        };
        if v.abs() < opts.zero_tol * 1e-3 {
            return Ok(tm);
        }
        if cls(v, 0.0) == cls(a, 0.0) {
            ta = tm;
            a = v;
        } else {
            tb = tm;
            b = v;
        }
    }
    Ok(0.5 * (ta + tb))
}

pub fn spectral_flow(family: &EigenFamily<'_>) -> Result<FlowResult> {
    spectral_flow_with(family, &FlowOptions::default())
}

pub fn spectral_flow_with(family: &EigenFamily<'_>, opts: &FlowOptions) -> Result<FlowResult> {
    let tracking = build_tracking(family, opts)?;
    let (trajs, labels) = trajectories(&tracking);
    check_zero_branches(&trajs, opts, family.t1 - family.t0)?;
    let (flow, raw) = count(&tracking, opts, 0.0)?;

    let first = &tracking.snaps[0].values;
    let last = &tracking.snaps[tracking.snaps.len() - 1].values;
    let clear = |v: &[f64]| v.iter().all(|x| x.abs() > 10.0 * opts.shift);
    if clear(first) && clear(last) {
        for s in [opts.shift, -opts.shift] {
            let (shifted, _) = count(&tracking, opts, s)?;
            if shifted != flow {
                let t = raw.first().map_or(family.t0, |r| tracking.snaps[r.0].t);
                return Err(Error::UnresolvedCrossing { t });
            }
        }
    }

    let mut crossings = Vec::with_capacity(raw.len());
    for (s, i, j, c) in raw {
        let a = &tracking.snaps[s];
        let b = &tracking.snaps[s + 1];
        let (x, y) = (a.values[i], b.values[j]);
        let t = if s == 0 && x.abs() < opts.zero_tol {
            a.t
        } else {
            locate(family, tracking.window, (a.t, x), (b.t, y), opts)?
        };
        crossings.push(FlowCrossing {
            t,
            label: labels[s][i],
            direction: c,
        });
    }

    Ok(FlowResult {
        flow,
        crossings,
        trajectories: trajs,
        window: tracking.window,
    })
}

/// Trajectories as CSV with columns `t,label,eigenvalue`.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut rows: Vec<(f64, usize, f64)> = trajectories
        .iter()
        .flat_map(|tr| tr.points.iter().map(move |&(t, v)| (t, tr.label, v)))
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out = String::from("t,label,eigenvalue\n");
    for (t, l, v) in rows {
        let _ = writeln!(out, "{t:.12e},{l},{v:.12e}");
    }
    out
}
