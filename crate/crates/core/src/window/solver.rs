use super::factors::{huber, huber_weight, line_jacobian, point_jacobian, LineResidual};
use super::state::{Measurement, Observation, WindowState};
use crate::error::{invalid, Error, Result};
use crate::geometry::{update_orthonormal, CameraModel};
use nalgebra::{DMatrix, DVector, Matrix3x2, SymmetricEigen, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Levenberg-Marquardt settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub tol: f64,
    pub initial_lambda: f64,
    pub use_points: bool,
    pub use_lines: bool,
    pub huber: bool,
    /// Hold the distance between keyframe 0 and the newest keyframe fixed.
    /// Vision alone does not observe metric scale; without this the normal
    /// equations are singular. The widest pair in a forward-moving window is
    /// used so that the fixed scale is spread over the whole window.
    pub scale_anchor: bool,
    pub line_residual: LineResidual,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tol: 1e-8,
            initial_lambda: 1e-4,
            use_points: true,
            use_lines: true,
            huber: true,
            scale_anchor: true,
            line_residual: LineResidual::Midpoint,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !(self.initial_lambda > 0.0) {
            return Err(invalid("solver tol must be nonnegative and initial_lambda positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative cost decrease fell below the tolerance.
    Converged,
    /// Cost reached numerical zero.
    ZeroCost,
    MaxIterations,
    /// No damping produced a descent step.
    DampingExhausted,
    /// Nothing to optimize.
    NoVariables,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationReport {
    /// Linearizations performed.
    pub iterations: usize,
    pub accepted_steps: usize,
    /// Initial cost followed by the cost after each accepted step.
    pub cost_trace: Vec<f64>,
    pub final_cost: f64,
    /// Root mean square of raw pixel residual norms, by factor type.
    pub point_rmse: f64,
    pub line_rmse: f64,
    pub point_factors: usize,
    pub line_factors: usize,
    /// Factors skipped at the final state for cheirality or degenerate projection.
    pub dropped_factors: usize,
    pub termination: Termination,
}

const ZERO_COST: f64 = 1e-20;
const MAX_LAMBDA: f64 = 1e12;
const MIN_INVERSE_DEPTH: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
enum KfParam {
    Fixed,
    /// Translation restricted to the sphere about keyframe 0; two tangent columns.
    Anchor(usize),
    Free(usize),
}

/// Parameter-vector layout for one linearization.
struct Layout {
    keyframes: Vec<KfParam>,
    points: Vec<Option<usize>>,
    lines: Vec<Option<usize>>,
    /// Tangent basis for the scale-anchored keyframe.
    basis: Matrix3x2<f64>,
    /// `(start, len)` groups used for damping and diagnostics, with a name.
    groups: Vec<(usize, usize, String)>,
    dim: usize,
}

fn tangent_basis(u: &Vector3<f64>) -> Matrix3x2<f64> {
    let a = if u.x.abs() < 0.6 { Vector3::x() } else { Vector3::y() };
    let b1 = u.cross(&a).normalize();
    let b2 = u.cross(&b1);
    Matrix3x2::from_columns(&[b1, b2])
}

fn active(o: &Observation, cfg: &SolverConfig) -> bool {
    if o.is_point() {
        cfg.use_points
    } else {
        cfg.use_lines
    }
}

impl Layout {
    fn new(state: &WindowState, obs: &[Observation], cfg: &SolverConfig) -> Layout {
        let mut dim = 0;
        let mut groups = Vec::new();
        let mut basis = Matrix3x2::zeros();
        let mut keyframes = Vec::with_capacity(state.keyframes.len());
        for k in 0..state.keyframes.len() {
            let kind = if k == 0 {
                KfParam::Fixed
            } else if k == state.keyframes.len() - 1 && cfg.scale_anchor {
                let u = (state.keyframes[k].p - state.keyframes[0].p).normalize();
                basis = tangent_basis(&u);
                groups.push((dim, 2, format!("keyframe {k} position")));
                groups.push((dim + 2, 3, format!("keyframe {k} orientation")));
                KfParam::Anchor(dim)
            } else {
                groups.push((dim, 3, format!("keyframe {k} position")));
                groups.push((dim + 3, 3, format!("keyframe {k} orientation")));
                KfParam::Free(dim)
            };
            dim += match kind {
                KfParam::Fixed => 0,
                KfParam::Anchor(_) => 5,
                KfParam::Free(_) => 6,
            };
            keyframes.push(kind);
        }
        let mut seen_points = vec![false; state.points.len()];
        let mut seen_lines = vec![false; state.lines.len()];
        for o in obs.iter().filter(|o| active(o, cfg)) {
            if o.is_point() {
                seen_points[o.feature] = true;
            } else {
                seen_lines[o.feature] = true;
            }
        }
        let mut points = vec![None; state.points.len()];
        for (i, _) in seen_points.iter().enumerate().filter(|x| *x.1) {
            points[i] = Some(dim);
            groups.push((dim, 1, format!("point {i} inverse depth")));
            dim += 1;
        }
        let mut lines = vec![None; state.lines.len()];
        for (j, _) in seen_lines.iter().enumerate().filter(|x| *x.1) {
            lines[j] = Some(dim);
            groups.push((dim, 3, format!("line {j} rotation")));
            groups.push((dim + 3, 1, format!("line {j} angle")));
            dim += 4;
        }
        Layout { keyframes, points, lines, basis, groups, dim }
    }

    /// Global indices of a keyframe's body-pose Jacobian columns after
    /// projection, with the matching 6-column combination.
    fn keyframe_columns(&self, k: usize, j: &[f64; 6], out: &mut Vec<(usize, f64)>) {
        match self.keyframes[k] {
            KfParam::Fixed => {}
            KfParam::Anchor(off) => {
                let jp = Vector3::new(j[0], j[1], j[2]);
                let t = self.basis.transpose() * jp;
                out.push((off, t.x));
                out.push((off + 1, t.y));
                for c in 0..3 {
                    out.push((off + 2 + c, j[3 + c]));
                }
            }
            KfParam::Free(off) => {
                out.extend(j.iter().enumerate().map(|(c, v)| (off + c, *v)));
            }
        }
    }
}

struct Evaluation {
    cost: f64,
    dropped: usize,
    point_sq: f64,
    point_count: usize,
    line_sq: f64,
    line_count: usize,
    hessian: Option<DMatrix<f64>>,
    gradient: Option<DVector<f64>>,
}

fn robust(s: f64, cfg: &SolverConfig) -> (f64, f64) {
    if cfg.huber {
        (huber(s).unwrap_or(f64::INFINITY), huber_weight(s))
    } else {
        (s, 1.0)
    }
}

/// Accumulates whitened rows `(index, value)` with residual `r` and weight `w`.
fn accumulate(h: &mut DMatrix<f64>, g: &mut DVector<f64>, row: &[(usize, f64)], r: f64, w: f64) {
    for &(a, va) in row {
        g[a] += w * va * r;
        for &(b, vb) in row {
            h[(a, b)] += w * va * vb;
        }
    }
}

fn evaluate(
    state: &WindowState,
    obs: &[Observation],
    cam: &CameraModel,
    cfg: &SolverConfig,
    layout: Option<&Layout>,
) -> Evaluation {
    let mut ev = Evaluation {
        cost: 0.0,
        dropped: 0,
        point_sq: 0.0,
        point_count: 0,
        line_sq: 0.0,
        line_count: 0,
        hessian: layout.map(|l| DMatrix::zeros(l.dim, l.dim)),
        gradient: layout.map(|l| DVector::zeros(l.dim)),
    };
    let mut row = Vec::with_capacity(16);
    for o in obs.iter().filter(|o| active(o, cfg)) {
        let host = &state.keyframes[o.keyframe];
        match o.measurement {
            Measurement::Point(_) => {
                let lm = &state.points[o.feature];
                let anchor = &state.keyframes[lm.anchor];
                let Ok(j) = point_jacobian(o, anchor, host, lm, &state.t_bc, cam, lm.anchor == o.keyframe) else {
                    ev.dropped += 1;
                    continue;
                };
                let r = j.residual / o.sigma;
                let s = r.norm_squared();
                let (rho, w) = robust(s, cfg);
                ev.cost += rho;
                ev.point_sq += j.residual.norm_squared();
                ev.point_count += 1;
                if let (Some(l), Some(h), Some(g)) = (layout, ev.hessian.as_mut(), ev.gradient.as_mut()) {
                    if lm.anchor == o.keyframe {
                        continue;
                    }
                    for c in 0..2 {
                        row.clear();
                        let ja: [f64; 6] = std::array::from_fn(|i| j.anchor[(c, i)] / o.sigma);
                        let jh: [f64; 6] = std::array::from_fn(|i| j.host[(c, i)] / o.sigma);
                        l.keyframe_columns(lm.anchor, &ja, &mut row);
                        l.keyframe_columns(o.keyframe, &jh, &mut row);
                        if let Some(off) = l.points[o.feature] {
                            row.push((off, j.lambda[c] / o.sigma));
                        }
                        accumulate(h, g, &row, r[c], w);
                    }
                }
            }
            Measurement::Line(seg) => {
                let line = &state.lines[o.feature];
                let rows = cfg
                    .line_residual
                    .samples(&seg)
                    .iter()
                    .map(|m| line_jacobian(m, host, line, &state.t_bc, cam))
                    .collect::<Result<Vec<_>>>();
                let Ok(rows) = rows else {
                    ev.dropped += 1;
                    continue;
                };
                let sq: f64 = rows.iter().map(|(res, _, _)| res * res).sum();
                let (rho, w) = robust(sq / (o.sigma * o.sigma), cfg);
                ev.cost += rho;
                ev.line_sq += sq;
                ev.line_count += 1;
                if let (Some(l), Some(h), Some(g)) = (layout, ev.hessian.as_mut(), ev.gradient.as_mut()) {
                    for (res, jp, jl) in &rows {
                        row.clear();
                        let jp: [f64; 6] = std::array::from_fn(|i| jp[i] / o.sigma);
                        l.keyframe_columns(o.keyframe, &jp, &mut row);
                        if let Some(off) = l.lines[o.feature] {
                            for c in 0..4 {
                                row.push((off + c, jl[c] / o.sigma));
                            }
                        }
                        accumulate(h, g, &row, res / o.sigma, w);
                    }
                }
            }
        }
    }
    ev
}

fn apply_step(state: &WindowState, layout: &Layout, delta: &DVector<f64>) -> WindowState {
    let mut next = state.clone();
    let p0 = state.keyframes[0].p;
    for (k, kind) in layout.keyframes.iter().enumerate() {
        let kf = &mut next.keyframes[k];
        let (dp, off) = match *kind {
            KfParam::Fixed => continue,
            KfParam::Anchor(off) => (layout.basis * delta.fixed_rows::<2>(off), off + 2),
            KfParam::Free(off) => (delta.fixed_rows::<3>(off).into_owned(), off + 3),
        };
        let dphi: Vector3<f64> = delta.fixed_rows::<3>(off).into_owned();
        kf.q = UnitQuaternion::new_normalize(*(kf.q * UnitQuaternion::from_scaled_axis(dphi)).quaternion());
        if let KfParam::Anchor(_) = kind {
            let radius = (kf.p - p0).norm();
            kf.p = p0 + (kf.p - p0 + dp).normalize() * radius;
        } else {
            kf.p += dp;
        }
    }
    for (i, off) in layout.points.iter().enumerate() {
        if let Some(off) = off {
            let lm = &mut next.points[i];
            lm.lambda = (lm.lambda + delta[*off]).max(MIN_INVERSE_DEPTH);
        }
    }
    for (j, off) in layout.lines.iter().enumerate() {
        if let Some(off) = off {
            let d = Vector4::new(delta[*off], delta[off + 1], delta[off + 2], delta[off + 3]);
            next.lines[j] = update_orthonormal(&state.lines[j], &d);
        }
    }
    next
}

fn check_observability(state: &WindowState, obs: &[Observation], cfg: &SolverConfig) -> Result<()> {
    if state.keyframes.is_empty() {
        return Err(invalid("window has no keyframes"));
    }
    for (k, kf) in state.keyframes.iter().enumerate() {
        if kf.optimize_inertial {
            return Err(Error::Underconstrained {
                block: format!("keyframe {k} velocity and biases"),
                detail: "no inertial factor constrains them".into(),
            });
        }
    }
    let mut point_obs = vec![(0usize, 0usize); state.points.len()];
    let mut line_obs = vec![0usize; state.lines.len()];
    for o in obs.iter().filter(|o| active(o, cfg)) {
        if o.is_point() {
            point_obs[o.feature].0 += 1;
            if state.points[o.feature].anchor != o.keyframe {
                point_obs[o.feature].1 += 1;
            }
        } else {
            line_obs[o.feature] += 1;
        }
    }
    for (i, &(n, other)) in point_obs.iter().enumerate() {
        if n > 0 && (n < 2 || other == 0) {
            return Err(Error::Underconstrained {
                block: format!("point {i} inverse depth"),
                detail: "needs an observation from a keyframe other than its anchor".into(),
            });
        }
    }
    for (j, &n) in line_obs.iter().enumerate() {
        let residuals = n * cfg.line_residual.residuals_per_observation();
        if n > 0 && residuals < 4 {
            return Err(Error::Underconstrained {
                block: format!("line {j}"),
                detail: format!("{n} observations give {residuals} residuals against its four parameters"),
            });
        }
    }
    Ok(())
}

/// Finds a null direction of the Jacobi-scaled normal matrix and names the
/// block it lives in.
fn check_rank(h: &DMatrix<f64>, layout: &Layout) -> Result<()> {
    let n = h.nrows();
    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)]).collect();
    let scale_ref = diag.iter().cloned().fold(0.0, f64::max);
    let group_of = |idx: usize| {
        layout
            .groups
            .iter()
            .find(|g| idx >= g.0 && idx < g.0 + g.1)
            .map(|g| g.2.clone())
            .unwrap_or_else(|| format!("parameter {idx}"))
    };
    if let Some(i) = (0..n).find(|&i| !(diag[i] > 1e-14 * scale_ref.max(1e-300))) {
        return Err(Error::Underconstrained { block: group_of(i), detail: "no factor depends on it".into() });
    }
    let s = DVector::from_iterator(n, diag.iter().map(|d| 1.0 / d.sqrt()));
    let scaled = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * s[i] * s[j]);
    let eig = SymmetricEigen::new(scaled);
    let (imin, &lmin) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    if lmin < 1e-10 {
        let v = eig.eigenvectors.column(imin);
        let (worst, _) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("nonempty");
        return Err(Error::Underconstrained {
            block: group_of(worst),
            detail: format!("normal equations are singular beyond the gauge (scaled eigenvalue {lmin:.3e})"),
        });
    }
    Ok(())
}

/// Per-group isotropic damping: each parameter group is damped by the mean of
/// its diagonal, which keeps the step independent of the world orientation.
fn damping(h: &DMatrix<f64>, layout: &Layout) -> DVector<f64> {
    let mut d = DVector::zeros(layout.dim);
    for &(start, len, _) in &layout.groups {
        let mean = (start..start + len).map(|i| h[(i, i)]).sum::<f64>() / len as f64;
        for i in start..start + len {
            d[i] = mean.max(1e-12);
        }
    }
    d
}

fn report(ev: &Evaluation, iterations: usize, trace: Vec<f64>, termination: Termination) -> OptimizationReport {
    let rmse = |sq: f64, n: usize| if n == 0 { 0.0 } else { (sq / n as f64).sqrt() };
    OptimizationReport {
        iterations,
        accepted_steps: trace.len() - 1,
        final_cost: ev.cost,
        cost_trace: trace,
        point_rmse: rmse(ev.point_sq, ev.point_count),
        line_rmse: rmse(ev.line_sq, ev.line_count),
        point_factors: ev.point_count,
        line_factors: ev.line_count,
        dropped_factors: ev.dropped,
        termination,
    }
}

/// Levenberg-Marquardt over keyframe poses, inverse depths and orthonormal
/// lines. Keyframe 0 is held fixed; with `scale_anchor` the newest keyframe
/// keeps its distance to keyframe 0.
pub fn optimize_window(
    state: &WindowState,
    obs: &[Observation],
    cam: &CameraModel,
    cfg: &SolverConfig,
) -> Result<(WindowState, OptimizationReport)> {
    cfg.validate()?;
    state.validate(obs)?;
    check_observability(state, obs, cfg)?;
    let mut current = state.clone();
    let mut layout = Layout::new(&current, obs, cfg);
    let mut ev = evaluate(&current, obs, cam, cfg, Some(&layout));
    let mut trace = vec![ev.cost];
    if layout.dim == 0 {
        return Ok((current, report(&ev, 0, trace, Termination::NoVariables)));
    }
    check_rank(ev.hessian.as_ref().expect("linearized"), &layout)?;
    let mut lambda = cfg.initial_lambda;
    let mut iterations = 0;
    let termination = loop {
        if ev.cost <= ZERO_COST {
            break Termination::ZeroCost;
        }
        if iterations >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let h = ev.hessian.take().expect("linearized");
        let g = ev.gradient.take().expect("linearized");
        let d = damping(&h, &layout);
        let mut accepted = None;
        while lambda <= MAX_LAMBDA {
            let mut a = h.clone();
            for i in 0..layout.dim {
                a[(i, i)] += lambda * d[i];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&-&g);
            let candidate = apply_step(&current, &layout, &delta);
            let cev = evaluate(&candidate, obs, cam, cfg, None);
            // A step that hides factors behind a camera is not a descent.
            if cev.cost < ev.cost && cev.dropped <= ev.dropped {
                lambda = (lambda / 10.0).max(1e-12);
                accepted = Some((candidate, cev.cost));
                break;
            }
            lambda *= 10.0;
        }
        let Some((candidate, new_cost)) = accepted else {
            ev = evaluate(&current, obs, cam, cfg, None);
            break Termination::DampingExhausted;
        };
        let relative = (ev.cost - new_cost) / ev.cost;
        current = candidate;
        trace.push(new_cost);
        layout = Layout::new(&current, obs, cfg);
        ev = evaluate(&current, obs, cam, cfg, Some(&layout));
        if relative < cfg.tol {
            break Termination::Converged;
        }
    };
    Ok((current, report(&ev, iterations, trace, termination)))
}

/// Total robust cost of a state under the given settings, with the number of
/// dropped factors.
pub fn window_cost(state: &WindowState, obs: &[Observation], cam: &CameraModel, cfg: &SolverConfig) -> (f64, usize) {
    let ev = evaluate(state, obs, cam, cfg, None);
    (ev.cost, ev.dropped)
}
