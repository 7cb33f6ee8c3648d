//! Damped Gauss-Newton (Levenberg-Marquardt) fitting of the artifact models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{logistic, window_bounds, ArtifactFeatures, ArtifactModelParams, MirrorState};

/// Which artifact model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// Lateral offset `X`.
    Offset,
    /// Radial distance `R`.
    Radial,
    /// Point count `N`.
    Count,
    /// Appearance window `P_app`.
    Window,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Offset,
        ModelKind::Radial,
        ModelKind::Count,
        ModelKind::Window,
    ];

    /// Parameter-file keys fitted by this model. `k` of the window model is held fixed.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Offset => &["cX", "deltaX"],
            ModelKind::Radial => &["cR", "n_d", "a1", "a2"],
            ModelKind::Count => &["c0", "beta", "gamma", "mu", "sigma"],
            ModelKind::Window => &["b0_min", "b1", "b2", "b0_max", "c1", "c2"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Offset => "offset",
            ModelKind::Radial => "radial",
            ModelKind::Count => "count",
            ModelKind::Window => "window",
        }
    }

    /// The feature this model predicts.
    pub fn target(self, f: &ArtifactFeatures) -> f64 {
        match self {
            ModelKind::Offset => f.x_artifact,
            ModelKind::Radial => f.r_artifact,
            ModelKind::Count => f.n_artifact,
            ModelKind::Window => f.p_app,
        }
    }

    fn with_values(self, base: &ArtifactModelParams, values: &[f64]) -> ArtifactModelParams {
        let mut p = *base;
        for (name, v) in self.param_names().iter().zip(values) {
            *p.slot(name).expect("known key") = *v;
        }
        p
    }

    /// Model value and its gradient with respect to [`Self::param_names`].
    pub fn evaluate(self, state: &MirrorState, p: &ArtifactModelParams) -> (f64, Vec<f64>) {
        let t = state.theta_rad();
        match self {
            ModelKind::Offset => {
                let u = state.d * (2.0 * t).tan();
                (p.c_x * u + p.delta_x, vec![u, 1.0])
            }
            ModelKind::Radial => {
                let dn = state.d.powf(p.n_d);
                let g = 1.0 + p.a1 * t + p.a2 * t * t;
                let r = p.c_r * dn * g;
                (
                    r,
                    vec![dn * g, r * state.d.ln(), p.c_r * dn * t, p.c_r * dn * t * t],
                )
            }
            ModelKind::Count => {
                let cos = t.cos();
                let dev = state.d - p.mu;
                let s2 = p.sigma * p.sigma;
                let n = p.c0
                    * state.area.powf(p.beta)
                    * cos.powf(p.gamma)
                    * (-0.5 * dev * dev / s2).exp();
                (
                    n,
                    vec![
                        n / p.c0,
                        n * state.area.ln(),
                        n * cos.ln(),
                        n * dev / s2,
                        n * dev * dev / (s2 * p.sigma),
                    ],
                )
            }
            ModelKind::Window => {
                let (d_min, d_max) = window_bounds(state, p);
                let rise = logistic(p.k * (state.d - d_min));
                let fall = logistic(-p.k * (state.d - d_max));
                let dp_dmin = -p.k * rise * (1.0 - rise) * fall;
                let dp_dmax = p.k * rise * fall * (1.0 - fall);
                let th = state.theta_deg;
                let a = state.area;
                (
                    rise * fall,
                    vec![dp_dmin, dp_dmin * th, dp_dmin * a, dp_dmax, dp_dmax * th, dp_dmax * a],
                )
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offset" => Ok(ModelKind::Offset),
            "radial" => Ok(ModelKind::Radial),
            "count" => Ok(ModelKind::Count),
            "window" => Ok(ModelKind::Window),
            other => Err(Error::contract(format!("unknown model `{other}`; expected offset, radial, count or window"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub initial_damping: f64,
    pub max_iterations: usize,
    /// Relative cost-change threshold for convergence.
    pub tolerance: f64,
    /// Costs at or below this count as an exact fit.
    pub cost_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            initial_damping: 1e-3,
            max_iterations: 200,
            tolerance: 1e-10,
            cost_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

fn is_rank_deficient(j: &DMatrix<f64>) -> bool {
    // scale columns so parameter units do not masquerade as degeneracy
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 || !n.is_finite() {
            return true;
        }
        col /= n;
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    !(min > 1e-10 * max)
}

/// Minimizes `0.5 |r(x)|^2` where `f(x)` returns residuals and Jacobian.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    let (mut r, mut j) = f(x.as_slice());
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = opts.initial_damping;
    let outcome = |x: &DVector<f64>, cost, iterations, converged, diagnostic| LmOutcome {
        x: x.as_slice().to_vec(),
        cost,
        iterations,
        converged,
        diagnostic,
    };

    if !cost.is_finite() {
        return outcome(&x, cost, 0, false, Some("non-finite residual at the initial guess".into()));
    }
    if r.len() < x.len() || is_rank_deficient(&j) {
        return outcome(&x, cost, 0, false, Some("rank-deficient Jacobian at the initial guess".into()));
    }

    for iter in 1..=opts.max_iterations {
        if cost <= opts.cost_floor {
            return outcome(&x, cost, iter - 1, true, None);
        }
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let x_new = &x + &step;
            let (r_new, j_new) = f(x_new.as_slice());
            let cost_new = 0.5 * r_new.norm_squared();
            if cost_new.is_finite() && cost_new < cost {
                let rel = (cost - cost_new) / cost;
                let small_step = step.norm() <= 1e-15 * (x.norm() + 1e-15);
                x = x_new;
                r = r_new;
                j = j_new;
                cost = cost_new;
                lambda = (lambda / 10.0).max(1e-12);
                if rel < opts.tolerance || small_step {
                    return outcome(&x, cost, iter, true, None);
                }
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent left: either a stationary point or a numerical dead end
            let stationary = g.norm() <= 1e-8 * (j.norm() * r.norm() + f64::MIN_POSITIVE);
            let diag = (!stationary).then(|| "damping exhausted without reducing the cost".into());
            return outcome(&x, cost, iter, stationary, diag);
        }
        if is_rank_deficient(&j) {
            return outcome(&x, cost, iter, false, Some("Jacobian became rank-deficient".into()));
        }
    }
    outcome(
        &x,
        cost,
        opts.max_iterations,
        false,
        Some(format!("no convergence within {} iterations", opts.max_iterations)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelKind,
    pub values: Vec<f64>,
    /// `1 - SS_res / SS_tot`; `None` when the targets have zero variance.
    pub r_squared: Option<f64>,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
    pub samples: usize,
}

impl FitResult {
    pub fn names(&self) -> &'static [&'static str] {
        self.model.param_names()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names().iter().position(|n| *n == name).map(|i| self.values[i])
    }

    /// Writes the fitted values into a full parameter set.
    pub fn apply(&self, params: &mut ArtifactModelParams) {
        *params = self.model.with_values(params, &self.values);
    }
}

/// Goodness of fit of `params` for `model` on `samples`: `(R², RMSE)`.
pub fn goodness_of_fit(
    samples: &[(MirrorState, ArtifactFeatures)],
    model: ModelKind,
    params: &ArtifactModelParams,
) -> (Option<f64>, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (None, 0.0);
    }
    let targets: Vec<f64> = samples.iter().map(|(_, f)| model.target(f)).collect();
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = samples
        .iter()
        .zip(&targets)
        .map(|((s, _), y)| (model.evaluate(s, params).0 - y).powi(2))
        .sum();
    // zero variance up to the rounding of the mean itself
    let y_max = targets.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let floor = n * (4.0 * f64::EPSILON * y_max).powi(2);
    let r2 = (ss_tot > floor).then(|| 1.0 - ss_res / ss_tot);
    (r2, (ss_res / n).sqrt())
}

fn ols(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let cols = rows.first()?.len();
    if rows.len() < cols {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    sol.iter().all(|v| v.is_finite()).then(|| sol.as_slice().to_vec())
}

/// Starting point from linearized forms of each model.
pub fn initial_guess(samples: &[(MirrorState, ArtifactFeatures)], model: ModelKind) -> Vec<f64> {
    let defaults = ArtifactModelParams::default();
    let fallback: Vec<f64> = model
        .param_names()
        .iter()
        .map(|n| defaults.get(n).expect("known key"))
        .collect();
    let y: Vec<f64> = samples.iter().map(|(_, f)| model.target(f)).collect();
    match model {
        ModelKind::Offset => {
            let rows: Vec<Vec<f64>> = samples
                .iter()
                .map(|(s, _)| vec![s.d * (2.0 * s.theta_rad()).tan(), 1.0])
                .collect();
            ols(&rows, &y).unwrap_or(fallback)
        }
        ModelKind::Radial => {
            // ln R = ln cR + n ln d + a1 t + (a2 - a1^2 / 2) t^2 + O(t^3)
            let (rows, ly): (Vec<Vec<f64>>, Vec<f64>) = samples
                .iter()
                .zip(&y)
                .filter(|(_, &r)| r > 0.0)
                .map(|((s, _), &r)| {
                    let t = s.theta_rad();
                    (vec![1.0, s.d.ln(), t, t * t], r.ln())
                })
                .unzip();
            match ols(&rows, &ly) {
                Some(c) => vec![c[0].exp(), c[1], c[2], c[3] + 0.5 * c[2] * c[2]],
                None => fallback,
            }
        }
        ModelKind::Count => {
            // ln N = ln c0 + b ln A + g ln cos t - (d - mu)^2 / (2 s^2), a quadratic in d
            let (rows, ly): (Vec<Vec<f64>>, Vec<f64>) = samples
                .iter()
                .zip(&y)
                .filter(|(s, &n)| n > 0.0 && s.0.theta_rad().cos() > 0.0)
                .map(|((s, _), &n)| {
                    (
                        vec![1.0, s.area.ln(), s.theta_rad().cos().ln(), s.d, s.d * s.d],
                        n.ln(),
                    )
                })
                .unzip();
            if let Some(c) = ols(&rows, &ly).filter(|c| c[4] < 0.0) {
                let s2 = -0.5 / c[4];
                let mu = c[3] * s2;
                return vec![(c[0] + 0.5 * mu * mu / s2).exp(), c[1], c[2], mu, s2.sqrt()];
            }
            // peak location and a quarter of the distance span
            let (mut d_lo, mut d_hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut peak = (0.0, f64::NEG_INFINITY);
            for ((s, _), &n) in samples.iter().zip(&y) {
                d_lo = d_lo.min(s.d);
                d_hi = d_hi.max(s.d);
                if n > peak.1 {
                    peak = (s.d, n);
                }
            }
            vec![peak.1.max(1.0), 1.0, 1.0, peak.0, ((d_hi - d_lo) / 4.0).max(1e-3)]
        }
        ModelKind::Window => window_guess(samples).unwrap_or(fallback),
    }
}

/// Locates the 0.5 crossings of each `(θ, A)` sweep and regresses the window
/// edges on `[1, θ, A]`.
fn window_guess(samples: &[(MirrorState, ArtifactFeatures)]) -> Option<Vec<f64>> {
    let mut groups: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for (s, f) in samples {
        groups
            .entry((s.theta_deg.to_bits(), s.area.to_bits()))
            .or_default()
            .push((s.d, f.p_app));
    }
    let mut rise_rows = Vec::new();
    let mut rise_y = Vec::new();
    let mut fall_rows = Vec::new();
    let mut fall_y = Vec::new();
    for ((tb, ab), mut pts) in groups {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (theta, area) = (f64::from_bits(tb), f64::from_bits(ab));
        let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (0.5 - a.1) * (b.0 - a.0) / (b.1 - a.1);
        if let Some(w) = pts.windows(2).find(|w| w[0].1 < 0.5 && w[1].1 >= 0.5) {
            rise_rows.push(vec![1.0, theta, area]);
            rise_y.push(cross(w[0], w[1]));
        }
        if let Some(w) = pts.windows(2).rev().find(|w| w[0].1 >= 0.5 && w[1].1 < 0.5) {
            fall_rows.push(vec![1.0, theta, area]);
            fall_y.push(cross(w[0], w[1]));
        }
    }
    let lo = ols(&rise_rows, &rise_y)?;
    let hi = ols(&fall_rows, &fall_y)?;
    Some(vec![lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]])
}

/// Fits `model` to `(state, observed features)` samples.
///
/// With `initial = None` the starting values come from [`initial_guess`] and
/// the fixed window steepness `k` from the default parameters.
pub fn fit_models(
    samples: &[(MirrorState, ArtifactFeatures)],
    model: ModelKind,
    initial: Option<&ArtifactModelParams>,
) -> Result<FitResult> {
    fit_models_with(samples, model, initial, &FitOptions::default())
}

/// How residuals are scaled before squaring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Plain residuals `model - y`.
    #[default]
    Uniform,
    /// Residuals divided by `|y|` (floored at 1e-3 of the largest target):
    /// the maximum-likelihood choice when noise scales with the signal.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub lm: LmOptions,
    pub weighting: Weighting,
}

pub fn fit_models_with(
    samples: &[(MirrorState, ArtifactFeatures)],
    model: ModelKind,
    initial: Option<&ArtifactModelParams>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n_params = model.param_names().len();
    if samples.len() < 2 * n_params {
        return Err(Error::InsufficientData(format!(
            "{model} fit needs at least {} samples, got {}",
            2 * n_params,
            samples.len()
        )));
    }
    let base = initial.copied().unwrap_or_default();
    let x0: Vec<f64> = match initial {
        Some(p) => model
            .param_names()
            .iter()
            .map(|n| p.get(n).expect("known key"))
            .collect(),
        None => initial_guess(samples, model),
    };
    let targets: Vec<f64> = samples.iter().map(|(_, f)| model.target(f)).collect();
    let y_max = targets.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let weights: Vec<f64> = match opts.weighting {
        Weighting::Uniform => vec![1.0; targets.len()],
        Weighting::Relative => {
            let floor = (1e-3 * y_max).max(f64::MIN_POSITIVE);
            targets.iter().map(|y| 1.0 / y.abs().max(floor)).collect()
        }
    };
    // residuals at the rounding level of the targets cannot be improved on
    let noise_floor: f64 = targets
        .iter()
        .zip(&weights)
        .map(|(y, w)| (16.0 * f64::EPSILON * y_max.max(y.abs()) * w).powi(2))
        .sum();
    let lm = LmOptions {
        cost_floor: opts.lm.cost_floor.max(0.5 * noise_floor),
        ..opts.lm.clone()
    };
    let residuals = |x: &[f64]| {
        let p = model.with_values(&base, x);
        let mut r = DVector::zeros(samples.len());
        let mut j = DMatrix::zeros(samples.len(), n_params);
        for (i, (s, _)) in samples.iter().enumerate() {
            let (v, grad) = model.evaluate(s, &p);
            r[i] = weights[i] * (v - targets[i]);
            for (k, g) in grad.into_iter().enumerate() {
                j[(i, k)] = weights[i] * g;
            }
        }
        (r, j)
    };
    let out = levenberg_marquardt(residuals, &x0, &lm);
    let fitted = model.with_values(&base, &out.x);
    let (r_squared, rmse) = goodness_of_fit(samples, model, &fitted);
    Ok(FitResult {
        model,
        values: out.x,
        r_squared,
        rmse,
        iterations: out.iterations,
        converged: out.converged,
        diagnostic: out.diagnostic,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_central_differences() {
        let base = ArtifactModelParams::default();
        let states = [
            MirrorState::new(2.3, 25.0, 0.36).unwrap(),
            MirrorState::new(1.4, 12.0, 0.18).unwrap(),
            MirrorState::new(3.4, 35.0, 0.6).unwrap(),
        ];
        for model in ModelKind::ALL {
            for s in &states {
                let (_, grad) = model.evaluate(s, &base);
                for (k, name) in model.param_names().iter().enumerate() {
                    let h = 1e-6 * base.get(name).unwrap().abs().max(1e-3);
                    let mut hi = base;
                    *hi.slot(name).unwrap() += h;
                    let mut lo = base;
                    *lo.slot(name).unwrap() -= h;
                    let fd = (model.evaluate(s, &hi).0 - model.evaluate(s, &lo).0) / (2.0 * h);
                    let scale = fd.abs().max(1e-4);
                    assert!(
                        (fd - grad[k]).abs() / scale < 1e-5,
                        "{model} d/d{name}: analytic {} vs fd {fd}",
                        grad[k]
                    );
                }
            }
        }
    }

    #[test]
    fn lm_solves_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let out = levenberg_marquardt(
            |p| {
                let r = DVector::from_iterator(4, xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y));
                let j = DMatrix::from_fn(4, 2, |i, k| if k == 0 { xs[i] } else { 1.0 });
                (r, j)
            },
            &[0.0, 0.0],
            &LmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let s = MirrorState::new(2.0, 10.0, 0.2).unwrap();
        let f = ArtifactFeatures {
            r_artifact: 2.0,
            x_artifact: 0.5,
            n_artifact: 10.0,
            p_app: 1.0,
        };
        assert!(matches!(
            fit_models(&[(s, f); 3], ModelKind::Offset, None),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn constant_targets_report_undefined_r_squared() {
        // θ = 0 everywhere: X is the bias alone and cX is unidentifiable
        let samples: Vec<_> = (1..=8)
            .map(|i| {
                (
                    MirrorState::new(i as f64, 0.0, 0.2).unwrap(),
                    ArtifactFeatures {
                        r_artifact: 1.0,
                        x_artifact: -0.05,
                        n_artifact: 1.0,
                        p_app: 1.0,
                    },
                )
            })
            .collect();
        let fit = fit_models(&samples, ModelKind::Offset, None).unwrap();
        assert_eq!(fit.r_squared, None);
        assert!(!fit.converged);
        assert!(fit.diagnostic.unwrap().contains("rank-deficient"));
        assert!(fit.rmse.is_finite());
    }
}
