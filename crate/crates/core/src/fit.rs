//! Generating slope/bias tables.
//!
//! Two independent routes produce a [`PiecewiseLinearFn`]:
//!
//! * [`fit_mlp`] trains a one-hidden-layer ReLU network whose hidden units
//!   become the breakpoints, then [`extract_pwl`] reads the segments off
//!   the trained weights. This is the mapper's compile-time path.
//! * [`fit_direct`] is a brute-force reference: dense sampling, greedy
//!   least-squares segmentation and a bisection on the worst-case residual.
//!   Its error is the yardstick the trained fits are held against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{eval_exact, FunctionId, Interval};
use crate::pwl::PiecewiseLinearFn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub samples: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            samples: 4096,
            iterations: 2000,
            learning_rate: 3e-3,
            seed: 0,
        }
    }
}

/// `x -> output_bias + sum_i output_weights[i] * relu(hidden_weights[i] * x + hidden_biases[i])`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpApproximator {
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpApproximator {
    pub fn new(
        hidden_weights: Vec<f64>,
        hidden_biases: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        let mlp = Self {
            hidden_weights,
            hidden_biases,
            output_weights,
            output_bias,
        };
        mlp.validate()?;
        Ok(mlp)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_weights.len();
        if h == 0 || self.hidden_biases.len() != h || self.output_weights.len() != h {
            return Err(Error::InvalidArgument(format!(
                "MLP layer sizes disagree: {} / {} / {}",
                h,
                self.hidden_biases.len(),
                self.output_weights.len()
            )));
        }
        let finite = self
            .hidden_weights
            .iter()
            .chain(&self.hidden_biases)
            .chain(&self.output_weights)
            .all(|v| v.is_finite())
            && self.output_bias.is_finite();
        if !finite {
            return Err(Error::InvalidArgument("MLP weights must be finite".into()));
        }
        Ok(())
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_weights.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.units()
            .map(|(w, c, v)| v * (w * x + c).max(0.0))
            .fold(self.output_bias, |acc, t| acc + t)
    }

    fn units(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.hidden_weights
            .iter()
            .zip(&self.hidden_biases)
            .zip(&self.output_weights)
            .map(|((&w, &c), &v)| (w, c, v))
    }
}

/// Reads the segments off a ReLU network.
///
/// Kinks `-c_i / w_i` inside `domain` become breakpoints (sorted, with
/// coincident kinks merged). Each segment's slope and bias sum the
/// contributions of the units active inside it. With no kink in the domain
/// the result is a single segment starting at `domain.lo`.
pub fn extract_pwl(mlp: &MlpApproximator, function_id: FunctionId, domain: Interval) -> Result<PiecewiseLinearFn> {
    mlp.validate()?;
    domain.validate()?;
    let tol = 1e-9 * domain.width();
    let mut kinks: Vec<f64> = mlp
        .units()
        .filter(|&(w, _, _)| w != 0.0)
        .map(|(w, c, _)| -c / w)
        .filter(|&k| k >= domain.lo - tol && k <= domain.hi + tol)
        .collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
    if kinks.is_empty() {
        kinks.push(domain.lo);
    }

    let mut slopes = Vec::with_capacity(kinks.len());
    let mut biases = Vec::with_capacity(kinks.len());
    for (i, &left) in kinks.iter().enumerate() {
        let right = kinks.get(i + 1).copied().unwrap_or(domain.hi);
        let (mut a, mut b) = (0.0, mlp.output_bias);
        for (w, c, v) in mlp.units() {
            let active = if right > left {
                w * (0.5 * (left + right)) + c > 0.0
            } else {
                // zero-width tail segment: active just right of `left`
                let z = w * left + c;
                z > 0.0 || (z == 0.0 && w > 0.0)
            };
            if active {
                a += v * w;
                b += v * c;
            }
        }
        slopes.push(a);
        biases.push(b);
    }
    PiecewiseLinearFn::new(function_id, domain, kinks, slopes, biases)
}

/// Trains the approximator for a named function.
pub fn fit_mlp(
    function_id: FunctionId,
    breakpoint_count: usize,
    domain: Interval,
    train: &TrainConfig,
) -> Result<MlpApproximator> {
    let target = sample_target(function_id, domain, train.samples)?;
    train_mlp(&target, breakpoint_count, domain, train)
}

/// Trains the approximator against an arbitrary target function.
pub fn fit_mlp_with(
    target: impl Fn(f64) -> f64,
    breakpoint_count: usize,
    domain: Interval,
    train: &TrainConfig,
) -> Result<MlpApproximator> {
    domain.validate()?;
    let ys: Vec<f64> = domain.grid(train.samples).map(target).collect();
    train_mlp(&ys, breakpoint_count, domain, train)
}

fn sample_target(function_id: FunctionId, domain: Interval, samples: usize) -> Result<Vec<f64>> {
    domain.validate()?;
    domain.grid(samples).map(|x| eval_exact(function_id, x)).collect()
}

/// Full-batch training on a uniform grid with squared-error loss.
///
/// Every hidden unit is `relu(t - k_j)` in normalized coordinates
/// (`t = (x - lo) / width`, target scaled to unit range). Unit 0 keeps its
/// kink at `t = 0`, so the first extracted breakpoint lands on `domain.lo`.
/// Each iteration solves the output layer exactly by least squares for the
/// current kinks, then moves the kinks by a fixed-step Adam update on the
/// resulting loss gradient. The output layer is solved in the equivalent
/// hat-function basis, which turns the normal equations tridiagonal.
fn train_mlp(ys: &[f64], hidden: usize, domain: Interval, cfg: &TrainConfig) -> Result<MlpApproximator> {
    if hidden == 0 {
        return Err(Error::InvalidArgument("breakpoint count must be at least 1".into()));
    }
    if cfg.samples < 2 || ys.len() != cfg.samples {
        return Err(Error::InvalidArgument("training needs at least 2 samples".into()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument("target is not finite on the domain".into()));
    }
    let n = ys.len();
    let ts: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let (ymin, ymax) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let yscale = if ymax > ymin { ymax - ymin } else { 1.0 };
    let targets: Vec<f64> = ys.iter().map(|y| (y - ymin) / yscale).collect();

    let h = hidden;
    let min_gap = 0.5 / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // knots[0] = 0 (pinned unit), knots[1..h] free, knots[h] = 1 (domain edge)
    let mut knots = curvature_quantiles(&targets, h);
    for j in 1..h {
        let spacing = knots[j + 1] - knots[j - 1];
        knots[j] += rng.gen_range(-0.15..0.15) * spacing;
    }
    separate_knots(&mut knots, min_gap);

    let mut m = vec![0.0; h + 1];
    let mut v = vec![0.0; h + 1];
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-12);
    let mut nodal = solve_nodal_values(&ts, &targets, &knots);
    for it in 0..cfg.iterations {
        let grad = knot_gradient(&ts, &targets, &knots, &nodal);
        if nodal.iter().chain(&grad).any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged { iteration: it, seed: cfg.seed });
        }
        let step = it as i32 + 1;
        let (c1, c2) = (1.0 - beta1.powi(step), 1.0 - beta2.powi(step));
        for j in 1..h {
            m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
            knots[j] -= cfg.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::TrainingDiverged { iteration: it, seed: cfg.seed });
        }
        separate_knots(&mut knots, min_gap);
        nodal = solve_nodal_values(&ts, &targets, &knots);
    }
    let loss = residuals(&ts, &targets, &knots, &nodal).map(|(_, _, r, _)| r * r).sum::<f64>() / n as f64;
    if !loss.is_finite() {
        return Err(Error::TrainingDiverged { iteration: cfg.iterations, seed: cfg.seed });
    }

    // g(t) = nodal[0] + sum_j (s_j - s_{j-1}) relu(t - k_j), s_{-1} = 0,
    // then t = (x - lo) / width and y = ymin + yscale * g.
    let width = domain.width();
    let mut hidden_weights = Vec::with_capacity(h);
    let mut hidden_biases = Vec::with_capacity(h);
    let mut output_weights = Vec::with_capacity(h);
    let mut prev_slope = 0.0;
    for j in 0..h {
        let slope = (nodal[j + 1] - nodal[j]) / (knots[j + 1] - knots[j]);
        hidden_weights.push(1.0 / width);
        hidden_biases.push(-domain.lo / width - knots[j]);
        output_weights.push((slope - prev_slope) * yscale);
        prev_slope = slope;
    }
    let output_bias = ymin + yscale * nodal[0];
    MlpApproximator::new(hidden_weights, hidden_biases, output_weights, output_bias)
}

/// Knots at the quantiles of `|f''|^(2/5)`, the density that asymptotically
/// minimizes squared error of a free-knot linear spline.
fn curvature_quantiles(ys: &[f64], h: usize) -> Vec<f64> {
    let n = ys.len();
    let mut density = vec![0.0; n];
    for k in 1..n.saturating_sub(1) {
        density[k] = (ys[k + 1] - 2.0 * ys[k] + ys[k - 1]).abs();
    }
    if n > 2 {
        density[0] = density[1];
        density[n - 1] = density[n - 2];
    }
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-3 * peak + f64::MIN_POSITIVE;
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for d in &density {
        acc += (d + floor).powf(0.4);
        cumulative.push(acc);
    }
    let mut knots = vec![0.0; h + 1];
    knots[h] = 1.0;
    let mut k = 0;
    for (j, knot) in knots.iter_mut().enumerate().take(h).skip(1) {
        let goal = acc * j as f64 / h as f64;
        while k + 1 < n && cumulative[k] < goal {
            k += 1;
        }
        *knot = k as f64 / (n - 1) as f64;
    }
    knots
}

/// Sorts interior knots and keeps them `min_gap` apart inside (0, 1).
fn separate_knots(knots: &mut [f64], min_gap: f64) {
    let h = knots.len() - 1;
    knots[1..h].sort_by(f64::total_cmp);
    for j in 1..h {
        let lo = knots[j - 1] + min_gap;
        let hi = 1.0 - min_gap * (h - j) as f64;
        knots[j] = knots[j].clamp(lo, hi.max(lo));
    }
}

/// `(segment, lambda, residual, slope)` for every sample, where `lambda` is
/// the position inside the segment and `residual = g(t) - y`.
fn residuals<'a>(
    ts: &'a [f64],
    ys: &'a [f64],
    knots: &'a [f64],
    nodal: &'a [f64],
) -> impl Iterator<Item = (usize, f64, f64, f64)> + 'a {
    let last = knots.len() - 2;
    let mut seg = 0;
    ts.iter().zip(ys).map(move |(&t, &y)| {
        while seg < last && t >= knots[seg + 1] {
            seg += 1;
        }
        let width = knots[seg + 1] - knots[seg];
        let lambda = (t - knots[seg]) / width;
        let g = nodal[seg] * (1.0 - lambda) + nodal[seg + 1] * lambda;
        let slope = (nodal[seg + 1] - nodal[seg]) / width;
        (seg, lambda, g - y, slope)
    })
}

/// Least-squares values at the knots of the continuous interpolant.
fn solve_nodal_values(ts: &[f64], ys: &[f64], knots: &[f64]) -> Vec<f64> {
    let size = knots.len();
    let mut diag = vec![0.0; size];
    let mut off = vec![0.0; size - 1];
    let mut rhs = vec![0.0; size];
    let zeros = vec![0.0; size];
    for ((seg, lambda, _, _), &y) in residuals(ts, ys, knots, &zeros).zip(ys) {
        let (l, r) = (1.0 - lambda, lambda);
        diag[seg] += l * l;
        diag[seg + 1] += r * r;
        off[seg] += l * r;
        rhs[seg] += l * y;
        rhs[seg + 1] += r * y;
    }
    let ridge = 1e-12 * diag.iter().sum::<f64>() / size as f64;
    diag.iter_mut().for_each(|d| *d += ridge);
    // Thomas algorithm on the symmetric tridiagonal system
    let mut c = vec![0.0; size];
    let mut d = vec![0.0; size];
    c[0] = if size > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..size {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < size {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..size - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Gradient of the mean squared error with respect to each knot, output
/// values held at their least-squares optimum.
fn knot_gradient(ts: &[f64], ys: &[f64], knots: &[f64], nodal: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; knots.len()];
    let scale = 2.0 / ts.len() as f64;
    for (seg, lambda, r, slope) in residuals(ts, ys, knots, nodal) {
        // moving the right knot stretches the segment, moving the left one shifts it
        grad[seg + 1] -= scale * r * slope * lambda;
        grad[seg] -= scale * r * slope * (1.0 - lambda);
    }
    grad
}

/// Reference fitter for a named function.
pub fn fit_direct(
    function_id: FunctionId,
    breakpoint_count: usize,
    domain: Interval,
    samples: usize,
) -> Result<PiecewiseLinearFn> {
    check_direct_args(breakpoint_count, samples)?;
    let ys = sample_target(function_id, domain, samples)?;
    direct_fit(function_id, &ys, breakpoint_count, domain)
}

/// Reference fitter against an arbitrary target, labelled `function_id`.
pub fn fit_direct_with(
    function_id: FunctionId,
    target: impl Fn(f64) -> f64,
    breakpoint_count: usize,
    domain: Interval,
    samples: usize,
) -> Result<PiecewiseLinearFn> {
    check_direct_args(breakpoint_count, samples)?;
    domain.validate()?;
    let ys: Vec<f64> = domain.grid(samples).map(target).collect();
    direct_fit(function_id, &ys, breakpoint_count, domain)
}

fn check_direct_args(breakpoint_count: usize, samples: usize) -> Result<()> {
    if breakpoint_count == 0 {
        return Err(Error::InvalidArgument("breakpoint count must be at least 1".into()));
    }
    if breakpoint_count > samples {
        return Err(Error::InvalidArgument(format!(
            "{breakpoint_count} breakpoints exceed {samples} samples"
        )));
    }
    if samples < 10 * breakpoint_count {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for {breakpoint_count} breakpoints",
            10 * breakpoint_count
        )));
    }
    Ok(())
}

/// Least-squares line through `xs[s..e]`, `ys[s..e]` and its worst residual.
fn ls_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let bias = my - slope * mx;
    let worst = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (slope * x + bias - y).abs())
        .fold(0.0, f64::max);
    (slope, bias, worst)
}

/// Greedy left-to-right segmentation where every segment's least-squares
/// residual stays within `eps`. Returns segment start indices, or `None`
/// once more than `max_segments` are needed.
fn segment_greedy(xs: &[f64], ys: &[f64], eps: f64, max_segments: usize) -> Option<Vec<usize>> {
    let n = xs.len();
    let fits = |s: usize, e: usize| ls_line(&xs[s..e], &ys[s..e]).2 <= eps;
    let mut starts = Vec::new();
    let mut s = 0;
    while s < n {
        if starts.len() == max_segments {
            return None;
        }
        starts.push(s);
        // gallop for an infeasible end, then bisect back
        let mut good = (s + 2).min(n);
        let mut step = 2;
        let mut bad = None;
        while good < n {
            let probe = (good + step).min(n);
            if fits(s, probe) {
                good = probe;
                step *= 2;
            } else {
                bad = Some(probe);
                break;
            }
        }
        if let Some(mut bad) = bad {
            while bad - good > 1 {
                let mid = good + (bad - good) / 2;
                if fits(s, mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
        }
        s = good;
    }
    Some(starts)
}

fn direct_fit(function_id: FunctionId, ys: &[f64], segments: usize, domain: Interval) -> Result<PiecewiseLinearFn> {
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument("target is not finite on the domain".into()));
    }
    let xs: Vec<f64> = domain.grid(ys.len()).collect();
    let mut hi = ls_line(&xs, ys).2;
    let mut best = segment_greedy(&xs, ys, hi, segments).expect("one segment always fits its own residual");
    if let Some(exact) = segment_greedy(&xs, ys, 0.0, segments) {
        best = exact;
    } else {
        let mut lo = 0.0;
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi.max(f64::MIN_POSITIVE) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match segment_greedy(&xs, ys, mid, segments) {
                Some(starts) => {
                    best = starts;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
    }

    let mut breakpoints = Vec::with_capacity(best.len());
    let mut slopes = Vec::with_capacity(best.len());
    let mut biases = Vec::with_capacity(best.len());
    for (i, &s) in best.iter().enumerate() {
        let e = best.get(i + 1).copied().unwrap_or(xs.len());
        let (a, b, _) = ls_line(&xs[s..e], &ys[s..e]);
        breakpoints.push(xs[s]);
        slopes.push(a);
        biases.push(b);
    }
    PiecewiseLinearFn::new(function_id, domain, breakpoints, slopes, biases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{error_metrics, error_metrics_with};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn direct_identity_single_segment() {
        let pwl = fit_direct(FunctionId::Identity, 1, iv(-1.0, 1.0), 100).unwrap();
        assert_eq!(pwl.len(), 1);
        assert!((pwl.slopes()[0] - 1.0).abs() < 1e-12);
        assert!(pwl.biases()[0].abs() < 1e-12);
        let r = error_metrics(&pwl, FunctionId::Identity, pwl.domain(), 100).unwrap();
        assert!(r.max_abs_error < 1e-12);
    }

    #[test]
    fn direct_argument_errors() {
        assert!(fit_direct(FunctionId::Exp, 20, iv(-8.0, 0.0), 10).is_err());
        assert!(fit_direct(FunctionId::Exp, 16, iv(-8.0, 0.0), 100).is_err());
        assert!(fit_direct(FunctionId::Exp, 0, iv(-8.0, 0.0), 100).is_err());
    }

    #[test]
    fn direct_more_segments_never_worse() {
        let d = iv(-4.0, 4.0);
        let e8 = error_metrics(&fit_direct(FunctionId::Gelu, 8, d, 4096).unwrap(), FunctionId::Gelu, d, 4096).unwrap();
        let e16 = error_metrics(&fit_direct(FunctionId::Gelu, 16, d, 4096).unwrap(), FunctionId::Gelu, d, 4096).unwrap();
        assert!(e16.max_abs_error <= e8.max_abs_error);
        assert!(e16.max_abs_error < 0.01, "{}", e16.max_abs_error);
    }

    #[test]
    fn direct_is_deterministic() {
        let a = fit_direct(FunctionId::Sigmoid, 8, iv(-6.0, 6.0), 4096).unwrap();
        let b = fit_direct(FunctionId::Sigmoid, 8, iv(-6.0, 6.0), 4096).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= 8);
    }

    #[test]
    fn mlp_linear_target_is_exact() {
        let d = iv(-1.0, 1.0);
        let cfg = TrainConfig { iterations: 500, ..TrainConfig::default() };
        let mlp = fit_mlp_with(|x| 2.0 * x + 1.0, 4, d, &cfg).unwrap();
        let pwl = extract_pwl(&mlp, FunctionId::Identity, d).unwrap();
        assert!(pwl.len() <= 4);
        for (&a, &b) in pwl.slopes().iter().zip(pwl.biases()) {
            assert!((a - 2.0).abs() < 1e-3, "slope {a}");
            assert!((b - 1.0).abs() < 1e-3, "bias {b}");
        }
        let r = error_metrics_with(&pwl, |x| 2.0 * x + 1.0, d, 1000).unwrap();
        assert!(r.max_abs_error < 1e-3, "{}", r.max_abs_error);
    }

    #[test]
    fn mlp_training_is_deterministic_per_seed() {
        let d = iv(-6.0, 6.0);
        let cfg = TrainConfig { iterations: 200, seed: 7, ..TrainConfig::default() };
        let a = fit_mlp(FunctionId::Tanh, 8, d, &cfg).unwrap();
        let b = fit_mlp(FunctionId::Tanh, 8, d, &cfg).unwrap();
        assert_eq!(a, b);
        let c = fit_mlp(FunctionId::Tanh, 8, d, &TrainConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mlp_divergence_reported_with_seed() {
        // range overflows f64, so the normalized loss is NaN from the start
        let cfg = TrainConfig { iterations: 50, seed: 3, ..TrainConfig::default() };
        let err = fit_mlp_with(|x| 1e308 * x, 4, iv(-1.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { seed: 3, .. }), "{err:?}");
    }

    #[test]
    fn extract_single_relu() {
        let mlp = MlpApproximator::new(vec![1.0], vec![0.0], vec![1.0], 0.0).unwrap();
        let pwl = extract_pwl(&mlp, FunctionId::Identity, iv(-1.0, 1.0)).unwrap();
        assert_eq!(pwl.breakpoints(), &[0.0]);
        assert_eq!(pwl.segment(1), (1.0, 0.0));
        assert_eq!(pwl.eval(0.5), 0.5);
        // clamp-left: segment 1 extends left of the kink
        assert_eq!(pwl.eval(-0.5), -0.5);
    }

    #[test]
    fn extract_merges_coincident_kinks() {
        let mlp = MlpApproximator::new(
            vec![1.0, 2.0, 1.0],
            vec![0.0, 0.0, -0.5],
            vec![1.0, 1.0, -1.0],
            0.25,
        )
        .unwrap();
        let pwl = extract_pwl(&mlp, FunctionId::Identity, iv(-1.0, 1.0)).unwrap();
        assert_eq!(pwl.breakpoints(), &[0.0, 0.5]);
        for x in iv(0.0, 1.0).grid(101) {
            assert!((pwl.eval(x) - mlp.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_without_kinks_in_domain() {
        let mlp = MlpApproximator::new(vec![1.0, -1.0], vec![5.0, -7.0], vec![2.0, 3.0], 1.0).unwrap();
        let pwl = extract_pwl(&mlp, FunctionId::Identity, iv(-1.0, 1.0)).unwrap();
        assert_eq!(pwl.len(), 1);
        assert_eq!(pwl.breakpoints(), &[-1.0]);
        // unit 0 active (slope 2 * 1, bias 2 * 5), unit 1 inactive
        assert_eq!(pwl.segment(1), (2.0, 11.0));
    }

    #[test]
    fn extract_rejects_invalid_mlp() {
        assert!(MlpApproximator::new(vec![], vec![], vec![], 0.0).is_err());
        assert!(MlpApproximator::new(vec![1.0], vec![f64::INFINITY], vec![1.0], 0.0).is_err());
    }
}
