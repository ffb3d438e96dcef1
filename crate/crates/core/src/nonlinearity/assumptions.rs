//! Sampled checks of the structural hypotheses on f.
//!
//! The hypotheses are universally quantified, so every check here is a
//! finite-sample test over a symmetric s-grid and a decreasing λ-grid.

use serde::{Deserialize, Serialize};

use super::{Nonlinearity, NonlinearityKind};

const Q_MIN: f64 = 10.0 / 3.0;
const Q_MAX: f64 = 6.0;
// Relative slack for comparisons that are exact in real arithmetic.
const ROUNDOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    /// Total s-grid size, split evenly between the half-lines plus s = 0.
    pub points: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Decreasing λ values used for the uniform-convergence checks.
    pub lambdas: Vec<f64>,
    /// Closed interval [a, b] for the uniform convergence of λ^{p-1}f'(λ⁻¹s).
    pub interval: [f64; 2],
    pub epsilon: f64,
    pub chi: f64,
    /// Relative tolerance on the sup deviation at the smallest λ.
    pub uniform_tolerance: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            points: 2001,
            s_min: 1e-6,
            s_max: 1e3,
            lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            interval: [-10.0, 10.0],
            epsilon: 1e-2,
            chi: 1.0,
            uniform_tolerance: 1e-2,
        }
    }
}

impl SamplingSpec {
    /// Sorted grid: ±(log-spaced magnitudes in [s_min, s_max]) and 0.
    pub fn s_grid(&self) -> Vec<f64> {
        let half = (self.points.max(3) - 1) / 2;
        let (l0, l1) = (self.s_min.ln(), self.s_max.ln());
        let mags: Vec<f64> = (0..half)
            .map(|i| {
                if half == 1 {
                    self.s_max
                } else {
                    (l0 + (l1 - l0) * i as f64 / (half - 1) as f64).exp()
                }
            })
            .collect();
        let mut grid: Vec<f64> = mags.iter().rev().map(|m| -m).collect();
        grid.push(0.0);
        grid.extend(mags);
        grid
    }

    fn interval_grid(&self) -> Vec<f64> {
        let [a, b] = self.interval;
        let n = self.points.max(2);
        let mut g: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        g.extend(self.s_grid().into_iter().filter(|s| *s >= a && *s <= b));
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub passed: bool,
    /// Worst-case value of the quantity named in `detail`.
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaDeviation {
    pub lambda: f64,
    /// sup over the interval of |λ^{p-1}f'(λ⁻¹s) - p|s|^{p-1}|.
    pub interval_sup: f64,
    /// sup over |s| > χ of the same deviation divided by |s|^{p-1}.
    pub tail_ratio: f64,
}

/// Ratios of the observed deviation to the envelopes derived from the
/// uniform-convergence hypotheses, at the smallest λ. Values below 1 mean
/// the envelope holds on the sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMargins {
    /// |λᵖf(λ⁻¹s) - |s|^{p-1}s| / (ε|s|) on |s| ≤ χ+1.
    pub near: f64,
    /// Same deviation / (ε|s|ᵖ/p) on |s| > χ.
    pub far: f64,
    /// On the overlap χ < |s| ≤ χ+1 both envelopes apply; the smaller ratio.
    pub overlap_tighter: f64,
    /// |λ^{p+1}F(λ⁻¹s) - |s|^{p+1}/(p+1)| / (ε s²/2) on |s| ≤ χ+1.
    pub antiderivative_near: f64,
    /// Same deviation / (ε|s|^{p+1}/(p(p+1))) on |s| > χ.
    pub antiderivative_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub q: f64,
    pub l: f64,
    pub p: f64,
    /// f(s)s ≤ qF(s).
    pub f1: AssumptionCheck,
    /// F(s)/s² → 0 at 0 and F(s)/|s|^{10/3} → ∞ at ∞.
    pub f2: AssumptionCheck,
    /// [f(s)s - 2F(s)]/(|s|^{l-1}s) non-decreasing on each half-line.
    pub f3: AssumptionCheck,
    /// Uniform convergence of λ^{p-1}f'(λ⁻¹s) on the interval.
    pub a1: AssumptionCheck,
    /// Relative tail bound with constant ε beyond χ.
    pub a2: AssumptionCheck,
    pub deviations: Vec<LambdaDeviation>,
    pub envelopes: EnvelopeMargins,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.f1.passed && self.f2.passed && self.f3.passed && self.a1.passed && self.a2.passed
    }
}

impl Nonlinearity {
    /// Exponents (q, l) that the built-in families satisfy by construction:
    /// q from the largest power, l from the smallest.
    pub fn default_exponents(&self) -> (f64, f64) {
        let max = self.powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.powers.iter().copied().fold(f64::INFINITY, f64::min);
        match self.kind {
            NonlinearityKind::PowerDifference => (self.powers[0] + 1.0, self.powers[1] + 1.0),
            _ => (max + 1.0, min + 1.0),
        }
    }
}

pub fn check_assumptions(nl: &Nonlinearity, q: f64, l: f64, samples: &SamplingSpec) -> AssumptionReport {
    let grid = samples.s_grid();
    let p = nl.limit_exponent();
    let big_f = |s: f64| nl.eval_F(s).unwrap_or(f64::NAN);

    let f1 = check_f1(nl, q, &grid, &big_f);
    let f2 = check_f2(&grid, &big_f);
    let f3 = check_f3(nl, l, &grid, &big_f);

    let interval = samples.interval_grid();
    let deviations: Vec<LambdaDeviation> = samples
        .lambdas
        .iter()
        .map(|&lambda| LambdaDeviation {
            lambda,
            interval_sup: interval
                .iter()
                .map(|&s| derivative_deviation(nl, p, lambda, s))
                .fold(0.0, f64::max),
            tail_ratio: grid
                .iter()
                .filter(|s| s.abs() > samples.chi)
                .map(|&s| derivative_deviation(nl, p, lambda, s) / s.abs().powf(p - 1.0))
                .fold(0.0, f64::max),
        })
        .collect();

    let a1 = check_a1(p, samples, &deviations);
    let a2 = check_a2(samples, &deviations);
    let envelopes = envelope_margins(nl, p, samples, &grid);

    AssumptionReport { q, l, p, f1, f2, f3, a1, a2, deviations, envelopes }
}

fn check_f1(nl: &Nonlinearity, q: f64, grid: &[f64], big_f: &dyn Fn(f64) -> f64) -> AssumptionCheck {
    let in_range = q > Q_MIN && q < Q_MAX;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_rel = f64::NEG_INFINITY;
    let mut at = 0.0;
    for &s in grid {
        // Built-ins: Σ aᵢ|s|^{pᵢ+1}(1 - q/(pᵢ+1)), free of cancellation.
        let (gap, scale) = if nl.is_builtin() {
            let terms: Vec<f64> = nl
                .terms()
                .map(|(pi, a)| a * s.abs().powf(pi + 1.0) * (1.0 - q / (pi + 1.0)))
                .collect();
            (terms.iter().sum::<f64>(), terms.iter().map(|t| t.abs()).sum::<f64>())
        } else {
            let fs = nl.eval_f(s) * s;
            let qf = q * big_f(s);
            (fs - qf, fs.abs() + qf.abs())
        };
        let rel = if scale > 0.0 { gap / scale } else { 0.0 };
        if gap > worst {
            worst = gap;
        }
        if rel > worst_rel {
            worst_rel = rel;
            at = s;
        }
    }
    let passed = in_range && worst_rel <= ROUNDOFF;
    let detail = if !in_range {
        format!("q = {q} is outside (10/3, 6); max of f(s)s - qF(s) = {worst:e}")
    } else if passed {
        format!("max of f(s)s - qF(s) = {worst:e}")
    } else {
        format!("f(s)s > qF(s); worst relative gap {worst_rel:e} at s = {at:e}")
    };
    AssumptionCheck { passed, margin: worst, detail }
}

fn check_f2(grid: &[f64], big_f: &dyn Fn(f64) -> f64) -> AssumptionCheck {
    let positive: Vec<f64> = grid.iter().copied().filter(|s| *s > 0.0).collect();
    let decade = |lo: f64, hi: f64| -> Vec<f64> {
        positive.iter().copied().filter(|s| *s >= lo && *s <= hi).collect()
    };
    let s_lo = positive[0];
    let s_hi = *positive.last().unwrap();
    let small = decade(s_lo, 10.0 * s_lo);
    let large = decade(s_hi / 10.0, s_hi);

    let mut ok = true;
    let mut small_ratio: f64 = 0.0;
    let mut large_ratio = f64::INFINITY;
    for sign in [1.0, -1.0] {
        // Near 0: |F|/s² shrinks toward 0 as |s| decreases.
        let r: Vec<f64> = small.iter().map(|&s| (big_f(sign * s) / (s * s)).abs()).collect();
        ok &= r.windows(2).all(|w| w[0] <= w[1] * (1.0 + ROUNDOFF));
        ok &= r[0] < 1e-3;
        small_ratio = small_ratio.max(r[0]);
        // At ∞: F/|s|^{10/3} positive and growing.
        let r: Vec<f64> = large.iter().map(|&s| big_f(sign * s) / s.powf(Q_MIN)).collect();
        ok &= r.iter().all(|v| *v > 0.0);
        ok &= r.windows(2).all(|w| w[1] >= w[0] * (1.0 - ROUNDOFF));
        ok &= r.last().unwrap() > &r[0];
        large_ratio = large_ratio.min(*r.last().unwrap());
    }
    AssumptionCheck {
        passed: ok,
        margin: small_ratio,
        detail: format!(
            "|F(s)|/s² = {small_ratio:e} at |s| = {s_lo:e}; F(s)/|s|^(10/3) = {large_ratio:e} at |s| = {s_hi:e}"
        ),
    }
}

fn check_f3(nl: &Nonlinearity, l: f64, grid: &[f64], big_f: &dyn Fn(f64) -> f64) -> AssumptionCheck {
    let in_range = l > Q_MIN && l < Q_MAX;
    let ratio = |s: f64| (nl.eval_f(s) * s - 2.0 * big_f(s)) / (s.abs().powf(l - 1.0) * s);
    let mut worst: f64 = f64::INFINITY;
    let mut ok = true;
    for half in [
        grid.iter().copied().filter(|s| *s < 0.0).collect::<Vec<_>>(),
        grid.iter().copied().filter(|s| *s > 0.0).collect::<Vec<_>>(),
    ] {
        let v: Vec<f64> = half.iter().map(|&s| ratio(s)).collect();
        for w in v.windows(2) {
            let step = w[1] - w[0];
            let slack = ROUNDOFF * (w[0].abs() + w[1].abs());
            let normalized = step / (w[0].abs() + w[1].abs()).max(f64::MIN_POSITIVE);
            worst = worst.min(normalized);
            if step < -slack || !step.is_finite() {
                ok = false;
            }
        }
    }
    let passed = in_range && ok;
    AssumptionCheck {
        passed,
        margin: worst,
        detail: if in_range {
            format!("smallest normalized increment of the ratio = {worst:e}")
        } else {
            format!("l = {l} is outside (10/3, 6)")
        },
    }
}

fn derivative_deviation(nl: &Nonlinearity, p: f64, lambda: f64, s: f64) -> f64 {
    let direct = lambda.powf(p - 1.0) * nl.eval_fprime(s / lambda);
    let scaled = if direct.is_finite() { direct } else { nl.scaled_fprime_at(lambda, p, s).0 };
    (scaled - p * s.abs().powf(p - 1.0)).abs()
}

fn check_a1(p: f64, samples: &SamplingSpec, dev: &[LambdaDeviation]) -> AssumptionCheck {
    let [a, b] = samples.interval;
    let reference = p * a.abs().max(b.abs()).powf(p - 1.0);
    let monotone = dev
        .windows(2)
        .all(|w| w[1].interval_sup <= w[0].interval_sup + ROUNDOFF * reference);
    let last = dev.last().map_or(f64::INFINITY, |d| d.interval_sup);
    let rel = last / reference;
    let passed = monotone && rel <= samples.uniform_tolerance;
    AssumptionCheck {
        passed,
        margin: rel,
        detail: format!(
            "sup deviation on [{a}, {b}] {} in λ; relative value {rel:e} at the smallest λ",
            if monotone { "non-increasing" } else { "not monotone" }
        ),
    }
}

fn check_a2(samples: &SamplingSpec, dev: &[LambdaDeviation]) -> AssumptionCheck {
    let last = dev.last().map_or(f64::INFINITY, |d| d.tail_ratio);
    AssumptionCheck {
        passed: last < samples.epsilon,
        margin: last,
        detail: format!(
            "sup over |s| > {} of the deviation over |s|^(p-1) is {last:e} against ε = {}",
            samples.chi, samples.epsilon
        ),
    }
}

fn envelope_margins(nl: &Nonlinearity, p: f64, samples: &SamplingSpec, grid: &[f64]) -> EnvelopeMargins {
    let lambda = samples.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let (eps, chi) = (samples.epsilon, samples.chi);
    let mut m = EnvelopeMargins {
        near: 0.0,
        far: 0.0,
        overlap_tighter: 0.0,
        antiderivative_near: 0.0,
        antiderivative_far: 0.0,
    };
    for &s in grid.iter().filter(|s| **s != 0.0) {
        let a = s.abs();
        let df = (nl.scaled_f_at(lambda, p, s).0 - a.powf(p - 1.0) * s).abs();
        let dbig = (nl.scaled_F_at(lambda, p, s).0 - a.powf(p + 1.0) / (p + 1.0)).abs();
        let near = df / (eps * a);
        let far = df / (eps / p * a.powf(p));
        if a <= chi + 1.0 {
            m.near = m.near.max(near);
            m.antiderivative_near = m.antiderivative_near.max(dbig / (0.5 * eps * a * a));
        }
        if a > chi {
            m.far = m.far.max(far);
            m.antiderivative_far = m.antiderivative_far.max(dbig / (eps / (p * (p + 1.0)) * a.powf(p + 1.0)));
        }
        if a > chi && a <= chi + 1.0 {
            m.overlap_tighter = m.overlap_tighter.max(near.min(far));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = SamplingSpec::default().s_grid();
        assert_eq!(g.len(), 2001);
        assert_eq!(g[1000], 0.0);
        assert!((g[2000] - 1e3).abs() < 1e-9 && (g[1001] - 1e-6).abs() < 1e-18);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pure_cubic_passes_with_zero_f1_margin() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let r = check_assumptions(&nl, 4.0, 4.0, &SamplingSpec::default());
        assert!(r.all_passed(), "{r:#?}");
        assert_eq!(r.f1.margin, 0.0);
        assert!(r.deviations.iter().all(|d| d.interval_sup < 1e-12 * 300.0));
    }

    #[test]
    fn undersized_q_fails_f1() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let r = check_assumptions(&nl, 3.5, 4.0, &SamplingSpec::default());
        assert!(!r.f1.passed);
        assert!(r.f1.margin > 0.0);
        assert!(r.f2.passed && r.f3.passed);
    }

    #[test]
    fn difference_deviation_decreases_in_lambda() {
        let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
        let r = check_assumptions(&nl, 4.0, 3.5, &SamplingSpec::default());
        // Oracle: the deviation is exactly 2.5 λ^{1/2} |s|^{3/2}, maximal at |s| = 10.
        for d in &r.deviations {
            let oracle = 2.5 * d.lambda.sqrt() * 10f64.powf(1.5);
            assert!((d.interval_sup - oracle).abs() < 1e-9 * oracle, "{d:?}");
        }
        assert!(r.a1.passed && r.a2.passed && r.f2.passed && r.f3.passed);
    }

    #[test]
    fn power_sum_passes_with_default_exponents() {
        let nl = Nonlinearity::power_sum(&[2.6, 3.0, 3.8]).unwrap();
        let (q, l) = nl.default_exponents();
        assert_eq!((q, l), (4.8, 3.6));
        let r = check_assumptions(&nl, q, l, &SamplingSpec::default());
        assert!(r.all_passed(), "{r:#?}");
    }

    #[test]
    fn l_above_smallest_power_breaks_monotonicity() {
        let nl = Nonlinearity::power_sum(&[2.6, 3.8]).unwrap();
        let r = check_assumptions(&nl, 4.8, 4.5, &SamplingSpec::default());
        assert!(!r.f3.passed);
    }
}
