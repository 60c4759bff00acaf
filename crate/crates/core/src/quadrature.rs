//! Gauss-Hermite expectations over a centered normal distribution.
//!
//! Nodes are the zeros of the normalized Hermite function
//! `ψ_n(x) = H_n(x) e^{-x²/2} / sqrt(2ⁿ n! √π)`, evaluated by its three-term
//! recurrence, which stays in range for any `n`. Zeros are bracketed on a grid
//! finer than the smallest node spacing and polished with safeguarded Newton
//! steps. Nodes beyond `|x| = 12` carry weights below `e^{-144}` and are
//! dropped.
//!
//! Rules for node counts `64 · 2^k` are built on first use and cached for the
//! life of the process.

use std::sync::OnceLock;

/// Smallest rule used by [`expectation_adaptive`].
pub const MIN_NODES: usize = 64;
/// Largest rule [`expectation_adaptive`] will build.
pub const MAX_NODES: usize = 65_536;
/// Relative change between successive rules accepted as converged.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

const NODE_CUTOFF: f64 = 12.0;
const LEVELS: usize = 11; // 64 .. 65536
const ABS_FLOOR: f64 = 1e-14;

/// Nodes and probability weights such that `Σ wᵢ f(xᵢ) ≈ ∫ f(x) e^{-x²} dx / √π`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Recurrence coefficients `sqrt(2/j)` and `sqrt((j-1)/j)` for `j = 1..=n`.
struct Recurrence {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Recurrence {
    fn new(n: usize) -> Self {
        let (a, b) = (1..=n)
            .map(|j| {
                let jf = j as f64;
                ((2.0 / jf).sqrt(), ((jf - 1.0) / jf).sqrt())
            })
            .unzip();
        Self { a, b }
    }

    fn order(&self) -> usize {
        self.a.len()
    }

    /// `ψ_n(x)` and `ψ_{n-1}(x)`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let mut prev = 0.0;
        let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        for (a, b) in self.a.iter().zip(&self.b) {
            let next = a * x * cur - b * prev;
            prev = cur;
            cur = next;
        }
        (cur, prev)
    }

    /// `ψ_n` at several points at once; the independent recurrences
    /// interleave, which hides the latency of each one.
    fn eval_batch<const B: usize>(&self, xs: [f64; B]) -> [f64; B] {
        let mut prev = [0.0; B];
        let mut cur = xs.map(|x| std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
        for (a, b) in self.a.iter().zip(&self.b) {
            for k in 0..B {
                let next = a * xs[k] * cur[k] - b * prev[k];
                prev[k] = cur[k];
                cur[k] = next;
            }
        }
        cur
    }
}

fn polish(rec: &Recurrence, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sqrt_2n = (2.0 * rec.order() as f64).sqrt();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..40 {
        let (psi, psi_prev) = rec.eval(x);
        if psi == 0.0 {
            return x;
        }
        if (psi > 0.0) == (f_lo > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let dpsi = sqrt_2n * psi_prev - x * psi;
        let newton = x - psi / dpsi;
        // the recurrence carries rounding noise of order 1e-14 relative for
        // large n, so steps never shrink to machine epsilon
        let tol = 1e-14 * x.abs().max(1.0);
        if (newton - x).abs() <= tol {
            return newton;
        }
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= tol {
            return next;
        }
        x = next;
    }
    x
}

impl GaussHermite {
    /// Builds the `n`-point rule (`n ≥ 1`).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let turning = (2.0 * n as f64 + 1.0).sqrt();
        let extent = NODE_CUTOFF.min(turning + 1.0);
        // Spacing near the origin is about π / sqrt(2n+1) and grows outward.
        let step = 0.25 * std::f64::consts::PI / turning;
        let rec = Recurrence::new(n);

        const BATCH: usize = 8;
        let start = if n % 2 == 1 { step * 1e-3 } else { 0.0 };
        let count = ((extent - start) / step).ceil() as usize + 1;
        let grid: Vec<f64> = (0..count).map(|i| (start + step * i as f64).min(extent)).collect();
        let mut values = Vec::with_capacity(count + BATCH);
        for chunk in grid.chunks(BATCH) {
            let mut xs = [extent; BATCH];
            xs[..chunk.len()].copy_from_slice(chunk);
            values.extend_from_slice(&rec.eval_batch(xs)[..chunk.len()]);
        }

        let mut positive = Vec::new();
        for i in 1..count {
            let (x0, x1, f0, f1) = (grid[i - 1], grid[i], values[i - 1], values[i]);
            if x1 <= x0 {
                break;
            }
            if f1 == 0.0 {
                positive.push(x1);
            } else if f0 != 0.0 && (f0 > 0.0) != (f1 > 0.0) {
                positive.push(polish(&rec, x0, x1, f0));
            }
        }

        let mut nodes: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
        if n % 2 == 1 {
            nodes.push(0.0);
        }
        nodes.extend(positive.iter().copied());
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let weights = nodes
            .iter()
            .map(|&x| {
                let (_, psi_prev) = rec.eval(x);
                (-x * x).exp() / (n as f64 * psi_prev * psi_prev) * inv_sqrt_pi
            })
            .collect();
        Self { order: n, nodes, weights }
    }

    /// Cached rule with `64 · 2^level` nodes.
    pub fn level(level: usize) -> &'static GaussHermite {
        static RULES: [OnceLock<GaussHermite>; LEVELS] = [const { OnceLock::new() }; LEVELS];
        assert!(level < LEVELS, "rule level {level} beyond the cached range");
        RULES[level].get_or_init(|| GaussHermite::new(MIN_NODES << level))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Retained nodes, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Probability weights matching [`Self::nodes`]; they sum to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(X)]` for `X ~ N(0, σ²)`, each component of `f` separately.
    pub fn expectation<const K: usize>(&self, sigma: f64, f: &impl Fn(f64) -> [f64; K]) -> [f64; K] {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let mut acc = [0.0; K];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(scale * x);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        acc
    }
}

/// Result of an adaptive expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive<const K: usize> {
    pub value: [f64; K],
    /// Node count of the rule that produced `value`.
    pub nodes: usize,
    /// Largest relative change against the previous rule.
    pub rel_change: f64,
    pub converged: bool,
}

/// Doubles the rule from [`MIN_NODES`] until every component changes by less
/// than `rel_tol` (relative, with a 1e-14 absolute floor), or [`MAX_NODES`] is
/// reached.
pub fn expectation_adaptive<const K: usize>(sigma: f64, rel_tol: f64, f: impl Fn(f64) -> [f64; K]) -> Adaptive<K> {
    let mut prev = GaussHermite::level(0).expectation(sigma, &f);
    let mut rel_change = f64::INFINITY;
    for level in 1..LEVELS {
        let rule = GaussHermite::level(level);
        let cur = rule.expectation(sigma, &f);
        rel_change = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs() / b.abs().max(ABS_FLOOR))
            .fold(0.0, f64::max);
        let abs_ok = prev.iter().zip(&cur).all(|(a, b)| (a - b).abs() <= ABS_FLOOR);
        if rel_change < rel_tol || abs_ok {
            return Adaptive {
                value: cur,
                nodes: rule.order(),
                rel_change,
                converged: true,
            };
        }
        prev = cur;
    }
    Adaptive {
        value: prev,
        nodes: MAX_NODES,
        rel_change,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_tabulated_nodes() {
        // H_2 = 4x² - 2, H_3 = 8x³ - 12x
        let r2 = GaussHermite::new(2);
        assert!((r2.nodes()[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r2.weights()[0] - 0.5).abs() < 1e-15);
        let r3 = GaussHermite::new(3);
        assert!((r3.nodes()[2] - 1.5f64.sqrt()).abs() < 1e-14);
        assert!((r3.weights()[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn node_counts_and_weight_sums() {
        for level in 0..4 {
            let rule = GaussHermite::level(level);
            let n = rule.order();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} sum={total}");
            if n <= 64 {
                assert_eq!(rule.nodes().len(), n);
            }
            assert!(rule.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn even_moments_of_the_normal_distribution() {
        let rule = GaussHermite::level(0);
        let sigma = 1.7;
        let [m2, m4, m6] = rule.expectation(sigma, &|x| [x * x, x.powi(4), x.powi(6)]);
        let s2 = sigma * sigma;
        assert!((m2 / s2 - 1.0).abs() < 1e-12);
        assert!((m4 / (3.0 * s2 * s2) - 1.0).abs() < 1e-12);
        assert!((m6 / (15.0 * s2 * s2 * s2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_rule_integrates_a_narrow_lorentzian() {
        // E[1/(1 + (X/γ)²)] = √π γ/(√2 σ) · erfcx(γ/(√2 σ)); checked at γ/σ = 1.
        let sigma = 1.0;
        let res = expectation_adaptive(sigma, 1e-9, |x| [1.0 / (1.0 + x * x)]);
        let expected = 0.655_679_542_418_798_4; // √(π/2) · erfcx(1/√2)
        assert!(res.converged);
        assert!((res.value[0] - expected).abs() < 1e-8, "{}", res.value[0]);
    }
}
