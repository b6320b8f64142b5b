//! Dynamic-trajectory Hamiltonian transitions: a no-U-turn sampler
//! (multinomial variant with biased progressive state selection) with
//! dual-averaging step-size adaptation and windowed diagonal mass-matrix
//! estimation during warmup.
//!
//! One chain is fully deterministic given its RNG stream: momentum draws,
//! per-depth direction bits, and subtree proposal swaps are consumed in a
//! fixed order.

use crate::model::Posterior;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Energy-error threshold beyond which a leapfrog step counts as divergent.
const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Step-size adaptation happens over the whole warmup; the mass matrix is
/// estimated over growing windows `[75, 100), [100, 150), ...` and frozen 50
/// iterations before sampling starts. Warmups shorter than 150 iterations
/// keep the unit metric.
const INIT_BUFFER: usize = 75;
const TERM_BUFFER: usize = 50;
const BASE_WINDOW: usize = 25;

pub(crate) struct NutsOptions {
    pub warmup: usize,
    pub sampling: usize,
    pub target_accept: f64,
    pub max_treedepth: usize,
}

pub(crate) struct ChainOutput {
    /// Unconstrained post-warmup draws, one per sampling iteration.
    pub draws: Vec<Vec<f64>>,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub max_depth_hits: usize,
    pub mean_accept: f64,
    pub step_size: f64,
}

#[derive(Clone)]
struct State {
    theta: Vec<f64>,
    r: Vec<f64>,
    grad: Vec<f64>,
    logp: f64,
}

struct Tree {
    minus: State,
    plus: State,
    proposal: State,
    /// Log of the subtree's total multinomial weight, sum of exp(h0 - h)
    /// over its leaves.
    log_w: f64,
    /// False once a divergence or internal U-turn stops growth.
    keep_going: bool,
    sum_accept: f64,
    n_accept: usize,
    divergent: bool,
}

/// `ln(exp(a) + exp(b))` without overflow; tolerates `-inf` inputs.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

struct Sampler<'a, 'b> {
    posterior: &'a Posterior<'b>,
    /// Diagonal of the inverse mass matrix (estimated posterior variances).
    metric: Vec<f64>,
}

impl Sampler<'_, '_> {
    fn eval(&self, theta: Vec<f64>) -> State {
        let mut grad = vec![0.0; theta.len()];
        let logp = self.posterior.logp_and_grad(&theta, &mut grad);
        State {
            r: vec![0.0; theta.len()],
            theta,
            grad,
            logp,
        }
    }

    fn draw_momentum(&self, state: &mut State, rng: &mut ChaCha8Rng) {
        for (r, m) in state.r.iter_mut().zip(&self.metric) {
            *r = rng.sample::<f64, _>(StandardNormal) / m.sqrt();
        }
    }

    fn hamiltonian(&self, state: &State) -> f64 {
        let kinetic: f64 = state
            .r
            .iter()
            .zip(&self.metric)
            .map(|(r, m)| 0.5 * m * r * r)
            .sum();
        -state.logp + kinetic
    }

    fn leapfrog(&self, state: &State, eps: f64) -> State {
        let dim = state.theta.len();
        let mut r = state.r.clone();
        let mut theta = state.theta.clone();
        for k in 0..dim {
            r[k] += 0.5 * eps * state.grad[k];
            theta[k] += eps * self.metric[k] * r[k];
        }
        let mut next = self.eval(theta);
        for k in 0..dim {
            r[k] += 0.5 * eps * next.grad[k];
        }
        next.r = r;
        next
    }

    /// U-turn criterion on the velocity scale: growth continues only while
    /// the end-to-end displacement projects positively on both end momenta.
    fn no_u_turn(&self, minus: &State, plus: &State) -> bool {
        let (mut dot_minus, mut dot_plus) = (0.0, 0.0);
        for k in 0..minus.theta.len() {
            let delta = plus.theta[k] - minus.theta[k];
            dot_minus += delta * self.metric[k] * minus.r[k];
            dot_plus += delta * self.metric[k] * plus.r[k];
        }
        dot_minus >= 0.0 && dot_plus >= 0.0
    }

    fn build_tree(
        &self,
        from: &State,
        direction: f64,
        depth: usize,
        eps: f64,
        h0: f64,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        if depth == 0 {
            let state = self.leapfrog(from, direction * eps);
            let h = self.hamiltonian(&state);
            // NaN energies count as divergent.
            let not_divergent = h - h0 <= DIVERGENCE_THRESHOLD;
            let log_w = if not_divergent {
                h0 - h
            } else {
                f64::NEG_INFINITY
            };
            let accept = {
                let d = h0 - h;
                if d.is_nan() {
                    0.0
                } else if d >= 0.0 {
                    1.0
                } else {
                    d.exp()
                }
            };
            return Tree {
                minus: state.clone(),
                plus: state.clone(),
                proposal: state,
                log_w,
                keep_going: not_divergent,
                sum_accept: accept,
                n_accept: 1,
                divergent: !not_divergent,
            };
        }

        let mut inner = self.build_tree(from, direction, depth - 1, eps, h0, rng);
        if !inner.keep_going {
            return inner;
        }
        let grow_from = if direction < 0.0 {
            inner.minus.clone()
        } else {
            inner.plus.clone()
        };
        let outer = self.build_tree(&grow_from, direction, depth - 1, eps, h0, rng);
        if direction < 0.0 {
            inner.minus = outer.minus;
        } else {
            inner.plus = outer.plus;
        }
        // Unbiased multinomial draw between the two halves.
        let log_total = log_add_exp(inner.log_w, outer.log_w);
        if outer.log_w > f64::NEG_INFINITY
            && rng.random::<f64>() < (outer.log_w - log_total).exp()
        {
            inner.proposal = outer.proposal;
        }
        inner.log_w = log_total;
        inner.sum_accept += outer.sum_accept;
        inner.n_accept += outer.n_accept;
        inner.divergent |= outer.divergent;
        inner.keep_going =
            outer.keep_going && self.no_u_turn(&inner.minus, &inner.plus);
        inner
    }

    /// One NUTS transition. Returns the new state plus
    /// (mean acceptance statistic, divergent?, hit max depth?).
    fn transition(
        &self,
        mut current: State,
        eps: f64,
        max_depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> (State, f64, bool, bool) {
        self.draw_momentum(&mut current, rng);
        let h0 = self.hamiltonian(&current);

        let mut minus = current.clone();
        let mut plus = current.clone();
        let mut proposal = current;
        // Cumulative trajectory log-weight; the start state contributes
        // exp(h0 - h0) = 1.
        let mut log_w_total = 0.0f64;
        let mut keep_going = true;
        let (mut sum_accept, mut n_accept) = (0.0, 0usize);
        let mut divergent = false;
        let mut depth = 0usize;

        while keep_going && depth < max_depth {
            let direction = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let from = if direction < 0.0 { &minus } else { &plus };
            let tree = self.build_tree(from, direction, depth, eps, h0, rng);
            if direction < 0.0 {
                minus = tree.minus;
            } else {
                plus = tree.plus;
            }
            sum_accept += tree.sum_accept;
            n_accept += tree.n_accept;
            divergent |= tree.divergent;
            // Biased progressive selection: a new subtree at least as heavy
            // as the trajectory so far always supplies the proposal, which
            // favors long jumps.
            if tree.keep_going {
                if tree.log_w >= log_w_total {
                    proposal = tree.proposal;
                } else if rng.random::<f64>() < (tree.log_w - log_w_total).exp() {
                    proposal = tree.proposal;
                }
            }
            log_w_total = log_add_exp(log_w_total, tree.log_w);
            keep_going = tree.keep_going && self.no_u_turn(&minus, &plus);
            depth += 1;
        }

        let hit_max = keep_going && depth == max_depth;
        let accept_stat = if n_accept > 0 {
            sum_accept / n_accept as f64
        } else {
            0.0
        };
        (proposal, accept_stat, divergent, hit_max)
    }

    /// Heuristic initial step size: double/halve until the one-step
    /// acceptance probability crosses 1/2.
    fn find_reasonable_epsilon(&self, state: &State, rng: &mut ChaCha8Rng) -> f64 {
        let mut probe = state.clone();
        self.draw_momentum(&mut probe, rng);
        let h0 = self.hamiltonian(&probe);
        let mut eps = 1.0;
        let log_ratio_at = |eps: f64| -> f64 {
            let next = self.leapfrog(&probe, eps);
            let h = self.hamiltonian(&next);
            let d = h0 - h;
            if d.is_nan() {
                f64::NEG_INFINITY
            } else {
                d
            }
        };
        let doubling = log_ratio_at(eps) > (0.5f64).ln();
        for _ in 0..100 {
            eps *= if doubling { 2.0 } else { 0.5 };
            if !(1e-10..=1e7).contains(&eps) {
                break;
            }
            let above = log_ratio_at(eps) > (0.5f64).ln();
            if above != doubling {
                break;
            }
        }
        eps
    }
}

/// Dual-averaging state for step-size adaptation (target acceptance delta).
struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    t: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps0: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps0).ln(),
            log_eps: eps0.ln(),
            log_eps_bar: eps0.ln(),
            h_bar: 0.0,
            t: 0.0,
        }
    }

    fn update(&mut self, accept_stat: f64, target: f64) {
        self.t += 1.0;
        let eta = 1.0 / (self.t + Self::T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (target - accept_stat);
        self.log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_bar;
        let weight = self.t.powf(-Self::KAPPA);
        self.log_eps_bar = weight * self.log_eps + (1.0 - weight) * self.log_eps_bar;
    }

    fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Streaming mean/variance accumulator.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Welford {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for k in 0..x.len() {
            let delta = x[k] - self.mean[k];
            self.mean[k] += delta / n;
            self.m2[k] += delta * (x[k] - self.mean[k]);
        }
    }

    /// Regularized variance estimate, shrunk toward 1e-3 for short windows.
    fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| {
                let var = if self.n > 1 { m2 / (n - 1.0) } else { 0.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Iteration indices (exclusive ends) at which the mass matrix is refreshed.
fn adaptation_window_ends(warmup: usize) -> Vec<usize> {
    if warmup < INIT_BUFFER + BASE_WINDOW + TERM_BUFFER {
        return Vec::new();
    }
    let last = warmup - TERM_BUFFER;
    let mut ends = Vec::new();
    let mut start = INIT_BUFFER;
    let mut size = BASE_WINDOW;
    loop {
        let end = start + size;
        if end >= last || end + 2 * size > last {
            ends.push(last);
            return ends;
        }
        ends.push(end);
        start = end;
        size *= 2;
    }
}

/// Run one chain: warmup with adaptation, then `sampling` frozen-kernel
/// iterations whose draws are returned in order.
pub(crate) fn run_chain(
    posterior: &Posterior,
    theta0: Vec<f64>,
    rng: &mut ChaCha8Rng,
    opts: &NutsOptions,
) -> ChainOutput {
    let dim = theta0.len();
    let mut sampler = Sampler {
        posterior,
        metric: vec![1.0; dim],
    };
    let mut state = sampler.eval(theta0);

    let eps0 = sampler.find_reasonable_epsilon(&state, rng);
    let mut dual = DualAveraging::new(eps0);
    let window_ends = adaptation_window_ends(opts.warmup);
    let mut next_window = 0usize;
    let mut welford = Welford::new(dim);
    let mut warmup_divergences = 0usize;

    for iter in 0..opts.warmup {
        let eps = dual.current();
        let (next, accept_stat, divergent, _) =
            sampler.transition(state, eps, opts.max_treedepth, rng);
        state = next;
        warmup_divergences += divergent as usize;
        dual.update(accept_stat, opts.target_accept);

        if next_window < window_ends.len() {
            welford.push(&state.theta);
            if iter + 1 == window_ends[next_window] {
                sampler.metric = welford.regularized_variance();
                welford = Welford::new(dim);
                next_window += 1;
                // The kernel changed shape: re-probe the step size and
                // restart its averaging.
                let eps = sampler.find_reasonable_epsilon(&state, rng);
                dual = DualAveraging::new(eps);
            }
        }
    }

    let eps = if opts.warmup > 0 {
        dual.adapted()
    } else {
        dual.current()
    };
    let mut draws = Vec::with_capacity(opts.sampling);
    let mut divergences = 0usize;
    let mut max_depth_hits = 0usize;
    let mut accept_sum = 0.0;
    for _ in 0..opts.sampling {
        let (next, accept_stat, divergent, hit_max) =
            sampler.transition(state, eps, opts.max_treedepth, rng);
        state = next;
        divergences += divergent as usize;
        max_depth_hits += hit_max as usize;
        accept_sum += accept_stat;
        draws.push(state.theta.clone());
    }

    ChainOutput {
        draws,
        divergences,
        warmup_divergences,
        max_depth_hits,
        mean_accept: accept_sum / opts.sampling.max(1) as f64,
        step_size: eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NetworkDataset;
    use crate::model::ModelConfig;

    #[test]
    fn window_schedule_matches_doubling_layout() {
        assert_eq!(adaptation_window_ends(1000), vec![100, 150, 250, 450, 950]);
        assert_eq!(adaptation_window_ends(150), vec![100]);
        assert!(adaptation_window_ends(149).is_empty());
        assert!(adaptation_window_ends(0).is_empty());
        assert_eq!(adaptation_window_ends(300), vec![100, 150, 250]);
    }

    #[test]
    fn welford_matches_two_pass_variance() {
        let xs = [
            vec![1.0, -2.0],
            vec![2.0, 0.5],
            vec![4.0, 0.25],
            vec![8.0, 1.0],
            vec![16.0, -0.5],
        ];
        let mut w = Welford::new(2);
        for x in &xs {
            w.push(x);
        }
        let n = xs.len() as f64;
        for k in 0..2 {
            let mean = xs.iter().map(|x| x[k]).sum::<f64>() / n;
            let var = xs.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let expected = n / (n + 5.0) * var + 1e-3 * 5.0 / (n + 5.0);
            let got = w.regularized_variance()[k];
            assert!((got - expected).abs() < 1e-12, "k={k}: {got} vs {expected}");
        }
    }

    #[test]
    fn dual_averaging_raises_step_when_acceptance_is_high() {
        let mut da = DualAveraging::new(0.1);
        for _ in 0..200 {
            da.update(1.0, 0.8);
        }
        assert!(da.adapted() > 0.1);
        let mut da = DualAveraging::new(0.1);
        for _ in 0..200 {
            da.update(0.0, 0.8);
        }
        assert!(da.adapted() < 0.1);
    }

    /// The sampler sees only `Posterior`, so a correctness check on a known
    /// target goes through a tiny dataset: a single Bernoulli cell with all
    /// variance components amounts to a low-dimensional, well-conditioned
    /// posterior whose draws must stay finite and move around.
    #[test]
    fn chain_on_small_posterior_is_finite_and_mixes() {
        let ds = NetworkDataset::from_rows(&[
            ("a", "b", 3, 10, 0.5),
            ("b", "a", 6, 10, 0.5),
            ("a", "c", 2, 10, -0.5),
            ("c", "a", 5, 10, -0.5),
            ("b", "c", 4, 10, 1.0),
            ("c", "b", 7, 10, 1.0),
        ])
        .unwrap();
        let posterior = crate::model::Posterior::new(&ds, ModelConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let theta0 = vec![0.0; posterior.dim()];
        let opts = NutsOptions {
            warmup: 200,
            sampling: 100,
            target_accept: 0.8,
            max_treedepth: 10,
        };
        let out = run_chain(&posterior, theta0, &mut rng, &opts);
        assert_eq!(out.draws.len(), 100);
        assert!(out.draws.iter().flatten().all(|x| x.is_finite()));
        assert!(out.step_size > 0.0);
        // Distinct consecutive draws indicate accepted transitions.
        let moved = out
            .draws
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        assert!(moved > 50, "chain should move most iterations, moved {moved}");
        assert!(out.mean_accept > 0.5, "mean accept {}", out.mean_accept);
    }
}
