//! Fixed-column variational decomposition.
//!
//! The posterior over the binary clique matrix is approximated by a fully
//! factorised distribution `q(Z) = prod q(z_ic)` with `theta_ic = q(z_ic = 1)`.
//! Coordinates are updated by evaluating the two clamped states of the
//! pairwise field; by default the field's variance is dropped and the energy
//! terms are evaluated at the field mean, which is the fast mode. A Gaussian
//! field mode with Gauss–Hermite averages is available for comparison.

use rayon::prelude::*;

use crate::engine::FieldEngine;
use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, CliqueMatrix};
use crate::logistic::{gauss_average, log_one_minus_sigma, log_sigma, sigmoid};
use crate::seeds::{restart_epoch_index, SeedDomain, SeedPlan};

/// Likelihood model parameters for the fixed-column problem.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    /// Steepness of the shifted logistic link; must be positive.
    pub beta: f64,
    /// Number of columns of the factorised posterior; at least 1.
    pub c: usize,
}

/// How the nonlinear field averages are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldMode {
    /// Evaluate the energy terms at the field mean (fast, the default).
    ZeroVariance,
    /// Average under a Gaussian with the field's mean and variance.
    Gaussian,
}

/// Solver knobs. `tol` bounds the largest coordinate change that still counts
/// as converged; all randomness derives from `seed`.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub field_mode: FieldMode,
    /// Gauss–Hermite points for [`FieldMode::Gaussian`].
    pub quadrature_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_epochs: 100,
            tol: 1e-4,
            seed: 0,
            restarts: 1,
            field_mode: FieldMode::ZeroVariance,
            quadrature_points: 20,
        }
    }
}

/// Factorised posterior state: `theta[i][c] = q(z_ic = 1)`.
#[derive(Clone, Debug)]
pub struct VariationalState {
    v: usize,
    c: usize,
    /// Column-major `theta[col * v + row]`.
    theta: Vec<f64>,
    pub epoch: usize,
    pub converged: bool,
    restart: u64,
}

impl VariationalState {
    /// Uniform random initialization in `[0.25, 0.75]`, seeded per restart.
    pub fn random(v: usize, c: usize, seed: u64, restart: u64) -> Self {
        use rand::Rng;
        let mut rng = SeedPlan::new(seed).rng(SeedDomain::SolverInit, restart);
        let theta = (0..v * c).map(|_| rng.random_range(0.25..0.75)).collect();
        VariationalState {
            v,
            c,
            theta,
            epoch: 0,
            converged: false,
            restart,
        }
    }

    /// Builds a state from an explicit assignment; entries must lie in [0, 1].
    pub fn from_fn(v: usize, c: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut theta = vec![0.0; v * c];
        for col in 0..c {
            for i in 0..v {
                let t = f(i, col);
                assert!((0.0..=1.0).contains(&t), "theta must lie in [0, 1]");
                theta[col * v + i] = t;
            }
        }
        VariationalState {
            v,
            c,
            theta,
            epoch: 0,
            converged: false,
            restart: 0,
        }
    }

    #[inline]
    pub fn theta(&self, i: usize, c: usize) -> f64 {
        self.theta[c * self.v + i]
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn column_count(&self) -> usize {
        self.c
    }

    /// Rounds each marginal at 0.5 (ties to 0) and drops all-zero columns.
    pub fn round(&self) -> CliqueMatrix {
        self.round_filtered(&vec![true; self.c])
    }

    /// As [`round`](Self::round), keeping only columns with `keep[c]` set.
    pub(crate) fn round_filtered(&self, keep: &[bool]) -> CliqueMatrix {
        let mut cols = Vec::new();
        for col in 0..self.c {
            if !keep[col] {
                continue;
            }
            let support: Vec<usize> = (0..self.v)
                .filter(|&i| self.theta(i, col) > 0.5)
                .collect();
            if !support.is_empty() {
                cols.push(support);
            }
        }
        if cols.is_empty() {
            CliqueMatrix::empty(self.v)
        } else {
            CliqueMatrix::from_columns(self.v, &cols).expect("rounded columns are valid")
        }
    }

    pub(crate) fn theta_slice_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub(crate) fn restart(&self) -> u64 {
        self.restart
    }
}

/// Mean and variance of the pairwise field `sum_d z_kd z_jd` with `z_kc`
/// clamped, all other coordinates at their factorised marginals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldStats {
    pub mu: f64,
    pub var: f64,
}

/// Field statistics for the pair `(k, j)` with column `c`'s coordinate of `k`
/// clamped to `z_kc`.
pub fn field_stats(
    state: &VariationalState,
    k: usize,
    j: usize,
    c: usize,
    z_kc: bool,
) -> FieldStats {
    assert_ne!(k, j, "field is defined for distinct vertices");
    let z = if z_kc { 1.0 } else { 0.0 };
    let tjc = state.theta(j, c);
    let mut mu = z * tjc;
    let mut var = z * tjc * (1.0 - tjc);
    for d in 0..state.c {
        if d == c {
            continue;
        }
        let p = state.theta(k, d) * state.theta(j, d);
        mu += p;
        var += p * (1.0 - p);
    }
    FieldStats { mu, var }
}

/// Log joint probability of the adjacency under the decomposition, diagonal
/// excluded. Finite for every binary `z` because the link stays inside (0, 1).
pub fn log_likelihood(a: &AdjacencyMatrix, z: &CliqueMatrix, beta: f64) -> Result<f64> {
    if a.vertex_count() != z.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, clique matrix has {} rows",
            a.vertex_count(),
            z.vertex_count()
        )));
    }
    let v = a.vertex_count();
    let mut ll = 0.0;
    for i in 0..v {
        for j in (i + 1)..v {
            let overlap = z.row_overlap(i, j) as f64;
            ll += if a.contains(i, j) {
                log_sigma(overlap, beta)
            } else {
                log_one_minus_sigma(overlap, beta)
            };
        }
    }
    Ok(ll)
}

/// The new marginal for coordinate `(k, c)` from evaluating the posterior at
/// its two clamped states. Reference implementation without caching; the
/// epoch driver computes the same quantity incrementally.
pub fn update_theta(
    state: &VariationalState,
    a: &AdjacencyMatrix,
    params: &ModelParams,
    k: usize,
    c: usize,
    config: &SolverConfig,
) -> f64 {
    let mut log_odds = 0.0;
    let quad = match config.field_mode {
        FieldMode::ZeroVariance => None,
        FieldMode::Gaussian => Some(crate::logistic::gauss_hermite(config.quadrature_points)),
    };
    for j in 0..state.v {
        if j == k {
            continue;
        }
        let edge = a.contains(k, j);
        let g = |x: f64| {
            if edge {
                log_sigma(x, params.beta)
            } else {
                log_one_minus_sigma(x, params.beta)
            }
        };
        let s1 = field_stats(state, k, j, c, true);
        let s0 = field_stats(state, k, j, c, false);
        log_odds += match &quad {
            None => g(s1.mu) - g(s0.mu),
            Some((nodes, weights)) => {
                gauss_average(g, s1.mu, s1.var, nodes, weights)
                    - gauss_average(g, s0.mu, s0.var, nodes, weights)
            }
        };
    }
    sigmoid(2.0 * log_odds)
}

/// One asynchronous epoch: every coordinate updated once, in a random order
/// derived from `(config.seed, restart, state.epoch)`. Returns the largest
/// absolute change.
pub fn run_epoch(
    state: &mut VariationalState,
    a: &AdjacencyMatrix,
    params: &ModelParams,
    config: &SolverConfig,
) -> f64 {
    debug_assert_eq!(state.v, a.vertex_count());
    let mut rng = SeedPlan::new(config.seed).rng(
        SeedDomain::EpochOrder,
        restart_epoch_index(state.restart, state.epoch as u64),
    );
    let mut col_w = vec![1.0; state.c];
    let mut engine = FieldEngine::new(
        a,
        params.beta,
        &mut state.theta,
        &mut col_w,
        config.field_mode,
        config.quadrature_points,
    );
    let max_delta = engine.epoch(&mut rng);
    state.epoch += 1;
    max_delta
}

/// Result of a fixed-column solve: the rounded decomposition, the posterior
/// state of the winning restart, and its log likelihood.
#[derive(Clone, Debug)]
pub struct FixedCSolution {
    pub clique_matrix: CliqueMatrix,
    pub state: VariationalState,
    pub log_likelihood: f64,
}

/// Runs `config.restarts` independent solves and keeps the restart whose
/// rounded decomposition has the highest log likelihood (ties favor the
/// lowest restart index). A result is returned even without convergence;
/// check `state.converged`.
pub fn solve_fixed_c(
    a: &AdjacencyMatrix,
    params: &ModelParams,
    config: &SolverConfig,
) -> FixedCSolution {
    assert!(params.beta > 0.0, "beta must be positive");
    assert!(params.c >= 1, "column count must be at least 1");
    assert!(config.restarts >= 1, "need at least one restart");
    assert!(config.tol > 0.0, "tolerance must be positive");

    let run = |restart: u64| {
        let mut state = VariationalState::random(a.vertex_count(), params.c, config.seed, restart);
        for _ in 0..config.max_epochs {
            let delta = run_epoch(&mut state, a, params, config);
            if delta < config.tol {
                state.converged = true;
                break;
            }
        }
        let clique_matrix = state.round();
        let ll = log_likelihood(a, &clique_matrix, params.beta).expect("dimensions match");
        FixedCSolution {
            clique_matrix,
            state,
            log_likelihood: ll,
        }
    };

    let candidates: Vec<FixedCSolution> = if config.restarts > 1 {
        (0..config.restarts as u64).into_par_iter().map(run).collect()
    } else {
        vec![run(0)]
    };
    candidates
        .into_iter()
        .reduce(|best, cur| if cur.log_likelihood > best.log_likelihood { cur } else { best })
        .expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{columns_are_cliques, is_valid_clique_matrix};
    use crate::testutil::{eq1_adjacency, eq3_clique_matrix, sorted_columns};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn beta10() -> ModelParams {
        ModelParams { beta: 10.0, c: 2 }
    }

    #[test]
    fn log_likelihood_of_the_two_clique_decomposition() {
        // overlaps: 1 for pairs (1,2),(1,3),(2,4),(3,4); 2 for (2,3); 0 for
        // the absent pair (1,4)
        let expected = 4.0 * log_sigma(1.0, 10.0)
            + log_sigma(2.0, 10.0)
            + log_one_minus_sigma(0.0, 10.0);
        let got = log_likelihood(&eq1_adjacency(), &eq3_clique_matrix(), 10.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        assert_relative_eq!(got, -0.033_577_048_118_242_3, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_of_two_isolated_vertices() {
        let a = AdjacencyMatrix::identity(2);
        let z = CliqueMatrix::identity(2);
        let got = log_likelihood(&a, &z, 10.0).unwrap();
        assert_relative_eq!(got, log_one_minus_sigma(0.0, 10.0), max_relative = 1e-14);
        assert_relative_eq!(got, -0.006_715_348_489_118_068, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_checks_dimensions() {
        assert!(log_likelihood(&eq1_adjacency(), &CliqueMatrix::identity(3), 10.0).is_err());
    }

    /// Exhaustive enumeration over `{0,1}^{4x2}`: the maximum is attained by
    /// a matrix that reconstructs the graph exactly, never by one that does
    /// not.
    #[test]
    fn exact_reconstructions_dominate_the_likelihood() {
        let a = eq1_adjacency();
        let mut best = f64::NEG_INFINITY;
        let mut best_is_valid = false;
        let mut best_valid = f64::NEG_INFINITY;
        for bits in 0u32..256 {
            let z = crate::testutil::clique_matrix_from_bits(4, 2, bits);
            let ll = log_likelihood(&a, &z, 10.0).unwrap();
            let valid = is_valid_clique_matrix(&a, &z).unwrap();
            if ll > best {
                best = ll;
                best_is_valid = valid;
            }
            if valid && ll > best_valid {
                best_valid = ll;
            }
        }
        assert!(best_is_valid);
        assert_relative_eq!(best, best_valid);
    }

    #[test]
    fn field_stats_matches_hand_computed_cases() {
        // all-zero theta: clamping contributes nothing when theta_jc = 0
        let zero = VariationalState::from_fn(2, 1, |_, _| 0.0);
        let s = field_stats(&zero, 0, 1, 0, true);
        assert_eq!(s, FieldStats { mu: 0.0, var: 0.0 });

        // C=2: theta_jc = 0.5, other column all-1 for both vertices
        let st = VariationalState::from_fn(2, 2, |i, c| match (i, c) {
            (1, 0) => 0.5,
            (_, 1) => 1.0,
            _ => 0.0,
        });
        let s = field_stats(&st, 0, 1, 0, true);
        assert_relative_eq!(s.mu, 1.5);
        assert_relative_eq!(s.var, 0.25);
    }

    #[test]
    fn field_stats_agrees_with_sampling() {
        use rand::{Rng, SeedableRng};
        // random theta, Monte-Carlo over z rows with z_kc clamped to 1
        let state = VariationalState::from_fn(4, 3, |i, c| 0.1 + 0.2 * ((i + 2 * c) % 4) as f64);
        let (k, j, c) = (0, 2, 1);
        let want = field_stats(&state, k, j, c, true);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5150);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let mut overlap = 0.0;
            for d in 0..3 {
                let zk = if d == c {
                    1.0
                } else if rng.random::<f64>() < state.theta(k, d) {
                    1.0
                } else {
                    0.0
                };
                let zj = if rng.random::<f64>() < state.theta(j, d) { 1.0 } else { 0.0 };
                overlap += zk * zj;
            }
            sum += overlap;
            sum2 += overlap * overlap;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let se = (want.var / n as f64).sqrt();
        assert!((mean - want.mu).abs() < 3.0 * se, "mean {mean} vs {}", want.mu);
        // variance matches loosely (its own sampling error scales similarly)
        assert!((var - want.var).abs() < 0.05, "var {var} vs {}", want.var);
    }

    #[test]
    fn update_strongly_activates_a_shared_edge_column() {
        let a = AdjacencyMatrix::complete(2);
        let state = VariationalState::from_fn(2, 1, |i, _| if i == 1 { 1.0 } else { 0.3 });
        let params = ModelParams { beta: 10.0, c: 1 };
        let got = update_theta(&state, &a, &params, 0, 0, &SolverConfig::default());
        // exp(2 f(1)) / (exp(2 f(0)) + exp(2 f(1))) with f = log sigma
        let s1 = crate::logistic::sigma(1.0, 10.0);
        let s0 = crate::logistic::sigma(0.0, 10.0);
        let expected = s1 * s1 / (s0 * s0 + s1 * s1);
        assert_relative_eq!(got, expected, max_relative = 1e-12);
        assert_relative_eq!(got, 0.999_954_6, epsilon = 1e-6);
    }

    #[test]
    fn updates_preserve_exchangeability_on_transitive_graphs() {
        // complete graph, column-exchangeable theta: every coordinate gets
        // the same update value
        let a = AdjacencyMatrix::complete(3);
        let state = VariationalState::from_fn(3, 2, |_, _| 0.6);
        let params = ModelParams { beta: 10.0, c: 2 };
        let cfg = SolverConfig::default();
        let reference = update_theta(&state, &a, &params, 0, 0, &cfg);
        for k in 0..3 {
            for c in 0..2 {
                assert_relative_eq!(update_theta(&state, &a, &params, k, c, &cfg), reference);
            }
        }
    }

    #[test]
    fn gaussian_mode_with_zero_variance_matches_the_fast_mode() {
        // binary theta gives an exactly zero-variance field
        let a = eq1_adjacency();
        let state = VariationalState::from_fn(4, 2, |i, c| {
            if eq3_clique_matrix().get(i, c) { 1.0 } else { 0.0 }
        });
        let params = beta10();
        let zv = SolverConfig { field_mode: FieldMode::ZeroVariance, ..Default::default() };
        let gs = SolverConfig { field_mode: FieldMode::Gaussian, ..Default::default() };
        for k in 0..4 {
            for c in 0..2 {
                let a1 = update_theta(&state, &a, &params, k, c, &zv);
                let a2 = update_theta(&state, &a, &params, k, c, &gs);
                assert!((a1 - a2).abs() < 1e-8, "({k},{c}): {a1} vs {a2}");
            }
        }
    }

    #[test]
    fn epoch_is_deterministic_per_seed_and_agrees_with_the_reference_update() {
        let a = eq1_adjacency();
        let params = beta10();
        let cfg = SolverConfig { seed: 9, ..Default::default() };
        let mut s1 = VariationalState::random(4, 2, cfg.seed, 0);
        let mut s2 = s1.clone();
        run_epoch(&mut s1, &a, &params, &cfg);
        run_epoch(&mut s2, &a, &params, &cfg);
        assert_eq!(s1.theta, s2.theta, "same seed must give identical theta");

        // the cached epoch equals sequential reference updates applied in the
        // same order
        let mut state = VariationalState::random(4, 2, cfg.seed, 0);
        let mut reference = state.clone();
        run_epoch(&mut state, &a, &params, &cfg);
        {
            use rand::seq::SliceRandom;
            let mut rng = SeedPlan::new(cfg.seed)
                .rng(SeedDomain::EpochOrder, restart_epoch_index(0, 0));
            let mut order: Vec<u32> = (0..8).collect();
            order.shuffle(&mut rng);
            for id in order {
                let (col, k) = ((id / 4) as usize, (id % 4) as usize);
                let new = update_theta(&reference, &a, &params, k, col, &cfg);
                reference.theta[col * 4 + k] = new;
            }
        }
        for i in 0..8 {
            assert!(
                (state.theta[i] - reference.theta[i]).abs() < 1e-12,
                "coordinate {i}: {} vs {}",
                state.theta[i],
                reference.theta[i]
            );
        }
    }

    #[test]
    fn converged_states_are_epoch_fixed_points() {
        let a = eq1_adjacency();
        let params = beta10();
        let cfg = SolverConfig { restarts: 10, max_epochs: 200, seed: 1, ..Default::default() };
        let sol = solve_fixed_c(&a, &params, &cfg);
        assert!(sol.state.converged, "one of ten restarts converges");
        let mut state = sol.state.clone();
        let delta = run_epoch(&mut state, &a, &params, &cfg);
        assert!(delta < 1e-12, "fixed point moved by {delta}");
        // re-running the reference update changes nothing beyond tolerance
        for k in 0..4 {
            for c in 0..2 {
                let new = update_theta(&sol.state, &a, &params, k, c, &cfg);
                assert!((new - sol.state.theta(k, c)).abs() <= cfg.tol);
            }
        }
    }

    #[test]
    fn recovers_the_minimal_cover_of_the_chorded_square() {
        let cfg = SolverConfig { restarts: 10, seed: 3, ..Default::default() };
        let sol = solve_fixed_c(&eq1_adjacency(), &beta10(), &cfg);
        assert_eq!(
            sorted_columns(&sol.clique_matrix),
            sorted_columns(&eq3_clique_matrix())
        );
    }

    #[test]
    fn complete_graph_with_one_column_fills_it() {
        let a = AdjacencyMatrix::complete(3);
        let params = ModelParams { beta: 10.0, c: 1 };
        let cfg = SolverConfig { restarts: 5, seed: 2, ..Default::default() };
        let sol = solve_fixed_c(&a, &params, &cfg);
        assert_eq!(sorted_columns(&sol.clique_matrix), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn edgeless_graph_rounds_to_disjoint_columns() {
        let a = AdjacencyMatrix::identity(3);
        let params = ModelParams { beta: 10.0, c: 3 };
        let cfg = SolverConfig { restarts: 5, seed: 4, ..Default::default() };
        let sol = solve_fixed_c(&a, &params, &cfg);
        for c in 0..sol.clique_matrix.column_count() {
            assert!(sol.clique_matrix.column_weight(c) <= 1);
        }
        assert!(columns_are_cliques(&a, &sol.clique_matrix).unwrap());
    }

    #[test]
    fn beats_or_matches_enumeration_on_small_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        let mut hits = 0;
        let trials = 20;
        for t in 0..trials {
            let mut edges = Vec::new();
            for i in 0..4usize {
                for j in (i + 1)..4 {
                    if rng.random::<f64>() < 0.5 {
                        edges.push((i, j));
                    }
                }
            }
            let a = AdjacencyMatrix::from_edges(4, edges).unwrap();
            let mut best = f64::NEG_INFINITY;
            for bits in 0u32..256 {
                let z = crate::testutil::clique_matrix_from_bits(4, 2, bits);
                best = best.max(log_likelihood(&a, &z, 10.0).unwrap());
            }
            let cfg = SolverConfig { restarts: 20, seed: 1000 + t, ..Default::default() };
            let sol = solve_fixed_c(&a, &beta10(), &cfg);
            if sol.log_likelihood >= best - 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "only {hits}/{trials} solves reached the optimum");
    }

    proptest! {
        #[test]
        fn likelihood_is_column_permutation_invariant(
            seed in 0u64..200,
            v in 2usize..8,
            c in 1usize..5,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut cols = Vec::new();
            for _ in 0..c {
                let col: Vec<usize> = (0..v).filter(|_| rng.random::<bool>()).collect();
                if !col.is_empty() {
                    cols.push(col);
                }
            }
            prop_assume!(!cols.is_empty());
            let mut edges = Vec::new();
            for i in 0..v {
                for j in (i + 1)..v {
                    if rng.random::<f64>() < 0.4 {
                        edges.push((i, j));
                    }
                }
            }
            let a = AdjacencyMatrix::from_edges(v, edges).unwrap();
            let z = CliqueMatrix::from_columns(v, &cols).unwrap();
            let mut rev = cols.clone();
            rev.reverse();
            let zr = CliqueMatrix::from_columns(v, &rev).unwrap();
            let l1 = log_likelihood(&a, &z, 10.0).unwrap();
            let l2 = log_likelihood(&a, &zr, 10.0).unwrap();
            prop_assert!((l1 - l2).abs() < 1e-12);
        }
    }
}
