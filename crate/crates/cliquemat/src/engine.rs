//! Cached coordinate-update engine shared by the fixed-column solver and the
//! automatic column-count solver.
//!
//! The engine keeps the pairwise weighted row overlaps
//! `O[k][j] = sum_d w_d theta_kd theta_jd` current across sequential
//! coordinate updates, so one theta update costs `O(V)` instead of `O(V C)`.
//! Column weights `w_d` carry the squared indicator means of the automatic
//! solver; the fixed-column solver runs with all weights at 1.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use crate::graph::AdjacencyMatrix;
use crate::logistic::{gauss_average, neg_log1p_exp, sigmoid};
use crate::mean_field::FieldMode;

pub(crate) struct FieldEngine<'a> {
    v: usize,
    c: usize,
    beta: f64,
    /// Column-major `theta[col * v + row]`.
    theta: &'a mut [f64],
    /// Per-column weights (squared indicator means; 1 for fixed-C).
    col_w: &'a mut [f64],
    neighbors: Vec<Vec<u32>>,
    non_neighbors: Vec<Vec<u32>>,
    /// `O[k * v + j] = sum_d w_d theta_kd theta_jd`.
    overlap: Vec<f64>,
    /// Extra caches for the Gaussian field mode:
    /// `p2 = sum_d w_d^2 theta_kd theta_jd`, `b2 = sum_d w_d^2 (theta_kd theta_jd)^2`.
    gauss: Option<GaussCaches>,
    order: Vec<u32>,
}

struct GaussCaches {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    p2: Vec<f64>,
    b2: Vec<f64>,
}

impl<'a> FieldEngine<'a> {
    pub fn new(
        adj: &AdjacencyMatrix,
        beta: f64,
        theta: &'a mut [f64],
        col_w: &'a mut [f64],
        mode: FieldMode,
        quadrature_points: usize,
    ) -> Self {
        let v = adj.vertex_count();
        let c = col_w.len();
        assert_eq!(theta.len(), v * c);
        let mut neighbors = vec![Vec::new(); v];
        let mut non_neighbors = vec![Vec::new(); v];
        for k in 0..v {
            for j in 0..v {
                if j == k {
                    continue;
                }
                if adj.contains(k, j) {
                    neighbors[k].push(j as u32);
                } else {
                    non_neighbors[k].push(j as u32);
                }
            }
        }
        let gauss = match mode {
            FieldMode::ZeroVariance => None,
            FieldMode::Gaussian => {
                let (nodes, weights) = crate::logistic::gauss_hermite(quadrature_points);
                Some(GaussCaches {
                    nodes,
                    weights,
                    p2: vec![0.0; v * v],
                    b2: vec![0.0; v * v],
                })
            }
        };
        let mut engine = FieldEngine {
            v,
            c,
            beta,
            theta,
            col_w,
            neighbors,
            non_neighbors,
            overlap: vec![0.0; v * v],
            gauss,
            order: (0..(v * c) as u32).collect(),
        };
        engine.rebuild_caches();
        engine
    }

    /// Recomputes the overlap caches from scratch.
    fn rebuild_caches(&mut self) {
        let v = self.v;
        self.overlap.fill(0.0);
        if let Some(g) = &mut self.gauss {
            g.p2.fill(0.0);
            g.b2.fill(0.0);
        }
        // row-major scratch so the pairwise dot products stream contiguously
        let mut rows = vec![0.0f64; v * self.c];
        let mut rows_w = vec![0.0f64; v * self.c];
        let mut rows_w2 = Vec::new();
        let needs_gauss = self.gauss.is_some();
        if needs_gauss {
            rows_w2 = vec![0.0f64; v * self.c];
        }
        for d in 0..self.c {
            let w = self.col_w[d];
            let col = &self.theta[d * v..(d + 1) * v];
            for i in 0..v {
                rows[i * self.c + d] = col[i];
                rows_w[i * self.c + d] = w * col[i];
                if needs_gauss {
                    rows_w2[i * self.c + d] = w * w * col[i];
                }
            }
        }
        for i in 0..v {
            let ri = &rows[i * self.c..(i + 1) * self.c];
            for j in i..v {
                let rjw = &rows_w[j * self.c..(j + 1) * self.c];
                let mut o = 0.0;
                for d in 0..self.c {
                    o += ri[d] * rjw[d];
                }
                self.overlap[i * v + j] = o;
                self.overlap[j * v + i] = o;
                if let Some(g) = &mut self.gauss {
                    let rj2 = &rows_w2[j * self.c..(j + 1) * self.c];
                    let mut p2 = 0.0;
                    let mut b2 = 0.0;
                    for d in 0..self.c {
                        let prod = ri[d] * rj2[d];
                        p2 += prod;
                        let unweighted = ri[d] * rows[j * self.c + d];
                        b2 += self.col_w[d] * self.col_w[d] * unweighted * unweighted;
                    }
                    g.p2[i * v + j] = p2;
                    g.p2[j * v + i] = p2;
                    g.b2[i * v + j] = b2;
                    g.b2[j * v + i] = b2;
                }
            }
        }
    }

    /// One full epoch: every coordinate updated once in a random order drawn
    /// from `rng`. Returns the largest absolute theta change.
    pub fn epoch(&mut self, rng: &mut ChaCha12Rng) -> f64 {
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(rng);
        let v = self.v;
        let mut max_delta = 0.0f64;
        for &id in &order {
            let id = id as usize;
            let col = id / v;
            let k = id % v;
            let delta = self.update_coordinate(k, col);
            max_delta = max_delta.max(delta.abs());
        }
        self.order = order;
        max_delta
    }

    /// Updates `theta[k, col]` in place and returns the change.
    pub fn update_coordinate(&mut self, k: usize, col: usize) -> f64 {
        let new = match &self.gauss {
            None => self.proposed_zero_variance(k, col),
            Some(_) => self.proposed_gaussian(k, col),
        };
        let old = self.theta[col * self.v + k];
        let delta = new - old;
        if delta != 0.0 {
            self.theta[col * self.v + k] = new;
            self.apply_delta(k, col, old, new);
        }
        delta
    }

    /// The two-state posterior ratio with the field evaluated at its mean.
    fn proposed_zero_variance(&self, k: usize, col: usize) -> f64 {
        let v = self.v;
        let beta = self.beta;
        let wc = self.col_w[col];
        let th = &self.theta[col * v..(col + 1) * v];
        let tkc = th[k];
        let orow = &self.overlap[k * v..(k + 1) * v];
        let mut d = 0.0;
        for &ju in &self.neighbors[k] {
            let j = ju as usize;
            let tjc = th[j];
            let base = orow[j] - wc * tkc * tjc;
            let add = wc * tjc;
            d += neg_log1p_exp(beta * (0.5 - base - add)) - neg_log1p_exp(beta * (0.5 - base));
        }
        for &ju in &self.non_neighbors[k] {
            let j = ju as usize;
            let tjc = th[j];
            let base = orow[j] - wc * tkc * tjc;
            let add = wc * tjc;
            d += neg_log1p_exp(beta * (base + add - 0.5)) - neg_log1p_exp(beta * (base - 0.5));
        }
        sigmoid(2.0 * d)
    }

    /// The two-state ratio with one-dimensional Gaussian field averages.
    fn proposed_gaussian(&self, k: usize, col: usize) -> f64 {
        let v = self.v;
        let beta = self.beta;
        let g = self.gauss.as_ref().expect("gaussian caches present");
        let wc = self.col_w[col];
        let th = &self.theta[col * v..(col + 1) * v];
        let tkc = th[k];
        let orow = &self.overlap[k * v..(k + 1) * v];
        let p2row = &g.p2[k * v..(k + 1) * v];
        let b2row = &g.b2[k * v..(k + 1) * v];
        let mut d = 0.0;
        let mut accumulate = |j: usize, edge: bool| {
            let tjc = th[j];
            let prod = tkc * tjc;
            let mu0 = orow[j] - wc * prod;
            let mu1 = mu0 + wc * tjc;
            let var_base = (p2row[j] - wc * wc * prod) - (b2row[j] - wc * wc * prod * prod);
            let var0 = var_base.max(0.0);
            let var1 = (var_base + wc * wc * tjc * (1.0 - tjc)).max(0.0);
            let f = |x: f64| {
                if edge {
                    neg_log1p_exp(beta * (0.5 - x))
                } else {
                    neg_log1p_exp(beta * (x - 0.5))
                }
            };
            d += gauss_average(f, mu1, var1, &g.nodes, &g.weights)
                - gauss_average(f, mu0, var0, &g.nodes, &g.weights);
        };
        for &ju in &self.neighbors[k] {
            accumulate(ju as usize, true);
        }
        for &ju in &self.non_neighbors[k] {
            accumulate(ju as usize, false);
        }
        sigmoid(2.0 * d)
    }

    fn apply_delta(&mut self, k: usize, col: usize, old: f64, new: f64) {
        let v = self.v;
        let wc = self.col_w[col];
        let delta = new - old;
        for j in 0..v {
            if j == k {
                continue;
            }
            let tjc = self.theta[col * v + j];
            if tjc == 0.0 {
                continue;
            }
            let upd = wc * delta * tjc;
            self.overlap[k * v + j] += upd;
            self.overlap[j * v + k] += upd;
        }
        if let Some(g) = &mut self.gauss {
            let w2 = wc * wc;
            for j in 0..v {
                if j == k {
                    continue;
                }
                let tjc = self.theta[col * v + j];
                if tjc == 0.0 {
                    continue;
                }
                let p_upd = w2 * delta * tjc;
                let b_upd = w2 * tjc * tjc * (new * new - old * old);
                g.p2[k * v + j] += p_upd;
                g.p2[j * v + k] += p_upd;
                g.b2[k * v + j] += b_upd;
                g.b2[j * v + k] += b_upd;
            }
        }
    }

    /// Change in the mean-field log likelihood from flipping column `col`'s
    /// indicator from 0 to 1, all other columns held at their weighted means.
    pub fn indicator_log_likelihood_gain(&self, col: usize) -> f64 {
        let v = self.v;
        let beta = self.beta;
        let wc = self.col_w[col];
        let th = &self.theta[col * v..(col + 1) * v];
        let support: Vec<usize> = (0..v).filter(|&i| th[i] != 0.0).collect();
        let mut gain = 0.0;
        for (idx, &i) in support.iter().enumerate() {
            for &j in &support[idx + 1..] {
                let prod = th[i] * th[j];
                let base = self.overlap[i * v + j] - wc * prod;
                let (x1, x0) = (base + prod, base);
                gain += if self.neighbors[i].binary_search(&(j as u32)).is_ok() {
                    neg_log1p_exp(beta * (0.5 - x1)) - neg_log1p_exp(beta * (0.5 - x0))
                } else {
                    neg_log1p_exp(beta * (x1 - 0.5)) - neg_log1p_exp(beta * (x0 - 0.5))
                };
            }
        }
        gain
    }

    /// Sets column `col`'s weight and patches the caches.
    pub fn set_column_weight(&mut self, col: usize, w_new: f64) {
        let v = self.v;
        let w_old = self.col_w[col];
        if w_new == w_old {
            return;
        }
        self.col_w[col] = w_new;
        let th = &self.theta[col * v..(col + 1) * v];
        let support: Vec<usize> = (0..v).filter(|&i| th[i] != 0.0).collect();
        let dw = w_new - w_old;
        let dw2 = w_new * w_new - w_old * w_old;
        for &i in &support {
            for &j in &support {
                let prod = th[i] * th[j];
                self.overlap[i * v + j] += dw * prod;
                if let Some(g) = &mut self.gauss {
                    g.p2[i * v + j] += dw2 * prod;
                    g.b2[i * v + j] += dw2 * prod * prod;
                }
            }
        }
    }

    pub fn column_count(&self) -> usize {
        self.c
    }
}
