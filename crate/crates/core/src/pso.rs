//! Global-best particle swarm search for per-beat weight vectors.
//!
//! The fitness of a weight vector `w` for beat `b` is the Pearson correlation
//! between `(b + ε) ∘ w − ε` and the reference template. Two particles are
//! seeded: the all-ones vector and, when given, the PCA-derived weights.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::pca::apply_weights;
use crate::{Error, Result};

/// Score assigned to particles whose weighted beat is constant.
pub const FAILED_FITNESS: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwarmConfig {
    pub swarm_size: usize,
    /// Inertia decays linearly from `inertia_start` to `inertia_end`.
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub cognitive: f64,
    pub social: f64,
    pub max_iterations: usize,
    pub target_fitness: f64,
    /// Fraction of the bound range.
    pub velocity_clamp: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Unseeded particles start uniform in `1 ± init_spread`, clipped to bounds.
    pub init_spread: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            inertia_start: 0.72,
            inertia_end: 0.4,
            cognitive: 1.49,
            social: 1.49,
            max_iterations: 500,
            target_fitness: 0.99,
            velocity_clamp: 0.02,
            lower_bound: 0.2,
            upper_bound: 5.0,
            init_spread: 0.01,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Parameter("swarm needs at least 2 particles".into()));
        }
        if !(self.target_fitness > 0.0 && self.target_fitness <= 1.0) {
            return Err(Error::Parameter(format!(
                "target fitness {} outside (0, 1]",
                self.target_fitness
            )));
        }
        if !(self.lower_bound > 0.0 && self.lower_bound < self.upper_bound && self.upper_bound.is_finite()) {
            return Err(Error::Parameter("position bounds must satisfy 0 < lower < upper".into()));
        }
        if !(self.velocity_clamp > 0.0) || !(self.init_spread >= 0.0) {
            return Err(Error::Parameter("velocity clamp and spread must be positive".into()));
        }
        Ok(())
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower_bound, self.upper_bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub weights: Vec<f64>,
    pub fitness: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Global-best fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
}

/// Correlation between the weighted beat and the template.
pub fn fitness(beat: &[f64], weights: &[f64], template: &[f64]) -> Result<f64> {
    if template.len() != beat.len() {
        return Err(Error::shape("fitness template", beat.len(), template.len()));
    }
    let weighted = apply_weights(beat, weights)?;
    math::pearson(&weighted, template)
}

fn score(beat: &[f64], weights: &[f64], template: &[f64]) -> f64 {
    fitness(beat, weights, template).unwrap_or(FAILED_FITNESS)
}

pub fn optimize_beat_weights(
    beat: &[f64],
    template: &[f64],
    initial: Option<&[f64]>,
    config: &SwarmConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let n = beat.len();
    if template.len() != n {
        return Err(Error::shape("PSO template", n, template.len()));
    }
    if n == 0 {
        return Err(Error::Parameter("PSO needs a non-empty beat".into()));
    }
    if let Some(w) = initial {
        if w.len() != n {
            return Err(Error::shape("PSO seed weights", n, w.len()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax = config.velocity_clamp * (config.upper_bound - config.lower_bound);

    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    positions.push(vec![config.clamp(1.0); n]);
    if let Some(w) = initial {
        positions.push(w.iter().map(|&x| config.clamp(x)).collect());
    }
    while positions.len() < config.swarm_size {
        let p = (0..n)
            .map(|_| config.clamp(1.0 + rng.gen_range(-1.0..=1.0) * config.init_spread))
            .collect();
        positions.push(p);
    }
    let mut velocities: Vec<Vec<f64>> = (0..config.swarm_size)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0) * 0.1 * vmax).collect())
        .collect();

    let mut best_pos = positions.clone();
    let mut best_fit: Vec<f64> = positions.iter().map(|p| score(beat, p, template)).collect();
    let mut g = argmax_first(&best_fit);
    let mut trace = vec![best_fit[g]];
    if best_fit.iter().all(|&f| f == FAILED_FITNESS) && math::pearson(template, template).is_err() {
        return Err(Error::Optimization("template is constant; fitness undefined".into()));
    }

    let mut iterations = 0;
    while best_fit[g] < config.target_fitness && iterations < config.max_iterations {
        let frac = if config.max_iterations > 1 {
            iterations as f64 / (config.max_iterations - 1) as f64
        } else {
            0.0
        };
        let inertia = config.inertia_start + (config.inertia_end - config.inertia_start) * frac;
        let gbest = best_pos[g].clone();
        for i in 0..config.swarm_size {
            for d in 0..n {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let x = positions[i][d];
                let v = inertia * velocities[i][d]
                    + config.cognitive * r1 * (best_pos[i][d] - x)
                    + config.social * r2 * (gbest[d] - x);
                let v = v.clamp(-vmax, vmax);
                velocities[i][d] = v;
                positions[i][d] = config.clamp(x + v);
            }
            let f = score(beat, &positions[i], template);
            if f > best_fit[i] {
                best_fit[i] = f;
                best_pos[i].copy_from_slice(&positions[i]);
            }
        }
        g = argmax_first(&best_fit);
        iterations += 1;
        trace.push(best_fit[g]);
    }

    if best_fit[g] == FAILED_FITNESS {
        return Err(Error::Optimization("every particle produced an undefined fitness".into()));
    }
    Ok(OptimizationResult {
        weights: best_pos.swap_remove(g),
        fitness: best_fit[g],
        iterations_used: iterations,
        converged: best_fit[g] >= config.target_fitness,
        trace,
    })
}

fn argmax_first(xs: &[f64]) -> usize {
    math::argmax(xs).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightOptimization {
    /// One weight vector per beat; all-ones where optimization failed.
    pub weights: Vec<Vec<f64>>,
    pub results: Vec<Result<OptimizationResult>>,
}

impl WeightOptimization {
    pub fn converged_count(&self) -> usize {
        self.results
            .iter()
            .filter(|r| r.as_ref().is_ok_and(|r| r.converged))
            .count()
    }

    pub fn mean_fitness(&self) -> Option<f64> {
        let f: Vec<f64> = self.results.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.fitness).collect();
        (!f.is_empty()).then(|| math::mean(&f))
    }
}

/// Optimizes every beat independently; beat `k` uses seed `config.seed + k`.
pub fn optimize_weight_matrix(
    beats: &[Vec<f64>],
    template: &[f64],
    initial: Option<&[Vec<f64>]>,
    config: &SwarmConfig,
) -> Result<WeightOptimization> {
    config.validate()?;
    if let Some(init) = initial {
        if init.len() != beats.len() {
            return Err(Error::shape("PSO seed matrix", beats.len(), init.len()));
        }
    }
    let mut weights = Vec::with_capacity(beats.len());
    let mut results = Vec::with_capacity(beats.len());
    for (k, beat) in beats.iter().enumerate() {
        let cfg = SwarmConfig {
            seed: config.seed.wrapping_add(k as u64),
            ..config.clone()
        };
        let r = optimize_beat_weights(beat, template, initial.map(|w| w[k].as_slice()), &cfg);
        weights.push(match &r {
            Ok(r) => r.weights.clone(),
            Err(_) => vec![1.0; beat.len()],
        });
        results.push(r);
    }
    Ok(WeightOptimization { weights, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> Vec<f64> {
        (0..20).map(|i| libm::sin(i as f64 * 0.3) * 0.4 + 0.5).collect()
    }

    #[test]
    fn self_fitness_is_one() {
        let t = template();
        assert!((fitness(&t, &[1.0; 20], &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_fitness_is_minus_one() {
        let t = template();
        let m = math::mean(&t);
        let mirrored: Vec<f64> = t.iter().map(|x| 2.0 * m - x).collect();
        assert!((fitness(&mirrored, &[1.0; 20], &t).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_sample_hand_case() {
        // weighted = (b + 0.05) * w - 0.05 = [0.1, 0.55, 0.05, 1.05]
        let b = [0.1, 0.25, 0.0, 0.5];
        let w = [1.0, 2.0, 2.0, 2.0];
        let t = [0.0, 1.0, 0.0, 2.0];
        let x = [0.1, 0.55, 0.05, 1.05];
        let (mx, mt) = (0.4375, 0.75);
        let sxt: f64 = x.iter().zip(&t).map(|(a, b)| (a - mx) * (b - mt)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let stt: f64 = t.iter().map(|b| (b - mt) * (b - mt)).sum();
        let want = sxt / (sxx * stt).sqrt();
        assert!((fitness(&b, &w, &t).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn matching_beat_converges_immediately() {
        let t = template();
        let r = optimize_beat_weights(&t, &t, None, &SwarmConfig::default()).unwrap();
        assert!(r.converged && r.iterations_used == 0 && r.fitness >= 0.99);
        assert_eq!(r.weights, vec![1.0; 20]);
    }

    #[test]
    fn scaled_template_is_already_matched() {
        let b: Vec<f64> = template();
        let t: Vec<f64> = b.iter().map(|x| 2.0 * x).collect();
        let r = optimize_beat_weights(&b, &t, None, &SwarmConfig::default()).unwrap();
        assert_eq!(r.iterations_used, 0);
        assert!((r.fitness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beats_lattice_search_in_five_dimensions() {
        let b = [0.2, 0.6, 0.9, 0.4, 0.1];
        let known = [1.5, 0.5, 1.0, 2.0, 3.0];
        let t = apply_weights(&b, &known).unwrap();
        let cfg = SwarmConfig {
            seed: 3,
            ..Default::default()
        };
        let r = optimize_beat_weights(&b, &t, None, &cfg).unwrap();
        assert!(r.fitness >= 0.99);
        // without the early stop the swarm must also match the lattice optimum
        let full = SwarmConfig {
            target_fitness: 1.0,
            ..cfg
        };
        let r = optimize_beat_weights(&b, &t, None, &full).unwrap();
        let axis = [0.2, 1.4, 2.6, 3.8, 5.0];
        let mut grid_best = f64::NEG_INFINITY;
        let mut w = [0.0; 5];
        for i in 0..5usize.pow(5) {
            let mut k = i;
            for d in w.iter_mut() {
                *d = axis[k % 5];
                k /= 5;
            }
            grid_best = grid_best.max(score(&b, &w, &t));
        }
        assert!(r.fitness >= grid_best, "{} < {grid_best}", r.fitness);
    }

    #[test]
    fn trace_is_monotone_and_weights_bounded() {
        let t = template();
        let b: Vec<f64> = t.iter().enumerate().map(|(i, x)| x + 0.3 * libm::cos(i as f64 * 1.7)).collect();
        let cfg = SwarmConfig {
            max_iterations: 80,
            seed: 5,
            ..Default::default()
        };
        let r = optimize_beat_weights(&b, &t, None, &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.weights.iter().all(|&w| (0.2..=5.0).contains(&w)));
        assert_eq!(r.converged, r.fitness >= 0.99);
        assert!(r.fitness > fitness(&b, &[1.0; 20], &t).unwrap());
    }

    #[test]
    fn matrix_of_template_copies_all_converge() {
        let t = template();
        let m = optimize_weight_matrix(&vec![t.clone(); 4], &t, None, &SwarmConfig::default()).unwrap();
        assert_eq!(m.converged_count(), 4);
    }

    #[test]
    fn single_beat_matrix_matches_direct_call() {
        let t = template();
        let b: Vec<f64> = t.iter().map(|x| x * x).collect();
        let cfg = SwarmConfig {
            max_iterations: 30,
            seed: 8,
            ..Default::default()
        };
        let m = optimize_weight_matrix(core::slice::from_ref(&b), &t, None, &cfg).unwrap();
        let d = optimize_beat_weights(&b, &t, None, &cfg).unwrap();
        assert_eq!(m.results[0].as_ref().unwrap(), &d);
    }

    #[test]
    fn deterministic_for_seed() {
        let t = template();
        let b: Vec<f64> = t.iter().rev().copied().collect();
        let cfg = SwarmConfig {
            max_iterations: 40,
            seed: 2,
            ..Default::default()
        };
        assert_eq!(
            optimize_beat_weights(&b, &t, None, &cfg).unwrap(),
            optimize_beat_weights(&b, &t, None, &cfg).unwrap()
        );
    }

    #[test]
    fn constant_template_fails() {
        let b = template();
        let r = optimize_beat_weights(&b, &[0.5; 20], None, &SwarmConfig::default());
        assert!(matches!(r, Err(Error::Optimization(_))));
    }
}
