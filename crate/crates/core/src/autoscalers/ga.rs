//! Integer genetic search used to pick replica vectors.

use serde::{Deserialize, Serialize};

use crate::kernel::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            tournament: 3,
            crossover: 0.9,
            mutation: 0.1,
            elitism: 2,
        }
    }
}

fn gene(rng: &mut SeededRng, (lo, hi): (i64, i64)) -> i64 {
    rng.next_in_range(lo, hi)
}

fn better(a: &(Vec<i64>, f64), b: &(Vec<i64>, f64)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Minimize `fitness` over integer vectors within inclusive `bounds`.
/// `seed` (if any) joins the initial population. Returns the best vector
/// seen and its fitness; ties prefer the lexicographically smaller vector.
pub fn minimize(
    bounds: &[(i64, i64)],
    params: &GaParams,
    seed: Option<&[i64]>,
    rng: &mut SeededRng,
    fitness: &mut dyn FnMut(&[i64]) -> f64,
) -> (Vec<i64>, f64) {
    let pop_n = params.population.max(2);
    let mut pop: Vec<Vec<i64>> = Vec::with_capacity(pop_n);
    if let Some(s) = seed {
        pop.push(
            s.iter()
                .zip(bounds)
                .map(|(&g, &(lo, hi))| g.clamp(lo, hi))
                .collect(),
        );
    }
    while pop.len() < pop_n {
        pop.push(bounds.iter().map(|&b| gene(rng, b)).collect());
    }
    let mut best: Option<(Vec<i64>, f64)> = None;
    for generation in 0..=params.generations {
        let mut scored: Vec<(Vec<i64>, f64)> = pop
            .drain(..)
            .map(|g| {
                let f = fitness(&g);
                (g, f)
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        if best.as_ref().is_none_or(|b| better(&scored[0], b)) {
            best = Some(scored[0].clone());
        }
        if generation == params.generations {
            break;
        }
        pop.extend(
            scored
                .iter()
                .take(params.elitism.min(pop_n))
                .map(|s| s.0.clone()),
        );
        while pop.len() < pop_n {
            let a = tournament(&scored, params.tournament, rng);
            let b = tournament(&scored, params.tournament, rng);
            let mut child = scored[a].0.clone();
            if rng.next_bool(params.crossover) {
                for (k, g) in child.iter_mut().enumerate() {
                    if rng.next_bool(0.5) {
                        *g = scored[b].0[k];
                    }
                }
            }
            for (k, g) in child.iter_mut().enumerate() {
                if rng.next_bool(params.mutation) {
                    *g = gene(rng, bounds[k]);
                }
            }
            pop.push(child);
        }
    }
    best.expect("population is never empty")
}

/// Index into the sorted population of a tournament winner.
fn tournament(sorted: &[(Vec<i64>, f64)], size: usize, rng: &mut SeededRng) -> usize {
    (0..size.max(1))
        .map(|_| rng.next_in_range(0, sorted.len() as i64 - 1) as usize)
        .min()
        .expect("size >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng::GA;

    #[test]
    fn finds_quadratic_minimum() {
        let mut rng = SeededRng::new(7, GA);
        let (x, f) = minimize(
            &[(0, 20), (0, 20), (0, 20)],
            &GaParams::default(),
            None,
            &mut rng,
            &mut |v| ((v[0] - 3).pow(2) + (v[1] - 11).pow(2) + (v[2] - 17).pow(2)) as f64,
        );
        assert_eq!(x, vec![3, 11, 17]);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn respects_bounds() {
        let mut rng = SeededRng::new(1, GA);
        let (x, _) = minimize(
            &[(2, 4), (5, 5)],
            &GaParams::default(),
            Some(&[0, 9]),
            &mut rng,
            &mut |v| {
                assert!((2..=4).contains(&v[0]) && v[1] == 5);
                -(v[0] as f64)
            },
        );
        assert_eq!(x, vec![4, 5]);
    }

    #[test]
    fn same_seed_same_answer() {
        let run = || {
            let mut rng = SeededRng::new(5, GA);
            minimize(
                &[(1, 9), (1, 9)],
                &GaParams::default(),
                None,
                &mut rng,
                &mut |v| ((v[0] * 7 + v[1] * 13) % 11) as f64,
            )
        };
        assert_eq!(run(), run());
    }
}
