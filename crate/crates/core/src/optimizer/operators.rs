use rand::seq::SliceRandom;
use rand::Rng;

use super::genome::{draw_entry, repair, Individual};
use super::GaConfig;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::targets::MeasuredTargets;

/// `L` feasible individuals. Individual `l` is drawn from `stream.child(l)`.
pub fn init_population(
    cfg: &GaConfig,
    targets: &MeasuredTargets,
    fc_ghz: f64,
    stream: &RandomStream,
) -> Result<Vec<Individual>> {
    cfg.check()?;
    let c = &cfg.constraints;
    let spec = cfg.repair_spec(targets, fc_ghz);
    (0..cfg.population_size)
        .map(|l| {
            let mut rng = stream.child(l as u64).rng();
            let mut last = "rp_count";
            for _ in 0..cfg.repair_attempts.max(1) {
                let mut ind = Individual {
                    slots: (0..c.q_max)
                        .map(|_| Some(draw_entry(c, &mut rng)))
                        .collect(),
                };
                let drop = rng.random_range(0..=c.q_max - c.q_min);
                let mut order: Vec<usize> = (0..c.q_max).collect();
                order.shuffle(&mut rng);
                for &i in &order[..drop] {
                    ind.slots[i] = None;
                }
                match repair(&mut ind, &spec, &mut rng) {
                    Ok(()) => return Ok(ind),
                    Err(which) => last = which,
                }
            }
            Err(Error::Infeasible {
                constraint: last,
                attempts: cfg.repair_attempts,
            })
        })
        .collect()
}

/// Roulette-wheel selection of `fitnesses.len()` parents, with replacement.
/// Individual `l` is picked with probability proportional to
/// `max - fitness[l]`, where `max` is over finite fitnesses; infinite
/// fitness is never picked. Equal fitnesses give a uniform draw.
pub fn select_parents(fitnesses: &[f64], stream: &RandomStream) -> Vec<usize> {
    let n = fitnesses.len();
    let finite = fitnesses.iter().copied().filter(|f| f.is_finite());
    let max = finite.clone().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = fitnesses
        .iter()
        .map(|&f| if f.is_finite() { max - f } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut rng = stream.rng();
    if !(total > 0.0) {
        let pool: Vec<usize> = (0..n).filter(|&i| fitnesses[i].is_finite()).collect();
        let pool = if pool.is_empty() {
            (0..n).collect()
        } else {
            pool
        };
        return (0..n)
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect();
    }
    (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    if u < w {
                        return i;
                    }
                    u -= w;
                }
            }
            // Rounding left u just above zero: take the last eligible.
            weights.iter().rposition(|&w| w > 0.0).unwrap()
        })
        .collect()
}

/// Cuts both slot-major genomes at the same point and swaps the tails.
/// `cut` is the number of leading genes kept from each own parent.
pub fn single_point_crossover(
    a: &Individual,
    b: &Individual,
    cut: usize,
) -> (Individual, Individual) {
    let (ga, gb) = (a.genes(), b.genes());
    let cut = cut.min(ga.len());
    let mut ca = ga[..cut].to_vec();
    ca.extend_from_slice(&gb[cut..]);
    let mut cb = gb[..cut].to_vec();
    cb.extend_from_slice(&ga[cut..]);
    (Individual::from_genes(&ca), Individual::from_genes(&cb))
}

/// Crossover with probability `R_cro` at a uniform interior cut, followed by
/// repair. An offspring that cannot be repaired is replaced by a copy of
/// the parent it took its head from.
pub fn crossover(
    a: &Individual,
    b: &Individual,
    cfg: &GaConfig,
    targets: &MeasuredTargets,
    fc_ghz: f64,
    stream: &RandomStream,
) -> (Individual, Individual) {
    let mut rng = stream.rng();
    let n_genes = 3 * cfg.constraints.q_max;
    if n_genes < 2 || !(rng.random::<f64>() < cfg.crossover_rate) {
        return (a.clone(), b.clone());
    }
    let cut = rng.random_range(1..n_genes);
    let (ca, cb) = single_point_crossover(a, b, cut);
    let spec = cfg.repair_spec(targets, fc_ghz);
    let mut finish = |mut child: Individual, head: &Individual| {
        if child == *a || child == *b {
            return child;
        }
        match repair(&mut child, &spec, &mut rng) {
            Ok(()) => child,
            Err(_) => head.clone(),
        }
    };
    let ca = finish(ca, a);
    let cb = finish(cb, b);
    (ca, cb)
}

/// Per-gene redraw and per-slot activity toggle, each with probability
/// `R_mut`, followed by repair. An individual that cannot be repaired is
/// returned unchanged.
pub fn mutate(
    ind: &Individual,
    cfg: &GaConfig,
    targets: &MeasuredTargets,
    fc_ghz: f64,
    stream: &RandomStream,
) -> Individual {
    let c = &cfg.constraints;
    let mut rng = stream.rng();
    let mut out = ind.clone();
    let mut changed = false;
    let hit = |rng: &mut rand_chacha::ChaCha8Rng| rng.random::<f64>() < cfg.mutation_rate;
    for slot in out.slots.iter_mut() {
        if let Some(rp) = slot.as_mut() {
            if hit(&mut rng) {
                rp.distance_m = rng.random_range(c.d_min_m..=c.d_max_m);
                changed = true;
            }
            if hit(&mut rng) {
                rp.aod_deg = rng.random_range(c.aod_min_deg..=c.aod_max_deg);
                changed = true;
            }
            if hit(&mut rng) {
                rp.zod_deg = rng.random_range(c.zod_min_deg..=c.zod_max_deg);
                changed = true;
            }
        }
    }
    for i in 0..out.slots.len() {
        if !hit(&mut rng) {
            continue;
        }
        let active = out.active_count();
        match out.slots[i] {
            Some(_) if active > c.q_min => {
                out.slots[i] = None;
                changed = true;
            }
            None if active < c.q_max => {
                out.slots[i] = Some(draw_entry(c, &mut rng));
                changed = true;
            }
            _ => {}
        }
    }
    if !changed || out == *ind {
        return ind.clone();
    }
    let spec = cfg.repair_spec(targets, fc_ghz);
    match repair(&mut out, &spec, &mut rng) {
        Ok(()) => out,
        Err(_) => ind.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{ConstraintSet, RpEntry};

    fn cfg() -> GaConfig {
        GaConfig::default()
    }

    fn t() -> MeasuredTargets {
        MeasuredTargets::indoor_28ghz()
    }

    #[test]
    fn population_is_feasible_and_seeded() {
        let s = RandomStream::new(11);
        let pop = init_population(&cfg(), &t(), 28.0, &s).unwrap();
        assert_eq!(pop.len(), 40);
        for ind in &pop {
            assert!(ind.is_valid(&cfg().constraints));
            assert_eq!(ind.placement().unwrap().aod_deg()[0], 0.0);
        }
        assert_eq!(pop, init_population(&cfg(), &t(), 28.0, &s).unwrap());
        let counts: std::collections::BTreeSet<usize> =
            pop.iter().map(Individual::active_count).collect();
        assert!(counts.len() > 1);
    }

    #[test]
    fn single_slot_population() {
        let mut c = cfg();
        c.constraints.q_min = 1;
        c.constraints.q_max = 1;
        for ind in init_population(&c, &t(), 28.0, &RandomStream::new(2)).unwrap() {
            assert_eq!(ind.active_count(), 1);
            assert!((ind.slots[0].unwrap().distance_m - 5.2173).abs() < 1e-3);
        }
    }

    #[test]
    fn infeasible_constraints_name_the_binding_one() {
        let mut c = cfg();
        c.constraints.q_min = 5;
        c.constraints.delta_phi_deg = 80.0;
        c.repair_attempts = 5;
        match init_population(&c, &t(), 28.0, &RandomStream::new(0)) {
            Err(Error::Infeasible { constraint, .. }) => assert_eq!(constraint, "azimuth_spacing"),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn roulette_probabilities() {
        let picks = select_parents(&[0.0, 1.0], &RandomStream::new(5));
        assert!(picks.iter().all(|&i| i == 0));

        let n = 20_000;
        let fits = vec![3.0; n];
        let picks = select_parents(&fits, &RandomStream::new(6));
        let mut counts = [0usize; 4];
        for p in picks {
            counts[p % 4] += 1;
        }
        // Each residue class has probability 1/4.
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < 3.0 * sd);
        }

        let fits = [2.0, 2.0, 0.5, 2.0, 3.0];
        let picks = select_parents(&fits.repeat(2000), &RandomStream::new(7));
        let mut counts = [0usize; 5];
        for p in picks {
            counts[p % 5] += 1;
        }
        assert!(counts[2] > counts[0] && counts[2] > counts[1] && counts[2] > counts[3]);
        assert_eq!(counts[4], 0);
    }

    #[test]
    fn infinite_fitness_never_selected() {
        let picks = select_parents(&[f64::INFINITY, 1.0, 2.0], &RandomStream::new(8));
        assert!(picks.iter().all(|&i| i != 0));
        let picks = select_parents(&[f64::INFINITY, 1.0, 1.0], &RandomStream::new(8));
        assert!(picks.iter().all(|&i| i != 0));
    }

    #[test]
    fn crossover_degenerate_cases() {
        let pop = init_population(&cfg(), &t(), 28.0, &RandomStream::new(3)).unwrap();
        let (a, b) = (&pop[0], &pop[1]);
        let mut no_cx = cfg();
        no_cx.crossover_rate = 0.0;
        for k in 0..20 {
            let s = RandomStream::new(9).child(k);
            assert_eq!(
                crossover(a, b, &no_cx, &t(), 28.0, &s),
                (a.clone(), b.clone())
            );
            assert_eq!(
                crossover(a, a, &cfg(), &t(), 28.0, &s),
                (a.clone(), a.clone())
            );
        }
    }

    #[test]
    fn slot_boundary_cut_keeps_active_counts() {
        let e = |d: f64, a: f64| {
            Some(RpEntry {
                distance_m: d,
                aod_deg: a,
                zod_deg: 90.0,
            })
        };
        let a = Individual {
            slots: vec![e(6.0, 0.0), None, e(7.0, 120.0), e(8.0, 240.0), None],
        };
        let b = Individual {
            slots: vec![e(5.0, 0.0), None, e(9.0, 90.0), e(6.5, 200.0), None],
        };
        for cut in 0..=15 {
            let (x, y) = single_point_crossover(&a, &b, cut);
            if cut % 3 == 0 {
                assert_eq!(x.active_count(), 3);
                assert_eq!(y.active_count(), 3);
                for i in 0..5 {
                    assert_eq!(x.slots[i].is_some(), a.slots[i].is_some());
                }
            }
        }
    }

    #[test]
    fn mutation_degenerate_cases() {
        let pop = init_population(&cfg(), &t(), 28.0, &RandomStream::new(4)).unwrap();
        let mut frozen = cfg();
        frozen.mutation_rate = 0.0;
        for (k, ind) in pop.iter().enumerate() {
            assert_eq!(
                mutate(ind, &frozen, &t(), 28.0, &RandomStream::new(k as u64)),
                *ind
            );
        }

        let mut fixed_q = cfg();
        fixed_q.mutation_rate = 1.0;
        fixed_q.constraints.q_min = 3;
        fixed_q.constraints.q_max = 3;
        let pop = init_population(&fixed_q, &t(), 28.0, &RandomStream::new(5)).unwrap();
        for (k, ind) in pop.iter().enumerate() {
            let m = mutate(ind, &fixed_q, &t(), 28.0, &RandomStream::new(k as u64));
            assert_eq!(m.active_count(), 3);
            assert!(m.is_valid(&fixed_q.constraints));
        }
    }

    #[test]
    fn mutation_with_pinned_distance() {
        let d = crate::monostatic::equal_distance_for_pl(1, -80.8125, 28.0).unwrap();
        let mut c = cfg();
        c.mutation_rate = 1.0;
        c.constraints = ConstraintSet {
            q_min: 1,
            q_max: 1,
            d_min_m: d,
            d_max_m: d,
            ..ConstraintSet::default()
        };
        let ind = Individual {
            slots: vec![Some(RpEntry {
                distance_m: d,
                aod_deg: 0.0,
                zod_deg: 90.0,
            })],
        };
        for k in 0..10 {
            let m = mutate(&ind, &c, &t(), 28.0, &RandomStream::new(k));
            assert_eq!(m.slots[0].unwrap().distance_m, d);
        }
    }
}
