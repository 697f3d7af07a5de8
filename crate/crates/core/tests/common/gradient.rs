//! An independent statement of the embedding loss for checking gradients.

use prase::embedding::{
    accumulate_seed, accumulate_triple, init_params, Gradient, Params, Side, TrainingSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// The combined loss written out directly from its definition.
fn reference_loss(
    p: &Params,
    samples: &[TrainingSample],
    seeds: &[(u32, u32)],
    margin: f64,
) -> f64 {
    let d = p.dim;
    let dist = |side: Side, [h, r, t]: [u32; 3]| {
        let (h, r, t) = (p.entity(side, h), p.relation(side, r), p.entity(side, t));
        norm((0..d).map(|i| h[i] + r[i] - t[i]))
    };
    let transe: f64 = samples
        .iter()
        .map(|s| (margin + dist(s.side, s.pos) - dist(s.side, s.neg)).max(0.0))
        .sum();
    let mapping: f64 = seeds
        .iter()
        .map(|&(l, r)| {
            let (e, e2) = (p.entity(Side::Left, l), p.entity(Side::Right, r));
            norm((0..d).map(|i| (0..d).map(|j| p.transform[i * d + j] * e[j]).sum::<f64>() - e2[i]))
        })
        .sum();
    transe + mapping
}

/// Five entities and three relations per side, with a perturbed
/// transformation and a margin wide enough that every hinge is active.
fn toy_instance() -> (Params, Vec<TrainingSample>, Vec<(u32, u32)>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut params = init_params(&mut rng, [5, 5], [3, 3], 4);
    for m in params.transform.iter_mut() {
        *m += rng.gen_range(-0.3..0.3);
    }
    let mut samples = Vec::new();
    for side in [Side::Left, Side::Right] {
        for (h, r, t) in [(0, 0, 1), (1, 1, 2), (2, 2, 3), (3, 0, 4), (4, 1, 0)] {
            samples.push(TrainingSample {
                side,
                pos: [h, r, t],
                neg: [(h + 2) % 5, r, t],
            });
            samples.push(TrainingSample {
                side,
                pos: [h, r, t],
                neg: [h, r, (t + 3) % 5],
            });
        }
    }
    (params, samples, vec![(0, 0), (2, 3), (4, 1)], 10.0)
}

fn coordinates(p: &Params) -> Vec<(usize, usize)> {
    let lens = [
        p.entities[0].len(),
        p.entities[1].len(),
        p.relations[0].len(),
        p.relations[1].len(),
        p.transform.len(),
    ];
    lens.iter()
        .enumerate()
        .flat_map(|(t, &n)| (0..n).map(move |i| (t, i)))
        .collect()
}

fn coord(p: &mut Params, (table, i): (usize, usize)) -> &mut f64 {
    match table {
        0 | 1 => &mut p.entities[table][i],
        2 | 3 => &mut p.relations[table - 2][i],
        _ => &mut p.transform[i],
    }
}

/// Largest relative difference between the analytic and the central
/// finite-difference gradient over every parameter coordinate.
pub fn max_gradient_error() -> f64 {
    let (params, samples, seeds, margin) = toy_instance();
    let mut grad = Gradient::zeros_like(&params);
    let mut loss = 0.0;
    for s in &samples {
        loss += accumulate_triple(&params, s, margin, &mut grad);
    }
    for &s in &seeds {
        loss += accumulate_seed(&params, s, &mut grad);
    }
    assert!((loss - reference_loss(&params, &samples, &seeds, margin)).abs() < 1e-9);

    let h = 1e-5;
    let mut analytic = grad.values.clone();
    let mut worst: f64 = 0.0;
    for c in coordinates(&params) {
        let mut plus = params.clone();
        *coord(&mut plus, c) += h;
        let mut minus = params.clone();
        *coord(&mut minus, c) -= h;
        let numeric = (reference_loss(&plus, &samples, &seeds, margin)
            - reference_loss(&minus, &samples, &seeds, margin))
            / (2.0 * h);
        let a = *coord(&mut analytic, c);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}
