//! Variation and selection operators.

use rand::seq::index;
use rand::Rng;

use super::DeError;
use crate::param_space::{Genome, ParamSpace, GENE_COUNT};

/// `base + mu * (a - b)`, repaired.
pub fn differential_mutant(
    base: &Genome,
    a: &Genome,
    b: &Genome,
    mu: f64,
    space: &ParamSpace,
) -> Genome {
    space.repair_raw(std::array::from_fn(|j| base.0[j] + mu * (a.0[j] - b.0[j])))
}

/// Three mutually distinct indices in `0..pop_size`, all different from `target`.
pub fn mutation_indices<R: Rng + ?Sized>(
    pop_size: usize,
    target: usize,
    rng: &mut R,
) -> Result<[usize; 3], DeError> {
    if pop_size < 4 {
        return Err(DeError::Config(format!(
            "mutation needs a population of at least 4, got {pop_size}"
        )));
    }
    let picked = index::sample(rng, pop_size - 1, 3);
    let r: [usize; 3] = std::array::from_fn(|k| {
        let v = picked.index(k);
        if v >= target {
            v + 1
        } else {
            v
        }
    });
    debug_assert!(r[0] != r[1] && r[0] != r[2] && r[1] != r[2]);
    debug_assert!(!r.contains(&target));
    Ok(r)
}

pub fn mutate<R: Rng + ?Sized>(
    members: &[Genome],
    target: usize,
    mu: f64,
    space: &ParamSpace,
    rng: &mut R,
) -> Result<Genome, DeError> {
    let [r1, r2, r3] = mutation_indices(members.len(), target, rng)?;
    Ok(differential_mutant(&members[r1], &members[r2], &members[r3], mu, space))
}

/// Each gene comes from the mutant when its draw is at most `c`; one
/// random gene always does.
pub fn binomial_crossover<R: Rng + ?Sized>(
    target: &Genome,
    mutant: &Genome,
    c: f64,
    space: &ParamSpace,
    rng: &mut R,
) -> Genome {
    let forced = rng.random_range(0..GENE_COUNT);
    let values = std::array::from_fn(|j| {
        // Draws in (0, 1] make c = 0 and c = 1 exact.
        let r = 1.0 - rng.random::<f64>();
        if r <= c || j == forced {
            mutant.0[j]
        } else {
            target.0[j]
        }
    });
    space.repair_raw(values)
}

pub type RawPair = ([f64; GENE_COUNT], [f64; GENE_COUNT]);

/// Unrepaired BLX-alpha children.
pub fn blend_raw<R: Rng + ?Sized>(x: &Genome, y: &Genome, alpha: f64, rng: &mut R) -> RawPair {
    let mut a = [0.0; GENE_COUNT];
    let mut b = [0.0; GENE_COUNT];
    for j in 0..GENE_COUNT {
        let min = x.0[j].min(y.0[j]);
        let max = x.0[j].max(y.0[j]);
        let l = max - min;
        let lo = min - l * alpha;
        let hi = max + l * alpha;
        for child in [&mut a[j], &mut b[j]] {
            *child = if hi > lo {
                (lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi)
            } else {
                lo
            };
        }
    }
    (a, b)
}

pub fn blx_crossover<R: Rng + ?Sized>(
    x: &Genome,
    y: &Genome,
    alpha: f64,
    space: &ParamSpace,
    rng: &mut R,
) -> (Genome, Genome) {
    let (a, b) = blend_raw(x, y, alpha, rng);
    (space.repair_raw(a), space.repair_raw(b))
}

/// True when the trial replaces the target; ties go to the trial.
pub fn trial_wins(f_target: f64, f_trial: f64) -> Result<bool, DeError> {
    if f_target.is_nan() || f_trial.is_nan() {
        return Err(DeError::NanFitness { f_target, f_trial });
    }
    Ok(f_trial <= f_target)
}

pub fn select<'a>(
    target: &'a Genome,
    trial: &'a Genome,
    f_target: f64,
    f_trial: f64,
) -> Result<&'a Genome, DeError> {
    Ok(if trial_wins(f_target, f_trial)? {
        trial
    } else {
        target
    })
}
