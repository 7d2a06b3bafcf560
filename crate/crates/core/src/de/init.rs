//! Diagonal-subspace initialization.
//!
//! Individual `p` of a population of `n` is placed at a random offset from
//! the RFC defaults whose size, as a fraction of each gene's range, lies in
//! `[p/n, (p+1)/n)`. Offsets wrap around the range instead of clamping.

use rand::Rng;

use crate::param_space::{GeneKind, GeneSpec, Genome, ParamSpace, GENE_COUNT};
use crate::rng::{stream, Purpose};

/// Wrapped distance of `value` from `origin` as a fraction of the gene range.
pub fn subspace_fraction(value: f64, origin: f64, spec: &GeneSpec) -> f64 {
    (value - origin).rem_euclid(spec.width()) / spec.width()
}

fn wrap(x: f64, spec: &GeneSpec) -> f64 {
    spec.lower + (x - spec.lower).rem_euclid(spec.width())
}

fn in_band(frac: f64, p: usize, pop: usize) -> bool {
    frac >= p as f64 / pop as f64 && frac < (p + 1) as f64 / pop as f64
}

fn real_gene(spec: &GeneSpec, beta: f64, p: usize, pop: usize) -> f64 {
    let z = spec.rfc_default;
    let w = spec.width();
    let band_lo = p as f64 / pop as f64 * w;
    let band_hi = ((p + 1) as f64 / pop as f64 * w).next_down();
    let mut offset = ((beta + p as f64) / pop as f64 * w).clamp(band_lo, band_hi);
    let mut x = wrap(z + offset, spec);
    // Rounding at band edges can land a few ulps outside; step the offset back in.
    for _ in 0..256 {
        let frac = subspace_fraction(x, z, spec);
        if in_band(frac, p, pop) {
            break;
        }
        offset = if frac < p as f64 / pop as f64 {
            offset.next_up()
        } else {
            offset.next_down()
        };
        x = wrap(z + offset, spec);
    }
    x
}

fn integer_gene(spec: &GeneSpec, beta: f64, p: usize, pop: usize) -> f64 {
    let z = spec.rfc_default;
    let w = spec.width();
    let lo = (p as f64 * w / pop as f64).ceil();
    let hi = ((p + 1) as f64 * w / pop as f64).ceil() - 1.0;
    let offset = ((beta + p as f64) / pop as f64 * w).round();
    // Bands narrower than one unit may hold no integer; keep the rounded offset.
    let offset = if lo <= hi { offset.clamp(lo, hi) } else { offset };
    wrap(z + offset, spec)
}

/// Individual `p` of `pop` with one `beta` in `[0, 1)` per gene.
pub fn diagonal_individual(
    space: &ParamSpace,
    p: usize,
    pop: usize,
    betas: &[f64; GENE_COUNT],
) -> Genome {
    let values = std::array::from_fn(|i| {
        let spec = space.gene(i);
        match spec.kind {
            GeneKind::Real => real_gene(spec, betas[i], p, pop),
            GeneKind::Integer => integer_gene(spec, betas[i], p, pop),
        }
    });
    space.repair_raw(values)
}

/// One individual per diagonal subspace; `betas` come from the `Init`
/// stream of individual `p`.
pub fn initialize_population(space: &ParamSpace, pop_size: usize, base_seed: u64) -> Vec<Genome> {
    (0..pop_size)
        .map(|p| {
            let mut rng = stream(base_seed, Purpose::Init, p as u64, 0);
            let betas = std::array::from_fn(|_| rng.random::<f64>());
            diagonal_individual(space, p, pop_size, &betas)
        })
        .collect()
}
