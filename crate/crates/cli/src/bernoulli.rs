//! Seeded binary source generation: correlated (S, X) Bernoulli pairs.

use infogame_core::io::write_csv;
use infogame_core::prob::JointPmf;
use infogame_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Draw `n` pairs with `S ~ Bernoulli(p)` and `X = S` flipped with
/// probability `flip`; returns the samples and their empirical joint law.
pub fn gen_bernoulli_source(
    p: f64,
    flip: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<(u8, u8)>, JointPmf)> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&flip) {
        return Err(Error::Config(format!(
            "p and flip must lie in [0,1], got p={p} flip={flip}"
        )));
    }
    if n == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [[0usize; 2]; 2];
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let s = u8::from(rng.gen_bool(p));
        let flipped = rng.gen_bool(flip);
        let x = if flipped { 1 - s } else { s };
        counts[s as usize][x as usize] += 1;
        samples.push((s, x));
    }
    let joint = JointPmf::new(
        counts
            .iter()
            .map(|row| row.iter().map(|c| *c as f64 / n as f64).collect())
            .collect(),
    )?;
    Ok((samples, joint))
}

/// Write samples as a two-column CSV.
pub fn write_samples<P: AsRef<Path>>(path: P, samples: &[(u8, u8)]) -> Result<()> {
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|(s, x)| vec![s.to_string(), x.to_string()])
        .collect();
    write_csv(path, &["s", "x"], &rows)
}
