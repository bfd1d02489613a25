//! Cooperative bankruptcy games over a coalition of claimants.
//!
//! An estate `E` smaller than the total claims is divided among players with
//! claims `c_i`. The characteristic function caps what a coalition can secure
//! by what the outsiders cannot take away:
//!
//! ```text
//! v(Ω) = min( Σ_{i∈Ω} c_i , max(0, E - Σ_{j∉Ω} c_j) )
//! ```
//!
//! The allocation rule is the Shapley value (average marginal contribution
//! over player orderings), computed exactly by subset enumeration up to 20
//! players and by seeded permutation sampling beyond that. Allocations are
//! validated against efficiency, the claim bounds, and the minimal/maximal
//! right sandwich `v({i}) <= θ_i <= v(N) - v(N \ {i})`.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact-enumeration cutoff; larger games fall back to sampling.
pub const EXACT_PLAYER_LIMIT: usize = 20;

/// Estate plus claim vector; the players are `0..claims.len()`.
#[derive(Debug, Clone)]
pub struct BankruptcyInstance {
    estate: f64,
    claims: Vec<f64>,
}

impl BankruptcyInstance {
    /// Validates nonnegativity. An estate covering every claim is legal but
    /// outside the bankruptcy regime; [`BankruptcyInstance::is_bankrupt`]
    /// flags the distinction rather than the constructor rejecting it.
    pub fn new(estate: f64, claims: Vec<f64>) -> Result<Self> {
        if !(estate >= 0.0) || !estate.is_finite() {
            return Err(Error::Config(format!(
                "estate must be finite and >= 0, got {estate}"
            )));
        }
        if claims.is_empty() {
            return Err(Error::Config("at least one claimant required".into()));
        }
        if claims.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Config("claims must be finite and >= 0".into()));
        }
        Ok(Self { estate, claims })
    }

    pub fn estate(&self) -> f64 {
        self.estate
    }

    pub fn claims(&self) -> &[f64] {
        &self.claims
    }

    pub fn players(&self) -> usize {
        self.claims.len()
    }

    /// True in the proper bankruptcy regime (estate below total claims).
    pub fn is_bankrupt(&self) -> bool {
        self.estate < self.claims.iter().sum::<f64>()
    }

    /// Characteristic function over an explicit coalition (player ids).
    pub fn psi(&self, coalition: &[usize]) -> Result<f64> {
        let n = self.players();
        let mut seen = vec![false; n];
        for &p in coalition {
            if p >= n {
                return Err(Error::Config(format!(
                    "unknown player id {p} (have {n} players)"
                )));
            }
            if seen[p] {
                return Err(Error::Config(format!(
                    "player id {p} repeated in coalition"
                )));
            }
            seen[p] = true;
        }
        let inside: f64 = coalition.iter().map(|&p| self.claims[p]).sum();
        let total: f64 = self.claims.iter().sum();
        Ok(self.worth(inside, total))
    }

    /// Coalition worth from its claim sum.
    fn worth(&self, claim_sum: f64, total: f64) -> f64 {
        claim_sum.min((self.estate - (total - claim_sum)).max(0.0))
    }
}

/// Payoff vector with its per-player rights bounds.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub payoffs: Vec<f64>,
    /// `v({i})`: what a player secures alone.
    pub min_rights: Vec<f64>,
    /// `v(N) - v(N \ {i})`: a player's full marginal worth.
    pub max_rights: Vec<f64>,
    /// Present when sampling was used: (permutations, max standard error).
    pub approximation: Option<(usize, f64)>,
}

/// Exact Shapley allocation by marginal-contribution enumeration for up to
/// [`EXACT_PLAYER_LIMIT`] players; beyond that, seeded permutation sampling
/// with a reported standard error (flagged in the result).
pub fn shapley(inst: &BankruptcyInstance) -> Allocation {
    if inst.players() <= EXACT_PLAYER_LIMIT {
        shapley_exact(inst)
    } else {
        shapley_sampled(inst, 20_000, 0)
    }
}

fn rights(inst: &BankruptcyInstance) -> (Vec<f64>, Vec<f64>) {
    let n = inst.players();
    let everyone: Vec<usize> = (0..n).collect();
    let grand = inst.psi(&everyone).expect("valid ids");
    let mut min_rights = Vec::with_capacity(n);
    let mut max_rights = Vec::with_capacity(n);
    for i in 0..n {
        min_rights.push(inst.psi(&[i]).expect("valid ids"));
        let without: Vec<usize> = (0..n).filter(|&p| p != i).collect();
        let v_without = if without.is_empty() {
            0.0
        } else {
            inst.psi(&without).expect("valid ids")
        };
        max_rights.push(grand - v_without);
    }
    (min_rights, max_rights)
}

fn shapley_exact(inst: &BankruptcyInstance) -> Allocation {
    let n = inst.players();
    let total: f64 = inst.claims.iter().sum();

    // claim sums for every coalition mask
    let mut sums = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + inst.claims[low];
    }

    // weight by coalition size: |S|!(n-1-|S|)!/n! = 1/(n·C(n-1,|S|))
    let mut weight = vec![0.0f64; n];
    for (s, w) in weight.iter_mut().enumerate() {
        let mut binom = 1.0f64;
        for k in 0..s {
            binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
        }
        *w = 1.0 / (n as f64 * binom);
    }

    let mut payoffs = vec![0.0f64; n];
    for (i, payoff) in payoffs.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0usize..(1 << n) {
            if mask & bit != 0 {
                continue;
            }
            let size = mask.count_ones() as usize;
            let v_with = inst.worth(sums[mask | bit], total);
            let v_without = inst.worth(sums[mask], total);
            *payoff += weight[size] * (v_with - v_without);
        }
    }

    let (min_rights, max_rights) = rights(inst);
    Allocation {
        payoffs,
        min_rights,
        max_rights,
        approximation: None,
    }
}

/// Monte-Carlo Shapley by sampling seeded player orderings.
pub fn shapley_sampled(inst: &BankruptcyInstance, permutations: usize, seed: u64) -> Allocation {
    let n = inst.players();
    let total: f64 = inst.claims.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    for t in 1..=permutations.max(1) {
        order.shuffle(&mut rng);
        let mut claim_sum = 0.0;
        let mut prev_v = 0.0;
        for &p in &order {
            claim_sum += inst.claims[p];
            let v = inst.worth(claim_sum, total);
            let marginal = v - prev_v;
            prev_v = v;
            let delta = marginal - mean[p];
            mean[p] += delta / t as f64;
            m2[p] += delta * (marginal - mean[p]);
        }
    }
    let std_err = m2
        .iter()
        .map(|v| (v / (permutations.max(2) as f64 - 1.0)).sqrt() / (permutations as f64).sqrt())
        .fold(0.0f64, f64::max);

    let (min_rights, max_rights) = rights(inst);
    Allocation {
        payoffs: mean,
        min_rights,
        max_rights,
        approximation: Some((permutations, std_err)),
    }
}

/// Per-condition outcome of [`validate_allocation`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// `Σ θ_i = v(N)` within 1e-9.
    pub efficient: bool,
    /// `0 <= θ_i <= c_i` per player.
    pub claim_bounds: Vec<bool>,
    /// `v({i}) <= θ_i <= v(N) - v(N\{i})` per player.
    pub rights_sandwich: Vec<bool>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.efficient
            && self.claim_bounds.iter().all(|b| *b)
            && self.rights_sandwich.iter().all(|b| *b)
    }
}

pub fn validate_allocation(inst: &BankruptcyInstance, payoffs: &[f64]) -> Result<ValidationReport> {
    let n = inst.players();
    if payoffs.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "allocation has {} entries for {n} players",
            payoffs.len()
        )));
    }
    const TOL: f64 = 1e-9;
    let everyone: Vec<usize> = (0..n).collect();
    let grand = inst.psi(&everyone)?;
    let total: f64 = payoffs.iter().sum();
    let (min_rights, max_rights) = rights(inst);

    Ok(ValidationReport {
        efficient: (total - grand).abs() <= TOL,
        claim_bounds: payoffs
            .iter()
            .zip(&inst.claims)
            .map(|(p, c)| *p >= -TOL && *p <= c + TOL)
            .collect(),
        rights_sandwich: payoffs
            .iter()
            .enumerate()
            .map(|(i, p)| *p >= min_rights[i] - TOL && *p <= max_rights[i] + TOL)
            .collect(),
    })
}

/// Did a rate trajectory go broke at exactly `k_b`: strictly positive before,
/// non-positive from `k_b` on.
pub fn bankruptcy_event(trajectory: &[f64], k_b: usize) -> Result<bool> {
    if k_b == 0 || k_b >= trajectory.len() {
        return Err(Error::Config(format!(
            "bankruptcy index {k_b} out of range for a trajectory of {} steps",
            trajectory.len()
        )));
    }
    Ok(trajectory[..k_b].iter().all(|r| *r > 0.0) && trajectory[k_b..].iter().all(|r| *r <= 0.0))
}

/// Empirical frequency of the bankruptcy event over an ensemble of rate
/// trajectories.
pub fn bankruptcy_event_probability(trajectories: &[Vec<f64>], k_b: usize) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::ShapeMismatch("empty trajectory ensemble".into()));
    }
    let mut hits = 0usize;
    for t in trajectories {
        if bankruptcy_event(t, k_b)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / trajectories.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn two_creditor() -> BankruptcyInstance {
        BankruptcyInstance::new(100.0, vec![60.0, 80.0]).unwrap()
    }

    #[test]
    fn psi_known_values() {
        let inst = two_creditor();
        assert_eq!(inst.psi(&[]).unwrap(), 0.0);
        assert_eq!(inst.psi(&[0]).unwrap(), 20.0);
        assert_eq!(inst.psi(&[1]).unwrap(), 40.0);
        assert_eq!(inst.psi(&[0, 1]).unwrap(), 100.0);
        assert!(inst.psi(&[2]).is_err());
        assert!(inst.psi(&[0, 0]).is_err());
    }

    #[test]
    fn psi_no_contest_when_estate_covers_claims() {
        let inst = BankruptcyInstance::new(200.0, vec![60.0, 80.0]).unwrap();
        assert!(!inst.is_bankrupt());
        assert_eq!(inst.psi(&[0]).unwrap(), 60.0);
        assert_eq!(inst.psi(&[1]).unwrap(), 80.0);
        assert_eq!(inst.psi(&[0, 1]).unwrap(), 140.0);
    }

    #[test]
    fn psi_monotone_in_coalition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(2..6usize);
            let claims: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let estate = rng.gen_range(0.0..claims.iter().sum::<f64>());
            let inst = BankruptcyInstance::new(estate, claims).unwrap();
            for mask in 0usize..(1 << n) {
                for add in 0..n {
                    if mask & (1 << add) != 0 {
                        continue;
                    }
                    let small: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                    let mut big = small.clone();
                    big.push(add);
                    assert!(
                        inst.psi(&small).unwrap() <= inst.psi(&big).unwrap() + 1e-12,
                        "monotonicity violated"
                    );
                }
            }
        }
    }

    #[test]
    fn shapley_two_creditor_oracle() {
        // permutation-enumeration oracle: orders (0,1) and (1,0) give
        // φ_0 = ½·v({0}) + ½·(v(N) - v({1})) = ½(20 + 60) = 40
        let alloc = shapley(&two_creditor());
        assert!((alloc.payoffs[0] - 40.0).abs() < 1e-12);
        assert!((alloc.payoffs[1] - 60.0).abs() < 1e-12);
        assert!(alloc.approximation.is_none());
        assert!(validate_allocation(&two_creditor(), &alloc.payoffs)
            .unwrap()
            .all_ok());
    }

    #[test]
    fn shapley_single_creditor_and_zero_estate() {
        let inst = BankruptcyInstance::new(5.0, vec![8.0]).unwrap();
        assert_eq!(shapley(&inst).payoffs, vec![5.0]);

        let zero = BankruptcyInstance::new(0.0, vec![3.0, 7.0]).unwrap();
        assert_eq!(shapley(&zero).payoffs, vec![0.0, 0.0]);
    }

    /// Full permutation enumeration, the independent oracle for small games.
    fn shapley_permutation_oracle(inst: &BankruptcyInstance) -> Vec<f64> {
        fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items.to_vec()];
            }
            let mut out = Vec::new();
            for (i, &head) in items.iter().enumerate() {
                let rest: Vec<usize> = items
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .collect();
                for mut tail in permutations(&rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        let n = inst.players();
        let all: Vec<usize> = (0..n).collect();
        let perms = permutations(&all);
        let mut acc = vec![0.0; n];
        for perm in &perms {
            let mut coalition = Vec::new();
            let mut prev = 0.0;
            for &p in perm {
                coalition.push(p);
                let v = inst.psi(&coalition).unwrap();
                acc[p] += v - prev;
                prev = v;
            }
        }
        acc.iter().map(|a| a / perms.len() as f64).collect()
    }

    #[test]
    fn shapley_matches_permutation_oracle_up_to_six_players() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let n = rng.gen_range(1..=6usize);
            let claims: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
            let estate = rng.gen_range(0.0..1.2 * claims.iter().sum::<f64>());
            let inst = BankruptcyInstance::new(estate, claims).unwrap();
            let fast = shapley(&inst);
            let oracle = shapley_permutation_oracle(&inst);
            for (a, b) in fast.payoffs.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn shapley_properties_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8usize);
            let claims: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..50.0)).collect();
            let estate = rng.gen_range(0.0..claims.iter().sum::<f64>().max(1.0));
            let inst = BankruptcyInstance::new(estate, claims).unwrap();
            let alloc = shapley(&inst);
            let report = validate_allocation(&inst, &alloc.payoffs).unwrap();
            assert!(report.all_ok(), "violated on {inst:?}: {report:?}");
        }
    }

    #[test]
    fn shapley_scaling_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(2..6usize);
            let claims: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
            let estate = rng.gen_range(0.0..claims.iter().sum::<f64>());
            let lambda = rng.gen_range(0.1..5.0);
            let base = BankruptcyInstance::new(estate, claims.clone()).unwrap();
            let scaled = BankruptcyInstance::new(
                lambda * estate,
                claims.iter().map(|c| lambda * c).collect(),
            )
            .unwrap();
            let a = shapley(&base);
            let b = shapley(&scaled);
            for (x, y) in a.payoffs.iter().zip(&b.payoffs) {
                assert!((lambda * x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampled_shapley_close_to_exact() {
        let inst = BankruptcyInstance::new(100.0, vec![60.0, 80.0, 30.0, 45.0]).unwrap();
        let exact = shapley(&inst);
        let sampled = shapley_sampled(&inst, 40_000, 7);
        let (_, err) = sampled.approximation.unwrap();
        for (a, b) in exact.payoffs.iter().zip(&sampled.payoffs) {
            assert!((a - b).abs() < 5.0 * err.max(0.05), "{a} vs {b} (err {err})");
        }
    }

    #[test]
    fn equal_split_report_on_two_creditor() {
        let report = validate_allocation(&two_creditor(), &[50.0, 50.0]).unwrap();
        assert!(report.efficient);
        assert!(report.claim_bounds.iter().all(|b| *b));
        // player 0's max right is v(N) - v({1}) = 60, player 1's min right 40
        assert!(report.rights_sandwich.iter().all(|b| *b));

        // a payoff above its claim is flagged
        let report = validate_allocation(&two_creditor(), &[65.0, 35.0]).unwrap();
        assert!(!report.claim_bounds[0]);
    }

    #[test]
    fn event_detection_and_probability() {
        assert!(!bankruptcy_event(&[1.0, 1.0, 1.0, 1.0], 2).unwrap());
        assert!(bankruptcy_event(&[1.0, 0.5, 0.0, 0.0], 2).unwrap());
        assert!(!bankruptcy_event(&[1.0, 0.5, 0.0, 0.2], 2).unwrap());
        assert!(bankruptcy_event(&[1.0, 1.0], 2).is_err());
        assert!(bankruptcy_event(&[1.0, 1.0], 0).is_err());

        // Bernoulli product oracle: each step positive w.p. q independently;
        // P(event) = q^k_b (1-q)^(len-k_b)
        let q = 0.7f64;
        let len = 6usize;
        let k_b = 4usize;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let trajectories: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                (0..len)
                    .map(|_| if rng.gen_bool(q) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let p_hat = bankruptcy_event_probability(&trajectories, k_b).unwrap();
        let p = q.powi(k_b as i32) * (1.0 - q).powi((len - k_b) as i32);
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        assert!(
            (p_hat - p).abs() <= 3.0 * sigma,
            "p_hat {p_hat} vs p {p} (sigma {sigma})"
        );
    }
}
