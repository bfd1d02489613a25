//! Finite-alphabet probability foundation.
//!
//! Distributions are dense nonnegative arrays over index-based alphabets
//! `0..n-1`; symbol labels are a presentation concern and live in the CLI.
//! All information measures are in bits (base-2 logarithms) with the usual
//! convention `0·log 0 = 0`. A positive mass against a zero reference is a
//! hard domain error rather than `+inf`, so absolute-continuity bugs surface
//! immediately.

use crate::error::{Error, Result};

/// Tolerance for normalization checks on construction.
pub const PROB_TOL: f64 = 1e-9;

fn log2(x: f64) -> f64 {
    x.ln() / std::f64::consts::LN_2
}

/// Probability mass function over a finite alphabet.
///
/// Invariants (checked at construction): every entry is nonnegative and the
/// entries sum to 1 within [`PROB_TOL`]. Values are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_mass(&probs, 1.0, "pmf")?;
        Ok(Self { probs })
    }

    /// Explicit renormalization helper. Never applied implicitly.
    pub fn renormalized(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is negative or non-finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        Ok(Self {
            probs: probs.iter().map(|p| p / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n.max(1)],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n.max(1)];
        probs[at.min(n.saturating_sub(1))] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// Joint distribution over a pair of finite alphabets, stored row-major.
///
/// Rows index the first coordinate, columns the second. Both marginals of a
/// valid joint are valid [`Pmf`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    probs: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl JointPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidDistribution("empty joint".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged joint rows".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        validate_mass(&flat, 1.0, "joint pmf")?;
        Ok(Self {
            rows: flat.len() / cols,
            cols,
            probs: flat,
        })
    }

    /// Joint induced by a marginal and a conditional law: `p(x,y) = p(x)·ch(y|x)`.
    pub fn from_marginal_and_channel(px: &Pmf, ch: &Channel) -> Result<Self> {
        if px.len() != ch.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "marginal has {} symbols, channel expects {}",
                px.len(),
                ch.inputs()
            )));
        }
        let mut probs = Vec::with_capacity(px.len() * ch.outputs());
        for x in 0..px.len() {
            for y in 0..ch.outputs() {
                probs.push(px.get(x) * ch.get(x, y));
            }
        }
        Ok(Self {
            rows: px.len(),
            cols: ch.outputs(),
            probs,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.cols + j]
    }

    /// Marginal over the first coordinate (sums out columns).
    pub fn row_marginal(&self) -> Pmf {
        let mut m = vec![0.0; self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[i] += self.get(i, j);
            }
        }
        Pmf { probs: m }
    }

    /// Marginal over the second coordinate (sums out rows).
    pub fn col_marginal(&self) -> Pmf {
        let mut m = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[j] += self.get(i, j);
            }
        }
        Pmf { probs: m }
    }

    /// Conditional `p(row | col = j)` as a vector over rows; `None` if the
    /// column has zero mass.
    pub fn row_given_col(&self, j: usize) -> Option<Vec<f64>> {
        let mass: f64 = (0..self.rows).map(|i| self.get(i, j)).sum();
        if mass <= 0.0 {
            return None;
        }
        Some((0..self.rows).map(|i| self.get(i, j) / mass).collect())
    }

    /// Transposed view `p(col, row)` as a new joint.
    pub fn transposed(&self) -> JointPmf {
        let mut probs = vec![0.0; self.probs.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                probs[j * self.rows + i] = self.get(i, j);
            }
        }
        JointPmf {
            probs,
            rows: self.cols,
            cols: self.rows,
        }
    }
}

/// Row-stochastic conditional law `output | input`: one [`Pmf`] per input
/// symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    probs: Vec<f64>,
    inputs: usize,
    outputs: usize,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidDistribution("empty channel".into()));
        }
        let outputs = rows[0].len();
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::ShapeMismatch("ragged channel rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            validate_mass(row, 1.0, &format!("channel row {i}"))?;
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(Self {
            inputs: flat.len() / outputs,
            outputs,
            probs: flat,
        })
    }

    /// Identity mapping on the first `inputs` symbols; requires
    /// `outputs >= inputs`.
    pub fn identity(inputs: usize, outputs: usize) -> Result<Self> {
        if outputs < inputs {
            return Err(Error::ShapeMismatch(format!(
                "identity needs outputs >= inputs, got {outputs} < {inputs}"
            )));
        }
        let mut probs = vec![0.0; inputs * outputs];
        for x in 0..inputs {
            probs[x * outputs + x] = 1.0;
        }
        Ok(Self {
            inputs,
            outputs,
            probs,
        })
    }

    /// All rows equal to `out`: output independent of input.
    pub fn constant(inputs: usize, out: &Pmf) -> Self {
        let mut probs = Vec::with_capacity(inputs * out.len());
        for _ in 0..inputs {
            probs.extend_from_slice(out.probs());
        }
        Self {
            inputs,
            outputs: out.len(),
            probs,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.outputs)
    }

    /// Output marginal under an input distribution.
    pub fn output_marginal(&self, px: &Pmf) -> Result<Pmf> {
        if px.len() != self.inputs {
            return Err(Error::ShapeMismatch(format!(
                "input pmf has {} symbols, channel expects {}",
                px.len(),
                self.inputs
            )));
        }
        let mut py = vec![0.0; self.outputs];
        for x in 0..self.inputs {
            for y in 0..self.outputs {
                py[y] += px.get(x) * self.get(x, y);
            }
        }
        Ok(Pmf { probs: py })
    }
}

fn validate_mass(probs: &[f64], target: f64, what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("empty {what}")));
    }
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {p} is negative or non-finite"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - target).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, expected {target}"
        )));
    }
    Ok(())
}

/// Shannon entropy in bits, `H(p) = -Σ p log2 p`.
pub fn entropy(p: &Pmf) -> f64 {
    let h: f64 = p
        .probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * log2(x))
        .sum();
    h.max(0.0)
}

/// Mutual information in bits between the two coordinates of a joint,
/// `I = Σ p(a,b) log2 [p(a,b) / (p(a)p(b))]`.
///
/// Nonnegative by construction; floating-point round-off below zero is
/// clamped.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let pa = j.row_marginal();
    let pb = j.col_marginal();
    let mut total = 0.0;
    for a in 0..j.nrows() {
        for b in 0..j.ncols() {
            let p = j.get(a, b);
            if p > 0.0 {
                total += p * log2(p / (pa.get(a) * pb.get(b)));
            }
        }
    }
    total.max(0.0)
}

/// Kullback–Leibler divergence in bits, `D(p||q) = Σ p log2(p/q)`.
///
/// Requires `q > 0` wherever `p > 0`; a violation is a domain error rather
/// than `+inf`.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "kl: alphabets differ ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::Domain(format!(
                    "kl: p({i}) = {pi} > 0 but q({i}) = 0 (absolute continuity violated)"
                )));
            }
            total += pi * log2(pi / qi);
        }
    }
    Ok(total.max(0.0))
}

/// Natural-log KL divergence between raw probability vectors.
///
/// Same absolute-continuity contract as [`kl_divergence`]; used where the
/// objective is stated in nats.
pub fn kl_divergence_nats(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "kl: alphabets differ ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::Domain(format!(
                    "kl: p({i}) = {pi} > 0 but q({i}) = 0 (absolute continuity violated)"
                )));
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Push a joint `p(s,x)` through a channel `P(Y|X)` along the Markov chain
/// S → X → Y: `p(s,y) = Σ_x p(s,x)·ch(y|x)`.
///
/// The data-processing inequality `I(S;Y) <= I(S;X)` holds for the result,
/// and the S-marginal is preserved.
pub fn compose_markov(p_sx: &JointPmf, ch_yx: &Channel) -> Result<JointPmf> {
    if p_sx.ncols() != ch_yx.inputs() {
        return Err(Error::ShapeMismatch(format!(
            "joint has {} X-symbols, channel expects {}",
            p_sx.ncols(),
            ch_yx.inputs()
        )));
    }
    let (ns, ny) = (p_sx.nrows(), ch_yx.outputs());
    let mut probs = vec![0.0; ns * ny];
    for s in 0..ns {
        for x in 0..p_sx.ncols() {
            let psx = p_sx.get(s, x);
            if psx == 0.0 {
                continue;
            }
            for y in 0..ny {
                probs[s * ny + y] += psx * ch_yx.get(x, y);
            }
        }
    }
    Ok(JointPmf {
        probs,
        rows: ns,
        cols: ny,
    })
}

/// Information lost about S when X is passed through the channel:
/// `I(S;X) - I(S;Y) >= 0`.
///
/// Equals the expected conditional KL divergence
/// `E_{x,y}[ D( p(s|x) || p(s|y) ) ]`, which [`distortion_gap_expected_kl`]
/// evaluates directly as an independent route.
pub fn distortion_gap(p_sx: &JointPmf, ch_yx: &Channel) -> Result<f64> {
    let p_sy = compose_markov(p_sx, ch_yx)?;
    Ok((mutual_information(p_sx) - mutual_information(&p_sy)).max(0.0))
}

/// The same gap via the expected conditional KL form:
/// `Σ_{x,y} p(x,y) D( p(s|x) || p(s|y) )`.
pub fn distortion_gap_expected_kl(p_sx: &JointPmf, ch_yx: &Channel) -> Result<f64> {
    if p_sx.ncols() != ch_yx.inputs() {
        return Err(Error::ShapeMismatch(format!(
            "joint has {} X-symbols, channel expects {}",
            p_sx.ncols(),
            ch_yx.inputs()
        )));
    }
    let ns = p_sx.nrows();
    let nx = p_sx.ncols();
    let ny = ch_yx.outputs();
    let px = p_sx.col_marginal();
    let p_sy = compose_markov(p_sx, ch_yx)?;
    let py = p_sy.col_marginal();

    let mut total = 0.0;
    for x in 0..nx {
        if px.get(x) == 0.0 {
            continue;
        }
        let s_given_x: Vec<f64> = (0..ns).map(|s| p_sx.get(s, x) / px.get(x)).collect();
        for y in 0..ny {
            let pxy = px.get(x) * ch_yx.get(x, y);
            if pxy == 0.0 {
                continue;
            }
            let mut kl = 0.0;
            for s in 0..ns {
                if s_given_x[s] > 0.0 {
                    let s_given_y = p_sy.get(s, y) / py.get(y);
                    if s_given_y <= 0.0 {
                        return Err(Error::Domain(format!(
                            "conditional p(s={s}|y={y}) vanished under positive p(s|x)"
                        )));
                    }
                    kl += s_given_x[s] * log2(s_given_x[s] / s_given_y);
                }
            }
            total += pxy * kl;
        }
    }
    Ok(total.max(0.0))
}
