//! Problem instances for the dual MAC: channels, weights, the power budget,
//! and evaluation of the weighted sum-rate objective and per-user rates.

use std::fmt;
use std::path::Path;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::hermitian::{all_finite, logdet_hpd, ComplexMatrix, HermitianMatrix, C64};
use crate::sampling::gaussian_matrix;

/// Largest user count accepted by [`ordering_oracle`].
pub const ORACLE_MAX_USERS: usize = 8;

/// Slack allowed by [`feasibility_check`] on both eigenvalues and trace.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-user channel matrices `H_i`, each `nr x nt`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    nt: usize,
    nr: usize,
    channels: Vec<ComplexMatrix>,
}

impl ChannelSet {
    pub fn new(nt: usize, nr: usize, channels: Vec<ComplexMatrix>) -> Result<Self> {
        if nt == 0 || nr == 0 || channels.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for (i, h) in channels.iter().enumerate() {
            if h.shape() != (nr, nt) {
                return Err(mismatch(
                    format!("channel {i} of shape ({nr}, {nt})"),
                    format!("{:?}", h.shape()),
                ));
            }
            if !all_finite(h) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { nt, nr, channels })
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn channels(&self) -> &[ComplexMatrix] {
        &self.channels
    }

    pub fn channel(&self, user: usize) -> &ComplexMatrix {
        &self.channels[user]
    }
}

/// User weights with their ascending order and consecutive differences.
///
/// `permutation[i]` is the (0-based) user at ascending position `i`, and
/// `diffs[i] = u[permutation[i]] - u[permutation[i - 1]]` with the weight
/// before the first position taken as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightProfile {
    pub weights: Vec<f64>,
    pub permutation: Vec<usize>,
    pub diffs: Vec<f64>,
}

impl WeightProfile {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Sorts weights ascending (stable on ties) and computes the diffs.
pub fn ascending_permutation(weights: &[f64]) -> Result<WeightProfile> {
    if weights.is_empty() {
        return Err(Error::EmptyWeights);
    }
    for (index, &value) in weights.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let mut permutation: Vec<usize> = (0..weights.len()).collect();
    permutation.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    let mut prev = 0.0;
    let diffs = permutation
        .iter()
        .map(|&user| {
            let d = weights[user] - prev;
            prev = weights[user];
            d
        })
        .collect();
    Ok(WeightProfile {
        weights: weights.to_vec(),
        permutation,
        diffs,
    })
}

/// Uplink covariance matrices `Q_i`, each `nr x nr`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSet {
    pub blocks: Vec<HermitianMatrix>,
}

impl CovarianceSet {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(users: usize, nr: usize) -> Self {
        Self::new(vec![HermitianMatrix::zeros(nr); users])
    }

    /// `(power / (users * nr)) I` in every block.
    pub fn uniform(users: usize, nr: usize, power: f64) -> Self {
        let level = power / (users * nr) as f64;
        Self::new(vec![HermitianMatrix::identity(nr).scale(level); users])
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(HermitianMatrix::trace).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.blocks.iter().map(|b| b.scale(factor)).collect())
    }

    /// Largest elementwise modulus of `self - other` over all blocks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .fold(0.0, |acc, (a, b)| acc.max(a.max_abs_diff(b)))
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.sub(b).frobenius_norm_sq())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub channels: ChannelSet,
    pub weights: WeightProfile,
    pub power: f64,
    pub label: String,
}

impl ProblemInstance {
    pub fn new(
        channels: ChannelSet,
        weights: &[f64],
        power: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if weights.len() != channels.users() {
            return Err(mismatch(
                format!("{} weights", channels.users()),
                weights.len(),
            ));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidPower(power));
        }
        Ok(Self {
            weights: ascending_permutation(weights)?,
            channels,
            power,
            label: label.into(),
        })
    }

    pub fn users(&self) -> usize {
        self.channels.users()
    }

    pub fn nt(&self) -> usize {
        self.channels.nt()
    }

    pub fn nr(&self) -> usize {
        self.channels.nr()
    }

    pub fn check_covariances(&self, q: &CovarianceSet) -> Result<()> {
        check_blocks(&q.blocks, self.users(), self.nr())
    }

    /// `H_i† Q_i H_i`, an `nt x nt` Hermitian PSD matrix.
    pub fn uplink_term(&self, user: usize, q: &HermitianMatrix) -> HermitianMatrix {
        let h = self.channels.channel(user);
        HermitianMatrix::from_square_unchecked(h.adjoint() * q.as_matrix() * h)
    }

    /// `I + Σ_{j ≥ i} H†QH` over ascending positions, accumulated once from
    /// the last position down. Entry `i` belongs to position `i`.
    pub fn running_sums(&self, q: &CovarianceSet) -> Result<Vec<HermitianMatrix>> {
        self.check_covariances(q)?;
        let k = self.users();
        let mut sums = vec![HermitianMatrix::zeros(0); k];
        let mut acc = HermitianMatrix::identity(self.nt());
        for pos in (0..k).rev() {
            let user = self.weights.permutation[pos];
            acc = acc.add(&self.uplink_term(user, &q.blocks[user]));
            sums[pos] = acc.clone();
        }
        Ok(sums)
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (K={}, nt={}, nr={}, P={})",
            self.label,
            self.users(),
            self.nt(),
            self.nr(),
            self.power
        )
    }
}

pub(crate) fn check_blocks(blocks: &[HermitianMatrix], users: usize, dim: usize) -> Result<()> {
    if blocks.len() != users {
        return Err(mismatch(format!("{users} blocks"), blocks.len()));
    }
    for b in blocks {
        if b.dim() != dim {
            return Err(mismatch(
                format!("{dim}x{dim} block"),
                format!("{0}x{0}", b.dim()),
            ));
        }
    }
    Ok(())
}

/// Weighted sum rate `Σ_i d_i log det(I + Σ_{j ≥ i} H†QH)` in nats.
pub fn evaluate_objective(instance: &ProblemInstance, q: &CovarianceSet) -> Result<f64> {
    let sums = instance.running_sums(q)?;
    let mut total = 0.0;
    for (d, s) in instance.weights.diffs.iter().zip(&sums) {
        total += d * logdet_hpd(s)?;
    }
    Ok(total)
}

/// Successive-decoding rates with the ascending-weight order, reported in
/// original user order (nats).
pub fn mac_user_rates(instance: &ProblemInstance, q: &CovarianceSet) -> Result<Vec<f64>> {
    let sums = instance.running_sums(q)?;
    let logdets = sums.iter().map(logdet_hpd).collect::<Result<Vec<_>>>()?;
    let mut rates = vec![0.0; instance.users()];
    for (pos, &user) in instance.weights.permutation.iter().enumerate() {
        let outer = logdets.get(pos + 1).copied().unwrap_or(0.0);
        rates[user] = logdets[pos] - outer;
    }
    Ok(rates)
}

/// Dirty-paper coding rates for downlink covariances `Γ_i` (`nt x nt`),
/// users encoded in index order.
pub fn dpc_user_rates(channels: &ChannelSet, downlink: &[HermitianMatrix]) -> Result<Vec<f64>> {
    check_blocks(downlink, channels.users(), channels.nt())?;
    let nr = channels.nr();
    let mut rates = vec![0.0; channels.users()];
    let mut tail = HermitianMatrix::zeros(channels.nt());
    for i in (0..channels.users()).rev() {
        let h = channels.channel(i);
        let quad = |g: &HermitianMatrix| -> Result<f64> {
            let m = HermitianMatrix::from_square_unchecked(h * g.as_matrix() * h.adjoint());
            logdet_hpd(&HermitianMatrix::identity(nr).add(&m))
        };
        let interference = quad(&tail)?;
        tail = tail.add(&downlink[i]);
        rates[i] = quad(&tail)? - interference;
    }
    Ok(rates)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `P - Σ Tr(Q_i)`; negative when the budget is exceeded.
    pub trace_slack: f64,
    pub min_eigenvalue: f64,
}

pub fn feasibility_check(q: &CovarianceSet, power: f64) -> FeasibilityReport {
    let min_eigenvalue = q
        .blocks
        .iter()
        .map(|b| b.min_eigenvalue().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let min_eigenvalue = if q.blocks.is_empty() {
        0.0
    } else {
        min_eigenvalue
    };
    let trace_slack = power - q.total_trace();
    FeasibilityReport {
        feasible: min_eigenvalue >= -FEASIBILITY_TOL && trace_slack >= -FEASIBILITY_TOL,
        trace_slack,
        min_eigenvalue,
    }
}

/// I.i.d. unit-variance circularly-symmetric Gaussian channels from a
/// ChaCha8 stream seeded with `seed`.
pub fn generate_rayleigh_channels(
    users: usize,
    nt: usize,
    nr: usize,
    seed: u64,
) -> Result<ChannelSet> {
    if users == 0 || nt == 0 || nr == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = (0..users)
        .map(|_| gaussian_matrix(&mut rng, nr, nt))
        .collect();
    ChannelSet::new(nt, nr, channels)
}

/// Exhaustive search over decoding orders: for each order the vertex rates
/// are evaluated and weighted, and the best order is returned. `order[0]`
/// is decoded first.
pub fn ordering_oracle(instance: &ProblemInstance, q: &CovarianceSet) -> Result<(f64, Vec<usize>)> {
    let k = instance.users();
    if k > ORACLE_MAX_USERS {
        return Err(Error::TooManyUsers {
            users: k,
            limit: ORACLE_MAX_USERS,
        });
    }
    instance.check_covariances(q)?;
    let terms: Vec<HermitianMatrix> = (0..k)
        .map(|u| instance.uplink_term(u, &q.blocks[u]))
        .collect();
    let logdet_of = |users: &[usize]| -> Result<f64> {
        let mut m = HermitianMatrix::identity(instance.nt());
        for &u in users {
            m = m.add(&terms[u]);
        }
        logdet_hpd(&m)
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    for order in (0..k).permutations(k) {
        let mut value = 0.0;
        for i in 0..k {
            let rate = logdet_of(&order[i..])? - logdet_of(&order[i + 1..])?;
            value += instance.weights.weights[order[i]] * rate;
        }
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, order));
        }
    }
    Ok(best.expect("at least one user"))
}

/// On-disk instance layout. Field order is the emitted key order.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "K")]
    users: usize,
    nt: usize,
    nr: usize,
    power: f64,
    weights: Vec<f64>,
    channels: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn instance_to_json(instance: &ProblemInstance) -> Result<String> {
    let file = InstanceFile {
        users: instance.users(),
        nt: instance.nt(),
        nr: instance.nr(),
        power: instance.power,
        weights: instance.weights.weights.clone(),
        channels: instance
            .channels
            .channels()
            .iter()
            .map(|h| {
                (0..h.nrows())
                    .map(|r| {
                        (0..h.ncols())
                            .map(|c| [h[(r, c)].re, h[(r, c)].im])
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn instance_from_json(text: &str, label: impl Into<String>) -> Result<ProblemInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.channels.len() != file.users {
        return Err(mismatch(
            format!("{} channels", file.users),
            file.channels.len(),
        ));
    }
    let mut channels = Vec::with_capacity(file.users);
    for (i, rows) in file.channels.iter().enumerate() {
        if rows.len() != file.nr || rows.iter().any(|r| r.len() != file.nt) {
            return Err(mismatch(
                format!("channel {i} with {} rows of {} entries", file.nr, file.nt),
                "ragged or mis-sized matrix",
            ));
        }
        channels.push(ComplexMatrix::from_fn(file.nr, file.nt, |r, c| {
            let [re, im] = rows[r][c];
            C64::new(re, im)
        }));
    }
    let channels = ChannelSet::new(file.nt, file.nr, channels)?;
    ProblemInstance::new(channels, &file.weights, file.power, label)
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    instance_from_json(&text, label)
}

pub fn write_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    let mut text = instance_to_json(instance)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
