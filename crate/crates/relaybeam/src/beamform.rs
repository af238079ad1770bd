//! Zero-forcing transmit beamformers for a selected SMC group: right-inverse
//! precoders per phase and transmitter, unit-power normalization weights, and
//! the effective channel-to-noise ratios they induce.

use num_complex::Complex;

use crate::channel::{ChannelRealization, RadioParams};
use crate::decompose::{Rx, Tx};
use crate::error::{Error, Result};
use crate::grouping::{Entity, SlotGains, SmcGroup};
use crate::matrixkit::{svd, C64, CMat, CVec, RANK_TOL};
use crate::topology::NetworkConfig;

/// Refined matrices with a worse condition number than this are rejected
/// rather than regularized, preserving the exact zero-forcing contract.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Per-transmitter phase-2 beamformer: the ZF matrix spans all selected
/// second-phase slots; only the transmitter's own served columns carry a
/// nonzero weight.
#[derive(Debug, Clone)]
pub struct TxBeamformer {
    pub transmitter: Tx,
    /// N_t x q_t2 right inverse of this transmitter's refined matrix.
    pub matrix: CMat,
    /// Per-slot normalization weight; zero for slots served elsewhere.
    pub weights: Vec<f64>,
}

/// All transmit beamformers of one group.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// Phase-1 ZF matrix (N_B x q_t1) and its weights, absent when the group
    /// schedules nothing in the first phase.
    pub t1: Option<(CMat, Vec<f64>)>,
    /// One beamformer per serving second-phase transmitter, BS first.
    pub t2: Vec<TxBeamformer>,
    /// Worst condition number among the refined matrices.
    pub condition: f64,
}

/// Effective CNR per unit transmit power for each group member, split by
/// phase; `None` where the member has no slot in that phase.
#[derive(Debug, Clone)]
pub struct CnrSet {
    pub t1: Vec<Option<f64>>,
    pub t2: Vec<Option<f64>>,
}

/// Validity and effective slot gains of a candidate group, computed without
/// forming the full precoding matrices.
#[derive(Debug, Clone)]
pub struct GroupEval {
    pub valid: bool,
    pub condition: f64,
    pub gains: SlotGains,
}

/// Stack the selected first-phase rows (member order).
fn phase1_refined(group: &SmcGroup, pool: &[Entity]) -> Option<CMat> {
    let rows: Vec<&CVec> = group.members.iter().filter_map(|&m| pool[m].phase1_row()).collect();
    if rows.is_empty() {
        return None;
    }
    let n_b = rows[0].len();
    Some(CMat::from_fn(rows.len(), n_b, |i, j| rows[i][j]))
}

fn ue_of_phase2_slot(e: &Entity) -> usize {
    e.served_ue2().expect("phase-2 slot must serve a UE")
}

fn rx_row_of_phase2_slot(e: &Entity) -> &CVec {
    match e {
        Entity::Direct(s) => &s.rx_row,
        Entity::Pair(p) => &p.second_hop.rx_row,
    }
}

/// Refined matrix of one second-phase transmitter: every selected slot's
/// receive row applied to that transmitter's channel, in member order.
fn phase2_refined(
    group: &SmcGroup,
    pool: &[Entity],
    realization: &ChannelRealization,
    tx: Tx,
) -> CMat {
    let n = group.subcarrier;
    let slots: Vec<&Entity> = group
        .members
        .iter()
        .map(|&m| &pool[m])
        .filter(|e| e.phase2_row().is_some())
        .collect();
    let n_t = match tx {
        Tx::Bs => realization.h_bu[n][0].ncols(),
        Tx::Rn(m) => realization.h_ru[n][m][0].ncols(),
    };
    let mut refined = CMat::zeros(slots.len(), n_t);
    for (s, e) in slots.iter().enumerate() {
        let k = ue_of_phase2_slot(e);
        let h = match tx {
            Tx::Bs => &realization.h_bu[n][k],
            Tx::Rn(m) => &realization.h_ru[n][m][k],
        };
        let r = rx_row_of_phase2_slot(e);
        for j in 0..n_t {
            let mut acc = Complex::new(0.0, 0.0);
            for i in 0..r.len() {
                acc += r[i] * h[(i, j)];
            }
            refined[(s, j)] = acc;
        }
    }
    refined
}

struct ZfSolution {
    matrix: CMat,
    /// 1 / column norm, per slot.
    weights: Vec<f64>,
    condition: f64,
}

/// Right inverse `A^H (A A^H)^{-1}` of a stack of selected rows, via the SVD,
/// with unit-power column weights. Rejects rank deficiency and extreme
/// conditioning instead of regularizing.
fn zf_solution(refined: &CMat) -> Result<ZfSolution> {
    let dec = svd(refined)?;
    let smax = dec.singular_values.max();
    let smin = dec.singular_values.min();
    if dec.singular_values.len() < refined.nrows() || smin <= RANK_TOL * smax || smax == 0.0 {
        return Err(Error::Singular("refined matrix lost row rank".into()));
    }
    let condition = smax / smin;
    if condition > CONDITION_LIMIT {
        return Err(Error::Singular(format!("refined matrix condition {condition:.3e}")));
    }
    let r = dec.singular_values.len();
    let sinv = CMat::from_fn(r, r, |i, j| {
        if i == j {
            Complex::new(1.0 / dec.singular_values[i], 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let pinv = dec.v_h.adjoint() * &sinv * dec.u.adjoint();
    // one refinement pass keeps A*T close to I even near the condition limit
    let resid = CMat::identity(refined.nrows(), refined.nrows()) - refined * &pinv;
    let matrix = &pinv + &pinv * resid;
    let weights = (0..matrix.ncols()).map(|i| 1.0 / matrix.column(i).norm()).collect();
    Ok(ZfSolution { matrix, weights, condition })
}

/// Eigenvalue ratios below this cannot be resolved from a Gram matrix in
/// double precision; such stacks are re-examined through the SVD.
const GRAM_RELIABLE_RATIO: f64 = 1e-10;

enum GramOutcome {
    /// Condition number; the `q` weights were appended.
    Resolved(f64),
    /// Too ill-conditioned for the Gram route; decide via the SVD.
    NeedsSvd,
}

/// Fast kernel of the weights-only path: eigendecompose a Gram matrix in
/// place (column-major, dimension `q`) and append the `q` slot weights
/// `1/√((G^{-1})_ii)` to `weights`, unless the spectrum is too spread to
/// trust squared singular values.
fn weights_from_gram(
    gram: &mut [C64],
    evec: &mut [C64],
    q: usize,
    weights: &mut Vec<f64>,
) -> GramOutcome {
    // closed forms for the common small stacks
    if q == 1 {
        let a = gram[0].re;
        if a <= 0.0 {
            return GramOutcome::NeedsSvd;
        }
        weights.push(a.sqrt());
        return GramOutcome::Resolved(1.0);
    }
    let (lmax, lmin) = if q == 2 {
        let a = gram[0].re;
        let d = gram[3].re;
        let b2 = gram[2].norm_sqr();
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b2).sqrt();
        let lmax = mean + disc;
        ((lmax), (a * d - b2) / lmax)
    } else {
        crate::matrixkit::jacobi_hermitian_eigen_slice(gram, evec, q);
        let mut lmax = f64::NEG_INFINITY;
        let mut lmin = f64::INFINITY;
        for i in 0..q {
            let l = gram[i + i * q].re;
            lmax = lmax.max(l);
            lmin = lmin.min(l);
        }
        (lmax, lmin)
    };
    if lmax <= 0.0 || lmin <= GRAM_RELIABLE_RATIO * lmax {
        return GramOutcome::NeedsSvd;
    }
    let condition = (lmax / lmin).sqrt();
    if q == 2 {
        let a = gram[0].re;
        let d = gram[3].re;
        let det = a * d - gram[2].norm_sqr();
        weights.push((det / d).sqrt());
        weights.push((det / a).sqrt());
    } else {
        for i in 0..q {
            let mut norm_sq = 0.0;
            for j in 0..q {
                norm_sq += evec[i + j * q].norm_sqr() / gram[j + j * q].re;
            }
            weights.push(1.0 / norm_sq.sqrt());
        }
    }
    GramOutcome::Resolved(condition)
}

/// Weights and condition via the SVD: `‖T col i‖² = Σ_j |U_ij|²/σ_j²`.
/// Applies the same rank and condition gates as the full precoder path.
fn weights_from_svd(refined: &CMat) -> Result<(Vec<f64>, f64)> {
    let dec = svd(refined)?;
    let smax = dec.singular_values.max();
    let smin = dec.singular_values.min();
    if dec.singular_values.len() < refined.nrows() || smin <= RANK_TOL * smax || smax == 0.0 {
        return Err(Error::Singular("refined matrix lost row rank".into()));
    }
    let condition = smax / smin;
    if condition > CONDITION_LIMIT {
        return Err(Error::Singular(format!("refined matrix condition {condition:.3e}")));
    }
    let weights = (0..refined.nrows())
        .map(|i| {
            let norm_sq: f64 = (0..dec.singular_values.len())
                .map(|j| dec.u[(i, j)].norm_sqr() / (dec.singular_values[j] * dec.singular_values[j]))
                .sum();
            1.0 / norm_sq.sqrt()
        })
        .collect();
    Ok((weights, condition))
}

/// Slot weights without forming the precoder.
#[cfg(test)]
fn zf_weights_only(refined: &CMat) -> Result<(Vec<f64>, f64)> {
    let q = refined.nrows();
    let mut gram = (refined * refined.adjoint()).as_slice().to_vec();
    let mut evec = vec![Complex::new(0.0, 0.0); q * q];
    let mut weights = Vec::with_capacity(q);
    match weights_from_gram(&mut gram, &mut evec, q, &mut weights) {
        GramOutcome::Resolved(condition) => Ok((weights, condition)),
        GramOutcome::NeedsSvd => weights_from_svd(refined),
    }
}

/// Transmitters serving at least one second-phase slot, BS first.
pub fn serving_transmitters(group: &SmcGroup, pool: &[Entity], num_relays: usize) -> Vec<Tx> {
    let mut txs = Vec::new();
    let serves = |t: Tx| group.members.iter().any(|&m| pool[m].required_tx2() == Some(t));
    if serves(Tx::Bs) {
        txs.push(Tx::Bs);
    }
    for m in 0..num_relays {
        if serves(Tx::Rn(m)) {
            txs.push(Tx::Rn(m));
        }
    }
    txs
}

/// Phase-1 ZF beamformer of a group: the right inverse of the stacked
/// selected rows with unit-power column weights.
pub fn zf_phase1(group: &SmcGroup, pool: &[Entity]) -> Result<Option<(CMat, Vec<f64>)>> {
    match phase1_refined(group, pool) {
        None => Ok(None),
        Some(refined) => {
            let sol = zf_solution(&refined)?;
            Ok(Some((sol.matrix, sol.weights)))
        }
    }
}

/// Phase-2 ZF beamformers, one per serving transmitter. Every beamformer
/// zero-forces all selected slots; weights are nonzero only on the columns
/// the transmitter itself serves.
pub fn zf_phase2(
    group: &SmcGroup,
    pool: &[Entity],
    realization: &ChannelRealization,
    config: &NetworkConfig,
) -> Result<Vec<TxBeamformer>> {
    let slots: Vec<&Entity> = group
        .members
        .iter()
        .map(|&m| &pool[m])
        .filter(|e| e.phase2_row().is_some())
        .collect();
    if slots.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tx in serving_transmitters(group, pool, config.num_relays) {
        let refined = phase2_refined(group, pool, realization, tx);
        let sol = zf_solution(&refined)?;
        let weights = slots
            .iter()
            .zip(&sol.weights)
            .map(|(e, &w)| if e.required_tx2() == Some(tx) { w } else { 0.0 })
            .collect();
        out.push(TxBeamformer { transmitter: tx, matrix: sol.matrix, weights });
    }
    Ok(out)
}

/// Build the full beamformer set of a group.
pub fn beamform_group(
    group: &SmcGroup,
    pool: &[Entity],
    realization: &ChannelRealization,
    config: &NetworkConfig,
) -> Result<BeamformerSet> {
    let mut condition: f64 = 1.0;
    let t1 = match phase1_refined(group, pool) {
        None => None,
        Some(refined) => {
            let sol = zf_solution(&refined)?;
            condition = condition.max(sol.condition);
            Some((sol.matrix, sol.weights))
        }
    };
    let t2 = zf_phase2(group, pool, realization, config)?;
    for bf in &t2 {
        let dec = svd(&bf.matrix)?;
        condition = condition.max(dec.singular_values.max() / dec.singular_values.min());
    }
    Ok(BeamformerSet { t1, t2, condition })
}

/// Batch evaluator for the gains of many groups over one entity pool: the
/// per-entity cross-transmitter rows are computed once, and all Gram/eigen
/// work runs in reused scratch buffers.
pub struct GroupEvaluator<'a> {
    pool: &'a [Entity],
    num_relays: usize,
    /// `cross[e][t]`: entity e's receive row applied to transmitter t's
    /// channel (t = 0 for the BS, 1 + m for RN m); empty when e has no
    /// second-phase slot.
    cross: Vec<Vec<Vec<C64>>>,
    gram: Vec<C64>,
    evec: Vec<C64>,
    weights: Vec<f64>,
    p1_members: Vec<usize>,
    p2_members: Vec<usize>,
    /// Weights and condition per distinct first-phase member set (groups
    /// sharing the same selected rows share the same beamformer).
    p1_cache: crate::grouping::FnvMap<Vec<u16>, Option<(Vec<f64>, f64)>>,
    /// Per-slot weights and condition per distinct second-phase member set.
    p2_cache: crate::grouping::FnvMap<Vec<u16>, Option<(Vec<f64>, f64)>>,
    key_scratch: Vec<u16>,
}

impl<'a> GroupEvaluator<'a> {
    pub fn new(pool: &'a [Entity], realization: &ChannelRealization, config: &NetworkConfig) -> Self {
        let num_relays = config.num_relays;
        let cross = pool
            .iter()
            .map(|e| {
                if e.phase2_row().is_none() {
                    return Vec::new();
                }
                let n = e.subcarrier();
                let k = ue_of_phase2_slot(e);
                let r = rx_row_of_phase2_slot(e);
                (0..=num_relays)
                    .map(|t| {
                        let h = if t == 0 {
                            &realization.h_bu[n][k]
                        } else {
                            &realization.h_ru[n][t - 1][k]
                        };
                        (0..h.ncols())
                            .map(|j| (0..r.len()).map(|i| r[i] * h[(i, j)]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GroupEvaluator {
            pool,
            num_relays,
            cross,
            gram: Vec::new(),
            evec: Vec::new(),
            weights: Vec::new(),
            p1_members: Vec::new(),
            p2_members: Vec::new(),
            p1_cache: crate::grouping::FnvMap::default(),
            p2_cache: crate::grouping::FnvMap::default(),
            key_scratch: Vec::new(),
        }
    }

    fn prepare_scratch(&mut self, q: usize) {
        self.gram.clear();
        self.gram.resize(q * q, Complex::new(0.0, 0.0));
        self.evec.clear();
        self.evec.resize(q * q, Complex::new(0.0, 0.0));
        self.weights.clear();
    }

    /// Phase-1 weights (in `p1_members` order) and condition, or None when
    /// the stacked rows lose rank or exceed the condition limit.
    fn compute_p1_weights(&mut self) -> Option<(Vec<f64>, f64)> {
        let q1 = self.p1_members.len();
        self.prepare_scratch(q1);
        for i in 0..q1 {
            let ri = self.pool[self.p1_members[i]].phase1_row().unwrap().as_slice();
            for j in i..q1 {
                let rj = self.pool[self.p1_members[j]].phase1_row().unwrap().as_slice();
                let mut acc = Complex::new(0.0, 0.0);
                for k in 0..ri.len() {
                    acc += ri[k] * rj[k].conj();
                }
                self.gram[i + j * q1] = acc;
                self.gram[j + i * q1] = acc.conj();
            }
        }
        match weights_from_gram(&mut self.gram, &mut self.evec, q1, &mut self.weights) {
            GramOutcome::Resolved(cond) => Some((self.weights.clone(), cond)),
            GramOutcome::NeedsSvd => {
                let n_b = self.pool[self.p1_members[0]].phase1_row().unwrap().len();
                let refined = CMat::from_fn(q1, n_b, |i, j| {
                    self.pool[self.p1_members[i]].phase1_row().unwrap()[j]
                });
                weights_from_svd(&refined).ok()
            }
        }
    }

    /// Per-slot phase-2 weights (in `p2_members` order) and the worst
    /// condition among the serving transmitters' refined matrices.
    fn compute_p2_weights(&mut self) -> Option<(Vec<f64>, f64)> {
        let q2 = self.p2_members.len();
        let mut serving = [false; 33];
        for &m in &self.p2_members {
            match self.pool[m].required_tx2() {
                Some(Tx::Bs) => serving[0] = true,
                Some(Tx::Rn(r)) => serving[r + 1] = true,
                None => {}
            }
        }
        let mut slot_weights = vec![f64::NAN; q2];
        let mut condition: f64 = 1.0;
        for t in 0..=self.num_relays {
            if !serving[t] {
                continue;
            }
            self.prepare_scratch(q2);
            for i in 0..q2 {
                let ri = &self.cross[self.p2_members[i]][t];
                for j in i..q2 {
                    let rj = &self.cross[self.p2_members[j]][t];
                    let mut acc = Complex::new(0.0, 0.0);
                    for k in 0..ri.len() {
                        acc += ri[k] * rj[k].conj();
                    }
                    self.gram[i + j * q2] = acc;
                    self.gram[j + i * q2] = acc.conj();
                }
            }
            let outcome = weights_from_gram(&mut self.gram, &mut self.evec, q2, &mut self.weights);
            let (weights, cond) = match outcome {
                GramOutcome::Resolved(cond) => (std::mem::take(&mut self.weights), cond),
                GramOutcome::NeedsSvd => {
                    let n_t = self.cross[self.p2_members[0]][t].len();
                    let refined =
                        CMat::from_fn(q2, n_t, |i, j| self.cross[self.p2_members[i]][t][j]);
                    match weights_from_svd(&refined) {
                        Ok(res) => res,
                        Err(_) => return None,
                    }
                }
            };
            condition = condition.max(cond);
            let tx = if t == 0 { Tx::Bs } else { Tx::Rn(t - 1) };
            for (slot, &m) in self.p2_members.iter().enumerate() {
                if self.pool[m].required_tx2() == Some(tx) {
                    slot_weights[slot] = weights[slot];
                }
            }
        }
        Some((slot_weights, condition))
    }

    /// Validity and member-aligned slot gains of one group. Results are
    /// memoized per distinct phase-1 and phase-2 member set, which the
    /// exhaustive search revisits heavily.
    pub fn eval(&mut self, group: &SmcGroup) -> GroupEval {
        let members = &group.members;
        let mut t1 = vec![f64::NAN; members.len()];
        let mut t2 = vec![f64::NAN; members.len()];
        let mut condition: f64 = 1.0;

        self.p1_members.clear();
        self.p2_members.clear();
        for &m in members {
            if self.pool[m].phase1_row().is_some() {
                self.p1_members.push(m);
            }
            if self.pool[m].phase2_row().is_some() {
                self.p2_members.push(m);
            }
        }

        if !self.p1_members.is_empty() {
            self.key_scratch.clear();
            self.key_scratch.extend(self.p1_members.iter().map(|&m| m as u16));
            if !self.p1_cache.contains_key(self.key_scratch.as_slice()) {
                let computed = self.compute_p1_weights();
                self.p1_cache.insert(self.key_scratch.clone(), computed);
            }
            match self.p1_cache.get(self.key_scratch.as_slice()).unwrap() {
                None => {
                    return GroupEval {
                        valid: false,
                        condition: f64::INFINITY,
                        gains: SlotGains { t1, t2 },
                    }
                }
                Some((weights, cond)) => {
                    condition = condition.max(*cond);
                    let mut slot = 0;
                    for (i, &m) in members.iter().enumerate() {
                        if self.pool[m].phase1_row().is_some() {
                            t1[i] = weights[slot];
                            slot += 1;
                        }
                    }
                }
            }
        }

        if !self.p2_members.is_empty() {
            self.key_scratch.clear();
            self.key_scratch.extend(self.p2_members.iter().map(|&m| m as u16));
            if !self.p2_cache.contains_key(self.key_scratch.as_slice()) {
                let computed = self.compute_p2_weights();
                self.p2_cache.insert(self.key_scratch.clone(), computed);
            }
            match self.p2_cache.get(self.key_scratch.as_slice()).unwrap() {
                None => {
                    return GroupEval {
                        valid: false,
                        condition: f64::INFINITY,
                        gains: SlotGains { t1, t2 },
                    }
                }
                Some((slot_weights, cond)) => {
                    condition = condition.max(*cond);
                    let mut slot = 0;
                    for (i, &m) in members.iter().enumerate() {
                        if self.pool[m].phase2_row().is_some() {
                            t2[i] = slot_weights[slot];
                            slot += 1;
                        }
                    }
                }
            }
        }

        GroupEval { valid: true, condition, gains: SlotGains { t1, t2 } }
    }
}

/// Validity and member-aligned slot gains of a group. Gains are the diagonal
/// normalization weights: `t1[i]`/`t2[i]` carries member i's slot weight or
/// NaN when the member has no slot in that phase.
pub fn eval_group(
    group: &SmcGroup,
    pool: &[Entity],
    realization: &ChannelRealization,
    config: &NetworkConfig,
) -> GroupEval {
    GroupEvaluator::new(pool, realization, config).eval(group)
}

/// Effective CNR per watt for each slot: `|w|² / (Δγ · N0 · W)`.
pub fn effective_cnrs(gains: &SlotGains, radio: &RadioParams) -> CnrSet {
    let denom = radio.snr_gap * radio.noise_power_w();
    let conv = |w: &f64| if w.is_nan() { None } else { Some(w * w / denom) };
    CnrSet { t1: gains.t1.iter().map(conv).collect(), t2: gains.t2.iter().map(conv).collect() }
}

/// Received coefficient matrices of the full link equation, one per phase:
/// entry (s, s') is what stream s's receive port observes of stream s''s
/// unit-power symbol. Zero forcing makes these diagonal with the slot
/// weights on the diagonal.
pub fn link_coefficients(
    group: &SmcGroup,
    pool: &[Entity],
    bf: &BeamformerSet,
    realization: &ChannelRealization,
) -> (CMat, CMat) {
    let n = group.subcarrier;
    let members: Vec<&Entity> = group.members.iter().map(|&m| &pool[m]).collect();

    // phase 1: only the BS transmits
    let p1_slots: Vec<&Entity> = members.iter().copied().filter(|e| e.phase1_row().is_some()).collect();
    let q1 = p1_slots.len();
    let mut c1 = CMat::zeros(q1, q1);
    if let Some((t_mat, w)) = &bf.t1 {
        for (s, e) in p1_slots.iter().enumerate() {
            // receive port of the phase-1 slot
            let (rx_row, h) = match e {
                Entity::Direct(smc) => (
                    &smc.rx_row,
                    match smc.receiver {
                        Rx::Ue(k) => &realization.h_bu[n][k],
                        Rx::Rn(m) => &realization.h_br[n][m],
                    },
                ),
                Entity::Pair(p) => (&p.first_hop.rx_row, &realization.h_br[n][p.rn]),
            };
            let port = (rx_row.transpose() * h).transpose();
            for sp in 0..q1 {
                let coeff: Complex<f64> = port
                    .iter()
                    .zip(t_mat.column(sp).iter())
                    .map(|(a, b)| a * b)
                    .sum();
                c1[(s, sp)] = coeff * Complex::new(w[sp], 0.0);
            }
        }
    }

    // phase 2: every serving transmitter contributes
    let p2_slots: Vec<&Entity> = members.iter().copied().filter(|e| e.phase2_row().is_some()).collect();
    let q2 = p2_slots.len();
    let mut c2 = CMat::zeros(q2, q2);
    for (s, e) in p2_slots.iter().enumerate() {
        let k = ue_of_phase2_slot(e);
        let rx_row = rx_row_of_phase2_slot(e);
        for bf_tx in &bf.t2 {
            let h = match bf_tx.transmitter {
                Tx::Bs => &realization.h_bu[n][k],
                Tx::Rn(m) => &realization.h_ru[n][m][k],
            };
            let port = (rx_row.transpose() * h).transpose();
            for sp in 0..q2 {
                if bf_tx.weights[sp] == 0.0 {
                    continue;
                }
                let coeff: Complex<f64> = port
                    .iter()
                    .zip(bf_tx.matrix.column(sp).iter())
                    .map(|(a, b)| a * b)
                    .sum();
                c2[(s, sp)] += coeff * Complex::new(bf_tx.weights[sp], 0.0);
            }
        }
    }

    (c1, c2)
}
