//! Decomposition of channel matrices into spatial multiplexing components
//! (SMCs): SVD-based receive beamforming for the first phase, joint
//! diagonalization for the second phase, and relay SMC pairing.

use num_complex::Complex;

use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::matrixkit::{joint_diagonalize, svd, CMat, CVec, RANK_TOL};
use crate::topology::NetworkConfig;

/// Transmission phase of an SMC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    Two,
}

/// A transmitting node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tx {
    Bs,
    Rn(usize),
}

/// A receiving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rx {
    Ue(usize),
    Rn(usize),
}

/// Set of transmitters assumed active in the second phase, as a bitmask
/// (bit 0 = BS, bit 1 + m = RN m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TxSet(pub u32);

impl TxSet {
    pub fn empty() -> Self {
        TxSet(0)
    }

    pub fn all(num_relays: usize) -> Self {
        TxSet(((1u64 << (num_relays + 1)) - 1) as u32)
    }

    pub fn bit(tx: Tx) -> u32 {
        match tx {
            Tx::Bs => 1,
            Tx::Rn(m) => 1 << (m + 1),
        }
    }

    pub fn contains(&self, tx: Tx) -> bool {
        self.0 & Self::bit(tx) != 0
    }

    pub fn insert(&mut self, tx: Tx) {
        self.0 |= Self::bit(tx);
    }

    pub fn without(&self, tx: Tx) -> TxSet {
        TxSet(self.0 & !Self::bit(tx))
    }

    pub fn is_subset_of(&self, other: &TxSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Transmitters in the set, BS first, then RNs by index.
    pub fn iter(&self, num_relays: usize) -> impl Iterator<Item = Tx> + '_ {
        let mask = self.0;
        std::iter::once(Tx::Bs)
            .chain((0..num_relays).map(Tx::Rn))
            .filter(move |&t| mask & Self::bit(t) != 0)
    }
}

/// Transmitter subsets considered for the second phase: the all-active set
/// plus every set with at most `max_deactivated` transmitters switched off.
pub fn tx_subsets(num_relays: usize, max_deactivated: usize) -> Vec<TxSet> {
    let all = TxSet::all(num_relays);
    let mut subsets = vec![all];
    if max_deactivated >= 1 {
        let txs: Vec<Tx> = std::iter::once(Tx::Bs).chain((0..num_relays).map(Tx::Rn)).collect();
        let mut frontier = vec![all];
        for _ in 0..max_deactivated {
            let mut next = Vec::new();
            for base in &frontier {
                for &t in &txs {
                    if base.contains(t) {
                        let cand = base.without(t);
                        if !cand.is_empty() && !subsets.contains(&cand) {
                            subsets.push(cand);
                            next.push(cand);
                        }
                    }
                }
            }
            frontier = next;
        }
    }
    subsets
}

/// Classification of an SMC by link and phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmcKind {
    /// BS-to-UE direct link, first phase.
    BuT1,
    /// BS-to-RN relay feed, first phase.
    BrT1,
    /// BS-to-UE direct link, second phase.
    BuT2,
    /// RN-to-UE relay delivery, second phase.
    RuT2,
}

/// One effective MISO channel row with its receive combining vector.
#[derive(Debug, Clone)]
pub struct Smc {
    /// Unique within one realization.
    pub id: u32,
    pub subcarrier: usize,
    pub phase: Phase,
    pub kind: SmcKind,
    pub transmitter: Tx,
    pub receiver: Rx,
    /// Effective MISO row `r^H H` (length N_B or N_R).
    pub row: CVec,
    /// `‖row‖`.
    pub gain: f64,
    /// Receive combining row applied at the receiver (unit norm).
    pub rx_row: CVec,
    /// Transmitter subset this SMC was generated under (phase 2 only;
    /// phase-1 SMCs carry the all-active set).
    pub active_tx: TxSet,
}

/// An atomic relay entity: a first-phase BS-to-RN SMC coupled with a
/// second-phase RN-to-UE SMC at the same relay.
#[derive(Debug, Clone)]
pub struct SmcPair {
    pub rn: usize,
    pub served_ue: usize,
    pub first_hop: Smc,
    pub second_hop: Smc,
}

/// Receive beamforming matrices for every receiver.
#[derive(Debug, Clone)]
pub struct ReceiveBfSet {
    /// `r_bu_t1[n][k]` = U^H from the SVD of H_BU (unitary).
    pub r_bu_t1: Vec<Vec<CMat>>,
    /// `r_br_t1[n][m]` = U^H from the SVD of H_BR (unitary).
    pub r_br_t1: Vec<Vec<CMat>>,
    /// Subsets considered for the second phase (index 0 = all active).
    pub subsets: Vec<TxSet>,
    /// `r_u_t2[n][k][si]`: row-normalized joint-diagonalizing combiner for
    /// UE k under subset `subsets[si]`.
    pub r_u_t2: Vec<Vec<Vec<CMat>>>,
    /// Joint-diagonalizer runs that hit the iteration cap.
    pub diag_nonconverged: usize,
}

fn row_norms(m: &CMat) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).norm()).collect()
}

/// Decompose all first-phase channels: each nonzero row of `S V^H` becomes an
/// SMC whose gain is the corresponding singular value.
pub fn phase1_decompose(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    next_id: &mut u32,
) -> Result<(Vec<Vec<CMat>>, Vec<Vec<CMat>>, Vec<Smc>)> {
    let all = TxSet::all(config.num_relays);
    let n_subc = config.num_subcarriers;
    let mut r_bu = Vec::with_capacity(n_subc);
    let mut r_br = Vec::with_capacity(n_subc);
    let mut smcs = Vec::new();
    for n in 0..n_subc {
        let mut r_bu_n = Vec::with_capacity(config.num_ues);
        for k in 0..config.num_ues {
            let dec = svd(&realization.h_bu[n][k])?;
            let receive = dec.u.adjoint();
            let smax = dec.singular_values.max();
            for i in 0..dec.singular_values.len() {
                let s = dec.singular_values[i];
                if s <= RANK_TOL * smax {
                    continue;
                }
                let row = dec.v_h.row(i).transpose() * Complex::new(s, 0.0);
                smcs.push(Smc {
                    id: bump(next_id),
                    subcarrier: n,
                    phase: Phase::One,
                    kind: SmcKind::BuT1,
                    transmitter: Tx::Bs,
                    receiver: Rx::Ue(k),
                    gain: s,
                    row,
                    rx_row: receive.row(i).transpose(),
                    active_tx: all,
                });
            }
            r_bu_n.push(receive);
        }
        r_bu.push(r_bu_n);

        let mut r_br_n = Vec::with_capacity(config.num_relays);
        for m in 0..config.num_relays {
            let dec = svd(&realization.h_br[n][m])?;
            let receive = dec.u.adjoint();
            let smax = dec.singular_values.max();
            for i in 0..dec.singular_values.len() {
                let s = dec.singular_values[i];
                if s <= RANK_TOL * smax {
                    continue;
                }
                let row = dec.v_h.row(i).transpose() * Complex::new(s, 0.0);
                smcs.push(Smc {
                    id: bump(next_id),
                    subcarrier: n,
                    phase: Phase::One,
                    kind: SmcKind::BrT1,
                    transmitter: Tx::Bs,
                    receiver: Rx::Rn(m),
                    gain: s,
                    row,
                    rx_row: receive.row(i).transpose(),
                    active_tx: all,
                });
            }
            r_br_n.push(receive);
        }
        r_br.push(r_br_n);
    }
    Ok((r_bu, r_br, smcs))
}

fn bump(next_id: &mut u32) -> u32 {
    let id = *next_id;
    *next_id += 1;
    id
}

/// Tolerance and iteration cap of the second-phase joint diagonalizer.
pub const JD_TOL: f64 = 1e-8;
pub const JD_MAX_ITER: usize = 500;

/// Second-phase receive beamformer for UE k on subcarrier n assuming the
/// given transmitter subset is active: the joint-diagonalizing combiner of
/// the active Gram targets, rows normalized to unit norm.
pub fn phase2_receive_bf_for_subset(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    n: usize,
    k: usize,
    subset: TxSet,
) -> Result<(CMat, bool)> {
    let mut targets = Vec::new();
    if subset.contains(Tx::Bs) {
        let h = &realization.h_bu[n][k];
        targets.push(h * h.adjoint());
    }
    for m in 0..config.num_relays {
        if subset.contains(Tx::Rn(m)) {
            let h = &realization.h_ru[n][m][k];
            targets.push(h * h.adjoint());
        }
    }
    let res = joint_diagonalize(&targets, JD_TOL, JD_MAX_ITER)?;
    let mut r = res.combiner;
    for i in 0..r.nrows() {
        let norm = r.row(i).norm();
        if norm > 0.0 {
            let scale = Complex::new(1.0 / norm, 0.0);
            for j in 0..r.ncols() {
                r[(i, j)] *= scale;
            }
        }
    }
    Ok((r, res.converged))
}

/// All-transmitters second-phase receive beamformer for UE k on subcarrier n.
pub fn phase2_receive_bf(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    n: usize,
    k: usize,
) -> Result<(CMat, bool)> {
    phase2_receive_bf_for_subset(realization, config, n, k, TxSet::all(config.num_relays))
}

/// Enumerate all second-phase SMCs: for every UE, subcarrier and transmitter
/// subset, the nonzero rows of the combined effective channels, tagged with
/// the subset they were generated under.
pub fn phase2_decompose(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    rx_bfs: &[Vec<Vec<CMat>>],
    subsets: &[TxSet],
    next_id: &mut u32,
) -> Vec<Smc> {
    let mut smcs = Vec::new();
    for n in 0..config.num_subcarriers {
        for k in 0..config.num_ues {
            for (si, &subset) in subsets.iter().enumerate() {
                let r = &rx_bfs[n][k][si];
                for tx in subset.iter(config.num_relays) {
                    let (h, kind) = match tx {
                        Tx::Bs => (&realization.h_bu[n][k], SmcKind::BuT2),
                        Tx::Rn(m) => (&realization.h_ru[n][m][k], SmcKind::RuT2),
                    };
                    let eff = r * h;
                    let norms = row_norms(&eff);
                    let scale = eff.norm().max(f64::MIN_POSITIVE);
                    for i in 0..eff.nrows() {
                        if norms[i] <= RANK_TOL * scale {
                            continue;
                        }
                        smcs.push(Smc {
                            id: bump(next_id),
                            subcarrier: n,
                            phase: Phase::Two,
                            kind,
                            transmitter: tx,
                            receiver: Rx::Ue(k),
                            gain: norms[i],
                            row: eff.row(i).transpose(),
                            rx_row: r.row(i).transpose(),
                            active_tx: subset,
                        });
                    }
                }
            }
        }
    }
    smcs
}

/// Candidate relay pairs: every first-phase BS-to-RN SMC crossed with every
/// second-phase SMC leaving the same relay on the same subcarrier. Selection
/// among candidates happens in the grouping algorithms.
pub fn pair_relay_smcs(phase1: &[Smc], phase2: &[Smc]) -> Vec<SmcPair> {
    let mut pairs = Vec::new();
    for b in phase1.iter().filter(|s| s.kind == SmcKind::BrT1) {
        let rn = match b.receiver {
            Rx::Rn(m) => m,
            Rx::Ue(_) => continue,
        };
        for r in phase2.iter().filter(|s| s.kind == SmcKind::RuT2) {
            if r.subcarrier != b.subcarrier || r.transmitter != Tx::Rn(rn) {
                continue;
            }
            let served_ue = match r.receiver {
                Rx::Ue(k) => k,
                Rx::Rn(_) => continue,
            };
            pairs.push(SmcPair {
                rn,
                served_ue,
                first_hop: b.clone(),
                second_hop: r.clone(),
            });
        }
    }
    pairs
}

/// Everything the grouping stage needs for one realization.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub rx_bfs: ReceiveBfSet,
    pub phase1: Vec<Smc>,
    pub phase2: Vec<Smc>,
    pub pairs: Vec<SmcPair>,
}

/// Run the full decomposition pipeline for one channel realization.
pub fn decompose_all(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    max_deactivated: usize,
) -> Result<Decomposition> {
    let mut next_id = 0u32;
    let (r_bu_t1, r_br_t1, phase1) = phase1_decompose(realization, config, &mut next_id)?;
    let subsets = tx_subsets(config.num_relays, max_deactivated);
    let mut diag_nonconverged = 0usize;
    let mut r_u_t2 = Vec::with_capacity(config.num_subcarriers);
    for n in 0..config.num_subcarriers {
        let mut per_ue = Vec::with_capacity(config.num_ues);
        for k in 0..config.num_ues {
            let mut per_subset = Vec::with_capacity(subsets.len());
            for &subset in &subsets {
                let (r, converged) = phase2_receive_bf_for_subset(realization, config, n, k, subset)?;
                if !converged {
                    diag_nonconverged += 1;
                }
                per_subset.push(r);
            }
            per_ue.push(per_subset);
        }
        r_u_t2.push(per_ue);
    }
    let phase2 = phase2_decompose(realization, config, &r_u_t2, &subsets, &mut next_id);
    let pairs = pair_relay_smcs(&phase1, &phase2);
    Ok(Decomposition {
        rx_bfs: ReceiveBfSet { r_bu_t1, r_br_t1, subsets, r_u_t2, diag_nonconverged },
        phase1,
        phase2,
        pairs,
    })
}

/// Expected first-phase SMC count per subcarrier when nothing underflows:
/// `K min(N_B, N_U) + M min(N_B, N_R)`.
pub fn phase1_smc_count_per_subcarrier(config: &NetworkConfig) -> usize {
    let (nb, nr, nu) = config.antennas;
    config.num_ues * nb.min(nu) + config.num_relays * nb.min(nr)
}
