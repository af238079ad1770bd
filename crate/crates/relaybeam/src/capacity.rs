//! Per-stream power allocation, achievable rates, two-phase group capacity
//! with decode-and-forward bottlenecks, and group selection policies.

use rand::Rng;

use crate::beamform::CnrSet;
use crate::channel::RadioParams;
use crate::decompose::{Phase, Tx};
use crate::error::{Error, Result};
use crate::grouping::{Entity, SmcGroup};

/// Transmit powers in watts, aligned with the group's member list. Members
/// without a slot in a phase carry zero.
#[derive(Debug, Clone)]
pub struct PowerAllocation {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
}

/// Split each node's per-subcarrier budget equally over the streams it
/// serves, independently per phase: the BS spends `P_B/N` on its first-phase
/// streams and `P_B/N` on its second-phase streams; each RN spends `P_R/N`
/// on the second-phase streams it serves. Unused budgets stay idle.
pub fn equal_power_allocation(
    group: &SmcGroup,
    pool: &[Entity],
    radio: &RadioParams,
    num_subcarriers: usize,
) -> PowerAllocation {
    let members = &group.members;
    let bs_budget = radio.p_max_bs_w / num_subcarriers as f64;
    let rn_budget = radio.p_max_rn_w / num_subcarriers as f64;

    let t1_slots = members.iter().filter(|&&m| pool[m].phase1_row().is_some()).count();
    let bs_t2_slots = members.iter().filter(|&&m| pool[m].required_tx2() == Some(Tx::Bs)).count();
    let mut rn_t2_slots = std::collections::HashMap::new();
    for &m in members {
        if let Some(Tx::Rn(r)) = pool[m].required_tx2() {
            *rn_t2_slots.entry(r).or_insert(0usize) += 1;
        }
    }

    let mut t1 = vec![0.0; members.len()];
    let mut t2 = vec![0.0; members.len()];
    for (i, &m) in members.iter().enumerate() {
        if pool[m].phase1_row().is_some() {
            t1[i] = bs_budget / t1_slots as f64;
        }
        match pool[m].required_tx2() {
            Some(Tx::Bs) => t2[i] = bs_budget / bs_t2_slots as f64,
            Some(Tx::Rn(r)) => t2[i] = rn_budget / rn_t2_slots[&r] as f64,
            None => {}
        }
    }
    PowerAllocation { t1, t2 }
}

/// Gap-approximation Shannon rate `W log2(1 + p g)` in bit/s; the SNR gap is
/// already folded into the CNR `g`.
pub fn stream_rate(p_watts: f64, cnr_per_watt: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + p_watts * cnr_per_watt).log2()
}

/// Which hop limited a relayed stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BottleneckHop {
    First,
    Second,
}

/// Rates of one group under a given power allocation. `contributions` holds
/// each member's term of the total (half-duplex halving and relay min rule
/// applied); `rates_t1`/`rates_t2` the raw per-slot rates.
#[derive(Debug, Clone)]
pub struct CapacityReport {
    pub rates_t1: Vec<f64>,
    pub rates_t2: Vec<f64>,
    pub contributions: Vec<f64>,
    pub bottlenecks: Vec<Option<BottleneckHop>>,
    pub total_bps: f64,
}

/// Two-phase group capacity: direct streams contribute half their rate (the
/// two phases have equal duration), a relayed stream half the weaker of its
/// two hop rates.
pub fn group_capacity(
    group: &SmcGroup,
    pool: &[Entity],
    powers: &PowerAllocation,
    cnrs: &CnrSet,
    radio: &RadioParams,
) -> CapacityReport {
    let members = &group.members;
    let w = radio.bandwidth_hz;
    let mut rates_t1 = vec![0.0; members.len()];
    let mut rates_t2 = vec![0.0; members.len()];
    let mut contributions = vec![0.0; members.len()];
    let mut bottlenecks = vec![None; members.len()];
    for (i, &m) in members.iter().enumerate() {
        match &pool[m] {
            Entity::Direct(s) => match s.phase {
                Phase::One => {
                    let r = stream_rate(powers.t1[i], cnrs.t1[i].unwrap_or(0.0), w);
                    rates_t1[i] = r;
                    contributions[i] = 0.5 * r;
                }
                Phase::Two => {
                    let r = stream_rate(powers.t2[i], cnrs.t2[i].unwrap_or(0.0), w);
                    rates_t2[i] = r;
                    contributions[i] = 0.5 * r;
                }
            },
            Entity::Pair(_) => {
                let r1 = stream_rate(powers.t1[i], cnrs.t1[i].unwrap_or(0.0), w);
                let r2 = stream_rate(powers.t2[i], cnrs.t2[i].unwrap_or(0.0), w);
                rates_t1[i] = r1;
                rates_t2[i] = r2;
                contributions[i] = 0.5 * r1.min(r2);
                bottlenecks[i] =
                    Some(if r1 <= r2 { BottleneckHop::First } else { BottleneckHop::Second });
            }
        }
    }
    let total_bps = contributions.iter().sum();
    CapacityReport { rates_t1, rates_t2, contributions, bottlenecks, total_bps }
}

/// Total group capacity under equal power in one pass, without building the
/// intermediate allocation/CNR/report structures. Used when scoring many
/// candidate groups; agrees with the compositional route exactly.
pub fn equal_power_group_capacity(
    group: &SmcGroup,
    pool: &[Entity],
    gains: &crate::grouping::SlotGains,
    radio: &RadioParams,
    num_subcarriers: usize,
) -> f64 {
    let members = &group.members;
    let bs_budget = radio.p_max_bs_w / num_subcarriers as f64;
    let rn_budget = radio.p_max_rn_w / num_subcarriers as f64;
    let denom = radio.snr_gap * radio.noise_power_w();
    let w = radio.bandwidth_hz;

    let mut t1_slots = 0usize;
    let mut bs_t2_slots = 0usize;
    let mut rn_t2_slots = [0usize; 32];
    for &m in members {
        if pool[m].phase1_row().is_some() {
            t1_slots += 1;
        }
        match pool[m].required_tx2() {
            Some(Tx::Bs) => bs_t2_slots += 1,
            Some(Tx::Rn(r)) => rn_t2_slots[r] += 1,
            None => {}
        }
    }

    let mut total = 0.0;
    for (i, &m) in members.iter().enumerate() {
        let rate1 = if pool[m].phase1_row().is_some() {
            let p = bs_budget / t1_slots as f64;
            let g = gains.t1[i] * gains.t1[i] / denom;
            Some(w * (1.0 + p * g).log2())
        } else {
            None
        };
        let rate2 = match pool[m].required_tx2() {
            Some(Tx::Bs) => {
                let p = bs_budget / bs_t2_slots as f64;
                let g = gains.t2[i] * gains.t2[i] / denom;
                Some(w * (1.0 + p * g).log2())
            }
            Some(Tx::Rn(r)) => {
                let p = rn_budget / rn_t2_slots[r] as f64;
                let g = gains.t2[i] * gains.t2[i] / denom;
                Some(w * (1.0 + p * g).log2())
            }
            None => None,
        };
        total += match (rate1, rate2) {
            (Some(r1), Some(r2)) => 0.5 * r1.min(r2),
            (Some(r1), None) => 0.5 * r1,
            (None, Some(r2)) => 0.5 * r2,
            (None, None) => 0.0,
        };
    }
    total
}

/// How a group is picked from the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    Random,
    Best,
}

/// Choose one group index given each group's capacity under the campaign's
/// power rule. `Best` takes the argmax (ties to the lowest index), `Random`
/// draws uniformly from the seeded stream.
pub fn select_group<R: Rng>(
    capacities: &[f64],
    policy: SelectionPolicy,
    rng: &mut R,
) -> Result<usize> {
    if capacities.is_empty() {
        return Err(Error::EmptyGroupSet);
    }
    Ok(match policy {
        SelectionPolicy::Random => rng.random_range(0..capacities.len()),
        SelectionPolicy::Best => {
            let mut best = 0;
            for (i, &c) in capacities.iter().enumerate() {
                if c > capacities[best] {
                    best = i;
                }
            }
            best
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::CnrSet;
    use crate::decompose::{Rx, Smc, SmcKind, SmcPair, TxSet};
    use crate::matrixkit::CVec;
    use nalgebra::DVector;
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn radio() -> RadioParams {
        RadioParams::from_config_units(180e3, -174.0, 0.0, 20.0, 10.0).unwrap()
    }

    fn unit_vec(dim: usize, at: usize) -> CVec {
        DVector::from_fn(dim, |i, _| {
            if i == at {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    fn smc(id: u32, phase: Phase, kind: SmcKind, tx: Tx, rx: Rx, at: usize) -> Smc {
        Smc {
            id,
            subcarrier: 0,
            phase,
            kind,
            transmitter: tx,
            receiver: rx,
            row: unit_vec(4, at),
            gain: 1.0,
            rx_row: unit_vec(2, 0),
            active_tx: TxSet::all(2),
        }
    }

    fn direct_t1(id: u32, ue: usize, at: usize) -> Entity {
        Entity::Direct(smc(id, Phase::One, SmcKind::BuT1, Tx::Bs, Rx::Ue(ue), at))
    }

    fn direct_t2(id: u32, ue: usize, at: usize) -> Entity {
        Entity::Direct(smc(id, Phase::Two, SmcKind::BuT2, Tx::Bs, Rx::Ue(ue), at))
    }

    fn pair_entity(id: u32, rn: usize, ue: usize, at1: usize, at2: usize) -> Entity {
        Entity::Pair(SmcPair {
            rn,
            served_ue: ue,
            first_hop: smc(id, Phase::One, SmcKind::BrT1, Tx::Bs, Rx::Rn(rn), at1),
            second_hop: smc(id + 1, Phase::Two, SmcKind::RuT2, Tx::Rn(rn), Rx::Ue(ue), at2),
        })
    }

    fn group_over(pool: &[Entity], members: Vec<usize>) -> SmcGroup {
        let mut q1 = 0;
        let mut q2 = 0;
        for &m in &members {
            if pool[m].phase1_row().is_some() {
                q1 += 1;
            }
            if pool[m].phase2_row().is_some() {
                q2 += 1;
            }
        }
        SmcGroup {
            subcarrier: 0,
            members,
            q_t1: q1,
            q_t2: q2,
            l_b: vec![0, 0],
            l_r: vec![0, 0],
            transmitter_set: TxSet::all(2),
        }
    }

    #[test]
    fn equal_split_two_bs_streams() {
        // P_B = 20 dBm = 0.1 W, N = 6, two phase-1 streams: 8.33 mW each
        let pool = vec![direct_t1(0, 0, 0), direct_t1(1, 1, 1)];
        let group = group_over(&pool, vec![0, 1]);
        let alloc = equal_power_allocation(&group, &pool, &radio(), 6);
        for &p in &alloc.t1 {
            assert!((p - 0.1 / 6.0 / 2.0).abs() < 1e-12);
        }
        assert!(alloc.t2.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn single_stream_gets_full_budget_and_rn_split() {
        let pool = vec![direct_t2(0, 0, 0), pair_entity(1, 0, 1, 1, 0)];
        let group = group_over(&pool, vec![0, 1]);
        let radio = radio();
        let alloc = equal_power_allocation(&group, &pool, &radio, 6);
        // BS second phase: one served stream -> full P_B/N
        assert!((alloc.t2[0] - radio.p_max_bs_w / 6.0).abs() < 1e-15);
        // pair: first hop takes the full BS phase-1 budget, second hop the RN budget
        assert!((alloc.t1[1] - radio.p_max_bs_w / 6.0).abs() < 1e-15);
        assert!((alloc.t2[1] - radio.p_max_rn_w / 6.0).abs() < 1e-15);
    }

    #[test]
    fn budgets_are_conserved() {
        let pool = vec![
            direct_t1(0, 0, 0),
            direct_t2(2, 0, 1),
            pair_entity(3, 0, 1, 2, 1),
            pair_entity(5, 1, 0, 3, 2),
        ];
        let group = group_over(&pool, vec![0, 1, 2, 3]);
        let radio = radio();
        let n = 6usize;
        let alloc = equal_power_allocation(&group, &pool, &radio, n);
        let bs_t1: f64 = alloc.t1.iter().sum();
        assert!(bs_t1 <= radio.p_max_bs_w / n as f64 + 1e-12);
        let bs_t2: f64 = group
            .members
            .iter()
            .enumerate()
            .filter(|&(_, &m)| pool[m].required_tx2() == Some(Tx::Bs))
            .map(|(i, _)| alloc.t2[i])
            .sum();
        assert!(bs_t2 <= radio.p_max_bs_w / n as f64 + 1e-12);
        for rn in 0..2 {
            let rn_t2: f64 = group
                .members
                .iter()
                .enumerate()
                .filter(|&(_, &m)| pool[m].required_tx2() == Some(Tx::Rn(rn)))
                .map(|(i, _)| alloc.t2[i])
                .sum();
            assert!(rn_t2 <= radio.p_max_rn_w / n as f64 + 1e-12);
        }
        assert!(alloc.t1.iter().chain(alloc.t2.iter()).all(|&p| p >= 0.0));
    }

    #[test]
    fn rate_frozen_points() {
        assert_eq!(stream_rate(0.0, 5.0e14, 180e3), 0.0);
        let r1 = stream_rate(1.0, 1.0, 180e3); // p*g = 1
        assert!((r1 - 180e3).abs() < 1e-6);
        let r3 = stream_rate(1.0, 3.0, 180e3); // p*g = 3
        assert!((r3 - 2.0 * r1).abs() < 1e-6);
    }

    #[test]
    fn empty_group_zero_capacity() {
        let pool: Vec<Entity> = Vec::new();
        let group = SmcGroup {
            subcarrier: 0,
            members: vec![],
            q_t1: 0,
            q_t2: 0,
            l_b: vec![0, 0],
            l_r: vec![0, 0],
            transmitter_set: TxSet::empty(),
        };
        let powers = PowerAllocation { t1: vec![], t2: vec![] };
        let cnrs = CnrSet { t1: vec![], t2: vec![] };
        let report = group_capacity(&group, &pool, &powers, &cnrs, &radio());
        assert_eq!(report.total_bps, 0.0);
    }

    #[test]
    fn relay_pair_min_rule() {
        // hop rates 10 and 4 Mbit/s -> contribution 2 Mbit/s, second hop limits
        let pool = vec![pair_entity(0, 0, 0, 0, 1)];
        let group = group_over(&pool, vec![0]);
        let mut radio = radio();
        radio.bandwidth_hz = 1e6;
        // p*g = 2^10 - 1 and 2^4 - 1 give exactly 10 and 4 Mbit/s
        let powers = PowerAllocation { t1: vec![1.0], t2: vec![1.0] };
        let cnrs = CnrSet { t1: vec![Some(1023.0)], t2: vec![Some(15.0)] };
        let report = group_capacity(&group, &pool, &powers, &cnrs, &radio);
        assert!((report.rates_t1[0] - 10e6).abs() < 1e-3);
        assert!((report.rates_t2[0] - 4e6).abs() < 1e-3);
        assert!((report.total_bps - 2e6).abs() < 1e-3);
        assert_eq!(report.bottlenecks[0], Some(BottleneckHop::Second));
    }

    #[test]
    fn direct_stream_half_duplex() {
        let pool = vec![direct_t1(0, 0, 0)];
        let group = group_over(&pool, vec![0]);
        let radio = radio();
        let powers = PowerAllocation { t1: vec![2.0e-3], t2: vec![0.0] };
        let cnrs = CnrSet { t1: vec![Some(3.0e3)], t2: vec![None] };
        let report = group_capacity(&group, &pool, &powers, &cnrs, &radio);
        let r = stream_rate(2.0e-3, 3.0e3, radio.bandwidth_hz);
        assert!((report.total_bps - 0.5 * r).abs() < 1e-9);
    }

    #[test]
    fn capacity_increases_with_power() {
        let pool = vec![direct_t1(0, 0, 0), pair_entity(1, 0, 1, 1, 0)];
        let group = group_over(&pool, vec![0, 1]);
        let radio = radio();
        let cnrs = CnrSet { t1: vec![Some(1e12), Some(2e12)], t2: vec![None, Some(5e11)] };
        let p = PowerAllocation { t1: vec![1e-3, 2e-3], t2: vec![0.0, 1e-3] };
        let scaled = PowerAllocation {
            t1: p.t1.iter().map(|x| x * 1.7).collect(),
            t2: p.t2.iter().map(|x| x * 1.7).collect(),
        };
        let base = group_capacity(&group, &pool, &p, &cnrs, &radio).total_bps;
        let more = group_capacity(&group, &pool, &scaled, &cnrs, &radio).total_bps;
        assert!(base > 0.0 && more > base);
    }

    #[test]
    fn fast_capacity_matches_compositional_route() {
        use crate::beamform::effective_cnrs;
        use crate::grouping::SlotGains;
        let pool = vec![
            direct_t1(0, 0, 0),
            direct_t2(2, 0, 1),
            pair_entity(3, 0, 1, 2, 1),
            pair_entity(5, 1, 0, 3, 2),
        ];
        let group = group_over(&pool, vec![0, 1, 2, 3]);
        let radio = radio();
        let gains = SlotGains {
            t1: vec![2.0e-7, f64::NAN, 1.5e-7, 0.8e-7],
            t2: vec![f64::NAN, 3.0e-7, 0.9e-7, 1.1e-7],
        };
        let fast = equal_power_group_capacity(&group, &pool, &gains, &radio, 6);
        let powers = equal_power_allocation(&group, &pool, &radio, 6);
        let cnrs = effective_cnrs(&gains, &radio);
        let slow = group_capacity(&group, &pool, &powers, &cnrs, &radio).total_bps;
        assert!((fast - slow).abs() < 1e-9 * slow.max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn selection_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(select_group(&[3.0], SelectionPolicy::Best, &mut rng).unwrap(), 0);
        assert_eq!(select_group(&[3.0], SelectionPolicy::Random, &mut rng).unwrap(), 0);
        assert_eq!(select_group(&[5.0, 7.0], SelectionPolicy::Best, &mut rng).unwrap(), 1);
        // ties break to the lowest index
        assert_eq!(select_group(&[7.0, 7.0], SelectionPolicy::Best, &mut rng).unwrap(), 0);
        assert!(select_group(&[], SelectionPolicy::Best, &mut rng).is_err());
        let idx = select_group(&[1.0, 1.0, 1.0], SelectionPolicy::Random, &mut rng).unwrap();
        assert!(idx < 3);
    }
}
