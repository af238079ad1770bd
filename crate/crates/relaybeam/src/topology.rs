//! Cell geometry: base station at the origin, relays on a fixed ring, user
//! equipment drawn uniformly over the cell disc.

use rand::Rng;

use crate::error::{Error, Result};

/// Static scenario description: node counts, antennas, and cell dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of relay nodes M.
    pub num_relays: usize,
    /// Number of user equipments K.
    pub num_ues: usize,
    /// Antenna counts (N_B, N_R, N_U) at the BS, each RN and each UE.
    pub antennas: (usize, usize, usize),
    /// Cell radius in meters.
    pub cell_radius: f64,
    /// BS-to-RN distance as a fraction of the cell radius, in (0, 1).
    pub bs_rn_distance_ratio: f64,
    /// Number of subcarrier blocks N.
    pub num_subcarriers: usize,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let (nb, nr, nu) = self.antennas;
        if self.num_ues < 1 || self.num_subcarriers < 1 {
            return Err(Error::Config("node and subcarrier counts must be at least 1".into()));
        }
        if self.num_relays > 31 {
            return Err(Error::Config("at most 31 relays are supported".into()));
        }
        if nb < 1 || nr < 1 || nu < 1 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if !(self.cell_radius > 0.0) {
            return Err(Error::Config("cell radius must be positive".into()));
        }
        if !(self.bs_rn_distance_ratio > 0.0 && self.bs_rn_distance_ratio < 1.0) {
            return Err(Error::Config("bs_rn_distance_ratio must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn n_bs(&self) -> usize {
        self.antennas.0
    }
    pub fn n_rn(&self) -> usize {
        self.antennas.1
    }
    pub fn n_ue(&self) -> usize {
        self.antennas.2
    }
}

/// A planar point in meters.
pub type Point = (f64, f64);

fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Positions of all nodes for one drop.
#[derive(Debug, Clone)]
pub struct CellTopology {
    pub bs_position: Point,
    pub rn_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

/// Place the BS at the origin, RNs evenly spaced on the ring of radius
/// `ratio * cell_radius` (first RN on the +x axis, counterclockwise), and UEs
/// i.i.d. uniform over the cell disc.
pub fn place_nodes<R: Rng>(config: &NetworkConfig, rng: &mut R) -> CellTopology {
    let ring = config.bs_rn_distance_ratio * config.cell_radius;
    let m = config.num_relays;
    let rn_positions = (0..m)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            (ring * angle.cos(), ring * angle.sin())
        })
        .collect();
    let ue_positions = (0..config.num_ues)
        .map(|_| {
            let r = config.cell_radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            (r * theta.cos(), r * theta.sin())
        })
        .collect();
    CellTopology { bs_position: (0.0, 0.0), rn_positions, ue_positions }
}

/// Euclidean distances between every transmitter/receiver pair, in meters.
#[derive(Debug, Clone)]
pub struct LinkDistances {
    /// `bs_ue[k]`: BS to UE k.
    pub bs_ue: Vec<f64>,
    /// `bs_rn[m]`: BS to RN m.
    pub bs_rn: Vec<f64>,
    /// `rn_ue[m][k]`: RN m to UE k.
    pub rn_ue: Vec<Vec<f64>>,
}

pub fn link_distances(topology: &CellTopology) -> LinkDistances {
    let bs = topology.bs_position;
    let bs_ue = topology.ue_positions.iter().map(|&p| dist(bs, p)).collect();
    let bs_rn = topology.rn_positions.iter().map(|&p| dist(bs, p)).collect();
    let rn_ue = topology
        .rn_positions
        .iter()
        .map(|&rn| topology.ue_positions.iter().map(|&ue| dist(rn, ue)).collect())
        .collect();
    LinkDistances { bs_ue, bs_rn, rn_ue }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(m: usize, k: usize) -> NetworkConfig {
        NetworkConfig {
            num_relays: m,
            num_ues: k,
            antennas: (4, 4, 2),
            cell_radius: 750.0,
            bs_rn_distance_ratio: 0.5,
            num_subcarriers: 6,
        }
    }

    #[test]
    fn relays_on_ring_at_fixed_angles() {
        let cfg = config(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let topo = place_nodes(&cfg, &mut rng);
        assert_eq!(topo.rn_positions.len(), 3);
        for (i, &p) in topo.rn_positions.iter().enumerate() {
            let d = (p.0 * p.0 + p.1 * p.1).sqrt();
            assert!((d - 375.0).abs() < 1e-12 * 375.0, "ring distance {d}");
            let angle = p.1.atan2(p.0).rem_euclid(2.0 * std::f64::consts::PI);
            let expect = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
            assert!((angle - expect).abs() < 1e-12, "angle {angle} vs {expect}");
        }
    }

    #[test]
    fn single_relay_sits_on_x_axis() {
        let cfg = config(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let topo = place_nodes(&cfg, &mut rng);
        let p = topo.rn_positions[0];
        assert!((p.0 - 375.0).abs() < 1e-9 && p.1.abs() < 1e-9);
    }

    #[test]
    fn ue_disc_second_moment() {
        // E[d^2] = r^2/2 for uniform placement over a disc.
        let cfg = config(1, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let topo = place_nodes(&cfg, &mut rng);
        let mean_sq: f64 = topo.ue_positions.iter().map(|&(x, y)| x * x + y * y).sum::<f64>()
            / topo.ue_positions.len() as f64;
        let expect = cfg.cell_radius * cfg.cell_radius / 2.0;
        assert!((mean_sq - expect).abs() < 0.02 * expect, "mean square distance {mean_sq}");
    }

    #[test]
    fn ue_uniformity_chi_squared() {
        // 8 equal-area cells: inner disc / outer annulus split at r/sqrt(2),
        // four quadrants each. Chi-squared with 7 dof at the 0.1% level.
        let n = 100_000;
        let cfg = config(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let topo = place_nodes(&cfg, &mut rng);
        let r_split = cfg.cell_radius / 2.0_f64.sqrt();
        let mut counts = [0usize; 8];
        for &(x, y) in &topo.ue_positions {
            let d = (x * x + y * y).sqrt();
            let quad = match (x >= 0.0, y >= 0.0) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            let ring = if d <= r_split { 0 } else { 1 };
            counts[ring * 4 + quad] += 1;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-squared critical value, 7 dof, p = 0.001
        assert!(chi2 < 24.322, "chi-squared statistic {chi2}");
    }

    #[test]
    fn placement_is_deterministic_per_seed() {
        let cfg = config(2, 5);
        let a = place_nodes(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = place_nodes(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.ue_positions, b.ue_positions);
    }

    #[test]
    fn distances_three_four_five() {
        let topo = CellTopology {
            bs_position: (0.0, 0.0),
            rn_positions: vec![(300.0, 400.0)],
            ue_positions: vec![(300.0, 400.0)],
        };
        let d = link_distances(&topo);
        assert!((d.bs_ue[0] - 500.0).abs() < 1e-12);
        assert!((d.bs_rn[0] - 500.0).abs() < 1e-12);
        assert_eq!(d.rn_ue[0][0], 0.0); // coincident nodes
    }

    #[test]
    fn distances_match_independent_recompute() {
        let cfg = config(3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let topo = place_nodes(&cfg, &mut rng);
        let d = link_distances(&topo);
        let hyp = |a: Point, b: Point| (a.0 - b.0).hypot(a.1 - b.1);
        for (k, &ue) in topo.ue_positions.iter().enumerate() {
            assert!((d.bs_ue[k] - hyp(topo.bs_position, ue)).abs() < 1e-12);
            assert!(d.bs_ue[k] >= 0.0);
        }
        let ring = d.bs_rn[0];
        for (m, &rn) in topo.rn_positions.iter().enumerate() {
            assert!((d.bs_rn[m] - ring).abs() < 1e-12 * ring);
            for (k, &ue) in topo.ue_positions.iter().enumerate() {
                assert!((d.rn_ue[m][k] - hyp(rn, ue)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(2, 2);
        assert!(cfg.validate().is_ok());
        cfg.bs_rn_distance_ratio = 1.0;
        assert!(cfg.validate().is_err());
        cfg.bs_rn_distance_ratio = 0.5;
        cfg.cell_radius = 0.0;
        assert!(cfg.validate().is_err());
        cfg.cell_radius = 100.0;
        cfg.antennas = (0, 4, 2);
        assert!(cfg.validate().is_err());
    }
}
