//! Self-contained invariant checks behind the `validate` CLI subcommand.
//! Each check is a fast, seeded verification of one contract the simulator
//! relies on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beamform::{beamform_group, eval_group, link_coefficients};
use crate::capacity::SelectionPolicy;
use crate::channel::{
    db_to_linear, dbm_to_watts, draw_channels, linear_to_db, path_loss_gain, watts_to_dbm,
    LinkKind, PathLossModel,
};
use crate::decompose::decompose_all;
use crate::grouping::{build_entities, esga, ocga, smc_check, GroupCaps, DEFAULT_GROUP_LIMIT};
use crate::matrixkit::{
    gram_schmidt_residual, joint_diagonalize, right_inverse, semi_orthogonality, svd, CMat, CVec,
};
use crate::sim::{preset_fig2, run_sample, sweep_points, Algorithms, PointScenario};
use crate::topology::{link_distances, place_nodes, NetworkConfig};
use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};

pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn randn_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im)
    })
}

fn small_network() -> NetworkConfig {
    NetworkConfig {
        num_relays: 2,
        num_ues: 2,
        antennas: (4, 4, 2),
        cell_radius: 750.0,
        bs_rn_distance_ratio: 0.5,
        num_subcarriers: 1,
    }
}

fn check_geometry() -> Result<(), String> {
    let config = NetworkConfig { num_ues: 20_000, ..small_network() };
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let topo = place_nodes(&config, &mut rng);
    let ring = config.bs_rn_distance_ratio * config.cell_radius;
    for &d in &link_distances(&topo).bs_rn {
        if (d - ring).abs() > 1e-12 * ring {
            return Err(format!("ring distance {d} differs from {ring}"));
        }
    }
    let mean_sq: f64 = topo.ue_positions.iter().map(|&(x, y)| x * x + y * y).sum::<f64>()
        / topo.ue_positions.len() as f64;
    let expect = config.cell_radius * config.cell_radius / 2.0;
    if (mean_sq - expect).abs() > 0.03 * expect {
        return Err(format!("disc second moment {mean_sq} vs {expect}"));
    }
    Ok(())
}

fn check_units_and_path_loss() -> Result<(), String> {
    for &dbm in &[-174.0, 0.0, 20.0, 46.0] {
        if (watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() > 1e-12 * dbm.abs().max(1.0) {
            return Err(format!("dBm round trip failed at {dbm}"));
        }
    }
    if (linear_to_db(db_to_linear(7.3)) - 7.3).abs() > 1e-12 {
        return Err("dB round trip failed".into());
    }
    let model = PathLossModel::default();
    let mut prev = f64::INFINITY;
    let mut d = 10.0;
    while d <= 2000.0 {
        let g = path_loss_gain(d, LinkKind::Nlos, &model).map_err(|e| e.to_string())?;
        if g >= prev {
            return Err(format!("gain not decreasing at {d} m"));
        }
        prev = g;
        d += 25.0;
    }
    Ok(())
}

fn check_fading_moment() -> Result<(), String> {
    let config = NetworkConfig { num_relays: 1, num_ues: 1, antennas: (2, 2, 2), ..small_network() };
    let model = PathLossModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let topo = place_nodes(&config, &mut rng);
    let d = link_distances(&topo).bs_ue[0].max(crate::channel::MIN_LINK_DISTANCE_M);
    let gain = path_loss_gain(d, LinkKind::Nlos, &model).map_err(|e| e.to_string())?;
    let trials = 20_000;
    let mut acc = 0.0;
    for _ in 0..trials {
        let real = draw_channels(&topo, &config, &model, &mut rng);
        acc += real.h_bu[0][0].iter().map(|h| h.norm_sqr()).sum::<f64>();
    }
    let per_entry = acc / (trials * 4) as f64;
    if (per_entry - gain).abs() > 0.05 * gain {
        return Err(format!("fading second moment {per_entry} vs path gain {gain}"));
    }
    Ok(())
}

fn check_linear_algebra() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..200 {
        let rows = 1 + trial % 4;
        let cols = rows + 1 + trial % 5;
        let a = randn_mat(rows, cols, &mut rng);
        let t = right_inverse(&a).map_err(|e| e.to_string())?;
        let resid = (&a * &t - CMat::identity(rows, rows)).norm();
        if resid > 1e-9 {
            return Err(format!("right inverse residual {resid}"));
        }
    }
    for _ in 0..100 {
        let v1: CVec = randn_mat(4, 1, &mut rng).column(0).into_owned();
        let v2: CVec = randn_mat(4, 1, &mut rng).column(0).into_owned();
        let m12 = semi_orthogonality(&v1, &v2).map_err(|e| e.to_string())?;
        let m21 = semi_orthogonality(&v2, &v1).map_err(|e| e.to_string())?;
        let ms = semi_orthogonality(&(&v1 * Complex::new(2.5, 0.0)), &v2).map_err(|e| e.to_string())?;
        if (m12 - m21).abs() > 1e-12 || (m12 - ms).abs() > 1e-12 || !(0.0..=1.0).contains(&m12) {
            return Err("semi-orthogonality symmetry/scaling broken".into());
        }
        let b1: CVec = randn_mat(4, 1, &mut rng).column(0).into_owned();
        let (resid, noc) = gram_schmidt_residual(&v1, &[&b1]);
        if noc > v1.norm() + 1e-12 {
            return Err("NOC exceeded vector norm".into());
        }
        if b1.dotc(&resid).norm() > 1e-10 * v1.norm() {
            return Err("residual not orthogonal to basis".into());
        }
    }
    Ok(())
}

fn check_joint_diagonalizer() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..40 {
        let dim = 2 + trial % 3;
        let count = 1 + trial % 3;
        let targets: Vec<CMat> = (0..count)
            .map(|_| {
                let b = randn_mat(dim, dim + 1, &mut rng);
                &b * b.adjoint()
            })
            .collect();
        let res = joint_diagonalize(&targets, 1e-8, 200).map_err(|e| e.to_string())?;
        for w in res.objective_trace.windows(2) {
            if w[1] > w[0] + 1e-12 * w[0].abs().max(1.0) {
                return Err(format!("objective increased: {} -> {}", w[0], w[1]));
            }
        }
    }
    // single-matrix exactness
    let b = randn_mat(3, 4, &mut rng);
    let a = &b * b.adjoint();
    let res = joint_diagonalize(std::slice::from_ref(&a), 1e-8, 200).map_err(|e| e.to_string())?;
    let last = *res.objective_trace.last().unwrap();
    if last > 1e-8 * a.norm_squared() {
        return Err(format!("single-matrix objective {last}"));
    }
    Ok(())
}

fn check_phase1_decomposition() -> Result<(), String> {
    let config = small_network();
    let model = PathLossModel::default();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(505 + seed);
        let topo = place_nodes(&config, &mut rng);
        let real = draw_channels(&topo, &config, &model, &mut rng);
        let mut id = 0;
        let (_, _, smcs) =
            crate::decompose::phase1_decompose(&real, &config, &mut id).map_err(|e| e.to_string())?;
        let expect = crate::decompose::phase1_smc_count_per_subcarrier(&config);
        if smcs.len() != expect {
            return Err(format!("phase-1 SMC count {} vs {expect}", smcs.len()));
        }
        for s in &smcs {
            let dec = svd(match s.receiver {
                crate::decompose::Rx::Ue(k) => &real.h_bu[0][k],
                crate::decompose::Rx::Rn(m) => &real.h_br[0][m],
            })
            .map_err(|e| e.to_string())?;
            let matched = dec
                .singular_values
                .iter()
                .any(|&sv| (sv - s.gain).abs() <= 1e-10 * sv.max(1.0));
            if !matched {
                return Err(format!("gain {} is not a singular value", s.gain));
            }
        }
    }
    Ok(())
}

fn check_grouping_semantics() -> Result<(), String> {
    let config = small_network();
    let model = PathLossModel::default();
    let caps = GroupCaps::from_config(&config);
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(606 + seed);
        let topo = place_nodes(&config, &mut rng);
        let real = draw_channels(&topo, &config, &model, &mut rng);
        let dec = decompose_all(&real, &config, 0).map_err(|e| e.to_string())?;
        let pools = build_entities(&dec.phase1, &dec.phase2, &dec.pairs, 1);
        let pool: Vec<_> = pools.into_iter().next().unwrap().into_iter().take(7).collect();
        let alpha = 0.4;
        let groups = esga(&pool, alpha, &caps, DEFAULT_GROUP_LIMIT).map_err(|e| e.to_string())?;
        let mut expected: Vec<Vec<usize>> = Vec::new();
        for mask in 1u32..(1 << pool.len()) {
            let members: Vec<usize> =
                (0..pool.len()).filter(|&i| mask & (1 << i) != 0).collect();
            let feasible = members.iter().enumerate().all(|(pos, &m)| {
                smc_check(&pool, &members[..pos], m, alpha, &caps)
            });
            if feasible {
                expected.push(members);
            }
        }
        let mut got: Vec<Vec<usize>> = groups.iter().map(|g| g.members.clone()).collect();
        got.sort();
        expected.sort();
        if got != expected {
            return Err(format!("esga found {} groups, subset semantics give {}", got.len(), expected.len()));
        }
        let ocga_groups = ocga(&pool, alpha, &caps);
        if ocga_groups.len() > pool.len() {
            return Err("ocga emitted more groups than entities".into());
        }
        for g in groups.iter().chain(&ocga_groups) {
            g.check_invariants(&pool, &caps).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn check_zero_forcing() -> Result<(), String> {
    let config = small_network();
    let model = PathLossModel::default();
    let caps = GroupCaps::from_config(&config);
    let mut checked = 0;
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(707 + seed);
        let topo = place_nodes(&config, &mut rng);
        let real = draw_channels(&topo, &config, &model, &mut rng);
        let dec = decompose_all(&real, &config, 1).map_err(|e| e.to_string())?;
        let pools = build_entities(&dec.phase1, &dec.phase2, &dec.pairs, 1);
        let pool = &pools[0];
        for g in ocga(pool, 0.3, &caps) {
            let eval = eval_group(&g, pool, &real, &config);
            if !eval.valid {
                continue;
            }
            let bf = beamform_group(&g, pool, &real, &config).map_err(|e| e.to_string())?;
            let (c1, c2) = link_coefficients(&g, pool, &bf, &real);
            for c in [&c1, &c2] {
                for i in 0..c.nrows() {
                    let diag = c[(i, i)].norm();
                    for j in 0..c.ncols() {
                        if i != j && c[(i, j)].norm() > 1e-9 * diag.max(1e-12) {
                            return Err(format!(
                                "interference {:.3e} at ({i},{j})",
                                c[(i, j)].norm()
                            ));
                        }
                    }
                }
            }
            checked += 1;
        }
    }
    if checked < 10 {
        return Err(format!("only {checked} groups checked"));
    }
    Ok(())
}

fn check_pipeline_determinism() -> Result<(), String> {
    let config = preset_fig2();
    let mut config = config;
    config.num_samples = 4;
    config.network.num_subcarriers = 2;
    config.sweep_alpha = vec![0.2];
    let points = sweep_points(&config);
    let scenario = PointScenario::from_config(&config, &points[0]);
    for i in 0..config.num_samples {
        let a = run_sample(&scenario, i).map_err(|e| e.to_string())?;
        let b = run_sample(&scenario, i).map_err(|e| e.to_string())?;
        if a.capacity_bps.to_bits() != b.capacity_bps.to_bits() {
            return Err(format!("sample {i} not reproducible"));
        }
        if let (Some(beta_star), false) = (a.capacity_best_esga_bps, a.aborted) {
            if a.capacity_bps > beta_star * (1.0 + 1e-12) {
                return Err(format!("beta {} exceeds beta* {beta_star}", a.capacity_bps));
            }
        }
        for sc in &a.per_subcarrier {
            if let Some(g) = sc.groups_ocga {
                if g > sc.pool_size {
                    return Err("ocga group count exceeded pool size".into());
                }
            }
        }
    }
    Ok(())
}

fn check_group_count_monotone_in_alpha() -> Result<(), String> {
    let mut config = preset_fig2();
    config.network.num_subcarriers = 1;
    config.num_samples = 1;
    config.algorithms = Algorithms { esga: true, ocga: false };
    config.selection = SelectionPolicy::Best;
    let mut prev = 0usize;
    for &alpha in &[0.1, 0.3, 0.5] {
        config.sweep_alpha = vec![alpha];
        let points = sweep_points(&config);
        let scenario = PointScenario::from_config(&config, &points[0]);
        let rec = run_sample(&scenario, 0).map_err(|e| e.to_string())?;
        let count = rec.groups_esga.unwrap_or(0);
        if count < prev {
            return Err(format!("esga count dropped from {prev} to {count} at alpha {alpha}"));
        }
        prev = count;
    }
    Ok(())
}

/// Run every check, returning one result per named property.
pub fn run_all() -> Vec<CheckResult> {
    let checks: Vec<(&'static str, fn() -> Result<(), String>)> = vec![
        ("topology geometry and disc moments", check_geometry),
        ("unit conversions and path-loss monotonicity", check_units_and_path_loss),
        ("fading second moment matches path gain", check_fading_moment),
        ("right inverse, semi-orthogonality, Gram-Schmidt", check_linear_algebra),
        ("joint diagonalizer monotone and exact", check_joint_diagonalizer),
        ("phase-1 decomposition counts and gains", check_phase1_decomposition),
        ("grouping matches subset semantics", check_grouping_semantics),
        ("zero forcing removes interference", check_zero_forcing),
        ("pipeline determinism and gap sign", check_pipeline_determinism),
        ("esga count monotone in alpha", check_group_count_monotone_in_alpha),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckResult { name, outcome: f() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for check in run_all() {
            if let Err(e) = &check.outcome {
                panic!("check `{}` failed: {e}", check.name);
            }
        }
    }
}
