//! Experiment configuration files: a flat `section.key = value` format with
//! explicit unit suffixes on dB/dBm quantities, plus the matching serializer.

use std::collections::BTreeMap;

use crate::capacity::SelectionPolicy;
use crate::channel::{PathLossModel, RadioConfig};
use crate::error::{Error, Result};
use crate::grouping::DEFAULT_GROUP_LIMIT;
use crate::sim::{Algorithms, ExperimentConfig};
use crate::topology::NetworkConfig;

struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {}: empty key or value", lineno + 1)));
            }
            if entries.insert(key.clone(), (value, lineno + 1)).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Result<(String, usize)> {
        self.entries
            .remove(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn take_optional(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
        }
        Ok(())
    }
}

fn bad(key: &str, line: usize, what: &str) -> Error {
    Error::Config(format!("line {line}: key `{key}`: {what}"))
}

/// Split a value into its numeric part and an optional unit suffix.
fn split_unit(value: &str) -> (&str, Option<&str>) {
    match value.rfind(|c: char| c.is_ascii_digit() || c == '.') {
        Some(pos) => {
            let (num, unit) = value.split_at(pos + 1);
            let unit = unit.trim();
            (num.trim(), if unit.is_empty() { None } else { Some(unit) })
        }
        None => (value.trim(), None),
    }
}

fn parse_number(key: &str, text: &str, line: usize) -> Result<f64> {
    text.parse::<f64>().map_err(|_| bad(key, line, &format!("`{text}` is not a number")))
}

fn parse_plain(key: &str, value: &str, line: usize) -> Result<f64> {
    let (num, unit) = split_unit(value);
    if let Some(u) = unit {
        return Err(bad(key, line, &format!("unexpected unit `{u}` on a dimensionless value")));
    }
    parse_number(key, num, line)
}

fn parse_count(key: &str, value: &str, line: usize) -> Result<usize> {
    let x = parse_plain(key, value, line)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(bad(key, line, &format!("`{value}` is not a nonnegative integer")));
    }
    Ok(x as usize)
}

fn parse_seed(key: &str, value: &str, line: usize) -> Result<u64> {
    value.trim().parse::<u64>().map_err(|_| bad(key, line, &format!("`{value}` is not a seed")))
}

fn parse_with_unit(key: &str, value: &str, line: usize, units: &[(&str, f64)]) -> Result<f64> {
    let (num, unit) = split_unit(value);
    let unit = unit.ok_or_else(|| {
        bad(key, line, &format!("missing unit (expected one of {:?})", units.iter().map(|u| u.0).collect::<Vec<_>>()))
    })?;
    let scale = units
        .iter()
        .find(|(u, _)| unit.eq_ignore_ascii_case(u))
        .map(|(_, s)| *s)
        .ok_or_else(|| bad(key, line, &format!("unknown unit `{unit}`")))?;
    Ok(parse_number(key, num, line)? * scale)
}

fn parse_meters(key: &str, value: &str, line: usize) -> Result<f64> {
    parse_with_unit(key, value, line, &[("m", 1.0), ("km", 1000.0)])
}

fn parse_hz(key: &str, value: &str, line: usize) -> Result<f64> {
    parse_with_unit(key, value, line, &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)])
}

/// dB-family values must carry the exact expected suffix.
fn parse_db_kind(key: &str, value: &str, line: usize, expected: &str) -> Result<f64> {
    let (num, unit) = split_unit(value);
    match unit {
        Some(u) if u.eq_ignore_ascii_case(expected) => parse_number(key, num, line),
        Some(u) => Err(bad(key, line, &format!("expected unit `{expected}`, got `{u}`"))),
        None => Err(bad(key, line, &format!("missing unit `{expected}`"))),
    }
}

/// Comma-separated numbers; an optional single trailing unit applies to all.
fn parse_list(key: &str, value: &str, line: usize, expected_unit: Option<&str>) -> Result<Vec<f64>> {
    let (body, unit) = match expected_unit {
        None => (value, None),
        Some(exp) => {
            let (num_part, unit) = split_unit(value);
            match unit {
                Some(u) if u.eq_ignore_ascii_case(exp) => (num_part, Some(exp)),
                Some(u) => return Err(bad(key, line, &format!("expected unit `{exp}`, got `{u}`"))),
                None => return Err(bad(key, line, &format!("missing unit `{exp}`"))),
            }
        }
    };
    let _ = unit;
    body.split(',')
        .map(|piece| parse_number(key, piece.trim(), line))
        .collect()
}

/// Parse a complete experiment description from the flat key-value format.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::parse(text)?;
    let mut take_num = |key: &str, f: &dyn Fn(&str, &str, usize) -> Result<f64>| -> Result<f64> {
        let (value, line) = raw.take(key)?;
        f(key, &value, line)
    };

    let num_relays = take_num("network.num_relays", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;
    let num_ues = take_num("network.num_ues", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;
    let antennas_bs = take_num("network.antennas_bs", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;
    let antennas_rn = take_num("network.antennas_rn", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;
    let antennas_ue = take_num("network.antennas_ue", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;
    let cell_radius = take_num("network.cell_radius", &parse_meters)?;
    let ratio = take_num("network.bs_rn_distance_ratio", &parse_plain)?;
    let num_subcarriers = take_num("network.num_subcarriers", &|k, v, l| parse_count(k, v, l).map(|x| x as f64))? as usize;

    let bandwidth_hz = take_num("radio.bandwidth", &parse_hz)?;
    let n0 = take_num("radio.n0", &|k, v, l| parse_db_kind(k, v, l, "dBm/Hz"))?;
    let snr_gap_db = take_num("radio.snr_gap", &|k, v, l| parse_db_kind(k, v, l, "dB"))?;
    let p_max_bs_dbm = take_num("radio.p_max_bs", &|k, v, l| parse_db_kind(k, v, l, "dBm"))?;
    let p_max_rn_dbm = take_num("radio.p_max_rn", &|k, v, l| parse_db_kind(k, v, l, "dBm"))?;

    let los_intercept = take_num("pathloss.los_intercept", &|k, v, l| parse_db_kind(k, v, l, "dB"))?;
    let los_slope = take_num("pathloss.los_slope", &|k, v, l| parse_db_kind(k, v, l, "dB"))?;
    let nlos_intercept = take_num("pathloss.nlos_intercept", &|k, v, l| parse_db_kind(k, v, l, "dB"))?;
    let nlos_slope = take_num("pathloss.nlos_slope", &|k, v, l| parse_db_kind(k, v, l, "dB"))?;

    let alpha = take_num("grouping.alpha", &parse_plain)?;

    let (algorithms, algo_line) = raw.take("sim.algorithms")?;
    let mut esga = false;
    let mut ocga = false;
    for piece in algorithms.split(',') {
        match piece.trim().to_ascii_lowercase().as_str() {
            "esga" => esga = true,
            "ocga" => ocga = true,
            other => {
                return Err(bad("sim.algorithms", algo_line, &format!("unknown algorithm `{other}`")))
            }
        }
    }
    let (selection, sel_line) = raw.take("sim.selection")?;
    let selection = match selection.trim().to_ascii_lowercase().as_str() {
        "best" => SelectionPolicy::Best,
        "random" => SelectionPolicy::Random,
        other => return Err(bad("sim.selection", sel_line, &format!("unknown policy `{other}`"))),
    };
    let num_samples = {
        let (value, line) = raw.take("sim.samples")?;
        parse_count("sim.samples", &value, line)?
    };
    let master_seed = {
        let (value, line) = raw.take("sim.seed")?;
        parse_seed("sim.seed", &value, line)?
    };

    let sweep_alpha = match raw.take_optional("sweep.alpha") {
        Some((value, line)) => parse_list("sweep.alpha", &value, line, None)?,
        None => Vec::new(),
    };
    let sweep_p_bs_dbm = match raw.take_optional("sweep.p_bs") {
        Some((value, line)) => parse_list("sweep.p_bs", &value, line, Some("dBm"))?,
        None => Vec::new(),
    };
    let sweep_p_rn_dbm = match raw.take_optional("sweep.p_rn") {
        Some((value, line)) => parse_list("sweep.p_rn", &value, line, Some("dBm"))?,
        None => Vec::new(),
    };
    let max_deactivated = match raw.take_optional("grouping.max_deactivated") {
        Some((value, line)) => parse_count("grouping.max_deactivated", &value, line)?,
        None => 1,
    };
    let esga_group_limit = match raw.take_optional("grouping.esga_group_limit") {
        Some((value, line)) => parse_count("grouping.esga_group_limit", &value, line)?,
        None => DEFAULT_GROUP_LIMIT,
    };

    raw.finish()?;

    let config = ExperimentConfig {
        network: NetworkConfig {
            num_relays,
            num_ues,
            antennas: (antennas_bs, antennas_rn, antennas_ue),
            cell_radius,
            bs_rn_distance_ratio: ratio,
            num_subcarriers,
        },
        radio: RadioConfig {
            bandwidth_hz,
            noise_psd_dbm_per_hz: n0,
            snr_gap_db,
            p_max_bs_dbm,
            p_max_rn_dbm,
        },
        path_loss: PathLossModel {
            los_intercept_db: los_intercept,
            los_slope_db_per_decade: los_slope,
            nlos_intercept_db: nlos_intercept,
            nlos_slope_db_per_decade: nlos_slope,
        },
        alpha,
        sweep_alpha,
        sweep_p_bs_dbm,
        sweep_p_rn_dbm,
        algorithms: Algorithms { esga, ocga },
        selection,
        num_samples,
        master_seed,
        max_deactivated,
        esga_group_limit,
    };
    config.validate()?;
    Ok(config)
}

fn fmt_list(values: &[f64], unit: &str) -> String {
    let body = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
    if unit.is_empty() {
        body
    } else {
        format!("{body} {unit}")
    }
}

/// Serialize a configuration in the same flat format `parse_config` reads.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("network.num_relays", config.network.num_relays.to_string());
    push("network.num_ues", config.network.num_ues.to_string());
    push("network.antennas_bs", config.network.antennas.0.to_string());
    push("network.antennas_rn", config.network.antennas.1.to_string());
    push("network.antennas_ue", config.network.antennas.2.to_string());
    push("network.cell_radius", format!("{} m", config.network.cell_radius));
    push("network.bs_rn_distance_ratio", config.network.bs_rn_distance_ratio.to_string());
    push("network.num_subcarriers", config.network.num_subcarriers.to_string());
    push("radio.bandwidth", format!("{} Hz", config.radio.bandwidth_hz));
    push("radio.n0", format!("{} dBm/Hz", config.radio.noise_psd_dbm_per_hz));
    push("radio.snr_gap", format!("{} dB", config.radio.snr_gap_db));
    push("radio.p_max_bs", format!("{} dBm", config.radio.p_max_bs_dbm));
    push("radio.p_max_rn", format!("{} dBm", config.radio.p_max_rn_dbm));
    push("pathloss.los_intercept", format!("{} dB", config.path_loss.los_intercept_db));
    push("pathloss.los_slope", format!("{} dB", config.path_loss.los_slope_db_per_decade));
    push("pathloss.nlos_intercept", format!("{} dB", config.path_loss.nlos_intercept_db));
    push("pathloss.nlos_slope", format!("{} dB", config.path_loss.nlos_slope_db_per_decade));
    push("grouping.alpha", config.alpha.to_string());
    push("grouping.max_deactivated", config.max_deactivated.to_string());
    push("grouping.esga_group_limit", config.esga_group_limit.to_string());
    if !config.sweep_alpha.is_empty() {
        push("sweep.alpha", fmt_list(&config.sweep_alpha, ""));
    }
    if !config.sweep_p_bs_dbm.is_empty() {
        push("sweep.p_bs", fmt_list(&config.sweep_p_bs_dbm, "dBm"));
    }
    if !config.sweep_p_rn_dbm.is_empty() {
        push("sweep.p_rn", fmt_list(&config.sweep_p_rn_dbm, "dBm"));
    }
    let algos = match (config.algorithms.esga, config.algorithms.ocga) {
        (true, true) => "esga, ocga",
        (true, false) => "esga",
        (false, true) => "ocga",
        (false, false) => "",
    };
    push("sim.algorithms", algos.to_string());
    push(
        "sim.selection",
        match config.selection {
            SelectionPolicy::Best => "best".to_string(),
            SelectionPolicy::Random => "random".to_string(),
        },
    );
    push("sim.samples", config.num_samples.to_string());
    push("sim.seed", config.master_seed.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::dbm_to_watts;
    use crate::sim::{preset_fig2, preset_fig3};

    fn sample_text() -> String {
        "\
# small scenario
network.num_relays = 2
network.num_ues = 2
network.antennas_bs = 4
network.antennas_rn = 4
network.antennas_ue = 2
network.cell_radius = 0.75 km
network.bs_rn_distance_ratio = 0.5
network.num_subcarriers = 6

radio.bandwidth = 180 kHz
radio.n0 = -174 dBm/Hz
radio.snr_gap = 0 dB
radio.p_max_bs = 20 dBm
radio.p_max_rn = 10 dBm

pathloss.los_intercept = 100.7 dB
pathloss.los_slope = 23.5 dB
pathloss.nlos_intercept = 131.1 dB
pathloss.nlos_slope = 42.8 dB

grouping.alpha = 0.1
sweep.alpha = 0.1, 0.2, 0.3

sim.algorithms = esga, ocga
sim.selection = best
sim.samples = 10
sim.seed = 7
"
        .to_string()
    }

    #[test]
    fn parses_units_and_values() {
        let config = parse_config(&sample_text()).unwrap();
        assert_eq!(config.network.cell_radius, 750.0);
        assert_eq!(config.radio.bandwidth_hz, 180e3);
        assert_eq!(config.radio.noise_psd_dbm_per_hz, -174.0);
        let n0_w = dbm_to_watts(config.radio.noise_psd_dbm_per_hz);
        assert!((n0_w - 3.98e-21).abs() < 0.01e-21);
        assert_eq!(config.sweep_alpha, vec![0.1, 0.2, 0.3]);
        assert_eq!(config.num_samples, 10);
        assert_eq!(config.master_seed, 7);
    }

    #[test]
    fn missing_key_is_named() {
        let text = sample_text().replace("grouping.alpha = 0.1\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("grouping.alpha"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = sample_text() + "radio.bogus = 3 dB\n";
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("unknown key `radio.bogus`"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn wrong_unit_is_rejected() {
        let text = sample_text().replace("radio.p_max_bs = 20 dBm", "radio.p_max_bs = 20 dB");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("p_max_bs"), "{err}");
        let text = sample_text().replace("radio.bandwidth = 180 kHz", "radio.bandwidth = 180");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn out_of_range_alpha_rejected() {
        let text = sample_text().replace("grouping.alpha = 0.1", "grouping.alpha = 1.5");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let parsed = parse_config(&sample_text()).unwrap();
        let reparsed = parse_config(&serialize_config(&parsed)).unwrap();
        assert_eq!(parsed, reparsed);
        for preset in [preset_fig2(), preset_fig3()] {
            let text = serialize_config(&preset);
            let back = parse_config(&text).unwrap();
            assert_eq!(preset, back);
        }
    }
}
