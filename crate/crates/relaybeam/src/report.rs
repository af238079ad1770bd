//! CSV emission for campaign summaries and per-sample records. Formatting is
//! fully deterministic so identical runs produce byte-identical files.

use crate::sim::CampaignSummary;

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => v.to_string(),
        None => String::new(),
    }
}

/// One row per sweep point.
pub const CAMPAIGN_HEADER: &str = "sweep_var,sweep_value,alpha,p_bs_dbm,p_rn_dbm,mean_capacity_bps,stderr_bps,mean_groups_esga,mean_groups_ocga,norm_opt_gap,samples_ok,samples_aborted";

pub fn campaign_csv(summary: &CampaignSummary) -> String {
    let mut out = String::from(CAMPAIGN_HEADER);
    out.push('\n');
    for p in &summary.points {
        let row = [
            p.point.var.label().to_string(),
            p.point.value.to_string(),
            p.point.alpha.to_string(),
            p.point.p_bs_dbm.to_string(),
            p.point.p_rn_dbm.to_string(),
            fmt_opt(p.mean_capacity_bps),
            fmt_opt(p.stderr_bps),
            fmt_opt(p.mean_groups_esga),
            fmt_opt(p.mean_groups_ocga),
            fmt_opt(p.norm_opt_gap),
            p.samples_ok.to_string(),
            p.samples_aborted.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One row per sample per sweep point.
pub const SAMPLES_HEADER: &str = "sample_index,seed,capacity_bps,groups_esga,groups_ocga";

pub fn samples_csv(summary: &CampaignSummary) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for p in &summary.points {
        for r in &p.records {
            let row = [
                r.sample_index.to_string(),
                r.seed.to_string(),
                r.capacity_bps.to_string(),
                r.groups_esga.map(|g| g.to_string()).unwrap_or_default(),
                r.groups_ocga.map(|g| g.to_string()).unwrap_or_default(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}
