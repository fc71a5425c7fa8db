//! Result serialization: atomic file writes, CSV rows for trajectories and
//! decision logs, and JSON summaries that embed the resolved configuration.

use crate::sim::{DecisionRecord, RunResult, ScenarioSpec, TrajSample};
use std::io;
use std::path::Path;

/// Write via a temporary file in the same directory plus rename, so readers
/// never observe a truncated file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn fmt(v: f64) -> String {
    // Shortest round-trip representation: deterministic across runs.
    format!("{v}")
}

pub fn trajectory_csv(result: &RunResult) -> String {
    let mut out = String::from("agent,t,pos,speed,accel\n");
    if let Some(trajs) = &result.trajectories {
        for (i, samples) in trajs.iter().enumerate() {
            for TrajSample { t, pos, speed, accel } in samples {
                out.push_str(&format!("{i},{},{},{},{}\n", fmt(*t), fmt(*pos), fmt(*speed), fmt(*accel)));
            }
        }
    }
    out
}

pub fn decision_csv(decisions: &[DecisionRecord]) -> String {
    let mut out = String::from(
        "t,host,opponent,rect,case,escalations,chosen_host,chosen_other,equilibria,\
         u_aa_h,u_aa_o,u_ad_h,u_ad_o,u_da_h,u_da_o,u_dd_h,u_dd_o\n",
    );
    for d in decisions {
        let eq: Vec<String> = d.equilibria.iter().map(|p| format!("{:?}|{:?}", p.host, p.other)).collect();
        let m = &d.matrix.cells;
        out.push_str(&format!(
            "{},{},{},{},{:?},{},{:?},{:?},{},{},{},{},{},{},{},{},{}\n",
            fmt(d.t),
            d.host,
            d.opponent,
            d.rect_index,
            d.case_id,
            d.escalations,
            d.chosen.host,
            d.chosen.other,
            eq.join(";"),
            fmt(m[0][0].0),
            fmt(m[0][0].1),
            fmt(m[0][1].0),
            fmt(m[0][1].1),
            fmt(m[1][0].0),
            fmt(m[1][0].1),
            fmt(m[1][1].0),
            fmt(m[1][1].1),
        ));
    }
    out
}

/// Long-format CSV of labelled batch results, one row per scenario.
pub fn batch_csv(rows: &[(String, Vec<(&'static str, f64)>, &RunResult)]) -> String {
    let mut out = String::from(
        "label,tags,success,aeb,timed_out,t_f,t_ic,min_delta_d\n",
    );
    for (label, tags, r) in rows {
        let tag_str: Vec<String> = tags.iter().map(|(k, v)| format!("{k}={}", fmt(*v))).collect();
        out.push_str(&format!(
            "{label},{},{},{},{},{},{},{}\n",
            tag_str.join(";"),
            r.success,
            r.aeb,
            r.timed_out,
            r.t_f.map_or(String::from(""), fmt),
            r.t_ic.map_or(String::from(""), fmt),
            r.min_delta_d.map_or(String::from(""), fmt),
        ));
    }
    out
}

/// JSON summary with the resolved configuration embedded for provenance.
pub fn summary_json<T: serde::Serialize>(
    family: &str,
    seed: u64,
    config_echo: Option<&ScenarioSpec>,
    payload: &T,
) -> serde_json::Value {
    serde_json::json!({
        "family": family,
        "seed": seed,
        "config": config_echo,
        "summary": payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("crossway-out-{}", std::process::id()));
        let path = dir.join("x/y.csv");
        atomic_write(&path, b"a,b\n1,2\n").unwrap();
        atomic_write(&path, b"a,b\n3,4\n").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n3,4\n");
        // No temp litter left behind.
        let entries: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(entries.len(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn float_formatting_round_trips() {
        let v = 4.630000000000001_f64;
        let s = fmt(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
