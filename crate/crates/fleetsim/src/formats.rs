//! File formats. Times are minutes, distances km, costs in currency units.
//!
//! | file | columns / keys |
//! |---|---|
//! | job trace | `n,t_arrival,t_assigned,t_depot_ready,t_delivered,vehicle_id,W,R,S,T` |
//! | pending counts | `t_min,N` |
//! | Welch curve | `n,T_smoothed` |
//! | frontier | `L,T_tread_min,I_min_usd,l_star,K_term` |
//! | integer envelope | `L,T_tread_min,K,cost_usd` |
//! | impossible region | `L,K_boundary,T_min_min` |
//! | sweep | `policy,K,L,stable,n_wu,T_mean_min,ci90_lo,ci90_hi` |
//! | summary (JSON) | `policy,K,L,lambda_per_min,n_wu,T_mean_min,ci90_lo,ci90_hi,stable,seeds` |
//! | layout (JSON) | `side_km,depots,H_L_km,method` |
//!
//! Job-trace times carry 6 decimals; empty cells mark stamps not reached.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use fleetsim_core::analysis::{EnvelopePoint, FrontierPoint, ImpossibleRegion};
use fleetsim_core::engine::{ExperimentResult, PendingSample};
use fleetsim_core::fleet::{decompose_times, Job};
use fleetsim_core::geometry::{DepotLayout, PlacementMethod};
use fleetsim_core::stats::WelchCurve;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

fn opt6(x: Option<f64>) -> String {
    x.map(|v| fixed(v, 6)).unwrap_or_default()
}

/// Creates `path` (and its parent directories) and hands a buffered writer
/// to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))
    })
}

pub fn write_jobs_csv(w: &mut dyn Write, jobs: &[Job]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "t_arrival", "t_assigned", "t_depot_ready", "t_delivered", "vehicle_id", "W", "R", "S", "T"])?;
    for job in jobs {
        let times = decompose_times(job).ok();
        out.write_record([
            job.n.to_string(),
            fixed(job.t_arrival, 6),
            opt6(job.t_assigned),
            opt6(job.t_depot_ready),
            opt6(job.t_delivered),
            job.vehicle_id.map(|v| v.to_string()).unwrap_or_default(),
            opt6(times.map(|t| t.w)),
            opt6(times.map(|t| t.r)),
            opt6(times.map(|t| t.s)),
            opt6(times.map(|t| t.t)),
        ])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

/// Delivery times `T` of the leading run of delivered jobs in a job trace.
pub fn read_delivery_series(r: impl Read) -> CliResult<Vec<f64>> {
    let mut input = csv::Reader::from_reader(r);
    let headers = input.headers()?.clone();
    let n_col = headers.iter().position(|h| h == "n");
    let t_col = headers
        .iter()
        .position(|h| h == "T")
        .ok_or_else(|| CliError::Format("job trace lacks a `T` column".into()))?;
    let mut out = Vec::new();
    for (i, record) in input.records().enumerate() {
        let record = record?;
        if let Some(c) = n_col {
            let n: usize = record[c].parse().map_err(|_| CliError::Format(format!("bad job index `{}`", &record[c])))?;
            if n != i {
                return Err(CliError::Format(format!("job rows out of order at row {i}")));
            }
        }
        let cell = &record[t_col];
        if cell.is_empty() {
            break;
        }
        out.push(cell.parse().map_err(|_| CliError::Format(format!("bad delivery time `{cell}`")))?);
    }
    Ok(out)
}

pub fn write_pending_csv(w: &mut dyn Write, samples: &[PendingSample]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t_min", "N"])?;
    for s in samples {
        out.write_record([fixed(s.t, 6), s.pending().to_string()])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub fn write_welch_csv(w: &mut dyn Write, curve: &WelchCurve) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "T_smoothed"])?;
    for (j, v) in curve.values.iter().enumerate() {
        out.write_record([curve.demand_index(j).to_string(), fixed(*v, 6)])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub fn write_frontier_csv(w: &mut dyn Write, points: &[FrontierPoint]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["L", "T_tread_min", "I_min_usd", "l_star", "K_term"])?;
    for p in points {
        out.write_record([
            p.depots.to_string(),
            fixed(p.t_tread.as_minutes(), 6),
            fixed(p.i_min, 2),
            p.l_star.to_string(),
            p.k_term.to_string(),
        ])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub fn write_envelope_csv(w: &mut dyn Write, points: &[EnvelopePoint]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["L", "T_tread_min", "K", "cost_usd"])?;
    for p in points {
        out.write_record([
            p.depots.to_string(),
            fixed(p.t_tread.as_minutes(), 6),
            p.vehicles.to_string(),
            fixed(p.cost, 2),
        ])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub fn write_impossible_csv(w: &mut dyn Write, regions: &[ImpossibleRegion]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["L", "K_boundary", "T_min_min"])?;
    for r in regions {
        out.write_record([r.depots.to_string(), fixed(r.k_boundary, 6), fixed(r.t_min.as_minutes(), 6)])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

/// Experiment summary, one JSON object per (policy, K, L) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policy: String,
    #[serde(rename = "K")]
    pub vehicles: usize,
    #[serde(rename = "L")]
    pub depots: usize,
    pub lambda_per_min: f64,
    pub n_wu: Option<usize>,
    #[serde(rename = "T_mean_min")]
    pub t_mean_min: Option<f64>,
    pub ci90_lo: Option<f64>,
    pub ci90_hi: Option<f64>,
    pub stable: bool,
    pub seeds: Vec<u64>,
}

impl From<&ExperimentResult> for Summary {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            policy: r.policy.token().to_string(),
            vehicles: r.config.vehicles,
            depots: r.config.depots,
            lambda_per_min: r.config.lambda,
            n_wu: r.n_wu(),
            t_mean_min: r.t_mean(),
            ci90_lo: r.estimate.as_ref().map(|e| e.ci.0),
            ci90_hi: r.estimate.as_ref().map(|e| e.ci.1),
            stable: r.stable,
            seeds: r.seeds.clone(),
        }
    }
}

const SWEEP_HEADER: [&str; 8] = ["policy", "K", "L", "stable", "n_wu", "T_mean_min", "ci90_lo", "ci90_hi"];

pub fn write_sweep_csv(w: &mut dyn Write, rows: &[Summary]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for s in rows {
        out.write_record([
            s.policy.clone(),
            s.vehicles.to_string(),
            s.depots.to_string(),
            s.stable.to_string(),
            s.n_wu.map(|n| n.to_string()).unwrap_or_default(),
            opt6(s.t_mean_min),
            opt6(s.ci90_lo),
            opt6(s.ci90_hi),
        ])?;
    }
    out.flush().map_err(|e| CliError::Format(e.to_string()))
}

pub fn read_sweep_csv(r: impl Read) -> CliResult<Vec<Summary>> {
    let mut input = csv::Reader::from_reader(r);
    if input.headers()?.iter().ne(SWEEP_HEADER) {
        return Err(CliError::Format(format!("sweep file must have columns {}", SWEEP_HEADER.join(","))));
    }
    let opt = |s: &str| -> CliResult<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| CliError::Format(format!("bad number `{s}`")))
        }
    };
    let int = |s: &str| -> CliResult<usize> { s.parse().map_err(|_| CliError::Format(format!("bad integer `{s}`"))) };
    let mut rows = Vec::new();
    for record in input.records() {
        let r = record?;
        rows.push(Summary {
            policy: r[0].to_string(),
            vehicles: int(&r[1])?,
            depots: int(&r[2])?,
            lambda_per_min: f64::NAN,
            stable: r[3] == *"true",
            n_wu: if r[4].is_empty() { None } else { Some(int(&r[4])?) },
            t_mean_min: opt(&r[5])?,
            ci90_lo: opt(&r[6])?,
            ci90_hi: opt(&r[7])?,
            seeds: Vec::new(),
        });
    }
    Ok(rows)
}

/// Depot layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub side_km: f64,
    pub depots: Vec<[f64; 2]>,
    #[serde(rename = "H_L_km")]
    pub h_l_km: f64,
    pub method: PlacementMethod,
}

impl LayoutFile {
    pub fn new(side_km: f64, layout: &DepotLayout) -> Self {
        Self {
            side_km,
            depots: layout.positions.iter().map(|p| [p.x, p.y]).collect(),
            h_l_km: layout.h_l,
            method: layout.method,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fleetsim_core::fleet::JobStatus;
    use fleetsim_core::Point;

    fn job(n: usize, stamps: Option<[f64; 4]>) -> Job {
        let mut j = Job::new(n, Point::new(1.0, 1.0), stamps.map_or(n as f64, |s| s[0]));
        if let Some(s) = stamps {
            j.t_assigned = Some(s[1]);
            j.t_depot_ready = Some(s[2]);
            j.t_delivered = Some(s[3]);
            j.vehicle_id = Some(2);
            j.status = JobStatus::Delivered;
        }
        j
    }

    #[test]
    fn job_rows() {
        let jobs = [job(0, Some([0.0, 0.0, 2.0, 5.0])), job(1, None)];
        let mut buf = Vec::new();
        write_jobs_csv(&mut buf, &jobs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,t_arrival,t_assigned,t_depot_ready,t_delivered,vehicle_id,W,R,S,T");
        assert_eq!(lines[1], "0,0.000000,0.000000,2.000000,5.000000,2,0.000000,2.000000,3.000000,5.000000");
        assert_eq!(lines[2], "1,1.000000,,,,,,,,");
        assert_eq!(read_delivery_series(text.as_bytes()).unwrap(), [5.0]);
    }

    #[test]
    fn sweep_round_trip() {
        let rows = vec![Summary {
            policy: "fj+".into(),
            vehicles: 12,
            depots: 16,
            lambda_per_min: f64::NAN,
            n_wu: Some(500),
            t_mean_min: Some(1.25),
            ci90_lo: Some(1.2),
            ci90_hi: Some(1.3),
            stable: true,
            seeds: vec![],
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].t_mean_min, Some(1.25));
        assert_eq!((back[0].vehicles, back[0].depots, back[0].stable), (12, 16, true));
    }
}
