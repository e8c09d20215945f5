use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;

pub const CSV_HEADER: [&str; 12] = [
    "technique",
    "param",
    "cr_prep",
    "cr_noprep",
    "delta_cr",
    "z",
    "s_m",
    "s_e",
    "s_tot",
    "iterations",
    "status",
    "wall_ms",
];

/// One grid point. Fields that depend on a successful forward pass are
/// `None` when `status` is not `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub technique: String,
    pub param: String,
    pub cr_prep: Option<f64>,
    pub cr_noprep: f64,
    pub delta_cr: Option<f64>,
    pub z: Option<f64>,
    pub s_m: Option<u32>,
    pub s_e: Option<u32>,
    pub s_tot: Option<u32>,
    pub iterations: Option<u32>,
    pub status: String,
    pub wall_ms: Option<f64>,
    pub roundtrip_ok: Option<bool>,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub n: usize,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl CompressionReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.technique.clone(),
                r.param.clone(),
                cell(r.cr_prep),
                r.cr_noprep.to_string(),
                cell(r.delta_cr),
                cell(r.z),
                cell(r.s_m),
                cell(r.s_e),
                cell(r.s_tot),
                cell(r.iterations),
                r.status.clone(),
                cell(r.wall_ms),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), BenchError> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self, format: ReportFormat) -> Result<Vec<u8>, BenchError> {
        let mut buf = Vec::new();
        match format {
            ReportFormat::Csv => self.write_csv(&mut buf)?,
            ReportFormat::Json => self.write_json(&mut buf)?,
        }
        Ok(buf)
    }

    pub fn emit(&self, format: ReportFormat, path: &Path) -> Result<(), BenchError> {
        std::fs::write(path, self.to_bytes(format)?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(status: &str) -> ReportRow {
        let ok = status == "ok";
        ReportRow {
            technique: "bins".into(),
            param: "k=8;d=4".into(),
            cr_prep: ok.then_some(0.1 + 0.2),
            cr_noprep: 0.5,
            delta_cr: ok.then_some((0.1 + 0.2 - 0.5) / 0.5),
            z: ok.then_some(1.0 / 3.0),
            s_m: ok.then_some(12),
            s_e: ok.then_some(11),
            s_tot: ok.then_some(24),
            iterations: Some(3),
            status: status.into(),
            wall_ms: None,
            roundtrip_ok: ok.then_some(true),
        }
    }

    #[test]
    fn golden_csv() {
        let r = CompressionReport {
            n: 4,
            rows: vec![row("ok"), row("capacity")],
        };
        let text = String::from_utf8(r.to_bytes(ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(
            text,
            "technique,param,cr_prep,cr_noprep,delta_cr,z,s_m,s_e,s_tot,iterations,status,wall_ms\n\
             bins,k=8;d=4,0.30000000000000004,0.5,-0.3999999999999999,0.3333333333333333,12,11,24,3,ok,\n\
             bins,k=8;d=4,,0.5,,,,,,3,capacity,\n"
        );
    }

    #[test]
    fn single_point_has_one_data_row() {
        let r = CompressionReport {
            n: 1,
            rows: vec![row("ok")],
        };
        let text = String::from_utf8(r.to_bytes(ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn json_round_trip() {
        let r = CompressionReport {
            n: 4,
            rows: vec![row("ok"), row("non_convergence")],
        };
        let text = String::from_utf8(r.to_bytes(ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(CompressionReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn unwritable_path() {
        let r = CompressionReport {
            n: 1,
            rows: vec![row("ok")],
        };
        let err = r.emit(ReportFormat::Csv, Path::new("/nonexistent/dir/report.csv"));
        assert!(matches!(err, Err(BenchError::Io(_))));
    }
}
