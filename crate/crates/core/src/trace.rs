//! Diagnostic trace: one CSV row per sample with a fixed column order.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::diagnostics::{EnergyReport, RegularityReport, X_TERM_NAMES, Y_TERM_NAMES};
use crate::error::{Error, Result};

const ENERGY_COLUMNS: [&str; 17] = [
    "v_l2",
    "v_h1",
    "v_h2",
    "t_l2",
    "t_h1",
    "t_h2",
    "diss_v_h",
    "diss_v_z",
    "diss_t_z",
    "diss_t_h",
    "coupling_v",
    "coupling_t",
    "source_v",
    "source_t",
    "residual_v",
    "residual_t",
    "barotropic_div",
];

const REGULARITY_COLUMNS: [&str; 13] = [
    "c_r",
    "eta_l2",
    "eta_h1",
    "eta_h2",
    "theta_l2",
    "theta_h1",
    "theta_h2",
    "x",
    "y",
    "z",
    "weighted_eta_theta",
    "weighted_u",
    "anisotropic_1",
];

/// Column names in output order.
pub fn columns() -> Vec<String> {
    let mut cols = vec!["time".to_string()];
    cols.extend(ENERGY_COLUMNS.iter().map(|s| s.to_string()));
    cols.extend(REGULARITY_COLUMNS.iter().map(|s| s.to_string()));
    cols.push("anisotropic_2".into());
    cols.extend(X_TERM_NAMES.iter().map(|s| format!("x_{s}")));
    cols.extend(Y_TERM_NAMES.iter().map(|s| format!("y_{s}")));
    cols
}

/// One trace row.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub energy: EnergyReport,
    pub regularity: RegularityReport,
    /// `||div_H vbar||` over M.
    pub barotropic_div: f64,
}

impl Sample {
    pub fn values(&self) -> Vec<f64> {
        let e = &self.energy;
        let r = &self.regularity;
        let mut v = vec![
            e.time,
            e.v_l2,
            e.v_h1,
            e.v_h2,
            e.t_l2,
            e.t_h1,
            e.t_h2,
            e.diss_v_h,
            e.diss_v_z,
            e.diss_t_z,
            e.diss_t_h,
            e.coupling_v,
            e.coupling_t,
            e.source_v,
            e.source_t,
            e.residual_v,
            e.residual_t,
            self.barotropic_div,
            r.c_r,
            r.eta_l2,
            r.eta_h1,
            r.eta_h2,
            r.theta_l2,
            r.theta_h1,
            r.theta_h2,
            r.x,
            r.y,
            r.z,
            r.weighted_eta_theta,
            r.weighted_u,
            r.anisotropic[0],
            r.anisotropic[1],
        ];
        v.extend_from_slice(&r.x_terms);
        v.extend_from_slice(&r.y_terms);
        v
    }
}

pub struct TraceWriter {
    path: std::path::PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(columns())?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn write(&mut self, sample: &Sample) -> Result<()> {
        // `Display` for f64 prints the shortest representation that round-trips.
        self.inner
            .write_record(sample.values().iter().map(|v| v.to_string()))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Header and numeric rows of a trace file.
pub fn read_trace(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Integrity(format!("bad number {s:?} in trace: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{norms, regularity_functionals};
    use crate::spectral::Grid3;
    use crate::state::{Params, State};

    #[test]
    fn header_matches_row_width_and_round_trips() {
        let s = State::zeros(Grid3::cube(8, 1.0).unwrap(), Params::default()).unwrap();
        let sample = Sample {
            energy: norms(&s, None).unwrap(),
            regularity: regularity_functionals(&s, 0.0),
            barotropic_div: 0.0,
        };
        assert_eq!(columns().len(), sample.values().len());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut w = TraceWriter::create(&path).unwrap();
        w.write(&sample).unwrap();
        w.flush().unwrap();
        let (header, rows) = read_trace(&path).unwrap();
        assert_eq!(header, columns());
        assert_eq!(rows, vec![sample.values()]);
    }
}
