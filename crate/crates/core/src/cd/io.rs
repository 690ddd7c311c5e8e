//! Columnar storage of a depth-CD: a CSV of draws with their cached depths
//! and a JSON sidecar carrying the policy and provenance.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DepthCD, Provenance};
use crate::cloud::PointCloud;
use crate::depth::DepthPolicy;
use crate::error::{Error, Result};

pub const CD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdSidecar {
    pub format_version: u32,
    pub dim: usize,
    pub draws: usize,
    pub policy: DepthPolicy,
    pub provenance: Provenance,
}

impl DepthCD {
    pub fn sidecar(&self) -> CdSidecar {
        CdSidecar {
            format_version: CD_FORMAT_VERSION,
            dim: self.dim(),
            draws: self.len(),
            policy: self.policy.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// One row per draw: `theta_1, ..., theta_p, depth`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("theta_{j}")).collect();
        header.push("depth".into());
        w.write_record(&header)?;
        for (p, d) in self.draws.iter().zip(self.depths()) {
            w.write_record(p.iter().chain(std::iter::once(d)).map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_sidecar<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.sidecar())?;
        Ok(())
    }

    /// Loads a CD written by [`Self::write_csv`] and [`Self::write_sidecar`].
    /// With `verify`, every cached depth is recomputed and compared.
    pub fn read<R: Read, S: Read>(csv_reader: R, sidecar_reader: S, verify: bool) -> Result<Self> {
        let sidecar: CdSidecar = serde_json::from_reader(sidecar_reader)?;
        if sidecar.format_version != CD_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {} (expected {CD_FORMAT_VERSION})",
                sidecar.format_version
            )));
        }
        let p = sidecar.dim;
        let mut r = csv::Reader::from_reader(csv_reader);
        let width = r.headers()?.len();
        if width != p + 1 {
            return Err(Error::Format(format!(
                "expected {} columns (dim + depth), found {width}",
                p + 1
            )));
        }
        let mut flat = Vec::with_capacity(sidecar.draws * p);
        let mut depths = Vec::with_capacity(sidecar.draws);
        for (row, record) in r.records().enumerate() {
            let record = record?;
            for (col, cell) in record.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Format(format!("row {}, column {}: `{cell}` is not a number", row + 1, col + 1))
                })?;
                if col < p {
                    flat.push(v);
                } else {
                    depths.push(v);
                }
            }
        }
        if depths.len() != sidecar.draws {
            return Err(Error::Format(format!(
                "sidecar lists {} draws but the table has {}",
                sidecar.draws,
                depths.len()
            )));
        }
        let draws = PointCloud::from_flat(p, flat)?;
        let cd = DepthCD::from_cached(draws, &sidecar.policy, sidecar.provenance, depths)?;
        if verify {
            cd.verify_depths()?;
        }
        Ok(cd)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{bootstrap_cd, Estimator};
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn round_trip_and_tamper_detection() {
        let mut g = rng::stream(5, 5);
        let s: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut g)).collect();
        let sample = PointCloud::from_flat(2, s).unwrap();
        let cd = bootstrap_cd(&sample, &Estimator::Mean, 300, &DepthPolicy::halfspace(), 3).unwrap();
        let (mut table, mut side) = (Vec::new(), Vec::new());
        cd.write_csv(&mut table).unwrap();
        cd.write_sidecar(&mut side).unwrap();
        let back = DepthCD::read(&table[..], &side[..], true).unwrap();
        assert_eq!(back.draws(), cd.draws());
        assert_eq!(back.depths(), cd.depths());

        let text = String::from_utf8(table).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let last = lines[1].rfind(',').unwrap();
        lines[1].replace_range(last + 1.., "0.999");
        let tampered = lines.join("\n");
        assert!(DepthCD::read(tampered.as_bytes(), &side[..], true).is_err());
        assert!(DepthCD::read(tampered.as_bytes(), &side[..], false).is_ok());
    }
}
