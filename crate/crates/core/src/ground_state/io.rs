//! Profile export and import: CSV samples (r, U, U') plus a JSON header.

use super::GroundStateProfile;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileHeader {
    pub n: usize,
    pub p: f64,
    pub u0: f64,
    pub r_max: f64,
    pub r_match: f64,
    pub tail_amplitude: f64,
    pub residual_bound: f64,
    pub decay_amplitude: f64,
    pub decay_rate: f64,
}

impl GroundStateProfile {
    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            n: self.n,
            p: self.p,
            u0: self.peak(),
            r_max: self.r_max,
            r_match: self.r_match,
            tail_amplitude: self.tail_amplitude,
            residual_bound: self.residual_bound,
            decay_amplitude: self.decay_amplitude,
            decay_rate: self.decay_rate,
        }
    }

    /// Samples written to CSV: the interpolation nodes, then the far-field
    /// model every 0.1 up to R_max.
    pub fn samples(&self) -> Vec<[f64; 3]> {
        let mut out: Vec<[f64; 3]> = (0..self.r.len()).map(|j| [self.r[j], self.u[j], self.du[j]]).collect();
        let mut r = (self.r_match * 10.0).floor() / 10.0 + 0.1;
        while r <= self.r_max + 1e-12 {
            let [u, du, _] = self.eval(r);
            out.push([r, u, du]);
            r += 0.1;
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "U", "dU"])?;
        for s in self.samples() {
            wr.write_record(s.iter().map(|v| format!("{v:.17e}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        std::fs::write(json_path, serde_json::to_string_pretty(&self.header())?)?;
        Ok(())
    }

    pub fn read<R: std::io::Read>(header: &ProfileHeader, csv_reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(csv_reader);
        let (mut r, mut u, mut du) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("bad profile row {:?}", rec)))
            };
            let rj = parse(0)?;
            if rj > header.r_match * (1.0 + 1e-14) {
                break;
            }
            r.push(rj);
            u.push(parse(1)?);
            du.push(parse(2)?);
        }
        if r.len() < 2 || r[0] != 0.0 {
            return Err(Error::InvalidParameter("profile samples must start at r = 0".into()));
        }
        let mut prof = Self::from_samples(header.n, header.p, r, u, du, header.r_match);
        prof.r_max = header.r_max;
        Ok(prof)
    }

    pub fn load(csv_path: &Path, json_path: &Path) -> Result<Self> {
        let header: ProfileHeader = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        Self::read(&header, std::fs::File::open(csv_path)?)
    }
}

#[cfg(test)]
mod tests {
    use crate::ground_state::solve_ground_state;

    #[test]
    fn round_trip_through_csv() {
        let g = solve_ground_state(2, 3.0, 1e-8).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = super::GroundStateProfile::read(&g.header(), buf.as_slice()).unwrap();
        for r in [0.0, 0.37, 2.2, 9.0, 25.0] {
            assert!((back.value(r) - g.value(r)).abs() < 1e-15 + 1e-14 * g.value(r));
        }
        assert_eq!(back.peak(), g.peak());
    }
}
