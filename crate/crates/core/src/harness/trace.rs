//! Simulation trace: a uniform-grid, column-complete record of every run,
//! serialized as CSV with a header row and 17-significant-digit floats.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::lie::{Su2Element, Vec3};

use super::HarnessError;

/// One trace sample.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: [f64; 4],
    pub rate: Vec3,
    pub ref_position: Vec3,
    pub ref_velocity: Vec3,
    pub ref_attitude: [f64; 4],
    pub ref_rate: Vec3,
    pub desired_attitude: [f64; 4],
    pub desired_rate: Vec3,
    pub desired_rate_dot: Vec3,
    /// Raw thrust projection (may be negative) and the applied value.
    pub thrust: f64,
    pub thrust_applied: f64,
    pub torque: Vec3,
    pub e_p: Vec3,
    pub e_v: Vec3,
    pub e_x: Vec3,
    pub e_omega: Vec3,
    /// Distances: to the desired attitude, the reference attitude (SU(2)),
    /// and the reference rotation (SO(3)).
    pub gamma_desired: f64,
    pub gamma_reference: f64,
    pub psi_reference: f64,
    pub lyapunov: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub in_exponential: bool,
    pub in_attractivity: bool,
    pub held_previous: bool,
}

impl TraceRow {
    pub fn attitude_su2(&self) -> Su2Element {
        Su2Element::from_components(
            self.attitude[0],
            self.attitude[1],
            self.attitude[2],
            self.attitude[3],
        )
        .expect("trace attitudes are unit")
    }

    /// Norm vector `(|e_p|, |e_v|, |e_X|, |e_w|)`.
    pub fn error_norms(&self) -> [f64; 4] {
        [
            self.e_p.norm(),
            self.e_v.norm(),
            self.e_x.norm(),
            self.e_omega.norm(),
        ]
    }

    pub fn zbar_squared(&self) -> f64 {
        self.e_p.norm_squared()
            + self.e_v.norm_squared()
            + self.e_x.norm_squared()
            + self.e_omega.norm_squared()
    }
}

/// Time-indexed record of a run on a uniform sampling grid.
#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
}

const COLUMNS: &[&str] = &[
    "t",
    "px", "py", "pz",
    "vx", "vy", "vz",
    "q1", "q2", "q3", "q4",
    "wx", "wy", "wz",
    "pr_x", "pr_y", "pr_z",
    "vr_x", "vr_y", "vr_z",
    "qr_1", "qr_2", "qr_3", "qr_4",
    "wr_x", "wr_y", "wr_z",
    "qd_1", "qd_2", "qd_3", "qd_4",
    "wd_x", "wd_y", "wd_z",
    "wd_dot_x", "wd_dot_y", "wd_dot_z",
    "f", "f_applied",
    "tau_x", "tau_y", "tau_z",
    "e_p_x", "e_p_y", "e_p_z",
    "e_v_x", "e_v_y", "e_v_z",
    "e_x_x", "e_x_y", "e_x_z",
    "e_w_x", "e_w_y", "e_w_z",
    "gamma_d", "gamma_r", "psi_r",
    "lyapunov", "lower_bound", "upper_bound",
    "in_d", "in_attract", "held",
];

impl SimTrace {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn header() -> String {
        COLUMNS.join(",")
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::header())?;
        for r in &self.rows {
            let mut fields: Vec<String> = Vec::with_capacity(COLUMNS.len());
            let mut push = |v: f64| fields.push(format!("{v:.16e}"));
            push(r.t);
            for v in [&r.position, &r.velocity] {
                push(v.x);
                push(v.y);
                push(v.z);
            }
            for c in r.attitude {
                push(c);
            }
            push(r.rate.x);
            push(r.rate.y);
            push(r.rate.z);
            for v in [&r.ref_position, &r.ref_velocity] {
                push(v.x);
                push(v.y);
                push(v.z);
            }
            for c in r.ref_attitude {
                push(c);
            }
            push(r.ref_rate.x);
            push(r.ref_rate.y);
            push(r.ref_rate.z);
            for c in r.desired_attitude {
                push(c);
            }
            for v in [&r.desired_rate, &r.desired_rate_dot] {
                push(v.x);
                push(v.y);
                push(v.z);
            }
            push(r.thrust);
            push(r.thrust_applied);
            for v in [&r.torque, &r.e_p, &r.e_v, &r.e_x, &r.e_omega] {
                push(v.x);
                push(v.y);
                push(v.z);
            }
            push(r.gamma_desired);
            push(r.gamma_reference);
            push(r.psi_reference);
            push(r.lyapunov);
            push(r.lower_bound);
            push(r.upper_bound);
            push(if r.in_exponential { 1.0 } else { 0.0 });
            push(if r.in_attractivity { 1.0 } else { 0.0 });
            push(if r.held_previous { 1.0 } else { 0.0 });
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)?;
        Ok(())
    }

    pub fn read_csv(reader: impl BufRead) -> Result<Self, HarnessError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| HarnessError::ParseError("empty trace file".into()))?
            .map_err(|e| HarnessError::ParseError(e.to_string()))?;
        if header.trim() != Self::header() {
            return Err(HarnessError::ParseError(
                "trace header does not match the expected column set".into(),
            ));
        }
        let mut rows = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line.map_err(|e| HarnessError::ParseError(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        HarnessError::ParseError(format!("row {}: bad number {s:?}", no + 2))
                    })
                })
                .collect::<Result<_, _>>()?;
            if fields.len() != COLUMNS.len() {
                return Err(HarnessError::ParseError(format!(
                    "row {}: expected {} columns, got {}",
                    no + 2,
                    COLUMNS.len(),
                    fields.len()
                )));
            }
            let v3 = |i: usize| Vec3::new(fields[i], fields[i + 1], fields[i + 2]);
            let q4 = |i: usize| [fields[i], fields[i + 1], fields[i + 2], fields[i + 3]];
            rows.push(TraceRow {
                t: fields[0],
                position: v3(1),
                velocity: v3(4),
                attitude: q4(7),
                rate: v3(11),
                ref_position: v3(14),
                ref_velocity: v3(17),
                ref_attitude: q4(20),
                ref_rate: v3(24),
                desired_attitude: q4(27),
                desired_rate: v3(31),
                desired_rate_dot: v3(34),
                thrust: fields[37],
                thrust_applied: fields[38],
                torque: v3(39),
                e_p: v3(42),
                e_v: v3(45),
                e_x: v3(48),
                e_omega: v3(51),
                gamma_desired: fields[54],
                gamma_reference: fields[55],
                psi_reference: fields[56],
                lyapunov: fields[57],
                lower_bound: fields[58],
                upper_bound: fields[59],
                in_exponential: fields[60] != 0.0,
                in_attractivity: fields[61] != 0.0,
                held_previous: fields[62] != 0.0,
            });
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row(t: f64) -> TraceRow {
        TraceRow {
            t,
            position: Vec3::new(1.0, 2.0, 3.0),
            velocity: Vec3::new(0.1, 0.2, 0.3),
            attitude: [1.0, 0.0, 0.0, 0.0],
            rate: Vec3::new(-0.1, 0.0, 0.1),
            ref_position: Vec3::new(0.9, 2.1, 3.0),
            ref_velocity: Vec3::zeros(),
            ref_attitude: [1.0, 0.0, 0.0, 0.0],
            ref_rate: Vec3::zeros(),
            desired_attitude: [1.0, 0.0, 0.0, 0.0],
            desired_rate: Vec3::zeros(),
            desired_rate_dot: Vec3::zeros(),
            thrust: 1.0,
            thrust_applied: 1.0,
            torque: Vec3::new(0.001, -0.002, 0.0),
            e_p: Vec3::new(0.1, -0.1, 0.0),
            e_v: Vec3::new(0.1, 0.2, 0.3),
            e_x: Vec3::zeros(),
            e_omega: Vec3::new(-0.1, 0.0, 0.1),
            gamma_desired: 1.234e-5,
            gamma_reference: 6.789e-5,
            psi_reference: 1e-4,
            lyapunov: 0.5,
            lower_bound: 0.1,
            upper_bound: 2.0,
            in_exponential: true,
            in_attractivity: true,
            held_previous: false,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = SimTrace {
            rows: (0..5).map(|k| sample_row(k as f64 * 1e-3)).collect(),
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let parsed = SimTrace::read_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(parsed.len(), trace.len());
        for (a, b) in trace.rows.iter().zip(parsed.rows.iter()) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.position, b.position);
            assert_eq!(a.gamma_desired, b.gamma_desired);
            assert_eq!(a.in_exponential, b.in_exponential);
        }
        // 17 significant digits round-trip f64 exactly.
        let mut buf2 = Vec::new();
        parsed.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_wrong_header_and_bad_rows() {
        let bad = "t,px\n0.0,1.0\n";
        assert!(SimTrace::read_csv(std::io::Cursor::new(bad)).is_err());
        let mut buf = Vec::new();
        SimTrace { rows: vec![sample_row(0.0)] }
            .write_csv(&mut buf)
            .unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1.0,garbage\n");
        assert!(SimTrace::read_csv(std::io::Cursor::new(text.as_bytes())).is_err());
    }
}
