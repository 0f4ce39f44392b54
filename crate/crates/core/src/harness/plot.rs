//! Self-contained SVG plot emission for trace files: the study's panel set
//! (forces, torques, position, velocity, attitude distances, Lyapunov value
//! in log10 with its quadratic bounds, and the 3-D configuration polyline).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{HarnessError, SimTrace};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;

const SERIES_COLORS: &[&str] = &[
    "#1f6fb2", "#d0543c", "#3f9e4d", "#8c5cb4", "#c7a03c", "#4db2b2", "#666666",
];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

fn finite(points: &[(f64, f64)]) -> impl Iterator<Item = &(f64, f64)> {
    points.iter().filter(|(x, y)| x.is_finite() && y.is_finite())
}

/// Renders one panel of line series with axes, ticks and a small legend.
fn render_panel(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for (x, y) in finite(&s.points) {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-300 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        let pad = y_max.abs().max(1.0) * 0.1;
        y_min -= pad;
        y_max += pad;
    } else {
        let pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        title
    );

    // Frame and ticks.
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>"
    );
    for i in 0..=5 {
        let fx = i as f64 / 5.0;
        let x = x_min + fx * (x_max - x_min);
        let px = sx(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#bbb\" stroke-dasharray=\"3,4\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{:.3}</text>",
            MARGIN_T + plot_h + 18.0,
            x
        );
        let y = y_min + fx * (y_max - y_min);
        let py = sy(y);
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN_L}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#bbb\" stroke-dasharray=\"3,4\"/>",
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>",
            MARGIN_L - 6.0,
            py + 4.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 10.0,
        x_label
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        y_label
    );

    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (x, y) in &s.points {
            if !x.is_finite() || !y.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(path, "{cmd}{:.2},{:.2} ", sx(*x), sy(*y));
            pen_down = true;
        }
        let _ = writeln!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.3\"/>"
        );
        let lx = MARGIN_L + 10.0 + 110.0 * (i as f64);
        let ly = MARGIN_T + 14.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{ly}\">{}</text>", lx + 22.0, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn write_panel(
    dir: &Path,
    name: &str,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, render_panel(title, x_label, y_label, series))?;
    Ok(path)
}

fn log10_floor(v: f64) -> f64 {
    if v > 0.0 {
        v.log10()
    } else {
        f64::NAN
    }
}

/// Emits the seven panels as standalone SVG files and returns their paths.
/// Fails without writing anything when the trace is empty.
pub fn emit_plots(trace: &SimTrace, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    std::fs::create_dir_all(dir)?;
    // Cap each polyline at ~2000 points; finer sampling is invisible.
    let stride = (trace.rows.len() / 2000).max(1);
    let rows: Vec<&super::TraceRow> = trace.rows.iter().step_by(stride).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let pair = |ys: Vec<f64>| -> Vec<(f64, f64)> { t.iter().copied().zip(ys).collect() };

    let mut files = vec![write_panel(
        dir,
        "forces.svg",
        "Thrust",
        "t [s]",
        "f [N]",
        &[
            Series { label: "f raw", points: pair(rows.iter().map(|r| r.thrust).collect()) },
            Series {
                label: "f applied",
                points: pair(rows.iter().map(|r| r.thrust_applied).collect()),
            },
        ],
    )?];
    files.push(write_panel(
        dir,
        "torques.svg",
        "Torque",
        "t [s]",
        "tau [N m]",
        &[
            Series { label: "tau_x", points: pair(rows.iter().map(|r| r.torque.x).collect()) },
            Series { label: "tau_y", points: pair(rows.iter().map(|r| r.torque.y).collect()) },
            Series { label: "tau_z", points: pair(rows.iter().map(|r| r.torque.z).collect()) },
        ],
    )?);
    files.push(write_panel(
        dir,
        "position.svg",
        "Position and reference",
        "t [s]",
        "p [m]",
        &[
            Series { label: "p_x", points: pair(rows.iter().map(|r| r.position.x).collect()) },
            Series { label: "p_y", points: pair(rows.iter().map(|r| r.position.y).collect()) },
            Series { label: "p_z", points: pair(rows.iter().map(|r| r.position.z).collect()) },
            Series { label: "pr_x", points: pair(rows.iter().map(|r| r.ref_position.x).collect()) },
            Series { label: "pr_y", points: pair(rows.iter().map(|r| r.ref_position.y).collect()) },
            Series { label: "pr_z", points: pair(rows.iter().map(|r| r.ref_position.z).collect()) },
        ],
    )?);
    files.push(write_panel(
        dir,
        "velocity.svg",
        "Velocity and reference",
        "t [s]",
        "v [m/s]",
        &[
            Series { label: "v_x", points: pair(rows.iter().map(|r| r.velocity.x).collect()) },
            Series { label: "v_y", points: pair(rows.iter().map(|r| r.velocity.y).collect()) },
            Series { label: "v_z", points: pair(rows.iter().map(|r| r.velocity.z).collect()) },
            Series { label: "vr_x", points: pair(rows.iter().map(|r| r.ref_velocity.x).collect()) },
            Series { label: "vr_y", points: pair(rows.iter().map(|r| r.ref_velocity.y).collect()) },
            Series { label: "vr_z", points: pair(rows.iter().map(|r| r.ref_velocity.z).collect()) },
        ],
    )?);
    files.push(write_panel(
        dir,
        "attitude_distance.svg",
        "Attitude distances",
        "t [s]",
        "distance",
        &[
            Series {
                label: "Gamma(X_d,X)",
                points: pair(rows.iter().map(|r| r.gamma_desired).collect()),
            },
            Series {
                label: "Gamma(X_r,X)",
                points: pair(rows.iter().map(|r| r.gamma_reference).collect()),
            },
            Series {
                label: "Psi(R_r,R)",
                points: pair(rows.iter().map(|r| r.psi_reference).collect()),
            },
        ],
    )?);
    files.push(write_panel(
        dir,
        "lyapunov.svg",
        "Lyapunov value with quadratic bounds (log10)",
        "t [s]",
        "log10 V",
        &[
            Series {
                label: "V",
                points: pair(rows.iter().map(|r| log10_floor(r.lyapunov)).collect()),
            },
            Series {
                label: "c1|z|^2",
                points: pair(rows.iter().map(|r| log10_floor(r.lower_bound)).collect()),
            },
            Series {
                label: "c2|z|^2",
                points: pair(rows.iter().map(|r| log10_floor(r.upper_bound)).collect()),
            },
        ],
    )?);
    // Isometric projection of the 3-D configuration path.
    let iso = |x: f64, y: f64, z: f64| -> (f64, f64) {
        let c30 = 3f64.sqrt() / 2.0;
        (c30 * (x - y), 0.5 * (x + y) + z)
    };
    files.push(write_panel(
        dir,
        "configuration_3d.svg",
        "Configuration path (isometric projection)",
        "iso x",
        "iso y",
        &[
            Series {
                label: "p(t)",
                points: rows
                    .iter()
                    .map(|r| iso(r.position.x, r.position.y, r.position.z))
                    .collect(),
            },
            Series {
                label: "p_r(t)",
                points: rows
                    .iter()
                    .map(|r| iso(r.ref_position.x, r.ref_position.y, r.ref_position.z))
                    .collect(),
            },
        ],
    )?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_an_error_and_no_files_appear() {
        let dir = std::env::temp_dir().join("su2track_plot_empty");
        let _ = std::fs::remove_dir_all(&dir);
        let err = emit_plots(&SimTrace::default(), &dir);
        assert!(matches!(err, Err(HarnessError::EmptyTrace)));
        assert!(!dir.exists() || std::fs::read_dir(&dir).unwrap().next().is_none());
    }
}
