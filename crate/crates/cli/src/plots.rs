//! SVG plots from a results directory. Plots depend only on the files in
//! that directory; a missing input skips its plot with a warning. Each SVG
//! has a sidecar JSON with the plotted numbers.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;
use serde_json::{json, Value};
use splab_core::{radial, FieldSpace, RadialField};

use crate::output::{Manifest, Writer};
use crate::run::{PHI_TEXT, SWEEP_CSV, SWEEP_JSON, SYMMETRY_JSON};

const SIZE: (u32, u32) = (640, 480);

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    color: RGBColor,
}

fn log_range(values: impl Iterator<Item = f64>) -> Option<std::ops::Range<f64>> {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo.is_finite() && hi > 0.0).then(|| lo / 2.0..hi * 2.0)
}

fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xr = log_range(all().map(|p| p.0)).ok_or_else(|| anyhow!("no positive abscissae"))?;
    let yr = log_range(all().map(|p| p.1)).ok_or_else(|| anyhow!("no positive values"))?;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(xr.log_scale(), yr.log_scale())?;
        chart.configure_mesh().x_desc(x_label).y_desc(y_label).x_label_formatter(&|v| format!("{v:.0e}")).y_label_formatter(&|v| format!("{v:.0e}")).draw()?;
        for s in series {
            let color = s.color;
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            chart.draw_series(s.points.iter().map(|p| Circle::new(*p, 3, color.filled())))?;
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
        root.present()?;
    }
    Ok(svg)
}

fn linear_svg(title: &str, x_label: &str, series: &[Series]) -> Result<String> {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let x_max = all().map(|p| p.0).fold(0.0, f64::max);
    let (y_lo, y_hi) = all().fold((0.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !(x_max > 0.0 && y_hi > y_lo) {
        return Err(anyhow!("empty profile"));
    }
    let pad = 0.05 * (y_hi - y_lo);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..x_max, y_lo - pad..y_hi + pad)?;
        chart.configure_mesh().x_desc(x_label).draw()?;
        for s in series {
            let color = s.color;
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
        root.present()?;
    }
    Ok(svg)
}

fn bars_svg(title: &str, bars: &[(&str, f64)]) -> Result<String> {
    let hi = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    if !(hi > 0.0) {
        return Err(anyhow!("no positive bars"));
    }
    let labels: Vec<String> = bars.iter().map(|b| b.0.to_string()).collect();
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d((0..bars.len()).into_segmented(), 0.0..hi * 1.1)?;
        chart
            .configure_mesh()
            .disable_x_mesh()
            .x_label_formatter(&|v| match v {
                SegmentValue::CenterOf(i) => labels.get(*i).cloned().unwrap_or_default(),
                _ => String::new(),
            })
            .y_desc("symmetry defect")
            .draw()?;
        chart.draw_series(
            Histogram::vertical(&chart).style(BLUE.filled()).margin(30).data(bars.iter().enumerate().map(|(i, b)| (i, b.1))),
        )?;
        root.present()?;
    }
    Ok(svg)
}

fn emit(w: &mut Writer, stem: &str, svg: Result<String>, sidecar: Value, made: &mut Vec<String>) -> Result<()> {
    match svg {
        Ok(svg) => {
            w.bytes(&format!("{stem}.svg"), svg.as_bytes())?;
            w.json(&format!("{stem}.json"), &sidecar)?;
            made.push(format!("{stem}.svg"));
        }
        Err(e) => w.warn(format!("{stem}: {e}")),
    }
    Ok(())
}

struct SweepTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl SweepTable {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let columns = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { columns, rows })
    }

    fn column(&self, name: &str) -> Option<Vec<String>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.get(i).cloned().unwrap_or_default()).collect())
    }

    fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.iter().map(|v| v.parse().ok()).collect()
    }
}

fn sweep_plots(dir: &Path, w: &mut Writer, made: &mut Vec<String>) -> Result<()> {
    let table = SweepTable::read(&dir.join(SWEEP_CSV))?;
    let meta: Value = match fs::read(dir.join(SWEEP_JSON)) {
        Ok(b) => serde_json::from_slice(&b)?,
        Err(_) => {
            w.warn(format!("{SWEEP_JSON} missing; convergence plots skipped"));
            return Ok(());
        }
    };
    let Some(c) = table.numbers("c") else {
        w.warn("sweep.csv has no c column; convergence plots skipped");
        return Ok(());
    };
    let converged: Vec<bool> =
        table.column("converged").map(|v| v.iter().map(|s| s == "true").collect()).unwrap_or(vec![true; c.len()]);
    let reference = |key: &str| meta.get(key).and_then(Value::as_f64);
    let plots: [(&str, &str, &str, Option<f64>, &str); 4] = [
        ("convergence_t_star", "t_star_phi", "|t*_c(φ) − t*₀(φ)|", reference("t_star0"), "t_star0"),
        ("convergence_omega", "omega", "|ω_c − ω₀|", reference("omega0_discrete"), "omega0_discrete"),
        ("convergence_energy", "K", "|K_c − K₀|", reference("k0"), "k0"),
        ("convergence_h1", "h1_dist", "‖u_c − φ‖_H¹", Some(0.0), "none"),
    ];
    for (stem, col, label, refv, ref_key) in plots {
        let (Some(values), Some(refv)) = (table.numbers(col), refv) else {
            w.warn(format!("{stem}: column `{col}` or its reference is missing"));
            continue;
        };
        let pts: Vec<(f64, f64)> = c
            .iter()
            .zip(&values)
            .zip(&converged)
            .filter(|(_, ok)| **ok)
            .map(|((c, v), _)| (*c, (v - refv).abs()))
            .collect();
        let plotted: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        let series = [Series { label: label.to_string(), points: plotted.clone(), color: BLUE }];
        let sidecar = json!({
            "x": "c",
            "y": label,
            "reference": { "key": ref_key, "value": refv },
            "points": pts,
            "omitted_nonpositive": pts.len() - plotted.len(),
        });
        emit(w, stem, loglog_svg(label, "c", label, &series), sidecar, made)?;
    }
    Ok(())
}

fn read_profile(path: &Path) -> Result<RadialField> {
    Ok(radial::read_text(std::io::BufReader::new(fs::File::open(path)?))?)
}

fn profile_plots(dir: &Path, w: &mut Writer, made: &mut Vec<String>) -> Result<()> {
    let mut profiles: Vec<(f64, std::path::PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let c: f64 = name.strip_prefix("profile_c")?.strip_suffix(".txt")?.parse().ok()?;
            Some((c, e.path()))
        })
        .collect();
    if profiles.is_empty() {
        return Ok(());
    }
    let phi = match read_profile(&dir.join(PHI_TEXT)) {
        Ok(p) => p,
        Err(e) => {
            w.warn(format!("profile overlays skipped, {PHI_TEXT}: {e}"));
            return Ok(());
        }
    };
    profiles.sort_by(|a, b| b.0.total_cmp(&a.0));
    let nodes = phi.grid().nodes();
    for (c, path) in profiles {
        let stem = format!("profile_overlay_c{c:e}");
        let u = match read_profile(&path) {
            Ok(u) => u,
            Err(e) => {
                w.warn(format!("{stem}: {e}"));
                continue;
            }
        };
        let gap = match u.max_abs_diff(&phi) {
            Ok(g) => g,
            Err(e) => {
                w.warn(format!("{stem}: {e}"));
                continue;
            }
        };
        let series = [
            Series { label: "φ".into(), points: nodes.iter().copied().zip(phi.values().iter().copied()).collect(), color: BLACK },
            Series { label: format!("u_c, c = {c:e}"), points: nodes.iter().copied().zip(u.values().iter().copied()).collect(), color: RED },
        ];
        let sidecar = json!({
            "c": c,
            "max_abs_gap": gap,
            "relative_gap": gap / phi.sup_norm(),
            "h1_dist": u.h1_distance(&phi),
        });
        emit(w, &stem, linear_svg(&format!("u_c and φ, c = {c:e}"), "r", &series), sidecar, made)?;
    }
    Ok(())
}

fn symmetry_plot(dir: &Path, w: &mut Writer, made: &mut Vec<String>) -> Result<()> {
    let meta: Value = serde_json::from_slice(&fs::read(dir.join(SYMMETRY_JSON))?)?;
    let (Some(initial), Some(last)) =
        (meta.get("initial_defect").and_then(Value::as_f64), meta.get("defect").and_then(Value::as_f64))
    else {
        w.warn(format!("{SYMMETRY_JSON} has no defect values; defect bars skipped"));
        return Ok(());
    };
    let bars = [("initial", initial), ("minimizer", last)];
    emit(w, "symmetry_defect", bars_svg("Symmetry defect", &bars), json!({ "initial": initial, "minimizer": last }), made)
}

/// Writes the plots for every result found in `results` into `out`.
/// Returns the manifest of `out`; an empty results directory gives no
/// plots and a warning.
pub fn emit_plots(results: &Path, out: &Path) -> Result<Manifest> {
    let mut w = Writer::new(out)?;
    let mut made = Vec::new();
    if results.join(SWEEP_CSV).exists() {
        sweep_plots(results, &mut w, &mut made)?;
    }
    if results.is_dir() {
        profile_plots(results, &mut w, &mut made)?;
    }
    if results.join(SYMMETRY_JSON).exists() {
        symmetry_plot(results, &mut w, &mut made)?;
    }
    if made.is_empty() {
        w.warn(format!("no plottable results in {}", results.display()));
    }
    w.finish("plots", None, true, None)
}
