use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use plotters::prelude::*;

use crate::{io_failure, Failure};

const SIZE: (u32, u32) = (720, 480);

/// `(group key, points)` pairs.
type Groups = Vec<(f64, Vec<(f64, f64)>)>;

/// Named columns of a report CSV.
struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Result<Csv, Failure> {
        let mut rd = csv::Reader::from_path(path)
            .map_err(|e| Failure::Check(format!("missing diagnostics {}: {e}", path.display())))?;
        let header = rd
            .headers()
            .map_err(|e| Failure::Check(format!("{}: {e}", path.display())))?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Failure::Check(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Check(format!("{}: {e}", path.display())))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Failure::Check(format!("{} has no rows", path.display())));
        }
        Ok(Csv { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize, Failure> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Check(format!("column {name} missing")))
    }

    /// `(x, y)` series keyed by the value of `group`, dropping points a
    /// log axis cannot show.
    fn grouped(
        &self,
        group: &str,
        x: &str,
        y: &str,
        log_x: bool,
        log_y: bool,
    ) -> Result<Groups, Failure> {
        let (g, xi, yi) = (self.col(group)?, self.col(x)?, self.col(y)?);
        let mut map: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
        for r in &self.rows {
            let (px, py) = (r[xi], r[yi]);
            if !(px.is_finite() && py.is_finite()) || (log_x && px <= 0.0) || (log_y && py <= 0.0) {
                continue;
            }
            map.entry(r[g].to_bits())
                .or_insert((r[g], Vec::new()))
                .1
                .push((px, py));
        }
        let mut out: Vec<_> = map.into_values().collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }
}

fn bounds(
    series: &[(f64, Vec<(f64, f64)>)],
    log_x: bool,
    log_y: bool,
) -> Option<((f64, f64), (f64, f64))> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    if pts.is_empty() {
        return None;
    }
    let span = |v: Vec<f64>, log: bool| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if log {
            let (lo, hi) = (
                lo.log10().floor(),
                hi.log10().ceil().max(lo.log10().floor() + 1.0),
            );
            (10f64.powf(lo), 10f64.powf(hi))
        } else if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    Some((
        span(pts.iter().map(|p| p.0).collect(), log_x),
        span(pts.iter().map(|p| p.1).collect(), log_y),
    ))
}

struct Figure<'a> {
    title: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    legend: &'a str,
    log_x: bool,
    log_y: bool,
    /// Optional horizontal reference line.
    reference: Option<(f64, &'a str)>,
}

fn render(fig: &Figure, series: &[(f64, Vec<(f64, f64)>)]) -> Result<String, Failure> {
    let ((x0, x1), (mut y0, mut y1)) = bounds(series, fig.log_x, fig.log_y)
        .ok_or_else(|| Failure::Check(format!("{}: nothing to plot", fig.title)))?;
    if let Some((v, _)) = fig.reference {
        y0 = y0.min(v);
        y1 = y1.max(v * 1.05);
    }
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        let err = |e: String| Failure::Check(format!("{}: {e}", fig.title));
        root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
        let mut chart = ChartBuilder::on(&root);
        chart
            .caption(fig.title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70);
        // four axis flavours; plotters types log and linear ranges differently
        macro_rules! draw {
            ($xr:expr, $yr:expr) => {{
                let mut c = chart
                    .build_cartesian_2d($xr, $yr)
                    .map_err(|e| err(e.to_string()))?;
                c.configure_mesh()
                    .x_desc(fig.x_label)
                    .y_desc(fig.y_label)
                    .y_label_formatter(&|v| format!("{v:.1e}"))
                    .draw()
                    .map_err(|e| err(e.to_string()))?;
                for (i, (key, pts)) in series.iter().enumerate() {
                    let color = Palette99::pick(i).to_rgba();
                    c.draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                        .map_err(|e| err(e.to_string()))?
                        .label(format!("{} = {}", fig.legend, key))
                        .legend(move |(x, y)| {
                            PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                        });
                    c.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                        .map_err(|e| err(e.to_string()))?;
                }
                if let Some((v, label)) = fig.reference {
                    c.draw_series(LineSeries::new(
                        vec![(x0, v), (x1, v)],
                        BLACK.stroke_width(1),
                    ))
                    .map_err(|e| err(e.to_string()))?
                    .label(label)
                    .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
                }
                c.configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw()
                    .map_err(|e| err(e.to_string()))?;
            }};
        }
        match (fig.log_x, fig.log_y) {
            (true, true) => draw!((x0..x1).log_scale(), (y0..y1).log_scale()),
            (true, false) => draw!((x0..x1).log_scale(), y0..y1),
            (false, true) => draw!(x0..x1, (y0..y1).log_scale()),
            (false, false) => draw!(x0..x1, y0..y1),
        }
        root.present().map_err(|e| err(e.to_string()))?;
    }
    Ok(svg)
}

fn c_a(report: &Path) -> Option<f64> {
    let text = fs::read_to_string(report.join("summary.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("c_a")?.as_f64()
}

pub fn run(report: &Path, out: &Path) -> Result<(), Failure> {
    if !report.is_dir() {
        return Err(Failure::Usage(format!(
            "{} is not a report directory",
            report.display()
        )));
    }
    let apriori = Csv::read(&report.join("apriori.csv"))?;
    let radiation = Csv::read(&report.join("radiation.csv"))?;
    let distances = Csv::read(&report.join("distances.csv"))?;

    let bound = c_a(report).filter(|c| *c > 0.0).map(|c| 1.0 / c);
    let apriori_svg = render(
        &Figure {
            title: "a priori ratio",
            x_label: "s",
            y_label: "modular / (k |f|_1)",
            legend: "k",
            log_x: true,
            log_y: false,
            reference: bound.map(|b| (b, "1/c_A")),
        },
        &apriori.grouped("k", "s", "ratio", true, false)?,
    )?;
    // single series: tag every row with the same key
    let mut rad = radiation;
    rad.header.push("series".into());
    rad.rows.iter_mut().for_each(|r| r.push(0.0));
    let radiation_svg = render(
        &Figure {
            title: "radiation profile",
            x_label: "level l",
            y_label: "flux on {l < |u| < l + 1}",
            legend: "snapshot",
            log_x: false,
            log_y: true,
            reference: None,
        },
        &rad.grouped("series", "l", "flux", false, true)?,
    )?;
    let convergence_svg = render(
        &Figure {
            title: "successive truncated distances",
            x_label: "s",
            y_label: "|T_k(u_s) - T_k(u_s')|",
            legend: "k",
            log_x: true,
            log_y: true,
            reference: None,
        },
        &distances.grouped("k", "s", "distance", true, true)?,
    )?;
    fs::create_dir_all(out).map_err(io_failure)?;
    for (name, svg) in [
        ("apriori.svg", apriori_svg),
        ("radiation.svg", radiation_svg),
        ("convergence.svg", convergence_svg),
    ] {
        fs::write(out.join(name), svg).map_err(io_failure)?;
        println!("{}", out.join(name).display());
    }
    Ok(())
}
