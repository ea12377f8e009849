//! Self-contained SVG renditions of the three sweep figures, built straight
//! from the CSV contract with no external plotting process.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Which figure to render from a results CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Purity Tr rho^2 vs external flux.
    Fig1,
    /// Optimal weighting zeta* vs external flux.
    Fig2,
    /// Screening current vs external flux, in microamps.
    Fig3,
}

impl Figure {
    pub fn from_name(name: &str) -> Option<Figure> {
        match name {
            "fig1" => Some(Figure::Fig1),
            "fig2" => Some(Figure::Fig2),
            "fig3" => Some(Figure::Fig3),
            _ => None,
        }
    }

    fn required_columns(self) -> &'static [&'static str] {
        match self {
            Figure::Fig1 => &["flux_fraction", "xi", "purity_first", "purity_second"],
            Figure::Fig2 => &["flux_fraction", "xi", "zeta_star"],
            Figure::Fig3 => &["flux_fraction", "xi", "current_first_A", "current_second_A"],
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            Figure::Fig1 => "Tr ρ²",
            Figure::Fig2 => "ζ",
            Figure::Fig3 => "⟨Φ̂⟩/L  (µA)",
        }
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::PlotInput("results file is empty".into()))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::PlotInput(format!(
                "row {}: {} cells, header has {}",
                idx + 2,
                cells.len(),
                columns.len()
            )));
        }
        let mut row = Vec::with_capacity(cells.len());
        for cell in cells {
            row.push(cell.trim().parse::<f64>().unwrap_or(f64::NAN));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

fn column_index(table: &Table, figure: Figure) -> Result<Vec<usize>> {
    let missing: Vec<&str> = figure
        .required_columns()
        .iter()
        .copied()
        .filter(|c| !table.columns.iter().any(|have| have == c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::PlotInput(format!("missing columns: {}", missing.join(", "))));
    }
    Ok(figure
        .required_columns()
        .iter()
        .map(|c| table.columns.iter().position(|have| have == c).unwrap())
        .collect())
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn series_label(order: usize, xi: f64) -> String {
    if xi == 0.0 {
        format!("order {order}, Ω → ∞")
    } else {
        format!("order {order}, Ω = {:.4}ω₀", 1.0 / xi)
    }
}

/// Split the table into one (order, cutoff) series per curve the figure
/// shows. `idx` holds column positions: [flux, xi, first y, (second y)].
fn collect_series(table: &Table, figure: Figure, idx: &[usize]) -> Vec<Series> {
    // group rows by the xi column bit pattern, preserving first appearance
    let mut groups: BTreeMap<u64, (f64, Vec<&Vec<f64>>)> = BTreeMap::new();
    for row in &table.rows {
        let xi = row[idx[1]];
        groups.entry(xi.to_bits()).or_insert((xi, Vec::new())).1.push(row);
    }
    let mut series = Vec::new();
    for (_, (xi, rows)) in groups {
        let orders: &[(usize, usize)] = match figure {
            Figure::Fig2 => &[(2, idx[2])],
            _ => &[(1, idx[2]), (2, idx[3])],
        };
        for &(order, col) in orders {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .map(|row| (row[idx[0]], row[col]))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if !points.is_empty() {
                let label = if figure == Figure::Fig2 {
                    series_label(order, xi).replace("order 2, ", "ζ*, ")
                } else {
                    series_label(order, xi)
                };
                series.push(Series { label, points });
            }
        }
    }
    series
}

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Render a figure from CSV text. Fig3 values are converted to microamps.
pub fn render_svg(csv_text: &str, figure: Figure) -> Result<String> {
    let table = parse_csv(csv_text)?;
    let idx = column_index(&table, figure)?;
    let mut series = collect_series(&table, figure, &idx);
    if figure == Figure::Fig3 {
        for s in &mut series {
            for p in &mut s.points {
                p.1 *= 1e6;
            }
        }
    }
    if series.is_empty() {
        return Err(Error::PlotInput("no finite data points to plot".into()));
    }

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &series {
        for &(x, y) in &s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    let (x_lo, x_hi) = nice_range(x_lo, x_hi);
    let (y_lo, y_hi) = nice_range(y_lo, y_hi);
    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>",
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    );
    // ticks
    for k in 0..=5 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 5.0;
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 5.0;
        let (tx, ty) = (px(fx), py(fy));
        let _ = writeln!(
            svg,
            "<line x1=\"{tx}\" y1=\"{y0}\" x2=\"{tx}\" y2=\"{y1}\" stroke=\"black\"/>\
             <text x=\"{tx}\" y=\"{yl}\" text-anchor=\"middle\">{fx:.2}</text>",
            y0 = HEIGHT - MARGIN_B,
            y1 = HEIGHT - MARGIN_B + 6.0,
            yl = HEIGHT - MARGIN_B + 22.0,
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{x0}\" y1=\"{ty}\" x2=\"{x1}\" y2=\"{ty}\" stroke=\"black\"/>\
             <text x=\"{xl}\" y=\"{yt}\" text-anchor=\"end\">{fy:.3}</text>",
            x0 = MARGIN_L - 6.0,
            x1 = MARGIN_L,
            xl = MARGIN_L - 10.0,
            yt = ty + 4.0,
        );
    }
    // axis labels
    let _ = writeln!(
        svg,
        "<text x=\"{cx}\" y=\"{yb}\" text-anchor=\"middle\">Φx / Φ₀</text>",
        cx = MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        yb = HEIGHT - 16.0,
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {cy})\">{label}</text>",
        cy = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        label = figure.y_label(),
    );

    // curves
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.trim_end(),
        );
    }
    // legend
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 18.0 * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{xt}\" y=\"{yt}\">{label}</text>",
            x0 = MARGIN_L + 12.0,
            x1 = MARGIN_L + 40.0,
            xt = MARGIN_L + 46.0,
            yt = y + 4.0,
            label = s.label,
        );
    }
    if figure == Figure::Fig3 {
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\">current in µA</text>",
            x = WIDTH - MARGIN_R - 8.0,
            y = HEIGHT - MARGIN_B - 10.0,
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
