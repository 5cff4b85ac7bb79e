//! Deterministic SVG map renderings.
//!
//! Every document has one cell per unit laid out row by row (hexagonal maps
//! included) and a view box of `cols * cell + 2 * margin` by
//! `rows * cell + 2 * margin` pixels. Numbers are printed with three
//! decimals, so equal inputs give equal bytes.

use std::fmt::Write as _;

use crate::dataset::{DataMatrix, QualitativeColumn};
use crate::error::{Error, Result};
use crate::quantize::{Assignment, CodeBook};
use crate::topology::MapTopology;

pub const RHO_MIN: f64 = 0.2;
pub const RHO_MAX: f64 = 0.95;

/// Compass directions as `(d_row, d_col)`: N, NE, E, SE, S, SW, W, NW.
pub const DIRECTIONS: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

const DEFAULT_PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
    "#1b9e77", "#7570b3",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub cell_size: u32,
    pub margin: u32,
    pub stroke_width: f64,
    pub palette: Vec<String>,
    /// Scale curves and planes per cell instead of over the whole map.
    pub per_cell_scaling: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            cell_size: 64,
            margin: 24,
            stroke_width: 1.0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            per_cell_scaling: false,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size < 16 {
            return Err(Error::InvalidParameter(format!(
                "cell size {} is below the 16 px minimum",
                self.cell_size
            )));
        }
        if !(self.stroke_width.is_finite() && self.stroke_width > 0.0) {
            return Err(Error::InvalidParameter("stroke width must be positive".into()));
        }
        if self.palette.is_empty() {
            return Err(Error::InvalidParameter("palette is empty".into()));
        }
        for c in &self.palette {
            let hex = c.strip_prefix('#').unwrap_or("");
            if !(hex.len() == 6 || hex.len() == 3) || !hex.chars().all(|ch| ch.is_ascii_hexdigit()) {
                return Err(Error::InvalidParameter(format!("`{c}` is not a hex color")));
            }
        }
        Ok(())
    }

    fn color(&self, index: usize, needed: usize) -> Result<&str> {
        if needed > self.palette.len() {
            return Err(Error::InvalidParameter(format!(
                "palette has {} colors, {needed} needed",
                self.palette.len()
            )));
        }
        Ok(&self.palette[index])
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Canvas<'a> {
    topo: &'a MapTopology,
    opts: &'a RenderOptions,
    out: String,
}

impl<'a> Canvas<'a> {
    fn new(topo: &'a MapTopology, opts: &'a RenderOptions, title: &str) -> Result<Self> {
        opts.validate()?;
        let (w, h) = Self::size(topo, opts);
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>");
        Ok(Self { topo, opts, out })
    }

    fn size(topo: &MapTopology, opts: &RenderOptions) -> (u32, u32) {
        let cell = opts.cell_size;
        (
            topo.cols() as u32 * cell + 2 * opts.margin,
            topo.rows() as u32 * cell + 2 * opts.margin,
        )
    }

    fn cell(&self) -> f64 {
        self.opts.cell_size as f64
    }

    /// Top-left corner of a unit's cell.
    fn origin(&self, unit: usize) -> (f64, f64) {
        let (r, c) = self.topo.unit_coords(unit).expect("unit in range");
        let m = self.opts.margin as f64;
        (m + c as f64 * self.cell(), m + r as f64 * self.cell())
    }

    fn center(&self, unit: usize) -> (f64, f64) {
        let (x, y) = self.origin(unit);
        (x + self.cell() / 2.0, y + self.cell() / 2.0)
    }

    fn frame(&mut self, unit: usize, fill: Option<&str>) {
        let (x, y) = self.origin(unit);
        let c = num(self.cell());
        let fill = match fill {
            Some(color) => format!("fill=\"{color}\" fill-opacity=\"0.35\""),
            None => "fill=\"none\"".to_string(),
        };
        let _ = writeln!(
            self.out,
            "<rect x=\"{}\" y=\"{}\" width=\"{c}\" height=\"{c}\" {fill} stroke=\"#808080\" stroke-width=\"{}\"/>",
            num(x),
            num(y),
            num(self.opts.stroke_width)
        );
    }

    fn frames(&mut self) {
        for u in 0..self.topo.unit_count() {
            self.frame(u, None);
        }
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        let _ = writeln!(
            self.out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            pts.join(" "),
            num(self.opts.stroke_width)
        );
    }

    fn bar(&mut self, x: f64, bottom: f64, width: f64, height: f64, color: &str) {
        let _ = writeln!(
            self.out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>",
            num(x),
            num(bottom - height),
            num(width),
            num(height)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn pad(cell: f64) -> f64 {
    (cell * 0.08).max(2.0)
}

fn range_of<'v>(values: impl Iterator<Item = &'v f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn scaled(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Draws one profile (curve, or bars when there is a single component) in a cell.
fn draw_profile(canvas: &mut Canvas, unit: usize, values: &[Option<f64>], range: (f64, f64), color: &str, slot: (usize, usize)) {
    let (x0, y0) = canvas.origin(unit);
    let p = pad(canvas.cell());
    let inner = canvas.cell() - 2.0 * p;
    if values.len() >= 2 {
        let step = inner / (values.len() - 1) as f64;
        let points: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| (x0 + p + j as f64 * step, y0 + p + inner * (1.0 - scaled(v, range)))))
            .collect();
        canvas.polyline(&points, color);
    } else if let Some(v) = values.first().copied().flatten() {
        // single component: side-by-side bars, one slot per drawn item
        let (k, of) = slot;
        let width = inner / of.max(1) as f64;
        let height = inner * scaled(v, range);
        canvas.bar(x0 + p + k as f64 * width, y0 + p + inner, width, height, color);
    }
}

/// Observations drawn in the cell of their class, as curves over the columns.
pub fn render_cell_curves(
    topo: &MapTopology,
    data: &DataMatrix,
    assignment: &Assignment,
    opts: &RenderOptions,
) -> Result<String> {
    if assignment.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            found: assignment.len(),
        });
    }
    if assignment.unit_count() != topo.unit_count() {
        return Err(Error::DimensionMismatch {
            expected: topo.unit_count(),
            found: assignment.unit_count(),
        });
    }
    let mut canvas = Canvas::new(topo, opts, "Observations by class")?;
    canvas.frames();
    let present = |i: usize| -> Vec<Option<f64>> {
        (0..data.n_cols())
            .map(|j| (!data.is_missing(i, j)).then(|| data.values()[[i, j]]))
            .collect()
    };
    let global = range_of(data.values().iter().filter(|v| v.is_finite()));
    let color = opts.palette[0].clone();
    for u in 0..topo.unit_count() {
        let members = assignment.members(u);
        let range = if opts.per_cell_scaling {
            let vals: Vec<f64> = members.iter().flat_map(|&i| present(i).into_iter().flatten()).collect();
            range_of(vals.iter())
        } else {
            global
        };
        for (k, &i) in members.iter().enumerate() {
            draw_profile(&mut canvas, u, &present(i), range, &color, (k, members.len()));
        }
    }
    Ok(canvas.finish())
}

/// One curve per cell: the unit's code vector.
pub fn render_codebook(topo: &MapTopology, book: &CodeBook, opts: &RenderOptions) -> Result<String> {
    check_book(topo, book)?;
    let mut canvas = Canvas::new(topo, opts, "Code vectors")?;
    canvas.frames();
    let global = range_of(book.codes().iter());
    let color = opts.palette[0].clone();
    for u in 0..topo.unit_count() {
        let values: Vec<Option<f64>> = book.code(u).iter().map(|&v| Some(v)).collect();
        let range = if opts.per_cell_scaling { range_of(book.code(u).iter()) } else { global };
        draw_profile(&mut canvas, u, &values, range, &color, (0, 1));
    }
    Ok(canvas.finish())
}

fn check_book(topo: &MapTopology, book: &CodeBook) -> Result<()> {
    if book.unit_count() != topo.unit_count() {
        return Err(Error::DimensionMismatch {
            expected: topo.unit_count(),
            found: book.unit_count(),
        });
    }
    Ok(())
}

/// Vertex radius, as a fraction of half a cell, for every unit and compass
/// direction; `None` where the lattice has no neighbor. Radii fall linearly
/// from [`RHO_MAX`] at the smallest neighbor distance on the map to
/// [`RHO_MIN`] at the largest; a map whose distances are all equal gets the
/// midpoint everywhere.
pub fn octagon_radii(topo: &MapTopology, book: &CodeBook) -> Result<Vec<[Option<f64>; 8]>> {
    if !topo.is_square_2d() {
        return Err(Error::InvalidTopology(format!(
            "distance octagons need a square two-dimensional lattice, not {}",
            topo.kind()
        )));
    }
    check_book(topo, book)?;
    let dist = |a: usize, b: usize| -> f64 {
        book.code(a)
            .iter()
            .zip(book.code(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let raw: Vec<[Option<f64>; 8]> = (0..topo.unit_count())
        .map(|u| {
            let mut d = [None; 8];
            for (k, &(dr, dc)) in DIRECTIONS.iter().enumerate() {
                d[k] = topo.step(u, dr, dc).map(|v| dist(u, v));
            }
            d
        })
        .collect();
    let (lo, hi) = range_of(raw.iter().flat_map(|d| d.iter().flatten()));
    Ok(raw
        .into_iter()
        .map(|d| {
            d.map(|v| {
                v.map(|v| {
                    if hi > lo {
                        RHO_MAX - (RHO_MAX - RHO_MIN) * (v - lo) / (hi - lo)
                    } else {
                        (RHO_MIN + RHO_MAX) / 2.0
                    }
                })
            })
        })
        .collect())
}

/// One octagon per cell; a vertex close to the border means a close neighbor.
pub fn render_distance_octagons(topo: &MapTopology, book: &CodeBook, opts: &RenderOptions) -> Result<String> {
    let radii = octagon_radii(topo, book)?;
    let mut canvas = Canvas::new(topo, opts, "Distances between neighboring code vectors")?;
    canvas.frames();
    let half = canvas.cell() / 2.0;
    let color = opts.palette[0].clone();
    for (u, rho) in radii.iter().enumerate() {
        let (cx, cy) = canvas.center(u);
        let pts: Vec<String> = DIRECTIONS
            .iter()
            .zip(rho)
            .filter_map(|(&(dr, dc), r)| {
                r.map(|r| format!("{},{}", num(cx + r * half * dc as f64), num(cy + r * half * dr as f64)))
            })
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(
            canvas.out,
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.6\" stroke=\"#000000\" stroke-width=\"{}\"/>",
            pts.join(" "),
            num(opts.stroke_width)
        );
    }
    Ok(canvas.finish())
}

/// A pie sector: modality index, start angle and sweep in degrees.
/// Angles run clockwise from twelve o'clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub modality: usize,
    pub start_deg: f64,
    pub sweep_deg: f64,
}

/// Sectors proportional to `counts`, skipping zero counts. Empty when every
/// count is zero.
pub fn pie_sectors(counts: &[usize]) -> Vec<Sector> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    let mut start = 0.0;
    let mut out = Vec::new();
    for (m, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let sweep = 360.0 * c as f64 / total as f64;
        out.push(Sector {
            modality: m,
            start_deg: start,
            sweep_deg: sweep,
        });
        start += sweep;
    }
    out
}

fn polar(cx: f64, cy: f64, r: f64, deg: f64) -> (f64, f64) {
    let a = deg.to_radians();
    (cx + r * a.sin(), cy - r * a.cos())
}

/// Per cell, a pie of the modalities held by the cell's members, with a
/// legend along the bottom margin.
pub fn render_pie_map(
    topo: &MapTopology,
    assignment: &Assignment,
    qual: &QualitativeColumn,
    opts: &RenderOptions,
) -> Result<String> {
    if assignment.len() != qual.len() {
        return Err(Error::DimensionMismatch {
            expected: assignment.len(),
            found: qual.len(),
        });
    }
    let levels = qual.level_count();
    opts.color(0, levels)?;
    let mut canvas = Canvas::new(topo, opts, &format!("Modalities of {} by class", qual.name()))?;
    canvas.frames();
    let mut counts = vec![vec![0usize; levels]; topo.unit_count()];
    for (&u, code) in assignment.class_of().iter().zip(qual.codes()) {
        if let Some(c) = code {
            counts[u][*c] += 1;
        }
    }
    let r = canvas.cell() / 2.0 - pad(canvas.cell());
    for (u, cell_counts) in counts.iter().enumerate() {
        let (cx, cy) = canvas.center(u);
        let sectors = pie_sectors(cell_counts);
        if let [only] = sectors.as_slice() {
            let _ = writeln!(
                canvas.out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>",
                num(cx),
                num(cy),
                num(r),
                opts.palette[only.modality]
            );
            continue;
        }
        for s in sectors {
            let (x0, y0) = polar(cx, cy, r, s.start_deg);
            let (x1, y1) = polar(cx, cy, r, s.start_deg + s.sweep_deg);
            let large = if s.sweep_deg > 180.0 { 1 } else { 0 };
            let _ = writeln!(
                canvas.out,
                "<path d=\"M {} {} L {} {} A {} {} 0 {large} 1 {} {} Z\" fill=\"{}\"/>",
                num(cx),
                num(cy),
                num(x0),
                num(y0),
                num(r),
                num(r),
                num(x1),
                num(y1),
                opts.palette[s.modality]
            );
        }
    }
    // legend: swatch and name per modality along the bottom margin
    let m = opts.margin as f64;
    let y = m + topo.rows() as f64 * canvas.cell() + m / 2.0;
    let swatch = (m / 3.0).max(4.0);
    let step = (topo.cols() as f64 * canvas.cell()) / levels as f64;
    canvas.out.push_str("<g font-family=\"sans-serif\" font-size=\"10\">\n");
    for (k, name) in qual.levels().iter().enumerate() {
        let x = m + k as f64 * step;
        let _ = writeln!(
            canvas.out,
            "<rect x=\"{}\" y=\"{}\" width=\"{s}\" height=\"{s}\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>",
            num(x),
            num(y - swatch / 2.0),
            opts.palette[k],
            num(x + swatch + 2.0),
            num(y + swatch / 2.0),
            escape(name),
            s = num(swatch),
        );
    }
    canvas.out.push_str("</g>\n");
    Ok(canvas.finish())
}

/// What a component plane displays.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneSource {
    /// One code component.
    Component(usize),
    /// Any per-unit statistic.
    Values(Vec<f64>),
}

/// Per cell, a bar proportional to the selected value, optionally over a
/// background colored by super-class.
pub fn render_component_plane(
    topo: &MapTopology,
    book: &CodeBook,
    source: &PlaneSource,
    superclasses: Option<&[usize]>,
    opts: &RenderOptions,
) -> Result<String> {
    check_book(topo, book)?;
    let n = topo.unit_count();
    let (values, title) = match source {
        PlaneSource::Component(k) => {
            if *k >= book.dim() {
                return Err(Error::InvalidParameter(format!(
                    "component {k} out of range (code dimension {})",
                    book.dim()
                )));
            }
            (book.codes().column(*k).to_vec(), format!("Component {k}"))
        }
        PlaneSource::Values(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            (v.clone(), "Per-unit values".to_string())
        }
    };
    if let Some(labels) = superclasses {
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        let needed = labels.iter().max().map_or(0, |m| m + 1);
        opts.color(0, needed)?;
    }
    let mut canvas = Canvas::new(topo, opts, &title)?;
    for u in 0..n {
        let fill = superclasses.map(|l| opts.palette[l[u]].clone());
        canvas.frame(u, fill.as_deref());
    }
    let range = range_of(values.iter());
    let p = pad(canvas.cell());
    let inner = canvas.cell() - 2.0 * p;
    for (u, &v) in values.iter().enumerate() {
        let (x0, y0) = canvas.origin(u);
        let height = inner * scaled(v, range);
        canvas.bar(x0 + canvas.cell() * 0.3, y0 + p + inner, canvas.cell() * 0.4, height, "#222222");
    }
    Ok(canvas.finish())
}

/// Labels printed in the cell of their unit, with an optional per-unit
/// annotation line. Cells with more labels than fit show an ellipsis and
/// carry the full list in their title.
pub fn render_label_map(
    topo: &MapTopology,
    placements: &[(String, usize)],
    annotations: Option<&[String]>,
    superclasses: Option<&[usize]>,
    opts: &RenderOptions,
) -> Result<String> {
    let n = topo.unit_count();
    if let Some(&(_, u)) = placements.iter().find(|(_, u)| *u >= n) {
        return Err(Error::UnitOutOfRange { index: u, len: n });
    }
    for extra in [annotations.map(|a| a.len()), superclasses.map(|s| s.len())].into_iter().flatten() {
        if extra != n {
            return Err(Error::DimensionMismatch { expected: n, found: extra });
        }
    }
    if let Some(labels) = superclasses {
        opts.color(0, labels.iter().max().map_or(0, |m| m + 1))?;
    }
    let mut canvas = Canvas::new(topo, opts, "Labels by class")?;
    let mut per_unit: Vec<Vec<&str>> = vec![Vec::new(); n];
    for (label, u) in placements {
        per_unit[*u].push(label);
    }
    let font = (canvas.cell() / 6.0).clamp(6.0, 14.0);
    let line = font * 1.2;
    let p = pad(canvas.cell());
    let capacity = (((canvas.cell() - 2.0 * p) / line).floor() as usize).max(1);
    for (u, labels) in per_unit.iter().enumerate() {
        let fill = superclasses.map(|l| opts.palette[l[u]].clone());
        canvas.frame(u, fill.as_deref());
        let annotation = annotations.map(|a| a[u].as_str()).filter(|a| !a.is_empty());
        let room = capacity - usize::from(annotation.is_some() && capacity > 1);
        let mut lines: Vec<String> = if labels.len() > room {
            let mut shown: Vec<String> = labels[..room.saturating_sub(1)].iter().map(|s| s.to_string()).collect();
            shown.push("\u{2026}".into());
            shown
        } else {
            labels.iter().map(|s| s.to_string()).collect()
        };
        if let Some(a) = annotation {
            lines.push(a.to_string());
        }
        if lines.is_empty() {
            continue;
        }
        let (x0, y0) = canvas.origin(u);
        canvas.out.push_str("<g font-family=\"sans-serif\">");
        if labels.len() > room {
            let _ = write!(canvas.out, "<title>{}</title>", escape(&labels.join(", ")));
        }
        canvas.out.push('\n');
        for (k, text) in lines.iter().enumerate() {
            let _ = writeln!(
                canvas.out,
                "<text x=\"{}\" y=\"{}\" font-size=\"{}\">{}</text>",
                num(x0 + p),
                num(y0 + p + line * (k as f64 + 1.0) - (line - font)),
                num(font),
                escape(text)
            );
        }
        canvas.out.push_str("</g>\n");
    }
    Ok(canvas.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("well-formed XML")
    }

    fn count(svg: &str, tag: &str) -> usize {
        parse(svg).descendants().filter(|n| n.has_tag_name(tag)).count()
    }

    fn view_box(svg: &str) -> String {
        parse(svg).root_element().attribute("viewBox").unwrap().to_string()
    }

    #[test]
    fn one_observation_one_polyline() {
        let topo = MapTopology::grid(1, 1).unwrap();
        let data = DataMatrix::from_rows(&[vec![0.0, 1.0, 0.5]]).unwrap();
        let a = Assignment::from_classes(vec![0], 1).unwrap();
        let svg = render_cell_curves(&topo, &data, &a, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "polyline"), 1);
        assert_eq!(view_box(&svg), "0 0 112 112");
    }

    #[test]
    fn empty_cell_has_border_only() {
        let topo = MapTopology::grid(1, 2).unwrap();
        let data = DataMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let a = Assignment::from_classes(vec![1], 2).unwrap();
        let svg = render_cell_curves(&topo, &data, &a, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "polyline"), 1);
        // background plus one frame per cell
        assert_eq!(count(&svg, "rect"), 3);
    }

    #[test]
    fn equal_codes_draw_identical_curves() {
        let topo = MapTopology::grid(2, 2).unwrap();
        let book = CodeBook::new(topo, Array2::from_elem((4, 3), 0.5)).unwrap();
        let svg = render_codebook(&topo, &book, &RenderOptions::default()).unwrap();
        let doc = parse(&svg);
        let shapes: Vec<Vec<(f64, f64)>> = doc
            .descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .map(|n| {
                n.attribute("points")
                    .unwrap()
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect();
        assert_eq!(shapes.len(), 4);
        let rel = |s: &Vec<(f64, f64)>| s.iter().map(|(x, y)| (x - s[0].0, y - s[0].1)).collect::<Vec<_>>();
        let same = |a: &[(f64, f64)], b: &[(f64, f64)]| a.iter().zip(b).all(|(p, q)| (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9);
        assert!(shapes.iter().all(|s| same(&rel(s), &rel(&shapes[0]))));
    }

    #[test]
    fn one_dimensional_codes_fall_back_to_bars() {
        let topo = MapTopology::string(3).unwrap();
        let book = CodeBook::new(topo, array![[0.0], [1.0], [2.0]]).unwrap();
        let svg = render_codebook(&topo, &book, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "polyline"), 0);
        assert_eq!(count(&svg, "rect"), 1 + 3 + 3);
    }

    #[test]
    fn octagon_radii_order_opposite_to_distance() {
        let topo = MapTopology::grid(1, 3).unwrap();
        let book = CodeBook::new(topo, array![[0.0], [1.0], [5.0]]).unwrap();
        let radii = octagon_radii(&topo, &book).unwrap();
        // east neighbor of unit 0 is near, east neighbor of unit 1 is far
        let close = |v: Option<f64>, e: f64| (v.unwrap() - e).abs() < 1e-12;
        assert!(close(radii[0][2], RHO_MAX));
        assert!(close(radii[1][2], RHO_MIN));
        assert_eq!(radii[0][0], None);
        assert!(close(radii[1][6], RHO_MAX));
    }

    #[test]
    fn equal_codes_give_uniform_octagons() {
        let topo = MapTopology::torus(3, 3).unwrap();
        let book = CodeBook::new(topo, Array2::from_elem((9, 2), 1.0)).unwrap();
        let radii = octagon_radii(&topo, &book).unwrap();
        let mid = (RHO_MIN + RHO_MAX) / 2.0;
        assert!(radii.iter().all(|r| r.iter().all(|v| *v == Some(mid))));
        let svg = render_distance_octagons(&topo, &book, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "polygon"), 9);
    }

    #[test]
    fn octagons_reject_strings() {
        let topo = MapTopology::string(4).unwrap();
        let book = CodeBook::new(topo, Array2::zeros((4, 2))).unwrap();
        assert!(matches!(
            render_distance_octagons(&topo, &book, &RenderOptions::default()),
            Err(Error::InvalidTopology(_))
        ));
    }

    #[test]
    fn pie_sector_arithmetic() {
        let s = pie_sectors(&[1, 1, 1]);
        assert_eq!(s.len(), 3);
        for sector in &s {
            assert!((sector.sweep_deg - 120.0).abs() < 1e-12);
        }
        let s = pie_sectors(&[0, 7]);
        assert_eq!(s, vec![Sector { modality: 1, start_deg: 0.0, sweep_deg: 360.0 }]);
        let s = pie_sectors(&[3, 5, 0, 2]);
        assert!((s[1].sweep_deg - 180.0).abs() < 1e-12);
        assert!(pie_sectors(&[0, 0]).is_empty());
    }

    #[test]
    fn pie_map_draws_disks_and_legend() {
        let topo = MapTopology::grid(1, 2).unwrap();
        let a = Assignment::from_classes(vec![0, 0, 1, 1, 1], 2).unwrap();
        let q = QualitativeColumn::from_values("c", &[Some("x"), Some("x"), Some("x"), Some("y"), Some("z")]).unwrap();
        let svg = render_pie_map(&topo, &a, &q, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "circle"), 1);
        assert_eq!(count(&svg, "path"), 3);
        assert_eq!(count(&svg, "text"), 3);
        let small = RenderOptions {
            palette: vec!["#000000".into()],
            ..RenderOptions::default()
        };
        assert!(render_pie_map(&topo, &a, &q, &small).is_err());
    }

    #[test]
    fn plane_bars_and_superclass_fill() {
        let topo = MapTopology::grid(1, 3).unwrap();
        let book = CodeBook::new(topo, array![[1.0, 0.0], [1.0, 5.0], [1.0, 9.0]]).unwrap();
        let opts = RenderOptions::default();
        let svg = render_component_plane(&topo, &book, &PlaneSource::Component(0), None, &opts).unwrap();
        let heights: Vec<String> = parse(&svg)
            .descendants()
            .filter(|n| n.attribute("fill") == Some("#222222"))
            .map(|n| n.attribute("height").unwrap().to_string())
            .collect();
        assert_eq!(heights.len(), 3);
        assert!(heights.iter().all(|h| *h == heights[0]));
        let svg = render_component_plane(&topo, &book, &PlaneSource::Component(1), Some(&[0, 1, 1]), &opts).unwrap();
        let fills = parse(&svg)
            .descendants()
            .filter(|n| n.attribute("fill") == Some(opts.palette[1].as_str()))
            .count();
        assert_eq!(fills, 2);
        assert!(render_component_plane(&topo, &book, &PlaneSource::Component(2), None, &opts).is_err());
    }

    #[test]
    fn label_map_overflow() {
        let topo = MapTopology::grid(1, 2).unwrap();
        let opts = RenderOptions {
            cell_size: 32,
            ..RenderOptions::default()
        };
        let many: Vec<(String, usize)> = (0..10).map(|i| (format!("L{i}"), 0)).collect();
        let svg = render_label_map(&topo, &many, None, None, &opts).unwrap();
        assert!(svg.contains('\u{2026}'));
        assert!(svg.contains("<title>L0, L1, L2"));

        let one = vec![("a&b".to_string(), 0), ("c".to_string(), 1)];
        let svg = render_label_map(&topo, &one, None, None, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "text"), 2);
        assert!(svg.contains("a&amp;b"));
        let svg = render_label_map(&topo, &[], None, None, &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "text"), 0);
    }

    #[test]
    fn options_are_validated() {
        let topo = MapTopology::grid(1, 1).unwrap();
        let book = CodeBook::new(topo, array![[0.0, 1.0]]).unwrap();
        let tiny = RenderOptions {
            cell_size: 8,
            ..RenderOptions::default()
        };
        assert!(render_codebook(&topo, &book, &tiny).is_err());
        let bad = RenderOptions {
            palette: vec!["red".into()],
            ..RenderOptions::default()
        };
        assert!(render_codebook(&topo, &book, &bad).is_err());
    }
}
