//! Real-deployment pipeline: site lists, local projection, bounded Voronoi
//! cells, per-cell intensities and device-level minimum energy.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{create, LinkState, RadioConfig};
use crate::error::{Error, Result};
use crate::expectation::{expected_min_energy_quad, ChannelSpec};
use crate::grid::log_space;
use crate::point_process::{
    lattice_side, sample_ppp, KdTree, Point, ProcessKind, ProcessSpec, Window,
};
use crate::special::QuadSpec;
use crate::stats::{stream_rng, RunningStats};

/// Mean Earth radius used by the projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Site spans beyond this many degrees trigger a projection warning.
pub const MAX_SPAN_DEG: f64 = 5.0;

/// Default device intensity, per km².
pub const DEFAULT_DEVICE_INTENSITY_KM2: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub site_id: String,
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lon")]
    pub lon_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiteList {
    pub sites: Vec<Site>,
    /// Rows dropped because their coordinates repeat an earlier row.
    pub collapsed: usize,
    pub warnings: Vec<String>,
}

impl SiteList {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Validates and deduplicates raw sites. Repeated ids are an error;
    /// repeated coordinates keep the first row.
    pub fn from_sites(raw: Vec<Site>) -> Result<Self> {
        let mut acc = Dedup::default();
        for (i, s) in raw.into_iter().enumerate() {
            acc.add(s)
                .map_err(|m| Error::InvalidParameter(format!("site {i}: {m}")))?;
        }
        Ok(acc.finish())
    }
}

#[derive(Default)]
struct Dedup {
    list: SiteList,
    ids: HashSet<String>,
    coords: HashSet<(u64, u64)>,
}

impl Dedup {
    fn add(&mut self, s: Site) -> std::result::Result<(), String> {
        validate_site(&s)?;
        if !self.ids.insert(s.site_id.clone()) {
            return Err(format!("duplicate site id '{}'", s.site_id));
        }
        if self
            .coords
            .insert((s.lat_deg.to_bits(), s.lon_deg.to_bits()))
        {
            self.list.sites.push(s);
        } else {
            self.list.collapsed += 1;
        }
        Ok(())
    }

    fn finish(mut self) -> SiteList {
        let list = &mut self.list;
        if list.collapsed > 0 {
            list.warnings.push(format!(
                "{} site(s) with duplicate coordinates collapsed",
                list.collapsed
            ));
        }
        if list.sites.is_empty() {
            list.warnings.push("no sites".into());
        }
        self.list
    }
}

fn validate_site(s: &Site) -> std::result::Result<(), String> {
    if !(-90.0..=90.0).contains(&s.lat_deg) {
        return Err(format!("latitude {} outside [-90, 90]", s.lat_deg));
    }
    if !(-180.0..=180.0).contains(&s.lon_deg) {
        return Err(format!("longitude {} outside [-180, 180]", s.lon_deg));
    }
    Ok(())
}

/// Reads a `site_id,lat,lon` CSV file.
pub fn load_sites(path: &Path) -> Result<SiteList> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return SiteList::from_sites(Vec::new());
    }
    if headers.iter().collect::<Vec<_>>() != ["site_id", "lat", "lon"] {
        return Err(parse_err(
            1,
            format!(
                "expected header 'site_id,lat,lon', got '{}'",
                headers.as_slice()
            ),
        ));
    }
    let mut acc = Dedup::default();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let site: Site = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(line, e.to_string()))?;
        acc.add(site).map_err(|m| parse_err(line, m))?;
    }
    Ok(acc.finish())
}

/// Sites in local planar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub origin_lat_deg: f64,
    pub origin_lon_deg: f64,
    pub points: Vec<Point>,
    pub warnings: Vec<String>,
}

/// Equirectangular projection about the centroid:
/// `x = R cos(lat0) dlon`, `y = R dlat`.
pub fn project(sites: &SiteList) -> Projection {
    let n = sites.len().max(1) as f64;
    let lat0 = sites.sites.iter().map(|s| s.lat_deg).sum::<f64>() / n;
    let lon0 = sites.sites.iter().map(|s| s.lon_deg).sum::<f64>() / n;
    let k = lat0.to_radians().cos();
    let points = sites
        .sites
        .iter()
        .map(|s| {
            [
                EARTH_RADIUS_M * k * (s.lon_deg - lon0).to_radians(),
                EARTH_RADIUS_M * (s.lat_deg - lat0).to_radians(),
            ]
        })
        .collect();
    let span = |f: fn(&Site) -> f64| {
        let (lo, hi) = sites
            .sites
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    };
    let mut warnings = Vec::new();
    if !sites.is_empty() {
        let (dlat, dlon) = (span(|s| s.lat_deg), span(|s| s.lon_deg));
        if dlat > MAX_SPAN_DEG || dlon > MAX_SPAN_DEG {
            warnings.push(format!(
                "sites span {dlat:.2} deg x {dlon:.2} deg; the local projection distorts beyond {MAX_SPAN_DEG} deg"
            ));
        }
    }
    Projection {
        origin_lat_deg: lat0,
        origin_lon_deg: lon0,
        points,
        warnings,
    }
}

/// Bounding box of `points` grown by `fraction` of its size on every side.
/// Degenerate extents are padded to `min_side`.
pub fn default_frame(points: &[Point], fraction: f64, min_side: f64) -> Result<Window> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = |lo: f64, hi: f64| {
        let w = (hi - lo).max(min_side);
        let mid = 0.5 * (lo + hi);
        (mid - w * (0.5 + fraction), mid + w * (0.5 + fraction))
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    Window::new(x0, x1, y0, y1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub site: usize,
    /// Counter-clockwise polygon, meters.
    pub vertices: Vec<Point>,
    pub area_m2: f64,
    /// True iff the cell touches the clipping frame.
    pub boundary: bool,
}

/// Signed area of a polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Keeps the part of a convex polygon where `(x - m) . n <= 0`.
fn clip(poly: &[Point], m: Point, n: Point) -> Vec<Point> {
    let side = |p: Point| (p[0] - m[0]) * n[0] + (p[1] - m[1]) * n[1];
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Voronoi cells of `points` clipped to `frame`, one per point in order.
///
/// Each cell is the frame cut by the bisectors of its neighbours, visited
/// nearest first; the scan stops once the next neighbour is farther than
/// twice the cell's radius.
pub fn voronoi(points: &[Point], frame: &Window) -> Result<Vec<VoronoiCell>> {
    if points.is_empty() {
        return Err(Error::Degenerate("voronoi needs at least one point".into()));
    }
    if let Some(p) = points.iter().find(|p| !frame.contains(**p)) {
        return Err(Error::InvalidParameter(format!(
            "point ({}, {}) lies outside the frame",
            p[0], p[1]
        )));
    }
    let tree = KdTree::new(points);
    let tol = 1e-9 * frame.diagonal();
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut poly = vec![
                [frame.x_min, frame.y_min],
                [frame.x_max, frame.y_min],
                [frame.x_max, frame.y_max],
                [frame.x_min, frame.y_max],
            ];
            let mut k = 16.min(points.len());
            let mut done = 0;
            'grow: loop {
                let neighbours = tree.k_nearest(p, k);
                for &(j, d) in &neighbours[done..] {
                    if j == i {
                        continue;
                    }
                    if d == 0.0 {
                        return Err(Error::Degenerate(format!("sites {i} and {j} coincide")));
                    }
                    let reach = poly
                        .iter()
                        .map(|v| ((v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2)).sqrt())
                        .fold(0.0, f64::max);
                    if d > 2.0 * reach {
                        break 'grow;
                    }
                    let q = points[j];
                    let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                    poly = clip(&poly, m, [q[0] - p[0], q[1] - p[1]]);
                }
                done = neighbours.len();
                if k >= points.len() {
                    break;
                }
                k = (2 * k).min(points.len());
            }
            let boundary = poly.iter().any(|v| {
                (v[0] - frame.x_min).abs() < tol
                    || (v[0] - frame.x_max).abs() < tol
                    || (v[1] - frame.y_min).abs() < tol
                    || (v[1] - frame.y_max).abs() < tol
            });
            Ok(VoronoiCell {
                site: i,
                area_m2: polygon_area(&poly),
                vertices: poly,
                boundary,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellIntensity {
    pub site: usize,
    pub lambda_per_m2: f64,
    pub boundary: bool,
}

/// `lambda_i = 1 / area_i` per cell.
pub fn cell_intensities(cells: &[VoronoiCell]) -> Result<Vec<CellIntensity>> {
    cells
        .iter()
        .map(|c| {
            if !(c.area_m2 > 0.0) {
                return Err(Error::Degenerate(format!("cell {} has zero area", c.site)));
            }
            Ok(CellIntensity {
                site: c.site,
                lambda_per_m2: 1.0 / c.area_m2,
                boundary: c.boundary,
            })
        })
        .collect()
}

/// Sites with their cells and intensities.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub frame: Window,
    pub site_ids: Vec<String>,
    pub points: Vec<Point>,
    pub cells: Vec<VoronoiCell>,
    pub intensities: Vec<CellIntensity>,
    tree: KdTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub site: usize,
    pub r_m: f64,
    pub lambda_per_m2: f64,
    pub fading: f64,
    pub interference_w: f64,
    pub energy_j: f64,
    /// False for devices served by a boundary cell.
    pub interior: bool,
}

impl Deployment {
    pub fn new(site_ids: Vec<String>, points: Vec<Point>, frame: Window) -> Result<Self> {
        if site_ids.len() != points.len() {
            return Err(Error::InvalidParameter("one id per site required".into()));
        }
        let cells = voronoi(&points, &frame)?;
        let intensities = cell_intensities(&cells)?;
        let tree = KdTree::new(&points);
        Ok(Self {
            frame,
            site_ids,
            points,
            cells,
            intensities,
            tree,
        })
    }

    /// Projects a site list and frames it with the default 5% margin.
    pub fn from_sites(sites: &SiteList) -> Result<(Self, Vec<String>)> {
        if sites.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let proj = project(sites);
        let frame = default_frame(&proj.points, 0.05, 1.0)?;
        let ids = sites.sites.iter().map(|s| s.site_id.clone()).collect();
        Ok((Self::new(ids, proj.points, frame)?, proj.warnings))
    }

    pub fn interior_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.boundary).count()
    }

    /// Serving site and distance for a location.
    pub fn associate(&self, q: Point) -> (usize, f64) {
        self.tree.nearest(q).expect("deployment has sites")
    }

    /// Drops a PPP of devices over the frame, attaches each to its nearest
    /// site and evaluates its minimum energy with i.i.d. fading and
    /// interference draws seeded by device index.
    pub fn simulate(
        &self,
        device_intensity_per_m2: f64,
        cfg: &RadioConfig,
        channel: &ChannelSpec,
        seed: u64,
    ) -> Result<Vec<DeviceRecord>> {
        cfg.validate()?;
        channel.validate()?;
        if self.interior_count() == 0 {
            return Err(Error::Degenerate("no interior cells".into()));
        }
        let devices = sample_ppp(device_intensity_per_m2, &self.frame, seed)?;
        devices
            .points
            .par_iter()
            .enumerate()
            .map(|(i, &q)| {
                let mut rng = stream_rng(seed, i as u64 + 1);
                let (site, r) = self.associate(q);
                let h = loop {
                    let h = channel.fading.sample_truncated(channel.h_min, &mut rng);
                    if h > 0.0 {
                        break h;
                    }
                };
                let p_i = channel.interference.sample(&mut rng);
                let link = LinkState::new(r, h, p_i)?;
                let energy_j = cfg.optimal_operating_point(&link)?.energy_j;
                Ok(DeviceRecord {
                    x_m: q[0],
                    y_m: q[1],
                    site,
                    r_m: r,
                    lambda_per_m2: self.intensities[site].lambda_per_m2,
                    fading: h,
                    interference_w: p_i,
                    energy_j,
                    interior: !self.cells[site].boundary,
                })
            })
            .collect()
    }

    /// Writes `site_id,x_m,y_m,area_m2,lambda_per_km2,boundary`.
    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "site_id",
            "x_m",
            "y_m",
            "area_m2",
            "lambda_per_km2",
            "boundary",
        ])?;
        for (c, ci) in self.cells.iter().zip(&self.intensities) {
            let p = self.points[c.site];
            w.serialize((
                &self.site_ids[c.site],
                p[0],
                p[1],
                c.area_m2,
                ci.lambda_per_m2 * 1e6,
                c.boundary,
            ))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Writes `device_x,device_y,site_id,r_m,lambda_per_km2,energy_j`.
    pub fn write_devices_csv<W: Write>(&self, records: &[DeviceRecord], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "device_x",
            "device_y",
            "site_id",
            "r_m",
            "lambda_per_km2",
            "energy_j",
        ])?;
        for d in records {
            w.serialize((
                d.x_m,
                d.y_m,
                &self.site_ids[d.site],
                d.r_m,
                d.lambda_per_m2 * 1e6,
                d.energy_j,
            ))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save_cells_csv(&self, path: &Path) -> Result<()> {
        self.write_cells_csv(create(path)?)
    }

    pub fn save_devices_csv(&self, records: &[DeviceRecord], path: &Path) -> Result<()> {
        self.write_devices_csv(records, create(path)?)
    }
}

/// Triangular lattice of the given intensity over `window`, each site moved
/// by an isotropic Gaussian of standard deviation `jitter` times the lattice
/// side. Moved sites leaving the window are dropped.
pub fn jittered_lattice(
    intensity: f64,
    window: &Window,
    jitter: f64,
    seed: u64,
) -> Result<Vec<Point>> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be >= 0, got {jitter}"
        )));
    }
    let s = lattice_side(intensity);
    let base = crate::point_process::sample_tri(intensity, window, None, seed)?;
    if jitter == 0.0 {
        return Ok(base.points);
    }
    let normal = Normal::new(0.0, jitter * s).expect("finite sigma");
    let mut rng = stream_rng(seed, 1);
    Ok(base
        .points
        .into_iter()
        .map(|p| {
            [
                p[0] + normal.sample(&mut rng),
                p[1] + normal.sample(&mut rng),
            ]
        })
        .filter(|p| window.contains(*p))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub lambda_bin_center_per_km2: f64,
    pub mean_j: Option<f64>,
    pub stderr_j: Option<f64>,
    pub count: u64,
    pub ref_ppp_j: f64,
    pub ref_mhc_j: f64,
    pub ref_tri_j: f64,
}

/// Averages interior-device energies over log-spaced bins of serving-cell
/// intensity and adds the three reference curves (quadrature of the
/// expected minimum energy) at each bin center.
///
/// Bin edges span the observed interior intensities; empty bins are kept
/// with a zero count. Values in a bin are summed in sorted order, so the
/// result does not depend on record order.
pub fn binned_energy_vs_intensity(
    records: &[DeviceRecord],
    n_bins: usize,
    cfg: &RadioConfig,
    channel: &ChannelSpec,
) -> Result<Vec<BinRow>> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let interior: Vec<&DeviceRecord> = records.iter().filter(|d| d.interior).collect();
    if interior.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let (lo, hi) = interior
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.lambda_per_m2), hi.max(d.lambda_per_m2))
        });
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo * 0.99, hi * 1.01)
    };
    let edges = log_space(lo, hi, n_bins + 1)?;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for d in &interior {
        let b = edges
            .partition_point(|&e| e <= d.lambda_per_m2)
            .clamp(1, n_bins)
            - 1;
        values[b].push(d.energy_j);
    }
    let quad = QuadSpec::new(1e-15, 1e-9, 40)?;
    values
        .into_par_iter()
        .enumerate()
        .map(|(b, mut v)| {
            v.sort_by(f64::total_cmp);
            let stats: RunningStats = v.iter().copied().collect();
            let center = (edges[b] * edges[b + 1]).sqrt();
            let reference = |kind| -> Result<f64> {
                let spec = ProcessSpec::new(kind, center)?;
                Ok(expected_min_energy_quad(cfg, &spec, channel, &quad)?.mean_j)
            };
            Ok(BinRow {
                lambda_bin_center_per_km2: center * 1e6,
                mean_j: (stats.n > 0).then_some(stats.mean),
                stderr_j: stats.stderr(),
                count: stats.n,
                ref_ppp_j: reference(ProcessKind::Ppp)?,
                ref_mhc_j: reference(ProcessKind::Mhc)?,
                ref_tri_j: reference(ProcessKind::Tri)?,
            })
        })
        .collect()
}

/// Writes `lambda_bin_center_per_km2,mean_j,stderr_j,count,ref_ppp_j,ref_mhc_j,ref_tri_j`.
pub fn write_bins_csv<W: Write>(rows: &[BinRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn save_bins_csv(rows: &[BinRow], path: &Path) -> Result<()> {
    write_bins_csv(rows, create(path)?)
}
