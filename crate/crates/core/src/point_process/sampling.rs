use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Point, PointSet, ProcessSpec, Window};
use crate::error::{Error, Result};

/// Side length of the triangular lattice with the given intensity,
/// `s = (2 / (sqrt(3) lambda))^(1/2)`.
pub fn lattice_side(intensity: f64) -> f64 {
    (2.0 / (3f64.sqrt() * intensity)).sqrt()
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    d.sample(rng) as usize
}

fn uniform_points<R: Rng>(n: usize, window: &Window, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| {
            [
                window.x_min + rng.random::<f64>() * window.width(),
                window.y_min + rng.random::<f64>() * window.height(),
            ]
        })
        .collect()
}

/// Homogeneous Poisson process on `window`.
pub fn sample_ppp(intensity: f64, window: &Window, seed: u64) -> Result<PointSet> {
    let spec = ProcessSpec::ppp(intensity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = poisson_count(intensity * window.area(), &mut rng);
    Ok(PointSet {
        points: uniform_points(n, window, &mut rng),
        spec: Some(spec),
        seed: Some(seed),
    })
}

/// Matérn type-II hard-core process on `window`.
///
/// Parents are drawn on the window grown by the hard-core distance so that
/// points near the edge see their full competitor neighbourhood. A parent is
/// kept iff no other parent within `delta` carries a strictly smaller mark.
pub fn sample_mhc(spec: &ProcessSpec, window: &Window, seed: u64) -> Result<PointSet> {
    spec.validate()?;
    let ProcessSpec::Mhc {
        hardcore_m,
        parent_intensity,
    } = *spec
    else {
        return Err(Error::InvalidParameter(
            "sample_mhc needs an MHC spec".into(),
        ));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parent_window = window.expanded(hardcore_m);
    let n = poisson_count(parent_intensity * parent_window.area(), &mut rng);
    let parents = uniform_points(n, &parent_window, &mut rng);
    let marks: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();

    let buckets = Buckets::new(&parents, &parent_window, hardcore_m);
    let d2 = hardcore_m * hardcore_m;
    let points = parents
        .iter()
        .enumerate()
        .filter(|&(i, p)| {
            window.contains(*p)
                && !buckets.any_within(*p, |j| {
                    j != i && marks[j] < marks[i] && dist2(parents[j], *p) < d2
                })
        })
        .map(|(_, p)| *p)
        .collect();
    Ok(PointSet {
        points,
        spec: Some(*spec),
        seed: Some(seed),
    })
}

/// Triangular lattice with the given intensity, translated by `offset`
/// (uniform over one lattice cell when `None`), clipped to `window`.
pub fn sample_tri(
    intensity: f64,
    window: &Window,
    offset: Option<(f64, f64)>,
    seed: u64,
) -> Result<PointSet> {
    let spec = ProcessSpec::tri(intensity)?;
    let s = lattice_side(intensity);
    let row = s * 3f64.sqrt() / 2.0;
    let (ox, oy) = match offset {
        Some(o) => o,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            (u * s + v * s / 2.0, v * row)
        }
    };
    let j_lo = ((window.y_min - oy) / row).floor() as i64 - 1;
    let j_hi = ((window.y_max - oy) / row).ceil() as i64 + 1;
    let mut points = Vec::new();
    for j in j_lo..=j_hi {
        let y = oy + j as f64 * row;
        if y < window.y_min || y > window.y_max {
            continue;
        }
        let shift = ox + j as f64 * s / 2.0;
        let i_lo = ((window.x_min - shift) / s).floor() as i64 - 1;
        let i_hi = ((window.x_max - shift) / s).ceil() as i64 + 1;
        for i in i_lo..=i_hi {
            let x = shift + i as f64 * s;
            if x >= window.x_min && x <= window.x_max {
                points.push([x, y]);
            }
        }
    }
    Ok(PointSet {
        points,
        spec: Some(spec),
        seed: Some(seed),
    })
}

/// Dispatches on the process kind. TRI uses a random offset.
pub fn sample_process(spec: &ProcessSpec, window: &Window, seed: u64) -> Result<PointSet> {
    match *spec {
        ProcessSpec::Ppp { intensity } => sample_ppp(intensity, window, seed),
        ProcessSpec::Mhc { .. } => sample_mhc(spec, window, seed),
        ProcessSpec::Tri { intensity } => sample_tri(intensity, window, None, seed),
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Uniform bucket grid with cells of side `cell`, for fixed-radius queries
/// with radius <= `cell`.
struct Buckets {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Buckets {
    fn new(points: &[Point], window: &Window, cell: f64) -> Self {
        let nx = ((window.width() / cell).ceil() as usize).max(1);
        let ny = ((window.height() / cell).ceil() as usize).max(1);
        let (x0, y0) = (window.x_min, window.y_min);
        let index = |p: &Point| {
            let cx = (((p[0] - x0) / cell) as usize).min(nx - 1);
            let cy = (((p[1] - y0) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        let mut counts = vec![0usize; nx * ny + 1];
        for p in points {
            counts[index(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = index(p);
            items[fill[c]] = i;
            fill[c] += 1;
        }
        Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            start,
            items,
        }
    }

    fn any_within<F: FnMut(usize) -> bool>(&self, p: Point, mut pred: F) -> bool {
        let cx = ((p[0] - self.x0) / self.cell).floor() as i64;
        let cy = ((p[1] - self.y0) / self.cell).floor() as i64;
        for gy in (cy - 1).max(0)..=(cy + 1).min(self.ny as i64 - 1) {
            for gx in (cx - 1).max(0)..=(cx + 1).min(self.nx as i64 - 1) {
                let c = gy as usize * self.nx + gx as usize;
                if self.items[self.start[c]..self.start[c + 1]]
                    .iter()
                    .any(|&j| pred(j))
                {
                    return true;
                }
            }
        }
        false
    }
}
