use super::{Point, PointSet};
use crate::error::{Error, Result};

/// Static 2-d tree over a point slice, stored implicitly: the median of each
/// sub-slice is the node, alternating the split axis with depth.
#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<(Point, usize)>,
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut nodes: Vec<(Point, usize)> = points
            .iter()
            .copied()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        build(&mut nodes, 0);
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index (into the original slice) and distance of the nearest point.
    pub fn nearest(&self, q: Point) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        search(&self.nodes, 0, q, &mut best);
        (best.0 != usize::MAX).then(|| (best.0, best.1.sqrt()))
    }

    /// The `k` nearest points, closest first.
    pub fn k_nearest(&self, q: Point, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        search_k(&self.nodes, 0, q, k, &mut best);
        best.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }
}

fn build(nodes: &mut [(Point, usize)], axis: usize) {
    if nodes.len() <= 1 {
        return;
    }
    let mid = nodes.len() / 2;
    nodes.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
    let (left, rest) = nodes.split_at_mut(mid);
    build(left, 1 - axis);
    build(&mut rest[1..], 1 - axis);
}

fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn search(nodes: &[(Point, usize)], axis: usize, q: Point, best: &mut (usize, f64)) {
    if nodes.is_empty() {
        return;
    }
    let mid = nodes.len() / 2;
    let (p, idx) = nodes[mid];
    let d2 = dist2(p, q);
    if d2 < best.1 || (d2 == best.1 && idx < best.0) {
        *best = (idx, d2);
    }
    let diff = q[axis] - p[axis];
    let (near, far) = if diff < 0.0 {
        (&nodes[..mid], &nodes[mid + 1..])
    } else {
        (&nodes[mid + 1..], &nodes[..mid])
    };
    search(near, 1 - axis, q, best);
    if diff * diff <= best.1 {
        search(far, 1 - axis, q, best);
    }
}

fn search_k(
    nodes: &[(Point, usize)],
    axis: usize,
    q: Point,
    k: usize,
    best: &mut Vec<(usize, f64)>,
) {
    if nodes.is_empty() || k == 0 {
        return;
    }
    let mid = nodes.len() / 2;
    let (p, idx) = nodes[mid];
    let d2 = dist2(p, q);
    if best.len() < k || d2 < best[best.len() - 1].1 {
        let pos = best.partition_point(|&(_, d)| d <= d2);
        best.insert(pos, (idx, d2));
        best.truncate(k);
    }
    let diff = q[axis] - p[axis];
    let (near, far) = if diff < 0.0 {
        (&nodes[..mid], &nodes[mid + 1..])
    } else {
        (&nodes[mid + 1..], &nodes[..mid])
    };
    search_k(near, 1 - axis, q, k, best);
    if best.len() < k || diff * diff <= best[best.len() - 1].1 {
        search_k(far, 1 - axis, q, k, best);
    }
}

/// Distance from every device to its nearest gateway.
pub fn nearest_distances(gateways: &PointSet, devices: &[Point]) -> Result<Vec<f64>> {
    if gateways.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let tree = KdTree::new(&gateways.points);
    Ok(devices
        .iter()
        .map(|&d| tree.nearest(d).expect("non-empty tree").1)
        .collect())
}

/// O(n m) scan returning the nearest gateway index and distance per device.
/// Ties go to the lower index.
pub fn nearest_brute_force(gateways: &[Point], devices: &[Point]) -> Result<Vec<(usize, f64)>> {
    if gateways.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(devices
        .iter()
        .map(|&d| {
            let mut best = (0, f64::INFINITY);
            for (i, &g) in gateways.iter().enumerate() {
                let d2 = dist2(g, d);
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            (best.0, best.1.sqrt())
        })
        .collect())
}
