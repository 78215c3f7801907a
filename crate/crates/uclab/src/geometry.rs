//! Domains, erosions/collars, coverings, broken lines and ball chains.
//!
//! Domains are axis-aligned boxes and finite unions of boxes sharing one
//! grid. Distances to the complement are computed from the exact analytic
//! distance function (a cell decomposition of the complement), never by grid
//! dilation, so geometric certificates carry no discretization noise.

use crate::error::{UcError, UcResult};
use serde::{Deserialize, Serialize};

/// Point in ℝⁿ with n ≤ 3; for n = 2 the third coordinate is fixed at 0.
pub type Point = [f64; 3];

pub fn dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aab {
    pub lo: Point,
    pub hi: Point,
}

impl Aab {
    pub fn new(lo: Point, hi: Point) -> Self {
        Aab { lo, hi }
    }

    pub fn contains_open(&self, x: &Point, n: usize) -> bool {
        (0..n).all(|i| x[i] > self.lo[i] && x[i] < self.hi[i])
    }

    pub fn contains_closed(&self, x: &Point, n: usize) -> bool {
        (0..n).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    /// Euclidean distance from `x` to this (closed) box; 0 inside.
    pub fn distance(&self, x: &Point, n: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let d = (self.lo[i] - x[i]).max(x[i] - self.hi[i]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    pub fn center(&self, _n: usize) -> Point {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
            0.5 * (self.lo[2] + self.hi[2]),
        ]
    }

    /// Closed intersection test.
    pub fn intersects(&self, other: &Aab, n: usize) -> bool {
        (0..n).all(|i| self.lo[i] <= other.hi[i] && self.hi[i] >= other.lo[i])
    }

    pub fn edge_lengths(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.hi[i] - self.lo[i]).collect()
    }
}

/// A grid-equipped domain: a finite union of axis-aligned boxes sharing the
/// node lattice `origin + i·h` of the bounding box.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    pub n: usize,
    pub origin: Point,
    pub lengths: Point,
    pub h: f64,
    /// Node counts per axis of the bounding grid (1 on unused axes).
    pub dims: [usize; 3],
    members: Vec<Aab>,
    /// Cell decomposition of `bbox \ Ω`, used for exact complement distances.
    complement_cells: Vec<Aab>,
}

impl BoxDomain {
    /// Single box `[origin, origin + lengths]` with grid spacing `h`.
    pub fn new(n: usize, origin: Point, lengths: Point, h: f64) -> UcResult<Self> {
        let lo = origin;
        let mut hi = origin;
        for i in 0..n {
            hi[i] += lengths[i];
        }
        Self::union(n, vec![Aab::new(lo, hi)], h)
    }

    /// Unit cube (n = 3) or unit square (n = 2) with spacing `h`.
    pub fn unit(n: usize, h: f64) -> UcResult<Self> {
        Self::new(n, [0.0; 3], [1.0, 1.0, if n == 3 { 1.0 } else { 0.0 }], h)
    }

    /// Union of boxes; the grid lives on the bounding box.
    pub fn union(n: usize, members: Vec<Aab>, h: f64) -> UcResult<Self> {
        if n != 2 && n != 3 {
            return Err(UcError::invalid_domain(format!("n must be 2 or 3, got {n}")));
        }
        if members.is_empty() {
            return Err(UcError::invalid_domain("no member boxes"));
        }
        if !(h > 0.0) {
            return Err(UcError::invalid_domain("h must be positive"));
        }
        let mut lo = members[0].lo;
        let mut hi = members[0].hi;
        for b in &members {
            for i in 0..n {
                if !(b.hi[i] > b.lo[i]) {
                    return Err(UcError::invalid_domain("member box with nonpositive extent"));
                }
                lo[i] = lo[i].min(b.lo[i]);
                hi[i] = hi[i].max(b.hi[i]);
            }
        }
        let mut lengths = [0.0; 3];
        let mut dims = [1usize; 3];
        for i in 0..n {
            lengths[i] = hi[i] - lo[i];
            let steps = lengths[i] / h;
            let rounded = steps.round();
            if (steps - rounded).abs() > 1e-9 * steps.max(1.0) {
                return Err(UcError::invalid_domain(format!(
                    "h = {h} does not divide extent {} on axis {i}",
                    lengths[i]
                )));
            }
            dims[i] = rounded as usize + 1;
            if dims[i] < 9 {
                return Err(UcError::invalid_domain(format!(
                    "axis {i} has {} nodes, need at least 9",
                    dims[i]
                )));
            }
        }
        if n == 2 {
            lo[2] = 0.0;
            hi[2] = 0.0;
        }
        let complement_cells = complement_cells(n, &members, &lo, &hi);
        Ok(BoxDomain {
            n,
            origin: lo,
            lengths,
            h,
            dims,
            members,
            complement_cells,
        })
    }

    pub fn members(&self) -> &[Aab] {
        &self.members
    }

    pub fn bounding_box(&self) -> Aab {
        let mut hi = self.origin;
        for i in 0..self.n {
            hi[i] += self.lengths[i];
        }
        Aab::new(self.origin, hi)
    }

    /// Edge of the smallest closed cube containing the domain.
    pub fn enclosing_cube_edge(&self) -> f64 {
        (0..self.n).map(|i| self.lengths[i]).fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn node_point(&self, idx: [usize; 3]) -> Point {
        [
            self.origin[0] + idx[0] as f64 * self.h,
            self.origin[1] + idx[1] as f64 * self.h,
            self.origin[2] + idx[2] as f64 * self.h,
        ]
    }

    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    pub fn index_of(&self, lin: usize) -> [usize; 3] {
        let i = lin % self.dims[0];
        let j = (lin / self.dims[0]) % self.dims[1];
        let k = lin / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Whether `x` lies in the open domain (interior of the union).
    pub fn contains(&self, x: &Point) -> bool {
        // Interior of a union is larger than the union of interiors, but for
        // the grid-aligned unions used here the difference is a null set that
        // never carries quadrature nodes; membership in any closed member box
        // with positive complement distance is the exact test.
        self.members.iter().any(|b| b.contains_closed(x, self.n))
            && self.dist_to_complement(x) > 0.0
    }

    /// Exact Euclidean distance from `x` to the complement of the domain.
    /// Returns 0 for points outside.
    pub fn dist_to_complement(&self, x: &Point) -> f64 {
        if !self.members.iter().any(|b| b.contains_closed(x, self.n)) {
            return 0.0;
        }
        let bb = self.bounding_box();
        let mut d = f64::INFINITY;
        for i in 0..self.n {
            d = d.min(x[i] - bb.lo[i]).min(bb.hi[i] - x[i]);
        }
        for c in &self.complement_cells {
            d = d.min(c.distance(x, self.n));
        }
        d.max(0.0)
    }

    /// Largest radius for which the erosion stays nonempty and connected,
    /// located by bisection on the grid connectedness flag. This is a
    /// per-domain computed value, recorded as such.
    pub fn frak_r(&self) -> f64 {
        let hi0 = 0.5 * (0..self.n).map(|i| self.lengths[i]).fold(f64::INFINITY, f64::min);
        let good = |r: f64| match erode(self, r) {
            Ok(mask) => mask.is_connected(),
            Err(_) => false,
        };
        let mut lo = self.h;
        if !good(lo) {
            return self.h;
        }
        let mut hi = hi0;
        if good(hi) {
            return hi;
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if good(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-3 * self.h {
                break;
            }
        }
        lo
    }
}

/// Decompose `bbox \ union(members)` into axis-aligned cells using the face
/// coordinates of the members as cuts.
fn complement_cells(n: usize, members: &[Aab], lo: &Point, hi: &Point) -> Vec<Aab> {
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut c = vec![lo[i], hi[i]];
        for b in members {
            c.push(b.lo[i]);
            c.push(b.hi[i]);
        }
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        cuts.push(c);
    }
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let mut cells = Vec::new();
    let kmax = if n == 3 { counts[2] } else { 1 };
    for k in 0..kmax {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let mut clo = [cuts[0][i], cuts[1][j], 0.0];
                let mut chi = [cuts[0][i + 1], cuts[1][j + 1], 0.0];
                if n == 3 {
                    clo[2] = cuts[2][k];
                    chi[2] = cuts[2][k + 1];
                }
                let cell = Aab::new(clo, chi);
                let center = cell.center(n);
                if !members.iter().any(|b| b.contains_open(&center, n)) {
                    cells.push(cell);
                }
            }
        }
    }
    cells
}

/// Mask kinds mirrored in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaskKind {
    Erosion { r: f64 },
    Collar { r: f64 },
    Ball { center: Point, r: f64 },
    Annulus { center: Point, a: f64, b: f64 },
    Custom,
}

/// Node-set region on a domain's grid.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub domain: BoxDomain,
    pub kind: MaskKind,
    membership: Vec<bool>,
    count: usize,
}

impl RegionMask {
    pub fn from_predicate<F: Fn(&Point) -> bool>(
        domain: &BoxDomain,
        kind: MaskKind,
        pred: F,
    ) -> Self {
        let mut membership = vec![false; domain.node_count()];
        let mut count = 0;
        for k in 0..domain.dims[2] {
            for j in 0..domain.dims[1] {
                for i in 0..domain.dims[0] {
                    let p = domain.node_point([i, j, k]);
                    if pred(&p) {
                        membership[domain.linear_index([i, j, k])] = true;
                        count += 1;
                    }
                }
            }
        }
        RegionMask {
            domain: domain.clone(),
            kind,
            membership,
            count,
        }
    }

    pub fn ball(domain: &BoxDomain, center: Point, r: f64) -> Self {
        Self::from_predicate(domain, MaskKind::Ball { center, r }, |p| {
            dist(p, &center) < r
        })
    }

    pub fn annulus(domain: &BoxDomain, center: Point, a: f64, b: f64) -> Self {
        Self::from_predicate(domain, MaskKind::Annulus { center, a, b }, |p| {
            let d = dist(p, &center);
            d > a && d < b
        })
    }

    pub fn contains_index(&self, lin: usize) -> bool {
        self.membership[lin]
    }

    pub fn node_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Node volume `count · hⁿ` (midpoint rule).
    pub fn volume(&self) -> f64 {
        self.count as f64 * self.domain.h.powi(self.domain.n as i32)
    }

    /// Indices of member nodes in lexicographic order.
    pub fn node_indices(&self) -> Vec<usize> {
        (0..self.membership.len())
            .filter(|&i| self.membership[i])
            .collect()
    }

    pub fn node_points(&self) -> Vec<Point> {
        self.node_indices()
            .into_iter()
            .map(|lin| self.domain.node_point(self.domain.index_of(lin)))
            .collect()
    }

    /// Connectedness under 6-neighbour (4-neighbour for n = 2) adjacency.
    pub fn is_connected(&self) -> bool {
        if self.count == 0 {
            return false;
        }
        let d = &self.domain;
        let start = self.membership.iter().position(|&m| m).unwrap();
        let mut seen = vec![false; self.membership.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut visited = 0usize;
        while let Some(lin) = stack.pop() {
            visited += 1;
            let [i, j, k] = d.index_of(lin);
            let mut push = |idx: [usize; 3]| {
                let l = d.linear_index(idx);
                if self.membership[l] && !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            };
            if i > 0 {
                push([i - 1, j, k]);
            }
            if i + 1 < d.dims[0] {
                push([i + 1, j, k]);
            }
            if j > 0 {
                push([i, j - 1, k]);
            }
            if j + 1 < d.dims[1] {
                push([i, j + 1, k]);
            }
            if d.n == 3 {
                if k > 0 {
                    push([i, j, k - 1]);
                }
                if k + 1 < d.dims[2] {
                    push([i, j, k + 1]);
                }
            }
        }
        visited == self.count
    }
}

/// Erosion `Ω^r`: nodes with exact distance to the complement `> r`.
pub fn erode(domain: &BoxDomain, r: f64) -> UcResult<RegionMask> {
    let half_min = 0.5 * (0..domain.n).map(|i| domain.lengths[i]).fold(f64::INFINITY, f64::min);
    if !(r > 0.0) || r >= half_min + 1e-15 {
        return Err(UcError::parameter(format!(
            "erosion radius {r} outside (0, {half_min})"
        )));
    }
    let mask = RegionMask::from_predicate(domain, MaskKind::Erosion { r }, |p| {
        domain.dist_to_complement(p) > r
    });
    if mask.is_empty() {
        return Err(UcError::EmptyResult {
            context: format!("erosion by {r} leaves no interior node"),
        });
    }
    Ok(mask)
}

/// Collar `Ω_r`: interior nodes with distance to the complement `< r`.
pub fn collar(domain: &BoxDomain, r: f64) -> UcResult<RegionMask> {
    if !(r > 0.0) {
        return Err(UcError::parameter("collar radius must be positive"));
    }
    Ok(RegionMask::from_predicate(
        domain,
        MaskKind::Collar { r },
        |p| {
            let d = domain.dist_to_complement(p);
            d > 0.0 && d < r
        },
    ))
}

/// Greedy ε-net covering of a node mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Covering {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub count: usize,
}

impl Covering {
    /// Minimal pairwise center distance (∞ for a single center).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                best = best.min(dist(&self.centers[i], &self.centers[j]));
            }
        }
        best
    }
}

/// Greedy covering: scan mask nodes in lexicographic order, opening a new
/// center whenever a node is not yet within `eps` of an existing one. The
/// construction guarantees pairwise separation ≥ eps and full coverage.
pub fn greedy_cover(mask: &RegionMask, eps: f64) -> UcResult<Covering> {
    if mask.is_empty() {
        return Err(UcError::region("cannot cover an empty mask"));
    }
    if !(eps > 0.0) {
        return Err(UcError::parameter("eps must be positive"));
    }
    // Bucket existing centers on a grid of cell size eps for O(1) lookups.
    let bucket = |p: &Point| -> (i64, i64, i64) {
        (
            (p[0] / eps).floor() as i64,
            (p[1] / eps).floor() as i64,
            (p[2] / eps).floor() as i64,
        )
    };
    use std::collections::HashMap;
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut centers: Vec<Point> = Vec::new();
    for p in mask.node_points() {
        let (bi, bj, bk) = bucket(&p);
        let mut covered = false;
        'search: for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(list) = buckets.get(&(bi + di, bj + dj, bk + dk)) {
                        for &ci in list {
                            if dist(&p, &centers[ci]) <= eps {
                                covered = true;
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        if !covered {
            centers.push(p);
            buckets.entry((bi, bj, bk)).or_default().push(centers.len() - 1);
        }
    }
    let count = centers.len();
    Ok(Covering {
        centers,
        radius: eps,
        count,
    })
}

/// Lower bound for the volume of the `rho`-fattening of the mask's node set,
/// by counting sample cells certified to lie inside the fattening.
pub fn fattening_volume_lower_bound(mask: &RegionMask, rho: f64, sample_h: f64) -> f64 {
    let n = mask.domain.n;
    let pts = mask.node_points();
    if pts.is_empty() {
        return 0.0;
    }
    use std::collections::HashMap;
    let cell = rho.max(sample_h);
    let key = |p: &Point| -> (i64, i64, i64) {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in &pts {
        for i in 0..n {
            lo[i] = lo[i].min(p[i] - rho);
            hi[i] = hi[i].max(p[i] + rho);
        }
    }
    let half_diag = 0.5 * sample_h * (n as f64).sqrt();
    let steps: Vec<usize> = (0..3)
        .map(|i| {
            if i < n {
                ((hi[i] - lo[i]) / sample_h).ceil() as usize
            } else {
                1
            }
        })
        .collect();
    let mut count = 0usize;
    for k in 0..steps[2] {
        for j in 0..steps[1] {
            for i in 0..steps[0] {
                let c = [
                    lo[0] + (i as f64 + 0.5) * sample_h,
                    lo[1] + (j as f64 + 0.5) * sample_h,
                    if n == 3 { lo[2] + (k as f64 + 0.5) * sample_h } else { 0.0 },
                ];
                let (bi, bj, bk) = key(&c);
                let mut inside = false;
                'scan: for di in -1..=1 {
                    for dj in -1..=1 {
                        for dk in -1..=1 {
                            if let Some(list) = buckets.get(&(bi + di, bj + dj, bk + dk)) {
                                for &pi in list {
                                    if dist(&c, &pts[pi]) + half_diag <= rho {
                                        inside = true;
                                        break 'scan;
                                    }
                                }
                            }
                        }
                    }
                }
                if inside {
                    count += 1;
                }
            }
        }
    }
    count as f64 * sample_h.powi(n as i32)
}

/// A polyline joining two points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrokenLine {
    pub vertices: Vec<Point>,
}

impl BrokenLine {
    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| dist(&w[0], &w[1]))
            .sum()
    }

    /// Point at arclength `s` from the start (clamped to the endpoints).
    pub fn point_at(&self, s: f64) -> Point {
        let mut rem = s.max(0.0);
        for w in self.vertices.windows(2) {
            let seg = dist(&w[0], &w[1]);
            if rem <= seg || seg == 0.0 {
                if seg == 0.0 {
                    continue;
                }
                let t = rem / seg;
                return [
                    w[0][0] + t * (w[1][0] - w[0][0]),
                    w[0][1] + t * (w[1][1] - w[0][1]),
                    w[0][2] + t * (w[1][2] - w[0][2]),
                ];
            }
            rem -= seg;
        }
        *self.vertices.last().unwrap()
    }
}

/// Broken line through a connected union of equal cubes of edge `r/√n`:
/// breadth-first search on the adjacency graph (shared faces, edges or
/// vertices), then a polyline through cube centers. Each segment stays inside
/// the union and has length at most the cube diameter `r`, so the total
/// length is at most `ℓ·r` for `ℓ` cubes.
pub fn cube_path(cubes: &[Aab], n: usize, x: Point, y: Point) -> UcResult<BrokenLine> {
    if cubes.is_empty() {
        return Err(UcError::DisconnectedUnion {
            context: "empty cube list".into(),
        });
    }
    let edge = cubes[0].hi[0] - cubes[0].lo[0];
    for c in cubes {
        for e in c.edge_lengths(n) {
            if (e - edge).abs() > 1e-9 * edge {
                return Err(UcError::invalid_domain("cubes must share one edge length"));
            }
        }
    }
    let start = cubes.iter().position(|c| c.contains_closed(&x, n));
    let goal = cubes.iter().position(|c| c.contains_closed(&y, n));
    let (start, goal) = match (start, goal) {
        (Some(s), Some(g)) => (s, g),
        _ => {
            return Err(UcError::DisconnectedUnion {
                context: "an endpoint lies outside the cube union".into(),
            })
        }
    };
    // BFS over the adjacency graph.
    let m = cubes.len();
    let mut prev = vec![usize::MAX; m];
    let mut seen = vec![false; m];
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            break;
        }
        for d in 0..m {
            if !seen[d] && cubes[c].intersects(&cubes[d], n) {
                seen[d] = true;
                prev[d] = c;
                queue.push_back(d);
            }
        }
    }
    if !seen[goal] {
        return Err(UcError::DisconnectedUnion {
            context: "cube union is disconnected between the endpoints".into(),
        });
    }
    let mut chain = vec![goal];
    let mut c = goal;
    while c != start {
        c = prev[c];
        chain.push(c);
    }
    chain.reverse();
    let mut vertices = vec![x];
    for &c in &chain {
        vertices.push(cubes[c].center(n));
    }
    vertices.push(y);
    Ok(BrokenLine { vertices })
}

/// Kind of a ball chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainKind {
    PathChain,
    ConeChain,
}

/// Geometric data of a cone chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeData {
    pub mu: f64,
    pub varpi: f64,
    pub d0: f64,
    /// Greatest k with `x ∈ B(x_k, ρ_k)`, found by direct scan.
    pub k_x: usize,
    /// Closed-form lower bound for `k_x`.
    pub k_plus: usize,
    /// Closed-form upper bound `h(r)` for `k_x`.
    pub h_r: f64,
}

/// An ordered list of ball centers and radii with overlap certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainPlan {
    pub kind: ChainKind,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Per consecutive link: `(|x_j − x_{j+1}| + r_{j+1}) / (2 r_j)`; the
    /// containment `B(x_{j+1}, r_{j+1}) ⊂ B(x_j, 2 r_j)` holds iff ≤ 1.
    pub overlap_ratios: Vec<f64>,
    /// For path chains with a known domain: the cube-count cap on the number
    /// of balls.
    pub m_r: Option<usize>,
    pub cone: Option<ConeData>,
}

impl ChainPlan {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn max_overlap_ratio(&self) -> f64 {
        self.overlap_ratios.iter().fold(0.0, |a, &b| a.max(b))
    }
}

fn overlap_ratios(centers: &[Point], radii: &[f64]) -> Vec<f64> {
    centers
        .windows(2)
        .zip(radii.windows(2))
        .map(|(c, r)| (dist(&c[0], &c[1]) + r[1]) / (2.0 * r[0]))
        .collect()
}

/// Cube-count cap `m_r = (⌊𝐃√n/r⌋ + 1)ⁿ` for a domain of enclosing-cube edge
/// `d_box`.
pub fn chain_ball_cap(n: usize, d_box: f64, r: f64) -> usize {
    let base = (d_box * (n as f64).sqrt() / r).floor() as usize + 1;
    base.pow(n as u32)
}

/// Path chain: centers at arclength multiples of `r` along the broken line
/// (last link shorter). Consecutive Euclidean distances are ≤ r, so each ball
/// of radius r is contained in the previous ball of radius 2r.
pub fn ball_chain(
    path: &BrokenLine,
    r: f64,
    domain: Option<&BoxDomain>,
) -> UcResult<ChainPlan> {
    if !(r > 0.0) {
        return Err(UcError::parameter("chain radius must be positive"));
    }
    let total = path.length();
    let p = (total / r).ceil() as usize;
    let mut centers = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let s = (j as f64 * r).min(total);
        centers.push(path.point_at(s));
    }
    if centers.len() >= 2 {
        let last = centers.len() - 1;
        if dist(&centers[last], &centers[last - 1]) < 1e-14 {
            centers.pop();
        }
    }
    let mut m_r = None;
    if let Some(d) = domain {
        for c in &centers {
            if d.dist_to_complement(c) <= 3.0 * r {
                return Err(UcError::PathEscapesErosion {
                    context: format!(
                        "chain center ({:.4}, {:.4}, {:.4}) has boundary clearance ≤ 3r",
                        c[0], c[1], c[2]
                    ),
                });
            }
        }
        m_r = Some(chain_ball_cap(d.n, d.enclosing_cube_edge(), r));
    }
    let radii = vec![r; centers.len()];
    let overlaps = overlap_ratios(&centers, &radii);
    Ok(ChainPlan {
        kind: ChainKind::PathChain,
        centers,
        radii,
        overlap_ratios: overlaps,
        m_r,
        cone: None,
    })
}

/// Closed-form cone-chain index bounds for contraction `mu` and aperture
/// ratio `varpi`: `k₊ = max(1, ln(1+ϖ)/|ln μ| − 1)` and
/// `h(r) = |ln μ|⁻¹ ln((1+ϖ) ρ̄ / r)`.
pub fn cone_index_bounds(mu: f64, varpi: f64, rho_bar: f64, r: f64) -> (usize, f64) {
    let lnmu = -mu.ln();
    let k_plus_real = (1.0 + varpi).ln() / lnmu - 1.0;
    let k_plus = if k_plus_real <= 1.0 {
        1
    } else {
        k_plus_real.ceil() as usize
    };
    let h_r = ((1.0 + varpi) * rho_bar / r).ln() / lnmu;
    (k_plus, h_r)
}

/// Cone chain toward a boundary point `p` with interior direction `(x−p)/d`:
/// centers `x_k = p + μᵏ d₀ ξ` and radii `ρ_k = ϖ μᵏ d₀` with
/// `μ = (3 − 2 sin θ)/(3 − sin θ)` and `ϖ = sin θ / 3`; the returned index is
/// the greatest k with `x ∈ B(x_k, ρ_k)`, found by direct scan, with the
/// closed-form bounds asserted, not assumed.
pub fn cone_chain(x: Point, p: Point, theta: f64, rho_bar: f64, r: f64) -> UcResult<ChainPlan> {
    let s = theta.sin();
    if !(s > 0.0 && s <= 1.0 / 3.0 + 1e-12) {
        return Err(UcError::GeometryInfeasible {
            context: format!("sin θ = {s} outside (0, 1/3]"),
        });
    }
    let d = dist(&x, &p);
    if !(rho_bar > 0.0) || !(r > 0.0) {
        return Err(UcError::parameter("rho_bar and r must be positive"));
    }
    if !(d >= r && d < rho_bar / 3.0) {
        return Err(UcError::GeometryInfeasible {
            context: format!("need r ≤ |x−p| < ρ̄/3, got |x−p| = {d}, r = {r}, ρ̄ = {rho_bar}"),
        });
    }
    let mu = (3.0 - 2.0 * s) / (3.0 - s);
    let varpi = s / 3.0;
    // Any d₀ in (2ρ̄/3, ρ̄) is admissible; take the midpoint.
    let d0 = 5.0 * rho_bar / 6.0;
    let xi = [
        (x[0] - p[0]) / d,
        (x[1] - p[1]) / d,
        (x[2] - p[2]) / d,
    ];
    let center_at = |dk: f64| -> Point { [p[0] + dk * xi[0], p[1] + dk * xi[1], p[2] + dk * xi[2]] };
    // Scan: once μᵏ d₀ (1+ϖ) < d no later ball can contain x.
    let mut k_x: Option<usize> = None;
    let mut k = 0usize;
    let mut dk = d0;
    while dk * (1.0 + varpi) >= d {
        if (d - dk).abs() <= varpi * dk {
            k_x = Some(k);
        }
        k += 1;
        dk *= mu;
        if k > 100_000 {
            break;
        }
    }
    let k_x = k_x.ok_or_else(|| UcError::GeometryInfeasible {
        context: "no chain ball contains x".into(),
    })?;
    let (k_plus, h_r) = cone_index_bounds(mu, varpi, rho_bar, r);
    if k_x < k_plus || (k_x as f64) > h_r + 1e-9 {
        return Err(UcError::GeometryInfeasible {
            context: format!("scanned index k_x = {k_x} escapes [{k_plus}, {h_r:.3}]"),
        });
    }
    let mut centers = Vec::with_capacity(k_x + 1);
    let mut radii = Vec::with_capacity(k_x + 1);
    let mut dk = d0;
    for _ in 0..=k_x {
        centers.push(center_at(dk));
        radii.push(varpi * dk);
        dk *= mu;
    }
    let overlaps = overlap_ratios(&centers, &radii);
    Ok(ChainPlan {
        kind: ChainKind::ConeChain,
        centers,
        radii,
        overlap_ratios: overlaps,
        m_r: None,
        cone: Some(ConeData {
            mu,
            varpi,
            d0,
            k_x,
            k_plus,
            h_r,
        }),
    })
}

/// Check that every tripled ball `B(x_k, 3ρ_k)` of a cone chain lies in the
/// cone of half-angle θ with vertex `p` and axis `ξ`; with `ϖ = sin θ/3` the
/// containment is exact (the balls are tangent to the cone boundary).
pub fn cone_contains_tripled_balls(plan: &ChainPlan, p: &Point, theta: f64) -> bool {
    let cone = match &plan.cone {
        Some(c) => c,
        None => return false,
    };
    let s = theta.sin();
    for (c, &rho) in plan.centers.iter().zip(plan.radii.iter()) {
        let dk = dist(c, p);
        // Distance from the axis point to the cone boundary is dk·sinθ.
        if dk * s + 1e-12 * cone.d0 < 3.0 * rho {
            return false;
        }
    }
    true
}
