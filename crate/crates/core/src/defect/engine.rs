//! Exact pair sweep with branch-and-bound over a lazily built cell hierarchy.
//!
//! Pairs are bucketed by the first grid scale that admits them. Inside a bucket only the
//! running maximum matters, so each segment is explored against the current threshold:
//! pieces whose upper bound cannot beat it are discarded, the rest are refined through
//! finer cells until the candidate list is short enough for an exact envelope.

use smallvec::SmallVec;

use crate::geom::{envelope_max, meb_of, sq_dist, Envelope, PointCloud, SpatialIndex};

const LEAF_SIZE: usize = 16;
const MAX_LEVEL: u32 = 30;
const NONE: u32 = u32::MAX;
/// Above this dimension the `2^dim` fan-out is too wide; queries scan the whole cloud.
const TREE_MAX_DIM: usize = 10;

type Vecf = SmallVec<[f64; 4]>;

struct Node {
    rep: u32,
    level: u32,
    cands: Box<[u32]>,
    /// Start of this node's block of `2^dim` child slots, or `NONE`.
    children: u32,
}

/// Cubic cells over the bounding cube of the cloud, built on demand. A cell at `level`
/// has side `side0 / 2^level`; its candidate list holds every cloud point that can be a
/// nearest neighbor of some location inside the cell, and `rep` is a nearest neighbor
/// of its center.
pub(crate) struct CellTree<'a> {
    cloud: &'a PointCloud,
    dim: usize,
    origin: Vec<f64>,
    side0: f64,
    slack: f64,
    nodes: Vec<Node>,
    /// Integer cell coordinates, `dim` entries per node.
    coords: Vec<i64>,
    slots: Vec<u32>,
    /// Cell side per level.
    sides: Vec<f64>,
    env: Envelope,
    stack: Vec<Piece>,
    buf: Vec<f64>,
}

/// A parameter interval of the current segment lying inside one cell, with an upper
/// bound on the squared distance to the cloud over it.
#[derive(Clone, Copy)]
struct Piece {
    node: u32,
    s0: f64,
    s1: f64,
    ub2: f64,
}

impl<'a> CellTree<'a> {
    pub(crate) fn new(cloud: &'a PointCloud) -> Self {
        let (lo, hi) = cloud.bounding_box();
        let extent = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max);
        let scale = lo
            .iter()
            .chain(&hi)
            .fold(extent, |m, v| m.max(v.abs()));
        let side0 = if extent > 0.0 { extent } else { 1.0 };
        let dim = cloud.dim();
        let mut tree = CellTree {
            cloud,
            dim,
            origin: lo,
            side0,
            slack: 1e-9 * side0 + 1e-12 * scale,
            nodes: Vec::new(),
            coords: Vec::new(),
            slots: Vec::new(),
            sides: (0..=MAX_LEVEL)
                .map(|l| side0 / (1u64 << l) as f64)
                .collect(),
            env: Envelope::default(),
            stack: Vec::new(),
            buf: Vec::new(),
        };
        let all: Vec<u32> = (0..cloud.len() as u32).collect();
        let zero = vec![0i64; dim];
        tree.push_node(0, &zero, &all);
        tree
    }

    fn side(&self, level: u32) -> f64 {
        self.sides[level as usize]
    }

    fn push_node(&mut self, level: u32, coords: &[i64], pool: &[u32]) -> u32 {
        let side = self.side(level);
        let c: Vecf = (0..self.dim)
            .map(|k| self.origin[k] + (coords[k] as f64 + 0.5) * side)
            .collect();
        let half_diag = 0.5 * side * (self.dim as f64).sqrt();
        let mut d2: Vec<f64> = Vec::with_capacity(pool.len());
        let mut rep = pool[0];
        let mut best = f64::INFINITY;
        for &i in pool {
            let d = sq_dist(&c, self.cloud.point(i as usize));
            if d < best {
                best = d;
                rep = i;
            }
            d2.push(d);
        }
        // Any nearest neighbor of a location y in the cell lies within
        // d(c, X) + 2 |y - c| of the center.
        let bound = best.sqrt() + 2.0 * half_diag + self.slack;
        let bound2 = bound * bound;
        let cands: Box<[u32]> = pool
            .iter()
            .zip(&d2)
            .filter(|(_, &d)| d <= bound2)
            .map(|(&i, _)| i)
            .collect();
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            rep,
            level,
            cands,
            children: NONE,
        });
        self.coords.extend_from_slice(coords);
        id
    }

    /// Child of `node` in orthant `bits` (bit `k` set for the upper half along axis `k`).
    #[inline]
    fn child(&mut self, node: u32, bits: usize) -> u32 {
        let block = self.nodes[node as usize].children;
        if block != NONE {
            let id = self.slots[block as usize + bits];
            if id != NONE {
                return id;
            }
        }
        self.make_child(node, bits)
    }

    #[cold]
    fn make_child(&mut self, node: u32, bits: usize) -> u32 {
        let mut block = self.nodes[node as usize].children;
        if block == NONE {
            block = self.slots.len() as u32;
            self.slots.extend(std::iter::repeat(NONE).take(1 << self.dim));
            self.nodes[node as usize].children = block;
        }
        let dim = self.dim;
        let base = node as usize * dim;
        let cc: SmallVec<[i64; 4]> = (0..dim)
            .map(|k| 2 * self.coords[base + k] + ((bits >> k) & 1) as i64)
            .collect();
        let level = self.nodes[node as usize].level + 1;
        let pool = std::mem::take(&mut self.nodes[node as usize].cands);
        let id = self.push_node(level, &cc, &pool);
        self.nodes[node as usize].cands = pool;
        self.slots[block as usize + bits] = id;
        id
    }

    /// Orthant of `y` relative to the mid-planes of `node`.
    fn orthant(&self, node: u32, y: &[f64]) -> usize {
        let level = self.nodes[node as usize].level;
        let side = self.side(level);
        let base = node as usize * self.dim;
        let mut bits = 0;
        for (k, &yk) in y.iter().enumerate().take(self.dim) {
            let plane = self.origin[k] + (self.coords[base + k] as f64 + 0.5) * side;
            if yk >= plane {
                bits |= 1 << k;
            }
        }
        bits
    }

    /// Deepest node at or above `level` on the path to `y`.
    fn descend(&mut self, y: &[f64], level: u32) -> u32 {
        let mut node = 0u32;
        for _ in 0..level {
            let bits = self.orthant(node, y);
            node = self.child(node, bits);
        }
        node
    }

    /// Distance from `y` to the cloud.
    pub(crate) fn nearest(&mut self, y: &[f64]) -> f64 {
        if self.dim > TREE_MAX_DIM {
            let d2 = self
                .cloud
                .iter()
                .map(|x| sq_dist(y, x))
                .fold(f64::INFINITY, f64::min);
            return d2.sqrt();
        }
        let mut node = 0u32;
        loop {
            let n = &self.nodes[node as usize];
            if n.cands.len() <= LEAF_SIZE || n.level == MAX_LEVEL {
                let d2 = n
                    .cands
                    .iter()
                    .map(|&i| sq_dist(y, self.cloud.point(i as usize)))
                    .fold(f64::INFINITY, f64::min);
                return d2.sqrt();
            }
            let bits = self.orthant(node, y);
            node = self.child(node, bits);
        }
    }

    /// Largest distance from the segment `[x_i, x_j]` to the cloud if it exceeds `tau`,
    /// otherwise `tau`.
    pub(crate) fn segment_max_above(&mut self, i: usize, j: usize, tau: f64) -> f64 {
        match self.dim {
            1 => self.segment_max::<1>(i, j, tau),
            2 => self.segment_max::<2>(i, j, tau),
            3 => self.segment_max::<3>(i, j, tau),
            4 => self.segment_max::<4>(i, j, tau),
            d if d <= TREE_MAX_DIM => self.segment_max::<0>(i, j, tau),
            _ => {
                let a = self.cloud.point(i);
                let v: Vec<f64> = self.cloud.point(j).iter().zip(a).map(|(b, a)| b - a).collect();
                if v.iter().all(|&x| x == 0.0) {
                    return tau;
                }
                let all = &self.nodes[0].cands;
                let (_, d) = envelope_max(self.cloud, a, &v, all, 0.0, 1.0, &mut self.env);
                d.max(tau)
            }
        }
    }

    /// `D` fixes the dimension at compile time; `0` reads it at run time.
    fn segment_max<const D: usize>(&mut self, i: usize, j: usize, tau: f64) -> f64 {
        let dim = if D == 0 { self.dim } else { D };
        let cloud = self.cloud;
        let a = &cloud.point(i)[..dim];
        let b = &cloud.point(j)[..dim];
        // Scratch layout: v, then plane parameters, then up to dim + 2 cut points.
        let mut buf = std::mem::take(&mut self.buf);
        buf.clear();
        buf.resize(dim * (dim + 4), 0.0);
        let (v, rest) = buf.split_at_mut(dim);
        let (planes, pts) = rest.split_at_mut(dim);
        let mut len2 = 0.0;
        for k in 0..dim {
            v[k] = b[k] - a[k];
            len2 += v[k] * v[k];
        }
        if len2 == 0.0 {
            self.buf = buf;
            return tau;
        }
        let len = len2.sqrt();
        let mut best = tau;
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();

        // Start where cells are a quarter of the segment length, cut at that level's planes.
        let start = ((self.side0 / len).log2().floor().max(0.0) as u32 + 2).min(MAX_LEVEL);
        let side = self.sides[start as usize];
        let mut cuts: SmallVec<[f64; 8]> = SmallVec::new();
        cuts.push(0.0);
        cuts.push(1.0);
        for k in 0..dim {
            if v[k] == 0.0 {
                continue;
            }
            let (lo, hi) = if v[k] > 0.0 { (a[k], b[k]) } else { (b[k], a[k]) };
            let first = ((lo - self.origin[k]) / side).floor() as i64 + 1;
            let last = ((hi - self.origin[k]) / side).ceil() as i64 - 1;
            for m in first..=last {
                let s = (self.origin[k] + m as f64 * side - a[k]) / v[k];
                if s > 0.0 && s < 1.0 {
                    cuts.push(s);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut ym = [0.0f64; 16];
        let mut ymv: SmallVec<[f64; 16]> = SmallVec::new();
        for w in cuts.windows(2) {
            let sm = 0.5 * (w[0] + w[1]);
            let node = if dim <= 16 {
                for k in 0..dim {
                    ym[k] = a[k] + sm * v[k];
                }
                self.descend(&ym[..dim], start)
            } else {
                ymv.clear();
                ymv.extend((0..dim).map(|k| a[k] + sm * v[k]));
                self.descend(&ymv, start)
            };
            let ub2 = self.bound2::<D>(node, a, v, w[0], w[1]);
            if ub2 > best * best {
                stack.push(Piece {
                    node,
                    s0: w[0],
                    s1: w[1],
                    ub2,
                });
            }
        }
        // Most promising piece last, so it is explored first.
        stack.sort_by(|p, q| p.ub2.total_cmp(&q.ub2));

        let mut children = [Piece {
            node: 0,
            s0: 0.0,
            s1: 0.0,
            ub2: 0.0,
        }; 8];
        while let Some(piece) = stack.pop() {
            if piece.ub2 <= best * best {
                continue;
            }
            let n = &self.nodes[piece.node as usize];
            if n.cands.len() <= LEAF_SIZE || n.level == MAX_LEVEL {
                let (_, d) = envelope_max(cloud, a, v, &n.cands, piece.s0, piece.s1, &mut self.env);
                if d > best {
                    best = d;
                }
                continue;
            }
            // Split at the cell's mid-planes. An axis the segment runs parallel to fixes
            // its orthant bit; otherwise the bit follows the side of the crossing.
            let side = self.sides[n.level as usize];
            let base = piece.node as usize * dim;
            let mut fixed = 0usize;
            cuts.clear();
            cuts.push(piece.s0);
            for k in 0..dim {
                let plane = self.origin[k] + (self.coords[base + k] as f64 + 0.5) * side;
                if v[k] == 0.0 {
                    planes[k] = f64::NAN;
                    if a[k] >= plane {
                        fixed |= 1 << k;
                    }
                } else {
                    let s = (plane - a[k]) / v[k];
                    planes[k] = s;
                    if s > piece.s0 && s < piece.s1 {
                        cuts.push(s);
                    }
                }
            }
            cuts.push(piece.s1);
            cuts[1..].sort_by(f64::total_cmp);
            let ncut = cuts.len();
            for (c, &s) in cuts.iter().enumerate() {
                let y = &mut pts[c * dim..(c + 1) * dim];
                for k in 0..dim {
                    y[k] = a[k] + s * v[k];
                }
            }
            let rep_sq = |tree: &Self, node: u32, c: usize| {
                let r = &cloud.point(tree.nodes[node as usize].rep as usize)[..dim];
                let y = &pts[c * dim..(c + 1) * dim];
                let mut d = 0.0;
                for k in 0..dim {
                    let e = y[k] - r[k];
                    d += e * e;
                }
                d
            };
            let mut nc = 0;
            for c in 0..ncut - 1 {
                let (s0, s1) = (cuts[c], cuts[c + 1]);
                if s1 <= s0 {
                    continue;
                }
                let sm = 0.5 * (s0 + s1);
                let mut bits = fixed;
                for k in 0..dim {
                    let above = (v[k] > 0.0 && sm > planes[k]) || (v[k] < 0.0 && sm < planes[k]);
                    bits |= (above as usize) << k;
                }
                let node = self.child(piece.node, bits);
                let ub2 = rep_sq(self, node, c).max(rep_sq(self, node, c + 1));
                if ub2 > best * best {
                    let mut at = nc;
                    while at > 0 && children[at - 1].ub2 > ub2 {
                        children[at] = children[at - 1];
                        at -= 1;
                    }
                    children[at] = Piece { node, s0, s1, ub2 };
                    nc += 1;
                    if nc == children.len() {
                        stack.extend_from_slice(&children[..nc]);
                        nc = 0;
                    }
                }
            }
            stack.extend_from_slice(&children[..nc]);
        }
        self.stack = stack;
        self.buf = buf;
        best
    }

    fn bound2<const D: usize>(&self, node: u32, a: &[f64], v: &[f64], s0: f64, s1: f64) -> f64 {
        let dim = if D == 0 { self.dim } else { D };
        let r = &self.cloud.point(self.nodes[node as usize].rep as usize)[..dim];
        let (mut d0, mut d1) = (0.0, 0.0);
        for k in 0..dim {
            let e0 = a[k] + s0 * v[k] - r[k];
            let e1 = a[k] + s1 * v[k] - r[k];
            d0 += e0 * e0;
            d1 += e1 * e1;
        }
        f64::max(d0, d1)
    }
}

/// Simplices keyed by the grid bucket of their enclosing radius.
struct Buckets {
    pairs: Vec<Vec<(f32, u32, u32)>>,
    triples: Vec<Vec<(f32, [u32; 3])>>,
}

fn collect(cloud: &PointCloud, scales: &[f64], order: u8) -> Buckets {
    let max = *scales.last().expect("nonempty grid");
    let nb = scales.len();
    let mut pairs: Vec<Vec<(f32, u32, u32)>> = vec![Vec::new(); nb];
    let mut triples: Vec<Vec<(f32, [u32; 3])>> = vec![Vec::new(); nb];
    let bucket = |r: f64| {
        let b = scales.partition_point(|&s| s < r);
        (b < nb).then_some(b)
    };
    let index = SpatialIndex::new(cloud, 2.0 * max).expect("positive scale");
    let mut adjacency: Vec<Vec<u32>> = if order >= 3 {
        vec![Vec::new(); cloud.len()]
    } else {
        Vec::new()
    };
    index.for_each_pair_within(cloud, 2.0 * max, |i, j| {
        let half = 0.5 * sq_dist(cloud.point(i), cloud.point(j)).sqrt();
        if order >= 3 {
            adjacency[i].push(j as u32);
        }
        if half > 0.0 {
            if let Some(b) = bucket(half) {
                pairs[b].push((half as f32, i as u32, j as u32));
            }
        }
    });
    if order >= 3 {
        for list in &mut adjacency {
            list.sort_unstable();
        }
        for i in 0..cloud.len() {
            let ni = &adjacency[i];
            for (x, &j) in ni.iter().enumerate() {
                let nj = &adjacency[j as usize];
                for &k in &ni[x + 1..] {
                    if nj.binary_search(&k).is_err() {
                        continue;
                    }
                    let pts = [
                        cloud.point(i),
                        cloud.point(j as usize),
                        cloud.point(k as usize),
                    ];
                    let (_, r) = meb_of(&pts);
                    if r > 0.0 {
                        if let Some(b) = bucket(r) {
                            triples[b].push((r as f32, [i as u32, j, k]));
                        }
                    }
                }
            }
        }
    }
    Buckets { pairs, triples }
}

/// Barycentric sample points `(i a + j b + (n - i - j) c) / n` of a triangle.
pub(crate) fn triangle_samples(tri: [&[f64]; 3], n: usize, mut f: impl FnMut(&[f64])) {
    let dim = tri[0].len();
    let mut y = vec![0.0; dim];
    let nf = n as f64;
    for i in 0..=n {
        for j in 0..=n - i {
            let wa = i as f64 / nf;
            let wb = j as f64 / nf;
            let wc = (n - i - j) as f64 / nf;
            for k in 0..dim {
                y[k] = wa * tri[0][k] + wb * tri[1][k] + wc * tri[2][k];
            }
            f(&y);
        }
    }
}

/// Profile values on `scales`: the running maximum over admitted simplices.
pub(crate) fn sweep(cloud: &PointCloud, scales: &[f64], order: u8, triple_grid: usize) -> Vec<f64> {
    let mut buckets = collect(cloud, scales, order);
    let mut tree = CellTree::new(cloud);
    let mut running = 0.0f64;
    let mut values = Vec::with_capacity(scales.len());
    for b in 0..scales.len() {
        let mut tau = running;
        let pairs = &mut buckets.pairs[b];
        pairs.sort_unstable_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
        for &(_, i, j) in pairs.iter() {
            let (i, j) = (i as usize, j as usize);
            let half = 0.5 * sq_dist(cloud.point(i), cloud.point(j)).sqrt();
            // Every segment point is within half its length of an endpoint.
            if half <= tau {
                continue;
            }
            tau = tree.segment_max_above(i, j, tau);
        }
        let triples = &mut buckets.triples[b];
        triples.sort_unstable_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)));
        for &(_, [i, j, k]) in triples.iter() {
            let pts = [
                cloud.point(i as usize),
                cloud.point(j as usize),
                cloud.point(k as usize),
            ];
            let (_, r) = meb_of(&pts);
            if r <= tau {
                continue;
            }
            let mut best = tau;
            triangle_samples(pts, triple_grid, |y| {
                best = best.max(tree.nearest(y));
            });
            tau = best;
        }
        running = tau;
        values.push(running);
    }
    values
}
