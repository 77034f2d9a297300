//! Bounding-box tree over the points of one unit loop.
//!
//! Nodes cover contiguous index ranges, so leaves follow the loop and
//! neighbouring points (which have nearly equal propertime intervals) are
//! visited together. All ball queries work in `s = sqrt(T)`: the scaled point
//! is `x + s y_k` and the ball has radius `R` around the origin.

/// Points per leaf.
const LEAF: usize = 16;
/// Relative slack applied to pruning bounds.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Node<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
    start: u32,
    end: u32,
    /// Index of the right child; 0 marks a leaf (the left child is `self + 1`).
    right: u32,
}

#[derive(Debug, Clone)]
pub struct LoopTree<const D: usize> {
    points: Vec<[f64; D]>,
    nodes: Vec<Node<D>>,
}

#[inline]
pub(crate) fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for c in 0..D {
        s += a[c] * b[c];
    }
    s
}

/// Roots `s_- <= s_+` of `|x + s y|^2 = R^2` given `c = |x|^2 - R^2`,
/// computed without cancellation.
#[inline]
pub(crate) fn ball_roots<const D: usize>(x: &[f64; D], c: f64, y: &[f64; D]) -> Option<(f64, f64)> {
    let y2 = dot(y, y);
    if y2 == 0.0 {
        return None;
    }
    let b = dot(x, y);
    let disc = b * b - y2 * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    if b <= 0.0 {
        let q = sq - b;
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        Some((c / q, q / y2))
    } else {
        let q = -b - sq;
        Some((q / y2, c / q))
    }
}

impl<const D: usize> LoopTree<D> {
    /// Build from point-major coordinates (`points.len() == N * D`).
    pub fn new(points: &[f64]) -> Self {
        assert!(!points.is_empty() && points.len() % D == 0);
        let points: Vec<[f64; D]> = points
            .chunks_exact(D)
            .map(|p| std::array::from_fn(|c| p[c]))
            .collect();
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * points.len() / LEAF + 1),
            points,
        };
        tree.build(0, tree.points.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(Node {
            lo: [0.0; D],
            hi: [0.0; D],
            start: start as u32,
            end: end as u32,
            right: 0,
        });
        if end - start <= LEAF {
            let mut lo = [f64::INFINITY; D];
            let mut hi = [f64::NEG_INFINITY; D];
            for p in &self.points[start..end] {
                for c in 0..D {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
            self.nodes[idx].lo = lo;
            self.nodes[idx].hi = hi;
        } else {
            let mid = start + (end - start) / 2;
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            let (l, r) = (self.nodes[left], self.nodes[right]);
            let node = &mut self.nodes[idx];
            for c in 0..D {
                node.lo[c] = l.lo[c].min(r.lo[c]);
                node.hi[c] = l.hi[c].max(r.hi[c]);
            }
            node.right = right as u32;
        }
        idx
    }

    pub fn points(&self) -> &[[f64; D]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    fn children(&self, i: usize) -> Option<(usize, usize)> {
        let r = self.nodes[i].right as usize;
        (r != 0).then_some((i + 1, r))
    }

    #[inline]
    fn leaf_points(&self, i: usize) -> &[[f64; D]] {
        let n = &self.nodes[i];
        &self.points[n.start as usize..n.end as usize]
    }

    #[inline]
    fn min_dot_bound(&self, i: usize, n: &[f64; D]) -> f64 {
        let node = &self.nodes[i];
        let mut s = 0.0;
        for c in 0..D {
            s += (n[c] * node.lo[c]).min(n[c] * node.hi[c]);
        }
        s
    }

    #[inline]
    fn dist_to_origin(&self, i: usize) -> f64 {
        let node = &self.nodes[i];
        let mut s = 0.0;
        for c in 0..D {
            let d = if node.lo[c] > 0.0 {
                node.lo[c]
            } else if node.hi[c] < 0.0 {
                -node.hi[c]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// `min_k n . y_k`.
    pub fn min_dot(&self, n: &[f64; D]) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            if self.min_dot_bound(i, n) >= best {
                continue;
            }
            match self.children(i) {
                None => {
                    for p in self.leaf_points(i) {
                        best = best.min(dot(n, p));
                    }
                }
                Some((l, r)) => {
                    if self.min_dot_bound(l, n) <= self.min_dot_bound(r, n) {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
        }
        best
    }

    /// Pruning data for ball queries at `x`.
    fn ball_frame(x: &[f64; D], radius: f64) -> BallFrame<D> {
        let xn = dot(x, x).sqrt();
        let c = dot(x, x) - radius * radius;
        let dir = if c > 0.0 { std::array::from_fn(|k| x[k] / xn) } else { [0.0; D] };
        BallFrame { c, xn, dir, radius }
    }

    /// Lower bound of `s_-` and upper bound of `s_+` over a node; `None` if no
    /// point of the node can enter the ball.
    #[inline]
    fn ball_bounds(&self, i: usize, f: &BallFrame<D>) -> Option<(f64, f64)> {
        let dist = self.dist_to_origin(i);
        let hi = if dist > 0.0 { (f.radius + f.xn) / dist * (1.0 + SLACK) } else { f64::INFINITY };
        if f.c <= 0.0 {
            return Some((f64::NEG_INFINITY, hi));
        }
        // the ball lies in the half space p . x_hat <= R, so entering needs
        // s (-y . x_hat) >= |x| - R
        let toward = -self.min_dot_bound(i, &f.dir);
        if toward <= 0.0 {
            return None;
        }
        Some(((f.xn - f.radius) / toward * (1.0 - SLACK), hi))
    }

    /// Smallest `s >= floor` at which some scaled point lies in the ball, i.e.
    /// `min_k max(s_-, floor)` over points with `s_+ >= floor`.
    pub fn first_entry(&self, x: &[f64; D], radius: f64, floor: f64) -> Option<f64> {
        let f = Self::ball_frame(x, radius);
        let mut best = f64::INFINITY;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            let Some((lo, hi)) = self.ball_bounds(i, &f) else { continue };
            if hi < floor || lo.max(floor) >= best {
                continue;
            }
            match self.children(i) {
                None => {
                    for p in self.leaf_points(i) {
                        if let Some((sm, sp)) = ball_roots(x, f.c, p) {
                            if sp >= floor {
                                best = best.min(sm.max(floor));
                            }
                        }
                    }
                    if best == floor {
                        break;
                    }
                }
                Some((l, r)) => {
                    let key = |j| self.ball_bounds(j, &f).map_or(f64::INFINITY, |(lo, _)| lo);
                    if key(l) <= key(r) {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Largest nonnegative `s_+` over all points, the last moment the scaled
    /// loop has a point in the ball.
    pub fn last_exit(&self, x: &[f64; D], radius: f64) -> Option<f64> {
        let f = Self::ball_frame(x, radius);
        let mut best = f64::NEG_INFINITY;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            let Some((_, hi)) = self.ball_bounds(i, &f) else { continue };
            if hi <= best {
                continue;
            }
            match self.children(i) {
                None => {
                    for p in self.leaf_points(i) {
                        if let Some((_, sp)) = ball_roots(x, f.c, p) {
                            if sp >= 0.0 {
                                best = best.max(sp);
                            }
                        }
                    }
                }
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Union of `[s_-, s_+] ∩ [floor, ∞)` over all points, sorted and merged,
    /// written to `out` as `(lo, hi)` pairs in `s`.
    pub fn union(&self, x: &[f64; D], radius: f64, floor: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let f = Self::ball_frame(x, radius);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        let mut run: Option<(f64, f64)> = None;
        while let Some(i) = stack.pop() {
            let Some((_, hi)) = self.ball_bounds(i, &f) else { continue };
            if hi < floor {
                continue;
            }
            match self.children(i) {
                None => {
                    for p in self.leaf_points(i) {
                        let Some((sm, sp)) = ball_roots(x, f.c, p) else { continue };
                        if sp < floor {
                            continue;
                        }
                        let lo = sm.max(floor);
                        run = match run {
                            Some((a, b)) if lo <= b && sp >= a => Some((a.min(lo), b.max(sp))),
                            Some(prev) => {
                                out.push(prev);
                                Some((lo, sp))
                            }
                            None => Some((lo, sp)),
                        };
                    }
                }
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out.extend(run);
        if out.len() > 1 {
            out.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut w = 0;
            for r in 1..out.len() {
                if out[r].0 <= out[w].1 {
                    out[w].1 = out[w].1.max(out[r].1);
                } else {
                    w += 1;
                    out[w] = out[r];
                }
            }
            out.truncate(w + 1);
        }
    }
}

struct BallFrame<const D: usize> {
    c: f64,
    xn: f64,
    /// `x_hat` when `x` is outside the ball.
    dir: [f64; D],
    radius: f64,
}
