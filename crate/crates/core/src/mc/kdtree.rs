//! Static k-d tree for k-nearest-neighbor distance queries.

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { lo: usize, hi: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// A k-d tree over row-major points of a fixed dimension.
#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim));
        let n = points.len() / dim;
        let mut tree = Self {
            points,
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn coord(&self, i: usize, d: usize) -> f64 {
        self.points[i * self.dim + d]
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        if hi - lo <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { lo, hi });
            return id;
        }
        // split on the widest coordinate
        let mut best = (0, -1.0);
        for d in 0..self.dim {
            let (mn, mx) = self.order[lo..hi].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                let v = self.coord(i, d);
                (a.min(v), b.max(v))
            });
            if mx - mn > best.1 {
                best = (d, mx - mn);
            }
        }
        let dim = best.0;
        let mid = lo + (hi - lo) / 2;
        let points = self.points;
        let stride = self.dim;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a * stride + dim].total_cmp(&points[b * stride + dim])
        });
        let value = self.coord(self.order[mid], dim);
        self.nodes.push(Node::Leaf { lo, hi });
        let left = self.build(lo, mid);
        let right = self.build(mid, hi);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Euclidean distance from point `i` to its `k`-th nearest other point.
    pub fn kth_neighbor_distance(&self, i: usize, k: usize) -> f64 {
        assert!(k >= 1 && k < self.len());
        let q = &self.points[i * self.dim..(i + 1) * self.dim];
        // sorted ascending, squared distances
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        self.search(0, q, i, k, &mut best);
        best[k - 1].sqrt()
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, k: usize, best: &mut Vec<f64>) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for &j in &self.order[lo..hi] {
                    if j == skip {
                        continue;
                    }
                    let p = &self.points[j * self.dim..(j + 1) * self.dim];
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if best.len() < k || d2 < best[k - 1] {
                        let pos = best.partition_point(|&v| v <= d2);
                        best.insert(pos, d2);
                        best.truncate(k);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, k, best);
                if best.len() < k || diff * diff < best[k - 1] {
                    self.search(far, q, skip, k, best);
                }
            }
        }
    }
}
