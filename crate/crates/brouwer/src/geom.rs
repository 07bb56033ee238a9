//! Planar segment distances and a sweep over axis-aligned bounding boxes.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Seg {
    /// Curve (or copy) the segment belongs to.
    pub owner: usize,
    /// Index of the segment along its curve.
    pub index: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Seg {
    pub fn new(owner: usize, index: usize, a: [f64; 2], b: [f64; 2]) -> Self {
        Self { owner, index, a, b }
    }

    pub fn xmin(&self) -> f64 {
        self.a[0].min(self.b[0])
    }

    pub fn xmax(&self) -> f64 {
        self.a[0].max(self.b[0])
    }

    fn ymin(&self) -> f64 {
        self.a[1].min(self.b[1])
    }

    fn ymax(&self) -> f64 {
        self.a[1].max(self.b[1])
    }

    pub fn shifted(&self, dx: f64) -> Self {
        Self { a: [self.a[0] + dx, self.a[1]], b: [self.b[0] + dx, self.b[1]], ..*self }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn point_seg(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    q[0].hypot(q[1])
}

/// Euclidean distance between two closed segments; zero if they cross.
pub(crate) fn seg_dist(s: &Seg, t: &Seg) -> f64 {
    let d1 = cross(s.a, s.b, t.a);
    let d2 = cross(s.a, s.b, t.b);
    let d3 = cross(t.a, t.b, s.a);
    let d4 = cross(t.a, t.b, s.b);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_seg(s.a, t.a, t.b).min(point_seg(s.b, t.a, t.b)).min(point_seg(t.a, s.a, s.b)).min(point_seg(t.b, s.a, s.b))
}

/// Calls `visit` for every pair of segments whose distance is below `margin`,
/// excluding pairs rejected by `skip`.
pub(crate) fn close_pairs<S, V>(segs: &mut [Seg], margin: f64, skip: S, mut visit: V)
where
    S: Fn(&Seg, &Seg) -> bool,
    V: FnMut(&Seg, &Seg, f64),
{
    segs.sort_by(|a, b| a.xmin().total_cmp(&b.xmin()));
    let mut active: Vec<usize> = Vec::new();
    for i in 0..segs.len() {
        let s = segs[i];
        let lo = s.xmin() - margin;
        active.retain(|&k| segs[k].xmax() >= lo);
        for &k in &active {
            let t = &segs[k];
            if t.ymax() + margin < s.ymin() || s.ymax() + margin < t.ymin() || skip(&s, t) {
                continue;
            }
            let d = seg_dist(&s, t);
            if d < margin {
                visit(&s, t, d);
            }
        }
        active.push(i);
    }
}
