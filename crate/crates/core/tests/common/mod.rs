//! Reference implementations shared by the integration tests. They are
//! deliberately naive and do not call into the library's own geometry or
//! metric code.

#![allow(dead_code)]

use funcmapper::model::Aabb;

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

pub fn vertices(b: &Aabb) -> Vec<P3> {
    let mut out = Vec::with_capacity(8);
    for i in 0..8 {
        out.push([
            if i & 1 == 0 { b.min[0] } else { b.max[0] },
            if i & 2 == 0 { b.min[1] } else { b.max[1] },
            if i & 4 == 0 { b.min[2] } else { b.max[2] },
        ]);
    }
    out
}

/// The 12 edges as pairs of vertices differing in exactly one bit.
pub fn edges(b: &Aabb) -> Vec<(P3, P3)> {
    let v = vertices(b);
    let mut out = Vec::with_capacity(12);
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            if i & bit == 0 {
                out.push((v[i], v[i | bit]));
            }
        }
    }
    out
}

fn point_box(p: P3, b: &Aabb) -> f64 {
    let q = [
        p[0].clamp(b.min[0], b.max[0]),
        p[1].clamp(b.min[1], b.max[1]),
        p[2].clamp(b.min[2], b.max[2]),
    ];
    norm(sub(p, q))
}

/// Closest distance between segments p1q1 and p2q2.
fn segment_segment(p1: P3, q1: P3, p2: P3, q2: P3) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(d1, d1);
    let e = dot(d2, d2);
    let f = dot(d2, r);
    let eps = 1e-12;
    let (s, t);
    if a <= eps && e <= eps {
        return norm(r);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(d1, r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(d1, d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = add(p1, scale(d1, s));
    let c2 = add(p2, scale(d2, t));
    norm(sub(c1, c2))
}

/// Separating-axis test on vertex projections.
fn intersects(a: &Aabb, b: &Aabb) -> bool {
    let (va, vb) = (vertices(a), vertices(b));
    (0..3).all(|axis| {
        let lo_a = va.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
        let hi_a = va.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
        let lo_b = vb.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
        let hi_b = vb.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
        lo_a <= hi_b && lo_b <= hi_a
    })
}

/// Minimum distance between two boxes by feature enumeration: vertex against
/// solid box in both directions, and every edge pair.
pub fn box_distance(a: &Aabb, b: &Aabb) -> f64 {
    if intersects(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for v in vertices(a) {
        best = best.min(point_box(v, b));
    }
    for v in vertices(b) {
        best = best.min(point_box(v, a));
    }
    for (p1, q1) in edges(a) {
        for (p2, q2) in edges(b) {
            best = best.min(segment_segment(p1, q1, p2, q2));
        }
    }
    best
}

/// Plan-view distance: both boxes flattened onto the z = 0 plane.
pub fn plan_distance(a: &Aabb, b: &Aabb) -> f64 {
    let flat = |x: &Aabb| Aabb::new([x.min[0], x.min[1], 0.0], [x.max[0], x.max[1], 0.0]);
    box_distance(&flat(a), &flat(b))
}

/// Recall by counting, for each gold item, whether it appears among the
/// first `k` predictions.
pub fn recall_oracle<T: PartialEq>(predicted: &[T], gold: &[T], k: usize) -> f64 {
    let window = &predicted[..k.min(predicted.len())];
    let mut hits = 0usize;
    for g in gold {
        let mut found = false;
        for p in window {
            if p == g {
                found = true;
            }
        }
        if found {
            hits += 1;
        }
    }
    hits as f64 / gold.len() as f64
}

/// Every ordered selection without repetition of `0..n`, of every length.
pub fn ordered_lists(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for list in &frontier {
            for i in 0..n {
                if !list.contains(&i) {
                    let mut l: Vec<usize> = list.clone();
                    l.push(i);
                    next.push(l);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Non-empty subsets of `0..n` with at most `max` members.
pub fn small_subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}
