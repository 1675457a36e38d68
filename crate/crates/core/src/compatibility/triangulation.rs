use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{cross, LatticeSet};

/// Triangulation using every point of the set, built incrementally in
/// lexicographic order.
pub fn default_triangulation(lattice: &LatticeSet) -> Result<Vec<[usize; 3]>> {
    let mut order: Vec<usize> = (0..lattice.len()).collect();
    order.sort_by_key(|&k| lattice.get(k));
    triangulate_in_order(lattice, &order)
}

/// Incremental triangulation with a seeded random insertion order. Different
/// seeds generally give different triangulations of the same set.
pub fn random_triangulation(lattice: &LatticeSet, seed: u64) -> Result<Vec<[usize; 3]>> {
    let mut order: Vec<usize> = (0..lattice.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    triangulate_in_order(lattice, &order)
}

/// Inserts the points in `order` one at a time, splitting the containing
/// triangle (or edge) or fanning to the visible hull edges. All triangles are
/// counterclockwise and every point is a vertex.
pub fn triangulate_in_order(lattice: &LatticeSet, order: &[usize]) -> Result<Vec<[usize; 3]>> {
    let pts = lattice.points();
    if pts.len() < 3 || order.len() != pts.len() {
        return Err(Error::DegenerateInput(
            "triangulation needs at least 3 points and a full insertion order".into(),
        ));
    }
    let orient = |a: usize, b: usize, c: usize| cross(pts[a], pts[b], pts[c]);

    // leading collinear run
    let mut run = vec![order[0], order[1]];
    let mut next = 2;
    while next < order.len() && orient(order[0], order[1], order[next]) == 0 {
        run.push(order[next]);
        next += 1;
    }
    if next == order.len() {
        return Err(Error::DegenerateInput(
            "all lattice points are collinear".into(),
        ));
    }
    let apex = order[next];
    let base = pts[run[0]];
    let dir = (pts[run[1]].i - base.i, pts[run[1]].j - base.j);
    run.sort_by_key(|&k| (pts[k].i - base.i) * dir.0 + (pts[k].j - base.j) * dir.1);
    let mut tris: Vec<[usize; 3]> = run
        .windows(2)
        .map(|w| ccw([w[0], w[1], apex], &orient))
        .collect();

    for &p in &order[next + 1..] {
        insert(&mut tris, p, &orient);
    }
    Ok(tris)
}

fn ccw(t: [usize; 3], orient: &impl Fn(usize, usize, usize) -> i64) -> [usize; 3] {
    if orient(t[0], t[1], t[2]) > 0 {
        t
    } else {
        [t[0], t[2], t[1]]
    }
}

fn insert(tris: &mut Vec<[usize; 3]>, p: usize, orient: &impl Fn(usize, usize, usize) -> i64) {
    for t in 0..tris.len() {
        let [a, b, c] = tris[t];
        let s = [orient(a, b, p), orient(b, c, p), orient(c, a, p)];
        if s.iter().any(|&v| v < 0) {
            continue;
        }
        match s.iter().position(|&v| v == 0) {
            None => {
                tris[t] = [a, b, p];
                tris.push([b, c, p]);
                tris.push([c, a, p]);
            }
            Some(e) => {
                // p on edge (u, v) of this triangle, opposite corner w
                let (u, v, w) = match e {
                    0 => (a, b, c),
                    1 => (b, c, a),
                    _ => (c, a, b),
                };
                tris[t] = [u, p, w];
                tris.push([p, v, w]);
                if let Some(n) = tris.iter().position(|tr| has_edge(tr, v, u)) {
                    let x = tris[n].iter().copied().find(|&q| q != u && q != v).unwrap();
                    tris[n] = [v, p, x];
                    tris.push([p, u, x]);
                }
            }
        }
        return;
    }

    // outside: fan to every strictly visible boundary edge
    let directed: HashSet<(usize, usize)> = tris
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .collect();
    let mut visible: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .filter(|&(u, v)| !directed.contains(&(v, u)) && orient(u, v, p) < 0)
        .collect();
    visible.sort_unstable();
    for (u, v) in visible {
        tris.push([v, u, p]);
    }
}

fn has_edge(t: &[usize; 3], u: usize, v: usize) -> bool {
    (0..3).any(|k| t[k] == u && t[(k + 1) % 3] == v)
}
