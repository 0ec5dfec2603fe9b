//! Reference implementations used as oracles. They favor directness over
//! speed and share no code with the library beyond the graph accessors.

#![allow(dead_code)]

use atlas::graph::{Graph, GraphBuilder};
use atlas::rng::Rng;
use rand::Rng as _;

/// `(1/2m) Σ_ij [A_ij − γ k_i k_j / 2m] δ(c_i, c_j)` over a dense adjacency.
pub fn naive_modularity(g: &Graph, assign: &[u32], gamma: f64) -> f64 {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (u, row) in a.iter_mut().enumerate() {
        for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
            row[v as usize] = w;
        }
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assign[i] == assign[j] {
                q += a[i][j] - gamma * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, n: usize, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, n, max.max(c), cur, out);
            cur.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut cur = vec![0];
    rec(1, n, 0, &mut cur, &mut out);
    out
}

/// A random spanning tree plus each remaining pair with probability `p`.
pub fn random_connected_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut b = GraphBuilder::new(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        b.add_edge(u, v).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                b.add_edge(u, v).unwrap();
            }
        }
    }
    b.build()
}

pub fn entropy_oracle(a: &[u32]) -> f64 {
    let n = a.len() as f64;
    let kmax = a.iter().copied().max().map_or(0, |m| m + 1);
    let mut h = 0.0;
    for c in 0..kmax {
        let count = a.iter().filter(|&&x| x == c).count() as f64;
        if count > 0.0 {
            h -= count / n * (count / n).ln();
        }
    }
    h
}

/// Mutual information from a contingency table filled by nested loops.
pub fn mi_oracle(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().copied().max().map_or(0, |m| m + 1);
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let mut nxy = 0.0;
            let mut nx = 0.0;
            let mut ny = 0.0;
            for i in 0..a.len() {
                if a[i] == x {
                    nx += 1.0;
                }
                if b[i] == y {
                    ny += 1.0;
                }
                if a[i] == x && b[i] == y {
                    nxy += 1.0;
                }
            }
            if nxy > 0.0 {
                mi += nxy / n * (n * nxy / (nx * ny)).ln();
            }
        }
    }
    mi
}

pub fn nmi_oracle(a: &[u32], b: &[u32]) -> f64 {
    let d = entropy_oracle(a) + entropy_oracle(b);
    if d == 0.0 {
        0.0
    } else {
        2.0 * mi_oracle(a, b) / d
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}
