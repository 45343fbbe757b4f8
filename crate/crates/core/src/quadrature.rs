//! Gauss–Legendre rules on `[-1, 1]`.
//!
//! Nodes and weights for 1..=16 points are computed once by Newton iteration on
//! the Legendre recurrence and cached. An `n`-point rule integrates polynomials
//! of degree `2n - 1` exactly, so the largest table covers degree 31.

use std::sync::OnceLock;

pub const MAX_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static TABLES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();

/// Rule with `n` nodes, `1 <= n <= MAX_NODES`.
pub fn rule(n: usize) -> &'static GaussLegendre {
    assert!((1..=MAX_NODES).contains(&n), "no Gauss-Legendre table for {n} nodes");
    &TABLES.get_or_init(|| (1..=MAX_NODES).map(compute).collect())[n - 1]
}

/// Smallest rule that is exact for polynomials of the given degree.
pub fn nodes_for_degree(degree: usize) -> usize {
    (degree + 2) / 2
}

// P_n and P_n' at x via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi's initial guess for the i-th root, counted from the right.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}
