/// Points per interval of the composite Gauss-Legendre rule.
pub const GAUSS_POINTS: usize = 4;

const NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// (node, weight) pairs of the 4-point Gauss rule on [a,b].
pub fn gauss_points(a: f64, b: f64) -> [(f64, f64); 4] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    std::array::from_fn(|i| (mid + half * NODES[i], half * WEIGHTS[i]))
}

/// Sub-intervals per step of length h for a temporal weight varying on `scale`.
pub fn pieces_per_step(step: f64, scale: f64) -> usize {
    ((128.0 * step / scale).ceil() as usize).max(1)
}

/// Composite 4-point Gauss on `pieces` equal parts of [a,b]: (piece, node, weight).
pub fn composite_points(a: f64, b: f64, pieces: usize) -> impl Iterator<Item = (usize, f64, f64)> {
    let len = (b - a) / pieces as f64;
    (0..pieces).flat_map(move |p| {
        let lo = a + len * p as f64;
        let hi = if p + 1 == pieces { b } else { lo + len };
        gauss_points(lo, hi).into_iter().map(move |(t, w)| (p, t, w))
    })
}

/// Weights W_i with ∫_0^1 p(u)·u^{β−1} du = Σ W_i p(x_i) for every cubic p,
/// x_i the Gauss nodes mapped to [0,1].
pub(crate) fn power_weights(beta: f64) -> [f64; 4] {
    let x: [f64; 4] = std::array::from_fn(|i| 0.5 * (1.0 + NODES[i]));
    // Vandermonde system Σ_i W_i x_i^n = 1/(n+β), n = 0..3
    let mut a = [[0.0; 5]; 4];
    for (n, row) in a.iter_mut().enumerate() {
        for i in 0..4 {
            row[i] = x[i].powi(n as i32);
        }
        row[4] = 1.0 / (n as f64 + beta);
    }
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("non-empty range");
        a.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..5 {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut w = [0.0; 4];
    for r in (0..4).rev() {
        let tail: f64 = (r + 1..4).map(|c| a[r][c] * w[c]).sum();
        w[r] = (a[r][4] - tail) / a[r][r];
    }
    w
}

/// Reference rule for tests: [a,b] split into 8 equal pieces, the first one
/// graded geometrically toward a, 4 Gauss points on every piece.
#[cfg(test)]
pub(crate) fn reference_points(a: f64, b: f64) -> Vec<(f64, f64)> {
    let piece = (b - a) / 8.0;
    let mut out = Vec::new();
    for j in 1..8 {
        out.extend(gauss_points(a + piece * j as f64, a + piece * (j + 1) as f64));
    }
    let mut hi = a + piece;
    for _ in 0..60 {
        let lo = a + 0.5 * (hi - a);
        out.extend(gauss_points(lo, hi));
        hi = lo;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weights_integrate_cubics() {
        for beta in [1.2, 1.5, 2.6, 2.95] {
            let w = power_weights(beta);
            let x: [f64; 4] = std::array::from_fn(|i| 0.5 * (1.0 + NODES[i]));
            for n in 0..=3 {
                let q: f64 = (0..4).map(|i| w[i] * x[i].powi(n)).sum();
                assert!((q - 1.0 / (n as f64 + beta)).abs() <= 1e-14);
            }
            // smooth non-polynomial integrand: ∫_0^1 e^u u^{β−1} du by a fine midpoint sum
            let fine: f64 = (0..200_000)
                .map(|j| {
                    let u = (j as f64 + 0.5) / 200_000.0;
                    u.exp() * u.powf(beta - 1.0) / 200_000.0
                })
                .sum();
            let q: f64 = (0..4).map(|i| w[i] * x[i].exp()).sum();
            assert!((q - fine).abs() <= 1e-5, "{q} vs {fine}");
        }
    }

    #[test]
    fn exact_for_degree_seven() {
        for p in 0..=7 {
            let q: f64 = gauss_points(0.5, 2.0).iter().map(|(t, w)| w * t.powi(p)).sum();
            let exact = (2f64.powi(p + 1) - 0.5f64.powi(p + 1)) / (p + 1) as f64;
            assert!((q - exact).abs() <= 1e-14 * exact.abs().max(1.0), "p = {p}");
        }
    }
}
