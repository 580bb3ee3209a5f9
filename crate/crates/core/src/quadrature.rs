//! Fixed-order Gauss-Legendre rules used for the initial-data integrals.

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`; exact for degree <= 9.
#[inline]
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let s: f64 = GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&t, &wt)| wt * f(mid + half * t))
        .sum();
    s * half
}

/// Composite rule over consecutive breakpoints.
pub fn composite_gauss5(f: impl Fn(f64) -> f64, breakpoints: &[f64]) -> f64 {
    breakpoints.windows(2).map(|c| gauss5(&f, c[0], c[1])).sum()
}

/// Trapezoid weights on a uniform grid.
#[inline]
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}
