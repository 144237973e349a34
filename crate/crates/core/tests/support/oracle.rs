//! Brute-force Bayes forward recursion used as a test oracle.
//!
//! Shares nothing with the library's filter: rows are expanded to explicit
//! 0/1 vectors, kernels are dense `Vec<Vec<f64>>` built from the expanded
//! rows, and the update multiplies plain Gaussian densities and divides by
//! their sum. No log space, no bit tricks.

#![allow(dead_code)]

/// Every admissible row of `owner`, in the library's enumeration order:
/// bit `k` of the index fills the `k`-th non-owner column.
pub fn expanded_rows(order: usize, owner: usize) -> Vec<Vec<u8>> {
    let cols: Vec<usize> = (0..order).filter(|&c| c != owner).collect();
    (0..1usize << (order - 1))
        .map(|i| {
            let mut row = vec![0u8; order];
            for (k, &c) in cols.iter().enumerate() {
                row[c] = ((i >> k) & 1) as u8;
            }
            row
        })
        .collect()
}

/// `kernel[to][from]` for independent flips with probability `p_c`.
pub fn flip_kernel(order: usize, owner: usize, p_c: f64) -> Vec<Vec<f64>> {
    let rows = expanded_rows(order, owner);
    rows.iter()
        .map(|to| {
            rows.iter()
                .map(|from| {
                    let d = to.iter().zip(from).filter(|(a, b)| a != b).count() as i32;
                    p_c.powi(d) * (1.0 - p_c).powi(order as i32 - 1 - d)
                })
                .collect()
        })
        .collect()
}

pub fn identity_kernel(order: usize) -> Vec<Vec<f64>> {
    let size = 1usize << (order - 1);
    (0..size)
        .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn gaussian_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let r = (x - mean) / sigma;
    (-0.5 * r * r).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// One predict + update for a single node.
pub fn forward_step(
    belief: &[f64],
    kernel: &[Vec<f64>],
    owner: usize,
    z: &[f64],
    y: &[f64],
    sigma: f64,
) -> Vec<f64> {
    let order = z.len();
    let rows = expanded_rows(order, owner);
    let prior: Vec<f64> = kernel
        .iter()
        .map(|k_row| k_row.iter().zip(belief).map(|(k, b)| k * b).sum())
        .collect();
    let joint: Vec<f64> = rows
        .iter()
        .zip(&prior)
        .map(|(row, p)| {
            let mean: f64 = row.iter().zip(z).map(|(&a, zc)| a as f64 * zc).sum();
            gaussian_pdf(y[owner], mean, sigma) * p
        })
        .collect();
    let evidence: f64 = joint.iter().sum();
    joint.iter().map(|j| j / evidence).collect()
}

/// Posterior of every node after every step, starting from uniform beliefs.
/// `p_c_at(t)` returns the flip probability of the kernel used at step `t`
/// (`None` for identity).
pub fn run_uniform(
    order: usize,
    sigma: f64,
    observations: &[(Vec<f64>, Vec<f64>)],
    p_c_at: impl Fn(usize) -> Option<f64>,
) -> Vec<Vec<Vec<f64>>> {
    let size = 1usize << (order - 1);
    let mut beliefs = vec![vec![1.0 / size as f64; size]; order];
    let mut history = Vec::with_capacity(observations.len());
    for (k, (z, y)) in observations.iter().enumerate() {
        let t = k + 1;
        for (owner, belief) in beliefs.iter_mut().enumerate() {
            let kernel = match p_c_at(t) {
                Some(p) => flip_kernel(order, owner, p),
                None => identity_kernel(order),
            };
            *belief = forward_step(belief, &kernel, owner, z, y, sigma);
        }
        history.push(beliefs.clone());
    }
    history
}
