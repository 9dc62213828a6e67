//! Finite-difference first-derivative operator on a uniform grid.
//!
//! Interior rows use the centered `ORDER + 1` point stencil; the first and
//! last `ORDER / 2` rows use biased stencils over the `ORDER + 1` nodes at
//! the edge, all of formal order `ORDER`.

use num_complex::Complex64;

/// Formal accuracy of every stencil row.
pub const ORDER: usize = 8;
const HALF: usize = ORDER / 2;
const WIDTH: usize = ORDER + 1;
/// Derivative orders available at the two end nodes.
pub const EDGE_ORDERS: usize = 4;

/// Finite-difference weights for the `m`-th derivative at `x0` from the
/// given nodes (Fornberg's recursion). Returns one weight per node.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for the k-th derivative
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeStencil {
    /// Centered weights for offsets `-HALF..=HALF`, unit spacing.
    interior: [f64; WIDTH],
    /// `boundary[i]` holds the weights of row `i` over nodes `0..WIDTH`.
    boundary: [[f64; WIDTH]; HALF],
    /// One-sided weights for derivatives `0..EDGE_ORDERS` at node 0.
    edge: [[f64; WIDTH]; EDGE_ORDERS],
    inv_h: f64,
    n: usize,
}

impl DerivativeStencil {
    /// Smallest grid the operator supports.
    pub const MIN_POINTS: usize = 2 * WIDTH;

    pub fn new(n: usize, spacing: f64) -> Self {
        assert!(n >= WIDTH, "grid too small for the derivative stencil");
        let offsets: Vec<f64> = (0..WIDTH).map(|j| j as f64 - HALF as f64).collect();
        let w = fornberg_weights(0.0, &offsets, 1);
        let mut interior = [0.0; WIDTH];
        interior.copy_from_slice(&w);
        // exact antisymmetry of the centered stencil
        for j in 0..HALF {
            let a = 0.5 * (interior[WIDTH - 1 - j] - interior[j]);
            interior[WIDTH - 1 - j] = a;
            interior[j] = -a;
        }
        interior[HALF] = 0.0;

        let nodes: Vec<f64> = (0..WIDTH).map(|j| j as f64).collect();
        let mut boundary = [[0.0; WIDTH]; HALF];
        for (i, row) in boundary.iter_mut().enumerate() {
            row.copy_from_slice(&fornberg_weights(i as f64, &nodes, 1));
            // constants differentiate to exactly zero
            let sum: f64 = row.iter().sum();
            row[i] -= sum;
        }
        let mut edge = [[0.0; WIDTH]; EDGE_ORDERS];
        for (m, row) in edge.iter_mut().enumerate() {
            row.copy_from_slice(&fornberg_weights(0.0, &nodes, m));
        }
        Self {
            interior,
            boundary,
            edge,
            inv_h: 1.0 / spacing,
            n,
        }
    }

    /// Number of nodes at each edge touched by a non-centered row. Outside
    /// this strip the operator is skew with respect to uniform weights.
    pub fn closure_width() -> usize {
        WIDTH
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(f.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..HALF {
            let mut lo = Complex64::new(0.0, 0.0);
            let mut hi = Complex64::new(0.0, 0.0);
            for j in 0..WIDTH {
                lo += f[j] * self.boundary[i][j];
                // mirrored row: d/dk flips sign under k -> -k
                hi -= f[n - 1 - j] * self.boundary[i][j];
            }
            out[i] = lo * self.inv_h;
            out[n - 1 - i] = hi * self.inv_h;
        }
        for i in HALF..n - HALF {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, c) in self.interior.iter().enumerate() {
                acc += f[i + j - HALF] * *c;
            }
            out[i] = acc * self.inv_h;
        }
        out
    }

    /// Derivatives of orders `0..EDGE_ORDERS` at the first and last node.
    pub fn edge_derivatives(
        &self,
        f: &[Complex64],
    ) -> ([Complex64; EDGE_ORDERS], [Complex64; EDGE_ORDERS]) {
        let n = self.n;
        assert_eq!(f.len(), n);
        let mut left = [Complex64::new(0.0, 0.0); EDGE_ORDERS];
        let mut right = [Complex64::new(0.0, 0.0); EDGE_ORDERS];
        for m in 0..EDGE_ORDERS {
            let scale = self.inv_h.powi(m as i32);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..WIDTH {
                left[m] += f[j] * self.edge[m][j];
                right[m] += f[n - 1 - j] * self.edge[m][j];
            }
            left[m] *= scale;
            right[m] *= scale * sign;
        }
        (left, right)
    }

    /// Transposed operator, `D^T v`.
    pub fn apply_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(v.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..HALF {
            for j in 0..WIDTH {
                out[j] += v[i] * self.boundary[i][j] * self.inv_h;
                out[n - 1 - j] -= v[n - 1 - i] * self.boundary[i][j] * self.inv_h;
            }
        }
        for i in HALF..n - HALF {
            for (j, c) in self.interior.iter().enumerate() {
                out[i + j - HALF] += v[i] * (*c * self.inv_h);
            }
        }
        out
    }
}
