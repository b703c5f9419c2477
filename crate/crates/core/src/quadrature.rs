//! Gauss-Legendre rules on `[0, 1]`.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of the `m`-point Gauss-Legendre rule mapped to `[0, 1]`, nodes ascending.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(m.max(1)).unwrap());
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Integral of `f` over `[a, b]` with an `m`-point rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let (x, w) = gauss_legendre_unit(m);
    let len = b - a;
    x.iter().zip(&w).map(|(&s, &wi)| wi * f(a + len * s)).sum::<f64>() * len
}

/// Collocation matrix `A[m][j] = int_0^{c_m} l_j(s) ds` for the Lagrange basis on the nodes `c`.
pub fn collocation_matrix(c: &[f64]) -> Vec<Vec<f64>> {
    let m = c.len();
    let probe = m + 2;
    c.iter()
        .map(|&cm| {
            (0..m)
                .map(|j| {
                    integrate(
                        |s| {
                            c.iter()
                                .enumerate()
                                .filter(|&(i, _)| i != j)
                                .map(|(_, &ci)| (s - ci) / (c[j] - ci))
                                .product()
                        },
                        0.0,
                        cm,
                        probe,
                    )
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(4);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let i7: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((i7 - 0.125).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn collocation_rows_sum_to_nodes() {
        let (c, _) = gauss_legendre_unit(3);
        let a = collocation_matrix(&c);
        for (row, &cm) in a.iter().zip(&c) {
            assert!((row.iter().sum::<f64>() - cm).abs() < 1e-14);
        }
    }
}
