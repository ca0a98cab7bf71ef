//! Reference polynomials used by tests and the CLI test assets.

use crate::poly::HomogeneousPoly;

/// The pair of sextic curves with equal component counts but different
/// embeddings: `(x1^4 + x2^4 - x0^4)(x1^2 + x2^2 - 2 x0^2) + x1^5 x2` and the
/// same with the product term scaled by 10.
pub fn sextic_pair() -> (HomogeneousPoly, HomogeneousPoly) {
    let m = |e: [u32; 3], c: f64| HomogeneousPoly::monomial(3, &e, c).unwrap();
    let quartic = m([0, 4, 0], 1.0)
        .add(&m([0, 0, 4], 1.0))
        .unwrap()
        .sub(&m([4, 0, 0], 1.0))
        .unwrap();
    let quadric = m([0, 2, 0], 1.0)
        .add(&m([0, 0, 2], 1.0))
        .unwrap()
        .sub(&m([2, 0, 0], 2.0))
        .unwrap();
    let product = quartic.mul(&quadric).unwrap();
    let tail = m([0, 5, 1], 1.0);
    let p1 = product.add(&tail).unwrap();
    let p2 = product.scale(10.0).add(&tail).unwrap();
    (p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sextics_evaluate_as_written() {
        let (p1, p2) = sextic_pair();
        assert_eq!(p1.degree(), 6);
        assert_eq!(p2.degree(), 6);
        let x = [0.3f64, -1.2, 0.7];
        let quartic = x[1].powi(4) + x[2].powi(4) - x[0].powi(4);
        let quadric = x[1] * x[1] + x[2] * x[2] - 2.0 * x[0] * x[0];
        let tail = x[1].powi(5) * x[2];
        let e1 = quartic * quadric + tail;
        let e2 = 10.0 * quartic * quadric + tail;
        assert!((p1.eval(&x).unwrap() - e1).abs() <= 1e-12 * e1.abs());
        assert!((p2.eval(&x).unwrap() - e2).abs() <= 1e-12 * e2.abs());
    }
}
