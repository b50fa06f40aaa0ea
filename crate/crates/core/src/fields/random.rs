use std::sync::Arc;

use rand::Rng;

use super::{OneForm, VectorField};
use crate::expr::{Chart, Expr};

/// Exponent vectors of all monomials in `n` variables of total degree ≤ `degree`.
fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|m: Vec<u32>| {
                let used: u32 = m.iter().sum();
                (0..=degree - used).map(move |e| {
                    let mut m = m.clone();
                    m.push(e);
                    m
                })
            })
            .collect();
    }
    out
}

/// Dyadic coefficient `k/8` with `k` uniform in `[-8, 8]`; exactly representable.
fn coefficient<R: Rng>(rng: &mut R) -> f64 {
    f64::from(rng.gen_range(-8i32..=8)) / 8.0
}

/// Random polynomial of total degree ≤ `degree` in the chart coordinates.
pub fn random_polynomial<R: Rng>(chart: &Chart, degree: u32, rng: &mut R) -> Expr {
    let vars: Vec<Expr> = (0..chart.dim()).map(|i| chart.var(i)).collect();
    Expr::sum(monomials(chart.dim(), degree).into_iter().map(|m| {
        let c = coefficient(rng);
        Expr::product(
            std::iter::once(Expr::constant(c))
                .chain(m.iter().zip(&vars).filter(|(e, _)| **e > 0).map(|(e, v)| v.powi(*e as i32))),
        )
    }))
}

/// Random polynomial function (same as [`random_polynomial`]).
pub fn random_function<R: Rng>(chart: &Chart, degree: u32, rng: &mut R) -> Expr {
    random_polynomial(chart, degree, rng)
}

pub fn random_vector_field<R: Rng>(chart: &Arc<Chart>, degree: u32, rng: &mut R) -> VectorField {
    let comps = (0..chart.dim()).map(|_| random_polynomial(chart, degree, rng)).collect();
    VectorField::new(chart, comps).expect("component count matches")
}

pub fn random_one_form<R: Rng>(chart: &Arc<Chart>, degree: u32, rng: &mut R) -> OneForm {
    let comps = (0..chart.dim()).map(|_| random_polynomial(chart, degree, rng)).collect();
    OneForm::new(chart, comps).expect("component count matches")
}

/// Random field with affine components `A x + b`.
pub fn random_affine_field<R: Rng>(chart: &Arc<Chart>, rng: &mut R) -> VectorField {
    random_vector_field(chart, 1, rng)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn monomial_count_is_binomial() {
        assert_eq!(monomials(2, 2).len(), 6);
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(3, 3).len(), 20);
    }

    #[test]
    fn seeded_fields_repeat() {
        let c = Arc::new(Chart::boxed(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap());
        let a = random_vector_field(&c, 2, &mut ChaCha8Rng::seed_from_u64(5));
        let b = random_vector_field(&c, 2, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.components(), b.components());
    }

    use crate::fields::Field;
}
