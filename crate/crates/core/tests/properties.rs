use std::collections::BTreeMap;

use hamclosure::linalg::{mat_mul, signature, transpose, RatMatrix};
use hamclosure::moments::{mu_from_p, mu_from_s, p_from_mu, p_from_s, s_from_mu, s_from_p};
use hamclosure::poly::{rat, VarNames};
use hamclosure::MultiPoly;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

const NV: usize = 3;

fn rational() -> impl Strategy<Value = BigRational> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| rat(n, d))
}

fn nonzero_rational() -> impl Strategy<Value = BigRational> {
    rational().prop_filter("nonzero", |q| !q.is_zero())
}

fn poly() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((rational(), prop::collection::vec(0i32..=3, NV)), 0..6)
        .prop_map(|terms| MultiPoly::from_terms(NV, terms).unwrap())
}

fn point() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(rational(), NV)
}

fn names() -> VarNames {
    VarNames::indexed("x", 1, NV)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        let zero = MultiPoly::zero(NV);
        let one = MultiPoly::one(NV);
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &zero, a.clone());
        prop_assert_eq!(&a * &one, a.clone());
        prop_assert!((&a + &(-&a)).is_zero());
        prop_assert_eq!(&a - &b, &a + &(-&b));
    }

    #[test]
    fn leibniz_rule(a in poly(), b in poly(), i in 0..NV) {
        let lhs = (&a * &b).diff(i).unwrap();
        let rhs = &(&a.diff(i).unwrap() * &b) + &(&a * &b.diff(i).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in poly(), b in poly(), x in point()) {
        let (ea, eb) = (a.eval(&x).unwrap(), b.eval(&x).unwrap());
        prop_assert_eq!((&a + &b).eval(&x).unwrap(), &ea + &eb);
        prop_assert_eq!((&a * &b).eval(&x).unwrap(), &ea * &eb);
    }

    #[test]
    fn composition_commutes_with_evaluation(
        a in poly(),
        images in prop::collection::vec(poly(), NV),
        x in point(),
    ) {
        let composed = a.compose(&images).unwrap();
        let inner: Vec<BigRational> = images.iter().map(|p| p.eval(&x).unwrap()).collect();
        prop_assert_eq!(composed.eval(&x).unwrap(), a.eval(&inner).unwrap());
    }

    #[test]
    fn substitution_of_one_variable(a in poly(), s in poly(), i in 0..NV) {
        let map = BTreeMap::from([(i, s.clone())]);
        let out = a.substitute(&map).unwrap();
        let mut images: Vec<MultiPoly> = (0..NV).map(|k| MultiPoly::var(NV, k)).collect();
        images[i] = s;
        prop_assert_eq!(out, a.compose(&images).unwrap());
    }

    #[test]
    fn text_round_trip(a in poly()) {
        let text = a.to_text(&names());
        prop_assert_eq!(MultiPoly::parse(&text, &names()).unwrap(), a);
    }

    #[test]
    fn euler_identity_on_homogeneous_parts(a in poly()) {
        // sum_i x_i d_i p = sum_d d * p_d
        let mut expect = MultiPoly::zero(NV);
        for (m, c) in a.terms() {
            let term = MultiPoly::from_terms(NV, [(c.clone(), m.exponents().to_vec())]).unwrap();
            expect = &expect + &term.scale(&BigRational::from_integer(m.degree().into()));
        }
        prop_assert_eq!(a.euler(), expect);
    }
}

fn positive_rational() -> impl Strategy<Value = BigRational> {
    (1i64..=20, 1i64..=7).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn raw_and_velocity_centered_round_trip(
        rho in positive_rational(),
        u in rational(),
        s in prop::collection::vec(rational(), 1..6),
    ) {
        let p = p_from_s(&rho, &u, &s).unwrap();
        prop_assert_eq!(&p[0], &rho);
        prop_assert_eq!(&p[1], &(&rho * &u));
        let back = s_from_p(&p).unwrap();
        prop_assert_eq!(back.rho, rho);
        prop_assert_eq!(back.center, u);
        prop_assert_eq!(back.values, s);
    }

    #[test]
    fn raw_and_psi_centered_round_trip(
        rho in positive_rational(),
        psi in rational(),
        mu in prop::collection::vec(rational(), 1..6),
    ) {
        let p = p_from_mu(&rho, &psi, &mu).unwrap();
        let back = mu_from_p(&p, &psi).unwrap();
        prop_assert_eq!(back.values, mu.clone());
        // u = psi + rho mu_1
        let u = &p[1] / &rho;
        prop_assert_eq!(u, &psi + &(&rho * &mu[0]));
    }

    #[test]
    fn s_and_mu_hierarchies_round_trip(mu in prop::collection::vec(rational(), 2..7)) {
        let s = s_from_mu(&mu);
        prop_assert_eq!(s.len(), mu.len() - 1);
        prop_assert_eq!(mu_from_s(&mu[0], &s), mu[1..].to_vec());
    }

    #[test]
    fn float_round_trip(
        rho in 0.1f64..5.0,
        u in -2.0f64..2.0,
        s in prop::collection::vec(-1.0f64..1.0, 1..5),
    ) {
        let p = p_from_s(&rho, &u, &s).unwrap();
        let back = s_from_p(&p).unwrap();
        for (a, b) in back.values.iter().zip(&s) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + u.abs()).powi(6));
        }
    }
}

/// A symmetric matrix with nonzero diagonal pivots and its sign count.
fn symmetric_with_signs() -> impl Strategy<Value = (RatMatrix, (usize, usize))> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(nonzero_rational(), n),
            prop::collection::vec(rational(), n * (n - 1) / 2),
        )
            .prop_map(move |(d, lower)| {
                // A = L D L^T with unit lower-triangular L
                let mut l: RatMatrix = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
                    .collect();
                let mut it = lower.into_iter();
                for i in 1..n {
                    for j in 0..i {
                        l[i][j] = it.next().unwrap();
                    }
                }
                let dm: RatMatrix = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { d[i].clone() } else { BigRational::zero() }).collect())
                    .collect();
                let a = mat_mul(&mat_mul(&l, &dm).unwrap(), &transpose(&l)).unwrap();
                let pos = d.iter().filter(|x| x.is_positive()).count();
                (a, (pos, n - pos))
            })
    })
}

fn invertible(n: usize) -> impl Strategy<Value = RatMatrix> {
    prop::collection::vec(rational(), n * n)
        .prop_map(move |v| v.chunks(n).map(|r| r.to_vec()).collect::<RatMatrix>())
        .prop_filter("invertible", |m| {
            !hamclosure::linalg::determinant(m).unwrap().is_zero()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sylvester_law_of_inertia(
        (a, signs, p) in symmetric_with_signs()
            .prop_flat_map(|(a, s)| { let n = a.len(); (Just(a), Just(s), invertible(n)) })
    ) {
        prop_assert_eq!(signature(&a).unwrap(), signs);
        let b = mat_mul(&mat_mul(&p, &a).unwrap(), &transpose(&p)).unwrap();
        prop_assert_eq!(signature(&b).unwrap(), signs);
    }

    #[test]
    fn signature_of_antidiagonal_blocks(n in 1usize..=4) {
        // [[0, I], [I, 0]] has signature (n, n)
        let m: RatMatrix = (0..2 * n)
            .map(|i| (0..2 * n).map(|j| if i + n == j || j + n == i { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        prop_assert_eq!(signature(&m).unwrap(), (n, n));
    }
}
