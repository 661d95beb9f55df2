use liegeo::lie_core::{
    inner, quadric_to_sphere, random_group_element, sphere_to_quadric, MinkVector, OrientedSphereElement,
};
use proptest::prelude::*;

fn vec6() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_preserves_the_inner_product(seed in any::<u64>(), v in vec6(), w in vec6()) {
        let a = random_group_element(seed).matrix;
        let act = |x: &[f64; 6]| MinkVector(std::array::from_fn(|i| (0..6).map(|k| a[(i, k)] * x[k]).sum()));
        let (v0, w0) = (MinkVector(v), MinkVector(w));
        let before = inner(&v0, &w0);
        let after = inner(&act(&v), &act(&w));
        let scale = v0.norm() * w0.norm() * a.norm() * a.norm();
        prop_assert!((before - after).abs() <= 1e-12 * scale.max(1.0), "{before} vs {after}");
    }

    #[test]
    fn spheres_round_trip_through_the_quadric(
        c in prop::array::uniform3(-5.0..5.0f64),
        r in prop_oneof![-4.0..-0.05f64, 0.05..4.0f64],
    ) {
        let s = OrientedSphereElement::Sphere { center: c, radius: r };
        let q = sphere_to_quadric(&s);
        prop_assert!(inner(&q.rep, &q.rep).abs() < 1e-10);
        match quadric_to_sphere(&q).unwrap() {
            OrientedSphereElement::Sphere { center, radius } => {
                prop_assert!((radius - r).abs() < 1e-10);
                for k in 0..3 {
                    prop_assert!((center[k] - c[k]).abs() < 1e-10);
                }
            }
            other => prop_assert!(false, "{other:?}"),
        }
    }
}
