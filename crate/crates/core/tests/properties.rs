use bssc::bounds::difference_curve;
use bssc::conjecture::{
    and_or_bijection, canonical_class, lhs_closed_form_and, lhs_closed_form_or, objective,
    BoolFunc2, JointUV,
};
use bssc::info::{mutual_information, JointDist};
use bssc::reduction::{apply_perturbation, hajek_construct, null_space_direction, TripleDist};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn joint_uv() -> impl Strategy<Value = JointUV> {
    simplex(4).prop_map(|v| JointUV::new(v[0], v[1], v[2], v[3]).unwrap())
}

fn boolfunc() -> impl Strategy<Value = BoolFunc2> {
    (0u8..16).prop_map(BoolFunc2::from_index)
}

proptest! {
    #[test]
    fn mutual_information_nonnegative(p in simplex(6)) {
        let j = JointDist::new(vec![2, 3], p).unwrap();
        prop_assert!(mutual_information(&j).unwrap() >= -1e-12);
    }

    #[test]
    fn inequality_holds(j in joint_uv(), f in boolfunc()) {
        prop_assert!(objective(&j, f).gap() <= 1e-9);
    }

    #[test]
    fn relabeling_invariance(j in joint_uv(), f in boolfunc()) {
        let base = objective(&j, f).lhs;
        prop_assert!((objective(&j.flip_u(), f.flip_u()).lhs - base).abs() <= 1e-12);
        prop_assert!((objective(&j.flip_v(), f.flip_v()).lhs - base).abs() <= 1e-12);
        prop_assert_eq!(canonical_class(f), canonical_class(f.flip_u().flip_v()));
    }

    #[test]
    fn bijection_involution(j in joint_uv()) {
        let back = and_or_bijection(&and_or_bijection(&j));
        prop_assert!(back.distance(&j) <= 1e-15);
        prop_assert!((objective(&j, BoolFunc2::AND).gap() - objective(&and_or_bijection(&j), BoolFunc2::OR).gap()).abs() <= 1e-12);
    }

    #[test]
    fn closed_forms_match(j in joint_uv()) {
        prop_assert!((lhs_closed_form_and(&j) - objective(&j, BoolFunc2::AND).lhs).abs() <= 1e-12);
        prop_assert!((lhs_closed_form_or(&j) - objective(&j, BoolFunc2::OR).lhs).abs() <= 1e-12);
    }

    #[test]
    fn difference_curve_skew_symmetric(x in 0.0f64..=1.0) {
        prop_assert!((difference_curve(x).unwrap() + difference_curve(1.0 - x).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn hajek_recomposes(p in simplex(12)) {
        let t = TripleDist::new(JointDist::new(vec![3, 2, 2], p).unwrap()).unwrap();
        let f = hajek_construct(&t);
        prop_assert!(f.max_recomposition_error(&t) <= 1e-12);
        prop_assert!(f.w_size() <= 12);
    }

    #[test]
    fn perturbation_keeps_x_marginal(p in simplex(12), frac in 0.0f64..=1.0) {
        let t = TripleDist::new(JointDist::new(vec![3, 2, 2], p).unwrap()).unwrap();
        if let Some(dir) = null_space_direction(&t, 0).unwrap() {
            let q = apply_perturbation(&t, &dir.with_epsilon(dir.epsilon * frac)).unwrap();
            let (px, qx) = (t.x_marginal(), q.x_marginal());
            for x in 0..2 {
                prop_assert!((px[x] - qx[x]).abs() <= 1e-14);
            }
            for (a, b) in t.table().probs().iter().zip(q.table().probs()) {
                prop_assert!(*a != 0.0 || *b == 0.0);
            }
        }
    }
}
