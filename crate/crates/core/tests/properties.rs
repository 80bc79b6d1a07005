use dpim::linalg::{c, CVector};
use dpim::model::{duffing, two_dof, QuadSystem, QuadTensor, TwoDofParams};
use dpim::multiindex::{count_of_order, count_up_to, rank_in_order, MultiIndex, MultiIndexTable};
use proptest::prelude::*;

fn exps(d: usize, max: u16) -> impl Strategy<Value = Vec<u16>> {
    prop::collection::vec(0..=max, d)
}

proptest! {
    #[test]
    fn table_ids_are_a_bijection(d in 2usize..=4, order in 1usize..=9) {
        let table = MultiIndexTable::new(d, order);
        prop_assert_eq!(table.len(), count_up_to(d, order));
        for id in 0..table.len() {
            let alpha = table.get(id);
            prop_assert_eq!(table.id(&alpha), Some(id));
        }
    }

    #[test]
    fn ranks_stay_within_their_order(e in exps(4, 6)) {
        let alpha = MultiIndex::new(&e);
        prop_assert!(rank_in_order(&alpha) < count_of_order(4, alpha.order()));
        let conj = alpha.conjugate();
        prop_assert_eq!(conj.conjugate(), alpha);
        prop_assert_eq!(conj.order(), alpha.order());
    }

    #[test]
    fn sub_indices_split_alpha(e in exps(3, 4)) {
        let alpha = MultiIndex::new(&e);
        let mut count = 0usize;
        alpha.for_each_sub(|a| {
            let rest = alpha.checked_sub(&a).unwrap();
            assert_eq!(a.order() + rest.order(), alpha.order());
            count += 1;
        });
        prop_assert_eq!(count, e.iter().map(|&k| k as usize + 1).product::<usize>());
    }

    #[test]
    fn quadratic_tensor_is_symmetric(
        items in prop::collection::vec((0usize..4, 0usize..4, 0usize..4, -2.0f64..2.0), 1..12),
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let q = QuadTensor::from_coefficients(items.iter().map(|&(i, j, k, v)| (i, j, k, c(v, 0.0))));
        let va = CVector::from_iterator(4, a.iter().map(|&x| c(x, 0.0)));
        let vb = CVector::from_iterator(4, b.iter().map(|&x| c(x, 0.0)));
        let d = q.apply(&va, &vb) - q.apply(&vb, &va);
        prop_assert!(d.iter().all(|z| z.norm() < 1e-14));
        let back = QuadTensor::from_coefficients(q.coefficients());
        prop_assert_eq!(back, q);
    }

    #[test]
    fn system_json_round_trips_bitwise(omega in 0.1f64..3.0, xi in 0.0f64..0.2, h in -2.0f64..2.0, w2 in 0.2f64..3.0) {
        for sys in [duffing(omega, xi, h), two_dof(TwoDofParams { omega2: w2, xi1: xi, ..TwoDofParams::default() })] {
            let back = QuadSystem::from_json_str(&sys.to_json_string().unwrap()).unwrap();
            let same = |x: &dpim::linalg::CMatrix, y: &dpim::linalg::CMatrix| {
                x.iter().zip(y.iter()).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits())
            };
            prop_assert!(same(sys.a(), back.a()));
            prop_assert!(same(sys.b(), back.b()));
            prop_assert_eq!(sys.q(), back.q());
            prop_assert_eq!(sys.n_algebraic(), back.n_algebraic());
        }
    }
}
