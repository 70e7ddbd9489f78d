use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use dynext_core::common::{common_extension_baire, retraction, CommonExtension, MapFamily, Piece};
use dynext_core::covers::CoverSystem;
use dynext_core::hyperspace::{hyper_universal_step, CompactRelation};
use dynext_core::injection::{
    embed_injection, mu_successor, ComponentType, PartialInjection, Slot, UniversalInjection,
};
use dynext_core::lift::StrongExtension;
use dynext_core::maps::{Builtin, RotationFamily};
use dynext_core::operator::{
    apply_universal, build_dynamic_dense_enumeration, norm_growth_certificate, synthesize_factor_map, BanachModel,
    EnumerationConfig, NormKind, RationalMatrix, SparseL1Vector,
};
use dynext_core::rational::{ratio, Rational};
use dynext_core::symbolic::{PrefixTransducer, SymbolicSpace, Word};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn word(max: u64, len: std::ops::Range<usize>) -> impl Strategy<Value = Word> {
    proptest::collection::vec(0..max, len)
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=5).prop_map(|(p, q)| ratio(p, q))
}

/// A partial injection on `0..n`: a permutation with some edges removed.
fn partial_injection() -> impl Strategy<Value = PartialInjection> {
    (1usize..40)
        .prop_flat_map(|n| {
            (Just((0..n as u64).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), n))
        })
        .prop_map(|(perm, keep)| {
            let edges = perm.iter().enumerate().filter(|(i, _)| keep[*i]).map(|(i, &j)| (i as u64, j));
            PartialInjection::new(edges).unwrap().with_nodes(0..perm.len() as u64)
        })
}

fn pipeline() -> &'static CommonExtension {
    static EXT: OnceLock<CommonExtension> = OnceLock::new();
    EXT.get_or_init(|| {
        common_extension_baire(vec![
            Piece {
                cs: CoverSystem::interval(),
                family: MapFamily::Finite(vec![Builtin::Square.shared(), Builtin::Tent.shared()]),
            },
            Piece {
                cs: CoverSystem::circle(),
                family: MapFamily::Parameterized { family: Arc::new(RotationFamily), parameters: vec![vec![1, 0, 1]] },
            },
        ])
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mu_is_injective(i in 0u64..200_000, j in 0u64..200_000) {
        prop_assume!(i != j);
        if let (Ok(a), Ok(b)) = (mu_successor(i), mu_successor(j)) {
            prop_assert_ne!(a, b);
        }
    }

    #[test]
    fn slots_roundtrip(tau in 0u64..40, copy in 0u64..200, raw in 0i64..200) {
        let kind = ComponentType::from_code(tau);
        let position = match kind {
            ComponentType::Cycle(n) => raw.rem_euclid(n.get() as i64),
            ComponentType::ForwardRay => raw,
            ComponentType::BiInfiniteLine => raw - 100,
        };
        let mu = UniversalInjection;
        let slot = Slot { kind, copy, position };
        prop_assert_eq!(mu.decode(mu.encode(slot).unwrap()).unwrap(), slot);
    }

    #[test]
    fn embeddings_preserve_every_edge(sigma in partial_injection(), depth in 1usize..50) {
        let cert = embed_injection(&sigma, depth).unwrap();
        for (i, j) in sigma.edges() {
            let n = cert.pi_a(i).unwrap();
            prop_assert_eq!(cert.pi_a_inverse(mu_successor(n).unwrap()), Some(j));
        }
        prop_assert_eq!(cert.verified_edges, sigma.len());
    }

    #[test]
    fn universal_operator_is_an_isometry(terms in proptest::collection::vec((0u64..5_000, small_rational()), 0..10)) {
        let terms: Vec<_> = terms.into_iter().filter(|(i, _)| mu_successor(*i).is_ok()).collect();
        let x = SparseL1Vector::from_pairs(terms);
        prop_assert_eq!(apply_universal(&x).unwrap().norm_l1(), x.norm_l1());
    }

    #[test]
    fn norms_are_submultiplicative(entries in proptest::collection::vec(small_rational(), 9)) {
        let rows: Vec<Vec<Rational>> = entries.chunks(3).map(<[Rational]>::to_vec).collect();
        let t = RationalMatrix::from_rows(rows).unwrap();
        for kind in [NormKind::L1, NormKind::Linf] {
            let report = norm_growth_certificate(&t, kind, |_| Rational::one(), 6).unwrap();
            prop_assert!(report.submultiplicative);
        }
    }

    #[test]
    fn full_projection_is_preserved(x in word(2, 0..20), y in word(2, 1..20)) {
        let c = SymbolicSpace::cantor();
        let n = vec![PrefixTransducer::shift(c.clone()), PrefixTransducer::identity(c), PrefixTransducer::odometer()];
        let a = CompactRelation::new(3, (0..3).flat_map(|s| [(s, x.clone()), (s, y.clone())])).unwrap();
        let u = hyper_universal_step(&n, &a).unwrap();
        prop_assert_eq!(u.members(), 3);
        for s in 0..3 {
            prop_assert!(!u.cross_section(s).unwrap().is_empty());
        }
    }

    #[test]
    fn pipeline_factor_is_the_composition_of_stages(z in word(12, 0..400)) {
        let ext = pipeline();
        for (i, (cs, members)) in ext.pieces.iter().enumerate() {
            let outer = ext.outer.projection(i).step(&z);
            for j in 0..members.len() {
                let staged = retraction(&cs.symbolic_space()).step(&ext.piece_lifts[i].projection(j).step(&outer));
                prop_assert_eq!(ext.symbolic_factor(i, j).step(&z), staged);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn factor_maps_commute(entries in proptest::collection::vec(small_rational(), 4)) {
        let rows: Vec<Vec<Rational>> = entries.chunks(2).map(<[Rational]>::to_vec).collect();
        let t = RationalMatrix::from_rows(rows).unwrap();
        let rho = t.operator_norm(NormKind::L1).unwrap();
        prop_assume!(!rho.is_zero());
        let cfg = EnumerationConfig { base_count: 15, orbit_depth: 2, repetitions: 3 };
        let en = build_dynamic_dense_enumeration(&t, BanachModel::new(2, NormKind::L1), &rho, cfg).unwrap();
        let fm = synthesize_factor_map(en, 32).unwrap();
        let report = fm.commutation_check(2_000);
        prop_assert!(report.passed(), "{:?}", report.failures);
        prop_assert!(fm.check_d_surjectivity().is_ok());
        let x = SparseL1Vector::from_pairs(fm.embedding.map().values().take(3).map(|&i| (i, ratio(1, 3))));
        prop_assert!(fm.contracts(&x));
    }

    #[test]
    fn lifts_are_deterministic(alpha in word(5, 40..41), q in word(2, 40..41)) {
        let cs = CoverSystem::circle();
        let mut alpha = alpha;
        alpha[0] %= 8;
        let a = StrongExtension::new(cs.clone(), Arc::new(RotationFamily)).unwrap();
        let b = StrongExtension::new(cs, Arc::new(RotationFamily)).unwrap();
        prop_assert_eq!(a.t_partial(&q, &alpha, 5).0, b.t_partial(&q, &alpha, 5).0);
        let fa = a.transducer(&q);
        prop_assert_eq!(fa.step(&alpha), b.transducer(&q).step(&alpha));
    }

    #[test]
    fn lifts_refine_coherently(alpha in word(5, 40..41), q in word(2, 40..41), cut in 1usize..40) {
        let cs = CoverSystem::circle();
        let mut alpha = alpha;
        alpha[0] %= 8;
        let ext = StrongExtension::new(cs, Arc::new(RotationFamily)).unwrap();
        let full = ext.t_partial(&q, &alpha, 6).0;
        let short = ext.t_partial(&q[..cut], &alpha[..cut], 6).0;
        prop_assert!(full.starts_with(&short));
    }
}

#[test]
fn universal_operator_has_norm_one() {
    let norms: BTreeMap<u64, Rational> = (0..2_000u64)
        .filter(|&i| mu_successor(i).is_ok())
        .map(|i| (i, apply_universal(&SparseL1Vector::basis(i)).unwrap().norm_l1()))
        .collect();
    assert!(norms.values().all(|n| n.is_one()));
    let x = SparseL1Vector::from_pairs([(0, ratio(-1, 2)), (1, ratio(1, 2))]);
    assert!(apply_universal(&x).unwrap().iter().all(|(_, c)| c.abs() == ratio(1, 2)));
}
