use braidflow::braid::make_eta;
use braidflow::quasimorphisms::modular::{
    b3_to_modular, braid_to_psl, modular_normal_form, psl_inverse, psl_word_to_matrix, rademacher, rademacher_word,
    ModularElement,
};
use braidflow::quasimorphisms::surface::{dehn_reduce_with, longest_relator_piece, Symmetrization};
use braidflow::quasimorphisms::{defect_estimate, vanishing_combination, DomainTag, Quasimorphism, Q};
use braidflow::word::GroupWord;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tu_word(len: usize) -> impl Strategy<Value = Vec<(bool, bool)>> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 1..=len)
}

fn tu_matrix(w: &[(bool, bool)]) -> ModularElement {
    w.iter().fold(ModularElement::IDENTITY, |acc, &(t, pos)| {
        let g = if t { ModularElement::T } else { ModularElement::U };
        acc.mul(&if pos { g } else { g.inverse() }).unwrap()
    })
}

fn random_signed(rng: &mut ChaCha8Rng, alphabet: i64, max_len: usize) -> Vec<i64> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(1..=alphabet) * if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rademacher_is_conjugation_invariant(m in tu_word(10), g in tu_word(6)) {
        let m = tu_matrix(&m);
        let g = tu_matrix(&g);
        let conj = g.mul(&m).unwrap().mul(&g.inverse()).unwrap();
        prop_assert_eq!(rademacher(&conj).unwrap(), rademacher(&m).unwrap());
    }

    #[test]
    fn rademacher_is_homogeneous(m in tu_word(6), k in 1i64..=10) {
        let m = tu_matrix(&m);
        prop_assume!(m.trace().abs() >= 2);
        prop_assert_eq!(rademacher(&m.pow(k).unwrap()).unwrap(), k * rademacher(&m).unwrap());
    }

    #[test]
    fn normal_form_roundtrip(m in tu_word(12)) {
        let m = tu_matrix(&m);
        let nf = modular_normal_form(&m).unwrap();
        prop_assert!(psl_word_to_matrix(&nf).unwrap().projectively_eq(&m));
        prop_assert_eq!(rademacher_word(&nf), rademacher(&m).unwrap());
    }

    #[test]
    fn braid_routes_agree(s in prop::collection::vec(prop_oneof![Just(1i64), Just(-1), Just(2), Just(-2)], 0..16)) {
        let b = braidflow::braid::BraidWord::from_signed(3, &s).unwrap();
        let via_word = rademacher_word(&braid_to_psl(&b).unwrap());
        prop_assert_eq!(via_word, rademacher(&b3_to_modular(&b).unwrap()).unwrap());
    }
}

fn psl_family() -> Vec<Quasimorphism> {
    ["1,2", "1,-2", "1,2,1,-2", "1,2,1,2,1,-2", "1,-2,1,-2,1,2", "1,2,1,2,1,-2,1,-2"]
        .iter()
        .map(|p| Quasimorphism::from_name(&format!("brooks:{p}"), DomainTag::ArtinBraid(3)).unwrap())
        .collect()
}

#[test]
fn brooks_family_vanishes_on_eta_images() {
    let targets: Vec<GroupWord> = (2..=3).map(|i| make_eta(i, 3).unwrap().into_word()).collect();
    let combo = vanishing_combination(&psl_family(), &targets).unwrap().expect("null space is nontrivial");
    for t in &targets {
        assert_eq!(combo.evaluate(t).unwrap(), Q::zero());
    }
    assert!(combo.is_homogeneous());
}

#[test]
fn mixed_b3_family_vanishes_on_etas() {
    let b3 = DomainTag::ArtinBraid(3);
    let mut family = vec![Quasimorphism::rademacher(b3).unwrap(), Quasimorphism::exponent_sum(b3).unwrap()];
    family.extend(psl_family().into_iter().take(4));
    let eta2 = make_eta(2, 3).unwrap().into_word();
    let eta3 = make_eta(3, 3).unwrap().into_word();
    assert_eq!(family[0].evaluate(&eta2).unwrap(), Q::from_integer(2));
    // U T² U = −T⁻², a parabolic with Rademacher value −2
    assert_eq!(family[0].evaluate(&eta3).unwrap(), Q::from_integer(-2));
    assert_eq!(family[1].evaluate(&eta3).unwrap(), Q::from_integer(4));
    let combo = vanishing_combination(&family, &[eta2.clone(), eta3.clone()]).unwrap().unwrap();
    assert_eq!(combo.evaluate(&eta2).unwrap(), Q::zero());
    assert_eq!(combo.evaluate(&eta3).unwrap(), Q::zero());
}

fn assert_defect_within_bound(q: &Quasimorphism, alphabet: i64, max_len: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = alphabet as usize;
    let observed = defect_estimate(q, || GroupWord::from_signed(n, &random_signed(&mut rng, alphabet, max_len)).unwrap(), 10_000)
        .unwrap();
    let bound = q.defect_bound().unwrap();
    assert!(observed <= bound, "{q}: observed defect {observed} exceeds {bound}");
}

#[test]
fn declared_defects_hold_on_random_pairs() {
    let b3 = DomainTag::ArtinBraid(3);
    assert_defect_within_bound(&Quasimorphism::rademacher(b3).unwrap(), 2, 20, 1);
    assert_defect_within_bound(&Quasimorphism::rademacher(DomainTag::Psl2z).unwrap(), 2, 20, 2);
    assert_defect_within_bound(&Quasimorphism::exponent_sum(b3).unwrap(), 2, 20, 3);
    for (i, name) in ["brooks-raw:1,2,1,-2", "brooks:1,2,1,-2", "brooks:1,2", "brooks-raw:1,-2,1,-2,1,2"].iter().enumerate() {
        assert_defect_within_bound(&Quasimorphism::from_name(name, b3).unwrap(), 2, 20, 10 + i as u64);
        assert_defect_within_bound(&Quasimorphism::from_name(name, DomainTag::Psl2z).unwrap(), 2, 20, 20 + i as u64);
    }
    let g2 = DomainTag::SurfaceGroup(2);
    for (i, name) in ["brooks-raw:1,2", "brooks:1,2", "brooks:1,2,-1", "brooks:1,3", "brooks-raw:1,-4,2"].iter().enumerate() {
        assert_defect_within_bound(&Quasimorphism::from_name(name, g2).unwrap(), 4, 16, 30 + i as u64);
    }
}

#[test]
fn brooks_is_antisymmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psl = Quasimorphism::from_name("brooks-raw:1,2,1,-2", DomainTag::Psl2z).unwrap();
    let psl_h = Quasimorphism::from_name("brooks:1,2,1,-2", DomainTag::Psl2z).unwrap();
    let surf = Quasimorphism::from_name("brooks-raw:1,2,-1", DomainTag::SurfaceGroup(2)).unwrap();
    for _ in 0..2000 {
        let w = GroupWord::from_signed(2, &random_signed(&mut rng, 2, 24)).unwrap();
        let w_inv = psl_inverse(&w);
        assert_eq!(psl.evaluate(&w_inv).unwrap(), -psl.evaluate(&w).unwrap());
        assert_eq!(psl_h.evaluate(&w_inv).unwrap(), -psl_h.evaluate(&w).unwrap());
        let s = GroupWord::from_signed(4, &random_signed(&mut rng, 4, 24)).unwrap();
        let s_inv = braidflow::word::inverse(&s);
        assert_eq!(surf.evaluate(&s_inv).unwrap(), -surf.evaluate(&s).unwrap());
    }
}

#[test]
fn homogenized_counts_are_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q = Quasimorphism::from_name("brooks:1,2,1,-2", DomainTag::ArtinBraid(3)).unwrap();
    let qs = Quasimorphism::from_name("brooks:1,2,-1", DomainTag::SurfaceGroup(2)).unwrap();
    for _ in 0..500 {
        let w = GroupWord::from_signed(2, &random_signed(&mut rng, 2, 12)).unwrap();
        let v = q.evaluate(&w).unwrap();
        let s = GroupWord::from_signed(4, &random_signed(&mut rng, 4, 12)).unwrap();
        let vs = qs.evaluate(&s).unwrap();
        for k in 2..5 {
            assert_eq!(q.evaluate(&w.power(k)).unwrap(), v * Q::from_integer(k as i128));
            assert_eq!(qs.evaluate(&s.power(k)).unwrap(), vs * Q::from_integer(k as i128), "{s}");
        }
    }
}

#[test]
fn dehn_output_has_no_long_relator_piece() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for g in 2..=3usize {
        let sym = Symmetrization::new(g);
        for _ in 0..2000 {
            // bias towards relator fragments so reductions actually happen
            let mut s = random_signed(&mut rng, 2 * g as i64, 10);
            if rng.random_bool(0.7) {
                let rot = &sym.rotations()[rng.random_range(0..sym.rotations().len())];
                let take = rng.random_range(2 * g..=4 * g);
                let at = rng.random_range(0..=s.len());
                let piece: Vec<i64> = rot[..take].iter().map(|l| l.to_signed()).collect();
                s.splice(at..at, piece);
            }
            let w = GroupWord::from_signed(2 * g, &s).unwrap();
            let out = dehn_reduce_with(&sym, &w);
            assert!(out.is_freely_reduced());
            assert!(longest_relator_piece(&sym, out.letters(), false) <= 2 * g, "{w} -> {out}");
        }
    }
}
