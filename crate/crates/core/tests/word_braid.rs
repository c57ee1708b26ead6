use braidflow::braid::{
    braid_permutation, handle_reduce, linking_matrix, make_eta, BraidWord,
};
use braidflow::word::{
    compose, conjugate, cyclically_reduce, free_reduce, inverse, is_cyclic_rotation, GroupWord,
};
use proptest::prelude::*;

fn signed_letters(alphabet: usize, max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    let a = alphabet as i64;
    prop::collection::vec((1..=a, any::<bool>()).prop_map(|(i, s)| if s { i } else { -i }), 0..max_len)
}

fn word(alphabet: usize, s: &[i64]) -> GroupWord {
    GroupWord::from_signed(alphabet, s).unwrap()
}

/// Image in SL(2,Z) of σ1 ↦ (1,1;0,1), σ2 ↦ (1,0;-1,1), together with the
/// exponent sum. Together these separate B_3 elements: the kernel of the
/// matrix map is generated by Δ⁴, whose exponent sum is 12.
fn burau_minus_one(signed: &[i64]) -> ([[i64; 2]; 2], i64) {
    let mul = |a: [[i64; 2]; 2], b: [[i64; 2]; 2]| {
        let mut c = [[0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let mut m = [[1, 0], [0, 1]];
    for &l in signed {
        let g = match l {
            1 => [[1, 1], [0, 1]],
            -1 => [[1, -1], [0, 1]],
            2 => [[1, 0], [-1, 1]],
            -2 => [[1, 0], [1, 1]],
            _ => unreachable!(),
        };
        m = mul(m, g);
    }
    (m, signed.iter().map(|l| l.signum()).sum())
}

#[test]
fn handle_reduction_matches_burau_oracle_exhaustively() {
    let letters = [1i64, -1, 2, -2];
    let mut checked = 0;
    for len in 0..=6u32 {
        for code in 0..4usize.pow(len) {
            let mut c = code;
            let w: Vec<i64> = (0..len)
                .map(|_| {
                    let l = letters[c % 4];
                    c /= 4;
                    l
                })
                .collect();
            let trivial = burau_minus_one(&w) == ([[1, 0], [0, 1]], 0);
            let reduced = handle_reduce(&BraidWord::from_signed(3, &w).unwrap()).unwrap();
            assert_eq!(reduced.is_empty(), trivial, "word {w:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, (0..=6).map(|l| 4usize.pow(l)).sum::<usize>());
}

#[test]
fn conjugate_pair_is_equal_in_b3() {
    let first = BraidWord::from_signed(3, &[1, 2, -1]).unwrap();
    let second = BraidWord::from_signed(3, &[-2, 1, 2]).unwrap();
    assert_eq!(burau_minus_one(&[1, 2, -1]), burau_minus_one(&[-2, 1, 2]));
    assert!(braid_permutation(&first) == braid_permutation(&second));
    assert!(handle_reduce(&first.compose(&second.inverse()).unwrap()).unwrap().is_empty());
}

#[test]
fn etas_commute_pairwise() {
    for n in 2..=6 {
        for i in 2..=n {
            for j in (i + 1)..=n {
                let a = make_eta(i, n).unwrap();
                let b = make_eta(j, n).unwrap();
                let comm = a.compose(&b).unwrap().compose(&a.inverse()).unwrap().compose(&b.inverse()).unwrap();
                assert!(handle_reduce(&comm).unwrap().is_empty(), "eta({i},{n}) vs eta({j},{n})");
            }
        }
    }
}

/// A pure braid built as a product of conjugates of etas.
fn pure_braid(n: usize) -> impl Strategy<Value = BraidWord> {
    prop::collection::vec((signed_letters(n - 1, 6), 2..=n, any::<bool>()), 1..4).prop_map(move |parts| {
        let mut acc = BraidWord::identity(n).unwrap();
        for (conj, i, inv) in parts {
            let g = BraidWord::from_signed(n, &conj).unwrap();
            let mut e = make_eta(i, n).unwrap();
            if inv {
                e = e.inverse();
            }
            let piece = g.compose(&e).unwrap().compose(&g.inverse()).unwrap();
            acc = acc.compose(&piece).unwrap();
        }
        acc
    })
}

proptest! {
    #[test]
    fn free_reduce_is_idempotent(s in signed_letters(4, 40)) {
        let w = word(4, &s);
        let once = free_reduce(&w);
        prop_assert_eq!(free_reduce(&once), once.clone());
        prop_assert!(once.is_freely_reduced());
        prop_assert!(once.len() <= w.len());
        prop_assert_eq!((w.len() - once.len()) % 2, 0);
    }

    #[test]
    fn word_times_inverse_is_empty(s in signed_letters(5, 40)) {
        let w = word(5, &s);
        prop_assert!(compose(&w, &inverse(&w)).unwrap().is_empty());
    }

    #[test]
    fn conjugation_preserves_cyclic_core(s in signed_letters(3, 20), g in signed_letters(3, 10)) {
        let w = free_reduce(&word(3, &s));
        let c = conjugate(&w, &word(3, &g)).unwrap();
        let (core_w, _) = cyclically_reduce(&w);
        let (core_c, _) = cyclically_reduce(&c);
        prop_assert!(is_cyclic_rotation(core_w.letters(), core_c.letters()));
    }

    #[test]
    fn cyclic_reduction_recomposes(s in signed_letters(3, 30)) {
        let w = free_reduce(&word(3, &s));
        let (core, conj) = cyclically_reduce(&w);
        prop_assert_eq!(conjugate(&core, &conj).unwrap(), w);
        if core.len() >= 2 {
            let l = core.letters();
            prop_assert!(!l[0].is_inverse_of(l[l.len() - 1]));
        }
    }

    #[test]
    fn linking_is_additive_on_pure_braids(a in pure_braid(4), b in pure_braid(4)) {
        let lab = linking_matrix(&a.compose(&b).unwrap()).unwrap();
        let sum = linking_matrix(&a).unwrap().add(&linking_matrix(&b).unwrap());
        prop_assert_eq!(lab, sum);
    }

    #[test]
    fn handle_reduce_preserves_the_element(s in signed_letters(2, 14)) {
        let b = BraidWord::from_signed(3, &s).unwrap();
        let r = handle_reduce(&b).unwrap();
        prop_assert_eq!(burau_minus_one(&s), burau_minus_one(&r.word().to_signed()));
    }
}
