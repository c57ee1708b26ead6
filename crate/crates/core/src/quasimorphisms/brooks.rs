//! Non-overlapping occurrence counts used by Brooks counting quasimorphisms.

use num_rational::Ratio;

use crate::word::Letter;

/// Greedy left-to-right count of disjoint occurrences of `pattern`; greedy
/// attains the maximum packing.
pub fn count_disjoint(word: &[Letter], pattern: &[Letter]) -> i128 {
    let p = pattern.len();
    if p == 0 || word.len() < p {
        return 0;
    }
    let mut count = 0;
    let mut pos = 0;
    while pos + p <= word.len() {
        if word[pos..pos + p] == *pattern {
            count += 1;
            pos += p;
        } else {
            pos += 1;
        }
    }
    count
}

/// Occurrences per period of the bi-infinite periodic word `…core core…`,
/// for maximal disjoint packings. The greedy scan's position modulo the
/// period is eventually periodic; the count over one cycle, divided by the
/// number of periods the cycle spans, is the density.
pub fn cyclic_density(core: &[Letter], pattern: &[Letter]) -> Ratio<i128> {
    let n = core.len();
    let p = pattern.len();
    if n == 0 || p == 0 {
        return Ratio::from_integer(0);
    }
    let matches_at = |start: usize| (0..p).all(|k| core[(start + k) % n] == pattern[k]);
    let hit: Vec<bool> = (0..n).map(matches_at).collect();
    // seen[r] = (absolute position, count) at the first visit of residue r
    let mut seen: Vec<Option<(usize, i128)>> = vec![None; n];
    let mut pos = 0usize;
    let mut count = 0i128;
    loop {
        let r = pos % n;
        if let Some((pos0, count0)) = seen[r] {
            let periods = ((pos - pos0) / n) as i128;
            return Ratio::new(count - count0, periods);
        }
        seen[r] = Some((pos, count));
        if hit[r] {
            count += 1;
            pos += p;
        } else {
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::GroupWord;

    fn l(s: &[i64]) -> Vec<Letter> {
        GroupWord::from_signed(4, s).unwrap().into_letters()
    }

    #[test]
    fn linear_counts() {
        assert_eq!(count_disjoint(&l(&[1, 1, 1]), &l(&[1, 1])), 1);
        assert_eq!(count_disjoint(&l(&[1, 2, 1, 2]), &l(&[1, 2])), 2);
        assert_eq!(count_disjoint(&l(&[]), &l(&[1])), 0);
    }

    #[test]
    fn cyclic_densities() {
        let comm = l(&[1, 2, -1, -2]);
        let cube: Vec<Letter> = comm.iter().cycle().take(12).copied().collect();
        assert_eq!(cyclic_density(&cube, &comm), Ratio::from_integer(3));
        // aaa: the infinite word a^∞ packs aa at density 1/2 per letter
        assert_eq!(cyclic_density(&l(&[1, 1, 1]), &l(&[1, 1])), Ratio::new(3, 2));
        assert_eq!(cyclic_density(&l(&[1, 2]), &l(&[2, 1])), Ratio::from_integer(1));
        assert_eq!(cyclic_density(&l(&[1, 2]), &l(&[2, 2])), Ratio::from_integer(0));
    }
}
