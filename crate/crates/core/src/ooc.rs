//! Optical orthogonal codes: cyclic zero-one sequences whose auto- and
//! cross-correlation never exceed one pulse.

use std::fmt;

use crate::error::{Error, Result};

/// A single code: pulse positions inside a frame of `length` chips.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OocCode {
    length: usize,
    positions: Vec<usize>,
}

impl OocCode {
    /// Builds a code, checking positions are distinct, sorted, in range, and
    /// that the off-peak cyclic autocorrelation is at most one.
    pub fn new(length: usize, positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Domain("code weight must be >= 1".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "positions {positions:?} are not strictly increasing"
            )));
        }
        if let Some(&last) = positions.last() {
            if last >= length {
                return Err(Error::Domain(format!(
                    "position {last} is outside a {length}-chip frame"
                )));
            }
        }
        let code = Self { length, positions };
        let sidelobe = correlation(&code, &code, true);
        if sidelobe > 1 {
            return Err(Error::Domain(format!(
                "autocorrelation sidelobe {sidelobe} exceeds 1 for {code}"
            )));
        }
        Ok(code)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn weight(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Chip mask of the code cyclically shifted by `shift`.
    pub fn shifted_mask(&self, shift: usize) -> Vec<bool> {
        let mut mask = vec![false; self.length];
        for &i in &self.positions {
            mask[(i + shift) % self.length] = true;
        }
        mask
    }
}

impl fmt::Display for OocCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for p in &self.positions {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
            first = false;
        }
        Ok(())
    }
}

/// Codes of equal length and weight with pairwise cross-correlation <= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OocFamily {
    length: usize,
    weight: usize,
    codes: Vec<OocCode>,
}

impl OocFamily {
    /// Checks every invariant of a family, including the cardinality bound.
    pub fn new(length: usize, weight: usize, codes: Vec<OocCode>) -> Result<Self> {
        for c in &codes {
            if c.length() != length || c.weight() != weight {
                return Err(Error::Domain(format!(
                    "code {c} does not have length {length} and weight {weight}"
                )));
            }
        }
        for (i, a) in codes.iter().enumerate() {
            for b in &codes[i + 1..] {
                let cc = correlation(a, b, false);
                if cc > 1 {
                    return Err(Error::Domain(format!(
                        "codes {a} and {b} have cross-correlation {cc}"
                    )));
                }
            }
        }
        if weight >= 2 && codes.len() > capacity_bound(length, weight)? {
            return Err(Error::Capacity(format!(
                "{} codes exceed the bound for length {length}, weight {weight}",
                codes.len()
            )));
        }
        Ok(Self {
            length,
            weight,
            codes,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn codes(&self) -> &[OocCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

fn correlation(a: &OocCode, b: &OocCode, skip_zero_shift: bool) -> usize {
    let n = a.length;
    let mut in_b = vec![false; n];
    for &j in &b.positions {
        in_b[j] = true;
    }
    let start = usize::from(skip_zero_shift);
    (start..n)
        .map(|s| {
            a.positions
                .iter()
                .filter(|&&i| in_b[(i + s) % n])
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Largest pulse overlap over all cyclic shifts of `a` against `b`. For
/// identical codes the zero shift is skipped, giving the autocorrelation
/// sidelobe.
pub fn max_cross_correlation(a: &OocCode, b: &OocCode) -> Result<usize> {
    if a.length != b.length {
        return Err(Error::Domain(format!(
            "code lengths differ ({} vs {})",
            a.length, b.length
        )));
    }
    Ok(correlation(a, b, a == b))
}

/// Upper bound on the number of codes of length `n_chips` and weight `w >= 2`.
pub fn capacity_bound(n_chips: usize, w: usize) -> Result<usize> {
    if w < 2 {
        return Err(Error::Domain(format!(
            "the cardinality bound needs weight >= 2, got {w}"
        )));
    }
    Ok(n_chips.saturating_sub(1) / (w * (w - 1)))
}

/// Number of assignable codes: the cardinality bound, or `n_chips` for
/// weight 1 where every chip is its own code.
pub fn code_capacity(n_chips: usize, w: usize) -> Result<usize> {
    match w {
        0 => Err(Error::Domain("code weight must be >= 1".into())),
        1 => Ok(n_chips),
        _ => capacity_bound(n_chips, w),
    }
}

/// Chip-synchronous probability that a pulse of one code hits another code.
pub fn collision_probability(n_chips: usize, w: usize) -> Result<f64> {
    if w < 1 || n_chips < 1 {
        return Err(Error::Domain(format!(
            "need weight >= 1 and length >= 1, got w = {w}, n_chips = {n_chips}"
        )));
    }
    if w * w > n_chips {
        return Err(Error::Domain(format!(
            "w^2 = {} exceeds the code length {n_chips}",
            w * w
        )));
    }
    Ok((w * w) as f64 / n_chips as f64)
}

const SEARCH_NODE_BUDGET: u64 = 50_000_000;

/// Deterministic family of `count` codes.
///
/// Weight 1 yields the singletons `{0}, {1}, ...`. Larger weights use a
/// backtracking search over canonical codes (first pulse at chip 0) in
/// lexicographic order, accepting a code when its cyclic differences are
/// disjoint from every difference already in use. Disjoint difference sets
/// are exactly the auto/cross-correlation <= 1 condition.
pub fn generate_family(n_chips: usize, w: usize, count: usize) -> Result<OocFamily> {
    let capacity = code_capacity(n_chips, w)?;
    if count > capacity {
        return Err(Error::Capacity(format!(
            "{count} codes requested but length {n_chips}, weight {w} supports at most {capacity}"
        )));
    }
    if w == 1 {
        let codes = (0..count)
            .map(|i| OocCode::new(n_chips, vec![i]))
            .collect::<Result<Vec<_>>>()?;
        return OocFamily::new(n_chips, w, codes);
    }

    let mut search = Search {
        n: n_chips,
        w,
        count,
        used: vec![false; n_chips],
        family: Vec::with_capacity(count),
        nodes: 0,
    };
    match search.extend_family(None) {
        Some(true) => {
            let codes = search
                .family
                .into_iter()
                .map(|p| OocCode::new(n_chips, p))
                .collect::<Result<Vec<_>>>()?;
            OocFamily::new(n_chips, w, codes)
        }
        Some(false) => Err(Error::Internal(format!(
            "no family of {count} codes with length {n_chips}, weight {w} exists \
             among canonical codes although the bound allows {capacity}"
        ))),
        None => Err(Error::Internal(format!(
            "code search for length {n_chips}, weight {w}, count {count} \
             exhausted its budget of {SEARCH_NODE_BUDGET} nodes"
        ))),
    }
}

struct Search {
    n: usize,
    w: usize,
    count: usize,
    /// used[d] marks cyclic difference d as taken by some accepted code
    used: Vec<bool>,
    family: Vec<Vec<usize>>,
    nodes: u64,
}

impl Search {
    /// Returns Some(found) or None when the node budget runs out.
    fn extend_family(&mut self, after: Option<&[usize]>) -> Option<bool> {
        if self.family.len() == self.count {
            return Some(true);
        }
        let mut code = vec![0usize];
        let floor = after.map(|a| a.to_vec());
        self.extend_code(&mut code, floor.as_deref())
    }

    /// Grows `code` one pulse at a time; a completed code is committed and
    /// the search recurses into the next family member.
    fn extend_code(&mut self, code: &mut Vec<usize>, floor: Option<&[usize]>) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > SEARCH_NODE_BUDGET {
            return None;
        }
        if code.len() == self.w {
            if let Some(f) = floor {
                if code.as_slice() <= f {
                    return Some(false);
                }
            }
            let diffs = self.differences(code);
            for &d in &diffs {
                self.used[d] = true;
            }
            self.family.push(code.clone());
            let done = self.extend_family(Some(code.as_slice()));
            if done != Some(true) {
                self.family.pop();
                for &d in &diffs {
                    self.used[d] = false;
                }
            }
            return done;
        }
        let last = *code.last().unwrap_or(&0);
        let remaining = self.w - code.len();
        for next in last + 1..=self.n - remaining {
            // prune against the lexicographic floor on the prefix
            if let Some(f) = floor {
                let depth = code.len();
                if code[..depth] == f[..depth] && next < f[depth] {
                    continue;
                }
            }
            if !self.compatible(code, next) {
                continue;
            }
            code.push(next);
            let r = self.extend_code(code, floor);
            code.pop();
            match r {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }

    fn differences(&self, code: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(code.len() * (code.len() - 1));
        for (i, &a) in code.iter().enumerate() {
            for &b in &code[i + 1..] {
                out.push(b - a);
                out.push(self.n - (b - a));
            }
        }
        out
    }

    /// Adding `next` keeps all differences of the code distinct and unused.
    fn compatible(&self, code: &[usize], next: usize) -> bool {
        let mut fresh: Vec<usize> = Vec::with_capacity(2 * code.len());
        for &a in code {
            let d = next - a;
            for dd in [d, self.n - d] {
                if dd == 0 || self.used[dd] || fresh.contains(&dd) {
                    return false;
                }
                fresh.push(dd);
            }
        }
        let existing = self.differences(code);
        !fresh.iter().any(|d| existing.contains(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference: shift every pulse of `a` and count coincidences
    /// with `b` by linear scan.
    fn brute_force(a: &[usize], b: &[usize], n: usize, skip_zero: bool) -> usize {
        let mut best = 0;
        for s in 0..n {
            if skip_zero && s == 0 {
                continue;
            }
            let mut hits = 0;
            for &i in a {
                for &j in b {
                    if (i + s) % n == j {
                        hits += 1;
                    }
                }
            }
            best = best.max(hits);
        }
        best
    }

    fn code(n: usize, p: &[usize]) -> OocCode {
        OocCode::new(n, p.to_vec()).unwrap()
    }

    #[test]
    fn single_pulse_correlations() {
        let a = code(16, &[0]);
        assert_eq!(max_cross_correlation(&a, &a).unwrap(), 0);
        assert_eq!(max_cross_correlation(&a, &code(16, &[5])).unwrap(), 1);
    }

    #[test]
    fn weight_three_pair_matches_brute_force() {
        let a = code(13, &[0, 1, 3]);
        let b = code(13, &[0, 2, 7]);
        let expected = brute_force(&[0, 1, 3], &[0, 2, 7], 13, false);
        // shift 12 maps both 1 -> 0 and 3 -> 2
        assert_eq!(expected, 2);
        assert_eq!(max_cross_correlation(&a, &b).unwrap(), expected);
        assert!(OocFamily::new(13, 3, vec![a, b]).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(max_cross_correlation(&code(13, &[0]), &code(16, &[0])).is_err());
    }

    #[test]
    fn invalid_codes_rejected() {
        assert!(OocCode::new(16, vec![]).is_err());
        assert!(OocCode::new(16, vec![3, 1]).is_err());
        assert!(OocCode::new(16, vec![1, 1]).is_err());
        assert!(OocCode::new(16, vec![0, 16]).is_err());
        // differences 1 and 1 repeat: sidelobe 2
        assert!(OocCode::new(16, vec![0, 1, 2]).is_err());
        // length 4, positions {0,2}: shift 2 overlaps both pulses
        assert!(OocCode::new(4, vec![0, 2]).is_err());
    }

    #[test]
    fn cardinality_bound() {
        assert_eq!(capacity_bound(16, 2).unwrap(), 7);
        assert_eq!(capacity_bound(16, 3).unwrap(), 2);
        assert_eq!(capacity_bound(7, 2).unwrap(), 3);
        assert!(capacity_bound(16, 1).is_err());
        assert_eq!(code_capacity(16, 1).unwrap(), 16);
    }

    #[test]
    fn weight_one_family() {
        let f = generate_family(16, 1, 16).unwrap();
        assert_eq!(f.len(), 16);
        for (i, c) in f.codes().iter().enumerate() {
            assert_eq!(c.positions(), &[i]);
        }
    }

    #[test]
    fn weight_two_full_family() {
        let f = generate_family(16, 2, 7).unwrap();
        assert_eq!(f.len(), 7);
        for (i, a) in f.codes().iter().enumerate() {
            assert!(brute_force(a.positions(), a.positions(), 16, true) <= 1);
            for b in &f.codes()[i + 1..] {
                assert!(brute_force(a.positions(), b.positions(), 16, false) <= 1);
            }
        }
    }

    #[test]
    fn over_capacity_is_an_error() {
        assert!(matches!(generate_family(16, 3, 3), Err(Error::Capacity(_))));
        assert!(matches!(generate_family(16, 1, 17), Err(Error::Capacity(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            generate_family(31, 3, 5).unwrap(),
            generate_family(31, 3, 5).unwrap()
        );
    }

    #[test]
    fn various_families_are_valid() {
        for (n, w, count) in [(16, 3, 2), (25, 3, 4), (31, 3, 5), (37, 4, 3), (64, 2, 31)] {
            let f = generate_family(n, w, count).unwrap();
            assert_eq!(f.len(), count);
            for (i, a) in f.codes().iter().enumerate() {
                for b in &f.codes()[i + 1..] {
                    assert!(brute_force(a.positions(), b.positions(), n, false) <= 1);
                }
            }
        }
    }

    #[test]
    fn collision_probabilities() {
        assert_eq!(collision_probability(16, 1).unwrap(), 0.0625);
        assert_eq!(collision_probability(16, 2).unwrap(), 0.25);
        assert_eq!(collision_probability(128, 1).unwrap(), 7.8125e-3);
        assert!(collision_probability(16, 5).is_err());
        assert!(collision_probability(16, 0).is_err());
    }

    /// Fraction of the N_c x N_c shift pairs for which two codes overlap.
    fn exhaustive_collision_freq(a: &OocCode, b: &OocCode) -> f64 {
        let n = a.length();
        let mut hits = 0usize;
        for sa in 0..n {
            let ma = a.shifted_mask(sa);
            for sb in 0..n {
                let mb = b.shifted_mask(sb);
                if ma.iter().zip(&mb).any(|(x, y)| *x && *y) {
                    hits += 1;
                }
            }
        }
        hits as f64 / (n * n) as f64
    }

    #[test]
    fn weight_one_collision_frequency_is_exact() {
        let f = generate_family(16, 1, 16).unwrap();
        let freq = exhaustive_collision_freq(&f.codes()[0], &f.codes()[3]);
        assert_eq!(freq, 1.0 / 16.0);
    }

    #[test]
    fn weight_two_collision_frequency_within_model() {
        let f = generate_family(16, 2, 7).unwrap();
        let p = collision_probability(16, 2).unwrap();
        for (i, a) in f.codes().iter().enumerate() {
            for b in &f.codes()[i + 1..] {
                assert!(exhaustive_collision_freq(a, b) <= p + 1e-15);
            }
        }
    }

    #[test]
    fn display_is_comma_separated() {
        assert_eq!(code(16, &[0, 1, 5]).to_string(), "0,1,5");
    }
}
