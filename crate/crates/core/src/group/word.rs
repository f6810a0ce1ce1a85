//! Letters of a free basis and freely reduced words.
//!
//! A letter is stored as a single byte `2 * generator + inverse_bit`, so the
//! derived ordering is the canonical one `a < A < b < B < ...` and inversion
//! is a bit flip. Words compare lexicographically, which is also the order in
//! which a depth-first walk of the Cayley tree visits them.

use std::borrow::Borrow;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::Error;

/// Largest supported rank; letters are rendered as `a..z` / `A..Z`.
pub const MAX_RANK: usize = 26;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    /// The letter for generator `index` (0-based) with the given sign.
    pub fn new(index: usize, inverse: bool) -> Letter {
        assert!(index < MAX_RANK, "generator index {index} out of range");
        Letter((2 * index + inverse as usize) as u8)
    }

    pub fn from_code(code: usize) -> Letter {
        assert!(code < 2 * MAX_RANK);
        Letter(code as u8)
    }

    /// Position in the canonical order, `0..2k`.
    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    /// All `2k` letters in canonical order.
    pub fn alphabet(rank: usize) -> impl Iterator<Item = Letter> + Clone {
        (0..2 * rank).map(|c| Letter(c as u8))
    }

    /// Letters that may follow `prev` in a reduced word.
    pub fn successors(rank: usize, prev: Option<Letter>) -> impl Iterator<Item = Letter> + Clone {
        let banned = prev.map(Letter::inverse);
        Letter::alphabet(rank).filter(move |&s| Some(s) != banned)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.generator() as u8) as char
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a'..='z' => Some(Letter::new(c as usize - 'a' as usize, false)),
            'A'..='Z' => Some(Letter::new(c as usize - 'A' as usize, true)),
            _ => None,
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// An element of the free group, as a freely reduced sequence of letters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ReducedWord(Vec<Letter>);

/// `true` if no two adjacent letters cancel.
pub fn is_reduced(letters: &[Letter]) -> bool {
    letters.windows(2).all(|p| p[1] != p[0].inverse())
}

/// Length of the longest common prefix of two letter sequences.
#[inline]
pub fn common_prefix_len(x: &[Letter], y: &[Letter]) -> usize {
    x.iter().zip(y).take_while(|(a, b)| a == b).count()
}

impl ReducedWord {
    pub fn identity() -> ReducedWord {
        ReducedWord(Vec::new())
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> ReducedWord {
        let mut out: Vec<Letter> = Vec::new();
        for s in letters {
            if out.last() == Some(&s.inverse()) {
                out.pop();
            } else {
                out.push(s);
            }
        }
        ReducedWord(out)
    }

    /// Wraps an already reduced sequence.
    pub fn from_reduced(letters: Vec<Letter>) -> Result<ReducedWord, Error> {
        if is_reduced(&letters) {
            Ok(ReducedWord(letters))
        } else {
            Err(Error::NotReduced(ReducedWord(letters).to_string()))
        }
    }

    pub(crate) fn from_reduced_unchecked(letters: Vec<Letter>) -> ReducedWord {
        debug_assert!(is_reduced(&letters));
        ReducedWord(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Word length with respect to the free basis.
    pub fn word_len(&self) -> usize {
        self.0.len()
    }

    /// Highest generator index used, plus one.
    pub fn min_rank(&self) -> usize {
        self.0.iter().map(|s| s.generator() + 1).max().unwrap_or(0)
    }

    pub fn multiply(&self, other: &ReducedWord) -> ReducedWord {
        multiply_slices(&self.0, &other.0)
    }

    pub fn invert(&self) -> ReducedWord {
        ReducedWord(self.0.iter().rev().map(|s| s.inverse()).collect())
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord(self.0[..n].to_vec())
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn starts_with(&self, prefix: &[Letter]) -> bool {
        self.0.starts_with(prefix)
    }

    /// Appends a letter, or returns `None` if it would cancel.
    pub fn extended(&self, s: Letter) -> Option<ReducedWord> {
        if self.last() == Some(s.inverse()) {
            return None;
        }
        let mut v = self.0.clone();
        v.push(s);
        Some(ReducedWord(v))
    }

    /// Strips matching inverse letters from both ends (conjugation to a
    /// cyclically reduced word).
    pub fn cyclic_reduction(&self) -> ReducedWord {
        let w = &self.0;
        let (mut i, mut j) = (0, w.len());
        while j - i >= 2 && w[j - 1] == w[i].inverse() {
            i += 1;
            j -= 1;
        }
        ReducedWord(w[i..j].to_vec())
    }

    /// Every reduced word of the given word length over `rank` generators,
    /// in canonical order.
    pub fn all_of_length(rank: usize, n: usize) -> Vec<ReducedWord> {
        let mut out = Vec::new();
        let mut stack = Vec::with_capacity(n);
        fn rec(rank: usize, n: usize, stack: &mut Vec<Letter>, out: &mut Vec<ReducedWord>) {
            if stack.len() == n {
                out.push(ReducedWord(stack.clone()));
                return;
            }
            for s in Letter::successors(rank, stack.last().copied()) {
                stack.push(s);
                rec(rank, n, stack, out);
                stack.pop();
            }
        }
        rec(rank, n, &mut stack, &mut out);
        out
    }
}

/// Freely reduced product of two reduced letter sequences.
pub fn multiply_slices(u: &[Letter], v: &[Letter]) -> ReducedWord {
    let mut cancel = 0;
    while cancel < u.len() && cancel < v.len() && u[u.len() - 1 - cancel] == v[cancel].inverse() {
        cancel += 1;
    }
    let mut out = Vec::with_capacity(u.len() + v.len() - 2 * cancel);
    out.extend_from_slice(&u[..u.len() - cancel]);
    out.extend_from_slice(&v[cancel..]);
    ReducedWord(out)
}

/// Writes the reduced word `u⁻¹ v` into `out` (cleared first).
pub(crate) fn left_divide_into(u: &[Letter], v: &[Letter], out: &mut Vec<Letter>) {
    let p = common_prefix_len(u, v);
    out.clear();
    out.extend(u[p..].iter().rev().map(|s| s.inverse()));
    out.extend_from_slice(&v[p..]);
}

impl Deref for ReducedWord {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl Borrow<[Letter]> for ReducedWord {
    fn borrow(&self) -> &[Letter] {
        &self.0
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for s in &self.0 {
            write!(f, "{}", s.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `"abAB"`, `"a b A B"`, `"1"` or `""` (identity). The input must
/// already be reduced.
impl FromStr for ReducedWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReducedWord, Error> {
        let t = s.trim();
        if t == "1" || t.is_empty() {
            return Ok(ReducedWord::identity());
        }
        let mut letters = Vec::new();
        for c in t.chars().filter(|c| !c.is_whitespace()) {
            letters.push(Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad letter {c:?} in word {s:?}")))?);
        }
        ReducedWord::from_reduced(letters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    #[test]
    fn letter_order_is_canonical() {
        let a: Vec<char> = Letter::alphabet(2).map(Letter::to_char).collect();
        assert_eq!(a, vec!['a', 'A', 'b', 'B']);
        assert!(Letter::new(0, false) < Letter::new(0, true));
        assert!(Letter::new(0, true) < Letter::new(1, false));
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(w("ab").multiply(&w("Ba")), w("aa"));
        assert_eq!(w("a").multiply(&w("A")), ReducedWord::identity());
        assert_eq!(w("ab").multiply(&w("ba")), w("abba"));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(w("ab").invert(), w("BA"));
        assert_eq!(ReducedWord::identity().invert(), ReducedWord::identity());
        assert_eq!(w("aaB").invert(), w("bAA"));
    }

    #[test]
    fn cyclic_reduction_strips_conjugator() {
        assert_eq!(w("abA").cyclic_reduction(), w("b"));
        assert_eq!(w("ab").cyclic_reduction(), w("ab"));
        assert_eq!(w("abaBA").cyclic_reduction(), w("a"));
    }

    #[test]
    fn parse_rejects_unreduced_and_junk() {
        assert!("aA".parse::<ReducedWord>().is_err());
        assert!("a1".parse::<ReducedWord>().is_err());
        assert_eq!(w("a b A").to_string(), "abA");
        assert_eq!(w("1").to_string(), "1");
    }

    #[test]
    fn sphere_counts_match_branching() {
        for n in 1..=6 {
            assert_eq!(ReducedWord::all_of_length(2, n).len(), 4 * 3usize.pow(n as u32 - 1));
        }
    }

    #[test]
    fn left_divide_matches_multiply() {
        let mut buf = Vec::new();
        for (u, v) in [("ab", "aB"), ("abab", "ab"), ("A", "bb"), ("1", "ab")] {
            left_divide_into(&w(u), &w(v), &mut buf);
            assert_eq!(buf.as_slice(), w(u).invert().multiply(&w(v)).letters());
        }
    }
}
