use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// A generator or its inverse, packed as `2 * generator + inverse_bit`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(pub u16);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter((generator as u16) << 1 | inverse as u16)
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
}

/// A word in the free group, kept freely reduced by every constructor
/// except [`Word::from_letters_unreduced`].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn letter(l: Letter) -> Self {
        Word { letters: alloc::vec![l] }
    }

    /// Freely reduces the input.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Word::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn from_letters_unreduced(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|p| p[0] != p[1].inverse())
    }

    pub fn reduced(&self) -> Word {
        Word::from_letters(self.letters.iter().copied())
    }

    /// Appends a letter, cancelling against the last one.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Product of two reduced words.
    pub fn mul(&self, other: &Word) -> Word {
        let a = &self.letters;
        let b = &other.letters;
        let mut k = 0;
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == b[k].inverse() {
            k += 1;
        }
        let mut letters = Vec::with_capacity(a.len() + b.len() - 2 * k);
        letters.extend_from_slice(&a[..a.len() - k]);
        letters.extend_from_slice(&b[k..]);
        Word { letters }
    }

    pub fn pow(&self, n: usize) -> Word {
        let mut out = Word::empty();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Parses `a`..`z` as generators and `A`..`Z` as their inverses.
    pub fn parse(s: &str) -> Result<Word> {
        let mut w = Word::empty();
        if s == "1" {
            return Ok(w);
        }
        for ch in s.chars() {
            let l = match ch {
                'a'..='z' => Letter::new(ch as usize - 'a' as usize, false),
                'A'..='Z' => Letter::new(ch as usize - 'A' as usize, true),
                _ => return Err(Error::invalid(alloc::format!("bad letter {ch:?} in word"))),
            };
            w.push(l);
        }
        Ok(w)
    }

    pub fn to_compact(&self) -> String {
        let mut s = String::new();
        if self.letters.iter().all(|l| l.generator() < 26) {
            for l in &self.letters {
                let base = if l.is_inverse() { b'A' } else { b'a' };
                s.push((base + l.generator() as u8) as char);
            }
        } else {
            for (i, l) in self.letters.iter().enumerate() {
                if i > 0 {
                    s.push('.');
                }
                s.push_str(&alloc::format!("g{}", l.generator()));
                if l.is_inverse() {
                    s.push('\'');
                }
            }
        }
        s
    }
}

/// Shortlex order: shorter words first, then by letter code.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "e")
        } else {
            write!(f, "{}", self.to_compact())
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `2k(2k-1)^(n-1)` for `n >= 1`, one for `n = 0`; `None` on overflow.
pub fn reduced_word_count(k: usize, n: usize) -> Option<u128> {
    if n == 0 {
        return Some(1);
    }
    let k = k as u128;
    let mut c = 2 * k;
    for _ in 1..n {
        c = c.checked_mul(2 * k - 1)?;
    }
    Some(c)
}

/// All reduced words of one exact length, in lexicographic letter order.
pub struct ReducedWords {
    alphabet: u16,
    cur: Vec<u16>,
    done: bool,
}

impl ReducedWords {
    pub fn new(k: usize, n: usize) -> Self {
        let mut cur = Vec::with_capacity(n);
        for i in 0..n {
            let prev = if i == 0 { None } else { Some(cur[i - 1]) };
            cur.push(smallest_after(prev));
        }
        ReducedWords {
            alphabet: 2 * k as u16,
            cur,
            done: k == 0 && n > 0,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.cur.len();
        for i in (0..n).rev() {
            let prev = if i == 0 { None } else { Some(self.cur[i - 1]) };
            let mut next = self.cur[i] + 1;
            if prev.map(|p| p ^ 1) == Some(next) {
                next += 1;
            }
            if next < self.alphabet {
                self.cur[i] = next;
                for j in i + 1..n {
                    self.cur[j] = smallest_after(Some(self.cur[j - 1]));
                }
                return true;
            }
        }
        false
    }
}

fn smallest_after(prev: Option<u16>) -> u16 {
    match prev {
        Some(p) if p ^ 1 == 0 => 1,
        _ => 0,
    }
}

impl Iterator for ReducedWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let w = Word {
            letters: self.cur.iter().map(|&c| Letter(c)).collect(),
        };
        if !self.advance() {
            self.done = true;
        }
        Some(w)
    }
}

/// Words of length `lo..=hi`, shortest first.
pub struct WordStream {
    k: usize,
    len: usize,
    hi: usize,
    inner: ReducedWords,
}

impl WordStream {
    pub(crate) fn new(k: usize, lo: usize, hi: usize) -> Self {
        WordStream {
            k,
            len: lo,
            hi,
            inner: ReducedWords::new(k, lo),
        }
    }
}

impl Iterator for WordStream {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            if let Some(w) = self.inner.next() {
                return Some(w);
            }
            if self.len >= self.hi {
                return None;
            }
            self.len += 1;
            self.inner = ReducedWords::new(self.k, self.len);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn brute_force_reduced(k: usize, n: usize) -> BTreeSet<Vec<u16>> {
        // every raw word of length n over 2k letters, keeping the ones with no cancellation
        let a = 2 * k as u16;
        let mut out = BTreeSet::new();
        let total = (a as usize).pow(n as u32);
        for mut code in 0..total {
            let mut v = Vec::new();
            for _ in 0..n {
                v.push((code % a as usize) as u16);
                code /= a as usize;
            }
            if v.windows(2).all(|p| p[0] != p[1] ^ 1) {
                out.insert(v);
            }
        }
        out
    }

    #[test]
    fn counts_match_formula() {
        assert_eq!(ReducedWords::new(2, 1).count(), 4);
        assert_eq!(ReducedWords::new(2, 3).count(), 36);
        assert_eq!(ReducedWords::new(3, 2).count(), 30);
        assert_eq!(ReducedWords::new(2, 0).count(), 1);
        for k in 1..4 {
            for n in 0..5 {
                assert_eq!(
                    ReducedWords::new(k, n).count() as u128,
                    reduced_word_count(k, n).unwrap()
                );
            }
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (k, n) in [(2, 3), (3, 3), (2, 4), (1, 4)] {
            let got: BTreeSet<Vec<u16>> = ReducedWords::new(k, n)
                .map(|w| w.letters().iter().map(|l| l.0).collect())
                .collect();
            assert_eq!(got, brute_force_reduced(k, n));
        }
    }

    #[test]
    fn cancellation() {
        let a = Letter::new(0, false);
        let w = Word::from_letters([a, a.inverse()]);
        assert!(w.is_empty());
        let ab = Word::parse("ab").unwrap();
        assert_eq!(ab.mul(&ab.inverse()), Word::empty());
        assert_eq!(Word::parse("abA").unwrap().mul(&Word::parse("aB").unwrap()), Word::parse("ab").unwrap().mul(&Word::parse("B").unwrap()));
        assert_eq!(Word::parse("aBc").unwrap().to_compact(), "aBc");
    }

    #[test]
    fn stream_covers_all_lengths() {
        let n: usize = WordStream::new(2, 0, 3).count();
        assert_eq!(n, 1 + 4 + 12 + 36);
    }
}
