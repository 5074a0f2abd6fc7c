//! Dense univariate polynomials over GF(2), stored as little-endian bit limbs.
//!
//! Used for field moduli of arbitrary degree: irreducibility testing,
//! factor search and the x^k mod P reduction matrix.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitPoly {
    limbs: Vec<u64>,
}

impl BitPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0)
    }

    /// x^k
    pub fn monomial(k: usize) -> Self {
        let mut p = Self::zero();
        p.set(k, true);
        p
    }

    pub fn from_exponents<I: IntoIterator<Item = usize>>(exps: I) -> Self {
        let mut p = Self::zero();
        for e in exps {
            p.flip(e);
        }
        p
    }

    pub fn from_u64(bits: u64) -> Self {
        let mut p = Self { limbs: vec![bits] };
        p.trim();
        p
    }

    pub fn from_limbs(limbs: Vec<u64>) -> Self {
        let mut p = Self { limbs };
        p.trim();
        p
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    /// Low 64 coefficients.
    pub fn low_u64(&self) -> u64 {
        self.limbs.first().copied().unwrap_or(0)
    }

    fn trim(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.limbs.len() == 1 && self.limbs[0] == 1
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + 63 - top.leading_zeros() as usize)
    }

    pub fn coeff(&self, k: usize) -> bool {
        self.limbs
            .get(k / 64)
            .is_some_and(|w| w >> (k % 64) & 1 == 1)
    }

    pub fn set(&mut self, k: usize, value: bool) {
        if k / 64 >= self.limbs.len() {
            if !value {
                return;
            }
            self.limbs.resize(k / 64 + 1, 0);
        }
        if value {
            self.limbs[k / 64] |= 1 << (k % 64);
        } else {
            self.limbs[k / 64] &= !(1 << (k % 64));
        }
        self.trim();
    }

    pub fn flip(&mut self, k: usize) {
        let v = self.coeff(k);
        self.set(k, !v);
    }

    /// Exponents with nonzero coefficient, ascending.
    pub fn exponents(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &w) in self.limbs.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(i * 64 + b);
                w &= w - 1;
            }
        }
        out
    }

    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn add(&self, other: &BitPoly) -> BitPoly {
        let n = self.limbs.len().max(other.limbs.len());
        let limbs = (0..n)
            .map(|i| {
                self.limbs.get(i).copied().unwrap_or(0) ^ other.limbs.get(i).copied().unwrap_or(0)
            })
            .collect();
        BitPoly::from_limbs(limbs)
    }

    fn xor_shifted(&mut self, other: &BitPoly, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        let need = other.limbs.len() + ws + 1;
        if self.limbs.len() < need {
            self.limbs.resize(need, 0);
        }
        for (i, &w) in other.limbs.iter().enumerate() {
            self.limbs[i + ws] ^= w << bs;
            if bs != 0 {
                self.limbs[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        self.trim();
    }

    pub fn mul(&self, other: &BitPoly) -> BitPoly {
        let mut out = BitPoly::zero();
        for e in other.exponents() {
            out.xor_shifted(self, e);
        }
        out
    }

    /// Quotient and remainder of `self / divisor`.
    pub fn div_rem(&self, divisor: &BitPoly) -> (BitPoly, BitPoly) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let mut rem = self.clone();
        let mut quot = BitPoly::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            quot.flip(rd - dd);
            rem.xor_shifted(divisor, rd - dd);
        }
        (quot, rem)
    }

    pub fn rem(&self, divisor: &BitPoly) -> BitPoly {
        self.div_rem(divisor).1
    }

    pub fn mul_mod(&self, other: &BitPoly, modulus: &BitPoly) -> BitPoly {
        self.mul(other).rem(modulus)
    }

    pub fn gcd(&self, other: &BitPoly) -> BitPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// x^(2^k) mod `modulus`, by k repeated squarings of x.
    pub fn x_pow_pow2_mod(k: usize, modulus: &BitPoly) -> BitPoly {
        let mut t = BitPoly::monomial(1).rem(modulus);
        for _ in 0..k {
            t = t.mul_mod(&t, modulus);
        }
        t
    }

    /// Term-list rendering, highest degree first: `x^4 + x + 1`.
    pub fn to_term_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .rev()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{e}"),
            })
            .collect();
        terms.join(" + ")
    }

    /// `0x`-prefixed hex bitmask, bit i = coefficient of x^i.
    pub fn to_hex_string(&self) -> String {
        if self.is_zero() {
            return "0x0".to_string();
        }
        let mut s = String::from("0x");
        let top = self.limbs.len() - 1;
        s.push_str(&format!("{:x}", self.limbs[top]));
        for i in (0..top).rev() {
            s.push_str(&format!("{:016x}", self.limbs[i]));
        }
        s
    }
}

impl fmt::Debug for BitPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPoly({})", self.to_term_string())
    }
}

impl fmt::Display for BitPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_term_string())
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test: `p` of degree m is irreducible iff x^(2^m) = x mod p and
/// gcd(x^(2^(m/q)) - x, p) = 1 for every prime q dividing m.
pub fn is_irreducible(p: &BitPoly) -> bool {
    let m = match p.degree() {
        Some(m) if m >= 1 => m,
        _ => return false,
    };
    let x = BitPoly::monomial(1).rem(p);
    if BitPoly::x_pow_pow2_mod(m, p) != x {
        return false;
    }
    prime_divisors(m).into_iter().all(|q| {
        let t = BitPoly::x_pow_pow2_mod(m / q, p).add(&x);
        t.gcd(p).is_one()
    })
}

/// Finds a nontrivial factor of a reducible `p`, or `None` when `p` is irreducible.
///
/// Distinct-degree factorization locates the smallest factor degree d; if the
/// resulting gcd is all of `p`, an equal-degree split with deterministic
/// trace-map candidates separates it.
pub fn find_factor(p: &BitPoly) -> Option<BitPoly> {
    let m = p.degree()?;
    if m <= 1 {
        return None;
    }
    if !p.coeff(0) {
        return Some(BitPoly::monomial(1));
    }
    let x = BitPoly::monomial(1);
    let mut t = x.clone();
    for d in 1..=m / 2 {
        t = t.mul_mod(&t, p);
        let g = t.add(&x).gcd(p);
        if g.is_one() {
            continue;
        }
        if g != *p {
            return Some(g);
        }
        return Some(equal_degree_split(p, d));
    }
    None
}

/// Splits `p`, a product of at least two irreducibles of degree `d`.
fn equal_degree_split(p: &BitPoly, d: usize) -> BitPoly {
    let m = p.degree().unwrap();
    let mut candidate: u64 = 2;
    loop {
        let a = BitPoly::from_u64(candidate).rem(p);
        candidate += 1;
        if a.is_zero() {
            continue;
        }
        // trace map a + a^2 + ... + a^(2^(d-1))
        let mut term = a.clone();
        let mut tr = a;
        for _ in 1..d {
            term = term.mul_mod(&term, p);
            tr = tr.add(&term);
        }
        let g = tr.gcd(p);
        if let Some(gd) = g.degree() {
            if gd > 0 && gd < m {
                return g;
            }
        }
        debug_assert!(candidate < 1 << 20, "equal-degree split did not converge");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let p = BitPoly::from_exponents([2, 1, 0]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.to_term_string(), "x^2 + x + 1");
        assert_eq!(p.to_hex_string(), "0x7");
        let sq = BitPoly::from_exponents([1, 0]).mul(&BitPoly::from_exponents([1, 0]));
        assert_eq!(sq, BitPoly::from_exponents([2, 0]));
        let (q, r) = BitPoly::from_exponents([4, 0]).div_rem(&BitPoly::from_exponents([1, 0]));
        assert!(r.is_zero());
        assert_eq!(q, BitPoly::from_exponents([3, 2, 1, 0]));
    }

    #[test]
    fn wide_shifts_cross_limbs() {
        let p = BitPoly::from_exponents([571, 10, 5, 2, 0]);
        assert_eq!(p.degree(), Some(571));
        assert_eq!(p.exponents(), vec![0, 2, 5, 10, 571]);
        let x = BitPoly::monomial(300);
        let sq = x.mul(&x).rem(&p);
        assert!(sq.degree().unwrap() < 571);
    }

    #[test]
    fn irreducibility_of_small_polys() {
        assert!(is_irreducible(&BitPoly::from_exponents([1, 0])));
        assert!(is_irreducible(&BitPoly::from_exponents([2, 1, 0])));
        assert!(!is_irreducible(&BitPoly::from_exponents([2, 0])));
        assert!(!is_irreducible(&BitPoly::from_exponents([4, 2, 0])));
        assert!(is_irreducible(&BitPoly::from_exponents([4, 3, 0])));
    }

    #[test]
    fn factor_of_equal_degree_product() {
        // (x^3+x+1)(x^3+x^2+1)
        let p = BitPoly::from_exponents([3, 1, 0]).mul(&BitPoly::from_exponents([3, 2, 0]));
        let f = find_factor(&p).unwrap();
        assert_eq!(f.degree(), Some(3));
        assert!(p.rem(&f).is_zero());
    }

    #[test]
    fn factor_of_square() {
        let f = find_factor(&BitPoly::from_exponents([2, 0])).unwrap();
        assert_eq!(f, BitPoly::from_exponents([1, 0]));
        let f = find_factor(&BitPoly::from_exponents([4, 2, 0])).unwrap();
        assert!(BitPoly::from_exponents([4, 2, 0]).rem(&f).is_zero());
        assert!(find_factor(&BitPoly::from_exponents([4, 1, 0])).is_none());
    }
}
