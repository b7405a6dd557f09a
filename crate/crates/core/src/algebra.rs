//! Finite fields `F_q` with `q = p^e`, and the truncated unramified lifts
//! `Z_q / p^M` used by the ghost-residue pairing.
//!
//! Elements are coefficient vectors over a fixed monic modulus; the ring
//! object performs all arithmetic, so elements stay plain data.  Moduli
//! default to hard-coded Conway polynomials for `p in {2, 3, 5}` and
//! `e <= 3`; arbitrary monic irreducible moduli are accepted after an
//! explicit irreducibility check.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;

/// Coefficient rings that Laurent series and Witt vectors can be built over.
///
/// The ring object owns the modulus data; elements carry none, so mixing
/// elements of different ring instances is a caller error guarded at the
/// public entry points.
pub trait CoeffRing: Clone + PartialEq + std::fmt::Debug {
    type Elem: Clone + PartialEq + std::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Canonical image of an integer.
    fn from_i64(&self, k: i64) -> Self::Elem;
    /// Canonical image of a big integer (used when specialising universal
    /// Witt polynomials).
    fn from_bigint(&self, k: &BigInt) -> Self::Elem;
    /// Multiplicative inverse of a unit; `None` for non-units.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_unit(&self, a: &Self::Elem) -> bool {
        self.inv(a).is_some()
    }
    fn pow(&self, a: &Self::Elem, k: u64) -> Self::Elem {
        let mut acc = self.one();
        let mut base = a.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }
    /// `Some(p)` when the ring has prime characteristic `p`, `None` otherwise.
    fn char_prime(&self) -> Option<u64>;
    /// The `p`-power Frobenius where it is a ring endomorphism (prime
    /// characteristic only); `None` otherwise.
    fn frob_p(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn format_elem(&self, a: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;
    /// Uniform-ish random element, for law suites.
    fn rand_elem(&self, rng: &mut dyn rand::RngCore) -> Self::Elem;
}

// --- Conway moduli -----------------------------------------------------------

/// Hard-coded Conway polynomials, ascending coefficients `c_0, ..., c_e` with
/// `c_e = 1`.  Desk range: `p in {2, 3, 5}`, `e <= 3`.
fn conway(p: u64, e: usize) -> Option<Vec<u64>> {
    let v: &[u64] = match (p, e) {
        (2, 1) => &[1, 1],
        (2, 2) => &[1, 1, 1],
        (2, 3) => &[1, 1, 0, 1],
        (3, 1) => &[1, 1],
        (3, 2) => &[2, 2, 1],
        (3, 3) => &[1, 2, 0, 1],
        (5, 1) => &[3, 1],
        (5, 2) => &[2, 4, 1],
        (5, 3) => &[3, 3, 0, 1],
        _ => return None,
    };
    Some(v.to_vec())
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// --- dense polynomial helpers over F_p (for modulus validation) -------------

fn poly_trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
    if v.is_empty() {
        v.push(0);
    }
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    poly_rem(&mut prod, f, p);
    prod
}

/// Reduce `v` modulo the monic polynomial `f` in place.
fn poly_rem(v: &mut Vec<u64>, f: &[u64], p: u64) {
    let d = f.len() - 1;
    while v.len() > d {
        let k = v.len() - 1;
        let c = v[k];
        v.pop();
        if c != 0 {
            for j in 0..d {
                let idx = k - d + j;
                v[idx] = (v[idx] + p - (c * f[j]) % p) % p;
            }
        }
    }
    poly_trim(v);
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        // a mod b, with b made monic first
        let lead = *b.last().unwrap();
        let lead_inv = mod_inv(lead, p);
        let bm: Vec<u64> = b.iter().map(|&c| (c * lead_inv) % p).collect();
        let mut r = a.clone();
        poly_rem(&mut r, &bm, p);
        a = b;
        b = r;
    }
    a
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p prime, a nonzero mod p
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut b: u64, mut k: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        k >>= 1;
    }
    acc
}

/// Irreducibility over `F_p` for a monic `f` of degree `e`:
/// `x^(p^e) == x (mod f)` and `gcd(x^(p^(e/l)) - x, f) = 1` for prime `l | e`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let e = f.len() - 1;
    if e == 0 {
        return false;
    }
    let x = vec![0u64, 1u64];
    let xq = |k: u32| -> Vec<u64> {
        // x^(p^k) mod f by k-fold p-power
        let mut acc = x.clone();
        for _ in 0..k {
            let mut pw = vec![1u64];
            let mut base = acc.clone();
            let mut exp = p;
            while exp > 0 {
                if exp & 1 == 1 {
                    pw = poly_mulmod(&pw, &base, f, p);
                }
                exp >>= 1;
                if exp > 0 {
                    base = poly_mulmod(&base, &base, f, p);
                }
            }
            acc = pw;
        }
        acc
    };
    // x^(p^e) - x must vanish mod f
    let mut top = xq(e as u32);
    sub_poly(&mut top, &x, p);
    poly_rem(&mut top, f, p);
    if !(top.len() == 1 && top[0] == 0) {
        return false;
    }
    let mut rem = e;
    let mut primes = Vec::new();
    let mut d = 2;
    while d * d <= rem {
        if rem % d == 0 {
            primes.push(d);
            while rem % d == 0 {
                rem /= d;
            }
        }
        d += 1;
    }
    if rem > 1 {
        primes.push(rem);
    }
    for l in primes {
        let mut h = xq((e / l) as u32);
        sub_poly(&mut h, &x, p);
        let g = poly_gcd(f.to_vec(), h, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

fn sub_poly(a: &mut Vec<u64>, b: &[u64], p: u64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, &c) in b.iter().enumerate() {
        a[i] = (a[i] + p - c % p) % p;
    }
}

// --- F_q ---------------------------------------------------------------------

/// The finite field `F_q`, `q = p^e`, as `F_p[g] / (modulus)`.
#[derive(Debug, Clone)]
pub struct FqField {
    p: u64,
    e: usize,
    /// Monic modulus, ascending coefficients, length `e + 1`, entries in `[0, p)`.
    modulus: Vec<u64>,
    /// Printed name of the residue of `x`; `g` by default.
    symbol: String,
}

/// Element of `F_q`: coefficient vector of length `e`, entries in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FqElem {
    pub(crate) c: Vec<u64>,
}

impl PartialEq for FqField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}
impl Eq for FqField {}

impl FqField {
    /// Field with the hard-coded Conway modulus.
    pub fn new(p: u64, e: usize) -> Result<FqField> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("p={p} is not prime")));
        }
        let modulus = conway(p, e).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no built-in modulus for p={p}, e={e}; supply one explicitly"
            ))
        })?;
        FqField::with_modulus(p, e, modulus)
    }

    /// Field with a user-supplied modulus (ascending coefficients, length
    /// `e + 1`).  Non-monic input is normalised; reducible input is rejected.
    pub fn with_modulus(p: u64, e: usize, modulus: Vec<u64>) -> Result<FqField> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("p={p} is not prime")));
        }
        if e == 0 {
            return Err(Error::InvalidParameter("extension degree e must be >= 1".into()));
        }
        if p > 1 << 20 {
            return Err(Error::InvalidParameter(format!("p={p} too large for desk scale")));
        }
        if modulus.len() != e + 1 {
            return Err(Error::InvalidParameter(format!(
                "modulus must list {} coefficients c_0..c_{}",
                e + 1,
                e
            )));
        }
        let mut m: Vec<u64> = modulus.iter().map(|&c| c % p).collect();
        let lead = *m.last().unwrap();
        if lead == 0 {
            return Err(Error::InvalidParameter("modulus is not of full degree".into()));
        }
        if lead != 1 {
            let inv = mod_inv(lead, p);
            for c in m.iter_mut() {
                *c = (*c * inv) % p;
            }
        }
        if !is_irreducible(&m, p) {
            return Err(Error::InvalidParameter("modulus is reducible over F_p".into()));
        }
        Ok(FqField { p, e, modulus: m, symbol: "g".into() })
    }

    /// The prime field `F_p`.
    pub fn prime_field(p: u64) -> Result<FqField> {
        // x - 0 would do, but keep the Conway convention when available.
        if let Some(m) = conway(p, 1) {
            return FqField::with_modulus(p, 1, m);
        }
        FqField::with_modulus(p, 1, vec![0, 1])
    }

    /// Parse a field description `p=<prime>,e=<deg>[,modulus=<c0,...,ce>]`.
    pub fn from_spec(spec: &str) -> Result<FqField> {
        let mut p: Option<u64> = None;
        let mut e: Option<usize> = None;
        let mut modulus: Option<Vec<u64>> = None;
        // The modulus value itself contains commas, so split on `key=` markers.
        let mut rest = spec.trim();
        while !rest.is_empty() {
            let (key, after) = match rest.split_once('=') {
                Some(kv) => kv,
                None => {
                    return Err(Error::Parse {
                        pos: spec.len() - rest.len(),
                        msg: "expected key=value".into(),
                    })
                }
            };
            let key = key.trim();
            match key {
                "p" | "e" => {
                    let (val, tail) = match after.split_once(',') {
                        Some((v, t)) => (v, t),
                        None => (after, ""),
                    };
                    let n: u64 = val.trim().parse().map_err(|_| Error::Parse {
                        pos: spec.len() - after.len(),
                        msg: format!("bad integer for {key}"),
                    })?;
                    if key == "p" {
                        p = Some(n);
                    } else {
                        e = Some(n as usize);
                    }
                    rest = tail;
                }
                "modulus" => {
                    let coeffs: Result<Vec<u64>> = after
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<u64>().map_err(|_| Error::Parse {
                                pos: spec.len() - after.len(),
                                msg: "bad modulus coefficient".into(),
                            })
                        })
                        .collect();
                    modulus = Some(coeffs?);
                    rest = "";
                }
                other => {
                    return Err(Error::Parse {
                        pos: spec.len() - rest.len(),
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let p = p.ok_or_else(|| Error::Parse { pos: 0, msg: "missing p=".into() })?;
        let e = e.unwrap_or(1);
        match modulus {
            Some(m) => FqField::with_modulus(p, e, m),
            None => FqField::new(p, e),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn e(&self) -> usize {
        self.e
    }
    pub fn q(&self) -> u64 {
        self.p.pow(self.e as u32)
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    /// The residue of `x`, i.e. the printed generator `g` (for `e = 1` this
    /// is the image of `-c_0`, rarely useful).
    pub fn gen(&self) -> FqElem {
        if self.e == 1 {
            return FqElem { c: vec![(self.p - self.modulus[0] % self.p) % self.p] };
        }
        let mut c = vec![0; self.e];
        c[1] = 1;
        FqElem { c }
    }

    /// `g^i` for `i < e`: the standard `F_p`-basis used for generators and
    /// dual-conductor probes.
    pub fn basis(&self) -> Vec<FqElem> {
        (0..self.e)
            .map(|i| {
                let mut c = vec![0; self.e];
                c[i] = 1;
                FqElem { c }
            })
            .collect()
    }

    fn reduce(&self, mut v: Vec<u64>) -> FqElem {
        poly_rem(&mut v, &self.modulus, self.p);
        v.resize(self.e, 0);
        FqElem { c: v }
    }

    /// Dense index in `[0, q)`: mixed radix base `p`, constant coefficient least
    /// significant.
    pub fn elem_index(&self, a: &FqElem) -> u64 {
        let mut idx = 0u64;
        for &c in a.c.iter().rev() {
            idx = idx * self.p + c;
        }
        idx
    }

    pub fn elem_from_index(&self, mut idx: u64) -> FqElem {
        let mut c = vec![0; self.e];
        for slot in c.iter_mut() {
            *slot = idx % self.p;
            idx /= self.p;
        }
        FqElem { c }
    }

    /// All field elements in index order.
    pub fn all_elems(&self) -> Vec<FqElem> {
        (0..self.q()).map(|i| self.elem_from_index(i)).collect()
    }

    pub fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> FqElem {
        self.elem_from_index(rng.gen_range(0..self.q()))
    }

    /// The absolute trace `x + x^p + ... + x^(p^(e-1))`, landing in `F_p`,
    /// returned as a residue in `[0, p)`.
    pub fn trace(&self, a: &FqElem) -> u64 {
        let mut acc = self.zero();
        let mut term = a.clone();
        for _ in 0..self.e {
            acc = self.add(&acc, &term);
            term = self.pow(&term, self.p);
        }
        for &c in acc.c.iter().skip(1) {
            debug_assert_eq!(c, 0, "trace must land in the prime field");
        }
        acc.c[0]
    }

    /// First element with nonzero trace, in index order; used as the base
    /// point of the unramified transversal.
    pub fn trace_one_point(&self) -> FqElem {
        for i in 1..self.q() {
            let x = self.elem_from_index(i);
            if self.trace(&x) != 0 {
                return x;
            }
        }
        unreachable!("the trace form is nonzero on F_q")
    }

    /// `x^(1/p)`, i.e. `x^(q/p)`; the p-th root is unique in char p.
    pub fn proot(&self, a: &FqElem) -> FqElem {
        if self.e == 1 {
            return a.clone();
        }
        self.pow(a, self.q() / self.p)
    }
}

impl CoeffRing for FqField {
    type Elem = FqElem;

    fn zero(&self) -> FqElem {
        FqElem { c: vec![0; self.e] }
    }
    fn one(&self) -> FqElem {
        let mut c = vec![0; self.e];
        c[0] = 1;
        FqElem { c }
    }
    fn is_zero(&self, a: &FqElem) -> bool {
        a.c.iter().all(|&x| x == 0)
    }
    fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        debug_assert_eq!(a.c.len(), self.e);
        debug_assert_eq!(b.c.len(), self.e);
        FqElem { c: a.c.iter().zip(&b.c).map(|(&x, &y)| (x + y) % self.p).collect() }
    }
    fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        FqElem { c: a.c.iter().zip(&b.c).map(|(&x, &y)| (x + self.p - y) % self.p).collect() }
    }
    fn neg(&self, a: &FqElem) -> FqElem {
        FqElem { c: a.c.iter().map(|&x| (self.p - x) % self.p).collect() }
    }
    fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let mut prod = vec![0u64; 2 * self.e - 1];
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.c.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        self.reduce(prod)
    }
    fn from_i64(&self, k: i64) -> FqElem {
        let p = self.p as i64;
        let r = ((k % p) + p) % p;
        let mut c = vec![0; self.e];
        c[0] = r as u64;
        FqElem { c }
    }
    fn from_bigint(&self, k: &BigInt) -> FqElem {
        let p = BigInt::from(self.p);
        let mut r = k % &p;
        if r.is_negative() {
            r += &p;
        }
        self.from_i64(r.to_i64().expect("residue fits i64"))
    }
    fn inv(&self, a: &FqElem) -> Option<FqElem> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow(a, self.q() - 2))
    }
    fn char_prime(&self) -> Option<u64> {
        Some(self.p)
    }
    fn frob_p(&self, a: &FqElem) -> Option<FqElem> {
        Some(self.pow(a, self.p))
    }
    fn format_elem(&self, a: &FqElem) -> String {
        format_poly(&a.c, &self.symbol)
    }
    fn parse_elem(&self, s: &str) -> Result<FqElem> {
        let coeffs = parse_poly(s, &self.symbol, self.p)?;
        Ok(self.reduce(coeffs))
    }
    fn rand_elem(&self, rng: &mut dyn rand::RngCore) -> FqElem {
        self.elem_from_index(rng.gen_range(0..self.q()))
    }
}

// --- element text ------------------------------------------------------------

/// Descending-power polynomial display: `g^2+2*g+1`, `g+1`, `0`.
fn format_poly(c: &[u64], symbol: &str) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (i, &coef) in c.iter().enumerate().rev() {
        if coef == 0 {
            continue;
        }
        let part = match (i, coef) {
            (0, _) => format!("{coef}"),
            (1, 1) => symbol.to_string(),
            (1, _) => format!("{coef}*{symbol}"),
            (_, 1) => format!("{symbol}^{i}"),
            (_, _) => format!("{coef}*{symbol}^{i}"),
        };
        parts.push(part);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Parse a polynomial in `symbol` with nonnegative integer coefficients and
/// `+`/`-` separators; `*` is optional.  Returns raw ascending coefficients
/// (not yet reduced mod the modulus).
fn parse_poly(s: &str, symbol: &str, p: u64) -> Result<Vec<u64>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse { pos: 0, msg: "empty coefficient".into() });
    }
    let bytes = compact.as_bytes();
    let mut i = 0usize;
    let mut out: Vec<u64> = vec![0];
    let mut sign_neg = false;
    if bytes[i] == b'+' || bytes[i] == b'-' {
        sign_neg = bytes[i] == b'-';
        i += 1;
    }
    loop {
        // one term: [int] [*] [symbol [^int]]
        let start = i;
        let mut coef: Option<u64> = None;
        let mut digits_end = i;
        while digits_end < bytes.len() && bytes[digits_end].is_ascii_digit() {
            digits_end += 1;
        }
        if digits_end > i {
            coef = Some(compact[i..digits_end].parse().map_err(|_| Error::Parse {
                pos: i,
                msg: "bad integer".into(),
            })?);
            i = digits_end;
        }
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
        }
        let mut exp = 0usize;
        if compact[i..].starts_with(symbol) {
            i += symbol.len();
            exp = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let es = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == es {
                    return Err(Error::Parse { pos: i, msg: "missing exponent".into() });
                }
                exp = compact[es..i].parse().map_err(|_| Error::Parse {
                    pos: es,
                    msg: "bad exponent".into(),
                })?;
                if exp > 64 {
                    return Err(Error::Parse { pos: es, msg: "exponent too large".into() });
                }
            }
        } else if coef.is_none() {
            return Err(Error::Parse { pos: start, msg: "expected term".into() });
        }
        let mut coef = coef.unwrap_or(1) % p;
        if sign_neg {
            coef = (p - coef) % p;
        }
        if out.len() <= exp {
            out.resize(exp + 1, 0);
        }
        out[exp] = (out[exp] + coef) % p;
        if i == bytes.len() {
            break;
        }
        match bytes[i] {
            b'+' => {
                sign_neg = false;
                i += 1;
            }
            b'-' => {
                sign_neg = true;
                i += 1;
            }
            _ => {
                return Err(Error::Parse { pos: i, msg: "expected + or -".into() });
            }
        }
        if i == bytes.len() {
            return Err(Error::Parse { pos: i, msg: "dangling sign".into() });
        }
    }
    Ok(out)
}

// --- truncated lifts Z_q / p^M ------------------------------------------------

/// The unramified lift `Z_q / p^M = (Z/p^M)[g] / (modulus lift)`, where the
/// modulus is the least-nonnegative lift of the `F_q` modulus.
#[derive(Debug, Clone)]
pub struct PadicLiftRing {
    fq: FqField,
    m_prec: u32,
    /// `p^M`.
    pm: u64,
    /// Monic modulus lift, ascending, length `e + 1`, entries in `[0, p^M)`.
    modulus: Vec<u64>,
}

/// Element of `Z_q / p^M`: coefficients in `[0, p^M)`, length `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicLiftElem {
    pub(crate) c: Vec<u64>,
}

impl PartialEq for PadicLiftRing {
    fn eq(&self, other: &Self) -> bool {
        self.fq == other.fq && self.m_prec == other.m_prec
    }
}
impl Eq for PadicLiftRing {}

impl PadicLiftRing {
    pub fn new(fq: &FqField, m_prec: u32) -> Result<PadicLiftRing> {
        if m_prec == 0 {
            return Err(Error::InvalidParameter("lift precision M must be >= 1".into()));
        }
        let mut pm: u64 = 1;
        for _ in 0..m_prec {
            pm = pm.checked_mul(fq.p).filter(|&v| v <= 1 << 31).ok_or_else(|| {
                Error::InvalidParameter(format!("p^M exceeds desk bound at M={m_prec}"))
            })?;
        }
        Ok(PadicLiftRing { fq: fq.clone(), m_prec, pm, modulus: fq.modulus.clone() })
    }

    pub fn fq(&self) -> &FqField {
        &self.fq
    }
    pub fn precision(&self) -> u32 {
        self.m_prec
    }
    pub fn p(&self) -> u64 {
        self.fq.p
    }
    pub fn e(&self) -> usize {
        self.fq.e
    }
    pub fn pm(&self) -> u64 {
        self.pm
    }

    /// The same ring at a lower precision `M'`.
    pub fn with_precision(&self, m_prec: u32) -> Result<PadicLiftRing> {
        PadicLiftRing::new(&self.fq, m_prec)
    }

    fn reduce(&self, v: Vec<u64>) -> PadicLiftElem {
        let e = self.fq.e;
        let mut v = v;
        while v.len() > e {
            let k = v.len() - 1;
            let c = v[k];
            v.pop();
            if c != 0 {
                for j in 0..e {
                    let idx = k - e + j;
                    let sub = mulmod(c, self.modulus[j], self.pm);
                    v[idx] = (v[idx] + self.pm - sub) % self.pm;
                }
            }
        }
        v.resize(e, 0);
        PadicLiftElem { c: v }
    }

    /// Least-nonnegative coefficientwise lift of an `F_q` element.
    pub fn lift(&self, a: &FqElem) -> PadicLiftElem {
        PadicLiftElem { c: a.c.clone() }
    }

    /// Coefficientwise reduction mod `p` back to `F_q`.
    pub fn reduce_mod_p(&self, a: &PadicLiftElem) -> FqElem {
        FqElem { c: a.c.iter().map(|&x| x % self.fq.p).collect() }
    }

    /// Canonical coefficients modulo `p^M'` for `M' <= M`.
    pub fn reduce_precision(&self, a: &PadicLiftElem, m_prec: u32) -> PadicLiftElem {
        assert!(m_prec <= self.m_prec);
        let pm = self.fq.p.pow(m_prec);
        PadicLiftElem { c: a.c.iter().map(|&x| x % pm).collect() }
    }

    /// The Teichmueller representative: the unique lift with `w(x)^q = w(x)`,
    /// computed as the limit of `y -> y^q` from the naive lift.
    pub fn teichmuller(&self, a: &FqElem) -> PadicLiftElem {
        let mut y = self.lift(a);
        for _ in 0..self.m_prec {
            let next = self.pow(&y, self.fq.q());
            if next == y {
                break;
            }
            y = next;
        }
        debug_assert_eq!(self.pow(&y, self.fq.q()), y);
        y
    }

    /// Exact division by `p^i`; the result is canonical only mod `p^(M-i)`.
    pub fn div_exact_ppow(&self, a: &PadicLiftElem, i: u32) -> Result<PadicLiftElem> {
        let pi = self.fq.p.pow(i);
        let mut c = Vec::with_capacity(a.c.len());
        for &x in &a.c {
            if x % pi != 0 {
                return Err(Error::InexactDivision);
            }
            c.push(x / pi);
        }
        Ok(PadicLiftElem { c })
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

impl CoeffRing for PadicLiftRing {
    type Elem = PadicLiftElem;

    fn zero(&self) -> PadicLiftElem {
        PadicLiftElem { c: vec![0; self.fq.e] }
    }
    fn one(&self) -> PadicLiftElem {
        let mut c = vec![0; self.fq.e];
        c[0] = 1 % self.pm;
        PadicLiftElem { c }
    }
    fn is_zero(&self, a: &PadicLiftElem) -> bool {
        a.c.iter().all(|&x| x == 0)
    }
    fn add(&self, a: &PadicLiftElem, b: &PadicLiftElem) -> PadicLiftElem {
        PadicLiftElem { c: a.c.iter().zip(&b.c).map(|(&x, &y)| (x + y) % self.pm).collect() }
    }
    fn sub(&self, a: &PadicLiftElem, b: &PadicLiftElem) -> PadicLiftElem {
        PadicLiftElem {
            c: a.c.iter().zip(&b.c).map(|(&x, &y)| (x + self.pm - y) % self.pm).collect(),
        }
    }
    fn neg(&self, a: &PadicLiftElem) -> PadicLiftElem {
        PadicLiftElem { c: a.c.iter().map(|&x| (self.pm - x) % self.pm).collect() }
    }
    fn mul(&self, a: &PadicLiftElem, b: &PadicLiftElem) -> PadicLiftElem {
        let e = self.fq.e;
        let mut prod = vec![0u64; 2 * e - 1];
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.c.iter().enumerate() {
                prod[i + j] = (prod[i + j] + mulmod(x, y, self.pm)) % self.pm;
            }
        }
        self.reduce(prod)
    }
    fn from_i64(&self, k: i64) -> PadicLiftElem {
        let m = self.pm as i64;
        let r = ((k % m) + m) % m;
        let mut c = vec![0; self.fq.e];
        c[0] = r as u64;
        PadicLiftElem { c }
    }
    fn from_bigint(&self, k: &BigInt) -> PadicLiftElem {
        let m = BigInt::from(self.pm);
        let mut r = k % &m;
        if r.is_negative() {
            r += &m;
        }
        self.from_i64(r.to_i64().expect("residue fits i64"))
    }
    fn inv(&self, a: &PadicLiftElem) -> Option<PadicLiftElem> {
        // Units are exactly the elements that are nonzero mod p; Hensel-lift
        // the F_q inverse, doubling precision each step.
        let a0 = self.reduce_mod_p(a);
        let inv0 = self.fq.inv(&a0)?;
        let mut x = self.lift(&inv0);
        let two = self.from_i64(2);
        let steps = 32 - (self.m_prec as u32).leading_zeros() + 1;
        for _ in 0..steps {
            // x <- x(2 - a x)
            let ax = self.mul(a, &x);
            let t = self.sub(&two, &ax);
            x = self.mul(&x, &t);
        }
        debug_assert!(self.mul(a, &x) == self.one());
        Some(x)
    }
    fn char_prime(&self) -> Option<u64> {
        None
    }
    fn frob_p(&self, _a: &PadicLiftElem) -> Option<PadicLiftElem> {
        None
    }
    fn format_elem(&self, a: &PadicLiftElem) -> String {
        format_poly(&a.c, &self.fq.symbol)
    }
    fn parse_elem(&self, s: &str) -> Result<PadicLiftElem> {
        let raw = parse_poly(s, &self.fq.symbol, self.pm)?;
        Ok(self.reduce(raw))
    }
    fn rand_elem(&self, rng: &mut dyn rand::RngCore) -> PadicLiftElem {
        PadicLiftElem { c: (0..self.fq.e).map(|_| rng.gen_range(0..self.pm)).collect() }
    }
}

/// Rings carrying an explicit `p`-adic precision, supporting the checked
/// divisions by powers of `p` that ghost-coordinate inversion needs.  The
/// quotient of an element by `p^k` is canonical only at `k` fewer digits, so
/// the consumer must eventually [`PadicPrecision::project_to`] a ring whose
/// precision reflects the digits actually known.
pub trait PadicPrecision: CoeffRing {
    /// The underlying prime.
    fn prime(&self) -> u64;
    /// Digits of precision currently carried.
    fn precision_digits(&self) -> u32;
    /// The same ring with `drop` fewer digits of precision.
    fn drop_precision(&self, drop: u32) -> Result<Self>;
    /// Reinterpret an element in the lower-precision ring `target`.
    fn project_to(&self, target: &Self, a: &Self::Elem) -> Self::Elem;
    /// Exact division by `p^k`; `Err(InexactDivision)` when `p^k` does not
    /// divide `a`.  The result is a representative, canonical mod `p^(M-k)`.
    fn div_exact_p_pow(&self, a: &Self::Elem, k: u32) -> Result<Self::Elem>;
}

impl PadicPrecision for PadicLiftRing {
    fn prime(&self) -> u64 {
        self.fq.p
    }
    fn precision_digits(&self) -> u32 {
        self.m_prec
    }
    fn drop_precision(&self, drop: u32) -> Result<PadicLiftRing> {
        if drop >= self.m_prec {
            return Err(Error::InsufficientPrecision {
                needed: drop as i64 + 1,
                have: self.m_prec as i64,
            });
        }
        self.with_precision(self.m_prec - drop)
    }
    fn project_to(&self, target: &PadicLiftRing, a: &PadicLiftElem) -> PadicLiftElem {
        self.reduce_precision(a, target.m_prec)
    }
    fn div_exact_p_pow(&self, a: &PadicLiftElem, k: u32) -> Result<PadicLiftElem> {
        self.div_exact_ppow(a, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f4() -> FqField {
        FqField::new(2, 2).unwrap()
    }

    #[test]
    fn f2_addition() {
        let f = FqField::new(2, 1).unwrap();
        assert!(f.is_zero(&f.add(&f.one(), &f.one())));
    }

    #[test]
    fn f4_generator_square() {
        // modulus g^2 + g + 1, so g*g = g + 1
        let f = f4();
        let g = f.gen();
        let gg = f.mul(&g, &g);
        assert_eq!(gg, f.add(&g, &f.one()));
        assert_eq!(f.format_elem(&gg), "g+1");
    }

    #[test]
    fn mul_identity_random() {
        let f = FqField::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = f.random_elem(&mut rng);
            assert_eq!(f.mul(&x, &f.one()), x);
        }
    }

    #[test]
    fn field_axioms_random() {
        let fields = [
            FqField::new(2, 1).unwrap(),
            FqField::new(2, 2).unwrap(),
            FqField::new(3, 1).unwrap(),
            FqField::new(3, 2).unwrap(),
            FqField::new(5, 1).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for f in &fields {
            for _ in 0..500 {
                let a = f.random_elem(&mut rng);
                let b = f.random_elem(&mut rng);
                let c = f.random_elem(&mut rng);
                assert_eq!(f.add(&a, &b), f.add(&b, &a));
                assert_eq!(f.mul(&a, &b), f.mul(&b, &a));
                assert_eq!(f.add(&f.add(&a, &b), &c), f.add(&a, &f.add(&b, &c)));
                assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
                assert_eq!(
                    f.mul(&a, &f.add(&b, &c)),
                    f.add(&f.mul(&a, &b), &f.mul(&a, &c))
                );
                assert!(f.is_zero(&f.add(&a, &f.neg(&a))));
                if !f.is_zero(&a) {
                    let ai = f.inv(&a).unwrap();
                    assert_eq!(f.mul(&a, &ai), f.one());
                }
            }
        }
    }

    #[test]
    fn trace_values_f4() {
        let f = f4();
        assert_eq!(f.trace(&f.one()), 0);
        assert_eq!(f.trace(&f.gen()), 1);
        // Frobenius invariance and additivity, exhaustively.
        for x in f.all_elems() {
            let fx = f.frob_p(&x).unwrap();
            assert_eq!(f.trace(&x), f.trace(&fx));
            for y in f.all_elems() {
                let s = f.add(&x, &y);
                assert_eq!(f.trace(&s), (f.trace(&x) + f.trace(&y)) % f.p());
            }
        }
    }

    #[test]
    fn trace_surjective_small() {
        for (p, e) in [(2, 2), (2, 3), (3, 2), (5, 2)] {
            let f = FqField::new(p, e).unwrap();
            let mut hit = vec![false; p as usize];
            for x in f.all_elems() {
                hit[f.trace(&x) as usize] = true;
            }
            assert!(hit.iter().all(|&h| h), "trace not surjective for q={}^{}", p, e);
        }
    }

    #[test]
    fn trace_one_point_has_nonzero_trace() {
        for (p, e) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)] {
            let f = FqField::new(p, e).unwrap();
            let c0 = f.trace_one_point();
            assert_ne!(f.trace(&c0), 0);
        }
    }

    #[test]
    fn proot_is_pth_root() {
        for (p, e) in [(2, 2), (2, 3), (3, 2), (5, 2)] {
            let f = FqField::new(p, e).unwrap();
            for x in f.all_elems() {
                let r = f.proot(&x);
                assert_eq!(f.pow(&r, f.p()), x);
            }
        }
    }

    #[test]
    fn lift_reduce_round_trip() {
        for (p, e) in [(2, 2), (2, 3), (3, 2)] {
            let f = FqField::new(p, e).unwrap();
            for m in 1..=4 {
                let lr = PadicLiftRing::new(&f, m).unwrap();
                for x in f.all_elems() {
                    assert_eq!(lr.reduce_mod_p(&lr.lift(&x)), x);
                }
            }
        }
    }

    #[test]
    fn reduce_mod_p_example() {
        // p = 2, M = 3: the residue 5 reduces to 1 mod 2.
        let f = FqField::new(2, 1).unwrap();
        let lr = PadicLiftRing::new(&f, 3).unwrap();
        let five = lr.from_i64(5);
        assert_eq!(lr.reduce_mod_p(&five), f.one());
    }

    #[test]
    fn teichmuller_properties() {
        for (p, e, m) in [(2, 2, 4), (3, 2, 4), (2, 3, 4), (5, 1, 4)] {
            let f = FqField::new(p, e).unwrap();
            let lr = PadicLiftRing::new(&f, m).unwrap();
            for x in f.all_elems() {
                let w = lr.teichmuller(&x);
                assert_eq!(lr.reduce_mod_p(&w), x, "teichmuller reduces to x");
                assert_eq!(lr.pow(&w, f.q()), w, "teichmuller is q-power fixed");
                for y in f.all_elems() {
                    let wy = lr.teichmuller(&y);
                    let wxy = lr.teichmuller(&f.mul(&x, &y));
                    assert_eq!(lr.mul(&w, &wy), wxy, "teichmuller is multiplicative");
                }
            }
        }
    }

    #[test]
    fn hensel_inverse_random() {
        let f = FqField::new(3, 2).unwrap();
        let lr = PadicLiftRing::new(&f, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tested = 0;
        while tested < 200 {
            let c: Vec<u64> = (0..2).map(|_| rng.gen_range(0..lr.pm())).collect();
            let a = PadicLiftElem { c };
            match lr.inv(&a) {
                Some(ai) => {
                    assert_eq!(lr.mul(&a, &ai), lr.one());
                    tested += 1;
                }
                None => {
                    assert!(f.is_zero(&lr.reduce_mod_p(&a)));
                }
            }
        }
    }

    #[test]
    fn div_exact_checks() {
        let f = FqField::new(2, 1).unwrap();
        let lr = PadicLiftRing::new(&f, 4).unwrap();
        let six = lr.from_i64(6);
        assert_eq!(lr.div_exact_ppow(&six, 1).unwrap(), lr.from_i64(3));
        assert_eq!(lr.div_exact_ppow(&six, 2), Err(Error::InexactDivision));
    }

    #[test]
    fn irreducibility_guard() {
        // x^2 + 1 = (x+1)^2 over F_2: rejected.
        assert!(FqField::with_modulus(2, 2, vec![1, 0, 1]).is_err());
        // x^2 + 1 over F_3 is irreducible: accepted.
        assert!(FqField::with_modulus(3, 2, vec![1, 0, 1]).is_ok());
        // Non-monic input is normalised: 2x^2 + 2 over F_3 equals x^2 + 1.
        let f = FqField::with_modulus(3, 2, vec![2, 0, 2]).unwrap();
        assert_eq!(f.modulus(), &[1, 0, 1]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(FqField::new(4, 1).is_err());
        assert!(FqField::new(2, 0).is_err());
        assert!(FqField::from_spec("p=9,e=1").is_err());
        assert!(FqField::from_spec("e=2").is_err());
    }

    #[test]
    fn spec_parsing() {
        let f = FqField::from_spec("p=2,e=2").unwrap();
        assert_eq!(f.q(), 4);
        let f2 = FqField::from_spec("p=2,e=2,modulus=1,1,1").unwrap();
        assert_eq!(f, f2);
        let f3 = FqField::from_spec("p=5").unwrap();
        assert_eq!(f3.q(), 5);
    }

    #[test]
    fn format_parse_round_trip() {
        for (p, e) in [(2, 2), (2, 3), (3, 2), (5, 1)] {
            let f = FqField::new(p, e).unwrap();
            for x in f.all_elems() {
                let s = f.format_elem(&x);
                let back = f.parse_elem(&s).unwrap();
                assert_eq!(back, x, "round trip failed for `{s}`");
            }
        }
    }

    #[test]
    fn parse_accepts_optional_star_and_signs() {
        let f = FqField::new(3, 2).unwrap();
        let a = f.parse_elem("2g+1").unwrap();
        let b = f.parse_elem("2*g + 1").unwrap();
        assert_eq!(a, b);
        let c = f.parse_elem("-g").unwrap();
        assert_eq!(c, f.neg(&f.gen()));
        assert!(f.parse_elem("").is_err());
        assert!(f.parse_elem("g^").is_err());
        assert!(f.parse_elem("1++1").is_err());
    }

    #[test]
    fn elem_index_round_trip() {
        let f = FqField::new(3, 2).unwrap();
        for i in 0..f.q() {
            let x = f.elem_from_index(i);
            assert_eq!(f.elem_index(&x), i);
        }
    }

    #[test]
    fn conway_moduli_are_irreducible() {
        for (p, e) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (5, 1), (5, 2), (5, 3)] {
            let f = FqField::new(p, e).unwrap();
            assert!(is_irreducible(f.modulus(), p));
        }
    }
}
