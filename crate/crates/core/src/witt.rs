//! Truncated `p`-typical Witt vectors over an arbitrary coefficient ring.
//!
//! Arithmetic is driven by the universal Witt polynomials.  The sum, product,
//! negation and Frobenius laws are derived once per `(p, n)` by the ghost
//! component recursion over `Z`, with every division by `p^i` checked exact,
//! cached process-wide, and specialized to the coefficient ring on each
//! operation.  Components are stored in standard order `(a_0, .., a_(n-1))`
//! with `a_0` the residue component; the ghost coordinates are
//! `g_i = sum_(j<=i) p^j a_j^(p^(i-j))`.
//!
//! Over a coefficient ring of characteristic `p` the Frobenius is the
//! componentwise `p`-th power map; [`WittRing::frobenius_universal`] exposes
//! the polynomial `W_(n+1) -> W_n` version so the two can be compared, which
//! the verification suites do exhaustively on small fields.  Ghost
//! coordinates are invertible only where division by `p` is meaningful, so
//! [`WittRing::ghost_inverse`] is offered for coefficient rings with explicit
//! `p`-adic precision and returns its result at the lower precision that the
//! divisions actually support.

use crate::algebra::{is_prime, CoeffRing, FqField, PadicPrecision};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Hard cap on the Witt length; universal polynomials grow violently with
/// `n` and desk-scale work never needs more.
pub const MAX_LENGTH: usize = 4;

/// Multivariate integer polynomial: exponent vector -> coefficient.  All
/// keys in one polynomial have the same length (the variable count).
type MPoly = BTreeMap<Vec<u32>, BigInt>;

fn mp_add_term(poly: &mut MPoly, key: Vec<u32>, c: BigInt) {
    if c.is_zero() {
        return;
    }
    match poly.entry(key) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

fn mp_add(a: &MPoly, b: &MPoly) -> MPoly {
    let mut out = a.clone();
    for (k, c) in b {
        mp_add_term(&mut out, k.clone(), c.clone());
    }
    out
}

fn mp_sub(a: &MPoly, b: &MPoly) -> MPoly {
    let mut out = a.clone();
    for (k, c) in b {
        mp_add_term(&mut out, k.clone(), -c.clone());
    }
    out
}

fn mp_neg(a: &MPoly) -> MPoly {
    a.iter().map(|(k, c)| (k.clone(), -c.clone())).collect()
}

fn mp_mul(a: &MPoly, b: &MPoly) -> MPoly {
    let mut out = MPoly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let key: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            mp_add_term(&mut out, key, ca * cb);
        }
    }
    out
}

fn mp_scale(a: &MPoly, k: &BigInt) -> MPoly {
    if k.is_zero() {
        return MPoly::new();
    }
    a.iter().map(|(key, c)| (key.clone(), c * k)).collect()
}

fn mp_one(nvars: usize) -> MPoly {
    let mut out = MPoly::new();
    out.insert(vec![0; nvars], BigInt::one());
    out
}

fn mp_var(i: usize, nvars: usize) -> MPoly {
    let mut key = vec![0u32; nvars];
    key[i] = 1;
    let mut out = MPoly::new();
    out.insert(key, BigInt::one());
    out
}

fn mp_pow(a: &MPoly, mut e: u32, nvars: usize) -> MPoly {
    let mut acc = mp_one(nvars);
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = mp_mul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mp_mul(&base, &base);
        }
    }
    acc
}

/// Exact division by the integer `d`.  The ghost recursion guarantees
/// integrality, so a remainder here is a bug, not an input error.
fn mp_div_exact(a: &MPoly, d: &BigInt) -> MPoly {
    a.iter()
        .map(|(k, c)| {
            let (q, r) = (c / d, c % d);
            assert!(r.is_zero(), "Witt ghost recursion produced a non-integral coefficient");
            (k.clone(), q)
        })
        .collect()
}

/// The ghost polynomial `w_i` in the variable block starting at `offset`:
/// `sum_(j<=i) p^j X_(offset+j)^(p^(i-j))`.
fn ghost_poly(p: u64, i: usize, offset: usize, nvars: usize) -> MPoly {
    let mut out = MPoly::new();
    let mut pj = BigInt::one();
    for j in 0..=i {
        let exp = (p as u32).pow((i - j) as u32);
        let x = mp_pow(&mp_var(offset + j, nvars), exp, nvars);
        out = mp_add(&out, &mp_scale(&x, &pj));
        pj *= p;
    }
    out
}

/// Solve `w_i(out_0, .., out_i) = target_i` for each `i < n` in turn.  Each
/// step isolates `p^i out_i` and divides exactly.
fn ghost_solve(p: u64, n: usize, nvars: usize, mut target: impl FnMut(usize) -> MPoly) -> Vec<MPoly> {
    let mut out: Vec<MPoly> = Vec::with_capacity(n);
    let mut pi = BigInt::one();
    for i in 0..n {
        let mut t = target(i);
        let mut pj = BigInt::one();
        for (j, prev) in out.iter().enumerate().take(i) {
            let exp = (p as u32).pow((i - j) as u32);
            t = mp_sub(&t, &mp_scale(&mp_pow(prev, exp, nvars), &pj));
            pj *= p;
        }
        out.push(mp_div_exact(&t, &pi));
        pi *= p;
    }
    out
}

/// Universal polynomials for one `(p, n)`: `sum`/`prod` in the `2n` variables
/// `X_0..X_(n-1), Y_0..Y_(n-1)`, `neg` in `n` variables, and `frob` (the map
/// `W_(n+1) -> W_n`) in `n + 1` variables.
pub(crate) struct WittPolys {
    sum: Vec<MPoly>,
    prod: Vec<MPoly>,
    neg: Vec<MPoly>,
    frob: Vec<MPoly>,
}

fn build_polys(p: u64, n: usize) -> WittPolys {
    let nb = 2 * n;
    let sum = ghost_solve(p, n, nb, |i| {
        mp_add(&ghost_poly(p, i, 0, nb), &ghost_poly(p, i, n, nb))
    });
    let prod = ghost_solve(p, n, nb, |i| {
        mp_mul(&ghost_poly(p, i, 0, nb), &ghost_poly(p, i, n, nb))
    });
    let neg = ghost_solve(p, n, n, |i| mp_neg(&ghost_poly(p, i, 0, n)));
    let frob = ghost_solve(p, n, n + 1, |i| ghost_poly(p, i + 1, 0, n + 1));
    WittPolys { sum, prod, neg, frob }
}

static POLY_CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<WittPolys>>>> = OnceLock::new();

pub(crate) fn universal_polys(p: u64, n: usize) -> Result<Arc<WittPolys>> {
    if n == 0 || n > MAX_LENGTH {
        return Err(Error::UnsupportedLength(n));
    }
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    // keep the polynomial sizes within desk scale; they blow up in p for
    // fixed n >= 2
    let pmax: u64 = match n {
        1 => 1 << 20,
        2 => 97,
        3 => 7,
        _ => 3,
    };
    if p > pmax {
        return Err(Error::InvalidParameter(format!(
            "p = {p} too large for Witt length {n} (max {pmax})"
        )));
    }
    let cache = POLY_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("witt polynomial cache poisoned");
    let entry = map.entry((p, n)).or_insert_with(|| Arc::new(build_polys(p, n)));
    Ok(Arc::clone(entry))
}

/// A Witt vector: components in standard order, length fixed by its ring.
#[derive(Clone, Debug, PartialEq)]
pub struct WittVec<R: CoeffRing> {
    pub(crate) comps: Vec<R::Elem>,
}

impl<R: CoeffRing> WittVec<R> {
    pub fn components(&self) -> &[R::Elem] {
        &self.comps
    }
    pub fn into_components(self) -> Vec<R::Elem> {
        self.comps
    }
    pub fn comp(&self, i: usize) -> &R::Elem {
        &self.comps[i]
    }
}

/// The ring `W_n(R)` of truncated Witt vectors, carrying its cached
/// universal polynomials.
#[derive(Clone)]
pub struct WittRing<R: CoeffRing> {
    coeff: R,
    p: u64,
    n: usize,
    polys: Arc<WittPolys>,
}

impl<R: CoeffRing> PartialEq for WittRing<R> {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n && self.coeff == other.coeff
    }
}

impl<R: CoeffRing> fmt::Debug for WittRing<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WittRing")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("coeff", &self.coeff)
            .finish()
    }
}

impl<R: CoeffRing> WittRing<R> {
    /// `W_n(R)` for the given prime.  When the coefficient ring knows its
    /// characteristic it must match `p`.
    pub fn new(coeff: R, p: u64, n: usize) -> Result<Self> {
        if let Some(c) = coeff.char_prime() {
            if c != p {
                return Err(Error::InvalidParameter(format!(
                    "coefficient ring has characteristic {c}, Witt prime is {p}"
                )));
            }
        }
        let polys = universal_polys(p, n)?;
        Ok(WittRing { coeff, p, n, polys })
    }

    pub fn coeff(&self) -> &R {
        &self.coeff
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn from_comps(&self, comps: Vec<R::Elem>) -> Result<WittVec<R>> {
        if comps.len() != self.n {
            return Err(Error::LengthMismatch { left: self.n, right: comps.len() });
        }
        Ok(WittVec { comps })
    }

    /// Teichmueller lift `[a] = (a, 0, .., 0)`.
    pub fn teichmuller(&self, a: &R::Elem) -> WittVec<R> {
        let mut comps = vec![self.coeff.zero(); self.n];
        comps[0] = a.clone();
        WittVec { comps }
    }

    /// Verschiebung followed by restriction, staying inside `W_n`:
    /// `(a_0, .., a_(n-1)) -> (0, a_0, .., a_(n-2))`.
    pub fn ver(&self, x: &WittVec<R>) -> WittVec<R> {
        let mut comps = Vec::with_capacity(self.n);
        comps.push(self.coeff.zero());
        comps.extend(x.comps[..self.n - 1].iter().cloned());
        WittVec { comps }
    }

    /// `V^(n-k)` applied to a length-`k` tail: `(0, .., 0, y_0, .., y_(k-1))`.
    pub fn v_embed(&self, tail: &[R::Elem]) -> Result<WittVec<R>> {
        if tail.len() > self.n {
            return Err(Error::LengthMismatch { left: self.n, right: tail.len() });
        }
        let mut comps = vec![self.coeff.zero(); self.n - tail.len()];
        comps.extend(tail.iter().cloned());
        Ok(WittVec { comps })
    }

    /// Restriction `W_n -> W_m`, `m <= n`: drop trailing components.
    pub fn restrict_to(&self, smaller: &WittRing<R>, x: &WittVec<R>) -> Result<WittVec<R>> {
        if smaller.p != self.p || smaller.coeff != self.coeff {
            return Err(Error::RingMismatch);
        }
        if smaller.n > self.n {
            return Err(Error::LengthMismatch { left: smaller.n, right: self.n });
        }
        Ok(WittVec { comps: x.comps[..smaller.n].to_vec() })
    }

    /// Frobenius on `W_n(R)` for `R` of characteristic `p`: the componentwise
    /// `p`-th power map (the functorial image of the absolute Frobenius).
    pub fn frobenius(&self, x: &WittVec<R>) -> Result<WittVec<R>> {
        if self.coeff.char_prime() != Some(self.p) {
            return Err(Error::InvalidParameter(
                "componentwise Frobenius needs characteristic p coefficients".into(),
            ));
        }
        let comps: Option<Vec<R::Elem>> = x.comps.iter().map(|c| self.coeff.frob_p(c)).collect();
        comps
            .map(|comps| WittVec { comps })
            .ok_or_else(|| Error::InvalidParameter("coefficient ring lacks frob_p".into()))
    }

    /// The universal Frobenius `W_(n+1)(R) -> W_n(R)`: takes the `n + 1`
    /// components of the longer vector.  Valid over any coefficient ring.
    pub fn frobenius_universal(&self, longer: &[R::Elem]) -> Result<WittVec<R>> {
        if longer.len() != self.n + 1 {
            return Err(Error::LengthMismatch { left: self.n + 1, right: longer.len() });
        }
        Ok(WittVec { comps: self.eval_family(&self.polys.frob, longer) })
    }

    /// Ghost coordinates `g_i = sum_(j<=i) p^j x_j^(p^(i-j))`.
    pub fn ghost(&self, x: &WittVec<R>) -> Vec<R::Elem> {
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut g = self.coeff.zero();
            let mut pj = BigInt::one();
            for j in 0..=i {
                let e = self.p.pow((i - j) as u32);
                let term =
                    self.coeff.mul(&self.coeff.from_bigint(&pj), &self.coeff.pow(&x.comps[j], e));
                g = self.coeff.add(&g, &term);
                pj *= self.p;
            }
            out.push(g);
        }
        out
    }

    /// Integer multiple `k . x` by double-and-add.
    pub fn int_mul(&self, k: i64, x: &WittVec<R>) -> WittVec<R> {
        self.bigint_mul(&BigInt::from(k), x)
    }

    pub fn bigint_mul(&self, k: &BigInt, x: &WittVec<R>) -> WittVec<R> {
        let mag = k.magnitude();
        let mut acc = CoeffRing::zero(self);
        let bits = mag.bits();
        for i in (0..bits).rev() {
            acc = self.add(&acc, &acc);
            if mag.bit(i) {
                acc = self.add(&acc, x);
            }
        }
        if k.is_negative() {
            acc = CoeffRing::neg(self, &acc);
        }
        acc
    }

    pub fn format_witt(&self, x: &WittVec<R>) -> String {
        let parts: Vec<String> = x.comps.iter().map(|c| self.coeff.format_elem(c)).collect();
        format!("({})", parts.join("; "))
    }

    /// Parse `(a_0; a_1; ..; a_(n-1))` with components in the coefficient
    /// ring's own syntax.
    pub fn parse_witt(&self, s: &str) -> Result<WittVec<R>> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse { pos: 0, msg: "expected (a0; a1; ..)".into() })?;
        let parts: Vec<&str> = inner.split(';').collect();
        if parts.len() != self.n {
            return Err(Error::LengthMismatch { left: self.n, right: parts.len() });
        }
        let comps: Result<Vec<R::Elem>> =
            parts.iter().map(|part| self.coeff.parse_elem(part.trim())).collect();
        Ok(WittVec { comps: comps? })
    }

    fn eval(&self, poly: &MPoly, vals: &[R::Elem]) -> R::Elem {
        // power cache per variable, up to the largest exponent that occurs
        let nv = vals.len();
        let mut maxe = vec![0u32; nv];
        for key in poly.keys() {
            for (i, e) in key.iter().enumerate() {
                maxe[i] = maxe[i].max(*e);
            }
        }
        let mut pows: Vec<Vec<R::Elem>> = Vec::with_capacity(nv);
        for (i, &m) in maxe.iter().enumerate() {
            let mut col = Vec::with_capacity(m as usize + 1);
            col.push(self.coeff.one());
            for k in 1..=m as usize {
                let next = self.coeff.mul(&col[k - 1], &vals[i]);
                col.push(next);
            }
            pows.push(col);
        }
        let mut acc = self.coeff.zero();
        for (key, c) in poly {
            let mut term = self.coeff.from_bigint(c);
            for (i, &e) in key.iter().enumerate() {
                if e > 0 {
                    term = self.coeff.mul(&term, &pows[i][e as usize]);
                }
            }
            acc = self.coeff.add(&acc, &term);
        }
        acc
    }

    fn eval_family(&self, polys: &[MPoly], vals: &[R::Elem]) -> Vec<R::Elem> {
        polys.iter().map(|poly| self.eval(poly, vals)).collect()
    }

    fn binary_vals(&self, a: &WittVec<R>, b: &WittVec<R>) -> Vec<R::Elem> {
        let mut vals = Vec::with_capacity(2 * self.n);
        vals.extend(a.comps.iter().cloned());
        vals.extend(b.comps.iter().cloned());
        vals
    }
}

impl<R: PadicPrecision> WittRing<R> {
    /// Invert the ghost map.  The divisions by `p^i` are checked exact and
    /// the result is returned over the same ring at `n - 1` fewer digits of
    /// `p`-adic precision, which is all the digits the divisions leave
    /// meaningful.
    pub fn ghost_inverse(&self, g: &[R::Elem]) -> Result<(WittRing<R>, WittVec<R>)> {
        if g.len() != self.n {
            return Err(Error::LengthMismatch { left: self.n, right: g.len() });
        }
        if self.coeff.prime() != self.p {
            return Err(Error::InvalidParameter(
                "coefficient ring prime differs from Witt prime".into(),
            ));
        }
        if (self.coeff.precision_digits() as usize) < self.n {
            return Err(Error::InsufficientPrecision {
                needed: self.n as i64,
                have: self.coeff.precision_digits() as i64,
            });
        }
        let mut acc: Vec<R::Elem> = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut num = g[i].clone();
            let mut pj = BigInt::one();
            for (j, prev) in acc.iter().enumerate().take(i) {
                let e = self.p.pow((i - j) as u32);
                let term = self.coeff.mul(&self.coeff.from_bigint(&pj), &self.coeff.pow(prev, e));
                num = self.coeff.sub(&num, &term);
                pj *= self.p;
            }
            acc.push(self.coeff.div_exact_p_pow(&num, i as u32)?);
        }
        let target = self.coeff.drop_precision(self.n as u32 - 1)?;
        let comps: Vec<R::Elem> = acc.iter().map(|a| self.coeff.project_to(&target, a)).collect();
        let ring = WittRing::new(target, self.p, self.n)?;
        Ok((ring, WittVec { comps }))
    }
}

impl<R: CoeffRing> CoeffRing for WittRing<R> {
    type Elem = WittVec<R>;

    fn zero(&self) -> WittVec<R> {
        WittVec { comps: vec![self.coeff.zero(); self.n] }
    }
    fn one(&self) -> WittVec<R> {
        self.teichmuller(&self.coeff.one())
    }
    fn is_zero(&self, a: &WittVec<R>) -> bool {
        a.comps.iter().all(|c| self.coeff.is_zero(c))
    }
    fn add(&self, a: &WittVec<R>, b: &WittVec<R>) -> WittVec<R> {
        WittVec { comps: self.eval_family(&self.polys.sum, &self.binary_vals(a, b)) }
    }
    fn neg(&self, a: &WittVec<R>) -> WittVec<R> {
        WittVec { comps: self.eval_family(&self.polys.neg, &a.comps) }
    }
    fn sub(&self, a: &WittVec<R>, b: &WittVec<R>) -> WittVec<R> {
        self.add(a, &CoeffRing::neg(self, b))
    }
    fn mul(&self, a: &WittVec<R>, b: &WittVec<R>) -> WittVec<R> {
        WittVec { comps: self.eval_family(&self.polys.prod, &self.binary_vals(a, b)) }
    }
    fn from_i64(&self, k: i64) -> WittVec<R> {
        self.int_mul(k, &self.one())
    }
    fn from_bigint(&self, k: &BigInt) -> WittVec<R> {
        self.bigint_mul(k, &self.one())
    }
    /// Newton iteration `x <- x(2 - ax)`; the error `1 - ax` starts in
    /// `V W_n` and squares into `V^2, V^4, ..`, so two steps cover `n <= 4`.
    fn inv(&self, a: &WittVec<R>) -> Option<WittVec<R>> {
        let a0i = self.coeff.inv(&a.comps[0])?;
        let mut x = self.teichmuller(&a0i);
        let steps = usize::BITS - (self.n - 1).leading_zeros(); // ceil(log2 n)
        let two = self.from_i64(2);
        for _ in 0..steps {
            let ax = self.mul(a, &x);
            let t = self.sub(&two, &ax);
            x = self.mul(&x, &t);
        }
        debug_assert!(self.mul(a, &x) == self.one());
        Some(x)
    }
    fn is_unit(&self, a: &WittVec<R>) -> bool {
        self.coeff.is_unit(&a.comps[0])
    }
    fn char_prime(&self) -> Option<u64> {
        None
    }
    fn frob_p(&self, _a: &WittVec<R>) -> Option<WittVec<R>> {
        None
    }
    fn format_elem(&self, a: &WittVec<R>) -> String {
        self.format_witt(a)
    }
    fn parse_elem(&self, s: &str) -> Result<WittVec<R>> {
        self.parse_witt(s)
    }
    fn rand_elem(&self, rng: &mut dyn rand::RngCore) -> WittVec<R> {
        WittVec { comps: (0..self.n).map(|_| self.coeff.rand_elem(rng)).collect() }
    }
}

/// Galois trace `W_n(F_q) -> W_n(F_p)`: the sum of the componentwise
/// Frobenius orbit.  Returned over the prime field, where it honestly lives.
pub fn wittvec_trace(
    ring: &WittRing<FqField>,
    x: &WittVec<FqField>,
) -> Result<(WittRing<FqField>, WittVec<FqField>)> {
    let fq = ring.coeff();
    let mut acc = CoeffRing::zero(ring);
    let mut cur = x.clone();
    for _ in 0..fq.e() {
        acc = ring.add(&acc, &cur);
        cur = ring.frobenius(&cur)?;
    }
    let fp = FqField::prime_field(fq.p())?;
    let mut comps = Vec::with_capacity(ring.n());
    for c in &acc.comps {
        if c.c[1..].iter().any(|&x| x != 0) {
            return Err(Error::InvalidParameter(
                "trace left the prime subfield; coefficient field is inconsistent".into(),
            ));
        }
        comps.push(fp.from_i64(c.c[0] as i64));
    }
    let pring = WittRing::new(fp, ring.p(), ring.n())?;
    let vec = pring.from_comps(comps)?;
    Ok((pring, vec))
}

/// The canonical isomorphism `W_n(F_p) ~ Z/p^n`, computed by digit peeling:
/// subtract `a_0 . 1`, divide by Verschiebung, repeat.
pub fn zpn_value(ring: &WittRing<FqField>, x: &WittVec<FqField>) -> Result<u64> {
    if ring.coeff().e() != 1 {
        return Err(Error::InvalidParameter("zpn_value wants prime field coefficients".into()));
    }
    let fp = ring.coeff().clone();
    let p = ring.p();
    let mut cur = x.comps.clone();
    let mut val = 0u64;
    let mut pk = 1u64;
    for level in (1..=ring.n()).rev() {
        let r = WittRing::new(fp.clone(), p, level)?;
        let d = cur[0].c[0];
        val += d * pk;
        pk = pk.saturating_mul(p);
        let w = WittVec { comps: cur };
        let rest = r.sub(&w, &r.from_i64(d as i64));
        if !fp.is_zero(&rest.comps[0]) {
            return Err(Error::InvalidParameter("digit peel failed; ring inconsistent".into()));
        }
        cur = rest.comps[1..].to_vec();
    }
    Ok(val)
}

/// Trace to the prime field followed by the digit isomorphism: the value of
/// a `W_n(F_q)` class in `Z/p^n`.
pub fn trace_value(ring: &WittRing<FqField>, x: &WittVec<FqField>) -> Result<u64> {
    let (pring, t) = wittvec_trace(ring, x)?;
    zpn_value(&pring, &t)
}
