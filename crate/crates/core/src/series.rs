//! Truncated Laurent series with explicit precision windows.
//!
//! A value represents `sum c_k t^k + O(t^N)`: the stored window never extends
//! past the precision `N`, and every operation propagates `N` pessimistically
//! (`min` for sums, valuation-shifted `min` for products).  Reading a
//! coefficient at or past `N` is an error; coefficients below the leading
//! exponent are exactly zero.  Ring constants are exact and carry the
//! sentinel precision [`PREC_EXACT`] so they never truncate a computation.

use crate::algebra::{CoeffRing, PadicPrecision};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Sentinel precision for exactly-known values; far above any desk-scale
/// exponent, low enough that precision arithmetic cannot overflow `i64`.
pub const PREC_EXACT: i64 = 1 << 40;

/// Window length used when inverting an exact (polynomial) value whose
/// inverse is an infinite series.
const EXACT_INV_WINDOW: i64 = 64;

/// Valuation of a truncated series: known exactly for a value that is
/// nonzero within its window, otherwise only bounded below by the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    /// Zero modulo `O(t^N)`: the valuation is at least `N`.
    AtLeast(i64),
}

impl Valuation {
    /// Lower bound usable in precision arithmetic.
    pub fn lower_bound(self) -> i64 {
        match self {
            Valuation::Finite(v) => v,
            Valuation::AtLeast(v) => v,
        }
    }
}

/// Laurent series over the coefficient ring `R`.
#[derive(Debug, Clone)]
pub struct Laurent<R: CoeffRing> {
    ring: R,
    /// Exponent of `coeffs[0]`; meaningless (set to `prec`) when `coeffs` is empty.
    v0: i64,
    /// Dense window; leading entry nonzero, trailing zeros trimmed.
    coeffs: Vec<R::Elem>,
    /// The series is known modulo `O(t^prec)`; `v0 + coeffs.len() <= prec`.
    prec: i64,
}

impl<R: CoeffRing> PartialEq for Laurent<R> {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring
            && self.prec == other.prec
            && self.v0 == other.v0
            && self.coeffs == other.coeffs
    }
}

impl<R: CoeffRing> Laurent<R> {
    /// Normalising constructor: trims zero fringes, drops anything at or past
    /// `prec`, canonicalises zero.
    pub fn from_coeffs(ring: R, v0: i64, coeffs: Vec<R::Elem>, prec: i64) -> Self {
        let mut v0 = v0;
        let mut coeffs = coeffs;
        if v0 < prec {
            let keep = usize::try_from((prec - v0).min(coeffs.len() as i64)).unwrap();
            coeffs.truncate(keep);
        } else {
            coeffs.clear();
        }
        let lead_zeros = coeffs.iter().take_while(|c| ring.is_zero(c)).count();
        if lead_zeros > 0 {
            coeffs.drain(..lead_zeros);
            v0 += lead_zeros as i64;
        }
        while coeffs.last().map(|c| ring.is_zero(c)).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            v0 = prec;
        }
        Laurent { ring, v0, coeffs, prec }
    }

    pub fn zero(ring: R, prec: i64) -> Self {
        Laurent { ring, v0: prec, coeffs: Vec::new(), prec }
    }

    /// Exact constant.
    pub fn constant(ring: R, c: R::Elem) -> Self {
        Laurent::from_coeffs(ring, 0, vec![c], PREC_EXACT)
    }

    /// Exact monomial `c * t^k`.
    pub fn monomial(ring: R, c: R::Elem, k: i64) -> Self {
        Laurent::from_coeffs(ring, k, vec![c], PREC_EXACT)
    }

    /// Exact `t^k`.
    pub fn t_pow(ring: R, k: i64) -> Self {
        let one = ring.one();
        Laurent::monomial(ring, one, k)
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// Zero modulo the precision window.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::AtLeast(self.prec)
        } else {
            Valuation::Finite(self.v0)
        }
    }

    /// Pole order `max(0, -v(f))`, zero for values with no visible pole.
    pub fn pole_order(&self) -> i64 {
        match self.valuation() {
            Valuation::Finite(v) => (-v).max(0),
            Valuation::AtLeast(_) => 0,
        }
    }

    /// Coefficient of `t^k`; an error if `k` lies outside the window.
    pub fn coeff_at(&self, k: i64) -> Result<R::Elem> {
        if k >= self.prec {
            return Err(Error::InsufficientPrecision { needed: k + 1, have: self.prec });
        }
        if self.coeffs.is_empty() || k < self.v0 {
            return Ok(self.ring.zero());
        }
        let idx = (k - self.v0) as usize;
        Ok(self.coeffs.get(idx).cloned().unwrap_or_else(|| self.ring.zero()))
    }

    /// Nonzero stored terms, ascending exponents.
    pub fn support(&self) -> Vec<(i64, R::Elem)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !self.ring.is_zero(c))
            .map(|(i, c)| (self.v0 + i as i64, c.clone()))
            .collect()
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let prec = self.prec.min(other.prec);
        if self.is_zero() && other.is_zero() {
            return Ok(Laurent::zero(self.ring.clone(), prec));
        }
        // a zero operand (stored as v0 = prec, possibly the exact sentinel)
        // must not widen the support of the sum
        let (base, top_nat) = match (self.is_zero(), other.is_zero()) {
            (false, false) => (
                self.v0.min(other.v0),
                (self.v0 + self.coeffs.len() as i64).max(other.v0 + other.coeffs.len() as i64),
            ),
            (false, true) => (self.v0, self.v0 + self.coeffs.len() as i64),
            (true, false) => (other.v0, other.v0 + other.coeffs.len() as i64),
            (true, true) => unreachable!(),
        };
        let top = top_nat.min(prec);
        let len = usize::try_from((top - base).max(0)).unwrap();
        let mut out = vec![self.ring.zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.v0 + i as i64;
            if k < top {
                let idx = (k - base) as usize;
                out[idx] = self.ring.add(&out[idx], c);
            }
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            let k = other.v0 + i as i64;
            if k < top {
                let idx = (k - base) as usize;
                out[idx] = self.ring.add(&out[idx], c);
            }
        }
        Ok(Laurent::from_coeffs(self.ring.clone(), base, out, prec))
    }

    pub fn neg(&self) -> Self {
        Laurent {
            ring: self.ring.clone(),
            v0: self.v0,
            coeffs: self.coeffs.iter().map(|c| self.ring.neg(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, c: &R::Elem) -> Self {
        Laurent::from_coeffs(
            self.ring.clone(),
            self.v0,
            self.coeffs.iter().map(|x| self.ring.mul(x, c)).collect(),
            self.prec,
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        // an exactly-known zero annihilates regardless of the other window
        if (self.is_zero() && self.prec >= PREC_EXACT)
            || (other.is_zero() && other.prec >= PREC_EXACT)
        {
            return Ok(Laurent::zero(self.ring.clone(), PREC_EXACT));
        }
        let va = self.valuation().lower_bound();
        let vb = other.valuation().lower_bound();
        let mut prec = PREC_EXACT;
        if self.prec < PREC_EXACT {
            prec = prec.min(self.prec.saturating_add(vb));
        }
        if other.prec < PREC_EXACT {
            prec = prec.min(other.prec.saturating_add(va));
        }
        if self.is_zero() || other.is_zero() {
            return Ok(Laurent::zero(self.ring.clone(), prec));
        }
        let base = self.v0 + other.v0;
        let nat_top = base + (self.coeffs.len() + other.coeffs.len()) as i64 - 1;
        let top = nat_top.min(prec);
        let len = usize::try_from((top - base).max(0)).unwrap();
        let mut out = vec![self.ring.zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if self.ring.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = base + (i + j) as i64;
                if k >= top {
                    break;
                }
                let idx = (i + j) as usize;
                out[idx] = self.ring.add(&out[idx], &self.ring.mul(a, b));
            }
        }
        Ok(Laurent::from_coeffs(self.ring.clone(), base, out, prec))
    }

    /// Repeated-squaring power; precision follows the product rule.
    pub fn pow(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Ok(Laurent::constant(self.ring.clone(), self.ring.one()));
        }
        let mut acc: Option<Laurent<R>> = None;
        let mut base = self.clone();
        let mut k = k;
        loop {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.mul(&base)?;
        }
        Ok(acc.unwrap())
    }

    /// Multiplicative inverse.  Requires a unit leading coefficient; the
    /// window of an exact polynomial input is capped, since its inverse is an
    /// infinite series.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let u0 = &self.coeffs[0];
        let u0i = self.ring.inv(u0).ok_or(Error::DivisionByZero)?;
        let eff_prec = if self.prec >= PREC_EXACT && self.coeffs.len() > 1 {
            self.v0 + self.coeffs.len() as i64 + EXACT_INV_WINDOW
        } else {
            self.prec
        };
        if self.coeffs.len() == 1 {
            // exact inverse of a monomial
            return Ok(Laurent::from_coeffs(
                self.ring.clone(),
                -self.v0,
                vec![u0i],
                if self.prec >= PREC_EXACT { PREC_EXACT } else { self.prec - 2 * self.v0 },
            ));
        }
        // d_0 = u0^-1, d_k = -u0^-1 sum_{j=1..k} c_j d_{k-j}
        let len = usize::try_from((eff_prec - self.v0).max(1)).unwrap();
        let mut d = Vec::with_capacity(len);
        d.push(u0i.clone());
        for k in 1..len {
            let mut s = self.ring.zero();
            for j in 1..=k.min(self.coeffs.len() - 1) {
                s = self.ring.add(&s, &self.ring.mul(&self.coeffs[j], &d[k - j]));
            }
            d.push(self.ring.neg(&self.ring.mul(&u0i, &s)));
        }
        let prec = if self.prec >= PREC_EXACT {
            -self.v0 + len as i64
        } else {
            self.prec - 2 * self.v0
        };
        Ok(Laurent::from_coeffs(self.ring.clone(), -self.v0, d, prec))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    /// Formal derivative `d/dt`.
    pub fn derivative(&self) -> Self {
        let prec = if self.prec >= PREC_EXACT { PREC_EXACT } else { self.prec - 1 };
        let coeffs: Vec<R::Elem> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.v0 + i as i64;
                self.ring.mul(c, &self.ring.from_i64(k))
            })
            .collect();
        Laurent::from_coeffs(self.ring.clone(), self.v0 - 1, coeffs, prec)
    }

    /// Logarithmic derivative `f'/f`.
    pub fn dlog(&self) -> Result<Self> {
        self.derivative().div(self)
    }

    /// The `p`-power Frobenius `sum c_k t^k -> sum c_k^p t^(pk)`; only a ring
    /// map in prime characteristic.
    pub fn frobenius(&self) -> Result<Self> {
        let p = self
            .ring
            .char_prime()
            .ok_or_else(|| Error::InvalidParameter("frobenius needs prime characteristic".into()))?;
        let prec = if self.prec >= PREC_EXACT {
            PREC_EXACT
        } else {
            (self.prec * p as i64).min(PREC_EXACT)
        };
        let mut out: Vec<R::Elem> = Vec::new();
        if self.coeffs.is_empty() {
            return Ok(Laurent::zero(self.ring.clone(), prec));
        }
        let len = (self.coeffs.len() - 1) * p as usize + 1;
        out.resize(len, self.ring.zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            if !self.ring.is_zero(c) {
                out[i * p as usize] = self.ring.frob_p(c).expect("char p ring");
            }
        }
        Ok(Laurent::from_coeffs(self.ring.clone(), self.v0 * p as i64, out, prec))
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        let prec = if self.prec >= PREC_EXACT { PREC_EXACT } else { self.prec + k };
        if self.is_zero() {
            return Laurent::zero(self.ring.clone(), prec);
        }
        Laurent {
            ring: self.ring.clone(),
            v0: self.v0 + k,
            coeffs: self.coeffs.clone(),
            prec,
        }
    }

    /// Weaken the claim to `O(t^new_prec)`.
    pub fn truncate(&self, new_prec: i64) -> Self {
        let prec = new_prec.min(self.prec);
        Laurent::from_coeffs(self.ring.clone(), self.v0, self.coeffs.clone(), prec)
    }

    /// Residue: the coefficient of `t^-1`.  Errors when the window does not
    /// reach past `t^-1`.
    pub fn residue(&self) -> Result<R::Elem> {
        if self.prec < 0 {
            return Err(Error::InsufficientPrecision { needed: 0, have: self.prec });
        }
        self.coeff_at(-1)
    }

    /// Do the two values agree on all exponents below `bound`?  Errors if
    /// either window is too small to decide.
    pub fn agrees_upto(&self, other: &Self, bound: i64) -> Result<bool> {
        if self.prec < bound || other.prec < bound {
            return Err(Error::InsufficientPrecision {
                needed: bound,
                have: self.prec.min(other.prec),
            });
        }
        let lo = self.valuation().lower_bound().min(other.valuation().lower_bound());
        for k in lo..bound {
            if self.coeff_at(k)? != other.coeff_at(k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Random series supported on `[vmin, vmax]` with the given precision;
    /// may come out zero.
    pub fn random(ring: &R, rng: &mut dyn rand::RngCore, vmin: i64, vmax: i64, prec: i64) -> Self {
        assert!(vmin <= vmax && vmax < prec);
        let len = (vmax - vmin + 1) as usize;
        let coeffs: Vec<R::Elem> = (0..len).map(|_| ring.rand_elem(&mut *rng)).collect();
        Laurent::from_coeffs(ring.clone(), vmin, coeffs, prec)
    }

    // --- text format ---------------------------------------------------------

    /// Canonical display: ascending exponents, `+` separated, composite
    /// coefficients parenthesised, trailing `O(t^N)` for finite windows.
    /// Examples: `t^-1 + 1 + O(t^10)`, `(g+1)*t^2`, `0`.
    pub fn format(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (k, c) in self.support() {
            let cs = self.ring.format_elem(&c);
            let needs_parens = cs.contains('+') || cs.contains('-');
            let coeff_str = if needs_parens { format!("({cs})") } else { cs };
            let part = match k {
                0 => coeff_str,
                _ => {
                    let tp = if k == 1 { "t".to_string() } else { format!("t^{k}") };
                    if coeff_str == "1" {
                        tp
                    } else {
                        format!("{coeff_str}*{tp}")
                    }
                }
            };
            parts.push(part);
        }
        let body = parts.join(" + ");
        if self.prec >= PREC_EXACT {
            if body.is_empty() {
                "0".into()
            } else {
                body
            }
        } else if body.is_empty() {
            format!("O(t^{})", self.prec)
        } else {
            format!("{body} + O(t^{})", self.prec)
        }
    }

    /// Parse the display format.  `*` is optional, `-` acts as a term sign,
    /// coefficients may be parenthesised polynomials in the ring generator.
    /// Without an explicit `O(t^N)` the window defaults to 64 past the most
    /// negative exponent.
    pub fn parse(ring: &R, s: &str) -> Result<Self> {
        Self::parse_with_default(ring, s, None)
    }

    /// Like [`Laurent::parse`], but input without an `O(..)` marker is taken
    /// as an exact polynomial statement rather than a default finite window.
    pub fn parse_exact(ring: &R, s: &str) -> Result<Self> {
        Self::parse_with_default(ring, s, Some(PREC_EXACT))
    }

    fn parse_with_default(ring: &R, s: &str, default_prec: Option<i64>) -> Result<Self> {
        let terms = split_terms(s)?;
        if terms.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty series".into() });
        }
        let mut prec_marker: Option<i64> = None;
        let mut acc: BTreeMap<i64, R::Elem> = BTreeMap::new();
        for (neg, pos, term) in terms {
            let t = term.trim();
            if t.is_empty() {
                return Err(Error::Parse { pos, msg: "empty term".into() });
            }
            if let Some(rest) = t.strip_prefix("O(") {
                if neg {
                    return Err(Error::Parse { pos, msg: "negated O(..) term".into() });
                }
                let inner = rest.strip_suffix(')').ok_or(Error::Parse {
                    pos,
                    msg: "unclosed O(..)".into(),
                })?;
                let n = parse_t_power(inner.trim(), pos)?;
                if prec_marker.replace(n).is_some() {
                    return Err(Error::Parse { pos, msg: "duplicate O(..) marker".into() });
                }
                continue;
            }
            let (mut coeff, exp) = parse_term(ring, t, pos)?;
            if neg {
                coeff = ring.neg(&coeff);
            }
            let slot = acc.entry(exp).or_insert_with(|| ring.zero());
            *slot = ring.add(slot, &coeff);
        }
        let vmin = acc.keys().next().copied().unwrap_or(0);
        let prec = prec_marker.or(default_prec).unwrap_or(vmin + 64);
        if let (Some(&lo), Some(&hi)) = (acc.keys().next(), acc.keys().last()) {
            let coeffs: Vec<R::Elem> = (lo..=hi)
                .map(|k| acc.get(&k).cloned().unwrap_or_else(|| ring.zero()))
                .collect();
            return Ok(Laurent::from_coeffs(ring.clone(), lo, coeffs, prec));
        }
        Ok(Laurent::zero(ring.clone(), prec))
    }
}

/// Split on top-level `+`/`-`, respecting parentheses and `^` signs.
/// Returns `(negated, byte_pos, text)` per term.
fn split_terms(s: &str) -> Result<Vec<(bool, usize, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut cur_pos = 0usize;
    let mut neg = false;
    let mut last_sig: Option<char> = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse { pos: i, msg: "unbalanced )".into() });
                }
                cur.push(ch);
            }
            '+' | '-' if depth == 0 && last_sig != Some('^') => {
                if cur.trim().is_empty() {
                    if out.is_empty() && !neg && ch == '-' && cur.trim().is_empty() {
                        // leading sign
                        neg = true;
                    } else if out.is_empty() && cur.trim().is_empty() && ch == '+' && !neg {
                        // leading plus: ignore
                    } else {
                        return Err(Error::Parse { pos: i, msg: "dangling sign".into() });
                    }
                } else {
                    out.push((neg, cur_pos, std::mem::take(&mut cur)));
                    neg = ch == '-';
                    cur_pos = i + 1;
                }
            }
            _ => cur.push(ch),
        }
        if !ch.is_whitespace() {
            last_sig = Some(ch);
        }
    }
    if depth != 0 {
        return Err(Error::Parse { pos: s.len(), msg: "unbalanced (".into() });
    }
    if cur.trim().is_empty() {
        if !out.is_empty() || neg {
            return Err(Error::Parse { pos: s.len(), msg: "dangling sign".into() });
        }
    } else {
        out.push((neg, cur_pos, cur));
    }
    Ok(out)
}

/// Parse `t`, `t^k` (possibly negative `k`) and return the exponent.
fn parse_t_power(s: &str, pos: usize) -> Result<i64> {
    if s == "t" {
        return Ok(1);
    }
    let rest = s.strip_prefix("t^").ok_or(Error::Parse { pos, msg: "expected t^k".into() })?;
    rest.parse::<i64>().map_err(|_| Error::Parse { pos, msg: "bad exponent".into() })
}

/// Parse one additive term `coeff [*] [t[^k]]`.
fn parse_term<R: CoeffRing>(ring: &R, t: &str, pos: usize) -> Result<(R::Elem, i64)> {
    // Locate the `t`-part: the last top-level 't' (coefficients use other symbols).
    let bytes = t.as_bytes();
    let mut depth = 0i32;
    let mut t_at: Option<usize> = None;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b't' if depth == 0 => {
                t_at = Some(i);
                break;
            }
            _ => {}
        }
    }
    match t_at {
        None => {
            let inner = strip_outer_parens(t);
            Ok((ring.parse_elem(inner).map_err(|e| relocate(e, pos))?, 0))
        }
        Some(i) => {
            let coeff_part = t[..i].trim().trim_end_matches('*').trim();
            let exp = parse_t_power(t[i..].trim(), pos)?;
            let coeff = if coeff_part.is_empty() {
                ring.one()
            } else {
                let inner = strip_outer_parens(coeff_part);
                ring.parse_elem(inner).map_err(|e| relocate(e, pos))?
            };
            Ok((coeff, exp))
        }
    }
}

fn strip_outer_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        // only strip if the parens actually match each other
        let inner = &t[1..t.len() - 1];
        let mut depth = 0i32;
        for b in inner.bytes() {
            match b {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth < 0 {
                        return t;
                    }
                }
                _ => {}
            }
        }
        if depth == 0 {
            return inner;
        }
    }
    t
}

fn relocate(e: Error, base: usize) -> Error {
    match e {
        Error::Parse { pos, msg } => Error::Parse { pos: base + pos, msg },
        other => other,
    }
}

// --- the ring of Laurent series, usable as a Witt coefficient ring ------------

/// Ring object for `R((t))` at finite precision, so Witt vectors can take
/// Laurent components.  Constants produced by the ring (zero, one, integer
/// images) are exact.
#[derive(Debug, Clone)]
pub struct LaurentRing<R: CoeffRing> {
    pub coeff: R,
}

impl<R: CoeffRing> LaurentRing<R> {
    pub fn new(coeff: R) -> Self {
        LaurentRing { coeff }
    }
}

impl<R: CoeffRing> PartialEq for LaurentRing<R> {
    fn eq(&self, other: &Self) -> bool {
        self.coeff == other.coeff
    }
}

impl<R: CoeffRing> CoeffRing for LaurentRing<R> {
    type Elem = Laurent<R>;

    fn zero(&self) -> Laurent<R> {
        Laurent::zero(self.coeff.clone(), PREC_EXACT)
    }
    fn one(&self) -> Laurent<R> {
        Laurent::constant(self.coeff.clone(), self.coeff.one())
    }
    fn is_zero(&self, a: &Laurent<R>) -> bool {
        // exact zero only; a value that merely vanishes within its window is
        // not structurally zero
        a.is_zero() && a.precision() >= PREC_EXACT
    }
    fn add(&self, a: &Laurent<R>, b: &Laurent<R>) -> Laurent<R> {
        a.add(b).expect("ring mismatch inside LaurentRing")
    }
    fn sub(&self, a: &Laurent<R>, b: &Laurent<R>) -> Laurent<R> {
        a.sub(b).expect("ring mismatch inside LaurentRing")
    }
    fn neg(&self, a: &Laurent<R>) -> Laurent<R> {
        a.neg()
    }
    fn mul(&self, a: &Laurent<R>, b: &Laurent<R>) -> Laurent<R> {
        a.mul(b).expect("ring mismatch inside LaurentRing")
    }
    fn from_i64(&self, k: i64) -> Laurent<R> {
        Laurent::constant(self.coeff.clone(), self.coeff.from_i64(k))
    }
    fn from_bigint(&self, k: &num_bigint::BigInt) -> Laurent<R> {
        Laurent::constant(self.coeff.clone(), self.coeff.from_bigint(k))
    }
    fn inv(&self, a: &Laurent<R>) -> Option<Laurent<R>> {
        a.inv().ok()
    }
    fn char_prime(&self) -> Option<u64> {
        self.coeff.char_prime()
    }
    fn frob_p(&self, a: &Laurent<R>) -> Option<Laurent<R>> {
        a.frobenius().ok()
    }
    fn format_elem(&self, a: &Laurent<R>) -> String {
        a.format()
    }
    fn parse_elem(&self, s: &str) -> Result<Laurent<R>> {
        // ring-level parsing reads unmarked input as exact; a window must be
        // requested explicitly with O(..)
        Laurent::parse_exact(&self.coeff, s)
    }
    fn rand_elem(&self, rng: &mut dyn rand::RngCore) -> Laurent<R> {
        Laurent::random(&self.coeff, rng, -2, 3, 40)
    }
}

impl<C: PadicPrecision> PadicPrecision for LaurentRing<C> {
    fn prime(&self) -> u64 {
        self.coeff.prime()
    }
    fn precision_digits(&self) -> u32 {
        self.coeff.precision_digits()
    }
    fn drop_precision(&self, drop: u32) -> Result<Self> {
        Ok(LaurentRing::new(self.coeff.drop_precision(drop)?))
    }
    fn project_to(&self, target: &Self, a: &Laurent<C>) -> Laurent<C> {
        // the t-adic window is untouched; only coefficient digits are dropped
        let coeffs: Vec<C::Elem> =
            a.coeffs.iter().map(|c| self.coeff.project_to(&target.coeff, c)).collect();
        Laurent::from_coeffs(target.coeff.clone(), a.v0, coeffs, a.prec)
    }
    fn div_exact_p_pow(&self, a: &Laurent<C>, k: u32) -> Result<Laurent<C>> {
        let mut coeffs = Vec::with_capacity(a.coeffs.len());
        for c in &a.coeffs {
            coeffs.push(self.coeff.div_exact_p_pow(c, k)?);
        }
        Ok(Laurent::from_coeffs(self.coeff.clone(), a.v0, coeffs, a.prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FqField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FqField {
        FqField::new(2, 1).unwrap()
    }
    fn f4() -> FqField {
        FqField::new(2, 2).unwrap()
    }

    fn parse(f: &FqField, s: &str) -> Laurent<FqField> {
        Laurent::parse(f, s).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        let f = f2();
        // (t^-1 + 1) * t = 1 + t, exactly
        let a = Laurent::from_coeffs(f.clone(), -1, vec![f.one(), f.one()], PREC_EXACT);
        let t = Laurent::t_pow(f.clone(), 1);
        let prod = a.mul(&t).unwrap();
        assert_eq!(prod.coeff_at(0).unwrap(), f.one());
        assert_eq!(prod.coeff_at(1).unwrap(), f.one());
        assert!(prod.precision() >= PREC_EXACT);
        // (1 + t)^2 = 1 + t^2 in characteristic 2
        let one_t = Laurent::from_coeffs(f.clone(), 0, vec![f.one(), f.one()], PREC_EXACT);
        let sq = one_t.pow(2).unwrap();
        assert_eq!(sq.coeff_at(0).unwrap(), f.one());
        assert!(f.is_zero(&sq.coeff_at(1).unwrap()));
        assert_eq!(sq.coeff_at(2).unwrap(), f.one());
    }

    #[test]
    fn geometric_inverse() {
        let f = f2();
        let one_t = parse(&f, "1 + t + O(t^8)");
        let inv = one_t.inv().unwrap();
        // 1/(1+t) = 1 + t + t^2 + ... over F_2
        assert_eq!(inv.precision(), 8);
        for k in 0..8 {
            assert_eq!(inv.coeff_at(k).unwrap(), f.one(), "coefficient of t^{k}");
        }
        let back = one_t.mul(&inv).unwrap();
        assert!(back.agrees_upto(&Laurent::constant(f.clone(), f.one()), 8).unwrap());
    }

    #[test]
    fn residue_examples() {
        let f = f4();
        assert_eq!(Laurent::t_pow(f.clone(), -1).residue().unwrap(), f.one());
        let v = parse(&f, "t^2 + 1");
        assert!(f.is_zero(&v.residue().unwrap()));
        // residue(c t^-1 / (1 + c t)) = c for every c
        for c in f.all_elems() {
            if f.is_zero(&c) {
                continue;
            }
            let num = Laurent::monomial(f.clone(), c.clone(), -1);
            let den = Laurent::from_coeffs(f.clone(), 0, vec![f.one(), c.clone()], 32);
            let r = num.div(&den).unwrap().residue().unwrap();
            assert_eq!(r, c);
        }
    }

    #[test]
    fn residue_outside_window_errors() {
        let f = f2();
        let v = Laurent::zero(f.clone(), -5);
        assert!(matches!(v.residue(), Err(Error::InsufficientPrecision { .. })));
        let w = parse(&f, "t^-3 + O(t^-1)");
        assert!(matches!(w.residue(), Err(Error::InsufficientPrecision { .. })));
    }

    #[test]
    fn dlog_examples() {
        let f = FqField::new(3, 1).unwrap();
        let t = Laurent::t_pow(f.clone(), 1);
        let dt = t.dlog().unwrap();
        assert_eq!(dt.coeff_at(-1).unwrap(), f.one());
        assert!(dt.precision() >= PREC_EXACT);
        // dlog(1+t) = 1 - t + t^2 - ... => 1, 2, 1, 2 over F_3
        let u = parse(&f, "1 + t + O(t^6)");
        let d = u.dlog().unwrap();
        assert_eq!(d.coeff_at(0).unwrap(), f.from_i64(1));
        assert_eq!(d.coeff_at(1).unwrap(), f.from_i64(-1));
        assert_eq!(d.coeff_at(2).unwrap(), f.from_i64(1));
        assert_eq!(d.coeff_at(3).unwrap(), f.from_i64(-1));
    }

    #[test]
    fn dlog_product_rule_random() {
        let f = f4();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        while done < 100 {
            let a = Laurent::random(&f, &mut rng, -2, 3, 24);
            let b = Laurent::random(&f, &mut rng, -1, 4, 24);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let lhs = a.mul(&b).unwrap().dlog().unwrap();
            let rhs = a.dlog().unwrap().add(&b.dlog().unwrap()).unwrap();
            let bound = lhs.precision().min(rhs.precision());
            assert!(lhs.agrees_upto(&rhs, bound).unwrap());
            done += 1;
        }
    }

    #[test]
    fn derivative_has_zero_residue() {
        let f = FqField::new(5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let a = Laurent::random(&f, &mut rng, -4, 5, 24);
            let d = a.derivative();
            assert!(f.is_zero(&d.residue().unwrap()));
        }
    }

    #[test]
    fn residue_against_dlog_t_reads_constant_term() {
        let f = f4();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = Laurent::t_pow(f.clone(), 1);
        let dlt = t.dlog().unwrap();
        for _ in 0..100 {
            let a = Laurent::random(&f, &mut rng, -3, 4, 24);
            let r = a.mul(&dlt).unwrap().residue().unwrap();
            assert_eq!(r, a.coeff_at(0).unwrap());
        }
    }

    #[test]
    fn frobenius_examples() {
        let f = f2();
        let u = parse(&f, "1 + t + O(t^6)");
        let fr = u.frobenius().unwrap();
        assert_eq!(fr.precision(), 12);
        assert_eq!(fr.coeff_at(0).unwrap(), f.one());
        assert!(f.is_zero(&fr.coeff_at(1).unwrap()));
        assert_eq!(fr.coeff_at(2).unwrap(), f.one());
    }

    #[test]
    fn frobenius_is_multiplicative() {
        let f = FqField::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let a = Laurent::random(&f, &mut rng, -2, 3, 20);
            let b = Laurent::random(&f, &mut rng, -2, 3, 20);
            let lhs = a.mul(&b).unwrap().frobenius().unwrap();
            let rhs = a.frobenius().unwrap().mul(&b.frobenius().unwrap()).unwrap();
            let bound = lhs.precision().min(rhs.precision());
            assert!(lhs.agrees_upto(&rhs, bound).unwrap());
        }
    }

    #[test]
    fn frobenius_agrees_with_pth_power() {
        let f = FqField::new(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let a = Laurent::random(&f, &mut rng, -2, 4, 20);
            let fr = a.frobenius().unwrap();
            let cube = a.pow(3).unwrap();
            let bound = fr.precision().min(cube.precision());
            assert!(fr.agrees_upto(&cube, bound).unwrap());
        }
    }

    #[test]
    fn precision_monotone_under_refinement() {
        // computing at higher precision never changes coefficients already seen
        let f = f4();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let lo = Laurent::random(&f, &mut rng, -2, 3, 12);
            // re-create the same value at a wider window
            let v0 = lo.valuation().lower_bound();
            let dense: Vec<_> = (v0..12).map(|k| lo.coeff_at(k).unwrap()).collect();
            let hi = Laurent::from_coeffs(f.clone(), v0, dense, 24);
            let g = parse(&f, "1 + g*t + t^3 + O(t^9)");
            let a = lo.mul(&g).unwrap();
            let b = hi.mul(&g).unwrap();
            let bound = a.precision().min(b.precision());
            assert!(a.agrees_upto(&b, bound).unwrap());
        }
    }

    #[test]
    fn division_by_zero_mod_precision_errors() {
        let f = f2();
        let z = Laurent::zero(f.clone(), 10);
        let one = Laurent::constant(f.clone(), f.one());
        assert_eq!(one.div(&z), Err(Error::DivisionByZero));
    }

    #[test]
    fn parse_format_specifics() {
        let f9 = FqField::new(3, 2).unwrap();
        let s = "2*t^-3 + g*t^-1 + 1 + O(t^10)";
        let v = Laurent::parse(&f9, s).unwrap();
        assert_eq!(v.precision(), 10);
        assert_eq!(v.coeff_at(-3).unwrap(), f9.from_i64(2));
        assert_eq!(v.coeff_at(-1).unwrap(), f9.gen());
        assert_eq!(v.coeff_at(0).unwrap(), f9.one());
        assert_eq!(v.format(), s);
        // parenthesised coefficients round trip
        let f4 = f4();
        let w = Laurent::parse(&f4, "(g+1)*t^2 + g + O(t^5)").unwrap();
        assert_eq!(w.coeff_at(2).unwrap(), f4.add(&f4.gen(), &f4.one()));
        assert_eq!(w.format(), "g + (g+1)*t^2 + O(t^5)");
        // default window: 64 past the most negative exponent
        let d = Laurent::parse(&f4, "t^-3 + 1").unwrap();
        assert_eq!(d.precision(), 61);
        let d0 = Laurent::parse(&f4, "1 + t").unwrap();
        assert_eq!(d0.precision(), 64);
    }

    #[test]
    fn parse_rejects_malformed() {
        let f = f4();
        assert!(Laurent::parse(&f, "").is_err());
        assert!(Laurent::parse(&f, "t^").is_err());
        assert!(Laurent::parse(&f, "1 + + t").is_err());
        assert!(Laurent::parse(&f, "(g+1*t").is_err());
        assert!(Laurent::parse(&f, "1 + O(t^3) + O(t^4)").is_err());
        assert!(Laurent::parse(&f, "x^2").is_err());
    }

    #[test]
    fn parse_format_round_trip_random() {
        let fields = [f4(), FqField::new(3, 2).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for f in &fields {
            for _ in 0..100 {
                let a = Laurent::random(f, &mut rng, -4, 6, 16);
                let s = a.format();
                let back = Laurent::parse(f, &s).unwrap();
                assert_eq!(back, a, "round trip failed for `{s}`");
            }
        }
    }

    #[test]
    fn zero_and_negative_exponent_display() {
        let f = f2();
        let z = Laurent::zero(f.clone(), 5);
        assert_eq!(z.format(), "O(t^5)");
        let back = Laurent::parse(&f, "O(t^5)").unwrap();
        assert_eq!(back, z);
        let exact_zero = Laurent::zero(f.clone(), PREC_EXACT);
        assert_eq!(exact_zero.format(), "0");
        let m = Laurent::parse(&f, "t^-2 + O(t^-1)").unwrap();
        assert_eq!(m.format(), "t^-2 + O(t^-1)");
    }

    #[test]
    fn valuation_and_pole_order() {
        let f = f2();
        let a = parse(&f, "t^-3 + 1");
        assert_eq!(a.valuation(), Valuation::Finite(-3));
        assert_eq!(a.pole_order(), 3);
        let z = Laurent::zero(f.clone(), 7);
        assert_eq!(z.valuation(), Valuation::AtLeast(7));
        assert_eq!(z.pole_order(), 0);
    }

    #[test]
    fn coeff_at_past_window_errors() {
        let f = f2();
        let a = parse(&f, "1 + t + O(t^4)");
        assert!(a.coeff_at(3).is_ok());
        assert!(matches!(a.coeff_at(4), Err(Error::InsufficientPrecision { .. })));
    }

    #[test]
    fn mul_precision_rule() {
        let f = f2();
        let a = parse(&f, "t^-2 + O(t^5)");
        let b = parse(&f, "t^3 + O(t^6)");
        let prod = a.mul(&b).unwrap();
        // min(5 + 3, 6 + (-2)) = 4
        assert_eq!(prod.precision(), 4);
        assert_eq!(prod.coeff_at(1).unwrap(), f.one());
    }
}
