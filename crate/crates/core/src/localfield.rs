//! Finite multiplicative quotients of the local field `K = F_q((t))`.
//!
//! For the duality computations the relevant groups are
//! `G_(n,m) = K^x / (K^x)^(p^n) U^m`, where `U^m = 1 + t^m F_q[[t]]` for
//! `m >= 1` and `U^0` is the full unit group.  Splitting `K^x` along the
//! uniformizer as `t^Z x mu_(q-1) x U^1` shows
//!
//! * the `t`-part contributes `Z/p^n`,
//! * the Teichmueller part `mu_(q-1)` has prime-to-`p` order and dies,
//! * the principal units contribute `H = U^1 / ((U^1)^(p^n) U^m)`.
//!
//! `H` is computed by honest enumeration: principal units modulo `U^m` are
//! the `q^(m-1)` truncated polynomials `1 + c_1 t + .. + c_(m-1) t^(m-1)`,
//! the subgroup of `p^n`-th powers is listed, and cosets get canonical
//! (lowest-index) representatives.  A breadth-first walk over the standard
//! generators `1 + c t^j` records an exponent vector for every coset, so a
//! bilinear pairing against all of `G_(n,m)` only ever needs to be evaluated
//! on the generators.

use crate::algebra::{CoeffRing, FqElem, FqField};
use crate::series::{Laurent, PREC_EXACT};
use crate::{Error, KSeries, Result};
use std::collections::VecDeque;

/// Enumeration guard: `q^(m-1)` tuples are listed explicitly.
const MAX_TUPLES: u64 = 100_000;

/// Write `b = t^v . c0 . u` with `c0` the leading coefficient and `u` a
/// principal unit (constant term 1).  The unit keeps the window of `b`,
/// shifted to valuation 0.
pub fn decompose(b: &KSeries) -> Result<(i64, FqElem, KSeries)> {
    if b.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let v = match b.valuation() {
        crate::series::Valuation::Finite(v) => v,
        crate::series::Valuation::AtLeast(_) => return Err(Error::DivisionByZero),
    };
    let c0 = b.coeff_at(v)?;
    let ring = b.ring().clone();
    let c0i = ring.inv(&c0).ok_or(Error::DivisionByZero)?;
    let u = b.shift(-v).scalar_mul(&c0i);
    Ok((v, c0, u))
}

/// A class in `G_(n,m)`: the exponent of `t` modulo `p^n` and the coset of
/// the principal-unit part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitClass {
    pub t_exp: u64,
    pub coset: usize,
}

/// The finite group `G_(n,m) = K^x / (K^x)^(p^n) U^m`, fully enumerated.
#[derive(Clone, Debug)]
pub struct UnitQuot {
    fq: FqField,
    n: usize,
    m: i64,
    pn: u64,
    /// Length of the enumerated principal-unit window: `max(m, 1)`.
    hlen: usize,
    /// Number of encoded tuples, `q^(hlen-1)`.
    tuples: u64,
    /// Coset index of every encoded tuple.
    coset_of: Vec<usize>,
    /// Canonical (lowest) encoded representative per coset.
    reps: Vec<u64>,
    /// Encoded subgroup of `p^n`-th powers.
    sub: Vec<u64>,
    /// Unit generators `1 + c t^j` as `(j, c)`.
    gens: Vec<(i64, FqElem)>,
    /// Coset of each generator.
    gen_cosets: Vec<usize>,
    /// Exponent vector (one entry per generator, mod `p^n`) expressing each
    /// coset as a product of generators.
    exps: Vec<Vec<u32>>,
}

impl UnitQuot {
    pub fn new(fq: &FqField, n: usize, m: i64) -> Result<UnitQuot> {
        if n == 0 || n > crate::witt::MAX_LENGTH {
            return Err(Error::UnsupportedLength(n));
        }
        if m < 0 {
            return Err(Error::InvalidParameter(format!("level m = {m} must be >= 0")));
        }
        let q = fq.q();
        let hlen = m.max(1) as usize;
        let mut tuples: u64 = 1;
        for _ in 1..hlen {
            tuples = tuples.saturating_mul(q);
            if tuples > MAX_TUPLES {
                return Err(Error::EnumerationBound(format!(
                    "q^(m-1) = {q}^{} exceeds {MAX_TUPLES}",
                    hlen - 1
                )));
            }
        }
        let pn = fq.p().pow(n as u32);

        // the subgroup of p^n-th powers of principal units, mod t^hlen
        let me = UnitQuotBuilder { fq: fq.clone(), hlen, q };
        let mut sub: Vec<u64> = (0..tuples)
            .map(|ix| {
                let u = me.decode(ix);
                me.encode(&me.unit_pow(&u, pn))
            })
            .collect();
        sub.sort_unstable();
        sub.dedup();

        // partition into cosets; ascending scan makes the first member of
        // each coset its canonical representative
        let mut coset_of = vec![usize::MAX; tuples as usize];
        let mut reps = Vec::new();
        for ix in 0..tuples {
            if coset_of[ix as usize] != usize::MAX {
                continue;
            }
            let id = reps.len();
            reps.push(ix);
            let u = me.decode(ix);
            for s in &sub {
                let member = me.encode(&me.unit_mul(&u, &me.decode(*s)));
                coset_of[member as usize] = id;
            }
        }

        // generators 1 + c t^j for j < hlen and c running over the F_p-basis
        let mut gens = Vec::new();
        for j in 1..hlen as i64 {
            for c in fq.basis() {
                gens.push((j, c.clone()));
            }
        }
        let gen_cosets: Vec<usize> = gens
            .iter()
            .map(|(j, c)| {
                let mut u = me.unit_one();
                u[*j as usize] = c.clone();
                coset_of[me.encode(&u) as usize]
            })
            .collect();

        // breadth-first exponent vectors over the generator list
        let mut exps: Vec<Option<Vec<u32>>> = vec![None; reps.len()];
        let identity = coset_of[0];
        exps[identity] = Some(vec![0; gens.len()]);
        let mut queue = VecDeque::from([identity]);
        while let Some(at) = queue.pop_front() {
            let base_vec = exps[at].clone().expect("visited coset has exponents");
            let base = me.decode(reps[at]);
            for (k, (j, c)) in gens.iter().enumerate() {
                let mut g = me.unit_one();
                g[*j as usize] = c.clone();
                let next = coset_of[me.encode(&me.unit_mul(&base, &g)) as usize];
                if exps[next].is_none() {
                    let mut v = base_vec.clone();
                    v[k] = (v[k] + 1) % pn as u32;
                    exps[next] = Some(v);
                    queue.push_back(next);
                }
            }
        }
        let exps: Vec<Vec<u32>> = exps
            .into_iter()
            .map(|v| v.expect("generators exhaust the quotient"))
            .collect();

        Ok(UnitQuot {
            fq: fq.clone(),
            n,
            m,
            pn,
            hlen,
            tuples,
            coset_of,
            reps,
            sub,
            gens,
            gen_cosets,
            exps,
        })
    }

    pub fn fq(&self) -> &FqField {
        &self.fq
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> i64 {
        self.m
    }
    pub fn pn(&self) -> u64 {
        self.pn
    }
    pub fn coset_count(&self) -> usize {
        self.reps.len()
    }
    /// `|G_(n,m)| = p^n . |H|`.
    pub fn order(&self) -> u64 {
        self.pn * self.reps.len() as u64
    }
    pub fn subgroup_order(&self) -> u64 {
        self.sub.len() as u64
    }

    pub fn identity(&self) -> UnitClass {
        UnitClass { t_exp: 0, coset: self.coset_of[0] }
    }

    pub fn all_classes(&self) -> Vec<UnitClass> {
        let mut out = Vec::with_capacity((self.pn as usize) * self.reps.len());
        for t_exp in 0..self.pn {
            for coset in 0..self.reps.len() {
                out.push(UnitClass { t_exp, coset });
            }
        }
        out
    }

    fn builder(&self) -> UnitQuotBuilder {
        UnitQuotBuilder { fq: self.fq.clone(), hlen: self.hlen, q: self.fq.q() }
    }

    pub fn class_mul(&self, a: &UnitClass, b: &UnitClass) -> UnitClass {
        let me = self.builder();
        let u = me.unit_mul(&me.decode(self.reps[a.coset]), &me.decode(self.reps[b.coset]));
        UnitClass {
            t_exp: (a.t_exp + b.t_exp) % self.pn,
            coset: self.coset_of[me.encode(&u) as usize],
        }
    }

    /// The exact series `t^(t_exp) . (1 + ..)` representing a class.
    pub fn class_to_series(&self, c: &UnitClass) -> KSeries {
        let me = self.builder();
        let u = me.decode(self.reps[c.coset]);
        Laurent::from_coeffs(self.fq.clone(), 0, u, PREC_EXACT).shift(c.t_exp as i64)
    }

    /// Reduce an arbitrary nonzero `b` into the quotient.  The window of `b`
    /// must determine its unit part modulo `t^m`.
    pub fn project(&self, b: &KSeries) -> Result<UnitClass> {
        let (v, _c0, u) = decompose(b)?;
        if u.precision() < self.hlen as i64 {
            return Err(Error::InsufficientPrecision {
                needed: self.hlen as i64,
                have: u.precision(),
            });
        }
        let me = self.builder();
        let mut tup = me.unit_one();
        for j in 1..self.hlen as i64 {
            tup[j as usize] = u.coeff_at(j)?;
        }
        let t_exp = v.rem_euclid(self.pn as i64) as u64;
        Ok(UnitClass { t_exp, coset: self.coset_of[me.encode(&tup) as usize] })
    }

    /// Unit generators as exact series, aligned with [`UnitQuot::exponents`].
    pub fn gen_series(&self) -> Vec<KSeries> {
        self.gens
            .iter()
            .map(|(j, c)| {
                let one = Laurent::constant(self.fq.clone(), self.fq.one());
                let term = Laurent::monomial(self.fq.clone(), c.clone(), *j);
                one.add(&term).expect("same ring")
            })
            .collect()
    }

    pub fn gen_count(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_coset(&self, k: usize) -> usize {
        self.gen_cosets[k]
    }

    /// Exponent vector of a coset over the generator list (entries mod `p^n`).
    pub fn exponents(&self, coset: usize) -> &[u32] {
        &self.exps[coset]
    }

    /// Cosets lying in the image of `U^(m')`, `1 <= m' <= m`: tuples whose
    /// coefficients below `t^(m')` vanish.
    pub fn image_of_units_from(&self, m_prime: i64) -> Result<Vec<usize>> {
        if m_prime < 1 || m_prime > self.hlen as i64 {
            return Err(Error::InvalidParameter(format!(
                "m' = {m_prime} outside 1..={}",
                self.hlen
            )));
        }
        let me = self.builder();
        let mut out: Vec<usize> = Vec::new();
        for ix in 0..self.tuples {
            let u = me.decode(ix);
            if u[1..m_prime as usize].iter().all(|c| self.fq.is_zero(c)) {
                out.push(self.coset_of[ix as usize]);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Natural surjection onto a coarser quotient (same field and `n`,
    /// smaller or equal `m`).
    pub fn project_to(&self, coarser: &UnitQuot, c: &UnitClass) -> Result<UnitClass> {
        if coarser.fq != self.fq || coarser.n != self.n {
            return Err(Error::RingMismatch);
        }
        if coarser.m > self.m {
            return Err(Error::InvalidParameter("target quotient is finer".into()));
        }
        coarser.project(&self.class_to_series(c))
    }
}

/// Internal helper carrying the truncated-unit arithmetic: dense coefficient
/// vectors of length `hlen` with constant term 1.
struct UnitQuotBuilder {
    fq: FqField,
    hlen: usize,
    q: u64,
}

impl UnitQuotBuilder {
    fn unit_one(&self) -> Vec<FqElem> {
        let mut u = vec![self.fq.zero(); self.hlen];
        u[0] = self.fq.one();
        u
    }

    fn encode(&self, u: &[FqElem]) -> u64 {
        let mut ix = 0u64;
        let mut base = 1u64;
        for c in &u[1..] {
            ix += self.fq.elem_index(c) * base;
            base *= self.q;
        }
        ix
    }

    fn decode(&self, mut ix: u64) -> Vec<FqElem> {
        let mut u = self.unit_one();
        for slot in u.iter_mut().skip(1) {
            *slot = self.fq.elem_from_index(ix % self.q);
            ix /= self.q;
        }
        u
    }

    fn unit_mul(&self, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let mut out = vec![self.fq.zero(); self.hlen];
        for (i, x) in a.iter().enumerate() {
            if self.fq.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if i + j >= self.hlen {
                    break;
                }
                out[i + j] = self.fq.add(&out[i + j], &self.fq.mul(x, y));
            }
        }
        out
    }

    fn unit_pow(&self, a: &[FqElem], mut k: u64) -> Vec<FqElem> {
        let mut acc = self.unit_one();
        let mut base = a.to_vec();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.unit_mul(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.unit_mul(&base, &base);
            }
        }
        acc
    }
}

/// The three orders entering the compatibility identity
/// `|G_(n,m)| = |G_(n-1, ceil(m/p))| . |G_(1,m)|` for `n >= 2`; the caller
/// checks the product.
pub fn order_identity(fq: &FqField, n: usize, m: i64) -> Result<(u64, u64, u64)> {
    if n < 2 {
        return Err(Error::InvalidParameter("order identity needs n >= 2".into()));
    }
    let p = fq.p() as i64;
    let lhs = UnitQuot::new(fq, n, m)?.order();
    let mid = UnitQuot::new(fq, n - 1, (m + p - 1).div_euclid(p))?.order();
    let low = UnitQuot::new(fq, 1, m)?.order();
    Ok((lhs, mid, low))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fq(p: u64, e: usize) -> FqField {
        FqField::new(p, e).unwrap()
    }

    #[test]
    fn frozen_orders() {
        for &(p, e, n, m, want) in &[
            (2u64, 1usize, 1usize, 0i64, 2u64),
            (2, 1, 1, 2, 4),
            (2, 1, 2, 2, 8),
            (2, 1, 2, 4, 32),
            (2, 1, 2, 5, 32),
            (3, 1, 1, 2, 9),
            (3, 1, 2, 3, 81),
            (3, 1, 2, 4, 243),
            (2, 2, 2, 5, 256),
        ] {
            let g = UnitQuot::new(&fq(p, e), n, m).unwrap();
            assert_eq!(g.order(), want, "q={} n={n} m={m}", p.pow(e as u32));
        }
    }

    #[test]
    fn order_identity_examples() {
        for &(p, e, n, m) in &[
            (2u64, 1usize, 2usize, 2i64),
            (2, 1, 2, 4),
            (2, 1, 2, 5),
            (3, 1, 2, 3),
            (3, 1, 2, 4),
            (2, 2, 2, 3),
        ] {
            let (lhs, mid, low) = order_identity(&fq(p, e), n, m).unwrap();
            assert_eq!(lhs, mid * low, "q={} n={n} m={m}", p.pow(e as u32));
        }
    }

    #[test]
    fn group_laws_and_round_trip() {
        let g = UnitQuot::new(&fq(2, 1), 2, 3).unwrap();
        let all = g.all_classes();
        assert_eq!(all.len() as u64, g.order());
        let id = g.identity();
        for a in &all {
            assert_eq!(g.class_mul(a, &id), *a);
            // round trip through the series representation
            assert_eq!(g.project(&g.class_to_series(a)).unwrap(), *a);
            for b in &all {
                assert_eq!(g.class_mul(a, b), g.class_mul(b, a));
            }
        }
        // associativity on a sample
        for a in all.iter().take(4) {
            for b in all.iter().take(4) {
                for c in all.iter().take(4) {
                    assert_eq!(
                        g.class_mul(&g.class_mul(a, b), c),
                        g.class_mul(a, &g.class_mul(b, c))
                    );
                }
            }
        }
    }

    #[test]
    fn pn_th_powers_project_to_identity() {
        let field = fq(2, 1);
        let g = UnitQuot::new(&field, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..60 {
            // random exact unit series with a pole-free polynomial part
            let mut b = Laurent::random(&field, &mut rng, -2, 3, 12);
            if b.is_zero() {
                b = Laurent::constant(field.clone(), field.one());
            }
            let b4 = b.pow(4).unwrap();
            let cls = g.project(&b4).unwrap();
            assert_eq!(cls, g.identity());
        }
        // the uniformizer itself has order p^n in the quotient
        let t = Laurent::t_pow(field.clone(), 1);
        assert_eq!(g.project(&t.pow(4).unwrap()).unwrap(), g.identity());
        assert_ne!(g.project(&t.pow(2).unwrap()).unwrap(), g.identity());
    }

    #[test]
    fn exponent_vectors_reconstruct_cosets() {
        for &(p, e, n, m) in
            &[(2u64, 1usize, 2usize, 4i64), (3, 1, 1, 3), (2, 2, 1, 3), (2, 1, 1, 5)]
        {
            let field = fq(p, e);
            let g = UnitQuot::new(&field, n, m).unwrap();
            let gens = g.gen_series();
            for coset in 0..g.coset_count() {
                let mut acc = Laurent::constant(field.clone(), field.one());
                for (k, &ek) in g.exponents(coset).iter().enumerate() {
                    acc = acc.mul(&gens[k].pow(ek as u64).unwrap()).unwrap();
                }
                let cls = g.project(&acc).unwrap();
                assert_eq!(cls.coset, coset, "q={} n={n} m={m}", p.pow(e as u32));
                assert_eq!(cls.t_exp, 0);
            }
        }
    }

    #[test]
    fn higher_unit_images_are_subgroups() {
        let g = UnitQuot::new(&fq(2, 1), 2, 5).unwrap();
        // frozen: S = {1, 1 + t^4}, so U^4 maps onto the identity coset only
        assert_eq!(g.subgroup_order(), 2);
        let im4 = g.image_of_units_from(4).unwrap();
        assert_eq!(im4, vec![g.identity().coset]);
        let im2 = g.image_of_units_from(2).unwrap();
        // closure under multiplication
        for &a in &im2 {
            for &b in &im2 {
                let prod = g.class_mul(
                    &UnitClass { t_exp: 0, coset: a },
                    &UnitClass { t_exp: 0, coset: b },
                );
                assert!(im2.contains(&prod.coset));
            }
        }
        // the whole of U^1 maps onto all cosets
        assert_eq!(g.image_of_units_from(1).unwrap().len(), g.coset_count());
    }

    #[test]
    fn quotient_maps_are_multiplicative_surjections() {
        let field = fq(2, 1);
        let fine = UnitQuot::new(&field, 2, 5).unwrap();
        let coarse = UnitQuot::new(&field, 2, 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        let all = fine.all_classes();
        for a in &all {
            let pa = fine.project_to(&coarse, a).unwrap();
            seen.insert(pa.clone());
        }
        assert_eq!(seen.len() as u64, coarse.order());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        use rand::Rng;
        for _ in 0..100 {
            let a = &all[rng.gen_range(0..all.len())];
            let b = &all[rng.gen_range(0..all.len())];
            let lhs = fine.project_to(&coarse, &fine.class_mul(a, b)).unwrap();
            let rhs = coarse.class_mul(
                &fine.project_to(&coarse, a).unwrap(),
                &fine.project_to(&coarse, b).unwrap(),
            );
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rejects_oversized_enumerations_and_short_windows() {
        let field = fq(5, 1);
        assert!(matches!(
            UnitQuot::new(&field, 1, 9).unwrap_err(),
            Error::EnumerationBound(_)
        ));
        let g = UnitQuot::new(&fq(2, 1), 1, 4).unwrap();
        let short = Laurent::parse(&fq(2, 1), "1 + t + O(t^2)").unwrap();
        assert!(matches!(
            g.project(&short).unwrap_err(),
            Error::InsufficientPrecision { .. }
        ));
        // zero cannot be decomposed
        let zero = Laurent::zero(fq(2, 1), 8);
        assert_eq!(g.project(&zero).unwrap_err(), Error::DivisionByZero);
    }
}
