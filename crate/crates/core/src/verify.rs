//! Self-checking suites over random seeded inputs, shared by the CLI
//! `verify` subcommands and the acceptance tests.  Each suite runs a batch of
//! independent checks and reports every failure as a human-readable line;
//! determinism comes from the caller-supplied seed.

use crate::algebra::{CoeffRing, FqField, PadicLiftRing};
use crate::asw::AswCtx;
use crate::localfield::{order_identity, UnitQuot};
use crate::series::{Laurent, PREC_EXACT};
use crate::witt::WittRing;
use crate::{KSeries, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Outcome of one verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: impl Into<String>) -> SuiteReport {
        SuiteReport { name: name.into(), cases: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Ring laws in `W_n(F_q)` on random vectors, plus the structural
/// identities `F V = p` and multiplicativity of the Teichmueller lift.
pub fn witt_suite(p: u64, e: usize, n: usize, iters: usize, seed: u64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let w = WittRing::new(fq.clone(), p, n)?;
    // Torsion-free lift used to test the ghost homomorphism where the ghost
    // map is injective enough to carry information (mod p^{n+2}).
    let zq = PadicLiftRing::new(&fq, n as u32 + 2)?;
    let wz = WittRing::new(zq.clone(), p, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new(format!("witt q={} n={}", fq.q(), n));
    for _ in 0..iters {
        let a = w.rand_elem(&mut rng);
        let b = w.rand_elem(&mut rng);
        let c = w.rand_elem(&mut rng);

        let assoc = w.add(&w.add(&a, &b), &c) == w.add(&a, &w.add(&b, &c));
        rep.check(assoc, || format!("additive associativity at {}", w.format_witt(&a)));
        let comm = w.add(&a, &b) == w.add(&b, &a);
        rep.check(comm, || format!("additive commutativity at {}", w.format_witt(&a)));
        let neg = CoeffRing::is_zero(&w, &w.add(&a, &w.neg(&a)));
        rep.check(neg, || format!("additive inverse at {}", w.format_witt(&a)));
        let massoc = w.mul(&w.mul(&a, &b), &c) == w.mul(&a, &w.mul(&b, &c));
        rep.check(massoc, || format!("multiplicative associativity at {}", w.format_witt(&a)));
        let mcomm = w.mul(&a, &b) == w.mul(&b, &a);
        rep.check(mcomm, || format!("multiplicative commutativity at {}", w.format_witt(&a)));
        let dist = w.mul(&a, &w.add(&b, &c))
            == w.add(&w.mul(&a, &b), &w.mul(&a, &c));
        rep.check(dist, || format!("distributivity at {}", w.format_witt(&a)));
        let unit = w.mul(&a, &w.one()) == a;
        rep.check(unit, || format!("multiplicative identity at {}", w.format_witt(&a)));

        if w.is_unit(&a) {
            let inv = w.inv(&a).expect("unit has an inverse");
            rep.check(
                w.mul(&a, &inv) == w.one(),
                || format!("inverse law at {}", w.format_witt(&a)),
            );
        }

        // F V = p, computed through the universal Frobenius on length n + 1
        if n >= 1 {
            let tail: Vec<_> = a.components().iter().take(n).cloned().collect();
            let longer: Vec<_> =
                std::iter::once(fq.zero()).chain(tail.iter().cloned()).collect();
            if longer.len() == n + 1 {
                let fv = w.frobenius_universal(&longer)?;
                let pa = w.int_mul(p as i64, &w.from_comps(tail.clone())?);
                rep.check(fv == pa, || format!("F V = p at {}", w.format_witt(&a)));
            }
        }

        // Teichmueller multiplicativity and F([x]) = [x^p]
        let x = fq.rand_elem(&mut rng);
        let y = fq.rand_elem(&mut rng);
        let t = w.mul(&w.teichmuller(&x), &w.teichmuller(&y))
            == w.teichmuller(&fq.mul(&x, &y));
        rep.check(t, || format!("teichmueller at {}", fq.format_elem(&x)));
        let fx = w.frobenius(&w.teichmuller(&x))?
            == w.teichmuller(&fq.frob_p(&x).expect("finite field"));
        rep.check(fx, || format!("F([x]) = [x^p] at {}", fq.format_elem(&x)));

        // ghost is a ring homomorphism, checked over the torsion-free lift
        let u = wz.rand_elem(&mut rng);
        let v = wz.rand_elem(&mut rng);
        let gu = wz.ghost(&u);
        let gv = wz.ghost(&v);
        let gsum = wz.ghost(&wz.add(&u, &v));
        let gprod = wz.ghost(&wz.mul(&u, &v));
        let ghost_ok = (0..n).all(|i| {
            gsum[i] == zq.add(&gu[i], &gv[i]) && gprod[i] == zq.mul(&gu[i], &gv[i])
        });
        rep.check(ghost_ok, || format!("ghost homomorphism at {}", w.format_witt(&a)));
    }
    Ok(rep)
}

/// Exhaustive agreement of the componentwise Frobenius with the universal
/// one on `W_2(F_q)`: the universal `F : W_3 -> W_2` is computed from the
/// ghost identities over `Z` and must reduce, in characteristic `p`, to the
/// `p`-th power map applied componentwise after restriction.
pub fn frobenius_suite(p: u64, e: usize) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let w = WittRing::new(fq.clone(), p, 2)?;
    let mut rep = SuiteReport::new(format!("frobenius q={}", fq.q()));
    let elems = fq.all_elems();
    for a0 in &elems {
        for a1 in &elems {
            for a2 in &elems {
                let longer = vec![a0.clone(), a1.clone(), a2.clone()];
                let univ = w.frobenius_universal(&longer)?;
                let comp = w.frobenius(&w.from_comps(vec![a0.clone(), a1.clone()])?)?;
                rep.check(univ == comp, || {
                    format!(
                        "universal vs componentwise at ({}; {}; {})",
                        fq.format_elem(a0),
                        fq.format_elem(a1),
                        fq.format_elem(a2)
                    )
                });
            }
        }
    }
    Ok(rep)
}

fn nonzero_series(ctx: &AswCtx, rng: &mut ChaCha8Rng, vmin: i64, vmax: i64) -> KSeries {
    let mut b = ctx.random_class(rng, vmin, vmax).into_components().remove(0);
    if b.is_zero() {
        b = Laurent::t_pow(ctx.fq().clone(), 1);
    }
    b
}

/// Well-definedness, bilinearity, and lift-precision independence of the
/// symbol `[a, b)`.
pub fn pairing_suite(p: u64, e: usize, n: usize, iters: usize, seed: u64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let ctx = AswCtx::new(&fq, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new(format!("pairing q={} n={}", fq.q(), n));
    let pn = ctx.pn();
    for _ in 0..iters {
        let a1 = ctx.random_class(&mut rng, -2, 1);
        let a2 = ctx.random_class(&mut rng, -2, 1);
        let b1 = nonzero_series(&ctx, &mut rng, -1, 2);
        let b2 = nonzero_series(&ctx, &mut rng, -1, 2);

        let add_ok = ctx.sw_pair(&ctx.witt_k().add(&a1, &a2), &b1)?
            == (ctx.sw_pair(&a1, &b1)? + ctx.sw_pair(&a2, &b1)?) % pn;
        rep.check(add_ok, || format!("additivity at {}", ctx.witt_k().format_witt(&a1)));

        let mul_ok = ctx.sw_pair(&a1, &b1.mul(&b2)?)?
            == (ctx.sw_pair(&a1, &b1)? + ctx.sw_pair(&a1, &b2)?) % pn;
        rep.check(mul_ok, || format!("multiplicativity at {}", b1.format()));

        let r = ctx.random_class(&mut rng, -1, 1);
        let shifted = ctx.witt_k().add(&a1, &ctx.one_minus_f(&r)?);
        rep.check(
            ctx.sw_pair(&shifted, &b1)? == ctx.sw_pair(&a1, &b1)?,
            || format!("well-definedness at {}", ctx.witt_k().format_witt(&a1)),
        );

        let v = ctx.sw_pair(&a1, &b1)?;
        rep.check(
            ctx.sw_pair_at(&a1, &b1, 2 * n as u32 + 2)? == v,
            || format!("precision independence at {}", ctx.witt_k().format_witt(&a1)),
        );

        rep.check(
            ctx.sw_pair(&ctx.one_minus_f(&a2)?, &b1)? == 0,
            || format!("coboundary vanishing at {}", ctx.witt_k().format_witt(&a2)),
        );
        rep.check(
            ctx.sw_pair(&a1, &b1.pow(pn)?)? == 0,
            || format!("p^n-th power vanishing at {}", b1.format()),
        );
    }
    Ok(rep)
}

/// For `n = 1` the ghost-residue pipeline must collapse to the classical
/// trace-of-residue formula, computed here directly over `F_q`.
pub fn schmid_suite(p: u64, e: usize, iters: usize, seed: u64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let ctx = AswCtx::new(&fq, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new(format!("schmid q={}", fq.q()));
    for _ in 0..iters {
        let a = ctx.random_class(&mut rng, -3, 2);
        let b = nonzero_series(&ctx, &mut rng, -2, 3);
        let direct = fq.trace(&a.components()[0].mul(&b.dlog()?)?.residue()?);
        rep.check(
            ctx.sw_pair(&a, &b)? == direct,
            || format!("residue formula at {} vs {}", a.components()[0].format(), b.format()),
        );
    }
    Ok(rep)
}

/// Compatibility of the symbol along the Witt tower:
/// `[V a', b) = p . [a', b)` one level up, and restriction of the first
/// component recovers the value mod `p^(n-1)`.
pub fn tower_suite(p: u64, e: usize, n: usize, iters: usize, seed: u64) -> Result<SuiteReport> {
    if n < 2 {
        return Err(crate::Error::InvalidParameter("tower checks need n >= 2".into()));
    }
    let fq = FqField::new(p, e)?;
    let big = AswCtx::new(&fq, n)?;
    let small = AswCtx::new(&fq, n - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new(format!("tower q={} n={}", fq.q(), n));
    let pn = big.pn();
    for _ in 0..iters {
        let a = small.random_class(&mut rng, -3, 2);
        let b = nonzero_series(&big, &mut rng, -2, 2);

        let v_embedded = big.witt_k().v_embed(a.components())?;
        let lhs = big.sw_pair(&v_embedded, &b)?;
        let rhs = (p * small.sw_pair(&a, &b)?) % pn;
        rep.check(lhs == rhs, || {
            format!("verschiebung at {}", small.witt_k().format_witt(&a))
        });

        let up = big.random_class(&mut rng, -3, 2);
        let restricted = small
            .witt_k()
            .from_comps(up.components()[..n - 1].to_vec())?;
        let whole = big.sw_pair(&up, &b)?;
        let part = small.sw_pair(&restricted, &b)?;
        rep.check(whole % small.pn() == part, || {
            format!("restriction at {}", big.witt_k().format_witt(&up))
        });
    }
    Ok(rep)
}

/// Commutativity of the unit-quotient tower: projecting `b` straight into
/// `G_(n,m)` agrees with projecting into the finer `G_(n,m+1)` first and then
/// following the natural surjection down.
pub fn projection_suite(
    p: u64,
    e: usize,
    n: usize,
    m: i64,
    iters: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let fine = UnitQuot::new(&fq, n, m + 1)?;
    let coarse = UnitQuot::new(&fq, n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new(format!("projection q={} n={} m={}", fq.q(), n, m));
    let window = (m + 2) as usize + 4;
    for _ in 0..iters {
        // Random exact nonzero series: t^v . c0 . (1 + higher terms).
        let v = (rng.next_u64() % 7) as i64 - 3;
        let mut coeffs = vec![fq.zero(); window];
        coeffs[0] = loop {
            let c = fq.rand_elem(&mut rng);
            if !fq.is_zero(&c) {
                break c;
            }
        };
        for c in coeffs.iter_mut().skip(1) {
            *c = fq.rand_elem(&mut rng);
        }
        let b = Laurent::from_coeffs(fq.clone(), v, coeffs, PREC_EXACT);
        let direct = coarse.project(&b)?;
        let via_fine = fine.project_to(&coarse, &fine.project(&b)?)?;
        rep.check(direct == via_fine, || {
            format!("projection tower at {}", b.format())
        });
    }
    Ok(rep)
}

/// The unit-quotient order identity
/// `|G_(n,m)| = |G_(n-1,ceil(m/p))| . |G_(1,m)|` for `2 <= n`, `m <= m_max`.
pub fn orders_suite(p: u64, e: usize, n: usize, m_max: i64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let mut rep = SuiteReport::new(format!("orders q={} n={}", fq.q(), n));
    for m in 0..=m_max {
        let (lhs, mid, low) = order_identity(&fq, n, m)?;
        rep.check(lhs == mid * low, || format!("order identity at m={m}: {lhs} != {mid}*{low}"));
    }
    Ok(rep)
}

/// Orthogonality, perfectness, and annihilator identification for
/// `fil_m H^1 x G_(n,m)`, folded into a suite report.
pub fn orthogonality_suite(p: u64, e: usize, n: usize, m: u64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let ctx = AswCtx::new(&fq, n)?;
    let r = ctx.orthogonality_report(m)?;
    let mut rep = SuiteReport::new(format!("orthogonality q={} n={} m={}", fq.q(), n, m));
    rep.check(r.counts_match, || {
        format!("|fil_m H^1| = {} but |G| = {}", r.class_count, r.group_order)
    });
    rep.check(r.rows_distinct, || "two classes pair identically".into());
    rep.check(r.cols_distinct, || "two unit classes pair identically".into());
    for a in &r.annihilators {
        rep.check(a.matches, || {
            format!("annihilator of fil_{} is not the image of U^{}", a.m_prime, a.m_prime)
        });
    }
    Ok(rep)
}

/// Conductor agreement (filtration side vs duality side) over all classes of
/// bounded pole depth, folded into a suite report.
pub fn filagree_suite(p: u64, e: usize, n: usize, max_pole: u64) -> Result<SuiteReport> {
    let fq = FqField::new(p, e)?;
    let ctx = AswCtx::new(&fq, n)?;
    let r = ctx.filagree_report(max_pole)?;
    let mut rep = SuiteReport::new(format!("filagree q={} n={} poles<={}", fq.q(), n, max_pole));
    rep.cases = r.cases;
    for d in &r.disagreements {
        rep.failures.push(format!(
            "conductors disagree at {}: fil={} dual={} (fil^log={})",
            d.rep, d.fil, d.dual, d.fil_log
        ));
    }
    if !r.inclusions_ok {
        rep.failures.push("filtration sandwich fil^log_(m-1) <= fil_m <= fil^log_m failed".into());
    }
    Ok(rep)
}
