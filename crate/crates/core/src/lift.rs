//! Symbolic lifts of continuous maps: the strong extension of a parameterized
//! family through a cover system, and extensions of maps out of `ℕ^ℕ`
//! through a Polish presentation.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rayon::prelude::*;

use crate::covers::{CoverError, CoverSystem, PolishPresentation, Region, Space};
use crate::maps::{circle_distance, Fixed, SharedFamily, SharedMap};
use crate::rational::{integer, pow2_neg, Rational};
use crate::symbolic::{fmt_word, PrefixTransducer, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error("NoCell at resolution {k} (parameter {q}, point {s}): {detail}")]
    NoCell { k: usize, q: String, s: String, detail: String },
    #[error("InsufficientInput: resolution {k} needs {need_q} parameter and {need_s} point symbols, got {got_q} and {got_s}")]
    InsufficientInput { k: usize, need_q: usize, need_s: usize, got_q: usize, got_s: usize },
    #[error("NotAntichain: {0} is a prefix of {1}")]
    NotAntichain(String, String),
    #[error("map `{map}` does not act on the space of `{cover}`")]
    SpaceMismatch { map: String, cover: String },
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Moduli `(l_k, m_k)`: parameter and point prefix lengths that determine
/// resolution `k`.
#[derive(Clone)]
enum Moduli {
    Auto(Arc<AutoModuli>),
    Table(Arc<Vec<(usize, usize)>>),
}

struct AutoModuli {
    cs: CoverSystem,
    family: SharedFamily,
    cache: Mutex<Vec<(usize, usize)>>,
}

impl AutoModuli {
    /// Smallest nondecreasing `(l, m)` with
    /// `L·diam(V_s) + spread(l) < ε_{k-1}/4` for `|s| = m`.
    fn get(&self, k: usize) -> (usize, usize) {
        let mut cache = self.cache.lock().expect("moduli cache");
        while cache.len() < k {
            let level = cache.len() + 1;
            let (mut l, mut m) = cache.last().copied().unwrap_or((0, 0));
            let eps = self.cs.lebesgue_number(&vec![0; level - 1]) / integer(8);
            let lip = self.family.lipschitz();
            while &lip * self.cs.cell_diam_bound(m) >= eps {
                m += 1;
            }
            while self.family.parameter_spread(l) >= eps {
                l += 1;
            }
            cache.push((l, m));
        }
        if k == 0 {
            (0, 0)
        } else {
            cache[k - 1]
        }
    }
}

impl Moduli {
    fn get(&self, k: usize) -> (usize, usize) {
        match self {
            Moduli::Auto(a) => a.get(k),
            Moduli::Table(t) => match k {
                0 => (0, 0),
                k if k <= t.len() => t[k - 1],
                // Nothing is guaranteed past the table.
                k => {
                    let (l, m) = t.last().copied().unwrap_or((0, 0));
                    (l + k - t.len(), m + k - t.len())
                }
            },
        }
    }
}

/// The strong extension `t(q, s)` of a family `p ↦ G(p)`: a single
/// construction that lifts every `G(p)` to `F(p): Λ → Λ` with
/// `π ∘ F(p) = G(p) ∘ π`.
#[derive(Clone)]
pub struct StrongExtension {
    cs: CoverSystem,
    family: SharedFamily,
    moduli: Moduli,
}

impl fmt::Debug for StrongExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StrongExtension({} on {})", self.family.name(), self.cs.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftFailure {
    pub parameter: Word,
    pub point: Word,
    pub k: usize,
    pub detail: String,
}

impl fmt::Display for LiftFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} α={} k={}: {}", fmt_word(&self.parameter), fmt_word(&self.point), self.k, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftCertificate {
    pub map: String,
    pub space: String,
    pub max_k: usize,
    pub samples: usize,
    pub checks: usize,
    pub failures: Vec<LiftFailure>,
}

impl LiftCertificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl StrongExtension {
    pub fn new(cs: CoverSystem, family: SharedFamily) -> Result<Self, LiftError> {
        if family.space() != cs.space() {
            return Err(LiftError::SpaceMismatch { map: family.name(), cover: cs.name() });
        }
        let auto = AutoModuli { cs: cs.clone(), family: family.clone(), cache: Mutex::new(Vec::new()) };
        Ok(StrongExtension { cs, family, moduli: Moduli::Auto(Arc::new(auto)) })
    }

    /// Uses the given `(l_k, m_k)` for `k = 1..=table.len()`.
    pub fn with_moduli(cs: CoverSystem, family: SharedFamily, table: Vec<(usize, usize)>) -> Result<Self, LiftError> {
        let mut ext = Self::new(cs, family)?;
        ext.moduli = Moduli::Table(Arc::new(table));
        Ok(ext)
    }

    /// Lift of a single map `T`.
    pub fn of_map(cs: CoverSystem, map: SharedMap) -> Result<Self, LiftError> {
        Self::new(cs, Arc::new(Fixed(map)))
    }

    pub fn cover_system(&self) -> &CoverSystem {
        &self.cs
    }

    pub fn family(&self) -> &SharedFamily {
        &self.family
    }

    /// `(l_k, m_k)`.
    pub fn moduli(&self, k: usize) -> (usize, usize) {
        self.moduli.get(k)
    }

    /// A closed region containing `G(p)(cl V_s)` for every `p ⊒ q`.
    pub fn region(&self, q: &[u64], s: &[u64]) -> Result<Region, LiftError> {
        let cell = self.cs.v_cell(s)?;
        let closure = self.cs.space().closure(&cell).expect("cells are nonempty");
        Ok(self.family.image(q, &closure))
    }

    /// The longest `t(q, s)` that `q` and `s` determine, up to `limit`
    /// symbols, and the error that stopped it early, if any.
    pub fn t_partial(&self, q: &[u64], s: &[u64], limit: usize) -> (Word, Option<LiftError>) {
        let mut t = Word::new();
        for k in 1..=limit {
            let (l, m) = self.moduli(k);
            if l > q.len() || m > s.len() {
                break;
            }
            let located = self
                .region(&q[..l], &s[..m])
                .and_then(|e| self.cs.locate_ball(&e, &Rational::zero(), k, &t).map_err(LiftError::from));
            match located {
                Ok(next) => t = next,
                Err(LiftError::Cover(CoverError::NoCell { region, .. })) => {
                    let detail = format!("region {region} fits no child of [{}]", fmt_word(&t));
                    return (t, Some(LiftError::NoCell { k, q: fmt_word(q), s: fmt_word(s), detail }));
                }
                Err(e) => return (t, Some(e)),
            }
        }
        (t, None)
    }

    /// `t(q, s)` at exactly resolution `k`.
    pub fn t(&self, q: &[u64], s: &[u64], k: usize) -> Result<Word, LiftError> {
        let (need_q, need_s) = self.moduli(k);
        if need_q > q.len() || need_s > s.len() {
            return Err(LiftError::InsufficientInput { k, need_q, need_s, got_q: q.len(), got_s: s.len() });
        }
        match self.t_partial(q, s, k) {
            (t, None) => Ok(t),
            (_, Some(e)) => Err(e),
        }
    }

    /// `F(p)` as a transducer on `Λ`, for the parameter `p` followed by zeros.
    pub fn transducer(&self, p: &[u64]) -> PrefixTransducer {
        let space = self.cs.symbolic_space();
        let (ext, ext2, p) = (self.clone(), self.clone(), p.to_vec());
        PrefixTransducer::new(
            format!("F[{}]", self.family.name()),
            space.clone(),
            space,
            move |s| {
                let mut q = p.clone();
                let (l, _) = ext.moduli(s.len() + 1);
                if q.len() < l {
                    q.resize(l, 0);
                }
                ext.t_partial(&q, s, s.len() + 1).0
            },
            move |k| ext2.moduli(k).1,
        )
    }

    /// Checks, for every sample `(p, α)` and `k ≤ max_k`, that
    /// `G(p)(cl V_{α|m_k}) ⊆ V_{t}` with `t = t(p|l_k, α|m_k)`, that `t` is
    /// coherent across `k`, that `diam V_t < 2^{-k}`, and that the exact
    /// value of `G(p)` at a point of `cl V_{α|m_k}` lies in `cl V_t`.
    pub fn certify(&self, samples: &[(Word, Word)], max_k: usize) -> LiftCertificate {
        let space = self.cs.space();
        let results: Vec<(usize, Vec<LiftFailure>)> = samples
            .par_iter()
            .map(|(p, alpha)| {
                let mut checks = 0;
                let mut failures = Vec::new();
                let fail =
                    |k: usize, detail: String| LiftFailure { parameter: p.clone(), point: alpha.clone(), k, detail };
                let g = self.family.at(p);
                let (t_full, err) = self.t_partial(p, alpha, max_k);
                if t_full.len() < max_k {
                    let detail = match err {
                        Some(e) => e.to_string(),
                        None => format!("only {} symbols determined", t_full.len()),
                    };
                    failures.push(fail(t_full.len() + 1, detail));
                }
                for k in 1..=t_full.len() {
                    checks += 1;
                    let (l, m) = self.moduli(k);
                    let t = &t_full[..k];
                    let Ok(v_t) = self.cs.v_cell(t) else {
                        failures.push(fail(k, format!("[{}] is not a cell", fmt_word(t))));
                        continue;
                    };
                    let e = match self.region(&p[..l], &alpha[..m]) {
                        Ok(e) => e,
                        Err(e) => {
                            failures.push(fail(k, e.to_string()));
                            continue;
                        }
                    };
                    if !space.region_in_cell(&e, &v_t) {
                        failures.push(fail(k, format!("image {e} escapes V[{}]", fmt_word(t))));
                    }
                    if self.t_partial(&p[..l], &alpha[..m], k).0 != t {
                        failures.push(fail(k, "prefix outputs are not coherent".into()));
                    }
                    if space.cell_diam(&v_t) >= pow2_neg(k) {
                        failures.push(fail(k, format!("diam V[{}] ≥ 2^-{k}", fmt_word(t))));
                    }
                    if let Ok(Region::Interval { lo, hi }) = self.cs.project(alpha, m) {
                        let x = (&lo + &hi) / integer(2);
                        if let Some(y) = g.eval(&x) {
                            let target = space.closure(&v_t).expect("cells are nonempty");
                            let Region::Interval { lo: a, hi: b } = &target else { unreachable!() };
                            let inside = if space == Space::Circle {
                                circle_distance(&y, &((a + b) / integer(2))) <= (b - a) / integer(2)
                            } else {
                                *a <= y && y <= *b
                            };
                            if !inside {
                                failures.push(fail(k, format!("G(p)({x}) = {y} lies outside {target}")));
                            }
                        }
                    }
                }
                (checks, failures)
            })
            .collect();
        LiftCertificate {
            map: self.family.name(),
            space: self.cs.name(),
            max_k,
            samples: samples.len(),
            checks: results.iter().map(|r| r.0).sum(),
            failures: results.into_iter().flat_map(|r| r.1).collect(),
        }
    }
}

/// The lift `S: Λ → Λ` of a self-map `T` together with its construction.
pub fn lift_self_map(cs: CoverSystem, map: SharedMap) -> Result<(StrongExtension, PrefixTransducer), LiftError> {
    let ext = StrongExtension::of_map(cs, map)?;
    let s = ext.transducer(&[]);
    Ok((ext, s))
}

/// A continuous map `φ: ℕ^ℕ → X` given on cylinders.
pub trait BaireMap: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn target(&self) -> PolishPresentation;
    /// A closed region containing `φ([s])`, shrinking to a point along `α`.
    fn image(&self, s: &[u64]) -> Region;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaireBuiltin {
    /// `ℕ^ℕ → ℕ^ℕ`.
    Identity,
    /// `α ↦ Σ (α_i mod 2) 2^{-(i+1)} ∈ [0, 1]`.
    ParityBinary,
    /// The constant map to a point of `[0, 1]`.
    Constant(Rational),
}

impl BaireMap for BaireBuiltin {
    fn name(&self) -> String {
        match self {
            BaireBuiltin::Identity => "id".into(),
            BaireBuiltin::ParityBinary => "parity-binary".into(),
            BaireBuiltin::Constant(x) => format!("const({x})"),
        }
    }

    fn target(&self) -> PolishPresentation {
        match self {
            BaireBuiltin::Identity => PolishPresentation::Baire,
            _ => PolishPresentation::Interval,
        }
    }

    fn image(&self, s: &[u64]) -> Region {
        match self {
            BaireBuiltin::Identity => Region::Cylinder(s.to_vec()),
            BaireBuiltin::ParityBinary => {
                let x: Rational = s.iter().enumerate().filter(|(_, &a)| a % 2 == 1).map(|(i, _)| pow2_neg(i + 1)).sum();
                let hi = &x + pow2_neg(s.len());
                Region::interval(x, hi)
            }
            BaireBuiltin::Constant(x) => Region::point(x.clone()),
        }
    }
}

/// `S: ℕ^ℕ → ℕ^ℕ` with `π ∘ S = φ`: level `k` is decided at the shortest
/// prefix of `α` whose image fits a child of the cell chosen at level `k-1`,
/// taking the least such child.
#[derive(Debug, Clone)]
pub struct BaireExtension {
    phi: Arc<dyn BaireMap>,
}

impl BaireExtension {
    pub fn new(phi: Arc<dyn BaireMap>) -> Self {
        BaireExtension { phi }
    }

    pub fn target(&self) -> PolishPresentation {
        self.phi.target()
    }

    /// `(n_k, t_k)` for the levels `α` decides, at most `max_k`.
    pub fn levels(&self, alpha: &[u64], max_k: usize) -> Vec<(usize, u64)> {
        let ps = self.phi.target();
        let mut t = Word::new();
        let mut v = ps.cell(&t);
        let mut n = 0;
        let mut out = Vec::new();
        while out.len() < max_k {
            loop {
                if n > alpha.len() {
                    return out;
                }
                let region = self.phi.image(&alpha[..n]);
                if let Some(j) = ps.child_containing(&t, &v, &region) {
                    t.push(j);
                    v = ps.cell(&t);
                    out.push((n, j));
                    break;
                }
                n += 1;
            }
        }
        out
    }

    /// The first `max_k` symbols of `S(α)` that `α` determines.
    pub fn step(&self, alpha: &[u64], max_k: usize) -> Word {
        self.levels(alpha, max_k).into_iter().map(|(_, j)| j).collect()
    }

    /// `S_k`: the minimal prefixes (symbols `< bound`, length `≤ max_len`)
    /// deciding level `k`, checked to be an antichain.
    pub fn antichain(&self, k: usize, max_len: usize, bound: u64) -> Result<Vec<Word>, LiftError> {
        let mut out = Vec::new();
        let mut stack = vec![Word::new()];
        while let Some(s) = stack.pop() {
            if self.levels(&s, k).len() >= k {
                out.push(s);
            } else if s.len() < max_len {
                for a in (0..bound).rev() {
                    let mut c = s.clone();
                    c.push(a);
                    stack.push(c);
                }
            }
        }
        check_antichain(&out)?;
        Ok(out)
    }

    /// Checks that every sample decides `max_k` levels, that
    /// `φ([α|n_k]) ⊆ V_{t|k}`, and that `diam V_{t|k} < 2^{-k}`.
    pub fn certify(&self, alphas: &[Word], max_k: usize) -> LiftCertificate {
        let ps = self.phi.target();
        let space = ps.space();
        let results: Vec<(usize, Vec<LiftFailure>)> = alphas
            .par_iter()
            .map(|alpha| {
                let mut failures = Vec::new();
                let fail =
                    |k: usize, detail: String| LiftFailure { parameter: Word::new(), point: alpha.clone(), k, detail };
                let levels = self.levels(alpha, max_k);
                if levels.len() < max_k {
                    failures.push(fail(levels.len() + 1, "undetermined on this prefix".into()));
                }
                let t: Word = levels.iter().map(|&(_, j)| j).collect();
                for (i, &(n, _)) in levels.iter().enumerate() {
                    let k = i + 1;
                    let cell = ps.cell(&t[..k]);
                    let region = self.phi.image(&alpha[..n]);
                    if !space.region_in_cell(&region, &cell) {
                        failures.push(fail(
                            k,
                            format!("φ([{}]) = {region} escapes V[{}]", fmt_word(&alpha[..n]), fmt_word(&t[..k])),
                        ));
                    }
                    if space.cell_diam(&cell) >= pow2_neg(k) {
                        failures.push(fail(k, format!("diam V[{}] ≥ 2^-{k}", fmt_word(&t[..k]))));
                    }
                }
                (levels.len(), failures)
            })
            .collect();
        LiftCertificate {
            map: self.phi.name(),
            space: format!("{:?}", ps),
            max_k,
            samples: alphas.len(),
            checks: results.iter().map(|r| r.0).sum(),
            failures: results.into_iter().flat_map(|r| r.1).collect(),
        }
    }
}

/// Fails with the first pair in which one word is a prefix of another.
pub fn check_antichain(family: &[Word]) -> Result<(), LiftError> {
    let mut sorted: Vec<&Word> = family.iter().collect();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[1].starts_with(pair[0]) {
            return Err(LiftError::NotAntichain(fmt_word(pair[0]), fmt_word(pair[1])));
        }
    }
    Ok(())
}

/// The minimal elements of `family`, which form an antichain.
pub fn prune_to_antichain(family: &[Word]) -> Vec<Word> {
    let mut sorted: Vec<Word> = family.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out: Vec<Word> = Vec::new();
    for w in sorted {
        if !out.last().is_some_and(|p| w.starts_with(p)) {
            out.push(w);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Builtin, RotationFamily};
    use crate::rational::ratio;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples(cs: &CoverSystem, n: usize, len: usize, seed: u64) -> Vec<(Word, Word)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = cs.symbolic_space();
        let cantor = crate::symbolic::SymbolicSpace::cantor();
        (0..n).map(|_| (cantor.random_word(&mut rng, len, 2), lambda.random_word(&mut rng, len, 2))).collect()
    }

    #[test]
    fn self_lifts_certify() {
        for (cs, map) in [
            (CoverSystem::interval(), Builtin::Square),
            (CoverSystem::interval(), Builtin::Tent),
            (CoverSystem::circle(), Builtin::Rotation(ratio(1, 3))),
            (CoverSystem::cantor(), Builtin::Shift),
            (CoverSystem::cantor(), Builtin::Odometer),
        ] {
            let ext = StrongExtension::of_map(cs.clone(), map.shared()).unwrap();
            let cert = ext.certify(&samples(&cs, 20, 40, 7), 6);
            assert!(cert.passed(), "{:?}", cert.failures.first());
        }
    }

    #[test]
    fn identity_lift_is_identity_on_cantor() {
        let (_, s) = lift_self_map(CoverSystem::cantor(), Builtin::Identity(Space::Cantor).shared()).unwrap();
        let w: Word = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let k = s.resolution_for(w.len(), 10);
        assert!(k >= 1);
        assert_eq!(s.evaluate(&w, k).unwrap(), w[..k].to_vec());
    }

    #[test]
    fn rotation_family_certifies() {
        let cs = CoverSystem::circle();
        let ext = StrongExtension::new(cs.clone(), Arc::new(RotationFamily)).unwrap();
        let cert = ext.certify(&samples(&cs, 20, 48, 3), 5);
        assert!(cert.passed(), "{:?}", cert.failures.first());
    }

    #[test]
    fn coarse_moduli_give_no_cell() {
        let cs = CoverSystem::interval();
        let ext = StrongExtension::of_map(cs.clone(), Builtin::Square.shared()).unwrap();
        let table: Vec<(usize, usize)> = (1..=6).map(|k| (0, ext.moduli(k).1 / 2)).collect();
        let coarse =
            StrongExtension::with_moduli(cs.clone(), Arc::new(Fixed(Builtin::Square.shared())), table).unwrap();
        let cert = coarse.certify(&samples(&cs, 30, 40, 11), 6);
        assert!(!cert.passed());
        assert!(cert.failures.iter().any(|f| f.detail.contains("NoCell")));
    }

    #[test]
    fn short_input_is_reported() {
        let ext = StrongExtension::of_map(CoverSystem::interval(), Builtin::Square.shared()).unwrap();
        assert!(matches!(ext.t(&[], &[0, 1], 3), Err(LiftError::InsufficientInput { .. })));
        assert!(matches!(
            StrongExtension::of_map(CoverSystem::cantor(), Builtin::Square.shared()),
            Err(LiftError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn baire_identity_extension_is_identity() {
        let ext = BaireExtension::new(Arc::new(BaireBuiltin::Identity));
        let alpha = vec![4, 0, 17, 2, 2];
        assert_eq!(ext.step(&alpha, 10), alpha);
        let s2 = ext.antichain(2, 3, 3).unwrap();
        assert_eq!(s2.len(), 9);
        assert!(s2.iter().all(|w| w.len() == 2));
    }

    #[test]
    fn baire_interval_extensions_certify() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alphas: Vec<Word> =
            (0..30).map(|_| crate::symbolic::SymbolicSpace::Baire.random_word(&mut rng, 40, 9)).collect();
        for phi in [BaireBuiltin::ParityBinary, BaireBuiltin::Constant(ratio(1, 3))] {
            let ext = BaireExtension::new(Arc::new(phi));
            let cert = ext.certify(&alphas, 5);
            assert!(cert.passed(), "{:?}", cert.failures.first());
        }
        let constant = BaireExtension::new(Arc::new(BaireBuiltin::Constant(integer(0))));
        assert_eq!(constant.antichain(3, 4, 3).unwrap(), vec![Word::new()]);
    }

    #[test]
    fn antichain_helpers() {
        let fam = vec![vec![0, 1], vec![0], vec![1, 2], vec![1, 2, 0]];
        assert_eq!(check_antichain(&fam), Err(LiftError::NotAntichain("0".into(), "01".into())));
        let pruned = prune_to_antichain(&fam);
        assert_eq!(pruned, vec![vec![0], vec![1, 2]]);
        assert!(check_antichain(&pruned).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lift_is_monotone(s in proptest::collection::vec(0u64..5, 8..30), extra in proptest::collection::vec(0u64..5, 0..10)) {
            let mut s = s;
            s[0] %= 9;
            let ext = StrongExtension::of_map(CoverSystem::interval(), Builtin::Tent.shared()).unwrap();
            let f = ext.transducer(&[]);
            let a = f.step(&s);
            let mut longer = s.clone();
            longer.extend(extra);
            prop_assert!(f.step(&longer).starts_with(&a));
        }

        #[test]
        fn baire_steps_are_monotone(a in proptest::collection::vec(0u64..6, 0..20), extra in proptest::collection::vec(0u64..6, 0..8)) {
            let ext = BaireExtension::new(Arc::new(BaireBuiltin::ParityBinary));
            let mut b = a.clone();
            b.extend(extra);
            prop_assert!(ext.step(&b, 50).starts_with(&ext.step(&a, 50)));
        }
    }
}
