//! Compact sets and compact relations at finite resolution, the maps they
//! induce, and generalized factors `u ↦ π(u) ⊆ X`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::common::{family_lift, LiftedMember, MapFamily};
use crate::covers::{CoverSystem, Region};
use crate::lift::LiftError;
use crate::maps::PointMap;
use crate::rational::pow2_neg;
use crate::symbolic::{fmt_word, PrefixTransducer, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HyperError {
    #[error("InsufficientResolution: level {have} cannot resolve the image at level {want} (needs {need})")]
    InsufficientResolution { have: usize, want: usize, need: usize },
    #[error("the compact set is empty")]
    EmptySet,
    #[error("UnknownMember: {0}")]
    UnknownMember(usize),
    #[error("member {0} has an empty section")]
    MissingMember(usize),
    #[error("ResolutionMismatch: {0} is not in the domain of the outer table")]
    ResolutionMismatch(String),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

/// A nonempty union of level-`k` cells `cl V_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactSetApprox {
    pub level: usize,
    pub cells: BTreeSet<Word>,
}

impl CompactSetApprox {
    pub fn new(level: usize, cells: BTreeSet<Word>) -> Result<Self, HyperError> {
        if cells.is_empty() {
            return Err(HyperError::EmptySet);
        }
        assert!(cells.iter().all(|c| c.len() == level), "cells must share one level");
        Ok(CompactSetApprox { level, cells })
    }

    pub fn regions(&self, cs: &CoverSystem) -> Vec<Region> {
        self.cells.iter().map(|c| cs.project(c, c.len()).expect("valid cells")).collect()
    }
}

/// All level-`k` words `t` whose cell `V_t` meets `region`.
pub fn cells_meeting(cs: &CoverSystem, region: &Region, k: usize) -> BTreeSet<Word> {
    let space = cs.space();
    let mut out = BTreeSet::new();
    let mut stack = vec![(Word::new(), space.whole_cell())];
    while let Some((t, v)) = stack.pop() {
        if t.len() == k {
            out.insert(t);
            continue;
        }
        for (j, _, child) in cs.children(&t, &v) {
            if space.region_meets_cell(region, &child) {
                let mut u = t.clone();
                u.push(j);
                stack.push((u, child));
            }
        }
    }
    out
}

/// Level-`k` cells covering `T(M)`.
pub fn induced_hyper_map(
    cs: &CoverSystem,
    map: &dyn PointMap,
    m: &CompactSetApprox,
    k: usize,
) -> Result<CompactSetApprox, HyperError> {
    let lip = map.lipschitz();
    let target = cs.cell_diam_bound(k);
    let mut need = 0;
    while &lip * cs.cell_diam_bound(need) > target {
        need += 1;
        if need > k + 64 {
            break;
        }
    }
    if m.level < need {
        return Err(HyperError::InsufficientResolution { have: m.level, want: k, need });
    }
    let images: Vec<BTreeSet<Word>> = m.regions(cs).par_iter().map(|r| cells_meeting(cs, &map.image(r), k)).collect();
    CompactSetApprox::new(k, images.into_iter().flatten().collect())
}

/// Drops every word that extends another word of the set.
pub fn normalize(cylinders: impl IntoIterator<Item = Word>) -> BTreeSet<Word> {
    let sorted: BTreeSet<Word> = cylinders.into_iter().collect();
    let mut out: BTreeSet<Word> = BTreeSet::new();
    let mut last: Option<Word> = None;
    for w in sorted {
        if last.as_ref().is_some_and(|p| w.starts_with(p)) {
            continue;
        }
        last = Some(w.clone());
        out.insert(w);
    }
    out
}

/// `[S(c)]`: the cylinder of everything the transducer emits on `c`.
pub fn cylinder_image(f: &PrefixTransducer, c: &[u64]) -> Word {
    f.step(c)
}

/// A compact subset of `N × Λ` given by finitely many pairs
/// `(member, cylinder)`, with every member present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactRelation {
    members: usize,
    pairs: BTreeMap<usize, BTreeSet<Word>>,
}

impl CompactRelation {
    pub fn new(members: usize, pairs: impl IntoIterator<Item = (usize, Word)>) -> Result<Self, HyperError> {
        let mut map: BTreeMap<usize, Vec<Word>> = BTreeMap::new();
        for (s, c) in pairs {
            if s >= members {
                return Err(HyperError::UnknownMember(s));
            }
            map.entry(s).or_default().push(c);
        }
        let pairs: BTreeMap<usize, BTreeSet<Word>> = (0..members)
            .map(|s| map.remove(&s).map(|cs| (s, normalize(cs))).ok_or(HyperError::MissingMember(s)))
            .collect::<Result<_, _>>()?;
        Ok(CompactRelation { members, pairs })
    }

    /// `N × {[c]}`.
    pub fn product(members: usize, c: &[u64]) -> Self {
        CompactRelation::new(members, (0..members).map(|s| (s, c.to_vec()))).expect("full projection")
    }

    pub fn members(&self) -> usize {
        self.members
    }

    /// `A_S`.
    pub fn cross_section(&self, s: usize) -> Result<&BTreeSet<Word>, HyperError> {
        self.pairs.get(&s).ok_or(HyperError::UnknownMember(s))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, &Word)> {
        self.pairs.iter().flat_map(|(s, cs)| cs.iter().map(move |c| (*s, c)))
    }

    /// `(S, c)` pairs as `S:c` joined by spaces.
    pub fn to_text(&self) -> String {
        self.pairs().map(|(s, c)| format!("{s}:{}", fmt_word(c))).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for CompactRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `U_N(A) = {(S, S(x)) : (S, x) ∈ A}`.
pub fn hyper_universal_step(n: &[PrefixTransducer], a: &CompactRelation) -> Result<CompactRelation, HyperError> {
    if n.len() != a.members() {
        return Err(HyperError::UnknownMember(n.len().max(a.members()) - 1));
    }
    let pairs: Vec<(usize, Word)> =
        a.pairs().collect::<Vec<_>>().par_iter().map(|(s, c)| (*s, cylinder_image(&n[*s], c))).collect();
    CompactRelation::new(a.members(), pairs)
}

/// `S(A_S)` computed directly from the section.
pub fn section_image(f: &PrefixTransducer, section: &BTreeSet<Word>) -> BTreeSet<Word> {
    normalize(section.iter().map(|c| cylinder_image(f, c)))
}

pub type GenTable<D, C> = BTreeMap<D, BTreeSet<C>>;

/// `γ(z) = ⋃ {π(y) : y ∈ π′(z)}`.
pub fn compose_generalized<X, Y, Z>(
    pi: &GenTable<Y, X>,
    pi_prime: &GenTable<Z, Y>,
) -> Result<GenTable<Z, X>, HyperError>
where
    X: Ord + Clone,
    Y: Ord + Clone + fmt::Debug,
    Z: Ord + Clone,
{
    pi_prime
        .iter()
        .map(|(z, ys)| {
            let mut out = BTreeSet::new();
            for y in ys {
                let img = pi.get(y).ok_or_else(|| HyperError::ResolutionMismatch(format!("{y:?}")))?;
                out.extend(img.iter().cloned());
            }
            Ok((z.clone(), out))
        })
        .collect()
}

/// Checks `π(S(u)) = T(π(u))` for every `u` and that every `x` has some `u`
/// with `π(u) = {x}`.
pub fn check_generalized_factor<U, X>(pi: &GenTable<U, X>, s: &BTreeMap<U, U>, t: &BTreeMap<X, X>) -> Result<(), String>
where
    U: Ord + Clone + fmt::Debug,
    X: Ord + Clone + fmt::Debug,
{
    for (u, img) in pi {
        let su = s.get(u).ok_or_else(|| format!("S({u:?}) undefined"))?;
        let left = pi.get(su).ok_or_else(|| format!("π({su:?}) undefined"))?;
        let right: BTreeSet<X> = img
            .iter()
            .map(|x| t.get(x).cloned().ok_or_else(|| format!("T({x:?}) undefined")))
            .collect::<Result<_, _>>()?;
        if *left != right {
            return Err(format!("π(S({u:?})) = {left:?} but T(π({u:?})) = {right:?}"));
        }
    }
    for x in t.keys() {
        if !pi.values().any(|img| img.len() == 1 && img.contains(x)) {
            return Err(format!("{{{x:?}}} is not attained"));
        }
    }
    Ok(())
}

/// `U` on tuples of compact relations, one per piece; member `(i, j)` is a
/// generalized factor through `A ↦ ⋃ {cl V_c : c ∈ (A_i)_j}`.
#[derive(Debug, Clone)]
pub struct GeneralizedExtension {
    pub pieces: Vec<(CoverSystem, Vec<LiftedMember>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedCertificate {
    pub relations: usize,
    pub singletons: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl GeneralizedCertificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn common_generalized_extension(pieces: Vec<(CoverSystem, MapFamily)>) -> Result<GeneralizedExtension, HyperError> {
    let pieces = pieces
        .into_iter()
        .map(|(cs, fam)| Ok((cs.clone(), family_lift(&cs, &fam)?)))
        .collect::<Result<_, HyperError>>()?;
    Ok(GeneralizedExtension { pieces })
}

impl GeneralizedExtension {
    pub fn transducers(&self, i: usize) -> Vec<PrefixTransducer> {
        self.pieces[i].1.iter().map(|m| m.transducer.clone()).collect()
    }

    pub fn u(&self, relations: &[CompactRelation]) -> Result<Vec<CompactRelation>, HyperError> {
        relations.iter().enumerate().map(|(i, a)| hyper_universal_step(&self.transducers(i), a)).collect()
    }

    /// `π_{ij}(A)` as the closed cells of the section.
    pub fn factor(&self, i: usize, j: usize, relations: &[CompactRelation]) -> Result<Vec<Region>, HyperError> {
        let cs = &self.pieces[i].0;
        Ok(relations[i].cross_section(j)?.iter().map(|c| cs.project(c, c.len()).expect("valid cylinder")).collect())
    }

    /// A random relation per piece: for each member one to three cylinders
    /// of length `m_k` plus up to two symbols.
    pub fn random_relations<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<CompactRelation> {
        self.pieces
            .iter()
            .map(|(cs, members)| {
                let lambda = cs.symbolic_space();
                let mut pairs = Vec::new();
                for (j, m) in members.iter().enumerate() {
                    let base = m.extension.moduli(k).1;
                    for _ in 0..rng.gen_range(1..=3) {
                        let len = base + rng.gen_range(0..=2);
                        pairs.push((j, lambda.random_word(rng, len, 2)));
                    }
                }
                CompactRelation::new(members.len(), pairs).expect("every member sampled")
            })
            .collect()
    }

    /// Checks on sampled relations at resolution `k`, for every member
    /// `T = (i, j)` and every `c` in the section: the cross-section identity,
    /// `T(cl V_{c|m_k}) ⊆ V_{F(c)|k}`, and that `cl V_{F(c)|k}` meets
    /// `T(cl V_c)`. Together these put `π(U(A))` within Hausdorff distance
    /// `2^{-k}` of `T(π(A))`. Singleton witnesses `A = N × {[α]}` must stay
    /// singletons.
    pub fn certify<R: Rng>(
        &self,
        relations: usize,
        singletons: usize,
        k: usize,
        rng: &mut R,
    ) -> GeneralizedCertificate {
        let samples: Vec<Vec<CompactRelation>> = (0..relations).map(|_| self.random_relations(k, rng)).collect();
        let witnesses: Vec<(usize, Word)> = (0..singletons)
            .flat_map(|_| {
                self.pieces
                    .iter()
                    .enumerate()
                    .map(|(i, (cs, members))| {
                        let len = members.iter().map(|m| m.extension.moduli(k).1).max().unwrap_or(0);
                        (i, cs.symbolic_space().random_word(rng, len, 2))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut results: Vec<(usize, Vec<String>)> =
            samples.par_iter().map(|rels| self.check_relations(rels, k)).collect();
        results.par_extend(witnesses.par_iter().map(|(i, alpha)| self.check_singleton(*i, alpha, k)));
        GeneralizedCertificate {
            relations,
            singletons: witnesses.len(),
            checks: results.iter().map(|r| r.0).sum(),
            failures: results.into_iter().flat_map(|r| r.1).collect(),
        }
    }

    fn check_relations(&self, rels: &[CompactRelation], k: usize) -> (usize, Vec<String>) {
        let mut checks = 0;
        let mut failures = Vec::new();
        let image = match self.u(rels) {
            Ok(img) => img,
            Err(e) => return (1, vec![e.to_string()]),
        };
        for (i, (cs, members)) in self.pieces.iter().enumerate() {
            let space = cs.space();
            for (j, m) in members.iter().enumerate() {
                let section = rels[i].cross_section(j).expect("full projection");
                checks += 1;
                if *image[i].cross_section(j).expect("full projection") != section_image(&m.transducer, section) {
                    failures.push(format!("piece {i} member {j}: cross-section identity fails on {}", rels[i]));
                }
                let (l, mk) = m.extension.moduli(k);
                let mut q = m.parameter.clone();
                q.resize(q.len().max(l), 0);
                for c in section {
                    checks += 1;
                    let fc = cylinder_image(&m.transducer, c);
                    if fc.len() < k {
                        failures.push(format!(
                            "piece {i} member {j}: [{}] determines only {} symbols",
                            fmt_word(c),
                            fc.len()
                        ));
                        continue;
                    }
                    let t = &fc[..k];
                    let v = cs.v_cell(t).expect("lift outputs valid words");
                    let Ok(inner) = m.extension.region(&q[..l], &c[..mk]) else { continue };
                    if !space.region_in_cell(&inner, &v) {
                        failures.push(format!(
                            "piece {i} member {j}: T(cl V[{}]) escapes V[{}]",
                            fmt_word(&c[..mk]),
                            fmt_word(t)
                        ));
                    }
                    let mut p = m.parameter.clone();
                    p.resize(c.len(), 0);
                    let Ok(exact) = m.extension.region(&p, c) else { continue };
                    if !space.region_meets_cell(&exact, &v) {
                        failures.push(format!(
                            "piece {i} member {j}: V[{}] misses T(cl V[{}])",
                            fmt_word(t),
                            fmt_word(c)
                        ));
                    }
                    if space.cell_diam(&v) >= pow2_neg(k) {
                        failures.push(format!("piece {i} member {j}: diam V[{}] ≥ 2^-{k}", fmt_word(t)));
                    }
                }
            }
        }
        (checks, failures)
    }

    fn check_singleton(&self, i: usize, alpha: &[u64], k: usize) -> (usize, Vec<String>) {
        let members = &self.pieces[i].1;
        let a = CompactRelation::product(members.len(), alpha);
        let mut failures = Vec::new();
        match hyper_universal_step(&self.transducers(i), &a) {
            Ok(img) => {
                for j in 0..members.len() {
                    let sec = img.cross_section(j).expect("full projection");
                    if sec.len() != 1 || sec.iter().next().is_some_and(|c| c.len() < k) {
                        failures.push(format!(
                            "piece {i} member {j}: N×[{}] does not stay a singleton at level {k}",
                            fmt_word(alpha)
                        ));
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
        let diam = self.pieces[i].0.cell_diam_bound(alpha.len());
        if diam >= pow2_neg(k) {
            failures.push(format!("piece {i}: witness cell [{}] is too coarse", fmt_word(alpha)));
        }
        (members.len(), failures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Space;
    use crate::maps::Builtin;
    use crate::rational::ratio;
    use crate::symbolic::SymbolicSpace;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        crate::symbolic::parse_word(s).unwrap()
    }

    fn cantor_family() -> Vec<PrefixTransducer> {
        let c = SymbolicSpace::cantor();
        vec![PrefixTransducer::shift(c.clone()), PrefixTransducer::identity(c), PrefixTransducer::odometer()]
    }

    #[test]
    fn induced_maps() {
        let cs = CoverSystem::interval();
        let half = Builtin::affine(ratio(1, 2), ratio(0, 1)).unwrap();
        let m = CompactSetApprox::new(2, cells_meeting(&cs, &Region::interval(ratio(1, 2), ratio(1, 1)), 2)).unwrap();
        let img = induced_hyper_map(&cs, &half, &m, 2).unwrap();
        let covered: Vec<_> = img.cells.iter().map(|t| cs.v_cell(t).unwrap()).collect();
        assert!(Space::Interval.cells_cover_region(&covered, &Region::interval(ratio(1, 4), ratio(1, 2))).is_ok());
        let id = Builtin::Identity(Space::Interval);
        assert!(induced_hyper_map(&cs, &id, &m, 2).unwrap().cells.is_superset(&m.cells));
        let sq = Builtin::Square;
        assert!(matches!(induced_hyper_map(&cs, &sq, &m, 4), Err(HyperError::InsufficientResolution { .. })));
        assert_eq!(CompactSetApprox::new(1, BTreeSet::new()), Err(HyperError::EmptySet));
    }

    #[test]
    fn relation_examples() {
        let n = cantor_family();
        let a = CompactRelation::new(3, [(0, w("01")), (1, w("1")), (2, w("11"))]).unwrap();
        assert_eq!(a.cross_section(0).unwrap(), &BTreeSet::from([w("01")]));
        let u = hyper_universal_step(&n, &a).unwrap();
        assert_eq!(u.cross_section(0).unwrap(), &BTreeSet::from([w("1")]));
        assert_eq!(u.cross_section(1).unwrap(), &BTreeSet::from([w("1")]));
        assert_eq!(u.cross_section(2).unwrap(), &BTreeSet::from([w("00")]));
        assert_eq!(CompactRelation::new(3, [(0, w("0")), (2, w("1"))]), Err(HyperError::MissingMember(1)));
        assert!(matches!(a.cross_section(5), Err(HyperError::UnknownMember(5))));
        let x = w("0110");
        let p = hyper_universal_step(&n, &CompactRelation::product(3, &x)).unwrap();
        assert_eq!(p.cross_section(0).unwrap(), &BTreeSet::from([w("110")]));
        assert_eq!(normalize([w("01"), w("0"), w("011"), w("1")]), BTreeSet::from([w("0"), w("1")]));
    }

    #[test]
    fn composition_examples() {
        let id: GenTable<u8, u8> = (0..3).map(|x| (x, BTreeSet::from([x]))).collect();
        assert_eq!(compose_generalized(&id, &id).unwrap(), id);
        let constant: GenTable<u8, u8> = (0..3).map(|z| (z, BTreeSet::from([1]))).collect();
        let pi: GenTable<u8, char> =
            BTreeMap::from([(0, BTreeSet::from(['a'])), (1, BTreeSet::from(['b', 'c'])), (2, BTreeSet::from(['c']))]);
        let g = compose_generalized(&pi, &constant).unwrap();
        assert!(g.values().all(|v| *v == BTreeSet::from(['b', 'c'])));
        let bad: GenTable<u8, u8> = BTreeMap::from([(0, BTreeSet::from([7]))]);
        assert!(matches!(compose_generalized(&pi, &bad), Err(HyperError::ResolutionMismatch(_))));
        let s: BTreeMap<u8, u8> = BTreeMap::from([(0, 1), (1, 2), (2, 0)]);
        assert!(check_generalized_factor(&id, &s, &s).is_ok());
        let t: BTreeMap<u8, u8> = BTreeMap::from([(0, 0), (1, 1), (2, 2)]);
        assert!(check_generalized_factor(&id, &s, &t).is_err());
    }

    #[test]
    fn generalized_pipeline_certifies() {
        let ext = common_generalized_extension(vec![
            (CoverSystem::interval(), MapFamily::Finite(vec![Builtin::Square.shared(), Builtin::Tent.shared()])),
            (CoverSystem::cantor(), MapFamily::Finite(vec![Builtin::Odometer.shared()])),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cert = ext.certify(10, 5, 4, &mut rng);
        assert!(cert.passed(), "{}", cert.failures[0]);
        let single = common_generalized_extension(vec![(
            CoverSystem::interval(),
            MapFamily::Finite(vec![Builtin::Identity(Space::Interval).shared()]),
        )])
        .unwrap();
        assert!(single.certify(5, 5, 3, &mut rng).passed());
    }

    fn relation_strategy() -> impl Strategy<Value = CompactRelation> {
        proptest::collection::vec(proptest::collection::vec(proptest::collection::vec(0u64..2, 1..8), 1..4), 3)
            .prop_map(|sections| {
                CompactRelation::new(
                    3,
                    sections.into_iter().enumerate().flat_map(|(s, cs)| cs.into_iter().map(move |c| (s, c))),
                )
                .unwrap()
            })
    }

    fn small_table() -> impl Strategy<Value = GenTable<u8, u8>> {
        proptest::collection::vec(proptest::collection::btree_set(0u8..3, 1..3), 3)
            .prop_map(|v| v.into_iter().enumerate().map(|(i, s)| (i as u8, s)).collect())
    }

    proptest! {
        #[test]
        fn cross_section_identity(a in relation_strategy()) {
            let n = cantor_family();
            let u = hyper_universal_step(&n, &a).unwrap();
            for s in 0..3 {
                prop_assert_eq!(u.cross_section(s).unwrap(), &section_image(&n[s], a.cross_section(s).unwrap()));
            }
        }

        #[test]
        fn composition_is_associative(a in small_table(), b in small_table(), c in small_table()) {
            let left = compose_generalized(&compose_generalized(&a, &b).unwrap(), &c).unwrap();
            let right = compose_generalized(&a, &compose_generalized(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
