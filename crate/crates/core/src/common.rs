//! Lifting whole families of maps and assembling one map on `ℕ^ℕ` that has
//! every member as a factor.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::covers::CoverSystem;
use crate::lift::{LiftError, StrongExtension};
use crate::maps::{SharedFamily, SharedMap};
use crate::rational::pow2_neg;
use crate::symbolic::{
    compose_transducers, fmt_word, interleave_stream, product_lift, PrefixTransducer, ProductLift, SymbolicError,
    SymbolicSpace, Word,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommonError {
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// A family of self-maps of one space.
#[derive(Debug, Clone)]
pub enum MapFamily {
    Finite(Vec<SharedMap>),
    /// `p ↦ G(p)`, represented by the listed parameters.
    Parameterized {
        family: SharedFamily,
        parameters: Vec<Word>,
    },
}

impl MapFamily {
    pub fn len(&self) -> usize {
        match self {
            MapFamily::Finite(m) => m.len(),
            MapFamily::Parameterized { parameters, .. } => parameters.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<SharedMap> {
        match self {
            MapFamily::Finite(m) => m.clone(),
            MapFamily::Parameterized { family, parameters } => parameters.iter().map(|p| family.at(p)).collect(),
        }
    }
}

/// A member `T` of a family with its lift `F: Λ → Λ`, `π ∘ F = T ∘ π`.
#[derive(Debug, Clone)]
pub struct LiftedMember {
    pub name: String,
    pub map: SharedMap,
    pub parameter: Word,
    pub extension: StrongExtension,
    pub transducer: PrefixTransducer,
}

/// Lifts every member; a parameterized family is lifted through a single
/// strong extension.
pub fn family_lift(cs: &CoverSystem, family: &MapFamily) -> Result<Vec<LiftedMember>, LiftError> {
    match family {
        MapFamily::Finite(maps) => maps
            .iter()
            .map(|m| {
                let ext = StrongExtension::of_map(cs.clone(), m.clone())?;
                Ok(LiftedMember {
                    name: m.name(),
                    map: m.clone(),
                    parameter: Word::new(),
                    transducer: ext.transducer(&[]),
                    extension: ext,
                })
            })
            .collect(),
        MapFamily::Parameterized { family, parameters } => {
            let ext = StrongExtension::new(cs.clone(), family.clone())?;
            Ok(parameters
                .iter()
                .map(|p| {
                    let map = family.at(p);
                    LiftedMember {
                        name: format!("{}[{}]", family.name(), fmt_word(p)),
                        map,
                        parameter: p.clone(),
                        transducer: ext.transducer(p).renamed(format!("F[{}]", fmt_word(p))),
                        extension: ext.clone(),
                    }
                })
                .collect())
        }
    }
}

/// `U_N(z)(S) = S(z(S))` for a finite family `N` of self-maps of one
/// symbolic space, with `z` stored as interleaved streams.
pub fn universal_on_functions(maps: Vec<PrefixTransducer>) -> Result<ProductLift, SymbolicError> {
    let Some(first) = maps.first() else { return Err(SymbolicError::EmptyFamily) };
    let space = first.domain().clone();
    product_lift(space, maps, None)
}

/// `r(β)_i = min(β_i, |J_i| - 1)`: a retraction of `ℕ^ℕ` onto `Λ`.
pub fn retraction(lambda: &SymbolicSpace) -> PrefixTransducer {
    let l = lambda.clone();
    PrefixTransducer::symbolwise(format!("r[{lambda}]"), SymbolicSpace::Baire, lambda.clone(), move |i, a| {
        a.min(l.alphabet_at(i).map_or(a, |j| j - 1))
    })
}

/// `incl ∘ F ∘ r`: a self-map of `ℕ^ℕ` extending `F: Λ → Λ`.
fn extend_to_baire(f: &PrefixTransducer) -> PrefixTransducer {
    let r = retraction(f.domain());
    let (f1, f2) = (f.clone(), f.clone());
    PrefixTransducer::new(
        format!("{}∘r", f.name()),
        SymbolicSpace::Baire,
        SymbolicSpace::Baire,
        move |w| f1.step(&r.step(w)),
        move |k| f2.modulus(k),
    )
}

/// A piece of a σ-compact family: a family on one space with its cover
/// system.
#[derive(Debug, Clone)]
pub struct Piece {
    pub cs: CoverSystem,
    pub family: MapFamily,
}

/// `U_F` on `ℕ^ℕ`: stream `i` carries the universal map of piece `i`, whose
/// stream `j` carries the lift of member `j`.
#[derive(Debug, Clone)]
pub struct CommonExtension {
    pub pieces: Vec<(CoverSystem, Vec<LiftedMember>)>,
    pub piece_lifts: Vec<ProductLift>,
    pub outer: ProductLift,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramFailure {
    pub piece: usize,
    pub member: usize,
    pub input: Word,
    pub k: usize,
    pub detail: String,
}

impl fmt::Display for DiagramFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "piece {} member {} k={}: {} (input length {})",
            self.piece,
            self.member,
            self.k,
            self.detail,
            self.input.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineCertificate {
    pub diagrams: usize,
    pub max_k: usize,
    pub samples: usize,
    pub checks: usize,
    pub failures: Vec<DiagramFailure>,
}

impl PipelineCertificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn common_extension_baire(pieces: Vec<Piece>) -> Result<CommonExtension, CommonError> {
    let mut lifted = Vec::new();
    let mut piece_lifts = Vec::new();
    for piece in pieces {
        let members = family_lift(&piece.cs, &piece.family)?;
        let extended: Vec<PrefixTransducer> = members.iter().map(|m| extend_to_baire(&m.transducer)).collect();
        piece_lifts.push(product_lift(SymbolicSpace::Baire, extended, None)?);
        lifted.push((piece.cs, members));
    }
    let outer = product_lift(SymbolicSpace::Baire, piece_lifts.iter().map(|p| p.lift.clone()).collect(), None)?;
    Ok(CommonExtension { pieces: lifted, piece_lifts, outer })
}

impl CommonExtension {
    pub fn u(&self) -> &PrefixTransducer {
        &self.outer.lift
    }

    pub fn member(&self, i: usize, j: usize) -> &LiftedMember {
        &self.pieces[i].1[j]
    }

    /// `r_i ∘ π_j ∘ π_i: ℕ^ℕ → Λ_i`; composing with `π` of the cover system
    /// gives the factor map onto the space of member `(i, j)`.
    pub fn symbolic_factor(&self, i: usize, j: usize) -> PrefixTransducer {
        let r = retraction(&self.pieces[i].0.symbolic_space());
        let inner = compose_transducers(&self.piece_lifts[i].projection(j), &self.outer.projection(i))
            .expect("both projections act on ℕ^ℕ");
        compose_transducers(&r, &inner).expect("retraction acts on ℕ^ℕ")
    }

    /// Input length needed to check member `(i, j)` up to resolution `max_k`.
    pub fn input_length(&self, i: usize, j: usize, max_k: usize) -> usize {
        let r = self.symbolic_factor(i, j);
        let after = compose_transducers(&r, self.u()).expect("spaces agree");
        let (_, m) = self.member(i, j).extension.moduli(max_k);
        after.modulus(max_k).max(r.modulus(m))
    }

    /// For sampled `z` and every member and `k ≤ max_k`, with
    /// `a = R(z)` and `t = R(U(z))|k` (`R` the symbolic factor): checks
    /// `T(cl V_{a|m_k}) ⊆ V_t` exactly and `diam V_t < 2^{-k}`, so that
    /// `d(Φ(U z), T(Φ z)) < 2^{-k}`. Also checks that `R` agrees with
    /// unpacking the streams by hand.
    pub fn certify<R: Rng>(&self, samples: usize, max_k: usize, bound: u64, rng: &mut R) -> PipelineCertificate {
        let mut jobs = Vec::new();
        for (i, (_, members)) in self.pieces.iter().enumerate() {
            for j in 0..members.len() {
                let len = self.input_length(i, j, max_k);
                for _ in 0..samples {
                    jobs.push((i, j, SymbolicSpace::Baire.random_word(rng, len, bound)));
                }
            }
        }
        let results: Vec<(usize, Vec<DiagramFailure>)> =
            jobs.par_iter().map(|(i, j, z)| self.check_diagram(*i, *j, z, max_k)).collect();
        PipelineCertificate {
            diagrams: self.pieces.iter().map(|(_, m)| m.len()).sum(),
            max_k,
            samples,
            checks: results.iter().map(|r| r.0).sum(),
            failures: results.into_iter().flat_map(|r| r.1).collect(),
        }
    }

    fn check_diagram(&self, i: usize, j: usize, z: &[u64], max_k: usize) -> (usize, Vec<DiagramFailure>) {
        let (cs, members) = &self.pieces[i];
        let member = &members[j];
        let space = cs.space();
        let mut failures = Vec::new();
        let fail = |k: usize, detail: String| DiagramFailure { piece: i, member: j, input: z.to_vec(), k, detail };
        let r = self.symbolic_factor(i, j);
        let a = r.step(z);
        let by_hand: Word = {
            let stream = interleave_stream(&interleave_stream(z, i as u64), j as u64);
            retraction(&cs.symbolic_space()).step(&stream)
        };
        if a != by_hand {
            failures.push(fail(0, "composed factor differs from stagewise unpacking".into()));
        }
        let image = r.step(&self.u().step(z));
        let mut checks = 0;
        for k in 1..=max_k {
            checks += 1;
            let (l, m) = member.extension.moduli(k);
            if a.len() < m || image.len() < k {
                failures.push(fail(
                    k,
                    format!("input too short: {} point symbols, {} image symbols", a.len(), image.len()),
                ));
                break;
            }
            let mut q = member.parameter.clone();
            q.resize(q.len().max(l), 0);
            let t = &image[..k];
            let region = match member.extension.region(&q[..l], &a[..m]) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(fail(k, e.to_string()));
                    continue;
                }
            };
            match cs.v_cell(t) {
                Ok(v) => {
                    if !space.region_in_cell(&region, &v) {
                        failures.push(fail(
                            k,
                            format!("T(cl V[{}]) = {region} escapes V[{}]", fmt_word(&a[..m]), fmt_word(t)),
                        ));
                    }
                    if space.cell_diam(&v) >= pow2_neg(k) {
                        failures.push(fail(k, format!("diam V[{}] ≥ 2^-{k}", fmt_word(t))));
                    }
                }
                Err(e) => failures.push(fail(k, e.to_string())),
            }
        }
        (checks, failures)
    }

    /// For every member and every word `a` of `Λ_i` of length `≤ len`,
    /// builds `z` with `R(z) ⊒ a`. Returns the number of words hit.
    pub fn check_surjectivity(&self, len: usize) -> Result<usize, DiagramFailure> {
        let mut hits = 0;
        for (i, (cs, members)) in self.pieces.iter().enumerate() {
            let lambda = cs.symbolic_space();
            for j in 0..members.len() {
                let r = self.symbolic_factor(i, j);
                for n in 1..=len {
                    for a in lambda.all_words(n, 2) {
                        let z = self.outer.section(i, &self.piece_lifts[i].section(j, &a, 0), 0);
                        if !r.step(&z).starts_with(&a) {
                            return Err(DiagramFailure {
                                piece: i,
                                member: j,
                                input: z,
                                k: n,
                                detail: format!("[{}] is not attained", fmt_word(&a)),
                            });
                        }
                        hits += 1;
                    }
                }
            }
        }
        Ok(hits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Space;
    use crate::maps::{Builtin, RotationFamily};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn lifted_finite_family_certifies() {
        let cs = CoverSystem::interval();
        let fam = MapFamily::Finite(vec![Builtin::Square.shared(), Builtin::Tent.shared()]);
        let members = family_lift(&cs, &fam).unwrap();
        assert_eq!(members.len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lambda = cs.symbolic_space();
        let samples: Vec<(Word, Word)> = (0..10).map(|_| (Word::new(), lambda.random_word(&mut rng, 30, 2))).collect();
        for m in &members {
            assert!(m.extension.certify(&samples, 6).passed());
        }
    }

    #[test]
    fn universal_on_functions_examples() {
        let c = SymbolicSpace::cantor();
        assert_eq!(universal_on_functions(Vec::new()).unwrap_err(), SymbolicError::EmptyFamily);
        let u = universal_on_functions(vec![PrefixTransducer::shift(c.clone()), PrefixTransducer::identity(c.clone())])
            .unwrap();
        let x: Word = vec![1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0];
        let z = crate::symbolic::interleave_pack(&[x.clone(), x.clone()], 0, 60);
        let out = u.lift.step(&z);
        assert!(u.projection(0).step(&out).starts_with(&x[1..4]));
        assert!(u.projection(1).step(&out).starts_with(&x[..4]));
    }

    #[test]
    fn identity_piece_and_empty_pipeline() {
        let ext = common_extension_baire(vec![Piece {
            cs: CoverSystem::interval(),
            family: MapFamily::Finite(vec![Builtin::Identity(Space::Interval).shared()]),
        }])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(ext.certify(3, 3, 10, &mut rng).passed());
        let empty = common_extension_baire(Vec::new()).unwrap();
        let z: Word = vec![5, 1, 7, 0, 3];
        assert_eq!(empty.u().step(&z), z);
        assert_eq!(empty.certify(3, 3, 10, &mut rng).checks, 0);
    }

    #[test]
    fn two_piece_pipeline_certifies() {
        let pieces = vec![
            Piece {
                cs: CoverSystem::interval(),
                family: MapFamily::Finite(vec![Builtin::Square.shared(), Builtin::Tent.shared()]),
            },
            Piece {
                cs: CoverSystem::circle(),
                family: MapFamily::Parameterized {
                    family: Arc::new(RotationFamily),
                    parameters: vec![vec![1], vec![0, 1, 1]],
                },
            },
        ];
        let ext = common_extension_baire(pieces).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cert = ext.certify(2, 3, 12, &mut rng);
        assert!(cert.passed(), "{}", cert.failures[0]);
        assert_eq!(cert.diagrams, 4);
        assert!(ext.check_surjectivity(2).is_ok());
    }

    #[test]
    fn retraction_clamps() {
        let r = retraction(&SymbolicSpace::lambda(vec![9], 5));
        assert_eq!(r.step(&[12, 3, 7]), vec![8, 3, 4]);
    }

    proptest! {
        #[test]
        fn retraction_fixes_lambda(w in proptest::collection::vec(0u64..5, 0..20)) {
            let lambda = SymbolicSpace::lambda(vec![9], 5);
            prop_assert_eq!(retraction(&lambda).step(&w), w);
        }
    }
}
