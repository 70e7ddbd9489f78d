//! The universal injection μ on ℕ, component classification of functional
//! digraphs of injections, and the conjugating embedding `σ = π_A⁻¹ μ π_A`.
//!
//! μ is laid out through Cantor pairing: index `pair(pair(τ, j), q)` is
//! position `q` of copy `j` of the component type coded by `τ`
//! (`τ = 0` bi-infinite line, `τ = 1` forward ray, `τ = n + 1` cycle of
//! length `n`). Lines code their integer positions with the zig-zag map.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::num::NonZeroU64;

use crate::pairing::{pair, unpair, unzigzag, zigzag};

/// Version tag recorded in every certificate built on this layout.
pub const LAYOUT_VERSION: &str = "cantor-pair/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentType {
    Cycle(NonZeroU64),
    ForwardRay,
    BiInfiniteLine,
}

impl ComponentType {
    pub fn cycle(len: u64) -> Option<Self> {
        NonZeroU64::new(len).map(ComponentType::Cycle)
    }

    /// The `τ` code of this type in the pairing layout.
    pub fn code(self) -> u64 {
        match self {
            ComponentType::BiInfiniteLine => 0,
            ComponentType::ForwardRay => 1,
            ComponentType::Cycle(n) => n.get() + 1,
        }
    }

    pub fn from_code(tau: u64) -> Self {
        match tau {
            0 => ComponentType::BiInfiniteLine,
            1 => ComponentType::ForwardRay,
            t => ComponentType::Cycle(NonZeroU64::new(t - 1).expect("t >= 2")),
        }
    }
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentType::Cycle(n) => write!(f, "cycle({n})"),
            ComponentType::ForwardRay => f.write_str("ray"),
            ComponentType::BiInfiniteLine => f.write_str("line"),
        }
    }
}

impl std::str::FromStr for ComponentType {
    type Err = InjectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || InjectionError::Parse(format!("unknown component type `{s}`"));
        match t.as_str() {
            "ray" | "forward-ray" | "forwardray" => Ok(ComponentType::ForwardRay),
            "line" | "bi-infinite-line" | "biinfiniteline" => Ok(ComponentType::BiInfiniteLine),
            _ => {
                let body = t
                    .strip_prefix("cycle")
                    .ok_or_else(bad)?
                    .trim()
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .trim();
                let n: u64 = body.parse().map_err(|_| bad())?;
                ComponentType::cycle(n).ok_or_else(bad)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectionError {
    #[error("index {0} does not decode to a valid slot of μ")]
    InvalidIndex(u64),
    #[error("not injective: {first} and {second} both map to {image}")]
    NotInjective { first: u64, second: u64, image: u64 },
    #[error("{0} is assigned two different images")]
    NotAFunction(u64),
    #[error("component oracle inconsistent at {index}: {reason}")]
    InconsistentOracle { index: u64, reason: String },
    #[error("embedding certificate violated: {0}")]
    CertificateViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A decoded position of μ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub kind: ComponentType,
    pub copy: u64,
    pub position: i64,
}

/// The universal injection μ. Stateless; every method is a pure function of
/// the pairing layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniversalInjection;

impl UniversalInjection {
    pub fn encode(&self, slot: Slot) -> Result<u64, InjectionError> {
        let q = match slot.kind {
            ComponentType::BiInfiniteLine => zigzag(slot.position),
            ComponentType::ForwardRay | ComponentType::Cycle(_) => {
                if slot.position < 0 {
                    return Err(InjectionError::InvalidIndex(u64::MAX));
                }
                slot.position as u64
            }
        };
        if let ComponentType::Cycle(n) = slot.kind {
            if q >= n.get() {
                return Err(InjectionError::InvalidIndex(u64::MAX));
            }
        }
        Ok(pair(pair(slot.kind.code(), slot.copy), q))
    }

    pub fn decode(&self, index: u64) -> Result<Slot, InjectionError> {
        let (inner, q) = unpair(index);
        let (tau, copy) = unpair(inner);
        let kind = ComponentType::from_code(tau);
        let position = match kind {
            ComponentType::BiInfiniteLine => unzigzag(q),
            ComponentType::ForwardRay => q as i64,
            ComponentType::Cycle(n) => {
                if q >= n.get() {
                    return Err(InjectionError::InvalidIndex(index));
                }
                q as i64
            }
        };
        Ok(Slot { kind, copy, position })
    }

    /// `μ(index)`: the next position inside the same component.
    pub fn successor(&self, index: u64) -> Result<u64, InjectionError> {
        let mut slot = self.decode(index)?;
        slot.position = match slot.kind {
            ComponentType::Cycle(n) => (slot.position + 1) % n.get() as i64,
            _ => slot.position + 1,
        };
        self.encode(slot)
    }

    /// The component `(τ, j)` an index belongs to.
    pub fn component_of(&self, index: u64) -> Result<(u64, u64), InjectionError> {
        let slot = self.decode(index)?;
        Ok((slot.kind.code(), slot.copy))
    }
}

/// `μ(index)` on the shared layout.
pub fn mu_successor(index: u64) -> Result<u64, InjectionError> {
    UniversalInjection.successor(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleEntry {
    pub component: u64,
    pub kind: ComponentType,
    pub offset: i64,
}

/// Declared component structure for members of a partial injection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentOracle {
    entries: BTreeMap<u64, OracleEntry>,
    anchors: BTreeMap<u64, ComponentType>,
}

impl ComponentOracle {
    pub fn from_entries(entries: BTreeMap<u64, OracleEntry>) -> Self {
        ComponentOracle { entries, anchors: BTreeMap::new() }
    }

    pub fn get(&self, index: u64) -> Option<&OracleEntry> {
        self.entries.get(&index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Anchor declarations this oracle was built from (empty for raw oracles).
    pub fn anchors(&self) -> &BTreeMap<u64, ComponentType> {
        &self.anchors
    }
}

/// A finite injective map `i ↦ σ(i)`, plus optional isolated explored nodes
/// and an optional component oracle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialInjection {
    forward: BTreeMap<u64, u64>,
    backward: BTreeMap<u64, u64>,
    isolated: BTreeSet<u64>,
    oracle: Option<ComponentOracle>,
}

impl PartialInjection {
    pub fn new(entries: impl IntoIterator<Item = (u64, u64)>) -> Result<Self, InjectionError> {
        let mut forward = BTreeMap::new();
        let mut backward: BTreeMap<u64, u64> = BTreeMap::new();
        for (i, j) in entries {
            if let Some(&old) = forward.get(&i) {
                if old != j {
                    return Err(InjectionError::NotAFunction(i));
                }
                continue;
            }
            if let Some(&other) = backward.get(&j) {
                return Err(InjectionError::NotInjective { first: other, second: i, image: j });
            }
            forward.insert(i, j);
            backward.insert(j, i);
        }
        Ok(PartialInjection { forward, backward, isolated: BTreeSet::new(), oracle: None })
    }

    /// Adds explored nodes that carry no edge (they become singleton components).
    pub fn with_nodes(mut self, nodes: impl IntoIterator<Item = u64>) -> Self {
        self.isolated.extend(nodes);
        self
    }

    /// Attaches a raw oracle after checking that offsets advance by one along
    /// every edge (mod the length for cycles) and that ray roots have no
    /// preimage.
    pub fn with_oracle(mut self, oracle: ComponentOracle) -> Result<Self, InjectionError> {
        for (&i, e) in &oracle.entries {
            let bad = |reason: String| InjectionError::InconsistentOracle { index: i, reason };
            match e.kind {
                ComponentType::ForwardRay => {
                    if e.offset < 0 {
                        return Err(bad("negative ray offset".into()));
                    }
                    if e.offset == 0 && self.backward.contains_key(&i) {
                        return Err(bad("declared ray root has a preimage".into()));
                    }
                }
                ComponentType::Cycle(n) => {
                    if e.offset < 0 || e.offset as u64 >= n.get() {
                        return Err(bad("cycle offset out of range".into()));
                    }
                }
                ComponentType::BiInfiniteLine => {}
            }
            if let Some(&j) = self.forward.get(&i) {
                if let Some(f) = oracle.entries.get(&j) {
                    let expected = match e.kind {
                        ComponentType::Cycle(n) => (e.offset + 1) % n.get() as i64,
                        _ => e.offset + 1,
                    };
                    if f.component != e.component || f.kind != e.kind || f.offset != expected {
                        return Err(bad(format!("edge {i} -> {j} breaks the declared offsets")));
                    }
                }
            }
        }
        self.oracle = Some(oracle);
        Ok(self)
    }

    /// Builds the oracle from anchor declarations (`# component i: type`):
    /// the anchor sits at offset 0 and offsets propagate along σ.
    pub fn with_declarations(
        self,
        declarations: impl IntoIterator<Item = (u64, ComponentType)>,
    ) -> Result<Self, InjectionError> {
        let mut entries: BTreeMap<u64, OracleEntry> = BTreeMap::new();
        let mut anchors = BTreeMap::new();
        for (anchor, kind) in declarations {
            anchors.insert(anchor, kind);
            let bad = |reason: &str| InjectionError::InconsistentOracle { index: anchor, reason: reason.to_string() };
            let assign = |idx: u64, offset: i64, entries: &mut BTreeMap<u64, OracleEntry>| {
                let entry = OracleEntry { component: anchor, kind, offset };
                match entries.insert(idx, entry) {
                    Some(prev) if prev != entry => Err(InjectionError::InconsistentOracle {
                        index: idx,
                        reason: "member declared in two components".into(),
                    }),
                    _ => Ok(()),
                }
            };
            match kind {
                ComponentType::Cycle(n) => {
                    let mut cur = anchor;
                    for off in 0..n.get() {
                        if off > 0 && cur == anchor {
                            return Err(bad("cycle closes early"));
                        }
                        assign(cur, off as i64, &mut entries)?;
                        cur = *self.forward.get(&cur).ok_or_else(|| bad("cycle does not close"))?;
                    }
                    if cur != anchor {
                        return Err(bad("cycle length mismatch"));
                    }
                }
                ComponentType::ForwardRay | ComponentType::BiInfiniteLine => {
                    if kind == ComponentType::ForwardRay && self.backward.contains_key(&anchor) {
                        return Err(bad("declared ray root has a preimage"));
                    }
                    let mut cur = anchor;
                    let mut off = 0i64;
                    loop {
                        assign(cur, off, &mut entries)?;
                        match self.forward.get(&cur) {
                            Some(&next) if next == anchor => return Err(bad("component is a cycle")),
                            Some(&next) => {
                                cur = next;
                                off += 1;
                            }
                            None => break,
                        }
                    }
                    if kind == ComponentType::BiInfiniteLine {
                        let mut cur = anchor;
                        let mut off = 0i64;
                        while let Some(&prev) = self.backward.get(&cur) {
                            cur = prev;
                            off -= 1;
                            assign(cur, off, &mut entries)?;
                        }
                    }
                }
            }
        }
        let mut out = self.with_oracle(ComponentOracle::from_entries(entries))?;
        if let Some(o) = out.oracle.as_mut() {
            o.anchors = anchors;
        }
        Ok(out)
    }

    pub fn get(&self, i: u64) -> Option<u64> {
        self.forward.get(&i).copied()
    }

    pub fn preimage(&self, j: u64) -> Option<u64> {
        self.backward.get(&j).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.forward.iter().map(|(&i, &j)| (i, j))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn oracle(&self) -> Option<&ComponentOracle> {
        self.oracle.as_ref()
    }

    /// Domain ∪ range ∪ isolated nodes.
    pub fn explored(&self) -> BTreeSet<u64> {
        let mut nodes: BTreeSet<u64> = self.forward.keys().copied().collect();
        nodes.extend(self.backward.keys().copied());
        nodes.extend(self.isolated.iter().copied());
        nodes
    }

    /// Line-oriented text: `i -> j` per edge, `# component i: type` per anchor,
    /// `# node i` per isolated node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} -> {j}\n"));
        }
        for n in &self.isolated {
            out.push_str(&format!("# node {n}\n"));
        }
        if let Some(o) = &self.oracle {
            for (a, k) in &o.anchors {
                out.push_str(&format!("# component {a}: {k}\n"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, InjectionError> {
        let mut edges = Vec::new();
        let mut nodes = Vec::new();
        let mut decls = Vec::new();
        let num = |s: &str, line: usize| {
            s.trim().parse::<u64>().map_err(|_| InjectionError::Parse(format!("line {line}: bad index `{}`", s.trim())))
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let c = comment.trim();
                if let Some(rest) = c.strip_prefix("component") {
                    let (idx, ty) = rest.split_once(':').ok_or_else(|| {
                        InjectionError::Parse(format!("line {}: expected `component i: type`", ln + 1))
                    })?;
                    decls.push((num(idx, ln + 1)?, ty.parse::<ComponentType>()?));
                } else if let Some(rest) = c.strip_prefix("node") {
                    nodes.push(num(rest, ln + 1)?);
                }
                continue;
            }
            let (a, b) = line
                .split_once("->")
                .ok_or_else(|| InjectionError::Parse(format!("line {}: expected `i -> j`", ln + 1)))?;
            edges.push((num(a, ln + 1)?, num(b, ln + 1)?));
        }
        let sigma = PartialInjection::new(edges)?.with_nodes(nodes);
        if decls.is_empty() {
            Ok(sigma)
        } else {
            sigma.with_declarations(decls)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentStatus {
    Typed(ComponentType),
    Unresolved,
}

/// One weakly connected component of the explored functional digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Smallest member.
    pub id: u64,
    /// Members in σ-order: from the smallest member for closed cycles, from
    /// the node without preimage for paths.
    pub members: Vec<u64>,
    pub closed: bool,
    pub status: ComponentStatus,
}

/// Partitions the explored nodes of `sigma` into weak components and types
/// them. Cycles closing within `depth` steps are typed; rays and lines are
/// typed only through the oracle; everything else is `Unresolved`.
pub fn classify_components(sigma: &PartialInjection, depth: usize) -> Vec<Component> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in sigma.explored() {
        if seen.contains(&start) {
            continue;
        }
        // Walk back to a node without preimage, or around a cycle.
        let mut head = start;
        let mut closed = false;
        while let Some(prev) = sigma.preimage(head) {
            if prev == start {
                closed = true;
                break;
            }
            head = prev;
        }
        let mut members = Vec::new();
        if closed {
            let mut cur = start;
            loop {
                members.push(cur);
                cur = sigma.get(cur).expect("cycle member has an image");
                if cur == start {
                    break;
                }
            }
            let min_pos = members.iter().enumerate().min_by_key(|(_, &m)| m).map(|(p, _)| p).unwrap();
            members.rotate_left(min_pos);
        } else {
            let mut cur = head;
            loop {
                members.push(cur);
                match sigma.get(cur) {
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
        seen.extend(members.iter().copied());
        let id = *members.iter().min().expect("nonempty component");
        let declared = sigma.oracle().and_then(|o| members.iter().find_map(|m| o.get(*m)).map(|e| e.kind));
        let status = match declared {
            Some(kind) => ComponentStatus::Typed(kind),
            None if closed && members.len() <= depth => {
                ComponentStatus::Typed(ComponentType::cycle(members.len() as u64).unwrap())
            }
            None => ComponentStatus::Unresolved,
        };
        out.push(Component { id, members, closed, status });
    }
    out.sort_by_key(|c| c.id);
    out
}

/// A μ-component claimed by the embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimedComponent {
    pub sigma_component: u64,
    pub mu_kind: ComponentType,
    pub copy: u64,
    pub members: usize,
    /// `true` when the σ-component was fully typed.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingCertificate {
    pub layout: &'static str,
    pi_a: BTreeMap<u64, u64>,
    pi_a_inv: BTreeMap<u64, u64>,
    pub components: Vec<ClaimedComponent>,
    pub verified_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub covered_edges: usize,
    pub nodes: usize,
    pub resolved_components: usize,
    pub unresolved_components: usize,
}

impl EmbeddingCertificate {
    pub fn pi_a(&self, i: u64) -> Option<u64> {
        self.pi_a.get(&i).copied()
    }

    pub fn pi_a_inverse(&self, n: u64) -> Option<u64> {
        self.pi_a_inv.get(&n).copied()
    }

    pub fn map(&self) -> &BTreeMap<u64, u64> {
        &self.pi_a
    }

    pub fn is_claimed(&self, tau: u64, copy: u64) -> bool {
        self.components.iter().any(|c| c.mu_kind.code() == tau && c.copy == copy)
    }

    /// Re-checks every invariant against `sigma` with exact integer equality.
    pub fn verify(&self, sigma: &PartialInjection) -> Result<EmbeddingReport, InjectionError> {
        let mu = UniversalInjection;
        let violation = |s: String| Err(InjectionError::CertificateViolation(s));
        let mut range = BTreeSet::new();
        for (&i, &n) in &self.pi_a {
            if !range.insert(n) {
                return violation(format!("π_A not injective at {i} -> {n}"));
            }
            let (tau, copy) = mu.component_of(n)?;
            if !self.is_claimed(tau, copy) {
                return violation(format!("π_A({i}) = {n} lies outside the claimed components"));
            }
        }
        let mut covered = 0;
        for (i, j) in sigma.edges() {
            if let (Some(pi), Some(pj)) = (self.pi_a(i), self.pi_a(j)) {
                let image = mu.successor(pi)?;
                if self.pi_a_inverse(image) != Some(j) || image != pj {
                    return violation(format!("σ({i}) = {j} but π_A⁻¹(μ(π_A({i}))) ≠ {j}"));
                }
                covered += 1;
            }
        }
        let comps = classify_components(sigma, usize::MAX);
        for claimed in self.components.iter().filter(|c| c.resolved) {
            let comp = comps.iter().find(|c| c.id == claimed.sigma_component);
            let kind = comp.and_then(|c| match c.status {
                ComponentStatus::Typed(k) => Some(k),
                ComponentStatus::Unresolved => None,
            });
            if kind != Some(claimed.mu_kind) {
                return violation(format!(
                    "σ-component {} has type {:?}, claimed μ-component is {}",
                    claimed.sigma_component, kind, claimed.mu_kind
                ));
            }
        }
        let resolved = self.components.iter().filter(|c| c.resolved).count();
        Ok(EmbeddingReport {
            covered_edges: covered,
            nodes: self.pi_a.len(),
            resolved_components: resolved,
            unresolved_components: self.components.len() - resolved,
        })
    }
}

/// Allocates one fresh μ-copy per σ-component and records `π_A`.
///
/// Typed components go to a copy of the same type. Unresolved finite paths
/// go to a bi-infinite line; unresolved closed cycles (longer than `depth`)
/// go to a cycle copy so that the closing edge is still preserved.
pub fn embed_injection(sigma: &PartialInjection, depth: usize) -> Result<EmbeddingCertificate, InjectionError> {
    let mu = UniversalInjection;
    let mut next_copy: HashMap<u64, u64> = HashMap::new();
    let mut pi_a = BTreeMap::new();
    let mut pi_a_inv = BTreeMap::new();
    let mut components = Vec::new();

    for comp in classify_components(sigma, depth) {
        let (kind, resolved) = match comp.status {
            ComponentStatus::Typed(k) => (k, true),
            ComponentStatus::Unresolved if comp.closed => {
                (ComponentType::cycle(comp.members.len() as u64).unwrap(), false)
            }
            ComponentStatus::Unresolved => (ComponentType::BiInfiniteLine, false),
        };
        let counter = next_copy.entry(kind.code()).or_insert(0);
        let copy = *counter;
        *counter += 1;

        let positions = anchor_positions(sigma, &comp, kind);
        for (&member, &position) in comp.members.iter().zip(&positions) {
            let n = mu.encode(Slot { kind, copy, position })?;
            pi_a.insert(member, n);
            pi_a_inv.insert(n, member);
        }
        components.push(ClaimedComponent {
            sigma_component: comp.id,
            mu_kind: kind,
            copy,
            members: comp.members.len(),
            resolved,
        });
    }

    let mut cert = EmbeddingCertificate { layout: LAYOUT_VERSION, pi_a, pi_a_inv, components, verified_edges: 0 };
    cert.verified_edges = cert.verify(sigma)?.covered_edges;
    Ok(cert)
}

fn anchor_positions(sigma: &PartialInjection, comp: &Component, kind: ComponentType) -> Vec<i64> {
    let n = comp.members.len() as i64;
    let declared = sigma
        .oracle()
        .and_then(|o| comp.members.iter().enumerate().find_map(|(idx, m)| o.get(*m).map(|e| (idx as i64, e.offset))));
    match (kind, declared) {
        // Cycles: the smallest member sits at 0; `members` already starts there.
        (ComponentType::Cycle(_), _) => (0..n).collect(),
        (_, Some((idx, offset))) => (0..n).map(|p| offset + (p - idx)).collect(),
        _ => {
            let smallest = comp.members.iter().enumerate().min_by_key(|(_, &m)| m).map(|(p, _)| p as i64).unwrap();
            (0..n).map(|p| p - smallest).collect()
        }
    }
}
