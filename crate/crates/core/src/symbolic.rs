//! Symbolic spaces `2^ℕ`, `ℕ^ℕ` and `∏ J_i`, continuous maps between them as
//! monotone prefix transducers, and the interleaving `Z^ℕ ≅ Z`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::pairing::{pair, unpair};

pub type Word = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymbolicError {
    #[error("InsufficientInput: resolution {k} needs {needed} input symbols, got {got}")]
    InsufficientInput { k: usize, needed: usize, got: usize },
    #[error("transducer `{name}` produced {got} symbols where {needed} were guaranteed")]
    Unproductive { name: String, needed: usize, got: usize },
    #[error("SpaceMismatch: {0} vs {1}")]
    SpaceMismatch(SymbolicSpace, SymbolicSpace),
    #[error("symbol {symbol} at position {position} is outside the alphabet")]
    InvalidSymbol { position: usize, symbol: u64 },
    #[error("EmptyFamily")]
    EmptyFamily,
    #[error("parse error: {0}")]
    Parse(String),
}

/// `∏ J_i` with `|J_i| = head[i]` for the listed levels and `tail` beyond;
/// `Baire` has the unbounded alphabet ℕ at every level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymbolicSpace {
    Finite { head: Vec<u64>, tail: u64 },
    Baire,
}

impl SymbolicSpace {
    pub fn cantor() -> Self {
        SymbolicSpace::Finite { head: Vec::new(), tail: 2 }
    }

    pub fn baire() -> Self {
        SymbolicSpace::Baire
    }

    /// Panics if an alphabet has fewer than two symbols.
    pub fn lambda(head: Vec<u64>, tail: u64) -> Self {
        assert!(tail >= 2 && head.iter().all(|&j| j >= 2), "alphabets need at least two symbols");
        SymbolicSpace::Finite { head, tail }
    }

    /// Alphabet size at position `i`; `None` when unbounded.
    pub fn alphabet_at(&self, i: usize) -> Option<u64> {
        match self {
            SymbolicSpace::Finite { head, tail } => Some(head.get(i).copied().unwrap_or(*tail)),
            SymbolicSpace::Baire => None,
        }
    }

    pub fn check_word(&self, w: &[u64]) -> Result<(), SymbolicError> {
        for (position, &symbol) in w.iter().enumerate() {
            if let Some(j) = self.alphabet_at(position) {
                if symbol >= j {
                    return Err(SymbolicError::InvalidSymbol { position, symbol });
                }
            }
        }
        Ok(())
    }

    /// Uniform symbols on finite levels, `0..baire_bound` on unbounded ones.
    pub fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize, baire_bound: u64) -> Word {
        (0..len).map(|i| rng.gen_range(0..self.alphabet_at(i).unwrap_or(baire_bound.max(1)))).collect()
    }

    /// Every word of length `len` (unbounded levels truncated to `baire_bound`).
    pub fn all_words(&self, len: usize, baire_bound: u64) -> Vec<Word> {
        let mut out = vec![Vec::new()];
        for i in 0..len {
            let j = self.alphabet_at(i).unwrap_or(baire_bound);
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..j).map(move |a| {
                        let mut v = w.clone();
                        v.push(a);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for SymbolicSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolicSpace::Finite { head, tail } if head.is_empty() => write!(f, "{tail}^N"),
            SymbolicSpace::Finite { head, tail } => {
                let h: Vec<String> = head.iter().map(u64::to_string).collect();
                write!(f, "prod({}; {tail}^N)", h.join(","))
            }
            SymbolicSpace::Baire => f.write_str("N^N"),
        }
    }
}

pub fn fmt_word(w: &[u64]) -> String {
    if w.iter().all(|&a| a < 10) {
        w.iter().map(u64::to_string).collect()
    } else {
        let parts: Vec<String> = w.iter().map(u64::to_string).collect();
        parts.join(".")
    }
}

/// Digits, or `.`-separated numbers for larger symbols. The empty word is `-`.
pub fn parse_word(s: &str) -> Result<Word, SymbolicError> {
    let s = s.trim();
    if s.is_empty() || s == "-" {
        return Ok(Vec::new());
    }
    let bad = || SymbolicError::Parse(format!("bad word `{s}`"));
    if s.contains('.') {
        s.split('.').map(|t| t.parse().map_err(|_| bad())).collect()
    } else {
        s.chars().map(|c| c.to_digit(10).map(u64::from).ok_or_else(bad)).collect()
    }
}

pub type StepFn = Arc<dyn Fn(&[u64]) -> Word + Send + Sync>;
pub type ModulusFn = Arc<dyn Fn(usize) -> usize + Send + Sync>;

/// A continuous map between symbolic spaces: `step` returns the output
/// determined by a finite input, `modulus(k)` input symbols determine at
/// least `k` output symbols.
#[derive(Clone)]
pub struct PrefixTransducer {
    name: String,
    domain: SymbolicSpace,
    codomain: SymbolicSpace,
    step: StepFn,
    modulus: ModulusFn,
}

impl fmt::Debug for PrefixTransducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrefixTransducer({}: {} -> {})", self.name, self.domain, self.codomain)
    }
}

impl PrefixTransducer {
    pub fn new(
        name: impl Into<String>,
        domain: SymbolicSpace,
        codomain: SymbolicSpace,
        step: impl Fn(&[u64]) -> Word + Send + Sync + 'static,
        modulus: impl Fn(usize) -> usize + Send + Sync + 'static,
    ) -> Self {
        PrefixTransducer { name: name.into(), domain, codomain, step: Arc::new(step), modulus: Arc::new(modulus) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &SymbolicSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &SymbolicSpace {
        &self.codomain
    }

    pub fn modulus(&self, k: usize) -> usize {
        (self.modulus)(k)
    }

    /// Everything `w` determines.
    pub fn step(&self, w: &[u64]) -> Word {
        (self.step)(w)
    }

    /// The first `k` output symbols.
    pub fn evaluate(&self, w: &[u64], k: usize) -> Result<Word, SymbolicError> {
        let needed = self.modulus(k);
        if w.len() < needed {
            return Err(SymbolicError::InsufficientInput { k, needed, got: w.len() });
        }
        let mut out = self.step(w);
        if out.len() < k {
            return Err(SymbolicError::Unproductive { name: self.name.clone(), needed: k, got: out.len() });
        }
        out.truncate(k);
        Ok(out)
    }

    /// Largest `k ≤ limit` with `modulus(k) ≤ len`.
    pub fn resolution_for(&self, len: usize, limit: usize) -> usize {
        let mut k = 0;
        while k < limit && self.modulus(k + 1) <= len {
            k += 1;
        }
        k
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn identity(space: SymbolicSpace) -> Self {
        Self::new("id", space.clone(), space, |w| w.to_vec(), |k| k)
    }

    pub fn shift(space: SymbolicSpace) -> Self {
        let codomain = match &space {
            SymbolicSpace::Finite { head, tail } => {
                SymbolicSpace::Finite { head: head.iter().skip(1).copied().collect(), tail: *tail }
            }
            SymbolicSpace::Baire => SymbolicSpace::Baire,
        };
        Self::new("shift", space, codomain, |w| w.get(1..).unwrap_or(&[]).to_vec(), |k| k + 1)
    }

    pub fn constant(space: SymbolicSpace, codomain: SymbolicSpace, symbol: u64) -> Self {
        Self::new(format!("const({symbol})"), space, codomain, move |w| vec![symbol; w.len()], |k| k)
    }

    /// Adding 1 with carry to the right on `2^ℕ`.
    pub fn odometer() -> Self {
        Self::new(
            "odometer",
            SymbolicSpace::cantor(),
            SymbolicSpace::cantor(),
            |w| {
                let mut out = w.to_vec();
                for a in out.iter_mut() {
                    if *a == 0 {
                        *a = 1;
                        return out;
                    }
                    *a = 0;
                }
                out
            },
            |k| k,
        )
    }

    /// Replaces symbol `a` by `images[a]`; images must be nonempty.
    pub fn substitution(images: Vec<Word>, codomain_size: u64) -> Result<Self, SymbolicError> {
        if images.len() < 2 || images.iter().any(Vec::is_empty) {
            return Err(SymbolicError::Parse("substitution needs ≥ 2 nonempty images".into()));
        }
        if images.iter().flatten().any(|&b| b >= codomain_size) {
            return Err(SymbolicError::Parse("substitution image outside the codomain alphabet".into()));
        }
        let domain = SymbolicSpace::Finite { head: Vec::new(), tail: images.len() as u64 };
        let codomain = SymbolicSpace::Finite { head: Vec::new(), tail: codomain_size };
        Ok(Self::new(
            "substitution",
            domain,
            codomain,
            move |w| w.iter().flat_map(|&a| images[a as usize].iter().copied()).collect(),
            |k| k,
        ))
    }

    /// Sliding block code: output `i` is `table[w[i..i+window]]`, with the
    /// window read as a base-`alphabet` number, most significant first.
    pub fn tabulated(alphabet: u64, window: usize, table: Vec<u64>) -> Result<Self, SymbolicError> {
        if window == 0 || alphabet < 2 {
            return Err(SymbolicError::Parse("tabulated map needs window ≥ 1 and alphabet ≥ 2".into()));
        }
        let expected = alphabet.checked_pow(window as u32).unwrap_or(u64::MAX);
        if table.len() as u64 != expected {
            return Err(SymbolicError::Parse(format!("table has {} entries, expected {expected}", table.len())));
        }
        if table.iter().any(|&b| b >= alphabet) {
            return Err(SymbolicError::Parse("table entry outside the alphabet".into()));
        }
        let space = SymbolicSpace::Finite { head: Vec::new(), tail: alphabet };
        Ok(Self::new(
            "tabulated",
            space.clone(),
            space,
            move |w| {
                if w.len() < window {
                    return Vec::new();
                }
                w.windows(window)
                    .map(|win| table[win.iter().fold(0u64, |acc, &a| acc * alphabet + a) as usize])
                    .collect()
            },
            move |k| if k == 0 { 0 } else { k + window - 1 },
        ))
    }

    /// Applies `f` symbolwise; `f` must map each alphabet into the codomain's.
    pub fn symbolwise(
        name: impl Into<String>,
        domain: SymbolicSpace,
        codomain: SymbolicSpace,
        f: impl Fn(usize, u64) -> u64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, domain, codomain, move |w| w.iter().enumerate().map(|(i, &a)| f(i, a)).collect(), |k| k)
    }
}

/// `f ∘ g`.
pub fn compose_transducers(f: &PrefixTransducer, g: &PrefixTransducer) -> Result<PrefixTransducer, SymbolicError> {
    if g.codomain() != f.domain() {
        return Err(SymbolicError::SpaceMismatch(g.codomain().clone(), f.domain().clone()));
    }
    let (f1, g1, f2, g2) = (f.clone(), g.clone(), f.clone(), g.clone());
    Ok(PrefixTransducer::new(
        format!("{}∘{}", f.name(), g.name()),
        g.domain().clone(),
        f.codomain().clone(),
        move |w| f1.step(&g1.step(w)),
        move |k| g2.modulus(f2.modulus(k)),
    ))
}

/// `step(w)` is a prefix of `step(w′)` whenever `w` is a prefix of `w′`.
pub fn is_monotone_on(f: &PrefixTransducer, w: &[u64], extension: &[u64]) -> bool {
    let mut long = w.to_vec();
    long.extend_from_slice(extension);
    let short_out = f.step(w);
    let long_out = f.step(&long);
    long_out.starts_with(&short_out)
}

/// `|step(w)| ≥ k` for every `k` with `modulus(k) ≤ |w|`, up to `limit`.
pub fn is_productive_on(f: &PrefixTransducer, w: &[u64], limit: usize) -> bool {
    let out = f.step(w).len();
    (0..=limit).all(|k| f.modulus(k) > w.len() || out >= k)
}

/// Two transducers agree at resolution `k` on the input prefix `w`.
pub fn agree_at_resolution(
    a: &PrefixTransducer,
    b: &PrefixTransducer,
    w: &[u64],
    k: usize,
) -> Result<bool, SymbolicError> {
    Ok(a.evaluate(w, k)? == b.evaluate(w, k)?)
}

/// Position `pair(n, i)` of the packed word holds symbol `i` of stream `n`;
/// positions not covered by the streams get `default`.
pub fn interleave_pack(streams: &[Word], default: u64, len: usize) -> Word {
    (0..len as u64)
        .map(|p| {
            let (n, i) = unpair(p);
            streams.get(n as usize).and_then(|s| s.get(i as usize)).copied().unwrap_or(default)
        })
        .collect()
}

/// Longest packed prefix fully determined by the streams.
pub fn interleave_pack_determined(streams: &[Word]) -> Word {
    let mut out = Vec::new();
    loop {
        let (n, i) = unpair(out.len() as u64);
        match streams.get(n as usize).and_then(|s| s.get(i as usize)) {
            Some(&a) => out.push(a),
            None => return out,
        }
    }
}

/// Stream `n` of a packed prefix: symbols at positions `pair(n, 0), pair(n, 1), …`
/// below `w.len()`.
pub fn interleave_stream(w: &[u64], n: u64) -> Word {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let p = pair(n, i);
        if p >= w.len() as u64 {
            return out;
        }
        out.push(w[p as usize]);
        i += 1;
    }
}

/// All streams with at least one known symbol.
pub fn interleave_unpack(w: &[u64]) -> Vec<Word> {
    let mut out = Vec::new();
    let mut n = 0;
    while pair(n, 0) < w.len() as u64 {
        out.push(interleave_stream(w, n));
        n += 1;
    }
    out
}

/// Input length needed for `k` packed output symbols when stream `n` needs
/// `moduli(n, i + 1)` input symbols to emit its symbol `i`.
fn packed_modulus(k: usize, moduli: &dyn Fn(usize, usize) -> usize) -> usize {
    let mut need: Vec<usize> = Vec::new();
    for p in 0..k as u64 {
        let (n, i) = unpair(p);
        let n = n as usize;
        if need.len() <= n {
            need.resize(n + 1, 0);
        }
        need[n] = need[n].max(i as usize + 1);
    }
    need.iter()
        .enumerate()
        .map(|(n, &out)| {
            let m = moduli(n, out);
            if m == 0 {
                0
            } else {
                pair(n as u64, m as u64 - 1) as usize + 1
            }
        })
        .max()
        .unwrap_or(0)
}

pub type TailRule = Arc<dyn Fn(usize) -> PrefixTransducer + Send + Sync>;

/// `(z_0, z_1, …) ↦ (U_0(z_0), U_1(z_1), …)` through the interleaving, with
/// coordinates past the list driven by the tail rule (identity by default).
#[derive(Clone)]
pub struct ProductLift {
    pub space: SymbolicSpace,
    pub maps: Vec<PrefixTransducer>,
    tail: Option<TailRule>,
    pub lift: PrefixTransducer,
}

impl fmt::Debug for ProductLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProductLift").field("space", &self.space).field("maps", &self.maps).finish()
    }
}

impl ProductLift {
    /// The map driving coordinate `n`.
    pub fn coordinate_map(&self, n: usize) -> PrefixTransducer {
        coordinate_map(&self.space, &self.maps, self.tail.as_ref(), n)
    }

    /// `π_n`: the `n`-th stream.
    pub fn projection(&self, n: usize) -> PrefixTransducer {
        projection(&self.space, n)
    }

    /// A packed prefix whose `n`-th stream starts with `w`, others `default`.
    pub fn section(&self, n: usize, w: &[u64], default: u64) -> Word {
        let len = if w.is_empty() { 0 } else { pair(n as u64, w.len() as u64 - 1) as usize + 1 };
        let mut streams = vec![Vec::new(); n + 1];
        streams[n] = w.to_vec();
        interleave_pack(&streams, default, len)
    }
}

fn coordinate_map(
    space: &SymbolicSpace,
    maps: &[PrefixTransducer],
    tail: Option<&TailRule>,
    n: usize,
) -> PrefixTransducer {
    match maps.get(n) {
        Some(m) => m.clone(),
        None => match tail {
            Some(rule) => rule(n),
            None => PrefixTransducer::identity(space.clone()),
        },
    }
}

pub fn projection(space: &SymbolicSpace, n: usize) -> PrefixTransducer {
    let packed = packed_space(space);
    PrefixTransducer::new(
        format!("π_{n}"),
        packed,
        space.clone(),
        move |w| interleave_stream(w, n as u64),
        move |k| if k == 0 { 0 } else { pair(n as u64, k as u64 - 1) as usize + 1 },
    )
}

/// Interleaving preserves `2^ℕ` and `ℕ^ℕ`; other products pack into `ℕ^ℕ`.
fn packed_space(space: &SymbolicSpace) -> SymbolicSpace {
    match space {
        SymbolicSpace::Finite { head, .. } if head.is_empty() => space.clone(),
        _ => SymbolicSpace::Baire,
    }
}

pub fn product_lift(
    space: SymbolicSpace,
    maps: Vec<PrefixTransducer>,
    tail: Option<TailRule>,
) -> Result<ProductLift, SymbolicError> {
    for m in &maps {
        if m.domain() != &space {
            return Err(SymbolicError::SpaceMismatch(m.domain().clone(), space));
        }
        if m.codomain() != &space {
            return Err(SymbolicError::SpaceMismatch(m.codomain().clone(), space));
        }
    }
    let packed = packed_space(&space);
    let (maps1, tail1, space1) = (maps.clone(), tail.clone(), space.clone());
    let (maps2, tail2, space2) = (maps.clone(), tail.clone(), space.clone());
    let names: Vec<&str> = maps.iter().map(PrefixTransducer::name).collect();
    let lift = PrefixTransducer::new(
        format!("lift({})", names.join(",")),
        packed.clone(),
        packed,
        move |w| {
            let outs: Vec<Word> = interleave_unpack(w)
                .iter()
                .enumerate()
                .map(|(n, s)| coordinate_map(&space1, &maps1, tail1.as_ref(), n).step(s))
                .collect();
            interleave_pack_determined(&outs)
        },
        move |k| packed_modulus(k, &|n, out| coordinate_map(&space2, &maps2, tail2.as_ref(), n).modulus(out)),
    );
    Ok(ProductLift { space, maps, tail, lift })
}
