//! Morphism expressions in free weakly unital dg categories.
//!
//! A morphism is a finite linear combination of *words*.  A word is a
//! composable chain of atoms, stored in application order (index 0 acts
//! first); the conventional rendering `a*b` means "apply `b`, then `a`", so a
//! stored word `[b, a]` renders as `a*b`.  Atoms are:
//!
//! * generators of the underlying graded quiver,
//! * weak-unit letters `id(x)` — genuine closed degree-0 endomorphisms,
//! * `p`-nodes: the higher unit-coherence operations.
//!
//! A `p`-node of arity `n ≥ 2` has `n` slots, each either a *formal unit*
//! anchored at an object or a sub-word.  Formal units exist only inside
//! slots; they are bookkeeping positions, not morphisms.  A `p`-node with no
//! formal unit slot is zero, and arity 1 collapses: `p₁` of a word is the
//! word, `p₁` of a formal unit is the weak-unit letter.
//!
//! Rendering order vs. storage order: displays list slots with the *last*
//! applied argument leftmost, and unit-mask positions count left-to-right in
//! the display.  So the stored application-order slots `[Unit(x), f]` render
//! as `p{2;2@x}(f)`: arity 2 with the formal unit in display position 2 (the
//! rightmost, first-applied slot).
//!
//! The differential implements, exactly, the A-infinity functor identity in
//! right-to-left form for the unit-coherence system: splitting a `p`-node
//! into a composition of two shorter ones, differentiating one slot, or
//! merging two adjacent slots.  Writing `S_k = |f_1|+…+|f_k|` for prefix
//! degree sums (application order) and `S_a = |f_{b+1}|+…+|f_n|`, the signs
//! are the [`FROZEN_SIGNS`] exponents:
//!
//! ```text
//! d(p_n(f_n,…,f_1)) =
//!   − Σ_{a+b=n} (−1)^{(b+1)(a+S_a)+S_a·S_b} p_a(f_n,…,f_{b+1}) ∘ p_b(f_b,…,f_1)
//!   + Σ_{k=0}^{n−1} (−1)^{(n−1)+S_k} p_n(f_n,…,d f_{k+1},…,f_1)
//!   + Σ_{k=0}^{n−2} (−1)^{k+|f_{k+2}|·|f_{k+1}|} p_{n−1}(f_n,…,f_{k+2}∘f_{k+1},…,f_1)
//! ```
//!
//! where arity-1 nodes collapse as above, formal units are closed, compose
//! as `1∘1 = 1`, and absorb into adjacent slots.  On plain words the
//! differential is the graded Leibniz rule `d(a∘b) = da∘b + (−1)^{|a|} a∘db`.

use crate::linalg::{FieldSpec, Scalar};
use std::collections::BTreeMap;

/// Errors raised while building or parsing expressions.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("objects do not chain: expected source {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: i64, found: i64 },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("parse error at byte {at}: {message}")]
    Parse { at: usize, message: String },
    #[error("formal unit slot {position} has no anchor and none can be inferred")]
    UnanchoredUnit { position: usize },
    #[error("{0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Quivers (graded generator graphs)
// ---------------------------------------------------------------------------

/// Interned object handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

/// Interned generator handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(pub u32);

/// One generator of a graded quiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenInfo {
    pub name: String,
    pub src: ObjectId,
    pub dst: ObjectId,
    pub degree: i64,
}

/// A finite graded quiver: named objects and named generators with degrees.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Quiver {
    objects: Vec<String>,
    gens: Vec<GenInfo>,
}

impl Quiver {
    pub fn new() -> Quiver {
        Quiver::default()
    }

    /// Add an object; names must be unique.
    pub fn add_object(&mut self, name: &str) -> ObjectId {
        assert!(
            !self.objects.iter().any(|o| o == name),
            "duplicate object name {name}"
        );
        self.objects.push(name.to_string());
        ObjectId(self.objects.len() as u32 - 1)
    }

    /// Add a generator; names must be unique.
    pub fn add_gen(&mut self, name: &str, src: ObjectId, dst: ObjectId, degree: i64) -> GenId {
        assert!(
            !self.gens.iter().any(|g| g.name == name),
            "duplicate generator name {name}"
        );
        assert!((src.0 as usize) < self.objects.len() && (dst.0 as usize) < self.objects.len());
        self.gens.push(GenInfo { name: name.to_string(), src, dst, degree });
        GenId(self.gens.len() as u32 - 1)
    }

    pub fn object_name(&self, x: ObjectId) -> &str {
        &self.objects[x.0 as usize]
    }

    pub fn object_by_name(&self, name: &str) -> Option<ObjectId> {
        self.objects.iter().position(|o| o == name).map(|i| ObjectId(i as u32))
    }

    pub fn gen_info(&self, g: GenId) -> &GenInfo {
        &self.gens[g.0 as usize]
    }

    pub fn gen_by_name(&self, name: &str) -> Option<GenId> {
        self.gens.iter().position(|g| g.name == name).map(|i| GenId(i as u32))
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        (0..self.objects.len()).map(|i| ObjectId(i as u32))
    }

    pub fn gens(&self) -> impl Iterator<Item = GenId> + '_ {
        (0..self.gens.len()).map(|i| GenId(i as u32))
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn gen_count(&self) -> usize {
        self.gens.len()
    }

    /// The atom for a generator, with its signature cached inline.
    pub fn gen_atom(&self, g: GenId) -> Atom {
        let info = self.gen_info(g);
        Atom::Gen { id: g, src: info.src, dst: info.dst, degree: info.degree }
    }
}

// ---------------------------------------------------------------------------
// Atoms, words, p-nodes
// ---------------------------------------------------------------------------

/// One slot of a `p`-node: a formal unit anchored at an object, or a word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Unit(ObjectId),
    Arg(Word),
}

impl Slot {
    pub fn src(&self) -> ObjectId {
        match self {
            Slot::Unit(x) => *x,
            Slot::Arg(w) => w.src(),
        }
    }

    pub fn dst(&self) -> ObjectId {
        match self {
            Slot::Unit(x) => *x,
            Slot::Arg(w) => w.dst(),
        }
    }

    pub fn degree(&self) -> i64 {
        match self {
            Slot::Unit(_) => 0,
            Slot::Arg(w) => w.degree(),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Slot::Unit(_))
    }
}

/// A unit-coherence operation applied to slots, stored in application order
/// (slot 0 acts first = rightmost in the rendered display).  Invariants: at
/// least two slots, at least one formal unit slot, and the slots chain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PNode {
    slots: Vec<Slot>,
}

impl PNode {
    /// Build from application-order slots; requires at least two slots, at
    /// least one formal unit among them, and chaining.
    pub fn new(slots: Vec<Slot>) -> Result<PNode, ExprError> {
        if slots.len() < 2 {
            return Err(ExprError::Invalid("p-node needs at least two slots".to_string()));
        }
        if !slots.iter().any(Slot::is_unit) {
            return Err(ExprError::Invalid(
                "p-node without formal units is zero, not a basis element".to_string(),
            ));
        }
        for pair in slots.windows(2) {
            if pair[0].dst() != pair[1].src() {
                return Err(ExprError::Invalid("p-node slots do not chain".to_string()));
            }
        }
        Ok(PNode { slots })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn src(&self) -> ObjectId {
        self.slots.first().expect("p-node has slots").src()
    }

    pub fn dst(&self) -> ObjectId {
        self.slots.last().expect("p-node has slots").dst()
    }

    /// `Σ slot degrees − arity + 1`.
    pub fn degree(&self) -> i64 {
        self.slots.iter().map(Slot::degree).sum::<i64>() - self.slots.len() as i64 + 1
    }

    /// Unit-slot positions in display order (1-based, leftmost = 1), i.e.
    /// the mask as it is rendered.
    pub fn display_mask(&self) -> Vec<usize> {
        let n = self.slots.len();
        let mut mask: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_unit())
            .map(|(i, _)| n - i)
            .collect();
        mask.sort_unstable();
        mask
    }

    /// Total count of unit letters: formal unit slots plus units nested in
    /// argument words.
    pub fn unit_count(&self) -> usize {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Unit(_) => 1,
                Slot::Arg(w) => w.unit_count(),
            })
            .sum()
    }
}

/// One letter of a word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// A quiver generator with its signature cached inline.
    Gen { id: GenId, src: ObjectId, dst: ObjectId, degree: i64 },
    /// The weak-unit letter `id(x)`, closed of degree 0.
    J(ObjectId),
    /// A nested unit-coherence operation.
    P(PNode),
}

impl Atom {
    pub fn src(&self) -> ObjectId {
        match self {
            Atom::Gen { src, .. } => *src,
            Atom::J(x) => *x,
            Atom::P(p) => p.src(),
        }
    }

    pub fn dst(&self) -> ObjectId {
        match self {
            Atom::Gen { dst, .. } => *dst,
            Atom::J(x) => *x,
            Atom::P(p) => p.dst(),
        }
    }

    pub fn degree(&self) -> i64 {
        match self {
            Atom::Gen { degree, .. } => *degree,
            Atom::J(_) => 0,
            Atom::P(p) => p.degree(),
        }
    }

    /// Unit letters in this atom: 1 for a weak-unit letter, recursive for
    /// `p`-nodes.
    pub fn unit_count(&self) -> usize {
        match self {
            Atom::Gen { .. } => 0,
            Atom::J(_) => 1,
            Atom::P(p) => p.unit_count(),
        }
    }

    fn collect_gens(&self, into: &mut BTreeMap<GenId, usize>) {
        match self {
            Atom::Gen { id, .. } => *into.entry(*id).or_insert(0) += 1,
            Atom::J(_) => {}
            Atom::P(p) => {
                for s in p.slots() {
                    if let Slot::Arg(w) = s {
                        for a in w.atoms() {
                            a.collect_gens(into);
                        }
                    }
                }
            }
        }
    }
}

/// A composable word of atoms in application order.  The empty word is the
/// *strict* identity of its anchor object and only appears in strictly
/// unital contexts; free weakly unital expressions use `Atom::J` letters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    atoms: Vec<Atom>,
    /// Anchor object, used only when `atoms` is empty.
    anchor: ObjectId,
}

impl Word {
    /// The strict identity word at `x`.
    pub fn identity(x: ObjectId) -> Word {
        Word { atoms: Vec::new(), anchor: x }
    }

    /// A single-atom word.
    pub fn atom(a: Atom) -> Word {
        let anchor = a.src();
        Word { atoms: vec![a], anchor }
    }

    /// Build from atoms in application order, validating that they chain.
    pub fn from_atoms(atoms: Vec<Atom>, anchor_if_empty: ObjectId) -> Result<Word, ExprError> {
        for pair in atoms.windows(2) {
            if pair[0].dst() != pair[1].src() {
                return Err(ExprError::Invalid(
                    "word atoms do not chain".to_string(),
                ));
            }
        }
        let anchor = atoms.first().map(|a| a.src()).unwrap_or(anchor_if_empty);
        Ok(Word { atoms, anchor })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_identity(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn src(&self) -> ObjectId {
        self.atoms.first().map(|a| a.src()).unwrap_or(self.anchor)
    }

    pub fn dst(&self) -> ObjectId {
        self.atoms.last().map(|a| a.dst()).unwrap_or(self.anchor)
    }

    pub fn degree(&self) -> i64 {
        self.atoms.iter().map(Atom::degree).sum()
    }

    /// Total unit letters: weak-unit atoms plus formal units in `p`-nodes,
    /// recursively.
    pub fn unit_count(&self) -> usize {
        self.atoms.iter().map(Atom::unit_count).sum()
    }

    /// How many times each generator occurs, recursively.
    pub fn gen_usage(&self) -> BTreeMap<GenId, usize> {
        let mut out = BTreeMap::new();
        for a in &self.atoms {
            a.collect_gens(&mut out);
        }
        out
    }

    /// `self` after `earlier`: concatenation in application order.
    pub fn after(&self, earlier: &Word) -> Result<Word, ExprError> {
        if earlier.dst() != self.src() {
            return Err(ExprError::TypeMismatch {
                expected: format!("{:?}", self.src()),
                found: format!("{:?}", earlier.dst()),
            });
        }
        let mut atoms = earlier.atoms.clone();
        atoms.extend(self.atoms.iter().cloned());
        Word::from_atoms(atoms, earlier.anchor)
    }
}

// ---------------------------------------------------------------------------
// Morphisms (linear combinations of words)
// ---------------------------------------------------------------------------

/// A homogeneous morphism: a linear combination of words sharing one
/// signature `(src, dst, degree)`.  The zero morphism keeps its signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    field: FieldSpec,
    src: ObjectId,
    dst: ObjectId,
    degree: i64,
    terms: BTreeMap<Word, Scalar>,
}

impl Morphism {
    pub fn zero(field: FieldSpec, src: ObjectId, dst: ObjectId, degree: i64) -> Morphism {
        Morphism { field, src, dst, degree, terms: BTreeMap::new() }
    }

    /// A single word with coefficient 1.
    pub fn word(field: FieldSpec, w: Word) -> Morphism {
        let mut m = Morphism::zero(field, w.src(), w.dst(), w.degree());
        m.add_term(w, field.one());
        m
    }

    /// The weak-unit morphism `id(x)` (a `J` letter).
    pub fn weak_unit(field: FieldSpec, x: ObjectId) -> Morphism {
        Morphism::word(field, Word::atom(Atom::J(x)))
    }

    /// The strict identity (empty word) at `x`.
    pub fn strict_identity(field: FieldSpec, x: ObjectId) -> Morphism {
        Morphism::word(field, Word::identity(x))
    }

    /// A generator as a morphism.
    pub fn gen(field: FieldSpec, quiver: &Quiver, g: GenId) -> Morphism {
        Morphism::word(field, Word::atom(quiver.gen_atom(g)))
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn src(&self) -> ObjectId {
        self.src
    }

    pub fn dst(&self) -> ObjectId {
        self.dst
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Add `coeff · w`, dropping the term if it cancels.
    pub fn add_term(&mut self, w: Word, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        debug_assert_eq!(w.src(), self.src, "term source mismatch");
        debug_assert_eq!(w.dst(), self.dst, "term target mismatch");
        debug_assert_eq!(w.degree(), self.degree, "term degree mismatch");
        let cur = self.terms.get(&w).cloned().unwrap_or_else(|| self.field.zero());
        let next = cur.add(&coeff);
        if next.is_zero() {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, next);
        }
    }

    pub fn add(&self, other: &Morphism) -> Result<Morphism, ExprError> {
        if self.src != other.src || self.dst != other.dst {
            return Err(ExprError::TypeMismatch {
                expected: format!("{:?}→{:?}", self.src, self.dst),
                found: format!("{:?}→{:?}", other.src, other.dst),
            });
        }
        if !self.is_zero() && !other.is_zero() && self.degree != other.degree {
            return Err(ExprError::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Morphism) -> Result<Morphism, ExprError> {
        self.add(&other.scale(&self.field.from_i64(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> Morphism {
        let mut out = Morphism::zero(self.field, self.src, self.dst, self.degree);
        if s.is_zero() {
            return out;
        }
        for (w, c) in &self.terms {
            out.terms.insert(w.clone(), c.mul(s));
        }
        out
    }

    pub fn neg(&self) -> Morphism {
        self.scale(&self.field.from_i64(-1))
    }

    /// `self ∘ earlier`: apply `earlier` first.  No Koszul sign: composition
    /// of homogeneous elements is word concatenation, bilinearly.
    pub fn after(&self, earlier: &Morphism) -> Result<Morphism, ExprError> {
        if earlier.dst != self.src {
            return Err(ExprError::TypeMismatch {
                expected: format!("{:?}", self.src),
                found: format!("{:?}", earlier.dst),
            });
        }
        let mut out =
            Morphism::zero(self.field, earlier.src, self.dst, self.degree + earlier.degree);
        for (wg, cg) in &self.terms {
            for (wf, cf) in &earlier.terms {
                out.add_term(wg.after(wf)?, cg.mul(cf));
            }
        }
        Ok(out)
    }
}

/// Input slot for [`apply_p`]: a formal unit anchor or a morphism argument.
#[derive(Clone, Debug)]
pub enum PSlot {
    Unit(ObjectId),
    Arg(Morphism),
}

/// Build `p_n(slots)` (slots in application order), expanding multilinearly
/// over the argument morphisms and applying the collapse rules:
///
/// * arity 1: a formal unit becomes the weak-unit letter, a word stays itself;
/// * arity ≥ 2 with no formal unit slot: zero.
pub fn apply_p(field: FieldSpec, slots: &[PSlot]) -> Result<Morphism, ExprError> {
    assert!(!slots.is_empty(), "p-node needs at least one slot");
    // Validate chaining on the slot signatures.
    for pair in slots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let a_dst = match a {
            PSlot::Unit(x) => *x,
            PSlot::Arg(m) => m.dst(),
        };
        let b_src = match b {
            PSlot::Unit(x) => *x,
            PSlot::Arg(m) => m.src(),
        };
        if a_dst != b_src {
            return Err(ExprError::TypeMismatch {
                expected: format!("{b_src:?}"),
                found: format!("{a_dst:?}"),
            });
        }
    }
    let src = match &slots[0] {
        PSlot::Unit(x) => *x,
        PSlot::Arg(m) => m.src(),
    };
    let dst = match slots.last().expect("nonempty") {
        PSlot::Unit(x) => *x,
        PSlot::Arg(m) => m.dst(),
    };
    let degree = slots
        .iter()
        .map(|s| match s {
            PSlot::Unit(_) => 0,
            PSlot::Arg(m) => m.degree(),
        })
        .sum::<i64>()
        - slots.len() as i64
        + 1;

    let mut out = Morphism::zero(field, src, dst, degree);
    // Multilinear expansion: choose one word from every argument morphism.
    let mut choice: Vec<(Slot, Scalar)> = Vec::with_capacity(slots.len());
    fn expand(
        field: FieldSpec,
        slots: &[PSlot],
        idx: usize,
        choice: &mut Vec<(Slot, Scalar)>,
        out: &mut Morphism,
    ) {
        if idx == slots.len() {
            let unit_count = choice.iter().filter(|(s, _)| s.is_unit()).count();
            let mut coeff = field.one();
            for (_, c) in choice.iter() {
                coeff = coeff.mul(c);
            }
            let picked: Vec<Slot> = choice.iter().map(|(s, _)| s.clone()).collect();
            if picked.len() == 1 {
                // Arity-1 collapse.
                let w = match picked.into_iter().next().expect("one slot") {
                    Slot::Unit(x) => Word::atom(Atom::J(x)),
                    Slot::Arg(w) => w,
                };
                out.add_term(w, coeff);
            } else if unit_count > 0 {
                out.add_term(Word::atom(Atom::P(PNode { slots: picked })), coeff);
            }
            // Arity ≥ 2 without formal units: zero — nothing to add.
            return;
        }
        match &slots[idx] {
            PSlot::Unit(x) => {
                choice.push((Slot::Unit(*x), field.one()));
                expand(field, slots, idx + 1, choice, out);
                choice.pop();
            }
            PSlot::Arg(m) => {
                for (w, c) in m.terms() {
                    choice.push((Slot::Arg(w.clone()), c.clone()));
                    expand(field, slots, idx + 1, choice, out);
                    choice.pop();
                }
            }
        }
    }
    expand(field, slots, 0, &mut choice, &mut out);
    Ok(out)
}

/// Convenience: `p` applied to display-order slots (leftmost = last applied),
/// matching how the operations are usually written.
pub fn apply_p_display(field: FieldSpec, display_slots: &[PSlot]) -> Result<Morphism, ExprError> {
    let mut slots: Vec<PSlot> = display_slots.to_vec();
    slots.reverse();
    apply_p(field, &slots)
}

// ---------------------------------------------------------------------------
// Differential
// ---------------------------------------------------------------------------

/// A context able to differentiate generators.
pub trait DifferentialCtx {
    fn field(&self) -> FieldSpec;
    /// `d` of a generator, as a morphism (may be zero).
    fn d_gen(&self, g: GenId) -> Morphism;
}

/// Sign exponents (mod 2) for the three families of terms in `d` of a
/// `p`-node, as affine-quadratic forms in the combinatorial data.  The
/// shipped constants are [`FROZEN_SIGNS`]; the test
/// `sign_rule_search_confirms_frozen_constants` re-derives them by brute
/// force from `d² = 0` plus the arity-2 axioms, so any edit here that breaks
/// consistency is caught immediately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct SignRule {
    /// Split exponent: coefficients of
    /// `1, a, b, ab, S_b, a·S_b, b·S_b, S_a, a·S_a, b·S_a, S_a·S_b`
    /// where the node splits into a later `p_a` after an earlier `p_b`,
    /// `S_b` = degree sum of the first `b` slots, `S_a` of the rest.
    x: [u8; 11],
    /// Slot-differential exponent: coefficients of `1, n, k, S_k, w, T`
    /// where the slot after the first `k` is differentiated, `S_k` is the
    /// degree sum of those first `k` slots, `w` the degree of the
    /// differentiated slot, and `T` the total degree sum.
    y: [u8; 6],
    /// Merge exponent: coefficients of `1, n, k, S_k, w₁, w₂, T, w₁w₂`
    /// where slots `k+1` and `k+2` (1-based) are composed, `S_k` sums the
    /// first `k` degrees, and `w₁`, `w₂` are the degrees of the earlier and
    /// later merged slots.
    z: [u8; 8],
}

#[cfg(test)]
impl SignRule {
    pub(crate) fn from_bits(x: [u8; 11], y: [u8; 6], z: [u8; 8]) -> SignRule {
        SignRule { x, y, z }
    }

    pub(crate) fn bits(&self) -> ([u8; 11], [u8; 6], [u8; 8]) {
        (self.x, self.y, self.z)
    }
}

impl SignRule {
    pub(crate) fn split(&self, a: usize, b: usize, s_b: i64, s_a: i64) -> i64 {
        let (a, b, sb, sa) = (a as i64, b as i64, s_b, s_a);
        let x = &self.x;
        (x[0] as i64
            + x[1] as i64 * a
            + x[2] as i64 * b
            + x[3] as i64 * a * b
            + x[4] as i64 * sb
            + x[5] as i64 * a * sb
            + x[6] as i64 * b * sb
            + x[7] as i64 * sa
            + x[8] as i64 * a * sa
            + x[9] as i64 * b * sa
            + x[10] as i64 * sa * sb)
            .rem_euclid(2)
    }

    pub(crate) fn diff(&self, n: usize, k: usize, s_k: i64, w: i64, total: i64) -> i64 {
        let y = &self.y;
        (y[0] as i64
            + y[1] as i64 * n as i64
            + y[2] as i64 * k as i64
            + y[3] as i64 * s_k
            + y[4] as i64 * w
            + y[5] as i64 * total)
            .rem_euclid(2)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn merge(&self, n: usize, k: usize, s_k: i64, w1: i64, w2: i64, total: i64) -> i64 {
        let z = &self.z;
        (z[0] as i64
            + z[1] as i64 * n as i64
            + z[2] as i64 * k as i64
            + z[3] as i64 * s_k
            + z[4] as i64 * w1
            + z[5] as i64 * w2
            + z[6] as i64 * total
            + z[7] as i64 * w1 * w2)
            .rem_euclid(2)
    }
}

/// The consistent sign assignment, derived by the exhaustive search in the
/// `sign_search` module: split exponent `(b+1)(a+S_a) + S_a·S_b`,
/// slot-differential exponent `(n−1) + S_k`, merge exponent
/// `k + |f_{k+1}|·|f_{k+2}|`, all mod 2.  Four consistent assignments exist
/// in the searched family; this one agrees with the classical arity-3
/// displays on strictly more instances than any other (all seven at even
/// degrees, 18 of 28 overall), and every single-bit perturbation of it
/// breaks either the arity-2 axioms or `d² = 0`.
pub(crate) const FROZEN_SIGNS: SignRule = SignRule {
    // a + ab + S_a + b·S_a + S_a·S_b  =  (b+1)(a+S_a) + S_a·S_b  (mod 2)
    x: [0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 1],
    // 1 + n + S_k  =  (n−1) + S_k  (mod 2)
    y: [1, 1, 0, 1, 0, 0],
    // k + w₁·w₂
    z: [0, 0, 1, 0, 0, 0, 0, 1],
};

/// Differential of a morphism: Leibniz over words, the unit-coherence
/// identity over `p`-nodes, `d(id(x)) = 0`, and the context's values on
/// generators.
pub fn differential(ctx: &dyn DifferentialCtx, m: &Morphism) -> Result<Morphism, ExprError> {
    differential_with(ctx, &FROZEN_SIGNS, m)
}

pub(crate) fn differential_with(
    ctx: &dyn DifferentialCtx,
    rule: &SignRule,
    m: &Morphism,
) -> Result<Morphism, ExprError> {
    let field = ctx.field();
    let mut out = Morphism::zero(field, m.src(), m.dst(), m.degree() + 1);
    for (w, c) in m.terms() {
        let dw = d_word(ctx, rule, w)?;
        out = out.add(&dw.scale(c))?;
    }
    Ok(out)
}

fn d_word(ctx: &dyn DifferentialCtx, rule: &SignRule, w: &Word) -> Result<Morphism, ExprError> {
    let field = ctx.field();
    let mut out = Morphism::zero(field, w.src(), w.dst(), w.degree() + 1);
    let atoms = w.atoms();
    for k in 0..atoms.len() {
        let later_degree: i64 = atoms[k + 1..].iter().map(Atom::degree).sum();
        let da = d_atom(ctx, rule, &atoms[k])?;
        if da.is_zero() {
            continue;
        }
        // Rebuild the word with atom k replaced by each term of its
        // differential; sign (−1)^{sum of degrees of later-applied atoms}.
        for (piece, pc) in da.terms() {
            let mut new_atoms: Vec<Atom> = Vec::with_capacity(atoms.len() + piece.atoms().len());
            new_atoms.extend(atoms[..k].iter().cloned());
            new_atoms.extend(piece.atoms().iter().cloned());
            new_atoms.extend(atoms[k + 1..].iter().cloned());
            let nw = Word::from_atoms(new_atoms, w.src())?;
            out.add_term(nw, pc.with_sign(later_degree));
        }
    }
    Ok(out)
}

fn d_atom(ctx: &dyn DifferentialCtx, rule: &SignRule, a: &Atom) -> Result<Morphism, ExprError> {
    let field = ctx.field();
    match a {
        Atom::Gen { id, src, dst, degree } => {
            let d = ctx.d_gen(*id);
            debug_assert_eq!(d.src(), *src);
            debug_assert_eq!(d.dst(), *dst);
            debug_assert!(d.is_zero() || d.degree() == degree + 1, "d raises degree by 1");
            Ok(d)
        }
        Atom::J(x) => Ok(Morphism::zero(field, *x, *x, 1)),
        Atom::P(p) => d_pnode(ctx, rule, p),
    }
}

/// Merge two adjacent slots (`later ∘ earlier`).
fn merge_slots(later: &Slot, earlier: &Slot) -> Result<Slot, ExprError> {
    Ok(match (later, earlier) {
        (Slot::Unit(x), Slot::Unit(y)) => {
            debug_assert_eq!(x, y, "unit slots must share the anchor to merge");
            Slot::Unit(*x)
        }
        (Slot::Unit(_), Slot::Arg(w)) => Slot::Arg(w.clone()),
        (Slot::Arg(w), Slot::Unit(_)) => Slot::Arg(w.clone()),
        (Slot::Arg(wl), Slot::Arg(we)) => Slot::Arg(wl.after(we)?),
    })
}

fn d_pnode(ctx: &dyn DifferentialCtx, rule: &SignRule, p: &PNode) -> Result<Morphism, ExprError> {
    let field = ctx.field();
    let slots = p.slots();
    let n = slots.len();
    debug_assert!(n >= 2);
    let mut out = Morphism::zero(field, p.src(), p.dst(), p.degree() + 1);

    // Prefix degree sums: pre[k] = sum of the first k slot degrees
    // (application order).
    let mut pre: Vec<i64> = vec![0; n + 1];
    for k in 0..n {
        pre[k + 1] = pre[k] + slots[k].degree();
    }
    let total = pre[n];

    // Split terms: −(−1)^{split(a,b,…)} (later p_a) ∘ (earlier p_b).
    for b in 1..n {
        let a = n - b;
        let first = rebuild_p(field, &slots[..b])?;
        if first.is_zero() {
            continue;
        }
        let second = rebuild_p(field, &slots[b..])?;
        if second.is_zero() {
            continue;
        }
        let sign = rule.split(a, b, pre[b], total - pre[b]) + 1;
        let term = second.after(&first)?;
        out = out.add(&term.scale(&field.one().with_sign(sign)))?;
    }

    // Slot differentials: +(−1)^{diff(n,k,…)} with slot k+1 differentiated.
    for k in 0..n {
        if let Slot::Arg(w) = &slots[k] {
            let dw = d_word(ctx, rule, w)?;
            if dw.is_zero() {
                continue;
            }
            let mut new_slots: Vec<PSlot> = slots_to_pslots(field, slots);
            new_slots[k] = PSlot::Arg(dw);
            let term = apply_p(field, &new_slots)?;
            let sign = rule.diff(n, k, pre[k], slots[k].degree(), total);
            out = out.add(&term.scale(&field.one().with_sign(sign)))?;
        }
    }

    // Merge terms: +(−1)^{merge(n,k,…)} with slots k+1, k+2 composed.
    for k in 0..n - 1 {
        let merged = merge_slots(&slots[k + 1], &slots[k])?;
        let mut new_slots: Vec<PSlot> = Vec::with_capacity(n - 1);
        new_slots.extend(slots[..k].iter().map(|s| slot_to_pslot(field, s)));
        new_slots.push(slot_to_pslot_owned(field, merged));
        new_slots.extend(slots[k + 2..].iter().map(|s| slot_to_pslot(field, s)));
        let term = apply_p(field, &new_slots)?;
        let sign =
            rule.merge(n, k, pre[k], slots[k].degree(), slots[k + 1].degree(), total);
        out = out.add(&term.scale(&field.one().with_sign(sign)))?;
    }

    Ok(out)
}

fn slot_to_pslot(field: FieldSpec, s: &Slot) -> PSlot {
    slot_to_pslot_owned(field, s.clone())
}

fn slot_to_pslot_owned(field: FieldSpec, s: Slot) -> PSlot {
    match s {
        Slot::Unit(x) => PSlot::Unit(x),
        Slot::Arg(w) => PSlot::Arg(Morphism::word(field, w)),
    }
}

fn slots_to_pslots(field: FieldSpec, slots: &[Slot]) -> Vec<PSlot> {
    slots.iter().map(|s| slot_to_pslot(field, s)).collect()
}

/// `p` of a slot prefix/suffix during splitting (application order).
fn rebuild_p(field: FieldSpec, slots: &[Slot]) -> Result<Morphism, ExprError> {
    apply_p(field, &slots_to_pslots(field, slots))
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Canonical textual rendering; [`parse_morphism`] inverts it.
pub fn render_morphism(quiver: &Quiver, m: &Morphism) -> String {
    if m.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (w, c)) in m.terms().enumerate() {
        let neg = match c {
            Scalar::Fp { .. } => false, // no canonical sign in F_p
            Scalar::Rat(r) => num_traits::Signed::is_negative(r),
        };
        let (lead, abs) = if neg {
            (if i == 0 { "-" } else { " - " }, c.neg())
        } else {
            (if i == 0 { "" } else { " + " }, c.clone())
        };
        out.push_str(lead);
        if !abs.is_one() {
            out.push_str(&format!("{abs}*"));
        }
        out.push_str(&render_word(quiver, w));
    }
    out
}

/// Render a word: factors in display order (last applied leftmost).
pub fn render_word(quiver: &Quiver, w: &Word) -> String {
    if w.is_identity() {
        return format!("id({})", quiver.object_name(w.src()));
    }
    w.atoms()
        .iter()
        .rev()
        .map(|a| render_atom(quiver, a))
        .collect::<Vec<_>>()
        .join("*")
}

fn render_atom(quiver: &Quiver, a: &Atom) -> String {
    match a {
        Atom::Gen { id, .. } => quiver.gen_info(*id).name.clone(),
        Atom::J(x) => format!("id({})", quiver.object_name(*x)),
        Atom::P(p) => {
            let n = p.arity();
            let mask: Vec<String> = p
                .slots()
                .iter()
                .enumerate()
                .rev()
                .filter_map(|(i, s)| match s {
                    Slot::Unit(x) => {
                        Some(format!("{}@{}", n - i, quiver.object_name(*x)))
                    }
                    Slot::Arg(_) => None,
                })
                .collect();
            let args: Vec<String> = p
                .slots()
                .iter()
                .rev()
                .filter_map(|s| match s {
                    Slot::Unit(_) => None,
                    Slot::Arg(w) => Some(render_word(quiver, w)),
                })
                .collect();
            format!("p{{{};{}}}({})", n, mask.join(","), args.join(","))
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    quiver: &'a Quiver,
    field: FieldSpec,
    /// Strict contexts read `id(x)` as the empty word; weakly unital
    /// contexts read it as the weak-unit letter.
    strict: bool,
    input: &'a [u8],
    pos: usize,
}

/// Parse the canonical expression grammar:
///
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor ('*' factor)*            -- scalars may appear as factors
/// factor := scalar | 'id' '(' object ')' | 'p' '{' n ';' mask '}' '(' exprs ')'
///         | generator | '(' expr ')'
/// scalar := int ['/' int]
/// mask   := pos['@'object] (',' pos['@'object])*   -- display positions, 1-based
/// ```
///
/// `f*g` applies `g` first.  In `p{…}`, arguments are listed in display
/// order (leftmost = last applied) and mask positions count the display
/// tuple left-to-right.
pub fn parse_morphism(
    quiver: &Quiver,
    field: FieldSpec,
    strict: bool,
    input: &str,
) -> Result<Morphism, ExprError> {
    let mut p = Parser { quiver, field, strict, input: input.as_bytes(), pos: 0 };
    p.skip_ws();
    let m = p.parse_expr()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(p.err("trailing input"));
    }
    Ok(m)
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        ExprError::Parse { at: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> Result<(), ExprError> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", b as char)))
        }
    }

    fn parse_expr(&mut self) -> Result<Morphism, ExprError> {
        self.skip_ws();
        let mut negate = false;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            negate = true;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        let mut acc = self.parse_term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.add(&t)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.sub(&t)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<Morphism, ExprError> {
        let mut scalar = self.field.one();
        let mut morphism: Option<Morphism> = None;
        loop {
            self.skip_ws();
            match self.parse_factor()? {
                Factor::Scalar(s) => scalar = scalar.mul(&s),
                Factor::Morphism(m) => {
                    morphism = Some(match morphism {
                        None => m,
                        // Composition `f*g`: g applied first, so the factor
                        // to the left acts after the one to the right.
                        Some(prev) => prev.after(&m)?,
                    });
                }
            }
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        match morphism {
            Some(m) => Ok(m.scale(&scalar)),
            // A bare scalar only makes sense as 0.
            None if scalar.is_zero() => Err(self.err(
                "a bare scalar has no source/target; write it against a morphism",
            )),
            None => Err(self.err("expected a morphism factor")),
        }
    }

    fn parse_factor(&mut self) -> Result<Factor, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let m = self.parse_expr()?;
                self.eat(b')')?;
                Ok(Factor::Morphism(m))
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.parse_int()?;
                self.skip_ws();
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let den = self.parse_int()?;
                    if self.field.from_i64(den).is_zero() {
                        return Err(self.err("denominator vanishes in this field"));
                    }
                    Ok(Factor::Scalar(self.field.from_ratio(num, den)))
                } else {
                    Ok(Factor::Scalar(self.field.from_i64(num)))
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.parse_ident()?;
                if name == "id" {
                    self.eat(b'(')?;
                    let obj = self.parse_object()?;
                    self.eat(b')')?;
                    let m = if self.strict {
                        Morphism::strict_identity(self.field, obj)
                    } else {
                        Morphism::weak_unit(self.field, obj)
                    };
                    Ok(Factor::Morphism(m))
                } else if name == "p" && self.peek_ws() == Some(b'{') {
                    self.parse_pnode().map(Factor::Morphism)
                } else {
                    let g = self
                        .quiver
                        .gen_by_name(&name)
                        .ok_or(ExprError::UnknownGenerator(name))?;
                    Ok(Factor::Morphism(Morphism::gen(self.field, self.quiver, g)))
                }
            }
            _ => Err(self.err("expected a factor")),
        }
    }

    fn peek_ws(&mut self) -> Option<u8> {
        self.skip_ws();
        self.peek()
    }

    fn parse_int(&mut self) -> Result<i64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        std::str::from_utf8(&self.input[start..self.pos])
            .expect("digits are utf8")
            .parse::<i64>()
            .map_err(|_| self.err("integer out of range"))
    }

    fn parse_ident(&mut self) -> Result<String, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.input.len()
            && (self.input[self.pos].is_ascii_alphanumeric()
                || self.input[self.pos] == b'_'
                || self.input[self.pos] == b'\'')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an identifier"));
        }
        Ok(std::str::from_utf8(&self.input[start..self.pos])
            .expect("identifier bytes are utf8")
            .to_string())
    }

    fn parse_object(&mut self) -> Result<ObjectId, ExprError> {
        let name = self.parse_ident()?;
        self.quiver.object_by_name(&name).ok_or(ExprError::UnknownObject(name))
    }

    fn parse_pnode(&mut self) -> Result<Morphism, ExprError> {
        self.eat(b'{')?;
        let n = self.parse_int()? as usize;
        if n < 1 {
            return Err(self.err("p-node arity must be ≥ 1"));
        }
        self.eat(b';')?;
        // Mask: display positions, optionally anchored.
        let mut mask: Vec<(usize, Option<ObjectId>)> = Vec::new();
        loop {
            let pos = self.parse_int()? as usize;
            if pos < 1 || pos > n {
                return Err(self.err("mask position out of range"));
            }
            let anchor = if self.peek_ws() == Some(b'@') {
                self.pos += 1;
                Some(self.parse_object()?)
            } else {
                None
            };
            mask.push((pos, anchor));
            if self.peek_ws() == Some(b',') {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.eat(b'}')?;
        mask.sort_by_key(|(p, _)| *p);
        for pair in mask.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(self.err("duplicate mask position"));
            }
        }
        if mask.is_empty() {
            return Err(self.err("mask must anchor at least one formal unit"));
        }
        self.eat(b'(')?;
        let mut args: Vec<Morphism> = Vec::new();
        if mask.len() < n {
            loop {
                args.push(self.parse_expr()?);
                if self.peek_ws() == Some(b',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.eat(b')')?;
        if args.len() + mask.len() != n {
            return Err(self.err(&format!(
                "arity {n} needs {} arguments, found {}",
                n - mask.len(),
                args.len()
            )));
        }

        // Assemble display-order slots, then infer missing anchors from
        // neighbours (args adjacent to a unit fix its object).
        let unit_positions: std::collections::BTreeMap<usize, Option<ObjectId>> =
            mask.iter().map(|(p, a)| (*p, *a)).collect();
        let mut display: Vec<Option<PSlot>> = vec![None; n];
        let mut next_arg = args.into_iter();
        for (i, slot) in display.iter_mut().enumerate() {
            let pos = i + 1;
            if let Some(anchor) = unit_positions.get(&pos) {
                *slot = anchor.map(PSlot::Unit);
            } else {
                *slot = Some(PSlot::Arg(next_arg.next().expect("arity counted")));
            }
        }
        // Inference sweeps: display position i is APPLIED AFTER position i+1,
        // so slot i's source = slot i+1's target.
        loop {
            let mut progressed = false;
            for i in 0..n {
                if display[i].is_some() {
                    continue;
                }
                let inferred = if i + 1 < n {
                    display[i + 1].as_ref().map(|s| match s {
                        PSlot::Unit(x) => *x,
                        PSlot::Arg(m) => m.dst(),
                    })
                } else {
                    None
                }
                .or_else(|| {
                    if i > 0 {
                        display[i - 1].as_ref().map(|s| match s {
                            PSlot::Unit(x) => *x,
                            PSlot::Arg(m) => m.src(),
                        })
                    } else {
                        None
                    }
                });
                if let Some(x) = inferred {
                    display[i] = Some(PSlot::Unit(x));
                    progressed = true;
                }
            }
            if display.iter().all(Option::is_some) {
                break;
            }
            if !progressed {
                let position = display.iter().position(Option::is_none).expect("some missing");
                return Err(ExprError::UnanchoredUnit { position: position + 1 });
            }
        }
        let display: Vec<PSlot> = display.into_iter().map(|s| s.expect("filled")).collect();
        apply_p_display(self.field, &display)
    }
}

enum Factor {
    Scalar(Scalar),
    Morphism(Morphism),
}
