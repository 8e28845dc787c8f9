//! The unit-completion operad, realized on line quivers.
//!
//! The arity-`n` component is modelled inside the weakly unital presentation
//! on the line quiver `x0 → x1 → ⋯ → xn` whose generators `f1, …, fn` are
//! closed of degree 0: a hom word from `x0` to `xn` uses every generator
//! exactly once, so it is a planar `n`-ary operation on a composable chain
//! of morphisms, with `fk` marking the k-th input counted from the
//! first-applied end.  Weak-unit letters `id(x)` and `p`-nodes carrying
//! formal unit slots supply the operations that absorb units; because the
//! input generators are closed, the hom differential of such a word is
//! exactly the differential of the operation it denotes.
//!
//! Conventions:
//!
//! * **Planar numbering.** Substitution slot 1 is the first-applied input
//!   (the rightmost factor of the rendered word).  Inside a `p`-node the
//!   slot sequence is stored in application order as well, while the
//!   rendered mask `p{n;i,…}` counts from the other (last-applied) end.
//! * **Degrees.** Inputs contribute 0, an `n`-slot node contributes
//!   `−(n−1)` plus its argument degrees, so every monomial has degree ≤ 0.
//! * **Signed substitution.** `compose_at` inserts the inner word in place
//!   of a leaf with the sign `(−1)^{|inner| · B}`, where `B` is the total
//!   degree applied strictly before that leaf in the outer monomial.  With
//!   this sign, substitution is a chain map:
//!   `d(a ∘ᵢ b) = da ∘ᵢ b + (−1)^{|a|} a ∘ᵢ db`
//!   (the unsigned splice satisfies no such rule; see the unit tests).
//! * **Canonical basis order.** Monomials are listed in the derived
//!   structural order on words (generator letters before unit letters
//!   before nodes, recursively), frozen by the examples in the unit tests.

use std::collections::BTreeMap;
use std::fmt;

use crate::category::{
    enumerate_hom, hom_complex_window, CategoryError, EnumCaps, HomBasis, Presentation,
    Unitality,
};
use crate::expr::{
    render_morphism, render_word, Atom, ExprError, GenId, Morphism, ObjectId, PNode, Quiver,
    Slot, Word,
};
use crate::linalg::{DegreeReport, FieldSpec, LinalgError, Scalar};

/// Errors from operad-level operations.
#[derive(Debug, thiserror::Error)]
pub enum OperadError {
    #[error("substitution position {position} out of range 1..={arity}")]
    Position { position: usize, arity: usize },
    #[error("operands live over different coefficient fields")]
    FieldMismatch,
    #[error(
        "basis for arity {arity}, degrees [{lo}, {hi}], unit budget {units} \
         has {count} monomials, over the cap {cap}"
    )]
    ResourceExceeded { arity: usize, lo: i64, hi: i64, units: usize, count: usize, cap: usize },
    #[error("d² ≠ 0 at {monomial}: d(d(·)) = {witness}")]
    DifferentialSquare { monomial: String, witness: String },
    #[error("d raised the unit count of {monomial}: image term {image}")]
    FiltrationRaised { monomial: String, image: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

// ---------------------------------------------------------------------------
// Line-quiver contexts
// ---------------------------------------------------------------------------

/// The quiver `x0 → x1 → ⋯ → xn` with one degree-0 generator `f{k}` from
/// `x{k−1}` to `x{k}`.
pub fn line_quiver(n: usize) -> Quiver {
    let mut q = Quiver::new();
    let objects: Vec<ObjectId> = (0..=n).map(|i| q.add_object(&format!("x{i}"))).collect();
    for k in 1..=n {
        q.add_gen(&format!("f{k}"), objects[k - 1], objects[k], 0);
    }
    q
}

/// A weakly unital presentation on [`line_quiver`] with all generators
/// closed; the ambient category in which arity-`n` operations are words.
pub struct LineCtx {
    n: usize,
    pres: Presentation,
}

impl LineCtx {
    pub fn new(field: FieldSpec, n: usize) -> LineCtx {
        let mut pres = Presentation::new(field, Unitality::WeaklyUnital);
        let objects: Vec<ObjectId> =
            (0..=n).map(|i| pres.add_object(&format!("x{i}"))).collect();
        for k in 1..=n {
            pres.add_gen(&format!("f{k}"), objects[k - 1], objects[k], 0);
        }
        LineCtx { n, pres }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn presentation(&self) -> &Presentation {
        &self.pres
    }

    pub fn quiver(&self) -> &Quiver {
        self.pres.quiver()
    }

    /// `x0`, the source of every operation word.
    pub fn source(&self) -> ObjectId {
        ObjectId(0)
    }

    /// `xn`, the target of every operation word.
    pub fn target(&self) -> ObjectId {
        ObjectId(self.n as u32)
    }
}

/// True when `w` uses each of the `arity` inputs exactly once.
fn uses_each_input_once(w: &Word, arity: usize) -> bool {
    let usage = w.gen_usage();
    usage.len() == arity && usage.iter().all(|(g, &count)| (g.0 as usize) < arity && count == 1)
}

// ---------------------------------------------------------------------------
// Monomials and elements
// ---------------------------------------------------------------------------

/// A basis operation: a hom word on the arity-`n` line quiver using every
/// input exactly once.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OperadMonomial {
    arity: usize,
    word: Word,
}

impl OperadMonomial {
    /// Wrap a word over [`line_quiver`]`(arity)`, validating endpoints and
    /// single-use inputs.
    pub fn from_word(arity: usize, word: Word) -> Result<OperadMonomial, OperadError> {
        if word.src() != ObjectId(0) || word.dst() != ObjectId(arity as u32) {
            return Err(OperadError::Invalid(format!(
                "operation word must run x0 → x{arity}"
            )));
        }
        if word.is_identity() {
            return Err(OperadError::Invalid(
                "the empty word is not an operation; the 0-ary unit is the letter id(x0)"
                    .to_string(),
            ));
        }
        if !uses_each_input_once(&word, arity) {
            return Err(OperadError::Invalid(format!(
                "operation word must use each of the {arity} inputs exactly once"
            )));
        }
        Ok(OperadMonomial { arity, word })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i64 {
        self.word.degree()
    }

    /// Weak-unit letters plus formal unit slots, recursively.
    pub fn unit_count(&self) -> usize {
        self.word.unit_count()
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    /// The letter sequence in application order.
    pub fn letters(&self) -> Vec<Letter> {
        word_letters(&self.word)
    }

    pub fn render(&self) -> String {
        render_word(&line_quiver(self.arity), &self.word)
    }
}

/// One letter of an operation word, in application order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Letter {
    /// The k-th input, 1-based, counted from the first-applied end.
    InputLeaf(usize),
    /// A weak-unit letter.
    JUnit,
    /// An `arity`-slot node.  `unit_positions` are the 1-based slot indices
    /// of the formal units in application order (the rendered mask counts
    /// the same slots from the last-applied end); `args` are the remaining
    /// slots' words, also in application order.
    PNode { arity: usize, unit_positions: Vec<usize>, args: Vec<Vec<Letter>> },
}

fn word_letters(w: &Word) -> Vec<Letter> {
    w.atoms().iter().map(atom_letter).collect()
}

fn atom_letter(a: &Atom) -> Letter {
    match a {
        Atom::Gen { id, .. } => Letter::InputLeaf(id.0 as usize + 1),
        Atom::J(_) => Letter::JUnit,
        Atom::P(p) => {
            let mut unit_positions = Vec::new();
            let mut args = Vec::new();
            for (i, s) in p.slots().iter().enumerate() {
                match s {
                    Slot::Unit(_) => unit_positions.push(i + 1),
                    Slot::Arg(w) => args.push(word_letters(w)),
                }
            }
            Letter::PNode { arity: p.arity(), unit_positions, args }
        }
    }
}

/// A homogeneous linear combination of operations of one arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperadElement {
    arity: usize,
    m: Morphism,
}

impl OperadElement {
    pub fn zero(field: FieldSpec, arity: usize, degree: i64) -> OperadElement {
        OperadElement {
            arity,
            m: Morphism::zero(field, ObjectId(0), ObjectId(arity as u32), degree),
        }
    }

    pub fn from_monomial(field: FieldSpec, mono: &OperadMonomial) -> OperadElement {
        OperadElement { arity: mono.arity, m: Morphism::word(field, mono.word.clone()) }
    }

    /// The operad unit: the 1-ary pass-through operation.
    pub fn identity(field: FieldSpec) -> OperadElement {
        let q = line_quiver(1);
        OperadElement { arity: 1, m: Morphism::word(field, Word::atom(q.gen_atom(GenId(0)))) }
    }

    /// The 0-ary weak-unit operation.
    pub fn weak_unit(field: FieldSpec) -> OperadElement {
        OperadElement { arity: 0, m: Morphism::word(field, Word::atom(Atom::J(ObjectId(0)))) }
    }

    /// Wrap a morphism over [`line_quiver`]`(arity)`, validating each term.
    pub fn from_morphism(arity: usize, m: Morphism) -> Result<OperadElement, OperadError> {
        if m.src() != ObjectId(0) || m.dst() != ObjectId(arity as u32) {
            return Err(OperadError::Invalid(format!(
                "operad element of arity {arity} must run x0 → x{arity}"
            )));
        }
        for (w, _) in m.terms() {
            if !uses_each_input_once(w, arity) {
                return Err(OperadError::Invalid(format!(
                    "term does not use each of the {arity} inputs exactly once"
                )));
            }
        }
        Ok(OperadElement { arity, m })
    }

    pub fn field(&self) -> FieldSpec {
        self.m.field()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i64 {
        self.m.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    pub fn morphism(&self) -> &Morphism {
        &self.m
    }

    pub fn monomials(&self) -> Vec<(OperadMonomial, Scalar)> {
        self.m
            .terms()
            .map(|(w, c)| (OperadMonomial { arity: self.arity, word: w.clone() }, c.clone()))
            .collect()
    }

    pub fn add(&self, other: &OperadElement) -> Result<OperadElement, OperadError> {
        if self.arity != other.arity {
            return Err(OperadError::Invalid(format!(
                "cannot add arities {} and {}",
                self.arity, other.arity
            )));
        }
        Ok(OperadElement { arity: self.arity, m: self.m.add(&other.m)? })
    }

    pub fn sub(&self, other: &OperadElement) -> Result<OperadElement, OperadError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> OperadElement {
        OperadElement { arity: self.arity, m: self.m.neg() }
    }

    pub fn scale(&self, s: &Scalar) -> OperadElement {
        OperadElement { arity: self.arity, m: self.m.scale(s) }
    }

    /// The hom differential over the line presentation (inputs are closed).
    pub fn differential(&self) -> Result<OperadElement, OperadError> {
        let ctx = LineCtx::new(self.field(), self.arity);
        Ok(OperadElement { arity: self.arity, m: ctx.presentation().differential(&self.m)? })
    }

    /// Substitute `inner` for the `position`-th input (1-based, counted
    /// from the first-applied end) in every monomial, with the Koszul sign
    /// `(−1)^{|inner| · B}` per outer monomial, `B` the degree applied
    /// before that input.
    pub fn compose_at(
        &self,
        position: usize,
        inner: &OperadElement,
    ) -> Result<OperadElement, OperadError> {
        if self.field() != inner.field() {
            return Err(OperadError::FieldMismatch);
        }
        if position == 0 || position > self.arity {
            return Err(OperadError::Position { position, arity: self.arity });
        }
        let k = inner.arity;
        let res_arity = self.arity + k - 1;
        let rq = line_quiver(res_arity);
        let mut out = Morphism::zero(
            self.field(),
            ObjectId(0),
            ObjectId(res_arity as u32),
            self.degree() + inner.degree(),
        );
        let target = GenId((position - 1) as u32);
        for (v, cv) in inner.m.terms() {
            let inner_atoms = shift_atoms(v.atoms(), (position - 1) as u32, &rq);
            let splice = Splice {
                position: position as u32,
                inner_arity: k as u32,
                inner_atoms: &inner_atoms,
                rq: &rq,
            };
            for (w, cw) in self.m.terms() {
                let b = before_degree(w, target)
                    .expect("outer monomial uses every input exactly once");
                out.add_term(splice.map_word(w), cw.mul(cv).with_sign(inner.degree() * b));
            }
        }
        Ok(OperadElement { arity: res_arity, m: out })
    }

    /// Image in the strictly unital quotient: monomials containing a node
    /// die, unit letters are absorbed, and what remains of arity `n` is the
    /// single composition operation, so the image is one coefficient.
    pub fn project_assoc_plus(&self) -> AssocPlus {
        let mut coeff = self.field().zero();
        for (w, c) in self.m.terms() {
            if w.atoms().iter().any(|a| matches!(a, Atom::P(_))) {
                continue;
            }
            debug_assert!(
                w.atoms()
                    .iter()
                    .filter_map(|a| match a {
                        Atom::Gen { id, .. } => Some(id.0),
                        _ => None,
                    })
                    .eq(0..self.arity as u32),
                "node-free operation words list their inputs in planar order"
            );
            coeff = coeff.add(c);
        }
        AssocPlus { arity: self.arity, coeff }
    }

    pub fn render(&self) -> String {
        render_morphism(&line_quiver(self.arity), &self.m)
    }
}

/// An element of the strictly unital quotient, whose arity-`n` component is
/// spanned by the single composition operation `mu_n` (`mu_0` is the strict
/// unit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssocPlus {
    pub arity: usize,
    pub coeff: Scalar,
}

impl AssocPlus {
    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

impl fmt::Display for AssocPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_zero() {
            write!(f, "0")
        } else if self.coeff.is_one() {
            write!(f, "mu_{}", self.arity)
        } else {
            write!(f, "{}*mu_{}", self.coeff, self.arity)
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution machinery
// ---------------------------------------------------------------------------

/// Total degree applied strictly before the unique `target` leaf in `w`:
/// full degrees of earlier top-level atoms, full degrees of earlier slots
/// inside any node on the path to the leaf, and the leaf's own arg-word
/// prefix, recursively.  `None` when `target` does not occur.
fn before_degree(w: &Word, target: GenId) -> Option<i64> {
    let mut acc = 0i64;
    if scan_before(w.atoms(), target, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

fn scan_before(atoms: &[Atom], target: GenId, acc: &mut i64) -> bool {
    for a in atoms {
        match a {
            Atom::Gen { id, degree, .. } => {
                if *id == target {
                    return true;
                }
                *acc += *degree;
            }
            Atom::J(_) => {}
            Atom::P(p) => {
                if atom_contains(a, target) {
                    for s in p.slots() {
                        if let Slot::Arg(inner) = s {
                            if word_contains(inner, target) {
                                let found = scan_before(inner.atoms(), target, acc);
                                debug_assert!(found, "containment was just verified");
                                return true;
                            }
                            *acc += inner.degree();
                        }
                    }
                    unreachable!("containment was just verified");
                }
                *acc += a.degree();
            }
        }
    }
    false
}

fn word_contains(w: &Word, g: GenId) -> bool {
    w.atoms().iter().any(|a| atom_contains(a, g))
}

fn atom_contains(a: &Atom, g: GenId) -> bool {
    match a {
        Atom::Gen { id, .. } => *id == g,
        Atom::J(_) => false,
        Atom::P(p) => p.slots().iter().any(|s| match s {
            Slot::Unit(_) => false,
            Slot::Arg(w) => word_contains(w, g),
        }),
    }
}

/// Re-index an inner operation word by `offset` objects/inputs, rebuilding
/// generator atoms against the result quiver `rq`.
fn shift_atoms(atoms: &[Atom], offset: u32, rq: &Quiver) -> Vec<Atom> {
    atoms
        .iter()
        .map(|a| match a {
            Atom::Gen { id, .. } => rq.gen_atom(GenId(id.0 + offset)),
            Atom::J(x) => Atom::J(ObjectId(x.0 + offset)),
            Atom::P(p) => {
                let slots = p
                    .slots()
                    .iter()
                    .map(|s| match s {
                        Slot::Unit(x) => Slot::Unit(ObjectId(x.0 + offset)),
                        Slot::Arg(w) => Slot::Arg(
                            Word::from_atoms(
                                shift_atoms(w.atoms(), offset, rq),
                                ObjectId(w.src().0 + offset),
                            )
                            .expect("re-indexing preserves composability"),
                        ),
                    })
                    .collect();
                Atom::P(PNode::new(slots).expect("re-indexing preserves node shape"))
            }
        })
        .collect()
}

/// Planar substitution of a fixed re-indexed inner word for one input leaf.
struct Splice<'a> {
    /// 1-based leaf being substituted.
    position: u32,
    inner_arity: u32,
    inner_atoms: &'a [Atom],
    rq: &'a Quiver,
}

impl Splice<'_> {
    fn map_obj(&self, x: ObjectId) -> ObjectId {
        if x.0 < self.position {
            x
        } else {
            ObjectId(x.0 + self.inner_arity - 1)
        }
    }

    fn map_word(&self, w: &Word) -> Word {
        Word::from_atoms(self.map_atoms(w.atoms()), self.map_obj(w.src()))
            .expect("substitution preserves composability")
    }

    fn map_atoms(&self, atoms: &[Atom]) -> Vec<Atom> {
        let mut out = Vec::with_capacity(atoms.len());
        for a in atoms {
            match a {
                Atom::Gen { id, .. } => {
                    if id.0 + 1 == self.position {
                        out.extend(self.inner_atoms.iter().cloned());
                    } else if id.0 + 1 < self.position {
                        out.push(self.rq.gen_atom(*id));
                    } else {
                        out.push(self.rq.gen_atom(GenId(id.0 + self.inner_arity - 1)));
                    }
                }
                Atom::J(x) => out.push(Atom::J(self.map_obj(*x))),
                Atom::P(p) => {
                    let slots = p
                        .slots()
                        .iter()
                        .map(|s| match s {
                            Slot::Unit(x) => Slot::Unit(self.map_obj(*x)),
                            Slot::Arg(w) => Slot::Arg(self.map_word(w)),
                        })
                        .collect();
                    out.push(Atom::P(
                        PNode::new(slots).expect("substitution preserves node shape"),
                    ));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Bases, sweeps, cohomology
// ---------------------------------------------------------------------------

/// All operations of the given arity and degree with at most `max_units`
/// unit letters, in the canonical order.  Errors when the count exceeds
/// `cap`.
pub fn enumerate_basis(
    field: FieldSpec,
    arity: usize,
    degree: i64,
    max_units: usize,
    cap: usize,
) -> Result<Vec<OperadMonomial>, OperadError> {
    let basis = window_basis(field, arity, degree, degree, max_units, cap)?;
    Ok(basis
        .words_at(degree)
        .iter()
        .map(|w| OperadMonomial { arity, word: w.clone() })
        .collect())
}

/// The single-use hom basis for a degree window, shared by the sweeps and
/// the cohomology tables.
fn window_basis(
    field: FieldSpec,
    arity: usize,
    lo: i64,
    hi: i64,
    max_units: usize,
    cap: usize,
) -> Result<HomBasis, OperadError> {
    let ctx = LineCtx::new(field, arity);
    let caps = EnumCaps {
        max_gen_uses: vec![1; arity],
        max_units,
        degree_lo: lo,
        degree_hi: hi,
    };
    let basis = HomBasis::new(enumerate_hom(
        ctx.quiver(),
        Unitality::WeaklyUnital,
        ctx.source(),
        ctx.target(),
        &caps,
    ))
    .filtered(|w| uses_each_input_once(w, arity));
    let count = basis.total_dim();
    if count > cap {
        return Err(OperadError::ResourceExceeded {
            arity,
            lo,
            hi,
            units: max_units,
            count,
            cap,
        });
    }
    Ok(basis)
}

/// Check `d² = 0`, the unit-count filtration, and input bookkeeping on the
/// whole basis with degrees in `[degree_lo, 0]` and at most `max_units`
/// unit letters.  Returns the number of monomials checked.
pub fn sweep_d_squared(
    field: FieldSpec,
    arity: usize,
    degree_lo: i64,
    max_units: usize,
    cap: usize,
) -> Result<usize, OperadError> {
    let ctx = LineCtx::new(field, arity);
    let basis = window_basis(field, arity, degree_lo, 0, max_units, cap)?;
    let mut checked = 0;
    for words in basis.by_degree().values() {
        for w in words {
            let m = Morphism::word(field, w.clone());
            let dm = ctx.presentation().differential(&m)?;
            for (image, _) in dm.terms() {
                if image.unit_count() > w.unit_count() {
                    return Err(OperadError::FiltrationRaised {
                        monomial: render_word(ctx.quiver(), w),
                        image: render_word(ctx.quiver(), image),
                    });
                }
                debug_assert!(
                    uses_each_input_once(image, arity),
                    "d preserves single-use inputs"
                );
            }
            let ddm = ctx.presentation().differential(&dm)?;
            if !ddm.is_zero() {
                return Err(OperadError::DifferentialSquare {
                    monomial: render_word(ctx.quiver(), w),
                    witness: render_morphism(ctx.quiver(), &ddm),
                });
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Cohomology of one arity over a degree window, truncated by unit count.
#[derive(Clone, Debug)]
pub struct OperadCohomology {
    pub arity: usize,
    pub lo: i64,
    pub hi: i64,
    pub u_max: usize,
    /// Per unit budget `u = 0, …, u_max`, the degree reports of the
    /// truncation `{unit count ≤ u}` (a subcomplex, enforced at build
    /// time).
    pub per_u: BTreeMap<usize, BTreeMap<i64, DegreeReport>>,
    /// True when the two largest truncations agree on every comparison
    /// degree (see [`OperadCohomology::comparison_degrees`]).
    pub stabilized: bool,
}

impl OperadCohomology {
    /// The deepest degree any word of this arity can reach within a unit
    /// budget: a single maximal tree has `arity + units` leaves, hence
    /// degree `−(arity + units − 1)`; with no units there are no nodes at
    /// all and every word sits in degree 0.
    ///
    /// This is the unit-direction analogue of a window edge.  At its own
    /// edge degree a truncation has no incoming differential, so kernel
    /// classes there are truncation artifacts (the next budget kills them
    /// one degree deeper), exactly like the unreliable low edge of a degree
    /// window.
    pub fn layer_edge(arity: usize, units: usize) -> i64 {
        if units == 0 {
            0
        } else {
            1 - (arity + units) as i64
        }
    }

    /// Degrees on which truncation levels `u_small` and `u_small + 1` are
    /// compared: the interior of the window, restricted to degrees strictly
    /// above the shallower layer's edge, plus the top edge when it is 0 —
    /// every monomial has degree ≤ 0, so nothing above the window exists
    /// and that edge is structural, not an artifact.
    pub fn comparison_degrees(
        arity: usize,
        lo: i64,
        hi: i64,
        u_small: usize,
    ) -> impl Iterator<Item = i64> {
        let edge = OperadCohomology::layer_edge(arity, u_small);
        (lo + 1..hi)
            .filter(move |&d| d > edge)
            .chain(if hi == 0 { Some(0) } else { None })
    }

    pub fn report(&self, u: usize) -> &BTreeMap<i64, DegreeReport> {
        &self.per_u[&u]
    }

    pub fn h_dim(&self, u: usize, degree: i64) -> usize {
        self.per_u[&u][&degree].h_dim
    }
}

/// Compute the truncated cohomology tables of one arity for every unit
/// budget up to `u_max` (≥ 1), with the stabilization verdict comparing
/// `u_max − 1` against `u_max`.
pub fn operad_cohomology(
    field: FieldSpec,
    arity: usize,
    lo: i64,
    hi: i64,
    u_max: usize,
    cap: usize,
) -> Result<OperadCohomology, OperadError> {
    if lo > hi {
        return Err(OperadError::Invalid(format!("window [{lo}, {hi}] is empty")));
    }
    if u_max == 0 {
        return Err(OperadError::Invalid(
            "stabilization needs u_max ≥ 1 to compare two truncations".to_string(),
        ));
    }
    let ctx = LineCtx::new(field, arity);
    let all = window_basis(field, arity, lo, hi, u_max, cap)?;
    let mut per_u = BTreeMap::new();
    for u in 0..=u_max {
        let basis = all.filtered(|w| w.unit_count() <= u);
        let window = hom_complex_window(ctx.presentation(), &basis, lo, hi)?;
        per_u.insert(u, window.cohomology()?);
    }
    let stabilized = OperadCohomology::comparison_degrees(arity, lo, hi, u_max - 1)
        .all(|k| per_u[&(u_max - 1)][&k].h_dim == per_u[&u_max][&k].h_dim);
    Ok(OperadCohomology { arity, lo, hi, u_max, per_u, stabilized })
}
