//! Presentations of unital dg categories and tools to compute with them:
//! truncated hom enumeration, windowed hom complexes, finite-dimensional
//! table-backed categories, and functors given on generators.
//!
//! A [`Presentation`] is semi-free: a graded quiver of generators plus a
//! degree-+1 differential value for each generator.  Hom spaces are spanned
//! by composable words ([`crate::expr::Word`]); in the weakly unital regime
//! words may also contain weak-unit letters and `p`-nodes, and there are no
//! strict identities, while in the strictly unital regime identities are
//! empty words and no unit letters or `p`-nodes occur.
//!
//! Hom spaces of a semi-free presentation are infinite-dimensional in
//! general, so all linear algebra happens in finite truncations: an
//! [`EnumCaps`] bounds the number of uses of each generator, the total
//! number of unit letters, and the degree window, and [`enumerate_hom`]
//! lists every word inside those caps.  The differential never raises the
//! unit count and, when generators are closed, preserves generator usage
//! exactly, so natural truncations are subcomplexes; [`hom_complex_window`]
//! checks closure explicitly and reports the first escaping term otherwise.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::expr::{
    apply_p, differential, parse_morphism, render_morphism, render_word, Atom, DifferentialCtx,
    ExprError, GenId, Morphism, ObjectId, PNode, PSlot, Quiver, Slot, Word,
};
use crate::linalg::{ComplexWindow, FieldSpec, LinalgError, Scalar, SparseMatrix};

/// Errors from presentation validation, truncated enumeration, and functor
/// checks.
#[derive(Debug, thiserror::Error)]
pub enum CategoryError {
    #[error("d² ≠ 0 on generator `{gen}`: d(d {gen}) = {witness}")]
    DifferentialSquare { gen: String, witness: String },
    #[error(
        "hom basis is not closed under d at degree {degree}: d({word}) \
         contains `{image_term}`, which is outside the basis"
    )]
    NotClosed { degree: i64, word: String, image_term: String },
    #[error(
        "functor is not a chain map on generator `{gen}`: F(d {gen}) = {applied} \
         but d(F {gen}) = {differentiated}"
    )]
    NotChainMap { gen: String, applied: String, differentiated: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

// ---------------------------------------------------------------------------
// Presentations
// ---------------------------------------------------------------------------

/// Unit regime of a presentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unitality {
    /// Weak-unit letters `id(x)` and unit-coherence `p`-nodes; no strict
    /// identities.
    WeaklyUnital,
    /// Strict identities (empty words); no unit letters, no `p`-nodes.
    StrictlyUnital,
}

/// A semi-free presentation: a graded quiver plus a differential value per
/// generator (zero, i.e. closed, unless [`Presentation::set_d`] is called).
#[derive(Clone, Debug)]
pub struct Presentation {
    field: FieldSpec,
    unitality: Unitality,
    quiver: Quiver,
    d: Vec<Morphism>,
}

impl Presentation {
    pub fn new(field: FieldSpec, unitality: Unitality) -> Presentation {
        Presentation { field, unitality, quiver: Quiver::new(), d: Vec::new() }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn unitality(&self) -> Unitality {
        self.unitality
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    pub fn add_object(&mut self, name: &str) -> ObjectId {
        self.quiver.add_object(name)
    }

    /// Add a generator, initially closed (`d = 0`).
    pub fn add_gen(&mut self, name: &str, src: ObjectId, dst: ObjectId, degree: i64) -> GenId {
        let g = self.quiver.add_gen(name, src, dst, degree);
        self.d.push(Morphism::zero(self.field, src, dst, degree + 1));
        g
    }

    /// Set `d` of a generator.  The value must share the generator's
    /// endpoints, have degree one higher, and — in the strictly unital
    /// regime — contain no unit letters or `p`-nodes.
    pub fn set_d(&mut self, g: GenId, value: Morphism) -> Result<(), CategoryError> {
        let info = self.quiver.gen_info(g).clone();
        if value.field() != self.field {
            return Err(CategoryError::Validation(format!(
                "d({}) is over {}, the presentation is over {}",
                info.name,
                value.field(),
                self.field
            )));
        }
        if value.src() != info.src || value.dst() != info.dst {
            return Err(CategoryError::Validation(format!(
                "d({}) must keep endpoints",
                info.name
            )));
        }
        if !value.is_zero() && value.degree() != info.degree + 1 {
            return Err(CategoryError::Validation(format!(
                "d({}) must have degree {}, got {}",
                info.name,
                info.degree + 1,
                value.degree()
            )));
        }
        if self.unitality == Unitality::StrictlyUnital {
            for (w, _) in value.terms() {
                if w.unit_count() > 0 {
                    return Err(CategoryError::Validation(format!(
                        "d({}) contains unit letters or p-nodes, which a strictly \
                         unital presentation does not have",
                        info.name
                    )));
                }
            }
        }
        self.d[g.0 as usize] = value;
        Ok(())
    }

    /// `d` of a generator (zero morphism if the generator is closed).
    pub fn d(&self, g: GenId) -> &Morphism {
        &self.d[g.0 as usize]
    }

    /// The unit of `Hom(x, x)` in this regime: the weak-unit letter, or the
    /// empty word.
    pub fn identity(&self, x: ObjectId) -> Morphism {
        match self.unitality {
            Unitality::WeaklyUnital => Morphism::weak_unit(self.field, x),
            Unitality::StrictlyUnital => Morphism::strict_identity(self.field, x),
        }
    }

    /// Differential of an arbitrary morphism over this presentation.
    pub fn differential(&self, m: &Morphism) -> Result<Morphism, ExprError> {
        differential(self, m)
    }

    /// Check `d² = 0` on every generator (which implies it everywhere, by
    /// the Leibniz rule and the unit-coherence identities).
    pub fn check_d_squared(&self) -> Result<(), CategoryError> {
        for g in self.quiver.gens() {
            let dd = differential(self, self.d(g))?;
            if !dd.is_zero() {
                return Err(CategoryError::DifferentialSquare {
                    gen: self.quiver.gen_info(g).name.clone(),
                    witness: self.render(&dd),
                });
            }
        }
        Ok(())
    }

    /// Parse a morphism expression in this presentation's conventions.
    pub fn parse(&self, input: &str) -> Result<Morphism, ExprError> {
        parse_morphism(
            &self.quiver,
            self.field,
            self.unitality == Unitality::StrictlyUnital,
            input,
        )
    }

    /// Canonical rendering of a morphism over this presentation's quiver.
    pub fn render(&self, m: &Morphism) -> String {
        render_morphism(&self.quiver, m)
    }
}

impl DifferentialCtx for Presentation {
    fn field(&self) -> FieldSpec {
        self.field
    }

    fn d_gen(&self, g: GenId) -> Morphism {
        self.d[g.0 as usize].clone()
    }
}

// ---------------------------------------------------------------------------
// Truncated hom enumeration
// ---------------------------------------------------------------------------

/// Budget caps for truncated hom enumeration.
#[derive(Clone, Debug)]
pub struct EnumCaps {
    /// Cap on the number of uses of each generator, indexed by `GenId`.
    pub max_gen_uses: Vec<usize>,
    /// Cap on the total number of unit letters in a word (weak-unit letters
    /// plus formal unit slots, counted recursively).
    pub max_units: usize,
    /// Degrees kept after enumeration (inclusive window).
    pub degree_lo: i64,
    pub degree_hi: i64,
}

impl EnumCaps {
    /// The same use cap for every generator.
    pub fn uniform(
        quiver: &Quiver,
        uses_per_gen: usize,
        max_units: usize,
        degree_lo: i64,
        degree_hi: i64,
    ) -> EnumCaps {
        EnumCaps {
            max_gen_uses: vec![uses_per_gen; quiver.gen_count()],
            max_units,
            degree_lo,
            degree_hi,
        }
    }
}

/// Remaining resources during enumeration.
#[derive(Clone, Debug)]
struct Budget {
    gen_uses: Vec<usize>,
    units: usize,
}

impl Budget {
    fn total(&self) -> usize {
        self.gen_uses.iter().sum::<usize>() + self.units
    }

    fn spend_unit(&self) -> Option<Budget> {
        if self.units == 0 {
            return None;
        }
        let mut b = self.clone();
        b.units -= 1;
        Some(b)
    }

    fn spend_gen(&self, g: GenId) -> Option<Budget> {
        if self.gen_uses[g.0 as usize] == 0 {
            return None;
        }
        let mut b = self.clone();
        b.gen_uses[g.0 as usize] -= 1;
        Some(b)
    }
}

/// Memo key: position, remaining budget, and remaining nesting depth fully
/// determine the continuations, so enumeration from equal states is shared.
type EnumKey = (ObjectId, Vec<usize>, usize, usize);

struct Enumerator<'a> {
    quiver: &'a Quiver,
    unitality: Unitality,
    words_memo: RefCell<HashMap<EnumKey, Rc<Vec<(Word, Budget)>>>>,
    slots_memo: RefCell<HashMap<EnumKey, Rc<Vec<(Vec<Slot>, Budget)>>>>,
}

impl<'a> Enumerator<'a> {
    fn new(quiver: &'a Quiver, unitality: Unitality) -> Enumerator<'a> {
        Enumerator {
            quiver,
            unitality,
            words_memo: RefCell::new(HashMap::new()),
            slots_memo: RefCell::new(HashMap::new()),
        }
    }

    fn key(cur: ObjectId, budget: &Budget, depth: usize) -> EnumKey {
        (cur, budget.gen_uses.clone(), budget.units, depth)
    }

    /// Every word starting at `cur` within `budget` (including the empty
    /// word), paired with the budget left after it.  `depth` bounds the
    /// `p`-node nesting still allowed; every `p`-node carries at least one
    /// formal unit slot of its own, so nesting is bounded by the unit budget
    /// and starting `depth` at the total budget loses nothing — it only
    /// makes the mutual recursion with slot enumeration well-founded (the
    /// pair (total budget, depth) drops lexicographically on every call).
    fn words_from(&self, cur: ObjectId, budget: &Budget, depth: usize) -> Rc<Vec<(Word, Budget)>> {
        let key = Enumerator::key(cur, budget, depth);
        if let Some(hit) = self.words_memo.borrow().get(&key) {
            return Rc::clone(hit);
        }
        let mut out = vec![(Word::identity(cur), budget.clone())];
        for (atom, rest) in self.atoms_from(cur, budget, depth) {
            let next = atom.dst();
            for (tail, left) in self.words_from(next, &rest, depth).iter() {
                let mut atoms = vec![atom.clone()];
                atoms.extend(tail.atoms().iter().cloned());
                out.push((
                    Word::from_atoms(atoms, cur).expect("enumerated atoms chain"),
                    left.clone(),
                ));
            }
        }
        let out = Rc::new(out);
        self.words_memo.borrow_mut().insert(key, Rc::clone(&out));
        out
    }

    /// Every single atom available at `cur`.
    fn atoms_from(&self, cur: ObjectId, budget: &Budget, depth: usize) -> Vec<(Atom, Budget)> {
        let mut out = Vec::new();
        for g in self.quiver.gens() {
            if self.quiver.gen_info(g).src == cur {
                if let Some(rest) = budget.spend_gen(g) {
                    out.push((self.quiver.gen_atom(g), rest));
                }
            }
        }
        if self.unitality == Unitality::WeaklyUnital {
            if let Some(rest) = budget.spend_unit() {
                out.push((Atom::J(cur), rest));
            }
            if depth > 0 && budget.units > 0 {
                for (slots, rest) in self.slot_seqs(cur, budget, depth - 1).iter() {
                    if slots.len() >= 2 && slots.iter().any(Slot::is_unit) {
                        let node = PNode::new(slots.clone()).expect("enumerated slots are valid");
                        out.push((Atom::P(node), rest.clone()));
                    }
                }
            }
        }
        out
    }

    /// Every chained slot sequence of length ≥ 1 starting at `cur`.  Each
    /// slot consumes at least one resource: a formal unit spends a unit, an
    /// argument is a nonempty word.
    fn slot_seqs(
        &self,
        cur: ObjectId,
        budget: &Budget,
        depth: usize,
    ) -> Rc<Vec<(Vec<Slot>, Budget)>> {
        let key = Enumerator::key(cur, budget, depth);
        if let Some(hit) = self.slots_memo.borrow().get(&key) {
            return Rc::clone(hit);
        }
        let mut firsts: Vec<(Slot, Budget)> = Vec::new();
        if let Some(rest) = budget.spend_unit() {
            firsts.push((Slot::Unit(cur), rest));
        }
        for (w, rest) in self.words_from(cur, budget, depth).iter() {
            if !w.is_identity() {
                firsts.push((Slot::Arg(w.clone()), rest.clone()));
            }
        }
        let mut out = Vec::new();
        for (slot, rest) in firsts {
            let next = slot.dst();
            out.push((vec![slot.clone()], rest.clone()));
            for (tail, left) in self.slot_seqs(next, &rest, depth).iter() {
                let mut seq = Vec::with_capacity(tail.len() + 1);
                seq.push(slot.clone());
                seq.extend(tail.iter().cloned());
                out.push((seq, left.clone()));
            }
        }
        let out = Rc::new(out);
        self.slots_memo.borrow_mut().insert(key, Rc::clone(&out));
        out
    }
}

/// All composable words from `src` to `dst` within the caps, grouped by
/// degree.  In the strictly unital regime `Hom(x, x)` contains the empty
/// word; in the weakly unital regime it does not (the weak unit is the
/// letter `id(x)` instead).
pub fn enumerate_hom(
    quiver: &Quiver,
    unitality: Unitality,
    src: ObjectId,
    dst: ObjectId,
    caps: &EnumCaps,
) -> BTreeMap<i64, Vec<Word>> {
    assert_eq!(
        caps.max_gen_uses.len(),
        quiver.gen_count(),
        "one use cap per generator"
    );
    let budget = Budget { gen_uses: caps.max_gen_uses.clone(), units: caps.max_units };
    let depth = budget.total();
    let enumerator = Enumerator::new(quiver, unitality);
    let mut by_degree: BTreeMap<i64, BTreeSet<Word>> = BTreeMap::new();
    for (w, _) in enumerator.words_from(src, &budget, depth).iter() {
        if w.dst() != dst {
            continue;
        }
        if w.is_identity() && unitality == Unitality::WeaklyUnital {
            continue;
        }
        let k = w.degree();
        if k < caps.degree_lo || k > caps.degree_hi {
            continue;
        }
        let fresh = by_degree.entry(k).or_default().insert(w.clone());
        debug_assert!(fresh, "enumeration produced a duplicate word");
    }
    by_degree
        .into_iter()
        .map(|(k, set)| (k, set.into_iter().collect()))
        .collect()
}

// ---------------------------------------------------------------------------
// Windowed hom complexes
// ---------------------------------------------------------------------------

/// A degree-indexed basis of hom words with a reverse index.
#[derive(Clone, Debug)]
pub struct HomBasis {
    by_degree: BTreeMap<i64, Vec<Word>>,
    index: BTreeMap<Word, (i64, usize)>,
}

impl HomBasis {
    pub fn new(by_degree: BTreeMap<i64, Vec<Word>>) -> HomBasis {
        let mut index = BTreeMap::new();
        for (&k, words) in &by_degree {
            for (i, w) in words.iter().enumerate() {
                let previous = index.insert(w.clone(), (k, i));
                assert!(previous.is_none(), "duplicate word in hom basis");
            }
        }
        HomBasis { by_degree, index }
    }

    /// Keep only the words accepted by `keep`, re-indexing.
    pub fn filtered(&self, keep: impl Fn(&Word) -> bool) -> HomBasis {
        let by_degree = self
            .by_degree
            .iter()
            .map(|(&k, words)| (k, words.iter().filter(|w| keep(w)).cloned().collect()))
            .filter(|(_, ws): &(i64, Vec<Word>)| !ws.is_empty())
            .collect();
        HomBasis::new(by_degree)
    }

    pub fn by_degree(&self) -> &BTreeMap<i64, Vec<Word>> {
        &self.by_degree
    }

    pub fn words_at(&self, degree: i64) -> &[Word] {
        self.by_degree.get(&degree).map_or(&[], Vec::as_slice)
    }

    pub fn dim(&self, degree: i64) -> usize {
        self.words_at(degree).len()
    }

    pub fn total_dim(&self) -> usize {
        self.by_degree.values().map(Vec::len).sum()
    }

    /// Degree and position of a word, if present.
    pub fn position(&self, w: &Word) -> Option<(i64, usize)> {
        self.index.get(w).copied()
    }
}

/// Assemble the window `[lo, hi]` of the hom complex on `basis`: dimensions
/// per degree and the matrices of `d` for `lo ≤ k < hi`.  Every `d`-image of
/// a basis word (below the top degree) must itself be a linear combination
/// of basis words; the first escaping term is reported otherwise.
pub fn hom_complex_window(
    pres: &Presentation,
    basis: &HomBasis,
    lo: i64,
    hi: i64,
) -> Result<ComplexWindow, CategoryError> {
    let field = pres.field();
    let mut dims = BTreeMap::new();
    for k in lo..=hi {
        dims.insert(k, basis.dim(k));
    }
    let mut diffs = BTreeMap::new();
    for k in lo..hi {
        let mut m = SparseMatrix::zero(field, basis.dim(k + 1), basis.dim(k));
        for (col, w) in basis.words_at(k).iter().enumerate() {
            let dw = differential(pres, &Morphism::word(field, w.clone()))?;
            for (image, coeff) in dw.terms() {
                match basis.position(image) {
                    Some((_, row)) => m.set(row, col, coeff.clone()),
                    None => {
                        return Err(CategoryError::NotClosed {
                            degree: k,
                            word: render_word(pres.quiver(), w),
                            image_term: render_word(pres.quiver(), image),
                        })
                    }
                }
            }
        }
        diffs.insert(k, m);
    }
    Ok(ComplexWindow { lo, hi, dims, diffs })
}

/// Enumerate `Hom(src, dst)` within `caps` and assemble its windowed
/// complex.
pub fn hom_window(
    pres: &Presentation,
    src: ObjectId,
    dst: ObjectId,
    caps: &EnumCaps,
) -> Result<(ComplexWindow, HomBasis), CategoryError> {
    let basis = HomBasis::new(enumerate_hom(
        pres.quiver(),
        pres.unitality(),
        src,
        dst,
        caps,
    ));
    let window = hom_complex_window(pres, &basis, caps.degree_lo, caps.degree_hi)?;
    Ok((window, basis))
}

// ---------------------------------------------------------------------------
// Finite-dimensional table categories
// ---------------------------------------------------------------------------

/// One basis element of a finite-dimensional category.
#[derive(Clone, Debug)]
pub struct FdBasisElem {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub degree: i64,
}

/// A strictly unital dg category with finitely many objects and an explicit
/// homogeneous hom basis; composition and differential are tables.  Absent
/// table entries mean zero.  Identity compositions are implicit — tabulating
/// a composition that involves an identity element is an error.
#[derive(Clone, Debug)]
pub struct FiniteDimCat {
    field: FieldSpec,
    objects: Vec<String>,
    basis: Vec<FdBasisElem>,
    /// `compose[(a, b)]` = the combination `a∘b` (`b` applied first).
    compose: BTreeMap<(usize, usize), Vec<(usize, Scalar)>>,
    d: Vec<Vec<(usize, Scalar)>>,
    ids: Vec<Option<usize>>,
}

/// A linear combination of basis elements of one hom degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdMorphism {
    pub src: usize,
    pub dst: usize,
    pub degree: i64,
    pub terms: BTreeMap<usize, Scalar>,
}

impl FdMorphism {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_scaled(&mut self, elem: usize, coeff: &Scalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&elem) {
            None => {
                self.terms.insert(elem, coeff.clone());
            }
            Some(old) => {
                let new = old.add(coeff);
                if !new.is_zero() {
                    self.terms.insert(elem, new);
                }
            }
        }
    }

    pub fn add(&self, other: &FdMorphism) -> Result<FdMorphism, CategoryError> {
        if (self.src, self.dst) != (other.src, other.dst)
            || (!self.is_zero() && !other.is_zero() && self.degree != other.degree)
        {
            return Err(CategoryError::Validation(
                "cannot add morphisms of different signatures".to_string(),
            ));
        }
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (e, c) in &other.terms {
            out.add_scaled(*e, c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> FdMorphism {
        let mut out = FdMorphism { terms: BTreeMap::new(), ..*self };
        for (e, c) in &self.terms {
            out.add_scaled(*e, &c.mul(s));
        }
        out
    }

    pub fn neg(&self) -> FdMorphism {
        let mut out = FdMorphism { terms: BTreeMap::new(), ..*self };
        for (e, c) in &self.terms {
            out.add_scaled(*e, &c.neg());
        }
        out
    }

    pub fn sub(&self, other: &FdMorphism) -> Result<FdMorphism, CategoryError> {
        self.add(&other.neg())
    }
}

impl FiniteDimCat {
    pub fn new(field: FieldSpec) -> FiniteDimCat {
        FiniteDimCat {
            field,
            objects: Vec::new(),
            basis: Vec::new(),
            compose: BTreeMap::new(),
            d: Vec::new(),
            ids: Vec::new(),
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn add_object(&mut self, name: &str) -> usize {
        self.objects.push(name.to_string());
        self.ids.push(None);
        self.objects.len() - 1
    }

    /// Add a homogeneous basis element; `d` is zero until set.
    pub fn add_elem(&mut self, name: &str, src: usize, dst: usize, degree: i64) -> usize {
        assert!(src < self.objects.len() && dst < self.objects.len());
        self.basis.push(FdBasisElem { name: name.to_string(), src, dst, degree });
        self.d.push(Vec::new());
        self.basis.len() - 1
    }

    /// Declare the identity of an object (must be a degree-0 endomorphism).
    pub fn set_identity(&mut self, x: usize, elem: usize) {
        let b = &self.basis[elem];
        assert!(
            b.src == x && b.dst == x && b.degree == 0,
            "identity must be a degree-0 endomorphism of its object"
        );
        self.ids[x] = Some(elem);
    }

    /// Tabulate `later ∘ earlier`.
    pub fn set_compose(&mut self, later: usize, earlier: usize, combo: Vec<(usize, Scalar)>) {
        self.compose.insert((later, earlier), combo);
    }

    /// Tabulate `d` of a basis element.
    pub fn set_d(&mut self, elem: usize, combo: Vec<(usize, Scalar)>) {
        self.d[elem] = combo;
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_elem(&self, i: usize) -> &FdBasisElem {
        &self.basis[i]
    }

    pub fn zero(&self, src: usize, dst: usize, degree: i64) -> FdMorphism {
        FdMorphism { src, dst, degree, terms: BTreeMap::new() }
    }

    /// The basis element `i` as a morphism.
    pub fn elem(&self, i: usize) -> FdMorphism {
        let b = &self.basis[i];
        let mut terms = BTreeMap::new();
        terms.insert(i, self.field.one());
        FdMorphism { src: b.src, dst: b.dst, degree: b.degree, terms }
    }

    /// The identity of an object (panics if not declared).
    pub fn identity(&self, x: usize) -> FdMorphism {
        let elem = self.ids[x]
            .unwrap_or_else(|| panic!("object `{}` has no identity declared", self.objects[x]));
        self.elem(elem)
    }

    fn is_identity_elem(&self, i: usize) -> bool {
        let b = &self.basis[i];
        b.src == b.dst && self.ids[b.src] == Some(i)
    }

    /// `a ∘ b` on basis elements, with implicit identities.
    fn compose_basis(&self, a: usize, b: usize) -> FdMorphism {
        debug_assert_eq!(self.basis[b].dst, self.basis[a].src);
        if self.is_identity_elem(a) {
            return self.elem(b);
        }
        if self.is_identity_elem(b) {
            return self.elem(a);
        }
        let (ea, eb) = (&self.basis[a], &self.basis[b]);
        let mut out = self.zero(eb.src, ea.dst, ea.degree + eb.degree);
        if let Some(combo) = self.compose.get(&(a, b)) {
            for (e, c) in combo {
                out.add_scaled(*e, c);
            }
        }
        out
    }

    /// Bilinear composition `later ∘ earlier`.
    pub fn compose(
        &self,
        later: &FdMorphism,
        earlier: &FdMorphism,
    ) -> Result<FdMorphism, CategoryError> {
        if earlier.dst != later.src {
            return Err(CategoryError::Validation(format!(
                "morphisms do not chain: `{}` then `{}`",
                self.objects[earlier.dst], self.objects[later.src]
            )));
        }
        let mut out = self.zero(earlier.src, later.dst, later.degree + earlier.degree);
        for (a, ca) in &later.terms {
            for (b, cb) in &earlier.terms {
                let part = self.compose_basis(*a, *b).scale(&ca.mul(cb));
                for (e, c) in &part.terms {
                    out.add_scaled(*e, c);
                }
            }
        }
        Ok(out)
    }

    /// Linear differential.
    pub fn d(&self, m: &FdMorphism) -> FdMorphism {
        let mut out = self.zero(m.src, m.dst, m.degree + 1);
        for (e, c) in &m.terms {
            for (e2, c2) in &self.d[*e] {
                out.add_scaled(*e2, &c.mul(c2));
            }
        }
        out
    }

    /// Check all the axioms: identities present, closed, and untabulated;
    /// tables well-typed; `d² = 0`; the Leibniz rule; associativity.
    pub fn validate(&self) -> Result<(), CategoryError> {
        let err = |msg: String| Err(CategoryError::Validation(msg));
        for (x, id) in self.ids.iter().enumerate() {
            let Some(i) = id else {
                return err(format!("object `{}` has no identity", self.objects[x]));
            };
            if !self.d[*i].is_empty() {
                return err(format!("identity of `{}` is not closed", self.objects[x]));
            }
        }
        for (&(a, b), combo) in &self.compose {
            let (ea, eb) = (&self.basis[a], &self.basis[b]);
            if self.is_identity_elem(a) || self.is_identity_elem(b) {
                return err(format!(
                    "composition ({}, {}) involves an identity; identity compositions \
                     are implicit and must not be tabulated",
                    ea.name, eb.name
                ));
            }
            if eb.dst != ea.src {
                return err(format!("tabulated composition ({}, {}) does not chain", ea.name, eb.name));
            }
            for (e, _) in combo {
                let r = &self.basis[*e];
                if r.src != eb.src || r.dst != ea.dst || r.degree != ea.degree + eb.degree {
                    return err(format!(
                        "composition {}∘{} contains ill-typed term {}",
                        ea.name, eb.name, r.name
                    ));
                }
            }
        }
        for (i, combo) in self.d.iter().enumerate() {
            let b = &self.basis[i];
            for (e, _) in combo {
                let r = &self.basis[*e];
                if r.src != b.src || r.dst != b.dst || r.degree != b.degree + 1 {
                    return err(format!("d({}) contains ill-typed term {}", b.name, r.name));
                }
            }
            let dd = self.d(&self.d(&self.elem(i)));
            if !dd.is_zero() {
                return err(format!("d² ≠ 0 on basis element {}", b.name));
            }
        }
        for a in 0..self.basis.len() {
            for b in 0..self.basis.len() {
                if self.basis[b].dst != self.basis[a].src {
                    continue;
                }
                let ab = self.compose_basis(a, b);
                let lhs = self.d(&ab);
                let da_b = self.compose(&self.d(&self.elem(a)), &self.elem(b))?;
                let a_db = self
                    .compose(&self.elem(a), &self.d(&self.elem(b)))?
                    .scale(&self.field.one().with_sign(self.basis[a].degree));
                let rhs = da_b.add(&a_db)?;
                if !lhs.sub(&rhs)?.is_zero() {
                    return err(format!(
                        "Leibniz rule fails on {}∘{}",
                        self.basis[a].name, self.basis[b].name
                    ));
                }
                for c in 0..self.basis.len() {
                    if self.basis[c].dst != self.basis[b].src {
                        continue;
                    }
                    let left = self.compose(&ab, &self.elem(c))?;
                    let right = self.compose(&self.elem(a), &self.compose_basis(b, c))?;
                    if !left.sub(&right)?.is_zero() {
                        return err(format!(
                            "associativity fails on ({}, {}, {})",
                            self.basis[a].name, self.basis[b].name, self.basis[c].name
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Functors given on generators
// ---------------------------------------------------------------------------

/// A functor between presentations, given on objects and generators and
/// extended by substitution.  Units map to units: weak-unit letters go to
/// the target's unit (letter or empty word).  Into a weakly unital target,
/// `p`-nodes map slotwise to `p` of the evaluated slots; into a strictly
/// unital target every `p`-node maps to zero (the canonical strictification,
/// consistent with `p` vanishing when the units are strict).
#[derive(Clone, Debug)]
pub struct GenFunctor {
    obj_map: Vec<ObjectId>,
    gen_map: Vec<Morphism>,
}

impl GenFunctor {
    pub fn new(
        src: &Presentation,
        tgt: &Presentation,
        obj_map: Vec<ObjectId>,
        gen_map: Vec<Morphism>,
    ) -> Result<GenFunctor, CategoryError> {
        if obj_map.len() != src.quiver().object_count() {
            return Err(CategoryError::Validation("one image per object required".into()));
        }
        if gen_map.len() != src.quiver().gen_count() {
            return Err(CategoryError::Validation("one image per generator required".into()));
        }
        for g in src.quiver().gens() {
            let info = src.quiver().gen_info(g);
            let image = &gen_map[g.0 as usize];
            if image.field() != tgt.field() {
                return Err(CategoryError::Validation(format!(
                    "image of `{}` lives over the wrong field",
                    info.name
                )));
            }
            if image.src() != obj_map[info.src.0 as usize]
                || image.dst() != obj_map[info.dst.0 as usize]
            {
                return Err(CategoryError::Validation(format!(
                    "image of `{}` has wrong endpoints",
                    info.name
                )));
            }
            if !image.is_zero() && image.degree() != info.degree {
                return Err(CategoryError::Validation(format!(
                    "image of `{}` has wrong degree",
                    info.name
                )));
            }
            if tgt.unitality() == Unitality::StrictlyUnital {
                for (w, _) in image.terms() {
                    if w.unit_count() > 0 {
                        return Err(CategoryError::Validation(format!(
                            "image of `{}` contains unit letters, but the target is \
                             strictly unital",
                            info.name
                        )));
                    }
                }
            }
        }
        Ok(GenFunctor { obj_map, gen_map })
    }

    pub fn obj(&self, x: ObjectId) -> ObjectId {
        self.obj_map[x.0 as usize]
    }

    pub fn gen_image(&self, g: GenId) -> &Morphism {
        &self.gen_map[g.0 as usize]
    }

    /// Evaluate on an arbitrary morphism by substitution.
    pub fn eval(&self, tgt: &Presentation, m: &Morphism) -> Result<Morphism, CategoryError> {
        let mut out = Morphism::zero(
            tgt.field(),
            self.obj(m.src()),
            self.obj(m.dst()),
            m.degree(),
        );
        for (w, c) in m.terms() {
            out = out.add(&self.eval_word(tgt, w)?.scale(c))?;
        }
        Ok(out)
    }

    fn eval_word(&self, tgt: &Presentation, w: &Word) -> Result<Morphism, CategoryError> {
        if w.is_identity() {
            return Ok(tgt.identity(self.obj(w.src())));
        }
        let mut acc: Option<Morphism> = None;
        for atom in w.atoms() {
            let image = self.eval_atom(tgt, atom)?;
            acc = Some(match acc {
                None => image,
                Some(prev) => image.after(&prev)?,
            });
        }
        Ok(acc.expect("nonempty word"))
    }

    fn eval_atom(&self, tgt: &Presentation, atom: &Atom) -> Result<Morphism, CategoryError> {
        match atom {
            Atom::Gen { id, .. } => Ok(self.gen_map[id.0 as usize].clone()),
            Atom::J(x) => Ok(tgt.identity(self.obj(*x))),
            Atom::P(node) => match tgt.unitality() {
                Unitality::StrictlyUnital => Ok(Morphism::zero(
                    tgt.field(),
                    self.obj(node.src()),
                    self.obj(node.dst()),
                    node.degree(),
                )),
                Unitality::WeaklyUnital => {
                    let mut slots = Vec::with_capacity(node.arity());
                    for s in node.slots() {
                        slots.push(match s {
                            Slot::Unit(x) => PSlot::Unit(self.obj(*x)),
                            Slot::Arg(w) => PSlot::Arg(self.eval_word(tgt, w)?),
                        });
                    }
                    Ok(apply_p(tgt.field(), &slots)?)
                }
            },
        }
    }

    /// Check `F(d g) = d(F g)` on every generator.
    pub fn check_chain_map(
        &self,
        src: &Presentation,
        tgt: &Presentation,
    ) -> Result<(), CategoryError> {
        for g in src.quiver().gens() {
            let applied = self.eval(tgt, src.d(g))?;
            let differentiated = tgt.differential(&self.gen_map[g.0 as usize])?;
            if !applied.sub(&differentiated)?.is_zero() {
                return Err(CategoryError::NotChainMap {
                    gen: src.quiver().gen_info(g).name.clone(),
                    applied: tgt.render(&applied),
                    differentiated: tgt.render(&differentiated),
                });
            }
        }
        Ok(())
    }
}

/// A functor from a presentation into a finite-dimensional table category:
/// weak-unit letters map to identities, `p`-nodes map to zero.
#[derive(Clone, Debug)]
pub struct FunctorToFd {
    obj_map: Vec<usize>,
    gen_map: Vec<FdMorphism>,
}

impl FunctorToFd {
    pub fn new(
        src: &Presentation,
        tgt: &FiniteDimCat,
        obj_map: Vec<usize>,
        gen_map: Vec<FdMorphism>,
    ) -> Result<FunctorToFd, CategoryError> {
        if obj_map.len() != src.quiver().object_count() {
            return Err(CategoryError::Validation("one image per object required".into()));
        }
        if gen_map.len() != src.quiver().gen_count() {
            return Err(CategoryError::Validation("one image per generator required".into()));
        }
        if obj_map.iter().any(|&o| o >= tgt.object_count()) {
            return Err(CategoryError::Validation("object image out of range".into()));
        }
        for g in src.quiver().gens() {
            let info = src.quiver().gen_info(g);
            let image = &gen_map[g.0 as usize];
            if image.src != obj_map[info.src.0 as usize]
                || image.dst != obj_map[info.dst.0 as usize]
                || (!image.is_zero() && image.degree != info.degree)
            {
                return Err(CategoryError::Validation(format!(
                    "image of `{}` has wrong signature",
                    info.name
                )));
            }
        }
        Ok(FunctorToFd { obj_map, gen_map })
    }

    pub fn obj(&self, x: ObjectId) -> usize {
        self.obj_map[x.0 as usize]
    }

    pub fn eval(&self, tgt: &FiniteDimCat, m: &Morphism) -> Result<FdMorphism, CategoryError> {
        let mut out = tgt.zero(self.obj(m.src()), self.obj(m.dst()), m.degree());
        for (w, c) in m.terms() {
            let image = self.eval_word(tgt, w)?.scale(c);
            out = out.add(&image)?;
        }
        Ok(out)
    }

    fn eval_word(&self, tgt: &FiniteDimCat, w: &Word) -> Result<FdMorphism, CategoryError> {
        if w.is_identity() {
            return Ok(tgt.identity(self.obj(w.src())));
        }
        let mut acc: Option<FdMorphism> = None;
        for atom in w.atoms() {
            let image = match atom {
                Atom::Gen { id, .. } => self.gen_map[id.0 as usize].clone(),
                Atom::J(x) => tgt.identity(self.obj(*x)),
                Atom::P(node) => {
                    tgt.zero(self.obj(node.src()), self.obj(node.dst()), node.degree())
                }
            };
            acc = Some(match acc {
                None => image,
                Some(prev) => tgt.compose(&image, &prev)?,
            });
        }
        Ok(acc.expect("nonempty word"))
    }

    /// Check `F(d g) = d(F g)` on every generator.
    pub fn check_chain_map(
        &self,
        src: &Presentation,
        tgt: &FiniteDimCat,
    ) -> Result<(), CategoryError> {
        for g in src.quiver().gens() {
            let applied = self.eval(tgt, src.d(g))?;
            let differentiated = tgt.d(&self.gen_map[g.0 as usize]);
            if !applied.sub(&differentiated)?.is_zero() {
                let show = |m: &FdMorphism| {
                    if m.is_zero() {
                        return "0".to_string();
                    }
                    m.terms
                        .iter()
                        .map(|(e, c)| format!("{}*{}", c, tgt.basis_elem(*e).name))
                        .collect::<Vec<_>>()
                        .join(" + ")
                };
                return Err(CategoryError::NotChainMap {
                    gen: src.quiver().gen_info(g).name.clone(),
                    applied: show(&applied),
                    differentiated: show(&differentiated),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat() -> FieldSpec {
        FieldSpec::Rationals
    }

    #[test]
    fn d_square_check_finds_witness() {
        let mut pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = pres.add_object("x");
        let a = pres.add_gen("a", x, x, 0);
        let b = pres.add_gen("b", x, x, 1);
        let c = pres.add_gen("c", x, x, 2);
        pres.set_d(a, Morphism::gen(rat(), pres.quiver(), b)).unwrap();
        pres.set_d(b, Morphism::gen(rat(), pres.quiver(), c)).unwrap();
        match pres.check_d_squared() {
            Err(CategoryError::DifferentialSquare { gen, witness }) => {
                assert_eq!(gen, "a");
                assert_eq!(witness, "c");
            }
            other => panic!("expected a d² witness, got {other:?}"),
        }

        let mut good = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = good.add_object("x");
        let a = good.add_gen("a", x, x, 0);
        let b = good.add_gen("b", x, x, 1);
        good.set_d(a, Morphism::gen(rat(), good.quiver(), b)).unwrap();
        good.check_d_squared().unwrap();
    }

    #[test]
    fn set_d_validates_signature_and_regime() {
        let mut pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = pres.add_object("x");
        let a = pres.add_gen("a", x, x, 0);
        let c = pres.add_gen("c", x, x, 2);
        let bad_degree = Morphism::gen(rat(), pres.quiver(), c);
        assert!(matches!(
            pres.set_d(a, bad_degree),
            Err(CategoryError::Validation(_))
        ));

        let mut strict = Presentation::new(rat(), Unitality::StrictlyUnital);
        let x = strict.add_object("x");
        let s = strict.add_gen("s", x, x, -1);
        let j_value = Morphism::weak_unit(rat(), x);
        assert!(matches!(
            strict.set_d(s, j_value),
            Err(CategoryError::Validation(_))
        ));
        // The strict identity (empty word) is fine.
        strict.set_d(s, Morphism::strict_identity(rat(), x)).unwrap();
    }

    /// One generator `f: x → y` of degree 0.  All hom words within small unit
    /// caps are hand-counted; this pins the enumerator exactly.
    #[test]
    fn enumeration_matches_hand_counts() {
        let mut pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = pres.add_object("x");
        let y = pres.add_object("y");
        pres.add_gen("f", x, y, 0);

        // Unit cap 1: exactly five words from x to y.
        let caps = EnumCaps::uniform(pres.quiver(), 1, 1, -5, 5);
        let hom = enumerate_hom(pres.quiver(), Unitality::WeaklyUnital, x, y, &caps);
        let rendered: BTreeSet<String> = hom
            .values()
            .flatten()
            .map(|w| render_word(pres.quiver(), w))
            .collect();
        let expected: BTreeSet<String> = [
            "f",
            "id(y)*f",
            "f*id(x)",
            "p{2;2@x}(f)",
            "p{2;1@y}(f)",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(rendered, expected);

        // Unit cap 2: hand-counted dimensions per degree.
        let caps = EnumCaps::uniform(pres.quiver(), 1, 2, -5, 5);
        let hom = enumerate_hom(pres.quiver(), Unitality::WeaklyUnital, x, y, &caps);
        let dims: BTreeMap<i64, usize> = hom.iter().map(|(k, ws)| (*k, ws.len())).collect();
        assert_eq!(dims, BTreeMap::from([(-2, 13), (-1, 16), (0, 6)]));

        // Endomorphisms of x never use f; hand-listed at unit cap 2.
        let endo = enumerate_hom(pres.quiver(), Unitality::WeaklyUnital, x, x, &caps);
        let rendered: BTreeSet<String> = endo
            .values()
            .flatten()
            .map(|w| render_word(pres.quiver(), w))
            .collect();
        let expected: BTreeSet<String> = [
            "id(x)",
            "id(x)*id(x)",
            "p{2;1@x,2@x}()",
            "p{2;1@x}(id(x))",
            "p{2;2@x}(id(x))",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(rendered, expected);

        // Caps are monotone: everything at unit cap 1 persists at cap 2.
        let small = EnumCaps::uniform(pres.quiver(), 1, 1, -5, 5);
        let small_hom = enumerate_hom(pres.quiver(), Unitality::WeaklyUnital, x, y, &small);
        for (k, words) in &small_hom {
            let bigger: BTreeSet<&Word> = hom[k].iter().collect();
            for w in words {
                assert!(bigger.contains(w), "word lost when caps grow");
            }
        }

        // Strict regime: only generator words and the empty identity.
        let strict_hom = enumerate_hom(pres.quiver(), Unitality::StrictlyUnital, x, y, &caps);
        assert_eq!(strict_hom.len(), 1);
        assert_eq!(strict_hom[&0].len(), 1);
        let strict_endo = enumerate_hom(pres.quiver(), Unitality::StrictlyUnital, x, x, &caps);
        assert_eq!(strict_endo[&0].len(), 1);
        assert!(strict_endo[&0][0].is_identity());
    }

    #[test]
    fn window_closure_is_checked_with_witness() {
        let mut pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = pres.add_object("x");
        let y = pres.add_object("y");
        let a = pres.add_gen("a", x, x, 1);
        let g = pres.add_gen("g", x, y, 0);
        let f = pres.add_gen("f", x, y, 0);
        let ga = pres.parse("g*a").unwrap();
        pres.set_d(f, ga).unwrap();
        let _ = (a, g);

        // With `a` capped out of the basis, d(f) escapes.
        let caps = EnumCaps {
            max_gen_uses: vec![0, 1, 1],
            max_units: 0,
            degree_lo: 0,
            degree_hi: 1,
        };
        match hom_window(&pres, x, y, &caps) {
            Err(CategoryError::NotClosed { degree, word, image_term }) => {
                assert_eq!(degree, 0);
                assert_eq!(word, "f");
                assert_eq!(image_term, "g*a");
            }
            other => panic!("expected a closure witness, got {other:?}"),
        }

        // With `a` admitted the window builds:
        //   0 → span(f, g) → span(g*a, f*a) → (out of window)
        // d sends f to g*a and kills g, so degree 0 has one class.
        let caps = EnumCaps { max_gen_uses: vec![1, 1, 1], ..caps };
        let (window, basis) = hom_window(&pres, x, y, &caps).unwrap();
        assert_eq!(basis.dim(0), 2);
        assert_eq!(basis.dim(1), 2);
        let reports = window.cohomology().unwrap();
        assert_eq!(reports[&0].h_dim, 1);
        assert_eq!(reports[&1].h_dim, 1);
        assert!(reports[&1].boundary_unreliable);
    }

    /// The differential never raises the unit count, and with closed
    /// generators it preserves generator usage exactly — the invariants that
    /// make capped bases subcomplexes.  Swept over every enumerated word.
    #[test]
    fn differential_respects_caps() {
        let mut pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let x = pres.add_object("x");
        let y = pres.add_object("y");
        let f = pres.add_gen("f", x, y, 0);
        let b = pres.add_gen("b", x, x, 1);
        let c = pres.add_gen("c", x, x, 0);
        pres.set_d(c, Morphism::gen(rat(), pres.quiver(), b)).unwrap();
        let _ = f;

        let caps = EnumCaps::uniform(pres.quiver(), 1, 2, -10, 10);
        let mut checked = 0usize;
        for (src, dst) in [(x, y), (x, x), (y, y)] {
            let hom = enumerate_hom(pres.quiver(), Unitality::WeaklyUnital, src, dst, &caps);
            for w in hom.values().flatten() {
                let dm = pres
                    .differential(&Morphism::word(rat(), w.clone()))
                    .unwrap();
                for (image, _) in dm.terms() {
                    assert!(
                        image.unit_count() <= w.unit_count(),
                        "d raised the unit count on {}",
                        render_word(pres.quiver(), w)
                    );
                    // `c` is not closed, so usage may shift from c to b; all
                    // other generators are closed and their usage must match.
                    let (mut before, mut after) = (w.gen_usage(), image.gen_usage());
                    before.remove(&b);
                    before.remove(&c);
                    after.remove(&b);
                    after.remove(&c);
                    assert_eq!(before, after, "closed-generator usage changed");
                }
                checked += 1;
            }
        }
        assert!(checked > 100, "sweep too small to be meaningful: {checked}");
    }

    #[test]
    fn functors_evaluate_units_and_check_chain_maps() {
        // Strictly unital source with d(s) = identity.
        let mut s_pres = Presentation::new(rat(), Unitality::StrictlyUnital);
        let x = s_pres.add_object("x");
        let s = s_pres.add_gen("s", x, x, -1);
        s_pres.set_d(s, Morphism::strict_identity(rat(), x)).unwrap();

        // Weakly unital target with d(sigma) = id(u).
        let mut w_pres = Presentation::new(rat(), Unitality::WeaklyUnital);
        let u = w_pres.add_object("u");
        let sigma = w_pres.add_gen("sigma", u, u, -1);
        w_pres.set_d(sigma, Morphism::weak_unit(rat(), u)).unwrap();

        // s ↦ sigma is a chain map: the empty word evaluates to id(u).
        let to_weak = GenFunctor::new(
            &s_pres,
            &w_pres,
            vec![u],
            vec![Morphism::gen(rat(), w_pres.quiver(), sigma)],
        )
        .unwrap();
        to_weak.check_chain_map(&s_pres, &w_pres).unwrap();

        // s ↦ 0 is not.
        let broken = GenFunctor::new(
            &s_pres,
            &w_pres,
            vec![u],
            vec![Morphism::zero(rat(), u, u, -1)],
        )
        .unwrap();
        match broken.check_chain_map(&s_pres, &w_pres) {
            Err(CategoryError::NotChainMap { gen, applied, differentiated }) => {
                assert_eq!(gen, "s");
                assert_eq!(applied, "id(u)");
                assert_eq!(differentiated, "0");
            }
            other => panic!("expected chain-map failure, got {other:?}"),
        }

        // Weakly unital source into a strictly unital target: unit letters
        // become identities and p-nodes vanish.
        let mut wk = Presentation::new(rat(), Unitality::WeaklyUnital);
        let v = wk.add_object("v");
        let t = wk.add_gen("t", v, v, -1);
        let w_gen = wk.add_gen("w", v, v, 1);
        let jj = Morphism::weak_unit(rat(), v)
            .after(&Morphism::weak_unit(rat(), v))
            .unwrap();
        wk.set_d(t, jj.sub(&Morphism::weak_unit(rat(), v)).unwrap()).unwrap();
        let q = wk.add_gen("q", v, v, -1);
        let p_val = apply_p(
            rat(),
            &[
                PSlot::Arg(Morphism::gen(rat(), wk.quiver(), w_gen)),
                PSlot::Unit(v),
            ],
        )
        .unwrap();
        wk.set_d(q, p_val).unwrap();

        let mut strict = Presentation::new(rat(), Unitality::StrictlyUnital);
        let z = strict.add_object("z");
        let omega = strict.add_gen("omega", z, z, 1);

        // t ↦ 0 works because id∘id − id evaluates to zero strictly, and
        // q ↦ 0 works because its differential is a pure p-node.
        let strictify = GenFunctor::new(
            &wk,
            &strict,
            vec![z],
            vec![
                Morphism::zero(rat(), z, z, -1),
                Morphism::gen(rat(), strict.quiver(), omega),
                Morphism::zero(rat(), z, z, -1),
            ],
        )
        .unwrap();
        strictify.check_chain_map(&wk, &strict).unwrap();
    }

    #[test]
    fn finite_dim_validation_checks_leibniz_and_identities() {
        let f = rat();
        let mut cat = FiniteDimCat::new(f);
        let o0 = cat.add_object("0");
        let o1 = cat.add_object("1");
        let id0 = cat.add_elem("id0", o0, o0, 0);
        let id1 = cat.add_elem("id1", o1, o1, 0);
        cat.set_identity(o0, id0);
        cat.set_identity(o1, id1);
        let e = cat.add_elem("e", o0, o1, 0);
        let h = cat.add_elem("h", o0, o0, -1);
        let y = cat.add_elem("y", o0, o1, -1);
        cat.set_d(h, vec![(id0, f.one())]);
        cat.set_d(y, vec![(e, f.one())]);
        cat.set_compose(e, h, vec![(y, f.one())]);
        cat.validate().unwrap();

        // e∘h = y is forced: dropping it breaks the Leibniz rule.
        let mut broken = cat.clone();
        broken.set_compose(e, h, vec![]);
        match broken.validate() {
            Err(CategoryError::Validation(msg)) => assert!(msg.contains("Leibniz")),
            other => panic!("expected Leibniz failure, got {other:?}"),
        }

        // Identity compositions may not be tabulated.
        let mut tabulated = cat.clone();
        tabulated.set_compose(id1, e, vec![(e, f.one())]);
        match tabulated.validate() {
            Err(CategoryError::Validation(msg)) => assert!(msg.contains("implicit")),
            other => panic!("expected identity-table failure, got {other:?}"),
        }

        // Composition and differential behave as tabulated.
        let eh = cat.compose(&cat.elem(e), &cat.elem(h)).unwrap();
        assert_eq!(eh, cat.elem(y));
        assert_eq!(cat.d(&cat.elem(h)), cat.elem(id0));
        let via_id = cat.compose(&cat.elem(e), &cat.identity(o0)).unwrap();
        assert_eq!(via_id, cat.elem(e));
    }

    #[test]
    fn functor_to_finite_dim_strictifies() {
        // Weak source: d(t) = id(v)∘id(v) − id(v), d(q) = p₂(w, 1).
        let mut wk = Presentation::new(rat(), Unitality::WeaklyUnital);
        let v = wk.add_object("v");
        let t = wk.add_gen("t", v, v, -1);
        let jj = Morphism::weak_unit(rat(), v)
            .after(&Morphism::weak_unit(rat(), v))
            .unwrap();
        wk.set_d(t, jj.sub(&Morphism::weak_unit(rat(), v)).unwrap()).unwrap();

        let f = rat();
        let mut cat = FiniteDimCat::new(f);
        let o = cat.add_object("pt");
        let id = cat.add_elem("id", o, o, 0);
        cat.set_identity(o, id);
        cat.validate().unwrap();

        let functor =
            FunctorToFd::new(&wk, &cat, vec![o], vec![cat.zero(o, o, -1)]).unwrap();
        functor.check_chain_map(&wk, &cat).unwrap();

        // Sending t to a non-closed image breaks the check only if d ≠ 0 in
        // the target; here the target has zero differential, so any image of
        // t still works — instead break it by making d(t) evaluate nonzero.
        let mut wk2 = Presentation::new(rat(), Unitality::WeaklyUnital);
        let v2 = wk2.add_object("v");
        let t2 = wk2.add_gen("t", v2, v2, -1);
        wk2.set_d(t2, Morphism::weak_unit(rat(), v2)).unwrap();
        let functor2 =
            FunctorToFd::new(&wk2, &cat, vec![o], vec![cat.zero(o, o, -1)]).unwrap();
        match functor2.check_chain_map(&wk2, &cat) {
            Err(CategoryError::NotChainMap { gen, .. }) => assert_eq!(gen, "t"),
            other => panic!("expected chain-map failure, got {other:?}"),
        }
    }
}
