//! Exact-arithmetic computer algebra for weakly unital dg categories.
//!
//! A *weakly unital* dg category has, for every object `x`, a closed
//! degree-0 endomorphism `id_x` that is a unit only up to coherent homotopies:
//! the structure is packaged as higher operations `p_n` (one for every way of
//! anchoring formal unit slots into an `n`-slot composition) satisfying an
//! A-infinity functor identity.  Everything in this crate manipulates such
//! structures *exactly* — scalars are prime-field or rational, never floating
//! point — so that identities between morphisms are decided by normal form,
//! not numerically.
//!
//! Module map:
//!
//! * [`linalg`] — exact scalars, sparse matrices, rank/kernel, cohomology of
//!   finite complex windows.
//! * [`expr`] — normal forms for morphism expressions in free weakly unital
//!   categories (composition words, weak units, `p`-operations) and their
//!   differential.
//! * [`category`] — category presentations (semi-free, strictly unital
//!   semi-free, finite-dimensional with tables), functors, truncated hom
//!   enumeration, `d² = 0` checking.
//! * [`operad`] — the governing operad realized through line-quiver hom
//!   spaces; basis enumeration and cohomology in windows.
//! * [`pretr`] — twisted complexes (one-sided, upper-triangular) over a
//!   weakly unital base: the matrix differential, the transported weak-unit
//!   operations, cones, and the A-infinity functor identity for them.
//! * [`interval`] — the strict and weak interval categories, contraction
//!   data, transfer along homotopy equivalences, and strictification.
//! * [`colim`] — cell categories (disks/spheres in category form), the
//!   generating cofibrations/acyclic cofibrations, and pushout hom windows
//!   with a brute-force coequalizer oracle.
//! * [`resolution`] — a canonical strictly unital resolution of a unital dg
//!   algebra built from bar/cobar words with an extra contracting generator,
//!   checked in truncation windows.

pub mod category;
pub mod colim;
pub mod expr;
pub mod interval;
pub mod linalg;
pub mod operad;
pub mod pretr;
pub mod resolution;

#[cfg(test)]
mod sign_search;
