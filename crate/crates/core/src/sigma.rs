//! σ-algebras on a finite Ω, represented by their atom partition.
//!
//! A set is measurable iff it is a union of atoms, so a σ-algebra with `k`
//! atoms has exactly `2^k` members. The member list is only materialized on
//! request by [`SigmaAlgebra::enumerate_members`], behind a cap.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::PathSet;
use crate::error::{Error, Result};
use crate::outcome::{same_space, Event, OutcomeSpace};

/// Default limit on the atom count for member enumeration (`2^16` members).
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

#[derive(Clone)]
pub struct SigmaAlgebra {
    space: Arc<OutcomeSpace>,
    /// Atom index of every path.
    labels: Vec<usize>,
    /// Atoms ordered by their smallest member.
    atoms: Vec<PathSet>,
}

/// Outcome of [`verify_axioms`]. Witnesses are the first counterexample in
/// canonical event order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomVerdict {
    Ok,
    MissingUniverse,
    NotClosedComplement(Event),
    NotClosedUnion(Event, Event),
}

impl AxiomVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, AxiomVerdict::Ok)
    }
}

impl SigmaAlgebra {
    /// `{∅, Ω}`.
    pub fn trivial(space: &Arc<OutcomeSpace>) -> Self {
        Self::from_keys(space, |_| ())
    }

    /// The power set: every path is its own atom.
    pub fn discrete(space: &Arc<OutcomeSpace>) -> Self {
        Self::from_keys(space, |p| p)
    }

    /// Partition Ω into the level sets of `key`; paths with equal keys share
    /// an atom.
    pub fn from_keys<K: Ord>(space: &Arc<OutcomeSpace>, key: impl Fn(usize) -> K) -> Self {
        let n = space.num_paths();
        let mut ids: BTreeMap<K, usize> = BTreeMap::new();
        let mut labels = Vec::with_capacity(n);
        for p in 0..n {
            let next = ids.len();
            labels.push(*ids.entry(key(p)).or_insert(next));
        }
        Self::from_canonical_labels(space.clone(), labels, ids.len())
    }

    /// Labels must already be numbered in order of first occurrence.
    fn from_canonical_labels(space: Arc<OutcomeSpace>, labels: Vec<usize>, count: usize) -> Self {
        let n = space.num_paths();
        let mut atoms = vec![PathSet::empty(n); count];
        for (p, &l) in labels.iter().enumerate() {
            atoms[l].insert(p);
        }
        SigmaAlgebra { space, labels, atoms }
    }

    /// The coarsest σ-algebra containing every generator.
    ///
    /// Atoms are the classes of the signature map `ω ↦ (1[ω ∈ g])_g`, built by
    /// refining the partition one generator at a time.
    pub fn generate(space: &Arc<OutcomeSpace>, generators: &[Event]) -> Result<Self> {
        for g in generators {
            g.check_on(space)?;
        }
        let n = space.num_paths();
        let mut labels = vec![0usize; n];
        let mut count = usize::from(n > 0);
        for g in generators {
            // (old label, in g) -> new label, numbered by first occurrence
            let mut remap = vec![usize::MAX; 2 * count];
            let mut next = 0;
            for (p, label) in labels.iter_mut().enumerate() {
                let slot = 2 * *label + usize::from(g.contains(p));
                if remap[slot] == usize::MAX {
                    remap[slot] = next;
                    next += 1;
                }
                *label = remap[slot];
            }
            count = next;
        }
        Ok(Self::from_canonical_labels(space.clone(), labels, count))
    }

    /// Builds a σ-algebra from an explicit partition of Ω.
    pub fn from_atoms(space: &Arc<OutcomeSpace>, atoms: &[Event]) -> Result<Self> {
        let n = space.num_paths();
        let mut owner = vec![usize::MAX; n];
        for (i, a) in atoms.iter().enumerate() {
            a.check_on(space)?;
            if a.is_empty() {
                return Err(Error::validation("atoms must be nonempty"));
            }
            for p in a.paths() {
                if owner[p] != usize::MAX {
                    return Err(Error::validation(alloc::format!(
                        "atoms overlap at path {}",
                        space.path_string(p)
                    )));
                }
                owner[p] = i;
            }
        }
        if let Some(p) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::validation(alloc::format!(
                "atoms do not cover path {}",
                space.path_string(p)
            )));
        }
        Ok(Self::from_keys(space, |p| owner[p]))
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_sets(&self) -> &[PathSet] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> Event {
        self.space
            .event_from_set(self.atoms[index].clone())
            .expect("atom lives on its own space")
    }

    pub fn atoms(&self) -> Vec<Event> {
        (0..self.atoms.len()).map(|i| self.atom(i)).collect()
    }

    /// Index of the atom containing `path`.
    pub fn atom_of(&self, path: usize) -> usize {
        self.labels[path]
    }

    /// `2^|atoms|`, or `None` if that does not fit in a `u128`.
    pub fn member_count(&self) -> Option<u128> {
        1u128.checked_shl(self.atoms.len() as u32)
    }

    /// True iff `event` is a union of atoms, i.e. splits no atom.
    pub fn contains(&self, event: &Event) -> Result<bool> {
        event.check_on(&self.space)?;
        Ok(self
            .atoms
            .iter()
            .all(|a| a.is_subset(event.members()) || a.is_disjoint(event.members())))
    }

    /// True iff `self ⊆ finer`, i.e. every atom of `finer` lies inside one
    /// atom of `self`.
    pub fn is_sub_algebra(&self, finer: &SigmaAlgebra) -> Result<bool> {
        Ok(self.first_atom_split_by(finer)?.is_none())
    }

    /// Smallest-index atom of `self` that is not a union of atoms of `finer`.
    pub fn first_atom_split_by(&self, finer: &SigmaAlgebra) -> Result<Option<usize>> {
        self.check_space(finer)?;
        let mut owner = vec![usize::MAX; finer.atoms.len()];
        let mut split = vec![false; self.atoms.len()];
        for (p, &fine) in finer.labels.iter().enumerate() {
            let coarse = self.labels[p];
            match owner[fine] {
                usize::MAX => owner[fine] = coarse,
                o if o != coarse => {
                    split[o] = true;
                    split[coarse] = true;
                }
                _ => {}
            }
        }
        Ok(split.iter().position(|&s| s))
    }

    /// Coarsest common refinement, `σ(self ∪ other)`.
    pub fn join(&self, other: &SigmaAlgebra) -> Result<SigmaAlgebra> {
        self.check_space(other)?;
        Ok(Self::from_keys(&self.space, |p| (self.labels[p], other.labels[p])))
    }

    /// Member sets in canonical order, with the default cap of 16 atoms.
    pub fn enumerate_members(&self) -> Result<Vec<Event>> {
        self.enumerate_members_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_members_capped(&self, max_atoms: usize) -> Result<Vec<Event>> {
        let k = self.atoms.len();
        if k > max_atoms || k >= usize::BITS as usize {
            return Err(Error::Capacity {
                what: "number of atoms",
                requested: k as u128,
                cap: max_atoms as u128,
            });
        }
        let n = self.space.num_paths();
        let mut members: Vec<PathSet> = (0..1usize << k)
            .map(|mask| {
                let mut s = PathSet::empty(n);
                for (i, atom) in self.atoms.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        s = s.union(atom);
                    }
                }
                s
            })
            .collect();
        members.sort();
        Ok(members
            .into_iter()
            .map(|m| self.space.event_from_set(m).expect("same space"))
            .collect())
    }

    fn check_space(&self, other: &SigmaAlgebra) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

impl PartialEq for SigmaAlgebra {
    fn eq(&self, other: &Self) -> bool {
        // canonical labelling makes equal partitions identical
        same_space(&self.space, &other.space) && self.labels == other.labels
    }
}

impl Eq for SigmaAlgebra {}

impl core::fmt::Debug for SigmaAlgebra {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SigmaAlgebra")
            .field("atoms", &self.atoms())
            .finish()
    }
}

/// Checks that `collection` is a σ-algebra on `space`: it contains Ω and is
/// closed under complement and pairwise union. On a finite space pairwise
/// union closure is equivalent to countable union closure.
pub fn verify_axioms(space: &Arc<OutcomeSpace>, collection: &[Event]) -> Result<AxiomVerdict> {
    for e in collection {
        e.check_on(space)?;
    }
    let sets: BTreeSet<&PathSet> = collection.iter().map(Event::members).collect();
    let to_event = |s: PathSet| space.event_from_set(s).expect("same space");

    if !sets.iter().any(|s| s.is_full()) {
        return Ok(AxiomVerdict::MissingUniverse);
    }
    if let Some(s) = sets.iter().find(|s| !sets.contains(&s.complement())) {
        return Ok(AxiomVerdict::NotClosedComplement(to_event((*s).clone())));
    }

    // A family holding Ω and closed under complement and union is exactly the
    // σ-algebra it generates, so the count test settles the closed case
    // without touching all pairs.
    let generated = SigmaAlgebra::generate(space, collection)?;
    if generated.member_count() == Some(sets.len() as u128) {
        return Ok(AxiomVerdict::Ok);
    }
    let ordered: Vec<&PathSet> = sets.iter().copied().collect();
    for (i, a) in ordered.iter().enumerate() {
        for b in &ordered[i + 1..] {
            if !sets.contains(&a.union(b)) {
                return Ok(AxiomVerdict::NotClosedUnion(
                    to_event((*a).clone()),
                    to_event((*b).clone()),
                ));
            }
        }
    }
    unreachable!("complement-closed family with Ω that is not an algebra has a missing union")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Arc<OutcomeSpace> {
        OutcomeSpace::binary(3).unwrap()
    }

    fn prefix(s: &Arc<OutcomeSpace>, p: &str) -> Event {
        let symbols: Vec<char> = p.chars().collect();
        s.event_from_prefix(&symbols).unwrap()
    }

    fn second_stage(s: &Arc<OutcomeSpace>) -> SigmaAlgebra {
        let gens: Vec<Event> = ["uu", "ud", "du", "dd"].iter().map(|p| prefix(s, p)).collect();
        SigmaAlgebra::generate(s, &gens).unwrap()
    }

    #[test]
    fn generated_from_single_cylinder() {
        let s = lattice();
        let f1 = SigmaAlgebra::generate(&s, &[prefix(&s, "u")]).unwrap();
        assert_eq!(f1.atoms(), [prefix(&s, "u"), prefix(&s, "d")]);
        let members = f1.enumerate_members().unwrap();
        assert_eq!(
            members,
            [s.empty_event(), prefix(&s, "u"), prefix(&s, "d"), s.universe()]
        );
    }

    #[test]
    fn empty_generator_list_is_trivial() {
        let s = lattice();
        let f0 = SigmaAlgebra::generate(&s, &[]).unwrap();
        assert_eq!(f0, SigmaAlgebra::trivial(&s));
        assert_eq!(f0.enumerate_members().unwrap(), [s.empty_event(), s.universe()]);
    }

    #[test]
    fn second_stage_has_cross_unions() {
        let s = lattice();
        let f2 = second_stage(&s);
        assert_eq!(f2.num_atoms(), 4);
        let members = f2.enumerate_members().unwrap();
        assert_eq!(members.len(), 16);
        let ud_du = prefix(&s, "ud").union(&prefix(&s, "du")).unwrap();
        let ud_dd = prefix(&s, "ud").union(&prefix(&s, "dd")).unwrap();
        assert!(members.contains(&ud_du));
        assert!(members.contains(&ud_dd));
        assert!(members.contains(&prefix(&s, "uu").complement()));
    }

    #[test]
    fn power_set_has_256_members() {
        let s = lattice();
        let f3 = SigmaAlgebra::discrete(&s);
        assert_eq!(f3.member_count(), Some(256));
        assert_eq!(f3.enumerate_members().unwrap().len(), 256);
    }

    #[test]
    fn enumeration_cap() {
        let s = OutcomeSpace::binary(5).unwrap();
        let err = SigmaAlgebra::discrete(&s).enumerate_members().unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                what: "number of atoms",
                requested: 32,
                cap: 16
            }
        );
    }

    #[test]
    fn membership_without_enumeration() {
        let s = lattice();
        let f1 = SigmaAlgebra::generate(&s, &[prefix(&s, "u")]).unwrap();
        assert!(f1.contains(&prefix(&s, "u")).unwrap());
        assert!(!f1.contains(&prefix(&s, "uu")).unwrap());
        // brute force over the four members
        let members = f1.enumerate_members().unwrap();
        assert!(!members.contains(&prefix(&s, "uu")));
        for f in [SigmaAlgebra::trivial(&s), f1, SigmaAlgebra::discrete(&s)] {
            assert!(f.contains(&s.empty_event()).unwrap());
            assert!(f.contains(&s.universe()).unwrap());
        }
    }

    #[test]
    fn sub_algebra_relation() {
        let s = lattice();
        let f1 = SigmaAlgebra::generate(&s, &[prefix(&s, "u")]).unwrap();
        let f2 = second_stage(&s);
        assert!(f1.is_sub_algebra(&f2).unwrap());
        assert!(!f2.is_sub_algebra(&f1).unwrap());
        assert!(f2.is_sub_algebra(&f2).unwrap());
        // enumeration-based inclusion agrees
        let m1 = f1.enumerate_members().unwrap();
        let m2 = f2.enumerate_members().unwrap();
        assert!(m1.iter().all(|e| m2.contains(e)));
        assert!(!m2.iter().all(|e| m1.contains(e)));
        let other = OutcomeSpace::binary(2).unwrap();
        assert_eq!(
            f1.is_sub_algebra(&SigmaAlgebra::trivial(&other)),
            Err(Error::SpaceMismatch)
        );
    }

    #[test]
    fn axiom_verdicts() {
        let s = lattice();
        let (u, d) = (prefix(&s, "u"), prefix(&s, "d"));
        let ok = [s.empty_event(), s.universe(), u.clone(), d];
        assert_eq!(verify_axioms(&s, &ok).unwrap(), AxiomVerdict::Ok);

        let missing = [s.empty_event(), s.universe(), u.clone()];
        assert_eq!(
            verify_axioms(&s, &missing).unwrap(),
            AxiomVerdict::NotClosedComplement(u)
        );

        assert_eq!(
            verify_axioms(&s, &[s.empty_event()]).unwrap(),
            AxiomVerdict::MissingUniverse
        );

        let (uu, dd) = (prefix(&s, "uu"), prefix(&s, "dd"));
        let no_union = [
            s.empty_event(),
            s.universe(),
            uu.clone(),
            uu.complement(),
            dd.clone(),
            dd.complement(),
        ];
        assert_eq!(
            verify_axioms(&s, &no_union).unwrap(),
            AxiomVerdict::NotClosedUnion(uu, dd)
        );
    }

    #[test]
    fn explicit_partitions_are_validated() {
        let s = lattice();
        let (u, d) = (prefix(&s, "u"), prefix(&s, "d"));
        let f = SigmaAlgebra::from_atoms(&s, &[d.clone(), u.clone()]).unwrap();
        assert_eq!(f, SigmaAlgebra::generate(&s, core::slice::from_ref(&u)).unwrap());
        assert!(SigmaAlgebra::from_atoms(&s, core::slice::from_ref(&u)).is_err());
        assert!(SigmaAlgebra::from_atoms(&s, &[u.clone(), u.clone(), d]).is_err());
        assert!(SigmaAlgebra::from_atoms(&s, &[u, s.universe()]).is_err());
    }

    #[test]
    fn join_refines_both() {
        let s = lattice();
        let a = SigmaAlgebra::generate(&s, &[prefix(&s, "u")]).unwrap();
        let second = s.event_from_strings(["uuu", "uud", "duu", "dud"]).unwrap();
        let b = SigmaAlgebra::generate(&s, &[second]).unwrap();
        let j = a.join(&b).unwrap();
        assert_eq!(j, second_stage(&s));
        assert!(a.is_sub_algebra(&j).unwrap() && b.is_sub_algebra(&j).unwrap());
    }
}
