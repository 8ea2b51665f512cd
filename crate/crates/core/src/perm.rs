//! Small permutation groups: elements as dense images, breadth-first
//! closure from generators, subgroups, cosets. Everything here is desk
//! scale — groups are materialized, never presented abstractly.

use std::collections::BTreeSet;
use std::fmt;

/// Permutation of `0..n` stored as the image vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm(pub Vec<usize>);

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.0)
    }
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// `(self * other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Permutation from disjoint cycles, e.g. `&[&[0, 1]]` for a
    /// transposition.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Perm {
        let mut map: Vec<usize> = (0..n).collect();
        for cyc in cycles {
            for w in 0..cyc.len() {
                map[cyc[w]] = cyc[(w + 1) % cyc.len()];
            }
        }
        Perm(map)
    }
}

/// A finite group of permutations, fully enumerated, with element 0 the
/// identity and elements sorted for canonical representatives.
#[derive(Debug, Clone)]
pub struct PermGroup {
    pub degree: usize,
    pub elements: Vec<Perm>,
}

impl PermGroup {
    /// Breadth-first closure of the generators. `cap` bounds the element
    /// count to keep accidental explosions diagnosable.
    pub fn closure(degree: usize, generators: &[Perm], cap: usize) -> Result<PermGroup, String> {
        let mut seen: BTreeSet<Perm> = BTreeSet::new();
        seen.insert(Perm::identity(degree));
        let mut frontier: Vec<Perm> = vec![Perm::identity(degree)];
        while let Some(g) = frontier.pop() {
            for gen in generators {
                if gen.degree() != degree {
                    return Err(format!(
                        "generator degree {} does not match {}",
                        gen.degree(),
                        degree
                    ));
                }
                let h = gen.compose(&g);
                if seen.insert(h.clone()) {
                    if seen.len() > cap {
                        return Err(format!("group closure exceeded cap {}", cap));
                    }
                    frontier.push(h);
                }
            }
        }
        let mut elements: Vec<Perm> = seen.into_iter().collect();
        // identity first, rest in canonical sorted order
        elements.sort();
        let id_pos = elements.iter().position(|p| p.is_identity()).unwrap();
        elements.swap(0, id_pos);
        Ok(PermGroup { degree, elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> &Perm {
        &self.elements[0]
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.iter().any(|q| q == p)
    }

    pub fn index_of(&self, p: &Perm) -> Option<usize> {
        self.elements.iter().position(|q| q == p)
    }

    /// Subgroup generated by `gens` inside this group.
    pub fn subgroup(&self, gens: &[Perm]) -> Result<PermGroup, String> {
        let sub = PermGroup::closure(self.degree, gens, self.order())?;
        for p in &sub.elements {
            if !self.contains(p) {
                return Err("subgroup generator escapes the ambient group".into());
            }
        }
        Ok(sub)
    }

    /// Canonical representatives of left cosets `g H`, each the sorted-least
    /// element of its coset; the identity's coset comes first.
    pub fn left_coset_reps(&self, h: &PermGroup) -> Vec<Perm> {
        let mut reps: Vec<Perm> = Vec::new();
        let mut seen: BTreeSet<Perm> = BTreeSet::new();
        for g in &self.elements {
            if seen.contains(g) {
                continue;
            }
            let mut coset: Vec<Perm> = h.elements.iter().map(|k| g.compose(k)).collect();
            coset.sort();
            let rep = if coset.iter().any(|p| p.is_identity()) {
                Perm::identity(self.degree)
            } else {
                coset[0].clone()
            };
            for p in coset {
                seen.insert(p);
            }
            reps.push(rep);
        }
        // identity coset first, rest sorted
        reps.sort();
        if let Some(pos) = reps.iter().position(|r| r.is_identity()) {
            reps.swap(0, pos);
        }
        reps
    }

    /// Canonical representatives of double cosets `H g H`.
    pub fn double_coset_reps(&self, h: &PermGroup) -> Vec<Perm> {
        let mut reps: Vec<Perm> = Vec::new();
        let mut seen: BTreeSet<Perm> = BTreeSet::new();
        for g in &self.elements {
            if seen.contains(g) {
                continue;
            }
            let mut coset: Vec<Perm> = Vec::new();
            for a in &h.elements {
                for b in &h.elements {
                    coset.push(a.compose(g).compose(b));
                }
            }
            coset.sort();
            coset.dedup();
            let rep = if coset.iter().any(|p| p.is_identity()) {
                Perm::identity(self.degree)
            } else {
                coset[0].clone()
            };
            for p in coset {
                seen.insert(p);
            }
            reps.push(rep);
        }
        reps.sort();
        if let Some(pos) = reps.iter().position(|r| r.is_identity()) {
            reps.swap(0, pos);
        }
        reps
    }
}

/// Named presets used by the CLI and the builders.
pub fn named_group(name: &str) -> Option<(PermGroup, Vec<Perm>)> {
    let (degree, gens): (usize, Vec<Perm>) = match name.to_ascii_uppercase().as_str() {
        "Z2" => (2, vec![Perm::from_cycles(2, &[&[0, 1]])]),
        "Z3" => (3, vec![Perm::from_cycles(3, &[&[0, 1, 2]])]),
        "Z4" => (4, vec![Perm::from_cycles(4, &[&[0, 1, 2, 3]])]),
        "Z5" => (5, vec![Perm::from_cycles(5, &[&[0, 1, 2, 3, 4]])]),
        "S3" => (
            3,
            vec![
                Perm::from_cycles(3, &[&[0, 1]]),
                Perm::from_cycles(3, &[&[0, 1, 2]]),
            ],
        ),
        "S4" => (
            4,
            vec![
                Perm::from_cycles(4, &[&[0, 1]]),
                Perm::from_cycles(4, &[&[0, 1, 2, 3]]),
            ],
        ),
        _ => return None,
    };
    let group = PermGroup::closure(degree, &gens, 1 << 16).ok()?;
    Some((group, gens))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s3_closure_and_cosets() {
        let (s3, _) = named_group("S3").unwrap();
        assert_eq!(s3.order(), 6);
        let s2 = s3.subgroup(&[Perm::from_cycles(3, &[&[0, 1]])]).unwrap();
        assert_eq!(s2.order(), 2);
        let cosets = s3.left_coset_reps(&s2);
        assert_eq!(cosets.len(), 3);
        assert!(cosets[0].is_identity());
        let dcosets = s3.double_coset_reps(&s2);
        assert_eq!(dcosets.len(), 2);
    }

    #[test]
    fn trivial_subgroup_gives_elements() {
        let (z4, _) = named_group("Z4").unwrap();
        let triv = z4.subgroup(&[]).unwrap();
        assert_eq!(triv.order(), 1);
        assert_eq!(z4.double_coset_reps(&triv).len(), 4);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let (s4, _) = named_group("S4").unwrap();
        for g in &s4.elements {
            assert!(g.compose(&g.inverse()).is_identity());
        }
    }
}
