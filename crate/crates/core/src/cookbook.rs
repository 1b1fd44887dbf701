//! The cookbook decomposition: count both sides of every dependency, keep
//! each right-side attribute in exactly one dependency, and turn the
//! dependencies into tables keyed by their left sides.

use crate::error::Error;
use crate::inference::{closure, primary_key};
use crate::model::{
    designate_foreign_keys, AttributeSet, DecomposedTable, Decomposition, DecompositionStep, FunctionalDependency,
    Provenance, RelationSchema,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deletion {
    pub attribute: usize,
    /// Index (in the counted list) of the dependency that keeps the attribute.
    pub kept_in: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountedFd {
    pub fd: FunctionalDependency,
    pub lhs_count: usize,
    /// Size of the current right side.
    pub rhs_count: usize,
    /// Size of the right side as declared; deduplication compares these.
    pub original_rhs_count: usize,
    /// Current right side; shrinks during deduplication. The left side is
    /// never touched.
    pub rhs: AttributeSet,
    pub deletions: Vec<Deletion>,
}

pub fn annotate_counts(fds: &[FunctionalDependency]) -> Vec<CountedFd> {
    fds.iter()
        .map(|fd| CountedFd {
            fd: *fd,
            lhs_count: fd.lhs().len(),
            rhs_count: fd.rhs().len(),
            original_rhs_count: fd.rhs().len(),
            rhs: fd.rhs(),
            deletions: Vec::new(),
        })
        .collect()
}

/// Keep every repeated right-side attribute only where the left side is
/// smallest; on equal left sides where the original right side is smallest;
/// on a full tie in the earliest dependency.
pub fn dedup_rhs(counted: &[CountedFd]) -> Vec<CountedFd> {
    let mut out = counted.to_vec();
    let all = counted.iter().fold(AttributeSet::empty(), |acc, c| acc.union(c.rhs));
    for a in all {
        let holders: Vec<usize> = (0..counted.len()).filter(|&i| counted[i].rhs.contains(a)).collect();
        if holders.len() < 2 {
            continue;
        }
        let keeper = *holders
            .iter()
            .min_by_key(|&&i| (counted[i].lhs_count, counted[i].original_rhs_count, i))
            .expect("at least two holders");
        for &i in holders.iter().filter(|&&i| i != keeper) {
            out[i].rhs.remove(a);
            out[i].deletions.push(Deletion {
                attribute: a,
                kept_in: keeper,
            });
        }
    }
    for c in &mut out {
        c.rhs_count = c.rhs.len();
    }
    out
}

fn table_name(index: usize) -> String {
    if index == 0 {
        "T".to_string()
    } else {
        format!("T{}", index + 1)
    }
}

pub fn cookbook_normalize(schema: &RelationSchema) -> Result<Decomposition, Error> {
    if !schema.mvds().is_empty() {
        return Err(Error::MvdPresent);
    }
    let pk = primary_key(schema)?;
    let mut log = Vec::new();
    for fd in schema.fds() {
        let closed = closure(fd.lhs(), schema.fds()).difference(fd.lhs());
        if closed != fd.rhs() {
            log.push(DecompositionStep::Note(format!(
                "warning: `{}` is not closed; its left side also determines {}",
                schema.render_fd(fd),
                schema.render_set(closed.difference(fd.rhs()))
            )));
        }
    }
    let counted = dedup_rhs(&annotate_counts(schema.fds()));
    for c in &counted {
        for d in &c.deletions {
            log.push(DecompositionStep::Note(format!(
                "delete {} from `{}`, kept in `{}`",
                schema.attribute_name(d.attribute),
                schema.render_fd(&c.fd),
                schema.render_fd(&counted[d.kept_in].fd)
            )));
        }
    }

    let mut tables: Vec<DecomposedTable> = Vec::new();
    for c in &counted {
        let lhs = c.fd.lhs();
        if c.rhs.is_empty() && lhs != pk {
            log.push(DecompositionStep::Note(format!(
                "drop `{}`: nothing left on its right side",
                schema.render_fd(&c.fd)
            )));
            continue;
        }
        let name = table_name(tables.len());
        log.push(DecompositionStep::Takeout {
            table: name.clone(),
            determinant: lhs,
            dependents: c.rhs,
            crossed: AttributeSet::empty(),
            group: 1,
        });
        tables.push(DecomposedTable::new(name, lhs.union(c.rhs), lhs, Provenance::Fd(c.fd.origin())));
    }
    if !tables.iter().any(|t| pk.is_subset(t.attributes)) {
        let name = table_name(tables.len());
        log.push(DecompositionStep::Note(format!(
            "add key relation {name} ({})",
            schema.render_set(pk)
        )));
        tables.push(DecomposedTable::new(name, pk, pk, Provenance::KeyRelation));
    }
    designate_foreign_keys(&mut tables);
    Ok(Decomposition { tables, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_schema;

    #[test]
    fn empty_and_single_inputs() {
        assert!(annotate_counts(&[]).is_empty());
        let s = parse_schema("schema S\nattributes A, B\nfd A -> B\n").unwrap();
        let c = annotate_counts(s.fds());
        assert_eq!((c[0].lhs_count, c[0].rhs_count), (1, 1));
        let d = cookbook_normalize(&s).unwrap();
        assert_eq!(d.tables.len(), 1);
        assert_eq!((d.tables[0].attributes, d.tables[0].pk), (s.all(), AttributeSet::singleton(0)));
    }

    #[test]
    fn disjoint_right_sides_are_untouched() {
        let s = parse_schema("schema S\nattributes A, B, C, D\nfd A -> B\nfd C -> D\n").unwrap();
        let counted = annotate_counts(s.fds());
        assert_eq!(dedup_rhs(&counted), counted);
    }

    #[test]
    fn smaller_left_side_keeps_the_attribute() {
        let s = parse_schema("schema S\nattributes A, B, C, X\nfd A -> X\nfd B, C -> X\n").unwrap();
        let d = dedup_rhs(&annotate_counts(s.fds()));
        assert_eq!(d[0].rhs, s.set_of(&["X"]).unwrap());
        assert!(d[1].rhs.is_empty());
        assert_eq!(d[1].deletions, vec![Deletion { attribute: 3, kept_in: 0 }]);
    }

    #[test]
    fn full_tie_keeps_the_earliest() {
        let s = parse_schema("schema S\nattributes A, B, X\nfd A -> X\nfd B -> X\n").unwrap();
        let d = dedup_rhs(&annotate_counts(s.fds()));
        assert_eq!(d[0].rhs_count, 1);
        assert_eq!(d[1].rhs_count, 0);
    }

    #[test]
    fn multivalued_dependencies_are_rejected() {
        let s = parse_schema("schema S\nattributes A, B, C\nmvd A ->> B\n").unwrap();
        assert_eq!(cookbook_normalize(&s), Err(Error::MvdPresent));
    }

    #[test]
    fn key_relation_is_added_when_missing() {
        let s = parse_schema("schema S\nattributes A, B, C, D\nfd A -> B\nfd C -> D\n").unwrap();
        let d = cookbook_normalize(&s).unwrap();
        let last = d.tables.last().unwrap();
        assert_eq!(last.provenance, Provenance::KeyRelation);
        assert_eq!(last.attributes, s.set_of(&["A", "C"]).unwrap());
        assert_eq!(last.fks.len(), 2);
    }
}
