//! Dependency diagrams and the takeout decomposition.
//!
//! The diagram lays attributes out in columns: column 0 holds the primary
//! key, every other attribute sits one column right of its determinant.
//! Transitive right-side attributes and dependencies from alternative keys
//! are left out.
//!
//! Decomposition runs in two groups. Group 1 takes out every dependency
//! whose determinant is not a superkey and whose dependent lies outside the
//! key: the determinant plus its dependents become a table keyed by the
//! determinant, the dependents are crossed out, the determinant stays.
//! Group 2 then splits the uncrossed remainder along the dependencies that
//! live inside it. Tables with the same primary key are merged at the end.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::classify::{label_determinant, ViolationLabel};
use crate::error::Error;
use crate::inference::{candidate_keys, closure, primary_key_among, projected_key, transitive_right_reduce};
use crate::model::{
    designate_foreign_keys, AttributeSet, DecomposedTable, Decomposition, DecompositionStep, FunctionalDependency,
    Provenance, RelationSchema,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Fd,
    Mvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiagramEdge {
    pub determinant: AttributeSet,
    pub dependent: usize,
    pub kind: EdgeKind,
    /// Origin index of the dependency the edge was drawn from.
    pub origin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyDiagram {
    pub name: String,
    pub attribute_names: Vec<String>,
    pub primary_key: AttributeSet,
    /// `columns[0]` is the primary key; members are ordinals in ascending order.
    pub columns: Vec<Vec<usize>>,
    pub edges: Vec<DiagramEdge>,
    pub crossed: AttributeSet,
}

impl DependencyDiagram {
    pub fn column_of(&self, ordinal: usize) -> Option<usize> {
        self.columns.iter().position(|c| c.contains(&ordinal))
    }

    pub fn fd_edges(&self) -> impl Iterator<Item = &DiagramEdge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Fd)
    }
}

fn lexicographic(a: AttributeSet, b: AttributeSet) -> Ordering {
    a.iter().cmp(b.iter())
}

pub fn build_diagram(schema: &RelationSchema) -> Result<DependencyDiagram, Error> {
    let keys = candidate_keys(schema)?;
    let pk = primary_key_among(schema, &keys)?;
    let reduced: Vec<FunctionalDependency> = transitive_right_reduce(schema.fds())
        .into_iter()
        .filter(|fd| fd.lhs() == pk || !keys.contains(&fd.lhs()))
        .collect();

    let mut edges: Vec<DiagramEdge> = Vec::new();
    let mut push = |edge: DiagramEdge| {
        if !edges
            .iter()
            .any(|e| e.determinant == edge.determinant && e.dependent == edge.dependent && e.kind == edge.kind)
        {
            edges.push(edge);
        }
    };
    for fd in &reduced {
        for dependent in fd.rhs() {
            push(DiagramEdge {
                determinant: fd.lhs(),
                dependent,
                kind: EdgeKind::Fd,
                origin: fd.origin(),
            });
        }
    }
    for mvd in schema.mvds() {
        for dependent in mvd.rhs() {
            push(DiagramEdge {
                determinant: mvd.lhs(),
                dependent,
                kind: EdgeKind::Mvd,
                origin: mvd.origin(),
            });
        }
    }

    let n = schema.arity();
    let mut column: Vec<Option<usize>> = vec![None; n];
    for o in pk {
        column[o] = Some(0);
    }
    // Breadth-first layering: an attribute is placed once some edge's whole
    // determinant is placed.
    let mut placed = pk;
    loop {
        let mut next: Vec<(usize, usize)> = Vec::new();
        for e in edges.iter().filter(|e| e.kind == EdgeKind::Fd) {
            if placed.contains(e.dependent) || !e.determinant.is_subset(placed) {
                continue;
            }
            let col = 1 + e.determinant.iter().filter_map(|o| column[o]).max().unwrap_or(0);
            next.push((e.dependent, col));
        }
        if next.is_empty() {
            break;
        }
        for (o, col) in next {
            column[o] = Some(column[o].map_or(col, |c| c.min(col)));
            placed.insert(o);
        }
    }
    if let Some(o) = (0..n).find(|&o| column[o].is_none()) {
        return Err(Error::UnreachableAttribute {
            name: schema.attribute_name(o).to_string(),
        });
    }
    // Push dependents right of their determinants along forward edges until
    // stable; edges pointing backwards (cycles) do not constrain.
    let layer: Vec<usize> = column.iter().map(|c| c.expect("placed")).collect();
    let forward: Vec<&DiagramEdge> = edges
        .iter()
        .filter(|e| {
            e.kind == EdgeKind::Fd
                && !pk.contains(e.dependent)
                && e.determinant.iter().all(|o| layer[o] < layer[e.dependent])
        })
        .collect();
    let mut col = layer;
    let mut changed = true;
    while changed {
        changed = false;
        for e in &forward {
            let want = 1 + e.determinant.iter().map(|o| col[o]).max().unwrap_or(0);
            if col[e.dependent] < want {
                col[e.dependent] = want;
                changed = true;
            }
        }
    }
    let width = col.iter().copied().max().unwrap_or(0) + 1;
    let mut columns = vec![Vec::new(); width];
    for (o, c) in col.iter().enumerate() {
        columns[*c].push(o);
    }
    columns.retain(|c| !c.is_empty());

    Ok(DependencyDiagram {
        name: schema.name().to_string(),
        attribute_names: schema.attribute_names(),
        primary_key: pk,
        columns,
        edges,
        crossed: AttributeSet::empty(),
    })
}

/// Functional-dependency edges taken out in group 1, in the default order:
/// transitive (3NF) first, then partial (2NF), then mixed (BCNF); ties by
/// determinant in ordinal order, then by dependent.
pub fn group1_edges(schema: &RelationSchema, diagram: &DependencyDiagram) -> Vec<DiagramEdge> {
    let pk = diagram.primary_key;
    let rank = |label: ViolationLabel| match label {
        ViolationLabel::Nf3 => 0,
        ViolationLabel::Nf2 => 1,
        _ => 2,
    };
    let mut edges: Vec<(usize, DiagramEdge)> = diagram
        .fd_edges()
        .filter(|e| !pk.contains(e.dependent))
        .filter_map(|e| {
            let superkey = closure(e.determinant, schema.fds()) == schema.all();
            let label = label_determinant(e.determinant, pk, superkey);
            (label != ViolationLabel::None).then_some((rank(label), *e))
        })
        .collect();
    edges.sort_by(|(ra, a), (rb, b)| {
        ra.cmp(rb)
            .then_with(|| lexicographic(a.determinant, b.determinant))
            .then_with(|| a.dependent.cmp(&b.dependent))
    });
    edges.into_iter().map(|(_, e)| e).collect()
}

/// Order in which group-1 edges are taken out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TakeoutOrder {
    /// [`group1_edges`] order; an edge waits while its dependent is still
    /// part of the determinant of another pending edge, and edges sharing
    /// a determinant are taken out together.
    Default,
    /// A permutation of the indices of [`group1_edges`]; each edge is taken
    /// out on its own.
    Explicit(Vec<usize>),
}

struct Takeout {
    tables: Vec<DecomposedTable>,
    log: Vec<DecompositionStep>,
    crossed: AttributeSet,
    /// Dependents of superkey determinants; they stay in the original table.
    held: AttributeSet,
}

impl Takeout {
    fn emit(&mut self, attributes: AttributeSet, pk: AttributeSet, provenance: Provenance, group: u8) -> String {
        let name = format!("T{}", self.tables.len() + 1);
        let crossed = if group == 1 {
            attributes.difference(pk).difference(self.crossed).difference(self.held)
        } else {
            AttributeSet::empty()
        };
        self.crossed = self.crossed.union(crossed);
        self.log.push(DecompositionStep::Takeout {
            table: name.clone(),
            determinant: pk,
            dependents: attributes.difference(pk),
            crossed,
            group,
        });
        self.tables.push(DecomposedTable::new(name.clone(), attributes, pk, provenance));
        name
    }
}

pub fn takeout_normalize(schema: &RelationSchema) -> Result<(Decomposition, DependencyDiagram), Error> {
    takeout_normalize_with_order(schema, &TakeoutOrder::Default)
}

pub fn takeout_normalize_with_order(
    schema: &RelationSchema,
    order: &TakeoutOrder,
) -> Result<(Decomposition, DependencyDiagram), Error> {
    let mut diagram = build_diagram(schema)?;
    let pk = diagram.primary_key;
    let group1 = group1_edges(schema, &diagram);
    let held = diagram
        .fd_edges()
        .filter(|e| closure(e.determinant, schema.fds()) == schema.all())
        .map(|e| e.dependent)
        .collect();
    let mut work = Takeout {
        tables: Vec::new(),
        log: Vec::new(),
        crossed: AttributeSet::empty(),
        held,
    };

    match order {
        TakeoutOrder::Explicit(perm) => {
            let mut seen = vec![false; group1.len()];
            if perm.len() != group1.len() || perm.iter().any(|&i| i >= group1.len() || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidArgument(format!(
                    "takeout order must be a permutation of 0..{}",
                    group1.len()
                )));
            }
            for &i in perm {
                let e = group1[i];
                work.emit(e.determinant.with(e.dependent), e.determinant, Provenance::Fd(e.origin), 1);
            }
        }
        TakeoutOrder::Default => {
            let mut pending = group1.clone();
            while !pending.is_empty() {
                let blocked = |e: &DiagramEdge, pending: &[DiagramEdge]| {
                    pending
                        .iter()
                        .any(|other| other != e && other.determinant.contains(e.dependent))
                };
                let lead = pending
                    .iter()
                    .position(|e| !blocked(e, &pending))
                    .unwrap_or(0);
                let determinant = pending[lead].determinant;
                let origin = pending[lead].origin;
                let batch: Vec<usize> = (0..pending.len())
                    .filter(|&i| {
                        i == lead || (pending[i].determinant == determinant && !blocked(&pending[i], &pending))
                    })
                    .collect();
                let dependents: AttributeSet = batch.iter().map(|&i| pending[i].dependent).collect();
                work.emit(determinant.union(dependents), determinant, Provenance::Fd(origin), 1);
                let mut i = 0;
                pending.retain(|_| {
                    let keep = !batch.contains(&i);
                    i += 1;
                    keep
                });
            }
        }
    }

    // Group 2: dependencies inside what is left of the original relation.
    let mut residual = schema.all().difference(work.crossed);
    let mut inner: Vec<(AttributeSet, AttributeSet, Provenance)> = Vec::new();
    for fd in transitive_right_reduce(schema.fds()) {
        let into_key = fd.rhs().intersection(pk);
        let superkey = closure(fd.lhs(), schema.fds()) == schema.all();
        if !into_key.is_empty() && !superkey {
            inner.push((fd.lhs(), into_key, Provenance::Fd(fd.origin())));
        }
    }
    for mvd in schema.mvds() {
        inner.push((mvd.lhs(), mvd.rhs(), Provenance::Mvd(mvd.origin())));
    }
    for (lhs, rhs, provenance) in inner {
        let part = rhs.intersection(residual).difference(lhs);
        if !lhs.is_subset(residual) || part.is_empty() {
            work.log.push(DecompositionStep::Note(format!(
                "skip {provenance}: not internal to the remaining attributes"
            )));
            continue;
        }
        let attributes = lhs.union(part);
        if work.tables.iter().any(|t| t.attributes == attributes && matches!(t.provenance, Provenance::Mvd(_))) {
            residual = residual.difference(part);
            continue;
        }
        let table_pk = match provenance {
            Provenance::Fd(_) => lhs,
            _ => attributes,
        };
        work.emit(attributes, table_pk, provenance, 2);
        residual = residual.difference(part);
    }

    let mut tables = work.tables;
    let mut log = work.log;
    if !residual.is_empty() && !tables.iter().any(|t| residual.is_subset(t.attributes)) {
        let residual_pk = if pk.is_subset(residual) {
            pk
        } else {
            projected_key(residual, schema.fds())
        };
        let mut name = schema.name().to_string();
        if tables.iter().any(|t| t.name == name) {
            name.push_str("_residual");
        }
        log.push(DecompositionStep::Note(format!("residual table {name}")));
        tables.push(DecomposedTable::new(name, residual, residual_pk, Provenance::Residual));
    } else if !residual.is_empty() {
        log.push(DecompositionStep::Note(
            "remaining attributes are contained in another table; no residual table".to_string(),
        ));
    }

    let mut merged: Vec<DecomposedTable> = Vec::with_capacity(tables.len());
    for table in tables {
        match merged.iter_mut().find(|t| t.pk == table.pk) {
            Some(kept) => {
                log.push(DecompositionStep::Merge {
                    kept: kept.name.clone(),
                    absorbed: table.name.clone(),
                });
                kept.attributes = kept.attributes.union(table.attributes);
                kept.provenance = match std::mem::replace(&mut kept.provenance, Provenance::Residual) {
                    Provenance::Merged(mut names) => {
                        names.push(table.name);
                        Provenance::Merged(names)
                    }
                    _ => Provenance::Merged(vec![kept.name.clone(), table.name]),
                };
            }
            None => merged.push(table),
        }
    }
    designate_foreign_keys(&mut merged);
    diagram.crossed = work.crossed;
    Ok((Decomposition { tables: merged, log }, diagram))
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering of a diagram: columns become ranks from left to right,
/// crossed attributes are struck through, multivalued edges are drawn
/// double, and multi-attribute determinants meet in a point-shaped junction.
pub fn emit_dot(diagram: &DependencyDiagram) -> String {
    let name = |o: usize| quote(&diagram.attribute_names[o]);
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&diagram.name));
    out.push_str("  rankdir=LR; node [shape=box];\n");
    for column in &diagram.columns {
        out.push_str("  { rank=same;");
        for &o in column {
            if diagram.crossed.contains(o) {
                let _ = write!(out, " {} [label=<<s>{}</s>>];", name(o), html_escape(&diagram.attribute_names[o]));
            } else {
                let _ = write!(out, " {};", name(o));
            }
        }
        out.push_str(" }\n");
    }
    let mut junctions: Vec<AttributeSet> = Vec::new();
    for e in &diagram.edges {
        if e.determinant.len() > 1 && !junctions.contains(&e.determinant) {
            junctions.push(e.determinant);
        }
    }
    for j in 0..junctions.len() {
        let _ = writeln!(out, "  \"j{j}\" [shape=point, width=0.08];");
    }
    let mut wired = vec![false; junctions.len()];
    for e in &diagram.edges {
        let style = match e.kind {
            EdgeKind::Fd => String::new(),
            EdgeKind::Mvd => " [arrowhead=vee, color=\"black:black\"]".to_string(),
        };
        if e.determinant.len() == 1 {
            let from = e.determinant.first().expect("nonempty determinant");
            let _ = writeln!(out, "  {} -> {}{style};", name(from), name(e.dependent));
            continue;
        }
        let j = junctions.iter().position(|d| *d == e.determinant).expect("junction");
        if !wired[j] {
            wired[j] = true;
            for o in e.determinant {
                let _ = writeln!(out, "  {} -> \"j{j}\" [arrowhead=none];", name(o));
            }
        }
        let _ = writeln!(out, "  \"j{j}\" -> {}{style};", name(e.dependent));
    }
    out.push_str("}\n");
    out
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_schema;

    #[test]
    fn single_dependency_diagram() {
        let s = parse_schema("schema S\nattributes A, B\nfd A -> B\n").unwrap();
        let d = build_diagram(&s).unwrap();
        assert_eq!(d.columns, vec![vec![0], vec![1]]);
        assert_eq!(d.edges.len(), 1);
        assert_eq!(
            emit_dot(&d),
            "digraph \"S\" {\n  rankdir=LR; node [shape=box];\n  { rank=same; \"A\"; }\n  { rank=same; \"B\"; }\n  \"A\" -> \"B\";\n}\n"
        );
    }

    #[test]
    fn unreachable_attribute_is_rejected() {
        // Z is in no dependency, so it is in the key; make it unreachable by
        // determining it only from an alternative key.
        let s = parse_schema("schema S\nattributes A, B, C\nfd A -> B\nfd B -> A, C\n").unwrap();
        assert!(matches!(build_diagram(&s), Err(Error::UnreachableAttribute { name }) if name == "C"));
    }

    #[test]
    fn superkey_dependency_is_not_taken_out() {
        let s = parse_schema("schema S\nattributes A, B\nfd A -> B\n").unwrap();
        let (d, _) = takeout_normalize(&s).unwrap();
        assert_eq!(d.tables.len(), 1);
        assert_eq!(d.tables[0].name, "S");
        assert_eq!(d.tables[0].attributes, s.all());
        assert_eq!(d.tables[0].pk, AttributeSet::singleton(0));
    }

    #[test]
    fn explicit_order_must_be_a_permutation() {
        let s = parse_schema("schema S\nattributes A, B, C\nfd A -> B\nfd B -> C\n").unwrap();
        assert!(takeout_normalize_with_order(&s, &TakeoutOrder::Explicit(vec![0])).is_ok());
        assert!(matches!(
            takeout_normalize_with_order(&s, &TakeoutOrder::Explicit(vec![1])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cyclic_non_key_dependencies_terminate() {
        let s = parse_schema("schema S\nattributes Z, A, B\nfd Z -> A\nfd A -> B\nfd B -> A\n").unwrap();
        let (d, diagram) = takeout_normalize(&s).unwrap();
        assert_eq!(diagram.columns[0], vec![0]);
        assert!(d.validate(&s).is_ok());
    }
}
