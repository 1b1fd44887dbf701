//! Shared immutable types: attributes, attribute sets, dependencies, schemas
//! and decompositions.
//!
//! Attributes are identified inside a schema by their declaration ordinal.
//! [`AttributeSet`] is a 64-bit set of ordinals, so every set operation is a
//! single machine instruction and rendering is always in declaration order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::Error;

/// Largest number of attributes a schema may declare.
pub const MAX_ATTRIBUTES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub name: String,
    pub ordinal: usize,
}

/// A set of attribute ordinals.
///
/// Iteration yields ordinals in ascending order. The [`Ord`] implementation
/// is the canonical set order used everywhere keys are listed: smaller sets
/// first, then lexicographic on the ascending ordinal sequence.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AttributeSet(u64);

impl AttributeSet {
    pub const fn empty() -> Self {
        AttributeSet(0)
    }

    /// The set `{0, 1, …, n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ATTRIBUTES);
        if n == MAX_ATTRIBUTES {
            AttributeSet(u64::MAX)
        } else {
            AttributeSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(ordinal: usize) -> Self {
        assert!(ordinal < MAX_ATTRIBUTES);
        AttributeSet(1u64 << ordinal)
    }

    pub const fn from_bits(bits: u64) -> Self {
        AttributeSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, ordinal: usize) {
        self.0 |= Self::singleton(ordinal).0;
    }

    pub fn remove(&mut self, ordinal: usize) {
        self.0 &= !Self::singleton(ordinal).0;
    }

    pub fn with(self, ordinal: usize) -> Self {
        self.union(Self::singleton(ordinal))
    }

    pub fn without(self, ordinal: usize) -> Self {
        self.difference(Self::singleton(ordinal))
    }

    pub fn contains(self, ordinal: usize) -> bool {
        ordinal < MAX_ATTRIBUTES && self.0 & (1u64 << ordinal) != 0
    }

    pub const fn union(self, other: Self) -> Self {
        AttributeSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: Self) -> Self {
        AttributeSet(self.0 & other.0)
    }

    pub const fn difference(self, other: Self) -> Self {
        AttributeSet(self.0 & !other.0)
    }

    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_proper_subset(self, other: Self) -> bool {
        self.is_subset(other) && self.0 != other.0
    }

    pub const fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Smallest ordinal in the set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn last(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> Ordinals {
        Ordinals(self.0)
    }
}

impl fmt::Debug for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Ord for AttributeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for AttributeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromIterator<usize> for AttributeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = AttributeSet::empty();
        for ordinal in iter {
            set.insert(ordinal);
        }
        set
    }
}

impl IntoIterator for AttributeSet {
    type Item = usize;
    type IntoIter = Ordinals;

    fn into_iter(self) -> Ordinals {
        self.iter()
    }
}

/// Ascending iterator over the ordinals of an [`AttributeSet`].
#[derive(Debug, Clone)]
pub struct Ordinals(u64);

impl Iterator for Ordinals {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let ordinal = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(ordinal)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Ordinals {}

macro_rules! dependency_type {
    ($(#[$meta:meta])* $name:ident, $arrow:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name {
            lhs: AttributeSet,
            rhs: AttributeSet,
            origin: usize,
        }

        impl $name {
            /// Fails unless both sides are nonempty and disjoint.
            pub fn new(lhs: AttributeSet, rhs: AttributeSet, origin: usize) -> Result<Self, Error> {
                if lhs.is_empty() {
                    return Err(Error::EmptyLhs { origin });
                }
                if rhs.is_empty() || !lhs.is_disjoint(rhs) {
                    return Err(Error::EmptyRhs { origin });
                }
                Ok($name { lhs, rhs, origin })
            }

            pub fn lhs(&self) -> AttributeSet {
                self.lhs
            }

            pub fn rhs(&self) -> AttributeSet {
                self.rhs
            }

            /// Position in the schema's declaration list of this kind.
            pub fn origin(&self) -> usize {
                self.origin
            }

            pub fn attributes(&self) -> AttributeSet {
                self.lhs.union(self.rhs)
            }

            /// Same dependency with a different right side.
            pub fn with_rhs(&self, rhs: AttributeSet) -> Result<Self, Error> {
                Self::new(self.lhs, rhs, self.origin)
            }

            pub const ARROW: &'static str = $arrow;
        }
    };
}

dependency_type!(
    /// `lhs → rhs`: the left side fixes every attribute of the right side.
    FunctionalDependency,
    "->"
);

dependency_type!(
    /// `lhs ↠ rhs`: the right-side values associated with a left-side value
    /// are independent of the remaining attributes.
    MultivaluedDependency,
    "->>"
);

/// A dependency as written by a user, before name resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftDependency {
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
    /// 1-based source line, when the draft came from text.
    pub line: Option<usize>,
}

impl DraftDependency {
    pub fn new<S: AsRef<str>>(lhs: &[S], rhs: &[S]) -> Self {
        DraftDependency {
            lhs: lhs.iter().map(|s| s.as_ref().to_string()).collect(),
            rhs: rhs.iter().map(|s| s.as_ref().to_string()).collect(),
            line: None,
        }
    }
}

/// Unvalidated schema description; [`canonicalize`] turns it into a
/// [`RelationSchema`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SchemaDraft {
    pub name: String,
    pub attributes: Vec<String>,
    pub fds: Vec<DraftDependency>,
    pub mvds: Vec<DraftDependency>,
    pub key: Option<Vec<String>>,
}

impl SchemaDraft {
    pub fn new(name: impl Into<String>) -> Self {
        SchemaDraft {
            name: name.into(),
            ..SchemaDraft::default()
        }
    }

    pub fn attributes<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.attributes = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn fd<S: AsRef<str>>(mut self, lhs: &[S], rhs: &[S]) -> Self {
        self.fds.push(DraftDependency::new(lhs, rhs));
        self
    }

    pub fn mvd<S: AsRef<str>>(mut self, lhs: &[S], rhs: &[S]) -> Self {
        self.mvds.push(DraftDependency::new(lhs, rhs));
        self
    }

    pub fn key<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.key = Some(names.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }
}

/// Non-fatal finding recorded while canonicalizing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: Option<usize>,
    pub message: String,
}

/// A relation schema with its dependencies and optional declared key.
///
/// Construction goes through [`canonicalize`] or [`RelationSchema::from_parts`],
/// both of which enforce that every referenced attribute is declared and
/// that names are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    name: String,
    attributes: Vec<Attribute>,
    fds: Vec<FunctionalDependency>,
    mvds: Vec<MultivaluedDependency>,
    declared_key: Option<AttributeSet>,
}

impl RelationSchema {
    pub fn from_parts(
        name: impl Into<String>,
        attribute_names: &[String],
        fds: Vec<FunctionalDependency>,
        mvds: Vec<MultivaluedDependency>,
        declared_key: Option<AttributeSet>,
    ) -> Result<Self, Error> {
        if attribute_names.len() > MAX_ATTRIBUTES {
            return Err(Error::AttributeCapExceeded {
                count: attribute_names.len(),
                cap: MAX_ATTRIBUTES,
            });
        }
        let mut seen = HashMap::new();
        for (ordinal, name) in attribute_names.iter().enumerate() {
            if seen.insert(name.as_str(), ordinal).is_some() {
                return Err(Error::DuplicateAttribute { name: name.clone() });
            }
        }
        let all = AttributeSet::full(attribute_names.len());
        let undeclared = |set: AttributeSet| -> Option<Error> {
            let extra = set.difference(all);
            extra.first().map(|o| Error::UndeclaredAttribute {
                name: format!("#{o}"),
            })
        };
        for set in fds
            .iter()
            .map(|fd| fd.attributes())
            .chain(mvds.iter().map(|m| m.attributes()))
            .chain(declared_key)
        {
            if let Some(err) = undeclared(set) {
                return Err(err);
            }
        }
        if declared_key.is_some_and(|k| k.is_empty()) {
            return Err(Error::EmptyKey);
        }
        Ok(RelationSchema {
            name: name.into(),
            attributes: attribute_names
                .iter()
                .enumerate()
                .map(|(ordinal, name)| Attribute {
                    name: name.clone(),
                    ordinal,
                })
                .collect(),
            fds,
            mvds,
            declared_key,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn fds(&self) -> &[FunctionalDependency] {
        &self.fds
    }

    pub fn mvds(&self) -> &[MultivaluedDependency] {
        &self.mvds
    }

    pub fn declared_key(&self) -> Option<AttributeSet> {
        self.declared_key
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    /// Every declared attribute.
    pub fn all(&self) -> AttributeSet {
        AttributeSet::full(self.attributes.len())
    }

    pub fn ordinal(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn attribute_name(&self, ordinal: usize) -> &str {
        &self.attributes[ordinal].name
    }

    /// Resolve a list of names, failing on the first undeclared one.
    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<AttributeSet, Error> {
        names
            .iter()
            .map(|n| {
                self.ordinal(n.as_ref())
                    .ok_or_else(|| Error::UndeclaredAttribute {
                        name: n.as_ref().to_string(),
                    })
            })
            .collect()
    }

    /// Names of the set's members in declaration order.
    pub fn names(&self, set: AttributeSet) -> Vec<&str> {
        set.iter().map(|o| self.attribute_name(o)).collect()
    }

    /// `"A, B, C"`.
    pub fn render_set(&self, set: AttributeSet) -> String {
        self.names(set).join(", ")
    }

    pub fn render_fd(&self, fd: &FunctionalDependency) -> String {
        format!("{} -> {}", self.render_set(fd.lhs()), self.render_set(fd.rhs()))
    }

    pub fn render_mvd(&self, mvd: &MultivaluedDependency) -> String {
        format!("{} ->> {}", self.render_set(mvd.lhs()), self.render_set(mvd.rhs()))
    }

    /// Same attributes and name, different dependency sets and key.
    pub fn with_dependencies(
        &self,
        fds: Vec<FunctionalDependency>,
        mvds: Vec<MultivaluedDependency>,
        declared_key: Option<AttributeSet>,
    ) -> Result<Self, Error> {
        RelationSchema::from_parts(
            self.name.clone(),
            &self.attribute_names(),
            fds,
            mvds,
            declared_key,
        )
    }

    /// Inverse of [`canonicalize`]: a draft that canonicalizes back to `self`.
    pub fn to_draft(&self) -> SchemaDraft {
        let names = |set: AttributeSet| -> Vec<String> {
            self.names(set).into_iter().map(str::to_string).collect()
        };
        SchemaDraft {
            name: self.name.clone(),
            attributes: self.attribute_names(),
            fds: self
                .fds
                .iter()
                .map(|fd| DraftDependency {
                    lhs: names(fd.lhs()),
                    rhs: names(fd.rhs()),
                    line: None,
                })
                .collect(),
            mvds: self
                .mvds
                .iter()
                .map(|m| DraftDependency {
                    lhs: names(m.lhs()),
                    rhs: names(m.rhs()),
                    line: None,
                })
                .collect(),
            key: self.declared_key.map(names),
        }
    }
}

/// Validate a draft and bring it to canonical form.
///
/// Right-side attributes that also occur on the left side are stripped with
/// a warning. A dependency whose right side becomes empty is an error.
pub fn canonicalize(draft: &SchemaDraft) -> Result<(RelationSchema, Vec<Warning>), Error> {
    if draft.attributes.len() > MAX_ATTRIBUTES {
        return Err(Error::AttributeCapExceeded {
            count: draft.attributes.len(),
            cap: MAX_ATTRIBUTES,
        });
    }
    let mut index = HashMap::new();
    for (ordinal, name) in draft.attributes.iter().enumerate() {
        if index.insert(name.as_str(), ordinal).is_some() {
            return Err(Error::DuplicateAttribute { name: name.clone() });
        }
    }
    let resolve = |names: &[String]| -> Result<AttributeSet, Error> {
        names
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::UndeclaredAttribute { name: n.clone() })
            })
            .collect()
    };

    let mut warnings = Vec::new();
    let mut resolve_dependency =
        |dep: &DraftDependency, arrow: &str| -> Result<(AttributeSet, AttributeSet), Error> {
            let lhs = resolve(&dep.lhs)?;
            let rhs = resolve(&dep.rhs)?;
            let overlap = lhs.intersection(rhs);
            if !overlap.is_empty() {
                let names: Vec<&str> = overlap.iter().map(|o| draft.attributes[o].as_str()).collect();
                warnings.push(Warning {
                    line: dep.line,
                    message: format!(
                        "trivial part `{}` stripped from right side of `{} {arrow} {}`",
                        names.join(", "),
                        dep.lhs.join(", "),
                        dep.rhs.join(", ")
                    ),
                });
            }
            Ok((lhs, rhs.difference(lhs)))
        };

    let mut fds = Vec::with_capacity(draft.fds.len());
    for (origin, dep) in draft.fds.iter().enumerate() {
        let (lhs, rhs) = resolve_dependency(dep, FunctionalDependency::ARROW)?;
        fds.push(FunctionalDependency::new(lhs, rhs, origin)?);
    }
    let mut mvds = Vec::with_capacity(draft.mvds.len());
    for (origin, dep) in draft.mvds.iter().enumerate() {
        let (lhs, rhs) = resolve_dependency(dep, MultivaluedDependency::ARROW)?;
        mvds.push(MultivaluedDependency::new(lhs, rhs, origin)?);
    }
    let key = draft.key.as_deref().map(resolve).transpose()?;
    let schema = RelationSchema::from_parts(draft.name.clone(), &draft.attributes, fds, mvds, key)?;
    Ok((schema, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKey {
    pub attributes: AttributeSet,
    /// Name of the referenced table; its primary key equals `attributes`.
    pub references: String,
}

/// How a decomposed table came to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Taken out of the functional dependency with this origin index.
    Fd(usize),
    /// Split off by the multivalued dependency with this origin index.
    Mvd(usize),
    /// What remained of the original relation.
    Residual,
    /// Union of tables sharing a primary key; lists the source table names.
    Merged(Vec<String>),
    /// Added so that some table contains the primary key.
    KeyRelation,
    /// Read from a decomposition file rather than computed.
    Given,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Fd(i) => write!(f, "fd #{}", i + 1),
            Provenance::Mvd(i) => write!(f, "mvd #{}", i + 1),
            Provenance::Residual => f.write_str("residual"),
            Provenance::Merged(names) => write!(f, "merged({})", names.join(", ")),
            Provenance::KeyRelation => f.write_str("key relation"),
            Provenance::Given => f.write_str("given"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposedTable {
    pub name: String,
    pub attributes: AttributeSet,
    pub pk: AttributeSet,
    pub fks: Vec<ForeignKey>,
    pub provenance: Provenance,
}

impl DecomposedTable {
    pub fn new(name: impl Into<String>, attributes: AttributeSet, pk: AttributeSet, provenance: Provenance) -> Self {
        DecomposedTable {
            name: name.into(),
            attributes,
            pk,
            fks: Vec::new(),
            provenance,
        }
    }

    /// Union of all foreign-key attributes.
    pub fn fk_attributes(&self) -> AttributeSet {
        self.fks
            .iter()
            .fold(AttributeSet::empty(), |acc, fk| acc.union(fk.attributes))
    }
}

/// One entry of a decomposition's log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompositionStep {
    Takeout {
        table: String,
        determinant: AttributeSet,
        dependents: AttributeSet,
        crossed: AttributeSet,
        group: u8,
    },
    Merge {
        kept: String,
        absorbed: String,
    },
    Note(String),
}

impl DecompositionStep {
    pub fn render(&self, schema: &RelationSchema) -> String {
        match self {
            DecompositionStep::Takeout {
                table,
                determinant,
                dependents,
                crossed,
                group,
            } => {
                let mut line = if dependents.is_empty() {
                    format!("group {group}: take out {} as {table}", schema.render_set(*determinant))
                } else {
                    format!(
                        "group {group}: take out {} -> {} as {table}",
                        schema.render_set(*determinant),
                        schema.render_set(*dependents)
                    )
                };
                if !crossed.is_empty() {
                    line.push_str(&format!("; cross out {}", schema.render_set(*crossed)));
                }
                line
            }
            DecompositionStep::Merge { kept, absorbed } => {
                format!("merge {absorbed} into {kept} (same primary key)")
            }
            DecompositionStep::Note(text) => text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decomposition {
    pub tables: Vec<DecomposedTable>,
    pub log: Vec<DecompositionStep>,
}

impl Decomposition {
    pub fn table(&self, name: &str) -> Option<&DecomposedTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn covered(&self) -> AttributeSet {
        self.tables
            .iter()
            .fold(AttributeSet::empty(), |acc, t| acc.union(t.attributes))
    }

    /// `(attributes, pk)` pairs in canonical order, ignoring names.
    pub fn shape(&self) -> Vec<(AttributeSet, AttributeSet)> {
        let mut shape: Vec<_> = self.tables.iter().map(|t| (t.attributes, t.pk)).collect();
        shape.sort();
        shape
    }

    /// Check the structural invariants against the source schema.
    pub fn validate(&self, schema: &RelationSchema) -> Result<(), Error> {
        let missing = schema.all().difference(self.covered());
        if !missing.is_empty() {
            return Err(Error::Coverage {
                missing: schema.render_set(missing),
            });
        }
        let mut names = HashMap::new();
        for table in &self.tables {
            if names.insert(table.name.as_str(), table.pk).is_some() {
                return Err(Error::InvalidDecomposition(format!(
                    "duplicate table name {}",
                    table.name
                )));
            }
            if !table.attributes.is_subset(schema.all()) {
                return Err(Error::InvalidDecomposition(format!(
                    "table {} uses undeclared attributes",
                    table.name
                )));
            }
            if table.pk.is_empty() || !table.pk.is_subset(table.attributes) {
                return Err(Error::InvalidDecomposition(format!(
                    "primary key of {} is not a nonempty subset of its attributes",
                    table.name
                )));
            }
        }
        for table in &self.tables {
            for fk in &table.fks {
                if !fk.attributes.is_subset(table.attributes) {
                    return Err(Error::InvalidDecomposition(format!(
                        "foreign key of {} is not within the table",
                        table.name
                    )));
                }
                match names.get(fk.references.as_str()) {
                    Some(pk) if *pk == fk.attributes => {}
                    _ => {
                        return Err(Error::InvalidDecomposition(format!(
                            "foreign key {}.({}) does not match the primary key of {}",
                            table.name,
                            schema.render_set(fk.attributes),
                            fk.references
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Textbook rendering: `T2 (*A, B, C†)` with `*` marking primary
    /// key members and `†` marking foreign key members.
    pub fn render_table(&self, schema: &RelationSchema, table: &DecomposedTable) -> String {
        let fk = table.fk_attributes();
        let cols: Vec<String> = table
            .attributes
            .iter()
            .map(|o| {
                let mut s = String::new();
                if table.pk.contains(o) {
                    s.push('*');
                }
                s.push_str(schema.attribute_name(o));
                if fk.contains(o) {
                    s.push('†');
                }
                s
            })
            .collect();
        format!("{} ({})", table.name, cols.join(", "))
    }
}

/// Mark as foreign key every subset of a table equal to another table's
/// primary key, unless that subset is the whole table.
pub fn designate_foreign_keys(tables: &mut [DecomposedTable]) {
    let pks: Vec<(String, AttributeSet)> = tables.iter().map(|t| (t.name.clone(), t.pk)).collect();
    for table in tables.iter_mut() {
        table.fks = pks
            .iter()
            .filter(|(name, pk)| {
                *name != table.name && pk.is_subset(table.attributes) && *pk != table.attributes
            })
            .map(|(name, pk)| ForeignKey {
                attributes: *pk,
                references: name.clone(),
            })
            .collect();
    }
}
