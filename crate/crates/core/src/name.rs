//! Names, co-names and the deterministic fresh-name supply.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Whether a name is an ordinary channel or a success action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NameKind {
    Channel,
    Success,
}

/// A name drawn from a totally ordered universe.
///
/// Channel names order before success names, then lexicographically. Binders of
/// canonical terms use the reserved `_k` identifiers, which never appear free in
/// parsed input.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    kind: NameKind,
    id: Arc<str>,
}

impl Name {
    pub fn channel(id: &str) -> Self {
        Name { kind: NameKind::Channel, id: Arc::from(id) }
    }

    pub fn success(id: &str) -> Self {
        Name { kind: NameKind::Success, id: Arc::from(id) }
    }

    /// The `k`-th canonical binder name.
    pub fn binder(k: usize) -> Self {
        static COMMON: OnceLock<Vec<Name>> = OnceLock::new();
        let common = COMMON.get_or_init(|| (0..256).map(|k| Name::channel(&format!("_{k}"))).collect());
        common.get(k).cloned().unwrap_or_else(|| Name::channel(&format!("_{k}")))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> NameKind {
        self.kind
    }

    pub fn is_success(&self) -> bool {
        self.kind == NameKind::Success
    }

    /// True for identifiers `fresh` could return.
    pub fn in_fresh_sequence(&self) -> bool {
        self.id.strip_prefix('n').is_some_and(|k| !k.is_empty() && k.bytes().all(|c| c.is_ascii_digit()))
    }

    /// True for the reserved identifiers used by canonical binders.
    pub fn is_reserved(&self) -> bool {
        self.id.starts_with('_')
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NameKind::Channel => write!(f, "{}", self.id),
            NameKind::Success => write!(f, "{}!", self.id),
        }
    }
}

/// Least name of the sequence `n0, n1, n2, ...` that is not in `used`.
pub fn fresh<'a, I>(used: I) -> Name
where
    I: IntoIterator<Item = &'a Name>,
{
    let taken: BTreeSet<&str> = used.into_iter().map(|n| n.id()).collect();
    (0..)
        .map(|k| format!("n{k}"))
        .find(|id| !taken.contains(id.as_str()))
        .map(|id| Name::channel(&id))
        .expect("the fresh-name sequence is infinite")
}

/// A name or co-name, as used in refusal sets and barbs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Polarity {
    /// `a`: an input on the channel.
    In(Name),
    /// `~a`: an output on the channel.
    Out(Name),
}

impl Polarity {
    pub fn name(&self) -> &Name {
        match self {
            Polarity::In(n) | Polarity::Out(n) => n,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::In(n) => write!(f, "{n}"),
            Polarity::Out(n) => write!(f, "~{n}"),
        }
    }
}
