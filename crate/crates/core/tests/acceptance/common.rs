use rental_core::ledger::{Node, Transaction};

pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    /// Extra lines printed under the summary, typically the first few
    /// violations.
    pub details: Vec<String>,
}

impl Outcome {
    pub fn new(passed: bool, summary: impl Into<String>) -> Self {
        Outcome {
            passed,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    pub fn fail(summary: impl Into<String>) -> Self {
        Self::new(false, summary)
    }

    pub fn with_details(mut self, details: impl IntoIterator<Item = String>) -> Self {
        self.details.extend(details.into_iter().take(10));
        self
    }
}

/// Calls `f` with every node of `tx` and its closest enclosing exercise.
pub fn walk<'a>(tx: &'a Transaction, f: &mut impl FnMut(&'a Node, Option<&'a Node>)) {
    fn go<'a>(
        nodes: &'a [Node],
        parent: Option<&'a Node>,
        f: &mut impl FnMut(&'a Node, Option<&'a Node>),
    ) {
        for n in nodes {
            f(n, parent);
            go(n.children(), Some(n), f);
        }
    }
    go(&tx.nodes, None, f);
}
