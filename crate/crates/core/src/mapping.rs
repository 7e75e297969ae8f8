//! Span-to-clause mapping: a predicted character span is assigned to the
//! clause it overlaps most.

use serde::{Deserialize, Serialize};

use crate::qa_task::Context;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Overlap in characters, one entry per clause.
    pub overlaps: Vec<usize>,
    /// 1-based winning clause.
    pub winner: usize,
}

fn intersection(a: (usize, usize), b: (usize, usize)) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

/// Maps `span` (character range, end exclusive) to a 1-based clause index.
///
/// Ties go to the lowest clause index. A span touching only separator
/// characters is assigned to the clause whose start is nearest the span
/// start (again lowest index on ties).
pub fn span_to_clause(span: (usize, usize), context: &Context) -> Result<(usize, OverlapReport)> {
    if context.offsets.is_empty() {
        return Err(Error::EmptyContext);
    }
    if span.0 >= span.1 {
        return Err(Error::InvalidInput(format!("empty span {span:?}")));
    }
    let overlaps: Vec<usize> = context.offsets.iter().map(|&c| intersection(span, c)).collect();

    let mut winner = 0;
    for (i, &o) in overlaps.iter().enumerate() {
        if o > overlaps[winner] {
            winner = i;
        }
    }
    if overlaps[winner] == 0 {
        winner = context
            .offsets
            .iter()
            .enumerate()
            .min_by_key(|(i, &(start, _))| (start.abs_diff(span.0), *i))
            .map(|(i, _)| i)
            .unwrap_or(0);
    }
    let winner = winner + 1;
    Ok((winner, OverlapReport { overlaps, winner }))
}
