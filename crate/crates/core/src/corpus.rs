//! The seventeen lifecycle properties, stored one per file under
//! `properties/` and expanded for a given worker count at load time.

use crate::ltl::{parse_with, LtlFormula, ParseContext, ParseError};

pub const COUNT: usize = 17;

const SOURCES: [&str; COUNT] = [
    include_str!("../properties/01.ltl"),
    include_str!("../properties/02.ltl"),
    include_str!("../properties/03.ltl"),
    include_str!("../properties/04.ltl"),
    include_str!("../properties/05.ltl"),
    include_str!("../properties/06.ltl"),
    include_str!("../properties/07.ltl"),
    include_str!("../properties/08.ltl"),
    include_str!("../properties/09.ltl"),
    include_str!("../properties/10.ltl"),
    include_str!("../properties/11.ltl"),
    include_str!("../properties/12.ltl"),
    include_str!("../properties/13.ltl"),
    include_str!("../properties/14.ltl"),
    include_str!("../properties/15.ltl"),
    include_str!("../properties/16.ltl"),
    include_str!("../properties/17.ltl"),
];

/// Source text of formula `n` (1-based).
pub fn source(n: usize) -> Option<&'static str> {
    SOURCES.get(n.checked_sub(1)?).copied()
}

/// Formula `n` with quantifiers expanded over `workers` workers.
pub fn formula(n: usize, workers: usize) -> Option<Result<LtlFormula, ParseError>> {
    source(n).map(|src| parse_with(src, &ParseContext::with_workers(workers)))
}

/// Formulas numbered `1..=15`, the ones stated as obligations of the
/// framework rather than assumptions about the scheduler.
pub fn obligations() -> std::ops::RangeInclusive<usize> {
    1..=15
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_formulas_parse_for_every_worker_count() {
        for w in 1..=3 {
            for n in 1..=COUNT {
                let f = formula(n, w).unwrap().unwrap_or_else(|e| panic!("{n}: {e}"));
                assert!(f.atoms().iter().all(|a| a.ends_with("_s") || a.contains("_w")));
            }
        }
        assert!(source(0).is_none() && source(18).is_none());
    }

    #[test]
    fn quantifiers_expand_structurally() {
        let f = formula(9, 2).unwrap().unwrap();
        let g = crate::ltl::parse("[] (ready_s -> (null_w1 && null_w2))").unwrap();
        assert_eq!(f, g);
        let f = formula(11, 2).unwrap().unwrap();
        let g = crate::ltl::parse("[] ((ready_w1 || ready_w2) -> starting_s)").unwrap();
        assert_eq!(f, g);
    }
}
