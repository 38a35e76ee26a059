use super::SubGoals;

/// Fewer than three usable sub-goals in a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("expected 3 sub-goals, found {usable}")]
pub struct ParseFailure {
    pub usable: usize,
}

/// Strips "-", "*", "•", "1.", "2)" and similar list markers.
fn strip_marker(item: &str) -> &str {
    let item = item.trim();
    let item = item.trim_start_matches(['-', '*', '•']).trim_start();
    let digits = item.len() - item.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &item[digits..];
        if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return rest.trim();
        }
    }
    item.trim()
}

/// Splits a completion on commas and newlines and keeps the first three items.
pub fn parse_subgoals(completion: &str) -> Result<SubGoals, ParseFailure> {
    let items: Vec<&str> = completion
        .split([',', '\n'])
        .map(strip_marker)
        .map(|s| s.trim_end_matches('.').trim())
        .filter(|s| !s.is_empty())
        .collect();
    if items.len() < 3 {
        return Err(ParseFailure { usable: items.len() });
    }
    SubGoals::new(&items[..3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decision_outputs() {
        let g = parse_subgoals("find cow, move to cow, eat cow").unwrap();
        assert_eq!(g.as_slice(), ["find cow", "move to cow", "eat cow"]);
        let g = parse_subgoals("collect stone, make stone sword, make stone pickaxe").unwrap();
        assert_eq!(g.as_slice(), ["collect stone", "make stone sword", "make stone pickaxe"]);
    }

    #[test]
    fn list_markers_and_extras() {
        let g = parse_subgoals("1. collect wood\n2) place table\n- make wood pickaxe\n* drink water").unwrap();
        assert_eq!(g.as_slice(), ["collect wood", "place table", "make wood pickaxe"]);
    }

    #[test]
    fn failures() {
        assert_eq!(parse_subgoals(""), Err(ParseFailure { usable: 0 }));
        assert_eq!(parse_subgoals("eat cow, drink water"), Err(ParseFailure { usable: 2 }));
        assert_eq!(parse_subgoals(" , \n - \n"), Err(ParseFailure { usable: 0 }));
    }

    proptest! {
        #[test]
        fn join_then_parse_round_trips(goals in proptest::array::uniform3("[a-z][a-z ]{0,14}[a-z]")) {
            let joined = goals.join(", ");
            let parsed = parse_subgoals(&joined).unwrap();
            prop_assert_eq!(parsed.as_slice(), &goals[..]);
        }
    }
}
