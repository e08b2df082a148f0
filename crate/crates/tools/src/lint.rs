//! Syntax and semantic checks for scenario and situation files.

use vtd::scenario::{parse, validate_scenario, validate_situation, Document, Scenario};

/// Diagnostics for one file, or a one-line summary when it is clean.
pub fn lint(file_name: &str, text: &str, scenario: Option<&Scenario>) -> Result<String, Vec<String>> {
    let doc = parse(text).map_err(|errors| errors.iter().map(|e| format!("{file_name}:{e}")).collect::<Vec<_>>())?;
    let (problems, summary) = match &doc {
        Document::Scenario(s) => (
            validate_scenario(s),
            format!("SCENARIO \"{}\": {} entities", s.name, s.entity_count()),
        ),
        Document::Situation(s) => (
            validate_situation(s, scenario),
            format!("SITUATION \"{}\": {} objects", s.name, s.objects.len()),
        ),
    };
    if problems.is_empty() {
        Ok(format!("{file_name}: ok, {summary}"))
    } else {
        Err(problems.iter().map(|p| format!("{file_name}: {p}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_position() {
        let errs = lint("a.scn", "SCENARIO \"x\" {\n  GROUND {\n", None).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("a.scn:"), "{}", errs[0]);
    }
}
