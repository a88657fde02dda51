use std::fmt::Write;

use super::{tags, EntitySection, EthicalReasoning};

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

fn leaf(out: &mut String, indent: usize, tag: &str, text: &str) {
    let _ = writeln!(out, "{:indent$}<{tag}>{}</{tag}>", "", escape(text), indent = indent);
}

fn list(out: &mut String, tag: &str, items: &[String]) {
    if items.is_empty() {
        let _ = writeln!(out, "    <{tag}></{tag}>");
        return;
    }
    let _ = writeln!(out, "    <{tag}>");
    for item in items {
        leaf(out, 6, tags::ITEM, item);
    }
    let _ = writeln!(out, "    </{tag}>");
}

fn entity(out: &mut String, section: &EntitySection) {
    let tag = section.kind().tag();
    let _ = writeln!(out, "  <{tag}>");
    leaf(out, 4, tags::INITIAL, section.initial_solution());
    list(out, tags::PROS, section.pros());
    list(out, tags::CONS, section.cons());
    leaf(out, 4, tags::IMPROVED, section.improved_solution());
    let _ = writeln!(out, "  </{tag}>");
}

/// Renders the canonical form: two-space indentation, one element per line,
/// no declaration, trailing newline.
pub fn serialize_reasoning(doc: &EthicalReasoning) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<{}>", tags::ROOT);

    let _ = writeln!(out, "  <{}>", tags::ANALYSIS);
    leaf(&mut out, 4, tags::MAIN_ISSUE, doc.analysis.main_issue());
    leaf(&mut out, 4, tags::COMPLEXITY, doc.analysis.complexity_analysis());
    let _ = writeln!(out, "  </{}>", tags::ANALYSIS);

    entity(&mut out, &doc.logical);
    entity(&mut out, &doc.emotional);

    let _ = writeln!(out, "  <{}>", tags::COMPROMISE);
    leaf(&mut out, 4, tags::EWC, &doc.compromise.emotion_weight().to_string());
    leaf(&mut out, 4, tags::FINAL, doc.compromise.final_decision());
    let _ = writeln!(out, "  </{}>", tags::COMPROMISE);

    let _ = writeln!(out, "</{}>", tags::ROOT);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::tests::sample_doc;

    #[test]
    fn weight_rendered_with_two_decimals() {
        let xml = serialize_reasoning(&sample_doc(0.5, "A", "B", "C"));
        assert!(xml.contains("<emotion_weight_coefficient>0.50</emotion_weight_coefficient>"));
    }

    #[test]
    fn equal_documents_give_identical_bytes() {
        let a = serialize_reasoning(&sample_doc(0.25, "A", "B", "C"));
        let b = serialize_reasoning(&sample_doc(0.25, "A", "B", "C"));
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn markup_characters_are_escaped() {
        let xml = serialize_reasoning(&sample_doc(0.0, "a<b & c>d", "B", "C"));
        assert!(xml.contains("a&lt;b &amp; c&gt;d"));
    }
}
