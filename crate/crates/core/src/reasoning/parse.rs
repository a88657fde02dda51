use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::diagnostics::{ByteSpan, DiagnosticCode as Code, ParseDiagnostic, Severity};
use super::lexer::{tokenize, Token};
use super::{
    normalize_text, tags, AnalysisSection, CompromiseSection, EmotionWeight, EntityKind,
    EntitySection, EthicalReasoning,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

/// A successfully parsed document plus any recovery warnings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub document: EthicalReasoning,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Parse failure. Holds every diagnostic gathered, errors and warnings alike;
/// at least one has error severity.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseError {
    fn first_error(&self) -> Option<&ParseDiagnostic> {
        self.diagnostics.iter().find(|d| d.severity == Severity::Error)
    }

    /// Code of the first error diagnostic.
    pub fn code(&self) -> Code {
        self.first_error().map_or(Code::MalformedXml, |d| d.code)
    }

    pub fn has_code(&self, code: Code) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error && d.code == code)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_error() {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("parse failed"),
        }
    }
}

/// Parses raw bytes; invalid UTF-8 is reported as malformed input.
pub fn parse_reasoning_bytes(input: &[u8], mode: ParseMode) -> Result<Parsed, ParseError> {
    match std::str::from_utf8(input) {
        Ok(s) => parse_reasoning(s, mode),
        Err(e) => {
            let start = e.valid_up_to();
            let end = start + e.error_len().unwrap_or(input.len() - start);
            Err(ParseError {
                diagnostics: vec![ParseDiagnostic::error(
                    Code::MalformedXml,
                    ByteSpan::new(start, end),
                    "input is not valid UTF-8",
                )],
            })
        }
    }
}

/// Parses an ethical reasoning document.
///
/// Strict mode accepts exactly one well-formed document with canonical tag
/// names (an XML declaration, comments and surrounding whitespace are
/// allowed). Lenient mode also strips markdown fences and surrounding prose,
/// folds tag case, splits delimited pro/con text into items, and skips
/// unknown tags, emitting a warning for each recovery.
pub fn parse_reasoning(input: &str, mode: ParseMode) -> Result<Parsed, ParseError> {
    let mut p = Parser {
        input,
        mode,
        diags: Vec::new(),
    };
    let doc = p.run();
    let failed = p.diags.iter().any(|d| d.severity == Severity::Error);
    match doc {
        Some(document) if !failed => Ok(Parsed {
            document,
            diagnostics: p.diags,
        }),
        _ => {
            if !failed {
                p.diags.push(ParseDiagnostic::error(
                    Code::MalformedXml,
                    ByteSpan::new(0, input.len()),
                    "no document could be read",
                ));
            }
            Err(ParseError { diagnostics: p.diags })
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    open: ByteSpan,
    end: usize,
    children: Vec<Node>,
}

impl Element {
    fn span(&self) -> ByteSpan {
        ByteSpan::new(self.open.start, self.end)
    }
}

#[derive(Debug)]
enum Node {
    Elem(Element),
    Text { span: ByteSpan, text: String },
}

struct Parser<'a> {
    input: &'a str,
    mode: ParseMode,
    diags: Vec<ParseDiagnostic>,
}

/// Canonical name for a tag under lenient folding: case and `-`/`_`
/// separators are ignored.
fn fold_name(raw: &str) -> Option<&'static str> {
    let key: String = raw
        .chars()
        .filter(|c| *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect();
    tags::ALL.iter().copied().find(|t| t.replace('_', "") == key)
}

fn is_fence_line(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("```") || t.starts_with("~~~")
}

impl<'a> Parser<'a> {
    fn lenient(&self) -> bool {
        self.mode == ParseMode::Lenient
    }

    /// Emits an error in strict mode and a warning in lenient mode.
    fn recover(&mut self, code: Code, span: ByteSpan, msg: impl Into<String>) {
        let d = if self.lenient() {
            ParseDiagnostic::warning(code, span, msg)
        } else {
            ParseDiagnostic::error(code, span, msg)
        };
        self.diags.push(d);
    }

    fn error(&mut self, code: Code, span: ByteSpan, msg: impl Into<String>) {
        self.diags.push(ParseDiagnostic::error(code, span, msg));
    }

    fn warn(&mut self, code: Code, span: ByteSpan, msg: impl Into<String>) {
        self.diags.push(ParseDiagnostic::warning(code, span, msg));
    }

    fn canonical(&self, raw: &str) -> Option<&'static str> {
        if self.lenient() {
            fold_name(raw)
        } else {
            tags::ALL.iter().copied().find(|t| *t == raw)
        }
    }

    fn run(&mut self) -> Option<EthicalReasoning> {
        let tokens = tokenize(self.input);
        let range = if self.lenient() {
            self.select_region(&tokens)?
        } else {
            0..tokens.len()
        };
        let top = self.build_tree(&tokens[range]);
        let root = self.pick_root(top)?;
        self.read_document(root)
    }

    /// Lenient only: narrows the token range to the first..=last canonical
    /// tag and reports what was cut away.
    fn select_region(&mut self, tokens: &[Token<'_>]) -> Option<std::ops::Range<usize>> {
        let is_canon = |t: &Token<'_>| match t {
            Token::Open { name, .. } | Token::Close { name, .. } => fold_name(name).is_some(),
            _ => false,
        };
        let Some(first) = tokens.iter().position(is_canon) else {
            self.error(
                Code::MissingSection,
                ByteSpan::new(0, self.input.len()),
                "no reasoning document tags found",
            );
            return None;
        };
        let last = tokens.iter().rposition(is_canon).unwrap_or(first);
        self.report_outside(tokens[..first].iter().chain(&tokens[last + 1..]));
        Some(first..last + 1)
    }

    fn report_outside<'t>(&mut self, tokens: impl Iterator<Item = &'t Token<'t>>) {
        let mut fence: Option<ByteSpan> = None;
        let mut prose: Option<ByteSpan> = None;
        let widen = |acc: &mut Option<ByteSpan>, s: ByteSpan| {
            *acc = Some(match *acc {
                Some(a) => ByteSpan::new(a.start.min(s.start), a.end.max(s.end)),
                None => s,
            });
        };
        for tok in tokens {
            match tok {
                Token::Comment { .. } | Token::Declaration { .. } => {}
                Token::Open { span, .. } | Token::Close { span, .. } => widen(&mut prose, *span),
                Token::Text { span, .. } => {
                    let text = &self.input[span.start..span.end];
                    let mut offset = span.start;
                    for line in text.split_inclusive('\n') {
                        let ls = ByteSpan::new(offset, offset + line.len());
                        offset += line.len();
                        if is_fence_line(line) {
                            widen(&mut fence, ls);
                        } else if !line.trim().is_empty() {
                            widen(&mut prose, ls);
                        }
                    }
                }
            }
        }
        if let Some(s) = fence {
            self.warn(Code::FenceStripped, s, "markdown fence around the document removed");
        }
        if let Some(s) = prose {
            self.warn(Code::ProseStripped, s, "text outside the document ignored");
        }
    }

    fn build_tree(&mut self, tokens: &[Token<'_>]) -> Vec<Node> {
        let mut stack: Vec<Element> = Vec::new();
        let mut top: Vec<Node> = Vec::new();
        let mut seen_element = false;

        fn attach(stack: &mut [Element], top: &mut Vec<Node>, node: Node) {
            match stack.last_mut() {
                Some(parent) => parent.children.push(node),
                None => top.push(node),
            }
        }

        for tok in tokens {
            match *tok {
                Token::Declaration { span } => {
                    if seen_element || !stack.is_empty() {
                        self.recover(Code::MalformedXml, span, "declaration after document start");
                    }
                }
                Token::Comment { .. } => {}
                Token::Text { span, stray_lt } => {
                    if stray_lt {
                        self.recover(Code::MalformedXml, span, "unescaped `<` in text");
                    }
                    let text = self.decode_text(span);
                    if stack.is_empty() && !self.lenient() && !text.trim().is_empty() {
                        self.error(Code::MalformedXml, span, "text outside the root element");
                    }
                    attach(&mut stack, &mut top, Node::Text { span, text });
                }
                Token::Open {
                    name,
                    span,
                    self_closing,
                    has_attrs,
                } => {
                    if has_attrs {
                        self.recover(Code::MalformedXml, span, format!("attributes on <{name}> are not supported"));
                    }
                    let canon = self.canonical_or_report(name, span);
                    seen_element = true;
                    let el = Element {
                        name: canon,
                        open: span,
                        end: span.end,
                        children: Vec::new(),
                    };
                    if self_closing {
                        attach(&mut stack, &mut top, Node::Elem(el));
                    } else {
                        stack.push(el);
                    }
                }
                Token::Close { name, span, has_attrs } => {
                    if has_attrs {
                        self.recover(Code::MalformedXml, span, "junk in closing tag");
                    }
                    let canon = self.canonical(name).map_or_else(|| name.to_string(), str::to_string);
                    match stack.iter().rposition(|e| e.name == canon) {
                        Some(idx) if idx + 1 == stack.len() => {
                            let mut el = stack.pop().expect("nonempty");
                            el.end = span.end;
                            attach(&mut stack, &mut top, Node::Elem(el));
                        }
                        Some(idx) if self.lenient() => {
                            while stack.len() > idx + 1 {
                                let mut inner = stack.pop().expect("nonempty");
                                inner.end = span.start;
                                self.warn(
                                    Code::MalformedXml,
                                    inner.open,
                                    format!("<{}> closed implicitly by </{name}>", inner.name),
                                );
                                attach(&mut stack, &mut top, Node::Elem(inner));
                            }
                            let mut el = stack.pop().expect("nonempty");
                            el.end = span.end;
                            attach(&mut stack, &mut top, Node::Elem(el));
                        }
                        _ => self.recover(Code::MalformedXml, span, format!("unmatched </{name}>")),
                    }
                }
            }
        }

        while let Some(mut el) = stack.pop() {
            el.end = self.input.len();
            let canonical = tags::is_canonical(&el.name);
            if self.lenient() && !canonical {
                self.warn(Code::MalformedXml, el.open, format!("unclosed <{}> closed at end of input", el.name));
            } else {
                self.error(Code::MalformedXml, el.open, format!("<{}> is never closed", el.name));
            }
            attach(&mut stack, &mut top, Node::Elem(el));
        }
        top
    }

    fn canonical_or_report(&mut self, raw: &str, span: ByteSpan) -> String {
        match self.canonical(raw) {
            Some(c) => {
                if c != raw {
                    self.warn(Code::CaseFolded, span, format!("<{raw}> read as <{c}>"));
                }
                c.to_string()
            }
            None => raw.to_string(),
        }
    }

    fn decode_text(&mut self, span: ByteSpan) -> String {
        let raw = &self.input[span.start..span.end];
        if !raw.contains('&') {
            return raw.to_string();
        }
        let mut out = String::with_capacity(raw.len());
        let mut rest = raw;
        let mut offset = span.start;
        while let Some(i) = rest.find('&') {
            out.push_str(&rest[..i]);
            let after = &rest[i + 1..];
            let entity = after
                .char_indices()
                .take(12)
                .find(|&(_, c)| c == ';')
                .map(|(j, _)| &after[..j]);
            let decoded = entity.and_then(|e| match e {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                _ => {
                    let code = if let Some(hex) = e.strip_prefix("#x").or_else(|| e.strip_prefix("#X")) {
                        u32::from_str_radix(hex, 16).ok()
                    } else if let Some(dec) = e.strip_prefix('#') {
                        dec.parse::<u32>().ok()
                    } else {
                        None
                    };
                    code.filter(|&c| c != 0).and_then(char::from_u32)
                }
            });
            match (entity, decoded) {
                (Some(e), Some(c)) => {
                    out.push(c);
                    let used = i + 1 + e.len() + 1;
                    offset += used;
                    rest = &rest[used..];
                }
                _ => {
                    let at = offset + i;
                    self.recover(Code::MalformedXml, ByteSpan::new(at, at + 1), "bare `&` in text");
                    out.push('&');
                    offset += i + 1;
                    rest = &rest[i + 1..];
                }
            }
        }
        out.push_str(rest);
        out
    }

    fn pick_root(&mut self, top: Vec<Node>) -> Option<Element> {
        let full = ByteSpan::new(0, self.input.len());
        let mut elements: Vec<Element> = top
            .into_iter()
            .filter_map(|n| match n {
                Node::Elem(e) => Some(e),
                Node::Text { span, text } => {
                    if self.lenient() && !text.trim().is_empty() {
                        self.warn(Code::ProseStripped, span, "text between top-level elements ignored");
                    }
                    None
                }
            })
            .collect();

        if !self.lenient() {
            return match elements.len() {
                0 => {
                    self.error(Code::MissingSection, full, "no root element");
                    None
                }
                1 => {
                    let root = elements.pop().expect("one element");
                    if root.name != tags::ROOT {
                        let msg = format!("root element is <{}>, expected <{}>", root.name, tags::ROOT);
                        self.error(Code::MalformedXml, root.open, msg);
                        return None;
                    }
                    Some(root)
                }
                _ => {
                    self.error(Code::MalformedXml, elements[1].open, "more than one top-level element");
                    None
                }
            };
        }

        if let Some(last_root) = elements.iter().rposition(|e| e.name == tags::ROOT) {
            let root = elements.remove(last_root);
            for other in &elements {
                self.warn(Code::ProseStripped, other.span(), format!("top-level <{}> outside the chosen document ignored", other.name));
            }
            return Some(root);
        }
        if elements.is_empty() {
            self.error(Code::MissingSection, full, "no root element");
            return None;
        }
        let start = elements[0].open.start;
        let end = elements.last().map_or(start, |e| e.end);
        self.warn(
            Code::MissingSection,
            ByteSpan::new(start, end),
            format!("<{}> wrapper missing; reading sections from top level", tags::ROOT),
        );
        Some(Element {
            name: tags::ROOT.to_string(),
            open: ByteSpan::new(start, start),
            end,
            children: elements.into_iter().map(Node::Elem).collect(),
        })
    }

    /// Splits an element's children into the allowed named slots, reporting
    /// stray text, unknown tags and duplicates.
    fn slots<'e>(&mut self, parent: &'e Element, allowed: &[&'static str]) -> Vec<Option<&'e Element>> {
        let mut found: Vec<Option<&Element>> = vec![None; allowed.len()];
        for child in &parent.children {
            match child {
                Node::Text { span, text } => {
                    if !text.trim().is_empty() {
                        self.recover(Code::MalformedXml, *span, format!("unexpected text inside <{}>", parent.name));
                    }
                }
                Node::Elem(e) => match allowed.iter().position(|a| *a == e.name) {
                    Some(i) if found[i].is_none() => found[i] = Some(e),
                    Some(_) => self.recover(Code::MalformedXml, e.open, format!("duplicate <{}>", e.name)),
                    None => self.recover(Code::UnknownTag, e.open, format!("<{}> not expected inside <{}>", e.name, parent.name)),
                },
            }
        }
        found
    }

    fn missing(&mut self, parent: &Element, tag: &str) {
        self.error(Code::MissingSection, parent.span(), format!("<{}> is missing <{tag}>", parent.name));
    }

    fn read_document(&mut self, root: Element) -> Option<EthicalReasoning> {
        let allowed = [tags::ANALYSIS, tags::LOGICAL, tags::EMOTIONAL, tags::COMPROMISE];
        let slots = self.slots(&root, &allowed);
        for (slot, tag) in slots.iter().zip(allowed) {
            if slot.is_none() {
                self.missing(&root, tag);
            }
        }
        let analysis = slots[0].and_then(|e| self.read_analysis(e));
        let logical = slots[1].and_then(|e| self.read_entity(e, EntityKind::Logical));
        let emotional = slots[2].and_then(|e| self.read_entity(e, EntityKind::Emotional));
        let compromise = slots[3].and_then(|e| self.read_compromise(e));
        EthicalReasoning::new(analysis?, logical?, emotional?, compromise?)
    }

    fn leaf(&mut self, el: &Element) -> Option<String> {
        let mut text = String::new();
        self.collect_text(el, &mut text, true);
        let t = normalize_text(&text);
        if t.is_empty() {
            self.error(Code::EmptyField, el.span(), format!("<{}> is empty", el.name));
            return None;
        }
        Some(t)
    }

    fn collect_text(&mut self, el: &Element, out: &mut String, outer: bool) {
        for child in &el.children {
            match child {
                Node::Text { text, .. } => out.push_str(text),
                Node::Elem(inner) => {
                    if outer {
                        self.recover(Code::UnknownTag, inner.open, format!("markup <{}> inside <{}> flattened", inner.name, el.name));
                    }
                    out.push(' ');
                    self.collect_text(inner, out, false);
                    out.push(' ');
                }
            }
        }
    }

    fn read_leaf_slot(&mut self, parent: &Element, slot: Option<&Element>, tag: &str) -> Option<String> {
        match slot {
            Some(e) => self.leaf(e),
            None => {
                self.missing(parent, tag);
                None
            }
        }
    }

    fn read_analysis(&mut self, el: &Element) -> Option<AnalysisSection> {
        let s = self.slots(el, &[tags::MAIN_ISSUE, tags::COMPLEXITY]);
        let main = self.read_leaf_slot(el, s[0], tags::MAIN_ISSUE);
        let complexity = self.read_leaf_slot(el, s[1], tags::COMPLEXITY);
        AnalysisSection::new(&main?, &complexity?).ok()
    }

    fn read_entity(&mut self, el: &Element, kind: EntityKind) -> Option<EntitySection> {
        let s = self.slots(el, &[tags::INITIAL, tags::PROS, tags::CONS, tags::IMPROVED]);
        let initial = self.read_leaf_slot(el, s[0], tags::INITIAL);
        let pros = self.read_list(el, s[1], tags::PROS);
        let cons = self.read_list(el, s[2], tags::CONS);
        let improved = self.read_leaf_slot(el, s[3], tags::IMPROVED);
        EntitySection::new_unchecked_lists(kind, &initial?, pros?, cons?, &improved?).ok()
    }

    fn read_list(&mut self, parent: &Element, slot: Option<&Element>, tag: &str) -> Option<Vec<String>> {
        let Some(list) = slot else {
            if self.lenient() {
                self.warn(Code::MissingSection, parent.span(), format!("<{}> has no <{tag}>; treated as empty", parent.name));
                return Some(Vec::new());
            }
            self.missing(parent, tag);
            return None;
        };

        let mut items = Vec::new();
        let mut loose = String::new();
        let mut loose_span: Option<ByteSpan> = None;
        for child in &list.children {
            match child {
                Node::Elem(e) if e.name == tags::ITEM => {
                    let mut text = String::new();
                    self.collect_text(e, &mut text, true);
                    let t = normalize_text(&text);
                    if t.is_empty() {
                        self.recover(Code::EmptyField, e.span(), "empty <item>");
                    } else {
                        items.push(t);
                    }
                }
                Node::Elem(e) => {
                    self.recover(Code::UnknownTag, e.open, format!("<{}> not expected inside <{tag}>", e.name));
                }
                Node::Text { span, text } => {
                    if !text.trim().is_empty() {
                        loose.push_str(text);
                        loose_span.get_or_insert(*span);
                    }
                }
            }
        }

        if let Some(span) = loose_span {
            if !items.is_empty() {
                self.recover(Code::MalformedXml, span, format!("text beside <item> elements in <{tag}> ignored"));
            } else if self.lenient() {
                items = split_items(&loose);
                self.warn(Code::ItemsSplit, span, format!("<{tag}> text split into {} items", items.len()));
            } else {
                self.error(Code::MalformedXml, span, format!("<{tag}> must contain <item> elements"));
            }
        }
        if items.is_empty() {
            self.recover(Code::EmptyField, list.span(), format!("<{tag}> has no items"));
        }
        Some(items)
    }

    fn read_compromise(&mut self, el: &Element) -> Option<CompromiseSection> {
        let s = self.slots(el, &[tags::EWC, tags::FINAL]);
        let weight = match s[0] {
            Some(e) => self.read_weight(e),
            None => {
                self.missing(el, tags::EWC);
                None
            }
        };
        let final_decision = self.read_leaf_slot(el, s[1], tags::FINAL);
        CompromiseSection::new(weight?, &final_decision?).ok()
    }

    fn read_weight(&mut self, el: &Element) -> Option<EmotionWeight> {
        let text = self.leaf(el)?;
        let span = el.span();
        match EmotionWeight::parse_decimal(&text) {
            Ok((w, rounded)) => {
                if rounded {
                    self.recover(Code::InvalidValue, span, format!("coefficient {text} rounded to {w}"));
                }
                Some(w)
            }
            Err(e) if self.lenient() => {
                let number = text
                    .split(|c: char| !(c.is_ascii_digit() || c == '.'))
                    .find(|s| !s.is_empty() && *s != ".")
                    .and_then(|s| EmotionWeight::parse_decimal(s).ok());
                match number {
                    Some((w, _)) => {
                        self.warn(Code::InvalidValue, span, format!("coefficient read as {w} from {text:?}"));
                        Some(w)
                    }
                    None => {
                        self.error(Code::InvalidValue, span, e.to_string());
                        None
                    }
                }
            }
            Err(e) => {
                self.error(Code::InvalidValue, span, e.to_string());
                None
            }
        }
    }
}

/// Splits loose list text on newlines, or on semicolons for single-line
/// text, dropping bullet markers.
fn split_items(text: &str) -> Vec<String> {
    let trimmed = text.trim();
    let parts: Vec<&str> = if trimmed.contains('\n') {
        trimmed.lines().collect()
    } else {
        trimmed.split(';').collect()
    };
    parts
        .into_iter()
        .map(|p| {
            let p = p.trim();
            let p = p.trim_start_matches(['-', '*', '•']).trim_start();
            let digits = p.chars().take_while(char::is_ascii_digit).count();
            let p = match p[digits..].strip_prefix(['.', ')']) {
                Some(rest) if digits > 0 => rest,
                _ => p,
            };
            normalize_text(p)
        })
        .filter(|p| !p.is_empty())
        .collect()
}
