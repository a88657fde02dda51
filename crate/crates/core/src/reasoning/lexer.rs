//! Tokenizer for the small XML subset used by reasoning documents.
//!
//! Anything that does not look like a tag, comment, or declaration is text,
//! so the lexer never fails; a stray `<` is reported through
//! [`Token::Text::stray_lt`] and left for the parser to judge.

use super::diagnostics::ByteSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token<'a> {
    Open {
        name: &'a str,
        span: ByteSpan,
        self_closing: bool,
        has_attrs: bool,
    },
    Close {
        name: &'a str,
        span: ByteSpan,
        has_attrs: bool,
    },
    Text {
        span: ByteSpan,
        stray_lt: bool,
    },
    Comment {
        span: ByteSpan,
    },
    Declaration {
        span: ByteSpan,
    },
}

#[cfg(test)]
impl Token<'_> {
    pub(crate) fn span(&self) -> ByteSpan {
        match *self {
            Token::Open { span, .. }
            | Token::Close { span, .. }
            | Token::Text { span, .. }
            | Token::Comment { span }
            | Token::Declaration { span } => span,
        }
    }
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b':')
}

pub(crate) fn tokenize(input: &str) -> Vec<Token<'_>> {
    let bytes = input.as_bytes();
    let mut tokens: Vec<Token<'_>> = Vec::new();
    let mut pos = 0;
    // Once a search for "-->" or "?>" fails, later searches would fail too.
    let mut no_comment_end = false;
    let mut no_decl_end = false;

    let push_text = |tokens: &mut Vec<Token<'_>>, start: usize, end: usize, stray: bool| {
        if start == end {
            return;
        }
        if let Some(Token::Text { span, stray_lt }) = tokens.last_mut() {
            if span.end == start {
                span.end = end;
                *stray_lt |= stray;
                return;
            }
        }
        tokens.push(Token::Text {
            span: ByteSpan::new(start, end),
            stray_lt: stray,
        });
    };

    while pos < bytes.len() {
        let Some(off) = bytes[pos..].iter().position(|&b| b == b'<') else {
            push_text(&mut tokens, pos, bytes.len(), false);
            break;
        };
        let lt = pos + off;
        push_text(&mut tokens, pos, lt, false);

        match lex_markup(input, lt, &mut no_comment_end, &mut no_decl_end) {
            Some((tok, end)) => {
                tokens.push(tok);
                pos = end;
            }
            None => {
                push_text(&mut tokens, lt, lt + 1, true);
                pos = lt + 1;
            }
        }
    }
    tokens
}

fn lex_markup<'a>(
    input: &'a str,
    lt: usize,
    no_comment_end: &mut bool,
    no_decl_end: &mut bool,
) -> Option<(Token<'a>, usize)> {
    let bytes = input.as_bytes();
    let rest = &input[lt..];

    if let Some(body) = rest.strip_prefix("<!--") {
        if *no_comment_end {
            return None;
        }
        return match body.find("-->") {
            Some(i) => {
                let end = lt + 4 + i + 3;
                Some((Token::Comment { span: ByteSpan::new(lt, end) }, end))
            }
            None => {
                *no_comment_end = true;
                None
            }
        };
    }
    if let Some(body) = rest.strip_prefix("<?") {
        if *no_decl_end {
            return None;
        }
        return match body.find("?>") {
            Some(i) => {
                let end = lt + 2 + i + 2;
                Some((Token::Declaration { span: ByteSpan::new(lt, end) }, end))
            }
            None => {
                *no_decl_end = true;
                None
            }
        };
    }

    let closing = bytes.get(lt + 1) == Some(&b'/');
    let name_start = lt + 1 + usize::from(closing);
    if !bytes.get(name_start).copied().is_some_and(is_name_start) {
        return None;
    }
    let mut name_end = name_start + 1;
    while name_end < bytes.len() && is_name_char(bytes[name_end]) {
        name_end += 1;
    }
    let next = *bytes.get(name_end)?;
    if !(next == b'>' || next == b'/' || next.is_ascii_whitespace()) {
        return None;
    }
    // The tag body runs to the next '>' and may not contain another '<'.
    let mut gt = name_end;
    while gt < bytes.len() && bytes[gt] != b'>' {
        if bytes[gt] == b'<' {
            return None;
        }
        gt += 1;
    }
    if gt == bytes.len() {
        return None;
    }
    let name = &input[name_start..name_end];
    let body = input[name_end..gt].trim();
    let span = ByteSpan::new(lt, gt + 1);

    if closing {
        return Some((
            Token::Close {
                name,
                span,
                has_attrs: !body.is_empty(),
            },
            gt + 1,
        ));
    }
    let self_closing = body.ends_with('/');
    let attrs = body.trim_end_matches('/').trim();
    Some((
        Token::Open {
            name,
            span,
            self_closing,
            has_attrs: !attrs.is_empty(),
        },
        gt + 1,
    ))
}
