//! `$name` / `${name}` path templates used by output descriptors.
//!
//! A bare placeholder runs over `[A-Za-z0-9_-]`, so `$output_directory/contigs.fa`
//! and `$-out` both work. Names with other characters need braces. `$$` is a
//! literal dollar sign.

enum Piece<'a> {
    Text(&'a str),
    Dollar,
    Placeholder(&'a str),
}

fn is_bare(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn pieces(template: &str) -> Result<Vec<Piece<'_>>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(pos) = rest.find('$') {
        if pos > 0 {
            out.push(Piece::Text(&rest[..pos]));
        }
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push(Piece::Dollar);
            rest = tail;
        } else if let Some(inner) = after.strip_prefix('{') {
            let close = inner
                .find('}')
                .ok_or_else(|| format!("unterminated '${{' in template {template:?}"))?;
            if close == 0 {
                return Err(format!("empty placeholder in template {template:?}"));
            }
            out.push(Piece::Placeholder(&inner[..close]));
            rest = &inner[close + 1..];
        } else {
            let len = after.find(|c: char| !is_bare(c)).unwrap_or(after.len());
            if len == 0 {
                return Err(format!("'$' without a name in template {template:?}"));
            }
            out.push(Piece::Placeholder(&after[..len]));
            rest = &after[len..];
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    Ok(out)
}

/// Names referenced by a template, in order of appearance.
pub fn placeholders(template: &str) -> Result<Vec<String>, String> {
    Ok(pieces(template)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Placeholder(n) => Some(n.to_string()),
            _ => None,
        })
        .collect())
}

/// Renders a template. On an unbound placeholder, returns its name.
pub fn render<'a>(
    template: &str,
    lookup: impl Fn(&str) -> Option<&'a str>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    for piece in pieces(template).map_err(TemplateError::Malformed)? {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Dollar => out.push('$'),
            Piece::Placeholder(name) => match lookup(name) {
                Some(v) => out.push_str(v),
                None => return Err(TemplateError::Unbound(name.to_string())),
            },
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateError {
    Malformed(String),
    Unbound(String),
}
