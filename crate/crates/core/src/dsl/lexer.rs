use std::fmt;

use super::ast::Span;
use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Pipeline,
    Tool,
    Command,
    Argument,
    Chain,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Pipeline => "Pipeline",
            Keyword::Tool => "tool",
            Keyword::Command => "command",
            Keyword::Argument => "argument",
            Keyword::Chain => "chain",
        }
    }

    fn from_word(word: &str) -> Option<Self> {
        Some(match word {
            "Pipeline" => Keyword::Pipeline,
            "tool" => Keyword::Tool,
            "command" => Keyword::Command,
            "argument" => Keyword::Argument,
            "chain" => Keyword::Chain,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Str(String),
    /// A bare word that is not a keyword. Never valid, kept for diagnostics.
    Word(String),
    LBrace,
    RBrace,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", k.as_str()),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Word(w) => write!(f, "bare word `{w}`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
    last: Span,
}

impl Cursor<'_> {
    fn pos(&self) -> Span {
        Span::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.last = self.pos();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | '"')
}

/// Splits source text into tokens. The final token is always `Eof`, placed
/// on the last character of the source (or 1:1 for empty input).
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
        last: Span::new(1, 1),
    };
    let mut tokens = Vec::new();
    loop {
        let start = cur.pos();
        let Some(c) = cur.peek() else { break };
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '/' if source_has_comment(&mut cur) => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '{' => {
                cur.bump();
                tokens.push(Token {
                    kind: TokenKind::LBrace,
                    span: start,
                });
            }
            '}' => {
                cur.bump();
                tokens.push(Token {
                    kind: TokenKind::RBrace,
                    span: start,
                });
            }
            '"' => {
                cur.bump();
                let text = read_string(&mut cur)?;
                tokens.push(Token {
                    kind: TokenKind::Str(text),
                    span: start,
                });
            }
            _ => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    cur.bump();
                }
                let kind = match Keyword::from_word(&word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Word(word),
                };
                tokens.push(Token { kind, span: start });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: cur.last,
    });
    Ok(tokens)
}

/// At a '/', checks for a second '/' without consuming anything but the first
/// when it is a comment.
fn source_has_comment(cur: &mut Cursor<'_>) -> bool {
    let mut ahead = cur.chars.clone();
    ahead.next();
    if ahead.next() == Some('/') {
        cur.bump();
        true
    } else {
        false
    }
}

fn read_string(cur: &mut Cursor<'_>) -> Result<String, SyntaxError> {
    let mut out = String::new();
    loop {
        let here = cur.pos();
        match cur.bump() {
            None => {
                return Err(SyntaxError::new(
                    cur.last,
                    "closing `\"`",
                    "end of input inside string literal",
                ))
            }
            Some('\n') => {
                return Err(SyntaxError::new(
                    here,
                    "closing `\"`",
                    "end of line inside string literal",
                ))
            }
            Some('"') => return Ok(out),
            Some('\\') => {
                let esc_at = cur.pos();
                match cur.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some(other) => {
                        return Err(SyntaxError::new(
                            esc_at,
                            "escape sequence (\\\" \\\\ \\n \\t \\r)",
                            format!("`\\{other}`"),
                        ))
                    }
                    None => {
                        return Err(SyntaxError::new(
                            cur.last,
                            "closing `\"`",
                            "end of input inside string literal",
                        ))
                    }
                }
            }
            Some(c) => out.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn keywords_strings_and_comments() {
        let k = kinds("Pipeline \"a b\" // note\n{ tool }");
        assert_eq!(
            k,
            vec![
                TokenKind::Keyword(Keyword::Pipeline),
                TokenKind::Str("a b".into()),
                TokenKind::LBrace,
                TokenKind::Keyword(Keyword::Tool),
                TokenKind::RBrace,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn keywords_are_case_sensitive() {
        assert_eq!(kinds("Tool")[0], TokenKind::Word("Tool".into()));
    }

    #[test]
    fn escapes() {
        assert_eq!(kinds(r#""q\"\\\n""#)[0], TokenKind::Str("q\"\\\n".into()));
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("\n  \"x\"").unwrap();
        assert_eq!((t[0].span.line, t[0].span.column), (2, 3));
        assert_eq!((t[1].span.line, t[1].span.column), (2, 5));
    }

    #[test]
    fn unterminated_string() {
        let e = tokenize("Pipeline \"abc").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.column <= 14);
    }
}
