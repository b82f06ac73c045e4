//! The `.pipes` pipeline language.
//!
//! ```text
//! pipeline ::= "Pipeline" repositoryType repositoryLocation "{" tool+ "}"
//! tool     ::= "tool" toolName configurationName "{" command+ "}"
//! command  ::= "command" commandName "{" (argument | chain)+ "}"
//! argument ::= "argument" argumentName argumentValue
//! chain    ::= "chain" argumentName ((toolName)? commandName)? outputName
//! ```
//!
//! Every name and value is a double-quoted string; keywords are
//! case-sensitive and `//` starts a line comment.

mod ast;
mod lexer;
mod parser;
mod validate;
mod writer;

use thiserror::Error;

pub use ast::{
    ArgumentBinding, ChainBinding, ChainSource, CommandBlock, Item, PipelineAst, Span, ToolBlock,
};
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::{parse, repository_kind};
pub use validate::{validate, CommandInstance, ResolvedTool, ValidatedPipeline, ValidationError};
pub use writer::{quote, repository_label, serialize};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: u32,
    pub column: u32,
    pub expected: String,
    pub found: String,
}

impl SyntaxError {
    pub(crate) fn new(at: Span, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Self {
            line: at.line,
            column: at.column,
            expected: expected.into(),
            found: found.into(),
        }
    }

    /// Whether the position lies inside `source`: an existing line and a
    /// column no further than one past that line's last character.
    pub fn points_into(&self, source: &str) -> bool {
        let lines: Vec<&str> = source.split('\n').collect();
        let Some(line) = (self.line as usize)
            .checked_sub(1)
            .and_then(|i| lines.get(i))
        else {
            return false;
        };
        self.column >= 1 && self.column as usize <= line.chars().count() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::RepositoryKind;

    const MINIMAL: &str = r#"Pipeline "Local" "./repo" {
  tool "T" "C" {
    command "c" {
      argument "a" "v"
    }
  }
}
"#;

    #[test]
    fn minimal_pipeline() {
        let ast = parse(MINIMAL).unwrap();
        assert_eq!(ast.repository.kind, RepositoryKind::Local);
        assert_eq!(ast.tools.len(), 1);
        assert_eq!(ast.command_count(), 1);
        assert_eq!(ast.tools[0].commands[0].items.len(), 1);
        assert_eq!(serialize(&ast), MINIMAL);
    }

    #[test]
    fn empty_body_is_rejected() {
        let e = parse(r#"Pipeline "Github" "u" { }"#).unwrap_err();
        assert_eq!((e.line, e.column), (1, 25));
        assert!(e.expected.contains("tool"), "{e}");
    }

    #[test]
    fn chain_arity_selects_form() {
        let src = r#"Pipeline "Github" "u" { tool "T" "C" { command "c" {
            chain "a" "o"
            chain "b" "cmd" "o"
            chain "d" "Tool" "cmd" "out"
        } } }"#;
        let ast = parse(src).unwrap();
        let items = &ast.tools[0].commands[0].items;
        let sources: Vec<_> = items
            .iter()
            .map(|i| match i {
                Item::Chain(c) => c.source.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            sources,
            vec![
                ChainSource::Previous,
                ChainSource::Command("cmd".into()),
                ChainSource::ToolCommand {
                    tool: "Tool".into(),
                    command: "cmd".into()
                },
            ]
        );
        assert!(serialize(&ast).contains(r#"chain "d" "Tool" "cmd" "out""#));
    }

    #[test]
    fn chain_with_too_many_literals() {
        let src = r#"Pipeline "Github" "u" { tool "T" "C" { command "c" { chain "a" "b" "c" "d" "e" } } }"#;
        let e = parse(src).unwrap_err();
        assert_eq!(e.column, 76);
    }

    #[test]
    fn unknown_repository_type() {
        let e = parse(r#"Pipeline "Svn" "u" { }"#).unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
    }

    #[test]
    fn trailing_tokens() {
        let e = parse(&format!("{MINIMAL}}}")).unwrap_err();
        assert_eq!(e.line, 8);
        assert!(e.points_into(&format!("{MINIMAL}}}")));
    }

    #[test]
    fn empty_input_error_points_at_start() {
        let e = parse("").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert!(e.points_into(""));
    }

    #[test]
    fn instance_indexes_follow_text() {
        let src = r#"Pipeline "Github" "u" {
            tool "A" "C" { command "x" { argument "a" "1" } command "y" { argument "a" "1" } }
            tool "B" "C" { command "x" { argument "a" "1" } }
        }"#;
        let ast = parse(src).unwrap();
        let idx: Vec<usize> = ast
            .command_blocks()
            .map(|(_, c)| c.instance_index)
            .collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }
}
