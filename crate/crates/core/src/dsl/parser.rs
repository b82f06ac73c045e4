use super::ast::{
    ArgumentBinding, ChainBinding, ChainSource, CommandBlock, Item, PipelineAst, Span, ToolBlock,
};
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::SyntaxError;
use crate::repository::{RepositoryKind, RepositoryRef};

/// Repository type labels accepted after `Pipeline`, case-insensitively.
const REMOTE_LABELS: [&str; 4] = ["github", "remote", "http", "https"];
const LOCAL_LABELS: [&str; 3] = ["local", "file", "directory"];

pub fn repository_kind(label: &str) -> Option<RepositoryKind> {
    let lower = label.to_ascii_lowercase();
    if REMOTE_LABELS.contains(&lower.as_str()) {
        Some(RepositoryKind::Remote)
    } else if LOCAL_LABELS.contains(&lower.as_str()) {
        Some(RepositoryKind::Local)
    } else {
        None
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_instance: usize,
}

pub fn parse(source: &str) -> Result<PipelineAst, SyntaxError> {
    let mut p = Parser {
        tokens: tokenize(source)?,
        pos: 0,
        next_instance: 0,
    };
    let ast = p.pipeline()?;
    p.expect_eof()?;
    Ok(ast)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: impl Into<String>) -> SyntaxError {
        let tok = self.peek();
        SyntaxError::new(tok.span, expected, tok.kind.to_string())
    }

    fn keyword(&mut self, kw: Keyword) -> Result<Span, SyntaxError> {
        if self.peek().kind == TokenKind::Keyword(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("keyword `{}`", kw.as_str())))
        }
    }

    fn punct(&mut self, kind: TokenKind) -> Result<(), SyntaxError> {
        if self.peek().kind == kind {
            self.advance();
            Ok(())
        } else {
            Err(self.error(kind.to_string()))
        }
    }

    fn string(&mut self, what: &str) -> Result<(String, Span), SyntaxError> {
        match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                Ok((s, self.advance().span))
            }
            _ => Err(self.error(format!("{what} (a quoted string)"))),
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Span), SyntaxError> {
        let (s, span) = self.string(what)?;
        if s.is_empty() {
            return Err(SyntaxError::new(
                span,
                format!("non-empty {what}"),
                "empty string",
            ));
        }
        Ok((s, span))
    }

    fn expect_eof(&mut self) -> Result<(), SyntaxError> {
        match self.peek().kind {
            TokenKind::Eof => Ok(()),
            _ => Err(self.error("end of input")),
        }
    }

    fn pipeline(&mut self) -> Result<PipelineAst, SyntaxError> {
        self.keyword(Keyword::Pipeline)?;
        let (label, label_span) = self.name("repository type")?;
        let kind = repository_kind(&label).ok_or_else(|| {
            SyntaxError::new(
                label_span,
                "repository type (Github, Remote, Local)",
                format!("string {label:?}"),
            )
        })?;
        let (location, _) = self.name("repository location")?;
        self.punct(TokenKind::LBrace)?;
        let mut tools = vec![self.tool()?];
        while self.peek().kind == TokenKind::Keyword(Keyword::Tool) {
            tools.push(self.tool()?);
        }
        if self.peek().kind != TokenKind::RBrace {
            return Err(self.error("keyword `tool` or `}`"));
        }
        self.advance();
        Ok(PipelineAst {
            repository: RepositoryRef { kind, location },
            tools,
        })
    }

    fn tool(&mut self) -> Result<ToolBlock, SyntaxError> {
        let span = self.keyword(Keyword::Tool)?;
        let (tool_name, _) = self.name("tool name")?;
        let (configuration_name, _) = self.name("configuration name")?;
        self.punct(TokenKind::LBrace)?;
        let mut commands = vec![self.command()?];
        while self.peek().kind == TokenKind::Keyword(Keyword::Command) {
            commands.push(self.command()?);
        }
        if self.peek().kind != TokenKind::RBrace {
            return Err(self.error("keyword `command` or `}`"));
        }
        self.advance();
        Ok(ToolBlock {
            tool_name,
            configuration_name,
            commands,
            span,
        })
    }

    fn command(&mut self) -> Result<CommandBlock, SyntaxError> {
        let span = self.keyword(Keyword::Command)?;
        let (command_name, _) = self.name("command name")?;
        self.punct(TokenKind::LBrace)?;
        let instance_index = self.next_instance;
        self.next_instance += 1;
        let mut items = Vec::new();
        loop {
            match self.peek().kind {
                TokenKind::Keyword(Keyword::Argument) => items.push(self.argument()?),
                TokenKind::Keyword(Keyword::Chain) => items.push(self.chain()?),
                TokenKind::RBrace if !items.is_empty() => {
                    self.advance();
                    break;
                }
                _ if items.is_empty() => return Err(self.error("keyword `argument` or `chain`")),
                _ => return Err(self.error("keyword `argument`, `chain` or `}`")),
            }
        }
        Ok(CommandBlock {
            command_name,
            items,
            instance_index,
            span,
        })
    }

    fn argument(&mut self) -> Result<Item, SyntaxError> {
        let span = self.keyword(Keyword::Argument)?;
        let (name, _) = self.name("argument name")?;
        let (value, _) = self.string("argument value")?;
        Ok(Item::Argument(ArgumentBinding { name, value, span }))
    }

    fn chain(&mut self) -> Result<Item, SyntaxError> {
        let span = self.keyword(Keyword::Chain)?;
        let (argument_name, _) = self.name("argument name")?;
        let mut rest = Vec::with_capacity(3);
        while let TokenKind::Str(_) = self.peek().kind {
            if rest.len() == 3 {
                return Err(self.error("`argument`, `chain` or `}` (a chain takes at most tool, command and output names)"));
            }
            rest.push(self.name("chain target name")?.0);
        }
        let source = match rest.len() {
            0 => return Err(self.error("output name (a quoted string)")),
            1 => ChainSource::Previous,
            2 => ChainSource::Command(rest.remove(0)),
            _ => {
                let tool = rest.remove(0);
                let command = rest.remove(0);
                ChainSource::ToolCommand { tool, command }
            }
        };
        let output_name = rest.pop().expect("one literal remains");
        Ok(Item::Chain(ChainBinding {
            argument_name,
            source,
            output_name,
            span,
        }))
    }
}
