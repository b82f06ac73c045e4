use std::fmt;
use std::hash::{Hash, Hasher};

use crate::repository::RepositoryRef;

/// 1-based source position. Positions are metadata: they compare equal to
/// each other so that ASTs with different layout but the same content are equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PipelineAst {
    pub repository: RepositoryRef,
    pub tools: Vec<ToolBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ToolBlock {
    pub tool_name: String,
    pub configuration_name: String,
    pub commands: Vec<CommandBlock>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommandBlock {
    pub command_name: String,
    pub items: Vec<Item>,
    /// Position among all command blocks of the pipeline, in textual order.
    pub instance_index: usize,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Item {
    Argument(ArgumentBinding),
    Chain(ChainBinding),
}

impl Item {
    pub fn argument_name(&self) -> &str {
        match self {
            Item::Argument(a) => &a.name,
            Item::Chain(c) => &c.argument_name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Item::Argument(a) => a.span,
            Item::Chain(c) => c.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArgumentBinding {
    pub name: String,
    pub value: String,
    pub span: Span,
}

/// Which earlier command a chain reads from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChainSource {
    /// The command block immediately before this one.
    Previous,
    /// Nearest earlier block running this command, in any tool.
    Command(String),
    /// Nearest earlier block running this tool's command.
    ToolCommand { tool: String, command: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainBinding {
    pub argument_name: String,
    pub source: ChainSource,
    pub output_name: String,
    pub span: Span,
}

impl ChainBinding {
    pub fn tool_name(&self) -> Option<&str> {
        match &self.source {
            ChainSource::ToolCommand { tool, .. } => Some(tool),
            _ => None,
        }
    }

    pub fn command_name(&self) -> Option<&str> {
        match &self.source {
            ChainSource::Previous => None,
            ChainSource::Command(c) => Some(c),
            ChainSource::ToolCommand { command, .. } => Some(command),
        }
    }
}

impl PipelineAst {
    /// Every command block with its enclosing tool block, in textual order.
    pub fn command_blocks(&self) -> impl Iterator<Item = (&ToolBlock, &CommandBlock)> {
        self.tools
            .iter()
            .flat_map(|t| t.commands.iter().map(move |c| (t, c)))
    }

    pub fn command_count(&self) -> usize {
        self.tools.iter().map(|t| t.commands.len()).sum()
    }

    pub fn chain_count(&self) -> usize {
        self.command_blocks()
            .flat_map(|(_, c)| &c.items)
            .filter(|i| matches!(i, Item::Chain(_)))
            .count()
    }

    /// Renumbers `instance_index` to textual order. Used after building an AST by hand.
    pub fn reindex(&mut self) {
        let mut next = 0;
        for tool in &mut self.tools {
            for cmd in &mut tool.commands {
                cmd.instance_index = next;
                next += 1;
            }
        }
    }
}
