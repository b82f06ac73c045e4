use std::fmt::Write;

use super::ast::{ChainSource, Item, PipelineAst};
use crate::repository::RepositoryKind;

/// Quotes a string literal for `.pipes` output.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn repository_label(kind: RepositoryKind) -> &'static str {
    match kind {
        RepositoryKind::Remote => "Github",
        RepositoryKind::Local => "Local",
    }
}

/// Canonical text form: two-space indentation, one item per line.
pub fn serialize(ast: &PipelineAst) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Pipeline {} {} {{",
        quote(repository_label(ast.repository.kind)),
        quote(&ast.repository.location)
    );
    for tool in &ast.tools {
        let _ = writeln!(
            out,
            "  tool {} {} {{",
            quote(&tool.tool_name),
            quote(&tool.configuration_name)
        );
        for cmd in &tool.commands {
            let _ = writeln!(out, "    command {} {{", quote(&cmd.command_name));
            for item in &cmd.items {
                out.push_str("      ");
                out.push_str(&item_text(item));
                out.push('\n');
            }
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

pub(crate) fn item_text(item: &Item) -> String {
    match item {
        Item::Argument(a) => format!("argument {} {}", quote(&a.name), quote(&a.value)),
        Item::Chain(c) => {
            let mut s = format!("chain {}", quote(&c.argument_name));
            match &c.source {
                ChainSource::Previous => {}
                ChainSource::Command(cmd) => {
                    s.push(' ');
                    s.push_str(&quote(cmd));
                }
                ChainSource::ToolCommand { tool, command } => {
                    s.push(' ');
                    s.push_str(&quote(tool));
                    s.push(' ');
                    s.push_str(&quote(command));
                }
            }
            s.push(' ');
            s.push_str(&quote(&c.output_name));
            s
        }
    }
}
