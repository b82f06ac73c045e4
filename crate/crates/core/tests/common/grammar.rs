//! Generators for grammar-conforming pipelines and mutations that break them.

use pipekit::dsl::{
    ArgumentBinding, ChainBinding, ChainSource, CommandBlock, Item, PipelineAst, Span, ToolBlock,
};
use pipekit::repository::RepositoryRef;
use proptest::prelude::*;

const CHARS: &str = "[a-zA-Z0-9 _./:\\-\"\\\\\n\t\ré$]";

/// Argument values may be empty; every name must not be.
pub fn text() -> impl Strategy<Value = String> {
    proptest::string::string_regex(&format!("{CHARS}{{0,10}}")).unwrap()
}

pub fn name() -> impl Strategy<Value = String> {
    proptest::string::string_regex(&format!("{CHARS}{{1,10}}")).unwrap()
}

pub fn item() -> impl Strategy<Value = Item> {
    prop_oneof![
        (name(), text()).prop_map(|(name, value)| Item::Argument(ArgumentBinding {
            name,
            value,
            span: Span::default()
        })),
        (name(), name()).prop_map(|(a, o)| chain(a, ChainSource::Previous, o)),
        (name(), name(), name()).prop_map(|(a, c, o)| chain(a, ChainSource::Command(c), o)),
        (name(), name(), name(), name()).prop_map(|(a, t, c, o)| chain(
            a,
            ChainSource::ToolCommand {
                tool: t,
                command: c
            },
            o
        )),
    ]
}

fn chain(argument_name: String, source: ChainSource, output_name: String) -> Item {
    Item::Chain(ChainBinding {
        argument_name,
        source,
        output_name,
        span: Span::default(),
    })
}

pub fn ast() -> impl Strategy<Value = PipelineAst> {
    let command =
        (name(), prop::collection::vec(item(), 1..4)).prop_map(|(command_name, items)| {
            CommandBlock {
                command_name,
                items,
                instance_index: 0,
                span: Span::default(),
            }
        });
    let tool = (name(), name(), prop::collection::vec(command, 1..4)).prop_map(
        |(tool_name, configuration_name, commands)| ToolBlock {
            tool_name,
            configuration_name,
            commands,
            span: Span::default(),
        },
    );
    (any::<bool>(), name(), prop::collection::vec(tool, 1..4)).prop_map(
        |(local, location, tools)| {
            let repository = if local {
                RepositoryRef::local(location)
            } else {
                RepositoryRef::remote(location)
            };
            let mut ast = PipelineAst { repository, tools };
            ast.reindex();
            ast
        },
    )
}

#[derive(Debug, Clone)]
pub enum Mutation {
    Truncate(usize),
    DropBrace(usize),
    DropKeyword(usize),
    InsertWord(usize),
    DoubleKeyword(usize),
}

pub fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        any::<usize>().prop_map(Mutation::Truncate),
        any::<usize>().prop_map(Mutation::DropBrace),
        any::<usize>().prop_map(Mutation::DropKeyword),
        any::<usize>().prop_map(Mutation::InsertWord),
        any::<usize>().prop_map(Mutation::DoubleKeyword),
    ]
}

/// Byte offsets of structural tokens in canonical output. Strings in
/// canonical output never contain a raw newline, so a line's leading token
/// is always structural.
fn line_starts(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in src.split_inclusive('\n') {
        let indent = line.len() - line.trim_start().len();
        out.push((offset + indent, line.trim()));
        offset += line.len();
    }
    out
}

/// Applies a mutation that is guaranteed to break the grammar.
pub fn mutate(src: &str, m: &Mutation) -> String {
    let lines = line_starts(src);
    let pick = |i: usize, pred: &dyn Fn(&str) -> bool| -> (usize, &str) {
        let candidates: Vec<_> = lines.iter().filter(|(_, l)| pred(l)).collect();
        let (o, l) = candidates[i % candidates.len()];
        (*o, *l)
    };
    let keyword = |l: &str| {
        ["Pipeline ", "tool ", "command ", "argument ", "chain "]
            .iter()
            .any(|k| l.starts_with(k))
    };
    match *m {
        Mutation::Truncate(i) => {
            // every proper prefix lacks the final closing brace
            let end = src.trim_end().len() - 1;
            let mut cut = i % (end + 1);
            while !src.is_char_boundary(cut) {
                cut -= 1;
            }
            src[..cut].to_string()
        }
        Mutation::DropBrace(i) => {
            let braces: Vec<usize> = src
                .char_indices()
                .filter(|&(_, c)| c == '{' || c == '}')
                .map(|(o, _)| o)
                .filter(|&o| {
                    // only braces outside string literals: in canonical output
                    // those end a line
                    src[o + 1..].starts_with('\n')
                })
                .collect();
            let o = braces[i % braces.len()];
            format!("{}{}", &src[..o], &src[o + 1..])
        }
        Mutation::DropKeyword(i) => {
            // dropping `argument` or `chain` can merge two items into one
            // longer chain, so only block keywords are dropped
            let block = |l: &str| {
                ["Pipeline ", "tool ", "command "]
                    .iter()
                    .any(|k| l.starts_with(k))
            };
            let (o, l) = pick(i, &block);
            let len = l.find(' ').unwrap();
            format!("{}{}", &src[..o], &src[o + len..])
        }
        Mutation::InsertWord(i) => {
            let (o, _) = lines[i % lines.len()];
            format!("{}oops {}", &src[..o], &src[o..])
        }
        Mutation::DoubleKeyword(i) => {
            let (o, l) = pick(i, &keyword);
            let len = l.find(' ').unwrap() + 1;
            format!("{}{}{}", &src[..o], &l[..len], &src[o..])
        }
    }
}
