//! Context file: root `contextes`, one `Contexte` per context, one
//! `concept` child per member.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{ConceptId, Context, ContextMember, Weight};
use crate::error::ParseError;

const ROOT: &str = "contextes";
const CONTEXT: &str = "Contexte";
const MEMBER: &str = "concept";

pub fn parse_contexts_xml(text: &str) -> Result<Vec<Context>, ParseError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ParseError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != ROOT {
        return Err(ParseError::invalid(format!(
            "root element is <{}>, expected <{ROOT}>",
            root.tag_name().name()
        )));
    }

    let line_of = |node: Node| doc.text_pos_at(node.range().start).row as usize;
    let mut contexts = Vec::new();
    let mut nums = BTreeSet::new();
    for node in root.children().filter(Node::is_element) {
        let line = line_of(node);
        if node.tag_name().name() != CONTEXT {
            return Err(ParseError::line(
                line,
                format!(
                    "unexpected element <{}> in <{ROOT}>",
                    node.tag_name().name()
                ),
            ));
        }
        let num: u32 = parse_attr(node, "Num", line)?;
        if num == 0 {
            return Err(ParseError::line(line, "context Num must be positive"));
        }
        let name = required_attr(node, "Name", line)?.to_owned();
        if name.is_empty() {
            return Err(ParseError::line(
                line,
                format!("context {num} has an empty Name"),
            ));
        }
        let declared: usize = parse_attr(node, "Nbrconcept", line)?;
        if !nums.insert(num) {
            return Err(ParseError::line(
                line,
                format!("duplicate context Num {num}"),
            ));
        }

        let mut members = Vec::new();
        let mut seen = BTreeSet::new();
        for child in node.children().filter(Node::is_element) {
            let line = line_of(child);
            if child.tag_name().name() != MEMBER {
                return Err(ParseError::line(
                    line,
                    format!(
                        "unexpected element <{}> in context {name:?}",
                        child.tag_name().name()
                    ),
                ));
            }
            let id: u32 = parse_attr(child, "ConceptId", line)?;
            if id == 0 {
                return Err(ParseError::line(line, "ConceptId must be positive"));
            }
            let concept_name = required_attr(child, "ConceptName", line)?.to_owned();
            let weight: Weight = required_attr(child, "Weight", line)?
                .parse()
                .map_err(|e: String| ParseError::line(line, e))?;
            if !seen.insert(id) {
                return Err(ParseError::line(
                    line,
                    format!("context {name:?} lists concept {id} twice"),
                ));
            }
            members.push(ContextMember {
                concept: ConceptId(id),
                name: concept_name,
                weight,
            });
        }

        if members.len() != declared {
            return Err(ParseError::invalid(format!(
                "context {name:?} (Num {num}, line {line}) declares {declared} concepts but lists {}",
                members.len()
            )));
        }
        contexts.push(Context { num, name, members });
    }
    Ok(contexts)
}

fn required_attr<'a>(node: Node<'a, '_>, attr: &str, line: usize) -> Result<&'a str, ParseError> {
    node.attribute(attr).ok_or_else(|| {
        ParseError::line(
            line,
            format!("<{}> is missing attribute {attr}", node.tag_name().name()),
        )
    })
}

fn parse_attr<T: std::str::FromStr>(node: Node, attr: &str, line: usize) -> Result<T, ParseError> {
    let raw = required_attr(node, attr, line)?;
    raw.trim().parse().map_err(|_| {
        ParseError::line(
            line,
            format!("attribute {attr}={raw:?} is not a valid number"),
        )
    })
}

pub fn emit_contexts_xml(contexts: &[Context]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if contexts.is_empty() {
        out.push_str("<contextes/>\n");
        return out;
    }
    out.push_str("<contextes>\n");
    for ctx in contexts {
        let _ = write!(
            out,
            "  <Contexte Num=\"{}\" Name=\"{}\" Nbrconcept=\"{}\"",
            ctx.num,
            escape(&ctx.name),
            ctx.members.len()
        );
        if ctx.members.is_empty() {
            out.push_str("/>\n");
            continue;
        }
        out.push_str(">\n");
        for m in &ctx.members {
            let _ = writeln!(
                out,
                "    <concept ConceptId=\"{}\" ConceptName=\"{}\" Weight=\"{}\"/>",
                m.concept,
                escape(&m.name),
                m.weight
            );
        }
        out.push_str("  </Contexte>\n");
    }
    out.push_str("</contextes>\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}
