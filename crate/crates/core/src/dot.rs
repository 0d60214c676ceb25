//! Graphviz renderings of the pipeline stages.

use std::fmt::Write;

use crate::grouping::GroupGraph;
use crate::scalar::{NodeKind, ScalarGraph};
use crate::vector::{VKind, VectorGraph};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn scalar_label(g: &ScalarGraph, kind: &NodeKind) -> String {
    let array = |a: usize| g.arrays()[a].name.as_str();
    match *kind {
        NodeKind::Set { constant } => format!("set {constant:?}"),
        NodeKind::Load { array: a, index } => format!("load[{}:{index}]", array(a)),
        NodeKind::Store { array: a, index } => format!("store[{}:{index}]", array(a)),
        NodeKind::Operation { opcode } => opcode.name().to_string(),
        NodeKind::Reduce { opcode } => format!("reduce:{opcode}"),
    }
}

pub fn scalar_dot(g: &ScalarGraph) -> String {
    let mut out = format!("digraph {} {{\n", quote(&g.name));
    for node in g.nodes() {
        let shape = match node.kind {
            NodeKind::Reduce { .. } => "doubleoctagon",
            NodeKind::Load { .. } | NodeKind::Store { .. } => "box",
            _ => "ellipse",
        };
        writeln!(
            out,
            "  n{} [label={}, shape={shape}];",
            node.id,
            quote(&format!("{}: {}", node.id, scalar_label(g, &node.kind)))
        )
        .unwrap();
    }
    for node in g.nodes() {
        for (k, &i) in node.inputs.iter().enumerate() {
            writeln!(out, "  n{i} -> n{} [label=\"{k}\"];", node.id).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

pub fn group_dot(g: &ScalarGraph, gg: &GroupGraph) -> String {
    let mut out = format!("digraph {} {{\n", quote(&format!("{}_groups", g.name)));
    for group in &gg.groups {
        let members: Vec<String> = group.members.iter().map(|m| m.to_string()).collect();
        writeln!(
            out,
            "  g{} [label={}, shape=box];",
            group.id,
            quote(&format!(
                "{} ({})\\n{}",
                group.kind.label(g),
                group.members.len(),
                members.join(" ")
            ))
        )
        .unwrap();
    }
    for (a, b) in &gg.edges {
        writeln!(out, "  g{a} -> g{b};").unwrap();
    }
    out.push_str("}\n");
    out
}

fn vector_label(vg: &VectorGraph, kind: &VKind) -> String {
    let array = |a: usize| vg.arrays[a].name.as_str();
    let lanes = |p: &[Option<usize>]| {
        p.iter()
            .map(|x| x.map_or("_".to_string(), |x| x.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    };
    let bits = |m: &[bool]| m.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    match kind {
        VKind::Load { array: a, start, count } => format!("vload {}[{start}..{}]", array(*a), start + count),
        VKind::Store {
            array: a,
            start,
            count,
            mask,
        } => {
            format!("vstore {}[{start}..{}] {}", array(*a), start + count, bits(mask))
        }
        VKind::Op(op) => op.name().to_string(),
        VKind::Broadcast(c) => format!("broadcast {c:?}"),
        VKind::Permute(p) => format!(
            "permute {}",
            p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        ),
        VKind::Extract(p) => format!("extract {}", lanes(p)),
        VKind::Merge(p) => format!("merge {}", lanes(p)),
        VKind::Reduce { opcode, mask } => format!("reduce:{opcode} {}", bits(mask)),
    }
}

fn vector_nodes(vg: &VectorGraph, out: &mut String, position: Option<&[usize]>) {
    for n in &vg.nodes {
        let shape = match n.kind {
            VKind::Reduce { .. } => "doubleoctagon",
            VKind::Load { .. } | VKind::Store { .. } | VKind::Broadcast(_) => "box",
            _ if n.kind.is_data_transform() => "diamond",
            _ => "ellipse",
        };
        let prefix = match position {
            Some(pos) => format!("#{} ", pos[n.id]),
            None => String::new(),
        };
        writeln!(
            out,
            "  v{} [label={}, shape={shape}];",
            n.id,
            quote(&format!("{prefix}{}: {}", n.id, vector_label(vg, &n.kind)))
        )
        .unwrap();
    }
    for n in &vg.nodes {
        for (k, &i) in n.inputs.iter().enumerate() {
            writeln!(out, "  v{i} -> v{} [label=\"{k}\"];", n.id).unwrap();
        }
        for &a in &n.after {
            writeln!(out, "  v{a} -> v{} [style=dashed];", n.id).unwrap();
        }
    }
}

pub fn vector_dot(vg: &VectorGraph) -> String {
    let mut out = format!("digraph {} {{\n", quote(&format!("{}_vector", vg.name)));
    vector_nodes(vg, &mut out, None);
    out.push_str("}\n");
    out
}

/// The vector graph with each node prefixed by its position in `order`,
/// plus a dotted chain through the order.
pub fn schedule_dot(vg: &VectorGraph, order: &[usize]) -> String {
    let mut pos = vec![0; vg.len()];
    for (k, &id) in order.iter().enumerate() {
        pos[id] = k;
    }
    let mut out = format!("digraph {} {{\n", quote(&format!("{}_schedule", vg.name)));
    vector_nodes(vg, &mut out, Some(&pos));
    for w in order.windows(2) {
        writeln!(out, "  v{} -> v{} [style=dotted, color=gray];", w[0], w[1]).unwrap();
    }
    out.push_str("}\n");
    out
}
