//! Line-oriented vector IR.
//!
//! ```text
//! graph KA vec 4
//! array src0 input 6
//! array dest output 6
//! 0 vload src0 0 4 <-
//! 1 broadcast 1.5 <-
//! 2 permute 1,2,3,0 <- 0
//! 3 extract 2,_,_,0 <- 0
//! 4 merge 0,5,_,3 <- 2 3
//! 5 vop add <- 2 4
//! 6 reduce add 1101 <- 5
//! 7 vstore dest 0 4 1111 <- 5 ; after 0
//! ```
//!
//! One node per line in id order: `id kind args <- inputs [; after ids]`.
//! Patterns list source lanes, `_` marks an undefined lane. Masks are one
//! digit per lane. Lines starting with `#` are comments.

use std::fmt::Write;

use super::{VKind, VNode, VectorGraph};
use crate::error::VectorError;
use crate::scalar::{ArrayDecl, ArrayRole, Opcode};

fn mask_str(mask: &[bool]) -> String {
    mask.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn pattern_str<T: ToString>(p: impl Iterator<Item = Option<T>>) -> String {
    p.map(|x| x.map_or("_".to_string(), |x| x.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn to_vector_ir(vg: &VectorGraph) -> String {
    let mut out = format!("graph {} vec {}\n", vg.name, vg.vec_size);
    for a in &vg.arrays {
        writeln!(out, "array {} {} {}", a.name, a.role.name(), a.len).unwrap();
    }
    let array = |a: usize| vg.arrays[a].name.as_str();
    for n in &vg.nodes {
        let args = match &n.kind {
            VKind::Load { array: a, start, count } => format!("{} {start} {count}", array(*a)),
            VKind::Store {
                array: a,
                start,
                count,
                mask,
            } => {
                format!("{} {start} {count} {}", array(*a), mask_str(mask))
            }
            VKind::Op(op) => op.name().to_string(),
            VKind::Broadcast(c) => format!("{c:?}"),
            VKind::Permute(p) => pattern_str(p.iter().map(|&x| Some(x))),
            VKind::Extract(p) | VKind::Merge(p) => pattern_str(p.iter().copied()),
            VKind::Reduce { opcode, mask } => format!("{opcode} {}", mask_str(mask)),
        };
        write!(out, "{} {} {args} <-", n.id, n.kind.name()).unwrap();
        for i in &n.inputs {
            write!(out, " {i}").unwrap();
        }
        if !n.after.is_empty() {
            out.push_str(" ; after");
            for i in &n.after {
                write!(out, " {i}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_vector_ir(text: &str) -> Result<VectorGraph, VectorError> {
    let mut vg: Option<VectorGraph> = None;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |message: String| VectorError::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<usize, VectorError> {
            s.parse().map_err(|_| err(format!("expected a number, found `{s}`")))
        };
        match words[0] {
            "graph" => {
                if words.len() != 4 || words[2] != "vec" {
                    return Err(err("expected `graph NAME vec N`".into()));
                }
                vg = Some(VectorGraph::new(words[1], num(words[3])?, Vec::new()));
                continue;
            }
            "array" => {
                let g = vg.as_mut().ok_or_else(|| err("missing graph header".into()))?;
                if words.len() != 4 {
                    return Err(err("expected `array NAME ROLE LEN`".into()));
                }
                let role = match words[2] {
                    "input" => ArrayRole::Input,
                    "output" => ArrayRole::Output,
                    "inout" => ArrayRole::Inout,
                    r => return Err(err(format!("unknown role `{r}`"))),
                };
                g.arrays.push(ArrayDecl {
                    name: words[1].to_string(),
                    role,
                    len: num(words[3])?,
                });
                continue;
            }
            _ => {}
        }
        let g = vg.as_mut().ok_or_else(|| err("missing graph header".into()))?;
        let (body, after) = match line.split_once(';') {
            Some((b, a)) => (b, Some(a)),
            None => (line, None),
        };
        let (head, inputs) = body.split_once("<-").ok_or_else(|| err("missing `<-`".into()))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() < 2 {
            return Err(err("expected `id kind args`".into()));
        }
        let id = num(head[0])?;
        if id != g.nodes.len() {
            return Err(err(format!("expected node id {}, found {id}", g.nodes.len())));
        }
        let args = &head[2..];
        let arg = |i: usize| args.get(i).copied().ok_or_else(|| err("missing argument".into()));
        let array = |name: &str| {
            g.arrays
                .iter()
                .position(|a| a.name == name)
                .ok_or_else(|| err(format!("unknown array `{name}`")))
        };
        let opcode = |s: &str| Opcode::from_name(s).ok_or_else(|| err(format!("unknown opcode `{s}`")));
        let mask = |s: &str| -> Result<Vec<bool>, VectorError> {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(err(format!("bad mask `{s}`"))),
                })
                .collect()
        };
        let pattern = |s: &str| -> Result<Vec<Option<usize>>, VectorError> {
            s.split(',')
                .map(|x| if x == "_" { Ok(None) } else { num(x).map(Some) })
                .collect()
        };
        let kind = match head[1] {
            "vload" => VKind::Load {
                array: array(arg(0)?)?,
                start: num(arg(1)?)?,
                count: num(arg(2)?)?,
            },
            "vstore" => VKind::Store {
                array: array(arg(0)?)?,
                start: num(arg(1)?)?,
                count: num(arg(2)?)?,
                mask: mask(arg(3)?)?,
            },
            "vop" => VKind::Op(opcode(arg(0)?)?),
            "broadcast" => VKind::Broadcast(arg(0)?.parse().map_err(|_| err("bad constant".into()))?),
            "permute" => VKind::Permute(
                pattern(arg(0)?)?
                    .into_iter()
                    .map(|x| x.ok_or_else(|| err("permute lanes must be defined".into())))
                    .collect::<Result<_, _>>()?,
            ),
            "extract" => VKind::Extract(pattern(arg(0)?)?),
            "merge" => VKind::Merge(pattern(arg(0)?)?),
            "reduce" => VKind::Reduce {
                opcode: opcode(arg(0)?)?,
                mask: mask(arg(1)?)?,
            },
            other => return Err(err(format!("unknown node kind `{other}`"))),
        };
        let inputs = inputs.split_whitespace().map(num).collect::<Result<Vec<_>, _>>()?;
        let after = match after {
            None => Vec::new(),
            Some(a) => {
                let mut w = a.split_whitespace();
                if w.next() != Some("after") {
                    return Err(err("expected `after`".into()));
                }
                w.map(num).collect::<Result<Vec<_>, _>>()?
            }
        };
        g.nodes.push(VNode {
            id,
            kind,
            inputs,
            after,
        });
    }
    let vg = vg.ok_or(VectorError::Parse {
        line: 0,
        message: "empty document".into(),
    })?;
    vg.validate()?;
    Ok(vg)
}
