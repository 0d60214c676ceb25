//! Test kernels and random scheduler workloads.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::KernelError;
use crate::kernel::parse_kernel;
use crate::scalar::{build_graph, ArrayDecl, ArrayRole, NodeId, NodeKind, Opcode, ScalarGraph};
use crate::vector::{VKind, VectorGraph};

/// Operand and destination shapes of the synthetic kernels.
///
/// `N` is a full array read at `i`, `1` a single element, `R` a read at
/// `r(i)` and `S` a read at `s(i)`. After the underscore, `N` writes
/// `dest[i]`, `1` accumulates into `dest[0]` and `RN` accumulates into
/// `dest[r(i)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Signature {
    NnN,
    Nn1,
    N1N,
    N11,
    RnN,
    NnRn,
    Rn1,
    R1N,
    R11,
    SsN,
}

impl Signature {
    pub const ALL: [Signature; 10] = [
        Signature::NnN,
        Signature::Nn1,
        Signature::N1N,
        Signature::N11,
        Signature::RnN,
        Signature::NnRn,
        Signature::Rn1,
        Signature::R1N,
        Signature::R11,
        Signature::SsN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signature::NnN => "NN_N",
            Signature::Nn1 => "NN_1",
            Signature::N1N => "N1_N",
            Signature::N11 => "N1_1",
            Signature::RnN => "RN_N",
            Signature::NnRn => "NN_RN",
            Signature::Rn1 => "RN_1",
            Signature::R1N => "R1_N",
            Signature::R11 => "R1_1",
            Signature::SsN => "SS_N",
        }
    }

    pub fn from_name(s: &str) -> Option<Signature> {
        Signature::ALL.into_iter().find(|sig| sig.name() == s)
    }

    /// Index expressions of the two operands; `None` for the scalar `src1`.
    fn operands(self) -> (&'static str, Option<&'static str>) {
        match self {
            Signature::NnN | Signature::Nn1 | Signature::NnRn => ("i", Some("i")),
            Signature::N1N | Signature::N11 => ("i", None),
            Signature::RnN | Signature::Rn1 => ("r(i)", Some("i")),
            Signature::R1N | Signature::R11 => ("r(i)", None),
            Signature::SsN => ("s(i)", Some("s(i)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KernelSpec {
    pub name: String,
    pub signature: Signature,
    pub size: usize,
    pub op: Opcode,
}

impl KernelSpec {
    pub fn new(signature: Signature, size: usize, op: Opcode) -> Self {
        KernelSpec {
            name: signature.name().to_string(),
            signature,
            size,
            op,
        }
    }

    /// Resolves a signature name or one of the aliases `KA` (`SS_N`) and
    /// `KB` (`NN_1`). The aliases keep their own name.
    pub fn named(name: &str, size: usize, op: Opcode) -> Result<Self, KernelError> {
        let signature = match name {
            "KA" => Signature::SsN,
            "KB" => Signature::Nn1,
            other => Signature::from_name(other).ok_or(KernelError::UnknownSignature(other.to_string()))?,
        };
        Ok(KernelSpec {
            name: name.to_string(),
            signature,
            size,
            op,
        })
    }

    /// Kernel description text for this spec.
    pub fn source(&self) -> String {
        use Signature::*;
        let sig = self.signature;
        let (a, b) = sig.operands();
        let rhs = format!(
            "src0[{a}] {} {}",
            self.op.symbol(),
            b.map_or("src1[0]".to_string(), |b| format!("src1[{b}]"))
        );
        let mut s = format!("kernel {};\nsize {};\ninput src0[N];\n", self.name, self.size);
        s.push_str(if b.is_some() {
            "input src1[N];\n"
        } else {
            "input src1[1];\n"
        });
        match sig {
            NnN | N1N | RnN | R1N | SsN => {
                s.push_str("output dest[N];\n");
                writeln!(s, "for i in 0..N {{\n    dest[i] = {rhs};\n}}").unwrap();
            }
            Nn1 | N11 | Rn1 | R11 => {
                s.push_str("output dest[1];\nlet x = 0;\n");
                writeln!(s, "for i in 0..N {{\n    x += {rhs};\n}}\ndest[0] = x;").unwrap();
            }
            NnRn => {
                s.push_str("inout dest[N];\n");
                writeln!(s, "for i in 0..N {{\n    dest[r(i)] += {rhs};\n}}").unwrap();
            }
        }
        s
    }
}

/// Unrolled scalar graph of a synthetic kernel.
pub fn make_kernel(spec: &KernelSpec) -> Result<ScalarGraph, KernelError> {
    build_graph(&parse_kernel(&spec.source())?)
}

/// Random straight-line graph where every variable has up to `x`
/// predecessors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PredXSpec {
    pub x: usize,
    pub size: usize,
    pub seed: u64,
}

/// Longest backward jump between consecutive predecessors.
pub const PREDX_MAX_JUMP: usize = 10;

/// Variable `v` draws `k` uniform in `1..=x` and walks back from `v` by
/// jumps uniform in `1..=10`, taking each landing point as a predecessor
/// until `k` are found or the walk leaves the graph. A variable without
/// predecessors loads `in[v]`, one with a single predecessor `p` computes
/// `p + p`, and more predecessors are summed left to right. Variables
/// nobody reads are stored to `out[v]`.
pub fn make_predx(spec: &PredXSpec) -> ScalarGraph {
    assert!(spec.x >= 1 && spec.size >= 1, "PredX needs x >= 1 and size >= 1");
    let n = spec.size;
    let arrays = vec![
        ArrayDecl {
            name: "in".into(),
            role: ArrayRole::Input,
            len: n,
        },
        ArrayDecl {
            name: "out".into(),
            role: ArrayRole::Output,
            len: n,
        },
    ];
    let mut g = ScalarGraph::new(format!("pred{}_{}", spec.x, n), arrays);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut var: Vec<NodeId> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let add = Opcode::Add;
    for v in 0..n {
        let k = rng.gen_range(1..=spec.x);
        let mut preds = Vec::new();
        let mut at = v as i64;
        while preds.len() < k {
            at -= rng.gen_range(1..=PREDX_MAX_JUMP) as i64;
            if at < 0 {
                break;
            }
            preds.push(at as usize);
        }
        for &p in &preds {
            used[p] = true;
        }
        let id = match preds.as_slice() {
            [] => g.push(NodeKind::Load { array: 0, index: v }, vec![]),
            [p] => g.push(NodeKind::Operation { opcode: add }, vec![var[*p], var[*p]]),
            [p, rest @ ..] => rest.iter().fold(var[*p], |acc, &q| {
                g.push(NodeKind::Operation { opcode: add }, vec![acc, var[q]])
            }),
        };
        var.push(id);
    }
    for v in 0..n {
        if !used[v] {
            g.push(NodeKind::Store { array: 1, index: v }, vec![var[v]]);
        }
    }
    g
}

/// One vector node per scalar node, each scalar element widened to a full
/// vector. Arrays grow by `vec_size`. Used to run the scheduler on graphs
/// that have no lane structure of their own.
pub fn lift_scalar(g: &ScalarGraph, vec_size: usize) -> VectorGraph {
    let arrays = g
        .arrays()
        .iter()
        .map(|a| ArrayDecl {
            len: a.len * vec_size,
            ..a.clone()
        })
        .collect();
    let mut vg = VectorGraph::new(g.name.clone(), vec_size, arrays);
    let mut map = vec![usize::MAX; g.id_bound()];
    for &id in g.topo_order() {
        let node = g.node(id);
        let inputs: Vec<usize> = node.inputs.iter().map(|&i| map[i]).collect();
        let kind = match node.kind {
            NodeKind::Set { constant } => VKind::Broadcast(constant),
            NodeKind::Load { array, index } => VKind::Load {
                array,
                start: index * vec_size,
                count: vec_size,
            },
            NodeKind::Operation { opcode } => VKind::Op(opcode),
            NodeKind::Reduce { opcode } => VKind::Reduce {
                opcode,
                mask: vec![true; vec_size],
            },
            NodeKind::Store { array, index } => VKind::Store {
                array,
                start: index * vec_size,
                count: vec_size,
                mask: vec![true; vec_size],
            },
        };
        let inputs = match (&kind, inputs.as_slice()) {
            (VKind::Op(_), [x]) => vec![*x, *x],
            _ => inputs,
        };
        map[id] = vg.push(kind, inputs);
    }
    vg
}
