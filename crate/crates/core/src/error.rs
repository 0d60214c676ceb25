use thiserror::Error;

use crate::scalar::NodeId;

/// Structural or evaluation failure on a scalar graph.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {node} references missing input {input}")]
    DanglingInput { node: NodeId, input: NodeId },
    #[error("store {node} is used as an input")]
    StoreHasConsumer { node: NodeId },
    #[error("{kind} node {node} has {got} inputs")]
    Arity {
        node: NodeId,
        kind: &'static str,
        got: usize,
    },
    #[error("reduction node {node} uses a non-commutative opcode")]
    NonCommutativeReduce { node: NodeId },
    #[error("node {node} references unknown array #{array}")]
    UnknownArray { node: NodeId, array: usize },
    #[error("index {index} out of bounds for array `{array}` of length {len}")]
    IndexOutOfBounds { array: String, index: i64, len: usize },
    #[error("graph contains a cycle")]
    Cycle,
    #[error("memory image does not cover the declared arrays")]
    MemoryShape,
    #[error("evaluation order is not topological at node {0}")]
    BadOrder(NodeId),
    #[error("malformed graph document: {0}")]
    Json(String),
}

/// Failure while parsing or unrolling a kernel description.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("kernel does not declare a static size")]
    MissingSize,
    #[error("`{0}` is not a static value (loop bounds and indices must be compile-time)")]
    NonStatic(String),
    #[error("unknown operator or function `{0}`")]
    UnknownOpcode(String),
    #[error("unknown array `{0}`")]
    UnknownArray(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("array `{0}` is declared input and cannot be written")]
    WriteToInput(String),
    #[error("index {index} out of bounds for array `{array}` of length {len}")]
    IndexOutOfBounds { array: String, index: i64, len: usize },
    #[error("division or modulo by zero in an index expression")]
    IndexDivByZero,
    #[error("unknown kernel signature `{0}`")]
    UnknownSignature(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("reduction path is stale: node {0} is missing or no longer chained")]
    StalePath(NodeId),
    #[error("vector size must be at least 2, got {0}")]
    VecSize(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("operand {operand} of node {node} has not been assigned to a vector yet")]
    UnsplitPredecessor { node: NodeId, operand: NodeId },
}

/// Failure on a vector graph: evaluation, scheduling or emission.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("node {node} reads undefined lane {lane} of node {source_node}")]
    UninitializedLane {
        node: usize,
        source_node: usize,
        lane: usize,
    },
    #[error("node {node} accesses `{array}`[{index}] beyond its length {len}")]
    OutOfBounds {
        node: usize,
        array: String,
        index: usize,
        len: usize,
    },
    #[error("node {node} has {got} inputs, expected {expected}")]
    Arity { node: usize, got: usize, expected: usize },
    #[error("node {node} references missing node {input}")]
    DanglingInput { node: usize, input: usize },
    #[error("vector graph contains a cycle")]
    Cycle,
    #[error("need at least {needed} registers, got {got}")]
    TooFewRegisters { needed: usize, got: usize },
    #[error("target `{target}` does not support vector size {vec_size}")]
    UnsupportedTarget { target: &'static str, vec_size: usize },
    #[error("order is not a valid schedule: {0}")]
    BadOrder(String),
    #[error("vector IR line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("memory image does not cover the declared arrays")]
    MemoryShape,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no configuration produced a valid vector graph:\n{}", .diagnostics.join("\n"))]
    NoValidConfig { diagnostics: Vec<String> },
    #[error("configuration is outside the search space: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}
