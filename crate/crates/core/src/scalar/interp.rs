use crate::error::GraphError;
use crate::scalar::{MemoryImage, NodeId, NodeKind, ScalarGraph};

/// Evaluates the graph in its canonical topological order.
pub fn interpret_scalar(graph: &ScalarGraph, mem: &MemoryImage) -> Result<MemoryImage, GraphError> {
    interpret_scalar_with_order(graph, mem, graph.topo_order())
}

/// Evaluates the graph in a caller-supplied order, which must be topological
/// and cover every node. Loads read the entry memory; stores write the result.
pub fn interpret_scalar_with_order(
    graph: &ScalarGraph,
    mem: &MemoryImage,
    order: &[NodeId],
) -> Result<MemoryImage, GraphError> {
    mem.check_covers(graph.arrays())?;
    if graph.analysis().topo.len() != graph.len() {
        return Err(GraphError::Cycle);
    }
    let mut out = mem.clone();
    let mut values = vec![f64::NAN; graph.id_bound()];
    let mut done = vec![false; graph.id_bound()];
    let mut seen = 0;
    for &id in order {
        let node = graph.get(id).ok_or(GraphError::BadOrder(id))?;
        if done[id] || node.inputs.iter().any(|&i| !done[i]) {
            return Err(GraphError::BadOrder(id));
        }
        let arg = |k: usize| values[node.inputs[k]];
        values[id] = match node.kind {
            NodeKind::Set { constant } => constant,
            NodeKind::Load { array, index } => mem.buffers[array][index],
            NodeKind::Operation { opcode } if node.inputs.len() == 1 => opcode.apply(arg(0), arg(0)),
            NodeKind::Operation { opcode } => opcode.apply(arg(0), arg(1)),
            NodeKind::Reduce { opcode } => node.inputs[1..]
                .iter()
                .fold(arg(0), |acc, &i| opcode.apply(acc, values[i])),
            NodeKind::Store { array, index } => {
                out.buffers[array][index] = arg(0);
                arg(0)
            }
        };
        done[id] = true;
        seen += 1;
    }
    if seen != graph.len() {
        let missing = graph.ids().find(|&i| !done[i]).unwrap_or(0);
        return Err(GraphError::BadOrder(missing));
    }
    Ok(out)
}
