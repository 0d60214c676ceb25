use std::collections::HashMap;

use crate::error::KernelError;
use crate::kernel::{Expr, IndexExpr, KernelDesc, LValue, Stmt};
use crate::scalar::{ArrayId, ArrayRole, NodeId, NodeKind, Opcode, ScalarGraph};

#[derive(Clone, Copy, Debug)]
enum Value {
    Const(f64),
    Node(NodeId),
}

struct Builder<'a> {
    desc: &'a KernelDesc,
    graph: ScalarGraph,
    locals: HashMap<String, Value>,
    loop_vars: Vec<(String, i64)>,
    loads: HashMap<(ArrayId, usize), NodeId>,
    sets: HashMap<u64, NodeId>,
    written: HashMap<(ArrayId, usize), Value>,
    write_order: Vec<(ArrayId, usize)>,
}

/// Unrolls a kernel description into a scalar graph.
///
/// Constants are folded, `x + 0` is dropped, stored values are forwarded to
/// later reads and only the final store per element survives. Stores are
/// emitted after all computation, in order of first write.
pub fn build_graph(desc: &KernelDesc) -> Result<ScalarGraph, KernelError> {
    let mut b = Builder {
        desc,
        graph: ScalarGraph::new(desc.name.clone(), desc.arrays.clone()),
        locals: HashMap::new(),
        loop_vars: Vec::new(),
        loads: HashMap::new(),
        sets: HashMap::new(),
        written: HashMap::new(),
        write_order: Vec::new(),
    };
    b.block(&desc.body)?;
    for key in std::mem::take(&mut b.write_order) {
        let value = b.written[&key];
        let node = b.materialize(value);
        b.graph.push(
            NodeKind::Store {
                array: key.0,
                index: key.1,
            },
            vec![node],
        );
    }
    Ok(b.graph)
}

impl Builder<'_> {
    fn block(&mut self, body: &[Stmt]) -> Result<(), KernelError> {
        for stmt in body {
            self.stmt(stmt)?;
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), KernelError> {
        match stmt {
            Stmt::Let { name, value } => {
                let v = self.expr(value)?;
                self.locals.insert(name.clone(), v);
            }
            Stmt::For { var, start, end, body } => {
                let lo = self.index(start)?;
                let hi = self.index(end)?;
                for i in lo..hi {
                    self.loop_vars.push((var.clone(), i));
                    let r = self.block(body);
                    self.loop_vars.pop();
                    r?;
                }
            }
            Stmt::Assign { target, op, value } => {
                let rhs = self.expr(value)?;
                match target {
                    LValue::Var(name) => {
                        let v = match op {
                            None => rhs,
                            Some(op) => {
                                let cur = *self
                                    .locals
                                    .get(name)
                                    .ok_or_else(|| KernelError::UnknownVariable(name.clone()))?;
                                self.binary(*op, cur, rhs)
                            }
                        };
                        self.locals.insert(name.clone(), v);
                    }
                    LValue::Elem { array, index } => {
                        let key = self.element(array, index)?;
                        if self.desc.arrays[key.0].role == ArrayRole::Input {
                            return Err(KernelError::WriteToInput(array.clone()));
                        }
                        let v = match op {
                            None => rhs,
                            Some(op) => {
                                let cur = self.read(key);
                                self.binary(*op, cur, rhs)
                            }
                        };
                        if self.written.insert(key, v).is_none() {
                            self.write_order.push(key);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn index(&self, e: &IndexExpr) -> Result<i64, KernelError> {
        e.eval(self.desc.size, &self.loop_vars).map_err(|err| match err {
            KernelError::NonStatic(name) if !self.locals.contains_key(&name) => KernelError::UnknownVariable(name),
            other => other,
        })
    }

    fn element(&self, array: &str, index: &IndexExpr) -> Result<(ArrayId, usize), KernelError> {
        let id = self
            .graph
            .array_id(array)
            .ok_or_else(|| KernelError::UnknownArray(array.to_string()))?;
        let idx = self.index(index)?;
        let len = self.desc.arrays[id].len;
        if idx < 0 || idx as usize >= len {
            return Err(KernelError::IndexOutOfBounds {
                array: array.to_string(),
                index: idx,
                len,
            });
        }
        Ok((id, idx as usize))
    }

    fn read(&mut self, key: (ArrayId, usize)) -> Value {
        if let Some(v) = self.written.get(&key) {
            return *v;
        }
        let graph = &mut self.graph;
        let id = *self.loads.entry(key).or_insert_with(|| {
            graph.push(
                NodeKind::Load {
                    array: key.0,
                    index: key.1,
                },
                vec![],
            )
        });
        Value::Node(id)
    }

    fn expr(&mut self, e: &Expr) -> Result<Value, KernelError> {
        Ok(match e {
            Expr::Num(v) => Value::Const(*v),
            Expr::Var(name) => *self
                .locals
                .get(name)
                .ok_or_else(|| KernelError::UnknownVariable(name.clone()))?,
            Expr::Elem { array, index } => {
                let key = self.element(array, index)?;
                self.read(key)
            }
            Expr::Bin(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                self.binary(*op, a, b)
            }
        })
    }

    fn binary(&mut self, op: Opcode, a: Value, b: Value) -> Value {
        let is_pos_zero = |v: Value| matches!(v, Value::Const(c) if c.to_bits() == 0);
        match (a, b) {
            (Value::Const(x), Value::Const(y)) => Value::Const(op.apply(x, y)),
            _ if op == Opcode::Add && is_pos_zero(a) => b,
            _ if op == Opcode::Add && is_pos_zero(b) => a,
            _ => {
                let a = self.materialize(a);
                let b = self.materialize(b);
                Value::Node(self.graph.push(NodeKind::Operation { opcode: op }, vec![a, b]))
            }
        }
    }

    fn materialize(&mut self, v: Value) -> NodeId {
        match v {
            Value::Node(id) => id,
            Value::Const(c) => {
                let graph = &mut self.graph;
                *self
                    .sets
                    .entry(c.to_bits())
                    .or_insert_with(|| graph.push(NodeKind::Set { constant: c }, vec![]))
            }
        }
    }
}
