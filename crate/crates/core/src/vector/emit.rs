//! C source emission, one intrinsic-style call per vector node.

use std::fmt::Write;

use super::{check_order, VKind, VectorGraph};
use crate::error::VectorError;
use crate::scalar::{ArrayRole, Opcode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// AVX-512 intrinsics on 8 doubles.
    Avx512,
    /// Plain C struct vectors with inline helpers, any width.
    Portable,
}

impl Target {
    pub fn for_vec_size(vec_size: usize) -> Target {
        if vec_size == 8 {
            Target::Avx512
        } else {
            Target::Portable
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Avx512 => "avx512",
            Target::Portable => "portable",
        }
    }
}

/// `<kernel>_<vec_size>` with non-identifier characters replaced.
pub fn function_name(vg: &VectorGraph) -> String {
    let mut s: String = vg
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if s.starts_with(|c: char| c.is_ascii_digit()) || s.is_empty() {
        s.insert(0, 'k');
    }
    format!("{s}_{}", vg.vec_size)
}

fn c_double(x: f64) -> String {
    if x.is_nan() {
        "NAN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "INFINITY".into()
        } else {
            "(-INFINITY)".into()
        }
    } else {
        let s = format!("{x:?}");
        if s.contains(['.', 'e']) {
            s
        } else {
            format!("{s}.0")
        }
    }
}

fn lane_mask(bits: impl Iterator<Item = bool>) -> u64 {
    bits.enumerate().filter(|(_, b)| *b).fold(0, |m, (i, _)| m | (1 << i))
}

fn portable_prelude(v: usize) -> String {
    let t = format!("vec{v}d");
    let mut s = format!("typedef struct {{ double v[{v}]; }} {t};\n\n");
    write!(
        s,
        "static inline {t} {t}_load(const double *p, int count) {{
    {t} r = {{{{0}}}};
    for (int i = 0; i < count; i++) r.v[i] = p[i];
    return r;
}}

static inline void {t}_store(double *p, {t} x, unsigned long long mask) {{
    for (int i = 0; i < {v}; i++)
        if (mask >> i & 1) p[i] = x.v[i];
}}

static inline {t} {t}_set1(double c) {{
    {t} r;
    for (int i = 0; i < {v}; i++) r.v[i] = c;
    return r;
}}

/* idx[i] < 0 leaves lane i zero */
static inline {t} {t}_permute({t} a, const int *idx) {{
    {t} r = {{{{0}}}};
    for (int i = 0; i < {v}; i++)
        if (idx[i] >= 0) r.v[i] = a.v[idx[i]];
    return r;
}}

static inline {t} {t}_merge({t} a, {t} b, const int *idx) {{
    {t} r = {{{{0}}}};
    for (int i = 0; i < {v}; i++)
        if (idx[i] >= 0) r.v[i] = idx[i] < {v} ? a.v[idx[i]] : b.v[idx[i] - {v}];
    return r;
}}
"
    )
    .unwrap();
    for op in Opcode::ALL {
        write!(
            s,
            "
static inline {t} {t}_{name}({t} a, {t} b) {{
    {t} r;
    for (int i = 0; i < {v}; i++) r.v[i] = a.v[i] {sym} b.v[i];
    return r;
}}
",
            name = op.name(),
            sym = op.symbol()
        )
        .unwrap();
    }
    for op in [Opcode::Add, Opcode::Mul] {
        write!(
            s,
            "
static inline double {t}_reduce_{name}({t} a, unsigned long long mask) {{
    double r = {init};
    for (int i = 0; i < {v}; i++)
        if (mask >> i & 1) r = r {sym} a.v[i];
    return r;
}}
",
            name = op.name(),
            sym = op.symbol(),
            init = if op == Opcode::Add { "0.0" } else { "1.0" }
        )
        .unwrap();
    }
    s
}

/// Emits a translation unit with one function per kernel, statements in
/// `order`.
pub fn emit_intrinsics(vg: &VectorGraph, order: &[usize], target: Target) -> Result<String, VectorError> {
    let v = vg.vec_size;
    if target == Target::Avx512 && v != 8 {
        return Err(VectorError::UnsupportedTarget {
            target: target.name(),
            vec_size: v,
        });
    }
    if ![2, 4, 8, 16].contains(&v) {
        return Err(VectorError::UnsupportedTarget {
            target: target.name(),
            vec_size: v,
        });
    }
    check_order(vg, order)?;
    let mut out = format!("/* {} vectorized for {} x double ({}) */\n", vg.name, v, target.name());
    match target {
        Target::Avx512 => out.push_str("#include <immintrin.h>\n#include <math.h>\n\n"),
        Target::Portable => {
            out.push_str("#include <math.h>\n\n");
            out.push_str(&portable_prelude(v));
            out.push('\n');
        }
    }
    let params: Vec<String> = vg
        .arrays
        .iter()
        .map(|a| match a.role {
            ArrayRole::Input => format!("const double *{}", a.name),
            _ => format!("double *{}", a.name),
        })
        .collect();
    let params = if params.is_empty() {
        "void".to_string()
    } else {
        params.join(", ")
    };
    writeln!(out, "void {}({params})\n{{", function_name(vg)).unwrap();

    let ty = match target {
        Target::Avx512 => "__m512d".to_string(),
        Target::Portable => format!("vec{v}d"),
    };
    let p = format!("vec{v}d");
    let array = |a: usize| vg.arrays[a].name.as_str();
    let var = |i: usize| format!("v{i}");
    for &id in order {
        let n = &vg.nodes[id];
        let x = |k: usize| var(n.inputs[k]);
        let line = match (&n.kind, target) {
            (VKind::Load { array: a, start, count }, Target::Avx512) if *count == v => {
                format!("{ty} {} = _mm512_loadu_pd(&{}[{start}]);", var(id), array(*a))
            }
            (VKind::Load { array: a, start, count }, Target::Avx512) => format!(
                "{ty} {} = _mm512_maskz_loadu_pd(0x{:02X}, &{}[{start}]);",
                var(id),
                (1u64 << count) - 1,
                array(*a)
            ),
            (VKind::Load { array: a, start, count }, Target::Portable) => {
                format!("{ty} {} = {p}_load(&{}[{start}], {count});", var(id), array(*a))
            }
            (
                VKind::Store {
                    array: a,
                    start,
                    count,
                    mask,
                },
                Target::Avx512,
            ) => {
                if *count == v && mask.iter().all(|&b| b) {
                    format!("_mm512_storeu_pd(&{}[{start}], {});", array(*a), x(0))
                } else {
                    format!(
                        "_mm512_mask_storeu_pd(&{}[{start}], 0x{:02X}, {});",
                        array(*a),
                        lane_mask(mask.iter().copied()),
                        x(0)
                    )
                }
            }
            (
                VKind::Store {
                    array: a, start, mask, ..
                },
                Target::Portable,
            ) => format!(
                "{p}_store(&{}[{start}], {}, 0x{:X}ULL);",
                array(*a),
                x(0),
                lane_mask(mask.iter().copied())
            ),
            (VKind::Op(op), Target::Avx512) => {
                format!("{ty} {} = _mm512_{}_pd({}, {});", var(id), op.name(), x(0), x(1))
            }
            (VKind::Op(op), Target::Portable) => {
                format!("{ty} {} = {p}_{}({}, {});", var(id), op.name(), x(0), x(1))
            }
            (VKind::Broadcast(c), Target::Avx512) => {
                format!("{ty} {} = _mm512_set1_pd({});", var(id), c_double(*c))
            }
            (VKind::Broadcast(c), Target::Portable) => {
                format!("{ty} {} = {p}_set1({});", var(id), c_double(*c))
            }
            (VKind::Permute(pat), Target::Avx512) => format!(
                "{ty} {} = _mm512_permutexvar_pd({}, {});",
                var(id),
                set_epi64(pat.iter().map(|&i| i as i64)),
                x(0)
            ),
            (VKind::Extract(pat), Target::Avx512) => format!(
                "{ty} {} = _mm512_maskz_permutexvar_pd(0x{:02X}, {}, {});",
                var(id),
                lane_mask(pat.iter().map(Option::is_some)),
                set_epi64(pat.iter().map(|i| i.unwrap_or(0) as i64)),
                x(0)
            ),
            (VKind::Merge(pat), Target::Avx512) => format!(
                "{ty} {} = _mm512_maskz_permutex2var_pd(0x{:02X}, {}, {}, {});",
                var(id),
                lane_mask(pat.iter().map(Option::is_some)),
                x(0),
                set_epi64(pat.iter().map(|i| i.unwrap_or(0) as i64)),
                x(1)
            ),
            (VKind::Permute(pat), Target::Portable) => format!(
                "{ty} {} = {p}_permute({}, (const int[]){{{}}});",
                var(id),
                x(0),
                int_list(pat.iter().map(|&i| i as i64))
            ),
            (VKind::Extract(pat), Target::Portable) => format!(
                "{ty} {} = {p}_permute({}, (const int[]){{{}}});",
                var(id),
                x(0),
                int_list(pat.iter().map(|i| i.map_or(-1, |i| i as i64)))
            ),
            (VKind::Merge(pat), Target::Portable) => format!(
                "{ty} {} = {p}_merge({}, {}, (const int[]){{{}}});",
                var(id),
                x(0),
                x(1),
                int_list(pat.iter().map(|i| i.map_or(-1, |i| i as i64)))
            ),
            (VKind::Reduce { opcode, mask }, Target::Avx512) => format!(
                "{ty} {} = _mm512_set1_pd(_mm512_mask_reduce_{}_pd(0x{:02X}, {}));",
                var(id),
                opcode.name(),
                lane_mask(mask.iter().copied()),
                x(0)
            ),
            (VKind::Reduce { opcode, mask }, Target::Portable) => format!(
                "{ty} {} = {p}_set1({p}_reduce_{}({}, 0x{:X}ULL));",
                var(id),
                opcode.name(),
                x(0),
                lane_mask(mask.iter().copied())
            ),
        };
        writeln!(out, "    {line}").unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

/// `_mm512_set_epi64` takes lanes from highest to lowest.
fn set_epi64(lanes: impl DoubleEndedIterator<Item = i64>) -> String {
    format!("_mm512_set_epi64({})", int_list(lanes.rev()))
}

fn int_list(xs: impl Iterator<Item = i64>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
