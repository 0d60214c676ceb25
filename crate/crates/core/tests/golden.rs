//! Frozen outputs. Set `GRAPHVEC_BLESS=1` to rewrite the files under
//! `tests/golden/` after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

use graphvec::corpus::{make_kernel, make_predx, KernelSpec, PredXSpec, Signature};
use graphvec::dot::{group_dot, scalar_dot, schedule_dot, vector_dot};
use graphvec::grouping::build_group_graph;
use graphvec::kernel::random_index;
use graphvec::scalar::{dedup, GraphJson, MemoryImage, Opcode};
use graphvec::search::{prospect, SearchLimits};
use graphvec::splitting::enumerate_load_store_splits;
use graphvec::vector::{emit_intrinsics, function_name, interpret_vector, schedule, Target, VectorCensus};
use sha2::{Digest, Sha256};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("GRAPHVEC_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, want, "{name} drifted; rerun with GRAPHVEC_BLESS=1 if intended");
}

fn census(loads: usize, stores: usize, operations: usize, data_transformations: usize) -> VectorCensus {
    VectorCensus {
        loads,
        stores,
        operations,
        data_transformations,
    }
}

#[test]
fn ka_kb_winners() {
    let ka = make_kernel(&KernelSpec::named("KA", 6, Opcode::Add).unwrap()).unwrap();
    let out = prospect(&ka, 4, &SearchLimits::default()).unwrap();
    assert_eq!(out.report.winner_census, census(4, 2, 2, 0));
    assert!(!out.report.winner.use_reduction);

    let kb = make_kernel(&KernelSpec::named("KB", 6, Opcode::Add).unwrap()).unwrap();
    let out = prospect(&kb, 4, &SearchLimits::default()).unwrap();
    assert_eq!(out.report.winner_census, census(4, 1, 4, 1));
    assert!(out.report.winner.use_reduction);
}

#[test]
fn census_table() {
    let mut table = String::from("kernel,size,vec,loads,stores,operations,data_transformations,reduction\n");
    for sig in Signature::ALL {
        for (size, vec) in [(16, 4), (12, 8), (10, 4)] {
            let g = make_kernel(&KernelSpec::new(sig, size, Opcode::Add)).unwrap();
            let r = prospect(&g, vec, &SearchLimits::default()).unwrap().report;
            let c = r.winner_census;
            table.push_str(&format!(
                "{},{size},{vec},{},{},{},{},{}\n",
                sig.name(),
                c.loads,
                c.stores,
                c.operations,
                c.data_transformations,
                r.winner.use_reduction
            ));
        }
    }
    check_golden("census.csv", &table);
}

#[test]
fn intrinsics_files() {
    for (name, size, vec) in [("KA", 6, 4), ("KB", 12, 8)] {
        let g = make_kernel(&KernelSpec::named(name, size, Opcode::Add).unwrap()).unwrap();
        let vg = prospect(&g, vec, &SearchLimits::default()).unwrap().vector;
        let c = emit_intrinsics(&vg, &schedule(&vg), Target::for_vec_size(vec)).unwrap();
        check_golden(&format!("{}.c", function_name(&vg)), &c);
    }
}

#[test]
fn predx_graph_hash() {
    let g = make_predx(&PredXSpec {
        x: 4,
        size: 100,
        seed: 7,
    });
    let json = GraphJson::from_graph(&g).to_string_pretty();
    let hash: String = Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    check_golden("pred4_100_7.sha256", &format!("{hash}\n"));
}

#[test]
fn dot_outputs() {
    let g = make_kernel(&KernelSpec::named("KB", 6, Opcode::Add).unwrap()).unwrap();
    let out = prospect(&g, 4, &SearchLimits::default()).unwrap();
    let s = scalar_dot(&g);
    assert_eq!(s.matches("shape=box").count(), 13);
    let gd = group_dot(&out.scalar, &out.groups);
    assert_eq!(gd.matches(" -> ").count(), out.groups.edges.len());
    let v = vector_dot(&out.vector);
    assert!(v.contains("reduce:add"));
    assert!(v.contains("doubleoctagon"));
    let order = schedule(&out.vector);
    let sd = schedule_dot(&out.vector, &order);
    assert_eq!(sd.matches("style=dotted").count(), out.vector.len() - 1);
    for text in [&s, &gd, &v, &sd] {
        assert!(text.starts_with("digraph ") && text.ends_with("}\n"));
        assert_eq!(text.matches('{').count(), text.matches('}').count());
    }
}

/// Positions a dense range of `len` elements can be cut into with one
/// partial vector.
fn layouts(len: usize, vec: usize) -> usize {
    if len.is_multiple_of(vec) {
        1
    } else {
        len / vec + 1
    }
}

#[test]
fn layout_counts_match_closed_form() {
    for vec in [2, 4, 8] {
        for n in 1..=24 {
            let count = |sig| {
                let g = dedup(&make_kernel(&KernelSpec::new(sig, n, Opcode::Add)).unwrap());
                enumerate_load_store_splits(&g, &build_group_graph(&g), vec, usize::MAX).len()
            };
            let full = layouts(n, vec);
            assert_eq!(count(Signature::NnN), full.pow(3), "NN_N n={n} vec={vec}");
            assert_eq!(count(Signature::SsN), full.pow(3), "SS_N n={n} vec={vec}");
            assert_eq!(count(Signature::N1N), full.pow(2), "N1_N n={n} vec={vec}");
            let r: Vec<usize> = (0..n).map(|i| random_index(i as i64, n)).collect();
            let span = r.iter().max().unwrap() - r.iter().min().unwrap() + 1;
            // src0, src1, and the load and store side of the inout dest.
            assert_eq!(
                count(Signature::NnRn),
                full.pow(2) * layouts(span, vec).pow(2),
                "NN_RN n={n} vec={vec}"
            );
        }
    }
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

/// Compiles the portable output with a small driver and compares what it
/// prints with the vector interpreter.
#[test]
fn emitted_c_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    for sig in Signature::ALL {
        for vec in [2, 4] {
            let g = make_kernel(&KernelSpec::new(sig, 11, Opcode::Mul)).unwrap();
            let vg = prospect(&g, vec, &SearchLimits::default()).unwrap().vector;
            let name = function_name(&vg);
            let mut src = emit_intrinsics(&vg, &schedule(&vg), Target::Portable).unwrap();
            let mem = MemoryImage::random(&vg.arrays, 11, -2.0, 2.0);
            src.push_str("\n#include <stdio.h>\nint main(void) {\n");
            for (a, buf) in vg.arrays.iter().zip(&mem.buffers) {
                let vals: Vec<String> = buf.iter().map(|x| format!("{x:e}")).collect();
                src.push_str(&format!(
                    "    double {}[{}] = {{{}}};\n",
                    a.name,
                    buf.len(),
                    vals.join(", ")
                ));
            }
            let args: Vec<&str> = vg.arrays.iter().map(|a| a.name.as_str()).collect();
            src.push_str(&format!("    {name}({});\n", args.join(", ")));
            for a in &vg.arrays {
                src.push_str(&format!(
                    "    for (int i = 0; i < {}; i++) printf(\"%.17g\\n\", {}[i]);\n",
                    a.len, a.name
                ));
            }
            src.push_str("    return 0;\n}\n");
            let c_path = dir.path().join(format!("{name}.c"));
            let exe = dir.path().join(&name);
            std::fs::write(&c_path, &src).unwrap();
            let status = Command::new(cc)
                .args(["-std=c99", "-O1", "-Wall", "-Werror", "-Wno-unused-function", "-o"])
                .arg(&exe)
                .arg(&c_path)
                .status()
                .unwrap();
            assert!(status.success(), "{cc} failed on {name}");
            let run = Command::new(&exe).output().unwrap();
            let printed: Vec<f64> = String::from_utf8(run.stdout)
                .unwrap()
                .lines()
                .map(|l| l.parse().unwrap())
                .collect();
            let want: Vec<f64> = interpret_vector(&vg, &mem).unwrap().buffers.concat();
            assert_eq!(printed.len(), want.len());
            for (p, w) in printed.iter().zip(&want) {
                assert_eq!(p.to_bits(), w.to_bits(), "{name}: {p} vs {w}");
            }
        }
    }
}

/// The AVX-512 output at least passes the compiler.
#[test]
fn avx512_output_compiles() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    for sig in Signature::ALL {
        let g = make_kernel(&KernelSpec::new(sig, 19, Opcode::Add)).unwrap();
        let vg = prospect(&g, 8, &SearchLimits::default()).unwrap().vector;
        let src = emit_intrinsics(&vg, &schedule(&vg), Target::Avx512).unwrap();
        let c_path = dir.path().join(format!("{}.c", function_name(&vg)));
        std::fs::write(&c_path, src).unwrap();
        let status = Command::new(cc)
            .args(["-std=c99", "-O1", "-mavx512f", "-Wall", "-Werror", "-c", "-o"])
            .arg(dir.path().join("out.o"))
            .arg(&c_path)
            .status()
            .unwrap();
        assert!(status.success(), "{cc} rejected {}", c_path.display());
    }
}
