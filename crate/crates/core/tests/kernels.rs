//! Every synthetic kernel against a plain loop over the same buffers.

use graphvec::corpus::{make_kernel, KernelSpec, Signature};
use graphvec::kernel::{random_index, shift_index};
use graphvec::scalar::{interpret_scalar, MemoryImage, Opcode};
use graphvec::search::{prospect, SearchLimits};
use graphvec::vector::{interpret_vector_with_order, schedule};

/// Buffers are `src0`, `src1`, `dest` in declaration order.
fn reference(sig: Signature, n: usize, op: Opcode, mem: &MemoryImage) -> Vec<f64> {
    use Signature::*;
    let (a, b) = (&mem.buffers[0], &mem.buffers[1]);
    let mut dest = mem.buffers[2].clone();
    let f = |x: f64, y: f64| match op {
        Opcode::Add => x + y,
        Opcode::Mul => x * y,
        _ => unreachable!(),
    };
    let r = |i: usize| random_index(i as i64, n);
    let s = |i: usize| shift_index(i as i64, n);
    let rhs = |i: usize| match sig {
        NnN | Nn1 | NnRn => f(a[i], b[i]),
        N1N | N11 => f(a[i], b[0]),
        RnN | Rn1 => f(a[r(i)], b[i]),
        R1N | R11 => f(a[r(i)], b[0]),
        SsN => f(a[s(i)], b[s(i)]),
    };
    match sig {
        NnN | N1N | RnN | R1N | SsN => {
            for (i, d) in dest.iter_mut().enumerate().take(n) {
                *d = rhs(i);
            }
        }
        Nn1 | N11 | Rn1 | R11 => {
            let mut x = 0.0;
            for i in 0..n {
                x += rhs(i);
            }
            dest[0] = x;
        }
        NnRn => {
            for i in 0..n {
                dest[r(i)] += rhs(i);
            }
        }
    }
    dest
}

#[test]
fn kernels_match_reference_loops() {
    for sig in Signature::ALL {
        for n in [1, 3, 6, 8, 13, 32] {
            for op in [Opcode::Add, Opcode::Mul] {
                let g = make_kernel(&KernelSpec::new(sig, n, op)).unwrap();
                // Small integers keep every reassociation exact.
                let mem = MemoryImage::random_integers(g.arrays(), n as u64 * 31 + 7);
                let want = reference(sig, n, op, &mem);
                let scalar = interpret_scalar(&g, &mem).unwrap();
                assert_eq!(scalar.buffers[2], want, "scalar {} n={n} {op:?}", sig.name());
                for vec in [2, 4, 8] {
                    let out = prospect(&g, vec, &SearchLimits::default()).unwrap();
                    let order = schedule(&out.vector);
                    let got = interpret_vector_with_order(&out.vector, &mem, &order).unwrap();
                    assert_eq!(got.buffers[2], want, "vector {} n={n} vec={vec} {op:?}", sig.name());
                    assert_eq!(got.buffers[..2], mem.buffers[..2], "inputs clobbered");
                }
            }
        }
    }
}

#[test]
fn index_maps() {
    assert_eq!(
        (0..6).map(|i| shift_index(i, 6)).collect::<Vec<_>>(),
        [2, 3, 4, 5, 0, 1]
    );
    // 0x55555555 = 1431655765 = 6 * 238609294 + 1
    assert_eq!(random_index(0, 6), 1);
    assert_eq!(random_index(1, 6), 1431655764 % 6);
    assert_eq!(random_index(5, 8), (0x5555_5555 ^ 5) % 8);
}
