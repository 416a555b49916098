//! Export to the SDPA sparse format (`.dat-s`) for cross-checking with
//! external solvers.
//!
//! SDPA solves `min c'x s.t. sum_i x_i F_i - F_0 >= 0`. Matrix
//! inequalities become one block each; every scalar equality becomes a
//! pair of opposite rows in a trailing diagonal block.

use std::io::Write;

use nalgebra::DMatrix;

use super::compile::{compile, Layout};
use super::cone::smat;
use super::problem::{ConstraintKind, SdpProblem};
use super::SdpError;

pub fn write_sdpa(problem: &SdpProblem, out: &mut impl Write) -> Result<(), SdpError> {
    let layout = Layout::new(problem);
    let prog = compile(problem, &layout)?;
    let n = layout.n;
    let p = prog.a.nrows();

    writeln!(out, "\" ddsat problem dump")?;
    for (name, v) in problem.variables() {
        let (_, off) = layout.vars[v.id.index()];
        writeln!(
            out,
            "\" variable {name}: {:?} {}x{}, unknowns {}..{}",
            v.kind,
            v.rows,
            v.cols,
            off + 1,
            off + v.dof()
        )?;
    }
    let mut block = 0;
    for c in problem.constraints() {
        match c.kind {
            ConstraintKind::Eq => writeln!(
                out,
                "\" equality {} ({}x{} entries, diagonal block)",
                c.name,
                c.expr.rows(),
                c.expr.cols()
            )?,
            _ => {
                block += 1;
                writeln!(out, "\" block {block}: {} {:?}", c.name, c.kind)?;
            }
        }
    }

    let nblocks = prog.blocks.len() + usize::from(p > 0);
    writeln!(out, "{n}")?;
    writeln!(out, "{nblocks}")?;
    let mut sizes: Vec<String> = prog.blocks.iter().map(|b| b.to_string()).collect();
    if p > 0 {
        sizes.push(format!("-{}", 2 * p));
    }
    writeln!(out, "{}", sizes.join(" "))?;
    let costs: Vec<String> = prog.c.iter().map(|v| format!("{v:?}")).collect();
    writeln!(out, "{}", costs.join(" "))?;

    let entries =
        |out: &mut dyn Write, mat: usize, blk: usize, m: &DMatrix<f64>| -> std::io::Result<()> {
            for j in 0..m.ncols() {
                for i in 0..=j {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        writeln!(out, "{mat} {blk} {} {} {v:?}", i + 1, j + 1)?;
                    }
                }
            }
            Ok(())
        };

    // s = h - G x  =>  F_0 = -mat(h), F_k = -mat(G_k)
    let mut off = 0;
    for (bi, &k) in prog.blocks.iter().enumerate() {
        let len = k * (k + 1) / 2;
        let h = smat(&prog.h.as_slice()[off..off + len], k);
        entries(out, 0, bi + 1, &(-h))?;
        for col in 0..n {
            let g: Vec<f64> = prog.g.column(col).rows(off, len).iter().cloned().collect();
            entries(out, col + 1, bi + 1, &(-smat(&g, k)))?;
        }
        off += len;
    }
    if p > 0 {
        let blk = prog.blocks.len() + 1;
        for r in 0..p {
            for (sign, slot) in [(1.0, 2 * r + 1), (-1.0, 2 * r + 2)] {
                let f0 = sign * prog.b[r];
                if f0 != 0.0 {
                    writeln!(out, "0 {blk} {slot} {slot} {f0:?}")?;
                }
                for col in 0..n {
                    let v = sign * prog.a[(r, col)];
                    if v != 0.0 {
                        writeln!(out, "{} {blk} {slot} {slot} {v:?}", col + 1)?;
                    }
                }
            }
        }
    }
    Ok(())
}
