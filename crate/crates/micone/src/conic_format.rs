//! Sectioned text format for mixed-integer conic programs.
//!
//! ```text
//! VER
//! 1
//! OBJ
//! 1 0.0            # nonzeros, constant offset
//! 2 1.0            # z column, coefficient
//! VARX
//! 1                # integer columns
//! 0.0 1.0          # lower upper
//! VARZ
//! 1                # cone factors
//! RSOC 3
//! AX
//! 1 1 1            # rows cols nonzeros
//! 0 0 1.0
//! AZ
//! 1 3 1
//! 0 0 1.0
//! B
//! 1                # rows
//! 0.0
//! ```
//!
//! Cone lines: `NONNEG k`, `SOC k`, `RSOC k`, `EXP`, `POW alpha`. `#` starts a
//! comment. Floats are written with 17 significant digits.

use std::fmt::Write as _;

use micone_core::cones::{Cone, ConeProduct};
use micone_core::linalg::Matrix;
use micone_core::program::ConicProgram;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line} ({section}): {msg}")]
pub struct FormatError {
    pub section: String,
    pub line: usize,
    pub msg: String,
}

const SECTIONS: [&str; 7] = ["VER", "OBJ", "VARX", "VARZ", "AX", "AZ", "B"];

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Text form of a program.
pub fn write_conic(p: &ConicProgram) -> String {
    let mut out = String::from("VER\n1\n");
    let obj: Vec<(usize, f64)> = p.c.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    let _ = writeln!(out, "OBJ\n{} {}", obj.len(), f(p.obj_offset));
    for (j, v) in obj {
        let _ = writeln!(out, "{j} {}", f(v));
    }
    let _ = writeln!(out, "VARX\n{}", p.nx());
    for j in 0..p.nx() {
        let _ = writeln!(out, "{} {}", f(p.lower[j]), f(p.upper[j]));
    }
    let _ = writeln!(out, "VARZ\n{}", p.cones.len());
    for cone in p.cones.factors() {
        let _ = match cone {
            Cone::NonNeg(k) => writeln!(out, "NONNEG {k}"),
            Cone::Soc(k) => writeln!(out, "SOC {k}"),
            Cone::Rsoc(k) => writeln!(out, "RSOC {k}"),
            Cone::Exp => writeln!(out, "EXP"),
            Cone::Pow(a) => writeln!(out, "POW {}", f(*a)),
        };
    }
    for (name, m) in [("AX", &p.ax), ("AZ", &p.az)] {
        let nz: Vec<(usize, usize, f64)> = m.nonzeros().collect();
        let _ = writeln!(out, "{name}\n{} {} {}", m.rows(), m.cols(), nz.len());
        for (i, j, v) in nz {
            let _ = writeln!(out, "{i} {j} {}", f(v));
        }
    }
    let _ = writeln!(out, "B\n{}", p.rows());
    for v in &p.b {
        let _ = writeln!(out, "{}", f(*v));
    }
    out
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    at: usize,
    section: String,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> FormatError {
        let line = self
            .lines
            .get(self.at.saturating_sub(1).min(self.lines.len().saturating_sub(1)))
            .map_or(0, |l| l.0);
        FormatError {
            section: self.section.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<&[&'a str], FormatError> {
        if self.at >= self.lines.len() {
            self.at = self.lines.len() + 1;
            return Err(self.err("unexpected end of file"));
        }
        self.at += 1;
        Ok(&self.lines[self.at - 1].1)
    }

    fn fields<const N: usize>(&mut self) -> Result<[&'a str; N], FormatError> {
        let l = self.next()?.to_vec();
        l.try_into()
            .map_err(|_: Vec<&str>| self.err(format!("expected {N} fields")))
    }

    fn usize(&self, s: &str) -> Result<usize, FormatError> {
        s.parse().map_err(|_| self.err(format!("expected an index, got `{s}`")))
    }

    fn float(&self, s: &str) -> Result<f64, FormatError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| self.err(format!("expected a number, got `{s}`")))
    }
}

fn read_matrix(l: &mut Lines) -> Result<Matrix, FormatError> {
    let [r, c, n] = l.fields::<3>()?;
    let (rows, cols, nnz) = (l.usize(r)?, l.usize(c)?, l.usize(n)?);
    let mut m = Matrix::zeros(rows, cols);
    for _ in 0..nnz {
        let [i, j, v] = l.fields::<3>()?;
        let (i, j, v) = (l.usize(i)?, l.usize(j)?, l.float(v)?);
        if i >= rows || j >= cols {
            return Err(l.err(format!("entry ({i}, {j}) out of range")));
        }
        m[(i, j)] += v;
    }
    Ok(m)
}

/// Parses a program; dimensions and cones are checked.
pub fn read_conic(text: &str) -> Result<ConicProgram, FormatError> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    let mut l = Lines {
        lines,
        at: 0,
        section: "header".into(),
    };
    let mut c: Option<(Vec<(usize, f64)>, f64)> = None;
    let mut bounds: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut cones: Option<Vec<Cone>> = None;
    let mut ax = None;
    let mut az = None;
    let mut b = None;
    let mut seen: Vec<&str> = Vec::new();
    while l.at < l.lines.len() {
        let head = l.next()?.to_vec();
        let name = match head.as_slice() {
            [s] => *s,
            _ => return Err(l.err("expected a section name")),
        };
        let Some(known) = SECTIONS.iter().find(|s| **s == name) else {
            return Err(l.err(format!("unknown section `{name}`")));
        };
        if seen.contains(known) {
            return Err(l.err(format!("section `{name}` repeated")));
        }
        if seen.is_empty() && *known != "VER" {
            return Err(l.err("file must start with VER"));
        }
        seen.push(known);
        l.section = name.to_string();
        match name {
            "VER" => {
                let [v] = l.fields::<1>()?;
                if v != "1" {
                    return Err(l.err(format!("unsupported version `{v}`")));
                }
            }
            "OBJ" => {
                let [n, off] = l.fields::<2>()?;
                let (n, off) = (l.usize(n)?, l.float(off)?);
                let mut entries = Vec::with_capacity(n);
                for _ in 0..n {
                    let [j, v] = l.fields::<2>()?;
                    entries.push((l.usize(j)?, l.float(v)?));
                }
                c = Some((entries, off));
            }
            "VARX" => {
                let [n] = l.fields::<1>()?;
                let n = l.usize(n)?;
                let (mut lo, mut hi) = (Vec::new(), Vec::new());
                for _ in 0..n {
                    let [a, b] = l.fields::<2>()?;
                    let (a, b) = (l.float(a)?, l.float(b)?);
                    if !(a.is_finite() && b.is_finite()) || a > b {
                        return Err(l.err("integer bounds must be finite and ordered"));
                    }
                    lo.push(a);
                    hi.push(b);
                }
                bounds = Some((lo, hi));
            }
            "VARZ" => {
                let [n] = l.fields::<1>()?;
                let n = l.usize(n)?;
                let mut out = Vec::new();
                for _ in 0..n {
                    let fields = l.next()?.to_vec();
                    let cone = match fields.as_slice() {
                        ["NONNEG", k] => Cone::NonNeg(l.usize(k)?),
                        ["SOC", k] => Cone::Soc(l.usize(k)?),
                        ["RSOC", k] => Cone::Rsoc(l.usize(k)?),
                        ["EXP"] => Cone::Exp,
                        ["POW", a] => Cone::Pow(l.float(a)?),
                        _ => return Err(l.err("unrecognized cone")),
                    };
                    cone.validate().map_err(|e| l.err(format!("{e:?}")))?;
                    out.push(cone);
                }
                cones = Some(out);
            }
            "AX" => ax = Some(read_matrix(&mut l)?),
            "AZ" => az = Some(read_matrix(&mut l)?),
            "B" => {
                let [m] = l.fields::<1>()?;
                let m = l.usize(m)?;
                let mut v = Vec::with_capacity(m);
                for _ in 0..m {
                    let [x] = l.fields::<1>()?;
                    v.push(l.float(x)?);
                }
                b = Some(v);
            }
            _ => unreachable!(),
        }
    }
    l.section = "end".into();
    let missing = SECTIONS.iter().find(|s| !seen.contains(s));
    if let Some(s) = missing {
        return Err(l.err(format!("missing section {s}")));
    }
    let (entries, obj_offset) = c.unwrap();
    let (lower, upper) = bounds.unwrap();
    let cones = ConeProduct::new(cones.unwrap());
    let (ax, az, b) = (ax.unwrap(), az.unwrap(), b.unwrap());
    let nz = cones.dim();
    if az.cols() != nz {
        return Err(l.err(format!("cones cover {nz} columns but AZ has {}", az.cols())));
    }
    if ax.cols() != lower.len() {
        return Err(l.err("AX columns disagree with VARX"));
    }
    if ax.rows() != b.len() || az.rows() != b.len() {
        return Err(l.err("row counts disagree"));
    }
    let mut cvec = vec![0.0; nz];
    for (j, v) in entries {
        if j >= nz {
            return Err(l.err(format!("objective column {j} out of range")));
        }
        cvec[j] += v;
    }
    let p = ConicProgram {
        c: cvec,
        obj_offset,
        ax,
        az,
        b,
        lower,
        upper,
        cones,
    };
    p.validate().map_err(|e| l.err(e.to_string()))?;
    Ok(p)
}
