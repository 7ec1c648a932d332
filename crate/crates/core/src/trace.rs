//! Per-step trace records and their CSV form.
//!
//! Columns are `k, y_*, ytilde_*, u_*, utilde_*, z, zeta, a, atilde_*, ahat,
//! fault_active`, with vector columns numbered from 1. Floats are written
//! with 17 significant digits so a written trace parses back bit-exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: u64,
    pub y: Vector,
    pub ytilde: Vector,
    pub u: Vector,
    pub utilde: Vector,
    pub z: f64,
    /// Distance recovered by the target detector.
    pub zeta: f64,
    pub a: bool,
    pub atilde: Vector,
    /// Alarm decoded on the user side.
    pub ahat: bool,
    pub fault_active: bool,
}

/// Vector widths of a trace: `(ny, ny~, nu, nu~, na~)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceDims {
    pub ny: usize,
    pub ny_enc: usize,
    pub nu: usize,
    pub nu_enc: usize,
    pub na_enc: usize,
}

impl TraceDims {
    pub fn of(r: &TraceRecord) -> Self {
        TraceDims {
            ny: r.y.len(),
            ny_enc: r.ytilde.len(),
            nu: r.u.len(),
            nu_enc: r.utilde.len(),
            na_enc: r.atilde.len(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let numbered = |name: &'static str, n: usize| (1..=n).map(move |i| format!("{name}_{i}"));
        let mut h = vec!["k".to_string()];
        h.extend(numbered("y", self.ny));
        h.extend(numbered("ytilde", self.ny_enc));
        h.extend(numbered("u", self.nu));
        h.extend(numbered("utilde", self.nu_enc));
        h.extend(["z".to_string(), "zeta".to_string(), "a".to_string()]);
        h.extend(numbered("atilde", self.na_enc));
        h.extend(["ahat".to_string(), "fault_active".to_string()]);
        h
    }

    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let count = |prefix: &str| {
            header
                .iter()
                .filter(|c| c.strip_prefix(prefix).is_some_and(|rest| rest.parse::<usize>().is_ok()))
                .count()
        };
        let dims = TraceDims {
            ny: count("y_"),
            ny_enc: count("ytilde_"),
            nu: count("u_"),
            nu_enc: count("utilde_"),
            na_enc: count("atilde_"),
        };
        let expect = dims.header();
        if header.iter().ne(expect.iter().map(String::as_str)) {
            return Err(Error::Usage("trace header does not match the record schema".into()));
        }
        Ok(dims)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = records.first() else {
        w.flush()?;
        return Ok(());
    };
    let dims = TraceDims::of(first);
    w.write_record(dims.header())?;
    for r in records {
        if TraceDims::of(r) != dims {
            return Err(Error::DimensionMismatch(format!("record k = {} has different widths", r.k)));
        }
        let mut row = vec![r.k.to_string()];
        for v in [&r.y, &r.ytilde, &r.u, &r.utilde] {
            row.extend(v.iter().map(|&x| fmt_f64(x)));
        }
        row.push(fmt_f64(r.z));
        row.push(fmt_f64(r.zeta));
        row.push(bit(r.a).to_string());
        row.extend(r.atilde.iter().map(|&x| fmt_f64(x)));
        row.push(bit(r.ahat).to_string());
        row.push(bit(r.fault_active).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(records: &[TraceRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let dims = TraceDims::from_header(rd.headers()?)?;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let mut f = Fields(row.iter());
        let k = f
            .next()?
            .parse::<u64>()
            .map_err(|e| Error::Usage(format!("bad step index: {e}")))?;
        out.push(TraceRecord {
            k,
            y: f.vector(dims.ny)?,
            ytilde: f.vector(dims.ny_enc)?,
            u: f.vector(dims.nu)?,
            utilde: f.vector(dims.nu_enc)?,
            z: f.float()?,
            zeta: f.float()?,
            a: f.bit()?,
            atilde: f.vector(dims.na_enc)?,
            ahat: f.bit()?,
            fault_active: f.bit()?,
        });
    }
    Ok(out)
}

struct Fields<'a>(csv::StringRecordIter<'a>);

impl<'a> Fields<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.0.next().ok_or_else(|| Error::Usage("short trace row".into()))
    }

    fn float(&mut self) -> Result<f64> {
        let s = self.next()?;
        s.parse::<f64>().map_err(|e| Error::Usage(format!("bad float `{s}`: {e}")))
    }

    fn bit(&mut self) -> Result<bool> {
        match self.next()? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Usage(format!("bad bit `{other}`"))),
        }
    }

    fn vector(&mut self, n: usize) -> Result<Vector> {
        let v = (0..n).map(|_| self.float()).collect::<Result<Vec<_>>>()?;
        Ok(Vector::from_vec(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec_of(n: usize) -> impl Strategy<Value = Vector> {
        proptest::collection::vec(-1e9f64..1e9, n).prop_map(Vector::from_vec)
    }

    fn record() -> impl Strategy<Value = TraceRecord> {
        (
            any::<u64>(),
            vec_of(3),
            vec_of(4),
            vec_of(3),
            vec_of(4),
            (0.0f64..1e3, -1.0f64..1e3),
            vec_of(2),
            (any::<bool>(), any::<bool>(), any::<bool>()),
        )
            .prop_map(|(k, y, ytilde, u, utilde, (z, zeta), atilde, (a, ahat, fault_active))| TraceRecord {
                k,
                y,
                ytilde,
                u,
                utilde,
                z,
                zeta,
                a,
                atilde,
                ahat,
                fault_active,
            })
    }

    #[test]
    fn header_schema() {
        let dims = TraceDims {
            ny: 3,
            ny_enc: 4,
            nu: 3,
            nu_enc: 4,
            na_enc: 2,
        };
        let h = dims.header();
        assert_eq!(h.len(), 1 + 3 + 4 + 3 + 4 + 3 + 2 + 2);
        assert_eq!(h[0], "k");
        assert_eq!(h[1], "y_1");
        assert_eq!(h[4], "ytilde_1");
        assert_eq!(h.last().unwrap(), "fault_active");
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    proptest! {
        #[test]
        fn csv_round_trip(records in proptest::collection::vec(record(), 1..20)) {
            let text = trace_to_string(&records).unwrap();
            let back = read_trace(text.as_bytes()).unwrap();
            prop_assert_eq!(back, records);
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_trace("k,y_1,zzz\n1,2,3\n".as_bytes()).is_err());
    }
}
