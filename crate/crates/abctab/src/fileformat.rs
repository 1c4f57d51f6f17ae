//! The table file format: line-oriented text, decimal integers, single
//! spaces, newline-terminated. Deterministic byte output so golden tests
//! can compare files directly.
//!
//! ```text
//! ABCTBL 1
//! modulus <n>
//! padding <m>
//! scheme <plain|ab|abc>
//! codebook A <v0> <v1> ...      (owner view; omitted when redacted)
//! ...
//! op add
//! <S rows of S values>
//! op sub / op mul / op div
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::model::{
    Cipher, Codebook, MaterializedTables, OpKind, SchemeKind, TableSet,
};

pub const MAGIC: &str = "ABCTBL";
pub const VERSION: u32 = 1;

/// A parsed table file: structural metadata, the optional owner
/// codebook, and the four matrices.
#[derive(Debug, Clone)]
pub struct TableFile {
    pub modulus: usize,
    pub padding: usize,
    pub scheme: SchemeKind,
    pub codebook: Option<Codebook>,
    pub tables: MaterializedTables,
}

impl TableFile {
    pub fn table_set(&self) -> TableSet {
        TableSet::Materialized(self.tables.clone())
    }

    pub fn size(&self) -> usize {
        self.tables.size()
    }
}

fn provenance_field(provenance: &str, key: &str) -> Option<String> {
    provenance
        .split(' ')
        .find_map(|kv| kv.strip_prefix(key).map(str::to_string))
}

/// Structural metadata, from the codebook when given, otherwise
/// recovered from the table set's provenance string.
fn metadata(
    ts: &TableSet,
    cb: Option<&Codebook>,
) -> Result<(usize, usize, SchemeKind), Error> {
    if let Some(cb) = cb {
        if cb.size() != ts.size() {
            return Err(Error::Param(format!(
                "codebook cipherspace {} does not match tables {}",
                cb.size(),
                ts.size()
            )));
        }
        return Ok((cb.modulus(), cb.padding(), cb.scheme()));
    }
    let prov = ts.provenance();
    let missing = |k: &str| Error::Param(format!("provenance lacks {k}: `{prov}`"));
    let n: usize = provenance_field(&prov, "n=")
        .ok_or_else(|| missing("n="))?
        .parse()
        .map_err(|_| missing("n="))?;
    let m: usize = provenance_field(&prov, "m=")
        .ok_or_else(|| missing("m="))?
        .parse()
        .map_err(|_| missing("m="))?;
    let scheme = provenance_field(&prov, "scheme=")
        .and_then(|s| SchemeKind::parse(&s))
        .ok_or_else(|| missing("scheme="))?;
    Ok((n, m, scheme))
}

/// Deterministic text form. `redact` drops the codebook section — the
/// attacker view: the tables stay inspectable, decryption does not.
pub fn serialize(ts: &TableSet, cb: Option<&Codebook>, redact: bool) -> Result<String, Error> {
    let mt = ts.materialize()?;
    let (n, m, scheme) = metadata(ts, cb)?;
    let size = mt.size();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "modulus {n}");
    let _ = writeln!(out, "padding {m}");
    let _ = writeln!(out, "scheme {scheme}");
    if !redact {
        if let Some(cb) = cb {
            for &t in scheme.classes() {
                let _ = write!(out, "codebook {t}");
                for &v in cb.class_values(t)? {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
    }
    for op in OpKind::ALL {
        let _ = writeln!(out, "op {op}");
        for c1 in 0..size as Cipher {
            let row = mt.row(op, c1);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, Error> {
        self.lineno += 1;
        self.iter.next().ok_or(Error::Format {
            line: self.lineno,
            msg: "unexpected end of file".into(),
        })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format { line: self.lineno, msg: msg.into() }
    }
}

fn parse_keyword_line<'a>(lines: &mut Lines<'a>, key: &str) -> Result<&'a str, Error> {
    let line = lines.next()?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| lines.err(format!("expected `{key} ...`, got `{line}`")))
}

pub fn parse(text: &str) -> Result<TableFile, Error> {
    let mut lines = Lines { iter: text.lines(), lineno: 0 };
    let header = lines.next()?;
    if header != format!("{MAGIC} {VERSION}") {
        return Err(lines.err(format!("bad header `{header}`")));
    }
    let modulus: usize = parse_keyword_line(&mut lines, "modulus")?
        .parse()
        .map_err(|_| lines.err("bad modulus"))?;
    let padding: usize = parse_keyword_line(&mut lines, "padding")?
        .parse()
        .map_err(|_| lines.err("bad padding"))?;
    let scheme = SchemeKind::parse(parse_keyword_line(&mut lines, "scheme")?)
        .ok_or_else(|| lines.err("bad scheme"))?;
    let size = scheme.classes().len() * modulus + padding;

    // optional codebook block, then the first `op` line
    let mut maps: Vec<Vec<Cipher>> = Vec::new();
    let first_op_line;
    loop {
        let line = lines.next()?;
        if let Some(rest) = line.strip_prefix("codebook ") {
            let mut toks = rest.split(' ');
            let class = toks.next().unwrap_or("");
            let expect = scheme
                .classes()
                .get(maps.len())
                .map(|t| t.letter().to_string())
                .ok_or_else(|| lines.err("too many codebook lines"))?;
            if class != expect {
                return Err(lines.err(format!(
                    "codebook class `{class}` out of order, expected `{expect}`"
                )));
            }
            let values: Vec<Cipher> = toks
                .map(|t| t.parse().map_err(|_| lines.err(format!("bad value `{t}`"))))
                .collect::<Result<_, _>>()?;
            maps.push(values);
        } else {
            first_op_line = line;
            break;
        }
    }
    if !maps.is_empty() && maps.len() != scheme.classes().len() {
        return Err(lines.err(format!(
            "codebook has {} classes, scheme {scheme} needs {}",
            maps.len(),
            scheme.classes().len()
        )));
    }
    let codebook = if maps.is_empty() {
        None
    } else {
        Some(Codebook::new(modulus, padding, scheme, maps)?)
    };

    let mut tables = MaterializedTables::new(size, String::new())?;
    for (oi, op) in OpKind::ALL.into_iter().enumerate() {
        let op_line = if oi == 0 { first_op_line } else { lines.next()? };
        let expect = format!("op {op}");
        if op_line != expect {
            return Err(lines.err(format!("expected `{expect}`, got `{op_line}`")));
        }
        for c1 in 0..size as Cipher {
            let row = lines.next()?;
            let mut count = 0;
            for (c2, tok) in row.split(' ').enumerate() {
                let v: Cipher = tok
                    .parse()
                    .map_err(|_| lines.err(format!("bad cell `{tok}`")))?;
                if (v as usize) >= size {
                    return Err(lines.err(format!(
                        "cell value {v} outside cipherspace [0, {size})"
                    )));
                }
                if c2 >= size {
                    return Err(lines.err(format!("row has more than {size} cells")));
                }
                tables.set(op, c1, c2 as Cipher, v);
                count += 1;
            }
            if count != size {
                return Err(lines.err(format!("row has {count} cells, expected {size}")));
            }
        }
    }
    if lines.iter.next().is_some() {
        return Err(Error::Format {
            line: lines.lineno + 1,
            msg: "trailing content after tables".into(),
        });
    }
    tables.provenance = format!("scheme={scheme} n={modulus} m={padding} fill=file seed=0");
    Ok(TableFile { modulus, padding, scheme, codebook, tables })
}

pub fn write_file(
    path: &Path,
    ts: &TableSet,
    cb: Option<&Codebook>,
    redact: bool,
) -> Result<(), Error> {
    std::fs::write(path, serialize(ts, cb, redact)?)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<TableFile, Error> {
    parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{build_codebook, build_tables, FillPolicy, Layout};
    use crate::model::Decoded;

    fn one_bit() -> (TableSet, Codebook) {
        let cb = build_codebook(2, 0, SchemeKind::Abc, 0, Layout::Explicit).unwrap();
        let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed: 7 }).unwrap();
        (ts, cb)
    }

    #[test]
    fn golden_header_and_first_row() {
        let (ts, cb) = one_bit();
        let text = serialize(&ts, Some(&cb), false).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ABCTBL 1");
        assert_eq!(lines[1], "modulus 2");
        assert_eq!(lines[2], "padding 1");
        assert_eq!(lines[3], "scheme abc");
        assert_eq!(lines[4], "codebook A 1 2");
        assert_eq!(lines[5], "codebook B 3 4");
        assert_eq!(lines[6], "codebook C 5 6");
        assert_eq!(lines[7], "op add");
        // row for cipher 1: ADD(1,3) = 5 at column 3
        let row1: Vec<&str> = lines[9].split(' ').collect();
        assert_eq!(row1[3], "5");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn round_trip_is_byte_exact() {
        for seed in 0..5 {
            let cb = build_codebook(3, 1, SchemeKind::Abc, seed, Layout::Random).unwrap();
            let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed }).unwrap();
            for redact in [false, true] {
                let text = serialize(&ts, Some(&cb), redact).unwrap();
                let parsed = parse(&text).unwrap();
                let again = serialize(
                    &parsed.table_set(),
                    parsed.codebook.as_ref(),
                    redact,
                )
                .unwrap();
                assert_eq!(text, again, "seed {seed} redact {redact}");
            }
        }
    }

    #[test]
    fn redacted_files_have_no_codebook() {
        let (ts, cb) = one_bit();
        let text = serialize(&ts, Some(&cb), true).unwrap();
        assert!(!text.contains("codebook"));
        let parsed = parse(&text).unwrap();
        assert!(parsed.codebook.is_none());
        assert_eq!(parsed.size(), 7);
        // the tables themselves survive
        assert_eq!(parsed.tables.get(OpKind::Add, 2, 3), 6);
    }

    #[test]
    fn parse_preserves_decryption() {
        let (ts, cb) = one_bit();
        let text = serialize(&ts, Some(&cb), false).unwrap();
        let parsed = parse(&text).unwrap();
        let pcb = parsed.codebook.unwrap();
        assert_eq!(
            pcb.decrypt(4).unwrap(),
            Decoded::Coded { value: 1, class: crate::model::AbcType::B }
        );
    }

    #[test]
    fn rejects_malformed_files() {
        let (ts, cb) = one_bit();
        let good = serialize(&ts, Some(&cb), false).unwrap();
        for bad in [
            good.replacen("ABCTBL 1", "ABCTBL 2", 1),
            good.replacen("op add", "op mul", 1),
            good.replacen("modulus 2", "modulus x", 1),
            good.lines().take(10).collect::<Vec<_>>().join("\n"),
            format!("{good}extra\n"),
        ] {
            assert!(parse(&bad).is_err());
        }
        // out-of-range cell
        let bad = good.replacen("op add\n", "op add\n9 9 9 9 9 9 9\n", 1);
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn files_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.abct");
        let (ts, cb) = one_bit();
        write_file(&path, &ts, Some(&cb), false).unwrap();
        let parsed = read_file(&path).unwrap();
        assert_eq!(parsed.modulus, 2);
        assert_eq!(
            serialize(&parsed.table_set(), parsed.codebook.as_ref(), false).unwrap(),
            serialize(&ts, Some(&cb), false).unwrap()
        );
    }
}
