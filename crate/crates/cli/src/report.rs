use serde_json::{json, Value};
use strip_scatter::{Structure, StructuredMatrix};

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV text with a mandatory header row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("CSV fields are UTF-8")
    }
}

fn structure_name(s: Structure) -> &'static str {
    match s {
        Structure::Symplectic(_) => "symplectic",
        Structure::PseudoUnitary(_) => "pseudo_unitary",
        Structure::Unitary(_) => "unitary",
        Structure::General => "general",
    }
}

/// One CSV row per entry; every row repeats the structure residual.
pub fn matrix_rows(t: &mut Table, name: &str, m: &StructuredMatrix<f64>) {
    let a = m.matrix();
    let kind = structure_name(m.structure());
    let res = num(m.residual());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t.row([
                name.to_string(),
                i.to_string(),
                j.to_string(),
                num(a[(i, j)].re),
                num(a[(i, j)].im),
                kind.to_string(),
                res.clone(),
            ]);
        }
    }
}

pub fn matrix_json(name: &str, m: &StructuredMatrix<f64>) -> Value {
    let a = m.matrix();
    let data: Vec<Vec<[f64; 2]>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect();
    json!({
        "name": name,
        "structure": structure_name(m.structure()),
        "structure_residual": m.residual(),
        "rows": a.nrows(),
        "cols": a.ncols(),
        "data": data,
    })
}
