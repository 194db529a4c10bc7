//! CSV emission helpers. Every file starts with a `# schema: ...` comment line
//! followed by the header row.

/// `NA` for undefined values; otherwise the shortest round-trip decimal.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Accumulates rows and renders them with proper quoting.
pub struct CsvTable {
    comment: String,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new<I, S>(comment: &str, header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { comment: comment.replace('\n', " "), writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let body = self.writer.into_inner().expect("in-memory flush");
        let mut out = format!("# schema: {}\n", self.comment);
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        out
    }
}

/// Square matrix with a `language` corner header.
pub fn matrix_csv<F>(comment: &str, labels: &[String], cell: F) -> String
where
    F: Fn(usize, usize) -> String,
{
    let header = std::iter::once("language".to_string()).chain(labels.iter().cloned());
    let mut t = CsvTable::new(comment, header);
    for (a, label) in labels.iter().enumerate() {
        let row = std::iter::once(label.clone()).chain((0..labels.len()).map(|b| cell(a, b)));
        t.row(row);
    }
    t.finish()
}
