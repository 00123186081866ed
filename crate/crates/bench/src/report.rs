//! CSV form of sweep series.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::run::BenchRecord;
use crate::sweep::{SweepSeries, SweepVar};
use crate::BenchError;

pub const COLUMNS: [&str; 15] = [
    "variable",
    "value",
    "kernel",
    "N",
    "threads",
    "schedule",
    "offset",
    "seg_align",
    "shift",
    "time_best_s",
    "time_median_s",
    "gbs_reported",
    "gbs_actual",
    "mlups",
    "balance_score",
];

fn opt(v: Option<f64>) -> String {
    // Display of f64 is the shortest string that parses back to the same
    // value, never uses exponents or separators
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(series: &SweepSeries, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for (i, r) in series.records.iter().enumerate() {
        let (variable, value) = match series.variable {
            Some(v) => (v.name().to_string(), series.values[i].to_string()),
            None => (String::new(), String::new()),
        };
        let offsets: Vec<String> = r.offsets.iter().map(usize::to_string).collect();
        w.write_record([
            variable,
            value,
            r.kernel.to_string(),
            r.n.to_string(),
            r.threads.to_string(),
            r.schedule.to_string(),
            offsets.join(";"),
            r.seg_align.to_string(),
            r.shift.to_string(),
            opt(r.time_best_s),
            opt(r.time_median_s),
            opt(r.gbs_reported),
            opt(r.gbs_actual),
            opt(r.mlups),
            opt(r.balance_score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(series: &SweepSeries, path: &Path) -> Result<(), BenchError> {
    write_csv(series, File::create(path)?)
}

fn parse<T: std::str::FromStr>(field: &str, name: &str) -> Result<T, BenchError> {
    field
        .parse()
        .map_err(|_| BenchError::Csv(format!("bad {name} value {field:?}")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>, BenchError> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, name).map(Some)
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<SweepSeries, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(BenchError::Csv(format!("unexpected header {header:?}")));
    }
    let mut series = SweepSeries {
        variable: None,
        values: Vec::new(),
        records: Vec::new(),
    };
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| &row[i];
        if !f(0).is_empty() {
            let var: SweepVar = f(0).parse()?;
            if series.records.is_empty() {
                series.variable = Some(var);
            } else if series.variable != Some(var) {
                return Err(BenchError::Csv("rows mix sweep variables".into()));
            }
            series.values.push(parse(f(1), "value")?);
        }
        let offsets = if f(6).is_empty() {
            Vec::new()
        } else {
            f(6).split(';').map(|o| parse(o, "offset")).collect::<Result<_, _>>()?
        };
        series.records.push(BenchRecord {
            kernel: f(2).parse()?,
            n: parse(f(3), "N")?,
            threads: parse(f(4), "threads")?,
            schedule: parse(f(5), "schedule")?,
            offsets,
            seg_align: parse(f(7), "seg_align")?,
            shift: parse(f(8), "shift")?,
            time_best_s: parse_opt(f(9), "time_best_s")?,
            time_median_s: parse_opt(f(10), "time_median_s")?,
            gbs_reported: parse_opt(f(11), "gbs_reported")?,
            gbs_actual: parse_opt(f(12), "gbs_actual")?,
            mlups: parse_opt(f(13), "mlups")?,
            balance_score: parse_opt(f(14), "balance_score")?,
        });
    }
    if series.variable.is_some() && series.values.len() != series.records.len() {
        return Err(BenchError::Csv("some rows lack the swept value".into()));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KernelKind;
    use interleave::Schedule;

    fn record() -> BenchRecord {
        BenchRecord {
            kernel: KernelKind::Triad,
            n: 1 << 25,
            threads: 64,
            schedule: Schedule::Chunked(1),
            offsets: vec![0, 128, 256],
            seg_align: 512,
            shift: 128,
            time_best_s: Some(0.1 + 0.2),
            time_median_s: Some(1.0 / 3.0),
            gbs_reported: Some(12345.678901234567),
            gbs_actual: Some(1e-7),
            mlups: None,
            balance_score: Some(0.25),
        }
    }

    #[test]
    fn header_and_quoting() {
        let mut buf = Vec::new();
        write_csv(&SweepSeries::single(record()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with(",,triad,33554432,64,\"static,1\",0;128;256,512,128,"));
        assert!(row.contains("0.30000000000000004"));
        assert!(row.contains("0.0000001"));
        assert!(row.ends_with(",,0.25"));
    }

    #[test]
    fn round_trip_is_exact() {
        let series = SweepSeries {
            variable: Some(SweepVar::Offset),
            values: vec![0, 8],
            records: vec![record(), BenchRecord { offsets: vec![8], ..record() }],
        };
        let mut buf = Vec::new();
        write_csv(&series, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), series);

        let single = SweepSeries::single(record());
        let mut buf = Vec::new();
        write_csv(&single, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), single);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
