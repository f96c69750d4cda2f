//! File formats: trace and gain CSVs, HMM report CSVs, the plain-text HMM
//! matrix format, and atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::engine::TraceRow;
use crate::error::{Error, Result};
use crate::hedgers::{ConfidenceVector, GainVector};
use crate::hmm::{HmmParams, HmmReport};

pub const TRACE_HEADER: [&str; 5] = [
    "iteration",
    "master_gain",
    "regret_best",
    "avg_potential",
    "delta_potential",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        kind => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

pub fn trace_csv(rows: &[TraceRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            format_f64(r.master_gain),
            format_f64(r.regret_best),
            format_f64(r.avg_potential),
            format_f64(r.delta_potential),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    column: &str,
    field: &str,
) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("column `{column}`: cannot parse `{field}`"),
    })
}

/// Reads a trace CSV written by [`trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("expected header {}", TRACE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        rows.push(TraceRow {
            iteration: parse_field(path, line, TRACE_HEADER[0], f(0))?,
            master_gain: parse_field(path, line, TRACE_HEADER[1], f(1))?,
            regret_best: parse_field(path, line, TRACE_HEADER[2], f(2))?,
            avg_potential: parse_field(path, line, TRACE_HEADER[3], f(3))?,
            delta_potential: parse_field(path, line, TRACE_HEADER[4], f(4))?,
        });
    }
    Ok(rows)
}

fn matrix_csv(prefix: &str, rows: &[Vec<f64>]) -> Vec<u8> {
    let n = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=n).map(|i| format!("{prefix}_{i}")))
        .expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|&x| format_f64(x)))
            .expect("in-memory write");
    }
    finish(w)
}

/// Gain matrix with header `g_1,…,g_N`, one row per iteration.
pub fn gain_csv(rows: &[Vec<f64>]) -> Vec<u8> {
    matrix_csv("g", rows)
}

/// Confidence matrix with header `c_1,…,c_N`.
pub fn confidence_csv(rows: &[Vec<f64>]) -> Vec<u8> {
    matrix_csv("c", rows)
}

fn read_matrix(path: &Path, prefix: &str) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let n = header.len();
    for (i, h) in header.iter().enumerate() {
        if h != format!("{prefix}_{}", i + 1) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!(
                    "expected header {prefix}_1,…,{prefix}_{n}; column {} is `{h}`",
                    i + 1
                ),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, field)| parse_field::<f64>(path, line, &header[k], field))
            .collect::<Result<Vec<_>>>()?;
        let checked = if prefix == "g" {
            GainVector::new(row).map(GainVector::into_inner)
        } else {
            ConfidenceVector::new(row.clone()).map(|_| row)
        };
        rows.push(checked.map_err(|e| Error::Parse {
            path: path.to_owned(),
            line,
            message: e.to_string(),
        })?);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: "no data rows".to_owned(),
        });
    }
    Ok(rows)
}

/// Reads and range-checks a gain CSV. Errors carry 1-based line numbers.
pub fn read_gain_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_matrix(path, "g")
}

pub fn read_confidence_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_matrix(path, "c")
}

pub fn hmm_report_csv(report: &HmmReport) -> Vec<u8> {
    let n_candidates = report.cumulative_candidate_losses.len();
    let mut header: Vec<String> = [
        "iteration",
        "observation",
        "normalhedge_prediction",
        "normalhedge_loss",
        "bayes_prediction",
        "bayes_loss",
        "best_candidate_loss",
        "truth_mass",
        "regret_best",
        "avg_potential",
    ]
    .map(str::to_owned)
    .to_vec();
    header.extend((1..=n_candidates).map(|m| format!("candidate_{m}_loss")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for s in &report.steps {
        let mut rec = vec![
            s.iteration.to_string(),
            s.observation.to_string(),
            format_f64(s.normalhedge_prediction),
            format_f64(s.normalhedge_loss),
            format_f64(s.bayes_prediction),
            format_f64(s.bayes_loss),
            format_f64(s.candidate_losses[report.best_candidate]),
            s.truth_mass.map(format_f64).unwrap_or_default(),
            format_f64(s.regret_best),
            format_f64(s.avg_potential),
        ];
        rec.extend(s.candidate_losses.iter().map(|&l| format_f64(l)));
        w.write_record(&rec).expect("in-memory write");
    }
    finish(w)
}

/// A named model from a matrix file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub params: HmmParams,
}

#[derive(Default)]
struct ModelDraft {
    name: Option<String>,
    start_line: usize,
    initial: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
}

impl ModelDraft {
    fn is_empty(&self) -> bool {
        self.initial.is_empty() && self.transition.is_empty() && self.emission.is_empty()
    }

    fn build(self, path: &Path, index: usize) -> Result<NamedModel> {
        let err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: self.start_line,
            message,
        };
        let [initial] = <[Vec<f64>; 1]>::try_from(self.initial.clone())
            .map_err(|_| err("`initial` needs exactly one row".to_owned()))?;
        let emission = self
            .emission
            .iter()
            .map(|r| {
                <[f64; 2]>::try_from(r.as_slice())
                    .map_err(|_| err("emission rows need two columns".to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        let params = HmmParams::new(self.transition.clone(), emission, initial)
            .map_err(|e| err(e.to_string()))?;
        Ok(NamedModel {
            name: self.name.unwrap_or_else(|| format!("model_{}", index + 1)),
            params,
        })
    }
}

/// Parses the plain-text HMM matrix format:
///
/// ```text
/// # comment
/// model truth
/// initial
/// 0.5 0.5
/// transition
/// 0.95 0.05
/// 0.05 0.95
/// emission
/// 0.9 0.1
/// 0.1 0.9
/// ```
///
/// Emission rows are `P(x=0 | s) P(x=1 | s)`. Numbers may be separated by
/// whitespace or commas. A `model` line starts a new model; it may be
/// omitted for a single-model file.
pub fn parse_models(text: &str, path: &Path) -> Result<Vec<NamedModel>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Section {
        None,
        Initial,
        Transition,
        Emission,
    }
    let mut models = Vec::new();
    let mut draft = ModelDraft {
        start_line: 1,
        ..ModelDraft::default()
    };
    let mut section = Section::None;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty());
        let first = words.next().expect("non-empty line");
        match first {
            "model" => {
                if !draft.is_empty() {
                    let done = std::mem::take(&mut draft);
                    models.push(done.build(path, models.len())?);
                } else if draft.name.is_some() {
                    return Err(parse_err(line, "empty model".to_owned()));
                }
                draft.start_line = line;
                draft.name = Some(words.collect::<Vec<_>>().join(" ")).filter(|n| !n.is_empty());
                section = Section::None;
            }
            "initial" => section = Section::Initial,
            "transition" => section = Section::Transition,
            "emission" => section = Section::Emission,
            _ => {
                let row = std::iter::once(first)
                    .chain(words)
                    .map(|w| {
                        w.parse::<f64>()
                            .map_err(|_| parse_err(line, format!("cannot parse `{w}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                match section {
                    Section::Initial => draft.initial.push(row),
                    Section::Transition => draft.transition.push(row),
                    Section::Emission => draft.emission.push(row),
                    Section::None => {
                        return Err(parse_err(
                            line,
                            "numbers before a section keyword".to_owned(),
                        ));
                    }
                }
            }
        }
    }
    if !draft.is_empty() {
        models.push(draft.build(path, models.len())?);
    }
    if models.is_empty() {
        return Err(parse_err(1, "no models".to_owned()));
    }
    Ok(models)
}

pub fn read_models(path: &Path) -> Result<Vec<NamedModel>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_models(&text, path)
}

/// Inverse of [`parse_models`].
pub fn format_models(models: &[NamedModel]) -> String {
    let row = |r: &[f64]| {
        r.iter()
            .map(|&x| format_f64(x))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    for m in models {
        out += &format!(
            "model {}\ninitial\n{}\ntransition\n",
            m.name,
            row(m.params.initial())
        );
        for r in m.params.transition() {
            out += &row(r);
            out.push('\n');
        }
        out += "emission\n";
        for r in m.params.emission() {
            out += &row(r);
            out.push('\n');
        }
    }
    out
}

/// Observations for a scripted HMM run: `0`/`1` characters, with
/// whitespace, commas and `#` comments ignored.
pub fn read_observations(path: &Path) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        for ch in raw.split('#').next().unwrap_or("").chars() {
            match ch {
                '0' => out.push(0),
                '1' => out.push(1),
                c if c.is_whitespace() || c == ',' => {}
                c => {
                    return Err(Error::Parse {
                        path: path.to_owned(),
                        line: i + 1,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Replaces anything but ASCII alphanumerics and `_` so a parameter
/// string is safe as a file name: `.` → `p`, `-` → `m`.
pub fn sanitize(s: &str) -> String {
    s.chars()
        .filter_map(|c| match c {
            c if c.is_ascii_alphanumeric() || c == '_' => Some(c),
            '.' => Some('p'),
            '-' => Some('m'),
            _ => None,
        })
        .collect()
}

pub(crate) fn path_in(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            f64::MAX,
            0.0,
            -0.0,
            248.987_107_532_263_3,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn sanitized_names() {
        assert_eq!(sanitize("gamma0.8_f-1"), "gamma0p8_fm1");
        assert_eq!(sanitize("a/b c"), "abc");
    }

    #[test]
    fn gain_csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        let rows = vec![vec![0.1, -1.0], vec![1.0 / 3.0, 0.0]];
        write_atomic(&p, &gain_csv(&rows)).unwrap();
        assert_eq!(read_gain_csv(&p).unwrap(), rows);

        fs::write(&p, "g_1,g_2\n0.5,0.5\n0.2,oops\n").unwrap();
        match read_gain_csv(&p) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        fs::write(&p, "g_1,g_2\n0.5,0.5\n0.5,0.5\n1.5,0\n").unwrap();
        match read_gain_csv(&p) {
            Err(Error::Parse {
                line: 4, message, ..
            }) => assert!(message.contains("outside")),
            other => panic!("{other:?}"),
        }
        fs::write(&p, "g_1,x\n0,0\n").unwrap();
        assert!(matches!(
            read_gain_csv(&p),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn models_round_trip() {
        let text = "# bank\nmodel a\ninitial\n0.5, 0.5\ntransition\n0.9 0.1\n0.1 0.9\nemission\n0.8 0.2\n0.3 0.7\n\
                    model b\ninitial\n1 0\ntransition\n0.5 0.5\n0.5 0.5\nemission\n0.5 0.5\n0.5 0.5\n";
        let models = parse_models(text, Path::new("bank.txt")).unwrap();
        assert_eq!(models.len(), 2);
        assert_eq!(models[0].name, "a");
        assert_eq!(models[1].params.initial(), &[1.0, 0.0]);
        let again = parse_models(&format_models(&models), Path::new("x")).unwrap();
        assert_eq!(again, models);
    }

    #[test]
    fn model_errors_have_lines() {
        let bad = "initial\n0.5 0.5\ntransition\n0.9 0.2\n0.1 0.9\nemission\n1 0\n0 1\n";
        assert!(matches!(
            parse_models(bad, Path::new("m")),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "initial\n0.5 zz\n";
        assert!(matches!(
            parse_models(bad, Path::new("m")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_models("0.1 0.2\n", Path::new("m")).is_err());
    }
}
