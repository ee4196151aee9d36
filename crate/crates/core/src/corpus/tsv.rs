use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Article, Corpus, CorpusError, PubDate};

/// Column order of the canonical map TSV.
pub const STANDARD_COLUMNS: [&str; 11] = [
    "pmid",
    "date",
    "journal",
    "title",
    "abstract",
    "mesh_terms",
    "x",
    "y",
    "citation_count",
    "size",
    "color",
];

#[derive(Clone, Copy)]
enum Col {
    Pmid,
    Date,
    Journal,
    Title,
    Abstract,
    Mesh,
    X,
    Y,
    CitationCount,
    Size,
    Color,
    Extra(usize),
}

fn classify(name: &str, extra_idx: &mut usize) -> Col {
    match name {
        "pmid" => Col::Pmid,
        "date" => Col::Date,
        "journal" => Col::Journal,
        "title" => Col::Title,
        "abstract" => Col::Abstract,
        "mesh_terms" => Col::Mesh,
        "x" => Col::X,
        "y" => Col::Y,
        "citation_count" => Col::CitationCount,
        "size" => Col::Size,
        "color" => Col::Color,
        _ => {
            let c = Col::Extra(*extra_idx);
            *extra_idx += 1;
            c
        }
    }
}

fn split_mesh(cell: &str) -> Vec<String> {
    let sep = if cell.contains(';') { ';' } else { ',' };
    cell.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Parses a map TSV stream. The header must contain a `pmid` column; other
/// standard columns are optional and unknown columns are kept per article.
pub fn parse_tsv<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(CorpusError::Schema("empty input, no header row".into())),
    };
    let header = header.strip_prefix('\u{feff}').unwrap_or(&header).to_owned();
    let names: Vec<String> = header
        .trim_end_matches('\r')
        .split('\t')
        .map(|s| s.trim().to_owned())
        .collect();
    if !names.iter().any(|n| n == "pmid") {
        return Err(CorpusError::Schema("header has no pmid column".into()));
    }
    let mut extra_idx = 0;
    let cols: Vec<Col> = names.iter().map(|n| classify(n, &mut extra_idx)).collect();
    let extra_names: Vec<String> = names
        .iter()
        .zip(&cols)
        .filter(|(_, c)| matches!(c, Col::Extra(_)))
        .map(|(n, _)| n.clone())
        .collect();

    let mut articles = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() > names.len() {
            return Err(CorpusError::Row {
                line: line_no,
                column: String::new(),
                message: format!("{} cells for {} columns", cells.len(), names.len()),
            });
        }
        let mut a = Article::default();
        for (j, col) in cols.iter().enumerate() {
            let cell = cells.get(j).copied().unwrap_or("");
            let row_err = |message: String| CorpusError::Row {
                line: line_no,
                column: names[j].clone(),
                message,
            };
            match *col {
                Col::Pmid => a.pmid = cell.trim().to_owned(),
                Col::Date => {
                    if !cell.trim().is_empty() {
                        a.date = Some(cell.parse::<PubDate>().map_err(row_err)?);
                    }
                }
                Col::Journal => a.journal = cell.to_owned(),
                Col::Title => a.title = cell.to_owned(),
                Col::Abstract => a.abstract_text = cell.to_owned(),
                Col::Mesh => a.mesh_terms = split_mesh(cell),
                Col::X | Col::Y => {
                    let v = if cell.trim().is_empty() {
                        None
                    } else {
                        let v: f64 = cell
                            .trim()
                            .parse()
                            .map_err(|_| row_err(format!("not a number: {cell:?}")))?;
                        if !v.is_finite() {
                            return Err(row_err(format!("non-finite coordinate {cell:?}")));
                        }
                        Some(v)
                    };
                    if matches!(col, Col::X) {
                        a.x = v;
                    } else {
                        a.y = v;
                    }
                }
                Col::CitationCount => {
                    if !cell.trim().is_empty() {
                        a.citation_count = cell.trim().parse().map_err(|_| {
                            row_err(format!("not a non-negative integer: {cell:?}"))
                        })?;
                    }
                }
                Col::Size => {
                    if !cell.trim().is_empty() {
                        let v: f64 = cell
                            .trim()
                            .parse()
                            .map_err(|_| row_err(format!("not a number: {cell:?}")))?;
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(row_err(format!("size must be finite and >= 0: {cell:?}")));
                        }
                        a.size = v;
                    }
                }
                Col::Color => {
                    if !cell.is_empty() {
                        a.color = Some(cell.to_owned());
                    }
                }
                Col::Extra(k) => {
                    a.extra.insert(extra_names[k].clone(), cell.to_owned());
                }
            }
        }
        if a.pmid.is_empty() {
            return Err(CorpusError::Row {
                line: line_no,
                column: "pmid".into(),
                message: "empty pmid".into(),
            });
        }
        if !seen.insert(a.pmid.clone()) {
            return Err(CorpusError::DuplicatePmid(a.pmid));
        }
        articles.push(a);
    }
    Corpus::with_columns(articles, extra_names)
}

pub fn read_tsv_file(path: &Path) -> Result<Corpus, CorpusError> {
    parse_tsv(std::fs::File::open(path)?)
}

fn clean_cell(s: &str) -> String {
    if s.contains(['\t', '\n', '\r']) {
        s.replace(['\t', '\n', '\r'], " ")
    } else {
        s.to_owned()
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the canonical TSV: the eleven standard columns followed by any extra
/// columns in first-seen order.
pub fn write_tsv<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    let mut header: Vec<&str> = STANDARD_COLUMNS.to_vec();
    header.extend(corpus.extra_columns().iter().map(String::as_str));
    writeln!(w, "{}", header.join("\t"))?;
    let empty = BTreeMap::new();
    for a in corpus.articles() {
        let extra = if a.extra.is_empty() { &empty } else { &a.extra };
        let mut cells = vec![
            clean_cell(&a.pmid),
            a.date.map(|d| d.to_string()).unwrap_or_default(),
            clean_cell(&a.journal),
            clean_cell(&a.title),
            clean_cell(&a.abstract_text),
            clean_cell(&a.mesh_terms.join(";")),
            fmt_opt_f64(a.x),
            fmt_opt_f64(a.y),
            a.citation_count.to_string(),
            a.size.to_string(),
            a.color.as_deref().map(clean_cell).unwrap_or_default(),
        ];
        for name in corpus.extra_columns() {
            cells.push(extra.get(name).map(|v| clean_cell(v)).unwrap_or_default());
        }
        writeln!(w, "{}", cells.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str =
        "pmid\tdate\tjournal\ttitle\tabstract\tmesh_terms\tx\ty\tcitation_count\tsize\tcolor";

    #[test]
    fn parses_a_full_row() {
        let input = format!("{HEADER}\n101\t2020\tJ1\tT\tA\tcancer;mice\t0.5\t-1.2\t10\t1.5\t3\n");
        let c = parse_tsv(input.as_bytes()).unwrap();
        let a = &c.articles()[0];
        assert_eq!(a.pmid, "101");
        assert_eq!(a.year(), Some(2020));
        assert_eq!(a.journal, "J1");
        assert_eq!(a.mesh_terms, ["cancer", "mice"]);
        assert_eq!(a.x, Some(0.5));
        assert_eq!(a.y, Some(-1.2));
        assert_eq!(a.citation_count, 10);
        assert_eq!(a.size, 1.5);
        assert_eq!(a.color.as_deref(), Some("3"));
    }

    #[test]
    fn empty_and_missing_cells_default() {
        let input = "pmid\tmesh_terms\tx\n7\t\t\n8\n";
        let c = parse_tsv(input.as_bytes()).unwrap();
        assert!(c.articles()[0].mesh_terms.is_empty());
        assert_eq!(c.articles()[0].x, None);
        assert_eq!(c.articles()[1].citation_count, 0);
    }

    #[test]
    fn comma_separated_mesh_is_accepted() {
        let input = "pmid\tmesh_terms\n1\tNeoplasms, Mice ,Humans\n";
        let c = parse_tsv(input.as_bytes()).unwrap();
        assert_eq!(c.articles()[0].mesh_terms, ["Neoplasms", "Mice", "Humans"]);
    }

    #[test]
    fn duplicate_pmid_is_rejected() {
        let input = "pmid\ttitle\n101\ta\n101\tb\n";
        match parse_tsv(input.as_bytes()) {
            Err(CorpusError::DuplicatePmid(p)) => assert_eq!(p, "101"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn missing_pmid_column_is_a_schema_error() {
        let input = "id\ttitle\n1\ta\n";
        assert!(matches!(parse_tsv(input.as_bytes()), Err(CorpusError::Schema(_))));
        assert!(matches!(parse_tsv(&b""[..]), Err(CorpusError::Schema(_))));
    }

    #[test]
    fn non_numeric_fields_report_line_numbers() {
        let input = "pmid\tx\tcitation_count\n1\t0.1\t3\n2\tabc\t1\n";
        match parse_tsv(input.as_bytes()) {
            Err(CorpusError::Row { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "x");
            }
            other => panic!("expected row error, got {other:?}"),
        }
        let input = "pmid\tcitation_count\n1\t-4\n";
        assert!(matches!(
            parse_tsv(input.as_bytes()),
            Err(CorpusError::Row { line: 2, .. })
        ));
    }

    #[test]
    fn extra_columns_are_preserved_in_order() {
        let input = "pmid\tzeta\ttitle\talpha\n1\tz1\tT\ta1\n";
        let c = parse_tsv(input.as_bytes()).unwrap();
        assert_eq!(c.extra_columns(), ["zeta", "alpha"]);
        let mut out = Vec::new();
        write_tsv(&c, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(&format!("{HEADER}\tzeta\talpha\n")));
        assert!(text.ends_with("\tz1\ta1\n"));
    }

    #[test]
    fn canonical_file_round_trips_byte_for_byte() {
        let input = format!(
            "{HEADER}\n101\t2020\tJ1\tT\tA\tcancer;mice\t0.5\t-1.2\t10\t1.5\t3\n\
             102\t2019-03-07\tJ2\tTitle two\t\t\t\t\t0\t0\t\n"
        );
        let c = parse_tsv(input.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_tsv(&c, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), input);
    }

    fn arb_article() -> impl Strategy<Value = Article> {
        (
            "[0-9]{1,8}",
            proptest::option::of((1900i32..2025, proptest::option::of((1u8..=12, 1u8..=28)))),
            "[A-Za-z ]{0,12}",
            "[A-Za-z ,.]{0,20}",
            proptest::collection::vec("[A-Za-z][A-Za-z ]{0,6}[A-Za-z]", 0..4),
            proptest::option::of((-1e6f64..1e6, -1e6f64..1e6)),
            0u64..100_000,
            0f64..50.0,
            proptest::option::of("[0-9]{1,3}"),
        )
            .prop_map(|(pmid, date, journal, title, mesh, xy, cc, size, color)| Article {
                pmid,
                date: date.map(|(year, md)| PubDate { year, month_day: md }),
                journal,
                title,
                abstract_text: String::new(),
                mesh_terms: mesh,
                x: xy.map(|p| p.0),
                y: xy.map(|p| p.1),
                citation_count: cc,
                size,
                color,
                extra: BTreeMap::new(),
            })
    }

    proptest! {
        #[test]
        fn write_then_parse_reproduces_articles(articles in proptest::collection::vec(arb_article(), 0..20)) {
            let mut unique = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for a in articles {
                if seen.insert(a.pmid.clone()) {
                    unique.push(a);
                }
            }
            let corpus = Corpus::new(unique).unwrap();
            let mut out = Vec::new();
            write_tsv(&corpus, &mut out).unwrap();
            let back = parse_tsv(out.as_slice()).unwrap();
            prop_assert_eq!(back.articles(), corpus.articles());
            let mut again = Vec::new();
            write_tsv(&back, &mut again).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
