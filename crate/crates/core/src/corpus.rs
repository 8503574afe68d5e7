//! Document corpus ingestion.
//!
//! Two input shapes are supported: a directory of per-image XML metadata
//! files, and a JSON-lines file with `{"doc_id", "text"}` records. XML
//! fields of interest (file name, English text section, comment) are located
//! by configurable element paths, because metadata layouts differ between
//! collections. Extracted text is a pure function of the raw fields, so
//! re-extraction is always safe.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub raw_fields: BTreeMap<String, String>,
    pub extracted_text: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: BTreeMap<String, Document>,
}

impl Corpus {
    pub fn insert(&mut self, doc: Document) -> Result<()> {
        if self.documents.contains_key(&doc.doc_id) {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        self.documents.insert(doc.doc_id.clone(), doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.documents.contains_key(doc_id)
    }

    /// Documents in doc_id order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }
}

/// Element paths locating the three fields of interest in a metadata file.
///
/// Path syntax: `/`-separated element names relative to the root element.
/// A segment may filter on an attribute (`text[@lang=en]`), and the final
/// segment may name an attribute instead of an element (`image/@file`).
#[derive(Debug, Clone)]
pub struct XmlMapping {
    pub name_path: String,
    pub english_path: String,
    pub comment_path: String,
}

impl Default for XmlMapping {
    fn default() -> Self {
        XmlMapping {
            name_path: "name".into(),
            english_path: "text[@lang=en]".into(),
            comment_path: "comment".into(),
        }
    }
}

struct Segment {
    name: String,
    attr_filter: Option<(String, String)>,
}

struct ParsedPath {
    segments: Vec<Segment>,
    attr: Option<String>,
}

fn parse_path(path: &str) -> Result<ParsedPath> {
    let mut segments = Vec::new();
    let mut attr = None;
    let parts: Vec<&str> = path.split('/').collect();
    for (idx, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::BadPath {
                path: path.into(),
                msg: "empty segment".into(),
            });
        }
        if let Some(attr_name) = part.strip_prefix('@') {
            if idx != parts.len() - 1 {
                return Err(Error::BadPath {
                    path: path.into(),
                    msg: "attribute segment must come last".into(),
                });
            }
            attr = Some(attr_name.to_string());
            continue;
        }
        let (name, filter) = match part.split_once("[@") {
            Some((name, rest)) => {
                let rest = rest.strip_suffix(']').ok_or_else(|| Error::BadPath {
                    path: path.into(),
                    msg: "unterminated attribute filter".into(),
                })?;
                let (k, v) = rest.split_once('=').ok_or_else(|| Error::BadPath {
                    path: path.into(),
                    msg: "attribute filter needs key=value".into(),
                })?;
                (name, Some((k.to_string(), v.to_string())))
            }
            None => (*part, None),
        };
        segments.push(Segment {
            name: name.to_string(),
            attr_filter: filter,
        });
    }
    if segments.is_empty() && attr.is_none() {
        return Err(Error::BadPath {
            path: path.into(),
            msg: "empty path".into(),
        });
    }
    Ok(ParsedPath { segments, attr })
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn resolve_path<'a>(root: roxmltree::Node<'a, 'a>, path: &ParsedPath) -> Option<String> {
    let mut node = root;
    for seg in &path.segments {
        node = node.children().find(|c| {
            c.is_element()
                && c.tag_name().name() == seg.name
                && seg
                    .attr_filter
                    .as_ref()
                    .map_or(true, |(k, v)| c.attribute(k.as_str()) == Some(v.as_str()))
        })?;
    }
    let value = match &path.attr {
        Some(attr) => node.attribute(attr.as_str())?.to_string(),
        None => {
            let mut text = String::new();
            for d in node.descendants() {
                if d.is_text() {
                    text.push_str(d.text().unwrap_or(""));
                    text.push(' ');
                }
            }
            collapse_ws(&text)
        }
    };
    if value.is_empty() {
        None
    } else {
        Some(value)
    }
}

/// Pulls the mapped fields out of one metadata file. Absent fields are
/// simply missing from the result; malformed XML is an error carrying the
/// parser position.
pub fn parse_metadata_xml(
    content: &str,
    mapping: &XmlMapping,
    source: &str,
) -> Result<BTreeMap<String, String>> {
    let doc = roxmltree::Document::parse(content).map_err(|e| Error::Xml {
        path: source.into(),
        pos: e.pos().to_string(),
        msg: e.to_string(),
    })?;
    let root = doc.root_element();
    let mut fields = BTreeMap::new();
    for (key, path) in [
        ("name", &mapping.name_path),
        ("english", &mapping.english_path),
        ("comment", &mapping.comment_path),
    ] {
        let parsed = parse_path(path)?;
        if let Some(value) = resolve_path(root, &parsed) {
            fields.insert(key.to_string(), value);
        }
    }
    Ok(fields)
}

/// Text a document contributes to indexing and linking.
///
/// JSON-line documents carry their text verbatim under the "text" field.
/// Metadata documents concatenate: the file name with its final extension
/// dropped and `_`, `-`, `.` turned into spaces, then the English section,
/// then the comment; absent fields are skipped.
pub fn extract_text(doc: &Document) -> String {
    if let Some(text) = doc.raw_fields.get("text") {
        return text.clone();
    }
    let mut parts = Vec::new();
    if let Some(name) = doc.raw_fields.get("name") {
        let stem = match name.rsplit_once('.') {
            Some((stem, _ext)) => stem,
            None => name.as_str(),
        };
        let spaced: String = stem
            .chars()
            .map(|c| if matches!(c, '_' | '-' | '.') { ' ' } else { c })
            .collect();
        let collapsed = collapse_ws(&spaced);
        if !collapsed.is_empty() {
            parts.push(collapsed);
        }
    }
    for key in ["english", "comment"] {
        if let Some(v) = doc.raw_fields.get(key) {
            parts.push(collapse_ws(v));
        }
    }
    parts.join(" ")
}

/// Result of a corpus load: the documents that parsed, plus one warning per
/// file that failed. Individual file failures do not abort the load.
#[derive(Debug)]
pub struct CorpusLoad {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct DocJson {
    doc_id: String,
    text: String,
}

/// Loads a corpus from either a directory of XML metadata files (doc_id =
/// file stem) or a JSON-lines file of `{"doc_id", "text"}` records.
pub fn load_corpus(path: &Path, mapping: &XmlMapping) -> Result<CorpusLoad> {
    let mut corpus = Corpus::default();
    let mut warnings = Vec::new();

    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("xml"))
            .collect();
        entries.sort();
        if entries.is_empty() {
            warnings.push(format!("{}: no xml files found", path.display()));
        }
        for file in entries {
            let source = file.display().to_string();
            let doc_id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let content = match fs::read_to_string(&file) {
                Ok(c) => c,
                Err(e) => {
                    warnings.push(format!("{source}: {e}"));
                    continue;
                }
            };
            match parse_metadata_xml(&content, mapping, &source) {
                Ok(raw_fields) => {
                    let mut doc = Document {
                        doc_id,
                        raw_fields,
                        extracted_text: String::new(),
                    };
                    doc.extracted_text = extract_text(&doc);
                    corpus.insert(doc)?;
                }
                Err(e) => warnings.push(e.to_string()),
            }
        }
    } else {
        let file = fs::File::open(path)?;
        let reader = BufReader::new(file);
        let display = path.display().to_string();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DocJson = serde_json::from_str(&line).map_err(|e| Error::Json {
                path: display.clone(),
                line: idx + 1,
                msg: e.to_string(),
            })?;
            let mut raw_fields = BTreeMap::new();
            raw_fields.insert("text".to_string(), rec.text);
            let mut doc = Document {
                doc_id: rec.doc_id,
                raw_fields,
                extracted_text: String::new(),
            };
            doc.extracted_text = extract_text(&doc);
            corpus.insert(doc)?;
        }
        if corpus.is_empty() {
            warnings.push(format!("{display}: no documents found"));
        }
    }

    Ok(CorpusLoad { corpus, warnings })
}

/// Writes the corpus as `{"doc_id", "text"}` JSON lines, doc_id order. The
/// output is itself a valid corpus input, which is what makes pipeline
/// stages resumable from this artifact.
pub fn write_extracted_jsonl<W: Write>(corpus: &Corpus, w: &mut W) -> Result<()> {
    for doc in corpus.documents() {
        let record = serde_json::json!({
            "doc_id": doc.doc_id,
            "text": doc.extracted_text,
        });
        writeln!(w, "{record}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GONDOLA_XML: &str = r#"<image>
  <name>gondola_01.jpg</name>
  <text lang="en">a gondola on the grand canal</text>
  <text lang="de">eine gondel auf dem canal grande</text>
  <text lang="fr">une gondole sur le grand canal</text>
  <comment>venice italy</comment>
</image>"#;

    #[test]
    fn parses_the_three_mapped_fields() {
        let mapping = XmlMapping::default();
        let fields = parse_metadata_xml(GONDOLA_XML, &mapping, "gondola_01.xml").unwrap();
        assert_eq!(fields.len(), 3);
        assert_eq!(fields["name"], "gondola_01.jpg");
        assert_eq!(fields["english"], "a gondola on the grand canal");
        assert_eq!(fields["comment"], "venice italy");
    }

    #[test]
    fn absent_fields_stay_absent() {
        let mapping = XmlMapping::default();
        let xml = "<image><name>piazza_02.png</name></image>";
        let fields = parse_metadata_xml(xml, &mapping, "piazza_02.xml").unwrap();
        assert_eq!(fields.len(), 1);
        assert_eq!(fields["name"], "piazza_02.png");
    }

    #[test]
    fn malformed_xml_reports_position() {
        let mapping = XmlMapping::default();
        let err = parse_metadata_xml("<image><name>x</image>", &mapping, "bad.xml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.xml"), "missing path in: {msg}");
        assert!(msg.contains("malformed XML"), "missing kind in: {msg}");
    }

    #[test]
    fn extract_builds_name_english_comment() {
        let mapping = XmlMapping::default();
        let raw_fields = parse_metadata_xml(GONDOLA_XML, &mapping, "gondola_01.xml").unwrap();
        let doc = Document {
            doc_id: "gondola_01".into(),
            raw_fields,
            extracted_text: String::new(),
        };
        assert_eq!(
            extract_text(&doc),
            "gondola 01 a gondola on the grand canal venice italy"
        );
    }

    #[test]
    fn extract_handles_name_only_and_dots() {
        let mut raw_fields = BTreeMap::new();
        raw_fields.insert("name".to_string(), "st-marks.square.v2.png".to_string());
        let doc = Document {
            doc_id: "x".into(),
            raw_fields,
            extracted_text: String::new(),
        };
        assert_eq!(extract_text(&doc), "st marks square v2");
    }

    #[test]
    fn extract_passes_jsonl_text_through() {
        let mut raw_fields = BTreeMap::new();
        raw_fields.insert("text".to_string(), "verbatim body".to_string());
        let doc = Document {
            doc_id: "d1".into(),
            raw_fields,
            extracted_text: String::new(),
        };
        assert_eq!(extract_text(&doc), "verbatim body");
    }

    #[test]
    fn loads_xml_directory_with_partial_failures() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("gondola_01.xml"), GONDOLA_XML).unwrap();
        fs::write(
            dir.path().join("piazza_02.xml"),
            "<image><name>piazza_02.png</name></image>",
        )
        .unwrap();
        fs::write(dir.path().join("broken.xml"), "<image><name>oops").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

        let load = load_corpus(dir.path(), &XmlMapping::default()).unwrap();
        assert_eq!(load.corpus.len(), 2);
        assert_eq!(load.warnings.len(), 1);
        assert!(load.warnings[0].contains("broken.xml"));
        let doc = load.corpus.get("gondola_01").unwrap();
        assert_eq!(
            doc.extracted_text,
            "gondola 01 a gondola on the grand canal venice italy"
        );
    }

    #[test]
    fn empty_directory_warns() {
        let dir = tempfile::tempdir().unwrap();
        let load = load_corpus(dir.path(), &XmlMapping::default()).unwrap();
        assert!(load.corpus.is_empty());
        assert_eq!(load.warnings.len(), 1);
    }

    #[test]
    fn loads_jsonl_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"doc_id": "d1", "text": "gondola ride"}}"#).unwrap();
        writeln!(f, r#"{{"doc_id": "d2", "text": "murano glass"}}"#).unwrap();
        let load = load_corpus(&path, &XmlMapping::default()).unwrap();
        assert_eq!(load.corpus.len(), 2);
        assert_eq!(load.corpus.get("d1").unwrap().extracted_text, "gondola ride");
    }

    #[test]
    fn duplicate_doc_id_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"doc_id": "d1", "text": "a"}}"#).unwrap();
        writeln!(f, r#"{{"doc_id": "d1", "text": "b"}}"#).unwrap();
        let err = load_corpus(&path, &XmlMapping::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(_)));
    }

    #[test]
    fn round_trips_through_extracted_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"doc_id": "d1", "text": "gondola ride"}}"#).unwrap();
        let load = load_corpus(&path, &XmlMapping::default()).unwrap();

        let out_path = dir.path().join("extracted.jsonl");
        let mut out = fs::File::create(&out_path).unwrap();
        write_extracted_jsonl(&load.corpus, &mut out).unwrap();
        out.flush().unwrap();

        let reload = load_corpus(&out_path, &XmlMapping::default()).unwrap();
        assert_eq!(reload.corpus.len(), 1);
        assert_eq!(
            reload.corpus.get("d1").unwrap().extracted_text,
            "gondola ride"
        );
    }

    #[test]
    fn attribute_paths_resolve() {
        let mapping = XmlMapping {
            name_path: "meta/@file".into(),
            english_path: "text[@lang=en]".into(),
            comment_path: "comment".into(),
        };
        let xml = r#"<image><meta file="x_1.jpg"/><text lang="en">hi</text></image>"#;
        let fields = parse_metadata_xml(xml, &mapping, "x.xml").unwrap();
        assert_eq!(fields["name"], "x_1.jpg");
        assert_eq!(fields["english"], "hi");
    }
}
