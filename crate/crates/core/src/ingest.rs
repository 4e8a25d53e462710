//! Business and reaction records: parsing and cleaning.
//!
//! Both record kinds can be read from CSV (header required) or JSON lines
//! with the same keys:
//!
//! * businesses: `id,name,lat,lon,category,checkins,fans,rating`
//! * reactions: `user_id,business_id,reaction_type`
//!
//! Records with a malformed mandatory field are rejected and reported as a
//! [`Diagnostic`]; malformed optional fields are dropped to `None`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Textual encoding of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Picks a format from a file extension; anything but `.jsonl`/`.ndjson` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
                Format::Jsonl
            }
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::Usage(format!(
                "unknown input format `{other}` (expected csv or jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Business {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    /// Slash-delimited taxonomy path, e.g. `Business/Food & Beverage/Restaurant`.
    pub raw_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkins: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fans: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_rating: Option<f64>,
}

impl Business {
    pub fn new(id: impl Into<String>, name: impl Into<String>, raw_category: impl Into<String>) -> Self {
        Business {
            id: id.into(),
            name: name.into(),
            latitude: None,
            longitude: None,
            raw_category: raw_category.into(),
            checkins: None,
            fans: None,
            avg_rating: None,
        }
    }

    pub fn with_location(mut self, latitude: f64, longitude: f64) -> Self {
        self.latitude = Some(latitude);
        self.longitude = Some(longitude);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReactionType {
    Like,
    Angry,
    Wow,
    Sad,
    Thankful,
}

impl ReactionType {
    pub const ALL: [ReactionType; 5] = [
        ReactionType::Like,
        ReactionType::Angry,
        ReactionType::Wow,
        ReactionType::Sad,
        ReactionType::Thankful,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReactionType::Like => "Like",
            ReactionType::Angry => "Angry",
            ReactionType::Wow => "Wow",
            ReactionType::Sad => "Sad",
            ReactionType::Thankful => "Thankful",
        }
    }
}

impl fmt::Display for ReactionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReactionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ReactionType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown reaction type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reaction {
    pub user_id: String,
    pub business_id: String,
    pub reaction_type: ReactionType,
}

impl Reaction {
    pub fn new(user: impl Into<String>, business: impl Into<String>, reaction_type: ReactionType) -> Self {
        Reaction {
            user_id: user.into(),
            business_id: business.into(),
            reaction_type,
        }
    }
}

/// The reaction multiset together with its two set-valued indexes.
///
/// `user_index` and `business_index` are transposes of the same
/// (user, business) relation; each pair appears once no matter how many
/// reactions were recorded for it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Reaction>", into = "Vec<Reaction>")]
pub struct ReactionDataset {
    reactions: Vec<Reaction>,
    user_index: BTreeMap<String, BTreeSet<String>>,
    business_index: BTreeMap<String, BTreeSet<String>>,
}

impl From<Vec<Reaction>> for ReactionDataset {
    fn from(reactions: Vec<Reaction>) -> Self {
        ReactionDataset::from_reactions(reactions)
    }
}

impl From<ReactionDataset> for Vec<Reaction> {
    fn from(ds: ReactionDataset) -> Self {
        ds.reactions
    }
}

impl FromIterator<Reaction> for ReactionDataset {
    fn from_iter<I: IntoIterator<Item = Reaction>>(iter: I) -> Self {
        ReactionDataset::from_reactions(iter.into_iter().collect())
    }
}

impl ReactionDataset {
    pub fn from_reactions(reactions: Vec<Reaction>) -> Self {
        let mut user_index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut business_index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in &reactions {
            user_index
                .entry(r.user_id.clone())
                .or_default()
                .insert(r.business_id.clone());
            business_index
                .entry(r.business_id.clone())
                .or_default()
                .insert(r.user_id.clone());
        }
        ReactionDataset {
            reactions,
            user_index,
            business_index,
        }
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// user id → businesses the user reacted to.
    pub fn user_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.user_index
    }

    /// business id → users who reacted to it.
    pub fn business_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.business_index
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// Keeps the reactions matching `keep`, rebuilding both indexes.
    pub fn retain(&self, mut keep: impl FnMut(&Reaction) -> bool) -> ReactionDataset {
        self.reactions.iter().filter(|r| keep(r)).cloned().collect()
    }
}

/// A rejected input record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based record number (data rows for CSV, lines for JSONL).
    pub record: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {}: {}", self.record, self.message)
    }
}

/// Parsed records plus the diagnostics of everything that was rejected.
#[derive(Debug, Clone, Default)]
pub struct Parsed<T> {
    pub records: T,
    pub rejected: Vec<Diagnostic>,
}

const BUSINESS_COLUMNS: [&str; 8] = ["id", "name", "lat", "lon", "category", "checkins", "fans", "rating"];
const REACTION_COLUMNS: [&str; 3] = ["user_id", "business_id", "reaction_type"];

/// Field lookup shared by the CSV and JSONL readers.
trait Fields {
    fn text(&self, key: &str) -> Option<String>;
}

struct CsvRow<'a> {
    columns: &'a [usize],
    record: &'a csv::StringRecord,
    names: &'a [&'a str],
}

impl Fields for CsvRow<'_> {
    fn text(&self, key: &str) -> Option<String> {
        let pos = self.names.iter().position(|n| *n == key)?;
        self.record.get(self.columns[pos]).map(|s| s.trim().to_owned())
    }
}

impl Fields for serde_json::Map<String, Value> {
    fn text(&self, key: &str) -> Option<String> {
        match self.get(key)? {
            Value::Null => None,
            Value::String(s) => Some(s.trim().to_owned()),
            other => Some(other.to_string()),
        }
    }
}

fn non_empty(fields: &dyn Fields, key: &str) -> Option<String> {
    fields.text(key).filter(|s| !s.is_empty())
}

fn optional_f64(fields: &dyn Fields, key: &str, lo: f64, hi: f64) -> Option<f64> {
    non_empty(fields, key)?
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && (lo..=hi).contains(v))
}

fn optional_count(fields: &dyn Fields, key: &str) -> Option<u64> {
    let text = non_empty(fields, key)?;
    text.parse::<u64>().ok().or_else(|| {
        // Counts exported as floats ("38627.0") are common.
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0 && v.fract() == 0.0 && *v <= u64::MAX as f64)
            .map(|v| v as u64)
    })
}

fn business_from(fields: &dyn Fields) -> std::result::Result<Business, String> {
    let id = non_empty(fields, "id").ok_or("missing business id")?;
    Ok(Business {
        id,
        name: fields.text("name").unwrap_or_default(),
        latitude: optional_f64(fields, "lat", -90.0, 90.0),
        longitude: optional_f64(fields, "lon", -180.0, 180.0),
        raw_category: fields.text("category").unwrap_or_default(),
        checkins: optional_count(fields, "checkins"),
        fans: optional_count(fields, "fans"),
        avg_rating: optional_f64(fields, "rating", 0.0, 5.0),
    })
}

fn reaction_from(fields: &dyn Fields) -> std::result::Result<Reaction, String> {
    let user_id = non_empty(fields, "user_id").ok_or("missing user_id")?;
    let business_id = non_empty(fields, "business_id").ok_or("missing business_id")?;
    let raw_type = non_empty(fields, "reaction_type").ok_or("missing reaction_type")?;
    let reaction_type = raw_type.parse::<ReactionType>().map_err(|e| e.to_string())?;
    Ok(Reaction {
        user_id,
        business_id,
        reaction_type,
    })
}

fn read_records<T>(
    source: impl Read,
    format: Format,
    columns: &[&str],
    build: impl Fn(&dyn Fields) -> std::result::Result<T, String>,
) -> Result<Parsed<Vec<T>>> {
    let mut out = Parsed {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    match format {
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .trim(csv::Trim::Headers)
                .from_reader(source);
            let headers = reader
                .headers()
                .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
                .clone();
            let positions = columns
                .iter()
                .map(|c| {
                    headers
                        .iter()
                        .position(|h| h == *c)
                        .ok_or_else(|| Error::Input(format!("header is missing column `{c}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut record = csv::StringRecord::new();
            let mut n = 0;
            loop {
                match reader.read_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {
                        n += 1;
                        let row = CsvRow {
                            columns: &positions,
                            record: &record,
                            names: columns,
                        };
                        match build(&row) {
                            Ok(t) => out.records.push(t),
                            Err(message) => out.rejected.push(Diagnostic { record: n, message }),
                        }
                    }
                    Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                        return Err(Error::Input(format!("invalid UTF-8: {e}")));
                    }
                    Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
                    Err(e) => {
                        n += 1;
                        out.rejected.push(Diagnostic {
                            record: n,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
        Format::Jsonl => {
            for (i, line) in BufReader::new(source).lines().enumerate() {
                let line = line.map_err(|e| Error::Input(format!("line {}: {e}", i + 1)))?;
                if line.trim().is_empty() {
                    continue;
                }
                let result = match serde_json::from_str::<Value>(&line) {
                    Ok(Value::Object(map)) => build(&map),
                    Ok(_) => Err("expected a JSON object".to_owned()),
                    Err(e) => Err(format!("malformed JSON: {e}")),
                };
                match result {
                    Ok(t) => out.records.push(t),
                    Err(message) => out.rejected.push(Diagnostic {
                        record: i + 1,
                        message,
                    }),
                }
            }
        }
    }
    Ok(out)
}

/// Parses business records in input order.
pub fn parse_businesses(source: impl Read, format: Format) -> Result<Parsed<Vec<Business>>> {
    read_records(source, format, &BUSINESS_COLUMNS, business_from)
}

/// Parses reaction triples and builds the user and business indexes.
pub fn parse_reactions(source: impl Read, format: Format) -> Result<Parsed<ReactionDataset>> {
    let parsed = read_records(source, format, &REACTION_COLUMNS, reaction_from)?;
    Ok(Parsed {
        records: ReactionDataset::from_reactions(parsed.records),
        rejected: parsed.rejected,
    })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn read_businesses(path: &Path) -> Result<Parsed<Vec<Business>>> {
    parse_businesses(open(path)?, Format::from_path(path))
}

pub fn read_reactions(path: &Path) -> Result<Parsed<ReactionDataset>> {
    parse_reactions(open(path)?, Format::from_path(path))
}

/// Parses a blocklist: one id per line, `#` starts a comment.
pub fn parse_blocklist(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|id| !id.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn read_blocklist(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_blocklist(&text))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes businesses as CSV with the header [`read_businesses`] expects.
pub fn write_businesses_csv(sink: impl std::io::Write, businesses: &[Business]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(BUSINESS_COLUMNS)?;
    for b in businesses {
        w.write_record([
            b.id.clone(),
            b.name.clone(),
            opt(b.latitude),
            opt(b.longitude),
            b.raw_category.clone(),
            opt(b.checkins),
            opt(b.fans),
            opt(b.avg_rating),
        ])?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write CSV: {e}")))
}

pub fn write_reactions_csv(sink: impl std::io::Write, reactions: &ReactionDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(REACTION_COLUMNS)?;
    for r in reactions.reactions() {
        w.write_record([r.user_id.as_str(), r.business_id.as_str(), r.reaction_type.as_str()])?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write CSV: {e}")))
}

/// Counts of what [`clean`] removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub duplicates: usize,
    pub inconsistent: usize,
    pub non_business: usize,
    /// Reactions attached to blocklisted pages.
    pub non_business_reactions: usize,
    /// Reactions referencing ids that are not in the cleaned business list
    /// for any other reason (inconsistent or never listed).
    pub orphan_reactions: usize,
}

impl CleaningReport {
    pub fn reactions_removed(&self) -> usize {
        self.non_business_reactions + self.orphan_reactions
    }
}

fn is_inconsistent(b: &Business) -> bool {
    b.name.trim().is_empty() || (b.latitude.is_none() && b.longitude.is_none())
}

/// Removes duplicate ids (first occurrence wins), inconsistent records
/// (empty name or no coordinates at all) and blocklisted pages, then drops
/// every reaction that no longer points at a retained business.
pub fn clean(
    businesses: Vec<Business>,
    reactions: &ReactionDataset,
    non_business_ids: &BTreeSet<String>,
) -> (Vec<Business>, ReactionDataset, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(businesses.len());
    for b in businesses {
        if !seen.insert(b.id.clone()) {
            report.duplicates += 1;
        } else if is_inconsistent(&b) {
            report.inconsistent += 1;
        } else if non_business_ids.contains(&b.id) {
            report.non_business += 1;
        } else {
            kept.push(b);
        }
    }

    let retained: HashSet<&str> = kept.iter().map(|b| b.id.as_str()).collect();
    let cleaned = reactions.retain(|r| {
        if retained.contains(r.business_id.as_str()) {
            true
        } else {
            if non_business_ids.contains(&r.business_id) {
                report.non_business_reactions += 1;
            } else {
                report.orphan_reactions += 1;
            }
            false
        }
    });
    (kept, cleaned, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,name,lat,lon,category,checkins,fans,rating\n";

    #[test]
    fn csv_writers_round_trip() {
        let mut b = Business::new("p1", "Joe's, \"Diner\"", "Businesses > Food & Beverage").with_location(1.5, -2.0);
        b.fans = Some(12);
        let businesses = vec![b, Business::new("p2", "Bare", "Community")];
        let mut out = Vec::new();
        write_businesses_csv(&mut out, &businesses).unwrap();
        let back = parse_businesses(out.as_slice(), Format::Csv).unwrap();
        assert!(back.rejected.is_empty());
        assert_eq!(back.records, businesses);

        let ds = ReactionDataset::from_reactions(vec![
            Reaction::new("u1", "p1", ReactionType::Like),
            Reaction::new("u2", "p2", ReactionType::Thankful),
        ]);
        let mut out = Vec::new();
        write_reactions_csv(&mut out, &ds).unwrap();
        assert_eq!(parse_reactions(out.as_slice(), Format::Csv).unwrap().records, ds);
    }

    #[test]
    fn parses_table_row() {
        let csv = format!(
            "{HEADER}166765230043005,Rubiane Frutos do Mar,-25.516122,-49.231571,Seafood Restaurant,38627,15532,4.6\n"
        );
        let parsed = parse_businesses(csv.as_bytes(), Format::Csv).unwrap();
        assert!(parsed.rejected.is_empty());
        let b = &parsed.records[0];
        assert_eq!(b.id, "166765230043005");
        assert_eq!(b.name, "Rubiane Frutos do Mar");
        assert_eq!(b.latitude, Some(-25.516122));
        assert_eq!(b.longitude, Some(-49.231571));
        assert_eq!(b.raw_category, "Seafood Restaurant");
        assert_eq!(b.checkins, Some(38627));
        assert_eq!(b.fans, Some(15532));
        assert_eq!(b.avg_rating, Some(4.6));
    }

    #[test]
    fn empty_file_with_header() {
        let parsed = parse_businesses(HEADER.as_bytes(), Format::Csv).unwrap();
        assert!(parsed.records.is_empty());
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn blank_rating_is_absent() {
        let csv = format!("{HEADER}b1,Cafe,1.0,2.0,Business/Food & Beverage,10,5,\n");
        let parsed = parse_businesses(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(parsed.records[0].avg_rating, None);
        assert_eq!(parsed.records[0].fans, Some(5));
    }

    #[test]
    fn malformed_optional_fields_become_absent() {
        let csv = format!("{HEADER}b1,Cafe,north,2.0,X,-3,lots,9.5\n");
        let b = &parse_businesses(csv.as_bytes(), Format::Csv).unwrap().records[0];
        assert_eq!(b.latitude, None);
        assert_eq!(b.longitude, Some(2.0));
        assert_eq!(b.checkins, None);
        assert_eq!(b.fans, None);
        assert_eq!(b.avg_rating, None);
    }

    #[test]
    fn missing_id_is_rejected() {
        let csv = format!("{HEADER},Nameless,1,2,X,,,\nb2,Ok,1,2,X,,,\n");
        let parsed = parse_businesses(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].record, 1);
    }

    #[test]
    fn missing_header_column_is_an_input_error() {
        let err = parse_businesses("id,name\nb1,x\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn invalid_utf8_is_an_input_error() {
        let mut bytes = HEADER.as_bytes().to_vec();
        bytes.extend_from_slice(b"b1,\xff\xfe,1,2,X,,,\n");
        assert!(matches!(
            parse_businesses(&bytes[..], Format::Csv),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn unknown_format_tag() {
        assert!(matches!("xml".parse::<Format>(), Err(Error::Usage(_))));
        assert_eq!("JSONL".parse::<Format>().unwrap(), Format::Jsonl);
    }

    #[test]
    fn jsonl_businesses() {
        let src = r#"{"id":"b1","name":"Cafe","lat":-25.4,"lon":-49.2,"category":"Business/Food & Beverage","checkins":3,"fans":null,"rating":"4.5"}

{"id":2,"name":"Numeric id","lat":1,"lon":1,"category":"Media"}
not json
"#;
        let parsed = parse_businesses(src.as_bytes(), Format::Jsonl).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0].avg_rating, Some(4.5));
        assert_eq!(parsed.records[0].fans, None);
        assert_eq!(parsed.records[1].id, "2");
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].record, 4);
    }

    #[test]
    fn reaction_indexes_are_transposes() {
        let csv = "user_id,business_id,reaction_type\nu1,b1,Like\nu1,b2,Like\nu2,b1,Wow\n";
        let ds = parse_reactions(csv.as_bytes(), Format::Csv).unwrap().records;
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(ds.user_index()["u1"], set(&["b1", "b2"]));
        assert_eq!(ds.user_index()["u2"], set(&["b1"]));
        assert_eq!(ds.business_index()["b1"], set(&["u1", "u2"]));
        assert_eq!(ds.business_index()["b2"], set(&["u1"]));
    }

    #[test]
    fn duplicate_pairs_collapse_in_indexes() {
        let csv = "user_id,business_id,reaction_type\nu1,b1,Like\nu1,b1,Like\nu2,b1,Like\n";
        let ds = parse_reactions(csv.as_bytes(), Format::Csv).unwrap().records;
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.business_index()["b1"].len(), 2);
        assert_eq!(ds.user_index()["u1"].len(), 1);
    }

    #[test]
    fn unknown_reaction_type_rejected() {
        let csv = "user_id,business_id,reaction_type\nu1,b1,Love\nu1,b2,like\nu2,b3,Haha\n";
        let parsed = parse_reactions(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejected.len(), 2);
    }

    #[test]
    fn empty_reaction_stream() {
        let parsed = parse_reactions("".as_bytes(), Format::Jsonl).unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn blocklist_comments() {
        let ids = parse_blocklist("# public places\nsquare-1\n  park-2 # city park\n\n");
        assert_eq!(ids.into_iter().collect::<Vec<_>>(), vec!["park-2", "square-1"]);
    }

    fn located(id: &str, name: &str) -> Business {
        Business::new(id, name, "Business/Food & Beverage").with_location(-25.4, -49.2)
    }

    #[test]
    fn clean_removes_duplicates() {
        let bs = vec![located("b1", "first"), located("b1", "second")];
        let (kept, _, report) = clean(bs, &ReactionDataset::default(), &BTreeSet::new());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].name, "first");
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn clean_removes_unnamed_and_unlocated() {
        let bs = vec![
            located("b1", "  "),
            Business::new("b2", "No place", "Media"),
            located("b3", "ok"),
        ];
        let (kept, _, report) = clean(bs, &ReactionDataset::default(), &BTreeSet::new());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.inconsistent, 2);
    }

    #[test]
    fn clean_removes_blocklisted_page_and_its_reactions() {
        let bs = vec![located("square", "Public square"), located("b1", "Cafe")];
        let mut rs: Vec<Reaction> = (0..10)
            .map(|i| Reaction::new(format!("u{i}"), "square", ReactionType::Like))
            .collect();
        rs.push(Reaction::new("u0", "b1", ReactionType::Like));
        let block = parse_blocklist("square\n");
        let (kept, ds, report) = clean(bs, &ReactionDataset::from_reactions(rs), &block);
        assert_eq!(kept.len(), 1);
        assert_eq!(report.non_business, 1);
        assert_eq!(report.non_business_reactions, 10);
        assert_eq!(ds.len(), 1);
        assert!(!ds.business_index().contains_key("square"));
    }
}
